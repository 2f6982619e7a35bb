import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from constxray import abel, metric
from constxray.metric import RadialProfile, RhoFunction

EUCLID = RadialProfile.named("euclidean")
GAUSS = RadialProfile.named("gaussian")


def test_herglotz_examples():
    assert metric.herglotz_check(EUCLID, 1001).passed
    assert metric.herglotz_check(GAUSS, 1001).passed
    res = metric.herglotz_check(RadialProfile.from_expression("2+cos(4*r)"), 1001)
    assert not res.passed
    assert 0.5 < res.witness <= 1.0 and res.value <= 0
    c = RadialProfile.from_expression("2+cos(4*r)")
    assert float(c.drho(1.0)) == pytest.approx(-0.93, abs=0.01)


def test_gaussian_rho_derivative_closed_form():
    r = np.linspace(0, 1, 11)
    assert np.allclose(GAUSS.drho(r), np.exp(r**2 / 2) * (1 + r**2), rtol=1e-14)


def test_invalid_profile():
    with pytest.raises(metric.InvalidProfileError):
        metric.herglotz_check(RadialProfile.from_expression("0.5-r"))


def test_turning_radius_examples():
    assert metric.turning_radius(RhoFunction(EUCLID), 0.5) == pytest.approx(0.5, abs=1e-12)
    p = 0.3 * np.exp(0.045)
    assert metric.turning_radius(RhoFunction(GAUSS), p) == pytest.approx(0.3, abs=1e-10)
    assert metric.turning_radius(RhoFunction(RadialProfile.constant(2.0)), 0.25) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ValueError):
        metric.turning_radius(RhoFunction(EUCLID), 1.5)


def test_turning_radius_on_non_monotone_rho():
    with pytest.raises(metric.HerglotzViolationError):
        metric.turning_radius(RhoFunction(RadialProfile.from_expression("2+cos(4*r)")), 0.2)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(0.01, 1.6), min_size=2, max_size=6, unique=True))
def test_turning_radius_monotone(ps):
    rho = RhoFunction(GAUSS)
    ps = sorted(ps)
    s = [metric.turning_radius(rho, p) for p in ps]
    assert all(a < b for a, b in zip(s, s[1:]))


def test_boundary_distance_examples():
    assert metric.boundary_distance(EUCLID, 0.75) == pytest.approx(0.25, abs=1e-14)
    assert metric.boundary_distance(GAUSS, 1.0) == 0.0
    assert metric.boundary_distance(RadialProfile.constant(2.0), 0.0) == pytest.approx(0.5, abs=1e-14)
    d = metric.boundary_distance(GAUSS, np.linspace(0, 1, 21))
    assert np.all(np.diff(d) < 0) and d[-1] == 0


def test_diameter_and_chord_lengths():
    tr = metric.trace_geodesic(EUCLID, (1.0, 0.0), (-1.0, 0.0))
    assert tr.exited and tr.length == pytest.approx(2.0, abs=1e-9)
    assert np.allclose(tr.position[-1], (-1.0, 0.0), atol=1e-9)
    tr = metric.trace_geodesic(EUCLID, *metric.chord_start(EUCLID, 0.6))
    assert tr.length == pytest.approx(1.6, abs=1e-9)


@pytest.mark.parametrize("s", [0.1, 0.4, 0.8])
def test_gaussian_trace_invariants(s):
    tr = metric.trace_geodesic(GAUSS, *metric.chord_start(GAUSS, s))
    assert tr.clairaut_drift <= 1e-8
    assert np.ptp(tr.speed) <= 1e-8
    p = tr.clairaut_constant
    assert tr.min_radius == pytest.approx(metric.turning_radius(RhoFunction(GAUSS), abs(p)), abs=1e-6)
    assert np.allclose(np.linalg.norm(tr.endpoints, axis=1), 1.0, atol=1e-9)


def test_trace_rejects_bad_input():
    with pytest.raises(ValueError):
        metric.trace_geodesic(EUCLID, (0.5, 0.0), (-1.0, 0.0))
    with pytest.raises(ValueError):
        metric.trace_geodesic(EUCLID, (1.0, 0.0), (1.0, 0.0))
    with pytest.raises(metric.NonExitError):
        metric.trace_geodesic(EUCLID, (1.0, 0.0), (-1.0, 0.0), max_length=0.5)


def test_integrate_along_trace_examples():
    f = abel.synthesize_constant(EUCLID).spatial()
    tr = metric.trace_geodesic(EUCLID, (1.0, 0.0), (-1.0, 0.0))
    assert metric.integrate_along_trace(tr, f) == pytest.approx(1.0, abs=1e-8)
    s = 0.35
    tr = metric.trace_geodesic(EUCLID, *metric.chord_start(EUCLID, s))
    one = metric.integrate_along_trace(tr, lambda x: np.ones(x.shape[:-1]))
    assert one == pytest.approx(2 * np.sqrt(1 - s**2), abs=1e-8)


def test_trace_agrees_with_abel_forward():
    f = abel.synthesize_constant(GAUSS)
    spatial = f.spatial()
    for s in np.linspace(0.05, 0.95, 7):
        tr = metric.trace_geodesic(GAUSS, *metric.chord_start(GAUSS, s))
        assert metric.integrate_along_trace(tr, spatial) == pytest.approx(1.0, abs=1e-4)


def test_trace_csv_columns():
    tr = metric.trace_geodesic(GAUSS, *metric.chord_start(GAUSS, 0.5), n_samples=11)
    lines = tr.to_csv().splitlines()
    assert lines[0] == "t,x,y,speed,clairaut"
    assert len(lines) == 12


def test_profile_sources(tmp_path):
    assert EUCLID.derivative_mismatch() < 1e-8
    assert GAUSS.derivative_mismatch() < 1e-8
    lens = RadialProfile.named("lens")
    assert lens.derivative_mismatch() < 1e-8
    poly = RadialProfile.polynomial([1.0, 0.0, -0.2])
    assert float(poly.dc(0.5)) == pytest.approx(-0.2)
    r = np.linspace(0, 1, 41)
    path = tmp_path / "c.csv"
    np.savetxt(path, np.column_stack([r, np.exp(-r**2 / 2)]), delimiter=",")
    spline = RadialProfile.from_csv(path)
    assert float(spline(0.33)) == pytest.approx(float(GAUSS(0.33)), abs=1e-6)
    with pytest.raises(KeyError):
        RadialProfile.named("nope")


def test_second_fundamental_form_of_boundary():
    assert metric.boundary_second_fundamental_form(EUCLID) == 1.0
    assert metric.boundary_second_fundamental_form(GAUSS) == pytest.approx(2 * np.exp(-0.5))

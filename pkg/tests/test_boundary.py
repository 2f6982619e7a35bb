import numpy as np
import pytest

from constxray import abel, boundary, metric, xray2d
from constxray.boundary import ImplicitBody
from constxray.metric import RadialProfile
from constxray.xray2d import SupportFunction

DEPTHS = np.geomspace(1e-2, 1e-6, 9)


def exact_circle_chord(R, h):
    return 2 * np.sqrt(2 * R * h - h * h)


def test_chord_probe_matches_exact_chord():
    circle = SupportFunction.disc(0, 0, 2.0)
    for h in (1e-2, 1e-4, 1e-6):
        probe = boundary.chord_probe(circle, (2.0, 0.0), (0.0, 1.0), h)
        assert probe.length == pytest.approx(exact_circle_chord(2.0, h), rel=1e-9)


def test_circle_second_fundamental_form():
    circle = SupportFunction.disc(0, 0, 2.0)
    raw = 8 * 1e-4 / boundary.chord_probe(circle, (0.0, 2.0), (1.0, 0.0), 1e-4).length ** 2
    assert raw == pytest.approx(0.5, rel=1e-2)
    est = boundary.estimate_II_chords(circle, (0.0, 2.0), (1.0, 0.0), DEPTHS)
    assert est.value == pytest.approx(0.5, rel=1e-6)


def test_sphere_and_ellipsoid_curvatures():
    sphere = ImplicitBody.sphere()
    assert boundary.estimate_II_chords(sphere, (0, 0, 1.0), (1.0, 0, 0), DEPTHS).value == pytest.approx(1, rel=1e-6)
    ell = ImplicitBody.ellipsoid((1, 1, 2))
    assert boundary.estimate_II_chords(ell, (1.0, 0, 0), (0, 0, 1.0), DEPTHS).value == pytest.approx(0.25, rel=1e-6)
    assert boundary.estimate_II_chords(ell, (1.0, 0, 0), (0, 1.0, 0), DEPTHS).value == pytest.approx(1.0, rel=1e-6)


def test_direction_independence_on_sphere():
    sphere = ImplicitBody.sphere((0.1, -0.2, 0.3), 1.5)
    rng = np.random.default_rng(3)
    x = sphere.boundary_point(rng.normal(size=3))
    basis = boundary.tangent_basis(sphere.inward_normal(x))
    values = []
    for phi in rng.uniform(0, 2 * np.pi, 16):
        v = np.cos(phi) * basis[0] + np.sin(phi) * basis[1]
        values.append(boundary.estimate_II_chords(sphere, x, v, DEPTHS[:6]).value)
    assert np.ptp(values) / np.mean(values) <= 1e-3
    assert np.mean(values) == pytest.approx(1 / 1.5, rel=1e-4)


def test_probe_errors():
    circle = SupportFunction.disc()
    with pytest.raises(boundary.ProbeError):
        boundary.chord_probe(circle, (1.0, 0.0), (0.0, 1.0), 0.5)
    with pytest.raises(boundary.ProbeError):
        boundary.chord_probe(circle, (1.0, 0.0), (1.0, 1.0), 1e-3)


def test_richardson_removes_known_terms():
    h = np.geomspace(1e-2, 1e-4, 5)
    vals = 3.0 + 2.0 * np.sqrt(h) - 5.0 * h
    assert boundary.richardson(h, vals) == pytest.approx(3.0, abs=1e-12)
    assert boundary.rate_exponent(h, 2 * h**0.5) == pytest.approx(0.5)


def test_short_geodesic_integral_on_unit_disc():
    disc = ImplicitBody.sphere((0.0, 0.0), 1.0)
    assert boundary.short_geodesic_integral(disc, (1.0, 0.0), (0.0, 1.0), 1e-4) == pytest.approx(
        np.pi * np.sqrt(2), rel=2e-2)


def test_short_geodesic_integral_circle_radius_two():
    circle = ImplicitBody.sphere((0.0, 0.0), 2.0)
    h = DEPTHS[:6]
    vals = [boundary.short_geodesic_integral(circle, (2.0, 0.0), (0.0, 1.0), d) for d in h]
    assert boundary.richardson(h, vals) == pytest.approx(2 * np.pi, rel=1e-6)


def test_sphere_consistency_between_chords_and_integral():
    sphere = ImplicitBody.sphere((0.0, 0.0, 0.0), 1.0)
    x, v = (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)
    second = boundary.estimate_II_chords(sphere, x, v, DEPTHS).value
    h = DEPTHS[:6]
    vals = [boundary.short_geodesic_integral(sphere, x, v, d) for d in h]
    assert boundary.richardson(h, vals) == pytest.approx(np.sqrt(2 * np.pi**2 / second), rel=1e-3)


@pytest.mark.parametrize("name", ["euclidean", "gaussian", "lens"])
def test_radial_metric_boundary_quantities(name):
    prof = RadialProfile.named(name)
    exact = metric.boundary_second_fundamental_form(prof)
    assert boundary.estimate_II_radial(prof).value == pytest.approx(exact, rel=1e-6)
    h = np.geomspace(1e-3, 1e-5, 4)
    vals = [boundary.short_geodesic_integral(prof, h=d) for d in h]
    assert boundary.richardson(h, vals) == pytest.approx(np.sqrt(2 * np.pi**2 / exact), rel=1e-3)


def test_ball_boundary_values():
    unit = boundary.BlowupDensity.from_ball(xray2d.ball_density(3))
    x = np.array([0.0, 0.6, 0.8])
    approach = [(1 - d) * x for d in np.geomspace(1e-2, 1e-6, 5)]
    assert boundary.boundary_value_w(unit, x, approach) == pytest.approx(1 / (np.pi * np.sqrt(2)), abs=1e-6)
    R = 2.5
    big = boundary.BlowupDensity.from_ball(xray2d.ball_density(2, radius=R))
    x = np.array([R, 0.0])
    approach = [(1 - d) * x for d in np.geomspace(1e-2, 1e-6, 5)]
    assert boundary.boundary_value_w(big, x, approach) == pytest.approx(np.sqrt(1 / (2 * np.pi**2 * R)), abs=1e-6)


def test_synthesized_density_boundary_value():
    prof = RadialProfile.named("gaussian")
    f = abel.synthesize_constant(prof).spatial()
    approach = boundary.radial_approach((1.0, 0.0), np.geomspace(1e-3, 1e-6, 5))
    w = boundary.boundary_value_w(f, (1.0, 0.0), approach)
    chords = boundary.estimate_II_radial(prof).value
    assert w == pytest.approx(boundary.predicted_w(chords), abs=1e-3)


def test_no_blowup_factorization():
    ball = xray2d.ball_density(2)
    steep = boundary.BlowupDensity(lambda x: ball(x) ** 2, ball.distance)
    approach = boundary.radial_approach((1.0, 0.0), np.geomspace(1e-2, 1e-6, 5))
    with pytest.raises(boundary.NoBlowupFactorizationError):
        boundary.boundary_value_w(steep, (1.0, 0.0), approach)


def test_slice_examples():
    ell = ImplicitBody.ellipsoid((1, 1, 2))
    res = boundary.slice_umbilicity_test(ell, (1.0, 0.0, 0.0))
    assert not res.umbilical and res.witness_ratio == pytest.approx(2.0, abs=1e-2)
    fit = res.fits[0][0]
    assert fit.minor <= fit.major
    assert fit.minor == pytest.approx(np.sqrt(2 * fit.depth - fit.depth**2), rel=1e-6)
    assert boundary.slice_umbilicity_test(ell, (0.0, 0.0, 2.0)).umbilical
    assert boundary.slice_umbilicity_test(ImplicitBody.sphere(), (0.0, 0.6, 0.8)).umbilical


def test_slice_ratio_matches_curvature_ratio():
    ell = ImplicitBody.ellipsoid((1.0, 1.5, 2.0))
    x = ell.boundary_point((1.0, 0.4, 0.3))
    basis = boundary.tangent_basis(ell.inward_normal(x))
    ii = []
    for phi in np.linspace(0, np.pi, 64, endpoint=False):
        v = np.cos(phi) * basis[0] + np.sin(phi) * basis[1]
        ii.append(boundary.estimate_II_chords(ell, x, v, DEPTHS[:6]).value)
    ratio = boundary.slice_umbilicity_test(ell, x, [tuple(basis)]).ratios[0]
    assert ratio == pytest.approx(np.sqrt(max(ii) / min(ii)), abs=1e-2)


def test_slice_errors_and_higher_dimension():
    with pytest.raises(boundary.SliceFitError):
        boundary.slice_fit(ImplicitBody.sphere(), (0, 0, 1.0), (1, 0, 0), (0, 1, 0), 3.0)
    ball4 = ImplicitBody.sphere((0.0, 0.0, 0.0, 0.0), 1.0)
    res = boundary.slice_umbilicity_test(ball4, (0.0, 0.0, 0.0, 1.0))
    assert res.umbilical and len(res.ratios) == 8


def test_convergence_record_csv():
    est = boundary.estimate_II_chords(SupportFunction.disc(), (1.0, 0.0), (0.0, 1.0), DEPTHS[:3])
    lines = est.to_csv().splitlines()
    assert lines[0] == "h,raw,extrapolated" and len(lines) == 4


def test_body_specs():
    assert ImplicitBody.from_spec("sphere 2").dim == 3
    assert ImplicitBody.from_spec("circle 2").dim == 2
    with pytest.raises(ValueError):
        ImplicitBody.from_spec("torus 1 2")

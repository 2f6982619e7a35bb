import numpy as np
import pytest

from constxray import abel, metric
from constxray.abel import RadialDensity
from constxray.metric import RadialProfile

EUCLID = RadialProfile.named("euclidean")
GAUSS = RadialProfile.named("gaussian")


def test_forward_chord_length():
    assert abel.abel_forward(lambda r: np.ones_like(r), EUCLID, 0.6) == pytest.approx(1.6, abs=1e-10)


def test_forward_of_ball_density():
    f = RadialDensity(lambda r: 1 / (np.pi * np.sqrt(1 - r**2)), EUCLID, blowup=True)
    assert abel.abel_forward(f, EUCLID, 0.3) == pytest.approx(1.0, abs=1e-10)


def test_forward_of_synthesized_gaussian_density():
    f = abel.synthesize_constant(GAUSS)
    s = np.linspace(0.1, 0.9, 9)
    assert np.max(np.abs(abel.abel_forward(f, GAUSS, s) - 1)) <= 1e-6


def test_forward_rejects_bad_radius_and_non_herglotz():
    with pytest.raises(ValueError):
        abel.abel_forward(lambda r: r, EUCLID, 1.0)
    with pytest.raises(metric.HerglotzViolationError):
        abel.abel_forward(lambda r: r, RadialProfile.from_expression("2+cos(4*r)"), 0.5)


def test_inverse_examples():
    A = lambda s: 2 * np.sqrt(1 - s**2)  # noqa: E731
    assert abel.abel_inverse(A, EUCLID, 0.5) == pytest.approx(1.0, abs=1e-4)
    got = abel.abel_inverse(lambda s: np.ones_like(s), EUCLID, 0.5)
    assert got == pytest.approx(1 / (np.pi * np.sqrt(0.75)), abs=1e-8)


def test_inverse_round_trip_gaussian():
    g = lambda r: 1 + r**2  # noqa: E731
    r = np.linspace(0.05, 0.95, 10)
    back = abel.abel_inverse(lambda s: abel.abel_forward(g, GAUSS, s), GAUSS, r)
    assert np.max(np.abs(back - g(r))) <= 1e-4


def test_x_weight_variant_does_not_invert():
    # evaluating the weight at x instead of z is kept only for comparison
    z = abel.abel_inverse(lambda s: np.ones_like(s), GAUSS, 0.5, variant="z")
    x = abel.abel_inverse(lambda s: np.ones_like(s), GAUSS, 0.5, variant="x")
    assert z == pytest.approx(float(abel.synthesize_constant(GAUSS)(0.5)), abs=1e-8)
    assert abs(x - z) > 1e-3


def test_inverse_step_underflow():
    with pytest.raises(ValueError):
        abel.abel_inverse(lambda s: np.ones_like(s), EUCLID, 1 - 1e-12)


def test_synthesis_examples():
    f = abel.synthesize_constant(EUCLID)
    r = np.linspace(0, 0.99, 50)
    assert np.allclose(f(r), 1 / (np.pi * np.sqrt(1 - r**2)), rtol=1e-14)
    g = abel.synthesize_constant(GAUSS)
    closed = (1 + r**2) / (np.pi * np.sqrt(np.e - r**2 * np.exp(r**2)))
    assert np.allclose(g(r), closed, rtol=1e-13)
    assert float(g(0.0)) == pytest.approx(1 / (np.pi * np.sqrt(np.e)), abs=1e-15)


def test_constant_speed_two_density_integrates_to_one():
    # metric lengths shrink by 1/2, so the density doubles
    prof = RadialProfile.constant(2.0)
    f = abel.synthesize_constant(prof)
    r = np.linspace(0, 0.9, 10)
    assert np.allclose(f(r), 2 / (np.pi * np.sqrt(1 - r**2)), rtol=1e-14)
    assert abel.abel_forward(f, prof, 0.4) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("lam", [0.5, 2.0, 3.7])
def test_synthesis_scales_linearly_with_speed(lam):
    r = np.linspace(0, 0.99, 25)
    for prof in (EUCLID, GAUSS):
        base = abel.synthesize_constant(prof)(r)
        scaled = abel.synthesize_constant(prof.scaled(lam))(r)
        assert np.allclose(scaled, lam * base, rtol=1e-12)


def test_synthesis_rejects_non_herglotz():
    with pytest.raises(abel.SynthesisError) as info:
        abel.synthesize_constant(RadialProfile.from_expression("2+cos(4*r)"))
    assert 0.5 < info.value.witness <= 1.0


@pytest.mark.parametrize("prof", [EUCLID, GAUSS], ids=["euclidean", "gaussian"])
def test_arcsin_identity(prof):
    assert abs(abel.arcsin_identity_check(prof, 0.5)) <= 1e-8
    assert abs(abel.arcsin_identity_check(prof, 0.2)) <= 1e-8
    rho = metric.RhoFunction(prof)
    x = 1 - 1e-6
    integral = abel.arcsin_identity_check(prof, x) + np.pi / 2 - np.arcsin(rho(x) / rho.boundary_value)
    assert integral < 1e-2


def test_blowup_factor_extends_to_boundary():
    f = abel.synthesize_constant(GAUSS)
    r = 1 - np.geomspace(1e-2, 1e-8, 7)
    w = f.w(r)
    assert np.all(np.abs(np.diff(w)) < np.abs(np.diff(w))[0] + 1e-15)
    assert abs(w[-1] - f.boundary_w) < 1e-4


def test_moment_finite_and_csv():
    f = abel.synthesize_constant(GAUSS)
    assert np.isfinite(f.moment(2)) and f.moment(3) > 0
    lines = f.to_csv(np.linspace(0, 0.9, 4)).splitlines()
    assert lines[0] == "r,f,w" and len(lines) == 5

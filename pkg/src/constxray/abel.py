"""Abel-type transform of radial functions along geodesics of a Herglotz metric.

For a radial density ``f`` on the unit ball with metric ``c(r)^{-2} g_Eucl``
and ``rho(r) = r / c(r)``, the integral over the geodesic with turning
radius ``s`` is::

    A f(s) = 2 int_s^1 f(r) [1 - (rho(s)/rho(r))^2]^{-1/2} dr / c(r)

(metric arclength).  In the variable ``u = rho(r)`` the kernel becomes
``u (u - p)^{-1/2} (u + p)^{-1/2}`` with ``p = rho(s)``, which is what
:mod:`constxray.quad` integrates.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import quad
from .metric import (
    HerglotzViolationError,
    RadialProfile,
    RhoFunction,
    boundary_distance,
    boundary_second_fundamental_form,
    herglotz_check,
)


class SynthesisError(ValueError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


@dataclass(frozen=True)
class RadialDensity:
    """A radial function ``f(r)`` on [0, 1), possibly with ``f ~ D(r)^{-1/2}`` at r = 1.

    ``D`` is the metric distance to the boundary sphere.  When ``blowup`` is
    set, ``w(r) = f(r) sqrt(D(r))`` is the smooth factor.
    """

    f: Callable
    profile: RadialProfile
    blowup: bool = False
    label: str = ""
    boundary_w: float | None = None

    def __call__(self, r):
        return self.f(np.asarray(r, dtype=float))

    def distance(self, r):
        return boundary_distance(self.profile, r)

    def w(self, r):
        r = np.asarray(r, dtype=float)
        out = np.asarray(self.f(np.minimum(r, np.nextafter(1.0, 0.0))) * np.sqrt(self.distance(r)), dtype=float)
        if self.boundary_w is not None:
            out = np.where(r >= 1.0, self.boundary_w, out)
        return out

    def moment(self, n: int = 2, tol: float = 1e-10) -> float:
        """``int_0^1 |f(r)| r^{n-1} dr``; finite iff ``f`` is integrable on the n-ball."""
        if self.blowup:
            return quad.integrate_singular(
                lambda r: np.abs(self.f(r)) * r ** (n - 1) * np.sqrt(1.0 - r), 0.0, 1.0, "right", tol)
        return quad.integrate(lambda r: np.abs(self.f(r)) * r ** (n - 1), 0.0, 1.0, tol)

    def spatial(self):
        """The same density as a function of points in the plane (or any R^n)."""
        from .boundary import BlowupDensity

        f, profile = self.f, self.profile

        def at(x):
            r = np.linalg.norm(np.asarray(x, dtype=float), axis=-1)
            return f(np.minimum(r, 1.0))

        def dist(x):
            r = np.linalg.norm(np.asarray(x, dtype=float), axis=-1)
            return boundary_distance(profile, np.minimum(r, 1.0))

        return BlowupDensity(at, dist, blowup=self.blowup)

    def to_csv(self, grid) -> str:
        r = np.asarray(grid, dtype=float)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["r", "f", "w"])
        w = self.w(r) if self.blowup else np.full_like(r, np.nan)
        for row in zip(r, self(r), w):
            writer.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def _check_radii(s, name="s"):
    s = np.asarray(s, dtype=float)
    if np.any(~((s > 0) & (s < 1))):
        raise ValueError(f"{name} must lie in (0, 1)")
    return s


def abel_forward(f, profile: RadialProfile, s, tol: float = 1e-10):
    """Integral of the radial density ``f`` over the geodesic with turning radius ``s``.

    ``f`` is a :class:`RadialDensity` or a vectorised callable of ``r``;
    ``s`` may be an array.  Raises :class:`HerglotzViolationError` if
    ``rho`` is not monotone.
    """
    shape = np.shape(s)
    s_arr = np.atleast_1d(_check_radii(s)).ravel()
    blowup = bool(getattr(f, "blowup", False))
    rho = RhoFunction(profile)
    top = rho.boundary_value
    p = rho(s_arr)

    def smooth(u, k):
        r = rho.inverse(u)
        c = profile.c(r)
        # du / (c rho') = c du / (c - r c')
        val = 2.0 * f(r) * u * c / ((c - r * profile.dc(r)) * np.sqrt(u + p[k]))
        if blowup:
            val = val * np.sqrt(np.maximum(top - u, 0.0))
        return val

    out = quad.integrate_singular_batch(smooth, p, top, kind="both" if blowup else "left", tol=tol)
    return float(out[0]) if np.ndim(s) == 0 else out.reshape(shape)


def _inner_integral(A, profile, x, tol, variant="z"):
    """``F(x) = int_x^1 W [ (rho(z)/rho(x))^2 - 1 ]^{-1/2} A(z) dz`` for an array of ``x``.

    ``W = rho'(z)/rho(z)`` (``variant="z"``) or ``rho'(x)/rho(x)`` (``"x"``).
    Integrated in ``u = rho(z)/rho(x)`` so the kernel is exactly
    ``(u - 1)^{-1/2} (u + 1)^{-1/2}`` with no cancellation near ``z = x``.
    """
    if variant not in ("z", "x"):
        raise ValueError("variant must be 'z' or 'x'")
    rho = RhoFunction(profile)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    rx = rho(x)
    drx = rho.deriv(x)

    def smooth(u, k):
        z = np.minimum(rho.inverse(u * rx[k]), np.nextafter(1.0, 0.0))
        # z-variant: W dz = du / u;  x-variant: W dz = rho'(x) du / rho'(z)
        measure = 1.0 / u if variant == "z" else drx[k] / rho.deriv(z)
        return measure * A(z) / np.sqrt(u + 1.0)

    return quad.integrate_singular_batch(smooth, 1.0, rho.boundary_value / rx, kind="left", tol=tol)


def abel_inverse(A, profile: RadialProfile, r, tol: float = 1e-12, variant: str = "z",
                 rel_step: float = 1e-4):
    """Recover ``f(r)`` from its geodesic integrals ``A(s)``.

    Evaluates ``-(c(r)/pi) dF/dx`` at ``x = r`` with ``F`` the inner singular
    integral above; the derivative is a central difference with step
    ``rel_step * (1 - r)`` improved by one Richardson step.

    Parameters
    ----------
    A : callable
        Vectorised ``s -> A f(s)`` on ``(r - step, 1)``.
    variant : {"z", "x"}
        Where the ``rho'/rho`` weight is evaluated.  Only ``"z"`` reproduces
        the arcsine evaluation; ``"x"`` is kept for comparison.
    """
    r_arr = np.atleast_1d(_check_radii(r, "r"))
    step = rel_step * (1.0 - r_arr)
    if np.any(step < 1e-13 * np.maximum(r_arr, 1.0)) or np.any(r_arr - step <= 0):
        raise ValueError("differentiation step underflow; r too close to 0 or 1")
    offsets = np.array([-1.0, 1.0, -0.5, 0.5])
    xs = (r_arr[:, None] + step[:, None] * offsets[None, :]).ravel()
    F = _inner_integral(A, profile, xs, tol, variant).reshape(-1, 4)
    d_coarse = (F[:, 1] - F[:, 0]) / (2 * step)
    d_fine = (F[:, 3] - F[:, 2]) / step
    deriv = (4 * d_fine - d_coarse) / 3
    out = -profile.c(r_arr) / np.pi * deriv
    return float(out[0]) if np.ndim(r) == 0 else out


def synthesize_constant(profile: RadialProfile, grid_size: int = 1001) -> RadialDensity:
    """The radial density whose integral over every maximal geodesic is 1.

    ``f(r) = (c - r c') / (pi c sqrt(c(1)^{-2} - (r/c)^2))``, with boundary
    factor ``w(1) = sqrt(II / (2 pi^2))`` where ``II = c(1) - c'(1)``.
    """
    check = herglotz_check(profile, grid_size)
    if not check.passed:
        raise SynthesisError(
            f"Herglotz condition fails at r = {check.witness:.6g} (rho' = {check.value:.6g})",
            witness=check.witness)
    c1 = float(profile.c(np.array(1.0)))
    top2 = c1**-2

    def f(r):
        r = np.asarray(r, dtype=float)
        c = profile.c(r)
        return (c - r * profile.dc(r)) / (np.pi * c * np.sqrt(top2 - (r / c) ** 2))

    second = boundary_second_fundamental_form(profile)
    return RadialDensity(f, profile, blowup=True, label=f"constant-transform[{profile.label}]",
                         boundary_w=float(np.sqrt(second / (2 * np.pi**2))))


def arcsin_identity_check(profile: RadialProfile, x, tol: float = 1e-13):
    """Deviation of ``int_x^1 (rho'/rho)(z) [(rho(z)/rho(x))^2 - 1]^{-1/2} dz`` from
    ``pi/2 - arcsin(rho(x)/rho(1))``."""
    x_arr = np.atleast_1d(_check_radii(x, "x"))
    rho = RhoFunction(profile)
    integral = _inner_integral(lambda z: np.ones_like(z), profile, x_arr, tol)
    exact = np.pi / 2 - np.arcsin(rho(x_arr) / rho.boundary_value)
    out = integral - exact
    return float(out[0]) if np.ndim(x) == 0 else out


__all__ = [
    "HerglotzViolationError",
    "RadialDensity",
    "SynthesisError",
    "abel_forward",
    "abel_inverse",
    "arcsin_identity_check",
    "synthesize_constant",
]

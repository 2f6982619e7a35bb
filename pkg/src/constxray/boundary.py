"""Boundary asymptotics of constant-transform densities.

Near a strictly convex boundary point ``x`` with inward normal ``nu`` and
unit tangent ``v``:

* the chord ``{x + h nu + t v}`` has length ``l`` with ``8h / l^2 -> II(v, v)``;
* ``int d(., boundary)^{-1/2}`` over that chord tends to ``sqrt(2 pi^2 / II(v, v))``;
* a density with unit line integrals is ``d^{-1/2} w`` with ``w = sqrt(II / (2 pi^2))``
  on the boundary, so ``II`` cannot depend on ``v`` (umbilicity).

Limits ``h -> 0`` are taken by polynomial extrapolation in ``sqrt(h)``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from . import metric, quad
from .metric import RadialProfile
from .xray2d import SupportFunction


class ProbeError(ValueError):
    """The probe line or slice does not meet the body as required."""


class NoBlowupFactorizationError(ValueError):
    """``f * sqrt(d)`` does not settle down near the boundary."""


class SliceFitError(ValueError):
    pass


@dataclass(frozen=True)
class BlowupDensity:
    """``f = d(., boundary)^{-1/2} w`` near the boundary, evaluated on points ``(..., n)``."""

    f: Callable
    distance: Callable
    blowup: bool = True

    def __call__(self, x):
        return self.f(x)

    def w(self, x):
        return self.f(x) * np.sqrt(self.distance(x))

    @classmethod
    def from_ball(cls, ball) -> "BlowupDensity":
        """Wrap an :class:`~constxray.xray2d.BallDensity`."""
        return cls(ball, ball.distance)


@dataclass(frozen=True)
class ImplicitBody:
    """Convex body ``{phi <= 0}`` in R^n.

    ``distance`` (exact distance to the boundary) is optional and only needed
    by :func:`short_geodesic_integral`.
    """

    phi: Callable
    dim: int
    center: np.ndarray
    grad: Callable | None = None
    distance: Callable | None = None
    label: str = ""

    def gradient(self, x, step: float = 1e-6):
        x = np.asarray(x, dtype=float)
        if self.grad is not None:
            return np.asarray(self.grad(x), dtype=float)
        eye = np.eye(self.dim) * step
        return np.array([(self.phi(x + e) - self.phi(x - e)) / (2 * step) for e in eye])

    def inward_normal(self, x):
        g = self.gradient(x)
        return -g / np.linalg.norm(g)

    def boundary_point(self, direction):
        """Boundary point hit by the ray from ``center`` along ``direction``."""
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
        t_hi = 1.0
        while self.phi(self.center + t_hi * d) <= 0:
            t_hi *= 2
            if t_hi > 1e12:
                raise ProbeError("ray never leaves the body")
        t = brentq(lambda s: self.phi(self.center + s * d), 0.0, t_hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        return self.center + t * d

    @classmethod
    def sphere(cls, center=(0.0, 0.0, 0.0), radius: float = 1.0) -> "ImplicitBody":
        c = np.asarray(center, dtype=float)
        return cls(lambda y: float(np.sum((np.asarray(y) - c) ** 2) - radius**2), c.size, c,
                   grad=lambda y: 2 * (np.asarray(y) - c),
                   distance=lambda y: radius - np.linalg.norm(np.asarray(y) - c, axis=-1),
                   label=f"sphere R={radius!r}")

    @classmethod
    def ellipsoid(cls, axes, center=None) -> "ImplicitBody":
        axes = np.asarray(axes, dtype=float)
        c = np.zeros(axes.size) if center is None else np.asarray(center, dtype=float)
        return cls(lambda y: float(np.sum(((np.asarray(y) - c) / axes) ** 2) - 1.0), axes.size, c,
                   grad=lambda y: 2 * (np.asarray(y) - c) / axes**2,
                   label="ellipsoid " + " ".join(repr(float(a)) for a in axes))

    @classmethod
    def from_spec(cls, text: str) -> "ImplicitBody":
        """``sphere R``, ``circle R`` (2D) or ``ellipsoid a b c``."""
        parts = text.split()
        if not parts:
            raise ValueError("empty body specification")
        try:
            vals = [float(p) for p in parts[1:]]
        except ValueError:
            raise ValueError(f"bad numeric argument in body {text!r}") from None
        name = parts[0].lower()
        if name == "sphere" and len(vals) == 1:
            return cls.sphere((0.0, 0.0, 0.0), vals[0])
        if name == "circle" and len(vals) == 1:
            return cls.sphere((0.0, 0.0), vals[0])
        if name == "ellipsoid" and len(vals) >= 2:
            return cls.ellipsoid(vals)
        raise ValueError(f"unknown body specification {text!r}")


def _level(body):
    if isinstance(body, SupportFunction):
        return lambda y: body.gauge(y)[0]
    return body.phi


def _crossing(level, origin, d, t_max=None):
    """Smallest t > 0 with ``level(origin + t d) = 0`` (origin inside)."""
    t_hi = 1e-6 if t_max is None else t_max
    while level(origin + t_hi * d) <= 0:
        t_hi *= 2
        if t_hi > 1e12:
            raise ProbeError("line never leaves the body")
    return brentq(lambda t: level(origin + t * d), 0.0, t_hi, xtol=1e-300, rtol=4 * np.finfo(float).eps)


@dataclass(frozen=True)
class ChordProbe:
    x: np.ndarray
    v: np.ndarray
    depth: float
    t_lo: float
    t_hi: float

    @property
    def length(self) -> float:
        return self.t_hi - self.t_lo


def chord_probe(body, x, v, h: float, max_depth: float = 0.25) -> ChordProbe:
    """The chord ``body ∩ (x + h nu + R v)`` with ``nu`` the inward normal at ``x``."""
    if not 0 < h <= max_depth:
        raise ProbeError(f"depth {h!r} outside (0, {max_depth!r}]")
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    nu = body.inward_normal(x)
    if abs(nu @ v) > 1e-3:
        raise ProbeError("v is not tangent to the boundary at x")
    v = v - (nu @ v) * nu
    v = v / np.linalg.norm(v)
    level = _level(body)
    origin = x + h * nu
    if not level(origin) < 0:
        raise ProbeError("probe base point is not inside the body")
    t_hi = _crossing(level, origin, v)
    t_lo = -_crossing(level, origin, -v)
    return ChordProbe(x, v, h, t_lo, t_hi)


def richardson(hs, values, power: float = 0.5, order: int = 3) -> float:
    """Extrapolate ``values(h)`` to ``h = 0`` by a polynomial in ``h**power``.

    Uses the ``order`` smallest depths (Neville's scheme).
    """
    hs = np.asarray(hs, dtype=float)
    values = np.asarray(values, dtype=float)
    sel = np.argsort(hs)[:order]
    x = hs[sel] ** power
    p = values[sel].copy()
    m = p.size
    for level in range(1, m):
        for i in range(m - level):
            p[i] = (x[i + level] * p[i] - x[i] * p[i + 1]) / (x[i + level] - x[i])
    return float(p[0])


def rate_exponent(hs, errors) -> float:
    """Slope of ``log |error|`` against ``log h`` (least squares)."""
    hs = np.asarray(hs, dtype=float)
    errors = np.abs(np.asarray(errors, dtype=float))
    slope, _ = np.polyfit(np.log(hs), np.log(errors), 1)
    return float(slope)


@dataclass(frozen=True)
class SecondFundamentalFormEstimate:
    value: float
    depths: np.ndarray = field(repr=False)
    raw: np.ndarray = field(repr=False)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["h", "raw", "extrapolated"])
        for h, r in zip(self.depths, self.raw):
            writer.writerow([repr(float(h)), repr(float(r)), repr(self.value)])
        return buf.getvalue()


def default_depths(lo: float = 1e-6, hi: float = 1e-2, count: int = 9) -> np.ndarray:
    return np.geomspace(hi, lo, count)


def estimate_II_chords(body, x, v, depths=None, max_depth: float = 0.25) -> SecondFundamentalFormEstimate:
    """Normal curvature ``II(v, v)`` at ``x`` from the chord lengths ``8 h / l^2``."""
    depths = default_depths() if depths is None else np.asarray(depths, dtype=float)
    raw = np.array([8 * h / chord_probe(body, x, v, h, max_depth).length ** 2 for h in depths])
    value = richardson(depths, raw)
    if not value > 0:
        raise ProbeError("non-positive curvature estimate; boundary not strictly convex here")
    return SecondFundamentalFormEstimate(value, depths, raw)


# -- radial metrics -----------------------------------------------------

def turning_radius_at_depth(profile: RadialProfile, h: float) -> float:
    """Radius ``s`` with metric distance ``h`` to the unit sphere."""
    total = metric.boundary_distance(profile, 0.0)
    if not 0 < h < total:
        raise ProbeError(f"depth {h!r} outside (0, {total!r})")
    return brentq(lambda s: metric.boundary_distance(profile, s) - h, 0.0, 1.0, xtol=1e-15)


def _radial_short_geodesic(profile, h, tol=1e-12):
    s = turning_radius_at_depth(profile, h)
    start, direction = metric.chord_start(profile, s)
    return metric.trace_geodesic(profile, start, direction, tol=tol)


def estimate_II_radial(profile: RadialProfile, depths=None) -> SecondFundamentalFormEstimate:
    """``II`` of the unit sphere for ``c^{-2} g_Eucl`` from traced short geodesics.

    The geodesic tangent to the sphere at metric depth ``h`` has metric length
    ``l`` with ``8h / l^2 -> II``; every tangent direction is equivalent.
    """
    depths = default_depths(1e-5, 1e-2, 7) if depths is None else np.asarray(depths, dtype=float)
    raw = np.array([8 * h / _radial_short_geodesic(profile, h).length ** 2 for h in depths])
    return SecondFundamentalFormEstimate(richardson(depths, raw), depths, raw)


def short_geodesic_integral(body_or_profile, x=None, v=None, h: float = 1e-4, tol: float = 1e-11) -> float:
    """``int d(gamma(t), boundary)^{-1/2} dt`` over the short geodesic at depth ``h``.

    ``body_or_profile`` is an :class:`ImplicitBody` with an exact ``distance``
    (Euclidean case) or a :class:`RadialProfile` (geodesics of the unit ball
    metric; ``x`` and ``v`` are then irrelevant by symmetry).
    """
    if isinstance(body_or_profile, RadialProfile):
        profile = body_or_profile
        trace = _radial_short_geodesic(profile, h)

        def dist(y):
            r = np.minimum(np.linalg.norm(y, axis=-1), 1.0)
            return metric.boundary_distance(profile, r)

        density = BlowupDensity(lambda y: 1.0 / np.sqrt(dist(y)), dist)
        return metric.integrate_along_trace(trace, density, tol=tol)

    body = body_or_profile
    if body.distance is None:
        raise ValueError("Euclidean short-geodesic integral needs an exact boundary distance")
    probe = chord_probe(body, x, v, h)
    origin = probe.x + h * body.inward_normal(probe.x)
    lo, hi = probe.t_lo, probe.t_hi

    def smooth(t):
        y = origin + t[..., None] * probe.v
        d = np.maximum(body.distance(y), 0.0)
        return np.sqrt(np.maximum(t - lo, 0) * np.maximum(hi - t, 0) / d)

    return quad.integrate_singular(smooth, lo, hi, "both", tol)


def boundary_value_w(f, x, approach: Sequence, order: int = 3) -> float:
    """``lim f * sqrt(d)`` at the boundary point ``x`` along interior points ``approach``.

    Raises :class:`NoBlowupFactorizationError` if the sampled values do not
    contract as the points approach ``x``.
    """
    pts = np.asarray(approach, dtype=float)
    d = np.asarray(f.distance(pts), dtype=float)
    if np.any(d <= 0):
        raise ValueError("approach points must lie strictly inside")
    order_idx = np.argsort(d)[::-1]
    d, pts = d[order_idx], pts[order_idx]
    vals = np.asarray(f(pts), dtype=float) * np.sqrt(d)
    if not np.all(np.isfinite(vals)):
        raise NoBlowupFactorizationError("f * sqrt(d) is not finite along the approach")
    steps = np.abs(np.diff(vals))
    if steps.size >= 2 and steps[-1] > steps[0]:
        raise NoBlowupFactorizationError("f * sqrt(d) does not converge toward the boundary")
    return richardson(d, vals, power=0.5, order=order)


def radial_approach(x, distances) -> np.ndarray:
    """Points ``(1 - delta) x`` for Euclidean offsets ``delta`` (x on the unit sphere)."""
    x = np.asarray(x, dtype=float)
    return np.array([(1.0 - dl) * x for dl in distances])


def predicted_w(second_fundamental_form: float) -> float:
    return float(np.sqrt(second_fundamental_form / (2 * np.pi**2)))


# -- slices -------------------------------------------------------------

@dataclass(frozen=True)
class SliceFit:
    depth: float
    minor: float
    major: float

    @property
    def ratio(self) -> float:
        return self.major / self.minor


def _fit_ellipse(points):
    """Semi-axes of the conic ``s^T M s + b^T s = 1`` through 2D points."""
    scale = np.max(np.abs(points))
    s = points / scale
    design = np.column_stack([s[:, 0] ** 2, s[:, 0] * s[:, 1], s[:, 1] ** 2, s[:, 0], s[:, 1]])
    coef, *_ = np.linalg.lstsq(design, np.ones(len(s)), rcond=None)
    A, B, C, D, E = coef
    M = np.array([[A, B / 2], [B / 2, C]])
    lam = np.linalg.eigvalsh(M)
    if not np.all(lam > 0):
        raise SliceFitError("slice is not an ellipse")
    centre = -0.5 * np.linalg.solve(M, [D, E])
    K = 1.0 + centre @ M @ centre
    axes = np.sqrt(K / lam) * scale
    return float(np.min(axes)), float(np.max(axes))


def slice_fit(body: ImplicitBody, x, e1, e2, h: float, n_rays: int = 48) -> SliceFit:
    """Fit an ellipse to the section of ``body`` by the plane ``x + h nu + span(e1, e2)``."""
    x = np.asarray(x, dtype=float)
    nu = body.inward_normal(x)
    origin = x + h * nu
    if not body.phi(origin) < 0:
        raise SliceFitError("slice plane does not cut the body")
    psi = 2 * np.pi * np.arange(n_rays) / n_rays
    pts = []
    for a in psi:
        d = np.cos(a) * np.asarray(e1) + np.sin(a) * np.asarray(e2)
        t = _crossing(body.phi, origin, d)
        pts.append([t * np.cos(a), t * np.sin(a)])
    minor, major = _fit_ellipse(np.array(pts))
    return SliceFit(h, minor, major)


def tangent_basis(nu):
    """Orthonormal basis of the hyperplane orthogonal to ``nu``."""
    nu = np.asarray(nu, dtype=float)
    q, _ = np.linalg.qr(np.column_stack([nu, np.eye(nu.size)]))
    return q[:, 1:nu.size].T


def tangent_planes(body: ImplicitBody, x, count: int = 8, seed: int = 0):
    """Tangent 2-planes at ``x`` as orthonormal pairs; in 3D the single tangent plane."""
    basis = tangent_basis(body.inward_normal(x))
    if basis.shape[0] == 2:
        return [(basis[0], basis[1])]
    rng = np.random.default_rng(seed)
    planes = []
    for _ in range(count):
        coeffs, _ = np.linalg.qr(rng.standard_normal((basis.shape[0], 2)))
        planes.append((coeffs[:, 0] @ basis, coeffs[:, 1] @ basis))
    return planes


@dataclass(frozen=True)
class UmbilicityResult:
    umbilical: bool
    ratios: list
    witness: tuple | None = None
    witness_ratio: float | None = None
    fits: list = field(default_factory=list, repr=False)


def slice_umbilicity_test(body: ImplicitBody, x, planes=None, depths=None, tol: float = 1e-3,
                          n_rays: int = 48) -> UmbilicityResult:
    """Decide umbilicity at ``x`` from near-tangent planar sections.

    Each section at depth ``h`` is fitted with an ellipse; the axis ratio is
    extrapolated to ``h = 0``.  Umbilical iff every limiting ratio is within
    ``tol`` of 1.
    """
    x = np.asarray(x, dtype=float)
    depths = default_depths(1e-5, 1e-2, 5) if depths is None else np.asarray(depths, dtype=float)
    planes = tangent_planes(body, x) if planes is None else planes
    ratios, fits = [], []
    witness, witness_ratio = None, None
    for e1, e2 in planes:
        plane_fits = [slice_fit(body, x, e1, e2, h, n_rays) for h in depths]
        limit = richardson(depths, [f.ratio for f in plane_fits])
        ratios.append(limit)
        fits.append(plane_fits)
        if abs(limit - 1) > tol and (witness_ratio is None or limit > witness_ratio):
            witness, witness_ratio = (np.asarray(e1), np.asarray(e2)), limit
    return UmbilicityResult(witness is None, ratios, witness, witness_ratio, fits)

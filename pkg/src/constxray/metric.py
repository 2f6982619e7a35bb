"""Rotationally symmetric conformal metrics ``c(r)^{-2} g_Eucl`` on the closed unit ball.

Everything here works in a single 2D plane through the origin: by symmetry a
geodesic never leaves the plane spanned by its initial position and velocity,
so planar results hold in every dimension.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from . import quad


class InvalidProfileError(ValueError):
    """The sound speed is non-positive or not finite somewhere on [0, 1]."""


class HerglotzViolationError(ValueError):
    """``r / c(r)`` fails to be strictly increasing."""

    def __init__(self, message, witness=None, value=None):
        super().__init__(message)
        self.witness = witness
        self.value = value


class NonExitError(RuntimeError):
    """A traced geodesic did not reach the boundary within the length budget."""


def _as_array(r):
    return np.asarray(r, dtype=float)


@dataclass(frozen=True)
class RadialProfile:
    """Sound speed ``c(r)`` on [0, 1] together with its derivative.

    Both callables must accept numpy arrays.
    """

    c: Callable
    dc: Callable
    source: str = "named"
    label: str = ""

    def __call__(self, r):
        return self.c(_as_array(r))

    def rho(self, r):
        r = _as_array(r)
        return r / self.c(r)

    def drho(self, r):
        r = _as_array(r)
        c = self.c(r)
        return (c - r * self.dc(r)) / c**2

    def scaled(self, lam: float) -> "RadialProfile":
        """The profile ``lam * c``."""
        c, dc = self.c, self.dc
        return RadialProfile(lambda r: lam * c(r), lambda r: lam * dc(r),
                             self.source, f"{lam!r}*({self.label})")

    def validate(self, grid_size: int = 1001):
        r = np.linspace(0.0, 1.0, grid_size)
        c = np.broadcast_to(self.c(r), r.shape)
        bad = ~np.isfinite(c) | (c <= 0)
        if np.any(bad):
            j = int(np.argmax(bad))
            raise InvalidProfileError(f"c(r) = {c[j]!r} is not positive at r = {r[j]:.6g}")
        return self

    def derivative_mismatch(self, grid_size: int = 201, step: float = 1e-5) -> float:
        """Largest ``|c' - D5 c| / (1 + |c'|)`` on an interior grid, D5 the 5-point stencil."""
        r = np.linspace(2 * step, 1 - 2 * step, grid_size)
        fd = _five_point(self.c, r, step)
        exact = np.broadcast_to(self.dc(r), r.shape)
        return float(np.max(np.abs(exact - fd) / (1 + np.abs(exact))))

    # -- constructors -------------------------------------------------
    @classmethod
    def constant(cls, value: float = 1.0) -> "RadialProfile":
        value = float(value)
        return cls(lambda r: np.full_like(_as_array(r), value),
                   lambda r: np.zeros_like(_as_array(r)), "named", f"{value!r}")

    @classmethod
    def named(cls, name: str) -> "RadialProfile":
        """``euclidean``, ``gaussian`` (``exp(-r^2/2)``) or ``lens`` (``1/(1+r^2/4)``)."""
        if name == "euclidean":
            return cls.constant(1.0)
        if name == "gaussian":
            return cls(lambda r: np.exp(-_as_array(r) ** 2 / 2),
                       lambda r: -_as_array(r) * np.exp(-_as_array(r) ** 2 / 2),
                       "named", "exp(-r^2/2)")
        if name == "lens":
            return cls(lambda r: 1.0 / (1.0 + _as_array(r) ** 2 / 4),
                       lambda r: -0.5 * _as_array(r) / (1.0 + _as_array(r) ** 2 / 4) ** 2,
                       "named", "1/(1+r^2/4)")
        raise KeyError(f"unknown named profile {name!r}")

    @classmethod
    def polynomial(cls, coeffs) -> "RadialProfile":
        """``c(r) = sum coeffs[k] r^k``."""
        p = np.polynomial.Polynomial(np.asarray(coeffs, dtype=float))
        dp = p.deriv()
        return cls(lambda r: p(_as_array(r)), lambda r: dp(_as_array(r)),
                   "polynomial", " + ".join(f"{a!r}*r^{k}" for k, a in enumerate(p.coef)))

    @classmethod
    def from_expression(cls, text: str) -> "RadialProfile":
        from .expr import parse_profile

        tree = parse_profile(text)
        deriv = tree.derivative()
        return cls(lambda r: tree.evaluate(_as_array(r)),
                   lambda r: deriv.evaluate(_as_array(r)), "expression", text)

    @classmethod
    def from_samples(cls, r, c, label: str = "samples") -> "RadialProfile":
        """Cubic-spline profile through ``(r_k, c_k)`` samples."""
        spline = CubicSpline(np.asarray(r, dtype=float), np.asarray(c, dtype=float))
        dspline = spline.derivative()
        return cls(lambda x: spline(_as_array(x)), lambda x: dspline(_as_array(x)), "samples", label)

    @classmethod
    def from_csv(cls, path) -> "RadialProfile":
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
        if data.shape[1] < 2:
            raise ValueError("profile CSV needs two columns r,c")
        order = np.argsort(data[:, 0])
        return cls.from_samples(data[order, 0], data[order, 1], label=str(path))


def _five_point(fun, r, step):
    return (fun(r - 2 * step) - 8 * fun(r - step) + 8 * fun(r + step) - fun(r + 2 * step)) / (12 * step)


@dataclass(frozen=True)
class HerglotzResult:
    passed: bool
    witness: float | None = None
    value: float | None = None
    min_drho: float | None = None


def herglotz_check(profile: RadialProfile, grid_size: int = 1001) -> HerglotzResult:
    """Check ``d/dr (r / c(r)) > 0`` on a uniform grid of [0, 1].

    On failure the first grid point with ``rho' <= 0`` is reported.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    profile.validate(grid_size)
    r = np.linspace(0.0, 1.0, grid_size)
    d = np.broadcast_to(profile.drho(r), r.shape)
    bad = ~(d > 0)
    if np.any(bad):
        j = int(np.argmax(bad))
        return HerglotzResult(False, float(r[j]), float(d[j]), float(np.min(d)))
    return HerglotzResult(True, min_drho=float(np.min(d)))


@dataclass(frozen=True)
class RhoFunction:
    """``rho(r) = r / c(r)`` with a vectorised inverse on [0, rho(1)]."""

    profile: RadialProfile
    table_size: int = 4097

    def __call__(self, r):
        return self.profile.rho(r)

    def deriv(self, r):
        return self.profile.drho(r)

    @cached_property
    def _table(self):
        r = np.linspace(0.0, 1.0, self.table_size)
        rho = np.broadcast_to(self.profile.rho(r), r.shape)
        if np.any(np.diff(rho) <= 0) or np.any(~(self.profile.drho(r) > 0)):
            check = herglotz_check(self.profile, self.table_size)
            raise HerglotzViolationError("rho is not strictly increasing on [0, 1]",
                                         check.witness, check.value)
        return r, rho

    @property
    def boundary_value(self) -> float:
        return float(self._table[1][-1])

    def inverse(self, p, iterations: int = 8):
        """Solve ``rho(s) = p`` elementwise; table lookup followed by Newton steps."""
        p = _as_array(p)
        r_tab, rho_tab = self._table
        s = np.interp(p, rho_tab, r_tab)
        for _ in range(iterations):
            step = (self.profile.rho(s) - p) / self.profile.drho(s)
            s = np.clip(s - step, 0.0, 1.0)
            if np.all(np.abs(step) <= 4 * np.finfo(float).eps * np.maximum(np.abs(s), 1e-300)):
                break
        return s


def turning_radius(rho: RhoFunction, p: float, xtol: float = 1e-14) -> float:
    """Unique ``s`` in (0, 1) with ``rho(s) = p``.

    A geodesic with Clairaut constant ``p`` attains its minimal Euclidean
    distance ``s`` from the origin exactly there.
    """
    top = rho.boundary_value
    if not 0.0 < p < top:
        raise ValueError(f"p = {p!r} outside (0, rho(1) = {top!r})")
    return brentq(lambda s: float(rho(s)) - p, 0.0, 1.0, xtol=xtol, rtol=4 * np.finfo(float).eps)


def boundary_distance(profile: RadialProfile, r, tol: float = 1e-13):
    """Metric distance from radius ``r`` to the unit sphere, ``int_r^1 dt / c(t)``."""
    r_arr = np.atleast_1d(_as_array(r))
    if np.any((r_arr < 0) | (r_arr > 1)):
        raise ValueError("radius outside [0, 1]")
    out = np.zeros_like(r_arr)
    inside = r_arr < 1
    if np.any(inside):
        out[inside] = quad.integrate_singular_batch(
            lambda t, k: 1.0 / profile.c(t), r_arr[inside], 1.0, kind="none", tol=tol)
    return float(out[0]) if np.ndim(r) == 0 else out


def boundary_second_fundamental_form(profile: RadialProfile) -> float:
    """Scalar second fundamental form of the unit sphere for ``c^{-2} g_Eucl``.

    In boundary normal coordinates the tangential metric is ``rho(r)^2`` times
    the round metric and ``d/dx0 = -c d/dr``, so ``-1/2 d/dx0 g`` applied to a
    unit vector gives ``c rho' / rho``; at r = 1 this is ``c(1) - c'(1)``.
    """
    return float(profile.c(np.array(1.0)) - profile.dc(np.array(1.0)))


# -- geodesic tracer --------------------------------------------------

@dataclass(frozen=True)
class TracedGeodesic:
    """A geodesic traced in metric arclength from one boundary point to the next."""

    t: np.ndarray
    position: np.ndarray
    velocity: np.ndarray
    exited: bool
    length: float
    clairaut_constant: float
    turning_point: float | None
    profile: RadialProfile = field(repr=False)
    solution: object = field(repr=False, compare=False)

    def state(self, t):
        """Positions and Euclidean velocities at parameters ``t`` (dense output)."""
        y = self.solution(np.asarray(t, dtype=float))
        x, p = y[:2], y[2:]
        c2 = self.profile.c(np.hypot(x[0], x[1])) ** 2
        return x.T, (c2 * p).T

    @property
    def speed(self) -> np.ndarray:
        """Metric speed ``|x'| / c`` at the samples."""
        r = np.linalg.norm(self.position, axis=1)
        return np.linalg.norm(self.velocity, axis=1) / self.profile.c(r)

    @property
    def clairaut(self) -> np.ndarray:
        """``rho(|x|) sin(alpha)`` at the samples, alpha the angle to the radial direction."""
        x, v = self.position, self.velocity
        r = np.linalg.norm(x, axis=1)
        return (x[:, 0] * v[:, 1] - x[:, 1] * v[:, 0]) / self.profile.c(r) ** 2

    @property
    def clairaut_drift(self) -> float:
        return float(np.max(np.abs(self.clairaut - self.clairaut_constant)))

    @property
    def min_radius(self) -> float:
        if self.turning_point is not None:
            x, _ = self.state(self.turning_point)
            return float(np.linalg.norm(x))
        return float(np.min(np.linalg.norm(self.position, axis=1)))

    @property
    def endpoints(self):
        return self.position[0], self.position[-1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "x", "y", "speed", "clairaut"])
        for row in zip(self.t, self.position[:, 0], self.position[:, 1], self.speed, self.clairaut):
            writer.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def _geodesic_rhs(profile):
    def rhs(_t, y):
        x0, x1, p0, p1 = y
        r = np.hypot(x0, x1)
        c = float(profile.c(np.array(r)))
        p2 = p0 * p0 + p1 * p1
        g = float(profile.dc(np.array(r))) / r if r > 1e-300 else 0.0
        # H = c^2 |p|^2 / 2
        return [c * c * p0, c * c * p1, -c * g * x0 * p2, -c * g * x1 * p2]
    return rhs


def trace_geodesic(profile: RadialProfile, start, direction, tol: float = 1e-10,
                   n_samples: int = 201, max_length: float | None = None) -> TracedGeodesic:
    """Trace the geodesic leaving boundary point ``start`` in Euclidean direction ``direction``.

    Integrates Hamilton's equations for ``H = c^2 |p|^2 / 2`` with DOP853 and
    stops on the event ``|x| = 1``.  The parameter is metric arclength.
    """
    start = np.asarray(start, dtype=float)
    direction = np.asarray(direction, dtype=float)
    if start.shape != (2,) or direction.shape != (2,):
        raise ValueError("trace_geodesic works in the plane; pass 2-vectors")
    if abs(np.linalg.norm(start) - 1.0) > 1e-12:
        raise ValueError("start must lie on the unit circle")
    direction = direction / np.linalg.norm(direction)
    if not start @ direction < 0:
        raise ValueError("direction must point strictly inward")
    c1 = float(profile.c(np.array(1.0)))
    if max_length is None:
        max_length = 50.0 / float(np.min(profile.c(np.linspace(0, 1, 257))))

    y0 = np.concatenate([start, direction / c1])

    def leave(_t, y):
        return y[0] ** 2 + y[1] ** 2 - 1.0
    leave.terminal = True
    leave.direction = 1

    def turn(_t, y):
        return y[0] * y[2] + y[1] * y[3]
    turn.direction = 1

    # short chords near the boundary must not be stepped over in one go
    grid = np.linspace(0, 1, 257)
    max_step = 0.25 * float(-(start @ direction)) / float(np.max(profile.c(grid)))
    sol = solve_ivp(_geodesic_rhs(profile), (0.0, max_length), y0, method="DOP853",
                    rtol=tol, atol=tol, events=(leave, turn), dense_output=True, max_step=max_step)
    if not sol.t_events[0].size:
        raise NonExitError(f"geodesic did not exit within metric length {max_length:g}")
    length = float(sol.t_events[0][0])
    turning = float(sol.t_events[1][0]) if sol.t_events[1].size else None

    t = np.linspace(0.0, length, n_samples)
    y = sol.sol(t)
    x, p = y[:2].T, y[2:].T
    c2 = profile.c(np.linalg.norm(x, axis=1)) ** 2
    clairaut0 = float(start[0] * y0[3] - start[1] * y0[2])
    return TracedGeodesic(t=t, position=x, velocity=c2[:, None] * p, exited=True, length=length,
                          clairaut_constant=clairaut0, turning_point=turning,
                          profile=profile, solution=sol.sol)


def chord_start(profile: RadialProfile, s: float):
    """Boundary start point and inward direction of the geodesic with turning radius ``s``."""
    rho = RhoFunction(profile)
    sin_beta = float(rho(s)) / rho.boundary_value
    if not 0.0 <= sin_beta < 1.0:
        raise ValueError("turning radius must lie in [0, 1)")
    cos_beta = np.sqrt(1.0 - sin_beta**2)
    return np.array([1.0, 0.0]), np.array([-cos_beta, sin_beta])


def integrate_along_trace(trace: TracedGeodesic, density, tol: float = 1e-10) -> float:
    """Integral of ``density`` over the traced geodesic in metric arclength.

    ``density`` is evaluated on arrays of points with shape ``(..., 2)``.  If it
    declares ``blowup = True`` (a ``d(x, boundary)^{-1/2}`` singularity at both
    ends) the endpoint factors are removed by the ``sin^2`` substitution.
    """
    if not trace.exited:
        raise NonExitError("trace did not exit")
    length = trace.length
    blowup = bool(getattr(density, "blowup", False))

    def smooth(t):
        x, _ = trace.state(t.ravel())
        vals = np.asarray(density(x), dtype=float).reshape(t.shape)
        if not np.all(np.isfinite(vals)):
            raise FloatingPointError("density not evaluable along the trace")
        if blowup:
            vals = vals * np.sqrt(np.clip(t, 0, None) * np.clip(length - t, 0, None))
        return vals

    return quad.integrate_singular(smooth, 0.0, length, kind="both" if blowup else "none", tol=tol)

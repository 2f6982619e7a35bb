"""Lines, support functions and X-ray transforms of planar convex domains.

A convex body is stored through its support function
``h(theta) = sup_{x in body} <x, v_theta>`` sampled on a uniform grid and
interpolated trigonometrically.  With ``a(theta) = -h(theta + pi)`` and
``b(theta) = h(theta)`` the line ``L_{r,theta} = {<x, v_theta> = r}`` meets
the body iff ``a < r < b``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, minimize_scalar

from . import quad

TWO_PI = 2 * np.pi


class NoIntersectionWarning(UserWarning):
    """A probe line missed the domain; its integral is reported as 0."""


def unit(theta):
    theta = np.asarray(theta, dtype=float)
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def normal(theta):
    """``v_theta`` rotated by +90 degrees."""
    theta = np.asarray(theta, dtype=float)
    return np.stack([-np.sin(theta), np.cos(theta)], axis=-1)


@dataclass(frozen=True)
class LineParam:
    r: float
    theta: float

    @property
    def direction(self):
        return normal(self.theta)

    @property
    def foot(self):
        return self.r * unit(self.theta)

    def point(self, t):
        t = np.asarray(t, dtype=float)
        return self.foot + t[..., None] * self.direction


@dataclass(frozen=True)
class SupportFunction:
    """Support function samples ``h(2 pi k / N)``, ``k = 0..N-1``, N even and >= 256."""

    samples: np.ndarray = field(repr=False)
    label: str = ""

    def __post_init__(self):
        h = np.asarray(self.samples, dtype=float)
        if h.ndim != 1 or h.size < 256 or h.size % 2:
            raise ValueError("support function needs an even number (>= 256) of samples")
        object.__setattr__(self, "samples", h)

    @property
    def size(self) -> int:
        return self.samples.size

    @property
    def theta(self) -> np.ndarray:
        return TWO_PI * np.arange(self.size) / self.size

    @cached_property
    def _coeffs(self):
        return np.fft.rfft(self.samples) / self.size

    def __call__(self, theta, deriv: int = 0):
        """Trigonometric interpolant (or its ``deriv``-th derivative) at ``theta``."""
        theta = np.asarray(theta, dtype=float)
        c = self._coeffs
        k = np.arange(c.size)
        weight = np.full(c.size, 2.0)
        weight[0] = 1.0
        weight[-1] = 1.0 if deriv == 0 else 0.0
        phase = np.exp(1j * np.multiply.outer(theta, k))
        terms = (1j * k) ** deriv * weight * c
        return np.real(phase @ terms)

    def a(self, theta):
        return -self(np.asarray(theta) + np.pi)

    def b(self, theta):
        return self(theta)

    def width(self, theta=None):
        if theta is None:
            h = self.samples
            return h + np.roll(h, -self.size // 2)
        return self(theta) + self(np.asarray(theta) + np.pi)

    def convexity_margin(self) -> float:
        """``min (h + h'')`` on the grid; a valid body has it non-negative."""
        t = self.theta
        return float(np.min(self(t) + self(t, deriv=2)))

    def boundary_point(self, theta):
        """Point of the body with outward normal ``v_theta``."""
        theta = np.asarray(theta, dtype=float)
        return self(theta)[..., None] * unit(theta) + self(theta, deriv=1)[..., None] * normal(theta)

    def _refine(self, objective, grid_vals, j, grid):
        n = grid.size
        lo, hi = grid[j] - TWO_PI / n, grid[j] + TWO_PI / n
        res = minimize_scalar(objective, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-13})
        if res.fun <= grid_vals[j]:
            return float(res.x), float(res.fun)
        return float(grid[j]), float(grid_vals[j])

    def gauge(self, y):
        """``max_theta (<y, v_theta> - h(theta))`` and its maximiser.

        Negative inside the body, zero on the boundary, positive outside; the
        maximiser is the outward normal angle at boundary points.
        """
        y = np.asarray(y, dtype=float)
        grid = self.theta
        vals = -(y[0] * np.cos(grid) + y[1] * np.sin(grid) - self.samples)
        j = int(np.argmin(vals))
        t, v = self._refine(lambda th: -(y[0] * np.cos(th) + y[1] * np.sin(th) - self(th)), vals, j, grid)
        return -v, t

    def contains(self, y) -> bool:
        return self.gauge(y)[0] <= 0

    def normal_angle(self, x) -> float:
        """Outward normal angle at the boundary point ``x``.

        Solves ``<x, v_theta'> = h'(theta)`` near the gauge maximiser so the
        angle is accurate to rounding rather than to the optimiser tolerance.
        """
        x = np.asarray(x, dtype=float)
        t0 = self.gauge(x)[1]

        def slope(th):
            return -x[0] * np.sin(th) + x[1] * np.cos(th) - self(th, deriv=1)

        step = TWO_PI / self.size
        lo, hi = t0 - step, t0 + step
        if slope(lo) * slope(hi) > 0:
            return t0
        return float(brentq(slope, lo, hi, xtol=1e-15))

    def inward_normal(self, x):
        return -unit(self.normal_angle(x))

    def chord(self, line: LineParam):
        """Parameter interval ``(t_lo, t_hi)`` of ``line`` inside the body (empty if t_lo >= t_hi)."""
        grid = self.theta
        s = np.sin(grid - line.theta)
        q = self.samples - line.r * np.cos(grid - line.theta)

        def bound(sign):
            mask = sign * s > 1e-12
            vals = np.where(mask, sign * q / np.where(mask, s, 1.0), np.inf)
            j = int(np.argmin(vals))

            def objective(th):
                sv = np.sin(th - line.theta)
                if sign * sv <= 0:
                    return np.inf
                return sign * (self(th) - line.r * np.cos(th - line.theta)) / sv
            return sign * self._refine(objective, vals, j, grid)[1]

        return bound(-1.0), bound(1.0)

    def rotate(self, phi: float) -> "SupportFunction":
        return SupportFunction(self(self.theta - phi), f"rot({self.label}, {phi!r})")

    # -- constructors -------------------------------------------------
    @classmethod
    def from_function(cls, h: Callable, size: int = 512, label: str = "") -> "SupportFunction":
        return cls(h(TWO_PI * np.arange(size) / size), label)

    @classmethod
    def disc(cls, cx: float = 0.0, cy: float = 0.0, radius: float = 1.0, size: int = 512):
        return cls.from_function(lambda t: radius + cx * np.cos(t) + cy * np.sin(t), size,
                                 f"disc {cx!r} {cy!r} {radius!r}")

    @classmethod
    def ellipse(cls, a: float, b: float, size: int = 512):
        """Semi-axes ``a`` along x and ``b`` along y."""
        return cls.from_function(lambda t: np.sqrt((a * np.cos(t)) ** 2 + (b * np.sin(t)) ** 2),
                                 size, f"ellipse {a!r} {b!r}")

    @classmethod
    def reuleaux(cls, width: float, eps: float, size: int = 512):
        """Smoothed Reuleaux-type body ``h = width/2 + eps cos(3 theta)`` of constant width."""
        if 8 * eps > width / 2:
            raise ValueError("eps too large: body would not be convex")
        return cls.from_function(lambda t: width / 2 + eps * np.cos(3 * t), size,
                                 f"reuleaux {width!r} {eps!r}")

    @classmethod
    def from_points(cls, points, size: int = 512):
        """Support function of the convex hull of a point cloud (directional maxima)."""
        pts = np.asarray(points, dtype=float)
        t = TWO_PI * np.arange(size) / size
        return cls(np.max(pts @ unit(t).T, axis=0), "points")

    @classmethod
    def from_samples(cls, theta, h, size: int = 512):
        """Resample ``(theta, h)`` pairs onto the uniform grid with a periodic spline."""
        theta = np.mod(np.asarray(theta, dtype=float), TWO_PI)
        order = np.argsort(theta)
        theta, h = theta[order], np.asarray(h, dtype=float)[order]
        uniform = theta.size == size and np.allclose(theta, TWO_PI * np.arange(size) / size)
        if uniform:
            return cls(h, "samples")
        spline = CubicSpline(np.append(theta, theta[0] + TWO_PI), np.append(h, h[0]),
                             bc_type="periodic")
        return cls(spline(TWO_PI * np.arange(size) / size), "samples")

    @classmethod
    def from_csv(cls, path, size: int = 512):
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
        return cls.from_samples(data[:, 0], data[:, 1], size)

    @classmethod
    def from_spec(cls, text: str, size: int = 512) -> "SupportFunction":
        """Named shapes: ``disc cx cy R``, ``circle R``, ``ellipse a b``, ``reuleaux w eps``."""
        parts = text.split()
        if not parts:
            raise ValueError("empty shape specification")
        name, args = parts[0].lower(), parts[1:]
        try:
            vals = [float(a) for a in args]
        except ValueError:
            raise ValueError(f"bad numeric argument in shape {text!r}") from None
        arity = {"disc": 3, "circle": 1, "ellipse": 2, "reuleaux": 2}
        if name not in arity:
            raise ValueError(f"unknown shape {name!r}")
        if len(vals) != arity[name]:
            raise ValueError(f"shape {name!r} takes {arity[name]} numbers")
        if name == "disc":
            return cls.disc(*vals, size=size)
        if name == "circle":
            return cls.disc(0.0, 0.0, vals[0], size=size)
        if name == "ellipse":
            return cls.ellipse(*vals, size=size)
        return cls.reuleaux(*vals, size=size)


@dataclass(frozen=True)
class BallDensity:
    """The constant-transform density of the ball ``|x - center| < R`` in R^n.

    ``f(x) = 1 / (pi R sqrt(1 - |x - center|^2 / R^2))``; every line meeting
    the ball integrates it to 1.
    """

    n: int
    center: np.ndarray
    radius: float
    blowup = True

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float)
        if self.n < 2 or center.shape != (self.n,):
            raise ValueError("need n >= 2 and a center with n coordinates")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "center", center)

    def __call__(self, x):
        d2 = np.sum((np.asarray(x, dtype=float) - self.center) ** 2, axis=-1)
        return 1.0 / (np.pi * np.sqrt(self.radius**2 - d2))

    def distance(self, x):
        return self.radius - np.linalg.norm(np.asarray(x, dtype=float) - self.center, axis=-1)

    def chord(self, point, direction):
        """Parameter interval of ``point + t * direction`` (unit direction) inside the ball."""
        p = np.asarray(point, dtype=float) - self.center
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
        t0 = -p @ d
        q2 = p @ p - t0 * t0
        half2 = self.radius**2 - q2
        if half2 <= 0:
            return t0, t0
        half = np.sqrt(half2)
        return t0 - half, t0 + half

    def line_integral(self, point, direction, tol: float = 1e-12) -> float:
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
        lo, hi = self.chord(point, d)
        if not lo < hi:
            return 0.0
        p = np.asarray(point, dtype=float)

        def smooth(t):
            x = p + t[..., None] * d
            return self(x) * np.sqrt((t - lo) * (hi - t))
        return quad.integrate_singular(smooth, lo, hi, "both", tol)


def ball_density(n: int, center=None, radius: float = 1.0) -> BallDensity:
    center = np.zeros(n) if center is None else center
    return BallDensity(n, center, radius)


def line_integral(f, dom: SupportFunction, line: LineParam, tol: float = 1e-11) -> float:
    """Integral of ``f`` over ``line`` intersected with the domain.

    ``f`` is evaluated on arrays of points with shape ``(..., 2)``.  Densities
    with ``blowup = True`` are taken to carry ``d^{-1/2}`` factors at the
    chord ends.  Lines that miss the domain give 0 and a
    :class:`NoIntersectionWarning`.
    """
    lo, hi = dom.chord(line)
    if not lo < hi:
        warnings.warn(f"line {line} misses the domain", NoIntersectionWarning, stacklevel=2)
        return 0.0
    if getattr(f, "blowup", False):
        def smooth(t):
            return f(line.point(t)) * np.sqrt(np.maximum(t - lo, 0) * np.maximum(hi - t, 0))
        return quad.integrate_singular(smooth, lo, hi, "both", tol)
    return quad.integrate(lambda t: f(line.point(t)), lo, hi, tol)


def _test_function(h):
    if callable(h):
        return h
    if h in ("const", "constant"):
        return lambda r: np.ones_like(r)
    if h == "linear":
        return lambda r: r
    if isinstance(h, tuple) and h[0] == "power":
        k = int(h[1])
        return lambda r: r**k
    if isinstance(h, str) and h.startswith("power:"):
        k = int(h.split(":", 1)[1])
        return lambda r: r**k
    raise ValueError(f"unknown test function {h!r}")


def moment(f, dom: SupportFunction, theta: float, h="const", tol: float = 1e-9,
           line_tol: float = 1e-12) -> float:
    """``int_Omega f(x) h(<v_theta, x>) dx`` computed as ``int_a^b If(r, theta) h(r) dr``."""
    weight = _test_function(h)
    lo, hi = float(dom.a(theta)), float(dom.b(theta))

    def transform(r):
        flat = np.ravel(r)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NoIntersectionWarning)
            vals = np.array([line_integral(f, dom, LineParam(float(x), theta), line_tol) for x in flat])
        return vals.reshape(np.shape(r)) * weight(r) * np.sqrt(np.maximum((r - lo) * (hi - r), 0.0))

    # If(r) behaves like a square root (or a constant) at r = a, b; the sin^2
    # substitution makes the r-integrand smooth in both cases
    return quad.integrate_singular(transform, lo, hi, "both", tol)


@dataclass(frozen=True)
class WidthResult:
    passed: bool
    width: float
    spread: float
    witness: float | None = None


def constant_width_test(dom: SupportFunction, tol: float = 1e-9) -> WidthResult:
    """Pass iff ``max |h(theta) + h(theta + pi) - mean width| <= tol`` on the grid."""
    w = dom.width()
    mean = float(np.mean(w))
    dev = np.abs(w - mean)
    j = int(np.argmax(dev))
    if dev[j] <= tol:
        return WidthResult(True, mean, float(dev[j]))
    return WidthResult(False, mean, float(dev[j]), float(dom.theta[j]))


@dataclass(frozen=True)
class DiscFit:
    center: np.ndarray
    radius: float
    residual: float
    accepted = True


@dataclass(frozen=True)
class DiscRejection:
    reason: str
    magnitude: float
    harmonic: int | None = None
    accepted = False


def disc_test(dom: SupportFunction, tol: float = 1e-6):
    """Decide whether the body is a disc.

    Requires constant width ``w`` and then that ``a(theta) + w/2`` contains
    no Fourier harmonic other than degree 1 (the solutions of
    ``a'' + a = -w/2``).  ``tol`` is relative to ``w``.
    """
    mean_width = float(np.mean(dom.width()))
    width = constant_width_test(dom, tol * mean_width)
    if not width.passed:
        return DiscRejection("width", width.spread)
    w = width.width
    n = dom.size
    a = -np.roll(dom.samples, -n // 2)
    coeffs = np.fft.rfft(a + w / 2) / n
    amp = 2 * np.abs(coeffs)
    amp[0] /= 2
    amp[-1] /= 2
    z = np.array([2 * coeffs[1].real, -2 * coeffs[1].imag])
    others = amp.copy()
    others[1] = 0.0
    k = int(np.argmax(others))
    if others[k] > tol * w:
        return DiscRejection(f"harmonic {k}", float(others[k]), k)
    return DiscFit(z, w / 2, float(others[k]))


def piecewise_constant_demo(balls: Sequence, lines: Sequence[LineParam], tol: float = 1e-12):
    """Line integrals of ``sum_i c_i * BallDensity_i`` (each extended by zero).

    ``balls`` holds ``(center, radius, coefficient)`` triples in the plane.
    """
    densities = [(BallDensity(2, c, R), coef) for c, R, coef in balls]
    out = []
    for line in lines:
        total = 0.0
        for ball, coef in densities:
            total += coef * ball.line_integral(line.foot, line.direction, tol)
        out.append(total)
    return out

"""State spaces and the closed-form contraction families.

Every 1-D family exposes ``__call__``, ``derivative`` and ``diff``. ``diff(x, y, d)``
returns ``phi(y) - phi(x)`` given ``d = y - x`` without subtracting two nearly
equal images, which keeps deep cylinder diameters accurate to a few ulps in
relative terms. Each family also carries analytic bounds on ``|phi'|`` and
``|phi''|`` that back the grid-based verifiers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameter

__all__ = [
    "Interval",
    "Ball",
    "StateSpace",
    "Similarity",
    "Affine1D",
    "Perturbed1D",
    "Conjugated1D",
    "PROFILES",
]


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise InvalidParameter(f"interval needs lo <= hi, got [{self.lo}, {self.hi}]")

    @property
    def dim(self) -> int:
        return 1

    @property
    def diameter(self) -> float:
        return self.hi - self.lo

    @property
    def length(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True, eq=False)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(-1))
        if not self.radius > 0:
            raise InvalidParameter("ball radius must be > 0")

    def __eq__(self, other):
        return (isinstance(other, Ball) and self.radius == other.radius
                and np.array_equal(self.center, other.center))

    def __hash__(self):
        return hash((self.radius, tuple(self.center)))

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius


@dataclass(frozen=True)
class StateSpace:
    vertex: int
    geometry: Interval | Ball

    def __post_init__(self):
        if not self.geometry.diameter > 0:
            raise InvalidParameter(f"state space {self.vertex} is degenerate")

    @property
    def diameter(self) -> float:
        return self.geometry.diameter

    @property
    def dim(self) -> int:
        return self.geometry.dim

    @property
    def is_interval(self) -> bool:
        return isinstance(self.geometry, Interval)


@dataclass(frozen=True, eq=False)
class Similarity:
    """``x -> ratio * Q x + translation`` with ``Q`` orthogonal."""

    ratio: float
    isometry: np.ndarray
    translation: np.ndarray
    constant_derivative = True

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.isometry, dtype=float))
        b = np.asarray(self.translation, dtype=float).reshape(-1)
        if not 0.0 < self.ratio < 1.0:
            raise InvalidParameter(f"similarity ratio must lie in (0, 1), got {self.ratio}")
        if Q.shape != (b.size, b.size):
            raise InvalidParameter("isometry and translation dimensions disagree")
        if not np.allclose(Q @ Q.T, np.eye(b.size), atol=1e-12):
            raise InvalidParameter("isometry must be orthogonal")
        object.__setattr__(self, "isometry", Q)
        object.__setattr__(self, "translation", b)

    @classmethod
    def on_line(cls, ratio, translation=0.0, reverse=False):
        return cls(ratio, [[-1.0 if reverse else 1.0]], [translation])

    @property
    def dim(self) -> int:
        return self.translation.size

    @property
    def slope(self) -> float:
        return self.ratio * float(self.isometry[0, 0])

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        return self.ratio * (x @ self.isometry.T) + self.translation

    # 1-D protocol (only meaningful when dim == 1)
    def __call__(self, x):
        return self.slope * x + self.translation[0]

    def derivative(self, x):
        return self.slope + 0.0 * np.asarray(x, dtype=float)

    def diff(self, x, y, d):
        return self.slope * d

    def derivative_abs_bound(self) -> float:
        return self.ratio

    def second_derivative_bound(self) -> float:
        return 0.0


@dataclass(frozen=True)
class Affine1D:
    slope: float
    intercept: float
    constant_derivative = True

    def __post_init__(self):
        if self.slope == 0:
            raise InvalidParameter("affine slope must be nonzero")

    @property
    def ratio(self) -> float:
        return abs(self.slope)

    def __call__(self, x):
        return self.slope * x + self.intercept

    def derivative(self, x):
        return self.slope + 0.0 * np.asarray(x, dtype=float)

    def diff(self, x, y, d):
        return self.slope * d

    def derivative_abs_bound(self) -> float:
        return abs(self.slope)

    def second_derivative_bound(self) -> float:
        return 0.0


# profile name -> frequency k of sin(k*pi*u), u the normalized domain coordinate
PROFILES = {"sin_pi": 1, "sin_2pi": 2}


@dataclass(frozen=True)
class Perturbed1D:
    """``x -> slope*x + intercept + amplitude*sin(k*pi*u)``, ``u = (x-lo)/(hi-lo)``.

    The perturbation vanishes at both ends of the domain, so the image of the
    domain has the same endpoints as the affine base.
    """

    slope: float
    intercept: float
    amplitude: float
    domain: Interval
    profile: str = "sin_pi"
    constant_derivative = False

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise InvalidParameter(f"unknown perturbation profile {self.profile!r}")

    @property
    def _k(self) -> float:
        return PROFILES[self.profile] * math.pi / self.domain.length

    def __call__(self, x):
        u = x - self.domain.lo
        return self.slope * x + self.intercept + self.amplitude * np.sin(self._k * u)

    def derivative(self, x):
        k = self._k
        return self.slope + self.amplitude * k * np.cos(k * (x - self.domain.lo))

    def diff(self, x, y, d):
        k = self._k
        lo = self.domain.lo
        mid = 0.5 * ((x - lo) + (y - lo))
        return self.slope * d + 2.0 * self.amplitude * np.cos(k * mid) * np.sin(0.5 * k * d)

    def derivative_abs_bound(self) -> float:
        return abs(self.slope) + abs(self.amplitude) * self._k

    def second_derivative_bound(self) -> float:
        return abs(self.amplitude) * self._k ** 2


def _h_norm(v, c):
    return v + c * v * (1.0 - v)


def _h_inv_norm(w, c):
    # root of c v^2 - (1+c) v + w = 0 in [0, 1], written without cancellation
    return 2.0 * w / ((1.0 + c) + np.sqrt((1.0 + c) ** 2 - 4.0 * c * w))


@dataclass(frozen=True)
class Conjugated1D:
    """``h_out o base o h_in^{-1}`` with quadratic interval diffeomorphisms.

    ``h(x) = lo + L*(u + c*u*(1-u))`` on an interval of length ``L``; ``|c| < 1``
    keeps ``h`` increasing.
    """

    base: Affine1D | Perturbed1D | Similarity
    c_in: float
    c_out: float
    domain: Interval
    codomain: Interval
    constant_derivative = False

    def __post_init__(self):
        if not (abs(self.c_in) < 1 and abs(self.c_out) < 1):
            raise InvalidParameter("conjugacy parameter must satisfy |c| < 1")

    def _to_base(self, x):
        D = self.domain
        return D.lo + D.length * _h_inv_norm((x - D.lo) / D.length, self.c_in)

    def _from_base(self, z):
        C = self.codomain
        return C.lo + C.length * _h_norm((z - C.lo) / C.length, self.c_out)

    def __call__(self, x):
        return self._from_base(self.base(self._to_base(x)))

    def derivative(self, x):
        D, C = self.domain, self.codomain
        g = self._to_base(x)
        dg = 1.0 / (1.0 + self.c_in * (1.0 - 2.0 * (g - D.lo) / D.length))
        z = self.base(g)
        dh = 1.0 + self.c_out * (1.0 - 2.0 * (z - C.lo) / C.length)
        return dh * self.base.derivative(g) * dg

    def diff(self, x, y, d):
        D, C = self.domain, self.codomain
        gx, gy = self._to_base(x), self._to_base(y)
        dg = d / (1.0 + self.c_in * (1.0 - (gx - D.lo) / D.length - (gy - D.lo) / D.length))
        zx, zy = self.base(gx), self.base(gy)
        dz = self.base.diff(gx, gy, dg)
        return dz * (1.0 + self.c_out * (1.0 - (zx - C.lo) / C.length - (zy - C.lo) / C.length))

    def derivative_abs_bound(self) -> float:
        return (1 + abs(self.c_out)) * self.base.derivative_abs_bound() / (1 - abs(self.c_in))

    def second_derivative_bound(self) -> float:
        a_in, a_out = abs(self.c_in), abs(self.c_out)
        Lin, Lout = self.domain.length, self.codomain.length
        g1 = 1.0 / (1.0 - a_in)
        g2 = 2.0 * a_in / Lin / (1.0 - a_in) ** 3
        h1, h2 = 1.0 + a_out, 2.0 * a_out / Lout
        p1 = self.base.derivative_abs_bound()
        p2 = self.base.second_derivative_bound()
        return h2 * (p1 * g1) ** 2 + h1 * p2 * g1 ** 2 + h1 * p1 * g2

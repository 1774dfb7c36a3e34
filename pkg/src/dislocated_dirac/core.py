"""Pauli algebra, grids, spinor fields and the square-root branch lambda(omega)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)
for _m in (SIGMA1, SIGMA3):
    _m.setflags(write=False)


class BranchError(ValueError):
    """Raised when lambda_branch is asked for a value on the essential spectrum."""


@dataclass(frozen=True)
class DislocationParam:
    """The dislocation angle tau, kept in [0, 2*pi]."""

    tau: float

    def __post_init__(self):
        t = float(self.tau)
        if not math.isfinite(t):
            raise ValueError("tau must be finite")
        if t < 0.0 or t > TWO_PI:
            t = math.fmod(t, TWO_PI)
            if t < 0.0:
                t += TWO_PI
        object.__setattr__(self, "tau", t)

    def __float__(self):
        return self.tau


def as_tau(tau) -> float:
    """Accept a float or a DislocationParam and return the reduced angle."""
    if isinstance(tau, DislocationParam):
        return tau.tau
    return DislocationParam(tau).tau


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform grid on [x_min, x_max] that straddles the dislocation at x = 0."""

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if not (self.x_min < 0.0 < self.x_max):
            raise ValueError("grid must satisfy x_min < 0 < x_max")
        if int(self.n) != self.n or self.n < 3:
            raise ValueError("grid needs at least 3 points")
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        xs = np.linspace(self.x_min, self.x_max, self.n)
        xs.setflags(write=False)
        return xs

    @classmethod
    def symmetric(cls, half_width: float, h: float) -> "SpatialGrid":
        """Grid on [-L, L] with spacing h; x = 0 is a node."""
        m = int(round(half_width / h))
        return cls(-m * h, m * h, 2 * m + 1)


@dataclass(frozen=True)
class SpinorField:
    """Samples of a C^2-valued function on a SpatialGrid, shape (n, 2)."""

    grid: SpatialGrid
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        s = np.array(self.samples, dtype=complex)
        if s.shape != (self.grid.n, 2):
            raise ValueError(f"samples must have shape ({self.grid.n}, 2), got {s.shape}")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    @classmethod
    def from_function(cls, grid: SpatialGrid, func) -> "SpinorField":
        """Sample ``func(x) -> (n, 2)`` on ``grid``."""
        return cls(grid, func(grid.x))

    def inner(self, other: "SpinorField") -> complex:
        """Discrete L^2 inner product <self, other> (conjugate-linear in self)."""
        return complex(np.sum(np.conj(self.samples) * other.samples) * self.grid.h)

    def norm(self) -> float:
        return math.sqrt(max(self.inner(self).real, 0.0))

    def __add__(self, other: "SpinorField") -> "SpinorField":
        return SpinorField(self.grid, self.samples + other.samples)

    def __sub__(self, other: "SpinorField") -> "SpinorField":
        return SpinorField(self.grid, self.samples - other.samples)

    def scale(self, c: complex) -> "SpinorField":
        return SpinorField(self.grid, c * self.samples)


def sigma_star(tau) -> np.ndarray:
    tau = as_tau(tau)
    return np.array([[0, np.exp(-1j * tau)], [np.exp(1j * tau), 0]])


def sigma_matrices(tau=0.0):
    """Return (sigma_1, sigma_3, sigma_star(tau)) as fresh arrays."""
    return SIGMA1.copy(), SIGMA3.copy(), sigma_star(tau)


def s_matrix(tau) -> np.ndarray:
    """S(tau) = diag(e^{i tau}, 1), the gauge relating the two media."""
    return np.diag([np.exp(1j * as_tau(tau)), 1.0 + 0j])


def coefficient_matrix(side: str, omega, tau) -> np.ndarray:
    """Matrix M with beta' = M beta for (D - omega) beta = 0 on one half-line.

    ``side="left"`` is the x < 0 medium (mass sigma_1), ``"right"`` the x > 0
    medium (mass sigma_star(tau)). Both equal i sigma_3 (mass - omega).
    """
    omega = complex(omega)
    if side == "left":
        e = 1.0 + 0j
    elif side == "right":
        e = np.exp(-1j * as_tau(tau))
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    return np.array([[-1j * omega, 1j * e], [-1j / e, 1j * omega]])


def lambda_branch(omega):
    """Holomorphic root of 1 - omega^2 with positive real part off the spectrum.

    Works elementwise on arrays. Real omega with |omega| >= 1 lies on the
    essential spectrum and is rejected; use :func:`lambda_limit` there.
    """
    w = np.asarray(omega, dtype=complex)
    on_cut = (w.imag == 0.0) & (np.abs(w.real) >= 1.0)
    if np.any(on_cut):
        raise BranchError("omega lies on the essential spectrum; use lambda_limit")
    lam = np.sqrt(1.0 - w) * np.sqrt(1.0 + w)
    if np.any(lam.real <= 0.0):
        raise BranchError("branch lost positivity of the real part")
    return lam[()] if lam.ndim == 0 else lam


def lambda_limit(k, side: str = "plus"):
    """Boundary value of lambda at omega = sqrt(1 + k^2) +- i0, i.e. -+ i|k|."""
    k = np.abs(np.asarray(k, dtype=float))
    if side == "plus":
        out = np.asarray(-1j * k)
    elif side == "minus":
        out = np.asarray(1j * k)
    else:
        raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")
    return out[()] if out.ndim == 0 else out


def bracket(x):
    """Japanese bracket sqrt(1 + x^2)."""
    return np.hypot(1.0, x)

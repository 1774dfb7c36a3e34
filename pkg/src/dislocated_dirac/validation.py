"""Seeded property suite shared by the ``validate`` command and the test-suite.

Every check draws its samples from its own Philox stream keyed by
(seed, check index), so results depend only on the seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import SIGMA3, TWO_PI, SpinorField, s_matrix
from .oracle import OracleConfig, oracle_evolve, oracle_gap_eigenpair
from .propagator import Propagator
from .spectral import (
    bound_state,
    bound_state_energy,
    d2_t_squared,
    d_t_squared,
    eta,
    explicit_resolvent_entries,
    jost,
    limiting_resolvent_kernel,
    mirror_matrix,
    resolvent_jump_kernel,
    scattering_coeffs,
    t_squared,
)

IDENTITY_TOL = 1e-11


@dataclass(frozen=True)
class CheckResult:
    name: str
    samples: int
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual < self.tolerance)


def rng_for(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


def _rel(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


def _taus(rng, n, margin=0.05):
    return rng.uniform(margin, TWO_PI - margin, n)


def check_jost_symmetry(rng, n=256) -> float:
    """conj xi_+(x; k) = S(tau) xi_-(-x; -k)."""
    worst = 0.0
    for tau, k, x in zip(_taus(rng, n), rng.uniform(-8, 8, n), rng.uniform(-6, 6, n)):
        lhs = np.conj(jost("plus", x, k, tau))
        rhs = s_matrix(tau) @ jost("minus", -x, -k, tau)
        worst = max(worst, _rel(lhs, rhs))
    return worst


def check_eta_symmetry(rng, n=256) -> float:
    """conj eta_+(x; omega) = S(tau) eta_-(-x; conj omega) off the spectrum."""
    worst = 0.0
    for tau, x in zip(_taus(rng, n), rng.uniform(-4, 4, n)):
        omega = complex(rng.uniform(-3, 3), rng.choice([-1, 1]) * rng.uniform(0.05, 3))
        lhs = np.conj(eta("plus", x, omega, tau))
        rhs = s_matrix(tau) @ eta("minus", -x, np.conj(omega), tau)
        worst = max(worst, _rel(lhs, rhs))
    return worst


def check_scattering_relations(rng, n=256) -> float:
    """xi_+(-k) = T1 xi_-(k) - R1 xi_+(k) and xi_-(-k) = T2 xi_+(k) - R2 xi_-(k) at every x."""
    worst = 0.0
    for tau, k in zip(_taus(rng, n), rng.uniform(0.02, 10, n) * rng.choice([-1, 1], n)):
        sd = scattering_coeffs(k, tau)
        x = rng.uniform(-6, 6, 8)
        r1 = jost("plus", x, -k, tau) - (sd.T * jost("minus", x, k, tau) - sd.R1 * jost("plus", x, k, tau))
        r2 = jost("minus", x, -k, tau) - (sd.T2 * jost("plus", x, k, tau) - sd.R2 * jost("minus", x, k, tau))
        worst = max(worst, _rel(r1, 0), _rel(r2, 0))
    return worst


def check_tr_relations(rng, n=256) -> float:
    """T1 = e^{-i tau} T2 and R1/T1 = -e^{i tau} R2(-k)/T2(-k)."""
    worst = 0.0
    for tau, k in zip(_taus(rng, n), rng.uniform(0.02, 10, n)):
        a, b = scattering_coeffs(k, tau), scattering_coeffs(-k, tau)
        worst = max(
            worst,
            _rel(a.T, np.exp(-1j * tau) * a.T2),
            _rel(a.R1 / a.T, -np.exp(1j * tau) * b.R2 / b.T2),
        )
    return worst


def check_jump_identity(rng, n=256) -> float:
    """Rank-two transmission form of the jump equals R(+k) - R(-k) pointwise."""
    tau, k = _taus(rng, n), rng.uniform(0.02, 10, n)
    x, y = rng.uniform(-6, 6, n), rng.uniform(-6, 6, n)
    worst = 0.0
    for i in range(n):
        jump = resolvent_jump_kernel(k[i], tau[i], x[i], y[i])
        diff = (limiting_resolvent_kernel(k[i], tau[i], "plus", x[i], y[i])
                - limiting_resolvent_kernel(k[i], tau[i], "minus", x[i], y[i]))
        worst = max(worst, _rel(jump, diff))
    return worst


def check_explicit_entries(rng, n=256) -> float:
    """Entry tables agree with the Jost-product kernel in all six orderings of (x, y, 0)."""
    orderings = [
        lambda u, v: (v, u),     # x > y > 0
        lambda u, v: (u, -v),    # x >= 0 > y
        lambda u, v: (-u, -v),   # 0 > x > y
        lambda u, v: (u, v),     # y >= x >= 0
        lambda u, v: (-u, v),    # y >= 0 > x
        lambda u, v: (-v, -u),   # 0 > y >= x
    ]
    worst = 0.0
    for i in range(n):
        tau = _taus(rng, 1)[0]
        k = rng.uniform(0.02, 10) * rng.choice([-1, 1])
        u, v = np.sort(rng.uniform(0.01, 6, 2))
        x, y = orderings[i % 6](u, v)
        ref = limiting_resolvent_kernel(abs(k), tau, "plus" if k > 0 else "minus", x, y)
        worst = max(worst, _rel(explicit_resolvent_entries(k, tau, x, y), ref))
    return worst


def check_transmission_bounds(rng, n=256) -> float:
    """Largest violation of the bounds on |T|^2 and its first two k-derivatives."""
    tau, k = _taus(rng, n, 0.0), rng.uniform(1e-3, 20, n)
    s2 = np.sin(tau / 2) ** 2
    t0 = np.array([t_squared(a, b) for a, b in zip(k, tau)])
    t1 = np.array([d_t_squared(a, b) for a, b in zip(k, tau)])
    t2 = np.array([d2_t_squared(a, b) for a, b in zip(k, tau)])
    b0 = np.minimum(1.0, k * k / (k * k + s2))
    b1 = np.minimum.reduce([1 / k, 2 * k / (k * k + s2), 2 / k ** 3])
    b2 = np.minimum.reduce([3 / k ** 2, 8 / (k * k + s2), 7 / k ** 4])
    viol = np.concatenate([t0 - b0, np.abs(t1) - b1, np.abs(t2) - b2])
    return float(max(0.0, viol.max()))


def _fd_residual(f, x, omega, tau, h=1e-4):
    """|(D(tau) - omega) f| at x by centered differences, relative to |f(x)|."""
    d = (f(x + h) - f(x - h)) / (2 * h)
    mass = np.where(x < 0, 1.0, np.exp(-1j * tau))
    m = np.array([[0, mass], [np.conj(mass), 0]])
    r = 1j * SIGMA3 @ d + m @ f(x) - omega * f(x)
    return float(np.linalg.norm(r) / max(1.0, np.linalg.norm(f(x))))


def check_bound_state(rng, n=64) -> float:
    """Finite-difference eigen-residual of the gap state away from the interface."""
    worst = 0.0
    for tau in _taus(rng, n):
        w = bound_state_energy(tau)
        for x in rng.uniform(0.05, 5, 2) * np.array([1, -1]):
            worst = max(worst, _fd_residual(lambda z: bound_state(tau, z), x, w, tau))
    return worst


def check_mirror_eigenfunction(rng, n=64) -> float:
    """M xi_+(-x; k, 2 pi - tau) solves the equation at energy -sqrt(1+k^2)."""
    worst = 0.0
    for tau, k in zip(_taus(rng, n), rng.uniform(0.05, 5, n)):
        m = mirror_matrix(tau)

        def f(z, tau=tau, k=k, m=m):
            return m @ jost("plus", -z, k, TWO_PI - tau)

        for x in rng.uniform(0.05, 5, 2) * np.array([1, -1]):
            worst = max(worst, _fd_residual(f, x, -math.sqrt(1 + k * k), tau))
    return worst


def check_oracle_spectrum(rng, n=2) -> float:
    """Largest of eigenvalue error / 5e-4 and eigenvector distance / 1e-3 against the grid solver."""
    worst = 0.0
    for tau in rng.uniform(0.5, TWO_PI - 0.5, n):
        s = math.sin(tau / 2)
        cfg = OracleConfig(L=max(20.0, 14.0 / s), h=0.01, dt=0.01)
        w, f = oracle_gap_eigenpair(tau, cfg)
        psi = bound_state(tau, f.x)
        j0 = int(np.argmin(np.abs(f.x)))
        psi = psi / (psi[j0, 0] / abs(psi[j0, 0]))
        dist = math.sqrt(float(np.sum(np.abs(f.samples - psi) ** 2)) * f.grid.h)
        worst = max(worst, abs(w - bound_state_energy(tau)) / 5e-4, dist / 1e-3)
    return worst


def check_oracle_evolution(rng, n=1) -> float:
    """Relative L2 gap between the spectral propagator and Crank-Nicolson at t = 2."""
    worst = 0.0
    cfg = OracleConfig(L=12.0, h=0.01, dt=0.005)
    grid = cfg.grid
    for tau in rng.uniform(0.3, TWO_PI - 0.3, n):
        c = rng.uniform(-1, 1)
        datum = SpinorField.from_function(
            grid,
            lambda x: np.stack([np.exp(-(x - c) ** 2 / 2), 0.5j * np.exp(-(x + c) ** 2 / 2)], -1)
            * (np.abs(x) <= 5)[:, None],
        )
        prop = Propagator(datum, tau)
        smooth = prop.full(0.0, grid.x, grid).field
        ref = oracle_evolve(smooth, 2.0, tau, cfg)
        spec = prop.full(2.0, grid.x, grid).field
        worst = max(worst, (spec - ref).norm() / ref.norm())
    return worst


SUITE: list[tuple[str, Callable, float, int]] = [
    ("jost_symmetry", check_jost_symmetry, IDENTITY_TOL, 256),
    ("eta_symmetry", check_eta_symmetry, IDENTITY_TOL, 256),
    ("scattering_relations", check_scattering_relations, IDENTITY_TOL, 256),
    ("transmission_reflection_relations", check_tr_relations, IDENTITY_TOL, 256),
    ("jump_identity", check_jump_identity, IDENTITY_TOL, 256),
    ("explicit_entries", check_explicit_entries, IDENTITY_TOL, 256),
    ("transmission_bounds", check_transmission_bounds, IDENTITY_TOL, 256),
    ("bound_state_residual", check_bound_state, 1e-6, 64),
    ("mirror_eigenfunction_residual", check_mirror_eigenfunction, 1e-6, 64),
    ("oracle_spectrum", check_oracle_spectrum, 1.0, 2),
    ("oracle_evolution", check_oracle_evolution, 5e-3, 1),
]

IDENTITY_CHECKS = [name for name, _, tol, _ in SUITE if tol == IDENTITY_TOL]


def run_suite(seed: int, names=None) -> list[CheckResult]:
    out = []
    for index, (name, fn, tol, n) in enumerate(SUITE):
        if names is not None and name not in names:
            continue
        out.append(CheckResult(name, n, fn(rng_for(seed, index), n), tol))
    return out

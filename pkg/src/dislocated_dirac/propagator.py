"""Time evolution of smoothed data through the spectral representation.

The continuous part of exp(-i D t) is a k-integral of the resolvent jump
applied to the datum. The jump is rank two in the Jost solutions, so for a
fixed datum everything reduces to a handful of half-line Fourier transforms
of the datum, followed by sums of the form

    sum_n W_n [P_n exp(i k_n x) + Q_n exp(-i k_n x)]

over Gauss-Kronrod nodes. The factor k^2 / (k^2 + s^2) carried by |T|^2 is
cancelled against the 1/k poles of the Jost solutions, so no node ever sees
a 0/0. The negative energy branch is obtained from the positive branch of
D(2 pi - tau) through the reflection symmetry.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import SIGMA3, TWO_PI, SpatialGrid, SpinorField, as_tau, s_matrix
from .quadrature import (
    PiecewiseChebyshev,
    band_support,
    band_weight,
    filon_linear,
    panel_nodes,
    smoothstep_cutoff,
    split_at_zero,
    subdivide,
)
from .spectral import bound_state, bound_state_energy, jost, mirror_matrix

MULTIPLIER_CONVENTION = (
    "continuum: <k>^(-3/2-eps) = |omega|^(-3/2-eps); "
    "gap eigenvalue: <omega_tau>^(-3/2-eps)"
)


class QuadratureToleranceWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class PropagatorConfig:
    epsilon: float = 1.0
    k0: float = 1.0
    k_max: float = 200.0
    quad_rel_tol: float = 1e-8
    quad_abs_tol: float = 1e-10
    max_band: int | None = None
    points_per_wavelength: int = 16
    smoothing: bool = True

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.k0 < self.k_max:
            raise ValueError("need 0 < k0 < k_max")
        if not (self.quad_rel_tol > 0 and self.quad_abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.points_per_wavelength < 8:
            raise ValueError("points_per_wavelength must be at least 8")
        need = self.bands_needed()
        if self.max_band is not None and self.max_band < need:
            raise ValueError(f"k_max requires {need} dyadic bands, max_band is {self.max_band}")

    @property
    def power(self) -> float:
        return 1.5 + self.epsilon

    def bands_needed(self) -> int:
        """Index of the last dyadic band touching [k0, k_max]."""
        return max(0, math.ceil(math.log2(self.k_max / self.k0)) - 1)

    def weight(self, omega):
        """Spectral multiplier on the continuum, a function of |omega|."""
        omega = np.abs(np.asarray(omega, dtype=float))
        if not self.smoothing:
            return np.ones_like(omega)
        return omega ** (-self.power)

    def bound_weight(self, omega_tau: float) -> float:
        if not self.smoothing:
            return 1.0
        return (1.0 + omega_tau * omega_tau) ** (-self.power / 2.0)


@dataclass
class Diagnostics:
    band_errors: np.ndarray
    band_norms: np.ndarray
    quad_error: float
    tail_bound: float
    n_nodes: int
    tolerance_met: bool

    def merge(self, other: "Diagnostics") -> "Diagnostics":
        nb = max(len(self.band_errors), len(other.band_errors))

        def pad(a):
            return np.pad(a, (0, nb - len(a)))

        return Diagnostics(
            band_errors=pad(self.band_errors) + pad(other.band_errors),
            band_norms=pad(self.band_norms) + pad(other.band_norms),
            quad_error=self.quad_error + other.quad_error,
            tail_bound=self.tail_bound + other.tail_bound,
            n_nodes=self.n_nodes + other.n_nodes,
            tolerance_met=self.tolerance_met and other.tolerance_met,
        )

    @classmethod
    def empty(cls) -> "Diagnostics":
        return cls(np.zeros(0), np.zeros(0), 0.0, 0.0, 0, True)


@dataclass
class EvolutionResult:
    x: np.ndarray
    values: np.ndarray
    diagnostics: Diagnostics
    grid: SpatialGrid | None = None

    @property
    def field(self) -> SpinorField:
        if self.grid is None:
            raise ValueError("result was evaluated at scattered points, not on a grid")
        return SpinorField(self.grid, self.values)

    def __add__(self, other: "EvolutionResult") -> "EvolutionResult":
        return EvolutionResult(
            self.x, self.values + other.values, self.diagnostics.merge(other.diagnostics), self.grid
        )


# ------------------------------------------------------------------ node design


@dataclass(frozen=True)
class NodeSet:
    k: np.ndarray
    wk: np.ndarray
    wg: np.ndarray
    band: np.ndarray
    frac: np.ndarray
    nbands: int


def design_nodes(rate_t: float, rate_x: float, s: float, cfg: PropagatorConfig) -> NodeSet:
    """Composite Gauss-Kronrod nodes on [0, k_max] with breakpoints at k0 2^j.

    Panels are sized so that each holds at most 15/ppw wavelengths of the
    phase |t| sqrt(1+k^2) -+ k x, whose k-derivative is bounded by
    ``rate_t * k/omega + rate_x``. Near k = 0 the panels are refined
    geometrically down to the scale ``s`` of the transmission factor.
    """
    k0, kmax = cfg.k0, cfg.k_max
    edges = [0.0, k0]
    j = 1
    while k0 * 2.0 ** j < kmax:
        edges.append(k0 * 2.0 ** j)
        j += 1
    edges.append(kmax)
    if 0.0 < s < k0 / 4:
        fine = [s * 2.0 ** m for m in range(-4, 64) if s * 2.0 ** m < k0]
        edges = sorted(set(edges) | set(fine))
    span = 2.0 * math.pi * 15.0 / cfg.points_per_wavelength
    pieces = []
    for a, b in zip(edges[:-1], edges[1:]):
        rate = abs(rate_t) * b / math.sqrt(1.0 + b * b) + rate_x + 1e-300
        pieces.append(subdivide(a, b, span / rate)[:-1])
    all_edges = np.append(np.concatenate(pieces), kmax)
    k, wk, wg = panel_nodes(all_edges)
    mids = 0.5 * (all_edges[:-1] + all_edges[1:])
    pband = np.where(mids < k0, 0, np.floor(np.log2(np.maximum(mids, k0) / k0)).astype(np.int64))
    band = np.repeat(pband, 15)
    frac = np.where(k < k0, 1.0, smoothstep_cutoff(k / 2.0 ** band, k0))
    return NodeSet(k, wk, wg, band, frac, int(pband.max()) + 2)


# ------------------------------------------------------------- datum transforms


def _support_radius(field: SpinorField) -> float:
    nz = np.flatnonzero(np.any(field.samples != 0, axis=1))
    if nz.size == 0:
        return 0.0
    x = field.x
    lo, hi = max(nz[0] - 1, 0), min(nz[-1] + 1, x.size - 1)
    return float(max(abs(x[lo]), abs(x[hi])))


class HalfLineTransforms:
    """k -> (R+, R-, L+, L-) half-line Fourier transforms of both components.

    Columns are ordered (R+_1, R+_2, R-_1, R-_2, L+_1, L+_2, L-_1, L-_2) with
    R+-_j = int_0^inf e^{+-iky} a_j dy and L the same over (-inf, 0].
    """

    def __init__(self, field: SpinorField, k_max: float, exact: bool = False):
        (self._xl, self._fl), (self._xr, self._fr) = split_at_zero(field.x, field.samples)
        self.radius = max(_support_radius(field), 1e-3)
        self.exact = exact
        self._cheb = None
        if not exact:
            width = min(1.0, 4.0 / self.radius)
            self._cheb = PiecewiseChebyshev(self._exact, k_max, width)

    def _exact(self, k):
        k = np.asarray(k, dtype=float)
        # the e^{-iky} transform is the conjugate of the e^{iky} transform of conj(f)
        r = filon_linear(self._xr, np.concatenate([self._fr, np.conj(self._fr)], axis=1), k)
        lt = filon_linear(self._xl, np.concatenate([self._fl, np.conj(self._fl)], axis=1), k)
        return np.concatenate([r[:, :2], np.conj(r[:, 2:]), lt[:, :2], np.conj(lt[:, 2:])], axis=1)

    def __call__(self, k):
        if self._cheb is None:
            return self._exact(k)
        return self._cheb(k)


def _overlaps(k, tau, tr):
    """C+-(k) = int (k' xi_+-(y; k'))^T sigma_1 a(y) dy at k' = -k."""
    e = np.exp(-1j * tau)
    ep = np.conj(e)
    om = np.sqrt(1.0 + k * k)
    a, b = om + k, om - k
    rp1, rp2, rm1, rm2, lp1, lp2, lm1, lm2 = (tr[:, i] for i in range(8))
    # scaled matching coefficients at -k
    am = (e - 1.0) * b / 2.0
    bm = (om * (1.0 - e) - k * (1.0 + e)) / 2.0
    cm = (om * (ep - 1.0) - k * (ep + 1.0)) / 2.0
    dm = (1.0 - ep) * a / 2.0
    cplus = -k * (e * rm2 + b * rm1) + am * (lp2 + a * lp1) + bm * (lm2 + b * lm1)
    cminus = -k * (lp2 + a * lp1) + cm * (e * rp2 + a * rp1) + dm * (e * rm2 + b * rm1)
    return cplus, cminus


def _coefficients(k, tau, tr):
    """Node coefficients (PL, QL, PR, QR) of the regularised integrand, without the scalar prefactor."""
    cplus, cminus = _overlaps(k, tau, tr)
    e = np.exp(-1j * tau)
    ep = np.conj(e)
    om = np.sqrt(1.0 + k * k)
    a, b = om + k, om - k
    # scaled matching coefficients at +k
    ka = (e - 1.0) * a / 2.0
    kb = (om * (1.0 - e) + k * (1.0 + e)) / 2.0
    kc = (om * (ep - 1.0) + k * (ep + 1.0)) / 2.0
    kd = (1.0 - ep) * b / 2.0
    one = np.ones_like(k)
    pr_s = k * cplus + e * cminus * kd
    qr_s = e * cminus * kc
    pl_s = cplus * kb
    ql_s = cplus * ka + e * cminus * k
    PR = np.stack([pr_s * e, pr_s * a], axis=1)
    QR = np.stack([qr_s * e, qr_s * b], axis=1)
    PL = np.stack([pl_s * one, pl_s * a], axis=1)
    QL = np.stack([ql_s * one, ql_s * b], axis=1)
    return PL, QL, PR, QR


# --------------------------------------------------------------------- branches


class _PositiveBranch:
    """Positive-energy continuum evolution for one datum and one tau."""

    def __init__(self, field: SpinorField, tau: float, cfg: PropagatorConfig, exact=False):
        self.tau = tau
        self.cfg = cfg
        self.s = abs(math.sin(tau / 2.0))
        self.transforms = HalfLineTransforms(field, cfg.k_max, exact=exact)
        self.radius = self.transforms.radius
        self.l1 = float(np.sum(np.linalg.norm(field.samples, axis=1)) * field.grid.h)

    def _scalar(self, k, t):
        om = np.sqrt(1.0 + k * k)
        e = np.exp(-1j * self.tau)
        return -np.exp(-1j * om * t) * self.cfg.weight(om) / (4.0 * math.pi * e * om * (k * k + self.s ** 2))

    def node_arrays(self, t, xmax):
        """Nodes and scaled (P, Q) arrays; negligible panels are dropped.

        A panel is dropped only while the running sum of the dropped bounds
        sum_n w_n (|P_n| + |Q_n|), valid for every x, stays below a hundredth
        of the absolute tolerance. The dropped mass is returned.
        """
        nodes = design_nodes(t, xmax + self.radius, self.s, self.cfg)
        tr = self.transforms(nodes.k)
        pl, ql, pr, qr = _coefficients(nodes.k, self.tau, tr)
        g = self._scalar(nodes.k, t)[:, None]
        arrays = (g * pl, g * ql, g * pr, g * qr)
        mag = np.maximum(
            np.abs(arrays[0]).sum(1) + np.abs(arrays[1]).sum(1),
            np.abs(arrays[2]).sum(1) + np.abs(arrays[3]).sum(1),
        )
        bound = (nodes.wk * mag).reshape(-1, 15).sum(axis=1)
        order = np.argsort(bound, kind="stable")
        dropped = np.cumsum(bound[order]) <= 0.01 * self.cfg.quad_abs_tol
        keep_panel = np.ones(bound.size, dtype=bool)
        keep_panel[order[dropped]] = False
        pruned = float(bound[~keep_panel].sum())
        keep = np.repeat(keep_panel, 15)
        nodes = NodeSet(nodes.k[keep], nodes.wk[keep], nodes.wg[keep], nodes.band[keep],
                        nodes.frac[keep], nodes.nbands)
        return nodes, tuple(a[keep] for a in arrays), pruned

    def tail_bound(self) -> float:
        """Estimated size of the integral beyond k_max, scaling like k_max^(-1/2-eps)."""
        kk = np.array([self.cfg.k_max])
        tr = self.transforms._exact(kk)
        pl, ql, pr, qr = _coefficients(kk, self.tau, tr)
        g = np.abs(self._scalar(kk, 0.0))[0]
        env = g * max(
            np.abs(pl).sum() + np.abs(ql).sum(), np.abs(pr).sum() + np.abs(qr).sum()
        )
        decay = self.cfg.power - 1.0 if self.cfg.smoothing else 1.0
        return float(env * self.cfg.k_max / decay)

    def evaluate(self, t, xs, which=None):
        xs = np.asarray(xs, dtype=float)
        xmax = float(np.max(np.abs(xs))) if xs.size else 0.0
        nodes, (pl, ql, pr, qr), pruned = self.node_arrays(t, xmax)
        vals, errs = _kernels.band_sums(
            nodes.k, nodes.wk, nodes.wg, nodes.band, nodes.frac, pl, ql, pr, qr, xs,
            nodes.nbands, which=which,
        )
        values = vals.sum(axis=0)
        band_err = errs.max(axis=1) if xs.size else np.zeros(nodes.nbands)
        band_norm = np.abs(vals).max(axis=(1, 2)) if xs.size else np.zeros(nodes.nbands)
        quad_err = (float(errs.sum(axis=0).max()) if xs.size else 0.0) + pruned
        scale = float(np.abs(values).max()) if xs.size else 0.0
        ok = quad_err <= max(self.cfg.quad_abs_tol, self.cfg.quad_rel_tol * scale)
        diag = Diagnostics(band_err, band_norm, quad_err, self.tail_bound(), nodes.k.size, ok)
        return values, diag


def _reflect(field: SpinorField, tau: float) -> SpinorField:
    """(U a)(x) = sigma_3 S(tau) a(-x), sampled on the mirrored grid."""
    g = field.grid
    mg = SpatialGrid(-g.x_max, -g.x_min, g.n)
    u = SIGMA3 @ s_matrix(tau)
    return SpinorField(mg, field.samples[::-1] @ u.T)


class Propagator:
    """Evolution of one datum under D(tau): both continuum branches and the bound state.

    Half-line transforms of the datum are computed once and reused across
    every time and output point.
    """

    def __init__(self, datum: SpinorField, tau, cfg: PropagatorConfig | None = None, *, exact=False):
        self.tau = as_tau(tau)
        self.cfg = cfg or PropagatorConfig()
        self.datum = datum
        self._exact = exact
        self._pos = None
        self._neg = None
        if datum.samples[0].any() or datum.samples[-1].any():
            warnings.warn("datum does not vanish at the grid boundary", RuntimeWarning, stacklevel=2)

    @property
    def pos(self) -> _PositiveBranch:
        if self._pos is None:
            self._pos = _PositiveBranch(self.datum, self.tau, self.cfg, self._exact)
        return self._pos

    @property
    def neg(self) -> _PositiveBranch:
        if self._neg is None:
            dual = _reflect(self.datum, self.tau)
            self._neg = _PositiveBranch(dual, TWO_PI - self.tau, self.cfg, self._exact)
        return self._neg

    def _wrap(self, values, diag, xs, grid):
        if not diag.tolerance_met:
            warnings.warn(
                f"quadrature error estimate {diag.quad_error:.3e} above tolerance",
                QuadratureToleranceWarning, stacklevel=3,
            )
        return EvolutionResult(xs, values, diag, grid)

    def positive(self, t, xs, grid=None, which=None) -> EvolutionResult:
        xs = np.asarray(xs, dtype=float)
        values, diag = self.pos.evaluate(float(t), xs, which)
        return self._wrap(values, diag, xs, grid)

    def negative(self, t, xs, grid=None, which=None) -> EvolutionResult:
        xs = np.asarray(xs, dtype=float)
        values, diag = self.neg.evaluate(-float(t), -xs, which)
        values = values @ mirror_matrix(self.tau).T
        return self._wrap(values, diag, xs, grid)

    def bound_amplitude(self) -> complex:
        if self.tau in (0.0, TWO_PI):
            return 0j
        psi = SpinorField(self.datum.grid, bound_state(self.tau, self.datum.x))
        return psi.inner(self.datum) / psi.inner(psi)

    def bound(self, t, xs, grid=None) -> EvolutionResult:
        xs = np.asarray(xs, dtype=float)
        if self.tau in (0.0, TWO_PI):
            values = np.zeros(xs.shape + (2,), dtype=complex)
        else:
            w = bound_state_energy(self.tau)
            c = self.bound_amplitude() * np.exp(-1j * w * t) * self.cfg.bound_weight(w)
            values = c * bound_state(self.tau, xs)
        return EvolutionResult(xs, values, Diagnostics.empty(), grid)

    def ac(self, t, xs, grid=None, which=None) -> EvolutionResult:
        return self.positive(t, xs, grid, which) + self.negative(t, xs, grid, which)

    def full(self, t, xs, grid=None, which=None) -> EvolutionResult:
        return self.ac(t, xs, grid, which) + self.bound(t, xs, grid)


# ----------------------------------------------------------- functional surface


def _grid_points(alpha0: SpinorField, out_grid):
    grid = out_grid or alpha0.grid
    return grid, grid.x


def project_ac(alpha0: SpinorField, tau) -> SpinorField:
    """Remove the bound-state component using the grid inner product (an exact projector on the grid)."""
    tau = as_tau(tau)
    if tau in (0.0, TWO_PI):
        return alpha0
    psi = SpinorField(alpha0.grid, bound_state(tau, alpha0.x))
    c = psi.inner(alpha0) / psi.inner(psi)
    return alpha0 - psi.scale(c)


def spectral_density(alpha0: SpinorField, x, k, tau, epsilon: float = 1.0, smoothing: bool = True):
    """F(x; k) = <k>^(-3/2-eps) int [xi_+(x;k) xi_+(y;-k)^T + e xi_-(x;k) xi_-(y;-k)^T] sigma_1 a(y) dy."""
    tau = as_tau(tau)
    k = float(k)
    if k == 0.0:
        raise ZeroDivisionError("F is evaluated at k > 0; the propagator uses the cancelled form at k = 0")
    if not np.any(alpha0.samples):
        return np.zeros(np.shape(x) + (2,), dtype=complex)
    r = _support_radius(alpha0)
    g = alpha0.x
    if (alpha0.samples[0].any() or alpha0.samples[-1].any()) and r >= max(abs(g[0]), abs(g[-1])):
        warnings.warn("datum support touches the grid boundary", RuntimeWarning, stacklevel=2)
    tr = HalfLineTransforms(alpha0, abs(k) + 1.0, exact=True)(np.array([abs(k)]))
    cp, cm = _overlaps(np.array([abs(k)]), tau, tr)
    cp, cm = cp[0] / -k, cm[0] / -k
    e = np.exp(-1j * tau)
    om = math.sqrt(1.0 + k * k)
    w = om ** (-(1.5 + epsilon)) if smoothing else 1.0
    return w * (jost("plus", x, k, tau) * cp + e * jost("minus", x, k, tau) * cm)


def evolve_positive_branch(alpha0: SpinorField, t, tau, cfg=None, out_grid=None) -> EvolutionResult:
    grid, xs = _grid_points(alpha0, out_grid)
    return Propagator(alpha0, tau, cfg).positive(t, xs, grid)


def evolve_negative_branch(alpha0: SpinorField, t, tau, cfg=None, out_grid=None) -> EvolutionResult:
    grid, xs = _grid_points(alpha0, out_grid)
    return Propagator(alpha0, tau, cfg).negative(t, xs, grid)


def evolve_bound(alpha0: SpinorField, t, tau, cfg=None, out_grid=None) -> SpinorField:
    grid, xs = _grid_points(alpha0, out_grid)
    return Propagator(alpha0, tau, cfg).bound(t, xs, grid).field


def evolve_full(alpha0: SpinorField, t, tau, cfg=None, out_grid=None) -> EvolutionResult:
    grid, xs = _grid_points(alpha0, out_grid)
    return Propagator(alpha0, tau, cfg).full(t, xs, grid)


def oscillatory_band_integral(integrand, t, band_index: int, cfg=None, rate_x: float = 0.0):
    """int rho_j(k) exp(-i t sqrt(1+k^2)) g(k) dk over band j (j = -1 is the low band chi).

    Panels follow the same oscillation-density rule as the propagator, with
    ``rate_x`` the extra k-frequency of ``g``. Returns (value, error estimate).
    """
    cfg = cfg or PropagatorConfig()
    lo, hi = band_support(band_index, cfg.k0)
    span = 2.0 * math.pi * 15.0 / cfg.points_per_wavelength
    rate = abs(t) * hi / math.sqrt(1.0 + hi * hi) + rate_x + 1e-300
    # the cutoff is piecewise polynomial between lo, 2 lo (k0 for the low band) and hi
    mid = cfg.k0 if band_index < 0 else 2.0 * lo
    width = min(span / rate, (hi - lo) / 4.0)
    edges = np.concatenate([subdivide(lo, mid, width)[:-1], subdivide(mid, hi, width)])
    k, wk, wg = panel_nodes(edges)
    f = band_weight(k, band_index, cfg.k0) * np.exp(-1j * t * np.sqrt(1.0 + k * k)) * integrand(k)
    fp = f.reshape(-1, 15)
    wkp, wgp = wk.reshape(-1, 15), wg.reshape(-1, 15)
    kr = (fp * wkp).sum(axis=1)
    gr = (fp * wgp).sum(axis=1)
    length = wkp.sum(axis=1)
    resasc = (np.abs(fp - (kr / length)[:, None]) * wkp).sum(axis=1)
    resabs = (np.abs(fp) * wkp).sum(axis=1)
    err = sum(
        _kernels._quadpack_error(d, ra, rb) for d, ra, rb in zip(np.abs(kr - gr), resasc, resabs)
    )
    return complex(kr.sum()), float(err)


__all__ = [
    "MULTIPLIER_CONVENTION",
    "Diagnostics",
    "EvolutionResult",
    "Propagator",
    "PropagatorConfig",
    "QuadratureToleranceWarning",
    "design_nodes",
    "evolve_bound",
    "evolve_full",
    "evolve_negative_branch",
    "evolve_positive_branch",
    "oscillatory_band_integral",
    "project_ac",
    "spectral_density",
]

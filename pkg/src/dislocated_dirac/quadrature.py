"""Quadrature building blocks: Gauss-Kronrod panels, the smooth cutoff and its
dyadic bands, Filon-linear half-line Fourier transforms and piecewise
Chebyshev interpolation.
"""
from __future__ import annotations

import math

import numpy as np

# QUADPACK 15-point Kronrod abscissae (symmetric half, descending) and weights;
# every odd entry is also a 7-point Gauss node.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

GK_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
GK_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
_g = np.zeros(15)
_g[1::2] = np.concatenate([_WG[:-1], _WG[::-1]])
G_WEIGHTS = _g
del _g


def smoothstep_cutoff(k, k0: float):
    """C^2 cutoff: 1 for k <= k0, 0 for k >= 2 k0, quintic smoothstep between."""
    u = np.clip((np.asarray(k, dtype=float) - k0) / k0, 0.0, 1.0)
    return 1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)


def band_weight(k, j: int, k0: float):
    """Dyadic band rho_j(k) = chi(k / 2^(j+1)) - chi(k / 2^j); j = -1 is chi itself."""
    k = np.asarray(k, dtype=float)
    if j < 0:
        return smoothstep_cutoff(k, k0)
    return smoothstep_cutoff(k / 2.0 ** (j + 1), k0) - smoothstep_cutoff(k / 2.0 ** j, k0)


def band_support(j: int, k0: float):
    if j < 0:
        return 0.0, 2.0 * k0
    return k0 * 2.0 ** j, k0 * 2.0 ** (j + 2)


def panel_nodes(edges):
    """Nodes and Kronrod/Gauss weights for consecutive panels [edges[i], edges[i+1]]."""
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    k = (mid[:, None] + half[:, None] * GK_NODES[None, :]).ravel()
    wk = (half[:, None] * GK_WEIGHTS[None, :]).ravel()
    wg = (half[:, None] * G_WEIGHTS[None, :]).ravel()
    return k, wk, wg


def subdivide(a: float, b: float, width: float):
    """Split [a, b] into equal panels no wider than ``width``."""
    n = max(1, int(math.ceil((b - a) / width - 1e-12)))
    return np.linspace(a, b, n + 1)


# --------------------------------------------------------------- Filon-linear


def _phi01(theta):
    """int_0^1 e^{i theta u} du and int_0^1 u e^{i theta u} du."""
    theta = np.asarray(theta, dtype=float)
    small = np.abs(theta) < 0.05
    ts = np.where(small, 1.0, theta)
    ex = np.exp(1j * ts)
    p0 = (ex - 1.0) / (1j * ts)
    p1 = ex / (1j * ts) + (ex - 1.0) / (ts * ts)
    it = 1j * np.where(small, theta, 0.0)
    s0 = np.zeros_like(it)
    s1 = np.zeros_like(it)
    term = np.ones_like(it)
    for n in range(12):
        s0 += term / (n + 1)
        s1 += term / (n + 2)
        term = term * it / (n + 1)
    return np.where(small, s0, p0), np.where(small, s1, p1)


def filon_linear(y, f, kappa, chunk_elems: int = 4_000_000):
    """Exact integral of exp(i kappa y) times the piecewise-linear interpolant of f.

    ``y`` (m,) increasing nodes, ``f`` (m, c) values, ``kappa`` (n,) real.
    Returns (n, c). Segments sharing a width share their Filon moments, so a
    uniform grid costs one exponential per (kappa, node).
    """
    y = np.asarray(y, dtype=float)
    f = np.asarray(f, dtype=complex)
    if f.ndim == 1:
        f = f[:, None]
    kappa = np.asarray(kappa, dtype=float)
    h = np.diff(y)
    keep = h > 0
    ya, h = y[:-1][keep], h[keep]
    fa, fb = f[:-1][keep], f[1:][keep]
    hq = np.round(h / h.max(), 9)
    groups = [np.flatnonzero(hq == v) for v in np.unique(hq)]
    out = np.zeros((kappa.size, f.shape[1]), dtype=complex)
    step = max(1, chunk_elems // max(1, ya.size))
    for lo in range(0, kappa.size, step):
        kc = kappa[lo:lo + step]
        for idx in groups:
            hg = h[idx[0]]
            p0, p1 = _phi01(kc * hg)
            ex = np.exp(1j * kc[:, None] * ya[idx][None, :])
            out[lo:lo + step] += hg * (
                (p0 - p1)[:, None] * (ex @ fa[idx]) + p1[:, None] * (ex @ fb[idx])
            )
    return out


def split_at_zero(x, f):
    """Left (x <= 0) and right (x >= 0) pieces of a sampled function, sharing x = 0."""
    x = np.asarray(x, dtype=float)
    f = np.asarray(f)
    j = int(np.searchsorted(x, 0.0))
    if j < x.size and x[j] == 0.0:
        f0 = f[j]
        xl, fl = x[: j + 1], f[: j + 1]
        xr, fr = x[j:], f[j:]
    else:
        t = -x[j - 1] / (x[j] - x[j - 1])
        f0 = (1.0 - t) * f[j - 1] + t * f[j]
        xl = np.append(x[:j], 0.0)
        fl = np.concatenate([f[:j], f0[None]])
        xr = np.insert(x[j:], 0, 0.0)
        fr = np.concatenate([f0[None], f[j:]])
    return (xl, fl), (xr, fr)


# ------------------------------------------------------ Chebyshev interpolation


class PiecewiseChebyshev:
    """Barycentric Chebyshev interpolation of a vector-valued function on [0, b].

    ``func(k) -> (n, c)`` is sampled on ``degree`` first-kind points in each of
    equal panels of width at most ``width``.
    """

    def __init__(self, func, b: float, width: float, degree: int = 24):
        self.edges = subdivide(0.0, b, width)
        self.h = self.edges[1] - self.edges[0]
        j = np.arange(degree)
        theta = (2 * j + 1) * np.pi / (2 * degree)
        self.t = -np.cos(theta)
        self.bw = (-1.0) ** j * np.sin(theta)
        self.b = b
        a = self.edges[:-1]
        nodes = (a[:, None] + 0.5 * self.h * (self.t[None, :] + 1.0)).ravel()
        self.vals = np.asarray(func(nodes)).reshape(len(a), degree, -1)

    def __call__(self, k, chunk: int = 200_000):
        k = np.asarray(k, dtype=float)
        out = np.empty((k.size, self.vals.shape[-1]), dtype=complex)
        npan = self.vals.shape[0]
        for lo in range(0, k.size, chunk):
            kc = k[lo:lo + chunk]
            p = np.clip(((kc - self.edges[0]) // self.h).astype(int), 0, npan - 1)
            u = 2.0 * (kc - self.edges[p]) / self.h - 1.0
            d = u[:, None] - self.t[None, :]
            hit = d == 0.0
            d = np.where(hit, 1.0, d)
            c = self.bw[None, :] / d
            c = np.where(hit.any(axis=1, keepdims=True), hit.astype(float), c)
            num = np.einsum("nj,njc->nc", c, self.vals[p])
            out[lo:lo + chunk] = num / c.sum(axis=1)[:, None]
        return out

"""Hot loops of the oscillatory quadrature.

Two interchangeable backends compute the same per-band sums. The numba one
is used when numba imports and ``DISLOCATED_DIRAC_BACKEND`` is not set to
``numpy``.

Integrand at node n and output point x:

    f_n(x) = P_n exp(i k_n x) + Q_n exp(-i k_n x)

with (P, Q) taken from the left-medium arrays when x < 0 and from the
right-medium arrays otherwise. Nodes come in Gauss-Kronrod panels of 15. Each
panel sits in one dyadic interval, so it feeds two bands: ``band[n]`` with
weight ``frac[n]`` and ``band[n] + 1`` with weight ``1 - frac[n]``.
"""
from __future__ import annotations

import os

import numpy as np

PANEL = 15
UNIFORM_CHUNK = 512
_EPS = np.finfo(float).eps

try:  # pragma: no cover - exercised implicitly
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False


def backend() -> str:
    """Active backend name, ``"numba"`` or ``"numpy"``."""
    want = os.environ.get("DISLOCATED_DIRAC_BACKEND", "numba").strip().lower()
    if want == "numpy" or not HAVE_NUMBA:
        return "numpy"
    return "numba"


def set_threads(n: int | None) -> None:
    if n and HAVE_NUMBA:
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


def _quadpack_error(diff, resasc, resabs):
    if resasc != 0.0 and diff != 0.0:
        err = resasc * min(1.0, (200.0 * diff / resasc) ** 1.5)
    else:
        err = diff
    floor = 50.0 * _EPS * resabs
    return max(err, floor)


if HAVE_NUMBA:

    @njit(cache=True)
    def _quadpack_error_nb(diff, resasc, resabs):
        if resasc != 0.0 and diff != 0.0:
            r = (200.0 * diff / resasc) ** 1.5
            if r > 1.0:
                r = 1.0
            err = resasc * r
        else:
            err = diff
        floor = 50.0 * 2.220446049250313e-16 * resabs
        return err if err > floor else floor

    @njit(inline="always")
    def _abs2(z):
        return z.real * z.real + z.imag * z.imag

    @njit(parallel=True, cache=True)
    def _band_sums_nb(k, wk, wg, band, frac, pl, ql, pr, qr, xs, nbands):
        nx = xs.shape[0]
        npan = k.shape[0] // 15
        vals = np.zeros((nbands, nx, 2), dtype=np.complex128)
        errs = np.zeros((nbands, nx), dtype=np.float64)
        for ix in prange(nx):
            x = xs[ix]
            left = x < 0.0
            f0 = np.empty(15, dtype=np.complex128)
            f1 = np.empty(15, dtype=np.complex128)
            for p in range(npan):
                base = p * 15
                k0_0 = 0j
                k0_1 = 0j
                g0 = 0j
                g1 = 0j
                a0 = 0j
                a1 = 0j
                length = 0.0
                fsum = 0.0
                for m in range(15):
                    n = base + m
                    arg = k[n] * x
                    c = np.cos(arg)
                    s = np.sin(arg)
                    ph = complex(c, s)
                    phc = complex(c, -s)
                    if left:
                        v0 = pl[n, 0] * ph + ql[n, 0] * phc
                        v1 = pl[n, 1] * ph + ql[n, 1] * phc
                    else:
                        v0 = pr[n, 0] * ph + qr[n, 0] * phc
                        v1 = pr[n, 1] * ph + qr[n, 1] * phc
                    f0[m] = v0
                    f1[m] = v1
                    w = wk[n]
                    k0_0 += w * v0
                    k0_1 += w * v1
                    g0 += wg[n] * v0
                    g1 += wg[n] * v1
                    a0 += w * frac[n] * v0
                    a1 += w * frac[n] * v1
                    length += w
                    fsum += w * frac[n]
                mean0 = k0_0 / length
                mean1 = k0_1 / length
                resasc = 0.0
                resabs = 0.0
                for m in range(15):
                    w = wk[base + m]
                    d0 = f0[m] - mean0
                    d1 = f1[m] - mean1
                    resasc += w * np.sqrt(_abs2(d0) + _abs2(d1))
                    resabs += w * np.sqrt(_abs2(f0[m]) + _abs2(f1[m]))
                diff = np.sqrt(_abs2(k0_0 - g0) + _abs2(k0_1 - g1))
                err = _quadpack_error_nb(diff, resasc, resabs)
                b = band[base]
                vals[b, ix, 0] += a0
                vals[b, ix, 1] += a1
                vals[b + 1, ix, 0] += k0_0 - a0
                vals[b + 1, ix, 1] += k0_1 - a1
                share = fsum / length
                errs[b, ix] += err * share
                errs[b + 1, ix] += err * (1.0 - share)
        return vals, errs


    @njit(parallel=True, cache=True)
    def _band_sums_uniform_nb(k, wk, wg, band, frac, pl, ql, pr, qr, x0, dx, nx, nbands, chunk):
        # Phases advance along the uniform x grid by complex rotation, re-anchored
        # every 64 steps. Panel chunks have a fixed size, so the reduction order
        # does not depend on the number of threads.
        npan = k.shape[0] // 15
        nchunks = (npan + chunk - 1) // chunk
        part = np.zeros((nchunks, nbands, nx, 2), dtype=np.complex128)
        perr = np.zeros((nchunks, nbands, nx), dtype=np.float64)
        for ch in prange(nchunks):
            ph = np.empty(15, dtype=np.complex128)
            rot = np.empty(15, dtype=np.complex128)
            f0 = np.empty(15, dtype=np.complex128)
            f1 = np.empty(15, dtype=np.complex128)
            for p in range(ch * chunk, min(npan, (ch + 1) * chunk)):
                base = p * 15
                b = band[base]
                length = 0.0
                fsum = 0.0
                for m in range(15):
                    n = base + m
                    rot[m] = complex(np.cos(k[n] * dx), np.sin(k[n] * dx))
                    length += wk[n]
                    fsum += wk[n] * frac[n]
                share = fsum / length
                for ix in range(nx):
                    x = x0 + ix * dx
                    if ix % 64 == 0:
                        for m in range(15):
                            arg = k[base + m] * x
                            ph[m] = complex(np.cos(arg), np.sin(arg))
                    left = x < 0.0
                    k0_0 = 0j
                    k0_1 = 0j
                    g0 = 0j
                    g1 = 0j
                    a0 = 0j
                    a1 = 0j
                    for m in range(15):
                        n = base + m
                        e1 = ph[m]
                        e2 = e1.conjugate()
                        if left:
                            v0 = pl[n, 0] * e1 + ql[n, 0] * e2
                            v1 = pl[n, 1] * e1 + ql[n, 1] * e2
                        else:
                            v0 = pr[n, 0] * e1 + qr[n, 0] * e2
                            v1 = pr[n, 1] * e1 + qr[n, 1] * e2
                        f0[m] = v0
                        f1[m] = v1
                        w = wk[n]
                        k0_0 += w * v0
                        k0_1 += w * v1
                        g0 += wg[n] * v0
                        g1 += wg[n] * v1
                        a0 += w * frac[n] * v0
                        a1 += w * frac[n] * v1
                        ph[m] = e1 * rot[m]
                    mean0 = k0_0 / length
                    mean1 = k0_1 / length
                    resasc = 0.0
                    resabs = 0.0
                    for m in range(15):
                        w = wk[base + m]
                        d0 = f0[m] - mean0
                        d1 = f1[m] - mean1
                        resasc += w * np.sqrt(_abs2(d0) + _abs2(d1))
                        resabs += w * np.sqrt(_abs2(f0[m]) + _abs2(f1[m]))
                    diff = np.sqrt(_abs2(k0_0 - g0) + _abs2(k0_1 - g1))
                    err = _quadpack_error_nb(diff, resasc, resabs)
                    part[ch, b, ix, 0] += a0
                    part[ch, b, ix, 1] += a1
                    part[ch, b + 1, ix, 0] += k0_0 - a0
                    part[ch, b + 1, ix, 1] += k0_1 - a1
                    perr[ch, b, ix] += err * share
                    perr[ch, b + 1, ix] += err * (1.0 - share)
        vals = np.zeros((nbands, nx, 2), dtype=np.complex128)
        errs = np.zeros((nbands, nx), dtype=np.float64)
        for ch in range(nchunks):
            vals += part[ch]
            errs += perr[ch]
        return vals, errs


def _band_sums_np(k, wk, wg, band, frac, pl, ql, pr, qr, xs, nbands, chunk_elems=4_000_000):
    nx = xs.shape[0]
    npan = k.shape[0] // PANEL
    vals = np.zeros((nbands, nx, 2), dtype=complex)
    errs = np.zeros((nbands, nx))
    pband = band[::PANEL]
    wk_p = wk.reshape(npan, PANEL)
    wg_p = wg.reshape(npan, PANEL)
    wf_p = (wk * frac).reshape(npan, PANEL)
    length = wk_p.sum(axis=1)
    share = wf_p.sum(axis=1) / length
    step = max(1, chunk_elems // max(1, k.shape[0]))
    for lo in range(0, nx, step):
        xc = xs[lo:lo + step]
        ph = np.exp(1j * xc[:, None] * k[None, :])
        left = (xc < 0.0)[:, None, None]
        f = np.where(
            left,
            pl[None] * ph[..., None] + ql[None] / ph[..., None],
            pr[None] * ph[..., None] + qr[None] / ph[..., None],
        ).reshape(len(xc), npan, PANEL, 2)
        kr = np.einsum("xpmc,pm->xpc", f, wk_p)
        gr = np.einsum("xpmc,pm->xpc", f, wg_p)
        ar = np.einsum("xpmc,pm->xpc", f, wf_p)
        mean = kr / length[None, :, None]
        resasc = np.einsum("xpm,pm->xp", np.linalg.norm(f - mean[:, :, None, :], axis=-1), wk_p)
        resabs = np.einsum("xpm,pm->xp", np.linalg.norm(f, axis=-1), wk_p)
        diff = np.linalg.norm(kr - gr, axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.minimum(1.0, (200.0 * diff / resasc) ** 1.5)
            err = np.where((resasc != 0) & (diff != 0), resasc * ratio, diff)
        err = np.maximum(err, 50.0 * _EPS * resabs)
        for b in np.unique(pband):
            sel = pband == b
            vals[b, lo:lo + step] += ar[:, sel].sum(axis=1)
            vals[b + 1, lo:lo + step] += (kr[:, sel] - ar[:, sel]).sum(axis=1)
            errs[b, lo:lo + step] += (err[:, sel] * share[sel]).sum(axis=1)
            errs[b + 1, lo:lo + step] += (err[:, sel] * (1.0 - share[sel])).sum(axis=1)
    return vals, errs


def band_sums(k, wk, wg, band, frac, pl, ql, pr, qr, xs, nbands, which: str | None = None):
    """Per-band Kronrod sums and error estimates, shapes (nbands, nx, 2) and (nbands, nx)."""
    which = which or backend()
    args = (
        np.ascontiguousarray(k, dtype=float),
        np.ascontiguousarray(wk, dtype=float),
        np.ascontiguousarray(wg, dtype=float),
        np.ascontiguousarray(band, dtype=np.int64),
        np.ascontiguousarray(frac, dtype=float),
        np.ascontiguousarray(pl, dtype=complex),
        np.ascontiguousarray(ql, dtype=complex),
        np.ascontiguousarray(pr, dtype=complex),
        np.ascontiguousarray(qr, dtype=complex),
        np.ascontiguousarray(xs, dtype=float),
        int(nbands),
    )
    if args[0].shape[0] % PANEL:
        raise ValueError("node count must be a multiple of the panel size")
    if which == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is not importable")
        xs = args[9]
        if xs.size > 64:
            dx = (xs[-1] - xs[0]) / (xs.size - 1)
            if dx > 0 and np.allclose(np.diff(xs), dx, rtol=0, atol=1e-12 * max(1.0, abs(xs).max())):
                return _band_sums_uniform_nb(*args[:9], xs[0], dx, xs.size, args[10], UNIFORM_CHUNK)
        return _band_sums_nb(*args)
    return _band_sums_np(*args)

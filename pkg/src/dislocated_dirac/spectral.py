"""Closed-form spectral and scattering objects for the dislocated Dirac operator.

All evaluators broadcast over their positional arguments (x, y, k) and return
arrays with trailing shape (2,) for spinors and (2, 2) for kernels.

Decaying solutions are parametrised internally by ``il = i*lambda``. Off the
spectrum this is ``1j * lambda_branch(omega)``. At the upper boundary value
omega = sqrt(1+k^2) + i0 the branch gives lambda = -ik, so ``il = k``. The
Jost solutions are therefore the same formulas with ``il`` replaced by the
signed wavenumber.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .core import SIGMA3, TWO_PI, as_tau, lambda_branch, s_matrix

POLE_TOL = 1e-10


class PoleError(ZeroDivisionError):
    """The Wronskian vanishes: the resolvent kernel is singular here."""


class MatchCoeffs(NamedTuple):
    A: complex
    B: complex
    C: complex
    D: complex


class ScatteringData(NamedTuple):
    k: float
    tau: float
    phi: complex
    T: complex
    T2: complex
    R1: complex
    R2: complex


def _sign(sign) -> int:
    if sign in ("plus", "+", 1):
        return 1
    if sign in ("minus", "-", -1):
        return -1
    raise ValueError(f"sign must be 'plus' or 'minus', got {sign!r}")


def _il(omega):
    return 1j * lambda_branch(omega)


# ---------------------------------------------------------------- bound state


def bound_state_energy(tau) -> float:
    """Gap eigenvalue omega_tau = -cos(tau/2).

    This is the real zero of the Wronskian in (-1, 1). It runs from the lower
    threshold -1 at tau = 0 to the upper threshold +1 at tau = 2*pi.
    """
    return -math.cos(as_tau(tau) / 2.0)


def bound_state(tau, x):
    """Unit-norm gap eigenfunction sqrt(s/2) e^{-s|x|} (1, -e^{i tau/2}), s = sin(tau/2)."""
    tau = as_tau(tau)
    if tau == 0.0 or tau == TWO_PI:
        raise ValueError("no bound state at tau in {0, 2*pi}")
    s = math.sin(tau / 2.0)
    x = np.asarray(x, dtype=float)
    amp = math.sqrt(s / 2.0) * np.exp(-s * np.abs(x))
    out = np.empty(x.shape + (2,), dtype=complex)
    out[..., 0] = amp
    out[..., 1] = -np.exp(0.5j * tau) * amp
    return out


# ------------------------------------------------------------- decaying solutions


def asymptotic_eigvec(side: str, branch, omega, tau, il=None):
    """Eigenvectors (1 or e^{-i tau}, omega -+ i lambda) of the half-line matrices."""
    b = _sign(branch)
    if il is None:
        il = _il(omega)
    top = 1.0 + 0j if side == "left" else np.exp(-1j * as_tau(tau))
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    return np.array([top, omega - b * il])


def _scaled_abcd(omega, il, tau):
    """(2 il) * (A, B, C, D); finite at the threshold il = 0."""
    e = np.exp(-1j * tau)
    ep = np.conj(e)
    return (
        (e - 1.0) * (omega + il),
        omega * (1.0 - e) + il * (1.0 + e),
        omega * (ep - 1.0) + il * (ep + 1.0),
        (1.0 - ep) * (omega - il),
    )


def match_coeffs(omega, tau, il=None) -> MatchCoeffs:
    """Matching coefficients A, B, C, D of the decaying solutions across x = 0."""
    tau = as_tau(tau)
    if il is None:
        il = _il(omega)
    if np.any(np.asarray(il) == 0):
        raise ZeroDivisionError("matching coefficients are singular at the threshold")
    return MatchCoeffs(*(c / (2.0 * il) for c in _scaled_abcd(omega, il, tau)))


def _solution(sign, x, omega, il, tau, scale):
    """eta_+/- with lambda = -i*il, multiplied by ``scale``. Broadcasts x, omega, il."""
    s = _sign(sign)
    x = np.asarray(x, dtype=float)
    omega = np.asarray(omega, dtype=complex)
    il = np.asarray(il, dtype=complex)
    x, omega, il = np.broadcast_arrays(x, omega, il)
    e = np.exp(-1j * tau)
    scale = np.broadcast_to(np.asarray(scale, dtype=complex), x.shape)
    two = 2.0 * il
    sA, sB, sC, sD = _scaled_abcd(omega, il, tau)
    grow = np.exp(-1j * il * x)   # e^{lambda x}
    decay = np.exp(1j * il * x)   # e^{-lambda x}
    out = np.empty(x.shape + (2,), dtype=complex)
    wm, wp = omega - il, omega + il
    if s > 0:
        right = x >= 0
        with np.errstate(divide="ignore", invalid="ignore"):
            a = scale * sA / two
            b = scale * sB / two
        out[..., 0] = np.where(right, scale * e * decay, a * grow + b * decay)
        out[..., 1] = np.where(right, scale * wp * decay, a * wm * grow + b * wp * decay)
    else:
        left = x < 0
        with np.errstate(divide="ignore", invalid="ignore"):
            c = scale * sC / two
            d = scale * sD / two
        out[..., 0] = np.where(left, scale * grow, e * (c * grow + d * decay))
        out[..., 1] = np.where(left, scale * wm * grow, c * wm * grow + d * wp * decay)
    return out


def eta(sign, x, omega, tau, il=None):
    """Solution eta_+ (decaying at +inf) or eta_- (decaying at -inf) of (D - omega) eta = 0."""
    tau = as_tau(tau)
    if il is None:
        il = _il(omega)
    return _solution(sign, x, omega, il, tau, 1.0)


def _omega_of(k):
    return np.sqrt(1.0 + np.asarray(k, dtype=float) ** 2)


def jost(sign, x, k, tau):
    """Jost solution xi_+/-(x; k) for real signed k (omega = sqrt(1+k^2), lambda = -ik)."""
    tau = as_tau(tau)
    k = np.asarray(k, dtype=float)
    return _solution(sign, x, _omega_of(k), k, tau, 1.0)


def jost_scaled(sign, x, k, tau):
    """k * xi_+/-(x; k): the threshold-regular Jost solution."""
    tau = as_tau(tau)
    k = np.asarray(k, dtype=float)
    kk = np.broadcast_to(k, np.broadcast_shapes(np.shape(x), k.shape))
    x = np.broadcast_to(np.asarray(x, dtype=float), kk.shape)
    om = _omega_of(kk)
    e = np.exp(-1j * tau)
    sA, sB, sC, sD = (c / 2.0 for c in _scaled_abcd(om, kk, tau))
    grow = np.exp(-1j * kk * x)
    decay = np.exp(1j * kk * x)
    out = np.empty(kk.shape + (2,), dtype=complex)
    wm, wp = om - kk, om + kk
    if _sign(sign) > 0:
        right = x >= 0
        out[..., 0] = np.where(right, kk * e * decay, sA * grow + sB * decay)
        out[..., 1] = np.where(right, kk * wp * decay, sA * wm * grow + sB * wp * decay)
    else:
        left = x < 0
        out[..., 0] = np.where(left, kk * grow, e * (sC * grow + sD * decay))
        out[..., 1] = np.where(left, kk * wm * grow, sC * wm * grow + sD * wp * decay)
    return out


def wronskian_phi(value, tau, *, kind: str = "omega", il=None):
    """Wronskian phi = i*lambda (e^{-i tau} + 1) - omega (e^{-i tau} - 1).

    ``kind="omega"`` takes an energy off the spectrum. ``kind="k"`` takes a
    real signed wavenumber and uses the boundary value i*lambda = k.
    """
    tau = as_tau(tau)
    e = np.exp(-1j * tau)
    if kind == "k":
        k = np.asarray(value, dtype=float)
        return k * (e + 1.0) - _omega_of(k) * (e - 1.0)
    if kind != "omega":
        raise ValueError("kind must be 'omega' or 'k'")
    omega = np.asarray(value, dtype=complex)
    if il is None:
        il = _il(omega)
    return il * (e + 1.0) - omega * (e - 1.0)


# ---------------------------------------------------------------------- kernels


def _product_kernel(plus_x, minus_x, plus_y, minus_y, x, y, pref):
    """pref * [xi_+(x) xi_-(y)^T sigma_1 if x > y else xi_-(x) xi_+(y)^T sigma_1]."""
    above = (np.asarray(x) > np.asarray(y))[..., None, None]
    flip_minus_y = minus_y[..., ::-1]
    flip_plus_y = plus_y[..., ::-1]
    k_above = plus_x[..., :, None] * flip_minus_y[..., None, :]
    k_below = minus_x[..., :, None] * flip_plus_y[..., None, :]
    return np.asarray(pref)[..., None, None] * np.where(above, k_above, k_below)


def _check_pole(phi):
    if np.any(np.abs(phi) < POLE_TOL):
        raise PoleError("Wronskian vanishes: resolvent has a pole here")


def resolvent_kernel(omega, tau, x, y):
    """Kernel of (D(tau) - omega)^{-1} for omega off the spectrum, ``(i/phi) eta eta^T sigma_1``."""
    tau = as_tau(tau)
    il = _il(omega)
    phi = wronskian_phi(omega, tau, il=il)
    _check_pole(phi)
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    ep, em = eta("plus", x, omega, tau, il), eta("minus", x, omega, tau, il)
    fp, fm = eta("plus", y, omega, tau, il), eta("minus", y, omega, tau, il)
    return _product_kernel(ep, em, fp, fm, x, y, 1j / phi)


def limiting_resolvent_kernel(k, tau, side, x, y):
    """Boundary value of the resolvent at sqrt(1+k^2) +- i0, expressed through Jost solutions."""
    tau = as_tau(tau)
    k = np.asarray(k, dtype=float)
    if np.any(k <= 0):
        raise ValueError("k must be positive")
    q = k * _sign(side)
    phi = wronskian_phi(q, tau, kind="k")
    _check_pole(phi)
    x, y, q = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float), q)
    return _product_kernel(
        jost("plus", x, q, tau), jost("minus", x, q, tau),
        jost("plus", y, q, tau), jost("minus", y, q, tau),
        x, y, 1j / phi,
    )


def explicit_resolvent_entries(k, tau, x, y):
    """Resolvent boundary kernel at signed k written out entry by entry in six regions.

    Independent of the Jost-product assembly; used to cross-check it.
    """
    tau = as_tau(tau)
    k, x, y = np.broadcast_arrays(np.asarray(k, float), np.asarray(x, float), np.asarray(y, float))
    om = _omega_of(k)
    a, b = om + k, om - k
    e = np.exp(-1j * tau)
    A, B, C, D = match_coeffs(om, tau, il=k.astype(complex))
    p = 1j / wronskian_phi(k, tau, kind="k")
    ePs = np.exp(1j * k * (x + y))    # e^{ik(x+y)}
    eMs = np.exp(1j * k * (x - y))    # e^{ik(x-y)}
    eNs = np.exp(-1j * k * (x + y))   # e^{-ik(x+y)}
    eRs = np.exp(-1j * k * (x - y))   # e^{-ik(x-y)}

    out = np.zeros(k.shape + (2, 2), dtype=complex)

    def put(mask, k11, k12, k21, k22):
        for (i, j), v in zip(((0, 0), (0, 1), (1, 0), (1, 1)), (k11, k12, k21, k22)):
            out[..., i, j] = np.where(mask, p * v, out[..., i, j])

    # x > y > 0
    m = (x > y) & (y >= 0)
    put(m, e * (C * b * eMs + D * a * ePs), e * e * (C * eMs + D * ePs),
        C * eMs + D * a * a * ePs, a * e * (C * eMs + D * ePs))
    # x >= 0 > y
    m = (x >= 0) & (y < 0)
    put(m, e * b * eMs, e * eMs, eMs, a * eMs)
    # 0 > x > y
    m = (x < 0) & (x > y)
    put(m, A * b * eNs + B * b * eMs, A * eNs + B * eMs,
        A * b * b * eNs + B * eMs, A * b * eNs + B * a * eMs)
    # y >= x >= 0
    m = (x >= 0) & (y >= x)
    put(m, e * a * (C * eRs + D * ePs), e * e * (C * eRs + D * ePs),
        C * eRs + D * a * a * ePs, e * (C * b * eRs + D * a * ePs))
    # y >= 0 > x
    m = (x < 0) & (y >= 0)
    put(m, a * eRs, e * eRs, eRs, b * e * eRs)
    # 0 > y >= x
    m = (y < 0) & (y >= x)
    put(m, A * b * eNs + B * a * eRs, A * eNs + B * eRs,
        A * b * b * eNs + B * eRs, b * (A * eNs + B * eRs))
    return out


# -------------------------------------------------------------------- scattering


def scattering_coeffs(k, tau) -> ScatteringData:
    """Transmission and reflection coefficients at real k != 0."""
    tau = as_tau(tau)
    k = float(k)
    if k == 0.0:
        raise ZeroDivisionError("scattering data is undefined at k = 0")
    phi = complex(wronskian_phi(k, tau, kind="k"))
    _check_pole(phi)
    e = np.exp(-1j * tau)
    om = math.sqrt(1.0 + k * k)
    return ScatteringData(
        k=k, tau=tau, phi=phi,
        T=2.0 * e * k / phi, T2=2.0 * k / phi,
        R1=(om - k) * (e - 1.0) / phi, R2=(om + k) * (e - 1.0) / phi,
    )


def _s2(tau):
    return math.sin(as_tau(tau) / 2.0) ** 2


def t_squared(k, tau):
    """|T|^2 = k^2 / (k^2 + sin^2(tau/2)), equal to 1 when tau is 0 or 2*pi."""
    s2 = _s2(tau)
    k2 = np.asarray(k, dtype=float) ** 2
    if s2 == 0.0:
        return np.ones_like(k2)[()]
    return k2 / (k2 + s2)


def d_t_squared(k, tau):
    s2 = _s2(tau)
    k = np.asarray(k, dtype=float)
    if s2 == 0.0:
        return np.zeros_like(k)[()]
    return 2.0 * k * s2 / (k * k + s2) ** 2


def d2_t_squared(k, tau):
    s2 = _s2(tau)
    k = np.asarray(k, dtype=float)
    if s2 == 0.0:
        return np.zeros_like(k)[()]
    return 2.0 * s2 * (s2 - 3.0 * k * k) / (k * k + s2) ** 3


def resolvent_jump_kernel(k, tau, x, y):
    """R(sqrt(1+k^2)+i0) - R(sqrt(1+k^2)-i0) in the rank-two transmission form."""
    tau = as_tau(tau)
    k = np.asarray(k, dtype=float)
    if np.any(k <= 0):
        raise ValueError("k must be positive")
    x, y, k = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float), k)
    e = np.exp(-1j * tau)
    pp = jost("plus", x, k, tau)[..., :, None] * jost("plus", y, -k, tau)[..., None, ::-1]
    mm = jost("minus", x, k, tau)[..., :, None] * jost("minus", y, -k, tau)[..., None, ::-1]
    pref = -t_squared(k, tau) / (2j * e * k)
    return np.asarray(pref)[..., None, None] * (pp + e * mm)


def mirror_matrix(tau) -> np.ndarray:
    """M = sigma_3 S(2*pi - tau), the spinor part of the inverse reflection map."""
    return SIGMA3 @ s_matrix(TWO_PI - as_tau(tau))


def negative_branch_jump_kernel(k, tau, x, y):
    """Jump of the resolvent across -sqrt(1+k^2), mapped from the positive branch of D(2*pi - tau)."""
    tau = as_tau(tau)
    m = mirror_matrix(tau)
    m_inv = SIGMA3 @ s_matrix(tau)
    dual = resolvent_jump_kernel(k, TWO_PI - tau, -np.asarray(x, float), -np.asarray(y, float))
    return m @ dual @ m_inv

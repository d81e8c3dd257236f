"""Integer-order Bessel functions of real non-negative argument.

J_n and N_n (Neumann, often written Y_n) use three regimes:

* ``x <= SERIES_MAX``: ascending power series (N_0, N_1 with the logarithmic
  term, then upward recurrence for N).
* ``SERIES_MAX < x < hankel_min(n)``: Miller's downward recurrence for J,
  normalised by ``J_0 + 2 sum J_2k = 1``; N_0 and N_1 from the Neumann
  series in the same J_k, upward recurrence for higher N.
* ``x >= hankel_min(n)``: Hankel asymptotic expansion.

The power series for J is only used up to x = 8 rather than max(12, 2n):
beyond that the alternating terms cancel by more than four digits, and the
Miller branch is accurate for every x it is handed.

I_n is a positive-term series (no cancellation). K_0 and K_1 come from the
trapezoidal rule applied to ``int_0^inf exp(-x cosh t) cosh(n t) dt``, which
converges geometrically for this entire integrand; higher K_n by upward
recurrence, which is stable for K.

All functions accept a scalar or array ``x`` and return the same shape.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "BesselDomainError",
    "bessel_j",
    "bessel_n",
    "bessel_i",
    "bessel_k",
    "bessel_j_prime",
    "bessel_n_prime",
    "bessel_i_prime",
    "bessel_k_prime",
    "jn_sequence",
    "yn_sequence",
    "kn_scaled_sequence",
]

EULER_GAMMA = 0.57721566490153286061
SERIES_MAX = 8.0
_TWO_OVER_PI = 2.0 / math.pi
_I_OVERFLOW = 700.0


class BesselDomainError(ValueError):
    """Argument outside the domain of a Bessel function."""


def hankel_min(n: int) -> float:
    """Smallest argument at which the Hankel expansion is used for order n."""
    return max(25.0, float(n * n))


def _as_array(x, name="x"):
    xa = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xa)):
        raise BesselDomainError(f"{name} must be finite")
    return xa


def _check_order(n):
    if int(n) != n or n < 0:
        raise BesselDomainError(f"order must be a non-negative integer, got {n}")
    return int(n)


def _wrap(result, x):
    if np.ndim(x) == 0:
        return float(np.asarray(result).reshape(()))
    return result


# --------------------------------------------------------------------------
# J and N
# --------------------------------------------------------------------------


def _leading(n, x):
    """(x/2)^n / n!, formed in logs so large orders do not overflow."""
    if n == 0:
        return np.ones_like(x)
    with np.errstate(divide="ignore"):
        return np.exp(n * np.log(0.5 * x) - math.lgamma(n + 1))


def _j_series(n, x):
    """Ascending series of J_n; x must be small enough (<= SERIES_MAX)."""
    y = -0.25 * x * x
    term = _leading(n, x)
    total = term.copy()
    for s in range(1, 60):
        term = term * y / (s * (n + s))
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return total


def _y01_series(x, j0, j1):
    """N_0 and N_1 from the ascending series with the log term."""
    y = -0.25 * x * x
    log_term = np.log(0.5 * x)
    # N_0
    term = np.ones_like(x)
    harmonic = 0.0
    acc0 = np.zeros_like(x)
    for k in range(1, 60):
        term = term * y / (k * k)
        harmonic += 1.0 / k
        acc0 = acc0 + harmonic * term
        if np.all(np.abs(harmonic * term) <= 1e-17 * (np.abs(acc0) + 1e-300)):
            break
    y0 = _TWO_OVER_PI * ((log_term + EULER_GAMMA) * j0 - acc0)
    # N_1: psi(k+1) + psi(k+2) = -2 gamma + H_k + H_{k+1}
    term = 0.5 * x
    h_k = 0.0
    acc1 = (-2.0 * EULER_GAMMA + 1.0) * term
    for k in range(1, 60):
        term = term * y / (k * (k + 1))
        h_k += 1.0 / k
        c = -2.0 * EULER_GAMMA + 2.0 * h_k + 1.0 / (k + 1)
        acc1 = acc1 + c * term
        if np.all(np.abs(c * term) <= 1e-17 * (np.abs(acc1) + 1e-300)):
            break
    y1 = -_TWO_OVER_PI / x + _TWO_OVER_PI * log_term * j1 - acc1 / math.pi
    return y0, y1


def _miller(nmax, x):
    """Downward recurrence for J_0..J_top at moderate x; returns (J_all, top)."""
    top = int(max(nmax, math.ceil(float(np.max(x))))) + 30 + int(12 * np.cbrt(np.max(x)))
    top += top % 2
    vals = np.zeros((top + 2,) + x.shape)
    vals[top] = 1e-30
    norm = np.zeros_like(x)
    for k in range(top, 0, -1):
        vals[k - 1] = (2.0 * k / x) * vals[k] - vals[k + 1]
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm = norm + 2.0 * vals[k - 1]
        # rescale column by column: one batch can mix very different x
        big = np.abs(vals[k - 1]) > 1e250
        if np.any(big):
            vals[k - 1 :, big] *= 1e-250
            norm = np.where(big, norm * 1e-250, norm)
    norm = norm + vals[0]
    return vals[: top + 1] / norm, top


def _y01_neumann(x, jall, top):
    """N_0 and N_1 from Neumann series in J_k (Miller regime)."""
    log_term = np.log(0.5 * x) + EULER_GAMMA
    s0 = np.zeros_like(x)
    s1 = np.zeros_like(x)
    for k in range(1, top // 2):
        sign = -1.0 if k % 2 else 1.0
        s0 = s0 + sign * jall[2 * k] / k
        s1 = s1 + sign * (jall[2 * k - 1] - jall[2 * k + 1]) / k
    y0 = _TWO_OVER_PI * log_term * jall[0] - 2.0 * _TWO_OVER_PI * s0
    y1 = _TWO_OVER_PI * (log_term * jall[1] - jall[0] / x) + _TWO_OVER_PI * s1
    return y0, y1


def _hankel_pq(n, x):
    mu = 4.0 * n * n
    p = np.ones_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    last = np.full_like(x, np.inf)
    for k in range(1, 80):
        term = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        mag = np.abs(term)
        # asymptotic: stop before the terms start growing again
        grow = mag > last
        if np.all(grow | (mag < 1e-17)):
            break
        term = np.where(grow, 0.0, term)
        last = np.where(grow, 0.0, mag)
        if k % 2 == 1:
            q = q + (1.0 if (k // 2) % 2 == 0 else -1.0) * term
        else:
            p = p + (1.0 if (k // 2) % 2 == 0 else -1.0) * term
    return p, q


def _hankel_jy(n, x):
    p, q = _hankel_pq(n, x)
    chi = x - (0.5 * n + 0.25) * math.pi
    amp = np.sqrt(_TWO_OVER_PI / x)
    c, s = np.cos(chi), np.sin(chi)
    return amp * (p * c - q * s), amp * (p * s + q * c)


def jn_sequence(nmax: int, x) -> np.ndarray:
    """Return J_0..J_nmax at ``x`` as an array of shape (nmax + 1, *x.shape)."""
    nmax = _check_order(nmax)
    x = _as_array(x)
    if np.any(x < 0):
        raise BesselDomainError("J_n requires x >= 0 here (use reflection for x < 0)")
    out = np.zeros((nmax + 1,) + x.shape)
    flat = x.reshape(-1)
    res = out.reshape(nmax + 1, -1)
    small = flat <= SERIES_MAX
    if np.any(small):
        xs = flat[small]
        for n in range(nmax + 1):
            res[n, small] = _j_series(n, xs)
    rest = ~small
    for n in range(nmax + 1):
        hk = rest & (flat >= hankel_min(n))
        if np.any(hk):
            res[n, hk] = _hankel_jy(n, flat[hk])[0]
    mid = rest & (flat < hankel_min(nmax))
    if np.any(mid):
        xm = flat[mid]
        jall, _ = _miller(nmax, xm)
        for n in range(nmax + 1):
            sel = flat[mid] < hankel_min(n)
            idx = np.flatnonzero(mid)[sel]
            res[n, idx] = jall[n][sel]
    return out


def yn_sequence(nmax: int, x) -> np.ndarray:
    """Return N_0..N_nmax at ``x > 0`` as an array of shape (nmax + 1, *x.shape)."""
    nmax = _check_order(nmax)
    x = _as_array(x)
    if np.any(x <= 0):
        raise BesselDomainError("N_n is singular at x <= 0")
    flat = x.reshape(-1)
    y0 = np.empty_like(flat)
    y1 = np.empty_like(flat)
    small = flat <= SERIES_MAX
    hk = flat >= hankel_min(1)
    mid = ~small & ~hk
    if np.any(small):
        xs = flat[small]
        y0[small], y1[small] = _y01_series(xs, _j_series(0, xs), _j_series(1, xs))
    if np.any(mid):
        xm = flat[mid]
        jall, top = _miller(1, xm)
        y0[mid], y1[mid] = _y01_neumann(xm, jall, top)
    if np.any(hk):
        xh = flat[hk]
        y0[hk] = _hankel_jy(0, xh)[1]
        y1[hk] = _hankel_jy(1, xh)[1]
    out = np.zeros((nmax + 1, flat.size))
    out[0] = y0
    if nmax >= 1:
        out[1] = y1
    # upward recurrence is stable for N; the Hankel form is preferred where valid
    for n in range(1, nmax):
        out[n + 1] = (2.0 * n / flat) * out[n] - out[n - 1]
    for n in range(2, nmax + 1):
        sel = flat >= hankel_min(n)
        if np.any(sel):
            out[n, sel] = _hankel_jy(n, flat[sel])[1]
    return out.reshape((nmax + 1,) + x.shape)


def bessel_j(n: int, x):
    """Bessel function of the first kind J_n(x), x >= 0."""
    n = _check_order(n)
    return _wrap(jn_sequence(n, x)[n], x)


def bessel_n(n: int, x):
    """Neumann function N_n(x) (Bessel of the second kind), x > 0."""
    n = _check_order(n)
    return _wrap(yn_sequence(n, x)[n], x)


def bessel_j_prime(n: int, x):
    """dJ_n/dx via (J_{n-1} - J_{n+1}) / 2 with J_{-1} = -J_1."""
    n = _check_order(n)
    seq = jn_sequence(n + 1, x)
    prev = -seq[1] if n == 0 else seq[n - 1]
    return _wrap(0.5 * (prev - seq[n + 1]), x)


def bessel_n_prime(n: int, x):
    """dN_n/dx via (N_{n-1} - N_{n+1}) / 2 with N_{-1} = -N_1."""
    n = _check_order(n)
    seq = yn_sequence(n + 1, x)
    prev = -seq[1] if n == 0 else seq[n - 1]
    return _wrap(0.5 * (prev - seq[n + 1]), x)


# --------------------------------------------------------------------------
# I and K
# --------------------------------------------------------------------------


def bessel_i(n: int, x):
    """Modified Bessel function I_n(x), x >= 0.

    Raises OverflowError once the value no longer fits in a double.
    """
    n = _check_order(n)
    xa = _as_array(x)
    if np.any(xa < 0):
        raise BesselDomainError("I_n requires x >= 0")
    if np.any(xa > _I_OVERFLOW):
        raise OverflowError(f"I_{n}(x) overflows for x > {_I_OVERFLOW}")
    y = 0.25 * xa * xa
    term = _leading(n, xa)
    total = term.copy()
    s = 0
    while True:
        s += 1
        term = term * y / (s * (n + s))
        total = total + term
        if np.all(term <= 1e-17 * total) or s > 4000:
            break
    if not np.all(np.isfinite(total)):
        raise OverflowError(f"I_{n}(x) overflowed")
    return _wrap(total, x)


def bessel_i_prime(n: int, x):
    """dI_n/dx via (I_{n-1} + I_{n+1}) / 2 with I_{-1} = I_1."""
    n = _check_order(n)
    return 0.5 * (bessel_i(abs(n - 1), x) + bessel_i(n + 1, x))


def _k01_scaled(x):
    """exp(x) K_0(x) and exp(x) K_1(x) by the trapezoidal rule in t."""
    flat = x.reshape(-1)
    k0 = np.empty_like(flat)
    k1 = np.empty_like(flat)
    for i, xi in enumerate(flat):
        # step shrinks like 1/sqrt(x): the integrand narrows around t = 0
        h = min(0.1, 0.25 / math.sqrt(xi))
        tmax = math.acosh(1.0 + 60.0 / xi) + 1.0
        t = np.arange(0.0, tmax + h, h)
        w = np.exp(-xi * (np.cosh(t) - 1.0))
        k0[i] = h * (w.sum() - 0.5 * w[0])
        wc = w * np.cosh(t)
        k1[i] = h * (wc.sum() - 0.5 * wc[0])
    return k0.reshape(x.shape), k1.reshape(x.shape)


def kn_scaled_sequence(nmax: int, x) -> np.ndarray:
    """Return exp(x) K_n(x) for n = 0..nmax, shape (nmax + 1, *x.shape)."""
    nmax = _check_order(nmax)
    x = _as_array(x)
    if np.any(x <= 0):
        raise BesselDomainError("K_n is singular at x <= 0")
    k0, k1 = _k01_scaled(x)
    out = np.zeros((max(nmax, 1) + 1,) + x.shape)
    out[0] = k0
    out[1] = k1
    for n in range(1, nmax):
        out[n + 1] = out[n - 1] + (2.0 * n / x) * out[n]
    if not np.all(np.isfinite(out[: nmax + 1])):
        raise OverflowError("K_n overflowed (order too large for this x)")
    return out[: nmax + 1]


def bessel_k(n: int, x):
    """Modified Bessel function K_n(x), x > 0."""
    n = _check_order(n)
    xa = _as_array(x)
    seq = kn_scaled_sequence(n, xa)
    return _wrap(seq[n] * np.exp(-xa), x)


def bessel_k_prime(n: int, x):
    """dK_n/dx via -(K_{n-1} + K_{n+1}) / 2 with K_{-1} = K_1."""
    n = _check_order(n)
    xa = _as_array(x)
    seq = kn_scaled_sequence(n + 1, xa) * np.exp(-xa)
    prev = seq[1] if n == 0 else seq[n - 1]
    return _wrap(-0.5 * (prev + seq[n + 1]), x)

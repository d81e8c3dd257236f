"""Radial Dirac system in two dimensions.

For angular momentum ``j`` (half-integer) the upper and lower radial
components obey

    F' - (j_-/r) F + (E + mu - V) G = 0
    G' + (j_+/r) G - (E - mu - V) F = 0,       j_+- = j +- 1/2.

The regular solution is started from a power series at a small radius with
V frozen at V(0), then integrated outward with an embedded Dormand-Prince
5(4) pair.  Integration is batched: many energies (and couplings) share the
same radial steps, which is what makes full phase-shift sweeps cheap.

Only ratios of (F, G) are physical, so each batch member is kept at unit
scale; the logarithm of the discarded scale is returned alongside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "AngularChannel",
    "RadialSolution",
    "IntegrationError",
    "DegenerateStartError",
    "origin_series",
    "integrate",
    "integrate_batch",
    "BatchResult",
    "energy_terms",
    "log_derivative_beta",
    "start_radius_check",
]

RENORM_THRESHOLD = 1e100


class IntegrationError(RuntimeError):
    """Step size collapsed; carries the radius where it happened."""

    def __init__(self, radius: float, message: str = ""):
        self.radius = radius
        super().__init__(message or f"step size underflow at r = {radius!r}")


class DegenerateStartError(ValueError):
    pass


@dataclass(frozen=True)
class AngularChannel:
    """Total angular momentum j = +-1/2, +-3/2, ...

    ``m`` is the Bessel order of the upper component and ``m_prime`` the
    order of the lower one; ``m_prime == m + eps``.
    """

    j: float

    def __post_init__(self):
        twice = 2.0 * self.j
        if not math.isfinite(twice) or twice != round(twice) or int(round(twice)) % 2 == 0:
            raise ValueError(f"j must be a half-odd integer, got {self.j}")

    @property
    def j_minus(self) -> int:
        return int(round(self.j - 0.5))

    @property
    def j_plus(self) -> int:
        return int(round(self.j + 0.5))

    @property
    def m(self) -> int:
        return abs(self.j_minus)

    @property
    def m_prime(self) -> int:
        return abs(self.j_plus)

    @property
    def eps(self) -> int:
        return 1 if self.j > 0 else -1

    def __str__(self):
        return f"{int(round(2 * self.j))}/2"

    @classmethod
    def parse(cls, text) -> "AngularChannel":
        text = str(text).strip()
        if "/" in text:
            num, den = text.split("/")
            return cls(float(num) / float(den))
        return cls(float(text))


@dataclass
class RadialSolution:
    """Interior solution at the end radius (arrays when E is an array).

    ``log_scale`` is the log of the factor divided out during integration;
    the true regular solution is ``exp(log_scale) * (F, G)`` relative to the
    origin normalisation.
    """

    channel: AngularChannel
    E: np.ndarray | float
    F_at_a: np.ndarray | float
    G_at_a: np.ndarray | float
    r_end: float
    log_scale: np.ndarray | float = 0.0
    trajectory: tuple | None = None


@dataclass
class BatchResult:
    """End-point values of a batched integration.

    ``angle`` is the continuous polar angle of (F, G) accumulated from the
    start radius; it is unaffected by the rescaling.
    """

    F: np.ndarray
    G: np.ndarray
    log_scale: np.ndarray
    angle: np.ndarray
    samples: list


def _series_coefficients(channel, A, B, x2, nterms=60):
    """Sum the Frobenius series for constant potential.

    Returns (f, g) with F = r^m f and G = r^(m+1) g for j > 0, and
    F = r^m f, G = r^(m-1) g for j < 0.  ``x2`` is r^2.
    """
    m = channel.m
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    f = np.zeros(np.broadcast(A, B, x2).shape)
    g = np.zeros_like(f)
    if channel.j > 0:
        a_s = np.ones_like(f)
        for s in range(nterms):
            b_s = B * a_s / (2.0 * (m + 1 + s))
            f = f + a_s * x2**s
            g = g + b_s * x2**s
            a_s = -A * b_s / (2.0 * (s + 1))
            if s > 1 and np.all(np.abs(a_s * x2 ** (s + 1)) <= 1e-18 * np.abs(f) + 1e-300):
                break
    else:
        b_s = np.ones_like(f)
        for s in range(nterms):
            a_s = -A * b_s / (2.0 * (m + s))
            f = f + a_s * x2**s
            g = g + b_s * x2**s
            b_s = B * a_s / (2.0 * (s + 1))
            if s > 1 and np.all(np.abs(b_s * x2 ** (s + 1)) <= 1e-18 * np.abs(g) + 1e-300):
                break
    return f, g


def origin_series(channel: AngularChannel, E, spec, r_min: float, lam=None, e_plus=None, e_minus=None, scaled=False):
    """Regular (F, G) at ``r_min`` from the power series about the origin.

    The potential is frozen at V(0), so the start is exact for a square well
    and accurate to O(V'(0) r_min^3) otherwise.  For j > 0 the series is led
    by F ~ r^m, for j < 0 by G ~ r^(m-1); neither recursion divides by
    E + mu - V or E - mu - V, so no energy is degenerate.

    The overall scale is the natural one (leading coefficient 1).  With
    ``scaled`` the leading power of r_min is divided out (it underflows for
    large m) and ``(F, G, log_factor)`` is returned.
    ``e_plus``/``e_minus`` optionally give E + mu and E - mu computed
    without cancellation (see :func:`energy_terms`).
    """
    if r_min <= 0:
        raise ValueError("r_min must be positive")
    lam_eff = spec.lam if lam is None else lam
    v0 = np.asarray(lam_eff, dtype=float) * float(spec.shape_value(0.0))
    E = np.asarray(E, dtype=float)
    A = (E + spec.mu if e_plus is None else np.asarray(e_plus, float)) - v0
    B = (E - spec.mu if e_minus is None else np.asarray(e_minus, float)) - v0
    if np.any((A == 0) & (B == 0)):
        raise DegenerateStartError("both E + mu - V(0) and E - mu - V(0) vanish")
    f, g = _series_coefficients(channel, A, B, r_min * r_min)
    if scaled:
        # common leading power divided out; it is returned as a log
        if channel.j > 0:
            return f, g * r_min, channel.m * math.log(r_min)
        return f * r_min, g, (channel.m - 1) * math.log(r_min)
    m = channel.m
    F = f * r_min**m
    if channel.j > 0:
        G = g * r_min ** (m + 1)
    else:
        G = g * r_min ** (m - 1)
    return F, G


# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


def _dopri(rhs, y, r0, r1, rtol, atol, r_eval=None, h0=None, max_steps=2_000_000):
    """Integrate y' = rhs(r, y) for y of shape (2, N) from r0 to r1.

    One shared step for the whole batch; the error of each member is
    measured relative to its own size.  The polar angle of (F, G) is
    followed continuously (Pruefer angle); accepted steps are far shorter
    than a half turn at the tolerances used here.

    Returns (y, log_scale, angle, samples).
    """
    n = y.shape[1]
    log_scale = np.zeros(n)
    norm0 = np.abs(y).sum(axis=0)
    norm0[norm0 == 0] = 1.0
    y = y / norm0
    log_scale += np.log(norm0)
    angle = np.arctan2(y[1], y[0])

    targets = sorted(float(t) for t in (r_eval if r_eval is not None else ()) if r0 <= t <= r1)
    samples = []
    ti = 0
    while ti < len(targets) and targets[ti] <= r0:
        samples.append((r0, y.copy(), log_scale.copy()))
        ti += 1

    r = r0
    h = h0 if h0 is not None else 0.01 * max(r0, 1e-8 * (r1 - r0))
    k1 = rhs(r, y)
    err_old = 1e-4
    steps = 0
    while r < r1:
        steps += 1
        if steps > max_steps:
            raise IntegrationError(r, f"too many steps before reaching r = {r1}")
        stop = targets[ti] if ti < len(targets) else r1
        last = False
        if r + h >= stop:
            h = stop - r
            last = True
        ks = [k1]
        for i in range(1, 7):
            yi = y.copy()
            for aij, kj in zip(_A[i], ks):
                if aij:
                    yi += (h * aij) * kj
            ks.append(rhs(r + _C[i] * h, yi))
            if i == 6:
                y_new = yi
        err_vec = np.zeros_like(y)
        for ei, ki in zip(_E, ks):
            if ei:
                err_vec += (h * ei) * ki
        size = np.maximum(np.abs(y).sum(axis=0), np.abs(y_new).sum(axis=0))
        err = float(np.max(np.abs(err_vec).sum(axis=0) / (atol + rtol * size)))
        if not math.isfinite(err):
            err = 1e10
        if err <= 1.0:
            r = stop if last else r + h
            y = y_new
            k1 = ks[6]
            turn = np.arctan2(y[1], y[0]) - angle
            angle += turn - 2.0 * np.pi * np.round(turn / (2.0 * np.pi))
            nrm = np.abs(y).sum(axis=0)
            bad = (nrm > RENORM_THRESHOLD) | ((nrm < 1.0 / RENORM_THRESHOLD) & (nrm > 0))
            if np.any(bad):
                fac = np.where(bad, nrm, 1.0)
                y = y / fac
                k1 = k1 / fac
                log_scale += np.log(fac)
            if last and ti < len(targets) and stop == targets[ti]:
                while ti < len(targets) and targets[ti] == stop:
                    samples.append((r, y.copy(), log_scale.copy()))
                    ti += 1
            fac = 0.9 * err ** (-0.17) * err_old**0.04 if err > 0 else 10.0
            h = h * min(10.0, max(0.2, fac))
            err_old = max(err, 1e-4)
        else:
            h = h * max(0.2, 0.9 * err ** (-0.2))
        if h < 1e-14 * max(r, 1e-300):
            raise IntegrationError(r)
    return y, log_scale, angle, samples


def energy_terms(k, branch: int, mu: float = 1.0):
    """E, E + mu and E - mu on a continuum branch, free of cancellation."""
    k = np.asarray(k, dtype=float)
    ek = np.sqrt(k * k + mu * mu)
    if branch > 0:
        return ek, ek + mu, k * k / (ek + mu)
    return -ek, -k * k / (ek + mu), -(ek + mu)


def _make_rhs(channel, spec, lam, ep, em):
    jm = float(channel.j_minus)
    jp = float(channel.j_plus)
    shape = spec.shape_value

    def rhs(r, y):
        v = lam * float(shape(r))
        F, G = y[0], y[1]
        return np.stack(
            (
                (jm / r) * F - (ep - v) * G,
                -(jp / r) * G + (em - v) * F,
            )
        )

    return rhs


def integrate_batch(
    channel: AngularChannel,
    E,
    spec,
    lam=None,
    r_min: float | None = None,
    r_end: float | None = None,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    r_eval=None,
    e_plus=None,
    e_minus=None,
):
    """Integrate the regular solution for every (E, lam) pair in a batch.

    ``E`` and ``lam`` broadcast against each other; ``lam`` defaults to the
    coupling of ``spec``.  Returns a :class:`BatchResult` with F, G at
    ``r_end`` (default: the cutoff radius).
    """
    r_min = spec.a * 1e-4 if r_min is None else r_min
    r_end = spec.a if r_end is None else r_end
    lam = spec.lam if lam is None else lam
    E_b, lam_b = np.broadcast_arrays(np.atleast_1d(np.asarray(E, float)), np.atleast_1d(np.asarray(lam, float)))
    E_b = E_b.copy()
    lam_b = lam_b.copy()
    ep = E_b + spec.mu if e_plus is None else np.broadcast_to(np.asarray(e_plus, float), E_b.shape).copy()
    em = E_b - spec.mu if e_minus is None else np.broadcast_to(np.asarray(e_minus, float), E_b.shape).copy()
    F0, G0, log0 = origin_series(channel, E_b, spec, r_min, lam=lam_b, e_plus=ep, e_minus=em, scaled=True)
    y0 = np.stack((np.asarray(F0, float), np.asarray(G0, float)))
    rhs = _make_rhs(channel, spec, lam_b, ep, em)
    y, log_scale, angle, samples = _dopri(rhs, y0, r_min, r_end, rtol, atol, r_eval=r_eval)
    log_scale = log_scale + log0
    samples = [(r, ys, ls + log0) for r, ys, ls in samples]
    return BatchResult(y[0], y[1], log_scale, angle, samples)


def integrate(
    channel: AngularChannel,
    E,
    spec,
    r_min: float | None = None,
    r_end: float | None = None,
    *,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    r_eval=None,
) -> RadialSolution:
    """Regular interior solution for one energy or an array of energies.

    ``r_eval`` optionally lists radii at which the trajectory is recorded;
    it is returned as ``(r, F, G)`` arrays sharing the end-point scale.
    """
    scalar = np.ndim(E) == 0
    res = integrate_batch(channel, E, spec, r_min=r_min, r_end=r_end, rtol=rtol, atol=atol, r_eval=r_eval)
    F, G, log_scale, samples = res.F, res.G, res.log_scale, res.samples
    traj = None
    if samples:
        rs = np.array([s[0] for s in samples])
        # bring every sample to the final scale
        shift = np.array([np.exp(s[2] - log_scale) for s in samples])
        Fs = np.array([s[1][0] for s in samples]) * shift
        Gs = np.array([s[1][1] for s in samples]) * shift
        if scalar:
            Fs, Gs = Fs[:, 0], Gs[:, 0]
        traj = (rs, Fs, Gs)
    r_end = spec.a if r_end is None else r_end
    if scalar:
        return RadialSolution(channel, float(E), float(F[0]), float(G[0]), r_end, float(log_scale[0]), traj)
    return RadialSolution(channel, np.asarray(E, float), F, G, r_end, log_scale, traj)


def log_derivative_beta(channel: AngularChannel, E, spec, side: str = "inner", solution=None):
    """a F'(a) / F(a) from the first-order system (no numerical differentiation).

    ``side="inner"`` uses V(a-) and is the interior logarithmic derivative.
    ``side="outer"`` uses V(a+) = 0; since F and G (not F') are continuous
    at a, this is the value that enters the exterior matching when V jumps
    at the cutoff.  The two coincide for potentials continuous at a.
    Returns +-inf where F(a) = 0.
    """
    sol = solution if solution is not None else integrate(channel, E, spec)
    a = spec.a
    if side == "inner":
        v = float(spec.eval(a))
    elif side == "outer":
        v = 0.0
    else:
        raise ValueError("side must be 'inner' or 'outer'")
    F = np.asarray(sol.F_at_a, dtype=float)
    G = np.asarray(sol.G_at_a, dtype=float)
    Ea = np.asarray(sol.E, dtype=float)
    num = channel.j_minus * F - a * (Ea + spec.mu - v) * G
    with np.errstate(divide="ignore", invalid="ignore"):
        beta = np.where(F != 0, num / np.where(F != 0, F, 1.0), np.copysign(np.inf, num))
    return float(beta) if np.ndim(E) == 0 else beta


def start_radius_check(channel: AngularChannel, E, spec, r_min: float | None = None) -> float:
    """Largest change of G(a)/F(a) direction when r_min is halved.

    Measured as |sin| of the angle between the two (F, G) end vectors.
    """
    r_min = spec.a * 1e-4 if r_min is None else r_min
    one = integrate_batch(channel, E, spec, r_min=r_min)
    two = integrate_batch(channel, E, spec, r_min=0.5 * r_min)
    F1, G1, F2, G2 = one.F, one.G, two.F, two.G
    n1 = np.hypot(F1, G1)
    n2 = np.hypot(F2, G2)
    return float(np.max(np.abs(F1 * G2 - G1 * F2) / (n1 * n2)))

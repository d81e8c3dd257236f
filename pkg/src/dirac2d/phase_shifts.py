"""Phase shifts on the two continuum branches E = +E_k and E = -E_k.

The interior solution is matched at the cutoff to the free exterior
combination cos(eta) J - sin(eta) N.  The raw phase is only known modulo pi;
an absolute value comes from continuity:

* in k, anchored at the largest momentum to the Born estimate, or
* in the coupling lam, starting from eta = 0 at lam = 0.

Both are sampled adaptively.  The continuous polar angle of the interior
solution at the cutoff gives an independent winding count, used to detect
resonances too narrow to show up between grid points.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .potential import PotentialSpec
from .radial import AngularChannel, energy_terms, integrate_batch
from .special_functions import jn_sequence, yn_sequence

__all__ = [
    "PhaseShiftCurve",
    "RefinementError",
    "InconclusiveThresholdError",
    "QuadratureError",
    "PowerLaw",
    "LogLaw",
    "FitFailure",
    "branch_momentum",
    "tan_eta",
    "raw_phase",
    "absolute_phase",
    "born_phase",
    "unwrap_sweep",
    "lambda_continuation",
    "threshold_extrapolate",
    "threshold_fit",
    "default_k_grid",
    "write_curve_csv",
]

HALF_PI = 0.5 * math.pi
WINDING_NOISE = 1e-9  # assumed error of the matched phase, radians


class RefinementError(RuntimeError):
    """A jump in the raw phase survived the maximum refinement depth."""

    def __init__(self, lo: float, hi: float, what: str = "k"):
        self.interval = (lo, hi)
        super().__init__(f"phase jump could not be resolved between {what} = {lo!r} and {hi!r}")


class InconclusiveThresholdError(RuntimeError):
    def __init__(self, value: float, residual: float):
        self.value = value
        self.residual = residual
        super().__init__(f"threshold phase {value:.6g} is {residual:.3g} away from the nearest multiple of pi")


class QuadratureError(RuntimeError):
    pass


@dataclass
class PhaseShiftCurve:
    """Unwrapped phase shift eta(k) for one channel and branch."""

    channel: AngularChannel
    branch: int
    mu: float
    a: float
    k: np.ndarray
    eta: np.ndarray
    tan_raw: np.ndarray
    anchor: dict = field(default_factory=dict)
    threshold: float | None = None
    threshold_residual: float | None = None

    @property
    def E(self) -> np.ndarray:
        return self.branch * np.sqrt(self.k**2 + self.mu**2)

    def eta_at(self, k: float) -> float:
        """The continuous-branch value at ``k`` (interpolated in log k)."""
        return float(np.interp(math.log(k), np.log(self.k), self.eta))


@dataclass(frozen=True)
class PowerLaw:
    """tan(eta) ~ coefficient * (k a)^(2 p)"""

    p: int
    coefficient: float
    slope: float


@dataclass(frozen=True)
class LogLaw:
    """tan(eta) ~ pi / (2 ln(k a))"""

    max_relative_residual: float


@dataclass(frozen=True)
class FitFailure:
    reason: str
    slope: float | None = None


def wrap_half_pi(x):
    """Reduce modulo pi into [-pi/2, pi/2)."""
    return (np.asarray(x) + HALF_PI) % math.pi - HALF_PI


def branch_momentum(E, mu: float = 1.0):
    """(k, branch) for a continuum energy |E| > mu."""
    E = np.asarray(E, dtype=float)
    if np.any(np.abs(E) <= mu):
        raise ValueError("continuum energies need |E| > mu")
    branch = np.where(E > 0, 1, -1)
    absE = np.abs(E)
    return np.sqrt((absE - mu) * (absE + mu)), branch


def _exterior_basis(channel: AngularChannel, k, e_plus, a):
    """(P, Q): the J and N exterior solutions at r = a, as (F, G) pairs."""
    m, mp = channel.m, channel.m_prime
    xi = np.asarray(k, dtype=float) * a
    top = max(m, mp)
    J = jn_sequence(top, xi)
    N = yn_sequence(top, xi)
    rho = channel.eps * k / e_plus
    P = (J[m], rho * J[mp])
    Q = (N[m], rho * N[mp])
    return P, Q


def _interior(channel, branch, spec, k, lam=None, rtol=1e-10, atol=1e-12, r_min=None):
    E, ep, em = energy_terms(k, branch, spec.mu)
    res = integrate_batch(channel, E, spec, lam=lam, e_plus=ep, e_minus=em, rtol=rtol, atol=atol, r_min=r_min)
    lam_eff = np.broadcast_to(np.asarray(spec.lam if lam is None else lam, dtype=float), res.F.shape)
    free = lam_eff == 0.0
    if np.any(free):
        # zero coupling: the interior solution is the free one, exactly up to scale
        kf = np.broadcast_to(k, res.F.shape)[free]
        P, _ = _exterior_basis(channel, kf, np.broadcast_to(ep, res.F.shape)[free], spec.a)
        F, G = res.F[free], res.G[free]
        scale = np.hypot(F, G) / np.hypot(P[0], P[1])
        sign = np.where(P[0] * F + P[1] * G < 0, -1.0, 1.0)
        res.F[free] = sign * scale * P[0]
        res.G[free] = sign * scale * P[1]
    return res, ep


def _match(channel, k, ep, F, G, a):
    """Homogeneous matching: tan(eta) = num / den.

    Equivalent to (xi J' - beta J) / (xi N' - beta N) with beta the outer
    logarithmic derivative: both sides are multiplied through by F(a).
    """
    P, Q = _exterior_basis(channel, k, ep, a)
    num = G * P[0] - F * P[1]
    den = G * Q[0] - F * Q[1]
    return num, den, P, Q


def _raw_from(num, den):
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(den != 0, num / np.where(den != 0, den, 1.0), np.inf)
    return wrap_half_pi(np.arctan2(num, den)), t


def tan_eta(channel: AngularChannel, E, spec: PotentialSpec, **opts):
    """tan(eta) at continuum energies E (either sign); inf at a pole."""
    k, br = branch_momentum(E, spec.mu)
    k = np.atleast_1d(k)
    br = np.atleast_1d(br)
    out = np.empty_like(k)
    for b in (1, -1):
        sel = br == b
        if np.any(sel):
            out[sel] = raw_phase(channel, b, spec, k[sel], **opts)[1]
    return float(out[0]) if np.ndim(E) == 0 else out


def raw_phase(channel: AngularChannel, branch: int, spec: PotentialSpec, k, lam=None, **opts):
    """(eta mod pi in [-pi/2, pi/2), tan eta) at the momenta ``k``."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    res, ep = _interior(channel, branch, spec, k, lam=lam, **opts)
    num, den, _, _ = _match(channel, k, ep, res.F, res.G, spec.a)
    return _raw_from(num, den)


def _winding(channel, branch, spec, k, lam, **opts):
    """Raw phase and the absolute phase from the Pruefer winding.

    The interior angle at the cutoff, measured from the free (lam = 0)
    solution, fixes which pi-interval eta lies in: the exterior solution
    turns monotonically with eta, by one half turn per pi.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    lam = np.atleast_1d(np.asarray(spec.lam if lam is None else lam, dtype=float))
    k, lam = np.broadcast_arrays(k, lam)
    n = k.size
    kk = np.concatenate((k.ravel(), k.ravel()))
    ll = np.concatenate((lam.ravel(), np.zeros(n)))
    res, ep = _interior(channel, branch, spec, kk, lam=ll, **opts)
    F, G = res.F[:n], res.G[:n]
    delta = res.angle[:n] - res.angle[n:]
    num, den, P, Q = _match(channel, k.ravel(), ep[:n], F, G, spec.a)
    raw, t = _raw_from(num, den)
    # orient the exterior basis so that eta = 0 is the free interior direction
    c = np.sign(P[0] * res.F[n:] + P[1] * res.G[n:])
    c[c == 0] = 1.0
    P0, P1, Q0, Q1 = c * P[0], c * P[1], c * Q[0], c * Q[1]
    y = raw % math.pi
    X0 = np.cos(y) * P0 - np.sin(y) * Q0
    X1 = np.cos(y) * P1 - np.sin(y) * Q1
    turned = np.arctan2(P0 * X1 - P1 * X0, P0 * X0 + P1 * X1)
    # the turn is in [0, pi) on the upper branch and (-pi, 0] on the lower
    s = 1.0 if branch > 0 else -1.0
    turned = np.where(s * turned < -HALF_PI, turned + s * 2.0 * math.pi, turned)
    turns = np.round((delta - turned) / (s * math.pi))
    eta = y + turns * math.pi
    # d(turn)/d(eta) = det(P, -Q) / |X|^2: where it is huge, a rounding-level
    # change of eta moves the turn by a sizeable angle and the count is noise
    steep = np.abs(P0 * Q1 - P1 * Q0) / (X0 * X0 + X1 * X1)
    eta = np.where(steep * WINDING_NOISE < 0.1, eta, np.nan)
    return raw.reshape(k.shape), t.reshape(k.shape), eta.reshape(k.shape)


def absolute_phase(channel: AngularChannel, branch: int, spec: PotentialSpec, k, lam=None, **opts):
    """eta on its continuous branch from the winding of the interior solution.

    NaN where the winding count is ill-conditioned (tan eta far below
    rounding level, as for m >= 1 at very small k a).
    """
    return _winding(channel, branch, spec, k, lam, **opts)[2]


def _born_integrand(channel, branch, spec, k, r):
    m, mp = channel.m, channel.m_prime
    ek = math.sqrt(k * k + spec.mu**2)
    J = jn_sequence(max(m, mp), k * r)
    v = spec.eval(r)
    if branch > 0:
        w = (ek + spec.mu) * J[m] ** 2 + (k * k / (ek + spec.mu)) * J[mp] ** 2
        return -HALF_PI * r * v * w
    w = (k * k / (ek + spec.mu)) * J[m] ** 2 + (ek + spec.mu) * J[mp] ** 2
    return HALF_PI * r * v * w


def born_phase(channel: AngularChannel, k: float, spec: PotentialSpec, branch: int = 1, tol: float = 1e-10) -> float:
    """First-order (Born) phase shift.

    Composite Gauss-Legendre over [0, a]; the panel count follows the
    number of oscillations k a and is doubled until two estimates agree.
    """
    a = spec.a
    x, w = leggauss(20)
    panels = max(4, int(math.ceil(k * a / 2.0)))
    prev = None
    for _ in range(12):
        edges = np.linspace(0.0, a, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        r = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        vals = _born_integrand(channel, branch, spec, k, r).reshape(panels, -1)
        est = float(np.sum(half * (vals @ w)))
        if prev is not None and abs(est - prev) <= tol * max(1.0, abs(est)):
            return est
        prev = est
        panels *= 2
    raise QuadratureError(f"Born integral did not converge at k = {k}")


def default_k_grid(a: float, k_min: float | None = None, k_max: float = 200.0, points: int = 400) -> np.ndarray:
    k_min = 1e-5 / a if k_min is None else k_min
    return np.geomspace(k_min, k_max, points)


def _refine(xs, evaluate, threshold, max_depth, what, midpoint):
    """Insert midpoints until neighbouring values differ by at most ``threshold``.

    ``evaluate`` returns (raw, tan, winding) arrays.  Both the reduced raw
    difference and the winding difference are tested.
    """
    raw, tan, wind = evaluate(xs)
    for depth in range(max_depth + 1):
        jump_raw = np.abs(wrap_half_pi(np.diff(raw)))
        with np.errstate(invalid="ignore"):
            jump_wind = np.nan_to_num(np.abs(np.diff(wind)), nan=0.0)
        bad = np.nonzero((jump_raw > threshold) | (jump_wind > threshold))[0]
        if bad.size == 0:
            return xs, raw, tan, wind
        if depth == max_depth:
            i = int(bad[0])
            raise RefinementError(float(xs[i]), float(xs[i + 1]), what)
        mids = midpoint(xs[bad], xs[bad + 1])
        r2, t2, w2 = evaluate(mids)
        order = np.argsort(np.concatenate((xs, mids)), kind="stable")
        xs = np.concatenate((xs, mids))[order]
        raw = np.concatenate((raw, r2))[order]
        tan = np.concatenate((tan, t2))[order]
        wind = np.concatenate((wind, w2))[order]
    raise AssertionError("unreachable")


def _continue(raw, start_value, start_index):
    """Continuous branch through reduced raw values from one anchored sample."""
    eta = np.empty_like(raw)
    eta[start_index] = start_value
    for i in range(start_index + 1, raw.size):
        eta[i] = eta[i - 1] + wrap_half_pi(raw[i] - raw[i - 1])
    for i in range(start_index - 1, -1, -1):
        eta[i] = eta[i + 1] + wrap_half_pi(raw[i] - raw[i + 1])
    return eta


def unwrap_sweep(
    channel: AngularChannel,
    branch: int,
    spec: PotentialSpec,
    k_grid=None,
    *,
    k_max: float = 200.0,
    points: int = 400,
    refine_threshold: float = math.pi / 4,
    max_depth: int = 30,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> PhaseShiftCurve:
    """eta(k) over a momentum grid, continuous in k.

    The phase at the largest momentum is fixed to the representative that
    lies within pi/2 of the Born estimate, then continued downward.
    """
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")
    ks = default_k_grid(spec.a, k_max=k_max, points=points) if k_grid is None else np.asarray(k_grid, float)
    if ks.ndim != 1 or ks.size < 2 or np.any(ks <= 0) or np.any(np.diff(ks) <= 0):
        raise ValueError("k grid must be positive and strictly increasing")
    opts = dict(rtol=rtol, atol=atol)

    def evaluate(kv):
        return _winding(channel, branch, spec, kv, None, **opts)

    ks, raw, tan, _ = _refine(ks, evaluate, refine_threshold, max_depth, "k", lambda lo, hi: np.sqrt(lo * hi))
    top = float(ks[-1])
    born = born_phase(channel, top, spec, branch)
    anchor_value = float(raw[-1] + math.pi * np.round((born - raw[-1]) / math.pi))
    eta = _continue(raw, anchor_value, raw.size - 1)
    return PhaseShiftCurve(
        channel=channel,
        branch=branch,
        mu=spec.mu,
        a=spec.a,
        k=ks,
        eta=eta,
        tan_raw=tan,
        anchor={"k": top, "born": born, "eta": anchor_value},
    )


def lambda_continuation(
    channel: AngularChannel,
    branch: int,
    k: float,
    spec: PotentialSpec,
    lam_grid=None,
    *,
    points: int = 201,
    refine_threshold: float = math.pi / 4,
    max_depth: int = 30,
    rtol: float = 1e-10,
    atol: float = 1e-12,
):
    """eta at fixed k, followed in the coupling from 0 up to ``spec.lam``.

    Returns ``(lam, eta)``; the coupling multiplies the shape of ``spec``.
    """
    if lam_grid is None:
        lam_grid = np.linspace(0.0, spec.lam, points)
    lams = np.asarray(lam_grid, dtype=float)
    if lams[0] != 0.0:
        lams = np.concatenate(([0.0], lams))
    opts = dict(rtol=rtol, atol=atol)

    def evaluate(lv):
        return _winding(channel, branch, spec, np.full(np.shape(lv), float(k)), lv, **opts)

    # refinement wants an increasing grid; negative couplings run mirrored
    order = 1.0 if lams[-1] >= 0 else -1.0
    mid = lambda lo, hi: 0.5 * (lo + hi)  # noqa: E731
    xs, raw, _, _ = _refine(order * lams, lambda x: evaluate(order * x), refine_threshold, max_depth, "lambda", mid)
    return order * xs, _continue(raw, 0.0, 0)


def threshold_extrapolate(curve: PhaseShiftCurve, max_residual: float = 0.3):
    """Threshold value of eta: the smallest-k sample rounded to a multiple of pi.

    Returns ``(n * pi, residual)`` and records both on the curve.
    """
    if curve.k[0] * curve.a > 1e-3:
        raise ValueError("threshold extrapolation needs k_min * a <= 1e-3")
    value = float(curve.eta[0])
    n = round(value / math.pi)
    residual = abs(value - n * math.pi)
    if residual > max_residual:
        raise InconclusiveThresholdError(value, residual)
    curve.threshold = n * math.pi
    curve.threshold_residual = residual
    return n * math.pi, residual


def threshold_fit(curve: PhaseShiftCurve, window=(1e-5, 1e-2), log_tolerance: float = 0.1):
    """Classify the small-momentum behaviour of tan(eta).

    A log-log slope within 0.2 of a positive even integer 2p gives a
    :class:`PowerLaw`; otherwise agreement with pi / (2 ln(ka)) to within
    ``log_tolerance`` gives a :class:`LogLaw`.
    """
    xi = curve.k * curve.a
    sel = (xi >= window[0] * (1 - 1e-12)) & (xi <= window[1] * (1 + 1e-12))
    if np.count_nonzero(sel) < 6:
        return FitFailure("fewer than six samples in the fit window")
    x = xi[sel]
    t = np.tan(curve.eta[sel])
    if np.any(t == 0) or not np.all(np.isfinite(t)):
        return FitFailure("tan(eta) vanishes or diverges in the fit window")
    slope, intercept = np.polyfit(np.log(x), np.log(np.abs(t)), 1)
    p = int(round(slope / 2.0))
    if p >= 1 and abs(slope - 2 * p) < 0.2:
        sign = float(np.sign(np.median(t)))
        return PowerLaw(p, sign * math.exp(intercept), float(slope))
    model = math.pi / (2.0 * np.log(x))
    rel = float(np.max(np.abs(t - model) / np.abs(model)))
    if rel < log_tolerance:
        return LogLaw(rel)
    return FitFailure("neither a power law nor the logarithmic law fits", float(slope))


def write_curve_csv(curves, path) -> None:
    """Columns: k, E, tan_eta_raw, eta_unwrapped, branch, j."""
    if isinstance(curves, PhaseShiftCurve):
        curves = [curves]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "E", "tan_eta_raw", "eta_unwrapped", "branch", "j"])
        for c in curves:
            for k, E, t, e in zip(c.k, c.E, c.tan_raw, c.eta):
                w.writerow([repr(float(k)), repr(float(E)), repr(float(t)), repr(float(e)), c.branch, str(c.channel)])

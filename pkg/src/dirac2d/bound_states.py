"""Bound states in the gap -mu < E < mu and the critical states at E = +-mu.

Gap states are zeros of the matching determinant between the interior
solution and the decaying exterior solution K.  At the gap edges the
exterior solution becomes a power law, and a state exactly at the edge is
a critical (zero-energy-like) state; it counts towards the Levinson number
only when it is normalisable.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .potential import PotentialSpec, SquareWell
from .radial import AngularChannel, integrate_batch
from .special_functions import jn_sequence, kn_scaled_sequence

__all__ = [
    "BoundStateCatalog",
    "CriticalCheck",
    "NotApplicableError",
    "ResolutionWarning",
    "exterior_gap_solution",
    "matching_determinant",
    "scan_and_bisect",
    "critical_state_check",
    "square_well_critical_residual",
    "bound_state_catalog",
    "write_catalog_csv",
]


class NotApplicableError(ValueError):
    pass


class ResolutionWarning(UserWarning):
    pass


@dataclass
class CriticalCheck:
    """Matching at one gap edge.

    ``matched`` means the interior solution joins the power-law exterior
    within tolerance; ``flag`` is the Levinson contribution (normalisable
    states only); ``half_bound`` marks a matched but non-normalisable state.
    """

    edge: int
    residual: float
    matched: bool
    flag: int
    half_bound: bool


@dataclass
class BoundStateCatalog:
    channel: AngularChannel
    mu: float
    energies: np.ndarray
    critical_plus: CriticalCheck
    critical_minus: CriticalCheck
    warnings: list = field(default_factory=list)

    @property
    def n_gap(self) -> int:
        return int(self.energies.size)

    @property
    def delta_plus(self) -> int:
        return self.critical_plus.flag

    @property
    def delta_minus(self) -> int:
        return self.critical_minus.flag

    @property
    def levinson_number(self) -> int:
        return self.n_gap + self.delta_plus + self.delta_minus


def _gap_terms(E, mu, e_plus=None, e_minus=None):
    E = np.asarray(E, dtype=float)
    ep = E + mu if e_plus is None else np.asarray(e_plus, dtype=float)
    em = E - mu if e_minus is None else np.asarray(e_minus, dtype=float)
    return ep, em, np.sqrt(-em * ep)


def exterior_gap_solution(channel: AngularChannel, E, r, mu: float = 1.0, scaled: bool = False):
    """Decaying exterior solution F = K_m(kr), G = kappa K_m'(kappa r) / (E + mu).

    With ``scaled`` both components carry the common factor exp(kappa r).
    """
    if np.any(np.abs(np.asarray(E, dtype=float)) >= mu):
        raise ValueError("gap energies need |E| < mu")
    ep, em, kappa = _gap_terms(E, mu)
    m, mp = channel.m, channel.m_prime
    K = kn_scaled_sequence(max(m, mp), kappa * np.asarray(r, dtype=float))
    F, G = K[m], kappa * K[mp] / ep
    if not scaled:
        damp = np.exp(-kappa * r)
        F, G = F * damp, G * damp
    return F, G


def matching_determinant(channel: AngularChannel, E, spec: PotentialSpec, e_plus=None, e_minus=None, **opts):
    """F_in G_out - G_in F_out at r = a with both pairs of unit length.

    The sign of the interior pair is the one fixed by the origin series;
    forcing F >= 0 instead would add sign changes where F(a) crosses zero.
    """
    E = np.atleast_1d(np.asarray(E, dtype=float))
    ep, em, kappa = _gap_terms(E, spec.mu, e_plus, e_minus)
    res = integrate_batch(channel, E, spec, e_plus=ep, e_minus=em, **opts)
    m, mp = channel.m, channel.m_prime
    K = kn_scaled_sequence(max(m, mp), kappa * spec.a)
    Fo, Go = K[m], kappa * K[mp] / ep
    no = np.hypot(Fo, Go)
    ni = np.hypot(res.F, res.G)
    return (res.F * Go - res.G * Fo) / (ni * no)


def _bisect(channel, spec, lo, hi, d_lo, tol, opts, edge=None):
    """Vectorised bisection on brackets [lo, hi] with M(lo) of sign d_lo.

    Near an edge the bracket is parametrised by the distance to it so that
    E - mu (or E + mu) keeps full relative precision.
    """
    mu = spec.mu
    lo, hi, s_lo = lo.copy(), hi.copy(), np.sign(d_lo)
    while np.any(hi - lo > tol):
        mid = 0.5 * (lo + hi)
        if edge is None:
            d = matching_determinant(channel, mid, spec, **opts)
        elif edge > 0:
            d = matching_determinant(channel, mu - mid, spec, e_plus=2 * mu - mid, e_minus=-mid, **opts)
        else:
            d = matching_determinant(channel, -mu + mid, spec, e_plus=mid, e_minus=mid - 2 * mu, **opts)
        same = np.sign(d) == s_lo
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    return 0.5 * (lo + hi)


def _edge_scan(channel, spec, edge, eps_g, depth, tol, opts):
    """Roots with distance from the edge between ``depth`` and ``eps_g``."""
    mu = spec.mu
    decades = max(1.0, math.log10(eps_g / depth))
    delta = np.geomspace(eps_g, depth, int(8 * decades) + 2)
    if edge > 0:
        d = matching_determinant(channel, mu - delta, spec, e_plus=2 * mu - delta, e_minus=-delta, **opts)
    else:
        d = matching_determinant(channel, -mu + delta, spec, e_plus=delta, e_minus=delta - 2 * mu, **opts)
    idx = np.nonzero(np.sign(d[1:]) != np.sign(d[:-1]))[0]
    if idx.size == 0:
        return np.empty(0)
    # bracket in delta: [delta[i+1], delta[i]] (delta decreases)
    lo, hi = delta[idx + 1], delta[idx]
    roots = _bisect(channel, spec, lo, hi, d[idx + 1], np.minimum(tol, 1e-3 * lo), opts, edge=edge)
    return mu - roots if edge > 0 else -mu + roots


def scan_and_bisect(
    channel: AngularChannel,
    spec: PotentialSpec,
    n_grid: int = 2000,
    eps_g: float = 1e-6,
    tol: float = 1e-12,
    edge_depth: float = 1e-13,
    rtol: float = 1e-10,
    atol: float = 1e-12,
):
    """Gap energies from sign changes of the matching determinant.

    A uniform grid on [-mu + eps_g, mu - eps_g] is bisected to ``tol``;
    geometric grids then search the remaining strips down to a distance
    ``edge_depth`` from each edge.  Returns ``(energies, warnings)``.
    """
    mu = spec.mu
    opts = dict(rtol=rtol, atol=atol)
    grid = np.linspace(-mu + eps_g * mu, mu - eps_g * mu, n_grid)
    d = matching_determinant(channel, grid, spec, **opts)
    notes = []
    if np.any(d == 0):
        notes.append("determinant vanishes exactly on a grid point")
    s = np.sign(d)
    idx = np.nonzero(s[1:] * s[:-1] < 0)[0]
    roots = [np.empty(0)]
    if idx.size:
        roots.append(_bisect(channel, spec, grid[idx], grid[idx + 1], d[idx], tol, opts))
    roots.append(grid[d == 0])
    # a shallow local minimum of |M| without a sign change can hide a pair
    mag = np.abs(d)
    inner = np.arange(1, n_grid - 1)
    cand = inner[(mag[inner] < mag[inner - 1]) & (mag[inner] < mag[inner + 1]) & (mag[inner] < 1e-3)]
    for i in cand:
        fine = np.linspace(grid[i - 1], grid[i + 1], 65)
        df = matching_determinant(channel, fine, spec, **opts)
        jdx = np.nonzero(np.sign(df[1:]) * np.sign(df[:-1]) < 0)[0]
        if jdx.size >= 2:
            msg = f"two roots within one grid cell near E = {grid[i]:.12g}; resolved on a finer grid"
            warnings.warn(msg, ResolutionWarning, stacklevel=2)
            notes.append(msg)
            roots.append(_bisect(channel, spec, fine[jdx], fine[jdx + 1], df[jdx], tol, opts))
    if edge_depth < eps_g:
        for edge in (1, -1):
            roots.append(_edge_scan(channel, spec, edge, eps_g * mu, edge_depth * mu, tol, opts))
    E = np.sort(np.concatenate(roots))
    if E.size > 1:
        keep = np.concatenate(([True], np.diff(E) > 10 * tol))
        E = E[keep]
    return E, notes


def _edge_exterior(channel, edge, a, mu):
    """Power-law exterior pair (F, G) at r = a for E = edge * mu."""
    m, mp = channel.m, channel.m_prime
    if edge > 0:
        # F = r^-m, G = -(F' - j_- F / r) / (2 mu)
        return 1.0, (m + channel.j_minus) / (2.0 * mu * a)
    # G = r^-m', F = (G' + j_+ G / r) / (-2 mu)
    return (mp - channel.j_plus) / (2.0 * mu * a), 1.0


def critical_state_check(channel: AngularChannel, spec: PotentialSpec, edge: int, tol: float = 1e-8, **opts) -> CriticalCheck:
    """Does a state sit exactly at E = edge * mu?

    The residual is the unit-normalised matching determinant against the
    power-law exterior.  Only m > 1 (upper edge) or m' > 1 (lower edge)
    gives a normalisable state; a match otherwise is reported as half-bound.
    """
    mu = spec.mu
    if edge not in (1, -1):
        raise ValueError("edge must be +1 or -1")
    E = edge * mu
    ep, em = (2.0 * mu, 0.0) if edge > 0 else (0.0, -2.0 * mu)
    res = integrate_batch(channel, np.array([E]), spec, e_plus=ep, e_minus=em, **opts)
    Fo, Go = _edge_exterior(channel, edge, spec.a, mu)
    Fi, Gi = float(res.F[0]), float(res.G[0])
    resid = abs(Fi * Go - Gi * Fo) / (math.hypot(Fi, Gi) * math.hypot(Fo, Go))
    matched = resid < tol
    order = channel.m if edge > 0 else channel.m_prime
    normalisable = order > 1
    return CriticalCheck(edge, resid, matched, int(matched and normalisable), bool(matched and not normalisable))


def _lead(x, nu):
    """(x/2)^nu / nu!, the leading term of J_nu at small x."""
    return (0.5 * x) ** nu / math.factorial(nu)


def square_well_critical_residual(channel: AngularChannel, v0: float, a: float, edge: int, mu: float = 1.0) -> float:
    """Closed-form critical-state condition for an attractive square well of depth v0.

    Upper edge (k0^2 = v0^2 + 2 mu v0):
        j > 3/2:   k0 a J_{m+1}(k0 a) - (2m + m v0/mu) J_m(k0 a)
        j < 0:     J_{m-1}(k0 a)
    Lower edge (v0 > 2 mu, kt^2 = v0^2 - 2 mu v0):
        j < -3/2:  kt a J_{m'+1}(kt a) - (2m' - m' v0/mu) J_{m'}(kt a)
        j > 0:     J_{m'-1}(kt a)

    Each expression is divided by a positive power of its argument so the
    value stays informative as the argument goes to zero; the zeros in v0
    are unchanged.  j = -1/2 (upper) and j = 1/2 (lower) are m = 1 or
    m' = 1 conditions: their zeros are half-bound, not counted, states.
    """
    j = channel.j
    if edge > 0:
        order, other_sign = channel.m, 1.0
        x2 = v0 * v0 + 2.0 * mu * v0
        if j > 1.5:
            kind = "bessel_pair"
        elif j < 0:
            kind = "single"
        else:
            raise NotApplicableError(f"no upper-edge condition for j = {channel}")
    elif edge < 0:
        order, other_sign = channel.m_prime, -1.0
        if v0 < 2.0 * mu:
            raise NotApplicableError("the lower-edge condition needs v0 >= 2 mu")
        x2 = v0 * v0 - 2.0 * mu * v0
        if j < -1.5:
            kind = "bessel_pair"
        elif j > 0:
            kind = "single"
        else:
            raise NotApplicableError(f"no lower-edge condition for j = {channel}")
    else:
        raise ValueError("edge must be +1 or -1")
    x = math.sqrt(max(x2, 0.0)) * a
    if kind == "single":
        nu = order - 1
        if x == 0.0:
            return 1.0
        return float(jn_sequence(nu, x)[nu]) / _lead(x, nu)
    J = jn_sequence(order + 1, x)
    if x == 0.0:
        if edge > 0:
            return -2.0 * order - order * v0 / mu
        return 1.0 / (2.0 * (order + 1)) + order / (v0 * mu * a * a)
    coeff = 2.0 * order + other_sign * order * v0 / mu
    val = (x * float(J[order + 1]) - coeff * float(J[order])) / _lead(x, order)
    if edge < 0:
        # the bracket is O(x^2) as v0 -> 2 mu
        val /= x * x
    return val


def bound_state_catalog(channel: AngularChannel, spec: PotentialSpec, crit_tol: float = 1e-8, **scan_opts) -> BoundStateCatalog:
    """Gap energies and both edge checks, merged without double counting.

    A gap root closer to an edge than ``eps_g`` is the same state as a
    matched critical check at that edge and is dropped from the gap list.
    """
    energies, notes = scan_and_bisect(channel, spec, **scan_opts)
    plus = critical_state_check(channel, spec, 1, tol=crit_tol)
    minus = critical_state_check(channel, spec, -1, tol=crit_tol)
    eps_g = scan_opts.get("eps_g", 1e-6) * spec.mu
    mu = spec.mu
    if plus.matched:
        energies = energies[energies < mu - eps_g]
    if minus.matched:
        energies = energies[energies > -mu + eps_g]
    return BoundStateCatalog(channel, mu, energies, plus, minus, notes)


def write_catalog_csv(catalogs, path) -> None:
    """Columns: j, E, kind (gap, critical_plus, critical_minus, half_bound_diagnostic)."""
    if isinstance(catalogs, BoundStateCatalog):
        catalogs = [catalogs]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["j", "E", "kind"])
        for cat in catalogs:
            for E in cat.energies:
                w.writerow([str(cat.channel), repr(float(E)), "gap"])
            for chk, name in ((cat.critical_plus, "critical_plus"), (cat.critical_minus, "critical_minus")):
                if chk.flag:
                    w.writerow([str(cat.channel), repr(chk.edge * cat.mu), name])
                elif chk.half_bound:
                    w.writerow([str(cat.channel), repr(chk.edge * cat.mu), "half_bound_diagnostic"])

"""Levinson audit: eta_j(mu) + eta_j(-mu) = n_j pi, channel by channel.

The phase side (threshold values of the unwrapped curves) and the counting
side (gap states plus normalisable critical states) are computed
independently; neither is ever filled in from the other.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .bound_states import bound_state_catalog
from .phase_shifts import (
    InconclusiveThresholdError,
    default_k_grid,
    threshold_extrapolate,
    unwrap_sweep,
)
from .potential import PotentialSpec
from .radial import AngularChannel

__all__ = [
    "PASS",
    "FAIL",
    "INCONCLUSIVE",
    "AuditConfig",
    "AuditError",
    "LevinsonReport",
    "SweepResult",
    "audit_channel",
    "audit_sweep",
    "count_bound",
    "edge_depth",
    "refine_transition",
]

PASS = "PASS"
FAIL = "FAIL"
INCONCLUSIVE = "INCONCLUSIVE"


class AuditError(RuntimeError):
    """A sub-operation failed; ``channel`` says where."""

    def __init__(self, channel, cause):
        self.channel = channel
        self.cause = cause
        super().__init__(f"channel j = {channel}: {type(cause).__name__}: {cause}")


@dataclass
class AuditConfig:
    channels: tuple = (0.5, -0.5, 1.5, -1.5)
    k_min: float | None = None
    k_max: float = 200.0
    points: int = 400
    levinson_tol: float = 5e-2
    anchor_tol: float = 2e-2
    threshold_max_residual: float = 0.3
    refine_threshold: float = math.pi / 4
    max_depth: int = 30
    n_grid: int = 2000
    eps_g: float = 1e-6
    critical_tol: float = 1e-8
    rtol: float = 1e-10
    atol: float = 1e-12

    def validate(self, spec: PotentialSpec) -> "AuditConfig":
        k_min = 1e-5 / spec.a if self.k_min is None else self.k_min
        if k_min * spec.a > 1e-3:
            raise ValueError(f"k_min * a = {k_min * spec.a:.3g} exceeds 1e-3")
        if self.k_max < 100.0 * spec.mu:
            raise ValueError(f"k_max = {self.k_max} is below 100 mu")
        if not 0 < k_min < self.k_max:
            raise ValueError("need 0 < k_min < k_max")
        if self.points < 2:
            raise ValueError("need at least two grid points")
        return dataclasses.replace(self, k_min=k_min)

    @classmethod
    def from_dict(cls, grid: dict | None = None, tolerances: dict | None = None, channels=None) -> "AuditConfig":
        kw = {}
        names = {f.name for f in dataclasses.fields(cls)}
        for block in (grid or {}, tolerances or {}):
            for key, val in block.items():
                if key not in names:
                    raise ValueError(f"unknown configuration key {key!r}")
                kw[key] = val
        if channels is not None:
            kw["channels"] = tuple(channels)
        return cls(**kw)


@dataclass
class LevinsonReport:
    channel: AngularChannel
    status: str
    n_minus: int
    delta_plus: int
    delta_minus: int
    eta_plus_threshold: float | None
    eta_minus_threshold: float | None
    eta_plus_infinity: float
    eta_minus_infinity: float
    sum_rule_residual: float
    levinson_residual: float | None
    full_form_residual: float | None
    threshold_diagnostics: dict = field(default_factory=dict)
    bound_energies: list = field(default_factory=list)
    half_bound: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def n_j(self) -> int:
        return self.n_minus + self.delta_plus + self.delta_minus

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["channel"] = str(self.channel)
        d["j"] = self.channel.j
        d["n_j"] = self.n_j
        return d


def edge_depth(spec: PotentialSpec, config: AuditConfig) -> float:
    """How close to a gap edge the bound-state search goes.

    Matched to the momentum grid: a state bound by less than
    k_min^2 / (2 mu) is below the resolution of the phase side too.
    """
    k_min = 1e-5 / spec.a if config.k_min is None else config.k_min
    return min(1e-13, k_min * k_min / (2.0 * spec.mu * spec.mu))


def _catalog(channel, spec, config):
    return bound_state_catalog(
        channel,
        spec,
        crit_tol=config.critical_tol,
        n_grid=config.n_grid,
        eps_g=config.eps_g,
        edge_depth=edge_depth(spec, config),
        rtol=config.rtol,
        atol=config.atol,
    )


def count_bound(channel: AngularChannel, spec: PotentialSpec, config: AuditConfig | None = None) -> int:
    """n_j from the bound-state side alone."""
    config = config or AuditConfig()
    return _catalog(channel, spec, config).levinson_number


def audit_channel(channel, spec: PotentialSpec, config: AuditConfig | None = None) -> LevinsonReport:
    """Run both sides for one channel and compare.

    PASS needs |eta(mu) + eta(-mu) - n_j pi| < levinson_tol and the
    high-energy anchors summing to zero within anchor_tol.
    """
    if not isinstance(channel, AngularChannel):
        channel = AngularChannel(channel)
    config = (config or AuditConfig()).validate(spec)
    grid = default_k_grid(spec.a, config.k_min, config.k_max, config.points)
    try:
        curves = {
            b: unwrap_sweep(
                channel,
                b,
                spec,
                grid,
                refine_threshold=config.refine_threshold,
                max_depth=config.max_depth,
                rtol=config.rtol,
                atol=config.atol,
            )
            for b in (1, -1)
        }
        cat = _catalog(channel, spec, config)
    except Exception as exc:  # noqa: BLE001 - re-raised with context
        raise AuditError(str(channel), exc) from exc

    eta_inf = {b: float(c.eta[-1]) for b, c in curves.items()}
    sum_rule = eta_inf[1] + eta_inf[-1]
    diag = {}
    thresholds = {}
    notes = list(cat.warnings)
    for b, c in curves.items():
        key = "plus" if b > 0 else "minus"
        diag[f"eta_{key}_k_min"] = float(c.eta[0])
        diag[f"born_{key}"] = c.anchor["born"]
        try:
            thresholds[b], diag[f"residual_{key}"] = threshold_extrapolate(c, config.threshold_max_residual)
        except InconclusiveThresholdError as exc:
            thresholds[b] = None
            diag[f"residual_{key}"] = exc.residual
            notes.append(f"branch {key}: {exc}")
    half = [chk.edge * spec.mu for chk in (cat.critical_plus, cat.critical_minus) if chk.half_bound]
    n_j = cat.levinson_number
    if thresholds[1] is None or thresholds[-1] is None:
        status, lev, full = INCONCLUSIVE, None, None
    else:
        lev = abs(thresholds[1] + thresholds[-1] - n_j * math.pi)
        full = abs((thresholds[1] - eta_inf[1]) + (thresholds[-1] - eta_inf[-1]) - n_j * math.pi)
        ok = lev < config.levinson_tol and abs(sum_rule) < config.anchor_tol
        status = PASS if ok else FAIL
    return LevinsonReport(
        channel=channel,
        status=status,
        n_minus=cat.n_gap,
        delta_plus=cat.delta_plus,
        delta_minus=cat.delta_minus,
        eta_plus_threshold=thresholds[1],
        eta_minus_threshold=thresholds[-1],
        eta_plus_infinity=eta_inf[1],
        eta_minus_infinity=eta_inf[-1],
        sum_rule_residual=sum_rule,
        levinson_residual=lev,
        full_form_residual=full,
        threshold_diagnostics=diag,
        bound_energies=[float(e) for e in cat.energies],
        half_bound=half,
        notes=notes,
    )


@dataclass
class SweepResult:
    """Rows are (parameter, channel, report or None, error message or None)."""

    rows: list
    transitions: list

    def reports(self):
        return [r for r in self.rows if r[2] is not None]


def audit_sweep(family, params, channels, config: AuditConfig | None = None, bound_only: bool = False) -> SweepResult:
    """Audit every (parameter, channel) pair of a one-parameter family.

    ``family(p)`` returns a PotentialSpec.  The transition table lists
    neighbouring parameters where n_j changes, as
    ``(j, p_lo, p_hi, n_lo, n_hi)``.  With ``bound_only`` only n_j is
    computed (no phase curves).
    """
    params = [float(p) for p in params]
    if any(b <= a for a, b in zip(params, params[1:])) and any(b >= a for a, b in zip(params, params[1:])):
        raise ValueError("parameter grid must be monotone")
    config = config or AuditConfig()
    rows = []
    counts = {}
    for ch in channels:
        ch = ch if isinstance(ch, AngularChannel) else AngularChannel(ch)
        for p in params:
            try:
                spec = family(p)
                if bound_only:
                    n = count_bound(ch, spec, config)
                    rows.append((p, ch, None, None, n))
                else:
                    rep = audit_channel(ch, spec, config)
                    n = rep.n_j
                    rows.append((p, ch, rep, None, n))
                counts[(ch.j, p)] = n
            except Exception as exc:  # noqa: BLE001 - sweep records and continues
                rows.append((p, ch, None, str(exc), None))
    transitions = []
    for ch in channels:
        j = ch.j if isinstance(ch, AngularChannel) else float(ch)
        seq = [(p, counts.get((j, p))) for p in params]
        seq = [(p, n) for p, n in seq if n is not None]
        for (p0, n0), (p1, n1) in zip(seq, seq[1:]):
            if n0 != n1:
                transitions.append((j, p0, p1, n0, n1))
    return SweepResult(rows, transitions)


def refine_transition(family, channel, lo: float, hi: float, config: AuditConfig | None = None, width: float = 1e-6):
    """Bisect a transition in n_j down to ``width``; returns (lo, hi, n_lo, n_hi).

    Uses the bound-state side only.
    """
    ch = channel if isinstance(channel, AngularChannel) else AngularChannel(channel)
    config = config or AuditConfig()
    n_lo = count_bound(ch, family(lo), config)
    n_hi = count_bound(ch, family(hi), config)
    if n_lo == n_hi:
        raise ValueError("no change of n_j across the interval")
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        n_mid = count_bound(ch, family(mid), config)
        if n_mid == n_lo:
            lo = mid
        else:
            hi, n_hi = mid, n_mid
    return lo, hi, n_lo, n_hi

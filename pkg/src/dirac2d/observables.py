"""Partial-wave amplitude and cross sections (cross widths in 2D).

    f(theta) = sum_j sqrt(2 / (pi k)) exp(i eta_j) sin(eta_j) exp(i j_- theta)

Only eta modulo pi matters here, so raw phases are enough.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .phase_shifts import raw_phase
from .potential import PotentialSpec
from .radial import AngularChannel

__all__ = [
    "AmplitudeSet",
    "ConsistencyError",
    "TruncationError",
    "channel_order",
    "amplitude_set",
    "scattering_amplitude",
    "differential_cross_section",
    "total_cross_section",
    "write_cross_section_csv",
    "summary_json",
]

QUADRATURE_NODES = 4096


class ConsistencyError(RuntimeError):
    """The angular quadrature of sigma(theta) disagrees with the phase sum."""


class TruncationError(RuntimeError):
    pass


@dataclass(frozen=True)
class AmplitudeSet:
    k: float
    phases: tuple  # ((j, eta), ...)
    branch: int = 1
    truncation: float = 0.0

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError("k must be positive")

    @classmethod
    def from_mapping(cls, k, phases: dict, branch: int = 1, truncation: float = 0.0):
        items = tuple(sorted(((float(j), float(e)) for j, e in phases.items()), key=lambda t: (abs(t[0] - 0.5), t[0])))
        for j, _ in items:
            AngularChannel(j)
        return cls(float(k), items, branch, truncation)

    @property
    def j_max(self) -> float:
        return max(abs(j) for j, _ in self.phases) if self.phases else 0.0

    def arrays(self):
        """(j_-, eta) of the channels that scatter; silent ones are dropped."""
        if not self.phases:
            raise ValueError("empty amplitude set")
        js = np.array([j for j, _ in self.phases])
        eta = np.array([e for _, e in self.phases])
        # an exact zero term would still change the rounding of the sums
        keep = np.sin(eta) != 0.0
        if not np.any(keep):
            keep[0] = True
        return np.rint(js[keep] - 0.5).astype(int), eta[keep]


def channel_order():
    """j = 1/2, 3/2, -1/2, 5/2, -3/2, ... (increasing |j_-|)."""
    yield AngularChannel(0.5)
    ell = 1
    while True:
        yield AngularChannel(ell + 0.5)
        yield AngularChannel(-ell + 0.5)
        ell += 1


def amplitude_set(
    spec: PotentialSpec,
    k: float,
    branch: int = 1,
    cutoff: float = 1e-8,
    quiet_levels: int = 3,
    max_ell: int = 150,
    **opts,
) -> AmplitudeSet:
    """Phases for every channel up to an adaptive j_max.

    Channels are added in order of |j_-| until ``quiet_levels`` successive
    levels have |sin eta| < cutoff.  High-m channels start further from the
    origin: their regular solution is a pure power there and the short
    start keeps the integration from stiffening.
    """
    phases = {}
    quiet = 0
    last = 0.0
    for ell in range(0, max_ell + 1):
        channels = [AngularChannel(0.5)] if ell == 0 else [AngularChannel(ell + 0.5), AngularChannel(-ell + 0.5)]
        level = 0.0
        for ch in channels:
            r_min = spec.a * max(1e-4, min(0.05, 1e-4 * ch.m))
            eta = float(raw_phase(ch, branch, spec, [k], r_min=r_min, **opts)[0][0])
            phases[ch.j] = eta
            level = max(level, abs(math.sin(eta)))
        last = level
        quiet = quiet + 1 if level < cutoff else 0
        if quiet >= quiet_levels:
            return AmplitudeSet.from_mapping(k, phases, branch, truncation=last)
    raise TruncationError(f"phase shifts still above {cutoff} at |j_-| = {max_ell}")


def scattering_amplitude(aset: AmplitudeSet, theta):
    ell, eta = aset.arrays()
    th = np.asarray(theta, dtype=float)
    coef = math.sqrt(2.0 / (math.pi * aset.k)) * np.exp(1j * eta) * np.sin(eta)
    f = np.tensordot(np.exp(1j * np.multiply.outer(th, ell)), coef, axes=([-1], [0]))
    return complex(f) if th.ndim == 0 else f


def differential_cross_section(aset: AmplitudeSet, theta):
    return np.abs(scattering_amplitude(aset, theta)) ** 2


def total_cross_section(aset: AmplitudeSet, rtol: float = 1e-8, nodes: int | None = None):
    """(4/k) sum sin^2 eta, confirmed by trapezoid quadrature over theta.

    The trapezoid rule is exact for the trigonometric polynomial |f|^2 as
    long as the node count exceeds the spread of j_- values.
    """
    ell, eta = aset.arrays()
    total = 4.0 / aset.k * float(np.sum(np.sin(eta) ** 2))
    n = nodes or max(QUADRATURE_NODES, 2 * int(ell.max() - ell.min()) + 8)
    theta = 2.0 * math.pi * np.arange(n) / n
    quad = 2.0 * math.pi * float(np.mean(differential_cross_section(aset, theta)))
    scale = max(abs(total), 1e-300)
    if abs(quad - total) > rtol * scale and not (total == 0.0 and quad < 1e-300):
        raise ConsistencyError(f"quadrature {quad!r} vs partial-wave sum {total!r}")
    return total


def write_cross_section_csv(aset: AmplitudeSet, path, points: int = 361) -> None:
    theta = np.linspace(0.0, 2.0 * math.pi, points)
    sigma = differential_cross_section(aset, theta)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theta", "sigma"])
        for t, s in zip(theta, sigma):
            w.writerow([repr(float(t)), repr(float(s))])


def summary_json(aset: AmplitudeSet) -> str:
    return json.dumps(
        {
            "k": aset.k,
            "branch": aset.branch,
            "sigma_total": total_cross_section(aset),
            "j_max": aset.j_max,
            "truncation": aset.truncation,
            "channels": {str(AngularChannel(j)): math.sin(e) ** 2 for j, e in aset.phases},
        },
        indent=2,
    )

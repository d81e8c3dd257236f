"""Cut-off central potentials V(r), zero beyond the cutoff radius ``a``.

All built-in shapes are finite at the origin. The coupling ``lam`` scales
the shape pointwise, so ``spec.eval(r) == lam * spec.shape_value(r)``.
Units: hbar = c = 1, energies in units of the mass ``mu`` (default 1).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

__all__ = [
    "PotentialSpec",
    "SquareWell",
    "ExponentialCutoff",
    "Tabulated",
    "integral_V",
    "potential_from_dict",
    "potential_to_dict",
]


@dataclass(frozen=True)
class SquareWell:
    v0: float
    attractive: bool = True

    def value(self, r):
        depth = -self.v0 if self.attractive else self.v0
        return np.full_like(np.asarray(r, dtype=float), depth)


@dataclass(frozen=True)
class ExponentialCutoff:
    """``-/+ v0 * exp(-r / range)`` inside the cutoff."""

    v0: float
    range: float
    attractive: bool = True

    def __post_init__(self):
        if self.range <= 0:
            raise ValueError("range must be positive")

    def value(self, r):
        sign = -1.0 if self.attractive else 1.0
        return sign * self.v0 * np.exp(-np.asarray(r, dtype=float) / self.range)


@dataclass(frozen=True, eq=False)
class Tabulated:
    """Monotone cubic (PCHIP) interpolation of sampled values.

    Radii past the last sample, but still inside the cutoff, take the last
    sampled value; PCHIP never overshoots the data.
    """

    r: tuple
    v: tuple
    _interp: PchipInterpolator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if r.ndim != 1 or r.shape != v.shape or r.size < 2:
            raise ValueError("tabulated potential needs matching 1-D r and v with >= 2 samples")
        if np.any(np.diff(r) <= 0) or r[0] < 0:
            raise ValueError("tabulated radii must be non-negative and strictly increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("tabulated values must be finite")
        object.__setattr__(self, "r", tuple(r))
        object.__setattr__(self, "v", tuple(v))
        object.__setattr__(self, "_interp", PchipInterpolator(r, v, extrapolate=True))

    def value(self, r):
        r = np.clip(np.asarray(r, dtype=float), self.r[0], self.r[-1])
        return self._interp(r)


@dataclass(frozen=True)
class PotentialSpec:
    """A shape, its cutoff radius and coupling, plus the particle mass."""

    shape: SquareWell | ExponentialCutoff | Tabulated
    a: float
    lam: float = 1.0
    mu: float = 1.0

    def __post_init__(self):
        if not (self.a > 0 and math.isfinite(self.a)):
            raise ValueError(f"cutoff radius must be positive, got {self.a}")
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise ValueError(f"mass must be positive, got {self.mu}")
        if not math.isfinite(self.lam):
            raise ValueError("coupling must be finite")

    def shape_value(self, r):
        """Unscaled shape V(r) at radii inside the cutoff (no cutoff applied)."""
        return self.shape.value(r)

    def eval(self, r):
        """lam * V(r), exactly zero for r > a."""
        ra = np.asarray(r, dtype=float)
        if np.any(ra < 0):
            raise ValueError("potential evaluated at negative radius")
        out = np.where(ra > self.a, 0.0, self.lam * self.shape.value(ra))
        if np.ndim(r) == 0:
            return float(out)
        return out

    __call__ = eval

    def scaled(self, lam: float) -> "PotentialSpec":
        return dataclasses.replace(self, lam=lam)

    def integral(self) -> float:
        """Integral of V over [0, a]."""
        if self.lam == 0.0:
            return 0.0
        if isinstance(self.shape, SquareWell):
            return self.lam * float(self.shape.value(0.0)) * self.a
        points = None
        if isinstance(self.shape, Tabulated):
            points = [x for x in self.shape.r if 0.0 < x < self.a] or None
        val, _ = quad(
            lambda x: float(self.shape.value(x)),
            0.0,
            self.a,
            epsabs=1e-12,
            epsrel=1e-12,
            limit=400,
            points=points,
        )
        return self.lam * val


def integral_V(spec: PotentialSpec) -> float:
    return spec.integral()


def potential_from_dict(d: dict) -> PotentialSpec:
    """Build a spec from the JSON descriptor used by the CLI.

    >>> potential_from_dict({"shape": "square_well", "v0": 2.0, "a": 1.0}).eval(0.5)
    -2.0
    """
    kind = d.get("shape")
    attractive = bool(d.get("attractive", True))
    if kind == "square_well":
        shape = SquareWell(float(d["v0"]), attractive)
    elif kind == "exponential_cutoff":
        shape = ExponentialCutoff(float(d["v0"]), float(d["range"]), attractive)
    elif kind == "tabulated":
        shape = Tabulated(tuple(d["r"]), tuple(d["v"]))
    else:
        raise ValueError(f"unknown potential shape {kind!r}")
    return PotentialSpec(
        shape=shape,
        a=float(d["a"]),
        lam=float(d.get("lambda", 1.0)),
        mu=float(d.get("mu", 1.0)),
    )


def potential_to_dict(spec: PotentialSpec) -> dict:
    s = spec.shape
    if isinstance(s, SquareWell):
        out = {"shape": "square_well", "v0": s.v0, "attractive": s.attractive}
    elif isinstance(s, ExponentialCutoff):
        out = {"shape": "exponential_cutoff", "v0": s.v0, "range": s.range, "attractive": s.attractive}
    else:
        out = {"shape": "tabulated", "r": list(s.r), "v": list(s.v)}
    out.update({"a": spec.a, "lambda": spec.lam, "mu": spec.mu})
    return out

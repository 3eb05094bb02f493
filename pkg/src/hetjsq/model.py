"""Domain types for heterogeneous processor-sharing server farms.

A system is described by M server classes (capacity C_j, population
fraction gamma_j), a normalized per-server Poisson arrival rate lambda and
a mean job size 1/mu.  Classes are kept sorted by descending capacity;
the per-class offered load is nu_j = lambda / (mu * C_j).

Stationary occupancy tail vectors (P_0=1 >= P_1 >= ... >= P_K >= 0) are
represented truncated at a finite level K; the regimes this library
targets have doubly exponentially decaying tails, so the default K=64
puts the truncated mass far below machine precision.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    ConfigError,
    EmptyClassList,
    FractionsDontSumToOne,
    NonPositiveCapacity,
)

DEFAULT_TRUNCATION = 64
DEFAULT_TAIL_TOLERANCE = 1e-14

_FRACTION_SUM_TOL = 1e-12
_RENORMALIZE_TOL = 1e-9


@dataclass(frozen=True)
class ServerClass:
    """One capacity class: service rate `capacity`, population share `fraction`."""

    capacity: float
    fraction: float

    def __post_init__(self):
        if not (self.capacity > 0):
            raise NonPositiveCapacity(f"capacity must be > 0, got {self.capacity}")
        if not (0 < self.fraction <= 1):
            raise ConfigError(f"fraction must be in (0, 1], got {self.fraction}")


@dataclass(frozen=True)
class SystemConfig:
    """The tuple (lambda, mu, {C_j}, {gamma_j}) defining the regime.

    Construction enforces the hard invariants (non-empty, descending
    capacities, fractions summing to 1 within 1e-12).  Use
    :func:`validate_config` to build one from loose inputs (unsorted
    classes, fractions off by < 1e-9).
    """

    classes: tuple[ServerClass, ...]
    arrival_rate: float
    mu: float = 1.0

    def __post_init__(self):
        if len(self.classes) == 0:
            raise EmptyClassList("at least one server class is required")
        if not (self.mu > 0):
            raise ConfigError(f"mu must be > 0, got {self.mu}")
        if self.arrival_rate < 0:
            raise ConfigError(f"arrival_rate must be >= 0, got {self.arrival_rate}")
        caps = [c.capacity for c in self.classes]
        if any(caps[i] < caps[i + 1] for i in range(len(caps) - 1)):
            raise ConfigError("classes must be sorted by descending capacity")
        s = sum(c.fraction for c in self.classes)
        if abs(s - 1.0) > _FRACTION_SUM_TOL:
            raise FractionsDontSumToOne(f"fractions sum to {s!r}, expected 1")

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def capacities(self) -> np.ndarray:
        return np.array([c.capacity for c in self.classes])

    @property
    def fractions(self) -> np.ndarray:
        return np.array([c.fraction for c in self.classes])

    @property
    def nu(self) -> np.ndarray:
        """Per-class offered load nu_j = lambda / (mu * C_j)."""
        return self.arrival_rate / (self.mu * self.capacities)

    def with_arrival_rate(self, arrival_rate: float) -> "SystemConfig":
        return replace(self, arrival_rate=arrival_rate)


def validate_config(classes, arrival_rate: float, mu: float = 1.0) -> SystemConfig:
    """Normalize and validate a candidate configuration.

    `classes` is an iterable of ServerClass or (capacity, fraction) pairs.
    Classes are sorted by descending capacity; fractions off 1 by less
    than 1e-9 are renormalized, larger deviations raise
    FractionsDontSumToOne.  Duplicate capacities are accepted as distinct
    classes (merging them is statistically equivalent) with a warning.
    """
    items = []
    for c in classes:
        if isinstance(c, ServerClass):
            items.append(c)
        else:
            cap, frac = c
            items.append(ServerClass(float(cap), float(frac)))
    if not items:
        raise EmptyClassList("at least one server class is required")

    s = sum(c.fraction for c in items)
    if abs(s - 1.0) >= _RENORMALIZE_TOL:
        raise FractionsDontSumToOne(f"fractions sum to {s!r}, expected 1")
    if s != 1.0:
        items = [ServerClass(c.capacity, c.fraction / s) for c in items]

    items.sort(key=lambda c: -c.capacity)
    caps = [c.capacity for c in items]
    if len(set(caps)) < len(caps):
        warnings.warn(
            "duplicate class capacities; classes are kept distinct but "
            "merging them would be statistically equivalent",
            stacklevel=2,
        )
    return SystemConfig(tuple(items), float(arrival_rate), float(mu))


def config_from_dict(doc: dict) -> SystemConfig:
    """Build a config from the flat document schema used by the CLI.

    Expected keys: ``lambda`` (number), ``mu`` (number, optional, default
    1.0), ``classes`` (list of ``{"capacity": ..., "fraction": ...}``).
    """
    try:
        lam = doc["lambda"]
        raw_classes = doc["classes"]
    except KeyError as exc:
        raise ConfigError(f"config document missing key {exc}") from None
    mu = doc.get("mu", 1.0)
    try:
        pairs = [(c["capacity"], c["fraction"]) for c in raw_classes]
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"malformed classes entry: {exc}") from None
    return validate_config(pairs, lam, mu)


def load_config_file(path) -> SystemConfig:
    """Read a JSON config file (see :func:`config_from_dict` for the schema)."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    return config_from_dict(doc)


@dataclass(frozen=True)
class TailVector:
    """Truncated occupancy tail (P_0, ..., P_K) with P_0 = 1, nonincreasing.

    `tail_tolerance` declares the truncation quality: P_K must not exceed
    it.  Analytical equilibria use the default 1e-14 (the doubly
    exponential decay underflows long before K=64); empirical estimates
    pass tail_tolerance=1.0 to waive the claim.
    """

    values: np.ndarray
    tail_tolerance: float = DEFAULT_TAIL_TOLERANCE

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).copy()
        if v.ndim != 1 or v.size < 2:
            raise ConfigError("tail vector needs at least levels 0 and 1")
        if v[0] != 1.0:
            raise ConfigError(f"P_0 must be exactly 1, got {v[0]!r}")
        if np.any(np.diff(v) > 1e-12) or np.any(v < -1e-15):
            raise ConfigError("tail vector is not monotone nonincreasing in [0, 1]")
        # repair sub-tolerance float wobble so downstream code sees an
        # exact member of the monotone cone
        v = np.minimum.accumulate(np.clip(v, 0.0, 1.0))
        if v[-1] > self.tail_tolerance:
            raise ConfigError(
                f"tail not resolved: P_K = {v[-1]:g} exceeds declared "
                f"tolerance {self.tail_tolerance:g}"
            )
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def truncation_K(self) -> int:
        return self.values.size - 1


@dataclass(frozen=True)
class TailFamily:
    """Per-class tail vectors, aligned with SystemConfig.classes."""

    per_class: tuple[TailVector, ...]

    def __post_init__(self):
        if not self.per_class:
            raise EmptyClassList("tail family needs at least one class")
        ks = {tv.truncation_K for tv in self.per_class}
        if len(ks) != 1:
            raise ConfigError(f"mixed truncation levels {sorted(ks)}")

    @property
    def n_classes(self) -> int:
        return len(self.per_class)

    @property
    def truncation_K(self) -> int:
        return self.per_class[0].truncation_K

    def as_array(self) -> np.ndarray:
        """Stacked (M, K+1) array of tail values."""
        return np.vstack([tv.values for tv in self.per_class])

    @classmethod
    def from_array(cls, arr, tail_tolerance: float = DEFAULT_TAIL_TOLERANCE):
        arr = np.asarray(arr, dtype=float)
        return cls(tuple(TailVector(row, tail_tolerance) for row in arr))

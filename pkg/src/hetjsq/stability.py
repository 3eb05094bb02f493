"""Stability regions for static routing and randomized SQ(2) dispatch.

Three closed-form thresholds are computed:

* static_limit      -- sup of the state-independent region:
                       mu * sum_j gamma_j C_j.
* asymptotic_sq2_limit -- sup of the region where uniform SQ(2) is stable
                       for every system size:
                       mu * min over nonempty I of
                       (sum_{j in I} gamma_j C_j) / (sum_{j in I} gamma_j)^2.
* finite_n_limit    -- sup of the SQ(2) region for N servers, obtained by
                       exact minimization of
                       mu * (sum_j a_j C_j) (N-1) / (s (s-1)),  s = sum a_j >= 2,
                       over per-class server counts 0 <= a_j <= N gamma_j.

All limits are open-interval suprema: the system is unstable at
lambda == limit.  Subset minimization is exact (no heuristics); instances
beyond the enumeration caps are refused.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonIntegerClassSizes, NTooSmall, TooManyClasses
from .model import SystemConfig

_MAX_SUBSET_CLASSES = 24
_MAX_COUNT_COMBINATIONS = 10**7


@dataclass(frozen=True)
class StabilityReport:
    """All thresholds for one config; binding_subset holds 0-based class
    indices achieving the asymptotic minimum."""

    static_limit: float
    asymptotic_sq2_limit: float
    binding_subset: tuple[int, ...]
    finite_n_limit: float | None = None
    finite_n: int | None = None

    def __post_init__(self):
        if self.asymptotic_sq2_limit > self.static_limit + 1e-12:
            raise AssertionError("asymptotic SQ(2) limit exceeds static limit")
        if self.finite_n_limit is not None:
            if not (
                self.asymptotic_sq2_limit - 1e-12
                <= self.finite_n_limit
                <= self.static_limit + 1e-12
            ):
                raise AssertionError("finite-N limit outside its bracketing limits")


def static_limit(config: SystemConfig) -> float:
    """Sup of the static-routing stability region, mu * sum gamma_j C_j."""
    return config.mu * float(np.dot(config.fractions, config.capacities))


def _subset_sums(values: np.ndarray) -> np.ndarray:
    """Sums of `values` over all 2^M subsets; entry b sums the set bits of b."""
    sums = np.zeros(1)
    for v in values:
        sums = np.concatenate([sums, sums + v])
    return sums


def asymptotic_sq2_limit(config: SystemConfig) -> tuple[float, tuple[int, ...]]:
    """Sup of the SQ(2) region valid for all N, and one minimizing subset.

    Enumerates every nonempty class subset exactly; refuses M > 24.
    """
    m = config.n_classes
    if m > _MAX_SUBSET_CLASSES:
        raise TooManyClasses(f"subset enumeration capped at M={_MAX_SUBSET_CLASSES}")
    g = config.fractions
    gc = g * config.capacities
    sums_gc = _subset_sums(gc)[1:]  # drop the empty set
    sums_g = _subset_sums(g)[1:]
    ratio = sums_gc / sums_g**2
    best = int(np.argmin(ratio))
    mask = best + 1
    subset = tuple(j for j in range(m) if mask & (1 << j))
    return config.mu * float(ratio[best]), subset


def check_subset_condition(config: SystemConfig) -> bool:
    """Per-subset load test: sum_{j in I} gamma_j/nu_j > (sum_{j in I} gamma_j)^2
    for every nonempty I.

    Equivalent to lambda < asymptotic_sq2_limit; kept as a literal
    cross-implementation used to self-check the threshold formula.
    Zero load is always stable.
    """
    if config.arrival_rate == 0:
        return True
    if config.n_classes > _MAX_SUBSET_CLASSES:
        raise TooManyClasses(f"subset enumeration capped at M={_MAX_SUBSET_CLASSES}")
    g = config.fractions
    g_over_nu = g / config.nu
    lhs = _subset_sums(g_over_nu)[1:]
    rhs = _subset_sums(g)[1:] ** 2
    return bool(np.all(lhs > rhs))


def n_star(config: SystemConfig) -> int:
    """Smallest integer > 2 making N * gamma_j integral for every class."""
    n = 3
    while True:
        if all(abs(n * f - round(n * f)) < 1e-9 for f in config.fractions):
            return n
        n += 1
        if n > 10**6:
            raise NonIntegerClassSizes("no integral N <= 1e6 for these fractions")


def finite_n_limit(config: SystemConfig, n: int) -> float:
    """Sup of the SQ(2) stability region for exactly `n` servers.

    Minimizes over per-class server-count vectors (capacities within a
    class are identical, so only counts matter).  Refuses instances with
    more than 1e7 count combinations rather than approximating.
    """
    if n < 2:
        raise NTooSmall(f"need at least 2 servers, got {n}")
    sizes = []
    for f in config.fractions:
        cnt = n * f
        if abs(cnt - round(cnt)) > 1e-9:
            raise NonIntegerClassSizes(f"N*gamma = {cnt!r} is not an integer")
        sizes.append(int(round(cnt)))

    combos = 1
    for c in sizes:
        combos *= c + 1
    if combos > _MAX_COUNT_COMBINATIONS:
        raise TooManyClasses(f"{combos} count vectors exceeds the 1e7 enumeration cap")

    total = np.zeros(1)
    work = np.zeros(1)
    for cnt, cap in zip(sizes, config.capacities):
        a = np.arange(cnt + 1)
        total = (total[:, None] + a[None, :]).ravel()
        work = (work[:, None] + (a * cap)[None, :]).ravel()
    keep = total >= 2  # singletons and the empty set impose no constraint
    s = total[keep]
    vals = config.mu * work[keep] * (n - 1) / (s * (s - 1))
    return float(vals.min())


def analyze(config: SystemConfig, n: int | None = None) -> StabilityReport:
    """All applicable stability thresholds for one config."""
    sup_static = static_limit(config)
    sup_sq2, subset = asymptotic_sq2_limit(config)
    sup_n = finite_n_limit(config, n) if n is not None else None
    return StabilityReport(
        static_limit=sup_static,
        asymptotic_sq2_limit=sup_sq2,
        binding_subset=subset,
        finite_n_limit=sup_n,
        finite_n=n,
    )

"""Hybrid SQ(2) dispatch (Scheme 3): biased class sampling + SQ(2) within class.

Each class behaves as an independent homogeneous SQ(2) subsystem at load
rho_j = p_j lambda / (gamma_j mu C_j), with stationary tails
P_k = rho_j^(2^k - 1).  Minimizing the mean sojourn time over the biases
subject to sum_j gamma_j C_j rho_j = lambda/mu is a strictly convex
problem whose KKT solution is a water-filling over 1/C_j:

    rho_j = Phi(theta* C_j)  where 1/C_j < theta*,  else 0,

with Phi the inverse of Phi^{-1}(rho) = sum_{k>=1} (2^k - 1) rho^(2^k - 2)
and theta* = Psi_{j*}(lambda) fixed by the load constraint.  This scheme
is stable on the full static region, unlike uniform SQ(2).

All inversions use plain bisection: the maps are strictly monotone and
extremely steep near rho = 1, where derivative-based iterations misbehave.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, Unreachable, Unstable
from .model import DEFAULT_TRUNCATION, SystemConfig, TailVector
from .stability import static_limit

_SERIES_RELATIVE_FLOOR = 1e-16


def phi_inverse(rho: float) -> float:
    """sum_{k>=1} (2^k - 1) rho^(2^k - 2); strictly increasing, maps
    [0, 1) onto [1, inf)."""
    if not 0.0 <= rho < 1.0:
        raise DomainError(f"phi_inverse needs 0 <= rho < 1, got {rho}")
    total = 1.0  # k = 1 term: (2 - 1) * rho^0
    power = rho * rho  # rho^(2^k - 2) at k = 2
    k = 2
    while True:
        term = (2.0**k - 1.0) * power
        total += term
        if term < _SERIES_RELATIVE_FLOOR * total:
            return total
        power = power * power * rho * rho  # exponent 2^k - 2 -> 2^(k+1) - 2
        k += 1


def phi(x: float) -> float:
    """Inverse of phi_inverse, extended by 0 on x <= 1 (values below 1
    have no preimage; the KKT case split makes 0 the right extension)."""
    if x <= 1.0:
        return 0.0
    lo, hi = 0.0, 0.5
    while phi_inverse(hi) < x:
        hi = 0.5 * (1.0 + hi)
    while hi - lo > 1e-13:
        mid = 0.5 * (lo + hi)
        if phi_inverse(mid) < x:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def psi_inverse(j: int, theta: float, config: SystemConfig) -> float:
    """Load carried by the j fastest classes at water level theta:
    mu * sum_{i<=j} gamma_i C_i Phi(theta C_i).  `j` counts classes (1-based)."""
    if not 1 <= j <= config.n_classes:
        raise DomainError(f"class prefix {j} outside [1, {config.n_classes}]")
    caps = config.capacities[:j]
    g = config.fractions[:j]
    return config.mu * float(
        sum(gi * ci * phi(theta * ci) for gi, ci in zip(g, caps))
    )


def psi(j: int, lam: float, config: SystemConfig) -> float:
    """Water level theta at which the j fastest classes carry load `lam`.

    Requires lam < mu * sum_{i<=j} gamma_i C_i (the prefix must be able to
    carry the load); inverted by bisection to relative 1e-12.
    """
    if not 1 <= j <= config.n_classes:
        raise DomainError(f"class prefix {j} outside [1, {config.n_classes}]")
    cap_load = config.mu * float(
        np.dot(config.fractions[:j], config.capacities[:j])
    )
    if lam >= cap_load:
        raise Unreachable(
            f"lambda = {lam:g} not reachable by the {j} fastest classes "
            f"(prefix capacity {cap_load:g})"
        )
    if lam <= 0:
        raise DomainError("psi needs lambda > 0")
    lo = 1.0 / config.capacities[0]
    hi = 2.0 * lo
    while psi_inverse(j, hi, config) < lam:
        hi *= 2.0
    while hi - lo > 1e-12 * hi:
        mid = 0.5 * (lo + hi)
        if psi_inverse(j, mid, config) < lam:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sq2_tail_series_sum(rho: float) -> float:
    """sum_{k>=1} rho^(2^k - 1): mean occupancy of a homogeneous SQ(2)
    server at load rho."""
    if not 0.0 <= rho < 1.0:
        raise DomainError(f"series needs 0 <= rho < 1, got {rho}")
    total = 0.0
    term = rho  # rho^(2^1 - 1)
    while term > _SERIES_RELATIVE_FLOOR * max(total, 1e-300):
        total += term
        term = term * term * rho  # exponent 2^k - 1 -> 2^(k+1) - 1
    return total


def hybrid_tails(rho: float, levels: int = DEFAULT_TRUNCATION) -> TailVector:
    """Stationary tails P_k = rho^(2^k - 1) of one homogeneous SQ(2) class."""
    if not 0.0 <= rho < 1.0:
        raise DomainError(f"hybrid tails need 0 <= rho < 1, got {rho}")
    values = np.zeros(levels + 1)
    values[0] = 1.0
    for k in range(levels):
        # P_{k+1} = P_k^2 * rho keeps exponents 2^k - 1 without overflow
        values[k + 1] = values[k] * values[k] * rho
    return TailVector(values)


@dataclass(frozen=True)
class HybridSolution:
    active_set_size: int  # j*: classes 0..j*-1 are sampled
    theta_star: float
    loads: np.ndarray
    probabilities: np.ndarray
    mean_sojourn: float


def solve_hybrid(config: SystemConfig) -> HybridSolution:
    """Delay-optimal class biases for the hybrid SQ(2) scheme.

    Valid for any lambda < static_limit (the hybrid scheme recovers the
    full static stability region).  At lambda == 0 the solution
    degenerates to the lambda -> 0+ limit (fastest class only).
    """
    lam, mu = config.arrival_rate, config.mu
    m = config.n_classes
    if lam >= static_limit(config):
        raise Unstable(
            f"lambda = {lam:g} outside the stability region "
            f"[0, {static_limit(config):g})"
        )
    caps = config.capacities
    g = config.fractions

    if lam == 0:
        p = np.zeros(m)
        p[0] = 1.0
        return HybridSolution(1, 1.0 / caps[0], np.zeros(m), p, 1.0 / (mu * caps[0]))

    j_star = 1
    for j in range(1, m + 1):
        if lam >= mu * float(np.dot(g[:j], caps[:j])):
            # the j fastest classes alone cannot carry the load; the
            # activation test is false by convention at this prefix
            continue
        if 1.0 / caps[j - 1] < psi(j, lam, config):
            j_star = j
    theta = psi(j_star, lam, config)
    rho = np.zeros(m)
    rho[:j_star] = [phi(theta * c) for c in caps[:j_star]]
    p = rho * g * mu * caps / lam
    sojourn = (
        float(sum(g[i] * sq2_tail_series_sum(rho[i]) for i in range(j_star))) / lam
    )
    return HybridSolution(j_star, theta, rho, p, sojourn)


def proportional_bias(config: SystemConfig) -> np.ndarray:
    """Stability-maximal (not delay-optimal) biases
    p_i = gamma_i C_i / sum_j gamma_j C_j; all class loads become equal."""
    gc = config.fractions * config.capacities
    return gc / gc.sum()

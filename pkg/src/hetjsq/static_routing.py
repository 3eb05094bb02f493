"""Delay-optimal state-independent routing (Scheme 1).

Each class-j server is an independent M/G/1-PS queue at load rho_j once
arrivals are thinned by fixed probabilities p_j.  The delay-optimal loads
have the square-root water-filling form over the j* fastest classes:

    rho_i = 1 - sqrt(1/C_i) * (sum_{k<=j*} gamma_k C_k - lambda/mu)
                             / (sum_{k<=j*} gamma_k sqrt(C_k)),

with j* the largest j passing the activation test

    1/sqrt(C_j) < (sum_{i<=j} gamma_i sqrt(C_i)) / (sum_{i<=j} gamma_i C_i - lambda/mu).

A nonpositive denominator means the first j classes alone cannot carry the
load, so the class must be active and the test counts as passed.  The mean
sojourn time is the PS occupancy over the throughput,
(1/lambda) sum_j gamma_j rho_j / (1 - rho_j).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import Unstable
from .model import SystemConfig
from .stability import static_limit


@dataclass(frozen=True)
class StaticRoutingSolution:
    active_set_size: int  # j*: classes 0..j*-1 receive traffic
    loads: np.ndarray
    probabilities: np.ndarray
    mean_sojourn: float


def _active_set_size(config: SystemConfig) -> int:
    caps = config.capacities
    g = config.fractions
    load = config.arrival_rate / config.mu
    j_star = 0
    for j in range(1, config.n_classes + 1):
        denom = float(np.dot(g[:j], caps[:j])) - load
        if denom <= 0:
            j_star = j
            continue
        if 1.0 / np.sqrt(caps[j - 1]) < float(np.dot(g[:j], np.sqrt(caps[:j]))) / denom:
            j_star = j
    return j_star


def solve_static(config: SystemConfig) -> StaticRoutingSolution:
    """Optimal loads, routing probabilities and mean sojourn for Scheme 1.

    Requires lambda < static_limit.  At lambda == 0 the solution
    degenerates to the lambda -> 0+ limit: only the fastest class is
    nominally active, all loads zero, mean sojourn 1/(mu*C_1).
    """
    lam, mu = config.arrival_rate, config.mu
    m = config.n_classes
    if lam >= static_limit(config):
        raise Unstable(
            f"lambda = {lam:g} outside the static region "
            f"[0, {static_limit(config):g})"
        )
    caps = config.capacities
    g = config.fractions

    if lam == 0:
        p = np.zeros(m)
        p[0] = 1.0
        return StaticRoutingSolution(1, np.zeros(m), p, 1.0 / (mu * caps[0]))

    j_star = _active_set_size(config)
    rho = np.zeros(m)
    act = slice(0, j_star)
    scale = (float(np.dot(g[act], caps[act])) - lam / mu) / float(
        np.dot(g[act], np.sqrt(caps[act]))
    )
    rho[act] = 1.0 - np.sqrt(1.0 / caps[act]) * scale
    p = rho * g * mu * caps / lam
    mean_sojourn = float(np.sum(g[act] * rho[act] / (1.0 - rho[act]))) / lam
    return StaticRoutingSolution(j_star, rho, p, mean_sojourn)

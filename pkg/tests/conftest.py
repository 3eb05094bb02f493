"""Shared fixtures and test-only oracles."""

import warnings

import numpy as np
import pytest

import hetjsq as hq


@pytest.fixture
def fig1_system():
    """The C=(4/3, 2/3), gamma=(1/2, 1/2) reference system."""
    return hq.validate_config([(4 / 3, 0.5), (2 / 3, 0.5)], 0.5, 1.0)


@pytest.fixture
def fig2_system():
    """The C=(5/3, 1/3) system whose SQ(2) region shrinks to [0, 2/3)."""
    return hq.validate_config([(5 / 3, 0.5), (1 / 3, 0.5)], 0.5, 1.0)


def random_config(rng, m, lam_lo=0.1, lam_hi=0.9, stable_for="sq2"):
    """Random config with lambda drawn inside the requested region."""
    caps = np.sort(rng.uniform(0.3, 3.0, m))[::-1]
    frac = rng.dirichlet(np.ones(m) * 2.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cfg = hq.validate_config(list(zip(caps, frac)), 0.1, 1.0)
    if stable_for == "sq2":
        sup, _ = hq.asymptotic_sq2_limit(cfg)
    else:
        sup = hq.static_limit(cfg)
    lam = float(rng.uniform(lam_lo, lam_hi)) * sup
    return cfg.with_arrival_rate(lam)


def ps_occupancy_objective(rho):
    """Per-class mean occupancy under static routing: rho / (1 - rho)."""
    return rho / (1.0 - rho)


def sq2_occupancy_objective(rho):
    """Per-class mean occupancy under SQ(2): sum_k rho^(2^k - 1)."""
    total = np.zeros_like(rho)
    term = rho.copy()
    for _ in range(12):
        total = total + term
        term = term * term * rho
        if term.max() < 1e-14:
            break
    return total


def grid_search_sojourn(cfg, per_class_occupancy, step=1e-3):
    """Best mean sojourn over a grid of feasible load vectors.

    Grids the first M-1 loads with the given step and solves the last one
    from the work-conservation constraint sum gamma_j C_j rho_j =
    lambda/mu (the projection onto the feasible simplex).  M in {2, 3}.
    """
    g, c = cfg.fractions, cfg.capacities
    load = cfg.arrival_rate / cfg.mu
    ax = np.arange(0.0, 1.0, step)
    if cfg.n_classes == 2:
        r1 = ax
        r2 = (load - g[0] * c[0] * r1) / (g[1] * c[1])
        ok = (r2 >= 0.0) & (r2 < 1.0)
        obj = g[0] * per_class_occupancy(r1[ok]) + g[1] * per_class_occupancy(r2[ok])
    elif cfg.n_classes == 3:
        r1, r2 = np.meshgrid(ax, ax, indexing="ij")
        r3 = (load - g[0] * c[0] * r1 - g[1] * c[1] * r2) / (g[2] * c[2])
        ok = (r3 >= 0.0) & (r3 < 1.0)
        obj = (
            g[0] * per_class_occupancy(r1[ok])
            + g[1] * per_class_occupancy(r2[ok])
            + g[2] * per_class_occupancy(r3[ok])
        )
    else:
        raise ValueError("grid oracle supports M in {2, 3}")
    assert obj.size > 0, "grid found no feasible point"
    return float(obj.min()) / cfg.arrival_rate

"""Shared fixtures: the two-context condiment-preference demo system and
independent brute-force oracles (pure-Python loops, no log-space tricks) used
to cross-check the library's vectorized paths."""

from __future__ import annotations

import numpy as np
import pytest

from cohopt import (
    ContextPartition,
    MixtureBayesSystem,
    from_joint_table,
)

BURGER, FRIES = 0, 1
MAYO, MUSTARD, OTHER_B = 0, 1, 2
MAYO_F, KETCHUP, OTHER_F = 0, 1, 2


def condiments_partition() -> ContextPartition:
    return ContextPartition(
        ["burger", "fries"],
        [
            ["burger_mayo", "burger_mustard", "burger_other"],
            ["fries_mayo", "fries_ketchup", "fries_other"],
        ],
    )


def condiments_table(eps: float = 0.0) -> np.ndarray:
    """Joint over burger x fries: one mayo-consistent cell at 0.3, the rest of
    the mass split over the mustard/other x ketchup/other block."""
    return np.array(
        [
            [0.3, eps, eps],
            [eps, 0.175 - eps, 0.175 - eps],
            [eps, 0.175 - eps, 0.175 - eps],
        ]
    )


def condiments_system(eps: float = 0.0) -> MixtureBayesSystem:
    return from_joint_table(condiments_partition(), condiments_table(eps), 0.0)


@pytest.fixture
def condiments():
    partition = condiments_partition()
    return partition, condiments_system(0.0)


@pytest.fixture
def condiments_smoothed():
    partition = condiments_partition()
    return partition, condiments_system(0.01)


# --- independent oracles -------------------------------------------------


def oracle_predictive(system: MixtureBayesSystem, counts: dict, context: int):
    """Posterior predictive by direct enumeration over latents, in plain
    floating-point products (no log space)."""
    partition = system.partition
    post = []
    for t in range(system.n_latents):
        lik = float(system.latent_weights[t])
        for g, count in counts.items():
            c, a = partition.locate(g)
            lik *= float(system.emissions(c)[t, a]) ** count
        post.append(lik)
    total = sum(post)
    assert total > 0, "oracle: degenerate state"
    size = partition.sizes[context]
    out = [
        sum(post[t] * float(system.emissions(context)[t, a])
            for t in range(system.n_latents))
        / total
        for a in range(size)
    ]
    return np.array(out)


def oracle_joint_mass(system: MixtureBayesSystem, assignment) -> float:
    """Joint mass of a full policy by direct enumeration over latents."""
    total = 0.0
    for t in range(system.n_latents):
        lik = float(system.latent_weights[t])
        for c, a in enumerate(assignment):
            lik *= float(system.emissions(c)[t, a])
        total += lik
    return total


def oracle_table_conditional(table: np.ndarray, fixed: dict, context: int):
    """Conditional of a two-context joint table (axis 0 = context 0) given the
    other coordinate, straight from the definition; marginal when nothing is
    fixed. fixed maps context -> behavior."""
    assert table.ndim == 2
    if context == 0:
        slice_ = table[:, fixed[1]] if 1 in fixed else table.sum(axis=1)
    else:
        slice_ = table[fixed[0], :] if 0 in fixed else table.sum(axis=0)
    return slice_ / slice_.sum()

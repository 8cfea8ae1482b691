"""Distribution diagnostics and generalization-bound computations.

Bound formulas come in two radicand sign conventions: "corrected" adds the
log2(1/delta) confidence term inside the square root (the standard
concentration form, asserted by the test suite), while "paper" subtracts it
(reported but never asserted). Every report echoes its inputs and the sign
convention used.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .coherence import CoherenceValue, PolicyDistribution, coherence
from .errors import ValidationError

if TYPE_CHECKING:
    from .samplers import RunRecord
from .systems import (
    DEFAULT_ENUMERATION_CAP,
    DPolicy,
    MixtureBayesSystem,
    PolicyState,
    enumerate_policy_masses,
    generic_partition,
    random_mixture_system,
)

LOG2_E = math.log2(math.e)

__all__ = [
    "BoundReport",
    "AgreementStats",
    "TrialRow",
    "tv_distance",
    "empirical_distribution",
    "agreement",
    "uniform_convergence_bound",
    "optimality_gap",
    "accuracy_lower_bound",
    "srm_select",
    "distribution_entropy",
    "distribution_kl",
    "regularization_bound_rhs",
    "conjectured_posttrain_count",
    "ternary_search_sample_count",
    "bound_validity_trials",
]


@dataclass(frozen=True)
class BoundReport:
    """A bound value plus the echoed inputs that determine it.

    valid is True only when the radicand was non-negative and the value lies
    in the meaningful [0, 1] range (for accuracy-flavored bounds); note
    explains why when it is False.
    """

    kind: str
    value: float
    valid: bool
    note: str = ""
    inputs: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "value": self.value,
            "valid": self.valid,
            "note": self.note,
            "inputs": dict(self.inputs),
        }


@dataclass(frozen=True)
class AgreementStats:
    """Fraction of a context subset on which two policies coincide."""

    alpha: float
    subset_size: int


def tv_distance(p: PolicyDistribution, q: PolicyDistribution) -> float:
    """Half the L1 distance between two distributions on the same space."""
    if len(p) != len(q) or (
        p.sizes is not None and q.sizes is not None and p.sizes != q.sizes
    ):
        raise ValidationError(
            f"support mismatch: {len(p)} policies (sizes {p.sizes}) vs "
            f"{len(q)} policies (sizes {q.sizes})"
        )
    return 0.5 * float(np.abs(p.masses - q.masses).sum())


def empirical_distribution(
    record: "RunRecord",
    estimator: str = "uniform-round",
    thin: int = 1,
) -> PolicyDistribution:
    """Normalized visit counts of a run over its covered policy space.

    "uniform-round" counts every round including the initial policy;
    "burnin-thinned" drops the config's burn_in rounds and keeps every
    thin-th row after that.
    """
    indices = record.policy_indices()
    if estimator == "uniform-round":
        kept = indices
    elif estimator == "burnin-thinned":
        if thin < 1:
            raise ValidationError(f"thin must be >= 1, got {thin}")
        kept = indices[record.config.burn_in :: thin]
        if kept.size == 0:
            raise ValidationError("burn-in left no trajectory rows")
    else:
        raise ValidationError(
            f"estimator must be 'uniform-round' or 'burnin-thinned', "
            f"got {estimator!r}"
        )
    total = math.prod(record.sizes)
    counts = np.bincount(kept, minlength=total).astype(np.float64)
    return PolicyDistribution(
        masses=counts / counts.sum(),
        provenance="empirical",
        sizes=tuple(record.sizes),
    )


def agreement(
    policy1: DPolicy, policy2: DPolicy, subset: Sequence[int]
) -> AgreementStats:
    """Fraction of the given contexts where the two policies coincide."""
    positions = list(subset)
    if not positions:
        raise ValidationError("agreement needs a non-empty context subset")
    if len(policy1) != len(policy2):
        raise ValidationError("policies cover different numbers of contexts")
    for c in positions:
        if not 0 <= c < len(policy1):
            raise ValidationError(f"context index {c} out of range")
    hits = sum(
        1 for c in positions if policy1.assignment[c] == policy2.assignment[c]
    )
    return AgreementStats(alpha=hits / len(positions), subset_size=len(positions))


def _log_delta_term(delta: float) -> float:
    if not 0.0 < delta <= 1.0:
        raise ValidationError(f"delta must be in (0, 1], got {delta}")
    return math.log2(1.0 / delta)


def _signed(log_term: float, sign_convention: str) -> float:
    if sign_convention == "corrected":
        return log_term
    if sign_convention == "paper":
        return -log_term
    raise ValidationError(
        f"sign_convention must be 'corrected' or 'paper', got {sign_convention!r}"
    )


def uniform_convergence_bound(
    chi: float | CoherenceValue,
    N: int,
    delta: float,
    sign_convention: str = "corrected",
) -> BoundReport:
    """Generalization-gap bound sqrt((-2·chi + log2 e ± log2(1/delta))/(2N)).

    chi is the policy's coherence in bits (≤ 0). The gap |accuracy −
    training accuracy| is below this value uniformly over policies with
    probability 1 − delta (corrected sign).
    """
    chi_bits = float(chi)
    if N < 1:
        raise ValidationError(f"N must be >= 1, got {N}")
    if chi_bits > 1e-9:
        raise ValidationError(f"chi must be <= 0, got {chi_bits}")
    log_term = _log_delta_term(delta)
    inputs = {
        "chi": chi_bits,
        "N": int(N),
        "delta": float(delta),
        "sign_convention": sign_convention,
    }
    radicand = (-2.0 * chi_bits + LOG2_E + _signed(log_term, sign_convention)) / (
        2.0 * N
    )
    if radicand < 0.0:
        return BoundReport(
            kind="uniform-convergence",
            value=math.nan,
            valid=False,
            note=f"negative radicand {radicand!r}",
            inputs=inputs,
        )
    value = math.sqrt(radicand)
    valid = value <= 1.0
    return BoundReport(
        kind="uniform-convergence",
        value=value,
        valid=valid,
        note="" if valid else "vacuous: bound exceeds 1",
        inputs=inputs,
    )


def optimality_gap(
    system: MixtureBayesSystem,
    prior: PolicyState,
    ground_truth: DPolicy,
) -> float:
    """-2·coherence of the ground truth under the prior, plus log2 e.

    Measures prior quality for regularization; +inf when the ground truth has
    zero mass under the prior.
    """
    chi = coherence(system, prior, ground_truth).bits
    if chi == -math.inf:
        return math.inf
    return -2.0 * chi + LOG2_E


def accuracy_lower_bound(
    G: float,
    N: int,
    delta: float,
    sign_convention: str = "corrected",
) -> BoundReport:
    """Accuracy floor 1 - sqrt((2G ± 2·log2(1/delta))/N) for the regularized
    selection rule; may be negative (vacuous) and is flagged, not clamped."""
    if N < 1:
        raise ValidationError(f"N must be >= 1, got {N}")
    log_term = _log_delta_term(delta)
    inputs = {
        "G": float(G),
        "N": int(N),
        "delta": float(delta),
        "sign_convention": sign_convention,
    }
    if math.isinf(G):
        return BoundReport(
            kind="accuracy-lower-bound",
            value=-math.inf,
            valid=False,
            note="optimality gap is infinite",
            inputs=inputs,
        )
    radicand = (2.0 * G + 2.0 * _signed(log_term, sign_convention)) / N
    if radicand < 0.0:
        return BoundReport(
            kind="accuracy-lower-bound",
            value=math.nan,
            valid=False,
            note=f"negative radicand {radicand!r}",
            inputs=inputs,
        )
    value = 1.0 - math.sqrt(radicand)
    valid = 0.0 <= value <= 1.0
    return BoundReport(
        kind="accuracy-lower-bound",
        value=value,
        valid=valid,
        note="" if valid else "vacuous: bound below 0",
        inputs=inputs,
    )


def srm_select(
    system: MixtureBayesSystem,
    prior: PolicyState,
    candidates: Sequence[DPolicy] | None,
    train_samples: Sequence[tuple[int, int]],
    N: int | None = None,
    delta: float = 0.05,
    sign_convention: str = "corrected",
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> DPolicy:
    """Argmax of training accuracy minus the description-length regularizer.

    With no train samples the objective reduces to the coherence argmax. Ties
    break toward higher coherence, then lower policy index.
    """
    partition = system.partition
    if candidates is None:
        pool = list(partition.iter_policies(cap))
    else:
        pool = list(candidates)
        if not pool:
            raise ValidationError("empty candidate set")
    samples = [(int(c), int(a)) for c, a in train_samples]
    for c, a in samples:
        partition._check_slot(c, a)
    n_train = len(samples) if N is None else int(N)
    if samples and n_train < 1:
        raise ValidationError(f"N must be >= 1, got {n_train}")
    log_term = _log_delta_term(delta)

    best: tuple[float, float, int] | None = None
    best_policy = pool[0]
    for index, policy in enumerate(pool):
        chi = coherence(system, prior, policy).bits
        if samples:
            alpha_train = (
                sum(1 for c, a in samples if policy.assignment[c] == a) / n_train
            )
            radicand = (
                -2.0 * chi + LOG2_E + _signed(log_term, sign_convention)
            ) / (2.0 * n_train)
            reg = math.sqrt(radicand) if radicand > 0.0 else 0.0
            objective = alpha_train - reg
        else:
            objective = chi
        key = (objective, chi, -index)
        if best is None or key > best:
            best = key
            best_policy = policy
    return best_policy


def distribution_entropy(q: PolicyDistribution) -> float:
    """Shannon entropy in bits; zero-mass policies contribute nothing."""
    masses = q.masses[q.masses > 0]
    return float(-(masses * np.log2(masses)).sum())


def distribution_kl(q: PolicyDistribution, p: PolicyDistribution) -> float:
    """KL divergence in bits; +inf when q puts mass where p has none."""
    if len(q) != len(p):
        raise ValidationError(
            f"support mismatch: {len(q)} vs {len(p)} policies"
        )
    support = q.masses > 0
    if np.any(p.masses[support] <= 0):
        return math.inf
    qm = q.masses[support]
    pm = p.masses[support]
    return float((qm * (np.log2(qm) - np.log2(pm))).sum())


def regularization_bound_rhs(
    alphaQ: float,
    H: float,
    KL: float,
    N: int,
    delta: float,
) -> float:
    """Asymptotic-form accuracy floor for description-length regularization:

        alphaQ - sqrt(2·log2(1/delta)/N) + sqrt(2/(N·log2(1/delta)))·(H - KL)

    Strictly decreasing in KL for fixed other inputs (the vanishing remainder
    term is dropped).
    """
    if N < 1:
        raise ValidationError(f"N must be >= 1, got {N}")
    if not 0.0 < delta < 1.0:
        raise ValidationError(f"delta must be in (0, 1), got {delta}")
    log_term = math.log2(1.0 / delta)
    return (
        alphaQ
        - math.sqrt(2.0 * log_term / N)
        + math.sqrt(2.0 / (N * log_term)) * (H - KL)
    )


def conjectured_posttrain_count(
    mean_pretrain_coh: float,
    mean_posttrain_coh: float,
    pretrain_error: float,
    pretrain_count: int,
) -> float:
    """Conjectured unsupervised-context budget:

        (1/4) · (mean pretrain coherence² / |mean posttrain coherence|)
              · (1/(1 - pretrain error))² · pretrain count

    Mean coherences are per-context values in bits; either sign convention is
    accepted (magnitudes are used). The output is a recommendation only, and
    the posttrain mean itself depends on the chosen budget, so treat the
    value as a one-shot evaluation, not a solved fixed point.
    """
    if not 0.0 <= pretrain_error < 1.0:
        raise ValidationError(
            f"pretrain_error must be in [0, 1), got {pretrain_error}"
        )
    if pretrain_count < 1:
        raise ValidationError(
            f"pretrain_count must be >= 1, got {pretrain_count}"
        )
    if mean_posttrain_coh == 0.0:
        raise ValidationError("mean_posttrain_coh must be nonzero")
    return (
        0.25
        * (mean_pretrain_coh**2 / abs(mean_posttrain_coh))
        * (1.0 / (1.0 - pretrain_error)) ** 2
        * pretrain_count
    )


def _ternary_bracket(
    objective: Callable[[int], float],
    lo: int,
    hi: int,
    iters: int,
) -> tuple[int, int, int]:
    """Shrink [lo, hi] by ternary steps; returns (argmax, lo, hi) with the
    final scan breaking ties toward the lowest index."""
    if lo >= hi:
        raise ValidationError(f"need lo < hi, got [{lo}, {hi}]")
    if iters < 1:
        raise ValidationError(f"iters must be >= 1, got {iters}")
    cache: dict[int, float] = {}

    def value(x: int) -> float:
        if x not in cache:
            out = float(objective(x))
            if not math.isfinite(out):
                raise ValidationError(
                    f"objective returned non-finite value {out!r} at {x}"
                )
            cache[x] = out
        return cache[x]

    remaining = iters
    while hi - lo > 2 and remaining > 0:
        third = (hi - lo) // 3
        m1 = lo + third
        m2 = hi - third
        if value(m1) < value(m2):
            lo = m1 + 1
        else:
            hi = m2 - 1
        remaining -= 1
    best = min(range(lo, hi + 1), key=lambda x: (-value(x), x))
    return best, lo, hi


def ternary_search_sample_count(
    objective: Callable[[int], float],
    lo: int,
    hi: int,
    iters: int = 64,
) -> int:
    """Integer-lattice argmax by ternary search; exact on unimodal objectives,
    within the shrunk bracket otherwise. Plateau ties go to the lowest index."""
    best, _, _ = _ternary_bracket(objective, lo, hi, iters)
    return best


@dataclass(frozen=True)
class TrialRow:
    """One Monte Carlo trial of the uniform generalization-gap event.

    The srm_* fields track the end-to-end selection claim: the policy picked
    by the regularized objective must reach the accuracy floor derived from
    the ground truth's optimality gap (never the intermediate coherence
    comparison, which is a proof device only).
    """

    seed: int
    violated: bool
    max_gap: float
    bound_at_max: float
    violated_paper: bool
    srm_accuracy: float
    accuracy_floor: float
    srm_violated: bool


def bound_validity_trials(
    n_trials: int,
    seed: int = 0,
    n_train: int = 50,
    delta: float = 0.1,
    sizes: Sequence[int] = (3, 3, 3),
    n_latents: int = 2,
    emission_concentration: float = 1.0,
) -> list[TrialRow]:
    """Seeded Monte Carlo for the uniform gap bound.

    Per trial: draw a random positive system, a ground truth from its exact
    policy distribution, and n_train training contexts uniformly with
    replacement; then check |accuracy - training accuracy| <= bound for every
    policy simultaneously. violated uses the corrected sign;
    violated_paper reports the printed-sign variant.
    """
    if n_trials < 1:
        raise ValidationError(f"n_trials must be >= 1, got {n_trials}")
    sizes = tuple(int(s) for s in sizes)
    k = len(sizes)
    count = math.prod(sizes)
    partition = generic_partition(sizes)
    coords = np.array(np.unravel_index(np.arange(count), sizes))
    log_term = math.log2(1.0 / delta)
    streams = np.random.SeedSequence(seed).spawn(n_trials)
    rows: list[TrialRow] = []
    for i, stream in enumerate(streams):
        rng = np.random.default_rng(stream)
        system = random_mixture_system(
            partition,
            n_latents,
            rng,
            emission_concentration=emission_concentration,
        )
        masses = enumerate_policy_masses(system)
        truth_index = int(
            np.searchsorted(np.cumsum(masses), rng.random() * masses.sum())
        )
        truth_index = min(truth_index, count - 1)
        truth = coords[:, truth_index]

        draws = rng.integers(0, k, size=n_train)
        match = coords == truth[:, None]  # (k, count)
        alpha_true = match.mean(axis=0)
        counts_per_context = np.bincount(draws, minlength=k).astype(np.float64)
        alpha_train = (counts_per_context @ match) / n_train

        chi = np.log2(masses)
        gaps = np.abs(alpha_true - alpha_train)
        bound_corrected = np.sqrt(
            (-2.0 * chi + LOG2_E + log_term) / (2.0 * n_train)
        )
        radicand_paper = (-2.0 * chi + LOG2_E - log_term) / (2.0 * n_train)
        with np.errstate(invalid="ignore"):
            bound_paper = np.sqrt(radicand_paper)
        worst = int(np.argmax(gaps))
        violated = bool(np.any(gaps > bound_corrected))
        violated_paper = bool(
            np.any(gaps > np.where(np.isnan(bound_paper), -np.inf, bound_paper))
            or np.any(radicand_paper < 0)
        )

        # regularized selection, vectorized (tie-break mirrors srm_select:
        # higher objective, then higher coherence, then lower index)
        objective = alpha_train - bound_corrected
        order = np.lexsort((np.arange(count), -chi, -objective))
        picked = int(order[0])
        gap_truth = -2.0 * float(chi[truth_index]) + LOG2_E
        floor = 1.0 - math.sqrt((2.0 * gap_truth + 2.0 * log_term) / n_train)
        srm_accuracy = float(alpha_true[picked])
        rows.append(
            TrialRow(
                seed=i,
                violated=violated,
                max_gap=float(gaps[worst]),
                bound_at_max=float(bound_corrected[worst]),
                violated_paper=violated_paper,
                srm_accuracy=srm_accuracy,
                accuracy_floor=floor,
                srm_violated=bool(srm_accuracy < floor),
            )
        )
    return rows

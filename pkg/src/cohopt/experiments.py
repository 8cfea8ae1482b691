"""Seeded scenario generation and the end-to-end semi-supervised pipelines.

A scenario is a random positive mixture system, a ground-truth policy drawn
from the system's own exact policy distribution (optionally sharpened or
noised to study prior misspecification), and a supervised/unsupervised
context split. Pipelines condition on the supervised labels and optimize the
unsupervised behaviors; accuracy is reported on the unsupervised contexts.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .analysis import (
    BoundReport,
    accuracy_lower_bound,
    agreement,
    optimality_gap,
    srm_select,
    uniform_convergence_bound,
)
from .coherence import coherence, sequence_coherence
from .errors import ValidationError
from .samplers import (
    SamplerConfig,
    _Engine,
    gibbs_run,
    icm_hill_climb,
    mutual_predictability,
    simple_bootstrap_run,
    training_friendly_gibbs_run,
)
from .systems import (
    DEFAULT_ENUMERATION_CAP,
    DPolicy,
    MixtureBayesSystem,
    PolicyState,
    enumerate_policy_masses,
    generic_partition,
    infer,
    random_mixture_system,
    state_of_policy,
    temper,
)

METHODS = ("gibbs", "tf-gibbs", "bootstrap", "icm", "srm-exhaustive", "erm")

__all__ = [
    "Scenario",
    "SemiSupervisedReport",
    "EquivalenceRow",
    "EquivalenceStudy",
    "METHODS",
    "generate_scenario",
    "run_semi_supervised",
    "equivalence_study",
]


@dataclass(frozen=True)
class Scenario:
    """A system, its ground truth, and a supervised/unsupervised split."""

    system: MixtureBayesSystem
    ground_truth: DPolicy
    supervised: tuple[int, ...]
    unsupervised: tuple[int, ...]
    seed: int
    generation: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        overlap = set(self.supervised) & set(self.unsupervised)
        if overlap:
            raise ValidationError(f"split overlaps on contexts {sorted(overlap)}")
        covered = set(self.supervised) | set(self.unsupervised)
        if covered != set(range(self.system.partition.n_contexts)):
            raise ValidationError("split must cover every context exactly once")

    @property
    def labels(self) -> tuple[tuple[int, int], ...]:
        """(context, behavior) pairs revealed to the learner."""
        return tuple(
            (c, self.ground_truth.assignment[c]) for c in self.supervised
        )

    @property
    def prior_state(self) -> PolicyState:
        """Sum of the supervised labels; the pipelines' conditioning state."""
        return state_of_policy(
            self.system.partition, self.ground_truth, self.supervised
        )


def generate_scenario(
    n_contexts: int,
    context_size: int,
    n_latents: int,
    latent_concentration: float = 1.0,
    emission_concentration: float = 0.5,
    unsupervised_fraction: float = 0.5,
    unsupervised_count: int | None = None,
    seed: int = 0,
    truth_beta: float = 1.0,
    label_noise: float = 0.0,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> Scenario:
    """Draw a scenario deterministically from one seed.

    The ground truth is sampled from the system's exact policy distribution
    tempered by truth_beta (1 = matched to the system; +inf = the most
    coherent policy). label_noise independently resamples each ground-truth
    coordinate uniformly with that probability; both knobs exist to study
    prior misspecification and default to the matched case.
    """
    if n_contexts < 1 or context_size < 1:
        raise ValidationError("need at least one context and one behavior")
    if not 0.0 <= label_noise <= 1.0:
        raise ValidationError(f"label_noise must be in [0, 1], got {label_noise}")
    if truth_beta <= 0:
        raise ValidationError(f"truth_beta must be positive, got {truth_beta}")
    rng = np.random.default_rng(seed)
    partition = generic_partition([context_size] * n_contexts)
    system = random_mixture_system(
        partition,
        n_latents,
        rng,
        latent_concentration=latent_concentration,
        emission_concentration=emission_concentration,
    )
    masses = enumerate_policy_masses(system, cap=cap)
    tempered = temper(masses, truth_beta)
    truth_index = int(np.searchsorted(np.cumsum(tempered), rng.random()))
    truth_index = min(truth_index, masses.size - 1)
    assignment = list(partition.policy_at(truth_index).assignment)
    if label_noise > 0.0:
        for c in range(n_contexts):
            if rng.random() < label_noise:
                assignment[c] = int(rng.integers(0, context_size))
    ground_truth = DPolicy(tuple(assignment))

    if unsupervised_count is None:
        unsupervised_count = int(round(unsupervised_fraction * n_contexts))
    if not 0 <= unsupervised_count <= n_contexts:
        raise ValidationError(
            f"unsupervised_count {unsupervised_count} out of range"
        )
    order = rng.permutation(n_contexts)
    unsupervised = tuple(sorted(int(c) for c in order[:unsupervised_count]))
    supervised = tuple(sorted(int(c) for c in order[unsupervised_count:]))
    return Scenario(
        system=system,
        ground_truth=ground_truth,
        supervised=supervised,
        unsupervised=unsupervised,
        seed=seed,
        generation={
            "n_contexts": n_contexts,
            "context_size": context_size,
            "n_latents": n_latents,
            "latent_concentration": latent_concentration,
            "emission_concentration": emission_concentration,
            "unsupervised_count": unsupervised_count,
            "seed": seed,
            "truth_beta": "inf" if math.isinf(truth_beta) else truth_beta,
            "label_noise": label_noise,
        },
    )


@dataclass(frozen=True)
class SemiSupervisedReport:
    """One pipeline run: the selected unsupervised behaviors and its scores."""

    seed: int
    method: str
    policy_names: tuple[str, ...]
    accuracy: float | None
    chi_quotient_bits: float
    chi_full_bits: float
    f_mp_bits: float
    decomposition_residual: float
    gap_bound: BoundReport
    accuracy_floor: BoundReport

    def to_row(self) -> dict:
        return {
            "seed": self.seed,
            "method": self.method,
            "policy": "|".join(self.policy_names),
            "accuracy": self.accuracy,
            "chi_quotient_bits": self.chi_quotient_bits,
            "chi_full_bits": self.chi_full_bits,
            "f_mp_bits": self.f_mp_bits,
            "decomposition_residual": self.decomposition_residual,
            "gap_bound": self.gap_bound.value,
            "accuracy_floor": self.accuracy_floor.value,
        }


def _greedy_assignment(
    system: MixtureBayesSystem, prior: PolicyState, contexts: Sequence[int]
) -> DPolicy:
    """Per-context argmax of the prior-conditioned predictive (ties go to the
    lowest behavior index)."""
    return DPolicy(
        tuple(int(np.argmax(infer(system, prior, c))) for c in contexts)
    )


def _select_from_record(record, selection: str) -> DPolicy:
    if selection == "final":
        return record.policy_at(len(record) - 1)
    if selection == "best":
        return record.policy_at(int(np.argmax(record.coherence_bits)))
    raise ValidationError(
        f"selection must be 'best' or 'final', got {selection!r}"
    )


def run_semi_supervised(
    scenario: Scenario,
    method: str,
    config: SamplerConfig | None = None,
    *,
    delta: float = 0.05,
    sign_convention: str = "corrected",
    selection: str = "best",
    icm_max_iters: int = 50,
    icm_restarts: int = 4,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> SemiSupervisedReport:
    """Condition on the supervised labels, optimize the unsupervised
    behaviors with the chosen method, and score against the ground truth.

    All randomness comes from config.seed; sampler-backed methods pick the
    highest-coherence visited policy when selection="best".
    """
    if method not in METHODS:
        raise ValidationError(f"method must be one of {METHODS}, got {method!r}")
    if config is None:
        config = SamplerConfig(seed=scenario.seed)
    system = scenario.system
    partition = system.partition
    prior = scenario.prior_state
    s_a = scenario.unsupervised
    s_b = scenario.supervised
    truth = scenario.ground_truth

    if not s_a:
        chi_pre = sequence_coherence(
            system, PolicyState.zero(), list(scenario.labels)
        ).bits
        return SemiSupervisedReport(
            seed=config.seed,
            method=method,
            policy_names=(),
            accuracy=None,
            chi_quotient_bits=0.0,
            chi_full_bits=chi_pre,
            f_mp_bits=mutual_predictability(system, truth)
            if s_b
            else 0.0,
            decomposition_residual=0.0,
            gap_bound=uniform_convergence_bound(
                min(chi_pre, 0.0), max(len(s_b), 1), delta, sign_convention
            ),
            accuracy_floor=accuracy_lower_bound(
                optimality_gap(system, prior, truth),
                max(len(s_b), 1),
                delta,
                sign_convention,
            ),
        )

    initial = _greedy_assignment(system, prior, s_a)
    if method == "gibbs":
        record = gibbs_run(
            system, initial, config, prior=prior, contexts=s_a,
            check_positivity=False,
        )
        chosen = _select_from_record(record, selection)
    elif method == "tf-gibbs":
        record = training_friendly_gibbs_run(
            system, initial, config, prior=prior, contexts=s_a,
            check_positivity=False,
        )
        chosen = _select_from_record(record, selection)
    elif method == "bootstrap":
        result = simple_bootstrap_run(
            system, "random", config, prior=prior, contexts=s_a
        )
        chosen = result.policy
    elif method == "icm":
        chosen = icm_hill_climb(
            system,
            initial,
            max_iters=icm_max_iters,
            seed=config.seed,
            restarts=icm_restarts,
            prior=prior,
            contexts=s_a,
        )
    elif method == "srm-exhaustive":
        full = srm_select(
            system,
            PolicyState.zero(),
            None,
            list(scenario.labels),
            N=len(s_b) if s_b else None,
            delta=delta,
            sign_convention=sign_convention,
            cap=cap,
        )
        chosen = DPolicy(tuple(full.assignment[c] for c in s_a))
    else:  # erm: the per-context greedy baseline
        chosen = initial

    combined_assignment = list(truth.assignment)
    for j, c in enumerate(s_a):
        combined_assignment[c] = chosen.assignment[j]
    combined = DPolicy(tuple(combined_assignment))

    accuracy = agreement(
        DPolicy(tuple(combined.assignment[c] for c in s_a)),
        DPolicy(tuple(truth.assignment[c] for c in s_a)),
        range(len(s_a)),
    ).alpha
    chi_quotient = sequence_coherence(
        system, prior, [(c, combined.assignment[c]) for c in s_a]
    ).bits
    chi_full = coherence(system, PolicyState.zero(), combined).bits
    chi_pre = sequence_coherence(
        system, PolicyState.zero(), list(scenario.labels)
    ).bits
    if -math.inf in (chi_quotient, chi_pre, chi_full):
        residual = 0.0 if (chi_quotient + chi_pre == chi_full) else math.nan
    else:
        residual = abs(chi_quotient + chi_pre - chi_full)

    return SemiSupervisedReport(
        seed=config.seed,
        method=method,
        policy_names=tuple(
            partition.behavior_name(c, combined.assignment[c]) for c in s_a
        ),
        accuracy=accuracy,
        chi_quotient_bits=chi_quotient,
        chi_full_bits=chi_full,
        f_mp_bits=mutual_predictability(system, combined),
        decomposition_residual=residual,
        gap_bound=uniform_convergence_bound(
            min(chi_full, 0.0), max(len(s_b), 1), delta, sign_convention
        ),
        accuracy_floor=accuracy_lower_bound(
            optimality_gap(system, prior, truth),
            max(len(s_b), 1),
            delta,
            sign_convention,
        ),
    )


@dataclass(frozen=True)
class EquivalenceRow:
    """One (split size, seed) cell of the two-formulation comparison."""

    s_a: int
    seed: int
    acc_coherence: float
    acc_srm: float
    gap: float
    recommended: float

    def to_row(self) -> dict:
        return {
            "s_a": self.s_a,
            "seed": self.seed,
            "acc_coherence": self.acc_coherence,
            "acc_srm": self.acc_srm,
            "gap": self.gap,
            "recommended": self.recommended,
        }


@dataclass(frozen=True)
class EquivalenceStudy:
    """Accuracy gap between coherence-only and regularized selection, per
    unsupervised-split size. Output is evidence, not an assertion."""

    rows: tuple[EquivalenceRow, ...]

    def mean_gaps(self) -> dict[int, float]:
        sums: dict[int, list[float]] = {}
        for row in self.rows:
            sums.setdefault(row.s_a, []).append(row.gap)
        return {s_a: float(np.mean(v)) for s_a, v in sorted(sums.items())}

    def argmin_gap(self) -> int:
        gaps = self.mean_gaps()
        return min(gaps, key=lambda s_a: (gaps[s_a], s_a))


def _coherence_only_choice(
    system: MixtureBayesSystem,
    prior: PolicyState,
    contexts: Sequence[int],
    cap: int,
) -> DPolicy:
    """Exact argmax of the prior-anchored coherence over the sub-space."""
    engine = _Engine(system, prior, contexts)
    masses = engine.enumerate_conditional_masses(cap=cap)
    best = int(np.argmax(masses))
    return DPolicy(
        tuple(int(a) for a in np.unravel_index(best, engine.sizes))
    )


def equivalence_study(
    lattice: Sequence[int],
    seeds: Sequence[int],
    *,
    n_contexts: int,
    context_size: int = 3,
    n_latents: int = 2,
    latent_concentration: float = 1.0,
    emission_concentration: float = 0.5,
    truth_beta: float = 1.0,
    label_noise: float = 0.0,
    delta: float = 0.05,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> EquivalenceStudy:
    """Compare coherence-only selection (supervised prior) against regularized
    selection across unsupervised-split sizes.

    Per cell: the coherence formulation picks the exact argmax of the
    label-anchored coherence over the unsupervised slice; the regularized
    formulation picks the training-accuracy-minus-regularizer argmax over the
    full space. The gap column is the absolute accuracy difference on the
    unsupervised contexts; the recommended column evaluates the conjectured
    budget formula at that cell (nan when undefined).
    """
    rows: list[EquivalenceRow] = []
    for seed in seeds:
        for s_a_size in lattice:
            if not 0 <= s_a_size <= n_contexts:
                raise ValidationError(
                    f"lattice point {s_a_size} out of range [0, {n_contexts}]"
                )
            scenario = generate_scenario(
                n_contexts,
                context_size,
                n_latents,
                latent_concentration=latent_concentration,
                emission_concentration=emission_concentration,
                unsupervised_count=s_a_size,
                seed=seed,
                truth_beta=truth_beta,
                label_noise=label_noise,
                cap=cap,
            )
            if s_a_size == 0:
                rows.append(
                    EquivalenceRow(
                        s_a=0,
                        seed=seed,
                        acc_coherence=math.nan,
                        acc_srm=math.nan,
                        gap=0.0,
                        recommended=math.nan,
                    )
                )
                continue
            truth = scenario.ground_truth
            s_a = scenario.unsupervised
            s_b = scenario.supervised
            prior = scenario.prior_state

            choice_i = _coherence_only_choice(
                scenario.system, prior, s_a, cap
            )
            acc_i = agreement(
                choice_i,
                DPolicy(tuple(truth.assignment[c] for c in s_a)),
                range(len(s_a)),
            ).alpha

            full_ii = srm_select(
                scenario.system,
                PolicyState.zero(),
                None,
                list(scenario.labels),
                N=len(s_b) if s_b else None,
                delta=delta,
                cap=cap,
            )
            acc_ii = agreement(
                DPolicy(tuple(full_ii.assignment[c] for c in s_a)),
                DPolicy(tuple(truth.assignment[c] for c in s_a)),
                range(len(s_a)),
            ).alpha

            rows.append(
                EquivalenceRow(
                    s_a=s_a_size,
                    seed=seed,
                    acc_coherence=acc_i,
                    acc_srm=acc_ii,
                    gap=abs(acc_i - acc_ii),
                    recommended=_eq5_recommendation(scenario),
                )
            )
    return EquivalenceStudy(rows=tuple(rows))


def _eq5_recommendation(scenario: Scenario) -> float:
    """One-shot evaluation of the conjectured budget for a scenario, using
    the greedy baseline's supervised error floored at 1e-6."""
    from .analysis import conjectured_posttrain_count

    s_a, s_b = scenario.unsupervised, scenario.supervised
    if not s_a or not s_b:
        return math.nan
    system = scenario.system
    truth = scenario.ground_truth
    anchor_b = state_of_policy(system.partition, truth, s_a)
    chi_b = sequence_coherence(
        system, anchor_b, [(c, truth.assignment[c]) for c in s_b]
    ).bits
    chi_a0 = sequence_coherence(
        system, PolicyState.zero(), [(c, truth.assignment[c]) for c in s_a]
    ).bits
    if chi_b == -math.inf or chi_a0 == -math.inf or chi_a0 == 0.0:
        return math.nan
    greedy = _greedy_assignment(system, scenario.prior_state, range(len(truth)))
    error = 1.0 - agreement(greedy, truth, s_b).alpha
    if error >= 1.0:
        return math.nan  # the budget formula is undefined at error rate 1
    return conjectured_posttrain_count(
        mean_pretrain_coh=chi_b / len(s_b),
        mean_posttrain_coh=chi_a0 / len(s_a),
        pretrain_error=max(error, 1e-6),
        pretrain_count=len(s_b),
    )

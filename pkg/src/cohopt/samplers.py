"""Optimization and sampling procedures over d-policies: single-site Gibbs,
the training-friendly block variant with anchor mixing, two-context debate,
sequential bootstrap, and mutual-predictability hill climbing.

Every sampler accepts an optional prior state and an optional context subset,
so the same code drives both full-space runs and post-training sub-problems
anchored at a supervised prior. A run is strictly sequential; independent
seeded runs may execute concurrently.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateConditioningError, ValidationError
from .systems import (
    DEFAULT_ENUMERATION_CAP,
    PROB_ATOL,
    DPolicy,
    MixtureBayesSystem,
    PolicyState,
    temper,
)
from .coherence import PolicyDistribution

LN2 = math.log(2.0)

__all__ = [
    "SamplerConfig",
    "RunRecord",
    "BootstrapResult",
    "PositivityWarning",
    "gibbs_run",
    "training_friendly_gibbs_run",
    "debate_run",
    "simple_bootstrap_run",
    "bootstrap_exact_distribution",
    "icm_hill_climb",
    "mutual_predictability",
    "gibbs_step_probability",
    "exact_conditional_distribution",
]


class PositivityWarning(UserWarning):
    """A run was started on a system that failed the positivity check."""


@dataclass(frozen=True)
class SamplerConfig:
    """Shared sampler knobs; gamma and anchor_weight apply to the
    training-friendly variant only."""

    beta: float = 1.0
    steps: int = 1000
    seed: int = 0
    gamma: float = 0.85
    anchor_weight: float = 0.0
    burn_in: int = 0

    def __post_init__(self) -> None:
        if self.beta <= 0:
            raise ValidationError(f"beta must be positive, got {self.beta}")
        if self.steps < 1:
            raise ValidationError(f"steps must be >= 1, got {self.steps}")
        if not 0.0 < self.gamma < 1.0:
            raise ValidationError(f"gamma must be in (0, 1), got {self.gamma}")
        if not 0.0 <= self.anchor_weight <= 1.0:
            raise ValidationError(
                f"anchor_weight must be in [0, 1], got {self.anchor_weight}"
            )
        if self.burn_in < 0:
            raise ValidationError(f"burn_in must be >= 0, got {self.burn_in}")

    def to_dict(self) -> dict:
        return {
            "beta": "inf" if math.isinf(self.beta) else float(self.beta),
            "steps": int(self.steps),
            "seed": int(self.seed),
            "gamma": float(self.gamma),
            "anchor_weight": float(self.anchor_weight),
            "burn_in": int(self.burn_in),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SamplerConfig":
        beta = data.get("beta", 1.0)
        if isinstance(beta, str):
            beta = float(beta)
        return cls(
            beta=beta,
            steps=int(data.get("steps", 1000)),
            seed=int(data.get("seed", 0)),
            gamma=float(data.get("gamma", 0.85)),
            anchor_weight=float(data.get("anchor_weight", 0.0)),
            burn_in=int(data.get("burn_in", 0)),
        )


@dataclass
class RunRecord:
    """Seeded trajectory plus per-round coherence for reports.

    trajectory has steps+1 rows (the initial policy included); row t holds the
    local behavior index per covered context. coherence_bits[t] is the
    sequential coherence of row t relative to the run prior (-inf allowed).
    moves[t] lists the context positions resampled when producing row t+1.
    """

    kind: str
    contexts: tuple[int, ...]
    sizes: tuple[int, ...]
    trajectory: np.ndarray
    coherence_bits: np.ndarray
    moves: list[tuple[int, ...]]
    seed: int
    config: SamplerConfig
    prior_counts: dict[int, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return int(self.trajectory.shape[0])

    def policy_at(self, round_index: int) -> DPolicy:
        return DPolicy(tuple(int(a) for a in self.trajectory[round_index]))

    def policy_indices(self) -> np.ndarray:
        """Mixed-radix index of every visited policy over the covered space."""
        return np.ravel_multi_index(self.trajectory.T, self.sizes)


@dataclass(frozen=True)
class BootstrapResult:
    """Final bootstrap assignment with its exact sequential probability trace."""

    policy: DPolicy
    order: tuple[int, ...]
    step_probabilities: tuple[float, ...]
    log2_mass: float
    contexts: tuple[int, ...]
    seed: int
    config: SamplerConfig


class _Engine:
    """Precomputed per-latent tables for fast conditional inference on a
    context subset with a fixed prior state."""

    def __init__(
        self,
        system: MixtureBayesSystem,
        prior: PolicyState | None,
        contexts: Sequence[int] | None,
    ) -> None:
        self.system = system
        partition = system.partition
        if contexts is None:
            contexts = range(partition.n_contexts)
        self.contexts = tuple(int(c) for c in contexts)
        if len(set(self.contexts)) != len(self.contexts):
            raise ValidationError("context subset has repeated indices")
        for c in self.contexts:
            partition._check_slot(c, 0)
        self.prior = prior if prior is not None else PolicyState.zero()
        self.sizes = tuple(partition.sizes[c] for c in self.contexts)
        self.emissions = [system.emissions(c) for c in self.contexts]
        self.log_emissions = [system.log_emissions(c) for c in self.contexts]
        self.base = system.log_posterior_numerators(self.prior)
        top = float(self.base.max())
        if top == -math.inf:
            raise DegenerateConditioningError(
                "degenerate conditioning: prior state "
                f"{self.prior.describe(partition)} has zero likelihood"
            )
        self.log_prior_ml = self._log_ml(self.base)

    @staticmethod
    def _log_ml(log_numerators: np.ndarray) -> float:
        top = float(log_numerators.max())
        if top == -math.inf:
            return -math.inf
        return top + math.log(float(np.exp(log_numerators - top).sum()))

    def numerators(self, assignment: np.ndarray, skip: int | None = None) -> np.ndarray:
        out = self.base.copy()
        for j in range(len(self.contexts)):
            if j != skip:
                out += self.log_emissions[j][:, assignment[j]]
        return out

    def predictive(self, log_numerators: np.ndarray, position: int) -> np.ndarray:
        """Unnormalized predictive masses for one position; None-safe callers
        must check max(log_numerators) > -inf first."""
        top = float(log_numerators.max())
        weights = np.exp(log_numerators - top)
        return weights @ self.emissions[position]

    def coherence_bits(self, assignment: np.ndarray) -> float:
        value = self._log_ml(self.numerators(assignment))
        if value == -math.inf:
            return -math.inf
        return (value - self.log_prior_ml) / LN2

    def enumerate_conditional_masses(
        self, cap: int = DEFAULT_ENUMERATION_CAP, chunk: int = 4096
    ) -> np.ndarray:
        """Exact joint mass of every sub-policy given the prior, normalized."""
        count = math.prod(self.sizes)
        if count > cap:
            raise ValidationError(
                f"sub-policy space has {count} elements, above the cap of {cap}"
            )
        top = float(self.base.max())
        base_weights = np.exp(self.base - top)
        masses = np.empty(count)
        for start in range(0, count, chunk):
            stop = min(start + chunk, count)
            coords = np.unravel_index(np.arange(start, stop), self.sizes)
            lik = np.repeat(base_weights[:, None], stop - start, axis=1)
            for j in range(len(self.contexts)):
                lik *= self.emissions[j][:, coords[j]]
            masses[start:stop] = lik.sum(axis=0)
        total = masses.sum()
        if total <= 0.0:
            raise DegenerateConditioningError(
                "degenerate conditioning: no sub-policy has positive mass"
            )
        return masses / total


def _sample_index(p: np.ndarray, beta: float, u: float) -> int:
    """Draw an index from temper(p / p.sum(), beta) using one uniform."""
    top = float(p.max())
    if math.isinf(beta):
        support = np.nonzero(p >= top - PROB_ATOL * p.sum())[0]
        return int(support[min(int(u * support.size), support.size - 1)])
    if beta != 1.0:
        q = np.zeros_like(p)
        positive = p > 0
        q[positive] = np.exp(beta * (np.log(p[positive]) - math.log(top)))
    else:
        q = p
    cum = np.cumsum(q)
    idx = int(np.searchsorted(cum, u * cum[-1], side="right"))
    idx = min(idx, p.size - 1)
    while q[idx] == 0.0 and idx > 0:
        idx -= 1
    return idx


def _validate_initial(engine: _Engine, initial: DPolicy) -> np.ndarray:
    if len(initial) != len(engine.contexts):
        raise ValidationError(
            f"initial policy has {len(initial)} coordinates for "
            f"{len(engine.contexts)} covered contexts"
        )
    for j, a in enumerate(initial.assignment):
        if not 0 <= a < engine.sizes[j]:
            raise ValidationError(
                f"initial behavior index {a} out of range at position {j}"
            )
    return np.array(initial.assignment, dtype=np.int64)


def _warn_if_not_positive(engine: _Engine, beta: float) -> None:
    if math.isinf(beta):
        return
    if math.prod(engine.sizes) > DEFAULT_ENUMERATION_CAP:
        return
    masses = engine.enumerate_conditional_masses()
    if np.any(masses <= 0.0):
        warnings.warn(
            "positivity check failed: some policies have zero mass; the chain "
            "may absorb and the stationary-distribution guarantee is void",
            PositivityWarning,
            stacklevel=3,
        )


def gibbs_run(
    system: MixtureBayesSystem,
    initial: DPolicy,
    config: SamplerConfig,
    *,
    prior: PolicyState | None = None,
    contexts: Sequence[int] | None = None,
    check_positivity: bool = True,
) -> RunRecord:
    """Single-site Gibbs: each step resamples one uniformly chosen context
    from the tempered conditional given all other current behaviors.

    Reproducible per seed; each step changes at most one coordinate.
    """
    engine = _Engine(system, prior, contexts)
    if check_positivity:
        _warn_if_not_positive(engine, config.beta)
    assignment = _validate_initial(engine, initial)
    k = len(engine.contexts)
    rng = np.random.default_rng(config.seed)
    picks = rng.integers(0, k, size=config.steps)
    uniforms = rng.random(config.steps)

    trajectory = np.empty((config.steps + 1, k), dtype=np.int64)
    coherence_bits = np.empty(config.steps + 1)
    trajectory[0] = assignment
    coherence_bits[0] = engine.coherence_bits(assignment)
    moves: list[tuple[int, ...]] = []

    for t in range(config.steps):
        j = int(picks[t])
        numerators = engine.numerators(assignment, skip=j)
        top = float(numerators.max())
        if top == -math.inf:
            raise DegenerateConditioningError(
                f"degenerate conditioning at step {t}: leave-one-out state "
                "has zero likelihood"
            )
        p = engine.predictive(numerators, j)
        total = float(p.sum())
        if total <= 0.0:
            raise DegenerateConditioningError(
                f"degenerate conditioning at step {t}: zero predictive mass"
            )
        a_new = _sample_index(p, config.beta, float(uniforms[t]))
        assignment[j] = a_new
        trajectory[t + 1] = assignment
        coherence_bits[t + 1] = (
            top + math.log(float(p[a_new])) - engine.log_prior_ml
        ) / LN2
        moves.append((j,))

    return RunRecord(
        kind="gibbs",
        contexts=engine.contexts,
        sizes=engine.sizes,
        trajectory=trajectory,
        coherence_bits=coherence_bits,
        moves=moves,
        seed=config.seed,
        config=config,
        prior_counts=dict(engine.prior.counts),
    )


def training_friendly_gibbs_run(
    system: MixtureBayesSystem,
    initial: DPolicy,
    config: SamplerConfig,
    *,
    prior: PolicyState | None = None,
    contexts: Sequence[int] | None = None,
    check_positivity: bool = True,
) -> RunRecord:
    """Block variant: each round retains a random floor(gamma·k)-sized subset
    and independently resamples everything else from the retained state.

    With anchor_weight > 0 each resample draws from the two-component mixture
    anchor_weight·σ^β(round-0 retained state) +
    (1−anchor_weight)·σ^β(current retained state); 0.5 is the equal-weight
    anchor rule, 0 the pure block sampler.
    """
    engine = _Engine(system, prior, contexts)
    if check_positivity:
        _warn_if_not_positive(engine, config.beta)
    assignment = _validate_initial(engine, initial)
    k = len(engine.contexts)
    keep = int(math.floor(config.gamma * k))
    if keep < 1:
        raise ValidationError(
            f"floor(gamma·{k}) = {keep}; the retained subset must be non-empty"
        )
    rng = np.random.default_rng(config.seed)
    lam = config.anchor_weight

    trajectory = np.empty((config.steps + 1, k), dtype=np.int64)
    coherence_bits = np.empty(config.steps + 1)
    trajectory[0] = assignment
    coherence_bits[0] = engine.coherence_bits(assignment)
    moves: list[tuple[int, ...]] = []
    anchor_p: list[np.ndarray] | None = None

    for t in range(config.steps):
        kept = rng.permutation(k)[:keep]
        kept_set = set(int(j) for j in kept)
        numerators = engine.base.copy()
        for j in kept_set:
            numerators += engine.log_emissions[j][:, assignment[j]]
        top = float(numerators.max())
        if top == -math.inf:
            raise DegenerateConditioningError(
                f"degenerate conditioning at round {t}: retained state has "
                "zero likelihood"
            )
        weights = np.exp(numerators - top)
        if t == 0 and lam > 0.0:
            # round-0 retained state is the anchor for all later rounds
            anchor_p = [weights @ engine.emissions[j] for j in range(k)]
        resampled = tuple(j for j in range(k) if j not in kept_set)
        for j in resampled:
            use_anchor = False
            if lam > 0.0:
                use_anchor = lam >= 1.0 or rng.random() < lam
            if use_anchor:
                assert anchor_p is not None
                p = anchor_p[j]
            else:
                p = weights @ engine.emissions[j]
            if float(p.sum()) <= 0.0:
                raise DegenerateConditioningError(
                    f"degenerate conditioning at round {t}: zero predictive "
                    f"mass for position {j}"
                )
            assignment[j] = _sample_index(p, config.beta, float(rng.random()))
        trajectory[t + 1] = assignment
        coherence_bits[t + 1] = engine.coherence_bits(assignment)
        moves.append(resampled)

    return RunRecord(
        kind="tf-gibbs",
        contexts=engine.contexts,
        sizes=engine.sizes,
        trajectory=trajectory,
        coherence_bits=coherence_bits,
        moves=moves,
        seed=config.seed,
        config=config,
        prior_counts=dict(engine.prior.counts),
    )


def debate_run(
    system: MixtureBayesSystem,
    config: SamplerConfig,
    *,
    prior: PolicyState | None = None,
    contexts: Sequence[int] | None = None,
    check_positivity: bool = True,
) -> RunRecord:
    """Two-context alternating sampler: each round the second context responds
    to the first's previous behavior, then the first responds to that fresh
    reply. Requires exactly two covered contexts.
    """
    engine = _Engine(system, prior, contexts)
    if len(engine.contexts) != 2:
        raise ValidationError(
            f"debate needs exactly 2 contexts, got {len(engine.contexts)}"
        )
    if check_positivity:
        _warn_if_not_positive(engine, config.beta)
    rng = np.random.default_rng(config.seed)

    def conditional(position: int, other_value: int | None) -> np.ndarray:
        numerators = engine.base.copy()
        if other_value is not None:
            numerators += engine.log_emissions[1 - position][:, other_value]
        if float(numerators.max()) == -math.inf:
            raise DegenerateConditioningError(
                "degenerate conditioning during debate round"
            )
        p = engine.predictive(numerators, position)
        if float(p.sum()) <= 0.0:
            raise DegenerateConditioningError(
                "degenerate conditioning during debate round"
            )
        return p

    pro = _sample_index(conditional(0, None), config.beta, float(rng.random()))
    con = _sample_index(conditional(1, pro), config.beta, float(rng.random()))

    trajectory = np.empty((config.steps + 1, 2), dtype=np.int64)
    coherence_bits = np.empty(config.steps + 1)
    trajectory[0] = (pro, con)
    coherence_bits[0] = engine.coherence_bits(trajectory[0])
    moves: list[tuple[int, ...]] = []

    for t in range(config.steps):
        con = _sample_index(conditional(1, pro), config.beta, float(rng.random()))
        pro = _sample_index(conditional(0, con), config.beta, float(rng.random()))
        trajectory[t + 1] = (pro, con)
        coherence_bits[t + 1] = engine.coherence_bits(trajectory[t + 1])
        moves.append((0, 1))

    return RunRecord(
        kind="debate",
        contexts=engine.contexts,
        sizes=engine.sizes,
        trajectory=trajectory,
        coherence_bits=coherence_bits,
        moves=moves,
        seed=config.seed,
        config=config,
        prior_counts=dict(engine.prior.counts),
    )


def simple_bootstrap_run(
    system: MixtureBayesSystem,
    context_order: Sequence[int] | str,
    config: SamplerConfig,
    *,
    prior: PolicyState | None = None,
    contexts: Sequence[int] | None = None,
) -> BootstrapResult:
    """Sequential sampler: visit each context once, drawing its behavior from
    the tempered conditional given everything drawn so far.

    context_order is a permutation of positions into the covered contexts, or
    "random" for a seeded uniform permutation. config.steps is ignored; the
    walk length is the number of covered contexts.
    """
    engine = _Engine(system, prior, contexts)
    k = len(engine.contexts)
    rng = np.random.default_rng(config.seed)
    if isinstance(context_order, str):
        if context_order != "random":
            raise ValidationError(
                f"context_order must be a permutation or 'random', "
                f"got {context_order!r}"
            )
        order = tuple(int(j) for j in rng.permutation(k))
    else:
        order = tuple(int(j) for j in context_order)
        if sorted(order) != list(range(k)):
            raise ValidationError(
                "context_order must visit each covered context exactly once"
            )

    assignment = np.zeros(k, dtype=np.int64)
    numerators = engine.base.copy()
    trace: list[float] = []
    log2_mass = 0.0
    for n, j in enumerate(order):
        top = float(numerators.max())
        if top == -math.inf:
            raise DegenerateConditioningError(
                f"degenerate conditioning at bootstrap step {n}"
            )
        p = engine.predictive(numerators, j)
        total = float(p.sum())
        if total <= 0.0:
            raise DegenerateConditioningError(
                f"degenerate conditioning at bootstrap step {n}"
            )
        tempered = temper(p / total, config.beta)
        a = _sample_index(p, config.beta, float(rng.random()))
        step_prob = float(tempered[a])
        trace.append(step_prob)
        log2_mass += math.log2(step_prob) if step_prob > 0 else -math.inf
        assignment[j] = a
        numerators = numerators + engine.log_emissions[j][:, a]

    return BootstrapResult(
        policy=DPolicy(tuple(int(a) for a in assignment)),
        order=order,
        step_probabilities=tuple(trace),
        log2_mass=log2_mass,
        contexts=engine.contexts,
        seed=config.seed,
        config=config,
    )


def bootstrap_exact_distribution(
    system: MixtureBayesSystem,
    context_order: Sequence[int],
    beta: float,
    *,
    prior: PolicyState | None = None,
    contexts: Sequence[int] | None = None,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> PolicyDistribution:
    """Distribution over final assignments induced by the sequential sampler
    for one fixed visiting order, computed by full path enumeration."""
    engine = _Engine(system, prior, contexts)
    k = len(engine.contexts)
    order = tuple(int(j) for j in context_order)
    if sorted(order) != list(range(k)):
        raise ValidationError(
            "context_order must visit each covered context exactly once"
        )
    count = math.prod(engine.sizes)
    if count > cap:
        raise ValidationError(
            f"sub-policy space has {count} elements, above the cap of {cap}"
        )
    masses = np.empty(count)
    for index in range(count):
        assignment = np.array(
            np.unravel_index(index, engine.sizes), dtype=np.int64
        )
        numerators = engine.base.copy()
        prob = 1.0
        for j in order:
            top = float(numerators.max())
            if top == -math.inf:
                prob = 0.0
                break
            p = engine.predictive(numerators, j)
            total = float(p.sum())
            if total <= 0.0:
                prob = 0.0
                break
            tempered = temper(p / total, beta)
            step = float(tempered[assignment[j]])
            if step <= 0.0:
                prob = 0.0
                break
            prob *= step
            numerators = numerators + engine.log_emissions[j][:, assignment[j]]
        masses[index] = prob
    return PolicyDistribution(
        masses=masses / masses.sum(), provenance="custom", sizes=engine.sizes
    )


def mutual_predictability(
    system: MixtureBayesSystem,
    policy: DPolicy,
    *,
    prior: PolicyState | None = None,
    contexts: Sequence[int] | None = None,
) -> float:
    """Sum over positions of log2 σ(everything else, s)(chosen behavior).

    The leave-one-out analogue of coherence; -inf when some position's chosen
    behavior has zero conditional probability.
    """
    engine = _Engine(system, prior, contexts)
    assignment = _validate_initial(engine, policy)
    total = 0.0
    for j in range(len(engine.contexts)):
        numerators = engine.numerators(assignment, skip=j)
        top = float(numerators.max())
        if top == -math.inf:
            raise DegenerateConditioningError(
                f"degenerate conditioning at position {j}: leave-one-out "
                "state has zero likelihood"
            )
        p = engine.predictive(numerators, j)
        mass = float(p[assignment[j]]) / float(p.sum())
        if mass <= 0.0:
            return -math.inf
        total += math.log2(mass)
    return total


def icm_hill_climb(
    system: MixtureBayesSystem,
    initial: DPolicy,
    max_iters: int = 100,
    seed: int = 0,
    *,
    restarts: int = 8,
    prior: PolicyState | None = None,
    contexts: Sequence[int] | None = None,
) -> DPolicy:
    """Best-improvement coordinate ascent on mutual predictability with
    seeded random restarts; returns the best policy found.

    The returned policy is a local maximum under single-coordinate moves
    unless the per-restart sweep cap max_iters was hit.
    """
    if max_iters < 1:
        raise ValidationError(f"max_iters must be >= 1, got {max_iters}")
    if restarts < 1:
        raise ValidationError(f"restarts must be >= 1, got {restarts}")
    engine = _Engine(system, prior, contexts)
    k = len(engine.contexts)
    rng = np.random.default_rng(seed)

    def score(assignment: np.ndarray) -> float:
        total = 0.0
        for j in range(k):
            numerators = engine.numerators(assignment, skip=j)
            top = float(numerators.max())
            if top == -math.inf:
                return -math.inf
            p = engine.predictive(numerators, j)
            mass = float(p[assignment[j]]) / float(p.sum())
            if mass <= 0.0:
                return -math.inf
            total += math.log2(mass)
        return total

    starts = [_validate_initial(engine, initial)]
    for _ in range(restarts - 1):
        starts.append(
            np.array([rng.integers(0, s) for s in engine.sizes], dtype=np.int64)
        )

    best_assignment = starts[0].copy()
    best_score = -math.inf
    for start in starts:
        current = start.copy()
        current_score = score(current)
        for _ in range(max_iters):
            move = None
            move_score = current_score
            for j in range(k):
                original = current[j]
                for a in range(engine.sizes[j]):
                    if a == original:
                        continue
                    current[j] = a
                    candidate = score(current)
                    if candidate > move_score:
                        move, move_score = (j, a), candidate
                current[j] = original
            if move is None:
                break
            current[move[0]] = move[1]
            current_score = move_score
        if current_score > best_score:
            best_assignment = current.copy()
            best_score = current_score

    return DPolicy(tuple(int(a) for a in best_assignment))


def gibbs_step_probability(
    system: MixtureBayesSystem,
    policy_from: DPolicy,
    policy_to: DPolicy,
    beta: float,
    *,
    prior: PolicyState | None = None,
    contexts: Sequence[int] | None = None,
) -> float:
    """Closed-form one-step transition probability of the single-site kernel.

    Zero when the policies differ in more than one coordinate; for the
    diagonal it sums the per-coordinate stay probabilities.
    """
    engine = _Engine(system, prior, contexts)
    from_asg = _validate_initial(engine, policy_from)
    to_asg = _validate_initial(engine, policy_to)
    k = len(engine.contexts)
    differing = [j for j in range(k) if from_asg[j] != to_asg[j]]
    if len(differing) > 1:
        return 0.0

    def resample_mass(position: int, target: int) -> float:
        numerators = engine.numerators(from_asg, skip=position)
        if float(numerators.max()) == -math.inf:
            raise DegenerateConditioningError(
                "degenerate conditioning: leave-one-out state has zero "
                "likelihood"
            )
        p = engine.predictive(numerators, position)
        total = float(p.sum())
        if total <= 0.0:
            raise DegenerateConditioningError(
                "degenerate conditioning: zero predictive mass"
            )
        return float(temper(p / total, beta)[target])

    if len(differing) == 1:
        j = differing[0]
        return resample_mass(j, int(to_asg[j])) / k
    return sum(resample_mass(j, int(from_asg[j])) for j in range(k)) / k


def exact_conditional_distribution(
    system: MixtureBayesSystem,
    beta: float,
    *,
    prior: PolicyState | None = None,
    contexts: Sequence[int] | None = None,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> PolicyDistribution:
    """Exact tempered distribution over the covered sub-policy space given the
    prior state: mass ∝ (conditional joint)^beta.

    With an empty prior over all contexts this equals the softmax over
    coherence; it is the sampler family's exact reference distribution.
    """
    if beta <= 0:
        raise ValidationError(f"beta must be positive, got {beta}")
    engine = _Engine(system, prior, contexts)
    masses = engine.enumerate_conditional_masses(cap=cap)
    if math.isinf(beta):
        # ties within 1e-12 of the maximum on the log2 scale
        top = masses.max()
        support = (masses >= top * 2.0 ** (-PROB_ATOL)).astype(np.float64)
        out = support / support.sum()
    else:
        out = masses**beta
        out /= out.sum()
    return PolicyDistribution(
        masses=out, provenance="exact-softmax", sizes=engine.sizes
    )

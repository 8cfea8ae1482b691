"""Sampler family: single-site Gibbs, block variant with anchoring, debate,
sequential bootstrap, and mutual-predictability hill climbing."""

from __future__ import annotations

import math

import numpy as np
import pytest

from cohopt import (
    DPolicy,
    MixtureBayesSystem,
    PolicyState,
    PositivityWarning,
    SamplerConfig,
    ValidationError,
    bootstrap_exact_distribution,
    debate_run,
    empirical_distribution,
    exact_conditional_distribution,
    generic_partition,
    gibbs_run,
    gibbs_step_probability,
    icm_hill_climb,
    infer,
    mutual_predictability,
    random_mixture_system,
    simple_bootstrap_run,
    softmax_over_coherence,
    state_of_policy,
    temper,
    tempered_infer,
    training_friendly_gibbs_run,
    tv_distance,
)

from conftest import condiments_partition, condiments_system


def positive_system(seed: int = 9, sizes=(3, 3, 3), n_latents: int = 2):
    rng = np.random.default_rng(seed)
    partition = generic_partition(list(sizes))
    return partition, random_mixture_system(partition, n_latents, rng)


class TestSamplerConfig:
    def test_validation(self):
        with pytest.raises(ValidationError):
            SamplerConfig(beta=0.0)
        with pytest.raises(ValidationError):
            SamplerConfig(steps=0)
        with pytest.raises(ValidationError):
            SamplerConfig(gamma=1.0)
        with pytest.raises(ValidationError):
            SamplerConfig(anchor_weight=1.5)
        with pytest.raises(ValidationError):
            SamplerConfig(burn_in=-1)

    def test_dict_roundtrip_with_infinite_beta(self):
        config = SamplerConfig(beta=math.inf, steps=10, seed=7)
        assert SamplerConfig.from_dict(config.to_dict()) == config


class TestGibbs:
    def test_most_coherent_state_absorbs(self):
        partition = condiments_partition()
        system = condiments_system(0.0)
        start = partition.policy_from_names(["burger_mayo", "fries_mayo"])
        with pytest.warns(PositivityWarning):
            record = gibbs_run(
                system, start, SamplerConfig(beta=1.0, steps=300, seed=0)
            )
        assert np.all(record.trajectory == np.array(start.assignment))

    def test_zero_cells_confine_the_chain(self):
        # from (mustard, ketchup) every conditional gives the mayo-consistent
        # behaviors probability zero, so the chain never leaves the
        # mustard/other x ketchup/other block
        partition = condiments_partition()
        system = condiments_system(0.0)
        start = partition.policy_from_names(
            ["burger_mustard", "fries_ketchup"]
        )
        with pytest.warns(PositivityWarning):
            record = gibbs_run(
                system, start, SamplerConfig(beta=1.0, steps=500, seed=1)
            )
        assert np.all(record.trajectory >= 1)

    def test_infinite_beta_forces_consistent_completion(self):
        partition = condiments_partition()
        system = condiments_system(0.0)
        mayo_state = PolicyState.from_behaviors([partition.global_index(0, 0)])
        np.testing.assert_allclose(
            tempered_infer(system, mayo_state, 1, math.inf),
            [1.0, 0.0, 0.0],
            atol=0,
        )
        start = partition.policy_from_names(["burger_mayo", "fries_ketchup"])
        target = partition.policy_from_names(["burger_mayo", "fries_mayo"])
        # conditional on resampling the fries coordinate, the move to the
        # consistent completion is certain
        mass = gibbs_step_probability(system, start, target, math.inf)
        assert abs(mass - 0.5) <= 1e-15  # 1/|S| coordinate pick x certainty

    def test_converges_to_exact_distribution(self):
        partition, system = positive_system(9)
        config = SamplerConfig(beta=1.0, steps=50_000, seed=2)
        record = gibbs_run(system, partition.policy_at(0), config)
        exact = softmax_over_coherence(system, 1.0)
        empirical = empirical_distribution(record, "uniform-round")
        assert tv_distance(empirical, exact) <= 0.05

    def test_single_coordinate_moves(self):
        partition, system = positive_system(10)
        record = gibbs_run(
            system, partition.policy_at(5), SamplerConfig(steps=500, seed=3)
        )
        diffs = (record.trajectory[1:] != record.trajectory[:-1]).sum(axis=1)
        assert diffs.max() <= 1
        for t, move in enumerate(record.moves):
            changed = np.nonzero(
                record.trajectory[t + 1] != record.trajectory[t]
            )[0]
            assert set(changed).issubset(set(move))

    def test_seed_determinism(self):
        partition, system = positive_system(11)
        config = SamplerConfig(beta=2.0, steps=400, seed=99)
        first = gibbs_run(system, partition.policy_at(0), config)
        second = gibbs_run(system, partition.policy_at(0), config)
        assert np.array_equal(first.trajectory, second.trajectory)
        assert np.array_equal(first.coherence_bits, second.coherence_bits)

    def test_trajectory_length_and_coherence_column(self):
        partition, system = positive_system(12)
        config = SamplerConfig(steps=50, seed=4)
        record = gibbs_run(system, partition.policy_at(0), config)
        assert len(record) == 51
        from cohopt import coherence

        for t in (0, 25, 50):
            expected = coherence(
                system, PolicyState.zero(), record.policy_at(t)
            ).bits
            assert abs(record.coherence_bits[t] - expected) <= 1e-10

    def test_tv_shrinks_over_step_ladder(self):
        partition, system = positive_system(14)
        exact = softmax_over_coherence(system, 1.0)
        tvs = []
        for steps in (10**3, 10**4, 10**5, 2 * 10**5):
            record = gibbs_run(
                system,
                partition.policy_at(0),
                SamplerConfig(beta=1.0, steps=steps, seed=20),
            )
            tvs.append(tv_distance(empirical_distribution(record), exact))
        assert tvs[-1] < tvs[0]
        for shorter, longer in zip(tvs, tvs[1:]):
            assert longer <= shorter * 1.3 + 0.01  # monotone within noise

    def test_subset_run_with_prior(self):
        partition, system = positive_system(13)
        prior = PolicyState.from_behaviors([partition.global_index(0, 1)])
        record = gibbs_run(
            system,
            DPolicy((0, 0)),
            SamplerConfig(steps=20_000, seed=5),
            prior=prior,
            contexts=(1, 2),
        )
        assert record.trajectory.shape[1] == 2
        exact = exact_conditional_distribution(
            system, 1.0, prior=prior, contexts=(1, 2)
        )
        assert tv_distance(empirical_distribution(record), exact) <= 0.05


class TestDetailedBalance:
    @pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
    def test_exact_kernel_balance(self, beta):
        partition, system = positive_system(4)
        exact = exact_conditional_distribution(system, beta)
        worst = 0.0
        for i in range(partition.policy_count()):
            pi = partition.policy_at(i)
            for c in range(partition.n_contexts):
                for a in range(partition.sizes[c]):
                    if a == pi.assignment[c]:
                        continue
                    pj = pi.replace(c, a)
                    j = partition.policy_index(pj.assignment)
                    lhs = exact.masses[i] * gibbs_step_probability(
                        system, pi, pj, beta
                    )
                    rhs = exact.masses[j] * gibbs_step_probability(
                        system, pj, pi, beta
                    )
                    worst = max(
                        worst, abs(lhs - rhs) / max(abs(lhs), abs(rhs))
                    )
        assert worst <= 1e-12

    def test_multi_coordinate_transitions_have_zero_mass(self):
        partition, system = positive_system(4)
        pi = partition.policy_at(0)
        pj = pi.replace(0, 1).replace(1, 1)
        assert gibbs_step_probability(system, pi, pj, 1.0) == 0.0


class TestExactConditionalDistribution:
    def test_matches_definitional_softmax(self):
        for seed in (1, 2, 3):
            _, system = positive_system(seed)
            for beta in (0.7, 1.0, 2.5, math.inf):
                fast = exact_conditional_distribution(system, beta)
                definitional = softmax_over_coherence(system, beta)
                assert tv_distance(fast, definitional) <= 1e-10


class TestTrainingFriendlyGibbs:
    def test_leave_one_out_shape(self):
        # floor(gamma k) = k - 1 retains all but one context per round
        partition, system = positive_system(20, sizes=(3, 3, 3))
        config = SamplerConfig(steps=200, seed=6, gamma=0.7)
        record = training_friendly_gibbs_run(
            system, partition.policy_at(0), config
        )
        assert all(len(move) == 1 for move in record.moves)
        diffs = (record.trajectory[1:] != record.trajectory[:-1]).sum(axis=1)
        assert diffs.max() <= 1

    def test_moves_only_outside_retained_subset(self):
        partition, system = positive_system(21, sizes=(3, 3, 3, 3))
        config = SamplerConfig(steps=300, seed=7, gamma=0.5)
        record = training_friendly_gibbs_run(
            system, partition.policy_at(0), config
        )
        for t, move in enumerate(record.moves):
            changed = np.nonzero(
                record.trajectory[t + 1] != record.trajectory[t]
            )[0]
            assert set(changed).issubset(set(move))

    def test_pure_block_sampler_approximates_target(self):
        partition, system = positive_system(22)
        config = SamplerConfig(
            beta=1.0, steps=60_000, seed=8, gamma=0.85, anchor_weight=0.0
        )
        record = training_friendly_gibbs_run(
            system, partition.policy_at(0), config
        )
        exact = exact_conditional_distribution(system, 1.0)
        assert tv_distance(empirical_distribution(record), exact) <= 0.1

    def test_full_anchor_draws_iid_from_round_zero_state(self):
        partition, system = positive_system(23)
        config = SamplerConfig(
            beta=1.0, steps=15_000, seed=9, gamma=0.5, anchor_weight=1.0
        )
        record = training_friendly_gibbs_run(
            system, partition.policy_at(0), config
        )
        # reconstruct the round-0 retained state from the record
        resampled0 = set(record.moves[0])
        retained0 = [j for j in range(3) if j not in resampled0]
        anchor = state_of_policy(
            partition, record.policy_at(0), [record.contexts[j] for j in retained0]
        )
        for j in range(3):
            expected = tempered_infer(
                system, anchor, record.contexts[j], config.beta
            )
            values = record.trajectory[500:, j]
            empirical = np.bincount(values, minlength=3) / values.size
            assert 0.5 * np.abs(empirical - expected).sum() <= 0.02

    def test_gamma_too_small_rejected(self):
        partition, system = positive_system(24)
        config = SamplerConfig(steps=10, seed=0, gamma=0.2)
        with pytest.raises(ValidationError):
            training_friendly_gibbs_run(system, partition.policy_at(0), config)

    def test_seed_determinism(self):
        partition, system = positive_system(25)
        config = SamplerConfig(steps=300, seed=42, gamma=0.6, anchor_weight=0.5)
        first = training_friendly_gibbs_run(
            system, partition.policy_at(0), config
        )
        second = training_friendly_gibbs_run(
            system, partition.policy_at(0), config
        )
        assert np.array_equal(first.trajectory, second.trajectory)


class TestDebate:
    def test_requires_two_contexts(self):
        partition, system = positive_system(30, sizes=(3, 3, 3))
        with pytest.raises(ValidationError):
            debate_run(system, SamplerConfig(steps=10, seed=0))

    def test_converges_to_exact_distribution(self):
        system = condiments_system(0.01)
        config = SamplerConfig(beta=1.0, steps=40_000, seed=3)
        record = debate_run(system, config)
        exact = softmax_over_coherence(system, 1.0)
        assert tv_distance(empirical_distribution(record), exact) <= 0.05

    def test_point_mass_conditionals_cycle_or_fix(self):
        # both conditionals deterministic: after round 1 the trajectory is a
        # fixed point (or a 2-cycle); here the consistent pair absorbs
        partition = generic_partition([2, 2])
        system = MixtureBayesSystem(
            partition,
            [0.5, 0.5],
            [
                np.array([[1.0, 0.0], [0.0, 1.0]]),
                np.array([[1.0, 0.0], [0.0, 1.0]]),
            ],
        )
        with pytest.warns(PositivityWarning):
            record = debate_run(system, SamplerConfig(steps=50, seed=1))
        tail = record.trajectory[1:]
        assert np.all(tail[:, 0] == tail[:, 1])
        assert np.all(tail == tail[0])

    def test_infinite_beta_absorbs_at_consistent_pair(self):
        # the positivity precheck applies to finite beta only, so no warning
        partition = condiments_partition()
        system = condiments_system(0.0)
        record = debate_run(
            system, SamplerConfig(beta=math.inf, steps=100, seed=5)
        )
        mayo_rounds = np.nonzero(record.trajectory[:, 0] == 0)[0]
        if mayo_rounds.size:
            first = int(mayo_rounds[0])
            assert np.all(record.trajectory[first + 1 :] == 0)

    def test_seed_determinism(self):
        system = condiments_system(0.01)
        config = SamplerConfig(steps=500, seed=77)
        first = debate_run(system, config)
        second = debate_run(system, config)
        assert np.array_equal(first.trajectory, second.trajectory)

    def test_two_context_subset_with_prior(self):
        partition, system = positive_system(34, sizes=(3, 3, 3))
        prior = PolicyState.from_behaviors([partition.global_index(1, 2)])
        record = debate_run(
            system,
            SamplerConfig(beta=1.0, steps=30_000, seed=8),
            prior=prior,
            contexts=(0, 2),
        )
        exact = exact_conditional_distribution(
            system, 1.0, prior=prior, contexts=(0, 2)
        )
        assert tv_distance(empirical_distribution(record), exact) <= 0.05


class TestSimpleBootstrap:
    def test_exact_match_at_beta_one(self, condiments):
        partition, system = condiments
        exact = softmax_over_coherence(system, 1.0)
        path = bootstrap_exact_distribution(system, [0, 1], 1.0)
        assert tv_distance(path, exact) <= 1e-12

    def test_single_context_reduces_to_tempered_row(self):
        partition = generic_partition([4])
        rng = np.random.default_rng(3)
        system = random_mixture_system(partition, 2, rng)
        for beta in (0.5, 2.0):
            path = bootstrap_exact_distribution(system, [0], beta)
            expected = temper(infer(system, PolicyState.zero(), 0), beta)
            np.testing.assert_allclose(path.masses, expected, atol=1e-12)

    def test_linear_error_trend_near_one(self):
        partition, system = positive_system(9)
        order = [0, 1, 2]
        tvs = {
            beta: tv_distance(
                bootstrap_exact_distribution(system, order, beta),
                exact_conditional_distribution(system, beta),
            )
            for beta in (0.8, 0.9, 1.1, 1.2)
        }
        assert tvs[0.9] <= tvs[0.8]
        assert tvs[1.1] <= tvs[1.2]
        slope = 0.5 * (tvs[0.9] / 0.1 + tvs[1.1] / 0.1)
        assert tvs[0.8] <= 3.0 * slope * 0.2
        assert tvs[1.2] <= 3.0 * slope * 0.2

    def test_trace_multiplies_to_mass(self):
        partition, system = positive_system(31)
        result = simple_bootstrap_run(
            system, "random", SamplerConfig(beta=1.3, steps=1, seed=11)
        )
        assert sorted(result.order) == [0, 1, 2]
        recomputed = sum(math.log2(p) for p in result.step_probabilities)
        assert abs(recomputed - result.log2_mass) <= 1e-12

    def test_seed_determinism(self):
        partition, system = positive_system(36)
        config = SamplerConfig(beta=1.5, steps=1, seed=55)
        first = simple_bootstrap_run(system, "random", config)
        second = simple_bootstrap_run(system, "random", config)
        assert first == second

    def test_explicit_order_and_validation(self):
        partition, system = positive_system(32)
        result = simple_bootstrap_run(
            system, [2, 0, 1], SamplerConfig(steps=1, seed=0)
        )
        assert result.order == (2, 0, 1)
        with pytest.raises(ValidationError):
            simple_bootstrap_run(
                system, [0, 0, 1], SamplerConfig(steps=1, seed=0)
            )

    def test_infinite_beta_follows_greedy_chain(self):
        partition, system = positive_system(35)
        result = simple_bootstrap_run(
            system, [0, 1, 2], SamplerConfig(beta=math.inf, steps=1, seed=2)
        )
        # replay: each step must pick the argmax of the running conditional
        state = PolicyState.zero()
        for j in (0, 1, 2):
            expected = int(np.argmax(infer(system, state, j)))
            assert result.policy.assignment[j] == expected
            state = state.add_behavior(partition.global_index(j, expected))
        assert result.step_probabilities == (1.0, 1.0, 1.0)

    def test_sampler_follows_exact_distribution(self):
        partition, system = positive_system(33, sizes=(2, 2))
        order = [0, 1]
        exact = bootstrap_exact_distribution(system, order, 2.0)
        counts = np.zeros(4)
        for seed in range(4000):
            result = simple_bootstrap_run(
                system, order, SamplerConfig(beta=2.0, steps=1, seed=seed)
            )
            counts[partition.policy_index(result.policy.assignment)] += 1
        empirical = counts / counts.sum()
        assert 0.5 * np.abs(empirical - exact.masses).sum() <= 0.03


class TestIcm:
    def test_finds_consistent_pair(self, condiments):
        partition, system = condiments
        start = partition.policy_from_names(
            ["burger_mustard", "fries_ketchup"]
        )
        best = icm_hill_climb(system, start, seed=0)
        assert partition.policy_names(best) == ("burger_mayo", "fries_mayo")

    def test_single_context_returns_marginal_argmax(self):
        partition = generic_partition([4])
        rng = np.random.default_rng(6)
        system = random_mixture_system(partition, 2, rng)
        best = icm_hill_climb(system, DPolicy((0,)), seed=1)
        expected = int(np.argmax(infer(system, PolicyState.zero(), 0)))
        assert best.assignment == (expected,)

    def test_local_maximum_certificate(self):
        partition, system = positive_system(40)
        best = icm_hill_climb(system, partition.policy_at(0), seed=2)
        top = mutual_predictability(system, best)
        for c in range(partition.n_contexts):
            for a in range(partition.sizes[c]):
                if a == best.assignment[c]:
                    continue
                neighbor = best.replace(c, a)
                assert mutual_predictability(system, neighbor) <= top + 1e-12

    def test_matches_exhaustive_argmax_on_small_spaces(self):
        for seed in (50, 51, 52):
            partition, system = positive_system(seed, sizes=(3, 3))
            best = icm_hill_climb(
                system, partition.policy_at(0), seed=seed, restarts=8
            )
            scores = [
                mutual_predictability(system, partition.policy_at(i))
                for i in range(partition.policy_count())
            ]
            assert mutual_predictability(system, best) >= max(scores) - 1e-12


class TestMutualPredictability:
    def test_consistent_pair_is_zero(self, condiments):
        partition, system = condiments
        pi1 = partition.policy_from_names(["burger_mayo", "fries_mayo"])
        assert mutual_predictability(system, pi1) == 0.0

    def test_mustard_ketchup_is_minus_two(self, condiments):
        partition, system = condiments
        pi2 = partition.policy_from_names(
            ["burger_mustard", "fries_ketchup"]
        )
        assert abs(mutual_predictability(system, pi2) - (-2.0)) <= 1e-12

    def test_single_context_reduces_to_marginal(self):
        partition = generic_partition([3])
        rng = np.random.default_rng(7)
        system = random_mixture_system(partition, 2, rng)
        marginals = infer(system, PolicyState.zero(), 0)
        for a in range(3):
            assert abs(
                mutual_predictability(system, DPolicy((a,)))
                - math.log2(float(marginals[a]))
            ) <= 1e-12

import itertools
import random
from fractions import Fraction

import pytest

from helpers import (
    DEVIATION,
    TRUTH_PROFILE,
    interim_shares_oracle,
    random_prior,
)
from ramkit.core import Instance, enumerate_preferences, insert_report
from ramkit.axioms import check_elementary_monotonicity, check_neutrality
from ramkit.interim import (
    INTERIM_AXIOMS,
    InternalConsistencyError,
    Prior,
    SamplingExhaustedError,
    check_interim_elementary_monotonicity,
    check_interim_lower_invariance,
    check_interim_upper_invariance,
    check_obic,
    interim_share_vector,
    lrobic_search,
    obic_decomposition_report,
    rank_vector_report,
    reverify_interim_violation,
    run_interim_sweep,
    sample_prior_in_ball,
    sample_prior_pair_shift,
    uniform_prior,
)
from ramkit.mechanisms import (
    EatingSpeedSchedule,
    ProbabilisticSerial,
    RandomPriority,
    SerialDictatorship,
    SimultaneousEating,
)

F = Fraction
A, B, C = 0, 1, 2
EPSILON = F(1, 20)


@pytest.fixture(scope="module")
def uniform3(instance3):
    return uniform_prior(instance3)


@pytest.fixture(scope="module")
def violating_prior(ps3, uniform3):
    """A sampled prior near uniform where PS fails OBIC."""
    hit = lrobic_search(ps3, uniform3, EPSILON, 100, 7)
    assert hit is not None
    return hit[0].prior


class TestPrior:
    def test_uniform_n2(self):
        prior = uniform_prior(Instance.default(2))
        assert prior.probs == (F(1, 2), F(1, 2))

    def test_uniform_n3(self, uniform3):
        assert len(uniform3.probs) == 6
        assert all(p == F(1, 6) for p in uniform3.probs)

    def test_uniform_n4(self):
        prior = uniform_prior(Instance.default(4))
        assert len(prior.probs) == 24 and prior.probs[0] == F(1, 24)

    def test_must_sum_to_one(self, instance3):
        probs = [F(1, 6)] * 5 + [F(1, 7)]
        with pytest.raises(ValueError, match="sum to"):
            Prior(instance3, tuple(probs))

    def test_rejects_negative(self, instance3):
        probs = [F(1, 3), F(-1, 6)] + [F(1, 6)] * 5
        with pytest.raises(ValueError, match="negative"):
            Prior(instance3, tuple(probs[:6]))

    def test_zero_entries_allowed(self, instance3):
        probs = (F(1, 2), F(1, 2), F(0), F(0), F(0), F(0))
        prior = Prior(instance3, probs)
        assert prior.of((0, 1, 2)) == F(1, 2)

    def test_from_mapping_requires_totality(self, instance3):
        with pytest.raises(ValueError, match="missing"):
            Prior.from_mapping(instance3, {(0, 1, 2): F(1)})


class TestInterimShares:
    def test_two_agent_uniform_value(self):
        inst = Instance.default(2)
        ps = ProbabilisticSerial(inst, cache=True)
        vec = interim_share_vector(ps, 0, (A, B), uniform_prior(inst))
        assert vec.shares == (F(3, 4), F(1, 4))

    def test_matches_bruteforce_oracle(self, ps3, uniform3):
        rng = random.Random(21)
        for _ in range(4):
            prior = random_prior(rng, ps3.instance)
            for agent in (0, 2):
                report = (C, B, A)
                fast = interim_share_vector(ps3, agent, report, prior).shares
                slow = interim_shares_oracle(ps3, agent, report, prior)
                assert fast == slow

    def test_degenerate_prior_reduces_to_expost_row(self, ps3, instance3):
        star = (B, C, A)
        probs = tuple(
            F(1) if p == star else F(0) for p in enumerate_preferences(instance3)
        )
        prior = Prior(instance3, probs)
        for agent in instance3.agents:
            for report in enumerate_preferences(instance3):
                opponents = tuple(star for _ in range(2))
                expected = ps3.assignment(insert_report(opponents, agent, report))[agent]
                assert interim_share_vector(ps3, agent, report, prior).shares == expected

    def test_rank_ordered_under_uniform(self, ps3, uniform3):
        vec = interim_share_vector(ps3, 0, (A, B, C), uniform3).shares
        assert sum(vec) == 1
        assert vec[A] >= vec[B] >= vec[C]

    def test_normalization_enforced(self, ps3, uniform3):
        from ramkit.interim import InterimShareVector

        with pytest.raises(InternalConsistencyError):
            InterimShareVector(agent=0, report=(A, B, C), prior=uniform3,
                               shares=(F(1, 2), F(1, 4), F(1, 8)))


class TestObic:
    def test_ps_uniform_satisfied(self, ps3, uniform3):
        assert check_obic(ps3, uniform3).satisfied

    def test_rp_uniform_satisfied(self, rp3, uniform3):
        assert check_obic(rp3, uniform3).satisfied

    def test_rp_satisfied_for_random_priors(self, rp3):
        rng = random.Random(17)
        for _ in range(5):
            assert check_obic(rp3, random_prior(rng, rp3.instance)).satisfied

    def test_sd_satisfied_for_random_priors(self, instance3):
        sd = SerialDictatorship(instance3, (2, 0, 1), cache=True)
        rng = random.Random(23)
        for _ in range(3):
            assert check_obic(sd, random_prior(rng, instance3)).satisfied

    def test_ps_fails_at_violating_prior(self, ps3, violating_prior):
        assert not check_obic(ps3, violating_prior).satisfied


class TestUniformPriorTheorem:
    def test_neutral_monotone_mechanisms_are_obic_under_uniform(self, instance3, uniform3):
        schedules = [
            EatingSpeedSchedule((
                ((F(0), F(1, 2), F(2)), (F(1, 2), F(1), F(0))),
                ((F(0), F(1), F(1)),),
                ((F(0), F(1, 2), F(1, 2)), (F(1, 2), F(1), F(3, 2))),
            )),
            EatingSpeedSchedule((
                ((F(0), F(1, 4), F(3)), (F(1, 4), F(1), F(1, 3))),
                ((F(0), F(3, 4), F(1)), (F(3, 4), F(1), F(1))),
                ((F(0), F(1), F(1)),),
            )),
        ]
        mechanisms = [
            ProbabilisticSerial(instance3, cache=True),
            RandomPriority(instance3, cache=True),
            SimultaneousEating(instance3, schedules[0], cache=True),
            SimultaneousEating(instance3, schedules[1], cache=True),
        ]
        for mech in mechanisms:
            assert check_neutrality(mech).satisfied
            assert check_elementary_monotonicity(mech).satisfied
            assert check_obic(mech, uniform3).satisfied

    def test_rank_structure_for_sea(self, instance3, uniform3):
        sched = EatingSpeedSchedule((
            ((F(0), F(1, 2), F(2)), (F(1, 2), F(1), F(0))),
            ((F(0), F(1), F(1)),),
            ((F(0), F(1, 2), F(1, 2)), (F(1, 2), F(1), F(3, 2))),
        ))
        sea = SimultaneousEating(instance3, sched, cache=True)
        for agent in instance3.agents:
            report = rank_vector_report(sea, uniform3, agent)
            assert report.rank_invariant and report.rank_monotone
            assert sum(report.rank_vector) == 1


class TestRankVectors:
    def test_ps_uniform_flags(self, ps3, uniform3):
        report = rank_vector_report(ps3, uniform3, 0)
        assert report.rank_invariant and report.rank_monotone
        assert sum(report.rank_vector) == 1

    def test_two_agent_rank_vector(self):
        inst = Instance.default(2)
        ps = ProbabilisticSerial(inst, cache=True)
        report = rank_vector_report(ps, uniform_prior(inst), 0)
        assert report.rank_vector == (F(3, 4), F(1, 4))

    def test_invariance_breaks_off_uniform(self, ps3, violating_prior):
        report = rank_vector_report(ps3, violating_prior, 0)
        assert not report.rank_invariant
        assert report.rank_vector is None


class TestInterimAxioms:
    def test_ps_uniform_all_three_hold(self, ps3, uniform3):
        assert check_interim_elementary_monotonicity(ps3, uniform3).satisfied
        assert check_interim_upper_invariance(ps3, uniform3).satisfied
        assert check_interim_lower_invariance(ps3, uniform3).satisfied

    def test_strategy_proof_mechanism_any_prior(self, rp3):
        rng = random.Random(77)
        prior = random_prior(rng, rp3.instance)
        results = run_interim_sweep(rp3, prior)
        assert all(outcome.satisfied for outcome in results.values())

    def test_violating_prior_breaks_an_interim_axiom(self, ps3, violating_prior):
        results = run_interim_sweep(ps3, violating_prior)
        assert not all(outcome.satisfied for outcome in results.values())

    def test_obic_failure_at_swap_pair_has_matching_interim_witness(
        self, ps3, violating_prior
    ):
        from ramkit.core import swap_relation

        obic = check_obic(ps3, violating_prior)
        results = run_interim_sweep(ps3, violating_prior)
        interim_pairs = {
            (v.agent, frozenset((v.truth, v.deviation)))
            for outcome in results.values()
            for v in outcome.violations
        }
        adjacent = [
            v for v in obic.violations
            if swap_relation(v.truth, v.deviation) is not None
        ]
        assert adjacent, "expected at least one adjacent OBIC violation"
        for v in adjacent:
            assert (v.agent, frozenset((v.truth, v.deviation))) in interim_pairs


class TestObicDecomposition:
    def test_ps_uniform_all_satisfied(self, ps3, uniform3):
        report = obic_decomposition_report(ps3, uniform3)
        assert report.verdicts == ("satisfied",) * 4

    def test_rp_uniform_all_satisfied(self, rp3, uniform3):
        report = obic_decomposition_report(rp3, uniform3)
        assert report.verdicts == ("satisfied",) * 4

    def test_ps_violating_prior_consistent(self, ps3, violating_prior):
        report = obic_decomposition_report(ps3, violating_prior)
        assert report.obic.verdict == "violated"
        assert "violated" in report.verdicts[1:]

    def test_guard_rejects_inconsistent_reports(self, ps3, uniform3, violating_prior):
        from ramkit.interim import ObicDecompositionReport

        good = obic_decomposition_report(ps3, uniform3)
        bad = check_obic(ps3, violating_prior)
        with pytest.raises(InternalConsistencyError):
            ObicDecompositionReport(
                obic=bad, interim_em=good.interim_em,
                interim_ui=good.interim_ui, interim_li=good.interim_li,
            )


class TestSampler:
    def test_deterministic(self, uniform3):
        s1 = sample_prior_in_ball(uniform3, EPSILON, 42)
        s2 = sample_prior_in_ball(uniform3, EPSILON, 42)
        assert s1.prior == s2.prior and s1.attempts == s2.attempts

    def test_ball_membership(self, uniform3):
        for seed in range(20):
            sample = sample_prior_in_ball(uniform3, EPSILON, seed)
            for p in sample.prior.probs:
                assert abs(p - F(1, 6)) < EPSILON
            assert sum(sample.prior.probs) == 1

    def test_radius_one_accepts_anything(self):
        inst = Instance.default(2)
        sample = sample_prior_in_ball(uniform_prior(inst), F(1), 5)
        assert sum(sample.prior.probs) == 1

    def test_tiny_radius_exhausts(self, uniform3):
        # no grid point lies within 1/10**9 of 1/6 on the 1/10**6 grid
        with pytest.raises(SamplingExhaustedError):
            sample_prior_in_ball(uniform3, F(1, 10 ** 9), 1, max_attempts=50)

    def test_nonpositive_radius_rejected(self, uniform3):
        with pytest.raises(ValueError):
            sample_prior_in_ball(uniform3, F(0), 1)

    def test_pair_shift_touches_only_two_coordinates(self, uniform3, instance3):
        pair = ((C, A, B), (A, C, B))
        sample = sample_prior_pair_shift(uniform3, EPSILON, 3, pair)
        base = sample_prior_in_ball(uniform3, F(1), 999)  # any valid point
        moved = [
            pref for pref, prob in sample.prior.items()
            if abs(prob - F(1, 6)) > F(1, 10 ** 6)
        ]
        assert set(moved) <= set(pair)
        assert sum(sample.prior.probs) == 1

    def test_ball_guard_in_dataclass(self, uniform3):
        from ramkit.interim import PriorBallSample

        far = sample_prior_in_ball(uniform3, F(1, 2), 11).prior
        with pytest.raises(InternalConsistencyError):
            PriorBallSample(center=uniform3, radius=F(1, 10 ** 7), seed=0,
                            prior=far, attempts=1)


class TestLrobicSearch:
    def test_ps_violating_prior_found_blind(self, ps3, uniform3):
        hit = lrobic_search(ps3, uniform3, EPSILON, 100, 7)
        assert hit is not None
        sample, witness = hit
        assert not check_obic(ps3, sample.prior).satisfied
        assert reverify_interim_violation(ps3, witness)

    def test_witness_reverifies_against_bruteforce(self, ps3, uniform3):
        sample, witness = lrobic_search(ps3, uniform3, EPSILON, 100, 7)
        truth = interim_shares_oracle(ps3, witness.agent, witness.truth, sample.prior)
        deviation = interim_shares_oracle(
            ps3, witness.agent, witness.deviation, sample.prior
        )
        lhs = sum(truth[a] for a in witness.truth[: witness.rank])
        rhs = sum(deviation[a] for a in witness.truth[: witness.rank])
        assert (lhs, rhs) == (witness.lhs, witness.rhs)
        assert lhs < rhs

    def test_ps_targeted_mode_finds_quickly(self, ps3, uniform3):
        hit = lrobic_search(ps3, uniform3, EPSILON, 10, 7, targeted=True)
        assert hit is not None
        assert not check_obic(ps3, hit[0].prior).satisfied

    def test_rp_never_falsified(self, rp3, uniform3):
        assert lrobic_search(rp3, uniform3, EPSILON, 30, 7) is None
        assert lrobic_search(rp3, uniform3, EPSILON, 10, 7, targeted=True) is None

    def test_zero_samples_rejected(self, ps3, uniform3):
        with pytest.raises(ValueError, match="at least one"):
            lrobic_search(ps3, uniform3, EPSILON, 0, 7)


class TestExPostInvarianceAcrossSwaps:
    def test_rp_shares_of_bystander_objects_never_move(self, rp3, instance3):
        from ramkit.core import adjacent_swaps, insert_report
        prefs = enumerate_preferences(instance3)
        for agent in instance3.agents:
            for opponents in itertools.product(prefs, repeat=2):
                for base in prefs:
                    old = rp3.assignment(insert_report(opponents, agent, base))[agent]
                    for swapped, info in adjacent_swaps(base):
                        if swapped < base:
                            continue
                        new = rp3.assignment(
                            insert_report(opponents, agent, swapped)
                        )[agent]
                        for x in range(3):
                            if x not in (info.lowered, info.raised):
                                assert old[x] == new[x]

    def test_ps_moves_a_bystander_share_at_table1(self, ps3):
        from ramkit.axioms import check_lower_invariance

        assert not check_lower_invariance(ps3).satisfied

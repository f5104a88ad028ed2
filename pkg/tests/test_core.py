import itertools
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from ramkit.core import (
    CapExceededError,
    Instance,
    InvalidAssignmentError,
    SwapInfo,
    adjacent_swaps,
    apply_permutation,
    enumerate_opponent_profiles,
    enumerate_preferences,
    fosd,
    fosd_failure,
    identity_permutation,
    inverse_permutation,
    lower_contour,
    object_at,
    parse_rational,
    prefix_sums,
    swap_relation,
    transposition,
    upper_contour,
    validate_assignment,
)

A, B, C = 0, 1, 2
CAB = (C, A, B)
ABC = (A, B, C)
ACB = (A, C, B)

F = Fraction


def perms(n):
    return st.permutations(list(range(n))).map(tuple)


def share_vectors(n):
    def normalize(raw):
        total = sum(raw)
        return tuple(F(x, total) for x in raw)

    return st.lists(
        st.integers(min_value=0, max_value=20), min_size=n, max_size=n
    ).filter(lambda xs: sum(xs) > 0).map(normalize)


class TestInstance:
    def test_default_names(self):
        inst = Instance.default(3)
        assert inst.object_names == ("a", "b", "c")
        assert list(inst.agents) == [0, 1, 2]

    def test_rejects_duplicate_names(self):
        with pytest.raises(ValueError, match="distinct"):
            Instance(2, ("x", "x"))

    def test_rejects_empty_name(self):
        with pytest.raises(ValueError, match="non-empty"):
            Instance(2, ("x", ""))

    def test_rejects_wrong_count(self):
        with pytest.raises(ValueError):
            Instance(3, ("x", "y"))

    def test_rejects_zero_agents(self):
        with pytest.raises(ValueError):
            Instance(0, ())

    def test_unknown_object_name(self):
        with pytest.raises(ValueError, match="unknown object"):
            Instance.default(2).object_index("z")


class TestRankAccess:
    def test_top_of_cab_is_c(self):
        assert object_at(CAB, 1) == C

    def test_last_of_abc_is_c(self):
        assert object_at(ABC, 3) == C

    def test_second_of_acb_is_c(self):
        assert object_at(ACB, 2) == C

    @pytest.mark.parametrize("k", [0, 4, -1])
    def test_rank_out_of_range(self, k):
        with pytest.raises(ValueError, match="out of range"):
            object_at(CAB, k)


class TestContours:
    def test_upper_of_middle(self):
        assert upper_contour(CAB, A) == {C}

    def test_upper_of_top_is_empty(self):
        assert upper_contour(CAB, C) == frozenset()

    def test_lower_of_middle(self):
        assert lower_contour(CAB, A) == {B}

    def test_unknown_object(self):
        with pytest.raises(ValueError):
            upper_contour((0, 1), 5)

    @given(perms(4), st.integers(min_value=0, max_value=3))
    def test_contours_partition(self, pref, a):
        up, down = upper_contour(pref, a), lower_contour(pref, a)
        assert up | down | {a} == set(range(4))
        assert not up & down and a not in up | down


class TestPermutations:
    def test_swap_a_c(self):
        assert apply_permutation(ACB, transposition(3, A, C)) == CAB

    def test_identity(self):
        for pref in enumerate_preferences(Instance.default(3)):
            assert apply_permutation(pref, identity_permutation(3)) == pref

    def test_swap_endpoints(self):
        assert apply_permutation((C, B, A), transposition(3, A, C)) == ABC

    @given(perms(4), perms(4))
    def test_inverse_round_trip(self, pref, sigma):
        back = apply_permutation(apply_permutation(pref, sigma), inverse_permutation(sigma))
        assert back == pref


class TestSwapRelation:
    def test_table1_pair(self):
        assert swap_relation(CAB, ACB) == SwapInfo(position=1, lowered=C, raised=A)

    def test_identical_preferences(self):
        assert swap_relation(CAB, CAB) is None

    def test_non_adjacent(self):
        assert swap_relation(ABC, (C, B, A)) is None

    @given(perms(4), perms(4))
    def test_detection_is_symmetric(self, p, q):
        assert (swap_relation(p, q) is None) == (swap_relation(q, p) is None)

    @given(perms(5))
    def test_adjacent_swaps_differ_in_two_positions(self, pref):
        for swapped, info in adjacent_swaps(pref):
            diffs = [k for k in range(5) if pref[k] != swapped[k]]
            assert diffs == [info.position - 1, info.position]
            assert swap_relation(pref, swapped) == info


class TestFosd:
    def test_table1_rows_incomparable(self):
        pi = (F(1, 6), F(1, 3), F(1, 2))
        pi_prime = (F(1, 2), F(1, 4), F(1, 4))
        assert not fosd(pi, pi_prime, CAB)
        assert not fosd(pi_prime, pi, CAB)
        assert fosd_failure(pi, pi_prime, CAB) == (2, F(2, 3), F(3, 4))
        assert fosd_failure(pi_prime, pi, CAB) == (1, F(1, 4), F(1, 2))

    def test_reflexive_on_example(self):
        pi = (F(1, 6), F(1, 3), F(1, 2))
        assert fosd(pi, pi, CAB)

    def test_degenerate_top_dominates(self):
        assert fosd((F(1), F(0), F(0)), (F(1, 3), F(1, 3), F(1, 3)), ABC)

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            fosd((F(1),), (F(1, 2), F(1, 2)), (0, 1))

    @given(share_vectors(3), perms(3))
    def test_reflexivity(self, pi, pref):
        assert fosd(pi, pi, pref)

    @given(share_vectors(3), share_vectors(3), perms(3))
    def test_antisymmetry_forces_equality(self, pi, rho, pref):
        if fosd(pi, rho, pref) and fosd(rho, pi, pref):
            assert pi == rho

    @given(share_vectors(3), share_vectors(3), share_vectors(3), perms(3))
    def test_transitivity(self, x, y, z, pref):
        if fosd(x, y, pref) and fosd(y, z, pref):
            assert fosd(x, z, pref)

    @given(share_vectors(4), perms(4))
    def test_full_prefix_is_one(self, pi, pref):
        assert prefix_sums(pi, pref)[-1] == 1


class TestEnumeration:
    def test_two_objects(self):
        inst = Instance.default(2)
        assert enumerate_preferences(inst) == [(0, 1), (1, 0)]

    @pytest.mark.parametrize("n,count", [(3, 6), (4, 24)])
    def test_counts(self, n, count):
        assert len(enumerate_preferences(Instance.default(n))) == count

    def test_no_duplicates(self):
        prefs = enumerate_preferences(Instance.default(4))
        assert len(set(prefs)) == len(prefs)

    def test_lexicographic(self):
        prefs = enumerate_preferences(Instance.default(4))
        assert prefs == sorted(prefs)

    def test_cap(self):
        with pytest.raises(CapExceededError, match="n <= 6"):
            enumerate_preferences(Instance.default(7))

    def test_cap_override(self):
        assert len(enumerate_preferences(Instance.default(7), max_n=7)) == 5040

    @pytest.mark.parametrize("n,agent,count", [(3, 0, 36), (2, 1, 2), (4, 0, 13824)])
    def test_opponent_counts(self, n, agent, count):
        stream = enumerate_opponent_profiles(Instance.default(n), agent)
        assert sum(1 for _ in stream) == count

    def test_opponent_streams_are_independent(self):
        inst = Instance.default(3)
        s1 = enumerate_opponent_profiles(inst, 0)
        s2 = enumerate_opponent_profiles(inst, 0)
        next(s1)
        assert list(s1) != list(s2)
        assert list(enumerate_opponent_profiles(inst, 0)) == list(
            enumerate_opponent_profiles(inst, 0)
        )

    def test_opponent_cap(self):
        with pytest.raises(CapExceededError):
            next(enumerate_opponent_profiles(Instance.default(5), 0))

    def test_bad_agent(self):
        with pytest.raises(ValueError):
            enumerate_opponent_profiles(Instance.default(3), 3)


class TestValidateAssignment:
    def test_uniform_2x2(self):
        half = F(1, 2)
        out = validate_assignment([[half, half], [half, half]])
        assert out == ((half, half), (half, half))

    def test_column_violation_lists_both_columns(self):
        with pytest.raises(InvalidAssignmentError) as err:
            validate_assignment([[1, 0], [1, 0]])
        messages = err.value.violations
        assert any("column sum for object 0 is 2" in m for m in messages)
        assert any("column sum for object 1 is 0" in m for m in messages)

    def test_table1_left_output_is_valid(self):
        rows = [
            [F(1, 6), F(1, 3), F(1, 2)],
            [F(2, 3), F(1, 3), F(0)],
            [F(1, 6), F(1, 3), F(1, 2)],
        ]
        assert validate_assignment(rows)

    def test_entry_out_of_range(self):
        with pytest.raises(InvalidAssignmentError, match="outside"):
            validate_assignment([[F(3, 2), F(-1, 2)], [F(-1, 2), F(3, 2)]])

    def test_rejects_floats(self):
        with pytest.raises(ValueError, match="float"):
            validate_assignment([[0.5, 0.5], [0.5, 0.5]])

    def test_rejects_non_square(self):
        with pytest.raises(ValueError, match="square"):
            validate_assignment([[F(1)], [F(1)]][:1] + [[F(0), F(1)]])


class TestExactArithmetic:
    @given(st.fractions(), st.fractions())
    def test_add_then_subtract_is_identity(self, x, y):
        assert (x + y) - y == x

    def test_parse_rational(self):
        assert parse_rational("2/3") == F(2, 3)
        assert parse_rational("-7") == F(-7)
        assert parse_rational(" 5/1 ") == F(5)

    @pytest.mark.parametrize("bad", ["0.5", "1e3", "a/b", "1/0", "", "1/2/3"])
    def test_parse_rational_rejects(self, bad):
        with pytest.raises(ValueError):
            parse_rational(bad)

    def test_rendering(self):
        assert str(F(1, 3)) == "1/3"
        assert str(F(6, 2)) == "3"

"""Shared test utilities: seeded exact randomness and brute-force oracles
kept independent of the library code paths they check."""

import itertools
import math
import random
from fractions import Fraction

from ramkit.core import enumerate_preferences, insert_report

# Table-1 objects a=0, b=1, c=2
A, B, C = 0, 1, 2
TRUTH_PROFILE = ((C, A, B), (A, B, C), (C, A, B))
DEVIATION = (A, C, B)
DEVIATION_PROFILE = (DEVIATION, (A, B, C), (C, A, B))
TRUTH_ROW = (Fraction(1, 6), Fraction(1, 3), Fraction(1, 2))
DEVIATION_ROW = (Fraction(1, 2), Fraction(1, 4), Fraction(1, 4))


def uniform_int(rng: random.Random, lo: int, hi: int) -> int:
    span = hi - lo + 1
    bits = span.bit_length()
    while True:
        v = rng.getrandbits(bits)
        if v < span:
            return lo + v


def random_permutation(rng: random.Random, n: int) -> tuple[int, ...]:
    items = list(range(n))
    for i in range(n - 1, 0, -1):
        j = uniform_int(rng, 0, i)
        items[i], items[j] = items[j], items[i]
    return tuple(items)


def random_profile(rng: random.Random, n: int) -> tuple[tuple[int, ...], ...]:
    return tuple(random_permutation(rng, n) for _ in range(n))


def random_bistochastic(rng: random.Random, n: int):
    """Exact random bistochastic matrix: a random positive-rational convex
    combination of random permutation matrices."""
    k = uniform_int(rng, 2, (n - 1) ** 2 + 1)
    weights = {}
    raw = [uniform_int(rng, 1, 99) for _ in range(k)]
    total = sum(raw)
    for w in raw:
        perm = random_permutation(rng, n)
        weights[perm] = weights.get(perm, Fraction(0)) + Fraction(w, total)
    matrix = [[Fraction(0)] * n for _ in range(n)]
    for perm, w in weights.items():
        for i in range(n):
            matrix[i][perm[i]] += w
    return tuple(tuple(row) for row in matrix)


def random_prior(rng: random.Random, instance):
    """Exact random full-support prior on a coarse grid."""
    from ramkit.interim import Prior

    m = math.factorial(instance.n)
    raw = [uniform_int(rng, 1, 999) for _ in range(m)]
    total = sum(raw)
    return Prior(instance, tuple(Fraction(r, total) for r in raw))


def interim_shares_oracle(mechanism, agent, report, prior):
    """Brute-force interim shares: full product over all opponent profiles,
    no support skipping, no shared tables."""
    instance = mechanism.instance
    n = instance.n
    prefs = enumerate_preferences(instance)
    acc = [Fraction(0)] * n
    for opponents in itertools.product(prefs, repeat=n - 1):
        weight = math.prod((prior.of(p) for p in opponents), start=Fraction(1))
        if weight == 0:
            continue
        row = mechanism.assignment(insert_report(opponents, agent, report))[agent]
        for a in range(n):
            acc[a] += weight * row[a]
    return tuple(acc)


def dominates_oracle(candidate, incumbent, profile) -> bool:
    """Definitional domination: every agent's candidate row FOSD-dominates
    her incumbent row, with at least one row different."""
    from ramkit.core import fosd

    n = len(profile)
    if all(candidate[i] == incumbent[i] for i in range(n)):
        return False
    return all(fosd(candidate[i], incumbent[i], profile[i]) for i in range(n))

"""Structured verdicts and violation witnesses for axiom checks.

A ViolationReport carries every input needed to replay the failed
comparison (agent, profile or report pair, swap, permutation, prior) plus
the exact left/right values observed, so any report can be re-verified
against the mechanism from scratch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .core import (
    Instance,
    ObjectPermutation,
    Preference,
    Profile,
    SwapInfo,
)


def _pref_str(instance: Instance, pref: Preference) -> str:
    return ">".join(instance.object_names[x] for x in pref)


def _profile_str(instance: Instance, profile: Profile) -> str:
    return "|".join(_pref_str(instance, p) for p in profile)


@dataclass(frozen=True)
class ViolationReport:
    """Self-certifying witness of one axiom failure."""

    axiom: str
    agent: Optional[int] = None          # 0-based; rendered 1-based
    agent2: Optional[int] = None
    profile: Optional[Profile] = None
    truth: Optional[Preference] = None   # interim checks: the true preference
    deviation: Optional[Preference] = None
    swap: Optional[SwapInfo] = None
    sigma: Optional[ObjectPermutation] = None
    objects: tuple[int, ...] = ()
    component: Optional[tuple[int, ...]] = None
    rank: Optional[int] = None
    lhs: Optional[Fraction] = None
    rhs: Optional[Fraction] = None
    relation: str = ""
    prior: object = None                 # interim checks attach the Prior used
    detail: str = ""

    def render(self, instance: Instance) -> str:
        bits = [self.axiom]
        if self.agent is not None:
            bits.append(f"agent={self.agent + 1}")
        if self.agent2 is not None:
            bits.append(f"other_agent={self.agent2 + 1}")
        if self.profile is not None:
            bits.append(f"profile={_profile_str(instance, self.profile)}")
        if self.truth is not None:
            bits.append(f"truth={_pref_str(instance, self.truth)}")
        if self.deviation is not None:
            bits.append(f"deviation={_pref_str(instance, self.deviation)}")
        if self.swap is not None:
            names = instance.object_names
            bits.append(
                f"swap=rank{self.swap.position}:"
                f"{names[self.swap.lowered]}<->{names[self.swap.raised]}"
            )
        if self.sigma is not None:
            bits.append(
                "sigma=" + ",".join(
                    f"{instance.object_names[x]}->{instance.object_names[y]}"
                    for x, y in enumerate(self.sigma) if x != y
                )
            )
        if self.objects:
            bits.append(
                "objects=" + ",".join(instance.object_names[x] for x in self.objects)
            )
        if self.component is not None:
            bits.append(
                "component=" + ",".join(
                    f"{i + 1}:{instance.object_names[a]}"
                    for i, a in enumerate(self.component)
                )
            )
        if self.rank is not None:
            bits.append(f"prefix={self.rank}")
        if self.lhs is not None and self.rhs is not None:
            bits.append(f"violated={self.lhs}{self.relation}{self.rhs}")
        if self.detail:
            bits.append(self.detail)
        return " ".join(bits)


@dataclass(frozen=True)
class CheckOutcome:
    """Verdict of one axiom sweep.

    ``profiles_checked`` counts mechanism evaluations performed and
    ``comparisons`` the exact comparisons made; both are deterministic for
    a given mode, independent of parallelism degree.
    """

    axiom: str
    satisfied: bool
    violations: tuple[ViolationReport, ...] = field(default_factory=tuple)
    profiles_checked: int = 0
    comparisons: int = 0

    def __post_init__(self):
        if self.satisfied != (len(self.violations) == 0):
            raise ValueError("verdict inconsistent with the violation list")

    @property
    def verdict(self) -> str:
        return "satisfied" if self.satisfied else "violated"

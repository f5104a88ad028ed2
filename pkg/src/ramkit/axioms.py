"""Ex-post axiom verification engine.

Exhaustive sweeps over the full preference domain for strategy-proofness,
weak strategy-proofness, elementary monotonicity, neutrality, upper/lower
invariance and equal treatment of equals, plus pointwise ordinal- and
ex-post-efficiency checks with the exact LP oracle as an independent
second route.

Sweeps enumerate lexicographically, so the first violation is the same on
every run and platform.  ``mode`` selects between collecting every
violation ("exhaustive", the default for n <= 3) and stopping at the
first one ("first", the default for larger n; always sequential).  The
exhaustive mode can fan out over worker processes; the merged violation
set is identical for every parallelism degree.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Iterable, Optional

from .core import (
    ZERO,
    AssignmentMatrix,
    Instance,
    Preference,
    Profile,
    SwapInfo,
    _check_sweep_cap,
    adjacent_swaps,
    apply_permutation_profile,
    enumerate_preferences,
    enumerate_profiles,
    fosd,
    fosd_failure,
    insert_report,
    prefers,
    validate_assignment,
)
from .decomp import _improvement_cycle, birkhoff_decompose
from .mechanisms import Mechanism
from .reports import CheckOutcome, ViolationReport
from .simplex import solve_max

PAIR_AXIOMS = ("sp", "weak-sp", "em", "ui", "li")
PROFILE_AXIOMS = ("neutral", "ete", "oe", "ex-post")


def _resolve_mode(mode: Optional[str], n: int) -> str:
    if mode is None:
        return "exhaustive" if n <= 3 else "first"
    if mode not in ("exhaustive", "first"):
        raise ValueError(f"mode must be 'exhaustive' or 'first', got {mode!r}")
    return mode


# ---------------------------------------------------------------------------
# report-pair sweeps: one agent varies her report against fixed opponents
# ---------------------------------------------------------------------------


def _strict_dominance_rank(
    winner, loser, pref: Preference
) -> Optional[tuple[int, Fraction, Fraction]]:
    """First prefix where ``winner`` strictly exceeds ``loser`` (both known
    to satisfy weak dominance of winner over loser)."""
    lhs = ZERO
    rhs = ZERO
    for rank, a in enumerate(pref, start=1):
        lhs += winner[a]
        rhs += loser[a]
        if lhs > rhs:
            return rank, lhs, rhs
    return None


def _check_cell(
    mech: Mechanism,
    agent: int,
    opponents: tuple[Preference, ...],
    prefs: list[Preference],
    axioms: tuple[str, ...],
    first_only: bool,
) -> tuple[dict[str, list[ViolationReport]], int, int]:
    """Run the requested pair axioms for one (agent, opponents) cell."""
    rows = {}
    for report in prefs:
        profile = insert_report(opponents, agent, report)
        rows[report] = mech.assignment(profile)[agent]
    found: dict[str, list[ViolationReport]] = {ax: [] for ax in axioms}
    comparisons = 0

    def want(ax: str) -> bool:
        return ax in found and not (first_only and found[ax])

    if "sp" in found or "weak-sp" in found:
        for truth in prefs:
            base = insert_report(opponents, agent, truth)
            for dev in prefs:
                if dev == truth:
                    continue
                if want("sp"):
                    comparisons += 1
                    fail = fosd_failure(rows[truth], rows[dev], truth)
                    if fail is not None:
                        rank, lhs, rhs = fail
                        found["sp"].append(ViolationReport(
                            axiom="sp", agent=agent, profile=base, deviation=dev,
                            rank=rank, lhs=lhs, rhs=rhs, relation="<",
                            detail="truthful prefix falls below deviation prefix",
                        ))
                if want("weak-sp"):
                    comparisons += 1
                    if rows[dev] != rows[truth] and fosd(rows[dev], rows[truth], truth):
                        rank, lhs, rhs = _strict_dominance_rank(
                            rows[dev], rows[truth], truth
                        )
                        found["weak-sp"].append(ViolationReport(
                            axiom="weak-sp", agent=agent, profile=base, deviation=dev,
                            rank=rank, lhs=lhs, rhs=rhs, relation=">",
                            detail="deviation strictly dominates truth-telling",
                        ))

    if "em" in found or "ui" in found or "li" in found:
        for base_pref in prefs:
            base = insert_report(opponents, agent, base_pref)
            for swapped, info in adjacent_swaps(base_pref):
                if swapped < base_pref:
                    continue  # each unordered pair once; conditions are symmetric
                old = rows[base_pref]
                new = rows[swapped]
                if want("em"):
                    comparisons += 2
                    if new[info.raised] < old[info.raised]:
                        found["em"].append(ViolationReport(
                            axiom="em", agent=agent, profile=base, deviation=swapped,
                            swap=info, objects=(info.raised,),
                            lhs=new[info.raised], rhs=old[info.raised], relation="<",
                            detail="share of the raised object decreased",
                        ))
                    if new[info.lowered] > old[info.lowered]:
                        found["em"].append(ViolationReport(
                            axiom="em", agent=agent, profile=base, deviation=swapped,
                            swap=info, objects=(info.lowered,),
                            lhs=new[info.lowered], rhs=old[info.lowered], relation=">",
                            detail="share of the lowered object increased",
                        ))
                if want("ui"):
                    for x in base_pref[: info.position - 1]:
                        comparisons += 1
                        if new[x] != old[x]:
                            found["ui"].append(ViolationReport(
                                axiom="ui", agent=agent, profile=base,
                                deviation=swapped, swap=info, objects=(x,),
                                lhs=new[x], rhs=old[x], relation="!=",
                                detail="share above the swapped pair moved",
                            ))
                if want("li"):
                    for x in base_pref[info.position + 1:]:
                        comparisons += 1
                        if new[x] != old[x]:
                            found["li"].append(ViolationReport(
                                axiom="li", agent=agent, profile=base,
                                deviation=swapped, swap=info, objects=(x,),
                                lhs=new[x], rhs=old[x], relation="!=",
                                detail="share below the swapped pair moved",
                            ))
    return found, len(prefs), comparisons


def _pair_chunk_worker(args) -> tuple[dict[str, list[ViolationReport]], int, int]:
    mech, agent, start, stop, axioms, max_n = args
    prefs = enumerate_preferences(mech.instance, max_n=max_n)
    n = mech.instance.n
    merged: dict[str, list[ViolationReport]] = {ax: [] for ax in axioms}
    evaluations = 0
    comparisons = 0
    cells = itertools.islice(
        itertools.product(prefs, repeat=n - 1), start, stop
    )
    for opponents in cells:
        found, ev, cmps = _check_cell(mech, agent, opponents, prefs, axioms, False)
        for ax in axioms:
            merged[ax].extend(found[ax])
        evaluations += ev
        comparisons += cmps
    return merged, evaluations, comparisons


def run_pair_sweep(
    mech: Mechanism,
    axioms: Iterable[str],
    *,
    mode: Optional[str] = None,
    jobs: int = 1,
    max_n: Optional[int] = None,
) -> dict[str, CheckOutcome]:
    """Sweep several report-pair axioms in one pass over the domain.

    Bundling axioms shares the mechanism evaluations (the dominant cost),
    which is how the large-n monotonicity/invariance certifications stay
    affordable.
    """
    instance = mech.instance
    axioms = tuple(axioms)
    for ax in axioms:
        if ax not in PAIR_AXIOMS:
            raise ValueError(f"unknown pair axiom {ax!r}")
    _check_sweep_cap(instance.n, max_n)
    n = instance.n
    mode = _resolve_mode(mode, n)
    prefs = enumerate_preferences(instance, max_n=max_n)
    cell_count = len(prefs) ** (n - 1)

    merged: dict[str, list[ViolationReport]] = {ax: [] for ax in axioms}
    evaluations = 0
    comparisons = 0

    if mode == "first":
        # deterministic early stop in enumeration order; no parallelism
        done = False
        for agent in instance.agents:
            for opponents in itertools.product(prefs, repeat=n - 1):
                active = tuple(ax for ax in axioms if not merged[ax])
                found, ev, cmps = _check_cell(
                    mech, agent, opponents, prefs, active, True
                )
                evaluations += ev
                comparisons += cmps
                for ax in active:
                    if found[ax]:
                        merged[ax] = found[ax][:1]
                if all(merged[ax] for ax in axioms):
                    done = True
                    break
            if done:
                break
    elif jobs <= 1:
        for agent in instance.agents:
            for opponents in itertools.product(prefs, repeat=n - 1):
                found, ev, cmps = _check_cell(
                    mech, agent, opponents, prefs, axioms, False
                )
                evaluations += ev
                comparisons += cmps
                for ax in axioms:
                    merged[ax].extend(found[ax])
    else:
        chunk = max(1, min(2048, cell_count // (jobs * 8) or 1))
        tasks = [
            (mech, agent, start, min(start + chunk, cell_count), axioms, max_n)
            for agent in instance.agents
            for start in range(0, cell_count, chunk)
        ]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for found, ev, cmps in pool.map(_pair_chunk_worker, tasks, chunksize=1):
                evaluations += ev
                comparisons += cmps
                for ax in axioms:
                    merged[ax].extend(found[ax])

    return {
        ax: CheckOutcome(
            axiom=ax,
            satisfied=not merged[ax],
            violations=tuple(merged[ax]),
            profiles_checked=evaluations,
            comparisons=comparisons,
        )
        for ax in axioms
    }


def _single(mech, axiom, mode, jobs, max_n) -> CheckOutcome:
    return run_pair_sweep(mech, (axiom,), mode=mode, jobs=jobs, max_n=max_n)[axiom]


def check_strategy_proofness(mech: Mechanism, *, mode=None, jobs=1, max_n=None):
    """Truth-telling must FOSD every deviation, for every opponent profile."""
    return _single(mech, "sp", mode, jobs, max_n)


def check_weak_strategy_proofness(mech: Mechanism, *, mode=None, jobs=1, max_n=None):
    """No deviation may strictly FOSD truth-telling."""
    return _single(mech, "weak-sp", mode, jobs, max_n)


def check_elementary_monotonicity(mech: Mechanism, *, mode=None, jobs=1, max_n=None):
    """Raising an object one rank weakly raises its share and weakly lowers
    the displaced object's share."""
    return _single(mech, "em", mode, jobs, max_n)


def check_upper_invariance(mech: Mechanism, *, mode=None, jobs=1, max_n=None):
    """An adjacent swap leaves shares of objects above the pair unchanged."""
    return _single(mech, "ui", mode, jobs, max_n)


def check_lower_invariance(mech: Mechanism, *, mode=None, jobs=1, max_n=None):
    """An adjacent swap leaves shares of objects below the pair unchanged."""
    return _single(mech, "li", mode, jobs, max_n)


# ---------------------------------------------------------------------------
# whole-profile sweeps
# ---------------------------------------------------------------------------


def check_neutrality(
    mech: Mechanism, *, mode: Optional[str] = None, max_n: Optional[int] = None
) -> CheckOutcome:
    """Relabeling objects must relabel output shares: for every profile and
    every object permutation, the share of ``a`` at the original profile
    equals the share of the image of ``a`` at the relabeled profile.

    Profiles are grouped into relabeling orbits so each assignment is
    evaluated once.
    """
    instance = mech.instance
    _check_sweep_cap(instance.n, max_n)
    n = instance.n
    mode = _resolve_mode(mode, n)
    sigmas = [tuple(s) for s in itertools.permutations(range(n))]
    violations: list[ViolationReport] = []
    evaluations = 0
    comparisons = 0
    for profile in enumerate_profiles(instance, max_n=max_n):
        images = {
            sigma: apply_permutation_profile(profile, sigma) for sigma in sigmas
        }
        if min(images.values()) < profile:
            continue  # handled at the orbit's lexicographic minimum
        table = {}
        for image in images.values():
            if image not in table:
                table[image] = mech.assignment(image)
                evaluations += 1
        members = sorted(table)
        for base in members:
            out = table[base]
            for sigma in sigmas:
                relabeled = table[apply_permutation_profile(base, sigma)]
                for i in range(n):
                    for a in range(n):
                        comparisons += 1
                        if out[i][a] != relabeled[i][sigma[a]]:
                            violations.append(ViolationReport(
                                axiom="neutral", agent=i, profile=base,
                                sigma=sigma, objects=(a,),
                                lhs=out[i][a], rhs=relabeled[i][sigma[a]],
                                relation="!=",
                                detail="share does not follow the relabeling",
                            ))
                            if mode == "first":
                                return CheckOutcome(
                                    axiom="neutral", satisfied=False,
                                    violations=tuple(violations),
                                    profiles_checked=evaluations,
                                    comparisons=comparisons,
                                )
    return CheckOutcome(
        axiom="neutral", satisfied=not violations, violations=tuple(violations),
        profiles_checked=evaluations, comparisons=comparisons,
    )


def check_equal_treatment_of_equals(
    mech: Mechanism, *, mode: Optional[str] = None, max_n: Optional[int] = None
) -> CheckOutcome:
    """Agents reporting identical preferences receive identical rows."""
    instance = mech.instance
    _check_sweep_cap(instance.n, max_n)
    mode = _resolve_mode(mode, instance.n)
    violations: list[ViolationReport] = []
    evaluations = 0
    comparisons = 0
    for profile in enumerate_profiles(instance, max_n=max_n):
        out = mech.assignment(profile)
        evaluations += 1
        for i in range(instance.n):
            for j in range(i + 1, instance.n):
                if profile[i] != profile[j]:
                    continue
                comparisons += 1
                if out[i] != out[j]:
                    a = next(x for x in range(instance.n) if out[i][x] != out[j][x])
                    violations.append(ViolationReport(
                        axiom="ete", agent=i, agent2=j, profile=profile,
                        objects=(a,), lhs=out[i][a], rhs=out[j][a], relation="!=",
                        detail="equal reports received unequal rows",
                    ))
                    if mode == "first":
                        return CheckOutcome(
                            axiom="ete", satisfied=False,
                            violations=tuple(violations),
                            profiles_checked=evaluations, comparisons=comparisons,
                        )
    return CheckOutcome(
        axiom="ete", satisfied=not violations, violations=tuple(violations),
        profiles_checked=evaluations, comparisons=comparisons,
    )


# ---------------------------------------------------------------------------
# efficiency: pointwise operations and their mechanism sweeps
# ---------------------------------------------------------------------------


def trade_cycle(assignment: AssignmentMatrix, profile: Profile) -> Optional[tuple[int, ...]]:
    """Cycle of the object relation "some agent prefers x to y while holding
    a positive share of y", or None when the relation is acyclic.

    Acyclicity of this relation characterizes ordinal efficiency, giving a
    cheap production check; the LP oracle stays available as an independent
    second route.
    """
    n = len(profile)
    edge = [[False] * n for _ in range(n)]
    for i in range(n):
        pref = profile[i]
        holds = [a for a in range(n) if assignment[i][a] > 0]
        for b in holds:
            for a in pref[: pref.index(b)]:
                edge[a][b] = True
    color = [0] * n
    stack: list[int] = []

    def dfs(x: int) -> Optional[tuple[int, ...]]:
        color[x] = 1
        stack.append(x)
        for y in range(n):
            if edge[x][y]:
                if color[y] == 1:
                    return tuple(stack[stack.index(y):])
                if color[y] == 0:
                    found = dfs(y)
                    if found is not None:
                        return found
        stack.pop()
        color[x] = 2
        return None

    for x in range(n):
        if color[x] == 0:
            cycle = dfs(x)
            if cycle is not None:
                return cycle
    return None


def check_ordinal_efficiency(
    assignment: AssignmentMatrix, profile: Profile
) -> tuple[bool, Optional[tuple[int, ...]]]:
    """(efficient?, witness object cycle when not)."""
    cycle = trade_cycle(assignment, profile)
    return cycle is None, cycle


def lp_dominance_oracle(
    assignment: AssignmentMatrix, profile: Profile, *, max_n: Optional[int] = None
) -> Optional[AssignmentMatrix]:
    """Exact-LP search for an assignment dominating ``assignment``.

    Variables are candidate shares M[i][a] >= 0 with all row and column
    sums fixed to 1 and, for every agent and every prefix of her ranking,
    the candidate's cumulative share at least the given assignment's.  The
    objective maximizes the total cumulative surplus, so the optimum is
    zero exactly when no agent's prefix can be improved without hurting
    another's, i.e. when the assignment is ordinally efficient; otherwise
    the optimal matrix is returned as a dominating witness.
    """
    checked = validate_assignment(assignment)
    n = len(profile)
    _check_sweep_cap(n, max_n if max_n is not None else 6)

    def var(i: int, a: int) -> int:
        return i * n + a

    objective = [ZERO] * (n * n)
    for i in range(n):
        for rank, a in enumerate(profile[i], start=1):
            objective[var(i, a)] = Fraction(n - rank)
    base_value = sum(
        objective[var(i, a)] * checked[i][a] for i in range(n) for a in range(n)
    )

    eq = []
    for i in range(n):
        row = [ZERO] * (n * n)
        for a in range(n):
            row[var(i, a)] = Fraction(1)
        eq.append((row, Fraction(1)))
    for a in range(n):
        row = [ZERO] * (n * n)
        for i in range(n):
            row[var(i, a)] = Fraction(1)
        eq.append((row, Fraction(1)))

    ge = []
    for i in range(n):
        cum = ZERO
        row = [ZERO] * (n * n)
        for a in profile[i][: n - 1]:
            row = row[:]
            row[var(i, a)] = Fraction(1)
            cum += checked[i][a]
            ge.append((row, cum))

    result = solve_max(objective, eq, ge)
    if result.status != "optimal":
        raise AssertionError(f"dominance program reported {result.status}")
    if result.value < base_value:
        raise AssertionError("dominance program lost the feasible base point")
    if result.value == base_value:
        return None
    witness = validate_assignment(
        [[result.solution[var(i, a)] for a in range(n)] for i in range(n)]
    )
    if witness == checked:
        raise AssertionError("positive surplus but unchanged assignment")
    return witness


def check_ex_post_efficiency(assignment: AssignmentMatrix, profile: Profile) -> bool:
    """All deterministic components of a decomposition are Pareto efficient."""
    return ex_post_inefficiency_witness(assignment, profile) is None


def ex_post_inefficiency_witness(
    assignment: AssignmentMatrix, profile: Profile
) -> Optional[tuple[Fraction, tuple[int, ...], tuple[int, ...]]]:
    """(weight, component, agent cycle) for the first Pareto-inefficient
    component, or None."""
    for weight, perm in birkhoff_decompose(assignment).terms:
        cycle = _improvement_cycle(perm, profile)
        if cycle is not None:
            return weight, perm, tuple(cycle)
    return None


def check_mechanism_ordinal_efficiency(
    mech: Mechanism, *, mode: Optional[str] = None, max_n: Optional[int] = None
) -> CheckOutcome:
    """Ordinal efficiency of every output over the full profile domain."""
    instance = mech.instance
    _check_sweep_cap(instance.n, max_n)
    mode = _resolve_mode(mode, instance.n)
    violations: list[ViolationReport] = []
    evaluations = 0
    for profile in enumerate_profiles(instance, max_n=max_n):
        out = mech.assignment(profile)
        evaluations += 1
        cycle = trade_cycle(out, profile)
        if cycle is not None:
            violations.append(ViolationReport(
                axiom="oe", profile=profile, objects=cycle,
                detail="objects trade along the cycle",
            ))
            if mode == "first":
                break
    return CheckOutcome(
        axiom="oe", satisfied=not violations, violations=tuple(violations),
        profiles_checked=evaluations, comparisons=evaluations,
    )


def check_mechanism_ex_post_efficiency(
    mech: Mechanism, *, mode: Optional[str] = None, max_n: Optional[int] = None
) -> CheckOutcome:
    """Ex-post efficiency of every output over the full profile domain."""
    instance = mech.instance
    _check_sweep_cap(instance.n, max_n)
    mode = _resolve_mode(mode, instance.n)
    violations: list[ViolationReport] = []
    evaluations = 0
    for profile in enumerate_profiles(instance, max_n=max_n):
        out = mech.assignment(profile)
        evaluations += 1
        witness = ex_post_inefficiency_witness(out, profile)
        if witness is not None:
            weight, perm, cycle = witness
            violations.append(ViolationReport(
                axiom="ex-post", profile=profile, component=perm,
                objects=tuple(perm[i] for i in cycle),
                lhs=weight, rhs=ZERO, relation=">",
                detail="component with positive weight admits a trading cycle "
                       f"among agents {','.join(str(i + 1) for i in cycle)}",
            ))
            if mode == "first":
                break
    return CheckOutcome(
        axiom="ex-post", satisfied=not violations, violations=tuple(violations),
        profiles_checked=evaluations, comparisons=evaluations,
    )


def run_axiom_check(
    mech: Mechanism,
    axiom: str,
    *,
    mode: Optional[str] = None,
    jobs: int = 1,
    max_n: Optional[int] = None,
) -> CheckOutcome:
    """Dispatch one named axiom sweep (the CLI surface)."""
    if axiom in PAIR_AXIOMS:
        return _single(mech, axiom, mode, jobs, max_n)
    if axiom == "neutral":
        return check_neutrality(mech, mode=mode, max_n=max_n)
    if axiom == "ete":
        return check_equal_treatment_of_equals(mech, mode=mode, max_n=max_n)
    if axiom == "oe":
        return check_mechanism_ordinal_efficiency(mech, mode=mode, max_n=max_n)
    if axiom == "ex-post":
        return check_mechanism_ex_post_efficiency(mech, mode=mode, max_n=max_n)
    raise ValueError(f"unknown axiom {axiom!r}")


# ---------------------------------------------------------------------------
# witness replay
# ---------------------------------------------------------------------------


def reverify_violation(mech: Mechanism, report: ViolationReport) -> bool:
    """Recompute a report's values from the mechanism and confirm they
    reproduce the recorded witness exactly."""
    ax = report.axiom
    if ax in ("sp", "weak-sp"):
        agent = report.agent
        truth = report.profile[agent]
        truth_row = mech.assignment(report.profile)[agent]
        dev_profile = insert_report(
            report.profile[:agent] + report.profile[agent + 1:], agent, report.deviation
        )
        dev_row = mech.assignment(dev_profile)[agent]
        if ax == "sp":
            fail = fosd_failure(truth_row, dev_row, truth)
            return fail == (report.rank, report.lhs, report.rhs)
        if dev_row == truth_row or not fosd(dev_row, truth_row, truth):
            return False
        return _strict_dominance_rank(dev_row, truth_row, truth) == (
            report.rank, report.lhs, report.rhs
        )
    if ax in ("em", "ui", "li"):
        agent = report.agent
        old = mech.assignment(report.profile)[agent]
        dev_profile = insert_report(
            report.profile[:agent] + report.profile[agent + 1:], agent, report.deviation
        )
        new = mech.assignment(dev_profile)[agent]
        x = report.objects[0]
        if (new[x], old[x]) != (report.lhs, report.rhs):
            return False
        if ax == "em":
            return (new[x] < old[x]) if x == report.swap.raised else (new[x] > old[x])
        return new[x] != old[x]
    if ax == "neutral":
        out = mech.assignment(report.profile)
        relabeled = mech.assignment(
            apply_permutation_profile(report.profile, report.sigma)
        )
        i, a = report.agent, report.objects[0]
        lhs = out[i][a]
        rhs = relabeled[i][report.sigma[a]]
        return (lhs, rhs) == (report.lhs, report.rhs) and lhs != rhs
    if ax == "ete":
        out = mech.assignment(report.profile)
        i, j, a = report.agent, report.agent2, report.objects[0]
        if report.profile[i] != report.profile[j]:
            return False
        return (out[i][a], out[j][a]) == (report.lhs, report.rhs) and out[i][a] != out[j][a]
    if ax == "oe":
        out = mech.assignment(report.profile)
        cyc = report.objects
        n = len(report.profile)
        for idx, a in enumerate(cyc):
            b = cyc[(idx + 1) % len(cyc)]
            if not any(
                prefers(report.profile[i], a, b) and out[i][b] > 0 for i in range(n)
            ):
                return False
        return True
    if ax == "ex-post":
        out = mech.assignment(report.profile)
        terms = dict((perm, w) for w, perm in birkhoff_decompose(out).terms)
        if terms.get(report.component) != report.lhs:
            return False
        return _improvement_cycle(report.component, report.profile) is not None
    raise ValueError(f"cannot replay axiom {ax!r}")

"""Exact linear programming over the rationals.

A compact two-phase tableau simplex with Bland's anti-cycling rule, for
the small feasibility/witness programs this package needs.  All pivots are
Fraction arithmetic with no presolve and no tolerances, so "optimum equals
zero" is a statement, not an estimate.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .core import ZERO

Row = Sequence[Fraction]


class UnboundedError(RuntimeError):
    """The objective can be pushed to +infinity over the feasible set."""


@dataclass(frozen=True)
class LpResult:
    status: str  # "optimal" or "infeasible"
    value: Optional[Fraction]
    solution: Optional[tuple[Fraction, ...]]


def _pivot(tableau: list[list[Fraction]], basis: list[int], row: int, col: int) -> None:
    piv = tableau[row][col]
    tableau[row] = [x / piv for x in tableau[row]]
    pivot_row = tableau[row]
    for r, current in enumerate(tableau):
        if r == row:
            continue
        factor = current[col]
        if factor != 0:
            tableau[r] = [a - factor * b for a, b in zip(current, pivot_row)]
    basis[row] = col


def _canonicalize(z: list[Fraction], tableau: list[list[Fraction]], basis: list[int]) -> None:
    for r, col in enumerate(basis):
        factor = z[col]
        if factor != 0:
            row = tableau[r]
            z[:] = [a - factor * b for a, b in zip(z, row)]


def _run(z: list[Fraction], tableau: list[list[Fraction]], basis: list[int],
         ncols: int) -> None:
    """Maximize until no reduced cost is negative (Bland's rule)."""
    while True:
        enter = -1
        for j in range(ncols):
            if z[j] < 0:
                enter = j
                break
        if enter < 0:
            return
        leave = -1
        best: Optional[Fraction] = None
        for r, row in enumerate(tableau):
            a = row[enter]
            if a > 0:
                ratio = row[-1] / a
                if best is None or ratio < best or (
                    ratio == best and basis[r] < basis[leave]
                ):
                    best = ratio
                    leave = r
        if leave < 0:
            raise UnboundedError(f"column {enter} is unbounded")
        _pivot(tableau, basis, leave, enter)
        z_factor = z[enter]
        if z_factor != 0:
            pivot_row = tableau[leave]
            z[:] = [a - z_factor * b for a, b in zip(z, pivot_row)]


def solve_max(
    objective: Row,
    eq: Sequence[tuple[Row, Fraction]] = (),
    ge: Sequence[tuple[Row, Fraction]] = (),
) -> LpResult:
    """Maximize ``objective . x`` s.t. equalities, inequalities and x >= 0.

    ``eq`` rows read ``coeffs . x == rhs`` and ``ge`` rows read
    ``coeffs . x >= rhs``; every structural variable is nonnegative.
    Returns the exact optimum and one optimal vertex.
    """
    nvars = len(objective)
    nsurplus = len(ge)
    nstruct = nvars + nsurplus
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    for coeffs, b in eq:
        if len(coeffs) != nvars:
            raise ValueError("equality row length mismatch")
        rows.append([Fraction(x) for x in coeffs] + [ZERO] * nsurplus)
        rhs.append(Fraction(b))
    for k, (coeffs, b) in enumerate(ge):
        if len(coeffs) != nvars:
            raise ValueError("inequality row length mismatch")
        row = [Fraction(x) for x in coeffs] + [ZERO] * nsurplus
        row[nvars + k] = Fraction(-1)
        rows.append(row)
        rhs.append(Fraction(b))
    m = len(rows)
    for r in range(m):
        if rhs[r] < 0:
            rows[r] = [-x for x in rows[r]]
            rhs[r] = -rhs[r]

    ncols = nstruct + m  # structural + artificial
    tableau = []
    for r in range(m):
        art = [ZERO] * m
        art[r] = Fraction(1)
        tableau.append(rows[r] + art + [rhs[r]])
    basis = [nstruct + r for r in range(m)]

    # phase 1: drive the artificial variables to zero
    z1 = [ZERO] * nstruct + [Fraction(1)] * m + [ZERO]
    _canonicalize(z1, tableau, basis)
    _run(z1, tableau, basis, ncols)
    if z1[-1] != 0:
        return LpResult("infeasible", None, None)

    # remove leftover basic artificials (degenerate rows) before phase 2
    r = 0
    while r < len(tableau):
        if basis[r] >= nstruct:
            pivot_col = next(
                (j for j in range(nstruct) if tableau[r][j] != 0), None
            )
            if pivot_col is None:
                del tableau[r]
                del basis[r]
                continue
            _pivot(tableau, basis, r, pivot_col)
        r += 1

    # phase 2 on structural columns only
    tableau = [row[:nstruct] + [row[-1]] for row in tableau]
    z2 = [-Fraction(c) for c in objective] + [ZERO] * nsurplus + [ZERO]
    _canonicalize(z2, tableau, basis)
    _run(z2, tableau, basis, nstruct)

    solution = [ZERO] * nvars
    for r, col in enumerate(basis):
        if col < nvars:
            solution[col] = tableau[r][-1]
    return LpResult("optimal", z2[-1], tuple(solution))

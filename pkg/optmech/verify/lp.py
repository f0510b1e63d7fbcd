"""Exact revenue-maximization LP over ex-post allocations, solved with Bland's rule.

The tableau is kept in dictionary form, maximizing z = z0 + c.x_N subject to
x_B = b - A x_N. Rows are sparse dicts so a pivot only touches the rows and
columns that are actually nonzero.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

from ..config import Guards, resolve_guards
from ..errors import StructuralError
from ..model import InterimMechanism, Profile, TypeSpace, Valuation
from ..numerics import ONE, ZERO

logger = logging.getLogger(__name__)

type LPStatus = Literal["optimal", "infeasible", "unbounded"]
type StepResult = Literal["optimal", "unbounded", "go_on"]

_ARTIFICIAL = -1


class SimplexTableau:
    def __init__(self, rows: Sequence[dict[int, Fraction]], b: Sequence[Fraction], c: Sequence[Fraction]) -> None:
        self.m = len(rows)
        self.n = len(c)
        if len(b) != self.m:
            raise StructuralError(f"{self.m} constraint rows but {len(b)} right-hand sides")
        self.A = [{j: a for j, a in row.items() if a} for row in rows]
        self.b = list(b)
        self.c = list(c)
        self.z = ZERO
        self.nb_vars = list(range(self.n))
        self.b_vars = list(range(self.n, self.n + self.m))
        self.pivots = 0

    def pivot(self, i: int, j: int) -> None:
        """Exchange basic row i with nonbasic column j."""
        row = self.A[i]
        piv = row[j]
        delta = self.c[j] / piv
        if delta:
            for col, a in row.items():
                if col != j:
                    self.c[col] -= delta * a
            self.c[j] = -delta
        self.z += delta * self.b[i]

        new_row = {col: a / piv for col, a in row.items() if col != j}
        new_row[j] = 1 / piv
        self.b[i] /= piv
        self.A[i] = new_row
        for k in range(self.m):
            if k == i:
                continue
            other = self.A[k]
            f = other.get(j)
            if not f:
                continue
            for col, a in new_row.items():
                if col == j:
                    continue
                value = other.get(col, ZERO) - f * a
                if value:
                    other[col] = value
                else:
                    other.pop(col, None)
            other[j] = -f / piv
            self.b[k] -= f * self.b[i]

        self.nb_vars[j], self.b_vars[i] = self.b_vars[i], self.nb_vars[j]
        self.pivots += 1

    def bland_primal_step(self) -> StepResult:
        try:
            _, j = min((self.nb_vars[j], j) for j in range(self.n) if self.c[j] > 0)
        except ValueError:
            return "optimal"
        try:
            _, _, i = min(
                (self.b[i] / self.A[i][j], self.b_vars[i], i) for i in range(self.m) if self.A[i].get(j, ZERO) > 0
            )
        except ValueError:
            return "unbounded"
        self.pivot(i, j)
        return "go_on"

    def bland_primal(self) -> StepResult:
        while True:
            result = self.bland_primal_step()
            if result != "go_on":
                return result

    def _first_phase(self) -> bool:
        """Drive the basis feasible through an artificial variable; False when the LP is infeasible."""
        original = self.c
        j0 = self.n
        self.n += 1
        self.nb_vars.append(_ARTIFICIAL)
        for row in self.A:
            row[j0] = -ONE
        self.c = [ZERO] * (self.n - 1) + [-ONE]
        worst = min(range(self.m), key=lambda i: (self.b[i], self.b_vars[i]))
        self.pivot(worst, j0)
        self.bland_primal()
        if self.z < 0:
            return False
        if _ARTIFICIAL in self.b_vars:
            i = self.b_vars.index(_ARTIFICIAL)
            candidates = [(self.nb_vars[j], j) for j in self.A[i]]
            if candidates:
                self.pivot(i, min(candidates)[1])
            else:
                # redundant constraint row
                del self.A[i], self.b[i], self.b_vars[i]
                self.m -= 1
        j0 = self.nb_vars.index(_ARTIFICIAL)
        for row in self.A:
            row.pop(j0, None)
            if j0 != self.n - 1 and self.n - 1 in row:
                row[j0] = row.pop(self.n - 1)
        self.nb_vars[j0] = self.nb_vars[-1]
        self.nb_vars.pop()
        self.n -= 1
        self._restore_objective(original)
        return True

    def _restore_objective(self, c: Sequence[Fraction]) -> None:
        """Express the original objective (indexed by variable label) over the current nonbasics."""
        cost = dict(enumerate(c))
        self.c = [cost.get(label, ZERO) for label in self.nb_vars]
        self.z = ZERO
        for i, label in enumerate(self.b_vars):
            weight = cost.get(label, ZERO)
            if not weight:
                continue
            self.z += weight * self.b[i]
            for j, a in self.A[i].items():
                self.c[j] -= weight * a

    def solve(self) -> LPStatus:
        if any(rhs < 0 for rhs in self.b):
            logger.debug("negative right-hand side, running phase one")
            if not self._first_phase():
                return "infeasible"
        return "optimal" if self.bland_primal() == "optimal" else "unbounded"

    def values(self) -> dict[int, Fraction]:
        """Values of the structural variables 0..n-1 at the current basis."""
        out = {label: ZERO for label in self.nb_vars if label != _ARTIFICIAL}
        out.update(zip(self.b_vars, self.b, strict=True))
        return out


@dataclass(frozen=True)
class LPSolution:
    objective: Fraction
    allocation: dict[tuple[Profile, int, int], Fraction]
    payments: dict[tuple[int, Valuation], Fraction]
    status: LPStatus
    pivots: int = 0

    def interim(self, typespace: TypeSpace) -> InterimMechanism:
        """Interim tables of the optimal solution, for running the incentive checks on it."""
        pi: list[dict[Valuation, tuple[Fraction, ...]]] = []
        for i, agent in enumerate(typespace.agents):
            table: dict[Valuation, list[Fraction]] = {v: [ZERO] * typespace.m for v in agent.types}
            for profile in typespace.profiles():
                weight = _opponent_weight(typespace, profile, i)
                for j in range(typespace.m):
                    table[profile[i]][j] += weight * self.allocation.get((profile, i, j), ZERO)
            pi.append({v: tuple(row) for v, row in table.items()})
        pay = tuple({v: self.payments[(i, v)] for v in agent.types} for i, agent in enumerate(typespace.agents))
        return InterimMechanism(pi=tuple(pi), pay=pay, source="lp")


def _opponent_weight(typespace: TypeSpace, profile: Profile, i: int) -> Fraction:
    weight = ONE
    for k, (agent, v) in enumerate(zip(typespace.agents, profile, strict=True)):
        if k != i:
            weight *= agent.prob[v]
    return weight


def lp_variable_count(typespace: TypeSpace) -> int:
    return typespace.profile_count * typespace.n * typespace.m + sum(len(agent) for agent in typespace.agents)


def lp_optimal_revenue(typespace: TypeSpace, guards: Guards | None = None) -> LPSolution:
    """Maximize expected payments over BIC, BIR and per-profile supply constraints."""
    resolve_guards(guards).check_lp(lp_variable_count(typespace))
    n, m = typespace.n, typespace.m
    profiles = list(typespace.profiles())

    x_index: dict[tuple[Profile, int, int], int] = {}
    for profile in profiles:
        for i in range(n):
            for j in range(m):
                x_index[(profile, i, j)] = len(x_index)
    # payments are free: p = plus - minus
    pay_index: dict[tuple[int, Valuation], int] = {}
    for i, agent in enumerate(typespace.agents):
        for v in agent.types:
            pay_index[(i, v)] = len(x_index) + 2 * len(pay_index)
    size = len(x_index) + 2 * len(pay_index)

    c = [ZERO] * size
    for (i, v), col in pay_index.items():
        c[col] = typespace.agents[i].prob[v]
        c[col + 1] = -typespace.agents[i].prob[v]

    # E[value of v_i from reporting r] as a linear form in x, per (agent, report)
    reports: dict[tuple[int, Valuation], list[tuple[Profile, Fraction]]] = {}
    for profile in profiles:
        for i in range(n):
            reports.setdefault((i, profile[i]), []).append((profile, _opponent_weight(typespace, profile, i)))

    def expected_value(i: int, true: Valuation, report: Valuation, sign: Fraction, row: dict[int, Fraction]) -> None:
        for profile, weight in reports[(i, report)]:
            for j in range(m):
                if true[j]:
                    col = x_index[(profile, i, j)]
                    row[col] = row.get(col, ZERO) + sign * weight * true[j]

    def payment(i: int, v: Valuation, sign: Fraction, row: dict[int, Fraction]) -> None:
        col = pay_index[(i, v)]
        row[col] = row.get(col, ZERO) + sign
        row[col + 1] = row.get(col + 1, ZERO) - sign

    rows: list[dict[int, Fraction]] = []
    b: list[Fraction] = []
    for i, agent in enumerate(typespace.agents):
        for v in agent.types:
            for report in agent.types:
                if report == v:
                    continue
                # u(v -> report) - u(v -> v) <= 0
                row: dict[int, Fraction] = {}
                expected_value(i, v, report, ONE, row)
                payment(i, report, -ONE, row)
                expected_value(i, v, v, -ONE, row)
                payment(i, v, ONE, row)
                rows.append(row)
                b.append(ZERO)
            row = {}
            expected_value(i, v, v, -ONE, row)
            payment(i, v, ONE, row)
            rows.append(row)
            b.append(ZERO)
    for profile in profiles:
        for j in range(m):
            rows.append({x_index[(profile, i, j)]: ONE for i in range(n)})
            b.append(ONE)

    logger.info("LP: %d variables, %d constraints", size, len(rows))
    tableau = SimplexTableau(rows, b, c)
    status = tableau.solve()
    logger.info("LP %s after %d pivots: objective %s", status, tableau.pivots, tableau.z)
    values = tableau.values()
    allocation = {key: values.get(col, ZERO) for key, col in x_index.items()}
    payments = {key: values.get(col, ZERO) - values.get(col + 1, ZERO) for key, col in pay_index.items()}
    return LPSolution(
        objective=tableau.z,
        allocation=allocation,
        payments=payments,
        status=status,
        pivots=tableau.pivots,
    )

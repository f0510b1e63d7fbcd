"""Pure data transformation from results to pandas DataFrames.

No I/O here, only pandas. Exact values render as "num/den"; the columns listed
in APPROX_COLUMNS also get a float companion so spreadsheets can sort on them.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from fractions import Fraction
from typing import TYPE_CHECKING

import pandas as pd

from .model import InterimMechanism, TypeSpace, format_valuation
from .numerics import format_rational

if TYPE_CHECKING:
    from .duality import OptimalityCertificate
    from .mechanisms.axis1 import Axis1Mechanism
    from .mechanisms.axis2 import Axis2Mechanism
    from .mechanisms.axis3 import RegionCell
    from .verify.crosscheck import CrosscheckReport
    from .verify.lp import LPSolution
    from .verify.simulate import SimulationResult

APPROX_COLUMNS = [
    "Revenue",
    "Payment",
    "Score",
    "Value",
    "Margin",
    "Objective",
    "Exact",
]


def _cell(value: object) -> object:
    return format_rational(value) if isinstance(value, Fraction) else value


def finalize(df: pd.DataFrame) -> pd.DataFrame:
    """Render Fractions as strings, adding "<col> (approx)" next to approximate-able columns."""
    out = pd.DataFrame(index=df.index)
    for col in df.columns:
        series = df[col]
        exact = series.map(lambda v: isinstance(v, Fraction))
        out[col] = series.map(_cell)
        if col in APPROX_COLUMNS and exact.any():
            out[f"{col} (approx)"] = series.map(lambda v: float(v) if isinstance(v, Fraction) else v)
    return out


def render(df: pd.DataFrame, fmt: str) -> str:
    """csv or a plain fixed-width table."""
    df = finalize(df)
    if fmt == "csv":
        return df.to_csv(index=False)
    return df.to_string(index=False) + "\n"


def mechanism_frame(
    mechanism: InterimMechanism, typespace: TypeSpace, agent_labels: Sequence[int] | None = None
) -> pd.DataFrame:
    rows = []
    for k, agent in enumerate(typespace.agents):
        label = agent_labels[k] if agent_labels is not None else k
        for v in agent.types:
            row: dict[str, object] = {"Agent": label, "Type": format_valuation(v), "Prob": agent.prob[v]}
            for j, x in enumerate(mechanism.pi[k][v]):
                row[f"Item {j + 1}"] = x
            row["Payment"] = mechanism.pay[k][v]
            rows.append(row)
    return pd.DataFrame(rows).sort_values("Agent", kind="stable").reset_index(drop=True)


def axis1_frame(mechanism: Axis1Mechanism) -> pd.DataFrame:
    m = mechanism.setting.m
    rows = [
        {
            "k": k,
            "Score": mechanism.f[k],
            "pi(b)": mechanism.pi_b if k > 0 else None,
            "pi(a,k)": mechanism.pi_a.get(k) if k < m else None,
            "Payment": mechanism.payment[k],
            "Sellable": k >= mechanism.kstar,
        }
        for k in range(m + 1)
    ]
    return pd.DataFrame(rows)


def axis2_frame(mechanism: Axis2Mechanism) -> pd.DataFrame:
    rows = []
    for k, table in enumerate(mechanism.tables):
        part = mechanism.partitions[k]
        order = mechanism.setting.order
        pay = mechanism.interim.pay[k]
        b, a = mechanism.setting.values.b, mechanism.setting.values.a
        rows.append(
            {
                "Agent": mechanism.original_index(k),
                "q": mechanism.setting.q[k],
                "Case": mechanism.case[k],
                "S1": _members(part.s1, order),
                "S2": _members(part.s2, order),
                "S3": _members(part.s3, order),
                "S4": _members(part.s4, order),
                "pi(b)": table.high,
                "pi(a|b)": table.low_other_high,
                "pi(a|a)": table.low_both,
                "Payment (b,b)": pay[(b, b)],
                "Payment (a,b)": pay[(a, b)],
                "Payment (a,a)": pay[(a, a)],
            }
        )
    return pd.DataFrame(rows).sort_values("Agent").reset_index(drop=True)


def _members(indices: Iterable[int], order: Sequence[int]) -> str:
    return " ".join(str(i) for i in sorted(order[k] for k in indices))


def slacks_frame(region: str, slacks: Mapping[str, Fraction]) -> pd.DataFrame:
    rows = [{"Region": region, "Test": name, "Margin": value} for name, value in slacks.items()]
    return pd.DataFrame(rows)


def region_map_frame(cells: Iterable[RegionCell]) -> pd.DataFrame:
    return pd.DataFrame([{"p": cell.p, "q": cell.q, "Region": cell.region or "none"} for cell in cells])


def certificate_frame(certificate: OptimalityCertificate) -> pd.DataFrame:
    rows = [
        {"Check": "flow feasible", "Value": certificate.flow_feasible},
        {"Check": "BIC", "Value": certificate.bic_ok},
        {"Check": "BIR", "Value": certificate.bir_ok},
        {"Check": "complementary slackness", "Value": certificate.slackness_ok},
        {"Check": "mechanism revenue", "Value": certificate.mechanism_revenue},
        {"Check": "dual objective", "Value": certificate.dual_objective},
        {"Check": "optimal", "Value": certificate.optimal},
    ]
    return pd.DataFrame(rows)


def lp_frame(solution: LPSolution) -> pd.DataFrame:
    return pd.DataFrame([{"Status": solution.status, "Objective": solution.objective, "Pivots": solution.pivots}])


def simulation_frame(result: SimulationResult, exact: InterimMechanism | None = None) -> pd.DataFrame:
    rows: list[dict[str, object]] = [
        {"Quantity": "revenue", "Agent": None, "Type": None, "Estimate": result.revenue, "SE": result.revenue_se}
    ]
    for (i, v), estimates in result.pi.items():
        for j, estimate in enumerate(estimates):
            row: dict[str, object] = {
                "Quantity": f"pi item {j + 1}",
                "Agent": i,
                "Type": format_valuation(v),
                "Estimate": estimate,
                "SE": result.pi_se[(i, v)][j],
            }
            if exact is not None:
                row["Exact"] = exact.pi[i][v][j]
            rows.append(row)
    return pd.DataFrame(rows)


def crosscheck_frame(report: CrosscheckReport) -> pd.DataFrame:
    rows = [{"Source": name, "Revenue": revenue} for name, revenue in report.revenues.items()]
    df = pd.DataFrame(rows)
    df["Agree"] = report.agree
    return df

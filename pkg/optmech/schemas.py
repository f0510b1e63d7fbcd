"""Versioned JSON documents: settings, mechanisms, flows and certificates.

Every document carries a "schema" tag and is validated with a Draft 2020-12
validator before anything is built from it. Rationals travel as "num/den"
strings; headline quantities also carry a float marked as approximate.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Callable, Iterable, Sequence
from fractions import Fraction
from pathlib import Path
from typing import Any

from jsonschema import Draft202012Validator

from .duality import FlowGraph, OptimalityCertificate
from .errors import InputError, StructuralError
from .model import (
    Axis1Setting,
    Axis2Setting,
    Axis3Setting,
    BundlingSetting,
    InterimMechanism,
    Setting,
    TypeSpace,
    Valuation,
    ValuePair,
    enumerate_types,
)
from .numerics import ZERO, format_rational, to_rational

logger = logging.getLogger(__name__)

SETTING_SCHEMA_ID = "optmech/setting/v1"
MECHANISM_SCHEMA_ID = "optmech/mechanism/v1"
FLOW_SCHEMA_ID = "optmech/flow/v1"
CERT_SCHEMA_ID = "optmech/cert/v1"

RATIONAL: dict[str, Any] = {"type": ["string", "integer"]}
_VALUATION: dict[str, Any] = {"type": "array", "items": RATIONAL, "minItems": 1}
_HEADLINE: dict[str, Any] = {
    "type": "object",
    "properties": {"exact": {"type": "string"}, "approximate": {"type": "number"}},
    "required": ["exact", "approximate"],
    "additionalProperties": False,
}


def _setting_schema(kind: str, fields: dict[str, Any]) -> dict[str, Any]:
    return {
        "type": "object",
        "properties": {"schema": {"const": SETTING_SCHEMA_ID}, "kind": {"const": kind}, **fields},
        "required": ["schema", "kind", *fields],
        "additionalProperties": False,
    }


_COUNT: dict[str, Any] = {"type": "integer", "minimum": 1}

SETTING_SCHEMAS: dict[str, dict[str, Any]] = {
    "axis1": _setting_schema("axis1", {"n": _COUNT, "m": _COUNT, "a": RATIONAL, "b": RATIONAL, "p": RATIONAL}),
    "axis2": _setting_schema(
        "axis2", {"a": RATIONAL, "b": RATIONAL, "q": {"type": "array", "items": RATIONAL, "minItems": 1}}
    ),
    "axis3": _setting_schema("axis3", {"n": _COUNT, "a": RATIONAL, "b": RATIONAL, "p": RATIONAL, "q": RATIONAL}),
    "bundling": _setting_schema(
        "bundling",
        {
            "c": RATIONAL,
            "supports": {"type": "array", "items": _VALUATION, "minItems": 1},
            "probs": {"type": "array", "items": _VALUATION, "minItems": 1},
            "delta_mass": RATIONAL,
        },
    ),
}

_SETTING_HEADER: dict[str, Any] = {
    "type": "object",
    "properties": {"schema": {"const": SETTING_SCHEMA_ID}, "kind": {"enum": list(SETTING_SCHEMAS)}},
    "required": ["schema", "kind"],
}

SUPPORTS_SCHEMA: dict[str, Any] = {
    "type": "object",
    "properties": {
        "supports": SETTING_SCHEMAS["bundling"]["properties"]["supports"],
        "probs": SETTING_SCHEMAS["bundling"]["properties"]["probs"],
        "delta_mass": RATIONAL,
    },
    "required": ["supports", "probs"],
    "additionalProperties": False,
}

MECHANISM_SCHEMA: dict[str, Any] = {
    "type": "object",
    "properties": {
        "schema": {"const": MECHANISM_SCHEMA_ID},
        "setting": {"type": "object"},
        "source": {"type": "string"},
        "revenue": _HEADLINE,
        "summary": {"type": "object"},
        "agents": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "agent": {"type": "integer", "minimum": 0},
                    "types": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "properties": {"type": _VALUATION, "pi": _VALUATION, "payment": RATIONAL},
                            "required": ["type", "pi", "payment"],
                            "additionalProperties": False,
                        },
                    },
                },
                "required": ["agent", "types"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["schema", "setting", "agents"],
    "additionalProperties": False,
}

FLOW_SCHEMA: dict[str, Any] = {
    "type": "object",
    "properties": {
        "schema": {"const": FLOW_SCHEMA_ID},
        "setting": {"type": "object"},
        "flows": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "agent": {"type": "integer", "minimum": 0},
                    "edges": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "properties": {"from": _VALUATION, "to": _VALUATION, "flow": RATIONAL},
                            "required": ["from", "to", "flow"],
                            "additionalProperties": False,
                        },
                    },
                    "sink": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "properties": {"type": _VALUATION, "flow": RATIONAL},
                            "required": ["type", "flow"],
                            "additionalProperties": False,
                        },
                    },
                },
                "required": ["agent", "edges", "sink"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["schema", "setting", "flows"],
    "additionalProperties": False,
}


def validate_document(document: object, schema: dict[str, Any], label: str) -> None:
    """Raise InputError naming the field path of the first validation error."""
    errors = list(Draft202012Validator(schema).iter_errors(document))
    if errors:
        error = errors[0]
        where = ".".join(str(part) for part in error.path) or "<root>"
        raise InputError(f"{label}: {where}: {error.message}")


def headline(value: Fraction) -> dict[str, object]:
    return {"exact": format_rational(value), "approximate": float(value)}


def dumps(document: dict[str, Any]) -> str:
    return json.dumps(document, sort_keys=True, indent=2) + "\n"


def load_json(path: Path) -> Any:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc.msg} at line {exc.lineno})") from exc


def _rationals(values: Iterable[object], field: str) -> tuple[Fraction, ...]:
    return tuple(to_rational(x, f"{field}[{k}]") for k, x in enumerate(values))


def _valuation_doc(v: Sequence[Fraction]) -> list[str]:
    return [format_rational(x) for x in v]


def setting_to_document(setting: Setting) -> dict[str, Any]:
    """Settings are written the way the caller gave them (original agent and item order)."""
    doc: dict[str, Any] = {"schema": SETTING_SCHEMA_ID, "kind": setting.kind}
    match setting:
        case Axis1Setting():
            doc |= {"n": setting.n, "m": setting.m, "p": format_rational(setting.p)}
        case Axis2Setting():
            doc["q"] = [format_rational(q) for q in setting.original_q]
        case Axis3Setting():
            p, q = (setting.q, setting.p) if setting.swapped else (setting.p, setting.q)
            doc |= {"n": setting.n, "p": format_rational(p), "q": format_rational(q)}
        case BundlingSetting():
            return doc | {
                "c": format_rational(setting.c),
                "supports": [_valuation_doc(s) for s in setting.supports],
                "probs": [_valuation_doc(p) for p in setting.probs],
                "delta_mass": format_rational(setting.delta_mass),
            }
    return doc | {"a": format_rational(setting.values.a), "b": format_rational(setting.values.b)}


def setting_from_document(document: object) -> Setting:
    validate_document(document, _SETTING_HEADER, "setting")
    kind = document["kind"]
    validate_document(document, SETTING_SCHEMAS[kind], "setting")
    if kind == "bundling":
        return BundlingSetting(
            c=to_rational(document["c"], "c"),
            supports=tuple(_rationals(s, f"supports[{j}]") for j, s in enumerate(document["supports"])),
            probs=tuple(_rationals(p, f"probs[{j}]") for j, p in enumerate(document["probs"])),
            delta_mass=to_rational(document["delta_mass"], "delta_mass"),
        )
    values = ValuePair(a=to_rational(document["a"], "a"), b=to_rational(document["b"], "b"))
    match kind:
        case "axis1":
            return Axis1Setting(n=document["n"], m=document["m"], values=values, p=to_rational(document["p"], "p"))
        case "axis2":
            return Axis2Setting.build(values, list(_rationals(document["q"], "q")))
        case _:
            return Axis3Setting.build(
                document["n"], values, to_rational(document["p"], "p"), to_rational(document["q"], "q")
            )


def supports_from_document(document: object, c: Fraction) -> BundlingSetting:
    """Bundling setting from a supports file; delta_mass defaults to the smallest lowest-value mass."""
    validate_document(document, SUPPORTS_SCHEMA, "supports")
    supports = tuple(_rationals(s, f"supports[{j}]") for j, s in enumerate(document["supports"]))
    probs = tuple(_rationals(p, f"probs[{j}]") for j, p in enumerate(document["probs"]))
    if "delta_mass" in document:
        delta = to_rational(document["delta_mass"], "delta_mass")
    else:
        delta = min((p[0] for p in probs if p), default=ZERO)
    return BundlingSetting(c=c, supports=supports, probs=probs, delta_mass=delta)


def _original_positions(setting: Setting, n: int) -> list[int]:
    """position -> agent index as the caller numbered them."""
    if isinstance(setting, Axis2Setting):
        return list(setting.order)
    return list(range(n))


def _item_order(setting: Setting) -> tuple[int, ...] | None:
    if isinstance(setting, Axis3Setting) and setting.swapped:
        return (1, 0)
    return None


def mechanism_to_document(
    setting: Setting,
    mechanism: InterimMechanism,
    typespace: TypeSpace,
    summary: dict[str, Any] | None = None,
) -> dict[str, Any]:
    """``mechanism`` and ``typespace`` are in canonical order; the document uses the caller's order."""
    order = _item_order(setting)
    if order is not None:
        mechanism, typespace = mechanism.permuted_items(order), typespace.permuted_items(order)
    positions = _original_positions(setting, mechanism.n)
    agents = []
    for k, agent in enumerate(typespace.agents):
        rows = [
            {
                "type": _valuation_doc(v),
                "pi": _valuation_doc(mechanism.pi[k][v]),
                "payment": format_rational(mechanism.pay[k][v]),
            }
            for v in agent.types
        ]
        agents.append({"agent": positions[k], "types": rows})
    agents.sort(key=lambda entry: entry["agent"])
    doc: dict[str, Any] = {
        "schema": MECHANISM_SCHEMA_ID,
        "setting": setting_to_document(setting),
        "source": mechanism.source,
        "revenue": headline(mechanism.revenue(typespace)),
        "agents": agents,
    }
    if summary:
        doc["summary"] = summary
    return doc


def _valuation(raw: Sequence[object], field: str) -> Valuation:
    return _rationals(raw, field)


def _by_position(setting: Setting, entries: list[dict[str, Any]], n: int, label: str) -> list[dict[str, Any]]:
    by_agent = {entry["agent"]: entry for entry in entries}
    if sorted(by_agent) != list(range(n)):
        raise StructuralError(f"{label}: need exactly one entry per agent 0..{n - 1}")
    return [by_agent[original] for original in _original_positions(setting, n)]


def mechanism_from_document(document: object) -> tuple[Setting, InterimMechanism]:
    """Read a mechanism document back into canonical order, ready for certification."""
    validate_document(document, MECHANISM_SCHEMA, "mechanism")
    setting = setting_from_document(document["setting"])
    typespace = enumerate_types(setting)
    pi: list[dict[Valuation, tuple[Fraction, ...]]] = []
    pay: list[dict[Valuation, Fraction]] = []
    for k, entry in enumerate(_by_position(setting, document["agents"], typespace.n, "mechanism")):
        table: dict[Valuation, tuple[Fraction, ...]] = {}
        payments: dict[Valuation, Fraction] = {}
        for t, row in enumerate(entry["types"]):
            field = f"agents[{k}].types[{t}]"
            v = _valuation(row["type"], f"{field}.type")
            table[v] = _valuation(row["pi"], f"{field}.pi")
            payments[v] = to_rational(row["payment"], f"{field}.payment")
        pi.append(table)
        pay.append(payments)
    mechanism = InterimMechanism(pi=tuple(pi), pay=tuple(pay), source=document.get("source", ""))
    order = _item_order(setting)
    if order is not None:
        mechanism = mechanism.permuted_items(order)
    for k, agent in enumerate(typespace.agents):
        if set(mechanism.pi[k]) != set(agent.types):
            raise StructuralError(f"mechanism: agent {k} does not list exactly the setting's types")
    return setting, mechanism


def flows_to_document(setting: Setting, flows: Sequence[FlowGraph]) -> dict[str, Any]:
    order = _item_order(setting)
    if order is not None:
        flows = [f.permuted_items(order) for f in flows]
    positions = _original_positions(setting, len(flows))
    entries = []
    for flow in flows:
        entries.append(
            {
                "agent": positions[flow.agent],
                "edges": [
                    {"from": _valuation_doc(t), "to": _valuation_doc(h), "flow": format_rational(f)}
                    for (t, h), f in flow.lam.items()
                ],
                "sink": [{"type": _valuation_doc(v), "flow": format_rational(f)} for v, f in flow.mu.items() if f],
            }
        )
    entries.sort(key=lambda entry: entry["agent"])
    return {"schema": FLOW_SCHEMA_ID, "setting": setting_to_document(setting), "flows": entries}


def flows_from_document(document: object) -> tuple[Setting, tuple[FlowGraph, ...]]:
    validate_document(document, FLOW_SCHEMA, "flow")
    setting = setting_from_document(document["setting"])
    typespace = enumerate_types(setting)
    order = _item_order(setting)
    caller = typespace.permuted_items(order) if order is not None else typespace
    flows: list[FlowGraph] = []
    for k, entry in enumerate(_by_position(setting, document["flows"], typespace.n, "flow")):
        agent = caller.agents[k]
        lam = {
            (
                _valuation(edge["from"], f"flows[{k}].edges[{e}].from"),
                _valuation(edge["to"], f"flows[{k}].edges[{e}].to"),
            ): to_rational(edge["flow"], f"flows[{k}].edges[{e}].flow")
            for e, edge in enumerate(entry["edges"])
        }
        mu = {
            _valuation(sink["type"], f"flows[{k}].sink[{s}].type"): to_rational(
                sink["flow"], f"flows[{k}].sink[{s}].flow"
            )
            for s, sink in enumerate(entry["sink"])
        }
        flow = FlowGraph(agent=k, nodes=agent.types, source=dict(agent.prob), lam=lam, mu=mu)
        flows.append(flow.permuted_items(order) if order is not None else flow)
    return setting, tuple(flows)


def _witness(
    witness: object | None, agent_of: Callable[[int], int], item_order: tuple[int, ...] | None
) -> dict[str, Any] | None:
    if witness is None:
        return None
    out: dict[str, Any] = {}
    for name, value in vars(witness).items():
        if name == "agent":
            out[name] = agent_of(value)
        elif isinstance(value, Fraction):
            out[name] = format_rational(value)
        elif isinstance(value, tuple):
            out[name] = _valuation_doc(_reorder(value, item_order))
        else:
            out[name] = value
    return out


def _reorder(v: Valuation, item_order: tuple[int, ...] | None) -> Valuation:
    return v if item_order is None else tuple(v[j] for j in item_order)


def certificate_to_document(certificate: OptimalityCertificate, setting: Setting | None = None) -> dict[str, Any]:
    """Agents and items are reported in the caller's order when the setting is given."""
    order = None if setting is None else _item_order(setting)
    agent_of = setting.order.__getitem__ if isinstance(setting, Axis2Setting) else int
    doc: dict[str, Any] = {
        "schema": CERT_SCHEMA_ID,
        "optimal": certificate.optimal,
        "flow_feasible": certificate.flow_feasible,
        "bic_ok": certificate.bic_ok,
        "bir_ok": certificate.bir_ok,
        "slackness_ok": certificate.slackness_ok,
        "dual_objective": headline(certificate.dual_objective),
        "mechanism_revenue": headline(certificate.mechanism_revenue),
        "bic_witness": _witness(certificate.bic_witness, agent_of, order),
        "bir_witness": _witness(certificate.bir_witness, agent_of, order),
        "infeasible_agent": None if certificate.infeasible_agent is None else agent_of(certificate.infeasible_agent),
        "infeasible_node": (
            None
            if certificate.infeasible_node is None
            else _valuation_doc(_reorder(certificate.infeasible_node, order))
        ),
        "loose_constraints": [
            {
                "agent": agent_of(c.agent),
                "from": _valuation_doc(_reorder(c.tail, order)),
                "to": _valuation_doc(_reorder(c.head, order)),
                "flow": format_rational(c.flow),
                "slack": format_rational(c.slack),
            }
            for c in certificate.loose
        ],
    }
    if setting is not None:
        doc["setting"] = setting_to_document(setting)
    return doc

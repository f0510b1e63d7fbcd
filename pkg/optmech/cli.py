"""Command-line front end.

Every command builds a setting (from flags or a ``--setting`` document), runs
one operation and writes JSON, CSV or a plain table. Exit codes: 0 success,
1 bad input, 2 certification failure or axis mismatch, 3 size-guard refusal.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

import pandas as pd

from . import formatters
from .config import COMMANDS, DEFAULT_MC_TRIALS, DEFAULT_SEED, OUTPUT_FORMATS, Guards, RunConfig
from .duality import OptimalityCertificate, certify
from .errors import CrosscheckMismatch, GuardError, InputError, OptmechError
from .mechanisms.axis1 import Axis1Mechanism, axis1_mechanism, axis1_revenue_formula
from .mechanisms.axis2 import Axis2Mechanism, axis2_mechanism, axis2_product_interim
from .mechanisms.axis3 import Axis3Mechanism, axis3_classify, axis3_mechanism, axis3_region_map, axis3_region_slacks
from .mechanisms.bundling import BundlingMechanism, bundling_mechanism, bundling_score_floor, discretize_uniform
from .model import (
    Axis1Setting,
    Axis2Setting,
    Axis3Setting,
    BundlingSetting,
    Setting,
    ValuePair,
    enumerate_types,
    format_valuation,
)
from .numerics import format_rational, to_rational
from .schemas import (
    certificate_to_document,
    dumps,
    flows_from_document,
    flows_to_document,
    headline,
    load_json,
    mechanism_from_document,
    mechanism_to_document,
    setting_from_document,
    setting_to_document,
    supports_from_document,
)
from .verify.crosscheck import crosscheck_axes
from .verify.lp import lp_optimal_revenue
from .verify.simulate import mc_simulate

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_CERTIFICATION = 2
EXIT_GUARD = 3

type Mechanism = Axis1Mechanism | Axis2Mechanism | Axis3Mechanism | BundlingMechanism


@dataclass
class Outcome:
    """What a command produced: a JSON document, tables for csv/table output, and the exit code."""

    document: dict[str, Any]
    frames: list[pd.DataFrame] = field(default_factory=list)
    code: int = EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--setting", type=Path, help="optmech/setting/v1 JSON document")
    common.add_argument("--format", dest="fmt", choices=OUTPUT_FORMATS, default="json")
    common.add_argument("--output", type=Path, help="write here instead of stdout")
    common.add_argument("--certify", action="store_true", help="attach an optimality certificate")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="optmech", description="Revenue-optimal mechanisms for bi-valued settings.")
    sub = parser.add_subparsers(dest="command", required=True)

    def values(p: argparse.ArgumentParser) -> None:
        p.add_argument("--a", help="low value")
        p.add_argument("--b", help="high value")

    def artifacts(p: argparse.ArgumentParser) -> None:
        p.add_argument("--mechanism-out", type=Path, help="also write the optmech/mechanism/v1 document here")
        p.add_argument("--flow-out", type=Path, help="also write the optmech/flow/v1 document here")

    axis1 = sub.add_parser("axis1", parents=[common], help="n i.i.d. agents, m i.i.d. items")
    axis1.add_argument("--n", type=int)
    axis1.add_argument("--m", type=int)
    values(axis1)
    axis1.add_argument("--p", help="probability an item is worth a")
    artifacts(axis1)

    axis2 = sub.add_parser("axis2", parents=[common], help="agent-specific q_i, two items")
    values(axis2)
    axis2.add_argument("--q", help="comma-separated q_1,...,q_n")
    artifacts(axis2)

    for name, help_text in (("axis3", "two non-identical items"), ("region", "axis-3 region and boundary margins")):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--n", type=int)
        values(p)
        p.add_argument("--p", help="item-1 probability of a")
        p.add_argument("--q", help="item-2 probability of a")
        if name == "axis3":
            p.add_argument("--region-only", action="store_true")
            artifacts(p)

    region_map = sub.add_parser("region-map", parents=[common], help="axis-3 regions over a p >= q grid")
    region_map.add_argument("--n", type=int)
    values(region_map)
    region_map.add_argument("--grid", type=int, default=10)

    bundle = sub.add_parser("bundle", parents=[common], help="single-agent grand bundling")
    bundle.add_argument("action", nargs="?", choices=("build", "discretize"), default="build")
    bundle.add_argument("--c", help="common shift")
    bundle.add_argument("--supports", type=Path, help="JSON file with supports, probs and optional delta_mass")
    bundle.add_argument("--m", type=int, help="items (discretize)")
    bundle.add_argument("--grid", type=int, help="cells per unit (discretize)")
    artifacts(bundle)

    verify = sub.add_parser("verify", parents=[common], help="certify a mechanism against a flow")
    verify.add_argument("--mechanism", type=Path, required=True)
    verify.add_argument("--flow", type=Path, required=True)

    sub.add_parser("lp-opt", parents=[common], help="exact LP optimum for a setting document")

    simulate = sub.add_parser("simulate", parents=[common], help="Monte Carlo check of a setting's mechanism")
    simulate.add_argument("--trials", type=int, default=DEFAULT_MC_TRIALS)
    simulate.add_argument("--seed", type=int, default=DEFAULT_SEED)

    crosscheck = sub.add_parser("crosscheck", parents=[common], help="axis 1, 2 and 3 on the same setting")
    crosscheck.add_argument("--n", type=int)
    values(crosscheck)
    crosscheck.add_argument("--p")
    return parser


def _required(args: argparse.Namespace, name: str) -> object:
    value = getattr(args, name, None)
    if value is None:
        raise InputError(f"--{name.replace('_', '-')}: required unless --setting is given")
    return value


def _rational(args: argparse.Namespace, name: str) -> Fraction:
    return to_rational(_required(args, name), name)


def _values(args: argparse.Namespace) -> ValuePair:
    return ValuePair(a=_rational(args, "a"), b=_rational(args, "b"))


def _setting_from_flags(args: argparse.Namespace) -> Setting | None:
    match args.command:
        case "axis1":
            return Axis1Setting(
                n=_required(args, "n"), m=_required(args, "m"), values=_values(args), p=_rational(args, "p")
            )
        case "axis2":
            raw = str(_required(args, "q")).split(",")
            q = [to_rational(x.strip(), f"q[{k}]") for k, x in enumerate(raw)]
            return Axis2Setting.build(_values(args), q)
        case "axis3" | "region":
            return Axis3Setting.build(_required(args, "n"), _values(args), _rational(args, "p"), _rational(args, "q"))
        case "bundle":
            if args.action == "discretize":
                return discretize_uniform(_rational(args, "c"), _required(args, "m"), _required(args, "grid"))
            return supports_from_document(load_json(_required(args, "supports")), _rational(args, "c"))
    return None


def config_from_args(args: argparse.Namespace, guards: Guards | None = None) -> RunConfig:
    setting = setting_from_document(load_json(args.setting)) if args.setting else _setting_from_flags(args)
    skip = {"command", "setting", "fmt", "output", "certify", "verbose"}
    options = {k: v for k, v in vars(args).items() if k not in skip}
    return RunConfig(
        command=args.command,
        setting=setting,
        setting_path=args.setting,
        output=args.output,
        fmt=args.fmt,
        certify=args.certify,
        guards=guards or Guards.from_env(),
        options=options,
    )


def build_mechanism(setting: Setting, guards: Guards) -> Mechanism:
    match setting:
        case Axis1Setting():
            return axis1_mechanism(setting, guards)
        case Axis2Setting():
            return axis2_mechanism(setting)
        case Axis3Setting():
            return axis3_mechanism(setting)
        case BundlingSetting():
            return bundling_mechanism(setting)
    raise InputError(f"unsupported setting {type(setting).__name__}")


def _rationals(mapping: dict[Any, Fraction]) -> dict[str, str]:
    return {str(k): format_rational(v) for k, v in mapping.items()}


def _summary(mechanism: Mechanism) -> dict[str, Any]:
    match mechanism:
        case Axis1Mechanism():
            return {
                "k_star": mechanism.kstar,
                "scores": _rationals(mechanism.f),
                "pi_b": format_rational(mechanism.pi_b),
                "pi_a": _rationals(mechanism.pi_a),
                "payments_by_high_count": _rationals(mechanism.payment),
                "revenue_formula": headline(axis1_revenue_formula(mechanism.setting)),
            }
        case Axis2Mechanism():
            setting = mechanism.setting
            agents = []
            for k, part in enumerate(mechanism.partitions):
                order = setting.order
                agents.append(
                    {
                        "agent": order[k],
                        "q": format_rational(setting.q[k]),
                        "case": mechanism.case[k],
                        "partition": {
                            name: sorted(order[i] for i in members)
                            for name, members in (("S1", part.s1), ("S2", part.s2), ("S3", part.s3), ("S4", part.s4))
                        },
                        "product_interim": [format_rational(x) for x in axis2_product_interim(setting, k)],
                    }
                )
            return {"agents": sorted(agents, key=lambda entry: entry["agent"])}
        case Axis3Mechanism():
            return _region_summary(mechanism.setting)
        case BundlingMechanism():
            return {
                "price": headline(mechanism.price),
                "threshold": format_rational(mechanism.threshold),
                "threshold_ok": mechanism.threshold_ok,
                "score_floor": format_rational(bundling_score_floor(mechanism.setting)),
            }


def _region_summary(setting: Axis3Setting) -> dict[str, Any]:
    region = axis3_classify(setting)
    target = None
    if region.zero_score_target is not None:
        item, v = region.zero_score_target
        if setting.swapped:
            item, v = 1 - item, (v[1], v[0])
        target = {"item": item + 1, "type": format_valuation(v)}
    return {
        "region": region.id,
        "x": format_rational(region.x),
        "variant": region.variant,
        "coin": None if region.coin is None else format_rational(region.coin),
        "zero_score_target": target,
        "swapped": setting.swapped,
        "slacks": _rationals(axis3_region_slacks(setting)),
    }


def _certificate(mechanism: Mechanism) -> OptimalityCertificate:
    return certify(mechanism.flows(), mechanism.interim, mechanism.typespace)


def _mechanism_document(setting: Setting, mechanism: Mechanism, summary: dict[str, Any]) -> dict[str, Any]:
    """Axis 1 reports its per-k tables only, so no type is enumerated unless certifying or writing artifacts."""
    if isinstance(mechanism, Axis1Mechanism):
        return {
            "setting": setting_to_document(setting),
            "source": "axis1",
            "revenue": headline(mechanism.revenue),
            "summary": summary,
        }
    return mechanism_to_document(setting, mechanism.interim, mechanism.typespace, summary)


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")
    logger.info("wrote %s", path)


def _mechanism_outcome(config: RunConfig) -> Outcome:
    setting = config.setting
    if setting is None:
        raise InputError("a setting is required")
    if config.option("region_only"):
        return _region_outcome(config)
    mechanism = build_mechanism(setting, config.guards)
    summary = _summary(mechanism)
    frames: list[pd.DataFrame] = []
    match mechanism:
        case Axis1Mechanism():
            frames.append(formatters.axis1_frame(mechanism))
        case Axis2Mechanism():
            frames.append(formatters.axis2_frame(mechanism))
        case Axis3Mechanism():
            frames.append(formatters.mechanism_frame(mechanism.as_given(), mechanism.typespace_as_given()))
        case BundlingMechanism():
            frames.append(formatters.mechanism_frame(mechanism.interim, mechanism.typespace))
    code = EXIT_OK
    if config.certify:
        certificate = _certificate(mechanism)
        summary["certificate"] = certificate_to_document(certificate, setting)
        frames.append(formatters.certificate_frame(certificate))
        if not certificate.optimal:
            code = EXIT_CERTIFICATION
    document = _mechanism_document(setting, mechanism, summary)
    if path := config.option("mechanism_out"):
        _write(path, dumps(mechanism_to_document(setting, mechanism.interim, mechanism.typespace)))
    if path := config.option("flow_out"):
        _write(path, dumps(flows_to_document(setting, mechanism.flows())))
    return Outcome(document=document, frames=frames, code=code)


def _region_outcome(config: RunConfig) -> Outcome:
    setting = config.setting
    if not isinstance(setting, Axis3Setting):
        raise InputError("region: needs an axis3 setting")
    summary = _region_summary(setting)
    document = {"setting": setting_to_document(setting), **summary}
    frame = formatters.slacks_frame(summary["region"], axis3_region_slacks(setting))
    return Outcome(document=document, frames=[frame])


def _region_map_outcome(config: RunConfig) -> Outcome:
    args = argparse.Namespace(**config.options)
    n = int(_required(args, "n"))
    values = _values(args)
    grid = int(getattr(args, "grid", None) or 10)
    if grid < 2:
        raise InputError(f"--grid: must be at least 2, got {grid}")
    cells = list(axis3_region_map(n, values, grid))
    document = {
        "n": n,
        "a": format_rational(values.a),
        "b": format_rational(values.b),
        "grid": grid,
        "cells": [
            {"p": format_rational(c.p), "q": format_rational(c.q), "region": c.region} for c in cells
        ],
    }
    return Outcome(document=document, frames=[formatters.region_map_frame(cells)])


def _verify_outcome(config: RunConfig) -> Outcome:
    setting, mechanism = mechanism_from_document(load_json(config.option("mechanism")))
    flow_setting, flows = flows_from_document(load_json(config.option("flow")))
    if setting_to_document(setting) != setting_to_document(flow_setting):
        raise InputError("verify: mechanism and flow documents describe different settings")
    certificate = certify(flows, mechanism, enumerate_types(setting))
    code = EXIT_OK if certificate.optimal else EXIT_CERTIFICATION
    return Outcome(
        document=certificate_to_document(certificate, setting),
        frames=[formatters.certificate_frame(certificate)],
        code=code,
    )


def _lp_outcome(config: RunConfig) -> Outcome:
    setting = config.setting
    if setting is None:
        raise InputError("lp-opt: --setting is required")
    if isinstance(setting, Axis1Setting):
        config.guards.check_axis1_items(setting.m)
    typespace = enumerate_types(setting)
    solution = lp_optimal_revenue(typespace, config.guards)
    document = {
        "setting": setting_to_document(setting),
        "status": solution.status,
        "objective": headline(solution.objective),
        "pivots": solution.pivots,
    }
    return Outcome(document=document, frames=[formatters.lp_frame(solution)])


def _simulate_outcome(config: RunConfig) -> Outcome:
    setting = config.setting
    if setting is None:
        raise InputError("simulate: --setting is required")
    mechanism = build_mechanism(setting, config.guards)
    trials = int(config.option("trials", DEFAULT_MC_TRIALS))
    seed = int(config.option("seed", DEFAULT_SEED))
    result = mc_simulate(mechanism.interim, mechanism.typespace, trials=trials, seed=seed, guards=config.guards)
    document = {
        "setting": setting_to_document(setting),
        "trials": trials,
        "seed": seed,
        "revenue": {
            "estimate": result.revenue,
            "standard_error": None if math.isnan(result.revenue_se) else result.revenue_se,
            "exact": headline(mechanism.revenue),
        },
    }
    return Outcome(document=document, frames=[formatters.simulation_frame(result, mechanism.interim)])


def _crosscheck_outcome(config: RunConfig) -> Outcome:
    args = argparse.Namespace(**config.options)
    n = int(_required(args, "n"))
    values = _values(args)
    report = crosscheck_axes(values.a, values.b, _rational(args, "p"), n)
    document = {
        "n": n,
        "a": format_rational(values.a),
        "b": format_rational(values.b),
        "p": format_rational(report.p),
        "agree": report.agree,
        "region": report.region,
        "revenues": {name: headline(r) for name, r in report.revenues.items()},
        "diffs": report.diffs,
    }
    code = EXIT_OK if report.agree else EXIT_CERTIFICATION
    return Outcome(document=document, frames=[formatters.crosscheck_frame(report)], code=code)


def run(config: RunConfig) -> tuple[int, str]:
    """Execute one command; returns the exit code and the rendered output."""
    match config.command:
        case "axis1" | "axis2" | "axis3" | "bundle":
            outcome = _mechanism_outcome(config)
        case "region":
            outcome = _region_outcome(config)
        case "region-map":
            outcome = _region_map_outcome(config)
        case "verify":
            outcome = _verify_outcome(config)
        case "lp-opt":
            outcome = _lp_outcome(config)
        case "simulate":
            outcome = _simulate_outcome(config)
        case "crosscheck":
            outcome = _crosscheck_outcome(config)
        case _:
            raise InputError(f"unknown command {config.command!r}; expected one of {', '.join(COMMANDS)}")
    if config.fmt == "json":
        text = dumps(outcome.document)
    else:
        text = "\n".join(formatters.render(frame, config.fmt) for frame in outcome.frames)
    return outcome.code, text


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    try:
        config = config_from_args(args)
        code, text = run(config)
        if config.output is not None:
            _write(config.output, text)
        else:
            sys.stdout.write(text)
        return code
    except GuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except CrosscheckMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATION
    except (OptmechError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

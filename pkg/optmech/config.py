"""Run configuration, size guards and the environment override that lifts them."""

from __future__ import annotations

import logging
import os
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Literal

from .errors import GuardError, InputError

if TYPE_CHECKING:
    from .model import Setting

logger = logging.getLogger(__name__)

MAX_LP_VARIABLES = 5000
MAX_EXPOST_TERMS = 1_000_000
MAX_AXIS1_ENUM_ITEMS = 12
MAX_MC_TRIALS = 10_000_000
DEFAULT_MC_TRIALS = 100_000
DEFAULT_SEED = 20240601
GUARD_OVERRIDE_ENV = "OPTMECH_GUARD_OVERRIDE"

type Command = Literal[
    "axis1",
    "axis2",
    "axis3",
    "region",
    "region-map",
    "bundle",
    "verify",
    "lp-opt",
    "simulate",
    "crosscheck",
]
COMMANDS: tuple[Command, ...] = (
    "axis1",
    "axis2",
    "axis3",
    "region",
    "region-map",
    "bundle",
    "verify",
    "lp-opt",
    "simulate",
    "crosscheck",
)
type OutputFormat = Literal["json", "csv", "table"]
OUTPUT_FORMATS: tuple[OutputFormat, ...] = ("json", "csv", "table")

_TRUTHY = {"1", "true", "yes", "on"}


def guard_override_active(environ: Mapping[str, str] | None = None) -> bool:
    """Return True when the override environment variable holds a truthy value."""
    env = os.environ if environ is None else environ
    return env.get(GUARD_OVERRIDE_ENV, "").strip().lower() in _TRUTHY


@dataclass(frozen=True)
class Guards:
    """Size limits for the enumerating and LP-based checks."""

    lp_max_variables: int = MAX_LP_VARIABLES
    expost_max_terms: int = MAX_EXPOST_TERMS
    axis1_max_items: int = MAX_AXIS1_ENUM_ITEMS
    mc_max_trials: int = MAX_MC_TRIALS
    lifted: bool = False

    @classmethod
    def from_env(cls, environ: Mapping[str, str] | None = None) -> Guards:
        lifted = guard_override_active(environ)
        if lifted:
            logger.info("%s set: size guards lifted", GUARD_OVERRIDE_ENV)
        return cls(lifted=lifted)

    def _refuse(self, what: str, limit: int, got: int) -> None:
        if self.lifted or got <= limit:
            return
        logger.warning("guard refused %s: %d > %d", what, got, limit)
        raise GuardError(f"{what} cannot exceed {limit} (got {got}). Set {GUARD_OVERRIDE_ENV}=1 to lift the guard.")

    def check_lp(self, variables: int) -> None:
        self._refuse("LP variable count", self.lp_max_variables, variables)

    def check_expost(self, terms: int) -> None:
        self._refuse("Ex-post enumeration size", self.expost_max_terms, terms)

    def check_axis1_items(self, m: int) -> None:
        self._refuse("Axis-1 item count for type enumeration", self.axis1_max_items, m)

    def check_trials(self, trials: int) -> None:
        self._refuse("Monte Carlo trials", self.mc_max_trials, trials)


def resolve_guards(guards: Guards | None) -> Guards:
    return Guards.from_env() if guards is None else guards


@dataclass(frozen=True)
class RunConfig:
    """One parsed CLI invocation."""

    command: Command
    setting: Setting | None = None
    setting_path: Path | None = None
    output: Path | None = None
    fmt: OutputFormat = "json"
    certify: bool = False
    guards: Guards = field(default_factory=Guards)
    options: dict[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise InputError(f"command: unknown command {self.command!r}")
        if self.fmt not in OUTPUT_FORMATS:
            raise InputError(f"format: must be one of {', '.join(OUTPUT_FORMATS)}, got {self.fmt!r}")

    def option(self, name: str, default: object = None) -> object:
        return self.options.get(name, default)

"""Command-line driver.

Exit codes: 0 all checks pass, 1 a check failed, 2 usage error or unwritable
output, 3 the model could not be loaded or evaluated.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .exprlang import ExprError
from .geometry import DEFAULT_ORDER, GeometryError
from .jets import JetError
from .models import ModelError, build_model, list_models, load_model
from .report import to_json
from .suites import SUITES, run_suite

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_MODEL = 0, 1, 2, 3
SEED_ENV = "GEODESK_SEED"
DEFAULT_SEED = 42


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    model: str | None = None
    config: Path | None = None
    params: dict[str, str] = field(default_factory=dict)
    suite: str = "all"
    points: int = 16
    seed: int = DEFAULT_SEED
    tol: float | None = None
    order: int = DEFAULT_ORDER
    output: Path | None = None

    def __post_init__(self):
        if (self.model is None) == (self.config is None):
            raise UsageError("give exactly one of --model or --config")
        if self.suite not in SUITES + ("all",):
            raise UsageError(f"unknown suite {self.suite!r}")
        if self.points < 1:
            raise UsageError("--points must be at least 1")
        if self.tol is not None and not self.tol > 0:
            raise UsageError("--tol must be positive")
        if self.order < 2:
            raise UsageError("--order must be at least 2 (curvature needs second derivatives)")
        if self.config is not None and self.params:
            raise UsageError("--param only applies to catalog models")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="geodesk", description="Pointwise checks of curvature identities on models.")
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", help="run a check suite on a model")
    src = v.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", help="catalog model name (see list-models)")
    src.add_argument("--config", type=Path, help="model config file")
    v.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                   help="catalog model parameter, repeatable")
    v.add_argument("--suite", default="all", choices=SUITES + ("all",))
    v.add_argument("--points", type=int, default=16)
    v.add_argument("--seed", type=int, default=None,
                   help=f"sampling seed (default ${SEED_ENV} or {DEFAULT_SEED})")
    v.add_argument("--tol", type=float, default=None,
                   help="one tolerance for every check (default: per-check tolerances)")
    v.add_argument("--order", type=int, default=DEFAULT_ORDER, help="jet order")
    v.add_argument("--output", type=Path, help="write the JSON report here instead of stdout")
    sub.add_parser("list-models", help="list catalog models and their parameters")
    return p


def _seed(arg: int | None) -> int:
    if arg is not None:
        return arg
    env = os.environ.get(SEED_ENV)
    if env is None or env.strip() == "":
        return DEFAULT_SEED
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def _params(items: Sequence[str]) -> dict[str, str]:
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"--param expects KEY=VALUE, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def parse_config(argv: Sequence[str]) -> tuple[str, RunConfig | None]:
    ns = _parser().parse_args(list(argv))
    if ns.command == "list-models":
        return "list-models", None
    cfg = RunConfig(ns.model, ns.config, _params(ns.param), ns.suite, ns.points, _seed(ns.seed),
                    ns.tol, ns.order, ns.output)
    return "verify", cfg


def verify(cfg: RunConfig, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        spec = load_model(cfg.config) if cfg.config else build_model(cfg.model, cfg.params)
    except (ModelError, GeometryError, ExprError) as exc:
        print(f"geodesk: cannot load model: {exc}", file=stderr)
        return EXIT_MODEL
    try:
        suite = run_suite(spec, cfg.suite, cfg.points, cfg.seed, cfg.tol, cfg.order)
    except (ModelError, GeometryError, ExprError, JetError) as exc:
        print(f"geodesk: model evaluation failed: {exc}", file=stderr)
        return EXIT_MODEL
    text = to_json(suite)
    if cfg.output is None:
        stdout.write(text)
    else:
        try:
            cfg.output.write_text(text, encoding="utf-8")
        except OSError as exc:
            print(f"geodesk: cannot write {cfg.output}: {exc.strerror}", file=stderr)
            return EXIT_USAGE
        failed = suite.count(suite.verdict.FAIL)
        print(f"{spec.name}: {suite.verdict.value} ({len(suite.checks)} checks, "
              f"{failed} failed, {suite.skipped} skipped)", file=stdout)
    return EXIT_PASS if suite.passed else EXIT_FAIL


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = sys.argv[1:] if argv is None else argv
    try:
        command, cfg = parse_config(argv)
    except UsageError as exc:
        print(f"geodesk: {exc}", file=stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if command == "list-models":
        stdout.write(list_models())
        return EXIT_PASS
    return verify(cfg, stdout, stderr)


def main() -> None:
    sys.exit(run())

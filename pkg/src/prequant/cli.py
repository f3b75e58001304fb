"""Scenario-driven command line front end.

    prequant run scenario.json [--report out.json] [--seed N] [--step X] [--samples N]
    prequant list-models
    prequant list-checks
    prequant demo so3 --level N

Exit status: 0 when every check passes, 1 when any fails, 2 on operational
errors (bad scenario, unwritable report, bad PREQUANT_THREADS).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Optional

from .errors import PrequantError, ScenarioError
from .flows import FlowConfig
from .models import MAX_CPN, make_model, parse_model_id
from .parallel import thread_cap
from .verify import (
    CHECK_NAMES,
    DEFAULT_SUITE,
    DEFAULT_TOLERANCES,
    HYPOTHESIS_FAILURE,
    PASS,
    run_check,
    so3_obstruction_demo,
)

SCENARIO_KEYS = ("model", "checks", "tolerances", "step", "samples", "seed", "offsets", "expect_hypothesis_failure")


@dataclass
class Scenario:
    model: str
    checks: list = field(default_factory=lambda: list(DEFAULT_SUITE))
    tolerances: dict = field(default_factory=dict)
    step: float = 1e-3
    samples: int = 32
    seed: int = 0
    offsets: Optional[list] = None
    expect_hypothesis_failure: list = field(default_factory=list)

    def counts_as_pass(self, report):
        if report.status == PASS:
            return True
        return report.status == HYPOTHESIS_FAILURE and report.name in self.expect_hypothesis_failure


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_real(v):
    return (isinstance(v, (int, float)) and not isinstance(v, bool)) and math.isfinite(v)


def _check_names(key, value):
    if not isinstance(value, list) or not all(isinstance(c, str) for c in value):
        raise ScenarioError(key, "must be a list of check names")
    for c in value:
        if c not in CHECK_NAMES:
            raise ScenarioError(key, f"unknown check {c!r}")
    return list(value)


def validate_scenario(data):
    """Build a Scenario from a decoded object, naming the first bad key."""
    if not isinstance(data, dict):
        raise ScenarioError("<root>", "scenario must be an object")
    for key in data:
        if key not in SCENARIO_KEYS:
            raise ScenarioError(key, "unknown key")
    if "model" not in data:
        raise ScenarioError("model", "missing required key")
    model = data["model"]
    if not isinstance(model, str):
        raise ScenarioError("model", "must be a string like 's2:1' or 'cpn:2'")
    try:
        kind, _ = parse_model_id(model)
    except PrequantError as exc:
        raise ScenarioError("model", str(exc)) from None

    out = Scenario(model=model)
    if "checks" in data:
        out.checks = _check_names("checks", data["checks"])
    if "so3-demo" in out.checks and kind != "s2":
        raise ScenarioError("checks", "so3-demo is defined only for s2 models")
    if "tolerances" in data:
        tol = data["tolerances"]
        if not isinstance(tol, dict):
            raise ScenarioError("tolerances", "must be an object mapping check names to numbers")
        for name, value in tol.items():
            if name not in CHECK_NAMES:
                raise ScenarioError("tolerances", f"unknown check {name!r}")
            if not _is_real(value) or value <= 0:
                raise ScenarioError("tolerances", f"tolerance for {name!r} must be a positive number")
        out.tolerances = {k: float(v) for k, v in tol.items()}
    if "step" in data:
        if not _is_real(data["step"]) or not 0 < data["step"] <= 0.1:
            raise ScenarioError("step", "must be a number in (0, 0.1]")
        out.step = float(data["step"])
    if "samples" in data:
        if not _is_int(data["samples"]) or data["samples"] < 1:
            raise ScenarioError("samples", "must be an integer >= 1")
        out.samples = data["samples"]
    if "seed" in data:
        if not _is_int(data["seed"]) or data["seed"] < 0:
            raise ScenarioError("seed", "must be a non-negative integer")
        out.seed = data["seed"]
    if data.get("offsets") is not None:
        offs = data["offsets"]
        if not isinstance(offs, list) or not offs or not all(_is_real(c) for c in offs):
            raise ScenarioError("offsets", "must be a non-empty list of numbers")
        out.offsets = [float(c) for c in offs]
    if "expect_hypothesis_failure" in data:
        out.expect_hypothesis_failure = _check_names("expect_hypothesis_failure", data["expect_hypothesis_failure"])
    return out


def parse_scenario(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ScenarioError("<file>", f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError("<file>", f"invalid JSON: {exc}") from None
    return validate_scenario(data)


def scenario_to_dict(s):
    return {
        "model": s.model,
        "checks": list(s.checks),
        "tolerances": dict(s.tolerances),
        "step": s.step,
        "samples": s.samples,
        "seed": s.seed,
        "offsets": None if s.offsets is None else list(s.offsets),
        "expect_hypothesis_failure": list(s.expect_hypothesis_failure),
    }


def run_scenario(s):
    """Build the model once and run the checks in declaration order."""
    if not s.checks:
        return []
    bundle, action = make_model(s.model)
    cfg = FlowConfig(step=s.step)
    return [
        run_check(
            name, bundle, action,
            samples=s.samples, seed=s.seed, cfg=cfg,
            tolerance=s.tolerances.get(name), offsets=s.offsets,
        )
        for name in s.checks
    ]


def report_document(scenario, reports):
    return {
        "scenario": scenario_to_dict(scenario) if isinstance(scenario, Scenario) else scenario,
        "reports": [r.to_dict() for r in reports],
    }


def dumps_report(scenario, reports):
    return json.dumps(report_document(scenario, reports), sort_keys=True, indent=2) + "\n"


def emit_report(reports, path, scenario=None):
    text = dumps_report(scenario or {}, reports)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _summary(reports, scenario=None):
    for r in reports:
        ok = scenario.counts_as_pass(r) if scenario else r.passed
        flag = "ok " if ok else "BAD"
        print(f"[{flag}] {r.name:18s} {r.status:18s} defect={r.max_defect:.3e} tol={r.tolerance:g}", file=sys.stderr)


def _cmd_run(args):
    s = parse_scenario(args.file)
    if args.seed is not None:
        s.seed = args.seed
    if args.step is not None:
        s.step = args.step
    if args.samples is not None:
        s.samples = args.samples
    s = validate_scenario(scenario_to_dict(s))
    if args.print_config:
        print(json.dumps(scenario_to_dict(s), sort_keys=True, indent=2))
        return 0
    reports = run_scenario(s)
    text = dumps_report(s, reports)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    _summary(reports, s)
    return 0 if all(s.counts_as_pass(r) for r in reports) else 1


def _cmd_list_models(args):
    print("s2:<n>      Hopf/lens bundle L(n,1) -> S^2 at level n >= 1, rank-1 rotation torus")
    print(f"cpn:<k>     Hopf bundle S^(2k+1) -> CP^k, 1 <= k <= {MAX_CPN}, rank-k coordinate torus")
    return 0


def _cmd_list_checks(args):
    for name in CHECK_NAMES:
        suite = "" if name in DEFAULT_SUITE else "  (not in default suite)"
        print(f"{name:18s} tolerance {DEFAULT_TOLERANCES[name]:g}{suite}")
    return 0


def _cmd_demo(args):
    if args.level < 1:
        raise ScenarioError("level", "level must be ≥ 1")
    report = so3_obstruction_demo(args.level, samples=args.samples, seed=args.seed)
    print(json.dumps(report.to_dict(), sort_keys=True, indent=2))
    print(report.notes, file=sys.stderr)
    return 0 if report.passed else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="prequant", description="Numerical checks on prequantum circle bundles.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario file")
    run.add_argument("file")
    run.add_argument("--report", help="write the JSON report here instead of stdout")
    run.add_argument("--seed", type=int)
    run.add_argument("--step", type=float)
    run.add_argument("--samples", type=int)
    run.add_argument("--print-config", action="store_true", help="echo the validated scenario and exit")
    run.set_defaults(func=_cmd_run)

    sub.add_parser("list-models", help="list model identifiers").set_defaults(func=_cmd_list_models)
    sub.add_parser("list-checks", help="list check names").set_defaults(func=_cmd_list_checks)

    demo = sub.add_parser("demo", help="standalone demonstrations")
    demo.add_argument("which", choices=["so3"])
    demo.add_argument("--level", type=int, required=True)
    demo.add_argument("--samples", type=int, default=8)
    demo.add_argument("--seed", type=int, default=0)
    demo.set_defaults(func=_cmd_demo)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        thread_cap()
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: scenario {exc}", file=sys.stderr)
    except (OSError, ValueError, PrequantError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())

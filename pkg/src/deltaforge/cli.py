"""Command-line front end: `simplify`, `verify`, `numcheck`, `rules`.

Exit codes are a stable contract: 0 success/verified, 1 a check ran and
failed, 2 usage or parse error, 3 internal engine error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .expr import EngineError
from .parser import ParseError, ScriptError, parse_expr, parse_script, print_expr
from .rewrite import CATALOG, simplify
from .dirac import verify_script
from .numeric import (
    FAMILIES,
    REGULARIZABLE,
    Wavepacket,
    check_rule,
    diffraction_magnitude,
    ehrenfest_check,
    fourier_kernel_check,
    random_rule_params,
)
from . import scripts as bundled

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_INTERNAL = 3

DEFAULT_SEED = 1729

_PHYSICS_TARGETS = ("fourier", "diffraction", "ehrenfest")


@dataclass(frozen=True)
class RunConfig:
    hbar: float = 1.0
    sweep: tuple[float, ...] | None = None
    tol: float = 1e-10
    output: str = "human"
    seed: int = DEFAULT_SEED
    family: str = "gaussian"

    def __post_init__(self) -> None:
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")
        if self.sweep is not None:
            if any(e <= 0 for e in self.sweep):
                raise ValueError("epsilon sweep values must be positive")
            if any(b >= a for a, b in zip(self.sweep, self.sweep[1:])):
                raise ValueError("epsilon sweep must be strictly decreasing")
        if self.output not in ("human", "structured"):
            raise ValueError("output mode must be 'human' or 'structured'")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    seed = args.seed
    if seed is None:
        env = os.environ.get("DELTA_FORGE_SEED")
        seed = int(env) if env else DEFAULT_SEED
    sweep = tuple(args.eps) if getattr(args, "eps", None) else None
    return RunConfig(
        hbar=args.hbar,
        sweep=sweep,
        tol=args.tol,
        output=args.output,
        seed=seed,
        family=getattr(args, "family", "gaussian"),
    )


def _emit(config: RunConfig, doc: dict, human: str) -> None:
    if config.output == "structured":
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        print(human)


def _path_str(path: tuple[int, ...]) -> str:
    return "root" if not path else ".".join(str(i) for i in path)


def cmd_simplify(args: argparse.Namespace, config: RunConfig) -> int:
    expr = parse_expr(args.expression)
    result, trace = simplify(expr)
    steps = [
        {
            "rule": s.rule_id,
            "path": list(s.path),
            "before": print_expr(s.before),
            "after": print_expr(s.after),
        }
        for s in trace.steps
    ]
    doc = {
        "command": "simplify",
        "input": args.expression,
        "result": print_expr(result),
        "steps": steps,
        "status": "ok",
    }
    lines = [print_expr(result)]
    for i, s in enumerate(steps, start=1):
        lines.append(f"  {i}. {s['rule']} @ {_path_str(tuple(s['path']))}: {s['before']}  ->  {s['after']}")
    _emit(config, doc, "\n".join(lines))
    return EXIT_OK


def _resolve_script(token: str) -> tuple[str, str]:
    """Return (display name, script text) for a path or a bundled name."""
    if os.path.exists(token):
        with open(token, "r", encoding="utf-8") as fh:
            return os.path.basename(token), fh.read()
    name = token[:-3] if token.endswith(".dv") else token
    if name in bundled.script_names():
        return name + ".dv", bundled.load_script_text(name)
    raise FileNotFoundError(f"no such script file or bundled script: {token}")


def cmd_verify(args: argparse.Namespace, config: RunConfig) -> int:
    tokens = list(args.scripts)
    if args.all:
        tokens.extend(n for n in bundled.script_names() if n not in tokens)
    if not tokens:
        raise ValueError("verify needs script paths or --all")
    reports = []
    texts = []
    for token in tokens:
        display, text = _resolve_script(token)
        report = verify_script(parse_script(text, name=display))
        reports.append(report)
        if report.verified:
            texts.append(f"VERIFIED ({report.steps_checked} steps): {display}")
        else:
            texts.append(f"FAILED at step {report.failed_step}: {report.reason} [{display}]")
        if args.trace:
            texts.append(report.to_text())
    ok = all(r.verified for r in reports)
    doc = {
        "command": "verify",
        "status": "ok" if ok else "failed",
        "scripts": [r.to_dict() for r in reports],
    }
    _emit(config, doc, "\n".join(texts))
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _numcheck_one(target: str, args: argparse.Namespace, config: RunConfig) -> list[dict]:
    if target == "fourier":
        rep = fourier_kernel_check(hbar=config.hbar)
        return [rep.to_dict()]
    if target == "diffraction":
        res = diffraction_magnitude(args.alpha, args.beta)
        return [dict(res, target="diffraction")]
    if target == "ehrenfest":
        wp = Wavepacket(m=args.m, sigma=args.sigma, x0=args.x0, p0=args.p0, hbar=config.hbar)
        res = ehrenfest_check(wp)
        return [dict(res, target="ehrenfest")]
    if target not in REGULARIZABLE:
        raise ValueError(f"unknown numcheck target {target!r}")
    out = [check_rule(target, config.family, sweep=config.sweep, hbar=config.hbar).to_dict()]
    rng = np.random.default_rng(config.seed)
    for _ in range(args.samples):
        params = random_rule_params(target, rng)
        rep = check_rule(target, config.family, sweep=config.sweep, hbar=config.hbar, **params)
        out.append(rep.to_dict())
    return out


def _numcheck_text(res: dict) -> str:
    if res.get("target") == "diffraction":
        return (
            f"diffraction alpha {res['alpha']:g} beta {res['beta']:g}: "
            f"magnitude {res['estimate']:.6g} vs oracle {res['exact']:.6g} "
            f"(rel err {res['rel_err']:.2e}) {'PASSED' if res['passed'] else 'FAILED'}"
        )
    if res.get("target") == "ehrenfest":
        return (
            f"ehrenfest sigma {res['packet']['sigma']:g} p0 {res['packet']['p0']:g}: "
            f"max residuals {res['max_first_residual']:.2e} / {res['max_second_residual']:.2e} "
            f"{'PASSED' if res['passed'] else 'FAILED'}"
        )
    order = res["order"]
    order_txt = "machine-floor" if order == float("inf") else f"{order:.2f}"
    return (
        f"rule {res['rule_id']} family {res['family']}: fitted order {order_txt}, "
        f"final residual {res['rows'][-1]['residual']:.3e} "
        f"{'PASSED' if res['passed'] else 'FAILED'}"
    )


def cmd_numcheck(args: argparse.Namespace, config: RunConfig) -> int:
    targets = list(args.targets)
    if args.all:
        targets.extend(r for r in REGULARIZABLE if r not in targets)
        targets.extend(t for t in _PHYSICS_TARGETS if t not in targets)
    if not targets:
        raise ValueError("numcheck needs targets (rule id, fourier, diffraction, ehrenfest) or --all")
    results: list[dict] = []
    for target in targets:
        results.extend(_numcheck_one(target, args, config))
    ok = all(r["passed"] for r in results)
    doc = {
        "command": "numcheck",
        "status": "ok" if ok else "failed",
        "checks": results,
    }
    _emit(config, doc, "\n".join(_numcheck_text(r) for r in results))
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_rules(args: argparse.Namespace, config: RunConfig) -> int:
    listing = [r.describe() for r in CATALOG]
    doc = {"command": "rules", "rules": listing}
    lines = []
    for r in listing:
        lines.append(f"{r['id']}")
        lines.append(f"  pattern:     {r['pattern']}")
        lines.append(f"  replacement: {r['replacement']}")
        lines.append(f"  guard:       {r['guard']}")
        lines.append(f"  citation:    {r['citation']}")
    _emit(config, doc, "\n".join(lines))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deltaforge",
        description="Symbolic delta-distribution calculus with numeric cross-checks.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--hbar", type=float, default=1.0, help="value of hbar for numeric checks")
    common.add_argument("--tol", type=float, default=1e-10, help="quadrature tolerance")
    common.add_argument("--seed", type=int, default=None, help="seed for randomized checks (env DELTA_FORGE_SEED)")
    common.add_argument(
        "--output", choices=("human", "structured"), default="human", help="report format"
    )

    sub = parser.add_subparsers(dest="cmd", required=True)

    p_simp = sub.add_parser("simplify", parents=[common], help="normalize an expression and show the rewrite trace")
    p_simp.add_argument("expression", help="expression text, e.g. 'x*ddelta(x, 1)'")
    p_simp.set_defaults(func=cmd_simplify)

    p_ver = sub.add_parser("verify", parents=[common], help="check derivation scripts step by step")
    p_ver.add_argument("scripts", nargs="*", help="script paths or bundled names")
    p_ver.add_argument("--all", action="store_true", help="verify every bundled script")
    p_ver.add_argument("--trace", action="store_true", help="print the per-step report")
    p_ver.set_defaults(func=cmd_verify)

    p_num = sub.add_parser("numcheck", parents=[common], help="run numeric convergence checks")
    p_num.add_argument("targets", nargs="*", help="rule id, 'fourier', 'diffraction', or 'ehrenfest'")
    p_num.add_argument("--all", action="store_true", help="check every rule and physics target")
    p_num.add_argument("--family", choices=FAMILIES, default="gaussian", help="nascent-delta family")
    p_num.add_argument("--eps", type=float, action="append", help="epsilon sweep value (repeatable, decreasing)")
    p_num.add_argument("--samples", type=int, default=0, help="extra random instantiations per rule")
    p_num.add_argument("--alpha", type=float, default=1.0, help="diffraction linear phase coefficient")
    p_num.add_argument("--beta", type=float, default=0.5, help="diffraction quadratic phase coefficient")
    p_num.add_argument("--sigma", type=float, default=1.0, help="wavepacket width")
    p_num.add_argument("--p0", type=float, default=2.0, help="wavepacket mean momentum")
    p_num.add_argument("--m", type=float, default=1.0, help="wavepacket mass")
    p_num.add_argument("--x0", type=float, default=0.0, help="wavepacket mean position")
    p_num.set_defaults(func=cmd_numcheck)

    p_rules = sub.add_parser("rules", parents=[common], help="list the rewrite catalog")
    p_rules.set_defaults(func=cmd_rules)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _config_from_args(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args, config)
    except (ParseError, ScriptError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EngineError as exc:
        print(f"engine error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

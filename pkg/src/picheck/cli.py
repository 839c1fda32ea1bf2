"""Command-line front end: ``picheck sat|equiv|lts|list-models|list-attacks|show|regress``."""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any

from . import __version__
from .corpus import (
    ATTACKS,
    EXPECTATIONS,
    GAME_PAIRS,
    CorpusError,
    attack_formula,
    build_model,
    game_pair,
    model_names,
    model_source,
    parse_model_name,
)
from .equiv import RELATIONS, Distinguished, GameConfig, GameConfigError, play_game, strategy_dot
from .logic import CheckBudget, FormulaError, check, parse_formula
from .procs import parse_process, pretty_ext, reset_fresh
from .sos import DEFAULT_CAP, BudgetExceeded, explore, lts_dot
from .terms import TermError, parse_message

VERDICTS = ("sat", "unsat", "related-up-to-bound", "distinguished", "error")


class UsageError(Exception):
    pass


@dataclass
class CheckReport:
    command: list[str]
    verdict: str
    elapsed: float
    budget: dict[str, Any] = field(default_factory=dict)
    witness: Any = None
    version: str = __version__

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "CheckReport":
        return cls(**json.loads(text))


# argument parsing ---------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="picheck", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("sat", help="model-check a formula")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--process", metavar="FILE")
    src.add_argument("--model", metavar="NAME")
    p.add_argument("--side", choices=("system", "spec"), default="system")
    phi = p.add_mutually_exclusive_group(required=True)
    phi.add_argument("--formula", metavar="FILE")
    phi.add_argument("--attack", metavar="NAME")
    p.add_argument("--logic", choices=("fm", "hpfm"))
    p.add_argument("--bang-cap", type=int, default=None)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("equiv", help="play a bounded (bi)simulation game")
    p.add_argument("--left", metavar="FILE")
    p.add_argument("--right", metavar="FILE")
    p.add_argument("--model", metavar="NAME", help="system against spec of a built-in model")
    p.add_argument("--pair", choices=sorted(GAME_PAIRS), help="a built-in example pair")
    p.add_argument("--relation", choices=RELATIONS, default="i-sim")
    p.add_argument("--depth", type=int, default=6)
    p.add_argument("--recipe-depth", type=int, default=1)
    p.add_argument("--bang-cap", type=int, default=DEFAULT_CAP)
    p.add_argument("--json", action="store_true")
    p.add_argument("--strategy-dot", metavar="FILE")

    p = sub.add_parser("lts", help="explore output and tau transitions")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--process", metavar="FILE")
    src.add_argument("--model", metavar="NAME")
    p.add_argument("--side", choices=("system", "spec"), default="system")
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--bang-cap", type=int, default=DEFAULT_CAP)
    p.add_argument("--payload", action="append", default=[], metavar="RECIPE",
                   help="also offer this input payload on every deducible channel")
    p.add_argument("--dot", metavar="FILE")
    p.add_argument("--json", action="store_true")

    sub.add_parser("list-models")
    sub.add_parser("list-attacks")
    p = sub.add_parser("show", help="print the source of a built-in model")
    p.add_argument("--model", required=True, metavar="ID")
    p.add_argument("--side", choices=("system", "spec"), default="system")

    p = sub.add_parser("regress", help="check every corpus expectation")
    p.add_argument("--quick", action="store_true", help="skip the bounded-session game")
    p.add_argument("--json", action="store_true")
    return ap


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _process_arg(args):
    if args.process:
        return parse_process(_read(args.process))
    return build_model(parse_model_name(args.model, args.side))


# commands -------------------------------------------------------------------------

def cmd_sat(args, argv) -> tuple[int, CheckReport, str]:
    a = _process_arg(args)
    if args.attack:
        if args.attack not in ATTACKS:
            raise UsageError(f"unknown attack {args.attack!r}")
        logic = args.logic or ATTACKS[args.attack].dialect
        if logic != ATTACKS[args.attack].dialect:
            raise UsageError(f"{args.attack} is an {ATTACKS[args.attack].dialect} formula")
        phi = attack_formula(args.attack)
    else:
        logic = args.logic or "fm"
        phi = parse_formula(_read(args.formula), logic)
    cap = args.bang_cap
    if cap is None and args.model and args.attack:
        # the cap the expectation table uses for this pairing, if any
        cap = next((e.bang_cap for e in EXPECTATIONS
                    if e.model == args.model and e.attack == args.attack), None)
    budget = CheckBudget(cap) if cap else CheckBudget()
    t = time.perf_counter()
    ok = check(a, phi, logic, budget)
    rep = CheckReport(argv, "sat" if ok else "unsat", time.perf_counter() - t,
                      {"bang_cap": budget.cap_for(phi), "logic": logic})
    return 0, rep, rep.verdict


def cmd_equiv(args, argv) -> tuple[int, CheckReport, str]:
    chosen = [bool(args.left or args.right), bool(args.model), bool(args.pair)]
    if sum(chosen) != 1:
        raise UsageError("give either --left and --right, --model, or --pair")
    if args.pair:
        a, b = game_pair(args.pair)
    elif args.model:
        a = build_model(parse_model_name(args.model, "system"))
        b = build_model(parse_model_name(args.model, "spec"))
    else:
        if not (args.left and args.right):
            raise UsageError("--left and --right go together")
        a, b = parse_process(_read(args.left)), parse_process(_read(args.right))
    cfg = GameConfig(args.relation, args.depth, args.recipe_depth, args.bang_cap)
    t = time.perf_counter()
    v = play_game(a, b, cfg)
    elapsed = time.perf_counter() - t
    budget = {"relation": cfg.relation, "depth": cfg.depth, "recipe_depth": cfg.recipe_depth,
              "bang_cap": cfg.bang_cap}
    if isinstance(v, Distinguished):
        if args.strategy_dot:
            with open(args.strategy_dot, "w", encoding="utf-8") as fh:
                fh.write(strategy_dot(v.strategy))
        rep = CheckReport(argv, v.verdict, elapsed, budget, v.strategy.to_json())
        text = "\n".join([v.verdict] + v.strategy.lines(1))
    else:
        rep = CheckReport(argv, v.verdict, elapsed, budget, {"pairs": len(v.relation)})
        text = f"{v.verdict} (depth {v.depth}, {len(v.relation)} related pairs)"
    return 0, rep, text


def cmd_lts(args, argv) -> tuple[int, None, str]:
    a = _process_arg(args)
    payloads = [parse_message(m) for m in args.payload]
    lts = explore(a, args.depth, args.bang_cap, payloads)
    dot = lts_dot(lts)
    if args.dot:
        with open(args.dot, "w", encoding="utf-8") as fh:
            fh.write(dot)
    if args.json:
        text = json.dumps({"states": len(lts.states), "complete": lts.complete,
                           "edges": [[i, str(ev), j] for i, ev, j in lts.edges]})
    else:
        text = f"{len(lts.states)} states, {len(lts.edges)} edges" + ("" if lts.complete else " (cut at depth)")
        if not args.dot:
            text = dot
    return 0, None, text


def cmd_show(args) -> str:
    mid = parse_model_name(args.model, args.side)
    return model_source(mid) + "\n# canonical form\n" + pretty_ext(build_model(mid)) + "\n"


# regression ------------------------------------------------------------------------

def regress_jobs(quick: bool = False) -> list[tuple]:
    jobs = [("sat", e.model, e.side, e.attack, e.bang_cap, "sat" if e.expected else "unsat")
            for e in EXPECTATIONS]
    for name in GAME_PAIRS:
        jobs.append(("pair", name, "hp-sim", 6, "distinguished"))
        jobs.append(("pair", name, "i-sim", 6, "related-up-to-bound"))
    jobs.append(("pair", "cc", "i-bisim", 6, "related-up-to-bound"))
    if not quick:
        jobs.append(("model", "bac-two", "i-sim", 14, "distinguished"))
    return jobs


def run_job(job: tuple) -> tuple[tuple, str, float]:
    reset_fresh()
    t = time.perf_counter()
    kind = job[0]
    if kind == "sat":
        _, model, side, attack, cap, _ = job
        ok = check(build_model(parse_model_name(model, side)), attack_formula(attack),
                   ATTACKS[attack].dialect, CheckBudget(cap))
        got = "sat" if ok else "unsat"
    else:
        _, name, relation, depth, _ = job
        if kind == "pair":
            a, b = game_pair(name)
        else:
            a = build_model(parse_model_name(name, "system"))
            b = build_model(parse_model_name(name, "spec"))
        got = play_game(a, b, GameConfig(relation, depth, 1)).verdict
    return job, got, time.perf_counter() - t


def _job_name(job: tuple) -> str:
    if job[0] == "sat":
        return f"{job[1]} {job[2]} {job[3]}"
    return f"{job[1]} {job[2]} depth {job[3]}"


def workers() -> int:
    try:
        n = int(os.environ.get("PICHECK_THREADS", "0"))
    except ValueError:
        raise UsageError("PICHECK_THREADS must be an integer") from None
    return n if n > 0 else (os.cpu_count() or 1)


def cmd_regress(args, argv) -> tuple[int, CheckReport, str]:
    jobs = regress_jobs(args.quick)
    t = time.perf_counter()
    n = min(workers(), len(jobs))
    if n == 1:
        results = [run_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(n) as pool:
            results = list(pool.map(run_job, jobs))
    lines, rows, bad = [], [], 0
    for job, got, dt in results:
        ok = got == job[-1]
        bad += not ok
        lines.append(f"{'ok  ' if ok else 'FAIL'} {_job_name(job)}: {got} (expected {job[-1]}, {dt:.1f}s)")
        rows.append({"check": _job_name(job), "expected": job[-1], "got": got, "seconds": round(dt, 3)})
    lines.append(f"{len(jobs) - bad}/{len(jobs)} as expected")
    rep = CheckReport(argv, "error" if bad else "sat", time.perf_counter() - t, {"workers": n}, rows)
    return (1 if bad else 0), rep, "\n".join(lines)


# entry points ----------------------------------------------------------------------

def run(argv: list[str]) -> tuple[int, CheckReport | None, str]:
    """Execute one command; returns the exit code, the report if any and the text output."""
    try:
        args = _parser().parse_args(argv)
    except SystemExit as e:
        return (e.code if isinstance(e.code, int) else 2), None, ""
    reset_fresh()
    try:
        if args.cmd == "sat":
            code, rep, text = cmd_sat(args, argv)
        elif args.cmd == "equiv":
            code, rep, text = cmd_equiv(args, argv)
        elif args.cmd == "lts":
            code, rep, text = cmd_lts(args, argv)
        elif args.cmd == "list-models":
            return 0, None, "\n".join(model_names())
        elif args.cmd == "list-attacks":
            return 0, None, "\n".join(f"{k}\t{v.dialect}\t{v.note}" for k, v in ATTACKS.items())
        elif args.cmd == "show":
            return 0, None, cmd_show(args)
        else:
            code, rep, text = cmd_regress(args, argv)
    except (UsageError, CorpusError, GameConfigError, FormulaError, TermError, ValueError) as e:
        rep = CheckReport(argv, "error", 0.0, witness=str(e))
        return 2, rep, (rep.to_json() if getattr(args, "json", False) else f"picheck: error: {e}")
    except BudgetExceeded as e:
        rep = CheckReport(argv, "error", 0.0, witness=f"budget exceeded: {e}")
        return 2, rep, (rep.to_json() if getattr(args, "json", False) else f"picheck: {e}")
    if getattr(args, "json", False) and rep is not None:
        text = rep.to_json()
    return code, rep, text


def main(argv: list[str] | None = None) -> int:
    code, _, text = run(sys.argv[1:] if argv is None else argv)
    if text:
        out = sys.stderr if text.startswith("picheck:") else sys.stdout
        print(text, file=out)
    return code


if __name__ == "__main__":
    sys.exit(main())

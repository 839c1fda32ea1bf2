"""Evaluate every row of the expectation table and print a timing table."""
import argparse
import time

from picheck.corpus import EXPECTATIONS, attack_dialect, attack_formula, build_model, parse_model_name
from picheck.logic import CheckBudget, check


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--only", nargs="*", default=[], metavar="ATTACK", help="restrict to these attacks")
    args = ap.parse_args()
    bad = 0
    for e in EXPECTATIONS:
        if args.only and e.attack not in args.only:
            continue
        a = build_model(parse_model_name(e.model, e.side))
        t = time.perf_counter()
        got = check(a, attack_formula(e.attack), attack_dialect(e.attack), CheckBudget(e.bang_cap))
        dt = time.perf_counter() - t
        bad += got != e.expected
        mark = "ok  " if got == e.expected else "FAIL"
        print(f"{mark} {e.model:18} {e.side:6} {e.attack:20} {str(got):5} {dt:7.1f}s", flush=True)
    return 1 if bad else 0


if __name__ == "__main__":
    raise SystemExit(main())

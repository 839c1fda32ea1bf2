"""Check the transition invariants on every corpus state up to a depth."""
import argparse
import pathlib
import sys
import time

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "tests"))

from frontier import (  # noqa: E402
    corpus_states,
    determinism_violations,
    diamond_violations,
    freshness_violations,
    leak_violations,
    orientation_violations,
)
from picheck.sos import Engine  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--depth", type=int, default=3)
    ap.add_argument("--cap", type=int, default=3)
    ap.add_argument("--models", nargs="*", default=None)
    args = ap.parse_args()
    eng = Engine(args.cap)
    checks = {
        "leak": lambda s, mv: leak_violations(s, mv),
        "freshness": lambda s, mv: freshness_violations(s, mv),
        "orientation": lambda s, mv: orientation_violations(s, mv),
        "determinism": lambda s, mv: determinism_violations(eng, s, mv),
        "diamond": lambda s, mv: diamond_violations(eng, s, mv),
    }
    counts = dict.fromkeys(checks, 0)
    t = time.perf_counter()
    n = 0
    for model, s, mv in corpus_states(args.depth, args.cap, args.models):
        n += 1
        for name, f in checks.items():
            bad = f(s, mv)
            if bad:
                counts[name] += 1
                print(f"{name} violation in {model}: {bad[0]}")
    print(f"{n} states, {time.perf_counter() - t:.1f}s, violations: {counts}")
    return 1 if any(counts.values()) else 0


if __name__ == "__main__":
    raise SystemExit(main())

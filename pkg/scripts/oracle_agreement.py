"""Compare static equivalence with the brute-force recipe search on random frames."""
import argparse
import pathlib
import random
import sys
import time

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "tests"))

from oracles import PRIVATE, distinguishing_test, mutate, random_frame  # noqa: E402
from picheck.terms import Frame, static_equivalent  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--frames", type=int, default=200)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--max-size", type=int, default=4)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    t = time.perf_counter()
    equivalent = disagreements = 0
    for _ in range(args.frames):
        a = random_frame(rng, rng.randint(1, args.max_size))
        b = mutate(rng, a)
        test = distinguishing_test(a, b)
        got = static_equivalent(Frame.of(a, PRIVATE), Frame.of(b, PRIVATE))
        equivalent += test is None
        if got != (test is None):
            disagreements += 1
            print("disagreement:", a, b, "test:", test)
    print(f"{args.frames} frames, {equivalent} equivalent, {disagreements} disagreements, "
          f"{time.perf_counter() - t:.1f}s")
    return 1 if disagreements else 0


if __name__ == "__main__":
    raise SystemExit(main())

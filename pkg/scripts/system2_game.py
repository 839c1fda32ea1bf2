"""Play the bounded-session simulation game, reporting each deepening round."""
import argparse
import time

from picheck.corpus import build_model, parse_model_name
from picheck.equiv import Game, GameConfig, replay_strategy, strategy_dot


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--model", default="bac-two")
    ap.add_argument("--relation", default="i-sim")
    ap.add_argument("--depth", type=int, default=14)
    ap.add_argument("--dot", metavar="FILE", help="write the strategy as DOT")
    args = ap.parse_args()

    a = build_model(parse_model_name(args.model, "system"))
    b = build_model(parse_model_name(args.model, "spec"))
    cfg = GameConfig(args.relation, args.depth, 1)
    game = Game(a, b, cfg)
    root = game.root()
    t = time.perf_counter()
    for d in range(1, args.depth + 1):
        strat = game.spoiler_wins(root, None, d)
        print(f"depth {d:2}: {'spoiler wins' if strat else 'duplicator survives'}"
              f"  {time.perf_counter() - t:7.1f}s  {len(game.memo)} positions", flush=True)
        if strat is not None:
            print("\n".join(strat.lines()))
            print("replays:", replay_strategy(a, b, strat, cfg))
            if args.dot:
                with open(args.dot, "w", encoding="utf-8") as fh:
                    fh.write(strategy_dot(strat))
            return 0
    print("related up to the bound")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

"""Model checking and bounded equivalence games for the applied pi-calculus with locations."""

__version__ = "0.1.0"

from .equiv import GameConfig, play_game, replay_strategy
from .logic import CheckBudget, check, check_fm, check_hpfm, parse_formula
from .procs import parse_process, pretty_ext
from .terms import parse_message, static_equivalent

__all__ = [
    "CheckBudget",
    "GameConfig",
    "check",
    "check_fm",
    "check_hpfm",
    "parse_formula",
    "parse_message",
    "parse_process",
    "play_game",
    "pretty_ext",
    "replay_strategy",
    "static_equivalent",
]

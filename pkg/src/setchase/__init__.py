"""Evolving tree game, small set chasing policies and lower-bound adversaries."""

from .constants import dk, xk
from .engine import Delete, Fork, GameOp, Grow, run_game, replay
from .tree import WeightedStemmedTree

__all__ = ["dk", "xk", "Delete", "Fork", "GameOp", "Grow", "run_game", "replay",
           "WeightedStemmedTree"]

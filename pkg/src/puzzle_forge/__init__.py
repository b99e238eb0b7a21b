"""Seeded logic-puzzle environments with verifiable rewards.

Seven puzzle families (sudoku, nonogram, cryptarithm, magic square, zebra,
graph connectivity, knights & knaves), each generated with a guaranteed
unique solution and a controllable difficulty level, plus a composite
transcript grader, a threshold-based curriculum scheduler, and CLI/protocol
tooling for RL trainers.
"""

from puzzle_forge.core import (
    GAME_IDS,
    MAX_LEVEL,
    Assignment,
    CheckResult,
    GameId,
    GenerationExhausted,
    PuzzleInstance,
    Rng,
    ValidationError,
    instance_from_json,
    instance_to_json,
    mix,
    partial_consistent,
    rng_from_seed,
)

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "CheckResult",
    "GAME_IDS",
    "GameId",
    "GenerationExhausted",
    "MAX_LEVEL",
    "PuzzleInstance",
    "Rng",
    "ValidationError",
    "instance_from_json",
    "instance_to_json",
    "mix",
    "partial_consistent",
    "rng_from_seed",
]

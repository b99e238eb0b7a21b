"""Game registry: uniform generate / check_final / csp_model dispatch."""

from __future__ import annotations

from types import ModuleType

from ..core import Assignment, CheckResult, GameId, PuzzleInstance
from . import (
    cryptarithm,
    graph_connectivity,
    knights_knaves,
    magic_square,
    nonogram,
    sudoku,
    zebra,
)

_MODULES: dict[GameId, ModuleType] = {
    GameId.SUDOKU: sudoku,
    GameId.NONOGRAM: nonogram,
    GameId.CRYPTARITHM: cryptarithm,
    GameId.MAGIC_SQUARE: magic_square,
    GameId.ZEBRA: zebra,
    GameId.GRAPH_CONNECTIVITY: graph_connectivity,
    GameId.KNIGHTS_KNAVES: knights_knaves,
}


def module_for(game: GameId) -> ModuleType:
    return _MODULES[GameId(game)]


def generate_instance(game: GameId, level: int, seed: int) -> PuzzleInstance:
    mod = module_for(game)
    return mod.generate(mod.params_for_level(level), seed)


def check_final(instance: PuzzleInstance, answer: Assignment) -> CheckResult:
    return module_for(instance.game).check_final(instance, answer)


def csp_model(instance: PuzzleInstance):
    """Constraint model over the instance's clues, for independent
    uniqueness verification."""
    return module_for(instance.game).csp_model(instance)

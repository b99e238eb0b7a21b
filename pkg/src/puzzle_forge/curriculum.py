"""Difficulty tracking: windowed accuracies and threshold advancement.

Each game carries its own level and a ring buffer of the most recent
episode results. When a full window clears both accuracy thresholds the
game moves up one level and the buffer resets, so the next window
measures the new level from scratch. Levels never move down.
"""

from __future__ import annotations

import collections
import json
from dataclasses import dataclass

from .core import GAME_IDS, MAX_LEVEL, GameId, Rng, ValidationError, canonical_json
from .reward import RewardBreakdown


@dataclass(frozen=True)
class CurriculumConfig:
    tau_int: float = 0.8
    tau_final: float = 0.7
    window: int = 200
    max_level: int = MAX_LEVEL
    games: tuple[GameId, ...] = GAME_IDS

    def __post_init__(self) -> None:
        for label, tau in (("tau_int", self.tau_int), ("tau_final", self.tau_final)):
            if not 0 < tau <= 1:
                raise ValidationError(f"{label} must be in (0, 1], got {tau}")
        if self.window < 10:
            raise ValidationError(f"window must be >= 10, got {self.window}")
        if self.max_level < 1:
            raise ValidationError(f"max_level must be >= 1, got {self.max_level}")
        if not self.games:
            raise ValidationError("games must be non-empty")
        if len(set(self.games)) != len(self.games):
            raise ValidationError("games must be distinct")


class CurriculumState:
    """Single-writer mutable state; grading may fan out, recording may not."""

    def __init__(self, config: CurriculumConfig) -> None:
        self.levels: dict[GameId, int] = {g: 1 for g in config.games}
        self.buffers: dict[GameId, collections.deque] = {
            g: collections.deque(maxlen=config.window) for g in config.games
        }

    def all_at_max(self, config: CurriculumConfig) -> bool:
        return all(self.levels[g] >= config.max_level for g in config.games)


def record_episode(
    state: CurriculumState, game: GameId, breakdown: RewardBreakdown
) -> None:
    """Append (mean step accuracy, final hit) to the game's window."""
    state.buffers[game].append(
        (breakdown.step_accuracy(), float(breakdown.r_final))
    )


def windowed_means(
    state: CurriculumState, game: GameId
) -> tuple[float, float, int]:
    """(A_int, A_final, episodes) over the current buffer contents."""
    buf = state.buffers[game]
    if not buf:
        return (0.0, 0.0, 0)
    a_int = sum(s for s, _ in buf) / len(buf)
    a_final = sum(f for _, f in buf) / len(buf)
    return (a_int, a_final, len(buf))


def maybe_advance(
    state: CurriculumState, game: GameId, config: CurriculumConfig
) -> tuple[int, bool]:
    """Advance one level when a full window clears both thresholds.

    Partial buffers are a no-op, passing at the top level stays there,
    and nothing ever demotes.
    """
    level = state.levels[game]
    buf = state.buffers[game]
    if len(buf) < config.window:
        return (level, False)
    a_int, a_final, _ = windowed_means(state, game)
    if a_int >= config.tau_int and a_final >= config.tau_final:
        if level < config.max_level:
            state.levels[game] = level + 1
            buf.clear()
            return (level + 1, True)
    return (level, False)


def sample_task(
    state: CurriculumState, config: CurriculumConfig, rng: Rng
) -> tuple[GameId, int]:
    """Uniform draw over the configured games at their current levels."""
    if len(config.games) == 1:
        game = config.games[0]
    else:
        game = config.games[rng.next_below(len(config.games))]
    return (game, state.levels[game])


def state_to_json(state: CurriculumState) -> str:
    return canonical_json(
        {
            "levels": {g.value: d for g, d in state.levels.items()},
            "buffers": {
                g.value: [[s, f] for s, f in buf]
                for g, buf in state.buffers.items()
            },
        }
    )


def state_from_json(text: str, config: CurriculumConfig) -> CurriculumState:
    try:
        payload = json.loads(text)
        state = CurriculumState(config)
        for g in config.games:
            state.levels[g] = int(payload["levels"][g.value])
            if not 1 <= state.levels[g] <= config.max_level:
                raise ValidationError(f"level out of range for {g.value}")
            for s, f in payload["buffers"][g.value]:
                state.buffers[g].append((float(s), float(f)))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"bad checkpoint: {exc}") from exc
    return state

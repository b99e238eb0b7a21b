"""Transcript parsing and composite reward computation.

A transcript earns three kinds of reward: a format component for every
well-formed step line, an intermediate component for steps whose
assignment agrees with the stored solution, and a single binary final
component for the answer block. The cumulative figure sums all three;
the discounted return covers only the per-step components so callers
can place the final reward wherever their objective wants it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from . import games
from .core import (
    ANSWER_CLOSE,
    ANSWER_OPEN,
    GameId,
    PuzzleInstance,
    STEP_MARKER,
    ValidationError,
    partial_consistent,
)


@dataclass(frozen=True)
class RewardConfig:
    """Per-game grading knobs. Weights bound each step component."""

    game: GameId
    gamma: float = 1.0
    fmt_weight: float = 1.0
    int_weight: float = 1.0
    step_marker: str = STEP_MARKER
    answer_open: str = ANSWER_OPEN
    answer_close: str = ANSWER_CLOSE
    # divide step rewards by the step count so padding cannot farm reward
    normalize_steps: bool = False

    def __post_init__(self) -> None:
        if not 0 < self.gamma <= 1:
            raise ValidationError(f"gamma must be in (0, 1], got {self.gamma}")
        for label, w in (("fmt", self.fmt_weight), ("int", self.int_weight)):
            if not 0 <= w <= 1:
                raise ValidationError(f"{label}_weight must be in [0, 1], got {w}")
        if not self.step_marker or not self.answer_open or not self.answer_close:
            raise ValidationError("markers must be non-empty")


@dataclass(frozen=True)
class Step:
    raw: str
    var: str | None
    value: str | None
    malformed: bool


@dataclass(frozen=True)
class Transcript:
    steps: tuple[Step, ...]
    final_block: str | None
    raw: str


@dataclass(frozen=True)
class RewardBreakdown:
    per_step: tuple[tuple[float, float], ...]
    r_final: int
    cumulative: float
    discounted_return: float

    def step_accuracy(self) -> float:
        """Fraction of steps whose intermediate component landed.

        Zero-step transcripts score 0 by convention: silence must not
        look like competence to the difficulty tracker.
        """
        if not self.per_step:
            return 0.0
        hits = sum(1 for _, r_int in self.per_step if r_int > 0)
        return hits / len(self.per_step)


def _parse_step_line(line: str, marker: str) -> Step:
    rest = line[len(marker):].strip()
    tokens = rest.split()
    if len(tokens) != 1 or "=" not in tokens[0]:
        return Step(raw=line, var=None, value=None, malformed=True)
    var, value = tokens[0].split("=", 1)
    if not var or not value:
        return Step(raw=line, var=None, value=None, malformed=True)
    return Step(raw=line, var=var, value=value, malformed=False)


def parse_transcript(raw: str, config: RewardConfig) -> Transcript:
    """Total parse: malformed step lines become flagged steps, not errors."""
    steps = [
        _parse_step_line(line, config.step_marker)
        for line in raw.splitlines()
        if line.startswith(config.step_marker)
    ]
    final_block = None
    start = raw.find(config.answer_open)
    if start >= 0:
        start += len(config.answer_open)
        end = raw.find(config.answer_close, start)
        if end >= 0:
            final_block = raw[start:end]
    return Transcript(steps=tuple(steps), final_block=final_block, raw=raw)


def parse_final(block: str) -> dict[str, str] | None:
    """Semicolon-separated var=value pairs; None when any pair is broken."""
    answer: dict[str, str] = {}
    for segment in block.split(";"):
        segment = segment.strip()
        if not segment:
            continue
        if "=" not in segment:
            return None
        var, value = segment.split("=", 1)
        var, value = var.strip(), value.strip()
        if not var:
            return None
        answer[var] = value
    return answer


def score_step(
    step: Step, instance: PuzzleInstance, config: RewardConfig
) -> tuple[float, float]:
    """(r_fmt, r_int); the intermediate component never lands alone."""
    if step.malformed or step.var not in instance.solution:
        return (0.0, 0.0)
    r_fmt = config.fmt_weight
    assert step.value is not None
    ok = partial_consistent({step.var: step.value}, instance.solution)
    r_int = config.int_weight if ok else 0.0
    return (r_fmt, r_int)


def score_final(
    transcript: Transcript, instance: PuzzleInstance, config: RewardConfig
) -> int:
    del config  # markers were consumed at parse time
    if transcript.final_block is None:
        return 0
    answer = parse_final(transcript.final_block)
    if answer is None:
        return 0
    return 1 if games.check_final(instance, answer) else 0


def cumulative_reward(
    per_step: list[tuple[float, float]] | tuple[tuple[float, float], ...],
    r_final: int,
) -> float:
    return sum(r_fmt + r_int for r_fmt, r_int in per_step) + r_final


def discounted_return(per_step_totals: list[float], gamma: float) -> float:
    if not 0 < gamma <= 1:
        raise ValidationError(f"gamma must be in (0, 1], got {gamma}")
    total = 0.0
    weight = 1.0
    for r in per_step_totals:
        total += weight * r
        weight *= gamma
    return total


def grade(raw: str, instance: PuzzleInstance, config: RewardConfig) -> RewardBreakdown:
    """Parse and score one transcript against one instance."""
    if config.game != instance.game:
        raise ValidationError(
            f"config is for {config.game}, instance is {instance.game}"
        )
    transcript = parse_transcript(raw, config)
    per_step = [score_step(s, instance, config) for s in transcript.steps]
    if config.normalize_steps and per_step:
        t = len(per_step)
        per_step = [(f / t, i / t) for f, i in per_step]
    r_final = score_final(transcript, instance, config)
    return RewardBreakdown(
        per_step=tuple(per_step),
        r_final=r_final,
        cumulative=cumulative_reward(per_step, r_final),
        discounted_return=discounted_return(
            [f + i for f, i in per_step], config.gamma
        ),
    )


def grade_with(
    configs: Mapping[GameId, RewardConfig],
    raw: str,
    instance: PuzzleInstance,
) -> RewardBreakdown:
    """Grade using exactly one config, looked up by the instance's game."""
    return grade(raw, instance, configs[instance.game])


def default_configs(
    gamma: float = 1.0, **overrides
) -> dict[GameId, RewardConfig]:
    return {
        game: RewardConfig(game=game, gamma=gamma, **overrides)
        for game in GameId
    }


def grading_record(
    instance: PuzzleInstance, breakdown: RewardBreakdown, config: RewardConfig
) -> dict:
    """Wire shape shared by the grading report and the serve protocol."""
    return {
        "game": instance.game.value,
        "seed": instance.seed,
        "level": instance.level,
        "per_step": [[f, i] for f, i in breakdown.per_step],
        "r_final": breakdown.r_final,
        "cumulative": breakdown.cumulative,
        "discounted_return": breakdown.discounted_return,
        "gamma": config.gamma,
    }

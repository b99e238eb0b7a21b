"""Scripted stand-in policies so the closed loop is testable end to end.

Each agent maps (instance, seed) to a transcript string and is a pure
function of those two inputs. The oracle emits every solution entry as
a step and then the correct answer block; noisy corrupts steps and the
final with fixed probabilities; random answers from the value domains
without looking at the solution; silent says nothing.
"""

from __future__ import annotations

from typing import Callable

from . import games
from .core import (
    ANSWER_CLOSE,
    ANSWER_OPEN,
    PuzzleInstance,
    STEP_MARKER,
    ValidationError,
    mix,
    rng_from_seed,
)

Agent = Callable[[PuzzleInstance, int], str]

_SALT = 0xA9E27
_PROB_SCALE = 1 << 20


def _agent_rng(instance: PuzzleInstance, seed: int):
    return rng_from_seed(mix(mix(instance.seed, _SALT), seed))


def _final_block(answer: dict[str, str]) -> str:
    body = "; ".join(f"{k}={answer[k]}" for k in sorted(answer))
    return f"{ANSWER_OPEN}{body}{ANSWER_CLOSE}"


def _transcript(steps: dict[str, str], answer: dict[str, str]) -> str:
    lines = [f"{STEP_MARKER}{k}={steps[k]}" for k in sorted(steps)]
    lines.append(_final_block(answer))
    return "\n".join(lines)


def oracle_transcript(instance: PuzzleInstance, seed: int = 0) -> str:
    del seed  # the oracle has nothing to randomize
    return _transcript(dict(instance.solution), dict(instance.solution))


def silent_transcript(instance: PuzzleInstance, seed: int = 0) -> str:
    del instance, seed
    return ""


def noisy_transcript(
    instance: PuzzleInstance, seed: int, epsilon: float, delta: float
) -> str:
    """Steps wrong with probability epsilon, final wrong with delta.

    A corrupted value stays a well-formed token, so the format reward
    still lands while the intermediate one misses.
    """
    rng = _agent_rng(instance, seed)
    eps_bar = int(epsilon * _PROB_SCALE)
    delta_bar = int(delta * _PROB_SCALE)
    steps = {}
    for var in sorted(instance.solution):
        value = instance.solution[var]
        if rng.next_below(_PROB_SCALE) < eps_bar:
            value = value + "?"
        steps[var] = value
    answer = dict(instance.solution)
    if rng.next_below(_PROB_SCALE) < delta_bar:
        victim = sorted(answer)[rng.next_below(len(answer))]
        answer[victim] = answer[victim] + "?"
    return _transcript(steps, answer)


def random_transcript(instance: PuzzleInstance, seed: int) -> str:
    """Uniform draws from each variable's value domain, solution unseen."""
    rng = _agent_rng(instance, seed)
    model = games.csp_model(instance)
    domains = dict(model.variables)
    answer = {}
    for var in sorted(instance.solution):
        answer[var] = rng.choice(list(domains[var]))
    return _transcript(answer, answer)


def make_agent(kind: str, epsilon: float = 0.5, delta: float = 0.5) -> Agent:
    if kind == "oracle":
        return oracle_transcript
    if kind == "silent":
        return silent_transcript
    if kind == "random":
        return random_transcript
    if kind == "noisy":
        if not 0 <= epsilon <= 1 or not 0 <= delta <= 1:
            raise ValidationError("noise rates must be in [0, 1]")
        return lambda instance, seed: noisy_transcript(
            instance, seed, epsilon, delta
        )
    raise ValidationError(f"unknown agent kind {kind!r}")

"""Shared domain types, seeded randomness, and canonical instance serialization."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Sequence

MASK64 = (1 << 64) - 1
MAX_LEVEL = 5

# Assignments map a variable id (game-specific namespace, e.g. "R3C5",
# "color:red", "S") to a value string (e.g. "7", "2", "9").
Assignment = dict[str, str]


class GameId(str, enum.Enum):
    SUDOKU = "sudoku"
    NONOGRAM = "nonogram"
    CRYPTARITHM = "cryptarithm"
    MAGIC_SQUARE = "magic_square"
    ZEBRA = "zebra"
    GRAPH_CONNECTIVITY = "graph_connectivity"
    KNIGHTS_KNAVES = "knights_knaves"

    def __str__(self) -> str:
        return self.value


GAME_IDS = tuple(GameId)


class ValidationError(ValueError):
    """An instance or request violates a structural invariant."""


class GenerationExhausted(RuntimeError):
    """A generator ran out of attempts before satisfying its constraints."""

    def __init__(self, game: str, seed: int, detail: str):
        super().__init__(f"{game} generation exhausted (seed={seed}): {detail}")
        self.game = game
        self.seed = seed
        self.detail = detail


@dataclass(frozen=True)
class CheckResult:
    """Boolean verdict plus optional diagnostics; truthiness follows `ok`."""

    ok: bool
    diagnostics: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.ok

    @staticmethod
    def passed() -> "CheckResult":
        return CheckResult(True)

    @staticmethod
    def failed(*diagnostics: str) -> "CheckResult":
        return CheckResult(False, tuple(diagnostics))


# ---------------------------------------------------------------------------
# Deterministic randomness (splitmix64)
# ---------------------------------------------------------------------------

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _mix64(z: int) -> int:
    z = (z ^ (z >> 30)) * _MIX1 & MASK64
    z = (z ^ (z >> 27)) * _MIX2 & MASK64
    return z ^ (z >> 31)


def mix(seed: int, n: int) -> int:
    """Derive a child seed from (seed, n); pure 64-bit function."""
    return _mix64((seed & MASK64) ^ _mix64((n & MASK64) + _GOLDEN))


class Rng:
    """splitmix64 stream; identical seeds yield identical draws on any platform.

    Generation paths draw only integers (next_u64 / next_below / shuffle),
    never floats, so instance bytes are bit-exact across builds.
    """

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & MASK64
        return _mix64(self._state)

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n), unbiased via rejection."""
        if n <= 0:
            raise ValueError("next_below requires n >= 1")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] inclusive."""
        if hi < lo:
            raise ValueError("randint requires lo <= hi")
        return lo + self.next_below(hi - lo + 1)

    def shuffle(self, seq: list) -> None:
        """In-place Fisher-Yates."""
        for i in range(len(seq) - 1, 0, -1):
            j = self.next_below(i + 1)
            seq[i], seq[j] = seq[j], seq[i]

    def choice(self, seq: Sequence):
        if not seq:
            raise ValueError("choice from empty sequence")
        return seq[self.next_below(len(seq))]

    def sample(self, seq: Sequence, k: int) -> list:
        """k distinct elements, order randomized (partial Fisher-Yates)."""
        if not 0 <= k <= len(seq):
            raise ValueError("sample size out of range")
        pool = list(seq)
        for i in range(k):
            j = i + self.next_below(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]


def rng_from_seed(seed: int) -> Rng:
    return Rng(seed)


# ---------------------------------------------------------------------------
# Transcript grammar shared by prompts and the grader
# ---------------------------------------------------------------------------

STEP_MARKER = "STEP "
ANSWER_OPEN = "<answer>"
ANSWER_CLOSE = "</answer>"

PROMPT_FOOTER = (
    "Report your reasoning one assignment per line, each line formatted as\n"
    "STEP <variable>=<value>\n"
    "and finish with the complete answer between markers, entries separated "
    "by semicolons:\n"
    "<answer><variable>=<value>; <variable>=<value>; ...</answer>"
)


# ---------------------------------------------------------------------------
# Puzzle instances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PuzzleInstance:
    """One generated puzzle with its hidden unique solution."""

    game: GameId
    level: int
    seed: int
    prompt: str
    clues: dict
    solution: Assignment
    metadata: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.game not in GAME_IDS:
            raise ValidationError(f"unknown game {self.game!r}")
        if not 1 <= self.level <= MAX_LEVEL:
            raise ValidationError(
                f"level {self.level} outside [1, {MAX_LEVEL}]"
            )
        if not 0 <= self.seed <= MASK64:
            raise ValidationError("seed must fit in 64 bits")
        if not self.solution:
            raise ValidationError("solution must be non-empty")
        for k, v in self.solution.items():
            if not isinstance(k, str) or not isinstance(v, str):
                raise ValidationError("solution entries must be str -> str")
        if not isinstance(self.prompt, str) or not self.prompt:
            raise ValidationError("prompt must be non-empty text")


def canonical_json(payload) -> str:
    """UTF-8 JSON with sorted keys and no insignificant whitespace."""
    return json.dumps(
        payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False
    )


def instance_to_json(instance: PuzzleInstance) -> str:
    instance.validate()
    return canonical_json(
        {
            "game": instance.game.value,
            "level": instance.level,
            "seed": instance.seed,
            "prompt": instance.prompt,
            "clues": instance.clues,
            "solution": instance.solution,
            "metadata": instance.metadata,
        }
    )


def instance_from_json(text: str) -> PuzzleInstance:
    raw = json.loads(text)
    try:
        instance = PuzzleInstance(
            game=GameId(raw["game"]),
            level=raw["level"],
            seed=raw["seed"],
            prompt=raw["prompt"],
            clues=raw["clues"],
            solution=raw["solution"],
            metadata=raw.get("metadata", {}),
        )
    except (KeyError, ValueError) as exc:
        raise ValidationError(f"malformed instance JSON: {exc}") from exc
    instance.validate()
    return instance


def partial_consistent(partial: Assignment, solution: Assignment) -> CheckResult:
    """True iff every entry of `partial` appears in `solution` unchanged.

    With uniqueness guaranteed, a partial assignment extends to a solution
    exactly when it is a subset of the one solution, so this test is exact.
    Unknown variable ids yield a failed result with a diagnostic, never an
    exception.
    """
    diagnostics = []
    ok = True
    for var, value in partial.items():
        expected = solution.get(var)
        if expected is None:
            diagnostics.append(f"unknown variable {var!r}")
            ok = False
        elif expected != value:
            ok = False
    return CheckResult(ok, tuple(diagnostics))

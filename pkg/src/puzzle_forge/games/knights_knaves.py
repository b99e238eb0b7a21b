"""Truth-teller/liar puzzles: statement sampling, exhaustive uniqueness."""

from __future__ import annotations

import string
from dataclasses import dataclass

from ..core import (
    PROMPT_FOOTER,
    Assignment,
    CheckResult,
    GameId,
    GenerationExhausted,
    PuzzleInstance,
    mix,
    rng_from_seed,
)
from ..csp import CspModel, custom_predicate

CHARACTERS = {1: 2, 2: 3, 3: 4, 4: 5, 5: 6}
MAX_DEPTH = {1: 1, 2: 1, 3: 2, 4: 2, 5: 3}
STATEMENT_BUDGET = 30
_SALT = 0x55A91

KNIGHT = "knight"
KNAVE = "knave"


@dataclass(frozen=True)
class KKParams:
    level: int

    @property
    def characters(self) -> int:
        return CHARACTERS[self.level]

    @property
    def max_depth(self) -> int:
        return MAX_DEPTH[self.level]


def params_for_level(level: int) -> KKParams:
    return KKParams(level=level)


def evaluate(body: dict, assignment: Assignment) -> bool:
    """Standard boolean semantics over the statement tree."""
    if "atom" in body:
        char, kind = body["atom"]
        val = assignment.get(char)
        if val is None:
            raise KeyError(f"character {char!r} not assigned")
        return val == kind
    if "not" in body:
        return not evaluate(body["not"], assignment)
    if "and" in body:
        left, right = body["and"]
        return evaluate(left, assignment) and evaluate(right, assignment)
    if "or" in body:
        left, right = body["or"]
        return evaluate(left, assignment) or evaluate(right, assignment)
    if "implies" in body:
        left, right = body["implies"]
        return (not evaluate(left, assignment)) or evaluate(right, assignment)
    raise ValueError(f"malformed statement body: {body!r}")


def render_body(body: dict) -> str:
    if "atom" in body:
        char, kind = body["atom"]
        return f"{char} is a {kind}"
    if "not" in body:
        return f"it is not the case that {_wrap(body['not'])}"
    if "and" in body:
        left, right = body["and"]
        return f"{_wrap(left)} and {_wrap(right)}"
    if "or" in body:
        left, right = body["or"]
        return f"either {_wrap(left)} or {_wrap(right)}"
    left, right = body["implies"]
    return f"if {_wrap(left)} then {_wrap(right)}"


def _wrap(body: dict) -> str:
    text = render_body(body)
    return text if "atom" in body else f"({text})"


def referenced(body: dict) -> set[str]:
    if "atom" in body:
        return {body["atom"][0]}
    if "not" in body:
        return referenced(body["not"])
    key = "and" if "and" in body else ("or" if "or" in body else "implies")
    left, right = body[key]
    return referenced(left) | referenced(right)


def _sample_body(rng, chars: list[str], depth: int, allow_implies: bool) -> dict:
    if depth == 0:
        return {
            "atom": [
                chars[rng.next_below(len(chars))],
                KNIGHT if rng.next_below(2) else KNAVE,
            ]
        }
    ops = ["not", "and", "or"] + (["implies"] if allow_implies else [])
    op = ops[rng.next_below(len(ops))]
    if op == "not":
        return {"not": _sample_body(rng, chars, depth - 1, allow_implies)}
    deep = _sample_body(rng, chars, depth - 1, allow_implies)
    shallow = _sample_body(
        rng, chars, rng.next_below(depth), allow_implies
    )
    pair = [deep, shallow] if rng.next_below(2) else [shallow, deep]
    return {op: pair}


def consistent_assignments(
    chars: list[str], statements: list[dict], limit: int | None = None
) -> list[dict]:
    """All speaker-consistent truth assignments, exhaustively enumerated."""
    out = []
    n = len(chars)
    for bits in range(1 << n):
        assign = {
            c: KNIGHT if bits >> i & 1 else KNAVE for i, c in enumerate(chars)
        }
        ok = True
        for st in statements:
            truthful = assign[st["speaker"]] == KNIGHT
            if evaluate(st["ast"], assign) != truthful:
                ok = False
                break
        if ok:
            out.append(assign)
            if limit is not None and len(out) >= limit:
                return out
    return out


def generate(params: KKParams, seed: int) -> PuzzleInstance:
    n = params.characters
    chars = list(string.ascii_uppercase[:n])
    rng = rng_from_seed(mix(seed, _SALT))
    truth = {c: KNIGHT if rng.next_below(2) else KNAVE for c in chars}
    statements: list[dict] = []
    seen: set[str] = set()
    while len(statements) < STATEMENT_BUDGET:
        speaker = chars[rng.next_below(n)]
        depth = rng.next_below(params.max_depth + 1)
        body = _sample_body(rng, chars, depth, params.max_depth >= 2)
        truthful = truth[speaker] == KNIGHT
        if evaluate(body, truth) != truthful:
            continue
        text = f"{speaker} says: {render_body(body)}."
        if text in seen:
            continue
        seen.add(text)
        statements.append({"speaker": speaker, "ast": body, "text": text})
        if len(consistent_assignments(chars, statements, limit=2)) == 1:
            return _build_instance(params, seed, chars, statements, truth)
    raise GenerationExhausted(
        GameId.KNIGHTS_KNAVES.value,
        seed,
        f"not unique after {STATEMENT_BUDGET} statements",
    )


def _build_instance(params, seed, chars, statements, truth) -> PuzzleInstance:
    lines = [f"  {st['text']}" for st in statements]
    prompt = (
        f"On an island every inhabitant is either a knight, who always "
        f"tells the truth, or a knave, who always lies. You meet "
        f"{len(chars)} inhabitants: {', '.join(chars)}.\n\n"
        + "\n".join(lines)
        + "\n\nDetermine each inhabitant's type, assigning the value knight "
        "or knave.\n\n" + PROMPT_FOOTER
    )
    return PuzzleInstance(
        game=GameId.KNIGHTS_KNAVES,
        level=params.level,
        seed=seed,
        prompt=prompt,
        clues={"characters": chars, "statements": statements},
        solution=dict(truth),
        metadata={"statement_count": len(statements)},
    )


def check_final(instance: PuzzleInstance, answer: Assignment) -> CheckResult:
    chars = instance.clues["characters"]
    for c in chars:
        v = answer.get(c)
        if v is None:
            return CheckResult.failed(f"missing character {c}")
        if v not in (KNIGHT, KNAVE):
            return CheckResult.failed(f"character {c} has unknown type {v!r}")
    for st in instance.clues["statements"]:
        truthful = answer[st["speaker"]] == KNIGHT
        if evaluate(st["ast"], answer) != truthful:
            return CheckResult.failed(
                f"statement inconsistent with types: {st['text']}"
            )
    return CheckResult.passed()


def csp_model(instance: PuzzleInstance) -> CspModel:
    chars = instance.clues["characters"]
    variables = [(c, (KNAVE, KNIGHT)) for c in chars]
    cons = []
    for st in instance.clues["statements"]:
        scope = sorted(referenced(st["ast"]) | {st["speaker"]})
        ast = st["ast"]
        speaker = st["speaker"]

        def holds(assign: dict, ast=ast, speaker=speaker) -> bool:
            return evaluate(ast, assign) == (assign[speaker] == KNIGHT)

        cons.append(custom_predicate(scope, "statement_consistent", holds))
    return CspModel(variables, cons)

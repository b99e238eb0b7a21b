"""Letter-digit addition puzzles with enforced unique injective mappings."""

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
from ..csp import CspModel, all_different, linear_sum_eq, table

# unique-letter targets per level; levels 1-3 add two words, 4-5 add three
LETTER_TARGETS = {1: (5, 6), 2: (7, 7), 3: (8, 8), 4: (9, 9), 5: (10, 10)}
ADDEND_COUNT = {1: 2, 2: 2, 3: 2, 4: 3, 5: 3}
WORD_LEN = (3, 7)
MAX_ATTEMPTS = 3000
_SALT = 0xC2A


@dataclass(frozen=True)
class CryptarithmParams:
    level: int

    @property
    def addends(self) -> int:
        return ADDEND_COUNT[self.level]

    @property
    def letter_band(self) -> tuple[int, int]:
        return LETTER_TARGETS[self.level]


def params_for_level(level: int) -> CryptarithmParams:
    return CryptarithmParams(level=level)


def count_mappings(addends: list[str], result: str, limit: int = 2) -> int:
    """Injective letter->digit mappings satisfying the sum, capped at limit.

    Column-wise DFS with carries; leading letters pruned from 0 as soon as
    they are assigned.  Letters are remapped to array indices so the inner
    loop stays on flat lists.
    """
    words = addends + [result]
    letters = sorted({ch for w in words for ch in w})
    idx = {ch: i for i, ch in enumerate(letters)}
    leading = [False] * len(letters)
    for w in words:
        leading[idx[w[0]]] = True
    cols = []
    width = len(result)
    for i in range(width):
        add_idx = tuple(idx[w[len(w) - 1 - i]] for w in addends if i < len(w))
        res_idx = idx[result[len(result) - 1 - i]]
        cols.append((add_idx, res_idx))
    assign = [-1] * len(letters)
    used = [False] * 10
    found = 0

    def col(i: int, carry: int, k: int) -> bool:
        """True when the cap is reached."""
        nonlocal found
        if i == width:
            if carry == 0:
                found += 1
                return found >= limit
            return False
        add_idx, res_idx = cols[i]
        if k < len(add_idx):
            li = add_idx[k]
            if assign[li] >= 0:
                return col(i, carry, k + 1)
            lead = leading[li]
            for digit in range(10):
                if used[digit] or (digit == 0 and lead):
                    continue
                assign[li] = digit
                used[digit] = True
                stop = col(i, carry, k + 1)
                used[digit] = False
                assign[li] = -1
                if stop:
                    return True
            return False
        total = carry
        for li in add_idx:
            total += assign[li]
        digit, carry_out = total % 10, total // 10
        cur = assign[res_idx]
        if cur >= 0:
            if cur != digit:
                return False
            return col(i + 1, carry_out, 0)
        if used[digit] or (digit == 0 and leading[res_idx]):
            return False
        assign[res_idx] = digit
        used[digit] = True
        stop = col(i + 1, carry_out, 0)
        used[digit] = False
        assign[res_idx] = -1
        return stop

    col(0, 0, 0)
    return found


def _sample_numbers(rng, n_addends: int) -> list[int] | None:
    values = []
    for _ in range(n_addends):
        length = rng.randint(*WORD_LEN)
        lo = 10 ** (length - 1)
        values.append(lo + rng.next_below(9 * lo))
    if len(str(sum(values))) > WORD_LEN[1]:
        return None
    return values


def generate(params: CryptarithmParams, seed: int) -> PuzzleInstance:
    lo, hi = params.letter_band
    for attempt in range(MAX_ATTEMPTS):
        rng = rng_from_seed(mix(seed, _SALT + attempt))
        values = _sample_numbers(rng, params.addends)
        if values is None:
            continue
        total = sum(values)
        digits = sorted({ch for v in values + [total] for ch in str(v)})
        if not lo <= len(digits) <= hi:
            continue
        letters = rng.sample(string.ascii_uppercase, len(digits))
        to_letter = dict(zip(digits, letters))
        addends = ["".join(to_letter[ch] for ch in str(v)) for v in values]
        result = "".join(to_letter[ch] for ch in str(total))
        if count_mappings(addends, result, limit=2) != 1:
            continue
        solution = {to_letter[d]: d for d in digits}
        return _build_instance(params, seed, addends, result, solution)
    raise GenerationExhausted(
        GameId.CRYPTARITHM.value,
        seed,
        f"no unique puzzle with {lo}-{hi} letters in {MAX_ATTEMPTS} attempts",
    )


def _build_instance(params, seed, addends, result, solution) -> PuzzleInstance:
    equation = " + ".join(addends) + " = " + result
    prompt = (
        "Solve this cryptarithm. Each letter stands for a different digit "
        "0-9, the same digit everywhere it appears, and no number may start "
        "with 0. Make the addition true:\n\n"
        f"  {equation}\n\n" + PROMPT_FOOTER
    )
    return PuzzleInstance(
        game=GameId.CRYPTARITHM,
        level=params.level,
        seed=seed,
        prompt=prompt,
        clues={"addends": addends, "result": result},
        solution=solution,
        metadata={"letters": len(solution)},
    )


def check_final(instance: PuzzleInstance, answer: Assignment) -> CheckResult:
    addends = instance.clues["addends"]
    result = instance.clues["result"]
    letters = sorted({ch for w in addends + [result] for ch in w})
    extra = sorted(set(answer) - set(letters))
    if extra:
        return CheckResult.failed(f"unknown letters {extra}")
    digits = {}
    for ch in letters:
        v = answer.get(ch)
        if v is None:
            return CheckResult.failed(f"missing letter {ch}")
        if v not in tuple("0123456789"):
            return CheckResult.failed(f"letter {ch} has non-digit {v!r}")
        digits[ch] = v
    if len(set(digits.values())) != len(digits):
        return CheckResult.failed("two letters share a digit")
    for w in addends + [result]:
        if digits[w[0]] == "0":
            return CheckResult.failed(f"leading zero in {w}")
    nums = [int("".join(digits[ch] for ch in w)) for w in addends]
    res = int("".join(digits[ch] for ch in result))
    if sum(nums) != res:
        return CheckResult.failed("arithmetic does not hold")
    return CheckResult.passed()


def csp_model(instance: PuzzleInstance) -> CspModel:
    """Column model with carry variables; letters keep a uniform 0-9 domain
    so the all_different group stays a permutation group at ten letters."""
    addends = instance.clues["addends"]
    result = instance.clues["result"]
    letters = sorted({ch for w in addends + [result] for ch in w})
    leading = sorted({w[0] for w in addends + [result]})
    width = len(result)
    dom10 = tuple(str(d) for d in range(10))
    max_carry = len(addends)  # sum of k digits + carry < 10(k+1)
    carry_dom = tuple(str(c) for c in range(max_carry))
    variables: list[tuple[str, tuple[str, ...]]] = [
        (ch, dom10) for ch in letters
    ]
    cons = [all_different(letters)]
    for ch in leading:
        cons.append(table([ch], [(str(d),) for d in range(1, 10)]))
    prev_carry = None
    for i in range(width):
        coeffs: dict[str, int] = {}
        for w in addends:
            if i < len(w):
                ch = w[len(w) - 1 - i]
                coeffs[ch] = coeffs.get(ch, 0) + 1
        res_letter = result[len(result) - 1 - i]
        coeffs[res_letter] = coeffs.get(res_letter, 0) - 1
        scope = [ch for ch, k in coeffs.items() if k != 0]
        weights = [coeffs[ch] for ch in scope]
        if prev_carry is not None:
            scope.append(prev_carry)
            weights.append(1)
        if i < width - 1:
            out = f"_carry{i + 1}"
            variables.append((out, carry_dom))
            scope.append(out)
            weights.append(-10)
            prev_carry = out
        else:
            prev_carry = None
        cons.append(linear_sum_eq(scope, weights, 0))
    return CspModel(variables, cons)

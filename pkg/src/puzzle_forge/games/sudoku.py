"""9x9 Sudoku generation (backtracking fill, clue removal under uniqueness)."""

from __future__ import annotations

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
from ..csp import CspModel, all_different, table

CLUE_BANDS = {1: (40, 45), 2: (34, 39), 3: (28, 33), 4: (25, 27), 5: (22, 24)}
MAX_RESTARTS = 20
_SALT = 0x5D0

DIGITS = tuple(str(d) for d in range(1, 10))
_ALL = (1 << 9) - 1


@dataclass(frozen=True)
class SudokuParams:
    level: int

    @property
    def clue_band(self) -> tuple[int, int]:
        return CLUE_BANDS[self.level]


def params_for_level(level: int) -> SudokuParams:
    return SudokuParams(level=level)


def _box(r: int, c: int) -> int:
    return (r // 3) * 3 + c // 3


# flat-index coordinate tables for the counter's inner loop
_ROW = tuple(i // 9 for i in range(81))
_COL = tuple(i % 9 for i in range(81))
_BOX = tuple(_box(i // 9, i % 9) for i in range(81))


def _full_grid(rng) -> list[int]:
    """Complete grid via randomized backtracking; cells hold 1..9."""
    grid = [0] * 81
    rows = [0] * 9
    cols = [0] * 9
    boxes = [0] * 9
    orders = []
    for _ in range(81):
        order = list(range(9))
        rng.shuffle(order)
        orders.append(order)

    def place(i: int) -> bool:
        if i == 81:
            return True
        r, c = divmod(i, 9)
        b = _box(r, c)
        used = rows[r] | cols[c] | boxes[b]
        for d in orders[i]:
            bit = 1 << d
            if used & bit:
                continue
            grid[i] = d + 1
            rows[r] |= bit
            cols[c] |= bit
            boxes[b] |= bit
            if place(i + 1):
                return True
            rows[r] ^= bit
            cols[c] ^= bit
            boxes[b] ^= bit
        grid[i] = 0
        return False

    if not place(0):
        raise AssertionError("backtracking fill cannot fail on empty grid")
    return grid


def count_completions(
    cells: list[int], limit: int, forbid: tuple[int, int] | None = None
) -> int:
    """Number of completions of a partial grid (0 = blank), capped at limit.

    Bitmask DFS with most-constrained-cell ordering; this is the generator's
    fast inner loop, independent of the generic solver used for verification.
    forbid=(cell, digit) bans one digit at one blank, which lets the removal
    loop ask "is there a completion that differs here?" with limit=1.
    """
    rows = [0] * 9
    cols = [0] * 9
    boxes = [0] * 9
    blanks = []
    for i, v in enumerate(cells):
        r, c = divmod(i, 9)
        if v:
            bit = 1 << (v - 1)
            b = _box(r, c)
            if rows[r] & bit or cols[c] & bit or boxes[b] & bit:
                return 0
            rows[r] |= bit
            cols[c] |= bit
            boxes[b] |= bit
        else:
            blanks.append(i)
    ban_cell = ban_mask = -1
    if forbid is not None:
        ban_cell = forbid[0]
        ban_mask = 1 << (forbid[1] - 1)

    found = 0
    rws, cls, bxs = _ROW, _COL, _BOX

    def dfs(remaining: list[int]) -> bool:
        """Returns True when the cap is reached."""
        nonlocal found
        if not remaining:
            found += 1
            return found >= limit
        best_k = -1
        best_opts = 0
        best_n = 10
        for k, i in enumerate(remaining):
            opts = _ALL & ~(rows[rws[i]] | cols[cls[i]] | boxes[bxs[i]])
            if i == ban_cell:
                opts &= ~ban_mask
            n = opts.bit_count()
            if n == 0:
                return False
            if n < best_n:
                best_n = n
                best_k = k
                best_opts = opts
                if n == 1:
                    break
        i = remaining[best_k]
        # swap-pop instead of slicing; scan order shifts but exact counts
        # (all this caller ever uses) do not depend on branch order
        last = len(remaining) - 1
        remaining[best_k] = remaining[last]
        del remaining[last]
        r = rws[i]
        c = cls[i]
        b = bxs[i]
        opts = best_opts
        stop = False
        while opts:
            bit = opts & -opts
            opts ^= bit
            rows[r] |= bit
            cols[c] |= bit
            boxes[b] |= bit
            stop = dfs(remaining)
            rows[r] ^= bit
            cols[c] ^= bit
            boxes[b] ^= bit
            if stop:
                break
        if best_k == len(remaining):
            remaining.append(i)
        else:
            remaining.append(remaining[best_k])
            remaining[best_k] = i
        return stop

    dfs(blanks)
    return found


def generate(params: SudokuParams, seed: int) -> PuzzleInstance:
    lo, hi = params.clue_band
    for attempt in range(MAX_RESTARTS):
        rng = rng_from_seed(mix(seed, _SALT + attempt))
        solution_cells = _full_grid(rng)
        target = lo + rng.next_below(hi - lo + 1)
        cells = list(solution_cells)
        order = list(range(81))
        rng.shuffle(order)
        clue_count = 81
        for i in order:
            if clue_count == target:
                break
            saved = cells[i]
            cells[i] = 0
            # unique after removal iff no completion picks a different digit
            if count_completions(cells, limit=1, forbid=(i, saved)) == 0:
                clue_count -= 1
            else:
                cells[i] = saved
        if clue_count <= hi:
            return _build_instance(params, seed, cells, solution_cells)
    raise GenerationExhausted(
        GameId.SUDOKU.value, seed, f"no grid reached band [{lo},{hi}]"
    )


def _build_instance(params, seed, cells, solution_cells) -> PuzzleInstance:
    grid = [[cells[r * 9 + c] for c in range(9)] for r in range(9)]
    solution = {
        f"R{r + 1}C{c + 1}": str(solution_cells[r * 9 + c])
        for r in range(9)
        for c in range(9)
    }
    lines = [
        " ".join(str(grid[r][c]) if grid[r][c] else "." for c in range(9))
        for r in range(9)
    ]
    prompt = (
        "Solve this 9x9 Sudoku. Fill every cell with a digit 1-9 so each "
        "row, each column, and each 3x3 box contains all nine digits. "
        "Givens are shown, '.' marks a blank. Cell names are RrCc with "
        "row r and column c counted from 1 at the top left.\n\n"
        + "\n".join(lines)
        + "\n\n"
        + PROMPT_FOOTER
    )
    clue_count = sum(1 for row in grid for v in row if v)
    return PuzzleInstance(
        game=GameId.SUDOKU,
        level=params.level,
        seed=seed,
        prompt=prompt,
        clues={"grid": grid},
        solution=solution,
        metadata={"clue_count": clue_count},
    )


def check_final(instance: PuzzleInstance, answer: Assignment) -> CheckResult:
    grid = instance.clues["grid"]
    values = {}
    for r in range(1, 10):
        for c in range(1, 10):
            name = f"R{r}C{c}"
            v = answer.get(name)
            if v is None:
                return CheckResult.failed(f"missing cell {name}")
            if v not in DIGITS:
                return CheckResult.failed(f"cell {name} has non-digit {v!r}")
            values[(r, c)] = v
    for r in range(1, 10):
        for c in range(1, 10):
            given = grid[r - 1][c - 1]
            if given and values[(r, c)] != str(given):
                return CheckResult.failed(f"clue violated at R{r}C{c}")
    groups = []
    for r in range(1, 10):
        groups.append([(r, c) for c in range(1, 10)])
    for c in range(1, 10):
        groups.append([(r, c) for r in range(1, 10)])
    for br in (1, 4, 7):
        for bc in (1, 4, 7):
            groups.append(
                [(br + dr, bc + dc) for dr in range(3) for dc in range(3)]
            )
    for g in groups:
        seen = {values[cell] for cell in g}
        if len(seen) != 9:
            return CheckResult.failed("repeated digit in a row/column/box")
    return CheckResult.passed()


def csp_model(instance: PuzzleInstance) -> CspModel:
    grid = instance.clues["grid"]
    variables = []
    cons = []
    # clue cells keep the full domain plus a unary table pin, so every
    # all_different group stays a uniform permutation group
    for r in range(1, 10):
        for c in range(1, 10):
            variables.append((f"R{r}C{c}", DIGITS))
            given = grid[r - 1][c - 1]
            if given:
                cons.append(table([f"R{r}C{c}"], [(str(given),)]))
    for r in range(1, 10):
        cons.append(all_different([f"R{r}C{c}" for c in range(1, 10)]))
    for c in range(1, 10):
        cons.append(all_different([f"R{r}C{c}" for r in range(1, 10)]))
    for br in (1, 4, 7):
        for bc in (1, 4, 7):
            cons.append(
                all_different(
                    [
                        f"R{br + dr}C{bc + dc}"
                        for dr in range(3)
                        for dc in range(3)
                    ]
                )
            )
    return CspModel(variables, cons)

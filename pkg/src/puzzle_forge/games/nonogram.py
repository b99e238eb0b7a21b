"""NxN nonogram generation: random image, run-length clues, uniqueness.

The generator counts solutions with its own line-solver (per-line DP marking
plus branching); the csp_model route re-verifies independently through
table constraints.
"""

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
from ..csp import CspModel, table

SIZES = {1: 5, 2: 7, 3: 10, 4: 12, 5: 15}
DENSITY_PCT = (45, 60)  # inclusive percent bounds on filled cells
MAX_RESAMPLES = 400
_SALT = 0x400


@dataclass(frozen=True)
class NonogramParams:
    level: int

    @property
    def n(self) -> int:
        return SIZES[self.level]


def params_for_level(level: int) -> NonogramParams:
    return NonogramParams(level=level)


def run_lengths(row: list[int]) -> list[int]:
    """Maximal runs of 1s; an empty line is [0]."""
    runs = []
    current = 0
    for v in row:
        if v:
            current += 1
        elif current:
            runs.append(current)
            current = 0
    if current:
        runs.append(current)
    return runs or [0]


# ---------------------------------------------------------------------------
# Line DP: which cells can be 0 / can be 1 across all consistent fillings
# ---------------------------------------------------------------------------


def _line_options(clue: list[int], known: list[int]) -> tuple[int, int] | None:
    """(can0, can1) bitmasks over cell positions, or None if infeasible.

    known holds -1 (open), 0, or 1 per cell.
    """
    runs = [] if clue == [0] else clue
    n = len(known)
    k = len(runs)
    # fwd[j][i]: first j runs fit in cells [0, i) consistently
    fwd = [[False] * (n + 1) for _ in range(k + 1)]
    fwd[0][0] = True
    for i in range(1, n + 1):
        fwd[0][i] = fwd[0][i - 1] and known[i - 1] != 1
    for j in range(1, k + 1):
        r = runs[j - 1]
        for i in range(1, n + 1):
            if fwd[j][i - 1] and known[i - 1] != 1:
                fwd[j][i] = True
                continue
            # run j ends exactly at i-1
            s = i - r
            if s < 0:
                continue
            if any(known[t] == 0 for t in range(s, i)):
                continue
            if s == 0:
                fwd[j][i] = fwd[j - 1][0]
            else:
                fwd[j][i] = known[s - 1] != 1 and fwd[j - 1][s - 1]
    # bwd[j][i]: runs j.. fit in cells [i, n) consistently
    bwd = [[False] * (n + 2) for _ in range(k + 2)]
    bwd[k][n] = True
    for i in range(n - 1, -1, -1):
        bwd[k][i] = bwd[k][i + 1] and known[i] != 1
    for j in range(k - 1, -1, -1):
        r = runs[j]
        for i in range(n - 1, -1, -1):
            if known[i] != 1 and bwd[j][i + 1]:
                bwd[j][i] = True
                continue
            e = i + r
            if e > n:
                continue
            if any(known[t] == 0 for t in range(i, e)):
                continue
            if e == n:
                bwd[j][i] = bwd[j + 1][n]
            else:
                bwd[j][i] = known[e] != 1 and bwd[j + 1][e + 1]
    if not fwd[k][n]:
        return None
    can0 = 0
    can1 = 0
    for i in range(n):
        if known[i] != 1:
            for j in range(k + 1):
                if fwd[j][i] and bwd[j][i + 1]:
                    can0 |= 1 << i
                    break
    for j in range(k):
        r = runs[j]
        for s in range(0, n - r + 1):
            if any(known[t] == 0 for t in range(s, s + r)):
                continue
            left_ok = fwd[j][s] if s == 0 else (
                known[s - 1] != 1 and fwd[j][s - 1]
            )
            e = s + r
            right_ok = bwd[j + 1][e] if e == n else (
                known[e] != 1 and bwd[j + 1][e + 1]
            )
            if left_ok and right_ok:
                for t in range(s, e):
                    can1 |= 1 << t
    return can0, can1


def count_grid_solutions(
    n: int, rows: list[list[int]], cols: list[list[int]], limit: int = 2
) -> int:
    """Solutions of the clue set, capped at limit."""

    def propagate(state: list[int], seed_lines) -> bool:
        # worklist of line ids: rows are 0..n-1, columns are n..2n-1;
        # a line re-enters only when one of its cells was just forced,
        # and the fixpoint reached is order-independent
        queued = [False] * (2 * n)
        work = []
        for li in seed_lines:
            queued[li] = True
            work.append(li)
        while work:
            li = work.pop()
            queued[li] = False
            if li < n:
                r = li
                known = state[r * n : (r + 1) * n]
                opts = _line_options(rows[r], known)
                if opts is None:
                    return False
                can0, can1 = opts
                for c in range(n):
                    if known[c] != -1:
                        continue
                    z = can0 >> c & 1
                    o = can1 >> c & 1
                    if not z and not o:
                        return False
                    if z != o:
                        state[r * n + c] = 1 if o else 0
                        if not queued[n + c]:
                            queued[n + c] = True
                            work.append(n + c)
            else:
                c = li - n
                known = [state[r * n + c] for r in range(n)]
                opts = _line_options(cols[c], known)
                if opts is None:
                    return False
                can0, can1 = opts
                for r in range(n):
                    if known[r] != -1:
                        continue
                    z = can0 >> r & 1
                    o = can1 >> r & 1
                    if not z and not o:
                        return False
                    if z != o:
                        state[r * n + c] = 1 if o else 0
                        if not queued[r]:
                            queued[r] = True
                            work.append(r)
        return True

    found = 0

    def search(state: list[int], seed_lines) -> bool:
        nonlocal found
        if not propagate(state, seed_lines):
            return False
        try:
            pivot = state.index(-1)
        except ValueError:
            found += 1
            return found >= limit
        r, c = divmod(pivot, n)
        for v in (1, 0):
            child = list(state)
            child[pivot] = v
            # the parent was at fixpoint, so only the pivot's lines moved
            if search(child, (r, n + c)):
                return True
        return False

    search([-1] * (n * n), range(2 * n))
    return found


# ---------------------------------------------------------------------------
# generation
# ---------------------------------------------------------------------------


def generate(params: NonogramParams, seed: int) -> PuzzleInstance:
    n = params.n
    total = n * n
    lo = (DENSITY_PCT[0] * total + 99) // 100
    hi = DENSITY_PCT[1] * total // 100
    for attempt in range(MAX_RESAMPLES):
        rng = rng_from_seed(mix(seed, _SALT + attempt))
        fill = lo + rng.next_below(hi - lo + 1)
        chosen = rng.sample(range(total), fill)
        grid = [0] * total
        for i in chosen:
            grid[i] = 1
        rows = [run_lengths(grid[r * n : (r + 1) * n]) for r in range(n)]
        cols = [
            run_lengths([grid[r * n + c] for r in range(n)]) for c in range(n)
        ]
        if count_grid_solutions(n, rows, cols, limit=2) == 1:
            return _build_instance(params, seed, n, grid, rows, cols)
    raise GenerationExhausted(
        GameId.NONOGRAM.value,
        seed,
        f"no unique {n}x{n} image in {MAX_RESAMPLES} resamples",
    )


def _fmt_clues(clues: list[list[int]]) -> str:
    return "\n".join(
        f"  {i + 1}: " + " ".join(str(x) for x in line)
        for i, line in enumerate(clues)
    )


def _build_instance(params, seed, n, grid, rows, cols) -> PuzzleInstance:
    solution = {
        f"R{r + 1}C{c + 1}": str(grid[r * n + c])
        for r in range(n)
        for c in range(n)
    }
    prompt = (
        f"Solve this {n}x{n} nonogram. Mark each cell filled (1) or empty "
        "(0). The clue for a line lists the lengths of its maximal runs of "
        "filled cells in order; 0 means the line is empty. Cell names are "
        "RrCc counted from 1 at the top left.\n\n"
        f"Row clues:\n{_fmt_clues(rows)}\n"
        f"Column clues:\n{_fmt_clues(cols)}\n\n" + PROMPT_FOOTER
    )
    return PuzzleInstance(
        game=GameId.NONOGRAM,
        level=params.level,
        seed=seed,
        prompt=prompt,
        clues={"n": n, "rows": rows, "cols": cols},
        solution=solution,
        metadata={"filled": sum(grid)},
    )


def check_final(instance: PuzzleInstance, answer: Assignment) -> CheckResult:
    n = instance.clues["n"]
    grid = []
    for r in range(1, n + 1):
        row = []
        for c in range(1, n + 1):
            name = f"R{r}C{c}"
            v = answer.get(name)
            if v is None:
                return CheckResult.failed(f"missing cell {name}")
            if v not in ("0", "1"):
                return CheckResult.failed(f"cell {name} has non-binary {v!r}")
            row.append(int(v))
        grid.append(row)
    for r in range(n):
        if run_lengths(grid[r]) != instance.clues["rows"][r]:
            return CheckResult.failed(f"row {r + 1} runs differ from clue")
    for c in range(n):
        col = [grid[r][c] for r in range(n)]
        if run_lengths(col) != instance.clues["cols"][c]:
            return CheckResult.failed(f"column {c + 1} runs differ from clue")
    return CheckResult.passed()


def _patterns(clue: list[int], n: int) -> list[tuple[str, ...]]:
    runs = [] if clue == [0] else clue
    out: list[tuple[str, ...]] = []

    def rec(prefix: list[str], pos: int, j: int) -> None:
        if j == len(runs):
            out.append(tuple(prefix + ["0"] * (n - pos)))
            return
        r = runs[j]
        tail = sum(runs[j + 1 :]) + (len(runs) - j - 1)
        for s in range(pos, n - r - tail + 1):
            block = ["0"] * (s - pos) + ["1"] * r
            if j < len(runs) - 1:
                block.append("0")
                rec(prefix + block, s + r + 1, j + 1)
            else:
                rec(prefix + block, s + r, j + 1)

    rec([], 0, 0)
    return out


def csp_model(instance: PuzzleInstance) -> CspModel:
    n = instance.clues["n"]
    variables = [
        (f"R{r}C{c}", ("0", "1"))
        for r in range(1, n + 1)
        for c in range(1, n + 1)
    ]
    cons = []
    for r in range(1, n + 1):
        cons.append(
            table(
                [f"R{r}C{c}" for c in range(1, n + 1)],
                _patterns(instance.clues["rows"][r - 1], n),
            )
        )
    for c in range(1, n + 1):
        cons.append(
            table(
                [f"R{r}C{c}" for r in range(1, n + 1)],
                _patterns(instance.clues["cols"][c - 1], n),
            )
        )
    return CspModel(variables, cons)

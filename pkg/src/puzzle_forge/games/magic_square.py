"""Partially blanked magic squares: classical construction, removal under
uniqueness."""

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
from ..csp import CspModel, all_different, linear_sum_eq, table

SIZES = {1: 3, 2: 4, 3: 4, 4: 5, 5: 5}
REMOVAL_PCT = {1: 33, 2: 40, 3: 55, 4: 55, 5: 65}
MAX_RESTARTS = 20
_SALT = 0x3A61C


@dataclass(frozen=True)
class MagicSquareParams:
    level: int

    @property
    def n(self) -> int:
        return SIZES[self.level]

    @property
    def removed_cells(self) -> int:
        n = self.n
        return (REMOVAL_PCT[self.level] * n * n + 50) // 100


def params_for_level(level: int) -> MagicSquareParams:
    return MagicSquareParams(level=level)


def magic_constant(n: int) -> int:
    return n * (n * n + 1) // 2


def _siamese(n: int) -> list[list[int]]:
    grid = [[0] * n for _ in range(n)]
    r, c = 0, n // 2
    for v in range(1, n * n + 1):
        grid[r][c] = v
        nr, nc = (r - 1) % n, (c + 1) % n
        if grid[nr][nc]:
            nr, nc = (r + 1) % n, c
        r, c = nr, nc
    return grid


def _doubly_even(n: int) -> list[list[int]]:
    grid = [[r * n + c + 1 for c in range(n)] for r in range(n)]
    for r in range(n):
        for c in range(n):
            if (r % 4 in (0, 3)) == (c % 4 in (0, 3)):
                grid[r][c] = n * n + 1 - grid[r][c]
    return grid


def _randomize(grid: list[list[int]], rng) -> list[list[int]]:
    """Random dihedral element, optional value complement, and symmetric
    row/column pair swaps; each preserves rows, columns, and both diagonals."""
    n = len(grid)
    g = [row[:] for row in grid]
    if rng.next_below(2):
        g = [list(row) for row in zip(*g)]  # transpose
    for _ in range(rng.next_below(4)):
        g = [list(row) for row in zip(*g[::-1])]  # rotate 90
    if rng.next_below(2):
        g = [[n * n + 1 - v for v in row] for row in g]
    for i in range(n // 2):
        if rng.next_below(2):
            j = n - 1 - i
            g[i], g[j] = g[j], g[i]
            for r in range(n):
                g[r][i], g[r][j] = g[r][j], g[r][i]
    return g


def _lines(n: int) -> list[list[int]]:
    lines = []
    for r in range(n):
        lines.append([r * n + c for c in range(n)])
    for c in range(n):
        lines.append([r * n + c for r in range(n)])
    lines.append([i * n + i for i in range(n)])
    lines.append([i * n + (n - 1 - i) for i in range(n)])
    return lines


def count_completions(n: int, cells: list[int], limit: int = 2) -> int:
    """Completions using each of 1..n*n once with all lines summing to the
    magic constant, capped at limit. Independent of the generic solver."""
    target = magic_constant(n)
    lines = _lines(n)
    cell_lines: list[list[int]] = [[] for _ in range(n * n)]
    for li, line in enumerate(lines):
        for i in line:
            cell_lines[i].append(li)
    rem = [target] * len(lines)
    blanks_in = [0] * len(lines)
    avail = set(range(1, n * n + 1))
    blanks = []
    for i, v in enumerate(cells):
        if v:
            if v not in avail:
                return 0
            avail.discard(v)
            for li in cell_lines[i]:
                rem[li] -= v
        else:
            blanks.append(i)
            for li in cell_lines[i]:
                blanks_in[li] += 1
    for li, line in enumerate(lines):
        if blanks_in[li] == 0 and rem[li] != 0:
            return 0

    found = 0

    def candidates(i: int, ordered: list[int]) -> list[int]:
        out = []
        for v in ordered:
            ok = True
            for li in cell_lines[i]:
                b = blanks_in[li]
                r = rem[li]
                if b == 1:
                    if v != r:
                        ok = False
                        break
                else:
                    # other b-1 blanks take distinct available values
                    rest = r - v
                    if rest < mins[b - 1] or rest > maxs[b - 1]:
                        ok = False
                        break
            if ok:
                out.append(v)
        return out

    mins = [0] * (n * n + 1)
    maxs = [0] * (n * n + 1)

    def refresh_bounds(ordered: list[int]) -> None:
        acc = 0
        for k, v in enumerate(ordered, start=1):
            acc += v
            mins[k] = acc
        acc = 0
        for k, v in enumerate(reversed(ordered), start=1):
            acc += v
            maxs[k] = acc

    def dfs(open_cells: list[int]) -> bool:
        nonlocal found
        if not open_cells:
            found += 1
            return found >= limit
        ordered = sorted(avail)
        refresh_bounds(ordered)
        best_k = -1
        best_cands: list[int] = []
        for k, i in enumerate(open_cells):
            cands = candidates(i, ordered)
            if not cands:
                return False
            if best_k < 0 or len(cands) < len(best_cands):
                best_k = k
                best_cands = cands
                if len(cands) == 1:
                    break
        i = open_cells[best_k]
        rest = open_cells[:best_k] + open_cells[best_k + 1 :]
        for v in best_cands:
            avail.discard(v)
            for li in cell_lines[i]:
                rem[li] -= v
                blanks_in[li] -= 1
            stop = dfs(rest)
            avail.add(v)
            for li in cell_lines[i]:
                rem[li] += v
                blanks_in[li] += 1
            if stop:
                return True
        return False

    dfs(blanks)
    return found


def generate(params: MagicSquareParams, seed: int) -> PuzzleInstance:
    n = params.n
    target_removed = params.removed_cells
    for attempt in range(MAX_RESTARTS):
        rng = rng_from_seed(mix(seed, _SALT + attempt))
        base = _siamese(n) if n % 2 else _doubly_even(n)
        square = _randomize(base, rng)
        flat = [square[r][c] for r in range(n) for c in range(n)]
        cells = list(flat)
        order = list(range(n * n))
        rng.shuffle(order)
        removed = 0
        for i in order:
            if removed == target_removed:
                break
            saved = cells[i]
            cells[i] = 0
            if count_completions(n, cells, limit=2) == 1:
                removed += 1
            else:
                cells[i] = saved
        if removed == target_removed:
            return _build_instance(params, seed, n, cells, flat)
    raise GenerationExhausted(
        GameId.MAGIC_SQUARE.value,
        seed,
        f"could not remove {target_removed} of {n * n} cells uniquely",
    )


def _build_instance(params, seed, n, cells, flat) -> PuzzleInstance:
    grid = [[cells[r * n + c] for c in range(n)] for r in range(n)]
    solution = {
        f"R{r + 1}C{c + 1}": str(flat[r * n + c])
        for r in range(n)
        for c in range(n)
    }
    lines = [
        " ".join(str(grid[r][c]) if grid[r][c] else "." for c in range(n))
        for r in range(n)
    ]
    m = magic_constant(n)
    prompt = (
        f"Complete this {n}x{n} magic square. Use each integer from 1 to "
        f"{n * n} exactly once so that every row, every column, and both "
        f"main diagonals sum to {m}. Givens are shown, '.' marks a blank. "
        "Cell names are RrCc counted from 1 at the top left.\n\n"
        + "\n".join(lines)
        + "\n\n"
        + PROMPT_FOOTER
    )
    return PuzzleInstance(
        game=GameId.MAGIC_SQUARE,
        level=params.level,
        seed=seed,
        prompt=prompt,
        clues={"n": n, "grid": grid},
        solution=solution,
        metadata={"magic_constant": m, "blanks": sum(1 for v in cells if not v)},
    )


def check_final(instance: PuzzleInstance, answer: Assignment) -> CheckResult:
    n = instance.clues["n"]
    grid = instance.clues["grid"]
    values = {}
    for r in range(1, n + 1):
        for c in range(1, n + 1):
            name = f"R{r}C{c}"
            v = answer.get(name)
            if v is None:
                return CheckResult.failed(f"missing cell {name}")
            try:
                x = int(v)
            except ValueError:
                return CheckResult.failed(f"cell {name} has non-integer {v!r}")
            if not 1 <= x <= n * n:
                return CheckResult.failed(f"cell {name} out of range: {x}")
            values[(r, c)] = x
    if len(set(values.values())) != n * n:
        return CheckResult.failed("values are not a permutation of 1..n*n")
    for r in range(1, n + 1):
        for c in range(1, n + 1):
            given = grid[r - 1][c - 1]
            if given and values[(r, c)] != given:
                return CheckResult.failed(f"clue violated at R{r}C{c}")
    sums = []
    for r in range(1, n + 1):
        sums.append(sum(values[(r, c)] for c in range(1, n + 1)))
    for c in range(1, n + 1):
        sums.append(sum(values[(r, c)] for r in range(1, n + 1)))
    sums.append(sum(values[(i, i)] for i in range(1, n + 1)))
    sums.append(sum(values[(i, n + 1 - i)] for i in range(1, n + 1)))
    if len(set(sums)) != 1:
        return CheckResult.failed("row/column/diagonal sums differ")
    return CheckResult.passed()


def csp_model(instance: PuzzleInstance) -> CspModel:
    n = instance.clues["n"]
    grid = instance.clues["grid"]
    full = tuple(str(v) for v in range(1, n * n + 1))
    m = magic_constant(n)
    variables = []
    names = []
    cons = []
    # full domains plus unary pins keep the all_different group uniform
    for r in range(1, n + 1):
        for c in range(1, n + 1):
            name = f"R{r}C{c}"
            names.append(name)
            variables.append((name, full))
            given = grid[r - 1][c - 1]
            if given:
                cons.append(table([name], [(str(given),)]))
    cons.append(all_different(names))
    for r in range(1, n + 1):
        scope = [f"R{r}C{c}" for c in range(1, n + 1)]
        cons.append(linear_sum_eq(scope, [1] * n, m))
    for c in range(1, n + 1):
        scope = [f"R{r}C{c}" for r in range(1, n + 1)]
        cons.append(linear_sum_eq(scope, [1] * n, m))
    cons.append(
        linear_sum_eq([f"R{i}C{i}" for i in range(1, n + 1)], [1] * n, m)
    )
    cons.append(
        linear_sum_eq(
            [f"R{i}C{n + 1 - i}" for i in range(1, n + 1)], [1] * n, m
        )
    )
    return CspModel(variables, cons)

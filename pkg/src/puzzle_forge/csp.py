"""Finite-domain constraint solver: propagation, counting search, tracing.

Domains are value strings; internally each variable's domain is a bitmask
over its lexicographically sorted value list, which keeps propagation and
backtracking allocation-free apart from list copies.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .core import ValidationError

Predicate = Callable[[dict], bool]

_PREDICATES: dict[str, Predicate] = {}


def register_predicate(name: str, fn: Predicate) -> None:
    """Register a reusable named predicate for custom_predicate constraints."""
    _PREDICATES[name] = fn


@dataclass(frozen=True)
class Constraint:
    kind: str
    vars: tuple[str, ...]
    coeffs: tuple[int, ...] = ()
    target: int = 0
    tuples: tuple[tuple[str, ...], ...] = ()
    name: str = ""
    predicate: Optional[Predicate] = None


def all_different(vars: Sequence[str]) -> Constraint:
    return Constraint("all_different", tuple(vars))


def linear_sum_eq(
    vars: Sequence[str], coeffs: Sequence[int], target: int
) -> Constraint:
    if len(vars) != len(coeffs):
        raise ValidationError("linear_sum_eq needs one coefficient per variable")
    return Constraint(
        "linear_sum_eq", tuple(vars), coeffs=tuple(coeffs), target=target
    )


def table(vars: Sequence[str], tuples: Sequence[Sequence[str]]) -> Constraint:
    rows = tuple(tuple(t) for t in tuples)
    for row in rows:
        if len(row) != len(vars):
            raise ValidationError("table tuple arity mismatch")
    return Constraint("table", tuple(vars), tuples=rows)


def custom_predicate(
    vars: Sequence[str], name: str, fn: Optional[Predicate] = None
) -> Constraint:
    """Named predicate over a small scope; resolved from the registry if
    no callable is supplied."""
    if fn is None:
        if name not in _PREDICATES:
            raise ValidationError(f"unregistered predicate {name!r}")
        fn = _PREDICATES[name]
    return Constraint("custom_predicate", tuple(vars), name=name, predicate=fn)


class CspModel:
    def __init__(
        self,
        variables: Sequence[tuple[str, Sequence[str]]],
        constraints: Sequence[Constraint],
    ):
        self.variables = [(name, tuple(dom)) for name, dom in variables]
        self.constraints = list(constraints)
        names = {name for name, _ in self.variables}
        if len(names) != len(self.variables):
            raise ValidationError("duplicate variable ids")
        for name, dom in self.variables:
            if not dom:
                raise ValidationError(f"empty domain for {name!r}")
            if len(set(dom)) != len(dom):
                raise ValidationError(f"duplicate values for {name!r}")
        for c in self.constraints:
            for v in c.vars:
                if v not in names:
                    raise ValidationError(f"constraint references unknown {v!r}")


# ---------------------------------------------------------------------------
# Compiled engine
# ---------------------------------------------------------------------------


class _Compiled:
    """Model lowered to integer bitmask form with per-constraint filters."""

    def __init__(self, model: CspModel):
        # value order inside each mask is lexicographic, so search output
        # ("lexicographic value order") follows bit order directly
        self.names = [name for name, _ in model.variables]
        self.index = {name: i for i, name in enumerate(self.names)}
        order = sorted(range(len(self.names)), key=lambda i: self.names[i])
        self.lex_rank = [0] * len(self.names)
        for rank, i in enumerate(order):
            self.lex_rank[i] = rank
        self.values: list[tuple[str, ...]] = []
        self.full: list[int] = []
        for _, dom in model.variables:
            ordered = tuple(sorted(dom))
            self.values.append(ordered)
            self.full.append((1 << len(ordered)) - 1)
        self.bit_of = [
            {v: 1 << i for i, v in enumerate(vals)} for vals in self.values
        ]
        self.filters = []
        self.watch: list[list[int]] = [[] for _ in self.names]
        for c in model.constraints:
            ci = len(self.filters)
            self.filters.append(self._compile(c))
            for v in c.vars:
                self.watch[self.index[v]].append(ci)

    def _numeric(self, vi: int) -> list[int]:
        try:
            return [int(v) for v in self.values[vi]]
        except ValueError:
            raise ValidationError(
                f"linear constraint over non-numeric domain of {self.names[vi]!r}"
            )

    def _compile(self, c: Constraint):
        scope = [self.index[v] for v in c.vars]
        if c.kind == "all_different":
            return self._compile_alldiff(scope)
        if c.kind == "linear_sum_eq":
            return self._compile_linear(scope, c.coeffs, c.target)
        if c.kind == "table":
            return self._compile_table(scope, c.tuples)
        if c.kind == "custom_predicate":
            return self._compile_predicate(scope, c.predicate)
        raise ValidationError(f"unknown constraint kind {c.kind!r}")

    def _compile_alldiff(self, scope: list[int]):
        values = self.values
        uniform = all(values[v] == values[scope[0]] for v in scope)
        # hidden singles are sound only for permutation groups: with as many
        # variables as shared values every value must be used exactly once
        perm = uniform and len(scope) == len(values[scope[0]])
        full = (1 << len(values[scope[0]])) - 1 if uniform else 0
        if uniform:

            def filt(domains: list[int]) -> Optional[list[int]]:
                changed = []
                taken = 0
                for v in scope:
                    d = domains[v]
                    if d & (d - 1) == 0:
                        if d & taken:
                            return None
                        taken |= d
                for v in scope:
                    d = domains[v]
                    if d & (d - 1) != 0:
                        nd = d & ~taken
                        if nd == 0:
                            return None
                        if nd != d:
                            domains[v] = nd
                            changed.append(v)
                if perm:
                    # values in exactly one live domain must land there; a
                    # variable holding two such values can satisfy only one,
                    # which wipes the group out
                    seen = 0
                    dup = 0
                    for v in scope:
                        d = domains[v]
                        dup |= seen & d
                        seen |= d
                    if seen != full:
                        return None
                    singles = seen & ~dup
                    if singles:
                        for v in scope:
                            d = domains[v]
                            h = d & singles
                            if not h:
                                continue
                            if h & (h - 1):
                                return None
                            if h != d:
                                domains[v] = h
                                changed.append(v)
                return changed

            return filt

        # mixed value lists: prune via shared value strings
        maps = []
        for v in scope:
            maps.append({val: self.bit_of[v][val] for val in self.values[v]})

        def filt_mixed(domains: list[int]) -> Optional[list[int]]:
            changed = []
            fixed: list[str] = []
            for v in scope:
                d = domains[v]
                if d & (d - 1) == 0:
                    fixed.append(self.values[v][d.bit_length() - 1])
            if len(set(fixed)) != len(fixed):
                return None
            fixed_set = set(fixed)
            for v in scope:
                d = domains[v]
                if d & (d - 1) == 0:
                    continue
                nd = d
                for val in fixed_set:
                    bit = maps[scope.index(v)].get(val, 0)
                    nd &= ~bit
                if nd == 0:
                    return None
                if nd != d:
                    domains[v] = nd
                    changed.append(v)
            return changed

        return filt_mixed

    def _compile_linear(self, scope: list[int], coeffs, target: int):
        # per var: (contribution, bit) sorted ascending by contribution, so
        # bounds come from the first/last live entries and pruning walks
        # only the infeasible fringes
        asc: list[list[tuple[int, int]]] = []
        contrib: list[list[int]] = []
        for v, c in zip(scope, coeffs):
            base = self._numeric(v)
            pairs = sorted((c * x, 1 << i) for i, x in enumerate(base))
            asc.append(pairs)
            contrib.append([c * x for x in base])
        nvars = len(scope)

        def filt(domains: list[int]) -> Optional[list[int]]:
            mins = [0] * nvars
            maxs = [0] * nvars
            for k in range(nvars):
                d = domains[scope[k]]
                if d & (d - 1) == 0:
                    x = contrib[k][d.bit_length() - 1]
                    mins[k] = x
                    maxs[k] = x
                    continue
                for x, b in asc[k]:
                    if d & b:
                        mins[k] = x
                        break
                for x, b in reversed(asc[k]):
                    if d & b:
                        maxs[k] = x
                        break
            total_min = sum(mins)
            total_max = sum(maxs)
            if not total_min <= target <= total_max:
                return None
            changed = []
            for k in range(nvars):
                v = scope[k]
                d = domains[v]
                slack_lo = target - (total_max - maxs[k])
                slack_hi = target - (total_min - mins[k])
                if mins[k] >= slack_lo and maxs[k] <= slack_hi:
                    continue
                cleared = 0
                for x, b in asc[k]:
                    if x >= slack_lo:
                        break
                    cleared |= b
                for x, b in reversed(asc[k]):
                    if x <= slack_hi:
                        break
                    cleared |= b
                nd = d & ~cleared
                if nd == 0:
                    return None
                if nd != d:
                    domains[v] = nd
                    changed.append(v)
            return changed

        return filt

    def _compile_table(self, scope: list[int], tuples):
        nvars = len(scope)
        # support[k][bit index] = bitmask of tuple rows using that value
        support: list[list[int]] = [
            [0] * len(self.values[v]) for v in scope
        ]
        for t_idx, row in enumerate(tuples):
            ok = True
            for k, val in enumerate(row):
                if val not in self.bit_of[scope[k]]:
                    ok = False
                    break
            if not ok:
                continue
            for k, val in enumerate(row):
                bit = self.bit_of[scope[k]][val]
                support[k][bit.bit_length() - 1] |= 1 << t_idx

        def filt(domains: list[int]) -> Optional[list[int]]:
            valid = -1
            for k in range(nvars):
                d = domains[scope[k]]
                sup = support[k]
                acc = 0
                i = 0
                while d:
                    if d & 1:
                        acc |= sup[i]
                    d >>= 1
                    i += 1
                valid &= acc
                if valid == 0:
                    return None
            changed = []
            for k in range(nvars):
                v = scope[k]
                d = domains[v]
                sup = support[k]
                nd = 0
                i = 0
                dd = d
                while dd:
                    if dd & 1 and sup[i] & valid:
                        nd |= 1 << i
                    dd >>= 1
                    i += 1
                if nd == 0:
                    return None
                if nd != d:
                    domains[v] = nd
                    changed.append(v)
            return changed

        return filt

    def _compile_predicate(self, scope: list[int], fn: Predicate):
        names = [self.names[v] for v in scope]
        values = self.values

        def filt(domains: list[int]) -> Optional[list[int]]:
            free = -1
            for v in scope:
                d = domains[v]
                if d & (d - 1) != 0:
                    if free >= 0:
                        return []  # two or more open vars: wait
                    free = v
            assign = {}
            for v, nm in zip(scope, names):
                d = domains[v]
                if d & (d - 1) == 0:
                    assign[nm] = values[v][d.bit_length() - 1]
            if free < 0:
                return None if not fn(assign) else []
            fname = names[scope.index(free)]
            d = domains[free]
            nd = 0
            for i, val in enumerate(values[free]):
                if d >> i & 1:
                    assign[fname] = val
                    if fn(assign):
                        nd |= 1 << i
            if nd == 0:
                return None
            if nd != d:
                domains[free] = nd
                return [free]
            return []

        return filt

    def propagate(self, domains: list[int], seed=None) -> bool:
        """Run filters to fixpoint in place; False on wipeout.

        seed limits the initial queue to those filter indices; callers may
        pass it only when every other filter is already at fixpoint for the
        given domains (e.g. after branching on a single variable).
        """
        queue = list(range(len(self.filters)) if seed is None else seed)
        queued = [False] * len(self.filters)
        for ci in queue:
            queued[ci] = True
        while queue:
            ci = queue.pop()
            queued[ci] = False
            touched = self.filters[ci](domains)
            if touched is None:
                return False
            for v in touched:
                for cj in self.watch[v]:
                    if not queued[cj]:
                        queued[cj] = True
                        queue.append(cj)
        return True

    def assignment(self, domains: list[int]) -> dict:
        out = {}
        for i, name in enumerate(self.names):
            d = domains[i]
            out[name] = self.values[i][d.bit_length() - 1]
        return out


def _apply_partial(comp: _Compiled, partial: dict) -> Optional[list[int]]:
    domains = list(comp.full)
    for name, val in partial.items():
        if name not in comp.index:
            raise ValidationError(f"unknown variable {name!r} in partial")
        vi = comp.index[name]
        bit = comp.bit_of[vi].get(val)
        if bit is None:
            return None
        domains[vi] = bit
    return domains


def propagate(model: CspModel, partial: dict) -> Optional[dict[str, tuple[str, ...]]]:
    """Reduced domains after fixpoint propagation, or None on contradiction."""
    comp = _Compiled(model)
    domains = _apply_partial(comp, partial)
    if domains is None or not comp.propagate(domains):
        return None
    out = {}
    for i, name in enumerate(comp.names):
        vals = comp.values[i]
        d = domains[i]
        out[name] = tuple(vals[b] for b in range(len(vals)) if d >> b & 1)
    return out


def _search(
    comp: _Compiled,
    domains: list[int],
    limit: int,
    trace: Optional[list],
    solutions: Optional[list],
    dirty=None,
) -> int:
    if not comp.propagate(domains, dirty):
        if trace is not None:
            trace.append("dead-end")
        return 0
    # smallest domain first, ties broken by variable name
    best = -1
    best_size = 1 << 62
    best_rank = 1 << 62
    ranks = comp.lex_rank
    for i, d in enumerate(domains):
        size = d.bit_count()
        if size > 1 and (
            size < best_size or (size == best_size and ranks[i] < best_rank)
        ):
            best = i
            best_size = size
            best_rank = ranks[i]
    if best < 0:
        if trace is not None:
            trace.append("solution")
        if solutions is not None:
            solutions.append(comp.assignment(domains))
        return 1
    found = 0
    d = domains[best]
    vals = comp.values[best]
    for b in range(len(vals)):
        if not d >> b & 1:
            continue
        if trace is not None:
            trace.append(f"branch {comp.names[best]}={vals[b]}")
        child = list(domains)
        child[best] = 1 << b
        # parent domains were at fixpoint, so only filters watching the
        # branched variable can fire
        found += _search(
            comp, child, limit - found, trace, solutions, comp.watch[best]
        )
        if found >= limit:
            return found
        if trace is not None:
            trace.append(f"unbind {comp.names[best]}")
    return found


def count_solutions(
    model: CspModel, limit: int, trace: Optional[list] = None
) -> int:
    if limit < 1:
        raise ValidationError("limit must be >= 1")
    comp = _Compiled(model)
    return _search(comp, list(comp.full), limit, trace, None)


def solve_one(model: CspModel) -> Optional[dict]:
    comp = _Compiled(model)
    out: list[dict] = []
    found = _search(comp, list(comp.full), 1, None, out)
    return out[0] if found else None

"""Positional-attribute deduction puzzles with templated clues."""

from __future__ import annotations

import itertools
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

POSITIONS = {1: 3, 2: 3, 3: 4, 4: 4, 5: 5}
ATTRIBUTES = {1: 2, 2: 3, 3: 3, 4: 4, 5: 5}
CLUE_BUDGET = 120
MAX_RESTARTS = 8
_SALT = 0x2EB7A

POOLS = {
    "nationality": ("brit", "swede", "dane", "norwegian", "german"),
    "color": ("red", "green", "blue", "yellow", "white"),
    "drink": ("tea", "coffee", "milk", "beer", "water"),
    "pet": ("dog", "cat", "bird", "fish", "horse"),
    "hobby": ("chess", "tennis", "painting", "cycling", "gardening"),
}
POOL_ORDER = tuple(POOLS)

KINDS = ("position_fixed", "same_entity", "left_of", "adjacent", "not_at")


@dataclass(frozen=True)
class ZebraParams:
    level: int

    @property
    def positions(self) -> int:
        return POSITIONS[self.level]

    @property
    def attributes(self) -> int:
        return ATTRIBUTES[self.level]


def params_for_level(level: int) -> ZebraParams:
    return ZebraParams(level=level)


def render_clue(kind: str, args: dict) -> str:
    if kind == "position_fixed":
        return (
            f"The one whose {args['attr']} is {args['value']} "
            f"is at position {args['position']}."
        )
    if kind == "not_at":
        return (
            f"The one whose {args['attr']} is {args['value']} "
            f"is not at position {args['position']}."
        )
    if kind == "same_entity":
        return (
            f"The one whose {args['attr1']} is {args['value1']} also has "
            f"{args['attr2']} {args['value2']}."
        )
    if kind == "left_of":
        return (
            f"The one whose {args['attr1']} is {args['value1']} is somewhere "
            f"to the left of the one whose {args['attr2']} is {args['value2']}."
        )
    if kind == "adjacent":
        return (
            f"The one whose {args['attr1']} is {args['value1']} is directly "
            f"next to the one whose {args['attr2']} is {args['value2']}."
        )
    raise ValueError(f"unknown clue kind {kind!r}")


def clue_holds(kind: str, args: dict, positions: dict[str, int]) -> bool:
    """Evaluate one clue against a map from 'attr:value' to position."""
    if kind == "position_fixed":
        return positions[f"{args['attr']}:{args['value']}"] == args["position"]
    if kind == "not_at":
        return positions[f"{args['attr']}:{args['value']}"] != args["position"]
    p1 = positions[f"{args['attr1']}:{args['value1']}"]
    p2 = positions[f"{args['attr2']}:{args['value2']}"]
    if kind == "same_entity":
        return p1 == p2
    if kind == "left_of":
        return p1 < p2
    if kind == "adjacent":
        return abs(p1 - p2) == 1
    raise ValueError(f"unknown clue kind {kind!r}")


def _clue_constraint(kind: str, args: dict, npos: int):
    doms = [str(p) for p in range(1, npos + 1)]
    if kind == "position_fixed":
        return table(
            [f"{args['attr']}:{args['value']}"], [(str(args["position"]),)]
        )
    if kind == "not_at":
        return table(
            [f"{args['attr']}:{args['value']}"],
            [(d,) for d in doms if d != str(args["position"])],
        )
    v1 = f"{args['attr1']}:{args['value1']}"
    v2 = f"{args['attr2']}:{args['value2']}"
    if kind == "same_entity":
        rows = [(d, d) for d in doms]
    elif kind == "left_of":
        rows = [(a, b) for a in doms for b in doms if int(a) < int(b)]
    else:  # adjacent
        rows = [(a, b) for a in doms for b in doms if abs(int(a) - int(b)) == 1]
    return table([v1, v2], rows)


def build_model(
    npos: int, attributes: dict[str, list[str]], clues: list[dict]
) -> CspModel:
    doms = tuple(str(p) for p in range(1, npos + 1))
    variables = []
    cons = []
    for attr in sorted(attributes):
        group = [f"{attr}:{v}" for v in attributes[attr]]
        for name in group:
            variables.append((name, doms))
        cons.append(all_different(group))
    for clue in clues:
        cons.append(_clue_constraint(clue["kind"], clue["args"], npos))
    return CspModel(variables, cons)


def _count(npos, attributes, clues, limit=2) -> int:
    """Exact solution count capped at limit, by DFS over per-attribute
    permutations.

    This is the generator's inner loop; answers agree with counting on the
    build_model route, which stays the verification path.
    """
    names = sorted(attributes)
    # greedy order: place the attribute with the most clues to already
    # placed attributes next, so rejections happen high in the tree; any
    # order yields the same exact count
    pair_load = {a: {b: 0 for b in names} for a in names}
    self_load = {a: 0 for a in names}
    for clue in clues:
        kind, args = clue["kind"], clue["args"]
        if kind in ("position_fixed", "not_at"):
            self_load[args["attr"]] += 1
        elif args["attr1"] == args["attr2"]:
            self_load[args["attr1"]] += 1
        else:
            pair_load[args["attr1"]][args["attr2"]] += 1
            pair_load[args["attr2"]][args["attr1"]] += 1
    attrs: list[str] = []
    left = list(names)
    while left:
        best = min(
            left,
            key=lambda a: (
                -sum(pair_load[a][b] for b in attrs),
                -self_load[a] - sum(pair_load[a].values()),
                a,
            ),
        )
        attrs.append(best)
        left.remove(best)

    vidx = {}
    for k, a in enumerate(attrs):
        for j, v in enumerate(attributes[a]):
            vidx[f"{a}:{v}"] = (k, j)
    unary: list[list[tuple[int, frozenset[int]]]] = [[] for _ in attrs]
    within: list[list[tuple[str, int, int]]] = [[] for _ in attrs]
    binary: list[list[tuple[str, int, int, int, int]]] = [[] for _ in attrs]
    for clue in clues:
        kind, args = clue["kind"], clue["args"]
        if kind in ("position_fixed", "not_at"):
            k, j = vidx[f"{args['attr']}:{args['value']}"]
            p = args["position"]
            if kind == "position_fixed":
                allowed = frozenset((p,))
            else:
                allowed = frozenset(range(1, npos + 1)) - {p}
            unary[k].append((j, allowed))
            continue
        k1, j1 = vidx[f"{args['attr1']}:{args['value1']}"]
        k2, j2 = vidx[f"{args['attr2']}:{args['value2']}"]
        if k1 == k2:
            within[k1].append((kind, j1, j2))
        else:
            # checkable once the later of the two attributes is assigned
            binary[max(k1, k2)].append((kind, k1, j1, k2, j2))

    def _rel_ok(kind: str, p1: int, p2: int) -> bool:
        if kind == "same_entity":
            return p1 == p2
        if kind == "left_of":
            return p1 < p2
        return abs(p1 - p2) == 1

    # perm-id bitmasks: slot_mask[j][p] covers perms placing value j at p
    all_perms = list(itertools.permutations(range(1, npos + 1)))
    nattrs = len(attrs)
    slot_mask = [[0] * (npos + 1) for _ in range(npos)]
    for pid, pm in enumerate(all_perms):
        bit = 1 << pid
        for j in range(npos):
            slot_mask[j][pm[j]] |= bit

    full_mask = (1 << len(all_perms)) - 1
    base = []
    for k in range(nattrs):
        m = full_mask
        for j, allowed in unary[k]:
            um = 0
            for p in allowed:
                um |= slot_mask[j][p]
            m &= um
        for kind, j1, j2 in within[k]:
            wm = 0
            for pid, pm in enumerate(all_perms):
                if _rel_ok(kind, pm[j1], pm[j2]):
                    wm |= 1 << pid
            m &= wm
        base.append(m)

    # binary clue at level k -> masks over attr k's perms, keyed by the
    # already-fixed position of the earlier endpoint
    binm: list[list[tuple[int, int, list[int]]]] = [[] for _ in range(nattrs)]
    for k in range(nattrs):
        for kind, k1, j1, k2, j2 in binary[k]:
            # branched endpoint lives at level k; key masks by the earlier
            # endpoint's position, minding the relation's argument order
            if k1 < k2:
                k_e, j_e, j_b, branch_is_first = k1, j1, j2, False
            else:
                k_e, j_e, j_b, branch_is_first = k2, j2, j1, True
            pre = [0] * (npos + 1)
            for pe in range(1, npos + 1):
                m = 0
                for pb in range(1, npos + 1):
                    ok = (
                        _rel_ok(kind, pb, pe)
                        if branch_is_first
                        else _rel_ok(kind, pe, pb)
                    )
                    if ok:
                        m |= slot_mask[j_b][pb]
                pre[pe] = m
            binm[k].append((k_e, j_e, pre))

    assigned: list[tuple[int, ...] | None] = [None] * nattrs
    found = 0

    def dfs(k: int) -> bool:
        nonlocal found
        if k == nattrs:
            found += 1
            return found >= limit
        m = base[k]
        for k1, j1, pre in binm[k]:
            m &= pre[assigned[k1][j1]]
            if not m:
                return False
        while m:
            low = m & -m
            m ^= low
            assigned[k] = all_perms[low.bit_length() - 1]
            if dfs(k + 1):
                return True
        return False

    dfs(0)
    return found


def _sample_clue(rng, npos, attributes, truth) -> tuple[str, dict]:
    attrs = sorted(attributes)
    kind = KINDS[rng.next_below(len(KINDS))]
    if kind == "position_fixed":
        attr = rng.choice(attrs)
        value = rng.choice(attributes[attr])
        return kind, {
            "attr": attr,
            "value": value,
            "position": truth[f"{attr}:{value}"],
        }
    if kind == "not_at":
        attr = rng.choice(attrs)
        value = rng.choice(attributes[attr])
        wrong = rng.choice(
            [p for p in range(1, npos + 1) if p != truth[f"{attr}:{value}"]]
        )
        return kind, {"attr": attr, "value": value, "position": wrong}
    if kind == "same_entity":
        a1, a2 = rng.sample(attrs, 2)
        pos = rng.randint(1, npos)
        v1 = next(v for v in attributes[a1] if truth[f"{a1}:{v}"] == pos)
        v2 = next(v for v in attributes[a2] if truth[f"{a2}:{v}"] == pos)
        return kind, {"attr1": a1, "value1": v1, "attr2": a2, "value2": v2}
    if kind == "left_of":
        p2 = rng.randint(2, npos)
        p1 = rng.randint(1, p2 - 1)
    else:  # adjacent
        p1 = rng.randint(1, npos - 1)
        p2 = p1 + 1
        if rng.next_below(2):
            p1, p2 = p2, p1
    a1 = rng.choice(attrs)
    a2 = rng.choice(attrs)
    v1 = next(v for v in attributes[a1] if truth[f"{a1}:{v}"] == p1)
    v2 = next(v for v in attributes[a2] if truth[f"{a2}:{v}"] == p2)
    return kind, {"attr1": a1, "value1": v1, "attr2": a2, "value2": v2}


def generate(params: ZebraParams, seed: int) -> PuzzleInstance:
    npos = params.positions
    for attempt in range(MAX_RESTARTS):
        rng = rng_from_seed(mix(seed, _SALT + attempt))
        chosen = rng.sample(POOL_ORDER, params.attributes)
        attributes = {}
        for attr in chosen:
            attributes[attr] = rng.sample(POOLS[attr], npos)
        truth: dict[str, int] = {}
        for attr in sorted(attributes):
            perm = list(range(1, npos + 1))
            rng.shuffle(perm)
            for value, pos in zip(attributes[attr], perm):
                truth[f"{attr}:{value}"] = pos

        clues: list[dict] = []
        seen = set()
        while len(clues) < CLUE_BUDGET:
            kind, args = _sample_clue(rng, npos, attributes, truth)
            key = (kind, tuple(sorted(args.items())))
            if key in seen:
                continue
            seen.add(key)
            clues.append({"kind": kind, "args": args})
            if _count(npos, attributes, clues) == 1:
                break
        else:
            continue
        break
    else:
        raise GenerationExhausted(
            GameId.ZEBRA.value,
            seed,
            f"not unique after {CLUE_BUDGET} clues x{MAX_RESTARTS} attempts",
        )

    kept = list(clues)
    for clue in clues:
        trial = [c for c in kept if c is not clue]
        if _count(npos, attributes, trial) == 1:
            kept = trial

    payload_clues = [
        {
            "kind": c["kind"],
            "args": c["args"],
            "text": render_clue(c["kind"], c["args"]),
        }
        for c in kept
    ]
    solution = {k: str(v) for k, v in truth.items()}
    return _build_instance(
        params, seed, npos, attributes, payload_clues, solution
    )


def _build_instance(
    params, seed, npos, attributes, clues, solution
) -> PuzzleInstance:
    attr_lines = [
        f"  {attr}: " + ", ".join(attributes[attr])
        for attr in sorted(attributes)
    ]
    clue_lines = [f"  {i + 1}. {c['text']}" for i, c in enumerate(clues)]
    prompt = (
        f"Solve this placement puzzle. There are {npos} positions in a row, "
        "numbered 1 (leftmost) to "
        f"{npos} (rightmost). Each position holds exactly one entity, and "
        "each attribute value below belongs to exactly one position.\n\n"
        "Attributes and values:\n" + "\n".join(attr_lines) + "\n\nClues:\n"
        + "\n".join(clue_lines)
        + "\n\nReport each attribute value's position, naming variables "
        "attribute:value (for example color:red=2).\n\n" + PROMPT_FOOTER
    )
    return PuzzleInstance(
        game=GameId.ZEBRA,
        level=params.level,
        seed=seed,
        prompt=prompt,
        clues={
            "positions": npos,
            "attributes": {a: list(vs) for a, vs in sorted(attributes.items())},
            "clues": clues,
        },
        solution=solution,
        metadata={"clue_count": len(clues)},
    )


def check_final(instance: PuzzleInstance, answer: Assignment) -> CheckResult:
    npos = instance.clues["positions"]
    attributes = instance.clues["attributes"]
    positions: dict[str, int] = {}
    for attr in sorted(attributes):
        seen_pos = []
        for value in attributes[attr]:
            name = f"{attr}:{value}"
            v = answer.get(name)
            if v is None:
                return CheckResult.failed(f"missing assignment for {name}")
            try:
                p = int(v)
            except ValueError:
                return CheckResult.failed(f"{name} has non-integer {v!r}")
            if not 1 <= p <= npos:
                return CheckResult.failed(f"{name} position out of range: {p}")
            positions[name] = p
            seen_pos.append(p)
        if len(set(seen_pos)) != len(seen_pos):
            return CheckResult.failed(
                f"attribute {attr} maps two values to one position"
            )
    for clue in instance.clues["clues"]:
        if not clue_holds(clue["kind"], clue["args"], positions):
            return CheckResult.failed(f"clue violated: {clue['text']}")
    return CheckResult.passed()


def csp_model(instance: PuzzleInstance) -> CspModel:
    return build_model(
        instance.clues["positions"],
        instance.clues["attributes"],
        instance.clues["clues"],
    )

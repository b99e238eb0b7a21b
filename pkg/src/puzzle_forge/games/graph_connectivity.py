"""Connectivity questions on random graphs with regime and label control."""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal, getcontext

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

SIZES = {1: 8, 2: 15, 3: 30, 4: 50, 5: 80}
# numerator/denominator applied to ln(N)/N
REGIMES = {"sparse": (1, 2), "critical": (1, 1), "dense": (2, 1)}
MAX_DRAWS = 10_000
_SALT = 0x6E4A9

_YES = {"yes", "true", "connected"}
_NO = {"no", "false", "disconnected"}


@dataclass(frozen=True)
class GraphParams:
    level: int

    @property
    def n(self) -> int:
        return SIZES[self.level]


def params_for_level(level: int) -> GraphParams:
    return GraphParams(level=level)


def edge_threshold(n: int, regime: str) -> int:
    """Edge probability k*ln(n)/n as a 64-bit integer draw threshold.

    Decimal keeps the value platform-independent; float ln could differ in
    the last ulp across libm builds and flip an edge.
    """
    num, den = REGIMES[regime]
    getcontext().prec = 50
    p = Decimal(n).ln() * num / (den * n)
    if not 0 < p < 1:
        raise ValueError(f"edge probability {p} outside (0,1)")
    return int(p * (1 << 64))


def _sample_edges(rng, n: int, threshold: int) -> list[list[int]]:
    edges = []
    for u in range(n):
        for v in range(u + 1, n):
            if rng.next_u64() < threshold:
                edges.append([u, v])
    return edges


def is_connected(n: int, edges: list[list[int]]) -> bool:
    """Union-find with path compression; the generator's labeling route."""
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    components = n
    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            components -= 1
    return components == 1


def generate(params: GraphParams, seed: int) -> PuzzleInstance:
    n = params.n
    rng = rng_from_seed(mix(seed, _SALT))
    # joint cell draw keeps the regime marginal uniform and the label
    # marginal exactly balanced: sparse graphs are almost never connected
    # and dense ones almost always are, so those cells carry one label
    # each and the critical cell splits by coin
    cell = rng.next_below(6)
    if cell < 2:
        regime, want = "sparse", "no"
    elif cell < 4:
        regime, want = "dense", "yes"
    else:
        regime = "critical"
        want = "yes" if cell == 4 else "no"
    threshold = edge_threshold(n, regime)
    for _ in range(MAX_DRAWS):
        edges = _sample_edges(rng, n, threshold)
        label = "yes" if is_connected(n, edges) else "no"
        if label == want:
            return _build_instance(params, seed, n, regime, edges, label)
    raise GenerationExhausted(
        GameId.GRAPH_CONNECTIVITY.value,
        seed,
        f"no {want!r} graph in {MAX_DRAWS} draws ({regime}, n={n})",
    )


def _build_instance(params, seed, n, regime, edges, label) -> PuzzleInstance:
    edges = sorted([min(e), max(e)] for e in edges)
    edge_lines = "\n".join(f"  {u} - {v}" for u, v in edges) or "  (none)"
    prompt = (
        f"An undirected graph has {n} vertices numbered 0 through {n - 1}. "
        "Its complete edge list follows, one edge per line; vertices not "
        "listed have no edges.\n\n"
        f"{edge_lines}\n\n"
        "Decide whether the graph is connected, that is, whether every "
        "vertex can reach every other vertex along edges. Use the variable "
        "name connected and the value yes or no.\n\n" + PROMPT_FOOTER
    )
    return PuzzleInstance(
        game=GameId.GRAPH_CONNECTIVITY,
        level=params.level,
        seed=seed,
        prompt=prompt,
        clues={"n": n, "edges": edges},
        solution={"connected": label},
        metadata={"regime": regime, "edge_count": len(edges)},
    )


def normalize_label(raw: str) -> str | None:
    token = raw.strip().lower()
    if token in _YES:
        return "yes"
    if token in _NO:
        return "no"
    return None


def check_final(instance: PuzzleInstance, answer: Assignment) -> CheckResult:
    raw = answer.get("connected")
    if raw is None:
        return CheckResult.failed("missing variable 'connected'")
    label = normalize_label(raw)
    if label is None:
        return CheckResult.failed(f"unrecognized connectivity answer {raw!r}")
    if label != instance.solution["connected"]:
        return CheckResult.failed("wrong connectivity label")
    return CheckResult.passed()


def csp_model(instance: PuzzleInstance) -> CspModel:
    n = instance.clues["n"]
    edges = instance.clues["edges"]
    actual = "yes" if is_connected(n, edges) else "no"

    def matches(assign: dict) -> bool:
        return assign["connected"] == actual

    return CspModel(
        [("connected", ("no", "yes"))],
        [custom_predicate(["connected"], "connectivity_label", matches)],
    )

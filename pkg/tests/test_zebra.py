"""Placement puzzles: clue semantics, uniqueness, minimality."""

import itertools

import pytest

from puzzle_forge import instance_to_json
from puzzle_forge.csp import count_solutions
from puzzle_forge.games import zebra


def gen(level, seed):
    return zebra.generate(zebra.params_for_level(level), seed)


def brute_count(inst):
    """Enumerate (positions!)^attributes assignments, count clue-satisfying."""
    p = inst.clues["positions"]
    attrs = inst.clues["attributes"]
    names = sorted(attrs)
    clue_specs = [(c["kind"], c["args"]) for c in inst.clues["clues"]]
    count = 0
    for combo in itertools.product(
        itertools.permutations(range(1, p + 1)), repeat=len(names)
    ):
        positions = {}
        for name, perm in zip(names, combo):
            for value, pos in zip(attrs[name], perm):
                positions[f"{name}:{value}"] = pos
        if all(zebra.clue_holds(k, a, positions) for k, a in clue_specs):
            count += 1
    return count


def test_clue_holds_semantics():
    pos = {
        "color:red": 1, "color:blue": 2,
        "pet:dog": 2, "pet:cat": 1,
    }

    def pair(kind, a1, v1, a2, v2):
        args = {"attr1": a1, "value1": v1, "attr2": a2, "value2": v2}
        return zebra.clue_holds(kind, args, pos)

    def at(kind, a, v, k):
        return zebra.clue_holds(
            kind, {"attr": a, "value": v, "position": k}, pos
        )

    assert at("position_fixed", "color", "red", 1)
    assert not at("position_fixed", "color", "red", 2)
    assert pair("same_entity", "color", "blue", "pet", "dog")
    assert not pair("same_entity", "color", "red", "pet", "dog")
    assert pair("left_of", "color", "red", "pet", "dog")
    assert not pair("left_of", "pet", "dog", "color", "red")
    assert pair("adjacent", "color", "red", "pet", "dog")
    assert pair("adjacent", "pet", "dog", "color", "red")
    assert at("not_at", "color", "red", 2)
    assert not at("not_at", "color", "red", 1)


@pytest.mark.parametrize("level", [1, 2, 3, 4, 5])
def test_generated_shape_and_uniqueness(level):
    inst = gen(level, 7)
    p = zebra.POSITIONS[level]
    a = zebra.ATTRIBUTES[level]
    assert inst.clues["positions"] == p
    assert len(inst.clues["attributes"]) == a
    for values in inst.clues["attributes"].values():
        assert len(values) == p
    assert count_solutions(zebra.csp_model(inst), limit=2) == 1
    assert zebra.check_final(inst, inst.solution)


@pytest.mark.parametrize("level", [1, 2, 3])
def test_exhaustive_count_agrees(level):
    # positions <= 4 here, so the full product space is enumerable
    for seed in (0, 1, 2):
        inst = gen(level, seed)
        assert brute_count(inst) == 1


def test_clue_set_is_minimal():
    for seed in (0, 3):
        inst = gen(2, seed)
        clues = inst.clues["clues"]
        for drop in range(len(clues)):
            class Reduced:
                clues = {
                    "positions": inst.clues["positions"],
                    "attributes": inst.clues["attributes"],
                    "clues": [
                        c for i, c in enumerate(inst.clues["clues"])
                        if i != drop
                    ],
                }

            assert count_solutions(zebra.csp_model(Reduced), limit=2) == 2, (
                f"clue {drop} is redundant"
            )


def test_determinism():
    assert instance_to_json(gen(4, 13)) == instance_to_json(gen(4, 13))


def test_clue_text_matches_args():
    inst = gen(3, 5)
    for clue in inst.clues["clues"]:
        assert clue["text"] == zebra.render_clue(clue["kind"], clue["args"])
        assert clue["text"] in inst.prompt


def test_check_final_rejects_position_swaps():
    inst = gen(3, 1)
    attrs = inst.clues["attributes"]
    name = sorted(attrs)[0]
    values = attrs[name]
    rejected = 0
    for va, vb in itertools.combinations(values, 2):
        ka, kb = f"{name}:{va}", f"{name}:{vb}"
        mutated = dict(inst.solution)
        mutated[ka], mutated[kb] = mutated[kb], mutated[ka]
        res = zebra.check_final(inst, mutated)
        assert not res
        rejected += 1
    assert rejected >= 3


def test_check_final_diagnostics():
    inst = gen(1, 4)
    sol = dict(inst.solution)
    keys = sorted(sol)
    missing = dict(sol)
    del missing[keys[0]]
    res = zebra.check_final(inst, missing)
    assert not res and "missing" in res.diagnostics[0]
    name = keys[0].split(":")[0]
    group = [k for k in keys if k.startswith(name + ":")]
    dup = dict(sol)
    dup[group[0]] = dup[group[1]]
    res = zebra.check_final(inst, dup)
    assert not res

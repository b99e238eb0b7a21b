"""Truth-teller puzzles: evaluation, consistency counting, depth caps."""

import itertools

import pytest

from puzzle_forge import instance_to_json
from puzzle_forge.csp import count_solutions
from puzzle_forge.games import knights_knaves as kk


def gen(level, seed):
    return kk.generate(kk.params_for_level(level), seed)


def brute_assignments(characters, statements):
    """Check all 2^n knight/knave splits directly against the statements."""
    out = []
    for bits in itertools.product((kk.KNIGHT, kk.KNAVE), repeat=len(characters)):
        truth = dict(zip(characters, bits))
        ok = all(
            kk.evaluate(s["ast"], truth) == (truth[s["speaker"]] == kk.KNIGHT)
            for s in statements
        )
        if ok:
            out.append(truth)
    return out


def test_evaluate_atoms_and_connectives():
    truth = {"A": kk.KNIGHT, "B": kk.KNAVE}
    a = {"atom": ["A", kk.KNIGHT]}
    b = {"atom": ["B", kk.KNIGHT]}
    assert kk.evaluate(a, truth)
    assert not kk.evaluate(b, truth)
    assert kk.evaluate({"not": b}, truth)
    assert not kk.evaluate({"and": [a, b]}, truth)
    assert kk.evaluate({"or": [a, b]}, truth)
    assert not kk.evaluate({"implies": [a, b]}, truth)
    # false antecedent: vacuously true
    assert kk.evaluate({"implies": [b, a]}, truth)
    assert kk.evaluate({"implies": [b, b]}, truth)


def test_two_speaker_fixture():
    # A: "B is a knave". B: "A is a knave and B is a knave".
    statements = [
        {"speaker": "A", "ast": {"atom": ["B", kk.KNAVE]}},
        {
            "speaker": "B",
            "ast": {
                "and": [{"atom": ["A", kk.KNAVE]}, {"atom": ["B", kk.KNAVE]}]
            },
        },
    ]
    sols = brute_assignments(["A", "B"], statements)
    assert sols == [{"A": kk.KNIGHT, "B": kk.KNAVE}]
    assert len(kk.consistent_assignments(["A", "B"], statements, limit=10)) == 1


def test_self_endorsement_is_uninformative():
    statements = [{"speaker": "A", "ast": {"atom": ["A", kk.KNIGHT]}}]
    assert len(kk.consistent_assignments(["A"], statements, limit=10)) == 2
    assert len(brute_assignments(["A"], statements)) == 2


@pytest.mark.parametrize("level", [1, 2, 3, 4, 5])
def test_generated_shape_and_uniqueness(level):
    inst = gen(level, 3)
    chars = inst.clues["characters"]
    assert len(chars) == kk.CHARACTERS[level]
    statements = inst.clues["statements"]
    assert statements
    assert len(kk.consistent_assignments(chars, statements, limit=2)) == 1
    assert count_solutions(kk.csp_model(inst), limit=2) == 1
    assert kk.check_final(inst, inst.solution)


def ast_depth(ast):
    if "atom" in ast:
        return 0
    if "not" in ast:
        return 1 + ast_depth(ast["not"])
    (_, (l, r)), = ast.items()
    return 1 + max(ast_depth(l), ast_depth(r))


def ast_ops(ast):
    if "atom" in ast:
        return set()
    if "not" in ast:
        return {"not"} | ast_ops(ast["not"])
    (op, (l, r)), = ast.items()
    return {op} | ast_ops(l) | ast_ops(r)


@pytest.mark.parametrize("level", [1, 2, 3, 4, 5])
def test_statement_depth_capped(level):
    cap = kk.MAX_DEPTH[level]
    for seed in range(6):
        inst = gen(level, seed)
        for s in inst.clues["statements"]:
            assert ast_depth(s["ast"]) <= cap


def test_conditionals_absent_at_shallow_levels():
    for level in (1, 2):
        for seed in range(8):
            inst = gen(level, seed)
            for s in inst.clues["statements"]:
                assert "implies" not in ast_ops(s["ast"])


def test_determinism():
    assert instance_to_json(gen(5, 19)) == instance_to_json(gen(5, 19))


def test_statement_text_matches_ast():
    inst = gen(3, 2)
    for s in inst.clues["statements"]:
        rendered = kk.render_body(s["ast"])
        assert rendered in s["text"]
        assert s["text"] in inst.prompt


def test_check_final_rejects_flips_and_gaps():
    inst = gen(2, 6)
    chars = inst.clues["characters"]
    for c in chars:
        mutated = dict(inst.solution)
        mutated[c] = kk.KNAVE if mutated[c] == kk.KNIGHT else kk.KNIGHT
        assert not kk.check_final(inst, mutated)
    missing = dict(inst.solution)
    del missing[chars[0]]
    res = kk.check_final(inst, missing)
    assert not res and "missing" in res.diagnostics[0]
    bad = dict(inst.solution)
    bad[chars[0]] = "jester"
    res = kk.check_final(inst, bad)
    assert not res

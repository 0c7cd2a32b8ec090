import copy
import itertools

import pytest

from deltaforge import node_eq, parse
from deltaforge.applier import (
    And,
    Atom,
    DeltaApplyError,
    Not,
    Or,
    apply,
    apply_all,
    extract_aoc,
    pretty_print,
    validate_order,
)
from deltaforge.pack import load_builtin


def _delta(dL_flat, text):
    return parse(dL_flat, "Delta", text)


# ---------------------------------------------------------------------------
# Application-order constraints

def test_extract_aoc_absent(voicemail):
    assert extract_aoc(voicemail) is None


def test_extract_aoc_shapes(dL_flat):
    aoc = extract_aoc(_delta(dL_flat, "delta D after A { }"))
    assert aoc == Atom(name="A")
    aoc = extract_aoc(_delta(dL_flat, "delta D after A && !B || C { }"))
    assert aoc == Or(items=(And(items=(Atom(name="A"), Not(inner=Atom(name="B")))),
                            Atom(name="C")))
    aoc = extract_aoc(_delta(dL_flat, "delta D after !(A || B) { }"))
    assert aoc == Not(inner=Or(items=(Atom(name="A"), Atom(name="B"))))


def test_aoc_evaluation():
    aoc = And(items=(Atom(name="A"), Not(inner=Atom(name="B"))))
    assert aoc.evaluate({"A"})
    assert not aoc.evaluate({"A", "B"})
    assert not aoc.evaluate(set())
    assert aoc.names() == {"A", "B"}


def test_validate_order_pass_and_fail(dL_flat):
    a = _delta(dL_flat, "delta A { }")
    b = _delta(dL_flat, "delta B after A { }")
    assert validate_order([a, b]) == []
    diags = validate_order([b, a])
    assert [(d.code, d.severity) for d in diags] == [("AOC", "error")]


def test_validate_order_unknown_name_warns(dL_flat):
    d = _delta(dL_flat, "delta D after Ghost { }")
    diags = validate_order([d])
    assert {(x.code, x.severity) for x in diags} \
        == {("AOC", "warning"), ("AOC", "error")}


def test_validate_order_exhaustive_three(dL_flat):
    a = _delta(dL_flat, "delta A { }")
    b = _delta(dL_flat, "delta B after A { }")
    c = _delta(dL_flat, "delta C after A && !B { }")
    constraints = {"A": lambda pre: True,
                   "B": lambda pre: "A" in pre,
                   "C": lambda pre: "A" in pre and "B" not in pre}
    for plan in itertools.permutations([a, b, c]):
        names = [d.name() for d in plan]
        expected = sum(
            not constraints[n](set(names[:i])) for i, n in enumerate(names))
        errors = [d for d in validate_order(list(plan)) if d.severity == "error"]
        assert len(errors) == expected, names


# ---------------------------------------------------------------------------
# Application

def test_apply_case_study(core, voicemail, L_flat, dL_flat, expected_variant):
    variant = apply(core, voicemail, L_flat, dL_flat)
    assert node_eq(variant, expected_variant, {"elements"})


def test_apply_does_not_mutate_core(core, voicemail, L_flat, dL_flat):
    snapshot = copy.deepcopy(core)
    apply(core, voicemail, L_flat, dL_flat)
    assert node_eq(core, snapshot)


def test_apply_empty_delta_is_identity(core, L_flat, dL_flat):
    variant = apply(core, _delta(dL_flat, "delta Nop { }"), L_flat, dL_flat)
    assert node_eq(variant, core)


def test_apply_failure_raises_with_recoded_diagnostics(core, L_flat, dL_flat):
    bad = _delta(dL_flat,
                 "delta Bad { modify statechart Telephone { remove Nope; } }")
    with pytest.raises(DeltaApplyError) as err:
        apply(core, bad, L_flat, dL_flat)
    (diag,) = err.value.diagnostics
    assert diag.code == "APPLY"
    assert "CC7" in diag.message


def test_apply_all_folds_in_order(core, L_flat, dL_flat):
    first = _delta(dL_flat,
                   "delta First { modify statechart Telephone {"
                   " add state Extra; } }")
    second = _delta(dL_flat,
                    "delta Second after First { modify statechart Telephone {"
                    " modify state Extra { set name Final; } } }")
    variant = apply_all(core, [first, second], L_flat, dL_flat)
    names = [e.name() for e in variant.slots["elements"]
             if e.production == "State"]
    assert "Final" in names and "Extra" not in names
    with pytest.raises(DeltaApplyError):
        apply_all(core, [second, first], L_flat, dL_flat)


def test_rename_rewrites_references(core, L_flat, dL_flat):
    delta = _delta(dL_flat,
                   "delta R { modify statechart Telephone {"
                   " modify state Active.Busy { set name Voicemail; } } }")
    variant = apply(core, delta, L_flat, dL_flat)
    targets = [t.slots["target"].text for t in variant.slots["elements"]
               if t.production == "Transition"]
    assert "Busy" not in targets and "Voicemail" in targets
    # guard conditions are not state references and stay untouched
    guards = [t.slots["body"].slots["guard"].slots["condition"].text
              for t in variant.slots["elements"]
              if t.production == "Transition" and "body" in t.slots
              and "guard" in t.slots["body"].slots]
    assert guards == ["isEngaged", "isEngaged"]


def test_remove_body_then_print(core, L_flat, dL_flat):
    delta = _delta(dL_flat,
                   "delta R { modify statechart Telephone {"
                   " modify transition [Active -> Idle] {"
                   " remove [hangUp()]; } } }")
    variant = apply(core, delta, L_flat, dL_flat)
    text = pretty_print(L_flat, variant)
    assert "Active -> Idle;" in text
    assert "hangUp" not in text


# ---------------------------------------------------------------------------
# Pretty-printing

def test_pretty_print_core(core, L_flat):
    text = pretty_print(L_flat, core)
    assert text == """statechart Telephone {
  initial state Idle;
  state Active {
    state Busy;
    state Call;
  }
  Idle -> Call : [!isEngaged] numberDialed();
  Idle -> Busy : [isEngaged] numberDialed();
  Active -> Idle : hangUp();
}
"""


def test_pretty_print_round_trips(core, expected_variant, L_flat):
    for tree in (core, expected_variant):
        again = parse(L_flat, "SCDefinition", pretty_print(L_flat, tree))
        assert node_eq(tree, again)


def test_pretty_print_delta_round_trips(voicemail, dL_flat):
    text = pretty_print(dL_flat, voicemail)
    again = parse(dL_flat, "Delta", text)
    assert node_eq(voicemail, again)

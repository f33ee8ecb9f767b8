import random

import pytest

from ismc.errors import NameResolutionError
from ismc.formula import (
    And,
    Atom,
    Bool,
    FormulaSyntaxError,
    Group,
    Implies,
    Knows,
    Not,
    Or,
    Temporal,
    Until,
    check_names,
    format_formula,
    is_ectlk,
    parse_formula,
    to_nnf,
)


def random_formula(rng, atoms, agents, depth, past=False, existential=False):
    if depth == 0 or rng.random() < 0.25:
        leaf = rng.choice(atoms + ["true", "false"])
        if leaf == "true":
            return Bool(True)
        if leaf == "false":
            return Bool(False)
        atom = Atom(leaf)
        if existential and rng.random() < 0.3:
            return Not(atom)
        return atom

    def sub():
        return random_formula(rng, atoms, agents, depth - 1, past, existential)

    if existential:
        ops = ["and", "or", "EX", "EG", "EF", "EU", "Kbar", "Ebar", "Dbar", "Cbar"]
    else:
        ops = [
            "not", "and", "or", "->",
            "AX", "EX", "AG", "EG", "AF", "EF", "AU", "EU",
            "K", "Kbar", "E", "D", "C", "Ebar", "Dbar", "Cbar",
        ]
        if past:
            ops += ["AY", "AH"]
    op = rng.choice(ops)
    if op == "not":
        return Not(sub())
    if op == "and":
        return And(sub(), sub())
    if op == "or":
        return Or(sub(), sub())
    if op == "->":
        return Implies(sub(), sub())
    if op in ("AX", "EX", "AG", "EG", "AF", "EF", "AY", "AH"):
        return Temporal(op, sub())
    if op == "AU":
        return Until(True, sub(), sub())
    if op == "EU":
        return Until(False, sub(), sub())
    if op in ("K", "Kbar"):
        return Knows(rng.choice(agents), sub(), bar=op == "Kbar")
    group = None
    if rng.random() < 0.5:
        size = rng.randrange(1, len(agents) + 1)
        group = tuple(rng.sample(agents, size))
    return Group(op[0], group, sub(), bar=op.endswith("bar"))


class TestParsing:
    def test_prefix_and_implication(self):
        phi = parse_formula("AG (p -> K 1 q)")
        assert phi == Temporal("AG", Implies(Atom("p"), Knows(1, Atom("q"))))

    def test_until(self):
        assert parse_formula("E (p U q)") == Until(False, Atom("p"), Atom("q"))
        assert parse_formula("A (p U q)") == Until(True, Atom("p"), Atom("q"))
        assert parse_formula("A (p W q)") == Until(True, Atom("p"), Atom("q"), weak=True)

    def test_group_forms(self):
        assert parse_formula("C {1,2} p") == Group("C", (1, 2), Atom("p"))
        assert parse_formula("E p") == Group("E", None, Atom("p"))
        assert parse_formula("E (p and q)") == Group("E", None, And(Atom("p"), Atom("q")))
        assert parse_formula("Ebar{alice} p") == Group("E", ("alice",), Atom("p"), bar=True)

    def test_named_agent(self):
        assert parse_formula("K alice p") == Knows("alice", Atom("p"))
        assert parse_formula("Kbar 2 p") == Knows(2, Atom("p"), bar=True)

    def test_precedence(self):
        phi = parse_formula("p and q or r -> s")
        assert phi == Implies(Or(And(Atom("p"), Atom("q")), Atom("r")), Atom("s"))

    def test_syntax_error_position(self):
        with pytest.raises(FormulaSyntaxError) as err:
            parse_formula("AG (p ->")
        assert err.value.line == 1
        assert err.value.column == 9

    def test_trailing_input(self):
        with pytest.raises(FormulaSyntaxError):
            parse_formula("p q")

    def test_round_trip_random(self):
        rng = random.Random(1)
        atoms = ["p", "q", "r"]
        agents = [1, 2, "alice"]
        for _ in range(300):
            phi = random_formula(rng, atoms, agents, 4, past=True)
            assert parse_formula(format_formula(phi)) == phi


class TestNnf:
    def test_globally_dual(self):
        assert to_nnf(Not(Temporal("AG", Atom("p")))) == Temporal("EF", Not(Atom("p")))

    def test_double_negation(self):
        assert to_nnf(Not(Not(Atom("p")))) == Atom("p")

    def test_knowledge_dual(self):
        assert to_nnf(Not(Knows(1, Atom("p")))) == Knows(1, Not(Atom("p")), bar=True)

    def test_idempotent(self):
        rng = random.Random(2)
        for _ in range(300):
            phi = random_formula(rng, ["p", "q"], [1, 2], 4, past=True)
            once = to_nnf(phi)
            assert to_nnf(once) == once

    def test_negations_only_on_atoms_without_past(self):
        rng = random.Random(3)

        def check(phi):
            if isinstance(phi, Not):
                assert isinstance(phi.sub, Atom)
            elif isinstance(phi, (And, Or)):
                check(phi.left)
                check(phi.right)
            elif isinstance(phi, Until):
                check(phi.left)
                check(phi.right)
            elif isinstance(phi, (Temporal,)):
                check(phi.sub)
            elif isinstance(phi, (Knows, Group)):
                check(phi.sub)

        for _ in range(300):
            phi = random_formula(rng, ["p", "q"], [1], 4, past=False)
            check(to_nnf(phi))

    def test_implications_expanded(self):
        phi = to_nnf(Implies(Atom("p"), Atom("q")))
        assert phi == Or(Not(Atom("p")), Atom("q"))


class TestFragment:
    def test_existential_examples(self):
        assert is_ectlk(Temporal("EF", Knows(1, Atom("p"), bar=True)))
        assert not is_ectlk(Temporal("AG", Atom("p")))
        assert not is_ectlk(Knows(1, Atom("p")))
        assert not is_ectlk(Until(True, Atom("p"), Atom("q")))
        assert is_ectlk(Until(False, Atom("p"), Not(Atom("q"))))

    def test_universal_corpus_negations_are_existential(self):
        rng = random.Random(4)
        universal_ops = ["AX", "AG", "AF"]
        for _ in range(200):
            depth = rng.randrange(1, 4)

            def universal(d):
                if d == 0:
                    return rng.choice([Atom("p"), Atom("q"), Bool(True)])
                pick = rng.random()
                if pick < 0.3:
                    return Temporal(rng.choice(universal_ops), universal(d - 1))
                if pick < 0.45:
                    return Until(True, universal(d - 1), universal(d - 1))
                if pick < 0.6:
                    return Knows(1, universal(d - 1))
                if pick < 0.7:
                    return Group(rng.choice("EDC"), None, universal(d - 1))
                if pick < 0.85:
                    return And(universal(d - 1), universal(d - 1))
                return Or(universal(d - 1), universal(d - 1))

            phi = universal(depth)
            assert is_ectlk(to_nnf(Not(phi)))


class TestNames:
    def test_undeclared_group_member(self):
        phi = parse_formula("C {1,7} p")
        with pytest.raises(NameResolutionError):
            check_names(phi, ["p"], ["a1", "a2"])

    def test_undeclared_atom(self):
        with pytest.raises(NameResolutionError):
            check_names(parse_formula("AG z"), ["p"], ["a1"])

    def test_valid_names_pass(self):
        check_names(parse_formula("K a1 (p -> E {a1,2} q)"), ["p", "q"], ["a1", "a2"])

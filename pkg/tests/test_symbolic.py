import random

import pytest

from ismc.errors import FragmentError
from ismc.explicit import build_explicit_model, check_explicit
from ismc.formula import Atom, Bool, Group, Knows, Not, Temporal, parse_formula
from ismc.symbolic import (
    SymbolicChecker,
    decode_states,
    encode_system,
    explicit_edges,
    group_rel_union_vs_intersection,
)
from ismc.system import (
    AgentDef,
    AgentStateIs,
    EvolutionRule,
    InterpretedSystem,
    LstateIs,
    generate_random_system,
)
from tests.test_explicit import chain4_system, deadlock_system, single_loop_system
from tests.test_formula import random_formula


def three_chain_system():
    agent = AgentDef(
        "c",
        ("s0", "s1", "s2"),
        ("go",),
        {"s0": ("go",), "s1": ("go",), "s2": ("go",)},
        (
            EvolutionRule("s1", LstateIs("s0")),
            EvolutionRule("s2", LstateIs("s1")),
            EvolutionRule("s2", LstateIs("s2")),
        ),
    )
    return InterpretedSystem([agent], ("s0",), ("done",), {"done": AgentStateIs("c", "s2")})


class TestEncoding:
    def test_self_loop_transition_is_identity(self):
        sm = encode_system(single_loop_system())
        model = build_explicit_model(single_loop_system())
        assert explicit_edges(sm, model) == {(0, 0)}

    def test_reach_of_deadlock_is_initial_only(self):
        sm = encode_system(deadlock_system())
        assert sm.count_states(sm.reach) == 1
        assert sm.reach == sm.init

    def test_chain_fixpoint_in_three_iterations(self):
        sm = encode_system(three_chain_system())
        assert sm.reach_iterations == 3
        assert sm.count_states(sm.reach) == 3

    def test_edges_match_explicit_bfs(self):
        for seed in range(40):
            system = generate_random_system(seed)
            model = build_explicit_model(system)
            sm = encode_system(system)
            explicit = {
                (s, t) for s, outs in enumerate(model.successors) for t in outs
            }
            assert explicit_edges(sm, model) == explicit

    def test_reach_count_matches_explicit(self):
        for seed in range(40):
            system = generate_random_system(seed)
            model = build_explicit_model(system)
            sm = encode_system(system)
            assert sm.count_states(sm.reach) == len(model.states)
            assert decode_states(sm, sm.reach, model) == set(range(len(model.states)))


class TestSatSets:
    def test_truth_is_reach(self):
        sm = encode_system(chain4_system())
        checker = SymbolicChecker(sm)
        assert checker.sat_set(Bool(True)) == sm.reach

    def test_monotone_reach_growth(self):
        sm = encode_system(three_chain_system())
        # growth is monotone by construction; the recorded count proves it ran
        assert sm.reach_iterations >= 1

    def test_past_operators_rejected(self):
        sm = encode_system(chain4_system())
        with pytest.raises(FragmentError):
            SymbolicChecker(sm).sat_set(Temporal("AY", Atom("p")))

    def test_chain_fixture_sets(self):
        system = chain4_system()
        sm = encode_system(system)
        model = build_explicit_model(system)
        checker = SymbolicChecker(sm)
        for text, expected in [
            ("p", {0, 1, 2}),
            ("E p", {0, 1}),
            ("E E p", {0}),
            ("C p", set()),
            ("EF not p", {0, 1, 2, 3}),
            ("AG p", set()),
            ("EG p", {0}),  # only the path stuck before b3 keeps p... none loops
        ]:
            phi = parse_formula(text)
            got = decode_states(sm, checker.sat_set(phi), model)
            oracle = check_explicit(model, phi)
            assert got == oracle, text
            if expected is not None and text != "EG p":
                assert oracle == expected, text

    def test_complement_within_reach(self):
        rng = random.Random(20)
        for seed in range(15):
            system = generate_random_system(seed)
            sm = encode_system(system)
            checker = SymbolicChecker(sm)
            phi = random_formula(rng, list(system.atoms), [1], 3)
            sat = checker.sat_set(phi)
            nsat = checker.sat_set(Not(phi))
            m = sm.manager
            assert m.apply("AND", sat, nsat) == m.false
            assert m.apply("OR", sat, nsat) == sm.reach

    def test_knowledge_implies_truth(self):
        rng = random.Random(21)
        for seed in range(15):
            system = generate_random_system(seed)
            sm = encode_system(system)
            checker = SymbolicChecker(sm)
            phi = random_formula(rng, list(system.atoms), [1], 2)
            k = checker.sat_set(Knows(1, phi))
            s = checker.sat_set(phi)
            assert sm.manager.apply("IMPLIES", k, s) == sm.manager.true

    def test_common_below_everyone_below_knowledge(self):
        rng = random.Random(22)
        for seed in range(15):
            system = generate_random_system(seed)
            if len(system.agents) < 2:
                continue
            sm = encode_system(system)
            checker = SymbolicChecker(sm)
            phi = random_formula(rng, list(system.atoms), [1], 2)
            c = checker.sat_set(Group("C", None, phi))
            e = checker.sat_set(Group("E", None, phi))
            m = sm.manager
            assert m.apply("IMPLIES", c, e) == m.true
            for i in range(1, len(system.agents) + 1):
                k = checker.sat_set(Knows(i, phi))
                assert m.apply("IMPLIES", e, k) == m.true

    def test_union_vs_intersection_relations(self):
        system = chain4_system()
        sm = encode_system(system)
        union, inter = group_rel_union_vs_intersection(sm, (0, 1))
        m = sm.manager
        assert m.apply("IMPLIES", inter, union) == m.true

    def test_differential_against_oracle(self):
        rng = random.Random(23)
        for seed in range(40):
            system = generate_random_system(seed)
            model = build_explicit_model(system)
            sm = encode_system(system)
            checker = SymbolicChecker(sm)
            atoms = list(system.atoms)
            agents = list(range(1, len(system.agents) + 1))
            for _ in range(6):
                phi = random_formula(rng, atoms, agents, 3)
                got = decode_states(sm, checker.sat_set(phi), model)
                assert got == check_explicit(model, phi), (seed, str(phi))

    def test_check_at_initial_state(self):
        rng = random.Random(24)
        for seed in range(20):
            system = generate_random_system(seed)
            model = build_explicit_model(system)
            sm = encode_system(system)
            checker = SymbolicChecker(sm)
            assert checker.check(Bool(True))
            phi = random_formula(rng, list(system.atoms), [1], 3)
            assert checker.check(phi) == (0 in check_explicit(model, phi))

    def test_stats_shape(self):
        sm = encode_system(chain4_system())
        checker = SymbolicChecker(sm)
        checker.check(parse_formula("EF p"))
        stats = checker.stats()
        assert stats["reachable_states"] == 4
        assert stats["bdd_nodes"] >= 4
        assert "until" in stats["fixpoint_iterations"]

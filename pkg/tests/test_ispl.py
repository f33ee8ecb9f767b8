import pathlib

import pytest
from hypothesis import given, settings, strategies as st

from ismc.formula import Implies, Atom, Knows, Temporal
from ismc.ispl import Diagnostic, IsplError, parse_ispl, serialize_ispl, try_parse_ispl
from ismc.system import generate_random_system

FIXTURES = pathlib.Path(__file__).parent / "fixtures"

SAMPLE_AGENT = """
Agent SampleAgent
 Lstate = {s0,s1,s2};
 Action = {a1,a2}
 Protocol:
   s0: {a1};
   s1: {a2};
   s2: {a1,a2};
 end Protocol
 Ev:
   s1 if ((AnotherAgent.Action=a7));
   s2 if Lstate=s1;
 end Ev
end Agent

Agent AnotherAgent
 Lstate = {t0};
 Action = {a7};
 Protocol:
   t0: {a7};
 end Protocol
 Ev:
 end Ev
end Agent

Evaluation
  ready if SampleAgent.Lstate=s2;
end Evaluation

InitStates
  SampleAgent.Lstate=s0 and AnotherAgent.Lstate=t0;
end InitStates

Formulae
  AG (ready -> K 2 ready);
end Formulae
"""


class TestParse:
    def test_sample_agent_shape(self):
        system, formulas = parse_ispl(SAMPLE_AGENT)
        agent = system.agents[0]
        assert agent.name == "SampleAgent"
        assert len(agent.local_states) == 3
        assert len(agent.actions) == 2
        assert [len(agent.protocol[s]) for s in agent.local_states] == [1, 1, 2]
        assert len(agent.evolution) == 2
        assert len(formulas) == 1
        assert formulas[0] == Temporal("AG", Implies(Atom("ready"), Knows(2, Atom("ready"))))

    def test_comments_ignored(self):
        text = SAMPLE_AGENT.replace(
            "Agent SampleAgent", "-- a comment line\nAgent SampleAgent -- trailing"
        )
        system, _ = parse_ispl(text)
        assert system.agents[0].name == "SampleAgent"

    def test_protocol_incomplete_diagnostic(self):
        text = SAMPLE_AGENT.replace("   s2: {a1,a2};\n", "")
        result, diagnostics = try_parse_ispl(text)
        assert result is None
        assert any("protocol incomplete for s2" in d.message for d in diagnostics)

    def test_unknown_action_in_guard(self):
        text = SAMPLE_AGENT.replace("AnotherAgent.Action=a7", "AnotherAgent.Action=zz")
        result, diagnostics = try_parse_ispl(text)
        assert result is None
        assert any("unknown action AnotherAgent.zz" in d.message for d in diagnostics)

    def test_init_must_pin_every_agent(self):
        text = SAMPLE_AGENT.replace(
            "SampleAgent.Lstate=s0 and AnotherAgent.Lstate=t0", "SampleAgent.Lstate=s0"
        )
        result, diagnostics = try_parse_ispl(text)
        assert result is None
        assert any("AnotherAgent is not pinned" in d.message for d in diagnostics)

    def test_duplicate_pin_rejected(self):
        text = SAMPLE_AGENT.replace(
            "SampleAgent.Lstate=s0 and AnotherAgent.Lstate=t0",
            "SampleAgent.Lstate=s0 and SampleAgent.Lstate=s1 and AnotherAgent.Lstate=t0",
        )
        result, diagnostics = try_parse_ispl(text)
        assert result is None
        assert any("pinned twice" in d.message for d in diagnostics)

    def test_formula_name_resolution(self):
        text = SAMPLE_AGENT.replace("K 2 ready", "K 7 ready")
        result, diagnostics = try_parse_ispl(text)
        assert result is None
        assert any("agent index 7" in d.message for d in diagnostics)

    def test_syntax_error_carries_position(self):
        result, diagnostics = try_parse_ispl("Agent A\n Lstate = {s0;\n")
        assert result is None
        (diag,) = diagnostics
        assert diag.line == 2
        assert diag.column == 14
        assert diag.expected

    def test_parse_error_raises_with_diagnostics(self):
        with pytest.raises(IsplError) as err:
            parse_ispl("not a model")
        assert err.value.diagnostics

    def test_empty_protocol_entry_allowed(self):
        text = SAMPLE_AGENT.replace("s0: {a1};", "s0: {};")
        system, _ = parse_ispl(text)
        assert system.agents[0].protocol["s0"] == ()


class TestRoundTrip:
    def test_parse_serialize_parse_identity(self):
        for seed in range(60):
            system = generate_random_system(seed)
            formulas = [Temporal("AG", Atom(system.atoms[0]))]
            text = serialize_ispl(system, formulas)
            system2, formulas2 = parse_ispl(text)
            assert system2 == system
            assert formulas2 == formulas

    def test_serialization_idempotent(self):
        system, formulas = parse_ispl(SAMPLE_AGENT)
        once = serialize_ispl(system, formulas)
        system2, formulas2 = parse_ispl(once)
        assert serialize_ispl(system2, formulas2) == once

    def test_golden_chain_fixture(self):
        from tests.test_explicit import chain4_system
        from ismc.formula import parse_formula

        system = chain4_system()
        formulas = [parse_formula("C p"), parse_formula("AH p")]
        text = serialize_ispl(system, formulas)
        golden = (FIXTURES / "chain4.ispl").read_text()
        assert text == golden
        system2, formulas2 = parse_ispl(golden)
        assert system2 == system
        assert formulas2 == formulas


class TestDiagnosticBounds:
    @staticmethod
    def assert_in_bounds(text, diagnostics):
        lines = text.split("\n")
        for d in diagnostics:
            assert 1 <= d.line <= len(lines) + 1
            assert d.column >= 1

    def test_bounds_on_truncations(self):
        for cut in range(0, len(SAMPLE_AGENT), 7):
            text = SAMPLE_AGENT[:cut]
            result, diagnostics = try_parse_ispl(text)
            if result is None:
                assert diagnostics
                self.assert_in_bounds(text, diagnostics)

    @settings(max_examples=300, deadline=None)
    @given(st.text(alphabet=st.characters(codec="ascii"), max_size=200))
    def test_total_on_arbitrary_text(self, text):
        result, diagnostics = try_parse_ispl(text)
        if result is None:
            assert diagnostics
            self.assert_in_bounds(text, diagnostics)

    @settings(max_examples=150, deadline=None)
    @given(st.integers(0, 10_000), st.integers(0, 400), st.integers(0, 400))
    def test_total_on_mutated_models(self, seed, cut_at, insert_at):
        base = serialize_ispl(generate_random_system(seed % 50), [Atom("p0")])
        mutated = base[:cut_at] + "}" + base[insert_at:]
        result, diagnostics = try_parse_ispl(mutated)
        if result is None:
            assert diagnostics

"""Parser, validator and canonical serializer for the `.ispl` input format.

A model file declares agents (local states, actions, a protocol and guarded
evolution rules), one Evaluation section defining atoms over local states,
one InitStates section pinning exactly one initial global state, and one
Formulae section with at least one property.  `--` starts a line comment.
The normative grammar lives in docs/grammar.md.

Parsing is total: any input yields either a model or a list of diagnostics
with line/column positions, never an unhandled crash.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .formula import Formula, FormulaSyntaxError, check_names, format_formula, parse_formula
from .errors import NameResolutionError
from .system import (
    ActionIs,
    AgentDef,
    AgentStateIs,
    EvolutionRule,
    GuardAnd,
    GuardExpr,
    GuardOr,
    InterpretedSystem,
    LstateIs,
    ValAnd,
    ValExpr,
    ValOr,
)


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    message: str
    line: int
    column: int
    expected: tuple = ()

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.severity}: {self.message}"


class IsplError(Exception):
    """Raised by parse_ispl; carries every collected diagnostic."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


_KEYWORDS = {
    "Agent", "Lstate", "Action", "Protocol", "Ev", "end", "if",
    "and", "or", "Evaluation", "InitStates", "Formulae",
}

# "-" and ">" only occur inside formula text, which is re-lexed separately
_PUNCT = set("{}()=.:;,->")


def _strip_comments(text: str) -> str:
    out = []
    for line in text.split("\n"):
        cut = line.find("--")
        if cut >= 0:
            line = line[:cut] + " " * (len(line) - cut)
        out.append(line)
    return "\n".join(out)


@dataclass(frozen=True)
class _Tok:
    kind: str
    value: str
    line: int
    col: int
    offset: int


class _SyntaxFailure(Exception):
    def __init__(self, diagnostic: Diagnostic):
        self.diagnostic = diagnostic


def _lex(text: str):
    tokens = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            col += 1
            i += 1
            continue
        if ch in _PUNCT:
            tokens.append(_Tok(ch, ch, line, col, i))
            col += 1
            i += 1
            continue
        if ch.isalnum() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = word if word in _KEYWORDS else "ident"
            tokens.append(_Tok(kind, word, line, col, i))
            col += j - i
            i = j
            continue
        raise _SyntaxFailure(
            Diagnostic("error", f"unexpected character {ch!r}", line, col)
        )
    tokens.append(_Tok("eof", "", line, col, n))
    return tokens


# positioned guard/valuation atoms recorded for semantic validation
@dataclass(frozen=True)
class _CondAtom:
    kind: str  # "lstate", "action", "agent-state"
    agent: str | None
    name: str
    line: int
    col: int


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _lex(text)
        self.pos = 0

    def peek(self) -> _Tok:
        return self.tokens[self.pos]

    def advance(self) -> _Tok:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str, tok: _Tok | None = None, expected=()) -> _SyntaxFailure:
        tok = tok or self.peek()
        return _SyntaxFailure(
            Diagnostic("error", message, tok.line, tok.col, tuple(expected))
        )

    def expect(self, kind: str) -> _Tok:
        tok = self.peek()
        if tok.kind != kind:
            shown = tok.value if tok.value else "end of input"
            raise self.fail(f"expected {kind!r}, found {shown!r}", tok, expected=(kind,))
        return self.advance()

    def accept(self, kind: str) -> _Tok | None:
        if self.peek().kind == kind:
            return self.advance()
        return None

    def expect_ident(self) -> _Tok:
        tok = self.peek()
        if tok.kind != "ident":
            shown = tok.value if tok.value else "end of input"
            raise self.fail(f"expected an identifier, found {shown!r}", tok, expected=("ident",))
        return self.advance()

    # -- agent sections -------------------------------------------------

    def parse_model(self):
        agents = []
        evaluation = None
        init = None
        formulae = None
        first = self.peek()
        while self.peek().kind == "Agent":
            agents.append(self.parse_agent())
        if not agents:
            raise self.fail("a model starts with at least one Agent section", first,
                            expected=("Agent",))
        while self.peek().kind != "eof":
            tok = self.peek()
            if tok.kind == "Evaluation":
                if evaluation is not None:
                    raise self.fail("duplicate Evaluation section", tok)
                evaluation = self.parse_evaluation()
            elif tok.kind == "InitStates":
                if init is not None:
                    raise self.fail("duplicate InitStates section", tok)
                init = self.parse_initstates()
            elif tok.kind == "Formulae":
                if formulae is not None:
                    raise self.fail("duplicate Formulae section", tok)
                formulae = self.parse_formulae()
            elif tok.kind == "Agent":
                raise self.fail("Agent sections must precede the other sections", tok)
            else:
                raise self.fail(
                    f"expected a section keyword, found {tok.value or 'end of input'!r}",
                    tok, expected=("Evaluation", "InitStates", "Formulae"),
                )
        missing = [
            name
            for name, sec in (
                ("Evaluation", evaluation),
                ("InitStates", init),
                ("Formulae", formulae),
            )
            if sec is None
        ]
        if missing:
            raise self.fail(f"missing section(s): {', '.join(missing)}", self.peek())
        return agents, evaluation, init, formulae

    def parse_agent(self):
        self.expect("Agent")
        name_tok = self.expect_ident()
        self.expect("Lstate")
        self.expect("=")
        lstates = self.parse_name_list()
        self.accept(";")
        self.expect("Action")
        self.expect("=")
        actions = self.parse_name_list()
        self.accept(";")
        self.expect("Protocol")
        self.expect(":")
        protocol = []
        while self.peek().kind == "ident":
            state_tok = self.advance()
            self.expect(":")
            entries = self.parse_name_list(allow_empty=True)
            self.accept(";")
            protocol.append((state_tok, entries))
        self.expect("end")
        self.expect("Protocol")
        self.expect("Ev")
        self.expect(":")
        rules = []
        while self.peek().kind == "ident":
            target_tok = self.advance()
            self.expect("if")
            atoms: list[_CondAtom] = []
            guard = self.parse_guard(atoms)
            self.expect(";")
            rules.append((target_tok, guard, atoms))
        self.expect("end")
        self.expect("Ev")
        self.expect("end")
        self.expect("Agent")
        return (name_tok, lstates, actions, protocol, rules)

    def parse_name_list(self, allow_empty: bool = False):
        self.expect("{")
        names = []
        if self.peek().kind == "ident":
            names.append(self.advance())
            while self.accept(","):
                names.append(self.expect_ident())
        if not names and not allow_empty:
            raise self.fail("expected at least one name", self.peek(), expected=("ident",))
        self.expect("}")
        return names

    # -- guards -----------------------------------------------------------

    def parse_guard(self, atoms) -> GuardExpr:
        expr = self.parse_guard_and(atoms)
        while self.accept("or"):
            expr = GuardOr(expr, self.parse_guard_and(atoms))
        return expr

    def parse_guard_and(self, atoms) -> GuardExpr:
        expr = self.parse_guard_atom(atoms)
        while self.accept("and"):
            expr = GuardAnd(expr, self.parse_guard_atom(atoms))
        return expr

    def parse_guard_atom(self, atoms) -> GuardExpr:
        tok = self.peek()
        if tok.kind == "(":
            self.advance()
            inner = self.parse_guard(atoms)
            self.expect(")")
            return inner
        if tok.kind == "Lstate":
            self.advance()
            self.expect("=")
            state = self.expect_ident()
            atoms.append(_CondAtom("lstate", None, state.value, state.line, state.col))
            return LstateIs(state.value)
        if tok.kind == "ident":
            agent = self.advance()
            self.expect(".")
            self.expect("Action")
            self.expect("=")
            action = self.expect_ident()
            atoms.append(
                _CondAtom("action", agent.value, action.value, agent.line, agent.col)
            )
            return ActionIs(agent.value, action.value)
        raise self.fail(
            f"expected a guard condition, found {tok.value or 'end of input'!r}",
            tok, expected=("(", "Lstate", "ident"),
        )

    # -- evaluation ---------------------------------------------------------

    def parse_evaluation(self):
        self.expect("Evaluation")
        entries = []
        while self.peek().kind == "ident":
            atom_tok = self.advance()
            self.expect("if")
            atoms: list[_CondAtom] = []
            cond = self.parse_val(atoms)
            self.expect(";")
            entries.append((atom_tok, cond, atoms))
        self.expect("end")
        self.expect("Evaluation")
        return entries

    def parse_val(self, atoms) -> ValExpr:
        expr = self.parse_val_and(atoms)
        while self.accept("or"):
            expr = ValOr(expr, self.parse_val_and(atoms))
        return expr

    def parse_val_and(self, atoms) -> ValExpr:
        expr = self.parse_val_atom(atoms)
        while self.accept("and"):
            expr = ValAnd(expr, self.parse_val_atom(atoms))
        return expr

    def parse_val_atom(self, atoms) -> ValExpr:
        tok = self.peek()
        if tok.kind == "(":
            self.advance()
            inner = self.parse_val(atoms)
            self.expect(")")
            return inner
        if tok.kind == "ident":
            agent = self.advance()
            self.expect(".")
            self.expect("Lstate")
            self.expect("=")
            state = self.expect_ident()
            atoms.append(
                _CondAtom("agent-state", agent.value, state.value, agent.line, agent.col)
            )
            return AgentStateIs(agent.value, state.value)
        raise self.fail(
            f"expected a state condition, found {tok.value or 'end of input'!r}",
            tok, expected=("(", "ident"),
        )

    # -- init states ----------------------------------------------------------

    def parse_initstates(self):
        self.expect("InitStates")
        pins = []
        agent = self.expect_ident()
        pins.append(self._parse_init_pin(agent))
        while self.accept("and"):
            pins.append(self._parse_init_pin(self.expect_ident()))
        self.expect(";")
        self.expect("end")
        self.expect("InitStates")
        return pins

    def _parse_init_pin(self, agent_tok: _Tok):
        self.expect(".")
        self.expect("Lstate")
        self.expect("=")
        state = self.expect_ident()
        return (agent_tok, state)

    # -- formulae -------------------------------------------------------------

    def parse_formulae(self):
        kw = self.expect("Formulae")
        entries = []
        while self.peek().kind not in ("end", "eof"):
            start = self.peek()
            depth = 0
            while True:
                tok = self.peek()
                if tok.kind == "eof":
                    raise self.fail("unterminated formula (missing ';')", tok, expected=(";",))
                if tok.kind == ";" and depth == 0:
                    break
                if tok.kind == "(":
                    depth += 1
                elif tok.kind == ")":
                    depth = max(0, depth - 1)
                self.advance()
            end = self.peek()
            raw = self.text[start.offset:end.offset]
            self.advance()  # the semicolon
            try:
                phi = parse_formula(raw)
            except FormulaSyntaxError as err:
                line = start.line + err.line - 1
                col = err.column + (start.col - 1 if err.line == 1 else 0)
                raise _SyntaxFailure(
                    Diagnostic("error", err.message, line, col, err.expected)
                )
            entries.append((start, phi))
        self.expect("end")
        self.expect("Formulae")
        if not entries:
            raise self.fail("Formulae section needs at least one formula", kw)
        return entries


def _validate(agents_raw, evaluation_raw, init_raw, formulae_raw):
    diagnostics: list[Diagnostic] = []

    def err(msg, tok):
        diagnostics.append(Diagnostic("error", msg, tok.line, tok.col))

    agent_defs: list[AgentDef] = []
    seen_names: dict[str, _Tok] = {}
    for name_tok, lstates, actions, protocol, rules in agents_raw:
        name = name_tok.value
        if name in seen_names:
            err(f"duplicate agent name {name}", name_tok)
        seen_names[name] = name_tok
        state_names = [t.value for t in lstates]
        for tok in lstates:
            if state_names.count(tok.value) > 1:
                err(f"agent {name}: duplicate local state {tok.value}", tok)
                break
        action_names = [t.value for t in actions]
        for tok in actions:
            if action_names.count(tok.value) > 1:
                err(f"agent {name}: duplicate action {tok.value}", tok)
                break
        proto: dict[str, tuple] = {}
        for state_tok, entry_toks in protocol:
            if state_tok.value not in state_names:
                err(f"agent {name}: protocol for unknown state {state_tok.value}", state_tok)
                continue
            if state_tok.value in proto:
                err(f"agent {name}: duplicate protocol entry for {state_tok.value}", state_tok)
                continue
            for a in entry_toks:
                if a.value not in action_names:
                    err(f"agent {name}: protocol uses unknown action {a.value}", a)
            proto[state_tok.value] = tuple(
                a.value for a in entry_toks if a.value in action_names
            )
        for state_tok in lstates:
            if state_tok.value not in proto:
                err(f"agent {name}: protocol incomplete for {state_tok.value}", state_tok)
                proto[state_tok.value] = ()
        rule_list = []
        for target_tok, guard, _atom_positions in rules:
            if target_tok.value not in state_names:
                err(f"agent {name}: rule targets unknown state {target_tok.value}", target_tok)
                continue
            rule_list.append(EvolutionRule(target_tok.value, guard))
        agent_defs.append(
            AgentDef(name, tuple(state_names), tuple(action_names), proto, tuple(rule_list))
        )

    by_name = {a.name: a for a in agent_defs}

    # guard references need every agent declared, so check them afterwards
    for (name_tok, lstates, actions, protocol, rules), agent in zip(agents_raw, agent_defs):
        for _target_tok, _guard, atom_positions in rules:
            for atom in atom_positions:
                if atom.kind == "lstate":
                    if atom.name not in agent.local_states:
                        diagnostics.append(Diagnostic(
                            "error",
                            f"agent {agent.name}: guard references unknown state {atom.name}",
                            atom.line, atom.col,
                        ))
                else:
                    other = by_name.get(atom.agent)
                    if other is None:
                        diagnostics.append(Diagnostic(
                            "error",
                            f"agent {agent.name}: guard references unknown agent {atom.agent}",
                            atom.line, atom.col,
                        ))
                    elif atom.name not in other.actions:
                        diagnostics.append(Diagnostic(
                            "error",
                            f"agent {agent.name}: guard references unknown action "
                            f"{atom.agent}.{atom.name}",
                            atom.line, atom.col,
                        ))

    atoms: list[str] = []
    valuation: dict[str, ValExpr] = {}
    for atom_tok, cond, cond_atoms in evaluation_raw:
        if atom_tok.value in valuation:
            diagnostics.append(Diagnostic(
                "error", f"duplicate atom {atom_tok.value}", atom_tok.line, atom_tok.col
            ))
            continue
        for ca in cond_atoms:
            other = by_name.get(ca.agent)
            if other is None:
                diagnostics.append(Diagnostic(
                    "error", f"atom {atom_tok.value}: unknown agent {ca.agent}",
                    ca.line, ca.col,
                ))
            elif ca.name not in other.local_states:
                diagnostics.append(Diagnostic(
                    "error",
                    f"atom {atom_tok.value}: unknown state {ca.agent}.{ca.name}",
                    ca.line, ca.col,
                ))
        atoms.append(atom_tok.value)
        valuation[atom_tok.value] = cond

    pinned: dict[str, str] = {}
    for agent_tok, state_tok in init_raw:
        agent = by_name.get(agent_tok.value)
        if agent is None:
            diagnostics.append(Diagnostic(
                "error", f"InitStates: unknown agent {agent_tok.value}",
                agent_tok.line, agent_tok.col,
            ))
            continue
        if agent_tok.value in pinned:
            diagnostics.append(Diagnostic(
                "error", f"InitStates: agent {agent_tok.value} pinned twice "
                "(one initial global state is required)",
                agent_tok.line, agent_tok.col,
            ))
            continue
        if state_tok.value not in agent.local_states:
            diagnostics.append(Diagnostic(
                "error",
                f"InitStates: {state_tok.value} is not a state of {agent_tok.value}",
                state_tok.line, state_tok.col,
            ))
            continue
        pinned[agent_tok.value] = state_tok.value
    if init_raw:
        for agent in agent_defs:
            if agent.name not in pinned:
                tok = init_raw[0][0]
                diagnostics.append(Diagnostic(
                    "error", f"InitStates: agent {agent.name} is not pinned",
                    tok.line, tok.col,
                ))

    formulas: list[Formula] = []
    agent_names = [a.name for a in agent_defs]
    for start_tok, phi in formulae_raw:
        try:
            check_names(phi, atoms, agent_names)
        except NameResolutionError as e:
            diagnostics.append(Diagnostic("error", str(e), start_tok.line, start_tok.col))
            continue
        formulas.append(phi)

    if diagnostics:
        return None, diagnostics

    initial = tuple(pinned[a.name] for a in agent_defs)
    system = InterpretedSystem(agent_defs, initial, tuple(atoms), valuation)
    return (system, formulas), diagnostics


def try_parse_ispl(text: str):
    """(model-and-formulas or None, diagnostics)."""
    try:
        clean = _strip_comments(text)
        parser = _Parser(clean)
        sections = parser.parse_model()
    except _SyntaxFailure as failure:
        return None, [failure.diagnostic]
    return _validate(*sections)


def parse_ispl(text: str):
    """InterpretedSystem plus formula list, or raise IsplError."""
    result, diagnostics = try_parse_ispl(text)
    if result is None:
        raise IsplError(diagnostics)
    return result


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


# precedence levels: or < and < atom; right operands print one level up so
# right-nested trees keep their parentheses and reparse to the same value
def _cond_text(node, leaf, and_type, or_type, level: int = 1) -> str:
    if isinstance(node, and_type):
        text = (
            f"{_cond_text(node.left, leaf, and_type, or_type, 2)} and "
            f"{_cond_text(node.right, leaf, and_type, or_type, 3)}"
        )
        return f"({text})" if level > 2 else text
    if isinstance(node, or_type):
        text = (
            f"{_cond_text(node.left, leaf, and_type, or_type, 1)} or "
            f"{_cond_text(node.right, leaf, and_type, or_type, 2)}"
        )
        return f"({text})" if level > 1 else text
    return leaf(node)


def _guard_text(guard: GuardExpr) -> str:
    def leaf(node):
        if isinstance(node, LstateIs):
            return f"Lstate={node.state}"
        if isinstance(node, ActionIs):
            return f"{node.agent}.Action={node.action}"
        raise TypeError(f"not a guard: {node!r}")

    return _cond_text(guard, leaf, GuardAnd, GuardOr)


def _val_text(cond: ValExpr) -> str:
    def leaf(node):
        if isinstance(node, AgentStateIs):
            return f"{node.agent}.Lstate={node.state}"
        raise TypeError(f"not a valuation condition: {node!r}")

    return _cond_text(cond, leaf, ValAnd, ValOr)


def serialize_ispl(system: InterpretedSystem, formulas) -> str:
    """Canonical text accepted by parse_ispl; declaration order is kept."""
    lines: list[str] = []
    for agent in system.agents:
        lines.append(f"Agent {agent.name}")
        lines.append(f"  Lstate = {{{','.join(agent.local_states)}}};")
        lines.append(f"  Action = {{{','.join(agent.actions)}}};")
        lines.append("  Protocol:")
        for state in agent.local_states:
            enabled = ",".join(agent.protocol[state])
            lines.append(f"    {state}: {{{enabled}}};")
        lines.append("  end Protocol")
        lines.append("  Ev:")
        for rule in agent.evolution:
            lines.append(f"    {rule.target} if {_guard_text(rule.guard)};")
        lines.append("  end Ev")
        lines.append("end Agent")
        lines.append("")
    lines.append("Evaluation")
    for atom in system.atoms:
        lines.append(f"  {atom} if {_val_text(system.valuation[atom])};")
    lines.append("end Evaluation")
    lines.append("")
    lines.append("InitStates")
    pins = " and ".join(
        f"{agent.name}.Lstate={state}"
        for agent, state in zip(system.agents, system.initial_state)
    )
    lines.append(f"  {pins};")
    lines.append("end InitStates")
    lines.append("")
    lines.append("Formulae")
    for phi in formulas:
        lines.append(f"  {format_formula(phi)};")
    lines.append("end Formulae")
    return "\n".join(lines) + "\n"

"""Formula language for branching-time temporal-epistemic properties.

The operator set covers Boolean connectives, the temporal quantifier pairs
(next, globally, finally, until and weak until in both path-quantified
forms), one step and globally into the past, individual knowledge, and the
everyone/distributed/common group knowledge operators with their diamond
("bar") duals.  Agents are referenced by declared name or 1-based position;
a group operator without an explicit set ranges over all agents.

Weak until exists so negation normal form stays closed: the dual of a
universal until is existential, but the dual of an existential until needs
a universal weak until (no disjunction of strong until and globally is
equivalent under the path quantifier).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .errors import NameResolutionError

AgentRef = Union[str, int]


class Formula:

    def __str__(self) -> str:
        return format_formula(self)


@dataclass(frozen=True, slots=True)
class Bool(Formula):
    value: bool


@dataclass(frozen=True, slots=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True, slots=True)
class Not(Formula):
    sub: Formula


@dataclass(frozen=True, slots=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Implies(Formula):
    left: Formula
    right: Formula


TEMPORAL_OPS = ("AX", "EX", "AG", "EG", "AF", "EF", "AY", "AH")


@dataclass(frozen=True, slots=True)
class Temporal(Formula):
    """Unary temporal operator, one of TEMPORAL_OPS."""

    op: str
    sub: Formula


@dataclass(frozen=True, slots=True)
class Until(Formula):
    """A(left U right) / E(left U right), weak variants release the until."""

    universal: bool
    left: Formula
    right: Formula
    weak: bool = False


@dataclass(frozen=True, slots=True)
class Knows(Formula):
    """K_agent, or its diamond dual when bar is set."""

    agent: AgentRef
    sub: Formula
    bar: bool = False


@dataclass(frozen=True, slots=True)
class Group(Formula):
    """Group knowledge: op is E, D, or C; group None means all agents."""

    op: str
    group: tuple | None
    sub: Formula
    bar: bool = False


def conj(parts) -> Formula:
    parts = list(parts)
    if not parts:
        return Bool(True)
    acc = parts[0]
    for p in parts[1:]:
        acc = And(acc, p)
    return acc


def disj(parts) -> Formula:
    parts = list(parts)
    if not parts:
        return Bool(False)
    acc = parts[0]
    for p in parts[1:]:
        acc = Or(acc, p)
    return acc


# ---------------------------------------------------------------------------
# negation normal form
# ---------------------------------------------------------------------------

_TEMPORAL_DUAL = {"AX": "EX", "EX": "AX", "AG": "EF", "EF": "AG", "AF": "EG", "EG": "AF"}


def to_nnf(phi: Formula) -> Formula:
    """Push negations down to atoms; implications are expanded away.

    One exception: the past operators have no existential duals in this
    language, so a negated past operator keeps its negation in place (over
    an NNF body).  Every backend that accepts past operators also accepts
    their complement directly.
    """
    return _nnf(phi, False)


def _nnf(phi: Formula, neg: bool) -> Formula:
    if isinstance(phi, Bool):
        return Bool(phi.value != neg)
    if isinstance(phi, Atom):
        return Not(phi) if neg else phi
    if isinstance(phi, Not):
        return _nnf(phi.sub, not neg)
    if isinstance(phi, And):
        l, r = _nnf(phi.left, neg), _nnf(phi.right, neg)
        return Or(l, r) if neg else And(l, r)
    if isinstance(phi, Or):
        l, r = _nnf(phi.left, neg), _nnf(phi.right, neg)
        return And(l, r) if neg else Or(l, r)
    if isinstance(phi, Implies):
        return _nnf(Or(Not(phi.left), phi.right), neg)
    if isinstance(phi, Temporal):
        if phi.op not in _TEMPORAL_DUAL:
            node = Temporal(phi.op, _nnf(phi.sub, False))
            return Not(node) if neg else node
        if not neg:
            return Temporal(phi.op, _nnf(phi.sub, False))
        return Temporal(_TEMPORAL_DUAL[phi.op], _nnf(phi.sub, True))
    if isinstance(phi, Until):
        if not neg:
            return Until(phi.universal, _nnf(phi.left, False), _nnf(phi.right, False), phi.weak)
        na = _nnf(phi.left, True)
        nb = _nnf(phi.right, True)
        if not phi.weak:
            if phi.universal:
                # not A(a U b) = E(not b U (not a and not b)) or EG not b
                return Or(
                    Until(False, nb, And(na, nb), weak=False),
                    Temporal("EG", nb),
                )
            # not E(a U b) = A(not b W (not a and not b))
            return Until(True, nb, And(na, nb), weak=True)
        if phi.universal:
            # not A(a W b) = E(not b U (not a and not b))
            return Until(False, nb, And(na, nb), weak=False)
        # not E(a W b) = A(not b U (not a and not b))
        return Until(True, nb, And(na, nb), weak=False)
    if isinstance(phi, Knows):
        return Knows(phi.agent, _nnf(phi.sub, neg), bar=phi.bar != neg)
    if isinstance(phi, Group):
        return Group(phi.op, phi.group, _nnf(phi.sub, neg), bar=phi.bar != neg)
    raise TypeError(f"not a formula: {phi!r}")


def _has_past(phi: Formula) -> bool:
    if isinstance(phi, Temporal):
        return phi.op in ("AY", "AH") or _has_past(phi.sub)
    if isinstance(phi, (Bool, Atom)):
        return False
    if isinstance(phi, Not):
        return _has_past(phi.sub)
    if isinstance(phi, (And, Or, Implies)):
        return _has_past(phi.left) or _has_past(phi.right)
    if isinstance(phi, Until):
        return _has_past(phi.left) or _has_past(phi.right)
    if isinstance(phi, (Knows, Group)):
        return _has_past(phi.sub)
    return False


def is_ectlk(phi: Formula) -> bool:
    """True when an NNF formula stays in the existential fragment."""
    if isinstance(phi, Bool):
        return True
    if isinstance(phi, Atom):
        return True
    if isinstance(phi, Not):
        return isinstance(phi.sub, Atom)
    if isinstance(phi, (And, Or)):
        return is_ectlk(phi.left) and is_ectlk(phi.right)
    if isinstance(phi, Temporal):
        return phi.op in ("EX", "EG", "EF") and is_ectlk(phi.sub)
    if isinstance(phi, Until):
        return (not phi.universal) and (not phi.weak) and is_ectlk(phi.left) and is_ectlk(phi.right)
    if isinstance(phi, Knows):
        return phi.bar and is_ectlk(phi.sub)
    if isinstance(phi, Group):
        return phi.bar and is_ectlk(phi.sub)
    return False


# ---------------------------------------------------------------------------
# concrete syntax
# ---------------------------------------------------------------------------


class FormulaSyntaxError(Exception):
    def __init__(self, message: str, line: int, column: int, expected=()):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column
        self.expected = tuple(expected)


_KEYWORDS = {
    "not", "and", "or", "true", "false",
    "AX", "EX", "AG", "EG", "AF", "EF", "AY", "AH",
    "A", "E", "U", "W", "K", "Kbar", "D", "C", "Ebar", "Dbar", "Cbar",
}


def _tokenize(text: str):
    tokens = []
    line, col = 1, 1
    i = 0
    while i < len(text):
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
        if ch in "(){},":
            tokens.append((ch, ch, line, col))
            col += 1
            i += 1
            continue
        if text.startswith("->", i):
            tokens.append(("->", "->", line, col))
            col += 2
            i += 2
            continue
        if ch.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            tokens.append(("int", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = word if word in _KEYWORDS else "ident"
            tokens.append((kind, word, line, col))
            col += j - i
            i = j
            continue
        raise FormulaSyntaxError(f"unexpected character {ch!r}", line, col)
    tokens.append(("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind):
        tok = self.peek()
        if tok[0] != kind:
            raise FormulaSyntaxError(
                f"expected {kind!r}, found {tok[1] or 'end of input'!r}",
                tok[2], tok[3], expected=(kind,),
            )
        return self.next()

    def parse_formula(self) -> Formula:
        left = self.parse_or()
        if self.peek()[0] == "->":
            self.next()
            right = self.parse_formula()
            return Implies(left, right)
        return left

    def parse_or(self) -> Formula:
        acc = self.parse_and()
        while self.peek()[0] == "or":
            self.next()
            acc = Or(acc, self.parse_and())
        return acc

    def parse_and(self) -> Formula:
        acc = self.parse_unary()
        while self.peek()[0] == "and":
            self.next()
            acc = And(acc, self.parse_unary())
        return acc

    def parse_agent(self) -> AgentRef:
        tok = self.peek()
        if tok[0] == "int":
            self.next()
            return int(tok[1])
        if tok[0] == "ident":
            self.next()
            return tok[1]
        raise FormulaSyntaxError(
            f"expected agent name or index, found {tok[1] or 'end of input'!r}",
            tok[2], tok[3], expected=("ident", "int"),
        )

    def parse_group(self) -> tuple | None:
        if self.peek()[0] != "{":
            return None
        self.next()
        members = [self.parse_agent()]
        while self.peek()[0] == ",":
            self.next()
            members.append(self.parse_agent())
        self.expect("}")
        return tuple(members)

    def parse_unary(self) -> Formula:
        tok = self.peek()
        kind = tok[0]
        if kind == "not":
            self.next()
            return Not(self.parse_unary())
        if kind in TEMPORAL_OPS:
            self.next()
            return Temporal(kind, self.parse_unary())
        if kind == "A":
            self.next()
            self.expect("(")
            left = self.parse_formula()
            weak = self._until_kind()
            right = self.parse_formula()
            self.expect(")")
            return Until(True, left, right, weak)
        if kind == "E":
            self.next()
            if self.peek()[0] == "{":
                group = self.parse_group()
                return Group("E", group, self.parse_unary())
            if self.peek()[0] == "(":
                self.next()
                left = self.parse_formula()
                nxt = self.peek()[0]
                if nxt in ("U", "W"):
                    weak = self._until_kind()
                    right = self.parse_formula()
                    self.expect(")")
                    return Until(False, left, right, weak)
                self.expect(")")
                return Group("E", None, left)
            return Group("E", None, self.parse_unary())
        if kind in ("D", "C", "Ebar", "Dbar", "Cbar"):
            self.next()
            group = self.parse_group()
            op = kind[0] if kind.endswith("bar") else kind
            return Group(op, group, self.parse_unary(), bar=kind.endswith("bar"))
        if kind in ("K", "Kbar"):
            self.next()
            agent = self.parse_agent()
            return Knows(agent, self.parse_unary(), bar=kind == "Kbar")
        if kind == "(":
            self.next()
            inner = self.parse_formula()
            self.expect(")")
            return inner
        if kind == "true":
            self.next()
            return Bool(True)
        if kind == "false":
            self.next()
            return Bool(False)
        if kind == "ident":
            self.next()
            return Atom(tok[1])
        raise FormulaSyntaxError(
            f"expected a formula, found {tok[1] or 'end of input'!r}",
            tok[2], tok[3],
            expected=("not", "(", "ident", "true", "false") + TEMPORAL_OPS,
        )

    def _until_kind(self) -> bool:
        tok = self.peek()
        if tok[0] == "U":
            self.next()
            return False
        if tok[0] == "W":
            self.next()
            return True
        raise FormulaSyntaxError(
            f"expected 'U' or 'W', found {tok[1] or 'end of input'!r}",
            tok[2], tok[3], expected=("U", "W"),
        )


def parse_formula(text: str) -> Formula:
    parser = _Parser(_tokenize(text))
    phi = parser.parse_formula()
    tok = parser.peek()
    if tok[0] != "eof":
        raise FormulaSyntaxError(
            f"trailing input starting at {tok[1]!r}", tok[2], tok[3]
        )
    return phi


# precedence levels for minimal parenthesization
_LEVEL_IMPLIES, _LEVEL_OR, _LEVEL_AND, _LEVEL_UNARY = 0, 1, 2, 3


def _fmt(phi: Formula, level: int) -> str:
    if isinstance(phi, Bool):
        return "true" if phi.value else "false"
    if isinstance(phi, Atom):
        return phi.name
    if isinstance(phi, Not):
        return f"not {_fmt(phi.sub, _LEVEL_UNARY)}"
    if isinstance(phi, Implies):
        text = f"{_fmt(phi.left, _LEVEL_OR)} -> {_fmt(phi.right, _LEVEL_IMPLIES)}"
        return f"({text})" if level > _LEVEL_IMPLIES else text
    if isinstance(phi, Or):
        text = f"{_fmt(phi.left, _LEVEL_OR)} or {_fmt(phi.right, _LEVEL_AND)}"
        return f"({text})" if level > _LEVEL_OR else text
    if isinstance(phi, And):
        text = f"{_fmt(phi.left, _LEVEL_AND)} and {_fmt(phi.right, _LEVEL_UNARY)}"
        return f"({text})" if level > _LEVEL_AND else text
    if isinstance(phi, Temporal):
        return f"{phi.op} {_fmt(phi.sub, _LEVEL_UNARY)}"
    if isinstance(phi, Until):
        q = "A" if phi.universal else "E"
        u = "W" if phi.weak else "U"
        return f"{q}({_fmt(phi.left, 0)} {u} {_fmt(phi.right, 0)})"
    if isinstance(phi, Knows):
        op = "Kbar" if phi.bar else "K"
        return f"{op} {phi.agent} {_fmt(phi.sub, _LEVEL_UNARY)}"
    if isinstance(phi, Group):
        op = phi.op + ("bar" if phi.bar else "")
        group = "" if phi.group is None else "{" + ",".join(str(a) for a in phi.group) + "}"
        return f"{op}{group} {_fmt(phi.sub, _LEVEL_UNARY)}"
    raise TypeError(f"not a formula: {phi!r}")


def format_formula(phi: Formula) -> str:
    return _fmt(phi, 0)


# ---------------------------------------------------------------------------
# name resolution
# ---------------------------------------------------------------------------


def resolve_agent(ref: AgentRef, agent_names: list[str]) -> int:
    """0-based agent position from a name or 1-based index."""
    if isinstance(ref, int):
        if not 1 <= ref <= len(agent_names):
            raise NameResolutionError(
                f"agent index {ref} out of range 1..{len(agent_names)}"
            )
        return ref - 1
    try:
        return agent_names.index(ref)
    except ValueError:
        raise NameResolutionError(f"undeclared agent {ref!r}") from None


def resolve_group(group: tuple | None, agent_names: list[str]) -> tuple[int, ...]:
    if group is None:
        return tuple(range(len(agent_names)))
    if not group:
        raise NameResolutionError("group operators need a nonempty agent set")
    return tuple(resolve_agent(a, agent_names) for a in group)


def check_names(phi: Formula, atoms, agent_names: list[str]) -> None:
    """Raise NameResolutionError on any undeclared atom, agent, or group."""
    atom_set = set(atoms)
    if isinstance(phi, Bool):
        return
    if isinstance(phi, Atom):
        if phi.name not in atom_set:
            raise NameResolutionError(f"undeclared atom {phi.name!r}")
        return
    if isinstance(phi, Not):
        check_names(phi.sub, atoms, agent_names)
        return
    if isinstance(phi, (And, Or, Implies)):
        check_names(phi.left, atoms, agent_names)
        check_names(phi.right, atoms, agent_names)
        return
    if isinstance(phi, Temporal):
        check_names(phi.sub, atoms, agent_names)
        return
    if isinstance(phi, Until):
        check_names(phi.left, atoms, agent_names)
        check_names(phi.right, atoms, agent_names)
        return
    if isinstance(phi, Knows):
        resolve_agent(phi.agent, agent_names)
        check_names(phi.sub, atoms, agent_names)
        return
    if isinstance(phi, Group):
        resolve_group(phi.group, agent_names)
        check_names(phi.sub, atoms, agent_names)
        return
    raise TypeError(f"not a formula: {phi!r}")


def contains_past(phi: Formula) -> bool:
    return _has_past(phi)

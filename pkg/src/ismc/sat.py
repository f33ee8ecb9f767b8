"""CNF infrastructure: formula trees, Tseitin transformation, a DPLL solver
with two-watched-literal propagation, DIMACS export, and blocking-clause
quantifier elimination over propositional formulas.

Literals are DIMACS-style signed integers: variable ids start at 1 and a
negative literal negates its variable.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class DimacsParseError(Exception):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


# ---------------------------------------------------------------------------
# propositional formula trees
# ---------------------------------------------------------------------------


class PropFormula:
    __slots__ = ()


@dataclass(frozen=True)
class PVar(PropFormula):
    __slots__ = ("id",)
    id: int


@dataclass(frozen=True)
class PNot(PropFormula):
    __slots__ = ("sub",)
    sub: PropFormula


@dataclass(frozen=True)
class PAnd(PropFormula):
    __slots__ = ("args",)
    args: tuple


@dataclass(frozen=True)
class POr(PropFormula):
    __slots__ = ("args",)
    args: tuple


@dataclass(frozen=True)
class PConst(PropFormula):
    __slots__ = ("value",)
    value: bool


PTRUE = PConst(True)
PFALSE = PConst(False)


def pvar(i: int) -> PropFormula:
    if i < 1:
        raise ValueError(f"variable ids start at 1, got {i}")
    return PVar(i)


def pnot(f: PropFormula) -> PropFormula:
    if isinstance(f, PConst):
        return PFALSE if f.value else PTRUE
    if isinstance(f, PNot):
        return f.sub
    return PNot(f)


def pand(*args: PropFormula) -> PropFormula:
    kept = []
    for a in args:
        if isinstance(a, PConst):
            if not a.value:
                return PFALSE
            continue
        kept.append(a)
    if not kept:
        return PTRUE
    if len(kept) == 1:
        return kept[0]
    return PAnd(tuple(kept))


def por(*args: PropFormula) -> PropFormula:
    kept = []
    for a in args:
        if isinstance(a, PConst):
            if a.value:
                return PTRUE
            continue
        kept.append(a)
    if not kept:
        return PFALSE
    if len(kept) == 1:
        return kept[0]
    return POr(tuple(kept))


def pimplies(a: PropFormula, b: PropFormula) -> PropFormula:
    return por(pnot(a), b)


def piff(a: PropFormula, b: PropFormula) -> PropFormula:
    return por(pand(a, b), pand(pnot(a), pnot(b)))


def pxor(a: PropFormula, b: PropFormula) -> PropFormula:
    return por(pand(a, pnot(b)), pand(pnot(a), b))


def formula_vars(f: PropFormula) -> set[int]:
    """Input variable ids occurring in the formula."""
    out: set[int] = set()
    stack = [f]
    seen: set[int] = set()
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if isinstance(node, PVar):
            out.add(node.id)
        elif isinstance(node, PNot):
            stack.append(node.sub)
        elif isinstance(node, (PAnd, POr)):
            stack.extend(node.args)
    return out


def formula_size(f: PropFormula) -> int:
    """Tree size, each child occurrence counted (shared nodes revisited)."""
    total = 0
    stack = [f]
    while stack:
        node = stack.pop()
        total += 1
        if isinstance(node, PNot):
            stack.append(node.sub)
        elif isinstance(node, (PAnd, POr)):
            stack.extend(node.args)
    return total


def eval_formula(f: PropFormula, assignment: dict[int, bool]) -> bool:
    if isinstance(f, PConst):
        return f.value
    if isinstance(f, PVar):
        return assignment[f.id]
    if isinstance(f, PNot):
        return not eval_formula(f.sub, assignment)
    if isinstance(f, PAnd):
        return all(eval_formula(a, assignment) for a in f.args)
    if isinstance(f, POr):
        return any(eval_formula(a, assignment) for a in f.args)
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# clause database
# ---------------------------------------------------------------------------


@dataclass
class Cnf:
    """Clause list over variables 1..num_vars, optionally with a top literal.

    Tautological clauses are dropped and duplicate literals merged on insert.
    An empty clause is representable and makes the Cnf unsatisfiable.
    """

    num_vars: int = 0
    clauses: list = field(default_factory=list)
    top: int | None = None

    def add_clause(self, lits) -> None:
        seen: set[int] = set()
        clause = []
        for lit in lits:
            if lit == 0 or abs(lit) > self.num_vars:
                raise ValueError(f"literal {lit} out of range for {self.num_vars} vars")
            if -lit in seen:
                return  # tautology
            if lit not in seen:
                seen.add(lit)
                clause.append(lit)
        self.clauses.append(clause)

    def copy(self) -> "Cnf":
        return Cnf(self.num_vars, [list(c) for c in self.clauses], self.top)


def tseitin(f: PropFormula) -> Cnf:
    """Equisatisfiable CNF with a top literal defining the formula root.

    Input variables keep their ids; every composite node gets a definition
    variable, except negation which reuses the child's literal negated.
    Clause material stays within a constant factor of the tree size.
    """
    max_in = max(formula_vars(f), default=0)
    cnf = Cnf(num_vars=max_in)

    def fresh() -> int:
        cnf.num_vars += 1
        return cnf.num_vars

    memo: dict[int, int] = {}

    def encode(node: PropFormula) -> int:
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, PVar):
            lit = node.id
        elif isinstance(node, PConst):
            v = fresh()
            cnf.add_clause([v])
            lit = v if node.value else -v
        elif isinstance(node, PNot):
            lit = -encode(node.sub)
        elif isinstance(node, (PAnd, POr)):
            child_lits = [encode(a) for a in node.args]
            v = fresh()
            if isinstance(node, PAnd):
                for c in child_lits:
                    cnf.add_clause([-v, c])
                cnf.add_clause([v] + [-c for c in child_lits])
            else:
                for c in child_lits:
                    cnf.add_clause([v, -c])
                cnf.add_clause([-v] + child_lits)
            lit = v
        else:
            raise TypeError(f"not a formula: {node!r}")
        memo[key] = lit
        return lit

    cnf.top = encode(f)
    return cnf


# ---------------------------------------------------------------------------
# DPLL solver
# ---------------------------------------------------------------------------


class Solver:
    """Plain DPLL with unit propagation over two watched literals.

    Branching is deterministic: lowest unassigned variable first, tried
    positive before negative.  The clause database may grow between solve
    calls; assignments never persist across calls.
    """

    def __init__(self, num_vars: int):
        self.num_vars = num_vars
        self.clauses: list[list[int]] = []
        self.watches: dict[int, list[int]] = {}
        self.units: list[int] = []
        self.has_empty = False

    def _watch(self, lit: int, ci: int) -> None:
        self.watches.setdefault(lit, []).append(ci)

    def add_clause(self, lits) -> None:
        clause = []
        seen: set[int] = set()
        for lit in lits:
            if -lit in seen:
                return
            if lit not in seen:
                seen.add(lit)
                clause.append(lit)
                if abs(lit) > self.num_vars:
                    self.num_vars = abs(lit)
        if not clause:
            self.has_empty = True
            return
        if len(clause) == 1:
            self.units.append(clause[0])
            return
        ci = len(self.clauses)
        self.clauses.append(clause)
        self._watch(clause[0], ci)
        self._watch(clause[1], ci)

    def add_cnf(self, cnf: Cnf) -> None:
        self.num_vars = max(self.num_vars, cnf.num_vars)
        for c in cnf.clauses:
            self.add_clause(c)

    def solve(self, assumptions=()) -> list[bool] | None:
        """Total assignment indexed by variable (index 0 unused), or None."""
        if self.has_empty:
            return None
        n = self.num_vars
        assign: list = [None] * (n + 1)
        trail: list[int] = []

        def enqueue(lit: int) -> bool:
            var = abs(lit)
            value = lit > 0
            cur = assign[var]
            if cur is not None:
                return cur == value
            assign[var] = value
            trail.append(lit)
            return True

        def propagate(start: int) -> bool:
            qhead = start
            while qhead < len(trail):
                lit = trail[qhead]
                qhead += 1
                falsified = -lit
                watchers = self.watches.get(falsified)
                if not watchers:
                    continue
                i = 0
                while i < len(watchers):
                    ci = watchers[i]
                    clause = self.clauses[ci]
                    # normalize: watched literals sit at positions 0 and 1
                    if clause[0] == falsified:
                        clause[0], clause[1] = clause[1], clause[0]
                    other = clause[0]
                    ov = assign[abs(other)]
                    if ov is not None and ov == (other > 0):
                        i += 1
                        continue
                    moved = False
                    for j in range(2, len(clause)):
                        cand = clause[j]
                        cv = assign[abs(cand)]
                        if cv is None or cv == (cand > 0):
                            clause[1], clause[j] = clause[j], clause[1]
                            watchers[i] = watchers[-1]
                            watchers.pop()
                            self._watch(cand, ci)
                            moved = True
                            break
                    if moved:
                        continue
                    # clause is unit or conflicting on `other`
                    if ov is None:
                        if not enqueue(other):
                            return False
                        i += 1
                    else:
                        return False
            return True

        for lit in self.units:
            if not enqueue(lit):
                return None
        if not propagate(0):
            return None
        for lit in assumptions:
            mark = len(trail)
            if not enqueue(lit) or not propagate(mark):
                return None

        # decision stack entries: (trail length before decision, literal, flipped)
        decisions: list[list] = []
        while True:
            var = None
            for v in range(1, n + 1):
                if assign[v] is None:
                    var = v
                    break
            if var is None:
                return [False] + [bool(assign[v]) for v in range(1, n + 1)]
            decisions.append([len(trail), var, False])
            enqueue(var)
            while not propagate(decisions[-1][0]):
                while decisions and decisions[-1][2]:
                    mark = decisions.pop()[0]
                    for lit in trail[mark:]:
                        assign[abs(lit)] = None
                    del trail[mark:]
                if not decisions:
                    return None
                top = decisions[-1]
                mark = top[0]
                for lit in trail[mark:]:
                    assign[abs(lit)] = None
                del trail[mark:]
                top[2] = True
                enqueue(-top[1])


def solve(cnf: Cnf, assumptions=()) -> list[bool] | None:
    """One-shot satisfiability check; see :class:`Solver`."""
    s = Solver(cnf.num_vars)
    s.add_cnf(cnf)
    return s.solve(assumptions)


# ---------------------------------------------------------------------------
# DIMACS
# ---------------------------------------------------------------------------


def to_dimacs(cnf: Cnf) -> str:
    lines = [f"p cnf {cnf.num_vars} {len(cnf.clauses)}"]
    for clause in cnf.clauses:
        lines.append(" ".join(str(lit) for lit in clause) + " 0")
    return "\n".join(lines) + "\n"


def from_dimacs(text: str) -> Cnf:
    num_vars = None
    num_clauses = None
    clauses: list[list[int]] = []
    current: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            if num_vars is not None:
                raise DimacsParseError("duplicate problem line", lineno)
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsParseError(f"malformed problem line {line!r}", lineno)
            try:
                num_vars, num_clauses = int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsParseError(f"malformed problem line {line!r}", lineno)
            if num_vars < 0 or num_clauses < 0:
                raise DimacsParseError("negative counts in problem line", lineno)
            continue
        if num_vars is None:
            raise DimacsParseError("clause data before problem line", lineno)
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise DimacsParseError(f"bad token {tok!r}", lineno)
            if lit == 0:
                clauses.append(current)
                current = []
            else:
                if abs(lit) > num_vars:
                    raise DimacsParseError(
                        f"literal {lit} exceeds declared {num_vars} variables", lineno
                    )
                current.append(lit)
    last = len(text.splitlines())
    if num_vars is None:
        raise DimacsParseError("missing problem line", max(last, 1))
    if current:
        raise DimacsParseError("unterminated clause at end of input", last)
    if len(clauses) != num_clauses:
        raise DimacsParseError(
            f"header declares {num_clauses} clauses but {len(clauses)} found", last
        )
    cnf = Cnf(num_vars=num_vars)
    for c in clauses:
        cnf.add_clause(c)
    return cnf


# ---------------------------------------------------------------------------
# blocking-clause quantifier elimination
# ---------------------------------------------------------------------------


def equ_cnf(f: PropFormula, eliminate=frozenset(), stats: dict | None = None) -> Cnf:
    """Equivalent CNF of ``f`` with ``eliminate`` universally quantified away.

    Repeatedly finds an assignment falsifying ``f``, blocks its projection
    onto the non-eliminated input variables, and stops when no falsifying
    assignment is left.  The accumulated blocking clauses characterize
    forall(eliminate). f exactly; with an empty eliminate set the result is
    simply equivalent to ``f``.
    """
    inputs = formula_vars(f)
    eliminate = set(eliminate)
    unknown = eliminate - inputs
    if unknown:
        raise ValueError(f"eliminate set mentions unknown variables {sorted(unknown)}")
    keep = sorted(inputs - eliminate)
    base = tseitin(f)
    solver = Solver(base.num_vars)
    solver.add_cnf(base)
    solver.add_clause([-base.top])

    result = Cnf(num_vars=max(inputs, default=0))
    iterations = 0
    while True:
        model = solver.solve()
        if model is None:
            break
        iterations += 1
        blocking = [(-v if model[v] else v) for v in keep]
        result.add_clause(blocking)
        solver.add_clause(blocking)
        if not blocking:
            break
    if stats is not None:
        stats["eliminations"] = stats.get("eliminations", 0) + 1
        stats["blocking_clauses"] = stats.get("blocking_clauses", 0) + iterations
    return result

"""Symbolic checker on binary decision diagrams.

Global states are bit vectors: each agent gets ceil(log2 |locals|) bits,
with every current-state bit immediately followed by its next-state twin
(the standard interleaving for relational diagrams), and per-agent action
bits after all state bits.  Unused code points are excluded by an explicit
domain constraint rather than left floating.

The transition relation conjoins, per agent, protocol enabledness of the
action bits with the guarded evolution of the next-state bits; the
epistemic relation of an agent is bit equality of its two state blocks.
Satisfaction sets are computed by fixpoint recursion and always intersected
with the reachable set, so knowledge quantifies over reachable states only.

Past operators are out of scope here; they are served by the explicit and
unbounded backends.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .bdd import BddManager, NodeRef
from .errors import EncodingError, FragmentError, NameResolutionError
from .explicit import ExplicitModel
from .formula import (
    And,
    Atom,
    Bool,
    Formula,
    Group,
    Implies,
    Knows,
    Not,
    Or,
    Temporal,
    Until,
    resolve_agent,
    resolve_group,
)
from .system import (
    ActionIs,
    AgentStateIs,
    GuardAnd,
    GuardOr,
    InterpretedSystem,
    LstateIs,
    ValAnd,
    ValOr,
)


def _width(n: int) -> int:
    return max(n - 1, 0).bit_length()


@dataclass
class StateEncoding:
    system: InterpretedSystem
    state_widths: list
    action_widths: list
    state_bits: int  # sum of per-agent state widths
    action_base: int

    @classmethod
    def for_system(cls, system: InterpretedSystem) -> "StateEncoding":
        state_widths = [_width(len(a.local_states)) for a in system.agents]
        action_widths = [_width(len(a.actions)) for a in system.agents]
        state_bits = sum(state_widths)
        return cls(
            system=system,
            state_widths=state_widths,
            action_widths=action_widths,
            state_bits=state_bits,
            action_base=2 * state_bits,
        )

    @property
    def num_vars(self) -> int:
        return self.action_base + sum(self.action_widths)

    def _agent_state_base(self, agent: int) -> int:
        return 2 * sum(self.state_widths[:agent])

    def cur_var(self, agent: int, bit: int) -> int:
        return self._agent_state_base(agent) + 2 * bit

    def next_var(self, agent: int, bit: int) -> int:
        return self._agent_state_base(agent) + 2 * bit + 1

    def action_var(self, agent: int, bit: int) -> int:
        return self.action_base + sum(self.action_widths[:agent]) + bit

    def cur_vars(self, agent: int) -> list[int]:
        return [self.cur_var(agent, b) for b in range(self.state_widths[agent])]

    def next_vars(self, agent: int) -> list[int]:
        return [self.next_var(agent, b) for b in range(self.state_widths[agent])]

    def action_vars(self, agent: int) -> list[int]:
        return [self.action_var(agent, b) for b in range(self.action_widths[agent])]

    def all_cur_vars(self) -> list[int]:
        return [v for i in range(len(self.state_widths)) for v in self.cur_vars(i)]

    def all_next_vars(self) -> list[int]:
        return [v for i in range(len(self.state_widths)) for v in self.next_vars(i)]

    def all_action_vars(self) -> list[int]:
        return [v for i in range(len(self.action_widths)) for v in self.action_vars(i)]

    def cur_to_next(self) -> dict[int, int]:
        return {
            self.cur_var(i, b): self.next_var(i, b)
            for i in range(len(self.state_widths))
            for b in range(self.state_widths[i])
        }

    def next_to_cur(self) -> dict[int, int]:
        return {v: k for k, v in self.cur_to_next().items()}

    def state_assignment(self, state: tuple) -> dict[int, bool]:
        """Current-bit assignment encoding one global state (local indices)."""
        out: dict[int, bool] = {}
        for i, local in enumerate(state):
            for b in range(self.state_widths[i]):
                out[self.cur_var(i, b)] = bool(local >> b & 1)
        return out


@dataclass
class SymbolicModel:
    system: InterpretedSystem
    manager: BddManager
    encoding: StateEncoding
    init: NodeRef
    trans: NodeRef  # over (current, action, next), domain constrained
    trans_pairs: NodeRef  # actions quantified out
    epistemic: list  # per agent, over (current, next)
    atom_bdds: dict
    domain_cur: NodeRef
    domain_next: NodeRef
    reach: NodeRef
    reach_iterations: int

    def terminal(self) -> NodeRef:
        m = self.manager
        enabled = m.exists(self.trans_pairs, self.encoding.all_next_vars())
        return m.apply("AND", self.reach, m.negate(enabled))

    def count_states(self, states: NodeRef) -> int:
        # next-state bits are interleaved but unconstrained in a state set
        total = self.manager.sat_count(states, 2 * self.encoding.state_bits)
        return total >> self.encoding.state_bits

    def stats(self) -> dict:
        base = self.manager.stats()
        return {
            "bdd_nodes": base["nodes"],
            "bdd_peak_nodes": base["peak_nodes"],
            "reach_iterations": self.reach_iterations,
            "reachable_states": self.count_states(self.reach),
        }


def _code_bdd(m: BddManager, variables: list[int], code: int) -> NodeRef:
    acc = m.true
    for b, var in enumerate(variables):
        lit = m.mk_var(var)
        if not code >> b & 1:
            lit = m.negate(lit)
        acc = m.apply("AND", acc, lit)
    return acc


def encode_system(system: InterpretedSystem, manager: BddManager | None = None) -> SymbolicModel:
    """Build every Boolean ingredient plus the reachable set."""
    system.validate()
    enc = StateEncoding.for_system(system)
    if manager is None:
        manager = BddManager(enc.num_vars)
    elif manager.num_vars < enc.num_vars:
        raise EncodingError(
            f"manager has {manager.num_vars} variables, encoding needs {enc.num_vars}"
        )
    m = manager
    agents = system.agents
    n = len(agents)

    cur_state = [
        {s: _code_bdd(m, enc.cur_vars(i), ci) for ci, s in enumerate(a.local_states)}
        for i, a in enumerate(agents)
    ]
    next_state = [
        {s: _code_bdd(m, enc.next_vars(i), ci) for ci, s in enumerate(a.local_states)}
        for i, a in enumerate(agents)
    ]
    action_bdd = [
        {act: _code_bdd(m, enc.action_vars(i), ci) for ci, act in enumerate(a.actions)}
        for i, a in enumerate(agents)
    ]
    agent_pos = {a.name: i for i, a in enumerate(agents)}

    def union(parts):
        acc = m.false
        for p in parts:
            acc = m.apply("OR", acc, p)
        return acc

    def inter(parts):
        acc = m.true
        for p in parts:
            acc = m.apply("AND", acc, p)
        return acc

    domain_cur = inter(union(cur_state[i].values()) for i in range(n))
    domain_next = inter(union(next_state[i].values()) for i in range(n))
    domain_act = inter(union(action_bdd[i].values()) for i in range(n))

    def guard_bdd(agent_idx: int, guard) -> NodeRef:
        if isinstance(guard, LstateIs):
            return cur_state[agent_idx][guard.state]
        if isinstance(guard, ActionIs):
            j = agent_pos[guard.agent]
            return action_bdd[j][guard.action]
        if isinstance(guard, GuardAnd):
            return m.apply(
                "AND", guard_bdd(agent_idx, guard.left), guard_bdd(agent_idx, guard.right)
            )
        if isinstance(guard, GuardOr):
            return m.apply(
                "OR", guard_bdd(agent_idx, guard.left), guard_bdd(agent_idx, guard.right)
            )
        raise TypeError(f"not a guard: {guard!r}")

    trans = domain_act
    for i, agent in enumerate(agents):
        rule_guards = [guard_bdd(i, r.guard) for r in agent.evolution]
        moved = union(
            m.apply("AND", g, next_state[i][r.target])
            for g, r in zip(rule_guards, agent.evolution)
        )
        no_match = inter(m.negate(g) for g in rule_guards)
        stay = union(
            m.apply("AND", cur_state[i][s], next_state[i][s]) for s in agent.local_states
        )
        agent_step = m.apply("OR", moved, m.apply("AND", no_match, stay))
        protocol = union(
            m.apply(
                "AND",
                cur_state[i][s],
                union(action_bdd[i][a] for a in agent.protocol[s]),
            )
            for s in agent.local_states
        )
        trans = inter((trans, agent_step, protocol))
    trans = inter((trans, domain_cur, domain_next))

    epistemic = []
    for i in range(n):
        acc = m.true
        for b in range(enc.state_widths[i]):
            eq = m.apply(
                "IFF", m.mk_var(enc.cur_var(i, b)), m.mk_var(enc.next_var(i, b))
            )
            acc = m.apply("AND", acc, eq)
        epistemic.append(acc)

    init = inter(
        cur_state[i][s] for i, s in enumerate(system.initial_state)
    )

    def val_bdd(cond) -> NodeRef:
        if isinstance(cond, AgentStateIs):
            return cur_state[agent_pos[cond.agent]][cond.state]
        if isinstance(cond, ValAnd):
            return m.apply("AND", val_bdd(cond.left), val_bdd(cond.right))
        if isinstance(cond, ValOr):
            return m.apply("OR", val_bdd(cond.left), val_bdd(cond.right))
        raise TypeError(f"not a valuation condition: {cond!r}")

    atom_bdds = {atom: val_bdd(cond) for atom, cond in system.valuation.items()}

    trans_pairs = m.exists(trans, enc.all_action_vars())

    # forward reachability: count the strictly growing applications
    next_to_cur = enc.next_to_cur()
    quantify = enc.all_cur_vars() + enc.all_action_vars()
    reach = m.false
    iterations = 0
    while True:
        image = m.rename(m.exists(m.apply("AND", trans, reach), quantify), next_to_cur)
        new = m.apply("OR", init, image)
        if new == reach:
            break
        reach = new
        iterations += 1

    return SymbolicModel(
        system=system,
        manager=m,
        encoding=enc,
        init=init,
        trans=trans,
        trans_pairs=trans_pairs,
        epistemic=epistemic,
        atom_bdds=atom_bdds,
        domain_cur=domain_cur,
        domain_next=domain_next,
        reach=reach,
        reach_iterations=iterations,
    )


def reachable_states(sm: SymbolicModel) -> NodeRef:
    return sm.reach


class SymbolicChecker:
    """Satisfaction sets over one encoded model, with memoization."""

    def __init__(self, sm: SymbolicModel):
        self.sm = sm
        self.m = sm.manager
        self.enc = sm.encoding
        self.memo: dict[Formula, NodeRef] = {}
        self.fixpoint_iterations = {"until": 0, "finally": 0, "common": 0}
        self._terminal: NodeRef | None = None
        self._cur_to_next = self.enc.cur_to_next()
        self._next_vars = self.enc.all_next_vars()
        self.agent_names = sm.system.agent_names

    # -- primitive images ----------------------------------------------

    def _restrict(self, s: NodeRef) -> NodeRef:
        return self.m.apply("AND", self.sm.reach, s)

    def _complement(self, s: NodeRef) -> NodeRef:
        return self.m.apply("AND", self.sm.reach, self.m.negate(s))

    def pre_exists(self, s: NodeRef) -> NodeRef:
        primed = self.m.rename(s, self._cur_to_next)
        step = self.m.exists(
            self.m.apply("AND", self.sm.trans_pairs, primed), self._next_vars
        )
        return self._restrict(step)

    def terminal(self) -> NodeRef:
        if self._terminal is None:
            self._terminal = self.sm.terminal()
        return self._terminal

    def rel_pre_exists(self, rel: NodeRef, s: NodeRef) -> NodeRef:
        primed = self.m.rename(s, self._cur_to_next)
        step = self.m.exists(self.m.apply("AND", rel, primed), self._next_vars)
        return self._restrict(step)

    # -- fixpoints ----------------------------------------------------

    def until_exists(self, a: NodeRef, b: NodeRef) -> NodeRef:
        z = b
        while True:
            grown = self.m.apply("OR", z, self.m.apply("AND", a, self.pre_exists(z)))
            if grown == z:
                return z
            z = grown
            self.fixpoint_iterations["until"] += 1

    def finally_all(self, b: NodeRef) -> NodeRef:
        # least fixpoint; next-step disjunct needs a successor to exist
        nonterminal = self._complement(self.terminal())
        z = b
        while True:
            all_next = self._complement(self.pre_exists(self._complement(z)))
            grown = self.m.apply("OR", z, self.m.apply("AND", nonterminal, all_next))
            if grown == z:
                return z
            z = grown
            self.fixpoint_iterations["finally"] += 1

    def common_fixpoint(self, rel: NodeRef, s: NodeRef) -> NodeRef:
        y = self.sm.reach
        while True:
            target = self.m.apply("AND", s, y)
            shrunk = self._complement(self.rel_pre_exists(rel, self._complement(target)))
            if shrunk == y:
                return y
            y = shrunk
            self.fixpoint_iterations["common"] += 1

    # -- epistemic relations --------------------------------------------

    def _group_rel(self, op: str, group: tuple) -> NodeRef:
        rels = [self.sm.epistemic[i] for i in group]
        acc = rels[0]
        for r in rels[1:]:
            acc = self.m.apply("OR" if op == "E" else "AND", acc, r)
        return acc

    # -- recursion -----------------------------------------------------

    def sat_set(self, phi: Formula) -> NodeRef:
        found = self.memo.get(phi)
        if found is not None:
            return found
        result = self._sat(phi)
        self.memo[phi] = result
        return result

    def _sat(self, phi: Formula) -> NodeRef:
        m = self.m
        if isinstance(phi, Bool):
            return self.sm.reach if phi.value else m.false
        if isinstance(phi, Atom):
            bdd = self.sm.atom_bdds.get(phi.name)
            if bdd is None:
                raise NameResolutionError(f"undeclared atom {phi.name!r}")
            return self._restrict(bdd)
        if isinstance(phi, Not):
            return self._complement(self.sat_set(phi.sub))
        if isinstance(phi, And):
            return m.apply("AND", self.sat_set(phi.left), self.sat_set(phi.right))
        if isinstance(phi, Or):
            return m.apply("OR", self.sat_set(phi.left), self.sat_set(phi.right))
        if isinstance(phi, Implies):
            return m.apply(
                "OR", self._complement(self.sat_set(phi.left)), self.sat_set(phi.right)
            )
        if isinstance(phi, Temporal):
            if phi.op in ("AY", "AH"):
                raise FragmentError(
                    "past operators are outside the OBDD backend; "
                    "use the explicit or unbounded backend"
                )
            sub = self.sat_set(phi.sub)
            if phi.op == "EX":
                return self.pre_exists(sub)
            if phi.op == "AX":
                return self._complement(self.pre_exists(self._complement(sub)))
            if phi.op == "EF":
                return self.until_exists(self.sm.reach, sub)
            if phi.op == "AG":
                return self._complement(self.until_exists(self.sm.reach, self._complement(sub)))
            if phi.op == "AF":
                return self.finally_all(sub)
            if phi.op == "EG":
                return self._complement(self.finally_all(self._complement(sub)))
            raise TypeError(f"unknown temporal operator {phi.op}")
        if isinstance(phi, Until):
            a, b = self.sat_set(phi.left), self.sat_set(phi.right)
            na, nb = self._complement(a), self._complement(b)
            if phi.universal and not phi.weak:
                blocked = self.until_exists(nb, m.apply("AND", na, nb))
                return m.apply(
                    "AND", self.finally_all(b), self._complement(blocked)
                )
            if phi.universal:
                blocked = self.until_exists(nb, m.apply("AND", na, nb))
                return self._complement(blocked)
            if phi.weak:
                eg = self._complement(self.finally_all(na))
                return m.apply("OR", eg, self.until_exists(a, b))
            return self.until_exists(a, b)
        if isinstance(phi, Knows):
            i = resolve_agent(phi.agent, self.agent_names)
            rel = self.sm.epistemic[i]
            if phi.bar:
                return self.rel_pre_exists(rel, self.sat_set(phi.sub))
            witnesses = self.rel_pre_exists(rel, self._complement(self.sat_set(phi.sub)))
            return self._complement(witnesses)
        if isinstance(phi, Group):
            group = resolve_group(phi.group, self.agent_names)
            rel = self._group_rel("E" if phi.op == "E" else phi.op, group)
            if phi.op in ("E", "D"):
                if phi.bar:
                    return self.rel_pre_exists(rel, self.sat_set(phi.sub))
                witnesses = self.rel_pre_exists(
                    rel, self._complement(self.sat_set(phi.sub))
                )
                return self._complement(witnesses)
            if phi.op == "C":
                if phi.bar:
                    inner = self._complement(self.sat_set(phi.sub))
                    return self._complement(self.common_fixpoint(rel, inner))
                return self.common_fixpoint(rel, self.sat_set(phi.sub))
            raise TypeError(f"unknown group operator {phi.op}")
        raise TypeError(f"not a formula: {phi!r}")

    def check(self, phi: Formula) -> bool:
        sat = self.sat_set(phi)
        return self.m.apply("IMPLIES", self.sm.init, sat) == self.m.true

    def stats(self) -> dict:
        out = self.sm.stats()
        out["fixpoint_iterations"] = dict(self.fixpoint_iterations)
        return out


def sat_set(sm: SymbolicModel, phi: Formula) -> NodeRef:
    return SymbolicChecker(sm).sat_set(phi)


def check(sm: SymbolicModel, phi: Formula) -> bool:
    return SymbolicChecker(sm).check(phi)


def decode_states(sm: SymbolicModel, states: NodeRef, model: ExplicitModel) -> set[int]:
    """Explicit indices of the reachable states inside a symbolic set."""
    support = sm.manager.support(states)
    out = set()
    for idx in range(len(model.states)):
        assignment = sm.encoding.state_assignment(model.states[idx])
        for v in support:
            if v not in assignment:
                assignment[v] = False
        if sm.manager.evaluate(states, assignment):
            out.add(idx)
    return out


def explicit_edges(sm: SymbolicModel, model: ExplicitModel) -> set[tuple[int, int]]:
    """Decode the pair relation into explicit (source, target) index pairs."""
    pairs = set()
    support = sm.manager.support(sm.trans_pairs)
    next_map = sm.encoding.cur_to_next()
    for si in range(len(model.states)):
        src = sm.encoding.state_assignment(model.states[si])
        for ti in range(len(model.states)):
            dst_cur = sm.encoding.state_assignment(model.states[ti])
            assignment = dict(src)
            for var, value in dst_cur.items():
                assignment[next_map[var]] = value
            for v in support:
                if v not in assignment:
                    assignment[v] = False
            if sm.manager.evaluate(sm.trans_pairs, assignment):
                pairs.add((si, ti))
    return pairs


def group_rel_union_vs_intersection(sm: SymbolicModel, group: tuple):
    """(union, intersection) epistemic relation diagrams for a group."""
    m = sm.manager
    union = m.false
    inter = m.true
    for i in group:
        union = m.apply("OR", union, sm.epistemic[i])
        inter = m.apply("AND", inter, sm.epistemic[i])
    return union, inter

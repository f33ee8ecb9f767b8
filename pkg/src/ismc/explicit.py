"""Explicit reachable-state graph and the reference checker.

The checker labels states by structural recursion over the formula and is
deliberately direct: sets of state indices, breadth-first fixpoints, and
epistemic equivalence classes read off local components.  Every other
backend in this package is validated against it.

Path semantics follow the maximal-path convention: a state with no enabled
joint action ends its paths there, so universal next-step claims hold at it
vacuously, existential ones fail, and "globally" claims reduce to the state
itself.  The same convention applies backwards for the past operators.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import ExplosionError, NameResolutionError
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
from .system import InterpretedSystem, ModelError, guard_holds, val_holds

DEFAULT_STATE_CAP = 10 ** 6


@dataclass
class ExplicitModel:
    system: InterpretedSystem
    states: list
    index: dict
    successors: list
    predecessors: list
    edge_actions: dict
    eq_classes: list  # per agent: local-state index -> list of state indices

    @property
    def init_index(self) -> int:
        return 0

    def state_tuple(self, i: int) -> tuple:
        return self.states[i]

    def state_names(self, i: int) -> tuple:
        return tuple(
            agent.local_states[li]
            for agent, li in zip(self.system.agents, self.states[i])
        )

    def terminal_states(self) -> set[int]:
        return {i for i, succ in enumerate(self.successors) if not succ}

    def atom_set(self, atom: str) -> set[int]:
        cond = self.system.valuation.get(atom)
        if cond is None:
            raise NameResolutionError(f"undeclared atom {atom!r}")
        out = set()
        for i in range(len(self.states)):
            locals_by_agent = {
                agent.name: agent.local_states[li]
                for agent, li in zip(self.system.agents, self.states[i])
            }
            if val_holds(cond, locals_by_agent):
                out.add(i)
        return out


def build_explicit_model(
    system: InterpretedSystem,
    max_states: int = DEFAULT_STATE_CAP,
    deterministic: bool = False,
) -> ExplicitModel:
    """Breadth-first closure from the initial global state.

    A joint action is enabled when every agent's component is allowed by its
    protocol.  Each agent then moves to the target of every matching rule
    (several matches fan out nondeterministically) or keeps its local state
    when no rule matches.  With ``deterministic`` set, more than one matching
    rule for an agent is an error instead.
    """
    system.validate()
    agents = system.agents
    initial = tuple(a.state_index(s) for a, s in zip(agents, system.initial_state))

    states = [initial]
    index = {initial: 0}
    successors: list[list[int]] = []
    edge_actions: dict = {}
    queue = [0]
    while queue:
        si = queue.pop(0)
        state = states[si]
        local_names = [a.local_states[li] for a, li in zip(agents, state)]
        succ_set: dict[int, None] = {}
        choices = [a.protocol[ln] for a, ln in zip(agents, local_names)]
        for joint in itertools.product(*choices):
            joint_by_name = {a.name: act for a, act in zip(agents, joint)}
            per_agent_targets = []
            for a, ln in zip(agents, local_names):
                matches = [
                    r.target for r in a.evolution if guard_holds(r.guard, ln, joint_by_name)
                ]
                if deterministic and len(matches) > 1:
                    raise ModelError(
                        f"agent {a.name}: {len(matches)} rules match at {ln} "
                        f"under joint action {joint} (deterministic mode)"
                    )
                if not matches:
                    targets = [ln]
                else:
                    targets = list(dict.fromkeys(matches))
                per_agent_targets.append(targets)
            for combo in itertools.product(*per_agent_targets):
                nxt = tuple(a.state_index(t) for a, t in zip(agents, combo))
                ni = index.get(nxt)
                if ni is None:
                    if len(states) >= max_states:
                        raise ExplosionError(max_states)
                    ni = len(states)
                    index[nxt] = ni
                    states.append(nxt)
                    queue.append(ni)
                succ_set[ni] = None
                edge_actions.setdefault((si, ni), []).append(joint)
        successors.append(sorted(succ_set))

    predecessors: list[list[int]] = [[] for _ in states]
    for src, outs in enumerate(successors):
        for dst in outs:
            predecessors[dst].append(src)

    eq_classes = []
    for ai in range(len(agents)):
        classes: dict[int, list[int]] = {}
        for i, st in enumerate(states):
            classes.setdefault(st[ai], []).append(i)
        eq_classes.append(classes)

    return ExplicitModel(
        system=system,
        states=states,
        index=index,
        successors=successors,
        predecessors=predecessors,
        edge_actions=edge_actions,
        eq_classes=eq_classes,
    )


def epistemic_related(model: ExplicitModel, g: int, h: int, agent) -> bool:
    """Same local component for the agent (given by name or 1-based index)."""
    ai = resolve_agent(agent, model.system.agent_names)
    return model.states[g][ai] == model.states[h][ai]


class _Labeler:
    def __init__(self, model: ExplicitModel):
        self.model = model
        self.all_states = frozenset(range(len(model.states)))
        self.terminals = frozenset(model.terminal_states())
        self.agent_names = model.system.agent_names
        self.memo: dict[Formula, frozenset] = {}
        # per agent: state -> its equivalence class as a frozenset
        self.class_of: list[dict[int, frozenset]] = []
        for ai in range(len(model.system.agents)):
            by_local = {k: frozenset(v) for k, v in model.eq_classes[ai].items()}
            self.class_of.append(
                {i: by_local[st[ai]] for i, st in enumerate(model.states)}
            )

    # -- graph steps ---------------------------------------------------

    def pre_exists(self, target: frozenset) -> frozenset:
        succ = self.model.successors
        return frozenset(g for g in self.all_states if any(s in target for s in succ[g]))

    def pre_forall(self, target: frozenset) -> frozenset:
        succ = self.model.successors
        return frozenset(g for g in self.all_states if all(s in target for s in succ[g]))

    def past_forall(self, target: frozenset) -> frozenset:
        pred = self.model.predecessors
        return frozenset(g for g in self.all_states if all(p in target for p in pred[g]))

    def knows_step(self, ai: int, target: frozenset) -> frozenset:
        return frozenset(g for g in self.all_states if self.class_of[ai][g] <= target)

    def everyone_step(self, group: tuple, target: frozenset) -> frozenset:
        out = self.all_states
        for ai in group:
            out = out & self.knows_step(ai, target)
        return out

    def distributed_step(self, group: tuple, target: frozenset) -> frozenset:
        out = set()
        for g in self.all_states:
            related = self.class_of[group[0]][g]
            for ai in group[1:]:
                related = related & self.class_of[ai][g]
            if related <= target:
                out.add(g)
        return frozenset(out)

    # -- fixpoints -------------------------------------------------------

    def eu(self, a: frozenset, b: frozenset) -> frozenset:
        out = set(b)
        frontier = list(b)
        pred = self.model.predecessors
        while frontier:
            g = frontier.pop()
            for p in pred[g]:
                if p not in out and p in a:
                    out.add(p)
                    frontier.append(p)
        return frozenset(out)

    def au(self, a: frozenset, b: frozenset) -> frozenset:
        out = set(b)
        succ = self.model.successors
        changed = True
        while changed:
            changed = False
            for g in self.all_states:
                if g in out or g not in a or g in self.terminals:
                    continue
                if all(s in out for s in succ[g]):
                    out.add(g)
                    changed = True
        return frozenset(out)

    def eg(self, a: frozenset) -> frozenset:
        out = set(a)
        succ = self.model.successors
        changed = True
        while changed:
            changed = False
            for g in list(out):
                if g in self.terminals:
                    continue
                if not any(s in out for s in succ[g]):
                    out.discard(g)
                    changed = True
        return frozenset(out)

    def ag(self, a: frozenset) -> frozenset:
        out = set(a)
        succ = self.model.successors
        changed = True
        while changed:
            changed = False
            for g in list(out):
                if not all(s in out for s in succ[g]):
                    out.discard(g)
                    changed = True
        return frozenset(out)

    def aw(self, a: frozenset, b: frozenset) -> frozenset:
        out = set(self.all_states)
        changed = True
        while changed:
            changed = False
            nxt = b | (a & self.pre_forall(frozenset(out)))
            if nxt != out:
                out = set(nxt)
                changed = True
        return frozenset(out)

    def ah(self, a: frozenset) -> frozenset:
        out = set(a)
        pred = self.model.predecessors
        changed = True
        while changed:
            changed = False
            for g in list(out):
                if not all(p in out for p in pred[g]):
                    out.discard(g)
                    changed = True
        return frozenset(out)

    def common(self, group: tuple, a: frozenset) -> frozenset:
        out = self.all_states
        while True:
            nxt = self.everyone_step(group, a & out)
            if nxt == out:
                return out
            out = nxt

    # -- recursion -------------------------------------------------------

    def sat(self, phi: Formula) -> frozenset:
        found = self.memo.get(phi)
        if found is not None:
            return found
        result = self._sat(phi)
        self.memo[phi] = result
        return result

    def _sat(self, phi: Formula) -> frozenset:
        if isinstance(phi, Bool):
            return self.all_states if phi.value else frozenset()
        if isinstance(phi, Atom):
            return frozenset(self.model.atom_set(phi.name))
        if isinstance(phi, Not):
            return self.all_states - self.sat(phi.sub)
        if isinstance(phi, And):
            return self.sat(phi.left) & self.sat(phi.right)
        if isinstance(phi, Or):
            return self.sat(phi.left) | self.sat(phi.right)
        if isinstance(phi, Implies):
            return (self.all_states - self.sat(phi.left)) | self.sat(phi.right)
        if isinstance(phi, Temporal):
            sub = self.sat(phi.sub)
            if phi.op == "EX":
                return self.pre_exists(sub)
            if phi.op == "AX":
                return self.pre_forall(sub)
            if phi.op == "EF":
                return self.eu(self.all_states, sub)
            if phi.op == "AF":
                return self.au(self.all_states, sub)
            if phi.op == "EG":
                return self.eg(sub)
            if phi.op == "AG":
                return self.ag(sub)
            if phi.op == "AY":
                return self.past_forall(sub)
            if phi.op == "AH":
                return self.ah(sub)
            raise TypeError(f"unknown temporal operator {phi.op}")
        if isinstance(phi, Until):
            a, b = self.sat(phi.left), self.sat(phi.right)
            if phi.universal and phi.weak:
                return self.aw(a, b)
            if phi.universal:
                return self.au(a, b)
            if phi.weak:
                return self.eg(a) | self.eu(a, b)
            return self.eu(a, b)
        if isinstance(phi, Knows):
            ai = resolve_agent(phi.agent, self.agent_names)
            if phi.bar:
                return self.all_states - self.knows_step(ai, self.all_states - self.sat(phi.sub))
            return self.knows_step(ai, self.sat(phi.sub))
        if isinstance(phi, Group):
            group = resolve_group(phi.group, self.agent_names)
            if phi.bar:
                inner = self.all_states - self.sat(phi.sub)
                if phi.op == "E":
                    return self.all_states - self.everyone_step(group, inner)
                if phi.op == "D":
                    return self.all_states - self.distributed_step(group, inner)
                if phi.op == "C":
                    return self.all_states - self.common(group, inner)
                raise TypeError(f"unknown group operator {phi.op}")
            sub = self.sat(phi.sub)
            if phi.op == "E":
                return self.everyone_step(group, sub)
            if phi.op == "D":
                return self.distributed_step(group, sub)
            if phi.op == "C":
                return self.common(group, sub)
            raise TypeError(f"unknown group operator {phi.op}")
        raise TypeError(f"not a formula: {phi!r}")


def check_explicit(model: ExplicitModel, phi: Formula) -> set[int]:
    """Exact satisfaction set of the formula as reachable state indices."""
    return set(_Labeler(model).sat(phi))


def holds_initially(model: ExplicitModel, phi: Formula) -> bool:
    return model.init_index in check_explicit(model, phi)

"""Interpreted systems: agents with local states, actions, protocols and
guarded evolution rules, plus a valuation of atomic propositions over local
states.

The environment is not special-cased: by convention it is an ordinary agent,
usually declared last.  Guards see the owning agent's local state and the
actions every agent just performed; valuation conditions see local states
only.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field


class ModelError(Exception):
    """An interpreted system violates a structural invariant."""


# ---------------------------------------------------------------------------
# guard conditions (evolution rules)
# ---------------------------------------------------------------------------


class GuardExpr:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class LstateIs(GuardExpr):
    """Owning agent's local state equals `state`."""

    state: str


@dataclass(frozen=True, slots=True)
class ActionIs(GuardExpr):
    """Agent `agent` just performed `action`."""

    agent: str
    action: str


@dataclass(frozen=True, slots=True)
class GuardAnd(GuardExpr):
    left: GuardExpr
    right: GuardExpr


@dataclass(frozen=True, slots=True)
class GuardOr(GuardExpr):
    left: GuardExpr
    right: GuardExpr


def guard_holds(guard: GuardExpr, own_state: str, joint: dict[str, str]) -> bool:
    if isinstance(guard, LstateIs):
        return own_state == guard.state
    if isinstance(guard, ActionIs):
        return joint[guard.agent] == guard.action
    if isinstance(guard, GuardAnd):
        return guard_holds(guard.left, own_state, joint) and guard_holds(
            guard.right, own_state, joint
        )
    if isinstance(guard, GuardOr):
        return guard_holds(guard.left, own_state, joint) or guard_holds(
            guard.right, own_state, joint
        )
    raise TypeError(f"not a guard: {guard!r}")


# ---------------------------------------------------------------------------
# valuation conditions (atomic propositions)
# ---------------------------------------------------------------------------


class ValExpr:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class AgentStateIs(ValExpr):
    agent: str
    state: str


@dataclass(frozen=True, slots=True)
class ValAnd(ValExpr):
    left: ValExpr
    right: ValExpr


@dataclass(frozen=True, slots=True)
class ValOr(ValExpr):
    left: ValExpr
    right: ValExpr


def val_holds(cond: ValExpr, locals_by_agent: dict[str, str]) -> bool:
    if isinstance(cond, AgentStateIs):
        return locals_by_agent[cond.agent] == cond.state
    if isinstance(cond, ValAnd):
        return val_holds(cond.left, locals_by_agent) and val_holds(cond.right, locals_by_agent)
    if isinstance(cond, ValOr):
        return val_holds(cond.left, locals_by_agent) or val_holds(cond.right, locals_by_agent)
    raise TypeError(f"not a valuation condition: {cond!r}")


def val_disjunction(parts) -> ValExpr:
    parts = list(parts)
    if not parts:
        raise ModelError("valuation condition needs at least one disjunct")
    acc = parts[0]
    for p in parts[1:]:
        acc = ValOr(acc, p)
    return acc


# ---------------------------------------------------------------------------
# agents and systems
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class EvolutionRule:
    target: str
    guard: GuardExpr


@dataclass
class AgentDef:
    """One agent: declaration order of states, actions and rules is kept.

    Protocol entries may be empty; a state whose protocol is empty blocks
    every joint action when the system reaches it, which is how deadlocking
    fixtures are written.
    """

    name: str
    local_states: tuple
    actions: tuple
    protocol: dict
    evolution: tuple

    def state_index(self, state: str) -> int:
        return self.local_states.index(state)


@dataclass
class InterpretedSystem:
    agents: list
    initial_state: tuple
    atoms: tuple
    valuation: dict

    @property
    def agent_names(self) -> list[str]:
        return [a.name for a in self.agents]

    def agent_named(self, name: str) -> AgentDef:
        for a in self.agents:
            if a.name == name:
                return a
        raise ModelError(f"no agent named {name!r}")

    def validate(self) -> None:
        if not self.agents:
            raise ModelError("a system needs at least one agent")
        names = self.agent_names
        if len(set(names)) != len(names):
            raise ModelError("duplicate agent names")
        by_name = {a.name: a for a in self.agents}
        for agent in self.agents:
            if len(set(agent.local_states)) != len(agent.local_states):
                raise ModelError(f"agent {agent.name}: duplicate local states")
            if not agent.local_states:
                raise ModelError(f"agent {agent.name}: needs at least one local state")
            if len(set(agent.actions)) != len(agent.actions):
                raise ModelError(f"agent {agent.name}: duplicate actions")
            for state in agent.local_states:
                if state not in agent.protocol:
                    raise ModelError(f"agent {agent.name}: protocol incomplete for {state}")
            for state, acts in agent.protocol.items():
                if state not in agent.local_states:
                    raise ModelError(f"agent {agent.name}: protocol for unknown state {state}")
                for act in acts:
                    if act not in agent.actions:
                        raise ModelError(
                            f"agent {agent.name}: protocol uses unknown action {act}"
                        )
            for rule in agent.evolution:
                if rule.target not in agent.local_states:
                    raise ModelError(
                        f"agent {agent.name}: rule targets unknown state {rule.target}"
                    )
                self._check_guard(agent, rule.guard, by_name)
        if len(self.initial_state) != len(self.agents):
            raise ModelError("initial state must name one local state per agent")
        for agent, state in zip(self.agents, self.initial_state):
            if state not in agent.local_states:
                raise ModelError(
                    f"initial state {state} is not a local state of {agent.name}"
                )
        if len(set(self.atoms)) != len(self.atoms):
            raise ModelError("duplicate atom names")
        if set(self.valuation) != set(self.atoms):
            raise ModelError("valuation must define exactly the declared atoms")
        for atom, cond in self.valuation.items():
            self._check_val(atom, cond, by_name)

    def _check_guard(self, agent: AgentDef, guard: GuardExpr, by_name: dict) -> None:
        if isinstance(guard, LstateIs):
            if guard.state not in agent.local_states:
                raise ModelError(
                    f"agent {agent.name}: guard references unknown state {guard.state}"
                )
        elif isinstance(guard, ActionIs):
            other = by_name.get(guard.agent)
            if other is None:
                raise ModelError(
                    f"agent {agent.name}: guard references unknown agent {guard.agent}"
                )
            if guard.action not in other.actions:
                raise ModelError(
                    f"agent {agent.name}: guard references unknown action "
                    f"{guard.agent}.{guard.action}"
                )
        elif isinstance(guard, (GuardAnd, GuardOr)):
            self._check_guard(agent, guard.left, by_name)
            self._check_guard(agent, guard.right, by_name)
        else:
            raise ModelError(f"not a guard: {guard!r}")

    def _check_val(self, atom: str, cond: ValExpr, by_name: dict) -> None:
        if isinstance(cond, AgentStateIs):
            agent = by_name.get(cond.agent)
            if agent is None:
                raise ModelError(f"atom {atom}: condition references unknown agent {cond.agent}")
            if cond.state not in agent.local_states:
                raise ModelError(
                    f"atom {atom}: condition references unknown state "
                    f"{cond.agent}.{cond.state}"
                )
        elif isinstance(cond, (ValAnd, ValOr)):
            self._check_val(atom, cond.left, by_name)
            self._check_val(atom, cond.right, by_name)
        else:
            raise ModelError(f"not a valuation condition: {cond!r}")


# ---------------------------------------------------------------------------
# seeded random systems for differential testing
# ---------------------------------------------------------------------------


def generate_random_system(
    seed: int,
    max_agents: int = 3,
    max_locals: int = 4,
    max_actions: int = 3,
    max_atoms: int = 3,
) -> InterpretedSystem:
    """Well-formed pseudo-random system; identical for identical seeds.

    Protocols are nonempty at every local state, so some joint action is
    always enabled and generated systems never deadlock.
    """
    if min(max_agents, max_locals, max_actions, max_atoms) < 1:
        raise ValueError("bounds must be positive")
    rng = random.Random(seed)
    n_agents = rng.randint(1, max_agents)
    agents = []
    for i in range(n_agents):
        n_states = rng.randint(1, max_locals)
        n_actions = rng.randint(1, max_actions)
        states = tuple(f"s{j}" for j in range(n_states))
        actions = tuple(f"a{j}" for j in range(n_actions))
        agents.append((f"ag{i + 1}", states, actions))

    def random_guard(agent_idx: int, depth: int) -> GuardExpr:
        if depth == 0 or rng.random() < 0.4:
            if rng.random() < 0.5:
                return LstateIs(rng.choice(agents[agent_idx][1]))
            target = rng.randrange(n_agents)
            return ActionIs(agents[target][0], rng.choice(agents[target][2]))
        ctor = GuardAnd if rng.random() < 0.5 else GuardOr
        return ctor(random_guard(agent_idx, depth - 1), random_guard(agent_idx, depth - 1))

    defs = []
    for i, (name, states, actions) in enumerate(agents):
        protocol = {}
        for s in states:
            chosen = set(rng.sample(actions, rng.randint(1, len(actions))))
            protocol[s] = tuple(a for a in actions if a in chosen)
        n_rules = rng.randint(0, 4)
        rules = tuple(
            EvolutionRule(rng.choice(states), random_guard(i, rng.randint(0, 2)))
            for _ in range(n_rules)
        )
        defs.append(AgentDef(name, states, actions, protocol, rules))

    initial = tuple(rng.choice(a.local_states) for a in defs)
    n_atoms = rng.randint(1, max_atoms)
    atoms = tuple(f"p{j}" for j in range(n_atoms))
    valuation = {}
    for atom in atoms:
        n_disjuncts = rng.randint(1, 3)
        parts = []
        for _ in range(n_disjuncts):
            agent = rng.choice(defs)
            parts.append(AgentStateIs(agent.name, rng.choice(agent.local_states)))
        valuation[atom] = val_disjunction(parts)

    system = InterpretedSystem(defs, initial, atoms, valuation)
    system.validate()
    return system

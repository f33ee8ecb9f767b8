"""Reduced ordered binary decision diagrams.

A :class:`BddManager` owns a fixed variable order and a hash-consed node
store, so two nodes represent the same Boolean function exactly when they
are the same handle.  Terminals are two reserved handles, negation
materializes nodes (no complement edges), and there is no garbage
collection: the arena grows monotonically for the lifetime of the manager.

A manager and all of its :class:`NodeRef` values form a single-owner unit.
Nothing here locks; transfer the whole unit between threads if needed.
"""

from __future__ import annotations

from dataclasses import dataclass


class BddError(Exception):
    """Base class for BDD usage errors."""


class InvalidVariableError(BddError):
    """A variable index is outside the manager's fixed order."""


class WrongManagerError(BddError):
    """A NodeRef from a different manager was passed in."""


class RenameConflictError(BddError):
    """A renaming maps two support variables to the same target."""


class MissingVariableError(BddError):
    """An evaluation assignment does not cover the node's support."""


_OPS = ("AND", "OR", "XOR", "IMPLIES", "IFF")
_COMMUTATIVE = {"AND", "OR", "XOR", "IFF"}

_FALSE = 0
_TRUE = 1


@dataclass(frozen=True)
class NodeRef:
    """Opaque handle to a node inside one manager."""

    manager: "BddManager"
    index: int

    def __repr__(self) -> str:
        if self.index == _FALSE:
            return "<bdd FALSE>"
        if self.index == _TRUE:
            return "<bdd TRUE>"
        return f"<bdd node {self.index}>"

    def __and__(self, other: "NodeRef") -> "NodeRef":
        return self.manager.apply("AND", self, other)

    def __or__(self, other: "NodeRef") -> "NodeRef":
        return self.manager.apply("OR", self, other)

    def __xor__(self, other: "NodeRef") -> "NodeRef":
        return self.manager.apply("XOR", self, other)

    def __invert__(self) -> "NodeRef":
        return self.manager.negate(self)


class BddManager:
    """Node store, unique table and operation caches for one variable order.

    Variables are the integers ``0 .. num_vars - 1``; the index order is the
    BDD order.  The order is fixed for the lifetime of the manager.
    """

    def __init__(self, num_vars: int):
        if num_vars < 0:
            raise InvalidVariableError(f"variable count must be >= 0, got {num_vars}")
        self.num_vars = num_vars
        # parallel arrays indexed by node handle; terminals sit at the
        # pseudo-level num_vars so ordering checks need no special case
        self._var: list[int] = [num_vars, num_vars]
        self._low: list[int] = [-1, -1]
        self._high: list[int] = [-1, -1]
        self._unique: dict[tuple[int, int, int], int] = {}
        self._cache: dict[tuple, int] = {}
        self._support_cache: dict[int, frozenset[int]] = {}
        self.peak_nodes = 2

    # -- handles ------------------------------------------------------

    @property
    def false(self) -> NodeRef:
        return NodeRef(self, _FALSE)

    @property
    def true(self) -> NodeRef:
        return NodeRef(self, _TRUE)

    def __len__(self) -> int:
        return len(self._var)

    def _check(self, ref: NodeRef) -> int:
        if not isinstance(ref, NodeRef) or ref.manager is not self:
            raise WrongManagerError(f"node {ref!r} does not belong to this manager")
        return ref.index

    def _ref(self, index: int) -> NodeRef:
        return NodeRef(self, index)

    def _node(self, var: int, low: int, high: int) -> int:
        if low == high:
            return low
        key = (var, low, high)
        found = self._unique.get(key)
        if found is not None:
            return found
        self._var.append(var)
        self._low.append(low)
        self._high.append(high)
        index = len(self._var) - 1
        self._unique[key] = index
        if index + 1 > self.peak_nodes:
            self.peak_nodes = index + 1
        return index

    def clear_cache(self) -> None:
        self._cache.clear()

    # -- construction -------------------------------------------------

    def mk_var(self, var: int) -> NodeRef:
        """Node testing ``var`` with high = TRUE, low = FALSE."""
        if not 0 <= var < self.num_vars:
            raise InvalidVariableError(
                f"variable {var} out of range for {self.num_vars}-variable manager"
            )
        return self._ref(self._node(var, _FALSE, _TRUE))

    def negate(self, a: NodeRef) -> NodeRef:
        return self._ref(self._negate(self._check(a)))

    def _negate(self, a: int) -> int:
        if a == _FALSE:
            return _TRUE
        if a == _TRUE:
            return _FALSE
        key = ("not", a)
        found = self._cache.get(key)
        if found is not None:
            return found
        result = self._node(self._var[a], self._negate(self._low[a]), self._negate(self._high[a]))
        self._cache[key] = result
        return result

    def apply(self, op: str, a: NodeRef, b: NodeRef) -> NodeRef:
        """Canonical BDD of ``op`` applied to the two operand functions."""
        if op not in _OPS:
            raise ValueError(f"unknown operator {op!r}")
        return self._ref(self._apply(op, self._check(a), self._check(b)))

    def _apply_terminal(self, op: str, a: int, b: int) -> int | None:
        if op == "AND":
            if a == _FALSE or b == _FALSE:
                return _FALSE
            if a == _TRUE:
                return b
            if b == _TRUE:
                return a
            if a == b:
                return a
        elif op == "OR":
            if a == _TRUE or b == _TRUE:
                return _TRUE
            if a == _FALSE:
                return b
            if b == _FALSE:
                return a
            if a == b:
                return a
        elif op == "XOR":
            if a == _FALSE:
                return b
            if b == _FALSE:
                return a
            if a == _TRUE:
                return self._negate(b)
            if b == _TRUE:
                return self._negate(a)
            if a == b:
                return _FALSE
        elif op == "IMPLIES":
            if a == _FALSE or b == _TRUE:
                return _TRUE
            if a == _TRUE:
                return b
            if b == _FALSE:
                return self._negate(a)
            if a == b:
                return _TRUE
        elif op == "IFF":
            if a == _TRUE:
                return b
            if b == _TRUE:
                return a
            if a == _FALSE:
                return self._negate(b)
            if b == _FALSE:
                return self._negate(a)
            if a == b:
                return _TRUE
        return None

    def _apply(self, op: str, a: int, b: int) -> int:
        shortcut = self._apply_terminal(op, a, b)
        if shortcut is not None:
            return shortcut
        if op in _COMMUTATIVE and b < a:
            a, b = b, a
        key = (op, a, b)
        found = self._cache.get(key)
        if found is not None:
            return found
        va, vb = self._var[a], self._var[b]
        v = min(va, vb)
        a0, a1 = (self._low[a], self._high[a]) if va == v else (a, a)
        b0, b1 = (self._low[b], self._high[b]) if vb == v else (b, b)
        result = self._node(v, self._apply(op, a0, b0), self._apply(op, a1, b1))
        self._cache[key] = result
        return result

    def ite(self, f: NodeRef, g: NodeRef, h: NodeRef) -> NodeRef:
        """Canonical BDD of (f and g) or (not f and h)."""
        return self._ref(self._ite(self._check(f), self._check(g), self._check(h)))

    def _ite(self, f: int, g: int, h: int) -> int:
        if f == _TRUE:
            return g
        if f == _FALSE:
            return h
        if g == h:
            return g
        if g == _TRUE and h == _FALSE:
            return f
        if g == _FALSE and h == _TRUE:
            return self._negate(f)
        key = ("ite", f, g, h)
        found = self._cache.get(key)
        if found is not None:
            return found
        v = min(self._var[f], self._var[g], self._var[h])
        f0, f1 = (self._low[f], self._high[f]) if self._var[f] == v else (f, f)
        g0, g1 = (self._low[g], self._high[g]) if self._var[g] == v else (g, g)
        h0, h1 = (self._low[h], self._high[h]) if self._var[h] == v else (h, h)
        result = self._node(v, self._ite(f0, g0, h0), self._ite(f1, g1, h1))
        self._cache[key] = result
        return result

    # -- quantification and renaming ----------------------------------

    def exists(self, a: NodeRef, variables) -> NodeRef:
        """Existential quantification: OR over all assignments to ``variables``."""
        vs = self._var_set(variables)
        return self._ref(self._exists(self._check(a), vs))

    def forall(self, a: NodeRef, variables) -> NodeRef:
        """Universal quantification: AND over all assignments to ``variables``."""
        vs = self._var_set(variables)
        return self._ref(self._forall(self._check(a), vs))

    def _var_set(self, variables) -> frozenset[int]:
        vs = frozenset(variables)
        for v in vs:
            if not 0 <= v < self.num_vars:
                raise InvalidVariableError(f"variable {v} out of range")
        return vs

    def _exists(self, a: int, vs: frozenset[int]) -> int:
        if a <= _TRUE or not vs:
            return a
        key = ("exists", a, vs)
        found = self._cache.get(key)
        if found is not None:
            return found
        v = self._var[a]
        lo = self._exists(self._low[a], vs)
        hi = self._exists(self._high[a], vs)
        if v in vs:
            result = self._apply("OR", lo, hi)
        else:
            result = self._node(v, lo, hi)
        self._cache[key] = result
        return result

    def _forall(self, a: int, vs: frozenset[int]) -> int:
        if a <= _TRUE or not vs:
            return a
        key = ("forall", a, vs)
        found = self._cache.get(key)
        if found is not None:
            return found
        v = self._var[a]
        lo = self._forall(self._low[a], vs)
        hi = self._forall(self._high[a], vs)
        if v in vs:
            result = self._apply("AND", lo, hi)
        else:
            result = self._node(v, lo, hi)
        self._cache[key] = result
        return result

    def rename(self, a: NodeRef, mapping: dict[int, int]) -> NodeRef:
        """Substitute variables per ``mapping`` (injective on the support).

        Order-preserving maps are relabeled structurally; anything else goes
        through if-then-else composition, which tolerates arbitrary crossings.
        """
        ai = self._check(a)
        support = sorted(self._support(ai))
        full = {v: mapping.get(v, v) for v in support}
        for v in full.values():
            if not 0 <= v < self.num_vars:
                raise InvalidVariableError(f"rename target {v} out of range")
        if len(set(full.values())) != len(full):
            raise RenameConflictError(
                f"mapping is not injective on support {support}"
            )
        if all(v == w for v, w in full.items()):
            return a
        images = [full[v] for v in support]
        if all(x < y for x, y in zip(images, images[1:])):
            memo: dict[int, int] = {}
            return self._ref(self._rename_fast(ai, full, memo))
        memo = {}
        return self._ref(self._rename_ite(ai, full, memo))

    def _rename_fast(self, a: int, full: dict[int, int], memo: dict[int, int]) -> int:
        if a <= _TRUE:
            return a
        found = memo.get(a)
        if found is not None:
            return found
        result = self._node(
            full[self._var[a]],
            self._rename_fast(self._low[a], full, memo),
            self._rename_fast(self._high[a], full, memo),
        )
        memo[a] = result
        return result

    def _rename_ite(self, a: int, full: dict[int, int], memo: dict[int, int]) -> int:
        if a <= _TRUE:
            return a
        found = memo.get(a)
        if found is not None:
            return found
        var_node = self._node(full[self._var[a]], _FALSE, _TRUE)
        result = self._ite(
            var_node,
            self._rename_ite(self._high[a], full, memo),
            self._rename_ite(self._low[a], full, memo),
        )
        memo[a] = result
        return result

    # -- inspection ----------------------------------------------------

    def support(self, a: NodeRef) -> frozenset[int]:
        """Variables the function actually depends on."""
        return self._support(self._check(a))

    def _support(self, a: int) -> frozenset[int]:
        if a <= _TRUE:
            return frozenset()
        found = self._support_cache.get(a)
        if found is not None:
            return found
        result = (
            frozenset((self._var[a],))
            | self._support(self._low[a])
            | self._support(self._high[a])
        )
        self._support_cache[a] = result
        return result

    def evaluate(self, a: NodeRef, assignment: dict[int, bool]) -> bool:
        """Walk the DAG under a total assignment of the support."""
        ai = self._check(a)
        missing = self._support(ai) - assignment.keys()
        if missing:
            raise MissingVariableError(
                f"assignment misses support variables {sorted(missing)}"
            )
        while ai > _TRUE:
            ai = self._high[ai] if assignment[self._var[ai]] else self._low[ai]
        return ai == _TRUE

    def sat_count(self, a: NodeRef, over: int) -> int:
        """Number of satisfying assignments over ``over`` variables."""
        ai = self._check(a)
        support = self._support(ai)
        needed = max(support) + 1 if support else 0
        if over < needed:
            raise ValueError(
                f"sat_count over {over} variables, but support reaches index {needed - 1}"
            )
        memo: dict[int, int] = {}

        def count(n: int) -> int:
            # assignments of variables strictly below var(n) scaled by caller
            if n == _FALSE:
                return 0
            if n == _TRUE:
                return 1
            found = memo.get(n)
            if found is not None:
                return found
            v = self._var[n]
            lo = count(self._low[n]) << (self._var[self._low[n]] - v - 1)
            hi = count(self._high[n]) << (self._var[self._high[n]] - v - 1)
            result = lo + hi
            memo[n] = result
            return result

        # count over the full order, then drop the free variables above `over`;
        # the shift is exact because the support sits below `over`
        total_full = count(ai) << self._var[ai]
        return total_full >> (self.num_vars - over)

    def node_triple(self, a: NodeRef) -> tuple[int, NodeRef, NodeRef] | None:
        """(variable, low, high) of an internal node, None for terminals."""
        ai = self._check(a)
        if ai <= _TRUE:
            return None
        return self._var[ai], self._ref(self._low[ai]), self._ref(self._high[ai])

    def to_dot(self, a: NodeRef, var_names: dict[int, str] | None = None) -> str:
        """DOT graph: solid edges for high branches, dotted for low."""
        ai = self._check(a)
        lines = ["digraph bdd {", '  f [label="false", shape=box];', '  t [label="true", shape=box];']
        seen: set[int] = set()

        def name(n: int) -> str:
            if n == _FALSE:
                return "f"
            if n == _TRUE:
                return "t"
            return f"n{n}"

        def walk(n: int) -> None:
            if n <= _TRUE or n in seen:
                return
            seen.add(n)
            v = self._var[n]
            label = var_names.get(v, f"x{v}") if var_names else f"x{v}"
            lines.append(f'  n{n} [label="{label}"];')
            lines.append(f"  n{n} -> {name(self._high[n])};")
            lines.append(f"  n{n} -> {name(self._low[n])} [style=dotted];")
            walk(self._low[n])
            walk(self._high[n])

        walk(ai)
        lines.append("}")
        return "\n".join(lines) + "\n"

    def stats(self) -> dict:
        return {
            "nodes": len(self._var),
            "peak_nodes": self.peak_nodes,
            "cache_entries": len(self._cache),
            "variables": self.num_vars,
        }

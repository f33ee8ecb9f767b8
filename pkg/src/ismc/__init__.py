"""Model checking for temporal-epistemic logic over interpreted systems.

Four backends share one input model format and one formula language:

- an explicit-state reference checker (the oracle),
- a symbolic checker on reduced ordered binary decision diagrams,
- a bounded checker that unrolls paths into SAT queries, and
- an unbounded checker built on CNF state sets and quantifier elimination.
"""

__version__ = "0.1.0"

import itertools
import random

import pytest

from ismc.sat import (
    Cnf,
    DimacsParseError,
    PFALSE,
    PTRUE,
    Solver,
    equ_cnf,
    eval_formula,
    formula_size,
    formula_vars,
    from_dimacs,
    pand,
    pimplies,
    pnot,
    por,
    pvar,
    solve,
    to_dimacs,
    tseitin,
)


def random_prop(rng, nvars, depth):
    if depth == 0 or rng.random() < 0.3:
        r = rng.random()
        if r < 0.05:
            return PTRUE
        if r < 0.1:
            return PFALSE
        return pvar(rng.randrange(1, nvars + 1))
    op = rng.randrange(4)
    if op == 0:
        return pnot(random_prop(rng, nvars, depth - 1))
    width = rng.randrange(2, 4)
    args = [random_prop(rng, nvars, depth - 1) for _ in range(width)]
    if op == 1:
        return pand(*args)
    if op == 2:
        return por(*args)
    return pimplies(*args[:2])


def table_bits(f, nvars):
    """Truth table of a formula as an integer bitmask over 2**nvars rows."""
    mask = 0
    for row in range(2 ** nvars):
        assignment = {v: bool(row >> (v - 1) & 1) for v in range(1, nvars + 1)}
        if eval_formula(f, assignment):
            mask |= 1 << row
    return mask


def cnf_sat_bits(clauses, nvars):
    """Bit-parallel truth table of a clause list: one bit per assignment."""
    full = (1 << (2 ** nvars)) - 1
    var_col = {}
    for v in range(1, nvars + 1):
        col = 0
        for row in range(2 ** nvars):
            if row >> (v - 1) & 1:
                col |= 1 << row
        var_col[v] = col
    acc = full
    for clause in clauses:
        cbits = 0
        for lit in clause:
            col = var_col[abs(lit)]
            cbits |= col if lit > 0 else (full & ~col)
        acc &= cbits
    return acc


class TestTseitin:
    def test_single_variable(self):
        cnf = tseitin(pvar(1))
        assert cnf.top == 1
        assert solve(cnf, [cnf.top]) is not None

    def test_contradiction_unsat(self):
        f = pand(pvar(1), pnot(pvar(1)))
        cnf = tseitin(f)
        assert solve(cnf, [cnf.top]) is None

    def test_equisatisfiable_with_truth_table(self):
        rng = random.Random(42)
        for _ in range(150):
            nvars = rng.randrange(1, 9)
            f = random_prop(rng, nvars, 4)
            cnf = tseitin(f)
            sat = solve(cnf, [cnf.top]) is not None
            assert sat == (table_bits(f, nvars) != 0)

    def test_models_restricted_to_inputs_satisfy_formula(self):
        rng = random.Random(43)
        for _ in range(60):
            nvars = rng.randrange(1, 7)
            f = random_prop(rng, nvars, 3)
            cnf = tseitin(f)
            model = solve(cnf, [cnf.top])
            if model is None:
                continue
            assignment = {v: model[v] for v in formula_vars(f)}
            assert eval_formula(f, assignment)

    def test_linear_size_budget(self):
        # five literals per tree node is the budget the encoding stays under
        rng = random.Random(44)
        for _ in range(100):
            f = random_prop(rng, 8, 6)
            cnf = tseitin(f)
            literals = sum(len(c) for c in cnf.clauses)
            assert literals <= 5 * formula_size(f)


class TestSolver:
    def test_unit_contradiction(self):
        cnf = Cnf(num_vars=1)
        cnf.add_clause([1])
        cnf.add_clause([-1])
        assert solve(cnf) is None

    def test_empty_clause_list_sat(self):
        assert solve(Cnf(num_vars=0)) == [False]
        assert solve(Cnf(num_vars=3)) == [False, True, True, True]

    def test_deterministic(self):
        rng = random.Random(45)
        clauses = [[rng.choice([-1, 1]) * rng.randrange(1, 12) for _ in range(3)] for _ in range(40)]
        cnf = Cnf(num_vars=12)
        for c in clauses:
            cnf.add_clause(c)
        first = solve(cnf)
        for _ in range(3):
            assert solve(cnf) == first

    def test_assumptions(self):
        cnf = Cnf(num_vars=2)
        cnf.add_clause([1, 2])
        assert solve(cnf, [-1]) is not None
        assert solve(cnf, [-1, -2]) is None

    def test_random_3cnf_against_truth_table(self):
        rng = random.Random(46)
        for _ in range(200):
            nvars = rng.randrange(3, 10)
            nclauses = rng.randrange(2, 5 * nvars)
            clauses = []
            for _ in range(nclauses):
                vs = rng.sample(range(1, nvars + 1), 3)
                clauses.append([v * rng.choice([-1, 1]) for v in vs])
            cnf = Cnf(num_vars=nvars)
            for c in clauses:
                cnf.add_clause(c)
            model = solve(cnf)
            expected = cnf_sat_bits(cnf.clauses, nvars) != 0
            assert (model is not None) == expected
            if model is not None:
                for clause in cnf.clauses:
                    assert any(model[abs(l)] == (l > 0) for l in clause)

    def test_incremental_clause_addition(self):
        s = Solver(3)
        s.add_clause([1, 2])
        assert s.solve() is not None
        s.add_clause([-1])
        s.add_clause([-2])
        assert s.solve() is None


class TestDimacs:
    def test_exact_format(self):
        cnf = Cnf(num_vars=2)
        cnf.add_clause([1, -2])
        assert to_dimacs(cnf) == "p cnf 2 1\n1 -2 0\n"

    def test_round_trip_clause_multisets(self):
        rng = random.Random(47)
        for _ in range(50):
            nvars = rng.randrange(1, 15)
            cnf = Cnf(num_vars=nvars)
            for _ in range(rng.randrange(0, 30)):
                width = rng.randrange(1, 5)
                cnf.add_clause(
                    [rng.randrange(1, nvars + 1) * rng.choice([-1, 1]) for _ in range(width)]
                )
            back = from_dimacs(to_dimacs(cnf))
            assert back.num_vars == cnf.num_vars
            assert sorted(map(sorted, back.clauses)) == sorted(map(sorted, cnf.clauses))

    def test_count_mismatch_rejected(self):
        with pytest.raises(DimacsParseError) as err:
            from_dimacs("p cnf 2 3\n1 -2 0\n")
        assert "declares 3" in str(err.value)

    def test_bad_token_line_number(self):
        with pytest.raises(DimacsParseError) as err:
            from_dimacs("p cnf 2 1\n1 xyz 0\n")
        assert err.value.line == 2

    def test_literal_out_of_range(self):
        with pytest.raises(DimacsParseError):
            from_dimacs("p cnf 2 1\n1 -5 0\n")

    def test_missing_header(self):
        with pytest.raises(DimacsParseError):
            from_dimacs("1 2 0\n")

    def test_comments_and_multiline_clauses(self):
        cnf = from_dimacs("c a comment\np cnf 3 2\n1 2\n3 0 -1 0\n")
        assert len(cnf.clauses) == 2


class TestEquCnf:
    def test_eliminates_to_remaining_variable(self):
        # forall p. (p or q) is q
        f = por(pvar(1), pvar(2))
        out = equ_cnf(f, {1})
        assert cnf_sat_bits(out.clauses, 2) == cnf_sat_bits([[2]], 2)

    def test_forall_own_variable_is_false(self):
        out = equ_cnf(pvar(1), {1})
        assert [] in out.clauses

    def test_empty_eliminate_equivalent(self):
        rng = random.Random(48)
        for _ in range(80):
            nvars = rng.randrange(1, 9)
            f = random_prop(rng, nvars, 4)
            out = equ_cnf(f)
            assert cnf_sat_bits(out.clauses, nvars) == table_bits(f, nvars)

    def test_matches_forall_projection(self):
        rng = random.Random(49)
        for _ in range(80):
            nvars = rng.randrange(1, 9)
            f = random_prop(rng, nvars, 4)
            present = sorted(formula_vars(f))
            if not present:
                continue
            elim = set(rng.sample(present, rng.randrange(0, len(present) + 1)))
            out = equ_cnf(f, elim)
            table = table_bits(f, nvars)
            expected = 0
            for row in range(2 ** nvars):
                ok = True
                for combo in itertools.product(
                    [False, True], repeat=len(elim)
                ):
                    r = row
                    for v, b in zip(sorted(elim), combo):
                        r = (r | (1 << (v - 1))) if b else (r & ~(1 << (v - 1)))
                    if not table >> r & 1:
                        ok = False
                        break
                if ok:
                    expected |= 1 << row
            assert cnf_sat_bits(out.clauses, nvars) == expected

    def test_iteration_bound(self):
        rng = random.Random(50)
        for _ in range(30):
            nvars = rng.randrange(1, 7)
            f = random_prop(rng, nvars, 3)
            stats = {}
            equ_cnf(f, stats=stats)
            assert stats["blocking_clauses"] <= 2 ** nvars

    def test_unknown_eliminate_variable_rejected(self):
        with pytest.raises(ValueError):
            equ_cnf(pvar(1), {2})

"""Tests du module qubo : énergies, deltas, Ising, encodage par bits d'écart"""

import itertools
import json

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from src.errors import AssignmentError, InfeasibleBoundError, QuboIndexError, QuDashError
from src.qubo import (
    IsingModel,
    QuboProblem,
    add_term,
    delta_energy,
    encode_less_than,
    energy,
    ising_to_qubo,
    new_problem,
    qubo_to_ising,
    slack_count,
)


coeff = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)


@st.composite
def problems(draw, max_vars=8):
    n = draw(st.integers(min_value=1, max_value=max_vars))
    problem = QuboProblem(n, draw(coeff))
    for _ in range(draw(st.integers(min_value=0, max_value=3 * n))):
        i = draw(st.integers(0, n - 1))
        j = draw(st.integers(0, n - 1))
        problem.add_term(i, j, draw(coeff))
    return problem


@st.composite
def problem_and_assignment(draw):
    problem = draw(problems())
    x = draw(st.lists(st.integers(0, 1), min_size=problem.num_vars, max_size=problem.num_vars))
    return problem, x


def test_empty_problem_energy():
    assert energy(new_problem(0), []) == 0
    assert energy(new_problem(3), [1, 1, 1]) == 0


def test_single_linear_term():
    p = new_problem(2)
    add_term(p, 0, 0, 5)
    assert energy(p, [1, 0]) == 5


def test_add_term_accumulates_in_canonical_order():
    p = new_problem(2)
    add_term(p, 0, 1, 2)
    add_term(p, 1, 0, 3)
    assert p.coeffs == {(0, 1): 5}

    q = new_problem(1).add_term(0, 0, -1).add_term(0, 0, -1)
    assert q.coeffs == {(0, 0): -2}


def test_add_term_out_of_range_names_index():
    with pytest.raises(QuboIndexError) as excinfo:
        new_problem(3).add_term(5, 0, 1.0)
    assert excinfo.value.index == 5
    assert "5" in str(excinfo.value)


def test_add_term_rejects_non_finite():
    with pytest.raises(Exception):
        new_problem(2).add_term(0, 1, float("nan"))


def test_energy_hand_examples(two_var_problem):
    assert energy(two_var_problem, [1, 1]) == 1
    assert energy(two_var_problem, [1, 0]) == -1
    assert energy(two_var_problem, [0, 1]) == -1
    assert energy(two_var_problem, [0, 0]) == 0


def test_energy_all_zeros_is_offset():
    p = QuboProblem(3, offset=4.5).add_term(0, 2, 7)
    assert p.energy([0, 0, 0]) == 4.5


def test_energy_length_mismatch(two_var_problem):
    with pytest.raises(AssignmentError):
        two_var_problem.energy([1])
    with pytest.raises(AssignmentError):
        two_var_problem.energy([1, 2])


def test_delta_energy_examples(two_var_problem):
    assert delta_energy(two_var_problem, [1, 1], 1) == -2
    assert delta_energy(two_var_problem, [0, 0], 0) == -1


def test_delta_energy_index_out_of_range(two_var_problem):
    with pytest.raises(QuboIndexError):
        two_var_problem.delta_energy([0, 0], 2)


@settings(max_examples=300)
@given(problem_and_assignment(), st.data())
def test_delta_matches_energy_difference(pa, data):
    """Le delta en forme fermée égale la différence d'énergies après flip"""
    problem, x = pa
    k = data.draw(st.integers(0, problem.num_vars - 1))
    flipped = list(x)
    flipped[k] = 1 - flipped[k]
    expected = problem.energy(flipped) - problem.energy(x)
    assert abs(problem.delta_energy(x, k) - expected) <= 1e-9 * max(1.0, abs(problem.energy(x)))


def test_ising_single_variable():
    model = qubo_to_ising(QuboProblem(1).add_term(0, 0, 2))
    assert model.energy([-1]) == 0
    assert model.energy([1]) == 2


def test_ising_empty_problem():
    model = qubo_to_ising(new_problem(0))
    assert model.couplings == {}
    assert model.fields == []
    assert model.offset == 0


def test_ising_two_var_enumeration(two_var_problem):
    model = two_var_problem.to_ising()
    for x in itertools.product((0, 1), repeat=2):
        sigma = [2 * b - 1 for b in x]
        assert model.energy(sigma) == pytest.approx(two_var_problem.energy(x), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(problems(max_vars=12))
def test_ising_equivalence_on_all_assignments(problem):
    """QUBO et Ising coïncident sur les 2^N affectations"""
    model = qubo_to_ising(problem)
    for x in itertools.product((0, 1), repeat=problem.num_vars):
        sigma = [2 * b - 1 for b in x]
        assert model.energy(sigma) == pytest.approx(problem.energy(x), rel=1e-9, abs=1e-9)


def test_ising_equivalence_at_twelve_variables():
    rng = np.random.default_rng(12)
    problem = QuboProblem(12, offset=1.5)
    for i in range(12):
        for j in range(i, 12):
            problem.add_term(i, j, float(rng.uniform(-10, 10)))
    model = qubo_to_ising(problem)
    for x in itertools.product((0, 1), repeat=12):
        sigma = [2 * b - 1 for b in x]
        assert model.energy(sigma) == pytest.approx(problem.energy(x), rel=1e-9, abs=1e-9)


@settings(max_examples=40)
@given(problems(max_vars=6))
def test_ising_round_trip(problem):
    back = ising_to_qubo(qubo_to_ising(problem))
    for x in itertools.product((0, 1), repeat=problem.num_vars):
        assert back.energy(x) == pytest.approx(problem.energy(x), rel=1e-9, abs=1e-9)


def test_ising_rejects_non_spin_values():
    with pytest.raises(AssignmentError):
        IsingModel(1, fields=[1.0]).energy([0])


@settings(max_examples=40)
@given(problems(max_vars=6), st.booleans())
def test_da_form_round_trip(problem, symmetric):
    """E(x) = offset − Σ W·x·x − Σ b·x reconstruit le même QUBO"""
    w, b, offset = problem.to_da_form(symmetric=symmetric)
    rebuilt = QuboProblem.from_da_form(w, b, offset)
    for x in itertools.product((0, 1), repeat=problem.num_vars):
        xv = np.array(x, dtype=float)
        da_energy = offset - xv @ np.triu(w, 1) @ xv - (xv @ np.tril(w, -1) @ xv) - b @ xv
        assert da_energy == pytest.approx(problem.energy(x), rel=1e-9, abs=1e-9)
        assert rebuilt.energy(x) == pytest.approx(problem.energy(x), rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("bound, expected", [(7.5, 3), (8, 4), (1, 1), (0.5, 1), (10, 4), (16, 5), (18, 5)])
def test_slack_count(bound, expected):
    assert slack_count(bound) == expected


def test_encode_less_than_layout():
    encoding, term = encode_less_than([1.0, 2.0, 3.0], 7.5, 2.0)
    assert encoding.K == 3
    assert encoding.decision_indices == (0, 1, 2)
    assert encoding.slack_indices == (3, 4, 5)
    assert term.num_vars == 6


def test_encode_less_than_rejects_non_positive_bound():
    with pytest.raises(InfeasibleBoundError):
        encode_less_than([1.0], 0.0, 1.0)
    with pytest.raises(InfeasibleBoundError):
        encode_less_than([1.0], -3.0, 1.0)


def _min_over_slack(term, encoding, x):
    best = None
    for y in itertools.product((0, 1), repeat=encoding.K):
        value = term.energy(list(x) + list(y))
        best = value if best is None else min(best, value)
    return best


@settings(max_examples=80, deadline=None)
@given(
    st.lists(st.integers(0, 8), min_size=1, max_size=4),
    st.integers(1, 40),
    st.floats(min_value=0.5, max_value=5.0),
    st.data(),
)
def test_slack_exact_on_violated_side(weights, quarter_bound, penalty, data):
    """Σw·x >= U : min sur les bits d'écart = penalty·(Σw·x − U)²"""
    bound = quarter_bound / 4
    encoding, term = encode_less_than(weights, bound, penalty)
    x = data.draw(st.lists(st.integers(0, 1), min_size=len(weights), max_size=len(weights)))
    load = sum(w * b for w, b in zip(weights, x))
    assume(load >= bound)
    assert _min_over_slack(term, encoding, x) == pytest.approx(penalty * (load - bound) ** 2, rel=1e-9, abs=1e-9)


@settings(max_examples=80, deadline=None)
@given(
    st.lists(st.integers(0, 8), min_size=1, max_size=4),
    st.integers(1, 40),
    st.floats(min_value=0.5, max_value=5.0),
    st.data(),
)
def test_slack_near_feasible_on_satisfied_side(weights, quarter_bound, penalty, data):
    """Σw·x <= U : résidu au plus 0.5 tant que l'échelle d'écart couvre U − Σw·x"""
    bound = quarter_bound / 4
    encoding, term = encode_less_than(weights, bound, penalty)
    x = data.draw(st.lists(st.integers(0, 1), min_size=len(weights), max_size=len(weights)))
    load = sum(w * b for w, b in zip(weights, x))
    assume(load <= bound)
    assume(bound - load <= 2 ** encoding.K - 0.5)
    assert _min_over_slack(term, encoding, x) <= penalty * 0.25 + 1e-9


@settings(max_examples=50)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4), coeff), max_size=12), st.randoms())
def test_accumulation_order_does_not_matter(terms, rnd):
    first = QuboProblem(5)
    for i, j, c in terms:
        first.add_term(i, j, c)
    shuffled = list(terms)
    rnd.shuffle(shuffled)
    second = QuboProblem(5)
    for i, j, c in shuffled:
        second.add_term(j, i, c)
    for x in itertools.product((0, 1), repeat=5):
        assert first.energy(x) == pytest.approx(second.energy(x), rel=1e-9, abs=1e-9)


def test_json_dump_is_sorted_and_reloads(two_var_problem):
    data = json.loads(two_var_problem.to_json())
    assert data == {"num_vars": 2, "offset": 0.0, "terms": [[0, 0, -1], [0, 1, 3], [1, 1, -1]]}
    reloaded = QuboProblem.from_dict(data)
    assert reloaded.coeffs == two_var_problem.coeffs


def test_add_one_hot_registers_group_and_penalty():
    problem = QuboProblem(4).add_one_hot([0, 1, 2], 5.0)
    assert problem.one_hot_groups == [(0, 1, 2)]
    assert problem.has_constraint_structure
    for x in itertools.product((0, 1), repeat=3):
        assert problem.energy(list(x) + [1]) == pytest.approx(5.0 * (sum(x) - 1) ** 2)


@pytest.mark.parametrize("groups", [[[0, 0]], [[]], [[0, 1], [1, 2]]])
def test_add_one_hot_rejects_bad_groups(groups):
    problem = QuboProblem(3)
    with pytest.raises(QuDashError):
        for group in groups:
            problem.add_one_hot(group, 1.0)


def test_add_less_than_registers_slack_block():
    problem = QuboProblem(2)
    encoding = problem.add_less_than([0, 1], [1.0, 2.0], 2.5, 1.0)
    assert problem.slack_blocks == [encoding]
    assert not QuboProblem(3).has_constraint_structure


@settings(max_examples=80, deadline=None)
@given(
    st.lists(st.integers(0, 8), min_size=1, max_size=4),
    st.integers(1, 40),
    st.floats(min_value=0.5, max_value=5.0),
    st.data(),
)
def test_best_slack_reaches_minimum_residual(weights, quarter_bound, penalty, data):
    """Les bits de best_slack donnent penalty·résidu² égal au minimum sur l'écart"""
    encoding, term = encode_less_than(weights, quarter_bound / 4, penalty)
    x = data.draw(st.lists(st.integers(0, 1), min_size=len(weights), max_size=len(weights)))
    slack = encoding.slack_bits(encoding.best_slack(list(x) + [0] * encoding.K))
    full = list(x) + list(slack)
    assert term.energy(full) == pytest.approx(penalty * encoding.residual(full) ** 2, rel=1e-9, abs=1e-9)
    assert term.energy(full) == pytest.approx(_min_over_slack(term, encoding, x), rel=1e-9, abs=1e-9)


def test_slack_bits_range():
    encoding, _ = encode_less_than([1.0], 5.0, 1.0)
    assert encoding.slack_bits(5) == (1, 0, 1)
    with pytest.raises(QuDashError):
        encoding.slack_bits(8)

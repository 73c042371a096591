import itertools

import pytest

from atmpnet.errors import EncodingError
from atmpnet.evaluator import evaluate
from atmpnet.instance import generate
from atmpnet.encoding import (
    _base_names,
    _products,
    auxiliary_count_formula,
    decode,
    encode,
    encode_solution,
    solve_lp,
)
from atmpnet.oracle import enumerate_all, oracle_optimum
from atmpnet.scalarization import EpsilonConstraint, WeightedSum

from conftest import frozen_instance, frozen_solution, make_solution

COVERING = WeightedSum(1.0, 1.0, 1000.0)


@pytest.mark.parametrize("sizes", [(1, 1, 1), (2, 3, 2), (4, 2, 3), (3, 5, 1)])
def test_auxiliary_count_matches_closed_form(sizes):
    program = encode(generate(*sizes, seed=0), COVERING)
    assert program.auxiliary_count == auxiliary_count_formula(*sizes)
    assert len(program.variables) == program.auxiliary_count + sum(
        (2 * sizes[1], 2 * sizes[0] * sizes[1], sizes[0], sizes[1] * sizes[2])
    )


@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("paper_strict", [False, True])
def test_every_feasible_solution_satisfies_the_program(seed, paper_strict):
    instance = generate(2, 2, 1, seed=seed)
    program = encode(instance, COVERING, paper_strict=paper_strict)
    for solution, vector in enumerate_all(instance, paper_strict=paper_strict):
        assignment = encode_solution(instance, solution)
        assert program.check(assignment) == []
        waiting, cost, covered = program.decomposition(assignment)
        assert waiting == pytest.approx(vector.waiting_time_hours, abs=1e-9)
        assert cost == pytest.approx(vector.cost, abs=1e-9)
        assert covered == vector.coverage
        assert decode(instance, assignment) == solution


def _all_assignments(instance):
    """Every 0-1 assignment of the decision variables, auxiliaries set to their products."""
    names = _base_names(*instance.sizes)
    products = list(_products(*instance.sizes))
    for bits in itertools.product((0.0, 1.0), repeat=len(names)):
        assignment = dict(zip(names, bits))
        for aux, left, right in products:
            assignment[aux] = assignment[left] * assignment[right]
        yield assignment


@pytest.mark.parametrize("seed", range(50))
@pytest.mark.parametrize("paper_strict", [False, True])
def test_program_and_enumeration_have_the_same_solutions(seed, paper_strict):
    instance = generate(1, 2, 1, seed=seed)
    program = encode(instance, COVERING, paper_strict=paper_strict)
    encoded = {decode(instance, a) for a in _all_assignments(instance) if not program.check(a)}
    enumerated = {solution for solution, _ in enumerate_all(instance, paper_strict=paper_strict)}
    assert encoded == enumerated


def test_cryo_gap_row_only_outside_strict_mode():
    instance = frozen_instance()
    gap = make_solution(instance, y_m=[0], x_m=[(0, 0)], z=[0], modes=[(0, 0)])
    assignment = encode_solution(instance, gap)
    assert encode(instance, COVERING).check(assignment) == ["cryo_gap_0"]
    assert encode(instance, COVERING, paper_strict=True).check(assignment) == []
    # uncovered, yet frozen and holding a cryo slot
    parked = make_solution(instance, y_c=[1], x_c=[(0, 1)], z=[0])
    assert encode(instance, COVERING).check(encode_solution(instance, parked)) == []


def test_epsilon_bounds_become_rows():
    eps = EpsilonConstraint("waiting_time", cost_cap=500.0, coverage_floor=1)
    program = encode(frozen_instance(), eps)
    names = [c.name for c in program.constraints]
    assert "eps_cost" in names
    assert "eps_coverage" in names
    assert "eps_waiting_time" not in names
    assignment = encode_solution(frozen_instance(), frozen_solution(frozen_instance()))
    assert program.check(assignment) == []
    assert program.objective_value(assignment) == pytest.approx(11.0)


def test_decode_rejects_fractional_values():
    instance = frozen_instance()
    assignment = encode_solution(instance, frozen_solution(instance))
    assignment["ym_0"] = 0.5
    with pytest.raises(EncodingError):
        decode(instance, assignment)


def test_decode_rejects_inconsistent_auxiliaries():
    instance = frozen_instance()
    assignment = encode_solution(instance, frozen_solution(instance))
    assignment["a_0_0"] = 0.0
    with pytest.raises(EncodingError) as info:
        decode(instance, assignment)
    assert "a_0_0" in str(info.value)


def test_lp_and_mps_text():
    program = encode(generate(1, 2, 1, seed=0), EpsilonConstraint("cost", coverage_floor=1))
    lp = program.to_lp_text()
    assert lp.startswith("\\ atmpnet\nMinimize\n")
    assert "Subject To" in lp and "Binaries" in lp and lp.endswith("End\n")
    assert " eps_coverage:" in lp
    mps = program.to_mps_text()
    assert "MARKER 'MARKER' 'INTORG'" in mps
    assert "MARKER 'MARKER' 'INTEND'" in mps
    assert " G eps_coverage" in mps
    assert " BV bnd ym_0" in mps
    assert mps.endswith("ENDATA\n")


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("sizes", [(2, 2, 1), (3, 2, 2)])
@pytest.mark.parametrize("paper_strict", [False, True])
def test_milp_optimum_matches_enumeration(seed, sizes, paper_strict):
    instance = generate(*sizes, seed=seed)
    result = solve_lp(encode(instance, COVERING, paper_strict=paper_strict))
    assert result.optimal
    solution = decode(instance, result.assignment)
    _, best = oracle_optimum(instance, COVERING, paper_strict=paper_strict)
    assert COVERING.score(evaluate(instance, solution)) == pytest.approx(COVERING.score(best), abs=1e-6)
    assert result.objective == pytest.approx(COVERING.score(best), abs=1e-6)


def test_milp_reports_infeasible_bounds():
    instance = frozen_instance()
    result = solve_lp(encode(instance, EpsilonConstraint("cost", waiting_cap=1.0, coverage_floor=1)))
    assert result.status == "infeasible"
    assert result.assignment is None

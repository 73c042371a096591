import json

import pytest

from atmpnet.errors import InstanceValidationError, SchemaError, ShapeError
from atmpnet.instance import ObjectiveVector, Solution, generate
from atmpnet.schema import (
    SCHEMA_VERSION,
    canonical_json,
    read_instance,
    read_solution,
    write_instance,
    write_solution,
)

from conftest import fresh_instance, frozen_instance, frozen_solution


def test_instance_file_is_canonical():
    data = write_instance(generate(3, 2, 2, seed=4))
    payload = json.loads(data)
    assert payload["schema_version"] == SCHEMA_VERSION
    assert data == canonical_json(payload)
    assert list(payload) == sorted(payload)


@pytest.mark.parametrize("seed", range(100))
def test_instance_reads_back_identically(seed):
    instance = generate(1 + seed % 5, 1 + seed % 4, 1 + seed % 3, seed=seed)
    data = write_instance(instance)
    again = read_instance(data)
    assert write_instance(again) == data
    assert again.to_dict() == instance.to_dict()


def test_missing_big_t_defaults_to_max_travel_plus_one():
    payload = json.loads(write_instance(fresh_instance()))
    del payload["big_t_hours"]
    del payload["cryo_leg_limit_hours"]
    instance = read_instance(json.dumps(payload))
    assert instance.big_t_hours == 4.0
    assert instance.cryo_leg_limit_hours == 24.0


def test_failure_rate_of_one_is_rejected_with_path():
    payload = json.loads(write_instance(fresh_instance()))
    payload["failure_rate"] = [[1.0]]
    with pytest.raises(InstanceValidationError) as info:
        read_instance(json.dumps(payload))
    assert "failure_rate" in str(info.value)
    assert "out of [0,1)" in str(info.value)
    assert read_instance(json.dumps(payload), check=False).failure_rate.tolist() == [[1.0]]


def test_ragged_travel_names_the_row():
    payload = json.loads(write_instance(generate(2, 2, 1, seed=0)))
    payload["travel"][3] = payload["travel"][3][:2]
    with pytest.raises(SchemaError) as info:
        read_instance(json.dumps(payload))
    assert info.value.path == "travel.3"


def test_ragged_cost_tensor_names_the_nested_row():
    payload = json.loads(write_instance(generate(2, 2, 2, seed=0)))
    payload["op_cost_fresh"][1][0] = [1.0]
    with pytest.raises(SchemaError) as info:
        read_instance(json.dumps(payload))
    assert info.value.path == "op_cost_fresh.1.0"


@pytest.mark.parametrize(
    "mutate, path",
    [
        (lambda p: p.update(schema_version=2), "schema_version"),
        (lambda p: p.update(extra_field=1), "extra_field"),
        (lambda p: p["orders"][0].pop("shelf_life_hours"), "orders.0.shelf_life_hours"),
        (lambda p: p.update(travel="far"), "travel"),
    ],
)
def test_schema_errors_carry_dotted_paths(mutate, path):
    payload = json.loads(write_instance(fresh_instance()))
    mutate(payload)
    with pytest.raises(SchemaError) as info:
        read_instance(json.dumps(payload))
    assert info.value.path == path


def test_not_json_is_a_schema_error():
    with pytest.raises(SchemaError) as info:
        read_instance(b"{not json")
    assert info.value.path == "$"


def test_solution_file_carries_objective():
    instance = frozen_instance()
    solution = frozen_solution(instance)
    data = write_solution(solution, ObjectiveVector(11.0, 162.0, 1))
    payload = json.loads(data)
    assert payload["objective"]["coverage"] == 1
    assert payload["z"] == [1]
    assert read_solution(data, instance) == solution


def test_solution_shape_is_checked_against_instance():
    data = write_solution(Solution.empty(frozen_instance()))
    with pytest.raises(ShapeError):
        read_solution(data, fresh_instance())


def test_solution_rejects_unknown_fields():
    payload = json.loads(write_solution(Solution.empty(fresh_instance())))
    payload["w"] = [0]
    with pytest.raises(SchemaError):
        read_solution(json.dumps(payload))

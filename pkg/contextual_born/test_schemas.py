import pytest
from pydantic import BaseModel, ValidationError

from contextual_born.config import DEFAULT_TOLERANCES, Tolerances
from contextual_born.errors import EngineError, NotConverged, ZeroVector
from contextual_born.schemas import (
    Command,
    ComplexValue,
    ErrorResponse,
    MeasureKind,
    ObservableFile,
    OutputFormat,
    RunConfig,
    ValidationErrorResponse,
)


class _Holder(BaseModel):
    z: ComplexValue


def test_complex_value_round_trip():
    """Complex numbers travel as [re, im] in JSON"""
    holder = _Holder(z=1.5 - 2j)
    assert holder.model_dump(mode="json") == {"z": [1.5, -2.0]}
    assert holder.model_dump() == {"z": 1.5 - 2j}
    assert _Holder.model_validate_json('{"z": [0.25, 4]}').z == complex(0.25, 4)
    with pytest.raises(ValidationError):
        _Holder(z=[1.0, 2.0, 3.0])


def test_complex_value_uses_shortest_round_trip_floats():
    """0.1 is written as 0.1, and the reloaded double is the same one"""
    text = _Holder(z=0.1 + 1j / 3).model_dump_json()
    assert text == '{"z":[0.1,0.3333333333333333]}'
    assert _Holder.model_validate_json(text).z == 0.1 + 1j / 3


def test_run_config_defaults():
    config = RunConfig(command=Command.INVARIANCE_SCAN)
    assert config.dim == 3
    assert config.seed == 0
    assert config.n_contexts == 100
    assert config.measure is MeasureKind.BORN
    assert config.output is OutputFormat.JSON
    assert config.b == 0j
    assert RunConfig(command="uniqueness-solve").n_contexts == 10
    assert RunConfig(command="uniqueness-solve", n_contexts=None).n_contexts == 10
    assert RunConfig(command="uniqueness-solve", n_contexts=25).n_contexts == 25


@pytest.mark.parametrize(
    "overrides",
    [
        {"command": "weak-value", "dim": 1},
        {"command": "weak-value", "seed": -1},
        {"command": "weak-value", "seed": 2**64},
        {"command": "weak-value", "output": "csv"},
        {"command": "weak-value", "mu": (1.0, 0.0, 0.0)},
        {"command": "weak-value", "measure": "param", "mu": ()},
        {"command": "weak-value", "measure": "param", "mu": (1.0, 0.0)},
        {"command": "weak-value", "p0": 0.5},
        {"command": "weak-value", "measure": "cubic"},
        {"command": "heisenberg-scan", "eigen_index": 3},
        {"command": "uniqueness-solve", "dim": 9},
        {"command": "invariance-scan", "n_contexts": 1},
        {"command": "weak-value", "tolerance_overlap": 0.0},
        {"command": "weak-value", "unexpected": True},
        {"command": "not-a-command"},
    ],
)
def test_run_config_rejections(overrides):
    with pytest.raises(ValidationError):
        RunConfig(**overrides)


def test_run_config_accepts_parametrized_measure():
    config = RunConfig(command="invariance-scan", measure="param", mu=(1.0, 0.1, 0.0), p0=0.2, output="csv")
    assert config.mu == (1.0, 0.1, 0.0)
    assert config.output is OutputFormat.CSV


def test_run_config_serializes_complex_b():
    config = RunConfig(command="weak-value", b=0.3 + 0.1j)
    assert config.model_dump(mode="json")["b"] == [0.3, 0.1]


def test_observable_file_shape():
    parsed = ObservableFile(dim=2, entries=[[[1, 0], [0, 0]], [[0, 0], [-1, 0]]])
    assert parsed.entries[1][1] == -1 + 0j
    with pytest.raises(ValidationError):
        ObservableFile(dim=2, entries=[[[1, 0]], [[0, 0]]])


def test_error_responses():
    error = ErrorResponse(error="Test error", code="TEST_ERROR", details={"extra": "info"})
    assert error.error == "Test error"
    assert error.code == "TEST_ERROR"
    assert error.details == {"extra": "info"}
    assert ValidationErrorResponse(errors={"dim": "too small"}).code == "VALIDATION_ERROR"


def test_tolerances():
    assert DEFAULT_TOLERANCES.overlap_cutoff == 1e-12
    assert DEFAULT_TOLERANCES.orthonormal == 1e-10
    assert Tolerances(overlap_cutoff=1e-9).overlap_cutoff == 1e-9
    with pytest.raises(ValidationError):
        Tolerances(norm=0.0)
    with pytest.raises(ValidationError):
        Tolerances(max_dim=1)
    with pytest.raises(ValidationError):
        Tolerances(unknown=1.0)


def test_engine_error_codes():
    error = ZeroVector("zero", {"norm": 0.0})
    assert isinstance(error, EngineError)
    assert error.code == "ZERO_VECTOR"
    assert error.details == {"norm": 0.0}
    assert str(error) == "zero"
    assert NotConverged("stuck").details is None

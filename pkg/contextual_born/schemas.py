from enum import Enum
from typing import Annotated, Any, Dict, List, Optional, Tuple

from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    PlainSerializer,
    field_validator,
    model_validator,
)


def _coerce_complex(v):
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ValueError("Complex numbers are encoded as [re, im]")
        return complex(float(v[0]), float(v[1]))
    return v


ComplexValue = Annotated[
    complex,
    BeforeValidator(_coerce_complex),
    PlainSerializer(lambda z: [z.real, z.imag], return_type=List[float], when_used="json"),
]


class MeasureKind(str, Enum):
    BORN = "born"
    QUARTIC = "quartic"
    PARAMETRIZED = "param"


class Command(str, Enum):
    WEAK_VALUE = "weak-value"
    INVARIANCE_SCAN = "invariance-scan"
    UNIQUENESS_SOLVE = "uniqueness-solve"
    ZUREK_DEMO = "zurek-demo"
    HEISENBERG_SCAN = "heisenberg-scan"


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"


TABLE_COMMANDS = (Command.INVARIANCE_SCAN, Command.HEISENBERG_SCAN)


class RunConfig(BaseModel):
    """Fully resolved command-line configuration; embedded in every report."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    command: Command
    dim: int = Field(3, description="Hilbert-space dimension", ge=2, le=1024)
    seed: int = Field(0, description="Master seed", ge=0, lt=2**64)
    n_contexts: int = Field(100, description="Number of Haar contexts (10 for uniqueness-solve when unset)", ge=1)
    measure: MeasureKind = Field(MeasureKind.BORN, description="Candidate probability measure")
    mu: Optional[Tuple[float, ...]] = Field(None, description="Parametrized-measure coefficients")
    p0: float = Field(0.0, description="Parametrized-measure offset")
    b: ComplexValue = Field(0j, description="Contextual-value coefficient b (a is fixed to 1)")
    output: OutputFormat = OutputFormat.JSON
    out_path: str = Field("-", description="Report destination; '-' is standard output")
    observable_file: Optional[str] = None
    tolerance_overlap: float = Field(1e-12, gt=0)
    tolerance_orthonormal: float = Field(1e-10, gt=0)
    max_iter: int = Field(20000, description="Solver iteration budget", ge=1)
    tol: float = Field(1e-9, description="Solver convergence threshold on the residual", gt=0)
    n_observables: int = Field(5, description="Solver observables, the pre-state projector included", ge=1)
    time: float = Field(1.0, description="Final time T of the Heisenberg trajectory")
    steps: int = Field(16, ge=1)
    eigen_index: int = Field(0, ge=0)

    @model_validator(mode="before")
    @classmethod
    def resolve_n_contexts(cls, data):
        if isinstance(data, dict) and data.get("n_contexts") is None:
            data = dict(data)
            data["n_contexts"] = 10 if data.get("command") in (Command.UNIQUENESS_SOLVE, "uniqueness-solve") else 100
        return data

    @field_validator("mu")
    @classmethod
    def validate_mu(cls, v):
        if v is not None and len(v) == 0:
            raise ValueError("mu cannot be empty")
        return v

    @model_validator(mode="after")
    def validate_combination(self):
        if self.output is OutputFormat.CSV and self.command not in TABLE_COMMANDS:
            raise ValueError(f"CSV output is only available for {', '.join(c.value for c in TABLE_COMMANDS)}")
        if self.measure is not MeasureKind.PARAMETRIZED and (self.mu is not None or self.p0 != 0.0):
            raise ValueError("mu and p0 require --measure param")
        if self.mu is not None and len(self.mu) != self.dim:
            raise ValueError(f"mu needs {self.dim} coefficients, got {len(self.mu)}")
        if self.eigen_index >= self.dim:
            raise ValueError("eigen_index must be smaller than dim")
        if self.command is Command.UNIQUENESS_SOLVE and not 2 <= self.dim <= 8:
            raise ValueError("uniqueness-solve supports dim in [2, 8]")
        if self.command in (Command.INVARIANCE_SCAN, Command.UNIQUENESS_SOLVE) and self.n_contexts < 2:
            raise ValueError(f"{self.command.value} needs at least 2 contexts")
        return self


class ReportMeta(BaseModel):
    tool: str = "contextual_born"
    version: str
    command: Command
    seed: int
    tolerances: Dict[str, Any]


class Report(BaseModel):
    meta: ReportMeta
    inputs: RunConfig
    results: Dict[str, Any]


class ErrorResponse(BaseModel):
    error: str = Field(..., description="Error message")
    code: str = Field(..., description="Error code for programmatic handling")
    details: Optional[Dict[str, Any]] = Field(None, description="Additional error details")


class ObservableFile(BaseModel):
    """JSON observable: {"dim": N, "entries": [[[re, im], ...], ...]} in row-major order."""

    dim: int = Field(..., ge=2, le=1024)
    entries: List[List[ComplexValue]]

    @model_validator(mode="after")
    def validate_shape(self):
        if len(self.entries) != self.dim or any(len(row) != self.dim for row in self.entries):
            raise ValueError(f"entries must be a {self.dim}x{self.dim} matrix")
        return self


class ValidationErrorResponse(BaseModel):
    errors: Dict[str, str] = Field(..., description="Field validation errors")
    code: str = Field("VALIDATION_ERROR", description="Error code")

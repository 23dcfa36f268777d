from pydantic import BaseModel, ConfigDict, Field, field_validator


class Tolerances(BaseModel):
    """Numerical thresholds shared by every operation in the package."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    norm: float = Field(1e-12, description="Allowed deviation of a state's norm from 1")
    orthonormal: float = Field(1e-10, description="Allowed |<w_i|w_j> - delta_ij| inside a context")
    hermitian: float = Field(1e-12, description="Entrywise bound on |M - M^dagger| for a Hermitian operator")
    overlap_cutoff: float = Field(1e-12, description="Outcomes with |<w|psi>| at or below this are excluded")
    zero_vector: float = Field(1e-14, description="Norm at or below which a raw vector cannot be normalized")
    subalgebra: float = Field(1e-10, description="Largest off-diagonal element tolerated for a context-diagonal operator")
    real_part: float = Field(1e-12, description="Imaginary magnitude below which a weight counts as real")
    max_dim: int = Field(1024, description="Largest Hilbert-space dimension accepted", ge=2)

    @field_validator(
        "norm", "orthonormal", "hermitian", "overlap_cutoff", "zero_vector", "subalgebra", "real_part"
    )
    @classmethod
    def validate_positive(cls, v):
        if not v > 0:
            raise ValueError("Tolerances must be positive")
        return v


DEFAULT_TOLERANCES = Tolerances()

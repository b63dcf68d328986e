"""
Core domain models: enumerations shared across the analyzer, run configuration
and the report records returned by the service layer.
"""

import os
from enum import Enum
from typing import Dict, List, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator

SCHEMA_VERSION = 1

DEFAULT_GRID = [0, 1, 2, 3, 5, 10]


class CostMode(str, Enum):
    """Transformer mode: count ticks, or only propagate the post-expectation."""
    COST = "cost"
    VALUE = "value"


class StrategyKind(str, Enum):
    """Loop bounding strategies, in the default order of preference."""
    DECOMPOSE = "decompose"
    INVARIANT = "invariant"
    UNROLL = "unroll"


class Verdict(str, Enum):
    """Outcome of an upper-invariant check."""
    CERTIFIED = "certified"
    REFUTED = "refuted"
    UNKNOWN = "unknown"


class ReportStatus(str, Enum):
    """Overall status of an analysis report."""
    CERTIFIED = "certified"
    CERTIFIED_WITH_UNKNOWN_LOOPS = "certified-with-unknown-loops"
    FAILED = "failed"


class OutputFormat(str, Enum):
    TEXT = "text"
    JSON = "json"


# Environment variable names for RunConfig fields.
ENV_VARIABLES = {
    "horizon": "PWHILE_HORIZON",
    "max_degree": "PWHILE_MAX_DEGREE",
    "seed": "PWHILE_SEED",
    "unroll_fuel": "PWHILE_UNROLL_FUEL",
    "refute_samples": "PWHILE_REFUTE_SAMPLES",
    "output_format": "PWHILE_OUTPUT_FORMAT",
}


class RunConfig(BaseModel):
    """Settings for one analyzer run."""
    strategy_order: List[StrategyKind] = Field(
        default_factory=lambda: [StrategyKind.DECOMPOSE, StrategyKind.INVARIANT, StrategyKind.UNROLL],
        description="Loop strategies tried in order",
    )
    max_degree: int = Field(2, ge=1, le=2, description="Template degree cap")
    horizon: int = Field(200, gt=0, description="Oracle horizon in multidistribution steps")
    grid_values: List[int] = Field(default_factory=lambda: list(DEFAULT_GRID),
                                   description="Values each free variable takes on the cross-check grid")
    extra_points: List[Dict[str, int]] = Field(default_factory=list,
                                               description="Additional cross-check stores")
    seed: int = Field(0, description="Seed for every randomised step")
    output_format: OutputFormat = Field(OutputFormat.TEXT, description="Report rendering")
    unroll_fuel: int = Field(16, gt=0, description="Kleene iterations for the unroll strategy")
    refute_samples: int = Field(2000, gt=0, description="Random stores tried by numeric refutation")
    max_grid_stores: int = Field(64, gt=0, description="Cap on the Cartesian cross-check grid")
    max_configurations: int = Field(200000, gt=0, description="Oracle exploration budget")

    @field_validator("strategy_order")
    @classmethod
    def _non_empty_order(cls, value: List[StrategyKind]) -> List[StrategyKind]:
        if not value:
            raise ValueError("strategy_order must name at least one strategy")
        return value

    @field_validator("grid_values")
    @classmethod
    def _non_empty_grid(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("grid_values must not be empty")
        return value

    @classmethod
    def from_env(cls, **overrides) -> "RunConfig":
        """
        Build a configuration from ``PWHILE_*`` environment variables (``.env`` included).

        Args:
            **overrides: Explicit values; ``None`` entries are ignored

        Returns:
            RunConfig: Validated configuration
        """
        load_dotenv()
        values = {}
        for field_name, variable in ENV_VARIABLES.items():
            raw = os.getenv(variable)
            if raw is not None:
                values[field_name] = raw
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)


class DerivationSummary(BaseModel):
    """Serialisable view of one loop derivation."""
    id: str = Field(..., description="Derivation identifier, e.g. loop0#1")
    loop: str
    mode: CostMode
    strategy: str
    post: str = Field(..., description="Continuation expectation f")
    norms: List[str]
    body_cost: Optional[str] = None
    expected_norms: List[str] = Field(default_factory=list)
    coefficients: Dict[str, str] = Field(default_factory=dict)
    bound: str
    constraints: List[str] = Field(default_factory=list)
    certified: bool
    verified: bool
    depends_on: List[str] = Field(default_factory=list)
    notes: List[str] = Field(default_factory=list)


class CrossCheckRow(BaseModel):
    """Oracle lower bound against the inferred bound at one store."""
    store: Dict[str, int]
    oracle_lower: Optional[str] = None
    bound_value: str
    live_mass: Optional[str] = None
    exact: bool = False
    ok: Optional[bool] = Field(..., description="oracle <= bound; None when the oracle ran out of budget")
    note: Optional[str] = None


class AnalysisReport(BaseModel):
    schema_version: int = SCHEMA_VERSION
    program: str
    status: ReportStatus
    bound: Optional[str] = None
    loops: List[DerivationSummary] = Field(default_factory=list)
    cross_check: List[CrossCheckRow] = Field(default_factory=list)
    diagnostics: List[str] = Field(default_factory=list)


class SimulationStatistics(BaseModel):
    """Monte Carlo statistics plus the exhaustive oracle line."""
    schema_version: int = SCHEMA_VERSION
    program: str
    store: Dict[str, int]
    samples: int
    seed: int
    mean_cost: str = Field(..., description="Exact mean accumulated cost per run")
    mean_cost_decimal: float
    abort_rate: str
    timeout_rate: str
    oracle_lower: Optional[str] = None
    oracle_live_mass: Optional[str] = None
    oracle_note: Optional[str] = None


class InvariantCheck(BaseModel):
    loop: str
    invariant: str
    verdict: Verdict
    witness: Optional[Dict[str, int]] = None
    detail: Optional[str] = None


class CheckReport(BaseModel):
    """Per-loop upper-invariant verdicts for one program."""
    schema_version: int = SCHEMA_VERSION
    program: str
    checks: List[InvariantCheck] = Field(default_factory=list)
    all_certified: bool


class CorpusReport(BaseModel):
    schema_version: int = SCHEMA_VERSION
    reports: List[AnalysisReport] = Field(default_factory=list)

"""
API request and response models for the presentation layer.
"""

from typing import Dict, List, Optional

from pydantic import BaseModel, Field

from app.core.models import StrategyKind


class HealthResponse(BaseModel):
    """Health check response model."""
    status: str = Field(..., description="Service status")
    service: str = Field(..., description="Service name")
    version: str = Field(..., description="Service version")
    components: Optional[Dict[str, str]] = Field(None, description="Component status")


class AnalyzeRequest(BaseModel):
    """Request model for the analyze endpoint."""
    source: str = Field(..., description="Program text")
    name: str = Field("<input>", description="Program name recorded in the report")
    max_degree: Optional[int] = Field(None, ge=1, le=2, description="Template degree cap")
    strategy: Optional[StrategyKind] = Field(None, description="Restrict loop analysis to one strategy")
    horizon: Optional[int] = Field(None, gt=0, description="Oracle horizon")
    seed: Optional[int] = Field(None, description="Random seed")


class SimulateRequest(BaseModel):
    """Request model for the simulate endpoint."""
    source: str = Field(..., description="Program text")
    store: Dict[str, int] = Field(default_factory=dict, description="Initial store")
    samples: int = Field(1000, gt=0, le=1_000_000, description="Number of runs")
    seed: Optional[int] = Field(None, description="Random seed")
    horizon: Optional[int] = Field(None, gt=0, description="Oracle horizon")


class CheckRequest(BaseModel):
    """Request model for the check endpoint."""
    source: str = Field(..., description="Program text")
    invariants: str = Field("", description="Invariant file content: one 'label: expression' per line")


class SupportedFormatsResponse(BaseModel):
    """Response model for supported formats endpoint."""
    supported_formats: List[str] = Field(..., description="List of supported file extensions")


class ErrorResponse(BaseModel):
    """Error response model."""
    detail: str = Field(..., description="Error details")
    error_code: Optional[str] = Field(None, description="Error code")
    timestamp: Optional[str] = Field(None, description="Error timestamp")

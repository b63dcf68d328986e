"""
API endpoints for the expected-cost analysis service.
"""

import logging
from typing import Optional

from fastapi import APIRouter, File, HTTPException, UploadFile

from app.core.analysis_service import AnalysisService
from app.core.exceptions import AnalyzerError, InvariantFileError, ProgramSyntaxError
from app.core.models import AnalysisReport, CheckReport, CorpusReport, RunConfig, SimulationStatistics
from app.presentation.api_models import (
    AnalyzeRequest, CheckRequest, HealthResponse, SimulateRequest, SupportedFormatsResponse,
)

logger = logging.getLogger(__name__)

# Create router
router = APIRouter()

# Initialize service
analysis_service = AnalysisService()


def _raise_http(e: Exception, action: str):
    if isinstance(e, (ProgramSyntaxError, InvariantFileError, ValueError)):
        logger.error(f"Validation error while {action}: {str(e)}")
        raise HTTPException(status_code=400, detail=str(e))
    if isinstance(e, AnalyzerError):
        logger.error(f"Unsupported input while {action}: {str(e)}")
        raise HTTPException(status_code=422, detail=str(e))
    if isinstance(e, FileNotFoundError):
        raise HTTPException(status_code=404, detail=str(e))
    logger.error(f"Error while {action}: {str(e)}")
    raise HTTPException(status_code=500, detail=f"Error while {action}: {str(e)}")


def _config_for(request: AnalyzeRequest) -> RunConfig:
    updates = {
        "max_degree": request.max_degree,
        "horizon": request.horizon,
        "seed": request.seed,
        "strategy_order": [request.strategy] if request.strategy else None,
    }
    updates = {key: value for key, value in updates.items() if value is not None}
    return RunConfig(**{**analysis_service.config.model_dump(), **updates})


@router.get("/health", response_model=HealthResponse)
async def health_check():
    """Health check endpoint."""
    return HealthResponse(**analysis_service.get_health_status())


@router.post("/analyze", response_model=AnalysisReport)
def analyze(request: AnalyzeRequest):
    """
    Infer an expected-cost bound for program text.

    Args:
        request: Program text and optional run overrides

    Returns:
        AnalysisReport: Bound, derivations, oracle cross-check and status
    """
    try:
        return analysis_service.analyze_source(request.source, name=request.name, config=_config_for(request))
    except Exception as e:
        _raise_http(e, "analysing program")


@router.post("/analyze-file", response_model=AnalysisReport)
def analyze_file(file: UploadFile = File(...), max_degree: Optional[int] = None):
    """Analyse an uploaded ``.pw`` file."""
    try:
        config = analysis_service.config
        if max_degree is not None:
            config = RunConfig(**{**config.model_dump(), "max_degree": max_degree})
        return analysis_service.analyze_upload(file, config=config)
    except Exception as e:
        _raise_http(e, "analysing uploaded program")


@router.post("/simulate", response_model=SimulationStatistics)
def simulate(request: SimulateRequest):
    """Monte Carlo statistics and the exhaustive oracle line."""
    try:
        return analysis_service.simulate_source(
            request.source, request.store, samples=request.samples, seed=request.seed, horizon=request.horizon,
        )
    except Exception as e:
        _raise_http(e, "simulating program")


@router.post("/check", response_model=CheckReport)
def check(request: CheckRequest):
    """Check candidate upper invariants per loop label."""
    try:
        return analysis_service.check_source(request.source, request.invariants)
    except Exception as e:
        _raise_http(e, "checking invariants")


@router.get("/corpus", response_model=CorpusReport)
def corpus():
    """Analyse every bundled program."""
    try:
        return analysis_service.run_corpus()
    except Exception as e:
        _raise_http(e, "analysing corpus")


@router.get("/supported-formats", response_model=SupportedFormatsResponse)
async def get_supported_formats():
    return SupportedFormatsResponse(supported_formats=analysis_service.get_supported_formats())

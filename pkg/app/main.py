"""
FastAPI application for the expected-cost analysis service.

Run with ``start_server.py`` or ``uvicorn app.main:app``.
"""

import logging
from datetime import datetime

from dotenv import load_dotenv
from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse

from app.presentation.api_models import ErrorResponse
from app.presentation.endpoints import router

load_dotenv()

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

app = FastAPI(
    title="pWhile Expected-Cost Analyzer",
    description="Infer and cross-check upper bounds on the expected cost of probabilistic while programs.",
    version="1.0.0",
)
app.include_router(router)


def _error(status_code: int, detail: str, error_code: str) -> JSONResponse:
    return JSONResponse(
        status_code=status_code,
        content=ErrorResponse(
            detail=detail, error_code=error_code, timestamp=datetime.now().isoformat(),
        ).model_dump(),
    )


@app.exception_handler(HTTPException)
async def http_exception_handler(request, exc):
    return _error(exc.status_code, exc.detail, f"HTTP_{exc.status_code}")


@app.exception_handler(Exception)
async def general_exception_handler(request, exc):
    logger.error(f"Unhandled exception on {request.url.path}: {str(exc)}")
    return _error(500, "Internal server error", "INTERNAL_ERROR")

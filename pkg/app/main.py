"""
BroadcastBench
Main FastAPI Application

Exact-arithmetic simulation of online broadcast scheduling policies.
"""
import logging
import time
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from app.api.routes import router as api_router
from app.core.config import settings
from app.core.exceptions import (
    AdversaryError,
    ConfigurationError,
    InstanceError,
    OracleLimitError,
    PolicyMismatchError,
    ServiceError,
    VerificationError,
)
from app.utils.helpers import format_timestamp

# Configure logging
logging.basicConfig(
    level=getattr(logging, settings.LOG_LEVEL),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

STATUS_BY_ERROR = (
    (PolicyMismatchError, 422),
    (OracleLimitError, 413),
    (VerificationError, 409),
    (InstanceError, 400),
    (ConfigurationError, 400),
    (AdversaryError, 400),
)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Startup and shutdown events"""
    logger.info("=" * 60)
    logger.info(f"📡 {settings.APP_NAME} starting...")
    logger.info(f"📋 Version: {settings.APP_VERSION}")
    logger.info(f"🔧 Environment: {settings.ENVIRONMENT}")
    logger.info(f"🧮 Oracle cap: {settings.ORACLE_CAP} jobs")
    logger.info("=" * 60)

    yield

    logger.info(f"👋 Shutting down {settings.APP_NAME}...")


app = FastAPI(
    title=settings.APP_NAME,
    version=settings.APP_VERSION,
    description="""
    📡 **BroadcastBench**

    Deterministic workbench for online pull-based broadcast scheduling.

    **Key Features:**
    - FIFO, SSF, SSF-W, BWF, SRF-W and LF policies with speed augmentation
    - Exact rational metrics and transcripts
    - Exhaustive offline optimum for small instances
    - LF adversarial instance generator
    """,
    docs_url=None if settings.is_production else "/docs",
    redoc_url=None if settings.is_production else "/redoc",
    lifespan=lifespan
)


@app.exception_handler(ServiceError)
async def service_error_handler(request: Request, exc: ServiceError):
    """Map domain errors onto HTTP statuses"""
    status_code = 500
    for error_type, code in STATUS_BY_ERROR:
        if isinstance(exc, error_type):
            status_code = code
            break
    if status_code >= 500:
        logger.error(f"❌ {exc}")
    return JSONResponse(
        status_code=status_code,
        content={**exc.to_dict(), "timestamp": format_timestamp()}
    )


app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=False,
    allow_methods=["*"],
    allow_headers=["*"],
)


# Request timing middleware
@app.middleware("http")
async def add_process_time_header(request, call_next):
    """Add processing time to response headers"""
    start_time = time.time()
    response = await call_next(request)
    process_time = (time.time() - start_time) * 1000
    response.headers["X-Process-Time-Ms"] = str(int(process_time))
    return response


app.include_router(api_router)


@app.get("/")
async def root():
    """Root endpoint with API info"""
    prefix = settings.API_PREFIX
    return {
        "service": settings.APP_NAME,
        "version": settings.APP_VERSION,
        "status": "operational",
        "documentation": {
            "swagger": app.docs_url,
            "redoc": app.redoc_url
        },
        "endpoints": {
            "health": f"{prefix}/health",
            "simulate": f"{prefix}/simulate",
            "metrics": f"{prefix}/metrics",
            "oracle": f"{prefix}/oracle",
            "lf_adversary": f"{prefix}/adversary/lf"
        }
    }

from pathlib import Path
from typing import Any, Dict, List, Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .. import __version__
from ..errors import ConfigParseError, ConfigValidationError, VidNetSimError
from ..services.config import list_profiles, load_config, load_config_text, resolve_config_path
from ..services.experiments import ExperimentKind, ExperimentSpec, run_experiment
from ..services.report import emit_report, first_violation
from ..settings import get_settings
from ..video.quality import psnr_per_frame
from ..video.yuv import read_yuv


# Pydantic models for API requests/responses
class ValidateResponse(BaseModel):
    valid: bool
    seed: int
    nodes: Dict[str, int]
    error_model: str
    video: Dict[str, Any]


class RunRequest(BaseModel):
    config: str = "disaster_area"
    experiment: str
    seed: Optional[int] = None
    reps: Optional[int] = None
    jobs: Optional[int] = None
    out_dir: Optional[str] = None


class RunResponse(BaseModel):
    experiment: str
    runs: int
    out_dir: str
    files: List[str]
    qos_ok_runs: int
    first_violation: Optional[float] = None
    summary: str


class ScoreRequest(BaseModel):
    ref: str
    rec: str
    width: int
    height: int
    frames: Optional[int] = None


class ScoreResponse(BaseModel):
    frames: int
    mean_y_psnr_db: float
    per_frame_db: List[float]


# Initialize FastAPI app
app = FastAPI(
    title="vidnetsim API",
    description="Video streaming experiments over a simulated disaster-area network",
    version=__version__,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_methods=["*"],
    allow_headers=["*"],
)


def _raise_http(exc: Exception):
    if isinstance(exc, (ConfigParseError, ConfigValidationError)):
        raise HTTPException(status_code=422, detail=str(exc))
    if isinstance(exc, (VidNetSimError, ValueError)):
        raise HTTPException(status_code=400, detail=str(exc))
    raise HTTPException(status_code=500, detail=f"Simulation service error: {str(exc)}")


@app.get("/")
async def root():
    """Root endpoint with API information."""
    return {
        "message": "vidnetsim API",
        "version": __version__,
        "description": "Video streaming experiments over a simulated disaster-area network",
        "endpoints": {
            "profiles": "/profiles",
            "validate": "/config/validate",
            "run": "/experiments/run",
            "score": "/score",
            "health": "/health",
        },
    }


@app.get("/health")
async def health_check():
    """Health check endpoint."""
    settings = get_settings()
    profiles = list_profiles(settings.profile_dir)
    return {
        "status": "healthy" if profiles else "degraded",
        "profile_dir": str(settings.profile_dir),
        "profiles": len(profiles),
    }


@app.get("/profiles")
async def get_profiles():
    """Names of the checked-in scenario profiles."""
    return {"profiles": list_profiles(get_settings().profile_dir)}


@app.post("/config/validate", response_model=ValidateResponse)
async def validate_config(request: Request):
    """
    Validate a YAML configuration document.

    Args:
        request (Request): Body holds the configuration text

    Returns:
        ValidateResponse: Key facts of the validated configuration
    """
    text = (await request.body()).decode("utf-8", errors="replace")
    try:
        cfg = load_config_text(text)
    except Exception as e:
        _raise_http(e)
    return ValidateResponse(
        valid=True,
        seed=cfg.seed,
        nodes=cfg.nodes.model_dump(),
        error_model=cfg.error.model,
        video={"source": cfg.video.source, "width": cfg.video.width, "height": cfg.video.height,
               "frames": cfg.video.frames, "gop_size": cfg.video.gop_size, "qp": cfg.video.qp},
    )


@app.post("/experiments/run", response_model=RunResponse)
def run_experiment_endpoint(request: RunRequest):
    """
    Run a sweep experiment and write its report.

    Runs synchronously in the server's worker thread pool.
    """
    settings = get_settings()
    try:
        cfg = load_config(resolve_config_path(request.config, settings.profile_dir))
        if request.seed is not None:
            cfg = cfg.with_updates(seed=request.seed)
        spec = ExperimentSpec.from_config(ExperimentKind.from_cli(request.experiment), cfg, request.reps)
        rows = run_experiment(cfg, spec, jobs=request.jobs or settings.jobs)
        out = Path(request.out_dir) if request.out_dir else settings.out_dir
        files = emit_report(rows, out, qos_delay_ms=cfg.experiment.qos_delay_ms,
                            qos_jitter_ms=cfg.experiment.qos_jitter_ms)
    except Exception as e:
        _raise_http(e)

    knee = first_violation(rows, cfg.experiment.qos_delay_ms, cfg.experiment.qos_jitter_ms) \
        if spec.kind is ExperimentKind.NODE_SWEEP else None
    return RunResponse(
        experiment=spec.kind.value,
        runs=len(rows),
        out_dir=str(out),
        files=[path.name for path in files],
        qos_ok_runs=sum(row.qos_ok for row in rows),
        first_violation=knee,
        summary=(out / "summary.txt").read_text(encoding="utf-8"),
    )


@app.post("/score", response_model=ScoreResponse)
def score_endpoint(request: ScoreRequest):
    """Y-PSNR between two raw 4:2:0 files on the server's filesystem."""
    try:
        reference = read_yuv(request.ref, request.width, request.height, request.frames)
        reconstructed = read_yuv(request.rec, request.width, request.height, request.frames)
        count = min(len(reference), len(reconstructed))
        scores = psnr_per_frame(reference[:count], reconstructed[:count])
    except FileNotFoundError as e:
        raise HTTPException(status_code=404, detail=f"File not found: {e.filename}")
    except Exception as e:
        _raise_http(e)
    return ScoreResponse(frames=count, mean_y_psnr_db=sum(scores) / count, per_frame_db=scores)

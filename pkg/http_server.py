"""
HTTP Server for a stub scoring service
FastAPI server implementing the remote scorer wire format with selectable behaviors
"""

import logging
from typing import Dict, List, Optional

import numpy as np
import uvicorn
from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from core.wire_format import RemoteScoreRequest, RemoteScoreResponse, decode_image

logger = logging.getLogger(__name__)

BEHAVIORS: Dict[str, str] = {
    "prefer_first": "score 1 for the first option, 0 for the rest",
    "prefer_last": "score 1 for the last option, 0 for the rest",
    "largest_image": "score each option by its fraction of non-background pixels",
    "malformed": "reply without a scores array",
    "short": "reply with one score fewer than options",
    "fail": "reply with HTTP 500",
}
DEFAULT_BEHAVIOR = "largest_image"


class HealthResponse(BaseModel):
    """Health check response"""
    status: str
    default_behavior: str
    behaviors: Dict[str, str] = Field(..., description="Supported values of the behavior query parameter")


app = FastAPI(
    title="Stub Scoring API",
    description="Deterministic stand-in for a vision-language scoring service",
    version="1.0.0",
    docs_url="/docs",
    redoc_url="/redoc"
)
app.state.default_behavior = DEFAULT_BEHAVIOR


def foreground_fraction(payload: str) -> float:
    """Fraction of pixels that are not black in a base64 image"""
    pixels = np.asarray(decode_image(payload))
    return float(np.count_nonzero(pixels.any(axis=-1))) / float(pixels.shape[0] * pixels.shape[1])


def score_options(request: RemoteScoreRequest, behavior: str) -> List[float]:
    count = len(request.options)
    if behavior == "prefer_first":
        return [1.0] + [0.0] * (count - 1)
    if behavior == "prefer_last":
        return [0.0] * (count - 1) + [1.0]
    return [foreground_fraction(option.image) for option in request.options]


@app.get("/", response_model=HealthResponse)
async def health_check():
    """Health check endpoint"""
    return HealthResponse(status="healthy", default_behavior=app.state.default_behavior, behaviors=BEHAVIORS)


@app.post("/score")
async def score(request: RemoteScoreRequest, behavior: Optional[str] = Query(None)):
    """Score the options of one request"""
    behavior = behavior or app.state.default_behavior
    if behavior not in BEHAVIORS:
        raise HTTPException(
            status_code=400,
            detail=f"Unsupported behavior: {behavior}. Supported behaviors are: {', '.join(BEHAVIORS)}"
        )
    logger.info(f"{request.stage} with {len(request.options)} options, behavior {behavior}")

    if behavior == "fail":
        raise HTTPException(status_code=500, detail="Stub failure requested")
    if behavior == "malformed":
        return JSONResponse({"rationale": "no scores today"})

    try:
        scores = score_options(request, behavior)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))
    if behavior == "short":
        scores = scores[:-1]
    return RemoteScoreResponse(scores=scores, rationale=f"stub:{behavior}").model_dump()


def run_server(host: str = "0.0.0.0", port: int = 8090, debug: bool = False,
               behavior: str = DEFAULT_BEHAVIOR):
    """Run the HTTP server"""
    if behavior not in BEHAVIORS:
        raise ValueError(f"Unsupported behavior: {behavior}. Supported behaviors are: {', '.join(BEHAVIORS)}")
    app.state.default_behavior = behavior
    log_level = "debug" if debug else "info"

    logging.basicConfig(
        level=logging.DEBUG if debug else logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )

    print(f"🚀 Starting stub scoring server")
    print(f"📍 Host: {host}")
    print(f"🔌 Port: {port}")
    print(f"🎛️ Default behavior: {behavior}")
    print(f"📚 API Documentation: http://{host}:{port}/docs")
    print("=" * 60)

    uvicorn.run(app, host=host, port=port, log_level=log_level, access_log=debug)


if __name__ == "__main__":
    import argparse

    parser = argparse.ArgumentParser(description="Stub scoring HTTP server")
    parser.add_argument("--host", default="0.0.0.0", help="Host to bind to")
    parser.add_argument("--port", type=int, default=8090, help="Port to bind to")
    parser.add_argument("--behavior", default=DEFAULT_BEHAVIOR, choices=list(BEHAVIORS), help="Default behavior")
    parser.add_argument("--debug", action="store_true", help="Enable debug mode")

    args = parser.parse_args()

    run_server(host=args.host, port=args.port, debug=args.debug, behavior=args.behavior)

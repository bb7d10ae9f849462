"""
Wire format of the remote scorer: request/response models and the image
payloads (base64 PPM) exchanged with it.
"""

import base64
import io
from typing import List, Literal, Optional

import numpy as np
from PIL import Image, ImageDraw
from pydantic import BaseModel, Field, model_validator

from simworld.camera import Frame

Stage = Literal["select_image", "select_segment", "score_candidates"]

BACKGROUND = (0, 0, 0)
MARKER_COLOR = (255, 0, 0)
HIGHLIGHT_COLOR = (255, 255, 0)


class RemoteOption(BaseModel):
    """One option: a frame or segment (`index`) or a candidate (`marker`) with its image"""
    index: Optional[int] = Field(None, description="Frame index or segment id")
    marker: Optional[int] = Field(None, description="Candidate marker number")
    image: str = Field(..., description="Base64-encoded PPM image")

    @model_validator(mode="after")
    def _one_key(self):
        if (self.index is None) == (self.marker is None):
            raise ValueError("An option carries exactly one of 'index' or 'marker'")
        return self

    @property
    def number(self) -> int:
        return self.index if self.index is not None else self.marker


class RemoteScoreRequest(BaseModel):
    """Request body of POST /score"""
    task: str = Field(..., description="Task text", min_length=1)
    stage: Stage = Field(..., description="Decision stage")
    options: List[RemoteOption] = Field(..., description="Options to score", min_length=1)
    context_image: Optional[str] = Field(None, description="Unmarked image shown next to the options")


class RemoteScoreResponse(BaseModel):
    """Response body of POST /score"""
    scores: List[float] = Field(..., description="One score per option, higher is better")
    rationale: Optional[str] = Field(None, description="Free-text explanation")


def segment_color(segment_id: int):
    if segment_id == 0:
        return BACKGROUND
    return ((segment_id * 67) % 200 + 40, (segment_id * 151) % 200 + 40, (segment_id * 199) % 200 + 40)


def segmentation_image(frame: Frame) -> Image.Image:
    """Segment-coloured RGB rendering of a frame"""
    ids = frame.seg
    rgb = np.zeros(ids.shape + (3,), dtype=np.uint8)
    for segment_id in np.unique(ids):
        rgb[ids == segment_id] = segment_color(int(segment_id))
    return Image.fromarray(rgb)


def highlight_segment(frame: Frame, segment_id: int) -> Image.Image:
    """Frame rendering with one segment painted in the highlight colour"""
    rgb = np.array(segmentation_image(frame))
    rgb[frame.seg == segment_id] = HIGHLIGHT_COLOR
    return Image.fromarray(rgb)


def stamp_marker(image: Image.Image, marker: int, pixel, radius: int = 4) -> Image.Image:
    """Copy of `image` with a ringed marker number drawn at `pixel`"""
    stamped = image.copy()
    draw = ImageDraw.Draw(stamped)
    u, v = float(pixel[0]), float(pixel[1])
    draw.ellipse((u - radius, v - radius, u + radius, v + radius), outline=MARKER_COLOR)
    draw.text((u + radius + 1, v - radius), str(marker), fill=MARKER_COLOR)
    return stamped


def encode_image(image: Image.Image) -> str:
    buffer = io.BytesIO()
    image.convert("RGB").save(buffer, format="PPM")
    return base64.b64encode(buffer.getvalue()).decode("ascii")


def decode_image(payload: str) -> Image.Image:
    """
    Raises:
        ValueError: If the payload is not a base64 image
    """
    try:
        data = base64.b64decode(payload, validate=True)
        image = Image.open(io.BytesIO(data))
        image.load()
    except Exception as e:
        raise ValueError(f"Undecodable image payload: {e}")
    return image.convert("RGB")

"""HTTP editing service: sessions over the latent editing API.

JSON in/out; images travel as base64 PNG. Sessions expire after a TTL and
each one is guarded by a lock so concurrent edits serialize. The model
checkpoint comes from --model or the SSTE_CHECKPOINT environment variable.
"""

from __future__ import annotations

import base64
import hashlib
import io
import math
import os
import threading
import time
import uuid
from typing import Optional, Union

import numpy as np
import torch
from fastapi import FastAPI, HTTPException
from fastapi.encoders import jsonable_encoder
from fastapi.exceptions import RequestValidationError
from PIL import Image
from pydantic import BaseModel, ConfigDict, Field

from .data.assets import host_content_font
from .data.collate import collate, from_unit_tensor
from .data.render import render_content
from .editing import (CentroidStore, EditRequest, EditSession, apply_edit,
                      content_tensor, open_session)
from .errors import ConfigurationError, ContractViolation
from .model import EditingModel, load_model
from .records import SceneRecord

ENV_CHECKPOINT = "SSTE_CHECKPOINT"
DEFAULT_TTL_SECONDS = 30 * 60
MAX_UPLOAD_BYTES = 8 * 1024 * 1024  # per image, decoded


def png_to_array(data_b64: str) -> np.ndarray:
    try:
        raw = base64.b64decode(data_b64, validate=True)
        img = Image.open(io.BytesIO(raw))
        return np.asarray(img.convert("RGB"))
    except Exception as e:
        raise ContractViolation(f"bad base64 PNG payload: {e}") from None


def array_to_png(arr: np.ndarray) -> str:
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def codes_digest(session: EditSession) -> str:
    return hashlib.sha256(
        session.codes.stack.detach().cpu().contiguous().numpy().tobytes()).hexdigest()


class CreateSessionBody(BaseModel):
    scene_png: str
    mask_png: str
    bbox: list[int] = Field(min_length=4, max_length=4)
    text: str


class FacetBlend(BaseModel):
    """Interpolation between two centroid labels: gamma 0 -> from, 1 -> to."""

    model_config = ConfigDict(populate_by_name=True)

    from_label: str = Field(alias="from")
    to_label: str = Field(alias="to")
    gamma: float


class ColorMix(BaseModel):
    # (gamma0, gamma1, gamma2) over the red/green/blue centroids
    gammas: list[float] = Field(min_length=3, max_length=3)


class EditBody(BaseModel):
    """EditDirective on the wire; an empty body is the identity edit."""

    content: Optional[str] = None
    rotation: Optional[FacetBlend] = None
    font: Optional[FacetBlend] = None
    color: Optional[Union[FacetBlend, ColorMix]] = None


class _Slot:
    def __init__(self, session: EditSession, ttl: float):
        self.session = session
        self.lock = threading.Lock()
        self.ttl = ttl
        self.expires = time.monotonic() + ttl
        self.created = time.time()

    def touch(self) -> None:
        self.expires = time.monotonic() + self.ttl


def create_app(model: Optional[EditingModel] = None, model_path: Optional[str] = None,
               centroids_path: Optional[str] = None, font_path: Optional[str] = None,
               ttl_seconds: float = DEFAULT_TTL_SECONDS) -> FastAPI:
    if model is None:
        model_path = model_path or os.environ.get(ENV_CHECKPOINT)
        if not model_path:
            raise ConfigurationError(
                f"no model: pass a checkpoint or set {ENV_CHECKPOINT}")
        model = load_model(model_path)
    model.eval()
    centroids = CentroidStore.load(centroids_path) if centroids_path else CentroidStore()
    font = font_path or host_content_font()

    app = FastAPI(title="scene text editing service")
    slots: dict[str, _Slot] = {}
    registry_lock = threading.Lock()

    def _purge() -> None:
        now = time.monotonic()
        with registry_lock:
            for sid in [s for s, slot in slots.items() if slot.expires < now]:
                del slots[sid]

    def _get(sid: str) -> _Slot:
        _purge()
        with registry_lock:
            slot = slots.get(sid)
        if slot is None:
            raise HTTPException(status_code=404, detail="no such session")
        return slot

    @app.exception_handler(ContractViolation)
    async def _contract(request, exc):  # noqa: ANN001
        from fastapi.responses import JSONResponse

        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def _malformed(request, exc):  # noqa: ANN001
        from fastapi.responses import JSONResponse

        # contract says malformed directives are a 400, not FastAPI's 422
        return JSONResponse(status_code=400,
                            content={"detail": jsonable_encoder(exc.errors())})

    def _catalog() -> dict:
        return {f: centroids.labels(f) for f in centroids.centroids}

    @app.get("/health")
    def health() -> dict:
        _purge()
        return {"status": "ok", "sessions": len(slots), "facets": _catalog()}

    @app.get("/attributes")
    @app.get("/centroids")
    def list_attributes() -> dict:
        return {"facets": _catalog()}

    def _session_payload(sid: str, slot: _Slot, image: torch.Tensor) -> dict:
        return {"session_id": sid, "text": slot.session.text,
                "codes_digest": codes_digest(slot.session),
                "image_png": array_to_png(from_unit_tensor(image[0]))}

    @app.post("/sessions")
    def create_session(body: CreateSessionBody) -> dict:
        for payload in (body.scene_png, body.mask_png):
            if len(payload) * 3 // 4 > MAX_UPLOAD_BYTES:
                raise HTTPException(status_code=413, detail="image upload too large")
        scene = png_to_array(body.scene_png)
        mask_img = png_to_array(body.mask_png)
        mask = (mask_img[..., 0] > 127).astype(np.uint8)
        x1, y1, x2, y2 = body.bbox
        if not (0 <= x1 < x2 <= scene.shape[1] and 0 <= y1 < y2 <= scene.shape[0]):
            raise ContractViolation(f"bbox {body.bbox} outside scene {scene.shape[:2]}")
        record = SceneRecord(
            id=str(uuid.uuid4()), scene=scene, mask=mask,
            style_crop=scene[y1:y2, x1:x2].copy(), bbox=(x1, y1, x2, y2),
            text=body.text, target_text=body.text, source_tag="service")
        record.validate()
        pair = (render_content(body.text, font, "service"),) * 2
        batch = collate([record], [pair])
        w = batch.w

        def render_text(text: str) -> torch.Tensor:
            return content_tensor(render_content(text, font, "service").pixels, w)

        session = open_session(model, batch.scene, batch.mask, batch.style,
                               batch.bboxes, body.text, render_text)
        sid = uuid.uuid4().hex
        slot = _Slot(session, ttl_seconds)
        with registry_lock:
            slots[sid] = slot
        return {**_session_payload(sid, slot, session.image()),
                "attributes": _catalog()}

    @app.get("/sessions/{sid}")
    def get_session(sid: str) -> dict:
        slot = _get(sid)
        with slot.lock:
            slot.touch()
            return _session_payload(sid, slot, slot.session.image())

    def _blend(facet: str, d: FacetBlend) -> torch.Tensor:
        if not math.isfinite(d.gamma) or not 0.0 <= d.gamma <= 1.0:
            raise ContractViolation(f"{facet} gamma {d.gamma} outside [0, 1]")
        c_from = centroids.get(facet, d.from_label)
        c_to = centroids.get(facet, d.to_label)
        return (1.0 - d.gamma) * c_from + d.gamma * c_to

    def _mix(m: ColorMix) -> torch.Tensor:
        for g in m.gammas:
            if not math.isfinite(g) or not -1.0 <= g <= 1.0:
                raise ContractViolation(f"color mix gamma {g} outside [-1, 1]")
        red, green, blue = (centroids.get("color", label)
                            for label in ("red", "green", "blue"))
        g0, g1, g2 = m.gammas
        return 0.5 * (g0 * red + g1 * green + g2 * blue)  # mix_colors closed form

    @app.post("/sessions/{sid}/edit")
    def edit_session(sid: str, body: EditBody) -> dict:
        slot = _get(sid)
        with slot.lock:
            slot.touch()
            facets = {}
            if body.rotation is not None:
                facets["rotation"] = _blend("rotation", body.rotation)
            if body.font is not None:
                facets["font"] = _blend("font", body.font)
            if isinstance(body.color, FacetBlend):
                facets["color"] = _blend("color", body.color)
            elif isinstance(body.color, ColorMix):
                facets["color"] = _mix(body.color)
            request = EditRequest(text=body.content, facets=facets, gamma=1.0)
            slot.session, image = apply_edit(slot.session, request)
            return _session_payload(sid, slot, image)

    @app.delete("/sessions/{sid}")
    def delete_session(sid: str) -> dict:
        _get(sid)
        with registry_lock:
            slots.pop(sid, None)
        return {"deleted": sid}

    return app

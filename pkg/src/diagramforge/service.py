"""HTTP facade over the pipeline: sessions, workflows, artifact serving.

Version indices are 1-based in API payloads; errors use a {code, message,
detail} JSON envelope.
"""
from __future__ import annotations

import os
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, File, Request, UploadFile
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import __version__
from .config import AppConfig, load_config
from .errors import (
    CheckExhausted,
    DiagramForgeError,
    ImageDecodeError,
    PayloadTooLarge,
    SessionNotFound,
)
from .pipeline import Pipeline, SessionHandle
from .types import DiagramVersion, LanguageHint, TaskKind, UserQuery

MAX_UPLOAD_BYTES = 16 * 1024 * 1024

_STATUS_BY_CODE = {
    "not_found": 404,
    "busy": 409,
    "no_original": 422,
    "image_decode_error": 400,
    "unsupported_modality": 422,
    "payload_too_large": 413,
    "storage_failure": 500,
    "sandbox_unavailable": 503,
    "model_unavailable": 502,
    "transcript_exhausted": 502,
    "vision_model_unavailable": 502,
}


class GenerateRequest(BaseModel):
    instruction: str = Field(min_length=1)
    language_hint: str = "auto"


class EditRequest(BaseModel):
    instruction: str = Field(min_length=1)


class VersionSummary(BaseModel):
    index: int
    compile_ok: bool
    rounds_used: int
    verify_verdict: str
    missing_elements: list[str]
    error_excerpts: list[list[str]]
    image: Optional[str]
    code_digest: str
    code: str
    language: str
    created_from: Optional[int]


class SessionResponse(BaseModel):
    session_id: str
    status: str
    versions: list[VersionSummary]


class CodeResponse(BaseModel):
    source: str
    language: str
    digest: str
    compile_ok: bool
    image: Optional[str]


def _version_summary(version: DiagramVersion, index0: int) -> VersionSummary:
    return VersionSummary(
        index=index0 + 1,
        compile_ok=version.check.compile_ok,
        rounds_used=version.check.rounds_used,
        verify_verdict=version.check.verify_verdict.value,
        missing_elements=version.check.missing_elements,
        error_excerpts=version.check.error_excerpts,
        image=version.image,
        code_digest=version.code.digest,
        code=version.code.source,
        language=version.code.language.value,
        created_from=None if version.created_from is None else version.created_from + 1,
    )


def _session_response(handle: SessionHandle) -> SessionResponse:
    return SessionResponse(
        session_id=handle.state.session_id,
        status=handle.state.status.value,
        versions=[
            _version_summary(v, i) for i, v in enumerate(handle.state.versions)
        ],
    )


def _error_response(code: str, message: str, detail: Optional[dict] = None,
                    status: Optional[int] = None) -> JSONResponse:
    return JSONResponse(
        status_code=status or _STATUS_BY_CODE.get(code, 500),
        content={"code": code, "message": message, "detail": detail or {}},
    )


def create_app(config: Optional[AppConfig] = None,
               data_dir: Optional[Path | str] = None) -> FastAPI:
    if config is None:
        config_path = os.environ.get("DIAGRAMFORGE_CONFIG")
        config = load_config(config_path) if config_path else AppConfig()
    if data_dir is None:
        data_dir = os.environ.get("DIAGRAMFORGE_DATA_DIR", "./diagramforge-data")
    pipeline = Pipeline(config, data_dir)

    app = FastAPI(title="diagramforge", version=__version__)
    app.state.pipeline = pipeline

    @app.exception_handler(DiagramForgeError)
    async def on_domain_error(request: Request, exc: DiagramForgeError):
        return _error_response(exc.code, str(exc))

    @app.get("/v1/health")
    def health() -> dict:
        tc = pipeline.sandbox.toolchain
        return {
            "status": "ok",
            "version": __version__,
            "toolchain": "system" if (tc.latex_cmd or tc.dot_cmd) else "bundled",
        }

    @app.post("/v1/sessions", status_code=201)
    def create_session() -> dict:
        handle = pipeline.sessions.create()
        return {"session_id": handle.state.session_id}

    @app.get("/v1/sessions")
    def list_sessions() -> dict:
        return {"sessions": pipeline.sessions.list_ids()}

    @app.get("/v1/sessions/{session_id}")
    def get_session(session_id: str) -> SessionResponse:
        return _session_response(pipeline.sessions.get(session_id))

    @app.post("/v1/sessions/{session_id}/generate")
    def generate(session_id: str, req: GenerateRequest) -> SessionResponse:
        handle = pipeline.sessions.get(session_id)
        query = UserQuery(
            instruction=req.instruction,
            language_hint=LanguageHint(req.language_hint),
            task_hint=TaskKind.GENERATION,
        )

        def work():
            try:
                pipeline.run_generation(query, handle)
            except CheckExhausted:
                pass  # the failed version is already recorded for the client
        pipeline.run_locked(handle, work)
        return _session_response(handle)

    @app.post("/v1/sessions/{session_id}/edit")
    def edit(session_id: str, req: EditRequest) -> SessionResponse:
        handle = pipeline.sessions.get(session_id)
        query = UserQuery(instruction=req.instruction, task_hint=TaskKind.EDITING)

        def work():
            try:
                pipeline.run_editing(query, handle)
            except CheckExhausted:
                pass
        pipeline.run_locked(handle, work)
        return _session_response(handle)

    @app.post("/v1/sessions/{session_id}/code")
    async def code(session_id: str, image: UploadFile = File(...),
                   language_hint: str = "auto") -> CodeResponse:
        handle = pipeline.sessions.get(session_id)
        payload = await image.read()
        if len(payload) > MAX_UPLOAD_BYTES:
            raise PayloadTooLarge(f"upload exceeds {MAX_UPLOAD_BYTES} bytes")
        if not payload:
            raise ImageDecodeError("empty upload")
        query = UserQuery(
            instruction="", image=payload,
            language_hint=LanguageHint(language_hint),
            task_hint=TaskKind.CODING,
        )

        def work():
            try:
                pipeline.run_coding(query, handle)
            except CheckExhausted:
                pass
        pipeline.run_locked(handle, work)
        latest = handle.latest_version()
        return CodeResponse(
            source=latest.code.source,
            language=latest.code.language.value,
            digest=latest.code.digest,
            compile_ok=latest.check.compile_ok,
            image=latest.image,
        )

    @app.get("/v1/artifacts/{digest}")
    def artifact(digest: str) -> Response:
        data = pipeline.sessions.store.get(digest)
        if data is None:
            raise SessionNotFound(f"artifact {digest} not found")
        media = "image/png" if data[:8] == b"\x89PNG\r\n\x1a\n" else "application/octet-stream"
        return Response(content=data, media_type=media)

    static_dir = Path(__file__).parent / "static"
    if (static_dir / "index.html").exists():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


__all__ = ["create_app", "MAX_UPLOAD_BYTES"]

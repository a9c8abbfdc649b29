"""Session state machine and the three top-level workflows.

Every agent payload is content-addressed into the artifact store and cited
by an append-only event log, so a session can be replayed byte-exactly and
the editing stage order is assertable from the log alone.
"""
from __future__ import annotations

import re
import threading
import uuid
from pathlib import Path
from typing import Callable, Optional

from .artifacts import ArtifactStore, SessionLog
from .check_agent import check_loop
from .code_agent import generate_code, modify_code
from .config import AppConfig
from .errors import (
    AmbiguousQuery,
    CheckExhausted,
    ExpansionRejected,
    NoOriginal,
    SessionBusy,
    SessionNotFound,
)
from .gateway import ChatTurn, Gateway, ModelProfile
from .prompting import render
from .sandbox import Sandbox, detect_toolchain
from .types import (
    AgentName,
    CheckReport,
    CodeOrigin,
    DiagramCode,
    DiagramVersion,
    EventKind,
    Language,
    LanguageHint,
    SessionState,
    SessionStatus,
    TaskKind,
    UserQuery,
    VerifyVerdict,
    WorkflowEvent,
)

# --- routing ---------------------------------------------------------------

def has_edit_keyword(instruction: str, keywords: list[str]) -> bool:
    words = set(re.findall(r"[a-z]+", instruction.lower()))
    return any(kw in words for kw in keywords)


def classify_task(
    query: UserQuery,
    edit_keywords: list[str],
    model: Optional[ModelProfile] = None,
    gateway: Optional[Gateway] = None,
    strict: bool = False,
) -> TaskKind:
    """Deterministic structural router with an optional model override."""
    query.validate()
    if query.task_hint is not None:
        return query.task_hint
    if query.image is not None and has_edit_keyword(query.instruction, edit_keywords):
        structural = TaskKind.EDITING
    elif query.image is not None:
        structural = TaskKind.CODING
    else:
        structural = TaskKind.GENERATION
    if model is not None and gateway is not None:
        prompt = render(
            "plan_classify",
            instruction=query.instruction,
            has_image="yes" if query.image is not None else "no",
        )
        reply = gateway.complete(model, [ChatTurn("user", prompt)]).strip().upper()
        for kind in TaskKind:
            if kind.name in reply:
                if kind is not structural and strict:
                    raise AmbiguousQuery(
                        f"router says {structural.label}, model says {kind.label}"
                    )
                # structural result wins outside strict mode
                break
    return structural


# --- query expansion -------------------------------------------------------

_ENUM_MARKER_RE = re.compile(r":\s*\S|^\s*[-*]\s+\S", re.MULTILINE)
_QUOTED_RE = re.compile(r"\"([^\"]+)\"|'([^']+)'")
_ENTITY_RE = re.compile(r"\b[A-Z][A-Za-z0-9_]*\b|\b\w*\d\w*\b")


def is_complete_query(x_ins: str, min_tokens: int = 120) -> bool:
    has_marker = bool(_ENUM_MARKER_RE.search(x_ins)) or len(_QUOTED_RE.findall(x_ins)) >= 2
    return has_marker and len(x_ins.split()) >= min_tokens


def named_entities(text: str) -> set[str]:
    entities = {m.group(1) or m.group(2) for m in _QUOTED_RE.finditer(text)}
    entities |= set(_ENTITY_RE.findall(text))
    return {e for e in entities if e}


def expand_query(
    x_ins: str,
    model: ModelProfile,
    gateway: Gateway,
    min_tokens: int = 120,
) -> str:
    if not x_ins.strip():
        raise ValueError("instruction must be non-empty")
    if is_complete_query(x_ins, min_tokens):
        return x_ins
    reply = gateway.complete(
        model, [ChatTurn("user", render("expand_query", instruction=x_ins))]
    ).strip()
    missing = [e for e in named_entities(x_ins) if e not in reply]
    if missing:
        raise ExpansionRejected(f"expansion dropped named entities: {missing}")
    return reply


# --- session persistence ---------------------------------------------------

class SessionHandle:
    """Single-writer session with a durable log and replayable versions."""

    def __init__(self, session_id: str, store: ArtifactStore, log: SessionLog):
        self.state = SessionState(session_id)
        self.store = store
        self.log = log
        self.lock = threading.Lock()
        self._clock = 0

    def next_at(self) -> int:
        self._clock += 1
        return self._clock

    def record_event(self, agent: AgentName, kind: EventKind, payload: str) -> WorkflowEvent:
        digest = self.store.put_text(payload)
        event = WorkflowEvent(agent, kind, digest, self.next_at())
        self.state.events.append(event)
        self.log.append({"type": "event", **event.to_dict()})
        return event

    def record_version(self, version: DiagramVersion) -> int:
        self.store.put_text(version.code.source)
        self.state.versions.append(version)
        self.log.append({
            "type": "version",
            "code_digest": version.code.digest,
            "language": version.code.language.value,
            "origin": version.code.origin.value,
            "image": version.image,
            "check": version.check.to_dict(),
            "created_from": version.created_from,
        })
        return len(self.state.versions) - 1

    def set_status(self, status: SessionStatus, persist: bool = True) -> None:
        self.state.status = status
        if persist:
            self.log.append({"type": "status", "value": status.value})

    def latest_version(self) -> Optional[DiagramVersion]:
        return self.state.versions[-1] if self.state.versions else None


class SessionManager:
    def __init__(self, data_dir: Path | str):
        self.data_dir = Path(data_dir)
        self.store = ArtifactStore(self.data_dir / "store")
        self._sessions: dict[str, SessionHandle] = {}
        self._lock = threading.Lock()

    def _session_dir(self, session_id: str) -> Path:
        return self.data_dir / "sessions" / session_id

    def create(self) -> SessionHandle:
        session_id = uuid.uuid4().hex[:16]
        log = SessionLog(self._session_dir(session_id) / "log.jsonl")
        handle = SessionHandle(session_id, self.store, log)
        handle.set_status(SessionStatus.IDLE)
        with self._lock:
            self._sessions[session_id] = handle
        return handle

    def get(self, session_id: str) -> SessionHandle:
        with self._lock:
            handle = self._sessions.get(session_id)
        if handle is None:
            handle = self._load(session_id)
            with self._lock:
                self._sessions.setdefault(session_id, handle)
        return handle

    def list_ids(self) -> list[str]:
        root = self.data_dir / "sessions"
        on_disk = sorted(p.name for p in root.iterdir()) if root.exists() else []
        return on_disk

    def _load(self, session_id: str) -> SessionHandle:
        path = self._session_dir(session_id) / "log.jsonl"
        if not path.exists():
            raise SessionNotFound(f"session {session_id} not found")
        log = SessionLog(path)
        handle = SessionHandle(session_id, self.store, log)
        replay_session(handle)
        return handle


def replay_session(handle: SessionHandle) -> None:
    """Rebuilds in-memory state from the append-only log."""
    status = SessionStatus.IDLE
    for rec in handle.log.read():
        if rec["type"] == "event":
            event = WorkflowEvent.from_dict(rec)
            handle.state.events.append(event)
            handle._clock = max(handle._clock, event.at)
        elif rec["type"] == "version":
            source = handle.store.get_text(rec["code_digest"])
            if source is None:
                raise SessionNotFound(
                    f"artifact {rec['code_digest']} missing for session replay"
                )
            check = CheckReport(
                compile_ok=rec["check"]["compile_ok"],
                rounds_used=rec["check"]["rounds_used"],
                error_excerpts=rec["check"]["error_excerpts"],
                verify_verdict=VerifyVerdict(rec["check"]["verify_verdict"]),
                missing_elements=rec["check"]["missing_elements"],
            )
            handle.state.versions.append(DiagramVersion(
                code=DiagramCode(source, Language(rec["language"]),
                                 CodeOrigin(rec["origin"])),
                check=check,
                image=rec["image"],
                created_from=rec["created_from"],
            ))
        elif rec["type"] == "status":
            status = SessionStatus(rec["value"])
    # a log that ends mid-workflow means the process died: surface as failed
    handle.set_status(
        SessionStatus.FAILED if status is SessionStatus.RUNNING else status,
        persist=False,
    )


# --- workflows ---------------------------------------------------------------

class Pipeline:
    def __init__(self, config: AppConfig, data_dir: Path | str,
                 gateway: Optional[Gateway] = None):
        self.config = config
        self.sessions = SessionManager(data_dir)
        self.gateway = gateway or Gateway()
        toolchain = detect_toolchain(config.sandbox.toolchain)
        self.sandbox = Sandbox(
            self.sessions.store,
            toolchain=toolchain,
            dpi=config.sandbox.dpi,
            timeout_s=config.sandbox.timeout_s,
            max_workers=config.sandbox.max_workers,
        )

    # role profiles, with harness ablations applied by callers via config
    def _judge(self) -> Optional[ModelProfile]:
        if not self.config.harness.judge_enabled:
            return None
        return self.config.profile("judge")

    def classify(self, query: UserQuery) -> TaskKind:
        return classify_task(query, self.config.pipeline.edit_keywords,
                             strict=self.config.pipeline.strict_routing)

    def _observer(self, handle: SessionHandle) -> Callable[[str, str, str], None]:
        def observe(agent: str, kind: str, payload: str) -> None:
            handle.record_event(AgentName(agent), EventKind(kind), payload)
        return observe

    def _finish_version(self, handle: SessionHandle, result,
                        created_from: Optional[int]) -> DiagramVersion:
        version = DiagramVersion(
            code=result.code,
            check=result.report,
            image=result.outcome.artifact if result.outcome else None,
            created_from=created_from,
        )
        handle.record_version(version)
        return version

    def run_generation(self, query: UserQuery, handle: SessionHandle) -> DiagramVersion:
        kind = self.classify(query)
        if kind is not TaskKind.GENERATION:
            raise ValueError(f"query routed to {kind.label}, not generation")
        cfg = self.config
        handle.set_status(SessionStatus.RUNNING)
        try:
            observe = self._observer(handle)
            plan_model = cfg.profile("plan")
            observe("plan", "request", query.instruction)
            if plan_model is not None:
                x_comp = expand_query(query.instruction, plan_model, self.gateway,
                                      cfg.pipeline.complete_min_tokens)
            else:
                x_comp = query.instruction
            observe("plan", "response", x_comp)

            code_model = cfg.require_profile("code")

            def producer(feedback: str) -> DiagramCode:
                observe("code", "request",
                        x_comp + ("\n--feedback--\n" + feedback if feedback else ""))
                code = generate_code(x_comp, query.language_hint, code_model,
                                     self.gateway, feedback=feedback)
                observe("code", "response", code.source)
                return code

            initial = producer("")
            result = check_loop(
                producer, initial, self.sandbox,
                max_rounds=cfg.harness.effective_max_rounds,
                judge=self._judge(), gateway=self.gateway,
                verify_context=x_comp,
                feedback_enabled=cfg.harness.compiler_loop_enabled,
                observer=observe,
            )
            version = self._finish_version(handle, result, created_from=None)
            handle.set_status(SessionStatus.IDLE)
            if not result.report.compile_ok:
                raise CheckExhausted(
                    f"no compilable code after {result.report.rounds_used} rounds",
                    report=result.report, version=version,
                )
            return version
        except CheckExhausted:
            raise
        except Exception:
            handle.set_status(SessionStatus.FAILED)
            raise

    def run_coding(self, query: UserQuery, handle: SessionHandle) -> DiagramCode:
        from .vision_agent import VisionRequest, diagram_to_code

        if query.image is None:
            raise ValueError("coding task requires an image")
        cfg = self.config
        handle.set_status(SessionStatus.RUNNING)
        try:
            observe = self._observer(handle)
            observe("plan", "request", query.instruction or "<image only>")
            observe("plan", "response", "route=coding")
            vision_model = cfg.require_profile("vision")

            def producer(feedback: str) -> DiagramCode:
                observe("diagram_to_code", "request", feedback or "<image>")
                code = diagram_to_code(
                    VisionRequest(query.image, query.language_hint,
                                  style_notes=feedback or None),
                    vision_model, self.gateway,
                )
                observe("diagram_to_code", "response", code.source)
                return code

            initial = producer("")
            result = check_loop(
                producer, initial, self.sandbox,
                max_rounds=cfg.harness.effective_max_rounds,
                judge=self._judge(), gateway=self.gateway,
                verify_context=query.instruction,
                feedback_enabled=cfg.harness.compiler_loop_enabled,
                observer=observe,
            )
            self._finish_version(handle, result, created_from=None)
            handle.set_status(SessionStatus.IDLE)
            if not result.report.compile_ok:
                raise CheckExhausted(
                    f"no compilable code after {result.report.rounds_used} rounds",
                    report=result.report,
                )
            return result.code
        except CheckExhausted:
            raise
        except Exception:
            handle.set_status(SessionStatus.FAILED)
            raise

    def run_editing(self, query: UserQuery, handle: SessionHandle) -> DiagramVersion:
        from .vision_agent import VisionRequest, diagram_to_code

        cfg = self.config
        kind = classify_task(query, cfg.pipeline.edit_keywords)
        if kind is not TaskKind.EDITING and query.task_hint is None:
            # editing may be requested explicitly on sessions without images
            kind = TaskKind.EDITING
        handle.set_status(SessionStatus.RUNNING)
        try:
            observe = self._observer(handle)
            observe("plan", "request", query.instruction)
            observe("plan", "response", "route=editing")

            created_from: Optional[int] = None
            if query.image is not None:
                # explicit user image wins over stored session state
                vision_model = cfg.require_profile("vision")
                observe("diagram_to_code", "request", "<image>")
                c_ori = diagram_to_code(
                    VisionRequest(query.image, query.language_hint),
                    vision_model, self.gateway,
                )
                observe("diagram_to_code", "response", c_ori.source)
            else:
                latest = handle.latest_version()
                if latest is None:
                    handle.set_status(SessionStatus.IDLE)
                    raise NoOriginal("no image supplied and session has no versions")
                c_ori = latest.code
                created_from = len(handle.state.versions) - 1

            code_model = cfg.require_profile("code")

            def producer(feedback: str) -> DiagramCode:
                observe("code", "request",
                        query.instruction + ("\n--feedback--\n" + feedback
                                             if feedback else ""))
                result = modify_code(c_ori, query.instruction, code_model,
                                     self.gateway, feedback=feedback)
                observe("code", "response", result.code.source)
                return result.code

            initial = producer("")
            result = check_loop(
                producer, initial, self.sandbox,
                max_rounds=cfg.harness.effective_max_rounds,
                judge=self._judge(), gateway=self.gateway,
                verify_context=query.instruction,
                feedback_enabled=cfg.harness.compiler_loop_enabled,
                observer=observe,
            )
            version = self._finish_version(handle, result, created_from=created_from)
            handle.set_status(SessionStatus.IDLE)
            if not result.report.compile_ok:
                raise CheckExhausted(
                    f"no compilable code after {result.report.rounds_used} rounds",
                    report=result.report, version=version,
                )
            return version
        except (CheckExhausted, NoOriginal):
            raise
        except Exception:
            handle.set_status(SessionStatus.FAILED)
            raise

    def run_locked(self, handle: SessionHandle, fn: Callable):
        """Single-writer guard: concurrent workflows on one session are refused."""
        if not handle.lock.acquire(blocking=False):
            raise SessionBusy(f"session {handle.state.session_id} is busy")
        try:
            return fn()
        finally:
            handle.lock.release()

"""Core domain types shared across the pipeline."""
from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field
from typing import Optional


def digest_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def digest_text(text: str) -> str:
    return digest_bytes(text.encode("utf-8"))


class TaskKind(enum.IntEnum):
    # ordering is the deterministic report grouping order
    GENERATION = 0
    CODING = 1
    EDITING = 2

    @classmethod
    def parse(cls, name: str) -> "TaskKind":
        return cls[name.strip().upper()]

    @property
    def label(self) -> str:
        return self.name.lower()


class Language(str, enum.Enum):
    LATEX = "latex"
    DOT = "dot"


class LanguageHint(str, enum.Enum):
    LATEX = "latex"
    DOT = "dot"
    AUTO = "auto"


class CodeOrigin(str, enum.Enum):
    MODEL = "model"
    DATASET = "dataset"
    USER = "user"


@dataclass(frozen=True)
class DiagramCode:
    source: str
    language: Language
    origin: CodeOrigin = CodeOrigin.MODEL
    digest: str = ""

    def __post_init__(self):
        if not self.source:
            raise ValueError("DiagramCode.source must be non-empty")
        expected = digest_text(self.source)
        if self.digest and self.digest != expected:
            raise ValueError("DiagramCode.digest does not match source")
        object.__setattr__(self, "digest", expected)


@dataclass
class UserQuery:
    instruction: str = ""
    image: Optional[bytes] = None
    language_hint: LanguageHint = LanguageHint.AUTO
    task_hint: Optional[TaskKind] = None

    def validate(self) -> None:
        if not self.instruction.strip() and self.image is None:
            raise ValueError("query needs an instruction or an image")


class VerifyVerdict(str, enum.Enum):
    COMPLETE = "complete"
    INCOMPLETE = "incomplete"
    SKIPPED = "skipped"


class CompileStatus(str, enum.Enum):
    OK = "ok"
    COMPILE_ERROR = "compile_error"
    TIMEOUT = "timeout"
    TOOLCHAIN_MISSING = "toolchain_missing"


@dataclass
class CompileOutcome:
    status: CompileStatus
    log: str = ""
    artifact: Optional[str] = None  # digest of the produced raster
    duration_s: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status is CompileStatus.OK


@dataclass
class CheckReport:
    compile_ok: bool = False
    rounds_used: int = 0
    error_excerpts: list[list[str]] = field(default_factory=list)
    verify_verdict: VerifyVerdict = VerifyVerdict.SKIPPED
    missing_elements: list[str] = field(default_factory=list)
    duration_s: float = 0.0

    def to_dict(self) -> dict:
        return {
            "compile_ok": self.compile_ok,
            "rounds_used": self.rounds_used,
            "error_excerpts": self.error_excerpts,
            "verify_verdict": self.verify_verdict.value,
            "missing_elements": self.missing_elements,
        }


@dataclass
class DiagramVersion:
    code: DiagramCode
    check: CheckReport
    image: Optional[str] = None  # artifact digest of the rendered raster
    created_from: Optional[int] = None

    def __post_init__(self):
        if self.check.compile_ok and self.image is None:
            raise ValueError("compiled version must carry an image digest")
        if not self.check.compile_ok and self.image is not None:
            raise ValueError("failed version must not carry an image digest")


class AgentName(str, enum.Enum):
    PLAN = "plan"
    CODE = "code"
    DIAGRAM_TO_CODE = "diagram_to_code"
    CHECK = "check"
    SANDBOX = "sandbox"


class EventKind(str, enum.Enum):
    REQUEST = "request"
    RESPONSE = "response"
    ERROR = "error"


@dataclass(frozen=True)
class WorkflowEvent:
    agent: AgentName
    kind: EventKind
    payload_digest: str
    at: int  # per-session logical clock, strictly increasing

    def to_dict(self) -> dict:
        return {
            "agent": self.agent.value,
            "kind": self.kind.value,
            "payload_digest": self.payload_digest,
            "at": self.at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WorkflowEvent":
        return cls(AgentName(d["agent"]), EventKind(d["kind"]), d["payload_digest"], d["at"])


class SessionStatus(str, enum.Enum):
    IDLE = "idle"
    RUNNING = "running"
    FAILED = "failed"


@dataclass
class SessionState:
    session_id: str
    versions: list[DiagramVersion] = field(default_factory=list)
    events: list[WorkflowEvent] = field(default_factory=list)
    status: SessionStatus = SessionStatus.IDLE

"""diagramforge: text-to-diagram generation, editing, and evaluation toolkit."""

__version__ = "0.1.0"

from .config import AppConfig, load_config
from .errors import DiagramForgeError
from .types import (
    CheckReport,
    CompileOutcome,
    CompileStatus,
    DiagramCode,
    DiagramVersion,
    Language,
    LanguageHint,
    TaskKind,
    UserQuery,
    VerifyVerdict,
)

__all__ = [
    "__version__",
    "AppConfig",
    "load_config",
    "DiagramForgeError",
    "CheckReport",
    "CompileOutcome",
    "CompileStatus",
    "DiagramCode",
    "DiagramVersion",
    "Language",
    "LanguageHint",
    "TaskKind",
    "UserQuery",
    "VerifyVerdict",
]

"""Exception hierarchy shared across the pipeline."""


class DiagramForgeError(Exception):
    """Base class for all diagramforge errors."""

    code = "internal_error"


# --- gateway ---------------------------------------------------------------

class ModelUnavailable(DiagramForgeError):
    code = "model_unavailable"


class TranscriptExhausted(ModelUnavailable):
    code = "transcript_exhausted"


class UnsupportedModality(DiagramForgeError):
    code = "unsupported_modality"


class PayloadTooLarge(DiagramForgeError):
    code = "payload_too_large"


class TranscriptParseError(DiagramForgeError):
    code = "transcript_parse_error"

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


# --- agents ----------------------------------------------------------------

class NoCodeBlock(DiagramForgeError):
    code = "no_code_block"


class LanguageSwitch(DiagramForgeError):
    code = "language_switch"


class ExpansionRejected(DiagramForgeError):
    code = "expansion_rejected"


class AmbiguousQuery(DiagramForgeError):
    code = "ambiguous_query"


class VisionModelUnavailable(ModelUnavailable):
    code = "vision_model_unavailable"


class ImageDecodeError(DiagramForgeError):
    code = "image_decode_error"


# --- check loop / sandbox --------------------------------------------------

class CheckExhausted(DiagramForgeError):
    code = "check_exhausted"

    def __init__(self, message: str, report=None, version=None):
        super().__init__(message)
        self.report = report
        self.version = version


class SandboxUnavailable(DiagramForgeError):
    code = "sandbox_unavailable"


class NoOriginal(DiagramForgeError):
    code = "no_original"


# --- metrics ---------------------------------------------------------------

class EmptyInput(DiagramForgeError):
    code = "empty_input"


class EmptyBatch(DiagramForgeError):
    code = "empty_batch"


class LanguageMismatch(DiagramForgeError):
    code = "language_mismatch"


class TooSmall(DiagramForgeError):
    code = "too_small"


class MalformedSheet(DiagramForgeError):
    code = "malformed_sheet"


# --- harness / storage -----------------------------------------------------

class DatasetParseError(DiagramForgeError):
    code = "dataset_parse_error"

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


class EmptyDataset(DiagramForgeError):
    code = "empty_dataset"


class ToolchainMissing(DiagramForgeError):
    code = "toolchain_missing"


class StorageFailure(DiagramForgeError):
    code = "storage_failure"


class SessionNotFound(DiagramForgeError):
    code = "not_found"


class SessionBusy(DiagramForgeError):
    code = "busy"

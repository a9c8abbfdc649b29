"""Benchmark harness: dataset loading, batched pipeline runs, report emission.

Rows are produced per record (crashes become failed rows, never aborts) and
aggregation is a single-threaded fold over id-sorted rows so reports are
byte-identical regardless of parallelism.
"""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import (
    CheckExhausted,
    DatasetParseError,
    EmptyDataset,
    SandboxUnavailable,
    TooSmall,
)
from .image_metrics import ms_ssim_detail, psnr
from .metrics import (
    chrf,
    code_bleu_breakdown,
    edit_distance,
    rouge_l,
    ruby_breakdown,
)
from .pipeline import Pipeline
from .types import (
    CheckReport,
    CodeOrigin,
    DiagramCode,
    DiagramVersion,
    Language,
    LanguageHint,
    TaskKind,
    UserQuery,
)

DIAGRAM_TYPES = (
    "model_architecture",
    "flowchart",
    "line_chart",
    "directed_graph",
    "undirected_graph",
    "table",
    "bar_chart",
    "mind_map",
)

TRUNCATION_MARKER = "\n% …truncated…\n"


# --- dataset ---------------------------------------------------------------

@dataclass
class DatasetRecord:
    id: str
    task: TaskKind
    diagram_type: str
    language: Language
    code_ref: str
    query: Optional[str] = None
    complete_query: Optional[str] = None
    code_ori: Optional[str] = None
    edit_instruction: Optional[str] = None
    image_path: Optional[str] = None

    def validate(self) -> None:
        if not self.id:
            raise ValueError("record id is empty")
        if self.diagram_type not in DIAGRAM_TYPES:
            raise ValueError(f"unknown diagram_type {self.diagram_type!r}")
        if not self.code_ref:
            raise ValueError("code_ref is empty")
        if self.task is TaskKind.GENERATION and not self.query:
            raise ValueError("generation record needs a query")
        if self.task is TaskKind.CODING and not self.image_path:
            raise ValueError("coding record needs an image_path")
        if self.task is TaskKind.EDITING and not (self.code_ori and self.edit_instruction):
            raise ValueError("editing record needs code_ori and edit_instruction")


@dataclass
class RejectedRecord:
    line_no: int
    reason: str


@dataclass
class DatasetLoadResult:
    records: list[DatasetRecord]
    rejects: list[RejectedRecord]


def load_dataset(path: Path | str) -> DatasetLoadResult:
    records: list[DatasetRecord] = []
    rejects: list[RejectedRecord] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetParseError(f"line {line_no}: malformed JSON ({exc.msg})")
            try:
                record = DatasetRecord(
                    id=str(raw.get("id", "")),
                    task=TaskKind.parse(raw.get("task", "")),
                    diagram_type=raw.get("diagram_type", ""),
                    language=Language(raw.get("language", "")),
                    code_ref=raw.get("code_ref", ""),
                    query=raw.get("query"),
                    complete_query=raw.get("complete_query"),
                    code_ori=raw.get("code_ori"),
                    edit_instruction=raw.get("edit_instruction"),
                    image_path=raw.get("image_path"),
                )
                record.validate()
            except (KeyError, ValueError) as exc:
                rejects.append(RejectedRecord(line_no, str(exc)))
                continue
            records.append(record)
    if not records and not rejects:
        raise EmptyDataset(f"no records in {path}")
    return DatasetLoadResult(records, rejects)


# --- truncation ------------------------------------------------------------

def truncate_input(text: str, budget_tokens: int) -> tuple[str, bool]:
    """Keeps the head 70% and tail 30% of the token budget with a marker."""
    tokens = text.split()
    if len(tokens) <= budget_tokens:
        return text, False
    head = int(budget_tokens * 0.7)
    tail = budget_tokens - head
    truncated = " ".join(tokens[:head]) + TRUNCATION_MARKER + " ".join(tokens[-tail:])
    return truncated, True


# --- rows and reports ------------------------------------------------------

@dataclass
class Row:
    record_id: str
    task: str
    diagram_type: str
    language: str
    compile_ok: bool = False
    rounds_used: int = 0
    truncated: bool = False
    rouge_l: Optional[float] = None
    codebleu: Optional[float] = None
    codebleu_fallback: bool = False
    edit_distance: Optional[float] = None
    chrf: Optional[float] = None
    ruby: Optional[float] = None
    ruby_tier: Optional[str] = None
    psnr_db: Optional[float] = None
    ms_ssim: Optional[float] = None
    clip_fid: Optional[float] = None
    lpips: Optional[float] = None
    error: Optional[str] = None
    error_tag: Optional[str] = None
    duration_s: float = 0.0

    def to_dict(self, include_volatile: bool = False) -> dict:
        d = {
            "record_id": self.record_id,
            "task": self.task,
            "diagram_type": self.diagram_type,
            "language": self.language,
            "compile_ok": self.compile_ok,
            "rounds_used": self.rounds_used,
            "truncated": self.truncated,
            "rouge_l": self.rouge_l,
            "codebleu": self.codebleu,
            "codebleu_fallback": self.codebleu_fallback,
            "edit_distance": self.edit_distance,
            "chrf": self.chrf,
            "ruby": self.ruby,
            "ruby_tier": self.ruby_tier,
            "psnr_db": self.psnr_db,
            "ms_ssim": self.ms_ssim,
            "clip_fid": self.clip_fid,
            "lpips": self.lpips,
            "error": self.error,
            "error_tag": self.error_tag,
        }
        if include_volatile:
            d["duration_s"] = self.duration_s
        return d


@dataclass
class CodeMetricReport:
    pass_at_1: float = 0.0
    rouge_l: float = 0.0
    codebleu: float = 0.0
    edit_distance: float = 0.0
    chrf: float = 0.0
    ruby: float = 0.0

    def to_dict(self) -> dict:
        return {
            "pass_at_1": self.pass_at_1,
            "rouge_l": self.rouge_l,
            "codebleu": self.codebleu,
            "edit_distance": self.edit_distance,
            "chrf": self.chrf,
            "ruby": self.ruby,
        }


@dataclass
class ImageMetricReport:
    psnr_db: Optional[float] = None
    ms_ssim: Optional[float] = None

    def to_dict(self) -> dict:
        return {"psnr_db": self.psnr_db, "ms_ssim": self.ms_ssim}


@dataclass
class Aggregate:
    code: CodeMetricReport
    image: ImageMetricReport
    rows: int
    clip_fid: Optional[float] = None
    lpips: Optional[float] = None

    def to_dict(self) -> dict:
        d = {"code": self.code.to_dict(), "image": self.image.to_dict(),
             "rows": self.rows}
        if self.clip_fid is not None:
            d["clip_fid"] = self.clip_fid
        if self.lpips is not None:
            d["lpips"] = self.lpips
        return d


@dataclass
class RunReport:
    task: str
    rows: list[Row]
    aggregate: Aggregate
    by_diagram_type: dict[str, Aggregate]
    config_echo: dict
    toolchain: str
    codebleu_adapted: bool = True

    def to_dict(self, include_volatile: bool = False) -> dict:
        return {
            "task": self.task,
            "rows": [r.to_dict(include_volatile) for r in self.rows],
            "aggregate": self.aggregate.to_dict(),
            "by_diagram_type": {
                k: v.to_dict() for k, v in sorted(self.by_diagram_type.items())
            },
            "config": self.config_echo,
            "toolchain": self.toolchain,
            "codebleu_adapted": self.codebleu_adapted,
        }


def _mean(values: list[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def aggregate_rows(rows: list[Row]) -> Aggregate:
    code = CodeMetricReport(
        pass_at_1=100.0 * _mean([1.0 if r.compile_ok else 0.0 for r in rows]),
        rouge_l=_mean([r.rouge_l for r in rows if r.rouge_l is not None]),
        codebleu=_mean([r.codebleu for r in rows if r.codebleu is not None]),
        edit_distance=_mean([r.edit_distance for r in rows if r.edit_distance is not None]),
        chrf=_mean([r.chrf for r in rows if r.chrf is not None]),
        ruby=_mean([r.ruby for r in rows if r.ruby is not None]),
    )
    psnr_vals = [r.psnr_db for r in rows if r.psnr_db is not None]
    ms_vals = [r.ms_ssim for r in rows if r.ms_ssim is not None]
    image = ImageMetricReport(
        psnr_db=_mean(psnr_vals) if psnr_vals else None,
        ms_ssim=_mean(ms_vals) if ms_vals else None,
    )
    fid_vals = [r.clip_fid for r in rows if r.clip_fid is not None]
    lpips_vals = [r.lpips for r in rows if r.lpips is not None]
    return Aggregate(
        code=code, image=image, rows=len(rows),
        clip_fid=_mean(fid_vals) if fid_vals else None,
        lpips=_mean(lpips_vals) if lpips_vals else None,
    )


# --- execution -------------------------------------------------------------

def _first_attempt_pass(report: CheckReport) -> bool:
    return report.compile_ok and report.rounds_used == 1


def _run_record(pipeline: Pipeline, record: DatasetRecord) -> Row:
    cfg = pipeline.config
    row = Row(
        record_id=record.id,
        task=record.task.label,
        diagram_type=record.diagram_type,
        language=record.language.value,
    )
    hint = LanguageHint(record.language.value)
    handle = pipeline.sessions.create()
    code: Optional[DiagramCode] = None
    report: Optional[CheckReport] = None
    image_digest: Optional[str] = None
    try:
        if record.task is TaskKind.GENERATION:
            text, row.truncated = truncate_input(
                record.query or "", cfg.harness.truncation_tokens
            )
            query = UserQuery(instruction=text, language_hint=hint,
                              task_hint=TaskKind.GENERATION)
            version = pipeline.run_generation(query, handle)
            code, report, image_digest = version.code, version.check, version.image
        elif record.task is TaskKind.CODING:
            image = Path(record.image_path).read_bytes()
            query = UserQuery(instruction=record.query or "", image=image,
                              language_hint=hint, task_hint=TaskKind.CODING)
            code = pipeline.run_coding(query, handle)
            version = handle.latest_version()
            report, image_digest = version.check, version.image
        else:
            # seed the session with the dataset's original code, then edit
            seed = DiagramCode(record.code_ori, record.language, CodeOrigin.DATASET)
            handle.record_version(DiagramVersion(seed, CheckReport()))
            text, row.truncated = truncate_input(
                record.edit_instruction or "", cfg.harness.truncation_tokens
            )
            query = UserQuery(instruction=text, language_hint=hint,
                              task_hint=TaskKind.EDITING)
            version = pipeline.run_editing(query, handle)
            code, report, image_digest = version.code, version.check, version.image
    except CheckExhausted as exc:
        report = exc.report
        if exc.version is not None:
            code = exc.version.code
        row.error = str(exc)
        row.error_tag = "structure_understanding_error"
    except Exception as exc:  # crash containment: a bad record never aborts the run
        row.error = f"{type(exc).__name__}: {exc}"
        return row

    if report is not None:
        row.rounds_used = report.rounds_used
        if cfg.harness.pass_stage == "first":
            row.compile_ok = _first_attempt_pass(report)
        else:
            row.compile_ok = report.compile_ok

    if code is not None:
        ref = DiagramCode(record.code_ref, record.language, CodeOrigin.DATASET)
        row.rouge_l = rouge_l(code.source, ref.source)
        row.edit_distance = edit_distance(code.source, ref.source)
        row.chrf = chrf(code.source, ref.source)
        cb = code_bleu_breakdown(code, ref)
        row.codebleu = cb.total
        row.codebleu_fallback = cb.parse_fallback
        rb = ruby_breakdown(code, ref)
        row.ruby = rb.value
        row.ruby_tier = rb.tier

        if image_digest is not None:
            ref_outcome = pipeline.sandbox.compile(ref)
            if ref_outcome.ok:
                hyp_img = pipeline.sandbox.rasterize(image_digest)
                ref_img = pipeline.sandbox.rasterize(ref_outcome.artifact)
                row.psnr_db = psnr(hyp_img, ref_img)
                try:
                    row.ms_ssim = ms_ssim_detail(hyp_img, ref_img).value
                except TooSmall:
                    row.ms_ssim = None
    return row


def run_task(records: list[DatasetRecord], pipeline: Pipeline,
             external_scores: Optional[dict] = None) -> RunReport:
    if not records:
        raise EmptyDataset("no records to run")
    kinds = {r.task for r in records}
    if len(kinds) > 1:
        raise ValueError(f"records span multiple tasks: {sorted(k.label for k in kinds)}")
    task = records[0].task
    for language in {r.language for r in records}:
        if not pipeline.sandbox.toolchain.supports(language):
            raise SandboxUnavailable(f"no toolchain for {language.value}")

    parallelism = max(1, pipeline.config.harness.parallelism)
    if parallelism == 1:
        rows = [_run_record(pipeline, r) for r in records]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            rows = list(pool.map(lambda r: _run_record(pipeline, r), records))

    if external_scores:
        for row in rows:
            scores = external_scores.get(row.record_id)
            if scores:
                row.clip_fid = scores.get("clip_fid")
                row.lpips = scores.get("lpips")

    rows.sort(key=lambda r: r.record_id)
    by_type: dict[str, list[Row]] = {}
    for row in rows:
        by_type.setdefault(row.diagram_type, []).append(row)

    hc = pipeline.config.harness
    config_echo = {
        "ablation": hc.ablation,
        "max_rounds": hc.max_rounds,
        "effective_max_rounds": hc.effective_max_rounds,
        "parallelism": hc.parallelism,
        "truncation_tokens": hc.truncation_tokens,
        "seed_label": hc.seed_label,
        "pass_stage": hc.pass_stage,
        "models": sorted(pipeline.config.models),
    }
    tc = pipeline.sandbox.toolchain
    toolchain = "system" if (tc.latex_cmd or tc.dot_cmd) else "bundled"
    return RunReport(
        task=task.label,
        rows=rows,
        aggregate=aggregate_rows(rows),
        by_diagram_type={k: aggregate_rows(v) for k, v in by_type.items()},
        config_echo=config_echo,
        toolchain=toolchain,
    )


def load_external_scores(path: Path | str) -> dict:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise DatasetParseError("external scores file must be a JSON object")
    return data


# --- emission --------------------------------------------------------------

_COLUMNS = [
    ("Pass@1↑", lambda a: a.code.pass_at_1),
    ("ROUGE-L↑", lambda a: a.code.rouge_l),
    ("CodeBLEU↑", lambda a: a.code.codebleu),
    ("Edit Dist.↓", lambda a: a.code.edit_distance),
    ("chrF↑", lambda a: a.code.chrf),
    ("RUBY↑", lambda a: a.code.ruby),
    ("PSNR↑", lambda a: a.image.psnr_db),
    ("MS-SSIM↑", lambda a: a.image.ms_ssim),
]
_EXTERNAL_COLUMNS = [
    ("CLIP-FID↓", lambda a: a.clip_fid),
    ("LPIPS↓", lambda a: a.lpips),
]


def _fmt(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.2f}"


def emit_report(report: RunReport, fmt: str = "json",
                include_volatile: bool = False) -> bytes:
    if fmt == "json":
        return (json.dumps(report.to_dict(include_volatile), sort_keys=True,
                           indent=2) + "\n").encode("utf-8")
    has_external = report.aggregate.clip_fid is not None or report.aggregate.lpips is not None
    columns = _COLUMNS + (_EXTERNAL_COLUMNS if has_external else [])
    groups = [("all", report.aggregate)] + sorted(report.by_diagram_type.items())
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["group"] + [name for name, _ in columns])
        for name, agg in groups:
            writer.writerow([name] + [_fmt(get(agg)) for _, get in columns])
        return buf.getvalue().encode("utf-8")
    if fmt in ("markdown", "md"):
        header = "| Group | " + " | ".join(name for name, _ in columns) + " |"
        rule = "|" + "---|" * (len(columns) + 1)
        lines = [f"### {report.task} ({report.aggregate.rows} records)", "",
                 header, rule]
        for name, agg in groups:
            lines.append(
                "| " + name + " | "
                + " | ".join(_fmt(get(agg)) for _, get in columns) + " |"
            )
        return ("\n".join(lines) + "\n").encode("utf-8")
    raise ValueError(f"unknown report format {fmt!r}")

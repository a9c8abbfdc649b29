"""Compiles diagram source to raster images in isolated subprocesses.

System toolchains (pdflatex + pdftoppm, graphviz dot) are used when present;
otherwise the bundled subset engines in this package take over. Every job
runs in its own temporary workdir inside its own process group, killed at
timeout with a short grace period.
"""
from __future__ import annotations

import os
import re
import shutil
import signal
import subprocess
import sys
import tempfile
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image, UnidentifiedImageError

from ..artifacts import ArtifactStore
from ..errors import ImageDecodeError, SandboxUnavailable
from ..types import CompileOutcome, CompileStatus, DiagramCode, Language

LOG_TAIL_BYTES = 64 * 1024
KILL_GRACE_S = 5.0


@dataclass
class RasterImage:
    width: int
    height: int
    channels: str  # gray | rgb
    pixels: bytes  # row-major 8-bit samples

    def __post_init__(self):
        depth = 1 if self.channels == "gray" else 3
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be >= 1")
        if len(self.pixels) != self.width * self.height * depth:
            raise ValueError("pixel buffer length does not match dimensions")

    def to_array(self) -> np.ndarray:
        depth = 1 if self.channels == "gray" else 3
        arr = np.frombuffer(self.pixels, dtype=np.uint8)
        return arr.reshape(self.height, self.width, depth)

    @classmethod
    def from_pil(cls, img: Image.Image) -> "RasterImage":
        if img.mode == "L":
            channels = "gray"
        else:
            img = img.convert("RGB")
            channels = "rgb"
        return cls(img.width, img.height, channels, img.tobytes())


@dataclass
class Toolchain:
    latex_cmd: Optional[list[str]] = None       # e.g. ["pdflatex"]
    pdf_to_png_cmd: Optional[list[str]] = None  # e.g. ["pdftoppm"]
    dot_cmd: Optional[list[str]] = None         # e.g. ["dot"]
    bundled_tex: bool = False
    bundled_dot: bool = False

    def supports(self, language: Language) -> bool:
        if language is Language.DOT:
            return self.bundled_dot or self.dot_cmd is not None
        return self.bundled_tex or (
            self.latex_cmd is not None and self.pdf_to_png_cmd is not None
        )

    def describe(self) -> dict[str, str]:
        out = {}
        if self.dot_cmd:
            out["dot"] = " ".join(self.dot_cmd)
        elif self.bundled_dot:
            out["dot"] = "bundled subset renderer"
        else:
            out["dot"] = "missing"
        if self.latex_cmd and self.pdf_to_png_cmd:
            out["latex"] = " ".join(self.latex_cmd) + " + " + " ".join(self.pdf_to_png_cmd)
        elif self.bundled_tex:
            out["latex"] = "bundled subset engine"
        else:
            out["latex"] = "missing"
        return out


def detect_toolchain(prefer: str = "auto") -> Toolchain:
    """prefer: auto (system first), system (no fallback), bundled."""
    tc = Toolchain()
    if prefer != "bundled":
        latex = shutil.which("pdflatex") or shutil.which("lualatex")
        topng = shutil.which("pdftoppm")
        dot = shutil.which("dot")
        if latex and topng:
            tc.latex_cmd = [latex]
            tc.pdf_to_png_cmd = [topng]
        if dot:
            tc.dot_cmd = [dot]
    if prefer != "system":
        tc.bundled_tex = tc.latex_cmd is None
        tc.bundled_dot = tc.dot_cmd is None
    return tc


@dataclass
class CompileJob:
    code: DiagramCode
    dpi: int = 150
    timeout_s: float = 60.0
    workdir: Optional[Path] = None
    keep_artifacts: bool = False


def _tail(text: str) -> str:
    data = text.encode("utf-8", errors="replace")
    if len(data) <= LOG_TAIL_BYTES:
        return text
    return data[-LOG_TAIL_BYTES:].decode("utf-8", errors="replace")


def _run_limited(cmd: list[str], cwd: Path, timeout_s: float,
                 env: dict) -> tuple[Optional[int], str, bool]:
    """Runs cmd in its own process group; returns (rc, log, timed_out)."""
    proc = subprocess.Popen(
        cmd,
        cwd=str(cwd),
        stdout=subprocess.PIPE,
        stderr=subprocess.STDOUT,
        start_new_session=True,
        env=env,
    )
    try:
        out, _ = proc.communicate(timeout=timeout_s)
        return proc.returncode, out.decode("utf-8", errors="replace"), False
    except subprocess.TimeoutExpired:
        try:
            os.killpg(proc.pid, signal.SIGKILL)
        except ProcessLookupError:
            pass
        deadline = time.monotonic() + KILL_GRACE_S
        while proc.poll() is None and time.monotonic() < deadline:
            time.sleep(0.05)
        if proc.poll() is None:
            proc.kill()
        try:
            out, _ = proc.communicate(timeout=KILL_GRACE_S)
        except subprocess.TimeoutExpired:
            out = b""
        return None, out.decode("utf-8", errors="replace"), True


class Sandbox:
    """Bounded-concurrency compile service writing artifacts to the store."""

    def __init__(self, store: ArtifactStore, toolchain: Optional[Toolchain] = None,
                 dpi: int = 150, timeout_s: float = 60.0, max_workers: int = 4):
        self.store = store
        self.toolchain = toolchain or detect_toolchain()
        self.dpi = dpi
        self.timeout_s = timeout_s
        self._slots = threading.BoundedSemaphore(max(1, max_workers))

    def compile(self, code: DiagramCode, dpi: Optional[int] = None,
                timeout_s: Optional[float] = None,
                keep_artifacts: bool = False) -> CompileOutcome:
        job = CompileJob(code, dpi or self.dpi, timeout_s or self.timeout_s,
                         keep_artifacts=keep_artifacts)
        if not self.toolchain.supports(code.language):
            raise SandboxUnavailable(
                f"no toolchain for {code.language.value}; run `diagramforge doctor`"
            )
        with self._slots:
            return self._compile_job(job)

    def _compile_job(self, job: CompileJob) -> CompileOutcome:
        started = time.monotonic()
        workdir = Path(tempfile.mkdtemp(prefix="dfjob-"))
        job.workdir = workdir
        env = dict(os.environ)
        env["TMPDIR"] = str(workdir)
        try:
            if job.code.language is Language.DOT:
                outcome = self._compile_dot(job, workdir, env)
            else:
                outcome = self._compile_latex(job, workdir, env)
        finally:
            if not job.keep_artifacts:
                shutil.rmtree(workdir, ignore_errors=True)
        outcome.duration_s = time.monotonic() - started
        return outcome

    def _store_png(self, png_path: Path) -> Optional[str]:
        if not png_path.exists():
            return None
        return self.store.put(png_path.read_bytes())

    def _bundled_cmd(self, language: str, src: Path, out: Path, dpi: int) -> list[str]:
        return [
            sys.executable, "-m", "diagramforge.sandbox.fallback_cli",
            "--language", language, "--input", str(src),
            "--output", str(out), "--dpi", str(dpi),
        ]

    def _compile_dot(self, job: CompileJob, workdir: Path, env: dict) -> CompileOutcome:
        src = workdir / "job.dot"
        out = workdir / "job.png"
        src.write_text(job.code.source, encoding="utf-8")
        if self.toolchain.dot_cmd:
            cmd = self.toolchain.dot_cmd + [
                "-Tpng", f"-Gdpi={job.dpi}", str(src), "-o", str(out)
            ]
        else:
            cmd = self._bundled_cmd("dot", src, out, job.dpi)
        rc, log, timed_out = _run_limited(cmd, workdir, job.timeout_s, env)
        if timed_out:
            return CompileOutcome(CompileStatus.TIMEOUT, _tail(log))
        if rc != 0:
            return CompileOutcome(CompileStatus.COMPILE_ERROR, _tail(log))
        digest = self._store_png(out)
        if digest is None:
            return CompileOutcome(CompileStatus.COMPILE_ERROR, _tail(log + "\nno output produced"))
        return CompileOutcome(CompileStatus.OK, _tail(log), artifact=digest)

    def _compile_latex(self, job: CompileJob, workdir: Path, env: dict) -> CompileOutcome:
        from ..code_agent import promote_tikz_fragment

        src = workdir / "job.tex"
        out = workdir / "job.png"
        # bare tikzpicture fragments get a standalone wrapper just for the
        # compile; the stored source stays as authored
        compiled_source, _ = promote_tikz_fragment(job.code.source)
        src.write_text(compiled_source, encoding="utf-8")
        if self.toolchain.latex_cmd:
            cmd = self.toolchain.latex_cmd + [
                "-interaction=nonstopmode", "-halt-on-error",
                "-no-shell-escape", src.name,
            ]
            rc, log, timed_out = _run_limited(cmd, workdir, job.timeout_s, env)
            if timed_out:
                return CompileOutcome(CompileStatus.TIMEOUT, _tail(log))
            pdf = workdir / "job.pdf"
            if rc != 0 or not pdf.exists():
                return CompileOutcome(CompileStatus.COMPILE_ERROR, _tail(log))
            conv = self.toolchain.pdf_to_png_cmd + [
                "-png", "-singlefile", "-r", str(job.dpi), str(pdf),
                str(workdir / "job"),
            ]
            rc2, log2, timed_out2 = _run_limited(conv, workdir, job.timeout_s, env)
            log = log + "\n" + log2
            if timed_out2:
                return CompileOutcome(CompileStatus.TIMEOUT, _tail(log))
            if rc2 != 0:
                return CompileOutcome(CompileStatus.COMPILE_ERROR, _tail(log))
        else:
            cmd = self._bundled_cmd("tex", src, out, job.dpi)
            rc, log, timed_out = _run_limited(cmd, workdir, job.timeout_s, env)
            if timed_out:
                return CompileOutcome(CompileStatus.TIMEOUT, _tail(log))
            if rc != 0:
                return CompileOutcome(CompileStatus.COMPILE_ERROR, _tail(log))
        digest = self._store_png(out)
        if digest is None:
            return CompileOutcome(CompileStatus.COMPILE_ERROR, _tail(log + "\nno output produced"))
        return CompileOutcome(CompileStatus.OK, _tail(log), artifact=digest)

    def rasterize(self, artifact_digest: str) -> RasterImage:
        data = self.store.get(artifact_digest)
        if data is None:
            raise ImageDecodeError(f"artifact {artifact_digest} not found")
        return decode_raster(data)


def decode_raster(data: bytes) -> RasterImage:
    import io

    try:
        with Image.open(io.BytesIO(data)) as img:
            img.load()
            return RasterImage.from_pil(img)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise ImageDecodeError(f"cannot decode image: {exc}")


_LATEX_ERROR_RE = re.compile(r"^! ")
_LATEX_CONTEXT_RE = re.compile(r"^l\.\d+")
_DOT_ERROR_RE = re.compile(r"Error:|syntax error", re.IGNORECASE)


def parse_errors(log: str, language: Language, cap: int = 20) -> list[str]:
    """Structured error excerpts from a toolchain log; empty when clean."""
    excerpts: list[str] = []
    lines = log.split("\n")
    if language is Language.LATEX:
        i = 0
        while i < len(lines) and len(excerpts) < cap:
            if _LATEX_ERROR_RE.match(lines[i]):
                chunk = [lines[i].rstrip()]
                for j in range(i + 1, min(i + 6, len(lines))):
                    if _LATEX_CONTEXT_RE.match(lines[j]):
                        chunk.append(lines[j].rstrip())
                        break
                excerpts.append("\n".join(chunk))
            i += 1
    else:
        for line in lines:
            if _DOT_ERROR_RE.search(line):
                excerpts.append(line.rstrip())
                if len(excerpts) >= cap:
                    break
    return excerpts

"""Command-line interface.

generate/code/edit are thin HTTP clients: they talk to a running server via
--server, or spin up the app in-process against a local data directory.
eval and doctor run locally.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Optional

import click

from . import __version__
from .config import AppConfig, load_config


def _load_config(path: Optional[str]) -> AppConfig:
    return load_config(path) if path else AppConfig()


def _client(server: Optional[str], config: Optional[str], data_dir: str):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=600.0)
    from fastapi.testclient import TestClient

    from .service import create_app

    return TestClient(create_app(_load_config(config), data_dir))


def _check(response) -> dict:
    if response.status_code >= 400:
        try:
            body = response.json()
            message = f"{body.get('code', 'error')}: {body.get('message', '')}"
        except ValueError:
            message = response.text[:500]
        raise click.ClickException(f"HTTP {response.status_code} — {message}")
    return response.json()


def _print_versions(body: dict) -> None:
    for v in body["versions"]:
        badge = "ok" if v["compile_ok"] else "FAILED"
        click.echo(
            f"version {v['index']}: {badge} "
            f"(rounds={v['rounds_used']}, verify={v['verify_verdict']}, "
            f"image={v['image'] or '-'})"
        )


_server_opt = click.option("--server", default=None,
                           help="Base URL of a running server; omit to run in-process.")
_config_opt = click.option("--config", "config_path", default=None,
                           type=click.Path(exists=True, dir_okay=False),
                           help="TOML config file.")
_data_opt = click.option("--data-dir", default="./diagramforge-data",
                         show_default=True, help="Local data directory.")
_session_opt = click.option("--session", default=None,
                            help="Existing session id; omit to create one.")


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Text-to-diagram generation, editing, and evaluation."""


@main.command()
@click.option("--listen", default=None, help="host:port (default from "
              "DIAGRAMFORGE_LISTEN_ADDR, else 127.0.0.1:8080).")
@_config_opt
@_data_opt
def serve(listen: Optional[str], config_path: Optional[str], data_dir: str) -> None:
    """Run the HTTP service."""
    import os

    import uvicorn

    from .service import create_app

    addr = listen or os.environ.get("DIAGRAMFORGE_LISTEN_ADDR", "127.0.0.1:8080")
    host, _, port = addr.rpartition(":")
    app = create_app(_load_config(config_path), data_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))


@main.command()
@click.argument("instruction")
@click.option("--language", default="auto", show_default=True,
              type=click.Choice(["latex", "dot", "auto"]))
@click.option("--out", default=None, type=click.Path(dir_okay=False),
              help="Write the rendered PNG here.")
@_session_opt
@_server_opt
@_config_opt
@_data_opt
def generate(instruction: str, language: str, out: Optional[str],
             session: Optional[str], server: Optional[str],
             config_path: Optional[str], data_dir: str) -> None:
    """Generate a diagram from a natural-language INSTRUCTION."""
    with _client(server, config_path, data_dir) as client:
        sid = session or _check(client.post("/v1/sessions"))["session_id"]
        body = _check(client.post(
            f"/v1/sessions/{sid}/generate",
            json={"instruction": instruction, "language_hint": language},
        ))
        click.echo(f"session {sid}")
        _print_versions(body)
        latest = body["versions"][-1]
        click.echo(latest["code"])
        if out and latest["image"]:
            png = client.get(f"/v1/artifacts/{latest['image']}")
            Path(out).write_bytes(png.content)
            click.echo(f"wrote {out}")


@main.command()
@click.argument("image", type=click.Path(exists=True, dir_okay=False))
@click.option("--language", default="auto", show_default=True,
              type=click.Choice(["latex", "dot", "auto"]))
@_session_opt
@_server_opt
@_config_opt
@_data_opt
def code(image: str, language: str, session: Optional[str],
         server: Optional[str], config_path: Optional[str], data_dir: str) -> None:
    """Recover diagram source code from an IMAGE file."""
    with _client(server, config_path, data_dir) as client:
        sid = session or _check(client.post("/v1/sessions"))["session_id"]
        with open(image, "rb") as fh:
            body = _check(client.post(
                f"/v1/sessions/{sid}/code",
                files={"image": (Path(image).name, fh, "image/png")},
                data={"language_hint": language},
            ))
        click.echo(f"session {sid} language={body['language']} "
                   f"compile_ok={body['compile_ok']}")
        click.echo(body["source"])


@main.command()
@click.argument("instruction")
@click.option("--session", required=True, help="Session with an existing version.")
@_server_opt
@_config_opt
@_data_opt
def edit(instruction: str, session: str, server: Optional[str],
         config_path: Optional[str], data_dir: str) -> None:
    """Apply a natural-language edit INSTRUCTION to the latest version."""
    with _client(server, config_path, data_dir) as client:
        body = _check(client.post(
            f"/v1/sessions/{session}/edit", json={"instruction": instruction}
        ))
        _print_versions(body)
        click.echo(body["versions"][-1]["code"])


@main.command(name="eval")
@click.option("--dataset", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--task", required=True,
              type=click.Choice(["generate", "code", "edit"]))
@_config_opt
@click.option("--ablation", default=None,
              type=click.Choice(["full", "no-judge", "no-compiler", "neither"]),
              help="Override the configured ablation arm.")
@click.option("--scores", default=None, type=click.Path(exists=True, dir_okay=False),
              help="External scores JSON (record id -> {clip_fid, lpips}).")
@click.option("--out", "out_dir", default=".", show_default=True,
              type=click.Path(file_okay=False))
@click.option("--format", "fmt", default="json", show_default=True,
              type=click.Choice(["json", "csv", "md"]))
@_data_opt
def eval_cmd(dataset: str, task: str, config_path: Optional[str],
             ablation: Optional[str], scores: Optional[str], out_dir: str,
             fmt: str, data_dir: str) -> None:
    """Run the benchmark harness over a JSONL dataset."""
    from . import harness
    from .pipeline import Pipeline
    from .types import TaskKind

    kind = {"generate": TaskKind.GENERATION, "code": TaskKind.CODING,
            "edit": TaskKind.EDITING}[task]
    cfg = _load_config(config_path)
    if ablation:
        cfg.harness.ablation = ablation.replace("-", "_")
    loaded = harness.load_dataset(dataset)
    for reject in loaded.rejects:
        click.echo(f"reject line {reject.line_no}: {reject.reason}", err=True)
    records = [r for r in loaded.records if r.task is kind]
    if not records:
        raise click.ClickException(f"no {task} records in {dataset}")
    external = harness.load_external_scores(scores) if scores else None
    pipeline = Pipeline(cfg, data_dir)
    report = harness.run_task(records, pipeline, external_scores=external)
    ext = {"json": "json", "csv": "csv", "md": "md"}[fmt]
    out_path = Path(out_dir) / f"report-{task}-{cfg.harness.ablation}.{ext}"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_bytes(harness.emit_report(report, "markdown" if fmt == "md" else fmt))
    click.echo(f"pass@1 {report.aggregate.code.pass_at_1:.2f} over "
               f"{report.aggregate.rows} records -> {out_path}")


@main.command()
def doctor() -> None:
    """Report which compile toolchains are available."""
    from .sandbox import detect_toolchain

    tc = detect_toolchain("auto")
    rows = [
        ("latex", tc.latex_cmd[0] if tc.latex_cmd else
         ("bundled subset engine" if tc.bundled_tex else "MISSING")),
        ("pdf-to-png", tc.pdf_to_png_cmd[0] if tc.pdf_to_png_cmd else
         ("n/a (bundled renders directly)" if tc.bundled_tex else "MISSING")),
        ("dot", tc.dot_cmd[0] if tc.dot_cmd else
         ("bundled subset engine" if tc.bundled_dot else "MISSING")),
    ]
    for name, status in rows:
        click.echo(f"{name:>10}: {status}")


if __name__ == "__main__":
    sys.exit(main())

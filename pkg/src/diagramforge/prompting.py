"""Loads versioned prompt templates shipped with the package."""
from __future__ import annotations

from importlib import resources


def load_template(name: str) -> str:
    return (resources.files("diagramforge") / "prompts" / f"{name}.txt").read_text(
        encoding="utf-8"
    )


def render(name: str, **vars: str) -> str:
    text = load_template(name)
    for key, value in vars.items():
        text = text.replace("{%s}" % key, value)
    return text.strip() + "\n"

"""Turns queries into diagram code and applies edit instructions.

Also owns code-block extraction from model replies and the promotion of bare
TikZ fragments into compilable standalone documents.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .errors import LanguageSwitch, NoCodeBlock
from .gateway import ChatTurn, Gateway, ModelProfile
from .prompting import render
from .types import CodeOrigin, DiagramCode, Language, LanguageHint

_FENCE_RE = re.compile(r"```[ \t]*([A-Za-z0-9_+-]*)[ \t]*\r?\n(.*?)```", re.DOTALL)
_DOT_START_RE = re.compile(r"^\s*(strict\s+)?(graph|digraph)\b", re.IGNORECASE)
_LATEX_TAGS = {"latex", "tex", "tikz"}
_DOT_TAGS = {"dot", "graphviz"}

TIKZ_PREAMBLE = "\n".join(
    [
        r"\documentclass[tikz,border=2pt]{standalone}",
        r"\usepackage{tikz}",
        r"\usepackage{pgfplots}",
        r"\usetikzlibrary{arrows.meta,positioning,shapes,calc,fit,backgrounds}",
    ]
)


def _strip_comments_dot(text: str) -> str:
    text = re.sub(r"/\*.*?\*/", "", text, flags=re.DOTALL)
    return re.sub(r"(^|\s)(//|#)[^\n]*", r"\1", text)


def detect_language(source: str) -> Optional[Language]:
    if "\\begin{document}" in source or "\\begin{tikzpicture}" in source:
        return Language.LATEX
    if _DOT_START_RE.match(_strip_comments_dot(source)):
        return Language.DOT
    return None


def extract_code_block(model_text: str) -> tuple[str, Language]:
    """Pulls the first plausible code block out of a model reply.

    Precedence: tagged fence, then any fence passing detection, then the
    whole text if it passes detection itself.
    """
    blocks = [(tag.lower(), body) for tag, body in _FENCE_RE.findall(model_text)]
    for tag, body in blocks:
        if tag in _LATEX_TAGS:
            return body.strip("\n"), Language.LATEX
        if tag in _DOT_TAGS:
            return body.strip("\n"), Language.DOT
    for _tag, body in blocks:
        lang = detect_language(body)
        if lang is not None:
            return body.strip("\n"), lang
    lang = detect_language(model_text)
    if lang is not None:
        return model_text.strip(), lang
    raise NoCodeBlock("no code block found in model reply")


def promote_tikz_fragment(source: str) -> tuple[str, bool]:
    """Wraps a bare tikzpicture in a standalone document.

    Returns (compilable source, wrapped?). Metrics compare against the
    unwrapped source, so callers must keep the original around.
    """
    if "\\begin{document}" in source:
        return source, False
    if "\\begin{tikzpicture}" not in source:
        return source, False
    wrapped = f"{TIKZ_PREAMBLE}\n\\begin{{document}}\n{source}\n\\end{{document}}\n"
    return wrapped, True


@dataclass
class ModifyResult:
    code: DiagramCode
    no_op: bool


def generate_code(
    x_comp: str,
    language_hint: LanguageHint,
    model: ModelProfile,
    gateway: Gateway,
    feedback: str = "",
) -> DiagramCode:
    if not x_comp.strip():
        raise ValueError("query must be non-empty")
    prompt = render(
        "generation",
        instruction=x_comp,
        language_hint=language_hint.value,
        feedback=("Fix these compiler errors:\n" + feedback) if feedback else "",
    )
    reply = gateway.complete(model, [ChatTurn("user", prompt)])
    source, lang = extract_code_block(reply)
    return DiagramCode(source, lang, CodeOrigin.MODEL)


def modify_code(
    c_ori: DiagramCode,
    x_edit: str,
    model: ModelProfile,
    gateway: Gateway,
    feedback: str = "",
) -> ModifyResult:
    if not x_edit.strip():
        raise ValueError("edit instruction must be non-empty")
    prompt = render(
        "modification",
        code=c_ori.source,
        instruction=x_edit,
        feedback=("Fix these compiler errors:\n" + feedback) if feedback else "",
    )
    reply = gateway.complete(model, [ChatTurn("user", prompt)])
    source, lang = extract_code_block(reply)
    if lang is not c_ori.language:
        raise LanguageSwitch(
            f"edit changed language from {c_ori.language.value} to {lang.value}"
        )
    code = DiagramCode(source, lang, CodeOrigin.MODEL)
    return ModifyResult(code=code, no_op=code.digest == c_ori.digest)

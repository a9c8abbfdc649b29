"""Code extraction, language detection, TikZ promotion, generate/modify."""
import json

import pytest

from diagramforge import code_agent
from diagramforge.errors import LanguageSwitch, NoCodeBlock
from diagramforge.gateway import Gateway, ModelProfile
from diagramforge.types import CodeOrigin, DiagramCode, Language, LanguageHint

TIKZ = "\\begin{tikzpicture}\\node (a) {A};\\end{tikzpicture}"
DOT = "digraph g { a -> b; }"


def scripted_profile(tmp_path, reply):
    path = tmp_path / "reply.jsonl"
    path.write_text(json.dumps({"match": "", "reply": reply}) + "\n")
    return ModelProfile("m", f"scripted:{path}", "m")


class TestDetectLanguage:
    def test_tikz(self):
        assert code_agent.detect_language(TIKZ) is Language.LATEX

    def test_full_document(self):
        doc = "\\documentclass{article}\\begin{document}x\\end{document}"
        assert code_agent.detect_language(doc) is Language.LATEX

    def test_digraph(self):
        assert code_agent.detect_language(DOT) is Language.DOT

    def test_strict_graph(self):
        assert code_agent.detect_language("strict graph { a -- b }") is Language.DOT

    def test_dot_behind_comment(self):
        assert code_agent.detect_language("// header\ndigraph { a }") is Language.DOT

    def test_prose_is_neither(self):
        assert code_agent.detect_language("please draw me a graph") is None


class TestExtractCodeBlock:
    def test_tagged_fence_wins(self):
        reply = f"Sure!\n```dot\n{DOT}\n```\nDone."
        source, lang = code_agent.extract_code_block(reply)
        assert source == DOT and lang is Language.DOT

    def test_tagged_latex_variants(self):
        for tag in ("latex", "tex", "tikz"):
            source, lang = code_agent.extract_code_block(f"```{tag}\n{TIKZ}\n```")
            assert lang is Language.LATEX

    def test_untagged_fence_with_detection(self):
        reply = f"```\n{DOT}\n```"
        source, lang = code_agent.extract_code_block(reply)
        assert source == DOT and lang is Language.DOT

    def test_untagged_fence_skips_prose_block(self):
        reply = f"```\njust words\n```\n```\n{TIKZ}\n```"
        source, lang = code_agent.extract_code_block(reply)
        assert lang is Language.LATEX

    def test_bare_reply(self):
        source, lang = code_agent.extract_code_block(DOT)
        assert source == DOT and lang is Language.DOT

    def test_no_code_raises(self):
        with pytest.raises(NoCodeBlock):
            code_agent.extract_code_block("I cannot draw that.")


class TestPromotion:
    def test_fragment_wrapped(self):
        promoted, wrapped = code_agent.promote_tikz_fragment(TIKZ)
        assert wrapped
        assert promoted.startswith("\\documentclass")
        assert TIKZ in promoted
        assert promoted.count("\\begin{document}") == 1

    def test_full_document_untouched(self):
        doc = f"\\documentclass{{standalone}}\\begin{{document}}{TIKZ}\\end{{document}}"
        promoted, wrapped = code_agent.promote_tikz_fragment(doc)
        assert not wrapped and promoted == doc

    def test_non_tikz_untouched(self):
        promoted, wrapped = code_agent.promote_tikz_fragment(DOT)
        assert not wrapped and promoted == DOT


class TestGenerate:
    def test_returns_model_origin_code(self, tmp_path):
        profile = scripted_profile(tmp_path, f"```dot\n{DOT}\n```")
        code = code_agent.generate_code("draw a -> b", LanguageHint.DOT,
                                        profile, Gateway())
        assert code.source == DOT
        assert code.origin is CodeOrigin.MODEL

    def test_empty_query_rejected(self, tmp_path):
        profile = scripted_profile(tmp_path, "x")
        with pytest.raises(ValueError):
            code_agent.generate_code("  ", LanguageHint.AUTO, profile, Gateway())

    def test_feedback_reaches_prompt(self, tmp_path):
        path = tmp_path / "t.jsonl"
        path.write_text(
            json.dumps({"match": "Fix these compiler errors",
                        "reply": f"```dot\n{DOT}\n```"}) + "\n"
            + json.dumps({"match": "", "reply": "```dot\ndigraph x {}\n```"}) + "\n"
        )
        profile = ModelProfile("m", f"scripted:{path}", "m")
        code = code_agent.generate_code("draw", LanguageHint.DOT, profile,
                                        Gateway(), feedback="syntax error near 'x'")
        assert code.source == DOT


class TestModify:
    def test_language_switch_rejected(self, tmp_path):
        profile = scripted_profile(tmp_path, f"```tikz\n{TIKZ}\n```")
        original = DiagramCode(DOT, Language.DOT)
        with pytest.raises(LanguageSwitch):
            code_agent.modify_code(original, "make it latex", profile, Gateway())

    def test_no_op_detected(self, tmp_path):
        profile = scripted_profile(tmp_path, f"```dot\n{DOT}\n```")
        original = DiagramCode(DOT, Language.DOT)
        result = code_agent.modify_code(original, "keep it", profile, Gateway())
        assert result.no_op

    def test_real_change(self, tmp_path):
        changed = "digraph g { a -> b [style=dashed]; }"
        profile = scripted_profile(tmp_path, f"```dot\n{changed}\n```")
        original = DiagramCode(DOT, Language.DOT)
        result = code_agent.modify_code(original, "dash the edge", profile, Gateway())
        assert not result.no_op
        assert result.code.source == changed

"""Bundled DOT and TeX subset engines: parsing, diagnostics, rendering."""
import subprocess
import sys

import pytest

from diagramforge.sandbox import dotlang, texlang


class TestDotParser:
    def test_simple_digraph(self):
        graph = dotlang.parse_dot("digraph g { a -> b; b -> c; }")
        assert graph.directed
        assert set(graph.nodes) == {"a", "b", "c"}
        assert [(e.tail, e.head) for e in graph.edges] == [("a", "b"), ("b", "c")]

    def test_attributes_and_defaults(self):
        graph = dotlang.parse_dot(
            'digraph { node [shape=box]; a [label="Start"]; a -> b [color=red]; }'
        )
        assert graph.nodes["a"].attrs["label"] == "Start"
        assert graph.nodes["a"].attrs["shape"] == "box"
        assert graph.edges[0].attrs["color"] == "red"

    def test_edge_chain(self):
        graph = dotlang.parse_dot("digraph { a -> b -> c -> d; }")
        assert len(graph.edges) == 3

    def test_group_endpoints(self):
        graph = dotlang.parse_dot("digraph { {a b} -> c; }")
        assert {(e.tail, e.head) for e in graph.edges} == {("a", "c"), ("b", "c")}

    def test_undirected_edge_in_digraph_rejected(self):
        with pytest.raises(dotlang.DotSyntaxError):
            dotlang.parse_dot("digraph { a -- b; }")

    def test_error_message_format(self):
        with pytest.raises(dotlang.DotSyntaxError) as exc_info:
            dotlang.parse_dot("digraph { a -> b }\nbad")
        assert str(exc_info.value) == (
            "Error: <stdin>: syntax error in line 2 near 'bad'"
        )

    def test_comments_stripped(self):
        graph = dotlang.parse_dot(
            "digraph { // line\n# hash\n/* block */ a -> b; }"
        )
        assert set(graph.nodes) == {"a", "b"}

    def test_render_produces_canvas(self):
        graph = dotlang.parse_dot('digraph { a [label="hello"]; a -> b; }')
        img = dotlang.render_dot(graph, dpi=96)
        assert img.width >= 100 and img.height >= 100


class TestTexValidation:
    def test_valid_document(self):
        doc = ("\\documentclass{standalone}\\begin{document}"
               "\\begin{tikzpicture}\\node (a) {A};\\end{tikzpicture}"
               "\\end{document}")
        assert texlang.validate(doc) == []

    def test_missing_begin_document(self):
        errors = texlang.validate("\\documentclass{article} hello")
        assert any("\\begin{document}" in e.message for e in errors)

    def test_undefined_control_sequence(self):
        doc = ("\\documentclass{standalone}\\begin{document}"
               "\\definitelynotacommand\\end{document}")
        errors = texlang.validate(doc)
        assert any("Undefined control sequence" in e.message for e in errors)

    def test_newcommand_defines(self):
        doc = ("\\documentclass{standalone}\\newcommand{\\mything}{x}"
               "\\begin{document}\\mything\\end{document}")
        assert texlang.validate(doc) == []

    def test_mismatched_environment(self):
        doc = ("\\documentclass{standalone}\\begin{document}"
               "\\begin{tikzpicture}\\end{axis}\\end{document}")
        assert texlang.validate(doc)

    def test_error_log_has_bang_and_line_context(self):
        doc = ("\\documentclass{standalone}\n\\begin{document}\n"
               "\\nosuchcmd\n\\end{document}\n")
        errors = texlang.validate(doc)
        lines = errors[0].log_lines()
        assert lines[0].startswith("! ")
        assert lines[1].startswith("l.")

    def test_infinite_loop_detection(self):
        doc = "\\begin{document}\\loop x\\repeat\\end{document}"
        assert texlang.has_infinite_loop(doc)
        guarded = ("\\begin{document}\\loop x\\ifnum1<0\\repeat"
                   "\\end{document}")
        assert not texlang.has_infinite_loop(guarded)

    def test_render_tikz_nodes(self):
        doc = ("\\documentclass{standalone}\\begin{document}"
               "\\begin{tikzpicture}"
               "\\node (a) at (0,0) {A};\\node (b) at (2,0) {B};"
               "\\draw[->] (a) -- (b);"
               "\\end{tikzpicture}\\end{document}")
        img = texlang.render(doc, dpi=96)
        assert img.width > 0 and img.height > 0


class TestFallbackCli:
    def run_cli(self, language, source, tmp_path, timeout=30):
        src = tmp_path / "in.src"
        out = tmp_path / "out.png"
        src.write_text(source)
        proc = subprocess.run(
            [sys.executable, "-m", "diagramforge.sandbox.fallback_cli",
             "--language", language, "--input", str(src),
             "--output", str(out), "--dpi", "96"],
            capture_output=True, text=True, timeout=timeout,
        )
        return proc, out

    def test_dot_success(self, tmp_path):
        proc, out = self.run_cli("dot", "digraph { a -> b; }", tmp_path)
        assert proc.returncode == 0
        assert out.exists()

    def test_dot_error_to_stderr(self, tmp_path):
        proc, out = self.run_cli("dot", "digraph { a -> }", tmp_path)
        assert proc.returncode == 1
        assert "syntax error" in proc.stderr
        assert not out.exists()

    def test_tex_success_banner(self, tmp_path):
        doc = ("\\documentclass{standalone}\\begin{document}"
               "\\begin{tikzpicture}\\node (a) {A};\\end{tikzpicture}"
               "\\end{document}")
        proc, out = self.run_cli("tex", doc, tmp_path)
        assert proc.returncode == 0
        assert "Output written on" in proc.stdout
        assert out.exists()

    def test_tex_error_log(self, tmp_path):
        doc = "\\documentclass{standalone}\\begin{document}\\nope\\end{document}"
        proc, out = self.run_cli("tex", doc, tmp_path)
        assert proc.returncode == 1
        assert "! Undefined control sequence" in proc.stdout

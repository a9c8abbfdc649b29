"""Bundled TeX/TikZ engine used when no system LaTeX toolchain is available.

Validates document structure and control sequences against a known-command
set, and renders a deterministic PNG from a TikZ drawing subset (nodes,
draw paths, rectangles, circles). Errors are logged in TeX's format so the
debug loop and log parser behave identically against a real engine:

    ! Undefined control sequence.
    l.12 \\drw (0,0) -- (1,1);
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from PIL import Image, ImageColor, ImageDraw

CM_PER_INCH = 2.54


class TexInfiniteLoop(Exception):
    """Raised (by callers that opt in) instead of actually spinning."""


@dataclass
class TexError:
    message: str
    line: int
    context: str

    def log_lines(self) -> list[str]:
        return [f"! {self.message}", f"l.{self.line} {self.context.strip()}"]


_COMMAND_RE = re.compile(r"\\([A-Za-z@]+)")
_BEGIN_END_RE = re.compile(r"\\(begin|end)\s*\{([^}]*)\}")
_NEWCMD_RE = re.compile(r"\\(?:re)?newcommand\*?\s*\{?\\([A-Za-z@]+)\}?|\\def\s*\\([A-Za-z@]+)")

_KNOWN_COMMANDS = {
    # document and text layer
    "documentclass", "usepackage", "usetikzlibrary", "pgfplotsset", "begin", "end",
    "newcommand", "renewcommand", "providecommand", "def", "relax", "par", "noindent",
    "title", "author", "date", "maketitle", "section", "subsection", "subsubsection",
    "paragraph", "item", "label", "ref", "cite", "caption", "centering", "raggedright",
    "includegraphics", "vspace", "hspace", "quad", "qquad", "smallskip", "medskip",
    "bigskip", "clearpage", "newpage", "textbf", "textit", "texttt", "textsc", "emph",
    "underline", "overline", "tiny", "scriptsize", "footnotesize", "small",
    "normalsize", "large", "Large", "LARGE", "huge", "Huge", "textwidth", "linewidth",
    "columnwidth", "textheight", "hline", "toprule", "midrule", "bottomrule",
    "multicolumn", "multirow", "resizebox", "scalebox", "rotatebox", "verb", "url",
    "href", "text", "mathrm", "mathbf", "mathit", "mathsf", "mathcal", "mathbb",
    "frac", "sqrt", "sum", "prod", "int", "lim", "min", "max", "exp", "log", "ln",
    "sin", "cos", "tan", "cdot", "times", "pm", "mp", "infty", "leq", "geq", "neq",
    "approx", "equiv", "partial", "nabla", "hat", "bar", "vec", "dot", "ddot",
    "prime", "left", "right", "langle", "rangle", "ldots", "cdots", "dots",
    "alpha", "beta", "gamma", "delta", "epsilon", "varepsilon", "zeta", "eta",
    "theta", "iota", "kappa", "lambda", "mu", "nu", "xi", "rho", "sigma", "tau",
    "upsilon", "phi", "varphi", "chi", "psi", "omega", "Gamma", "Delta", "Theta",
    "Lambda", "Xi", "Pi", "Sigma", "Upsilon", "Phi", "Psi", "Omega", "pi",
    "rightarrow", "leftarrow", "Rightarrow", "Leftarrow", "leftrightarrow", "to",
    "mapsto", "color", "textcolor", "definecolor", "colorbox", "fcolorbox",
    "rowcolor", "cellcolor", "phantom", "vphantom", "hphantom", "displaystyle",
    "tabularnewline", "arraystretch", "renewenvironment", "newenvironment",
    "setlength", "addtolength", "parindent", "parskip", "baselineskip", "strut",
    "textasciitilde", "textbackslash", "ensuremath", "operatorname", "boldsymbol",
    # drawing layer
    "draw", "fill", "filldraw", "shade", "shadedraw", "path", "node", "coordinate",
    "clip", "foreach", "matrix", "edge", "graph", "vertex", "pic", "scoped",
    "useasboundingbox", "addplot", "addlegendentry", "legend", "nextgroupplot",
    "tikzstyle", "tikzset", "tikz", "datavisualization",
    # conditionals and loops
    "loop", "repeat", "iftrue", "iffalse", "ifnum", "ifdim", "ifx", "else", "fi",
    "advance", "count", "newcount", "the",
}
_KNOWN_PREFIXES = ("pgf", "tikz", "if")

_KNOWN_ENVIRONMENTS = {
    "document", "tikzpicture", "axis", "scope", "figure", "center", "table",
    "tabular", "itemize", "enumerate", "description", "equation", "align",
    "matrix", "array", "cases", "groupplot", "minipage", "abstract", "quote",
    "verbatim", "loglogaxis", "semilogxaxis", "semilogyaxis", "polaraxis",
}


def _strip_comments(line: str) -> str:
    out = []
    i = 0
    while i < len(line):
        ch = line[i]
        if ch == "\\" and i + 1 < len(line):
            out.append(line[i:i + 2])
            i += 2
            continue
        if ch == "%":
            break
        out.append(ch)
        i += 1
    return "".join(out)


def _defined_commands(source: str) -> set[str]:
    defined = set()
    for m in _NEWCMD_RE.finditer(source):
        defined.add(m.group(1) or m.group(2))
    return defined


def validate(source: str, max_errors: int = 10) -> list[TexError]:
    """Structural and control-sequence validation; empty list means clean."""
    errors: list[TexError] = []
    lines = source.split("\n")
    stripped = [_strip_comments(ln) for ln in lines]
    clean = "\n".join(stripped)
    defined = _defined_commands(clean)

    if "\\begin{document}" not in clean:
        context = stripped[0] if stripped else ""
        errors.append(TexError("LaTeX Error: Missing \\begin{document}.", 1, context))
        return errors

    env_stack: list[tuple[str, int]] = []
    doc_ended = False
    for lineno, text in enumerate(stripped, start=1):
        for m in _BEGIN_END_RE.finditer(text):
            kind, env = m.group(1), m.group(2).strip()
            if kind == "begin":
                env_stack.append((env, lineno))
            else:
                if not env_stack:
                    errors.append(TexError(
                        f"LaTeX Error: \\end{{{env}}} without matching \\begin.",
                        lineno, text))
                    continue
                open_env, _open_line = env_stack.pop()
                if open_env != env:
                    errors.append(TexError(
                        f"LaTeX Error: \\begin{{{open_env}}} on input line "
                        f"{_open_line} ended by \\end{{{env}}}.",
                        lineno, text))
                if env == "document":
                    doc_ended = True
        for m in _COMMAND_RE.finditer(text):
            name = m.group(1)
            if name in _KNOWN_COMMANDS or name in defined:
                continue
            if any(name.startswith(p) for p in _KNOWN_PREFIXES):
                continue
            errors.append(TexError("Undefined control sequence.", lineno,
                                   text[m.start():m.start() + 60] or text))
            if len(errors) >= max_errors:
                return errors
        if len(errors) >= max_errors:
            return errors

    if env_stack:
        env, lineno = env_stack[-1]
        errors.append(TexError(
            f"Emergency stop. \\begin{{{env}}} is never ended.",
            len(stripped), stripped[-1] if stripped else ""))
    elif not doc_ended:
        errors.append(TexError(
            "Emergency stop. Missing \\end{document}.",
            len(stripped), stripped[-1] if stripped else ""))
    return errors


_LOOP_RE = re.compile(r"\\loop\b(.*?)\\repeat\b", re.DOTALL)


def has_infinite_loop(source: str) -> bool:
    """A \\loop body with no conditional never terminates."""
    for m in _LOOP_RE.finditer(source):
        if "\\if" not in m.group(1):
            return True
    # \loop without \repeat keeps TeX reading forever too
    return "\\loop" in source and "\\repeat" not in source


# --- TikZ subset rendering -------------------------------------------------

@dataclass
class TikzNode:
    name: Optional[str]
    x: float
    y: float
    label: str
    opts: list[str] = field(default_factory=list)


@dataclass
class TikzPath:
    points: list[tuple[float, float]]
    opts: list[str] = field(default_factory=list)
    kind: str = "line"  # line | rectangle | circle
    radius: float = 0.0


_COORD_RE = re.compile(r"\(\s*(-?\d+(?:\.\d+)?)\s*,\s*(-?\d+(?:\.\d+)?)\s*\)")
_NAME_COORD_RE = re.compile(r"\(\s*([A-Za-z][\w.]*)\s*\)")
_NODE_RE = re.compile(
    r"\\node\s*(?:\[(?P<opts1>[^\]]*)\])?\s*(?:\((?P<name>[\w.]+)\))?\s*"
    r"(?:\[(?P<opts2>[^\]]*)\])?\s*(?:at\s*\(\s*(?P<x>-?\d+(?:\.\d+)?)\s*,"
    r"\s*(?P<y>-?\d+(?:\.\d+)?)\s*\))?\s*\{(?P<label>[^{}]*)\}"
)


def _split_statements(body: str) -> list[str]:
    stmts, depth, buf = [], 0, []
    for ch in body:
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
        if ch == ";" and depth == 0:
            stmts.append("".join(buf).strip())
            buf = []
        else:
            buf.append(ch)
    tail = "".join(buf).strip()
    if tail:
        stmts.append(tail)
    return stmts


def _parse_opts(stmt: str) -> list[str]:
    m = re.search(r"\[([^\]]*)\]", stmt)
    if not m:
        return []
    return [p.strip() for p in m.group(1).split(",") if p.strip()]


def parse_tikz(body: str) -> tuple[list[TikzNode], list[TikzPath]]:
    nodes: list[TikzNode] = []
    paths: list[TikzPath] = []
    named: dict[str, tuple[float, float]] = {}
    auto_x = 0.0
    for stmt in _split_statements(body):
        if stmt.startswith("\\node") or stmt.startswith("\\coordinate"):
            m = _NODE_RE.search(stmt)
            if not m:
                continue
            if m.group("x") is not None:
                x, y = float(m.group("x")), float(m.group("y"))
            else:
                x, y = auto_x, 0.0
                auto_x += 3.0
            opts = [p.strip() for p in (m.group("opts1") or m.group("opts2") or "").split(",")
                    if p.strip()]
            node = TikzNode(m.group("name"), x, y, m.group("label"), opts)
            nodes.append(node)
            if node.name:
                named[node.name] = (x, y)
        elif stmt.startswith(("\\draw", "\\fill", "\\filldraw", "\\path", "\\shade")):
            opts = _parse_opts(stmt)
            # resolve coordinates, both literal and named
            pts: list[tuple[float, float]] = []
            for m in re.finditer(r"\(([^()]*)\)", stmt):
                inner = m.group(1).strip()
                cm = _COORD_RE.match("(%s)" % inner)
                if cm:
                    pts.append((float(cm.group(1)), float(cm.group(2))))
                elif inner in named:
                    pts.append(named[inner])
            if not pts:
                continue
            if "rectangle" in stmt and len(pts) >= 2:
                paths.append(TikzPath(pts[:2], opts, kind="rectangle"))
            elif "circle" in stmt:
                rm = re.search(r"circle\s*(?:\(\s*(-?\d+(?:\.\d+)?)\s*(?:cm)?\s*\)|"
                               r"\[radius=(-?\d+(?:\.\d+)?)(?:cm)?\])", stmt)
                radius = float(rm.group(1) or rm.group(2)) if rm else 0.5
                paths.append(TikzPath(pts[:1], opts, kind="circle", radius=radius))
            elif len(pts) >= 2:
                paths.append(TikzPath(pts, opts, kind="line"))
    return nodes, paths


def _opt_color(opts: list[str]) -> str:
    for opt in opts:
        token = opt.split("=")[-1].strip() if opt.startswith("color") else opt
        try:
            ImageColor.getrgb(token)
            return token
        except ValueError:
            continue
    return "black"


_TIKZ_ENV_RE = re.compile(r"\\begin\{tikzpicture\}(?:\[[^\]]*\])?(.*?)\\end\{tikzpicture\}",
                          re.DOTALL)


def render(source: str, dpi: int = 150) -> Image.Image:
    """Renders the first tikzpicture; text-only documents get a text canvas."""
    unit = dpi / CM_PER_INCH  # pixels per TikZ cm
    margin = dpi * 0.3
    bodies = _TIKZ_ENV_RE.findall(source)
    nodes: list[TikzNode] = []
    paths: list[TikzPath] = []
    for body in bodies:
        n, p = parse_tikz(body)
        nodes.extend(n)
        paths.extend(p)

    xs = [n.x for n in nodes] + [pt[0] for path in paths for pt in path.points]
    ys = [n.y for n in nodes] + [pt[1] for path in paths for pt in path.points]
    if not xs:
        xs, ys = [0.0, 4.0], [0.0, 3.0]
    min_x, max_x = min(xs), max(xs)
    min_y, max_y = min(ys), max(ys)

    width = max(int((max_x - min_x) * unit + 2 * margin), int(dpi * 2.0))
    height = max(int((max_y - min_y) * unit + 2 * margin), int(dpi * 1.5))

    def to_px(x: float, y: float) -> tuple[float, float]:
        return (margin + (x - min_x) * unit, height - margin - (y - min_y) * unit)

    img = Image.new("RGB", (width, height), "white")
    draw = ImageDraw.Draw(img)
    line_w = max(1, int(dpi / 90))

    for path in paths:
        color = _opt_color(path.opts)
        dashed = "dashed" in path.opts or "dotted" in path.opts
        if path.kind == "rectangle":
            (x0, y0), (x1, y1) = to_px(*path.points[0]), to_px(*path.points[1])
            box = [min(x0, x1), min(y0, y1), max(x0, x1), max(y0, y1)]
            draw.rectangle(box, outline=color, width=line_w)
        elif path.kind == "circle":
            cx, cy = to_px(*path.points[0])
            r = path.radius * unit
            draw.ellipse([cx - r, cy - r, cx + r, cy + r], outline=color, width=line_w)
        else:
            px = [to_px(x, y) for x, y in path.points]
            for p0, p1 in zip(px, px[1:]):
                if dashed:
                    _dashed(draw, p0, p1, color, line_w)
                else:
                    draw.line([p0, p1], fill=color, width=line_w)
            if "->" in path.opts:
                _arrow(draw, px[-2], px[-1], color, dpi)

    for node in nodes:
        cx, cy = to_px(node.x, node.y)
        label = node.label
        boxed = any(o in ("draw", "rectangle", "circle") or o.startswith("draw")
                    for o in node.opts)
        if boxed and label:
            bbox = draw.textbbox((0, 0), label)
            w = bbox[2] - bbox[0] + dpi * 0.12
            h = bbox[3] - bbox[1] + dpi * 0.10
            draw.rectangle([cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2],
                           outline=_opt_color(node.opts), width=line_w, fill="white")
        if label:
            bbox = draw.textbbox((0, 0), label)
            draw.text((cx - (bbox[2] - bbox[0]) / 2, cy - (bbox[3] - bbox[1]) / 2),
                      label, fill="black")

    if not nodes and not paths:
        # text-only document: lay the visible text out line by line
        text_lines = [ln for ln in (_strip_comments(l) for l in source.split("\n"))
                      if ln.strip() and not ln.lstrip().startswith("\\")][:40]
        y = margin
        for ln in text_lines:
            draw.text((margin, y), ln.strip()[:120], fill="black")
            y += dpi * 0.14
    return img


def _dashed(draw, p0, p1, color, width):
    import math
    x0, y0 = p0
    x1, y1 = p1
    total = math.hypot(x1 - x0, y1 - y0)
    if total <= 0:
        return
    dash, gap = 7.0, 5.0
    t = 0.0
    while t < total:
        t2 = min(t + dash, total)
        draw.line([(x0 + (x1 - x0) * t / total, y0 + (y1 - y0) * t / total),
                   (x0 + (x1 - x0) * t2 / total, y0 + (y1 - y0) * t2 / total)],
                  fill=color, width=width)
        t = t2 + gap


def _arrow(draw, p0, p1, color, dpi):
    import math
    dx, dy = p1[0] - p0[0], p1[1] - p0[1]
    length = math.hypot(dx, dy)
    if length <= 0:
        return
    ux, uy = dx / length, dy / length
    size = dpi * 0.06
    left = (p1[0] - ux * size - uy * size * 0.5, p1[1] - uy * size + ux * size * 0.5)
    right = (p1[0] - ux * size + uy * size * 0.5, p1[1] - uy * size - ux * size * 0.5)
    draw.polygon([p1, left, right], fill=color)

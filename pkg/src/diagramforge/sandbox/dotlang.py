"""Bundled DOT renderer used when no system Graphviz binary is available.

Parses a practical subset of the DOT grammar (graph/digraph, node and edge
statements, attribute lists, quoted identifiers, comments, flat subgraph
groups) and renders a deterministic PNG with a layered layout. Syntax errors
are reported in the same shape as the dot binary's stderr:

    Error: <stdin>: syntax error in line N near 'tok'
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional

from PIL import Image, ImageColor, ImageDraw


class DotSyntaxError(Exception):
    def __init__(self, line: int, near: str):
        super().__init__(f"Error: <stdin>: syntax error in line {line} near '{near}'")
        self.line = line
        self.near = near


@dataclass
class Token:
    kind: str  # id, op, punct, eof
    value: str
    line: int


_ID_RE = re.compile(r"[A-Za-z_\u0080-\uffff][A-Za-z0-9_\u0080-\uffff]*|-?(\.\d+|\d+(\.\d*)?)")


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i, line = 0, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            continue
        if text.startswith("//", i) or ch == "#":
            j = text.find("\n", i)
            i = n if j < 0 else j
            continue
        if text.startswith("/*", i):
            j = text.find("*/", i + 2)
            if j < 0:
                raise DotSyntaxError(line, "/*")
            line += text.count("\n", i, j)
            i = j + 2
            continue
        if ch == '"':
            j = i + 1
            buf = []
            while j < n:
                if text[j] == "\\" and j + 1 < n:
                    buf.append(text[j + 1])
                    j += 2
                    continue
                if text[j] == '"':
                    break
                if text[j] == "\n":
                    line += 1
                buf.append(text[j])
                j += 1
            if j >= n:
                raise DotSyntaxError(line, '"')
            tokens.append(Token("id", "".join(buf), line))
            i = j + 1
            continue
        if text.startswith("->", i) or text.startswith("--", i):
            tokens.append(Token("op", text[i:i + 2], line))
            i += 2
            continue
        if ch in "{}[];,=":
            tokens.append(Token("punct", ch, line))
            i += 1
            continue
        m = _ID_RE.match(text, i)
        if m:
            tokens.append(Token("id", m.group(0), line))
            i = m.end()
            continue
        raise DotSyntaxError(line, ch)
    tokens.append(Token("eof", "", line))
    return tokens


@dataclass
class DotNode:
    name: str
    attrs: dict[str, str] = field(default_factory=dict)


@dataclass
class DotEdge:
    tail: str
    head: str
    attrs: dict[str, str] = field(default_factory=dict)


@dataclass
class DotGraph:
    directed: bool
    name: str = ""
    strict: bool = False
    nodes: dict[str, DotNode] = field(default_factory=dict)
    edges: list[DotEdge] = field(default_factory=list)
    graph_attrs: dict[str, str] = field(default_factory=dict)
    node_defaults: dict[str, str] = field(default_factory=dict)
    edge_defaults: dict[str, str] = field(default_factory=dict)


class Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def fail(self, tok: Token):
        raise DotSyntaxError(tok.line, tok.value or "end of input")

    def expect_punct(self, value: str) -> Token:
        tok = self.next()
        if tok.kind != "punct" or tok.value != value:
            self.fail(tok)
        return tok

    def parse(self) -> DotGraph:
        tok = self.next()
        strict = False
        if tok.kind == "id" and tok.value.lower() == "strict":
            strict = True
            tok = self.next()
        if tok.kind != "id" or tok.value.lower() not in ("graph", "digraph"):
            self.fail(tok)
        directed = tok.value.lower() == "digraph"
        graph = DotGraph(directed=directed, strict=strict)
        tok = self.peek()
        if tok.kind == "id":
            graph.name = self.next().value
        self.expect_punct("{")
        self.parse_stmts(graph)
        self.expect_punct("}")
        tok = self.next()
        if tok.kind != "eof":
            self.fail(tok)
        return graph

    def parse_stmts(self, graph: DotGraph) -> list[str]:
        mentioned: list[str] = []
        while True:
            tok = self.peek()
            if tok.kind == "punct" and tok.value == "}":
                return mentioned
            if tok.kind == "punct" and tok.value == ";":
                self.next()
                continue
            if tok.kind == "eof":
                self.fail(tok)
            mentioned.extend(self.parse_stmt(graph))

    def _ensure_node(self, graph: DotGraph, name: str) -> DotNode:
        node = graph.nodes.get(name)
        if node is None:
            node = DotNode(name, dict(graph.node_defaults))
            graph.nodes[name] = node
        return node

    def parse_stmt(self, graph: DotGraph) -> list[str]:
        tok = self.peek()
        if tok.kind == "punct" and tok.value == "{" or (
            tok.kind == "id" and tok.value.lower() == "subgraph"
        ):
            chain = [self.parse_group(graph)]
            name = None
        else:
            if tok.kind != "id":
                self.fail(tok)
            name = self.next().value
            lowered = name.lower()
            nxt = self.peek()
            if lowered in ("graph", "node", "edge") and nxt.kind == "punct" and nxt.value == "[":
                attrs = self.parse_attr_list()
                target = {
                    "graph": graph.graph_attrs,
                    "node": graph.node_defaults,
                    "edge": graph.edge_defaults,
                }[lowered]
                target.update(attrs)
                return []
            if nxt.kind == "punct" and nxt.value == "=":
                self.next()
                val = self.next()
                if val.kind != "id":
                    self.fail(val)
                graph.graph_attrs[name] = val.value
                return []
            chain = [[name]]
        while True:
            nxt = self.peek()
            if nxt.kind == "op":
                op = self.next()
                if graph.directed and op.value == "--":
                    self.fail(op)
                if not graph.directed and op.value == "->":
                    self.fail(op)
                endpoint = self.parse_endpoint(graph)
                chain.append(endpoint)
                continue
            break
        attrs: dict[str, str] = {}
        nxt = self.peek()
        if nxt.kind == "punct" and nxt.value == "[":
            attrs = self.parse_attr_list()
        if len(chain) == 1:
            if name is None:
                return chain[0]
            node = self._ensure_node(graph, name)
            node.attrs.update(attrs)
            return [name]
        mentioned = []
        for group in chain:
            for member in group:
                self._ensure_node(graph, member)
                mentioned.append(member)
        for tails, heads in zip(chain, chain[1:]):
            for t in tails:
                for h in heads:
                    edge_attrs = dict(graph.edge_defaults)
                    edge_attrs.update(attrs)
                    graph.edges.append(DotEdge(t, h, edge_attrs))
        return mentioned

    def parse_attr_list(self) -> dict[str, str]:
        attrs: dict[str, str] = {}
        while True:
            tok = self.peek()
            if not (tok.kind == "punct" and tok.value == "["):
                return attrs
            self.next()
            while True:
                tok = self.peek()
                if tok.kind == "punct" and tok.value == "]":
                    self.next()
                    break
                if tok.kind == "punct" and tok.value in (";", ","):
                    self.next()
                    continue
                key = self.next()
                if key.kind != "id":
                    self.fail(key)
                eq = self.peek()
                if eq.kind == "punct" and eq.value == "=":
                    self.next()
                    val = self.next()
                    if val.kind != "id":
                        self.fail(val)
                    attrs[key.value] = val.value
                else:
                    attrs[key.value] = "true"

    def parse_endpoint(self, graph: DotGraph) -> list[str]:
        tok = self.peek()
        if tok.kind == "punct" and tok.value == "{" or (
            tok.kind == "id" and tok.value.lower() == "subgraph"
        ):
            return self.parse_group(graph)
        tok = self.next()
        if tok.kind != "id":
            self.fail(tok)
        return [tok.value]

    def parse_group(self, graph: DotGraph) -> list[str]:
        tok = self.peek()
        if tok.kind == "id" and tok.value.lower() == "subgraph":
            self.next()
            if self.peek().kind == "id":
                self.next()  # subgraph name, layout-irrelevant here
        self.expect_punct("{")
        mentioned = self.parse_stmts(graph)
        self.expect_punct("}")
        return mentioned


def parse_dot(text: str) -> DotGraph:
    return Parser(tokenize(text)).parse()


# --- layout + raster -------------------------------------------------------

def _layers(graph: DotGraph) -> list[list[str]]:
    order = list(graph.nodes)
    succ: dict[str, list[str]] = {n: [] for n in order}
    indeg = {n: 0 for n in order}
    for e in graph.edges:
        if e.head not in succ[e.tail]:
            succ[e.tail].append(e.head)
            indeg[e.head] += 1
    depth = {n: 0 for n in order}
    roots = [n for n in order if indeg[n] == 0] or order[:1]
    # longest-path layering, cycle-safe via visit bound
    for _ in range(len(order)):
        changed = False
        for n in order:
            for m in succ[n]:
                if depth[m] < depth[n] + 1 and depth[n] + 1 < len(order):
                    depth[m] = depth[n] + 1
                    changed = True
        if not changed:
            break
    rows: dict[int, list[str]] = {}
    for n in order:
        rows.setdefault(depth[n], []).append(n)
    return [rows[k] for k in sorted(rows)]


def _color(value: Optional[str], fallback: str) -> str:
    if not value:
        return fallback
    try:
        ImageColor.getrgb(value)
        return value
    except ValueError:
        return fallback


def _dashed_line(draw, p0, p1, fill, width):
    x0, y0 = p0
    x1, y1 = p1
    total = math.hypot(x1 - x0, y1 - y0)
    if total <= 0:
        return
    dash, gap = 8.0, 5.0
    t = 0.0
    while t < total:
        t2 = min(t + dash, total)
        draw.line(
            [
                (x0 + (x1 - x0) * t / total, y0 + (y1 - y0) * t / total),
                (x0 + (x1 - x0) * t2 / total, y0 + (y1 - y0) * t2 / total),
            ],
            fill=fill,
            width=width,
        )
        t = t2 + gap


def render_dot(graph: DotGraph, dpi: int = 150) -> Image.Image:
    scale = dpi / 72.0
    node_w, node_h = 90 * scale, 40 * scale
    gap_x, gap_y = 40 * scale, 60 * scale
    margin = 30 * scale

    layers = _layers(graph) if graph.nodes else [[]]
    widest = max((len(row) for row in layers), default=1)
    width = int(2 * margin + widest * node_w + max(widest - 1, 0) * gap_x)
    height = int(2 * margin + len(layers) * node_h + max(len(layers) - 1, 0) * gap_y)
    width = max(width, int(260 * scale))
    height = max(height, int(200 * scale))

    centers: dict[str, tuple[float, float]] = {}
    for r, row in enumerate(layers):
        row_w = len(row) * node_w + max(len(row) - 1, 0) * gap_x
        x0 = (width - row_w) / 2
        y = margin + r * (node_h + gap_y) + node_h / 2
        for c, name in enumerate(row):
            centers[name] = (x0 + c * (node_w + gap_x) + node_w / 2, y)

    img = Image.new("RGB", (width, height), "white")
    draw = ImageDraw.Draw(img)

    line_w = max(1, int(scale))
    for edge in graph.edges:
        p0 = centers[edge.tail]
        p1 = centers[edge.head]
        color = _color(edge.attrs.get("color"), "black")
        if edge.attrs.get("style") == "dashed":
            _dashed_line(draw, p0, p1, color, line_w)
        else:
            draw.line([p0, p1], fill=color, width=line_w)
        if graph.directed:
            _arrow_head(draw, p0, p1, color, node_h, scale)

    for name, (cx, cy) in centers.items():
        node = graph.nodes[name]
        shape = node.attrs.get("shape", "ellipse")
        fill = _color(node.attrs.get("fillcolor"), "white")
        outline = _color(node.attrs.get("color"), "black")
        box = [cx - node_w / 2, cy - node_h / 2, cx + node_w / 2, cy + node_h / 2]
        if shape in ("box", "rect", "rectangle", "square"):
            draw.rectangle(box, fill=fill, outline=outline, width=line_w)
        else:
            draw.ellipse(box, fill=fill, outline=outline, width=line_w)
        label = node.attrs.get("label", name)
        _center_text(draw, cx, cy, label, scale)

    return img


def _arrow_head(draw, p0, p1, color, node_h, scale):
    dx, dy = p1[0] - p0[0], p1[1] - p0[1]
    length = math.hypot(dx, dy)
    if length <= 0:
        return
    ux, uy = dx / length, dy / length
    # tip sits at the target node border, not its center
    tip = (p1[0] - ux * node_h / 2, p1[1] - uy * node_h / 2)
    size = 8 * scale
    left = (tip[0] - ux * size - uy * size * 0.5, tip[1] - uy * size + ux * size * 0.5)
    right = (tip[0] - ux * size + uy * size * 0.5, tip[1] - uy * size - ux * size * 0.5)
    draw.polygon([tip, left, right], fill=color)


def _center_text(draw, cx, cy, text, scale):
    if not text:
        return
    bbox = draw.textbbox((0, 0), text)
    w, h = bbox[2] - bbox[0], bbox[3] - bbox[1]
    draw.text((cx - w / 2, cy - h / 2), text, fill="black")


def compile_dot(source: str, dpi: int = 150) -> Image.Image:
    """Parse and render; raises DotSyntaxError with a dot-style message."""
    return render_dot(parse_dot(source), dpi=dpi)

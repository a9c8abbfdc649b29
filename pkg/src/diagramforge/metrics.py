"""Code-similarity metrics and human-score aggregation.

All metrics report percentages in [0, 100]. The composite code metric and
the structural-similarity fallback chain are adapted to LaTeX/DOT via a
lightweight structural parse (environment/command tree for LaTeX, statement
tree for DOT); reports flag when the parse fell back to line-set matching.
"""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from .errors import EmptyBatch, EmptyInput, LanguageMismatch, MalformedSheet
from .types import CompileOutcome, DiagramCode, Language

# --- tokenization ----------------------------------------------------------

_TOKEN_RE = re.compile(r"\\[A-Za-z@]+\*?|->|--|[A-Za-z0-9_.]+|\S")


def tokenize_code(text: str) -> list[str]:
    """Whitespace/punctuation split keeping commands, arrows, braces whole."""
    return _TOKEN_RE.findall(text)


DOT_KEYWORDS = {"graph", "digraph", "subgraph", "node", "edge", "strict", "->", "--"}


def is_keyword(token: str, language: Language) -> bool:
    if language is Language.LATEX:
        return token.startswith("\\")
    return token.lower() in DOT_KEYWORDS


# --- ROUGE-L ---------------------------------------------------------------

def _lcs_length(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0] * (len(b) + 1)
        for j, y in enumerate(b, start=1):
            if x == y:
                cur[j] = prev[j - 1] + 1
            else:
                cur[j] = max(prev[j], cur[j - 1])
        prev = cur
    return prev[-1]


def rouge_l(hyp: str, ref: str, beta: float = 1.2) -> float:
    hyp_tokens = tokenize_code(hyp)
    ref_tokens = tokenize_code(ref)
    if not hyp_tokens or not ref_tokens:
        raise EmptyInput("both sides must tokenize to something")
    lcs = _lcs_length(hyp_tokens, ref_tokens)
    if lcs == 0:
        return 0.0
    p = lcs / len(hyp_tokens)
    r = lcs / len(ref_tokens)
    f = (1 + beta * beta) * p * r / (r + beta * beta * p)
    return 100.0 * f


# --- edit distance ---------------------------------------------------------

def levenshtein(a: str, b: str) -> int:
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, y in enumerate(b, start=1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y))
        prev = cur
    return prev[-1]


def edit_distance(hyp: str, ref: str) -> float:
    """Normalized character edit distance in [0, 100]; lower is better."""
    if not ref:
        raise EmptyInput("reference must be non-empty")
    return 100.0 * levenshtein(hyp, ref) / max(len(hyp), len(ref))


# --- chrF ------------------------------------------------------------------

def _char_ngrams(text: str, n: int) -> Counter:
    chars = re.sub(r"\s+", "", text)
    return Counter(chars[i:i + n] for i in range(len(chars) - n + 1))


def chrf(hyp: str, ref: str, max_order: int = 6, beta: float = 2.0) -> float:
    if not hyp.strip() or not ref.strip():
        raise EmptyInput("both sides must be non-empty")
    precisions, recalls = [], []
    for n in range(1, max_order + 1):
        hgrams = _char_ngrams(hyp, n)
        rgrams = _char_ngrams(ref, n)
        htotal = sum(hgrams.values())
        rtotal = sum(rgrams.values())
        if htotal == 0 and rtotal == 0:
            continue  # order longer than both strings
        overlap = sum((hgrams & rgrams).values())
        precisions.append(overlap / htotal if htotal else 0.0)
        recalls.append(overlap / rtotal if rtotal else 0.0)
    if not precisions:
        return 0.0
    avg_p = sum(precisions) / len(precisions)
    avg_r = sum(recalls) / len(recalls)
    denom = beta * beta * avg_p + avg_r
    if denom == 0:
        return 0.0
    return 100.0 * (1 + beta * beta) * avg_p * avg_r / denom


# --- structural parse trees ------------------------------------------------

@dataclass
class ParseNode:
    label: str
    children: list["ParseNode"] = field(default_factory=list)

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children)

    def serialize(self) -> str:
        if not self.children:
            return self.label
        return "%s(%s)" % (self.label, ",".join(c.serialize() for c in self.children))


_LATEX_STRUCT_RE = re.compile(r"\\(begin|end)\s*\{([^}]*)\}|\\([A-Za-z@]+)")


def parse_latex_tree(source: str) -> Optional[ParseNode]:
    root = ParseNode("latex")
    stack = [root]
    for m in _LATEX_STRUCT_RE.finditer(source):
        if m.group(1) == "begin":
            node = ParseNode("env:" + m.group(2).strip())
            stack[-1].children.append(node)
            stack.append(node)
        elif m.group(1) == "end":
            if len(stack) == 1 or stack[-1].label != "env:" + m.group(2).strip():
                return None
            stack.pop()
        else:
            stack[-1].children.append(ParseNode("cmd:" + m.group(3)))
    if len(stack) != 1:
        return None
    return root


def parse_dot_tree(source: str) -> Optional[ParseNode]:
    from .sandbox.dotlang import DotSyntaxError, parse_dot

    try:
        graph = parse_dot(source)
    except DotSyntaxError:
        return None
    root = ParseNode("digraph" if graph.directed else "graph")
    for name, node in graph.nodes.items():
        child = ParseNode("node:" + name)
        for key in sorted(node.attrs):
            child.children.append(ParseNode(f"attr:{key}={node.attrs[key]}"))
        root.children.append(child)
    for edge in graph.edges:
        child = ParseNode("edge", [ParseNode("t:" + edge.tail), ParseNode("h:" + edge.head)])
        for key in sorted(edge.attrs):
            child.children.append(ParseNode(f"attr:{key}={edge.attrs[key]}"))
        root.children.append(child)
    return root


def parse_structure(code: DiagramCode) -> Optional[ParseNode]:
    if code.language is Language.DOT:
        return parse_dot_tree(code.source)
    return parse_latex_tree(code.source)


def _subtree_multiset(tree: ParseNode) -> Counter:
    out: Counter = Counter()

    def walk(node: ParseNode):
        out[node.serialize()] += 1
        for c in node.children:
            walk(c)

    walk(tree)
    return out


def _multiset_f1(a: Counter, b: Counter) -> float:
    if not a and not b:
        return 1.0
    overlap = sum((a & b).values())
    if overlap == 0:
        return 0.0
    p = overlap / sum(a.values())
    r = overlap / sum(b.values())
    return 2 * p * r / (p + r)


# --- identifier definition/use pairs (dataflow stand-in) -------------------

_TIKZ_NODE_DEF_RE = re.compile(r"\\node[^;]*?\(([\w.]+)\)[^;]*?\{([^{}]*)\}")
_TIKZ_REF_RE = re.compile(r"\\(?:draw|path|fill|filldraw)[^;]*")
_NAME_IN_PAREN_RE = re.compile(r"\(\s*([A-Za-z][\w.]*)\s*\)")


def identifier_pairs(code: DiagramCode) -> Counter:
    pairs: Counter = Counter()
    if code.language is Language.DOT:
        from .sandbox.dotlang import DotSyntaxError, parse_dot

        try:
            graph = parse_dot(code.source)
        except DotSyntaxError:
            # degraded: bare identifier multiset
            for tok in tokenize_code(code.source):
                if re.fullmatch(r"[A-Za-z_]\w*", tok) and tok.lower() not in DOT_KEYWORDS:
                    pairs[("id", tok)] += 1
            return pairs
        for name, node in graph.nodes.items():
            pairs[("def", name)] += 1
            label = node.attrs.get("label")
            if label:
                pairs[("label", name, label)] += 1
        for edge in graph.edges:
            pairs[("use", edge.tail, edge.head)] += 1
        return pairs
    for m in _TIKZ_NODE_DEF_RE.finditer(code.source):
        pairs[("def", m.group(1))] += 1
        if m.group(2).strip():
            pairs[("label", m.group(1), m.group(2).strip())] += 1
    for stmt in _TIKZ_REF_RE.findall(code.source):
        names = _NAME_IN_PAREN_RE.findall(stmt)
        for a, b in zip(names, names[1:]):
            pairs[("use", a, b)] += 1
    return pairs


# --- BLEU components -------------------------------------------------------

def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(hyp_tokens: list[str], ref_tokens: list[str], max_order: int = 4) -> float:
    """4-gram BLEU with brevity penalty; zero-match orders are smoothed."""
    log_sum, orders = 0.0, 0
    for n in range(1, max_order + 1):
        hgrams = _ngrams(hyp_tokens, n)
        total = sum(hgrams.values())
        if total == 0:
            continue
        matches = sum((hgrams & _ngrams(ref_tokens, n)).values())
        p = matches / total if matches > 0 else 1.0 / (2.0 * total)
        log_sum += math.log(p)
        orders += 1
    if orders == 0:
        return 0.0
    geo = math.exp(log_sum / orders)
    if not hyp_tokens:
        return 0.0
    bp = 1.0 if len(hyp_tokens) >= len(ref_tokens) else math.exp(
        1 - len(ref_tokens) / len(hyp_tokens)
    )
    return bp * geo


def weighted_bleu(hyp_tokens: list[str], ref_tokens: list[str], language: Language,
                  keyword_weight: float = 5.0, max_order: int = 4) -> float:
    """BLEU where an n-gram starting with a language keyword weighs x5."""

    def weight(gram: tuple[str, ...]) -> float:
        return keyword_weight if is_keyword(gram[0], language) else 1.0

    log_sum, orders = 0.0, 0
    for n in range(1, max_order + 1):
        hgrams = _ngrams(hyp_tokens, n)
        if not hgrams:
            continue
        rgrams = _ngrams(ref_tokens, n)
        total = sum(weight(g) * c for g, c in hgrams.items())
        matches = sum(weight(g) * min(c, rgrams.get(g, 0)) for g, c in hgrams.items())
        p = matches / total if matches > 0 else 1.0 / (2.0 * total)
        log_sum += math.log(p)
        orders += 1
    if orders == 0:
        return 0.0
    geo = math.exp(log_sum / orders)
    bp = 1.0 if len(hyp_tokens) >= len(ref_tokens) else math.exp(
        1 - len(ref_tokens) / len(hyp_tokens)
    )
    return bp * geo


@dataclass
class CodeBleuBreakdown:
    ngram: float
    weighted_ngram: float
    syntax: float
    reference: float
    parse_fallback: bool

    @property
    def total(self) -> float:
        return 100.0 * 0.25 * (self.ngram + self.weighted_ngram
                               + self.syntax + self.reference)


def _line_set_f1(hyp: str, ref: str) -> float:
    a = Counter(ln.strip() for ln in hyp.split("\n") if ln.strip())
    b = Counter(ln.strip() for ln in ref.split("\n") if ln.strip())
    return _multiset_f1(a, b)


def code_bleu_breakdown(hyp: DiagramCode, ref: DiagramCode) -> CodeBleuBreakdown:
    if hyp.language is not ref.language:
        raise LanguageMismatch("cannot compare across languages")
    hyp_tokens = tokenize_code(hyp.source)
    ref_tokens = tokenize_code(ref.source)
    ngram = bleu(hyp_tokens, ref_tokens)
    weighted = weighted_bleu(hyp_tokens, ref_tokens, hyp.language)
    hyp_tree = parse_structure(hyp)
    ref_tree = parse_structure(ref)
    fallback = hyp_tree is None or ref_tree is None
    if fallback:
        syntax = _line_set_f1(hyp.source, ref.source)
    else:
        syntax = _multiset_f1(_subtree_multiset(hyp_tree), _subtree_multiset(ref_tree))
    reference = _multiset_f1(identifier_pairs(hyp), identifier_pairs(ref))
    return CodeBleuBreakdown(ngram, weighted, syntax, reference, fallback)


def code_bleu(hyp: DiagramCode, ref: DiagramCode) -> float:
    return code_bleu_breakdown(hyp, ref).total


# --- tree edit distance (Zhang-Shasha) and RUBY ----------------------------

def _postorder(tree: ParseNode) -> tuple[list[str], list[int]]:
    labels: list[str] = []
    lmd: list[int] = []  # leftmost descendant index per postorder node

    def walk(node: ParseNode) -> int:
        first = None
        for c in node.children:
            idx = walk(c)
            if first is None:
                first = idx
        labels.append(node.label)
        me = len(labels) - 1
        lmd.append(first if first is not None else me)
        return lmd[me]

    walk(tree)
    return labels, lmd


def tree_edit_distance(a: ParseNode, b: ParseNode) -> int:
    """Zhang-Shasha with unit insert/delete/relabel costs."""
    la, lmda = _postorder(a)
    lb, lmdb = _postorder(b)
    keyroots_a = _keyroots(lmda)
    keyroots_b = _keyroots(lmdb)
    n, m = len(la), len(lb)
    td = [[0] * m for _ in range(n)]

    for i in keyroots_a:
        for j in keyroots_b:
            _treedist(i, j, la, lb, lmda, lmdb, td)
    return td[n - 1][m - 1]


def _keyroots(lmd: list[int]) -> list[int]:
    seen: dict[int, int] = {}
    for i, l in enumerate(lmd):
        seen[l] = i
    return sorted(seen.values())


def _treedist(i, j, la, lb, lmda, lmdb, td):
    li, lj = lmda[i], lmdb[j]
    rows = i - li + 2
    cols = j - lj + 2
    fd = [[0] * cols for _ in range(rows)]
    for x in range(1, rows):
        fd[x][0] = fd[x - 1][0] + 1
    for y in range(1, cols):
        fd[0][y] = fd[0][y - 1] + 1
    for x in range(1, rows):
        for y in range(1, cols):
            ai = li + x - 1
            bj = lj + y - 1
            if lmda[ai] == li and lmdb[bj] == lj:
                cost = 0 if la[ai] == lb[bj] else 1
                fd[x][y] = min(fd[x - 1][y] + 1, fd[x][y - 1] + 1,
                               fd[x - 1][y - 1] + cost)
                td[ai][bj] = fd[x][y]
            else:
                px = lmda[ai] - li
                py = lmdb[bj] - lj
                fd[x][y] = min(fd[x - 1][y] + 1, fd[x][y - 1] + 1,
                               fd[px][py] + td[ai][bj])


@dataclass
class RubyResult:
    value: float
    tier: str  # tree | string


def ruby_breakdown(hyp: DiagramCode, ref: DiagramCode) -> RubyResult:
    if hyp.language is not ref.language:
        raise LanguageMismatch("cannot compare across languages")
    hyp_tree = parse_structure(hyp)
    ref_tree = parse_structure(ref)
    if hyp_tree is not None and ref_tree is not None:
        ted = tree_edit_distance(hyp_tree, ref_tree)
        denom = hyp_tree.size() + ref_tree.size()
        return RubyResult(100.0 * (1.0 - ted / denom), "tree")
    return RubyResult(100.0 - edit_distance(hyp.source, ref.source), "string")


def ruby(hyp: DiagramCode, ref: DiagramCode) -> float:
    return ruby_breakdown(hyp, ref).value


# --- batch metrics ---------------------------------------------------------

def pass_at_1(outcomes: list[CompileOutcome]) -> float:
    if not outcomes:
        raise EmptyBatch("need at least one outcome")
    ok = sum(1 for o in outcomes if o.ok)
    return 100.0 * ok / len(outcomes)


def aggregate_human(sheet: list[tuple[float, float, float]]) -> tuple[list[float], float]:
    """Per-item mean of the three rater scores, then the mean of means."""
    if not sheet:
        raise MalformedSheet("empty score sheet")
    means = []
    for i, item in enumerate(sheet):
        if len(item) != 3:
            raise MalformedSheet(f"item {i} needs exactly three scores")
        for s in item:
            if not 1 <= s <= 5:
                raise MalformedSheet(f"item {i} score {s} outside 1..5")
        means.append(sum(item) / 3.0)
    return means, sum(means) / len(means)

"""Matrix and tree file formats.

Matrices are read from CSV (labels in the first row and column) or square
PHYLIP (count on the first line, then one label and ``n`` values per row).
Trees are read and written as Newick.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

from .core import DissimilarityMatrix, Hierarchy, build_dissimilarity
from .errors import HeightOrderError, ParseError, UnknownKindError
from .ultrametric import HeightFunction

FORMATS = ("csv", "phylip")


def _float(token: str, line: int, column: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"not a number: {token!r}", line=line, column=column) from None


def parse_matrix_text(text: str, fmt: str = "csv", *, strict: bool = True) -> DissimilarityMatrix:
    if fmt == "csv":
        labels, rows = _parse_csv(text)
    elif fmt == "phylip":
        labels, rows = _parse_phylip(text)
    else:
        raise UnknownKindError(f"unknown matrix format {fmt!r}; expected csv or phylip", format=fmt)
    return build_dissimilarity(labels, rows, strict=strict)


def parse_matrix(path: "str | Path", fmt: str = "csv", *, strict: bool = True) -> DissimilarityMatrix:
    """Read a dissimilarity file and validate it."""
    return parse_matrix_text(Path(path).read_text(), fmt, strict=strict)


def _parse_csv(text: str):
    records = [(k + 1, r) for k, r in enumerate(csv.reader(text.splitlines())) if any(c.strip() for c in r)]
    if not records:
        raise ParseError("empty matrix file", line=1)
    _, header = records[0]
    labels = [c.strip() for c in header[1:]]
    n = len(labels)
    if len(records) - 1 != n:
        raise ParseError(f"header names {n} labels but {len(records) - 1} rows follow", line=records[-1][0])
    rows = []
    for k, (line, rec) in enumerate(records[1:]):
        if len(rec) != n + 1:
            raise ParseError(
                f"row {line} has {len(rec) - 1} values, expected {n}", line=line, column=len(rec)
            )
        if rec[0].strip() != labels[k]:
            raise ParseError(
                f"row {line} is labeled {rec[0].strip()!r}, expected {labels[k]!r}", line=line, column=1
            )
        rows.append([_float(tok.strip(), line, c + 2) for c, tok in enumerate(rec[1:])])
    return labels, rows


def _parse_phylip(text: str):
    lines = [(k + 1, ln.split()) for k, ln in enumerate(text.splitlines()) if ln.strip()]
    if not lines:
        raise ParseError("empty matrix file", line=1)
    first_line, first = lines[0]
    try:
        n = int(first[0])
    except ValueError:
        raise ParseError(f"expected the number of objects, got {first[0]!r}", line=first_line, column=1) from None
    if len(lines) - 1 != n:
        raise ParseError(f"declared {n} objects but found {len(lines) - 1} rows", line=lines[-1][0])
    labels, rows = [], []
    for line, toks in lines[1:]:
        if len(toks) != n + 1:
            raise ParseError(f"row {line} has {len(toks) - 1} values, expected {n}", line=line, column=len(toks))
        labels.append(toks[0])
        rows.append([_float(tok, line, c + 2) for c, tok in enumerate(toks[1:])])
    return labels, rows


def format_matrix_csv(D: DissimilarityMatrix) -> str:
    lines = ["," + ",".join(D.labels)]
    for lab, row in zip(D.labels, D.values):
        lines.append(lab + "," + ",".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"


def format_matrix_phylip(D: DissimilarityMatrix) -> str:
    lines = [str(D.n)]
    for lab, row in zip(D.labels, D.values):
        lines.append(lab + " " + " ".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Newick
# ---------------------------------------------------------------------------

_SPECIAL = set("()[]':;, \t\n")


def _quote(label: str) -> str:
    if label and not (_SPECIAL & set(label)):
        return label
    return "'" + label.replace("'", "''") + "'"


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def format_newick(
    T: Hierarchy,
    h: HeightFunction | None = None,
    M: float | None = None,
    *,
    allow_negative: bool = False,
) -> str:
    """Newick string for ``T``.

    With heights, each edge gets length parent height minus child height
    (leaves at height 0) and, when ``M`` is given, the root edge gets
    ``M - h(root)``. ``allow_negative`` skips the monotonicity check so
    estimated heights of a non-ultrametric fit can be written as they are.
    """
    if h is not None:
        h.check(T, monotone=not allow_negative)
        top = h[T.root] if T.n > 1 else 0.0
        if M is not None and not M > top:
            raise HeightOrderError(f"M={M} must exceed the root height {top}", M=M)
    lengths: list[float] = []

    def height(v: int) -> float:
        return 0.0 if T.is_leaf(v) else h[v]

    def emit(v: int, parent: int | None) -> str:
        if T.is_leaf(v):
            text = _quote(T.labels[v])
        else:
            a, b = T.kids(v)
            text = f"({emit(a, v)},{emit(b, v)})"
        if h is not None and parent is not None:
            length = h[parent] - height(v)
            lengths.append(length)
            text += ":" + _fmt(length)
        return text

    body = emit(T.root, None)
    if h is not None and M is not None:
        root_length = M - height(T.root)
        lengths.append(root_length)
        body += ":" + _fmt(root_length)
        # the emitted lengths telescope to M plus the sum of internal heights
        expected = M + math.fsum(h.heights.values())
        if abs(math.fsum(lengths) - expected) > 1e-9 * max(1.0, abs(expected)):
            raise AssertionError("emitted branch lengths do not add up to the total length")
    return body + ";"


def write_newick(
    T: Hierarchy,
    h: HeightFunction | None = None,
    M: float | None = None,
    path: "str | Path | None" = None,
    *,
    allow_negative: bool = False,
) -> str:
    """Format ``T`` as Newick and, if ``path`` is given, write it there."""
    text = format_newick(T, h, M, allow_negative=allow_negative)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


class _NewickReader:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message: str) -> ParseError:
        line = self.text.count("\n", 0, self.pos) + 1
        column = self.pos - (self.text.rfind("\n", 0, self.pos) + 1) + 1
        return ParseError(f"newick: {message}", line=line, column=column)

    def skip(self) -> None:
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch.isspace():
                self.pos += 1
            elif ch == "[":  # comment
                end = self.text.find("]", self.pos)
                if end < 0:
                    raise self.error("unterminated comment")
                self.pos = end + 1
            else:
                break

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def label(self) -> str:
        self.skip()
        if self.peek() == "'":
            out = []
            self.pos += 1
            while True:
                end = self.text.find("'", self.pos)
                if end < 0:
                    raise self.error("unterminated quoted label")
                out.append(self.text[self.pos:end])
                self.pos = end + 1
                if self.text.startswith("'", self.pos):
                    out.append("'")
                    self.pos += 1
                else:
                    return "".join(out)
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] not in _SPECIAL:
            self.pos += 1
        return self.text[start:self.pos]

    def length(self) -> None:
        if self.peek() == ":":
            self.pos += 1
            self.skip()
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos] not in _SPECIAL:
                self.pos += 1
            try:
                float(self.text[start:self.pos])
            except ValueError:
                raise self.error(f"bad branch length {self.text[start:self.pos]!r}") from None

    def node(self):
        if self.peek() == "(":
            self.pos += 1
            kids = [self.node()]
            while self.peek() == ",":
                self.pos += 1
                kids.append(self.node())
            if self.peek() != ")":
                raise self.error("expected ')'")
            self.pos += 1
            self.label()  # internal labels are ignored
            self.length()
            if len(kids) != 2:
                raise self.error(f"internal vertex with {len(kids)} children; only binary trees are accepted")
            return tuple(kids)
        name = self.label()
        if not name:
            raise self.error("missing leaf label")
        self.length()
        return name


def parse_newick(text: str) -> Hierarchy:
    """Parse a binary Newick tree; branch lengths are validated and discarded."""
    reader = _NewickReader(text)
    nested = reader.node()
    if reader.peek() != ";":
        raise reader.error("expected ';'")
    reader.pos += 1
    if reader.peek():
        raise reader.error("trailing characters after ';'")
    return Hierarchy.from_nested(nested)


def read_newick(path: "str | Path") -> Hierarchy:
    return parse_newick(Path(path).read_text())

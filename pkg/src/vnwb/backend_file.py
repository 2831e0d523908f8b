"""The ``vnwb-backend v1`` text format.

Example::

    vnwb-backend v1
    dims: 2
    weights: 1
    generator
      block
        (1) (0)
        (0) (0)
    sub: g1
    index: 4
    gallery: amplification d=2 m=2

Entries are scalar literals ``(a/b)`` or ``(a/b+c/d i)``, one matrix row per
line.  ``sub`` lists terms generating the subalgebra, ``index`` declares
``[M:N]``.  A ``gallery`` line names a built-in construction instead; the
matrix sections are then optional and ignored.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .algebra import MultiMatrixAlgebra
from .linalg import QMat
from .presentation import MatrixPresentation
from .scalar import format_scalar, parse_scalar
from .subfactor import Inclusion
from .terms import format_term, parse_term

HEADER = "vnwb-backend v1"


class BackendFormatError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass
class BackendSpec:
    dims: list = field(default_factory=list)
    weights: list | None = None
    generators: list = field(default_factory=list)  # list of tuples of QMat
    sub: list = field(default_factory=list)  # term strings
    index: Fraction | None = None
    gallery: str | None = None


_ENTRY = re.compile(r"\([^()]*\)")


def parse_backend(text: str) -> BackendSpec:
    lines = text.splitlines()
    if not lines or lines[0].strip() != HEADER:
        raise BackendFormatError(f"expected header {HEADER!r}", 1)
    spec = BackendSpec()
    cur_gen: list | None = None
    cur_block: list | None = None
    for n, raw in enumerate(lines[1:], start=2):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            if line.startswith("dims:"):
                spec.dims = [int(x) for x in line[5:].split()]
            elif line.startswith("weights:"):
                spec.weights = [Fraction(x) for x in line[8:].split()]
            elif line == "generator":
                cur_gen = []
                spec.generators.append(cur_gen)
                cur_block = None
            elif line == "block":
                if cur_gen is None:
                    raise BackendFormatError("block outside a generator", n)
                cur_block = []
                cur_gen.append(cur_block)
            elif line.startswith("sub:"):
                spec.sub = line[4:].split()
            elif line.startswith("index:"):
                spec.index = Fraction(line[6:].strip())
            elif line.startswith("gallery:"):
                spec.gallery = line[8:].strip()
            elif line.startswith("("):
                if cur_block is None:
                    raise BackendFormatError("matrix row outside a block", n)
                cur_block.append([parse_scalar(e[1:-1]) for e in _ENTRY.findall(line)])
            else:
                raise BackendFormatError(f"unrecognized line {line!r}", n)
        except (ValueError, ZeroDivisionError) as exc:
            if isinstance(exc, BackendFormatError):
                raise
            raise BackendFormatError(str(exc), n) from None
    if spec.gallery is None:
        if not spec.dims:
            raise BackendFormatError("missing dims", len(lines))
        gens = []
        for g in spec.generators:
            if len(g) != len(spec.dims):
                raise BackendFormatError("generator block count differs from dims", len(lines))
            blocks = []
            for rows, d in zip(g, spec.dims):
                if len(rows) != d or any(len(r) != d for r in rows):
                    raise BackendFormatError(f"block is not {d}x{d}", len(lines))
                blocks.append(QMat.from_rows(rows))
            gens.append(tuple(blocks))
        spec.generators = gens
    return spec


def format_backend(P: MatrixPresentation, sub=(), index=None, gallery: str | None = None) -> str:
    A = P.algebra
    out = [HEADER]
    if gallery:
        out.append(f"gallery: {gallery}")
    out.append("dims: " + " ".join(str(d) for d in A.dims))
    out.append("weights: " + " ".join(str(w) for w in A.weights))
    for g in P.generators:
        out.append("generator")
        for b in g:
            out.append("  block")
            for row in b.rows():
                out.append("    " + " ".join(format_scalar(x) for x in row))
    if sub:
        out.append("sub: " + " ".join(format_term(s).replace(" ", "") for s in sub))
    if index is not None:
        out.append(f"index: {index}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- gallery specs

def parse_gallery(spec: str) -> tuple[str, dict]:
    parts = spec.split()
    if not parts:
        raise ValueError("empty gallery spec")
    params = {}
    for p in parts[1:]:
        if "=" not in p:
            raise ValueError(f"gallery parameter {p!r} is not key=value")
        k, v = p.split("=", 1)
        params[k] = v
    return parts[0], params


def _cyclic_table(n: int) -> list[list[int]]:
    return [[(g + h) % n for h in range(n)] for g in range(n)]


def build_from_gallery(spec: str):
    """An ``Inclusion`` (or presentation / TLJ bundle) for a gallery spec line."""
    from . import gallery as G

    name, p = parse_gallery(spec)

    def geti(key, default):
        try:
            return int(p.get(key, default))
        except ValueError:
            raise ValueError(f"parameter {key} must be an integer") from None

    if name == "amplification":
        return G.build_amplification(G.AmplificationSpec(geti("d", 2), geti("m", 2)))
    if name == "crossed-product":
        d, n = geti("d", 2), geti("order", 2)
        if n != 2 and n != d:
            raise ValueError("crossed-product supports order 2 or order = d (cyclic shift)")
        table = _cyclic_table(n)
        if n == 2 and d != 2:
            return G.build_crossed_product(G.CrossedProductSpec(d, table))
        shift = QMat.from_rows([[1 if i == (j + 1) % d else 0 for j in range(d)] for i in range(d)])
        us = [QMat.identity(d)]
        for _ in range(1, n):
            us.append(us[-1] * shift)
        return G.build_crossed_product(G.CrossedProductSpec(d, table, us))
    if name == "fixed-point":
        d, n = geti("d", 2), geti("order", 2)
        table = _cyclic_table(n)
        return G.build_fixed_point(G.FixedPointSpec(d, n, table, table))
    if name == "truncated-r":
        return G.build_truncated_r(geti("n", 3))
    if name == "tlj":
        return G.build_tlj(geti("width", 4), Fraction(p.get("delta", "2")))
    raise ValueError(f"unknown gallery construction {name!r}")


def load_input(text: str):
    """Presentation or inclusion described by a backend file."""
    spec = parse_backend(text)
    if spec.gallery is not None:
        return build_from_gallery(spec.gallery)
    A = MultiMatrixAlgebra(spec.dims, spec.weights)
    P = MatrixPresentation(A, spec.generators, name="backend")
    for g in spec.generators:
        if not A.op_norm_le(g, 1):
            raise ValueError("generator images must be contractions")
    if spec.sub:
        subs = [parse_term(s, P.arity) for s in spec.sub]
        return Inclusion(P, subs, index=spec.index, name="backend", priority=("backend",))
    return P

"""Reading and writing MIP instances in MPS format."""

from __future__ import annotations

import gzip
import logging
import math
import os
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable, Mapping, Sequence

logger = logging.getLogger(__name__)

LE, EQ, GE = "<=", "=", ">="
_ROW_TYPES = {"L": LE, "E": EQ, "G": GE}
_SECTIONS = {"NAME", "OBJSENSE", "OBJSENS", "OBJNAME", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "ENDATA"}
_UNSUPPORTED = {"SOS", "QUADOBJ", "QMATRIX", "QSECTION", "QCMATRIX", "CSECTION", "INDICATORS", "GENERAL", "PWLOBJ"}


class MPSError(ValueError):
    """Raised for malformed MPS input."""


class MPSUnsupportedError(MPSError):
    """Raised for MPS features this reader deliberately does not handle."""


@dataclass(frozen=True, eq=True)
class MipInstance:
    """A MIP in sparse canonical form.

    ``rows[i]`` maps variable index to the nonzero coefficient ``A[i, j]``;
    ``objective`` maps variable index to the nonzero ``c[j]``. Senses are
    one of ``"<="``, ``"="``, ``">="``.
    """

    name: str
    objective: Mapping[int, float]
    rows: tuple[Mapping[int, float], ...]
    rhs: tuple[float, ...]
    sense: tuple[str, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    is_integer: tuple[bool, ...]
    var_names: tuple[str, ...]
    row_names: tuple[str, ...]
    objective_sense: str = "min"
    objective_offset: float = 0.0

    def __post_init__(self):
        n, m = len(self.var_names), len(self.row_names)
        for label, seq, size in (
            ("lower", self.lower, n),
            ("upper", self.upper, n),
            ("is_integer", self.is_integer, n),
            ("rows", self.rows, m),
            ("rhs", self.rhs, m),
            ("sense", self.sense, m),
        ):
            if len(seq) != size:
                raise ValueError(f"{label} has length {len(seq)}, expected {size}")
        if len(set(self.var_names)) != n:
            raise ValueError("variable names are not unique")
        if len(set(self.row_names)) != m:
            raise ValueError("row names are not unique")
        if self.objective_sense not in ("min", "max"):
            raise ValueError(f"objective_sense must be 'min' or 'max', got {self.objective_sense!r}")
        for s in self.sense:
            if s not in (LE, EQ, GE):
                raise ValueError(f"unknown constraint sense {s!r}")
        for where, entries in [("objective", self.objective)] + [
            (f"row {i}", row) for i, row in enumerate(self.rows)
        ]:
            for j, v in entries.items():
                if not 0 <= j < n:
                    raise ValueError(f"{where} references variable {j} outside 0..{n - 1}")
                if v == 0:
                    raise ValueError(f"{where} stores an explicit zero for variable {j}")

    @property
    def n(self) -> int:
        return len(self.var_names)

    @property
    def m(self) -> int:
        return len(self.row_names)

    @cached_property
    def columns(self) -> tuple[dict[int, float], ...]:
        """Column-major view: ``columns[j]`` maps row index to ``A[i, j]``."""
        cols: list[dict[int, float]] = [{} for _ in range(self.n)]
        for i, row in enumerate(self.rows):
            for j, v in row.items():
                cols[j][i] = v
        return tuple(cols)

    @property
    def integer_indices(self) -> tuple[int, ...]:
        return tuple(j for j, flag in enumerate(self.is_integer) if flag)

    def coefficient(self, i: int, j: int) -> float:
        return coefficient(self, i, j)

    @classmethod
    def from_dense(
        cls,
        A: Sequence[Sequence[float]],
        b: Sequence[float],
        c: Sequence[float],
        *,
        sense: Sequence[str] | None = None,
        lower: Sequence[float] | None = None,
        upper: Sequence[float] | None = None,
        is_integer: Sequence[bool] | None = None,
        name: str = "dense",
        objective_sense: str = "min",
    ) -> "MipInstance":
        """Build an instance from dense data, dropping zero coefficients."""
        m, n = len(b), len(c)
        rows = []
        for i in range(m):
            if len(A[i]) != n:
                raise ValueError(f"row {i} of A has length {len(A[i])}, expected {n}")
            rows.append({j: float(v) for j, v in enumerate(A[i]) if v != 0})
        if len(A) != m:
            raise ValueError(f"A has {len(A)} rows, b has {m} entries")
        return cls(
            name=name,
            objective={j: float(v) for j, v in enumerate(c) if v != 0},
            rows=tuple(rows),
            rhs=tuple(float(v) for v in b),
            sense=tuple(sense) if sense is not None else (LE,) * m,
            lower=tuple(float(v) for v in lower) if lower is not None else (0.0,) * n,
            upper=tuple(float(v) for v in upper) if upper is not None else (math.inf,) * n,
            is_integer=tuple(bool(v) for v in is_integer) if is_integer is not None else (True,) * n,
            var_names=tuple(f"x{j + 1}" for j in range(n)),
            row_names=tuple(f"c{i + 1}" for i in range(m)),
            objective_sense=objective_sense,
        )


def coefficient(mip: MipInstance, i: int, j: int) -> float:
    """Return ``A[i, j]``, with 0 for entries absent from the sparse rows."""
    if not 0 <= i < mip.m:
        raise IndexError(f"row index {i} out of range 0..{mip.m - 1}")
    if not 0 <= j < mip.n:
        raise IndexError(f"variable index {j} out of range 0..{mip.n - 1}")
    return mip.rows[i].get(j, 0.0)


# -- parsing -----------------------------------------------------------------


def _fixed_fields(line: str) -> list[str]:
    padded = line.ljust(61)
    spans = ((1, 3), (4, 12), (14, 22), (24, 36), (39, 47), (49, 61))
    fields = [padded[a:b].strip() for a, b in spans]
    return [f for f in fields if f]


def _number(token: str, lineno: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise MPSError(f"line {lineno}: expected a number, got {token!r}") from None


class _Builder:
    def __init__(self):
        self.name = ""
        self.objective_sense = "min"
        self.obj_row: str | None = None
        self.dropped_rows: set[str] = set()
        self.row_index: dict[str, int] = {}
        self.row_names: list[str] = []
        self.row_sense: list[str] = []
        self.var_index: dict[str, int] = {}
        self.var_names: list[str] = []
        self.is_integer: list[bool] = []
        self.entries: dict[tuple[int, int], float] = {}
        self.objective: dict[int, float] = {}
        self.rhs: dict[int, float] = {}
        self.ranges: dict[int, float] = {}
        self.objective_offset = 0.0
        self.lower: dict[int, float] = {}
        self.upper: dict[int, float] = {}
        self.integer_marker = False

    def add_row(self, kind: str, name: str, lineno: int):
        kind = kind.upper()
        if name in self.row_index or name == self.obj_row or name in self.dropped_rows:
            raise MPSError(f"line {lineno}: duplicate row {name!r}")
        if kind == "N":
            if self.obj_row is None:
                self.obj_row = name
            else:
                logger.warning("dropping free row %r (only the first N row is the objective)", name)
                self.dropped_rows.add(name)
            return
        if kind not in _ROW_TYPES:
            raise MPSError(f"line {lineno}: unknown row type {kind!r}")
        self.row_index[name] = len(self.row_names)
        self.row_names.append(name)
        self.row_sense.append(_ROW_TYPES[kind])

    def var(self, name: str, lineno: int, create: bool = False) -> int:
        if name not in self.var_index:
            if not create:
                raise MPSError(f"line {lineno}: unknown column {name!r}")
            self.var_index[name] = len(self.var_names)
            self.var_names.append(name)
            self.is_integer.append(self.integer_marker)
        return self.var_index[name]

    def add_entry(self, j: int, row: str, value: float, lineno: int):
        if row in self.dropped_rows:
            return
        if row == self.obj_row:
            key = (-1, j)
        elif row in self.row_index:
            key = (self.row_index[row], j)
        else:
            raise MPSError(f"line {lineno}: unknown row {row!r}")
        if key in self.entries:
            raise MPSError(f"line {lineno}: duplicate entry for column {self.var_names[j]!r}, row {row!r}")
        self.entries[key] = value

    def set_rhs(self, row: str, value: float, lineno: int, target: dict[int, float], label: str):
        if row in self.dropped_rows:
            return
        if row == self.obj_row:
            if label == "RANGES":
                raise MPSError(f"line {lineno}: RANGES entry on the objective row")
            self.objective_offset = -value
            return
        if row not in self.row_index:
            raise MPSError(f"line {lineno}: unknown row {row!r}")
        i = self.row_index[row]
        if i in target:
            raise MPSError(f"line {lineno}: duplicate {label} entry for row {row!r}")
        target[i] = value

    def set_bound(self, kind: str, col: str, value: float | None, lineno: int):
        j = self.var(col, lineno)
        kind = kind.upper()
        needs_value = kind in ("UP", "LO", "FX", "LI", "UI")
        if needs_value and value is None:
            raise MPSError(f"line {lineno}: bound type {kind} needs a value")
        if kind == "UP":
            if value < 0 and j not in self.lower:
                logger.warning("negative upper bound on %r with default lower bound; lower set to -inf", col)
                self.lower[j] = -math.inf
            self.upper[j] = value
        elif kind == "LO":
            self.lower[j] = value
        elif kind == "FX":
            self.lower[j] = self.upper[j] = value
        elif kind == "FR":
            self.lower[j], self.upper[j] = -math.inf, math.inf
        elif kind == "MI":
            self.lower[j] = -math.inf
        elif kind == "PL":
            self.upper[j] = math.inf
        elif kind == "BV":
            self.is_integer[j] = True
            self.lower[j], self.upper[j] = 0.0, 1.0
        elif kind == "LI":
            self.is_integer[j] = True
            self.lower[j] = value
        elif kind == "UI":
            self.is_integer[j] = True
            self.upper[j] = value
        elif kind == "SC":
            raise MPSUnsupportedError(f"line {lineno}: semi-continuous bounds are not supported")
        else:
            raise MPSError(f"line {lineno}: unknown bound type {kind!r}")

    def finish(self) -> MipInstance:
        if self.obj_row is None:
            logger.warning("no objective (N) row; objective taken as zero")
        rows: list[dict[int, float]] = [{} for _ in self.row_names]
        objective: dict[int, float] = {}
        for (i, j), v in sorted(self.entries.items()):
            if v == 0:
                continue
            if i < 0:
                objective[j] = v
            else:
                rows[i][j] = v
        names = list(self.row_names)
        senses = list(self.row_sense)
        rhs = [self.rhs.get(i, 0.0) for i in range(len(names))]
        for i, r in sorted(self.ranges.items()):
            # expanded into a lower-side and an upper-side row
            b = rhs[i]
            if senses[i] == GE:
                lo, hi = b, b + abs(r)
            elif senses[i] == LE:
                lo, hi = b - abs(r), b
            else:
                lo, hi = (b, b + r) if r > 0 else (b + r, b)
            senses[i], rhs[i] = GE, lo
            names.append(f"{names[i]}_rng")
            senses.append(LE)
            rhs.append(hi)
            rows.append(dict(rows[i]))
        n = len(self.var_names)
        return MipInstance(
            name=self.name,
            objective=objective,
            rows=tuple(rows),
            rhs=tuple(rhs),
            sense=tuple(senses),
            lower=tuple(self.lower.get(j, 0.0) for j in range(n)),
            upper=tuple(self.upper.get(j, math.inf) for j in range(n)),
            is_integer=tuple(self.is_integer),
            var_names=tuple(self.var_names),
            row_names=tuple(names),
            objective_sense=self.objective_sense,
            objective_offset=self.objective_offset,
        )


def _parse_lines(lines: Iterable[str], fixed: bool) -> MipInstance:
    b = _Builder()
    section = None
    seen_endata = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.startswith("*"):
            continue
        if not line[0].isspace():
            tokens = line.split()
            head = tokens[0].upper()
            if head in _UNSUPPORTED:
                raise MPSUnsupportedError(f"line {lineno}: section {tokens[0]} is not supported")
            if head not in _SECTIONS:
                raise MPSError(f"line {lineno}: malformed section header {line.strip()!r}")
            section = head
            if head == "NAME":
                b.name = line[4:].strip()
            elif head in ("OBJSENSE", "OBJSENS") and len(tokens) > 1:
                b.objective_sense = _objsense(tokens[1], lineno)
            elif head == "ENDATA":
                seen_endata = True
                break
            elif head in ("RHS", "RANGES", "BOUNDS", "COLUMNS", "ROWS") and len(tokens) > 1:
                raise MPSError(f"line {lineno}: malformed section header {line.strip()!r}")
            continue

        tokens = _fixed_fields(line) if fixed else line.split()
        if section is None or section == "NAME":
            raise MPSError(f"line {lineno}: data line outside any section")
        if section in ("OBJSENSE", "OBJSENS"):
            b.objective_sense = _objsense(tokens[0], lineno)
        elif section == "OBJNAME":
            continue
        elif section == "ROWS":
            if len(tokens) != 2:
                raise MPSError(f"line {lineno}: ROWS entry needs a type and a name")
            b.add_row(tokens[0], tokens[1], lineno)
        elif section == "COLUMNS":
            if len(tokens) >= 3 and tokens[1].strip("'\"").upper() == "MARKER":
                marker = tokens[2].strip("'\"").upper()
                if marker == "INTORG":
                    b.integer_marker = True
                elif marker == "INTEND":
                    b.integer_marker = False
                else:
                    raise MPSError(f"line {lineno}: unknown marker {tokens[2]!r}")
                continue
            if len(tokens) not in (3, 5):
                raise MPSError(f"line {lineno}: COLUMNS entry needs 3 or 5 fields")
            j = b.var(tokens[0], lineno, create=True)
            for k in range(1, len(tokens), 2):
                b.add_entry(j, tokens[k], _number(tokens[k + 1], lineno), lineno)
        elif section in ("RHS", "RANGES"):
            if len(tokens) % 2 == 1:
                tokens = tokens[1:]  # drop the set name
            if len(tokens) not in (2, 4):
                raise MPSError(f"line {lineno}: {section} entry has the wrong number of fields")
            target = b.rhs if section == "RHS" else b.ranges
            for k in range(0, len(tokens), 2):
                b.set_rhs(tokens[k], _number(tokens[k + 1], lineno), lineno, target, section)
        elif section == "BOUNDS":
            kind = tokens[0].upper()
            with_value = kind in ("UP", "LO", "FX", "LI", "UI", "SC")
            if with_value:
                if len(tokens) == 4:
                    col, val = tokens[2], tokens[3]
                elif len(tokens) == 3:
                    col, val = tokens[1], tokens[2]
                else:
                    raise MPSError(f"line {lineno}: BOUNDS entry has the wrong number of fields")
                b.set_bound(kind, col, _number(val, lineno), lineno)
            else:
                if len(tokens) == 2:
                    col = tokens[1]
                elif len(tokens) in (3, 4):
                    col = tokens[2]
                else:
                    raise MPSError(f"line {lineno}: BOUNDS entry has the wrong number of fields")
                b.set_bound(kind, col, None, lineno)
    if not seen_endata:
        logger.warning("MPS input has no ENDATA line")
    return b.finish()


def _objsense(token: str, lineno: int) -> str:
    token = token.upper()
    if token in ("MAX", "MAXIMIZE"):
        return "max"
    if token in ("MIN", "MINIMIZE"):
        return "min"
    raise MPSError(f"line {lineno}: unknown objective sense {token!r}")


def parse_mps(text: str | bytes, fmt: str = "auto") -> MipInstance:
    """Parse fixed- or free-format MPS text.

    ``fmt`` is ``"free"``, ``"fixed"`` or ``"auto"``; auto reads free format
    and falls back to fixed column positions if that fails.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    lines = text.splitlines()
    if fmt == "free":
        return _parse_lines(lines, fixed=False)
    if fmt == "fixed":
        return _parse_lines(lines, fixed=True)
    if fmt != "auto":
        raise ValueError(f"fmt must be 'auto', 'free' or 'fixed', got {fmt!r}")
    try:
        return _parse_lines(lines, fixed=False)
    except MPSUnsupportedError:
        raise
    except MPSError as free_error:
        try:
            return _parse_lines(lines, fixed=True)
        except MPSError:
            raise free_error from None


def read_mps(path: str | os.PathLike, fmt: str = "auto") -> MipInstance:
    """Read an MPS file, transparently decompressing ``.gz``."""
    path = os.fspath(path)
    opener = gzip.open if path.endswith(".gz") else open
    with opener(path, "rb") as fh:
        data = fh.read()
    mip = parse_mps(data, fmt=fmt)
    if not mip.name:
        base = os.path.basename(path)
        for suffix in (".gz", ".mps", ".MPS", ".free"):
            base = base.removesuffix(suffix)
        mip = replace(mip, name=base)
    return mip


# -- writing -----------------------------------------------------------------


def _fmt(v: float) -> str:
    if math.isfinite(v) and v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def write_mps(mip: MipInstance) -> str:
    """Emit ``mip`` as free-format MPS that :func:`parse_mps` reads back identically."""
    for name in (mip.name, *mip.var_names, *mip.row_names):
        if any(ch.isspace() for ch in name):
            raise ValueError(f"name {name!r} contains whitespace; free MPS cannot represent it")
    obj = "OBJ"
    while obj in mip.row_names:
        obj += "_"
    kind = {LE: "L", EQ: "E", GE: "G"}
    out = [f"NAME {mip.name}".rstrip()]
    if mip.objective_sense == "max":
        out += ["OBJSENSE", "    MAX"]
    out.append("ROWS")
    out.append(f" N  {obj}")
    out += [f" {kind[s]}  {r}" for r, s in zip(mip.row_names, mip.sense)]
    out.append("COLUMNS")
    in_int = False
    marker = 0
    for j, vname in enumerate(mip.var_names):
        if mip.is_integer[j] != in_int:
            tag = "INTORG" if mip.is_integer[j] else "INTEND"
            out.append(f"    MARKER{marker} 'MARKER' '{tag}'")
            marker += 1
            in_int = mip.is_integer[j]
        col = mip.columns[j]
        entries = []
        if j in mip.objective:
            entries.append((obj, mip.objective[j]))
        entries += [(mip.row_names[i], v) for i, v in sorted(col.items())]
        if not entries:
            entries = [(obj, 0.0)]
        out += [f"    {vname} {r} {_fmt(v)}" for r, v in entries]
    if in_int:
        out.append(f"    MARKER{marker} 'MARKER' 'INTEND'")
    out.append("RHS")
    if mip.objective_offset != 0:
        out.append(f"    RHS {obj} {_fmt(-mip.objective_offset)}")
    out += [f"    RHS {r} {_fmt(b)}" for r, b in zip(mip.row_names, mip.rhs) if b != 0]
    out.append("BOUNDS")
    for j, vname in enumerate(mip.var_names):
        lo, up = mip.lower[j], mip.upper[j]
        if lo == -math.inf and up == math.inf:
            out.append(f" FR BND {vname}")
            continue
        if lo == up:
            out.append(f" FX BND {vname} {_fmt(lo)}")
            continue
        if lo == -math.inf:
            out.append(f" MI BND {vname}")
        elif lo != 0 or up < 0:
            out.append(f" LO BND {vname} {_fmt(lo)}")
        if up != math.inf:
            out.append(f" UP BND {vname} {_fmt(up)}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"

"""Per-instance size statistics and the regressions run over them."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, fields

from .mps import MipInstance
from .qubo import build_reduced, q_decomp
from .reasonability import SignatureConfig, build_partition, max_decomp_class
from .resources import REFERENCE_FITS, count_terms, linear_fit_origin, power_fit, zephyr_estimate


@dataclass(frozen=True)
class InstanceStats:
    name: str
    n: int
    m: int
    nu: int
    mu: int
    q_full: int
    q_reduced: int
    ratio_reduced: float
    max_class_size: int
    q_maxdecomp: int
    ratio_maxdecomp: float
    zephyr_g: int
    qubit_bound: int
    n_terms_reduced: int | None


COLUMNS = [f.name for f in fields(InstanceStats)] + ["error"]
RATIO_COLUMNS = {"ratio_reduced", "ratio_maxdecomp"}


def instance_stats(mip: MipInstance, config: SignatureConfig | None = None, max_q: int | None = None) -> InstanceStats:
    """Formulation sizes for one instance.

    ``q_maxdecomp`` counts the largest class's block, the off-class diagonal
    entries and all reasonable constraint entries. Terms of the Reduced model
    are only counted when ``q_reduced <= max_q``.
    """
    if mip.n == 0:
        raise ValueError("instance has no variables")
    partition = build_partition(mip, config)
    q_full = mip.n**2 + mip.m**2
    q_reduced = partition.nu + partition.mu
    class_id, size = max_decomp_class(partition)
    q_max = q_decomp(partition, class_id)
    zephyr = zephyr_estimate(q_reduced)
    n_terms = None
    if mip.m > 0 and (max_q is None or q_reduced <= max_q):
        n_terms = count_terms(build_reduced(mip, partition))[2]
    return InstanceStats(
        name=mip.name,
        n=mip.n,
        m=mip.m,
        nu=partition.nu,
        mu=partition.mu,
        q_full=q_full,
        q_reduced=q_reduced,
        ratio_reduced=q_reduced / q_full,
        max_class_size=size,
        q_maxdecomp=q_max,
        ratio_maxdecomp=q_max / q_full,
        zephyr_g=zephyr.g,
        qubit_bound=zephyr.qubit_bound,
        n_terms_reduced=n_terms,
    )


def stats_row(stats: InstanceStats | None, name: str = "", error: str = "") -> dict:
    if stats is None:
        row = {c: "" for c in COLUMNS}
        row.update(name=name, error=error)
        return row
    row = asdict(stats)
    row["error"] = error
    return row


def _cell(column: str, value) -> str:
    if value is None or value == "":
        return ""
    if column in RATIO_COLUMNS:
        return f"{value:.4f}"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([_cell(c, row.get(c, "")) for c in COLUMNS])
    return buf.getvalue()


def rows_to_json_ready(rows: list[dict]) -> list[dict]:
    out = []
    for row in rows:
        clean = {}
        for c in COLUMNS:
            v = row.get(c, "")
            if c in RATIO_COLUMNS and isinstance(v, float):
                v = round(v, 4)
            clean[c] = None if v == "" else v
        out.append(clean)
    return out


def _numeric(row: dict, column: str) -> float | None:
    value = row.get(column)
    if value in (None, ""):
        return None
    try:
        v = float(value)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def regress(rows: list[dict]) -> dict:
    """Fit ``nu ~ n^k`` and ``mu ~ m^k``; add ``qubits ~ a * terms`` if a ``qubits`` column exists."""
    usable = [r for r in rows if not r.get("error")]
    if len(usable) < 2:
        raise ValueError(f"need at least 2 usable rows, got {len(usable)}")

    def points(xcol, ycol):
        pts = []
        for r in usable:
            x, y = _numeric(r, xcol), _numeric(r, ycol)
            if x is not None and y is not None and x > 0 and y > 0:
                pts.append((x, y))
        return pts

    result = {}
    for label, xcol, ycol in (("nu_vs_n", "n", "nu"), ("mu_vs_m", "m", "mu")):
        pts = points(xcol, ycol)
        if len(pts) < 2:
            raise ValueError(f"need at least 2 usable points for {label}, got {len(pts)}")
        result[label] = {"k": power_fit(pts), "points": len(pts)}
    pts = points("n_terms_reduced", "qubits")
    result["qubits_vs_terms"] = {"slope": linear_fit_origin(pts), "points": len(pts)} if pts else None
    result["reference"] = dict(REFERENCE_FITS)
    return result


def read_stats_csv(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))

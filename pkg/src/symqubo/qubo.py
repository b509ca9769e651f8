"""Symmetry-detecting QUBO and QUBO-Plus formulations.

Binary variables are entries of two permutation matrices: ``pi[j, k] = 1``
sends variable ``j`` to ``k`` and ``sigma[i, l] = 1`` sends constraint ``i``
to ``l``. Every formulation is a sum of nonnegative penalty terms, so its
zero-energy assignments are exactly the permutation pairs it accepts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .mps import MipInstance
from .reasonability import ReasonabilityPartition

PI, SIGMA = "pi", "sigma"
FIX_CONSTANTS, FIX_PENALTY = "constants", "penalty"


class Entry(NamedTuple):
    kind: str
    a: int
    b: int

    def __str__(self):
        return f"{self.kind}[{self.a},{self.b}]"


@dataclass(frozen=True)
class VarRegistry:
    """Ordered binary variables of a formulation.

    ``fixed_ones`` holds entries substituted by the constant 1; they are not
    part of ``entries`` and take no index.
    """

    n: int
    m: int
    entries: tuple[Entry, ...]
    fixed_ones: frozenset[Entry] = frozenset()
    index_of: dict[Entry, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index_of = {e: k for k, e in enumerate(self.entries)}
        if len(index_of) != len(self.entries):
            raise ValueError("registry has duplicate entries")
        if list(self.entries) != sorted(self.entries):
            raise ValueError("registry entries must be pi before sigma, each in lexicographic order")
        if index_of.keys() & self.fixed_ones:
            raise ValueError("an entry cannot be both live and fixed")
        for e in list(self.entries) + list(self.fixed_ones):
            size = self.n if e.kind == PI else self.m
            if e.kind not in (PI, SIGMA) or not (0 <= e.a < size and 0 <= e.b < size):
                raise ValueError(f"invalid registry entry {e}")
        object.__setattr__(self, "index_of", index_of)

    def __len__(self):
        return len(self.entries)

    @property
    def size(self) -> int:
        return len(self.entries)

    @property
    def n_pi(self) -> int:
        return sum(1 for e in self.entries if e.kind == PI)

    @property
    def n_sigma(self) -> int:
        return len(self.entries) - self.n_pi


@dataclass(frozen=True)
class PenaltyWeights:
    w_bpi: float = 1.0
    w_bsigma: float = 1.0
    w_pi: float = 1.0
    w_sigma: float = 1.0
    w_A: float = 1.0
    w_fix: float = 1.0

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"penalty weight {name} must be positive and finite, got {value}")


@dataclass(frozen=True)
class QuboModel:
    """``offset + sum linear[k] x_k + sum quadratic[(k, l)] x_k x_l`` with ``k < l``."""

    registry: VarRegistry
    offset: float
    linear: dict[int, float]
    quadratic: dict[tuple[int, int], float]
    weights: PenaltyWeights = field(default_factory=PenaltyWeights)
    form: str = ""

    def __post_init__(self):
        q = len(self.registry)
        for k, v in self.linear.items():
            if not 0 <= k < q or v == 0:
                raise ValueError(f"bad linear term {k}: {v}")
        for (k, l), v in self.quadratic.items():
            if not 0 <= k < l < q or v == 0:
                raise ValueError(f"bad quadratic term ({k}, {l}): {v}")

    @property
    def num_variables(self) -> int:
        return len(self.registry)

    def energy(self, assignment) -> float:
        return energy(self, assignment)

    def coefficient_scale(self) -> float:
        return abs(self.offset) + sum(map(abs, self.linear.values())) + sum(map(abs, self.quadratic.values()))

    def arrays(self):
        """Dense linear vector and COO coupler arrays, in deterministic key order."""
        q = len(self.registry)
        lin = np.zeros(q)
        for k, v in self.linear.items():
            lin[k] = v
        keys = sorted(self.quadratic)
        rows = np.array([k for k, _ in keys], dtype=np.int64)
        cols = np.array([l for _, l in keys], dtype=np.int64)
        vals = np.array([self.quadratic[key] for key in keys], dtype=float)
        return lin, rows, cols, vals


class Constraint(NamedTuple):
    coeffs: dict[int, float]
    rhs: float = 1.0
    sense: str = "="


@dataclass(frozen=True)
class QuboPlusModel:
    objective: QuboModel
    constraints: tuple[Constraint, ...]

    def __post_init__(self):
        q = len(self.objective.registry)
        for c in self.constraints:
            if not c.coeffs:
                raise ValueError("constraint with empty support")
            if any(not 0 <= k < q for k in c.coeffs):
                raise ValueError(f"constraint refers to a variable outside 0..{q - 1}")
            if c.sense != "=":
                raise ValueError("only equality constraints are supported")

    @property
    def registry(self) -> VarRegistry:
        return self.objective.registry

    @property
    def fixed_ones(self) -> frozenset[Entry]:
        return self.objective.registry.fixed_ones


class _Accumulator:
    """Collects terms over registry entries; fixed entries act as the constant 1."""

    def __init__(self, registry: VarRegistry):
        self.registry = registry
        self.offset = 0.0
        self.linear: dict[int, float] = {}
        self.quadratic: dict[tuple[int, int], float] = {}

    def _resolve(self, e: Entry) -> int | None:
        if e in self.registry.fixed_ones:
            return None
        return self.registry.index_of[e]

    def add_linear(self, k: int | None, w: float):
        if k is None:
            self.offset += w
        else:
            self.linear[k] = self.linear.get(k, 0.0) + w

    def add_quadratic(self, k: int | None, l: int | None, w: float):
        if k is None or l is None:
            self.add_linear(l if k is None else k, w)
        elif k == l:
            self.add_linear(k, w)  # x^2 = x
        else:
            key = (k, l) if k < l else (l, k)
            self.quadratic[key] = self.quadratic.get(key, 0.0) + w

    def add_square(self, coeffs: Sequence[tuple[int | None, float]], rhs: float, w: float):
        """Add ``w * (sum a_k x_k - rhs)^2`` expanded with ``x^2 = x``."""
        const = -rhs
        live = []
        for k, a in coeffs:
            if k is None:
                const += a
            else:
                live.append((k, a))
        for k, a in live:
            self.add_linear(k, w * (a * a + 2.0 * a * const))
        for p in range(len(live)):
            kp, ap = live[p]
            for r in range(p + 1, len(live)):
                kr, ar = live[r]
                self.add_quadratic(kp, kr, w * 2.0 * ap * ar)
        self.add_linear(None, w * const * const)

    def add_one_hot(self, entries: Iterable[Entry], w: float):
        self.add_square([(self._resolve(e), 1.0) for e in entries], 1.0, w)

    def model(self, weights: PenaltyWeights, form: str) -> QuboModel:
        return QuboModel(
            registry=self.registry,
            offset=self.offset + 0.0,
            linear={k: v for k, v in sorted(self.linear.items()) if v != 0},
            quadratic={k: v for k, v in sorted(self.quadratic.items()) if v != 0},
            weights=weights,
            form=form,
        )


def _check_instance(mip: MipInstance, partition: ReasonabilityPartition):
    if mip.n == 0 or mip.m == 0:
        raise ValueError("degenerate instance: formulations need at least one variable and one constraint")
    if partition.n != mip.n or partition.m != mip.m:
        raise ValueError("partition does not match the instance dimensions")


def _add_coefficient_penalty(acc: _Accumulator, mip: MipInstance, partition: ReasonabilityPartition, w: float):
    """Penalize sigma[i, l] * pi[j, k] whenever A[i, j] != A[l, k], implicit zeros included."""
    reg = acc.registry
    key = partition.config.key
    targets: list[list[int]] = [[] for _ in range(mip.n)]
    sources: list[list[int]] = [[] for _ in range(mip.n)]
    for e in list(reg.entries) + sorted(reg.fixed_ones):
        if e.kind == PI:
            targets[e.a].append(e.b)
            sources[e.b].append(e.a)
    keyed = [{j: key(v) for j, v in row.items()} for row in mip.rows]
    for s in reg.entries:
        if s.kind != SIGMA:
            continue
        ks = acc._resolve(s)
        row_i, row_l = keyed[s.a], keyed[s.b]
        bad: list[Entry] = []
        for j, v in row_i.items():
            for k in targets[j]:
                if row_l.get(k, 0.0) != v:
                    bad.append(Entry(PI, j, k))
        for k in row_l:
            for j in sources[k]:
                if j not in row_i:
                    bad.append(Entry(PI, j, k))
        for e in sorted(bad):
            acc.add_quadratic(ks, acc._resolve(e), w)


def _one_hot_groups(reg: VarRegistry, kind: str, size: int, only: set[int] | None = None):
    """Row-sum and column-sum groups over registered (live or fixed) entries."""
    rows: list[list[Entry]] = [[] for _ in range(size)]
    cols: list[list[Entry]] = [[] for _ in range(size)]
    for e in sorted(set(reg.entries) | reg.fixed_ones):
        if e.kind == kind:
            rows[e.a].append(e)
            cols[e.b].append(e)
    keep = range(size) if only is None else sorted(only)
    return [rows[a] for a in keep], [cols[b] for b in keep]


def _sigma_entries(partition: ReasonabilityPartition, full: bool) -> list[Entry]:
    m = partition.m
    if full:
        return [Entry(SIGMA, i, l) for i in range(m) for l in range(m)]
    return [Entry(SIGMA, i, l) for i in range(m) for l in partition.con_class(i)]


def full_registry(partition: ReasonabilityPartition) -> VarRegistry:
    n, m = partition.n, partition.m
    pis = [Entry(PI, j, k) for j in range(n) for k in range(n)]
    return VarRegistry(n, m, tuple(pis + _sigma_entries(partition, True)))


def reduced_registry(partition: ReasonabilityPartition) -> VarRegistry:
    pis = [Entry(PI, j, k) for j in range(partition.n) for k in partition.var_class(j)]
    return VarRegistry(partition.n, partition.m, tuple(pis + _sigma_entries(partition, False)))


def decomposed_registry(partition: ReasonabilityPartition, class_id: int, fix_mode: str = FIX_CONSTANTS) -> VarRegistry:
    if not 0 <= class_id < len(partition.var_classes):
        raise ValueError(f"invalid class id {class_id}; there are {len(partition.var_classes)} variable classes")
    if fix_mode not in (FIX_CONSTANTS, FIX_PENALTY):
        raise ValueError(f"fix_mode must be {FIX_CONSTANTS!r} or {FIX_PENALTY!r}, got {fix_mode!r}")
    members = set(partition.var_classes[class_id])
    block = [Entry(PI, j, k) for j in sorted(members) for k in sorted(members)]
    diagonal = [Entry(PI, j, j) for j in range(partition.n) if j not in members]
    sigmas = _sigma_entries(partition, False)
    if fix_mode == FIX_CONSTANTS:
        return VarRegistry(partition.n, partition.m, tuple(sorted(block) + sigmas), frozenset(diagonal))
    return VarRegistry(partition.n, partition.m, tuple(sorted(block + diagonal) + sigmas))


def build_full(
    mip: MipInstance, partition: ReasonabilityPartition, weights: PenaltyWeights | None = None
) -> QuboModel:
    """All n^2 + m^2 permutation entries; unreasonable ones are penalized linearly."""
    weights = weights or PenaltyWeights()
    _check_instance(mip, partition)
    reg = full_registry(partition)
    acc = _Accumulator(reg)
    _add_coefficient_penalty(acc, mip, partition, weights.w_A)
    for e in reg.entries:
        if e.kind == PI and not partition.var_reasonable(e.a, e.b):
            acc.add_linear(reg.index_of[e], weights.w_pi)
        elif e.kind == SIGMA and not partition.con_reasonable(e.a, e.b):
            acc.add_linear(reg.index_of[e], weights.w_sigma)
    _add_doubly_stochastic(acc, weights)
    return acc.model(weights, "full")


def _add_doubly_stochastic(acc: _Accumulator, weights: PenaltyWeights, pi_only: set[int] | None = None):
    reg = acc.registry
    rows, cols = _one_hot_groups(reg, PI, reg.n, pi_only)
    for group in rows + cols:
        acc.add_one_hot(group, weights.w_bpi)
    rows, cols = _one_hot_groups(reg, SIGMA, reg.m)
    for group in rows + cols:
        acc.add_one_hot(group, weights.w_bsigma)


def build_reduced(
    mip: MipInstance, partition: ReasonabilityPartition, weights: PenaltyWeights | None = None
) -> QuboModel:
    """Only reasonable entries are registered; the rest are implicitly zero."""
    weights = weights or PenaltyWeights()
    _check_instance(mip, partition)
    acc = _Accumulator(reduced_registry(partition))
    _add_coefficient_penalty(acc, mip, partition, weights.w_A)
    _add_doubly_stochastic(acc, weights)
    return acc.model(weights, "reduced")


def build_decomposed(
    mip: MipInstance,
    partition: ReasonabilityPartition,
    class_id: int,
    weights: PenaltyWeights | None = None,
    fix_mode: str = FIX_CONSTANTS,
) -> QuboModel:
    """Permutations within one variable class; every other variable stays put.

    Row and column sums of ``pi`` are penalized only inside the class. The
    diagonal entries of the remaining variables are either constants
    (``fix_mode="constants"``) or live variables pulled to 1 by a
    ``w_fix * (1 - pi[j, j])^2`` penalty.
    """
    weights = weights or PenaltyWeights()
    _check_instance(mip, partition)
    reg = decomposed_registry(partition, class_id, fix_mode)
    members = set(partition.var_classes[class_id])
    acc = _Accumulator(reg)
    _add_coefficient_penalty(acc, mip, partition, weights.w_A)
    _add_doubly_stochastic(acc, weights, pi_only=members)
    for j in range(mip.n):
        if j not in members:
            acc.add_one_hot([Entry(PI, j, j)], weights.w_fix)
    return acc.model(weights, f"decomp:{class_id}")


def q_decomp(partition: ReasonabilityPartition, class_id: int) -> int:
    """Registered entries of the decomposition with live off-class diagonals."""
    size = len(partition.var_classes[class_id])
    return size * size + (partition.n - size) + partition.mu


# -- QUBO-Plus -----------------------------------------------------------------


def _sum_constraint(reg: VarRegistry, entries: Iterable[Entry]) -> Constraint:
    return Constraint({reg.index_of[e]: 1.0 for e in entries})


def build_quboplus_full(
    mip: MipInstance, partition: ReasonabilityPartition, weights: PenaltyWeights | None = None
) -> QuboPlusModel:
    weights = weights or PenaltyWeights()
    _check_instance(mip, partition)
    reg = full_registry(partition)
    acc = _Accumulator(reg)
    _add_coefficient_penalty(acc, mip, partition, weights.w_A)
    for j in range(mip.n):
        for k in range(mip.n):
            if not partition.var_reasonable(j, k):
                acc.add_linear(reg.index_of[Entry(PI, j, k)], weights.w_pi)
    for i in range(mip.m):
        for l in range(mip.m):
            if not partition.con_reasonable(i, l):
                acc.add_linear(reg.index_of[Entry(SIGMA, i, l)], weights.w_sigma)
    n, m = mip.n, mip.m
    cons = [_sum_constraint(reg, (Entry(PI, j, k) for j in range(n))) for k in range(n)]
    cons += [_sum_constraint(reg, (Entry(PI, j, k) for k in range(n))) for j in range(n)]
    cons += [_sum_constraint(reg, (Entry(SIGMA, i, l) for i in range(m))) for l in range(m)]
    cons += [_sum_constraint(reg, (Entry(SIGMA, i, l) for l in range(m))) for i in range(m)]
    return QuboPlusModel(acc.model(weights, "plus-full"), tuple(cons))


def _class_sum_constraints(reg: VarRegistry, partition: ReasonabilityPartition, var_targets: Iterable[int]):
    cons = []
    targets = list(var_targets)
    cons += [_sum_constraint(reg, (Entry(PI, j, k) for j in partition.var_class(k))) for k in targets]
    cons += [_sum_constraint(reg, (Entry(PI, j, k) for k in partition.var_class(j))) for j in targets]
    m = partition.m
    cons += [_sum_constraint(reg, (Entry(SIGMA, i, l) for i in partition.con_class(l))) for l in range(m)]
    cons += [_sum_constraint(reg, (Entry(SIGMA, i, l) for l in partition.con_class(i))) for i in range(m)]
    return cons


def build_quboplus_reduced(
    mip: MipInstance, partition: ReasonabilityPartition, weights: PenaltyWeights | None = None
) -> QuboPlusModel:
    weights = weights or PenaltyWeights()
    _check_instance(mip, partition)
    reg = reduced_registry(partition)
    acc = _Accumulator(reg)
    _add_coefficient_penalty(acc, mip, partition, weights.w_A)
    cons = _class_sum_constraints(reg, partition, range(mip.n))
    return QuboPlusModel(acc.model(weights, "plus-reduced"), tuple(cons))


def build_quboplus_decomposed(
    mip: MipInstance, partition: ReasonabilityPartition, class_id: int, weights: PenaltyWeights | None = None
) -> QuboPlusModel:
    weights = weights or PenaltyWeights()
    _check_instance(mip, partition)
    reg = decomposed_registry(partition, class_id, FIX_PENALTY)
    members = partition.var_classes[class_id]
    acc = _Accumulator(reg)
    _add_coefficient_penalty(acc, mip, partition, weights.w_A)
    cons = _class_sum_constraints(reg, partition, members)
    cons += [_sum_constraint(reg, [Entry(PI, j, j)]) for j in range(mip.n) if j not in set(members)]
    return QuboPlusModel(acc.model(weights, f"plus-decomp:{class_id}"), tuple(cons))


def quboplus_to_qubo(model: QuboPlusModel, penalty: float = 1.0) -> QuboModel:
    """Fold each equality into the objective as ``penalty * (a.x - rhs)^2``."""
    if not (penalty > 0 and math.isfinite(penalty)):
        raise ValueError(f"penalty must be positive and finite, got {penalty}")
    obj = model.objective
    acc = _Accumulator(obj.registry)
    acc.offset = obj.offset
    acc.linear = dict(obj.linear)
    acc.quadratic = dict(obj.quadratic)
    for c in model.constraints:
        acc.add_square(sorted(c.coeffs.items()), c.rhs, penalty)
    form = obj.form.removeprefix("plus-")
    return acc.model(obj.weights, form)


# -- evaluation ------------------------------------------------------------------


def energy(model: QuboModel, assignment) -> float:
    x = np.asarray(assignment)
    if x.ndim != 1 or len(x) != len(model.registry):
        raise ValueError(f"assignment length {len(x)} does not match registry size {len(model.registry)}")
    on = {k for k in range(len(x)) if x[k]}
    terms = [model.offset]
    terms += [v for k, v in model.linear.items() if k in on]
    terms += [v for (k, l), v in model.quadratic.items() if k in on and l in on]
    return math.fsum(terms)


def zero_tolerance(model: QuboModel) -> float:
    """Energies at or below this count as zero (absorbs float rounding of non-integer weights)."""
    return 1e-9 * max(1.0, model.coefficient_scale())


def assignment_for(registry: VarRegistry, pi: Sequence[int], sigma: Sequence[int]) -> np.ndarray | None:
    """Bit vector encoding the permutation pair, or None if it needs an unregistered entry."""
    x = np.zeros(len(registry), dtype=np.int8)
    for kind, perm in ((PI, pi), (SIGMA, sigma)):
        for a, b in enumerate(perm):
            e = Entry(kind, a, b)
            if e in registry.fixed_ones:
                continue
            k = registry.index_of.get(e)
            if k is None:
                return None
            x[k] = 1
    for e in registry.fixed_ones:
        if (pi if e.kind == PI else sigma)[e.a] != e.b:
            return None
    return x


# -- wire formats ------------------------------------------------------------------


def _num(v: float) -> str:
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def write_qubo(model: QuboModel) -> str:
    """qbsolv-style ``.qubo`` text with the registry and offset kept in comments."""
    reg = model.registry
    out = [
        f"c symmetry-detecting QUBO form={model.form or 'unknown'}",
        f"c dims {reg.n} {reg.m}",
        f"c offset {_num(model.offset)}",
    ]
    out += [f"c var {k} {e.kind} {e.a} {e.b}" for k, e in enumerate(reg.entries)]
    out += [f"c fixed {e.kind} {e.a} {e.b}" for e in sorted(reg.fixed_ones)]
    out.append(f"p qubo 0 {len(reg)} {len(model.linear)} {len(model.quadratic)}")
    out += [f"{k} {k} {_num(v)}" for k, v in sorted(model.linear.items())]
    out += [f"{k} {l} {_num(v)}" for (k, l), v in sorted(model.quadratic.items())]
    return "\n".join(out) + "\n"


def read_qubo(text: str) -> QuboModel:
    """Inverse of :func:`write_qubo`."""
    dims = None
    offset = 0.0
    form = ""
    entries: list[Entry] = []
    fixed: list[Entry] = []
    linear: dict[int, float] = {}
    quadratic: dict[tuple[int, int], float] = {}
    header = None
    for line in text.splitlines():
        tok = line.split()
        if not tok:
            continue
        if tok[0] == "c":
            if len(tok) >= 3 and tok[1] == "dims":
                dims = (int(tok[2]), int(tok[3]))
            elif len(tok) == 3 and tok[1] == "offset":
                offset = float(tok[2])
            elif len(tok) == 6 and tok[1] == "var":
                if int(tok[2]) != len(entries):
                    raise ValueError(f"registry dump out of order at {line!r}")
                entries.append(Entry(tok[3], int(tok[4]), int(tok[5])))
            elif len(tok) == 5 and tok[1] == "fixed":
                fixed.append(Entry(tok[2], int(tok[3]), int(tok[4])))
            elif len(tok) >= 4 and tok[1] == "symmetry-detecting":
                form = tok[3].removeprefix("form=")
            continue
        if tok[0] == "p":
            header = tuple(int(t) for t in tok[2:6])
            continue
        k, l, v = int(tok[0]), int(tok[1]), float(tok[2])
        if k == l:
            linear[k] = v
        else:
            quadratic[(min(k, l), max(k, l))] = v
    if dims is None or header is None:
        raise ValueError("missing 'c dims' comment or 'p qubo' header")
    if header[1] != len(entries) or header[2] != len(linear) or header[3] != len(quadratic):
        raise ValueError("'p qubo' header does not match the body")
    reg = VarRegistry(dims[0], dims[1], tuple(entries), frozenset(fixed))
    return QuboModel(reg, offset, linear, quadratic, form=form)


def quboplus_to_json(model: QuboPlusModel) -> dict:
    obj = model.objective
    return {
        "form": obj.form,
        "dims": [obj.registry.n, obj.registry.m],
        "variables": [[e.kind, e.a, e.b] for e in obj.registry.entries],
        "objective": {
            "offset": obj.offset,
            "linear": [[k, v] for k, v in sorted(obj.linear.items())],
            "quadratic": [[k, l, v] for (k, l), v in sorted(obj.quadratic.items())],
        },
        "constraints": [
            {"coeffs": [[k, v] for k, v in sorted(c.coeffs.items())], "sense": c.sense, "rhs": c.rhs}
            for c in model.constraints
        ],
        "fixed_ones": [[e.kind, e.a, e.b] for e in sorted(obj.registry.fixed_ones)],
    }


def quboplus_from_json(data: dict) -> QuboPlusModel:
    n, m = data["dims"]
    reg = VarRegistry(
        n,
        m,
        tuple(Entry(k, a, b) for k, a, b in data["variables"]),
        frozenset(Entry(k, a, b) for k, a, b in data["fixed_ones"]),
    )
    o = data["objective"]
    obj = QuboModel(
        reg,
        float(o["offset"]),
        {int(k): float(v) for k, v in o["linear"]},
        {(int(k), int(l)): float(v) for k, l, v in o["quadratic"]},
        form=data.get("form", ""),
    )
    cons = tuple(
        Constraint({int(k): float(v) for k, v in c["coeffs"]}, float(c["rhs"]), c["sense"]) for c in data["constraints"]
    )
    return QuboPlusModel(obj, cons)

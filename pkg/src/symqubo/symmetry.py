"""Decoding, verification and brute-force enumeration of formulation symmetries."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .mps import MipInstance
from .qubo import PI, VarRegistry
from .reasonability import ReasonabilityPartition, SignatureConfig

# reason codes for a valid permutation pair that is not a symmetry
INTEGRALITY = "integrality"
OBJECTIVE = "objective"
RHS = "rhs"
SENSE = "sense"
BOUNDS = "bounds"
MATRIX = "matrix"


@dataclass(frozen=True)
class DecodedSymmetry:
    """A permutation pair read off a binary assignment.

    ``pi[j]`` / ``sigma[i]`` is -1 where the matrix row does not hold exactly
    one set bit. ``is_symmetry`` is None when it was not checked.
    """

    pi: tuple[int, ...]
    sigma: tuple[int, ...]
    valid_permutation: bool
    is_symmetry: bool | None = None
    reason: str | None = None


def _is_bijection(perm: Sequence[int], size: int) -> bool:
    return len(perm) == size and sorted(perm) == list(range(size))


def symmetry_violation(
    mip: MipInstance, pi: Sequence[int], sigma: Sequence[int], config: SignatureConfig | None = None
) -> str | None:
    """Name of the first failed symmetry condition, or None if ``(pi, sigma)`` is a symmetry."""
    config = config or SignatureConfig()
    if not _is_bijection(pi, mip.n):
        raise ValueError("pi is not a permutation of the variables")
    if not _is_bijection(sigma, mip.m):
        raise ValueError("sigma is not a permutation of the constraints")
    key = config.key
    for j in range(mip.n):
        if mip.is_integer[j] != mip.is_integer[pi[j]]:
            return INTEGRALITY
    for j in range(mip.n):
        if key(mip.objective.get(j, 0.0)) != key(mip.objective.get(pi[j], 0.0)):
            return OBJECTIVE
    if config.use_bounds:
        for j in range(mip.n):
            if key(mip.lower[j]) != key(mip.lower[pi[j]]) or key(mip.upper[j]) != key(mip.upper[pi[j]]):
                return BOUNDS
    for i in range(mip.m):
        if key(mip.rhs[i]) != key(mip.rhs[sigma[i]]):
            return RHS
    if config.use_sense:
        for i in range(mip.m):
            if mip.sense[i] != mip.sense[sigma[i]]:
                return SENSE
    for i in range(mip.m):
        moved = {pi[j]: key(v) for j, v in mip.rows[i].items()}
        target = {k: key(v) for k, v in mip.rows[sigma[i]].items()}
        if moved != target:
            return MATRIX
    return None


def is_formulation_symmetry(
    mip: MipInstance, pi: Sequence[int], sigma: Sequence[int], config: SignatureConfig | None = None
) -> bool:
    return symmetry_violation(mip, pi, sigma, config) is None


def decode(
    registry: VarRegistry,
    assignment,
    mip: MipInstance | None = None,
    config: SignatureConfig | None = None,
) -> DecodedSymmetry:
    """Read ``(pi, sigma)`` from a bit vector; verify it against ``mip`` when given."""
    x = np.asarray(assignment)
    if x.ndim != 1 or len(x) != len(registry):
        raise ValueError(f"assignment length {len(x)} does not match registry size {len(registry)}")
    pi_mat = np.zeros((registry.n, registry.n), dtype=np.int64)
    sigma_mat = np.zeros((registry.m, registry.m), dtype=np.int64)
    on = [e for k, e in enumerate(registry.entries) if x[k]] + list(registry.fixed_ones)
    for e in on:
        (pi_mat if e.kind == PI else sigma_mat)[e.a, e.b] = 1
    maps = []
    valid = True
    for mat in (pi_mat, sigma_mat):
        row_ok = mat.sum(axis=1) == 1
        col_ok = mat.sum(axis=0) == 1
        valid = valid and bool(row_ok.all() and col_ok.all())
        maps.append(tuple(int(np.argmax(mat[r])) if row_ok[r] else -1 for r in range(len(mat))))
    pi, sigma = maps
    if not valid or mip is None:
        return DecodedSymmetry(pi, sigma, valid)
    reason = symmetry_violation(mip, pi, sigma, config)
    return DecodedSymmetry(pi, sigma, True, reason is None, reason)


def _class_permutations(classes: Sequence[Sequence[int]], size: int):
    """Every permutation of ``range(size)`` that maps each class onto itself."""
    per_class = [list(itertools.permutations(c)) for c in classes]
    for choice in itertools.product(*per_class):
        perm = [0] * size
        for members, image in zip(classes, choice):
            for a, b in zip(members, image):
                perm[a] = b
        yield tuple(perm)


def search_space_size(classes: Iterable[Sequence[int]]) -> int:
    return math.prod(math.factorial(len(c)) for c in classes)


def brute_force_symmetries(
    mip: MipInstance, partition: ReasonabilityPartition, limit: int = 10**6
) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """All reasonable ``(pi, sigma)`` pairs that are formulation symmetries.

    Every class-preserving ``pi`` is tried; for each, the witnesses ``sigma``
    are found by backtracking over rows whose permuted content matches.
    """
    n_pi = search_space_size(partition.var_classes)
    n_sigma = search_space_size(partition.con_classes)
    if n_pi > limit or n_sigma > limit:
        raise ValueError(f"search space too large: {n_pi} variable and {n_sigma} constraint permutations (limit {limit})")
    config = partition.config
    key = config.key
    keyed_rows = [{j: key(v) for j, v in row.items()} for row in mip.rows]
    pairs = []
    for pi in _class_permutations(partition.var_classes, mip.n):
        moved = [{pi[j]: v for j, v in row.items()} for row in keyed_rows]
        candidates = [
            [l for l in partition.con_class(i) if keyed_rows[l] == moved[i]] for i in range(mip.m)
        ]
        for sigma in _bijections(candidates, mip.m):
            if is_formulation_symmetry(mip, pi, sigma, config):
                pairs.append((pi, sigma))
    return sorted(pairs)


def _bijections(candidates: list[list[int]], size: int):
    image = [0] * size
    used = [False] * size

    def extend(i):
        if i == size:
            yield tuple(image)
            return
        for l in candidates[i]:
            if not used[l]:
                used[l] = True
                image[i] = l
                yield from extend(i + 1)
                used[l] = False

    yield from extend(0)


def distinct_pis(pairs: Iterable[tuple[Sequence[int], Sequence[int]]]) -> list[tuple[int, ...]]:
    return sorted({tuple(p) for p, _ in pairs})


class UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}
        self.rank = {x: 0 for x in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x, y):
        x, y = self.find(x), self.find(y)
        if x == y:
            return
        if self.rank[x] < self.rank[y]:
            x, y = y, x
        elif self.rank[x] == self.rank[y]:
            self.rank[x] += 1
        self.parent[y] = x

    def groups(self) -> list[list]:
        out: dict = {}
        for x in self.parent:
            out.setdefault(self.find(x), []).append(x)
        return sorted(sorted(g) for g in out.values())


def orbits(n: int, generators: Iterable[Sequence[int]]) -> list[list[int]]:
    """Orbits of the group generated by ``generators`` acting on ``range(n)``."""
    uf = UnionFind(range(n))
    for g in generators:
        if not _is_bijection(g, n):
            raise ValueError(f"generator {tuple(g)} is not a permutation of range({n})")
        for j in range(n):
            uf.union(j, g[j])
    return uf.groups()

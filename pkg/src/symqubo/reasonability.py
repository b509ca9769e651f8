"""Partition variables and constraints into classes that may be permuted onto each other."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable

from .mps import MipInstance


@dataclass(frozen=True)
class SignatureConfig:
    """Which data enter the variable and constraint signatures.

    Objective coefficient and integrality (variables) and right-hand side
    (constraints) are always part of the signature. ``use_coefficients``
    adds the sorted nonzero column (row) coefficients, which every symmetry
    preserves and which separates e.g. variables with equal cost but
    different weights. ``coeff_tolerance_digits``
    switches every coefficient comparison, here and in the verifier, from
    exact float equality to equality after rounding to that many
    significant digits.
    """

    use_bounds: bool = True
    use_sense: bool = True
    use_coefficients: bool = True
    sharpen_var_degree: bool = False
    sharpen_con_size: bool = False
    coeff_tolerance_digits: int | None = None

    def __post_init__(self):
        if self.coeff_tolerance_digits is not None and self.coeff_tolerance_digits < 1:
            raise ValueError("coeff_tolerance_digits must be a positive integer")

    def key(self, value: float) -> float:
        """Canonical form of a coefficient under the configured equality mode."""
        return value_key(value, self.coeff_tolerance_digits)


def value_key(value: float, digits: int | None) -> float:
    value = float(value)
    if digits is None or value == 0 or value != value or value in (float("inf"), float("-inf")):
        return value + 0.0  # folds -0.0 into 0.0
    return float(f"{value:.{digits - 1}e}")


@dataclass(frozen=True)
class ReasonabilityPartition:
    var_class_of: tuple[int, ...]
    var_classes: tuple[tuple[int, ...], ...]
    con_class_of: tuple[int, ...]
    con_classes: tuple[tuple[int, ...], ...]
    config: SignatureConfig = field(default_factory=SignatureConfig)

    @property
    def nu(self) -> int:
        return sum(len(c) ** 2 for c in self.var_classes)

    @property
    def mu(self) -> int:
        return sum(len(c) ** 2 for c in self.con_classes)

    @property
    def n(self) -> int:
        return len(self.var_class_of)

    @property
    def m(self) -> int:
        return len(self.con_class_of)

    def var_class(self, j: int) -> tuple[int, ...]:
        """Members of the class containing variable ``j``."""
        return self.var_classes[self.var_class_of[j]]

    def con_class(self, i: int) -> tuple[int, ...]:
        return self.con_classes[self.con_class_of[i]]

    def var_reasonable(self, j: int, k: int) -> bool:
        return self.var_class_of[j] == self.var_class_of[k]

    def con_reasonable(self, i: int, k: int) -> bool:
        return self.con_class_of[i] == self.con_class_of[k]


def variable_signature(mip: MipInstance, j: int, config: SignatureConfig | None = None) -> Hashable:
    config = config or SignatureConfig()
    if not 0 <= j < mip.n:
        raise IndexError(f"variable index {j} out of range 0..{mip.n - 1}")
    sig: tuple = (config.key(mip.objective.get(j, 0.0)), mip.is_integer[j])
    if config.use_bounds:
        sig += (config.key(mip.lower[j]), config.key(mip.upper[j]))
    if config.use_coefficients:
        sig += (tuple(sorted(config.key(v) for v in mip.columns[j].values())),)
    if config.sharpen_var_degree:
        sig += (len(mip.columns[j]),)
    return sig


def constraint_signature(mip: MipInstance, i: int, config: SignatureConfig | None = None) -> Hashable:
    config = config or SignatureConfig()
    if not 0 <= i < mip.m:
        raise IndexError(f"row index {i} out of range 0..{mip.m - 1}")
    sig: tuple = (config.key(mip.rhs[i]),)
    if config.use_sense:
        sig += (mip.sense[i],)
    if config.use_coefficients:
        sig += (tuple(sorted(config.key(v) for v in mip.rows[i].values())),)
    if config.sharpen_con_size:
        sig += (len(mip.rows[i]),)
    return sig


def _classes(signatures: list[Hashable]) -> tuple[tuple[int, ...], tuple[tuple[int, ...], ...]]:
    # class ids follow the first-appearing member
    ids: dict[Hashable, int] = {}
    class_of = []
    members: list[list[int]] = []
    for idx, sig in enumerate(signatures):
        if sig not in ids:
            ids[sig] = len(members)
            members.append([])
        class_of.append(ids[sig])
        members[ids[sig]].append(idx)
    return tuple(class_of), tuple(tuple(c) for c in members)


def build_partition(mip: MipInstance, config: SignatureConfig | None = None) -> ReasonabilityPartition:
    config = config or SignatureConfig()
    var_of, var_classes = _classes([variable_signature(mip, j, config) for j in range(mip.n)])
    con_of, con_classes = _classes([constraint_signature(mip, i, config) for i in range(mip.m)])
    return ReasonabilityPartition(var_of, var_classes, con_of, con_classes, config)


def max_decomp_class(partition: ReasonabilityPartition) -> tuple[int, int]:
    """Id and size of the largest variable class; ties go to the lower id."""
    if partition.n == 0:
        raise ValueError("partition has no variables")
    best = max(range(len(partition.var_classes)), key=lambda c: (len(partition.var_classes[c]), -c))
    return best, len(partition.var_classes[best])

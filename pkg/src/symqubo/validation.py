"""Input checks shared by the estimator and the command line."""

from __future__ import annotations

import os
import re
from typing import NamedTuple

from .mps import MipInstance, parse_mps, read_mps
from .reasonability import ReasonabilityPartition, max_decomp_class

FORMS = ("full", "reduced", "decomp", "plus-full", "plus-reduced", "plus-decomp")


class FormSpec(NamedTuple):
    base: str  # full | reduced | decomp
    plus: bool
    class_ref: str | None  # raw class reference for decompositions

    def __str__(self):
        name = ("plus-" if self.plus else "") + self.base
        return f"{name}:{self.class_ref}" if self.class_ref is not None else name


def check_mip(X) -> MipInstance:
    """Accept a MipInstance, an MPS path, or raw MPS bytes."""
    if isinstance(X, MipInstance):
        return X
    if isinstance(X, bytes):
        return parse_mps(X)
    if isinstance(X, (str, os.PathLike)):
        if not os.path.isfile(X):
            raise FileNotFoundError(f"no such MPS file: {os.fspath(X)}")
        return read_mps(X)
    raise TypeError(f"expected a MipInstance, an MPS path or MPS bytes, got {type(X).__name__}")


def parse_form(form: str) -> FormSpec:
    """Parse ``full``, ``reduced``, ``decomp:<class>`` and their ``plus-`` variants."""
    m = re.fullmatch(r"(plus-)?(full|reduced|decomp)(?::(.+))?", form.strip())
    if not m:
        raise ValueError(f"unknown form {form!r}; expected one of {', '.join(FORMS)} (decomp forms take :<class>)")
    plus, base, ref = bool(m.group(1)), m.group(2), m.group(3)
    if base == "decomp" and ref is None:
        raise ValueError(f"form {form!r} needs a class, e.g. {form}:max or {form}:0")
    if base != "decomp" and ref is not None:
        raise ValueError(f"form {base!r} takes no class reference")
    return FormSpec(base, plus, ref)


def resolve_class(mip: MipInstance, partition: ReasonabilityPartition, ref) -> int:
    """Class id from an int id, ``"max"``, or a variable name (its class)."""
    n_classes = len(partition.var_classes)
    if isinstance(ref, int):
        class_id = ref
    elif ref == "max":
        return max_decomp_class(partition)[0]
    elif isinstance(ref, str) and ref.lstrip("-").isdigit():
        class_id = int(ref)
    elif isinstance(ref, str) and ref in mip.var_names:
        return partition.var_class_of[mip.var_names.index(ref)]
    else:
        raise ValueError(f"unknown class reference {ref!r}: use a class id, 'max' or a variable name")
    if not 0 <= class_id < n_classes:
        raise ValueError(f"class id {class_id} out of range 0..{n_classes - 1}")
    return class_id

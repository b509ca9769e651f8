"""scikit-learn style front end: fit a MIP, read off its symmetry generators and orbits."""

from __future__ import annotations

import logging

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .mps import MipInstance
from .qubo import (
    QuboModel,
    QuboPlusModel,
    build_decomposed,
    build_full,
    build_quboplus_decomposed,
    build_quboplus_full,
    build_quboplus_reduced,
    build_reduced,
    quboplus_to_qubo,
)
from .reasonability import ReasonabilityPartition, SignatureConfig, build_partition
from .sampling import AnnealConfig, anneal, enumerate_exact
from .symmetry import decode, orbits
from .validation import check_mip, parse_form, resolve_class

logger = logging.getLogger(__name__)

# above this many bits the pruned search beats walking all 2**q assignments
BRUTE_FORCE_BITS = 22


def build_formulation(
    mip: MipInstance, partition: ReasonabilityPartition, form: str, fix_mode: str = "constants"
) -> QuboModel | QuboPlusModel:
    """Build the model named by a form string such as ``reduced`` or ``plus-decomp:max``."""
    parsed = parse_form(form)
    if parsed.base == "decomp":
        class_id = resolve_class(mip, partition, parsed.class_ref)
        if parsed.plus:
            return build_quboplus_decomposed(mip, partition, class_id)
        return build_decomposed(mip, partition, class_id, fix_mode=fix_mode)
    builders = {
        ("full", False): build_full,
        ("reduced", False): build_reduced,
        ("full", True): build_quboplus_full,
        ("reduced", True): build_quboplus_reduced,
    }
    return builders[parsed.base, parsed.plus](mip, partition)


class SymmetryDetector(BaseEstimator):
    """Detect formulation symmetries of a MIP through a zero-energy QUBO search.

    ``fit`` builds the requested formulation, collects its zero-energy
    assignments (exhaustively when the model has at most ``exact_limit``
    variables, otherwise by simulated annealing), decodes and verifies them.

    Parameters
    ----------
    form : str
        ``full``, ``reduced``, ``decomp:<class>`` or a ``plus-`` variant;
        ``<class>`` is a class id, ``max``, or a variable name.
    exact_limit : int
        Largest registry solved exactly; beyond 22 bits the exact search
        is branch and bound rather than plain enumeration.
    penalty : float
        Weight used to fold QUBO-Plus constraints back into the objective.

    Attributes
    ----------
    partition_ : ReasonabilityPartition
    model_ : QuboModel
        The (unconstrained) model that was sampled.
    generators_ : list of (pi, sigma)
        One verified witness per distinct variable permutation found.
    orbits_ : list of list of int
    labels_ : ndarray of shape (n_variables,)
        Orbit index of every variable.
    source_ : {"exact", "anneal"}
    n_rejected_ : int
        Zero-energy assignments that failed verification and were dropped.
    """

    def __init__(
        self,
        form="reduced",
        fix_mode="constants",
        exact_limit=24,
        seed=0,
        restarts=64,
        sweeps=2000,
        n_jobs=1,
        penalty=1.0,
        use_bounds=True,
        use_sense=True,
        use_coefficients=True,
        sharpen_var_degree=False,
        sharpen_con_size=False,
        coeff_tolerance_digits=None,
    ):
        self.form = form
        self.fix_mode = fix_mode
        self.exact_limit = exact_limit
        self.seed = seed
        self.restarts = restarts
        self.sweeps = sweeps
        self.n_jobs = n_jobs
        self.penalty = penalty
        self.use_bounds = use_bounds
        self.use_sense = use_sense
        self.use_coefficients = use_coefficients
        self.sharpen_var_degree = sharpen_var_degree
        self.sharpen_con_size = sharpen_con_size
        self.coeff_tolerance_digits = coeff_tolerance_digits

    def signature_config(self) -> SignatureConfig:
        return SignatureConfig(
            use_bounds=self.use_bounds,
            use_sense=self.use_sense,
            use_coefficients=self.use_coefficients,
            sharpen_var_degree=self.sharpen_var_degree,
            sharpen_con_size=self.sharpen_con_size,
            coeff_tolerance_digits=self.coeff_tolerance_digits,
        )

    def fit(self, X, y=None):
        mip = check_mip(X)
        config = self.signature_config()
        self.mip_ = mip
        self.n_features_in_ = mip.n
        self.partition_ = build_partition(mip, config)
        built = build_formulation(mip, self.partition_, self.form, self.fix_mode)
        self.model_ = quboplus_to_qubo(built, self.penalty) if isinstance(built, QuboPlusModel) else built

        if self.model_.num_variables <= self.exact_limit:
            self.source_ = "exact"
            method = "brute" if self.model_.num_variables <= BRUTE_FORCE_BITS else "branch"
            hits = enumerate_exact(self.model_, limit=self.exact_limit, method=method)
        else:
            self.source_ = "anneal"
            result = anneal(
                self.model_,
                AnnealConfig(seed=self.seed, restarts=self.restarts, sweeps=self.sweeps, n_jobs=self.n_jobs),
            )
            hits = list(result.zero_assignments)
            self.best_energy_ = result.energy

        witnesses: dict[tuple[int, ...], tuple[int, ...]] = {}
        self.n_rejected_ = 0
        for x in hits:
            d = decode(self.model_.registry, x, mip, config)
            if not (d.valid_permutation and d.is_symmetry):
                self.n_rejected_ += 1
                logger.error("zero-energy assignment failed verification: %s", d)
                continue
            witnesses.setdefault(d.pi, d.sigma)
        self.generators_ = sorted(witnesses.items())
        self.orbits_ = orbits(mip.n, [pi for pi, _ in self.generators_])
        labels = np.empty(mip.n, dtype=np.int64)
        for k, orbit in enumerate(self.orbits_):
            labels[orbit] = k
        self.labels_ = labels
        return self

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_

    def report(self) -> dict:
        """Symmetry report in the JSON layout written by ``symqubo detect``."""
        check_is_fitted(self, "generators_")
        names = self.mip_.var_names
        return {
            "instance": self.mip_.name,
            "form": self.form,
            "source": self.source_,
            "verified": True,
            "rejected": self.n_rejected_,
            "n_variables": self.model_.num_variables,
            "generators": [
                {"pi": list(pi), "sigma": list(sigma), "verified": True} for pi, sigma in self.generators_
            ],
            "orbits": [list(o) for o in self.orbits_],
            "orbit_names": [[names[j] for j in o] for o in self.orbits_],
        }

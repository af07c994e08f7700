"""Exact per-coalition least squares: ground truth and sequential baseline.

Dropping the design columns of excluded features and solving the reduced
normal equations yields the same coefficients as refitting on the reduced
design, because XᵀX marginalizes by subsetting. Fits run one coalition at a
time, one factorization each, which doubles as the honest sequential cost
profile for benchmarks. The factorizations here deliberately use LAPACK's
cho_factor/cho_solve rather than the batched block kernel: the two routes
stay independent of each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .coalitions import CoalitionPlan
from .errors import FactorizationError
from .solver import build_mask
from .tabular import GramSystem


@dataclass(frozen=True)
class OracleFit:
    """Exact OLS fit for one coalition: retained columns and coefficients."""

    columns: np.ndarray
    beta: np.ndarray

    def predict(self, x_encoded: np.ndarray) -> float:
        return float(x_encoded[self.columns] @ self.beta)


def fit_subset_ols(gram: GramSystem, mask: np.ndarray) -> OracleFit:
    """Solve the reduced normal equations Q_A beta = m_A exactly.

    ``mask`` is the 0/1 constraint diagonal; the retained columns are those
    with entry 0 (the intercept plus the columns of included features).
    """
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != (gram.q,):
        raise ValueError(f"mask must have shape ({gram.q},), got {mask.shape}")
    keep = np.flatnonzero(mask == 0.0)
    sub = gram.Q[np.ix_(keep, keep)]
    try:
        factor = scipy.linalg.cho_factor(sub, lower=True, check_finite=False)
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError) as exc:
        raise FactorizationError(
            f"retained submatrix (columns {keep.tolist()}) is singular: the "
            "sub-design is rank deficient") from exc
    beta = scipy.linalg.cho_solve(factor, gram.m[keep], check_finite=False)
    return OracleFit(columns=keep, beta=beta)


def fit_plan(gram: GramSystem, plan: CoalitionPlan, column_ranges) -> list[OracleFit]:
    """Fit every planned coalition exactly, one factorization per coalition."""
    fits = []
    for index, coalition in enumerate(plan):
        mask = build_mask(coalition, column_ranges)
        try:
            fits.append(fit_subset_ols(gram, mask))
        except FactorizationError as exc:
            raise FactorizationError(
                f"coalition {coalition.mask:#0{plan.p + 2}b} "
                f"(plan index {index}): {exc}",
                block_index=index, coalition_mask=coalition.mask) from None
    return fits


def evaluate_fits(fits, x_encoded: np.ndarray) -> np.ndarray:
    """Exact contribution values at one encoded row, aligned with the plan."""
    x = np.asarray(x_encoded, dtype=np.float64)
    return np.array([fit.predict(x) for fit in fits], dtype=np.float64)


def explain_exact(gram: GramSystem, plan: CoalitionPlan, column_ranges,
                  x_star_encoded: np.ndarray) -> np.ndarray:
    """Exact per-coalition values v(S) at one explained row."""
    return evaluate_fits(fit_plan(gram, plan, column_ranges), x_star_encoded)

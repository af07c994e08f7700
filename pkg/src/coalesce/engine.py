"""Weighted least-squares assembly of per-feature attributions.

Given the membership matrix Z, kernel weights W and contribution values v
over the planned coalitions, the attribution vector solves
Zᵀ W Z phi = Zᵀ W v. The coefficient of Z's intercept column is the base
value; the anchor weights pin it near v(empty) and pin the attribution sum
near v(full), and both residual gaps are reported as diagnostics rather
than forced to zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .coalitions import CoalitionPlan, build_Z
from .errors import (
    MissingFeatureError,
    PlanDeficiencyError,
    UnknownLevelError,
)
from .oracle import evaluate_fits
from .solver import CoefficientSet, contributions
from .tabular import FeatureSchema, encode_row


@dataclass(frozen=True)
class ShapleyResult:
    """Attribution for one explained row.

    ``base_value`` is the intercept coefficient (approximately v(empty)).
    ``efficiency_gap`` is (base_value + sum(phi)) - v(full) and ``base_gap``
    is base_value - v(empty); with anchor weights both stay tiny but are
    not exactly zero.
    """

    base_value: float
    phi: np.ndarray
    efficiency_gap: float
    base_gap: float
    row_id: int | None = None


def solve_kernel_shap(Z: np.ndarray, weights: np.ndarray, v: np.ndarray,
                      row_id: int | None = None) -> ShapleyResult:
    """Solve the weighted least squares Zᵀ W Z phi = Zᵀ W v for one row.

    Rows of Z, weights and v follow plan order: the empty coalition first
    and the full coalition last (those rows feed the diagnostics). The
    system is solved through an economic QR of sqrt(W) Z rather than a
    Cholesky factorization of the normal matrix: the anchor weights make
    the normal matrix's condition the square of the design's, which is too
    ill-conditioned for the linearity this map must keep. Raises
    :class:`PlanDeficiencyError` when the system is rank deficient, which
    under a sampled plan means too few distinct coalitions were drawn.
    """
    Z = np.asarray(Z, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    n, p_plus_1 = Z.shape
    if w.shape != (n,) or v.shape != (n,):
        raise ValueError(
            f"Z has {n} rows but weights have shape {w.shape} and v {v.shape}")
    if n < p_plus_1:
        raise PlanDeficiencyError(
            f"{n} coalitions cannot identify {p_plus_1} coefficients; "
            "increase the number of sampled coalitions")
    sqrt_w = np.sqrt(w)
    Q, R = scipy.linalg.qr(Z * sqrt_w[:, np.newaxis], mode="economic",
                           check_finite=False)
    diagonal = np.abs(np.diag(R))
    if diagonal.min() <= p_plus_1 * np.finfo(np.float64).eps * diagonal.max():
        raise PlanDeficiencyError(
            "coalition system is rank deficient; the sampled plan does not "
            "cover enough distinct coalitions - increase the number of draws")
    solution = scipy.linalg.solve_triangular(R, Q.T @ (sqrt_w * v),
                                             lower=False, check_finite=False)
    base = float(solution[0])
    phi = solution[1:]
    return ShapleyResult(
        base_value=base,
        phi=phi,
        efficiency_gap=float(base + phi.sum() - v[-1]),
        base_gap=float(base - v[0]),
        row_id=row_id,
    )


def explain_batch(schema: FeatureSchema, column_ranges, plan: CoalitionPlan,
                  source, rows, predictions, row_ids=None,
                  ) -> tuple[list[ShapleyResult], list[tuple[int, str]]]:
    """Attribute a batch of rows against one shared set of coalition fits.

    ``source`` is either a :class:`CoefficientSet` from the penalized solver
    or the list of exact :class:`OracleFit` objects; either way the
    per-coalition coefficients are row independent, so the expensive solve
    happens once and each row costs one encoding, one matvec and one small
    weighted least-squares solve.

    Rows that fail to encode are skipped and reported in the second return
    value as (row_id, message) pairs; they do not abort the batch.
    """
    rows = list(rows)
    if row_ids is None:
        row_ids = list(range(len(rows)))
    else:
        row_ids = list(row_ids)
        if len(row_ids) != len(rows):
            raise ValueError(
                f"{len(rows)} rows but {len(row_ids)} row ids")
    Z = build_Z(plan)
    weights = plan.weights
    use_coefficients = isinstance(source, CoefficientSet)
    results: list[ShapleyResult] = []
    failures: list[tuple[int, str]] = []
    for row_id, row in zip(row_ids, rows):
        try:
            encoded = encode_row(schema, column_ranges, row)
        except (UnknownLevelError, MissingFeatureError, ValueError) as exc:
            failures.append((row_id, str(exc)))
            continue
        if use_coefficients:
            v = contributions(source, encoded, predictions)
        else:
            v = evaluate_fits(source, encoded)
        results.append(solve_kernel_shap(Z, weights, v, row_id=row_id))
    return results, failures

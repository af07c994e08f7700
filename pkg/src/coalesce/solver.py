"""Batched penalized solves of every coalition-restricted regression.

Each coalition S gets the SPD system (Q + kappa * D_S) mu = m, where D_S is
a 0/1 diagonal penalizing the design columns of the features outside S; the
intercept is never penalized. A large kappa drives the penalized
coefficients toward zero, so one family of same-shape blocks reproduces
every restricted least-squares fit at once instead of refitting per subset.
Blocks are factored in chunks; a chunk may also be assembled into one
explicit sparse block-diagonal system and factored as such, with exactly
the same result. Coefficients are independent of the rows being explained,
which is what lets one solve serve any number of explanations.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse

from .coalitions import Coalition, CoalitionPlan
from .errors import FactorizationError
from .linalg import block_diag_spd_solve, spd_solve_stack
from .tabular import GramSystem

DEFAULT_KAPPA_MULTIPLIER = 1.0e3
DEFAULT_CHUNK_SIZE = 1024

#: Multiplier grid used by the convergence and suppression checks.
KAPPA_SWEEP_MULTIPLIERS = (1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8)


@dataclass(frozen=True)
class CoefficientSet:
    """Solved coefficients, one length-q row per planned coalition."""

    values: np.ndarray
    kappa: float

    @property
    def n_coalitions(self) -> int:
        return int(self.values.shape[0])

    @property
    def q(self) -> int:
        return int(self.values.shape[1])


def kappa_default(gram: GramSystem,
                  multiplier: float = DEFAULT_KAPPA_MULTIPLIER) -> float:
    """Penalty scale: ``multiplier`` times the largest diagonal entry of Q."""
    if not np.isfinite(gram.max_diag) or gram.max_diag <= 0.0:
        raise ValueError(
            f"degenerate Gram matrix: max diagonal entry is {gram.max_diag!r}")
    if multiplier <= 0.0:
        raise ValueError(f"multiplier must be positive, got {multiplier}")
    return float(multiplier) * gram.max_diag


def _width(column_ranges) -> int:
    return column_ranges[-1][1] if column_ranges else 1


def build_mask(coalition: Coalition, column_ranges) -> np.ndarray:
    """0/1 constraint diagonal for one coalition.

    Entry j is 1 exactly when design column j belongs to a feature outside
    the coalition; all dummy columns of an excluded categorical feature are
    constrained together. The intercept entry is always 0.
    """
    q = _width(column_ranges)
    mask = np.zeros(q, dtype=np.float64)
    for feature, (start, stop) in enumerate(column_ranges):
        if not coalition.contains(feature):
            mask[start:stop] = 1.0
    return mask


def constraint_matrix(masks: np.ndarray, column_ranges, p: int) -> np.ndarray:
    """Constraint diagonals for many coalitions at once, one row per mask.

    Row j equals ``build_mask`` of coalition ``masks[j]``.
    """
    q = _width(column_ranges)
    bits = (np.asarray(masks, dtype=np.int64)[:, np.newaxis]
            >> np.arange(p, dtype=np.int64)) & 1
    absent = 1.0 - bits.astype(np.float64)
    out = np.zeros((masks.shape[0], q), dtype=np.float64)
    for feature, (start, stop) in enumerate(column_ranges):
        out[:, start:stop] = absent[:, feature:feature + 1]
    return out


def _solve_block_stack(gram: GramSystem, constraint_rows: np.ndarray,
                       kappa: float, joint_assembly: bool) -> np.ndarray:
    """Solve (Q + kappa * diag(row)) mu = m for every constraint row."""
    n_blocks, q = constraint_rows.shape
    blocks = np.broadcast_to(gram.Q, (n_blocks, q, q)).copy()
    diagonal = np.arange(q)
    blocks[:, diagonal, diagonal] += kappa * constraint_rows
    if joint_assembly:
        joint = scipy.sparse.block_diag(list(blocks), format="csc")
        rhs = np.tile(gram.m, n_blocks)
        return block_diag_spd_solve(joint, rhs, q).reshape(n_blocks, q)
    rhs = np.broadcast_to(gram.m, (n_blocks, q))
    return spd_solve_stack(blocks, rhs)


def solve_coalition(gram: GramSystem, mask: np.ndarray, kappa: float) -> np.ndarray:
    """Solve one penalized system (Q + kappa * diag(mask)) mu = m.

    Runs the same stacked kernel as :func:`solve_plan_chunked` with a stack
    of one, so the result is bit-identical to the plan-level solve.
    """
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != (gram.q,):
        raise ValueError(f"mask must have shape ({gram.q},), got {mask.shape}")
    if mask[0] != 0.0:
        raise ValueError("the intercept column must never be constrained")
    if not np.isfinite(kappa) or kappa <= 0.0:
        raise ValueError(f"kappa must be positive and finite, got {kappa}")
    try:
        return _solve_block_stack(gram, mask[np.newaxis, :], kappa,
                                  joint_assembly=False)[0]
    except FactorizationError as exc:
        raise FactorizationError(
            "penalized system is not positive definite for constraint mask "
            f"{mask.astype(int).tolist()}; check that the design matrix has "
            "full column rank", block_index=exc.block_index) from None


def solve_plan_chunked(gram: GramSystem, plan: CoalitionPlan, column_ranges,
                       kappa: float, *, chunk_size: int = DEFAULT_CHUNK_SIZE,
                       threads: int = 1,
                       joint_assembly: bool = False) -> CoefficientSet:
    """Solve every planned coalition's penalized system.

    The plan is split into chunks of at most ``chunk_size`` coalitions, so
    no more than ``chunk_size`` blocks (times the number of threads) are
    materialized at any moment. Results land in slots preassigned by
    coalition index, making the output a pure function of
    (gram, plan, kappa): chunk size, thread count and the joint-assembly
    flag never change a single bit.

    Parameters
    ----------
    joint_assembly : bool
        Assemble each chunk into one explicit sparse block-diagonal matrix
        and factor that, instead of factoring the stacked blocks directly.
        Both paths run the same per-block kernel and agree exactly.
    """
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be >= 1, got {chunk_size}")
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    if not np.isfinite(kappa) or kappa <= 0.0:
        raise ValueError(f"kappa must be positive and finite, got {kappa}")
    q = gram.q
    if _width(column_ranges) != q:
        raise ValueError(
            f"column ranges describe {_width(column_ranges)} design columns "
            f"but the Gram matrix has {q}")
    n = len(plan)
    out = np.empty((n, q), dtype=np.float64)
    starts = range(0, n, chunk_size)

    def run_chunk(start: int) -> None:
        stop = min(start + chunk_size, n)
        rows = constraint_matrix(plan.masks[start:stop], column_ranges, plan.p)
        try:
            out[start:stop] = _solve_block_stack(gram, rows, kappa, joint_assembly)
        except FactorizationError as exc:
            offset = exc.block_index if exc.block_index is not None else 0
            index = start + offset
            mask = int(plan.masks[index])
            raise FactorizationError(
                f"coalition {mask:#0{plan.p + 2}b} (plan index {index}): "
                "penalized system is not positive definite; check that the "
                "design matrix has full column rank",
                block_index=index, coalition_mask=mask) from None

    if threads == 1:
        for start in starts:
            run_chunk(start)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for future in [pool.submit(run_chunk, start) for start in starts]:
                future.result()
    return CoefficientSet(values=out, kappa=float(kappa))


def contributions(coeffs: CoefficientSet, x_star_encoded: np.ndarray,
                  predictions) -> np.ndarray:
    """Per-coalition values at one explained row: v(S) = x* . mu_S.

    Evaluation uses the full q-length encoding; the penalized coefficients
    of excluded features are O(1/kappa), which is what neutralizes those
    features. ``predictions`` is the model-output vector the coefficients
    were fitted to; it is validated here because v inherits its scale.
    """
    x = np.asarray(x_star_encoded, dtype=np.float64)
    if x.shape != (coeffs.q,):
        raise ValueError(
            f"encoded row must have shape ({coeffs.q},), got {x.shape}")
    f = np.asarray(predictions, dtype=np.float64)
    if f.ndim != 1 or f.shape[0] == 0 or not np.all(np.isfinite(f)):
        raise ValueError("predictions must be a nonempty finite vector")
    return coeffs.values @ x

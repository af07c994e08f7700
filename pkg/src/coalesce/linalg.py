"""Dense SPD solve kernels shared by every linear solve in the package.

One Cholesky-plus-substitution routine backs the coalition blocks, the
assembled block-diagonal systems and the final weighted least-squares
solve. The substitution loops perform one elementwise vector operation per
(column, column) step, so each block's result is a pure function of that
block alone: it does not change with the number of blocks stacked together,
the chunking of a plan, or any threading schedule. Factorizations never
form an explicit inverse.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse

from .errors import FactorizationError


def cholesky_stack(blocks: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of each (q, q) block in an (m, q, q) stack.

    Raises
    ------
    FactorizationError
        If any block is not positive definite; the error carries the index
        of the first failing block.
    """
    try:
        return np.linalg.cholesky(blocks)
    except np.linalg.LinAlgError:
        for index in range(blocks.shape[0]):
            try:
                np.linalg.cholesky(blocks[index])
            except np.linalg.LinAlgError:
                raise FactorizationError(
                    f"block {index} of {blocks.shape[0]} is not positive definite",
                    block_index=index,
                ) from None
        raise  # pragma: no cover - stack failed but every block passed


def solve_lower_stack(L: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Forward substitution L y = b for every block; B has shape (m, q)."""
    _, q = B.shape
    y = np.empty_like(B, dtype=np.float64)
    for j in range(q):
        acc = B[:, j].astype(np.float64, copy=True)
        for k in range(j):
            acc -= L[:, j, k] * y[:, k]
        y[:, j] = acc / L[:, j, j]
    return y


def solve_upper_stack(L: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Back substitution Lᵀ x = b for every block, reading the lower factor."""
    _, q = B.shape
    x = np.empty_like(B, dtype=np.float64)
    for j in range(q - 1, -1, -1):
        acc = B[:, j].astype(np.float64, copy=True)
        for k in range(j + 1, q):
            acc -= L[:, k, j] * x[:, k]
        x[:, j] = acc / L[:, j, j]
    return x


def spd_solve_stack(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve A[i] x[i] = B[i] for a stack of SPD blocks via Cholesky."""
    L = cholesky_stack(A)
    return solve_upper_stack(L, solve_lower_stack(L, B))


def spd_solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a single SPD system with the stacked kernel (stack of one)."""
    b = np.asarray(b, dtype=np.float64)
    return spd_solve_stack(A[np.newaxis, :, :], b[np.newaxis, :])[0]


def block_diag_spd_solve(joint: scipy.sparse.spmatrix, rhs: np.ndarray,
                         block_size: int) -> np.ndarray:
    """Solve a sparse block-diagonal SPD system with a blockwise factorization.

    The matrix must decompose into square diagonal blocks of ``block_size``;
    the sparsity structure is verified before any numeric work. The Cholesky
    factor of a block-diagonal matrix is the block-diagonal of the per-block
    factors, so each block goes through the same stacked kernel used for
    independent solves and the two strategies agree exactly.
    """
    n_rows, n_cols = joint.shape
    if n_rows != n_cols:
        raise ValueError(f"joint matrix must be square, got {joint.shape}")
    if block_size < 1 or n_rows % block_size != 0:
        raise ValueError(
            f"matrix of order {n_rows} does not partition into blocks of {block_size}")
    n_blocks = n_rows // block_size
    coo = joint.tocoo()
    block_of_row = coo.row // block_size
    if np.any(coo.col // block_size != block_of_row):
        raise ValueError(
            "matrix has entries outside the diagonal blocks; "
            "blockwise factorization does not apply")
    blocks = np.zeros((n_blocks, block_size, block_size), dtype=np.float64)
    blocks[block_of_row, coo.row % block_size, coo.col % block_size] = coo.data
    rhs = np.asarray(rhs, dtype=np.float64)
    if rhs.shape != (n_rows,):
        raise ValueError(f"rhs must have shape ({n_rows},), got {rhs.shape}")
    solution = spd_solve_stack(blocks, rhs.reshape(n_blocks, block_size))
    return solution.reshape(n_rows)

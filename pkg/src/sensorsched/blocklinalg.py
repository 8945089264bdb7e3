"""Symmetric block-structured linear algebra.

Log-determinants, linear solves and block sums for symmetric
block-tridiagonal and block-diagonal matrices. The block-tridiagonal
routines run a Schur-complement pivot recursion

    D_1 = B_1,   D_k = B_k - C_k D_{k-1}^{-1} C_k^T,

so their cost is linear in the number of blocks; dense fallbacks are
provided for everything. All values are natural-log (nats).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .errors import DimensionMismatchError, NotPositiveDefiniteError

__all__ = [
    "BlockTridiagonalMatrix",
    "BlockDiagonalMatrix",
    "logdet_dense",
    "logdet_block_tridiagonal",
    "logdet_block_tridiagonal_blocks",
    "solve_block_tridiagonal",
    "add_block_diagonal",
]


def _frozen_array(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class BlockTridiagonalMatrix:
    """Symmetric block-tridiagonal matrix with K square blocks of size n.

    Only the upper off-diagonal blocks are stored: block (k, k+1) is
    ``offdiag_blocks[k]`` and block (k+1, k) is its transpose. Diagonal
    blocks are symmetrized once here and never re-checked by operations.
    """

    diag_blocks: tuple[np.ndarray, ...]
    offdiag_blocks: tuple[np.ndarray, ...] = ()

    def __post_init__(self):
        diag = tuple(np.asarray(b, dtype=float) for b in self.diag_blocks)
        off = tuple(np.asarray(b, dtype=float) for b in self.offdiag_blocks)
        if not diag:
            raise DimensionMismatchError("need at least one diagonal block")
        n = diag[0].shape[0] if diag[0].ndim == 2 else -1
        for k, b in enumerate(diag):
            if b.shape != (n, n):
                raise DimensionMismatchError(
                    f"diagonal block {k} has shape {b.shape}, expected ({n}, {n})"
                )
        if len(off) != len(diag) - 1:
            raise DimensionMismatchError(
                f"{len(diag)} diagonal blocks need {len(diag) - 1} "
                f"off-diagonal blocks, got {len(off)}"
            )
        for k, b in enumerate(off):
            if b.shape != (n, n):
                raise DimensionMismatchError(
                    f"off-diagonal block {k} has shape {b.shape}, expected ({n}, {n})"
                )
        object.__setattr__(
            self, "diag_blocks", tuple(_frozen_array(0.5 * (b + b.T)) for b in diag)
        )
        object.__setattr__(self, "offdiag_blocks", tuple(_frozen_array(b) for b in off))

    @property
    def block_dim(self) -> int:
        return self.diag_blocks[0].shape[0]

    @property
    def num_blocks(self) -> int:
        return len(self.diag_blocks)

    @property
    def shape(self) -> tuple[int, int]:
        d = self.block_dim * self.num_blocks
        return (d, d)

    @classmethod
    def identity(cls, block_dim: int, num_blocks: int) -> "BlockTridiagonalMatrix":
        eye = np.eye(block_dim)
        zero = np.zeros((block_dim, block_dim))
        return cls(
            diag_blocks=tuple(eye for _ in range(num_blocks)),
            offdiag_blocks=tuple(zero for _ in range(num_blocks - 1)),
        )

    def assemble(self) -> np.ndarray:
        """Dense nK x nK array with the full symmetric fill-in."""
        n, K = self.block_dim, self.num_blocks
        out = np.zeros((n * K, n * K))
        for k, b in enumerate(self.diag_blocks):
            out[k * n:(k + 1) * n, k * n:(k + 1) * n] = b
        for k, b in enumerate(self.offdiag_blocks):
            out[k * n:(k + 1) * n, (k + 1) * n:(k + 2) * n] = b
            out[(k + 1) * n:(k + 2) * n, k * n:(k + 1) * n] = b.T
        return out

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """Product of the assembled matrix with a length-nK vector."""
        n, K = self.block_dim, self.num_blocks
        v = np.asarray(v, dtype=float)
        if v.shape != (n * K,):
            raise DimensionMismatchError(f"vector has shape {v.shape}, expected ({n * K},)")
        parts = v.reshape(K, n)
        out = np.empty_like(parts)
        for k in range(K):
            acc = self.diag_blocks[k] @ parts[k]
            if k > 0:
                acc = acc + self.offdiag_blocks[k - 1].T @ parts[k - 1]
            if k < K - 1:
                acc = acc + self.offdiag_blocks[k] @ parts[k + 1]
            out[k] = acc
        return out.reshape(-1)


@dataclass(frozen=True)
class BlockDiagonalMatrix:
    """Block-diagonal matrix; blocks may be rectangular (even 0-row)."""

    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        blocks = []
        for k, b in enumerate(self.blocks):
            arr = np.asarray(b, dtype=float)
            if arr.ndim != 2:
                raise DimensionMismatchError(f"block {k} is not a matrix: shape {arr.shape}")
            blocks.append(_frozen_array(arr))
        object.__setattr__(self, "blocks", tuple(blocks))

    @property
    def row_dims(self) -> tuple[int, ...]:
        return tuple(b.shape[0] for b in self.blocks)

    @property
    def col_dims(self) -> tuple[int, ...]:
        return tuple(b.shape[1] for b in self.blocks)

    @property
    def shape(self) -> tuple[int, int]:
        return (sum(self.row_dims), sum(self.col_dims))

    def assemble(self) -> np.ndarray:
        out = np.zeros(self.shape)
        r = c = 0
        for b in self.blocks:
            out[r:r + b.shape[0], c:c + b.shape[1]] = b
            r += b.shape[0]
            c += b.shape[1]
        return out


def logdet_dense(M: np.ndarray) -> float:
    """Log-determinant of a symmetric positive definite matrix, in nats.

    Raises:
        NotPositiveDefiniteError: if the symmetric factorization fails.
    """
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {A.shape}")
    if A.shape[0] == 0:
        return 0.0
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("dense factorization failed") from exc
    return float(2.0 * np.sum(np.log(np.diagonal(L))))


def logdet_block_tridiagonal_blocks(
    diag_blocks: Sequence[np.ndarray],
    offdiag_blocks: Sequence[np.ndarray],
) -> float:
    """Pivot-recursion log-determinant from explicit block lists.

    Block sizes may vary along the diagonal (0 x 0 blocks allowed);
    ``offdiag_blocks[k]`` is block (k, k+1). Cost is one small Cholesky
    factorization plus one triangular solve per block, so linear in the
    number of blocks.

    Raises:
        NotPositiveDefiniteError: if any pivot block fails to factor; the
            failing pivot is attached as ``exc.pivot`` for diagnostics.
    """
    logdet = 0.0
    chol_prev: np.ndarray | None = None
    for k, B in enumerate(diag_blocks):
        if k == 0 or chol_prev.shape[0] == 0:
            D = B
        else:
            U = offdiag_blocks[k - 1]
            if U.shape[1] == 0:
                D = B
            else:
                X = solve_triangular(chol_prev, U, lower=True, check_finite=False)
                D = B - X.T @ X
        if D.shape[0] == 0:
            chol_prev = D
            continue
        try:
            chol_prev = np.linalg.cholesky(D)
        except np.linalg.LinAlgError as exc:
            err = NotPositiveDefiniteError(f"pivot block {k} is not positive definite")
            err.pivot = D
            raise err from exc
        logdet += 2.0 * np.sum(np.log(np.diagonal(chol_prev)))
    return float(logdet)


def logdet_block_tridiagonal(M: BlockTridiagonalMatrix) -> float:
    """Log-determinant of an SPD block-tridiagonal matrix, linear in K.

    Runs the Schur pivot recursion; equals ``logdet_dense(M.assemble())``
    up to rounding.

    Raises:
        NotPositiveDefiniteError: if any pivot block fails to factor,
            which happens exactly when the assembled matrix is not SPD.
    """
    return logdet_block_tridiagonal_blocks(M.diag_blocks, M.offdiag_blocks)


def solve_block_tridiagonal(M: BlockTridiagonalMatrix, b: np.ndarray) -> np.ndarray:
    """Solve M x = b by block forward/backward substitution.

    Args:
        M: SPD block-tridiagonal matrix.
        b: right-hand side of length nK.

    Returns:
        Solution vector x of length nK.

    Raises:
        NotPositiveDefiniteError: on pivot factorization failure.
        DimensionMismatchError: if b has the wrong length.
    """
    n, K = M.block_dim, M.num_blocks
    rhs = np.asarray(b, dtype=float)
    if rhs.shape != (n * K,):
        raise DimensionMismatchError(f"rhs has shape {rhs.shape}, expected ({n * K},)")
    parts = rhs.reshape(K, n)

    chols: list[np.ndarray] = []
    ys = np.empty_like(parts)
    for k in range(K):
        if k == 0:
            D = M.diag_blocks[0]
            ys[0] = parts[0]
        else:
            U = M.offdiag_blocks[k - 1]
            X = solve_triangular(chols[k - 1], U, lower=True, check_finite=False)
            D = M.diag_blocks[k] - X.T @ X
            t = cho_solve((chols[k - 1], True), ys[k - 1], check_finite=False)
            ys[k] = parts[k] - U.T @ t
        try:
            chols.append(np.linalg.cholesky(D))
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError(
                f"pivot block {k} is not positive definite"
            ) from exc

    xs = np.empty_like(parts)
    xs[K - 1] = cho_solve((chols[K - 1], True), ys[K - 1], check_finite=False)
    for k in range(K - 2, -1, -1):
        xs[k] = cho_solve(
            (chols[k], True), ys[k] - M.offdiag_blocks[k] @ xs[k + 1], check_finite=False
        )
    return xs.reshape(-1)


def add_block_diagonal(
    M: BlockTridiagonalMatrix, D: BlockDiagonalMatrix
) -> BlockTridiagonalMatrix:
    """Sum of a block-tridiagonal matrix and a conforming block-diagonal one.

    D must have exactly K square n x n blocks; off-diagonals are unchanged,
    so the result stays block-tridiagonal.
    """
    n, K = M.block_dim, M.num_blocks
    if len(D.blocks) != K:
        raise DimensionMismatchError(f"expected {K} blocks, got {len(D.blocks)}")
    for k, blk in enumerate(D.blocks):
        if blk.shape != (n, n):
            raise DimensionMismatchError(
                f"block {k} has shape {blk.shape}, expected ({n}, {n})"
            )
    return BlockTridiagonalMatrix(
        diag_blocks=tuple(M.diag_blocks[k] + D.blocks[k] for k in range(K)),
        offdiag_blocks=M.offdiag_blocks,
    )

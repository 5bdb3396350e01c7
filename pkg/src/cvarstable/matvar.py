"""Matrix-variate probability and transform kernel.

Provides matrix-normal and inverse-Wishart sampling, vec/Kronecker helpers,
and the whitening machinery that maps inter-day observation columns with
diagonal covariance ``D_lambda`` onto columns with the intra-day covariance
``Sigma``:

* ``build_transform`` factors ``Sigma = U F U'`` and stores
  ``q_block = S^(1/2) U'`` with ``S_ii = F_ii / D_lambda_ii``, which solves
  ``q_block' D_lambda q_block = Sigma`` exactly.
* ``apply_transform`` left-multiplies each inter-day column by ``q_block'``;
  that is the action whose output covariance is ``q_block' D_lambda q_block``.
* ``forward_b`` / ``recover_b`` convert between a coefficient matrix ``B`` and
  its aggregate-transformed counterpart ``B_tilde`` via
  ``B_tilde' = M B'`` with ``M = tilde_t * I + sum_{i in tau} q_block``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import ConditioningError, ParameterError, ShapeError

__all__ = [
    "MatrixNormalSpec",
    "TransformSet",
    "check_spd",
    "sample_matrix_normal",
    "matrix_normal_logpdf",
    "sample_inverse_wishart",
    "inverse_wishart_logpdf",
    "kron_vec_apply",
    "build_transform",
    "apply_transform",
    "forward_b",
    "recover_b",
]

#: relative eigenvalue floor below which a matrix is treated as non-SPD
SPD_RTOL = 1e-10


def check_spd(m, name: str = "matrix") -> np.ndarray:
    """Validate symmetry and positive-definiteness; returns the array."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {m.shape}")
    if not np.allclose(m, m.T, rtol=1e-8, atol=1e-12):
        raise ParameterError(f"{name} is not symmetric")
    eig = np.linalg.eigvalsh(0.5 * (m + m.T))
    if eig[0] <= SPD_RTOL * max(eig[-1], 0.0) or eig[-1] <= 0.0:
        raise ConditioningError(
            f"{name} is not positive definite (eigenvalues in [{eig[0]:.3e}, {eig[-1]:.3e}])"
        )
    return m


@dataclass(frozen=True)
class MatrixNormalSpec:
    """Mean plus SPD row/column scale matrices of a matrix-normal law."""

    mean: np.ndarray
    row_scale: np.ndarray
    col_scale: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "row_scale", check_spd(self.row_scale, "row_scale"))
        object.__setattr__(self, "col_scale", check_spd(self.col_scale, "col_scale"))
        k, n = mean.shape
        if self.row_scale.shape != (k, k) or self.col_scale.shape != (n, n):
            raise ShapeError(
                f"scale shapes {self.row_scale.shape}/{self.col_scale.shape} do not "
                f"match mean shape {mean.shape}"
            )


@dataclass(frozen=True)
class TransformSet:
    """Whitening block plus the intra/inter-day column bookkeeping."""

    q_block: np.ndarray
    tilde_t: int
    total_t: int
    tau_idx: np.ndarray = field(default_factory=lambda: np.array([], dtype=int))

    def __post_init__(self):
        tau = np.asarray(self.tau_idx, dtype=int)
        object.__setattr__(self, "tau_idx", np.sort(tau))
        object.__setattr__(self, "q_block", np.asarray(self.q_block, dtype=float))
        if self.tilde_t + len(self.tau_idx) != self.total_t:
            raise ShapeError(
                f"tilde_t ({self.tilde_t}) + |tau| ({len(self.tau_idx)}) must equal "
                f"total_t ({self.total_t})"
            )
        if len(tau) and (tau.min() < 0 or tau.max() >= self.total_t):
            raise ShapeError("tau_idx entries out of column range")

    @property
    def n(self) -> int:
        return self.q_block.shape[0]

    def aggregate_block(self) -> np.ndarray:
        """``M = tilde_t * I + sum over inter-day columns of q_block``."""
        return self.tilde_t * np.eye(self.n) + len(self.tau_idx) * self.q_block


def sample_matrix_normal(spec: MatrixNormalSpec, rng: np.random.Generator) -> np.ndarray:
    """Draw one matrix with row covariance ``row_scale``, column covariance ``col_scale``."""
    try:
        l_row = np.linalg.cholesky(spec.row_scale)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(f"row_scale Cholesky failed: {exc}") from exc
    try:
        l_col = np.linalg.cholesky(spec.col_scale)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(f"col_scale Cholesky failed: {exc}") from exc
    z = rng.standard_normal(spec.mean.shape)
    return spec.mean + l_row @ z @ l_col.T


def matrix_normal_logpdf(x, mean, row_prec, col_cov) -> float:
    """Log-density of a matrix normal given the row *precision* matrix.

    ``x`` and ``mean`` are k x n; ``row_prec`` is the k x k inverse of the row
    covariance and ``col_cov`` the n x n column covariance.
    """
    x = np.asarray(x, dtype=float)
    mean = np.asarray(mean, dtype=float)
    k, n = x.shape
    sign_a, logdet_a = np.linalg.slogdet(row_prec)
    sign_c, logdet_c = np.linalg.slogdet(col_cov)
    if sign_a <= 0 or sign_c <= 0:
        raise ConditioningError("matrix-normal scale matrices must be positive definite")
    diff = x - mean
    quad = float(np.trace(np.linalg.solve(col_cov, diff.T) @ row_prec @ diff))
    return -0.5 * (k * n * np.log(2.0 * np.pi) - n * logdet_a + k * logdet_c + quad)


def sample_inverse_wishart(scale, dof: float, rng: np.random.Generator) -> np.ndarray:
    """Draw an SPD matrix from the inverse Wishart with the given scale and dof."""
    scale = check_spd(scale, "scale")
    n = scale.shape[0]
    if dof <= n - 1:
        raise ParameterError(f"inverse Wishart needs dof > n - 1 = {n - 1}, got {dof}")
    draw = stats.invwishart.rvs(df=dof, scale=scale, random_state=rng)
    return np.atleast_2d(draw)


def inverse_wishart_logpdf(x, scale, dof: float) -> float:
    return float(stats.invwishart.logpdf(np.asarray(x), df=dof, scale=np.asarray(scale)))


def kron_vec_apply(a, x, b) -> np.ndarray:
    """Return ``A X B``, the matrix form of ``(B' kron A) vec(X)``."""
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[1] != x.shape[0] or x.shape[1] != b.shape[0]:
        raise ShapeError(
            f"non-conformable shapes for A X B: {a.shape}, {x.shape}, {b.shape}"
        )
    return a @ x @ b


def build_transform(sigma, d_lambda, tilde_t: int, total_t: int, tau_idx) -> TransformSet:
    """Construct the whitening block for the inter-day columns.

    Parameters
    ----------
    sigma : (n, n) SPD array
        Intra-day innovation covariance.
    d_lambda : (n,) or (n, n) array
        Strictly positive diagonal of the conditional inter-day covariance.
    tilde_t, total_t : int
        Intra-day and total column counts.
    tau_idx : array_like of int
        Sorted inter-day column indices.
    """
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ShapeError(f"sigma must be square, got shape {sigma.shape}")
    if np.max(np.abs(sigma - sigma.T)) > 1e-8 * max(np.max(np.abs(sigma)), 1.0):
        raise ParameterError("sigma is not symmetric")
    d = np.asarray(d_lambda, dtype=float)
    if d.ndim == 2:
        d = np.diag(d)
    if np.any(d <= 0.0) or not np.all(np.isfinite(d)):
        raise ParameterError("d_lambda diagonal must be strictly positive and finite")
    if d.shape[0] != sigma.shape[0]:
        raise ShapeError("sigma and d_lambda dimensions differ")

    eigval, eigvec = np.linalg.eigh(0.5 * (sigma + sigma.T))
    if eigval[-1] <= 0.0:
        raise ConditioningError("sigma is not positive definite")
    if eigval[0] <= SPD_RTOL * eigval[-1]:
        raise ConditioningError(
            f"sigma is near-singular (eigenvalue ratio {eigval[0] / eigval[-1]:.3e})"
        )
    order = np.argsort(-eigval, kind="stable")
    f = eigval[order]
    u = eigvec[:, order]
    # deterministic eigenvector signs: largest-magnitude entry positive
    for j in range(u.shape[1]):
        i_max = int(np.argmax(np.abs(u[:, j])))
        if u[i_max, j] < 0:
            u[:, j] = -u[:, j]
    s_half = np.sqrt(f / d)
    q_block = s_half[:, None] * u.T
    return TransformSet(q_block=q_block, tilde_t=tilde_t, total_t=total_t, tau_idx=tau_idx)


def apply_transform(y_star, ts: TransformSet) -> np.ndarray:
    """Whiten the inter-day columns of an ``n x T`` observation matrix.

    Columns outside ``tau_idx`` pass through unchanged; columns in ``tau_idx``
    are left-multiplied by ``q_block'`` so their covariance maps from
    ``D_lambda`` to ``q_block' D_lambda q_block = Sigma``.
    """
    y = np.asarray(y_star, dtype=float)
    if y.ndim != 2 or y.shape[1] != ts.total_t:
        raise ShapeError(
            f"expected an n x {ts.total_t} matrix, got shape {y.shape}"
        )
    out = y.copy()
    if len(ts.tau_idx):
        out[:, ts.tau_idx] = ts.q_block.T @ y[:, ts.tau_idx]
    return out


def forward_b(b, ts: TransformSet) -> np.ndarray:
    """Map ``B`` to its aggregate-transformed ``B_tilde`` via ``B_tilde' = M B'``."""
    b = np.asarray(b, dtype=float)
    if b.shape[1] != ts.n:
        raise ShapeError(f"B must have {ts.n} columns, got shape {b.shape}")
    return (ts.aggregate_block() @ b.T).T


def recover_b(b_tilde, ts: TransformSet) -> np.ndarray:
    """Invert the aggregate map: solve ``B_tilde' = M B'`` for ``B``."""
    bt = np.asarray(b_tilde, dtype=float)
    if bt.shape[1] != ts.n:
        raise ShapeError(f"B_tilde must have {ts.n} columns, got shape {bt.shape}")
    m = ts.aggregate_block()
    cond = np.linalg.cond(m)
    if not np.isfinite(cond) or cond > 1e12:
        raise ConditioningError("aggregate block M is singular", cond=cond)
    return np.linalg.solve(m, bt.T).T

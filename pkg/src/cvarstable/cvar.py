"""Error-correction model mechanics.

The model for an n-vector price series x_t with cointegration rank r is

    diff(x_t) = mu + alpha beta' x_{t-1} + sum_i Psi_i diff(x_{t-i}) + eps_t

with Gaussian innovations intra-day and, at the inter-day boundary indices
``tau``, independent per-asset alpha-stable innovations.  Stacked in
regression form ``Y = W B + E`` with ``W = [X, Z beta]`` and
``B = [mu'; Psi_1'; ...; alpha']``.

Time indexing: ``prices`` row 0 is the initial level x_0; regression rows run
over t = p+1 .. T-1 so every row has x_{t-1} and p-1 lagged differences.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla
from scipy import signal

from .errors import ConditioningError, EstimationError, ParameterError, ShapeError
from .stable import StableParams, sample_stable

__all__ = [
    "CvarParams",
    "SeriesData",
    "DesignSet",
    "build_design",
    "simulate_cvar",
    "ols_stats",
    "matrix_loglik",
    "johansen_estimate",
    "params_to_b",
    "b_to_params",
    "resolve_tau",
    "write_series_csv",
    "read_series_csv",
]


@dataclass(frozen=True)
class CvarParams:
    """ECM parameter bundle (mu, alpha, beta, Psi_i, Sigma) at rank r, lag p."""

    mu: np.ndarray
    alpha_adj: np.ndarray
    beta_coint: np.ndarray
    sigma: np.ndarray
    r: int
    p: int = 1
    psi: tuple = ()

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).ravel()
        alpha = np.atleast_2d(np.asarray(self.alpha_adj, dtype=float))
        beta = np.atleast_2d(np.asarray(self.beta_coint, dtype=float))
        sigma = np.asarray(self.sigma, dtype=float)
        n = mu.size
        if alpha.shape == (self.r, n) and self.r != n:
            alpha = alpha.T
        if beta.shape == (self.r, n) and self.r != n:
            beta = beta.T
        psi = tuple(np.asarray(m, dtype=float) for m in self.psi)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "alpha_adj", alpha)
        object.__setattr__(self, "beta_coint", beta)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "psi", psi)
        if not 1 <= self.r < n:
            raise ParameterError(f"rank r must satisfy 1 <= r < n, got r={self.r}, n={n}")
        if alpha.shape != (n, self.r) or beta.shape != (n, self.r):
            raise ShapeError(
                f"alpha/beta must be {n} x {self.r}, got {alpha.shape} and {beta.shape}"
            )
        if sigma.shape != (n, n):
            raise ShapeError(f"sigma must be {n} x {n}, got {sigma.shape}")
        if self.p < 1:
            raise ParameterError(f"lag order p must be >= 1, got {self.p}")
        if len(psi) != self.p - 1:
            raise ShapeError(f"need {self.p - 1} Psi matrices for p={self.p}, got {len(psi)}")
        if not np.allclose(beta[: self.r, : self.r], np.eye(self.r), atol=1e-10):
            raise ParameterError("beta_coint must be identified as [I_r, beta_*']'")

    @property
    def n(self) -> int:
        return self.mu.size

    @property
    def beta_free(self) -> np.ndarray:
        return self.beta_coint[self.r :, :]

    def pi_matrix(self) -> np.ndarray:
        return self.alpha_adj @ self.beta_coint.T


@dataclass(frozen=True)
class SeriesData:
    """Observed or simulated price levels plus inter-day boundary indices."""

    prices: np.ndarray
    tau_idx: np.ndarray = field(default_factory=lambda: np.array([], dtype=int))
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        prices = np.asarray(self.prices, dtype=float)
        tau = np.sort(np.asarray(self.tau_idx, dtype=int))
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "tau_idx", tau)
        if prices.ndim != 2:
            raise ShapeError(f"prices must be T x n, got shape {prices.shape}")
        if not np.all(np.isfinite(prices)):
            raise ParameterError("prices contain non-finite values")
        if len(tau) and (tau.min() < 1 or tau.max() >= prices.shape[0]):
            raise ShapeError("tau_idx must lie within 1 .. T-1")

    @property
    def t_raw(self) -> int:
        return self.prices.shape[0]

    @property
    def n(self) -> int:
        return self.prices.shape[1]

    @property
    def labels(self) -> list:
        return list(self.meta.get("labels", [f"asset{i + 1}" for i in range(self.n)]))


@dataclass(frozen=True)
class DesignSet:
    """Stacked regression blocks Y, X, Z and W = [X, Z beta] for one beta."""

    y: np.ndarray
    x: np.ndarray
    z: np.ndarray
    w: np.ndarray
    beta: np.ndarray
    times: np.ndarray
    is_tau: np.ndarray

    @property
    def t_rows(self) -> int:
        return self.y.shape[0]

    @property
    def n(self) -> int:
        return self.y.shape[1]

    @property
    def k(self) -> int:
        return self.w.shape[1]

    def with_beta(self, beta) -> "DesignSet":
        """Rebuild W for a new cointegration matrix, sharing Y, X, Z."""
        beta = np.atleast_2d(np.asarray(beta, dtype=float))
        w = np.hstack([self.x, self.z @ beta])
        return DesignSet(self.y, self.x, self.z, w, beta, self.times, self.is_tau)

    def rows(self, mask) -> "DesignSet":
        return DesignSet(
            self.y[mask], self.x[mask], self.z[mask], self.w[mask], self.beta,
            self.times[mask], self.is_tau[mask],
        )


def _design_blocks(series: SeriesData, p: int):
    x_levels = series.prices
    t_raw, n = x_levels.shape
    if t_raw <= p + 1:
        raise ShapeError(f"need more than p + 1 = {p + 1} price rows, got {t_raw}")
    dx = np.diff(x_levels, axis=0)  # dx[s] = x_{s+1} - x_s
    times = np.arange(p + 1, t_raw)
    y = dx[times - 1]
    z = x_levels[times - 1]
    cols = [np.ones((len(times), 1))]
    for lag in range(1, p):
        cols.append(dx[times - 1 - lag])
    x = np.hstack(cols)
    is_tau = np.isin(times, series.tau_idx)
    return y, x, z, times, is_tau


def build_design(series: SeriesData, p: int, beta_coint) -> DesignSet:
    """Assemble the regression blocks for lag order ``p`` and a given beta."""
    beta = np.atleast_2d(np.asarray(beta_coint, dtype=float))
    y, x, z, times, is_tau = _design_blocks(series, p)
    if beta.shape[0] != series.n:
        raise ShapeError(f"beta must have {series.n} rows, got shape {beta.shape}")
    w = np.hstack([x, z @ beta])
    return DesignSet(y=y, x=x, z=z, w=w, beta=beta, times=times, is_tau=is_tau)


def resolve_tau(tau_spec, t_len: int) -> np.ndarray:
    """Normalize a boundary schedule: None, modulus int, or explicit indices."""
    if tau_spec is None:
        return np.array([], dtype=int)
    if np.isscalar(tau_spec):
        m = int(tau_spec)
        if m < 2:
            raise ParameterError(f"tau modulus must be >= 2, got {m}")
        return np.arange(m, t_len, m, dtype=int)
    tau = np.sort(np.asarray(tau_spec, dtype=int))
    if len(tau) and (tau.min() < 1 or tau.max() >= t_len):
        raise ParameterError("explicit tau indices must lie within 1 .. T-1")
    return tau


def _level_coefficients(params: CvarParams):
    """Levels-VAR coefficient matrices A_1 .. A_p implied by the ECM form."""
    n, p = params.n, params.p
    pi = params.pi_matrix()
    mats = []
    if p == 1:
        mats.append(np.eye(n) + pi)
    else:
        mats.append(np.eye(n) + pi + params.psi[0])
        for j in range(2, p):
            mats.append(params.psi[j - 1] - params.psi[j - 2])
        mats.append(-params.psi[p - 2])
    return mats


def _companion_eigvals(mats):
    n = mats[0].shape[0]
    p = len(mats)
    comp = np.zeros((n * p, n * p))
    comp[:n, :] = np.hstack(mats)
    if p > 1:
        comp[n:, : n * (p - 1)] = np.eye(n * (p - 1))
    return np.linalg.eigvals(comp)


def simulate_cvar(
    params: CvarParams,
    stable,
    tau_spec,
    t_len: int,
    rng: np.random.Generator,
    labels=None,
) -> SeriesData:
    """Simulate ``t_len`` rows of price levels under the mixture noise model.

    ``stable`` is a per-asset list of :class:`StableParams` governing the
    innovations at the boundaries given by ``tau_spec`` (None for a pure
    Gaussian series).  Row 0 is the initial level x_0 = 0.
    """
    n = params.n
    tau = resolve_tau(tau_spec, t_len)
    if stable is not None:
        stable = list(stable)
        if len(stable) != n:
            raise ShapeError(f"need one StableParams per asset ({n}), got {len(stable)}")

    try:
        chol = np.linalg.cholesky(params.sigma)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(f"sigma Cholesky failed: {exc}") from exc
    eps = chol @ rng.standard_normal((n, t_len - 1))
    if stable is not None and len(tau):
        for i, sp in enumerate(stable):
            eps[i, tau - 1] = sample_stable(sp, len(tau), rng)

    mats = _level_coefficients(params)
    eig = _companion_eigvals(mats)
    meta = {"labels": list(labels) if labels is not None else [f"asset{i+1}" for i in range(n)]}
    if np.max(np.abs(eig)) > 1.0 + 1e-6:
        meta["stability_warning"] = True

    u = params.mu[:, None] + eps  # forcing terms for t = 1 .. t_len-1
    x = np.zeros((t_len, n))
    fast = False
    if params.p == 1:
        a1 = mats[0]
        eigval, eigvec = np.linalg.eig(a1)
        if np.linalg.cond(eigvec) < 1e10:
            v_inv_u = np.linalg.solve(eigvec, u.astype(complex))
            y = np.empty_like(v_inv_u)
            for i in range(n):
                y[i] = signal.lfilter([1.0], [1.0, -eigval[i]], v_inv_u[i])
            x[1:] = (eigvec @ y).real.T
            fast = True
    if not fast:
        state = [np.zeros(n) for _ in range(params.p)]  # x_{t-1} .. x_{t-p}
        for t in range(1, t_len):
            xt = u[:, t - 1].copy()
            for j, aj in enumerate(mats):
                xt += aj @ state[j]
            x[t] = xt
            state = [xt] + state[:-1]

    return SeriesData(prices=x, tau_idx=tau, meta=meta)


def ols_stats(d: DesignSet):
    """Least-squares coefficient matrix and residual cross-product.

    Returns ``(B_hat, S_hat)`` with ``B_hat = (W'W)^-1 W'Y`` and
    ``S_hat = (Y - W B_hat)'(Y - W B_hat)``, computed through a QR path.
    """
    w, y = d.w, d.y
    q, rmat = np.linalg.qr(w)
    diag = np.abs(np.diag(rmat))
    if diag.min() <= 1e-12 * max(diag.max(), 1.0):
        raise ConditioningError("design matrix W is rank deficient", cond=np.linalg.cond(w))
    b_hat = sla.solve_triangular(rmat, q.T @ y)
    resid = y - w @ b_hat
    return b_hat, resid.T @ resid


def matrix_loglik(d: DesignSet, b, sigma) -> float:
    """Matrix-variate Gaussian log-likelihood of ``(B, Sigma)`` for a design."""
    b = np.asarray(b, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    t, n = d.y.shape
    b_hat, s_hat = ols_stats(d)
    diff = b - b_hat
    quad = s_hat + diff.T @ (d.w.T @ d.w) @ diff
    sign, logdet = np.linalg.slogdet(sigma)
    if sign <= 0:
        raise ConditioningError("sigma must be positive definite")
    return -0.5 * (t * n * np.log(2.0 * np.pi) + t * logdet + np.trace(np.linalg.solve(sigma, quad)))


def _residualize(target, on):
    coef, *_ = np.linalg.lstsq(on, target, rcond=None)
    return target - on @ coef


def johansen_estimate(series: SeriesData, p: int, r: int, full_output: bool = False):
    """Reduced-rank (Johansen) MLE of the ECM at known rank ``r``.

    Solves the canonical-correlation eigenproblem between differenced and
    lagged-level residuals, normalizes the top-r eigenvectors to the
    ``[I_r, beta_*']'`` identification, then re-estimates ``mu``, ``Psi_i``,
    ``alpha`` and ``Sigma`` by OLS given beta.  With ``full_output`` the
    squared canonical correlations are returned as well.
    """
    n = series.n
    if series.t_raw < 10 * n:
        raise EstimationError(f"need at least 10 n = {10 * n} rows, got {series.t_raw}")
    if not (1 <= r < n):
        raise ParameterError(f"rank must satisfy 1 <= r < n, got {r}")

    y, x, z, _, _ = _design_blocks(series, p)
    t = y.shape[0]
    r0 = _residualize(y, x)
    r1 = _residualize(z, x)
    s00 = r0.T @ r0 / t
    s01 = r0.T @ r1 / t
    s11 = r1.T @ r1 / t

    s11_eigval, s11_eigvec = np.linalg.eigh(s11)
    null_mask = s11_eigval <= 1e-12 * max(s11_eigval[-1], 1.0)
    if null_mask.sum() >= r:
        # exact collinearity in the levels: null directions of S11 have zero
        # variance, i.e. perfectly cointegrated combinations
        beta_raw = s11_eigvec[:, : r]
        eigvals = np.ones(r)
    else:
        try:
            lchol = np.linalg.cholesky(s11)
        except np.linalg.LinAlgError as exc:
            raise EstimationError(f"S11 factorization failed: {exc}") from exc
        try:
            inner = np.linalg.solve(s00, s01)
        except np.linalg.LinAlgError as exc:
            raise EstimationError(f"S00 is singular: {exc}") from exc
        sym = sla.solve_triangular(lchol, (s01.T @ inner).T, lower=True)
        sym = sla.solve_triangular(lchol, sym.T, lower=True)
        sym = 0.5 * (sym + sym.T)
        lam, vecs = np.linalg.eigh(sym)
        order = np.argsort(-lam, kind="stable")
        eigvals = np.clip(lam[order][:r], 0.0, 1.0)
        beta_raw = sla.solve_triangular(lchol.T, vecs[:, order[:r]], lower=False)

    lead = beta_raw[:r, :r]
    if np.linalg.cond(lead) > 1e10:
        raise EstimationError("leading r x r block of beta is singular; cannot normalize")
    beta = beta_raw @ np.linalg.inv(lead)

    d = build_design(series, p, beta)
    # minimum-norm solve: the exact-collinearity shortcut leaves Z beta constant
    b_hat, *_ = np.linalg.lstsq(d.w, d.y, rcond=None)
    resid = d.y - d.w @ b_hat
    sigma_hat = resid.T @ resid / d.t_rows
    params = b_to_params(b_hat, beta, sigma_hat, p, r)
    if full_output:
        return params, eigvals
    return params


def params_to_b(params: CvarParams) -> np.ndarray:
    """Stack ``[mu'; Psi_1'; ...; alpha']`` into the regression coefficient B."""
    rows = [params.mu[None, :]]
    rows.extend(m.T for m in params.psi)
    rows.append(params.alpha_adj.T)
    return np.vstack(rows)


def b_to_params(b, beta, sigma, p: int, r: int) -> CvarParams:
    """Split a regression coefficient matrix back into ECM parameters."""
    b = np.asarray(b, dtype=float)
    n = b.shape[1]
    expected_k = 1 + n * (p - 1) + r
    if b.shape[0] != expected_k:
        raise ShapeError(f"B must have k = {expected_k} rows for p={p}, r={r}, got {b.shape[0]}")
    mu = b[0]
    psi = tuple(b[1 + n * i : 1 + n * (i + 1)].T for i in range(p - 1))
    alpha = b[expected_k - r :].T
    return CvarParams(
        mu=mu, alpha_adj=alpha, beta_coint=beta, sigma=np.asarray(sigma, dtype=float),
        r=r, p=p, psi=psi,
    )


# ---------------------------------------------------------------------------
# Series CSV interface: timestamp,<asset...>,is_boundary
# ---------------------------------------------------------------------------


def write_series_csv(path, series: SeriesData) -> None:
    labels = series.labels
    flags = np.zeros(series.t_raw, dtype=int)
    flags[series.tau_idx] = 1
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["timestamp", *labels, "is_boundary"])
        for t in range(series.t_raw):
            writer.writerow([str(t), *[repr(float(v)) for v in series.prices[t]], flags[t]])


def read_series_csv(path) -> SeriesData:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if len(header) < 3 or header[0] != "timestamp" or header[-1] != "is_boundary":
            raise ShapeError(f"{path}: expected header timestamp,<assets...>,is_boundary")
        labels = header[1:-1]
        prices, flags = [], []
        for row in reader:
            if not row:
                continue
            prices.append([float(v) for v in row[1:-1]])
            flags.append(int(row[-1]))
    prices = np.asarray(prices, dtype=float)
    tau = np.nonzero(np.asarray(flags, dtype=int))[0]
    return SeriesData(prices=prices, tau_idx=tau, meta={"labels": labels})

"""Lowest eigenpairs of the constrained pencil ``(K + c R) u = E M u``.

Block preconditioned conjugate-gradient Rayleigh-quotient minimization
(LOBPCG) with SVQB orthonormalization in the M-inner product and hard locking
of converged leading eigenvectors.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .strip import AssembledForms

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_MAXITER = 5000
#: Number of guard vectors carried on top of the requested count.
GUARD = 5


class ConvergenceError(RuntimeError):
    """Iteration budget exhausted; ``partial`` holds what was found so far."""

    def __init__(self, message: str, partial: "SpectrumSample"):
        super().__init__(message)
        self.partial = partial


@dataclass
class SpectrumSample:
    alpha: float
    d: float
    L: float
    h: float
    eigenvalues: np.ndarray
    residuals: np.ndarray
    iterations: int
    vectors: np.ndarray | None = field(default=None, repr=False)  # free-node block, M-orthonormal

    def __len__(self) -> int:
        return len(self.eigenvalues)

    @property
    def ground(self) -> float:
        return float(self.eigenvalues[0])


def make_preconditioner(A: sp.spmatrix, M: sp.spmatrix, shift: float, kind: str = "amg") -> Callable:
    """Approximate inverse of ``A + shift * M`` as a block operator.

    ``"jacobi"`` is the diagonal inverse; ``"amg"`` a smoothed-aggregation
    V-cycle; ``"none"`` the identity.
    """
    B = (A + shift * M).tocsr()
    if kind == "none":
        return lambda R: R
    if kind == "jacobi":
        inv = 1.0 / B.diagonal()
        return lambda R: inv[:, None] * R
    if kind == "amg":
        import pyamg

        # pyamg's smoother setup draws from the global numpy RNG; pin it for reproducibility.
        state = np.random.get_state()
        np.random.seed(0)
        try:
            ml = pyamg.smoothed_aggregation_solver(B, symmetry="symmetric", max_coarse=500)
            P = ml.aspreconditioner(cycle="V")
            P @ np.ones(B.shape[0])  # lazy spectral-radius estimates happen on first use
        finally:
            np.random.set_state(state)
        return lambda R: np.column_stack([P @ R[:, j] for j in range(R.shape[1])]) if R.shape[1] else R
    raise ValueError(f"unknown preconditioner {kind!r}")


def _svqb(U: np.ndarray, MU: np.ndarray, drop: float = 1e-12):
    """M-orthonormalize the columns of U, dropping near-dependent directions."""
    G = U.T @ MU
    G = 0.5 * (G + G.T)
    dg = np.sqrt(np.maximum(np.diag(G), np.finfo(float).tiny))
    Gs = G / dg[:, None] / dg[None, :]
    w, V = la.eigh(Gs)
    keep = w > drop * max(w.max(), 1.0)
    T = V[:, keep] / np.sqrt(w[keep]) / dg[:, None]
    return U @ T, MU @ T


def _project_out(W: np.ndarray, Q: np.ndarray, MQ: np.ndarray) -> np.ndarray:
    if Q.shape[1] == 0 or W.shape[1] == 0:
        return W
    return W - Q @ (MQ.T @ W)


def lobpcg(
    A: sp.spmatrix,
    M: sp.spmatrix,
    nev: int,
    *,
    precond: Callable[[np.ndarray], np.ndarray] | None = None,
    X0: np.ndarray | None = None,
    block: int | None = None,
    tol: float = DEFAULT_TOL,
    maxiter: int = DEFAULT_MAXITER,
    seed: int = 0,
):
    """Smallest ``nev`` eigenpairs of the symmetric definite pencil ``(A, M)``.

    Convergence per column: ``||A x - lam M x|| <= tol * (1 + |lam|) * ||M x||``.
    Returns ``(eigenvalues, vectors, residuals, iterations)``; raises
    :class:`ConvergenceError` carrying the converged part on budget exhaustion.
    """
    n = A.shape[0]
    if not 1 <= nev <= n:
        raise ValueError(f"need 1 <= nev <= {n}, got {nev}")
    precond = precond or (lambda R: R)
    bs = min(n, block or nev + GUARD)

    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, bs))
    if X0 is not None:
        k0 = min(bs, X0.shape[1])
        X[:, :k0] = X0[:, :k0]

    # Small problems: the block would span nearly everything; solve densely.
    if 3 * bs >= n:
        w, V = la.eigh(A.toarray(), M.toarray())
        V = V[:, :nev]
        res = np.linalg.norm(A @ V - (M @ V) * w[:nev], axis=0)
        return w[:nev], V, res, 0

    Y = np.empty((n, 0))
    MY = np.empty((n, 0))
    lam_Y = np.empty(0)
    res_Y = np.empty(0)

    MX = M @ X
    X, MX = _svqb(X, MX)
    AX = A @ X
    lam, C = la.eigh(0.5 * (X.T @ AX + AX.T @ X))
    X, AX, MX = X @ C, AX @ C, MX @ C
    P = AP = MP = None

    it = 0
    for it in range(1, maxiter + 1):
        R = AX - MX * lam
        res = np.linalg.norm(R, axis=0)
        conv = res <= tol * (1.0 + np.abs(lam)) * np.linalg.norm(MX, axis=0)

        need = nev - Y.shape[1]
        nlock = 0
        while nlock < min(need, len(conv)) and conv[nlock]:
            nlock += 1
        if nlock:
            Y = np.hstack([Y, X[:, :nlock]])
            MY = np.hstack([MY, MX[:, :nlock]])
            lam_Y = np.concatenate([lam_Y, lam[:nlock]])
            res_Y = np.concatenate([res_Y, res[:nlock]])
            X, AX, MX, R = X[:, nlock:], AX[:, nlock:], MX[:, nlock:], R[:, nlock:]
            lam, res, conv = lam[nlock:], res[nlock:], conv[nlock:]
            if P is not None:
                P, AP, MP = P[:, nlock:], AP[:, nlock:], MP[:, nlock:]
        if Y.shape[1] >= nev:
            break

        W = precond(R[:, ~conv])
        for _ in range(2):
            W = _project_out(W, Y, MY)
            W = _project_out(W, X, MX)
        W, MW = _svqb(W, M @ W)
        AW = A @ W

        blocks, ablocks, mblocks = [X, W], [AX, AW], [MX, MW]
        if P is not None and P.shape[1]:
            for Q, MQ in ((Y, MY), (X, MX), (W, MW)):
                P = _project_out(P, Q, MQ)
            P, MP = _svqb(P, M @ P)
            AP = A @ P
            blocks.append(P)
            ablocks.append(AP)
            mblocks.append(MP)
        S = np.hstack(blocks)
        AS = np.hstack(ablocks)
        MS = np.hstack(mblocks)

        GA = S.T @ AS
        GM = S.T @ MS
        try:
            theta, C = la.eigh(0.5 * (GA + GA.T), 0.5 * (GM + GM.T))
        except la.LinAlgError:
            # Lost M-orthogonality; restart the search directions.
            X, MX = _svqb(X, M @ X)
            AX = A @ X
            P = AP = MP = None
            continue
        nx = X.shape[1]
        Cx = C[:, :nx]
        lam = theta[:nx]
        Cp = Cx[nx:]
        P, AP, MP = S[:, nx:] @ Cp, AS[:, nx:] @ Cp, MS[:, nx:] @ Cp
        X, AX, MX = S @ Cx, AS @ Cx, MS @ Cx
        if it % 25 == 0:
            # Refresh products to stop drift from the implicit updates.
            X, MX = _svqb(_project_out(X, Y, MY), M @ X)
            AX = A @ X
            lam, C = la.eigh(0.5 * (X.T @ AX + AX.T @ X))
            X, AX, MX = X @ C, AX @ C, MX @ C
            P = AP = MP = None
    else:
        order = np.argsort(lam_Y)
        raise ConvergenceError(
            f"LOBPCG: {Y.shape[1]} of {nev} eigenpairs converged in {maxiter} iterations",
            SpectrumSample(math.nan, math.nan, math.nan, math.nan, lam_Y[order], res_Y[order], maxiter,
                           Y[:, order]),
        )

    order = np.argsort(lam_Y)[:nev]
    return lam_Y[order], Y[:, order], res_Y[order], it


def smallest_eigenpairs(
    forms: AssembledForms,
    k: int,
    tol: float = DEFAULT_TOL,
    *,
    seed: int = 0,
    maxiter: int = DEFAULT_MAXITER,
    preconditioner: str = "amg",
    shift: float | None = None,
    X0: np.ndarray | None = None,
) -> SpectrumSample:
    """Lowest ``k`` eigenpairs of the Dirichlet-constrained discrete form.

    The preconditioner approximates ``(A + shift M)^{-1}``; ``shift`` defaults
    to ``1e-3`` times the transverse threshold scale ``pi^2 / (2 d^2)``.
    """
    A, M = forms.pencil()
    if k < 1 or k > A.shape[0]:
        raise ValueError(f"k must be in [1, {A.shape[0]}], got {k}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    mesh = forms.mesh
    if shift is None:
        shift = 1e-3 * math.pi**2 / (2 * mesh.d**2)
    T = make_preconditioner(A, M, shift, preconditioner)
    try:
        lam, V, res, its = lobpcg(A, M, k, precond=T, X0=X0, tol=tol, maxiter=maxiter, seed=seed)
    except ConvergenceError as err:
        p = err.partial
        p.alpha, p.d, p.L, p.h = forms.alpha, mesh.d, mesh.L, mesh.h
        raise
    # Relative residuals in the same normalization as the convergence test.
    rel = res / ((1.0 + np.abs(lam)) * np.linalg.norm(M @ V, axis=0))
    log.debug("alpha=%g L=%g m=%d: %d eigenpairs in %d iterations", forms.alpha, mesh.L, mesh.m, k, its)
    return SpectrumSample(
        alpha=forms.alpha, d=mesh.d, L=mesh.L, h=mesh.h,
        eigenvalues=lam, residuals=rel, iterations=its, vectors=V,
    )


def spectrum_below(
    forms: AssembledForms,
    threshold: float,
    tol: float = DEFAULT_TOL,
    *,
    k0: int = 8,
    kmax: int | None = None,
    **kwargs,
) -> SpectrumSample:
    """All eigenpairs below ``threshold`` plus at least one above it.

    Requests eigenpairs in growing batches (warm-started) until the largest
    computed eigenvalue reaches the threshold.
    """
    A, _ = forms.pencil()
    n = A.shape[0]
    kmax = min(n, kmax or n)
    k = min(k0, kmax)
    X0 = None
    while True:
        sample = smallest_eigenpairs(forms, k, tol, X0=X0, **kwargs)
        if sample.eigenvalues[-1] >= threshold or k == n:
            return sample
        if k >= kmax:
            raise ConvergenceError(
                f"{k} eigenpairs computed, all below {threshold}; budget kmax={kmax} reached",
                sample,
            )
        # Estimate how many more are needed from the level spacing so far.
        span = sample.eigenvalues[-1] - sample.eigenvalues[0]
        rate = (k - 1) / span if span > 0 else 1.0
        guess = int(k + 1.2 * rate * (threshold - sample.eigenvalues[-1])) + GUARD
        k, X0 = min(kmax, max(2 * k, guess)), sample.vectors


def count_below(
    forms: AssembledForms,
    threshold: float,
    tol: float = DEFAULT_TOL,
    *,
    margin: float = 0.0,
    **kwargs,
) -> int:
    """Number of discrete eigenvalues strictly below ``threshold - safety``.

    ``safety = max(tol * (1 + threshold), margin)``; pass the discretization
    margin from a convergence study as ``margin``.
    """
    if threshold <= 0:
        return 0
    cut = threshold - max(tol * (1.0 + threshold), margin)
    sample = spectrum_below(forms, threshold, tol, **kwargs)
    return int(np.count_nonzero(sample.eigenvalues < cut))

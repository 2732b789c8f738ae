"""Overlap-aware multi-class spectral clustering on a precomputed affinity matrix.

The pipeline is: p-binarization swept over p to pick the binarization level
and speaker count from Laplacian eigengaps, spectral embedding from the
random-walk matrix, then alternating discretization with an orthonormal
rotation where windows flagged as overlapped receive two labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from diartool.errors import InputError
from diartool.io import AffinityInput

EIGENGAP_EPS = 1e-10
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 100


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True)
class NmeResult:
    best_p: int
    k_hat: int
    p_values: tuple[int, ...]
    g_p: tuple[float, ...]
    r_p: tuple[float, ...]
    eigengaps: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class DiscreteAssignment:
    X: np.ndarray
    R: np.ndarray
    phi: float
    iterations: int
    phi_history: tuple[float, ...] = ()

    def labels(self) -> list[list[int]]:
        return [np.flatnonzero(row).tolist() for row in self.X]


def _square(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"affinity must be square, got shape {A.shape}")
    return A


def p_binarize(A: np.ndarray, p: int) -> np.ndarray:
    """Keep the ``p`` largest entries of each row as 1, then symmetrize.

    Ties go to the lower column index. Entries with no positive affinity are
    never kept, so a row with fewer than ``p`` positive entries keeps fewer
    than ``p`` ones. The result takes values in {0, 1/2, 1}.
    """
    A = _square(A)
    n = A.shape[0]
    if not 1 <= p < n:
        raise InputError(f"p must satisfy 1 <= p < N={n}, got {p}")
    # stable sort on the negated row puts equal values in column order
    top = np.argsort(-A, axis=1, kind="stable")[:, :p]
    Ap = np.zeros_like(A)
    np.put_along_axis(Ap, top, 1.0, axis=1)
    Ap[A <= 0] = 0.0
    return 0.5 * (Ap + Ap.T)


def laplacian(A: np.ndarray) -> np.ndarray:
    """Unnormalized Laplacian ``D - A``; negative affinities are clipped to 0."""
    A = np.clip(_square(A), 0.0, None)
    return np.diag(A.sum(axis=1)) - A


def spectrum(L: np.ndarray) -> Spectrum:
    vals, vecs = np.linalg.eigh(L)
    return Spectrum(vals, vecs)


def estimate_k(
    A: np.ndarray, p_min: int = 2, p_max: int = 20, max_speakers: int | None = None
) -> NmeResult:
    """Pick the binarization level and cluster count by normalized maximum eigengap.

    For each p the ratio ``p / g_p`` is formed, with ``g_p`` the largest
    eigengap over the largest eigenvalue; the smallest ratio wins (smaller p
    on ties) and the cluster count is the 1-based position of that p's
    largest gap. Only the first ``N // 2`` gaps (and at most
    ``max_speakers``) are searched: a count above N/2 would leave clusters of
    a single window, and the top of the spectrum of a binarized graph holds
    large gaps between hub eigenvalues that say nothing about clusters.
    """
    A = _square(A)
    n = A.shape[0]
    if p_min < 1 or p_max < p_min:
        raise InputError(f"invalid p range {p_min}..{p_max}")
    if n <= p_max:
        raise InputError(f"need N > p_max, got N={n}, p_max={p_max}")
    if not np.any(np.clip(A, 0.0, None)):
        raise InputError("affinity matrix has no positive entries")
    span = max(1, n // 2)
    if max_speakers is not None:
        if max_speakers < 1:
            raise InputError(f"max_speakers must be >= 1, got {max_speakers}")
        span = min(span, max_speakers)

    ps, gs, rs, gaps_all = [], [], [], []
    for p in range(p_min, p_max + 1):
        lam = np.linalg.eigvalsh(laplacian(p_binarize(A, p)))
        gaps = np.diff(lam)[:span]
        g = float(gaps.max() / (lam[-1] + EIGENGAP_EPS))
        ps.append(p)
        gs.append(g)
        rs.append(p / g if g > 0 else float("inf"))
        gaps_all.append(gaps)
    if all(g <= 0 for g in gs):
        raise InputError(
            f"no nonzero eigengap among the first {span} at any p; the affinity is "
            "degenerate (e.g. an identity matrix) or has more components than max_speakers"
        )
    best = int(np.argmin(rs))
    k_hat = int(np.argmax(gaps_all[best])) + 1
    return NmeResult(ps[best], k_hat, tuple(ps), tuple(gs), tuple(rs), np.array(gaps_all))


def spectral_embed(A: np.ndarray, K: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-K eigenvectors of ``P = D^-1 A`` and their row-normalized form.

    Solved through the symmetric matrix ``D^-1/2 A D^-1/2``, whose eigenvectors
    ``u`` give those of ``P`` as ``D^-1/2 u``. Returns ``(Z, X_tilde)``.
    """
    A = np.clip(_square(A), 0.0, None)
    n = A.shape[0]
    if not 1 <= K <= n:
        raise InputError(f"K must be in 1..{n}, got {K}")
    d = A.sum(axis=1)
    if np.any(d <= 0):
        rows = np.flatnonzero(d <= 0).tolist()
        raise InputError(
            f"rows {rows} have zero degree; add a small positive floor to the affinity"
        )
    inv_sqrt = 1.0 / np.sqrt(d)
    S = inv_sqrt[:, None] * A * inv_sqrt[None, :]
    S = 0.5 * (S + S.T)
    _, vecs = np.linalg.eigh(S)
    U = vecs[:, ::-1][:, :K]
    Z = inv_sqrt[:, None] * U
    X_tilde = Z / np.linalg.norm(Z, axis=1, keepdims=True)
    return Z, X_tilde


def initial_rotation(X_tilde: np.ndarray) -> np.ndarray:
    """Columns are rows of ``X_tilde`` chosen to be as orthogonal as possible.

    The first column is row 0; each next one is the row least aligned, in
    summed absolute cosine, with the columns chosen so far. Unlike the
    identity this does not depend on the arbitrary signs of the eigenvectors.
    """
    n, K = X_tilde.shape
    R = np.zeros((K, K))
    R[:, 0] = X_tilde[0]
    c = np.zeros(n)
    for k in range(1, K):
        c += np.abs(X_tilde @ R[:, k - 1])
        R[:, k] = X_tilde[int(np.argmin(c))]
    return R


def _nms(Y: np.ndarray, v_ol: np.ndarray) -> np.ndarray:
    order = np.argsort(-Y, axis=1, kind="stable")
    X = np.zeros_like(Y, dtype=int)
    rows = np.arange(Y.shape[0])
    X[rows, order[:, 0]] = 1
    two = np.flatnonzero(v_ol)
    X[two, order[two, 1]] = 1
    return X


def discretize(
    X_tilde: np.ndarray,
    v_ol: np.ndarray | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    on_iteration: Callable[[int, np.ndarray, np.ndarray, float], None] | None = None,
) -> DiscreteAssignment:
    """Alternate between the binary assignment and an orthonormal rotation.

    Given R, each row of ``X_tilde @ R`` keeps its largest entry (and its
    second largest where ``v_ol`` is 1). Given X, R comes from the SVD of
    ``X.T @ X_tilde``. R starts from :func:`initial_rotation`. Stops once
    ``phi = ||X - X_tilde R||^2`` changes by less than ``tol * N`` or after
    ``max_iter`` rounds. ``on_iteration(it, X, R, phi)`` is called after
    every round.
    """
    X_tilde = np.asarray(X_tilde, dtype=float)
    n, K = X_tilde.shape
    v_ol = np.zeros(n, dtype=int) if v_ol is None else np.asarray(v_ol)
    if v_ol.shape != (n,):
        raise InputError(f"overlap flags must have length {n}")
    if not np.isin(v_ol, (0, 1)).all():
        raise InputError("overlap flags must be 0 or 1")
    v_ol = v_ol.astype(int)
    if v_ol.any() and K < 2:
        raise InputError("overlap flags need at least two clusters")

    R = initial_rotation(X_tilde)
    history: list[float] = []
    X = _nms(X_tilde @ R, v_ol)
    it = 0
    for it in range(1, max_iter + 1):
        U, _, Vt = np.linalg.svd(X.T @ X_tilde)
        R = Vt.T @ U.T
        X = _nms(X_tilde @ R, v_ol)
        phi = float(np.sum((X - X_tilde @ R) ** 2))
        history.append(phi)
        if on_iteration is not None:
            on_iteration(it, X, R, phi)
        if len(history) > 1 and abs(history[-2] - phi) < tol * n:
            break
    return DiscreteAssignment(X, R, history[-1] if history else 0.0, it, tuple(history))


def cluster(
    data: AffinityInput,
    k: int | None = None,
    p_min: int = 2,
    p_max: int = 20,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    max_speakers: int | None = None,
) -> list[list[int]]:
    """Label every window with one cluster, or two where flagged as overlapped.

    ``p_max`` is lowered to N - 1 for small inputs. Windows count as
    overlapped when the caller's flags say so; deciding that from frame-level
    overlap output (e.g. at least half the window) is the caller's job.
    """
    A = np.clip(data.matrix, 0.0, None)
    n = A.shape[0]
    if n < 2:
        raise InputError("need at least two windows to cluster")
    p_hi = min(p_max, n - 1)
    p_lo = min(p_min, p_hi)
    nme = estimate_k(A, p_lo, p_hi, max_speakers)
    K = nme.k_hat if k is None else k
    flags = data.overlap_flags
    if K == 1 and flags is not None and flags.any():
        raise InputError(
            "a single speaker was estimated but some windows are flagged as overlapped; "
            "pass an explicit cluster count"
        )
    _, X_tilde = spectral_embed(p_binarize(A, nme.best_p), K)
    result = discretize(X_tilde, flags, tol=tol, max_iter=max_iter)
    return result.labels()

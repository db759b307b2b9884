"""Small dense symmetric-definite eigensolver (Cholesky + cyclic Jacobi)."""

import numpy as np

__all__ = ["dense_sym_gep", "jacobi_eigh", "cholesky_deflating"]

_EPS = np.finfo(float).eps


def cholesky_deflating(B, rel_tol=1e-12):
    """Cholesky of a symmetric PSD matrix, skipping numerically null directions.

    Returns ``(L, kept)`` with ``B[kept][:, kept] = L @ L.T``. A direction is
    dropped when its pivot falls below ``rel_tol * max(diag(B))``.
    """
    B = np.array(B, dtype=float)
    n = B.shape[0]
    thresh = rel_tol * max(float(np.max(np.diag(B))), 0.0) if n else 0.0
    kept = []
    L = np.zeros((n, n))
    for j in range(n):
        k = len(kept)
        row = L[j, :k]
        piv = B[j, j] - row @ row
        if piv <= thresh:
            continue
        d = np.sqrt(piv)
        L[j, k] = d
        rest = np.arange(j + 1, n)
        L[rest, k] = (B[rest, j] - L[rest, :k] @ row) / d
        kept.append(j)
    kept = np.array(kept, dtype=int)
    return L[np.ix_(kept, np.arange(kept.size))], kept


def jacobi_eigh(A, tol=None, max_sweeps=100):
    """Cyclic Jacobi for a real symmetric matrix; eigenvalues ascending."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    if n <= 1:
        return np.diag(A).copy(), V
    scale = np.linalg.norm(A)
    tol = _EPS * scale if tol is None else tol
    for _ in range(max_sweeps):
        # direct sum; ||A||^2 - ||diag||^2 cancels to sqrt(eps) accuracy
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                if tau == 0:
                    t = 1.0
                elif abs(tau) > 1e150:
                    t = 0.5 / tau
                else:
                    t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                ap, aq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap, aq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                A[p, q] = A[q, p] = 0.0
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def dense_sym_gep(Ahat, Bhat, rel_tol=1e-12):
    """Solve ``Ahat s = theta Bhat s`` for symmetric ``Ahat`` and SPD ``Bhat``.

    Returns
    -------
    theta : ndarray, ascending
    S : ndarray, ``n x m`` with ``S.T @ Bhat @ S = I``; rows of deflated
        directions are zero
    kept : ndarray of int
        Indices that survived the Cholesky pivot test; ``m = len(kept)`` is
        the reduced dimension.
    """
    Ahat = np.asarray(Ahat, dtype=float)
    Bhat = np.asarray(Bhat, dtype=float)
    Ahat = 0.5 * (Ahat + Ahat.T)
    Bhat = 0.5 * (Bhat + Bhat.T)
    n = Ahat.shape[0]
    L, kept = cholesky_deflating(Bhat, rel_tol)
    Ak = Ahat[np.ix_(kept, kept)]
    # C = L^{-1} A L^{-T}
    Y = np.linalg.solve(L, Ak)
    C = np.linalg.solve(L, Y.T)
    C = 0.5 * (C + C.T)
    theta, Q = jacobi_eigh(C)
    Sk = np.linalg.solve(L.T, Q)
    S = np.zeros((n, kept.size))
    S[kept] = Sk
    return theta, S, kept

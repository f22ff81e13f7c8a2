"""Dense matrix helpers and a one-sided Jacobi thin SVD for path matrices.

Path matrices stack parameter snapshots as rows, so they are short and very
wide (n rows, m columns, n << m).  The factorization first compresses the
wide matrix with a Householder QR of its transpose and then orthogonalizes
the rows of the small n x n triangular factor with cyclic one-sided Jacobi
rotations.  Pairs of rows are visited in round-robin (tournament) order so
that every round of disjoint rotations is applied as one vectorized update.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConvergenceFailure, InvalidMatrix, InvalidRank, OracleTooLarge

MAX_SWEEPS = 60
CONVERGENCE_TOL = 1e-12
_EPS = np.finfo(np.float64).eps


def as_matrix(data) -> np.ndarray:
    """Return `data` as a C-contiguous 2-D float64 array, rejecting NaN/Inf."""
    a = np.array(data, dtype=np.float64, order="C", copy=True)
    if a.ndim == 1:
        a = a[np.newaxis, :]
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise InvalidMatrix(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidMatrix("matrix contains non-finite entries")
    return a


@dataclass(frozen=True)
class TemporalSvd:
    """Thin SVD ``A = u @ diag(sigma) @ vt`` of a stacked path matrix.

    ``steps`` and ``layer`` record which snapshots and which layer segment the
    factorization was computed from; ``source`` keeps the input rows so that
    a full-rank reconstruction can hand back the original snapshot exactly.
    """

    u: np.ndarray
    sigma: np.ndarray
    vt: np.ndarray
    steps: Optional[np.ndarray] = None
    layer: Optional[str] = None
    source: Optional[np.ndarray] = None

    @property
    def d(self) -> int:
        return self.sigma.shape[0]

    @property
    def n(self) -> int:
        return self.u.shape[0]

    @property
    def m(self) -> int:
        return self.vt.shape[1]


def _tournament_rounds(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    # Circle method: n-1 rounds (n even) of n/2 disjoint pairs covering all pairs.
    players = list(range(n + (n % 2)))
    size = len(players)
    rounds = []
    for _ in range(size - 1):
        left = []
        right = []
        for k in range(size // 2):
            a, b = players[k], players[size - 1 - k]
            if a < n and b < n:
                left.append(min(a, b))
                right.append(max(a, b))
        if left:
            rounds.append((np.array(left), np.array(right)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _householder_qr(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Thin QR of a tall matrix (rows >= cols): returns Q (rows x cols), R (cols x cols)."""
    rows, cols = x.shape
    r = x.copy()
    reflectors = []
    for k in range(cols):
        col = r[k:, k]
        big = float(np.abs(col).max())
        if big == 0.0:
            reflectors.append(None)
            continue
        # scale before squaring so tiny columns don't underflow into subnormals
        norm = big * math.sqrt(float((col / big) @ (col / big)))
        alpha = -math.copysign(norm, col[0])
        v = col.copy()
        v[0] -= alpha
        v /= big
        v /= math.sqrt(float(v @ v))
        r[k:, k:] -= 2.0 * np.outer(v, v @ r[k:, k:])
        r[k + 1:, k] = 0.0
        reflectors.append(v)
    q = np.eye(rows, cols)
    for k in range(cols - 1, -1, -1):
        v = reflectors[k]
        if v is None:
            continue
        q[k:, k:] -= 2.0 * np.outer(v, v @ q[k:, k:])
    return q, np.triu(r[:cols, :])


def _complete_rows(w: np.ndarray, live: np.ndarray) -> np.ndarray:
    """Orthonormalize rows of `w` in order; rows not marked live are replaced
    by canonical basis vectors orthogonal to everything before them."""
    out = np.zeros_like(w)
    for i in range(w.shape[0]):
        if live[i]:
            v = w[i].copy()
            for _ in range(2):
                v -= out[:i].T @ (out[:i] @ v)
            norm = math.sqrt(float(v @ v))
            if norm > 0.5:
                out[i] = v / norm
                continue
        # dead (or numerically dependent) row: pick a fresh canonical direction
        for e in range(w.shape[1]):
            v = np.zeros(w.shape[1])
            v[e] = 1.0
            for _ in range(2):
                v -= out[:i].T @ (out[:i] @ v)
            norm = math.sqrt(float(v @ v))
            if norm > 0.5:
                out[i] = v / norm
                break
    return out


def _jacobi_rows(w: np.ndarray, scale: float) -> tuple[np.ndarray, np.ndarray]:
    """Rotate rows of square `w` until they are mutually orthogonal.

    Returns the rotated rows and the accumulated rotation ``J`` with
    ``J @ w_in == w_out``.
    """
    n = w.shape[0]
    w = w.copy()
    rot = np.eye(n)
    if n == 1:
        return w, rot
    rounds = _tournament_rounds(n)
    tiny = (scale * _EPS) ** 2
    for _ in range(MAX_SWEEPS):
        worst = 0.0
        for left, right in rounds:
            wl, wr = w[left], w[right]
            alpha = np.einsum("ij,ij->i", wl, wl)
            beta = np.einsum("ij,ij->i", wr, wr)
            gamma = np.einsum("ij,ij->i", wl, wr)
            live = (alpha > tiny) & (beta > tiny)
            cosine = np.zeros_like(gamma)
            cosine[live] = np.abs(gamma[live]) / (np.sqrt(alpha[live]) * np.sqrt(beta[live]))
            worst = max(worst, float(cosine.max()))
            act = live & (cosine > _EPS)
            if not act.any():
                continue
            idx = np.flatnonzero(act)
            a, b, g = alpha[idx], beta[idx], gamma[idx]
            zeta = (b - a) / (2.0 * g)
            t = np.where(zeta >= 0.0, 1.0, -1.0) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            li, ri = left[idx], right[idx]
            c_, s_ = c[:, None], s[:, None]
            wl_, wr_ = w[li], w[ri]
            w[li] = c_ * wl_ - s_ * wr_
            w[ri] = s_ * wl_ + c_ * wr_
            jl, jr = rot[li], rot[ri]
            rot[li] = c_ * jl - s_ * jr
            rot[ri] = s_ * jl + c_ * jr
        if worst <= CONVERGENCE_TOL:
            return w, rot
    raise ConvergenceFailure(
        f"one-sided Jacobi did not converge within {MAX_SWEEPS} sweeps (max cosine {worst:.3e})"
    )


def _apply_sign_convention(u: np.ndarray, vt: np.ndarray) -> None:
    lead = np.argmax(np.abs(vt), axis=1)
    flip = vt[np.arange(vt.shape[0]), lead] < 0.0
    vt[flip] *= -1.0
    u[:, flip] *= -1.0


def _svd_short(a: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # a is n x m with n <= m
    n, m = a.shape
    q, r = _householder_qr(a.T)
    scale = math.sqrt(float(np.sum(a * a)))
    w, rot = _jacobi_rows(r.T, scale)
    sigma = np.sqrt(np.einsum("ij,ij->i", w, w))
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    w = w[order]
    u = rot[order].T.copy()
    live = sigma > max(sigma[0] * n * _EPS, np.finfo(np.float64).tiny)
    w_unit = np.zeros_like(w)
    w_unit[live] = w[live] / sigma[live, None]
    w_unit = _complete_rows(w_unit, live)
    sigma = np.where(live, sigma, 0.0)
    vt = w_unit @ q.T
    return u, sigma, vt


def temporal_svd(path_matrix, steps=None, layer: Optional[str] = None) -> TemporalSvd:
    """Thin SVD of a path matrix with ``d = min(n, m)`` triplets.

    Singular values come out non-increasing.  Each singular triplet is signed
    so that the largest-magnitude entry of its ``vt`` row is non-negative,
    which makes repeated calls bit-identical.
    """
    a = as_matrix(path_matrix)
    n, m = a.shape
    d = min(n, m)
    if not np.any(a):
        u = np.eye(n, d)
        sigma = np.zeros(d)
        vt = np.eye(d, m)
    elif n <= m:
        u, sigma, vt = _svd_short(a)
    else:
        ut, sigma, vtt = _svd_short(a.T)
        u, vt = vtt.T.copy(), ut.T.copy()
    if np.any(a):
        _apply_sign_convention(u, vt)
    a.setflags(write=False)
    for arr in (u, sigma, vt):
        arr.setflags(write=False)
    if steps is not None:
        steps = np.asarray(steps, dtype=np.int64).copy()
        steps.setflags(write=False)
    return TemporalSvd(u=u, sigma=sigma, vt=vt, steps=steps, layer=layer, source=a)


def reconstruct(svd: TemporalSvd, keep: int) -> np.ndarray:
    """Rank-`keep` product ``U[:, :keep] diag(sigma[:keep]) Vt[:keep]``."""
    if not isinstance(keep, (int, np.integer)) or not 1 <= keep <= svd.d:
        raise InvalidRank(f"keep must be in [1, {svd.d}], got {keep!r}")
    return (svd.u[:, :keep] * svd.sigma[:keep]) @ svd.vt[:keep]


def relative_error(approx, exact) -> float:
    """Relative Frobenius error ``||approx - exact|| / ||exact||`` (absolute if exact is 0)."""
    exact = np.asarray(exact, dtype=np.float64)
    diff = float(np.linalg.norm(np.asarray(approx) - exact))
    base = float(np.linalg.norm(exact))
    return diff / base if base > 0 else diff


def gram_singular_oracle(a: Sequence) -> np.ndarray:
    """Singular values as square roots of the eigenvalues of ``A^T A``.

    Uses a plain cyclic Jacobi eigen-iteration written with Python scalars so
    it shares no code with :func:`temporal_svd`.  Tiny inputs only.
    """
    mat = as_matrix(a)
    rows, cols = mat.shape
    if rows * cols > 64 * 64:
        raise OracleTooLarge(f"oracle limited to 4096 entries, got {rows}x{cols}")
    g = [[sum(mat[k][i] * mat[k][j] for k in range(rows)) for j in range(cols)] for i in range(cols)]
    size = cols
    for _ in range(100):
        off = sum(g[p][q] ** 2 for p in range(size) for q in range(size) if p != q)
        if off == 0.0:
            break
        for p in range(size - 1):
            for q in range(p + 1, size):
                apq = g[p][q]
                if apq == 0.0:
                    continue
                theta = (g[q][q] - g[p][p]) / (2.0 * apq) if abs(apq) > 1e-300 else math.inf
                if abs(theta) > 1e150:
                    t = 0.5 / abs(theta)
                else:
                    t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                tau = s / (1.0 + c)
                g[p][p] -= t * apq
                g[q][q] += t * apq
                g[p][q] = g[q][p] = 0.0
                for r in range(size):
                    if r != p and r != q:
                        grp, grq = g[r][p], g[r][q]
                        g[r][p] = g[p][r] = grp - s * (grq + grp * tau)
                        g[r][q] = g[q][r] = grq + s * (grp - grq * tau)
    eig = sorted((g[i][i] for i in range(size)), reverse=True)
    d = min(rows, cols)
    return np.array([math.sqrt(max(e, 0.0)) for e in eig[:d]])

"""Singular value decomposition, truncation and the low-rank storage model.

The decomposition is Householder bidiagonalization followed by implicit
Wilkinson-shift QR sweeps on the bidiagonal (Golub-Kahan). Wide inputs are
factored through their transpose so the working matrix is always tall,
which keeps cost at O(min(m, t)^2 * max(m, t)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .errors import SvdConvergenceError
from .matrix import (
    DEFAULT_RANK_TOLERANCE,
    MatrixLike,
    TimeSeriesMatrix,
    as_array,
    numerical_rank,
)

_EPS = np.finfo(np.float64).eps
_SWEEPS_PER_VALUE = 75


# -- Householder bidiagonalization -----------------------------------------

def _householder(x):
    """Return (v, beta, alpha) with (I - beta v v^T) x = alpha e_1."""
    norm = float(np.linalg.norm(x))
    if norm == 0.0:
        return None, 0.0, 0.0
    x0 = float(x[0])
    alpha = -math.copysign(norm, x0)
    v = np.array(x, dtype=np.float64)
    v[0] = x0 - alpha
    beta = 1.0 / (norm * (norm + abs(x0)))
    return v, beta, alpha


def _bidiagonalize(a: np.ndarray, want_vectors: bool):
    """Reduce a tall p x n matrix (p >= n) to upper bidiagonal form.

    Returns (d, e, U1, V1) with a = U1 @ B @ V1.T, where U1 is p x n with
    orthonormal columns and V1 is n x n orthogonal. U1/V1 are None when
    ``want_vectors`` is false.
    """
    a = np.array(a, dtype=np.float64, copy=True)
    p, n = a.shape
    left, right = [], []
    for j in range(n):
        v, beta, alpha = _householder(a[j:, j])
        if v is not None:
            w = beta * (v @ a[j:, j + 1:])
            a[j:, j + 1:] -= np.outer(v, w)
        a[j, j] = alpha
        a[j + 1:, j] = 0.0
        left.append((v, beta))
        if j < n - 2:
            v, beta, alpha = _householder(a[j, j + 1:])
            if v is not None:
                w = beta * (a[j + 1:, j + 1:] @ v)
                a[j + 1:, j + 1:] -= np.outer(w, v)
            a[j, j + 1] = alpha
            a[j, j + 2:] = 0.0
            right.append((v, beta))

    d = [float(a[i, i]) for i in range(n)]
    e = [float(a[i, i + 1]) for i in range(n - 1)]
    if not want_vectors:
        return d, e, None, None

    u1 = np.eye(p, n)
    for j in range(n - 1, -1, -1):
        v, beta = left[j]
        if v is not None:
            u1[j:, j:] -= beta * np.outer(v, v @ u1[j:, j:])
    v1 = np.eye(n)
    for j in range(len(right) - 1, -1, -1):
        v, beta = right[j]
        if v is not None:
            v1[j + 1:, j + 1:] -= beta * np.outer(v, v @ v1[j + 1:, j + 1:])
    return d, e, u1, v1


# -- implicit-shift QR on the bidiagonal -----------------------------------

def _rotate_rows(m, a, b, c, s):
    # row_a <- c*row_a + s*row_b ; row_b <- -s*row_a + c*row_b
    if b == a + 1:
        pair = m[a:a + 2]
        pair[...] = np.array([[c, s], [-s, c]]) @ pair
        return
    ra = m[a].copy()
    m[a] = c * ra + s * m[b]
    m[b] = c * m[b] - s * ra


def _givens(f, g):
    r = math.hypot(f, g)
    if r == 0.0:
        return 1.0, 0.0, 0.0
    return f / r, g / r, r


def _bidiagonal_svd(d, e, ut, vt):
    """Diagonalize the upper bidiagonal (d, e) in place.

    ``ut``/``vt`` hold the transposed accumulated rotations (row i is the
    i-th column of the orthogonal factor); pass None to skip accumulation.
    """
    n = len(d)
    anorm = max([abs(d[i]) + (abs(e[i]) if i < n - 1 else 0.0) for i in range(n)] + [0.0])
    zero_tol = _EPS * anorm
    max_steps = _SWEEPS_PER_VALUE * max(n, 1)
    steps = 0
    hi = n - 1
    while hi > 0:
        if abs(e[hi - 1]) <= _EPS * (abs(d[hi - 1]) + abs(d[hi])):
            e[hi - 1] = 0.0
            hi -= 1
            continue

        lo = hi - 1
        while lo > 0:
            if abs(e[lo - 1]) <= _EPS * (abs(d[lo - 1]) + abs(d[lo])):
                e[lo - 1] = 0.0
                break
            lo -= 1

        zero_at = -1
        for i in range(lo, hi + 1):
            if abs(d[i]) <= zero_tol:
                zero_at = i
                break
        if zero_at >= 0:
            i = zero_at
            d[i] = 0.0
            if i < hi:
                # chase e[i] off to the right with left rotations
                f = e[i]
                e[i] = 0.0
                for j in range(i + 1, hi + 1):
                    c, s, r = _givens(d[j], f)
                    d[j] = r
                    if ut is not None:
                        _rotate_rows(ut, j, i, c, s)
                    if j < hi:
                        f = -s * e[j]
                        e[j] = c * e[j]
            else:
                # chase e[hi-1] upward with right rotations
                f = e[hi - 1]
                e[hi - 1] = 0.0
                for j in range(hi - 1, lo - 1, -1):
                    c, s, r = _givens(d[j], f)
                    d[j] = r
                    if vt is not None:
                        _rotate_rows(vt, j, hi, c, s)
                    if j > lo:
                        f = -s * e[j - 1]
                        e[j - 1] = c * e[j - 1]
            continue

        steps += 1
        if steps > max_steps:
            raise SvdConvergenceError(
                f"bidiagonal QR did not converge within {max_steps} steps"
            )

        # Wilkinson shift from the trailing 2x2 of B^T B
        dm, dn, em = d[hi - 1], d[hi], e[hi - 1]
        emm = e[hi - 2] if hi - 1 > lo else 0.0
        t11 = dm * dm + emm * emm
        t12 = dm * em
        t22 = dn * dn + em * em
        delta = 0.5 * (t11 - t22)
        if t12 == 0.0:
            mu = t22
        else:
            mu = t22 - t12 * t12 / (delta + math.copysign(math.hypot(delta, t12), delta))

        y = d[lo] * d[lo] - mu
        z = d[lo] * e[lo]
        for k in range(lo, hi):
            c, s, r = _givens(y, z)
            if k > lo:
                e[k - 1] = r
            dk = c * d[k] + s * e[k]
            ek = -s * d[k] + c * e[k]
            bulge = s * d[k + 1]
            dk1 = c * d[k + 1]
            if vt is not None:
                _rotate_rows(vt, k, k + 1, c, s)

            c, s, r = _givens(dk, bulge)
            d[k] = r
            e[k] = c * ek + s * dk1
            d[k + 1] = -s * ek + c * dk1
            if ut is not None:
                _rotate_rows(ut, k, k + 1, c, s)
            if k < hi - 1:
                y = e[k]
                z = s * e[k + 1]
                e[k + 1] = c * e[k + 1]
    return d


def _svd_tall(a: np.ndarray, want_vectors: bool = True):
    p, n = a.shape
    d, e, u1, v1 = _bidiagonalize(a, want_vectors)
    ut = np.eye(n) if want_vectors else None
    vt = np.eye(n) if want_vectors else None
    _bidiagonal_svd(d, e, ut, vt)
    sigma = np.array(d)
    neg = sigma < 0
    sigma[neg] = -sigma[neg]
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    if not want_vectors:
        return None, sigma, None
    vt[neg] *= -1.0
    u = u1 @ ut[order].T
    v = v1 @ vt[order].T
    return u, sigma, v


def singular_values(x: MatrixLike) -> np.ndarray:
    """Singular values of ``x`` in descending order (no vectors)."""
    arr = as_array(x)
    if arr.shape[0] < arr.shape[1]:
        arr = arr.T
    return _svd_tall(arr, want_vectors=False)[1]


# -- factors ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SvdFactors:
    """Truncated singular triplets: X ~ u @ diag(sigma) @ v.T."""

    u: np.ndarray  # m x k
    sigma: np.ndarray  # k
    v: np.ndarray  # t x k

    def __post_init__(self):
        u = np.array(self.u, dtype=np.float64, order="C")
        sigma = np.array(self.sigma, dtype=np.float64).reshape(-1)
        v = np.array(self.v, dtype=np.float64, order="C")
        k = sigma.shape[0]
        if u.ndim != 2 or v.ndim != 2 or u.shape[1] != k or v.shape[1] != k:
            raise ValueError(
                f"inconsistent factor shapes u{u.shape} sigma{sigma.shape} v{v.shape}"
            )
        if k < 1 or k > min(u.shape[0], v.shape[0]):
            raise ValueError(f"k={k} outside [1, min(m, t)]")
        for arr in (u, sigma, v):
            arr.flags.writeable = False
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "v", v)

    @property
    def k(self) -> int:
        return self.sigma.shape[0]

    @property
    def source_shape(self) -> tuple[int, int]:
        return (self.u.shape[0], self.v.shape[0])


def _apply_sign_convention(u, v):
    idx = np.argmax(np.abs(u), axis=0)
    signs = np.where(u[idx, np.arange(u.shape[1])] < 0, -1.0, 1.0)
    return u * signs, v * signs


def svd(x: MatrixLike) -> SvdFactors:
    """Full thin SVD with k = min(m, t).

    Singular values are descending; within each pair (u_i, v_i) the entry
    of u_i with the largest magnitude is made non-negative.
    """
    arr = as_array(x)
    m, t = arr.shape
    if m >= t:
        u, sigma, v = _svd_tall(arr)
    else:
        v, sigma, u = _svd_tall(arr.T)
    u, v = _apply_sign_convention(u, v)
    return SvdFactors(u, sigma, v)


def truncate(f: SvdFactors, k: int) -> SvdFactors:
    if not 1 <= k <= f.k:
        raise ValueError(f"k={k} outside [1, {f.k}]")
    if k == f.k:
        return f
    return SvdFactors(f.u[:, :k], f.sigma[:k], f.v[:, :k])


def reconstruct(f: SvdFactors) -> TimeSeriesMatrix:
    return TimeSeriesMatrix((f.u * f.sigma) @ f.v.T)


def rank_of(f: SvdFactors, rank_tolerance: float = DEFAULT_RANK_TOLERANCE) -> int:
    return numerical_rank(f.sigma, rank_tolerance)


# -- storage model and k selection -------------------------------------------

def storage_entries(m: int, t: int, k: int) -> int:
    """Entries needed to store U_k, sigma_k and V_k: (m + 1 + t) * k."""
    if m < 1 or t < 1 or k < 1:
        raise ValueError("m, t and k must all be >= 1")
    return (m + 1 + t) * k


class SizeModel(str, Enum):
    ENTRY_COUNT = "entries"
    MEASURED_BYTES = "bytes"


@dataclass(frozen=True)
class KSelection:
    k: int
    achieved_ratio: float
    best_effort: bool  # target unreachable even at k = 1


def select_k_for_ratio(
    x: MatrixLike,
    target_ratio: float,
    size_model: SizeModel = SizeModel.ENTRY_COUNT,
    *,
    rank: Optional[int] = None,
    ratio_at: Optional[Callable[[int], float]] = None,
) -> KSelection:
    """Largest k in [1, rank] whose compression ratio still meets the target.

    Under ``ENTRY_COUNT`` the ratio is m*t / ((m+1+t)k), strictly decreasing
    in k, so the scan stops at the first miss. ``MEASURED_BYTES`` needs a
    ``ratio_at(k)`` callable (the pipeline supplies one built from real
    archive sizes); that ratio is not provably monotone, so every k is
    examined.
    """
    if not target_ratio > 1:
        raise ValueError("target_ratio must exceed 1")
    arr = as_array(x) if not isinstance(x, tuple) else None
    m, t = x if isinstance(x, tuple) else arr.shape
    if rank is None:
        rank = numerical_rank(singular_values(arr))
    k_max = max(1, min(rank, m, t))

    if size_model == SizeModel.ENTRY_COUNT:
        def ratio(k):
            return (m * t) / storage_entries(m, t, k)
        best = None
        for k in range(1, k_max + 1):
            r = ratio(k)
            if r < target_ratio:
                break
            best = KSelection(k, r, False)
    elif size_model == SizeModel.MEASURED_BYTES:
        if ratio_at is None:
            raise ValueError("MEASURED_BYTES selection needs a ratio_at callable")
        ratio = ratio_at
        best = None
        for k in range(1, k_max + 1):
            r = ratio(k)
            if r >= target_ratio:
                best = KSelection(k, r, False)
    else:
        raise ValueError(f"unknown size model {size_model!r}")

    if best is None:
        return KSelection(1, ratio(1), True)
    return best


# -- error metrics -------------------------------------------------------------

def _same_shape(x, xk):
    a, b = as_array(x), as_array(xk)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def mae(x: MatrixLike, xk: MatrixLike) -> float:
    """Mean absolute error over all m*t entries."""
    a, b = _same_shape(x, xk)
    return float(np.mean(np.abs(a - b)))


def max_abs_error(x: MatrixLike, xk: MatrixLike) -> float:
    a, b = _same_shape(x, xk)
    return float(np.max(np.abs(a - b)))


def frobenius_error(x: MatrixLike, xk: MatrixLike) -> float:
    a, b = _same_shape(x, xk)
    return float(np.linalg.norm(a - b))

"""Dense complex eigenvalue solver for the small step operators (Q <= 27).

Balancing, Householder reduction to upper Hessenberg form, then single-shift
complex QR iteration with Wilkinson shifts and deflation.  Compiled with
numba; ``eigvals_batch`` loops over a stack of matrices without returning to
Python, which is what makes the stability scans affordable.
"""

from __future__ import annotations

import numba
import numpy as np

_EPS = np.finfo(np.float64).eps
_MAX_SWEEPS_PER_EIG = 60


class EigenConvergenceError(RuntimeError):
    """QR iteration did not converge within the sweep budget."""


@numba.njit(cache=True)
def _balance(A):
    # Parlett-Reinsch with radix-2 scalings, which are exact in floating point.
    n = A.shape[0]
    radix = 2.0
    sqrdx = radix * radix
    done = False
    while not done:
        done = True
        for i in range(n):
            r = 0.0
            c = 0.0
            for j in range(n):
                if j != i:
                    c += abs(A[j, i].real) + abs(A[j, i].imag)
                    r += abs(A[i, j].real) + abs(A[i, j].imag)
            if c != 0.0 and r != 0.0:
                g = r / radix
                f = 1.0
                s = c + r
                while c < g:
                    f *= radix
                    c *= sqrdx
                g = r * radix
                while c > g:
                    f /= radix
                    c /= sqrdx
                if (c + r) / f < 0.95 * s:
                    done = False
                    g = 1.0 / f
                    for j in range(n):
                        A[i, j] *= g
                    for j in range(n):
                        A[j, i] *= f


@numba.njit(cache=True)
def _hessenberg(A):
    n = A.shape[0]
    v = np.empty(n, dtype=np.complex128)
    for k in range(n - 2):
        m = n - k - 1
        norm = 0.0
        for i in range(m):
            x = A[k + 1 + i, k]
            norm += x.real * x.real + x.imag * x.imag
        norm = np.sqrt(norm)
        if norm == 0.0:
            continue
        x0 = A[k + 1, k]
        ax0 = abs(x0)
        phase = x0 / ax0 if ax0 != 0.0 else 1.0 + 0.0j
        alpha = -phase * norm
        for i in range(m):
            v[i] = A[k + 1 + i, k]
        v[0] -= alpha
        vnorm = 0.0
        for i in range(m):
            vnorm += v[i].real * v[i].real + v[i].imag * v[i].imag
        vnorm = np.sqrt(vnorm)
        if vnorm == 0.0:
            continue
        for i in range(m):
            v[i] /= vnorm
        # A <- (I - 2vv^H) A
        for j in range(n):
            s = 0.0j
            for i in range(m):
                s += np.conj(v[i]) * A[k + 1 + i, j]
            for i in range(m):
                A[k + 1 + i, j] -= 2.0 * v[i] * s
        # A <- A (I - 2vv^H)
        for i in range(n):
            s = 0.0j
            for j in range(m):
                s += A[i, k + 1 + j] * v[j]
            for j in range(m):
                A[i, k + 1 + j] -= 2.0 * s * np.conj(v[j])
        for i in range(k + 2, n):
            A[i, k] = 0.0j


@numba.njit(cache=True)
def _hqr(H, out):
    """Eigenvalues of upper Hessenberg ``H`` (overwritten) into ``out``.

    Returns 0 on success, -1 if the sweep budget ran out.
    """
    n = H.shape[0]
    cs = np.empty(n, dtype=np.complex128)
    ss = np.empty(n, dtype=np.complex128)
    hi = n - 1
    its = 0
    total = 0
    while hi >= 0:
        if hi == 0:
            out[0] = H[0, 0]
            break
        lo = hi
        while lo > 0:
            tst = abs(H[lo - 1, lo - 1]) + abs(H[lo, lo])
            if tst == 0.0:
                tst = 1.0
            if abs(H[lo, lo - 1]) <= _EPS * tst:
                H[lo, lo - 1] = 0.0j
                break
            lo -= 1
        if lo == hi:
            out[hi] = H[hi, hi]
            hi -= 1
            its = 0
            continue
        if total > _MAX_SWEEPS_PER_EIG * n:
            return -1
        a = H[hi - 1, hi - 1]
        b = H[hi - 1, hi]
        c = H[hi, hi - 1]
        d = H[hi, hi]
        if its > 0 and its % 10 == 0:
            # exceptional shift breaks rare cycling
            mu = d + 0.75 * abs(c)
        else:
            half = 0.5 * (a - d)
            disc = np.sqrt(half * half + b * c)
            mu1 = 0.5 * (a + d) + disc
            mu2 = 0.5 * (a + d) - disc
            mu = mu1 if abs(mu1 - d) < abs(mu2 - d) else mu2
        for j in range(lo, hi + 1):
            H[j, j] -= mu
        # H - mu I = Q R with Givens rotations, left pass
        for k in range(lo, hi):
            x = H[k, k]
            y = H[k + 1, k]
            r = np.sqrt(abs(x) ** 2 + abs(y) ** 2)
            if r == 0.0:
                cc = 1.0 + 0.0j
                sn = 0.0j
            else:
                cc = x / r
                sn = y / r
            cs[k] = cc
            ss[k] = sn
            for j in range(k, hi + 1):
                t1 = H[k, j]
                t2 = H[k + 1, j]
                H[k, j] = np.conj(cc) * t1 + np.conj(sn) * t2
                H[k + 1, j] = -sn * t1 + cc * t2
        # R Q, right pass
        for k in range(lo, hi):
            cc = cs[k]
            sn = ss[k]
            top = min(k + 2, hi)
            for i in range(lo, top + 1):
                t1 = H[i, k]
                t2 = H[i, k + 1]
                H[i, k] = t1 * cc + t2 * sn
                H[i, k + 1] = -t1 * np.conj(sn) + t2 * np.conj(cc)
        for j in range(lo, hi + 1):
            H[j, j] += mu
        its += 1
        total += 1
    return 0


@numba.njit(cache=True)
def _eigvals_one(A, out, balance):
    W = A.copy()
    if balance:
        _balance(W)
    _hessenberg(W)
    return _hqr(W, out)


@numba.njit(cache=True)
def _eigvals_stack(As, out, status, balance):
    for m in range(As.shape[0]):
        status[m] = _eigvals_one(As[m], out[m], balance)


@numba.njit(cache=True)
def _spectral_radius_stack(As, out, status):
    n = As.shape[1]
    lam = np.empty(n, dtype=np.complex128)
    for m in range(As.shape[0]):
        st = _eigvals_one(As[m], lam, True)
        if st != 0:
            st = _eigvals_one(As[m], lam, False)
        status[m] = st
        r = 0.0
        for i in range(n):
            a = abs(lam[i])
            if a > r:
                r = a
        out[m] = r


def eigvals(A, balance=True):
    """All eigenvalues of a dense square matrix (unordered)."""
    A = np.ascontiguousarray(A, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    out = np.empty(A.shape[0], dtype=np.complex128)
    if _eigvals_one(A, out, balance) != 0:
        # unbalanced retry before giving up
        if not balance or _eigvals_one(A, out, False) != 0:
            raise EigenConvergenceError("QR iteration failed to converge")
    return out


def eigvals_batch(As):
    """Eigenvalues of a stack ``(..., N, N)`` of matrices."""
    As = np.ascontiguousarray(As, dtype=np.complex128)
    shape = As.shape
    flat = As.reshape(-1, shape[-2], shape[-1])
    out = np.empty(flat.shape[:2], dtype=np.complex128)
    status = np.zeros(flat.shape[0], dtype=np.int64)
    _eigvals_stack(flat, out, status, True)
    bad = np.flatnonzero(status)
    if bad.size:
        status_b = np.zeros(bad.size, dtype=np.int64)
        retry = np.empty((bad.size, shape[-1]), dtype=np.complex128)
        _eigvals_stack(flat[bad], retry, status_b, False)
        if np.any(status_b):
            raise EigenConvergenceError(f"{int(np.count_nonzero(status_b))} matrices failed to converge")
        out[bad] = retry
    return out.reshape(shape[:-1])


def spectral_radius_batch(As):
    """Spectral radius of each matrix in a stack ``(..., N, N)``."""
    As = np.ascontiguousarray(As, dtype=np.complex128)
    shape = As.shape
    flat = As.reshape(-1, shape[-2], shape[-1])
    out = np.empty(flat.shape[0])
    status = np.zeros(flat.shape[0], dtype=np.int64)
    _spectral_radius_stack(flat, out, status)
    if np.any(status):
        raise EigenConvergenceError(f"{int(np.count_nonzero(status))} matrices failed to converge")
    return out.reshape(shape[:-2])


def eigvec(A, lam, iters=3):
    """Unit eigenvector for a computed eigenvalue by inverse iteration."""
    A = np.asarray(A, dtype=np.complex128)
    n = A.shape[0]
    scale = max(np.abs(A).max(), 1.0)
    # perturbed shift keeps the solve nonsingular
    M = A - (lam + 1e3 * _EPS * scale) * np.eye(n)
    x = np.ones(n, dtype=np.complex128) / np.sqrt(n)
    for _ in range(iters):
        try:
            y = np.linalg.solve(M, x)
        except np.linalg.LinAlgError:
            M = M + 1e-10 * scale * np.eye(n)
            y = np.linalg.solve(M, x)
        x = y / np.linalg.norm(y)
    return x

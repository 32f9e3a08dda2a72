"""Exact closest-vector search via Schnorr-Euchner enumeration.

Solves argmin_z ||target - basis @ z||^2 over integer vectors z.  The search
is exact: enumeration runs to completion with an adaptively shrinking radius,
starting from the Babai (nearest-plane) point that the first depth-first dive
produces.  A node budget guards against pathological instances; exceeding it
raises ``SearchBudgetError`` carrying the best point found so far.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .errors import NumericalError, SearchBudgetError

DEFAULT_MAX_NODES = 10_000_000


@njit(cache=True, nogil=True)
def _lll_transform(b, delta):  # pragma: no cover - jitted
    """In-place LLL reduction of the columns of b; returns the unimodular
    transform U with b_reduced = b_original @ U.  Tracks only the
    Gram-Schmidt coefficients and norms, with the usual O(n) swap updates."""
    m, n = b.shape
    u = np.eye(n, dtype=np.int64)
    mu = np.zeros((n, n))
    norms = np.zeros(n)
    bstar = b.copy()
    for i in range(n):
        for t in range(m):
            bstar[t, i] = b[t, i]
        for j in range(i):
            dot = 0.0
            for t in range(m):
                dot += b[t, i] * bstar[t, j]
            mu[i, j] = dot / norms[j]
            for t in range(m):
                bstar[t, i] -= mu[i, j] * bstar[t, j]
        acc = 0.0
        for t in range(m):
            acc += bstar[t, i] * bstar[t, i]
        norms[i] = acc

    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            q = np.rint(mu[k, j])
            if q != 0.0:
                qi = np.int64(q)
                for t in range(m):
                    b[t, k] -= q * b[t, j]
                for t in range(n):
                    u[t, k] -= qi * u[t, j]
                for t in range(j):
                    mu[k, t] -= q * mu[j, t]
                mu[k, j] -= q
        if norms[k] >= (delta - mu[k, k - 1] * mu[k, k - 1]) * norms[k - 1]:
            k += 1
            continue
        # swap columns k-1 and k, updating the GS state in place
        for t in range(m):
            tmp = b[t, k - 1]
            b[t, k - 1] = b[t, k]
            b[t, k] = tmp
        for t in range(n):
            tmpi = u[t, k - 1]
            u[t, k - 1] = u[t, k]
            u[t, k] = tmpi
        mu_old = mu[k, k - 1]
        big = norms[k] + mu_old * mu_old * norms[k - 1]
        mu[k, k - 1] = mu_old * norms[k - 1] / big
        norms[k] = norms[k - 1] * norms[k] / big
        norms[k - 1] = big
        for j in range(k - 1):
            tmp = mu[k - 1, j]
            mu[k - 1, j] = mu[k, j]
            mu[k, j] = tmp
        for i in range(k + 1, n):
            t1 = mu[i, k]
            mu[i, k] = mu[i, k - 1] - mu_old * t1
            mu[i, k - 1] = t1 + mu[k, k - 1] * mu[i, k]
        if k > 1:
            k -= 1
    return u


def reduce_basis(basis: np.ndarray, delta: float = 0.95):
    """LLL-reduce the columns of a real basis; returns (reduced, U) with
    reduced = basis @ U and U unimodular."""
    reduced = np.ascontiguousarray(np.asarray(basis, dtype=float).copy())
    u = _lll_transform(reduced, delta)
    return reduced, u


@njit(cache=True, nogil=True)
def _se_enumerate(r_mat, y, max_nodes, tie_tol, radius_sq):  # pragma: no cover
    """Depth-first zig-zag enumeration on an upper-triangular system.

    tie_tol > 0 keeps equidistant candidates alive and resolves them toward
    the lexicographically smallest integer vector; tie_tol = 0 is the fast
    strict-improvement search.  radius_sq bounds the initial search sphere
    (np.inf disables it); when nothing lies inside, the exact flag is 2 and
    the caller must retry with a wider sphere.
    """
    n = r_mat.shape[0]
    z = np.zeros(n, dtype=np.int64)
    best_z = np.zeros(n, dtype=np.int64)
    step = np.zeros(n, dtype=np.int64)
    center = np.zeros(n)
    acc = np.zeros(n)
    best = radius_sq
    have_best = False
    nodes = 0

    i = n - 1
    acc[i] = 0.0
    center[i] = y[i] / r_mat[i, i]
    z[i] = int(np.rint(center[i]))
    step[i] = 1 if center[i] - z[i] >= 0 else -1

    while True:
        nodes += 1
        if nodes > max_nodes:
            return best_z, 0, nodes
        diff = r_mat[i, i] * (center[i] - z[i])
        d = acc[i] + diff * diff
        if d < best + tie_tol:
            if i == 0:
                if not have_best or d < best - tie_tol:
                    best = d
                    have_best = True
                    for t in range(n):
                        best_z[t] = z[t]
                else:
                    # distance tie: keep the lexicographically smaller vector
                    for t in range(n):
                        if z[t] != best_z[t]:
                            if z[t] < best_z[t]:
                                if d < best:
                                    best = d
                                for u in range(n):
                                    best_z[u] = z[u]
                            break
                z[0] += step[0]
                step[0] = -step[0] - (1 if step[0] > 0 else -1)
            else:
                acc[i - 1] = d
                i -= 1
                e = y[i]
                for k in range(i + 1, n):
                    e -= r_mat[i, k] * z[k]
                center[i] = e / r_mat[i, i]
                z[i] = int(np.rint(center[i]))
                step[i] = 1 if center[i] - z[i] >= 0 else -1
        else:
            if i == n - 1:
                break
            i += 1
            z[i] += step[i]
            step[i] = -step[i] - (1 if step[i] > 0 else -1)

    return best_z, (1 if have_best else 2), nodes


def _reduce_to_triangular(basis: np.ndarray, target: np.ndarray):
    basis = np.ascontiguousarray(np.asarray(basis, dtype=float))
    target = np.asarray(target, dtype=float).ravel()
    m, n = basis.shape
    if m != target.shape[0]:
        raise ValueError(f"target length {target.shape[0]} != basis rows {m}")
    q, r = np.linalg.qr(basis)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    r = signs[:, None] * r
    q = q * signs[None, :]
    if np.any(np.abs(np.diag(r)) < 1e-12 * max(1.0, np.abs(r).max())):
        raise NumericalError("basis is numerically rank deficient")
    return np.ascontiguousarray(r), np.ascontiguousarray(q.T @ target)


def _search(r_mat, y, max_nodes, tie_tol, radius_sq):
    """Run the enumeration, widening the sphere until it holds a point."""
    spent = 0
    while True:
        z, status, nodes = _se_enumerate(r_mat, y, max_nodes - spent, tie_tol,
                                         radius_sq)
        spent += nodes
        if status == 1:
            return z, spent
        if status == 0:
            raise SearchBudgetError(z, spent)
        radius_sq = 4.0 * radius_sq if np.isfinite(radius_sq) else np.inf


def sphere_decode(basis: np.ndarray, target: np.ndarray, *,
                  max_nodes: int = DEFAULT_MAX_NODES, reduce: bool = True,
                  initial_radius_sq: float = np.inf) -> np.ndarray:
    """Exact closest vector: the integer z minimizing ||target - basis @ z||.

    By default the basis is LLL-reduced first; enumeration on an unreduced
    basis whose column norms span several orders of magnitude is hopeless.
    An initial search radius (when the caller can bound the solution
    distance statistically) prunes the rare pathological instance; the
    sphere widens automatically if it turns out empty.  Neither knob
    changes the answer, only the search effort.
    """
    if reduce:
        reduced, u = reduce_basis(basis)
        try:
            z, _ = _search(*_reduce_to_triangular(reduced, target),
                           max_nodes, 0.0, initial_radius_sq)
        except SearchBudgetError as err:
            raise SearchBudgetError(u @ err.best, err.nodes) from None
        return u @ z
    z, _ = _search(*_reduce_to_triangular(basis, target),
                   max_nodes, 0.0, initial_radius_sq)
    return z


def closest_point_lex(basis: np.ndarray, target: np.ndarray, *,
                      max_nodes: int = DEFAULT_MAX_NODES) -> np.ndarray:
    """Closest vector with deterministic tie-breaking: among candidates at
    (numerically) equal distance, returns the lexicographically smallest
    integer vector."""
    r_mat, y = _reduce_to_triangular(basis, target)
    diag = np.diag(r_mat)
    tie_tol = 1e-10 * float(np.mean(diag * diag))
    z, _ = _search(r_mat, y, max_nodes, tie_tol, np.inf)
    return z

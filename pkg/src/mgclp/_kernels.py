"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba versions are used when numba imports cleanly and the environment
variable ``MGCLP_DISABLE_NUMBA`` is unset (or ``0``).  Both variants are always
importable as :data:`numpy_kernels` and :data:`numba_kernels` so the test
suite and the benchmark can compare them directly.

Variable states used by the simplex kernels: 0 basic, 1 at lower bound,
2 at upper bound.
"""
from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

BASIC, AT_LOWER, AT_UPPER = 0, 1, 2


# ---------------------------------------------------------------- numpy path


def _np_marginal_gains(f, w, theta, best, surv):
    up = np.maximum(f, best[None, :]) - best[None, :]
    return theta * (up @ w) + (1.0 - theta) * (f @ (w * surv))


def _np_chain_gains(f, w, theta, depth):
    n = f.shape[0]
    out = np.zeros((n, depth))
    if depth == 0:
        return out
    out[:, 0] = f @ w
    term = f.copy()
    keep = 1.0 - f
    for l in range(1, depth):
        term = term * keep
        out[:, l] = (1.0 - theta) * (term @ w)
    return out


def _np_dominated(f):
    n = f.shape[0]
    idx = np.arange(n)
    out = np.zeros(n, dtype=np.bool_)
    for i2 in range(n):
        ge = np.all(f >= f[i2], axis=1)
        eq = np.all(f == f[i2], axis=1)
        ge[i2] = False
        out[i2] = bool(np.any(ge & (~eq | (idx < i2))))
    return out


def _np_primal_pricing(d, state, lb, ub, tol, bland):
    free = ub > lb
    inc = (state == AT_LOWER) & free & (d < -tol)
    dec = (state == AT_UPPER) & free & (d > tol)
    elig = inc | dec
    if not elig.any():
        return -1, 0
    if bland:
        q = int(np.flatnonzero(elig)[0])
    else:
        score = np.where(elig, np.abs(d), -1.0)
        q = int(np.argmax(score))
    return q, (1 if inc[q] else -1)


def _np_primal_ratio(alpha, direction, xb, lbb, ubb, span, piv_tol, basic, bland):
    delta = -direction * alpha
    t = np.full(alpha.shape[0], np.inf)
    dn = delta < -piv_tol
    up = delta > piv_tol
    t[dn] = (xb[dn] - lbb[dn]) / (-delta[dn])
    t[up] = (ubb[up] - xb[up]) / delta[up]
    np.maximum(t, 0.0, out=t)
    tmin = t.min() if t.shape[0] else np.inf
    if span <= tmin:
        return -1, span, False
    ties = np.flatnonzero(t <= tmin + 1e-12)
    if bland:
        r = int(ties[np.argmin(basic[ties])])
    else:
        r = int(ties[np.argmax(np.abs(delta[ties]))])
    return r, float(t[r]), bool(delta[r] > 0)


def _np_dual_ratio(alpha, d, state, lb, ub, need_increase, piv_tol, dual_tol, bland):
    free = ub > lb
    if need_increase:
        elig = free & (((state == AT_LOWER) & (alpha < -piv_tol))
                       | ((state == AT_UPPER) & (alpha > piv_tol)))
    else:
        elig = free & (((state == AT_LOWER) & (alpha > piv_tol))
                       | ((state == AT_UPPER) & (alpha < -piv_tol)))
    cand = np.flatnonzero(elig)
    if cand.shape[0] == 0:
        return -1
    a = np.abs(alpha[cand])
    dd = np.abs(d[cand])
    if bland:
        ratio = dd / a
        best = ratio.min()
        ties = cand[ratio <= best + 1e-12]
        return int(ties[0])
    # Harris two-pass
    bound = ((dd + dual_tol) / a).min()
    ok = dd / a <= bound
    k = np.flatnonzero(ok)
    return int(cand[k[np.argmax(a[k])]])


def _np_pivot_update(binv, alpha, r):
    row = binv[r] / alpha[r]
    binv -= np.outer(alpha, row)
    binv[r] = row


numpy_kernels = SimpleNamespace(
    name="numpy",
    marginal_gains=_np_marginal_gains,
    chain_gains=_np_chain_gains,
    dominated=_np_dominated,
    primal_pricing=_np_primal_pricing,
    primal_ratio=_np_primal_ratio,
    dual_ratio=_np_dual_ratio,
    pivot_update=_np_pivot_update,
)


# ---------------------------------------------------------------- numba path


def _build_numba():
    from numba import njit

    @njit(cache=True)
    def marginal_gains(f, w, theta, best, surv):
        n, m = f.shape
        out = np.zeros(n)
        for i in range(n):
            a = 0.0
            b = 0.0
            for j in range(m):
                fij = f[i, j]
                if fij > best[j]:
                    a += w[j] * (fij - best[j])
                b += w[j] * surv[j] * fij
            out[i] = theta * a + (1.0 - theta) * b
        return out

    @njit(cache=True)
    def chain_gains(f, w, theta, depth):
        n, m = f.shape
        out = np.zeros((n, depth))
        for i in range(n):
            for j in range(m):
                fij = f[i, j]
                if fij == 0.0:
                    continue
                term = fij
                if depth > 0:
                    out[i, 0] += w[j] * fij
                for l in range(1, depth):
                    term *= 1.0 - fij
                    out[i, l] += (1.0 - theta) * w[j] * term
        return out

    @njit(cache=True)
    def dominated(f):
        n, m = f.shape
        out = np.zeros(n, dtype=np.bool_)
        for i2 in range(n):
            for i in range(n):
                if i == i2:
                    continue
                ge = True
                eq = True
                for j in range(m):
                    if f[i, j] < f[i2, j]:
                        ge = False
                        break
                    if f[i, j] != f[i2, j]:
                        eq = False
                if ge and (not eq or i < i2):
                    out[i2] = True
                    break
        return out

    @njit(cache=True)
    def primal_pricing(d, state, lb, ub, tol, bland):
        q = -1
        best = 0.0
        direction = 0
        for j in range(d.shape[0]):
            if ub[j] <= lb[j]:
                continue
            s = state[j]
            if s == 1 and d[j] < -tol:
                score = -d[j]
                dj = 1
            elif s == 2 and d[j] > tol:
                score = d[j]
                dj = -1
            else:
                continue
            if bland:
                return j, dj
            if score > best:
                best = score
                q = j
                direction = dj
        return q, direction

    @njit(cache=True)
    def primal_ratio(alpha, direction, xb, lbb, ubb, span, piv_tol, basic, bland):
        m = alpha.shape[0]
        tmin = np.inf
        for i in range(m):
            di = -direction * alpha[i]
            if di < -piv_tol:
                t = (xb[i] - lbb[i]) / (-di)
            elif di > piv_tol:
                t = (ubb[i] - xb[i]) / di
            else:
                continue
            if t < 0.0:
                t = 0.0
            if t < tmin:
                tmin = t
        if span <= tmin:
            return -1, span, False
        r = -1
        key = 0.0
        for i in range(m):
            di = -direction * alpha[i]
            if di < -piv_tol:
                t = (xb[i] - lbb[i]) / (-di)
            elif di > piv_tol:
                t = (ubb[i] - xb[i]) / di
            else:
                continue
            if t < 0.0:
                t = 0.0
            if t <= tmin + 1e-12:
                if bland:
                    if r < 0 or basic[i] < basic[r]:
                        r = i
                elif r < 0 or abs(di) > key:
                    r = i
                    key = abs(di)
        dr = -direction * alpha[r]
        tr = (xb[r] - lbb[r]) / (-dr) if dr < 0 else (ubb[r] - xb[r]) / dr
        if tr < 0.0:
            tr = 0.0
        return r, tr, dr > 0

    @njit(cache=True)
    def dual_ratio(alpha, d, state, lb, ub, need_increase, piv_tol, dual_tol, bland):
        n = alpha.shape[0]
        bound = np.inf
        for j in range(n):
            if ub[j] <= lb[j]:
                continue
            s = state[j]
            a = alpha[j]
            if need_increase:
                ok = (s == 1 and a < -piv_tol) or (s == 2 and a > piv_tol)
            else:
                ok = (s == 1 and a > piv_tol) or (s == 2 and a < -piv_tol)
            if not ok:
                continue
            if bland:
                v = abs(d[j]) / abs(a)
            else:
                v = (abs(d[j]) + dual_tol) / abs(a)
            if v < bound:
                bound = v
        if bound == np.inf:
            return -1
        q = -1
        key = 0.0
        for j in range(n):
            if ub[j] <= lb[j]:
                continue
            s = state[j]
            a = alpha[j]
            if need_increase:
                ok = (s == 1 and a < -piv_tol) or (s == 2 and a > piv_tol)
            else:
                ok = (s == 1 and a > piv_tol) or (s == 2 and a < -piv_tol)
            if not ok:
                continue
            v = abs(d[j]) / abs(a)
            if bland:
                if v <= bound + 1e-12:
                    return j
            elif v <= bound and abs(a) > key:
                key = abs(a)
                q = j
        return q

    @njit(cache=True)
    def pivot_update(binv, alpha, r):
        m = binv.shape[0]
        piv = alpha[r]
        for k in range(m):
            binv[r, k] /= piv
        for i in range(m):
            if i == r:
                continue
            a = alpha[i]
            if a == 0.0:
                continue
            for k in range(m):
                binv[i, k] -= a * binv[r, k]

    return SimpleNamespace(
        name="numba",
        marginal_gains=marginal_gains,
        chain_gains=chain_gains,
        dominated=dominated,
        primal_pricing=primal_pricing,
        primal_ratio=primal_ratio,
        dual_ratio=dual_ratio,
        pivot_update=pivot_update,
    )


try:
    numba_kernels = _build_numba()
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is optional
    numba_kernels = None
    HAS_NUMBA = False


def _numba_enabled() -> bool:
    flag = os.environ.get("MGCLP_DISABLE_NUMBA", "").strip().lower()
    return HAS_NUMBA and flag in ("", "0", "false", "no")


kernels = numba_kernels if _numba_enabled() else numpy_kernels

"""Hot inner loops: run population dynamics or product-form PW to convergence.

Two implementations of each kernel exist: explicit loops compiled with numba
``@njit`` and a vectorized pure-numpy fallback. ``HAPLOMW_BACKEND`` selects
which one backs the public names (see :mod:`haplomw.backend`); both stay
importable for benchmarking. The kernels are 2-locus only; general-k callers
take the slower per-step path in :mod:`haplomw.dynamics`.

Convention shared by all kernels: state t=0 is the initial state, one loop
iteration advances one generation, and the returned step is the first t whose
state exceeds the convergence threshold (-1 when t_max is exhausted first).
"""

from __future__ import annotations

import numpy as np

from .backend import numba_available, use_numba

ASEXUAL, SR, RS = 0, 1, 2

KIND_CODES = {"asexual": ASEXUAL, "sr": SR, "rs": RS}


# ---------------------------------------------------------------------------
# pure-numpy fallbacks
# ---------------------------------------------------------------------------


def run_to_convergence_numpy(values, probs, kind, r, t_max, threshold):
    """Iterate a 2-locus dynamics until max cell mass exceeds threshold.

    Returns (t_conv, final probs); t_conv is -1 when not converged by t_max.
    """
    p = np.array(probs, dtype=np.float64)
    w = np.asarray(values, dtype=np.float64)
    for t in range(t_max + 1):
        if p.max() > threshold:
            return t, p
        f = p * w
        wbar = f.sum()
        if kind == SR:
            cross = np.outer(f.sum(axis=1), f.sum(axis=0)) / (wbar * wbar)
            p = r * cross + (1.0 - r) * f / wbar
        elif kind == RS:
            p = w * (r * np.outer(p.sum(axis=1), p.sum(axis=0)) + (1.0 - r) * p)
        else:
            p = f
        p /= p.sum()
    return -1, p


def product_pw_numpy(values, x0, y0, t_max, threshold):
    """Parameter-free PW for two players coupled only through marginals.

    Both players update simultaneously from the product distribution of the
    current strategies. Convergence means the product puts more than
    ``threshold`` mass on one genotype.
    """
    w = np.asarray(values, dtype=np.float64)
    x = np.array(x0, dtype=np.float64)
    y = np.array(y0, dtype=np.float64)
    for t in range(t_max + 1):
        if x.max() * y.max() > threshold:
            return t, x, y
        gx = w @ y
        gy = w.T @ x
        x = x * gx
        x /= x.sum()
        y = y * gy
        y /= y.sum()
    return -1, x, y


# ---------------------------------------------------------------------------
# loop bodies for numba
# ---------------------------------------------------------------------------


def _run_to_convergence_loops(values, probs, kind, r, t_max, threshold):
    n, m = probs.shape
    p = probs.copy()
    f = np.empty((n, m))
    row = np.empty(n)
    col = np.empty(m)
    for t in range(t_max + 1):
        mx = 0.0
        for i in range(n):
            for j in range(m):
                if p[i, j] > mx:
                    mx = p[i, j]
        if mx > threshold:
            return t, p
        wbar = 0.0
        for i in range(n):
            for j in range(m):
                f[i, j] = p[i, j] * values[i, j]
                wbar += f[i, j]
        if kind == SR:
            for i in range(n):
                acc = 0.0
                for j in range(m):
                    acc += f[i, j]
                row[i] = acc
            for j in range(m):
                acc = 0.0
                for i in range(n):
                    acc += f[i, j]
                col[j] = acc
            wsq = wbar * wbar
            for i in range(n):
                for j in range(m):
                    p[i, j] = r * row[i] * col[j] / wsq + (1.0 - r) * f[i, j] / wbar
        elif kind == RS:
            for i in range(n):
                acc = 0.0
                for j in range(m):
                    acc += p[i, j]
                row[i] = acc
            for j in range(m):
                acc = 0.0
                for i in range(n):
                    acc += p[i, j]
                col[j] = acc
            for i in range(n):
                for j in range(m):
                    p[i, j] = values[i, j] * (r * row[i] * col[j] + (1.0 - r) * p[i, j])
        else:
            for i in range(n):
                for j in range(m):
                    p[i, j] = f[i, j]
        total = 0.0
        for i in range(n):
            for j in range(m):
                total += p[i, j]
        for i in range(n):
            for j in range(m):
                p[i, j] /= total
    return -1, p


def _product_pw_loops(values, x0, y0, t_max, threshold):
    n, m = values.shape
    x = x0.copy()
    y = y0.copy()
    gx = np.empty(n)
    gy = np.empty(m)
    for t in range(t_max + 1):
        mx = 0.0
        for i in range(n):
            if x[i] > mx:
                mx = x[i]
        my = 0.0
        for j in range(m):
            if y[j] > my:
                my = y[j]
        if mx * my > threshold:
            return t, x, y
        for i in range(n):
            acc = 0.0
            for j in range(m):
                acc += values[i, j] * y[j]
            gx[i] = acc
        for j in range(m):
            acc = 0.0
            for i in range(n):
                acc += values[i, j] * x[i]
            gy[j] = acc
        tot = 0.0
        for i in range(n):
            x[i] *= gx[i]
            tot += x[i]
        for i in range(n):
            x[i] /= tot
        tot = 0.0
        for j in range(m):
            y[j] *= gy[j]
            tot += y[j]
        for j in range(m):
            y[j] /= tot
    return -1, x, y


run_to_convergence_numba = None
product_pw_numba = None

if numba_available():
    import numba

    run_to_convergence_numba = numba.njit(cache=True)(_run_to_convergence_loops)
    product_pw_numba = numba.njit(cache=True)(_product_pw_loops)


def _coerce_2l(values, probs):
    w = np.ascontiguousarray(values, dtype=np.float64)
    p = np.ascontiguousarray(probs, dtype=np.float64)
    if w.ndim != 2 or p.shape != w.shape:
        raise ValueError("kernels handle matching 2-locus tensors only")
    return w, p


if use_numba():

    def run_to_convergence(values, probs, kind, r, t_max, threshold):
        w, p = _coerce_2l(values, probs)
        return run_to_convergence_numba(w, p, kind, float(r), int(t_max), float(threshold))

    def product_pw_to_convergence(values, x0, y0, t_max, threshold):
        w = np.ascontiguousarray(values, dtype=np.float64)
        x = np.ascontiguousarray(x0, dtype=np.float64)
        y = np.ascontiguousarray(y0, dtype=np.float64)
        return product_pw_numba(w, x, y, int(t_max), float(threshold))

    ACTIVE_BACKEND = "numba"
else:

    def run_to_convergence(values, probs, kind, r, t_max, threshold):
        w, p = _coerce_2l(values, probs)
        return run_to_convergence_numpy(w, p, kind, float(r), int(t_max), float(threshold))

    def product_pw_to_convergence(values, x0, y0, t_max, threshold):
        return product_pw_numpy(values, x0, y0, int(t_max), float(threshold))

    ACTIVE_BACKEND = "numpy"

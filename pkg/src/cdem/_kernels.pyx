# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: the Metropolis-Hastings walk, the two IPF fitters,
and exhaustive fiber connectivity.  ``_pykernels`` mirrors every function
here with the same signature and results."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs

cnp.import_array()

ctypedef cnp.int64_t i64


def walk(i64[::1] x, const i64[:, ::1] cells, const i64[:, ::1] vals, const i64[::1] lens,
         const double[::1] logfact, const i64[::1] pick, const cnp.uint8_t[::1] flip,
         const double[::1] u, Py_ssize_t burn_in, Py_ssize_t thin, i64[:, ::1] out):
    """Run ``len(pick)`` steps from ``x`` (updated in place), storing every
    ``thin``-th state after ``burn_in`` into ``out``.  Returns
    ``(accepted, rejected_negative)``."""
    cdef Py_ssize_t steps = pick.shape[0]
    cdef Py_ssize_t ncell = x.shape[0]
    cdef Py_ssize_t s, t, k, m, c, row
    cdef i64 sign, v, accepted = 0, rejected = 0
    cdef double delta
    cdef bint ok
    with nogil:
        for s in range(steps):
            m = pick[s]
            sign = -1 if flip[s] else 1
            ok = True
            delta = 0.0
            for t in range(lens[m]):
                c = cells[m, t]
                v = x[c] + sign * vals[m, t]
                if v < 0:
                    ok = False
                    break
                delta = delta + (logfact[x[c]] - logfact[v])
            if not ok:
                rejected += 1
            elif delta >= 0.0 or u[s] < exp(delta):
                for t in range(lens[m]):
                    x[cells[m, t]] += sign * vals[m, t]
                accepted += 1
            if s >= burn_in and (s - burn_in + 1) % thin == 0:
                row = (s - burn_in) // thin
                for k in range(ncell):
                    out[row, k] = x[k]
    return accepted, rejected


cdef double _scale_rows(double[:, ::1] m, const double[::1] target) noexcept nogil:
    cdef Py_ssize_t R = m.shape[0], C = m.shape[1], i, j
    cdef double s, f
    for i in range(R):
        s = 0.0
        for j in range(C):
            s += m[i, j]
        f = target[i] / s if s > 0.0 else 0.0
        for j in range(C):
            m[i, j] *= f
    return 0.0


cdef double _scale_cols(double[:, ::1] m, const double[::1] target, double[::1] work) noexcept nogil:
    cdef Py_ssize_t R = m.shape[0], C = m.shape[1], i, j
    for j in range(C):
        work[j] = 0.0
    for i in range(R):
        for j in range(C):
            work[j] += m[i, j]
    for j in range(C):
        work[j] = target[j] / work[j] if work[j] > 0.0 else 0.0
    for i in range(R):
        for j in range(C):
            m[i, j] *= work[j]
    return 0.0


cdef double _margin_error(double[:, ::1] m, const double[::1] rt, const double[::1] ct,
                          double[::1] work) noexcept nogil:
    cdef Py_ssize_t R = m.shape[0], C = m.shape[1], i, j
    cdef double s, err = 0.0
    for j in range(C):
        work[j] = 0.0
    for i in range(R):
        s = 0.0
        for j in range(C):
            s += m[i, j]
            work[j] += m[i, j]
        err = max(err, fabs(s - rt[i]))
    for j in range(C):
        err = max(err, fabs(work[j] - ct[j]))
    return err


def ipf_cdem(const i64[:, ::1] x, double tol, Py_ssize_t max_iter, double[:, ::1] m):
    """Fit the common diagonal effect model into ``m``.  Returns
    ``(iterations, max_margin_error)``."""
    cdef Py_ssize_t R = x.shape[0], C = x.shape[1], d = min(R, C), i, j, it = 0
    cdef double n = 0.0, xs = 0.0, ms, fd, fo, err = 0.0
    rt_a = np.zeros(R)
    ct_a = np.zeros(C)
    work_a = np.zeros(C)
    cdef double[::1] rt = rt_a, ct = ct_a, work = work_a
    for i in range(R):
        for j in range(C):
            rt[i] += x[i, j]
            ct[j] += x[i, j]
            n += x[i, j]
        if i < d:
            xs += x[i, i]
    with nogil:
        for i in range(R):
            for j in range(C):
                m[i, j] = n / (R * C)
        while it < max_iter:
            it += 1
            _scale_rows(m, rt)
            _scale_cols(m, ct, work)
            ms = 0.0
            for i in range(d):
                ms += m[i, i]
            fd = xs / ms if ms > 0.0 else 0.0
            fo = (n - xs) / (n - ms) if n - ms > 0.0 else 0.0
            for i in range(R):
                for j in range(C):
                    if i == j:
                        m[i, j] *= fd
                    else:
                        m[i, j] *= fo
            err = _margin_error(m, rt, ct, work)
            ms = 0.0
            for i in range(d):
                ms += m[i, i]
            err = max(err, fabs(ms - xs))
            if err <= tol:
                break
    return it, err


def ipf_qi(const i64[:, ::1] x, double tol, Py_ssize_t max_iter, double[:, ::1] m):
    """Fit the quasi-independence model into ``m``: off-diagonal cells by
    row/column scaling, diagonal cells copied from ``x``."""
    cdef Py_ssize_t R = x.shape[0], C = x.shape[1], d = min(R, C), i, j, it = 0
    cdef double err = 0.0
    rt_a = np.zeros(R)
    ct_a = np.zeros(C)
    work_a = np.zeros(C)
    cdef double[::1] rt = rt_a, ct = ct_a, work = work_a
    for i in range(R):
        for j in range(C):
            if i != j:
                rt[i] += x[i, j]
                ct[j] += x[i, j]
    with nogil:
        for i in range(R):
            for j in range(C):
                m[i, j] = 0.0 if (i == j) else 1.0
        while it < max_iter:
            it += 1
            _scale_rows(m, rt)
            _scale_cols(m, ct, work)
            err = _margin_error(m, rt, ct, work)
            if err <= tol:
                break
        for i in range(d):
            m[i, i] = <double>x[i, i]
    return it, err


cdef inline i64 _find(i64[::1] parent, i64 a) noexcept nogil:
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


cdef inline i64 _rank(const i64[::1] a, Py_ssize_t F, i64 n, const i64[:, ::1] binom) noexcept nogil:
    cdef i64 r = 0, s = n, k
    cdef Py_ssize_t i
    for i in range(F - 1):
        k = F - i - 2
        r += binom[s + k + 1, k + 1] - binom[s - a[i] + k + 1, k + 1]
        s -= a[i]
    return r


def fiber_components(Py_ssize_t R, Py_ssize_t C, i64 n, const i64[::1] free,
                     const i64[:, ::1] cells, const i64[:, ::1] vals, const i64[::1] lens,
                     const i64[:, ::1] binom):
    """Union-find over every table of total ``n`` supported on ``free``,
    joining tables one move apart.  Returns ``(n_tables, n_fibers, first,
    other)`` where each ``(first[k], other[k])`` pair ranks two tables of
    one fiber lying in different components."""
    cdef Py_ssize_t F = free.shape[0], L = lens.shape[0], d = min(R, C)
    cdef Py_ssize_t i, t, mv, p
    cdef i64 total, r, r2, root, sh, idx, nrc, ncc, diag
    cdef bint ok
    if F == 0:
        return (1 if n == 0 else 0), (1 if n == 0 else 0), np.zeros(0, np.int64), np.zeros(0, np.int64)
    total = binom[n + F - 1, F - 1]
    nrc = binom[n + R - 1, R - 1]
    ncc = binom[n + C - 1, C - 1]
    parent_a = np.arange(total, dtype=np.int64)
    a_a = np.zeros(F, dtype=np.int64)
    pos_a = np.full(R * C, -1, dtype=np.int64)
    rs_a = np.zeros(R, dtype=np.int64)
    cs_a = np.zeros(C, dtype=np.int64)
    nstat = nrc * ncc * (n + 1)
    first_a = np.full(nstat, -1, dtype=np.int64)
    sroot_a = np.full(nstat, -1, dtype=np.int64)
    bad_a = np.full(nstat, -1, dtype=np.int64)
    cdef i64[::1] parent = parent_a, a = a_a, pos = pos_a, rs = rs_a, cs = cs_a
    cdef i64[::1] first = first_a, sroot = sroot_a, bad = bad_a
    cdef i64 nfib = 0
    cdef int sweep
    for p in range(F):
        pos[free[p]] = p

    with nogil:
        for sweep in range(2):
            for p in range(F):
                a[p] = 0
            a[F - 1] = n
            sh = 0
            while True:
                r = _rank(a, F, n, binom)
                if sweep == 0:
                    for mv in range(L):
                        ok = True
                        for t in range(lens[mv]):
                            p = pos[cells[mv, t]]
                            if a[p] + vals[mv, t] < 0:
                                ok = False
                                break
                        if not ok:
                            continue
                        for t in range(lens[mv]):
                            a[pos[cells[mv, t]]] += vals[mv, t]
                        r2 = _rank(a, F, n, binom)
                        for t in range(lens[mv]):
                            a[pos[cells[mv, t]]] -= vals[mv, t]
                        r = _find(parent, r)
                        r2 = _find(parent, r2)
                        if r != r2:
                            parent[r2] = r
                else:
                    for i in range(R):
                        rs[i] = 0
                    for i in range(C):
                        cs[i] = 0
                    diag = 0
                    for p in range(F):
                        rs[free[p] // C] += a[p]
                        cs[free[p] % C] += a[p]
                        if free[p] // C == free[p] % C and free[p] // C < d:
                            diag += a[p]
                    idx = (_rank(rs, R, n, binom) * ncc + _rank(cs, C, n, binom)) * (n + 1) + diag
                    root = _find(parent, r)
                    if first[idx] < 0:
                        first[idx] = r
                        sroot[idx] = root
                        nfib += 1
                    elif sroot[idx] != root and bad[idx] < 0:
                        bad[idx] = r
                # odometer over the first F-1 parts
                i = F - 2
                while i >= 0:
                    if sh < n:
                        a[i] += 1
                        sh += 1
                        break
                    sh -= a[i]
                    a[i] = 0
                    i -= 1
                if i < 0:
                    break
                a[F - 1] = n - sh
    hit = np.flatnonzero(bad_a >= 0)
    return int(total), int(nfib), first_a[hit].copy(), bad_a[hit].copy()

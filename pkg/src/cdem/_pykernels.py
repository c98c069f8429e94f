"""Pure-Python versions of the compiled kernels in ``_kernels.pyx``.

Signatures and results match the compiled module; the walk reproduces
its traces bit for bit because both accumulate the same floats in the
same order.
"""
import math

import numpy as np


def walk(x, cells, vals, lens, logfact, pick, flip, u, burn_in, thin, out):
    xs = x.tolist()
    lf = logfact.tolist()
    moves = [
        list(zip(cells[m, : lens[m]].tolist(), vals[m, : lens[m]].tolist()))
        for m in range(lens.shape[0])
    ]
    accepted = rejected = 0
    pick_l, flip_l, u_l = pick.tolist(), flip.tolist(), u.tolist()
    for s in range(len(pick_l)):
        support = moves[pick_l[s]]
        sign = -1 if flip_l[s] else 1
        ok = True
        delta = 0.0
        for c, v in support:
            nv = xs[c] + sign * v
            if nv < 0:
                ok = False
                break
            delta = delta + (lf[xs[c]] - lf[nv])
        if not ok:
            rejected += 1
        elif delta >= 0.0 or u_l[s] < math.exp(delta):
            for c, v in support:
                xs[c] += sign * v
            accepted += 1
        if s >= burn_in and (s - burn_in + 1) % thin == 0:
            out[(s - burn_in) // thin, :] = xs
    x[:] = xs
    return accepted, rejected


def _scale(m, target, axis):
    s = m.sum(axis=axis)
    f = np.divide(target, s, out=np.zeros_like(s), where=s > 0)
    m *= f[:, None] if axis == 1 else f[None, :]


def _margin_error(m, rt, ct):
    return max(np.abs(m.sum(axis=1) - rt).max(), np.abs(m.sum(axis=0) - ct).max())


def ipf_cdem(x, tol, max_iter, m):
    R, C = x.shape
    d = min(R, C)
    diag = np.zeros((R, C), dtype=bool)
    diag[np.arange(d), np.arange(d)] = True
    rt = x.sum(axis=1).astype(float)
    ct = x.sum(axis=0).astype(float)
    n = float(x.sum())
    xs = float(x[diag].sum())
    m[:] = n / (R * C)
    it, err = 0, 0.0
    while it < max_iter:
        it += 1
        _scale(m, rt, 1)
        _scale(m, ct, 0)
        ms = m[diag].sum()
        fd = xs / ms if ms > 0.0 else 0.0
        fo = (n - xs) / (n - ms) if n - ms > 0.0 else 0.0
        m[diag] *= fd
        m[~diag] *= fo
        err = max(_margin_error(m, rt, ct), abs(m[diag].sum() - xs))
        if err <= tol:
            break
    return it, float(err)


def ipf_qi(x, tol, max_iter, m):
    R, C = x.shape
    d = min(R, C)
    diag = np.zeros((R, C), dtype=bool)
    diag[np.arange(d), np.arange(d)] = True
    off = np.where(diag, 0, x).astype(float)
    rt, ct = off.sum(axis=1), off.sum(axis=0)
    m[:] = np.where(diag, 0.0, 1.0)
    it, err = 0, 0.0
    while it < max_iter:
        it += 1
        _scale(m, rt, 1)
        _scale(m, ct, 0)
        err = _margin_error(m, rt, ct)
        if err <= tol:
            break
    m[diag] = x[diag]
    return it, float(err)


def _rank(a, n, binom):
    F = len(a)
    r, s = 0, n
    for i in range(F - 1):
        k = F - i - 2
        r += int(binom[s + k + 1, k + 1] - binom[s - a[i] + k + 1, k + 1])
        s -= a[i]
    return r


def _compositions(n, F):
    # Same visiting order as the compiled odometer.
    a = [0] * F
    a[F - 1] = n
    sh = 0
    while True:
        yield a
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
            return
        a[F - 1] = n - sh


def fiber_components(R, C, n, free, cells, vals, lens, binom):
    F = len(free)
    if F == 0:
        return (1 if n == 0 else 0), (1 if n == 0 else 0), np.zeros(0, np.int64), np.zeros(0, np.int64)
    d = min(R, C)
    free = [int(c) for c in free]
    pos = {c: p for p, c in enumerate(free)}
    moves = [
        [(pos[int(c)], int(v)) for c, v in zip(cells[m, : lens[m]], vals[m, : lens[m]])]
        for m in range(len(lens))
    ]
    total = int(binom[n + F - 1, F - 1])
    parent = list(range(total))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a in _compositions(n, F):
        r = _rank(a, n, binom)
        for mv in moves:
            if any(a[p] + v < 0 for p, v in mv):
                continue
            for p, v in mv:
                a[p] += v
            r2 = _rank(a, n, binom)
            for p, v in mv:
                a[p] -= v
            r, r2 = find(r), find(r2)
            if r != r2:
                parent[r2] = r

    first, sroot, bad = {}, {}, {}
    for a in _compositions(n, F):
        r = _rank(a, n, binom)
        rs, cs, diag = [0] * R, [0] * C, 0
        for p, c in enumerate(free):
            i, j = divmod(c, C)
            rs[i] += a[p]
            cs[j] += a[p]
            if i == j and i < d:
                diag += a[p]
        key = (tuple(rs), tuple(cs), diag)
        root = find(r)
        if key not in first:
            first[key] = r
            sroot[key] = root
        elif sroot[key] != root and key not in bad:
            bad[key] = r
    # Order witnesses like the compiled kernel: by statistic index.
    ncc = int(binom[n + C - 1, C - 1])

    def stat_index(key):
        rs, cs, diag = key
        return (_rank(rs, n, binom) * ncc + _rank(cs, n, binom)) * (n + 1) + diag

    keys = sorted(bad, key=stat_index)
    return (
        total,
        len(first),
        np.array([first[k] for k in keys], dtype=np.int64),
        np.array([bad[k] for k in keys], dtype=np.int64),
    )

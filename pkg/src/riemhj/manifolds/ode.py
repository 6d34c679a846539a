"""Batched geodesic integration, parallel-transport flow, and log shooting.

The geodesic equation q'' = -Gamma(q)(q', q') is integrated with the
classical explicit fourth-order scheme; step size is shared across the
batch and adapted by step doubling so the worst row meets the local error
target.  The log map inverts ``exp`` by damped Newton shooting with a
forward-difference Jacobian, as all catalog charts are two-dimensional and
well conditioned inside the working radius.
"""

from __future__ import annotations

import numpy as np

MAX_NEWTON_ITERS = 100
NEWTON_TOL = 1e-11
JAC_FD_STEP = 1e-6


def christoffel_fd(man, x, step=1e-5):
    """Christoffel symbols from central differences of the metric matrix."""
    x = np.asarray(x, dtype=float)
    n = man.rep_dim
    G = man.metric_matrix(x)
    dG = np.empty(x.shape[:-1] + (n, n, n))  # dG[..., l, i, j] = d g_ij / d x_l
    for l in range(n):
        e = np.zeros(n)
        e[l] = step
        dG[..., l, :, :] = (man.metric_matrix(x + e) - man.metric_matrix(x - e)) / (
            2.0 * step
        )
    Ginv = np.linalg.inv(G)
    # Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij), with dG[..., l, i, j].
    # Reindexed to (..., i, j, l):
    inner = dG + np.swapaxes(dG, -3, -2) - np.moveaxis(dG, -3, -1)
    return 0.5 * np.einsum("...kl,...ijl->...kij", Ginv, inner)


def _acc(man, q, qd):
    gamma = man.christoffel(q)
    return -np.einsum("...kij,...i,...j->...k", gamma, qd, qd)


def _rk4_step(man, q, qd, h):
    k1q, k1v = qd, _acc(man, q, qd)
    k2q = qd + 0.5 * h * k1v
    k2v = _acc(man, q + 0.5 * h * k1q, k2q)
    k3q = qd + 0.5 * h * k2v
    k3v = _acc(man, q + 0.5 * h * k2q, k3q)
    k4q = qd + h * k3v
    k4v = _acc(man, q + h * k3q, k4q)
    qn = q + (h / 6.0) * (k1q + 2 * k2q + 2 * k3q + k4q)
    qdn = qd + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
    return qn, qdn


def geodesic_flow(man, X, V, t_final=1.0, n_fixed=None):
    """Integrate the geodesic ODE from (X, V) over [0, t_final].

    Returns (positions, velocities, ok_mask); rows whose trajectory leaves
    the coordinate domain are flagged False and frozen at their last valid
    state.  ``n_fixed`` forces that many equal steps, making the map smooth
    in its inputs (needed when finite differences are taken through it);
    the default is step-doubling adaptivity at the manifold's error target.
    """
    q = np.array(X, dtype=float)
    qd = np.array(V, dtype=float)
    ok = np.ones(q.shape[0], dtype=bool)
    speed = np.sqrt(np.maximum(np.einsum("...i,...i->...", qd, qd), 1e-300))
    if not np.any(speed > 1e-14):
        return q, qd, ok
    if n_fixed is not None:
        h = t_final / n_fixed
        for _ in range(n_fixed):
            q, qd = _rk4_step(man, q, qd, h)
        ok = np.asarray(man.contains(q), dtype=bool)
        return q, qd, ok
    t = 0.0
    h = min(0.1, t_final / 4.0)
    tol = man.ode_tol
    max_steps = 100000
    for _ in range(max_steps):
        if t >= t_final - 1e-15:
            break
        h = min(h, t_final - t)
        q1, qd1 = _rk4_step(man, q, qd, h)
        qh, qdh = _rk4_step(man, q, qd, 0.5 * h)
        q2, qd2 = _rk4_step(man, qh, qdh, 0.5 * h)
        err_q = np.abs(q1 - q2).max() if q.size else 0.0
        err_v = np.abs(qd1 - qd2).max() if qd.size else 0.0
        err = max(err_q, err_v) / 15.0
        if err <= tol or h <= 1e-9:
            # accept the refined (two half-step) solution
            q, qd = q2, qd2
            t += h
            inside = man.contains(q)
            if not np.all(inside):
                newly = ok & ~inside
                if np.any(newly):
                    ok = ok & inside
                    # freeze exited rows so downstream math stays finite
                    q[newly] = q1[newly] * 0 + q[newly]
            factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * (tol / err) ** 0.2))
            h = h * factor
        else:
            h = h * max(0.2, 0.9 * (tol / err) ** 0.2)
    return q, qd, ok


def transport_flow(man, X, W, V):
    """Parallel transport V along t -> exp_x(t W) from t=0 to t=1.

    Integrates the coupled system (q, q', V) with V'^k = -Gamma^k_ij q'^i V^j
    using the same step control as the geodesic flow.
    """
    q = np.array(X, dtype=float)
    qd = np.array(W, dtype=float)
    P = np.array(V, dtype=float)
    speed = np.sqrt(np.maximum(np.einsum("...i,...i->...", qd, qd), 0.0))
    if not np.any(speed > 1e-14):
        return P
    t, h = 0.0, 0.1
    tol = man.ode_tol

    def rhs(state):
        q, qd, P = state
        gamma = man.christoffel(q)
        acc = -np.einsum("...kij,...i,...j->...k", gamma, qd, qd)
        Pd = -np.einsum("...kij,...i,...j->...k", gamma, qd, P)
        return qd, acc, Pd

    def step(state, h):
        k1 = rhs(state)
        s2 = tuple(s + 0.5 * h * k for s, k in zip(state, k1))
        k2 = rhs(s2)
        s3 = tuple(s + 0.5 * h * k for s, k in zip(state, k2))
        k3 = rhs(s3)
        s4 = tuple(s + h * k for s, k in zip(state, k3))
        k4 = rhs(s4)
        return tuple(
            s + (h / 6.0) * (a + 2 * b + 2 * c + d)
            for s, a, b, c, d in zip(state, k1, k2, k3, k4)
        )

    state = (q, qd, P)
    for _ in range(100000):
        if t >= 1.0 - 1e-15:
            break
        h = min(h, 1.0 - t)
        s1 = step(state, h)
        sh = step(state, 0.5 * h)
        s2 = step(sh, 0.5 * h)
        err = max(np.abs(a - b).max() for a, b in zip(s1, s2)) / 15.0
        if err <= tol or h <= 1e-9:
            state = s2
            t += h
            factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * (tol / err) ** 0.2))
            h *= factor
        else:
            h *= max(0.2, 0.9 * (tol / err) ** 0.2)
    return state[2]


def shoot_log(man, X, Y, v0=None, n_fixed=None, newton_tol=None):
    """Damped Newton shooting for v with exp_x(v) = y, batched.

    Returns (V, ok_mask).  The initial guess is the wrapped chart-coordinate
    difference.  The Jacobian of exp in v is taken by forward differences.
    ``n_fixed`` propagates fixed-step integration (see ``geodesic_flow``)
    and allows a tighter Newton tolerance.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n, d = X.shape
    if v0 is None:
        V = man.wrap(Y - X)
    else:
        V = np.array(v0, dtype=float)
    ok = np.zeros(n, dtype=bool)
    active = np.arange(n)
    scale = np.maximum(1.0, np.abs(Y).max(axis=-1))
    tol = NEWTON_TOL if newton_tol is None else newton_tol

    def residual(Xa, Va, Ya):
        P, _, inside = geodesic_flow(man, Xa, Va, n_fixed=n_fixed)
        R = man.wrap(P - Ya)
        R[~inside] = np.nan
        return R

    R = residual(X, V, Y)
    rn = np.nanmax(np.abs(R), axis=-1)
    rn = np.where(np.isnan(rn), np.inf, rn)
    for _ in range(MAX_NEWTON_ITERS):
        conv = rn[active] <= tol * scale[active]
        ok[active[conv]] = True
        active = active[~conv]
        if active.size == 0:
            break
        Xa, Ya, Va = X[active], Y[active], V[active]
        Ra = R[active]
        # forward-difference Jacobian of the residual in v
        J = np.empty((active.size, d, d))
        base_P, _, _ = geodesic_flow(man, Xa, Va, n_fixed=n_fixed)
        for j in range(d):
            e = np.zeros(d)
            e[j] = JAC_FD_STEP
            Pj, _, _ = geodesic_flow(man, Xa, Va + e, n_fixed=n_fixed)
            J[:, :, j] = man.wrap(Pj - base_P) / JAC_FD_STEP
        # regularize near-singular rows
        J = J + 1e-13 * np.eye(d)
        try:
            delta = np.linalg.solve(J, Ra[..., None])[..., 0]
        except np.linalg.LinAlgError:
            delta = np.array(
                [np.linalg.lstsq(J[i], Ra[i], rcond=None)[0] for i in range(active.size)]
            )
        alpha = np.ones(active.size)
        Vn = Va - alpha[:, None] * delta
        Rn = residual(Xa, Vn, Ya)
        rnn = np.nanmax(np.abs(Rn), axis=-1)
        rnn = np.where(np.isnan(rnn), np.inf, rnn)
        for _ in range(6):
            worse = rnn > rn[active]
            if not np.any(worse):
                break
            alpha[worse] *= 0.5
            Vn[worse] = Va[worse] - alpha[worse, None] * delta[worse]
            Rw = residual(Xa[worse], Vn[worse], Ya[worse])
            rnw = np.nanmax(np.abs(Rw), axis=-1)
            rnn[worse] = np.where(np.isnan(rnw), np.inf, rnw)
            Rn[worse] = Rw
        V[active] = Vn
        R[active] = Rn
        rn[active] = rnn
    conv = rn[active] <= tol * scale[active] if active.size else np.array([], bool)
    if active.size:
        ok[active[conv]] = True
    return V, ok

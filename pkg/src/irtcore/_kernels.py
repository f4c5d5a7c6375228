"""Fused numba kernels for the batched conditional solves.

Each kernel walks one response block once and accumulates the per-problem
objective (and, on request, gradient and Hessian entries) in a single pass,
sharing the exponential evaluations between the loss and its derivatives.
Problems are independent, so the outer loop parallelizes over them while each
accumulation stays serial; results are therefore bit-identical regardless of
thread count.

Layouts: ability kernels take the transposed responses ``YT`` (n, m) so one
examinee's row is contiguous; item kernels take the (m, K) column subset with
per-column weights.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

_NEG_INF = -math.inf


@njit(cache=True, inline="always")
def _softplus(z):
    e = math.exp(-abs(z))
    return (z if z > 0.0 else 0.0) + math.log1p(e)


@njit(cache=True, parallel=True)
def theta_eval_2pl(YT, a, b, idx, th, want_grad, val, g, h):
    m = a.shape[0]
    for p in prange(idx.shape[0]):
        j = idx[p]
        t = th[p]
        v = 0.0
        gg = 0.0
        hh = 0.0
        for i in range(m):
            y = YT[j, i]
            z = -y * (a[i] * t - b[i])
            e = math.exp(-abs(z))
            v += (z if z > 0.0 else 0.0) + math.log1p(e)
            if want_grad:
                s = (1.0 if z >= 0.0 else e) / (1.0 + e)
                gg += s * (-y * a[i])
                hh += s * (1.0 - s) * (a[i] * a[i])
        val[p] = v
        if want_grad:
            g[p] = gg
            h[p] = hh


@njit(cache=True, parallel=True)
def theta_eval_3pl(YT, a, b, lnc, log1mc, idx, th, want_grad, val, g, h):
    m = a.shape[0]
    for p in prange(idx.shape[0]):
        j = idx[p]
        t = th[p]
        v = 0.0
        gg = 0.0
        hh = 0.0
        for i in range(m):
            y = YT[j, i]
            z = -y * (a[i] * t - b[i])
            e = math.exp(-abs(z))
            sp = (z if z > 0.0 else 0.0) + math.log1p(e)
            s = (1.0 if z >= 0.0 else e) / (1.0 + e)
            lp = s
            lpp = s * (1.0 - s)
            if y > 0:
                w = z + lnc[i]
                e2 = math.exp(-abs(w))
                sp -= (w if w > 0.0 else 0.0) + math.log1p(e2)
                s2 = (1.0 if w >= 0.0 else e2) / (1.0 + e2)
                lp -= s2
                lpp -= s2 * (1.0 - s2)
            else:
                sp -= log1mc[i]
            v += sp
            if want_grad:
                gg += lp * (-y * a[i])
                hh += lpp * (a[i] * a[i])
        val[p] = v
        if want_grad:
            g[p] = gg
            h[p] = hh


@njit(cache=True, parallel=True)
def item_eval_2pl(Yc, u, th, idx, ab, want_grad, val, g, H):
    K = th.shape[0]
    for p in prange(idx.shape[0]):
        i = idx[p]
        aa = ab[p, 0]
        bb = ab[p, 1]
        v = 0.0
        g0 = 0.0
        g1 = 0.0
        h00 = 0.0
        h01 = 0.0
        h11 = 0.0
        for jj in range(K):
            y = Yc[i, jj]
            z = -y * (aa * th[jj] - bb)
            e = math.exp(-abs(z))
            v += u[jj] * ((z if z > 0.0 else 0.0) + math.log1p(e))
            if want_grad:
                s = u[jj] * (1.0 if z >= 0.0 else e) / (1.0 + e)
                sp = s * (1.0 - (1.0 if z >= 0.0 else e) / (1.0 + e))
                g0 += s * (-y * th[jj])
                g1 += s * y
                h00 += sp * th[jj] * th[jj]
                h01 += sp * (-th[jj])
                h11 += sp
        val[p] = v
        if want_grad:
            g[p, 0] = g0
            g[p, 1] = g1
            H[p, 0, 0] = h00
            H[p, 0, 1] = h01
            H[p, 1, 0] = h01
            H[p, 1, 1] = h11


@njit(cache=True, parallel=True)
def item_eval_3pl(Yc, u, th, idx, abc, want_grad, val, g, H):
    K = th.shape[0]
    for p in prange(idx.shape[0]):
        i = idx[p]
        aa = abc[p, 0]
        bb = abc[p, 1]
        cc = abc[p, 2]
        lnc = math.log(cc) if cc > 0.0 else _NEG_INF
        log1mc = math.log1p(-cc)
        v = 0.0
        g0 = 0.0
        g1 = 0.0
        g2 = 0.0
        h00 = 0.0
        h01 = 0.0
        h11 = 0.0
        h02 = 0.0
        h12 = 0.0
        h22 = 0.0
        for jj in range(K):
            y = Yc[i, jj]
            z = -y * (aa * th[jj] - bb)
            e = math.exp(-abs(z))
            sp = (z if z > 0.0 else 0.0) + math.log1p(e)
            s = (1.0 if z >= 0.0 else e) / (1.0 + e)
            lp = s
            lpp = s * (1.0 - s)
            if y > 0:
                w = z + lnc
                e2 = math.exp(-abs(w))
                spw = (w if w > 0.0 else 0.0) + math.log1p(e2)
                s2 = (1.0 if w >= 0.0 else e2) / (1.0 + e2)
                sp -= spw
                lp -= s2
                lpp -= s2 * (1.0 - s2)
                dc = -math.exp(z - spw)  # -e^z / (1 + c e^z)
                dcc = dc * dc
                dzc = dc * (1.0 - s2)
            else:
                sp -= log1mc
                dc = 1.0 / (1.0 - cc)
                dcc = dc * dc
                dzc = 0.0
            v += u[jj] * sp
            if want_grad:
                lp *= u[jj]
                lpp *= u[jj]
                dzc *= u[jj]
                g0 += lp * (-y * th[jj])
                g1 += lp * y
                g2 += u[jj] * dc
                h00 += lpp * th[jj] * th[jj]
                h01 += lpp * (-th[jj])
                h11 += lpp
                h02 += dzc * (-y * th[jj])
                h12 += dzc * y
                h22 += u[jj] * dcc
        val[p] = v
        if want_grad:
            g[p, 0] = g0
            g[p, 1] = g1
            g[p, 2] = g2
            H[p, 0, 0] = h00
            H[p, 0, 1] = h01
            H[p, 1, 0] = h01
            H[p, 1, 1] = h11
            H[p, 0, 2] = h02
            H[p, 2, 0] = h02
            H[p, 1, 2] = h12
            H[p, 2, 1] = h12
            H[p, 2, 2] = h22


def warm_up():
    """Trigger JIT compilation (cached on disk after the first process)."""
    YT = np.array([[1, -1]], dtype=np.int8)
    Yc = np.ascontiguousarray(YT.T)
    a = np.ones(2)
    b = np.zeros(2)
    idx = np.zeros(1, dtype=np.intp)
    th1 = np.zeros(1)
    v = np.zeros(1)
    g1 = np.zeros(1)
    h1 = np.zeros(1)
    theta_eval_2pl(YT, a, b, idx, th1, True, v, g1, h1)
    theta_eval_3pl(YT, a, b, np.log(np.full(2, 0.1)), np.log1p(-np.full(2, 0.1)),
                   idx, th1, True, v, g1, h1)
    u = np.ones(1)
    th = np.zeros(1)
    ab = np.ones((1, 2))
    g2 = np.zeros((1, 2))
    H2 = np.zeros((1, 2, 2))
    item_eval_2pl(Yc, u, th, idx, ab, True, v, g2, H2)
    abc = np.array([[1.0, 0.0, 0.1]])
    g3 = np.zeros((1, 3))
    H3 = np.zeros((1, 3, 3))
    item_eval_3pl(Yc, u, th, idx, abc, True, v, g3, H3)

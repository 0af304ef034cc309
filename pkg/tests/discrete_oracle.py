"""Second, independently written grid max-min for small discrete kernels.

Uses the entropy form H(Y) - H(U,Y) + H(U,S) - H(S) of I(U;Y) - I(U;S) on the
full joint p(s, u, x, y), a recursive composition enumerator and plain loops.
"""
import itertools
import math

import numpy as np


def compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


def simplex(k, res):
    return [np.array(c, dtype=float) / res for c in compositions(res, k)]


def entropy(p):
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def objective(W, P_S, Q, PJ):
    # W[x, s, j, y], Q[s, u, x], PJ[s, j]
    nx, ns, nj, ny = W.shape
    nu = Q.shape[1]
    joint = np.zeros((ns, nu, ny))
    for s in range(ns):
        for u in range(nu):
            for x in range(nx):
                for j in range(nj):
                    for y in range(ny):
                        joint[s, u, y] += P_S[s] * Q[s, u, x] * PJ[s, j] * W[x, s, j, y]
    p_uy = joint.sum(axis=0)
    p_us = joint.sum(axis=2)
    return (entropy(p_uy.sum(axis=0)) - entropy(p_uy.ravel())
            + entropy(p_us.ravel()) - entropy(P_S))


def maxmin(W, P_S, aux, outer_res, inner_res):
    nx, ns, nj, _ = W.shape
    enc_rows = simplex(aux * nx, outer_res)
    jam_rows = simplex(nj, inner_res)
    best = -math.inf
    for rows in itertools.product(enc_rows, repeat=ns):
        Q = np.array([r.reshape(aux, nx) for r in rows])
        worst = math.inf
        for jr in itertools.product(jam_rows, repeat=ns):
            worst = min(worst, objective(W, P_S, Q, np.array(jr)))
        best = max(best, worst)
    return best

"""Brute-force max-min evaluation of I(U;Y) - I(U;S) on small alphabets.

The outer maximisation runs over P(u, x | s), the inner minimisation over
the jammer law P(j | s) that mixes the kernel W(y | x, s, j) into
V(y | x, s). Both are exhaustive searches over regular simplex grids, so the
returned value is a grid value at the reported resolution, not the exact
max-min.
"""
import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ResourceError

MAX_ALPHABET = 4
MAX_OUTER_POINTS = 2_000_000
_CHUNK_ELEMS = 4_000_000


@dataclass(frozen=True)
class DiscreteAvcSpec:
    """``W[x, s, j, y]`` kernel, state law ``P_S`` and auxiliary alphabet size."""

    W: np.ndarray
    P_S: np.ndarray
    aux_size: int = 2

    def __post_init__(self):
        W = np.asarray(self.W, dtype=float)
        P_S = np.asarray(self.P_S, dtype=float)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "P_S", P_S)
        if W.ndim != 4:
            raise ValueError("W must be indexed [x][s][j][y]")
        sizes = W.shape + (self.aux_size,)
        if min(sizes) < 1 or max(sizes) > MAX_ALPHABET:
            raise ResourceError(f"alphabet sizes {sizes} outside 1..{MAX_ALPHABET}",
                                required=max(sizes), available=MAX_ALPHABET)
        if P_S.shape != (W.shape[1],):
            raise ValueError("P_S length must match the state alphabet of W")
        if np.any(W < 0) or np.any(np.abs(W.sum(axis=-1) - 1) > 1e-12):
            raise ValueError("every W[x, s, j, :] must be a probability vector")
        if np.any(P_S < 0) or abs(P_S.sum() - 1) > 1e-12:
            raise ValueError("P_S must be a probability vector")

    @property
    def sizes(self):
        nx, ns, nj, ny = self.W.shape
        return {"U": self.aux_size, "X": nx, "S": ns, "J": nj, "Y": ny}

    @classmethod
    def from_dict(cls, d):
        return cls(W=np.array(d["W"], dtype=float), P_S=np.array(d["P_S"], dtype=float),
                   aux_size=int(d.get("aux_size", 2)))

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return {"W": self.W.tolist(), "P_S": self.P_S.tolist(), "aux_size": self.aux_size}


def _xlogx_ratio(p, q):
    """sum p log2(p / q) with 0 log 0 = 0 over the trailing axes."""
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0) / np.where(q > 0, q, 1.0)), 0.0)
    return t


def _check_conditional(P, rows_shape, name):
    P = np.asarray(P, dtype=float)
    if P.shape[0] != rows_shape or np.any(P < 0):
        raise ValueError(f"{name} has the wrong shape or negative entries")
    sums = P.reshape(P.shape[0], -1).sum(axis=1)
    if np.any(np.abs(sums - 1) > 1e-9):
        raise ValueError(f"{name} rows must sum to 1")
    return P


def mixed_channel(spec, P_J_given_S):
    """V[x, s, y] = sum_j W[x, s, j, y] P(j | s)."""
    return np.einsum("xsjy,sj->xsy", spec.W, P_J_given_S)


def evaluate_objective(spec, P_UX_given_S, P_J_given_S):
    """I(U;Y) - I(U;S) in bits for one encoder law ``[s, u, x]`` and one
    jammer law ``[s, j]``."""
    ns = spec.W.shape[1]
    Q = _check_conditional(P_UX_given_S, ns, "P_UX_given_S")
    PJ = _check_conditional(P_J_given_S, ns, "P_J_given_S")
    if Q.shape[1:] != (spec.aux_size, spec.W.shape[0]) or PJ.shape[1] != spec.W.shape[2]:
        raise ValueError("conditional laws do not match the alphabet sizes")
    V = mixed_channel(spec, PJ)
    p_us = np.einsum("s,sux->us", spec.P_S, Q)
    p_uy = np.einsum("s,sux,xsy->uy", spec.P_S, Q, V)
    i_us = _xlogx_ratio(p_us, np.outer(p_us.sum(1), p_us.sum(0))).sum()
    i_uy = _xlogx_ratio(p_uy, np.outer(p_uy.sum(1), p_uy.sum(0))).sum()
    return float(i_uy - i_us)


def simplex_grid(k, resolution):
    """All probability vectors of length k with entries in multiples of
    1/resolution, in lexicographic order of the bar positions."""
    pts = []
    for bars in itertools.combinations(range(resolution + k - 1), k - 1):
        prev = -1
        parts = []
        for b in bars:
            parts.append(b - prev - 1)
            prev = b
        parts.append(resolution + k - 2 - prev)
        pts.append(parts)
    return np.array(pts, dtype=float) / resolution


def conditional_grid(rows, k, resolution):
    """Product grid over ``rows`` independent simplices: shape (G, rows, k)."""
    base = simplex_grid(k, resolution)
    count = base.shape[0] ** rows
    if count > MAX_OUTER_POINTS:
        raise ResourceError(f"grid of {count} points exceeds the limit {MAX_OUTER_POINTS}",
                            required=count, available=MAX_OUTER_POINTS)
    idx = np.array(list(itertools.product(range(base.shape[0]), repeat=rows)), dtype=np.intp)
    return base[idx]


@dataclass
class CapacityResult:
    value: float
    outer_grid: int
    inner_grid: int
    P_UX_given_S: np.ndarray
    P_J_given_S: np.ndarray
    minmax_value: float
    duality_gap: float
    refined_inner_grid: int | None = None
    refined_value: float | None = None
    refinement_delta: float | None = None

    def to_dict(self):
        return {
            "value_bits": self.value,
            "outer_grid": self.outer_grid,
            "inner_grid": self.inner_grid,
            "argmax_P_UX_given_S": self.P_UX_given_S.tolist(),
            "argmin_P_J_given_S": self.P_J_given_S.tolist(),
            "minmax_value_bits": self.minmax_value,
            "duality_gap_bits": self.duality_gap,
            "refined_inner_grid": self.refined_inner_grid,
            "refined_value_bits": self.refined_value,
            "refinement_delta_bits": self.refinement_delta,
            "note": "grid value at the stated resolutions, not the exact max-min",
        }


def objective_table(spec, outer, inner):
    """Objective for every (outer, inner) grid pair: array (G_out, G_in)."""
    ns = spec.W.shape[1]
    nu, nx = spec.aux_size, spec.W.shape[0]
    Q = outer.reshape(-1, ns, nu, nx)
    PJ = inner.reshape(-1, ns, spec.W.shape[2])
    V = np.einsum("xsjy,hsj->hsxy", spec.W, PJ)
    # I(U;S) depends only on the encoder law.
    p_us = np.einsum("s,gsux->gus", spec.P_S, Q)
    i_us = _xlogx_ratio(p_us, p_us.sum(2, keepdims=True) * p_us.sum(1, keepdims=True)).sum(axis=(1, 2))
    p_u = p_us.sum(2)
    QS = Q * spec.P_S[None, :, None, None]
    out = np.empty((Q.shape[0], PJ.shape[0]))
    step = max(1, _CHUNK_ELEMS // max(1, PJ.shape[0] * nu * V.shape[-1]))
    for a in range(0, Q.shape[0], step):
        p_uy = np.einsum("gsux,hsxy->ghuy", QS[a:a + step], V)
        p_y = p_uy.sum(2, keepdims=True)
        ref = p_u[a:a + step, None, :, None] * p_y
        out[a:a + step] = _xlogx_ratio(p_uy, ref).sum(axis=(2, 3)) - i_us[a:a + step, None]
    return out


def solve_capacity(spec, outer_grid, inner_grid, refine=True):
    """Grid max-min of I(U;Y) - I(U;S).

    Reports the maximiser and its minimising jammer, the min-max value on the
    same grids (the duality gap is their difference) and, with ``refine``, the
    value after doubling the inner resolution. The doubled grid contains the
    original one, so the refined value can only be lower or equal.
    """
    if outer_grid < 5 or inner_grid < 5:
        raise ValueError("grid resolutions must be at least 5")
    sz = spec.sizes
    outer = conditional_grid(sz["S"], sz["U"] * sz["X"], outer_grid)
    inner = conditional_grid(sz["S"], sz["J"], inner_grid)
    table = objective_table(spec, outer, inner)
    inner_min = table.min(axis=1)
    g = int(np.argmax(inner_min))
    h = int(np.argmin(table[g]))
    value = float(inner_min[g])
    minmax = float(table.max(axis=0).min())
    res = CapacityResult(
        value=value, outer_grid=outer_grid, inner_grid=inner_grid,
        P_UX_given_S=outer[g].reshape(sz["S"], sz["U"], sz["X"]),
        P_J_given_S=inner[h], minmax_value=minmax, duality_gap=minmax - value)
    if refine:
        fine = conditional_grid(sz["S"], sz["J"], 2 * inner_grid)
        fine_val = float(objective_table(spec, outer, fine).min(axis=1).max())
        res.refined_inner_grid = 2 * inner_grid
        res.refined_value = fine_val
        res.refinement_delta = fine_val - value
    return res


def no_state_value(spec, grid):
    """max over P_X, min over P_J of I(X;Y) for a single-state spec."""
    if spec.W.shape[1] != 1:
        raise ValueError("needs a single-state spec")
    nx, _, nj, _ = spec.W.shape
    best = -math.inf
    inner = simplex_grid(nj, grid)
    for px in simplex_grid(nx, grid):
        worst = math.inf
        for pj in inner:
            V = np.einsum("xjy,j->xy", spec.W[:, 0], pj)
            p_xy = px[:, None] * V
            worst = min(worst, float(_xlogx_ratio(p_xy, np.outer(px, p_xy.sum(0))).sum()))
        best = max(best, worst)
    return best

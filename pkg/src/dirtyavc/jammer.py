"""Power-constrained jammers that see the message and the state, never the code.

A strategy is called as ``strategy(m, s, params, rng)``. Only these arguments
reach it, so no strategy can depend on the shared codebook randomness.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry

# Slack on ||J||^2 <= n*Lam that covers rounding in the constructions below.
POWER_RTOL = 1e-12


def jam_sphere_uniform(m, s, params, rng):
    """Uniform on the sphere of radius sqrt(n Lam), independent of m and s."""
    if params.Lam == 0:
        return np.zeros(params.n)
    return geometry.sample_sphere_uniform(params.n, params.n * params.Lam, rng)


def jam_state_aligned(m, s, params, rng, sign=1):
    """All power along ``sign * s_hat``."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    s = np.asarray(s, dtype=float)
    ss = float(np.dot(s, s))
    if params.Lam == 0 or ss == 0.0:
        return np.zeros(params.n)
    return (sign * math.sqrt(params.n * params.Lam / ss)) * s


def jam_gaussian_iid_truncated(m, s, params, rng):
    """I.i.d. N(0, Lam) samples, scaled back onto the power sphere if outside."""
    if params.Lam == 0:
        return np.zeros(params.n)
    j = math.sqrt(params.Lam) * rng.standard_normal(params.n)
    budget = params.n * params.Lam
    jj = float(np.dot(j, j))
    if jj > budget:
        j *= math.sqrt(budget / jj)
    return j


def jam_state_cancel_residual(m, s, params, rng, beta=0.5):
    """Spend up to ``beta`` of the power cancelling part of the state.

    ``J = -c s + J'`` with ``c = min(sqrt(beta n Lam) / ||s||, 1 - alpha)`` and
    ``J'`` uniform on the sphere of the leftover power inside the hyperplane
    orthogonal to s.
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1] (got {beta})")
    n, Lam = params.n, params.Lam
    if Lam == 0:
        return np.zeros(n)
    s = np.asarray(s, dtype=float)
    ss = float(np.dot(s, s))
    if ss == 0.0:
        return geometry.sample_sphere_uniform(n, n * Lam, rng)
    alpha = params.P / (params.P + Lam + params.noise_var)
    c = min(math.sqrt(beta * n * Lam / ss), 1.0 - alpha)
    j = -c * s
    rest = max(n * Lam - c * c * ss, 0.0)
    if rest > POWER_RTOL * n * Lam and n > 1:  # leftover below rounding level is dropped
        g = rng.standard_normal(n)
        g -= (np.dot(g, s) / ss) * s
        j = j + math.sqrt(rest / float(np.dot(g, g))) * g
    return j


@dataclass(frozen=True)
class JammerStrategy:
    """A named strategy with its keyword parameters bound."""

    name: str
    func: object = field(repr=False, compare=False)
    kwargs: tuple = ()

    def __call__(self, m, s, params, rng):
        j = self.func(m, s, params, rng, **dict(self.kwargs))
        jj = float(np.dot(j, j))
        if j.shape != (params.n,) or jj > params.n * params.Lam * (1 + POWER_RTOL):
            raise AssertionError(
                f"jammer {self.label} broke its power budget: "
                f"||J||^2={jj!r} > n*Lam={params.n * params.Lam!r}")
        return j

    @property
    def label(self):
        if not self.kwargs:
            return self.name
        args = ",".join(f"{k}={v}" for k, v in self.kwargs)
        return f"{self.name}({args})"


_REGISTRY = {
    "sphere_uniform": (jam_sphere_uniform, ()),
    "state_aligned": (jam_state_aligned, ("sign",)),
    "gaussian_iid_truncated": (jam_gaussian_iid_truncated, ()),
    "state_cancel_residual": (jam_state_cancel_residual, ("beta",)),
}

STRATEGY_NAMES = tuple(_REGISTRY)


def make_jammer(name, **kwargs):
    """Look a strategy up by name and bind its parameters."""
    try:
        func, allowed = _REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown jammer {name!r}; choose from {STRATEGY_NAMES}") from None
    extra = set(kwargs) - set(allowed)
    if extra:
        raise ValueError(f"jammer {name!r} does not accept {sorted(extra)}")
    if name == "state_cancel_residual" and not 0.0 <= kwargs.get("beta", 0.5) <= 1.0:
        raise ValueError(f"beta must lie in [0, 1] (got {kwargs['beta']})")
    if name == "state_aligned" and kwargs.get("sign", 1) not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return JammerStrategy(name, func, tuple(sorted(kwargs.items())))


def shipped_strategies():
    """Every strategy configuration exercised by the verification suite."""
    return [
        make_jammer("sphere_uniform"),
        make_jammer("state_aligned", sign=1),
        make_jammer("state_aligned", sign=-1),
        make_jammer("gaussian_iid_truncated"),
        make_jammer("state_cancel_residual", beta=0.25),
        make_jammer("state_cancel_residual", beta=0.5),
        make_jammer("state_cancel_residual", beta=1.0),
    ]

"""System parameters, derived coding constants and the additive channel law.

All logarithms are base 2, so rates and capacities are in bits per channel use.
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError

# Method used by numpy.random.Generator.standard_normal; echoed in run manifests.
GAUSSIAN_METHOD = "numpy PCG64 + ziggurat standard_normal"


@dataclass(frozen=True)
class SystemParams:
    """Powers and variances per symbol, plus the block length.

    P : encoder power, Lam : jammer power, noise_var : sigma^2,
    state_var : sigma_S^2, n : block length.
    """

    P: float
    Lam: float
    noise_var: float
    state_var: float
    n: int

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ValueError("; ".join(problems))

    def violations(self):
        out = []
        for name in ("P", "Lam", "noise_var", "state_var"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                out.append(f"{name} must be a finite number (got {v!r})")
        if not out:
            if not self.P > 0:
                out.append(f"P must be > 0 (got {self.P})")
            if self.Lam < 0:
                out.append(f"Lam must be >= 0 (got {self.Lam})")
            if not self.noise_var > 0:
                out.append(f"noise_var must be > 0 (got {self.noise_var})")
            if self.state_var < 0:
                out.append(f"state_var must be >= 0 (got {self.state_var})")
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)) or self.n < 1:
            out.append(f"n must be a positive integer (got {self.n!r})")
        return out

    def with_n(self, n):
        return SystemParams(self.P, self.Lam, self.noise_var, self.state_var, int(n))


@dataclass(frozen=True)
class DerivedConstants:
    alpha: float
    P_U: float
    theta: float
    C: float
    C_tilde: float
    C_U: float


def derive_constants(params):
    """Costa scaling, auxiliary power, correlation target and the three rates."""
    P, Lam, s2, sS2 = params.P, params.Lam, params.noise_var, params.state_var
    alpha = P / (P + Lam + s2)
    P_U = P + alpha ** 2 * sS2
    C = 0.5 * math.log2(1.0 + P / (Lam + s2))
    C_tilde = 0.5 * math.log2(P_U / P)
    C_U = 0.5 * math.log2((P + Lam + s2) * P_U / ((Lam + s2) * P))
    theta = math.sqrt(alpha * (P + alpha * sS2) / P_U)
    return DerivedConstants(alpha=alpha, P_U=P_U, theta=theta, C=C,
                            C_tilde=C_tilde, C_U=C_U)


def sample_state(params, rng):
    """I.i.d. N(0, state_var) vector of length n."""
    return math.sqrt(params.state_var) * rng.standard_normal(params.n)


def sample_noise(params, rng):
    """I.i.d. N(0, noise_var) vector of length n."""
    return math.sqrt(params.noise_var) * rng.standard_normal(params.n)


def transmit(x, s, j, z):
    """Channel output ``y = x + s + j + z``."""
    arrs = [np.asarray(v, dtype=float) for v in (x, s, j, z)]
    if len({a.shape for a in arrs}) != 1 or arrs[0].ndim != 1:
        raise DimensionError("x, s, j, z must be 1-d vectors of equal length")
    x, s, j, z = arrs
    return x + s + j + z

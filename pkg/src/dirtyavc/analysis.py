"""Closed-form quantities and numerical certificates for the Gaussian scheme."""
import math
from dataclasses import asdict, dataclass

import numpy as np

from .channel import SystemParams, derive_constants
from .errors import DomainError

# Rounding slack accepted on V and W computed from simulated vectors.
_DOMAIN_TOL = 1e-9


def awgn_avc_capacity(P, Lam, noise_var):
    """0.5 * log2(1 + P / (Lam + noise_var)) in bits per use."""
    return 0.5 * math.log2(1.0 + P / (Lam + noise_var))


def capacity(params):
    return awgn_avc_capacity(params.P, params.Lam, params.noise_var)


def sphere_cap_bound(n, gamma):
    """Upper bound (1 - gamma^2)^((n-1)/2) on P(<r, R> >= gamma).

    Valid for 1/sqrt(2 pi n) < gamma < 1; outside that window a
    :class:`DomainError` is raised.
    """
    if not 1.0 / math.sqrt(2.0 * math.pi * n) < gamma < 1.0:
        raise DomainError(
            f"gamma={gamma} outside (1/sqrt(2 pi n), 1) = ({1 / math.sqrt(2 * math.pi * n):.4g}, 1)")
    return 2.0 ** ((n - 1) * 0.5 * math.log2(1.0 - gamma * gamma))


def f_vw(params, V, W):
    """Asymptotic lower bound on <y_hat, u_hat> for a jammer with state
    alignment V = <j_hat, s_hat> and power use W = ||j||^2 / n.

    Accepts scalars or broadcastable arrays.
    """
    c = derive_constants(params)
    a, P, Lam, sS2 = c.alpha, params.P, params.Lam, params.state_var
    V = np.asarray(V, dtype=float)
    W = np.asarray(W, dtype=float)
    if np.any(np.abs(V) > 1 + _DOMAIN_TOL) or np.any(W < -_DOMAIN_TOL * max(Lam, 1.0)) \
            or np.any(W > Lam * (1 + _DOMAIN_TOL) + _DOMAIN_TOL):
        raise DomainError("need -1 <= V <= 1 and 0 <= W <= Lam")
    W = np.clip(W, 0.0, Lam)
    V = np.clip(V, -1.0, 1.0)
    cross = V * a * np.sqrt(W * sS2)
    denom = P + a * sS2 + a * (W - Lam) + 2.0 * cross
    if np.any(denom <= 0):
        raise DomainError("nonpositive denominator in f(V, W)")
    out = math.sqrt(a) * (P + a * sS2 + cross) / np.sqrt(c.P_U * denom)
    return float(out) if out.ndim == 0 else out


@dataclass
class FClaimCertificate:
    params: dict
    grid_resolution: int
    theta: float
    min_value: float
    argmin_V: float
    argmin_W: float
    margin: float
    argmin_near_anchor: bool
    algebraic_lhs: float
    algebraic_rhs: float
    algebraic_holds: bool
    holds: bool

    def to_dict(self):
        return asdict(self)


def verify_f_claim(params, grid_resolution=1000, tol=1e-9):
    """Grid-certify that f(V, W) >= theta over [-1, 1] x [0, Lam].

    Also checks the squared form (V a sqrt(W sS2))^2 >= (P + a sS2) a (W - Lam)
    at the grid minimiser, and whether the minimum is attained within one grid
    cell of the anchor (V, W) = (0, Lam).
    """
    if grid_resolution < 100:
        raise ValueError("grid_resolution must be at least 100")
    c = derive_constants(params)
    Lam = params.Lam
    Vs = np.linspace(-1.0, 1.0, grid_resolution)
    Ws = np.linspace(0.0, Lam, grid_resolution)
    F = f_vw(params, Vs[:, None], Ws[None, :])
    i, j = np.unravel_index(np.argmin(F), F.shape)
    fmin = float(F[i, j])
    dV = Vs[1] - Vs[0]
    dW = Ws[1] - Ws[0] if Lam > 0 else 0.0
    near = (np.abs(Vs) <= dV + 1e-15)[:, None] & (np.abs(Ws - Lam) <= dW + 1e-15)[None, :]
    near_min = float(F[near].min())
    V, W = float(Vs[i]), float(Ws[j])
    a = c.alpha
    lhs = (V * a * math.sqrt(W * params.state_var)) ** 2
    rhs = (params.P + a * params.state_var) * a * (W - Lam)
    return FClaimCertificate(
        params=asdict(params),
        grid_resolution=grid_resolution,
        theta=c.theta,
        min_value=fmin,
        argmin_V=V,
        argmin_W=W,
        margin=fmin - c.theta,
        argmin_near_anchor=bool(near_min <= fmin * (1 + 1e-12)),
        algebraic_lhs=lhs,
        algebraic_rhs=rhs,
        algebraic_holds=bool(lhs >= rhs),
        holds=bool(fmin >= c.theta - tol),
    )


@dataclass
class DoubleExpReport:
    a1: float
    a2: float
    n: np.ndarray
    values: np.ndarray
    limit: int

    @property
    def final(self):
        return float(self.values[-1])

    def to_dict(self):
        return {"a1": self.a1, "a2": self.a2, "limit": self.limit,
                "n_max": int(self.n[-1]), "final": self.final,
                "n": self.n.tolist(), "values": self.values.tolist()}


def double_exp_log(a1, a2, n):
    """log of (1 - 2^(-n a1))^(2^(n a2)), stable for large n."""
    n = np.asarray(n, dtype=float)
    with np.errstate(divide="ignore"):
        inner = np.log(-np.log1p(-np.exp2(-n * a1)))
    return -np.exp(n * a2 * math.log(2.0) + inner)


def double_exp_limit(a1, a2, n_max):
    """Evaluate (1 - 2^(-n a1))^(2^(n a2)) for n = 1..n_max in the log domain.

    The sequence tends to 1 when a1 > a2 and to 0 when a1 < a2.
    """
    if not (a1 > 0 and a2 > 0):
        raise ValueError("a1 and a2 must be positive")
    if a1 == a2:
        raise ValueError("a1 == a2 is excluded: the limit depends on lower-order terms")
    n = np.arange(1, int(n_max) + 1)
    vals = np.exp(double_exp_log(a1, a2, n))
    return DoubleExpReport(a1=a1, a2=a2, n=n, values=vals, limit=int(a1 > a2))


@dataclass(frozen=True)
class RateCheck:
    ok: bool
    margin: float
    threshold: float


def achievable_rate_condition(params, R, R_tilde, delta):
    """Test R + R_tilde < -0.5 log2(1 - (theta - delta)^2); margin in bits."""
    theta = derive_constants(params).theta
    if not 0 < delta < theta:
        raise DomainError(f"need 0 < delta < theta = {theta:.6g} (got {delta})")
    h = -0.5 * math.log2(1.0 - (theta - delta) ** 2)
    margin = h - (R + R_tilde)
    return RateCheck(ok=margin > 0, margin=margin, threshold=h)


def random_params(rng, low=0.1, high=10.0, n=1):
    """Draw P, Lam, noise_var, state_var independently log-uniform on [low, high]."""
    P, Lam, s2, sS2 = np.exp(rng.uniform(math.log(low), math.log(high), size=4))
    return SystemParams(float(P), float(Lam), float(s2), float(sS2), n)


def f_claim_sweep(base, draws=100, grid_resolution=1000, seed=0, tol=1e-9):
    """Certificates for ``base`` plus ``draws`` random parameter sets."""
    rng = np.random.default_rng(seed)
    certs = [verify_f_claim(base, grid_resolution, tol)]
    certs += [verify_f_claim(random_params(rng), grid_resolution, tol) for _ in range(draws)]
    return {
        "grid_resolution": grid_resolution,
        "parameter_sets": len(certs),
        "all_hold": all(c.holds for c in certs),
        "all_near_anchor": all(c.argmin_near_anchor for c in certs),
        "all_algebraic": all(c.algebraic_holds for c in certs),
        "min_margin": min(c.margin for c in certs),
        "certificates": [c.to_dict() for c in certs],
    }

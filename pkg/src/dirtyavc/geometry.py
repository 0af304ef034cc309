"""Vector primitives and uniform sampling on spheres and sphere slices.

Vectors are plain 1-d ``numpy`` float arrays. Every sampler takes an explicit
``numpy.random.Generator`` so results are reproducible from a seed.
"""
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, DimensionError, GeometryError

# Relative slack allowed when a slice is empty only because of rounding.
_TANGENT_RTOL = 1e-12


def _as_vec(a):
    a = np.asarray(a, dtype=float)
    if a.ndim != 1:
        raise DimensionError(f"expected a 1-d vector, got shape {a.shape}")
    return a


def inner(a, b):
    """Dot product of two equal-length vectors."""
    a, b = _as_vec(a), _as_vec(b)
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch: {a.size} vs {b.size}")
    return float(np.dot(a, b))


def norm_sq(a):
    a = _as_vec(a)
    return float(np.dot(a, a))


def unit(a):
    """Return ``a / ||a||``.

    Raises
    ------
    DegenerateInputError
        If ``a`` is the zero vector.
    """
    a = _as_vec(a)
    nrm = np.sqrt(np.dot(a, a))
    if nrm == 0.0:
        raise DegenerateInputError("cannot normalise the zero vector")
    return a / nrm


def sample_sphere_uniform(n, radius_sq, rng, size=None):
    """Draw uniformly from the sphere of squared radius ``radius_sq`` in R^n.

    A standard Gaussian vector is normalised and rescaled, which gives an
    exactly rotation-invariant law. With ``size`` given, returns a
    ``(size, n)`` array of independent draws.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not radius_sq > 0:
        raise ValueError("radius_sq must be positive")
    shape = (n,) if size is None else (size, n)
    g = rng.standard_normal(shape)
    nrm = np.linalg.norm(g, axis=-1, keepdims=True)
    return g * (np.sqrt(radius_sq) / nrm)


@dataclass(frozen=True)
class SphereSliceSpec:
    """The set ``{u : ||u||^2 = radius_sq, <u, s> = z}``.

    It is a sphere of radius ``slice_radius`` centred at ``z s / ||s||^2``
    inside the hyperplane orthogonal to ``s``.
    """

    z: float
    s: np.ndarray
    radius_sq: float

    def __post_init__(self):
        object.__setattr__(self, "s", _as_vec(self.s))
        if not self.radius_sq > 0:
            raise ValueError("radius_sq must be positive")
        if norm_sq(self.s) == 0.0:
            raise DegenerateInputError("anchor vector s must be nonzero")

    @property
    def slice_radius_sq(self):
        return self.radius_sq - self.z ** 2 / norm_sq(self.s)

    @property
    def slice_radius(self):
        r2 = self.slice_radius_sq
        if r2 < 0:
            if r2 >= -_TANGENT_RTOL * self.radius_sq:
                return 0.0
            raise GeometryError(
                f"empty slice: z^2/||s||^2 = {self.z ** 2 / norm_sq(self.s):.6g} "
                f"exceeds radius_sq = {self.radius_sq:.6g}")
        return float(np.sqrt(r2))


def sample_sphere_cap_slice(spec, rng):
    """Draw uniformly from the slice described by ``spec``.

    Built constructively: a Gaussian draw is projected onto the orthogonal
    complement of ``s``, scaled to the slice radius, then shifted by
    ``z s / ||s||^2``.
    """
    rho = spec.slice_radius
    s = spec.s
    ss = norm_sq(s)
    center = (spec.z / ss) * s
    if rho == 0.0:
        return center
    g = rng.standard_normal(s.size)
    g -= (np.dot(g, s) / ss) * s
    gn = np.sqrt(np.dot(g, g))
    if gn == 0.0:  # only possible for n == 1, where the slice is a point
        return center
    return center + (rho / gn) * g


# Law of the projection <r, R> of a uniform unit vector R onto a fixed unit r.
# (1 + <r, R>) / 2 ~ Beta((n-1)/2, (n-1)/2) for n >= 2.

def _proj_shape(n):
    if n < 2:
        raise ValueError("projection law needs n >= 2")
    return 0.5 * (n - 1)


def _special():
    # scipy.special is loaded on first use; it roughly doubles CLI startup time
    from scipy import special

    return special


def projection_cdf(n, t):
    """P(<r, R> <= t) for R uniform on the unit sphere in R^n."""
    special = _special()
    a = _proj_shape(n)
    t = np.clip(t, -1.0, 1.0)
    return special.betainc(a, a, 0.5 * (1.0 + t))


def projection_sf(n, t):
    """P(<r, R> > t), computed through the mirrored lower tail for accuracy."""
    a = _proj_shape(n)
    t = np.clip(t, -1.0, 1.0)
    return _special().betainc(a, a, 0.5 * (1.0 - t))


def projection_prob_between(n, lo, hi):
    """P(lo <= <r, R> <= hi), accurate when the interval sits in a tail."""
    lo, hi = max(lo, -1.0), min(hi, 1.0)
    if hi <= lo:
        return 0.0
    if lo >= 0.0:
        lo, hi = -hi, -lo
    return float(projection_cdf(n, hi) - projection_cdf(n, lo))


def sample_projection_between(n, lo, hi, rng):
    """Sample ``<r, R>`` conditioned on lying in ``[lo, hi]`` (inverse CDF)."""
    lo, hi = max(lo, -1.0), min(hi, 1.0)
    if hi <= lo:
        raise GeometryError(f"empty projection window [{lo}, {hi}]")
    sign = 1.0
    if lo >= 0.0:
        lo, hi, sign = -hi, -lo, -1.0
    special = _special()
    a = _proj_shape(n)
    f_lo = special.betainc(a, a, 0.5 * (1.0 + lo))
    f_hi = special.betainc(a, a, 0.5 * (1.0 + hi))
    u = f_lo + rng.random() * (f_hi - f_lo)
    t = 2.0 * special.betaincinv(a, a, u) - 1.0
    return sign * float(np.clip(t, lo, hi))

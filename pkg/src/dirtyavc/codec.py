"""Binned dirty-paper random code: codebook, state-aware encoder, angle decoder.

Messages and within-bin indices are 0-based. Two ways of running the code are
provided:

* explicit: a materialised :class:`Codebook` used by :func:`encode` and
  :func:`decode`, limited to ``CodeConfig.max_codewords`` vectors;
* ensemble: :func:`encode_from_ensemble` and :func:`ensemble_error_probability`
  reproduce the law of one transmission averaged over a fresh random codebook
  without ever building it. The chosen codeword of an i.i.d. spherical
  codebook is a uniform sphere point conditioned on satisfying the encoding
  window, and every codeword outside the sent bin is a uniform sphere point
  independent of the received vector, so both steps have closed forms in the
  projection law of :mod:`dirtyavc.geometry`.
"""
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .channel import SystemParams, derive_constants
from .errors import ResourceError

DEFAULT_MAX_CODEWORDS = 2 ** 22
DEFAULT_MAX_BYTES = 2 ** 30

_MAGIC = b"DPCB"
_FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIQQdQ")


def codeword_count(n, rate):
    """``round(2**(n*rate))`` with halves rounded up, never below 1."""
    return max(1, int(math.floor(2.0 ** (n * rate) + 0.5)))


@dataclass(frozen=True)
class CodeConfig:
    """Message rate ``R``, binning rate ``R_tilde`` (bits/use), encoding
    tolerance ``delta0`` (per symbol) and the channel parameters."""

    R: float
    R_tilde: float
    delta0: float
    params: SystemParams
    max_codewords: int = DEFAULT_MAX_CODEWORDS
    max_bytes: int = DEFAULT_MAX_BYTES

    def __post_init__(self):
        if self.R < 0 or self.R_tilde < 0:
            raise ValueError("rates must be non-negative")
        if not self.delta0 > 0:
            raise ValueError("delta0 must be positive")

    @property
    def n(self):
        return self.params.n

    @property
    def n_bins(self):
        return codeword_count(self.n, self.R)

    @property
    def bin_size(self):
        return codeword_count(self.n, self.R_tilde)

    @property
    def total_codewords(self):
        return self.n_bins * self.bin_size

    @property
    def constants(self):
        return derive_constants(self.params)

    @property
    def fits_in_memory(self):
        """Whether an explicit codebook respects both the count and byte caps."""
        total = self.total_codewords
        return total <= self.max_codewords and total * self.n * 8 <= self.max_bytes


def effective_rates(cfg):
    """Rates actually realised once codeword counts are rounded to integers."""
    return math.log2(cfg.n_bins) / cfg.n, math.log2(cfg.bin_size) / cfg.n


@dataclass(frozen=True)
class Codebook:
    """``codewords[j, k]`` is the k-th word of bin j, each of squared norm n*P_U.

    The array is stored bin-major and made read-only.
    """

    codewords: np.ndarray
    seed: int
    P_U: float

    def __post_init__(self):
        self.codewords.setflags(write=False)

    @property
    def n_bins(self):
        return self.codewords.shape[0]

    @property
    def bin_size(self):
        return self.codewords.shape[1]

    @property
    def n(self):
        return self.codewords.shape[2]

    def save(self, path):
        """Binary export: little-endian header then row-major float64 words."""
        header = _HEADER.pack(_MAGIC, _FORMAT_VERSION, self.n, self.n_bins,
                              self.bin_size, self.P_U, self.seed)
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(np.ascontiguousarray(self.codewords, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            raw = fh.read()
        magic, version, n, bins, per_bin, P_U, seed = _HEADER.unpack_from(raw)
        if magic != _MAGIC or version != _FORMAT_VERSION:
            raise ValueError(f"{path}: not a version-{_FORMAT_VERSION} codebook file")
        body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
        if body.size != n * bins * per_bin:
            raise ValueError(f"{path}: truncated codebook body")
        words = body.astype(float).reshape(bins, per_bin, n)
        return cls(codewords=words, seed=seed, P_U=P_U)


def build_codebook(cfg, seed):
    """Draw all codewords i.i.d. uniform on the sphere of squared radius n*P_U."""
    total = cfg.total_codewords
    if total > cfg.max_codewords:
        raise ResourceError(
            f"codebook needs {total} codewords but the cap is {cfg.max_codewords}",
            required=total, available=cfg.max_codewords)
    if total * cfg.n * 8 > cfg.max_bytes:
        raise ResourceError(
            f"codebook needs {total * cfg.n * 8} bytes but the cap is {cfg.max_bytes}",
            required=total * cfg.n * 8, available=cfg.max_bytes)
    P_U = cfg.constants.P_U
    rng = np.random.default_rng(seed)
    words = geometry.sample_sphere_uniform(cfg.n, cfg.n * P_U, rng, size=total)
    return Codebook(codewords=words.reshape(cfg.n_bins, cfg.bin_size, cfg.n),
                    seed=int(seed), P_U=P_U)


@dataclass(frozen=True)
class EncodeOutcome:
    x: np.ndarray
    k: int | None = None
    u: np.ndarray | None = field(default=None, repr=False)
    rescaled: bool = False

    @property
    def ok(self):
        return self.k is not None


def uniform_index(rng, count):
    """Uniform integer in [0, count); counts beyond int64 use a float draw."""
    if count < 2 ** 62:
        return int(rng.integers(count))
    return min(int(rng.random() * count), count - 1)


def _check_message(m, n_bins):
    if isinstance(m, bool) or not isinstance(m, (int, np.integer)) or not 0 <= m < n_bins:
        raise ValueError(f"message index {m!r} outside [0, {n_bins})")


def _transmit_codeword(u, s, alpha, nP, k):
    x = u - alpha * s
    xx = float(np.dot(x, x))
    rescaled = xx > nP
    if rescaled:
        # Hard power constraint: pull overshooting inputs back onto the sphere.
        x = x * math.sqrt(nP / xx)
    return EncodeOutcome(x=x, k=k, u=u, rescaled=rescaled)


def encode(cb, cfg, m, s, rng):
    """Search bin ``m`` for words with ``|<u - alpha s, s>| <= n delta0``.

    One qualifying word is picked uniformly and ``x = u - alpha s`` is sent;
    without a qualifying word the zero vector is sent.
    """
    _check_message(m, cb.n_bins)
    s = np.asarray(s, dtype=float)
    n = cfg.n
    alpha = cfg.constants.alpha
    words = cb.codewords[m]
    offsets = words @ s - alpha * float(np.dot(s, s))
    hits = np.flatnonzero(np.abs(offsets) <= n * cfg.delta0)
    if hits.size == 0:
        return EncodeOutcome(x=np.zeros(n))
    k = int(hits[rng.integers(hits.size)]) if hits.size > 1 else int(hits[0])
    return _transmit_codeword(words[k].copy(), s, alpha, n * cfg.params.P, k)


def decode(cb, y):
    """Minimum-angle decoder: bin of the word with the largest <y_hat, u_hat>.

    All codewords share one norm and normalising y is monotone, so the raw
    inner products <y, u> are ranked directly in one pass. ``argmax`` returns
    the first maximiser over the bin-major layout, i.e. ties go to the
    lexicographically smallest (bin, index). A zero y decodes to bin 0.
    """
    y = np.asarray(y, dtype=float)
    if not np.any(y):
        return 0
    scores = cb.codewords.reshape(-1, cb.n) @ y
    return int(np.argmax(scores)) // cb.bin_size


def _encoding_window(cfg, s):
    """Window for the projection <u_hat, s_hat> that satisfies the encoder."""
    n = cfg.n
    c = cfg.constants
    ss = float(np.dot(s, s))
    scale = math.sqrt(n * c.P_U * ss)
    center = c.alpha * ss
    return (center - n * cfg.delta0) / scale, (center + n * cfg.delta0) / scale


def encoding_success_probability(cfg, s):
    """P(some word of a fresh bin satisfies the encoding window | s)."""
    s = np.asarray(s, dtype=float)
    if not np.any(s):
        return 1.0
    lo, hi = _encoding_window(cfg, s)
    p = geometry.projection_prob_between(cfg.n, lo, hi)
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return 1.0
    return float(-math.expm1(cfg.bin_size * math.log1p(-p)))


def encode_from_ensemble(cfg, m, s, rng):
    """Encode against a freshly drawn (never materialised) codebook.

    Success is drawn with the exact bin-level probability; on success the
    chosen word is sampled from its conditional law (projection onto s from
    the truncated projection law, remainder uniform on the slice). The
    returned ``k`` is a uniformly drawn in-bin label.
    """
    _check_message(m, cfg.n_bins)
    s = np.asarray(s, dtype=float)
    n = cfg.n
    c = cfg.constants
    nP_U = n * c.P_U
    if rng.random() >= encoding_success_probability(cfg, s):
        return EncodeOutcome(x=np.zeros(n))
    k = uniform_index(rng, cfg.bin_size)
    if not np.any(s):
        u = geometry.sample_sphere_uniform(n, nP_U, rng)
    else:
        lo, hi = _encoding_window(cfg, s)
        t = geometry.sample_projection_between(n, lo, hi, rng)
        z = t * math.sqrt(nP_U * float(np.dot(s, s)))
        u = geometry.sample_sphere_cap_slice(
            geometry.SphereSliceSpec(z=z, s=s, radius_sq=nP_U), rng)
    return _transmit_codeword(u, s, c.alpha, n * cfg.params.P, k)


def ensemble_error_probability(cfg, corr):
    """P(some word outside the sent bin has <y_hat, u'_hat> >= corr).

    ``corr`` is the realised <y_hat, u_hat> of the sent word; the
    ``(n_bins - 1) * bin_size`` competitors are independent uniform points.
    """
    competitors = (cfg.n_bins - 1) * cfg.bin_size
    if competitors == 0:
        return 0.0
    tail = float(geometry.projection_sf(cfg.n, corr))
    if tail >= 1.0:
        return 1.0
    return float(-math.expm1(competitors * math.log1p(-tail)))

"""Trial orchestration, error-rate sweeps and the empirical lemma checks.

Random streams
--------------
Every random draw comes from a ``numpy.random.Generator`` seeded by
``SeedSequence(master_seed, spawn_key=key)``. Keys used here:

* ``(cell, 0, batch)``        codebook of a batch (explicit mode)
* ``(cell, 1, slot, trial)``  one trial for the ``slot``-th sampled message
* ``(cell, 2)``               choice of the sampled messages

``cell`` is the row index of a sweep in its deterministic emission order.
A trial's draws never depend on how trials are split across workers, so
serial and parallel runs give identical results.

Modes
-----
``explicit`` materialises codebooks (one per ``codebook_every`` trials) and
runs the real encoder and decoder. ``ensemble`` draws the same transmission
law without materialising the codebook (see :mod:`dirtyavc.codec`); it scores
an encoding failure as an error and counts a decoding error whenever a word
outside the sent bin correlates at least as well with y as the sent word.
``auto`` picks explicit when the codebook fits under both the codeword and
byte caps of its ``CodeConfig``.
"""
import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import analysis, codec, geometry
from .channel import derive_constants, sample_noise, sample_state, transmit
from .errors import ResourceError
from .stats import trend_test, wilson_interval, worst_row_mean

SCHEMA_VERSION = 1
DEFAULT_DELTA0 = 0.05
DEFAULT_MESSAGES = 8
DEFAULT_CODEBOOK_EVERY = 100
MAX_BLOCK_LENGTH = 400

STAT_NAMES = ("corr_yu", "ju", "js_su", "zz", "ss", "uz", "sz", "jz", "V", "W")


def stream(seed, *key):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


@dataclass
class TrialRecord:
    m: int
    encode_ok: bool
    decoded: int
    error: bool
    stats: dict = field(default_factory=dict)


def trial_stats(u, s, j, z, y):
    """Per-trial statistics; those involving the codeword are NaN if absent."""
    n = s.size
    nan = float("nan")
    ss = float(np.dot(s, s))
    jj = float(np.dot(j, j))
    js_hat = float(np.dot(j, s)) / math.sqrt(ss) if ss > 0 else 0.0
    out = {
        "zz": float(np.dot(z, z)) / n,
        "ss": ss / n,
        "sz": float(np.dot(s, z)) / n,
        "jz": float(np.dot(j, z)) / n,
        "V": js_hat / math.sqrt(jj) if jj > 0 and ss > 0 else 0.0,
        "W": jj / n,
    }
    if u is None:
        out.update(corr_yu=nan, ju=nan, js_su=nan, uz=nan)
    else:
        su_hat = float(np.dot(s, u)) / math.sqrt(ss) if ss > 0 else 0.0
        yy = float(np.dot(y, y))
        out.update(
            corr_yu=float(np.dot(y, u)) / math.sqrt(yy * float(np.dot(u, u))) if yy > 0 else 0.0,
            ju=float(np.dot(j, u)) / n,
            js_su=js_hat * su_hat / n,
            uz=float(np.dot(u, z)) / n,
        )
    return out


def _other_bin(rng, m, n_bins):
    k = codec.uniform_index(rng, n_bins - 1)
    return k + 1 if k >= m else k


def run_trial(cb, cfg, m, strategy, rng):
    """One encode -> jam -> noise -> decode pass.

    ``cb=None`` runs in ensemble mode against a fresh implicit codebook.
    """
    params = cfg.params
    s = sample_state(params, rng)
    if cb is None:
        enc = codec.encode_from_ensemble(cfg, m, s, rng)
    else:
        enc = codec.encode(cb, cfg, m, s, rng)
    j = strategy(m, s, params, rng)
    z = sample_noise(params, rng)
    y = transmit(enc.x, s, j, z)
    st = trial_stats(enc.u, s, j, z, y)
    if cb is not None:
        decoded = codec.decode(cb, y)
    elif cfg.n_bins == 1:
        decoded = 0
    elif not enc.ok or rng.random() < codec.ensemble_error_probability(cfg, st["corr_yu"]):
        decoded = _other_bin(rng, m, cfg.n_bins)
    else:
        decoded = m
    return TrialRecord(m=m, encode_ok=enc.ok, decoded=decoded, error=decoded != m, stats=st)


def resolve_mode(cfg, mode):
    if mode == "auto":
        return "explicit" if cfg.fits_in_memory else "ensemble"
    if mode not in ("explicit", "ensemble"):
        raise ValueError(f"unknown mode {mode!r}")
    return mode


def _check_envelope(cfg):
    if cfg.n > MAX_BLOCK_LENGTH:
        raise ResourceError(f"block length {cfg.n} exceeds the desk-scale limit {MAX_BLOCK_LENGTH}",
                            required=cfg.n, available=MAX_BLOCK_LENGTH)


@dataclass(frozen=True)
class _Job:
    cfg: codec.CodeConfig
    strategy: object
    seed: int
    cell: int
    mode: str
    codebook_every: int
    frozen: codec.Codebook | None


def _run_chunk(args):
    job, slot, m, t0, t1 = args
    cache = {}
    err = np.empty(t1 - t0, dtype=bool)
    ok = np.empty(t1 - t0, dtype=bool)
    corr = np.empty(t1 - t0)
    for i, t in enumerate(range(t0, t1)):
        if job.mode == "ensemble":
            cb = None
        elif job.frozen is not None:
            cb = job.frozen
        else:
            b = t // job.codebook_every
            if b not in cache:
                cache.clear()
                cache[b] = codec.build_codebook(job.cfg, np.random.SeedSequence(
                    job.seed, spawn_key=(job.cell, 0, b)).generate_state(2, np.uint64)[0])
            cb = cache[b]
        rec = run_trial(cb, job.cfg, m, job.strategy, stream(job.seed, job.cell, 1, slot, t))
        err[i], ok[i], corr[i] = rec.error, rec.encode_ok, rec.stats["corr_yu"]
    return err, ok, corr


def _pmap(func, items, workers):
    if workers is None or workers <= 1 or len(items) <= 1:
        return [func(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(func, items))


def _chunks(trials, workers):
    if workers is None or workers <= 1:
        return [(0, trials)]
    step = max(1, math.ceil(trials / (4 * workers)))
    return [(a, min(a + step, trials)) for a in range(0, trials, step)]


def choose_messages(n_bins, count, seed, cell):
    """Messages whose error is estimated; all of them if ``count`` is None."""
    if count is None or n_bins <= count:
        return list(range(n_bins))
    rng = stream(seed, cell, 2)
    picked = []
    while len(picked) < count:
        m = codec.uniform_index(rng, n_bins)
        if m not in picked:
            picked.append(m)
    return sorted(picked)


@dataclass
class SweepRow:
    R: float
    R_tilde: float
    n: int
    jammer: str
    mode: str
    messages: int
    trials: int
    errors: int
    error_rate: float
    ci_low: float
    ci_high: float
    pooled_error_rate: float
    mean_corr: float
    encode_failure_rate: float
    error_samples: np.ndarray = field(default=None, repr=False, compare=False)
    corr_samples: np.ndarray = field(default=None, repr=False, compare=False)


CSV_COLUMNS = tuple(f.name for f in fields(SweepRow) if f.name not in ("error_samples", "corr_samples"))


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class SweepResult:
    rows: list

    def to_csv(self, path=None):
        """CSV text with a versioned comment header; written to ``path`` if given."""
        buf = io.StringIO()
        buf.write(f"# dirtyavc sweep schema v{SCHEMA_VERSION}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in self.rows:
            w.writerow([_fmt(getattr(row, c)) for c in CSV_COLUMNS])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def find(self, **match):
        return [r for r in self.rows if all(getattr(r, k) == v for k, v in match.items())]


def estimate_max_error(cfg, strategy, trials, *, seed=0, mode="auto", messages=DEFAULT_MESSAGES,
                       codebook_every=DEFAULT_CODEBOOK_EVERY, codebook=None, cell=0, workers=1):
    """Estimate the maximal error probability over a sample of messages.

    ``trials`` runs per message. Messages are exchangeable under the random
    code, so by default only ``messages`` of them are sampled (``None`` for
    all). Passing ``codebook`` freezes one explicit codebook for every trial.
    """
    if trials < 100:
        raise ValueError("trials must be at least 100")
    _check_envelope(cfg)
    mode = "explicit" if codebook is not None else resolve_mode(cfg, mode)
    if mode == "explicit" and codebook is None and not cfg.fits_in_memory:
        codec.build_codebook(cfg, 0)  # raises ResourceError with the sizes
    job = _Job(cfg, strategy, seed, cell, mode, codebook_every, codebook)
    msgs = choose_messages(cfg.n_bins, messages, seed, cell)
    items = [(job, slot, m, a, b) for slot, m in enumerate(msgs) for a, b in _chunks(trials, workers)]
    parts = _pmap(_run_chunk, items, workers)
    per_msg = len(parts) // len(msgs)
    err = np.stack([np.concatenate([p[0] for p in parts[i * per_msg:(i + 1) * per_msg]])
                    for i in range(len(msgs))])
    ok = np.concatenate([p[1] for p in parts])
    corr = np.stack([np.concatenate([p[2] for p in parts[i * per_msg:(i + 1) * per_msg]])
                     for i in range(len(msgs))])
    counts = err.sum(axis=1)
    worst = int(np.argmax(counts))
    lo, hi = wilson_interval(int(counts[worst]), trials)
    finite = corr[np.isfinite(corr)]
    return SweepRow(
        R=cfg.R, R_tilde=cfg.R_tilde, n=cfg.n, jammer=strategy.label, mode=mode,
        messages=len(msgs), trials=trials, errors=int(counts[worst]),
        error_rate=float(counts[worst]) / trials, ci_low=lo, ci_high=hi,
        pooled_error_rate=float(err.mean()),
        mean_corr=float(finite.mean()) if finite.size else float("nan"),
        encode_failure_rate=float(1.0 - ok.mean()),
        error_samples=err, corr_samples=corr)


def default_binning_rate(params, R):
    """C_tilde + |C - R| / 2: the achievability choice below capacity, and a
    comfortable binning margin above it so errors there come from decoding."""
    c = derive_constants(params)
    return c.C_tilde + abs(c.C - R) / 2


def rate_sweep(params, rates, n_list, strategies, trials, *, R_tilde=None, delta0=DEFAULT_DELTA0,
               seed=0, mode="auto", messages=DEFAULT_MESSAGES, codebook_every=DEFAULT_CODEBOOK_EVERY,
               max_codewords=codec.DEFAULT_MAX_CODEWORDS, max_bytes=codec.DEFAULT_MAX_BYTES,
               workers=1):
    """Full factorial sweep; rows ordered by rate, then n, then strategy.

    ``R_tilde`` may be a number, a callable ``(params, R) -> R_tilde``, or
    None for :func:`default_binning_rate`.
    """
    if not rates or not n_list or not strategies:
        raise ValueError("rates, n_list and strategies must be nonempty")
    rows = []
    cell = 0
    for R in rates:
        for n in n_list:
            p = params.with_n(n)
            if R_tilde is None:
                rt = default_binning_rate(p, R)
            elif callable(R_tilde):
                rt = R_tilde(p, R)
            else:
                rt = R_tilde
            cfg = codec.CodeConfig(R=R, R_tilde=rt, delta0=delta0, params=p,
                                   max_codewords=max_codewords, max_bytes=max_bytes)
            for strat in strategies:
                rows.append(estimate_max_error(cfg, strat, trials, seed=seed, mode=mode, messages=messages,
                                               codebook_every=codebook_every, cell=cell, workers=workers))
                cell += 1
    return SweepResult(rows)


def error_trend(result, R, jammer, direction="nonincreasing", level=0.95, seed=0):
    """Bootstrap trend of the maximal error across n for one (R, jammer)."""
    rows = sorted(result.find(R=R, jammer=jammer), key=lambda r: r.n)
    ok, cis = trend_test([r.error_samples.astype(float) for r in rows], direction,
                         stat=worst_row_mean, level=level, seed=seed)
    return {"n": [r.n for r in rows], "error_rate": [r.error_rate for r in rows],
            "passed": ok, "diff_ci": cis}


# Empirical lemma checks -----------------------------------------------------

def _wilson_row(k, trials):
    lo, hi = wilson_interval(k, trials)
    return {"count": int(k), "trials": int(trials), "rate": k / trials, "ci_low": lo, "ci_high": hi}


def verify_lemma1(params, R_tilde_list, n_list, delta0, trials, *, seed=0, mode="ensemble"):
    """Encoding success frequency per (R_tilde, n) for a single bin.

    Trend across n is tested (nondecreasing) whenever R_tilde > C_tilde.
    In ensemble mode each trial draws the success event with its exact
    conditional probability given the state.
    """
    C_tilde = derive_constants(params).C_tilde
    rows, trends = [], []
    for a, Rt in enumerate(R_tilde_list):
        samples = []
        for b, n in enumerate(n_list):
            cfg = codec.CodeConfig(R=0.0, R_tilde=Rt, delta0=delta0, params=params.with_n(n))
            md = resolve_mode(cfg, mode)
            hits = np.empty(trials, dtype=bool)
            for t in range(trials):
                rng = stream(seed, a, b, 1, t)
                s = sample_state(cfg.params, rng)
                if md == "ensemble":
                    hits[t] = rng.random() < codec.encoding_success_probability(cfg, s)
                else:
                    cb = codec.build_codebook(cfg, stream(seed, a, b, 0, t).integers(2 ** 63))
                    hits[t] = codec.encode(cb, cfg, 0, s, rng).ok
            samples.append(hits.astype(float))
            rows.append({"R_tilde": Rt, "n": n, "mode": md, **_wilson_row(int(hits.sum()), trials)})
        if Rt > C_tilde and len(n_list) > 1:
            ok, cis = trend_test(samples, "nondecreasing", seed=seed)
            trends.append({"R_tilde": Rt, "passed": ok, "diff_ci": cis})
    return {"C_tilde": C_tilde, "delta0": delta0, "rows": rows, "trends": trends}


def _chosen_codeword_trials(params, strategy, n, trials, R_tilde, delta0, seed, key, record):
    """Encode with a fresh implicit codebook, jam, add noise; call ``record``."""
    p = params.with_n(n)
    cfg = codec.CodeConfig(R=0.0, R_tilde=R_tilde, delta0=delta0, params=p)
    for t in range(trials):
        rng = stream(seed, *key, t)
        s = sample_state(p, rng)
        enc = codec.encode_from_ensemble(cfg, 0, s, rng)
        j = strategy(0, s, p, rng)
        z = sample_noise(p, rng)
        record(t, enc, s, j, z)


def lemma2_residual(j, u, s):
    """|<J, U> - <J, s_hat><s_hat, U>| / n, the cross term of the parts
    orthogonal to s."""
    n = s.size
    ss = float(np.dot(s, s))
    if ss == 0.0:
        return abs(float(np.dot(j, u))) / n
    sh = s / math.sqrt(ss)
    return abs(float(np.dot(j, u)) - float(np.dot(j, sh)) * float(np.dot(sh, u))) / n


def verify_lemma2(params, strategies, n_list, trials, *, delta=0.05, R_tilde=None,
                  delta0=DEFAULT_DELTA0, seed=0):
    """Residual correlation between jammer and codeword outside span(s).

    Per strategy and n: mean residual and frequency above ``delta``; the mean
    is tested for a significant decrease from the smallest to the largest n.
    """
    c = derive_constants(params)
    Rt = c.C_tilde + 0.1 if R_tilde is None else R_tilde
    out = []
    for a, strat in enumerate(strategies):
        samples, rows = [], []
        for b, n in enumerate(n_list):
            res = np.full(trials, np.nan)

            def rec(t, enc, s, j, z):
                if enc.ok:
                    res[t] = lemma2_residual(j, enc.u, s)
            _chosen_codeword_trials(params, strat, n, trials, Rt, delta0, seed, (a, b, 1), rec)
            good = res[np.isfinite(res)]
            samples.append(res)
            rows.append({"n": n, "mean": float(good.mean()), "max": float(good.max()),
                         "freq_above_delta": float(np.mean(good > delta)),
                         "encode_failures": int(trials - good.size),
                         "scale_bound": 2 * math.sqrt(params.Lam * c.P_U / n)})
        pair = [np.nan_to_num(samples[0]), np.nan_to_num(samples[-1])]
        ok, cis = trend_test(pair, "decreasing", seed=seed + a)
        out.append({"jammer": strat.label, "rows": rows, "decrease_passed": ok,
                    "diff_ci": cis[0], "samples": samples})
    return {"delta": delta, "R_tilde": Rt, "delta0": delta0, "strategies": out}


def verify_lemma3(n_list, gamma_list, draws, *, seed=0, chunk=50_000):
    """Empirical tail of <r, R> against the sphere-cap bound for each pair."""
    rows = []
    for a, n in enumerate(n_list):
        for b, g in enumerate(gamma_list):
            bound = analysis.sphere_cap_bound(n, g)
            rng = stream(seed, a, b)
            r = geometry.unit(rng.standard_normal(n))
            hits = 0
            left = draws
            while left > 0:
                k = min(chunk, left)
                R = geometry.sample_sphere_uniform(n, 1.0, rng, size=k)
                hits += int(np.count_nonzero(R @ r >= g))
                left -= k
            p = hits / draws
            se = math.sqrt(p * (1 - p) / draws)
            rows.append({"n": n, "gamma": g, "draws": draws, "tail": p, "bound": bound,
                         "se": se, "passed": p <= bound + 4 * se})
    return {"rows": rows, "passed": all(r["passed"] for r in rows)}


def verify_lemma4(params, strategies, n_list, delta, trials, *, R_tilde=None, delta0=0.01,
                  f_slack=0.02, seed=0):
    """Frequency of <y_hat, u_hat> < theta - delta per strategy and n.

    Also evaluates f(V, W) at each trial's jammer statistics and reports the
    share of trials with f(V, W) >= theta - f_slack. Encoding failures are
    counted as violations.
    """
    c = derive_constants(params)
    Rt = c.C_tilde + 0.1 if R_tilde is None else R_tilde
    out = []
    for a, strat in enumerate(strategies):
        rows, samples = [], []
        for b, n in enumerate(n_list):
            corr = np.full(trials, -np.inf)
            fv = np.empty(trials)

            def rec(t, enc, s, j, z):
                y = transmit(enc.x, s, j, z)
                st = trial_stats(enc.u, s, j, z, y)
                if enc.ok:
                    corr[t] = st["corr_yu"]
                fv[t] = analysis.f_vw(params, st["V"], st["W"])
            _chosen_codeword_trials(params, strat, n, trials, Rt, delta0, seed, (a, b, 1), rec)
            viol = corr < c.theta - delta
            samples.append(viol.astype(float))
            ok_corr = corr[np.isfinite(corr)]
            rows.append({"n": n, "violation_freq": float(viol.mean()),
                         "mean_corr": float(ok_corr.mean()), "sd_corr": float(ok_corr.std()),
                         "f_vw_share": float(np.mean(fv >= c.theta - f_slack)),
                         "f_vw_min": float(fv.min())})
        trend = trend_test(samples, "nonincreasing", seed=seed + a) if len(n_list) > 1 else (True, [])
        out.append({"jammer": strat.label, "rows": rows, "trend_passed": trend[0], "diff_ci": trend[1]})
    return {"theta": c.theta, "delta": delta, "delta0": delta0, "R_tilde": Rt, "strategies": out}


def verify_lemma5(pairs=((0.2, 0.1), (0.1, 0.2)), n_max=200):
    return [analysis.double_exp_limit(a1, a2, n_max).to_dict() for a1, a2 in pairs]


def event_frequencies(params, strategy, n, trials, delta, *, R_tilde=None, delta0=DEFAULT_DELTA0, seed=0):
    """Empirical frequencies of the concentration events behind the
    correlation bound (noise/state cross terms, norms, jammer residual)."""
    c = derive_constants(params)
    Rt = c.C_tilde + 0.1 if R_tilde is None else R_tilde
    ev = {k: np.zeros(trials, dtype=bool) for k in ("uz", "sz", "jz", "zz", "ss", "residual")}

    def rec(t, enc, s, j, z):
        u = enc.u if enc.ok else np.zeros(n)
        ev["uz"][t] = abs(np.dot(u, z)) > n * delta
        ev["sz"][t] = abs(np.dot(s, z)) > n * delta
        ev["jz"][t] = abs(np.dot(j, z)) > n * delta
        ev["zz"][t] = abs(np.dot(z, z) - n * params.noise_var) > n * delta
        ev["ss"][t] = abs(np.dot(s, s) - n * params.state_var) > n * delta
        ev["residual"][t] = lemma2_residual(j, u, s) > delta
    _chosen_codeword_trials(params, strategy, n, trials, Rt, delta0, seed, (0, n, 1), rec)
    union = np.logical_or.reduce(list(ev.values()))
    return {**{k: float(v.mean()) for k, v in ev.items()}, "union": float(union.mean())}


def row_dict(row):
    d = asdict(row)
    d.pop("error_samples", None)
    d.pop("corr_samples", None)
    return d

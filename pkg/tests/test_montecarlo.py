import math

import numpy as np
import pytest
from scipy import stats

from dirtyavc import codec, montecarlo
from dirtyavc.channel import SystemParams, derive_constants
from dirtyavc.codec import CodeConfig
from dirtyavc.errors import ResourceError
from dirtyavc.jammer import make_jammer, shipped_strategies

UNIT = SystemParams(1.0, 1.0, 1.0, 1.0, 40)
SPHERE = make_jammer("sphere_uniform")


def test_near_noiseless_trial_is_correct():
    p = SystemParams(1.0, 0.0, 1e-10, 0.0, 30)
    cfg = CodeConfig(R=0.1, R_tilde=0.0, delta0=0.05, params=p)
    cb = codec.build_codebook(cfg, 1)
    for t in range(50):
        rec = montecarlo.run_trial(cb, cfg, t % cfg.n_bins, SPHERE, np.random.default_rng(t))
        assert rec.encode_ok and not rec.error


@pytest.mark.parametrize("mode", ["explicit", "ensemble"])
def test_single_bin_never_errs(mode):
    cfg = CodeConfig(R=0.0, R_tilde=0.1, delta0=0.05, params=UNIT)
    row = montecarlo.estimate_max_error(cfg, SPHERE, 100, seed=3, mode=mode)
    assert row.errors == 0 and row.error_rate == 0.0


def test_trial_record_fields():
    cfg = CodeConfig(R=0.2, R_tilde=0.1, delta0=0.05, params=UNIT)
    cb = codec.build_codebook(cfg, 2)
    rec = montecarlo.run_trial(cb, cfg, 3, SPHERE, np.random.default_rng(0))
    assert set(rec.stats) == set(montecarlo.STAT_NAMES)
    assert -1 <= rec.stats["V"] <= 1 and 0 <= rec.stats["W"] <= UNIT.Lam * (1 + 1e-12)
    assert rec.error == (rec.decoded != rec.m)


def test_trials_precondition():
    cfg = CodeConfig(R=0.2, R_tilde=0.1, delta0=0.05, params=UNIT)
    with pytest.raises(ValueError):
        montecarlo.estimate_max_error(cfg, SPHERE, 0)
    with pytest.raises(ValueError):
        montecarlo.estimate_max_error(cfg, SPHERE, 99)


def test_envelope_and_explicit_cap():
    cfg = CodeConfig(R=0.1, R_tilde=0.1, delta0=0.05, params=UNIT.with_n(401))
    with pytest.raises(ResourceError):
        montecarlo.estimate_max_error(cfg, SPHERE, 100)
    cfg = CodeConfig(R=0.5, R_tilde=0.5, delta0=0.05, params=UNIT)
    with pytest.raises(ResourceError):
        montecarlo.estimate_max_error(cfg, SPHERE, 100, mode="explicit")
    assert montecarlo.resolve_mode(cfg, "auto") == "ensemble"


def test_messages_are_exchangeable():
    cfg = CodeConfig(R=0.2, R_tilde=0.1, delta0=0.05, params=UNIT)
    row = montecarlo.estimate_max_error(cfg, SPHERE, 400, seed=5, messages=6)
    counts = row.error_samples.sum(axis=1)
    table = np.stack([counts, 400 - counts])
    assert stats.chi2_contingency(table).pvalue > 0.001


def test_ci_brackets_rate():
    cfg = CodeConfig(R=0.2, R_tilde=0.1, delta0=0.05, params=UNIT)
    row = montecarlo.estimate_max_error(cfg, SPHERE, 200, seed=1, messages=3)
    assert 0 <= row.ci_low <= row.error_rate <= row.ci_high <= 1
    assert row.error_rate == pytest.approx(row.error_samples.mean(axis=1).max())


def test_explicit_and_ensemble_agree():
    cfg = CodeConfig(R=0.2, R_tilde=0.1, delta0=0.05, params=UNIT.with_n(30))
    a = montecarlo.estimate_max_error(cfg, SPHERE, 1000, seed=2, mode="explicit", messages=4)
    b = montecarlo.estimate_max_error(cfg, SPHERE, 1000, seed=2, mode="ensemble", messages=4)
    se = math.sqrt(a.pooled_error_rate * (1 - a.pooled_error_rate) / 4000)
    assert abs(a.pooled_error_rate - b.pooled_error_rate) < 5 * math.sqrt(2) * se


def test_sweep_order_and_rejections():
    rates = [0.1, 0.2]
    res = montecarlo.rate_sweep(UNIT, rates, [20, 30], [SPHERE, make_jammer("state_aligned")], 100,
                                messages=2, seed=0)
    keys = [(r.R, r.n, r.jammer) for r in res.rows]
    assert keys == [(R, n, j) for R in rates for n in (20, 30) for j in ("sphere_uniform", "state_aligned")]
    with pytest.raises(ValueError):
        montecarlo.rate_sweep(UNIT, rates, [20], [], 100)


def test_sweep_bytes_reproducible_and_worker_independent():
    kw = dict(messages=2, seed=11)
    a = montecarlo.rate_sweep(UNIT, [0.2], [20, 40], [SPHERE], 100, workers=1, **kw).to_csv()
    b = montecarlo.rate_sweep(UNIT, [0.2], [20, 40], [SPHERE], 100, workers=1, **kw).to_csv()
    c = montecarlo.rate_sweep(UNIT, [0.2], [20, 40], [SPHERE], 100, workers=2, **kw).to_csv()
    assert a == b == c
    assert a.splitlines()[0] == f"# dirtyavc sweep schema v{montecarlo.SCHEMA_VERSION}"
    assert a.splitlines()[1] == ",".join(montecarlo.CSV_COLUMNS)


def test_rate_above_capacity_errs_more():
    C = derive_constants(UNIT).C
    p = UNIT.with_n(100)
    lo = montecarlo.estimate_max_error(
        CodeConfig(0.8 * C, montecarlo.default_binning_rate(p, 0.8 * C), 0.05, p), SPHERE, 2000,
        seed=4, messages=1)
    hi = montecarlo.estimate_max_error(
        CodeConfig(1.5 * C, montecarlo.default_binning_rate(p, 1.5 * C), 0.05, p), SPHERE, 2000,
        seed=4, messages=1)
    assert lo.ci_high < hi.ci_low


def test_encoding_always_succeeds_without_state():
    p = SystemParams(1.0, 1.0, 1.0, 0.0, 50)
    rep = montecarlo.verify_lemma1(p, [0.1], [50], 0.05, 200)
    assert rep["rows"][0]["rate"] == 1.0


def test_encoding_fails_with_one_word_and_tiny_window():
    rep = montecarlo.verify_lemma1(UNIT, [0.0], [200], 1e-6, 500, seed=1)
    assert rep["rows"][0]["rate"] < 0.01


def test_encoding_success_explicit_matches_ensemble():
    Rt = 0.15
    a = montecarlo.verify_lemma1(UNIT, [Rt], [30], 0.05, 1000, seed=2, mode="explicit")["rows"][0]
    b = montecarlo.verify_lemma1(UNIT, [Rt], [30], 0.05, 1000, seed=2, mode="ensemble")["rows"][0]
    assert abs(a["rate"] - b["rate"]) < 5 * math.sqrt(2 * 0.25 / 1000)


def test_residual_vanishes_for_state_aligned_jammer():
    rep = montecarlo.verify_lemma2(UNIT, [make_jammer("state_aligned", sign=1)], [50, 100], 100)
    for row in rep["strategies"][0]["rows"]:
        assert row["max"] <= 1e-12


def test_residual_zero_without_jammer_power():
    p = SystemParams(1.0, 0.0, 1.0, 1.0, 50)
    rep = montecarlo.verify_lemma2(p, shipped_strategies(), [50], 100)
    assert all(s["rows"][0]["max"] == 0.0 for s in rep["strategies"])


def test_residual_scale_at_n400():
    rep = montecarlo.verify_lemma2(UNIT, [SPHERE], [400], 300, seed=3)
    row = rep["strategies"][0]["rows"][0]
    assert row["mean"] <= 2 * math.sqrt(UNIT.Lam * derive_constants(UNIT).P_U) / math.sqrt(400)


def test_residual_formula():
    rng = np.random.default_rng(0)
    j, u, s = rng.standard_normal((3, 10))
    sh = s / np.linalg.norm(s)
    jp, up = j - np.dot(j, sh) * sh, u - np.dot(u, sh) * sh
    assert montecarlo.lemma2_residual(j, u, s) == pytest.approx(abs(np.dot(jp, up)) / 10)


def test_sphere_cap_tail_small_run():
    rep = montecarlo.verify_lemma3([50], [0.2, 0.4], 20_000, seed=1)
    assert rep["passed"]


def test_correlation_concentrates_at_degenerate_theta():
    p = SystemParams(1.0, 0.0, 1.0, 0.0, 400)
    theta = derive_constants(p).theta
    assert theta == pytest.approx(math.sqrt(1 / 2))
    rep = montecarlo.verify_lemma4(p, [SPHERE], [400], 0.05, 300, R_tilde=0.05)
    assert abs(rep["strategies"][0]["rows"][0]["mean_corr"] - theta) < 0.01


def test_f_vw_at_trial_statistics():
    rep = montecarlo.verify_lemma4(UNIT, [SPHERE, make_jammer("state_aligned")], [200], 0.05, 300)
    for s in rep["strategies"]:
        assert s["rows"][0]["f_vw_share"] >= 0.95


def test_double_exponential_report():
    a, b = montecarlo.verify_lemma5()
    assert a["final"] >= 1 - 1e-6 and b["final"] <= 1e-6


def test_event_union_below_tenth_at_n400():
    freq = montecarlo.event_frequencies(UNIT, SPHERE, 400, 1000, 0.1, seed=1)
    assert freq["union"] < 0.1, freq


def test_event_union_shrinks_with_n():
    small = montecarlo.event_frequencies(UNIT, SPHERE, 100, 1000, 0.1, seed=2)["union"]
    large = montecarlo.event_frequencies(UNIT, SPHERE, 400, 1000, 0.1, seed=2)["union"]
    assert large < small

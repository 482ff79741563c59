import numpy as np
import pytest

from conftest import toy_layout
from fdsim.csi import (CqiTable, FeedbackConfig, FeedbackState, age_and_report,
                       measure_pair_interference, pair_overhead_fraction,
                       quantize_pair_feedback, sinr_to_cqi, POWER_FLOOR_DBM)
from fdsim.errors import ConfigError
from fdsim.propagation import NullingConfig, build_gain_matrix


TABLE = CqiTable()


def test_cqi_below_all_thresholds_is_zero():
    assert sinr_to_cqi(-30.0, TABLE) == 0


def test_cqi_boundary_inclusive():
    for idx, thr in enumerate(TABLE.sinr_db, start=1):
        assert sinr_to_cqi(thr, TABLE) == idx
        assert sinr_to_cqi(thr - 1e-9, TABLE) == idx - 1


def test_cqi_monotone():
    s = np.linspace(-15, 30, 400)
    cqi = sinr_to_cqi(s, TABLE)
    assert np.all(np.diff(cqi) >= 0)
    assert np.all(sinr_to_cqi(s + 1.0, TABLE) >= cqi)


def test_cqi_table_validation():
    with pytest.raises(ConfigError):
        CqiTable(sinr_db=(1.0, 0.5), efficiency=(0.1, 0.2), modulation=(2, 2))
    with pytest.raises(ConfigError):
        CqiTable(sinr_db=(0.5,), efficiency=(0.1, 0.2), modulation=(2, 2))


def _toy_cell():
    # Mirror-symmetric cell: two UL UEs equidistant from the two DL UEs.
    lay = toy_layout(
        [(0.0, 0.0)],
        [(-20.0, 0.0, 0, "dl"), (20.0, 0.0, 0, "dl"),
         (-20.0, 10.0, 0, "ul"), (20.0, 10.0, 0, "ul")])
    g = build_gain_matrix(lay, NullingConfig(0, 0), lay.wrap, 0)
    return lay, g


def test_measure_pair_matrix():
    lay, g = _toy_cell()
    powers = np.full(g.n_ues, -10.0)
    m = measure_pair_interference(0, g, powers)
    assert m.shape == (2, 2)
    ul = g.cell_ul_ues[0]
    dl = g.cell_dl_ues[0]
    assert m[0, 0] == pytest.approx(-10.0 + g.ue_to_ue[ul[0], dl[0]])
    # mirror symmetry of the toy
    assert m[0, 0] == pytest.approx(m[1, 1], abs=1e-9)
    assert m[0, 1] == pytest.approx(m[1, 0], abs=1e-9)


def test_measure_pair_power_floor():
    lay, g = _toy_cell()
    powers = np.full(g.n_ues, -np.inf)
    m = measure_pair_interference(0, g, powers)
    assert np.all(m == POWER_FLOOR_DBM)


def test_measure_pair_boost_additive():
    lay, g = _toy_cell()
    p0 = np.full(g.n_ues, -10.0)
    m0 = measure_pair_interference(0, g, p0)
    m10 = measure_pair_interference(0, g, p0 + 10.0)
    assert np.allclose(m10 - m0, 10.0)


def test_quantize_no_interference_is_clean():
    cfg = FeedbackConfig()
    meas = np.full((2, 2), POWER_FLOOR_DBM)
    sig = np.array([-60.0, -62.0])
    base_i = np.array([-100.0, -100.0])
    pf = quantize_pair_feedback(meas, sig, base_i, cfg, TABLE)
    assert np.all(pf.deg_steps == 0)
    assert np.all(pf.schedulable)


def test_quantize_bucket_range_four_bit():
    cfg = FeedbackConfig(pair_bits=4)
    meas = np.array([[-40.0]])          # crushing pair interference
    sig = np.array([-60.0])
    base_i = np.array([-105.0])
    pf = quantize_pair_feedback(meas, sig, base_i, cfg, TABLE)
    assert pf.deg_steps.max() <= 15
    assert pf.deg_steps[0, 0] == 15
    assert not pf.schedulable[0, 0]


def test_quantize_idempotent():
    cfg = FeedbackConfig(pair_bits=4)
    rng = np.random.default_rng(2)
    meas = rng.uniform(-130, -60, size=(10, 10))
    sig = rng.uniform(-70, -50, size=10)
    base_i = rng.uniform(-110, -90, size=10)
    pf1 = quantize_pair_feedback(meas, sig, base_i, cfg, TABLE)
    pf2 = quantize_pair_feedback(meas, sig, base_i, cfg, TABLE)
    assert np.array_equal(pf1.deg_steps, pf2.deg_steps)
    # re-quantizing the bucketed values is the identity
    assert np.array_equal(np.clip(pf1.deg_steps, 0, 15), pf1.deg_steps)


def test_one_bit_matches_multibit_one_at_same_threshold():
    cfg1 = FeedbackConfig(pair_mode="onebit", onebit_threshold_steps=0)
    cfgm = FeedbackConfig(pair_mode="multibit", pair_bits=1, onebit_threshold_steps=0)
    rng = np.random.default_rng(4)
    meas = rng.uniform(-120, -60, size=(6, 6))
    sig = rng.uniform(-70, -50, size=6)
    base_i = rng.uniform(-105, -95, size=6)
    one = quantize_pair_feedback(meas, sig, base_i, cfg1, TABLE)
    multi = quantize_pair_feedback(meas, sig, base_i, cfgm, TABLE)
    # schedulable (degradation <= 0 steps) iff the 1-bit bucket is 0
    assert np.array_equal(one.schedulable, multi.deg_steps == 0)


def _frames(c, n, s, value):
    full = np.full((c, n, s), float(value))
    return full, full + 1.0, full + 2.0


def test_report_delay_zero_is_identity():
    st = FeedbackState(FeedbackConfig(delay_tti=0, ul_min_window_tti=1), 4, 4)
    st.record(0, *_frames(1, 2, 4, 7.0))
    dl_full, dl_conv, ul, _ = st.report(0)
    assert float(dl_full[0, 0, 0]) == 7.0
    assert float(ul[0, 0, 0]) == 9.0


def test_report_six_tti_lag():
    st = FeedbackState(FeedbackConfig(delay_tti=6, ul_min_window_tti=1), 2, 2)
    reports = {}
    for t in range(20):
        value = 0.0 if t < 10 else 20.0     # step change at t=10
        st.record(t, *_frames(1, 1, 2, value))
        dl_full = st.report(t)[0]
        if dl_full is not None:
            reports[t] = float(dl_full[0, 0, 0])
    # the report at t reflects t-6 exactly: the step appears at t=16
    assert reports[15] == 0.0
    assert reports[16] == 20.0
    assert reports[19] == 20.0


def test_report_before_first_is_none():
    st = FeedbackState(FeedbackConfig(delay_tti=6), 2, 2)
    st.record(0, *_frames(1, 1, 2, 3.0))
    out = age_and_report(st, 3)
    assert out[0] is None


def test_ul_min_window_filters_dips():
    st = FeedbackState(FeedbackConfig(delay_tti=0, ul_min_window_tti=4), 2, 2)
    reported = {}
    for t, val in enumerate([10.0, 10.0, -5.0, 10.0, 10.0, 10.0, 10.0]):
        st.record(t, *_frames(1, 1, 2, val))
        reported[t] = float(st.report(t)[2][0, 0, 0])
    # ul frames are val + 2; the dip at t=2 (-3.0) holds while inside the
    # 4-TTI window and clears at t=6
    assert reported[2] == -3.0
    assert reported[5] == -3.0
    assert reported[6] == 12.0


def test_pair_update_period_holds():
    cfg = FeedbackConfig(delay_tti=2, pair_update_period_tti=50)
    st = FeedbackState(cfg, 2, 2)
    st.record_pair(0, ["table-a"])
    st.record_pair(50, ["table-b"])
    for t in range(70):
        st.record(t, *_frames(1, 1, 2, 0.0))
        _, _, _, pair = st.report(t)
        if t < 2:
            assert pair == []
        elif t < 52:
            assert pair == ["table-a"]
        else:
            assert pair == ["table-b"]


def test_overhead_below_two_percent():
    # 10x10 pairs x 4 bits every 50 TTIs against 10 UEs x 8 subbands x 10 bits
    # per TTI: 8 / 800 = 1%.
    cfg = FeedbackConfig(pair_bits=4, pair_update_period_tti=50)
    frac = pair_overhead_fraction(cfg, n_ul=10, n_dl=10, n_subbands=8)
    assert frac == pytest.approx(0.01)
    assert frac < 0.02


def test_overhead_one_bit_even_smaller():
    cfg = FeedbackConfig(pair_mode="onebit", pair_update_period_tti=50)
    assert pair_overhead_fraction(cfg) == pytest.approx(0.0025)

import numpy as np
import pytest

from conftest import toy_layout
from fdsim.errors import ConfigError, InvariantError
from fdsim.propagation import NullingConfig, build_gain_matrix
from fdsim.radio import (DuplexMode, PowerConfig, compute_sinr, make_grid, olpc_power,
                         olpc_power_from_pl, select_boost)
from fdsim.scheduling import ScheduleDecision


def test_olpc_formula_hand_value():
    # min(p_max, p0 + alpha*PL) with p0=-85, alpha=0.8, PL=100 -> -5 dBm.
    cfg = PowerConfig(p0_dbm=-85.0, alpha=0.8, boost_db=0.0, p_max_dbm=23.0)
    assert olpc_power_from_pl(100.0, cfg) == pytest.approx(-5.0)


def test_olpc_clips_at_p_max():
    cfg = PowerConfig(p0_dbm=-85.0, alpha=0.8)
    assert olpc_power_from_pl(1000.0, cfg) == pytest.approx(cfg.p_max_dbm)


def test_olpc_alpha_zero_ignores_pathloss():
    cfg = PowerConfig(p0_dbm=-60.0, alpha=0.0)
    assert olpc_power_from_pl(60.0, cfg) == olpc_power_from_pl(140.0, cfg)


def test_olpc_monotone_in_pl_and_boost():
    cfg = PowerConfig(p0_dbm=-85.0, alpha=0.8)
    pls = np.linspace(40, 160, 60)
    p = olpc_power_from_pl(pls, cfg)
    assert np.all(np.diff(p) >= 0)
    boosted = olpc_power_from_pl(pls, PowerConfig(p0_dbm=-85.0, alpha=0.8, boost_db=10.0))
    assert np.all(boosted >= p)


def test_olpc_multi_rb_cap():
    cfg = PowerConfig(p0_dbm=-85.0, alpha=0.8)
    # 100 RBs: per-RB power may not exceed 23 - 20 = 3 dBm.
    assert olpc_power_from_pl(200.0, cfg, n_rbs=100) == pytest.approx(3.0)


def test_olpc_by_ue_id():
    lay = toy_layout([(0.0, 0.0)], [(20.0, 0.0, 0, "ul")])
    g = build_gain_matrix(lay, NullingConfig(0, 0), lay.wrap, 0)
    cfg = PowerConfig(p0_dbm=-85.0, alpha=0.8)
    pl = -g.serving_gain_db()[0]
    assert olpc_power(0, g, cfg) == pytest.approx(min(23.0, -85.0 + 0.8 * pl))


def test_alpha_out_of_range():
    with pytest.raises(ConfigError):
        PowerConfig(alpha=1.5)


def test_grid_layouts():
    fd = make_grid(DuplexMode.FD)
    fdd = make_grid(DuplexMode.FDD)
    flex = make_grid(DuplexMode.FLEXIBLE)
    assert fd.dl_subband_rbs == (12, 12, 12, 12, 12, 12, 12, 16)
    assert fdd.dl_subband_rbs == (12, 12, 12, 14)
    assert flex.dl_subband_rbs == fd.dl_subband_rbs
    # shared grids carry exactly twice the subbands of each FDD direction
    assert fd.n_dl_subbands == 2 * fdd.n_dl_subbands
    assert fd.shared and flex.shared and not fdd.shared
    assert sum(fd.dl_subband_rbs) == 100
    assert sum(fdd.ul_subband_rbs) == 50
    assert fd.bs_power_dbm_rb(24.0) == pytest.approx(4.0)
    assert fdd.bs_power_dbm_rb(24.0) == pytest.approx(24.0 - 10 * np.log10(50))


def _toy_two_cells(null_db=0.0, sic_db=110.0):
    lay = toy_layout(
        [(-60.0, 0.0), (60.0, 0.0)],
        [(-70.0, 0.0, 0, "dl"), (-50.0, 0.0, 0, "ul"),
         (70.0, 0.0, 1, "dl"), (50.0, 0.0, 1, "ul")])
    side = null_db / 2
    g = build_gain_matrix(lay, NullingConfig(side, side), lay.wrap, 0)
    return lay, g


def _decision(cell, n_sb, dl=None, ul=None, dl_p=4.0, ul_p=0.0, dl_mcs=10, ul_mcs=10):
    dec = ScheduleDecision(cell,
                           np.full(n_sb, -1, dtype=np.int64),
                           np.full(n_sb, -1, dtype=np.int64),
                           np.full(n_sb, dl_mcs, dtype=np.int64),
                           np.full(n_sb, ul_mcs, dtype=np.int64))
    dec.dl_power_dbm_rb = dl_p
    dec.ul_power_dbm_rb = np.full(n_sb, ul_p)
    if dl is not None:
        dec.dl_ue[:] = dl
    if ul is not None:
        dec.ul_ue[:] = ul
    return dec


def test_sinr_single_cell_no_interference():
    lay = toy_layout([(0.0, 0.0)], [(30.0, 0.0, 0, "dl"), (20.0, 0.0, 0, "ul")])
    g = build_gain_matrix(lay, NullingConfig(0, 0), lay.wrap, 0)
    decs = [_decision(0, 8, dl=0)]
    out = compute_sinr(0, 3, decs, g, DuplexMode.FD)
    ue, sinr = out["dl"]
    expected = 4.0 + g.bs_to_ue[0, 0] - g.noise_ue_dbm_rb
    assert ue == 0
    assert sinr == pytest.approx(expected, abs=1e-9)
    assert out["ul"] is None


def test_sinr_self_echo_dominates_without_sic():
    lay = toy_layout([(0.0, 0.0)], [(30.0, 0.0, 0, "dl"), (20.0, 0.0, 0, "ul")])
    g = build_gain_matrix(lay, NullingConfig(0, 0), lay.wrap, 0)
    decs = [_decision(0, 8, dl=0, ul=1, ul_p=-20.0)]
    out = compute_sinr(0, 0, decs, g, DuplexMode.FD, sic_db=0.0)
    _, ul_sinr = out["ul"]
    # UE at -20 dBm through ~60 dB loss against a 4 dBm un-cancelled echo.
    assert ul_sinr < -50.0


def test_sinr_fdd_ignores_cross_direction_gains():
    lay, g = _toy_two_cells()
    decs = [_decision(0, 4, dl=0, ul=1, ul_p=-10.0), _decision(1, 4, dl=2, ul=3, ul_p=-10.0)]
    base = compute_sinr(0, 2, decs, g, DuplexMode.FDD)
    g.bs_to_bs[:] = -1.0   # absurd strong coupling; FDD must not care
    g.ue_to_ue[:] = -1.0
    after = compute_sinr(0, 2, decs, g, DuplexMode.FDD)
    assert base == after


def test_sinr_fd_equals_ul_only_network_when_isolated():
    # With the BS-BS path fully suppressed and ideal SIC, FD UL matches a
    # network that carriers UL only (hand-built denominator).
    lay, g = _toy_two_cells()
    g.bs_to_bs[:] = -400.0
    decs = [_decision(0, 8, dl=0, ul=1, ul_p=-10.0), _decision(1, 8, dl=2, ul=3, ul_p=-10.0)]
    out = compute_sinr(0, 0, decs, g, DuplexMode.FD, sic_db=10_000.0)
    _, ul_sinr = out["ul"]
    sig = -10.0 + g.bs_to_ue[0, 1]
    interf = 10 ** ((-10.0 + g.bs_to_ue[0, 3]) / 10)
    expected = sig - 10 * np.log10(interf + 10 ** (g.noise_bs_dbm_rb / 10))
    assert ul_sinr == pytest.approx(expected, abs=1e-9)


def test_sinr_monotone_in_interferer_power():
    lay, g = _toy_two_cells()
    prev = None
    for p in (-20.0, -10.0, 0.0, 10.0):
        decs = [_decision(0, 8, dl=0, ul=1, ul_p=-10.0),
                _decision(1, 8, dl=2, ul=3, ul_p=p)]
        out = compute_sinr(0, 0, decs, g, DuplexMode.FD)
        dl = out["dl"][1]
        ul = out["ul"][1]
        if prev is not None:
            assert dl <= prev[0] + 1e-12
            assert ul <= prev[1] + 1e-12
        prev = (dl, ul)


def test_sinr_rejects_foreign_ue():
    lay, g = _toy_two_cells()
    decs = [_decision(0, 8, dl=2), _decision(1, 8)]   # UE 2 belongs to cell 1
    with pytest.raises(InvariantError):
        compute_sinr(0, 0, decs, g, DuplexMode.FD)


def test_flexible_exclusive_direction_enforced():
    lay, g = _toy_two_cells()
    decs = [_decision(0, 8, dl=0, ul=1, ul_p=0.0), _decision(1, 8)]
    with pytest.raises(InvariantError):
        compute_sinr(0, 0, decs, g, DuplexMode.FLEXIBLE)


def test_boost_never_raises_dl_sinr():
    # Fixed schedule, uplink power swept upward: every DL SINR non-increasing.
    lay, g = _toy_two_cells()
    prev = None
    for boost in (0.0, 10.0, 20.0, 30.0):
        decs = [_decision(0, 8, dl=0, ul=1, ul_p=-30.0 + boost),
                _decision(1, 8, dl=2, ul=3, ul_p=-30.0 + boost)]
        dl = compute_sinr(0, 0, decs, g, DuplexMode.FD)["dl"][1]
        if prev is not None:
            assert dl <= prev + 1e-12
        prev = dl


def test_select_boost_zero_when_target_met():
    # Well-separated cells with strong nulling: UL target met without boost.
    lay = toy_layout(
        [(-100.0, 0.0), (100.0, 0.0)],
        [(-110.0, 0.0, 0, "dl"), (-90.0, 0.0, 0, "ul"),
         (110.0, 0.0, 1, "dl"), (90.0, 0.0, 1, "ul")])
    g = build_gain_matrix(lay, NullingConfig(35.0, 35.0), lay.wrap, 0)
    cfg = PowerConfig(p0_dbm=-80.0, alpha=0.8)
    sel = select_boost(g, cfg, make_grid(DuplexMode.FD), sic_db=110.0,
                       target_ul_sinr_db=5.0)
    assert sel.boost_db == 0.0
    assert sel.target_met
    assert sel.warning is None


def test_select_boost_monotone_in_target(indoor_gains):
    cfg = PowerConfig(p0_dbm=-80.0, alpha=0.8)
    grid = make_grid(DuplexMode.FD)
    prev = -1.0
    for target in (-20.0, -10.0, 0.0, 5.0, 15.0):
        sel = select_boost(indoor_gains, cfg, grid, 110.0, target_ul_sinr_db=target)
        assert sel.boost_db >= prev
        prev = sel.boost_db


def test_select_boost_unreachable_target_warns(indoor_gains):
    cfg = PowerConfig(p0_dbm=-80.0, alpha=0.8)
    sel = select_boost(indoor_gains, cfg, make_grid(DuplexMode.FD), 110.0,
                       target_ul_sinr_db=60.0)
    assert not sel.target_met
    assert sel.warning is not None
    assert sel.boost_db > 0.0


def test_select_boost_positive_under_nulling(indoor_gains):
    # Dense indoor with 40 dB total nulling still needs uplink boosting.
    cfg = PowerConfig(p0_dbm=-80.0, alpha=0.8)
    sel = select_boost(indoor_gains, cfg, make_grid(DuplexMode.FD), 110.0)
    assert sel.boost_db > 0.0

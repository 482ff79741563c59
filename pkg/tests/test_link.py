import numpy as np
import pytest

from fdsim.csi import CqiTable
from fdsim.errors import ConfigError
from fdsim.link import HarqProcess, LinkConfig, McsTable, bler, harq_step, select_mcs, tb_size


TABLE = McsTable.from_cqi(CqiTable(), slope=2.0)
LCFG = LinkConfig()


def test_mcs_table_aligned_to_cqi_thresholds():
    # Calibration: bler(mcs, cqi_threshold) == 0.10 exactly.
    cqi = CqiTable()
    for m in range(TABLE.n_entries):
        assert float(bler(m, cqi.sinr_db[m], TABLE)) == pytest.approx(0.10, abs=1e-12)


def test_select_mcs_matches_linear_scan():
    rng = np.random.default_rng(9)
    sinrs = rng.uniform(-15.0, 30.0, size=300)
    got = select_mcs(sinrs, TABLE)
    for s, m in zip(sinrs, got):
        best = 0
        for idx in range(TABLE.n_entries):
            if float(bler(idx, s, TABLE)) <= 0.10:
                best = idx
        assert m == best


def test_select_mcs_floor_and_boundary():
    assert select_mcs(-20.0, TABLE) == 0
    assert float(bler(0, -20.0, TABLE)) > 0.10      # the floor may violate the target
    cqi = CqiTable()
    for m in (0, 7, 14):
        assert select_mcs(cqi.sinr_db[m], TABLE) == m


def test_select_mcs_monotone():
    s = np.linspace(-10, 28, 500)
    m = select_mcs(s, TABLE)
    assert np.all(np.diff(m) >= 0)


def test_bler_midpoint_and_limits():
    for m in (0, 5, 14):
        assert float(bler(m, TABLE.sinr_50pct_db[m], TABLE)) == pytest.approx(0.5)
    assert float(bler(5, 1e6, TABLE)) == pytest.approx(0.0, abs=1e-12)
    assert float(bler(5, -1e3, TABLE)) == pytest.approx(1.0, abs=1e-12)
    s = np.linspace(-10, 30, 100)
    assert np.all(np.diff(bler(7, s, TABLE)) <= 0)


def test_bler_matches_monte_carlo():
    rng = np.random.default_rng(123)
    mcs, sinr = 7, 9.0
    p = float(bler(mcs, sinr, TABLE))
    n = 10_000
    errors = int((rng.random(n) < p).sum())
    sigma = np.sqrt(p * (1 - p) * n)
    assert abs(errors - p * n) < 2 * sigma + 1


def test_tb_size_linearity_and_hand_value():
    bits_1 = tb_size(0, 1, TABLE, LCFG)
    bits_2 = tb_size(0, 2, TABLE, LCFG)
    # 0.1523 * 180e3 * 1e-3 * 0.75 = 20.56 bits per RB -> floor 20
    assert bits_1 == 20
    assert bits_2 == 41  # flooring applies after the doubling
    assert tb_size(14, 12, TABLE, LCFG) == int(np.floor(5.5547 * 180e3 * 1e-3 * 12 * 0.75))


def test_tb_size_full_overhead_is_zero():
    assert tb_size(10, 50, TABLE, LinkConfig(overhead_fraction=1.0)) == 0


def test_link_config_validation():
    with pytest.raises(ConfigError):
        LinkConfig(overhead_fraction=1.5)
    with pytest.raises(ConfigError):
        LinkConfig(harq_max_attempts=0)


def _procs(n, mcs=7, bits=1000):
    return [HarqProcess(ue=i, cell=0, direction="dl", subband=0, tb_bits=bits, mcs=mcs)
            for i in range(n)]


def test_harq_all_ack_when_bler_zero():
    procs = _procs(50)
    sinr = {id(p): 1e6 for p in procs}
    acked, retx, dropped = harq_step(procs, sinr, TABLE, LCFG, np.random.default_rng(0))
    assert len(acked) == 50 and not retx and not dropped


def test_harq_drops_after_max_attempts():
    procs = _procs(10)
    rng = np.random.default_rng(0)
    for attempt in range(LCFG.harq_max_attempts):
        sinr = {id(p): -1e3 for p in procs}
        acked, retx, dropped = harq_step(procs, sinr, TABLE, LCFG, rng)
        assert not acked
        if attempt < LCFG.harq_max_attempts - 1:
            assert len(retx) == 10 and not dropped
            assert all(p.attempts == attempt + 2 for p in retx)
            procs = retx
        else:
            assert len(dropped) == 10 and not retx


def test_harq_retransmission_gain_applied():
    # A process on its 3rd attempt decodes against sinr + 2 * gain.
    proc = HarqProcess(0, 0, "ul", 0, 1000, mcs=7, attempts=3)
    sinr_at_10pct = CqiTable().sinr_db[7] - 2 * LCFG.harq_gain_db
    # deterministic check through the error probability bound
    p_eff = float(bler(7, sinr_at_10pct + 2 * LCFG.harq_gain_db, TABLE))
    assert p_eff == pytest.approx(0.10, abs=1e-12)
    acked, retx, dropped = harq_step([proc], {id(proc): sinr_at_10pct}, TABLE, LCFG,
                                     np.random.default_rng(1))
    assert len(acked) + len(retx) + len(dropped) == 1


def test_harq_residual_loss_order_of_magnitude():
    # At a constant 10% per-attempt BLER the drop rate is 0.1^4 = 1e-4.
    rng = np.random.default_rng(42)
    cqi = CqiTable()
    sinr_10pct = cqi.sinr_db[7]
    n = 20_000
    dropped_total = 0
    procs = _procs(n)
    for _ in range(LCFG.harq_max_attempts):
        sinr = {id(p): sinr_10pct - LCFG.harq_gain_db * (p.attempts - 1) for p in procs}
        acked, retx, dropped = harq_step(procs, sinr, TABLE, LCFG, rng)
        dropped_total += len(dropped)
        procs = retx
        if not procs:
            break
    # Poisson(2) regime: a count above 10 would be a broken retry chain.
    assert dropped_total <= 10


def test_harq_empty_input():
    assert harq_step([], {}, TABLE, LCFG, np.random.default_rng(0)) == ([], [], [])

import numpy as np
import pytest

from fdsim.errors import ConfigError
from fdsim.traffic import (BurstRecord, QueueState, TrafficConfig, full_buffer_backlog,
                           generate_arrivals, perceived_throughput, percentile)


def test_lambda_derivation():
    # 24 Mbps over 840 DL UEs with 0.8 Mbit files: 24e6/(0.8e6*840) files/s.
    cfg = TrafficConfig(model="ftp3", dl_offered_load_bps=24e6, ul_offered_load_bps=12e6)
    assert cfg.lam_per_ue("dl", 840) == pytest.approx(24e6 / (0.8e6 * 840))
    assert cfg.lam_per_ue("dl", 840) == pytest.approx(0.0357142857)
    assert cfg.lam_per_ue("ul", 840) == pytest.approx(cfg.lam_per_ue("dl", 840) / 2)
    assert cfg.lam_per_ue("dl", 0) == 0.0


def test_zero_rate_no_arrivals():
    cfg = TrafficConfig(model="ftp3")
    out = generate_arrivals(cfg, np.arange(10), 0.0, 1000, np.random.default_rng(0))
    assert out == []


def test_arrival_rate_matches_poisson():
    cfg = TrafficConfig(model="ftp3")
    lam, horizon_tti, n_ues = 5.0, 20_000, 100    # 20 s
    out = generate_arrivals(cfg, np.arange(n_ues), lam, horizon_tti, np.random.default_rng(1))
    expected = lam * (horizon_tti * 1e-3) * n_ues
    sigma = np.sqrt(expected)
    assert abs(len(out) - expected) < 3 * sigma
    assert all(0 <= b.arrival_tti < horizon_tti for b in out)


def test_interarrival_times_exponential():
    cfg = TrafficConfig(model="ftp3")
    lam = 20.0
    out = generate_arrivals(cfg, np.array([0]), lam, 400_000, np.random.default_rng(2))
    times = np.array(sorted(b.arrival_tti for b in out)) * 1e-3
    gaps = np.diff(times)
    assert np.mean(gaps) == pytest.approx(1 / lam, rel=0.08)


def test_bad_traffic_config():
    with pytest.raises(ConfigError):
        TrafficConfig(model="voip")
    with pytest.raises(ConfigError):
        TrafficConfig(file_size_bits=0)


def test_perceived_throughput_hand_value():
    # 0.8 Mbit served over 100 TTIs of active time -> 8 Mbps.
    b = BurstRecord(ue=0, arrival_tti=50, size_bits=800_000)
    b.sent = b.acked = 800_000
    b.completion_tti = 149
    stats = perceived_throughput([b])
    assert stats.per_burst_bps[0] == pytest.approx(8e6)


def test_perceived_identical_bursts_identical_values():
    bursts = []
    for k in range(2):
        b = BurstRecord(ue=k, arrival_tti=10, size_bits=400_000)
        b.sent = b.acked = 400_000
        b.completion_tti = 40
        bursts.append(b)
    stats = perceived_throughput(bursts)
    assert stats.per_burst_bps[0] == stats.per_burst_bps[1]


def test_perceived_excludes_unfinished_and_lossy():
    done = BurstRecord(0, 0, 1000)
    done.sent = done.acked = 1000
    done.completion_tti = 5
    unfinished = BurstRecord(1, 0, 1000)
    lossy = BurstRecord(2, 0, 1000)
    lossy.sent = 1000
    lossy.acked, lossy.lost = 900, 100
    lossy.completion_tti = 9
    stats = perceived_throughput([done, unfinished, lossy])
    assert stats.n_completed == 1
    assert stats.n_unfinished == 1
    assert stats.n_lossy == 1
    assert len(stats.per_burst_bps) == 1


def test_cdf_properties():
    rng = np.random.default_rng(3)
    bursts = []
    for k in range(50):
        b = BurstRecord(k % 7, 0, 100_000)
        b.sent = b.acked = 100_000
        b.completion_tti = int(rng.integers(1, 400))
        bursts.append(b)
    stats = perceived_throughput(bursts)
    vals, probs = stats.cdf()
    assert np.all(np.diff(vals) >= 0)
    assert np.all(np.diff(probs) > 0)
    assert probs[-1] == pytest.approx(1.0)


def test_percentile_matches_sorted_array_oracle():
    rng = np.random.default_rng(4)
    for _ in range(25):
        xs = rng.uniform(0, 100, size=rng.integers(1, 60))
        for q in (0, 5, 50, 95, 100):
            assert percentile(xs, q) == pytest.approx(float(np.percentile(xs, q)))
    assert np.isnan(percentile([], 50))


def test_full_buffer_backlog_always_has_data():
    fb = full_buffer_backlog(np.arange(5))
    assert fb.has_data(3)
    assert fb.has_data_all().all()


def _queue_with_one_burst(size=1000):
    q = QueueState(2, [BurstRecord(0, 5, size)])
    q.admit(5)
    return q


def test_queue_reserve_and_ack_cycle():
    q = _queue_with_one_burst(1000)
    assert q.has_data_all()[0] and not q.has_data_all()[1]
    seg1 = q.reserve(0, 600)
    assert seg1[1] == 600
    seg2 = q.reserve(0, 600)
    assert seg2[1] == 400           # bounded by the remaining bits
    assert q.reserve(0, 100) is None
    assert not q.has_data_all()[0]  # fully in flight
    q.resolve([seg1], tti=7, acked=True)
    assert q.conservation_holds()
    q.resolve([seg2], tti=9, acked=True)
    b = q.records[0]
    assert b.completion_tti == 9 and b.complete and not b.lossy
    assert q.conservation_holds()
    assert q.acked_bits == 1000


def test_queue_lossy_burst_completes_but_is_flagged():
    q = _queue_with_one_burst(1000)
    seg = q.reserve(0, 1000)
    q.resolve([seg], tti=20, acked=False)
    b = q.records[0]
    assert b.complete and b.lossy and b.lost == 1000
    assert q.conservation_holds()
    # the queue moved on: the UE is free for its next burst
    assert not q.has_data_all()[0]


def test_queue_fifo_order():
    q = QueueState(1, [BurstRecord(0, 0, 100), BurstRecord(0, 0, 100)])
    q.admit(0)
    seg = q.reserve(0, 80)
    assert seg[0] is q.records[0]
    q.resolve([q.reserve(0, 20)], 1, True)
    q.resolve([seg], 1, True)
    # only now does the second burst become the head
    seg2 = q.reserve(0, 50)
    assert seg2[0] is q.records[1]
    assert q.conservation_holds()


def test_queue_conservation_under_random_traffic():
    rng = np.random.default_rng(5)
    arrivals = [BurstRecord(int(rng.integers(0, 4)), int(rng.integers(0, 50)), 500)
                for _ in range(40)]
    q = QueueState(4, arrivals)
    in_flight = []
    for t in range(120):
        q.admit(t)
        for ue in range(4):
            if rng.random() < 0.5:
                seg = q.reserve(ue, int(rng.integers(50, 400)))
                if seg:
                    in_flight.append((t, seg))
        still = []
        for t0, seg in in_flight:
            if t - t0 >= 2:
                q.resolve([seg], t, acked=rng.random() < 0.9)
            else:
                still.append((t0, seg))
        in_flight = still
        assert q.conservation_holds()

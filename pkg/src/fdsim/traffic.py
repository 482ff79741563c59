"""Traffic generation and burst bookkeeping: full buffer and FTP-style
fixed-size file arrivals with per-UE Poisson processes.

Perceived throughput is the burst size divided by the time from the burst's
arrival to the reception of its last bit (inclusive TTI count, so a file
arriving and completing within one TTI counts one TTI of active time).
Unfinished bursts at the end of a run are excluded from the distribution and
reported as a count, as are bursts that lost bits to HARQ exhaustion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError


@dataclass
class TrafficConfig:
    model: str = "full_buffer"            # "full_buffer" | "ftp3"
    file_size_bits: int = 800_000         # 0.1 Mbyte
    dl_offered_load_bps: float = 24e6
    ul_offered_load_bps: float = 12e6     # 2:1 DL:UL by default

    def __post_init__(self):
        if self.model not in ("full_buffer", "ftp3"):
            raise ConfigError(f"traffic.model invalid: {self.model!r}")
        if self.file_size_bits <= 0:
            raise ConfigError("traffic.file_size_bits must be positive")

    def lam_per_ue(self, direction: str, n_ues_direction: int) -> float:
        """Per-UE Poisson file arrival rate (files/s): network offered load
        split evenly over the UEs of that direction."""
        load = self.dl_offered_load_bps if direction == "dl" else self.ul_offered_load_bps
        if n_ues_direction == 0:
            return 0.0
        return load / (self.file_size_bits * n_ues_direction)


@dataclass
class BurstRecord:
    ue: int
    arrival_tti: int
    size_bits: int
    completion_tti: Optional[int] = None
    # live accounting (bits)
    sent: int = 0
    acked: int = 0
    lost: int = 0

    @property
    def remaining_unsent(self) -> int:
        return self.size_bits - self.sent

    @property
    def complete(self) -> bool:
        return self.acked + self.lost == self.size_bits

    @property
    def lossy(self) -> bool:
        return self.lost > 0

    def perceived_bps(self, tti_s: float = 1e-3) -> float:
        ttis = self.completion_tti - self.arrival_tti + 1
        return self.size_bits / (ttis * tti_s)


def generate_arrivals(cfg: TrafficConfig, ue_ids: np.ndarray, lam_per_ue: float,
                      horizon_tti: int, rng: np.random.Generator,
                      tti_s: float = 1e-3) -> list:
    """Independent Poisson file arrivals per UE over the horizon (arrival order
    within a UE is time-sorted; the returned list is UE-major)."""
    out: list = []
    horizon_s = horizon_tti * tti_s
    for ue in ue_ids:
        t = 0.0
        while True:
            if lam_per_ue <= 0:
                break
            t += rng.exponential(1.0 / lam_per_ue)
            if t >= horizon_s:
                break
            out.append(BurstRecord(int(ue), int(t / tti_s), cfg.file_size_bits))
    return out


class FullBufferBacklog:
    """Infinite per-UE backlog: the scheduler never starves for data."""

    def __init__(self, n_ues: int):
        self.n_ues = n_ues
        self.served_bits = np.zeros(n_ues, dtype=np.int64)

    def has_data(self, ue: int) -> bool:
        return True

    def has_data_all(self) -> np.ndarray:
        return np.ones(self.n_ues, dtype=bool)


def full_buffer_backlog(ue_ids) -> FullBufferBacklog:
    return FullBufferBacklog(len(ue_ids))


class QueueState:
    """FIFO burst queues for the FTP traffic model.

    A transport block reserves bits from the head burst only; reserved bits
    sit in flight until the HARQ outcome acks them (progress) or drops them
    (counted lost; the burst then finishes "lossy" and is excluded from the
    perceived-throughput distribution). Conservation holds exactly in integer
    bits: arrived == acked + lost + in_flight + queued.
    """

    def __init__(self, n_ues: int, arrivals: list):
        self.n_ues = n_ues
        self.pending: list[list[BurstRecord]] = [[] for _ in range(n_ues)]
        self.by_tti: dict[int, list[BurstRecord]] = {}
        self.records: list[BurstRecord] = sorted(arrivals, key=lambda b: (b.arrival_tti, b.ue))
        for b in self.records:
            self.by_tti.setdefault(b.arrival_tti, []).append(b)
        self.admitted: list[BurstRecord] = []
        self.arrived_bits = 0
        self.acked_bits = 0
        self.lost_bits = 0

    def admit(self, tti: int) -> None:
        for b in self.by_tti.pop(tti, ()):
            self.pending[b.ue].append(b)
            self.admitted.append(b)
            self.arrived_bits += b.size_bits

    def has_data_all(self) -> np.ndarray:
        mask = np.zeros(self.n_ues, dtype=bool)
        for ue in range(self.n_ues):
            q = self.pending[ue]
            mask[ue] = bool(q) and q[0].remaining_unsent > 0
        return mask

    def reserve(self, ue: int, max_bits: int):
        """Take up to ``max_bits`` from the head burst; returns (burst, bits)."""
        q = self.pending[ue]
        if not q or q[0].remaining_unsent <= 0:
            return None
        b = q[0]
        bits = min(max_bits, b.remaining_unsent)
        b.sent += bits
        return (b, bits)

    def resolve(self, segments, tti: int, acked: bool) -> int:
        """Apply a HARQ outcome to reserved segments; returns acked bits."""
        got = 0
        for b, bits in segments:
            if acked:
                b.acked += bits
                self.acked_bits += bits
                got += bits
            else:
                b.lost += bits
                self.lost_bits += bits
            if b.complete and b.completion_tti is None:
                b.completion_tti = tti
                q = self.pending[b.ue]
                if q and q[0] is b:  # bursts are sent and thus complete head-first
                    q.pop(0)
        return got

    def queued_unsent_bits(self) -> int:
        return sum(b.size_bits - b.sent for b in self.admitted)

    def in_flight_bits(self) -> int:
        return sum(b.sent - b.acked - b.lost for b in self.admitted)

    def conservation_holds(self) -> bool:
        """arrived == acked + lost + in-flight + queued, in exact integer bits."""
        return self.arrived_bits == (self.acked_bits + self.lost_bits
                                     + self.in_flight_bits() + self.queued_unsent_bits())


def percentile(values, q: float) -> float:
    """Percentile with sorted-array linear interpolation (q in [0, 100])."""
    v = np.sort(np.asarray(values, dtype=float))
    if len(v) == 0:
        return float("nan")
    if len(v) == 1:
        return float(v[0])
    h = (len(v) - 1) * q / 100.0
    lo = int(np.floor(h))
    hi = min(lo + 1, len(v) - 1)
    return float(v[lo] + (h - lo) * (v[hi] - v[lo]))


@dataclass
class PerceivedStats:
    per_burst_bps: np.ndarray
    per_ue_mean_bps: dict
    n_completed: int
    n_unfinished: int
    n_lossy: int

    def cdf(self):
        v = np.sort(self.per_burst_bps)
        return v, (np.arange(1, len(v) + 1) / len(v)) if len(v) else v

    def percentiles(self, qs=(5, 50, 95)) -> dict:
        vals = np.array(list(self.per_ue_mean_bps.values()))
        out = {f"p{q}": percentile(vals, q) for q in qs}
        out["mean"] = float(vals.mean()) if len(vals) else float("nan")
        return out


def perceived_throughput(records: list, tti_s: float = 1e-3) -> PerceivedStats:
    """Perceived throughput over completed, loss-free bursts."""
    done = [b for b in records if b.completion_tti is not None and not b.lossy]
    unfinished = sum(1 for b in records if b.completion_tti is None)
    lossy = sum(1 for b in records if b.completion_tti is not None and b.lossy)
    per_burst = np.array([b.perceived_bps(tti_s) for b in done])
    per_ue: dict = {}
    for b in done:
        per_ue.setdefault(b.ue, []).append(b.perceived_bps(tti_s))
    per_ue_mean = {ue: float(np.mean(v)) for ue, v in sorted(per_ue.items())}
    return PerceivedStats(per_burst, per_ue_mean, len(done), unfinished, lossy)

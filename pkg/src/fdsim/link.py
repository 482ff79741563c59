"""Link adaptation, BLER model, transport-block sizing, HARQ.

Block error rates follow a logistic curve per MCS calibrated so that each
MCS's 10%-BLER point coincides with the corresponding CQI threshold: the MCS
picked from a reported SINR is then exactly the CQI the same SINR maps to,
which keeps link adaptation and feedback consistent without a PHY-abstraction
layer. HARQ is synchronous (fixed round trip), Chase-like: every
retransmission adds a fixed combining gain, and a block is dropped after the
maximum number of attempts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .csi import CqiTable
from .errors import ConfigError


@dataclass
class LinkConfig:
    bler_slope: float = 2.0          # logistic steepness (1/dB)
    overhead_fraction: float = 0.25  # control / reference-signal overhead in a TB
    harq_max_attempts: int = 4
    harq_rtt_tti: int = 8
    harq_gain_db: float = 3.0        # soft-combining gain per retransmission

    def __post_init__(self):
        if not 0.0 <= self.overhead_fraction <= 1.0:
            raise ConfigError("link.overhead_fraction must be in [0, 1]")
        if self.harq_max_attempts < 1:
            raise ConfigError("link.harq_max_attempts must be >= 1")


@dataclass(frozen=True)
class McsTable:
    """Modulation/coding table aligned with the CQI indices (MCS i <-> CQI i+1)."""

    efficiency: tuple
    sinr_50pct_db: tuple   # logistic midpoint per MCS
    slope: float

    @classmethod
    def from_cqi(cls, table: CqiTable, slope: float = 2.0) -> "McsTable":
        # Midpoint such that bler(threshold) == 0.10 exactly.
        mid = tuple(t - np.log(9.0) / slope for t in table.sinr_db)
        return cls(tuple(table.efficiency), mid, slope)

    @property
    def n_entries(self) -> int:
        return len(self.efficiency)


def bler(mcs: int, sinr_db, table: McsTable) -> np.ndarray:
    """Logistic block error probability, decreasing in SINR."""
    s50 = table.sinr_50pct_db[mcs]
    x = np.clip(table.slope * (np.asarray(sinr_db, dtype=float) - s50), -700.0, 700.0)
    return 1.0 / (1.0 + np.exp(x))


def select_mcs(sinr_db, table: McsTable, target_bler: float = 0.10) -> np.ndarray:
    """Highest MCS whose predicted BLER at this SINR is within the target.

    Index 0 is the floor: it is returned even when its own BLER exceeds the
    target. Equivalent to a linear scan over the table.
    """
    margin = np.log((1.0 - target_bler) / target_bler) / table.slope
    thresholds = np.asarray(table.sinr_50pct_db) + margin
    idx = np.searchsorted(thresholds, np.asarray(sinr_db, dtype=float), side="right") - 1
    return np.maximum(idx, 0).astype(np.int64)


def tb_size(mcs: int, n_rbs: int, table: McsTable, lcfg: LinkConfig,
            rb_bandwidth_hz: float = 180e3, tti_s: float = 1e-3) -> int:
    """Transport block size in bits for one TTI on ``n_rbs`` resource blocks."""
    eff = table.efficiency[mcs]
    return int(np.floor(eff * rb_bandwidth_hz * tti_s * n_rbs * (1.0 - lcfg.overhead_fraction)))


@dataclass
class HarqProcess:
    ue: int
    cell: int
    direction: str          # "dl" | "ul"
    subband: int
    tb_bits: int
    mcs: int
    attempts: int = 1       # transmissions performed so far
    segments: list = field(default_factory=list)  # traffic bookkeeping (burst refs)


def harq_step(processes: list, realized_sinr_db: dict, mcs_table: McsTable,
              lcfg: LinkConfig, rng: np.random.Generator):
    """Resolve one TTI's transmissions.

    ``processes`` are the HARQ processes that transmitted this TTI (first
    attempts and retransmissions); ``realized_sinr_db`` maps id(process) ->
    SINR seen on air. Decoding succeeds with probability 1 - bler at the
    soft-combined SINR. Returns (acked, retx, dropped) process lists; callers
    re-queue ``retx`` one round trip later.
    """
    acked: list = []
    retx: list = []
    dropped: list = []
    for proc in processes:
        sinr = realized_sinr_db[id(proc)] + lcfg.harq_gain_db * (proc.attempts - 1)
        p_err = float(bler(proc.mcs, sinr, mcs_table))
        if rng.random() >= p_err:
            acked.append(proc)
        elif proc.attempts >= lcfg.harq_max_attempts:
            dropped.append(proc)
        else:
            proc.attempts += 1
            retx.append(proc)
    return acked, retx, dropped

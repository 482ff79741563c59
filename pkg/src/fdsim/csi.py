"""Measurement and feedback: SINR-to-CQI mapping, delayed sub-band reports,
and the pair-wise wide-band feedback that enables joint scheduling.

Two wide-band pair feedback flavours are modelled. ``onebit`` reports a
schedulability bitmap per intra-cell (UL, DL) UE pair; ``multibit`` reports
the CQI degradation of the pair quantized to k-bit buckets. Only intra-cell
pairs are measurable (no cross-cell coordination). Both refresh slowly
(every ``pair_update_period_tti``), which keeps the overhead tiny compared
with conventional sub-band CQI reporting; see :func:`pair_overhead_fraction`.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError
from .propagation import LinkGainMatrix

POWER_FLOOR_DBM = -200.0

# LTE-style 15-entry CQI table: 10%-BLER SINR thresholds (dB), spectral
# efficiency (bit/s/Hz) and modulation order. Config-overridable.
DEFAULT_CQI_SINR_DB = (-6.7, -4.7, -2.3, 0.2, 2.4, 4.3, 5.9, 8.1,
                       10.3, 11.7, 14.1, 16.3, 18.7, 21.0, 22.7)
DEFAULT_CQI_EFFICIENCY = (0.1523, 0.2344, 0.3770, 0.6016, 0.8770,
                          1.1758, 1.4766, 1.9141, 2.4063, 2.7305,
                          3.3223, 3.9023, 4.5234, 5.1152, 5.5547)
DEFAULT_CQI_MODULATION = (2, 2, 2, 2, 2, 4, 4, 4, 4, 6, 6, 6, 6, 6, 6)


@dataclass(frozen=True)
class CqiTable:
    sinr_db: tuple = DEFAULT_CQI_SINR_DB
    efficiency: tuple = DEFAULT_CQI_EFFICIENCY
    modulation: tuple = DEFAULT_CQI_MODULATION

    def __post_init__(self):
        if not (len(self.sinr_db) == len(self.efficiency) == len(self.modulation)):
            raise ConfigError("cqi table columns must have equal length")
        if np.any(np.diff(self.sinr_db) <= 0) or np.any(np.diff(self.efficiency) <= 0):
            raise ConfigError("cqi table thresholds and efficiencies must be strictly increasing")

    @property
    def n_entries(self) -> int:
        return len(self.sinr_db)

    def eff_of_cqi(self, cqi) -> np.ndarray:
        """Spectral efficiency for CQI indices (0 maps to zero rate)."""
        eff = np.concatenate([[0.0], np.asarray(self.efficiency)])
        return eff[np.asarray(cqi, dtype=np.int64)]


def sinr_to_cqi(sinr_db, table: CqiTable) -> np.ndarray:
    """Largest CQI whose threshold is <= SINR; 0 when below all thresholds."""
    return np.searchsorted(np.asarray(table.sinr_db), np.asarray(sinr_db, dtype=float),
                           side="right").astype(np.int64)


@dataclass
class FeedbackConfig:
    delay_tti: int = 6
    default_cqi: int = 5                 # used before the first aged report
    ul_min_window_tti: int = 8           # conservative BS-side UL SINR filtering
    pair_mode: str = "multibit"          # "off" | "onebit" | "multibit"
    pair_bits: int = 4
    pair_update_period_tti: int = 50
    onebit_threshold_steps: int = 1      # pair schedulable iff degradation <= threshold
    bits_per_subband_report: int = 10    # CQI + PMI/RI-style budget per subband report

    def __post_init__(self):
        if self.pair_mode not in ("off", "onebit", "multibit"):
            raise ConfigError(f"feedback.pair_mode invalid: {self.pair_mode!r}")
        if self.pair_bits < 1 or self.pair_bits > 8:
            raise ConfigError("feedback.pair_bits must be in [1, 8]")
        if self.delay_tti < 0 or self.pair_update_period_tti < 1:
            raise ConfigError("feedback delays must be non-negative")
        if self.ul_min_window_tti < 1:
            raise ConfigError("feedback.ul_min_window_tti must be >= 1")


@dataclass
class PairFeedback:
    """Wide-band intra-cell pair report: rows are UL UEs, columns DL UEs."""

    mode: str
    deg_steps: np.ndarray          # (n_ul, n_dl) CQI-step degradation buckets
    schedulable: np.ndarray        # (n_ul, n_dl) bool (onebit semantics)
    updated_tti: int = 0


def measure_pair_interference(cell: int, gains: LinkGainMatrix,
                              ue_power_dbm: np.ndarray) -> np.ndarray:
    """Idealized genie measurement of intra-cell pair interference (dBm).

    Entry (u, d) is UL UE u's per-RB OLPC power through the UE-UE gain to DL
    UE d; this stands in for the pair-wise interference-measurement reference
    signals. Powers at or below the floor report the floor.
    """
    ul = gains.cell_ul_ues[cell]
    dl = gains.cell_dl_ues[cell]
    m = ue_power_dbm[ul][:, None] + gains.ue_to_ue[np.ix_(ul, dl)]
    return np.maximum(m, POWER_FLOOR_DBM)


def quantize_pair_feedback(meas_dbm: np.ndarray, dl_signal_dbm: np.ndarray,
                           dl_base_interference_dbm: np.ndarray, cfg: FeedbackConfig,
                           table: CqiTable, tti: int = 0) -> PairFeedback:
    """Quantize measured pair interference into the configured feedback mode.

    The degradation of pair (u, d) is the baseline wide-band CQI of d (no
    UE-UE interference) minus its CQI when u's measured interference is added,
    clamped to the k-bit bucket range. One-bit mode reports pairs whose
    degradation stays within the threshold as schedulable.
    """
    sig = 10.0 ** (dl_signal_dbm / 10.0)
    base_i = 10.0 ** (dl_base_interference_dbm / 10.0)
    pair_i = 10.0 ** (meas_dbm / 10.0)
    base_cqi = sinr_to_cqi(10.0 * np.log10(sig / base_i), table)
    with_pair = 10.0 * np.log10(sig[None, :] / (base_i[None, :] + pair_i))
    deg_raw = base_cqi[None, :] - sinr_to_cqi(with_pair, table)
    n_buckets = 2 ** (1 if cfg.pair_mode == "onebit" else cfg.pair_bits)
    deg = np.clip(deg_raw, 0, n_buckets - 1).astype(np.int8)
    schedulable = deg_raw <= cfg.onebit_threshold_steps
    return PairFeedback(cfg.pair_mode, deg, schedulable, tti)


@dataclass
class FeedbackState:
    """Per-drop feedback pipeline: delayed sub-band reports plus pair tables.

    ``record`` pushes the measurements taken at the end of a TTI; ``report``
    returns what the schedulers may legally see at a TTI, i.e. measurements at
    least ``delay_tti`` old, or the configured default CQI before the first
    report. The uplink estimate is the element-wise minimum over the trailing
    ``ul_min_window_tti`` measurements (the BS filters its own SRS-style
    measurements conservatively, since bursty interferers inside the delay
    window would otherwise defeat the 10%-BLER MCS choice). Pair tables
    refresh only every ``pair_update_period_tti``.
    """

    cfg: FeedbackConfig
    n_dl_subbands: int
    n_ul_subbands: int
    history: deque = field(default_factory=deque)     # (tti, dl_full, dl_conv, ul)
    pair: list = field(default_factory=list)          # per cell PairFeedback or None
    pending_pair: list = field(default_factory=list)  # [(tti, tables)]

    def record(self, tti: int, dl_full_sinr: np.ndarray, dl_conv_sinr: np.ndarray,
               ul_sinr: np.ndarray) -> None:
        self.history.append((tti, dl_full_sinr, dl_conv_sinr, ul_sinr))
        keep = self.cfg.delay_tti + self.cfg.ul_min_window_tti
        while len(self.history) > keep:
            self.history.popleft()

    def record_pair(self, tti: int, tables: list) -> None:
        self.pending_pair.append((tti, tables))

    def report(self, tti: int):
        """(dl_full, dl_conv, ul, pair_tables) visible at ``tti`` or None."""
        want = tti - self.cfg.delay_tti
        found = None
        ul_frames = []
        for rec in self.history:
            if rec[0] == want:
                found = rec
            if want - self.cfg.ul_min_window_tti < rec[0] <= want:
                ul_frames.append(rec[3])
        while self.pending_pair and self.pending_pair[0][0] + self.cfg.delay_tti <= tti:
            self.pair = self.pending_pair.pop(0)[1]
        if found is None:
            return None, None, None, self.pair
        return found[1], found[2], np.minimum.reduce(ul_frames), self.pair


def age_and_report(state: FeedbackState, tti: int):
    """Functional alias for :meth:`FeedbackState.report`."""
    return state.report(tti)


def pair_overhead_fraction(cfg: FeedbackConfig, n_ul: int = 10, n_dl: int = 10,
                           n_subbands: int = 8) -> float:
    """Pair-feedback bits relative to the conventional sub-band CSI budget.

    Pair reports cost n_ul * n_dl * k bits per cell per update period. The
    baseline is every DL UE reporting ``bits_per_subband_report`` bits per
    subband per TTI (sub-band CQI plus the usual PMI/RI-style fields).
    """
    bits = 1 if cfg.pair_mode == "onebit" else cfg.pair_bits
    pair_per_tti = n_ul * n_dl * bits / cfg.pair_update_period_tti
    baseline_per_tti = n_dl * n_subbands * cfg.bits_per_subband_report
    return pair_per_tti / baseline_per_tti

"""Per-TTI, per-subband proportional-fair resource assignment.

Three schedulers are provided. The basic scheduler picks the UL and DL UEs
independently per subband by their PF metric (the DL CQI already carries the
aggregate measured UE-UE interference). The joint scheduler searches every
(DL, UL) pairing per subband, adjusting the DL estimate by the reported pair
degradation, and also considers DL-only, UL-only and idle options; the pair
with the highest summed PF metric wins. The flexible scheduler gives each
subband exclusively to the direction whose best PF metric is higher.

Uplink assignment is power-aware: a UE's per-RB power falls by 10 log10 of
its granted RBs once the p_max cap binds, so subbands are assigned greedily
in index order and each step's UL metric reflects the PSD the UE would
actually have after winning that subband (see :class:`UlAllocator`). One UE
may still take several subbands when it has the headroom.

All schedulers operate on stacked per-cell arrays so the engine can schedule
every cell in one shot; cells never see other cells' state (no cross-cell
coordination). Ties break toward the lowest UE index, then DL over UL, which
keeps runs bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .csi import CqiTable, sinr_to_cqi

NEG = -np.inf


@dataclass
class PfState:
    """Exponentially averaged served rate per UE (bits/s)."""

    r_avg: np.ndarray
    t_pf: float = 100.0
    floor_bps: float = 1e3

    @classmethod
    def fresh(cls, n_ues: int, t_pf: float = 100.0, floor_bps: float = 1e3) -> "PfState":
        return cls(np.full(n_ues, floor_bps, dtype=float), t_pf, floor_bps)


def update_pf(pf: PfState, served_bits: np.ndarray, tti_s: float = 1e-3) -> PfState:
    """R_avg <- (1 - 1/T) R_avg + (1/T) served_rate, floored to avoid div/0."""
    rate = np.asarray(served_bits, dtype=float) / tti_s
    pf.r_avg = (1.0 - 1.0 / pf.t_pf) * pf.r_avg + rate / pf.t_pf
    np.maximum(pf.r_avg, pf.floor_bps, out=pf.r_avg)
    return pf


def pf_metric(est_rate_bps, r_avg_bps):
    """Instantaneous rate estimate over the long-term average."""
    return np.asarray(est_rate_bps, dtype=float) / np.asarray(r_avg_bps, dtype=float)


@dataclass
class SchedulerView:
    """Stacked per-cell scheduling inputs for one TTI.

    Leading axis is the cell; every cell carries exactly N UEs per direction.
    DL arrays are the aged CQI reports the cells may legally see; the uplink
    side carries the measured SINR at the 1-RB reference power plus the power
    headroom terms, because UL allocation is power-aware (see below).
    """

    table: CqiTable
    dl_ids: np.ndarray        # (C, N) global UE ids
    ul_ids: np.ndarray
    dl_cqi_full: np.ndarray   # (C, N, S) aggregate-interference CQI
    dl_cqi_conv: np.ndarray   # (C, N, S) conventional-interference-only CQI
    ul_sinr_db: np.ndarray    # (C, N, S) at the 1-RB reference power
    r_avg_dl: np.ndarray      # (C, N)
    r_avg_ul: np.ndarray
    dl_has_data: np.ndarray   # (C, N) bool
    ul_has_data: np.ndarray
    sb_bw_dl: np.ndarray      # (S,)
    sb_bw_ul: np.ndarray
    sb_rbs_ul: np.ndarray     # (S,) resource blocks per UL subband
    ul_p_raw_dbm: np.ndarray  # (C, N) OLPC formula value before the p_max clamp
    p_max_dbm: float = 23.0
    dl_free: np.ndarray = None  # (C, S) bool; False where HARQ retransmissions preempt
    ul_free: np.ndarray = None
    pair_deg: Optional[np.ndarray] = None    # (C, N_ul, N_dl) CQI-step buckets
    pair_block: Optional[np.ndarray] = None  # (C, N_ul, N_dl) bool, True = do not pair


def _metric(cqi: np.ndarray, sb_bw: np.ndarray, r_avg: np.ndarray,
            has_data: np.ndarray, table: CqiTable) -> np.ndarray:
    """PF metric (C, N, S); -inf where the UE has nothing to send or is out
    of range (CQI 0 means no usable rate, so scheduling it would waste air)."""
    rate = table.eff_of_cqi(cqi) * sb_bw[None, None, :]
    m = rate / r_avg[:, :, None]
    return np.where(has_data[:, :, None] & (cqi > 0), m, NEG)


def _pick(metric: np.ndarray, free: np.ndarray):
    """Argmax over the UE axis; -1 where no UE is eligible or slot not free."""
    best = metric.argmax(axis=1)                       # (C, S)
    val = np.take_along_axis(metric, best[:, None, :], axis=1)[:, 0, :]
    best = np.where((val > NEG) & free, best, -1)
    val = np.where(best >= 0, val, NEG)
    return best, val


def _mcs_of(cqi: np.ndarray) -> np.ndarray:
    """MCS index aligned to CQI (CQI k -> MCS k-1; floor MCS 0)."""
    return np.maximum(cqi - 1, 0)


class UlAllocator:
    """Power-aware sequential uplink assignment state.

    A UE's per-RB power is capped at p_max - 10 log10(granted RBs), so every
    additional subband dilutes its PSD. The allocator tracks the RBs each UE
    has won this TTI and yields, per subband, the CQI and PF metric a UE
    would achieve if it also won that subband. Subbands are assigned in
    index order (greedy, no cross-subband optimization); one UE may still
    take several subbands when its headroom allows.
    """

    def __init__(self, view: SchedulerView):
        self.view = view
        self.won_rbs = np.zeros(view.ul_p_raw_dbm.shape, dtype=np.int64)  # (C, N)
        self.ref_dbm = np.minimum(view.ul_p_raw_dbm, view.p_max_dbm)

    def cqi_if_won(self, s: int) -> np.ndarray:
        """(C, N) CQI at each UE's power if it also won subband ``s``."""
        view = self.view
        rbs = self.won_rbs + int(view.sb_rbs_ul[s])
        cap = view.p_max_dbm - 10.0 * np.log10(rbs)
        delta = np.minimum(view.ul_p_raw_dbm, cap) - self.ref_dbm
        return sinr_to_cqi(view.ul_sinr_db[:, :, s] + delta, view.table)

    def metric(self, s: int):
        view = self.view
        cqi = self.cqi_if_won(s)
        rate = view.table.eff_of_cqi(cqi) * float(view.sb_bw_ul[s])
        m = np.where(view.ul_has_data & (cqi > 0), rate / view.r_avg_ul, NEG)
        return m, cqi

    def grant(self, s: int, winners: np.ndarray) -> None:
        """Record subband ``s`` for the (C,) local UE winners (-1 = none)."""
        rows = np.nonzero(winners >= 0)[0]
        self.won_rbs[rows, winners[rows]] += int(self.view.sb_rbs_ul[s])


def schedule_basic_batch(view: SchedulerView):
    """Independent per-direction PF argmax for every cell and subband."""
    m_dl = _metric(view.dl_cqi_full, view.sb_bw_dl, view.r_avg_dl, view.dl_has_data, view.table)
    dl_pick, _ = _pick(m_dl, view.dl_free)
    dl_cqi = np.take_along_axis(view.dl_cqi_full, np.maximum(dl_pick, 0)[:, None, :], axis=1)[:, 0, :]

    n_c, _, s_n = view.ul_sinr_db.shape
    alloc = UlAllocator(view)
    ul_pick = np.full((n_c, s_n), -1, dtype=np.int64)
    ul_mcs = np.zeros((n_c, s_n), dtype=np.int64)
    rows = np.arange(n_c)
    for s in range(s_n):
        m, cqi = alloc.metric(s)
        best = m.argmax(axis=1)
        ok = (m[rows, best] > NEG) & view.ul_free[:, s]
        pick = np.where(ok, best, -1)
        alloc.grant(s, pick)
        ul_pick[:, s] = pick
        ul_mcs[:, s] = _mcs_of(cqi[rows, np.maximum(pick, 0)])
    return dl_pick, _mcs_of(dl_cqi), ul_pick, ul_mcs


def schedule_joint_batch(view: SchedulerView):
    """Highest joint PF metric over all (DL, UL) pairings, singles included.

    The DL estimate of a pairing is the conventional CQI minus the reported
    pair degradation; one-bit feedback turns blocked pairs into -inf. Option
    index N stands for "no UE" on that side.
    """
    n_c, n, s_n = view.dl_cqi_conv.shape
    table = view.table
    deg = view.pair_deg
    if deg is None:
        deg = np.zeros((n_c, n, n), dtype=np.int64)
    # Pair estimate: conventional CQI minus the reported pair degradation,
    # never above the aggregate measurement (which carries the inter-cell
    # UE-UE part that pair feedback cannot see).
    adj_cqi = np.clip(view.dl_cqi_conv[:, None, :, :] - deg[:, :, :, None], 0, table.n_entries)
    adj_cqi = np.minimum(adj_cqi, view.dl_cqi_full[:, None, :, :])
    solo_cqi_est = np.minimum(view.dl_cqi_conv, view.dl_cqi_full)
    m_dl_solo = _metric(solo_cqi_est, view.sb_bw_dl, view.r_avg_dl, view.dl_has_data, table)
    rate_pair = table.eff_of_cqi(adj_cqi) * view.sb_bw_dl[None, None, None, :]
    m_dl_pair = rate_pair / view.r_avg_dl[:, None, :, None]
    m_dl_pair = np.where(view.dl_has_data[:, None, :, None] & (adj_cqi > 0), m_dl_pair, NEG)

    alloc = UlAllocator(view)
    d_pick = np.full((n_c, s_n), -1, dtype=np.int64)
    u_pick = np.full((n_c, s_n), -1, dtype=np.int64)
    dl_mcs = np.zeros((n_c, s_n), dtype=np.int64)
    ul_mcs = np.zeros((n_c, s_n), dtype=np.int64)
    rows = np.arange(n_c)
    for s in range(s_n):
        m_ul, ul_cqi = alloc.metric(s)                  # (C, N)
        # utility[c, d, u]; index n means "none". DL-major flattening makes
        # argmax prefer the lowest DL id, then the lowest UL id, DL over UL.
        util = np.full((n_c, n + 1, n + 1), NEG)
        util[:, :n, :n] = m_dl_pair[:, :, :, s].transpose(0, 2, 1) + m_ul[:, None, :]
        if view.pair_block is not None:
            util[:, :n, :n] = np.where(view.pair_block.transpose(0, 2, 1), NEG, util[:, :n, :n])
        util[:, :n, n] = m_dl_solo[:, :, s]
        util[:, n, :n] = m_ul
        util[:, n, n] = 0.0
        best = util.reshape(n_c, -1).argmax(axis=1)
        d_s = best // (n + 1)
        u_s = best % (n + 1)
        d_s = np.where((d_s < n) & view.dl_free[:, s], d_s, -1)
        u_s = np.where((u_s < n) & view.ul_free[:, s], u_s, -1)
        alloc.grant(s, u_s)
        d_pick[:, s] = d_s
        u_pick[:, s] = u_s
        pair_cqi = adj_cqi[rows, np.maximum(u_s, 0), np.maximum(d_s, 0), s]
        solo_cqi = solo_cqi_est[rows, np.maximum(d_s, 0), s]
        dl_mcs[:, s] = _mcs_of(np.where(u_s >= 0, pair_cqi, solo_cqi))
        ul_mcs[:, s] = _mcs_of(ul_cqi[rows, np.maximum(u_s, 0)])
    return d_pick, dl_mcs, u_pick, ul_mcs


def schedule_flexible_batch(view: SchedulerView):
    """Give each subband to the direction with the higher best PF metric."""
    m_dl = _metric(view.dl_cqi_full, view.sb_bw_dl, view.r_avg_dl, view.dl_has_data, view.table)
    free = view.dl_free & view.ul_free
    n_c, _, s_n = view.dl_cqi_full.shape
    alloc = UlAllocator(view)
    dl_pick = np.full((n_c, s_n), -1, dtype=np.int64)
    ul_pick = np.full((n_c, s_n), -1, dtype=np.int64)
    dl_mcs = np.zeros((n_c, s_n), dtype=np.int64)
    ul_mcs = np.zeros((n_c, s_n), dtype=np.int64)
    rows = np.arange(n_c)
    for s in range(s_n):
        m_ul, ul_cqi = alloc.metric(s)
        d_best = m_dl[:, :, s].argmax(axis=1)
        d_val = m_dl[rows, d_best, s]
        u_best = m_ul.argmax(axis=1)
        u_val = m_ul[rows, u_best]
        go_dl = free[:, s] & (d_val > NEG) & (d_val >= u_val)   # tie toward DL
        go_ul = free[:, s] & ~go_dl & (u_val > NEG)
        dl_pick[:, s] = np.where(go_dl, d_best, -1)
        u_s = np.where(go_ul, u_best, -1)
        alloc.grant(s, u_s)
        ul_pick[:, s] = u_s
        dl_mcs[:, s] = _mcs_of(view.dl_cqi_full[rows, np.maximum(d_best, 0), s]) * go_dl
        ul_mcs[:, s] = _mcs_of(ul_cqi[rows, np.maximum(u_s, 0)]) * go_ul
    return dl_pick, dl_mcs, ul_pick, ul_mcs


BATCH_SCHEDULERS = {
    "basic": schedule_basic_batch,
    "fdd": schedule_basic_batch,
    "joint": schedule_joint_batch,
    "flexible": schedule_flexible_batch,
}


@dataclass
class ScheduleDecision:
    """One cell's assignment for one TTI.

    UE entries are local indices into the cell's id-sorted UE lists in the
    batched path; the engine stores global ids here. -1 means idle. Power
    fields are filled by the engine once allocation sizes are known.
    """

    cell: int
    dl_ue: np.ndarray
    ul_ue: np.ndarray
    dl_mcs: np.ndarray
    ul_mcs: np.ndarray
    dl_power_dbm_rb: float = float("nan")
    ul_power_dbm_rb: np.ndarray = None
    dl_retx: np.ndarray = None
    ul_retx: np.ndarray = None

    def __post_init__(self):
        s_dl, s_ul = len(self.dl_ue), len(self.ul_ue)
        if self.ul_power_dbm_rb is None:
            self.ul_power_dbm_rb = np.full(s_ul, np.nan)
        if self.dl_retx is None:
            self.dl_retx = np.zeros(s_dl, dtype=bool)
        if self.ul_retx is None:
            self.ul_retx = np.zeros(s_ul, dtype=bool)


def _single(view: SchedulerView, kind: str, cell: int) -> ScheduleDecision:
    sub = SchedulerView(
        table=view.table,
        dl_ids=view.dl_ids[cell:cell + 1], ul_ids=view.ul_ids[cell:cell + 1],
        dl_cqi_full=view.dl_cqi_full[cell:cell + 1], dl_cqi_conv=view.dl_cqi_conv[cell:cell + 1],
        ul_sinr_db=view.ul_sinr_db[cell:cell + 1],
        r_avg_dl=view.r_avg_dl[cell:cell + 1], r_avg_ul=view.r_avg_ul[cell:cell + 1],
        dl_has_data=view.dl_has_data[cell:cell + 1], ul_has_data=view.ul_has_data[cell:cell + 1],
        sb_bw_dl=view.sb_bw_dl, sb_bw_ul=view.sb_bw_ul, sb_rbs_ul=view.sb_rbs_ul,
        ul_p_raw_dbm=view.ul_p_raw_dbm[cell:cell + 1], p_max_dbm=view.p_max_dbm,
        dl_free=view.dl_free[cell:cell + 1], ul_free=view.ul_free[cell:cell + 1],
        pair_deg=None if view.pair_deg is None else view.pair_deg[cell:cell + 1],
        pair_block=None if view.pair_block is None else view.pair_block[cell:cell + 1],
    )
    d, dm, u, um = BATCH_SCHEDULERS[kind](sub)
    to_global_dl = np.where(d[0] >= 0, view.dl_ids[cell][np.maximum(d[0], 0)], -1)
    to_global_ul = np.where(u[0] >= 0, view.ul_ids[cell][np.maximum(u[0], 0)], -1)
    return ScheduleDecision(cell, to_global_dl, to_global_ul, dm[0], um[0])


def schedule_basic(cell: int, view: SchedulerView, *_args) -> ScheduleDecision:
    """Independent UL/DL PF assignment for one cell (basic FD and FDD)."""
    return _single(view, "basic", cell)


def schedule_joint(cell: int, view: SchedulerView, *_args) -> ScheduleDecision:
    """Pair-aware joint PF assignment for one cell."""
    return _single(view, "joint", cell)


def schedule_flexible(cell: int, view: SchedulerView, *_args) -> ScheduleDecision:
    """Direction-exclusive subband assignment for one cell."""
    return _single(view, "flexible", cell)

"""Drop orchestration and the per-TTI loop.

Fixed phase order per TTI: (1) age feedback, (2) every cell schedules on its
own aged view, (3) SINR is evaluated network-wide against the concurrent
decisions of all cells, (4) HARQ resolves, (5) traffic queues and PF averages
update, (6) metrics. Decisions are made on stale feedback but evaluated on
the true concurrent state, which is what makes uncoordinated cells collide.

Randomness is hierarchical: the master seed spawns per-drop seeds; a drop
seed spawns separate substreams for layout, per-link draws, traffic arrivals
and per-cell HARQ coin flips, so perturbing one subsystem leaves the others'
draws untouched (paired-comparison variance reduction for gain ratios).
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .csi import (CqiTable, FeedbackConfig, FeedbackState, measure_pair_interference,
                  quantize_pair_feedback, sinr_to_cqi)
from .errors import ConfigError, InvariantError
from .link import HarqProcess, LinkConfig, McsTable, bler, tb_size
from .propagation import (LinkGainMatrix, NullingConfig, SelfInterferenceConfig,
                          build_gain_matrix, interference_ratio_cdfs)
from .radio import (DuplexMode, PowerConfig, make_grid, olpc_power_all, select_boost)
from .scheduling import BATCH_SCHEDULERS, PfState, SchedulerView, update_pf
from .topology import ScenarioParams, generate_layout
from .traffic import (PerceivedStats, QueueState, TrafficConfig, generate_arrivals,
                      perceived_throughput, percentile)

_TAG_TRAFFIC = 0x31
_TAG_HARQ = 0x32

SCHEDULERS_BY_MODE = {
    DuplexMode.FD: ("basic", "joint"),
    DuplexMode.FDD: ("fdd", "basic"),
    DuplexMode.FLEXIBLE: ("flexible",),
}


@dataclass
class PfConfig:
    t_pf: float = 100.0
    floor_bps: float = 1e3


@dataclass
class RunConfig:
    scenario: ScenarioParams = field(default_factory=ScenarioParams)
    mode: DuplexMode = DuplexMode.FD
    scheduler: str = "basic"
    nulling: NullingConfig = field(default_factory=NullingConfig)
    sic: SelfInterferenceConfig = field(default_factory=SelfInterferenceConfig)
    power: PowerConfig = field(default_factory=PowerConfig)
    cqi: CqiTable = field(default_factory=CqiTable)
    feedback: FeedbackConfig = field(default_factory=FeedbackConfig)
    link: LinkConfig = field(default_factory=LinkConfig)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    pf: PfConfig = field(default_factory=PfConfig)
    n_drops: int = 2
    ttis_per_drop: int = 5000
    seed: int = 1
    total_rb_20mhz: int = 100
    subband_rb: int = 12
    debug_traces: bool = False

    def for_mode(self, mode: DuplexMode) -> "RunConfig":
        """Clone with the duplex mode swapped and a compatible scheduler."""
        sched = self.scheduler
        if sched not in SCHEDULERS_BY_MODE[mode]:
            sched = SCHEDULERS_BY_MODE[mode][0]
        return replace(self, mode=mode, scheduler=sched)


def validate_config(cfg: RunConfig) -> None:
    cfg.scenario.validate()
    if cfg.scheduler not in ("basic", "joint", "flexible", "fdd"):
        raise ConfigError(f"scheduler must be basic|joint|flexible|fdd, got {cfg.scheduler!r}")
    if cfg.scheduler not in SCHEDULERS_BY_MODE[cfg.mode]:
        raise ConfigError(
            f"scheduler {cfg.scheduler!r} is incompatible with mode {cfg.mode.value!r}")
    if cfg.scheduler == "joint" and cfg.feedback.pair_mode == "off":
        raise ConfigError("the joint scheduler needs feedback.pair_mode onebit or multibit")
    if cfg.n_drops < 1 or cfg.ttis_per_drop < 0:
        raise ConfigError("n_drops must be >= 1 and ttis_per_drop >= 0")


def drop_seed(master_seed: int, drop: int) -> int:
    """Stable per-drop seed derived from the master seed."""
    return int(np.random.SeedSequence([master_seed & 0xFFFFFFFF, drop]).generate_state(1)[0])


@dataclass
class DropResult:
    n_ttis: int
    tti_s: float
    served_bits: np.ndarray
    ue_is_ul: np.ndarray
    ue_cell: np.ndarray
    boost_db: float
    warnings: list
    bursts: list = field(default_factory=list)
    conservation_ok: bool = True
    traces: Optional[dict] = None

    def throughput_bps(self, direction: str) -> np.ndarray:
        mask = self.ue_is_ul if direction == "ul" else ~self.ue_is_ul
        if self.n_ttis == 0:
            return np.zeros(0)
        return self.served_bits[mask] / (self.n_ttis * self.tti_s)


class _DropSim:
    """State and vectorized per-TTI machinery for one drop."""

    def __init__(self, cfg: RunConfig, seed: int, gains_transform=None):
        validate_config(cfg)
        self.cfg = cfg
        self.seed = seed
        self.warnings: list = []
        self.layout = generate_layout(cfg.scenario.kind, seed, cfg.scenario)
        self.gains = build_gain_matrix(self.layout, cfg.nulling, self.layout.wrap, seed)
        if gains_transform is not None:
            gains_transform(self.gains)
        self.grid = make_grid(cfg.mode, cfg.total_rb_20mhz, cfg.subband_rb)
        self.mcs_table = McsTable.from_cqi(cfg.cqi, cfg.link.bler_slope)
        self.tti_s = self.grid.tti_s

        power = replace(cfg.power)
        if cfg.mode is DuplexMode.FD:
            if power.auto_boost:
                sel = select_boost(self.gains, replace(power, boost_db=0.0), self.grid,
                                   cfg.sic.sic_db)
                power = replace(power, boost_db=sel.boost_db, auto_boost=False)
                if sel.warning:
                    self.warnings.append(f"boost selection: {sel.warning}")
        else:
            # P0 boosting is the FD interference-mitigation knob only.
            power = replace(power, boost_db=0.0, auto_boost=False)
        self.power = power

        g = self.gains
        self.n_cells = g.n_cells
        self.n_ue = g.n_ues
        self.n_per = cfg.scenario.ues_per_cell_per_dir
        self.dl_ids = np.array([g.cell_dl_ues[c] for c in range(self.n_cells)])
        self.ul_ids = np.array([g.cell_ul_ues[c] for c in range(self.n_cells)])
        self.g_bu = 10.0 ** (g.bs_to_ue / 10.0)
        self.g_uu = 10.0 ** (g.ue_to_ue / 10.0)
        self.g_bb = 10.0 ** (g.bs_to_bs / 10.0)
        np.fill_diagonal(self.g_uu, 0.0)
        np.fill_diagonal(self.g_bb, 0.0)  # the self path is the SIC term
        self.noise_ue = 10.0 ** (g.noise_ue_dbm_rb / 10.0)
        self.noise_bs = 10.0 ** (g.noise_bs_dbm_rb / 10.0)
        self.p_dl_rb_dbm = self.grid.bs_power_dbm_rb(power.bs_power_dbm)
        self.p_dl_rb = 10.0 ** (self.p_dl_rb_dbm / 10.0)
        self.sic_lin = 10.0 ** (-cfg.sic.sic_db / 10.0) if cfg.mode is DuplexMode.FD else 0.0

        ue_idx = np.arange(self.n_ue)
        self.ue_cell = g.ue_cell
        self.serv_gain_db = g.serving_gain_db()
        self.p_raw_dbm = power.p0_dbm + power.boost_db + power.alpha * (-self.serv_gain_db)
        self.p_ref_dbm = np.minimum(self.p_raw_dbm, power.p_max_dbm)  # 1-RB reference
        self.p_ref_mw = 10.0 ** (self.p_ref_dbm / 10.0)
        self.dl_ref_sig = self.p_dl_rb * self.g_bu[self.ue_cell, ue_idx]
        self.ul_ref_sig = self.p_ref_mw * self.g_bu[self.ue_cell, ue_idx]

        self.n_sb = self.grid.n_dl_subbands
        self.sb_rbs = np.array(self.grid.dl_subband_rbs)
        self.sb_bw = self.grid.dl_subband_bw_hz()
        self.tb_bits_by_mcs = np.array(
            [[tb_size(m, r, self.mcs_table, cfg.link, self.grid.rb_bandwidth_hz, self.tti_s)
              for r in self.sb_rbs] for m in range(self.mcs_table.n_entries)], dtype=np.int64)

        self.pf = PfState.fresh(self.n_ue, cfg.pf.t_pf, cfg.pf.floor_bps)
        self.feedback = FeedbackState(cfg.feedback, self.n_sb, self.n_sb)
        self.full_buffer = cfg.traffic.model == "full_buffer"
        if self.full_buffer:
            self.queues = None
        else:
            rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFF, _TAG_TRAFFIC]))
            arrivals = []
            for direction in ("dl", "ul"):
                mask = g.ue_is_ul if direction == "ul" else ~g.ue_is_ul
                ids = np.nonzero(mask)[0]
                lam = cfg.traffic.lam_per_ue(direction, len(ids))
                arrivals += generate_arrivals(cfg.traffic, ids, lam, cfg.ttis_per_drop, rng,
                                              self.tti_s)
            self.queues = QueueState(self.n_ue, arrivals)
        self.served_bits = np.zeros(self.n_ue, dtype=np.int64)
        self.retx_by_tti: dict[int, list[HarqProcess]] = {}
        self.harq_rng = [np.random.default_rng(np.random.SeedSequence(
            [seed & 0xFFFFFFFF, _TAG_HARQ, c])) for c in range(self.n_cells)]
        self.traces = None
        if cfg.debug_traces:
            self.traces = {"tti": [], "mean_dl_sinr_db": [], "mean_ul_sinr_db": [],
                           "decisions": [], "harq": [], "pair_tables": None}

    # ---------------- feedback ----------------

    def _pair_tables(self, tti: int) -> list:
        # Pair interference is reported at the PSD of a typical single-subband
        # grant, which is what a boosted UE actually radiates per RB.
        p_pair_dbm = np.minimum(self.p_raw_dbm,
                                self.power.p_max_dbm - 10.0 * np.log10(self.sb_rbs[0]))
        tabs = []
        g = self.gains
        for c in range(self.n_cells):
            meas = measure_pair_interference(c, g, p_pair_dbm)
            dl = g.cell_dl_ues[c]
            sig_dbm = self.p_dl_rb_dbm + g.bs_to_ue[c, dl]
            conv_mw = self.p_dl_rb * (self.g_bu[:, dl].sum(axis=0) - self.g_bu[c, dl]) \
                + self.noise_ue
            tabs.append(quantize_pair_feedback(meas, sig_dbm, 10.0 * np.log10(conv_mw),
                                               self.cfg.feedback, self.cfg.cqi, tti))
        return tabs

    def _view(self, tti: int, dl_free: np.ndarray, ul_free: np.ndarray) -> tuple:
        fb = self.cfg.feedback
        dl_full, dl_conv, ul_rep, pair = self.feedback.report(tti)
        shape = (self.n_cells, self.n_per, self.n_sb)
        if dl_full is None:
            default = fb.default_cqi
            dl_cqi_full = np.full(shape, default, dtype=np.int64)
            dl_cqi_conv = dl_cqi_full.copy()
            ul_rep = np.full(shape, float(self.cfg.cqi.sinr_db[max(default - 1, 0)]))
        else:
            dl_cqi_full = sinr_to_cqi(dl_full, self.cfg.cqi)
            dl_cqi_conv = sinr_to_cqi(dl_conv, self.cfg.cqi)

        pair_deg = pair_block = None
        if self.cfg.scheduler == "joint" and pair:
            if fb.pair_mode == "multibit":
                pair_deg = np.stack([p.deg_steps for p in pair]).astype(np.int64)
            else:
                pair_block = np.stack([~p.schedulable for p in pair])

        if self.full_buffer:
            has = np.ones((self.n_cells, self.n_per), dtype=bool)
            dl_has, ul_has = has, has
        else:
            mask = self.queues.has_data_all()
            dl_has = mask[self.dl_ids]
            ul_has = mask[self.ul_ids]

        view = SchedulerView(
            table=self.cfg.cqi, dl_ids=self.dl_ids, ul_ids=self.ul_ids,
            dl_cqi_full=dl_cqi_full, dl_cqi_conv=dl_cqi_conv, ul_sinr_db=ul_rep,
            r_avg_dl=self.pf.r_avg[self.dl_ids], r_avg_ul=self.pf.r_avg[self.ul_ids],
            dl_has_data=dl_has, ul_has_data=ul_has,
            sb_bw_dl=self.sb_bw, sb_bw_ul=self.sb_bw, sb_rbs_ul=self.sb_rbs,
            ul_p_raw_dbm=self.p_raw_dbm[self.ul_ids], p_max_dbm=self.power.p_max_dbm,
            dl_free=dl_free, ul_free=ul_free,
            pair_deg=pair_deg, pair_block=pair_block)
        return view, ul_rep

    # ---------------- one TTI ----------------

    def tti(self, t: int) -> None:
        cfg = self.cfg
        n_c, s_n = self.n_cells, self.n_sb
        if self.queues is not None:
            self.queues.admit(t)
        if cfg.scheduler == "joint" and t % cfg.feedback.pair_update_period_tti == 0:
            self.feedback.record_pair(t, self._pair_tables(t))

        # (1)+(2) aged feedback and per-cell scheduling around due retransmissions
        due = self.retx_by_tti.pop(t, [])
        dl_free = np.ones((n_c, s_n), dtype=bool)
        ul_free = np.ones((n_c, s_n), dtype=bool)
        for proc in due:
            (dl_free if proc.direction == "dl" else ul_free)[proc.cell, proc.subband] = False
        if cfg.mode is DuplexMode.FLEXIBLE:
            # a retransmission pins the whole subband to its direction
            pinned = dl_free & ul_free
            dl_free &= pinned
            ul_free &= pinned
        view, ul_rep_sinr = self._view(t, dl_free, ul_free)
        d_loc, d_mcs, u_loc, u_mcs = BATCH_SCHEDULERS[cfg.scheduler](view)

        cell_rows = np.arange(n_c)[:, None]
        dl_tx = np.where(d_loc >= 0, self.dl_ids[cell_rows, np.maximum(d_loc, 0)], -1)
        ul_tx = np.where(u_loc >= 0, self.ul_ids[cell_rows, np.maximum(u_loc, 0)], -1)

        # transmissions: ue / mcs / bits / attempt / segments per (cell, subband)
        dl_slot = _SlotPlan(n_c, s_n)
        ul_slot = _SlotPlan(n_c, s_n)
        dl_slot.place_new(dl_tx, d_mcs)
        ul_slot.place_new(ul_tx, u_mcs)
        for proc in due:
            slot = dl_slot if proc.direction == "dl" else ul_slot
            slot.place_retx(proc)
        if cfg.mode is DuplexMode.FLEXIBLE and np.any((dl_slot.ue >= 0) & (ul_slot.ue >= 0)):
            raise InvariantError("flexible duplex scheduled both directions on one subband")

        # UL per-RB power: renormalize so the UE total stays within p_max.
        ul_p_dbm = np.full((n_c, s_n), -np.inf)
        for c in range(n_c):
            active = np.nonzero(ul_slot.ue[c] >= 0)[0]
            for ue in np.unique(ul_slot.ue[c, active]):
                slots = ul_slot.ue[c] == ue
                rbs = int(self.sb_rbs[slots].sum())
                cap = self.power.p_max_dbm - 10.0 * np.log10(rbs)
                ul_p_dbm[c, slots] = min(self.p_raw_dbm[ue], cap)

        # Adjust new UL MCS for the allocation-capped power (retx keep theirs).
        new_ul = (ul_slot.ue >= 0) & (ul_slot.attempt == 1)
        if new_ul.any():
            cells, sbs = np.nonzero(new_ul)
            ues = ul_slot.ue[cells, sbs]
            rep = ul_rep_sinr[cells, u_loc[cells, sbs], sbs]
            delta = ul_p_dbm[cells, sbs] - self.p_ref_dbm[ues]
            ul_slot.mcs[cells, sbs] = np.maximum(sinr_to_cqi(rep + delta, cfg.cqi) - 1, 0)

        # TB sizing against the queues may clear drained slots, so powers are
        # masked only after sizing.
        self._size_tbs(dl_slot)
        self._size_tbs(ul_slot)
        dl_slot.p_mw = np.where(dl_slot.ue >= 0, self.p_dl_rb, 0.0)
        with np.errstate(over="ignore"):
            ul_slot.p_mw = np.where(ul_slot.ue >= 0, 10.0 ** (ul_p_dbm / 10.0), 0.0)

        # (3) network-wide SINR for the concurrent decision set
        dl_sinr, ul_sinr, meas = self._evaluate(dl_slot, ul_slot)

        # (4) HARQ
        served = np.zeros(self.n_ue, dtype=np.int64)
        self._resolve(dl_slot, dl_sinr, "dl", t, served)
        self._resolve(ul_slot, ul_sinr, "ul", t, served)

        # (5) traffic / PF updates
        self.served_bits += served
        update_pf(self.pf, served, self.tti_s)

        # (6) metrics and feedback recording
        self.feedback.record(t, meas["dl_full"], meas["dl_conv"], meas["ul"])
        if self.traces is not None:
            on_dl = dl_slot.ue >= 0
            on_ul = ul_slot.ue >= 0
            self.traces["tti"].append(t)
            self.traces["mean_dl_sinr_db"].append(
                float(dl_sinr[on_dl].mean()) if on_dl.any() else float("nan"))
            self.traces["mean_ul_sinr_db"].append(
                float(ul_sinr[on_ul].mean()) if on_ul.any() else float("nan"))
            for direction, slot in (("dl", dl_slot), ("ul", ul_slot)):
                for c, s in zip(*np.nonzero(slot.ue >= 0)):
                    self.traces["decisions"].append(
                        (t, int(c), int(s), direction, int(slot.ue[c, s]),
                         int(slot.mcs[c, s]), int(slot.attempt[c, s])))

    def _size_tbs(self, slot: "_SlotPlan") -> None:
        """Size first transmissions; bursty queues bound the TB and may drain."""
        new = (slot.ue >= 0) & (slot.attempt == 1)
        if not new.any():
            return
        if self.full_buffer:
            cells, sbs = np.nonzero(new)
            slot.bits[cells, sbs] = self.tb_bits_by_mcs[slot.mcs[cells, sbs], sbs]
            return
        for c, s in zip(*np.nonzero(new)):
            cap = int(self.tb_bits_by_mcs[slot.mcs[c, s], s])
            seg = self.queues.reserve(int(slot.ue[c, s]), cap)
            if seg is None:
                slot.clear(c, s)  # queue drained by an earlier subband this TTI
                continue
            slot.bits[c, s] = seg[1]
            slot.segments[(c, s)] = [seg]

    def _evaluate(self, dl_slot: "_SlotPlan", ul_slot: "_SlotPlan"):
        """Realized SINR per active slot plus the measurement grids for feedback."""
        shared = self.grid.shared
        n_c, s_n = self.n_cells, self.n_sb
        dl_p, ul_p = dl_slot.p_mw, ul_slot.p_mw

        i_bs_at_ue = self.g_bu.T @ dl_p                        # (n_ue, S)
        i_uu_at_ue = np.zeros((self.n_ue, s_n))
        i_ul_at_bs = np.zeros((n_c, s_n))
        for s in range(s_n):
            act = ul_slot.ue[:, s] >= 0
            if act.any():
                idx = ul_slot.ue[act, s]
                i_uu_at_ue[:, s] = ul_p[act, s] @ self.g_uu[idx, :]
                i_ul_at_bs[:, s] = self.g_bu[:, idx] @ ul_p[act, s]
        i_bb_at_bs = self.g_bb.T @ dl_p                        # (C, S)

        # realized DL
        dl_sinr = np.full((n_c, s_n), np.nan)
        on = dl_slot.ue >= 0
        if on.any():
            cells, sbs = np.nonzero(on)
            d = dl_slot.ue[cells, sbs]
            sig = dl_p[cells, sbs] * self.g_bu[cells, d]
            interf = i_bs_at_ue[d, sbs] - sig + self.noise_ue
            if shared:
                interf = interf + i_uu_at_ue[d, sbs]
            dl_sinr[cells, sbs] = 10.0 * np.log10(sig / interf)

        # realized UL
        ul_sinr = np.full((n_c, s_n), np.nan)
        on = ul_slot.ue >= 0
        if on.any():
            cells, sbs = np.nonzero(on)
            u = ul_slot.ue[cells, sbs]
            sig = ul_p[cells, sbs] * self.g_bu[cells, u]
            interf = i_ul_at_bs[cells, sbs] - sig + self.noise_bs
            if shared:
                interf = interf + i_bb_at_bs[cells, sbs] \
                    + dl_p[cells, sbs] * self.sic_lin
            ul_sinr[cells, sbs] = 10.0 * np.log10(sig / interf)

        # measurement grids at reference powers (what UEs/BSs report)
        ue_idx = np.arange(self.n_ue)
        own_dl = dl_p[self.ue_cell, :] * self.g_bu[self.ue_cell, ue_idx][:, None]
        conv = i_bs_at_ue - own_dl + self.noise_ue
        meas_dl_conv = 10.0 * np.log10(self.dl_ref_sig[:, None] / conv)
        full = conv + (i_uu_at_ue if shared else 0.0)
        meas_dl_full = 10.0 * np.log10(self.dl_ref_sig[:, None] / full)

        own_ul_tx = ul_slot.ue[self.ue_cell, :]                # (n_ue, S)
        own_ul = np.where(
            own_ul_tx >= 0,
            ul_p[self.ue_cell, :] * self.g_bu[self.ue_cell[:, None], np.maximum(own_ul_tx, 0)],
            0.0)
        i_est = i_ul_at_bs[self.ue_cell, :] - own_ul + self.noise_bs
        if shared:
            i_est = i_est + i_bb_at_bs[self.ue_cell, :] + dl_p[self.ue_cell, :] * self.sic_lin
        meas_ul = 10.0 * np.log10(self.ul_ref_sig[:, None] / i_est)

        meas = {
            "dl_full": meas_dl_full[self.dl_ids],              # (C, N, S)
            "dl_conv": meas_dl_conv[self.dl_ids],
            "ul": meas_ul[self.ul_ids],
        }
        return dl_sinr, ul_sinr, meas

    def _resolve(self, slot: "_SlotPlan", sinr: np.ndarray, direction: str, t: int,
                 served: np.ndarray) -> None:
        lcfg = self.cfg.link
        n_ack = n_retx = n_drop = 0
        for c in range(self.n_cells):
            active = np.nonzero(slot.ue[c] >= 0)[0]
            if len(active) == 0:
                continue
            draws = self.harq_rng[c].random(len(active))
            for k, s in enumerate(active):
                ue = int(slot.ue[c, s])
                eff_sinr = sinr[c, s] + lcfg.harq_gain_db * (slot.attempt[c, s] - 1)
                p_err = float(bler(int(slot.mcs[c, s]), eff_sinr, self.mcs_table))
                segments = slot.segments.get((c, s), [])
                if draws[k] >= p_err:
                    n_ack += 1
                    served[ue] += slot.bits[c, s]
                    if self.queues is not None and segments:
                        self.queues.resolve(segments, t, acked=True)
                elif slot.attempt[c, s] >= lcfg.harq_max_attempts:
                    n_drop += 1
                    if self.queues is not None and segments:
                        self.queues.resolve(segments, t, acked=False)
                else:
                    n_retx += 1
                    proc = slot.proc.get((c, s))
                    if proc is None:
                        proc = HarqProcess(ue, c, direction, int(s), int(slot.bits[c, s]),
                                           int(slot.mcs[c, s]), attempts=1, segments=segments)
                    proc.attempts += 1
                    self.retx_by_tti.setdefault(t + lcfg.harq_rtt_tti, []).append(proc)
        if self.traces is not None and (n_ack or n_retx or n_drop):
            self.traces["harq"].append((t, direction, n_ack, n_retx, n_drop))

    def run(self) -> DropResult:
        for t in range(self.cfg.ttis_per_drop):
            self.tti(t)
        bursts = self.queues.records if self.queues is not None else []
        ok = self.queues.conservation_holds() if self.queues is not None else True
        if not ok:
            raise InvariantError("traffic bit conservation violated")
        return DropResult(
            n_ttis=self.cfg.ttis_per_drop, tti_s=self.tti_s,
            served_bits=self.served_bits, ue_is_ul=self.gains.ue_is_ul.copy(),
            ue_cell=self.gains.ue_cell.copy(), boost_db=self.power.boost_db,
            warnings=self.warnings, bursts=bursts, conservation_ok=ok,
            traces=self.traces)


class _SlotPlan:
    """Per-(cell, subband) transmission plan for one TTI and direction."""

    def __init__(self, n_cells: int, n_sb: int):
        self.ue = np.full((n_cells, n_sb), -1, dtype=np.int64)
        self.mcs = np.zeros((n_cells, n_sb), dtype=np.int64)
        self.bits = np.zeros((n_cells, n_sb), dtype=np.int64)
        self.attempt = np.ones((n_cells, n_sb), dtype=np.int64)
        self.p_mw = np.zeros((n_cells, n_sb))
        self.segments: dict = {}
        self.proc: dict = {}

    def place_new(self, tx: np.ndarray, mcs: np.ndarray) -> None:
        on = tx >= 0
        self.ue = np.where(on, tx, -1)
        self.mcs = np.where(on, mcs, 0)

    def place_retx(self, proc: HarqProcess) -> None:
        c, s = proc.cell, proc.subband
        self.ue[c, s] = proc.ue
        self.mcs[c, s] = proc.mcs
        self.bits[c, s] = proc.tb_bits
        self.attempt[c, s] = proc.attempts
        self.segments[(c, s)] = proc.segments
        self.proc[(c, s)] = proc

    def clear(self, c: int, s: int) -> None:
        self.ue[c, s] = -1
        self.bits[c, s] = 0


def run_drop(cfg: RunConfig, seed: int, gains_transform: Optional[Callable] = None) -> DropResult:
    """Simulate one drop; deterministic for a fixed (cfg, seed)."""
    return _DropSim(cfg, seed, gains_transform).run()


def _run_drop_task(args):
    cfg, seed = args
    return run_drop(cfg, seed)


@dataclass
class RunResult:
    cfg: RunConfig
    drops: list

    @property
    def warnings(self) -> list:
        return [w for d in self.drops for w in d.warnings]

    def throughput_bps(self, direction: str) -> np.ndarray:
        arrs = [d.throughput_bps(direction) for d in self.drops]
        return np.concatenate(arrs) if arrs else np.zeros(0)

    def mean_throughput_bps(self, direction: str) -> float:
        v = self.throughput_bps(direction)
        return float(v.mean()) if len(v) else float("nan")

    def perceived(self, direction: str) -> PerceivedStats:
        """Perceived throughput over all drops; UEs of different drops are
        distinct samples (ids offset per drop)."""
        merged = []
        for k, d in enumerate(self.drops):
            want_ul = direction == "ul"
            for b in d.bursts:
                if bool(d.ue_is_ul[b.ue]) == want_ul:
                    shifted = replace(b, ue=b.ue + k * len(d.ue_is_ul))
                    merged.append(shifted)
        return perceived_throughput(merged, self.drops[0].tti_s if self.drops else 1e-3)


def run(cfg: RunConfig, workers: int = 1,
        gains_transform: Optional[Callable] = None) -> RunResult:
    """Run all drops of a config, optionally on a process pool."""
    validate_config(cfg)
    seeds = [drop_seed(cfg.seed, k) for k in range(cfg.n_drops)]
    if workers > 1 and gains_transform is None and cfg.n_drops > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            drops = list(pool.map(_run_drop_task, [(cfg, s) for s in seeds]))
    else:
        drops = [run_drop(cfg, s, gains_transform) for s in seeds]
    return RunResult(cfg, drops)


@dataclass
class ModeMetrics:
    mode: str
    scheduler: str
    boost_db: float
    mean_tput_dl_bps: float
    mean_tput_ul_bps: float
    perceived_dl: Optional[dict] = None  # p5/p50/p95/mean of per-UE means
    perceived_ul: Optional[dict] = None


@dataclass
class CompareReport:
    base_cfg: RunConfig
    metrics: dict                      # mode value -> ModeMetrics
    results: dict                      # mode value -> RunResult
    warnings: list

    def gain(self, mode: str, direction: str, stat: str = "mean") -> float:
        """Ratio of a metric under ``mode`` to the FDD baseline.

        ``stat``: "mean" uses mean full-buffer throughput for full-buffer
        traffic and the mean per-UE perceived throughput otherwise; "p5",
        "p50", "p95" use perceived-throughput percentiles.
        """
        m = self.metrics[mode]
        base = self.metrics[DuplexMode.FDD.value]
        bursty = self.base_cfg.traffic.model == "ftp3"
        if stat == "mean" and not bursty:
            num = m.mean_tput_dl_bps if direction == "dl" else m.mean_tput_ul_bps
            den = base.mean_tput_dl_bps if direction == "dl" else base.mean_tput_ul_bps
        else:
            key = "mean" if stat == "mean" else stat
            num = (m.perceived_dl if direction == "dl" else m.perceived_ul)[key]
            den = (base.perceived_dl if direction == "dl" else base.perceived_ul)[key]
        if den == 0 or not np.isfinite(den):
            return float("nan")
        return num / den


def compare_modes(cfg: RunConfig, modes, workers: int = 1) -> CompareReport:
    """Run each duplex mode on identical drops and report gains versus FDD."""
    modes = [DuplexMode.parse(m) if not isinstance(m, DuplexMode) else m for m in modes]
    if DuplexMode.FDD not in modes:
        modes = list(modes) + [DuplexMode.FDD]
    metrics = {}
    results = {}
    warnings: list = []
    for mode in modes:
        sub = cfg.for_mode(mode)
        res = run(sub, workers=workers)
        warnings += res.warnings
        bursty = cfg.traffic.model == "ftp3"
        met = ModeMetrics(
            mode=mode.value, scheduler=sub.scheduler,
            boost_db=res.drops[0].boost_db if res.drops else 0.0,
            mean_tput_dl_bps=res.mean_throughput_bps("dl"),
            mean_tput_ul_bps=res.mean_throughput_bps("ul"),
        )
        if bursty:
            met.perceived_dl = res.perceived("dl").percentiles()
            met.perceived_ul = res.perceived("ul").percentiles()
        metrics[mode.value] = met
        results[mode.value] = res
    return CompareReport(cfg, metrics, results, warnings)


def load_sweep(cfg: RunConfig, dl_loads_bps, modes=("fd", "flexible", "fdd"),
               dl_ul_ratio: float = 2.0, workers: int = 1) -> list:
    """One compare_modes result per offered-load point (bursty traffic only)."""
    if cfg.traffic.model != "ftp3":
        raise ConfigError("load_sweep requires traffic.model == 'ftp3'")
    out = []
    for load in dl_loads_bps:
        sub = replace(cfg, traffic=replace(cfg.traffic, dl_offered_load_bps=float(load),
                                           ul_offered_load_bps=float(load) / dl_ul_ratio))
        out.append((float(load), compare_modes(sub, modes, workers=workers)))
    return out


def fig_interference_ratios(cfg: RunConfig, seed: Optional[int] = None) -> dict:
    """Layout + gains + OLPC powers -> interference ratio CDFs (one drop)."""
    s = drop_seed(cfg.seed, 0) if seed is None else seed
    layout = generate_layout(cfg.scenario.kind, s, cfg.scenario)
    gains = build_gain_matrix(layout, cfg.nulling, layout.wrap, s)
    grid = make_grid(DuplexMode.FD, cfg.total_rb_20mhz, cfg.subband_rb)
    powers = olpc_power_all(gains, cfg.power, 1)
    return interference_ratio_cdfs(layout, gains, powers,
                                   grid.bs_power_dbm_rb(cfg.power.bs_power_dbm))

"""Transmit power assignment and SINR evaluation under each duplex mode.

Uplink power follows fractional open-loop power control: the per-RB transmit
power is min(P_max, P0 + boost + alpha * PL), and a UE scheduled on n RBs is
additionally capped at P_max - 10 log10(n) per RB so its total never exceeds
P_max. The boost term is the semi-static P0 offset used to overcome BS-BS
interference; :func:`select_boost` picks it from long-term statistics.

BS power is a total budget spread evenly over the carrier (constant PSD), so
per-RB BS power depends on the duplex mode's carrier width.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Optional

import numpy as np

from .errors import ConfigError, InvariantError
from .propagation import LinkGainMatrix

if TYPE_CHECKING:
    from .scheduling import ScheduleDecision


class DuplexMode(str, Enum):
    FD = "fd"                # 20 MHz shared by UL and DL
    FDD = "fdd"              # 10 MHz UL + 10 MHz DL, fixed
    FLEXIBLE = "flexible"    # 20 MHz, each subband exclusively UL or DL per TTI

    @classmethod
    def parse(cls, s: str) -> "DuplexMode":
        try:
            return cls(str(s).lower())
        except ValueError:
            raise ConfigError(f"mode must be one of {[m.value for m in cls]}, got {s!r}") from None


@dataclass
class PowerConfig:
    p_max_dbm: float = 23.0      # UE total power cap
    p0_dbm: float = -80.0        # semi-static per-RB base level
    alpha: float = 0.8           # fractional path-loss compensation
    boost_db: float = 0.0        # uplink P0 boost (FD interference mitigation)
    bs_power_dbm: float = 24.0   # small-cell total transmit power
    auto_boost: bool = False     # pick boost_db via select_boost per drop
    target_ul_sinr_db: float = 5.0
    max_dl_degradation_db: float = 3.0
    max_boost_db: float = 40.0
    boost_step_db: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"power.alpha must be in [0, 1], got {self.alpha}")


def _split_subbands(total_rb: int, subband_rb: int) -> tuple[int, ...]:
    n = total_rb // subband_rb
    sizes = [subband_rb] * n
    sizes[-1] += total_rb - n * subband_rb  # remainder RBs appended to the last subband
    return tuple(sizes)


@dataclass(frozen=True)
class ResourceGrid:
    mode: DuplexMode
    dl_subband_rbs: tuple
    ul_subband_rbs: tuple
    shared: bool                 # True when UL and DL share the same physical subbands
    carrier_rb_dl: int
    carrier_rb_ul: int
    rb_bandwidth_hz: float = 180e3
    tti_s: float = 1e-3

    @property
    def n_dl_subbands(self) -> int:
        return len(self.dl_subband_rbs)

    @property
    def n_ul_subbands(self) -> int:
        return len(self.ul_subband_rbs)

    def dl_subband_bw_hz(self) -> np.ndarray:
        return np.array(self.dl_subband_rbs, dtype=float) * self.rb_bandwidth_hz

    def ul_subband_bw_hz(self) -> np.ndarray:
        return np.array(self.ul_subband_rbs, dtype=float) * self.rb_bandwidth_hz

    def bs_power_dbm_rb(self, bs_power_dbm: float) -> float:
        """Constant-PSD per-RB downlink power."""
        return bs_power_dbm - 10.0 * np.log10(self.carrier_rb_dl)


def make_grid(mode: DuplexMode, total_rb_20mhz: int = 100, subband_rb: int = 12) -> ResourceGrid:
    if total_rb_20mhz < 2 * subband_rb:
        raise ConfigError("total_rb_20mhz too small for the subband size")
    full = _split_subbands(total_rb_20mhz, subband_rb)
    half = _split_subbands(total_rb_20mhz // 2, subband_rb)
    if len(full) != 2 * len(half):
        raise ConfigError(
            f"subband layout violates the 2x rule: {len(full)} shared vs {len(half)} per FDD direction")
    if mode == DuplexMode.FDD:
        return ResourceGrid(mode, half, half, shared=False,
                            carrier_rb_dl=total_rb_20mhz // 2, carrier_rb_ul=total_rb_20mhz // 2)
    return ResourceGrid(mode, full, full, shared=True,
                        carrier_rb_dl=total_rb_20mhz, carrier_rb_ul=total_rb_20mhz)


def olpc_power(ue: int, gains: LinkGainMatrix, cfg: PowerConfig, n_rbs: int = 1) -> float:
    """Open-loop per-RB UE transmit power (dBm)."""
    pl = -float(gains.serving_gain_db()[ue])
    return float(olpc_power_from_pl(pl, cfg, n_rbs))


def olpc_power_from_pl(pl_db, cfg: PowerConfig, n_rbs: int = 1):
    cap = cfg.p_max_dbm - 10.0 * np.log10(n_rbs)
    return np.minimum(cfg.p0_dbm + cfg.boost_db + cfg.alpha * np.asarray(pl_db, dtype=float), cap)


def olpc_power_all(gains: LinkGainMatrix, cfg: PowerConfig, n_rbs: int = 1) -> np.ndarray:
    """Per-RB OLPC power for every UE (DL UEs get a value too; unused)."""
    return olpc_power_from_pl(-gains.serving_gain_db(), cfg, n_rbs)


def _mw(dbm) -> np.ndarray:
    return 10.0 ** (np.asarray(dbm, dtype=float) / 10.0)


@dataclass
class BoostSelection:
    boost_db: float
    target_met: bool
    warning: Optional[str] = None


def select_boost(gains: LinkGainMatrix, cfg: PowerConfig, grid: ResourceGrid,
                 sic_db: float, target_ul_sinr_db: Optional[float] = None,
                 max_dl_degradation_db: Optional[float] = None) -> BoostSelection:
    """Pick the uplink P0 boost from long-term statistics.

    Criterion 1: the smallest boost (in boost_step_db steps) for which the
    median long-term UL SINR reaches the target. Criterion 2: the boost may
    not push the median rise of DL interference (UE-UE over conventional DL
    plus noise) past the degradation cap. If the two conflict, the DL cap
    wins and a warning is attached; if the cap is violated already at zero
    boost, zero is returned.
    """
    target = cfg.target_ul_sinr_db if target_ul_sinr_db is None else target_ul_sinr_db
    cap = cfg.max_dl_degradation_db if max_dl_degradation_db is None else max_dl_degradation_db
    steps = np.arange(0.0, cfg.max_boost_db + cfg.boost_step_db / 2, cfg.boost_step_db)

    n_cells = gains.n_cells
    g_bu = _mw(gains.bs_to_ue)
    g_uu = _mw(gains.ue_to_ue)
    g_bb = _mw(gains.bs_to_bs)
    p_dl = float(_mw(grid.bs_power_dbm_rb(cfg.bs_power_dbm)))
    noise_bs = float(_mw(gains.noise_bs_dbm_rb))
    noise_ue = float(_mw(gains.noise_ue_dbm_rb))
    self_echo = p_dl * 10.0 ** (-sic_db / 10.0)
    pl = -gains.serving_gain_db()

    ul_ids = np.concatenate([gains.cell_ul_ues[c] for c in range(n_cells)])
    dl_ids = np.concatenate([gains.cell_dl_ues[c] for c in range(n_cells)])
    ul_cell = gains.ue_cell[ul_ids]
    i_bsbs = p_dl * (g_bb.sum(axis=0) - np.diag(g_bb))        # per victim cell

    # Conventional DL interference per DL UE (all other BSs at full power).
    i_conv = p_dl * (g_bu[:, dl_ids].sum(axis=0)
                     - g_bu[gains.ue_cell[dl_ids], dl_ids]) + noise_ue

    med_ul = np.empty(len(steps))
    med_rise = np.empty(len(steps))
    base = PowerConfig(**{**cfg.__dict__, "boost_db": 0.0})
    for k, b in enumerate(steps):
        p_ue = _mw(olpc_power_from_pl(pl, base, 1) + b)       # linear, per UE
        # Expected UL interference at each cell: per-cell mean of the other
        # cells' UL UEs (one of them transmits per subband).
        per_cell_mean = np.zeros((n_cells, n_cells))          # victim, src
        for c in range(n_cells):
            ids = gains.cell_ul_ues[c]
            per_cell_mean[:, c] = (p_ue[ids][None, :] * g_bu[:, ids]).mean(axis=1)
        i_ul = per_cell_mean.sum(axis=1) - np.diag(per_cell_mean)
        denom = i_ul[ul_cell] + i_bsbs[ul_cell] + self_echo + noise_bs
        sinr = 10.0 * np.log10(p_ue[ul_ids] * g_bu[ul_cell, ul_ids] / denom)
        med_ul[k] = np.median(sinr)

        mean_uu = np.zeros(len(dl_ids))
        for c in range(n_cells):
            ids = gains.cell_ul_ues[c]
            mean_uu += (p_ue[ids][None, :] * g_uu[np.ix_(ids, dl_ids)].T).mean(axis=1)
        med_rise[k] = np.median(10.0 * np.log10(1.0 + mean_uu / i_conv))

    cap_ok = med_rise <= cap + 1e-12
    if not cap_ok[0]:
        return BoostSelection(0.0, bool(med_ul[0] >= target),
                              "DL degradation cap exceeded already at zero boost")
    cap_boost = float(steps[np.nonzero(cap_ok)[0].max()])
    met = np.nonzero(med_ul >= target)[0]
    if len(met) == 0:
        return BoostSelection(cap_boost, False,
                              f"UL SINR target {target} dB unreachable at any boost; "
                              f"using DL degradation cap {cap_boost} dB")
    candidate = float(steps[met[0]])
    if candidate > cap_boost:
        return BoostSelection(cap_boost, False,
                              f"UL SINR target needs {candidate} dB boost but the DL "
                              f"degradation cap allows only {cap_boost} dB")
    return BoostSelection(candidate, True, None)


def _decision_power_mw(decisions, subband: int, direction: str, n_cells: int):
    """Active transmit powers (mW) and transmitting UE ids on one subband."""
    p = np.zeros(n_cells)
    tx = np.full(n_cells, -1, dtype=np.int64)
    for c in range(n_cells):
        dec = decisions[c]
        if direction == "dl":
            if dec.dl_ue[subband] >= 0:
                p[c] = _mw(dec.dl_power_dbm_rb)
                tx[c] = dec.dl_ue[subband]
        else:
            if dec.ul_ue[subband] >= 0:
                p[c] = _mw(dec.ul_power_dbm_rb[subband])
                tx[c] = dec.ul_ue[subband]
    return p, tx


def _validate(decisions, gains: LinkGainMatrix, mode: DuplexMode) -> None:
    for c, dec in enumerate(decisions):
        for s in range(len(dec.dl_ue)):
            d = dec.dl_ue[s]
            if d >= 0 and (gains.ue_cell[d] != c or gains.ue_is_ul[d]):
                raise InvariantError(f"cell {c} scheduled DL on foreign/UL UE {d}")
        for s in range(len(dec.ul_ue)):
            u = dec.ul_ue[s]
            if u >= 0 and (gains.ue_cell[u] != c or not gains.ue_is_ul[u]):
                raise InvariantError(f"cell {c} scheduled UL on foreign/DL UE {u}")
        if mode == DuplexMode.FLEXIBLE:
            both = (dec.dl_ue >= 0) & (dec.ul_ue >= 0)
            if np.any(both):
                raise InvariantError(
                    f"flexible duplex: cell {c} assigned both directions on subbands "
                    f"{np.nonzero(both)[0].tolist()}")


def compute_sinr(cell: int, subband: int, decisions, gains: LinkGainMatrix,
                 mode: DuplexMode, sic_db: float = 110.0, validate: bool = True) -> dict:
    """Realized SINR of one cell's scheduled links on one subband (dB).

    Reference implementation evaluated per cell; the engine runs a vectorized
    equivalent across the whole network. In FDD, subband index ``s`` refers to
    band-separated resources for UL and DL, so cross-direction terms never
    appear. Returns {"dl": (ue, sinr_db) | None, "ul": (ue, sinr_db) | None}.
    """
    if validate:
        _validate(decisions, gains, mode)
    n_cells = gains.n_cells
    g_bu = _mw(gains.bs_to_ue)
    g_uu = _mw(gains.ue_to_ue)
    g_bb = _mw(gains.bs_to_bs)
    p_dl, _ = _decision_power_mw(decisions, subband, "dl", n_cells)
    p_ul, ul_tx = _decision_power_mw(decisions, subband, "ul", n_cells)
    cross = mode != DuplexMode.FDD
    out: dict = {"dl": None, "ul": None}

    d = decisions[cell].dl_ue[subband]
    if d >= 0:
        sig = p_dl[cell] * g_bu[cell, d]
        interf = float(p_dl @ g_bu[:, d]) - sig
        if cross:
            for c in range(n_cells):
                if ul_tx[c] >= 0:
                    interf += p_ul[c] * g_uu[ul_tx[c], d]
        out["dl"] = (int(d), 10.0 * np.log10(sig / (interf + _mw(gains.noise_ue_dbm_rb))))

    u = decisions[cell].ul_ue[subband]
    if u >= 0:
        sig = p_ul[cell] * g_bu[cell, u]
        interf = 0.0
        for c in range(n_cells):
            if c != cell and ul_tx[c] >= 0:
                interf += p_ul[c] * g_bu[cell, ul_tx[c]]
        if cross:
            interf += float(p_dl @ g_bb[:, cell]) - p_dl[cell] * g_bb[cell, cell]
            if mode == DuplexMode.FD and p_dl[cell] > 0:
                interf += p_dl[cell] * 10.0 ** (-sic_db / 10.0)
        out["ul"] = (int(u), 10.0 * np.log10(sig / (interf + _mw(gains.noise_bs_dbm_rb))))
    return out

"""Static link gains: path loss, LoS/NLoS branching, shadowing, antenna gain,
elevation nulling at BSs, and the interference-ratio characterisation.

Path loss follows log-distance models with LoS/NLoS branches and a
distance-dependent LoS probability. Default constants mirror the common
indoor-hotspot and urban-micro forms (e.g. InH LoS: 32.8 + 16.9 log10(d) +
20 log10(fc)); they are plain config values and can be overridden per
scenario. Fast fading is intentionally not modelled: link gains are static
per drop.

Every link draws an independent LoS uniform and a shadowing normal from a
counter-keyed substream so that a gain matrix is a pure function of
(layout, seed). BS-to-UE draws are keyed per UE (ue id + placement salt),
which lets the layout generator evaluate candidate associations with exactly
the draws the gain matrix will later use.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:  # avoid an import cycle; layouts are duck-typed here
    from .topology import NetworkLayout, WrapConfig

log = logging.getLogger(__name__)

_TAG_BS_UE = 0x21
_TAG_UE_UE = 0x22
_TAG_BS_BS = 0x23

GAIN_FLOOR_DB = -400.0  # stands in for "no coupling"; keeps linear math finite


@dataclass
class PathLossModel:
    """Log-distance model: PL = intercept + slope*log10(d_m) + fc_slope*log10(fc_GHz)."""

    los_intercept_db: float
    los_slope_db: float
    los_fc_slope_db: float
    los_sigma_db: float
    nlos_intercept_db: float
    nlos_slope_db: float
    nlos_fc_slope_db: float
    nlos_sigma_db: float
    los_prob: str = "inh"  # "inh" | "umi" | "always" | "never"


def inh_model(**over) -> PathLossModel:
    """Indoor-hotspot office defaults."""
    m = PathLossModel(32.8, 16.9, 20.0, 3.0, 11.5, 43.3, 20.0, 4.0, los_prob="inh")
    return _override(m, over)


def umi_model(**over) -> PathLossModel:
    """Urban-micro street-level defaults."""
    m = PathLossModel(28.0, 22.0, 20.0, 3.0, 22.7, 36.7, 26.0, 4.0, los_prob="umi")
    return _override(m, over)


def _override(m: PathLossModel, over: dict) -> PathLossModel:
    for k, v in over.items():
        setattr(m, k, v)
    return m


def _default_models(kind: str) -> dict[str, PathLossModel]:
    if kind == "indoor_hotzone":
        base = inh_model
    else:
        base = umi_model
    return {
        "bs_ue": base(),
        "ue_ue": base(),
        # BS-BS channels are treated as line-of-sight: elevated, static ends.
        "bs_bs": base(los_prob="always"),
    }


@dataclass
class ChannelParams:
    carrier_ghz: float = 3.5
    bs_antenna_gain_dbi: float = 5.0
    ue_antenna_gain_dbi: float = 0.0
    thermal_noise_dbm_hz: float = -174.0
    noise_figure_ue_db: float = 9.0
    noise_figure_bs_db: float = 5.0
    rb_bandwidth_hz: float = 180e3
    min_model_distance_m: float = 1.0
    models: dict = field(default_factory=dict)  # per link class, filled per scenario

    def model_for(self, link: str, scenario_kind: str) -> PathLossModel:
        if link not in self.models:
            self.models.update({k: v for k, v in _default_models(scenario_kind).items()
                                if k not in self.models})
        return self.models[link]

    def noise_dbm_per_rb(self, at_bs: bool) -> float:
        nf = self.noise_figure_bs_db if at_bs else self.noise_figure_ue_db
        return self.thermal_noise_dbm_hz + 10.0 * np.log10(self.rb_bandwidth_hz) + nf


@dataclass
class NullingConfig:
    """Elevation nulling toward the horizon, applied on BS-BS links only."""

    tx_null_db: float = 20.0
    rx_null_db: float = 20.0

    def __post_init__(self):
        for side, v in (("tx_null_db", self.tx_null_db), ("rx_null_db", self.rx_null_db)):
            if not 0.0 <= v <= 35.0:
                from .errors import ConfigError
                raise ConfigError(f"nulling.{side} must be within [0, 35] dB, got {v}")

    @property
    def total_db(self) -> float:
        return self.tx_null_db + self.rx_null_db


@dataclass
class SelfInterferenceConfig:
    sic_db: float = 110.0  # echo attenuation at a full-duplex BS

    def __post_init__(self):
        if self.sic_db < 0:
            from .errors import ConfigError
            raise ConfigError(f"sic_db must be >= 0, got {self.sic_db}")


def los_probability(d_m: np.ndarray, curve: str) -> np.ndarray:
    d = np.asarray(d_m, dtype=float)
    if curve == "always":
        return np.ones_like(d)
    if curve == "never":
        return np.zeros_like(d)
    if curve == "inh":
        p = np.where(d <= 18.0, 1.0,
                     np.where(d < 37.0, np.exp(-(d - 18.0) / 27.0), 0.5))
        return p
    if curve == "umi":
        with np.errstate(divide="ignore"):
            p = np.minimum(18.0 / np.maximum(d, 1e-9), 1.0)
        return p * (1.0 - np.exp(-d / 36.0)) + np.exp(-d / 36.0)
    if curve == "street":
        # Terminal-to-terminal links at street level: bodies and clutter
        # block quickly, so clear paths rarely survive past a few tens of m.
        return np.exp(-d / 25.0)
    raise ValueError(f"unknown LoS probability curve {curve!r}")


_warned_min_distance = False


def _clamped_distance(d_m: np.ndarray, min_m: float) -> np.ndarray:
    global _warned_min_distance
    d = np.asarray(d_m, dtype=float)
    if np.any(d < min_m):
        if not _warned_min_distance:
            log.warning("distances below %.2f m clamped to the model minimum", min_m)
            _warned_min_distance = True
        d = np.maximum(d, min_m)
    return d


def pathloss_db(d_m, model: PathLossModel, fc_ghz: float, los: np.ndarray,
                min_distance_m: float = 1.0) -> np.ndarray:
    """Deterministic path-loss curve (no shadowing) for given LoS states."""
    d = _clamped_distance(d_m, min_distance_m)
    lg = np.log10(d)
    pl_los = model.los_intercept_db + model.los_slope_db * lg + model.los_fc_slope_db * np.log10(fc_ghz)
    pl_nlos = model.nlos_intercept_db + model.nlos_slope_db * lg + model.nlos_fc_slope_db * np.log10(fc_ghz)
    return np.where(los, pl_los, pl_nlos)


def _link_gain(d_m, model: PathLossModel, chan: ChannelParams, u_los, z_shadow,
               ant_gain_db: float):
    """Gain (dB, <= 0) from draws: LoS decision, shadowing, antennas."""
    d = _clamped_distance(d_m, chan.min_model_distance_m)
    los = np.asarray(u_los) < los_probability(d, model.los_prob)
    sigma = np.where(los, model.los_sigma_db, model.nlos_sigma_db)
    pl = pathloss_db(d, model, chan.carrier_ghz, los, chan.min_model_distance_m)
    gain = -(pl + np.asarray(z_shadow) * sigma) + ant_gain_db
    return np.minimum(gain, 0.0), los, np.asarray(z_shadow) * sigma


def path_loss(tx, rx, channel: ChannelParams, wrap: "WrapConfig", rng: np.random.Generator,
              scenario_kind: str = "indoor_hotzone"):
    """Single-link draw: returns dict with loss_db, los flag and shadowing_db.

    ``tx``/``rx`` are Node-likes (kind, x, y, z). The caller controls
    reproducibility through ``rng``; the gain-matrix builder uses keyed
    substreams instead (see :func:`link_rng`).
    """
    link = f"{tx.kind}_{rx.kind}" if tx.kind == rx.kind else "bs_ue"
    model = channel.model_for(link, scenario_kind)
    diff = np.array([rx.x - tx.x, rx.y - tx.y]) + wrap.offsets
    dxy = float(np.sqrt((diff ** 2).sum(axis=1)).min())
    d = float(np.hypot(dxy, tx.z - rx.z))
    u = rng.random()
    z = rng.standard_normal()
    d_c = _clamped_distance(d, channel.min_model_distance_m)
    los = bool(u < los_probability(d_c, model.los_prob))
    sigma = model.los_sigma_db if los else model.nlos_sigma_db
    loss = float(pathloss_db(d_c, model, channel.carrier_ghz, los, channel.min_model_distance_m))
    return {"loss_db": loss, "los": los, "shadowing_db": float(z * sigma)}


def link_rng(seed: int, kind: str, *key: int) -> np.random.Generator:
    """Deterministic substream for one link class, keyed by node identifiers."""
    tag = {"bs_ue": _TAG_BS_UE, "ue_ue": _TAG_UE_UE, "bs_bs": _TAG_BS_BS}[kind]
    return np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFF, tag, *key]))


def _bs_ue_column_draws(seed: int, ue_id: int, salt: int, n_bs: int):
    rng = link_rng(seed, "bs_ue", ue_id, salt)
    return rng.random(n_bs), rng.standard_normal(n_bs)


def _mirror(m: np.ndarray) -> None:
    iu = np.triu_indices(m.shape[0], 1)
    m.T[iu] = m[iu]


def _symmetric_draws(seed: int, kind: str, n: int):
    rng = link_rng(seed, kind)
    u = rng.random((n, n))
    z = rng.standard_normal((n, n))
    _mirror(u)
    _mirror(z)
    return u, z


# Wrapped 3-D distances between two node sets. Loops over the 7 images to
# keep peak memory at one (A, B) array.
def _distances(a_xyz: np.ndarray, b_xyz: np.ndarray, wrap) -> np.ndarray:
    best = None
    for off in wrap.offsets:
        dx = a_xyz[:, 0][:, None] - (b_xyz[:, 0] + off[0])[None, :]
        dy = a_xyz[:, 1][:, None] - (b_xyz[:, 1] + off[1])[None, :]
        d2 = dx * dx + dy * dy
        best = d2 if best is None else np.minimum(best, d2, out=best)
    dz = a_xyz[:, 2][:, None] - b_xyz[None, :, 2]
    return np.sqrt(best + dz * dz)


def candidate_association_gains(seed: int, ue_id: int, salt: int, ue_xy: np.ndarray,
                                ue_z: float, bs_xyz: np.ndarray, wrap,
                                chan: ChannelParams, scenario_kind: str) -> np.ndarray:
    """Long-term gains from a candidate UE position to every BS (dB).

    Used during layout generation; bit-identical to the bs_to_ue column the
    gain matrix produces for the accepted draw.
    """
    ue_xyz = np.array([[ue_xy[0], ue_xy[1], ue_z]])
    d = _distances(bs_xyz, ue_xyz, wrap)[:, 0]
    u, z = _bs_ue_column_draws(seed, ue_id, salt, len(bs_xyz))
    model = chan.model_for("bs_ue", scenario_kind)
    ant = chan.bs_antenna_gain_dbi + chan.ue_antenna_gain_dbi
    gain, _, _ = _link_gain(d, model, chan, u, z, ant)
    return gain


@dataclass
class LinkGainMatrix:
    """Static channel gains (dB, <= 0) for all node pairs of one drop.

    ``bs_to_bs`` already includes the elevation-nulling attenuation
    (tx_null_db + rx_null_db subtracted exactly once). Serving relationships
    are carried along so power control and feedback can be computed from the
    matrix alone.
    """

    bs_to_ue: np.ndarray        # (n_bs, n_ue)
    ue_to_ue: np.ndarray        # (n_ue, n_ue), symmetric, diag at floor
    bs_to_bs: np.ndarray        # (n_bs, n_bs), nulled, diag at floor
    noise_ue_dbm_rb: float
    noise_bs_dbm_rb: float
    nulling: NullingConfig
    ue_cell: np.ndarray         # (n_ue,)
    ue_is_ul: np.ndarray        # (n_ue,) bool
    cell_ul_ues: list           # per cell: id-sorted UL UE ids
    cell_dl_ues: list

    @property
    def n_cells(self) -> int:
        return self.bs_to_bs.shape[0]

    @property
    def n_ues(self) -> int:
        return self.bs_to_ue.shape[1]

    def serving_gain_db(self) -> np.ndarray:
        """Gain of each UE's serving link (dB)."""
        return self.bs_to_ue[self.ue_cell, np.arange(self.n_ues)]

    def to_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write("kind,tx_id,rx_id,gain_db\n")
            for name, m in (("bs_ue", self.bs_to_ue), ("ue_ue", self.ue_to_ue), ("bs_bs", self.bs_to_bs)):
                for i in range(m.shape[0]):
                    for j in range(m.shape[1]):
                        f.write(f"{name},{i},{j},{m[i, j]:.3f}\n")


def build_gain_matrix(layout: "NetworkLayout", nulling: NullingConfig, wrap,
                      rng_seed: int) -> LinkGainMatrix:
    """All three gain sub-matrices for one drop.

    ``rng_seed`` must equal the layout's generation seed for the stored UE
    associations to coincide with the argmax of ``bs_to_ue``.
    """
    chan = layout.params.channel
    kind = layout.scenario_kind
    n_bs, n_ue = layout.n_cells, layout.n_ues
    bs_xyz, ue_xyz = layout.bs_xyz, layout.ue_xyz

    # BS -> UE: per-UE keyed columns (same draws the layout generator used).
    d_bu = _distances(bs_xyz, ue_xyz, wrap)
    u_bu = np.empty((n_bs, n_ue))
    z_bu = np.empty((n_bs, n_ue))
    for j in range(n_ue):
        u_bu[:, j], z_bu[:, j] = _bs_ue_column_draws(
            rng_seed, int(layout.ue_id[j]), int(layout.ue_salt[j]), n_bs)
    g_bu, _, _ = _link_gain(d_bu, chan.model_for("bs_ue", kind), chan, u_bu, z_bu,
                            chan.bs_antenna_gain_dbi + chan.ue_antenna_gain_dbi)

    # UE <-> UE: symmetric draws keyed on the (seed, class) stream; the
    # computed matrix is mirrored so symmetry holds to the last bit.
    d_uu = _distances(ue_xyz, ue_xyz, wrap)
    u_uu, z_uu = _symmetric_draws(rng_seed, "ue_ue", n_ue)
    g_uu, _, _ = _link_gain(d_uu, chan.model_for("ue_ue", kind), chan, u_uu, z_uu,
                            2.0 * chan.ue_antenna_gain_dbi)
    _mirror(g_uu)
    np.fill_diagonal(g_uu, GAIN_FLOOR_DB)

    # BS <-> BS: symmetric raw gains, then the nulling attenuation once.
    d_bb = _distances(bs_xyz, bs_xyz, wrap)
    u_bb, z_bb = _symmetric_draws(rng_seed, "bs_bs", n_bs)
    g_bb, _, _ = _link_gain(d_bb, chan.model_for("bs_bs", kind), chan, u_bb, z_bb,
                            2.0 * chan.bs_antenna_gain_dbi)
    g_bb = g_bb - nulling.total_db
    _mirror(g_bb)
    np.fill_diagonal(g_bb, GAIN_FLOOR_DB)

    return LinkGainMatrix(
        bs_to_ue=g_bu, ue_to_ue=g_uu, bs_to_bs=g_bb,
        noise_ue_dbm_rb=chan.noise_dbm_per_rb(at_bs=False),
        noise_bs_dbm_rb=chan.noise_dbm_per_rb(at_bs=True),
        nulling=nulling,
        ue_cell=layout.ue_cell.copy(),
        ue_is_ul=layout.ue_is_ul.copy(),
        cell_ul_ues=[layout.cell_ues(c, "ul") for c in range(n_bs)],
        cell_dl_ues=[layout.cell_ues(c, "dl") for c in range(n_bs)],
    )


def _db_to_mw(x_dbm: np.ndarray) -> np.ndarray:
    return 10.0 ** (np.asarray(x_dbm, dtype=float) / 10.0)


def interference_ratio_cdfs(layout: "NetworkLayout", gains: LinkGainMatrix,
                            ue_power_dbm: np.ndarray, bs_power_dbm_rb: float):
    """Empirical CDFs of the two interference ratios introduced by FD operation.

    Per serving BS: (sum of all other BSs' downlink power through the nulled
    BS-BS gains) over (expected uplink interference, i.e. the per-cell mean of
    the non-served UL UEs' OLPC power through their gains, summed over other
    cells). Per DL UE the analogous UE-UE over conventional-DL ratio, where
    UE-UE includes the own cell (an own-cell UL UE shares the subband under
    FD). Returns dB-domain CDFs as (values, cum_prob) pairs plus medians.
    """
    n_cells = gains.n_cells
    p_ue_mw = _db_to_mw(ue_power_dbm)
    p_bs_mw = float(_db_to_mw(bs_power_dbm_rb))
    g_bu = _db_to_mw(gains.bs_to_ue)
    g_uu = _db_to_mw(gains.ue_to_ue)
    g_bb = _db_to_mw(gains.bs_to_bs)

    # Per (victim, cell) expected UL interference: mean over the cell's UL UEs.
    ul_ids = [gains.cell_ul_ues[c] for c in range(n_cells)]
    bsbs_over_ul = []
    for b in range(n_cells):
        i_bsbs = p_bs_mw * (g_bb[:, b].sum() - g_bb[b, b])
        i_ul = 0.0
        for c in range(n_cells):
            if c == b or len(ul_ids[c]) == 0:
                continue
            i_ul += float(np.mean(p_ue_mw[ul_ids[c]] * g_bu[b, ul_ids[c]]))
        if i_ul <= 0.0 or i_bsbs <= 0.0:
            log.warning("BS %d skipped in ratio CDF (no interferers)", b)
            continue
        bsbs_over_ul.append(10.0 * np.log10(i_bsbs / i_ul))

    ueue_over_dl = []
    for d in range(gains.n_ues):
        if gains.ue_is_ul[d]:
            continue
        cell = gains.ue_cell[d]
        i_dl = p_bs_mw * (g_bu[:, d].sum() - g_bu[cell, d])
        i_ueue = 0.0
        for c in range(n_cells):
            ids = ul_ids[c]
            if len(ids) == 0:
                continue
            i_ueue += float(np.mean(p_ue_mw[ids] * g_uu[ids, d]))
        if i_dl <= 0.0 or i_ueue <= 0.0:
            log.warning("DL UE %d skipped in ratio CDF (no interferers)", d)
            continue
        ueue_over_dl.append(10.0 * np.log10(i_ueue / i_dl))

    def _cdf(vals):
        v = np.sort(np.asarray(vals, dtype=float))
        if len(v) == 0:
            return v, v
        return v, np.arange(1, len(v) + 1) / len(v)

    v1, p1 = _cdf(bsbs_over_ul)
    v2, p2 = _cdf(ueue_over_dl)
    return {
        "bsbs_over_ul": (v1, p1),
        "ueue_over_dl": (v2, p2),
        "median_bsbs_over_ul_db": float(np.median(v1)) if len(v1) else float("nan"),
        "median_ueue_over_dl_db": float(np.median(v2)) if len(v2) else float("nan"),
    }

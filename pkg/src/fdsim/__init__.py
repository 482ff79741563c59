"""System-level simulator for full-duplex small-cell networks.

Models the interference classes full-duplex operation introduces (BS-to-BS,
UE-to-UE and residual self-echo on top of the conventional UL/DL classes),
the mitigation chain (elevation nulling, open-loop power control with P0
boosting, pair-aware joint scheduling on low-rate wide-band feedback), and
compares full-duplex, FDD and flexible-duplex throughput and latency under
full-buffer and bursty traffic.
"""

from .csi import CqiTable, FeedbackConfig, PairFeedback, sinr_to_cqi
from .engine import (CompareReport, DropResult, RunConfig, RunResult, compare_modes,
                     fig_interference_ratios, load_sweep, run, run_drop)
from .errors import ConfigError, InvariantError
from .link import LinkConfig, McsTable, bler, select_mcs, tb_size
from .propagation import (LinkGainMatrix, NullingConfig, SelfInterferenceConfig,
                          build_gain_matrix, interference_ratio_cdfs, path_loss)
from .radio import (BoostSelection, DuplexMode, PowerConfig, ResourceGrid, compute_sinr,
                    make_grid, olpc_power, select_boost)
from .scheduling import (PfState, ScheduleDecision, pf_metric, schedule_basic,
                         schedule_flexible, schedule_joint, update_pf)
from .topology import (NetworkLayout, ScenarioParams, WrapConfig, generate_layout,
                       make_wrap, wrapped_distance)
from .traffic import (BurstRecord, TrafficConfig, generate_arrivals, perceived_throughput,
                      percentile)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

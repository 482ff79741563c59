import numpy as np
import pytest

from fdsim.propagation import ChannelParams, PathLossModel, build_gain_matrix, NullingConfig
from fdsim.topology import (NetworkLayout, Node, ScenarioParams, generate_layout, make_wrap,
                            site_positions)


def deterministic_channel(**over) -> ChannelParams:
    """Channel with no shadowing and forced LoS: gains are pure geometry."""
    model = PathLossModel(32.8, 16.9, 20.0, 0.0, 11.5, 43.3, 20.0, 0.0, los_prob="always")
    chan = ChannelParams(models={"bs_ue": model, "ue_ue": model, "bs_bs": model})
    for k, v in over.items():
        setattr(chan, k, v)
    return chan


def toy_layout(bs_xy, ue_specs, chan=None, isd_m=500.0, bs_height=6.0, ue_height=1.5,
               seed=0) -> NetworkLayout:
    """Hand-built layout: bs_xy list of (x, y); ue_specs list of
    (x, y, cell, direction)."""
    params = ScenarioParams(kind="indoor_hotzone", isd_m=isd_m, bs_height_m=bs_height,
                            ue_height_m=ue_height,
                            ues_per_cell_per_dir=_per_cell(ue_specs, len(bs_xy)),
                            channel=chan or deterministic_channel())
    wrap = make_wrap(isd_m)
    cells = [Node(i, "bs", x, y, bs_height, 0, 0, i) for i, (x, y) in enumerate(bs_xy)]
    ues = [Node(j, "ue", x, y, ue_height, 0, 0, cell, direction)
           for j, (x, y, cell, direction) in enumerate(ue_specs)]
    return NetworkLayout("indoor_hotzone", seed, params, wrap, site_positions(params),
                         cells, ues)


def _per_cell(ue_specs, n_cells):
    per = {}
    for _, _, cell, direction in ue_specs:
        per[(cell, direction)] = per.get((cell, direction), 0) + 1
    return max(per.values()) if per else 1


@pytest.fixture(scope="session")
def indoor_params() -> ScenarioParams:
    return ScenarioParams(kind="indoor_hotzone", bs_height_m=6.0)


@pytest.fixture(scope="session")
def indoor_layout(indoor_params):
    return generate_layout("indoor_hotzone", 1, indoor_params)


@pytest.fixture(scope="session")
def indoor_gains(indoor_layout):
    return build_gain_matrix(indoor_layout, NullingConfig(20.0, 20.0), indoor_layout.wrap, 1)


@pytest.fixture(scope="session")
def uniform_layout():
    params = ScenarioParams(kind="outdoor_uniform", bs_height_m=10.0)
    return generate_layout("outdoor_uniform", 1, params)


@pytest.fixture(scope="session")
def uniform_gains(uniform_layout):
    return build_gain_matrix(uniform_layout, NullingConfig(20.0, 20.0), uniform_layout.wrap, 1)


def jain(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(x.sum() ** 2 / (len(x) * (x ** 2).sum()))

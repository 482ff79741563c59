"""Deployment geometry: hexagonal macro grid, small-cell drops, UE drops, wrap-around.

Three deployment flavours are supported:

* ``indoor_hotzone``  - one (or more) rectangular buildings per macro site,
  4 ceiling-mounted small cells equally spaced along the long axis, UEs
  dropped inside the building.
* ``outdoor_cluster`` - per macro sector, a cluster disc is placed inside the
  sector and 4 small cells are dropped inside it; UEs drop in a slightly
  larger disc around the cluster centre.
* ``outdoor_uniform`` - per macro sector, 4 small cells and the UEs are
  dropped uniformly over the sector area.

All scenarios use a 7-site hexagonal grid with tier-1 wrap-around: distances
are evaluated as the minimum over the 7 mirror images of the far point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError
from .propagation import ChannelParams, candidate_association_gains

SCENARIO_KINDS = ("indoor_hotzone", "outdoor_cluster", "outdoor_uniform")

# Sub-stream tag for placement randomness (link-level draws use their own tags).
_TAG_LAYOUT = 0x10


@dataclass(frozen=True)
class WrapConfig:
    """Tier-1 wrap-around lattice for a 7-site hexagonal grid.

    The seven sites tile the plane when translated by integer combinations of
    ``t1`` and ``t2`` (both of length sqrt(7) * ISD, 60 degrees apart).
    ``offsets`` holds the zero vector plus the six nearest lattice
    translations; mirroring a point by each offset yields its 7 images.
    """

    isd_m: float
    t1: np.ndarray
    t2: np.ndarray
    offsets: np.ndarray  # (7, 2)


def make_wrap(isd_m: float) -> WrapConfig:
    a1 = np.array([1.0, 0.0]) * isd_m
    a2 = np.array([0.5, np.sqrt(3.0) / 2.0]) * isd_m
    t1 = 2.0 * a1 + a2
    t2 = -a1 + 3.0 * a2
    combos = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)]
    offsets = np.array([m1 * t1 + m2 * t2 for m1, m2 in combos])
    return WrapConfig(isd_m=isd_m, t1=t1, t2=t2, offsets=offsets)


def wrapped_distance(a, b, wrap: WrapConfig) -> float:
    """Minimum distance from ``a`` to the 7 wrap images of ``b`` (2-D, meters)."""
    a = np.asarray(a, dtype=float)[:2]
    b = np.asarray(b, dtype=float)[:2]
    d = np.linalg.norm(a - (b + wrap.offsets), axis=1)
    return float(d.min())


def wrapped_distance_matrix(a_xy: np.ndarray, b_xy: np.ndarray, wrap: WrapConfig) -> np.ndarray:
    """Pairwise wrapped 2-D distances, shape (len(a), len(b))."""
    a = a_xy[:, None, None, :]                      # (A,1,1,2)
    b = b_xy[None, :, None, :] + wrap.offsets       # (1,B,7,2)
    d = np.sqrt(((a - b) ** 2).sum(axis=-1))        # (A,B,7)
    return d.min(axis=-1)


@dataclass
class Node:
    id: int
    kind: str               # "bs" | "ue"
    x: float
    y: float
    z: float
    site: int
    sector: int             # global sector index (site * sectors_per_site + k)
    cell: int               # serving / own cell id
    direction: str = ""     # "dl" | "ul" for UEs
    draw_salt: int = 0      # accepted placement attempt; keys the link draws

    @property
    def xyz(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass
class ScenarioParams:
    """Deployment geometry knobs. Dimensional defaults are 3GPP-typical and
    live in the bundled config files; see configs/*.yaml."""

    kind: str = "indoor_hotzone"
    isd_m: float = 500.0
    n_sites: int = 7
    sectors_per_site: int = 3
    cells_per_sector: int = 4          # outdoor scenarios
    buildings_per_site: int = 1        # indoor scenario
    cells_per_building: int = 4
    ues_per_cell_per_dir: int = 10
    building_w_m: float = 120.0
    building_d_m: float = 50.0
    building_offset_m: float = 100.0   # building centre offset when >1 per site
    bs_height_m: float = 10.0          # 6 m (ceiling) indoor, 10 m outdoor
    ue_height_m: float = 1.5
    cluster_radius_m: float = 50.0     # BS drop disc
    cluster_ue_radius_m: float = 70.0  # UE drop disc
    cluster_center_min_m: float = 100.0
    ue_hotspot_radius_m: float = 40.0  # UE disc around each cell (outdoor_uniform)
    min_bs_sep_m: float = 20.0
    min_bs_ue_m: float = 3.0           # horizontal
    max_drop_attempts: int = 2000
    channel: ChannelParams = field(default_factory=ChannelParams)

    def validate(self) -> None:
        if self.kind not in SCENARIO_KINDS:
            raise ConfigError(f"scenario.kind must be one of {SCENARIO_KINDS}, got {self.kind!r}")
        if self.n_sites != 7:
            raise ConfigError("scenario.n_sites: only the 7-site wrap-around grid is supported")
        for key in ("isd_m", "building_w_m", "building_d_m", "cluster_radius_m"):
            if getattr(self, key) <= 0:
                raise ConfigError(f"scenario.{key} must be positive")


@dataclass
class NetworkLayout:
    scenario_kind: str
    seed: int
    params: ScenarioParams
    wrap: WrapConfig
    sites: np.ndarray               # (n_sites, 2)
    small_cells: list[Node]
    ues: list[Node]

    # Cached arrays (rows follow list order; ue_id carries node identity).
    bs_xyz: np.ndarray = field(default=None, repr=False)
    ue_xyz: np.ndarray = field(default=None, repr=False)
    ue_cell: np.ndarray = field(default=None, repr=False)
    ue_is_ul: np.ndarray = field(default=None, repr=False)
    ue_salt: np.ndarray = field(default=None, repr=False)
    ue_id: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.bs_xyz = np.array([[n.x, n.y, n.z] for n in self.small_cells])
        self.ue_xyz = np.array([[n.x, n.y, n.z] for n in self.ues])
        self.ue_cell = np.array([n.cell for n in self.ues], dtype=np.int64)
        self.ue_is_ul = np.array([n.direction == "ul" for n in self.ues])
        self.ue_salt = np.array([n.draw_salt for n in self.ues], dtype=np.int64)
        self.ue_id = np.array([n.id for n in self.ues], dtype=np.int64)

    @property
    def n_cells(self) -> int:
        return len(self.small_cells)

    @property
    def n_ues(self) -> int:
        return len(self.ues)

    def cell_ues(self, cell: int, direction: str) -> np.ndarray:
        """UE ids served by ``cell`` with the given direction, id-sorted."""
        want_ul = direction == "ul"
        mask = (self.ue_cell == cell) & (self.ue_is_ul == want_ul)
        return np.nonzero(mask)[0]

    def to_csv(self, path) -> None:
        """One row per node: id, kind, x, y, z, cell, direction."""
        with open(path, "w") as f:
            f.write("id,kind,x,y,z,cell,direction\n")
            for i, (x, y) in enumerate(self.sites):
                f.write(f"{i},site,{x:.3f},{y:.3f},0.0,-1,\n")
            for n in self.small_cells + self.ues:
                f.write(f"{n.id},{n.kind},{n.x:.3f},{n.y:.3f},{n.z:.3f},{n.cell},{n.direction}\n")


def site_positions(params: ScenarioParams) -> np.ndarray:
    """Central site plus 6 neighbours at the inter-site distance."""
    d = params.isd_m
    ang = np.deg2rad(np.arange(0, 360, 60))
    ring = np.stack([d * np.cos(ang), d * np.sin(ang)], axis=1)
    return np.vstack([[0.0, 0.0], ring])


def _in_hex(p_xy: np.ndarray, center: np.ndarray, isd_m: float) -> bool:
    """Inside the Voronoi hexagon of a site (flat edges toward neighbours)."""
    v = p_xy - center
    ang = np.deg2rad(np.arange(0, 360, 60))
    units = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return bool(np.all(units @ v <= isd_m / 2.0 + 1e-9))


def _sector_of(p_xy: np.ndarray, center: np.ndarray) -> int:
    """Sector index 0/1/2 by azimuth; boresights at 0, 120 and 240 degrees."""
    ang = np.degrees(np.arctan2(p_xy[1] - center[1], p_xy[0] - center[0]))
    return int(((ang + 60.0) % 360.0) // 120.0)


def _draw_in_hex(rng: np.random.Generator, center: np.ndarray, isd_m: float) -> np.ndarray:
    r = isd_m / np.sqrt(3.0)  # hexagon circumradius
    while True:
        p = center + rng.uniform(-r, r, size=2)
        if _in_hex(p, center, isd_m):
            return p

def _draw_in_sector(rng: np.random.Generator, center: np.ndarray, isd_m: float, sector: int) -> np.ndarray:
    while True:
        p = _draw_in_hex(rng, center, isd_m)
        if _sector_of(p, center) == sector:
            return p


def _draw_in_disc(rng: np.random.Generator, center: np.ndarray, radius: float) -> np.ndarray:
    r = radius * np.sqrt(rng.random())
    t = 2.0 * np.pi * rng.random()
    return center + np.array([r * np.cos(t), r * np.sin(t)])


def _building_centers(params: ScenarioParams, site_xy: np.ndarray) -> list[np.ndarray]:
    if params.buildings_per_site == 1:
        return [site_xy.copy()]
    centers = []
    for k in range(params.buildings_per_site):
        ang = np.deg2rad(120.0 * k)
        centers.append(site_xy + params.building_offset_m * np.array([np.cos(ang), np.sin(ang)]))
    return centers


def _place_cells(params: ScenarioParams, sites: np.ndarray,
                 rng: np.random.Generator, wrap: WrapConfig) -> tuple[list[Node], list]:
    """Drop the small-cell BSs; returns nodes plus per-cell UE drop regions."""
    cells: list[Node] = []
    regions: list = []  # per cell: ("rect", cx, cy, w, d) | ("disc", cx, cy, r) | ("sector", site, k)
    cid = 0
    if params.kind == "indoor_hotzone":
        for s, site in enumerate(sites):
            for b_xy in _building_centers(params, site):
                # Equally spaced along the long axis, ceiling mounted.
                xs = b_xy[0] + (np.arange(params.cells_per_building) - (params.cells_per_building - 1) / 2.0) \
                    * params.building_w_m / params.cells_per_building
                for x in xs:
                    sector = _sector_of(np.array([x, b_xy[1]]), site)
                    cells.append(Node(cid, "bs", x, b_xy[1], params.bs_height_m,
                                      s, s * params.sectors_per_site + sector, cid))
                    regions.append(("rect", b_xy[0], b_xy[1], params.building_w_m, params.building_d_m))
                    cid += 1
        return cells, regions

    for s, site in enumerate(sites):
        for k in range(params.sectors_per_site):
            if params.kind == "outdoor_cluster":
                center = None
                for _ in range(params.max_drop_attempts):
                    c = _draw_in_sector(rng, site, params.isd_m, k)
                    if np.linalg.norm(c - site) >= params.cluster_center_min_m:
                        center = c
                        break
                if center is None:
                    raise ConfigError("could not place cluster centre; relax cluster_center_min_m")
            placed: list[np.ndarray] = []
            for _ in range(params.cells_per_sector):
                pos = None
                for _ in range(params.max_drop_attempts):
                    if params.kind == "outdoor_cluster":
                        p = _draw_in_disc(rng, center, params.cluster_radius_m)
                    else:
                        p = _draw_in_sector(rng, site, params.isd_m, k)
                    if all(wrapped_distance(p, q, wrap) >= params.min_bs_sep_m for q in placed):
                        pos = p
                        break
                if pos is None:
                    raise ConfigError(
                        f"BS min separation {params.min_bs_sep_m} m unsatisfiable in sector "
                        f"{s}/{k} after {params.max_drop_attempts} attempts")
                placed.append(pos)
                cells.append(Node(cid, "bs", pos[0], pos[1], params.bs_height_m,
                                  s, s * params.sectors_per_site + k, cid))
                if params.kind == "outdoor_cluster":
                    regions.append(("disc", center[0], center[1], params.cluster_ue_radius_m))
                else:
                    # Small cells serve the hotspot they were deployed at, so
                    # UEs drop in a disc around their cell.
                    regions.append(("disc", pos[0], pos[1], params.ue_hotspot_radius_m))
                cid += 1
    return cells, regions


def _draw_in_region(rng: np.random.Generator, region) -> np.ndarray:
    tag = region[0]
    if tag == "rect":
        _, cx, cy, w, d = region
        return np.array([cx + rng.uniform(-w / 2, w / 2), cy + rng.uniform(-d / 2, d / 2)])
    _, cx, cy, r = region
    return _draw_in_disc(rng, np.array([cx, cy]), r)


def generate_layout(scenario_kind: str, rng_seed: int, params: ScenarioParams) -> NetworkLayout:
    """Generate one deterministic drop.

    Every UE associates with the small cell of strongest long-term received
    power (path loss + shadowing, equal BS powers). Placement is rejection
    sampled: a candidate position is accepted only when its strongest cell is
    the cell being filled, which yields exactly ``ues_per_cell_per_dir`` UEs
    per direction per cell while keeping the argmax-association property
    exact. Each attempt uses fresh large-scale draws; the accepted attempt
    index is stored per UE (``draw_salt``) so that the gain matrix rebuilds
    the identical draws.
    """
    params = ScenarioParams(**{**params.__dict__, "kind": scenario_kind})
    params.validate()
    wrap = make_wrap(params.isd_m)
    sites = site_positions(params)
    rng = np.random.default_rng(np.random.SeedSequence([rng_seed & 0xFFFFFFFF, _TAG_LAYOUT]))

    cells, regions = _place_cells(params, sites, rng, wrap)
    bs_xyz = np.array([[c.x, c.y, c.z] for c in cells])

    ues: list[Node] = []
    n_per = params.ues_per_cell_per_dir
    ue_id = 0
    for cell in cells:
        for direction in ("dl", "ul"):
            for _ in range(n_per):
                accepted: Optional[Node] = None
                for attempt in range(params.max_drop_attempts):
                    p = _draw_in_region(rng, regions[cell.cell])
                    horiz = wrapped_distance_matrix(p[None, :], bs_xyz[:, :2], wrap)[0]
                    if horiz.min() < params.min_bs_ue_m:
                        continue
                    gains = candidate_association_gains(
                        rng_seed, ue_id, attempt, p, params.ue_height_m,
                        bs_xyz, wrap, params.channel, params.kind)
                    if int(np.argmax(gains)) == cell.cell:
                        accepted = Node(ue_id, "ue", p[0], p[1], params.ue_height_m,
                                        cell.site, cell.sector, cell.cell, direction, attempt)
                        break
                if accepted is None:
                    raise ConfigError(
                        f"UE association for cell {cell.cell} ({direction}) failed after "
                        f"{params.max_drop_attempts} attempts; deployment parameters too tight")
                ues.append(accepted)
                ue_id += 1

    return NetworkLayout(params.kind, rng_seed, params, wrap, sites, cells, ues)

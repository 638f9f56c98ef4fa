"""Population-grid traffic model: gravity-paired demands with random bandwidth.

Source/destination cells are drawn with probability proportional to the
product of their populations (distinct cells only); each demand's bandwidth
is uniform on ``(0, c]`` where ``c`` is the ISL capacity.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources

import numpy as np


@dataclass(frozen=True)
class TrafficDemand:
    """One source-destination demand between geodetic points."""

    src_lat: float
    src_lon: float
    dst_lat: float
    dst_lon: float
    gbps: float


@dataclass
class PopulationGrid:
    """Cell-centre coordinates (degrees) with population counts."""

    lat: np.ndarray
    lon: np.ndarray
    population: np.ndarray

    def __post_init__(self):
        self.lat = np.asarray(self.lat, float)
        self.lon = np.asarray(self.lon, float)
        self.population = np.asarray(self.population, float)
        if not (len(self.lat) == len(self.lon) == len(self.population)) or len(self.lat) == 0:
            raise ValueError("grid arrays must be nonempty and aligned")
        if np.any(self.population < 0):
            raise ValueError("populations must be nonnegative")
        if np.any(np.abs(self.lat) > 90) or np.any(np.abs(self.lon) > 180):
            raise ValueError("coordinates must be valid geodetic degrees")

    @property
    def total(self) -> float:
        return float(self.population.sum())

    @classmethod
    def from_csv(cls, path) -> "PopulationGrid":
        lats, lons, pops = [], [], []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            required = {"lat", "lon", "population"}
            if reader.fieldnames is None or not required.issubset(reader.fieldnames):
                raise ValueError(f"population CSV must have header lat,lon,population")
            for row in reader:
                lats.append(float(row["lat"]))
                lons.append(float(row["lon"]))
                pops.append(float(row["population"]))
        return cls(np.array(lats), np.array(lons), np.array(pops))

    @classmethod
    def builtin(cls) -> "PopulationGrid":
        """Bundled coarse (5-degree) world population grid."""
        ref = resources.files("islnet").joinpath("data/population_5deg.csv")
        with resources.as_file(ref) as path:
            return cls.from_csv(path)


def gravity_demands(
    grid: PopulationGrid, count: int, capacity_gbps: float, seed: int
) -> list[TrafficDemand]:
    """Draw ``count`` demands under the gravity model, deterministic per seed."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if grid.total <= 0:
        raise ValueError("population grid has no population")
    weights = grid.population / grid.total
    nonzero = int(np.count_nonzero(weights))
    if nonzero < 2:
        raise ValueError("gravity pairing needs at least two populated cells")
    rng = np.random.default_rng(seed)
    src_idx = np.empty(count, dtype=np.int64)
    dst_idx = np.empty(count, dtype=np.int64)
    filled = 0
    n = len(weights)
    while filled < count:
        batch = max(count - filled, 64)
        i = rng.choice(n, size=batch, p=weights)
        j = rng.choice(n, size=batch, p=weights)
        keep = i != j
        take = min(int(keep.sum()), count - filled)
        src_idx[filled : filled + take] = i[keep][:take]
        dst_idx[filled : filled + take] = j[keep][:take]
        filled += take
    # uniform on (0, c]: flip the half-open interval of random()
    gbps = capacity_gbps - rng.uniform(0.0, capacity_gbps, size=count)
    return [
        TrafficDemand(
            src_lat=float(grid.lat[s]),
            src_lon=float(grid.lon[s]),
            dst_lat=float(grid.lat[d]),
            dst_lon=float(grid.lon[d]),
            gbps=float(g),
        )
        for s, d, g in zip(src_idx, dst_idx, gbps)
    ]


def write_demands_csv(path, demands: list[TrafficDemand]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "src_lat", "src_lon", "dst_lat", "dst_lon", "gbps"])
        for i, d in enumerate(demands):
            w.writerow(
                [i, f"{d.src_lat:.10g}", f"{d.src_lon:.10g}", f"{d.dst_lat:.10g}",
                 f"{d.dst_lon:.10g}", f"{d.gbps:.10g}"]
            )

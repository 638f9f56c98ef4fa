"""Connection features, spanning patterns, motifs, lattices, and ISL graphs.

A connection feature ``(x, y)`` is the modular (plane, slot) offset between
two linked satellites.  Canonical storage uses ``x > 0`` for inter-plane
features and ``x == 0`` with a negative nearest-slot ``y`` for intra-plane
features; the nearest-neighbour intra feature ``(0, -1)`` is implicitly part
of every spanning pattern.  A motif of size one is a single spanning
pattern stamped onto every satellite; a lattice constrains the global
layout and is realised by deriving Walker parameters that conform to it.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .geometry import ConstellationConfig, SatelliteId, WalkerKind, offset_pair_series


class StructureWarning(UserWarning):
    """Raised for degenerate but usable topologies (collapsed edges etc.)."""


class GridMode(str, Enum):
    PLUS = "+Grid"
    STAR = "*Grid"


class LatticeKind(str, Enum):
    L1 = "L1"
    L2 = "L2"
    L3 = "L3"
    L4 = "L4"
    L5 = "L5"


# Rectangular-family lattices pair with 4-ISL patterns, the staggered
# family with 6-ISL patterns; L1 is the unconstrained baseline.
_LATTICE_GRID = {
    LatticeKind.L2: GridMode.PLUS,
    LatticeKind.L3: GridMode.PLUS,
    LatticeKind.L4: GridMode.STAR,
    LatticeKind.L5: GridMode.STAR,
}


@dataclass(frozen=True, order=True)
class ConnectionFeature:
    """Modular (plane, slot) offset between linked satellites."""

    dx: int
    dy: int

    def __post_init__(self):
        if self.dx == 0 and self.dy == 0:
            raise ValueError("connection feature (0,0) is undefined")

    @property
    def order(self) -> int:
        return math.gcd(abs(self.dx), abs(self.dy))

    @property
    def is_intra(self) -> bool:
        return self.dx == 0

    def __str__(self) -> str:
        return f"({self.dx},{self.dy})"


_FEATURE_RE = re.compile(r"^\(\s*(-?\d+)\s*,\s*(-?\d+)\s*\)$")


def parse_feature(text: str) -> ConnectionFeature:
    m = _FEATURE_RE.match(text.strip())
    if not m:
        raise ValueError(f"malformed connection feature {text!r}; expected '(x,y)'")
    return ConnectionFeature(int(m.group(1)), int(m.group(2)))


def feature_order(feature: ConnectionFeature) -> int:
    """gcd of the absolute offsets, with gcd(0, y) = |y|."""
    return feature.order


def _signed_wrap(value: int, modulus: int) -> int:
    """Map to the representative in (-modulus/2, modulus/2]."""
    w = value % modulus
    return w - modulus if 2 * w > modulus else w


def feature_between(a: SatelliteId, b: SatelliteId, config: ConstellationConfig) -> ConnectionFeature:
    """Canonical connection feature linking two distinct satellites.

    Symmetric: both orderings of the pair yield the same feature.
    """
    np_, mp = config.n_planes, config.sats_per_plane
    dx = (b.plane - a.plane) % np_
    dy = (b.slot - a.slot) % mp
    if dx == 0:
        if dy == 0:
            raise ValueError("satellites coincide")
        return ConnectionFeature(0, -min(dy, mp - dy))
    sx = _signed_wrap(dx, np_)
    y_fwd = _signed_wrap(dy, mp)
    y_rev = _signed_wrap(-dy, mp)
    if sx < 0:
        return ConnectionFeature(-sx, y_rev)
    if 2 * sx == np_ and y_rev < y_fwd:
        return ConnectionFeature(sx, y_rev)
    return ConnectionFeature(sx, y_fwd)


_INTRA_NEAREST = ConnectionFeature(0, -1)


@dataclass(frozen=True)
class SpanningPattern:
    """Set of connection features realised by every satellite.

    ``inter`` holds the inter-plane features (x != 0); ``intra`` always
    contains the nearest-neighbour feature (0, -1).  Patterns implying more
    than 6 ISLs per satellite are rejected (transceiver budget).
    """

    inter: tuple[ConnectionFeature, ...]
    intra: tuple[ConnectionFeature, ...] = (_INTRA_NEAREST,)

    def __post_init__(self):
        intra = tuple(dict.fromkeys((_INTRA_NEAREST,) + tuple(self.intra)))
        object.__setattr__(self, "intra", intra)
        object.__setattr__(self, "inter", tuple(dict.fromkeys(self.inter)))
        if any(f.dx != 0 for f in self.intra):
            raise ValueError("intra features must have x == 0")
        if any(f.dx == 0 for f in self.inter):
            raise ValueError("inter features must have x != 0")
        if 2 * (len(self.intra) + len(self.inter)) > 6:
            raise ValueError("pattern implies more than 6 ISLs per satellite")

    @property
    def features(self) -> tuple[ConnectionFeature, ...]:
        return self.intra + self.inter

    @property
    def isl_count(self) -> int:
        return 2 * (len(self.intra) + len(self.inter))

    @property
    def grid_mode(self) -> GridMode:
        return GridMode.PLUS if len(self.inter) <= 1 else GridMode.STAR

    def __str__(self) -> str:
        return "+".join(str(f) for f in self.inter) or "intra-only"


@dataclass(frozen=True)
class Motif:
    """Size-1 motif: one spanning pattern with at most two inter features."""

    pattern: SpanningPattern

    def __post_init__(self):
        if len(self.pattern.inter) > 2:
            raise ValueError("motifs are limited to |inter| <= 2")

    @property
    def size(self) -> int:
        return 1

    @property
    def grid_mode(self) -> GridMode:
        return self.pattern.grid_mode

    def __str__(self) -> str:
        return str(self.pattern)


def parse_motif(text: str) -> Motif:
    """Parse a motif string such as ``"(1,-1)"`` or ``"(1,0)+(1,-1)"``."""
    parts = [p for p in text.replace(" ", "").split("+") if p]
    if not parts:
        raise ValueError("empty motif string")
    feats = [parse_feature(p) for p in parts]
    inter = tuple(f for f in feats if f.dx != 0)
    intra = tuple(f for f in feats if f.dx == 0)
    return Motif(SpanningPattern(inter=inter, intra=(_INTRA_NEAREST,) + intra))


_PLUS_GRID_INTER = (
    ConnectionFeature(1, 1),
    ConnectionFeature(1, 0),
    ConnectionFeature(1, -1),
    ConnectionFeature(1, -2),
)


def enumerate_candidate_motifs(grid: GridMode | None = None) -> list[Motif]:
    """Candidate motif set: 4 single-feature and 6 paired-feature patterns."""
    plus = [Motif(SpanningPattern(inter=(f,))) for f in _PLUS_GRID_INTER]
    star = [
        Motif(SpanningPattern(inter=(_PLUS_GRID_INTER[i], _PLUS_GRID_INTER[j])))
        for i in range(len(_PLUS_GRID_INTER))
        for j in range(i + 1, len(_PLUS_GRID_INTER))
    ]
    if grid is GridMode.PLUS:
        return plus
    if grid is GridMode.STAR:
        return star
    return plus + star


def lattice_grid_mode(lattice: LatticeKind) -> GridMode | None:
    return _LATTICE_GRID.get(lattice)


def _aspect_ratio(lattice: LatticeKind, inclination: float, kind: WalkerKind) -> float:
    rho = math.sin(inclination)
    if kind is WalkerKind.STAR:
        rho *= 2.0  # star shells halve the RAAN spacing
    if lattice is LatticeKind.L5:
        rho *= math.sqrt(3.0) / 2.0
    return rho


def _equator_deviation_from_orthogonal(config: ConstellationConfig, feature: ConnectionFeature) -> float:
    """|deviation - pi/2| of an inter-plane feature for an equatorial observer."""
    d_raan = feature.dx * config.raan_spacing
    d_arglat = 2.0 * math.pi * feature.dy / config.sats_per_plane + feature.dx * config.phase_bias
    _, cos_fwd, cos_rev = offset_pair_series(
        config.shell_radius_km, config.inclination, d_raan, d_arglat, np.array([0.0])
    )
    dev = 0.5 * (np.arccos(np.clip(cos_fwd, -1, 1)) + np.arccos(np.clip(cos_rev, -1, 1)))
    return float(abs(dev[0] - math.pi / 2.0))


def prm_gen(
    inclination: float,
    max_sats: int,
    lattice: LatticeKind,
    kind: WalkerKind = WalkerKind.DELTA,
    grid: GridMode = GridMode.PLUS,
    *,
    altitude_km: float = 1000.0,
    base_shape: tuple[int, int, int] | None = None,
    motif: Motif | None = None,
) -> ConstellationConfig:
    """Derive Walker parameters conforming to a target lattice.

    L3/L5 fix the plane/slot aspect ratio (square and near-hexagonal cells
    at the equator) via floor formulas and cap the total at ``max_sats``.
    L2/L4 keep the base shape and search the phase factor that brings the
    motif's inter-plane links closest to orthogonal at the equator (for L4,
    minimising the worse of the two).  L1 applies no constraint and returns
    the base shape unchanged.

    ``base_shape`` is (n_planes, sats_per_plane, phase_factor) of the
    original constellation and is required for L1/L2/L4.
    """
    if max_sats < 4:
        raise ValueError("max_sats must be >= 4")
    wanted = lattice_grid_mode(lattice)
    if wanted is not None and wanted is not grid:
        raise ValueError(f"lattice {lattice.value} is incompatible with {grid.value} mode")

    if lattice is LatticeKind.L1:
        if base_shape is None:
            raise ValueError("L1 returns the base shape; base_shape is required")
        np_, mp, f = base_shape
        return ConstellationConfig(np_, mp, f, inclination, altitude_km, kind)

    if lattice in (LatticeKind.L2, LatticeKind.L4):
        if base_shape is None:
            raise ValueError(f"{lattice.value} keeps the base shape; base_shape is required")
        np_, mp, _ = base_shape
        if motif is None:
            inter = (
                (ConnectionFeature(1, 0),)
                if lattice is LatticeKind.L2
                else (ConnectionFeature(1, 0), ConnectionFeature(1, -1))
            )
            motif = Motif(SpanningPattern(inter=inter))
        best_f, best_dev = 0, math.inf
        for f in range(np_):
            cfg = ConstellationConfig(np_, mp, f, inclination, altitude_km, kind)
            dev = max(_equator_deviation_from_orthogonal(cfg, feat) for feat in motif.pattern.inter)
            if dev < best_dev - 1e-12:
                best_f, best_dev = f, dev
        return ConstellationConfig(np_, mp, best_f, inclination, altitude_km, kind)

    # L3 / L5: aspect-ratio constraint with floor quantisation
    rho = _aspect_ratio(lattice, inclination, kind)
    mp_star = int(math.floor(math.sqrt(rho * max_sats)))
    if mp_star < 1:
        raise ValueError("max_sats too small for the requested lattice")
    np_star = int(math.floor(max_sats / mp_star))
    cot_i = math.tan(math.pi / 2.0 - inclination)
    if lattice is LatticeKind.L3:
        # polar limit: no inter-plane skew is needed, the formula diverges
        f_star = 0 if cot_i == 0.0 else int(math.floor(np_star - np_star / cot_i))
    else:
        f_star = -int(math.floor(np_star * cot_i - 0.5))
    return ConstellationConfig(np_star, mp_star, f_star, inclination, altitude_km, kind)


@dataclass(frozen=True)
class IslGraph:
    """Undirected ISL graph over a Walker shell.

    Edges are stored observer-oriented: reading the modular offset from
    ``obs`` to ``tgt`` reproduces the stored canonical feature.  Arrays are
    aligned and must be treated as immutable.
    """

    config: ConstellationConfig
    obs: np.ndarray
    tgt: np.ndarray
    feat_x: np.ndarray
    feat_y: np.ndarray
    capacity_gbps: np.ndarray = field(repr=False, default=None)

    @property
    def n_nodes(self) -> int:
        return self.config.n_sats

    @property
    def n_edges(self) -> int:
        return len(self.obs)

    def degrees(self) -> np.ndarray:
        return np.bincount(
            np.concatenate([self.obs, self.tgt]), minlength=self.n_nodes
        )

    def features(self) -> list[ConnectionFeature]:
        seen = dict.fromkeys(
            ConnectionFeature(int(x), int(y)) for x, y in zip(self.feat_x, self.feat_y)
        )
        return list(seen)

    def feature_mask(self, feature: ConnectionFeature) -> np.ndarray:
        return (self.feat_x == feature.dx) & (self.feat_y == feature.dy)

    def edge_ids(self) -> list[str]:
        return [f"{o}-{t}" for o, t in zip(self.obs, self.tgt)]

    def edge_lengths(self, positions: np.ndarray) -> np.ndarray:
        d = positions[self.obs] - positions[self.tgt]
        return np.linalg.norm(d, axis=1)


def _reduce_feature(feature: ConnectionFeature, config: ConstellationConfig) -> tuple[int, int]:
    rx = feature.dx % config.n_planes
    ry = feature.dy % config.sats_per_plane
    if rx == 0 and ry == 0:
        raise ValueError(f"feature {feature} reduces to (0,0) on this constellation")
    return rx, ry


def build_feature_graph(
    config: ConstellationConfig,
    features: list[ConnectionFeature],
    capacity_gbps: float = 10.0,
) -> IslGraph:
    """Edge set obtained by stamping each feature onto every satellite.

    No per-satellite ISL budget is enforced; use this for measurement
    graphs that union many candidate features.  Coincident edges are
    collapsed with a warning.
    """
    np_, mp = config.n_planes, config.sats_per_plane
    n = np.repeat(np.arange(np_), mp)
    m = np.tile(np.arange(mp), np_)
    flat = n * mp + m
    seen: dict[tuple[int, int], int] = {}
    obs, tgt, fx, fy = [], [], [], []
    collapsed = 0
    for feature in features:
        _reduce_feature(feature, config)
        n2 = (n + feature.dx) % np_
        m2 = (m + feature.dy) % mp
        flat2 = n2 * mp + m2
        for a, b in zip(flat, flat2):
            key = (a, b) if a < b else (b, a)
            if key in seen:
                collapsed += 1
                continue
            seen[key] = len(obs)
            obs.append(int(a))
            tgt.append(int(b))
            fx.append(feature.dx)
            fy.append(feature.dy)
    order = np.lexsort((np.array(tgt), np.array(obs)))
    graph = IslGraph(
        config=config,
        obs=np.asarray(obs, np.int32)[order],
        tgt=np.asarray(tgt, np.int32)[order],
        feat_x=np.asarray(fx, np.int16)[order],
        feat_y=np.asarray(fy, np.int16)[order],
        capacity_gbps=np.full(len(obs), float(capacity_gbps)),
    )
    if collapsed:
        warnings.warn(
            f"collapsed {collapsed} coincident edges on the {np_}x{mp} shell",
            StructureWarning,
            stacklevel=2,
        )
    return graph


def build_topology(
    config: ConstellationConfig, motif: Motif, capacity_gbps: float = 10.0
) -> IslGraph:
    """ISL graph obtained by applying the motif's pattern to every satellite."""
    graph = build_feature_graph(config, list(motif.pattern.features), capacity_gbps)
    degrees = graph.degrees()
    expected = motif.pattern.isl_count
    if degrees.min() != expected or degrees.max() != expected:
        warnings.warn(
            f"non-uniform degree {degrees.min()}..{degrees.max()} "
            f"(expected {expected}); small shells collapse coincident edges",
            StructureWarning,
            stacklevel=2,
        )
    return graph

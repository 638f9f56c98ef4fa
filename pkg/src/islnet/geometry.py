"""Walker constellations, circular two-body propagation, and relative geometry.

The Earth model is a sphere of radius ``EARTH_RADIUS_KM``; every satellite
flies a circular orbit of radius ``R_E + h`` at a shared inclination.
Plane ``n`` of an ``N_P x M_P`` shell has RAAN ``n * raan_spacing`` and
satellite ``(n, m)`` sits at argument of latitude
``2*pi*m/M_P + n*phase_bias + omega*t``.

The satellite-centred frame used for link pointing is VVLH: +x along the
velocity vector, +z toward the Earth centre, +y completing the right-handed
triad (minus the orbit normal).  Azimuth is measured in the local x-y plane
from +x, elevation from that plane toward the target, and the deviation
angle combines both as ``arccos(cos(az) * cos(el))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .constants import EARTH_RADIUS_KM, MU_EARTH_KM3_S2


class WalkerKind(str, Enum):
    DELTA = "delta"
    STAR = "star"


@dataclass(frozen=True)
class ConstellationConfig:
    """Walker shell parameters: N_P planes of M_P slots with phase factor F.

    The phase factor is stored reduced modulo ``n_planes`` (negative inputs
    accepted).  Delta shells spread plane RAANs over a full turn, star
    shells over half a turn.
    """

    n_planes: int
    sats_per_plane: int
    phase_factor: int = 0
    inclination: float = math.radians(53.0)
    altitude_km: float = 1000.0
    kind: WalkerKind = WalkerKind.DELTA

    def __post_init__(self):
        if self.n_planes < 1 or self.sats_per_plane < 1:
            raise ValueError("n_planes and sats_per_plane must be >= 1")
        if self.altitude_km <= 0:
            raise ValueError("altitude_km must be positive")
        if not 0.0 < self.inclination <= math.pi / 2 + 1e-12:
            raise ValueError("inclination must lie in (0, pi/2] radians")
        object.__setattr__(self, "kind", WalkerKind(self.kind))
        object.__setattr__(self, "phase_factor", int(self.phase_factor) % self.n_planes)

    @property
    def n_sats(self) -> int:
        return self.n_planes * self.sats_per_plane

    @property
    def raan_spacing(self) -> float:
        span = 2.0 * math.pi if self.kind is WalkerKind.DELTA else math.pi
        return span / self.n_planes

    @property
    def phase_bias(self) -> float:
        return 2.0 * math.pi * self.phase_factor / (self.sats_per_plane * self.n_planes)

    @property
    def shell_radius_km(self) -> float:
        return EARTH_RADIUS_KM + self.altitude_km

    @property
    def mean_motion(self) -> float:
        """Orbital angular rate in rad/s."""
        return math.sqrt(MU_EARTH_KM3_S2 / self.shell_radius_km**3)

    @property
    def period_s(self) -> float:
        return 2.0 * math.pi / self.mean_motion


@dataclass(frozen=True, order=True)
class SatelliteId:
    """2-D satellite coordinate: orbital plane index and in-plane slot."""

    plane: int
    slot: int

    def flat(self, config: ConstellationConfig) -> int:
        return self.plane * config.sats_per_plane + self.slot

    @classmethod
    def from_flat(cls, index: int, config: ConstellationConfig) -> "SatelliteId":
        return cls(index // config.sats_per_plane, index % config.sats_per_plane)


@dataclass(frozen=True)
class OrbitalElements:
    """Circular-orbit elements: radius, inclination, RAAN and epoch phase."""

    radius_km: float
    inclination: float
    raan: float
    arg_lat_epoch: float

    @property
    def mean_motion(self) -> float:
        return math.sqrt(MU_EARTH_KM3_S2 / self.radius_km**3)


@dataclass(frozen=True)
class SatelliteState:
    """Inertial position (km) and velocity (km/s) at a simulation epoch."""

    position: np.ndarray
    velocity: np.ndarray
    epoch: float


@dataclass(frozen=True)
class RelativeGeometry:
    """Target as seen from an observer's VVLH frame."""

    range_km: float
    azimuth: float
    elevation: float
    deviation: float


def deviation_angle(azimuth, elevation):
    """Angle between the link direction and the observer's velocity axis."""
    return np.arccos(np.clip(np.cos(azimuth) * np.cos(elevation), -1.0, 1.0))


def generate_constellation(config: ConstellationConfig) -> list[tuple[SatelliteId, OrbitalElements]]:
    """Lay out the full Walker shell as (id, elements) pairs in flat-id order."""
    out = []
    for n in range(config.n_planes):
        for m in range(config.sats_per_plane):
            elements = OrbitalElements(
                radius_km=config.shell_radius_km,
                inclination=config.inclination,
                raan=n * config.raan_spacing,
                arg_lat_epoch=2.0 * math.pi * m / config.sats_per_plane + n * config.phase_bias,
            )
            out.append((SatelliteId(n, m), elements))
    return out


def propagate(elements: OrbitalElements, t: float) -> SatelliteState:
    """Circular two-body state at ``t`` seconds from epoch."""
    if t < 0:
        raise ValueError("t must be >= 0")
    u = elements.arg_lat_epoch + elements.mean_motion * t
    pos, vel = _states_from_angles(
        np.asarray(elements.raan), np.asarray(u), elements.inclination, elements.radius_km
    )
    return SatelliteState(position=pos, velocity=vel, epoch=t)


def _states_from_angles(raan, arg_lat, inclination: float, radius_km: float):
    """Positions/velocities from RAAN and argument of latitude (broadcastable)."""
    cu, su = np.cos(arg_lat), np.sin(arg_lat)
    co, so = np.cos(raan), np.sin(raan)
    ci, si = math.cos(inclination), math.sin(inclination)
    # node direction P and in-plane normal Q of each orbital plane
    px, py, pz = co, so, np.zeros_like(co)
    qx, qy, qz = -so * ci, co * ci, np.full_like(co, si)
    pos = radius_km * np.stack([px * cu + qx * su, py * cu + qy * su, pz * cu + qz * su], axis=-1)
    v = radius_km * math.sqrt(MU_EARTH_KM3_S2 / radius_km**3)
    vel = v * np.stack([-px * su + qx * cu, -py * su + qy * cu, -pz * su + qz * cu], axis=-1)
    return pos, vel


def constellation_states(config: ConstellationConfig, t: float):
    """Positions and velocities of all satellites at epoch ``t``, flat-id order."""
    n = np.repeat(np.arange(config.n_planes), config.sats_per_plane)
    m = np.tile(np.arange(config.sats_per_plane), config.n_planes)
    raan = n * config.raan_spacing
    u = 2.0 * math.pi * m / config.sats_per_plane + n * config.phase_bias + config.mean_motion * t
    return _states_from_angles(raan, u, config.inclination, config.shell_radius_km)


def constellation_positions(config: ConstellationConfig, t: float) -> np.ndarray:
    return constellation_states(config, t)[0]


def relative_geometry(observer: SatelliteState, target: SatelliteState) -> RelativeGeometry:
    """Express the target in the observer's VVLH frame.

    Raises ``ValueError`` for coincident positions, where the pointing
    direction is undefined.
    """
    d = np.asarray(target.position, float) - np.asarray(observer.position, float)
    rng = float(np.linalg.norm(d))
    if rng < 1e-9:
        raise ValueError("relative geometry undefined for coincident satellites")
    x_hat = np.asarray(observer.velocity, float)
    x_hat = x_hat / np.linalg.norm(x_hat)
    z_hat = -np.asarray(observer.position, float)
    z_hat = z_hat / np.linalg.norm(z_hat)
    y_hat = np.cross(z_hat, x_hat)
    dx, dy, dz = float(d @ x_hat), float(d @ y_hat), float(d @ z_hat)
    azimuth = math.atan2(dy, dx)
    elevation = math.atan2(-dz, math.hypot(dx, dy))
    return RelativeGeometry(
        range_km=rng,
        azimuth=azimuth,
        elevation=elevation,
        deviation=float(deviation_angle(azimuth, elevation)),
    )


def _offset_matrix(d_raan: float, inclination: float) -> np.ndarray:
    """Rotation taking a plane offset by ``d_raan`` into the observer's plane frame."""
    co, so = math.cos(d_raan), math.sin(d_raan)
    ci, si = math.cos(inclination), math.sin(inclination)
    return np.array(
        [
            [co, -so * ci, so * si],
            [ci * so, ci * ci * co + si * si, ci * si * (1.0 - co)],
            [-si * so, ci * si * (1.0 - co), si * si * co + ci * ci],
        ]
    )


def offset_pair_series(
    radius_km: float,
    inclination: float,
    d_raan: float,
    d_arglat: float,
    arg_lat,
):
    """Range and deviation cosines for a fixed-offset satellite pair.

    The pair is (observer, target) where the target's plane is offset by
    ``d_raan`` and its argument of latitude leads the observer's by
    ``d_arglat``.  ``arg_lat`` is an array of observer arguments of
    latitude; returns ``(range_km, cos_dev_fwd, cos_dev_rev)`` with the
    same shape, where *fwd* points observer->target and *rev* the reverse.

    Coplanar pairs (``d_raan == 0``) reduce to constants: the pair rotates
    rigidly, so range and deviation are exactly time-invariant.
    """
    u = np.asarray(arg_lat, float)
    r = radius_km
    if d_raan == 0.0:
        if abs(math.sin(d_arglat / 2.0)) < 1e-15:
            raise ValueError("coincident intra-plane offset")
        span = 2.0 * r * abs(math.sin(d_arglat / 2.0))
        cf = r * math.sin(d_arglat) / span
        ones = np.ones_like(u)
        return span * ones, cf * ones, -cf * ones

    cu, su = np.cos(u), np.sin(u)
    ut = u + d_arglat
    cut, sut = np.cos(ut), np.sin(ut)

    bf = _offset_matrix(d_raan, inclination)
    atx = r * (bf[0, 0] * cut + bf[0, 1] * sut)
    aty = r * (bf[1, 0] * cut + bf[1, 1] * sut)
    atz = r * (bf[2, 0] * cut + bf[2, 1] * sut)
    dx = -su * atx + cu * aty
    dr = cu * atx + su * aty - r
    rng = np.sqrt(dx * dx + atz * atz + dr * dr)
    cos_fwd = dx / rng

    br = _offset_matrix(-d_raan, inclination)
    aox = r * (br[0, 0] * cu + br[0, 1] * su)
    aoy = r * (br[1, 0] * cu + br[1, 1] * su)
    dx_rev = -sut * aox + cut * aoy
    cos_rev = dx_rev / rng
    return rng, cos_fwd, cos_rev

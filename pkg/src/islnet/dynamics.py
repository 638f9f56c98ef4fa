"""Link dynamics: area swept rate (ASR) and stochastic ISL availability.

The swept-area rate of a link over an interval is
``0.5 * |sin(dev(t2) - dev(t1))| * range(t1) * range(t2) / (t2 - t1)``,
averaged over the two link endpoints.  Min-max normalised ASR drives a
per-step disconnection probability ``fail_coefficient * ASR*``; each
disconnection is followed by a fixed recovery time.  Coplanar intra-plane
links rotate rigidly, so their ASR is exactly zero and they never fail.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .geometry import OrbitalElements, offset_pair_series, propagate, relative_geometry
from .structure import IslGraph


@dataclass(frozen=True)
class AsrSample:
    """Swept-area rate of one edge over one sampling interval."""

    edge: int
    t1: float
    t2: float
    asr: float


@dataclass(frozen=True)
class AvailabilityModel:
    """Failure/recovery parameters of the stochastic ISL model.

    ``fail_coefficient`` scales normalised ASR into a per-step failure
    probability; a failed link stays down for ``recovery_s`` seconds.
    """

    fail_coefficient: float = 0.05
    recovery_s: float = 60.0
    step_s: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.fail_coefficient <= 1.0:
            raise ValueError("fail_coefficient must lie in [0, 1]")
        if self.recovery_s <= 0 or self.step_s <= 0:
            raise ValueError("recovery_s and step_s must be positive")

    @property
    def recovery_steps(self) -> int:
        return int(math.ceil(self.recovery_s / self.step_s))


@dataclass
class EdgeDynamics:
    """Per-edge ASR per interval plus time-averaged link lengths."""

    asr: np.ndarray          # [n_edges, n_steps], km^2/s
    mean_length_km: np.ndarray  # [n_edges]
    step_s: float


@dataclass
class AvailabilityTrace:
    """Boolean up/down state per edge per step."""

    up: np.ndarray           # bool [n_edges, n_steps]
    step_s: float

    @property
    def n_steps(self) -> int:
        return self.up.shape[1]

    @property
    def horizon_s(self) -> float:
        return self.n_steps * self.step_s


def asr(observer: OrbitalElements, target: OrbitalElements, t1: float, t2: float) -> float:
    """Endpoint-averaged swept-area rate of a satellite pair, km^2/s."""
    if t2 <= t1:
        raise ValueError("t2 must exceed t1")
    total = 0.0
    for a, b in ((observer, target), (target, observer)):
        g1 = relative_geometry(propagate(a, t1), propagate(b, t1))
        g2 = relative_geometry(propagate(a, t2), propagate(b, t2))
        total += 0.5 * abs(math.sin(g2.deviation - g1.deviation)) * g1.range_km * g2.range_km
    return 0.5 * total / (t2 - t1)


def sample_epochs(model: AvailabilityModel, horizon_s: float) -> np.ndarray:
    """Fence-post epochs covering the horizon at the model's step."""
    if horizon_s < 10 * model.step_s:
        raise ValueError("horizon must cover at least 10 steps")
    n_steps = int(round(horizon_s / model.step_s))
    return np.arange(n_steps + 1) * model.step_s


def edge_dynamics(graph: IslGraph, epochs: np.ndarray) -> EdgeDynamics:
    """ASR and mean length series for every edge of the graph.

    Edges are processed in groups sharing the same (feature, plane-wrap)
    offsets, so each group is one vectorised evaluation.  Plane wraparound
    matters: the wrapped edges of a feature see a different RAAN gap (and,
    for nonzero phase factors, a different phase lead) than interior ones.
    """
    cfg = graph.config
    np_, mp = cfg.n_planes, cfg.sats_per_plane
    epochs = np.asarray(epochs, float)
    dt = np.diff(epochs)
    n_edges = graph.n_edges
    asr_mat = np.zeros((n_edges, len(dt)))
    mean_len = np.zeros(n_edges)

    obs_plane = graph.obs // mp
    obs_slot = graph.obs % mp
    u0 = 2.0 * math.pi * obs_slot / mp + obs_plane * cfg.phase_bias

    feats = np.stack([graph.feat_x.astype(int), graph.feat_y.astype(int)], axis=1)
    wrap = (obs_plane + graph.feat_x) >= np_
    for fx, fy in np.unique(feats, axis=0):
        for wrapped in (False, True):
            mask = (graph.feat_x == fx) & (graph.feat_y == fy) & (wrap == wrapped)
            idx = np.flatnonzero(mask)
            if idx.size == 0:
                continue
            x_eff = int(fx) - (np_ if wrapped else 0)
            d_raan = x_eff * cfg.raan_spacing
            d_arglat = 2.0 * math.pi * int(fy) / mp + x_eff * cfg.phase_bias
            if fx == 0:
                # coplanar: rigid rotation, constant range, zero ASR
                span = 2.0 * cfg.shell_radius_km * abs(math.sin(d_arglat / 2.0))
                mean_len[idx] = span
                continue
            u = u0[idx, None] + cfg.mean_motion * epochs[None, :]
            rng, cf, cr = offset_pair_series(
                cfg.shell_radius_km, cfg.inclination, d_raan, d_arglat, u
            )
            gf = np.arccos(np.clip(cf, -1.0, 1.0))
            gr = np.arccos(np.clip(cr, -1.0, 1.0))
            sweep = 0.5 * (np.abs(np.sin(np.diff(gf, axis=1))) + np.abs(np.sin(np.diff(gr, axis=1))))
            asr_mat[idx] = 0.5 * sweep * rng[:, 1:] * rng[:, :-1] / dt[None, :]
            mean_len[idx] = rng.mean(axis=1)
    return EdgeDynamics(asr=asr_mat, mean_length_km=mean_len, step_s=float(dt[0]))


def edge_asr_samples(graph: IslGraph, epochs: np.ndarray, edge: int) -> list[AsrSample]:
    """Interval-by-interval ASR records for one edge."""
    dyn = edge_dynamics(graph, np.asarray(epochs, float))
    return [
        AsrSample(edge=edge, t1=float(epochs[s]), t2=float(epochs[s + 1]), asr=float(v))
        for s, v in enumerate(dyn.asr[edge])
    ]


def normalize_asr(values: np.ndarray, lo: float | None = None, hi: float | None = None) -> np.ndarray:
    """Min-max normalise ASR values; a degenerate range maps everything to 0.

    Pass explicit ``lo``/``hi`` to share one scale across several
    candidate structures.
    """
    values = np.asarray(values, float)
    lo = float(values.min()) if lo is None else lo
    hi = float(values.max()) if hi is None else hi
    if hi <= lo:
        return np.zeros_like(values)
    return np.clip((values - lo) / (hi - lo), 0.0, 1.0)


def _failure_draws(n_edges: int, n_steps: int, seed: int) -> np.ndarray:
    """Uniform draws from independent per-edge substreams."""
    draws = np.empty((n_edges, n_steps))
    for e in range(n_edges):
        draws[e] = np.random.default_rng([seed, e]).random(n_steps)
    return draws


def simulate_availability(
    graph: IslGraph,
    model: AvailabilityModel,
    horizon_s: float,
    *,
    asr_star: np.ndarray | None = None,
) -> AvailabilityTrace:
    """Simulate per-edge availability over the horizon.

    Every edge starts up.  At each step an up edge fails with probability
    ``fail_coefficient * ASR*`` (the step at which the failure is drawn
    still counts as up) and then stays down for the recovery time.  When
    ``asr_star`` is omitted it is computed from this graph alone; callers
    comparing several structures should normalise on a shared scale and
    pass the result in.
    """
    epochs = sample_epochs(model, horizon_s)
    if asr_star is None:
        asr_star = normalize_asr(edge_dynamics(graph, epochs).asr)
    if asr_star.shape[1] != len(epochs) - 1:
        raise ValueError("asr_star step count does not match the horizon")
    n_edges, n_steps = asr_star.shape
    p = model.fail_coefficient * asr_star
    draws = _failure_draws(n_edges, n_steps, model.seed)
    k = model.recovery_steps
    up = np.ones((n_edges, n_steps), dtype=bool)
    down = np.zeros(n_edges, dtype=np.int64)
    for s in range(n_steps):
        is_down = down > 0
        up[is_down, s] = False
        down[is_down] -= 1
        failed = ~is_down & (draws[:, s] < p[:, s])
        down[failed] = k
    return AvailabilityTrace(up=up, step_s=model.step_s)


def availability_ratio(trace: AvailabilityTrace, edge: int | None = None):
    """Time fraction an edge (or every edge) was up."""
    if trace.n_steps == 0:
        raise ValueError("empty trace")
    if edge is None:
        return trace.up.mean(axis=1)
    return float(trace.up[edge].mean())


def feature_availability(graph: IslGraph, ratios: np.ndarray) -> dict[str, float]:
    """Mean availability ratio per connection feature."""
    out: dict[str, float] = {}
    for feature in graph.features():
        mask = graph.feature_mask(feature)
        out[str(feature)] = float(ratios[mask].mean())
    return out


def calibrate_fail_coefficient(
    graph: IslGraph,
    model: AvailabilityModel,
    horizon_s: float,
    target_ra: float,
    feature_masks: list[np.ndarray],
    *,
    asr_star: np.ndarray | None = None,
    tol: float = 1e-4,
    max_iter: int = 40,
) -> float:
    """Bisection fit of ``fail_coefficient`` to a target availability.

    The fitted statistic is the average over ``feature_masks`` of the mean
    availability ratio of each masked edge group.  Draws are fixed by the
    model seed, so the statistic is deterministic and non-increasing in the
    coefficient, and bisection converges.
    """
    if not 0.0 < target_ra < 1.0:
        raise ValueError("target_ra must lie strictly between 0 and 1")
    epochs = sample_epochs(model, horizon_s)
    if asr_star is None:
        asr_star = normalize_asr(edge_dynamics(graph, epochs).asr)

    def achieved(alpha: float) -> float:
        m = AvailabilityModel(alpha, model.recovery_s, model.step_s, model.seed)
        trace = simulate_availability(graph, m, horizon_s, asr_star=asr_star)
        ratios = availability_ratio(trace)
        return float(np.mean([ratios[mask].mean() for mask in feature_masks]))

    lo, hi = 0.0, 1.0
    if achieved(hi) > target_ra:
        return hi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if achieved(mid) > target_ra:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def write_trace_csv(path, graph: IslGraph, trace: AvailabilityTrace) -> None:
    """Full trace export: one row per (edge, step)."""
    ids = graph.edge_ids()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["edge_id", "t", "Y"])
        for e, edge_id in enumerate(ids):
            for s in range(trace.n_steps):
                w.writerow([edge_id, f"{s * trace.step_s:.10g}", int(trace.up[e, s])])


def write_edge_summary_csv(path, graph: IslGraph, ratios: np.ndarray, mean_asr: np.ndarray) -> None:
    """Per-edge summary export: edge_id, feature, R_a, mean_ASR."""
    ids = graph.edge_ids()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["edge_id", "feature", "R_a", "mean_ASR"])
        for e, edge_id in enumerate(ids):
            feat = f"({graph.feat_x[e]},{graph.feat_y[e]})"
            w.writerow([edge_id, feat, f"{ratios[e]:.10g}", f"{mean_asr[e]:.10g}"])

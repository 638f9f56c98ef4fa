"""Routing over ISL graphs: ground attachment, SDP/MHP paths, stretch, RTT.

SDP minimises summed link chord lengths at the evaluation epoch, MHP
minimises edge count.  ``route`` resolves ties deterministically toward the
lexicographically smaller predecessor; the batch helpers run on scipy's
csgraph machinery for throughput-scale workloads.  The path-stretch
denominator is the great-circle arc between the endpoint satellites on the
orbital shell.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as _csgraph_dijkstra

from .constants import C_LIGHT_KM_S
from .structure import IslGraph


class UnreachableError(RuntimeError):
    """No up-path exists between the requested endpoints."""


@dataclass(frozen=True)
class PathRecord:
    """A routed path with its propagation and geodesic lengths."""

    nodes: tuple[int, ...]
    prop_length_km: float
    geo_length_km: float

    @property
    def hop_count(self) -> int:
        return max(len(self.nodes) - 1, 0)

    @property
    def stretch(self) -> float:
        return path_stretch(self)


def path_stretch(record: PathRecord) -> float:
    """Propagation length over endpoint geodesic; undefined for zero geodesic."""
    if record.geo_length_km <= 0:
        raise ValueError("path stretch undefined for coincident endpoints")
    return record.prop_length_km / record.geo_length_km


def rtt_ms(prop_length_km: float, hop_count: int, queue_delay_ms: float) -> float:
    """Round-trip time: two-way propagation plus per-hop queueing both ways."""
    return 2.0 * (prop_length_km / C_LIGHT_KM_S) * 1e3 + 2.0 * hop_count * queue_delay_ms


def rtt(record: PathRecord, queue_delay_ms: float) -> float:
    return rtt_ms(record.prop_length_km, record.hop_count, queue_delay_ms)


def geodetic_to_ecef(lat_deg, lon_deg, radius_km: float) -> np.ndarray:
    """Spherical-Earth ECEF coordinates of geodetic points."""
    lat = np.radians(np.asarray(lat_deg, float))
    lon = np.radians(np.asarray(lon_deg, float))
    return radius_km * np.stack(
        [np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon), np.sin(lat)], axis=-1
    )


def great_circle_km(p1: np.ndarray, p2: np.ndarray, radius_km: float) -> float:
    """Great-circle arc between two points given as 3-vectors on a sphere."""
    a = np.asarray(p1, float)
    b = np.asarray(p2, float)
    cross = np.linalg.norm(np.cross(a, b))
    dot = float(a @ b)
    return radius_km * math.atan2(cross, dot)


def nearest_satellites(positions: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Index of the closest satellite to each query point (smallest id wins ties)."""
    pts = np.atleast_2d(np.asarray(points, float))
    d2 = ((pts[:, None, :] - positions[None, :, :]) ** 2).sum(axis=2)
    return d2.argmin(axis=1)


def _adjacency(graph: IslGraph, weights: np.ndarray, up: np.ndarray | None):
    """Sorted per-node adjacency lists of (neighbour, weight, edge index)."""
    adj: list[list[tuple[int, float, int]]] = [[] for _ in range(graph.n_nodes)]
    for e in range(graph.n_edges):
        if up is not None and not up[e]:
            continue
        a, b, w = int(graph.obs[e]), int(graph.tgt[e]), float(weights[e])
        adj[a].append((b, w, e))
        adj[b].append((a, w, e))
    for lst in adj:
        lst.sort()
    return adj


def _dijkstra(n_nodes, adj, src, dst):
    dist = np.full(n_nodes, np.inf)
    pred = np.full(n_nodes, -1, dtype=np.int64)
    dist[src] = 0.0
    heap = [(0.0, src)]
    done = np.zeros(n_nodes, dtype=bool)
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        if u == dst:
            break
        for v, w, _ in adj[u]:
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                pred[v] = u
                heapq.heappush(heap, (nd, v))
            elif nd == dist[v] and pred[v] != -1 and u < pred[v]:
                pred[v] = u  # equal-length tie: prefer the smaller predecessor
    return dist, pred


def _walk(pred, src, dst) -> list[int]:
    nodes = [dst]
    while nodes[-1] != src:
        p = int(pred[nodes[-1]])
        if p < 0:
            raise UnreachableError(f"no path from {src} to {dst}")
        nodes.append(p)
    nodes.reverse()
    return nodes


def route(
    graph: IslGraph,
    positions: np.ndarray,
    src_sat: int,
    dst_sat: int,
    metric: str = "sdp",
    up: np.ndarray | None = None,
) -> PathRecord:
    """Route between two satellites at a frozen epoch snapshot.

    ``metric`` is ``"sdp"`` (shortest summed chord distance) or ``"mhp"``
    (minimum hop count).  Raises ``UnreachableError`` when no up-path
    exists.
    """
    if metric not in ("sdp", "mhp"):
        raise ValueError("metric must be 'sdp' or 'mhp'")
    if src_sat == dst_sat:
        return PathRecord(nodes=(src_sat,), prop_length_km=0.0, geo_length_km=0.0)
    lengths = graph.edge_lengths(positions)
    weights = lengths if metric == "sdp" else np.ones_like(lengths)
    adj = _adjacency(graph, weights, up)
    dist, pred = _dijkstra(graph.n_nodes, adj, src_sat, dst_sat)
    if not np.isfinite(dist[dst_sat]):
        raise UnreachableError(f"no path from {src_sat} to {dst_sat}")
    nodes = _walk(pred, src_sat, dst_sat)
    length_of = {}
    for e in range(graph.n_edges):
        length_of[(int(graph.obs[e]), int(graph.tgt[e]))] = float(lengths[e])
        length_of[(int(graph.tgt[e]), int(graph.obs[e]))] = float(lengths[e])
    prop = sum(length_of[(a, b)] for a, b in zip(nodes, nodes[1:]))
    geo = great_circle_km(positions[src_sat], positions[dst_sat], graph.config.shell_radius_km)
    return PathRecord(nodes=tuple(nodes), prop_length_km=prop, geo_length_km=geo)


def _csr(graph: IslGraph, weights: np.ndarray, up: np.ndarray | None) -> csr_matrix:
    mask = np.ones(graph.n_edges, bool) if up is None else np.asarray(up, bool)
    o, t, w = graph.obs[mask], graph.tgt[mask], weights[mask]
    n = graph.n_nodes
    return csr_matrix(
        (np.concatenate([w, w]), (np.concatenate([o, t]), np.concatenate([t, o]))),
        shape=(n, n),
    )


def batch_route_stats(
    graph: IslGraph,
    positions: np.ndarray,
    pairs: list[tuple[int, int]],
    metric: str = "sdp",
    up: np.ndarray | None = None,
):
    """Propagation length and hop count for many satellite pairs at once.

    Returns ``(prop_km, hops, geo_km)`` arrays aligned with ``pairs``;
    unreachable pairs get ``nan``/-1.  Pairs with identical endpoints get
    zero length and hops.
    """
    lengths = graph.edge_lengths(positions)
    weights = lengths if metric == "sdp" else np.ones_like(lengths)
    mat = _csr(graph, weights, up)
    srcs = sorted({s for s, _ in pairs})
    src_row = {s: i for i, s in enumerate(srcs)}
    dist, pred = _csgraph_dijkstra(mat, indices=srcs, return_predecessors=True)

    length_lookup = None
    if metric == "mhp":
        length_lookup = np.zeros((graph.n_nodes, graph.n_nodes))
        length_lookup[graph.obs, graph.tgt] = lengths
        length_lookup[graph.tgt, graph.obs] = lengths
    prop = np.zeros(len(pairs))
    hops = np.zeros(len(pairs), dtype=np.int64)
    geo = np.zeros(len(pairs))
    shell = graph.config.shell_radius_km
    for k, (s, d) in enumerate(pairs):
        geo[k] = great_circle_km(positions[s], positions[d], shell)
        if s == d:
            continue
        row = src_row[s]
        if not np.isfinite(dist[row, d]):
            prop[k] = np.nan
            hops[k] = -1
            continue
        node, n_hops, total = d, 0, 0.0
        while node != s:
            parent = int(pred[row, node])
            if length_lookup is not None:
                total += length_lookup[parent, node]
            node = parent
            n_hops += 1
        prop[k] = total if metric == "mhp" else float(dist[row, d])
        hops[k] = n_hops
    return prop, hops, geo

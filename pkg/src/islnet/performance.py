"""Network performance: available capacity and traffic-driven throughput.

Capacity at a step is the summed capacity of up edges.  Throughput carries
demands one by one in id order: each is routed on the shortest-distance
path over the residual-capacity graph and carries the smaller of its
bandwidth and the bottleneck residual.  A super-source/super-sink max-flow
value is reported alongside as an upper bound on any allocation.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import networkx as nx
import numpy as np

from .dynamics import AvailabilityTrace
from .structure import IslGraph


def capacity_gbps(graph: IslGraph, trace: AvailabilityTrace, step: int) -> float:
    """Available (undirected) capacity at one simulation step."""
    if not 0 <= step < trace.n_steps:
        raise ValueError("step outside trace horizon")
    return float(graph.capacity_gbps @ trace.up[:, step])


def capacity_series(graph: IslGraph, trace: AvailabilityTrace) -> np.ndarray:
    """Available capacity at every step of the trace."""
    return trace.up.T @ graph.capacity_gbps


@dataclass
class ThroughputResult:
    """Greedy allocation outcome plus the max-flow upper bound."""

    carried_gbps: float
    per_demand_gbps: np.ndarray
    cumulative_gbps: np.ndarray     # carried total after each demand, in id order
    max_flow_bound_gbps: float
    per_demand_hops: np.ndarray
    per_demand_prop_km: np.ndarray


def _residual_dijkstra(n_nodes, adj, residual, src, dst):
    """Shortest-distance path using only edges with positive residual."""
    dist = np.full(n_nodes, np.inf)
    pred_edge = np.full(n_nodes, -1, dtype=np.int64)
    pred_node = np.full(n_nodes, -1, dtype=np.int64)
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
        for v, w, e in adj[u]:
            if residual[e] <= 1e-12:
                continue
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                pred_node[v] = u
                pred_edge[v] = e
                heapq.heappush(heap, (nd, v))
    if not np.isfinite(dist[dst]):
        return None
    edges, nodes = [], [dst]
    while nodes[-1] != src:
        edges.append(int(pred_edge[nodes[-1]]))
        nodes.append(int(pred_node[nodes[-1]]))
    edges.reverse()
    return edges


def max_flow_bound_gbps(
    graph: IslGraph,
    demand_sats: list[tuple[int, int, float]],
    up: np.ndarray | None = None,
) -> float:
    """Super-source/super-sink max-flow over the up subgraph.

    Terminal capacities aggregate demand bandwidth per attached satellite,
    so the value bounds the total any allocation can carry.
    """
    g = nx.DiGraph()
    mask = np.ones(graph.n_edges, bool) if up is None else np.asarray(up, bool)
    for e in np.flatnonzero(mask):
        a, b, c = int(graph.obs[e]), int(graph.tgt[e]), float(graph.capacity_gbps[e])
        g.add_edge(a, b, capacity=c)
        g.add_edge(b, a, capacity=c)
    source, sink = "S*", "T*"
    out_demand: dict[int, float] = {}
    in_demand: dict[int, float] = {}
    passthrough = 0.0
    for s, d, bw in demand_sats:
        if s == d:
            passthrough += bw  # served without touching any ISL
            continue
        out_demand[s] = out_demand.get(s, 0.0) + bw
        in_demand[d] = in_demand.get(d, 0.0) + bw
    for sat, bw in out_demand.items():
        g.add_edge(source, sat, capacity=bw)
    for sat, bw in in_demand.items():
        g.add_edge(sat, sink, capacity=bw)
    if not out_demand or not in_demand:
        return passthrough
    value, _ = nx.maximum_flow(g, source, sink)
    return float(value) + passthrough


def throughput(
    graph: IslGraph,
    positions: np.ndarray,
    demand_sats: list[tuple[int, int, float]],
    up: np.ndarray | None = None,
    *,
    with_bound: bool = True,
) -> ThroughputResult:
    """Sequentially allocate demands over residual capacities.

    ``demand_sats`` holds (src_sat, dst_sat, gbps) in demand-id order; the
    allocation order is part of the contract.  Demands whose endpoints
    attach to the same satellite are carried in full without consuming ISL
    capacity; unreachable demands carry nothing.
    """
    lengths = graph.edge_lengths(positions)
    adj: list[list[tuple[int, float, int]]] = [[] for _ in range(graph.n_nodes)]
    mask = np.ones(graph.n_edges, bool) if up is None else np.asarray(up, bool)
    for e in np.flatnonzero(mask):
        a, b, w = int(graph.obs[e]), int(graph.tgt[e]), float(lengths[e])
        adj[a].append((b, w, e))
        adj[b].append((a, w, e))
    for lst in adj:
        lst.sort()

    residual = graph.capacity_gbps.astype(float).copy()
    residual[~mask] = 0.0
    carried = np.zeros(len(demand_sats))
    hops = np.zeros(len(demand_sats), dtype=np.int64)
    prop = np.zeros(len(demand_sats))
    for i, (s, d, bw) in enumerate(demand_sats):
        if s == d:
            carried[i] = bw
            continue
        path = _residual_dijkstra(graph.n_nodes, adj, residual, s, d)
        if path is None:
            prop[i] = np.nan
            hops[i] = -1
            continue
        bottleneck = residual[path].min()
        take = min(bw, float(bottleneck))
        residual[path] -= take
        carried[i] = take
        hops[i] = len(path)
        prop[i] = float(lengths[path].sum())
    bound = max_flow_bound_gbps(graph, demand_sats, up) if with_bound else float("nan")
    return ThroughputResult(
        carried_gbps=float(carried.sum()),
        per_demand_gbps=carried,
        cumulative_gbps=np.cumsum(carried),
        max_flow_bound_gbps=bound,
        per_demand_hops=hops,
        per_demand_prop_km=prop,
    )

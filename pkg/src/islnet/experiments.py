"""Batch experiment runners: build, simulate, evaluate, and emit results.

Every experiment writes deterministic CSV files plus a ``manifest.json``
into ``<out_root>/<scenario>/<experiment>/``; reruns with the same scenario
and seed are byte-identical.  Figures (PNG) are rendered alongside the CSVs
unless disabled.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import pearsonr

from . import __version__
from .constants import C_LIGHT_KM_S, EARTH_RADIUS_KM
from .dynamics import (
    AvailabilityModel,
    availability_ratio,
    edge_dynamics,
    normalize_asr,
    sample_epochs,
    simulate_availability,
    write_edge_summary_csv,
    write_trace_csv,
)
from .geometry import ConstellationConfig, constellation_positions
from .optimizer import (
    CandidateStructure,
    OptimizerConfig,
    StructureEvaluator,
    optimize_structure,
    pareto_frontier,
)
from .performance import max_flow_bound_gbps, throughput
from .routing import batch_route_stats, geodetic_to_ecef, great_circle_km, nearest_satellites, rtt_ms
from .scenario import EXPERIMENTS, RunManifest, Scenario, ScenarioError
from .seeding import derive_seed
from .structure import LatticeKind, Motif, build_feature_graph, build_topology
from .traffic import PopulationGrid, TrafficDemand, gravity_demands, write_demands_csv


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


@dataclass
class _Context:
    scenario: Scenario
    seed: int
    outdir: Path
    figures: bool
    dump_trace: bool
    files: list[str] = field(default_factory=list)
    csv_rows: dict[str, int] = field(default_factory=dict)

    def write_csv(self, name: str, header: list[str], rows: list) -> Path:
        path = self.outdir / name
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
        self.files.append(name)
        self.csv_rows[name] = len(rows)
        return path

    def add_file(self, name: str) -> Path:
        self.files.append(name)
        return self.outdir / name

    def maybe_figure(self, name: str, render) -> None:
        if not self.figures:
            return
        from . import report

        render(report, self.outdir / name)
        self.files.append(name)


def _population(sc: Scenario) -> PopulationGrid:
    if sc.population == "builtin":
        return PopulationGrid.builtin()
    return PopulationGrid.from_csv(sc.population)


def _load_demands_file(path: str) -> list[TrafficDemand]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(TrafficDemand(
                float(row["src_lat"]), float(row["src_lon"]),
                float(row["dst_lat"]), float(row["dst_lon"]), float(row["gbps"]),
            ))
    return out


def _demands(sc: Scenario, seed: int, count: int) -> list[TrafficDemand]:
    if sc.demands_file:
        return _load_demands_file(sc.demands_file)[:count]
    return gravity_demands(_population(sc), count, sc.capacity_gbps, derive_seed(seed, "traffic"))


def _attach(config: ConstellationConfig, demands: list[TrafficDemand], epoch_s: float):
    pos = constellation_positions(config, epoch_s)
    src_pts = geodetic_to_ecef([d.src_lat for d in demands], [d.src_lon for d in demands], EARTH_RADIUS_KM)
    dst_pts = geodetic_to_ecef([d.dst_lat for d in demands], [d.dst_lon for d in demands], EARTH_RADIUS_KM)
    return pos, nearest_satellites(pos, src_pts), nearest_satellites(pos, dst_pts)


def _union_features(motifs: list[Motif], extra=()) -> list:
    seen = {}
    for motif in motifs:
        for f in motif.pattern.features:
            seen.setdefault((f.dx, f.dy), f)
    for f in extra:
        seen.setdefault((f.dx, f.dy), f)
    return list(seen.values())


def _with_phase_factor(config: ConstellationConfig, f: int) -> ConstellationConfig:
    return ConstellationConfig(
        config.n_planes, config.sats_per_plane, f, config.inclination, config.altitude_km, config.kind
    )


# ---------------------------------------------------------------- availability


def _run_availability(ctx: _Context) -> None:
    sc = ctx.scenario
    features = _union_features(sc.motifs, sc.extra_availability_features)
    graph = build_feature_graph(sc.config, features, sc.capacity_gbps)
    base = AvailabilityModel(sc.fail_coefficient, sc.recovery_s, sc.step_s, 0)
    dyn = edge_dynamics(graph, sample_epochs(base, sc.horizon_s))
    star = normalize_asr(dyn.asr)
    ratios = []
    first_trace = None
    for k in range(sc.n_seeds):
        model = AvailabilityModel(
            sc.fail_coefficient, sc.recovery_s, sc.step_s, derive_seed(ctx.seed, "availability", k)
        )
        trace = simulate_availability(graph, model, sc.horizon_s, asr_star=star)
        if first_trace is None:
            first_trace = trace
        ratios.append(availability_ratio(trace))
    ratios = np.asarray(ratios)
    mean_ra = ratios.mean(axis=0)
    mean_asr = dyn.asr.mean(axis=1)

    write_edge_summary_csv(ctx.add_file("edges.csv"), graph, mean_ra, mean_asr)
    rows = []
    for f in features:
        mask = graph.feature_mask(f)
        per_seed = ratios[:, mask].mean(axis=1)
        rows.append([
            str(f), "intra" if f.is_intra else "inter", f.order, int(mask.sum()),
            float(dyn.mean_length_km[mask].mean()), float(star[mask].mean()),
            float(per_seed.mean()), float(per_seed.min()), float(per_seed.max()),
        ])
    ctx.write_csv(
        "features.csv",
        ["feature", "kind", "order", "n_edges", "mean_length_km", "mean_asr_star",
         "mean_ra", "min_ra_seed", "max_ra_seed"],
        rows,
    )
    if ctx.dump_trace and first_trace is not None:
        write_trace_csv(ctx.add_file("trace.csv"), graph, first_trace)
    ctx.maybe_figure("availability.png", lambda rep, p: rep.availability_figure(rows, p))


# ------------------------------------------------------------------- capacity


def _run_capacity(ctx: _Context) -> None:
    sc = ctx.scenario
    features = _union_features(sc.motifs)
    graph = build_feature_graph(sc.config, features, sc.capacity_gbps)
    base = AvailabilityModel(sc.fail_coefficient, sc.recovery_s, sc.step_s, 0)
    dyn = edge_dynamics(graph, sample_epochs(base, sc.horizon_s))
    star = normalize_asr(dyn.asr)
    traces = []
    for k in range(sc.n_seeds):
        model = AvailabilityModel(
            sc.fail_coefficient, sc.recovery_s, sc.step_s, derive_seed(ctx.seed, "capacity", k)
        )
        traces.append(simulate_availability(graph, model, sc.horizon_s, asr_star=star))

    rows, series_rows = [], []
    for motif in sc.motifs:
        mask = np.zeros(graph.n_edges, bool)
        for f in motif.pattern.features:
            mask |= graph.feature_mask(f)
        caps = graph.capacity_gbps[mask]
        allup = float(caps.sum())
        means = [float((tr.up[mask].T @ caps).mean()) for tr in traces]
        mean_avail = float(np.mean(means))
        rows.append([
            str(motif), motif.grid_mode.value, int(mask.sum()), allup, 2 * allup,
            mean_avail, 2 * mean_avail, mean_avail / allup,
        ])
        series = traces[0].up[mask].T @ caps
        for s, v in enumerate(series):
            series_rows.append([str(motif), s * sc.step_s, float(v)])
    ctx.write_csv(
        "patterns.csv",
        ["pattern", "grid", "n_edges", "allup_gbps", "allup_directed_gbps",
         "mean_available_gbps", "mean_available_directed_gbps", "availability_ratio"],
        rows,
    )
    ctx.write_csv("series.csv", ["pattern", "t", "available_gbps"], series_rows)
    ctx.maybe_figure("capacity.png", lambda rep, p: rep.capacity_figure(rows, p))


# ---------------------------------------------------------------- stretch vs F


def _stretch_sweep(ctx: _Context) -> list[dict]:
    sc = ctx.scenario
    demands = _demands(sc, ctx.seed, sc.demand_count)
    out = []
    for motif in sc.motifs:
        for f in sc.phase_factors:
            config = _with_phase_factor(sc.config, f)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                graph = build_topology(config, motif, sc.capacity_gbps)
            pos, src, dst = _attach(config, demands, sc.epoch_s)
            prop, hops, geo = batch_route_stats(graph, pos, list(zip(src.tolist(), dst.tolist())), "sdp")
            ok = (geo > 1e-6) & np.isfinite(prop)
            stretch = prop[ok] / geo[ok]
            out.append({
                "pattern": str(motif),
                "grid": motif.grid_mode.value,
                "phase_factor": f,
                "mean_isl_length_km": float(graph.edge_lengths(pos).mean()),
                "mean_stretch": float(stretch.mean()),
                "weighted_stretch": float(prop[ok].sum() / geo[ok].sum()),
                "mean_hops": float(hops[ok].mean()),
                "n_demands_used": int(ok.sum()),
            })
    return out


_STRETCH_HEADER = ["pattern", "grid", "phase_factor", "mean_isl_length_km",
                   "mean_stretch", "weighted_stretch", "mean_hops", "n_demands_used"]


def _run_stretch_vs_f(ctx: _Context) -> None:
    rows = _stretch_sweep(ctx)
    ctx.write_csv("stretch.csv", _STRETCH_HEADER, [[r[k] for k in _STRETCH_HEADER] for r in rows])
    ctx.maybe_figure("stretch_vs_F.png", lambda rep, p: rep.stretch_figure(rows, p))


def _run_length_stretch_corr(ctx: _Context) -> None:
    rows = _stretch_sweep(ctx)
    ctx.write_csv("stretch.csv", _STRETCH_HEADER, [[r[k] for k in _STRETCH_HEADER] for r in rows])
    corr_rows = []
    for motif in ctx.scenario.motifs:
        sub = [r for r in rows if r["pattern"] == str(motif)]
        lens = [r["mean_isl_length_km"] for r in sub]
        if len(sub) >= 3 and max(lens) > min(lens):
            # geodesic-weighted stretch is the primary statistic: it is stable
            # at desk-scale demand counts where the plain mean is noisy
            r_val, p_val = pearsonr(lens, [r["weighted_stretch"] for r in sub])
            r_plain, _ = pearsonr(lens, [r["mean_stretch"] for r in sub])
        else:
            r_val = p_val = r_plain = float("nan")
        corr_rows.append([str(motif), sub[0]["grid"], float(r_val), float(p_val),
                          float(r_plain), len(sub), float(max(lens) - min(lens))])
    ctx.write_csv(
        "corr.csv",
        ["pattern", "grid", "pearson_r", "p_value", "pearson_r_unweighted",
         "n_points", "length_span_km"],
        corr_rows,
    )
    ctx.maybe_figure("length_stretch.png", lambda rep, p: rep.corr_figure(rows, corr_rows, p))


# ------------------------------------------------------------------ RTT sweep


def _run_rtt_sweep(ctx: _Context) -> None:
    sc = ctx.scenario
    demands = _demands(sc, ctx.seed, sc.demand_count)
    pattern_rows, rtt_rows = [], []
    for motif in sc.motifs:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            graph = build_topology(sc.config, motif, sc.capacity_gbps)
        pos, src, dst = _attach(sc.config, demands, sc.epoch_s)
        prop, hops, geo = batch_route_stats(graph, pos, list(zip(src.tolist(), dst.tolist())), "sdp")
        ok = (geo > 1e-6) & np.isfinite(prop)
        mean_prop_ms = float((prop[ok] / C_LIGHT_KM_S * 1e3).mean())
        mean_hops = float(hops[ok].mean())
        pattern_rows.append([
            str(motif), motif.grid_mode.value,
            float(graph.edge_lengths(pos).mean()), mean_prop_ms, mean_hops,
        ])
        for d in sc.queue_delays_ms:
            rtt_rows.append([str(motif), d, 2.0 * mean_prop_ms + 2.0 * mean_hops * d])
    ctx.write_csv(
        "patterns.csv",
        ["pattern", "grid", "mean_isl_length_km", "mean_prop_ms", "mean_hops"],
        pattern_rows,
    )
    ctx.write_csv("rtt.csv", ["pattern", "queue_delay_ms", "mean_rtt_ms"], rtt_rows)
    ctx.maybe_figure("rtt.png", lambda rep, p: rep.rtt_figure(rtt_rows, p))


# ------------------------------------------------------------------ throughput


def _run_throughput_load(ctx: _Context) -> None:
    sc = ctx.scenario
    demands = _demands(sc, ctx.seed, sc.max_demands)
    write_demands_csv(ctx.add_file("demands.csv"), demands)
    if not demands:
        warnings.warn("no traffic demands; throughput is zero", stacklevel=2)
    rows = []
    demand_rows = []
    loads = [l for l in sc.loads if l <= len(demands)] or ([len(demands)] if demands else [])
    for mi, motif in enumerate(sc.throughput_motifs):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            graph = build_topology(sc.config, motif, sc.capacity_gbps)
        model = AvailabilityModel(
            sc.fail_coefficient, sc.recovery_s, sc.step_s, derive_seed(ctx.seed, "throughput")
        )
        trace = simulate_availability(graph, model, sc.horizon_s)
        step = trace.n_steps // 2
        up = trace.up[:, step]
        pos, src, dst = _attach(sc.config, demands, sc.epoch_s)
        demand_sats = [(int(s), int(d), dm.gbps) for s, d, dm in zip(src, dst, demands)]
        result = throughput(graph, pos, demand_sats, up, with_bound=False)
        capacity_up = float(graph.capacity_gbps[up].sum())
        for load in loads:
            bound = max_flow_bound_gbps(graph, demand_sats[:load], up)
            rows.append([
                str(motif), load, float(result.cumulative_gbps[load - 1]), bound, capacity_up,
            ])
        if mi == 0 and demands:
            shell = sc.config.shell_radius_km
            d0 = sc.queue_delays_ms[0] if sc.queue_delays_ms else 0.0
            for i, dm in enumerate(demands):
                s, d = int(src[i]), int(dst[i])
                geo = great_circle_km(pos[s], pos[d], shell)
                hops = int(result.per_demand_hops[i])
                prop = float(result.per_demand_prop_km[i])
                reachable = hops >= 0 and np.isfinite(prop)
                stretch = prop / geo if (reachable and geo > 1e-6) else ""
                demand_rows.append([
                    i, hops if reachable else -1,
                    prop if reachable else "", f"{geo:.10g}",
                    stretch, rtt_ms(prop, hops, d0) if reachable else "",
                    float(result.per_demand_gbps[i]),
                ])
    ctx.write_csv(
        "throughput.csv",
        ["pattern", "load", "carried_gbps", "max_flow_bound_gbps", "capacity_gbps"],
        rows,
    )
    ctx.write_csv(
        "demand_results.csv",
        ["demand_id", "hops", "L_prop_km", "L_geo_km", "stretch", "rtt_ms", "carried_gbps"],
        demand_rows,
    )
    ctx.maybe_figure("throughput.png", lambda rep, p: rep.throughput_figure(rows, p))


# -------------------------------------------------------------------- optimize


def _structure_metrics(ctx: _Context, cand: CandidateStructure, evaluator: StructureEvaluator):
    """Routed metrics plus the availability/length report for one structure."""
    sc = ctx.scenario
    report = evaluator.evaluate(cand)
    demands = _demands(sc, ctx.seed, sc.demand_count)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        graph = build_topology(cand.config, cand.motif, sc.capacity_gbps)
    pos, src, dst = _attach(cand.config, demands, sc.epoch_s)
    demand_sats = [(int(s), int(d), dm.gbps) for s, d, dm in zip(src, dst, demands)]
    prop, hops, geo = batch_route_stats(graph, pos, list(zip(src.tolist(), dst.tolist())), "sdp")
    ok = (geo > 1e-6) & np.isfinite(prop)
    stretch = prop[ok] / geo[ok]
    d0 = sc.queue_delays_ms[0] if sc.queue_delays_ms else 0.0
    mean_prop_ms = float((prop[ok] / C_LIGHT_KM_S * 1e3).mean())
    result = throughput(graph, pos, demand_sats, None, with_bound=False)
    return {
        "motif": str(cand.motif),
        "lattice": cand.lattice.value,
        "planes": cand.config.n_planes,
        "sats_per_plane": cand.config.sats_per_plane,
        "phase_factor": cand.config.phase_factor,
        "mean_availability": report.mean_availability,
        "mean_isl_length_km": report.mean_isl_length_km,
        "score": report.score,
        "mean_stretch": float(stretch.mean()),
        "weighted_stretch": float(prop[ok].sum() / geo[ok].sum()),
        "frac_stretch_le_1_5": float((stretch <= 1.5).mean()),
        "mean_rtt_ms": 2.0 * mean_prop_ms + 2.0 * float(hops[ok].mean()) * d0,
        "carried_gbps": result.carried_gbps,
    }


_COMPARISON_KEYS = [
    "structure", "motif", "lattice", "planes", "sats_per_plane", "phase_factor",
    "mean_availability", "mean_isl_length_km", "score", "mean_stretch",
    "weighted_stretch", "frac_stretch_le_1_5", "mean_rtt_ms", "carried_gbps",
]


def _make_evaluator(ctx: _Context) -> tuple[StructureEvaluator, OptimizerConfig]:
    sc = ctx.scenario
    model = AvailabilityModel(sc.fail_coefficient, sc.recovery_s, sc.step_s, 0)
    evaluator = StructureEvaluator(
        sc.config,
        model,
        max_sats=sc.opt_max_satellites,
        capacity_gbps=sc.capacity_gbps,
        horizon_periods=1.0,
        seed=derive_seed(ctx.seed, "optimize"),
    )
    opt = OptimizerConfig(
        max_iterations=sc.opt_max_iterations,
        lattices=tuple(sc.opt_lattices),
        motifs=tuple(sc.motifs),
        seed=derive_seed(ctx.seed, "optimize", "search"),
        max_candidates=sc.opt_max_candidates,
    )
    return evaluator, opt


def _run_optimize(ctx: _Context) -> None:
    sc = ctx.scenario
    evaluator, opt = _make_evaluator(ctx)
    result = optimize_structure(evaluator, opt)
    frontier = pareto_frontier(evaluator, opt)

    structures = []
    for motif in sc.baseline_motifs:
        cand = CandidateStructure(motif, LatticeKind.L1, sc.config)
        structures.append(("original " + str(motif), cand))
    structures.append(("optimized", result.best))
    comparison = []
    for label, cand in structures:
        metrics = _structure_metrics(ctx, cand, evaluator)
        comparison.append({"structure": label, **metrics})

    ctx.write_csv(
        "comparison.csv", _COMPARISON_KEYS,
        [[c[k] for k in _COMPARISON_KEYS] for c in comparison],
    )
    doc = {
        "best": {
            "motif": str(result.best.motif),
            "lattice": result.best.lattice.value,
            "planes": result.best.config.n_planes,
            "sats_per_plane": result.best.config.sats_per_plane,
            "phase_factor": result.best.config.phase_factor,
        },
        "score": result.report.score,
        "mean_availability": result.report.mean_availability,
        "mean_isl_length_km": result.report.mean_isl_length_km,
        "frontier": [
            {"mean_isl_length_km": p.mean_isl_length_km,
             "mean_availability": p.mean_availability,
             "motif": str(p.candidate.motif), "lattice": p.candidate.lattice.value}
            for p in frontier
        ],
        "iterations": [
            {"lattice": it.lattice, "iteration": it.iteration, "motif": it.motif,
             "score": it.score, "accepted": it.accepted}
            for it in result.iterations
        ],
        "comparison": comparison,
    }
    path = ctx.add_file("result.json")
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    ctx.maybe_figure("optimize.png", lambda rep, p: rep.optimize_figure(frontier, result, comparison, p))


def _run_pareto(ctx: _Context) -> None:
    evaluator, opt = _make_evaluator(ctx)
    candidates = evaluator.candidates(opt.lattices, opt.motifs)
    frontier = pareto_frontier(evaluator, opt)
    frontier_keys = {p.candidate.key for p in frontier}
    rows = []
    for cand in candidates:
        rep = evaluator.evaluate(cand)
        rows.append([
            str(cand.motif), cand.lattice.value, cand.config.n_planes,
            cand.config.sats_per_plane, cand.config.phase_factor,
            rep.mean_isl_length_km, rep.mean_availability, rep.score,
            int(cand.key in frontier_keys),
        ])
    header = ["motif", "lattice", "planes", "sats_per_plane", "phase_factor",
              "mean_isl_length_km", "mean_availability", "score", "on_frontier"]
    ctx.write_csv("candidates.csv", header, rows)
    ctx.write_csv(
        "frontier.csv",
        ["mean_isl_length_km", "mean_availability", "motif", "lattice"],
        [[p.mean_isl_length_km, p.mean_availability, str(p.candidate.motif), p.candidate.lattice.value]
         for p in frontier],
    )
    ctx.maybe_figure("pareto.png", lambda rep, p: rep.pareto_figure(rows, frontier, p))


_RUNNERS = {
    "availability": _run_availability,
    "capacity": _run_capacity,
    "stretch_vs_F": _run_stretch_vs_f,
    "length_stretch_corr": _run_length_stretch_corr,
    "rtt_sweep": _run_rtt_sweep,
    "throughput_load": _run_throughput_load,
    "optimize": _run_optimize,
    "pareto": _run_pareto,
}


def run_experiment(
    scenario: Scenario,
    experiment: str,
    out_root,
    *,
    seed: int | None = None,
    figures: bool = True,
    dump_trace: bool = False,
) -> RunManifest:
    """Run one named experiment and write its outputs under ``out_root``."""
    if experiment not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    needed_sweeps = {
        "stretch_vs_F": ("phase_factors", scenario.phase_factors),
        "length_stretch_corr": ("phase_factors", scenario.phase_factors),
        "rtt_sweep": ("queue_delays_ms", scenario.queue_delays_ms),
        "throughput_load": ("loads", scenario.loads),
    }
    if experiment in needed_sweeps:
        name, values = needed_sweeps[experiment]
        if not values:
            raise ScenarioError(f"sweeps.{name} must be nonempty for the {experiment} experiment")
    eff_seed = scenario.seed if seed is None else int(seed)
    outdir = Path(out_root) / scenario.name / experiment
    outdir.mkdir(parents=True, exist_ok=True)
    ctx = _Context(scenario=scenario, seed=eff_seed, outdir=outdir,
                   figures=figures, dump_trace=dump_trace)
    _RUNNERS[experiment](ctx)
    for name in ctx.files:
        if name.endswith(".csv") and name not in ctx.csv_rows:
            with open(outdir / name, newline="") as fh:
                ctx.csv_rows[name] = max(sum(1 for _ in fh) - 1, 0)
    manifest = RunManifest(
        scenario_name=scenario.name,
        scenario_hash=scenario.scenario_hash(),
        seed=eff_seed,
        version=__version__,
        experiment=experiment,
        outputs=sorted(ctx.files),
        parameters=scenario.raw,
        csv_rows=dict(sorted(ctx.csv_rows.items())),
    )
    manifest.write(outdir / "manifest.json")
    return manifest

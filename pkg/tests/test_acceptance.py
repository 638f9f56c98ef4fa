"""Acceptance suite: one test per release criterion, each printing PASS/FAIL.

Run with ``pytest -s tests/test_acceptance.py`` to see the per-criterion
lines.  Several criteria drive the full experiment pipeline and take a few
minutes altogether.
"""

import csv
import json
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from islnet import (
    AvailabilityModel,
    ConnectionFeature,
    GridMode,
    LatticeKind,
    OptimizerConfig,
    StructureEvaluator,
    WalkerKind,
    brute_force_best,
    build_feature_graph,
    deviation_angle,
    generate_constellation,
    optimize_structure,
    prm_gen,
    propagate,
    relative_geometry,
)
from islnet.dynamics import (
    availability_ratio,
    calibrate_fail_coefficient,
    edge_dynamics,
    normalize_asr,
    sample_epochs,
    simulate_availability,
)
from islnet.experiments import run_experiment
from islnet.geometry import SatelliteId
from islnet.scenario import load_scenario, scenario_from_dict
from islnet.seeding import derive_seed


_CAPMAN = None


@pytest.fixture(autouse=True)
def _grab_capture_manager(request):
    global _CAPMAN
    _CAPMAN = request.config.pluginmanager.getplugin("capturemanager")
    yield


def _report(line: str) -> None:
    # emit outside pytest capture so the per-criterion lines always appear
    if _CAPMAN is not None:
        with _CAPMAN.global_and_fixture_disabled():
            print("\n" + line, flush=True)
    else:
        print(line)


@contextmanager
def criterion(cid: str, description: str, limit_s: float):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        elapsed = time.perf_counter() - start
        _report(f"ACCEPTANCE {cid} {description}: FAIL ({elapsed:.1f}s)")
        raise
    elapsed = time.perf_counter() - start
    _report(f"ACCEPTANCE {cid} {description}: PASS ({elapsed:.1f}s)")
    assert elapsed < limit_s, f"{cid} exceeded its runtime budget ({elapsed:.1f}s >= {limit_s}s)"


@pytest.fixture(scope="session")
def reference():
    return load_scenario("reference-24x36")


@pytest.fixture(scope="session")
def ref_union(reference):
    """Candidate-set measurement graph with shared ASR normalisation."""
    sc = reference
    features = [ConnectionFeature(0, -1), ConnectionFeature(1, 1), ConnectionFeature(1, 0),
                ConnectionFeature(1, -1), ConnectionFeature(1, -2)]
    graph = build_feature_graph(sc.config, features, sc.capacity_gbps)
    model = AvailabilityModel(sc.fail_coefficient, sc.recovery_s, sc.step_s, 0)
    epochs = sample_epochs(model, sc.horizon_s)
    dyn = edge_dynamics(graph, epochs)
    star = normalize_asr(dyn.asr)
    return sc, graph, dyn, star


def test_c1_parameter_generation_oneweb():
    with criterion("C1", "lattice parameter reproduction (17x34 star square)", 1.0):
        cfg = prm_gen(math.radians(87.9), 588, LatticeKind.L3, WalkerKind.STAR, GridMode.PLUS)
        assert (cfg.n_planes, cfg.sats_per_plane) == (17, 34)


def test_c2_analytic_link_dynamics(reference):
    with criterion("C2", "intra-plane links are static; deviation identities", 5.0):
        sc = reference
        elements = dict(generate_constellation(sc.config))
        a, b = elements[SatelliteId(0, 0)], elements[SatelliteId(0, 35)]
        epochs = np.linspace(0.0, 2 * sc.config.period_s, 100)
        ranges = np.array([
            relative_geometry(propagate(a, t), propagate(b, t)).range_km for t in epochs
        ])
        assert (ranges.max() - ranges.min()) / ranges.mean() < 1e-6
        graph = build_feature_graph(sc.config, [ConnectionFeature(0, -1)], sc.capacity_gbps)
        dyn = edge_dynamics(graph, epochs)
        assert np.all(np.abs(dyn.asr) < 1e-9)
        assert abs(deviation_angle(0.0, 0.0)) < 1e-12
        for el in np.linspace(-1.5, 1.5, 11):
            assert abs(deviation_angle(math.pi / 2, el) - math.pi / 2) < 1e-12


def test_c3_availability_ordering(ref_union):
    with criterion("C3", "availability ordering across connection features", 120.0):
        sc, graph, dyn, star = ref_union
        ratios = []
        for k in range(sc.n_seeds):
            model = AvailabilityModel(
                sc.fail_coefficient, sc.recovery_s, sc.step_s,
                derive_seed(sc.seed, "availability", k),
            )
            trace = simulate_availability(graph, model, sc.horizon_s, asr_star=star)
            ratios.append(availability_ratio(trace))
        mean_ra = np.mean(ratios, axis=0)
        by_feature = {
            str(f): float(mean_ra[graph.feature_mask(f)].mean()) for f in graph.features()
        }
        intra = by_feature["(0,-1)"]
        inter = {k: v for k, v in by_feature.items() if not k.startswith("(0,")}
        assert all(intra >= v for v in inter.values()), by_feature
        gap = by_feature["(1,-1)"] - by_feature["(1,0)"]
        assert gap > 0.0, by_feature
        print(f"  R_a: {by_feature} (gap {gap:.4f})", end="")


def test_c4_calibrated_capacity_ratio(ref_union):
    with criterion("C4", "best 4-ISL pattern keeps >=93% of all-up capacity", 120.0):
        sc, graph, dyn, star = ref_union
        model = AvailabilityModel(sc.fail_coefficient, sc.recovery_s, sc.step_s,
                                  derive_seed(sc.seed, "calibration"))
        masks = [graph.feature_mask(ConnectionFeature(1, -1)),
                 graph.feature_mask(ConnectionFeature(1, 0))]
        target = 0.5 * (0.83 + 0.76)  # midpoint of the reported availability pair
        alpha = calibrate_fail_coefficient(
            graph, model, sc.horizon_s, target, masks, asr_star=star
        )
        fitted = AvailabilityModel(alpha, sc.recovery_s, sc.step_s, model.seed)
        trace = simulate_availability(graph, fitted, sc.horizon_s, asr_star=star)
        ratios = availability_ratio(trace)
        achieved = float(np.mean([ratios[m].mean() for m in masks]))
        assert abs(achieved - target) < 0.02, (alpha, achieved)
        best_ratio = 0.0
        for inter in [(1, 1), (1, 0), (1, -1), (1, -2)]:
            mask = graph.feature_mask(ConnectionFeature(0, -1)) | graph.feature_mask(
                ConnectionFeature(*inter)
            )
            best_ratio = max(best_ratio, float(ratios[mask].mean()))
        print(f"  alpha={alpha:.4f} capacity ratio={best_ratio:.4f}", end="")
        assert best_ratio >= 0.93
        assert 0.93 <= best_ratio <= 0.97  # 0.95 +/- 0.02


_CORR_PATTERNS = ["(1,0)", "(1,-1)", "(1,-2)", "(1,1)+(1,0)", "(1,0)+(1,-1)", "(1,-1)+(1,-2)"]


def test_c5_length_stretch_correlation(tmp_path_factory):
    with criterion("C5", "ISL length / path stretch correlation >= 0.7", 600.0):
        sc = scenario_from_dict({
            "name": "corr-acceptance",
            "seed": 42,
            "constellation": {
                "planes": 24, "sats_per_plane": 36, "phase_factor": 0,
                "inclination_deg": 53.0, "altitude_km": 1000.0,
            },
            "motifs": _CORR_PATTERNS,
            "traffic": {"demands": 500},
        })
        out = tmp_path_factory.mktemp("corr")
        run_experiment(sc, "length_stretch_corr", out, figures=False)
        with open(out / sc.name / "length_stretch_corr" / "corr.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        corr = {r["pattern"]: float(r["pearson_r"]) for r in rows}
        print(f"  corr: {corr}", end="")
        for pattern in _CORR_PATTERNS:
            assert corr[pattern] >= 0.7, corr


def test_c6_rtt_crossover(tmp_path_factory):
    with criterion("C6", "queuing-delay crossover between 6-ISL patterns", 300.0):
        star_patterns = ["(1,1)+(1,0)", "(1,0)+(1,-1)", "(1,-1)+(1,-2)",
                         "(1,1)+(1,-1)", "(1,0)+(1,-2)", "(1,1)+(1,-2)"]
        sc = scenario_from_dict({
            "name": "rtt-acceptance",
            "seed": 42,
            "constellation": {
                "planes": 24, "sats_per_plane": 36, "phase_factor": 0,
                "inclination_deg": 53.0, "altitude_km": 1000.0,
            },
            "motifs": star_patterns,
            # enough demands to resolve the sub-millisecond margin at 1 ms
            "traffic": {"demands": 3000},
        })
        out = tmp_path_factory.mktemp("rtt")
        run_experiment(sc, "rtt_sweep", out, figures=False)
        base = out / sc.name / "rtt_sweep"
        with open(base / "patterns.csv", newline="") as fh:
            pattern_rows = list(csv.DictReader(fh))
        shortest = min(pattern_rows, key=lambda r: float(r["mean_isl_length_km"]))["pattern"]
        with open(base / "rtt.csv", newline="") as fh:
            rtt_rows = list(csv.DictReader(fh))
        best_at = {}
        for row in rtt_rows:
            d = float(row["queue_delay_ms"])
            v = float(row["mean_rtt_ms"])
            if d not in best_at or v < best_at[d][1]:
                best_at[d] = (row["pattern"], v)
        delays = sorted(best_at)
        assert 1.0 in best_at and best_at[1.0][0] == shortest, best_at
        crossover = [d for d in delays if 1.0 <= d <= 10.0 and best_at[d][0] != shortest]
        print(f"  shortest={shortest}, leader by delay="
              f"{{{', '.join(f'{d:g}: {best_at[d][0]}' for d in delays)}}}", end="")
        assert crossover, "no crossover within 1..10 ms"


def test_c7_oracle_equivalence():
    with criterion("C7", "greedy search equals brute force on 5/5 seeds", 300.0):
        import islnet

        cfg = islnet.ConstellationConfig(8, 10, 1, math.radians(53.0), 1000.0)
        model = AvailabilityModel(0.05, 60.0, 10.0, 0)
        for seed in range(5):
            ev = StructureEvaluator(cfg, model, seed=derive_seed(seed, "acceptance"))
            opt = OptimizerConfig(max_iterations=100, seed=derive_seed(seed, "search"))
            greedy = optimize_structure(ev, opt)
            oracle = brute_force_best(ev, opt)
            assert greedy.report.score == oracle.report.score, seed
            assert greedy.best.key == oracle.best.key, seed


def test_c8_optimized_starlink_stretch(tmp_path_factory):
    with criterion("C8", "optimized dense shell keeps >=75% of paths under 1.5x", 600.0):
        sc = load_scenario("starlink")
        out = tmp_path_factory.mktemp("opt")
        run_experiment(sc, "optimize", out, figures=False)
        doc = json.loads((out / sc.name / "optimize" / "result.json").read_text())
        optimized = [c for c in doc["comparison"] if c["structure"] == "optimized"][0]
        print(f"  best={doc['best']} frac<=1.5: {optimized['frac_stretch_le_1_5']:.3f}", end="")
        assert optimized["frac_stretch_le_1_5"] >= 0.75


def test_c9_throughput_properties(tmp_path_factory):
    with criterion("C9", "throughput monotone, bounded, and saturating", 600.0):
        sc = scenario_from_dict({
            "name": "throughput-acceptance",
            "seed": 42,
            "constellation": {
                "planes": 24, "sats_per_plane": 36, "phase_factor": 0,
                "inclination_deg": 53.0, "altitude_km": 1000.0,
            },
            "throughput_motifs": ["(1,-1)"],
        })
        out = tmp_path_factory.mktemp("thr")
        run_experiment(sc, "throughput_load", out, figures=False)
        with open(out / sc.name / "throughput_load" / "throughput.csv", newline="") as fh:
            rows = [r for r in csv.DictReader(fh) if r["pattern"] == "(1,-1)"]
        rows.sort(key=lambda r: int(r["load"]))
        carried = [float(r["carried_gbps"]) for r in rows]
        bounds = [float(r["max_flow_bound_gbps"]) for r in rows]
        capacity = [float(r["capacity_gbps"]) for r in rows]
        assert all(b >= a - 1e-9 for a, b in zip(carried, carried[1:]))
        assert all(c <= b + 1e-6 for c, b in zip(carried, bounds))
        assert all(c <= cap + 1e-6 for c, cap in zip(carried, capacity))
        growth = [(b - a) / a for a, b in zip(carried, carried[1:])]
        print(f"  carried tail={['%.1f' % c for c in carried[-4:]]} "
              f"growth tail={['%.3f' % g for g in growth[-3:]]}", end="")
        assert any(g < 0.01 for g in growth), growth


def test_c10_byte_identical_reruns(tmp_path_factory):
    with criterion("C10", "reruns are byte-identical", 300.0):
        sc = scenario_from_dict({
            "name": "determinism-acceptance",
            "seed": 42,
            "constellation": {
                "planes": 8, "sats_per_plane": 10, "phase_factor": 1,
                "inclination_deg": 53.0, "altitude_km": 1000.0,
            },
            "dynamics": {"horizon_periods": 0.5, "seeds": 2},
            "traffic": {"demands": 50, "max_demands": 100},
            "sweeps": {"phase_factors": [0, 2, 4], "queue_delays_ms": [1, 5], "loads": [50, 100]},
            "optimizer": {"max_iterations": 15},
        })
        for experiment in ("availability", "rtt_sweep", "optimize"):
            out_a = tmp_path_factory.mktemp(f"det-{experiment}-a")
            out_b = tmp_path_factory.mktemp(f"det-{experiment}-b")
            ma = run_experiment(sc, experiment, out_a, figures=False)
            mb = run_experiment(sc, experiment, out_b, figures=False)
            assert ma.outputs == mb.outputs
            for name in ma.outputs + ["manifest.json"]:
                a = (out_a / sc.name / experiment / name).read_bytes()
                b = (out_b / sc.name / experiment / name).read_bytes()
                assert a == b, f"{experiment}/{name} differs between reruns"

import math

import numpy as np
import pytest

from islnet import (
    AvailabilityModel,
    ConnectionFeature,
    asr,
    availability_ratio,
    build_feature_graph,
    build_topology,
    calibrate_fail_coefficient,
    edge_dynamics,
    generate_constellation,
    normalize_asr,
    parse_motif,
    propagate,
    relative_geometry,
    simulate_availability,
)
from islnet.dynamics import sample_epochs, write_edge_summary_csv, write_trace_csv
from islnet.geometry import SatelliteId


def test_model_validation():
    with pytest.raises(ValueError):
        AvailabilityModel(fail_coefficient=1.5)
    with pytest.raises(ValueError):
        AvailabilityModel(recovery_s=0)
    assert AvailabilityModel(0.05, 60.0, 10.0).recovery_steps == 6
    assert AvailabilityModel(0.05, 55.0, 10.0).recovery_steps == 6


def test_asr_zero_for_coplanar_pair(reference_config):
    elements = dict(generate_constellation(reference_config))
    a = elements[SatelliteId(0, 0)]
    b = elements[SatelliteId(0, 1)]
    assert asr(a, b, 0.0, 50.0) == pytest.approx(0.0, abs=1e-8)
    with pytest.raises(ValueError):
        asr(a, b, 50.0, 50.0)


def test_asr_matches_direct_recomputation(reference_config):
    elements = dict(generate_constellation(reference_config))
    a = elements[SatelliteId(0, 0)]
    b = elements[SatelliteId(1, 35)]
    t1, t2 = 100.0, 160.0
    value = asr(a, b, t1, t2)
    total = 0.0
    for obs, tgt in ((a, b), (b, a)):
        g1 = relative_geometry(propagate(obs, t1), propagate(tgt, t1))
        g2 = relative_geometry(propagate(obs, t2), propagate(tgt, t2))
        total += 0.5 * abs(math.sin(g2.deviation - g1.deviation)) * g1.range_km * g2.range_km
    assert value == pytest.approx(0.5 * total / (t2 - t1), rel=1e-12)
    assert value > 0


def test_asr_quarter_turn_area_arithmetic():
    # definition check: a quarter-turn deviation drift at 1000 km ranges
    # sweeps half a megameter^2 per interval
    assert 0.5 * abs(math.sin(math.pi / 2)) * 1000.0 * 1000.0 == 5e5


def test_edge_dynamics_intra_exactly_zero(reference_config):
    graph = build_feature_graph(reference_config, [ConnectionFeature(0, -1)])
    epochs = np.arange(101) * 10.0
    dyn = edge_dynamics(graph, epochs)
    assert np.all(dyn.asr == 0.0)
    assert np.allclose(dyn.mean_length_km, 2 * 7378.137 * math.sin(math.pi / 36), rtol=1e-12)


def test_edge_dynamics_matches_single_pair_asr(reference_config):
    graph = build_feature_graph(reference_config, [ConnectionFeature(1, -1)])
    epochs = np.arange(4) * 60.0
    dyn = edge_dynamics(graph, epochs)
    elements = dict(generate_constellation(reference_config))
    for e in (0, 100, 863):
        a = SatelliteId.from_flat(int(graph.obs[e]), reference_config)
        b = SatelliteId.from_flat(int(graph.tgt[e]), reference_config)
        for s in range(3):
            expected = asr(elements[a], elements[b], epochs[s], epochs[s + 1])
            assert dyn.asr[e, s] == pytest.approx(expected, rel=1e-9, abs=1e-12)


def test_normalize_asr():
    values = np.array([0.0, 5.0, 10.0])
    assert np.allclose(normalize_asr(values), [0.0, 0.5, 1.0])
    assert np.all(normalize_asr(np.full(4, 3.3)) == 0.0)
    scaled = normalize_asr(np.array([1.0, 2.0]), lo=0.0, hi=4.0)
    assert np.allclose(scaled, [0.25, 0.5])


def test_intra_edges_normalize_to_zero(reference_config):
    graph = build_feature_graph(
        reference_config, [ConnectionFeature(0, -1), ConnectionFeature(1, 0)]
    )
    epochs = np.arange(31) * 10.0
    dyn = edge_dynamics(graph, epochs)
    star = normalize_asr(dyn.asr)
    intra = graph.feature_mask(ConnectionFeature(0, -1))
    assert np.all(star[intra] == 0.0)
    assert star.max() == 1.0


def _tiny_graph(tiny_config):
    return build_topology(tiny_config, parse_motif("(1,0)"))


def test_simulate_zero_failure_is_all_up(tiny_config):
    graph = _tiny_graph(tiny_config)
    model = AvailabilityModel(0.0, 60.0, 10.0, seed=1)
    trace = simulate_availability(graph, model, 1000.0)
    assert trace.up.all()
    assert np.all(availability_ratio(trace) == 1.0)


def test_simulate_zero_asr_edges_stay_up(tiny_config):
    graph = _tiny_graph(tiny_config)
    model = AvailabilityModel(1.0, 60.0, 10.0, seed=1)
    star = np.zeros((graph.n_edges, 100))
    star[0, :] = 1.0  # every step fails the first edge as soon as it recovers
    trace = simulate_availability(graph, model, 1000.0, asr_star=star)
    assert trace.up[1:].all()
    assert not trace.up[0].all()


def test_forced_single_outage_ratio(tiny_config):
    graph = _tiny_graph(tiny_config)
    model = AvailabilityModel(1.0, 60.0, 10.0, seed=3)
    steps = 200
    star = np.zeros((graph.n_edges, steps))
    star[5, 40] = 1.0  # one guaranteed failure at t0 = 400 s
    trace = simulate_availability(graph, model, steps * 10.0, asr_star=star)
    ratio = availability_ratio(trace, edge=5)
    assert ratio == pytest.approx(1.0 - model.recovery_steps / steps, abs=1e-12)
    assert ratio == pytest.approx(1.0 - model.recovery_s / (steps * 10.0), abs=1e-12)


def test_simulate_deterministic_per_seed(tiny_config):
    graph = _tiny_graph(tiny_config)
    model = AvailabilityModel(0.4, 60.0, 10.0, seed=9)
    a = simulate_availability(graph, model, 2000.0)
    b = simulate_availability(graph, model, 2000.0)
    assert np.array_equal(a.up, b.up)
    other = simulate_availability(graph, AvailabilityModel(0.4, 60.0, 10.0, seed=10), 2000.0)
    assert not np.array_equal(a.up, other.up)


def test_mean_availability_monotone_in_fail_coefficient(tiny_config):
    graph = _tiny_graph(tiny_config)
    horizon = tiny_config.period_s
    epochs = sample_epochs(AvailabilityModel(0.1, 60.0, 10.0, 0), horizon)
    star = normalize_asr(edge_dynamics(graph, epochs).asr)
    means = []
    for alpha in (0.0, 0.1, 0.3, 0.6, 1.0):
        per_seed = []
        for seed in range(3):
            model = AvailabilityModel(alpha, 60.0, 10.0, seed=seed)
            trace = simulate_availability(graph, model, horizon, asr_star=star)
            per_seed.append(availability_ratio(trace).mean())
        means.append(np.mean(per_seed))
    assert all(a >= b - 1e-12 for a, b in zip(means, means[1:]))


def test_intra_order_availability_never_increases(reference_config):
    feats = [ConnectionFeature(0, -1), ConnectionFeature(0, -2), ConnectionFeature(0, -3)]
    graph = build_feature_graph(reference_config, feats)
    model = AvailabilityModel(0.3, 60.0, 10.0, seed=2)
    trace = simulate_availability(graph, model, 1000.0)
    ratios = availability_ratio(trace)
    means = [ratios[graph.feature_mask(f)].mean() for f in feats]
    assert means[0] >= means[1] >= means[2]
    assert means == [1.0, 1.0, 1.0]  # coplanar links are static in this model


def test_renewal_expectation_constant_probability(tiny_config):
    graph = _tiny_graph(tiny_config)
    p, steps = 0.05, 8000
    model = AvailabilityModel(p, 60.0, 10.0, seed=11)
    star = np.ones((graph.n_edges, steps))
    trace = simulate_availability(graph, model, steps * 10.0, asr_star=star)
    per_edge = availability_ratio(trace)
    k = model.recovery_steps
    expected = (1.0 / p) / (1.0 / p + k)
    sigma = per_edge.std(ddof=1) / math.sqrt(len(per_edge))
    assert abs(per_edge.mean() - expected) < 3 * sigma + 2e-3


def test_calibrate_hits_target(tiny_config):
    graph = _tiny_graph(tiny_config)
    model = AvailabilityModel(0.05, 60.0, 10.0, seed=4)
    horizon = tiny_config.period_s
    epochs = sample_epochs(model, horizon)
    star = normalize_asr(edge_dynamics(graph, epochs).asr)
    mask = graph.feature_mask(ConnectionFeature(1, 0))
    alpha = calibrate_fail_coefficient(
        graph, model, horizon, 0.9, [mask], asr_star=star
    )
    fitted = AvailabilityModel(alpha, 60.0, 10.0, seed=4)
    trace = simulate_availability(graph, fitted, horizon, asr_star=star)
    achieved = availability_ratio(trace)[mask].mean()
    assert achieved == pytest.approx(0.9, abs=0.02)


def test_trace_and_summary_csv(tmp_path, tiny_config):
    graph = _tiny_graph(tiny_config)
    model = AvailabilityModel(0.2, 60.0, 10.0, seed=5)
    trace = simulate_availability(graph, model, 500.0)
    trace_path = tmp_path / "trace.csv"
    write_trace_csv(trace_path, graph, trace)
    lines = trace_path.read_text().splitlines()
    assert lines[0] == "edge_id,t,Y"
    assert len(lines) == 1 + graph.n_edges * trace.n_steps
    summary_path = tmp_path / "edges.csv"
    epochs = sample_epochs(model, 500.0)
    dyn = edge_dynamics(graph, epochs)
    write_edge_summary_csv(summary_path, graph, availability_ratio(trace), dyn.asr.mean(axis=1))
    lines = summary_path.read_text().splitlines()
    assert lines[0] == "edge_id,feature,R_a,mean_ASR"
    assert len(lines) == 1 + graph.n_edges


def test_edge_asr_samples_records(tiny_config):
    graph = _tiny_graph(tiny_config)
    from islnet import edge_asr_samples

    epochs = np.arange(5) * 10.0
    intra_edge = int(np.flatnonzero(graph.feat_x == 0)[0])
    inter_edge = int(np.flatnonzero(graph.feat_x != 0)[0])
    for e in (intra_edge, inter_edge):
        samples = edge_asr_samples(graph, epochs, e)
        assert len(samples) == 4
        assert all(s.asr >= 0.0 for s in samples)
        assert all(s.t2 == s.t1 + 10.0 for s in samples)
    assert all(s.asr == 0.0 for s in edge_asr_samples(graph, epochs, intra_edge))

"""Structure search: maximise link availability per unit mean ISL length.

A candidate structure is a (motif, lattice) pair together with the Walker
parameters realising the lattice.  Its objective score is the mean edge
availability ratio over a short seeded simulation divided by the mean ISL
length over one orbital period; higher is better.  All candidates of a
search share one ASR normalisation scale so their availabilities are
comparable.

``optimize_structure`` runs the greedy accept/revert search per lattice;
``brute_force_best`` enumerates the whole space as an oracle.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    AvailabilityModel,
    availability_ratio,
    edge_dynamics,
    normalize_asr,
    sample_epochs,
    simulate_availability,
)
from .geometry import ConstellationConfig
from .seeding import derive_seed
from .structure import (
    IslGraph,
    LatticeKind,
    Motif,
    build_topology,
    enumerate_candidate_motifs,
    lattice_grid_mode,
    prm_gen,
)


class InfeasibleError(RuntimeError):
    """The search space is empty or exceeds the configured bounds."""


@dataclass(frozen=True)
class CandidateStructure:
    motif: Motif
    lattice: LatticeKind
    config: ConstellationConfig

    @property
    def key(self) -> tuple[str, str]:
        return (self.lattice.value, str(self.motif))


@dataclass(frozen=True)
class ObjectiveReport:
    mean_availability: float
    mean_isl_length_km: float

    @property
    def score(self) -> float:
        """Availability per unit ISL length (1/km); higher is better."""
        return self.mean_availability / self.mean_isl_length_km


@dataclass(frozen=True)
class OptimizerConfig:
    max_iterations: int = 100
    lattices: tuple[LatticeKind, ...] = tuple(LatticeKind)
    motifs: tuple[Motif, ...] = tuple(enumerate_candidate_motifs())
    merge_count: int = 1   # neighbourhood q; degenerate for size-1 motifs
    split_count: int = 1   # neighbourhood v
    seed: int = 0
    max_candidates: int = 1000

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.lattices:
            raise ValueError("lattice set must be nonempty")
        if not self.motifs:
            raise ValueError("motif candidate set must be nonempty")


@dataclass
class IterationRecord:
    lattice: str
    iteration: int
    motif: str
    score: float
    accepted: bool


@dataclass
class OptimizationResult:
    best: CandidateStructure
    report: ObjectiveReport
    iterations: list[IterationRecord] = field(default_factory=list)


class StructureEvaluator:
    """Builds, simulates, and scores candidate structures on a shared scale.

    The ASR normalisation maximum is taken over every feasible candidate of
    the search space (the minimum is pinned to zero by the intra-plane
    links every pattern carries), so scores are comparable across both
    motifs and lattices and independent of search order.  Evaluations are
    seeded per candidate, making parallel and serial searches identical.
    """

    def __init__(
        self,
        base_config: ConstellationConfig,
        model: AvailabilityModel,
        *,
        max_sats: int | None = None,
        capacity_gbps: float = 10.0,
        horizon_periods: float = 1.0,
        seed: int = 0,
    ):
        self.base_config = base_config
        self.model = model
        self.max_sats = max_sats or base_config.n_sats
        self.capacity_gbps = capacity_gbps
        self.horizon_periods = horizon_periods
        self.seed = seed
        self._reports: dict[tuple[str, str], ObjectiveReport] = {}
        self._asr_hi: float | None = None
        self._candidates: list[CandidateStructure] | None = None

    def candidate_config(self, lattice: LatticeKind, motif: Motif) -> ConstellationConfig | None:
        """Walker parameters realising the lattice for this motif, or None."""
        wanted = lattice_grid_mode(lattice)
        if wanted is not None and wanted is not motif.grid_mode:
            return None
        base = self.base_config
        try:
            return prm_gen(
                base.inclination,
                self.max_sats,
                lattice,
                base.kind,
                motif.grid_mode,
                altitude_km=base.altitude_km,
                base_shape=(base.n_planes, base.sats_per_plane, base.phase_factor),
                motif=motif,
            )
        except ValueError:
            return None

    def candidates(
        self,
        lattices: tuple[LatticeKind, ...] = tuple(LatticeKind),
        motifs: tuple[Motif, ...] | None = None,
    ) -> list[CandidateStructure]:
        motifs = motifs if motifs is not None else tuple(enumerate_candidate_motifs())
        out = []
        for lattice in lattices:
            for motif in motifs:
                config = self.candidate_config(lattice, motif)
                if config is not None:
                    out.append(CandidateStructure(motif, lattice, config))
        return out

    def _graph(self, candidate: CandidateStructure) -> IslGraph:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # small shells may collapse edges
            return build_topology(candidate.config, candidate.motif, self.capacity_gbps)

    def _horizon(self, config: ConstellationConfig) -> float:
        steps = max(int(round(self.horizon_periods * config.period_s / self.model.step_s)), 10)
        return steps * self.model.step_s

    def prepare_scale(self, candidates: list[CandidateStructure]) -> float:
        """Shared ASR maximum over the full candidate set (first pass).

        Computed once per evaluator; an evaluator is scoped to one search
        space, so later calls reuse the stored scale.
        """
        if self._asr_hi is not None:
            return self._asr_hi
        hi = 0.0
        for cand in candidates:
            graph = self._graph(cand)
            epochs = sample_epochs(self.model, self._horizon(cand.config))
            dyn = edge_dynamics(graph, epochs)
            hi = max(hi, float(dyn.asr.max()))
        self._asr_hi = hi
        return hi

    def evaluate(self, candidate: CandidateStructure) -> ObjectiveReport:
        if candidate.key in self._reports:
            return self._reports[candidate.key]
        graph = self._graph(candidate)
        horizon = self._horizon(candidate.config)
        epochs = sample_epochs(self.model, horizon)
        dyn = edge_dynamics(graph, epochs)
        hi = self._asr_hi if self._asr_hi is not None else float(dyn.asr.max())
        asr_star = normalize_asr(dyn.asr, lo=0.0, hi=hi)
        model = AvailabilityModel(
            self.model.fail_coefficient,
            self.model.recovery_s,
            self.model.step_s,
            derive_seed(self.seed, "objective", *candidate.key),
        )
        trace = simulate_availability(graph, model, horizon, asr_star=asr_star)
        report = ObjectiveReport(
            mean_availability=float(availability_ratio(trace).mean()),
            mean_isl_length_km=float(dyn.mean_length_km.mean()),
        )
        self._reports[candidate.key] = report
        return report


def objective(
    candidate: CandidateStructure,
    model: AvailabilityModel,
    *,
    capacity_gbps: float = 10.0,
    horizon_periods: float = 1.0,
    seed: int = 0,
    asr_hi: float | None = None,
) -> ObjectiveReport:
    """Score a single candidate (self-normalised unless ``asr_hi`` given)."""
    ev = StructureEvaluator(
        candidate.config,
        model,
        capacity_gbps=capacity_gbps,
        horizon_periods=horizon_periods,
        seed=seed,
    )
    if asr_hi is not None:
        ev._asr_hi = asr_hi
    return ev.evaluate(candidate)


def _grouped(candidates: list[CandidateStructure]) -> dict[LatticeKind, list[CandidateStructure]]:
    groups: dict[LatticeKind, list[CandidateStructure]] = {}
    for cand in candidates:
        groups.setdefault(cand.lattice, []).append(cand)
    return groups


def optimize_structure(
    evaluator: StructureEvaluator, opt: OptimizerConfig
) -> OptimizationResult:
    """Greedy accept/revert search over motif x lattice.

    Per lattice: derive the conforming Walker parameters, start from a
    random compatible motif, and for ``max_iterations`` rounds propose a
    neighbourhood update, keeping it only when the objective improves.
    With size-1 motifs the merge/split neighbourhood degenerates to
    proposing one alternative motif uniformly at random.  Returns the best
    structure across all lattices.
    """
    candidates = evaluator.candidates(opt.lattices, opt.motifs)
    if not candidates:
        raise InfeasibleError("no feasible (motif, lattice) candidate builds")
    evaluator.prepare_scale(candidates)
    groups = _grouped(candidates)

    best: CandidateStructure | None = None
    best_report: ObjectiveReport | None = None
    log: list[IterationRecord] = []
    for lattice in opt.lattices:
        pool = groups.get(lattice)
        if not pool:
            continue
        rng = np.random.default_rng(derive_seed(opt.seed, "search", lattice.value))
        current = pool[int(rng.integers(len(pool)))]
        current_report = evaluator.evaluate(current)
        log.append(IterationRecord(lattice.value, 0, str(current.motif), current_report.score, True))
        if best_report is None or current_report.score > best_report.score:
            best, best_report = current, current_report
        for it in range(1, opt.max_iterations + 1):
            if len(pool) > 1:
                idx = int(rng.integers(len(pool) - 1))
                proposal = [c for c in pool if c.key != current.key][idx]
            else:
                proposal = current
            report = evaluator.evaluate(proposal)
            accepted = report.score > current_report.score
            if accepted:
                current, current_report = proposal, report
                if best_report is None or report.score > best_report.score:
                    best, best_report = proposal, report
            log.append(IterationRecord(lattice.value, it, str(proposal.motif), report.score, accepted))
    assert best is not None and best_report is not None
    return OptimizationResult(best=best, report=best_report, iterations=log)


def brute_force_best(
    evaluator: StructureEvaluator, opt: OptimizerConfig
) -> OptimizationResult:
    """Exhaustive oracle over the candidate space (deterministic tie-break)."""
    candidates = evaluator.candidates(opt.lattices, opt.motifs)
    if not candidates:
        raise InfeasibleError("no feasible (motif, lattice) candidate builds")
    if len(candidates) > opt.max_candidates:
        raise InfeasibleError(
            f"candidate space of {len(candidates)} exceeds the bound {opt.max_candidates}"
        )
    evaluator.prepare_scale(candidates)
    scored = [(evaluator.evaluate(c), c) for c in candidates]
    best_score = max(r.score for r, _ in scored)
    ties = [(c.key, r, c) for r, c in scored if r.score == best_score]
    ties.sort(key=lambda item: item[0])
    _, report, cand = ties[0]
    return OptimizationResult(best=cand, report=report)


@dataclass(frozen=True)
class FrontierPoint:
    mean_isl_length_km: float
    mean_availability: float
    candidate: CandidateStructure


def pareto_frontier(
    evaluator: StructureEvaluator, opt: OptimizerConfig
) -> list[FrontierPoint]:
    """Nondominated (length, availability) set, sorted by length.

    A candidate is dominated when another has both no-greater length and
    no-smaller availability (strictly better in at least one).
    """
    candidates = evaluator.candidates(opt.lattices, opt.motifs)
    if len(candidates) > opt.max_candidates:
        raise InfeasibleError(
            f"candidate space of {len(candidates)} exceeds the bound {opt.max_candidates}"
        )
    evaluator.prepare_scale(candidates)
    points = [
        FrontierPoint(r.mean_isl_length_km, r.mean_availability, c)
        for r, c in ((evaluator.evaluate(c), c) for c in candidates)
    ]
    frontier = []
    for p in points:
        dominated = any(
            (q.mean_isl_length_km <= p.mean_isl_length_km and q.mean_availability >= p.mean_availability)
            and (q.mean_isl_length_km < p.mean_isl_length_km or q.mean_availability > p.mean_availability)
            for q in points
        )
        if not dominated:
            frontier.append(p)
    unique: dict[tuple[float, float], FrontierPoint] = {}
    for p in sorted(frontier, key=lambda p: (p.mean_isl_length_km, p.candidate.key)):
        unique.setdefault((p.mean_isl_length_km, p.mean_availability), p)
    return list(unique.values())

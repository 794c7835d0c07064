"""Experiment harness: Monte Carlo memory runs, sweeps, cost comparisons,
and an exhaustive enumeration oracle for small instances.

Every stochastic run is addressed by a single master seed; per-trial
streams are derived from stable indices, so results do not depend on trial
execution order or on the number of workers.
"""

from __future__ import annotations

import math
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

from .core import (
    Basis,
    CostLedger,
    DEFAULT_FAULT_LOCATIONS,
    FaultLocation,
    RngStream,
    _is_faulty,
    derive_seed,
    init_process,
    terminate,
)
from .correction import FaultCorrector, direct_correct
from .detection import detection_round
from .encoding import (
    LogicalProcess,
    PairingStrategy,
    concatenate,
    encode,
    logical_communicate,
    readout_logical,
)
from .errors import ConfigurationError

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "SweepRow",
    "SweepResult",
    "FaultInjection",
    "CostComparisonResult",
    "OracleScenario",
    "OracleResult",
    "wilson_interval",
    "config_violations",
    "memory_experiment",
    "threshold_sweep",
    "cost_comparison",
    "exhaustive_oracle",
]

_Z95 = 1.959963984540054  # two-sided 95% normal quantile


def wilson_interval(failures: int, trials: int, z: float = _Z95) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return (0.0, 1.0)
    phat = failures / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / trials + z * z / (4.0 * trials * trials)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


@dataclass(frozen=True)
class ExperimentConfig:
    """Knobs for one memory experiment."""

    tau: float
    trials: int
    seed: Optional[int] = None
    tau_ancilla: Optional[float] = None  # None: same rate as the components
    level: int = 1
    n: int = 3
    rounds: int = 1
    epochs: int = 3
    mode: str = "tracking"  # "tracking" | "direct"
    fault_locations: frozenset = DEFAULT_FAULT_LOCATIONS
    workers: int = 1

    @property
    def ancilla_tau(self) -> float:
        return self.tau if self.tau_ancilla is None else self.tau_ancilla

    def echo(self) -> Dict:
        return {
            "tau": self.tau,
            "tau_ancilla": self.ancilla_tau,
            "level": self.level,
            "n": self.n,
            "rounds": self.rounds,
            "epochs": self.epochs,
            "trials": self.trials,
            "seed": self.seed,
            "mode": self.mode,
            "fault_locations": sorted(loc.value for loc in self.fault_locations),
            "workers": self.workers,
        }


def config_violations(cfg: ExperimentConfig) -> List[str]:
    """All constraint violations of a config; empty when valid."""
    problems = []
    if not 0.0 <= cfg.tau <= 1.0:
        problems.append("tau out of [0,1]")
    if cfg.tau_ancilla is not None and not 0.0 <= cfg.tau_ancilla <= 1.0:
        problems.append("tau_ancilla out of [0,1]")
    if cfg.trials < 1:
        problems.append("trials must be >= 1")
    if cfg.epochs < 1 or cfg.epochs % 2 == 0:
        problems.append("epochs must be odd")
    if cfg.level not in (0, 1, 2):
        problems.append("level must be one of {0,1,2}")
    if cfg.n < 3 or cfg.n % 2 == 0 or cfg.n > 9:
        problems.append("n must be odd and within [3,9]")
    if cfg.rounds < 0:
        problems.append("rounds must be >= 0")
    if cfg.level >= 1 and cfg.rounds > 0 and cfg.n != 3:
        problems.append("detection requires n=3")
    if cfg.level == 2 and cfg.n != 3:
        problems.append("level 2 requires n=3")
    if cfg.mode not in ("tracking", "direct"):
        problems.append("mode must be tracking or direct")
    if cfg.workers < 1:
        problems.append("workers must be >= 1")
    return problems


@dataclass(frozen=True)
class ExperimentResult:
    """Aggregated outcome of a memory experiment."""

    failures: int
    trials: int
    logical_failure_rate: float
    ci95: Tuple[float, float]
    total_cost: int
    detections_total: int
    detections_faulty: int
    config: ExperimentConfig
    ci_method: str = "wilson"

    @property
    def empirical_detection_rate(self) -> float:
        if self.detections_total == 0:
            return 0.0
        return self.detections_faulty / self.detections_total

    def to_dict(self) -> Dict:
        return {
            "failures": self.failures,
            "trials": self.trials,
            "logical_failure_rate": self.logical_failure_rate,
            "ci95": list(self.ci95),
            "ci_method": self.ci_method,
            "total_cost": self.total_cost,
            "corrector_stats": {
                "detections_total": self.detections_total,
                "detections_faulty": self.detections_faulty,
                "empirical_rate": self.empirical_detection_rate,
            },
        }


def _build_logical(cfg: ExperimentConfig, rng: RngStream, fault_hook) -> LogicalProcess:
    locations = cfg.fault_locations

    def component(index: int):
        return init_process(0, cfg.tau, rng, locations=locations,
                            tag=("component", index), fault_hook=fault_hook)

    if cfg.level == 1:
        return encode([component(i) for i in range(cfg.n)])
    blocks = []
    for m in range(3):
        blocks.append(encode([component(3 * m + j) for j in range(3)]))
    return concatenate(blocks)


def _memory_trial(cfg: ExperimentConfig, rng: RngStream, fault_hook=None):
    """One seeded trial: encode at label 0, check-and-correct, read out.

    Returns (failed, heads_sent, detections_total, detections_faulty).
    """
    ledger = CostLedger()
    corrector = FaultCorrector()
    locations = cfg.fault_locations

    if cfg.level == 0:
        # Unencoded baseline: nothing to detect, rounds are a no-op.
        proc = init_process(0, cfg.tau, rng, locations=locations,
                            tag=("component", 0), fault_hook=fault_hook)
        outcome = terminate(proc, Basis.BIT, rng)
        return outcome != 0, ledger.heads_sent, 0, 0

    lp = _build_logical(cfg, rng, fault_hook)
    tau_a = cfg.ancilla_tau
    direct = cfg.mode == "direct"

    for _ in range(cfg.rounds):
        if cfg.level == 1:
            checked = [lp]
        else:
            checked = list(lp.children)
        for block in checked:
            det = detection_round(block, Basis.BIT, cfg.epochs, tau_a, ledger, rng,
                                  locations=locations, fault_hook=fault_hook)
            corrector.record_verdict(det, block.id)
            if direct and det.faulty:
                direct_correct(block, det.position, Basis.BIT, rng)
        if cfg.level == 2:
            det = detection_round(lp, Basis.PHASE, cfg.epochs, tau_a, ledger, rng,
                                  locations=locations, fault_hook=fault_hook)
            corrector.record_verdict(det, lp.id)
            if direct and det.faulty:
                direct_correct(lp, det.position, Basis.PHASE, rng)

    correct = corrector.correct_at_readout if not direct else None
    label = readout_logical(lp, Basis.BIT, rng, correct=correct)
    stats = corrector.stats
    return label != 0, ledger.heads_sent, stats.detections_total, stats.detections_faulty


def _trial_block(cfg: ExperimentConfig, start: int, stop: int):
    failures = heads = det_total = det_faulty = 0
    for t in range(start, stop):
        failed, cost, total, faulty = _memory_trial(cfg, RngStream(cfg.seed, (t,)))
        failures += failed
        heads += cost
        det_total += total
        det_faulty += faulty
    return failures, heads, det_total, det_faulty


def memory_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Estimate the logical failure rate of holding label 0 through
    ``rounds`` check-and-correct rounds, over ``trials`` independent trials.
    """
    problems = config_violations(cfg)
    if problems:
        raise ConfigurationError("; ".join(problems))
    if cfg.seed is None:
        raise ConfigurationError("seed is required")

    if cfg.workers > 1 and cfg.trials >= 2 * cfg.workers:
        bounds = [cfg.trials * w // cfg.workers for w in range(cfg.workers + 1)]
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(_trial_block, [cfg] * cfg.workers,
                                  bounds[:-1], bounds[1:]))
    else:
        parts = [_trial_block(cfg, 0, cfg.trials)]

    failures = sum(p[0] for p in parts)
    heads = sum(p[1] for p in parts)
    det_total = sum(p[2] for p in parts)
    det_faulty = sum(p[3] for p in parts)
    rate = failures / cfg.trials
    return ExperimentResult(
        failures=failures,
        trials=cfg.trials,
        logical_failure_rate=rate,
        ci95=wilson_interval(failures, cfg.trials),
        total_cost=heads,
        detections_total=det_total,
        detections_faulty=det_faulty,
        config=cfg,
    )


@dataclass(frozen=True)
class SweepRow:
    tau: float
    level: int
    trials: int
    failures: int
    rate: float
    ci_low: float
    ci_high: float
    total_cost: int


@dataclass(frozen=True)
class SweepResult:
    rows: Tuple[SweepRow, ...]
    pseudo_thresholds: Tuple[Dict, ...]
    ci_method: str = "wilson"


def _pair_threshold(tau_grid: Sequence[float], lower_rates: Sequence[float],
                    higher_rates: Sequence[float]) -> Tuple[Optional[float], Optional[float]]:
    """Grid pseudo-threshold for one level pair plus the interpolated crossing.

    The grid threshold is the largest grid value such that the
    higher-encoded level beats the lower one at every strictly smaller grid
    point; None when the first point already shows no benefit.
    """
    good = 0
    for lo, hi in zip(lower_rates, higher_rates):
        if hi < lo:
            good += 1
        else:
            break
    if good == 0:
        return None, None
    if good == len(tau_grid):
        return tau_grid[-1], None
    # Benefit holds up to grid[good-1] and fails at grid[good]: interpolate
    # where the rate difference crosses zero.
    t0, t1 = tau_grid[good - 1], tau_grid[good]
    d0 = lower_rates[good - 1] - higher_rates[good - 1]
    d1 = lower_rates[good] - higher_rates[good]
    crossing = t0 + (t1 - t0) * (d0 / (d0 - d1)) if d0 != d1 else (t0 + t1) / 2.0
    return tau_grid[good], crossing


def threshold_sweep(tau_grid: Sequence[float], levels: Sequence[int],
                    base_cfg: ExperimentConfig) -> SweepResult:
    """Run the memory experiment over a (tau, level) grid.

    Each cell gets its own derived seed, so the sweep is reproducible cell
    by cell.  Pseudo-thresholds are reported for each adjacent level pair.
    """
    if base_cfg.seed is None:
        raise ConfigurationError("seed is required")
    rows: List[SweepRow] = []
    rates: Dict[Tuple[float, int], float] = {}
    for i, tau in enumerate(tau_grid):
        for j, level in enumerate(levels):
            cfg = replace(base_cfg, tau=tau, level=level,
                          seed=derive_seed(base_cfg.seed, i, j))
            res = memory_experiment(cfg)
            rates[(tau, level)] = res.logical_failure_rate
            rows.append(SweepRow(tau, level, res.trials, res.failures,
                                 res.logical_failure_rate, res.ci95[0],
                                 res.ci95[1], res.total_cost))
    thresholds = []
    ordered = sorted(set(levels))
    for lower, higher in zip(ordered, ordered[1:]):
        grid_value, crossing = _pair_threshold(
            list(tau_grid),
            [rates[(t, lower)] for t in tau_grid],
            [rates[(t, higher)] for t in tau_grid])
        thresholds.append({"levels": [lower, higher],
                           "grid_threshold": grid_value,
                           "crossing": crossing})
    return SweepResult(tuple(rows), tuple(thresholds))


@dataclass(frozen=True)
class FaultInjection:
    """What gets injected before a paired fan-out/transversal comparison.

    Index tuples force flips on specific components of the freshly encoded
    operands; ``source_bit_probability`` adds a per-trial random bit fault
    at the fan-out source (sampled once, applied to both arms);
    ``live_tau`` makes the processes themselves noisy during the operation.
    """

    control_bit: Tuple[int, ...] = ()
    target_bit: Tuple[int, ...] = ()
    control_phase: Tuple[int, ...] = ()
    target_phase: Tuple[int, ...] = ()
    source_bit_probability: float = 0.0
    live_tau: float = 0.0


@dataclass(frozen=True)
class CostComparisonResult:
    trials: int
    cost_fanout: int
    cost_transversal: int
    faulty_targets_fanout: int
    faulty_targets_transversal: int
    dominance_violations: int
    per_trial: Tuple[Tuple[int, int, int, int], ...]  # (cost_f, cost_t, faulty_f, faulty_t)

    @property
    def mean_cost_fanout(self) -> float:
        return self.cost_fanout / self.trials

    @property
    def mean_cost_transversal(self) -> float:
        return self.cost_transversal / self.trials


def _comparison_arm(strategy: PairingStrategy, injection: FaultInjection,
                    source_fault: bool, fanout_source: int, n: int,
                    rng: RngStream, apply_e: bool):
    def fresh(role: str):
        comps = [init_process(0, injection.live_tau, rng, tag=(role, i))
                 for i in range(n)]
        return encode(comps)

    control = fresh("control")
    target = fresh("target")
    for i in injection.control_bit:
        control.leaves()[i]._box.bit_fault ^= True
    for i in injection.target_bit:
        target.leaves()[i]._box.bit_fault ^= True
    for i in injection.control_phase:
        control.leaves()[i]._box.phase_fault ^= True
    for i in injection.target_phase:
        target.leaves()[i]._box.phase_fault ^= True
    if source_fault:
        control.leaves()[fanout_source]._box.bit_fault ^= True

    ledger = CostLedger()
    logical_communicate(control, target, strategy, ledger, rng, apply_e=apply_e)
    faulty_targets = sum(_is_faulty(p) for p in target.leaves())
    return ledger.heads_sent, faulty_targets


def cost_comparison(injection: FaultInjection, trials: int, seed: int,
                    n: int = 3, fanout_source: int = 0,
                    apply_e: bool = True) -> CostComparisonResult:
    """Paired comparison of fan-out vs transversal coupling.

    Both arms of a trial are built from identically seeded worlds with the
    same injected faults, so ledger totals and post-operation fault counts
    are directly comparable.
    """
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    if not 0 <= fanout_source < n:
        raise ConfigurationError(f"fan-out source {fanout_source} out of range for n={n}")
    fanout = PairingStrategy.fanout(fanout_source)
    transversal = PairingStrategy.transversal()

    per_trial = []
    total_f = total_t = faulty_f = faulty_t = violations = 0
    for t in range(trials):
        source_fault = RngStream(seed, (t, 0)).coin(injection.source_bit_probability)
        cost_f, n_faulty_f = _comparison_arm(fanout, injection, source_fault,
                                             fanout_source, n,
                                             RngStream(seed, (t, 1)), apply_e)
        cost_t, n_faulty_t = _comparison_arm(transversal, injection, source_fault,
                                             fanout_source, n,
                                             RngStream(seed, (t, 1)), apply_e)
        per_trial.append((cost_f, cost_t, n_faulty_f, n_faulty_t))
        total_f += cost_f
        total_t += cost_t
        faulty_f += n_faulty_f
        faulty_t += n_faulty_t
        if cost_f < cost_t:
            violations += 1
    return CostComparisonResult(trials, total_f, total_t, faulty_f, faulty_t,
                                violations, tuple(per_trial))


@dataclass(frozen=True)
class OracleScenario:
    """A bounded instance the oracle can enumerate exactly.

    Each component gets exactly one fault site (a bit flip with probability
    ``tau`` at ``fault_location``); when ``ancilla_faults`` is set, every
    ancilla gets one bit-flip site at the same location with probability
    ``tau_ancilla``.  Phase flips are not enumerated: the bit-basis memory
    pipeline is invariant under them (phase never enters bit readouts or
    bit syndromes), so their omission does not change the failure rate.
    """

    tau: float
    tau_ancilla: float = 0.0
    level: int = 1
    n: int = 3
    rounds: int = 1
    epochs: int = 1
    mode: str = "tracking"
    fault_location: str = FaultLocation.BEFORE_TERMINATE.value
    ancilla_faults: bool = False

    def location(self) -> FaultLocation:
        if self.fault_location not in (FaultLocation.AFTER_INIT.value,
                                       FaultLocation.BEFORE_TERMINATE.value):
            raise ConfigurationError(
                "oracle fault_location must be after_init or before_terminate "
                "(single occurrence per process)")
        return FaultLocation(self.fault_location)

    def to_config(self, trials: int, seed: Optional[int],
                  workers: int = 1) -> ExperimentConfig:
        """The Monte Carlo twin of this scenario: same sites, sampled."""
        return ExperimentConfig(
            tau=self.tau, trials=trials, seed=seed, tau_ancilla=self.tau_ancilla,
            level=self.level, n=self.n, rounds=self.rounds, epochs=self.epochs,
            mode=self.mode, fault_locations=frozenset({self.location()}),
            workers=workers)


@dataclass(frozen=True)
class OracleResult:
    exact_rate: float
    site_count: int
    pattern_count: int
    failing_patterns: int
    component_sites: int
    ancilla_sites: int

    def to_dict(self) -> Dict:
        return {
            "exact_rate": self.exact_rate,
            "site_count": self.site_count,
            "pattern_count": self.pattern_count,
            "failing_patterns": self.failing_patterns,
            "component_sites": self.component_sites,
            "ancilla_sites": self.ancilla_sites,
        }


_ORACLE_SITE_CAP = 20  # at most 2**20 patterns


def _count_ancilla_events(cfg: ExperimentConfig) -> int:
    """Dry-run one trial counting ancilla fault-site visits."""
    seen = [0]

    def counting_hook(proc, location):
        if proc.tag == "ancilla":
            seen[0] += 1
        return (False, False)

    _memory_trial(cfg, RngStream(0, (0,)), fault_hook=counting_hook)
    return seen[0]


def exhaustive_oracle(scenario: OracleScenario) -> OracleResult:
    """Exact logical failure probability by enumerating every fault pattern.

    Runs the very same trial pipeline the Monte Carlo estimator uses, with
    the coin tosses replaced by a scripted assignment, and sums the exact
    probability of each failing assignment.
    """
    location = scenario.location()
    cfg = scenario.to_config(trials=1, seed=0)
    problems = config_violations(cfg)
    if problems:
        raise ConfigurationError("; ".join(problems))

    component_sites = 1 if scenario.level == 0 else 3 ** scenario.level
    ancilla_sites = _count_ancilla_events(cfg) if scenario.ancilla_faults else 0
    sites = component_sites + ancilla_sites
    if sites > _ORACLE_SITE_CAP:
        raise ConfigurationError(
            f"scenario too large to enumerate: {sites} fault sites "
            f"(2^{sites} patterns, cap is 2^{_ORACLE_SITE_CAP})")

    site_probs = [scenario.tau] * component_sites + [scenario.tau_ancilla] * ancilla_sites
    exact = 0.0
    failing = 0
    for pattern in range(1 << sites):
        bits = [(pattern >> s) & 1 for s in range(sites)]
        comp_flags = bits[:component_sites]
        anc_queue = deque(bits[component_sites:])

        def scripted_hook(proc, loc, _comp=comp_flags, _anc=anc_queue):
            tag = proc.tag
            if isinstance(tag, tuple) and tag[0] == "component":
                return (bool(_comp[tag[1]]), False)
            if tag == "ancilla" and scenario.ancilla_faults:
                return (bool(_anc.popleft()), False)
            return (False, False)

        failed, _, _, _ = _memory_trial(cfg, RngStream(0, (0,)), fault_hook=scripted_hook)
        if failed:
            failing += 1
            probability = 1.0
            for flip, p in zip(bits, site_probs):
                probability *= p if flip else (1.0 - p)
            exact += probability
    return OracleResult(exact_rate=exact, site_count=sites,
                        pattern_count=1 << sites, failing_patterns=failing,
                        component_sites=component_sites, ancilla_sites=ancilla_sites)

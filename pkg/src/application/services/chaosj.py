"""
J-Chaos Service - Coupling noise and its effect on solver success.

A programming cycle draws a random gauge, perturbs the gauged couplings with
Gaussian noise and runs X bounded heuristic solves of the perturbed instance.
An attempt counts as a hit when its best configuration, mapped back through
the gauge, reaches the ground-state energy of the UNPERTURBED instance.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import structlog

from src.application.services.landscape import overlap
from src.domain.entities.anneal import (
    CycleResult,
    GroundStateShift,
    PercentileReport,
    PerturbationSpec,
)
from src.domain.entities.chimera import (
    Gauge,
    Instance,
    apply_gauge,
    apply_gauge_config,
    energy,
)
from src.domain.entities.run import RunConfig, TemperatureLadder
from src.domain.errors import InsufficientDataError
from src.domain.ports.engine_port import SamplerPort
from src.domain.ports.exact_port import GroundStateSolver

logger = structlog.get_logger(__name__)

MIN_PERCENTILE_SAMPLES = 10
BOOTSTRAP_RESAMPLES = 1000
SEED_WORDS = 3


def _quantize(value: float, decimals: int) -> Fraction:
    scale = 10**decimals
    return Fraction(round(value * scale), scale)


def perturb(instance: Instance, spec: PerturbationSpec) -> Instance:
    """
    Shift every coupling by an independent N(0, delta_j) draw.

    Perturbed couplings are rounded to `spec.decimals` places and clamped when
    a range is given; fields change only through the optional bias hook.

    Args:
        instance: Instance to perturb
        spec: Noise level, seed and post-processing

    Returns:
        New instance with id "<id>+p<seed>", or the input itself when
        delta_j = 0 and no clamp or hook is set
    """
    if spec.delta_j == 0 and spec.clamp is None and spec.bias_hook is None:
        return instance
    rng = np.random.default_rng(spec.seed)
    noise = rng.normal(0.0, spec.delta_j, size=len(instance.couplings))
    couplings = []
    for j, r in zip(instance.couplings, noise, strict=True):
        value = float(j) + float(r)
        if spec.clamp is not None:
            value = min(max(value, spec.clamp[0]), spec.clamp[1])
        couplings.append(j if r == 0 and spec.clamp is None else _quantize(value, spec.decimals))
    fields = instance.fields
    if spec.bias_hook is not None:
        bias = spec.bias_hook(instance.graph, rng)
        fields = tuple(
            h + _quantize(float(b), spec.decimals)
            for h, b in zip(instance.fields, bias, strict=True)
        )
    return Instance(
        graph=instance.graph,
        couplings=tuple(couplings),
        fields=fields,
        seed=instance.seed,
        id=f"{instance.id}+p{spec.seed}",
    )


def gs_shift(
    instance: Instance,
    spec: PerturbationSpec,
    trials: int,
    solver: GroundStateSolver,
) -> GroundStateShift:
    """
    Compare exact ground states before and after coupling noise.

    Trial t perturbs with seed spec.seed + t. |q| is insensitive to the global
    flip, so it is maximal over the orientation of the witness pair.

    Raises:
        ExactSolverError: Propagated from the solver
    """
    original = solver.solve(instance)
    overlaps = []
    changed = 0
    for t in range(trials):
        perturbed = perturb(instance, spec.with_seed(spec.seed + t))
        result = solver.solve(perturbed)
        overlaps.append(float(abs(overlap(original.witness, result.witness))))
        if energy(instance, result.witness) != original.e0:
            changed += 1
    logger.info(
        "Ground-state shift measured",
        instance=instance.id,
        delta_j=spec.delta_j,
        trials=trials,
        changed=changed,
    )
    return GroundStateShift(
        instance_id=instance.id, delta_j=spec.delta_j, overlaps=tuple(overlaps), changed=changed
    )


@dataclass
class HeuristicBudget:
    """Bounded heuristic solve standing in for one anneal."""

    steps: int = 100
    sweeps_per_step: int = 10
    replicas: int = 1

    def run_config(self, seed: int) -> RunConfig:
        return RunConfig(
            steps=self.steps,
            seed=seed,
            sweeps_per_step=self.sweeps_per_step,
            replicas=self.replicas,
        )


def cycle_seeds(seed: int, cycle: int) -> tuple[int, int, int]:
    """(gauge, perturbation, solver) seeds of a cycle, split from the master seed."""
    words = np.random.SeedSequence(seed, spawn_key=(cycle,)).generate_state(
        SEED_WORDS, dtype=np.uint64
    )
    gauge, noise, solver = (int(w) for w in words)
    return gauge, noise, solver


class JChaosService:
    """Simulated programming cycles over a heuristic sampler."""

    def __init__(self, sampler: SamplerPort, ladder: TemperatureLadder, budget: HeuristicBudget):
        """
        Initialize the service.

        Args:
            sampler: Heuristic solver used for every attempt
            ladder: Temperature ladder of the attempts
            budget: Per-attempt sweep budget
        """
        self.sampler = sampler
        self.ladder = ladder
        self.budget = budget
        logger.info("JChaosService initialized", steps=budget.steps, replicas=budget.replicas)

    def simulate_cycles(
        self,
        instance: Instance,
        spec: PerturbationSpec,
        n_cycles: int,
        attempts: int,
        e0: Fraction,
        seed: int,
    ) -> list[CycleResult]:
        """
        Run n_cycles programming cycles of `attempts` heuristic solves each.

        Args:
            instance: Unperturbed instance
            spec: Noise level (its seed is replaced per cycle)
            n_cycles: Number of cycles
            attempts: X, solves per cycle
            e0: Exact ground-state energy of the unperturbed instance
            seed: Master seed

        Returns:
            One CycleResult per cycle
        """
        if attempts < 1:
            raise ValueError("attempts must be at least 1")
        results = []
        for cycle in range(n_cycles):
            gauge_seed, perturb_seed, solver_seed = cycle_seeds(seed, cycle)
            gauge = Gauge.random(instance.size, gauge_seed)
            programmed = perturb(apply_gauge(instance, gauge), spec.with_seed(perturb_seed))
            outcomes = self.sampler.solve_batch(
                [programmed] * attempts, self.ladder, self.budget.run_config(solver_seed)
            )
            hits = sum(
                energy(instance, apply_gauge_config(o.best_config, gauge)) == e0 for o in outcomes
            )
            results.append(
                CycleResult(
                    instance_id=instance.id,
                    cycle=cycle,
                    gauge_seed=gauge_seed,
                    perturb_seed=perturb_seed,
                    attempts=attempts,
                    hits=hits,
                )
            )
            logger.debug("Cycle completed", instance=instance.id, cycle=cycle, hits=hits)
        return results


def percentile(p_values: Sequence[float], quantile: float) -> float:
    """
    Empirical quantile with linear interpolation between order statistics.

    Raises:
        InsufficientDataError: With fewer than 10 values
    """
    if len(p_values) < MIN_PERCENTILE_SAMPLES:
        raise InsufficientDataError(
            f"percentiles need at least {MIN_PERCENTILE_SAMPLES} cycles, got {len(p_values)}"
        )
    if not 0.0 <= quantile <= 1.0:
        raise ValueError("quantile must lie in [0, 1]")
    return float(np.quantile(np.asarray(p_values, dtype=float), quantile, method="linear"))


def percentile_ratio(i80: float, i90: float) -> float | None:
    """I_0.8 / I_0.9, or None when I_0.9 is zero."""
    if i90 == 0:
        return None
    return i80 / i90


def ratio_89(p_values: Sequence[float]) -> float | None:
    return percentile_ratio(percentile(p_values, 0.8), percentile(p_values, 0.9))


def bootstrap_median_error(
    p_values: Sequence[float], resamples: int = BOOTSTRAP_RESAMPLES, seed: int = 0
) -> float:
    """Standard deviation of the median over bootstrap resamples."""
    values = np.asarray(p_values, dtype=float)
    if values.size == 0:
        return float("nan")
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, values.size, size=(resamples, values.size))
    return float(np.median(values[picks], axis=1).std(ddof=1))


def percentile_report(
    instance_id: str, results: Sequence[CycleResult], seed: int = 0
) -> PercentileReport:
    """I_50, I_80, I_90, R_89 and the bootstrap error of the median."""
    p = [r.p for r in results]
    i50, i80, i90 = (percentile(p, q) for q in (0.5, 0.8, 0.9))
    return PercentileReport(
        instance_id=instance_id,
        cycles=len(p),
        i50=i50,
        i80=i80,
        i90=i90,
        r89=percentile_ratio(i80, i90),
        i50_error=bootstrap_median_error(p, seed=seed),
    )


def format_uncertainty(value: float, error: float) -> str:
    """
    Render value(error) with one significant error digit, e.g. 6.7(5)e-04.

    Falls back to the bare value when the error is missing or not positive.
    """
    if not math.isfinite(value):
        return str(value)
    if not (math.isfinite(error) and error > 0):
        return f"{value:.9g}"
    reference = abs(value) if value != 0 else error
    exponent = math.floor(math.log10(reference))
    mantissa = value / 10**exponent
    scaled_error = error / 10**exponent
    places = max(0, -math.floor(math.log10(scaled_error)))
    digit = round(scaled_error * 10**places)
    if digit >= 10 and places > 0:
        places -= 1
        digit = round(scaled_error * 10**places)
    return f"{mantissa:.{places}f}({digit})e{exponent:+03d}"

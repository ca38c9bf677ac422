"""
Mixing Service - Classical hardness from the temperature random walk.

The autocorrelation C_PT(s) of the ladder index i_t decays as a sum of
exponentials; the slowest scale of a two-exponential fit is the mixing time tau.
Instances whose tau cannot be resolved from a run are escalated to longer runs,
worst figure of merit first.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt
import structlog
from scipy import optimize, stats

from src.domain.entities.chimera import Instance
from src.domain.entities.hardness import (
    CorrelationCurve,
    FitStatus,
    HardnessReport,
    HardnessStatus,
    RoundRecord,
    TwoExpFit,
    WalkTrace,
)
from src.domain.entities.run import SHORT_LAGS, RunConfig, RunOutput, TemperatureLadder
from src.domain.ports.engine_port import SamplerPort

logger = structlog.get_logger(__name__)

LAGS_PER_DECADE = 20
WINDOW_FRACTION = 0.05
MIN_FIT_POINTS = 8
NEGLIGIBLE_AMPLITUDE = 1e-6
HIGH_TEMPERATURE_INDEX = 16
GENERATION_SPAN = 3.0
TRACE_BUDGET = 2**14  # stored samples per copy in escalation runs


def traces_from_output(output: RunOutput) -> list[WalkTrace]:
    """
    Split a run's trace block into per-copy walk traces.

    Raises:
        ValueError: If the run kept only every d-th step
    """
    if output.trace_stride > 1:
        raise ValueError(
            f"run of {output.instance_id} kept one step in {output.trace_stride}; "
            "its walk is summarized, not traced"
        )
    return [
        WalkTrace(
            copy_id=c,
            series=output.traces[c],
            n_temperatures=output.ladder.size,
            sweeps_per_step=output.sweeps_per_step,
        )
        for c in range(output.n_copies)
    ]


def lag_grid(length: int) -> npt.NDArray[np.int64]:
    """Lags 0..63 followed by log-spaced lags, all up to length // 4."""
    max_lag = length // 4
    linear = np.arange(min(SHORT_LAGS, max_lag + 1), dtype=np.int64)
    if max_lag < SHORT_LAGS:
        return linear
    decades = math.log10(max_lag / SHORT_LAGS)
    count = max(int(math.ceil(decades * LAGS_PER_DECADE)) + 1, 2)
    spaced = np.geomspace(SHORT_LAGS, max_lag, count).astype(np.int64)
    return np.unique(np.concatenate([linear, spaced]))


def _series_matrix(traces: Sequence[WalkTrace]) -> tuple[npt.NDArray[np.int64], int, int]:
    if not traces:
        raise ValueError("Cannot correlate an empty trace set")
    length = traces[0].length
    n_temps = traces[0].n_temperatures
    sweeps = traces[0].sweeps_per_step
    for trace in traces[1:]:
        if trace.length != length or trace.n_temperatures != n_temps:
            raise ValueError("All traces must share length and ladder size")
        if trace.sweeps_per_step != sweeps:
            raise ValueError("All traces must share sweeps_per_step")
    return np.stack([t.series.astype(np.int64) for t in traces]), length, n_temps


def _lag_sums(
    series: npt.NDArray[np.int64], lags: npt.NDArray[np.int64]
) -> npt.NDArray[np.int64]:
    """Exact per-copy sums of i_t * i_{t+s}, shape (copies, lags)."""
    length = series.shape[1]
    sums = np.empty((series.shape[0], lags.size), dtype=np.int64)
    for j, s in enumerate(lags):
        sums[:, j] = np.einsum("ct,ct->c", series[:, : length - s], series[:, s:])
    return sums


@dataclass(frozen=True, slots=True, eq=False)
class LagSums:
    """
    Per-copy sums of i_t * i_{t+s}: everything C_PT and its jackknife need.

    Attributes:
        lags: Lags in elementary steps, strictly increasing from 0
        sums: (copies, lags) exact integer sums
        pairs: (t, t + s) pairs behind each copy's sum, per lag
        n_temperatures: Ladder size N_T
        sweeps_per_step: Conversion factor to sweeps
        trace_length: Run length L in elementary steps
    """

    lags: npt.NDArray[np.int64]
    sums: npt.NDArray[np.int64]
    pairs: npt.NDArray[np.int64]
    n_temperatures: int
    sweeps_per_step: int
    trace_length: int

    def curve(self, copies: npt.NDArray[np.int64] | None = None) -> CorrelationCurve:
        """Copy-averaged C_PT, optionally over a subset of copies."""
        sums = self.sums if copies is None else self.sums[copies]
        counts = sums.shape[0] * self.pairs
        values = sums.sum(axis=0) / counts - (self.n_temperatures + 1) ** 2 / 4.0
        return CorrelationCurve(
            lags=self.lags,
            values=values.astype(np.float64),
            counts=counts.astype(np.int64),
            n_temperatures=self.n_temperatures,
            sweeps_per_step=self.sweeps_per_step,
            trace_length=self.trace_length,
        )


def _trace_sums(
    traces: Sequence[WalkTrace], lags: npt.NDArray[np.int64] | None = None
) -> LagSums:
    series, length, n_temps = _series_matrix(traces)
    grid = lag_grid(length) if lags is None else np.asarray(lags, dtype=np.int64)
    if grid.size and (grid.min() < 0 or grid.max() >= length):
        raise ValueError(f"lags must lie in 0..{length - 1}")
    return LagSums(
        lags=grid,
        sums=_lag_sums(series, grid),
        pairs=length - grid,
        n_temperatures=n_temps,
        sweeps_per_step=traces[0].sweeps_per_step,
        trace_length=length,
    )


def run_lag_sums(output: RunOutput) -> LagSums:
    """
    Lag sums of a run on the lag grid of its full length.

    A decimated run takes lags below 64 from its exact short-lag sums. Longer
    lags are rounded up to multiples of the stride and averaged over the stored
    samples only.
    """
    if output.walk is None:
        return _trace_sums(traces_from_output(output))
    length, stride = output.steps, output.trace_stride
    grid = lag_grid(length)
    short = grid[grid < SHORT_LAGS]
    multiples = np.unique(-(-grid[grid >= SHORT_LAGS] // stride))
    multiples = multiples[multiples < output.samples]
    return LagSums(
        lags=np.concatenate([short, multiples * stride]),
        sums=np.hstack(
            [
                output.walk.short_lag_sums[:, short],
                _lag_sums(output.traces.astype(np.int64), multiples),
            ]
        ),
        pairs=np.concatenate([length - short, output.samples - multiples]),
        n_temperatures=output.ladder.size,
        sweeps_per_step=output.sweeps_per_step,
        trace_length=length,
    )


def correlation(
    traces: Sequence[WalkTrace], lags: npt.NDArray[np.int64] | None = None
) -> CorrelationCurve:
    """
    Time-and-copy averaged C_PT(s) = <i_t i_{t+s}> - (N_T + 1)^2 / 4.

    Args:
        traces: Walk traces of equal length and ladder size
        lags: Optional lag grid in elementary steps, `lag_grid(L)` by default

    Returns:
        CorrelationCurve with lags up to L / 4

    Raises:
        ValueError: If the trace set is empty or inconsistent
    """
    return _trace_sums(traces, lags).curve()


def _log_linear(s: npt.NDArray[np.float64], c: npt.NDArray[np.float64]) -> tuple[float, float]:
    """(amplitude, tau) of a single exponential through positive points."""
    keep = c > 0
    if keep.sum() < 2:
        return float("nan"), float("nan")
    fit = stats.linregress(s[keep], np.log(c[keep]))
    if fit.slope >= 0:
        return float("nan"), float("nan")
    return float(math.exp(fit.intercept)), float(-1.0 / fit.slope)


def _fit_window(
    curve: CorrelationCurve,
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    c0 = curve.values[0]
    lags = curve.lags.astype(np.float64)
    below = np.flatnonzero((curve.values < WINDOW_FRACTION * c0) & (curve.lags >= 1))
    stop = int(below[0]) if below.size else lags.size
    window = (curve.lags[:stop] >= 1) & (curve.values[:stop] > 0)
    return lags[:stop][window], curve.values[:stop][window]


def fit_two_exp(curve: CorrelationCurve) -> TwoExpFit:
    """
    Least-squares fit of C(s) = a1 exp(-s / tau1) + a2 exp(-s / tau2).

    The fit uses lags >= 1 up to the first lag where C drops below 5% of C(0).
    Initial guesses come from a log-linear fit of the window's tail and of the
    early-lag residual. Times are in elementary steps.

    Args:
        curve: Correlation curve with C(0) at lag 0

    Returns:
        A converged fit with tau >= tau_sub > 0, or an unresolved marker
    """
    if curve.lags.size == 0 or curve.lags[0] != 0:
        return TwoExpFit.unresolved()
    c0 = float(curve.values[0])
    if not math.isfinite(c0) or c0 <= 0:
        return TwoExpFit.unresolved()
    s, c = _fit_window(curve)
    if s.size < MIN_FIT_POINTS:
        return TwoExpFit.unresolved(points=int(s.size))

    s_max = float(s[-1])
    tail = s >= s_max / 2
    a1, tau1 = _log_linear(s[tail], c[tail])
    if not (math.isfinite(tau1) and tau1 > 0):
        a1, tau1 = _log_linear(s, c)
    if not (math.isfinite(tau1) and tau1 > 0):
        return TwoExpFit.unresolved(points=int(s.size))

    early = ~tail
    a2, tau2 = _log_linear(s[early], c[early] - a1 * np.exp(-s[early] / tau1))
    if not (math.isfinite(tau2) and 0 < tau2 < tau1 and a2 > 0):
        a2, tau2 = 0.05 * a1, tau1 / 10.0

    def residuals(p: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
        model = p[0] * np.exp(-s / p[1]) + p[2] * np.exp(-s / p[3])
        return (model - c) / c0

    tau_ceiling = 1e6 * max(s_max, 1.0)
    lower = [0.0, 1e-3, 0.0, 1e-3]
    upper = [np.inf, tau_ceiling, np.inf, tau_ceiling]
    start = np.clip([a1, tau1, a2, tau2], np.add(lower, 1e-12), np.subtract(upper, 1.0))
    try:
        result = optimize.least_squares(
            residuals, start, bounds=(lower, upper), x_scale="jac", max_nfev=2000
        )
    except (ValueError, np.linalg.LinAlgError):
        return TwoExpFit.unresolved(points=int(s.size))
    if not result.success or not np.all(np.isfinite(result.x)):
        return TwoExpFit.unresolved(points=int(s.size))

    fa1, ftau1, fa2, ftau2 = (float(v) for v in result.x)
    if ftau2 > ftau1:
        fa1, ftau1, fa2, ftau2 = fa2, ftau2, fa1, ftau1
    scale = max(fa1, fa2)
    if scale <= 0:
        return TwoExpFit.unresolved(points=int(s.size))
    if fa1 <= NEGLIGIBLE_AMPLITUDE * scale:
        fa1, ftau1, fa2, ftau2 = fa2, ftau2, 0.0, ftau2
    elif fa2 <= NEGLIGIBLE_AMPLITUDE * scale:
        fa2 = 0.0

    return TwoExpFit(
        status=FitStatus.CONVERGED,
        tau=ftau1,
        tau_sub=min(ftau2, ftau1),
        a1=fa1,
        a2=fa2,
        residual=float(np.sqrt(np.mean(result.fun**2))),
        points=int(s.size),
    )


def figure_of_merit(
    traces: Sequence[WalkTrace], threshold: int = HIGH_TEMPERATURE_INDEX
) -> float:
    """
    Minimum over copies of the fraction of time spent at ladder index >= threshold.

    Small values flag copies trapped at low temperature.
    """
    if not traces:
        raise ValueError("Cannot score an empty trace set")
    return float(min(np.mean(t.series >= threshold) for t in traces))


def run_figure_of_merit(output: RunOutput, threshold: int = HIGH_TEMPERATURE_INDEX) -> float:
    """Figure of merit of a run; decimated runs use their exact ladder occupancy."""
    if output.walk is None:
        return figure_of_merit(traces_from_output(output), threshold)
    high = output.walk.occupancy[:, threshold - 1 :].sum(axis=1)
    return float((high / output.steps).min())


def assign_generation(tau: float) -> int | None:
    """
    Generation k with 10^k <= tau <= 3 * 10^k, or None between bins.

    Raises:
        ValueError: If tau is not positive
    """
    if not tau > 0 or not math.isfinite(tau):
        raise ValueError("tau must be a positive finite number")
    base = math.floor(math.log10(tau))
    for k in (base - 1, base, base + 1):
        if 10.0**k <= tau <= GENERATION_SPAN * 10.0**k:
            return k
    return None


def _jackknife(table: LagSums, groups: int) -> float:
    copies = table.sums.shape[0]
    if groups < 2 or copies % groups:
        return float("nan")
    size = copies // groups
    estimates = []
    for g in range(groups):
        fit = fit_two_exp(table.curve(np.r_[0 : g * size, (g + 1) * size : copies]))
        if fit.converged:
            estimates.append(fit.tau)
    if len(estimates) < 2:
        return float("nan")
    values = np.asarray(estimates)
    n = values.size
    return float(math.sqrt((n - 1) / n * np.sum((values - values.mean()) ** 2)))


def jackknife_tau(traces: Sequence[WalkTrace], groups: int) -> float:
    """
    Leave-one-group-out jackknife error of tau (elementary steps).

    Copies are split into `groups` contiguous groups (one per replica for
    engine traces). Returns NaN when fewer than two groups give a converged fit.
    """
    if groups < 2 or len(traces) % groups:
        return float("nan")
    return _jackknife(_trace_sums(traces), groups)


@dataclass(frozen=True, slots=True)
class RunAnalysis:
    """Mixing analysis of one run."""

    fit: TwoExpFit
    figure_of_merit: float
    steps: int
    sweeps_per_step: int
    tau_error_steps: float

    def resolvable(self, factor: float) -> bool:
        """Whether the run is at least `factor` times the fitted tau."""
        return self.fit.converged and self.steps >= factor * self.fit.tau


def analyze_run(output: RunOutput) -> RunAnalysis:
    """Fit tau, score the figure of merit and jackknife one run."""
    table = run_lag_sums(output)
    fit = fit_two_exp(table.curve())
    error = _jackknife(table, output.replicas) if fit.converged else float("nan")
    return RunAnalysis(
        fit=fit,
        figure_of_merit=run_figure_of_merit(output),
        steps=output.steps,
        sweeps_per_step=output.sweeps_per_step,
        tau_error_steps=error,
    )


def hardness_report(
    instance_id: str,
    analysis: RunAnalysis,
    status: HardnessStatus,
    rounds: int,
    resolvability: float,
) -> HardnessReport:
    """
    Report of one instance from its latest run analysis.

    Resolved reports carry tau in sweeps and a generation; lower bounds carry
    steps * sweeps_per_step / resolvability; unresolved reports carry NaN.
    """
    fit = analysis.fit
    sps = analysis.sweeps_per_step
    if status is HardnessStatus.RESOLVED:
        tau = fit.tau * sps
        return HardnessReport(
            instance_id=instance_id,
            status=status,
            tau=tau,
            tau_sub=fit.tau_sub * sps,
            a1=fit.a1,
            a2=fit.a2,
            residual=fit.residual,
            figure_of_merit=analysis.figure_of_merit,
            generation=assign_generation(tau),
            rounds=rounds,
            steps=analysis.steps,
            tau_error=analysis.tau_error_steps * sps,
        )
    bound = (
        analysis.steps * sps / resolvability
        if status is HardnessStatus.LOWER_BOUND
        else float("nan")
    )
    return HardnessReport(
        instance_id=instance_id,
        status=status,
        tau=bound,
        tau_sub=fit.tau_sub * sps if fit.converged else float("nan"),
        a1=fit.a1,
        a2=fit.a2,
        residual=fit.residual,
        figure_of_merit=analysis.figure_of_merit,
        generation=None,
        rounds=rounds,
        steps=analysis.steps,
    )


@dataclass
class EscalationConfig:
    """Configuration of the multi-round hardness protocol."""

    round_steps: tuple[int, ...] = (10**5, 10**6, 10**7)
    survivor_caps: tuple[int, ...] = (64, 16)
    resolvability: float = 10.0  # trusted only when steps >= resolvability * tau
    sweeps_per_step: int = 10
    replicas: int = 4
    seed: int = 0
    trace_budget: int | None = TRACE_BUDGET

    def __post_init__(self) -> None:
        """Validate rounds and caps."""
        if not self.round_steps or any(s < 1 for s in self.round_steps):
            raise ValueError("round_steps must be positive")
        if len(self.survivor_caps) != len(self.round_steps) - 1:
            raise ValueError("one survivor cap is required per round after the first")
        if any(c < 0 for c in self.survivor_caps):
            raise ValueError("survivor caps cannot be negative")


@dataclass
class EscalationOutcome:
    """Reports in input order plus the per-round advancement log."""

    reports: list[HardnessReport]
    rounds: list[RoundRecord] = field(default_factory=list)


class HardnessService:
    """
    Multi-round mixing-time measurement.

    Round 1 runs every instance. Instances whose fit is unresolved or whose tau
    exceeds the resolvable bound advance, worst figure of merit first, capped at
    the configured survivor counts. Instances still unresolved after the final
    round are reported as lower bounds.
    """

    def __init__(self, sampler: SamplerPort, config: EscalationConfig | None = None):
        """
        Initialize the service.

        Args:
            sampler: Parallel-tempering sampler (real engine or synthetic)
            config: Escalation settings
        """
        self.sampler = sampler
        self.config = config or EscalationConfig()
        logger.info(
            "HardnessService initialized",
            round_steps=self.config.round_steps,
            survivor_caps=self.config.survivor_caps,
        )

    def _report(
        self,
        instance: Instance,
        analysis: RunAnalysis,
        status: HardnessStatus,
        rounds: int,
    ) -> HardnessReport:
        return hardness_report(instance.id, analysis, status, rounds, self.config.resolvability)

    def escalate(
        self, instances: Sequence[Instance], ladder: TemperatureLadder
    ) -> EscalationOutcome:
        """
        Run the escalation protocol.

        Args:
            instances: Instances to classify
            ladder: Temperature ladder

        Returns:
            EscalationOutcome with one report per instance in input order
        """
        cfg = self.config
        reports: dict[str, HardnessReport] = {}
        records: list[RoundRecord] = []
        pending = list(instances)
        latest: dict[str, RunAnalysis] = {}
        last_round = len(cfg.round_steps)

        for rnd, steps in enumerate(cfg.round_steps, start=1):
            if not pending:
                break
            if rnd > 1:
                pending.sort(key=lambda inst: latest[inst.id].figure_of_merit)
                cap = cfg.survivor_caps[rnd - 2]
                for inst in pending[cap:]:
                    reports[inst.id] = self._report(
                        inst, latest[inst.id], HardnessStatus.UNRESOLVED, rnd - 1
                    )
                pending = pending[:cap]
                if not pending:
                    break

            logger.info("Round started", round=rnd, steps=steps, instances=len(pending))
            run_config = RunConfig(
                steps=steps,
                seed=cfg.seed + rnd - 1,
                sweeps_per_step=cfg.sweeps_per_step,
                replicas=cfg.replicas,
                trace_budget=cfg.trace_budget,
            )
            outputs = self.sampler.run(pending, ladder, run_config)
            survivors = []
            for inst, output in zip(pending, outputs, strict=True):
                analysis = analyze_run(output)
                latest[inst.id] = analysis
                if analysis.resolvable(cfg.resolvability):
                    reports[inst.id] = self._report(inst, analysis, HardnessStatus.RESOLVED, rnd)
                elif rnd == last_round:
                    reports[inst.id] = self._report(
                        inst, analysis, HardnessStatus.LOWER_BOUND, rnd
                    )
                else:
                    if not analysis.fit.converged:
                        logger.warning("Fit unresolved", instance=inst.id, round=rnd)
                    survivors.append(inst)
            records.append(
                RoundRecord(
                    round=rnd,
                    steps=steps,
                    simulated=tuple(inst.id for inst in pending),
                    advanced=tuple(inst.id for inst in survivors),
                )
            )
            logger.info("Round completed", round=rnd, survivors=len(survivors))
            pending = survivors

        return EscalationOutcome(
            reports=[reports[inst.id] for inst in instances], rounds=records
        )

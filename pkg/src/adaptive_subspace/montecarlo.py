"""Monte Carlo protocol: threshold calibration, Pd curves, and Pfa sweeps.

Trial ``t`` of any experiment draws from its own counter-based stream, so a
result depends only on ``(config, detector list, master_seed)``. Trials are
split into fixed-size chunks that may run on a process pool; chunk
boundaries do not depend on the worker count and results are reassembled in
trial order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest

from . import detectors, rng
from .rng import RngStream
from .scenario import H0, H1, ScenarioConfig, generate_dataset, scene

CHUNK = 250


@dataclass(frozen=True)
class CalibrationSpec:
    detector: str
    pfa: float
    trials: int | None = None
    master_seed: int = 0

    def __post_init__(self):
        if not 0 < self.pfa < 1:
            raise ValueError(f"pfa must lie in (0, 1), got {self.pfa}")
        if self.trials is None:
            object.__setattr__(self, "trials", default_calibration_trials(self.pfa))
        if self.pfa * self.trials < 10:
            raise ValueError(
                f"pfa * trials must be at least 10, got {self.pfa} * {self.trials}"
            )


@dataclass(frozen=True)
class ThresholdRow:
    detector: str
    scenario_hash: str
    pfa: float
    eta: float
    trials: int
    master_seed: int
    error: str | None = None


@dataclass
class PdCurve:
    detector: str
    sinr_grid: list[float]
    pd: list[float]
    trials: int
    master_seed: int
    scenario_hash: str
    wilson_ci: list[tuple[float, float]] = field(default_factory=list)


class ScenarioMismatchError(ValueError):
    """A threshold is being applied to a configuration it was not calibrated on."""


def default_calibration_trials(pfa: float) -> int:
    return int(round(100 / pfa))


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    if trials == 0:
        return (0.0, 1.0)
    ci = binomtest(int(successes), int(trials)).proportion_ci(confidence, method="wilson")
    return (float(ci.low), float(ci.high))


def threshold_from_statistics(values, pfa: float) -> float:
    """Midpoint between the ``m``-th and ``(m+1)``-th largest values,
    ``m = round(pfa * n)``; exactly ``m`` distinct values exceed it."""
    values = np.sort(np.asarray(values, dtype=float))[::-1]
    n = values.size
    m = int(round(pfa * n))
    if not 1 <= m < n:
        raise ValueError(f"need 1 <= round(pfa * trials) < trials, got m={m}, trials={n}")
    hi, lo = values[m - 1], values[m]
    if hi == lo:
        return float(hi)
    return float(lo + 0.5 * (hi - lo))


def _run_chunk(cfg: ScenarioConfig, names: tuple, truth: str, sinr_db, master_seed: int,
               ids: list[int]) -> np.ndarray:
    H = scene(cfg).H
    out = np.empty((len(ids), len(names)))
    for k, sid in enumerate(ids):
        data = generate_dataset(cfg, truth, sinr_db, RngStream(master_seed, sid))
        out[k] = detectors.evaluate(names, data.Z_P, data.Z_S, H, cfg.r)
    return out


def simulate_statistics(names, cfg: ScenarioConfig, truth: str, sinr_db, stream_ids,
                        master_seed: int, workers: int = 1) -> np.ndarray:
    """Statistics of ``names`` on one dataset per stream id, shape ``(trials, detectors)``.

    All detectors see the same data (common random numbers).
    """
    names = tuple(names)
    ids = list(stream_ids)
    chunks = [ids[i:i + CHUNK] for i in range(0, len(ids), CHUNK)]
    if not chunks:
        return np.empty((0, len(names)))
    args = (cfg, names, truth, sinr_db, master_seed)
    if workers <= 1 or len(chunks) == 1:
        parts = [_run_chunk(*args, c) for c in chunks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_chunk, *args, c) for c in chunks]
            parts = [f.result() for f in futures]
    return np.concatenate(parts, axis=0)


def _streams(purpose: int, point: int, trials: int) -> list[int]:
    return [rng.stream_id(purpose, point, t) for t in range(trials)]


def calibrate_thresholds(names, cfg: ScenarioConfig, pfa: float, trials: int | None = None,
                         master_seed: int = 0, workers: int = 1) -> list[ThresholdRow]:
    """Calibrate several detectors on one shared batch of H0 trials.

    Inapplicable detectors get a row with ``eta = nan`` and ``error`` set;
    the others still run.
    """
    specs = [CalibrationSpec(n, pfa, trials, master_seed) for n in names]
    n_trials = specs[0].trials if specs else 0
    digest = cfg.digest()
    rows: dict[str, ThresholdRow] = {}
    runnable = []
    for spec in specs:
        try:
            detectors.check_applicable(spec.detector, cfg)
        except detectors.PreconditionError as exc:
            rows[spec.detector] = ThresholdRow(spec.detector, digest, pfa, math.nan,
                                               n_trials, master_seed, str(exc))
        else:
            runnable.append(spec.detector)
    if runnable:
        stats = simulate_statistics(runnable, cfg, H0, None,
                                    _streams(rng.CALIBRATE, 0, n_trials), master_seed, workers)
        for k, name in enumerate(runnable):
            eta = threshold_from_statistics(stats[:, k], pfa)
            rows[name] = ThresholdRow(name, digest, pfa, eta, n_trials, master_seed)
    return [rows[s.detector] for s in specs]


def calibrate_threshold(spec: CalibrationSpec, cfg: ScenarioConfig, workers: int = 1) -> ThresholdRow:
    """Threshold for one detector from ``spec.trials`` H0 trials on streams
    ``(master_seed, trial_index)``. Raises on an inapplicable detector."""
    detectors.check_applicable(spec.detector, cfg)
    (row,) = calibrate_thresholds([spec.detector], cfg, spec.pfa, spec.trials,
                                  spec.master_seed, workers)
    return row


def _resolve_eta(detector: str, cfg: ScenarioConfig, eta) -> float:
    if isinstance(eta, ThresholdRow):
        if eta.error is not None:
            raise ValueError(f"threshold for {eta.detector} is an error record: {eta.error}")
        if eta.detector != detector:
            raise ValueError(f"threshold belongs to {eta.detector}, not {detector}")
        if eta.scenario_hash != cfg.digest():
            raise ScenarioMismatchError(
                f"threshold for {detector} was calibrated on scenario {eta.scenario_hash}, "
                f"not {cfg.digest()}"
            )
        return eta.eta
    return float(eta)


def detection_counts(names, cfg: ScenarioConfig, etas, sinr_db: float, trials: int,
                     master_seed: int, point: int = 0, workers: int = 1) -> np.ndarray:
    """Exceedance counts of each detector over one batch of H1 trials."""
    etas = np.array([_resolve_eta(n, cfg, e) for n, e in zip(names, etas)])
    stats = simulate_statistics(names, cfg, H1, sinr_db,
                                _streams(rng.DETECT, point, trials), master_seed, workers)
    return np.count_nonzero(stats > etas, axis=0)


def estimate_pd(detector: str, cfg: ScenarioConfig, eta, sinr_db: float, trials: int = 1000,
                master_seed: int = 0, point: int = 0, workers: int = 1):
    """Fraction of H1 trials whose statistic exceeds ``eta``, with a Wilson 95% CI.

    ``eta`` is a float or a :class:`ThresholdRow`; a row calibrated on another
    scenario is refused.
    """
    (count,) = detection_counts([detector], cfg, [eta], sinr_db, trials, master_seed,
                                point, workers)
    return count / trials, wilson_interval(count, trials)


def pd_curves(names, cfg: ScenarioConfig, etas, sinr_grid, trials: int = 1000,
              master_seed: int = 0, workers: int = 1) -> list[PdCurve]:
    """Pd versus SINR for several detectors with common random numbers.

    Grid point ``p`` uses streams ``(DETECT, p, t)``, shared by all detectors.
    """
    grid = [float(s) for s in sinr_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("sinr grid must be strictly ascending")
    names = list(names)
    for n, e in zip(names, etas):
        _resolve_eta(n, cfg, e)
    curves = [PdCurve(n, grid, [], trials, master_seed, cfg.digest()) for n in names]
    for p, sinr in enumerate(grid):
        counts = detection_counts(names, cfg, etas, sinr, trials, master_seed, p, workers)
        for curve, count in zip(curves, counts):
            curve.pd.append(count / trials)
            curve.wilson_ci.append(wilson_interval(count, trials))
    return curves


def pd_curve(detector: str, cfg: ScenarioConfig, eta, sinr_grid, trials: int = 1000,
             master_seed: int = 0, workers: int = 1) -> PdCurve:
    (curve,) = pd_curves([detector], cfg, [eta], sinr_grid, trials, master_seed, workers)
    return curve


SWEEP_PARAMS = ("cnr_db", "gamma")


def pfa_sweeps(names, cfg: ScenarioConfig, etas, param: str, values, trials: int,
               master_seed: int = 0, workers: int = 1) -> dict[str, list[tuple[float, float]]]:
    """Empirical Pfa of fixed thresholds as one disturbance parameter varies.

    Thresholds must have been calibrated on ``cfg`` (the nominal scenario);
    each swept value regenerates H0 data with ``param`` replaced. Every value
    reuses the calibration trial streams, so the sweep measures the effect of
    the parameter alone: at the nominal value (and the calibration trial
    count) the estimate is exactly ``round(pfa * trials) / trials``, and a
    parameter the data ignore leaves it unchanged.
    """
    if param not in SWEEP_PARAMS:
        raise ValueError(f"param must be one of {SWEEP_PARAMS}, got {param!r}")
    names = list(names)
    eta_arr = np.array([_resolve_eta(n, cfg, e) for n, e in zip(names, etas)])
    out: dict[str, list[tuple[float, float]]] = {n: [] for n in names}
    streams = _streams(rng.CALIBRATE, 0, trials)
    for value in values:
        perturbed = cfg.replace(**{param: float(value)})
        stats = simulate_statistics(names, perturbed, H0, None, streams, master_seed, workers)
        counts = np.count_nonzero(stats > eta_arr, axis=0)
        for n, c in zip(names, counts):
            out[n].append((float(value), c / trials))
    return out


def pfa_sweep(detector: str, cfg: ScenarioConfig, eta, param: str, values, trials: int,
              master_seed: int = 0, workers: int = 1) -> list[tuple[float, float]]:
    return pfa_sweeps([detector], cfg, [eta], param, values, trials, master_seed, workers)[detector]


def empirical_pfa(names, cfg: ScenarioConfig, etas, trials: int, master_seed: int = 0,
                  workers: int = 1) -> np.ndarray:
    """Exceedance fractions on a fresh H0 batch, disjoint from calibration streams."""
    eta_arr = np.array([_resolve_eta(n, cfg, e) for n, e in zip(names, etas)])
    stats = simulate_statistics(list(names), cfg, H0, None,
                                _streams(rng.VALIDATE, 0, trials), master_seed, workers)
    return np.count_nonzero(stats > eta_arr, axis=0) / trials

"""Command-line front end: calibrate thresholds, estimate Pd curves, sweep Pfa.

Configuration is an INI file::

    [scenario]
    N = 8
    K_P = 8
    K_S = 16
    r = 2
    cnr_db = 30
    rho_c = 0.95
    gamma = 2
    env = HE
    order = first

    [montecarlo]
    pfa = 0.01
    calib_trials = 10000
    pd_trials = 1000
    master_seed = 1
    detectors = FO-KS-HE, FO-US-HE

    [sinr]
    start_db = 10
    stop_db = 30
    step_db = 2

All CSV output uses LF line endings and 17 significant digits.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import io
import math
import sys
from dataclasses import dataclass
from pathlib import Path

from . import detectors
from . import montecarlo as mc
from .scenario import FIRST, HE, PHE, SECOND, ScenarioConfig

THRESHOLD_HEADER = ["detector", "scenario_hash", "pfa", "eta", "trials", "seed"]
PD_HEADER = ["detector", "env", "order", "subspace", "K_S", "sinr_db", "pd",
             "ci_low", "ci_high", "trials", "seed"]
SWEEP_HEADER = ["detector", "param", "value", "pfa_hat", "trials", "seed"]

_INT_FIELDS = {"N", "K_P", "K_S", "r"}
_STR_FIELDS = {"env", "order"}


class ConfigError(ValueError):
    pass


def fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


@dataclass(frozen=True)
class RunConfig:
    scenario: ScenarioConfig
    detectors: tuple[str, ...]
    pfa: float = 1e-2
    calib_trials: int = 10_000
    pd_trials: int = 1000
    master_seed: int = 0
    sinr_start_db: float = 0.0
    sinr_stop_db: float = 30.0
    sinr_step_db: float = 2.0
    sweep_trials: int | None = None

    def sinr_grid(self) -> list[float]:
        if self.sinr_step_db <= 0:
            raise ConfigError("sinr step_db must be positive")
        count = math.floor((self.sinr_stop_db - self.sinr_start_db) / self.sinr_step_db + 1e-9) + 1
        return [round(self.sinr_start_db + k * self.sinr_step_db, 10) for k in range(max(count, 0))]

    def with_seed(self, seed: int | None) -> "RunConfig":
        return self if seed is None else dataclasses.replace(self, master_seed=seed)

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        cp["scenario"] = {k: fmt(v) for k, v in dataclasses.asdict(self.scenario).items()}
        mc_section = {
            "pfa": fmt(self.pfa),
            "calib_trials": str(self.calib_trials),
            "pd_trials": str(self.pd_trials),
            "master_seed": str(self.master_seed),
            "detectors": ", ".join(self.detectors),
        }
        if self.sweep_trials is not None:
            mc_section["sweep_trials"] = str(self.sweep_trials)
        cp["montecarlo"] = mc_section
        cp["sinr"] = {"start_db": fmt(self.sinr_start_db), "stop_db": fmt(self.sinr_stop_db),
                      "step_db": fmt(self.sinr_step_db)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp.read_string(text)
    for section in ("scenario", "montecarlo"):
        if section not in cp:
            raise ConfigError(f"config is missing the [{section}] section")
    known = {f.name for f in dataclasses.fields(ScenarioConfig)}
    kwargs = {}
    for key, raw in cp["scenario"].items():
        if key not in known:
            raise ConfigError(f"unknown scenario key {key!r}")
        if key in _INT_FIELDS:
            kwargs[key] = int(raw)
        elif key in _STR_FIELDS:
            kwargs[key] = raw.strip()
        else:
            kwargs[key] = float(raw)
    scenario = ScenarioConfig(**kwargs)

    m = cp["montecarlo"]
    names = tuple(n.strip() for n in m.get("detectors", "").split(",") if n.strip())
    if not names:
        raise ConfigError("[montecarlo] detectors list is empty")
    for n in names:
        if n not in detectors.DETECTORS:
            raise ConfigError(f"unknown detector {n!r}; expected one of {', '.join(detectors.NAMES)}")
    sinr = cp["sinr"] if "sinr" in cp else {}
    sweep = m.get("sweep_trials")
    return RunConfig(
        scenario=scenario,
        detectors=names,
        pfa=float(m.get("pfa", "0.01")),
        calib_trials=int(m.get("calib_trials", str(mc.default_calibration_trials(float(m.get("pfa", "0.01")))))),
        pd_trials=int(m.get("pd_trials", "1000")),
        master_seed=int(m.get("master_seed", "0")),
        sinr_start_db=float(sinr.get("start_db", "0")),
        sinr_stop_db=float(sinr.get("stop_db", "30")),
        sinr_step_db=float(sinr.get("step_db", "2")),
        sweep_trials=None if sweep is None else int(sweep),
    )


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())


def _write_csv(path, header, rows, comment: str | None = None) -> None:
    buf = io.StringIO()
    if comment:
        buf.write(f"# {comment}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    Path(path).write_bytes(buf.getvalue().encode())


def _read_csv(path) -> list[dict]:
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write_thresholds(path, rows: list[mc.ThresholdRow]) -> None:
    _write_csv(path, THRESHOLD_HEADER, [
        [r.detector, r.scenario_hash, r.pfa,
         r.eta if r.error is None else f"error: {r.error}", r.trials, r.master_seed]
        for r in rows
    ])


def read_thresholds(path) -> list[mc.ThresholdRow]:
    rows = []
    for rec in _read_csv(path):
        eta_field = rec["eta"]
        error = eta_field[len("error:"):].strip() if eta_field.startswith("error:") else None
        rows.append(mc.ThresholdRow(
            detector=rec["detector"],
            scenario_hash=rec["scenario_hash"],
            pfa=float(rec["pfa"]),
            eta=math.nan if error else float(eta_field),
            trials=int(rec["trials"]),
            master_seed=int(rec["seed"]),
            error=error,
        ))
    return rows


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def cmd_calibrate(config_path, out_path, seed: int | None = None, workers: int = 1) -> int:
    """One threshold row per configured detector; inapplicable detectors get an
    error record. Returns the exit code."""
    cfg = load_config(config_path).with_seed(seed)
    rows = mc.calibrate_thresholds(cfg.detectors, cfg.scenario, cfg.pfa, cfg.calib_trials,
                                   cfg.master_seed, workers)
    write_thresholds(out_path, rows)
    failed = [r for r in rows if r.error]
    for r in failed:
        _log(f"{r.detector}: {r.error}")
    return 1 if failed else 0


def _matching_thresholds(cfg: RunConfig, thresholds_path):
    digest = cfg.scenario.digest()
    table = {}
    for row in read_thresholds(thresholds_path):
        if row.scenario_hash == digest:
            table[row.detector] = row
    names, etas, missing = [], [], []
    for name in cfg.detectors:
        row = table.get(name)
        if row is None:
            missing.append(f"{name}: no threshold calibrated on scenario {digest}")
        elif row.error:
            missing.append(f"{name}: {row.error}")
        else:
            names.append(name)
            etas.append(row)
    return names, etas, missing


def cmd_pd(config_path, thresholds_path, out_path, seed: int | None = None,
           workers: int = 1) -> int:
    cfg = load_config(config_path).with_seed(seed)
    names, etas, missing = _matching_thresholds(cfg, thresholds_path)
    if not names:
        for msg in missing:
            _log(msg)
        _log("refusing to run: no usable thresholds for this scenario")
        return 2
    sc = cfg.scenario
    curves = mc.pd_curves(names, sc, etas, cfg.sinr_grid(), cfg.pd_trials,
                          cfg.master_seed, workers)
    rows = []
    for c in curves:
        sub = detectors.get(c.detector).subspace
        for s, p, (lo, hi) in zip(c.sinr_grid, c.pd, c.wilson_ci):
            rows.append([c.detector, sc.env, sc.order, sub, sc.K_S, float(s), float(p),
                         lo, hi, c.trials, c.master_seed])
    _write_csv(out_path, PD_HEADER, rows, comment=f"scenario_hash={sc.digest()}")
    for msg in missing:
        _log(msg)
    return 1 if missing else 0


def cmd_pfa_sweep(config_path, thresholds_path, param: str, values, out_path,
                  seed: int | None = None, workers: int = 1) -> int:
    if param not in mc.SWEEP_PARAMS:
        raise ConfigError(f"--param must be one of {mc.SWEEP_PARAMS}, got {param!r}")
    cfg = load_config(config_path).with_seed(seed)
    names, etas, missing = _matching_thresholds(cfg, thresholds_path)
    if not names:
        for msg in missing:
            _log(msg)
        _log("refusing to run: no usable thresholds for this scenario")
        return 2
    trials = cfg.sweep_trials or cfg.calib_trials
    sweeps = mc.pfa_sweeps(names, cfg.scenario, etas, param, list(values), trials,
                           cfg.master_seed, workers)
    rows = [[n, param, v, p, trials, cfg.master_seed] for n in names for v, p in sweeps[n]]
    _write_csv(out_path, SWEEP_HEADER, rows, comment=f"scenario_hash={cfg.scenario.digest()}")
    for msg in missing:
        _log(msg)
    return 1 if missing else 0


# figure presets -----------------------------------------------------------

FIGURES = ("1a", "1b", "2", "3", "4", "5", "7", "8", "9", "10")

_PD_FIGURES = {
    "2": (HE, FIRST, 2), "3": (HE, FIRST, 4),
    "4": (PHE, FIRST, 2), "5": (PHE, FIRST, 4),
    "7": (HE, SECOND, 2), "8": (HE, SECOND, 4),
    "9": (PHE, SECOND, 2), "10": (PHE, SECOND, 4),
}

SCALES = {
    # N = K_P, pfa, calib trials, pd trials, sinr grid (start, stop, step)
    "paper": dict(N=16, pfa=1e-3, calib_trials=100_000, pd_trials=1000, sinr=(0.0, 30.0, 1.0)),
    "desk": dict(N=8, pfa=1e-2, calib_trials=10_000, pd_trials=1000, sinr=(8.0, 26.0, 1.0)),
}

CNR_VALUES = [10.0, 20.0, 30.0, 40.0]
GAMMA_DB_VALUES = [0.0, 1.5, 3.0, 4.5]


def figure_detectors(env: str, order: str) -> tuple[str, ...]:
    if order == FIRST:
        return (f"FO-KS-{env}", f"FO-US-{env}", f"EP-FO-KS-{env}", f"EP-FO-US-{env}")
    return (f"EP-SO-KS-{env}", f"EP-SO-US-{env}")


def figure_configs(figure_id: str, scale: str, seed: int = 1) -> list[RunConfig]:
    """Preset run configurations for one figure (two for the Pfa sweeps)."""
    if figure_id == "6":
        raise ConfigError(
            "figure 6 is out of scope: it tracks the second-order GLR alternating "
            "procedures, which this package does not implement"
        )
    if figure_id not in FIGURES:
        raise ConfigError(f"unknown figure {figure_id!r}; expected one of {', '.join(FIGURES)}")
    if scale not in SCALES:
        raise ConfigError(f"scale must be desk or paper, got {scale!r}")
    p = SCALES[scale]
    N = p["N"]
    common = dict(pfa=p["pfa"], calib_trials=p["calib_trials"], pd_trials=p["pd_trials"],
                  master_seed=seed, sinr_start_db=p["sinr"][0], sinr_stop_db=p["sinr"][1],
                  sinr_step_db=p["sinr"][2])
    if figure_id in ("1a", "1b"):
        gamma = 10 ** 0.3  # 3 dB nominal
        return [
            RunConfig(ScenarioConfig(N=N, K_P=N, K_S=2 * N, r=2, gamma=gamma, env=env),
                      (f"FO-KS-{env}", f"FO-US-{env}"), **common)
            for env in (HE, PHE)
        ]
    env, order, ratio = _PD_FIGURES[figure_id]
    sc = ScenarioConfig(N=N, K_P=N, K_S=ratio * N, r=2, gamma=2.0, env=env, order=order)
    return [RunConfig(sc, figure_detectors(env, order), **common)]


def sweep_values(figure_id: str) -> tuple[str, list[float]]:
    if figure_id == "1a":
        return "cnr_db", list(CNR_VALUES)
    return "gamma", [10 ** (v / 10) for v in GAMMA_DB_VALUES]


def cmd_figure(figure_id: str, scale: str, out_dir, seed: int | None = None,
               workers: int = 1) -> int:
    configs = figure_configs(figure_id, scale, 1 if seed is None else seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    status = 0
    for k, cfg in enumerate(configs):
        tag = f"fig{figure_id}" if len(configs) == 1 else f"fig{figure_id}_{cfg.scenario.env}"
        cfg_path = out / f"{tag}_config.ini"
        cfg_path.write_bytes(cfg.to_ini().encode())
        thr_path = out / f"{tag}_thresholds.csv"
        status = max(status, cmd_calibrate(cfg_path, thr_path, workers=workers))
        if figure_id in ("1a", "1b"):
            param, values = sweep_values(figure_id)
            status = max(status, cmd_pfa_sweep(cfg_path, thr_path, param, values,
                                               out / f"{tag}_sweep.csv", workers=workers))
        else:
            status = max(status, cmd_pd(cfg_path, thr_path, out / f"{tag}_pd.csv",
                                        workers=workers))
    return status


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adaptive-subspace", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None, help="override the config master seed")
        p.add_argument("--workers", type=int, default=1, help="process count (never changes results)")

    p = sub.add_parser("calibrate", help="estimate detection thresholds under H0")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    common(p)

    p = sub.add_parser("pd", help="estimate Pd versus SINR")
    p.add_argument("--config", required=True)
    p.add_argument("--thresholds", required=True)
    p.add_argument("--out", required=True)
    common(p)

    p = sub.add_parser("pfa-sweep", help="Pfa of fixed thresholds versus CNR or gamma")
    p.add_argument("--config", required=True)
    p.add_argument("--thresholds", required=True)
    p.add_argument("--param", required=True, choices=mc.SWEEP_PARAMS)
    p.add_argument("--values", required=True, type=_float_list, help="comma-separated values")
    p.add_argument("--out", required=True)
    common(p)

    p = sub.add_parser("figure", help="run a preset figure pipeline")
    p.add_argument("--figure", required=True)
    p.add_argument("--scale", choices=tuple(SCALES), default="desk")
    p.add_argument("--out", required=True, help="output directory")
    common(p)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "calibrate":
            return cmd_calibrate(args.config, args.out, args.seed, args.workers)
        if args.command == "pd":
            return cmd_pd(args.config, args.thresholds, args.out, args.seed, args.workers)
        if args.command == "pfa-sweep":
            return cmd_pfa_sweep(args.config, args.thresholds, args.param, args.values,
                                 args.out, args.seed, args.workers)
        return cmd_figure(args.figure, args.scale, args.out, args.seed, args.workers)
    except (ConfigError, ValueError, KeyError, OSError) as exc:
        _log(f"error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Subcommands: simulate, sweep, oracle, backtest, calibrate.  Each writes CSV
artifacts with a schema/seed header comment plus a companion PNG figure.
Output files are reproducible byte-for-byte from (config, seed, inputs).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import report
from .banding import half_width
from .engine import backtest_frame, run_backtest
from .errors import ConfigError, NTBandError
from .experiments import (SCENARIO_NAMES, SweepSpec, brute_force_band_oracle,
                          default_lambda_grid, path_frame, run_sweep, scenario)
from .market_data import (SignalSpec, build_real_backtest, calibrate_beta,
                          load_price_csv, signal_policy)
from .models import ModelSpec, simulate
from .policy import build_policy_series

SCHEMA_VERSION = 1
CSV_PRECISION = 9
OUT_ENV_VAR = "NTBAND_OUT"

DEFAULT_REAL_COSTS = (0.005, 0.01, 0.02, 0.05)


def write_csv(df, path: Path, schema: str, seed=None, extra: dict | None = None) -> None:
    """Write a dataframe with a reproducible header comment."""
    meta = {"schema": schema, "v": SCHEMA_VERSION}
    if seed is not None:
        meta["seed"] = seed
    if extra:
        meta.update(extra)
    header = "# ntband-csv " + " ".join(f"{k}={v}" for k, v in meta.items())
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(header + "\n")
        df.to_csv(f, index=False, float_format=f"%.{CSV_PRECISION}g", lineterminator="\n")


def _load_config(path) -> dict:
    try:
        with open(path) as f:
            cfg = yaml.safe_load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    if cfg is None:
        cfg = {}
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a mapping")
    return cfg


def _check_keys(cfg: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(cfg) - allowed)
    if unknown:
        raise ConfigError(f"unknown {where} config key(s): {unknown}")


def _resolve_sweep_spec(args, cfg: dict, allowed_extra: set[str] = frozenset()) -> SweepSpec:
    allowed = {"scenario", "model", "costs", "lambdas", "n_steps", "dt", "seed",
               "gamma_mode", "window", "g"} | set(allowed_extra)
    _check_keys(cfg, allowed, "sweep")
    name = args.scenario or cfg.get("scenario")
    overrides = {}
    for key in ("costs", "lambdas", "n_steps", "dt", "seed", "gamma_mode", "window", "g"):
        if key in cfg:
            overrides[key] = cfg[key]
    if args.seed is not None:
        overrides["seed"] = args.seed
    if name is not None:
        return scenario(name, **overrides)
    if "model" not in cfg:
        raise ConfigError("need either --scenario or a 'model' config section")
    model = ModelSpec.from_dict(cfg["model"])
    return SweepSpec(model=model, **overrides)


def _out_dir(args) -> Path:
    env = os.environ.get(OUT_ENV_VAR)
    out = Path(env) if env else Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _tag(args, cfg) -> str:
    name = args.scenario or cfg.get("scenario")
    return name if name else "custom"


# --- subcommands ---------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config) if args.config else {}
    spec = _resolve_sweep_spec(args, cfg)
    out = _out_dir(args)
    tag = _tag(args, cfg)
    path = simulate(spec.model, spec.n_steps, spec.dt, spec.seed)
    df = path_frame(path)
    csv = out / f"path_{tag}.csv"
    write_csv(df, csv, "path", seed=spec.seed)
    report.path_figure(df, csv.with_suffix(".png"), title=f"simulated path ({tag})")
    print(f"wrote {csv} and {csv.with_suffix('.png')}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config) if args.config else {}
    spec = _resolve_sweep_spec(args, cfg)
    out = _out_dir(args)
    tag = _tag(args, cfg)

    path = simulate(spec.model, spec.n_steps, spec.dt, spec.seed)
    policy = build_policy_series(path, g=spec.g, gamma_mode=spec.gamma_mode,
                                 window=spec.window)
    df = run_sweep(spec, path=path, policy=policy)
    csv = out / f"sweep_{tag}.csv"
    write_csv(df, csv, "sweep", seed=spec.seed,
              extra={"gamma_mode": spec.gamma_mode})
    report.sweep_figure(df, csv.with_suffix(".png"), title=f"sweep ({tag})")

    # companion path-level series at lambda = 1 and a mid-grid cost
    eps = spec.costs[min(3, len(spec.costs) - 1)]
    res = run_backtest(path.x, policy, eps, spec.g, lam=1.0)
    pdf = path_frame(path, res)
    pcsv = out / f"sweep_{tag}_path.csv"
    write_csv(pdf, pcsv, "sweep-path", seed=spec.seed, extra={"epsilon": eps})
    report.path_figure(pdf, pcsv.with_suffix(".png"),
                       title=f"path and account ({tag}, eps={eps:g})")
    print(f"wrote {csv}, {pcsv} and figures")
    return 0


def cmd_oracle(args) -> int:
    cfg = _load_config(args.config) if args.config else {}
    spec = _resolve_sweep_spec(args, cfg, allowed_extra={"epsilon", "width_min", "width_max", "width_step"})
    out = _out_dir(args)
    tag = _tag(args, cfg)
    eps = float(cfg.get("epsilon", 0.2))
    w_min = float(cfg.get("width_min", 0.01))
    w_max = float(cfg.get("width_max", 0.6))
    w_step = float(cfg.get("width_step", 0.01))
    grid = np.arange(w_min, w_max + 0.5 * w_step, w_step)

    path = simulate(spec.model, spec.n_steps, spec.dt, spec.seed)
    policy = build_policy_series(path, g=spec.g, gamma_mode=spec.gamma_mode,
                                 window=spec.window)
    best_w, best_v, df = brute_force_band_oracle(path.x, policy, eps, spec.g, grid)
    formula_w = float(np.nanmean(half_width(eps, spec.g, policy.gamma_sq)))
    csv = out / f"oracle_{tag}.csv"
    write_csv(df, csv, "oracle", seed=spec.seed,
              extra={"epsilon": eps, "best_width": f"{best_w:.9g}",
                     "formula_width": f"{formula_w:.9g}"})
    report.oracle_figure(df, csv.with_suffix(".png"), best_width=best_w,
                         formula_width=formula_w, title=f"constant-band oracle ({tag})")
    print(f"best constant half-width {best_w:g} (v_emp {best_v:g}); "
          f"formula mean width {formula_w:g}")
    print(f"wrote {csv} and {csv.with_suffix('.png')}")
    return 0


_BACKTEST_KEYS = {"input", "decay", "vol_decay", "coupling", "beta", "epsilon",
                  "gearing", "point_value", "lambda", "window", "costs", "lambdas"}


def _signal_spec(cfg: dict, need_beta: bool) -> SignalSpec:
    spec = SignalSpec(decay=float(cfg.get("decay", 1.0 / 50.0)),
                      vol_decay=float(cfg.get("vol_decay", 1.0 / 33.0)),
                      coupling=cfg.get("coupling", "tanh2"),
                      beta=float(cfg["beta"]) if "beta" in cfg else None)
    if need_beta and spec.beta is None:
        raise ConfigError("backtest config requires 'beta' (run calibrate first)")
    return spec


def cmd_backtest(args) -> int:
    cfg = _load_config(args.config) if args.config else {}
    _check_keys(cfg, _BACKTEST_KEYS, "backtest")
    input_path = args.input or cfg.get("input")
    if not input_path:
        raise ConfigError("backtest needs an input CSV (--input or config 'input')")
    prices = load_price_csv(input_path)
    spec = _signal_spec(cfg, need_beta=True)
    eps = float(cfg.get("epsilon", 0.01))
    g = float(cfg.get("gearing", 1.0e6))
    pv = float(cfg.get("point_value", 1.0))
    lam = float(cfg.get("lambda", 1.0))
    window = int(cfg.get("window", 250))
    out = _out_dir(args)
    stem = Path(input_path).stem

    res = build_real_backtest(prices, spec, eps, g, lam=lam, point_value=pv, window=window)
    df = backtest_frame(res, prices.prices)
    df.insert(1, "date", prices.dates.astype("datetime64[D]").astype(str))
    csv = out / f"backtest_{stem}.csv"
    write_csv(df, csv, "backtest", extra={"epsilon": eps, "lambda": lam})
    report.backtest_figure(df, csv.with_suffix(".png"), title=f"backtest ({stem})")
    print(f"v_emp {res.v_emp:g}, net pnl {res.account_curve[-1]:g}, "
          f"turnover {res.turnover:g} contracts")

    if args.lambda_sweep:
        costs = tuple(cfg.get("costs", DEFAULT_REAL_COSTS))
        lambdas = tuple(cfg.get("lambdas", default_lambda_grid()))
        rows = []
        for c in costs:
            for lv in lambdas:
                r = build_real_backtest(prices, spec, c, g, lam=lv,
                                        point_value=pv, window=window)
                rows.append({"epsilon": c, "lambda": lv,
                             "mean_buffer_width": r.mean_buffer_width,
                             "v_emp": r.v_emp, "turnover": r.turnover,
                             "is_lambda_one": lv == 1.0})
        import pandas as pd

        sdf = pd.DataFrame(rows)
        scsv = out / f"backtest_{stem}_sweep.csv"
        write_csv(sdf, scsv, "sweep")
        report.sweep_figure(sdf, scsv.with_suffix(".png"), title=f"lambda sweep ({stem})")
        print(f"wrote {scsv} and {scsv.with_suffix('.png')}")
    print(f"wrote {csv} and {csv.with_suffix('.png')}")
    return 0


def cmd_calibrate(args) -> int:
    cfg = _load_config(args.config) if args.config else {}
    _check_keys(cfg, (_BACKTEST_KEYS - {"beta"}) | {"beta_grid"}, "calibrate")
    input_path = args.input or cfg.get("input")
    if not input_path:
        raise ConfigError("calibrate needs an input CSV (--input or config 'input')")
    prices = load_price_csv(input_path)
    spec = _signal_spec(cfg, need_beta=False)
    eps = float(cfg.get("epsilon", 0.01))
    g = float(cfg.get("gearing", 1.0e6))
    pv = float(cfg.get("point_value", 1.0))
    lam = float(cfg.get("lambda", 1.0))
    window = int(cfg.get("window", 250))
    grid = cfg.get("beta_grid", [round(b, 3) for b in np.arange(0.025, 0.525, 0.025)])
    out = _out_dir(args)
    stem = Path(input_path).stem

    best, df = calibrate_beta(prices, spec, eps, g, grid, lam=lam,
                              point_value=pv, window=window)
    csv = out / f"calibration_{stem}.csv"
    write_csv(df, csv, "calibration", extra={"best_beta": f"{best:.9g}"})
    report.calibration_figure(df, csv.with_suffix(".png"), best_beta=best,
                              title=f"beta calibration ({stem})")
    print(f"best beta {best:g}")
    print(f"wrote {csv} and {csv.with_suffix('.png')}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ntband",
                                description="No-trade-band trading under proportional costs")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="YAML config file")
        sp.add_argument("--scenario", choices=SCENARIO_NAMES,
                        help="built-in synthesized scenario")
        sp.add_argument("--seed", type=int, help="override the RNG seed")
        sp.add_argument("--out", default="out",
                        help=f"output directory (env {OUT_ENV_VAR} overrides)")

    for name, fn in (("simulate", cmd_simulate), ("sweep", cmd_sweep),
                     ("oracle", cmd_oracle)):
        sp = sub.add_parser(name)
        common(sp)
        sp.set_defaults(fn=fn)

    for name, fn in (("backtest", cmd_backtest), ("calibrate", cmd_calibrate)):
        sp = sub.add_parser(name)
        common(sp)
        sp.add_argument("--input", help="price CSV (header: date,price)")
        if name == "backtest":
            sp.add_argument("--lambda-sweep", action="store_true",
                            help="also emit a value-vs-buffer-width sweep")
        sp.set_defaults(fn=fn)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except NTBandError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

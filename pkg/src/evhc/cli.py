"""Command-line orchestration.

Subcommands: gen-data, train, eval, fit-errors, forecast, ppf, risk,
assess, compare. Every run echoes its resolved configuration into the
output directory, derives all randomness from one root seed through
labeled sub-seeds, and writes machine-readable JSON/CSV plus rendered
figures next to them.

Exit codes: 0 success, 2 config validation, 3 data error, 4 numerical
failure, 5 infeasible model.
"""
from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig
from .grid import NetworkError, ieee33, load_network
from .grid.powerflow import PowerFlowDivergence
from .mixtures import GaussianMixture, gmm_pdf, gmm_quantile, gmm_scale
from .pipeline import (
    SLOTS_PER_DAY,
    SynthSpec,
    aggregate,
    clean_transactions,
    fit_error_model_from_dataset,
    metrics,
    probabilistic_forecast,
    synth_generate,
    window_and_split,
)
from .pipeline.dataset import TOD_CARDINALITY, WindowedDataset
from .pipeline.error_model import IntervalErrorModel
from .pipeline import io as pio
from .forecast import (
    TrainConfig,
    TrainingDiverged,
    baseline_ha,
    historical_similarity,
    load_checkpoint,
    predict,
    save_checkpoint,
    train,
    write_loss_curves,
)
from .hcopt import (
    BuildInfeasible,
    HCInfeasible,
    HCProblem,
    HCSolution,
    expected_satisfaction,
    long_term_hc,
    solve_hc,
    verify_solution,
)
from .ppf import QUANTILE_LEVELS, gmm_ppf, identify_boundary, mc_ppf
from .scenario import load_scenario
from . import plots

ISO = "%Y-%m-%dT%H:%M:%S"


def _write_json(path: Path, doc) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _network(cfg: RunConfig):
    path = cfg["paths"]["network"]
    return ieee33() if path is None else load_network(path)


def _load_dataset(cfg: RunConfig) -> WindowedDataset:
    data_dir = cfg.data_dir()
    series_path = data_dir / "series_kw.csv"
    manifest_path = data_dir / "manifest.json"
    if not series_path.exists() or not manifest_path.exists():
        raise FileNotFoundError(
            f"dataset not found under {data_dir}; run gen-data first")
    series, t0 = pio.read_series_csv(series_path)
    manifest = pio.read_manifest(manifest_path)
    return window_and_split(
        series, t0,
        t_window=int(manifest["t_window"]),
        ratios=tuple(cfg["pipeline"]["ratios"]),
        seed=int(manifest["seed"]),
    )


# --- commands ---------------------------------------------------------------

def cmd_gen_data(cfg: RunConfig, args) -> int:
    pl = cfg["pipeline"]
    seed = cfg.seed("data")
    scale = tuple(pl["scale_kw"]) if pl["scale_kw"] else ()
    spec = SynthSpec(n_stations=pl["stations"], days=pl["days"], seed=seed,
                     scale_kw=scale)
    transactions, _truth = synth_generate(spec)
    valid, rejected = clean_transactions(transactions)
    n_slots = pl["days"] * SLOTS_PER_DAY
    series = aggregate(valid, spec.start, n_slots)
    for sid in range(1, pl["stations"] + 1):
        series.setdefault(sid, np.zeros(n_slots))
    dataset = window_and_split(series, spec.start, t_window=pl["t_window"],
                               ratios=tuple(pl["ratios"]), seed=seed)

    data_dir = cfg.data_dir()
    data_dir.mkdir(parents=True, exist_ok=True)
    pio.write_transactions_csv(data_dir / "transactions.csv", transactions)
    with open(data_dir / "rejected.csv", "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write("station,start_iso8601,reason\n")
        for tr, reason in rejected:
            fh.write(f"{tr.station},{tr.start.strftime(ISO)},{reason}\n")
    pio.write_series_csv(data_dir / "series_kw.csv", series, spec.start)
    norm = {
        sid: np.minimum(series[sid] / dataset.scales[i], 1.0)
        for i, sid in enumerate(dataset.station_ids)
    }
    pio.write_series_csv(data_dir / "series_norm.csv", norm, spec.start)
    pio.write_manifest(data_dir / "manifest.json", dataset, seed)
    cfg.echo(cfg.out_dir(), "gen-data")
    print(f"gen-data: {pl['stations']} stations x {pl['days']} days "
          f"({n_slots} slots), {len(valid)} valid / {len(rejected)} rejected "
          f"transactions -> {data_dir}")
    return 0


def _train_once(cfg: RunConfig, dataset: WindowedDataset, variant: str):
    tr = cfg["train"]
    tc = TrainConfig(
        n_stations=len(dataset.station_ids),
        t_window=dataset.t_window,
        learning_rate=tr["learning_rate"],
        batch_size=tr["batch_size"],
        epochs=tr["epochs"],
        k_s=tr["k_s"],
        n_e=tr["n_e"],
        hidden=tr["hidden"],
        k_t=tr["k_t"],
        n_blocks=tr["n_blocks"],
        z_prime=tr["z_prime"],
        mlp_hidden=tr["mlp_hidden"],
        embed_dim=tr["embed_dim"],
        seed=cfg.seed("train"),
        variant=variant,
    )
    fixed = None
    if variant == "noWA":
        feats, _ = dataset.subset("train")
        per_station = feats[:, 0].transpose(1, 0, 2).reshape(
            len(dataset.station_ids), -1)
        fixed = historical_similarity(per_station)
    return train(tc, dataset, fixed_similarity=fixed)


def cmd_train(cfg: RunConfig, args) -> int:
    dataset = _load_dataset(cfg)
    out = cfg.out_dir()
    out.mkdir(parents=True, exist_ok=True)

    model, curves = _train_once(cfg, dataset, "full")
    save_checkpoint(out / "checkpoint.json", model, dataset.scales,
                    {"best_epoch": model.best_epoch,
                     "best_val_loss": model.best_val_loss})
    write_loss_curves(out / "loss_curves.csv", curves)
    plots.plot_loss_curves(curves, out / "loss_curves.png")

    feats_te, truths_te = dataset.subset("test")
    rows = []
    mae, rmse, wape = metrics(baseline_ha(feats_te), truths_te)
    rows.append(("HA", mae, rmse, wape, float("nan")))
    mae, rmse, wape = metrics(predict(model, feats_te), truths_te)
    rows.append(("ASTGCN", mae, rmse, wape, model.best_val_loss))

    for variant in (args.ablation.split(",") if args.ablation else []):
        variant = variant.strip()
        if not variant:
            continue
        vmodel, vcurves = _train_once(cfg, dataset, variant)
        write_loss_curves(out / f"loss_curves_{variant}.csv", vcurves)
        mae, rmse, wape = metrics(predict(vmodel, feats_te), truths_te)
        rows.append((f"ASTGCN-{variant}", mae, rmse, wape,
                     vmodel.best_val_loss))

    with open(out / "metrics.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("model,mae,rmse,wape,best_val_loss\n")
        for name, mae, rmse, wape, val in rows:
            fh.write(f"{name},{mae!r},{rmse!r},{wape!r},{val!r}\n")
    cfg.echo(out, "train")
    for name, mae, rmse, wape, _ in rows:
        print(f"{name:>14}: MAE {mae:.4f}  RMSE {rmse:.4f}  WAPE {wape:.2%}")
    return 0


def cmd_eval(cfg: RunConfig, args) -> int:
    dataset = _load_dataset(cfg)
    out = cfg.out_dir()
    model, _scales, _meta = load_checkpoint(out / "checkpoint.json")
    feats_te, truths_te = dataset.subset("test")
    with open(out / "metrics.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("model,mae,rmse,wape,best_val_loss\n")
        mae, rmse, wape = metrics(baseline_ha(feats_te), truths_te)
        fh.write(f"HA,{mae!r},{rmse!r},{wape!r},nan\n")
        mae, rmse, wape = metrics(predict(model, feats_te), truths_te)
        fh.write(f"ASTGCN,{mae!r},{rmse!r},{wape!r},nan\n")
        print(f"eval: ASTGCN MAE {mae:.4f} RMSE {rmse:.4f} WAPE {wape:.2%}")
    cfg.echo(out, "eval")
    return 0


def cmd_fit_errors(cfg: RunConfig, args) -> int:
    dataset = _load_dataset(cfg)
    out = cfg.out_dir()
    model, _scales, _meta = load_checkpoint(out / "checkpoint.json")
    em = fit_error_model_from_dataset(
        model, dataset,
        n_intervals=cfg["pipeline"]["n_intervals"],
        min_samples=cfg["pipeline"]["min_interval_samples"],
        seed=cfg.seed("errors"),
    )
    em.save(out / "error_model.json")
    populated = sum(
        sum(g is not None for g in em.per_station[sid])
        for sid in em.station_ids
    )
    cfg.echo(out, "fit-errors")
    print(f"fit-errors: {em.n_intervals} intervals per station, "
          f"{populated} fitted station-interval mixtures -> error_model.json")
    return 0


def _locate_window(dataset: WindowedDataset, at: str | None) -> int:
    """Sample index forecasting the requested timestamp (target slot)."""
    if at is None:
        # first test sample whose target lands on the evening peak (18:30)
        target_tod = int(18.5 * 60 // 15)
        for i in dataset.splits["test"]:
            target_slot = int(dataset.window_starts[i]) + dataset.t_window
            if target_slot % TOD_CARDINALITY == target_tod:
                return int(i)
        return int(dataset.splits["test"][0])
    ts = datetime.strptime(at, ISO)
    slot = int((ts - dataset.t0).total_seconds() // (15 * 60))
    want = slot - dataset.t_window
    hits = np.where(dataset.window_starts == want)[0]
    if hits.size == 0:
        raise ValueError(f"no forecast window ends at {at}")
    return int(hits[0])


def _forecast_gmms(cfg: RunConfig, at: str | None):
    """(normalized per-station GMMs, per-unit GMMs, metadata) at a slot."""
    dataset = _load_dataset(cfg)
    out = cfg.out_dir()
    model, scales, _meta = load_checkpoint(out / "checkpoint.json")
    em = IntervalErrorModel.load(out / "error_model.json")
    idx = _locate_window(dataset, at)
    gmms_norm = probabilistic_forecast(model, em, dataset.features[idx])
    net = _network(cfg)
    per_unit = {}
    for col, sid in enumerate(dataset.station_ids):
        factor = float(scales[col]) / 1000.0 / net.base_mva
        per_unit[sid] = gmm_scale(gmms_norm[sid], factor)
    target_slot = int(dataset.window_starts[idx]) + dataset.t_window
    meta = {
        "sample_index": idx,
        "target_time": dataset.slot_time(target_slot).strftime(ISO),
        "scales_kw": [float(s) for s in scales],
    }
    return gmms_norm, per_unit, meta, dataset


def cmd_forecast(cfg: RunConfig, args) -> int:
    gmms_norm, per_unit, meta, _ = _forecast_gmms(cfg, args.at)
    out = cfg.out_dir()
    doc = {
        **meta,
        "stations_normalized": {str(s): g.to_dict() for s, g in gmms_norm.items()},
        "stations_per_unit": {str(s): g.to_dict() for s, g in per_unit.items()},
    }
    _write_json(out / "forecast.json", doc)
    cfg.echo(out, "forecast")
    print(f"forecast: target {meta['target_time']} "
          f"(sample {meta['sample_index']}) -> forecast.json")
    return 0


def _scenario_gmms(cfg: RunConfig, scenario_path: str | None):
    sc = load_scenario(scenario_path)
    return sc["station_gmms"], sc


def _ppf_report_doc(ppf, risk) -> dict:
    return {
        "elapsed_s": ppf.elapsed_s,
        "components_exact": ppf.components_exact,
        "components_kept": ppf.components_kept,
        "base_demands": {str(k): v for k, v in ppf.base_demands.items()},
        "buses": {
            str(bus): {
                "mixture": g.to_dict(),
                "quantiles": {str(q): float(gmm_quantile(g, q))
                              for q in QUANTILE_LEVELS},
            }
            for bus, g in ppf.voltage.items()
        },
        "boundary": {str(k): v for k, v in risk.boundary.items()},
        "network_boundary": risk.network_boundary,
        "varsigma": risk.varsigma,
        "violation_probability": {
            str(k): v for k, v in risk.violation_probability.items()},
    }


def _write_ppf_outputs(cfg: RunConfig, net, station_gmms, out: Path,
                       with_mc: bool) -> None:
    p = cfg["ppf"]
    ppf = gmm_ppf(net, station_gmms, input_cap=p["input_cap"],
                  output_cap=p["output_cap"])
    risk = identify_boundary(ppf, p["varsigma"], limit=net.v_min)
    mc = None
    if with_mc:
        mc = mc_ppf(net, station_gmms, n=p["mc_samples"], seed=cfg.seed("mc"))
    doc = _ppf_report_doc(ppf, risk)
    if mc is not None:
        doc["mc"] = {
            "elapsed_s": mc.elapsed_s,
            "n": mc.n_requested,
            "diverged": mc.n_diverged,
            "quantiles": {str(b): q for b, q in mc.quantiles.items()},
            "speedup": mc.elapsed_s / max(ppf.elapsed_s, 1e-12),
        }
    _write_json(out / "ppf_report.json", doc)

    bus = int(p["focus_bus"])
    g = ppf.voltage[bus]
    lo = min(g.mean() - 6 * g.std(), net.v_min - 0.005)
    hi = g.mean() + 6 * g.std()
    grid = np.linspace(lo, hi, 400)
    pdf = gmm_pdf(g, grid)
    hist = None
    if mc is not None:
        hist, _ = np.histogram(mc.samples[bus], bins=grid, density=True)
    with open(out / f"plotdata_ppf_bus{bus}.csv", "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write("bus,voltage,pdf_analytic,density_mc\n")
        for i, v in enumerate(grid):
            dens = "" if hist is None or i >= len(hist) else repr(float(hist[i]))
            fh.write(f"{bus},{v!r},{float(pdf[i])!r},{dens}\n")
    plots.plot_ppf_bus(bus, grid, pdf,
                       None if mc is None else mc.samples[bus],
                       net.v_min, out / f"fig_ppf_bus{bus}.png")
    return ppf, risk


def cmd_ppf(cfg: RunConfig, args) -> int:
    net = _network(cfg)
    if args.scenario or not (cfg.out_dir() / "forecast.json").exists():
        station_gmms, _ = _scenario_gmms(cfg, args.scenario)
    else:
        doc = json.loads((cfg.out_dir() / "forecast.json").read_text())
        station_gmms = {
            int(s): GaussianMixture.from_dict(g)
            for s, g in doc["stations_per_unit"].items()
        }
    out = cfg.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    _write_ppf_outputs(cfg, net, station_gmms, out, with_mc=args.mc)
    cfg.echo(out, "ppf")
    print(f"ppf: report and plot data -> {out}")
    return 0


def cmd_risk(cfg: RunConfig, args) -> int:
    net = _network(cfg)
    station_gmms, _ = _scenario_gmms(cfg, args.scenario)
    p = cfg["ppf"]
    ppf = gmm_ppf(net, station_gmms, input_cap=p["input_cap"],
                  output_cap=p["output_cap"])
    risk = identify_boundary(ppf, p["varsigma"], limit=net.v_min)
    out = cfg.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "risk_report.json", {
        "varsigma": risk.varsigma,
        "limit": risk.limit,
        "boundary": {str(k): v for k, v in risk.boundary.items()},
        "network_boundary": risk.network_boundary,
        "violation_probability": {
            str(k): v for k, v in risk.violation_probability.items()},
    })
    cfg.echo(out, "risk")
    print(f"risk: network lower boundary {risk.network_boundary:.5f} p.u. "
          f"at varsigma {risk.varsigma}")
    return 0


def _solution_doc(sol: HCSolution, rep) -> dict:
    return {
        "p_bar": {str(k): v for k, v in sol.p_bar.items()},
        "floors": {str(k): v for k, v in sol.floors.items()},
        "objective_pwl": sol.objective_pwl,
        "objective_exact": sol.objective_exact,
        "segments": ({str(k): v for k, v in sol.segments.items()}
                     if sol.segments else None),
        "soc_gap_max": float(np.max(sol.soc_gap)),
        "relax_soc_gap_max": (float(np.max(sol.relax_soc_gap))
                              if sol.relax_soc_gap is not None else None),
        "v_mag": [float(v) for v in sol.v_mag],
        "min_voltage": float(np.min(sol.v_mag[1:])),
        "bnb": {
            "nodes": sol.stats.nodes,
            "gap": sol.stats.gap,
            "best_bound": sol.stats.best_bound,
            "incumbent_trace": sol.stats.incumbent_trace,
            "rejected_incumbents": sol.stats.rejected_incumbents,
        },
        "verification": None if rep is None else {
            "all_ok": rep.all_ok,
            "voltage_ok": rep.voltage_ok,
            "min_voltage": rep.min_voltage,
            "distflow_ok": rep.distflow_ok,
            "max_distflow_residual": rep.max_distflow_residual,
            "soc_gap_max": rep.soc_gap_max,
            "chance_ok": rep.chance_ok,
            "chance_frequency": {str(k): v
                                 for k, v in rep.chance_frequency.items()},
            "objective_rel_diff": rep.objective_rel_diff,
        },
    }


def _run_assessment(cfg: RunConfig, net, station_gmms, out: Path) -> int:
    hc = cfg["hc"]
    eps = hc["epsilon"]
    if isinstance(eps, dict):
        eps = {int(k): float(v) for k, v in eps.items()}
    problem = HCProblem(
        net=net, station_gmms=station_gmms, epsilon=eps,
        n_segments=hc["n_segments"], gap_tol=hc["gap_tol"],
        node_limit=hc["node_limit"],
    )
    sol = solve_hc(problem)
    rep = verify_solution(net, sol, station_gmms, eps)
    demands = {sid: g.mean() for sid, g in station_gmms.items()}
    lt = long_term_hc(net, demands, cap_factor=hc["lt_cap_factor"])
    lt_eval = sum(
        expected_satisfaction(station_gmms[sid], cap)
        for sid, cap in lt.p_bar.items()
    )
    _write_json(out / "assess_solution.json", _solution_doc(sol, rep))
    _write_json(out / "long_term_solution.json", _solution_doc(lt, None))
    # wall clocks live apart so the primary reports stay byte-reproducible
    _write_json(out / "timings.json", {
        "real_time_solve_s": sol.stats.wall_clock_s,
        "long_term_solve_s": lt.stats.wall_clock_s,
    })
    _write_json(out / "comparison.json", {
        "real_time_objective": sol.objective_pwl,
        "real_time_objective_exact": sol.objective_exact,
        "long_term_p_bar_total": sum(lt.p_bar.values()),
        "long_term_evaluated_satisfaction": lt_eval,
        "dominates": bool(sol.objective_pwl >= lt_eval),
        "improvement": (sol.objective_pwl - lt_eval) / max(lt_eval, 1e-12),
    })

    sids = sorted(station_gmms)
    bus_of = net.station_buses
    with open(out / "plotdata_hc_stations.csv", "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write("station,p,pdf,floor,p_bar_rt,p_bar_lt\n")
        for sid in sids:
            g = station_gmms[sid]
            hi = gmm_quantile(g, 0.9995) * 1.15
            for p in np.linspace(0.0, hi, 120):
                fh.write(f"{sid},{p!r},{gmm_pdf(g, p)!r},"
                         f"{sol.floors[sid]!r},{sol.p_bar[sid]!r},"
                         f"{lt.p_bar[sid]!r}\n")
    voltages = {sid: float(sol.v_mag[bus_of[sid] - 1]) for sid in sids}
    exp_dem = {sid: station_gmms[sid].mean() for sid in sids}
    exp_sat = {
        sid: expected_satisfaction(station_gmms[sid], sol.p_bar[sid])
        for sid in sids
    }
    with open(out / "plotdata_hc_satisfaction.csv", "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write("station,bus,voltage,expected_demand,expected_satisfaction\n")
        for sid in sids:
            fh.write(f"{sid},{bus_of[sid]},{voltages[sid]!r},"
                     f"{exp_dem[sid]!r},{exp_sat[sid]!r}\n")
    plots.plot_hc_stations(station_gmms, sol.floors, sol.p_bar, lt.p_bar,
                           out / "fig_hc_stations.png")
    plots.plot_station_satisfaction(sids, voltages, exp_dem, exp_sat,
                                    out / "fig_hc_satisfaction.png")
    print(f"assess: RT objective {sol.objective_pwl:.6f} "
          f"(gap {sol.stats.gap:.1e}, {sol.stats.nodes} nodes, "
          f"{sol.stats.wall_clock_s:.2f}s) vs LT-evaluated {lt_eval:.6f}; "
          f"verification {'ok' if rep.all_ok else 'FAILED'}")
    return 0


def cmd_assess(cfg: RunConfig, args) -> int:
    net = _network(cfg)
    out = cfg.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    if args.scenario is not None or args.bundled_scenario:
        station_gmms, _ = _scenario_gmms(cfg, args.scenario)
    else:
        _, station_gmms, meta, _ = _forecast_gmms(cfg, cfg["assess"]["at"])
        _write_json(out / "assess_forecast_meta.json", meta)
    _write_ppf_outputs(cfg, net, station_gmms, out, with_mc=False)
    code = _run_assessment(cfg, net, station_gmms, out)
    cfg.echo(out, "assess")
    return code


def cmd_compare(cfg: RunConfig, args) -> int:
    net = _network(cfg)
    station_gmms, _ = _scenario_gmms(cfg, args.scenario)
    out = cfg.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    code = _run_assessment(cfg, net, station_gmms, out)
    cfg.echo(out, "compare")
    return code


# --- argument plumbing --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evhc",
        description="EV hosting-capacity toolkit: synthetic data, demand "
                    "forecasting, probabilistic power flow, risk boundaries, "
                    "and real-time hosting-capacity optimization.",
    )
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--seed", type=int, help="root seed override")
    parser.add_argument("--out", help="output directory override")
    parser.add_argument("--data", help="data directory override")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("gen-data", help="generate the synthetic dataset")
    p_train = sub.add_parser("train", help="train the forecaster (+ baselines)")
    p_train.add_argument("--ablation", default="",
                         help="comma list of variants: noWA,noTA,fc")
    sub.add_parser("eval", help="recompute test metrics from the checkpoint")
    sub.add_parser("fit-errors", help="fit the interval error model")
    p_fc = sub.add_parser("forecast", help="probabilistic forecast at a time")
    p_fc.add_argument("--at", help="target ISO timestamp (default: first "
                                   "evening-peak test sample)")
    p_ppf = sub.add_parser("ppf", help="analytical probabilistic power flow")
    p_ppf.add_argument("--scenario", help="per-unit scenario JSON (default: "
                                          "out/forecast.json when present, "
                                          "else the bundled scenario)")
    p_ppf.add_argument("--mc", action="store_true",
                       help="also run the Monte Carlo benchmark")
    p_risk = sub.add_parser("risk", help="operational boundary identification")
    p_risk.add_argument("--scenario", help="per-unit scenario JSON")
    p_assess = sub.add_parser("assess", help="full real-time HC assessment")
    p_assess.add_argument("--scenario", help="per-unit scenario JSON "
                                             "(skips the forecasting path)")
    p_assess.add_argument("--bundled-scenario", action="store_true",
                          help="use the bundled scenario")
    p_assess.add_argument("--compare", action="store_true",
                          help="kept for compatibility; comparison always runs")
    p_cmp = sub.add_parser("compare", help="real-time vs long-term comparison")
    p_cmp.add_argument("--scenario", help="per-unit scenario JSON")
    return parser


_DISPATCH = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "eval": cmd_eval,
    "fit-errors": cmd_fit_errors,
    "forecast": cmd_forecast,
    "ppf": cmd_ppf,
    "risk": cmd_risk,
    "assess": cmd_assess,
    "compare": cmd_compare,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides: dict = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides.setdefault("paths", {})["out_dir"] = args.out
    if args.data is not None:
        overrides.setdefault("paths", {})["data_dir"] = args.data
    try:
        cfg = RunConfig.load(args.config, overrides)
        return _DISPATCH[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, NetworkError, json.JSONDecodeError,
            KeyError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except (BuildInfeasible, HCInfeasible) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 5
    except (PowerFlowDivergence, TrainingDiverged, FloatingPointError,
            RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Batch experiment runner.

Usage: mvlab <experiment> --config cfg.yaml [--out DIR] [--seed S]
             [--threads N] [--no-figures]

Experiments: simulate | invariant | picard | contraction | compare |
check | dvrate | hitting.  The YAML config is schema-validated before
any computation; a given (config, seed) determines every emitted data
byte (the manifest timestamp is the only exception).  Exit codes:
0 success, 1 runtime failure, 2 a condition check came out false,
3 config violation.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .analysis import (
    check_degenerate_pair,
    check_drift_growth_margin,
    check_hamiltonian_condition,
    check_pair_contraction,
    check_spectral_summability,
    dv_rate_gaussian_ou,
    fit_contraction_rate,
    hitting_moment,
    model_condition_reports,
    run_comparison_experiment,
)
from .integrator import StepScheme
from .meanfield import (
    contraction_rate_hint,
    dirac_init,
    estimate_invariant,
    gaussian_init,
    pick_t0,
    picard_solve,
    simulate_mckean_vlasov,
)
from .models import MODEL_BUILDERS
from .transport import wasserstein

EXPERIMENTS = ("simulate", "invariant", "picard", "contraction", "compare",
               "check", "dvrate", "hitting")

EXTRA_CHECKS = {
    "hamiltonian_condition": check_hamiltonian_condition,
    "pair_contraction": check_pair_contraction,
    "degenerate_pair": check_degenerate_pair,
    "drift_growth_margin": check_drift_growth_margin,
    "spectral_summability": check_spectral_summability,
}


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------

def load_config(path):
    with open(path) as fh:
        cfg = yaml.safe_load(fh)
    if not isinstance(cfg, dict):
        raise ValueError("config document must be a mapping")
    return cfg


def validate(cfg, experiment=None):
    """Schema check; returns a list of (field_path, reason) violations."""
    out = []
    exp = experiment or cfg.get("experiment")
    if exp not in EXPERIMENTS:
        out.append(("experiment", f"unknown experiment {exp!r}; choose from "
                    f"{'|'.join(EXPERIMENTS)}"))

    model_cfg = cfg.get("model")
    model = None
    needs_model = exp not in ("dvrate",)
    if needs_model:
        if not isinstance(model_cfg, dict) or "name" not in model_cfg:
            out.append(("model.name", "required"))
        elif model_cfg["name"] not in MODEL_BUILDERS:
            out.append(("model.name",
                        f"unknown model {model_cfg['name']!r}; available: "
                        f"{sorted(MODEL_BUILDERS)}"))
        else:
            try:
                model = MODEL_BUILDERS[model_cfg["name"]](
                    **model_cfg.get("params", {}))
            except (TypeError, ValueError) as exc:
                out.append(("model.params", str(exc)))

    scheme_cfg = cfg.get("scheme", {})
    kind = scheme_cfg.get("kind", "euler_maruyama")
    dt = scheme_cfg.get("dt")
    if kind not in ("euler_maruyama", "exponential_euler"):
        out.append(("scheme.kind", f"unknown scheme {kind!r}"))
    if not isinstance(dt, (int, float)) or dt <= 0:
        out.append(("scheme.dt", "must be a positive number"))
    elif model is not None:
        if model.r0 > 0:
            ratio = model.r0 / dt
            if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
                out.append(("scheme.dt",
                            f"dt={dt} does not divide the delay r0={model.r0}"))
        if kind == "exponential_euler" and model.spectrum is None:
            out.append(("scheme.kind",
                        "exponential_euler requires a model with a spectrum"))

    ens = cfg.get("ensemble", {})
    if "seed" not in ens:
        out.append(("ensemble.seed", "required"))
    horizon_needed = exp in ("simulate", "contraction", "compare")
    if horizon_needed and not ens.get("T"):
        out.append(("ensemble.T", "required for this experiment"))
    if exp not in ("check", "dvrate") and ens.get("N", 2) < 2:
        out.append(("ensemble.N", "need at least 2 particles"))

    stride = cfg.get("checkpoint_stride", 1)
    if not isinstance(stride, int) or stride < 1:
        out.append(("checkpoint_stride", "must be a positive integer"))
    return out


def _make_init(spec, default_mean=0.0):
    if spec is None:
        return gaussian_init(mean=default_mean)
    kind = spec.get("kind", "gaussian")
    if kind == "gaussian":
        return gaussian_init(mean=spec.get("mean", 0.0), std=spec.get("std", 1.0))
    if kind == "dirac":
        return dirac_init(spec["point"])
    raise ValueError(f"unknown init kind {spec['kind']!r}")


def _build(cfg):
    model = MODEL_BUILDERS[cfg["model"]["name"]](**cfg["model"].get("params", {}))
    scheme = StepScheme(cfg.get("scheme", {}).get("kind", "euler_maruyama"),
                        cfg["scheme"]["dt"])
    return model, scheme


# ---------------------------------------------------------------------------
# artifact writers
# ---------------------------------------------------------------------------

def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    if isinstance(x, float) or isinstance(x, np.floating):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _atom_header(n_grid, dim):
    if n_grid == 1:
        return [f"x_{i + 1}" for i in range(dim)]
    return [f"g{g}_x_{i + 1}" for g in range(n_grid) for i in range(dim)]


def write_measure_csv(path, measure):
    header = ["atom", "weight"] + _atom_header(measure.n_grid, measure.dim)
    rows = [[i, measure.weights[i]] + list(measure.atoms[i].ravel())
            for i in range(measure.n_atoms)]
    write_csv(path, header, rows)


def write_manifest(out_dir, cfg, experiment, threads):
    canon = json.dumps(cfg, sort_keys=True, default=str)
    model_cfg = cfg.get("model", {})
    manifest = {
        "experiment": experiment,
        "config": cfg,
        "config_sha256": hashlib.sha256(canon.encode()).hexdigest(),
        "model_hash": hashlib.sha256(
            json.dumps(model_cfg, sort_keys=True, default=str).encode()).hexdigest(),
        "seed": cfg.get("ensemble", {}).get("seed"),
        "N": cfg.get("ensemble", {}).get("N"),
        "dt": cfg.get("scheme", {}).get("dt"),
        "threads": threads,
        "versions": {"mvlab": __version__, "numpy": np.__version__},
        "created_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    with open(Path(out_dir) / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)


def _report_rows(reports):
    return [[r.name, r.lhs, r.rhs, r.verdict,
             "" if r.optimizer is None else r.optimizer] for r in reports]


def write_reports(out_dir, reports):
    out_dir = Path(out_dir)
    write_csv(out_dir / "report.csv",
              ["name", "lhs", "rhs", "verdict", "optimizer"],
              _report_rows(reports))
    payload = []
    for r in reports:
        payload.append({
            "name": r.name, "lhs": r.lhs, "rhs": r.rhs, "verdict": r.verdict,
            "optimizer": r.optimizer,
            "details": {k: v for k, v in r.details.items()
                        if isinstance(v, (int, float, bool, str))},
            "warnings": r.warnings,
        })
    with open(out_dir / "report.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=str)
    lines = [f"{'name':32s} {'lhs':>14s} {'rhs':>14s} {'verdict':>8s}"]
    for r in reports:
        lines.append(f"{r.name:32s} {r.lhs:14.6g} {r.rhs:14.6g} "
                     f"{str(r.verdict):>8s}")
        for w in r.warnings:
            lines.append(f"    note: {w}")
    (out_dir / "report.txt").write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# experiment runners
# ---------------------------------------------------------------------------

def _run_simulate(cfg, out_dir, figures, threads):
    model, scheme = _build(cfg)
    ens = cfg["ensemble"]
    stride = cfg.get("checkpoint_stride", 1)
    rec, law = simulate_mckean_vlasov(
        model, _make_init(ens.get("init")), ens.get("N", 2), ens["T"], scheme,
        ens["seed"], state_stride=stride)
    write_csv(Path(out_dir) / "trajectory.csv",
              ["t"] + [f"x_{i + 1}" for i in range(model.dim)],
              [[t] + list(x) for t, x in zip(rec.times, rec.states[:, 0, :])])
    if figures:
        from . import figures as figs

        figs.trajectory_figure(rec.times, rec.states[:, 0, :],
                               Path(out_dir) / "trajectory.png")
    return 0


def _run_invariant(cfg, out_dir, figures, threads):
    model, scheme = _build(cfg)
    ens = cfg["ensemble"]
    inv = estimate_invariant(
        model, ens.get("N", 2), ens.get("T_burn"), ens.get("T_sample", 10.0),
        scheme, ens["seed"], init_sampler=_make_init(ens.get("init")),
        max_atoms=cfg.get("experiment_params", {}).get("max_atoms", 200_000))
    write_measure_csv(Path(out_dir) / "invariant_atoms.csv", inv)
    states = inv.states
    mean = states.mean(axis=0)
    cov = np.cov(states.T) if states.shape[0] > 1 else np.zeros((model.dim,) * 2)
    cov = np.atleast_2d(cov)
    rows = [["mean_norm", float(np.linalg.norm(mean))]]
    rows += [[f"mean_{i + 1}", mean[i]] for i in range(model.dim)]
    rows += [[f"cov_{i + 1}_{j + 1}", cov[i, j]]
             for i in range(model.dim) for j in range(model.dim)]
    write_csv(Path(out_dir) / "invariant_summary.csv", ["stat", "value"], rows)
    if figures:
        from . import figures as figs

        figs.invariant_figure(states, Path(out_dir) / "invariant.png")
    return 0


def _run_picard(cfg, out_dir, figures, threads):
    model, scheme = _build(cfg)
    ens = cfg["ensemble"]
    ep = cfg.get("experiment_params", {})
    n_iter = ep.get("n_iter", 6)
    init = _make_init(ens.get("init"))
    gen = np.random.default_rng(ens["seed"])
    from .core import EmpiricalMeasure

    init_law = EmpiricalMeasure.from_points(
        init(gen, ens.get("N", 2), model.dim))
    t0 = ep.get("t0") or pick_t0(model, c2=ep.get("c2", 1.0))
    t0 = max(scheme.dt, round(t0 / scheme.dt) * scheme.dt)
    flows, ratios = picard_solve(model, init_law, t0, n_iter, ens.get("N", 2),
                                 scheme, ens["seed"])
    write_csv(Path(out_dir) / "picard_ratios.csv", ["n", "ratio"],
              [[i + 1, r] for i, r in enumerate(ratios)])
    if figures:
        from . import figures as figs

        figs.picard_figure(ratios, Path(out_dir) / "picard.png")
    return 0


def _run_contraction(cfg, out_dir, figures, threads):
    model, scheme = _build(cfg)
    ens = cfg["ensemble"]
    ep = cfg.get("experiment_params", {})
    p = ep.get("p", model.params.get("p", 2))
    stride = cfg.get("checkpoint_stride", max(1, scheme.n_steps(ens["T"]) // 80))
    init_a = _make_init(ep.get("init_a"), default_mean=0.0)
    init_b = _make_init(ep.get("init_b"), default_mean=5.0)
    _, law_a = simulate_mckean_vlasov(model, init_a, ens.get("N", 2), ens["T"],
                                      scheme, ens["seed"], law_stride=stride)
    _, law_b = simulate_mckean_vlasov(model, init_b, ens.get("N", 2), ens["T"],
                                      scheme, ens["seed"], law_stride=stride)
    times = law_a.times
    values = np.array([wasserstein(ma, mb, p=p)
                       for ma, mb in zip(law_a.measures, law_b.measures)])
    write_csv(Path(out_dir) / "law_distances.csv", ["t", "value"],
              np.column_stack([times, values]))
    window = tuple(ep.get("fit_window", (0.5, float(ens["T"]))))
    keep = values > 0
    fit = fit_contraction_rate(np.column_stack([times[keep], values[keep]]),
                               window=window)
    hint, _ = contraction_rate_hint(model)
    write_csv(Path(out_dir) / "rate_fit.csv",
              ["rate", "intercept", "r_squared", "t_lo", "t_hi", "rate_hint"],
              [[fit.rate, fit.intercept, fit.r_squared, fit.window[0],
                fit.window[1], hint if hint is not None else ""]])
    if figures:
        from . import figures as figs

        figs.decay_figure(times[keep], values[keep], fit,
                          Path(out_dir) / "contraction.png",
                          ylabel=f"W_{p} between laws")
    return 0


def _run_compare(cfg, out_dir, figures, threads):
    model, scheme = _build(cfg)
    ens = cfg["ensemble"]
    ep = cfg.get("experiment_params", {})
    inv_cfg = {"N": ep.get("invariant_N", min(ens.get("N", 2), 2000)),
               "T_burn": ens.get("T_burn"),
               "T_sample": ens.get("T_sample", 20.0)}
    res = run_comparison_experiment(
        model, ens.get("N", 2), ens["T"], scheme, ens["seed"],
        init_sampler=_make_init(ens.get("init")),
        invariant_cfg=inv_cfg, n_report=ep.get("n_report", 16),
        snapshot_dt=ep.get("snapshot_dt", 0.5),
        n_checkpoints=ep.get("n_checkpoints", 20))
    snap_at_cp = np.searchsorted(res.snapshot_times, res.checkpoint_times)
    bound = res.integral_mean[snap_at_cp] / res.checkpoint_times
    write_csv(Path(out_dir) / "comparison_checkpoints.csv",
              ["t", "rho", "integral", "bound"],
              np.column_stack([res.checkpoint_times, res.rho_mean,
                               res.integral_mean[snap_at_cp], bound]))
    write_csv(Path(out_dir) / "comparison_distance.csv", ["t", "value"],
              np.column_stack([res.step_times, res.step_dist_mean]))
    if figures:
        from . import figures as figs

        figs.comparison_figure(res.checkpoint_times, res.rho_mean, bound,
                               Path(out_dir) / "comparison.png")
    return 0


def _run_check(cfg, out_dir, figures, threads):
    ep = cfg.get("experiment_params", {})
    reports = []
    if cfg.get("model"):
        model, _ = _build(cfg)
        reports.extend(model_condition_reports(
            model, n_probes=ep.get("n_probes", 2000),
            seed=cfg["ensemble"]["seed"]))
    for spec in ep.get("checks", []):
        fn = EXTRA_CHECKS.get(spec.get("name"))
        if fn is None:
            raise ValueError(f"unknown check {spec.get('name')!r}; available: "
                             f"{sorted(EXTRA_CHECKS)}")
        reports.append(fn(**spec.get("params", {})))
    if not reports:
        raise ValueError("nothing to check: give a model or experiment_params.checks")
    write_reports(out_dir, reports)
    if figures:
        from . import figures as figs

        figs.checks_figure(reports, Path(out_dir) / "checks.png")
    return 0 if all(r.verdict for r in reports) else 2


def _run_dvrate(cfg, out_dir, figures, threads):
    ep = cfg.get("experiment_params", {})
    lam = ep.get("lambda_ref", 1.0)
    sig = ep.get("sigma_ref", np.sqrt(2.0))
    m_values = ep.get("m_values", [ep.get("m", 0.0)])
    v_values = ep.get("v_values", [ep.get("v", 1.0)])
    rows = []
    grid = np.empty((len(v_values), len(m_values)))
    for i, v in enumerate(v_values):
        for j, m in enumerate(m_values):
            grid[i, j] = dv_rate_gaussian_ou(lam, sig, m, v)
            rows.append([m, v, grid[i, j]])
    write_csv(Path(out_dir) / "dvrate.csv", ["m", "v", "value"], rows)
    if figures and len(m_values) > 1 and len(v_values) > 1:
        from . import figures as figs

        figs.dvrate_figure(m_values, v_values, grid, Path(out_dir) / "dvrate.png")
    return 0


def _run_hitting(cfg, out_dir, figures, threads):
    model, scheme = _build(cfg)
    ens = cfg["ensemble"]
    ep = cfg.get("experiment_params", {})
    inv = estimate_invariant(model, ep.get("invariant_N", 500),
                             ens.get("T_burn"), ens.get("T_sample", 10.0),
                             scheme, ens["seed"] + 1)
    ref = model.frozen(inv)
    est, cens = hitting_moment(
        ref, ep.get("k_radius", 1.0), ep.get("lambda_exp", 0.1),
        ep.get("n_samples", 1000), ep.get("t_cap", 50.0), scheme, ens["seed"],
        starts=ep.get("starts", [[3.0] + [0.0] * (model.dim - 1)]),
        threads=threads)
    write_csv(Path(out_dir) / "hitting.csv",
              ["estimate", "censored_fraction", "n_samples", "t_cap",
               "k_radius", "lambda_exp"],
              [[est, cens, ep.get("n_samples", 1000), ep.get("t_cap", 50.0),
                ep.get("k_radius", 1.0), ep.get("lambda_exp", 0.1)]])
    if figures:
        from . import figures as figs

        figs.hitting_figure(est, cens, Path(out_dir) / "hitting.png")
    return 0


_RUNNERS = {
    "simulate": _run_simulate,
    "invariant": _run_invariant,
    "picard": _run_picard,
    "contraction": _run_contraction,
    "compare": _run_compare,
    "check": _run_check,
    "dvrate": _run_dvrate,
    "hitting": _run_hitting,
}


def run(cfg, experiment=None, out_dir=None, threads=1, figures=True):
    """Validate and execute one experiment; returns the process exit code."""
    experiment = experiment or cfg.get("experiment")
    violations = validate(cfg, experiment)
    if violations:
        for path, reason in violations:
            print(f"config violation: {path}: {reason}", file=sys.stderr)
        return 3
    out_dir = Path(out_dir or cfg.get("output_dir", "out"))
    out_dir.mkdir(parents=True, exist_ok=True)
    write_manifest(out_dir, cfg, experiment, threads)
    try:
        return _RUNNERS[experiment](cfg, out_dir, figures, threads)
    except Exception as exc:  # runtime failure, distinct from verdict=false
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="mvlab",
        description="simulation and verification lab for distribution-"
                    "dependent SDEs/SPDEs")
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", required=True, help="YAML config path")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker cap for parallel estimators")
    parser.add_argument("--seed", type=int, default=None,
                        help="override ensemble.seed")
    parser.add_argument("--no-figures", action="store_true",
                        help="skip PNG rendering")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
    except Exception as exc:
        print(f"config violation: <document>: {exc}", file=sys.stderr)
        return 3
    if args.seed is not None:
        cfg.setdefault("ensemble", {})["seed"] = args.seed
    code = run(cfg, experiment=args.experiment, out_dir=args.out,
               threads=args.threads, figures=not args.no_figures)
    return code


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``ocsmm synth|fit|score|eval|sweep|density``.

Exit codes: 0 success, 2 usage or input error, 3 numerical non-convergence.
Every command writes its fully resolved configuration next to its main
output as ``<output>.config.json``.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import synth
from .data import DatasetFormatError, Group, load_dataset, save_jsonl
from .density import DensityModel
from .evaluation import DEFAULT_NUS, GridSpec, curve_area, fmt, nu_sweep, roc_auc, write_table
from .kernels import GroupKernelSpec, NumericalError, median_heuristic, resolve_spec
from .model import OcsmmModel, SolverConfig, fit, nu_property_check, score_dataset
from .svg import heatmap, roc_polyline

EXIT_USAGE = 2
EXIT_NONCONVERGED = 3


class NonConvergence(RuntimeError):
    pass


def _write_config(out: str | Path, config: dict) -> None:
    with open(f"{out}.config.json", "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"cannot serialize {type(v)}")


def _add_kernel_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kernel", choices=["empirical", "analytic"], default="empirical",
                   help="level-1 kernel: sample average or closed form for Gaussians")
    p.add_argument("--level2", choices=["linear", "rbf"], default="linear")
    p.add_argument("--sigma", type=float, default=None, help="base RBF bandwidth (default: median heuristic)")
    p.add_argument("--gamma", type=float, default=None, help="embedding RBF width (level2 rbf)")
    p.add_argument("--gamma-preset", choices=["median", "sigma"], default="median",
                   help="rule for gamma when --gamma is absent; 'sigma' sets gamma = sigma")
    p.add_argument("--normalize", action="store_true", help="spherically normalize the embeddings")


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=10_000_000)


def _spec_from(args) -> GroupKernelSpec:
    return GroupKernelSpec(level1=args.kernel, level2=args.level2, sigma=args.sigma, gamma=args.gamma,
                           gamma_preset=args.gamma_preset, normalize=args.normalize)


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


# -- commands ---------------------------------------------------------------


def cmd_synth(args) -> int:
    gen = synth.GENERATORS[args.generator]
    kwargs = {}
    if args.n is not None:
        if args.generator not in ("circle", "flower"):
            raise ValueError("--n only applies to the circle and flower generators")
        kwargs["n"] = args.n
    ds = gen(args.seed, **kwargs)
    if args.inject:
        ds = synth.inject_aggregation_anomalies(ds, args.inject, args.inject_seed)
    save_jsonl(ds, args.out)
    _write_config(args.out, {"command": "synth", "generator": args.generator, "seed": args.seed,
                             "n_groups": len(ds), "out": str(args.out), "provenance": ds.provenance})
    return 0


def cmd_fit(args) -> int:
    ds = load_dataset(args.dataset)
    groups = [g.without_label() for g in ds]
    solver = SolverConfig(args.tol, args.max_iter)
    model = fit(groups, _spec_from(args), args.nu, solver)
    model.save(args.model_out)
    check = nu_property_check(model, groups)
    train = model.decision_function(groups)
    report = dict(model.fit_report)
    report["nu_property"] = check
    report["train_decision"] = {g.id: float(v) for g, v in zip(groups, train)}
    report_path = args.report or f"{args.model_out}.report.json"
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    _write_config(args.model_out, {"command": "fit", "dataset": str(args.dataset), "nu": args.nu,
                                   "spec": model.spec.to_dict(), "solver": asdict(solver),
                                   "model_out": str(args.model_out), "report": str(report_path)})
    if not model.fit_report["converged"]:
        raise NonConvergence(f"solver stopped after {model.fit_report['iterations']} iterations "
                             f"with KKT violation {model.fit_report['max_violation']:.3g}")
    return 0


def cmd_score(args) -> int:
    model = OcsmmModel.load(args.model)
    ds = load_dataset(args.dataset)
    if ds.dim != model.dim:
        raise ValueError(f"dataset dimension {ds.dim} does not match model dimension {model.dim}")
    scored = score_dataset(model, ds)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = ["id", "decision", "is_anomaly", "rank"] + (["label"] if scored.labels is not None else [])
        w.writerow(header)
        for k, gid in enumerate(scored.group_ids):
            row = [gid, fmt(scored.decision[k]), fmt(bool(scored.is_anomaly[k])), str(scored.rank[k])]
            if scored.labels is not None:
                row.append(fmt(bool(scored.labels[k])))
            w.writerow(row)
    _write_config(args.out, {"command": "score", "model": str(args.model), "dataset": str(args.dataset),
                             "out": str(args.out)})
    return 0


def _read_scores(path) -> tuple[list[str], np.ndarray, dict[str, bool]]:
    ids, decisions, labels = [], [], {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or not {"id", "decision"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: scores file needs 'id' and 'decision' columns")
        for row in reader:
            ids.append(row["id"])
            decisions.append(float(row["decision"]))
            if row.get("label") not in (None, ""):
                labels[row["id"]] = bool(int(row["label"]))
    return ids, np.array(decisions), labels


def cmd_eval(args) -> int:
    ids, decision, labels = _read_scores(args.scores)
    if args.dataset:
        labels = {g.id: g.label for g in load_dataset(args.dataset) if g.label is not None}
    missing = [i for i in ids if i not in labels]
    if missing:
        raise ValueError(f"no label for {len(missing)} scored groups (e.g. {missing[0]!r})")
    y = np.array([labels[i] for i in ids])
    res = roc_auc(-decision, y)
    write_table([{"n": len(ids), "n_anomalous": int(y.sum()), "auc": res.auc, "ap": res.ap,
                  "curve_auc": curve_area(res)}], args.out)
    roc_path = args.roc or f"{args.out}.roc.csv"
    write_table([{"fpr": f, "tpr": t} for f, t in zip(res.fpr, res.tpr)], roc_path)
    if args.svg:
        Path(args.svg).write_text(roc_polyline(res.fpr, res.tpr, f"ROC (AUC {res.auc:.4f})"), encoding="utf-8")
    _write_config(args.out, {"command": "eval", "scores": str(args.scores), "dataset": args.dataset,
                             "out": str(args.out), "roc": str(roc_path), "svg": args.svg})
    return 0


def cmd_sweep(args) -> int:
    ds = load_dataset(args.dataset)
    groups = list(ds)
    spec = resolve_spec(_spec_from(args), [g.without_label() for g in groups])
    rows = nu_sweep(groups, spec, args.nus, SolverConfig(args.tol, args.max_iter))
    write_table(rows, args.out)
    _write_config(args.out, {"command": "sweep", "dataset": str(args.dataset), "nus": args.nus,
                             "spec": spec.to_dict(), "out": str(args.out)})
    if not all(r["converged"] for r in rows):
        raise NonConvergence("at least one nu did not converge")
    return 0


def _density_model(kind: str, groups: list[Group], sigma: float, nu: float, test_sigma: float,
                   solver: SolverConfig) -> DensityModel:
    X = np.concatenate([g.points for g in groups])
    omega = np.concatenate([g.omega if g.omega is not None else np.zeros(g.size) for g in groups])
    if kind == "kde":
        return DensityModel("kde", centers=X, h=sigma)
    if kind == "balloon":
        return DensityModel("balloon", centers=X, h=sigma, test_sigma=test_sigma)
    if kind == "sample-smoothing":
        if omega.ndim != 1:
            raise ValueError("sample-smoothing needs isotropic omega")
        return DensityModel("sample_smoothing", centers=X, sigmas=np.sqrt(sigma**2 + omega))
    model = fit(groups, GroupKernelSpec(level1="analytic", sigma=sigma), nu, solver)
    if not model.fit_report["converged"]:
        raise NonConvergence("density model fit did not converge")
    return DensityModel("ocsmm", model=model, test_sigma=test_sigma)


def cmd_density(args) -> int:
    ds = load_dataset(args.dataset)
    groups = [g.without_label() for g in ds]
    if any(g.points is None for g in groups):
        raise ValueError("density estimation needs point samples")
    d = ds.dim
    if d > 2:
        raise ValueError("density grids support 1- or 2-dimensional data")
    sigma = args.sigma if args.sigma is not None else float(np.sqrt(median_heuristic(groups)))
    est = _density_model(args.kind, groups, sigma, args.nu, args.test_sigma, SolverConfig(args.tol, args.max_iter))
    X = np.concatenate([g.points for g in groups])
    if args.box:
        if len(args.box) != 2 * d:
            raise ValueError(f"--box needs {2 * d} numbers for {d}-dimensional data")
        lower, upper = tuple(args.box[0::2]), tuple(args.box[1::2])
    else:
        lower = tuple(float(v) for v in X.min(0) - 3 * sigma)
        upper = tuple(float(v) for v in X.max(0) + 3 * sigma)
    grid = GridSpec(lower, upper, args.nodes)
    Y = grid.points()
    values = est(Y)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{k + 1}" for k in range(d)] + ["density"])
        for y, v in zip(Y, values):
            w.writerow([fmt(c) for c in y] + [fmt(v)])
    if args.svg:
        if d != 2:
            raise ValueError("SVG heat maps need 2-dimensional data")
        ax = grid.axes
        Path(args.svg).write_text(heatmap(values.reshape(args.nodes, args.nodes), ax[0], ax[1], X,
                                          f"{args.kind} density"), encoding="utf-8")
    _write_config(args.out, {"command": "density", "dataset": str(args.dataset), "kind": args.kind,
                             "sigma": sigma, "nu": args.nu, "test_sigma": args.test_sigma,
                             "grid": asdict(grid), "out": str(args.out), "svg": args.svg,
                             "integral": grid.integrate(values)})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ocsmm", description="One-class support measure machines")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic group dataset (JSONL)")
    p.add_argument("generator", choices=sorted(synth.GENERATORS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=None, help="points for circle/flower")
    p.add_argument("--inject", type=int, default=0, help="append this many aggregation anomalies")
    p.add_argument("--inject-seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="fit a model on a dataset")
    p.add_argument("dataset")
    p.add_argument("--model-out", required=True)
    p.add_argument("--report", default=None)
    p.add_argument("--nu", type=float, default=0.1)
    _add_kernel_flags(p)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("score", help="score groups with a fitted model")
    p.add_argument("model")
    p.add_argument("dataset")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", help="ROC/AUC/AP for a scores file")
    p.add_argument("scores")
    p.add_argument("--dataset", default=None, help="take labels from this dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--roc", default=None)
    p.add_argument("--svg", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="fit and evaluate over a grid of nu values")
    p.add_argument("dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--nus", type=_parse_floats, default=list(DEFAULT_NUS))
    _add_kernel_flags(p)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("density", help="evaluate a density estimate on a grid")
    p.add_argument("dataset")
    p.add_argument("--kind", choices=["kde", "ocsmm", "balloon", "sample-smoothing"], default="ocsmm")
    p.add_argument("--out", required=True)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--nu", type=float, default=1.0)
    p.add_argument("--test-sigma", type=float, default=0.0)
    p.add_argument("--nodes", type=int, default=101)
    p.add_argument("--box", type=_parse_floats, default=None, help="xmin,xmax[,ymin,ymax]; write --box=-3,3,... for negative bounds")
    p.add_argument("--svg", default=None)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_density)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NonConvergence as exc:
        print(f"ocsmm {args.command}: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except NumericalError as exc:
        print(f"ocsmm {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (OSError, DatasetFormatError, ValueError, KeyError) as exc:
        print(f"ocsmm {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

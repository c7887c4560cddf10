"""Command-line surface: fit, eval, sweep, diagnose.

All numeric CSV output uses 17 significant digits so values round-trip
exactly; the human-readable table rounds instead.  Every subcommand is
deterministic under a fixed seed, and failures exit with a single
machine-parsable line ``error: <kind>: <message>`` on stderr.

Exit codes: 0 ok, 2 invalid-argument, 3 io-error, 4 format-error,
5 numerical-error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import data_io, pipeline, solver
from .errors import FormatError, NumericalError

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_IO = 3
EXIT_FORMAT = 4
EXIT_NUMERICAL = 5

HISTORY_HEADER = (
    "iteration,objective,residual,mu,s_support_min,s_support_med,s_support_max"
)
SUMMARY_HEADER = "lambda1,lambda2,lambda3,m,alpha,mean,std,repeats"
SWEEP_HEADER = "lambda1,lambda2,lambda3,m,alpha,repeat,accuracy"


def _g17(value: float) -> str:
    return format(float(value), ".17g")


def _float_list(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(part) for part in text.split(",") if part.strip() != "")
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats, got '{text}'")
    if not values:
        raise argparse.ArgumentTypeError("expected at least one value")
    return values


def _int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(part) for part in text.split(",") if part.strip() != "")
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")
    if not values:
        raise argparse.ArgumentTypeError("expected at least one value")
    return values


def _load_input(args) -> tuple[np.ndarray, np.ndarray, data_io.DatasetManifest | None]:
    if args.manifest is not None:
        manifest = data_io.parse_manifest(args.manifest)
        x, labels = data_io.load_from_manifest(manifest)
        return x, labels, manifest
    c, d, r, per, noise_milli, seed = args.blobs
    spec = data_io.SyntheticSpec(
        classes=c, dim=d, intrinsic_dim=r, per_class=per, noise=noise_milli / 1000.0, seed=seed
    )
    x, labels = data_io.make_blobs(spec)
    return x, labels, None


def _add_input_flags(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--manifest", type=Path, help="dataset manifest path")
    source.add_argument(
        "--blobs",
        type=_int_list,
        metavar="C,D,R,PER,NOISE_MILLI,SEED",
        help="synthetic blobs: classes, ambient dim, intrinsic dim, samples "
        "per class, noise in thousandths, seed",
    )


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--lambda1", type=_float_list, default=(1e-4,),
                        help="projection penalty (comma list sweeps a grid)")
    parser.add_argument("--lambda2", type=_float_list, default=(1e-4,),
                        help="nuclear-norm penalty (comma list sweeps a grid)")
    parser.add_argument("--lambda3", type=_float_list, default=(10.0,),
                        help="graph spread penalty (comma list sweeps a grid)")
    parser.add_argument("--dim", type=int, default=None, help="embedding dimension m")
    parser.add_argument("--alpha", type=int, default=None,
                        help="retained-feature count (default: max(m, floor(0.9 d)))")
    parser.add_argument("--neighbors", type=int, default=None,
                        help="candidate neighbor count k")
    parser.add_argument("--mu0", type=float, default=0.1)
    parser.add_argument("--rho", type=float, default=1.1)
    parser.add_argument("--mu-max", type=float, default=1e8)
    parser.add_argument("--epsilon", type=float, default=1e-6)
    parser.add_argument("--max-iter", type=int, default=60)


def _single(name: str, values: tuple[float, ...]) -> float:
    if len(values) != 1:
        raise ValueError(f"{name} must be a single value here, got {len(values)}")
    return values[0]


def _history_row(entry) -> str:
    sizes = entry.support_sizes
    return ",".join(
        [
            str(entry.iteration),
            _g17(entry.objective),
            _g17(entry.residual),
            _g17(entry.penalty),
            str(int(sizes.min())),
            _g17(float(np.median(sizes))),
            str(int(sizes.max())),
        ]
    )


def cmd_fit(args) -> int:
    x, labels, manifest = _load_input(args)
    d, n = x.shape
    dim = args.dim if args.dim is not None else (
        manifest.reduced_dim if manifest is not None and manifest.reduced_dim else 10
    )
    alpha = args.alpha if args.alpha is not None else pipeline.ninety_percent_alpha(dim, d)
    if args.neighbors is not None:
        neighbors = args.neighbors
    else:
        # Protocol default: the size of the smallest class.
        neighbors = int(np.min(np.bincount(labels.astype(int))))
        neighbors = max(1, min(neighbors, n - 1))
    params = solver.Hyperparams(
        lambda1=_single("lambda1", args.lambda1),
        lambda2=_single("lambda2", args.lambda2),
        lambda3=_single("lambda3", args.lambda3),
        dim=dim,
        alpha=alpha,
        neighbors=neighbors,
        mu0=args.mu0,
        rho=args.rho,
        mu_max=args.mu_max,
        epsilon=args.epsilon,
        max_iter=args.max_iter,
    )

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tic = time.perf_counter()
    if args.history:
        # History rows stream to disk as the solver emits them, so a
        # long fit can be inspected (or diagnosed) before it finishes.
        with open(out / "history.csv", "w", encoding="utf-8") as fh:
            fh.write(HISTORY_HEADER + "\n")
            projection, history = solver.fit(
                x, params, sink=lambda entry: fh.write(_history_row(entry) + "\n")
            )
    else:
        projection, history = solver.fit(x, params)
    fit_seconds = time.perf_counter() - tic

    np.savez(
        out / "projection.npz",
        v=projection.v,
        selected=projection.selected,
        d=np.asarray(projection.d),
        m=np.asarray(projection.m),
    )
    if args.metadata:
        meta = {
            "input": str(args.manifest) if args.manifest else f"blobs:{','.join(map(str, args.blobs))}",
            "d": d,
            "n": n,
            "seed": args.seed,
            "hyperparams": {
                "lambda1": params.lambda1,
                "lambda2": params.lambda2,
                "lambda3": params.lambda3,
                "m": params.dim,
                "alpha": params.alpha,
                "k": params.neighbors,
                "mu0": params.mu0,
                "rho": params.rho,
                "mu_max": params.mu_max,
                "epsilon": params.epsilon,
                "max_iter": params.max_iter,
            },
            "iterations": len(history),
            "converged": bool(history and history[-1].residual <= params.epsilon),
            "timings": {"fit": fit_seconds},
        }
        (out / "run.json").write_text(json.dumps(meta, indent=2) + "\n")
    if args.features:
        (out / "selected_features.txt").write_text(
            "\n".join(str(int(i)) for i in projection.selected) + "\n"
        )
    print(f"fit: {len(history)} iteration(s), outputs in {out}")
    return EXIT_OK


def _build_plan(args, manifest, d: int, method: str) -> pipeline.ExperimentPlan:
    dim = args.dim if args.dim is not None else (
        manifest.reduced_dim if manifest is not None and manifest.reduced_dim else 10
    )
    return pipeline.ExperimentPlan(
        dataset=None,
        trainers_per_class=args.trainers,
        reduced_dim=dim,
        repeats=args.repeats,
        pca_energy=args.pca_energy,
        pca_dim=args.pca_dim,
        lambda1_grid=args.lambda1,
        lambda2_grid=args.lambda2,
        lambda3_grid=args.lambda3,
        alpha=args.alpha,
        neighbors=args.neighbors,
        seed=args.seed,
        method=method,
    )


def _summary_rows(summary: pipeline.PlanSummary) -> list[str]:
    rows = [SUMMARY_HEADER]
    for cell in summary.cells:
        rows.append(
            ",".join(
                [
                    _g17(cell.lambda1),
                    _g17(cell.lambda2),
                    _g17(cell.lambda3),
                    str(cell.dim),
                    str(cell.alpha),
                    _g17(cell.mean),
                    _g17(cell.std),
                    str(cell.repeats),
                ]
            )
        )
    return rows


def _summary_table(summary: pipeline.PlanSummary) -> str:
    lines = [
        f"method={summary.plan.method}  #Tr={summary.plan.trainers_per_class}  "
        f"m={summary.plan.reduced_dim}  repeats={summary.plan.repeats}",
        "lambda1    lambda2    lambda3    accuracy",
    ]
    for cell in summary.cells:
        mark = " (incomplete)" if cell.incomplete else ""
        lines.append(
            f"{cell.lambda1:<10.3g} {cell.lambda2:<10.3g} {cell.lambda3:<10.3g} "
            f"{cell.table_cell()}{mark}"
        )
    return "\n".join(lines)


def cmd_eval(args) -> int:
    x, labels, manifest = _load_input(args)
    plan = _build_plan(args, manifest, x.shape[0], args.method)
    summary = pipeline.run_plan(plan, data=(x, labels), jobs=args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.csv").write_text("\n".join(_summary_rows(summary)) + "\n")
    table = _summary_table(summary)
    (out / "summary.txt").write_text(table + "\n")
    print(table)
    return EXIT_OK


def cmd_sweep(args) -> int:
    x, labels, manifest = _load_input(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = [SWEEP_HEADER]
    if args.mode == "grid":
        plan = _build_plan(args, manifest, x.shape[0], args.method)
        summary = pipeline.run_plan(plan, data=(x, labels), jobs=args.jobs)
        for (ci, rep), trial in sorted(summary.trials.items()):
            cell = summary.cells[ci]
            rows.append(
                ",".join(
                    [
                        _g17(cell.lambda1),
                        _g17(cell.lambda2),
                        _g17(cell.lambda3),
                        str(cell.dim),
                        str(cell.alpha),
                        str(rep),
                        _g17(trial.accuracy),
                    ]
                )
            )
    else:  # dimension sweep
        if args.dims is None:
            raise ValueError("--dims is required in dims mode")
        for m in args.dims:
            args_dim = argparse.Namespace(**vars(args))
            args_dim.dim = m
            plan = _build_plan(args_dim, manifest, x.shape[0], args.method)
            summary = pipeline.run_plan(plan, data=(x, labels), jobs=args.jobs)
            for (ci, rep), trial in sorted(summary.trials.items()):
                cell = summary.cells[ci]
                rows.append(
                    ",".join(
                        [
                            _g17(cell.lambda1),
                            _g17(cell.lambda2),
                            _g17(cell.lambda3),
                            str(m),
                            str(cell.alpha),
                            str(rep),
                            _g17(trial.accuracy),
                        ]
                    )
                )
    (out / "sweep.csv").write_text("\n".join(rows) + "\n")
    print(f"sweep: wrote {len(rows) - 1} rows to {out / 'sweep.csv'}")
    return EXIT_OK


def read_history_csv(path: str | Path) -> dict[str, np.ndarray]:
    """Parse a fit history CSV, raising ``OSError`` naming the first bad
    line (schema problems raise :class:`FormatError`)."""
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty history CSV") from None
        expected = HISTORY_HEADER.split(",")
        if header != expected:
            raise FormatError(f"{path}: header {header} does not match {expected}")
        columns: dict[str, list[float]] = {name: [] for name in expected}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected):
                raise OSError(
                    f"{path} line {lineno}: expected {len(expected)} fields, found {len(row)}"
                )
            try:
                values = [float(item) for item in row]
            except ValueError:
                raise OSError(f"{path} line {lineno}: non-numeric field") from None
            for name, value in zip(expected, values):
                columns[name].append(value)
    if not columns["iteration"]:
        raise FormatError(f"{path}: history CSV has no data rows")
    return {name: np.asarray(vals) for name, vals in columns.items()}


def cmd_diagnose(args) -> int:
    columns = read_history_csv(args.history)
    residual = columns["residual"]
    objective = columns["objective"]
    hit = np.flatnonzero(residual <= args.epsilon)
    if hit.size:
        verdict = f"converged@{int(columns['iteration'][hit[0]])}"
    else:
        verdict = "not-converged"
    tail = objective[-5:]
    scale = max(abs(float(tail[-1])), 1e-300)
    rel_change = float(tail.max() - tail.min()) / scale
    print(f"verdict: {verdict}")
    print(f"final objective: {_g17(float(objective[-1]))}")
    print(f"relative objective change (last {tail.size}): {_g17(rel_change)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="agle",
        description="Adaptive-neighborhood linear graph embedding: fit, "
        "evaluate, sweep, and diagnose.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="learn a projection and write artifacts")
    _add_input_flags(p_fit)
    _add_model_flags(p_fit)
    p_fit.add_argument("--out", type=Path, required=True, help="output directory")
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--no-history", dest="history", action="store_false",
                       help="skip the per-iteration history CSV")
    p_fit.add_argument("--no-metadata", dest="metadata", action="store_false",
                       help="skip the run-metadata JSON")
    p_fit.add_argument("--features", action="store_true",
                       help="also write selected_features.txt")
    p_fit.set_defaults(func=cmd_fit)

    for name, help_text in (
        ("eval", "repeated split/fit/score evaluation over a grid"),
        ("sweep", "long-format accuracy sweep for plotting"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_input_flags(p)
        _add_model_flags(p)
        p.add_argument("--trainers", type=int, required=True,
                       help="training samples per class (#Tr)")
        p.add_argument("--repeats", type=int, default=10)
        p.add_argument("--pca-energy", type=float, default=0.98)
        p.add_argument("--pca-dim", type=int, default=None,
                       help="explicit preliminary PCA width (overrides energy)")
        p.add_argument("--method", choices=pipeline.METHODS, default="agle")
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--out", type=Path, required=True)
        p.add_argument("--seed", type=int, default=0)
        if name == "sweep":
            p.add_argument("--mode", choices=("grid", "dims"), default="grid")
            p.add_argument("--dims", type=_int_list, default=None,
                           help="embedding dimensions for dims mode")
            p.set_defaults(func=cmd_sweep)
        else:
            p.set_defaults(func=cmd_eval)

    p_diag = sub.add_parser("diagnose", help="summarize a fit history CSV")
    p_diag.add_argument("--history", type=Path, required=True)
    p_diag.add_argument("--epsilon", type=float, default=1e-6)
    p_diag.set_defaults(func=cmd_diagnose)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FormatError as err:
        print(f"error: format-error: {err}", file=sys.stderr)
        return EXIT_FORMAT
    except NumericalError as err:
        print(f"error: numerical-error: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as err:
        print(f"error: io-error: {err}", file=sys.stderr)
        return EXIT_IO
    except ValueError as err:
        print(f"error: invalid-argument: {err}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

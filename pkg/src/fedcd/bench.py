"""Benchmark harness: accuracy tables, convergence series, perturbation
sweeps, and cost-scaling sweeps, as a command-line tool.

Every command is seed-deterministic (prime generation included, since
sessions run with a derived key seed): identical flags produce
byte-identical report files.  Reports are written as CSV when ``--out``
is given and always rendered as a text table on stdout.  Commands run
their own structural checks and exit with status 2 when one fails.
"""

from __future__ import annotations

import argparse
import csv as csv_module
import sys
import time

import numpy as np

from .data import load_csv, load_fixture, partition_equal, split_train_test, standardize, to_dataset
from .errors import FedcdError
from .regression import Dataset, RegressionSpec, fit_cd, fit_gd, mae
from .session import SessionConfig, SessionResult, counters_report, derive_seed, run_session

DEFAULT_SEED = 43
DEFAULT_LAMBDA = 5.0
DEFAULT_KEY_BITS = 256
KIND_CHOICES = ("linear", "ridge", "lasso", "all")


def _kinds(arg: str) -> list[str]:
    return ["linear", "ridge", "lasso"] if arg == "all" else [arg]


def _lam_for(kind: str, lam: float) -> float:
    return 0.0 if kind == "linear" else lam


def prepare_dataset(args) -> tuple[Dataset, Dataset, dict]:
    """Load, split, and standardize the requested dataset."""
    if args.target_col:
        table = load_csv(args.dataset, args.target_col)
        info = {"file": str(args.dataset), "provenance": "user"}
    else:
        table, info = load_fixture(args.dataset)
    train_raw, test_raw = split_train_test(table, fraction=0.2, seed=args.seed)
    train, test, _ = standardize(to_dataset(train_raw), to_dataset(test_raw))
    return train, test, info


def run_fcd(
    train: Dataset,
    kind: str,
    args,
    max_iterations: int,
    tolerance: float = 1e-6,
    xi_value: float | None = None,
    xi_validate: bool = True,
    r_value: float | None = None,
) -> SessionResult:
    shards = partition_equal(train, args.dos, seed=derive_seed(args.seed, "partition"))
    config = SessionConfig(
        num_owners=args.dos,
        kind=kind,
        lam=_lam_for(kind, args.lam),
        max_iterations=max_iterations,
        tolerance=tolerance,
        key_bits=args.key_bits,
        seed=derive_seed(args.seed, f"session-{kind}"),
        key_seed=derive_seed(args.seed, "keys"),
        xi_value=xi_value,
        xi_validate=xi_validate,
        r_value=r_value,
    )
    return run_session(config, shards)


def baseline_fit(train: Dataset, kind: str, lam: float, iterations: int) -> np.ndarray:
    """Centralized reference model: gradient descent for linear/ridge,
    coordinate descent for lasso (plain gradients cannot handle it)."""
    spec = RegressionSpec(kind, lam, iterations, 1e-10)
    if kind == "lasso":
        return fit_cd(train, spec)
    return fit_gd(train, spec)


def denoised_trajectory(result: SessionResult) -> list[np.ndarray]:
    """Owner-side model after each sweep (index 0 is the shared start)."""
    r = result.csp.noise.r
    out = []
    for plain, zero in result.train.trajectory:
        out.append(np.where(zero, 0.0, plain - r))
    return out


def render_table(header: list[str], rows: list[list]) -> str:
    def fmt(v):
        if isinstance(v, float):
            return f"{v:.6g}"
        return str(v)

    cells = [[fmt(v) for v in row] for row in rows]
    widths = [max(len(h), *(len(row[i]) for row in cells)) if cells else len(h)
              for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for row in cells:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    return "\n".join(lines)


def write_report(path: str | None, header: list[str], rows: list[list]) -> None:
    if not path:
        return
    with open(path, "w", newline="") as handle:
        writer = csv_module.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _finish(args, header, rows, failures) -> int:
    write_report(args.out, header, rows)
    print(render_table(header, rows))
    for failure in failures:
        print(f"CHECK FAILED: {failure}", file=sys.stderr)
    return 2 if failures else 0


# -- commands ----------------------------------------------------------------


def cmd_accuracy(args) -> int:
    train, test, _ = prepare_dataset(args)
    header = ["dataset", "kind", "fcd_mae", "baseline_mae", "sweeps"]
    rows, failures = [], []
    for kind in _kinds(args.kind):
        result = run_fcd(train, kind, args, max_iterations=args.iterations)
        fcd_mae = mae(result.final_weights, test)
        base = baseline_fit(train, kind, _lam_for(kind, args.lam), args.iterations)
        base_mae = mae(base, test)
        rows.append([args.dataset, kind, fcd_mae, base_mae, result.train.sweeps])
        if kind == "lasso" and abs(fcd_mae - base_mae) > 1e-4:
            failures.append(
                f"lasso MAE differs from the centralized coordinate-descent baseline "
                f"by {abs(fcd_mae - base_mae):.2e} (> 1e-4)"
            )
    return _finish(args, header, rows, failures)


def cmd_convergence(args) -> int:
    train, test, _ = prepare_dataset(args)
    header = ["iteration"]
    series: dict[str, list[float]] = {}
    baseline_final: dict[str, float] = {}
    failures = []
    budget = args.iterations
    for kind in _kinds(args.kind):
        result = run_fcd(train, kind, args, max_iterations=budget, tolerance=0.0)
        fcd_series = [mae(w, test) for w in denoised_trajectory(result)]
        lam = _lam_for(kind, args.lam)
        base_series, w = [], None
        spec_step = RegressionSpec(kind, lam, 2, 0.0)
        base_series.append(mae(np.zeros(train.num_coords), test))
        for _ in range(0, budget, 2):
            w = (fit_cd if kind == "lasso" else fit_gd)(train, spec_step, w)
            base_series.append(mae(w, test))
        series[f"fcd_{kind}"] = fcd_series
        series[f"baseline_{kind}"] = base_series
        baseline_final[kind] = mae(baseline_fit(train, kind, lam, 2000), test)
        checkpoint = min(20, budget)
        gap = abs(fcd_series[checkpoint] - baseline_final[kind]) / baseline_final[kind]
        if gap > 0.01:
            failures.append(
                f"{kind}: federated MAE at iteration {checkpoint} is {gap:.2%} from baseline"
            )
    header += sorted(series)
    rows = []
    for it in range(0, budget + 1, 2):
        row = [it]
        for name in sorted(series):
            values = series[name]
            idx = it if name.startswith("fcd_") else it // 2
            row.append(values[idx] if idx < len(values) else values[-1])
        rows.append(row)
    return _finish(args, header, rows, failures)


def cmd_sweep_xi(args) -> int:
    train, test, _ = prepare_dataset(args)
    grid = [float(v) for v in args.xi_grid.split(",")]
    header = ["xi", "kind", "attack_mae", "protected_mae"]
    rows, failures = [], []
    for kind in _kinds(args.kind):
        protected: dict[float, float] = {}
        attack: dict[float, float] = {}
        for xi in grid:
            result = run_fcd(
                train, kind, args, max_iterations=args.iterations, tolerance=0.0,
                xi_value=xi, xi_validate=False,
            )
            inferred = result.csp.attack_demo(iterations=args.iterations)
            attack[xi] = mae(inferred, test)
            protected[xi] = mae(result.final_weights, test)
            rows.append([xi, kind, attack[xi], protected[xi]])
        if 1.0 in protected and abs(attack[1.0] - protected[1.0]) > 1e-3:
            failures.append(
                f"{kind}: with masks disabled the inference should match the true model "
                f"(gap {abs(attack[1.0] - protected[1.0]):.2e})"
            )
        if 1.0 in protected and 1.02 in protected and not (
            attack[1.02] > 1e6 * protected[1.02]
        ):
            failures.append(f"{kind}: mask 1.02 did not blow the inference up by 1e6x")
        if max(protected.values()) - min(protected.values()) > 1e-12:
            failures.append(f"{kind}: the protected model should not depend on the mask")
    return _finish(args, header, rows, failures)


def cmd_sweep_r(args) -> int:
    train, test, _ = prepare_dataset(args)
    grid = [float(v) for v in args.r_grid.split(",")]
    header = ["r", "kind", "noisy_mae", "denoised_mae"]
    rows, failures = [], []
    for kind in _kinds(args.kind):
        noisy: dict[float, float] = {}
        denoised: dict[float, float] = {}
        for r_value in grid:
            result = run_fcd(
                train, kind, args, max_iterations=args.iterations, r_value=r_value
            )
            noisy[r_value] = mae(result.w_hat_star, test)
            denoised[r_value] = mae(result.final_weights, test)
            rows.append([r_value, kind, noisy[r_value], denoised[r_value]])
        if 0.0 in noisy and noisy[0.0] != denoised[0.0]:
            failures.append(f"{kind}: with zero noise the two columns must be identical")
        if max(denoised.values()) - min(denoised.values()) > 1e-4:
            failures.append(f"{kind}: denoised accuracy should not depend on the noise value")
        if 2.0 in noisy and 4.0 in noisy and noisy[4.0] <= noisy[2.0]:
            failures.append(f"{kind}: noisy-model error should grow with the noise value")
    return _finish(args, header, rows, failures)


def cmd_sweep_cost(args) -> int:
    grid = [int(v) for v in args.grid.split(",")]
    base = {"features": 4, "samples": 200, "dos": args.dos, "iterations": 10}
    header = [
        args.axis, "kind", "sweeps", "do_ciphertexts", "evaluator_ciphertexts",
        "comparison_requests", "do_encryptions", "evaluator_bytes", "csp_bytes",
        "elapsed_s",  # informational; assertions bind to counts only
    ]
    rows, failures = [], []
    from .data import gen_synthetic

    for kind in _kinds(args.kind):
        for value in grid:
            dims = dict(base)
            dims[args.axis] = value
            train = gen_synthetic(dims["samples"], dims["features"], seed=args.seed)
            shards = partition_equal(train, dims["dos"], seed=derive_seed(args.seed, "partition"))
            config = SessionConfig(
                num_owners=dims["dos"],
                kind=kind,
                lam=_lam_for(kind, args.lam),
                max_iterations=dims["iterations"],
                tolerance=0.0,
                key_bits=args.key_bits,
                seed=derive_seed(args.seed, f"cost-{kind}-{value}"),
                key_seed=derive_seed(args.seed, "keys"),
            )
            started = time.monotonic()
            result = run_session(config, shards)
            elapsed = round(time.monotonic() - started, 3)
            report = counters_report(result)
            n1 = report["num_coords"]
            expected = n1 * n1 + 3 * n1
            do_cts = report["parties"]["do-1"]["ciphertexts_sent"]
            ev_cts = report["parties"]["evaluator"]["ciphertexts_sent"]
            comparisons = report["messages"].get("ComparisonRequest", 0)
            rows.append([
                value, kind, report["sweeps"], do_cts, ev_cts, comparisons,
                report["parties"]["do-1"]["encryptions"],
                report["parties"]["evaluator"]["bytes_sent"],
                report["parties"]["csp"]["bytes_sent"],
                elapsed,
            ])
            if do_cts != expected:
                failures.append(
                    f"{kind} {args.axis}={value}: owner sent {do_cts} ciphertexts, "
                    f"expected {expected}"
                )
            if kind == "lasso" and comparisons != 2 * n1 * report["sweeps"]:
                failures.append(
                    f"lasso {args.axis}={value}: {comparisons} comparison requests, "
                    f"expected {2 * n1 * report['sweeps']}"
                )
        if args.axis == "samples" and len({row[3] for row in rows if row[1] == kind}) != 1:
            failures.append(f"{kind}: owner ciphertext count must not depend on sample count")
    return _finish(args, header, rows, failures)


# -- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedcd-bench",
        description="Accuracy, perturbation, and cost benchmarks for the "
                    "encrypted multiparty regression protocol.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, dataset=True):
        if dataset:
            p.add_argument("--dataset", default="diabetes",
                           help="fixture name (see data/fixtures.json) or CSV path")
            p.add_argument("--target-col", default=None,
                           help="target column when --dataset is a CSV path")
        p.add_argument("--kind", choices=KIND_CHOICES, default="all")
        p.add_argument("--dos", type=int, default=3, help="number of data owners")
        p.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
        p.add_argument("--key-bits", type=int, default=DEFAULT_KEY_BITS)
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--out", default=None, help="write the report as CSV here")

    p = sub.add_parser("accuracy", help="error of the federated model vs centralized baselines")
    common(p)
    p.add_argument("--iterations", type=int, default=1000)
    p.set_defaults(func=cmd_accuracy)

    p = sub.add_parser("convergence", help="error per training iteration")
    common(p)
    p.add_argument("--iterations", type=int, default=30)
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("sweep-xi", help="inference error under each multiplicative mask")
    common(p)
    p.add_argument("--iterations", type=int, default=50)
    p.add_argument("--xi-grid", default="1,1.02,1.04,1.06,1.08,1.10")
    p.set_defaults(func=cmd_sweep_xi)

    p = sub.add_parser("sweep-r", help="noisy vs denoised error under each additive mask")
    common(p)
    p.add_argument("--iterations", type=int, default=50)
    p.add_argument("--r-grid", default="0,0.5,1,1.5,2,2.5,3,3.5,4,4.5,5")
    p.set_defaults(func=cmd_sweep_r)

    p = sub.add_parser("sweep-cost", help="operation and byte counters across a scaling axis")
    common(p, dataset=False)
    p.add_argument("--axis", choices=("features", "samples", "dos", "iterations"),
                   default="features")
    p.add_argument("--grid", default="2,4,8,16")
    p.set_defaults(func=cmd_sweep_cost)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FedcdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

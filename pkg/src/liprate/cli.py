"""Command-line front end.

Subcommands:

* ``lc``          print the constant, the rate, and their ingredients for a dataset
* ``train``       one training run; writes metrics CSV + summary JSON
* ``compare``     paired fixed-vs-adaptive run (threshold or accuracy mode)
* ``bound-check`` verify the descent inequality and iteration bound on
                  random convex quadratics

Outputs go to --outdir (or $LIPRATE_OUTDIR, default ``.``).  Exit codes:
0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .data import Task, apply_scaling, estimate_k_bound, load_csv
from .errors import LiprateError
from .harness import (
    ExperimentConfig,
    run_accuracy_experiment,
    run_bound_check,
    run_threshold_experiment,
    train_model,
    prepare_run,
    summary_dict,
    write_metrics_csv,
    write_summary_json,
)
from .lipschitz import lc_binary, lc_linear_regression, lc_multiclass
from .optimizers import OptimizerKind


def _target(text: str):
    try:
        return int(text)
    except ValueError:
        return text


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="CSV file")
    p.add_argument("--task", required=True, choices=[t.value for t in Task])
    p.add_argument("--target", default="target", type=_target,
                   help="target column name or 0-based index (default: 'target')")
    p.add_argument("--no-header", dest="header", action="store_false",
                   help="the CSV has no header row")
    p.add_argument("--scale", default="none",
                   choices=["none", "sum_to_one", "center_max"])
    p.add_argument("--keep-degenerate", dest="drop_degenerate",
                   action="store_false",
                   help="keep zero-sum feature columns instead of dropping them")
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--hidden", type=int, nargs="*", default=[],
                   help="hidden-layer widths (default: none)")
    p.add_argument("--hidden-activation", default="relu",
                   choices=["relu", "sigmoid", "linear"])
    p.add_argument("--bias", dest="use_bias", action="store_true", default=False,
                   help="train bias terms (default off: the classical protocol)")
    p.add_argument("--init-scale", type=float, default=0.05)
    p.add_argument("--l2", type=float, default=0.0, help="L2 strength (0 = off)")


def _add_optimizer_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--optimizer", default="sgd",
                   choices=[k.value for k in OptimizerKind])
    p.add_argument("--lr-policy", default="adaptive", choices=["adaptive", "fixed"])
    p.add_argument("--alpha", type=float, default=0.1,
                   help="rate for the fixed policy / comparison arm")
    p.add_argument("--beta1", type=float, default=0.9)
    p.add_argument("--beta2", type=float, default=0.999)
    p.add_argument("--eps-stab", type=float, default=1e-8)
    p.add_argument("--bias-correction", action="store_true")
    p.add_argument("--first-epoch-lr", type=float, default=None,
                   help="fixed rate for epoch 1 (momentum default: 0.1 when adaptive)")
    p.add_argument("--fixed-k1", type=float, default=None)
    p.add_argument("--fixed-k2", type=float, default=None)


def _config_from_args(args) -> ExperimentConfig:
    first_epoch = args.first_epoch_lr
    if (
        first_epoch is None
        and args.optimizer == "adamo"
        and args.lr_policy == "adaptive"
    ):
        first_epoch = 0.1
    return ExperimentConfig(
        task=args.task,
        data_path=args.data,
        target=args.target,
        header=args.header,
        scaling=args.scale,
        drop_degenerate=args.drop_degenerate,
        hidden=tuple(args.hidden),
        hidden_activation=args.hidden_activation,
        use_bias=args.use_bias,
        init_scale=args.init_scale,
        optimizer=args.optimizer,
        lr_policy=args.lr_policy,
        alpha=args.alpha,
        loss_threshold=getattr(args, "tl", None),
        epochs=getattr(args, "epochs", None),
        max_epochs=getattr(args, "cap", None) or 10_000_000,
        batch_size=args.batch_size,
        seed=args.seed,
        split_fraction=getattr(args, "split", 0.0) or 0.0,
        reg_kind="l2" if args.l2 > 0 else "none",
        reg_lambda=args.l2,
        beta1=args.beta1,
        beta2=args.beta2,
        eps_stab=args.eps_stab,
        bias_correction=args.bias_correction,
        first_epoch_lr=first_epoch,
        fixed_k1=args.fixed_k1,
        fixed_k2=args.fixed_k2,
    )


def _outdir(args) -> Path:
    out = Path(args.outdir or os.environ.get("LIPRATE_OUTDIR", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_lc(args) -> int:
    ds = load_csv(args.data, args.task, args.target, header=args.header)
    if args.drop_degenerate:
        bad = ds.degenerate_columns()
        if bad:
            print(f"dropping degenerate columns: {list(bad)}")
            ds = ds.drop_columns(bad)
    ds = apply_scaling(ds, args.scale)
    m = args.batch_size or ds.m
    norm_x = float(np.linalg.norm(ds.X))
    if ds.task is Task.BINARY:
        est = lc_binary(norm_x, m)
    elif ds.task is Task.MULTICLASS:
        est = lc_multiclass(norm_x, ds.k, m)
    else:
        K = args.k_bound if args.k_bound is not None else estimate_k_bound(ds)
        est = lc_linear_regression(ds.X, ds.y, K, m)
    print(f"task           {ds.task.value}")
    print(f"rows x cols    {ds.m} x {ds.n}")
    print(f"batch size m   {m}")
    if ds.task is not Task.REGRESSION:
        print(f"classes k      {ds.k}")
    print(f"|X|            {norm_x!r}")
    if est.weight_bound is not None:
        print(f"K              {est.weight_bound!r}")
    print(f"L              {est.lipschitz!r}")
    print(f"alpha = 1/L    {est.lr!r}")
    return 0


def cmd_train(args) -> int:
    cfg = _config_from_args(args)
    train, val, params = prepare_run(cfg)
    report = train_model(cfg, train, val, params, lr_label=cfg.lr_policy)
    out = _outdir(args)
    stem = f"train_{Path(args.data).stem}_{cfg.lr_policy}_seed{cfg.seed}"
    write_metrics_csv(report, out / f"{stem}.csv")
    write_summary_json(cfg, report, out / f"{stem}.json")
    print(f"epochs run          {report.epochs_run}")
    if cfg.loss_threshold is not None:
        print(f"epochs to threshold {report.epochs_to_threshold}"
              + (" (censored)" if report.censored else ""))
    print(f"final loss          {report.final_loss:.6g}")
    if report.final_train_acc is not None:
        print(f"final train acc     {report.final_train_acc:.4f}")
    if report.final_val_acc is not None:
        print(f"final val acc       {report.final_val_acc:.4f}")
    print(f"wrote {out / (stem + '.csv')}")
    return 0


def cmd_compare(args) -> int:
    cfg = _config_from_args(args)
    out = _outdir(args)
    if args.mode == "threshold":
        if cfg.loss_threshold is None:
            print("compare --mode threshold needs --tl", file=sys.stderr)
            return 2
        paired = run_threshold_experiment(
            cfg, fixed_cap=args.fixed_cap, adaptive_cap=args.adaptive_cap
        )
        ea, ef = paired.adaptive.epochs_to_threshold, paired.fixed.epochs_to_threshold
        print(f"adaptive epochs to threshold {ea}"
              + (" (censored)" if paired.adaptive.censored else ""))
        print(f"fixed    epochs to threshold {ef}"
              + (" (censored)" if paired.fixed.censored else ""))
        sp = paired.speedup()
        if sp is not None:
            print(f"speedup  {'>= ' if paired.fixed.censored else ''}{sp:.1f}x")
    else:
        if cfg.epochs is None:
            print("compare --mode accuracy needs --epochs", file=sys.stderr)
            return 2
        paired = run_accuracy_experiment(cfg)
        print(f"adaptive val acc {paired.adaptive.final_val_acc:.4f}")
        print(f"fixed    val acc {paired.fixed.final_val_acc:.4f}")
    stem = f"compare_{args.mode}_{Path(args.data).stem}_seed{cfg.seed}"
    for label, rep in (("adaptive", paired.adaptive), ("fixed", paired.fixed)):
        write_metrics_csv(rep, out / f"{stem}_{label}.csv")
        write_summary_json(cfg, rep, out / f"{stem}_{label}.json")
    print(f"wrote {out / stem}_{{adaptive,fixed}}.{{csv,json}}")
    return 0


def cmd_bound_check(args) -> int:
    result = run_bound_check(args.quadratics, args.seed)
    print(json.dumps(result, indent=2))
    if args.outdir or os.environ.get("LIPRATE_OUTDIR"):
        out = _outdir(args)
        with open(out / f"bound_check_seed{args.seed}.json", "w", encoding="utf-8") as fh:
            json.dump(result, fh, indent=2)
    return 0 if result["all_ok"] else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="liprate",
        description="Learning rates from analytic Lipschitz constants",
    )
    ap.add_argument("--outdir", default=None,
                    help="output directory (default: $LIPRATE_OUTDIR or '.')")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lc", help="print the constant for a dataset")
    _add_data_args(p)
    p.add_argument("--k-bound", type=float, default=None,
                   help="weight bound K for regression (default: estimate)")
    p.set_defaults(func=cmd_lc)

    p = sub.add_parser("train", help="single training run")
    _add_data_args(p)
    _add_model_args(p)
    _add_optimizer_args(p)
    p.add_argument("--tl", type=float, default=None, help="loss threshold")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--cap", type=int, default=None, help="hard epoch cap")
    p.add_argument("--split", type=float, default=0.0,
                   help="validation fraction (default 0)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("compare", help="fixed vs adaptive paired runs")
    _add_data_args(p)
    _add_model_args(p)
    _add_optimizer_args(p)
    p.add_argument("--mode", required=True, choices=["threshold", "accuracy"])
    p.add_argument("--tl", type=float, default=None, help="loss threshold")
    p.add_argument("--epochs", type=int, default=None, help="epoch budget")
    p.add_argument("--split", type=float, default=0.3,
                   help="validation fraction for accuracy mode (default 0.3)")
    p.add_argument("--fixed-cap", type=int, default=None)
    p.add_argument("--adaptive-cap", type=int, default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bound-check", help="quadratic-suite verification")
    p.add_argument("--quadratics", type=int, default=100)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_bound_check)

    return ap


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        return args.func(args)
    except LiprateError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()

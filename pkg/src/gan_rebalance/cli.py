"""Command-line entry point: ``gan-rebalance {pipeline,matrix,synth,gradcheck}``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import RunConfig, load_config
from .dataset import write_csv
from .errors import ConfigError, DataError, TrainingError
from .gan import GanConfig, generator_grad_check, init_gan
from .nn import ACTIVATIONS, build_mlp, grad_check
from .pipeline import run_matrix, run_pipeline
from .rng import Rng

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DATA, EXIT_TRAINING = 0, 1, 2, 3, 4

log = logging.getLogger("gan_rebalance")


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig().validate()
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def cmd_pipeline(args):
    result = run_pipeline(_config(args), args.out)
    r = result.report
    print(f"{r.method:6s} {r.classifier:7s} acc={r.accuracy:.4f} f1={r.f1:.4f} "
          f"precision={r.precision:.4f} recall={r.recall:.4f}")
    print(f"wrote {Path(args.out) / 'report.json'}")
    return EXIT_OK


def cmd_matrix(args):
    cfg = _config(args)
    methods = args.methods.split(",") if args.methods else None
    seeds = [int(s) for s in args.seeds.split(",")] if args.seeds else None
    _, table, failures = run_matrix(cfg, methods, seeds, args.out, jobs=args.jobs)
    print(f"{'method':8s} {'n':>3s} {'acc_mean':>9s} {'acc_med':>8s} {'f1_mean':>8s} "
          f"{'f1_med':>8s}")
    for row in table:
        print(f"{row['method']:8s} {row['n_ok']:3d} {row['acc_mean']:9.4f} "
              f"{row['acc_median']:8.4f} {row['f1_mean']:8.4f} {row['f1_median']:8.4f}")
    print(f"wrote {Path(args.out) / 'summary.csv'} and table.csv")
    if failures:
        print(f"{len(failures)} cell(s) failed; see failures.csv", file=sys.stderr)
        return EXIT_TRAINING
    return EXIT_OK


def cmd_synth(args):
    from .pipeline import load_data
    cfg = _config(args)
    if cfg.synth is None:
        raise ConfigError("synth needs a synthetic data source (no data.csv)")
    train, test = load_data(cfg.resolved())
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(train, out / "train.csv")
    write_csv(test, out / "test.csv")
    print(f"train: {len(train)} rows ({train.n_minority} minority); "
          f"test: {len(test)} rows ({test.n_minority} minority) -> {out}")
    return EXIT_OK


def random_small_net(rng: Rng):
    n_layers = 1 + int(rng.integers(3, 1)[0])
    widths = [1 + int(w) for w in rng.integers(16, n_layers + 1)]
    acts = [ACTIVATIONS[int(i)] for i in rng.integers(len(ACTIVATIONS), n_layers)]
    net = build_mlp(widths, "tanh", "identity", rng)
    for layer, act in zip(net.layers, acts):
        layer.activation = act
        layer.bias[:] = 0.1 * rng.normal(layer.bias.size)
    return net


def gradcheck_suite(n_nets=50, seed=0, batch=4):
    """Max errors over random small MLPs and the composite generator path."""
    rng = Rng(seed)
    worst = 0.0
    for i in range(n_nets):
        net = random_small_net(rng)
        x = rng.normal(batch * net.input_dim).reshape(batch, net.input_dim)
        kind = "bce" if net.layers[-1].activation == "sigmoid" else "squared"
        if kind == "squared":
            targets = rng.normal(batch * net.output_dim).reshape(batch, net.output_dim)
        else:
            targets = None
        worst = max(worst, grad_check(net, x, kind, targets))
    cfg = GanConfig(noise_dim=3, g_hidden=[5], d_hidden=[4], seed=seed)
    model = init_gan(2, cfg)
    z = rng.normal(batch * cfg.noise_dim).reshape(batch, cfg.noise_dim)
    return worst, generator_grad_check(model, z)


def cmd_gradcheck(args):
    mlp_err, gen_err = gradcheck_suite(args.nets, args.seed if args.seed is not None else 0)
    ok = mlp_err < args.tol and gen_err < args.tol
    print(f"mlp max relative error:       {mlp_err:.3e}")
    print(f"generator path relative error: {gen_err:.3e}")
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_FAIL


def build_parser():
    parser = argparse.ArgumentParser(prog="gan-rebalance",
                                     description="Class-imbalance remedies and evaluation.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--out", default=out_default, help="output directory")
        p.add_argument("--seed", type=int, help="overrides the config seed")

    p = sub.add_parser("pipeline", help="run one augment/train/evaluate experiment")
    common(p, "runs/pipeline")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("matrix", help="methods x seeds comparison table")
    common(p, "runs/matrix")
    p.add_argument("--methods", help="comma-separated, default from config")
    p.add_argument("--seeds", help="comma-separated, default from config")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_matrix)

    p = sub.add_parser("synth", help="write the synthetic benchmark as CSV")
    common(p, "runs/synth")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("gradcheck", help="backprop vs finite differences")
    p.add_argument("--nets", type=int, default=50)
    p.add_argument("--seed", type=int)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TrainingError as exc:
        print(f"training error: {exc}", file=sys.stderr)
        return EXIT_TRAINING


if __name__ == "__main__":
    sys.exit(main())

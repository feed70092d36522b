"""Command-line interface.

Verbs mirror the workflow order:

    chanest generate      simulate training/test/statistics datasets
    chanest train-ae      fit the autoencoder on 2-channel inputs
    chanest enhance       write 3-channel datasets via the autoencoder
    chanest train         fit one estimator model
    chanest eval-snr      MSE vs SNR table (CSV + SVG)
    chanest eval-doppler  MSE vs Doppler table (CSV + SVG)
    chanest report        parameter/MAC complexity table

Every verb takes --config/--seed/--profile/--workers; flags override
file values, and each run writes its resolved configuration to the
output directory.
"""

import argparse
import sys

from . import pipeline
from .config import default_config, load_config, render_config
from .errors import ConfigError


def _build_parser():
    epilog = (
        "configuration file keys and their desk-profile defaults:\n\n"
        + render_config(default_config("desk"))
    )
    parser = argparse.ArgumentParser(
        prog="chanest",
        description="OFDM channel-estimation workbench",
        epilog=epilog,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="INI config file (defaults to the chosen profile)")
    common.add_argument("--seed", type=int, metavar="N",
                        help="override the master seed")
    common.add_argument("--profile", choices=("desk", "full"),
                        help="named scale profile (default desk)")
    common.add_argument("--workers", type=int, metavar="N",
                        help="simulation worker processes (1 = bit-reproducible)")
    common.add_argument("--out", metavar="DIR",
                        help="override the output directory")

    sub = parser.add_subparsers(dest="command", required=True, metavar="VERB")

    sub.add_parser("generate", parents=[common],
                   help="simulate and write datasets")

    p = sub.add_parser("train-ae", parents=[common],
                       help="train the input-enhancement autoencoder")
    p.add_argument("--mode", choices=("pilot", "full"), required=True,
                   help="grid geometry the autoencoder consumes")

    p = sub.add_parser("enhance", parents=[common],
                       help="write 3-channel datasets from trained autoencoder")
    p.add_argument("--mode", choices=("pilot", "full"), required=True)

    p = sub.add_parser("train", parents=[common], help="train one estimator")
    p.add_argument("--model", required=True, metavar="ID",
                   help="zoo id, e.g. srcnn or reesnet-12f-enhanced")
    p.add_argument("--train-seed", type=int, metavar="N",
                   help="optimizer/shuffle seed (default derived from master)")
    p.add_argument("--tag", default="", metavar="TAG",
                   help="suffix for the weight file (repeated-seed studies)")

    for verb, help_text in (("eval-snr", "evaluate MSE vs SNR"),
                            ("eval-doppler", "evaluate MSE vs Doppler")):
        p = sub.add_parser(verb, parents=[common], help=help_text)
        p.add_argument("--models", default="", metavar="IDS",
                       help="comma-separated zoo ids (classical ls/mmse always run)")
        p.add_argument("--tag", default="", metavar="TAG",
                       help="weight-file suffix to evaluate")
        p.add_argument("--no-chart", action="store_true",
                       help="skip the SVG rendering")

    p = sub.add_parser("report", parents=[common],
                       help="parameter/MAC complexity table")
    p.add_argument("--models", default="", metavar="IDS",
                   help="comma-separated zoo ids (default: whole catalog)")
    return parser


def _resolve_config(args):
    if args.config:
        config = load_config(args.config, profile=args.profile)
    else:
        config = default_config(args.profile or "desk")
    if args.seed is not None:
        config.master_seed = args.seed
    if args.workers is not None:
        config.workers = args.workers
    if args.out:
        config.out_dir = args.out
    return config.validate()


def _model_list(text):
    return [m.strip() for m in text.split(",") if m.strip()]


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        config = _resolve_config(args)
        if args.command == "generate":
            man = pipeline.generate(config)
            print(f"wrote {len(man.files)} dataset files under {config.out_dir}")
        elif args.command == "train-ae":
            wpath, result = pipeline.train_ae(config, args.mode)
            print(f"wrote {wpath} (best epoch {result.best_epoch}, "
                  f"val loss {result.best_val_loss:.6g})")
        elif args.command == "enhance":
            man = pipeline.enhance(config, args.mode)
            print(f"wrote {len(man.files)} enhanced datasets "
                  f"(fingerprint {man.ae_fingerprint[:12]}…)")
        elif args.command == "train":
            wpath, result = pipeline.train_estimator(
                config, args.model, train_seed=args.train_seed, tag=args.tag)
            print(f"wrote {wpath} (best epoch {result.best_epoch}, "
                  f"val loss {result.best_val_loss:.6g})")
        elif args.command == "eval-snr":
            csv_path, rows = pipeline.eval_snr(
                config, _model_list(args.models), weight_tag=args.tag,
                with_chart=not args.no_chart)
            print(f"wrote {csv_path} ({len(rows)} rows)")
        elif args.command == "eval-doppler":
            csv_path, rows = pipeline.eval_doppler(
                config, _model_list(args.models), weight_tag=args.tag,
                with_chart=not args.no_chart)
            print(f"wrote {csv_path} ({len(rows)} rows)")
        elif args.command == "report":
            csv_path, rows = pipeline.complexity_report(
                config, _model_list(args.models) or None)
            _print_report(rows)
            if csv_path:
                print(f"\nwrote {csv_path}")
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def _print_report(rows):
    header = f"{'model':<28}{'params':>10}{'published':>11}{'delta':>9}" \
             f"{'ok':>4}{'MACs/frame':>14}  input"
    print(header)
    print("-" * len(header))
    for r in rows:
        delta = f"{r['delta_pct']:+.2f}%" if r["published"] else "n/a"
        ok = "yes" if r["within"] else "NO"
        print(f"{r['model']:<28}{r['params']:>10,}{r['published'] or 0:>11,}"
              f"{delta:>9}{ok:>4}{r['macs']:>14,}  {r['input_dims']}")


if __name__ == "__main__":
    sys.exit(main())

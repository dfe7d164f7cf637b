"""Command-line entry point.

Subcommands: train, stylize, stylize-video, eval-consistency, make-pairs.
Exit codes are a stable contract for scripts: 0 success, 1 usage error,
2 I/O error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from .errors import NumericError, WeightFormatError
from .imageio import ImageFormatError, load_image, save_image
from .network import load_checkpoint, save_checkpoint
from .pipeline import stylize_array
from .styleops import STYLE_OPERATORS, apply_style_operator
from .trainer import PairDataset, TrainConfig, load_config, train, write_history_csv
from .video import FrameSequence, interframe_mse, stylize_sequence, write_mse_csv

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; the documented usage code is 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    p = _Parser(prog="gradstyle",
                description="Gradient-domain image stylization")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a stylization network on image pairs")
    t.add_argument("--inputs-dir", required=True, help="directory of input images")
    t.add_argument("--styles-dir", required=True,
                   help="directory of same-named stylized references")
    t.add_argument("--out-weights", required=True, help="where to write the final weights")
    t.add_argument("--config", default="", help="key=value config file")
    t.add_argument("--seed", type=int, default=None)
    t.add_argument("--alpha", type=float, default=None)
    t.add_argument("--beta", type=float, default=None)
    t.add_argument("--vgg", default=None, help="VGG trunk weights (needed when beta > 0)")
    t.add_argument("--patch", type=int, default=None)
    t.add_argument("--batch", type=int, default=None)
    t.add_argument("--iters1", type=int, default=None)
    t.add_argument("--iters2", type=int, default=None)
    t.add_argument("--lr1", type=float, default=None)
    t.add_argument("--lr2", type=float, default=None)
    t.add_argument("--loss-csv", default=None)
    t.add_argument("--checkpoint-dir", default=None)
    t.add_argument("--checkpoint-interval", type=int, default=None)
    t.add_argument("--resume", default="", help="checkpoint to resume from")

    s = sub.add_parser("stylize", help="stylize a single image")
    s.add_argument("--weights", required=True)
    s.add_argument("--input", required=True)
    s.add_argument("--output", required=True)
    s.add_argument("--lambda", dest="lam", type=float, default=10.0)
    s.add_argument("--solver", choices=("cg", "dense"), default="cg")
    s.add_argument("--cg-tol", type=float, default=1e-8)

    v = sub.add_parser("stylize-video", help="stylize a directory of numbered frames")
    v.add_argument("--weights", required=True)
    v.add_argument("--frames-dir", required=True)
    v.add_argument("--output-dir", required=True)
    v.add_argument("--lambda", dest="lam", type=float, default=10.0)
    v.add_argument("--solver", choices=("cg", "dense"), default="cg")
    v.add_argument("--cg-tol", type=float, default=1e-8)

    e = sub.add_parser("eval-consistency", help="consecutive-frame MSE of a sequence")
    e.add_argument("--frames-dir", required=True)
    e.add_argument("--output", default="", help="CSV path; stdout when omitted")

    m = sub.add_parser("make-pairs", help="generate synthetic training pairs")
    m.add_argument("--input-dir", required=True)
    m.add_argument("--operator", required=True,
                   help="one of: " + ", ".join(sorted(STYLE_OPERATORS)))
    m.add_argument("--output-dir", required=True)
    return p


def _cmd_train(args) -> int:
    overrides = {
        "seed": args.seed, "alpha": args.alpha, "beta": args.beta,
        "vgg_path": args.vgg, "patch_size": args.patch, "batch_size": args.batch,
        "iters_stage1": args.iters1, "iters_stage2": args.iters2,
        "lr_stage1": args.lr1, "lr_stage2": args.lr2,
        "loss_csv": args.loss_csv, "checkpoint_dir": args.checkpoint_dir,
        "checkpoint_interval": args.checkpoint_interval,
    }
    if args.config:
        cfg = load_config(args.config, overrides)
    else:
        cfg = TrainConfig(**{k: v for k, v in overrides.items() if v is not None})
    ds = PairDataset.from_dirs(args.inputs_dir, args.styles_dir)
    net, history = train(ds, cfg, resume_from=args.resume)
    save_checkpoint(net, args.out_weights, iteration=cfg.total_iters)
    if history:
        print(f"trained {len(history)} iterations; "
              f"final total loss {history[-1][1]:.6g}")
    print(f"weights written to {args.out_weights}")
    return EXIT_OK


def _cmd_stylize(args) -> int:
    net, _ = load_checkpoint(args.weights)
    img = load_image(args.input)
    t0 = time.perf_counter()
    out = stylize_array(net, img, lam=args.lam, solver=args.solver, cg_tol=args.cg_tol)
    elapsed = time.perf_counter() - t0
    save_image(args.output, out)
    print(f"stylized {img.shape[2]}x{img.shape[1]} in {elapsed:.3f} s "
          f"-> {args.output}")
    return EXIT_OK


def _cmd_stylize_video(args) -> int:
    net, _ = load_checkpoint(args.weights)
    seq = FrameSequence.from_dir(args.frames_dir)
    t0 = time.perf_counter()
    out = stylize_sequence(net, seq, lam=args.lam, solver=args.solver, cg_tol=args.cg_tol)
    elapsed = time.perf_counter() - t0
    out.to_dir(args.output_dir)
    print(f"stylized {len(seq)} frames in {elapsed:.3f} s -> {args.output_dir}")
    return EXIT_OK


def _cmd_eval_consistency(args) -> int:
    seq = FrameSequence.from_dir(args.frames_dir)
    values = interframe_mse(seq)
    if args.output:
        write_mse_csv(args.output, values)
        print(f"wrote {len(values)} rows to {args.output}")
    else:
        print("frame_index,mse")
        for k, v in enumerate(values):
            print(f"{k},{v:.9g}")
    return EXIT_OK


def _cmd_make_pairs(args) -> int:
    names = sorted(n for n in os.listdir(args.input_dir)
                   if n.lower().endswith((".png", ".ppm", ".bmp")))
    if not names:
        raise FileNotFoundError(f"no images in {args.input_dir}")
    in_dir = os.path.join(args.output_dir, "input")
    style_dir = os.path.join(args.output_dir, "style")
    os.makedirs(in_dir, exist_ok=True)
    os.makedirs(style_dir, exist_ok=True)
    for name in names:
        img = load_image(os.path.join(args.input_dir, name))
        ref = apply_style_operator(args.operator, img)
        save_image(os.path.join(in_dir, name), img)
        save_image(os.path.join(style_dir, name), ref)
    print(f"wrote {len(names)} pairs under {args.output_dir}")
    return EXIT_OK


_COMMANDS = {
    "train": _cmd_train,
    "stylize": _cmd_stylize,
    "stylize-video": _cmd_stylize_video,
    "eval-consistency": _cmd_eval_consistency,
    "make-pairs": _cmd_make_pairs,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    limiter = None
    threads = os.environ.get("GRADSTYLE_THREADS", "")
    if threads:
        try:
            n = int(threads)
        except ValueError:
            print(f"gradstyle: GRADSTYLE_THREADS must be an integer, got '{threads}'",
                  file=sys.stderr)
            return EXIT_USAGE
        from threadpoolctl import threadpool_limits
        limiter = threadpool_limits(limits=max(1, n))
    try:
        return _COMMANDS[args.command](args)
    except (FileNotFoundError, IsADirectoryError, PermissionError,
            WeightFormatError, ImageFormatError) as e:
        print(f"gradstyle: {e}", file=sys.stderr)
        return EXIT_IO
    except NumericError as e:
        print(f"gradstyle: numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError) as e:
        print(f"gradstyle: {e}", file=sys.stderr)
        return EXIT_USAGE
    finally:
        if limiter is not None:
            limiter.unregister()


if __name__ == "__main__":
    sys.exit(main())

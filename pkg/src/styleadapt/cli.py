"""Command-line surface: dataset generation, the two training phases,
evaluation, one-off translation, the gradient-check suite and the ablation
harness.

Every run prints the fully resolved configuration, and every CSV artifact
starts with the same configuration as '#' comment lines, so results stay
re-derivable. Exit codes: 0 success, 1 usage, 2 validation failure,
3 numeric failure.
"""

import argparse
import os
import sys
import time

from .checkpoint import (CheckpointError, load_segnet, load_styler,
                         save_segnet, save_styler)
from .config import Config, ConfigError, load_config, serialize_config
from .gradcheck import run_suite
from .images import psnr
from .metrics import ConfusionMatrix, iou_report_csv
from .optim import Adam
from .rng import RngStream
from .styler import build_styler, generate, pretrain_autoencoder, train_styler
from .tensor import NumericsError
from .toydata import (NUM_CLASSES, NetpbmError, class_priors, load_domain,
                      make_dataset, read_ppm, write_ppm)
from .trainer import evaluate_miou, make_trainer_state, train_loop

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _config_from_args(args):
    cfg = load_config(args.config) if getattr(args, "config", None) else Config().validate()
    if getattr(args, "data", None):
        cfg.data_root = args.data
    if getattr(args, "styler", None):
        cfg.styler_checkpoint = args.styler
    if getattr(args, "out", None) and args.cmd in ("train", "ablate"):
        cfg.out_dir = args.out
    if getattr(args, "seed", None) is not None:
        cfg.data_seed = cfg.styler_seed = cfg.train_seed = args.seed
    if getattr(args, "steps", None) is not None:
        if args.cmd == "train-styler":
            cfg.styler_steps = args.steps
        else:
            cfg.steps = args.steps
    if getattr(args, "ae_steps", None) is not None:
        cfg.styler_ae_steps = args.ae_steps
    return cfg.validate()


def _config_preamble(cfg):
    return "".join(f"# {line}\n" for line in serialize_config(cfg).splitlines())


def _write_atomic(path, text):
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as f:
        f.write(text)
    os.replace(tmp, path)


def _print_config(cfg):
    print(serialize_config(cfg), end="")


def _load_splits(cfg, *names):
    return [load_domain(os.path.join(cfg.data_root, n), cfg.num_classes) for n in names]


# -- subcommands ----------------------------------------------------------------


def _cmd_datagen(args):
    cfg = _config_from_args(args)
    _print_config(cfg)
    splits = make_dataset(cfg.data_root, cfg.data_seed, cfg.train_count,
                          cfg.val_count, cfg.image_size, cfg.image_size)
    lines = [_config_preamble(cfg)]
    for name, path in splits.items():
        lines.append(f"{name} = {path}\n")
        print(f"wrote {name} -> {path}")
    _write_atomic(os.path.join(cfg.data_root, "manifest.txt"), "".join(lines))
    return EXIT_OK


def _cmd_train_styler(args):
    cfg = _config_from_args(args)
    _print_config(cfg)
    source_train, target_train = _load_splits(cfg, "synthA_train", "realB_train")
    pool = [s.image for s in source_train] + [t.image for t in target_train]

    net = build_styler(cfg.styler_seed, epsilon=cfg.epsilon)
    t0 = time.time()
    ae_opt = Adam(net.all_params(), lr=cfg.styler_lr, weight_decay=0.0)
    ae_records = pretrain_autoencoder(pool, net, ae_opt, cfg.styler_ae_steps,
                                      crop=cfg.crop,
                                      rng=RngStream("styler.pretrain", cfg.styler_seed))
    net.freeze_encoder()
    style_opt = Adam(net.decoder, lr=cfg.styler_lr, weight_decay=0.0)
    records = train_styler(pool, net, style_opt, cfg.styler_steps, crop=cfg.crop,
                           style_weight=cfg.style_weight,
                           rng=RngStream("styler.train", cfg.styler_seed))

    os.makedirs(os.path.dirname(cfg.styler_checkpoint) or ".", exist_ok=True)
    save_styler(cfg.styler_checkpoint, net)
    rows = ["phase,step,loss"]
    rows += [f"autoencoder,{r['step']},{r['loss']:.6f}" for r in ae_records]
    rows += [f"style,{r['step']},{r['loss']:.6f}" for r in records]
    _write_atomic(f"{cfg.styler_checkpoint}.loss.csv",
                  _config_preamble(cfg) + "\n".join(rows) + "\n")
    print(f"trained styler in {time.time() - t0:.1f}s -> {cfg.styler_checkpoint}")
    return EXIT_OK


def _cmd_train(args):
    cfg = _config_from_args(args)
    _print_config(cfg)
    source_train, target_train, target_val = _load_splits(
        cfg, "synthA_train", "realB_train", "realB_val")
    styler = load_styler(cfg.styler_checkpoint, epsilon=cfg.epsilon)
    priors = class_priors(source_train, cfg.num_classes)
    state = make_trainer_state(
        cfg.num_classes, styler, priors, cfg.hyperparams(), cfg.train_seed,
        opt_kind=cfg.optimizer, lr=cfg.lr, momentum=cfg.momentum, beta2=cfg.beta2,
        weight_decay=cfg.weight_decay, crop=cfg.crop, jitter=cfg.jitter_spec())

    os.makedirs(cfg.out_dir, exist_ok=True)
    t0 = time.time()
    history = train_loop(source_train, target_train, state, cfg.steps,
                         cfg.eval_every, target_val,
                         checkpoint_path=os.path.join(cfg.out_dir, "best_teacher.bsd"))
    elapsed = time.time() - t0

    header = "step,loss_s,loss_u,mask_frac,miou_student,miou_teacher"
    rows = [f"{r.step},{r.loss_s:.6f},{r.loss_u:.6f},{r.mask_frac:.6f},"
            f"{r.miou_student:.6f},{r.miou_teacher:.6f}" for r in history]
    _write_atomic(os.path.join(cfg.out_dir, "metrics.csv"),
                  _config_preamble(cfg) + header + "\n" + "".join(f"{r}\n" for r in rows))
    save_segnet(os.path.join(cfg.out_dir, "final_student.bsd"), state.pair.student)
    save_segnet(os.path.join(cfg.out_dir, "final_teacher.bsd"), state.pair.teacher)
    for r in history:
        print(f"step {r.step}: loss_s {r.loss_s:.4f} loss_u {r.loss_u:.4f} "
              f"mask {r.mask_frac:.3f} miou_s {r.miou_student:.4f} miou_t {r.miou_teacher:.4f}")
    print(f"trained {cfg.steps} steps in {elapsed:.1f}s -> {cfg.out_dir}")
    return EXIT_OK


def _cmd_eval(args):
    cfg = _config_from_args(args)
    net = load_segnet(args.checkpoint)
    scenes = load_domain(args.data_dir, net.num_classes)
    cm = ConfusionMatrix(net.num_classes)
    for scene in scenes:
        pred = net.forward(scene.image).data[0].argmax(axis=0)
        cm.accumulate(pred, scene.label)
    report = iou_report_csv(cm)
    if args.out:
        _write_atomic(args.out, _config_preamble(cfg) + report)
    print(report, end="")
    return EXIT_OK


def _cmd_translate(args):
    cfg = _config_from_args(args)
    _print_config(cfg)
    content = read_ppm(args.content)
    style = read_ppm(args.style)
    styler = load_styler(cfg.styler_checkpoint, epsilon=cfg.epsilon)
    out = generate(content, style, args.alpha, styler)
    write_ppm(args.out, out)
    print(f"wrote {args.out} (alpha {args.alpha}, psnr vs content "
          f"{psnr(out, content):.2f} dB)")
    return EXIT_OK


def _cmd_gradcheck(args):
    t0 = time.time()
    reports = run_suite(seeds=range(args.seeds), tolerance=args.tolerance)
    failed = [r for r in reports if not r.passed]
    for r in reports:
        print(r)
    print(f"checked {len(reports)} ops x {args.seeds} seeds in {time.time() - t0:.1f}s")
    if failed:
        print(f"error: gradcheck: {len(failed)} op(s) failed", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


_TOGGLE_ROWS = [  # (s2t, t2s, pseudo_label, self_ensemble)
    (False, False, False, False),
    (True, False, False, False),
    (False, True, False, False),
    (True, True, False, False),
    (True, True, True, False),
    (True, True, False, True),
    (True, True, True, True),
]

LAMBDA_U_SWEEP = (0.1, 0.5, 1.0, 5.0, 10.0)
K_SWEEP = (1, 2, 4, 6, 8)


def _ablate_cells(axis, base):
    cells = []
    if axis == "lambda_u":
        for v in LAMBDA_U_SWEEP:
            cfg = Config(**{**base.__dict__, "lambda_u": v}).validate()
            cells.append((f"lambda_u={v}", {"lambda_u": v}, cfg))
    elif axis == "k":
        for v in K_SWEEP:
            cfg = Config(**{**base.__dict__, "k": v}).validate()
            cells.append((f"k={v}", {"k": v}, cfg))
    elif axis == "toggles":
        for s2t, t2s, pl, se in _TOGGLE_ROWS:
            cfg = Config(**{**base.__dict__, "s2t": s2t, "t2s": t2s,
                            "pseudo_label": pl, "self_ensemble": se}).validate()
            label = f"s2t={int(s2t)},t2s={int(t2s)},pl={int(pl)},se={int(se)}"
            cells.append((label, {"s2t": s2t, "t2s": t2s,
                                  "pseudo_label": pl, "self_ensemble": se}, cfg))
    else:
        raise ConfigError(f"unknown ablation axis {axis!r}")
    return cells


def _cmd_ablate(args):
    base = _config_from_args(args)
    _print_config(base)
    source_train, target_train, target_val = _load_splits(
        base, "synthA_train", "realB_train", "realB_val")
    styler = load_styler(base.styler_checkpoint, epsilon=base.epsilon)
    priors = class_priors(source_train, base.num_classes)

    os.makedirs(base.out_dir, exist_ok=True)
    rows = ["cell,miou_student,miou_teacher"]
    for label, _, cfg in _ablate_cells(args.axis, base):
        state = make_trainer_state(
            cfg.num_classes, styler, priors, cfg.hyperparams(), cfg.train_seed,
            opt_kind=cfg.optimizer, lr=cfg.lr, momentum=cfg.momentum,
            beta2=cfg.beta2, weight_decay=cfg.weight_decay, crop=cfg.crop,
            jitter=cfg.jitter_spec())
        train_loop(source_train, target_train, state, cfg.steps,
                   max(cfg.steps, 1), target_val)
        miou_s = evaluate_miou(state.pair.student, target_val)
        miou_t = evaluate_miou(state.pair.teacher, target_val)
        rows.append(f"{label},{miou_s:.6f},{miou_t:.6f}")
        print(rows[-1])
    out_path = os.path.join(base.out_dir, f"ablate_{args.axis}.csv")
    _write_atomic(out_path, _config_preamble(base) + "\n".join(rows) + "\n")
    print(f"wrote {out_path}")
    return EXIT_OK


# -- dispatch -------------------------------------------------------------------


def _build_parser():
    parser = _Parser(prog="styleadapt",
                     description="Two-domain style-driven adaptation toolkit")
    sub = parser.add_subparsers(dest="cmd")

    def common(p, steps=True):
        p.add_argument("--config", help="config file (defaults apply when omitted)")
        p.add_argument("--data", help="dataset root override")
        p.add_argument("--seed", type=int, help="seed override for every phase")
        if steps:
            p.add_argument("--steps", type=int, help="step-count override")

    p = sub.add_parser("datagen", help="generate the two-domain benchmark")
    common(p, steps=False)

    p = sub.add_parser("train-styler", help="train the translation network")
    common(p)
    p.add_argument("--ae-steps", type=int, dest="ae_steps",
                   help="autoencoder warm-up step override")
    p.add_argument("--styler", help="checkpoint path override")

    p = sub.add_parser("train", help="run the adaptation training loop")
    common(p)
    p.add_argument("--styler", help="styler checkpoint override")
    p.add_argument("--out", help="output directory override")

    p = sub.add_parser("eval", help="score a checkpoint on a labeled directory")
    p.add_argument("--config", help="config file (for the report preamble)")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data-dir", required=True, dest="data_dir")
    p.add_argument("--out", help="write the report CSV here as well")

    p = sub.add_parser("translate", help="restyle one image with another")
    p.add_argument("--config", help="config file")
    p.add_argument("--content", required=True)
    p.add_argument("--style", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--styler", help="styler checkpoint override")
    p.add_argument("--out", required=True)

    p = sub.add_parser("gradcheck", help="finite-difference check of every op")
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--tolerance", type=float, default=1e-5)

    p = sub.add_parser("ablate", help="sweep one experiment axis")
    common(p)
    p.add_argument("--axis", required=True, choices=("toggles", "lambda_u", "k"))
    p.add_argument("--styler", help="styler checkpoint override")
    p.add_argument("--out", help="output directory override")
    return parser


_HANDLERS = {
    "datagen": _cmd_datagen,
    "train-styler": _cmd_train_styler,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "translate": _cmd_translate,
    "gradcheck": _cmd_gradcheck,
    "ablate": _cmd_ablate,
}


def run_command(argv):
    """Execute one CLI invocation; returns the process exit status."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.cmd is None:
            parser.print_usage(sys.stderr)
            print("error: usage: a subcommand is required", file=sys.stderr)
            return EXIT_USAGE
        return _HANDLERS[args.cmd](args)
    except _UsageError as e:
        print(f"error: usage: {e}", file=sys.stderr)
        return EXIT_USAGE
    except NumericsError as e:
        print(f"error: numeric: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, CheckpointError, NetpbmError, FileNotFoundError,
            ValueError, OSError) as e:
        print(f"error: validation: {e}", file=sys.stderr)
        return EXIT_VALIDATION


def main():
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()

"""glyphcycle command line: ingest, train, generate, evaluate, grid.

Exit codes: 0 success, 1 runtime failure, 2 invalid input or configuration.
"""

from __future__ import annotations

import argparse
import logging
import os
import re
import sys
from collections import Counter

import numpy as np

from . import config as config_mod
from .autodiff.tensor import Tensor, no_grad
from .checkpoint import load_checkpoint, save_checkpoint
from .data.dataset import Item, read_manifest, sample_name, scan_style_dir, write_style_dir
from .data.pgm import encode_pgm_bytes, to_bytes, to_unit
from .data.preprocess import preprocess_calligraphy, preprocess_standard
from .data.split import split_domains
from .errors import ConfigError, DimensionError, GlyphCycleError, NonFiniteError, ParseError
from .trainer import CycleGAN, LossReport, Trainer

log = logging.getLogger("glyphcycle")

EXIT_OK, EXIT_RUNTIME, EXIT_INPUT = 0, 1, 2
LOSS_HEADER = "epoch\titer\t" + "\t".join(LossReport.NAMES) + "\tlr"
_LABEL_IN_NAME = re.compile(r"u([0-9a-f]{4,6})_")

PRECEDENCE = (
    "Configuration precedence (lowest to highest): built-in defaults, "
    f"${config_mod.SEED_ENV} (seed only, used when nothing else sets it), "
    "--config FILE, --set KEY=VALUE, then the named flags of each command."
)


class UsageError(GlyphCycleError):
    """Invalid input detected by a command (exit code 2)."""


# helpers


def _tensor(item):
    return Tensor(to_unit(item.pixels)[None, None])


def _load_items(directory, what):
    if not directory:
        raise UsageError(f"no {what} directory given")
    items, errors = scan_style_dir(directory)
    if errors:
        raise ParseError(f"unreadable files in {directory}: " + "; ".join(f"{f}: {m}" for f, m in errors))
    return items


def _check_sizes(items, size, where):
    bad = [it.name for it in items if it.pixels.shape != (size, size)]
    if bad:
        raise DimensionError(f"{where}: {len(bad)} images are not {size}x{size} (e.g. {bad[0]})")


# ingest


def cmd_ingest(cfg):
    src, out = cfg.input, cfg.output
    if not src or not os.path.isdir(src):
        raise UsageError(f"input directory does not exist: {src!r}")
    if not out:
        raise UsageError("ingest needs an output directory")
    items, errors = scan_style_dir(src)
    for fname, msg in errors:
        log.error("ingest: %s: %s", fname, msg)
    if not items:
        if errors:
            print(f"all {len(errors)} input files failed", file=sys.stderr)
            return EXIT_RUNTIME
        print("no samples", file=sys.stderr)
        return EXIT_INPUT

    written, excluded = [], []
    sizes = Counter()
    for i, it in enumerate(items):
        sizes[it.pixels.shape[::-1]] += 1
        if cfg.preprocess == "calligraphy":
            res = preprocess_calligraphy(it.pixels, cfg.image_size, cfg.threshold, cfg.median_radius)
            if res.blank:
                excluded.append(it.name)
                continue
            t = res.tensor
        else:
            t = preprocess_standard(it.pixels, cfg.image_size)
        written.append(Item(sample_name(i, it.codepoint), to_bytes(t.data[0, 0]), it.codepoint))
    write_style_dir(out, written)
    config_mod.write_resolved(cfg, out, "ingest_config.txt")

    lines = [f"samples {len(written)}", f"excluded {len(excluded)}", f"errors {len(errors)}"]
    lines += [f"size {w}x{h} {n}" for (w, h), n in sorted(sizes.items())]
    lines += [f"excluded_file {name}" for name in excluded]
    lines += [f"error_file {fname}" for fname, _ in errors]
    with open(os.path.join(out, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    print("\n".join(lines[:3]))
    return EXIT_OK


# train


def _write_split(path, train, val):
    with open(path, "w", encoding="utf-8") as fh:
        for it in train:
            fh.write(f"{it.name}\ttrain\n")
        for it in val:
            fh.write(f"{it.name}\tvalidation\n")


def cmd_train(cfg):
    if not cfg.output:
        raise UsageError("train needs an output directory")
    tcfg = cfg.train_config()
    items_a = _load_items(cfg.style_a, "style_a")
    items_b = _load_items(cfg.style_b, "style_b")
    if not items_a or not items_b:
        raise UsageError("both style directories need samples")
    _check_sizes(items_a, tcfg.image_size, cfg.style_a)
    _check_sizes(items_b, tcfg.image_size, cfg.style_b)
    (train_a, val_a), (train_b, val_b) = split_domains(items_a, items_b, cfg.split_spec())
    os.makedirs(cfg.output, exist_ok=True)
    config_mod.write_resolved(cfg, cfg.output)
    _write_split(os.path.join(cfg.output, "split_a.tsv"), train_a, val_a)
    _write_split(os.path.join(cfg.output, "split_b.tsv"), train_b, val_b)

    if cfg.resume:
        with open(cfg.resume, "rb") as fh:
            state = load_checkpoint(fh.read(), tcfg)
    else:
        state = CycleGAN.create(tcfg)
    trainer = Trainer(state, [_tensor(it) for it in train_a], [_tensor(it) for it in train_b])

    loss_path = os.path.join(cfg.output, "losses.tsv")
    kept = _rows_before(loss_path, state.epoch, state.iteration) if cfg.resume else []
    n_steps = 0
    with open(loss_path, "w", encoding="utf-8") as fh:
        fh.write(LOSS_HEADER + "\n")
        fh.writelines(kept)
        while state.epoch < tcfg.total_epochs:
            epoch, it, report, lr = trainer.step()
            vals = report.as_tuple()
            fh.write("\t".join([str(epoch), str(it)] + [repr(v) for v in vals] + [repr(lr)]) + "\n")
            n_steps += 1
            if state.iteration == 0:
                fh.flush()
                _maybe_checkpoint(state, cfg.output, tcfg.checkpoint_every, tcfg.total_epochs)
    if state.iteration != 0 or tcfg.total_epochs == 0:
        _write_checkpoint(state, cfg.output, "latest.gcyc")

    if n_steps or kept:
        from .plotting import plot_losses

        plot_losses(_read_loss_rows(loss_path), os.path.join(cfg.output, "losses.png"))
    print(f"trained to epoch {state.epoch}; checkpoint {os.path.join(cfg.output, 'latest.gcyc')}")
    return EXIT_OK


def _rows_before(path, epoch, iteration):
    """Loss-log lines recorded before (epoch, iteration); later ones are replayed on resume."""
    if not os.path.exists(path):
        return []
    with open(path, encoding="utf-8") as fh:
        lines = fh.readlines()[1:]
    keep = []
    for line in lines:
        e, i = (int(v) for v in line.split("\t", 2)[:2])
        if (e, i) < (epoch, iteration):
            keep.append(line)
    return keep


def _write_checkpoint(state, directory, name):
    path = os.path.join(directory, name)
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(save_checkpoint(state))
    os.replace(tmp, path)
    return path


def _maybe_checkpoint(state, directory, every, total):
    _write_checkpoint(state, directory, "latest.gcyc")
    if (every and state.epoch % every == 0) or state.epoch == total:
        _write_checkpoint(state, directory, f"epoch{state.epoch:04d}.gcyc")


def _read_loss_rows(path):
    rows = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        for line in fh:
            vals = dict(zip(header, line.rstrip("\n").split("\t")))
            rows.append({k: float(vals[k]) for k in (*LossReport.NAMES, "lr")})
    return rows


# generate


def cmd_generate(cfg):
    if not cfg.checkpoint:
        raise UsageError("generate needs a checkpoint")
    if not cfg.output:
        raise UsageError("generate needs an output directory")
    tcfg = cfg.train_config()
    items = _load_items(cfg.input, "input")
    if not items:
        raise UsageError(f"no input images in {cfg.input}")
    with open(cfg.checkpoint, "rb") as fh:
        blob = fh.read()
    try:
        state = load_checkpoint(blob, tcfg)
    except DimensionError as exc:
        raise DimensionError(f"checkpoint {cfg.checkpoint} does not match configuration: {exc}") from None
    bad = [it for it in items if it.pixels.shape != (tcfg.image_size, tcfg.image_size)]
    if bad:
        raise DimensionError(
            f"input {bad[0].name} does not match checkpoint configuration",
            (1, tcfg.in_channels) + bad[0].pixels.shape,
            (1, tcfg.in_channels, tcfg.image_size, tcfg.image_size),
        )
    net, prefix = (state.F, "toX") if cfg.reverse else (state.G, "toY")
    out_items = []
    with no_grad():
        for it in items:
            plane = to_bytes(net(_tensor(it)).data[0, 0])
            out_items.append(Item(f"{prefix}_{it.name}", plane, it.codepoint))
    write_style_dir(cfg.output, out_items)
    config_mod.write_resolved(cfg, cfg.output, "generate_config.txt")
    print(f"generated {len(out_items)} images into {cfg.output}")
    return EXIT_OK


# evaluate


def _label_offenders(directory, items):
    manifest = read_manifest(directory)
    offenders = []
    for it in items:
        m = _LABEL_IN_NAME.search(it.name)
        if it.name not in manifest:
            offenders.append(f"{it.name} (not in labels.tsv)")
        elif m and int(m.group(1), 16) != manifest[it.name]:
            offenders.append(f"{it.name} (name says u{m.group(1)}, manifest says u{manifest[it.name]:04x})")
    return offenders


def cmd_evaluate(cfg):
    from .metrics import (
        content_accuracy,
        load_classifier,
        save_classifier,
        self_split_discrepancy,
        style_discrepancy,
        style_representation,
        train_classifier,
        write_metrics,
    )
    from .plotting import plot_metrics

    if not cfg.output:
        raise UsageError("evaluate needs an output directory")
    generated = _load_items(cfg.generated, "generated")
    if not generated:
        print("no generated samples", file=sys.stderr)
        return EXIT_INPUT
    offenders = _label_offenders(cfg.generated, generated)
    if offenders:
        raise UsageError("generated labels disagree with manifest: " + ", ".join(offenders))
    target = _load_items(cfg.target, "target")
    if not target:
        raise UsageError("evaluate needs reference target-style samples")
    source = _load_items(cfg.source, "source") if cfg.source else []

    os.makedirs(cfg.output, exist_ok=True)
    held = None
    if cfg.classifier and os.path.exists(cfg.classifier):
        with open(cfg.classifier, "rb") as fh:
            clf = load_classifier(fh.read())
    else:
        pool = [it for it in target + source if it.codepoint is not None]
        clf, held = train_classifier(
            [_tensor(it) for it in pool], [it.codepoint for it in pool], epochs=cfg.classifier_epochs, seed=cfg.seed
        )
        path = cfg.classifier or os.path.join(cfg.output, "classifier.gcyc")
        with open(path, "wb") as fh:
            fh.write(save_classifier(clf))

    gen_t = [_tensor(it) for it in generated]
    tgt_t = [_tensor(it) for it in target]
    acc = content_accuracy(clf, gen_t, [it.codepoint for it in generated])
    rep_t = style_representation(clf, tgt_t)
    values = {
        "content_top1": acc.top1,
        "content_top5": acc.top5,
        "n_evaluated": acc.n_evaluated,
        "style_discrepancy": style_discrepancy(style_representation(clf, gen_t), rep_t),
        "self_split_discrepancy": self_split_discrepancy(clf, tgt_t, cfg.seed),
    }
    if source:
        values["source_discrepancy"] = style_discrepancy(style_representation(clf, [_tensor(it) for it in source]), rep_t)
    if held is not None:
        values["classifier_heldout_top1"] = held
    write_metrics(os.path.join(cfg.output, "metrics.txt"), values)
    plot_metrics(values, os.path.join(cfg.output, "metrics.png"))
    config_mod.write_resolved(cfg, cfg.output, "evaluate_config.txt")
    for key in sorted(values):
        print(f"{key} {values[key]}")
    return EXIT_OK


# grid

SEPARATOR = 2
SEPARATOR_VALUE = 128


def montage(columns):
    """Tile equal-length image columns with SEPARATOR-pixel gaps."""
    counts = {name: len(imgs) for name, imgs in columns}
    if len(set(counts.values())) > 1:
        raise UsageError("grid columns differ in image count: " + ", ".join(f"{n}={c}" for n, c in counts.items()))
    n_rows = next(iter(counts.values()))
    if n_rows == 0:
        raise UsageError("grid columns are empty")
    shapes = {img.shape for _, imgs in columns for img in imgs}
    if len(shapes) != 1:
        raise UsageError(f"grid images differ in size: {sorted(shapes)}")
    h, w = shapes.pop()
    n_cols = len(columns)
    canvas = np.full((n_rows * h + (n_rows - 1) * SEPARATOR, n_cols * w + (n_cols - 1) * SEPARATOR), SEPARATOR_VALUE, np.uint8)
    for c, (_, imgs) in enumerate(columns):
        for r, img in enumerate(imgs):
            y, x = r * (h + SEPARATOR), c * (w + SEPARATOR)
            canvas[y : y + h, x : x + w] = img
    return canvas


def cmd_grid(cfg, column_dirs):
    if not column_dirs:
        raise UsageError("grid needs at least one column directory")
    if not cfg.output:
        raise UsageError("grid needs an output file")
    columns = []
    for d in column_dirs:
        items = _load_items(d, "column")
        columns.append((d, [it.pixels for it in sorted(items, key=lambda it: it.name)]))
    plane = montage(columns)
    out = cfg.output if cfg.output.endswith(".pgm") else cfg.output + ".pgm"
    os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)
    with open(out, "wb") as fh:
        fh.write(encode_pgm_bytes(plane))
    from .plotting import save_montage_png

    save_montage_png(plane, out[:-4] + ".png", [os.path.basename(os.path.normpath(d)) for d in column_dirs])
    print(f"montage {plane.shape[1]}x{plane.shape[0]} -> {out}")
    return EXIT_OK


# argument parsing

COMMANDS = {
    "ingest": (cmd_ingest, [("input", "directory of .gnt/.pgm files"), ("output", "output style directory")]),
    "train": (cmd_train, [("style_a", "ingested source-style directory"), ("style_b", "ingested target-style directory"),
                          ("output", "run directory")]),
    "generate": (cmd_generate, [("checkpoint", "checkpoint file"), ("input", "ingested input directory"),
                                ("output", "output directory")]),
    "evaluate": (cmd_evaluate, [("generated", "generated directory"), ("target", "reference target-style directory"),
                                ("output", "metrics directory")]),
    "grid": (cmd_grid, [("output", "montage .pgm path")]),
}

NETWORK = ["image_size", "in_channels", "transfer_kind", "transfer_blocks", "base_filters", "disc_base_filters"]
FLAGS = {
    "ingest": ["preprocess", "image_size", "threshold", "median_radius"],
    "train": NETWORK + ["seed", "total_epochs", "r_a", "r_b", "resume", "checkpoint_every", "lambda_cycle"],
    "generate": NETWORK + ["reverse"],
    "evaluate": ["source", "classifier", "classifier_epochs", "seed"],
    "grid": [],
}


def build_parser():
    parser = argparse.ArgumentParser(prog="glyphcycle", description=__doc__, epilog=PRECEDENCE,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, paths) in COMMANDS.items():
        p = sub.add_parser(name, epilog=PRECEDENCE)
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one config key")
        for key, helptext in paths:
            p.add_argument(f"--{key.replace('_', '-')}", dest=key, help=helptext)
        for key in FLAGS[name]:
            if key == "reverse":
                p.add_argument("--reverse", action="store_const", const="true", default=None,
                               help="translate target style back to source style with F")
            else:
                p.add_argument(f"--{key.replace('_', '-')}", dest=key)
        if name == "grid":
            p.add_argument("columns", nargs="+", help="column directories, left to right")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    func, paths = COMMANDS[args.command]
    try:
        overrides = config_mod.parse_pairs(args.set, origin="--set")
        flag_lines = []
        for key in [k for k, _ in paths] + FLAGS[args.command]:
            value = getattr(args, key, None)
            if value is not None:
                flag_lines.append(f"{key}={value}")
        overrides.update(config_mod.parse_pairs(flag_lines, origin="flags"))
        cfg = config_mod.resolve(args.config, overrides)
        if args.command == "grid":
            return func(cfg, args.columns)
        return func(cfg)
    except (UsageError, ConfigError, ParseError, DimensionError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NonFiniteError, OSError) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

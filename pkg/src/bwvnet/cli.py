"""Command line entry point: ``bwvnet <subcommand> [flags]``."""

import argparse
import json
import logging
import os
import sys

from threadpoolctl import threadpool_limits

from . import model_io
from ._validation import BWV, LABELS, encode_labels
from .annotator import BWVColorAnnotator, render_overlay, score_agreement
from .augment import DEFAULT_ZOOM, augment_dataset
from .classifier import network_scorer
from .dataset import DatasetManifest, ManifestImages, SplitPlan, ingest, load_image, split
from .errors import BWVError, DataError, NumericError
from .images import IMAGE_SUFFIXES, read_image, write_png
from .lime import LimeImageExplainer, diverging_colormap, top_k_mask
from .metrics import ConfusionMatrix, auc, compute_metrics, report
from .network import INPUT_SIZE, build
from .synth import write_dataset
from .trainer import TrainConfig, cross_validate, evaluate, train

log = logging.getLogger("bwvnet")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# -- subcommands -------------------------------------------------------------------


def cmd_annotate(a):
    files = sorted(f for f in os.listdir(a.input_dir) if f.lower().endswith(IMAGE_SUFFIXES)) \
        if os.path.isdir(a.input_dir) else []
    if not files:
        raise DataError(f"no images found in {a.input_dir}")
    est = BWVColorAnnotator(a.r_min, a.r_max, a.g_min, a.g_max, a.b_min, a.b_max,
                            a.patch, a.min_pixels, a.min_patches)
    if a.overlay_dir:
        os.makedirs(a.overlay_dir, exist_ok=True)
    n_bwv = 0
    with open(a.out, "w", encoding="utf-8", newline="\n") as fh:
        for name in files:
            path = os.path.join(a.input_dir, name)
            stem = os.path.splitext(name)[0]
            image = read_image(path)
            res = est.annotate(image)
            n_bwv += res.is_bwv
            record = {"id": stem, "path": path, "label": res.label, "origin": "original",
                      "source_id": None, "transform": None, "split": "unassigned",
                      "flagged_patches": res.grid.flagged(), "rgb_extrema": res.rgb_extrema}
            fh.write(json.dumps(record, sort_keys=True) + "\n")
            if a.overlay_dir:
                write_png(os.path.join(a.overlay_dir, f"{stem}.png"), render_overlay(image, res.grid))
    log.info("annotated %d images: %d bwv, %d nonbwv", len(files), n_bwv, len(files) - n_bwv)


def cmd_ingest(a):
    manifest, warnings = ingest(a.image_dir, a.labels)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    manifest.to_jsonl(a.out)
    log.info("wrote %d entries to %s", len(manifest), a.out)


def cmd_augment(a):
    manifest = DatasetManifest.from_jsonl(a.manifest)
    out = augment_dataset(manifest, a.out_dir, a.zoom_factor)
    out.to_jsonl(a.out_manifest)
    log.info("%d entries -> %d entries", len(manifest), len(out))


def cmd_split(a):
    manifest = DatasetManifest.from_jsonl(a.manifest)
    plan = SplitPlan(a.train, a.val, a.test, a.seed, a.stratified, a.keep_groups)
    out = split(manifest, plan)
    out.to_jsonl(a.out or a.manifest)
    log.info("split sizes: %s", {s: len(out.subset(s)) for s in ("train", "val", "test")})


def cmd_train(a):
    manifest = DatasetManifest.from_jsonl(a.manifest)
    cfg = TrainConfig(a.lr, a.momentum, a.epochs, a.max_iters, a.batch, a.val_every, a.seed, a.folds)
    net = build(a.activation, a.seed, a.input_size, a.slope_init)
    if a.folds >= 2:
        pool = [e for e in manifest if e.split != "test"]
        if len(pool) < a.folds:
            raise DataError(f"{len(pool)} non-test entries cannot fill {a.folds} folds")
        X = ManifestImages(pool, a.input_size)
        result, _ = cross_validate(net, X, encode_labels([e.label for e in pool]), cfg)
    else:
        tr, va = manifest.subset("train"), manifest.subset("val")
        if not len(tr) or not len(va):
            raise DataError("--folds 1 needs entries with split 'train' and 'val' (run split first)")
        result = train(net, (ManifestImages(tr, a.input_size), tr.labels()),
                       (ManifestImages(va, a.input_size), va.labels()), cfg)
    model_io.save(result.best, a.out)
    if a.history:
        result.history.to_csv(a.history)
    log.info("stopped after %d iterations (%s); best validation accuracy %.4f",
             result.history.iterations, result.history.stop_reason, result.best_accuracy)


def _cell(v):
    return "" if v is None else f"{100 * v:.2f}"


def cmd_eval(a):
    net = model_io.load(a.model)
    manifest = DatasetManifest.from_jsonl(a.manifest)
    test = manifest.subset("test")
    entries = test.entries if len(test) else manifest.entries
    if not entries:
        raise DataError(f"{a.manifest} has no entries to evaluate")
    X = ManifestImages(entries, net.spec.input_size, cache=False)
    y = encode_labels([e.label for e in entries])
    _, _, probs = evaluate(net, X, y)
    pred = probs.argmax(axis=1)
    cm = ConfusionMatrix.from_predictions(pred, y, positive=BWV)
    rep = compute_metrics(cm)
    is_bwv = (y == BWV).astype(int)
    if 0 < is_bwv.sum() < len(is_bwv):
        rep.auc = auc(probs[:, BWV], is_bwv)
    with open(a.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("model,activation,n,tp,fp,fn,tn,AC,PR,SE,F1,SP,AUC\n")
        cells = [_cell(getattr(rep, k)) for k in ("ac", "pr", "se", "f1", "sp", "auc")]
        fh.write(",".join([os.path.basename(a.model), net.activation, str(len(entries)),
                           str(cm.tp), str(cm.fp), str(cm.fn), str(cm.tn)] + cells) + "\n")
    print(report(cm))


def cmd_explain(a):
    net = model_io.load(a.model)
    size = net.spec.input_size
    image = load_image(a.image, size)
    class_id = LABELS.index(a.class_)
    explainer = LimeImageExplainer(feature_count=a.features, sample_count=a.samples, seed=a.seed)
    exp = explainer.explain(image, network_scorer(net), class_id)
    write_png(a.out_heatmap, diverging_colormap(exp.heatmap))
    write_png(a.out_mask, top_k_mask(image, exp.importance, exp.segmentation, a.top_k))
    out_json = a.out_json or os.path.splitext(a.out_heatmap)[0] + ".json"
    with open(out_json, "w", encoding="utf-8", newline="\n") as fh:
        json.dump({"class": a.class_, "probability": round(exp.probability, 6),
                   "grid": list(exp.segmentation.grid),
                   "importance": [round(float(v), 8) for v in exp.importance]}, fh, sort_keys=True)
        fh.write("\n")
    print(f"{a.class_} probability {exp.probability:.4f}")


def cmd_report(a):
    if a.predicted or a.reference:
        if not (a.predicted and a.reference):
            raise UsageError("report needs both --predicted and --reference")
        pred = {e.id: e.label for e in DatasetManifest.from_jsonl(a.predicted)}
        ref = {e.id: e.label for e in DatasetManifest.from_jsonl(a.reference)}
        common = sorted(set(pred) & set(ref))
        if not common:
            raise DataError("predicted and reference manifests share no ids")
        cm = score_agreement([pred[i] for i in common], [ref[i] for i in common])
    elif None in (a.tp, a.fp, a.fn, a.tn):
        raise UsageError("report needs --tp --fp --fn --tn, or --predicted and --reference")
    else:
        cm = ConfusionMatrix(a.tp, a.fp, a.fn, a.tn)
    text = f"TP={cm.tp} FP={cm.fp} FN={cm.fn} TN={cm.tn}\nAC PR SE F1 SP AUC\n" + report(cm)
    print(text)
    if a.out:
        with open(a.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text + "\n")


def cmd_synth(a):
    path = write_dataset(a.out_dir, a.count, a.size, a.seed, a.prefix)
    log.info("wrote %d images and %s", a.count, path)


# -- parser ------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--config", help="JSON file of flag values (flag names as keys)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--threads", type=int, default=None, help="cap on BLAS worker threads")
    g.add_argument("--quiet", action="store_true")

    parser = _Parser(prog="bwvnet", description="Blue-white veil detection pipeline.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    subs = {}

    def add(name, func, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func)
        subs[name] = p
        return p

    p = add("annotate", cmd_annotate, "label images by veil-colored patches")
    p.add_argument("--input-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--overlay-dir")
    for ch, lo, hi in (("r", 45, 166), ("g", 73, 98), ("b", 73, 98)):
        p.add_argument(f"--{ch}-min", type=int, default=lo)
        p.add_argument(f"--{ch}-max", type=int, default=hi)
    p.add_argument("--patch", type=int, default=16)
    p.add_argument("--min-pixels", type=int, default=1)
    p.add_argument("--min-patches", type=int, default=1)

    p = add("ingest", cmd_ingest, "build a manifest from images and a stem,label CSV")
    p.add_argument("--image-dir", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)

    p = add("augment", cmd_augment, "rotate/flip/zoom every original image")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--out-manifest", required=True)
    p.add_argument("--zoom-factor", type=float, default=DEFAULT_ZOOM)

    p = add("split", cmd_split, "assign train/val/test splits")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", help="output manifest (default: rewrite --manifest)")
    p.add_argument("--train", type=float, default=0.8)
    p.add_argument("--val", type=float, default=0.2)
    p.add_argument("--test", type=float, default=0.0)
    p.add_argument("--stratified", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--keep-groups", action=argparse.BooleanOptionalAction, default=True,
                   help="keep augmented copies in their source's split")

    p = add("train", cmd_train, "train the network with SGDM")
    p.add_argument("--manifest", required=True)
    p.add_argument("--activation", choices=("prelu", "leakyrelu", "relu"), default="prelu")
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--epochs", type=int, default=250)
    p.add_argument("--max-iters", type=int, default=2250)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--val-every", type=int, default=25)
    p.add_argument("--input-size", type=int, default=INPUT_SIZE)
    p.add_argument("--slope-init", type=float, default=0.25)
    p.add_argument("--out", required=True)
    p.add_argument("--history")

    p = add("eval", cmd_eval, "evaluate a model on a manifest's test split")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)

    p = add("explain", cmd_explain, "LIME explanation of one image")
    p.add_argument("--model", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--class", dest="class_", choices=LABELS, default="bwv")
    p.add_argument("--features", type=int, default=100)
    p.add_argument("--samples", type=int, default=5500)
    p.add_argument("--top-k", type=int, default=4)
    p.add_argument("--out-heatmap", required=True)
    p.add_argument("--out-mask", required=True)
    p.add_argument("--out-json")

    p = add("report", cmd_report, "metric row from counts or from two label manifests")
    for k in ("tp", "fp", "fn", "tn"):
        p.add_argument(f"--{k}", type=int)
    p.add_argument("--predicted")
    p.add_argument("--reference")
    p.add_argument("--out")

    p = sub.add_parser("synth", parents=[common])  # hidden: fixtures for tests and demos
    p.set_defaults(func=cmd_synth)
    subs["synth"] = p
    p.add_argument("--out-dir", required=True)
    p.add_argument("--count", type=int, default=12)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--prefix", default="img")
    return parser, subs


def _apply_config(args, argv, subs):
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    sp = subs[args.command]
    known = {a.dest for a in sp._actions}
    values = {}
    for key, value in cfg.items():
        dest = "class_" if key == "class" else key.lstrip("-").replace("-", "_")
        if dest not in known:
            raise UsageError(f"config key {key!r} is not a flag of {args.command}")
        values[dest] = value
    sp.set_defaults(**values)
    # reparse: explicit flags still win over the new defaults
    for a in sp._actions:
        if a.dest in values:
            a.required = False
    return sp.parse_args(argv[1:])


def run(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        if args.config:
            cmd_index = argv.index(args.command)
            args = _apply_config(args, argv[cmd_index:], subs)
            args.command = argv[cmd_index]
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr, force=True)
    resolved = {k: v for k, v in vars(args).items() if k != "func"}
    print("config: " + json.dumps(resolved, sort_keys=True), file=sys.stderr)
    try:
        with threadpool_limits(limits=args.threads):
            args.func(args)
    except UsageError as exc:
        print(f"bwvnet {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"bwvnet {args.command}: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (BWVError, OSError) as exc:
        print(f"bwvnet {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()

"""Batch command line front end.

    facepipe detect IMAGE... [--video] [--config CFG] [--out-json PATH]
                             [--out-annotated PATH] [--model MODEL] [--seed N]
                             [--out-features PATH --label NAME]
    facepipe train INPUT... --classifier rbf|fmaca --out-model PATH [--seed N]
    facepipe classify INPUT... --model MODEL [--out-json PATH]
    facepipe segment IMAGE --out PATH [--out-mask PATH]
    facepipe edges IMAGE --out PATH [--op sobel|prewitt|roberts|log] [--sigma S]
    facepipe diff FRAME_A FRAME_B --out PATH

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 data or model error.
``FACEPIPE_SEED`` supplies the default seed; ``--seed`` wins over it.
"""

import argparse
import logging
import os
import sys
from collections import Counter
from pathlib import Path

import numpy as np

from . import documents, fmaca, imaging, rbf
from .annotate import annotate
from .clustering import segment_face
from .edges import OPERATORS, gradient_edges, log_zero_crossings, normalize_magnitude
from .pipeline import ConfigError, PipelineConfig, detect_still, detect_video

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_DATA = 0, 1, 2, 3

log = logging.getLogger("facepipe")


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _seed(args, fallback=0):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("FACEPIPE_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise CliError(f"FACEPIPE_SEED must be an integer, got {env!r}", EXIT_USAGE)
    return fallback


def _read_image(path):
    try:
        return imaging.load_ppm(path)
    except FileNotFoundError as exc:
        raise CliError(str(exc), EXIT_IO)
    except imaging.PpmError as exc:
        raise CliError(f"{path}: {exc}", EXIT_DATA)


def _check_writable(path):
    parent = Path(path).resolve().parent
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise CliError(f"cannot write to {path}", EXIT_IO)


def _write(fn, path, *a):
    try:
        fn(*a)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_IO)


def _load_config(args):
    cfg = {}
    if args.config:
        try:
            cfg = documents.read_json(args.config)
        except FileNotFoundError:
            raise CliError(f"no such config file: {args.config}", EXIT_IO)
        except documents.DocumentError as exc:
            raise CliError(str(exc), EXIT_USAGE)
        if not isinstance(cfg, dict):
            raise CliError("config file must hold a JSON object", EXIT_USAGE)
    try:
        config = PipelineConfig.from_dict(cfg)
    except ConfigError as exc:
        raise CliError(f"invalid config: {exc}", EXIT_USAGE)
    config.seed = _seed(args, config.seed)
    if args.model:
        config.model_path = str(args.model)
    return config


def _load_model(path):
    try:
        return documents.load_model(path)
    except FileNotFoundError:
        raise CliError(f"no such model file: {path}", EXIT_IO)
    except (documents.DocumentError, ValueError) as exc:
        raise CliError(f"{path}: {exc}", EXIT_DATA)


# ---------------------------------------------------------------------------
# detect

def cmd_detect(args):
    cfg = _load_config(args)
    model = None
    if cfg.model_path:
        model = _load_model(cfg.model_path)
        kind = "rbf" if isinstance(model, rbf.RbfNetwork) else "fmaca"
        if cfg.classifier == "none":
            cfg.classifier = kind
        elif cfg.classifier != kind:
            raise CliError(f"config asks for {cfg.classifier} but model is {kind}", EXIT_USAGE)
    elif cfg.classifier != "none":
        raise CliError(f"classifier {cfg.classifier} needs --model", EXIT_USAGE)

    outputs = [p for p in (args.out_json, args.out_features) if p]
    many = len(args.inputs) > 1
    if args.out_annotated and not (many and Path(args.out_annotated).is_dir()):
        outputs.append(args.out_annotated)
    for p in outputs:
        _check_writable(p)
    if args.out_annotated and many and not Path(args.out_annotated).is_dir():
        raise CliError("--out-annotated must be an existing directory for several inputs",
                       EXIT_USAGE)

    images = [_read_image(p) for p in args.inputs]
    if args.video:
        try:
            frames = detect_video(images, cfg, model, sources=args.inputs)
        except ValueError as exc:
            raise CliError(str(exc), EXIT_DATA)
    else:
        frames = [detect_still(img, cfg, model, source=src)
                  for img, src in zip(images, args.inputs)]

    doc = documents.detection_document(args.inputs, cfg, frames,
                                       "video" if args.video else "still")
    for src, dets in zip(args.inputs, frames):
        complete = sum(d.feature is not None for d in dets)
        print(f"{src}: {len(dets)} face(s), {complete} with features")
        for d in dets:
            if d.failure:
                print(f"  bbox {d.face_bbox.bbox}: failed at {d.failure['stage']} "
                      f"({d.failure['reason']})")
            elif d.label is not None:
                print(f"  bbox {d.face_bbox.bbox}: {d.label}")
    if args.out_json:
        _write(documents.write_json, args.out_json, args.out_json, doc)
    if args.out_features:
        samples = [(d.feature, args.label) for dets in frames for d in dets
                   if d.feature is not None]
        _write(documents.write_json, args.out_features, args.out_features,
               documents.feature_document(samples))
    if args.out_annotated:
        for src, img, dets in zip(args.inputs, images, frames):
            dest = (Path(args.out_annotated) / f"{Path(src).stem}_annotated.ppm"
                    if many else Path(args.out_annotated))
            _write(imaging.save_ppm, dest, annotate(img, dets), dest)
    return EXIT_OK


# ---------------------------------------------------------------------------
# train / classify

def _training_samples(inputs, cfg):
    samples = []
    for item in inputs:
        path = Path(item)
        if path.is_dir():
            for label_dir in sorted(p for p in path.iterdir() if p.is_dir()):
                for img_path in sorted(label_dir.glob("*.ppm")):
                    dets = detect_still(_read_image(img_path), cfg, source=str(img_path))
                    feats = [d.feature for d in dets if d.feature is not None]
                    if not feats:
                        print(f"{img_path}: no complete face, skipped")
                        continue
                    samples.append((feats[0].values, label_dir.name))
        elif path.is_file():
            try:
                doc = documents.read_json(path)
                samples.extend(documents.parse_feature_document(doc))
            except (documents.DocumentError, KeyError, TypeError) as exc:
                raise CliError(f"{path}: {exc}", EXIT_DATA)
        else:
            raise CliError(f"no such input: {path}", EXIT_IO)
    return samples


def cmd_train(args):
    seed = _seed(args)
    _check_writable(args.out_model)
    cfg = PipelineConfig(seed=seed)
    samples = _training_samples(args.inputs, cfg)
    unlabeled = [s for s in samples if s[1] is None]
    if unlabeled:
        raise CliError(f"{len(unlabeled)} training sample(s) have no label", EXIT_DATA)
    counts = Counter(str(label) for _, label in samples)
    if len(counts) < 2:
        raise CliError(f"need at least two classes, got {sorted(counts)}", EXIT_DATA)
    if len({len(v) for v, _ in samples}) > 1:
        raise CliError("training vectors have differing lengths", EXIT_DATA)
    train = [(np.asarray(v, dtype=np.float64), str(lab)) for v, lab in samples]

    print("class counts: " + ", ".join(f"{lab}={n}" for lab, n in sorted(counts.items())))
    try:
        if args.classifier == "rbf":
            units = args.units or len(counts)
            model = rbf.train_rbf(train, units, seed=seed)
            acc = rbf.training_accuracy(model, train)
            print(f"rbf: {len(model.units)} unit(s), training accuracy {acc:.4f}")
        else:
            K = args.basins or len(counts)
            model = fmaca.build_tree(train, K, seed=seed, max_depth=args.max_depth)
            stats = fmaca.tree_stats(model)
            purities = ", ".join(f"{p:.3f}" for p in stats["leaf_purities"])
            print(f"fmaca: K={K}, depth {stats['depth']}, {stats['node_count']} node(s), "
                  f"leaf purities [{purities}]")
    except ValueError as exc:
        raise CliError(f"training failed: {exc}", EXIT_DATA)
    _write(documents.save_model, args.out_model, model, args.out_model, len(train), seed)
    return EXIT_OK


def cmd_classify(args):
    model = _load_model(args.model)
    cfg = PipelineConfig(seed=_seed(args))
    results = []
    for item in args.inputs:
        path = Path(item)
        if path.suffix.lower() == ".ppm":
            dets = detect_still(_read_image(path), cfg, model, source=str(path))
            for d in dets:
                if d.label is not None:
                    results.append({"source": str(path), "label": d.label, "scores": d.scores})
            continue
        if not path.is_file():
            raise CliError(f"no such input: {path}", EXIT_IO)
        try:
            samples = documents.parse_feature_document(documents.read_json(path))
        except (documents.DocumentError, KeyError, TypeError) as exc:
            raise CliError(f"{path}: {exc}", EXIT_DATA)
        for i, (vec, _) in enumerate(samples):
            x = np.asarray(vec, dtype=np.float64)
            try:
                if isinstance(model, rbf.RbfNetwork):
                    label, scores = rbf.classify(model, x)
                    score_map = {lab: float(s) for lab, s in zip(model.class_labels, scores)}
                else:
                    label, purity = fmaca.predict(model, x)
                    score_map = {"purity": float(purity)}
            except ValueError as exc:
                raise CliError(f"{path} sample {i}: {exc}", EXIT_DATA)
            results.append({"source": f"{path}#{i}", "label": label, "scores": score_map})
    for r in results:
        print(f"{r['source']}: {r['label']}")
    if args.out_json:
        _write(documents.write_json, args.out_json, args.out_json,
               {"schema_version": documents.SCHEMA_VERSION, "results": results})
    return EXIT_OK


# ---------------------------------------------------------------------------
# image tools

def cmd_segment(args):
    _check_writable(args.out)
    img = _read_image(args.input)
    seg = segment_face(imaging.to_gray(img), seed=_seed(args))
    n = max(len(seg.class_centers) - 1, 1)
    levels = np.round(np.arange(len(seg.class_centers)) * 255.0 / n)
    _write(imaging.save_ppm, args.out, imaging.gray_to_rgb(levels[seg.class_map]), args.out)
    if args.out_mask:
        _write(imaging.save_ppm, args.out_mask, imaging.mask_to_rgb(seg.selected_mask),
               args.out_mask)
    flag = " (degenerate)" if seg.degenerate else ""
    centers = ", ".join(f"{c:.1f}" for c in seg.class_centers)
    print(f"classes [{centers}]{flag}; {len(seg.components)} dark component(s)")
    return EXIT_OK


def cmd_edges(args):
    _check_writable(args.out)
    gray = imaging.to_gray(_read_image(args.input))
    try:
        if args.op == "log":
            out = imaging.mask_to_rgb(log_zero_crossings(gray, args.sigma, args.floor))
        else:
            out = imaging.gray_to_rgb(normalize_magnitude(gradient_edges(gray, OPERATORS[args.op])))
    except ValueError as exc:
        raise CliError(str(exc), EXIT_DATA)
    _write(imaging.save_ppm, args.out, out, args.out)
    return EXIT_OK


def cmd_diff(args):
    _check_writable(args.out)
    a = imaging.to_gray(_read_image(args.a))
    b = imaging.to_gray(_read_image(args.b))
    try:
        diff = imaging.difference_image(a, b)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_DATA)
    out = (imaging.mask_to_rgb(imaging.threshold(diff, args.threshold))
           if args.threshold is not None else imaging.gray_to_rgb(diff))
    _write(imaging.save_ppm, args.out, out, args.out)
    return EXIT_OK


def build_parser():
    p = _Parser(prog="facepipe", description="Skin-color face detection and recognition.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("detect", help="detect faces and locate features")
    d.add_argument("inputs", nargs="+", help="PPM images (frames in order with --video)")
    d.add_argument("--video", action="store_true", help="treat inputs as one frame sequence")
    d.add_argument("--config", help="JSON pipeline configuration")
    d.add_argument("--out-json", help="detection document path")
    d.add_argument("--out-annotated", help="annotated PPM (directory for several inputs)")
    d.add_argument("--out-features", help="write complete feature vectors as a feature set")
    d.add_argument("--label", help="label attached to --out-features samples")
    d.add_argument("--model", help="model file used to classify detected faces")
    d.add_argument("--seed", type=int)
    d.set_defaults(func=cmd_detect)

    t = sub.add_parser("train", help="train a classifier")
    t.add_argument("inputs", nargs="+",
                   help="feature-set JSON files or directories with one subdirectory per label")
    t.add_argument("--classifier", choices=["rbf", "fmaca"], required=True)
    t.add_argument("--out-model", required=True)
    t.add_argument("--units", type=int, help="RBF hidden units (default: class count)")
    t.add_argument("--basins", type=int, help="root basin count K (default: class count)")
    t.add_argument("--max-depth", type=int, default=fmaca.DEFAULT_MAX_DEPTH)
    t.add_argument("--seed", type=int)
    t.set_defaults(func=cmd_train)

    c = sub.add_parser("classify", help="classify feature sets or images")
    c.add_argument("inputs", nargs="+", help="feature-set JSON files or PPM images")
    c.add_argument("--model", required=True)
    c.add_argument("--out-json")
    c.add_argument("--seed", type=int)
    c.set_defaults(func=cmd_classify)

    s = sub.add_parser("segment", help="three-class intensity segmentation")
    s.add_argument("input")
    s.add_argument("--out", required=True, help="class map PPM (three gray levels)")
    s.add_argument("--out-mask", help="darkest-class mask PPM")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_segment)

    e = sub.add_parser("edges", help="edge magnitude or zero-crossing map")
    e.add_argument("input")
    e.add_argument("--out", required=True)
    e.add_argument("--op", choices=sorted(OPERATORS) + ["log"], default="sobel")
    e.add_argument("--sigma", type=float, default=1.0)
    e.add_argument("--floor", type=float, default=0.0)
    e.set_defaults(func=cmd_edges)

    f = sub.add_parser("diff", help="absolute difference of two frames")
    f.add_argument("a")
    f.add_argument("b")
    f.add_argument("--out", required=True)
    f.add_argument("--threshold", type=float, help="write a binary motion mask instead")
    f.set_defaults(func=cmd_diff)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"facepipe: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())

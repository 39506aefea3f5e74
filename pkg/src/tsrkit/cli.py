"""Command-line frontend for every pipeline.

Subcommands: gen-fixtures, stats, anchors, encode-labels, decode-labels,
reconstruct, teds, coco-eval, misalign, kernels-check. All file outputs are
byte-reproducible for fixed inputs and seeds.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import formats
from .anchors import (
    AnchorConfig,
    DEFAULT_ASPECT_RATIOS,
    anchor_coverage,
    dataset_stats,
    generate_anchors,
)
from .cocoeval import evaluate_corpus
from .errors import EmptyStructureError, TsrkitError
from .fixtures import FixtureSpec, generate_fixtures
from .labels import AnnotationSet, ComponentClass, LabelMode, decode_pseudo, encode_pseudo
from .misalign import ALL_CLASSES, PerturbationMode, PerturbationSpec, misalignment_report
from .reconstruct import build_grid, grid_to_html
from .teds import corpus_teds


def _fail(message: str, code: int = 1):
    print(f"error: {message}", file=sys.stderr)
    raise SystemExit(code)


def _load_multi_label_sets(path: str, is_ground_truth: bool) -> list[AnnotationSet]:
    loader = formats.load_ground_truth if is_ground_truth else formats.load_detections
    corpus = loader(path)
    sets = corpus.annotation_sets()
    if corpus.label_mode is LabelMode.SINGLE:
        sets = [decode_pseudo(ann) for ann in sets]
    return sets


def _write_csv(path: str, header: list[str], rows: list[list[str]]):
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    formats.atomic_write_text(path, "\n".join(lines) + "\n")


def cmd_gen_fixtures(args) -> int:
    spec = FixtureSpec(
        n_tables=args.tables,
        seed=args.seed,
        span_probability=args.span_probability,
        header_probability=args.header_probability,
    )
    gt, det = generate_fixtures(spec)
    gt_path = f"{args.output}.gt.json"
    det_path = f"{args.output}.pred.json"
    formats.save(gt, gt_path)
    formats.save(det, det_path)
    print(f"wrote {gt_path}")
    print(f"wrote {det_path}")
    return 0


def cmd_stats(args) -> int:
    corpus = formats.load_ground_truth(args.ground_truth)
    stats = dataset_stats(corpus.annotation_sets())
    for line in stats.format_lines():
        print(line)
    if args.csv:
        rows = [
            [str(bucket), str(count)]
            for bucket, count in stats.folded_aspect_ratio_histogram.items()
        ]
        _write_csv(args.csv, ["ratio_bucket", "count"], rows)
        print(f"wrote {args.csv}")
    return 0


def cmd_anchors(args) -> int:
    corpus = formats.load_ground_truth(args.ground_truth)
    gt_boxes = [
        inst.box for ann in corpus.annotation_sets() for inst in ann.instances
    ]
    if not gt_boxes:
        _fail("ground truth contains no boxes")
    cfg = AnchorConfig(aspect_ratios=tuple(sorted(args.ratios)))
    max_w = max(img.width for img in corpus.images)
    max_h = max(img.height for img in corpus.images)
    sizes = [
        (max(1, int(max_h // stride)), max(1, int(max_w // stride)))
        for stride in cfg.strides
    ]
    anchors = generate_anchors(cfg, sizes)
    report = anchor_coverage(anchors, gt_boxes)
    print(f"ratios = {list(cfg.aspect_ratios)}")
    print(f"anchors = {anchors.shape[0]}")
    for line in report.format_lines():
        print(line)
    return 0


def _load_any_corpus(path: str):
    """Detections or ground truth; transforms accept either carrier."""
    from .errors import SchemaError

    try:
        return formats.load_detections(path)
    except SchemaError as detection_error:
        try:
            return formats.load_ground_truth(path)
        except SchemaError:
            raise detection_error from None


def _transform_labels(args, encode: bool) -> int:
    corpus = formats.load_ground_truth(args.input) if encode else _load_any_corpus(args.input)
    expected = LabelMode.MULTI if encode else LabelMode.SINGLE
    if corpus.label_mode is not expected:
        _fail(f"input must be label_mode={expected.value}")
    transform = encode_pseudo if encode else decode_pseudo
    for image in corpus.images:
        ann = AnnotationSet(
            image.image_id,
            tuple(rec.to_instance() for rec in image.instances),
            corpus.label_mode,
        )
        out = transform(ann)
        image.instances = [
            formats.instance_record_from(inst, with_score=True)
            for inst in out.instances
        ]
    corpus.label_mode = LabelMode.SINGLE if encode else LabelMode.MULTI
    formats.save(corpus, args.output)
    print(f"wrote {args.output}")
    return 0


def cmd_encode_labels(args) -> int:
    return _transform_labels(args, encode=True)


def cmd_decode_labels(args) -> int:
    return _transform_labels(args, encode=False)


def cmd_reconstruct(args) -> int:
    sets = _load_multi_label_sets(args.predictions, is_ground_truth=False)
    os.makedirs(args.output, exist_ok=True)
    failures = []
    for ann in sets:
        try:
            html = grid_to_html(build_grid(ann))
        except (EmptyStructureError, TsrkitError) as exc:
            failures.append((ann.image_id, str(exc)))
            continue
        formats.atomic_write_text(os.path.join(args.output, f"{ann.image_id}.html"), html)
    print(f"wrote {len(sets) - len(failures)} table(s) to {args.output}")
    for image_id, message in failures:
        print(f"failed {image_id}: {message}", file=sys.stderr)
    return 1 if failures else 0


def cmd_teds(args) -> int:
    corpus = formats.load_ground_truth(args.ground_truth)
    html = corpus.html_by_image()
    missing_html = [img.image_id for img in corpus.images if img.image_id not in html]
    if missing_html:
        _fail(f"ground truth without html for: {missing_html[:5]}")
    pairs = []
    ids = sorted(html)
    for image_id in ids:
        pred_path = os.path.join(args.predictions_dir, f"{image_id}.html")
        if os.path.exists(pred_path):
            with open(pred_path, encoding="utf-8") as handle:
                pred = handle.read()
        else:
            pred = ""  # scores 0: an absent prediction cannot match anything
        pairs.append((pred, html[image_id]))
    report = corpus_teds(pairs)
    for line in report.format_lines():
        print(line)
    failures = [
        (ids[p.index], p.prediction_error)
        for p in report.pairs
        if p.prediction_error is not None
    ]
    for image_id, message in failures:
        print(f"prediction failed {image_id}: {message}", file=sys.stderr)
    return 0


def cmd_coco_eval(args) -> int:
    preds = _load_multi_label_sets(args.predictions, is_ground_truth=False)
    gts = _load_multi_label_sets(args.ground_truth, is_ground_truth=True)
    report = evaluate_corpus(
        {ann.image_id: list(ann.instances) for ann in preds},
        {ann.image_id: list(ann.instances) for ann in gts},
    )
    for line in report.format_lines():
        print(line)
    return 0


_MODE_BY_NAME = {mode.value: mode for mode in PerturbationMode}


def parse_perturbation_spec(text: str) -> PerturbationSpec:
    """mode[:magnitude][:class+class+...], e.g. dilate:2 or merge:row."""
    parts = text.split(":")
    mode_name = parts[0].strip().lower()
    if mode_name not in _MODE_BY_NAME:
        raise ValueError(f"unknown perturbation mode {mode_name!r}")
    mode = _MODE_BY_NAME[mode_name]
    magnitude = 0.0
    classes = frozenset({ComponentClass.ROW}) if mode is PerturbationMode.MERGE_ADJACENT else ALL_CLASSES
    for part in parts[1:]:
        part = part.strip()
        if not part:
            continue
        try:
            magnitude = float(part)
            continue
        except ValueError:
            pass
        names = {p.strip().upper() for p in part.split("+") if p.strip()}
        try:
            classes = frozenset(ComponentClass[name] for name in names)
        except KeyError as exc:
            raise ValueError(f"unknown component class in {part!r}") from exc
    return PerturbationSpec(mode=mode, magnitude=magnitude, target_classes=classes)


def cmd_misalign(args) -> int:
    corpus = formats.load_ground_truth(args.ground_truth)
    html = corpus.html_by_image()
    specs = [parse_perturbation_spec(s) for s in args.spec]
    report = misalignment_report(corpus.annotation_sets(), html, specs)
    for line in report.format_lines():
        print(line)
    if args.csv:
        rows = [
            [row.label, f"{row.mean_ap:.6f}", f"{row.teds_overall:.6f}"]
            for row in report.rows
        ]
        _write_csv(args.csv, ["perturbation", "mAP", "TEDS"], rows)
        print(f"wrote {args.csv}")
    return 0


def cmd_kernels_check(args) -> int:
    from .kernels_selftest import run_checks

    results = run_checks()
    for result in results:
        print(result.format_line())
    return 0 if all(r.ok for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tsrkit",
        description="Table structure toolkit: reconstruction and evaluation pipelines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-fixtures", help="generate a synthetic corpus")
    p.add_argument("-o", "--output", required=True, help="output path prefix")
    p.add_argument("--tables", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--span-probability", type=float, default=0.5)
    p.add_argument("--header-probability", type=float, default=0.6)
    p.set_defaults(func=cmd_gen_fixtures)

    p = sub.add_parser("stats", help="dataset statistics")
    p.add_argument("ground_truth")
    p.add_argument("--csv", help="write the folded aspect-ratio histogram")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("anchors", help="anchor coverage for a ratio list")
    p.add_argument("ground_truth")
    p.add_argument(
        "--ratios",
        type=float,
        nargs="+",
        default=list(DEFAULT_ASPECT_RATIOS),
        help="anchor aspect ratios (height/width)",
    )
    p.set_defaults(func=cmd_anchors)

    p = sub.add_parser("encode-labels", help="multi-label to single-label ground truth")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_encode_labels)

    p = sub.add_parser("decode-labels", help="single-label predictions to multi-label")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_decode_labels)

    p = sub.add_parser("reconstruct", help="detections to one HTML file per image")
    p.add_argument("predictions")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("teds", help="structure similarity of predicted HTML")
    p.add_argument("predictions_dir")
    p.add_argument("ground_truth")
    p.set_defaults(func=cmd_teds)

    p = sub.add_parser("coco-eval", help="detection AP report")
    p.add_argument("predictions")
    p.add_argument("ground_truth")
    p.set_defaults(func=cmd_coco_eval)

    p = sub.add_parser("misalign", help="metric divergence under perturbations")
    p.add_argument("ground_truth")
    p.add_argument(
        "--spec",
        action="append",
        required=True,
        help="mode[:magnitude][:classes], e.g. dilate:2 snap merge:row",
    )
    p.add_argument("--csv", help="write report rows as CSV")
    p.set_defaults(func=cmd_misalign)

    p = sub.add_parser("kernels-check", help="run the numerical kernel invariants")
    p.set_defaults(func=cmd_kernels_check)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TsrkitError as exc:
        _fail(f"{type(exc).__name__}: {exc}")
    except OSError as exc:
        _fail(f"{exc.filename or ''}: {exc.strerror or exc}")
    except ValueError as exc:
        _fail(str(exc))
    return 0


if __name__ == "__main__":
    sys.exit(main())

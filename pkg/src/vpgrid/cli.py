"""``vpgrid`` command line: gen, train, detect, baseline, eval, report, pipeline.

Exit status is 0 on success, 1 on a domain, parse or I/O error, 2 on a usage
error.  Diagnostics go to stderr, results to stdout.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .classical import HoughParams, center_baseline, detect_hough
from .dataset import DatasetManifest, build_dataset
from .errors import VPGridError
from .evaluation import EvalReport, render_overlay
from .geometry import GridSpec, pixel_to_cell
from .harness import METHODS, DeskConfig, evaluate_methods, run_pipeline
from .nn import TrainConfig, load_model, predict_localization, reference_network, save_model, train
from .pgm import read_pgm, write_pgm
from .scenegen import SceneParams

log = logging.getLogger("vpgrid")


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _str_list(text: str) -> list[str]:
    values = [v.strip() for v in text.split(",") if v.strip()]
    bad = [v for v in values if v not in METHODS]
    if bad or not values:
        raise argparse.ArgumentTypeError(f"methods must be drawn from {','.join(METHODS)}")
    return values


def default_grids(size: int) -> list[int]:
    return [10, 20, 30] if size >= 300 else [8]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vpgrid", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic dataset and manifest")
    g.add_argument("--out", required=True, type=Path)
    g.add_argument("--pos", type=int, default=100)
    g.add_argument("--neg", type=int, default=100)
    g.add_argument("--size", type=int, default=64)
    g.add_argument("--grid", type=_int_list, default=None, help="grid sides, e.g. 10,20,30")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--train-frac", type=float, default=0.88)
    g.add_argument("--n-converging", type=int, default=8)
    g.add_argument("--n-distractor", type=int, default=0)
    g.add_argument("--vp-sigma", type=float, default=None, help="VP prior std-dev in px (default 10%% of width)")
    g.add_argument("--noise", type=float, default=0.0)
    g.add_argument("--line-intensity", type=float, default=0.8)
    g.add_argument("--background", type=float, default=0.2)
    g.add_argument("--thickness", type=float, default=1.0)

    t = sub.add_parser("train", help="train an existence or localization network")
    t.add_argument("--task", choices=("existence", "localization"), required=True)
    t.add_argument("--manifest", required=True, type=Path)
    t.add_argument("--grid", type=int, default=None)
    t.add_argument("--epochs", type=int, default=20)
    t.add_argument("--lr", type=float, default=0.01)
    t.add_argument("--momentum", type=float, default=0.9)
    t.add_argument("--batch-size", type=int, default=16)
    t.add_argument("--jitter", type=int, default=0)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--model-out", required=True, type=Path)

    d = sub.add_parser("detect", help="rank grid cells for images")
    d.add_argument("--method", choices=METHODS, required=True)
    d.add_argument("--model", type=Path)
    src = d.add_mutually_exclusive_group(required=True)
    src.add_argument("--image", type=Path)
    src.add_argument("--manifest-split", choices=("train", "test"))
    d.add_argument("--manifest", type=Path, help="manifest for --manifest-split and the center prior")
    d.add_argument("--grid", type=int, default=None)
    d.add_argument("--topk", type=int, default=5)
    d.add_argument("--overlay-dir", type=Path)

    b = sub.add_parser("baseline", help="center-prior baseline from training labels")
    b.add_argument("--mode", choices=("top1", "top5"), required=True)
    b.add_argument("--manifest", required=True, type=Path)
    b.add_argument("--grid", type=int, default=None)

    e = sub.add_parser("eval", help="compare methods on the test split")
    e.add_argument("--manifest", required=True, type=Path)
    e.add_argument("--methods", type=_str_list, default=list(METHODS[1:]))
    e.add_argument("--grids", type=_int_list, default=None)
    e.add_argument("--model", type=Path, help="localization model for method cnn")
    e.add_argument("--existence-model", type=Path)
    e.add_argument("--report", type=Path, help="write the tab-separated report here")

    r = sub.add_parser("report", help="format a saved report")
    r.add_argument("--input", required=True, type=Path)
    r.add_argument("--tsv-out", type=Path)

    p = sub.add_parser("pipeline", help="desk-scale end-to-end run: gen, train, eval")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--localization-epochs", type=int, default=DeskConfig.localization_epochs)
    p.add_argument("--existence-epochs", type=int, default=DeskConfig.existence_epochs)
    return parser


def _grid_for(manifest: DatasetManifest, n: int | None) -> GridSpec:
    return manifest.grid(n if n is not None else manifest.grids[0])


def cmd_gen(args) -> None:
    params = SceneParams(
        width=args.size, height=args.size, n_converging=args.n_converging,
        n_distractor=args.n_distractor, vp_prior_sigma=args.vp_sigma, noise_sigma=args.noise,
        line_intensity=args.line_intensity, background_intensity=args.background,
        line_thickness=args.thickness,
    )
    grids = tuple(args.grid or default_grids(args.size))
    m = build_dataset(args.pos, args.neg, args.train_frac, params, args.seed, args.out, grids)
    n_train = len(m.select("train"))
    print(f"{args.out / 'manifest.txt'}\t{len(m.entries)} entries\t{n_train} train\t{len(m.entries) - n_train} test")


def cmd_train(args) -> None:
    manifest = DatasetManifest.read(args.manifest)
    grid = _grid_for(manifest, args.grid)
    head = 2 if args.task == "existence" else grid.class_count
    net = reference_network(head, manifest.width, seed=args.seed)
    cfg = TrainConfig(
        learning_rate=args.lr, momentum=args.momentum, batch_size=args.batch_size,
        epochs=args.epochs, seed=args.seed, jitter=args.jitter,
    )
    _, curve = train(net, manifest, args.task, grid, cfg)
    save_model(net, args.model_out)
    for epoch, loss in enumerate(curve, start=1):
        print(f"{epoch}\t{loss:.6f}")


def _format_prediction(name: str, pred) -> str:
    cells = " ".join(f"{c.row},{c.col}:{s:.6g}" for c, s in pred.entries)
    return f"{name}\t{cells}"


def cmd_detect(args) -> None:
    manifest = DatasetManifest.read(args.manifest) if args.manifest else None
    if args.image:
        items = [(str(args.image), read_pgm(args.image))]
    else:
        if manifest is None:
            raise argparse.ArgumentTypeError("--manifest-split requires --manifest")
        entries = manifest.select(args.manifest_split, has_vp=None)
        items = [(e.path, manifest.load_image(e)) for e in entries]
    if not items:
        raise VPGridError("no images to process")
    h, w = items[0][1].shape
    n = args.grid or (manifest.grids[0] if manifest else default_grids(w)[0])
    grid = GridSpec(w, h, n)

    if args.method == "cnn":
        if not args.model:
            raise argparse.ArgumentTypeError("--method cnn requires --model")
        net = load_model(args.model)
        predict = lambda img: predict_localization(net, img, grid, args.topk)  # noqa: E731
    elif args.method == "hough":
        predict = lambda img: detect_hough(img, grid, HoughParams(), args.topk)  # noqa: E731
    else:
        if manifest is None:
            raise argparse.ArgumentTypeError("--method center requires --manifest")
        labels = [pixel_to_cell(e.vp, grid) for e in manifest.select("train", has_vp=True)]
        baseline = center_baseline(labels, grid, "top5" if args.topk >= 5 else "top1")
        predict = lambda img: baseline  # noqa: E731

    if args.overlay_dir:
        args.overlay_dir.mkdir(parents=True, exist_ok=True)
    for name, img in items:
        pred = predict(img)
        print(_format_prediction(name, pred))
        if args.overlay_dir:
            write_pgm(render_overlay(img, pred), args.overlay_dir / (Path(name).stem + "_overlay.pgm"))


def cmd_baseline(args) -> None:
    manifest = DatasetManifest.read(args.manifest)
    grid = _grid_for(manifest, args.grid)
    labels = manifest.cells(manifest.select("train", has_vp=True), grid)
    pred = center_baseline(labels, grid, args.mode)
    print(_format_prediction(f"center-{args.mode}", pred))
    tests = manifest.select("test", has_vp=True)
    if tests:
        from .evaluation import evaluate

        row = evaluate([pred] * len(tests), manifest.cells(tests, grid), grid, f"center-{args.mode}")
        print(EvalReport([row]).to_table(chance=False), end="")


def cmd_eval(args) -> None:
    manifest = DatasetManifest.read(args.manifest)
    grids = args.grids or list(manifest.grids)
    model = load_model(args.model) if args.model else None
    existence = load_model(args.existence_model) if args.existence_model else None
    report = evaluate_methods(manifest, args.methods, grids, model, existence)
    if args.report:
        report.write(args.report)
    print(report.to_table(), end="")


def cmd_report(args) -> None:
    report = EvalReport.read(args.input)
    print(report.to_table(), end="")
    if args.tsv_out:
        report.write(args.tsv_out)


def cmd_pipeline(args) -> None:
    cfg = DeskConfig(
        seed=args.seed,
        localization_epochs=args.localization_epochs,
        existence_epochs=args.existence_epochs,
    )
    print(run_pipeline(args.out, cfg).to_table(), end="")


COMMANDS = {
    "gen": cmd_gen, "train": cmd_train, "detect": cmd_detect, "baseline": cmd_baseline,
    "eval": cmd_eval, "report": cmd_report, "pipeline": cmd_pipeline,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except argparse.ArgumentTypeError as exc:
        print(f"vpgrid {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (VPGridError, OSError, ValueError) as exc:
        print(f"vpgrid {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

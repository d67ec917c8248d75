"""``bcdet`` command line.

Every subcommand prints machine-readable JSON on stdout. Exit codes:
0 success, 2 usage error, 3 unreadable input or mismatched image sets,
4 schema/format violation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .annotations import (
    AnnotationError,
    AnnotationSet,
    Point,
    detections_to_dict,
    read_annotations,
    read_detections,
    write_annotations,
    write_detections,
)
from .codec import (
    CodecConfig,
    ShapeMismatchError,
    decode_detections,
    encode_targets,
    load_pack,
    save_pack,
)
from .geometry import nms_indices
from .losses import DetectionLossWeights, FocalParams, detection_total_loss
from .metrics import ImageMismatchError, evaluate_classification, evaluate_detections, ssim
from .neural_ops import select_key_patches
from .plotting import plot_pr_curves, plot_roc, write_pr_csv, write_roc_csv
from .segmentation import downsample_mask, kmeans_color, nucleus_mask_from_keypoints
from .synth import OracleConfig, SynthSpec, generate_wsi, oracle_predict
from .tensorio import ImageFormatError, TensorFormatError, read_image, read_tensor, write_image, write_tensor
from .tiling import TileDetection, extract_tile, merge_cross_tile, plan_grid, read_grid, remap_to_wsi, write_grid

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_SCHEMA = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    stride_r: int = 4
    sigma_div: float = 3.0
    num_classes: int = 4
    nms_iou: float = 0.5
    score_thr: float = 0.3
    top_k: int = 100
    tile_size: int = 512
    overlap: int = 128
    kmeans_k: int = 3
    seed: int = 0
    workers: int = os.cpu_count() or 1
    out_dir: str = "out"

    @classmethod
    def from_dict(cls, obj) -> "PipelineConfig":
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(obj) - set(known))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg = cls()
        for key, value in obj.items():
            setattr(cfg, key, _coerce(key, value, type(getattr(cfg, key))))
        return cfg

    def codec(self, width: int, height: int) -> CodecConfig:
        return CodecConfig(width, height, self.stride_r, self.num_classes, self.sigma_div, self.top_k, self.score_thr)


def _coerce(key, value, kind):
    if isinstance(value, bool) or (kind is int and not isinstance(value, int)):
        raise ConfigError(f"config key {key!r} must be {kind.__name__}")
    if kind is float and not isinstance(value, (int, float)):
        raise ConfigError(f"config key {key!r} must be a number")
    if kind is str and not isinstance(value, str):
        raise ConfigError(f"config key {key!r} must be a string")
    return kind(value)


_DEFAULTS = PipelineConfig()

# flag -> (config field, type, help)
_CONFIG_FLAGS = {
    "--stride-r": ("stride_r", int, "output stride R of the head tensors"),
    "--sigma-div": ("sigma_div", float, "Gaussian sigma = max(1, radius_grid / sigma_div)"),
    "--num-classes": ("num_classes", int, "heatmap channels (1 = class-agnostic, 4 = normal/mn/nb/npb)"),
    "--nms-iou": ("nms_iou", float, "circle IoU threshold for NMS / cross-tile merging"),
    "--score-thr": ("score_thr", float, "minimum peak score kept by the decoder"),
    "--top-k": ("top_k", int, "maximum peaks decoded per image"),
    "--tile-size": ("tile_size", int, "sliding-window tile size in pixels"),
    "--overlap": ("overlap", int, "tile overlap in pixels"),
    "--kmeans-k": ("kmeans_k", int, "number of colour layers"),
    "--seed": ("seed", int, "random seed"),
    "--workers": ("workers", int, "worker threads for per-tile work"),
    "--out-dir": ("out_dir", str, "output directory"),
}


def _cfg_flags(p: argparse.ArgumentParser, *flags: str) -> None:
    for flag in flags:
        key, kind, text = _CONFIG_FLAGS[flag]
        p.add_argument(flag, dest=key, type=kind, default=None,
                       help=f"{text} (default: {getattr(_DEFAULTS, key)})")


def _opt(p: argparse.ArgumentParser, *names, help: str, **kw) -> None:
    if kw.get("action") in ("store_true", "store_false"):
        p.add_argument(*names, help=f"{help} (default: off)", **kw)
    else:
        p.add_argument(*names, help=f"{help} (default: {kw.get('default')})", **kw)


def _resolve(args) -> PipelineConfig:
    cfg = PipelineConfig()
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        cfg = PipelineConfig.from_dict(obj)
    for f in fields(PipelineConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            setattr(cfg, f.name, value)
    return cfg


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=1, sort_keys=False)
    sys.stdout.write("\n")


def _image_id(path: str) -> str:
    return Path(path).name.split(".")[0]


# -- subcommands -------------------------------------------------------------


def cmd_synth(args, cfg: PipelineConfig) -> int:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = SynthSpec(
        args.width, args.height, args.cells, radius_range=(args.radius_min, args.radius_max),
        noise_sigma=args.image_noise, impurity_count=args.impurities, seed=cfg.seed, tile_size=cfg.tile_size,
    )
    slide = generate_wsi(spec)
    stem = out / args.stem
    files = [f"{stem}.ppm", f"{stem}.json", f"{stem}.layers.btnsr"]
    write_image(slide.image, files[0])
    write_annotations(slide.annotations, files[1])
    write_tensor(slide.layer_map, files[2])
    if args.oracle:
        oracle = OracleConfig(args.noise, args.offset_noise, args.radius_noise, args.drop_rate, cfg.seed)
        pack = oracle_predict(slide.annotations, cfg.codec(args.width, args.height), oracle)
        files += save_pack(pack, f"{stem}.pred")
    _emit({"cells": len(slide.annotations.cells), "files": files})
    return EXIT_OK


def cmd_encode(args, cfg: PipelineConfig) -> int:
    ann = read_annotations(args.annotations)
    stem = args.stem or str(Path(cfg.out_dir) / _image_id(args.annotations))
    Path(stem).parent.mkdir(parents=True, exist_ok=True)
    files = save_pack(encode_targets(ann, cfg.codec(ann.width, ann.height)), stem)
    _emit({"cells": len(ann.cells), "files": files})
    return EXIT_OK


def _decode_stem(stem: str, cfg: PipelineConfig):
    pack = load_pack(stem)
    _, h, w = pack.obj_heatmap.shape
    codec = cfg.codec(w * cfg.stride_r, h * cfg.stride_r)
    if pack.obj_heatmap.shape[0] != codec.num_classes:
        codec = CodecConfig(codec.input_width, codec.input_height, codec.stride, pack.obj_heatmap.shape[0],
                            codec.sigma_divisor, codec.top_k, codec.score_threshold)
    return decode_detections(pack, codec), codec


def cmd_decode(args, cfg: PipelineConfig) -> int:
    dets, codec = _decode_stem(args.stem, cfg)
    if args.nms:
        dets = [dets[i] for i in nms_indices([d.circle for d in dets], cfg.nms_iou, not args.class_agnostic)]
    extra = {"image": {"width": codec.input_width, "height": codec.input_height}}
    if args.tile_index is not None:
        extra["tile_index"] = args.tile_index
    if args.output:
        write_detections(dets, args.output, **extra)
    _emit(detections_to_dict(dets, **extra))
    return EXIT_OK


def cmd_nms(args, cfg: PipelineConfig) -> int:
    dets, meta = read_detections(args.detections)
    keep = nms_indices([d.circle for d in dets], cfg.nms_iou, not args.class_agnostic)
    _emit(detections_to_dict([dets[i] for i in keep], **meta))
    return EXIT_OK


def cmd_tile(args, cfg: PipelineConfig) -> int:
    wsi = read_image(args.image)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = plan_grid(wsi.shape[1], wsi.shape[0], cfg.tile_size, cfg.overlap)

    def work(i):
        path = str(out / f"tile_{i:04d}.ppm")
        write_image(extract_tile(wsi, grid, i), path)
        return path

    with ThreadPoolExecutor(max_workers=max(1, cfg.workers)) as pool:
        tiles = list(pool.map(work, range(len(grid))))
    grid_path = str(out / "grid.json")
    write_grid(grid, grid_path)
    _emit({"grid": grid_path, "tiles": tiles})
    return EXIT_OK


def cmd_merge(args, cfg: PipelineConfig) -> int:
    grid = read_grid(args.grid)
    tile_dets = []
    for path in args.detections:
        dets, meta = read_detections(path)
        if "tile_index" not in meta:
            raise AnnotationError(f"{path}: missing 'tile_index'")
        tile_dets += [TileDetection(int(meta["tile_index"]), d) for d in dets]
    dets, dropped = remap_to_wsi(tile_dets, grid)
    merged = merge_cross_tile(dets, cfg.nms_iou, not args.class_agnostic)
    result = detections_to_dict(merged, image={"width": grid.wsi_width, "height": grid.wsi_height},
                                dropped=dropped)
    if args.output:
        write_detections(merged, args.output, image=result["image"], dropped=dropped)
    _emit(result)
    return EXIT_OK


def _read_keypoints(path):
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise AnnotationError(f"invalid keypoint JSON: {exc}") from None
    raw = obj.get("keypoints") if isinstance(obj, dict) else obj
    if not isinstance(raw, list) or not raw:
        raise AnnotationError("keypoint file needs a non-empty 'keypoints' list")
    pts = []
    for p in raw:
        if isinstance(p, dict) and "x" in p and "y" in p:
            pts.append(Point(float(p["x"]), float(p["y"])))
        elif isinstance(p, (list, tuple)) and len(p) == 2:
            pts.append(Point(float(p[0]), float(p[1])))
        else:
            raise AnnotationError(f"bad keypoint entry {p!r}")
    return pts


def cmd_segment(args, cfg: PipelineConfig) -> int:
    image = read_image(args.image)
    keypoints = _read_keypoints(args.keypoints)
    result = kmeans_color(image, k=cfg.kmeans_k, seed=cfg.seed)
    nm = nucleus_mask_from_keypoints(result, keypoints)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = out / (args.stem or _image_id(args.image))
    mask = nm.mask
    if args.downsample:
        mask = downsample_mask(mask, args.downsample[0], args.downsample[1])
    files = [f"{stem}.labels.pgm", f"{stem}.mask.pgm", f"{stem}.mask.btnsr"]
    write_image(result.labels.astype(np.uint8), files[0])
    write_image((mask * 255).astype(np.uint8), files[1])
    write_tensor(mask.astype(np.uint8), files[2])
    _emit({
        "nucleus_cluster": nm.nucleus_cluster,
        "centroids": result.centroids.tolist(),
        "iterations": result.iterations,
        "inertia": result.inertia,
        "files": files,
    })
    return EXIT_OK


def cmd_ssim(args, cfg: PipelineConfig) -> int:
    _emit({"ssim": ssim(read_image(args.a), read_image(args.b))})
    return EXIT_OK


def cmd_loss(args, cfg: PipelineConfig) -> int:
    pred = load_pack(args.pred)
    target = load_pack(args.target)
    if target.obj_mask is None or target.kp_mask is None:
        raise AnnotationError("target stem needs .obj_mask and .kp_mask tensors")
    breakdown = detection_total_loss(
        pred, target, DetectionLossWeights(args.lambda_radius, args.lambda_offset), FocalParams(args.alpha, args.beta)
    )
    _emit(breakdown.to_dict())
    return EXIT_OK


def cmd_attn_select(args, cfg: PipelineConfig) -> int:
    stack = read_tensor(args.stack)
    if stack.ndim != 4:
        raise ShapeMismatchError(f"attention stack must be [L, H, T, T], got {stack.shape}")
    _emit({"indices": select_key_patches(list(stack), args.query_row, args.residual)})
    return EXIT_OK


def cmd_eval_det(args, cfg: PipelineConfig) -> int:
    gts = {_image_id(p): read_annotations(p) for p in args.gt}
    preds = {}
    for p in args.pred:
        preds[_image_id(p)] = read_detections(p)[0]
    if set(gts) != set(preds):
        raise ImageMismatchError(
            f"image ids differ: gt-only {sorted(set(gts) - set(preds))}, pred-only {sorted(set(preds) - set(gts))}"
        )
    ids = sorted(gts)
    report = evaluate_detections([gts[i] for i in ids], [preds[i] for i in ids], num_classes=cfg.num_classes)
    result = report.to_dict()
    if args.report_dir:
        result["files"] = _write_det_report(report, Path(args.report_dir))
    _emit(result)
    return EXIT_OK


def _write_det_report(report, out: Path) -> list[str]:
    out.mkdir(parents=True, exist_ok=True)
    files = [str(out / "eval_det.json"), str(out / "pr_curves.csv"), str(out / "pr_curves.png")]
    with open(files[0], "w") as fh:
        json.dump(report.to_dict(), fh, indent=1)
        fh.write("\n")
    write_pr_csv(report, files[1])
    plot_pr_curves(report, files[2])
    return files


def cmd_eval_cls(args, cfg: PipelineConfig) -> int:
    with open(args.input) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise AnnotationError(f"invalid JSON: {exc}") from None
    if not isinstance(obj, dict) or "labels" not in obj or "predicted" not in obj:
        raise AnnotationError("classification input needs 'labels' and 'predicted'")
    report = evaluate_classification(obj["labels"], obj["predicted"], obj.get("scores"),
                                     positive_class=args.positive_class)
    result = report.to_dict()
    if args.report_dir and report.roc is not None:
        out = Path(args.report_dir)
        out.mkdir(parents=True, exist_ok=True)
        files = [str(out / "roc.csv"), str(out / "roc.png")]
        write_roc_csv(report, files[0])
        plot_roc(report, files[1])
        result["files"] = files
    _emit(result)
    return EXIT_OK


def run_pipeline(cfg: PipelineConfig, width: int, height: int, cells: int, noise: float,
                 image_noise: float = 5.0) -> dict:
    """synth -> encode -> oracle -> tile -> decode -> merge -> eval-det, all artifacts under out_dir."""
    out = Path(cfg.out_dir)
    tiles_dir = out / "tiles"
    tiles_dir.mkdir(parents=True, exist_ok=True)
    slide = generate_wsi(SynthSpec(width, height, cells, noise_sigma=image_noise, seed=cfg.seed,
                                   tile_size=cfg.tile_size))
    write_image(slide.image, out / "slide.ppm")
    write_annotations(slide.annotations, out / "slide.json")
    save_pack(encode_targets(slide.annotations, cfg.codec(width, height)), out / "slide.target")

    grid = plan_grid(width, height, cfg.tile_size, cfg.overlap)
    write_grid(grid, out / "grid.json")
    tile_codec = cfg.codec(cfg.tile_size, cfg.tile_size)

    def work(i):
        ox, oy = grid.origins[i]
        write_image(extract_tile(slide.image, grid, i), tiles_dir / f"tile_{i:04d}.ppm")
        t = cfg.tile_size
        local = [c.translated(-ox, -oy) for c in slide.annotations.cells
                 if ox <= c.cx < ox + t and oy <= c.cy < oy + t]
        oracle = OracleConfig(heatmap_noise=noise, seed=cfg.seed ^ i)
        pack = oracle_predict(AnnotationSet(t, t, local), tile_codec, oracle)
        dets = decode_detections(pack, tile_codec)
        write_detections(dets, tiles_dir / f"tile_{i:04d}.det.json", tile_index=i)
        return [TileDetection(i, d) for d in dets]

    with ThreadPoolExecutor(max_workers=max(1, cfg.workers)) as pool:
        per_tile = list(pool.map(work, range(len(grid))))
    remapped, dropped = remap_to_wsi([td for tds in per_tile for td in tds], grid)
    merged = merge_cross_tile(remapped, cfg.nms_iou)
    write_detections(merged, out / "slide.det.json", image={"width": width, "height": height}, dropped=dropped)

    report = evaluate_detections([slide.annotations], [merged], num_classes=cfg.num_classes)
    result = report.to_dict()
    result.update(cells=len(slide.annotations.cells), detections=len(merged), tiles=len(grid), dropped=dropped)
    result["files"] = _write_det_report(report, out)
    return result


def cmd_pipeline(args, cfg: PipelineConfig) -> int:
    _emit(run_pipeline(cfg, args.width, args.height, args.cells, args.noise, args.image_noise))
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bcdet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        _opt(p, "--config", default=None, help="JSON config file; explicit flags override it")
        p.set_defaults(func=func)
        return p

    def synth_shape(p, width, height, cells):
        _opt(p, "--width", type=int, default=width, help="slide width in pixels")
        _opt(p, "--height", type=int, default=height, help="slide height in pixels")
        _opt(p, "--cells", type=int, default=cells, help="number of cells")
        _opt(p, "--image-noise", type=float, default=5.0, help="pixel noise sigma in gray levels")

    p = add("synth", cmd_synth, "generate a synthetic slide with annotations and a layer map")
    synth_shape(p, 1024, 768, 20)
    _opt(p, "--radius-min", type=float, default=20.0, help="minimum cell radius")
    _opt(p, "--radius-max", type=float, default=40.0, help="maximum cell radius")
    _opt(p, "--impurities", type=int, default=0, help="naked-nucleus debris blobs")
    _opt(p, "--stem", default="slide", help="output file stem")
    _opt(p, "--oracle", action="store_true", help="also write oracle prediction tensors")
    _opt(p, "--noise", type=float, default=0.0, help="oracle heatmap noise sigma")
    _opt(p, "--offset-noise", type=float, default=0.0, help="oracle offset noise sigma (grid units)")
    _opt(p, "--radius-noise", type=float, default=0.0, help="oracle radius noise sigma (grid units)")
    _opt(p, "--drop-rate", type=float, default=0.0, help="oracle probability of dropping an object")
    _cfg_flags(p, "--seed", "--out-dir", "--stride-r", "--sigma-div", "--num-classes", "--top-k",
               "--score-thr", "--tile-size")

    p = add("encode", cmd_encode, "encode an annotation file into target tensors")
    _opt(p, "--annotations", required=True, help="annotation JSON")
    _opt(p, "--stem", default=None, help="output tensor stem (None = <out-dir>/<image id>)")
    _cfg_flags(p, "--stride-r", "--sigma-div", "--num-classes", "--out-dir")

    p = add("decode", cmd_decode, "decode prediction tensors into detections")
    _opt(p, "--stem", required=True, help="tensor stem, reads <stem>.obj_hm.btnsr etc.")
    _opt(p, "--output", default=None, help="also write the detection JSON here")
    _opt(p, "--tile-index", type=int, default=None, help="tag the output with this tile index")
    _opt(p, "--nms", action="store_true", help="apply circle NMS after decoding")
    _opt(p, "--class-agnostic", action="store_true", help="NMS across classes")
    _cfg_flags(p, "--stride-r", "--score-thr", "--top-k", "--nms-iou", "--num-classes")

    p = add("nms", cmd_nms, "greedy circle NMS over a detection file")
    _opt(p, "--detections", required=True, help="detection JSON")
    _opt(p, "--class-agnostic", action="store_true", help="suppress across classes")
    _cfg_flags(p, "--nms-iou")

    p = add("tile", cmd_tile, "cut a slide image into gray-padded tiles")
    _opt(p, "--image", required=True, help="slide image (PPM/PGM)")
    _cfg_flags(p, "--tile-size", "--overlap", "--out-dir", "--workers")

    p = add("merge", cmd_merge, "merge per-tile detections into slide coordinates")
    _opt(p, "--grid", required=True, help="grid JSON from 'tile'")
    _opt(p, "--detections", nargs="+", required=True, help="per-tile detection JSON files")
    _opt(p, "--output", default=None, help="also write the merged detection JSON here")
    _opt(p, "--class-agnostic", action="store_true", help="merge across classes")
    _cfg_flags(p, "--nms-iou")

    p = add("segment", cmd_segment, "colour-layer segmentation and nucleus background mask")
    _opt(p, "--image", required=True, help="cell patch image (PPM)")
    _opt(p, "--keypoints", required=True, help="JSON with a 'keypoints' list of {x, y}")
    _opt(p, "--stem", default=None, help="output stem (None = image id)")
    _opt(p, "--downsample", type=int, nargs=2, metavar=("H", "W"), default=None,
         help="nearest-neighbour resize of the mask")
    _cfg_flags(p, "--kmeans-k", "--seed", "--out-dir")

    p = add("ssim", cmd_ssim, "global SSIM between two images")
    _opt(p, "--a", required=True, help="first image")
    _opt(p, "--b", required=True, help="second image")

    p = add("loss", cmd_loss, "detection loss breakdown for prediction vs target tensors")
    _opt(p, "--pred", required=True, help="prediction tensor stem")
    _opt(p, "--target", required=True, help="target tensor stem (with masks)")
    _opt(p, "--alpha", type=float, default=2.0, help="focal alpha")
    _opt(p, "--beta", type=float, default=4.0, help="focal beta")
    _opt(p, "--lambda-radius", type=float, default=0.1, help="radius loss weight")
    _opt(p, "--lambda-offset", type=float, default=1.0, help="offset loss weight")

    p = add("attn-select", cmd_attn_select, "per-head key patch selection from an attention stack")
    _opt(p, "--stack", required=True, help="tensor file [L, H, T, T]")
    _opt(p, "--query-row", type=int, default=0, help="query token row")
    _opt(p, "--residual", action="store_true", help="mix each layer with identity before multiplying")

    p = add("eval-det", cmd_eval_det, "COCO-style AP / recall / F1 for circle detections")
    _opt(p, "--gt", nargs="+", required=True, help="annotation JSON files; image id = name before first dot")
    _opt(p, "--pred", nargs="+", required=True, help="detection JSON files; image id = name before first dot")
    _opt(p, "--report-dir", default=None, help="write JSON, PR-curve CSV and PNG here")
    _cfg_flags(p, "--num-classes")

    p = add("eval-cls", cmd_eval_cls, "confusion matrix, accuracy, ROC/AUC")
    _opt(p, "--input", required=True, help="JSON with 'labels', 'predicted' and optional 'scores'")
    _opt(p, "--positive-class", type=int, default=1, help="class treated as positive for ROC")
    _opt(p, "--report-dir", default=None, help="write ROC CSV and PNG here")

    p = add("pipeline", cmd_pipeline, "synthetic end-to-end run: synth, encode, oracle, tile, decode, merge, eval")
    synth_shape(p, 1536, 1024, 40)
    _opt(p, "--noise", type=float, default=0.0, help="oracle heatmap noise sigma")
    _cfg_flags(p, "--seed", "--out-dir", "--stride-r", "--sigma-div", "--num-classes", "--nms-iou",
               "--score-thr", "--top-k", "--tile-size", "--overlap", "--workers")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve(args)
        return args.func(args, cfg)
    except (ImageMismatchError, OSError) as exc:
        print(f"bcdet {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (AnnotationError, TensorFormatError, ImageFormatError, ConfigError, ShapeMismatchError,
            ValueError) as exc:
        print(f"bcdet {args.command}: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())

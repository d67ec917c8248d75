import argparse
import json
import re

import numpy as np
import pytest

from bcdet import cli
from bcdet.annotations import AnnotationSet, CircleAnnotation, Detection, Point, write_annotations, write_detections
from bcdet.codec import CodecConfig, TargetPack, save_pack
from bcdet.geometry import Circle, ScoredCircle
from bcdet.synth import generate_cell_patch
from bcdet.tensorio import write_image, write_tensor


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def _subparsers():
    parser = cli.build_parser()
    action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    return action.choices


SUBCOMMANDS = ["synth", "encode", "decode", "nms", "tile", "merge", "segment", "ssim", "loss",
               "attn-select", "eval-det", "eval-cls", "pipeline"]


def test_all_subcommands_exist():
    assert sorted(_subparsers()) == sorted(SUBCOMMANDS)


@pytest.mark.parametrize("name", SUBCOMMANDS)
def test_help_lists_every_flag_with_default(name, capsys):
    sub = _subparsers()[name]
    with pytest.raises(SystemExit) as exc:
        cli.main([name, "--help"])
    assert exc.value.code == 0
    text = re.sub(r"\s+", " ", capsys.readouterr().out)
    for action in sub._actions:
        if isinstance(action, argparse._HelpAction):
            continue
        for flag in action.option_strings:
            assert flag in text
        assert "(default:" in action.help


def test_required_flags_present():
    flags = set()
    for sub in _subparsers().values():
        for action in sub._actions:
            flags.update(action.option_strings)
    for f in ["--tile-size", "--overlap", "--stride-r", "--sigma-div", "--nms-iou", "--score-thr", "--top-k",
              "--kmeans-k", "--seed", "--workers", "--out-dir"]:
        assert f in flags


def test_unknown_flag_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["nms", "--detections", "x.json", "--bogus"])
    assert exc.value.code == 2


def test_unreadable_input_exit_3(tmp_path, capsys):
    code, _, err = run(capsys, "nms", "--detections", tmp_path / "missing.json")
    assert code == 3 and "missing.json" in err


def test_schema_violation_exit_4(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"image": {"width": 10, "height": 10},
                               "cells": [{"class": "xyz", "cx": 1, "cy": 1, "r": 1,
                                          "nuclei": [{"x": 0, "y": 0}, {"x": 1, "y": 1}]}]}))
    code, _, err = run(capsys, "encode", "--annotations", bad, "--out-dir", tmp_path)
    assert code == 4 and "xyz" in err
    (tmp_path / "junk.obj_hm.btnsr").write_bytes(b"NOTATENSOR")
    code, _, _ = run(capsys, "decode", "--stem", tmp_path / "junk")
    assert code == 4


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"nms_iou": 0.3, "seed": 5}))
    args = cli.build_parser().parse_args(["nms", "--detections", "d.json", "--config", str(cfg), "--nms-iou", "0.7"])
    resolved = cli._resolve(args)
    assert resolved.nms_iou == 0.7 and resolved.seed == 5
    cfg.write_text(json.dumps({"nms_iuo": 0.3}))
    (tmp_path / "d.json").write_text(json.dumps({"detections": []}))
    code, _, err = run(capsys, "nms", "--detections", tmp_path / "d.json", "--config", cfg)
    assert code == 4 and "nms_iuo" in err


def test_decode_flat_zero(tmp_path, capsys):
    save_pack(TargetPack.zeros(CodecConfig(64, 64)), tmp_path / "z")
    code, out, _ = run(capsys, "decode", "--stem", tmp_path / "z")
    assert code == 0
    assert json.loads(out)["detections"] == []


def test_synth_encode_decode_nms(tmp_path, capsys):
    code, out, _ = run(capsys, "synth", "--width", 512, "--height", 512, "--cells", 6, "--seed", 3,
                       "--oracle", "--out-dir", tmp_path)
    assert code == 0 and json.loads(out)["cells"] == 6
    code, out, _ = run(capsys, "encode", "--annotations", tmp_path / "slide.json", "--stem", tmp_path / "enc")
    assert code == 0 and (tmp_path / "enc.kp_loff.btnsr").exists()
    code, out, _ = run(capsys, "decode", "--stem", tmp_path / "slide.pred", "--output", tmp_path / "slide.det.json",
                       "--nms")
    assert code == 0 and len(json.loads(out)["detections"]) == 6
    code, out, _ = run(capsys, "nms", "--detections", tmp_path / "slide.det.json")
    assert code == 0 and len(json.loads(out)["detections"]) == 6
    code, out, _ = run(capsys, "loss", "--pred", tmp_path / "slide.pred", "--target", tmp_path / "enc")
    loss = json.loads(out)
    # oracle regression heads equal the targets at supervised cells
    assert code == 0 and loss["raw"]["radius"] == 0.0 and loss["raw"]["offset"] == 0.0
    code, out, _ = run(capsys, "eval-det", "--gt", tmp_path / "slide.json", "--pred", tmp_path / "slide.det.json",
                       "--report-dir", tmp_path / "rep")
    rep = json.loads(out)
    assert code == 0 and rep["ap"] == 1.0
    for f in rep["files"]:
        assert (tmp_path / "rep").joinpath(f.split("/")[-1]).stat().st_size > 0


def test_eval_det_mismatched_ids(tmp_path, capsys):
    ann = AnnotationSet(100, 100, [CircleAnnotation("normal", 50, 50, 10, (Point(45, 50), Point(55, 50)))])
    write_annotations(ann, tmp_path / "a.json")
    write_detections([], tmp_path / "b.det.json")
    code, _, err = run(capsys, "eval-det", "--gt", tmp_path / "a.json", "--pred", tmp_path / "b.det.json")
    assert code == 3 and "image ids" in err


def test_tile_and_merge(tmp_path, capsys):
    wsi = np.random.default_rng(0).integers(0, 256, (800, 1000, 3), dtype=np.uint8)
    write_image(wsi, tmp_path / "wsi.ppm")
    code, out, _ = run(capsys, "tile", "--image", tmp_path / "wsi.ppm", "--out-dir", tmp_path / "t", "--workers", 2)
    assert code == 0 and len(json.loads(out)["tiles"]) == 6
    d = Detection(ScoredCircle(Circle(100, 50, 20), 0.9, 0), (Point(95, 50), Point(105, 50)))
    write_detections([d], tmp_path / "t0.json", tile_index=1)
    write_detections([d.translated(384, 0)], tmp_path / "t1.json", tile_index=0)
    code, out, _ = run(capsys, "merge", "--grid", tmp_path / "t" / "grid.json",
                       "--detections", tmp_path / "t0.json", tmp_path / "t1.json")
    dets = json.loads(out)["detections"]
    assert code == 0 and len(dets) == 1 and dets[0]["cx"] == 484


def test_segment_ssim_attn_eval_cls(tmp_path, capsys):
    patch = generate_cell_patch("normal", seed=1, noise_sigma=0.0)
    write_image(patch.image, tmp_path / "p.ppm")
    (tmp_path / "kp.json").write_text(json.dumps({"keypoints": [{"x": p.x, "y": p.y} for p in patch.cell.nuclei]}))
    code, out, _ = run(capsys, "segment", "--image", tmp_path / "p.ppm", "--keypoints", tmp_path / "kp.json",
                       "--out-dir", tmp_path, "--downsample", 32, 32)
    assert code == 0 and len(json.loads(out)["files"]) == 3

    code, out, _ = run(capsys, "ssim", "--a", tmp_path / "p.ppm", "--b", tmp_path / "p.ppm")
    assert code == 0 and json.loads(out)["ssim"] == 1.0

    stack = np.stack([np.stack([np.eye(3, dtype=np.float32)] * 2)])
    write_tensor(stack, tmp_path / "att.btnsr")
    code, out, _ = run(capsys, "attn-select", "--stack", tmp_path / "att.btnsr")
    assert code == 0 and json.loads(out)["indices"] == [1, 1]

    (tmp_path / "cls.json").write_text(json.dumps({"labels": [1, 0, 1, 0], "predicted": [1, 1, 0, 0],
                                                   "scores": [0.9, 0.8, 0.3, 0.2]}))
    code, out, _ = run(capsys, "eval-cls", "--input", tmp_path / "cls.json", "--report-dir", tmp_path / "roc")
    assert code == 0 and json.loads(out)["auc"] == 0.75
    assert (tmp_path / "roc" / "roc.png").stat().st_size > 0


def test_pipeline_zero_noise(tmp_path, capsys):
    code, out, _ = run(capsys, "pipeline", "--seed", 7, "--cells", 40, "--noise", 0, "--out-dir", tmp_path)
    rep = json.loads(out)
    assert code == 0 and rep["ap"] == 1.0 and rep["detections"] == 40

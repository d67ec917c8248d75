import json

import pytest

from bcdet.annotations import (
    AnnotationError,
    AnnotationSet,
    CircleAnnotation,
    NucleiArityError,
    Point,
    UnknownClassError,
    read_annotations,
    read_detections,
    write_annotations,
    write_detections,
)
from bcdet.annotations import Detection
from bcdet.geometry import Circle, ScoredCircle

ONE_CELL = {
    "image": {"width": 64, "height": 48},
    "cells": [
        {"class": "npb", "cx": 30.5, "cy": 20.25, "r": 9.0, "nuclei": [{"x": 27.0, "y": 20.0}, {"x": 34.0, "y": 21.0}]}
    ],
}


def _write(tmp_path, obj):
    path = tmp_path / "a.json"
    path.write_text(json.dumps(obj))
    return path


def test_one_cell_roundtrip(tmp_path):
    ann = read_annotations(_write(tmp_path, ONE_CELL))
    assert ann.width == 64 and ann.cells[0].cls == "npb"
    write_annotations(ann, tmp_path / "b.json")
    assert read_annotations(tmp_path / "b.json") == ann
    assert json.loads((tmp_path / "b.json").read_text()) == ONE_CELL


def test_unknown_class(tmp_path):
    bad = json.loads(json.dumps(ONE_CELL))
    bad["cells"][0]["class"] = "xyz"
    with pytest.raises(UnknownClassError):
        read_annotations(_write(tmp_path, bad))


def test_three_nuclei_is_an_arity_error(tmp_path):
    bad = json.loads(json.dumps(ONE_CELL))
    bad["cells"][0]["nuclei"].append({"x": 30.0, "y": 20.0})
    with pytest.raises(NucleiArityError):
        read_annotations(_write(tmp_path, bad))


def test_missing_nuclei(tmp_path):
    bad = json.loads(json.dumps(ONE_CELL))
    del bad["cells"][0]["nuclei"]
    with pytest.raises(NucleiArityError, match="missing"):
        read_annotations(_write(tmp_path, bad))


@pytest.mark.parametrize(
    "patch",
    [{"cx": 64.0}, {"cy": -1.0}, {"r": 0.0}, {"r": "big"}],
    ids=["center-x-out", "center-y-out", "zero-radius", "string-radius"],
)
def test_invalid_cells(tmp_path, patch):
    bad = json.loads(json.dumps(ONE_CELL))
    bad["cells"][0].update(patch)
    with pytest.raises(AnnotationError):
        read_annotations(_write(tmp_path, bad))


def test_ordered_nuclei_left_first():
    c = CircleAnnotation("normal", 10, 10, 5, (Point(12, 9), Point(8, 11)))
    left, right = c.ordered_nuclei()
    assert left == Point(8, 11) and right == Point(12, 9)


def test_detection_roundtrip(tmp_path):
    det = Detection(ScoredCircle(Circle(1.5, 2.5, 3.0), 0.75, 2), (Point(1, 2), Point(2, 3)), (0, 1))
    write_detections([det], tmp_path / "d.json", tile_index=3)
    dets, meta = read_detections(tmp_path / "d.json")
    assert dets == [det] and meta == {"tile_index": 3}


def test_annotation_set_rejects_out_of_bounds():
    with pytest.raises(AnnotationError):
        AnnotationSet(10, 10, [CircleAnnotation("normal", 11, 5, 2, (Point(10, 5), Point(12, 5)))])

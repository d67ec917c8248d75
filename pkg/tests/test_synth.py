import math
from collections import deque

import numpy as np
import pytest

from bcdet.codec import CodecConfig, decode_detections
from bcdet.metrics import evaluate_detections
from bcdet.synth import (
    CLASS_NAMES,
    NUCLEUS,
    InfeasibleSpecError,
    OracleConfig,
    SynthSpec,
    generate_cell_patch,
    generate_wsi,
    make_rng,
    oracle_predict,
    paint_cell_nuclei,
    random_annotation_set,
)

# AP50 of the oracle at heatmap_noise=0.05 on the 50-image set below, measured
# once (0.97535) and frozen; the tests allow +/-0.03 around it.
PINNED_NOISY_AP50 = 0.97535


def test_rng_is_reproducible():
    assert make_rng(5).random(4).tolist() == make_rng(5).random(4).tolist()
    # PCG64 stream is fixed by numpy, so this first draw never changes
    assert make_rng(0).integers(0, 2**32) == np.random.Generator(np.random.PCG64(0)).integers(0, 2**32)


def test_wsi_determinism():
    spec = SynthSpec(640, 480, 8, seed=11)
    a, b = generate_wsi(spec), generate_wsi(spec)
    assert np.array_equal(a.image, b.image)
    assert a.annotations == b.annotations
    assert np.array_equal(a.layer_map, b.layer_map)
    c = generate_wsi(SynthSpec(640, 480, 8, seed=12))
    assert not np.array_equal(a.image, c.image)


def test_class_mix_all_normal():
    ann = generate_wsi(SynthSpec(800, 600, 10, class_mix=(1.0, 0.0, 0.0, 0.0), seed=2)).annotations
    assert {c.cls for c in ann.cells} == {"normal"}


def test_nuclei_inside_cells():
    total = 0
    for seed in range(20):
        ann = generate_wsi(SynthSpec(2048, 1536, 50, seed=seed, noise_sigma=0.0)).annotations
        for c in ann.cells:
            for p in c.nuclei:
                assert math.hypot(p.x - c.cx, p.y - c.cy) < c.r
            total += 1
    assert total == 1000


def test_layer_map_matches_annotations():
    slide = generate_wsi(SynthSpec(1024, 768, 20, seed=4, noise_sigma=0.0))
    repaint = np.zeros_like(slide.layer_map)
    for g in slide.geometry:
        paint_cell_nuclei(repaint, g)
    assert np.array_equal(repaint == NUCLEUS, slide.layer_map == NUCLEUS)
    # every nucleus centre is painted as nucleus
    for c in slide.annotations.cells:
        for p in c.nuclei:
            assert slide.layer_map[int(p.y), int(p.x)] == NUCLEUS


def test_infeasible_spec():
    with pytest.raises(InfeasibleSpecError):
        generate_wsi(SynthSpec(200, 200, 50, max_overlap=0.0, max_retries=50))
    with pytest.raises(ValueError):
        SynthSpec(class_mix=(0.5, 0.5, 0.5, 0.5))


def test_patch_determinism():
    a, b = generate_cell_patch("mn", seed=9), generate_cell_patch("mn", seed=9)
    assert np.array_equal(a.image, b.image) and a.cell == b.cell
    assert a.image.shape == (128, 128, 3)


def _connected(mask, start, goal):
    h, w = mask.shape
    seen = np.zeros_like(mask, dtype=bool)
    q = deque([start])
    seen[start] = True
    while q:
        y, x = q.popleft()
        if (y, x) == goal:
            return True
        for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            ny, nx = y + dy, x + dx
            if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] and not seen[ny, nx]:
                seen[ny, nx] = True
                q.append((ny, nx))
    return False


def test_npb_bridge_is_connected():
    for seed in range(5):
        patch = generate_cell_patch("npb", seed=seed, noise_sigma=5.0)
        dark = patch.image.astype(float) @ np.array([0.299, 0.587, 0.114]) < 120
        a, b = patch.cell.nuclei
        assert _connected(dark, (int(a.y), int(a.x)), (int(b.y), int(b.x)))


def test_non_npb_nuclei_are_separate():
    patch = generate_cell_patch("normal", seed=1, noise_sigma=0.0)
    a, b = patch.cell.nuclei
    assert not _connected(patch.layer_map == NUCLEUS, (int(a.y), int(a.x)), (int(b.y), int(b.x)))


def test_oracle_zero_noise_is_identity():
    cfg = CodecConfig(1024, 768)
    ann = random_annotation_set(1024, 768, 25, seed=3)
    dets = decode_detections(oracle_predict(ann, cfg), cfg)
    assert len(dets) == len(ann.cells)
    rep = evaluate_detections([ann], [dets])
    assert rep.ap == 1.0


def test_oracle_drop_all():
    cfg = CodecConfig(512, 512)
    ann = random_annotation_set(512, 512, 10, seed=0)
    assert decode_detections(oracle_predict(ann, cfg, OracleConfig(drop_rate=1.0)), cfg) == []


def test_ap_monotone_in_drop_rate():
    cfg = CodecConfig(512, 512)
    sets = [random_annotation_set(512, 512, 12, seed=s) for s in range(8)]
    aps = []
    for rate in (0.0, 0.2, 0.5, 1.0):
        preds = [decode_detections(oracle_predict(a, cfg, OracleConfig(drop_rate=rate, seed=i)), cfg)
                 for i, a in enumerate(sets)]
        aps.append(evaluate_detections(sets, preds).ap)
    assert aps[0] == 1.0 and aps[-1] == 0.0
    assert all(x >= y for x, y in zip(aps, aps[1:]))


def test_noisy_oracle_ap50_pinned():
    cfg = CodecConfig(512, 512)
    gts, preds = [], []
    for i in range(50):
        ann = random_annotation_set(512, 512, 12, seed=1000 + i)
        gts.append(ann)
        preds.append(decode_detections(oracle_predict(ann, cfg, OracleConfig(heatmap_noise=0.05, seed=i)), cfg))
    ap50 = evaluate_detections(gts, preds).ap50
    assert ap50 >= 0.95
    assert abs(ap50 - PINNED_NOISY_AP50) <= 0.03


def test_oracle_config_validation():
    with pytest.raises(ValueError):
        OracleConfig(drop_rate=1.5)
    with pytest.raises(ValueError):
        OracleConfig(heatmap_noise=-0.1)


@pytest.mark.parametrize("cls", CLASS_NAMES)
def test_patch_classes_render(cls):
    patch = generate_cell_patch(cls, seed=0, noise_sigma=0.0)
    assert patch.cell.cls == cls
    assert (patch.layer_map == NUCLEUS).any()

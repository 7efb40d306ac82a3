"""Generate the bundled end-to-end fixture scene.

Run from the repository root::

    python3 tests/fixtures/make_fixture.py

Writes a small 6-band cube with three object classes, a proposals document,
a run config, a hand-perturbed truth mask and the expected pipeline numbers.
The expected final mask is computed here with plain numpy set expressions,
independent of the filtering implementation, so tests can treat these
values as frozen reference data.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "src"))

from hsmask.envi import HyperCube, write_cube_files
from hsmask.masks import BinaryMask

OUT_DIR = Path(__file__).resolve().parent

BANDS = 6
LINES = 24
SAMPLES = 32
WAVELENGTHS = [500.0, 540.0, 580.0, 620.0, 660.0, 700.0]

# object footprints (x0, y0, x1, y1), half-open
RECT_A = (2, 3, 9, 10)      # pellet with a 620 nm dip
RECT_B = (7, 8, 14, 16)     # glare patch overlapping A
RECT_C = (20, 14, 29, 22)   # pellet with a 580 nm dip
RECT_D = (24, 2, 27, 5)     # stray object no detection refers to


def rect_bitmap(box):
    x0, y0, x1, y1 = box
    bitmap = np.zeros((LINES, SAMPLES), dtype=bool)
    bitmap[y0:y1, x0:x1] = True
    return bitmap


def dip_spectrum(base: float, center_nm: float, depth: float) -> np.ndarray:
    wl = np.asarray(WAVELENGTHS)
    shape = np.maximum(0.0, 1.0 - ((wl - center_nm) / 90.0) ** 2)
    return base + 0.02 * (wl - 500.0) / 200.0 - depth * shape


def build_cube(rng) -> HyperCube:
    data = np.empty((BANDS, LINES, SAMPLES), dtype=np.float64)
    background = dip_spectrum(0.42, 0.0, 0.0)
    for b in range(BANDS):
        data[b] = background[b]
    spectra = {
        "a": dip_spectrum(0.55, 620.0, 0.18),
        "b": dip_spectrum(0.80, 0.0, 0.0),
        "c": dip_spectrum(0.50, 580.0, 0.15),
        "d": dip_spectrum(0.35, 660.0, 0.08),
    }
    for box, key in ((RECT_A, "a"), (RECT_B, "b"), (RECT_C, "c"), (RECT_D, "d")):
        bitmap = rect_bitmap(box)
        for b in range(BANDS):
            band = data[b]
            band[bitmap] = spectra[key][b]
    data += rng.normal(0.0, 0.004, size=data.shape)
    data = np.clip(data, 0.05, None)
    return HyperCube.from_array(data.astype(np.float32), wavelengths=WAVELENGTHS)


def proposal_entry(pid: int, bitmap, iou: float, stability: float) -> dict:
    mask = BinaryMask.from_bitmap(bitmap)
    ys, xs = np.nonzero(bitmap)
    return {
        "id": pid,
        "mask": mask.to_json(),
        "bbox": {"x0": int(xs.min()), "y0": int(ys.min()),
                 "x1": int(xs.max()) + 1, "y1": int(ys.max()) + 1},
        "predicted_iou": iou,
        "stability_score": stability,
    }


def main():
    rng = np.random.default_rng(7041)
    cube = build_cube(rng)
    write_cube_files(cube, OUT_DIR / "cube")

    a, b, c, d = (rect_bitmap(box) for box in (RECT_A, RECT_B, RECT_C, RECT_D))
    proposals = [
        proposal_entry(1, a, 0.92, 0.97),
        proposal_entry(2, b, 0.88, 0.93),
        proposal_entry(3, c, 0.95, 0.96),
        proposal_entry(4, d, 0.81, 0.90),
    ]
    detections = [
        {"bbox": {"x0": 1, "y0": 2, "x1": 10, "y1": 11},
         "phrase": "pellet", "confidence": 0.86},
        {"bbox": {"x0": 19, "y0": 13, "x1": 30, "y1": 23},
         "phrase": "pellet", "confidence": 0.78},
        {"bbox": {"x0": 6, "y0": 7, "x1": 15, "y1": 17},
         "phrase": "glare", "confidence": 0.64},
    ]
    config = {
        "band_triple": [4, 2, 0],
        "stretch": [2.0, 98.0],
        "points_per_side": 128,
        "points_per_batch": 128,
        "pred_iou_thresh": 0.7,
        "crop_n_points_downscale_factor": 1,
        "margin_c": 2,
        "no_data_fill": None,
        "prompts": [
            {"text": "pellet", "role": "keep",
             "box_threshold": 0.4, "text_threshold": 0.4},
            {"text": "glare", "role": "exclude",
             "box_threshold": 0.3, "text_threshold": 0.3},
        ],
        "analysis": {"pca_components": 3, "mwm_depth_threshold": 0.01},
    }
    document = {
        "image": {"width": SAMPLES, "height": LINES},
        "proposals": proposals,
        "detections": detections,
        "config_echo": config,
    }
    (OUT_DIR / "proposals.json").write_text(
        json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (OUT_DIR / "config.json").write_text(
        json.dumps(config, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    # expected outcome, by direct set expression: keep detections cover A
    # (proposal 1) and C (proposal 3); the glare detection covers B
    # (proposal 2); D is unmatched
    final = (a | c) & ~b

    # truth: final plus a rim around C's right edge (false negatives for the
    # prediction) minus a bite out of A (false positives for the prediction)
    truth = final.copy()
    truth[14:22, 29:31] = True
    truth[3:6, 2:5] = False
    truth_mask = BinaryMask.from_bitmap(truth)
    assert np.array_equal(truth_mask.to_bitmap(), truth)
    (OUT_DIR / "truth_mask.rle.json").write_text(
        json.dumps(truth_mask.to_json(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")

    tp = int((final & truth).sum())
    fp = int((final & ~truth).sum())
    fn = int((~final & truth).sum())
    tn = int((~final & ~truth).sum())
    expected = {
        "final_popcount": int(final.sum()),
        "total_vectors": LINES * SAMPLES,
        "kept_ids": [1, 3],
        "excluded_ids": [2],
        "unmatched_ids": [4],
        "eval": {"tp": tp, "fp": fp, "fn": fn, "tn": tn},
    }
    (OUT_DIR / "expected.json").write_text(
        json.dumps(expected, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(json.dumps(expected, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()

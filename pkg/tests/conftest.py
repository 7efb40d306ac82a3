from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hsmask.masks import BBox, BinaryMask
from hsmask.proposals import Detection, SegmentProposal

import oracles

FIXTURE_DIR = Path(__file__).parent / "fixtures"


def random_bitmap(rng: np.random.Generator, width: int, height: int,
                  density: float = 0.4) -> np.ndarray:
    return rng.random((height, width)) < density


def random_blob(rng: np.random.Generator, width: int, height: int) -> np.ndarray:
    """A filled random rectangle with some pixels knocked out; never empty."""
    x0 = int(rng.integers(0, width - 1))
    y0 = int(rng.integers(0, height - 1))
    x1 = int(rng.integers(x0 + 1, width + 1))
    y1 = int(rng.integers(y0 + 1, height + 1))
    bitmap = np.zeros((height, width), dtype=bool)
    bitmap[y0:y1, x0:x1] = True
    holes = rng.random((y1 - y0, x1 - x0)) < 0.2
    bitmap[y0:y1, x0:x1] &= ~holes
    if not bitmap.any():
        bitmap[y0, x0] = True
    return bitmap


def proposal_from_bitmap(pid: int, bitmap: np.ndarray,
                         predicted_iou: float = 0.9,
                         stability_score: float = 0.95) -> SegmentProposal:
    box = oracles.tight_bbox_scan(bitmap)
    return SegmentProposal(
        id=pid,
        mask=BinaryMask.from_bitmap(bitmap),
        bbox=BBox(*box),
        predicted_iou=predicted_iou,
        stability_score=stability_score,
    )


def detection(box: tuple, phrase: str, confidence: float = 0.8) -> Detection:
    return Detection(bbox=BBox(*box), phrase=phrase, confidence=confidence)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion, printed after the run."""
    entries = []
    for status in ("passed", "failed"):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance" in nodeid and report.when == "call":
                entries.append((nodeid.split("::")[-1], status == "passed"))
    for report in terminalreporter.stats.get("error", []):
        nodeid = getattr(report, "nodeid", "")
        if "test_acceptance" in nodeid:
            entries.append((nodeid.split("::")[-1], False))
    if entries:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, ok in entries:
            terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}")

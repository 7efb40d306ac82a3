"""Interchange schema for segment proposals, detections and run configuration.

A proposals document is one JSON object::

    {"image": {"width": W, "height": H},
     "proposals": [{"id", "mask": {"width","height","rle"},
                    "bbox": {"x0","y0","x1","y1"},
                    "predicted_iou", "stability_score"}, ...],
     "detections": [{"bbox": {...}, "phrase", "confidence"}, ...],
     "config_echo": {...}}

``config_echo`` is an opaque echo of the producer's configuration and is
passed through untouched; everything else is validated. Strict mode rejects
unknown fields, lenient mode ignores them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import SchemaError
from .masks import BBox, BinaryMask, tight_bbox

ROLE_KEEP = "keep"
ROLE_EXCLUDE = "exclude"


@dataclass(frozen=True)
class SegmentProposal:
    id: int
    mask: BinaryMask
    bbox: BBox
    predicted_iou: float
    stability_score: float


@dataclass(frozen=True)
class Detection:
    bbox: BBox
    phrase: str
    confidence: float


@dataclass(frozen=True)
class Prompt:
    text: str
    role: str
    box_threshold: float
    text_threshold: float


@dataclass
class PipelineConfig:
    """Every run hyperparameter: segmenter settings, prompts and the pixel
    margin used when comparing detector and segmenter boxes."""

    band_triple: tuple[int, int, int]
    prompts: tuple[Prompt, ...]
    margin_c: int
    points_per_side: int = 128
    points_per_batch: int = 128
    pred_iou_thresh: float = 0.7
    crop_n_points_downscale_factor: int = 1
    stretch: tuple[float, float] = (2.0, 98.0)
    no_data_fill: float = math.nan

    def __post_init__(self):
        if not self.prompts:
            raise SchemaError("config needs at least one prompt")
        if self.margin_c < 0:
            raise SchemaError("margin_c must be >= 0")

    def keep_prompts(self) -> list[Prompt]:
        return [p for p in self.prompts if p.role == ROLE_KEEP]

    def exclude_prompts(self) -> list[Prompt]:
        return [p for p in self.prompts if p.role == ROLE_EXCLUDE]


@dataclass
class ProposalDocument:
    width: int
    height: int
    proposals: list[SegmentProposal]
    detections: list[Detection]
    config_echo: dict | None = None
    raw: dict = field(default_factory=dict, repr=False)


# --- validation helpers -------------------------------------------------------

def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise SchemaError(f"{path}: missing field '{key}'")
    return obj[key]


def _check_unknown(obj: dict, allowed: set[str], path: str, strict: bool):
    if strict:
        unknown = set(obj) - allowed
        if unknown:
            raise SchemaError(f"{path}: unknown field(s) {sorted(unknown)}")


def _as_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"{path}: expected integer, got {value!r}")
    return value


def _as_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{path}: expected number, got {value!r}")
    return float(value)


def _as_unit(value, path: str) -> float:
    number = _as_number(value, path)
    if not 0.0 <= number <= 1.0:
        raise SchemaError(f"{path}: expected value in [0, 1], got {number}")
    return number


def _parse_bbox(obj, path: str, strict: bool, width: int, height: int) -> BBox:
    if not isinstance(obj, dict):
        raise SchemaError(f"{path}: expected object")
    _check_unknown(obj, {"x0", "y0", "x1", "y1"}, path, strict)
    coords = {k: _as_int(_require(obj, k, path), f"{path}.{k}")
              for k in ("x0", "y0", "x1", "y1")}
    try:
        box = BBox(**coords)
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from None
    if not box.within_raster(width, height):
        raise SchemaError(f"{path}: box {box} exceeds {width}x{height} raster")
    return box


def _parse_mask(obj, path: str, strict: bool, width: int, height: int) -> BinaryMask:
    if not isinstance(obj, dict):
        raise SchemaError(f"{path}: expected object")
    _check_unknown(obj, {"width", "height", "rle"}, path, strict)
    try:
        mask = BinaryMask.from_json(obj)
    except SchemaError as exc:
        raise SchemaError(f"{path}: {exc}") from None
    if (mask.width, mask.height) != (width, height):
        raise SchemaError(
            f"{path}: mask is {mask.width}x{mask.height}, image is {width}x{height}")
    return mask


def _parse_proposal(obj, path: str, strict: bool, width: int, height: int
                    ) -> SegmentProposal:
    if not isinstance(obj, dict):
        raise SchemaError(f"{path}: expected object")
    allowed = {"id", "mask", "bbox", "predicted_iou", "stability_score"}
    _check_unknown(obj, allowed, path, strict)
    pid = _as_int(_require(obj, "id", path), f"{path}.id")
    mask = _parse_mask(_require(obj, "mask", path), f"{path}.mask", strict, width, height)
    bbox = _parse_bbox(_require(obj, "bbox", path), f"{path}.bbox", strict, width, height)
    actual = tight_bbox(mask)
    if actual is None:
        raise SchemaError(f"{path}: mask has no on-pixels")
    if actual != bbox:
        raise SchemaError(
            f"{path}: declared bbox {bbox} != tight bbox of mask {actual}")
    return SegmentProposal(
        id=pid, mask=mask, bbox=bbox,
        predicted_iou=_as_unit(_require(obj, "predicted_iou", path),
                               f"{path}.predicted_iou"),
        stability_score=_as_unit(_require(obj, "stability_score", path),
                                 f"{path}.stability_score"),
    )


def _parse_detection(obj, path: str, strict: bool, width: int, height: int) -> Detection:
    if not isinstance(obj, dict):
        raise SchemaError(f"{path}: expected object")
    _check_unknown(obj, {"bbox", "phrase", "confidence"}, path, strict)
    phrase = _require(obj, "phrase", path)
    if not isinstance(phrase, str) or not phrase.strip():
        raise SchemaError(f"{path}.phrase: expected non-empty string")
    return Detection(
        bbox=_parse_bbox(_require(obj, "bbox", path), f"{path}.bbox", strict,
                         width, height),
        phrase=phrase,
        confidence=_as_unit(_require(obj, "confidence", path), f"{path}.confidence"),
    )


def load_document(source, strict: bool = False) -> ProposalDocument:
    """Parse and validate a proposals document from JSON text or a dict."""
    if isinstance(source, (str, bytes)):
        try:
            obj = json.loads(source)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"proposals document is not valid JSON: {exc}") from None
    else:
        obj = source
    if not isinstance(obj, dict):
        raise SchemaError("proposals document must be a JSON object")
    _check_unknown(obj, {"image", "proposals", "detections", "config_echo"},
                   "$", strict)

    image = _require(obj, "image", "$")
    if not isinstance(image, dict):
        raise SchemaError("$.image: expected object")
    _check_unknown(image, {"width", "height"}, "$.image", strict)
    width = _as_int(_require(image, "width", "$.image"), "$.image.width")
    height = _as_int(_require(image, "height", "$.image"), "$.image.height")
    if width <= 0 or height <= 0:
        raise SchemaError(f"$.image: non-positive raster {width}x{height}")

    raw_proposals = _require(obj, "proposals", "$")
    raw_detections = _require(obj, "detections", "$")
    if not isinstance(raw_proposals, list):
        raise SchemaError("$.proposals: expected array")
    if not isinstance(raw_detections, list):
        raise SchemaError("$.detections: expected array")

    proposals = [_parse_proposal(p, f"$.proposals[{i}]", strict, width, height)
                 for i, p in enumerate(raw_proposals)]
    seen: set[int] = set()
    for i, proposal in enumerate(proposals):
        if proposal.id in seen:
            raise SchemaError(f"$.proposals[{i}]: duplicate id {proposal.id}")
        seen.add(proposal.id)
    detections = [_parse_detection(d, f"$.detections[{i}]", strict, width, height)
                  for i, d in enumerate(raw_detections)]

    config_echo = obj.get("config_echo")
    if config_echo is not None and not isinstance(config_echo, dict):
        raise SchemaError("$.config_echo: expected object")
    return ProposalDocument(width=width, height=height, proposals=proposals,
                            detections=detections, config_echo=config_echo, raw=obj)


def dump_document(doc: ProposalDocument) -> dict:
    out = {
        "image": {"width": doc.width, "height": doc.height},
        "proposals": [
            {
                "id": p.id,
                "mask": p.mask.to_json(),
                "bbox": {"x0": p.bbox.x0, "y0": p.bbox.y0,
                         "x1": p.bbox.x1, "y1": p.bbox.y1},
                "predicted_iou": p.predicted_iou,
                "stability_score": p.stability_score,
            }
            for p in doc.proposals
        ],
        "detections": [
            {
                "bbox": {"x0": d.bbox.x0, "y0": d.bbox.y0,
                         "x1": d.bbox.x1, "y1": d.bbox.y1},
                "phrase": d.phrase,
                "confidence": d.confidence,
            }
            for d in doc.detections
        ],
    }
    if doc.config_echo is not None:
        out["config_echo"] = doc.config_echo
    return out


# --- configuration ------------------------------------------------------------

_CONFIG_KEYS = {
    "band_triple", "prompts", "margin_c", "points_per_side", "points_per_batch",
    "pred_iou_thresh", "crop_n_points_downscale_factor", "stretch", "no_data_fill",
}
_PROMPT_KEYS = {"text", "role", "box_threshold", "text_threshold"}
# Orchestration-only keys that may sit next to the hyperparameters in the
# same config file. "checkpoints" is consumed by the proposal generator
# (the whole config file is handed to it verbatim), never by this package.
_RUN_KEYS = {"sidecar", "analysis", "wavelengths", "checkpoints"}
_ANALYSIS_KEYS = {"pca_components", "mwm_depth_threshold"}


@dataclass
class RunOptions:
    """Pipeline orchestration settings carried alongside the hyperparameters."""

    sidecar: str | None = None
    pca_components: int | None = None
    mwm_depth_threshold: float | None = None
    wavelengths: list[float] | None = None
    checkpoints: dict | None = None


def _parse_prompt(obj, path: str) -> Prompt:
    if not isinstance(obj, dict):
        raise SchemaError(f"{path}: expected object")
    _check_unknown(obj, _PROMPT_KEYS, path, strict=True)
    text = _require(obj, "text", path)
    if not isinstance(text, str) or not text.strip():
        raise SchemaError(f"{path}.text: expected non-empty string")
    role = _require(obj, "role", path)
    if role not in (ROLE_KEEP, ROLE_EXCLUDE):
        raise SchemaError(f"{path}.role: expected 'keep' or 'exclude', got {role!r}")
    return Prompt(
        text=text, role=role,
        box_threshold=_as_unit(_require(obj, "box_threshold", path),
                               f"{path}.box_threshold"),
        text_threshold=_as_unit(_require(obj, "text_threshold", path),
                                f"{path}.text_threshold"),
    )


def parse_config(obj: dict) -> tuple[PipelineConfig, RunOptions]:
    """Validate a config mapping into (hyperparameters, run options).

    ``no_data_fill`` is NaN when absent or JSON null (JSON has no NaN
    literal). Unknown keys are rejected so typos fail loudly.
    """
    if not isinstance(obj, dict):
        raise SchemaError("config must be a JSON object")
    _check_unknown(obj, _CONFIG_KEYS | _RUN_KEYS, "config", strict=True)

    triple = _require(obj, "band_triple", "config")
    if (not isinstance(triple, list) or len(triple) != 3
            or any(isinstance(b, bool) or not isinstance(b, int) or b < 0
                   for b in triple)):
        raise SchemaError("config.band_triple: expected three non-negative band indices")

    raw_prompts = _require(obj, "prompts", "config")
    if not isinstance(raw_prompts, list) or not raw_prompts:
        raise SchemaError("config.prompts: expected non-empty array")
    prompts = tuple(_parse_prompt(p, f"config.prompts[{i}]")
                    for i, p in enumerate(raw_prompts))

    margin = _as_int(_require(obj, "margin_c", "config"), "config.margin_c")
    if margin < 0:
        raise SchemaError("config.margin_c: must be >= 0")

    stretch = obj.get("stretch", [2.0, 98.0])
    if not isinstance(stretch, list) or len(stretch) != 2:
        raise SchemaError("config.stretch: expected [p_low, p_high]")
    p_low = _as_number(stretch[0], "config.stretch[0]")
    p_high = _as_number(stretch[1], "config.stretch[1]")
    if not (0.0 <= p_low < p_high <= 100.0):
        raise SchemaError(f"config.stretch: need 0 <= p_low < p_high <= 100, "
                          f"got ({p_low}, {p_high})")

    fill = obj.get("no_data_fill")
    no_data_fill = math.nan if fill is None else _as_number(fill, "config.no_data_fill")

    def positive(key: str, default: int) -> int:
        value = _as_int(obj.get(key, default), f"config.{key}")
        if value <= 0:
            raise SchemaError(f"config.{key}: must be positive")
        return value

    config = PipelineConfig(
        band_triple=tuple(triple),
        prompts=prompts,
        margin_c=margin,
        points_per_side=positive("points_per_side", 128),
        points_per_batch=positive("points_per_batch", 128),
        pred_iou_thresh=_as_unit(obj.get("pred_iou_thresh", 0.7),
                                 "config.pred_iou_thresh"),
        crop_n_points_downscale_factor=positive("crop_n_points_downscale_factor", 1),
        stretch=(p_low, p_high),
        no_data_fill=no_data_fill,
    )

    analysis = obj.get("analysis") or {}
    if not isinstance(analysis, dict):
        raise SchemaError("config.analysis: expected object")
    _check_unknown(analysis, _ANALYSIS_KEYS, "config.analysis", strict=True)
    pca_components = analysis.get("pca_components")
    if pca_components is not None:
        pca_components = _as_int(pca_components, "config.analysis.pca_components")
        if pca_components <= 0:
            raise SchemaError("config.analysis.pca_components: must be positive")
    depth_threshold = analysis.get("mwm_depth_threshold")
    if depth_threshold is not None:
        depth_threshold = _as_number(depth_threshold,
                                     "config.analysis.mwm_depth_threshold")

    sidecar = obj.get("sidecar")
    if sidecar is not None and not isinstance(sidecar, str):
        raise SchemaError("config.sidecar: expected string path")
    checkpoints = obj.get("checkpoints")
    if checkpoints is not None and not isinstance(checkpoints, dict):
        raise SchemaError("config.checkpoints: expected object")
    wavelengths = obj.get("wavelengths")
    if wavelengths is not None:
        if (not isinstance(wavelengths, list)
                or any(isinstance(w, bool) or not isinstance(w, (int, float))
                       for w in wavelengths)):
            raise SchemaError("config.wavelengths: expected array of numbers")
        wavelengths = [float(w) for w in wavelengths]

    options = RunOptions(sidecar=sidecar, pca_components=pca_components,
                         mwm_depth_threshold=depth_threshold,
                         wavelengths=wavelengths, checkpoints=checkpoints)
    return config, options


def config_to_json(config: PipelineConfig) -> dict:
    return {
        "band_triple": list(config.band_triple),
        "prompts": [
            {"text": p.text, "role": p.role, "box_threshold": p.box_threshold,
             "text_threshold": p.text_threshold}
            for p in config.prompts
        ],
        "margin_c": config.margin_c,
        "points_per_side": config.points_per_side,
        "points_per_batch": config.points_per_batch,
        "pred_iou_thresh": config.pred_iou_thresh,
        "crop_n_points_downscale_factor": config.crop_n_points_downscale_factor,
        "stretch": list(config.stretch),
        "no_data_fill": None if math.isnan(config.no_data_fill) else config.no_data_fill,
    }

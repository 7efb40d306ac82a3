"""Pydantic request/response models for the HTTP service.

Requests reference server-local files by path and carry configuration
inline; the core validators remain the single authority for config and
document contents, so ``config`` travels as an opaque mapping here.
"""

from __future__ import annotations

from pydantic import BaseModel


class HealthResponse(BaseModel):
    status: str
    version: str


class CompositeRequest(BaseModel):
    cube_path: str
    config: dict
    out_dir: str


class CompositeResponse(BaseModel):
    png_path: str
    width: int
    height: int


class FilterRequest(BaseModel):
    config: dict
    out_dir: str
    proposals_path: str | None = None
    document: dict | None = None
    strict: bool = False


class FilterResponse(BaseModel):
    final_mask_path: str
    report_path: str
    report: dict
    mask_popcount: int
    width: int
    height: int


class ApplyMaskRequest(BaseModel):
    cube_path: str
    out_dir: str
    mask_path: str | None = None
    mask: dict | None = None
    fill: float | None = None  # null means NaN
    wavelengths: list[float] | None = None


class MaskStatsModel(BaseModel):
    total_vectors: int
    kept_vectors: int
    reduction_ratio: float


class ApplyMaskResponse(BaseModel):
    hdr_path: str
    raw_path: str
    stats_path: str
    stats: MaskStatsModel


class StatsRequest(BaseModel):
    cube_path: str
    mask_path: str | None = None
    mask: dict | None = None
    out_path: str | None = None


class StatsResponse(BaseModel):
    stats: MaskStatsModel
    stats_path: str | None = None


class PcaRequest(BaseModel):
    cube_path: str
    mask_path: str
    n_components: int
    out_dir: str
    wavelengths: list[float] | None = None


class PcaResponse(BaseModel):
    model_path: str
    eigenvalues: list[float]
    degenerate: bool
    n_vectors: int


class MwmRequest(BaseModel):
    cube_path: str
    mask_path: str
    out_dir: str
    depth_threshold: float = 0.0
    wavelengths: list[float] | None = None


class MwmResponse(BaseModel):
    hdr_path: str
    raw_path: str
    feature_count: int


class EvalPair(BaseModel):
    pred_path: str
    truth_path: str


class EvalRequest(BaseModel):
    pairs: list[EvalPair]
    out_path: str | None = None


class MetricsModel(BaseModel):
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float | None
    recall: float | None
    f1: float | None
    iou: float | None


class EvalResponse(BaseModel):
    per_scene: list[MetricsModel]
    micro: MetricsModel
    eval_path: str | None = None


class PipelineRequest(BaseModel):
    cube_path: str
    config: dict
    out_dir: str
    proposals_path: str | None = None
    truth_path: str | None = None
    strict: bool = False
    sidecar: str | None = None


class PipelineResponse(BaseModel):
    manifest: dict
    manifest_path: str
    artifacts: list[str]
    stats: MaskStatsModel
    mask_popcount: int

"""FastAPI application wrapping the core pipeline stages.

Typed failures surface as structured JSON errors: domain errors map to
HTTP 400, schema/format errors to 422 and sidecar failures to 502, each
carrying the CLI exit code for thin clients.
"""

from __future__ import annotations

import math

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__, pipeline
from ..errors import DomainError, HsmaskError, SchemaError, SidecarError
from ..masks import BinaryMask
from ..proposals import parse_config
from . import models

_STATUS_BY_TYPE = [
    (SidecarError, 502),
    (SchemaError, 422),
    (DomainError, 400),
    (HsmaskError, 500),
]


def _status_for(exc: HsmaskError) -> int:
    for cls, status in _STATUS_BY_TYPE:
        if isinstance(exc, cls):
            return status
    return 500


def create_app() -> FastAPI:
    app = FastAPI(title="hsmask", version=__version__)

    @app.exception_handler(HsmaskError)
    async def _handle_hsmask_error(_: Request, exc: HsmaskError):
        stage = getattr(exc, "stage", None)
        return JSONResponse(
            status_code=_status_for(exc),
            content={"error": {
                "type": type(exc).__name__,
                "message": str(exc),
                "stage": stage,
                "exit_code": exc.exit_code,
            }},
        )

    @app.get("/v1/health", response_model=models.HealthResponse)
    def health():
        return models.HealthResponse(status="ok", version=__version__)

    @app.post("/v1/composite", response_model=models.CompositeResponse)
    def composite(req: models.CompositeRequest):
        config, options = parse_config(req.config)
        result = pipeline.stage_composite(req.cube_path, config, req.out_dir,
                                          wavelengths=options.wavelengths)
        return models.CompositeResponse(**result)

    @app.post("/v1/filter", response_model=models.FilterResponse)
    def filter_proposals(req: models.FilterRequest):
        config, _ = parse_config(req.config)
        source = req.proposals_path if req.proposals_path else req.document
        if source is None:
            raise SchemaError("request needs proposals_path or document")
        result = pipeline.stage_filter(source, config, req.out_dir,
                                       strict=req.strict)
        return models.FilterResponse(**result)

    @app.post("/v1/apply-mask", response_model=models.ApplyMaskResponse)
    def apply_mask(req: models.ApplyMaskRequest):
        mask = _mask_from(req.mask, req.mask_path)
        fill = math.nan if req.fill is None else req.fill
        result = pipeline.stage_apply_mask(req.cube_path, mask, fill, req.out_dir,
                                           wavelengths=req.wavelengths)
        result.pop("_masked", None)
        return models.ApplyMaskResponse(**result)

    @app.post("/v1/stats", response_model=models.StatsResponse)
    def stats(req: models.StatsRequest):
        mask = _mask_from(req.mask, req.mask_path)
        result = pipeline.stage_stats(req.cube_path, mask, out_path=req.out_path)
        return models.StatsResponse(**result)

    @app.post("/v1/pca", response_model=models.PcaResponse)
    def pca(req: models.PcaRequest):
        result = pipeline.stage_pca(req.cube_path, req.mask_path,
                                    req.n_components, req.out_dir,
                                    wavelengths=req.wavelengths)
        return models.PcaResponse(**result)

    @app.post("/v1/mwm", response_model=models.MwmResponse)
    def mwm(req: models.MwmRequest):
        result = pipeline.stage_mwm(req.cube_path, req.mask_path,
                                    req.depth_threshold, req.out_dir,
                                    wavelengths=req.wavelengths)
        return models.MwmResponse(**result)

    @app.post("/v1/eval", response_model=models.EvalResponse)
    def evaluate(req: models.EvalRequest):
        if not req.pairs:
            raise SchemaError("request needs at least one (pred, truth) pair")
        pairs = [(p.pred_path, p.truth_path) for p in req.pairs]
        result = pipeline.stage_eval(pairs, out_path=req.out_path)
        return models.EvalResponse(**result)

    @app.post("/v1/pipeline", response_model=models.PipelineResponse)
    def run(req: models.PipelineRequest):
        result = pipeline.run_pipeline(
            req.cube_path, req.config, req.out_dir,
            proposals_path=req.proposals_path, truth_path=req.truth_path,
            strict=req.strict, sidecar_override=req.sidecar)
        return models.PipelineResponse(**result)

    return app


def _mask_from(inline: dict | None, path: str | None) -> BinaryMask | str:
    if inline is not None:
        return BinaryMask.from_json(inline)
    if path is None:
        raise SchemaError("request needs mask or mask_path")
    return path


app = create_app()

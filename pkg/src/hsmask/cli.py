"""Command line client for the masking service.

Every subcommand is a thin HTTP call. Without ``--server`` (or the
HSMASK_SERVER environment variable) the requests are served by the FastAPI
app in-process over httpx's ASGI transport, so no server needs to be
running; with a URL they go over the network to a ``hsmask serve``
instance sharing the same filesystem.

Exit codes: 0 ok, 1 unexpected failure, 2 domain error, 3 schema/format
error, 4 sidecar failure.
"""

from __future__ import annotations

import asyncio
import json
import os
import sys
from pathlib import Path

import click
import httpx


class Client:
    def __init__(self, server: str | None):
        self._server = server.rstrip("/") if server else None

    def post(self, path: str, payload: dict) -> dict:
        try:
            if self._server:
                response = httpx.post(self._server + path, json=payload,
                                      timeout=600.0)
            else:
                response = asyncio.run(self._post_in_process(path, payload))
        except httpx.HTTPError as exc:
            click.echo(f"error: cannot reach service: {exc}", err=True)
            raise SystemExit(1)
        if response.status_code >= 400:
            _fail(response)
        return response.json()

    @staticmethod
    async def _post_in_process(path: str, payload: dict) -> httpx.Response:
        from .service import app
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport, timeout=600.0,
                                     base_url="http://hsmask.local") as client:
            return await client.post(path, json=payload)


def _fail(response: httpx.Response):
    try:
        error = response.json().get("error", {})
    except json.JSONDecodeError:
        error = {}
    message = error.get("message", response.text[:200])
    stage = error.get("stage")
    prefix = f"error [{error.get('type', 'HTTP ' + str(response.status_code))}]"
    if stage:
        prefix += f" in stage {stage}"
    click.echo(f"{prefix}: {message}", err=True)
    raise SystemExit(int(error.get("exit_code", 1)))


def _load_config(path: str) -> dict:
    file = Path(path)
    if not file.exists():
        click.echo(f"error [InputMissing]: config file not found: {path}", err=True)
        raise SystemExit(2)
    try:
        obj = json.loads(file.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        click.echo(f"error [SchemaError]: {path} is not valid JSON: {exc}", err=True)
        raise SystemExit(3)
    if not isinstance(obj, dict):
        click.echo(f"error [SchemaError]: {path} must hold a JSON object", err=True)
        raise SystemExit(3)
    return obj


def _abs(path: str | None) -> str | None:
    return None if path is None else str(Path(path).absolute())


@click.group()
@click.option("--server", envvar="HSMASK_SERVER", default=None, metavar="URL",
              help="Base URL of a running service; default is in-process.")
@click.pass_context
def main(ctx, server):
    """Region-of-interest masking for hyperspectral cubes."""
    ctx.obj = Client(server)


@main.command()
@click.option("--cube", "cube_path", required=True, type=click.Path())
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out-dir", required=True, type=click.Path())
@click.pass_obj
def composite(client: Client, cube_path, config_path, out_dir):
    """Render the three-band false-color PNG used for segmentation."""
    result = client.post("/v1/composite", {
        "cube_path": _abs(cube_path), "config": _load_config(config_path),
        "out_dir": _abs(out_dir)})
    click.echo(f"composite: {result['png_path']} "
               f"({result['width']}x{result['height']})")


@main.command("filter")
@click.option("--proposals", "proposals_path", required=True, type=click.Path())
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--strict-schema", is_flag=True, default=False,
              help="Reject unknown fields in the proposals document.")
@click.pass_obj
def filter_cmd(client: Client, proposals_path, config_path, out_dir, strict_schema):
    """Apply keep/exclude filtering to a proposals document."""
    result = client.post("/v1/filter", {
        "proposals_path": _abs(proposals_path),
        "config": _load_config(config_path),
        "out_dir": _abs(out_dir), "strict": strict_schema})
    report = result["report"]
    click.echo(f"final mask: {result['final_mask_path']} "
               f"({result['mask_popcount']} on-pixels)")
    click.echo(f"kept={len(report['kept_ids'])} "
               f"excluded={len(report['excluded_ids'])} "
               f"unmatched={len(report['unmatched_ids'])}")


@main.command("apply-mask")
@click.option("--cube", "cube_path", required=True, type=click.Path())
@click.option("--mask", "mask_path", required=True, type=click.Path())
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--fill", type=float, default=None,
              help="No-data fill value; default NaN.")
@click.pass_obj
def apply_mask(client: Client, cube_path, mask_path, out_dir, fill):
    """Project a mask onto a cube and export the masked ENVI pair."""
    result = client.post("/v1/apply-mask", {
        "cube_path": _abs(cube_path), "mask_path": _abs(mask_path),
        "out_dir": _abs(out_dir), "fill": fill})
    stats = result["stats"]
    click.echo(f"masked cube: {result['hdr_path']}")
    click.echo(f"kept {stats['kept_vectors']} of {stats['total_vectors']} vectors "
               f"(reduction {stats['reduction_ratio']:.4f})")


@main.command()
@click.option("--cube", "cube_path", required=True, type=click.Path())
@click.option("--mask", "mask_path", required=True, type=click.Path())
@click.option("--out-dir", type=click.Path(), default=None)
@click.pass_obj
def stats(client: Client, cube_path, mask_path, out_dir):
    """Report masked/total vector counts."""
    payload = {"cube_path": _abs(cube_path), "mask_path": _abs(mask_path)}
    if out_dir:
        payload["out_path"] = str(Path(out_dir).absolute() / "mask_stats.json")
    result = client.post("/v1/stats", payload)
    s = result["stats"]
    click.echo(f"kept {s['kept_vectors']} of {s['total_vectors']} vectors "
               f"(reduction {s['reduction_ratio']:.4f})")


@main.command()
@click.option("--cube", "cube_path", required=True, type=click.Path())
@click.option("--mask", "mask_path", required=True, type=click.Path())
@click.option("--n-components", type=int, required=True)
@click.option("--out-dir", required=True, type=click.Path())
@click.pass_obj
def pca(client: Client, cube_path, mask_path, n_components, out_dir):
    """Fit masked PCA and write the model JSON."""
    result = client.post("/v1/pca", {
        "cube_path": _abs(cube_path), "mask_path": _abs(mask_path),
        "n_components": n_components, "out_dir": _abs(out_dir)})
    eigen = ", ".join(f"{v:.6g}" for v in result["eigenvalues"])
    click.echo(f"pca model: {result['model_path']} (n={result['n_vectors']})")
    click.echo(f"eigenvalues: {eigen}")
    if result["degenerate"]:
        click.echo("warning: degenerate covariance (rank-deficient spectra)")


@main.command()
@click.option("--cube", "cube_path", required=True, type=click.Path())
@click.option("--mask", "mask_path", required=True, type=click.Path())
@click.option("--depth-threshold", type=float, default=0.0)
@click.option("--out-dir", required=True, type=click.Path())
@click.pass_obj
def mwm(client: Client, cube_path, mask_path, depth_threshold, out_dir):
    """Minimum-wavelength map over the masked-in pixels."""
    result = client.post("/v1/mwm", {
        "cube_path": _abs(cube_path), "mask_path": _abs(mask_path),
        "depth_threshold": depth_threshold, "out_dir": _abs(out_dir)})
    click.echo(f"mwm raster: {result['hdr_path']} "
               f"({result['feature_count']} feature pixels)")


@main.command("eval")
@click.option("--pred", "pred_paths", required=True, multiple=True,
              type=click.Path())
@click.option("--truth", "truth_paths", required=True, multiple=True,
              type=click.Path())
@click.option("--out-dir", type=click.Path(), default=None)
@click.pass_obj
def eval_cmd(client: Client, pred_paths, truth_paths, out_dir):
    """Pixel-level precision/recall/F1 of predicted vs truth masks."""
    if len(pred_paths) != len(truth_paths):
        click.echo("error: need as many --pred as --truth", err=True)
        raise SystemExit(2)
    payload = {"pairs": [{"pred_path": _abs(p), "truth_path": _abs(t)}
                         for p, t in zip(pred_paths, truth_paths)]}
    if out_dir:
        payload["out_path"] = str(Path(out_dir).absolute() / "eval.json")
    result = client.post("/v1/eval", payload)

    def fmt(value):
        return "n/a" if value is None else f"{value:.2f}"

    click.echo("scene      precision  recall  f1")
    for i, scene in enumerate(result["per_scene"]):
        click.echo(f"scene[{i}]   {fmt(scene['precision'])}       "
                   f"{fmt(scene['recall'])}    {fmt(scene['f1'])}")
    micro = result["micro"]
    if len(result["per_scene"]) > 1:
        click.echo(f"micro      {fmt(micro['precision'])}       "
                   f"{fmt(micro['recall'])}    {fmt(micro['f1'])}")


@main.command()
@click.option("--cube", "cube_path", required=True, type=click.Path())
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--proposals", "proposals_path", type=click.Path(), default=None,
              help="Pre-computed proposals document; skips the sidecar.")
@click.option("--truth", "truth_path", type=click.Path(), default=None)
@click.option("--strict-schema", is_flag=True, default=False)
@click.option("--sidecar", default=None, metavar="PATH",
              help="Proposal generator executable; HSMASK_SIDECAR overrides "
                   "the config, this flag overrides both.")
@click.pass_obj
def pipeline(client: Client, cube_path, config_path, out_dir, proposals_path,
             truth_path, strict_schema, sidecar):
    """Run the full pipeline: composite, proposals, filtering, projection."""
    sidecar = sidecar or os.environ.get("HSMASK_SIDECAR") or None
    result = client.post("/v1/pipeline", {
        "cube_path": _abs(cube_path), "config": _load_config(config_path),
        "out_dir": _abs(out_dir), "proposals_path": _abs(proposals_path),
        "truth_path": _abs(truth_path), "strict": strict_schema,
        "sidecar": sidecar})
    stats = result["stats"]
    click.echo(f"pipeline complete: {len(result['artifacts'])} artifacts "
               f"in {Path(result['manifest_path']).parent}")
    click.echo(f"kept {stats['kept_vectors']} of {stats['total_vectors']} vectors "
               f"(reduction {stats['reduction_ratio']:.4f})")


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8008)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import app
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main(sys.argv[1:])

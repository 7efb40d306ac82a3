"""Stage orchestration: composite -> (sidecar) -> filter -> mask projection
-> stats -> optional analytics, with a digest-carrying run manifest.

Every stage is exposed on its own so the HTTP service can serve them
individually; ``run_pipeline`` chains them. All JSON artifacts are written
canonically (sorted keys, fixed indentation) so identical inputs produce
byte-identical outputs.
"""

from __future__ import annotations

import hashlib
import json
import subprocess
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import masked_pca, mwm_map
from .composite import BandTriple, compose, write_png
from .envi import HyperCube, locate_raw, read_cube_file, write_cube_files
from .errors import (
    HsmaskError,
    InputMissing,
    MissingWavelengths,
    RasterMismatch,
    SchemaError,
    SidecarError,
)
from .filtering import compose_final_mask
from .maskproj import apply_mask, export_masked_cube, mask_stats
from .masks import BinaryMask
from .metrics import evaluate, micro_average
from .proposals import PipelineConfig, load_document, parse_config


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(canonical_json(obj), encoding="utf-8")
    return path


def read_json(path):
    path = Path(path)
    if not path.exists():
        raise InputMissing(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON: {exc}") from None


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fp:
        for chunk in iter(lambda: fp.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def load_mask_file(path) -> BinaryMask:
    obj = read_json(path)
    if not isinstance(obj, dict):
        raise SchemaError(f"{path}: mask file must be a JSON object")
    return BinaryMask.from_json(obj)


def load_config_file(path) -> dict:
    obj = read_json(path)
    if not isinstance(obj, dict):
        raise SchemaError(f"{path}: config must be a JSON object")
    return obj


@contextmanager
def _stage(name: str):
    """Tag any typed failure with the stage it happened in."""
    try:
        yield
    except HsmaskError as exc:
        exc.stage = name
        raise


# --- individual stages --------------------------------------------------------

def stage_composite(cube_path, config: PipelineConfig, out_dir,
                    cube: HyperCube | None = None,
                    wavelengths=None) -> dict:
    with _stage("composite"):
        if cube is None:
            cube = read_cube_file(cube_path, wavelengths=wavelengths)
        triple = BandTriple(*config.band_triple)
        pixels = compose(cube, triple, stretch=config.stretch)
        png_path = write_png(pixels, Path(out_dir) / "composite.png")
    return {"png_path": str(png_path), "width": cube.samples, "height": cube.lines}


def stage_filter(document_source, config: PipelineConfig, out_dir,
                 strict: bool = False) -> dict:
    with _stage("filter"):
        if isinstance(document_source, (str, Path)):
            path = Path(document_source)
            if not path.exists():
                raise InputMissing(path)
            doc = load_document(path.read_text(encoding="utf-8"), strict=strict)
        else:
            doc = load_document(document_source, strict=strict)
        final_mask, report = compose_final_mask(doc, config)
        out_dir = Path(out_dir)
        mask_path = write_json(out_dir / "final_mask.rle.json", final_mask.to_json())
        report_path = write_json(out_dir / "filter_report.json", report.to_json())
    return {
        "final_mask_path": str(mask_path),
        "report_path": str(report_path),
        "report": report.to_json(),
        "mask_popcount": final_mask.popcount,
        "width": final_mask.width,
        "height": final_mask.height,
    }


def stage_apply_mask(cube_path, mask_source, fill: float, out_dir,
                     cube: HyperCube | None = None, wavelengths=None) -> dict:
    with _stage("apply-mask"):
        if cube is None:
            cube = read_cube_file(cube_path, wavelengths=wavelengths)
        mask = (mask_source if isinstance(mask_source, BinaryMask)
                else load_mask_file(mask_source))
        masked = apply_mask(cube, mask, fill=fill)
        hdr_path, raw_path = export_masked_cube(masked, Path(out_dir) / "masked")
        stats = mask_stats(cube, mask)
        stats_path = write_json(Path(out_dir) / "mask_stats.json", stats.to_json())
    return {
        "hdr_path": str(hdr_path),
        "raw_path": str(raw_path),
        "stats_path": str(stats_path),
        "stats": stats.to_json(),
        "_masked": masked,
    }


def stage_stats(cube_path, mask_source, out_path=None, cube=None,
                wavelengths=None) -> dict:
    with _stage("stats"):
        if cube is None:
            cube = read_cube_file(cube_path, wavelengths=wavelengths)
        mask = (mask_source if isinstance(mask_source, BinaryMask)
                else load_mask_file(mask_source))
        stats = mask_stats(cube, mask)
        result = {"stats": stats.to_json()}
        if out_path is not None:
            result["stats_path"] = str(write_json(out_path, stats.to_json()))
    return result


def stage_pca(cube_path, mask_source, n_components: int, out_dir,
              masked=None, wavelengths=None) -> dict:
    with _stage("pca"):
        if masked is None:
            cube = read_cube_file(cube_path, wavelengths=wavelengths)
            mask = (mask_source if isinstance(mask_source, BinaryMask)
                    else load_mask_file(mask_source))
            masked = apply_mask(cube, mask)
        model = masked_pca(masked, n_components)
        model_path = write_json(Path(out_dir) / "pca_model.json", model.to_json())
    return {
        "model_path": str(model_path),
        "eigenvalues": model.eigenvalues.tolist(),
        "degenerate": model.degenerate,
        "n_vectors": masked.n_vectors,
    }


def stage_mwm(cube_path, mask_source, depth_threshold: float, out_dir,
              masked=None, wavelengths=None) -> dict:
    with _stage("mwm"):
        if masked is None:
            cube = read_cube_file(cube_path, wavelengths=wavelengths)
            mask = (mask_source if isinstance(mask_source, BinaryMask)
                    else load_mask_file(mask_source))
            masked = apply_mask(cube, mask)
        wl_map, depth_map = mwm_map(masked, depth_threshold=depth_threshold)
        stack = np.stack([wl_map, depth_map]).astype(np.float32)
        out = HyperCube(samples=stack.shape[2], lines=stack.shape[1], bands=2,
                        wavelengths=None, data=stack)
        hdr_path, raw_path = write_cube_files(
            out, Path(out_dir) / "mwm",
            extra={"band names": "{feature_wavelength_nm, feature_depth}",
                   "data ignore value": "nan"})
        feature_count = int(np.isfinite(wl_map).sum())
    return {"hdr_path": str(hdr_path), "raw_path": str(raw_path),
            "feature_count": feature_count}


def stage_eval(pairs: list[tuple], out_path=None) -> dict:
    """pairs: (pred mask or path, truth mask or path) tuples."""
    with _stage("eval"):
        results = []
        for pred_source, truth_source in pairs:
            pred = (pred_source if isinstance(pred_source, BinaryMask)
                    else load_mask_file(pred_source))
            truth = (truth_source if isinstance(truth_source, BinaryMask)
                     else load_mask_file(truth_source))
            results.append(evaluate(pred, truth))
        micro = micro_average(results)
        payload = {"per_scene": [r.to_json() for r in results],
                   "micro": micro.to_json()}
        result = dict(payload)
        if out_path is not None:
            result["eval_path"] = str(write_json(out_path, payload))
    return result


# --- sidecar ------------------------------------------------------------------

def invoke_sidecar(sidecar: str, image_path, config_path, out_path) -> None:
    """Contract: ``<sidecar> --image I --config C --out O``, exit 0 on success."""
    command = [sidecar, "--image", str(image_path), "--config", str(config_path),
               "--out", str(out_path)]
    try:
        completed = subprocess.run(command, capture_output=True, text=True)
    except OSError as exc:
        raise SidecarError(f"cannot launch sidecar {sidecar!r}: {exc}") from None
    if completed.returncode != 0:
        detail = (completed.stderr or completed.stdout or "").strip()
        raise SidecarError(
            f"sidecar exited with {completed.returncode}: {detail[:500]}")
    if not Path(out_path).exists():
        raise SidecarError(f"sidecar exited 0 but wrote no {out_path}")


# --- full pipeline ------------------------------------------------------------

def run_pipeline(cube_path, config_obj: dict, out_dir,
                 proposals_path=None, truth_path=None, strict: bool = False,
                 sidecar_override: str | None = None) -> dict:
    """Run every stage, returning {"manifest": ..., "artifacts": [...]}.

    With ``proposals_path`` given no sidecar is needed; otherwise one must be
    resolvable from the override or the config.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config, options = parse_config(config_obj)

    cube_path = Path(cube_path)
    if not cube_path.exists():
        raise InputMissing(cube_path)

    manifest = {
        "tool_version": __version__,
        "config": config_obj,
        "inputs": [],
        "stages": [],
    }
    artifacts: list[str] = []

    def record_input(path):
        manifest["inputs"].append({"path": str(path), "sha256": sha256_file(path)})

    def record_stage(name: str, started: float, outputs: list[str]):
        entries = []
        for out in outputs:
            if not Path(out).exists():
                raise HsmaskError(f"stage {name} lost its output {out}")
            entries.append({"path": str(out), "sha256": sha256_file(out)})
            artifacts.append(str(out))
        manifest["stages"].append({
            "name": name,
            "outputs": entries,
            "seconds": time.perf_counter() - started,
        })

    with _stage("load-cube"):
        cube = read_cube_file(cube_path, wavelengths=options.wavelengths)
        if options.mwm_depth_threshold is not None and cube.wavelengths is None:
            # refuse before any artifact is written, not at the mwm stage
            raise MissingWavelengths(
                "config requests minimum-wavelength mapping but the cube has "
                "no per-band wavelengths; add them to the header or pass "
                "'wavelengths' in the config")
    record_input(cube_path)
    record_input(locate_raw(cube_path))

    t = time.perf_counter()
    composite_result = stage_composite(cube_path, config, out_dir, cube=cube)
    record_stage("composite", t, [composite_result["png_path"]])

    if proposals_path is not None:
        proposals_file = Path(proposals_path)
        if not proposals_file.exists():
            raise InputMissing(proposals_file)
        record_input(proposals_file)
        doc_strict = strict
    else:
        sidecar = sidecar_override or options.sidecar
        if not sidecar:
            raise SidecarError("no proposals file given and no sidecar configured")
        t = time.perf_counter()
        sidecar_config = write_json(out_dir / "sidecar_config.json", config_obj)
        proposals_file = out_dir / "proposals.json"
        invoke_sidecar(sidecar, composite_result["png_path"], sidecar_config,
                       proposals_file)
        record_stage("sidecar", t, [str(sidecar_config), str(proposals_file)])
        # The sidecar contract requires strict-schema output regardless of
        # how lenient we are with externally supplied files.
        doc_strict = True

    t = time.perf_counter()
    with _stage("filter"):
        doc = load_document(proposals_file.read_text(encoding="utf-8"),
                            strict=doc_strict)
        if (doc.width, doc.height) != (cube.samples, cube.lines):
            raise RasterMismatch(
                f"proposals raster {doc.width}x{doc.height} does not match cube "
                f"{cube.samples}x{cube.lines}")
    filter_result = stage_filter(doc.raw, config, out_dir, strict=doc_strict)
    record_stage("filter", t,
                 [filter_result["final_mask_path"], filter_result["report_path"]])

    t = time.perf_counter()
    final_mask = load_mask_file(filter_result["final_mask_path"])
    apply_result = stage_apply_mask(cube_path, final_mask, config.no_data_fill,
                                    out_dir, cube=cube)
    masked = apply_result.pop("_masked")
    record_stage("apply-mask", t, [apply_result["hdr_path"],
                                   apply_result["raw_path"],
                                   apply_result["stats_path"]])

    if options.pca_components is not None:
        t = time.perf_counter()
        pca_result = stage_pca(cube_path, final_mask, options.pca_components,
                               out_dir, masked=masked)
        record_stage("pca", t, [pca_result["model_path"]])

    if options.mwm_depth_threshold is not None:
        t = time.perf_counter()
        mwm_result = stage_mwm(cube_path, final_mask,
                               options.mwm_depth_threshold, out_dir, masked=masked)
        record_stage("mwm", t, [mwm_result["hdr_path"], mwm_result["raw_path"]])

    if truth_path is not None:
        truth_file = Path(truth_path)
        if not truth_file.exists():
            raise InputMissing(truth_file)
        record_input(truth_file)
        t = time.perf_counter()
        eval_result = stage_eval([(final_mask, truth_file)],
                                 out_path=out_dir / "eval.json")
        record_stage("eval", t, [eval_result["eval_path"]])

    manifest_path = write_json(out_dir / "run_manifest.json", manifest)
    return {
        "manifest": manifest,
        "manifest_path": str(manifest_path),
        "artifacts": artifacts,
        "stats": apply_result["stats"],
        "mask_popcount": filter_result["mask_popcount"],
    }

"""Run manifests: every pipeline command writes one beside its primary
output, recording the shared config hash plus input/output digests so runs
chain together (one stage's output digest is the next stage's input digest).
"""

from __future__ import annotations

import hashlib
import importlib.resources
import json
from pathlib import Path


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def config_hash(
    taxonomy_path: str | None,
    endpoints_path: str | None,
    mock_path: str | None,
    seed: int,
) -> str:
    """Digest of the run configuration shared by all pipeline stages."""
    if taxonomy_path:
        taxonomy_digest = sha256_file(taxonomy_path)
    else:
        blob = importlib.resources.files("hadkit").joinpath("data/taxonomy.toml").read_bytes()
        taxonomy_digest = hashlib.sha256(blob).hexdigest()
    parts = {
        "taxonomy": taxonomy_digest,
        "endpoints": sha256_file(endpoints_path) if endpoints_path else "",
        "mock": sha256_file(mock_path) if mock_path else "",
        "seed": seed,
    }
    canonical = json.dumps(parts, sort_keys=True).encode("utf-8")
    return hashlib.sha256(canonical).hexdigest()


def manifest_path_for(output_path: str | Path) -> Path:
    return Path(str(output_path) + ".manifest.json")


def write_manifest(
    command: str,
    primary_output: str | Path,
    cfg_hash: str,
    seed: int,
    endpoints: list[str],
    inputs: list[str],
    outputs: list[str],
    counts: dict,
    started_at: str,
    finished_at: str,
) -> Path:
    manifest = {
        "command": command,
        "config_hash": cfg_hash,
        "seed": seed,
        "endpoints": endpoints,
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "outputs": {str(p): sha256_file(p) for p in outputs},
        "counts": counts,
        "started_at": started_at,
        "finished_at": finished_at,
    }
    path = manifest_path_for(primary_output)
    path.write_text(json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return path

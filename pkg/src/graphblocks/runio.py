"""File formats: run CSVs, velocity JSON, manifests, and config files.

All writers format floats through one fixed converter so that reruns of
the same configuration are byte-identical regardless of worker count.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from dataclasses import asdict
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import VelocityFit
from .engine import EnsembleConfig, RunResult
from .graphs import GraphSpec

OUTPUT_DIR_ENV = "GRAPHBLOCKS_OUTDIR"

ENTROPY_COLUMNS = ["t", "S_mean", "S_var", "R"]
OTOC_COLUMNS = ["t", "x", "C_mean"]
VELOCITY_TABLE_COLUMNS = ["block_name", "n", "v_E", "v_E_stderr", "v_B",
                          "v_B_stderr", "gamma", "wp", "policy_id"]


class SchemaError(ValueError):
    """A CSV file does not conform to its declared schema."""


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, "."))


# -- run outputs -----------------------------------------------------------

def write_entropy_csv(result: RunResult, path: str | Path) -> None:
    mean, var = result.entropy_mean, result.entropy_var
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ENTROPY_COLUMNS)
        for t in range(mean.size):
            w.writerow([t, _fmt(mean[t]), _fmt(var[t]), result.realizations])


def write_otoc_csv(result: RunResult, path: str | Path) -> None:
    c = result.otoc_mean
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(OTOC_COLUMNS)
        for t in range(c.shape[0]):
            for x in range(c.shape[1]):
                w.writerow([t, x + 1, _fmt(c[t, x])])


def read_entropy_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray, int]:
    rows = _read_schema_csv(path, ENTROPY_COLUMNS)
    mean = np.array([float(r[1]) for r in rows])
    var = np.array([float(r[2]) for r in rows])
    r_count = int(rows[0][3]) if rows else 0
    expected = list(range(len(rows)))
    if [int(r[0]) for r in rows] != expected:
        raise SchemaError(f"{path}: t column must run 0..T without gaps")
    return mean, var, r_count


def read_otoc_csv(path: str | Path) -> np.ndarray:
    rows = _read_schema_csv(path, OTOC_COLUMNS)
    tmax = max(int(r[0]) for r in rows)
    xmax = max(int(r[1]) for r in rows)
    field = np.full((tmax + 1, xmax), np.nan)
    for t, x, c in rows:
        field[int(t), int(x) - 1] = float(c)
    if np.isnan(field).any():
        raise SchemaError(f"{path}: missing (t, x) cells")
    return field


def _read_schema_csv(path: str | Path, columns: list[str]) -> list[list[str]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != columns:
            raise SchemaError(f"{path}: header {header} != {columns}")
        rows = list(reader)
    for r in rows:
        if len(r) != len(columns):
            raise SchemaError(f"{path}: ragged row {r}")
        for cell in r:
            float(cell)  # all schema columns are numeric
    return rows


def validate_run_csvs(entropy_path: str | Path, otoc_path: str | Path) -> None:
    read_entropy_csv(entropy_path)
    read_otoc_csv(otoc_path)


# -- velocity outputs --------------------------------------------------------

def write_velocities_json(path: str | Path, block_name: str,
                          entanglement: VelocityFit, butterfly: VelocityFit,
                          extra: dict | None = None) -> None:
    payload = {
        "block": block_name,
        "v_E": entanglement.as_dict(),
        "v_B": butterfly.as_dict(),
    }
    if extra:
        payload.update(extra)
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_velocity_table(path: str | Path, table_rows: list[tuple]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(VELOCITY_TABLE_COLUMNS)
        for row in table_rows:
            w.writerow([row[0], row[1]] + [_fmt(v) for v in row[2:8]] + [row[8]])


def write_scatter_csv(path: str | Path, header: list[str],
                      rows: list[tuple]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (int, float, np.floating)) else v
                        for v in row])


# -- configuration files -------------------------------------------------------

CONFIG_KEYS = {
    "chain_length": int,
    "sparsity": float,
    "boundary": str,
    "layers": int,
    "otoc_layers": int,
    "realizations": int,
    "master_seed": int,
    "log_base": str,
    "block_n": int,
    "block_edges": str,
    "block_name": str,
    "otoc_site": int,
    "otoc_initial": str,
    "otoc_probe": str,
}


class ConfigError(ValueError):
    """Malformed run configuration; message names the offending field."""


def parse_config_text(text: str) -> dict:
    """Flat key = value lines; '#' starts a comment."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            out[key] = CONFIG_KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"field {key!r}: {exc}") from None
    return out


def parse_edge_list(text: str) -> list[tuple[int, int]]:
    edges = []
    for token in text.replace(" ", "").split(","):
        if not token:
            continue
        parts = token.split("-")
        if len(parts) != 2:
            raise ConfigError(f"field 'block_edges': bad edge token {token!r}")
        edges.append((int(parts[0]), int(parts[1])))
    return edges


def config_from_mapping(values: dict) -> EnsembleConfig:
    """Build an EnsembleConfig, naming the offending field on error."""
    v = dict(values)
    block = v.pop("block", None)
    if block is None:
        n = v.pop("block_n", None)
        edges = v.pop("block_edges", None)
        if n is None or edges is None:
            raise ConfigError("fields 'block_n' and 'block_edges' (or a catalog "
                              "block name) are required")
        try:
            block = GraphSpec.from_edges(
                int(n), parse_edge_list(edges) if isinstance(edges, str) else edges,
                name=v.pop("block_name", "custom"))
        except ValueError as exc:
            raise ConfigError(f"field 'block_edges': {exc}") from None
    else:
        v.pop("block_n", None), v.pop("block_edges", None), v.pop("block_name", None)
    log_base = v.get("log_base")
    if isinstance(log_base, str) and log_base in ("2", "e"):
        v["log_base"] = 2 if log_base == "2" else "e"
    try:
        return EnsembleConfig(block=block, **v)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def config_to_mapping(cfg: EnsembleConfig) -> dict:
    out = {
        "block_name": cfg.block.name or "custom",
        "block_n": cfg.block.n_vertices,
        "block_edges": ",".join(f"{u}-{v}" for u, v in cfg.block.sorted_edges()),
        "chain_length": cfg.chain_length,
        "sparsity": cfg.sparsity,
        "boundary": cfg.boundary,
        "layers": cfg.layers,
        "otoc_layers": cfg.otoc_layers,
        "realizations": cfg.realizations,
        "master_seed": cfg.master_seed,
        "log_base": str(cfg.log_base),
        "otoc_site": cfg.otoc_site,
        "otoc_initial": cfg.otoc_initial,
        "otoc_probe": cfg.otoc_probe,
    }
    return out


# -- manifest --------------------------------------------------------------------

def file_sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(path: str | Path, cfg: EnsembleConfig,
                   outputs: dict[str, str | Path],
                   catalog_version: str | None = None,
                   extra: dict | None = None) -> dict:
    manifest = {
        "code_version": __version__,
        "config": config_to_mapping(cfg),
        "catalog_version": catalog_version,
        "outputs": {kind: {"path": str(p), "sha256": file_sha256(p)}
                    for kind, p in outputs.items()},
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    if extra:
        manifest.update(extra)
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest

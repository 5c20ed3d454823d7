"""Persistence for Q-tables, experiment configs and result rows."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import subprocess
from pathlib import Path

import numpy as np

from .chain import ChainConfig

RESULT_COLUMNS = ["mode", "n", "m_star", "p_sw", "p_link_list", "policy", "metric", "mean", "std_error",
                  "batches", "runs", "seed"]


class ConfigMismatch(ValueError):
    pass


class CorruptFile(ValueError):
    pass


def config_hash(config: ChainConfig) -> str:
    text = json.dumps(config.to_dict(), sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def save_qtable(table, path) -> None:
    """JSON with metadata; values are stored as float hex strings so reloads are exact."""
    doc = {
        "format": "repeaterlab-qtable/1",
        "config": table.config.to_dict(),
        "config_hash": config_hash(table.config),
        "hyper": table.hyper.to_dict(),
        "reward_kind": table.reward_kind,
        "episodes": table.episodes,
        "seed": table.seed,
        "shape": list(table.values.shape),
        "values": [float(x).hex() for x in table.values.ravel()],
    }
    Path(path).write_text(json.dumps(doc))


def load_qtable(path, expect: ChainConfig | None = None, transfer: bool = False):
    """Load a Q-table, refusing one trained for a different chain unless ``transfer`` is set.

    With ``transfer`` only the shape-defining fields (n, m_star, no-op flag)
    must agree, and the returned table carries ``expect`` as its config.
    """
    from .qlearning import Hyperparams, QTable

    try:
        doc = json.loads(Path(path).read_text())
        config = ChainConfig.from_dict(doc["config"])
        shape = tuple(doc["shape"])
        values = np.array([float.fromhex(x) for x in doc["values"]]).reshape(shape)
        hyper = Hyperparams.from_dict(doc["hyper"])
    except (OSError, KeyError, ValueError, TypeError) as exc:
        raise CorruptFile(f"cannot read Q-table from {path}: {exc}") from exc
    if doc.get("config_hash") != config_hash(config):
        raise CorruptFile(f"{path}: stored hash does not match its config")
    if expect is not None and config_hash(expect) != config_hash(config):
        same_shape = (expect.n, expect.m_star, expect.allow_noop) == (config.n, config.m_star, config.allow_noop)
        if not transfer:
            raise ConfigMismatch(f"{path} was trained for a different chain; pass transfer=True to reuse it")
        if not same_shape:
            raise ConfigMismatch(f"{path} has n={config.n}, m_star={config.m_star}; cannot transfer")
        config = expect
    return QTable(values, config, hyper, doc.get("reward_kind", "waiting"), int(doc.get("episodes", 0)),
                  doc.get("seed"))


def load_json(path) -> dict:
    return json.loads(Path(path).read_text())


def version_string() -> str:
    """Package version plus the git commit of the source tree when available."""
    from . import __version__

    try:
        rev = subprocess.run(["git", "rev-parse", "--short", "HEAD"], capture_output=True, text=True,
                             cwd=Path(__file__).parent, timeout=5)
        if rev.returncode == 0:
            return f"{__version__}+g{rev.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def result_row(mode: str, config: ChainConfig, policy: str, metric: str, mean: float, std_error: float = math.nan,
               batches: int = 0, runs: int = 0, seed: int | None = None) -> dict:
    return {
        "mode": mode,
        "n": config.n,
        "m_star": config.m_star,
        "p_sw": config.p_swap,
        "p_link_list": ";".join(repr(p) for p in config.p_link),
        "policy": policy,
        "metric": metric,
        "mean": mean,
        "std_error": std_error,
        "batches": batches,
        "runs": runs,
        "seed": "" if seed is None else seed,
    }


def write_results(rows: list[dict], out_dir, stem: str, provenance: dict) -> tuple[Path, Path]:
    """Write ``stem.csv`` (fixed columns) and ``stem.json`` (rows plus provenance)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = out / f"{stem}.csv", out / f"{stem}.json"
    with open(csv_path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow({k: r[k] for k in RESULT_COLUMNS})
    json_path.write_text(json.dumps({"provenance": provenance, "rows": rows}, indent=2, default=_jsonable))
    return csv_path, json_path


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x)}")


__all__ = [
    "RESULT_COLUMNS",
    "ConfigMismatch",
    "CorruptFile",
    "config_hash",
    "save_qtable",
    "load_qtable",
    "load_json",
    "version_string",
    "result_row",
    "write_results",
]

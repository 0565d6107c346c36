"""Versioned ``.npz`` checkpoints: a JSON header plus one array per parameter."""

from __future__ import annotations

import io
import json
import zipfile
from pathlib import Path

import numpy as np

from .deepsets import DeepSets, DeepSetsConfig
from .gesn import Gesn, GesnConfig
from .gevn import Gevn, GevnConfig

FORMAT = "electgnn-checkpoint"
VERSION = 1

_BUILDERS = {
    "gevn": (Gevn, GevnConfig),
    "gesn": (Gesn, GesnConfig),
    "deepsets": (DeepSets, DeepSetsConfig),
}


class CheckpointError(RuntimeError):
    pass


def save_checkpoint(path, model, metadata: dict | None = None) -> Path:
    path = Path(path)
    header = {
        "format": FORMAT,
        "version": VERSION,
        "kind": model.kind,
        "config": model.config_dict(),
        "param_names": list(model.params),
        "metadata": metadata or {},
    }
    # fixed zip timestamps so identical parameters give identical bytes
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", compression=zipfile.ZIP_STORED) as zf:
        entries = {"header.json": json.dumps(header, sort_keys=True).encode()}
        for k, (name, arr) in enumerate(model.params.items()):
            arr_buf = io.BytesIO()
            np.save(arr_buf, np.ascontiguousarray(arr), allow_pickle=False)
            entries[f"param_{k:04d}.npy"] = arr_buf.getvalue()
        for name, data in entries.items():
            info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
            zf.writestr(info, data)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(buf.getvalue())
    return path


def load_checkpoint(path):
    """Rebuild a model from disk; returns ``(model, metadata)``."""
    path = Path(path)
    try:
        with zipfile.ZipFile(path) as zf:
            header = json.loads(zf.read("header.json"))
            if header.get("format") != FORMAT:
                raise CheckpointError(f"{path}: not a checkpoint (format={header.get('format')!r})")
            if header.get("version") != VERSION:
                raise CheckpointError(f"{path}: unsupported checkpoint version {header.get('version')}")
            kind = header["kind"]
            if kind not in _BUILDERS:
                raise CheckpointError(f"{path}: unknown model kind {kind!r}")
            arrays = {
                name: np.load(io.BytesIO(zf.read(f"param_{k:04d}.npy")), allow_pickle=False)
                for k, name in enumerate(header["param_names"])
            }
    except CheckpointError:
        raise
    except FileNotFoundError:
        raise CheckpointError(f"{path}: checkpoint file does not exist") from None
    except (zipfile.BadZipFile, KeyError, ValueError, json.JSONDecodeError, OSError) as exc:
        raise CheckpointError(f"{path}: corrupted checkpoint ({exc})") from exc
    cls, cfg_cls = _BUILDERS[kind]
    try:
        model = cls(cfg_cls(**header["config"]))
        model.params.load(arrays)
    except (TypeError, KeyError, ValueError) as exc:
        raise CheckpointError(f"{path}: checkpoint does not match its config ({exc})") from exc
    return model, header.get("metadata", {})

"""Checkpoint directories: a JSON header plus one raw float32 file per parameter.

Layout:
    <dir>/header.json   format tag, model kind, step, config hash, and the
                        name -> shape table for every parameter
    <dir>/<name>.bin    little-endian float32 values, C order

Writing is deterministic byte for byte given identical parameters.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch

from .errors import CheckpointError

FORMAT_TAG = "lesionattn-checkpoint-v1"


def save_checkpoint(
    directory: str | Path,
    model: torch.nn.Module,
    *,
    model_kind: str,
    step: int,
    config_hash: str,
    extra: dict | None = None,
) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    params = {name: p.detach().cpu().numpy().astype("<f4") for name, p in model.state_dict().items()}
    header = {
        "format": FORMAT_TAG,
        "model_kind": model_kind,
        "step": int(step),
        "config_hash": config_hash,
        "dtype": "<f4",
        "params": {name: list(arr.shape) for name, arr in sorted(params.items())},
    }
    if extra:
        header["extra"] = extra
    (directory / "header.json").write_text(json.dumps(header, sort_keys=True, indent=2) + "\n")
    for name, arr in sorted(params.items()):
        (directory / f"{name}.bin").write_bytes(arr.tobytes(order="C"))


def read_header(directory: str | Path) -> dict:
    directory = Path(directory)
    header_path = directory / "header.json"
    if not header_path.exists():
        raise CheckpointError(f"no header.json under {directory}")
    try:
        header = json.loads(header_path.read_text())
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"corrupt header in {directory}: {exc}") from exc
    if header.get("format") != FORMAT_TAG:
        raise CheckpointError(f"unknown checkpoint format {header.get('format')!r} in {directory}")
    return header


def load_arrays(directory: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    directory = Path(directory)
    header = read_header(directory)
    arrays: dict[str, np.ndarray] = {}
    for name, shape in header["params"].items():
        bin_path = directory / f"{name}.bin"
        if not bin_path.exists():
            raise CheckpointError(f"missing parameter file {bin_path.name} in {directory}")
        raw = np.frombuffer(bin_path.read_bytes(), dtype="<f4")
        expected = int(np.prod(shape)) if shape else 1
        if raw.size != expected:
            raise CheckpointError(
                f"{bin_path.name}: expected {expected} values for shape {shape}, found {raw.size}"
            )
        arrays[name] = raw.reshape(shape).copy()
    return header, arrays


def load_checkpoint(directory: str | Path, model: torch.nn.Module, expected_kind: str | None = None) -> dict:
    header, arrays = load_arrays(directory)
    if expected_kind is not None and header.get("model_kind") != expected_kind:
        raise CheckpointError(
            f"checkpoint under {directory} holds a {header.get('model_kind')!r} model, expected {expected_kind!r}"
        )
    state = model.state_dict()
    missing = sorted(set(state) - set(arrays))
    surplus = sorted(set(arrays) - set(state))
    if missing or surplus:
        raise CheckpointError(
            f"parameter names do not match the model (missing {missing[:3]}, surplus {surplus[:3]})"
        )
    for name, tensor in state.items():
        arr = arrays[name]
        if tuple(tensor.shape) != tuple(arr.shape):
            raise CheckpointError(f"shape mismatch for {name}: checkpoint {arr.shape}, model {tuple(tensor.shape)}")
        tensor.copy_(torch.from_numpy(arr).to(tensor.dtype))
    return header

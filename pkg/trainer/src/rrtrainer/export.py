"""Weights document emit/ingest in the shared JSON schema (version 1,
row-major float32 arrays, base64 payloads). The document is the only channel
between this trainer and the solver that consumes the model."""

from __future__ import annotations

import base64
import json

import numpy as np
import torch

from .data import DataError
from .model import ScoreNet, layer_names

SCHEMA_VERSION = 1


def export_weights(model: ScoreNet) -> str:
    layers = {}
    for name, param in model.named_model_params():
        a = np.ascontiguousarray(
            param.detach().cpu().numpy(), dtype=np.float32
        )
        layers[name] = {
            "shape": list(a.shape),
            "data": base64.b64encode(a.tobytes()).decode("ascii"),
        }
    doc = {
        "schema_version": SCHEMA_VERSION,
        "architecture": model.arch,
        "feature_norm": model.feature_norm,
        "layers": layers,
    }
    return json.dumps(doc, indent=1, sort_keys=True)


def import_weights(text: str, dtype: torch.dtype = torch.float32) -> ScoreNet:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"weights document is not valid JSON: {exc}") from exc
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise DataError(f"unknown schema version {doc.get('schema_version')!r}")
    arch = doc["architecture"]
    model = ScoreNet(arch=arch, feature_norm=doc["feature_norm"], dtype=dtype)
    expected = layer_names(model.arch)
    for name, shape in expected.items():
        if name not in doc["layers"]:
            raise DataError(f"missing layer {name}")
        entry = doc["layers"][name]
        raw = base64.b64decode(entry["data"])
        if len(raw) % 4:
            raise DataError(f"layer {name}: data length does not match {shape}")
        arr = np.frombuffer(raw, dtype=np.float32)
        if arr.size != int(np.prod(shape)):
            raise DataError(f"layer {name}: data length does not match {shape}")
        with torch.no_grad():
            model.p(name).copy_(
                torch.from_numpy(arr.reshape(shape).copy()).to(dtype)
            )
    return model.eval()  # imported weights are for inference until .train()

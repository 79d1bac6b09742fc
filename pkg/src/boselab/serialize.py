"""Checkpoint format for canonical MPS states (versioned npz container)."""

from __future__ import annotations

import json

import numpy as np

from .errors import ValidationError
from .mps import CanonicalMps

MAGIC = "BOSELAB-MPS"
VERSION = 1


def save_mps(state: CanonicalMps, path) -> None:
    meta = {
        "magic": MAGIC,
        "version": VERSION,
        "n_sites": state.n_sites,
        "total": state.total,
        "local_dim": state.local_dim,
        "chi_max": state.chi_max,
        "trunc_rel": state.trunc_rel,
    }
    payload = {"meta": np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)}
    for i, g in enumerate(state.gammas):
        payload[f"gamma_{i}"] = g
    for i, lam in enumerate(state.lambdas):
        payload[f"lambda_{i}"] = lam
    for i, c in enumerate(state.charges):
        payload[f"charge_{i}"] = c
    np.savez_compressed(path, **payload)


def load_mps(path) -> CanonicalMps:
    with np.load(path) as data:
        try:
            meta = json.loads(bytes(data["meta"]).decode())
        except (KeyError, ValueError) as exc:
            raise ValidationError("not a boselab MPS container") from exc
        if meta.get("magic") != MAGIC:
            raise ValidationError("bad magic header in MPS container")
        if meta.get("version") != VERSION:
            raise ValidationError(f"unsupported MPS format version {meta.get('version')}")
        n = meta["n_sites"]
        gammas = [np.ascontiguousarray(data[f"gamma_{i}"]) for i in range(n)]
        lambdas = [np.ascontiguousarray(data[f"lambda_{i}"]) for i in range(n + 1)]
        charges = [np.ascontiguousarray(data[f"charge_{i}"]) for i in range(n + 1)]
    chi_max = meta.get("chi_max")
    return CanonicalMps(gammas, lambdas, charges, meta["total"],
                        chi_max=chi_max, trunc_rel=meta["trunc_rel"])

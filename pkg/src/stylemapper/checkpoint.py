"""Checkpoint archives: a zip of parameter arrays plus a JSON manifest.

One format serves every network.  Entries:
  manifest.json          kind, architecture config, seed, creation metadata,
                         and kind-specific extras (training config, loss
                         trace length, reference hashes, ...)
  arrays/<name>.npy      one array per state-dict entry

Zip entries carry a fixed timestamp so identical contents produce identical
bytes; pass `created` explicitly to pin the manifest too.
"""

import hashlib
import io
import json
import zipfile
from datetime import datetime, timezone

import numpy as np
import torch

from .config import ArchConfig

FORMAT_VERSION = 1
_ZIP_DATE = (1980, 1, 1, 0, 0, 0)


def _npy_bytes(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    np.lib.format.write_array(buf, np.ascontiguousarray(arr), version=(1, 0))
    return buf.getvalue()


def state_arrays(module: torch.nn.Module, prefix: str = "") -> dict:
    """State dict (params + buffers) as numpy arrays, names optionally prefixed."""
    out = {}
    for name, tensor in module.state_dict().items():
        out[prefix + name] = tensor.detach().cpu().numpy()
    return out


def load_state_arrays(module: torch.nn.Module, arrays: dict, prefix: str = "") -> None:
    state = {}
    for name, arr in arrays.items():
        if name.startswith(prefix):
            state[name[len(prefix):]] = torch.from_numpy(arr.copy())
    module.load_state_dict(state, strict=True)


def params_hash(module: torch.nn.Module) -> str:
    """Content hash of a module's full state (params and buffers)."""
    h = hashlib.sha256()
    for name, tensor in sorted(module.state_dict().items()):
        arr = tensor.detach().cpu().numpy()
        h.update(name.encode())
        h.update(str(arr.dtype).encode())
        h.update(str(arr.shape).encode())
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()


def image_hash(img: torch.Tensor) -> str:
    arr = img.detach().cpu().numpy()
    return hashlib.sha256(np.ascontiguousarray(arr).tobytes()).hexdigest()


def save_archive(path, manifest: dict, arrays: dict, created: str | None = None) -> None:
    manifest = dict(manifest)
    manifest["format_version"] = FORMAT_VERSION
    manifest["created"] = created or datetime.now(timezone.utc).isoformat(timespec="seconds")
    manifest["arrays"] = sorted(arrays)
    with zipfile.ZipFile(path, "w", zipfile.ZIP_DEFLATED, compresslevel=6) as zf:
        info = zipfile.ZipInfo("manifest.json", date_time=_ZIP_DATE)
        zf.writestr(info, json.dumps(manifest, sort_keys=True, indent=2))
        for name in sorted(arrays):
            info = zipfile.ZipInfo(f"arrays/{name}.npy", date_time=_ZIP_DATE)
            zf.writestr(info, _npy_bytes(arrays[name]))


def load_archive(path):
    with zipfile.ZipFile(path, "r") as zf:
        manifest = json.loads(zf.read("manifest.json"))
        if manifest.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint format: {manifest.get('format_version')}")
        arrays = {}
        for name in manifest["arrays"]:
            arrays[name] = np.lib.format.read_array(io.BytesIO(zf.read(f"arrays/{name}.npy")))
    return manifest, arrays


def _arch(manifest) -> ArchConfig:
    return ArchConfig.from_dict(manifest["arch"])


def _dtype(manifest) -> torch.dtype:
    return {"float32": torch.float32, "float64": torch.float64}[manifest.get("dtype", "float32")]


def _dtype_name(module) -> str:
    return str(next(module.parameters()).dtype).removeprefix("torch.")


# -- base pair (generator + critic) -----------------------------------------

def save_base(path, gen, critic, seed: int = 0, extra: dict | None = None,
              created: str | None = None) -> None:
    manifest = {
        "kind": "base",
        "arch": gen.cfg.to_dict(),
        "dtype": _dtype_name(gen),
        "seed": seed,
        "extra": extra or {},
    }
    arrays = state_arrays(gen, "generator.") | state_arrays(critic, "critic.")
    save_archive(path, manifest, arrays, created)


def load_base(path):
    from .critic import Critic
    from .generator import Generator

    manifest, arrays = load_archive(path)
    if manifest["kind"] != "base":
        raise ValueError(f"expected a base checkpoint, got kind={manifest['kind']!r}")
    gen = Generator(_arch(manifest)).to(_dtype(manifest))
    critic = Critic(_arch(manifest)).to(_dtype(manifest))
    load_state_arrays(gen, arrays, "generator.")
    load_state_arrays(critic, arrays, "critic.")
    gen.eval()
    critic.eval()
    return gen, critic, manifest


# -- encoder ------------------------------------------------------------------

def save_encoder(path, enc, seed: int = 0, extra: dict | None = None,
                 created: str | None = None) -> None:
    manifest = {
        "kind": "encoder",
        "arch": enc.cfg.to_dict(),
        "dtype": _dtype_name(enc),
        "seed": seed,
        "extra": extra or {},
    }
    save_archive(path, manifest, state_arrays(enc, "encoder."), created)


def load_encoder(path):
    from .inversion import Encoder

    manifest, arrays = load_archive(path)
    if manifest["kind"] != "encoder":
        raise ValueError(f"expected an encoder checkpoint, got kind={manifest['kind']!r}")
    enc = Encoder(_arch(manifest)).to(_dtype(manifest))
    load_state_arrays(enc, arrays, "encoder.")
    enc.eval()
    return enc, manifest


# -- finetuned style mapper ---------------------------------------------------

def save_mapper(path, mapper, created: str | None = None) -> None:
    manifest = {
        "kind": "mapper",
        "arch": mapper.params.cfg.to_dict(),
        "dtype": _dtype_name(mapper.params),
        "base_hash": mapper.base_hash,
        "config": mapper.config.to_dict(),
        "reference_hashes": list(mapper.reference_hashes),
        "extra": {},
    }
    arrays = state_arrays(mapper.params, "generator.")
    arrays["loss_trace"] = np.asarray(mapper.loss_trace, dtype=np.float64)
    save_archive(path, manifest, arrays, created)


def load_mapper(path):
    from .finetuner import MapperCheckpoint, TrainConfig
    from .generator import Generator

    manifest, arrays = load_archive(path)
    if manifest["kind"] != "mapper":
        raise ValueError(f"expected a mapper checkpoint, got kind={manifest['kind']!r}")
    gen = Generator(_arch(manifest)).to(_dtype(manifest))
    load_state_arrays(gen, {k: v for k, v in arrays.items() if k.startswith("generator.")},
                      "generator.")
    gen.eval()
    return MapperCheckpoint(
        params=gen,
        base_hash=manifest["base_hash"],
        config=TrainConfig.from_dict(manifest["config"]),
        reference_hashes=list(manifest["reference_hashes"]),
        loss_trace=arrays["loss_trace"].tolist(),
    )

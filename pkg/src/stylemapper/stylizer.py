"""Inference: apply a trained style mapper to new images.

The style code is computed once with the base generator's heads and fed to
both trunks, so alpha=0 reproduces the base reconstruction of the input and
alpha=1 is exactly the mapper's output for that code.
"""

import logging
import time

import torch

from .finetuner import MapperCheckpoint
from .generator import Generator, synthesize_interpolated
from .inversion import Encoder, invert_with_info

log = logging.getLogger(__name__)


def _check_pair(base: Generator, mapper: MapperCheckpoint):
    if mapper.params.cfg != base.cfg:
        raise ValueError("mapper architecture does not match the base generator")
    da = next(base.parameters()).dtype
    db = next(mapper.params.parameters()).dtype
    if da != db:
        raise ValueError(
            f"dtype mismatch: base {da} vs mapper {db}; cast one side first "
            "(e.g. mapper.params.to(torch.float32))")


def stylize_with_info(u: torch.Tensor, base: Generator, mapper: MapperCheckpoint,
                      enc: Encoder, alpha: float = 1.0):
    """Stylize one image (3, H, W); returns (image, info).

    Off-size inputs are resized to the model resolution; the transform is
    recorded in info. Pure given fixed checkpoints.
    """
    _check_pair(base, mapper)
    if enc.cfg != base.cfg:
        raise ValueError("encoder architecture does not match the base generator")
    if not (0.0 <= alpha <= 1.0):
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    if u.ndim != 3:
        raise ValueError(f"expected a single (3, H, W) image, got {tuple(u.shape)}")
    w, info = invert_with_info(u, enc)
    with torch.no_grad():
        s = base.style_from_w(w.unsqueeze(0))
        img = synthesize_interpolated(s, base, mapper.params, alpha)
    return img.squeeze(0), info


def stylize(u: torch.Tensor, base: Generator, mapper: MapperCheckpoint,
            enc: Encoder, alpha: float = 1.0) -> torch.Tensor:
    img, _ = stylize_with_info(u, base, mapper, enc, alpha)
    return img


def sample_stylized(z: torch.Tensor, mapper: MapperCheckpoint) -> torch.Tensor:
    """Random stylized sample: the mapper's own generator end to end.

    Deterministic per (z, mapper). Accepts (z_dim,) or (N, z_dim).
    """
    gen = mapper.params
    single = z.ndim == 1
    zb = z.unsqueeze(0) if single else z
    with torch.no_grad():
        imgs = gen(zb.to(next(gen.parameters()).dtype))
    return imgs.squeeze(0) if single else imgs


def stylize_batch(inputs, base: Generator, mapper: MapperCheckpoint,
                  enc: Encoder, alpha: float = 1.0):
    """Map `stylize` over inputs, order preserved.

    Per-item failures do not abort the batch: the output slot is None and the
    error is collected as (index, message). Returns (outputs, errors).
    """
    outputs, errors = [], []
    for i, u in enumerate(inputs):
        t0 = time.perf_counter()
        try:
            outputs.append(stylize(u, base, mapper, enc, alpha))
            log.info("stylized input %d in %.3fs", i, time.perf_counter() - t0)
        except Exception as exc:
            outputs.append(None)
            errors.append((i, str(exc)))
            log.warning("input %d failed: %s", i, exc)
    return outputs, errors

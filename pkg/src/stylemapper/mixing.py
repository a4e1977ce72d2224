"""Masked style mixing: builds the synthetic paired training set.

Given a reference code and a per-layer mask m, each sample keeps the
reference entries where m = 1 and takes entries from a fresh random latent
where m = 0:

    code_i = m * ref + (1 - m) * code(z_i),   z_i ~ N(0, I)

Mixing happens in S space (per-layer style vectors) by default, or on
per-layer w vectors before the affine style heads ("w" space).
"""

from dataclasses import dataclass, field

import torch

from .generator import Generator

PRESET_NAMES = ("all_ones", "preserve_color_C", "transfer_color_X", "ood_blend")


def mask_preset(name: str, num_layers: int) -> torch.Tensor:
    """Named per-layer masks, defined by layer fraction so any L works.

    Layer roles follow the usual coarse -> fine ordering of a style trunk:
    the first ~40% of layers carry pose/layout, the middle texture and part
    shapes, the last ~20% color.  `ood_blend` is the virtual-inverter mask:
    all ones except a few mid layers that borrow the mean code (exactly
    layers 7, 9, 11 at the 26-layer full scale).
    """
    L = num_layers
    if L < 5:
        raise ValueError(f"mask presets need at least 5 layers, got {L}")
    coarse = round(0.4 * L)
    fine = round(0.2 * L)
    if name == "all_ones":
        bits = torch.ones(L)
    elif name == "preserve_color_C":
        bits = torch.zeros(L)
        bits[:coarse] = 1.0
        bits[L - fine:] = 1.0
    elif name == "transfer_color_X":
        bits = torch.zeros(L)
        bits[:coarse] = 1.0
    elif name == "ood_blend":
        bits = torch.ones(L)
        for k in (7, 9, 11):
            bits[(k * L) // 26] = 0.0
    else:
        raise ValueError(f"unknown mask preset {name!r}; choose from {PRESET_NAMES}")
    return bits


def check_mask(mask, num_layers: int) -> torch.Tensor:
    """Validate and normalize a per-layer (or per-channel) mask to a tensor."""
    m = torch.as_tensor(mask, dtype=torch.float32)
    if m.ndim not in (1, 2) or m.shape[0] != num_layers:
        raise ValueError(f"mask must have {num_layers} layers, got shape {tuple(m.shape)}")
    if not torch.isfinite(m).all() or m.min() < 0 or m.max() > 1:
        raise ValueError("mask entries must be finite and within [0, 1]")
    return m


@dataclass
class MixConfig:
    mask: list = field(default_factory=list)  # length-L bits, or (L, D) rows
    space: str = "s"                          # "s" | "w"
    batch: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.space not in ("s", "w"):
            raise ValueError(f"mixing space must be 's' or 'w', got {self.space!r}")
        if self.batch < 1:
            raise ValueError("batch must be >= 1")


def mix_styles(ref_code: torch.Tensor, cfg: MixConfig, gen: Generator,
               rng: torch.Generator | None = None) -> torch.Tensor:
    """Produce a batch of style codes mixed around the reference.

    `ref_code` is (L, style_dim) in "s" space, or per-layer w vectors
    (L, w_dim) in "w" space (mixing then happens before the style heads).
    Pass a persistent `rng` to draw fresh latents across successive calls;
    otherwise a stream seeded from cfg.seed is created per call.

    Returns style codes of shape (batch, L, style_dim).
    """
    L = gen.cfg.num_layers
    mask = check_mask(cfg.mask, L).to(ref_code.dtype)
    m = mask.reshape(L, 1) if mask.ndim == 1 else mask
    if ref_code.shape[0] != L:
        raise ValueError(f"reference code must have {L} layers, got {ref_code.shape[0]}")
    if rng is None:
        rng = torch.Generator().manual_seed(cfg.seed)

    dtype = next(gen.parameters()).dtype
    z = torch.randn(cfg.batch, gen.cfg.z_dim, generator=rng).to(dtype)
    if cfg.space == "s":
        if ref_code.shape[1] != gen.cfg.style_dim:
            raise ValueError("s-space reference code has wrong width")
        rand_codes = gen.styles_from_z(z)
        return m * ref_code + (1 - m) * rand_codes
    # "w": mix per-layer w vectors, then push each layer through its style head
    if ref_code.shape[1] != gen.cfg.w_dim:
        raise ValueError("w-space reference code has wrong width")
    w_rand = gen.map_latent(z).unsqueeze(1)                 # (batch, 1, w_dim)
    mixed_w = m * ref_code + (1 - m) * w_rand               # (batch, L, w_dim)
    return gen.style_from_wplus(mixed_w)

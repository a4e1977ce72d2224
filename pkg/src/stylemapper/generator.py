"""Style-based generator: latent mapping, per-layer style heads, synthesis trunk.

Latent conventions (all tensors, batch-first):
  z       (N, z_dim)            standard-normal input latents
  w       (N, w_dim)            mapped latents
  styles  (N, L, style_dim)     per-layer style codes ("S space")

The trunk has two style-modulated convolutions per resolution block; the
style code therefore has L = 2 * num_blocks layers.  Per-layer fixed noise
buffers are part of the parameter snapshot, so synthesis is deterministic
for a given checkpoint.
"""

import contextlib
import math

import torch
import torch.nn.functional as F
from torch import nn

from .config import ArchConfig
from .layers import EqualLinear, StyledConv, ToRGB, lrelu


class PixelNorm(nn.Module):
    def forward(self, x):
        return x * torch.rsqrt(x.pow(2).mean(dim=1, keepdim=True) + 1e-8)


@contextlib.contextmanager
def _seeded(seed):
    with torch.random.fork_rng():
        torch.manual_seed(seed)
        yield


class Generator(nn.Module):
    """The full parameter snapshot: mapping net, style heads, trunk, toRGB."""

    def __init__(self, cfg: ArchConfig = ArchConfig(), seed: int = 0):
        super().__init__()
        self.cfg = cfg
        ch = cfg.channels
        with _seeded(seed):
            mapping = [PixelNorm()]
            for i in range(cfg.mapping_layers):
                in_dim = cfg.z_dim if i == 0 else cfg.w_dim
                mapping += [EqualLinear(in_dim, cfg.w_dim), nn.LeakyReLU(0.2)]
            self.mapping = nn.Sequential(*mapping)

            self.style_heads = nn.ModuleList(
                EqualLinear(cfg.w_dim, cfg.style_dim, bias_init=1.0)
                for _ in range(cfg.num_layers)
            )

            self.const = nn.Parameter(torch.randn(1, ch, 4, 4))
            self.convs = nn.ModuleList()
            self.to_rgbs = nn.ModuleList()
            for b, res in enumerate(cfg.block_resolutions):
                self.convs.append(StyledConv(ch, ch, res, upsample=(b > 0)))
                self.convs.append(StyledConv(ch, ch, res))
                self.to_rgbs.append(ToRGB(ch))

    # -- latent pipeline ----------------------------------------------------

    def map_latent(self, z):
        """z -> w through the mapping network."""
        if z.ndim != 2 or z.shape[1] != self.cfg.z_dim:
            raise ValueError(f"expected z of shape (N, {self.cfg.z_dim}), got {tuple(z.shape)}")
        if not torch.isfinite(z).all():
            raise ValueError("z contains non-finite entries")
        return self.mapping(z)

    def style_from_w(self, w):
        """w -> per-layer style code (N, L, style_dim); each head is affine in w."""
        if w.ndim != 2 or w.shape[1] != self.cfg.w_dim:
            raise ValueError(f"expected w of shape (N, {self.cfg.w_dim}), got {tuple(w.shape)}")
        return torch.stack([head(w) for head in self.style_heads], dim=1)

    def style_from_wplus(self, wplus):
        """Per-layer w vectors (N, L, w_dim) -> style code (N, L, style_dim)."""
        if wplus.ndim != 3 or wplus.shape[1] != self.cfg.num_layers \
                or wplus.shape[2] != self.cfg.w_dim:
            raise ValueError(
                f"expected (N, {self.cfg.num_layers}, {self.cfg.w_dim}), got {tuple(wplus.shape)}")
        return torch.stack(
            [head(wplus[:, i]) for i, head in enumerate(self.style_heads)], dim=1)

    def styles_from_z(self, z):
        return self.style_from_w(self.map_latent(z))

    # -- synthesis ----------------------------------------------------------

    def _check_styles(self, styles):
        if styles.ndim != 3 or styles.shape[1] != self.cfg.num_layers \
                or styles.shape[2] != self.cfg.style_dim:
            raise ValueError(
                f"expected styles of shape (N, {self.cfg.num_layers}, "
                f"{self.cfg.style_dim}), got {tuple(styles.shape)}")

    def synthesize(self, styles):
        """Run the trunk; returns (image in [-1,1], list of per-layer features)."""
        self._check_styles(styles)
        n = styles.shape[0]
        x = self.const.expand(n, -1, -1, -1)
        feats = []
        rgb = None
        li = 0
        for b in range(self.cfg.num_blocks):
            for _ in range(2):
                x = self.convs[li](x, styles[:, li])
                feats.append(x)
                li += 1
            y = self.to_rgbs[b](x)
            rgb = y if rgb is None else F.interpolate(rgb, scale_factor=2, mode="nearest") + y
        return torch.tanh(rgb), feats

    def forward(self, z):
        img, _ = self.synthesize(self.styles_from_z(z))
        return img


def synthesize_interpolated(styles, gen_a: Generator, gen_b: Generator,
                            alpha: float, layers=None):
    """Blend the two trunks' per-layer features with weight alpha.

    Both generators walk the trunk in lockstep; after every styled conv the
    two feature maps are lerped ((1-alpha)*A + alpha*B) and fed to the next
    layer of both.  alpha=0 reproduces gen_a exactly, alpha=1 gen_b.
    `layers` restricts blending to a subset of trunk layer indices; at
    non-blended layers the trunks advance independently.
    """
    if gen_a.cfg != gen_b.cfg:
        raise ValueError(f"architecture mismatch: {gen_a.cfg} vs {gen_b.cfg}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    gen_a._check_styles(styles)
    blend_at = set(range(gen_a.cfg.num_layers)) if layers is None else set(layers)

    n = styles.shape[0]
    xa = gen_a.const.expand(n, -1, -1, -1)
    xb = gen_b.const.expand(n, -1, -1, -1)
    rgb = None
    li = 0
    for b in range(gen_a.cfg.num_blocks):
        for _ in range(2):
            xa = gen_a.convs[li](xa, styles[:, li])
            xb = gen_b.convs[li](xb, styles[:, li])
            if li in blend_at:
                xa = xb = (1 - alpha) * xa + alpha * xb
            li += 1
        y = (1 - alpha) * gen_a.to_rgbs[b](xa) + alpha * gen_b.to_rgbs[b](xb)
        rgb = y if rgb is None else F.interpolate(rgb, scale_factor=2, mode="nearest") + y
    return torch.tanh(rgb)


def mean_w(gen: Generator, n: int = 10000, seed: int = 0, batch: int = 1000):
    """Empirical mean of FC(z) over n standard-normal draws (seeded)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = torch.Generator().manual_seed(seed)
    total = torch.zeros(gen.cfg.w_dim, dtype=torch.float64)
    with torch.no_grad():
        for start in range(0, n, batch):
            k = min(batch, n - start)
            z = torch.randn(k, gen.cfg.z_dim, generator=rng).to(next(gen.parameters()).dtype)
            total += gen.map_latent(z).sum(dim=0).double()
    return (total / n).to(next(gen.parameters()).dtype)


def mean_style(gen: Generator, n: int = 10000, seed: int = 0, batch: int = 1000):
    """Empirical mean style code over n draws: mean of s(FC(z)); shape (L, style_dim)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = torch.Generator().manual_seed(seed)
    total = torch.zeros(gen.cfg.num_layers, gen.cfg.style_dim, dtype=torch.float64)
    with torch.no_grad():
        for start in range(0, n, batch):
            k = min(batch, n - start)
            z = torch.randn(k, gen.cfg.z_dim, generator=rng).to(next(gen.parameters()).dtype)
            total += gen.styles_from_z(z).sum(dim=0).double()
    return (total / n).to(next(gen.parameters()).dtype)

"""GAN inversion: a feed-forward encoder plus the blended "virtual inverter".

The encoder maps an image straight to a w latent.  It is trained
self-supervised on (w, G(s(w))) pairs sampled from the pretrained
generator: w-space L2 plus an image-space perceptual reconstruction term.

The virtual inverter blends the encoder's code with the mean style code per
layer, which tunes how realistic (vs faithful) the inversion of a style
reference looks and thereby which aspects of the style transfer.
"""

import math
import warnings
from dataclasses import dataclass, field

import torch
import torch.nn.functional as F
from torch import nn

from .config import ArchConfig
from .critic import Critic
from .generator import Generator, _seeded, mean_style, mean_w
from .layers import EqualConv2d, EqualLinear, lrelu
from .losses import perceptual_loss
from .mixing import check_mask


class Encoder(nn.Module):
    """Strided conv backbone + global pool + linear head to w."""

    def __init__(self, cfg: ArchConfig = ArchConfig(), seed: int = 0):
        super().__init__()
        self.cfg = cfg
        ch = cfg.channels
        depth = int(math.log2(cfg.resolution)) - 1  # resolution -> 2
        with _seeded(seed):
            self.from_rgb = EqualConv2d(3, ch, 3)
            self.blocks = nn.ModuleList(EqualConv2d(ch, ch, 3) for _ in range(depth))
            self.head1 = EqualLinear(ch, ch)
            self.head2 = EqualLinear(ch, cfg.w_dim)

    def forward(self, x):
        h = lrelu(self.from_rgb(x))
        for conv in self.blocks:
            h = F.avg_pool2d(lrelu(conv(h)), 2)
        h = lrelu(self.head1(h.mean(dim=(2, 3))))
        return self.head2(h)


def invert_with_info(img: torch.Tensor, enc: Encoder):
    """Feed-forward inversion; returns (w, info).  Off-size inputs are
    resized with a warning, and the transform is recorded in info."""
    single = img.ndim == 3
    x = img.unsqueeze(0) if single else img
    if x.ndim != 4 or x.shape[1] != 3:
        raise ValueError(f"expected (3, H, W) or (N, 3, H, W), got {tuple(img.shape)}")
    if not torch.isfinite(x).all():
        raise ValueError("image contains non-finite entries")
    res = enc.cfg.resolution
    info = {"resized": False, "input_size": list(x.shape[-2:])}
    if x.shape[-2:] != (res, res):
        warnings.warn(f"resizing {tuple(x.shape[-2:])} input to encoder resolution {res}")
        x = F.interpolate(x, size=(res, res), mode="bilinear", align_corners=False)
        info["resized"] = True
    with torch.no_grad():
        w = enc(x.to(next(enc.parameters()).dtype))
    return (w.squeeze(0) if single else w), info


def invert(img: torch.Tensor, enc: Encoder) -> torch.Tensor:
    """Image -> w, a pure function of (image, encoder weights)."""
    w, _ = invert_with_info(img, enc)
    return w


@dataclass
class BlendSpec:
    """Per-layer blend between the encoder inversion (mask=1) and a fallback
    source at mask=0 ("mean" borrows the mean style code)."""

    mask: list = field(default_factory=list)
    source: str = "mean"
    mean_samples: int = 10000
    seed: int = 0

    def __post_init__(self):
        if self.source not in ("mean", "encoder"):
            raise ValueError(f"blend source must be 'mean' or 'encoder', got {self.source!r}")

    def to_dict(self):
        mask = self.mask.tolist() if torch.is_tensor(self.mask) else list(self.mask)
        return {"mask": mask, "source": self.source,
                "mean_samples": self.mean_samples, "seed": self.seed}

    @classmethod
    def from_dict(cls, d):
        return cls(mask=list(d["mask"]), source=d.get("source", "mean"),
                   mean_samples=d.get("mean_samples", 10000), seed=d.get("seed", 0))


def virtual_invert(img: torch.Tensor, enc: Encoder, gen: Generator,
                   blend: BlendSpec) -> torch.Tensor:
    """Blend of s(invert(img)) with the mean style code, per layer (L, style_dim)."""
    L = gen.cfg.num_layers
    mask = check_mask(blend.mask, L).to(next(gen.parameters()).dtype)
    m = mask.reshape(L, 1) if mask.ndim == 1 else mask
    w = invert(img if img.ndim == 4 else img.unsqueeze(0), enc)
    with torch.no_grad():
        s_enc = gen.style_from_w(w).squeeze(0)
    if blend.source == "encoder":
        fallback = s_enc
    else:
        fallback = mean_style(gen, blend.mean_samples, seed=blend.seed)
    return m * s_enc + (1 - m) * fallback


def virtual_invert_w(img: torch.Tensor, enc: Encoder, gen: Generator,
                     blend: BlendSpec) -> torch.Tensor:
    """w-space analogue of `virtual_invert`: per-layer w rows (L, w_dim)."""
    L = gen.cfg.num_layers
    mask = check_mask(blend.mask, L).to(next(gen.parameters()).dtype)
    m = mask.reshape(L, 1) if mask.ndim == 1 else mask
    w = invert(img if img.ndim == 4 else img.unsqueeze(0), enc).squeeze(0)
    w_ref = w.unsqueeze(0).expand(L, -1)
    if blend.source == "encoder":
        fallback = w_ref
    else:
        fallback = mean_w(gen, blend.mean_samples, seed=blend.seed).unsqueeze(0).expand(L, -1)
    return m * w_ref + (1 - m) * fallback


@dataclass
class EncoderTrainConfig:
    steps: int = 2500
    batch: int = 8
    lr: float = 1e-3
    w_weight: float = 1.0
    perceptual_weight: float = 0.05
    taps: list | None = None
    seed: int = 0
    log_every: int = 100
    force: bool = False  # skip the pretrained-generator check


def looks_untrained(gen: Generator) -> bool:
    """Heuristic: a freshly initialized trunk has all-zero noise strengths
    and all-zero toRGB biases; any real pretraining moves them."""
    strengths = torch.stack([c.noise_strength.detach().abs() for c in gen.convs])
    rgb_bias = torch.cat([r.conv.bias.detach().abs() for r in gen.to_rgbs])
    return bool(strengths.max() < 1e-8 and rgb_bias.max() < 1e-8)


def train_encoder(gen: Generator, critic: Critic,
                  cfg: EncoderTrainConfig = EncoderTrainConfig(),
                  log=None) -> Encoder:
    """Self-supervised encoder training on generator samples.

    Each step draws z, renders x = G(s(FC(z))), and minimizes
    w_weight * ||E(x) - FC(z)||^2 / dim  +  perceptual_weight * L(G(s(E(x))), x).
    Deterministic under a fixed seed.
    """
    if looks_untrained(gen) and not cfg.force:
        raise ValueError(
            "generator looks untrained (zero noise strengths and toRGB biases); "
            "pretrain a base model first or set cfg.force=True")
    gen = gen.eval()
    for p in gen.parameters():
        p.requires_grad_(False)
    rng = torch.Generator().manual_seed(cfg.seed)
    enc = Encoder(gen.cfg, seed=cfg.seed)
    opt = torch.optim.Adam(enc.parameters(), lr=cfg.lr, betas=(0.9, 0.99))

    for step in range(cfg.steps):
        z = torch.randn(cfg.batch, gen.cfg.z_dim, generator=rng)
        with torch.no_grad():
            w = gen.map_latent(z)
            x, _ = gen.synthesize(gen.style_from_w(w))
        w_hat = enc(x)
        loss = cfg.w_weight * F.mse_loss(w_hat, w)
        if cfg.perceptual_weight > 0:
            recon, _ = gen.synthesize(gen.style_from_w(w_hat))
            loss = loss + cfg.perceptual_weight * perceptual_loss(recon, x, critic, cfg.taps)
        opt.zero_grad()
        loss.backward()
        opt.step()
        if log is not None and (step % cfg.log_every == 0 or step == cfg.steps - 1):
            log(step, float(loss))
    enc.eval()
    for p in enc.parameters():
        p.requires_grad_(False)
    return enc

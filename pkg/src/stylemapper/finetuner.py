"""Training: adversarial base pretraining and the style-mapper finetune loop.

Finetuning minimizes, over a private copy of the base generator,

    mean_k mean_i  L(G(code_ki; theta), y_k)  [+ id_weight * identity term]

where the code_ki are fresh masked mixes of the reference code drawn every
step.  The base parameters are never touched; the result is a deployable
mapper checkpoint with its config, reference hashes and full loss trace.
"""

import copy
import csv
import math
import tempfile
from dataclasses import dataclass, field, asdict
from pathlib import Path

import torch
import torch.nn.functional as F

from .checkpoint import image_hash, params_hash, save_base, save_mapper
from .config import ArchConfig
from .critic import Critic
from .generator import Generator, mean_style, mean_w
from .imagefiles import save_grid
from .inversion import BlendSpec, Encoder, invert, virtual_invert, virtual_invert_w
from .losses import Embedding, grayscale, identity_loss, perceptual_loss
from .mixing import MixConfig, check_mask, mask_preset, mix_styles


class TrainingDiverged(RuntimeError):
    def __init__(self, message, checkpoint_path=None):
        super().__init__(message)
        self.checkpoint_path = checkpoint_path


# -- base pretraining ---------------------------------------------------------


@dataclass
class PretrainConfig:
    steps: int = 6000
    batch: int = 8
    lr: float = 2.5e-3
    r1_gamma: float = 1.0
    r1_interval: int = 16
    ema_beta: float = 0.998
    seed: int = 0
    arch: ArchConfig = field(default_factory=ArchConfig)
    out_dir: str | None = None     # loss log, sample grids, snapshots
    log_every: int = 100
    sample_every: int = 1000
    snapshot_every: int = 1000


def _ema_update(ema: Generator, gen: Generator, beta: float):
    with torch.no_grad():
        for pe, pg in zip(ema.parameters(), gen.parameters()):
            pe.lerp_(pg, 1.0 - beta)


def pretrain_base(corpus, cfg: PretrainConfig = PretrainConfig()):
    """Adversarially pretrain a (generator, critic) base pair on an image corpus.

    `corpus` is a (N, 3, R, R) tensor in [-1, 1] (or a directory of PNGs).
    Fewer than 500 images is refused.  The returned generator carries EMA
    weights.  Deterministic for a fixed config and seed.
    """
    if isinstance(corpus, (str, Path)):
        from .imagefiles import load_png
        files = sorted(Path(corpus).glob("*.png"))
        corpus = torch.stack([load_png(f, cfg.arch.resolution) for f in files]) \
            if files else torch.empty(0, 3, cfg.arch.resolution, cfg.arch.resolution)
    n = corpus.shape[0]
    if n < 500:
        raise ValueError(f"corpus too small: {n} images (< 500); refusing to pretrain")
    res = cfg.arch.resolution
    if corpus.shape[1:] != (3, res, res):
        raise ValueError(f"corpus shape {tuple(corpus.shape)} does not match resolution {res}")

    gen = Generator(cfg.arch, seed=cfg.seed)
    critic = Critic(cfg.arch, seed=cfg.seed + 1)
    ema = copy.deepcopy(gen)
    rng = torch.Generator().manual_seed(cfg.seed)
    g_opt = torch.optim.Adam(gen.parameters(), lr=cfg.lr, betas=(0.0, 0.99))
    d_opt = torch.optim.Adam(critic.parameters(), lr=cfg.lr, betas=(0.0, 0.99))

    out = Path(cfg.out_dir) if cfg.out_dir else None
    log_rows = []
    if out:
        out.mkdir(parents=True, exist_ok=True)
        z_vis = torch.randn(16, cfg.arch.z_dim, generator=torch.Generator().manual_seed(cfg.seed))

    for step in range(cfg.steps):
        idx = torch.randint(0, n, (cfg.batch,), generator=rng)
        real = corpus[idx]
        flip = torch.rand(cfg.batch, generator=rng) < 0.5
        real = torch.where(flip.reshape(-1, 1, 1, 1), real.flip(-1), real)

        # critic step
        z = torch.randn(cfg.batch, cfg.arch.z_dim, generator=rng)
        with torch.no_grad():
            fake = gen(z)
        d_loss = F.softplus(critic.score(fake)).mean() + F.softplus(-critic.score(real)).mean()
        if cfg.r1_gamma > 0 and step % cfg.r1_interval == 0:
            real_g = real.detach().requires_grad_(True)
            score = critic.score(real_g).sum()
            (grad,) = torch.autograd.grad(score, real_g, create_graph=True)
            r1 = grad.pow(2).sum(dim=(1, 2, 3)).mean()
            d_loss = d_loss + 0.5 * cfg.r1_gamma * r1 * cfg.r1_interval
        d_opt.zero_grad()
        d_loss.backward()
        d_opt.step()

        # generator step
        z = torch.randn(cfg.batch, cfg.arch.z_dim, generator=rng)
        g_loss = F.softplus(-critic.score(gen(z))).mean()
        g_opt.zero_grad()
        g_loss.backward()
        g_opt.step()
        _ema_update(ema, gen, cfg.ema_beta)

        if not (math.isfinite(float(d_loss)) and math.isfinite(float(g_loss))):
            raise TrainingDiverged(f"non-finite pretraining loss at step {step}")
        if step % cfg.log_every == 0 or step == cfg.steps - 1:
            log_rows.append((step, float(d_loss), float(g_loss)))
            if out:
                with open(out / "loss_log.csv", "w", newline="") as fh:
                    wr = csv.writer(fh)
                    wr.writerow(["step", "d_loss", "g_loss"])
                    wr.writerows(log_rows)
        if out and cfg.sample_every and (step % cfg.sample_every == 0 or step == cfg.steps - 1):
            with torch.no_grad():
                grid = ema(z_vis)
            save_grid(grid, out / f"samples_{step:06d}.png", cols=4)
        if out and cfg.snapshot_every and step and step % cfg.snapshot_every == 0:
            save_base(out / "base_snapshot.ckpt", ema, critic, seed=cfg.seed,
                      extra={"step": step})

    ema.eval()
    critic.eval()
    for p in list(ema.parameters()) + list(critic.parameters()):
        p.requires_grad_(False)
    return ema, critic


# -- style-mapper finetuning ----------------------------------------------------


@dataclass
class TrainConfig:
    iterations: int = 300
    learning_rate: float = 2e-3
    batch: int = 4
    mask: list = field(default_factory=list)   # empty -> transfer_color_X preset
    mix_space: str = "s"
    id_weight: float = 0.0
    grayscale: bool = False
    ood_mean_code: bool = False
    blend: BlendSpec | None = None
    taps: list | None = None
    mean_samples: int = 10000
    seed: int = 0
    dtype: str = "float32"

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.id_weight < 0:
            raise ValueError("id_weight must be >= 0")
        if self.mix_space not in ("s", "w"):
            raise ValueError(f"mix_space must be 's' or 'w', got {self.mix_space!r}")
        if self.dtype not in ("float32", "float64"):
            raise ValueError(f"dtype must be float32 or float64, got {self.dtype!r}")

    def resolve_mask(self, num_layers: int) -> torch.Tensor:
        mask = self.mask if len(self.mask) else mask_preset("transfer_color_X", num_layers)
        return check_mask(mask, num_layers)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mask"] = self.mask.tolist() if torch.is_tensor(self.mask) else list(self.mask)
        d["blend"] = self.blend.to_dict() if self.blend else None
        if self.taps is not None:
            d["taps"] = list(self.taps)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        if d.get("blend"):
            d["blend"] = BlendSpec.from_dict(d["blend"])
        return cls(**d)


@dataclass
class MapperCheckpoint:
    """A deployable style mapper: finetuned params plus provenance."""

    params: Generator
    base_hash: str
    config: TrainConfig
    reference_hashes: list
    loss_trace: list

    def save(self, path, created: str | None = None):
        save_mapper(path, self, created)


def _reference_codes(base, enc, refs, cfg):
    """Per-reference base codes (the thing the mask mixes around)."""
    codes = []
    with torch.no_grad():
        for y in refs:
            if cfg.ood_mean_code:
                code = (mean_style(base, cfg.mean_samples, seed=cfg.seed)
                        if cfg.mix_space == "s"
                        else mean_w(base, cfg.mean_samples, seed=cfg.seed)
                        .unsqueeze(0).expand(base.cfg.num_layers, -1))
            elif cfg.blend is not None:
                code = (virtual_invert(y, enc, base, cfg.blend)
                        if cfg.mix_space == "s"
                        else virtual_invert_w(y, enc, base, cfg.blend))
            else:
                w = invert(y.unsqueeze(0), enc)
                code = (base.style_from_w(w).squeeze(0)
                        if cfg.mix_space == "s"
                        else w.squeeze(0).unsqueeze(0).expand(base.cfg.num_layers, -1))
            codes.append(code.detach().clone())
    return codes


def finetune(base: Generator, critic: Critic, enc: Encoder | None,
             refs, cfg: TrainConfig = TrainConfig(),
             embedding: Embedding | None = None,
             progress=None, diagnostics_dir=None) -> MapperCheckpoint:
    """Finetune a private copy of `base` so mixed codes map to the reference(s).

    `refs` is one image or a list of (3, R, R) images at the base resolution.
    The encoder may be omitted only in mean-code (`ood_mean_code`) mode.
    Returns the mapper checkpoint; `base` is left untouched.
    """
    if torch.is_tensor(refs) and refs.ndim == 3:
        refs = [refs]
    refs = list(refs)
    if not refs:
        raise ValueError("need at least one reference image")
    res = base.cfg.resolution
    for y in refs:
        if y.shape != (3, res, res):
            raise ValueError(f"reference shape {tuple(y.shape)} != (3, {res}, {res})")
    if critic.cfg != base.cfg:
        raise ValueError("critic architecture does not match the base generator")
    if enc is not None and enc.cfg != base.cfg:
        raise ValueError("encoder architecture does not match the base generator")
    if enc is None and not cfg.ood_mean_code:
        raise ValueError("an encoder is required unless ood_mean_code is set")
    mask = cfg.resolve_mask(base.cfg.num_layers)

    dt = torch.float64 if cfg.dtype == "float64" else torch.float32
    base_hash = params_hash(base)
    frozen = copy.deepcopy(base).to(dt).eval()
    for p in frozen.parameters():
        p.requires_grad_(False)
    gen = copy.deepcopy(base).to(dt)
    gen.train()
    for p in gen.parameters():
        p.requires_grad_(True)
    critic_f = copy.deepcopy(critic).to(dt).eval()
    for p in critic_f.parameters():
        p.requires_grad_(False)
    enc_f = None
    if enc is not None:
        enc_f = copy.deepcopy(enc).to(dt).eval()
        for p in enc_f.parameters():
            p.requires_grad_(False)

    refs_t = [y.to(dt) for y in refs]
    codes = _reference_codes(frozen, enc_f, refs_t, cfg)
    if embedding is None and cfg.id_weight > 0:
        embedding = Embedding(critic_f)
    mix_cfg = MixConfig(mask=mask, space=cfg.mix_space, batch=cfg.batch, seed=cfg.seed)
    rng = torch.Generator().manual_seed(cfg.seed)
    opt = torch.optim.Adam(gen.parameters(), lr=cfg.learning_rate, betas=(0.0, 0.99))

    trace = []
    for it in range(cfg.iterations):
        total = 0.0
        for code, y in zip(codes, refs_t):
            with torch.no_grad():
                mixed = mix_styles(code, mix_cfg, frozen, rng)
            imgs, _ = gen.synthesize(mixed)
            x, target = (grayscale(imgs), grayscale(y)) if cfg.grayscale else (imgs, y)
            loss = perceptual_loss(x, target.unsqueeze(0), critic_f, cfg.taps)
            if cfg.id_weight > 0:
                with torch.no_grad():
                    base_imgs, _ = frozen.synthesize(mixed)
                loss = loss + cfg.id_weight * identity_loss(base_imgs, imgs, embedding)
            total = total + loss
        total = total / len(refs_t)

        if not torch.isfinite(total):
            path = Path(diagnostics_dir or tempfile.mkdtemp(prefix="stylemapper_")) \
                / "diverged.ckpt"
            MapperCheckpoint(gen.eval(), base_hash, cfg,
                             [image_hash(y) for y in refs_t], trace).save(path)
            raise TrainingDiverged(
                f"non-finite finetune loss at iteration {it}", checkpoint_path=str(path))
        opt.zero_grad()
        total.backward()
        opt.step()
        trace.append(float(total))
        if progress is not None:
            progress(it, float(total))

    gen.eval()
    for p in gen.parameters():
        p.requires_grad_(False)
    return MapperCheckpoint(
        params=gen,
        base_hash=base_hash,
        config=cfg,
        reference_hashes=[image_hash(y) for y in refs_t],
        loss_trace=trace,
    )

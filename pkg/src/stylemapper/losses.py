"""Losses: critic feature matching, identity preservation, grayscaling.

The perceptual loss is the per-image L1 difference between critic
activations at chosen resblock taps: mean absolute difference per tap,
summed over taps (mean reduction keeps the scale stable across tap sizes).
"""

import random
from dataclasses import dataclass, field

import torch
import torch.nn.functional as F

from .critic import Critic, default_taps


def grayscale(x: torch.Tensor) -> torch.Tensor:
    """Replace all three channels by the per-pixel channel mean."""
    if x.shape[-3] != 3:
        raise ValueError(f"expected 3-channel images, got shape {tuple(x.shape)}")
    return x.mean(dim=-3, keepdim=True).expand_as(x)


def _batched(x):
    return x.unsqueeze(0) if x.ndim == 3 else x


def perceptual_loss(x: torch.Tensor, y: torch.Tensor, critic: Critic,
                    taps=None) -> torch.Tensor:
    """Sum over taps of the mean |activation difference|, averaged over the batch.

    Symmetric, nonnegative, zero iff the tap activations agree.  `y` may be
    a single image matched against a batch `x`.
    """
    x, y = _batched(x), _batched(y)
    if x.shape[-2:] != y.shape[-2:]:
        raise ValueError(f"resolution mismatch: {tuple(x.shape)} vs {tuple(y.shape)}")
    fx = critic.features(x, taps)
    fy = critic.features(y, taps)  # batch-1 y broadcasts against batched x
    total = 0.0
    for ax, ay in zip(fx, fy):
        total = total + (ax - ay).abs().mean(dim=(1, 2, 3))
    return total.mean()


class Embedding:
    """Image -> unit-norm vector, built on a frozen critic tap.

    The default pools a mid-level critic activation and L2-normalizes it; an
    optionally trained linear head (see `train_embedding`) sharpens it.
    """

    def __init__(self, critic: Critic, tap: int | None = None, head=None):
        self.critic = critic
        self.tap = tap if tap is not None else default_taps(critic.num_blocks)[0]
        self.head = head

    @property
    def dim(self) -> int:
        return self.critic.cfg.channels if self.head is None else self.head.weight.shape[0]

    def embed(self, x: torch.Tensor) -> torch.Tensor:
        """(N, 3, H, W) or (3, H, W) -> unit vectors (N, dim)."""
        x = _batched(x)
        feat = self.critic.features(x, [self.tap])[0].mean(dim=(2, 3))
        if self.head is not None:
            feat = self.head(feat)
        return F.normalize(feat, dim=1)


def identity_loss(a: torch.Tensor, b: torch.Tensor, emb: Embedding) -> torch.Tensor:
    """1 - cosine similarity of embeddings; inputs are grayscaled first.

    Values lie in [0, 2]; 0 when the embeddings coincide.  Batches reduce to
    the mean.
    """
    ea = emb.embed(grayscale(_batched(a)))
    eb = emb.embed(grayscale(_batched(b)))
    return (1 - F.cosine_similarity(ea, eb, dim=1)).mean()


@dataclass
class EmbeddingTrainConfig:
    train_head: bool = False
    tap: int | None = None
    dim: int = 64
    classes: int = 128       # corpus images treated as identities
    steps: int = 300
    batch: int = 16
    lr: float = 1e-2
    seed: int = 0


def _augment(imgs: torch.Tensor, rng: torch.Generator) -> torch.Tensor:
    """Shift/flip/rescale jitter used to make same-identity positives."""
    n, _, h, w = imgs.shape
    out = []
    for i in range(n):
        x = imgs[i:i + 1]
        if torch.rand((), generator=rng) < 0.5:
            x = x.flip(-1)
        scale = 1.0 + 0.15 * (torch.rand((), generator=rng).item() - 0.5)
        hh = max(8, int(round(h * scale)))
        x = F.interpolate(x, size=(hh, hh), mode="bilinear", align_corners=False)
        if hh >= h:
            top = int(torch.randint(0, hh - h + 1, (), generator=rng))
            left = int(torch.randint(0, hh - h + 1, (), generator=rng))
            x = x[:, :, top:top + h, left:left + w]
        else:
            pad = h - hh
            t = int(torch.randint(0, pad + 1, (), generator=rng))
            l = int(torch.randint(0, pad + 1, (), generator=rng))
            x = F.pad(x, (l, pad - l, t, pad - t), value=-1.0)
        x = x + 0.05 * torch.randn((), generator=rng)
        out.append(x.clamp(-1, 1))
    return torch.cat(out)


def train_embedding(critic: Critic, corpus: torch.Tensor | None = None,
                    cfg: EmbeddingTrainConfig = EmbeddingTrainConfig()) -> Embedding:
    """Build the face embedding; optionally train a small classification head.

    With `train_head` off this just wraps the pooled critic tap.  Otherwise
    `classes` corpus images act as identities; a linear head over the pooled
    tap is trained with softmax classification on augmented crops, and the
    normalized head output becomes the embedding.
    """
    from .layers import EqualLinear

    if not cfg.train_head:
        return Embedding(critic, tap=cfg.tap)
    if corpus is None or corpus.shape[0] < cfg.classes:
        raise ValueError(f"need a corpus with at least {cfg.classes} images to train the head")

    rng = torch.Generator().manual_seed(cfg.seed)
    py = random.Random(cfg.seed)
    ids = py.sample(range(corpus.shape[0]), cfg.classes)
    bank = grayscale(corpus[ids])
    ch = critic.cfg.channels

    with torch.random.fork_rng():
        torch.manual_seed(cfg.seed)
        head = EqualLinear(ch, cfg.dim)
        proto = torch.nn.Parameter(torch.randn(cfg.classes, cfg.dim))
    tap = cfg.tap if cfg.tap is not None else default_taps(critic.num_blocks)[0]
    opt = torch.optim.Adam(list(head.parameters()) + [proto], lr=cfg.lr)
    for _ in range(cfg.steps):
        cls = torch.randint(0, cfg.classes, (cfg.batch,), generator=rng)
        x = _augment(bank[cls], rng)
        with torch.no_grad():
            feat = critic.features(x, [tap])[0].mean(dim=(2, 3))
        e = F.normalize(head(feat), dim=1)
        logits = 10.0 * e @ F.normalize(proto, dim=1).T
        loss = F.cross_entropy(logits, cls)
        opt.zero_grad()
        loss.backward()
        opt.step()
    head.requires_grad_(False)
    return Embedding(critic, tap=tap, head=head)


def vgg_feature_loss(x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    """Optional comparison hook: VGG-feature L1 behind the same interface.

    Requires torchvision (not a package dependency); useful only for
    side-by-side comparisons against the critic feature loss.
    """
    try:
        from torchvision.models import vgg16
    except ImportError as e:
        raise RuntimeError("vgg_feature_loss needs torchvision installed") from e
    if not hasattr(vgg_feature_loss, "_net"):
        vgg_feature_loss._net = vgg16(weights=None).features[:16].eval()
    net = vgg_feature_loss._net
    x, y = _batched(x), _batched(y)
    if y.shape[0] == 1 and x.shape[0] > 1:
        y = y.expand_as(x)
    return (net(x) - net(y)).abs().mean()

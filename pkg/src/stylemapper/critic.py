"""Discriminator: adversarial pretraining head and frozen perceptual features.

The critic downsamples through a stack of residual blocks (one per octave,
resolution -> 2) and ends in a two-layer classifier head.  Intermediate
activations after chosen resblocks ("taps") feed the feature-matching
perceptual loss.
"""

import math

import torch
from torch import nn

from .config import ArchConfig
from .generator import _seeded
from .layers import CriticBlock, EqualConv2d, EqualLinear, lrelu


def default_taps(num_blocks: int):
    """All resblocks but the first: skip the earliest, keep mid/late features."""
    return list(range(1, num_blocks))


class Critic(nn.Module):
    def __init__(self, cfg: ArchConfig = ArchConfig(), seed: int = 0):
        super().__init__()
        self.cfg = cfg
        ch = cfg.channels
        self.num_blocks = int(math.log2(cfg.resolution)) - 1  # resolution -> 2
        if self.num_blocks < 2:
            raise ValueError(f"resolution {cfg.resolution} leaves too few resblocks")
        with _seeded(seed):
            self.from_rgb = EqualConv2d(3, ch, 1)
            self.blocks = nn.ModuleList(CriticBlock(ch, ch) for _ in range(self.num_blocks))
            self.head1 = EqualLinear(ch * 2 * 2, ch)
            self.head2 = EqualLinear(ch, 1)

    def _check_image(self, x):
        res = self.cfg.resolution
        if x.ndim != 4 or x.shape[1] != 3 or x.shape[2] != res or x.shape[3] != res:
            raise ValueError(f"expected image batch (N, 3, {res}, {res}), got {tuple(x.shape)}")

    def score(self, x):
        """Realness logit, one scalar per image."""
        self._check_image(x)
        h = lrelu(self.from_rgb(x))
        for block in self.blocks:
            h = block(h)
        h = lrelu(self.head1(h.flatten(1)))
        return self.head2(h).squeeze(1)

    def features(self, x, taps=None):
        """Activations after the listed resblocks, in tap order; params untouched."""
        self._check_image(x)
        if taps is None:
            taps = default_taps(self.num_blocks)
        taps = list(taps)
        for t in taps:
            if not 0 <= t < self.num_blocks:
                raise IndexError(f"tap {t} out of range for {self.num_blocks} resblocks")
        h = lrelu(self.from_rgb(x))
        acts = []
        for i, block in enumerate(self.blocks):
            h = block(h)
            if i in taps:
                acts.append(h)
        order = {t: k for k, t in enumerate(sorted(set(taps)))}
        return [acts[order[t]] for t in taps]

    def forward(self, x):
        return self.score(x)

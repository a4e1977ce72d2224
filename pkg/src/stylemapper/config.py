"""Architecture configuration shared by the generator, critic and encoder."""

import math
from dataclasses import dataclass, asdict


@dataclass(frozen=True)
class ArchConfig:
    """Shape of the desk-scale style-based generator and its companions.

    The synthesis trunk starts at 4x4 and doubles up to `resolution`, giving
    `log2(resolution) - 1` blocks with two style-modulated convolutions each.
    All trunk convolutions carry `channels` feature maps so that a style
    vector of length `style_dim == channels` modulates them directly.
    """

    resolution: int = 64
    z_dim: int = 64
    w_dim: int = 64
    style_dim: int = 64
    channels: int = 64
    mapping_layers: int = 3

    def __post_init__(self):
        if self.resolution < 8 or (self.resolution & (self.resolution - 1)) != 0:
            raise ValueError(f"resolution must be a power of two >= 8, got {self.resolution}")
        if self.style_dim != self.channels:
            raise ValueError("style_dim must equal channels (styles modulate conv inputs directly)")

    @property
    def num_blocks(self) -> int:
        return int(math.log2(self.resolution)) - 1

    @property
    def num_layers(self) -> int:
        """Style-modulated conv layers in the trunk (two per block)."""
        return 2 * self.num_blocks

    @property
    def block_resolutions(self):
        return [4 * 2 ** i for i in range(self.num_blocks)]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ArchConfig":
        return cls(**d)


DEFAULT_ARCH = ArchConfig()

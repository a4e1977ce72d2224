"""Image statistics used by the color-control and quality checks."""

import math

import torch


def _hue_chroma(img: torch.Tensor):
    """Per-pixel hue (radians) and chroma for images in [-1, 1]."""
    x = (img.clamp(-1, 1) + 1) / 2
    r, g, b = x[..., 0, :, :], x[..., 1, :, :], x[..., 2, :, :]
    # hexagonal projection; hue = atan2(beta, alpha), chroma = radius
    alpha = r - 0.5 * (g + b)
    beta = (math.sqrt(3) / 2) * (g - b)
    return torch.atan2(beta, alpha), torch.sqrt(alpha ** 2 + beta ** 2)


def mean_hue_deg(img: torch.Tensor) -> float:
    """Chroma-weighted circular mean hue of an image (or batch), in [0, 360).

    Weighting by chroma makes gray pixels (whose hue is undefined) count for
    nothing instead of injecting noise.
    """
    hue, chroma = _hue_chroma(img)
    c = torch.complex(chroma * torch.cos(hue), chroma * torch.sin(hue)).sum()
    if abs(c) < 1e-12:
        return 0.0
    return math.degrees(math.atan2(c.imag, c.real)) % 360.0


def mean_chroma(img: torch.Tensor) -> float:
    return float(_hue_chroma(img)[1].mean())


def hue_distance_deg(a: float, b: float) -> float:
    """Circular distance between two hue angles, in [0, 180]."""
    d = abs(a - b) % 360.0
    return min(d, 360.0 - d)


def mse(x: torch.Tensor, y: torch.Tensor) -> float:
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {tuple(x.shape)} vs {tuple(y.shape)}")
    return float((x - y).pow(2).mean())


def psnr(x: torch.Tensor, y: torch.Tensor, peak: float = 2.0) -> float:
    """Peak signal-to-noise ratio for images in [-1, 1] (peak-to-peak 2)."""
    err = mse(x, y)
    if err == 0:
        return math.inf
    return 10.0 * math.log10(peak ** 2 / err)

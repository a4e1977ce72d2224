"""PNG reading/writing and grid assembly.

Pixel convention: float tensors in [-1, 1], shape (3, H, W) or (N, 3, H, W);
files are 8-bit PNGs mapped linearly between [0, 255] and [-1, 1].
"""

import math
from pathlib import Path

import torch
from PIL import Image


def to_uint8(img: torch.Tensor) -> torch.Tensor:
    return ((img.detach().clamp(-1, 1) + 1) * 127.5).round().to(torch.uint8)


def from_uint8(data: torch.Tensor) -> torch.Tensor:
    return data.float() / 127.5 - 1.0


def save_png(img: torch.Tensor, path) -> None:
    """Write a (3, H, W) tensor in [-1, 1] as an 8-bit PNG."""
    if img.ndim != 3 or img.shape[0] != 3:
        raise ValueError(f"expected (3, H, W), got {tuple(img.shape)}")
    arr = to_uint8(img).permute(1, 2, 0).contiguous().numpy()
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr, "RGB").save(path, format="PNG")


def load_png(path, resolution: int | None = None) -> torch.Tensor:
    """Read a PNG as a (3, H, W) tensor in [-1, 1], optionally resized."""
    img = Image.open(path).convert("RGB")
    if resolution is not None and img.size != (resolution, resolution):
        img = img.resize((resolution, resolution), Image.LANCZOS)
    data = torch.frombuffer(bytearray(img.tobytes()), dtype=torch.uint8)
    data = data.reshape(img.height, img.width, 3).permute(2, 0, 1)
    return from_uint8(data)


def png_bytes(img: torch.Tensor) -> bytes:
    import io
    arr = to_uint8(img).permute(1, 2, 0).contiguous().numpy()
    buf = io.BytesIO()
    Image.fromarray(arr, "RGB").save(buf, format="PNG")
    return buf.getvalue()


def load_png_bytes(data: bytes, resolution: int | None = None) -> torch.Tensor:
    import io
    img = Image.open(io.BytesIO(data)).convert("RGB")
    if resolution is not None and img.size != (resolution, resolution):
        img = img.resize((resolution, resolution), Image.LANCZOS)
    raw = torch.frombuffer(bytearray(img.tobytes()), dtype=torch.uint8)
    return from_uint8(raw.reshape(img.height, img.width, 3).permute(2, 0, 1))


def image_grid(imgs: torch.Tensor, cols: int | None = None, pad: int = 2) -> torch.Tensor:
    """Tile (N, 3, H, W) into one (3, H', W') image with a dark gutter."""
    n, c, h, w = imgs.shape
    cols = cols or int(math.ceil(math.sqrt(n)))
    rows = int(math.ceil(n / cols))
    grid = torch.full((c, rows * (h + pad) + pad, cols * (w + pad) + pad), -1.0)
    for i in range(n):
        r, col = divmod(i, cols)
        y, x = pad + r * (h + pad), pad + col * (w + pad)
        grid[:, y:y + h, x:x + w] = imgs[i].clamp(-1, 1)
    return grid


def save_grid(imgs: torch.Tensor, path, cols: int | None = None) -> None:
    save_png(image_grid(imgs, cols), path)

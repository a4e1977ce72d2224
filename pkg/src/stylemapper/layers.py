"""Building blocks: equalized-lr layers, modulated convolution, resblocks."""

import math

import torch
import torch.nn.functional as F
from torch import nn


def lrelu(x):
    # gain keeps activation variance roughly unit through the trunk
    return F.leaky_relu(x, 0.2) * math.sqrt(2)


class EqualLinear(nn.Module):
    """Linear layer with equalized learning rate (runtime He scaling)."""

    def __init__(self, in_dim, out_dim, bias=True, bias_init=0.0):
        super().__init__()
        self.weight = nn.Parameter(torch.randn(out_dim, in_dim))
        self.bias = nn.Parameter(torch.full((out_dim,), float(bias_init))) if bias else None
        self.scale = 1.0 / math.sqrt(in_dim)

    def forward(self, x):
        return F.linear(x, self.weight * self.scale, self.bias)

    def extra_repr(self):
        return f"{self.weight.shape[1]}, {self.weight.shape[0]}"


class EqualConv2d(nn.Module):
    """3x3/1x1 convolution with equalized learning rate."""

    def __init__(self, in_ch, out_ch, kernel, bias=True):
        super().__init__()
        self.weight = nn.Parameter(torch.randn(out_ch, in_ch, kernel, kernel))
        self.bias = nn.Parameter(torch.zeros(out_ch)) if bias else None
        self.scale = 1.0 / math.sqrt(in_ch * kernel * kernel)
        self.padding = kernel // 2

    def forward(self, x):
        return F.conv2d(x, self.weight * self.scale, self.bias, padding=self.padding)


class ModulatedConv2d(nn.Module):
    """Weight-demodulated 3x3 convolution; the style vector scales input channels.

    Expects style of shape (N, in_ch). Optional nearest-neighbor 2x upsample
    happens before the convolution.
    """

    def __init__(self, in_ch, out_ch, kernel=3, upsample=False, demodulate=True):
        super().__init__()
        self.weight = nn.Parameter(torch.randn(out_ch, in_ch, kernel, kernel))
        self.scale = 1.0 / math.sqrt(in_ch * kernel * kernel)
        self.padding = kernel // 2
        self.upsample = upsample
        self.demodulate = demodulate

    def forward(self, x, style):
        n, in_ch, h, w = x.shape
        out_ch = self.weight.shape[0]
        if self.upsample:
            x = F.interpolate(x, scale_factor=2, mode="nearest")
            h, w = 2 * h, 2 * w

        weight = self.weight * self.scale
        weight = weight.unsqueeze(0) * style.reshape(n, 1, in_ch, 1, 1)
        if self.demodulate:
            denom = torch.rsqrt(weight.pow(2).sum(dim=(2, 3, 4)) + 1e-8)
            weight = weight * denom.reshape(n, out_ch, 1, 1, 1)

        x = x.reshape(1, n * in_ch, h, w)
        weight = weight.reshape(n * out_ch, in_ch, *self.weight.shape[2:])
        out = F.conv2d(x, weight, padding=self.padding, groups=n)
        return out.reshape(n, out_ch, h, w)


class StyledConv(nn.Module):
    """Modulated conv + fixed noise buffer + bias + leaky-rectifier."""

    def __init__(self, in_ch, out_ch, resolution, upsample=False):
        super().__init__()
        self.conv = ModulatedConv2d(in_ch, out_ch, 3, upsample=upsample)
        self.noise_strength = nn.Parameter(torch.zeros(()))
        self.bias = nn.Parameter(torch.zeros(out_ch))
        self.register_buffer("noise", torch.randn(1, 1, resolution, resolution))

    def forward(self, x, style):
        out = self.conv(x, style)
        out = out + self.noise_strength * self.noise
        out = out + self.bias.reshape(1, -1, 1, 1)
        return lrelu(out)


class ToRGB(nn.Module):
    """1x1 projection of trunk features to RGB (unmodulated)."""

    def __init__(self, in_ch):
        super().__init__()
        self.conv = EqualConv2d(in_ch, 3, 1)

    def forward(self, x):
        return self.conv(x)


class CriticBlock(nn.Module):
    """Residual downsampling block of the critic (halves spatial size)."""

    def __init__(self, in_ch, out_ch):
        super().__init__()
        self.conv1 = EqualConv2d(in_ch, in_ch, 3)
        self.conv2 = EqualConv2d(in_ch, out_ch, 3)
        self.skip = EqualConv2d(in_ch, out_ch, 1, bias=False)

    def forward(self, x):
        y = lrelu(self.conv1(x))
        y = F.avg_pool2d(lrelu(self.conv2(y)), 2)
        s = F.avg_pool2d(self.skip(x), 2)
        return (y + s) / math.sqrt(2)

"""Procedurally drawn aligned faces: the desk-scale training corpus.

Every face is rendered from a seeded parameter sample, so the corpus is
fully reproducible without shipping image files.  Faces are centered and
upright (the alignment the rest of the pipeline assumes), with varied skin
tones, hair, eyes, mouths and background hues.

Besides the photo-like corpus style, the renderer produces stylized
variants of the same geometry ("sketch", "poster:<hue>", "paint"), used as
style-reference fixtures in tests and demos.
"""

import colorsys
import random

import torch
from PIL import Image, ImageDraw, ImageFilter

_SS = 4  # supersampling factor for antialiased drawing


def _rgb(h, l, s):
    r, g, b = colorsys.hls_to_rgb(h % 1.0, min(max(l, 0.0), 1.0), min(max(s, 0.0), 1.0))
    return int(255 * r), int(255 * g), int(255 * b)


def sample_face_params(rng: random.Random) -> dict:
    """Draw one face's geometry and palette."""
    skin_h = rng.uniform(0.02, 0.10)
    skin_l = rng.uniform(0.35, 0.82)
    hair_choice = rng.random()
    if hair_choice < 0.35:
        hair = (rng.uniform(0.05, 0.12), rng.uniform(0.08, 0.25), rng.uniform(0.3, 0.7))  # dark/brown
    elif hair_choice < 0.6:
        hair = (rng.uniform(0.09, 0.15), rng.uniform(0.45, 0.7), rng.uniform(0.5, 0.9))  # blonde
    elif hair_choice < 0.75:
        hair = (rng.uniform(0.0, 0.05), rng.uniform(0.25, 0.45), rng.uniform(0.6, 0.9))  # red
    else:
        hair = (rng.random(), rng.uniform(0.2, 0.55), rng.uniform(0.4, 0.9))  # dyed
    return {
        "bg_h": rng.random(),
        "bg_l": rng.uniform(0.35, 0.75),
        "bg_s": rng.uniform(0.35, 0.9),
        "bg_dl": rng.uniform(-0.2, 0.2),
        "skin": (skin_h, skin_l, rng.uniform(0.35, 0.65)),
        "hair": hair,
        "bald": rng.random() < 0.06,
        "long_hair": rng.random() < 0.3,
        "hair_cap": rng.uniform(16, 38),          # cap chord angle, degrees
        "shirt": (rng.random(), rng.uniform(0.25, 0.6), rng.uniform(0.3, 0.9)),
        "head_rx": rng.uniform(0.26, 0.33),       # fractions of canvas
        "head_ry": rng.uniform(0.33, 0.40),
        "eye_dx": rng.uniform(0.38, 0.46),        # fraction of head_rx
        "eye_size": rng.uniform(0.8, 1.25),
        "iris": (rng.choice([0.08, 0.3, 0.55, 0.6, 0.65]), rng.uniform(0.2, 0.5), rng.uniform(0.4, 0.9)),
        "brow_tilt": rng.uniform(-0.25, 0.25),
        "brow_drop": rng.uniform(0.05, 0.11),
        "mouth_w": rng.uniform(0.45, 0.7),        # fraction of head_rx
        "mouth_curve": rng.uniform(-0.2, 0.6),
        "mouth_full": rng.random() < 0.5,
        "glasses": rng.random() < 0.12,
        "jitter": [rng.uniform(-0.008, 0.008) for _ in range(6)],
    }


def _palette(p: dict, style: str):
    """Resolve the drawing palette for a rendering style."""
    if style == "photo" or style == "paint":
        bg_top = _rgb(p["bg_h"], p["bg_l"], p["bg_s"])
        bg_bot = _rgb(p["bg_h"], p["bg_l"] + p["bg_dl"], p["bg_s"])
        skin = _rgb(*p["skin"])
        skin_edge = _rgb(p["skin"][0], p["skin"][1] - 0.12, p["skin"][2])
        hair = _rgb(*p["hair"])
        shirt = _rgb(*p["shirt"])
        iris = _rgb(*p["iris"])
        line = _rgb(p["skin"][0], max(p["skin"][1] - 0.25, 0.08), p["skin"][2])
        mouth = _rgb(0.99, 0.35, 0.55)
        outline = None
    elif style == "sketch":
        bg_top = bg_bot = (245, 243, 238)
        skin = (228, 226, 222)
        skin_edge = (140, 140, 140)
        hair = (70, 70, 70)
        shirt = (200, 198, 195)
        iris = (60, 60, 60)
        line = (50, 50, 50)
        mouth = (90, 90, 90)
        outline = (40, 40, 40)
    elif style.startswith("poster:"):
        hue = float(style.split(":", 1)[1])
        bg_top = bg_bot = _rgb(hue, 0.35, 0.95)
        skin = _rgb(hue, 0.62, 0.85)
        skin_edge = _rgb(hue, 0.45, 0.9)
        hair = _rgb(hue, 0.18, 0.9)
        shirt = _rgb(hue, 0.28, 0.9)
        iris = _rgb(hue, 0.15, 0.8)
        line = _rgb(hue, 0.12, 0.8)
        mouth = _rgb(hue, 0.3, 0.95)
        outline = _rgb(hue, 0.1, 0.9)
    else:
        raise ValueError(f"unknown render style: {style!r}")
    return dict(bg_top=bg_top, bg_bot=bg_bot, skin=skin, skin_edge=skin_edge, hair=hair,
                shirt=shirt, iris=iris, line=line, mouth=mouth, outline=outline)


def render_face(p: dict, resolution: int = 64, style: str = "photo") -> Image.Image:
    s = resolution * _SS
    pal = _palette(p, style)
    img = Image.new("RGB", (s, s))
    d = ImageDraw.Draw(img)

    # background gradient
    top, bot = pal["bg_top"], pal["bg_bot"]
    for y in range(s):
        t = y / max(s - 1, 1)
        d.line([(0, y), (s, y)], fill=tuple(int(a + (b - a) * t) for a, b in zip(top, bot)))

    jx, jy = p["jitter"][0] * s, p["jitter"][1] * s
    cx, cy = s / 2 + jx, s * 0.52 + jy
    rx, ry = p["head_rx"] * s, p["head_ry"] * s
    ow = max(2, s // 80) if pal["outline"] else 0

    # torso and neck
    d.rounded_rectangle([cx - rx * 1.5, s * 0.88, cx + rx * 1.5, s * 1.4],
                        radius=s * 0.12, fill=pal["shirt"], outline=pal["outline"], width=ow)
    d.rectangle([cx - rx * 0.28, cy + ry * 0.7, cx + rx * 0.28, s * 0.92], fill=pal["skin_edge"])

    # hair behind the head, then the face
    if not p["bald"]:
        hpad = rx * 0.12
        hbox = [cx - rx - hpad, cy - ry - hpad, cx + rx + hpad, cy + ry + hpad]
        if p["long_hair"]:
            d.rounded_rectangle([cx - rx - hpad, cy, cx + rx + hpad, s * 0.95],
                                radius=s * 0.05, fill=pal["hair"], outline=pal["outline"], width=ow)
        d.ellipse(hbox, fill=pal["hair"], outline=pal["outline"], width=ow)
    d.ellipse([cx - rx, cy - ry, cx + rx, cy + ry], fill=pal["skin"],
              outline=pal["outline"], width=ow)
    if not p["bald"]:
        hpad = rx * 0.12
        hbox = [cx - rx - hpad, cy - ry - hpad, cx + rx + hpad, cy + ry + hpad]
        a = p["hair_cap"]
        d.chord(hbox, 180 + a, 360 - a, fill=pal["hair"], outline=pal["outline"], width=ow)

    # eyes
    ex = p["eye_dx"] * rx
    ey = cy - ry * 0.10 + p["jitter"][2] * s
    er = rx * 0.16 * p["eye_size"]
    for sx in (-1, 1):
        x = cx + sx * ex
        d.ellipse([x - er, ey - er * 0.62, x + er, ey + er * 0.62], fill=(250, 250, 250),
                  outline=pal["line"], width=max(1, s // 128))
        ir = er * 0.55
        d.ellipse([x - ir, ey - ir, x + ir, ey + ir], fill=pal["iris"])
        pr = ir * 0.5
        d.ellipse([x - pr, ey - pr, x + pr, ey + pr], fill=(25, 22, 22))
        d.ellipse([x + pr * 0.2, ey - pr * 0.8, x + pr * 0.8, ey - pr * 0.2], fill=(240, 240, 240))
        # brow
        by = ey - er * 1.1 - p["brow_drop"] * ry
        tilt = p["brow_tilt"] * er * sx
        d.line([x - er * 0.9, by + tilt, x + er * 0.9, by - tilt],
               fill=pal["line"], width=max(2, s // 64))
        if p["glasses"]:
            gr = er * 1.25
            d.ellipse([x - gr, ey - gr * 0.85, x + gr, ey + gr * 0.85],
                      outline=(40, 40, 45), width=max(2, s // 100))
    if p["glasses"]:
        d.line([cx - ex + er * 1.25, ey, cx + ex - er * 1.25, ey], fill=(40, 40, 45),
               width=max(2, s // 100))

    # nose
    d.line([cx, cy - ry * 0.02, cx + rx * 0.05, cy + ry * 0.22],
           fill=pal["line"], width=max(2, s // 90))
    d.line([cx + rx * 0.05, cy + ry * 0.22, cx - rx * 0.03, cy + ry * 0.26],
           fill=pal["line"], width=max(2, s // 90))

    # mouth: quadratic arc, optionally with a filled lower lip
    mw = p["mouth_w"] * rx
    my = cy + ry * 0.5 + p["jitter"][3] * s
    curve = p["mouth_curve"] * mw * 0.5
    pts = []
    for t in range(17):
        u = t / 16
        pts.append((cx - mw / 2 + mw * u, my + curve * 4 * u * (1 - u)))
    if p["mouth_full"]:
        d.polygon(pts + [(cx + mw / 2, my + 1), (cx, my + abs(curve) * 0.8 + mw * 0.12),
                         (cx - mw / 2, my + 1)], fill=pal["mouth"])
    d.line(pts, fill=pal["line"] if style == "sketch" else _rgb(0.99, 0.25, 0.5),
           width=max(2, s // 70))

    if style == "paint":
        img = img.filter(ImageFilter.GaussianBlur(radius=s / 72))
    return img.resize((resolution, resolution), Image.LANCZOS)


def to_tensor(img: Image.Image) -> torch.Tensor:
    """PIL RGB -> float tensor (3, H, W) in [-1, 1]."""
    data = torch.frombuffer(bytearray(img.tobytes()), dtype=torch.uint8).float()
    data = data.reshape(img.height, img.width, 3).permute(2, 0, 1)
    return data / 127.5 - 1.0


def face_corpus(n: int, resolution: int = 64, seed: int = 0, offset: int = 0) -> torch.Tensor:
    """Render n aligned faces as a (N, 3, res, res) tensor in [-1, 1]."""
    out = torch.empty(n, 3, resolution, resolution)
    for i in range(n):
        rng = random.Random((seed << 20) ^ (offset + i) * 0x9E3779B1)
        out[i] = to_tensor(render_face(sample_face_params(rng), resolution))
    return out


def reference_image(style: str, seed: int = 0, resolution: int = 64) -> torch.Tensor:
    """One stylized face rendering, for use as a style reference fixture."""
    rng = random.Random((seed << 20) ^ 0xC0FFEE)
    return to_tensor(render_face(sample_face_params(rng), resolution, style=style))

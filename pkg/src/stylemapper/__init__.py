"""One-shot face stylization: finetune a style-based generator around a single
style reference, then map any aligned face into that style.

Pipeline: invert the reference to a per-layer style code, mix masked variants
of it with random codes, finetune a copy of the generator so those variants
all map to the reference, then stylize new faces through the finetuned copy,
optionally interpolating features against the base for intensity control.
"""

from .checkpoint import (load_base, load_encoder, load_mapper, params_hash,
                         save_base, save_encoder, save_mapper)
from .config import DEFAULT_ARCH, ArchConfig
from .critic import Critic, default_taps
from .faces import face_corpus, reference_image, render_face, sample_face_params
from .finetuner import (MapperCheckpoint, PretrainConfig, TrainConfig,
                        TrainingDiverged, finetune, pretrain_base)
from .generator import (Generator, mean_style, mean_w, synthesize_interpolated)
from .imagefiles import from_uint8, image_grid, load_png, save_grid, save_png, to_uint8
from .inversion import (BlendSpec, Encoder, EncoderTrainConfig, invert,
                        invert_with_info, train_encoder, virtual_invert)
from .losses import (Embedding, EmbeddingTrainConfig, grayscale, identity_loss,
                     perceptual_loss, train_embedding)
from .metrics import hue_distance_deg, mean_hue_deg, psnr
from .mixing import MixConfig, PRESET_NAMES, check_mask, mask_preset, mix_styles
from .stylizer import sample_stylized, stylize, stylize_batch, stylize_with_info

__version__ = "0.1.0"

__all__ = [
    "ArchConfig", "DEFAULT_ARCH",
    "Generator", "synthesize_interpolated", "mean_style", "mean_w",
    "Critic", "default_taps",
    "Encoder", "invert", "invert_with_info", "virtual_invert", "BlendSpec",
    "EncoderTrainConfig", "train_encoder",
    "MixConfig", "PRESET_NAMES", "mask_preset", "check_mask", "mix_styles",
    "perceptual_loss", "identity_loss", "grayscale", "Embedding",
    "EmbeddingTrainConfig", "train_embedding",
    "TrainConfig", "PretrainConfig", "MapperCheckpoint", "TrainingDiverged",
    "finetune", "pretrain_base",
    "stylize", "stylize_with_info", "stylize_batch", "sample_stylized",
    "save_base", "load_base", "save_encoder", "load_encoder",
    "save_mapper", "load_mapper", "params_hash",
    "face_corpus", "render_face", "reference_image", "sample_face_params",
    "to_uint8", "from_uint8", "save_png", "load_png", "save_grid", "image_grid",
    "mean_hue_deg", "hue_distance_deg", "psnr",
    "__version__",
]

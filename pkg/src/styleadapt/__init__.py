"""Style-transfer driven unsupervised domain adaptation for segmentation.

The package is organised bottom-up: a numpy reverse-mode autodiff core
(tensor, ops, optim, gradcheck), the networks built on it (styler, segnet,
ensemble), the data side (augment, toydata, metrics) and the training and
tooling layers (trainer, config, checkpoint, cli).
"""

from .augment import ColorJitterSpec, color_perturb, random_crop
from .checkpoint import (CheckpointError, load_checkpoint, load_segnet, load_styler,
                         save_checkpoint, save_segnet, save_styler)
from .config import Config, ConfigError, load_config, parse_config, serialize_config
from .ensemble import EnsemblePair, ema_update, init_teacher
from .gradcheck import grad_check, run_suite
from .images import from_nchw, psnr, to_nchw
from .metrics import ConfusionMatrix, iou, iou_report_csv, pixel_accuracy
from .ops import channel_moments, conv2d, maxpool2, softmax_channels, upsample_nearest2
from .optim import Adam, ParamSet, SGD, make_optimizer
from .rng import RngStream, make_streams
from .segnet import SegNet, build_segnet, seg_forward
from .styler import (StylerNet, adain, build_styler, generate, pretrain_autoencoder,
                     styler_loss, train_styler)
from .tensor import NumericsError, Tensor, tensor
from .toydata import (DomainSpec, NetpbmError, Scene, class_priors, generate_scene,
                      load_domain, make_dataset, read_pgm, read_ppm, real_b, synth_a,
                      write_pgm, write_ppm)
from .trainer import (ClassPriors, EvalRecord, HyperParams, StepRecord, TrainerState,
                      class_weights, evaluate_miou, make_pseudo_label,
                      make_trainer_state, perturb_target, pseudo_probs, sharpen,
                      supervised_loss, train_loop, train_step, translate_source,
                      unsupervised_loss)

__version__ = "0.1.0"

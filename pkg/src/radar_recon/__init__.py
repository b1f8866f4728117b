"""Desk-scale workbench for recovering missing radar receiving channels.

Synthetic FMCW MIMO frames, range-Doppler preprocessing, FFT beamforming, a
small numpy autodiff engine with a Unet, the two-space self-supervised loss,
metrics with a cubic-interpolation baseline, and a CFAR sparsity study.
"""
from .arrays import ChannelSplit, apply_split, make_split, reassemble
from .beamform import array_pattern, beamform, beamwidth, nci
from .errors import (ConfigurationError, FormatError, MeasurementError, NumericFault,
                     RadarReconError, ShapeError, UndefinedMetricError,
                     UnsupportedExtrapolationError, UsageError)
from .losses import LossOptions, LossWeights, total_loss
from .metrics import MetricsReport, bicubic_channels, l1_metric, psnr
from .model import ModelConfig, build_model, load_checkpoint, save_checkpoint
from .preproc import PreprocConfig, preprocess
from .scene import PointTarget, RadarParams, Scene, SceneSpec, make_scene, synth_raw

__version__ = "0.1.0"

"""Class-imbalance remedies (under/over-sampling, SMOTE, minority GAN) and
their downstream effect on minority-class F1."""
from .classifiers import ClassifierSpec, predict, predict_proba, train_classifier
from .config import RunConfig, load_config
from .dataset import (Dataset, ScalerParams, SynthBenchConfig, load_csv, make_synthetic,
                      standardize, stratified_split, write_csv)
from .gan import (GanConfig, GanModel, TrainTrace, augment_with_gan, discriminator_loss,
                  generate, generator_loss, train_gan, value_function)
from .metrics import ConfusionMatrix, EvalReport, confusion, scores
from .nn import MlpNetwork, build_mlp, grad_check, mlp_backward, mlp_forward, sgd_step
from .pipeline import run_matrix, run_pipeline
from .rng import Rng, rng_normal, rng_uniform
from .samplers import AugmentSpec, oversample, smote, undersample

__version__ = "0.1.0"

__all__ = [
    "ClassifierSpec",
    "predict",
    "predict_proba",
    "train_classifier",
    "RunConfig",
    "load_config",
    "Dataset",
    "ScalerParams",
    "SynthBenchConfig",
    "load_csv",
    "make_synthetic",
    "standardize",
    "stratified_split",
    "write_csv",
    "GanConfig",
    "GanModel",
    "TrainTrace",
    "augment_with_gan",
    "discriminator_loss",
    "generate",
    "generator_loss",
    "train_gan",
    "value_function",
    "ConfusionMatrix",
    "EvalReport",
    "confusion",
    "scores",
    "MlpNetwork",
    "build_mlp",
    "grad_check",
    "mlp_backward",
    "mlp_forward",
    "sgd_step",
    "run_matrix",
    "run_pipeline",
    "Rng",
    "rng_normal",
    "rng_uniform",
    "AugmentSpec",
    "oversample",
    "smote",
    "undersample",
]

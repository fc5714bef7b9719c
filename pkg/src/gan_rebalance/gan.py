"""Minority-class GAN for tabular rebalancing.

The generator maps noise to standardized feature vectors; the discriminator
scores rows as real (1) or generated (0). Training alternates SGD steps on

    L_D = -mean log D(x) - mean log(1 - D(G(z)))
    L_G = -mean log D(G(z))

with the generator step backpropagating through the (frozen) discriminator.
The GAN only ever sees minority rows, so it models the minority
distribution directly.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dataset import SYNTHETIC, Dataset, ScalerParams, concat, fit_scaler
from .errors import DataError, TrainingError
from .nn import (MlpNetwork, build_mlp, clamp_prob, max_relative_error, mlp_backward,
                 mlp_forward, numeric_gradient, sgd_step, forward_xp, loss_xp,
                 xp_params)
from .rng import Rng
from .samplers import AugmentSpec, minority_target

log = logging.getLogger(__name__)


@dataclass
class GanConfig:
    noise_dim: int = 16
    noise_kind: str = "normal"
    g_hidden: list = field(default_factory=lambda: [64, 64])
    d_hidden: list = field(default_factory=lambda: [64, 32])
    lr_g: float = 1e-2
    lr_d: float = 1e-2
    batch_size: int = 64
    epochs: int = 2000
    d_steps_per_g_step: int = 1
    seed: int = 0

    def validate(self):
        for name in ("noise_dim", "batch_size", "d_steps_per_g_step"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if any(w < 1 for w in list(self.g_hidden) + list(self.d_hidden)):
            raise ValueError("hidden widths must be >= 1")
        if not (self.lr_g > 0 and self.lr_d > 0):
            raise ValueError("learning rates must be positive")
        if self.noise_kind not in ("normal", "uniform"):
            raise ValueError(f"noise_kind must be 'normal' or 'uniform', "
                             f"got {self.noise_kind!r}")


@dataclass
class GanModel:
    generator: MlpNetwork
    discriminator: MlpNetwork
    config: GanConfig
    scaler: ScalerParams
    feature_names: list

    def sample_noise(self, rng: Rng, n: int):
        return sample_noise(rng, n, self.config)


@dataclass
class TrainTrace:
    epoch: list = field(default_factory=list)
    loss_g: list = field(default_factory=list)
    loss_d: list = field(default_factory=list)
    d_real_mean: list = field(default_factory=list)
    d_fake_mean: list = field(default_factory=list)

    COLUMNS = ("epoch", "loss_g", "loss_d", "d_real_mean", "d_fake_mean")

    def __len__(self):
        return len(self.epoch)

    def append(self, *row):
        for name, value in zip(self.COLUMNS, row):
            getattr(self, name).append(value)

    def rows(self):
        return list(zip(*(getattr(self, c) for c in self.COLUMNS)))

    def write_csv(self, path):
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.COLUMNS)
            for row in self.rows():
                w.writerow([row[0]] + [f"{v:.17g}" for v in row[1:]])


def sample_noise(rng: Rng, n: int, cfg: GanConfig):
    if cfg.noise_kind == "uniform":
        z = 2.0 * rng.uniform(n * cfg.noise_dim) - 1.0
    else:
        z = rng.normal(n * cfg.noise_dim)
    return z.reshape(n, cfg.noise_dim)


def _probs(p):
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    if p.size == 0:
        raise ValueError("empty batch")
    return clamp_prob(p)


def discriminator_loss(d_real, d_fake) -> float:
    real, fake = _probs(d_real), _probs(d_fake)
    return float(-np.mean(np.log(real)) - np.mean(np.log1p(-fake)))


def generator_loss(d_fake) -> float:
    return float(-np.mean(np.log(_probs(d_fake))))


def value_function(d_real, d_fake) -> float:
    """Minimax value ``mean log D(x) + mean log(1 - D(G(z)))``; diagnostics only."""
    real, fake = _probs(d_real), _probs(d_fake)
    return float(np.mean(np.log(real)) + np.mean(np.log1p(-fake)))


def _d_real_grad(p):
    # d/dp of -mean log p
    return -1.0 / (len(p) * clamp_prob(p))


def _d_fake_grad(p):
    # d/dp of -mean log(1 - p)
    return 1.0 / (len(p) * (1.0 - clamp_prob(p)))


def init_gan(n_features: int, cfg: GanConfig, scaler: ScalerParams = None,
             feature_names=None) -> GanModel:
    cfg.validate()
    rng = Rng(cfg.seed)
    gen = build_mlp([cfg.noise_dim, *cfg.g_hidden, n_features], "leaky_relu",
                    "identity", rng.spawn("generator"))
    disc = build_mlp([n_features, *cfg.d_hidden, 1], "leaky_relu", "sigmoid",
                     rng.spawn("discriminator"))
    if scaler is None:
        scaler = ScalerParams(np.zeros(n_features), np.ones(n_features))
    if feature_names is None:
        feature_names = [f"x{i}" for i in range(n_features)]
    return GanModel(gen, disc, cfg, scaler, list(feature_names))


def discriminator_step(model: GanModel, real, z):
    """One SGD step on L_D. Returns ``(L_D, D(x), D(G(z)))`` before the step."""
    gen, disc = model.generator, model.discriminator
    fake = gen(z)
    p_real, cache_real = mlp_forward(disc, real)
    p_fake, cache_fake = mlp_forward(disc, fake)
    loss = discriminator_loss(p_real, p_fake)
    g_real = mlp_backward(disc, cache_real, _d_real_grad(p_real))
    g_fake = mlp_backward(disc, cache_fake, _d_fake_grad(p_fake))
    grads = g_real
    grads.weights = [a + b for a, b in zip(g_real.weights, g_fake.weights)]
    grads.biases = [a + b for a, b in zip(g_real.biases, g_fake.biases)]
    sgd_step(disc, grads, model.config.lr_d)
    return loss, p_real, p_fake


def generator_gradients(model: GanModel, z):
    """``(L_G, gradients of L_G w.r.t. generator parameters)`` through D."""
    gen, disc = model.generator, model.discriminator
    fake, cache_g = mlp_forward(gen, z)
    p_fake, cache_d = mlp_forward(disc, fake)
    loss = generator_loss(p_fake)
    through_d = mlp_backward(disc, cache_d, -1.0 / (len(p_fake) * clamp_prob(p_fake)))
    return loss, mlp_backward(gen, cache_g, through_d.input_grad)


def generator_step(model: GanModel, z):
    loss, grads = generator_gradients(model, z)
    sgd_step(model.generator, grads, model.config.lr_g)
    return loss


def train_gan(minority: Dataset, cfg: GanConfig):
    """Alternating GAN training on the rows of ``minority``.

    Rows are re-standardized with a scaler fitted on these rows alone; the
    scaler is stored on the model so :func:`generate` returns data in the
    caller's feature scale. Each epoch shuffles the rows and walks them in
    batches of ``cfg.batch_size`` (the last batch may be short). Per batch:
    ``d_steps_per_g_step`` discriminator steps, each with fresh noise, then
    one generator step.
    """
    cfg.validate()
    if len(minority) < 2:
        raise DataError(f"GAN training needs >= 2 rows, got {len(minority)}")
    scaler = fit_scaler(minority.features)
    x = scaler.transform(minority.features)
    model = init_gan(x.shape[1], cfg, scaler, minority.feature_names)
    trace = TrainTrace()
    rng = Rng(cfg.seed).spawn("train")
    n = len(x)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        lg, ld, dr, df = [], [], [], []
        for b, start in enumerate(range(0, n, cfg.batch_size)):
            real = x[order[start:start + cfg.batch_size]]
            for _ in range(cfg.d_steps_per_g_step):
                z = sample_noise(rng, len(real), cfg)
                try:
                    loss_d, p_real, p_fake = discriminator_step(model, real, z)
                except TrainingError as exc:
                    raise TrainingError(f"discriminator step failed at epoch {epoch}, "
                                        f"batch {b}: {exc}", epoch=epoch, batch=b) from exc
                ld.append(loss_d)
                dr.append(float(np.mean(p_real)))
                df.append(float(np.mean(p_fake)))
            try:
                lg.append(generator_step(model, sample_noise(rng, len(real), cfg)))
            except TrainingError as exc:
                raise TrainingError(f"generator step failed at epoch {epoch}, batch {b}: "
                                    f"{exc}", epoch=epoch, batch=b) from exc
            if not (np.isfinite(lg[-1]) and np.isfinite(ld[-1])):
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch {b}",
                                    epoch=epoch, batch=b)
        trace.append(epoch, float(np.mean(lg)), float(np.mean(ld)),
                     float(np.mean(dr)), float(np.mean(df)))
    return model, trace


def generate(model: GanModel, n: int, seed: int) -> Dataset:
    """``n`` synthetic minority rows in the original feature scale."""
    z = sample_noise(Rng(seed), n, model.config)
    if n:
        x = model.scaler.inverse_transform(model.generator(z))
    else:
        x = np.zeros((0, len(model.feature_names)))
    return Dataset(x, np.ones(n, dtype=np.int64), model.feature_names,
                   np.full(n, SYNTHETIC, dtype=object), np.full(n, -1, dtype=np.int64))


def discriminator_accuracy(model: GanModel, real, fake) -> float:
    """Accuracy of ``D >= 0.5 => real`` on the given real/fake rows (original scale)."""
    p_real = model.discriminator(model.scaler.transform(real)).ravel()
    p_fake = model.discriminator(model.scaler.transform(fake)).ravel()
    correct = np.sum(p_real >= 0.5) + np.sum(p_fake < 0.5)
    return float(correct) / (len(p_real) + len(p_fake))


def augment_with_gan(train: Dataset, spec: AugmentSpec):
    """Train on the minority rows of ``train`` and append enough generated
    rows to reach ``spec.target_ratio``. Returns ``(dataset, trace)``.
    """
    spec.validate()
    train.require_both_classes("GAN augmentation")
    cfg = spec.gan_config if spec.gan_config is not None else GanConfig(seed=spec.seed)
    model, trace = train_gan(train.minority(), cfg)
    n_new = minority_target(train, spec.target_ratio) - train.n_minority
    if n_new <= 0:
        spec.notes.append(f"gan: ratio {spec.target_ratio} already reached; unchanged")
        return train, trace
    return concat(train, generate(model, n_new, spec.seed)), trace


def generator_grad_check(model: GanModel, z, eps=1e-5) -> float:
    """Backprop vs central differences for L_G(D(G(z))) over generator params."""
    if model.generator.n_params + model.discriminator.n_params > 5000:
        raise ValueError("generator_grad_check is meant for small nets")
    _, grads = generator_gradients(model, z)

    g_params, d_params = xp_params(model.generator), xp_params(model.discriminator)
    g_acts = [layer.activation for layer in model.generator.layers]
    d_acts = [layer.activation for layer in model.discriminator.layers]
    ones = np.ones((len(z), 1))

    def loss_fn():
        p = forward_xp(d_params, d_acts, forward_xp(g_params, g_acts, z))
        # -mean log D(G(z)) is BCE against all-ones targets
        return loss_xp(p, ones, "bce")

    numeric = numeric_gradient(loss_fn, g_params, eps)
    return max_relative_error(grads.flat(), numeric)


def config_dict(cfg: GanConfig) -> dict:
    return asdict(cfg)

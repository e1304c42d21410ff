"""Two-phase training loop, evaluation protocol, and decalibration detection.

An "epoch" is one freshly synthesized batch: every epoch draws new poses and
new perturbations, runs the forward pass, the compound loss for the phase
implied by the epoch index, backward, gradient clipping, one Adam step, and
a plateau-scheduler update. Epoch e of a run with seed s consumes the batch
seeded by (s, stream=1, e), so training is bitwise reproducible and a run
resumed from a checkpoint continues the identical trajectory.

Evaluation draws from a separate seed stream (s, stream=2, trial), making
test sets out-of-sample by construction.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .errors import ConfigError, NonFiniteLoss
from .losses import LossWeights, compound_loss, param_scale_vector, reprojection_rmse
from .nn.model import PtModel
from .nn.optim import AdamState, PlateauScheduler, adam_step, clip_gradients
from .scene import SceneConfig, synthesize_batch

_TRAIN_STREAM = 1
_EVAL_STREAM = 2
_DETECT_STREAM = 3


def derive_seed(root_seed: int, stream: int, index: int) -> int:
    """Deterministic child seed for (root, stream, index)."""
    ss = np.random.SeedSequence([int(root_seed), int(stream), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class TrainConfig:
    """Training hyper-parameters; epochs must be set explicitly."""

    epochs: int
    phase1_epochs: int = 10_000
    batch_size: int = 512
    seed: int = 0
    lr_encoder: float = 1e-4
    lr_heads: float = 1e-3
    clip_norm: float = 1.0
    scheduler_factor: float = 0.5
    scheduler_patience: int = 200
    scheduler_rel_threshold: float = 1e-4
    lr_min: float = 1e-6
    checkpoint_every: int = 500
    n_threads: int = 1

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigError("epochs must be >= 0 and batch_size >= 1")
        if self.phase1_epochs > self.epochs:
            raise ConfigError(
                f"phase1_epochs ({self.phase1_epochs}) exceeds total epochs ({self.epochs})"
            )

    def lr_map(self) -> dict:
        return {"encoder": self.lr_encoder, "heads": self.lr_heads}


@dataclass
class TrainResult:
    records: list
    optimizer: AdamState
    scheduler: PlateauScheduler


@dataclass
class EvalReport:
    """Reprojection accuracy over repeated trials plus inference latency."""

    re_avg: float
    re_std: float
    re_trials: list
    per_camera: list  # mean per-camera RMSE across trials
    n_samples: int
    trials: int
    latency_median_s: float = 0.0
    latency_mean_s: float = 0.0
    latency_runs: int = 0
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "re_avg": self.re_avg,
            "re_std": self.re_std,
            "re_trials": list(self.re_trials),
            "per_camera": list(self.per_camera),
            "n_samples": self.n_samples,
            "trials": self.trials,
            "latency_median_s": self.latency_median_s,
            "latency_mean_s": self.latency_mean_s,
            "latency_runs": self.latency_runs,
            "seed": self.seed,
        }


def train(
    model: PtModel,
    scene_cfg: SceneConfig,
    cfg: TrainConfig,
    weights: LossWeights = LossWeights(),
    optimizer: AdamState | None = None,
    scheduler: PlateauScheduler | None = None,
    start_epoch: int = 0,
    epoch_callback=None,
) -> TrainResult:
    """Run epochs [start_epoch, cfg.epochs); the model is updated in place.

    Raises NonFiniteLoss (with the offending epoch and batch seed) if the
    loss ever leaves the finite range. epoch_callback(epoch, record, model,
    optimizer, scheduler) runs after each update, e.g. to write checkpoints.
    """
    optimizer = optimizer if optimizer is not None else AdamState()
    scheduler = scheduler if scheduler is not None else PlateauScheduler(
        factor=cfg.scheduler_factor,
        patience=cfg.scheduler_patience,
        rel_threshold=cfg.scheduler_rel_threshold,
        lr_min=cfg.lr_min,
    )
    lr_map = cfg.lr_map()
    fiducials = scene_cfg.obj.fiducials
    image_size = scene_cfg.rig.image_size
    records = []

    for epoch in range(start_epoch, cfg.epochs):
        batch_seed = derive_seed(cfg.seed, _TRAIN_STREAM, epoch)
        batch = synthesize_batch(scene_cfg, cfg.batch_size, batch_seed, cfg.n_threads)
        phase = 1 if epoch < cfg.phase1_epochs else 2

        pred = model.forward(batch.observations)
        total, parts = compound_loss(
            pred, batch.gt_params, batch.observations, fiducials, image_size, phase, weights
        )
        loss_value = float(total.data)
        if not np.isfinite(loss_value):
            raise NonFiniteLoss(epoch, batch_seed)

        model.zero_grad()
        total.backward()
        grads = {k: t.grad for k, t in model.params.items()}
        grad_norm = clip_gradients(grads, cfg.clip_norm)
        adam_step(
            model.params,
            optimizer,
            lr_map,
            model.param_group,
            lr_scale=scheduler.lr_scale,
            lr_min=cfg.lr_min,
        )
        scheduler.update(loss_value)

        record = {
            "epoch": epoch,
            "phase": phase,
            "phase_transition": epoch == cfg.phase1_epochs,
            "loss": loss_value,
            "loss_diff": parts["loss_diff"],
            "loss_geo": parts["loss_geo"],
            "loss_reproj": parts["loss_reproj"],
            "grad_norm": float(grad_norm),
            "lr_scale": scheduler.lr_scale,
            "batch_seed": batch_seed,
        }
        records.append(record)
        if epoch_callback is not None:
            epoch_callback(epoch, record, model, optimizer, scheduler)
    return TrainResult(records, optimizer, scheduler)


def _predict_batched(model, observations, chunk=1024):
    out = np.empty(observations.shape[:2] + (geometry.N_PARAMS,))
    for lo in range(0, observations.shape[0], chunk):
        out[lo : lo + chunk] = model.forward(observations[lo : lo + chunk]).data
    return out


def measure_latency(model: PtModel, observations_one, runs: int = 1000):
    """Median/mean wall-clock of a single-capture forward pass on a warm model."""
    for _ in range(3):
        model.predict(observations_one)
    times = np.empty(runs)
    for i in range(runs):
        t0 = time.perf_counter()
        model.predict(observations_one)
        times[i] = time.perf_counter() - t0
    return float(np.median(times)), float(times.mean())


def evaluate(
    model: PtModel | None,
    scene_cfg: SceneConfig,
    n_samples: int,
    trials: int = 3,
    seed: int = 0,
    latency_runs: int = 0,
    oracle_mode: bool = False,
    n_threads: int = 1,
) -> EvalReport:
    """Reprojection RMSE of model predictions over freshly drawn test sets.

    Each trial synthesizes n_samples captures from the evaluation seed
    stream, predicts all camera parameters, and scores the RMSE between
    fiducial projections under predicted and ground-truth parameters.
    oracle_mode scores the ground truth against itself (pipeline check).
    """
    if model is None and not oracle_mode:
        raise ConfigError("evaluate needs a model unless oracle_mode is set")
    fiducials = scene_cfg.obj.fiducials
    image_size = scene_cfg.rig.image_size
    res, cams = [], []
    first_obs = None
    for t in range(trials):
        batch = synthesize_batch(
            scene_cfg, n_samples, derive_seed(seed, _EVAL_STREAM, t), n_threads
        )
        if first_obs is None and len(batch) > 0:
            first_obs = batch.observations[0]
        pred = batch.gt_params if oracle_mode else _predict_batched(model, batch.observations)
        total, per_cam = reprojection_rmse(
            pred, batch.gt_params, fiducials, image_size, per_camera=True
        )
        res.append(total)
        cams.append(per_cam)
    lat_med = lat_mean = 0.0
    if latency_runs > 0 and model is not None and first_obs is not None:
        lat_med, lat_mean = measure_latency(model, first_obs, latency_runs)
    return EvalReport(
        re_avg=float(np.mean(res)),
        re_std=float(np.std(res, ddof=1)) if trials > 1 else 0.0,
        re_trials=[float(r) for r in res],
        per_camera=list(np.mean(cams, axis=0)) if cams else [],
        n_samples=n_samples,
        trials=trials,
        latency_median_s=lat_med,
        latency_mean_s=lat_mean,
        latency_runs=latency_runs if model is not None else 0,
        seed=seed,
    )


# -- decalibration detection -------------------------------------------------

# Intrinsic entries of the flattened parameter vector are pose-invariant, so
# the drift monitor compares them (scaled like the parameter loss) against
# the factory values by default.
_INTRINSIC_SLICE = slice(12, 21)


def parameter_distances(
    pred_params: np.ndarray,
    reference: np.ndarray,
    lam_scale: float = 1000.0,
    include_extrinsics: bool = False,
) -> np.ndarray:
    """Per-camera RMSE between predicted and reference parameters, using the
    same entry scaling as the parameter loss."""
    scale = param_scale_vector(lam_scale)
    d = (np.asarray(pred_params) - np.asarray(reference)) * scale
    if not include_extrinsics:
        d = d[..., _INTRINSIC_SLICE]
    return np.sqrt((d**2).mean(axis=-1))


def detect_decalibration(
    model: PtModel,
    observations: np.ndarray,
    reference: np.ndarray,
    threshold: float,
    lam_scale: float = 1000.0,
    include_extrinsics: bool = False,
) -> dict:
    """Flag cameras whose predicted calibration drifted from the reference.

    observations: (N_C, N_fid, 2) capture from the live system.
    reference: (N_C, 21) factory calibration to compare against.
    Returns {"distances": per-camera values, "drifted": bool per camera,
    "any_drift": bool}.
    """
    pred = model.predict(observations)
    dist = parameter_distances(pred, reference, lam_scale, include_extrinsics)
    drifted = dist > threshold
    return {
        "distances": dist,
        "drifted": drifted,
        "any_drift": bool(drifted.any()),
        "threshold": threshold,
    }


def calibrate_detection_threshold(
    model: PtModel,
    scene_cfg: SceneConfig,
    n_samples: int,
    seed: int = 0,
    margin: float = 1.25,
    lam_scale: float = 1000.0,
    include_extrinsics: bool = False,
) -> float:
    """Threshold = margin x the largest per-camera distance observed on a
    clean (unperturbed) sample set drawn from the detection seed stream."""
    reference = model.reference_params
    batch = synthesize_batch(scene_cfg, n_samples, derive_seed(seed, _DETECT_STREAM, 0))
    pred = _predict_batched(model, batch.observations)
    dist = parameter_distances(pred, reference, lam_scale, include_extrinsics)
    return float(dist.max() * margin)

"""Training loop: Adam, plateau-triggered LR decay, best-epoch checkpointing.

The schedule cuts the learning rate by ``lr_factor`` once the validation loss
has risen for ``patience_epochs`` consecutive epochs, each epoch compared to
the one immediately before it; the consecutive-rise streak starts over after
every cut. The selected checkpoint is the epoch with the minimum validation
loss, earliest on ties.

Transfer-learning freezing operates on named depth groups: "low" covers the
backbone stages up to and including the low tap, "mid" the stages up to the
mid tap, "high" everything after. Frozen parameters are excluded from the
optimizer entirely, so they stay bit-identical through a run.

``validate_on_test`` reproduces the original protocol of validating directly
on the test split. It leaks the test set into model selection, so it defaults
to off; the default carves a validation set out of the training data with a
seeded permutation.
"""

from __future__ import annotations

import copy
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch.nn import functional as F

from . import labels
from .archive import save_archive
from .backbone import BackboneConfig
from .errors import ConfigurationError, DataError, NumericError, StateError
from .model import network_to_archive


@dataclass(frozen=True)
class FreezeSpec:
    """Which parameter groups stay fixed; attention and classifier train by default."""

    low: bool = True
    mid: bool = True
    high: bool = False
    attention: bool = False
    classifier: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    max_epochs: int = 18
    initial_lr: float = 1e-3
    lr_factor: float = 0.1
    patience_epochs: int = 2
    seed: int = 0
    freeze: FreezeSpec = field(default_factory=FreezeSpec)
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    val_fraction: float = 0.1
    validate_on_test: bool = False

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigurationError(f"batch size must be at least 1, got {self.batch_size}")
        if self.max_epochs < 1:
            raise ConfigurationError(f"max epochs must be at least 1, got {self.max_epochs}")
        if self.initial_lr <= 0:
            raise ConfigurationError(f"initial lr must be positive, got {self.initial_lr}")
        if not 0 < self.lr_factor < 1:
            raise ConfigurationError(f"lr factor must lie in (0, 1), got {self.lr_factor}")
        if self.patience_epochs < 1:
            raise ConfigurationError(f"patience must be at least 1, got {self.patience_epochs}")
        if not 0 < self.beta1 < 1 or not 0 < self.beta2 < 1:
            raise ConfigurationError(f"betas must lie in (0, 1), got {self.beta1}, {self.beta2}")
        if not 0 < self.val_fraction < 1:
            raise ConfigurationError(f"val fraction must lie in (0, 1), got {self.val_fraction}")


@dataclass
class EpochRecord:
    epoch: int  # 1-based, contiguous
    train_loss: float
    val_loss: float
    val_accuracy: float
    lr: float
    checkpoint_ref: str | None = None
    duration_s: float = 0.0

    def __post_init__(self):
        for label, value in (("train", self.train_loss), ("val", self.val_loss)):
            if not np.isfinite(value) or value < 0:
                raise NumericError(f"{label} loss must be finite and non-negative, got {value}")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


@dataclass
class TrainResult:
    history: list[EpochRecord]
    best_epoch: int  # 1-based
    best_val_loss: float
    log_path: Path | None = None
    best_path: Path | None = None


def lr_schedule(history: list[EpochRecord], current_lr: float, config: TrainConfig) -> float:
    """Learning rate for the epoch after ``history``.

    Cuts by ``lr_factor`` when the trailing ``patience_epochs`` records each
    increased val_loss over their immediate predecessor. The streak restarts
    after a cut: rises recorded before the most recent lr change (visible in
    the records' lr column) do not count toward the next one.
    """
    if not history:
        raise StateError("lr_schedule requires at least one completed epoch")
    boundary = 0
    for i in range(1, len(history)):
        if history[i].lr != history[i - 1].lr:
            boundary = i
    streak = 0
    for i in range(len(history) - 1, max(boundary, 1) - 1, -1):
        if history[i].val_loss > history[i - 1].val_loss:
            streak += 1
        else:
            break
    if streak >= config.patience_epochs:
        return current_lr * config.lr_factor
    return current_lr


def schedule_learning_rates(
    val_losses,
    base_lr: float = 1e-3,
    factor: float = 0.1,
    patience: int = 2,
) -> list[float]:
    """Trace helper: the lr in effect during each epoch of a val-loss sequence."""
    config = TrainConfig(initial_lr=base_lr, lr_factor=factor, patience_epochs=patience)
    rates: list[float] = []
    history: list[EpochRecord] = []
    lr = base_lr
    for i, loss in enumerate(val_losses):
        rates.append(lr)
        history.append(
            EpochRecord(epoch=i + 1, train_loss=0.0, val_loss=float(loss), val_accuracy=0.0, lr=lr)
        )
        lr = lr_schedule(history, lr, config)
    return rates


def select_checkpoint(history: list[EpochRecord]) -> int:
    """1-based epoch with the minimum validation loss; earliest wins ties."""
    if not history:
        raise StateError("cannot select a checkpoint from an empty history")
    best = min(history, key=lambda record: (record.val_loss, record.epoch))
    return best.epoch


def freeze_group_stages(backbone_config: BackboneConfig, freeze: FreezeSpec) -> tuple[int, ...]:
    """Backbone stage indices covered by the enabled depth groups."""
    low_tap, mid_tap, _ = backbone_config.tap_stages
    num_stages = len(backbone_config.stage_depths)
    stages: list[int] = []
    if freeze.low:
        stages.extend(range(0, low_tap + 1))
    if freeze.mid:
        stages.extend(range(low_tap + 1, mid_tap + 1))
    if freeze.high:
        stages.extend(range(mid_tap + 1, num_stages))
    return tuple(stages)


def apply_freezing(model: torch.nn.Module, freeze: FreezeSpec) -> list[str]:
    """Disable gradients per the freeze spec; returns the frozen parameter names."""
    frozen: list[str] = []
    for stage in freeze_group_stages(model.backbone.config, freeze):
        for name, param in model.backbone.stage_parameters(stage):
            param.requires_grad_(False)
            frozen.append(f"backbone.{name}")
    extra_modules = []
    if freeze.attention and hasattr(model, "attention"):
        extra_modules.append("attention")
    if freeze.classifier:
        extra_modules.append("classifier")
    for module_name in extra_modules:
        module = getattr(model, module_name)
        for name, param in module.named_parameters():
            param.requires_grad_(False)
            frozen.append(f"{module_name}.{name}")
    return frozen


def _check_targets(targets: torch.Tensor):
    if targets.numel() and (
        int(targets.min()) < 0 or int(targets.max()) >= labels.NUM_CLASSES
    ):
        raise DataError(
            f"class labels must lie in [0, {labels.NUM_CLASSES - 1}]; "
            f"got range [{int(targets.min())}, {int(targets.max())}]"
        )


def train_step(
    model: torch.nn.Module,
    optimizer: torch.optim.Optimizer | None,
    images: torch.Tensor,
    targets: torch.Tensor,
) -> float:
    """One optimizer step on a batch; returns the batch cross-entropy.

    With no optimizer (every parameter frozen) the loss is still computed so
    epoch records stay complete, but nothing updates.
    """
    _check_targets(targets)
    if optimizer is None:
        with torch.no_grad():
            loss = F.cross_entropy(model(images), targets)
        if not torch.isfinite(loss):
            raise NumericError("non-finite training loss")
        return float(loss)
    optimizer.zero_grad(set_to_none=True)
    loss = F.cross_entropy(model(images), targets)
    if not torch.isfinite(loss):
        raise NumericError("non-finite training loss")
    loss.backward()
    optimizer.step()
    return float(loss.detach())


def evaluate_loss_and_accuracy(
    model: torch.nn.Module,
    images: np.ndarray,
    targets: np.ndarray,
    batch_size: int = 64,
) -> tuple[float, float]:
    if len(images) == 0:
        raise DataError("cannot evaluate on an empty split")
    model.eval()
    total_loss = 0.0
    correct = 0
    with torch.no_grad():
        for start in range(0, len(images), batch_size):
            x = torch.from_numpy(images[start : start + batch_size]).float()
            y = torch.from_numpy(targets[start : start + batch_size]).long()
            logits = model(x)
            total_loss += float(F.cross_entropy(logits, y, reduction="sum"))
            correct += int((logits.argmax(dim=-1) == y).sum())
    return total_loss / len(images), correct / len(images)


def split_train_val(n: int, val_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded permutation split; the validation side gets at least one item."""
    if n < 2:
        raise DataError(f"need at least 2 samples to split, got {n}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_val = min(n - 1, max(1, int(round(n * val_fraction))))
    return order[n_val:], order[:n_val]


def fit(
    model: torch.nn.Module,
    train_images: np.ndarray,
    train_targets: np.ndarray,
    val_images: np.ndarray,
    val_targets: np.ndarray,
    config: TrainConfig,
    out_dir: str | Path | None = None,
    quiet: bool = True,
) -> TrainResult:
    """Train to max_epochs and leave the best-epoch weights in the model.

    Reproducible per seed: parameter init is the caller's, and both the torch
    RNG (dropout) and the per-epoch shuffle are reseeded from ``config.seed``.
    When ``out_dir`` is given, per-epoch ``ckpt-epoch{N}.acnx`` archives, the
    best archive, and a JSONL log of epoch records are written there.
    """
    if len(train_images) == 0 or len(val_images) == 0:
        raise DataError("training and validation splits must be non-empty")
    if len(train_images) != len(train_targets):
        raise DataError(
            f"{len(train_images)} train images but {len(train_targets)} targets"
        )
    _check_targets(torch.from_numpy(np.asarray(train_targets)))
    torch.manual_seed(config.seed)
    apply_freezing(model, config.freeze)
    trainable = [p for p in model.parameters() if p.requires_grad]
    optimizer = (
        torch.optim.Adam(
            trainable,
            lr=config.initial_lr,
            betas=(config.beta1, config.beta2),
            eps=config.adam_eps,
        )
        if trainable
        else None
    )

    out_path = Path(out_dir) if out_dir is not None else None
    log_handle = None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
        log_handle = open(out_path / "training-log.jsonl", "w", encoding="utf-8")

    history: list[EpochRecord] = []
    best_state = None
    best_loss = float("inf")
    best_epoch = 0
    lr = config.initial_lr
    try:
        for epoch in range(1, config.max_epochs + 1):
            if optimizer is not None:
                for group in optimizer.param_groups:
                    group["lr"] = lr
            started = time.monotonic()
            model.train()
            rng = np.random.default_rng((config.seed, epoch))
            order = rng.permutation(len(train_images))
            batch_losses = []
            batch_sizes = []
            for start in range(0, len(order), config.batch_size):
                batch = order[start : start + config.batch_size]
                x = torch.from_numpy(train_images[batch]).float()
                y = torch.from_numpy(train_targets[batch]).long()
                batch_losses.append(train_step(model, optimizer, x, y))
                batch_sizes.append(len(batch))
            train_loss = float(np.average(batch_losses, weights=batch_sizes))
            val_loss, val_accuracy = evaluate_loss_and_accuracy(
                model, val_images, val_targets, config.batch_size
            )

            checkpoint_ref = None
            if out_path is not None:
                ckpt = out_path / f"ckpt-epoch{epoch:02d}.acnx"
                save_archive(network_to_archive(model, {"epoch": epoch}), ckpt)
                checkpoint_ref = str(ckpt)
            record = EpochRecord(
                epoch=epoch,
                train_loss=train_loss,
                val_loss=val_loss,
                val_accuracy=val_accuracy,
                lr=lr,
                checkpoint_ref=checkpoint_ref,
                duration_s=time.monotonic() - started,
            )
            history.append(record)
            if log_handle is not None:
                log_handle.write(record.to_json() + "\n")
                log_handle.flush()
            if not quiet:
                print(
                    f"epoch {epoch:3d}/{config.max_epochs}  lr {lr:.2e}  "
                    f"train {train_loss:.4f}  val {val_loss:.4f}  acc {val_accuracy:.3f}"
                )

            if val_loss < best_loss:
                best_loss = val_loss
                best_epoch = epoch
                best_state = copy.deepcopy(model.state_dict())
            lr = lr_schedule(history, lr, config)
    finally:
        if log_handle is not None:
            log_handle.close()

    assert best_epoch == select_checkpoint(history)
    model.load_state_dict(best_state)
    model.eval()
    best_path = None
    if out_path is not None:
        best_path = out_path / "model-best.acnx"
        save_archive(
            network_to_archive(model, {"epoch": best_epoch, "val_loss": best_loss}),
            best_path,
        )
    return TrainResult(
        history=history,
        best_epoch=best_epoch,
        best_val_loss=best_loss,
        log_path=None if out_path is None else out_path / "training-log.jsonl",
        best_path=best_path,
    )


def train_model(
    model: torch.nn.Module,
    train_images: np.ndarray,
    train_targets: np.ndarray,
    config: TrainConfig,
    test_images: np.ndarray | None = None,
    test_targets: np.ndarray | None = None,
    out_dir: str | Path | None = None,
    quiet: bool = True,
) -> TrainResult:
    """Split-aware wrapper around :func:`fit`.

    With ``validate_on_test`` the full training set feeds gradient updates and
    the test split doubles as the validation set; otherwise a seeded carve-out
    keeps the test split untouched until evaluation.
    """
    if config.validate_on_test:
        if test_images is None or test_targets is None:
            raise ConfigurationError("validate_on_test requires a test split")
        return fit(
            model, train_images, train_targets, test_images, test_targets,
            config, out_dir=out_dir, quiet=quiet,
        )
    train_idx, val_idx = split_train_val(len(train_images), config.val_fraction, config.seed)
    return fit(
        model,
        train_images[train_idx],
        train_targets[train_idx],
        train_images[val_idx],
        train_targets[val_idx],
        config,
        out_dir=out_dir,
        quiet=quiet,
    )

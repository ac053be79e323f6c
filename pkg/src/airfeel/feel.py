"""Federated edge learning harness.

Each round every device trains a copy of the global model on its own
shard; the locals are then merged by one of three aggregators: ideal
(plain coordinate-wise averaging), tbma (quantize, key each parameter
onto a tone, superimpose all devices through the noisy channel, recover
the level histogram and take its mean), or dsb (amplitude-key each raw
parameter onto a carrier, superimpose, coherently demodulate, divide by
the cohort size).

Every random draw comes from a named stream derived from the run seed,
so trajectories are bit-reproducible regardless of how devices or grid
points are scheduled.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelConfig, awgn_block, noise_sigma
from .dataio import Dataset, shard
from .mlp import MlpArch, ModelVector, init_model, loss_and_grad, predict
from .modem import DsbScheme, ToneFamily
from .quantizer import QuantizerSpec, quantize_array
from .receiver import correlate_block
from .rng import substream

AGGREGATIONS = ("ideal", "tbma", "dsb")


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss; partial metrics attached."""

    def __init__(self, message, records=None):
        super().__init__(message)
        self.records = records if records is not None else []


@dataclass(frozen=True)
class FeelConfig:
    n_devices: int
    rounds: int
    local_epochs: int
    learning_rate: float
    batch_size: int
    aggregation: str
    quantizer: QuantizerSpec
    channel: ChannelConfig
    hidden_width: int
    n_classes: int
    seed: int
    partition: str = "iid"
    normalize: str = "declared_k"
    dsb: DsbScheme = field(default_factory=DsbScheme)

    def __post_init__(self):
        if self.n_devices < 1:
            raise ValueError("need n_devices >= 1")
        if self.rounds < 0:
            raise ValueError("need rounds >= 0")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.local_epochs < 0:
            raise ValueError("need local_epochs >= 0")
        if self.batch_size < 1:
            raise ValueError("need batch_size >= 1")
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"unknown aggregation {self.aggregation!r}")


@dataclass
class RoundRecord:
    round: int
    accuracy: float
    agg_error_vs_ideal: float
    fallback_count: int
    saturation_fraction: float
    wall_ms: float


@dataclass
class AggregationStats:
    fallback_count: int = 0
    saturation_fraction: float = 0.0


def evaluate(model: ModelVector, test_set: Dataset) -> float:
    """Fraction of test samples whose argmax class is correct."""
    if len(test_set) == 0:
        raise ValueError("empty test set")
    correct = 0
    for start in range(0, len(test_set), 1024):
        stop = start + 1024
        pred = predict(model, test_set.features[start:stop])
        correct += int((pred == test_set.labels[start:stop]).sum())
    return correct / len(test_set)


def local_train(
    model: ModelVector,
    data: Dataset,
    epochs: int,
    lr: float,
    batch_size: int,
    rng,
) -> ModelVector:
    """Mini-batch SGD on softmax cross-entropy; the input is not mutated."""
    if len(data) == 0:
        raise ValueError("empty training shard")
    rng = np.random.default_rng(rng)
    out = model.copy()
    for _ in range(epochs):
        order = rng.permutation(len(data))
        for start in range(0, len(order), batch_size):
            batch = order[start : start + batch_size]
            loss_value, grad = loss_and_grad(
                out, data.features[batch], data.labels[batch]
            )
            if not np.isfinite(loss_value):
                raise DivergenceError(f"non-finite training loss {loss_value!r}")
            out.values -= lr * grad
    return out


def aggregate_ideal(models) -> ModelVector:
    """Coordinate-wise arithmetic mean of the device models."""
    models = list(models)
    layout = models[0].layout
    for m in models[1:]:
        if m.layout != layout:
            raise ValueError("model layouts differ")
    return ModelVector(np.mean([m.values for m in models], axis=0), layout)


def _stack_values(models) -> tuple[np.ndarray, tuple]:
    models = list(models)
    layout = models[0].layout
    for m in models[1:]:
        if m.layout != layout:
            raise ValueError("model layouts differ")
    values = np.stack([m.values for m in models])
    if not np.all(np.isfinite(values)):
        raise ValueError("non-finite model parameters")
    return values, layout


def _block_len(block_size: int, n_levels: int) -> int:
    # Keep per-block scratch arrays around 32 MB regardless of N.
    return max(1, min(block_size, 2**22 // n_levels))


def aggregate_tbma(
    models,
    spec: QuantizerSpec,
    family: ToneFamily,
    channel: ChannelConfig,
    *,
    prev: ModelVector | None = None,
    round_index: int = 0,
    normalize: str = "declared_k",
    block_size: int = 4096,
) -> tuple[ModelVector, AggregationStats]:
    """Aggregate by transmitting every parameter's level histogram.

    Per coordinate: quantize each device's value, superimpose the level
    tones through the noisy channel, correlate against the tone bank,
    clip negative scores, and take the histogram mean.  Coordinates
    whose histogram comes back empty keep the previous global value.
    """
    if family.n_tones != spec.n_levels:
        raise ValueError("tone family size must equal quantizer levels")
    values, layout = _stack_values(models)
    n_devices, n_params = values.shape
    saturated = float(np.mean((values < spec.lo) | (values >= spec.hi)))
    levels = quantize_array(values, spec)

    cohort = n_devices if channel.snr_reference == "cohort" else 1
    sigma = noise_sigma(channel.snr_db, family.mean_sample_power * cohort)
    recon = spec.reconstruction_values()
    n_levels = spec.n_levels

    out = np.empty(n_params)
    fallback = 0
    block = _block_len(block_size, n_levels)
    for block_index, start in enumerate(range(0, n_params, block)):
        stop = min(start + block, n_params)
        width = stop - start
        offsets = np.arange(width, dtype=np.int64)[:, None] * n_levels
        flat = (levels[:, start:stop].T + offsets).ravel()
        true_counts = np.bincount(flat, minlength=width * n_levels)
        true_counts = true_counts.reshape(width, n_levels).astype(float)

        received = family.synthesize(true_counts)
        rng = substream(channel.seed, "noise", round_index, block_index)
        received = awgn_block(received, sigma, rng)
        est = np.maximum(correlate_block(received, family), 0.0)

        totals = est.sum(axis=1)
        degenerate = totals <= 0.0
        if normalize == "declared_k":
            denom = np.full(width, float(n_devices))
        elif normalize == "histogram_sum":
            denom = np.where(degenerate, 1.0, totals)
        else:
            raise ValueError(f"unknown normalize {normalize!r}")
        means = (est @ recon) / denom
        if np.any(degenerate):
            fill = prev.values[start:stop] if prev is not None else 0.0
            means = np.where(degenerate, fill, means)
            fallback += int(degenerate.sum())
        out[start:stop] = means

    stats = AggregationStats(fallback_count=fallback, saturation_fraction=saturated)
    return ModelVector(out, layout), stats


def aggregate_dsb(
    models,
    channel: ChannelConfig,
    *,
    scheme: DsbScheme = DsbScheme(),
    full_scale: float = 1.0,
    round_index: int = 0,
    block_size: int = 65536,
) -> ModelVector:
    """Aggregate by amplitude superposition, one carrier symbol per
    parameter.  Values are keyed raw (no clipping); the noise level is
    calibrated against the nominal full-scale carrier power, which is
    what a peak-power-limited transmitter can actually guarantee."""
    values, layout = _stack_values(models)
    n_devices, n_params = values.shape
    carrier = scheme.carrier()
    carrier_energy = float(carrier @ carrier)
    cohort = n_devices if channel.snr_reference == "cohort" else 1
    sigma = noise_sigma(channel.snr_db, full_scale**2 / 2.0 * cohort)

    sums = values.sum(axis=0)
    out = np.empty(n_params)
    block = _block_len(block_size, scheme.symbol_len)
    for block_index, start in enumerate(range(0, n_params, block)):
        stop = min(start + block, n_params)
        received = np.outer(sums[start:stop], carrier)
        rng = substream(channel.seed, "noise", round_index, block_index)
        received = awgn_block(received, sigma, rng)
        out[start:stop] = (received @ carrier) / carrier_energy
    return ModelVector(out / n_devices, layout)


def run_feel(config: FeelConfig, train_set: Dataset, test_set: Dataset):
    """Run the full round loop; returns one record per round, including
    a round-0 record for the freshly initialized model."""
    if config.n_classes != train_set.n_classes:
        raise ValueError(
            f"config says {config.n_classes} classes, dataset has {train_set.n_classes}"
        )
    arch = MlpArch(train_set.features.shape[1], config.hidden_width, config.n_classes)
    shards = [
        train_set.subset(idx)
        for idx in shard(
            train_set,
            config.n_devices,
            config.partition,
            seed=substream(config.seed, "shard"),
        )
    ]
    family = None
    if config.aggregation == "tbma":
        family = ToneFamily(config.quantizer.n_levels)
    dsb_full_scale = max(abs(config.quantizer.lo), abs(config.quantizer.hi))

    records: list[RoundRecord] = []
    start = time.perf_counter()
    global_model = init_model(arch, substream(config.seed, "init"))
    records.append(
        RoundRecord(
            round=0,
            accuracy=evaluate(global_model, test_set),
            agg_error_vs_ideal=0.0,
            fallback_count=0,
            saturation_fraction=0.0,
            wall_ms=(time.perf_counter() - start) * 1e3,
        )
    )
    for round_index in range(1, config.rounds + 1):
        start = time.perf_counter()
        locals_ = []
        for device in range(config.n_devices):
            try:
                locals_.append(
                    local_train(
                        global_model,
                        shards[device],
                        config.local_epochs,
                        config.learning_rate,
                        config.batch_size,
                        substream(config.seed, "train", round_index, device),
                    )
                )
            except DivergenceError as err:
                raise DivergenceError(
                    f"device {device}, round {round_index}: {err}", records
                ) from err

        ideal = aggregate_ideal(locals_)
        stats = AggregationStats()
        if config.aggregation == "ideal":
            global_model = ideal
            agg_error = 0.0
        elif config.aggregation == "tbma":
            global_model, stats = aggregate_tbma(
                locals_,
                config.quantizer,
                family,
                config.channel,
                prev=global_model,
                round_index=round_index,
                normalize=config.normalize,
            )
            agg_error = float(np.mean(np.abs(global_model.values - ideal.values)))
        else:
            global_model = aggregate_dsb(
                locals_,
                config.channel,
                scheme=config.dsb,
                full_scale=dsb_full_scale,
                round_index=round_index,
            )
            agg_error = float(np.mean(np.abs(global_model.values - ideal.values)))

        records.append(
            RoundRecord(
                round=round_index,
                accuracy=evaluate(global_model, test_set),
                agg_error_vs_ideal=agg_error,
                fallback_count=stats.fallback_count,
                saturation_fraction=stats.saturation_fraction,
                wall_ms=(time.perf_counter() - start) * 1e3,
            )
        )
    return records

"""The one-, two- and three-modality fusion networks.

Three-modality graph: stacked thermal+optronic input -> 3x3 valid conv ->
ReLU -> flatten -> dropout -> concatenate radar vector -> dense -> ReLU ->
dropout -> dense(1) -> sigmoid. The two-modality variant removes the radar
concatenation; the single-modality variant feeds the thermal map alone.
A probability strictly above 0.5 is classified as UAV, 0.5 or below as
false alarm.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .data import FusedSample, Label, ModalitySet, ShapeProfile
from .errors import CompatibilityError, ConfigError, CorruptionError, FormatError
from .msfr import _Reader
from .ops import (
    TRAIN_DTYPE,
    ConvParams,
    DenseParams,
    conv2d_backward,
    conv2d_forward,
    dense_backward,
    dense_forward,
    dropout_apply,
    dropout_backward,
    relu,
    relu_backward,
    sigmoid,
    sigmoid_backward,
)
from .rng import Rng

WEIGHTS_MAGIC = b"MSFW"
WEIGHTS_VERSION = 1

PARAM_ORDER = (
    "conv_kernels",
    "conv_bias",
    "dense1_weights",
    "dense1_bias",
    "output_weights",
    "output_bias",
)


@dataclass
class ModelSpec:
    modality_set: ModalitySet
    stacked_shape: tuple[int, ...]
    radar_len: int
    conv_filters: int = 512
    kernel: tuple[int, int] = (3, 3)
    dense_units: int = 512
    dropout_rate: float = 0.5

    @classmethod
    def for_profile(
        cls,
        modality_set: ModalitySet,
        profile: ShapeProfile,
        conv_filters: int = 512,
        dense_units: int = 512,
        dropout_rate: float = 0.5,
    ) -> "ModelSpec":
        return cls(
            modality_set=modality_set,
            stacked_shape=profile.input_shape(modality_set),
            radar_len=profile.radar_len(modality_set),
            conv_filters=conv_filters,
            dense_units=dense_units,
            dropout_rate=dropout_rate,
        )

    def validate(self) -> None:
        if self.conv_filters < 1 or self.dense_units < 1:
            raise ConfigError("conv_filters and dense_units must be positive")
        if not 0 <= self.dropout_rate < 1:
            raise ConfigError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if len(self.stacked_shape) != 3:
            raise ConfigError(f"stacked input must be 3-d, got {self.stacked_shape}")
        kh, kw = self.kernel
        if self.stacked_shape[0] < kh or self.stacked_shape[1] < kw:
            raise ConfigError(
                f"input {self.stacked_shape} smaller than kernel {self.kernel}"
            )
        if self.modality_set.has_radar and self.radar_len < 1:
            raise ConfigError("three-modality spec needs a positive radar length")
        if not self.modality_set.has_radar and self.radar_len != 0:
            raise ConfigError("radar length must be 0 without the radar modality")

    @property
    def conv_out_shape(self) -> tuple[int, int, int]:
        h, w, _ = self.stacked_shape
        kh, kw = self.kernel
        return (h - kh + 1, w - kw + 1, self.conv_filters)

    @property
    def flatten_width(self) -> int:
        return int(np.prod(self.conv_out_shape))

    @property
    def dense1_in(self) -> int:
        return self.flatten_width + self.radar_len


@dataclass
class Model:
    spec: ModelSpec
    conv: ConvParams
    dense1: DenseParams
    output: DenseParams

    def params(self) -> dict[str, np.ndarray]:
        return {
            "conv_kernels": self.conv.kernels,
            "conv_bias": self.conv.bias,
            "dense1_weights": self.dense1.weights,
            "dense1_bias": self.dense1.bias,
            "output_weights": self.output.weights,
            "output_bias": self.output.bias,
        }

    def set_params(self, values: dict[str, np.ndarray]) -> None:
        self.conv = ConvParams(values["conv_kernels"], values["conv_bias"])
        self.dense1 = DenseParams(values["dense1_weights"], values["dense1_bias"])
        self.output = DenseParams(values["output_weights"], values["output_bias"])

    def clone(self) -> "Model":
        return Model(
            replace(self.spec),
            ConvParams(self.conv.kernels.copy(), self.conv.bias.copy()),
            DenseParams(self.dense1.weights.copy(), self.dense1.bias.copy()),
            DenseParams(self.output.weights.copy(), self.output.bias.copy()),
        )


def _he_uniform(rng: Rng, shape, fan_in: int, dtype) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return ((rng.uniform(shape) * 2 - 1) * limit).astype(dtype)


def _glorot_uniform(rng: Rng, shape, fan_in: int, fan_out: int, dtype) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return ((rng.uniform(shape) * 2 - 1) * limit).astype(dtype)


def build_model(spec: ModelSpec, rng: Rng, dtype=TRAIN_DTYPE) -> Model:
    """Initialize parameters: He-uniform into ReLU layers, Glorot at the output.

    Draw order is fixed (conv kernels, dense weights, output weights; biases
    start at zero), so a seed determines the parameters bit for bit. Pass
    float64 for gradient-verification builds.
    """
    spec.validate()
    kh, kw = spec.kernel
    c_in = spec.stacked_shape[2]
    conv = ConvParams(
        _he_uniform(rng, (kh, kw, c_in, spec.conv_filters), kh * kw * c_in, dtype),
        np.zeros(spec.conv_filters, dtype=dtype),
    )
    dense1 = DenseParams(
        _he_uniform(rng, (spec.dense1_in, spec.dense_units), spec.dense1_in, dtype),
        np.zeros(spec.dense_units, dtype=dtype),
    )
    output = DenseParams(
        _glorot_uniform(rng, (spec.dense_units, 1), spec.dense_units, 1, dtype),
        np.zeros(1, dtype=dtype),
    )
    return Model(spec, conv, dense1, output)


def count_parameters(model: Model) -> int:
    """Total element count across all weight and bias tensors."""
    return sum(int(v.size) for v in model.params().values())


def batch_arrays(
    samples: list[FusedSample], dtype=np.float32
) -> tuple[np.ndarray, np.ndarray | None, np.ndarray]:
    """Stack fused samples into (stacked, radar-or-None, labels) arrays."""
    if not samples:
        raise CompatibilityError("empty batch")
    stacked = np.stack([s.stacked for s in samples]).astype(dtype, copy=False)
    has_radar = samples[0].radar is not None
    radar = (
        np.stack([s.radar for s in samples]).astype(dtype, copy=False)
        if has_radar
        else None
    )
    labels = np.array([float(s.label) for s in samples], dtype=dtype)
    return stacked, radar, labels


def _check_batch(model: Model, x: np.ndarray, r: np.ndarray | None) -> None:
    spec = model.spec
    if x.shape[1:] != tuple(spec.stacked_shape):
        raise CompatibilityError(
            f"batch stacked shape {x.shape[1:]} != model input {tuple(spec.stacked_shape)}"
        )
    if spec.radar_len:
        if r is None or r.shape[1:] != (spec.radar_len,):
            got = None if r is None else r.shape[1:]
            raise CompatibilityError(
                f"batch radar shape {got} != model radar length {spec.radar_len}"
            )
    elif r is not None:
        raise CompatibilityError("model takes no radar input but the batch has one")


def _forward(model: Model, x, r, mode: str, rng: Rng | None):
    _check_batch(model, x, r)
    rate = model.spec.dropout_rate
    z1 = conv2d_forward(x, model.conv)
    a1 = relu(z1)
    flat = a1.reshape(x.shape[0], -1)
    d1, m1 = dropout_apply(flat, rate, mode, rng)
    h = np.concatenate([d1, r], axis=1) if r is not None else d1
    z2 = dense_forward(h, model.dense1)
    a2 = relu(z2)
    d2, m2 = dropout_apply(a2, rate, mode, rng)
    z3 = dense_forward(d2, model.output)
    p = sigmoid(z3)[:, 0]
    cache = (x, z1, m1, h, z2, m2, d2, p)
    return p, cache


def forward_pass(model: Model, batch, mode: str = "eval", rng: Rng | None = None) -> np.ndarray:
    """Per-sample UAV probabilities for a batch of fused samples.

    ``batch`` is a list of FusedSample or a prepared (stacked, radar) pair.
    Eval mode applies no dropout and is deterministic.
    """
    if isinstance(batch, tuple):
        x, r = batch
    else:
        x, r, _ = batch_arrays(batch, dtype=model.conv.kernels.dtype)
    p, _ = _forward(model, x, r, mode, rng)
    return p


def backward_pass(model: Model, cache, grad_p: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of the scalar loss wrt every parameter, given dL/dp."""
    x, z1, m1, h, z2, m2, d2, p = cache
    rate = model.spec.dropout_rate
    dz3 = sigmoid_backward(grad_p.reshape(-1, 1), p.reshape(-1, 1))
    dd2, g_out_w, g_out_b = dense_backward(d2, model.output, dz3)
    da2 = dropout_backward(dd2, m2, rate)
    dz2 = relu_backward(da2, z2)
    dh, g_d1_w, g_d1_b = dense_backward(h, model.dense1, dz2)
    dflat = dh[:, : model.spec.flatten_width]  # radar slice gets no gradient path
    dflat = dropout_backward(dflat, m1, rate)
    dz1 = relu_backward(dflat.reshape(z1.shape), z1)
    _, g_c_k, g_c_b = conv2d_backward(x, model.conv, dz1)
    return {
        "conv_kernels": g_c_k,
        "conv_bias": g_c_b,
        "dense1_weights": g_d1_w,
        "dense1_bias": g_d1_b,
        "output_weights": g_out_w,
        "output_bias": g_out_b,
    }


def classify_probability(p: float) -> Label:
    """UAV iff p > 0.5 strictly; exactly 0.5 is a false alarm."""
    return Label.UAV if p > 0.5 else Label.FALSE_ALARM


def predict_and_classify(model: Model, sample: FusedSample) -> tuple[float, Label]:
    """Eval-mode probability plus the hard decision for one sample."""
    p = float(forward_pass(model, [sample], mode="eval")[0])
    return p, classify_probability(p)


def _spec_bytes(spec: ModelSpec) -> bytes:
    dims = tuple(spec.stacked_shape)
    return b"".join(
        [
            struct.pack("<B", spec.modality_set.count),
            struct.pack("<B", len(dims)),
            struct.pack(f"<{len(dims)}I", *dims),
            struct.pack("<I", spec.radar_len),
            struct.pack("<I", spec.conv_filters),
            struct.pack("<II", *spec.kernel),
            struct.pack("<I", spec.dense_units),
            struct.pack("<d", spec.dropout_rate),
        ]
    )


def serialize_model(model: Model) -> bytes:
    """MSFW bytes: magic, version, spec fields, then tensors in fixed order."""
    parts = [WEIGHTS_MAGIC, struct.pack("<H", WEIGHTS_VERSION), _spec_bytes(model.spec)]
    values = model.params()
    for name in PARAM_ORDER:
        arr = values[name]
        parts.append(struct.pack("<B", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    return b"".join(parts)


def save_weights(model: Model, destination) -> int:
    blob = serialize_model(model)
    Path(destination).write_bytes(blob)
    return len(blob)


def _expected_shapes(spec: ModelSpec) -> dict[str, tuple[int, ...]]:
    kh, kw = spec.kernel
    return {
        "conv_kernels": (kh, kw, spec.stacked_shape[2], spec.conv_filters),
        "conv_bias": (spec.conv_filters,),
        "dense1_weights": (spec.dense1_in, spec.dense_units),
        "dense1_bias": (spec.dense_units,),
        "output_weights": (spec.dense_units, 1),
        "output_bias": (1,),
    }


def load_weights(source) -> Model:
    reader = _Reader(Path(source).read_bytes())
    if reader.take(4) != WEIGHTS_MAGIC:
        raise FormatError(f"not a weights file: bad magic in {source}")
    (version,) = reader.unpack("<H")
    if version != WEIGHTS_VERSION:
        raise FormatError(f"unsupported weights version {version}")
    (modality_count,) = reader.unpack("<B")
    sets = {1: ModalitySet.THERMAL, 2: ModalitySet.THERMAL_OPTRONIC, 3: ModalitySet.THERMAL_OPTRONIC_RADAR}
    if modality_count not in sets:
        raise CorruptionError(f"modality count must be 1..3, got {modality_count}")
    stacked_shape = reader.shape()
    (radar_len,) = reader.unpack("<I")
    (conv_filters,) = reader.unpack("<I")
    kh, kw = reader.unpack("<II")
    (dense_units,) = reader.unpack("<I")
    (dropout_rate,) = reader.unpack("<d")
    spec = ModelSpec(
        sets[modality_count], stacked_shape, radar_len, conv_filters, (kh, kw),
        dense_units, dropout_rate,
    )
    spec.validate()
    expected = _expected_shapes(spec)
    values = {}
    for name in PARAM_ORDER:
        (ndim,) = reader.unpack("<B")
        shape = tuple(reader.unpack(f"<{ndim}I")) if ndim else ()
        if shape != expected[name]:
            raise CorruptionError(
                f"{name}: stored shape {shape} != spec shape {expected[name]}"
            )
        count = int(np.prod(shape))
        values[name] = (
            np.frombuffer(reader.take(4 * count), dtype="<f4")
            .astype(np.float32)
            .reshape(shape)
        )
    reader.done()
    return Model(
        spec,
        ConvParams(values["conv_kernels"], values["conv_bias"]),
        DenseParams(values["dense1_weights"], values["dense1_bias"]),
        DenseParams(values["output_weights"], values["output_bias"]),
    )


def weights_digest(model: Model) -> str:
    """SHA-256 of the serialized weights; stable across identical models."""
    return hashlib.sha256(serialize_model(model)).hexdigest()

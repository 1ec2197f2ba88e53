"""Minimal trainable neural engine for dense feedback/beamforming stacks.

Everything here is plain numpy: batched dense forward/backward with exact
chain-rule gradients, Adam, a uniform quantizer with a straight-through
backward pass, the phase-to-unit-circle output layer, Glorot initialization,
parameter/FLOP accounting, a central-difference gradient checker, and the
binary checkpoint format.

Training runs in float32; gradient-check oracles should build float64 copies
of a model (see cast_mlp) so finite differences are trustworthy.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

ACT_LEAKY_RELU = "leaky_relu"
ACT_TANH = "tanh"
ACT_LINEAR = "linear"
ACTIVATIONS = (ACT_LEAKY_RELU, ACT_TANH, ACT_LINEAR)

DEFAULT_LEAKY_SLOPE = 0.2

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

CHECKPOINT_MAGIC = b"CSFW"
CHECKPOINT_VERSION = 1
MODEL_TAGS = {"csifbnet-s": 0, "csifbnet-m": 1, "baseline-ae": 2, "baseline-bf": 3}
_ACT_CODES = {ACT_LEAKY_RELU: 0, ACT_TANH: 1, ACT_LINEAR: 2}
_ACT_FROM_CODE = {v: k for k, v in _ACT_CODES.items()}

_CKPT_HEADER = struct.Struct("<4sHHH")   # magic, version, model tag, layer count
_CKPT_LAYER = struct.Struct("<IIB")      # in_dim, out_dim, activation code


class CheckpointFormatError(ValueError):
    """Raised when a checkpoint file does not match the expected layout."""


@dataclass(frozen=True)
class LayerSpec:
    in_dim: int
    out_dim: int
    activation: str

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise ValueError(f"layer dims must be >= 1, got {self.in_dim}x{self.out_dim}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


@dataclass
class Layer:
    """Runtime parameters of one dense layer. w is (out_dim, in_dim)."""

    w: np.ndarray
    b: np.ndarray
    activation: str

    @property
    def in_dim(self) -> int:
        return self.w.shape[1]

    @property
    def out_dim(self) -> int:
        return self.w.shape[0]

    def spec(self) -> LayerSpec:
        return LayerSpec(self.in_dim, self.out_dim, self.activation)


@dataclass
class Mlp:
    layers: list
    leaky_slope: float = DEFAULT_LEAKY_SLOPE

    def __post_init__(self):
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.out_dim != nxt.in_dim:
                raise ValueError(
                    f"layer dims do not chain: {prev.out_dim} -> {nxt.in_dim}")
        for layer in self.layers:
            if not (np.all(np.isfinite(layer.w)) and np.all(np.isfinite(layer.b))):
                raise ValueError("layer parameters must be finite")

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    def specs(self):
        return [layer.spec() for layer in self.layers]

    def parameter_arrays(self):
        out = []
        for layer in self.layers:
            out.append(layer.w)
            out.append(layer.b)
        return out


def glorot_init(spec: LayerSpec, rng: np.random.Generator, dtype=np.float32) -> Layer:
    """Glorot-uniform weights, zero biases."""
    limit = np.sqrt(6.0 / (spec.in_dim + spec.out_dim))
    w = rng.uniform(-limit, limit, size=(spec.out_dim, spec.in_dim)).astype(dtype)
    b = np.zeros(spec.out_dim, dtype=dtype)
    return Layer(w=w, b=b, activation=spec.activation)


def build_mlp(specs, rng: np.random.Generator, dtype=np.float32,
              leaky_slope: float = DEFAULT_LEAKY_SLOPE) -> Mlp:
    return Mlp([glorot_init(s, rng, dtype) for s in specs], leaky_slope=leaky_slope)


def cast_mlp(mlp: Mlp, dtype) -> Mlp:
    """Copy of an MLP with parameters cast to dtype (float64 for gradcheck)."""
    layers = [Layer(w=l.w.astype(dtype), b=l.b.astype(dtype), activation=l.activation)
              for l in mlp.layers]
    return Mlp(layers, leaky_slope=mlp.leaky_slope)


@dataclass
class Tape:
    """Per-layer inputs plus the activation derivatives from one forward pass.

    act_grads[k] is d(activation)/d(pre-activation) for layer k, or None for
    linear layers; caching it makes the backward pass exact and cheap.
    """

    inputs: list
    act_grads: list
    out_dim: int
    single: bool


def mlp_forward(mlp: Mlp, x):
    """Forward pass; accepts a vector or a (batch, in_dim) matrix.

    Returns (output, tape); the tape carries everything mlp_backward needs.
    """
    x = np.asarray(x)
    single = x.ndim == 1
    a = np.atleast_2d(x)
    if a.shape[1] != mlp.in_dim:
        raise ValueError(f"input dim {a.shape[1]} does not match first layer {mlp.in_dim}")
    inputs, act_grads = [], []
    for layer in mlp.layers:
        inputs.append(a)
        z = a @ layer.w.T
        z += layer.b
        if layer.activation == ACT_LEAKY_RELU:
            factor = np.where(z > 0, z.dtype.type(1), z.dtype.type(mlp.leaky_slope))
            a = z * factor
            act_grads.append(factor)
        elif layer.activation == ACT_TANH:
            a = np.tanh(z)
            act_grads.append(1.0 - a * a)
        elif layer.activation == ACT_LINEAR:
            a = z
            act_grads.append(None)
        else:
            raise ValueError(f"unknown activation {layer.activation!r}")
    tape = Tape(inputs=inputs, act_grads=act_grads, out_dim=mlp.out_dim, single=single)
    return (a[0] if single else a), tape


def mlp_backward(mlp: Mlp, tape: Tape, upstream):
    """Exact reverse-mode gradients.

    Returns ([(dW, db) per layer], input gradient). Batched upstream gradients
    are summed into the parameter gradients; scale the upstream by 1/batch for
    a mean loss.
    """
    if len(tape.inputs) != len(mlp.layers) or tape.out_dim != mlp.out_dim:
        raise ValueError("tape does not match this MLP (layer count or width differs)")
    g = np.atleast_2d(np.asarray(upstream))
    if g.shape[1] != mlp.out_dim or g.shape[0] != tape.inputs[0].shape[0]:
        raise ValueError("upstream gradient shape does not match the taped forward pass")
    grads = [None] * len(mlp.layers)
    for k in range(len(mlp.layers) - 1, -1, -1):
        layer = mlp.layers[k]
        if tape.inputs[k].shape[1] != layer.in_dim:
            raise ValueError("tape does not match this MLP (layer dims differ)")
        factor = tape.act_grads[k]
        gz = g if factor is None else g * factor
        grads[k] = (gz.T @ tape.inputs[k], gz.sum(axis=0))
        g = gz @ layer.w
    return grads, (g[0] if tape.single else g)


@dataclass(frozen=True)
class QuantizerSpec:
    """Uniform quantizer on (-1, 1): 2^bits half-open bins, bin-center levels."""

    bits: int = 4

    def __post_init__(self):
        if self.bits < 1:
            raise ValueError(f"bits must be >= 1, got {self.bits}")

    @property
    def n_levels(self) -> int:
        return 1 << self.bits

    @property
    def step(self) -> float:
        return 2.0 / self.n_levels

    def levels(self) -> np.ndarray:
        return -1.0 + (np.arange(self.n_levels) + 0.5) * self.step


def quantize(x, spec: QuantizerSpec):
    """Map values to (codeword indices, bin-center reconstructions).

    Values at or beyond +/-1 land in the outermost bins. The training-time
    backward pass of this operation is the straight-through identity: the
    upstream gradient is transmitted unchanged (models simply reuse the
    decoder's input gradient as the encoder's output gradient).
    """
    x = np.asarray(x)
    idx = np.floor((x + 1.0) / spec.step).astype(np.int64)
    np.clip(idx, 0, spec.n_levels - 1, out=idx)
    return idx, dequantize(idx, spec, dtype=x.dtype)


def dequantize(idx, spec: QuantizerSpec, dtype=np.float64):
    idx = np.asarray(idx)
    if np.any(idx < 0) or np.any(idx >= spec.n_levels):
        raise ValueError("codeword index out of range")
    return (-1.0 + (idx + 0.5) * spec.step).astype(dtype)


def phase_to_unit(theta):
    """Map phases to unit-modulus complex entries: cos(theta) + j*sin(theta)."""
    theta = np.asarray(theta)
    if not np.all(np.isfinite(theta)):
        raise ValueError("phases must be finite")
    return np.cos(theta) + 1j * np.sin(theta)


def phase_to_unit_backward(theta, grad_re, grad_im):
    """Chain rule through the phase layer: dL/dtheta from (dL/dRe, dL/dIm)."""
    theta = np.asarray(theta)
    return -np.sin(theta) * grad_re + np.cos(theta) * grad_im


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0


def init_adam(params) -> AdamState:
    return AdamState(m=[np.zeros_like(p) for p in params],
                     v=[np.zeros_like(p) for p in params])


def adam_step(params, grads, state: AdamState, lr: float):
    """Standard Adam update with bias correction, in place on params.

    Rejects non-finite gradients so a diverging run fails loudly instead of
    silently poisoning the parameters.
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("params/grads/state length mismatch")
    for i, g in enumerate(grads):
        if g.shape != params[i].shape:
            raise ValueError(f"gradient {i} shape {g.shape} != param shape {params[i].shape}")
        if not np.all(np.isfinite(g)):
            raise ValueError(f"non-finite gradient in parameter block {i}")
    state.t += 1
    bc1 = 1.0 - ADAM_BETA1 ** state.t
    bc2 = 1.0 - ADAM_BETA2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * (g * g)
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + ADAM_EPS)
    return params, state


def complexity_report(specs):
    """(parameter count, FLOP count) for a stack of dense layers.

    Per layer: params = out*(in+1), flops = out*(2*in-1).
    """
    params = 0
    flops = 0
    for s in specs:
        params += s.out_dim * (s.in_dim + 1)
        flops += s.out_dim * (2 * s.in_dim - 1)
    return params, flops


def central_diff_grad(f, x, step: float = 1e-5) -> np.ndarray:
    """Central finite-difference gradient of a scalar function, in float64.

    Independent oracle for backward-pass checks; never reuse analytic
    gradients inside f.
    """
    x = np.asarray(x, dtype=np.float64)
    flat = x.reshape(-1)
    grad = np.zeros_like(flat)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        f_plus = f(x)
        flat[i] = orig - step
        f_minus = f(x)
        flat[i] = orig
        grad[i] = (f_plus - f_minus) / (2.0 * step)
    return grad.reshape(x.shape)


def grad_rel_error(analytic, numeric) -> float:
    """Scale-free gradient mismatch: ||a - n|| / max(||a||, ||n||)."""
    a = np.asarray(analytic, dtype=np.float64).reshape(-1)
    n = np.asarray(numeric, dtype=np.float64).reshape(-1)
    denom = max(np.linalg.norm(a), np.linalg.norm(n), 1e-300)
    return float(np.linalg.norm(a - n) / denom)


def save_checkpoint(path: str, model_tag: int, layers) -> None:
    """Write layers (in order) to the binary checkpoint format."""
    if model_tag not in MODEL_TAGS.values():
        raise ValueError(f"unknown model tag {model_tag}")
    chunks = [_CKPT_HEADER.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, model_tag, len(layers))]
    for layer in layers:
        chunks.append(_CKPT_LAYER.pack(layer.in_dim, layer.out_dim,
                                       _ACT_CODES[layer.activation]))
    for layer in layers:
        chunks.append(np.ascontiguousarray(layer.w, dtype="<f4").tobytes())
        chunks.append(np.ascontiguousarray(layer.b, dtype="<f4").tobytes())
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as f:
        for c in chunks:
            f.write(c)
    os.replace(tmp, path)


def load_checkpoint(path: str):
    """Read a checkpoint; returns (model_tag, [Layer...]) with float32 params."""
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < _CKPT_HEADER.size:
        raise CheckpointFormatError(f"{path}: truncated header")
    magic, version, model_tag, n_layers = _CKPT_HEADER.unpack_from(raw)
    if magic != CHECKPOINT_MAGIC:
        raise CheckpointFormatError(f"{path}: bad magic {magic!r}")
    if version != CHECKPOINT_VERSION:
        raise CheckpointFormatError(f"{path}: unsupported version {version}")
    offset = _CKPT_HEADER.size
    dims = []
    for _ in range(n_layers):
        in_dim, out_dim, act = _CKPT_LAYER.unpack_from(raw, offset)
        offset += _CKPT_LAYER.size
        if act not in _ACT_FROM_CODE:
            raise CheckpointFormatError(f"{path}: unknown activation code {act}")
        dims.append((in_dim, out_dim, _ACT_FROM_CODE[act]))
    layers = []
    for in_dim, out_dim, act in dims:
        n_w = in_dim * out_dim
        end = offset + (n_w + out_dim) * 4
        if end > len(raw):
            raise CheckpointFormatError(f"{path}: truncated parameter block")
        w = np.frombuffer(raw, dtype="<f4", count=n_w, offset=offset).reshape(out_dim, in_dim)
        b = np.frombuffer(raw, dtype="<f4", count=out_dim, offset=offset + n_w * 4)
        offset = end
        layers.append(Layer(w=w.copy(), b=b.copy(), activation=act))
    if offset != len(raw):
        raise CheckpointFormatError(f"{path}: trailing bytes after parameters")
    return model_tag, layers

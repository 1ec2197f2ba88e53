"""The four feedback/beamforming networks and their losses.

All networks are dense stacks from nncore. Channels enter as real vectors
with the real parts of all antennas followed by the imaginary parts. Beam
emitting networks end in the phase layer, so their outputs are unit-modulus
by construction. The quantizer sits between encoder and decoder and is active
in every forward pass; only its backward pass is the straight-through
identity.

Loss conventions:
  single-cell   -|h^H v|^2            (maximizing it maximizes SE)
  multi-cell    -|h^H w|^2 / (alpha*|g^H w|^2 + 1/rho),  w = v/sqrt(n_t)
  feedback MSE  ||h - h_hat||^2
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from . import nncore as nn
from .classicbf import conj_phase_bf

DEFAULT_BITS = 4

QUANTIZER_ACTIVE = "active"
QUANTIZER_IDENTITY = "identity"


# ---------------------------------------------------------------- conversions

def channel_to_real(h, dtype=np.float32):
    """(..., n_t) complex -> (..., 2*n_t) real: all Re entries then all Im."""
    h = np.asarray(h)
    return np.concatenate([h.real, h.imag], axis=-1).astype(dtype, copy=False)


def real_to_channel(x):
    """Inverse of channel_to_real."""
    x = np.asarray(x)
    n_t = x.shape[-1] // 2
    return x[..., :n_t] + 1j * x[..., n_t:]


# ---------------------------------------------------------------- layer maps

def encoder_specs(n_t, n_code):
    two = 2 * n_t
    return [nn.LayerSpec(two, two, nn.ACT_LEAKY_RELU),
            nn.LayerSpec(two, two, nn.ACT_LEAKY_RELU),
            nn.LayerSpec(two, n_code, nn.ACT_TANH)]


def beam_decoder_specs(n_t, in_dim):
    return [nn.LayerSpec(in_dim, 4 * n_t, nn.ACT_LEAKY_RELU),
            nn.LayerSpec(4 * n_t, 2 * n_t, nn.ACT_LEAKY_RELU),
            nn.LayerSpec(2 * n_t, n_t, nn.ACT_LINEAR)]


def ae_decoder_specs(n_t, n_code):
    return [nn.LayerSpec(n_code, 4 * n_t, nn.ACT_LEAKY_RELU),
            nn.LayerSpec(4 * n_t, 2 * n_t, nn.ACT_LEAKY_RELU),
            nn.LayerSpec(2 * n_t, 2 * n_t, nn.ACT_LINEAR)]


def elements_from_beta(n_t, beta):
    """Codeword element count 2*n_t/beta; beta must divide 2*n_t."""
    if beta < 1 or (2 * n_t) % beta != 0:
        raise ValueError(f"beta={beta} does not divide 2*n_t={2 * n_t}")
    return 2 * n_t // beta


def beta_fraction(n_t, n_code) -> Fraction:
    """Exact compression ratio 2*n_t/elements; fractional for odd splits."""
    validate_elements(n_t, n_code)
    return Fraction(2 * n_t, n_code)


def validate_elements(n_t, n_code):
    if not (1 <= n_code <= 2 * n_t):
        raise ValueError(f"codeword element count {n_code} outside [1, {2 * n_t}]")
    return n_code


# ---------------------------------------------------------------- losses

def loss_s(h, v_rf, variant="abs2"):
    """Single-cell training objective for one sample: -|h^H v|^2.

    The magnitude-squared reading is the one whose maximization matches the
    spectral-efficiency objective; variant="re" exposes the raw real-part
    alternative for experiments.
    """
    z = np.vdot(np.asarray(h, dtype=np.complex128), np.asarray(v_rf, dtype=np.complex128))
    if variant == "abs2":
        return -(z.real**2 + z.imag**2)
    if variant == "re":
        return -z.real
    raise ValueError(f"unknown loss_s variant {variant!r}")


def loss_m(h, g, v_rf, alpha, rho):
    """Multi-cell training objective for one sample: negated per-user SINR."""
    _validate_rate(alpha, rho)
    h = np.asarray(h, dtype=np.complex128)
    g = np.asarray(g, dtype=np.complex128)
    v = np.asarray(v_rf, dtype=np.complex128)
    n_t = h.shape[-1]
    zh = np.vdot(h, v)
    zg = np.vdot(g, v)
    desired = (zh.real**2 + zh.imag**2) / n_t
    interference = alpha * (zg.real**2 + zg.imag**2) / n_t
    return -desired / (interference + 1.0 / rho)


def mse_loss(h, h_hat):
    """Squared Euclidean norm of the reconstruction error."""
    d = np.asarray(h_hat, dtype=np.complex128) - np.asarray(h, dtype=np.complex128)
    return float(np.sum(d.real**2 + d.imag**2))


def nmse_db(h, h_hat):
    """10*log10 of the batch-mean of per-sample ||h_hat - h||^2 / ||h||^2.

    A perfect reconstruction yields -inf (sentinel). Zero-norm channels are
    rejected.
    """
    h = np.atleast_2d(np.asarray(h, dtype=np.complex128))
    h_hat = np.atleast_2d(np.asarray(h_hat, dtype=np.complex128))
    power = np.sum(h.real**2 + h.imag**2, axis=-1)
    if np.any(power == 0):
        raise ValueError("nmse is undefined for zero channels")
    d = h_hat - h
    err = np.sum(d.real**2 + d.imag**2, axis=-1)
    ratio = float(np.mean(err / power))
    if ratio == 0.0:
        return -math.inf
    return 10.0 * math.log10(ratio)


def _validate_rate(alpha, rho):
    if not (0.0 <= alpha <= 1.0):
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if not (rho > 0 and math.isfinite(rho)):
        raise ValueError(f"rho must be positive and finite, got {rho}")


def _loss_s_terms(H, V, variant="abs2"):
    """Batched per-sample losses and dL/dV (complex pair convention)."""
    z = np.sum(np.conj(H) * V, axis=-1)
    if variant == "abs2":
        losses = -(z.real**2 + z.imag**2)
        gv = -2.0 * z[:, None] * H
    elif variant == "re":
        losses = -z.real
        gv = -H
    else:
        raise ValueError(f"unknown loss_s variant {variant!r}")
    return losses, gv


def _loss_m_terms(H, G, V, alpha, rho):
    n_t = H.shape[-1]
    zh = np.sum(np.conj(H) * V, axis=-1)
    zg = np.sum(np.conj(G) * V, axis=-1)
    a_val = (zh.real**2 + zh.imag**2) / n_t
    b_val = alpha * (zg.real**2 + zg.imag**2) / n_t + 1.0 / rho
    losses = -a_val / b_val
    coef_h = (-1.0 / b_val) * (2.0 / n_t)
    coef_g = (a_val / (b_val * b_val)) * (2.0 * alpha / n_t)
    gv = coef_h[:, None] * zh[:, None] * H + coef_g[:, None] * zg[:, None] * G
    return losses, gv


# ---------------------------------------------------------------- networks

class CsiFBnetS:
    """Single-cell feedback net: encoder -> quantizer -> beam decoder -> phase."""

    loss_kind = "loss_s"
    model_tag = nn.MODEL_TAGS["csifbnet-s"]

    def __init__(self, n_t, n_code, bits=DEFAULT_BITS, rng=None, dtype=np.float32,
                 leaky_slope=nn.DEFAULT_LEAKY_SLOPE, quantizer_mode=QUANTIZER_ACTIVE,
                 loss_variant="abs2"):
        validate_elements(n_t, n_code)
        rng = rng if rng is not None else np.random.default_rng(0)
        self.n_t = n_t
        self.n_code = n_code
        self.quant = nn.QuantizerSpec(bits)
        self.quantizer_mode = quantizer_mode
        self.loss_variant = loss_variant
        self.dtype = dtype
        self.encoder = nn.build_mlp(encoder_specs(n_t, n_code), rng, dtype, leaky_slope)
        self.decoder = nn.build_mlp(beam_decoder_specs(n_t, n_code), rng, dtype, leaky_slope)

    def parameter_arrays(self):
        return self.encoder.parameter_arrays() + self.decoder.parameter_arrays()

    def all_layers(self):
        return list(self.encoder.layers) + list(self.decoder.layers)

    def _code(self, enc_out):
        if self.quantizer_mode == QUANTIZER_IDENTITY:
            return None, enc_out
        return nn.quantize(enc_out, self.quant)

    def forward(self, h):
        """(beam vector(s), codeword index vector(s)) for complex input h."""
        x = channel_to_real(h, self.dtype)
        enc_out, _ = nn.mlp_forward(self.encoder, x)
        idx, q = self._code(enc_out)
        theta, _ = nn.mlp_forward(self.decoder, q)
        return nn.phase_to_unit(theta), idx

    def infer_beams(self, H, G=None):
        return self.forward(H)[0]

    def batch_loss(self, batch, alpha=None, rho=None):
        (H,) = batch
        v, _ = self.forward(H)
        losses, _ = _loss_s_terms(np.atleast_2d(H), np.atleast_2d(v), self.loss_variant)
        return float(np.mean(losses))

    def batch_loss_and_grads(self, batch, alpha=None, rho=None):
        (H,) = batch
        H = np.atleast_2d(H)
        x = channel_to_real(H, self.dtype)
        enc_out, enc_tape = nn.mlp_forward(self.encoder, x)
        _, q = self._code(enc_out)
        theta, dec_tape = nn.mlp_forward(self.decoder, q)
        v = nn.phase_to_unit(theta)
        losses, gv = _loss_s_terms(H, v, self.loss_variant)
        n = H.shape[0]
        g_theta = nn.phase_to_unit_backward(theta, gv.real, gv.imag) / n
        dec_grads, g_q = nn.mlp_backward(self.decoder, dec_tape, g_theta.astype(self.dtype))
        # straight-through quantizer: decoder input gradient flows unchanged
        enc_grads, _ = nn.mlp_backward(self.encoder, enc_tape, g_q)
        grads = _flatten(enc_grads) + _flatten(dec_grads)
        return float(np.mean(losses)), grads

    def save(self, path):
        nn.save_checkpoint(path, self.model_tag, self.all_layers())

    @classmethod
    def from_layers(cls, layers, bits=DEFAULT_BITS, leaky_slope=nn.DEFAULT_LEAKY_SLOPE,
                    loss_variant="abs2"):
        if len(layers) != 6:
            raise ValueError(f"csifbnet-s checkpoints carry 6 layers, found {len(layers)}")
        model = cls.__new__(cls)
        model.n_t = layers[-1].out_dim
        model.n_code = layers[2].out_dim
        model.quant = nn.QuantizerSpec(bits)
        model.quantizer_mode = QUANTIZER_ACTIVE
        model.loss_variant = loss_variant
        model.dtype = layers[0].w.dtype
        model.encoder = nn.Mlp(list(layers[:3]), leaky_slope=leaky_slope)
        model.decoder = nn.Mlp(list(layers[3:]), leaky_slope=leaky_slope)
        return model


class CsiFBnetM:
    """Multi-cell net: two encoders, shared quantizer, concat, beam decoder."""

    loss_kind = "loss_m"
    model_tag = nn.MODEL_TAGS["csifbnet-m"]

    def __init__(self, n_t, n_code_h, n_code_g, bits=DEFAULT_BITS, rng=None,
                 dtype=np.float32, leaky_slope=nn.DEFAULT_LEAKY_SLOPE,
                 quantizer_mode=QUANTIZER_ACTIVE):
        validate_elements(n_t, n_code_h)
        validate_elements(n_t, n_code_g)
        rng = rng if rng is not None else np.random.default_rng(0)
        self.n_t = n_t
        self.n_code_h = n_code_h
        self.n_code_g = n_code_g
        self.quant = nn.QuantizerSpec(bits)
        self.quantizer_mode = quantizer_mode
        self.dtype = dtype
        self.encoder_h = nn.build_mlp(encoder_specs(n_t, n_code_h), rng, dtype, leaky_slope)
        self.encoder_g = nn.build_mlp(encoder_specs(n_t, n_code_g), rng, dtype, leaky_slope)
        self.decoder = nn.build_mlp(beam_decoder_specs(n_t, n_code_h + n_code_g),
                                    rng, dtype, leaky_slope)

    def parameter_arrays(self):
        return (self.encoder_h.parameter_arrays() + self.encoder_g.parameter_arrays()
                + self.decoder.parameter_arrays())

    def all_layers(self):
        return (list(self.encoder_h.layers) + list(self.encoder_g.layers)
                + list(self.decoder.layers))

    def _code(self, enc_out):
        if self.quantizer_mode == QUANTIZER_IDENTITY:
            return None, enc_out
        return nn.quantize(enc_out, self.quant)

    def forward(self, h, g):
        xh = channel_to_real(h, self.dtype)
        xg = channel_to_real(g, self.dtype)
        eh, _ = nn.mlp_forward(self.encoder_h, xh)
        eg, _ = nn.mlp_forward(self.encoder_g, xg)
        idx_h, qh = self._code(eh)
        idx_g, qg = self._code(eg)
        theta, _ = nn.mlp_forward(self.decoder, np.concatenate([qh, qg], axis=-1))
        return nn.phase_to_unit(theta), idx_h, idx_g

    def infer_beams(self, H, G):
        return self.forward(H, G)[0]

    def batch_loss(self, batch, alpha, rho):
        _validate_rate(alpha, rho)
        H, G = batch
        v, _, _ = self.forward(H, G)
        losses, _ = _loss_m_terms(np.atleast_2d(H), np.atleast_2d(G),
                                  np.atleast_2d(v), alpha, rho)
        return float(np.mean(losses))

    def batch_loss_and_grads(self, batch, alpha, rho):
        _validate_rate(alpha, rho)
        H, G = batch
        H, G = np.atleast_2d(H), np.atleast_2d(G)
        xh = channel_to_real(H, self.dtype)
        xg = channel_to_real(G, self.dtype)
        eh, tape_h = nn.mlp_forward(self.encoder_h, xh)
        eg, tape_g = nn.mlp_forward(self.encoder_g, xg)
        _, qh = self._code(eh)
        _, qg = self._code(eg)
        theta, dec_tape = nn.mlp_forward(self.decoder, np.concatenate([qh, qg], axis=-1))
        v = nn.phase_to_unit(theta)
        losses, gv = _loss_m_terms(H, G, v, alpha, rho)
        n = H.shape[0]
        g_theta = nn.phase_to_unit_backward(theta, gv.real, gv.imag) / n
        dec_grads, g_code = nn.mlp_backward(self.decoder, dec_tape,
                                            g_theta.astype(self.dtype))
        enc_h_grads, _ = nn.mlp_backward(self.encoder_h, tape_h, g_code[:, :self.n_code_h])
        enc_g_grads, _ = nn.mlp_backward(self.encoder_g, tape_g, g_code[:, self.n_code_h:])
        grads = _flatten(enc_h_grads) + _flatten(enc_g_grads) + _flatten(dec_grads)
        return float(np.mean(losses)), grads

    def save(self, path):
        nn.save_checkpoint(path, self.model_tag, self.all_layers())

    @classmethod
    def from_layers(cls, layers, bits=DEFAULT_BITS, leaky_slope=nn.DEFAULT_LEAKY_SLOPE):
        if len(layers) != 9:
            raise ValueError(f"csifbnet-m checkpoints carry 9 layers, found {len(layers)}")
        model = cls.__new__(cls)
        model.n_t = layers[-1].out_dim
        model.n_code_h = layers[2].out_dim
        model.n_code_g = layers[5].out_dim
        model.quant = nn.QuantizerSpec(bits)
        model.quantizer_mode = QUANTIZER_ACTIVE
        model.dtype = layers[0].w.dtype
        model.encoder_h = nn.Mlp(list(layers[:3]), leaky_slope=leaky_slope)
        model.encoder_g = nn.Mlp(list(layers[3:6]), leaky_slope=leaky_slope)
        model.decoder = nn.Mlp(list(layers[6:]), leaky_slope=leaky_slope)
        return model


class BaselineAE:
    """MSE feedback autoencoder; reconstructs the CSI instead of a beam."""

    loss_kind = "mse"
    model_tag = nn.MODEL_TAGS["baseline-ae"]

    def __init__(self, n_t, n_code, bits=DEFAULT_BITS, rng=None, dtype=np.float32,
                 leaky_slope=nn.DEFAULT_LEAKY_SLOPE, quantizer_mode=QUANTIZER_ACTIVE):
        validate_elements(n_t, n_code)
        rng = rng if rng is not None else np.random.default_rng(0)
        self.n_t = n_t
        self.n_code = n_code
        self.quant = nn.QuantizerSpec(bits)
        self.quantizer_mode = quantizer_mode
        self.dtype = dtype
        self.encoder = nn.build_mlp(encoder_specs(n_t, n_code), rng, dtype, leaky_slope)
        self.decoder = nn.build_mlp(ae_decoder_specs(n_t, n_code), rng, dtype, leaky_slope)

    def parameter_arrays(self):
        return self.encoder.parameter_arrays() + self.decoder.parameter_arrays()

    def all_layers(self):
        return list(self.encoder.layers) + list(self.decoder.layers)

    def _code(self, enc_out):
        if self.quantizer_mode == QUANTIZER_IDENTITY:
            return None, enc_out
        return nn.quantize(enc_out, self.quant)

    def reconstruct_real(self, H):
        x = channel_to_real(H, self.dtype)
        enc_out, _ = nn.mlp_forward(self.encoder, x)
        _, q = self._code(enc_out)
        xhat, _ = nn.mlp_forward(self.decoder, q)
        return xhat

    def reconstruct(self, H):
        return real_to_channel(self.reconstruct_real(H))

    def forward(self, h):
        """(reconstructed channel(s), codeword index vector(s))."""
        x = channel_to_real(h, self.dtype)
        enc_out, _ = nn.mlp_forward(self.encoder, x)
        idx, q = self._code(enc_out)
        xhat, _ = nn.mlp_forward(self.decoder, q)
        return real_to_channel(xhat), idx

    def infer_beams(self, H, G=None):
        """Single-cell baseline deployment path: phase-align on the reconstruction."""
        return conj_phase_bf(self.reconstruct(np.asarray(H, dtype=np.complex128)))

    def batch_loss(self, batch, alpha=None, rho=None):
        (H,) = batch
        x = channel_to_real(np.atleast_2d(H), self.dtype)
        xhat = self.reconstruct_real(np.atleast_2d(H))
        return float(np.mean(np.sum((xhat - x) ** 2, axis=-1)))

    def batch_loss_and_grads(self, batch, alpha=None, rho=None):
        (H,) = batch
        H = np.atleast_2d(H)
        x = channel_to_real(H, self.dtype)
        enc_out, enc_tape = nn.mlp_forward(self.encoder, x)
        _, q = self._code(enc_out)
        xhat, dec_tape = nn.mlp_forward(self.decoder, q)
        diff = xhat - x
        losses = np.sum(diff ** 2, axis=-1)
        n = H.shape[0]
        g_out = (2.0 / n) * diff
        dec_grads, g_q = nn.mlp_backward(self.decoder, dec_tape, g_out.astype(self.dtype))
        enc_grads, _ = nn.mlp_backward(self.encoder, enc_tape, g_q)
        return float(np.mean(losses)), _flatten(enc_grads) + _flatten(dec_grads)

    def save(self, path):
        nn.save_checkpoint(path, self.model_tag, self.all_layers())

    @classmethod
    def from_layers(cls, layers, bits=DEFAULT_BITS, leaky_slope=nn.DEFAULT_LEAKY_SLOPE):
        if len(layers) != 6:
            raise ValueError(f"baseline-ae checkpoints carry 6 layers, found {len(layers)}")
        model = cls.__new__(cls)
        model.n_t = layers[-1].out_dim // 2
        model.n_code = layers[2].out_dim
        model.quant = nn.QuantizerSpec(bits)
        model.quantizer_mode = QUANTIZER_ACTIVE
        model.dtype = layers[0].w.dtype
        model.encoder = nn.Mlp(list(layers[:3]), leaky_slope=leaky_slope)
        model.decoder = nn.Mlp(list(layers[3:]), leaky_slope=leaky_slope)
        return model


class BaselineBF:
    """Beam-design net fed CSI: perfect during training (variant 1) or the
    output of frozen feedback autoencoders (variant 2).

    Deployment always runs through the feedback path when autoencoders are
    attached; training input is controlled by train_on_perfect.
    """

    model_tag = nn.MODEL_TAGS["baseline-bf"]

    def __init__(self, n_t, paired, rng=None, dtype=np.float32,
                 leaky_slope=nn.DEFAULT_LEAKY_SLOPE, ae_h=None, ae_g=None,
                 train_on_perfect=False, loss_variant="abs2"):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.n_t = n_t
        self.paired = paired
        self.loss_kind = "loss_m" if paired else "loss_s"
        self.loss_variant = loss_variant
        self.dtype = dtype
        self.ae_h = ae_h
        self.ae_g = ae_g
        self.train_on_perfect = train_on_perfect
        if paired and (ae_g is None) != (ae_h is None):
            raise ValueError("multi-cell baseline needs both or neither autoencoder")
        if not train_on_perfect and ae_h is None:
            raise ValueError("training on reconstructed CSI requires frozen autoencoders")
        in_dim = 4 * n_t if paired else 2 * n_t
        self.net = nn.build_mlp(beam_decoder_specs(n_t, in_dim), rng, dtype, leaky_slope)

    def parameter_arrays(self):
        return self.net.parameter_arrays()

    def all_layers(self):
        return list(self.net.layers)

    def _net_input(self, H, G, perfect):
        if perfect or self.ae_h is None:
            parts = [channel_to_real(H, self.dtype)]
            if self.paired:
                parts.append(channel_to_real(G, self.dtype))
        else:
            parts = [self.ae_h.reconstruct_real(H)]
            if self.paired:
                parts.append(self.ae_g.reconstruct_real(G))
        return np.concatenate(parts, axis=-1) if len(parts) > 1 else parts[0]

    def beams_from_input(self, x):
        theta, _ = nn.mlp_forward(self.net, x)
        return nn.phase_to_unit(theta)

    def infer_beams(self, H, G=None):
        if self.paired and G is None:
            raise ValueError("multi-cell baseline needs both channels")
        x = self._net_input(np.atleast_2d(H), None if G is None else np.atleast_2d(G),
                            perfect=False)
        return self.beams_from_input(x)

    def batch_loss(self, batch, alpha=None, rho=None):
        H = np.atleast_2d(batch[0])
        G = np.atleast_2d(batch[1]) if self.paired else None
        x = self._net_input(H, G, perfect=self.train_on_perfect)
        v = self.beams_from_input(x)
        if self.paired:
            _validate_rate(alpha, rho)
            losses, _ = _loss_m_terms(H, G, v, alpha, rho)
        else:
            losses, _ = _loss_s_terms(H, v, self.loss_variant)
        return float(np.mean(losses))

    def batch_loss_and_grads(self, batch, alpha=None, rho=None):
        H = np.atleast_2d(batch[0])
        G = np.atleast_2d(batch[1]) if self.paired else None
        x = self._net_input(H, G, perfect=self.train_on_perfect)
        theta, tape = nn.mlp_forward(self.net, x)
        v = nn.phase_to_unit(theta)
        if self.paired:
            _validate_rate(alpha, rho)
            losses, gv = _loss_m_terms(H, G, v, alpha, rho)
        else:
            losses, gv = _loss_s_terms(H, v, self.loss_variant)
        n = H.shape[0]
        g_theta = nn.phase_to_unit_backward(theta, gv.real, gv.imag) / n
        net_grads, _ = nn.mlp_backward(self.net, tape, g_theta.astype(self.dtype))
        return float(np.mean(losses)), _flatten(net_grads)

    def save(self, path):
        nn.save_checkpoint(path, self.model_tag, self.all_layers())

    @classmethod
    def from_layers(cls, layers, n_t, paired, ae_h=None, ae_g=None,
                    leaky_slope=nn.DEFAULT_LEAKY_SLOPE, loss_variant="abs2"):
        model = cls.__new__(cls)
        model.n_t = n_t
        model.paired = paired
        model.loss_kind = "loss_m" if paired else "loss_s"
        model.loss_variant = loss_variant
        model.dtype = layers[0].w.dtype
        model.ae_h = ae_h
        model.ae_g = ae_g
        model.train_on_perfect = ae_h is None
        model.net = nn.Mlp(list(layers), leaky_slope=leaky_slope)
        expected = 4 * n_t if paired else 2 * n_t
        if model.net.in_dim != expected:
            raise ValueError(f"baseline-bf input dim {model.net.in_dim}, expected {expected}")
        return model


def _flatten(layer_grads):
    out = []
    for dw, db in layer_grads:
        out.append(dw)
        out.append(db)
    return out


# ---------------------------------------------------------------- complexity

def _as_int(frac: Fraction, what: str) -> int:
    if frac.denominator != 1:
        raise ValueError(f"{what} is not integral: {frac}")
    return int(frac)


def closed_form_csifbnet_s(n_t, beta):
    """Closed-form (params, flops) of the single-cell network."""
    b = Fraction(beta)
    params = (18 + Fraction(12) / b) * n_t**2 + (11 + Fraction(2) / b) * n_t
    flops = (36 + Fraction(24) / b) * n_t**2 - (11 + Fraction(2) / b) * n_t
    return _as_int(params, "params"), _as_int(flops, "flops")


def closed_form_csifbnet_m(n_t, beta_h, beta_g):
    """Closed-form (params, flops) of the multi-cell network."""
    bh, bg = Fraction(beta_h), Fraction(beta_g)
    ratio = Fraction(12) / bh + Fraction(12) / bg
    lin = Fraction(2) / bh + Fraction(2) / bg
    params = (26 + ratio) * n_t**2 + (15 + lin) * n_t
    flops = (52 + 2 * ratio) * n_t**2 - (15 + lin) * n_t
    return _as_int(params, "params"), _as_int(flops, "flops")


def closed_form_baseline_ae(n_t, beta):
    """Closed-form (params, flops) of one feedback autoencoder."""
    b = Fraction(beta)
    params = (20 + Fraction(12) / b) * n_t**2 + (12 + Fraction(2) / b) * n_t
    flops = (40 + Fraction(24) / b) * n_t**2 - (12 + Fraction(2) / b) * n_t
    return _as_int(params, "params"), _as_int(flops, "flops")


def closed_form_multicell_baseline(n_t, beta_h, beta_g):
    """Closed-form (params, flops) of the multi-cell baseline stack.

    Stack: one autoencoder per channel plus a beam net shaped like the
    multi-cell decoder. The FLOP total matches the published comparison; the
    parameter total is its arithmetically consistent companion (params of a
    dense stack are always flops/2 plus 3/2 of the summed output widths).
    """
    bh, bg = Fraction(beta_h), Fraction(beta_g)
    ratio20 = Fraction(20) / bh + Fraction(20) / bg
    lin = Fraction(2) / bh + Fraction(2) / bg
    params = (50 + ratio20) * n_t**2 + (31 + lin) * n_t
    flops = (100 + 2 * ratio20) * n_t**2 - (31 + lin) * n_t
    return _as_int(params, "params"), _as_int(flops, "flops")


def multicell_baseline_table_specs(n_t, n_code_h, n_code_g):
    """Layer stack behind the published multi-cell baseline complexity row:
    two full autoencoders plus a decoder-shaped beam net on the codewords."""
    return (encoder_specs(n_t, n_code_h) + ae_decoder_specs(n_t, n_code_h)
            + encoder_specs(n_t, n_code_g) + ae_decoder_specs(n_t, n_code_g)
            + beam_decoder_specs(n_t, n_code_h + n_code_g))

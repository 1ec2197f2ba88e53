import numpy as np
import pytest

from csifb import lut as lutmod
from csifb import models as md
from csifb import nncore as nn


def test_codeword_row_roundtrip():
    rng = np.random.default_rng(0)
    cw = rng.integers(0, 16, size=(50, 3))
    rows = lutmod.codeword_to_row(cw, bits=4)
    back = lutmod.row_to_codeword(rows, n_elements=3, bits=4)
    assert np.array_equal(back, cw)


def test_build_lut_matches_decoder_forward():
    model = md.CsiFBnetS(n_t=6, n_code=2, bits=4, rng=np.random.default_rng(1))
    phases = lutmod.build_lut(model.decoder, model.quant, model.n_code)
    assert phases.shape == (256, 6)
    rng = np.random.default_rng(2)
    cw = rng.integers(0, 16, size=(100, 2))
    q = nn.dequantize(cw, model.quant, dtype=np.float32)
    theta, _ = nn.mlp_forward(model.decoder, q)
    rows = lutmod.codeword_to_row(cw, bits=4)
    assert np.array_equal(phases[rows], theta.astype(np.float32))


def test_lut_rows_unit_modulus():
    model = md.CsiFBnetS(n_t=4, n_code=1, bits=4, rng=np.random.default_rng(3))
    phases = lutmod.build_lut(model.decoder, model.quant, 1)
    assert phases.shape == (16, 4)
    beams = nn.phase_to_unit(phases)
    assert np.max(np.abs(np.abs(beams) - 1.0)) <= 1e-6


def test_lut_roundtrip(tmp_path):
    model = md.CsiFBnetS(n_t=4, n_code=2, bits=3, rng=np.random.default_rng(4))
    phases = lutmod.build_lut(model.decoder, model.quant, 2)
    path = tmp_path / "t.csfl"
    lutmod.write_lut(str(path), phases, n_bits=6)
    n_bits, back = lutmod.read_lut(str(path))
    assert n_bits == 6
    assert np.array_equal(back, phases)
    raw = path.read_bytes()
    assert raw[:4] == b"CSFL"
    assert int.from_bytes(raw[6:8], "little") == 6
    assert int.from_bytes(raw[8:12], "little") == 4


def test_lut_bit_cap():
    model = md.CsiFBnetS(n_t=32, n_code=6, bits=4, rng=np.random.default_rng(5))
    with pytest.raises(ValueError):
        lutmod.build_lut(model.decoder, model.quant, 6)  # 24 bits > cap


def test_lut_beam_lookup():
    model = md.CsiFBnetS(n_t=4, n_code=2, bits=2, rng=np.random.default_rng(6))
    phases = lutmod.build_lut(model.decoder, model.quant, 2)
    beam = lutmod.lut_beam(phases, np.array([1, 3]), bits=2)
    expected = nn.phase_to_unit(phases[1 + (3 << 2)])
    assert np.array_equal(beam, expected)


def test_lut_read_rejects_corruption(tmp_path):
    model = md.CsiFBnetS(n_t=4, n_code=1, bits=2, rng=np.random.default_rng(7))
    phases = lutmod.build_lut(model.decoder, model.quant, 1)
    path = tmp_path / "t.csfl"
    lutmod.write_lut(str(path), phases, n_bits=2)
    bad = tmp_path / "bad.csfl"
    bad.write_bytes(path.read_bytes()[:-2])
    with pytest.raises(lutmod.LutFormatError):
        lutmod.read_lut(str(bad))

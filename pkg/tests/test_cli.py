import subprocess
import sys

import numpy as np
import pytest

from csifb import chanmodel as cm
from csifb import lut as lutmod
from csifb.cli import main

TINY = """
nt = 4
nc = 2
ns = 3
seed = 3
bits = 4
model = csifbnet-s
elements_h = 2
snr_db = 10
batch_size = 10
epochs = 2
"""


@pytest.fixture
def tiny_cfg(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY)
    return str(path)


def _gen(tiny_cfg, tmp_path, name="ds.csfb", count=50, paired=False):
    out = str(tmp_path / name)
    argv = ["gen-data", "--config", tiny_cfg, "--count", str(count), "--out", out]
    if paired:
        argv.append("--paired")
    assert main(argv) == 0
    return out


def test_gen_data_writes_valid_header(tiny_cfg, tmp_path):
    out = _gen(tiny_cfg, tmp_path)
    ds = cm.read_dataset(out)
    assert ds.n_t == 4 and ds.count == 50 and not ds.paired


def test_gen_data_paired_flag_bit(tiny_cfg, tmp_path):
    out = _gen(tiny_cfg, tmp_path, name="p.csfb", paired=True)
    raw = open(out, "rb").read()
    assert int.from_bytes(raw[6:8], "little") & 1


def test_gen_data_bad_path_leaves_no_partial_file(tiny_cfg, tmp_path):
    bad = tmp_path / "missing-dir" / "ds.csfb"
    rc = main(["gen-data", "--config", tiny_cfg, "--count", "50", "--out", str(bad)])
    assert rc != 0
    assert not bad.exists() and not bad.with_suffix(".csfb.tmp").exists()


def test_usage_error_exit_code():
    assert main(["gen-data", "--count", "50"]) == 1  # missing --config
    assert main(["no-such-command"]) == 1


def test_unknown_config_key_exit_code(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("nt = 4\nwat = 1\n")
    rc = main(["gen-data", "--config", str(cfg), "--count", "50",
               "--out", str(tmp_path / "x.csfb")])
    assert rc == 1


def test_train_and_eval_roundtrip(tiny_cfg, tmp_path):
    data = _gen(tiny_cfg, tmp_path)
    ckpt = str(tmp_path / "s.csfw")
    trace = str(tmp_path / "trace.csv")
    assert main(["train", "--config", tiny_cfg, "--data", data,
                 "--out", ckpt, "--trace", trace]) == 0
    lines = open(trace).read().splitlines()
    assert lines[0] == "epoch,train_loss,val_loss,lr"
    assert len(lines) == 3  # two epochs
    out = str(tmp_path / "eval.csv")
    assert main(["eval", "--config", tiny_cfg, "--data", data,
                 "--ckpt", ckpt, "--out", out]) == 0
    rows = open(out).read().splitlines()
    assert rows[0] == "metric,split,value"
    assert rows[1].startswith("mean_se,test,")


def test_train_deterministic_bytes(tiny_cfg, tmp_path):
    data = _gen(tiny_cfg, tmp_path)
    outs = []
    for name in ("a", "b"):
        ckpt = str(tmp_path / f"{name}.csfw")
        trace = str(tmp_path / f"{name}.csv")
        assert main(["train", "--config", tiny_cfg, "--data", data,
                     "--out", ckpt, "--trace", trace]) == 0
        outs.append((open(ckpt, "rb").read(), open(trace, "rb").read()))
    assert outs[0] == outs[1]


def test_train_rejects_unpaired_data_for_multicell(tiny_cfg, tmp_path):
    data = _gen(tiny_cfg, tmp_path)
    cfg = tmp_path / "m.cfg"
    cfg.write_text(TINY.replace("csifbnet-s", "csifbnet-m") + "elements_g = 2\n")
    rc = main(["train", "--config", str(cfg), "--data", data,
               "--out", str(tmp_path / "m.csfw")])
    assert rc != 0


def test_baseline_bf_requires_ae_or_perfect(tiny_cfg, tmp_path):
    data = _gen(tiny_cfg, tmp_path)
    cfg = tmp_path / "bf.cfg"
    cfg.write_text(TINY.replace("csifbnet-s", "baseline-bf"))
    rc = main(["train", "--config", str(cfg), "--data", data,
               "--out", str(tmp_path / "bf.csfw")])
    assert rc != 0
    assert main(["train", "--config", str(cfg), "--data", data,
                 "--out", str(tmp_path / "bf.csfw"), "--perfect-csi"]) == 0


def test_full_multicell_baseline_pipeline(tiny_cfg, tmp_path):
    data = _gen(tiny_cfg, tmp_path, name="pairs.csfb", paired=True)
    ae_cfg = tmp_path / "ae.cfg"
    ae_cfg.write_text(TINY.replace("csifbnet-s", "baseline-ae"))
    ae_ckpt = str(tmp_path / "ae.csfw")
    assert main(["train", "--config", str(ae_cfg), "--data", data, "--out", ae_ckpt]) == 0
    bf_cfg = tmp_path / "bf.cfg"
    bf_cfg.write_text(TINY.replace("csifbnet-s", "baseline-bf") + "elements_g = 2\nalpha = 0.1\n")
    bf_ckpt = str(tmp_path / "bf.csfw")
    assert main(["train", "--config", str(bf_cfg), "--data", data,
                 "--out", bf_ckpt, "--ae-ckpt", ae_ckpt]) == 0
    out = str(tmp_path / "rate.csv")
    assert main(["eval", "--config", str(bf_cfg), "--data", data, "--ckpt", bf_ckpt,
                 "--ae-ckpt", ae_ckpt, "--metric", "mean_rate", "--out", out]) == 0
    value = float(open(out).read().splitlines()[1].split(",")[2])
    assert np.isfinite(value)


def test_sweep_bits_single_cell(tiny_cfg, tmp_path):
    data = _gen(tiny_cfg, tmp_path)
    out = str(tmp_path / "sweep.csv")
    assert main(["sweep-bits", "--config", tiny_cfg, "--data", data,
                 "--bits", "8,6,40", "--out", out]) == 0
    lines = open(out).read().splitlines()
    assert lines[0] == "n_bits,method,mean_metric,status,reason"
    cells = [line.split(",") for line in lines[1:]]
    by_key = {(c[0], c[1]): c for c in cells}
    assert by_key[("perfect", "upper_bound")][3] == "ok"
    # infeasible rows are reported, not fatal: 6 not a multiple of 4, 40 too wide
    assert by_key[("6", "all")][3] == "skipped"
    assert by_key[("40", "all")][3] == "skipped"
    ub = float(by_key[("perfect", "upper_bound")][2])
    for key in (("8", "csifbnet-s"), ("8", "baseline-1")):
        assert by_key[key][3] == "ok"
        assert float(by_key[key][2]) <= ub + 1e-9


def test_sweep_alloc(tiny_cfg, tmp_path):
    data = _gen(tiny_cfg, tmp_path, name="pairs.csfb", paired=True)
    cfg = tmp_path / "m.cfg"
    cfg.write_text(TINY.replace("csifbnet-s", "csifbnet-m") + "elements_g = 2\nalpha = 0.1\n")
    out = str(tmp_path / "alloc.csv")
    assert main(["sweep-alloc", "--config", str(cfg), "--data", data,
                 "--splits", "3:1,2:2,4:0", "--out", out]) == 0
    lines = open(out).read().splitlines()
    assert lines[0] == "elements_h,elements_g,n_bits,mean_rate,status,reason"
    rows = [line.split(",") for line in lines[1:]]
    assert rows[0][:2] == ["3", "1"] and rows[0][4] == "ok"
    assert rows[1][:2] == ["2", "2"] and rows[1][4] == "ok"
    assert rows[2][:2] == ["4", "0"] and rows[2][4] == "skipped"


def test_mismatch_rejects_multi_axis(tiny_cfg):
    rc = main(["mismatch", "--config", tiny_cfg, "--count", "50",
               "--train", "nc=2", "--test", "snr_db=10"])
    assert rc == 1
    rc = main(["mismatch", "--config", tiny_cfg, "--count", "50",
               "--train", "ns=2", "--test", "ns=3"])
    assert rc == 1


def test_mismatch_path_axis(tiny_cfg, tmp_path):
    out = str(tmp_path / "mm.csv")
    assert main(["mismatch", "--config", tiny_cfg, "--count", "50",
                 "--train", "nc=2,3", "--test", "nc=2,3", "--out", out]) == 0
    lines = open(out).read().splitlines()
    assert lines[0] == "axis,train_value,test_value,metric,value"
    assert len(lines) == 5  # 2x2 grid
    cells = {tuple(line.split(",")[:3]) for line in lines[1:]}
    assert ("nc", "2", "3") in cells and ("nc", "3", "2") in cells


def test_export_lut(tiny_cfg, tmp_path):
    cfg = tmp_path / "one.cfg"
    cfg.write_text(TINY.replace("elements_h = 2", "elements_h = 1"))
    data = _gen(str(cfg), tmp_path)
    ckpt = str(tmp_path / "s.csfw")
    assert main(["train", "--config", str(cfg), "--data", data, "--out", ckpt]) == 0
    out = str(tmp_path / "t.csfl")
    assert main(["export-lut", "--config", str(cfg), "--ckpt", ckpt, "--out", out]) == 0
    n_bits, phases = lutmod.read_lut(out)
    assert n_bits == 4 and phases.shape == (16, 4)
    from csifb.nncore import phase_to_unit
    beams = phase_to_unit(phases)
    assert np.max(np.abs(np.abs(beams) - 1.0)) <= 1e-6


def test_export_lut_rejects_oversized_table(tmp_path):
    cfg = tmp_path / "wide.cfg"
    cfg.write_text("nt = 32\nmodel = csifbnet-s\nelements_h = 6\nbits = 4\n"
                   "batch_size = 10\nepochs = 1\nsnr_db = 10\nseed = 1\n")
    data = str(tmp_path / "d.csfb")
    assert main(["gen-data", "--config", str(cfg), "--count", "50", "--out", data]) == 0
    ckpt = str(tmp_path / "s.csfw")
    assert main(["train", "--config", str(cfg), "--data", data, "--out", ckpt]) == 0
    rc = main(["export-lut", "--config", str(cfg), "--ckpt", ckpt,
               "--out", str(tmp_path / "t.csfl")])
    assert rc == 2  # 24 bits exceed the 20-bit cap


def test_complexity_table(tiny_cfg, tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("nt = 32\nbeta = 4\nelements_h = 16\nelements_g = 16\n")
    out = str(tmp_path / "cx.csv")
    assert main(["complexity", "--config", str(cfg), "--out", out]) == 0
    lines = open(out).read().splitlines()
    assert lines[0] == "model,params,flops,closed_form_params,closed_form_flops"
    rows = {line.split(",")[0]: line.split(",") for line in lines[1:]}
    assert rows["csifbnet-s"][1] == rows["csifbnet-s"][3] == "21872"
    assert int(rows["csifbnet-m"][1]) < int(rows["baseline-m"][1])


def test_complexity_rejects_zero_antennas(tmp_path):
    cfg = tmp_path / "z.cfg"
    cfg.write_text("nt = 0\nbeta = 4\n")
    assert main(["complexity", "--config", str(cfg)]) != 0


def test_module_entrypoint_runs():
    proc = subprocess.run([sys.executable, "-m", "csifb", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "gen-data" in proc.stdout

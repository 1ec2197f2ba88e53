"""Subprocess worker for acceptance-suite training tasks.

Usage: python acceptance_runner.py TASK_JSON RESULT_JSON

One process per task keeps desk-scale runs independent and lets the suite
schedule two at once; the thread pins below must happen before numpy loads.
"""

import json
import os
import sys

os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")

import numpy as np  # noqa: E402

from csifb import chanmodel as cm  # noqa: E402
from csifb import models as md  # noqa: E402
from csifb import nncore as nn  # noqa: E402
from csifb import trainharness as th  # noqa: E402
from csifb.classicbf import RateParams  # noqa: E402
from csifb.cli import _init_rng  # noqa: E402


def _build(task, rng):
    kind = task["kind"]
    n_t = task["nt"]
    bits = task.get("bits", 4)
    elements = task["elements"]
    if kind == "csifbnet-s":
        return md.CsiFBnetS(n_t, elements[0], bits=bits, rng=rng)
    if kind == "csifbnet-m":
        return md.CsiFBnetM(n_t, elements[0], elements[1], bits=bits, rng=rng)
    if kind == "baseline-ae":
        return md.BaselineAE(n_t, elements[0], bits=bits, rng=rng)
    if kind == "baseline-bf":
        ae_h = ae_g = None
        if task.get("ae_ckpt"):
            _, layers = nn.load_checkpoint(task["ae_ckpt"])
            ae_h = md.BaselineAE.from_layers(layers, bits=bits)
            ae_g = ae_h
            if task.get("ae_ckpt_g"):
                _, layers_g = nn.load_checkpoint(task["ae_ckpt_g"])
                ae_g = md.BaselineAE.from_layers(layers_g, bits=bits)
        return md.BaselineBF(n_t, paired=task["paired"], rng=rng, ae_h=ae_h, ae_g=ae_g,
                             train_on_perfect=task.get("perfect_csi", False))
    raise ValueError(f"unknown kind {kind!r}")


def _rho(snr_db):
    return 10.0 ** (snr_db / 10.0)


def main(task_path, result_path):
    with open(task_path) as f:
        task = json.load(f)
    dataset = cm.read_dataset(task["dataset"])
    model = _build(task, _init_rng(task["seed"]))
    cfg = th.TrainConfig(
        loss=model.loss_kind,
        epochs=task.get("epochs", 200),
        batch_size=task.get("batch_size", 500),
        seed=task["seed"],
        alpha=task.get("alpha", 0.0),
        rho=_rho(task["snr_db"]) if task.get("snr_db") is not None else None,
    )
    result = th.train(model, dataset, cfg)

    evals = {}
    for spec in task.get("evals", []):
        ds = cm.read_dataset(spec["dataset"]) if spec.get("dataset") else dataset
        rate = None
        if spec["metric"] != "nmse_db":
            rate = RateParams(rho=_rho(spec["snr_db"]), alpha=spec.get("alpha", 0.0),
                              n_t=task["nt"])
        evals[spec["name"]] = th.evaluate(model, ds, split=spec.get("split", "test"),
                                          metric=spec["metric"], rate=rate)

    if task.get("save_ckpt"):
        model.save(task["save_ckpt"])

    out = {
        "evals": evals,
        "aborted": result.aborted,
        "best_epoch": result.best_epoch,
        "best_val": result.best_val_loss,
        "first_val": result.trace[0].val_loss if result.trace else None,
        "final_val": result.trace[-1].val_loss if result.trace else None,
        "halvings": result.lr_halvings,
        "epochs_run": len(result.trace),
    }
    with open(result_path, "w") as f:
        json.dump(out, f)
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1], sys.argv[2]))

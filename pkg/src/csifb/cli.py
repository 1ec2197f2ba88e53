"""csifb command line: data generation, training, evaluation, sweeps, LUT export.

Exit codes: 0 success, 1 usage/config error, 2 runtime failure. Every command
is deterministic given identical inputs and --seed; CSV columns are fixed and
never reorder.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import chanmodel as cm
from . import lut as lutmod
from . import models as md
from . import nncore as nn
from . import trainharness as th
from .classicbf import RateParams, conj_phase_bf, multicell_bf_oracle, spectral_efficiency
from .config import ConfigError, ExperimentConfig

# SeedSequence spawn key for model initialization (3 is the trainer shuffle)
_STREAM_INIT = 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _init_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(entropy=seed, spawn_key=(_STREAM_INIT,))))


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, header, rows):
    text = ",".join(header) + "\n"
    for row in rows:
        text += ",".join(_fmt(v) for v in row) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)


# ---------------------------------------------------------------- model glue

def build_model(cfg: ExperimentConfig, paired: bool, seed: int,
                ae_h=None, ae_g=None, perfect_csi=False):
    rng = _init_rng(seed)
    kind = cfg.model
    if kind == "csifbnet-s":
        return md.CsiFBnetS(cfg.nt, cfg.single_elements(), bits=cfg.bits, rng=rng,
                            leaky_slope=cfg.leaky_slope, loss_variant=cfg.loss_variant)
    if kind == "csifbnet-m":
        e_h, e_g = cfg.pair_elements()
        return md.CsiFBnetM(cfg.nt, e_h, e_g, bits=cfg.bits, rng=rng,
                            leaky_slope=cfg.leaky_slope)
    if kind == "baseline-ae":
        return md.BaselineAE(cfg.nt, cfg.single_elements(), bits=cfg.bits, rng=rng,
                             leaky_slope=cfg.leaky_slope)
    if kind == "baseline-bf":
        return md.BaselineBF(cfg.nt, paired=paired, rng=rng, leaky_slope=cfg.leaky_slope,
                             ae_h=ae_h, ae_g=ae_g, train_on_perfect=perfect_csi,
                             loss_variant=cfg.loss_variant)
    raise ConfigError("config key 'model' is required "
                      "(csifbnet-s | csifbnet-m | baseline-ae | baseline-bf)")


def load_model(cfg: ExperimentConfig, path: str, ae_h=None, ae_g=None):
    tag, layers = nn.load_checkpoint(path)
    if tag == nn.MODEL_TAGS["csifbnet-s"]:
        return md.CsiFBnetS.from_layers(layers, bits=cfg.bits, leaky_slope=cfg.leaky_slope,
                                        loss_variant=cfg.loss_variant)
    if tag == nn.MODEL_TAGS["csifbnet-m"]:
        return md.CsiFBnetM.from_layers(layers, bits=cfg.bits, leaky_slope=cfg.leaky_slope)
    if tag == nn.MODEL_TAGS["baseline-ae"]:
        return md.BaselineAE.from_layers(layers, bits=cfg.bits, leaky_slope=cfg.leaky_slope)
    if tag == nn.MODEL_TAGS["baseline-bf"]:
        n_t = layers[-1].out_dim
        paired = layers[0].in_dim == 4 * n_t
        return md.BaselineBF.from_layers(layers, n_t=n_t, paired=paired,
                                         ae_h=ae_h, ae_g=ae_g,
                                         leaky_slope=cfg.leaky_slope,
                                         loss_variant=cfg.loss_variant)
    raise ValueError(f"unknown model tag {tag} in {path}")


def _load_ae(cfg, path):
    model = load_model(cfg, path)
    if not isinstance(model, md.BaselineAE):
        raise ValueError(f"{path} is not a baseline-ae checkpoint")
    return model


def _default_metric(model) -> str:
    if isinstance(model, md.BaselineAE):
        return "nmse_db"
    if isinstance(model, md.CsiFBnetM):
        return "mean_rate"
    if isinstance(model, md.BaselineBF) and model.paired:
        return "mean_rate"
    return "mean_se"


def _rate(cfg: ExperimentConfig, alpha=None, snr_db=None) -> RateParams:
    cfg.require("nt", "snr_db" if snr_db is None else "nt")
    rho = cfg.rho if snr_db is None else 10.0 ** (snr_db / 10.0)
    return RateParams(rho=rho, alpha=cfg.alpha if alpha is None else alpha, n_t=cfg.nt)


# ---------------------------------------------------------------- commands

def cmd_gen_data(args) -> int:
    cfg = ExperimentConfig.from_file(args.config).require("nt")
    seed = cfg.seed if args.seed is None else args.seed
    channel = cfg.channel_config(seed=seed)
    cm.generate_dataset(channel, args.count, paired=args.paired, out_path=args.out)
    print(f"wrote {args.count} {'paired ' if args.paired else ''}samples to {args.out}")
    return 0


def _train_once(cfg, dataset, seed, ae_h=None, ae_g=None, perfect_csi=False,
                alpha=None, rho=None, loss=None):
    model = build_model(cfg, dataset.paired, seed, ae_h=ae_h, ae_g=ae_g,
                        perfect_csi=perfect_csi)
    train_cfg = cfg.train_config(loss=loss or model.loss_kind, seed=seed,
                                 alpha=alpha, rho=rho)
    result = th.train(model, dataset, train_cfg)
    return model, result


def cmd_train(args) -> int:
    cfg = ExperimentConfig.from_file(args.config).require("nt", "model")
    dataset = cm.read_dataset(args.data)
    if dataset.n_t != cfg.nt:
        raise ValueError(f"dataset n_t={dataset.n_t} does not match config nt={cfg.nt}")
    if cfg.model == "csifbnet-m" and not dataset.paired:
        raise ValueError("csifbnet-m requires a paired dataset")
    ae_h = ae_g = None
    if cfg.model == "baseline-bf" and not args.perfect_csi:
        if args.ae_ckpt is None:
            raise ValueError("baseline-bf needs --ae-ckpt (or --perfect-csi)")
        ae_h = _load_ae(cfg, args.ae_ckpt)
        if dataset.paired:
            ae_g = _load_ae(cfg, args.ae_ckpt_g) if args.ae_ckpt_g else ae_h
    seed = cfg.seed if args.seed is None else args.seed
    model, result = _train_once(cfg, dataset, seed, ae_h=ae_h, ae_g=ae_g,
                                perfect_csi=args.perfect_csi)
    if result.aborted:
        model.save(args.out)
        if args.trace:
            th.write_trace_csv(args.trace, result.trace)
        raise RuntimeError("training aborted on non-finite loss; "
                           "best checkpoint so far was written")
    model.save(args.out)
    if args.trace:
        th.write_trace_csv(args.trace, result.trace)
    print(f"best val loss {result.best_val_loss!r} at epoch {result.best_epoch}; "
          f"checkpoint {args.out}")
    return 0


def cmd_eval(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    dataset = cm.read_dataset(args.data)
    ae_h = _load_ae(cfg, args.ae_ckpt) if args.ae_ckpt else None
    ae_g = _load_ae(cfg, args.ae_ckpt_g) if args.ae_ckpt_g else ae_h
    model = load_model(cfg, args.ckpt, ae_h=ae_h, ae_g=ae_g)
    metric = args.metric or _default_metric(model)
    rate = None
    if metric in ("mean_se", "mean_rate"):
        rate = _rate(cfg, alpha=args.alpha, snr_db=args.snr_db)
    value = th.evaluate(model, dataset, split=args.split, metric=metric, rate=rate)
    write_csv(args.out, ["metric", "split", "value"], [[metric, args.split, value]])
    return 0


SWEEP_HEADER = ["n_bits", "method", "mean_metric", "status", "reason"]


def run_sweep_bits(cfg: ExperimentConfig, dataset, bit_list, seed: int):
    """One trained model per (method, bit count) plus the perfect-CSI bound."""
    rows = []
    test_idx = dataset.splits()[2]
    H = dataset.h[test_idx].astype(np.complex128)
    if dataset.paired:
        rate = _rate(cfg)
        G = dataset.g[test_idx].astype(np.complex128)
        ub = float(np.mean([
            np.log2(1.0 + multicell_bf_oracle(H[i], G[i], rate, restarts=4,
                                              seed=seed + i).objective)
            for i in range(len(H))]))
        rows.append(["perfect", "upper_bound", ub, "ok", ""])
    else:
        rate = _rate(cfg)
        ub = float(np.mean(spectral_efficiency(H, conj_phase_bf(H), rate)))
        rows.append(["perfect", "upper_bound", ub, "ok", ""])

    for n_bits in bit_list:
        if n_bits % cfg.bits != 0:
            rows.append([n_bits, "all", "", "skipped",
                         f"{n_bits} bits not a multiple of B={cfg.bits}"])
            continue
        elements = n_bits // cfg.bits
        if dataset.paired:
            if elements % 2 != 0 or not (2 <= elements <= 4 * cfg.nt):
                rows.append([n_bits, "all", "", "skipped",
                             f"{elements} elements not an even feasible split"])
                continue
            e = elements // 2
            sub = ExperimentConfig(**{**cfg.__dict__, "model": "csifbnet-m",
                                      "elements_h": e, "elements_g": e, "beta": None})
            _, res = _train_once(sub, dataset, seed)
            rows.append([n_bits, "csifbnet-m",
                         th.evaluate(res.model, dataset, metric="mean_rate", rate=rate),
                         "ok", ""])
            ae_cfg = ExperimentConfig(**{**sub.__dict__, "model": "baseline-ae"})
            ae, _ = _train_once(ae_cfg, dataset, seed, loss="mse")
            bf_cfg = ExperimentConfig(**{**sub.__dict__, "model": "baseline-bf"})
            bf1, _ = _train_once(bf_cfg, dataset, seed, ae_h=ae, ae_g=ae, perfect_csi=True)
            rows.append([n_bits, "baseline-1",
                         th.evaluate(bf1, dataset, metric="mean_rate", rate=rate), "ok", ""])
            bf2, _ = _train_once(bf_cfg, dataset, seed, ae_h=ae, ae_g=ae, perfect_csi=False)
            rows.append([n_bits, "baseline-2",
                         th.evaluate(bf2, dataset, metric="mean_rate", rate=rate), "ok", ""])
        else:
            if not (1 <= elements <= 2 * cfg.nt):
                rows.append([n_bits, "all", "", "skipped",
                             f"{elements} elements outside [1, {2 * cfg.nt}]"])
                continue
            sub = ExperimentConfig(**{**cfg.__dict__, "model": "csifbnet-s",
                                      "elements_h": elements, "beta": None})
            _, res = _train_once(sub, dataset, seed)
            rows.append([n_bits, "csifbnet-s",
                         th.evaluate(res.model, dataset, metric="mean_se", rate=rate),
                         "ok", ""])
            ae_cfg = ExperimentConfig(**{**sub.__dict__, "model": "baseline-ae"})
            ae, _ = _train_once(ae_cfg, dataset, seed, loss="mse")
            rows.append([n_bits, "baseline-1",
                         th.evaluate(ae, dataset, metric="mean_se", rate=rate), "ok", ""])
    return rows


def cmd_sweep_bits(args) -> int:
    cfg = ExperimentConfig.from_file(args.config).require("nt", "snr_db")
    dataset = cm.read_dataset(args.data)
    bit_list = tuple(int(b) for b in args.bits.split(",")) if args.bits else cfg.bit_list
    if not bit_list:
        raise ConfigError("no bit list: pass --bits or set bit_list in the config")
    seed = cfg.seed if args.seed is None else args.seed
    rows = run_sweep_bits(cfg, dataset, bit_list, seed)
    write_csv(args.out, SWEEP_HEADER, rows)
    return 0


ALLOC_HEADER = ["elements_h", "elements_g", "n_bits", "mean_rate", "status", "reason"]


def run_sweep_alloc(cfg: ExperimentConfig, dataset, splits, seed: int):
    rows = []
    rate = _rate(cfg)
    for e_h, e_g in splits:
        if e_h < 1 or e_g < 1 or e_h > 2 * cfg.nt or e_g > 2 * cfg.nt:
            rows.append([e_h, e_g, "", "", "skipped",
                         f"element counts must lie in [1, {2 * cfg.nt}]"])
            continue
        sub = ExperimentConfig(**{**cfg.__dict__, "model": "csifbnet-m",
                                  "elements_h": e_h, "elements_g": e_g, "beta": None})
        _, res = _train_once(sub, dataset, seed)
        value = th.evaluate(res.model, dataset, metric="mean_rate", rate=rate)
        rows.append([e_h, e_g, (e_h + e_g) * cfg.bits, value, "ok", ""])
    return rows


def cmd_sweep_alloc(args) -> int:
    cfg = ExperimentConfig.from_file(args.config).require("nt", "snr_db")
    dataset = cm.read_dataset(args.data)
    if not dataset.paired:
        raise ValueError("sweep-alloc requires a paired dataset")
    if args.splits:
        splits = []
        for part in args.splits.split(","):
            left, sep, right = part.partition(":")
            if not sep:
                raise UsageError(f"--splits expects eh:eg pairs, got {part!r}")
            splits.append((int(left), int(right)))
    else:
        splits = cfg.alloc_list
    if not splits:
        raise ConfigError("no splits: pass --splits or set alloc_list in the config")
    seed = cfg.seed if args.seed is None else args.seed
    rows = run_sweep_alloc(cfg, dataset, splits, seed)
    write_csv(args.out, ALLOC_HEADER, rows)
    return 0


MISMATCH_AXES = ("nc", "snr_db", "alpha")
MISMATCH_HEADER = ["axis", "train_value", "test_value", "metric", "value"]


def _parse_variant(text: str):
    key, sep, values = text.partition("=")
    if not sep:
        raise UsageError(f"variant must look like key=v1,v2 — got {text!r}")
    key = key.strip()
    if key not in MISMATCH_AXES:
        raise UsageError(f"mismatch axis must be one of {MISMATCH_AXES}, got {key!r}")
    parse = int if key == "nc" else float
    return key, tuple(parse(v) for v in values.split(","))


def run_mismatch(cfg: ExperimentConfig, axis, train_values, test_values,
                 count: int, seed: int):
    """Train per train-value, evaluate on every test-value; one row per cell."""
    rows = []
    if axis == "nc":
        datasets = {v: cm.generate_dataset(cfg.channel_config(nc=v, seed=seed), count)
                    for v in sorted(set(train_values) | set(test_values))}
        rate = _rate(cfg)
        for tv in train_values:
            sub = ExperimentConfig(**{**cfg.__dict__, "model": "csifbnet-s", "nc": tv})
            _, res = _train_once(sub, datasets[tv], seed)
            for sv in test_values:
                value = th.evaluate(res.model, datasets[sv], metric="mean_se", rate=rate)
                rows.append([axis, tv, sv, "mean_se", value])
    else:
        dataset = cm.generate_dataset(cfg.channel_config(seed=seed), count, paired=True)
        for tv in train_values:
            sub = dict(cfg.__dict__)
            sub["model"] = "csifbnet-m"
            if axis == "snr_db":
                sub["snr_db"] = tv
            else:
                sub["alpha"] = tv
            sub_cfg = ExperimentConfig(**sub)
            _, res = _train_once(sub_cfg, dataset, seed)
            for sv in test_values:
                rate = _rate(sub_cfg, alpha=sv if axis == "alpha" else None,
                             snr_db=sv if axis == "snr_db" else None)
                value = th.evaluate(res.model, dataset, metric="mean_rate", rate=rate)
                rows.append([axis, tv, sv, "mean_rate", value])
    return rows


def cmd_mismatch(args) -> int:
    cfg = ExperimentConfig.from_file(args.config).require("nt", "snr_db")
    train_key, train_values = _parse_variant(args.train)
    test_key, test_values = _parse_variant(args.test)
    if train_key != test_key:
        raise UsageError(f"train and test variants must differ on exactly one axis; "
                         f"got {train_key!r} vs {test_key!r}")
    seed = cfg.seed if args.seed is None else args.seed
    rows = run_mismatch(cfg, train_key, train_values, test_values, args.count, seed)
    write_csv(args.out, MISMATCH_HEADER, rows)
    return 0


def cmd_export_lut(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    model = load_model(cfg, args.ckpt)
    if isinstance(model, md.CsiFBnetS):
        decoder, n_elements = model.decoder, model.n_code
    elif isinstance(model, md.CsiFBnetM):
        decoder, n_elements = model.decoder, model.n_code_h + model.n_code_g
    else:
        raise ValueError("LUT export needs a csifbnet-s or csifbnet-m checkpoint")
    quant = model.quant
    n_bits = quant.bits * n_elements
    if n_bits > lutmod.MAX_LUT_BITS:
        raise ValueError(f"{n_bits} feedback bits exceed the "
                         f"{lutmod.MAX_LUT_BITS}-bit table cap")
    phases = lutmod.build_lut(decoder, quant, n_elements)
    lutmod.write_lut(args.out, phases, n_bits)
    print(f"wrote {phases.shape[0]} beam rows ({n_bits} bits) to {args.out}")
    return 0


COMPLEXITY_HEADER = ["model", "params", "flops", "closed_form_params", "closed_form_flops"]


def run_complexity(cfg: ExperimentConfig):
    cfg.require("nt")
    n_t = cfg.nt
    rows = []
    e = cfg.single_elements() if (cfg.beta or cfg.elements_h) else None
    if e is not None:
        beta = md.beta_fraction(n_t, e)
        specs = md.encoder_specs(n_t, e) + md.beam_decoder_specs(n_t, e)
        p, f = nn.complexity_report(specs)
        cp, cf = md.closed_form_csifbnet_s(n_t, beta)
        rows.append(["csifbnet-s", p, f, cp, cf])
        specs = md.encoder_specs(n_t, e) + md.ae_decoder_specs(n_t, e)
        p, f = nn.complexity_report(specs)
        cp, cf = md.closed_form_baseline_ae(n_t, beta)
        rows.append(["baseline-ae", p, f, cp, cf])
    if cfg.elements_h is not None and cfg.elements_g is not None:
        e_h, e_g = cfg.pair_elements()
        b_h, b_g = md.beta_fraction(n_t, e_h), md.beta_fraction(n_t, e_g)
        specs = (md.encoder_specs(n_t, e_h) + md.encoder_specs(n_t, e_g)
                 + md.beam_decoder_specs(n_t, e_h + e_g))
        p, f = nn.complexity_report(specs)
        cp, cf = md.closed_form_csifbnet_m(n_t, b_h, b_g)
        rows.append(["csifbnet-m", p, f, cp, cf])
        p, f = nn.complexity_report(md.multicell_baseline_table_specs(n_t, e_h, e_g))
        cp, cf = md.closed_form_multicell_baseline(n_t, b_h, b_g)
        rows.append(["baseline-m", p, f, cp, cf])
    if not rows:
        raise ConfigError("complexity needs 'beta' or 'elements_h' (and optionally "
                          "'elements_g') in the config")
    return rows


def cmd_complexity(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    write_csv(args.out, COMPLEXITY_HEADER, run_complexity(cfg))
    return 0


# ---------------------------------------------------------------- wiring

def _build_parser() -> _Parser:
    parser = _Parser(prog="csifb", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(fn=fn)
        p.add_argument("--config", required=True, help="experiment config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        return p

    p = add("gen-data", cmd_gen_data, "generate a channel dataset")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--paired", action="store_true", help="emit (desired, interfering) pairs")

    p = add("train", cmd_train, "train the configured model")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--trace", default=None, help="loss trace CSV path")
    p.add_argument("--perfect-csi", action="store_true",
                   help="baseline-bf: train on perfect CSI inputs")
    p.add_argument("--ae-ckpt", default=None, help="frozen feedback AE checkpoint")
    p.add_argument("--ae-ckpt-g", default=None,
                   help="frozen AE for the interfering stream (defaults to --ae-ckpt)")

    p = add("eval", cmd_eval, "evaluate a checkpoint on one split")
    p.add_argument("--data", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--split", default="test", choices=["train", "val", "test"])
    p.add_argument("--metric", default=None, choices=["mean_se", "mean_rate", "nmse_db"])
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--snr-db", type=float, default=None, dest="snr_db")
    p.add_argument("--ae-ckpt", default=None)
    p.add_argument("--ae-ckpt-g", default=None)
    p.add_argument("--out", default=None, help="CSV path (stdout when omitted)")

    p = add("sweep-bits", cmd_sweep_bits, "train/evaluate across feedback-bit budgets")
    p.add_argument("--data", required=True)
    p.add_argument("--bits", default=None, help="comma list, e.g. 8,16,32")
    p.add_argument("--out", default=None)

    p = add("sweep-alloc", cmd_sweep_alloc, "train/evaluate bit allocations (paired)")
    p.add_argument("--data", required=True)
    p.add_argument("--splits", default=None, help="comma list of eh:eg element pairs")
    p.add_argument("--out", default=None)

    p = add("mismatch", cmd_mismatch, "train/test mismatch study on one axis")
    p.add_argument("--count", type=int, required=True, help="dataset sample count")
    p.add_argument("--train", required=True, help="axis=v1,v2 (axis: nc|snr_db|alpha)")
    p.add_argument("--test", required=True, help="axis=v1,v2 (same axis)")
    p.add_argument("--out", default=None)

    p = add("export-lut", cmd_export_lut, "precompute decoder outputs for all codewords")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--out", required=True)

    p = add("complexity", cmd_complexity, "parameter/FLOP table for the configured models")
    p.add_argument("--out", default=None)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"csifb: {exc}", file=sys.stderr)
        return 1
    try:
        return args.fn(args)
    except (ConfigError, UsageError) as exc:
        print(f"csifb: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure: bad paths, aborted runs, ...
        print(f"csifb: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

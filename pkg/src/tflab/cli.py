"""Command-line batch runner: ``tflab <subcommand> [--config FILE] [--key value ...]``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import EXPERIMENT_COMMANDS, KEYS, ExperimentConfig, load, override
from .czd import multifreq_czd, verify_czd
from .errors import ConfigurationError, TFLabError
from .normlab import (
    ExponentConfig,
    PoolSpec,
    default_builder,
    l2_power_iteration,
    lq_norm_search,
    multiplier_operator,
    scaling_experiment,
    weak11_search,
)
from .operators import delta_star, hilbert, hilbert_multiplier, maximal_average, psi_op
from .selftest import run_selftest
from .signal import Signal
from .variation import step_decomposition

COMMANDS = ("selftest", "scaling", "single-freq", "czd", "decompose", "norm")
LINEAR_OPERATORS = ("identity", "hilbert", "psi")
OPERATORS = LINEAR_OPERATORS + ("delta_star", "composition", "hilbert_average", "abs_hilbert_average")


def _emit(cfg: ExperimentConfig, name: str, text: str) -> None:
    if cfg.out == "-":
        sys.stdout.write(text)
        return
    try:
        path = Path(cfg.out)
        path.mkdir(parents=True, exist_ok=True)
        (path / name).write_text(text)
    except OSError as exc:
        raise ConfigurationError(f"cannot write {name} under {cfg.out}: {exc.strerror}", key="out") from None


def _require_seed(cfg: ExperimentConfig, command: str) -> int:
    if cfg.seed is None:
        raise ConfigurationError(f"{command} needs a seed", key="seed")
    return cfg.seed


def exponents(cfg: ExperimentConfig) -> ExponentConfig:
    return ExponentConfig(cfg.q, cfg.r, cfg.s, cfg.eps, cfg.mode)


def validate(cfg: ExperimentConfig, command: str) -> None:
    """Parse-time checks: exponent hypotheses and mandatory seed."""
    if command in EXPERIMENT_COMMANDS:
        _require_seed(cfg, command)
    if command == "scaling":
        exponents(cfg)
    if command == "norm":
        if cfg.operator not in OPERATORS:
            raise ConfigurationError(f"unknown operator {cfg.operator!r}; choose from {OPERATORS}", key="operator")
        if cfg.method not in ("l2", "lq", "weak"):
            raise ConfigurationError(f"unknown method {cfg.method!r}; choose l2, lq or weak", key="method")
        if cfg.method == "l2" and cfg.operator not in LINEAR_OPERATORS:
            raise ConfigurationError(f"method l2 needs a linear operator, got {cfg.operator!r}", key="operator")


# -- subcommands -------------------------------------------------------------


def cmd_selftest(cfg: ExperimentConfig) -> int:
    results = run_selftest(cfg.seed or 0)
    lines = [cfg.header(__version__)]
    lines += [f"{'PASS' if ok else 'FAIL'} {name}{': ' + why if why else ''}" for name, ok, why in results]
    _emit(cfg, "selftest.txt", "\n".join(lines) + "\n")
    return 0 if all(ok for _, ok, _ in results) else 1


def cmd_scaling(cfg: ExperimentConfig) -> int:
    table = scaling_experiment(exponents(cfg), cfg.Ns, cfg.trials, cfg.seed, cfg.n, M=cfg.M, k_range=cfg.k_range)
    _emit(cfg, "scaling.csv", table.to_csv(cfg.header(__version__)))
    return 0


def single_freq_rows(Ls, trials: int, seed: int, pool: PoolSpec | None = None) -> list[tuple]:
    """Weak-type ratio of the maximal average after H and after |H| for each grid size."""
    rows = []
    for L in Ls:
        n = 2**L
        a = weak11_search(lambda f: maximal_average(hilbert(f)), n, pool, trials, seed).value
        b = weak11_search(lambda f: maximal_average(np.abs(hilbert(f))), n, pool, trials, seed).value
        rows.append((L, a, b))
    return rows


def cmd_single_freq(cfg: ExperimentConfig) -> int:
    buf = io.StringIO()
    buf.write(cfg.header(__version__) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["log2n", "hilbert", "abs_hilbert"])
    for L, a, b in single_freq_rows(cfg.Ls, cfg.trials, cfg.seed):
        w.writerow([L, repr(a), repr(b)])
    _emit(cfg, "single_freq.csv", buf.getvalue())
    return 0


def _read_signal(path: str) -> Signal:
    if not path:
        raise ConfigurationError("an input signal file is required", key="input")
    try:
        return Signal.read(path)
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc.strerror}", key="input") from None


def cmd_czd(cfg: ExperimentConfig) -> int:
    f = _read_signal(cfg.input)
    if cfg.lam is None:
        raise ConfigurationError("czd needs lam", key="lam")
    d = multifreq_czd(f, cfg.lam, cfg.freqs or (0,))
    report = verify_czd(d)
    body = json.loads(d.to_json("czd_pieces.csv"))
    doc = {"header": cfg.header(__version__), **body, "report": report}
    _emit(cfg, "czd.json", json.dumps(doc, indent=1) + "\n")
    if cfg.out != "-":
        _emit(cfg, "czd_pieces.csv", cfg.header(__version__) + "\n" + d.pieces_csv())
    return 0


def read_symbol(path: str) -> tuple[int, np.ndarray]:
    """Read a symbol CSV with columns bin, re, im on consecutive bins."""
    if not path:
        raise ConfigurationError("an input symbol file is required", key="input")
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc.strerror}", key="input") from None
    rows = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.DictReader(rows)
    if reader.fieldnames is None or not {"bin", "re", "im"} <= set(reader.fieldnames):
        raise ConfigurationError("symbol CSV needs columns bin, re, im", key="input")
    entries = sorted((int(r["bin"]), complex(float(r["re"]), float(r["im"]))) for r in reader)
    if not entries:
        raise ConfigurationError("symbol CSV is empty", key="input")
    bins = [b for b, _ in entries]
    if bins != list(range(bins[0], bins[0] + len(bins))):
        raise ConfigurationError("symbol bins must be consecutive", key="input")
    return bins[0], np.array([v for _, v in entries])


def cmd_decompose(cfg: ExperimentConfig) -> int:
    lo, psi = read_symbol(cfg.input)
    d = step_decomposition(psi, cfg.r, cfg.Jmax, lo)
    doc = {
        "header": cfg.header(__version__),
        "r": cfg.r,
        "norm": d.norm,
        "clamp_slack": d.clamp_slack,
        "levels": json.loads(d.to_json()),
    }
    _emit(cfg, "steps.json", json.dumps(doc, indent=1) + "\n")
    return 0


def norm_operator(cfg: ExperimentConfig, rng):
    n = cfg.n
    if cfg.operator == "identity":
        return (lambda f: np.asarray(f, dtype=complex)), np.ones(n), ()
    if cfg.operator == "hilbert":
        return hilbert, hilbert_multiplier(n), ()
    if cfg.operator == "hilbert_average":
        return (lambda f: maximal_average(hilbert(f))), None, ()
    if cfg.operator == "abs_hilbert_average":
        return (lambda f: maximal_average(np.abs(hilbert(f)))), None, ()
    conf = default_builder(n, cfg.N, rng, cfg.M)
    if cfg.operator == "psi":
        return (lambda f: psi_op(f, conf.family)), conf.family.multiplier(), conf.hints
    if cfg.operator == "delta_star":
        return (lambda f: delta_star(f, conf.xi, conf.bumps, cfg.k_range)), None, conf.hints
    return (lambda f: delta_star(psi_op(f, conf.family), conf.xi, conf.bumps, cfg.k_range)), None, conf.hints


def cmd_norm(cfg: ExperimentConfig) -> int:
    rng = np.random.default_rng([cfg.seed, 0])
    op, mult, hints = norm_operator(cfg, rng)
    if cfg.method == "l2":
        est = l2_power_iteration(multiplier_operator(mult), cfg.n, seed=cfg.seed)
    elif cfg.method == "lq":
        est = lq_norm_search(op, cfg.q, cfg.n, PoolSpec(hints=hints), cfg.trials, cfg.seed)
    else:
        est = weak11_search(op, cfg.n, None, cfg.trials, cfg.seed)
    buf = io.StringIO()
    buf.write(cfg.header(__version__) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["operator", "method", "value", "trials", "seed", "converged"])
    w.writerow([cfg.operator, est.method, repr(est.value), est.trials, est.seed, est.converged])
    _emit(cfg, "norm.csv", buf.getvalue())
    return 0


HANDLERS = {
    "selftest": cmd_selftest,
    "scaling": cmd_scaling,
    "single-freq": cmd_single_freq,
    "czd": cmd_czd,
    "decompose": cmd_decompose,
    "norm": cmd_norm,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        flag = re.search(r"--([\w-]+)", message)
        raise ConfigurationError(message, key=flag.group(1) if flag else None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tflab", description="Time-frequency operator experiments.")
    parser.add_argument("--version", action="version", version=f"tflab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value configuration file")
        for key in KEYS:
            p.add_argument(f"--{key}", dest=key, default=None, metavar="VALUE")
    return parser


def resolve(argv) -> tuple[str, ExperimentConfig]:
    args = build_parser().parse_args(argv)
    cfg = load(args.config) if args.config else ExperimentConfig()
    cfg = override(cfg, {k: getattr(args, k) for k in KEYS})
    validate(cfg, args.command)
    return args.command, cfg


def run(argv=None) -> int:
    try:
        command, cfg = resolve(sys.argv[1:] if argv is None else argv)
        return HANDLERS[command](cfg)
    except TFLabError as exc:
        key = getattr(exc, "key", None)
        print(f"tflab: error{f' [{key}]' if key else ''}: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

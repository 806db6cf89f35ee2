"""Command-line front end.

Data goes to standard output (or ``--output``), progress and diagnostics to
standard error. Exit status: 0 success, 2 usage, 3 I/O error, 4 domination
failure, 5 insufficient data, 6 any other input error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import __version__
from .errors import DominationError, InsufficientDataError, NoPairError, NsrpsError
from .estimators import cross_entropy_via_nsrps, entropy_via_nsrps, kl_via_nsrps
from .seqcore import (
    Alphabet,
    SymbolSequence,
    byte_label,
    infer_alphabet,
    read_alphabet,
    sequence_from_bytes,
    sequence_from_tokens,
    write_alphabet,
    write_sequence,
)
from .sources import (
    analytic_cross_entropy_rate,
    analytic_entropy_rate,
    analytic_kl_rate,
    generate,
    model_from_spec,
    write_model,
)
from .stats import ZeroPolicy
from .substitution import FixedSchedule, most_frequent, run_nsrps, run_paired_nsrps

log = logging.getLogger("nsrps")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DOMINATION = 4
EXIT_INSUFFICIENT = 5
EXIT_INPUT = 6


@dataclass
class ExperimentConfig:
    command: str
    kind: Optional[str] = None
    inputs: list[str] = field(default_factory=list)
    models: list[str] = field(default_factory=list)
    n_steps: int = 20
    strategy: str = "most-frequent"
    driver: str = "nu"
    policy: str = "epsilon"
    seeds: list[int] = field(default_factory=lambda: [0])
    length: int = 1_000_000
    fmt: str = "tokens"
    analytic: Optional[list[str]] = None
    bits: bool = False
    output: Optional[str] = None
    alphabet: Optional[str] = None

    def __post_init__(self):
        if self.n_steps < 0:
            raise ValueError("--n-steps must be non-negative")
        if self.driver not in ("mu", "nu"):
            raise ValueError("--driver must be mu or nu")
        ZeroPolicy.parse(self.policy)


def _parse_seeds(text: str) -> list[int]:
    """``7``, ``1,2,5`` or ``1..4`` (inclusive)."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError("no seeds given")
    return out


def _strategy(spec: str):
    if spec == "most-frequent":
        return most_frequent
    if spec.startswith("fixed:"):
        return FixedSchedule.from_file(spec[len("fixed:"):])
    raise NsrpsError(f"unknown strategy {spec!r}")


@contextmanager
def _output(path: Optional[str]):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8") as fh:
            yield fh


def _fixed_alphabet(cfg: ExperimentConfig) -> Optional[Alphabet]:
    if cfg.alphabet:
        return read_alphabet(cfg.alphabet)
    if cfg.analytic:
        model = model_from_spec(cfg.analytic[0])
        if cfg.fmt == "bytes":
            return Alphabet.base(byte_label(i) for i in range(model.alphabet_size))
        return model.alphabet
    return None


def _load_inputs(cfg: ExperimentConfig) -> list[SymbolSequence]:
    """Read the input files over one shared alphabet."""
    fixed = _fixed_alphabet(cfg)
    if cfg.fmt == "bytes":
        raw = [Path(p).read_bytes() for p in cfg.inputs]
        if fixed is None:
            fixed = sequence_from_bytes(b"".join(raw)).alphabet
        return [sequence_from_bytes(r, fixed) for r in raw]
    tokens = [Path(p).read_text(encoding="utf-8").split() for p in cfg.inputs]
    if fixed is None:
        fixed = infer_alphabet(*tokens)
    return [sequence_from_tokens(t, fixed) for t in tokens]


def _samples(cfg: ExperimentConfig, seed: int) -> list[SymbolSequence]:
    models = [model_from_spec(s) for s in cfg.models]
    return [generate(model, cfg.length, [seed, i]) for i, model in enumerate(models)]


def _analytic_value(cfg: ExperimentConfig) -> Optional[float]:
    specs = cfg.analytic
    if specs is None:
        return None
    if not specs:
        specs = cfg.models
    if not specs:
        raise NsrpsError("--analytic needs model specs (or --model)")
    mu = model_from_spec(specs[0])
    if cfg.kind == "entropy":
        return analytic_entropy_rate(mu)
    if len(specs) < 2:
        raise NsrpsError(f"--analytic needs two models for {cfg.kind}")
    nu = model_from_spec(specs[1])
    if cfg.kind == "cross":
        return analytic_cross_entropy_rate(mu, nu)
    return analytic_kl_rate(mu, nu)


def _run_estimate(cfg: ExperimentConfig, seqs: list[SymbolSequence]):
    strategy = _strategy(cfg.strategy)
    if cfg.kind == "entropy":
        return entropy_via_nsrps(seqs[0], cfg.n_steps, strategy)
    if len(seqs) < 2:
        raise NsrpsError(f"{cfg.kind} needs two sequences")
    fn = cross_entropy_via_nsrps if cfg.kind == "cross" else kl_via_nsrps
    return fn(seqs[0], seqs[1], cfg.n_steps, cfg.driver, cfg.policy, strategy)


def _estimate_trial(cfg: ExperimentConfig, seed: Optional[int]) -> str:
    seqs = _samples(cfg, seed) if cfg.models else _load_inputs(cfg)
    t0 = time.perf_counter()
    series = _run_estimate(cfg, seqs)
    log.info("seed %s: %d steps in %.2fs", seed, len(series) - 1, time.perf_counter() - t0)
    return series.to_tsv(bits=cfg.bits, analytic=_analytic_value(cfg), seed=seed)


def cmd_estimate(cfg: ExperimentConfig) -> int:
    if cfg.models and len(cfg.seeds) > 1:
        with ProcessPoolExecutor() as pool:
            blocks = list(pool.map(_estimate_trial, [cfg] * len(cfg.seeds), cfg.seeds))
    else:
        seed = cfg.seeds[0] if cfg.models else None
        blocks = [_estimate_trial(cfg, seed)]
    with _output(cfg.output) as out:
        for i, block in enumerate(blocks):
            # one header for the whole sweep; each trial written in one piece
            out.write(block if i == 0 else block.split("\n", 1)[1])
            out.flush()
    return EXIT_OK


def cmd_zbar(cfg: ExperimentConfig) -> int:
    seeds = cfg.seeds if cfg.models else [None]
    with _output(cfg.output) as out:
        header = ("seed\t" if cfg.models and len(seeds) > 1 else "") + "N\tzbar_mu\tzbar_nu\n"
        out.write(header)
        for seed in seeds:
            seqs = _samples(cfg, seed) if cfg.models else _load_inputs(cfg)
            if len(seqs) < 2:
                raise NsrpsError("zbar needs two sequences")
            tr_mu, tr_nu = run_paired_nsrps(seqs[0], seqs[1], cfg.n_steps, cfg.driver, _strategy(cfg.strategy))
            tag = f"{seed}\t" if header.startswith("seed") else ""
            rows = [f"{tag}0\t1\t1\n"]
            for i, (zm, zn) in enumerate(zip(tr_mu.zbar, tr_nu.zbar), start=1):
                rows.append(f"{tag}{i}\t{zm:.10g}\t{zn:.10g}\n")
            out.write("".join(rows))
    return EXIT_OK


def cmd_nsrps(cfg: ExperimentConfig, sequence_out: Optional[str], alphabet_out: Optional[str]) -> int:
    seq = _load_inputs(cfg)[0]
    trace = run_nsrps(seq, cfg.n_steps, _strategy(cfg.strategy))
    if trace.stopped_early:
        log.warning("stopped after %d steps: %s", len(trace), trace.stop_reason)
    with _output(cfg.output) as out:
        trace.to_tsv(out)
    if sequence_out:
        write_sequence(trace.final_sequence, sequence_out, "tokens")
    if alphabet_out:
        write_alphabet(trace.final_alphabet, alphabet_out)
    return EXIT_OK


def cmd_generate(cfg: ExperimentConfig, model_out: Optional[str]) -> int:
    model = model_from_spec(cfg.models[0])
    seq = generate(model, cfg.length, cfg.seeds[0])
    if cfg.fmt == "bytes":
        # byte files carry the symbol id as the byte value
        seq = SymbolSequence(seq.symbols, Alphabet.base(byte_label(i) for i in range(model.alphabet_size)))
    rate = analytic_entropy_rate(model)
    unit = "bits" if cfg.bits else "nats"
    if cfg.bits:
        rate /= math.log(2)
    if cfg.output and cfg.output != "-":
        write_sequence(seq, cfg.output, cfg.fmt)
        print(f"entropy_rate_{unit}\t{rate:.10g}")
    else:
        if cfg.fmt == "bytes":
            sys.stdout.buffer.write(seq.symbols.astype("uint8").tobytes())
        else:
            sys.stdout.write(" ".join(seq.labels()) + ("\n" if len(seq) else ""))
        print(f"entropy_rate_{unit}\t{rate:.10g}", file=sys.stderr)
    if model_out:
        write_model(model, model_out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nsrps", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", dest="fmt", choices=["tokens", "bytes"], default="tokens")
    common.add_argument("--output", "-o")
    common.add_argument("--bits", action="store_true", help="report rates in bits instead of nats")

    runs = argparse.ArgumentParser(add_help=False)
    runs.add_argument("--input", help="sequence file (mu)")
    runs.add_argument("--input2", help="second sequence file (nu)")
    runs.add_argument("--model", help="generate mu from a model spec instead of reading --input")
    runs.add_argument("--model2", help="generate nu from a model spec")
    runs.add_argument("--length", type=int, default=1_000_000)
    runs.add_argument("--seed", "--seeds", dest="seeds", type=_parse_seeds, default=[0],
                      help="seed, list '1,2,3' or range '1..8'")
    runs.add_argument("--n-steps", "-N", type=int, default=20)
    runs.add_argument("--strategy", default="most-frequent", help="most-frequent or fixed:FILE")
    runs.add_argument("--driver", choices=["nu", "mu"], default="nu")
    runs.add_argument("--alphabet", help="alphabet sidecar file (one label per line)")

    g = sub.add_parser("generate", parents=[common], help="sample a sequence from a model")
    g.add_argument("--model", required=True, help="bernoulli:P0, flip:Q, markov5:SEED, markov:K:SEED or a model file")
    g.add_argument("--length", type=int, default=1_000_000)
    g.add_argument("--seed", dest="seeds", type=_parse_seeds, default=[0])
    g.add_argument("--save-model", help="also write the model file")

    e = sub.add_parser("estimate", parents=[common, runs], help="entropy, cross entropy or KL series")
    e.add_argument("kind", choices=["entropy", "cross", "kl"])
    e.add_argument("--policy", default="epsilon", help="strict, epsilon[(c)] or infinity")
    e.add_argument("--analytic", nargs="*", metavar="MODEL",
                   help="append analytic reference values (defaults to --model/--model2)")

    sub.add_parser("zbar", parents=[common, runs], help="cumulative contraction of both sequences")

    n = sub.add_parser("nsrps", parents=[common, runs], help="dump a substitution trace")
    n.add_argument("--sequence-out", help="write the transformed sequence here")
    n.add_argument("--alphabet-out", help="write the final alphabet here")
    return parser


def _config(args) -> ExperimentConfig:
    inputs = [p for p in (getattr(args, "input", None), getattr(args, "input2", None)) if p]
    models = [m for m in (getattr(args, "model", None), getattr(args, "model2", None)) if m]
    return ExperimentConfig(
        command=args.command,
        kind=getattr(args, "kind", None),
        inputs=inputs,
        models=models,
        n_steps=getattr(args, "n_steps", 20),
        strategy=getattr(args, "strategy", "most-frequent"),
        driver=getattr(args, "driver", "nu"),
        policy=getattr(args, "policy", "epsilon"),
        seeds=args.seeds,
        length=args.length,
        fmt=args.fmt,
        analytic=getattr(args, "analytic", None),
        bits=args.bits,
        output=args.output,
        alphabet=getattr(args, "alphabet", None),
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = _config(args)
        if cfg.command == "generate":
            if cfg.length < 0:
                parser.error("--length must be non-negative")
            return cmd_generate(cfg, args.save_model)
        if not cfg.inputs and not cfg.models:
            parser.error("give --input (and --input2) or --model (and --model2)")
        if cfg.inputs and cfg.models:
            parser.error("--input and --model are mutually exclusive")
        if cfg.models and cfg.length < 2:
            parser.error("--length must be at least 2")
        if cfg.command == "estimate":
            return cmd_estimate(cfg)
        if cfg.command == "zbar":
            return cmd_zbar(cfg)
        return cmd_nsrps(cfg, args.sequence_out, args.alphabet_out)
    except DominationError as exc:
        log.error("domination failure: %s", exc)
        return EXIT_DOMINATION
    except (InsufficientDataError, NoPairError) as exc:
        log.error("insufficient data: %s", exc)
        return EXIT_INSUFFICIENT
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO
    except (NsrpsError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``legalkb {build,synth,eval,sim}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from . import io
from .evaluation import evaluate
from .io import InputError
from .model import EntityError, Role, keep_first_pairs, validate_raw_entity
from .pipeline import SIM_MODES, build_kb, role_contributions
from .similarity import jaccard_index, normalize_text, sequence_matcher_ratio, value_sim
from .synth import NoiseConfig, gen_corpus, gen_ground_truth, parse_sizes

log = logging.getLogger("legalkb")

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # type: ignore[override]
        raise InputError("UsageError", message)


def _probability(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"probability out of range: {text}")
    return value


def _preference(text: str) -> str:
    if text != "median":
        float(text)
    return text


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="legalkb", description="Build a legal-entity knowledge base from noisy extractions.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("build", help="cluster raw entities into a knowledge base")
    b.add_argument("input", help="ingestion JSONL file")
    b.add_argument("--config")
    b.add_argument("--output", "-o", help="KB JSON path (default: stdout)")
    b.add_argument("--seed", type=int)
    b.add_argument("--min-cluster-size", type=int)
    b.add_argument("--damping", type=float)
    b.add_argument("--preference", type=_preference, help="'median' or a number")
    b.add_argument("--max-iter", type=int)
    b.add_argument("--sim-mode", choices=SIM_MODES)

    s = sub.add_parser("synth", help="generate a synthetic corpus with ground truth")
    s.add_argument("--n", type=int, default=20, help="number of truth entities")
    s.add_argument("--sizes", default="uniform:4..20", help="uniform:A..B, fixed:K or k1,k2,...")
    s.add_argument("--seed", type=int)
    s.add_argument("--config", help="config file; only the noise section and pipeline.seed are used")
    s.add_argument("--output", "-o", required=True, help="output directory")
    for name in ("p-char", "p-drop", "p-variant", "p-wrong"):
        s.add_argument(f"--{name}", type=_probability)

    e = sub.add_parser("eval", help="score a KB against ground truth")
    e.add_argument("kb")
    e.add_argument("truth")
    e.add_argument("--output", "-o", help="report JSON path")

    m = sub.add_parser("sim", help="show similarity scores for two values or two entity files")
    m.add_argument("values", nargs="*", metavar="VALUE")
    m.add_argument("--role", help="role of the two values")
    m.add_argument("--entities", nargs=2, metavar="FILE", help="two files holding one ingestion record each")
    m.add_argument("--config")
    m.add_argument("--sim-mode", choices=SIM_MODES)
    return parser


def _fmt(x: float) -> str:
    return format(x, ".17g")


def cmd_build(args: argparse.Namespace) -> int:
    cfg = io.load_config(args.config).pipeline
    cfg = io.override_pipeline(
        cfg,
        seed=args.seed,
        min_cluster_size=args.min_cluster_size,
        damping=args.damping,
        preference=args.preference,
        max_iter=args.max_iter,
        sim_mode=args.sim_mode,
    )
    entities = io.read_entities(args.input)
    kb = build_kb(entities, cfg)
    text = io.dumps(kb.to_json())
    if args.output:
        io.write_text(args.output, text)
    else:
        sys.stdout.write(text)
    log.info("built %d entities from %d records", len(kb), len(entities))
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    if args.n < 1:
        raise InputError("InvalidFlag", "--n must be >= 1")
    cli_cfg = io.load_config(args.config)
    seed = args.seed if args.seed is not None else cli_cfg.pipeline.seed
    base = cli_cfg.noise
    noise = NoiseConfig(
        p_char=base.p_char if args.p_char is None else args.p_char,
        p_drop=base.p_drop if args.p_drop is None else args.p_drop,
        p_variant=base.p_variant if args.p_variant is None else args.p_variant,
        p_wrong=base.p_wrong if args.p_wrong is None else args.p_wrong,
        typo_ops=base.typo_ops,
    )
    try:
        sizes = parse_sizes(args.sizes, args.n, seed)
    except ValueError as exc:
        raise InputError("InvalidFlag", f"--sizes: {exc}") from None

    truth = gen_ground_truth(args.n, seed)
    truth.config = {"generator": {"n": args.n, "seed": seed, "sizes": args.sizes, "noise": noise.to_json()}}
    observations, provenance = gen_corpus(truth, sizes, noise, seed)
    out = Path(args.output)
    io.write_entities(out / "corpus.jsonl", observations)
    io.write_kb(out / "truth.json", truth)
    io.write_provenance(out / "provenance.jsonl", provenance)
    log.info("wrote %d observations of %d entities to %s", len(observations), args.n, out)
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    for path in (args.kb, args.truth):
        if not Path(path).is_file():
            raise InputError("MissingFile", f"file not found: {path}")
    report = evaluate(io.read_kb(args.kb), io.read_kb(args.truth))
    if args.output:
        io.write_text(args.output, io.dumps(report.to_json()))
    sys.stdout.write(report.table())
    return EXIT_OK


def _read_single_entity(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except FileNotFoundError:
        raise InputError("MissingFile", f"file not found: {path}") from None
    lines = [line for line in text.splitlines() if line.strip()]
    try:
        record = json.loads(text if len(lines) != 1 else lines[0], object_pairs_hook=keep_first_pairs)
        return validate_raw_entity(record)
    except json.JSONDecodeError as exc:
        raise InputError("MalformedJSON", f"{path}: {exc.msg}") from None
    except EntityError as exc:
        raise InputError(type(exc).__name__, f"{path}: {exc}") from None


def cmd_sim(args: argparse.Namespace) -> int:
    out = sys.stdout
    if args.entities:
        cfg = io.load_config(args.config).pipeline
        sim_mode = args.sim_mode or cfg.sim_mode
        g1, g2 = (_read_single_entity(p) for p in args.entities)
        contributions = role_contributions(g1, g2, cfg.weights, sim_mode)
        for role, value in contributions.items():
            out.write(f"{role.value}\t{_fmt(value_sim(g1.fields[role], g2.fields[role], role))}\t{_fmt(value)}\n")
        out.write(f"legal_entity_sim\t{_fmt(sum(contributions.values()))}\n")
        return EXIT_OK

    if len(args.values) != 2 or args.role is None:
        raise InputError("UsageError", "sim needs two values and --role, or --entities FILE FILE")
    try:
        role = Role(args.role)
    except ValueError:
        raise InputError("UnknownRole", f"unknown role {args.role!r}") from None
    n1, n2 = (normalize_text(v, role) for v in args.values)
    out.write(f"sequence_matcher\t{_fmt(sequence_matcher_ratio(n1.text, n2.text))}\n")
    out.write(f"jaccard\t{_fmt(jaccard_index(n1.tokens, n2.tokens))}\n")
    out.write(f"basic_entity_sim\t{_fmt(value_sim(*args.values, role))}\n")
    return EXIT_OK


COMMANDS = {"build": cmd_build, "synth": cmd_synth, "eval": cmd_eval, "sim": cmd_sim}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(json.dumps(exc.to_json(), ensure_ascii=False), file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        print(json.dumps({"error": "InternalError", "message": f"{type(exc).__name__}: {exc}"}), file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())

"""``voiceind`` command line.

Every subcommand is a pure function of its input files, flags and seed:
re-running it reproduces its outputs byte for byte, whatever ``--threads``
is. The exception is ``bench`` (and the timing columns of ``experiment``),
which report wall-clock measurements.

Failures print a single ``voiceind: error: <Kind>: <message>`` line on
stderr and exit with status 1 (2 for usage errors).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from contextlib import contextmanager
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .audit import (
    bayes_bound_check,
    bench_perturbation,
    format_bench_table,
    reidentification_attack,
    run_experiment_grid,
    write_experiment_csv,
)
from .embedding import (
    DEFAULT_DIM,
    iter_voiceprints,
    load_content,
    make_utterances,
    read_database,
    write_content,
    write_voiceprints,
)
from .errors import VoiceIndError
from .mechanism import build_distribution, check_epsilon, check_seed, default_seed, make_rng, sample_index
from .metric import angular_distance, distance_matrix
from .population import DEFAULT_CONCENTRATION, DEFAULT_SPEAKERS, generate_population, speaker_of
from .release import ReleaseModel, build_release_model, release_feature_level, release_model_level
from .audit.bounds import verify_voice_ind

PROG = "voiceind"
SOURCE_DATE_ENV = "SOURCE_DATE_EPOCH"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _g12(x) -> str:
    return f"{float(x):.12g}"


def _int_list(text: str) -> list:
    return [int(t) for t in text.split(",") if t.strip()]


def _float_list(text: str) -> list:
    return [float(t) for t in text.split(",") if t.strip()]


@contextmanager
def _output(path: Optional[str]):
    """Yield a text stream on ``path``, or on stdout for ``None`` / ``-``."""
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _seed(args) -> int:
    return check_seed(args.seed) if args.seed is not None else default_seed()


# -- subcommands -------------------------------------------------------------


def cmd_distance(args) -> None:
    db = read_database(args.db, args.dim)
    if args.matrix:
        dm = distance_matrix(db, args.threads)
        with _output(args.out) as out:
            writer = csv.writer(out, lineterminator="\n")
            writer.writerow(["id", *db.ids])
            for rid, row in zip(db.ids, dm):
                writer.writerow([rid, *(_g12(v) for v in row)])
        return
    if not args.ids:
        raise UsageError(f"{PROG} distance: give --ids A B or --matrix")
    a, b = (db.get(i) for i in args.ids)
    with _output(args.out) as out:
        out.write(f"{a.id} {b.id} {_g12(angular_distance(a, b))}\n")


def _read_single_vector(path: str, dim: int):
    with open(path, encoding="utf-8") as fh:
        for _, vp in iter_voiceprints(fh, dim, name=path):
            return vp
    raise VoiceIndError(f"{path}: no voiceprint record found")


def _write_distribution(dist, path: str) -> None:
    with _output(path) as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["candidate_id", "distance", "probability"])
        for cid, d, p in zip(dist.candidate_ids, dist.center_distance, dist.probabilities):
            writer.writerow([cid, _g12(d), _g12(p)])


def cmd_perturb(args) -> None:
    db = read_database(args.db, args.dim)
    x0 = db.get(args.id) if args.id is not None else _read_single_vector(args.vector, db.dim)
    dist = build_distribution(x0, db, args.epsilon)
    k = sample_index(dist, make_rng(_seed(args)))
    sys.stdout.write(f"{dist.candidate_ids[k]} {_g12(dist.probabilities[k])}\n")
    if args.dump:
        _write_distribution(dist, args.dump)


def _load_utterances(path: Optional[str], fallback_db, content_path: Optional[str], dim: int):
    if path is None:
        records = list(fallback_db)
    else:
        records = read_database(path, dim).records
    contents = None
    if content_path:
        with open(content_path, encoding="utf-8") as fh:
            contents = load_content(fh, content_path)
    return make_utterances(records, contents)


def _write_release(released, args) -> None:
    with _output(args.out) as out:
        write_voiceprints([r.as_voiceprint() for r in released], out)
    if args.provenance:
        with _output(args.provenance) as out:
            writer = csv.writer(out, lineterminator="\n")
            writer.writerow(["utterance_id", "candidate_id", "probability"])
            for r in released:
                writer.writerow([r.id, r.source_candidate_id, _g12(r.probability)])
    if args.content_out:
        with _output(args.content_out) as out:
            write_content(((r.id, r.content) for r in released), out)


def cmd_release(args) -> None:
    if args.strip_provenance and args.provenance:
        raise UsageError(f"{PROG} release: --provenance cannot be combined with --strip-provenance")
    rng = make_rng(_seed(args))
    if args.mode == "model":
        if not args.model:
            raise UsageError(f"{PROG} release: --mode model requires --model")
        model = ReleaseModel.load(args.model)
        if args.epsilon is not None and check_epsilon(args.epsilon) != model.epsilon:
            raise UsageError(
                f"{PROG} release: --epsilon {args.epsilon} disagrees with the model's epsilon {model.epsilon!r}"
            )
        utts = _load_utterances(args.utterances, model.db, args.content, model.db.dim)
        released = release_model_level(utts, model, rng=rng, sticky=args.sticky)
    else:
        if not args.db:
            raise UsageError(f"{PROG} release: --mode feature requires --db")
        if args.epsilon is None:
            raise UsageError(f"{PROG} release: --mode feature requires --epsilon")
        db = read_database(args.db, args.dim)
        utts = _load_utterances(args.utterances, db, args.content, db.dim)
        released = release_feature_level(
            utts, db, args.epsilon, rng=rng, sticky=args.sticky, threads=args.threads
        )
    _write_release(released, args)


def cmd_build_model(args) -> None:
    db = read_database(args.db, args.dim)
    built_at = float(os.environ.get(SOURCE_DATE_ENV, "0"))
    model = build_release_model(db, args.epsilon, verify=not args.no_verify, built_at=built_at, threads=args.threads)
    model.save(args.out)
    sys.stdout.write(f"wrote release model n={len(db)} dim={db.dim} epsilon={_g12(model.epsilon)} to {args.out}\n")


def _read_prior(path: str, db) -> np.ndarray:
    if path == "uniform":
        return np.full(len(db), 1.0 / len(db))
    weights = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].startswith("#") or row[0] == "id":
                continue
            if len(row) != 2:
                raise VoiceIndError(f"{path}:{lineno}: expected 'id,probability'")
            weights[row[0].strip()] = float(row[1])
    missing = [rid for rid in db.ids if rid not in weights]
    if missing or len(weights) != len(db):
        raise VoiceIndError(f"{path}: prior ids do not match the database (e.g. {missing[:3]})")
    return np.array([weights[rid] for rid in db.ids])


def cmd_audit(args) -> None:
    db = read_database(args.db, args.dim)
    report = verify_voice_ind(db, args.epsilon, args.tol, cap=args.cap, threads=args.threads)
    text = report.format_text()
    payload = {"likelihood": report.to_dict()}
    if args.prior:
        bayes = bayes_bound_check(_read_prior(args.prior, db), db, args.epsilon, args.tol, cap=args.cap, threads=args.threads)
        text += "\n" + bayes.format_text()
        payload["posterior"] = bayes.to_dict()
    sys.stdout.write(text + "\n")
    if args.json:
        with _output(args.json) as out:
            json.dump(payload, out, indent=2, sort_keys=True, default=float)
            out.write("\n")


def cmd_attack(args) -> None:
    original = read_database(args.db, args.dim)
    released = read_database(args.released, original.dim)
    key = speaker_of if args.speaker_key == "prefix" else None
    result = reidentification_attack(original, released, key)
    sys.stdout.write(result.format_text() + "\n")


def cmd_experiment(args) -> None:
    seed = _seed(args)
    if args.population:
        population = read_database(args.population, args.dim)
    else:
        population = generate_population(
            args.speakers, 1, args.dim or DEFAULT_DIM, args.concentration, seed
        )
    key = speaker_of if args.speaker_key == "prefix" else None
    rows = run_experiment_grid(
        population,
        args.n,
        args.epsilons,
        args.trials,
        seed,
        timing=not args.no_timing,
        threads=args.threads,
        speaker_of=key,
    )
    with _output(args.out) as out:
        write_experiment_csv(rows, out, timing=not args.no_timing)


def cmd_bench(args) -> None:
    rows = bench_perturbation(
        args.sizes,
        args.epsilon,
        _seed(args),
        dim=args.dim,
        model_cap=args.model_cap,
        repeats=args.repeats,
        threads=args.threads,
    )
    with _output(args.out) as out:
        out.write(format_bench_table(rows) + "\n")


def cmd_gen_population(args) -> None:
    db = generate_population(args.speakers, args.utterances, args.dim, args.concentration, _seed(args))
    with _output(args.out) as out:
        write_voiceprints(db.records, out)


# -- parser ------------------------------------------------------------------


def _common(dim_default=None) -> argparse.ArgumentParser:
    # A fresh parent per subcommand: argparse shares parent actions, so
    # per-subcommand defaults would otherwise leak between subcommands.
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="RNG seed (default: $VOICEIND_SEED or 20200)")
    common.add_argument("--threads", type=int, default=None, help="worker threads (default: CPU count)")
    dim_help = "embedding dimension" if dim_default else "expected embedding dimension (default: inferred)"
    common.add_argument("--dim", type=int, default=dim_default, help=dim_help)
    return common


def build_parser() -> argparse.ArgumentParser:

    parser = _Parser(prog=PROG, description="Voice-indistinguishability toolkit for speaker embeddings.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("distance", parents=[_common()], help="angular distance between records")
    p.add_argument("--db", required=True, help="embedding file")
    p.add_argument("--ids", nargs=2, metavar=("A", "B"), help="two record ids")
    p.add_argument("--matrix", action="store_true", help="dump the full distance matrix as CSV")
    p.add_argument("--out", help="output path (default: stdout)")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("perturb", parents=[_common()], help="perturb one voiceprint")
    p.add_argument("--db", required=True, help="candidate database")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--id", help="input record id in the database")
    src.add_argument("--vector", help="embedding file whose first record is the input")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--dump", help="write the full distribution as CSV")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("release", parents=[_common()], help="release a protected utterance set")
    p.add_argument("--mode", choices=("feature", "model"), default="feature")
    p.add_argument("--db", help="release database (feature mode)")
    p.add_argument("--model", help="release model file (model mode)")
    p.add_argument("--utterances", help="utterance embeddings (default: the database records)")
    p.add_argument("--content", help="content sidecar, '<id>\\t<base64>' per line")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--sticky", action="store_true", help="one draw per voiceprint id")
    p.add_argument("--strip-provenance", action="store_true", help="never emit candidate provenance")
    p.add_argument("--out", help="released embeddings (default: stdout)")
    p.add_argument("--provenance", help="CSV of utterance id, candidate id, probability")
    p.add_argument("--content-out", help="content sidecar for the released utterances")
    p.set_defaults(func=cmd_release)
    release_sub = p.add_subparsers(dest="release_action", parser_class=_Parser)
    b = release_sub.add_parser("build-model", parents=[_common()], help="precompute a release model")
    b.add_argument("--db", required=True)
    b.add_argument("--epsilon", type=float, required=True)
    b.add_argument("--out", required=True, help="model file to write")
    b.add_argument("--no-verify", action="store_true", help="skip the table self-check")
    b.set_defaults(func=cmd_build_model)

    p = sub.add_parser("audit", parents=[_common()], help="exhaustive bound audit")
    p.add_argument("--db", required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--cap", type=int, default=None, help="max records (default: $VOICEIND_AUDIT_CAP or 200)")
    p.add_argument("--prior", help="'uniform' or CSV 'id,probability' for the posterior check")
    p.add_argument("--json", help="also write the report as JSON")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("attack", parents=[_common()], help="nearest-neighbor re-identification")
    p.add_argument("--db", required=True, help="original database known to the attacker")
    p.add_argument("--released", required=True, help="released embeddings, ids are ground truth")
    p.add_argument("--speaker-key", choices=("id", "prefix"), default="id")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("experiment", parents=[_common()], help="privacy/utility grid")
    p.add_argument("--population", help="embedding file (default: synthetic population)")
    p.add_argument("--speakers", type=int, default=DEFAULT_SPEAKERS)
    p.add_argument("--concentration", type=float, default=DEFAULT_CONCENTRATION)
    p.add_argument("--n", type=_int_list, default=[10, 20, 40], help="comma-separated sizes")
    p.add_argument(
        "--epsilon", dest="epsilons", type=_float_list, default=[1, 10, 100, 1000, 10000], help="comma-separated budgets"
    )
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--speaker-key", choices=("id", "prefix"), default="id")
    p.add_argument("--no-timing", action="store_true", help="omit the wall-time columns")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("bench", parents=[_common(64)], help="online perturbation time")
    p.add_argument("--sizes", type=_int_list, default=[100, 1000, 10000])
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--model-cap", type=int, default=2000)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen-population", parents=[_common(DEFAULT_DIM)], help="synthetic speaker population")
    p.add_argument("--speakers", type=int, default=DEFAULT_SPEAKERS)
    p.add_argument("--utterances", type=int, default=1, help="utterances per speaker")
    p.add_argument("--concentration", type=float, default=DEFAULT_CONCENTRATION)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_population)
    return parser


def _one_line(text: str) -> str:
    return " ".join(str(text).split())


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "threads", None) is not None and args.threads < 1:
            raise UsageError(f"{PROG}: --threads must be >= 1")
        args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"{PROG}: error: UsageError: {_one_line(exc)}\n")
        return 2
    except (VoiceIndError, ValueError, OSError, AssertionError) as exc:
        sys.stderr.write(f"{PROG}: error: {type(exc).__name__}: {_one_line(exc)}\n")
        return 1
    return 0

"""Command-line interface: parse, corpus, validate, bench.

Every simulation flag can also be set through an environment variable named
ASMPARSE_<FLAG> (for example ASMPARSE_SEED=3 or ASMPARSE_LEX_BETA=0.3);
flags given on the command line win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .corpus import CorpusError, generate_corpus, load_vocabulary, read_corpus, write_corpus
from .engine import BrainConfig, BrainError
from .evaluation import (convergence_from_report, error_suite, evaluate, permutation_test)
from .grammar import ERROR, GrammarError, load_grammar, validate_grammar
from .parser import ParseError, UnknownWord, order_dependencies, parse_sentence, trace_json

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_EMPTY_PROJECT = 10
EXIT_NONSENSE = 11
EXIT_THRESHOLD = 12

ENV_PREFIX = "ASMPARSE_"
RUSSIAN_SENTENCE = "женщина дала мужчине сумку"

# flag name -> (type, BrainConfig field)
_CONFIG_FLAGS = {
    "n": (int, "n"),
    "k": (int, "k"),
    "p": (float, "p"),
    "beta": (float, "beta"),
    "lex_beta": (float, "lex_beta"),
    "max_exponent": (int, "max_exponent"),
    "rounds": (int, "rounds"),
    "seed": (int, "seed"),
}


class UsageError(Exception):
    pass


def _env(name, cast=str):
    raw = os.environ.get(ENV_PREFIX + name.upper())
    if raw is None or raw == "":
        return None
    try:
        return cast(raw)
    except ValueError:
        raise UsageError(f"{ENV_PREFIX}{name.upper()}: cannot read {raw!r}") from None


def _common(parser: argparse.ArgumentParser):
    g = parser.add_argument_group("simulation")
    g.add_argument("--grammar", help="grammar file, or a shipped name: english, russian")
    for flag, (cast, _) in _CONFIG_FLAGS.items():
        g.add_argument("--" + flag.replace("_", "-"), dest=flag, type=cast)
    parser.add_argument("--format", choices=("text", "json", "dot"))
    parser.add_argument("--trace", metavar="PATH", help="write the per-word parse trace as JSON")
    parser.add_argument("--threshold", type=float, metavar="RATE",
                        help="exact-match rate a corpus run must reach (default 1.0)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="asmparse", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse one sentence and print its dependencies")
    p.add_argument("sentence")
    _common(p)

    c = sub.add_parser("corpus", help="evaluate a corpus against gold dependencies")
    c.add_argument("path", nargs="?", help="corpus file (gold triples read from PATH.gold)")
    c.add_argument("--builtin", choices=("english", "russian"),
                   help="generated template corpus (english) or the shipped Russian sentence")
    c.add_argument("--permutations", action="store_true",
                   help="parse every word order of each sentence and compare the trees")
    c.add_argument("--errors", action="store_true", help="run the shipped illegal-sentence list")
    c.add_argument("--samples", type=int, default=10, help="sentences per template (default 10)")
    c.add_argument("--corpus-seed", type=int, default=0, help="seed for sampling the corpus")
    c.add_argument("--seeds", help="comma-separated brain seeds (default: --seed)")
    c.add_argument("--write-corpus", metavar="PATH", help="also save the generated corpus and gold sidecar")
    c.add_argument("--report", metavar="PATH",
                   help="write the report here (.json or tab-separated text) with figures alongside")
    _common(c)

    v = sub.add_parser("validate", help="check a grammar file")
    v.add_argument("path")
    _common(v)

    b = sub.add_parser("bench", help="convergence statistics of project* over a corpus")
    b.add_argument("path", nargs="?", help="corpus file; default is the generated English corpus")
    b.add_argument("--samples", type=int, default=10)
    b.add_argument("--corpus-seed", type=int, default=0)
    b.add_argument("--report", metavar="PATH", help="write statistics here with a histogram figure alongside")
    _common(b)
    return ap


def run_config(args) -> BrainConfig:
    """BrainConfig from flags over environment over defaults; validated before any simulation."""
    kwargs = {}
    for flag, (cast, field_name) in _CONFIG_FLAGS.items():
        value = getattr(args, flag, None)
        if value is None:
            value = _env(flag, cast)
        if value is not None:
            kwargs[field_name] = value
    try:
        return BrainConfig(**kwargs)
    except BrainError as e:
        raise UsageError(str(e)) from None


def _setting(args, name, default):
    value = getattr(args, name, None)
    if value is None:
        value = _env(name, type(default) if default is not None else str)
    return default if value is None else value


def _grammar(args, default="english"):
    source = _setting(args, "grammar", default)
    try:
        return load_grammar(source)
    except OSError as e:
        raise UsageError(f"cannot read grammar {source}: {e.strerror}") from None
    except GrammarError as e:
        raise UsageError(f"grammar {source}: {e}") from None


def _emit(text: str):
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


# ------------------------------------------------------------------ parse

def to_dot(words, root, deps) -> str:
    lines = ["digraph parse {", "  rankdir=TB;", '  node [shape=box, style=rounded];']
    names = {}
    for w in [root] + [d.dependent for d in deps]:
        if w not in names:
            names[w] = f"w{len(names)}"
            shape = ", penwidth=2" if w == root else ""
            lines.append(f'  {names[w]} [label={json.dumps(w, ensure_ascii=False)}{shape}];')
    for d in deps:
        lines.append(f'  {names[d.head]} -> {names[d.dependent]} [label="{d.label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def cmd_parse(args) -> int:
    sentence = args.sentence.strip()
    if not sentence:
        raise UsageError("empty sentence")
    config = run_config(args)
    grammar = _grammar(args)
    fmt = _setting(args, "format", "text")
    trace_path = _setting(args, "trace", None)
    words = sentence.split()
    try:
        state, read = parse_sentence(grammar, words, config, trace=trace_path is not None)
    except UnknownWord as e:
        raise UsageError(str(e)) from None
    except ParseError as e:
        if trace_path is not None and e.state is not None:
            Path(trace_path).write_text(trace_json(e.state) + "\n", encoding="utf-8")
        if fmt == "json":
            _emit(json.dumps({"sentence": sentence, "error": e.to_dict()}, ensure_ascii=False))
        else:
            print(f"{e.kind}: {e}", file=sys.stderr)
        return EXIT_EMPTY_PROJECT if e.kind == "EmptyProject" else EXIT_NONSENSE
    if trace_path is not None:
        Path(trace_path).write_text(trace_json(state) + "\n", encoding="utf-8")
    deps = order_dependencies(read.dependencies, words)
    if fmt == "json":
        _emit(json.dumps({"sentence": sentence, "root": read.root,
                          "dependencies": [d.to_dict() for d in deps]}, ensure_ascii=False))
    elif fmt == "dot":
        _emit(to_dot(words, read.root, deps))
    else:
        _emit("\n".join(str(d) for d in deps) if deps else f"{read.root}")
    return EXIT_OK


# ----------------------------------------------------------------- corpus

def _write_report(path, payload_text: str, payload_json: dict):
    path = Path(path)
    if path.suffix == ".json":
        path.write_text(json.dumps(payload_json, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    else:
        path.write_text(payload_text, encoding="utf-8")
    return path


def _figure_stem(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem)


def _load_corpus_items(args, grammar):
    if args.path:
        try:
            return read_corpus(args.path, vocabulary=set(grammar.lexicon))
        except OSError as e:
            raise UsageError(f"cannot read corpus {args.path}: {e.strerror}") from None
        except (CorpusError, ValueError) as e:
            raise UsageError(str(e)) from None
    return generate_corpus(vocabulary=load_vocabulary(), samples_per_template=args.samples,
                           seed=args.corpus_seed)


def cmd_corpus(args) -> int:
    config = run_config(args)
    fmt = _setting(args, "format", "text")
    threshold = _setting(args, "threshold", 1.0)
    if args.builtin and args.path:
        raise UsageError("give either a corpus path or --builtin, not both")
    if not args.builtin and not args.path and not args.errors:
        raise UsageError("give a corpus path, --builtin or --errors")
    grammar = _grammar(args, args.builtin or "english")

    if args.errors:
        report = error_suite(grammar, config)
        _emit(json.dumps(report.to_dict(), ensure_ascii=False) if fmt == "json" else report.to_text())
        if args.report:
            _write_report(args.report, report.to_text(), report.to_dict())
        return EXIT_OK if report.all_passed else EXIT_THRESHOLD

    if args.permutations or args.builtin == "russian":
        if args.builtin == "russian":
            sentences = [RUSSIAN_SENTENCE]
        else:
            sentences = [it.sentence for it in _load_corpus_items(args, grammar)]
        reports = [permutation_test(grammar, s, config) for s in sentences]
        text = "".join(r.to_text() for r in reports)
        payload = {"sentences": [r.to_dict() for r in reports]}
        _emit(json.dumps(payload, ensure_ascii=False) if fmt == "json" else text)
        if args.report:
            _write_report(args.report, text, payload)
        return EXIT_OK if all(r.all_equal for r in reports) else EXIT_THRESHOLD

    items = _load_corpus_items(args, grammar)
    if args.write_corpus:
        write_corpus(items, args.write_corpus)
    if args.seeds:
        try:
            seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
        except ValueError:
            raise UsageError(f"--seeds: expected comma-separated integers, got {args.seeds!r}") from None
    else:
        seeds = [config.seed]
    report = evaluate(grammar, items, config, seeds)
    stats = convergence_from_report(report, config.rounds)
    payload = {**report.to_dict(), "convergence": stats.to_dict(), "threshold": threshold}
    _emit(json.dumps(payload, ensure_ascii=False) if fmt == "json" else report.to_text())
    if args.report:
        _write_report(args.report, report.to_text() + stats.to_text(), payload)
        from .plotting import write_figures
        write_figures(report, stats, _figure_stem(args.report))
    return EXIT_OK if report.exact_match_rate >= threshold else EXIT_THRESHOLD


# --------------------------------------------------------------- validate

def cmd_validate(args) -> int:
    path = Path(args.path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    from .grammar import loads_grammar
    try:
        grammar = loads_grammar(text)
    except GrammarError as e:
        print(f"error: {e}")
        return EXIT_FAIL
    diags = validate_grammar(grammar)
    for d in diags:
        print(str(d))
    if not diags:
        print(f"ok: {grammar.name}, {len(grammar.area_names)} areas, {len(grammar.fibers)} fibers, "
              f"{len(grammar.lexicon)} words")
    return EXIT_FAIL if any(d.level == ERROR for d in diags) else EXIT_OK


# ------------------------------------------------------------------ bench

def cmd_bench(args) -> int:
    config = run_config(args)
    grammar = _grammar(args)
    fmt = _setting(args, "format", "text")
    items = _load_corpus_items(args, grammar)
    report = evaluate(grammar, items, config)
    stats = convergence_from_report(report, config.rounds)
    _emit(json.dumps(stats.to_dict()) if fmt == "json" else stats.to_text())
    if args.report:
        _write_report(args.report, stats.to_text(), stats.to_dict())
        from .plotting import write_figures
        write_figures(None, stats, _figure_stem(args.report))
    return EXIT_OK


COMMANDS = {"parse": cmd_parse, "corpus": cmd_corpus, "validate": cmd_validate, "bench": cmd_bench}


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"asmparse: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

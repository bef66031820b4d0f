"""Batch evaluation: corpus scoring, permutation test, error suite, convergence statistics."""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from importlib import resources

from .corpus import CorpusItem
from .engine import BrainConfig
from .parser import ParseError, UnknownWord, order_dependencies, parse_sentence


@dataclass
class SentenceResult:
    sentence: str
    seed: int
    gold: frozenset
    predicted: frozenset | None
    template: int | None = None
    error: dict | None = None
    # first converged round of every project* call, None for calls that never converged
    rounds: list = field(default_factory=list)
    steps: int = 0

    @property
    def exact(self) -> bool:
        return self.error is None and self.predicted == self.gold

    @property
    def missing(self) -> list:
        return sorted(self.gold - (self.predicted or frozenset()))

    @property
    def extra(self) -> list:
        return sorted((self.predicted or frozenset()) - self.gold)

    @property
    def n_words(self) -> int:
        return len(self.sentence.split())

    def to_dict(self) -> dict:
        words = self.sentence.split()
        return {
            "sentence": self.sentence,
            "seed": self.seed,
            "template": self.template,
            "exact": self.exact,
            "predicted": None if self.predicted is None
            else [str(d) for d in order_dependencies(sorted(self.predicted), words)],
            "missing": [str(d) for d in self.missing],
            "extra": [str(d) for d in self.extra],
            "error": self.error,
            "rounds": self.rounds,
            "steps": self.steps,
        }


@dataclass
class EvalReport:
    results: list
    seeds: list

    @property
    def n(self) -> int:
        return len(self.results)

    @property
    def exact_match_rate(self) -> float:
        return sum(r.exact for r in self.results) / self.n if self.results else 1.0

    def rate_for_seed(self, seed: int) -> float:
        mine = [r for r in self.results if r.seed == seed]
        return sum(r.exact for r in mine) / len(mine) if mine else 1.0

    @property
    def per_seed_rates(self) -> dict:
        return {s: self.rate_for_seed(s) for s in self.seeds}

    @property
    def per_template_rates(self) -> dict:
        groups: dict = {}
        for r in self.results:
            if r.template is not None:
                groups.setdefault(r.template, []).append(r.exact)
        return {t: sum(v) / len(v) for t, v in sorted(groups.items())}

    @property
    def failures(self) -> list:
        return [r for r in self.results if not r.exact]

    @property
    def error_counts(self) -> dict:
        return dict(Counter(r.error["kind"] for r in self.results if r.error))

    def _converged_rounds(self):
        return [x for r in self.results for x in r.rounds if x is not None]

    @property
    def mean_rounds(self) -> float:
        vals = self._converged_rounds()
        return sum(vals) / len(vals) if vals else 0.0

    @property
    def max_rounds(self) -> int:
        vals = self._converged_rounds()
        return max(vals) if vals else 0

    @property
    def steps_per_word(self) -> float:
        words = sum(r.n_words for r in self.results if r.rounds)
        steps = sum(r.steps for r in self.results if r.rounds)
        return steps / words if words else 0.0

    def summary(self) -> dict:
        return {
            "sentences": self.n,
            "seeds": list(self.seeds),
            "exact_match_rate": self.exact_match_rate,
            "per_seed": {str(s): v for s, v in self.per_seed_rates.items()},
            "per_template": {str(t): v for t, v in self.per_template_rates.items()},
            "errors": self.error_counts,
            "mean_rounds_to_convergence": self.mean_rounds,
            "max_rounds_to_convergence": self.max_rounds,
            "steps_per_word": self.steps_per_word,
        }

    def to_dict(self) -> dict:
        return {"summary": self.summary(), "results": [r.to_dict() for r in self.results]}

    def to_text(self) -> str:
        s = self.summary()
        lines = [f"sentences\t{s['sentences']}",
                 f"exact_match_rate\t{s['exact_match_rate']:.4f}"]
        for seed, rate in s["per_seed"].items():
            lines.append(f"seed {seed}\t{rate:.4f}")
        for t, rate in s["per_template"].items():
            lines.append(f"template {t}\t{rate:.4f}")
        for kind, count in sorted(s["errors"].items()):
            lines.append(f"errors {kind}\t{count}")
        lines.append(f"mean_rounds_to_convergence\t{s['mean_rounds_to_convergence']:.2f}")
        lines.append(f"max_rounds_to_convergence\t{s['max_rounds_to_convergence']}")
        lines.append(f"steps_per_word\t{s['steps_per_word']:.2f}")
        for r in self.failures:
            why = r.error["message"] if r.error else (
                "missing " + ", ".join(map(str, r.missing)) + "; extra " + ", ".join(map(str, r.extra)))
            lines.append(f"FAIL seed {r.seed}\t{r.sentence}\t{why}")
        return "\n".join(lines) + "\n"


def _as_item(entry) -> CorpusItem:
    if isinstance(entry, CorpusItem):
        return entry
    sentence, gold = entry[0], entry[1]
    template = entry[2] if len(entry) > 2 else None
    return CorpusItem(sentence, frozenset(gold), template)


def run_sentence(grammar, item: CorpusItem, config: BrainConfig, topologies: dict | None = None) -> SentenceResult:
    """Parse one sentence on a fresh brain and score it against its gold set."""
    result = SentenceResult(item.sentence, config.seed, item.gold, None, item.template)
    state = None
    try:
        state, read = parse_sentence(grammar, item.sentence, config, topologies)
        result.predicted = read.dependency_set
    except ParseError as e:
        result.error = e.to_dict()
    except UnknownWord as e:
        result.error = {"kind": "UnknownWord", "message": str(e), "position": e.position,
                        "word": e.word, "area": None}
    # a parse that raised keeps no round counts
    if state is not None:
        result.rounds = [r.first_converged_round for r in state.reports]
        result.steps = sum(r.rounds_used for r in state.reports)
    return result


def evaluate(grammar, corpus, config: BrainConfig | None = None, seeds=None, progress=None) -> EvalReport:
    """Parse every sentence once per seed, each on a fresh brain, and compare with gold.

    Brains built for the same seed share their sampled graph; weights always
    start from scratch.
    """
    config = config or BrainConfig()
    seeds = [config.seed] if seeds is None else list(seeds)
    items = [_as_item(e) for e in corpus]
    results = []
    for seed in seeds:
        cfg = replace(config, seed=seed)
        topologies: dict = {}
        for item in items:
            results.append(run_sentence(grammar, item, cfg, topologies))
            if progress is not None:
                progress(results[-1])
    return EvalReport(results, seeds)


# ------------------------------------------------------------ permutations

@dataclass
class PermutationReport:
    sentence: str
    outcomes: list  # (permuted sentence, dependency set or error kind)

    @property
    def count(self) -> int:
        return len(self.outcomes)

    @property
    def distinct(self) -> list:
        out = []
        for _, o in self.outcomes:
            if o not in out:
                out.append(o)
        return out

    @property
    def all_equal(self) -> bool:
        return len(self.distinct) == 1 and isinstance(self.distinct[0], frozenset)

    def to_dict(self) -> dict:
        return {
            "sentence": self.sentence,
            "permutations": self.count,
            "distinct": len(self.distinct),
            "all_equal": self.all_equal,
            "outcomes": [{"sentence": s, "dependencies": sorted(map(str, o))} if isinstance(o, frozenset)
                         else {"sentence": s, "error": o} for s, o in self.outcomes],
        }

    def to_text(self) -> str:
        lines = [f"permutations\t{self.count}", f"distinct\t{len(self.distinct)}",
                 f"all_equal\t{self.all_equal}"]
        for s, o in self.outcomes:
            shown = "; ".join(sorted(map(str, o))) if isinstance(o, frozenset) else o
            lines.append(f"{s}\t{shown}")
        return "\n".join(lines) + "\n"


def permutation_test(grammar, sentence, config: BrainConfig | None = None) -> PermutationReport:
    """Parse every ordering of the words; a free-word-order grammar should give one tree."""
    config = config or BrainConfig()
    words = sentence.split() if isinstance(sentence, str) else list(sentence)
    topologies: dict = {}
    outcomes = []
    seen = set()
    for perm in itertools.permutations(words):
        if perm in seen:
            continue
        seen.add(perm)
        text = " ".join(perm)
        try:
            _, read = parse_sentence(grammar, text, config, topologies)
            outcomes.append((text, read.dependency_set))
        except ParseError as e:
            outcomes.append((text, e.kind))
    return PermutationReport(" ".join(words), outcomes)


# ------------------------------------------------------------- error suite

OK = "ok"
EXPECTATIONS = ("EmptyProject", "NonsenseAssembly", "ParseError", OK)


def load_error_list(path=None) -> list[tuple[str, str]]:
    """(expected outcome, sentence) pairs from 'expected<TAB>sentence' lines."""
    if path is None:
        text = resources.files("assembly_parser.data").joinpath("english_errors.txt").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    cases = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or parts[0] not in EXPECTATIONS:
            raise ValueError(f"error list line {lineno}: expected one of {', '.join(EXPECTATIONS)}, a tab, a sentence")
        cases.append((parts[0], parts[1].strip()))
    return cases


@dataclass
class ErrorCase:
    sentence: str
    expected: str
    observed: str
    message: str = ""

    @property
    def passed(self) -> bool:
        if self.expected == "ParseError":
            return self.observed in ("EmptyProject", "NonsenseAssembly")
        return self.observed == self.expected


@dataclass
class ErrorSuiteReport:
    cases: list

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.cases)

    def to_dict(self) -> dict:
        return {"all_passed": self.all_passed,
                "cases": [{"sentence": c.sentence, "expected": c.expected, "observed": c.observed,
                           "message": c.message, "passed": c.passed} for c in self.cases]}

    def to_text(self) -> str:
        lines = []
        for c in self.cases:
            mark = "PASS" if c.passed else "FAIL"
            lines.append(f"{mark}\t{c.expected}\t{c.observed}\t{c.sentence}")
        return "\n".join(lines) + "\n"


def error_suite(grammar, config: BrainConfig | None = None, cases=None) -> ErrorSuiteReport:
    config = config or BrainConfig()
    cases = load_error_list() if cases is None else cases
    topologies: dict = {}
    out = []
    for expected, sentence in cases:
        try:
            parse_sentence(grammar, sentence, config, topologies)
            out.append(ErrorCase(sentence, expected, OK))
        except ParseError as e:
            out.append(ErrorCase(sentence, expected, e.kind, str(e)))
    return ErrorSuiteReport(out)


# ------------------------------------------------------------- convergence

@dataclass
class ConvergenceStats:
    histogram: dict  # first converged round -> count
    unconverged: int
    rounds: int

    @property
    def total(self) -> int:
        return sum(self.histogram.values()) + self.unconverged

    @property
    def converged_fraction(self) -> float:
        return (self.total - self.unconverged) / self.total if self.total else 1.0

    def fraction_within(self, r: int) -> float:
        if not self.total:
            return 1.0
        return sum(c for k, c in self.histogram.items() if k <= r) / self.total

    @property
    def mean(self) -> float:
        n = sum(self.histogram.values())
        return sum(k * c for k, c in self.histogram.items()) / n if n else math.nan

    @property
    def max(self) -> int | None:
        return max(self.histogram) if self.histogram else None

    def to_dict(self) -> dict:
        return {
            "calls": self.total,
            "rounds": self.rounds,
            "converged_fraction": self.converged_fraction,
            "unconverged": self.unconverged,
            "mean_first_converged_round": self.mean,
            "max_first_converged_round": self.max,
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
        }

    def to_text(self) -> str:
        d = self.to_dict()
        lines = [f"calls\t{d['calls']}", f"converged_fraction\t{d['converged_fraction']:.4f}",
                 f"unconverged\t{d['unconverged']}", f"mean_first_converged_round\t{d['mean_first_converged_round']:.2f}",
                 f"max_first_converged_round\t{d['max_first_converged_round']}"]
        for k, v in d["histogram"].items():
            lines.append(f"round {k}\t{v}")
        return "\n".join(lines) + "\n"


def convergence_from_report(report: EvalReport, rounds: int) -> ConvergenceStats:
    hist: Counter = Counter()
    unconverged = 0
    for r in report.results:
        for x in r.rounds:
            if x is None:
                unconverged += 1
            else:
                hist[x] += 1
    return ConvergenceStats(dict(sorted(hist.items())), unconverged, rounds)


def convergence_stats(grammar, corpus, config: BrainConfig | None = None) -> ConvergenceStats:
    config = config or BrainConfig()
    return convergence_from_report(evaluate(grammar, corpus, config), config.rounds)

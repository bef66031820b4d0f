"""Incremental parsing over a Brain and readout of the dependency tree.

Each word activates its fixed assembly in LEX, runs its pre-commands, one
project*, then its post-commands.  The dependency tree is afterwards read
off the synaptic weights alone: starting from the root assembly, every
neighboring area is probed for a stable assembly, and each one found is
projected back into LEX to name the dependent word.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .engine import Brain, BrainConfig, BrainError, StabilityReport, cap_overlap
from .grammar import (ADVANCE, DISINHIBIT, INHIBIT, LEX, RESET, Command, Grammar, resolve_target)

EMPTY_PROJECT = "EmptyProject"
NONSENSE_ASSEMBLY = "NonsenseAssembly"


class ParseError(Exception):
    """Base class for the two syntactic errors the parser detects."""

    kind = "ParseError"

    def __init__(self, message: str, position: int | None = None, word: str | None = None,
                 area: str | None = None):
        super().__init__(message)
        self.state = None
        self.position = position
        self.word = word
        self.area = area

    def to_dict(self) -> dict:
        return {"kind": self.kind, "message": str(self), "position": self.position,
                "word": self.word, "area": self.area}


class EmptyProject(ParseError):
    """A word's assembly had no disinhibited area to project into."""

    kind = EMPTY_PROJECT


class NonsenseAssembly(ParseError):
    """A cap met during readout does not correspond to any word."""

    kind = NONSENSE_ASSEMBLY


class UnknownWord(ValueError):
    def __init__(self, word: str, position: int):
        super().__init__(f"unknown word {word!r} at position {position}")
        self.word = word
        self.position = position


@dataclass(frozen=True, order=True)
class Dependency:
    head: str
    label: str
    dependent: str

    def __str__(self):
        return f"{self.head} -{self.label}-> {self.dependent}"

    def to_dict(self) -> dict:
        return {"head": self.head, "label": self.label, "dependent": self.dependent}


@dataclass
class ParseState:
    brain: Brain
    grammar: Grammar
    words: list
    lex_word_of_cap: list
    root_area: str
    # stabilized assemblies per area, for test oracles only; readout never reads it
    formed: dict = field(default_factory=dict)
    reports: list = field(default_factory=list)
    trace: list | None = None
    chains: dict = field(default_factory=dict)


@dataclass
class Readout:
    root: str
    dependencies: list  # in discovery order

    @property
    def dependency_set(self) -> frozenset:
        return frozenset(self.dependencies)


def apply_commands(brain: Brain, commands) -> None:
    """Apply a set of (dis)inhibit commands; the outcome does not depend on their order."""
    commands = list(commands)
    seen = {}
    for c in commands:
        if c.verb not in (INHIBIT, DISINHIBIT):
            raise BrainError(f"not an inhibition command: {c}")
        key = (c.target, c.pop)
        if seen.get(key, c.verb) != c.verb:
            raise BrainError(f"conflicting commands on {c.target} population {c.pop}")
        seen[key] = c.verb
        brain._check_target(c.target)
    for c in commands:
        if c.verb == INHIBIT:
            brain.inhibit(c.target, c.pop)
        else:
            brain.disinhibit(c.target, c.pop)


def resolve_commands(grammar: Grammar, commands, chains: dict) -> tuple[list[Command], list[Command]]:
    """Split a command set into concrete inhibition commands and chain controls.

    Chain slots are substituted against the chain state as it was before the
    set runs; commands about a previous element that does not exist are dropped.
    """
    concrete, control = [], []
    for c in sorted(commands):
        if c.is_chain_control:
            control.append(c)
            continue
        target = resolve_target(grammar, c.target, chains)
        if target is None:
            continue
        concrete.append(Command(c.verb, grammar.canonical_target(target), c.pop))
    return concrete, control


def new_brain(grammar: Grammar, config: BrainConfig, topologies: dict | None = None) -> Brain:
    areas, fibers = grammar.brain_specs()
    return Brain(config, areas, fibers, topologies=topologies)


def tokenize(sentence) -> list[str]:
    if isinstance(sentence, str):
        return sentence.split()
    return list(sentence)


def parse(brain: Brain, grammar: Grammar, sentence, trace: bool = False) -> ParseState:
    """Run the word-by-word parse loop; raises EmptyProject when a word has nowhere to go."""
    words = tokenize(sentence)
    for i, w in enumerate(words, start=1):
        if w not in grammar.lexicon:
            raise UnknownWord(w, i)
    state = ParseState(brain, grammar, words, grammar.words, grammar.root,
                       trace=[] if trace else None, chains={c: 0 for c in grammar.chains})
    apply_commands(brain, grammar.initial)
    try:
        for pos, word in enumerate(words, start=1):
            parse_word(state, word, pos)
    except ParseError as e:
        e.state = state  # the words parsed so far, for traces
        raise
    return state


def parse_word(state: ParseState, word: str, position: int) -> StabilityReport:
    brain, grammar = state.brain, state.grammar
    action = grammar.action(word)
    brain.activate_assembly(brain.assembly(LEX, grammar.word_index(word)))
    pre, pre_control = resolve_commands(grammar, action.pre, state.chains)
    apply_commands(brain, pre)
    _run_chain_controls(state, pre_control, [])
    targets = brain.explicit_targets()
    if not targets:
        raise EmptyProject(f"empty-project at word {position} ({word!r})", position=position, word=word)
    rounds = [] if state.trace is not None else None
    report = brain.project_star(record=rounds)
    state.reports.append(report)
    for area in report.explicit_targets:
        state.formed.setdefault(area, []).append((position, word, brain.area(area).last_cap.copy()))
    post, post_control = resolve_commands(grammar, action.post, state.chains)
    apply_commands(brain, post)
    _run_chain_controls(state, post_control, report.explicit_targets)
    if state.trace is not None:
        state.trace.append({
            "position": position,
            "word": word,
            "pre": [str(c) for c in pre + pre_control],
            "rounds": rounds,
            "post": [str(c) for c in post + post_control],
            "targets": report.explicit_targets,
            "converged": report.converged,
            "first_converged_round": report.first_converged_round,
        })
    return report


def _run_chain_controls(state: ParseState, controls, targets):
    # an element joins a chain only if its slot area just received the word
    for c in controls:
        if c.verb == ADVANCE:
            slot = state.grammar.chain_slot(c.target, state.chains[c.target])
            if slot in targets:
                state.chains[c.target] += 1
    for c in controls:
        if c.verb == RESET:
            state.chains[c.target] = 0


def get_word(brain: Brain, lex_cap, words) -> str:
    """The unique word whose fixed assembly covers at least the stability threshold of the cap."""
    cap = np.asarray(lex_cap, dtype=np.int64)
    k = brain.config.k
    if not cap.size:
        raise NonsenseAssembly("empty cap in LEX", area=LEX)
    counts = np.bincount(cap // k, minlength=len(words))
    hits = np.flatnonzero(counts >= brain.config.stability_threshold)
    if hits.size != 1:
        raise NonsenseAssembly("cap in LEX does not match exactly one word", area=LEX)
    return words[int(hits[0])]


def word_of(brain: Brain, area: str, cap, words) -> str:
    lex = brain.fire_into(area, LEX, cap, rounds=1)[-1]
    return get_word(brain, lex, words)


def try_project(brain: Brain, cap, src: str, dst: str, words) -> tuple[np.ndarray, str] | None:
    """Fire ``cap`` from ``src`` into ``dst``; the result counts only if it is a stable, nameable assembly."""
    first, second = brain.fire_into(src, dst, cap, rounds=2)
    if cap_overlap(first, second) < brain.config.stability_threshold:
        return None
    try:
        return second, word_of(brain, dst, second, words)
    except NonsenseAssembly:
        return None


def readout(state: ParseState) -> Readout:
    """Recover the dependency tree from the weights, starting at the root area's assembly."""
    brain, grammar = state.brain, state.grammar
    words = state.lex_word_of_cap
    saved_plasticity = brain.plasticity
    brain.plasticity = False
    brain.disinhibit_all()
    try:
        root_cap = brain.area(state.root_area).last_cap.copy()
        if not root_cap.size:
            raise NonsenseAssembly(f"no assembly in root area {state.root_area}", area=state.root_area)
        try:
            root_word = word_of(brain, state.root_area, root_cap, words)
        except NonsenseAssembly:
            raise NonsenseAssembly(f"root assembly in {state.root_area} names no word",
                                   area=state.root_area) from None
        thr = brain.config.stability_threshold
        deps = []
        # work items: area, cap, word, fiber it was reached by, (head, label) it
        # hangs from, and the (area, cap) pairs on the path from the root.
        # Only ancestors block a revisit, so a word used twice (one shared
        # assembly) is still found under each of its heads.
        work = [(state.root_area, root_cap, root_word, None, None, ((state.root_area, root_cap),))]
        while work:
            area, cap, word, arrived, attach, path = work.pop(0)
            for nbr, fiber in grammar.readout_neighbors(area):
                if nbr == LEX or fiber == arrived:
                    continue
                found = try_project(brain, cap, area, nbr, words)
                if found is None:
                    continue
                y, dep_word = found
                if any(a == nbr and cap_overlap(y, old) >= thr for a, old in path):
                    continue
                if grammar.area_decl(nbr).inherit and attach is not None:
                    head, label = attach
                else:
                    head, label = word, nbr
                dep = Dependency(head, label, dep_word)
                if dep not in deps:
                    deps.append(dep)
                work.append((nbr, y, dep_word, fiber, (head, label), path + ((nbr, y),)))
        return Readout(root_word, deps)
    finally:
        brain.plasticity = saved_plasticity


def order_dependencies(deps, words) -> list[Dependency]:
    """Heads in discovery order, each head's dependents in sentence order."""
    heads = []
    for d in deps:
        if d.head not in heads:
            heads.append(d.head)

    def first_pos(w):
        return words.index(w) if w in words else len(words)

    out = []
    for h in heads:
        mine = [d for d in deps if d.head == h]
        out.extend(sorted(mine, key=lambda d: (first_pos(d.dependent), d.label)))
    return out


def parse_sentence(grammar: Grammar, sentence, config: BrainConfig | None = None,
                   topologies: dict | None = None, trace: bool = False) -> tuple[ParseState, Readout]:
    """Parse on a fresh brain and read the tree out."""
    config = config or BrainConfig()
    brain = new_brain(grammar, config, topologies)
    state = parse(brain, grammar, sentence, trace=trace)
    try:
        return state, readout(state)
    except ParseError as e:
        e.state = state
        raise


def trace_json(state: ParseState) -> str:
    return json.dumps({"words": state.words, "steps": state.trace or []}, ensure_ascii=False)

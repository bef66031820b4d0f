"""Grammar data model, grammar file loader/serializer and validator.

A grammar names the brain areas and fibers of the parser, the vocabulary held
as fixed assemblies in the lexicon area, and for every word an action: two
sets of inhibit/disinhibit commands run before and after the word's
project*.

Grammar files are YAML documents with the sections ``areas``, ``fibers``,
``chains``, ``pos_defaults``, ``lexicon``, ``initial``, ``root`` and the
optional ``readout`` (for each area, the areas its dependents live in;
without it readout tries every fiber).
Commands are written as strings::

    disinhibit LEX-VERB        # fiber, population 0
    inhibit ADV 1              # area, population 1
    disinhibit LEX-@adj        # '@adj' is the next slot of chain 'adj'
    disinhibit @adj^-@adj      # '@adj^' is the slot holding the previous element
    advance adj                # move chain 'adj' on if its slot just formed an assembly
    reset adj

Chains implement compound structures (adjective runs, stacked prepositional
phrases): the first element goes to the chain's head area and the following
ones alternate between two auxiliary areas, each linked to the previous one.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .engine import EXPLICIT, STANDARD, AreaSpec, FiberSpec, fiber_name

LEX = "LEX"
INHIBIT = "inhibit"
DISINHIBIT = "disinhibit"
ADVANCE = "advance"
RESET = "reset"
VERBS = (INHIBIT, DISINHIBIT, ADVANCE, RESET)

ERROR = "error"
WARNING = "warning"


class GrammarError(ValueError):
    """A grammar document that cannot be loaded."""


@dataclass(frozen=True, order=True)
class Command:
    verb: str
    target: str
    pop: int = 0

    @classmethod
    def parse(cls, text: str) -> "Command":
        parts = text.split()
        if len(parts) not in (2, 3) or parts[0] not in VERBS:
            raise GrammarError(f"malformed command {text!r}")
        pop = 0
        if len(parts) == 3:
            if parts[0] in (ADVANCE, RESET):
                raise GrammarError(f"chain command takes no population: {text!r}")
            try:
                pop = int(parts[2])
            except ValueError:
                raise GrammarError(f"population must be an integer in {text!r}") from None
        return cls(parts[0], parts[1], pop)

    def __str__(self):
        if self.verb in (ADVANCE, RESET) or self.pop == 0:
            return f"{self.verb} {self.target}"
        return f"{self.verb} {self.target} {self.pop}"

    @property
    def is_chain_control(self) -> bool:
        return self.verb in (ADVANCE, RESET)


@dataclass(frozen=True)
class Action:
    pre: frozenset = frozenset()
    post: frozenset = frozenset()

    @classmethod
    def from_lists(cls, pre=(), post=()) -> "Action":
        return cls(frozenset(Command.parse(c) for c in pre), frozenset(Command.parse(c) for c in post))

    def to_dict(self) -> dict:
        return {"pre": [str(c) for c in sorted(self.pre)], "post": [str(c) for c in sorted(self.post)]}


@dataclass(frozen=True)
class AreaDecl:
    name: str
    kind: str = STANDARD
    inherit: bool = False  # dependencies into this area attach to the parent's head


@dataclass(frozen=True)
class LexEntry:
    pos: str
    action: Action
    override: bool = False


@dataclass(frozen=True)
class Diagnostic:
    level: str
    message: str

    def __str__(self):
        return f"{self.level}: {self.message}"


@dataclass(eq=True)
class Grammar:
    name: str
    areas: tuple
    fibers: tuple
    pos_defaults: dict
    lexicon: dict
    initial: tuple
    root: str
    chains: dict = field(default_factory=dict)
    readout: dict | None = None

    # --------------------------------------------------------------- lookup

    @property
    def area_names(self) -> list[str]:
        return [a.name for a in self.areas]

    def area_decl(self, name: str) -> AreaDecl:
        for a in self.areas:
            if a.name == name:
                return a
        raise KeyError(name)

    @property
    def words(self) -> list[str]:
        return list(self.lexicon)

    def word_index(self, word: str) -> int:
        return self.words.index(word)

    def action(self, word: str) -> Action:
        return self.lexicon[word].action

    def pos(self, word: str) -> str:
        return self.lexicon[word].pos

    def fiber_target(self, a: str, b: str) -> str | None:
        """Canonical fiber name joining a and b, preferring a directed a>b fiber."""
        names = {f.name for f in self.fibers}
        for cand in (fiber_name(a, b, True), fiber_name(a, b), fiber_name(b, a)):
            if cand in names:
                return cand
        return None

    def canonical_target(self, target: str) -> str | None:
        """Area name or canonical fiber name for a command target; None if unknown."""
        if target in self.area_names:
            return target
        for sep in (">", "-"):
            if sep in target:
                a, b = target.split(sep, 1)
                if sep == ">":
                    name = fiber_name(a, b, True)
                    return name if name in {f.name for f in self.fibers} else None
                return self.fiber_target(a, b) if (a in self.area_names and b in self.area_names) else None
        return None

    def chain_slot(self, chain: str, count: int) -> str | None:
        """Area receiving element ``count`` (0-based) of a chain."""
        if count < 0:
            return None
        areas = self.chains[chain]
        if count == 0:
            return areas[0]
        return areas[1 + (count - 1) % (len(areas) - 1)]

    def brain_specs(self) -> tuple[list[AreaSpec], list[FiberSpec]]:
        areas = []
        for a in self.areas:
            if a.kind == EXPLICIT:
                areas.append(AreaSpec(a.name, EXPLICIT, len(self.lexicon)))
            else:
                areas.append(AreaSpec(a.name))
        return areas, list(self.fibers)

    def neighbors(self, area: str) -> list[tuple[str, str]]:
        """(neighbor, fiber) pairs that ``area`` can fire into, in declaration order."""
        out = []
        for f in self.fibers:
            if f.a == area:
                out.append((f.b, f.name))
            elif f.b == area and not f.directed:
                out.append((f.a, f.name))
        return out

    def readout_neighbors(self, area: str) -> list[tuple[str, str]]:
        """The neighbors readout probes from ``area`` for dependents."""
        pairs = self.neighbors(area)
        if self.readout is None:
            return pairs
        allowed = self.readout.get(area, ())
        return [(b, f) for b, f in pairs if b in allowed]

    # --------------------------------------------------------- serialization

    def to_dict(self) -> dict:
        defaults = {pos: act.to_dict() for pos, act in self.pos_defaults.items()}
        lexicon = {}
        for word, entry in self.lexicon.items():
            if entry.override:
                lexicon[word] = {"pos": entry.pos, **entry.action.to_dict()}
            else:
                lexicon[word] = entry.pos
        areas = []
        for a in self.areas:
            d = {"name": a.name, "kind": a.kind}
            if a.inherit:
                d["inherit"] = True
            areas.append(d)
        return {
            "name": self.name,
            "areas": areas,
            "fibers": [f.name for f in self.fibers],
            "chains": {k: list(v) for k, v in self.chains.items()},
            "initial": [str(c) for c in self.initial],
            "root": self.root,
            **({"readout": {k: list(v) for k, v in self.readout.items()}} if self.readout is not None else {}),
            "pos_defaults": defaults,
            "lexicon": lexicon,
        }

    def dumps(self) -> str:
        return yaml.dump(self.to_dict(), Dumper=_Dumper, allow_unicode=True, sort_keys=False)


class _Dumper(yaml.SafeDumper):
    pass


class _UniqueKeyLoader(yaml.SafeLoader):
    pass


def _construct_mapping(loader, node, deep=False):
    seen = set()
    for key_node, _ in node.value:
        key = loader.construct_object(key_node, deep=deep)
        if key in seen:
            raise GrammarError(f"duplicate key {key!r} (line {key_node.start_mark.line + 1})")
        seen.add(key)
    return yaml.SafeLoader.construct_mapping(loader, node, deep)


_UniqueKeyLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)


def _parse_fiber(text: str) -> FiberSpec:
    text = str(text).strip()
    if ">" in text:
        a, b = (s.strip() for s in text.split(">", 1))
        return FiberSpec(a, b, directed=True)
    if "-" in text:
        a, b = (s.strip() for s in text.split("-", 1))
        return FiberSpec(a, b)
    raise GrammarError(f"malformed fiber {text!r}; expected 'A-B' or 'A>B'")


def _commands(items, where: str) -> frozenset:
    if items is None:
        return frozenset()
    if not isinstance(items, list):
        raise GrammarError(f"{where}: expected a list of commands")
    return frozenset(Command.parse(str(c)) for c in items)


def parse_grammar(doc: dict) -> Grammar:
    """Build a Grammar from a parsed document, resolving every reference."""
    if not isinstance(doc, dict):
        raise GrammarError("grammar document must be a mapping")
    for section in ("areas", "fibers", "pos_defaults", "lexicon", "root"):
        if section not in doc:
            raise GrammarError(f"missing section {section!r}")

    areas = []
    for item in doc["areas"]:
        if isinstance(item, str):
            item = {"name": item}
        kind = item.get("kind", STANDARD)
        if kind not in (STANDARD, EXPLICIT):
            raise GrammarError(f"area {item.get('name')!r}: unknown kind {kind!r}")
        areas.append(AreaDecl(str(item["name"]), kind, bool(item.get("inherit", False))))
    names = [a.name for a in areas]
    dup = {n for n in names if names.count(n) > 1}
    if dup:
        raise GrammarError(f"duplicate area {sorted(dup)[0]!r}")
    if LEX not in names:
        raise GrammarError("grammar must declare the LEX area")
    if next(a for a in areas if a.name == LEX).kind != EXPLICIT:
        raise GrammarError("LEX must be an explicit area")

    fibers = []
    for text in doc["fibers"]:
        f = _parse_fiber(text)
        for end in (f.a, f.b):
            if end not in names:
                raise GrammarError(f"fiber {f.name!r} names undeclared area {end!r}")
        if f.a == f.b:
            raise GrammarError(f"fiber {f.name!r} joins an area to itself")
        fibers.append(f)
    fnames = [f.name for f in fibers]
    pairs = [frozenset((f.a, f.b)) for f in fibers if not f.directed]
    if len(set(fnames)) != len(fnames) or len(set(pairs)) != len(pairs):
        raise GrammarError("duplicate fiber")

    chains = {}
    for cname, chain_areas in (doc.get("chains") or {}).items():
        chain_areas = tuple(str(a) for a in chain_areas)
        if len(chain_areas) < 2:
            raise GrammarError(f"chain {cname!r} needs a head area and at least one link area")
        for a in chain_areas:
            if a not in names:
                raise GrammarError(f"chain {cname!r} names undeclared area {a!r}")
        chains[str(cname)] = chain_areas

    defaults = {}
    for pos, spec in doc["pos_defaults"].items():
        spec = spec or {}
        defaults[str(pos)] = Action(_commands(spec.get("pre"), f"pos {pos} pre"),
                                    _commands(spec.get("post"), f"pos {pos} post"))

    lexicon = {}
    for word, spec in doc["lexicon"].items():
        if not isinstance(word, str):
            # YAML reads bare on/off/yes/no as booleans and digits as numbers
            raise GrammarError(f"lexicon key {word!r} is not a string; quote it")
        if isinstance(spec, str):
            pos, override = spec, None
        elif isinstance(spec, dict) and "pos" in spec:
            pos = str(spec["pos"])
            override = spec if ("pre" in spec or "post" in spec) else None
        else:
            raise GrammarError(f"lexicon entry {word!r} needs a part of speech")
        if pos not in defaults:
            raise GrammarError(f"word {word!r}: unknown part of speech {pos!r}")
        if override is None:
            lexicon[word] = LexEntry(pos, defaults[pos])
        else:
            act = Action(_commands(override.get("pre"), f"word {word} pre"),
                         _commands(override.get("post"), f"word {word} post"))
            lexicon[word] = LexEntry(pos, act, override=True)

    initial = tuple(Command.parse(str(c)) for c in (doc.get("initial") or []))
    root = str(doc["root"])
    if root not in names:
        raise GrammarError(f"root area {root!r} is not declared")

    readout = None
    if doc.get("readout") is not None:
        readout = {}
        for src, dsts in doc["readout"].items():
            src = str(src)
            if src not in names:
                raise GrammarError(f"readout names undeclared area {src!r}")
            dsts = tuple(str(d) for d in (dsts or []))
            for d in dsts:
                if d not in names:
                    raise GrammarError(f"readout of {src} names undeclared area {d!r}")
            readout[src] = dsts

    g = Grammar(str(doc.get("name", "grammar")), tuple(areas), tuple(fibers), defaults, lexicon,
                initial, root, chains, readout)
    problems = _unresolved_targets(g)
    if problems:
        raise GrammarError("; ".join(problems))
    return g


def _chain_resolutions(g: Grammar, target: str) -> list[str]:
    """Every concrete target a (possibly chain-templated) target can resolve to."""
    refs = sorted({tok for tok in _chain_refs(target)})
    if not refs:
        return [target]
    options = []
    for ref in refs:
        cname = ref[1:].rstrip("^")
        if cname not in g.chains:
            return []
        options.append(range(0, len(g.chains[cname]) + 1))
    out = []
    for counts in itertools.product(*options):
        state = {ref[1:].rstrip("^"): c for ref, c in zip(refs, counts)}
        resolved = resolve_target(g, target, state)
        if resolved is not None:
            out.append(resolved)
    return out


def _chain_refs(target: str) -> list[str]:
    out = []
    for piece in target.replace(">", " ").replace("-", " ").split():
        if piece.startswith("@"):
            out.append(piece)
    return out


def resolve_target(g: Grammar, target: str, chain_counts: dict) -> str | None:
    """Substitute chain slots into a target; None when it refers to a missing previous element."""
    if "@" not in target:
        return target
    sep = ">" if ">" in target else ("-" if "-" in target else None)
    parts = target.split(sep, 1) if sep else [target]
    out = []
    for piece in parts:
        if piece.startswith("@"):
            prev = piece.endswith("^")
            cname = piece[1:].rstrip("^")
            count = chain_counts.get(cname, 0)
            area = g.chain_slot(cname, count - 1 if prev else count)
            if area is None:
                return None
            out.append(area)
        else:
            out.append(piece)
    if len(out) == 1:
        return out[0]
    if sep == "-":
        return g.fiber_target(out[0], out[1])
    return fiber_name(out[0], out[1], True)


def _unresolved_targets(g: Grammar) -> list[str]:
    problems = []
    seen = set()

    def check(cmd: Command, where: str):
        if cmd.is_chain_control:
            if cmd.target not in g.chains:
                problems.append(f"{where}: unknown chain {cmd.target!r} in {cmd}")
            return
        for piece in _chain_refs(cmd.target):
            if piece[1:].rstrip("^") not in g.chains:
                problems.append(f"{where}: unknown chain {piece!r} in {cmd}")
                return
        for concrete in _chain_resolutions(g, cmd.target):
            key = (concrete, where)
            if key in seen:
                continue
            seen.add(key)
            if g.canonical_target(concrete) is None:
                bad = [p for p in concrete.replace(">", "-").split("-") if p not in g.area_names]
                what = f"unknown area {bad[0]!r}" if bad else f"unknown fiber {concrete!r}"
                problems.append(f"{where}: {what} in command '{cmd}'")

    for c in g.initial:
        check(c, "initial")
    for pos, act in g.pos_defaults.items():
        for c in act.pre | act.post:
            check(c, f"pos {pos}")
    for word, entry in g.lexicon.items():
        if entry.override:
            for c in entry.action.pre | entry.action.post:
                check(c, f"word {word!r}")
    return problems


def loads_grammar(text: str) -> Grammar:
    try:
        doc = yaml.load(text, Loader=_UniqueKeyLoader)
    except yaml.YAMLError as exc:
        raise GrammarError(f"not a valid grammar document: {exc}") from None
    if doc is None:
        raise GrammarError("empty grammar document")
    return parse_grammar(doc)


def load_grammar(source) -> Grammar:
    """Load a grammar from a path, or from one of the shipped names 'english' / 'russian'."""
    if isinstance(source, str) and source in SHIPPED:
        return shipped_grammar(source)
    path = Path(source)
    return loads_grammar(path.read_text(encoding="utf-8"))


SHIPPED = {"english": "english.grammar", "russian": "russian.grammar"}


def shipped_grammar_text(name: str) -> str:
    return resources.files("assembly_parser.data").joinpath(SHIPPED[name]).read_text(encoding="utf-8")


def shipped_grammar(name: str) -> Grammar:
    return loads_grammar(shipped_grammar_text(name))


def english_reference_grammar() -> Grammar:
    return shipped_grammar("english")


def russian_reference_grammar() -> Grammar:
    return shipped_grammar("russian")


def validate_grammar(g: Grammar) -> list[Diagnostic]:
    """Structural checks beyond what loading enforces."""
    diags = []
    if not g.lexicon:
        diags.append(Diagnostic(ERROR, "vocabulary is empty"))
    lex_neighbors = {n for n, _ in g.neighbors(LEX)}
    missing = [a for a in g.area_names if a != LEX and a not in lex_neighbors]
    if missing:
        diags.append(Diagnostic(ERROR, f"LEX must connect to all areas; missing {', '.join(missing)}"))
    for problem in _unresolved_targets(g):
        diags.append(Diagnostic(ERROR, problem))
    if g.root not in g.area_names:
        diags.append(Diagnostic(ERROR, f"root area {g.root!r} is not declared"))
    else:
        reached = {g.root}
        frontier = [g.root]
        while frontier:
            a = frontier.pop()
            for b, _ in g.readout_neighbors(a):
                if b != LEX and b not in reached:
                    reached.add(b)
                    frontier.append(b)
        for a in g.area_names:
            if a != LEX and a not in reached:
                diags.append(Diagnostic(WARNING, f"area {a} is unreachable from root {g.root} during readout"))
    for src, dsts in (g.readout or {}).items():
        linked = {b for b, _ in g.neighbors(src)}
        for d in dsts:
            if d not in linked:
                diags.append(Diagnostic(ERROR, f"readout from {src} into {d} has no fiber"))
    for pos, act in g.pos_defaults.items():
        if not act.pre and not act.post:
            diags.append(Diagnostic(WARNING, f"part of speech {pos} has an empty action"))
    return diags

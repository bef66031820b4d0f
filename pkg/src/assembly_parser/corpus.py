"""Sentence templates with gold dependencies, corpus generation and corpus files."""

from __future__ import annotations

import random
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .parser import Dependency


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class Slot:
    name: str
    pos: str
    optional: bool = False


@dataclass(frozen=True)
class Variant:
    slots: tuple
    edges: tuple  # (head slot, label, dependent slot)


@dataclass(frozen=True)
class Template:
    id: int
    pattern: str
    variants: tuple
    example: str

    @property
    def pos_used(self) -> set:
        return {s.pos for v in self.variants for s in v.slots}

    def gold(self, variant: Variant, words: dict) -> frozenset:
        """Dependencies among the filled slots; edges touching an omitted slot are dropped."""
        return frozenset(Dependency(words[h], label, words[d])
                         for h, label, d in variant.edges if h in words and d in words)

    def sample(self, vocabulary: dict, rng: random.Random) -> tuple[str, frozenset]:
        variant = rng.choice(self.variants)
        words = {}
        order = []
        for slot in variant.slots:
            if slot.optional and rng.random() < 0.5:
                continue
            choices = vocabulary.get(slot.pos)
            if not choices:
                raise CorpusError(f"template {self.id} uses {slot.pos}, which the vocabulary lacks")
            words[slot.name] = rng.choice(choices)
            order.append(words[slot.name])
        return " ".join(order), self.gold(variant, words)

    def fill(self, variant_index: int, words: dict) -> tuple[str, frozenset]:
        """Sentence and gold set for explicitly chosen words, keyed by slot name."""
        variant = self.variants[variant_index]
        present = {s.name: words[s.name] for s in variant.slots if s.name in words}
        missing = [s.name for s in variant.slots if not s.optional and s.name not in present]
        if missing:
            raise CorpusError(f"template {self.id}: no word for slot(s) {', '.join(missing)}")
        sentence = " ".join(present[s.name] for s in variant.slots if s.name in present)
        return sentence, self.gold(variant, present)


def _variant(slots: str, edges: str) -> Variant:
    parsed = []
    for tok in slots.split():
        name, pos = tok.split(":")
        optional = pos.endswith("?")
        parsed.append(Slot(name, pos.rstrip("?"), optional))
    edge_list = tuple(tuple(e.split()) for e in edges.split(";") if e.strip())
    return Variant(tuple(parsed), edge_list)


def _t(id_, pattern, example, *variants) -> Template:
    return Template(id_, pattern, tuple(_variant(s, e) for s, e in variants), example)


# Slot letters: d/e/f/g determiners, a/b/c adjectives, s subject, v verb,
# o object, r adverb, p/p2 prepositions, q/q2 prepositional objects.
TEMPLATES = (
    _t(1, "N V-intrans", "people died",
       ("s:NOUN v:INTRANS-VERB", "v SUBJ s")),
    _t(2, "N V N", "dogs chase cats",
       ("s:NOUN v:TRANS-VERB o:NOUN", "v SUBJ s; v OBJ o")),
    _t(3, "D N V-intrans", "the boy cried",
       ("d:DET s:NOUN v:INTRANS-VERB", "v SUBJ s; s DET d")),
    _t(4, "D N V N | N V D N", "the kids love toys",
       ("d:DET s:NOUN v:TRANS-VERB o:NOUN", "v SUBJ s; s DET d; v OBJ o"),
       ("s:NOUN v:TRANS-VERB e:DET o:NOUN", "v SUBJ s; v OBJ o; o DET e")),
    _t(5, "D N V D N", "the man saw the woman",
       ("d:DET s:NOUN v:TRANS-VERB e:DET o:NOUN", "v SUBJ s; s DET d; v OBJ o; o DET e")),
    _t(6, "Adj N V N | N V Adj N", "cats hate loud noises",
       ("a:ADJ s:NOUN v:TRANS-VERB o:NOUN", "v SUBJ s; s ADJ a; v OBJ o"),
       ("s:NOUN v:TRANS-VERB b:ADJ o:NOUN", "v SUBJ s; v OBJ o; o ADJ b")),
    _t(7, "D Adj N V D Adj N", "the rich man bought a fancy car",
       ("d:DET a:ADJ s:NOUN v:TRANS-VERB e:DET b:ADJ o:NOUN",
        "v SUBJ s; s DET d; s ADJ a; v OBJ o; o DET e; o ADJ b")),
    _t(8, "Pro V Pro", "I love you",
       ("s:PRONOUN v:TRANS-VERB o:PRONOUN", "v SUBJ s; v OBJ o")),
    _t(9, "{D} N V-intrans Adv", "fish swim quickly",
       ("d:DET? s:NOUN v:INTRANS-VERB r:ADV", "v SUBJ s; s DET d; v ADV r")),
    _t(10, "{D} N Adv V-intrans", "the cat gently meowed",
       ("d:DET? s:NOUN r:ADV v:INTRANS-VERB", "v SUBJ s; s DET d; v ADV r")),
    _t(11, "{D} Adj N V-intrans Adv", "green ideas sleep furiously",
       ("d:DET? a:ADJ s:NOUN v:INTRANS-VERB r:ADV", "v SUBJ s; s DET d; s ADJ a; v ADV r")),
    _t(12, "{D} N Adv V {D} N", "the cat voraciously ate the food",
       ("d:DET? s:NOUN r:ADV v:TRANS-VERB e:DET? o:NOUN",
        "v SUBJ s; s DET d; v ADV r; v OBJ o; o DET e")),
    _t(13, "{D} N V-intrans PP", "the boy went to school",
       ("d:DET? s:NOUN v:INTRANS-VERB p:PREP f:DET? q:NOUN",
        "v SUBJ s; s DET d; v PREPP q; q PREP p; q DET f")),
    _t(14, "{D} N V-intrans PP PP", "he went to school with the backpack",
       ("d:DET? s:NOUN v:INTRANS-VERB p:PREP f:DET? q:NOUN p2:PREP g:DET? q2:NOUN",
        "v SUBJ s; s DET d; v PREPP q; q PREP p; q DET f; v PREPP q2; q2 PREP p2; q2 DET g"),
       ("s:PRONOUN v:INTRANS-VERB p:PREP f:DET? q:NOUN p2:PREP g:DET? q2:NOUN",
        "v SUBJ s; v PREPP q; q PREP p; q DET f; v PREPP q2; q2 PREP p2; q2 DET g")),
    _t(15, "{D} N V {D} N PP", "cats love the taste of tuna",
       ("d:DET? s:NOUN v:TRANS-VERB e:DET? o:NOUN p:PREP f:DET? q:NOUN",
        "v SUBJ s; s DET d; v OBJ o; o DET e; o PREPP q; q PREP p; q DET f")),
    _t(16, "{D} N PP V {D} N", "the couple in the house saw the thief",
       ("d:DET? s:NOUN p:PREP f:DET? q:NOUN v:TRANS-VERB e:DET? o:NOUN",
        "v SUBJ s; s DET d; s PREPP q; q PREP p; q DET f; v OBJ o; o DET e")),
    _t(17, "{D} N Copula {D} N", "geese are birds",
       ("d:DET? s:NOUN v:COPULA e:DET? o:NOUN", "v SUBJ s; s DET d; v OBJ o; o DET e")),
    _t(18, "{D} N Copula Adj", "geese are loud",
       ("d:DET? s:NOUN v:COPULA c:ADJ", "v SUBJ s; s DET d; v ADJ c")),
    _t(19, "Adj N Copula Adj", "big houses are expensive",
       ("a:ADJ s:NOUN v:COPULA c:ADJ", "v SUBJ s; s ADJ a; v ADJ c")),
    _t(20, "D Adj Adj N Copula Adj", "the big bad problem is scary",
       ("d:DET a:ADJ b:ADJ s:NOUN v:COPULA c:ADJ",
        "v SUBJ s; s DET d; s ADJ a; s ADJ b; v ADJ c")),
)


def template(id_: int) -> Template:
    for t in TEMPLATES:
        if t.id == id_:
            return t
    raise KeyError(id_)


@dataclass(frozen=True)
class CorpusItem:
    sentence: str
    gold: frozenset
    template: int | None = None


def load_vocabulary(path=None) -> dict:
    """Part of speech -> words, from 'word POS' lines."""
    if path is None:
        text = resources.files("assembly_parser.data").joinpath("english_vocabulary.txt").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    vocab: dict = {}
    seen = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise CorpusError(f"vocabulary line {lineno}: expected 'word POS'")
        word, pos = parts
        if word in seen:
            raise CorpusError(f"vocabulary line {lineno}: duplicate word {word!r}")
        seen.add(word)
        vocab.setdefault(pos, []).append(word)
    return vocab


def vocabulary_from_grammar(grammar) -> dict:
    vocab: dict = {}
    for word, entry in grammar.lexicon.items():
        vocab.setdefault(entry.pos, []).append(word)
    return vocab


def generate_corpus(templates=TEMPLATES, vocabulary: dict | None = None, samples_per_template: int = 10,
                    seed: int = 0) -> list[CorpusItem]:
    """``samples_per_template`` sentences from every template; a pure function of ``seed``."""
    vocabulary = load_vocabulary() if vocabulary is None else vocabulary
    for t in templates:
        absent = sorted(p for p in t.pos_used if not vocabulary.get(p))
        if absent:
            raise CorpusError(f"template {t.id} uses {', '.join(absent)}, absent from the vocabulary")
    rng = random.Random(seed)
    items = []
    for t in templates:
        for _ in range(samples_per_template):
            sentence, gold = t.sample(vocabulary, rng)
            items.append(CorpusItem(sentence, gold, t.id))
    return items


# ------------------------------------------------------------------ files

def write_corpus(items, path) -> Path:
    """Write sentences one per line and gold triples to a '.gold' sidecar next to it."""
    path = Path(path)
    lines = [it.sentence for it in items]
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    rows = ["# line\thead\tlabel\tdependent\ttemplate"]
    for i, it in enumerate(items, start=1):
        tmpl = "" if it.template is None else str(it.template)
        for d in sorted(it.gold):
            rows.append(f"{i}\t{d.head}\t{d.label}\t{d.dependent}\t{tmpl}")
        if not it.gold:
            rows.append(f"{i}\t\t\t\t{tmpl}")
    gold_path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")
    return path


def gold_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".gold")


def read_corpus(path, vocabulary=None) -> list[CorpusItem]:
    """Read a corpus file and its gold sidecar (if present).

    Blank lines and '#' comments are skipped but still count for line numbers.
    With ``vocabulary`` (a set of words) every token is checked.
    """
    path = Path(path)
    sentences: dict[int, str] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "\t" in line:
            raise CorpusError(f"{path}:{lineno}: tab in sentence line")
        if vocabulary is not None:
            bad = [w for w in line.split() if w not in vocabulary]
            if bad:
                raise CorpusError(f"{path}:{lineno}: unknown word {bad[0]!r}")
        sentences[lineno] = " ".join(line.split())
    gold: dict[int, set] = {i: set() for i in sentences}
    templates: dict[int, int | None] = {i: None for i in sentences}
    gp = gold_path(path)
    has_gold = gp.exists()
    if has_gold:
        for lineno, raw in enumerate(gp.read_text(encoding="utf-8").splitlines(), start=1):
            if not raw.strip() or raw.startswith("#"):
                continue
            cols = raw.split("\t")
            if len(cols) not in (4, 5):
                raise CorpusError(f"{gp}:{lineno}: expected line, head, label, dependent[, template]")
            try:
                ref = int(cols[0])
            except ValueError:
                raise CorpusError(f"{gp}:{lineno}: bad sentence line number {cols[0]!r}") from None
            if ref not in sentences:
                raise CorpusError(f"{gp}:{lineno}: refers to line {ref}, which holds no sentence")
            if len(cols) == 5 and cols[4]:
                templates[ref] = int(cols[4])
            if cols[1] or cols[2] or cols[3]:
                if not (cols[1] and cols[2] and cols[3]):
                    raise CorpusError(f"{gp}:{lineno}: incomplete dependency")
                gold[ref].add(Dependency(cols[1], cols[2], cols[3]))
    return [CorpusItem(sentences[i], frozenset(gold[i]), templates[i]) for i in sorted(sentences)]

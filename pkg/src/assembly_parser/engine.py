"""Assembly Calculus dynamical system.

A :class:`Brain` is a set of areas of excitatory neurons wired by random
G(n, p) graphs (within areas) and random bipartite graphs (fibers between
areas).  Each step every disinhibited area fires the k neurons with the
highest synaptic input, and synapses from neurons that just fired onto
neurons that fire next are multiplied by ``1 + beta``.

Weights are stored as integer exponents ``m`` with ``w = (1 + beta) ** m``.
Synapse rows are sampled on first use from a counter-based generator keyed
by ``(seed, connectome, source neuron)``, so the graph is a pure function of
the seed no matter which rows are ever touched.  :meth:`Brain.materialize`
samples every row eagerly and yields the identical graph.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numba
import numpy as np

STANDARD = "standard"
EXPLICIT = "explicit"

NO_CEILING = np.iinfo(np.int32).max
CONVERGENCE_FRACTION = 0.95
STABILITY_FRACTION = 0.75
# Synapses between LEX-like explicit areas and standard areas learn faster
# than the rest, so a word's new assembly forms before an older, stronger one
# in the same area can pull it in.
LEX_BETA = 0.5
# Ceiling on weight exponents: a synapse stops strengthening after this many
# potentiations, so a word used several times in one sentence does not grow
# an assembly that dominates the others in its area.
MAX_EXPONENT = 20

_MASK64 = (1 << 64) - 1


class BrainError(ValueError):
    """Raised for malformed brain specs or commands on unknown targets."""


@dataclass(frozen=True)
class BrainConfig:
    n: int = 10000
    k: int = 100
    p: float = 0.05
    beta: float = 0.1
    rounds: int = 20
    seed: int = 0
    # plasticity of synapses between an explicit area and a standard area;
    # None means the same as beta
    lex_beta: float | None = LEX_BETA
    # None lets weights grow without bound
    max_exponent: int | None = MAX_EXPONENT

    def __post_init__(self):
        if not 0 < self.k < self.n:
            raise BrainError(f"need 0 < k < n, got k={self.k}, n={self.n}")
        if not 0.0 < self.p <= 1.0:
            raise BrainError(f"need 0 < p <= 1, got p={self.p}")
        if self.beta < 0:
            raise BrainError(f"need beta >= 0, got beta={self.beta}")
        if self.rounds < 1:
            raise BrainError(f"need rounds >= 1, got rounds={self.rounds}")
        if self.max_exponent is not None and self.max_exponent < 0:
            raise BrainError(f"need max_exponent >= 0, got max_exponent={self.max_exponent}")
        if self.lex_beta is not None and self.lex_beta < 0:
            raise BrainError(f"need lex_beta >= 0, got lex_beta={self.lex_beta}")

    @property
    def lexical_beta(self) -> float:
        return self.beta if self.lex_beta is None else self.lex_beta

    @property
    def convergence_threshold(self) -> int:
        return math.ceil(CONVERGENCE_FRACTION * self.k)

    @property
    def stability_threshold(self) -> int:
        return math.ceil(STABILITY_FRACTION * self.k)


@dataclass(frozen=True)
class AreaSpec:
    name: str
    kind: str = STANDARD
    assemblies: int = 0  # explicit areas only; their size is assemblies * k


@dataclass(frozen=True)
class FiberSpec:
    a: str
    b: str
    directed: bool = False  # directed fibers carry a -> b only

    @property
    def name(self) -> str:
        return fiber_name(self.a, self.b, self.directed)


def fiber_name(a: str, b: str, directed: bool = False) -> str:
    return f"{a}>{b}" if directed else f"{a}-{b}"


@dataclass(frozen=True)
class ExplicitAssembly:
    area: str
    index: int
    neurons: tuple


@dataclass
class StabilityReport:
    """Outcome of one project* call.

    ``overlaps[area]`` holds |cap(r-1) & cap(r)| for r = 1..rounds.
    """

    overlaps: dict = field(default_factory=dict)
    converged: bool = True
    first_converged_round: int | None = 0
    rounds_used: int = 0
    explicit_targets: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def cap_overlap(cap1: Iterable[int], cap2: Iterable[int]) -> int:
    """Number of neurons the two caps share."""
    return len(set(np.asarray(cap1).tolist()) & set(np.asarray(cap2).tolist()))


def top_k(si: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest entries, ties broken by ascending index.

    Returns an empty cap when every entry is zero.
    """
    n = si.shape[0]
    if k >= n:
        return np.arange(n) if si.any() else np.empty(0, dtype=np.int64)
    if not si.any():
        return np.empty(0, dtype=np.int64)
    thr = np.partition(si, n - k)[n - k]
    above = np.flatnonzero(si > thr)
    ties = np.flatnonzero(si == thr)[: k - above.size]
    return np.sort(np.concatenate([above, ties]))


class Topology:
    """Seed-keyed synapse rows of one directed bundle (source area -> target area).

    Rows are immutable once sampled, so several brains built from the same
    seed may share one Topology.
    """

    def __init__(self, n_src: int, n_dst: int, p: float, key: tuple, no_self: bool):
        self.n_src = n_src
        self.n_dst = n_dst
        self.p = p
        self.key = key
        self.no_self = no_self
        self.rows: list = [None] * n_src
        self.dtype = np.uint16 if n_dst <= 65535 else np.int32

    def row(self, i: int) -> np.ndarray:
        r = self.rows[i]
        if r is None:
            r = self.rows[i] = self._sample(i)
        return r

    def _sample(self, i: int) -> np.ndarray:
        # Bernoulli(p) per target via geometric gaps on a per-row Philox stream.
        seed, code = self.key
        rng = np.random.Generator(np.random.Philox(key=[seed, (code << 32) | i]))
        span = self.n_dst - 1 if self.no_self else self.n_dst
        chunk = int(span * self.p + 6 * math.sqrt(span * self.p) + 16)
        pos = np.cumsum(rng.geometric(self.p, size=chunk)) - 1
        while pos[-1] < span:
            more = np.cumsum(rng.geometric(self.p, size=chunk)) + pos[-1]
            pos = np.concatenate([pos, more])
        pos = pos[pos < span]
        if self.no_self:
            pos = pos + (pos >= i)
        return pos.astype(self.dtype)

    def materialize(self):
        for i in range(self.n_src):
            self.row(i)


@numba.njit(cache=True)
def _accumulate(cap, start, length, targets, exps, powers, out):
    for r in range(cap.size):
        i = cap[r]
        for q in range(start[i], start[i] + length[i]):
            out[targets[q]] += powers[exps[q]]


@numba.njit(cache=True)
def _potentiate(pre, start, length, targets, exps, post_mask, ceiling):
    for r in range(pre.size):
        i = pre[r]
        for q in range(start[i], start[i] + length[i]):
            if post_mask[targets[q]] and exps[q] < ceiling:
                exps[q] += 1


class Synapses:
    """Weights of one directed bundle.

    Rows this brain has touched are copied from the shared topology into flat
    buffers (targets and weight exponents) so that input accumulation and
    potentiation over a whole cap are single vectorized operations.
    """

    def __init__(self, topology: Topology, src: int, dst: int, fiber: str | None):
        self.topology = topology
        self.src = src
        self.dst = dst
        self.fiber = fiber  # None for recurrent synapses
        self.lexical = False  # set by Brain for fibers touching an explicit area
        self.start = np.full(topology.n_src, -1, dtype=np.int64)
        self.length = np.zeros(topology.n_src, dtype=np.int64)
        self.targets = np.empty(0, dtype=np.int64)
        self.exps = np.empty(0, dtype=np.int32)
        self.used = 0

    def _ensure(self, cap: np.ndarray):
        missing = cap[self.start[cap] < 0]
        if not missing.size:
            return
        rows = [self.topology.row(int(i)) for i in missing]
        sizes = np.fromiter((r.size for r in rows), dtype=np.int64, count=len(rows))
        need = self.used + int(sizes.sum())
        if need > self.targets.size:
            size = max(need, 2 * self.targets.size, 1024)
            targets = np.empty(size, dtype=np.int64)
            targets[: self.used] = self.targets[: self.used]
            exps = np.zeros(size, dtype=np.int32)
            exps[: self.used] = self.exps[: self.used]
            self.targets, self.exps = targets, exps
        if rows:
            self.targets[self.used:need] = np.concatenate(rows)
        self.start[missing] = self.used + np.cumsum(sizes) - sizes
        self.length[missing] = sizes
        self.used = need

    def _gather(self, cap: np.ndarray) -> np.ndarray:
        """Flat-buffer positions of every synapse out of ``cap``, rows in ascending source order."""
        cap = np.asarray(cap, dtype=np.int64)
        self._ensure(cap)
        lens = self.length[cap]
        total = int(lens.sum())
        shift = np.repeat(self.start[cap] - (np.cumsum(lens) - lens), lens)
        return shift + np.arange(total)

    def input_from(self, cap: np.ndarray, powers: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        """Synaptic input into every target neuron, summed in ascending source order.

        With ``out`` the input is added onto it in place.
        """
        cap = np.asarray(cap, dtype=np.int64)
        self._ensure(cap)
        if out is None:
            out = np.zeros(self.topology.n_dst)
        _accumulate(cap, self.start, self.length, self.targets, self.exps, powers, out)
        return out

    def potentiate(self, pre: np.ndarray, post_mask: np.ndarray, ceiling: int = NO_CEILING):
        pre = np.asarray(pre, dtype=np.int64)
        self._ensure(pre)
        _potentiate(pre, self.start, self.length, self.targets, self.exps, post_mask, ceiling)

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Targets and weight exponents of source neuron ``i``."""
        self._ensure(np.array([i], dtype=np.int64))
        s, n = self.start[i], self.length[i]
        return self.targets[s:s + n], self.exps[s:s + n]

    def potentiated_rows(self) -> np.ndarray:
        """Source neurons with at least one potentiated synapse."""
        touched = np.flatnonzero(self.start >= 0)
        return np.array([i for i in touched if self.row(i)[1].any()], dtype=np.int64)

    def exponent(self, i: int, j: int) -> int:
        targets, exps = self.row(i)
        pos = np.searchsorted(targets, j)
        if pos >= targets.size or targets[pos] != j:
            raise KeyError((i, j))
        return int(exps[pos])


class Area:
    def __init__(self, index: int, spec: AreaSpec, n: int, k: int):
        self.index = index
        self.name = spec.name
        self.kind = spec.kind
        self.assemblies = spec.assemblies
        self.n = n
        self.k = k
        self.last_cap = np.empty(0, dtype=np.int64)
        self.clamped = False  # explicit area holding an externally activated assembly

    @property
    def explicit(self) -> bool:
        return self.kind == EXPLICIT


class Fiber:
    def __init__(self, spec: FiberSpec, forward: Synapses, backward: Synapses | None):
        self.spec = spec
        self.name = spec.name
        self.endpoints = (spec.a, spec.b)
        self.forward = forward
        self.backward = backward

    @property
    def directionality(self) -> str:
        return "unidirectional" if self.spec.directed else "reciprocal"


class Brain:
    """Areas, fibers, firing state and inhibition state of one simulation."""

    def __init__(self, config: BrainConfig, areas: Sequence[AreaSpec], fibers: Sequence[FiberSpec],
                 topologies: dict | None = None):
        self.config = config
        self.area_specs = tuple(areas)
        self.fiber_specs = tuple(fibers)
        self.areas: list[Area] = []
        self.area_index: dict[str, int] = {}
        for spec in areas:
            if spec.name in self.area_index:
                raise BrainError(f"duplicate area name {spec.name!r}")
            if spec.kind not in (STANDARD, EXPLICIT):
                raise BrainError(f"area {spec.name!r}: unknown kind {spec.kind!r}")
            if spec.kind == EXPLICIT:
                if spec.assemblies < 1:
                    raise BrainError(f"explicit area {spec.name!r} needs at least one assembly")
                n = spec.assemblies * config.k
            else:
                n = config.n
            self.area_index[spec.name] = len(self.areas)
            self.areas.append(Area(len(self.areas), spec, n, config.k))

        self.topologies = {} if topologies is None else topologies
        # incoming[b] lists the bundles into area b, ordered by source area index
        self.incoming: list[list[Synapses]] = [[] for _ in self.areas]
        self.recurrent: list[Synapses] = []
        for a in self.areas:
            syn = Synapses(self._topology(("rec", a.index), a, a, no_self=True), a.index, a.index, None)
            self.recurrent.append(syn)
            self.incoming[a.index].append(syn)

        self.fibers: dict[str, Fiber] = {}
        for fi, spec in enumerate(fibers):
            for end in (spec.a, spec.b):
                if end not in self.area_index:
                    raise BrainError(f"fiber {spec.name!r} names unknown area {end!r}")
            if spec.a == spec.b:
                raise BrainError(f"fiber {spec.name!r} must join two distinct areas")
            if spec.name in self.fibers:
                raise BrainError(f"duplicate fiber {spec.name!r}")
            a, b = self.areas[self.area_index[spec.a]], self.areas[self.area_index[spec.b]]
            fwd = Synapses(self._topology(("fib", fi, 0), a, b, no_self=False), a.index, b.index, spec.name)
            self.incoming[b.index].append(fwd)
            bwd = None
            if not spec.directed:
                bwd = Synapses(self._topology(("fib", fi, 1), b, a, no_self=False), b.index, a.index, spec.name)
                self.incoming[a.index].append(bwd)
            self.fibers[spec.name] = Fiber(spec, fwd, bwd)
            if a.explicit or b.explicit:
                for syn in (fwd, bwd):
                    if syn is not None:
                        syn.lexical = True
        for lst in self.incoming:
            lst.sort(key=lambda s: (s.src, s.fiber or ""))

        # every area and fiber starts inhibited by population 0
        self.inhibition: dict[str, set] = {a.name: {0} for a in self.areas}
        self.inhibition.update({f: {0} for f in self.fibers})
        self.plasticity = True
        self._powers = {False: np.array([1.0]), True: np.array([1.0])}
        self.steps = 0
        self._ceiling = NO_CEILING if config.max_exponent is None else config.max_exponent

    def _topology(self, tag: tuple, src: Area, dst: Area, no_self: bool) -> Topology:
        if tag[0] == "rec":
            code = (1 << 24) | tag[1]
        else:
            code = (2 << 24) | (tag[1] << 1) | tag[2]
        key = (self.config.seed & _MASK64, code)
        topo = self.topologies.get(key)
        if topo is None or topo.n_src != src.n or topo.n_dst != dst.n or topo.p != self.config.p:
            topo = self.topologies[key] = Topology(src.n, dst.n, self.config.p, key, no_self)
        return topo

    # ----------------------------------------------------------------- lookup

    def area(self, name: str) -> Area:
        try:
            return self.areas[self.area_index[name]]
        except KeyError:
            raise BrainError(f"unknown area {name!r}") from None

    def fiber(self, a: str, b: str) -> Fiber:
        for name in (fiber_name(a, b), fiber_name(b, a), fiber_name(a, b, True)):
            if name in self.fibers:
                return self.fibers[name]
        raise BrainError(f"no fiber between {a!r} and {b!r}")

    def synapses(self, src: str, dst: str) -> Synapses:
        """The bundle carrying src -> dst (recurrent when src == dst)."""
        if src == dst:
            return self.recurrent[self.area(src).index]
        f = self.fiber(src, dst)
        if f.spec.a == src:
            return f.forward
        if f.backward is None:
            raise BrainError(f"fiber {f.name!r} does not carry {src} -> {dst}")
        return f.backward

    def assembly(self, area: str, index: int) -> ExplicitAssembly:
        a = self.area(area)
        if not a.explicit:
            raise BrainError(f"area {area!r} is not explicit")
        if not 0 <= index < a.assemblies:
            raise BrainError(f"area {area!r} has no assembly {index}")
        k = self.config.k
        return ExplicitAssembly(area, index, tuple(range(index * k, (index + 1) * k)))

    # ------------------------------------------------------------- inhibition

    def _check_target(self, target: str):
        if target not in self.inhibition:
            raise BrainError(f"unknown inhibition target {target!r}")

    def inhibit(self, target: str, pop: int = 0):
        self._check_target(target)
        self.inhibition[target].add(pop)

    def disinhibit(self, target: str, pop: int = 0):
        self._check_target(target)
        self.inhibition[target].discard(pop)

    def is_inhibited(self, target: str) -> bool:
        self._check_target(target)
        return bool(self.inhibition[target])

    def disinhibit_all(self):
        for pops in self.inhibition.values():
            pops.clear()

    # ----------------------------------------------------------------- firing

    def activate_assembly(self, assembly: ExplicitAssembly):
        """Make an explicit assembly the area's active cap; it fires from round 1 on."""
        area = self.area(assembly.area)
        if not area.explicit:
            raise BrainError(f"area {area.name!r} is not explicit")
        if area.name in self.inhibition and self.inhibition[area.name]:
            raise BrainError(f"cannot activate an assembly in inhibited area {area.name!r}")
        area.last_cap = np.asarray(assembly.neurons, dtype=np.int64)
        area.clamped = True

    def beta_of(self, syn: Synapses) -> float:
        return self.config.lexical_beta if syn.lexical else self.config.beta

    def _powers_upto(self, m: int, lexical: bool = False) -> np.ndarray:
        """Table of (1+beta)^i for i = 0..m (at least) for one synapse class."""
        table = self._powers[lexical]
        if m >= table.size:
            base = 1.0 + (self.config.lexical_beta if lexical else self.config.beta)
            size = max(m + 1, 2 * table.size)
            table = self._powers[lexical] = np.array([_power(base, i) for i in range(size)])
        return table

    def _powers_for(self, syn: Synapses) -> np.ndarray:
        # an exponent grows by at most one per step
        return self._powers_upto(self.steps, syn.lexical)

    def _bundle_open(self, syn: Synapses) -> bool:
        if self.inhibition[self.areas[syn.src].name]:
            return False
        return syn.fiber is None or not self.inhibition[syn.fiber]

    def step(self) -> dict:
        """Advance the firing state one time step; returns the new caps by area name."""
        self.steps += 1
        new_caps: dict[int, np.ndarray] = {}
        used: dict[int, list[Synapses]] = {}
        for b in self.areas:
            if self.inhibition[b.name]:
                continue
            if b.clamped:
                new_caps[b.index] = b.last_cap
                used[b.index] = [s for s in self.incoming[b.index]
                                 if s.fiber is not None and self._bundle_open(s)
                                 and self.areas[s.src].last_cap.size]
                continue
            si = None
            used[b.index] = []
            for syn in self.incoming[b.index]:
                src_cap = self.areas[syn.src].last_cap
                if not src_cap.size or not self._bundle_open(syn):
                    continue
                si = syn.input_from(src_cap, self._powers_for(syn), out=si)
                used[b.index].append(syn)
            new_caps[b.index] = top_k(si, b.k) if si is not None else np.empty(0, dtype=np.int64)

        if self.plasticity:
            for bi, bundles in used.items():
                post = new_caps[bi]
                if not post.size:
                    continue
                mask = np.zeros(self.areas[bi].n, dtype=bool)
                mask[post] = True
                for syn in bundles:
                    if syn.fiber is None and self.areas[bi].explicit:
                        continue
                    if self.beta_of(syn) == 0:
                        continue
                    syn.potentiate(self.areas[syn.src].last_cap, mask, self._ceiling)

        for bi, cap in new_caps.items():
            self.areas[bi].last_cap = cap
        return {self.areas[bi].name: cap for bi, cap in new_caps.items()}

    def explicit_targets(self) -> list[str]:
        """Disinhibited standard areas reached by a clamped explicit assembly through an open fiber."""
        out = []
        for b in self.areas:
            if b.explicit or self.inhibition[b.name]:
                continue
            for syn in self.incoming[b.index]:
                src = self.areas[syn.src]
                if src.explicit and src.clamped and src.last_cap.size and self._bundle_open(syn):
                    out.append(b.name)
                    break
        return out

    def project_star(self, rounds: int | None = None, record: list | None = None) -> StabilityReport:
        """Strong projection: every active disinhibited area fires, repeatedly, until stable.

        Areas that a clamped explicit assembly projects into start empty, so the
        word forms a fresh assembly there instead of reviving an older one.
        """
        rounds = self.config.rounds if rounds is None else rounds
        targets = self.explicit_targets()
        for name in targets:
            self.area(name).last_cap = np.empty(0, dtype=np.int64)
        held = [a for a in self.areas if not a.explicit and not self.inhibition[a.name]
                and a.name not in targets and a.last_cap.size]
        for a in held:
            a.clamped = True

        watched = [a for a in self.areas if not a.explicit and not self.inhibition[a.name]]
        prev = {a.index: a.last_cap for a in watched}
        overlaps = {a.name: [] for a in watched}
        for _ in range(rounds):
            caps = self.step()
            if record is not None:
                record.append({name: cap.tolist() for name, cap in caps.items()})
            for a in watched:
                overlaps[a.name].append(cap_overlap(prev[a.index], a.last_cap))
                prev[a.index] = a.last_cap

        for a in held:
            a.clamped = False
        participating = [a for a in watched if a.last_cap.size]
        report = StabilityReport(
            overlaps={a.name: overlaps[a.name] for a in participating},
            rounds_used=rounds,
            explicit_targets=targets,
        )
        thr = self.config.convergence_threshold
        first = 0
        for a in participating:
            seq = overlaps[a.name]
            bad = [r for r, ov in enumerate(seq, start=1) if ov < thr]
            if bad:
                first = max(first, bad[-1] + 1)
        if first > rounds:
            report.converged = False
            report.first_converged_round = None
        else:
            report.first_converged_round = first
        return report

    def fire_into(self, src: str, dst: str, cap: np.ndarray, rounds: int = 1,
                  recurrent: bool = True) -> list[np.ndarray]:
        """Fire ``cap`` in ``src`` into ``dst`` for several rounds, ignoring inhibition.

        Used by readout; applies no plasticity.  Returns the cap of ``dst`` after
        each round and leaves the last one as its ``last_cap``.
        """
        syn = self.synapses(src, dst)
        target = self.area(dst)
        rec = self.recurrent[target.index]
        base = syn.input_from(np.asarray(cap), self._powers_for(syn)) if len(cap) else np.zeros(target.n)
        caps = []
        cur = np.empty(0, dtype=np.int64)
        for _ in range(rounds):
            si = base
            if recurrent and cur.size and not target.explicit:
                si = rec.input_from(cur, self._powers_for(rec), out=base.copy())
            cur = top_k(si, target.k)
            caps.append(cur)
        target.last_cap = cur
        target.clamped = False
        return caps

    # --------------------------------------------------------------- copying

    def fresh_copy(self) -> "Brain":
        """A new brain on the same sampled graph with all weights back at 1."""
        return Brain(self.config, self.area_specs, self.fiber_specs, topologies=self.topologies)

    def materialize(self):
        for topo in self.topologies.values():
            topo.materialize()

    def bundles(self) -> list[Synapses]:
        out = list(self.recurrent)
        for f in self.fibers.values():
            out.append(f.forward)
            if f.backward is not None:
                out.append(f.backward)
        return out

    def weight(self, src: str, i: int, dst: str, j: int) -> float:
        syn = self.synapses(src, dst)
        return _power(1.0 + self.beta_of(syn), syn.exponent(i, j))

    def firing_state(self) -> dict:
        return {a.name: a.last_cap.tolist() for a in self.areas}


def _power(base: float, m: int) -> float:
    try:
        return base ** m
    except OverflowError:
        return math.inf


def build_brain(config: BrainConfig, areas: Sequence[AreaSpec], fibers: Sequence[FiberSpec]) -> Brain:
    return Brain(config, areas, fibers)


# ---------------------------------------------------------------- snapshots

def save_snapshot(brain: Brain, path) -> None:
    """Write config, specs, touched edge rows with weight exponents, inhibition and caps to .npz.

    Rows this brain never touched are omitted; they are reproducible from the seed.
    """
    header = {
        "config": asdict(brain.config),
        "areas": [asdict(s) for s in brain.area_specs],
        "fibers": [asdict(s) for s in brain.fiber_specs],
        "inhibition": {t: sorted(p) for t, p in brain.inhibition.items()},
        "caps": brain.firing_state(),
        "clamped": [a.name for a in brain.areas if a.clamped],
        "plasticity": brain.plasticity,
        "steps": brain.steps,
    }
    arrays = {"header": np.frombuffer(json.dumps(header).encode(), dtype=np.uint8)}
    for bi, syn in enumerate(brain.bundles()):
        src = np.flatnonzero(syn.start >= 0)
        idx = syn._gather(src)
        arrays[f"b{bi}_src"] = src
        arrays[f"b{bi}_len"] = syn.length[src]
        arrays[f"b{bi}_tgt"] = syn.targets[idx]
        arrays[f"b{bi}_exp"] = syn.exps[idx]
    np.savez_compressed(path, **arrays)


def load_snapshot(path) -> Brain:
    data = np.load(path)
    header = json.loads(bytes(data["header"]).decode())
    brain = Brain(
        BrainConfig(**header["config"]),
        [AreaSpec(**s) for s in header["areas"]],
        [FiberSpec(**s) for s in header["fibers"]],
    )
    for bi, syn in enumerate(brain.bundles()):
        src, lens = data[f"b{bi}_src"], data[f"b{bi}_len"]
        tgt, exps = data[f"b{bi}_tgt"], data[f"b{bi}_exp"]
        offsets = np.concatenate([[0], np.cumsum(lens)])
        for i, s in enumerate(src):
            syn.topology.rows[int(s)] = tgt[offsets[i]:offsets[i + 1]].astype(syn.topology.dtype)
        syn._ensure(src)
        syn.exps[syn._gather(src)] = exps
    brain.inhibition = {t: set(p) for t, p in header["inhibition"].items()}
    for name, cap in header["caps"].items():
        brain.area(name).last_cap = np.asarray(cap, dtype=np.int64)
    for name in header["clamped"]:
        brain.area(name).clamped = True
    brain.plasticity = header["plasticity"]
    brain.steps = header["steps"]
    return brain

"""Brute-force dense simulator used as a test oracle for the sparse engine.

It copies the sampled graph of a production Brain into full exponent
matrices (-1 where there is no synapse) and then re-implements the firing
rules with plain Python loops.  Nothing of the engine's dynamics code is
reused; only the random graph is shared.
"""

import math

EXPLICIT = "explicit"


def _pow(base, m):
    try:
        return base ** m
    except OverflowError:
        return math.inf


class DenseBrain:
    def __init__(self, brain):
        cfg = brain.config
        self.k = cfg.k
        self.beta = cfg.beta
        self.lex_beta = cfg.beta if cfg.lex_beta is None else cfg.lex_beta
        self.ceiling = cfg.max_exponent
        self.rounds = cfg.rounds
        self.names = [s.name for s in brain.area_specs]
        self.kind = {s.name: s.kind for s in brain.area_specs}
        self.size = {}
        for s in brain.area_specs:
            self.size[s.name] = s.assemblies * cfg.k if s.kind == EXPLICIT else cfg.n

        # bundles: (src, dst, fiber name or None) -> dense exponent matrix
        self.bundles = {}
        for s in brain.area_specs:
            self.bundles[(s.name, s.name, None)] = self._dense(brain.synapses(s.name, s.name))
        for f in brain.fiber_specs:
            self.bundles[(f.a, f.b, f.name)] = self._dense(brain.synapses(f.a, f.b))
            if not f.directed:
                self.bundles[(f.b, f.a, f.name)] = self._dense(brain.synapses(f.b, f.a))

        self.inhibition = {t: set(p) for t, p in brain.inhibition.items()}
        self.caps = {a.name: sorted(int(x) for x in a.last_cap) for a in brain.areas}
        self.clamped = {a.name: a.clamped for a in brain.areas}
        self.plasticity = brain.plasticity

    @staticmethod
    def _dense(syn):
        topo = syn.topology
        m = [[-1] * topo.n_dst for _ in range(topo.n_src)]
        for i in range(topo.n_src):
            targets, exps = syn.row(i)
            for j, e in zip(targets.tolist(), exps.tolist()):
                m[i][j] = e
        return m

    # ------------------------------------------------------------ commands

    def inhibit(self, target, pop=0):
        self.inhibition[target].add(pop)

    def disinhibit(self, target, pop=0):
        self.inhibition[target].discard(pop)

    def activate(self, area, index):
        self.caps[area] = list(range(index * self.k, (index + 1) * self.k))
        self.clamped[area] = True

    # -------------------------------------------------------------- firing

    def _beta(self, key):
        src, dst, fiber = key
        if fiber is not None and (self.kind[src] == EXPLICIT or self.kind[dst] == EXPLICIT):
            return self.lex_beta
        return self.beta

    def _open(self, key):
        src, _, fiber = key
        if self.inhibition[src]:
            return False
        return fiber is None or not self.inhibition[fiber]

    def _incoming(self, dst):
        keys = [key for key in self.bundles if key[1] == dst]
        return sorted(keys, key=lambda key: (self.names.index(key[0]), key[2] or ""))

    def _top_k(self, si):
        n = len(si)
        if not any(v != 0 for v in si):
            return []
        order = sorted(range(n), key=lambda j: (-si[j], j))
        return sorted(order[: self.k])

    def step(self):
        new_caps, used = {}, {}
        for b in self.names:
            if self.inhibition[b]:
                continue
            if self.clamped[b]:
                new_caps[b] = list(self.caps[b])
                used[b] = [key for key in self._incoming(b)
                           if key[2] is not None and self._open(key) and self.caps[key[0]]]
                continue
            si = [0.0] * self.size[b]
            used[b] = []
            for key in self._incoming(b):
                pre = self.caps[key[0]]
                if not pre or not self._open(key):
                    continue
                used[b].append(key)
                w = self.bundles[key]
                base = 1.0 + self._beta(key)
                for i in sorted(pre):
                    row = w[i]
                    for j in range(self.size[b]):
                        if row[j] >= 0:
                            si[j] += _pow(base, row[j])
            new_caps[b] = self._top_k(si) if used[b] else []

        if self.plasticity:
            for b, keys in used.items():
                post = set(new_caps[b])
                if not post:
                    continue
                for key in keys:
                    if key[2] is None and self.kind[b] == EXPLICIT:
                        continue
                    if self._beta(key) == 0:
                        continue
                    w = self.bundles[key]
                    for i in self.caps[key[0]]:
                        for j in post:
                            if w[i][j] >= 0 and (self.ceiling is None or w[i][j] < self.ceiling):
                                w[i][j] += 1
        for b, cap in new_caps.items():
            self.caps[b] = cap
        return {b: list(c) for b, c in new_caps.items()}

    def project_star(self, rounds=None):
        """Word-level projection: targets of a clamped explicit assembly start empty, other active areas hold."""
        rounds = self.rounds if rounds is None else rounds
        targets = []
        for b in self.names:
            if self.kind[b] == EXPLICIT or self.inhibition[b]:
                continue
            for key in self._incoming(b):
                src = key[0]
                if (self.kind[src] == EXPLICIT and self.clamped[src] and self.caps[src]
                        and self._open(key)):
                    targets.append(b)
                    break
        for b in targets:
            self.caps[b] = []
        held = [b for b in self.names if self.kind[b] != EXPLICIT and not self.inhibition[b]
                and b not in targets and self.caps[b]]
        for b in held:
            self.clamped[b] = True
        history = [self.step() for _ in range(rounds)]
        for b in held:
            self.clamped[b] = False
        return history

    def exponents(self, key):
        return self.bundles[key]

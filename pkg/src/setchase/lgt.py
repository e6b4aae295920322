"""Tree-shaped layered graph traversal on top of the evolving tree game."""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from typing import Generator

from .engine import Delete, Fork, GameOp, Grow, Policy, Transcript, run_game
from .tree import TAU, WeightedStemmedTree, close


class NotATree(ValueError):
    pass


NonTreeInstance = NotATree


class WidthMismatch(ValueError):
    pass


class NotBinarized(ValueError):
    pass


class HomomorphismBroken(AssertionError):
    pass


@dataclass
class LayeredInstance:
    layers: list[list[str]]
    edges: list[tuple[str, str, float]]
    width: int | None = None

    def __post_init__(self):
        self.layers = [[str(u) for u in layer] for layer in self.layers]
        self.edges = [(str(u), str(v), float(w)) for u, v, w in self.edges]
        if self.width is None:
            self.width = max(len(layer) for layer in self.layers)
        self.validate()

    @property
    def source(self) -> str:
        return self.layers[0][0]

    def validate(self) -> None:
        if not self.layers or len(self.layers[0]) != 1:
            raise NotATree("layer 0 must hold exactly the source")
        layer_of = {}
        for i, layer in enumerate(self.layers):
            if not layer:
                raise NotATree(f"layer {i} is empty")
            for u in layer:
                if u in layer_of:
                    raise NotATree(f"node {u!r} appears twice")
                layer_of[u] = i
        parent = {}
        for u, v, w in self.edges:
            if u not in layer_of or v not in layer_of:
                raise NotATree(f"edge ({u!r}, {v!r}) names an unknown node")
            if layer_of[v] != layer_of[u] + 1:
                raise NotATree(f"edge ({u!r}, {v!r}) skips layers")
            if not w >= 0:
                raise NotATree(f"edge ({u!r}, {v!r}) has weight {w!r}")
            if v in parent:
                raise NotATree(f"node {v!r} has two parents")
            parent[v] = u
        for u, i in layer_of.items():
            if i > 0 and u not in parent:
                raise NotATree(f"node {u!r} is unreachable")
        if self.width != max(len(layer) for layer in self.layers):
            raise WidthMismatch(f"declared width {self.width} != {max(map(len, self.layers))}")

    def children(self) -> dict[str, list[tuple[str, float]]]:
        out: dict[str, list[tuple[str, float]]] = {u: [] for layer in self.layers for u in layer}
        for u, v, w in self.edges:
            out[u].append((v, w))
        return out

    def parents(self) -> dict[str, tuple[str, float]]:
        return {v: (u, w) for u, v, w in self.edges}

    def is_binarized(self) -> bool:
        ch = self.children()
        for layer in self.layers[:-1]:
            if any(len(ch[u]) > 2 for u in layer):
                return False
            if sum(1 for u in layer for _, w in ch[u] if w > 0) > 1:
                return False
        return True

    def to_dict(self) -> dict:
        return {"layers": self.layers, "edges": [[u, v, w] for u, v, w in self.edges],
                "width": self.width}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> LayeredInstance:
        return cls(d["layers"], [tuple(e) for e in d["edges"]], d.get("width"))

    @classmethod
    def from_json(cls, text: str) -> LayeredInstance:
        return cls.from_dict(json.loads(text))


def distances(inst: LayeredInstance) -> dict[str, float]:
    """Source distance of every node, accumulated layer by layer."""
    par = inst.parents()
    d = {inst.source: 0.0}
    for layer in inst.layers[1:]:
        for v in layer:
            u, w = par[v]
            d[v] = d[u] + w
    return d


def offline_opt(inst: LayeredInstance) -> float:
    d = distances(inst)
    return min(d[v] for v in inst.layers[-1])


def brute_force_opt(inst: LayeredInstance) -> float:
    """Minimum over every choice of one node per layer that forms a connected path."""
    w = {(u, v): c for u, v, c in inst.edges}
    best = float("inf")
    for path in itertools.product(*inst.layers):
        total = 0.0
        for u, v in zip(path, path[1:]):
            if (u, v) not in w:
                break
            total += w[(u, v)]
        else:
            best = min(best, total)
    return best


def binarize(inst: LayeredInstance) -> LayeredInstance:
    """Insert zero layers so each gap forks at most in two and carries one positive edge."""
    ch = inst.children()
    taken = {u for layer in inst.layers for u in layer}
    counter = itertools.count()

    def fresh(hint: str) -> str:
        while True:
            name = f"{hint}~{next(counter)}"
            if name not in taken:
                taken.add(name)
                return name

    layers = [list(inst.layers[0])]
    edges: list[tuple[str, str, float]] = []
    for i, layer in enumerate(inst.layers[:-1]):
        # a bundle is (node in the output, original targets still below it, pending weight)
        bundles = [(u, list(ch[u]), None) for u in layer if ch[u]]
        gaps: list[list[tuple[str, str, float, str | None]]] = []
        while True:
            done = all(len(t) == 1 and p == 0.0 for _, t, p in bundles) and gaps
            if done:
                break
            budget = True
            gap = []
            nxt = []
            for node, targets, pending in bundles:
                if len(targets) == 1 and pending is None:
                    pending = targets[0][1]
                if len(targets) == 1:
                    tgt = targets[0][0]
                    w = 0.0
                    if pending > 0 and budget:
                        w, pending, budget = pending, 0.0, False
                    child = fresh(tgt)
                    gap.append((node, child, w, tgt))
                    nxt.append((child, targets, pending))
                    continue
                head, rest = targets[:1], targets[1:]
                for part in (head, rest):
                    tgt = part[0][0] if len(part) == 1 else None
                    pend = part[0][1] if len(part) == 1 else None
                    w = 0.0
                    if pend is not None and pend > 0 and budget:
                        w, pend, budget = pend, 0.0, False
                    child = fresh(part[0][0])
                    gap.append((node, child, w, tgt))
                    nxt.append((child, part, pend))
            gaps.append(gap)
            bundles = nxt
        # the last inserted layer takes the original names
        rename = {c: t for _, c, _, t in gaps[-1]}
        for gap in gaps:
            out_layer = []
            for u, c, w, _ in gap:
                u = rename.get(u, u)
                c = rename.get(c, c)
                edges.append((u, c, w))
                out_layer.append(c)
            layers.append(out_layer)
        assert sorted(layers[-1]) == sorted(inst.layers[i + 1])
        layers[-1] = list(inst.layers[i + 1])
    return LayeredInstance(layers, edges, max(len(layer) for layer in layers))


def random_instance(n_layers: int = 6, width: int = 4, seed: int = 0,
                    p_zero: float = 0.3) -> LayeredInstance:
    """Random tree-shaped instance whose layers never exceed ``width`` nodes."""
    rng = random.Random(seed)
    layers = [["s"]]
    edges = []
    for i in range(1, n_layers):
        prev = layers[-1]
        size = rng.randint(1, width)
        parents = [rng.choice(prev) for _ in range(size)]
        parents.sort(key=prev.index)
        layer = []
        for j, u in enumerate(parents):
            v = f"{i}.{j}"
            w = 0.0 if rng.random() < p_zero else round(rng.uniform(0.1, 5.0), 3)
            edges.append((u, v, w))
            layer.append(v)
        layers.append(layer)
    return LayeredInstance(layers, edges)


def single_path(weights: list[float]) -> LayeredInstance:
    layers = [["s"]] + [[f"p{i}"] for i in range(1, len(weights) + 1)]
    edges = [(layers[i][0], layers[i + 1][0], w) for i, w in enumerate(weights)]
    return LayeredInstance(layers, edges)


def cow_path(turns: int = 8, base: float = 2.0) -> LayeredInstance:
    """Two rays growing alternately by base^i; the ray that grew last is a dead end."""
    layers = [["s"], ["L0", "R0"]]
    edges = [("s", "L0", 0.0), ("s", "R0", 0.0)]
    for i in range(1, turns + 1):
        step = base ** i
        lw, rw = (step, 0.0) if i % 2 else (0.0, step)
        layers.append([f"L{i}", f"R{i}"])
        edges += [(f"L{i-1}", f"L{i}", lw), (f"R{i-1}", f"R{i}", rw)]
    keep = "R" if turns % 2 else "L"
    layers.append([f"{keep}*"])
    edges.append((f"{keep}{turns}", f"{keep}*", 0.0))
    return LayeredInstance(layers, edges)


def ops_to_instance(ops: list[GameOp]) -> LayeredInstance:
    """Export a game op stream as a layered instance, one gap per op."""
    t = WeightedStemmedTree()
    image = {t.top: "s"}
    layers = [["s"]]
    edges = []
    for i, op in enumerate(ops, start=1):
        new_image = {}
        layer = []

        def add(leaf: int, w: float, tag: str = "") -> None:
            v = f"n{i}.{len(layer)}{tag}"
            edges.append((image[leaf], v, w))
            layer.append(v)
            new_image[leaf] = v

        if op.kind == "fork":
            a, b = t.fork(op.leaf)
            for leaf in t.leaves():
                if leaf in (a, b):
                    v = f"n{i}.{len(layer)}"
                    edges.append((image[op.leaf], v, 0.0))
                    layer.append(v)
                    new_image[leaf] = v
                else:
                    add(leaf, 0.0)
        elif op.kind == "grow":
            t.grow(op.leaf, op.h)
            for leaf in t.leaves():
                add(leaf, op.h if leaf == op.leaf else 0.0)
        elif op.kind == "delete":
            t.alg_leaf = next(u for u in t.leaves() if u != op.leaf)
            t.delete_leaf(op.leaf)
            for leaf in t.leaves():
                add(leaf, 0.0)
        else:
            continue
        image = new_image
        layers.append(layer)
    return LayeredInstance(layers, edges)


@dataclass
class LayerCheck:
    layer: int
    leaves: int
    max_gap: float


@dataclass
class ReductionResult:
    transcript: Transcript
    route: list[str]
    route_cost: float
    checks: list[LayerCheck] = field(default_factory=list)

    @property
    def cost(self) -> float:
        return self.transcript.total_cost


class LayeredAdversary:
    """Emits the game ops simulating a binarized layered instance, layer by layer."""

    def __init__(self, inst: LayeredInstance, tol: float = TAU):
        if not inst.is_binarized():
            raise NotBinarized("run binarize() first")
        self.inst = inst
        self.ch = inst.children()
        self.dist = distances(inst)
        self.tol = tol
        self.image: dict[int, str] = {}
        self.route: list[str] = []
        self.checks: list[LayerCheck] = []
        self._gen = None

    def next_op(self, tree: WeightedStemmedTree) -> GameOp:
        self.tree = tree
        if self._gen is None:
            self.image = {tree.top: self.inst.source}
            self.route.append(self.inst.source)
            self._check(0)
            self._gen = self._play()
        try:
            return next(self._gen)
        except StopIteration:
            return GameOp("end")

    def _check(self, i: int) -> None:
        t = self.tree
        leaves = t.leaves()
        if sorted(self.image[u] for u in leaves) != sorted(self.inst.layers[i]):
            raise HomomorphismBroken(f"layer {i}: leaf images differ from the layer")
        if t.width > self.inst.width:
            raise HomomorphismBroken(f"layer {i}: width {t.width} > {self.inst.width}")
        gap = 0.0
        for u in leaves:
            a, b = t.root_dist(u), self.dist[self.image[u]]
            if not close(a, b, self.tol):
                raise HomomorphismBroken(f"layer {i}: leaf {u} at {a!r}, image at {b!r}")
            gap = max(gap, abs(a - b))
        self.checks.append(LayerCheck(i, len(leaves), gap))

    def _play(self) -> Generator[GameOp, None, None]:
        t = self.tree
        for i in range(len(self.inst.layers) - 1):
            leaves = t.leaves()
            for u in sorted(u for u in leaves if not self.ch[self.image[u]]):
                yield Delete(u)
                del self.image[u]
            grow = None
            for u in sorted(self.image):
                kids = self.ch[self.image[u]]
                if len(kids) == 2:
                    yield Fork(u)
                    a, b = t.children(u)
                    del self.image[u]
                    self.image[a], self.image[b] = kids[0][0], kids[1][0]
                    for leaf, (_, w) in zip((a, b), kids):
                        if w > 0:
                            grow = (leaf, w)
                else:
                    v, w = kids[0]
                    self.image[u] = v
                    if w > 0:
                        grow = (u, w)
            if grow is not None:
                yield Grow(*grow)
            self._check(i + 1)
            self.route.append(self.image[t.alg_leaf])


def route_cost(inst: LayeredInstance, route: list[str]) -> float:
    """Length of the tree walk visiting ``route`` in order."""
    par = inst.parents()
    dist = distances(inst)

    def anc(u):
        out = [u]
        while u in par:
            u = par[u][0]
            out.append(u)
        return out

    total = 0.0
    for u, v in zip(route, route[1:]):
        au = set(anc(u))
        lca = next(x for x in anc(v) if x in au)
        total += dist[u] + dist[v] - 2 * dist[lca]
    return total


def reduce_and_run(inst: LayeredInstance, policy: Policy, max_ops: int = 10**6) -> ReductionResult:
    """Simulate the policy on the evolving tree induced by ``inst``.

    The traversal agent is charged the game cost; the walk it would take in the
    revealed tree is reported as ``route`` / ``route_cost``.
    """
    adv = LayeredAdversary(inst)
    tr, _ = run_game(adv, policy, max_ops=max_ops)
    return ReductionResult(tr, adv.route, route_cost(inst, adv.route), adv.checks)

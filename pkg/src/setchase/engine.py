"""The evolving tree game: adversary ops, policy responses, cost accounting."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Protocol

from .tree import SmoothingRecord, TreeError, WeightedStemmedTree


class IllegalOp(ValueError):
    pass


class PolicyReturnedNonLeaf(RuntimeError):
    pass


class PolicyStayedOnDeletedLeaf(RuntimeError):
    pass


class LimitExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class GameOp:
    kind: str  # "grow" | "delete" | "fork" | "end"
    leaf: int | None = None
    h: float | None = None

    def to_dict(self) -> dict:
        d = {"op": self.kind}
        if self.leaf is not None:
            d["leaf"] = self.leaf
        if self.h is not None:
            d["h"] = self.h
        return d

    @classmethod
    def from_dict(cls, d: dict) -> GameOp:
        return cls(d["op"], d.get("leaf"), d.get("h"))


def Grow(leaf: int, h: float) -> GameOp:
    return GameOp("grow", leaf, float(h))


def Delete(leaf: int) -> GameOp:
    return GameOp("delete", leaf)


def Fork(leaf: int) -> GameOp:
    return GameOp("fork", leaf)


END = GameOp("end")


class Policy:
    """Leaf-choice policy.  Hooks return the leaf the algorithm occupies next.

    ``on_grow`` and ``on_fork`` see the tree after the mutation.  Deletions are
    split: ``on_delete`` sees the tree before the leaf is removed and must
    vacate it, ``after_delete`` sees the smoothed tree.
    """

    policy_id = "base"

    def reset(self, tree: WeightedStemmedTree) -> None:
        pass

    def on_grow(self, tree: WeightedStemmedTree, leaf: int, h: float) -> int:
        return tree.alg_leaf

    def on_delete(self, tree: WeightedStemmedTree, leaf: int) -> int:
        return tree.alg_leaf

    def after_delete(self, tree: WeightedStemmedTree, rec: SmoothingRecord) -> int:
        return tree.alg_leaf

    def on_fork(self, tree: WeightedStemmedTree, leaf: int, children: tuple[int, int]) -> int:
        return children[0] if tree.alg_leaf == leaf else tree.alg_leaf


class Adversary(Protocol):
    def next_op(self, tree: WeightedStemmedTree) -> GameOp: ...


@dataclass
class StepRecord:
    op: GameOp
    alg_from: int
    alg_to: int
    cost: float
    offset: float = 0.0  # distance of the pre-op locus above alg_from (grow at alg)

    def to_dict(self) -> dict:
        return {**self.op.to_dict(), "alg_from": self.alg_from, "alg_to": self.alg_to,
                "offset": self.offset, "cost": self.cost}

    @classmethod
    def from_dict(cls, d: dict) -> StepRecord:
        return cls(GameOp.from_dict(d), d["alg_from"], d["alg_to"], d["cost"], d.get("offset", 0.0))


@dataclass
class Transcript:
    steps: list[StepRecord] = field(default_factory=list)
    total_cost: float = 0.0
    final_opt: float = 0.0
    width_seen: int = 1
    depth_seen: int = 1
    truncated: bool = False

    @property
    def ops(self) -> list[GameOp]:
        return [s.op for s in self.steps]

    def summary(self) -> dict:
        return {"summary": True, "total_cost": self.total_cost, "final_opt": self.final_opt,
                "ratio": ratio(self.total_cost, self.final_opt), "width": self.width_seen,
                "depth": self.depth_seen, "steps": len(self.steps), "truncated": self.truncated}

    def to_jsonl(self) -> str:
        lines = [json.dumps(s.to_dict()) for s in self.steps]
        lines.append(json.dumps(self.summary()))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> Transcript:
        t = cls()
        for line in text.splitlines():
            if not line.strip():
                continue
            d = json.loads(line)
            if d.get("summary"):
                t.total_cost = d["total_cost"]
                t.final_opt = d["final_opt"]
                t.width_seen = d["width"]
                t.depth_seen = d["depth"]
                t.truncated = d.get("truncated", False)
            else:
                t.steps.append(StepRecord.from_dict(d))
        return t


@dataclass
class GameResult:
    ratio: float
    cost: float
    opt: float


def ratio(cost: float, opt: float) -> float:
    if opt > 0:
        return cost / opt
    return math.inf if cost > 0 else 1.0


def move_cost(pre: WeightedStemmedTree, post: WeightedStemmedTree, op: GameOp,
              src: int, dst: int) -> tuple[float, float]:
    """Distance moved from the pre-op locus at ``src`` to leaf ``dst``.

    Returns (cost, offset).  After growing the occupied leaf by h the locus sits
    h above the leaf, so staying costs h and leaving costs the pre-growth
    distance.  Deletions keep distances between surviving nodes, so the
    pre-op tree is always a valid yardstick except for fork children.
    """
    if op.kind == "grow" and op.leaf == src:
        if dst == src:
            return op.h, op.h
        return pre.dist(src, dst), op.h
    if dst == src:
        return 0.0, 0.0
    if op.kind == "fork":
        return post.dist(src, dst), 0.0
    return pre.dist(src, dst), 0.0


def _check_leaf(tree: WeightedStemmedTree, u: int, what: str) -> None:
    if not tree.is_leaf(u):
        raise PolicyReturnedNonLeaf(f"{what}: policy answered non-leaf {u}")


def apply_and_charge(tree: WeightedStemmedTree, op: GameOp, policy: Policy) -> StepRecord:
    """Apply ``op`` to ``tree``, consult ``policy`` and charge its movement."""
    src = tree.alg_leaf
    if op.kind not in ("grow", "delete", "fork"):
        raise IllegalOp(f"unknown op {op.kind!r}")
    if not tree.is_leaf(op.leaf):
        raise IllegalOp(f"{op.kind} on non-leaf {op.leaf}")
    pre = tree.copy()
    try:
        if op.kind == "grow":
            tree.grow(op.leaf, op.h)
            dst = policy.on_grow(tree, op.leaf, op.h)
            _check_leaf(tree, dst, "grow")
        elif op.kind == "fork":
            ch = tree.fork(op.leaf)
            dst = policy.on_fork(tree, op.leaf, ch)
            _check_leaf(tree, dst, "fork")
        else:
            if tree.parent(op.leaf) == tree.root:
                raise IllegalOp(f"cannot delete the unique root child {op.leaf}")
            mid = policy.on_delete(tree, op.leaf)
            _check_leaf(tree, mid, "delete")
            if mid == op.leaf:
                raise PolicyStayedOnDeletedLeaf(f"policy stayed on deleted leaf {op.leaf}")
            tree.alg_leaf = mid
            rec = tree.delete_leaf(op.leaf)
            dst = policy.after_delete(tree, rec)
            _check_leaf(tree, dst, "after delete")
    except TreeError as e:
        raise IllegalOp(str(e)) from e
    tree.alg_leaf = dst
    cost, off = move_cost(pre, tree, op, src, dst)
    return StepRecord(op, src, dst, cost, off)


def run_game(adversary: Adversary, policy: Policy, max_ops: int = 10**6,
             tree: WeightedStemmedTree | None = None, raise_on_limit: bool = False,
             on_step=None) -> tuple[Transcript, GameResult]:
    """Play until the adversary emits ``end`` or ``max_ops`` ops were applied."""
    tree = WeightedStemmedTree() if tree is None else tree
    policy.reset(tree)
    tr = Transcript(width_seen=tree.width, depth_seen=tree.tree_depth)
    total = 0.0
    while True:
        op = adversary.next_op(tree)
        if op is None or op.kind == "end":
            break
        if len(tr.steps) >= max_ops:
            tr.truncated = True
            if raise_on_limit:
                raise LimitExceeded(f"more than {max_ops} ops")
            break
        rec = apply_and_charge(tree, op, policy)
        tr.steps.append(rec)
        total += rec.cost
        tr.width_seen = max(tr.width_seen, tree.width)
        tr.depth_seen = max(tr.depth_seen, tree.tree_depth)
        if on_step is not None:
            on_step(tree, rec, total)
    tr.total_cost = total
    tr.final_opt = tree.opt()
    tr.final_tree = tree
    return tr, GameResult(ratio(total, tr.final_opt), total, tr.final_opt)


class ScriptedAdversary:
    """Replays a fixed op list."""

    def __init__(self, ops: Iterable[GameOp]):
        self._ops = list(ops)
        self._i = 0

    def next_op(self, tree: WeightedStemmedTree) -> GameOp:
        if self._i >= len(self._ops):
            return END
        op = self._ops[self._i]
        self._i += 1
        return op


def replay(ops: Iterable[GameOp], policy: Policy, **kw) -> tuple[Transcript, GameResult]:
    return run_game(ScriptedAdversary(ops), policy, **kw)


CSV_FIELDS = ["instance", "algorithm", "k", "cost", "opt", "ratio"]


def summary_csv(rows: Iterable[dict], fields: list[str] = CSV_FIELDS) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


__all__ = [name for name in dir() if not name.startswith("_")] + ["asdict"]

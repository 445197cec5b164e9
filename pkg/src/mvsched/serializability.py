"""Conflicts, dependencies, serialization graphs, and serializability tests.

Conflict-serializability is decided through acyclicity of the serialization
graph.  View-serializability is decided exhaustively over serial orders of
the transactions: the search walks permutation prefixes in canonical
(lexicographic) order, discarding in bulk only prefixes that provably cannot
extend to a view-equivalent serial schedule, so the witness returned is the
canonically first one and a negative answer accounts for all n! orders.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from math import factorial
from typing import Mapping, Sequence

from .core import INIT, Operation, OperationId, Schedule, Transaction
from .errors import LimitExceeded, ObjectNeverWritten, TransactionSetMismatch


class ConflictKind(enum.Enum):
    """The action pair of two conflicting operations (first/second)."""

    WW = "ww"
    WR = "wr"
    RW = "rw"


@dataclass(frozen=True)
class DependencyEdge:
    """A typed dependency: ``dst`` depends on ``src`` in some schedule.

    ``src`` and ``dst`` belong to different transactions and act on the same
    object; the kind is WW for a version installed after ``src``'s, WR for a
    read observing ``src``'s version or a later one, and RW for a read whose
    observed version is installed before ``dst``'s write (an antidependency).
    """

    src: OperationId
    dst: OperationId
    kind: ConflictKind


@dataclass(frozen=True)
class SerializationGraph:
    """Transactions as nodes; an edge per pair with at least one dependency.

    Every edge keeps all of its witnessing dependencies, which downstream
    cycle-shape reasoning needs.
    """

    nodes: tuple[str, ...]
    edges: Mapping[tuple[str, str], tuple[DependencyEdge, ...]]

    def has_edge(self, src: str, dst: str) -> bool:
        return (src, dst) in self.edges

    def successors(self, src: str) -> tuple[str, ...]:
        return tuple(sorted(dst for (a, dst) in self.edges if a == src))

    @property
    def edge_pairs(self) -> frozenset[tuple[str, str]]:
        return frozenset(self.edges)


def conflicting(b: Operation, a: Operation) -> ConflictKind | None:
    """Classify two operations as ww/wr/rw-conflicting, or not at all.

    Commits never conflict, and neither does anything involving a single
    transaction or two different objects.
    """
    if b.is_commit or a.is_commit:
        return None
    if b.id.txn == a.id.txn or b.obj != a.obj:
        return None
    if b.is_write and a.is_write:
        return ConflictKind.WW
    if b.is_write and a.is_read:
        return ConflictKind.WR
    if b.is_read and a.is_write:
        return ConflictKind.RW
    return None


def _dep_kind(s: Schedule, b: Operation, a: Operation) -> ConflictKind | None:
    """Dependency clause shared by depends_on and the graph builder."""
    kind = conflicting(b, a)
    if kind is None:
        return None
    obj = a.obj
    vpos = s.vpos[obj]
    if kind is ConflictKind.WW:
        return kind if vpos[b.id] < vpos[a.id] else None
    if kind is ConflictKind.WR:
        observed = s.vf[a.id]
        if b.id == observed or vpos[b.id] < vpos[observed]:
            return kind
        return None
    # rw: the version observed by b installs before the version written by a
    return kind if vpos[s.vf[b.id]] < vpos[a.id] else None


def depends_on(s: Schedule, b: OperationId, a: OperationId) -> DependencyEdge | None:
    """The typed dependency of ``a`` on ``b`` in ``s``, or None when there is none."""
    if b.is_init or a.is_init:
        return None
    b_op = s.operation(b)
    a_op = s.operation(a)
    kind = _dep_kind(s, b_op, a_op)
    if kind is None:
        return None
    return DependencyEdge(b, a, kind)


def serialization_graph(s: Schedule) -> SerializationGraph:
    """Build the full serialization graph of a valid schedule."""
    edges: dict[tuple[str, str], list[DependencyEdge]] = {}
    by_obj: dict[str, list[Operation]] = {}
    for t in s.txns:
        for op in t.ops:
            if op.obj is not None:
                by_obj.setdefault(op.obj, []).append(op)
    for ops in by_obj.values():
        for b in ops:
            for a in ops:
                if b.id.txn == a.id.txn:
                    continue
                kind = _dep_kind(s, b, a)
                if kind is not None:
                    edges.setdefault((b.id.txn, a.id.txn), []).append(DependencyEdge(b.id, a.id, kind))
    return SerializationGraph(
        nodes=s.txn_ids,
        edges={pair: tuple(sorted(deps, key=lambda d: (d.src, d.dst, d.kind.value))) for pair, deps in edges.items()},
    )


def _shortest_cycle(nodes: Sequence[str], edge_pairs: frozenset[tuple[str, str]]) -> tuple[str, ...] | None:
    """Shortest directed cycle, canonicalized to start at its smallest node.

    Ties between equally short cycles break lexicographically, so witnesses
    are reproducible.
    """
    succ: dict[str, list[str]] = {n: [] for n in nodes}
    for a, b in sorted(edge_pairs):
        succ[a].append(b)
    best: tuple[int, tuple[str, ...]] | None = None
    for start in sorted(nodes):
        # BFS back to start; parents recorded on first visit give the
        # earliest shortest path thanks to sorted expansion order.
        parent: dict[str, str] = {}
        frontier = [start]
        found = None
        while frontier and found is None:
            nxt: list[str] = []
            for u in frontier:
                for v in succ[u]:
                    if v == start:
                        found = u
                        break
                    if v not in parent:
                        parent[v] = u
                        nxt.append(v)
                if found is not None:
                    break
            frontier = nxt
        if found is None:
            continue
        path = [found]
        while path[-1] != start:
            path.append(parent[path[-1]])
        cycle = tuple(reversed(path))
        pivot = cycle.index(min(cycle))
        cycle = cycle[pivot:] + cycle[:pivot]
        cand = (len(cycle), cycle)
        if best is None or cand < best:
            best = cand
    return best[1] if best else None


def is_conflict_serializable(s: Schedule) -> tuple[bool, tuple[str, ...] | None]:
    """Acyclicity of the serialization graph, with a witnessing cycle when not."""
    graph = serialization_graph(s)
    cycle = _shortest_cycle(graph.nodes, graph.edge_pairs)
    return (cycle is None, cycle)


def _require_same_txns(s: Schedule, s2: Schedule) -> None:
    if dict(s.txn_by_id) != dict(s2.txn_by_id):
        raise TransactionSetMismatch("schedules are not over the same set of transactions")


def conflict_equivalent(s: Schedule, s2: Schedule) -> bool:
    """Same transactions and the same dependency on every conflicting pair."""
    _require_same_txns(s, s2)
    by_obj: dict[str, list[Operation]] = {}
    for t in s.txns:
        for op in t.ops:
            if op.obj is not None:
                by_obj.setdefault(op.obj, []).append(op)
    for ops in by_obj.values():
        for b in ops:
            for a in ops:
                if b.id.txn == a.id.txn or conflicting(b, a) is None:
                    continue
                if (_dep_kind(s, b, a) is None) != (_dep_kind(s2, b, a) is None):
                    return False
    return True


def last_version(s: Schedule, obj: str) -> OperationId:
    """The write installing the final version of ``obj``."""
    chain = s.vorder.get(obj)
    if chain is None or len(chain) <= 1:
        raise ObjectNeverWritten(f"object {obj!r} is never written in this schedule")
    return chain[-1]


def view_equivalent(s: Schedule, s2: Schedule) -> bool:
    """Same transactions, same observed version per read, same final versions."""
    _require_same_txns(s, s2)
    if dict(s.vf) != dict(s2.vf):
        return False
    for obj, chain in s.vorder.items():
        if len(chain) > 1 and last_version(s2, obj) != chain[-1]:
            return False
    return True


# ---------------------------------------------------------------------------
# View-serializability decision
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ViewWitness:
    """Outcome of the exhaustive view-serializability test.

    ``exhausted`` counts serial orders ruled out (each pruned prefix accounts
    for all of its completions), plus the witness itself when one is found;
    on a negative verdict it always equals n!.
    """

    verdict: bool
    witness: tuple[str, ...] | None
    exhausted: int


def view_signature(s: Schedule):
    """Hashable digest of what view-equivalence compares: vf plus final versions."""
    vf_items = tuple(sorted(s.vf.items()))
    last_items = tuple(sorted((obj, chain[-1]) for obj, chain in s.vorder.items() if len(chain) > 1))
    return (vf_items, last_items)


def _serial_signature(txns: Sequence[Transaction]):
    """View signature of the serial schedule for this transaction order."""
    vf: dict[OperationId, OperationId] = {}
    last: dict[str, OperationId] = {}
    for t in txns:
        for op in t.ops:
            if op.is_write:
                last[op.obj] = op.id
            elif op.is_read:
                vf[op.id] = last.get(op.obj, INIT)
    return (tuple(sorted(vf.items())), tuple(sorted(last.items())))


@lru_cache(maxsize=16384)
def serial_signature_pool(txns: tuple[Transaction, ...]) -> frozenset:
    """View signatures of all serial orders of ``txns`` (canonically sorted input)."""
    from itertools import permutations

    return frozenset(_serial_signature(perm) for perm in permutations(txns))


def is_view_serializable(s: Schedule, *, max_txns: int = 8, max_ops: int = 24) -> ViewWitness:
    """Search all serial orders for one view-equivalent to ``s``.

    Serial orders are explored prefix by prefix in lexicographic transaction
    order.  A prefix dies as soon as a read in the transaction being placed
    would observe the wrong version (that only depends on the prefix), when
    an object's final version is already wrong with no writer left to fix
    it, or when the same placed-set/installed-version state has already
    failed; each discarded prefix accounts for every serial order extending
    it.  The first completed order is therefore the canonically first
    witness.
    """
    n = len(s.txns)
    if n > max_txns:
        raise LimitExceeded(f"{n} transactions exceed the view-serializability bound of {max_txns}")
    total_ops = sum(len(t.ops) for t in s.txns)
    if total_ops > max_ops:
        raise LimitExceeded(f"{total_ops} operations exceed the view-serializability bound of {max_ops}")

    txns = s.txns  # already sorted by id
    target_vf = dict(s.vf)
    target_last = {obj: chain[-1] for obj, chain in s.vorder.items() if len(chain) > 1}
    write_objs = [frozenset(op.obj for op in t.ops if op.is_write) for t in txns]
    writers_left: dict[str, int] = {}
    for objs in write_objs:
        for obj in objs:
            writers_left[obj] = writers_left.get(obj, 0) + 1

    fact = [factorial(k) for k in range(n + 1)]
    failed: set = set()
    path: list[int] = []
    exhausted = 0

    def place(t: Transaction, last: dict[str, OperationId]):
        local: dict[str, OperationId] = {}
        for op in t.ops:
            if op.is_write:
                local[op.obj] = op.id
            elif op.is_read:
                seen = local[op.obj] if op.obj in local else last.get(op.obj, INIT)
                if seen != target_vf[op.id]:
                    return None
        if local:
            merged = dict(last)
            merged.update(local)
            return merged
        return last

    def explore(mask: int, last: dict[str, OperationId]) -> bool:
        nonlocal exhausted
        depth = len(path)
        if depth == n:
            exhausted += 1
            return last == target_last
        remaining_after = fact[n - depth - 1]
        for i in range(n):
            if mask >> i & 1:
                continue
            new_last = place(txns[i], last)
            if new_last is None:
                exhausted += remaining_after
                continue
            key = (mask | (1 << i), tuple(sorted(new_last.items())))
            if key in failed:
                exhausted += remaining_after
                continue
            for obj in write_objs[i]:
                writers_left[obj] -= 1
            dead = any(
                writers_left[obj] == 0 and new_last.get(obj) != target_last.get(obj) for obj in write_objs[i]
            )
            if dead:
                for obj in write_objs[i]:
                    writers_left[obj] += 1
                failed.add(key)
                exhausted += remaining_after
                continue
            path.append(i)
            if explore(mask | (1 << i), new_last):
                return True
            path.pop()
            for obj in write_objs[i]:
                writers_left[obj] += 1
            failed.add(key)
        return False

    found = explore(0, {})
    witness = tuple(txns[i].id for i in path) if found else None
    return ViewWitness(verdict=found, witness=witness, exhausted=exhausted)

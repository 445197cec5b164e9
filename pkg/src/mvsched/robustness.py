"""Workload robustness: split-schedule search, enumeration oracles, transforms.

A workload (transactions plus an allocation) is robust when every allowed
schedule over every subset of its transactions is serializable; the exact
variants quantify over the full set only.  Two independent deciders are
provided: exhaustive enumeration of allowed schedules (the oracle, correct
at desk scale by construction) and a search for split-form counterexamples,
which by their shape are serializable in neither the conflict nor the view
sense.  For level allocations the two must agree, and the test suite holds
them to that.

Also here: recognizers for the two split-schedule shapes and the three
constructive schedule transforms (serial-tail extension, restriction to a
cycle, counterexample minimization).
"""

from __future__ import annotations

import enum
import itertools
import time
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .core import INIT, OperationId, Schedule, Transaction, make_schedule
from .errors import LimitExceeded, NotACycle, TransactionSetMismatch
from .isolation import Allocation, LevelAllocation, complete_under_allocation, respects_commit_order
from .serializability import (
    _shortest_cycle,
    is_conflict_serializable,
    serial_signature_pool,
    serialization_graph,
    view_signature,
)


@dataclass(frozen=True)
class Workload:
    """A transaction set together with the allocation it runs under."""

    txns: tuple[Transaction, ...]
    alloc: Allocation

    def __post_init__(self) -> None:
        object.__setattr__(self, "txns", tuple(sorted(self.txns, key=lambda t: t.id)))
        if isinstance(self.alloc, LevelAllocation):
            for t in self.txns:
                self.alloc.level_of(t.id)

    @property
    def txn_ids(self) -> tuple[str, ...]:
        return tuple(t.id for t in self.txns)

    @property
    def total_ops(self) -> int:
        return sum(len(t.ops) for t in self.txns)

    def restrict(self, txn_ids: Iterable[str]) -> "Workload":
        keep = set(txn_ids)
        return Workload(tuple(t for t in self.txns if t.id in keep), self.alloc.restrict(keep))


@dataclass(frozen=True)
class SearchLimits:
    """Caps for the exhaustive searches; all positive.

    ``max_orders`` counts candidate operation orders (and, for predicate
    allocations, candidate version-data completions).
    """

    max_txns: int = 4
    max_ops: int = 16
    max_orders: int = 10_000_000
    budget_seconds: float = 60.0


DEFAULT_LIMITS = SearchLimits()


class RobustnessMode(enum.Enum):
    CONFLICT = "conflict"
    VIEW = "view"
    EXACT_CONFLICT = "exact-conflict"
    EXACT_VIEW = "exact-view"


class SearchMethod(enum.Enum):
    SPLIT_SEARCH = "split"
    ENUMERATION = "enumerate"


@dataclass(frozen=True)
class RobustnessVerdict:
    """Outcome of a robustness check.

    When not robust, ``counterexample`` holds the transaction subset and an
    allowed schedule over it that fails the mode's serializability notion.
    """

    robust: bool
    mode: RobustnessMode
    counterexample: tuple[tuple[str, ...], Schedule] | None
    method: SearchMethod


class _Budget:
    """Candidate counter plus wall-clock deadline for one search call."""

    __slots__ = ("max_orders", "deadline", "count", "_clock_check")

    def __init__(self, limits: SearchLimits):
        self.max_orders = limits.max_orders
        self.deadline = time.monotonic() + limits.budget_seconds
        self.count = 0
        self._clock_check = 0

    def tick(self) -> None:
        self.count += 1
        if self.count > self.max_orders:
            raise LimitExceeded(f"more than {self.max_orders} candidate orders examined")
        self._clock_check += 1
        if self._clock_check >= 256 or self.count == 1:
            self._clock_check = 0
            if time.monotonic() >= self.deadline:
                raise LimitExceeded("search exceeded its wall-clock budget")


def _check_limits(w: Workload, limits: SearchLimits) -> None:
    if len(w.txns) > limits.max_txns:
        raise LimitExceeded(f"{len(w.txns)} transactions exceed the limit of {limits.max_txns}")
    if w.total_ops > limits.max_ops:
        raise LimitExceeded(f"{w.total_ops} operations exceed the limit of {limits.max_ops}")


def _subsets(ids: Sequence[str]) -> Iterator[tuple[str, ...]]:
    ordered = sorted(ids)
    for size in range(len(ordered) + 1):
        yield from itertools.combinations(ordered, size)


def _iter_interleavings(txns: Sequence[Transaction], budget: _Budget) -> Iterator[tuple[OperationId, ...]]:
    """All operation orders respecting each transaction's internal order.

    Canonical order: at every step the next operation is taken from the
    transaction with the smallest id whose turn is possible, exploring
    depth-first, so serial-prefix orders come out before heavily interleaved
    ones and results are reproducible.
    """
    seqs = [t.op_ids for t in txns]
    total = sum(len(ops) for ops in seqs)
    idx = [0] * len(seqs)
    path: list[OperationId] = [INIT]

    def rec() -> Iterator[tuple[OperationId, ...]]:
        if len(path) == total + 1:
            budget.tick()
            yield tuple(path)
            return
        for i, ops in enumerate(seqs):
            if idx[i] < len(ops):
                path.append(ops[idx[i]])
                idx[i] += 1
                yield from rec()
                idx[i] -= 1
                path.pop()

    yield from rec()


def _vorder_candidates(txns: Sequence[Transaction]) -> dict[str, list[tuple[OperationId, ...]]]:
    """Per object, every version order consistent with transaction-internal order."""
    writes: dict[str, list[OperationId]] = {}
    for t in txns:
        for op in t.ops:
            if op.is_write:
                writes.setdefault(op.obj, []).append(op.id)
    out: dict[str, list[tuple[OperationId, ...]]] = {}
    for obj, wids in writes.items():
        valid: list[tuple[OperationId, ...]] = []
        for perm in itertools.permutations(wids):
            rank = {wid: i for i, wid in enumerate(perm)}
            ok = True
            for a, b in zip(wids, wids[1:]):
                if a.txn == b.txn and rank[a] >= rank[b]:
                    ok = False
                    break
            if ok:
                valid.append(perm)
        out[obj] = valid
    return out


def _iter_free_completions(
    txns: Sequence[Transaction],
    order: tuple[OperationId, ...],
    vorder_cands: dict[str, list[tuple[OperationId, ...]]],
    budget: _Budget,
) -> Iterator[Schedule]:
    """Every valid schedule with this operation order: all version orders
    crossed with all version functions (each read may observe INIT or any
    earlier same-object write)."""
    pos = {opid: i for i, opid in enumerate(order)}
    read_ops = [op for t in txns for op in t.ops if op.is_read]
    read_options: list[list[OperationId]] = []
    for op in read_ops:
        options = [INIT]
        for t in txns:
            for w in t.ops:
                if w.is_write and w.obj == op.obj and pos[w.id] < pos[op.id]:
                    options.append(w.id)
        read_options.append(options)
    objs = sorted(vorder_cands)
    for chains in itertools.product(*(vorder_cands[obj] for obj in objs)):
        vorder = dict(zip(objs, chains))
        for choice in itertools.product(*read_options):
            budget.tick()
            vf = {op.id: target for op, target in zip(read_ops, choice)}
            yield make_schedule(txns, order, vorder, vf)


def _enumerate_allowed(w: Workload, budget: _Budget) -> Iterator[Schedule]:
    if isinstance(w.alloc, LevelAllocation):
        for order in _iter_interleavings(w.txns, budget):
            s = complete_under_allocation(w.txns, order, w.alloc)
            if s is not None:
                yield s
    else:
        vorder_cands = _vorder_candidates(w.txns)
        for order in _iter_interleavings(w.txns, budget):
            for s in _iter_free_completions(w.txns, order, vorder_cands, budget):
                if w.alloc.holds(s):
                    yield s


def enumerate_allowed_schedules(w: Workload, limits: SearchLimits = DEFAULT_LIMITS) -> Iterator[Schedule]:
    """Yield, in canonical order, every schedule over the workload's full
    transaction set that is allowed under its allocation.

    Under a level allocation each interleaving has at most one completion,
    so this is exactly one pass over the interleavings.  Under a predicate
    allocation all valid schedules are generated (all interleavings crossed
    with all version orders and version functions) and filtered, which is
    far more expensive and gated by the same limits.
    """
    _check_limits(w, limits)
    budget = _Budget(limits)
    yield from _enumerate_allowed(w, budget)


# ---------------------------------------------------------------------------
# Robustness deciders (enumeration oracle)
# ---------------------------------------------------------------------------


def _is_view_serializable_pooled(s: Schedule) -> bool:
    """View-serializability as membership in the pool of serial signatures."""
    return view_signature(s) in serial_signature_pool(s.txns)


def _exact_sweep(w: Workload, budget: _Budget, view: bool) -> Schedule | None:
    """First allowed schedule over the full set failing the serializability
    notion, or None when every one passes."""
    for s in _enumerate_allowed(w, budget):
        if view:
            ok = _is_view_serializable_pooled(s)
        else:
            ok, _ = is_conflict_serializable(s)
        if not ok:
            return s
    return None


def is_exact_conflict_robust(w: Workload, limits: SearchLimits = DEFAULT_LIMITS) -> RobustnessVerdict:
    """Every allowed schedule over exactly the full transaction set is
    conflict-serializable."""
    _check_limits(w, limits)
    bad = _exact_sweep(w, _Budget(limits), view=False)
    ce = None if bad is None else (w.txn_ids, bad)
    return RobustnessVerdict(bad is None, RobustnessMode.EXACT_CONFLICT, ce, SearchMethod.ENUMERATION)


def is_exact_view_robust(w: Workload, limits: SearchLimits = DEFAULT_LIMITS) -> RobustnessVerdict:
    """Every allowed schedule over exactly the full transaction set is
    view-serializable."""
    _check_limits(w, limits)
    bad = _exact_sweep(w, _Budget(limits), view=True)
    ce = None if bad is None else (w.txn_ids, bad)
    return RobustnessVerdict(bad is None, RobustnessMode.EXACT_VIEW, ce, SearchMethod.ENUMERATION)


def _subset_sweep(w: Workload, limits: SearchLimits, view: bool) -> tuple[tuple[str, ...], Schedule] | None:
    """Check every subset, smallest first; shared budget across subsets."""
    _check_limits(w, limits)
    budget = _Budget(limits)
    for subset in _subsets(w.txn_ids):
        sub = w.restrict(subset)
        for s in _enumerate_allowed(sub, budget):
            if view:
                ok = _is_view_serializable_pooled(s)
            else:
                ok, _ = is_conflict_serializable(s)
            if not ok:
                return (subset, s)
    return None


def is_conflict_robust(w: Workload, limits: SearchLimits = DEFAULT_LIMITS) -> RobustnessVerdict:
    """Every allowed schedule over every transaction subset is conflict-serializable."""
    ce = _subset_sweep(w, limits, view=False)
    return RobustnessVerdict(ce is None, RobustnessMode.CONFLICT, ce, SearchMethod.ENUMERATION)


def is_view_robust(w: Workload, limits: SearchLimits = DEFAULT_LIMITS) -> RobustnessVerdict:
    """Every allowed schedule over every transaction subset is view-serializable."""
    ce = _subset_sweep(w, limits, view=True)
    return RobustnessVerdict(ce is None, RobustnessMode.VIEW, ce, SearchMethod.ENUMERATION)


# ---------------------------------------------------------------------------
# Split-schedule recognizers
# ---------------------------------------------------------------------------


class SplitDefect(enum.Enum):
    """Why a schedule fails to be a generalized split schedule."""

    FORM = "form"
    NO_CHAIN = "no-cyclic-chain"
    EXTRA_DEPENDENCY = "non-consecutive-dependency"
    COMMIT_ORDER = "commit-order"


def _whole_txn_groups(s: Schedule, ops: Sequence[OperationId], exclude: set[str]) -> list[str] | None:
    """Parse a run of operations as whole back-to-back transactions.

    Returns their ids in appearance order, or None when the run interleaves,
    repeats, or touches an excluded transaction.
    """
    seq: list[str] = []
    j = 0
    while j < len(ops):
        tid = ops[j].txn
        if tid in exclude or tid in seq:
            return None
        t_ops = s.txn_by_id[tid].op_ids
        if tuple(ops[j : j + len(t_ops)]) != t_ops:
            return None
        seq.append(tid)
        j += len(t_ops)
    return seq


def _split_prefix(s: Schedule) -> tuple[str, int, OperationId] | None:
    """The forced pieces of any split labeling: first transaction, length of
    its initial run, and the pivot operation ending the run."""
    ops = [opid for opid in s.order if not opid.is_init]
    if not ops:
        return None
    t1 = ops[0].txn
    run = 0
    while run < len(ops) and ops[run].txn == t1:
        run += 1
    return t1, run, ops[run - 1]


def is_generalized_split_schedule(s: Schedule) -> tuple[bool, SplitDefect | None]:
    """Recognize the split counterexample shape.

    The operation order must read as: a prefix of one transaction up to a
    pivot operation, then every other transaction whole and back to back,
    then the rest of the split transaction.  On top of the shape: the
    consecutive transactions (wrapping around) must carry a cycle of
    dependencies, no dependency may skip ahead in that cycle, and every
    write must install in commit order.  Returns the first failing clause.
    """
    if len(s.txns) < 2:
        return False, SplitDefect.FORM
    pieces = _split_prefix(s)
    if pieces is None:
        return False, SplitDefect.FORM
    t1, run, _b1 = pieces
    ops = [opid for opid in s.order if not opid.is_init]
    t1_ops = s.txn_by_id[t1].op_ids
    rest = t1_ops[run:]
    if rest:
        if tuple(ops[-len(rest) :]) != rest:
            return False, SplitDefect.FORM
        middle = ops[run : len(ops) - len(rest)]
    else:
        middle = ops[run:]
    seq_mid = _whole_txn_groups(s, middle, exclude={t1})
    if seq_mid is None or 1 + len(seq_mid) != len(s.txns):
        return False, SplitDefect.FORM
    seq = [t1] + seq_mid

    n = len(seq)
    index = {tid: i for i, tid in enumerate(seq)}
    pairs = serialization_graph(s).edge_pairs
    for i in range(n):
        if (seq[i], seq[(i + 1) % n]) not in pairs:
            return False, SplitDefect.NO_CHAIN
    for u, v in pairs:
        if (index[u] + 1) % n != index[v]:
            return False, SplitDefect.EXTRA_DEPENDENCY
    for t in s.txns:
        for op in t.ops:
            if op.is_write and not respects_commit_order(s, op.id):
                return False, SplitDefect.COMMIT_ORDER
    return True, None


def is_multiversion_split_schedule(s: Schedule) -> tuple[bool, int | None]:
    """Recognize the looser split shape with a serial tail.

    The order must read as: prefix of the split transaction, some whole
    transactions, the rest of the split transaction, then more whole
    transactions back to back; the split transaction and the middle block
    (m transactions in total, m >= 2) must carry a cycle of dependencies.
    Returns the split index m of the first labeling that works.
    """
    if len(s.txns) < 2:
        return False, None
    pieces = _split_prefix(s)
    if pieces is None:
        return False, None
    t1, run, _b1 = pieces
    ops = [opid for opid in s.order if not opid.is_init]
    t1_ops = s.txn_by_id[t1].op_ids
    rest = t1_ops[run:]
    pairs = serialization_graph(s).edge_pairs

    def chain_holds(seq: list[str]) -> bool:
        m = len(seq)
        return all((seq[i], seq[(i + 1) % m]) in pairs for i in range(m))

    if rest:
        j = next((k for k in range(run, len(ops)) if ops[k].txn == t1), None)
        if j is None or tuple(ops[j : j + len(rest)]) != rest:
            return False, None
        seq_mid = _whole_txn_groups(s, ops[run:j], exclude={t1})
        seq_tail = _whole_txn_groups(s, ops[j + len(rest) :], exclude={t1})
        if seq_mid is None or seq_tail is None or not seq_mid:
            return False, None
        if set(seq_mid) & set(seq_tail) or 1 + len(seq_mid) + len(seq_tail) != len(s.txns):
            return False, None
        seq = [t1] + seq_mid
        return (True, len(seq)) if chain_holds(seq) else (False, None)

    # Empty postfix: the boundary between middle block and serial tail is
    # not visible in the order, so try every split index.
    seq_all = _whole_txn_groups(s, ops[run:], exclude={t1})
    if seq_all is None or 1 + len(seq_all) != len(s.txns):
        return False, None
    full = [t1] + seq_all
    for m in range(2, len(full) + 1):
        if chain_holds(full[:m]):
            return True, m
    return False, None


# ---------------------------------------------------------------------------
# Split-schedule search
# ---------------------------------------------------------------------------


def iter_split_schedules(w: Workload, limits: SearchLimits = DEFAULT_LIMITS) -> Iterator[tuple[tuple[str, ...], Schedule]]:
    """Every generalized split schedule the search can build from the workload.

    Candidates are tried over subsets ascending by size then lexicographic
    order, over orderings of each subset, and over pivot operations of the
    split transaction; each candidate operation order is completed under the
    (restricted) allocation and kept when the completion is an allowed
    generalized split schedule.
    """
    _check_limits(w, limits)
    budget = _Budget(limits)
    by_id = {t.id: t for t in w.txns}
    for size in range(2, len(w.txns) + 1):
        for subset in itertools.combinations(sorted(by_id), size):
            sub_alloc = w.alloc.restrict(subset)
            sub_txns = tuple(by_id[tid] for tid in subset)
            free_cands = None if isinstance(sub_alloc, LevelAllocation) else _vorder_candidates(sub_txns)
            for perm in itertools.permutations(subset):
                t1 = by_id[perm[0]]
                middle_ops: list[OperationId] = []
                for tid in perm[1:]:
                    middle_ops.extend(by_id[tid].op_ids)
                for cut in range(1, len(t1.ops) + 1):
                    order = (
                        (INIT,)
                        + t1.op_ids[:cut]
                        + tuple(middle_ops)
                        + t1.op_ids[cut:]
                    )
                    if isinstance(sub_alloc, LevelAllocation):
                        budget.tick()
                        s = complete_under_allocation(sub_txns, order, sub_alloc)
                        if s is not None and is_generalized_split_schedule(s)[0]:
                            yield subset, s
                    else:
                        for s in _iter_free_completions(sub_txns, order, free_cands, budget):
                            if sub_alloc.holds(s) and is_generalized_split_schedule(s)[0]:
                                yield subset, s


def find_split_counterexample(
    w: Workload, limits: SearchLimits = DEFAULT_LIMITS
) -> tuple[tuple[str, ...], Schedule] | None:
    """The canonically first generalized split schedule allowed under the
    restricted allocation, or None when no subset admits one."""
    return next(iter_split_schedules(w, limits), None)


def check_condition_1(w: Workload, limits: SearchLimits = DEFAULT_LIMITS) -> bool:
    """Either the workload is conflict-robust, or a split-form counterexample
    witnesses that it is not."""
    if is_conflict_robust(w, limits).robust:
        return True
    return find_split_counterexample(w, limits) is not None


# ---------------------------------------------------------------------------
# Constructive transforms
# ---------------------------------------------------------------------------


def extend_with_serial_tail(s: Schedule, full: Iterable[Transaction]) -> Schedule:
    """Append the missing transactions serially after the schedule.

    Appended writes install last (per object, in append order); appended
    reads observe the most recent write before them in the extended order
    (INIT when there is none).  The original order, version order, and
    version function are preserved verbatim.
    """
    full_by_id = {t.id: t for t in full}
    for t in s.txns:
        if full_by_id.get(t.id) != t:
            raise TransactionSetMismatch(f"transaction {t.id!r} of the schedule is missing from the full set")
    tail = [full_by_id[tid] for tid in sorted(full_by_id) if tid not in s.txn_by_id]

    order = list(s.order)
    vorder = {obj: [x for x in chain if not x.is_init] for obj, chain in s.vorder.items()}
    vf = dict(s.vf)
    last_written: dict[str, OperationId] = {}
    for opid in s.order:
        if not opid.is_init and s.op_by_id[opid].is_write:
            last_written[s.op_by_id[opid].obj] = opid
    for t in tail:
        for op in t.ops:
            order.append(op.id)
            if op.is_write:
                vorder.setdefault(op.obj, []).append(op.id)
                last_written[op.obj] = op.id
            elif op.is_read:
                vf[op.id] = last_written.get(op.obj, INIT)
    return make_schedule(tuple(full_by_id.values()), order, vorder, vf)


def _assert_set_is_cycle(s: Schedule, keep: frozenset[str]) -> None:
    if len(keep) < 2:
        raise NotACycle("a cycle needs at least two transactions")
    pairs = serialization_graph(s).edge_pairs
    nodes = sorted(keep)
    first = nodes[0]
    for perm in itertools.permutations(nodes[1:]):
        ring = [first, *perm]
        if all((ring[i], ring[(i + 1) % len(ring)]) in pairs for i in range(len(ring))):
            return
    raise NotACycle(f"{sorted(keep)} is not the transaction set of a cycle in the serialization graph")


def restrict_to_cycle(s: Schedule, cycle: Iterable[str]) -> Schedule:
    """Drop every transaction outside the cycle, remapping dangling reads.

    A read whose observed write is dropped falls back to the latest retained
    version installed before it (INIT when none remains); everything else is
    the original schedule filtered down.
    """
    keep = frozenset(cycle)
    for tid in keep:
        s.transaction(tid)
    _assert_set_is_cycle(s, keep)

    txns = tuple(t for t in s.txns if t.id in keep)
    order = [opid for opid in s.order if opid.is_init or opid.txn in keep]
    vorder: dict[str, list[OperationId]] = {}
    kept_rank: dict[str, dict[OperationId, int]] = {}
    for obj, chain in s.vorder.items():
        kept = [opid for opid in chain if opid.is_init or opid.txn in keep]
        vorder[obj] = [opid for opid in kept if not opid.is_init]
        kept_rank[obj] = {opid: i for i, opid in enumerate(kept)}
    vf: dict[OperationId, OperationId] = {}
    for t in txns:
        for op in t.ops:
            if not op.is_read:
                continue
            target = s.vf[op.id]
            if target.is_init or target.txn in keep:
                vf[op.id] = target
            else:
                # latest retained version installed strictly before the
                # dropped one
                chain = s.vorder[op.obj]
                rank = s.vpos[op.obj]
                best = INIT
                for opid in chain:
                    if opid.is_init or opid.txn in keep:
                        if rank[opid] < rank[target]:
                            best = opid
                vf[op.id] = best
    return make_schedule(txns, order, vorder, vf)


def minimize_counterexample(
    s: Schedule, alloc: LevelAllocation, limits: SearchLimits = DEFAULT_LIMITS
) -> Schedule:
    """Shrink a split-form counterexample to a generalized split schedule.

    Repeatedly restricts the schedule to a minimal cycle of its
    serialization graph; when the minimal cycle already spans every
    remaining transaction but the shape still does not match, a split-form
    counterexample is re-derived by search over the reduced workload.  The
    transaction set strictly shrinks, so this terminates.
    """
    current = s
    while True:
        ok, _ = is_generalized_split_schedule(current)
        if ok:
            return current
        graph = serialization_graph(current)
        cycle = _shortest_cycle(graph.nodes, graph.edge_pairs)
        if cycle is None:
            raise ValueError("schedule is conflict-serializable; there is nothing to minimize")
        if frozenset(cycle) != frozenset(current.txn_ids):
            current = restrict_to_cycle(current, cycle)
            continue
        reduced = Workload(current.txns, alloc.restrict(current.txn_ids))
        hit = find_split_counterexample(reduced, limits)
        if hit is None:
            raise LimitExceeded("no split-form counterexample found within the configured limits")
        current = hit[1]

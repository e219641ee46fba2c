"""Dynamic scheduler: unfold a sequential task stream into a dependency DAG
via data-hazard tracking, then execute it on a worker pool.

Hazard rules, per tile and per ordered task pair (u before v in stream
order): u writes / v reads -> RAW; u reads / v writes -> WAR; both write ->
WAW. A read-write access counts as both a read and a write; a pair linked by
both a true and an output dependence gets a single edge classified RAW.
Tracking is a per-tile scoreboard (last writer plus readers since that
write), so construction is linear in the number of declared accesses.

Because every ordering constraint between tasks touching a common tile is an
edge, any topological execution order reproduces the sequential result
bitwise; worker count and interleaving can never change the output.
"""

from __future__ import annotations

import enum
import heapq
import queue
import threading
import time
from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import kernels
from .kernels import KernelKind
from .taskgen import Mode, Step, Task, TaskStream
from .tile_matrix import TileId, TileMatrix


class HazardKind(enum.Enum):
    RAW = "RAW"
    WAR = "WAR"
    WAW = "WAW"


# Census categories: hazards between kernel tasks within one step, between
# kernel tasks of different steps, and hazards with a copy task on either end.
INTRA_STEP = "intra_step"
CROSS_STEP = "cross_step"
COPY_RELATED = "copy_related"


@dataclass(frozen=True)
class DagEdge:
    src: int
    dst: int
    kind: HazardKind | None  # None for barrier-induced edges
    tile: TileId | None
    barrier: bool = False


class TaskDag:
    """Nodes are tasks (by id); edges are hazards plus barrier orderings.

    edge_stats is recorded at build time, before any pruning, and carried
    through prune() so hazard accounting survives edge removal.
    """

    def __init__(self, tasks: list[Task], edges: list[DagEdge], stream: TaskStream,
                 edge_stats: dict | None = None):
        self.tasks = tasks
        self.edges = edges
        self.stream = stream
        self.succ: list[list[int]] = [[] for _ in tasks]
        self.pred: list[list[int]] = [[] for _ in tasks]
        seen = set()
        for e in edges:
            if (e.src, e.dst) not in seen:
                seen.add((e.src, e.dst))
                self.succ[e.src].append(e.dst)
                self.pred[e.dst].append(e.src)
        for adj in self.succ:
            adj.sort()
        for adj in self.pred:
            adj.sort()
        self.edge_stats = edge_stats if edge_stats is not None else _census(tasks, edges)

    def __len__(self) -> int:
        return len(self.tasks)


def _census(tasks: list[Task], edges: list[DagEdge]) -> dict:
    stats = {k: Counter() for k in HazardKind}
    for e in edges:
        if e.kind is None:
            continue
        if tasks[e.src].is_copy or tasks[e.dst].is_copy:
            cat = COPY_RELATED
        elif tasks[e.src].step is tasks[e.dst].step:
            cat = INTRA_STEP
        else:
            cat = CROSS_STEP
        stats[e.kind][cat] += 1
    return stats


def build_dag(stream: TaskStream) -> TaskDag:
    """Derive the hazard DAG from a stream's declared tile accesses.

    Barrier markers become explicit edges: every pre-barrier task must
    precede every post-barrier task. The full cross product is transitively
    redundant, so only prefix sinks are linked to suffix sources, which
    preserves exactly the same reachability.
    """
    tasks = stream.tasks
    edges: list[DagEdge] = []
    last_writer: dict[TileId, int] = {}
    readers: dict[TileId, list[int]] = {}

    for task in tasks:
        pair_has_raw = set()
        for acc in task.accesses:
            if acc.mode in (Mode.READ, Mode.READWRITE):
                u = last_writer.get(acc.tile)
                if u is not None:
                    edges.append(DagEdge(u, task.id, HazardKind.RAW, acc.tile))
                    pair_has_raw.add((u, acc.tile))
        for acc in task.accesses:
            if acc.mode in (Mode.READWRITE, Mode.WRITE):
                for r in readers.get(acc.tile, ()):
                    edges.append(DagEdge(r, task.id, HazardKind.WAR, acc.tile))
                u = last_writer.get(acc.tile)
                if u is not None and (u, acc.tile) not in pair_has_raw:
                    edges.append(DagEdge(u, task.id, HazardKind.WAW, acc.tile))
        for acc in task.accesses:
            if acc.mode in (Mode.READ, Mode.READWRITE):
                readers.setdefault(acc.tile, []).append(task.id)
        for acc in task.accesses:
            if acc.mode in (Mode.READWRITE, Mode.WRITE):
                last_writer[acc.tile] = task.id
                readers[acc.tile] = []

    stats = _census(tasks, edges)
    for pos in sorted(stream.barriers):
        edges.extend(_barrier_edges(len(tasks), edges, pos))
    return TaskDag(tasks, edges, stream, stats)


def _barrier_edges(n: int, edges: list[DagEdge], pos: int) -> list[DagEdge]:
    has_out = [False] * n
    has_in = [False] * n
    for e in edges:
        if e.src < pos and e.dst < pos:
            has_out[e.src] = True
        if e.src >= pos and e.dst >= pos:
            has_in[e.dst] = True
    sinks = [u for u in range(pos) if not has_out[u]]
    sources = [v for v in range(pos, n) if not has_in[v]]
    return [DagEdge(u, v, None, None, barrier=True) for u in sinks for v in sources]


def prune(dag: TaskDag) -> TaskDag:
    """Drop transitively redundant edges; reachability (and therefore every
    critical path) is unchanged. Hazard statistics carry over unmodified."""
    n = len(dag)
    reach = [0] * n  # bitset of nodes reachable from i (excluding i)
    for u in range(n - 1, -1, -1):
        r = 0
        for v in dag.succ[u]:
            r |= (1 << v) | reach[v]
        reach[u] = r
    kept = [
        e for e in dag.edges
        if not any(
            w != e.dst and (reach[w] >> e.dst) & 1 for w in dag.succ[e.src]
        )
    ]
    kept.sort(key=lambda e: (e.src, e.dst))
    return TaskDag(dag.tasks, kept, dag.stream, dag.edge_stats)


def ready_set(dag: TaskDag, completed: set[int]) -> set[int]:
    """Tasks whose predecessors are all completed and that are not themselves
    completed. `completed` must be downward-closed."""
    return {
        t.id for t in dag.tasks
        if t.id not in completed and all(p in completed for p in dag.pred[t.id])
    }


class ExecutionError(RuntimeError):
    """Wrapper carrying the stream-order-first task failure."""

    def __init__(self, task: Task, cause: BaseException):
        self.task = task
        self.cause = cause
        super().__init__(f"task {task.id} {task} failed: {cause}")


class InvalidStreamError(ValueError):
    """Stream and matrix disagree on tiling."""


def _gemm_shape(step: Step) -> tuple[bool, int]:
    if step is Step.CHOLESKY:
        return False, -1
    if step is Step.TRINV:
        return False, 1
    return True, 1


def run_task(task: Task, store: dict[TileId, np.ndarray]) -> np.ndarray:
    """Apply one task's kernel to the current store contents; returns the
    fresh output tile (the store itself is not modified)."""
    ops = [store[a.tile] for a in task.reads]
    if task.is_copy:
        return ops[0].copy()
    out = store.get(task.output.tile)
    kind = task.kind
    if kind is KernelKind.POTRF:
        return kernels.potrf(out)
    if kind is KernelKind.TRSM:
        return kernels.trsm_right_lt(out, ops[0])
    if kind is KernelKind.SYRK_SUB:
        return kernels.syrk_sub(out, ops[0])
    if kind is KernelKind.SYRK_ADD_T:
        return kernels.syrk_add_t(out, ops[0])
    if kind is KernelKind.GEMM:
        trans_a, sign = _gemm_shape(task.step)
        return kernels.gemm(out, ops[0], ops[1], trans_a, sign)
    if kind is KernelKind.TRTRI:
        return kernels.trtri(out)
    if kind is KernelKind.TRMM_LEFT:
        return kernels.trmm_left(out, ops[0])
    if kind is KernelKind.TRMM_RIGHT_NEG:
        return kernels.trmm_right_neg(out, ops[0])
    if kind is KernelKind.TRMM_LEFT_T:
        return kernels.trmm_left_t(out, ops[0])
    if kind is KernelKind.LAUUM:
        return kernels.lauum(out)
    raise ValueError(f"unknown kernel kind {kind!r}")


def _make_store(a: TileMatrix) -> dict[TileId, np.ndarray]:
    return {tid: a.tile(tid.row, tid.col) for tid in a.lower_ids()}


def _writeback(a: TileMatrix, store: dict[TileId, np.ndarray]) -> TileMatrix:
    for tid in a.lower_ids():
        a.set_tile(tid.row, tid.col, store[tid])
    return a


def run_in_order(stream: TaskStream, a: TileMatrix, order=None) -> TileMatrix:
    """Execute a stream on one thread following `order` (default: stream
    order). Any topological order gives the same bits as stream order."""
    store = _make_store(a)
    tasks = stream.tasks if order is None else [stream.tasks[i] for i in order]
    for task in tasks:
        try:
            store[task.output.tile] = run_task(task, store)
        except Exception as exc:
            raise ExecutionError(task, exc) from exc
    return _writeback(a, store)


def execute(stream: TaskStream, a: TileMatrix, workers: int = 1,
            trace_path=None) -> TileMatrix:
    """Run the stream's DAG on `workers` threads, updating `a` in place.

    Ready tasks are dispatched in ascending task id. On a kernel failure no
    further task starts, in-flight tasks drain, and the failure with the
    smallest task id is raised; `a` is left partially updated.

    With trace_path set, writes one CSV row per task:
    task id, kind, indices, worker, start, end (ns since run start).
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    if a.t != stream.t:
        raise InvalidStreamError(
            f"stream generated for t={stream.t} cannot run on a t={a.t} matrix")

    dag = build_dag(stream)
    store = _make_store(a)
    n = len(dag)
    indeg = [len(dag.pred[i]) for i in range(n)]

    ready: list[int] = [i for i in range(n) if indeg[i] == 0]
    heapq.heapify(ready)
    work_q: queue.Queue = queue.Queue()
    done_q: queue.Queue = queue.Queue()
    lock = threading.Lock()
    failures: list[tuple[int, BaseException]] = []
    trace_rows: list[tuple] = []
    t0 = time.perf_counter_ns()

    def worker_loop(worker_idx: int):
        while True:
            tid = work_q.get()
            if tid is None:
                return
            task = stream.tasks[tid]
            start = time.perf_counter_ns() - t0
            try:
                result = run_task(task, store)
            except Exception as exc:
                done_q.put((tid, exc, worker_idx, start, time.perf_counter_ns() - t0))
                continue
            with lock:
                store[task.output.tile] = result
            done_q.put((tid, None, worker_idx, start, time.perf_counter_ns() - t0))

    threads = [
        threading.Thread(target=worker_loop, args=(w,), daemon=True)
        for w in range(workers)
    ]
    for th in threads:
        th.start()

    in_flight = 0
    completed = 0
    try:
        while True:
            while ready and in_flight < workers and not failures:
                work_q.put(heapq.heappop(ready))
                in_flight += 1
            if in_flight == 0:
                break
            tid, exc, widx, start, end = done_q.get()
            in_flight -= 1
            task = stream.tasks[tid]
            if exc is not None:
                failures.append((tid, exc))
                continue
            completed += 1
            if trace_path is not None:
                trace_rows.append(
                    (tid, task.kind_name,
                     ";".join(str(i) for i in task.indices), widx, start, end))
            for s in dag.succ[tid]:
                indeg[s] -= 1
                if indeg[s] == 0:
                    heapq.heappush(ready, s)
    finally:
        for _ in threads:
            work_q.put(None)
        for th in threads:
            th.join()

    if failures:
        tid, exc = min(failures, key=lambda f: f[0])
        raise ExecutionError(stream.tasks[tid], exc) from exc
    assert completed == n
    if trace_path is not None:
        _write_trace(trace_path, trace_rows)
    return _writeback(a, store)


def _write_trace(path, rows: list[tuple]) -> None:
    with open(path, "w") as fh:
        fh.write("task_id,kind,indices,worker,start_ns,end_ns\n")
        for row in sorted(rows):
            fh.write(",".join(str(x) for x in row) + "\n")

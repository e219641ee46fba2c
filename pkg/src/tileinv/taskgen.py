"""Sequential task-stream generation for the three-step tile inversion.

Each generator unrolls one step of the algorithm into an ordered list of
tasks, every task declaring exactly which tiles it reads and which single
tile it read-writes. That access list is the only information the scheduler
needs to unfold the stream into a dependency DAG.

Variants:
  * placement   - in-place updates of A, or out-of-place with working arrays
                  B (snapshot of the Cholesky factor, read by step-2 GEMMs)
                  and C (snapshot of the inverted factor, read by all step-3
                  operands except the output). The snapshots retarget reads
                  away from tiles that later tasks overwrite, which removes
                  every intra-step anti-dependence among kernel tasks.
  * loop order  - direction of the innermost multiply-accumulate loop of
                  each step, 'U' ascending / 'D' descending; the accumulation
                  is commutative so only the schedule changes, never the math.
  * pipelining  - with pipelining off, a barrier marker separates consecutive
                  steps; with it on, the merged stream carries no barriers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .kernels import KernelKind
from .tile_matrix import InvalidSizeError, TileId


class Mode(enum.Enum):
    READ = "R"
    READWRITE = "RW"
    WRITE = "W"  # used only by working-array copy tasks


class Step(enum.Enum):
    CHOLESKY = "1"
    TRINV = "2"
    PRODUCT = "3"
    COPY = "copy"


class Placement(enum.Enum):
    IN_PLACE = "in"
    OUT_OF_PLACE = "out"


@dataclass(frozen=True)
class Access:
    tile: TileId
    mode: Mode


@dataclass(frozen=True)
class Task:
    """One tile-kernel invocation with its declared tile accesses.

    Read accesses appear in kernel-operand order; the output access
    (READWRITE, or WRITE for copies) is last. kind is None for copy tasks.
    """

    id: int
    kind: KernelKind | None
    indices: tuple[int, ...]
    accesses: tuple[Access, ...]
    step: Step

    @property
    def is_copy(self) -> bool:
        return self.step is Step.COPY

    @property
    def output(self) -> Access:
        return self.accesses[-1]

    @property
    def reads(self) -> tuple[Access, ...]:
        return self.accesses[:-1]

    @property
    def kind_name(self) -> str:
        return "COPY" if self.kind is None else self.kind.value

    def __str__(self) -> str:
        idx = ",".join(str(i) for i in self.indices)
        return f"{self.kind_name}({idx})"


def parse_loops(loops: str) -> str:
    """Validate a per-step loop-direction triple such as 'UDU'."""
    if len(loops) != 3 or any(ch not in "UD" for ch in loops):
        raise ValueError(f"loop order must match [UD]{{3}}, got {loops!r}")
    return loops


# Directions the paper's hand-tuned configuration maps to, per step. The
# innermost accumulate loop of step 2 runs over k in (j, i); the minimal
# critical path for that step needs the descending sweep, which is what the
# 'D' letter selects (confirmed by the exhaustive loop-order sweep in
# dag_analysis and its tests).
DEFAULT_LOOPS = "UDU"


@dataclass(frozen=True)
class VariantConfig:
    """Placement, per-step loop directions, pipelining, and worker count."""

    placement: Placement = Placement.IN_PLACE
    loops: str = DEFAULT_LOOPS
    pipelined: bool = True
    workers: int = 1

    def __post_init__(self):
        parse_loops(self.loops)
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")

    def describe(self) -> str:
        pipe = "pipelined" if self.pipelined else "barriered"
        return f"{self.placement.value}-place {self.loops} {pipe}"


@dataclass
class TaskStream:
    """Ordered task list plus barrier positions and the generating variant.

    A barrier at position p orders every task with id < p before every task
    with id >= p. Barriers only ever sit between steps.
    """

    tasks: list[Task]
    barriers: set[int] = field(default_factory=set)
    t: int = 0
    steps: tuple[Step, ...] = ()
    placement: Placement = Placement.IN_PLACE
    loops: str = DEFAULT_LOOPS

    @property
    def pipelined(self) -> bool:
        return not self.barriers

    def describe(self) -> str:
        names = "+".join(s.value for s in self.steps)
        pipe = "pipelined" if self.pipelined else "barriered"
        return f"step {names} {self.placement.value}-place {self.loops} {pipe} t={self.t}"


def _krange(lo: int, hi: int, direction: str) -> range:
    """Half-open [lo, hi) walked ascending for 'U', descending for 'D'."""
    if direction == "U":
        return range(lo, hi)
    return range(hi - 1, lo - 1, -1)


class _Builder:
    def __init__(self):
        self.tasks: list[Task] = []

    def add(self, kind, step, indices, reads, output, out_mode=Mode.READWRITE):
        accesses = tuple(Access(r, Mode.READ) for r in reads) + (Access(output, out_mode),)
        self.tasks.append(Task(len(self.tasks), kind, indices, accesses, step))

    def add_copies(self, t: int, src_label: str, dst_label: str):
        """One copy task per lower tile, row-major; output is write-only."""
        for r in range(t):
            for c in range(r + 1):
                self.add(None, Step.COPY, (r, c),
                         [TileId(src_label, r, c)], TileId(dst_label, r, c),
                         out_mode=Mode.WRITE)


def _check_t(t: int):
    if t < 1:
        raise InvalidSizeError(f"tile count must be >= 1, got {t}")


def _step1_into(bld: _Builder, t: int, direction: str):
    A = lambda i, j: TileId("A", i, j)
    for j in range(t):
        for k in range(j):
            bld.add(KernelKind.SYRK_SUB, Step.CHOLESKY, (j, k), [A(j, k)], A(j, j))
        bld.add(KernelKind.POTRF, Step.CHOLESKY, (j,), [], A(j, j))
        for i in range(j + 1, t):
            for k in _krange(0, j, direction):
                bld.add(KernelKind.GEMM, Step.CHOLESKY, (i, j, k),
                        [A(i, k), A(j, k)], A(i, j))
        for i in range(j + 1, t):
            bld.add(KernelKind.TRSM, Step.CHOLESKY, (i, j), [A(j, j)], A(i, j))


def _step2_into(bld: _Builder, t: int, direction: str, placement: Placement):
    A = lambda i, j: TileId("A", i, j)
    out_of_place = placement is Placement.OUT_OF_PLACE
    if out_of_place and t > 1:
        bld.add_copies(t, "A", "B")
    col = (lambda k, j: TileId("B", k, j)) if out_of_place else A
    for j in range(t - 1, -1, -1):
        bld.add(KernelKind.TRTRI, Step.TRINV, (j,), [], A(j, j))
        for i in range(t - 1, j, -1):
            bld.add(KernelKind.TRMM_LEFT, Step.TRINV, (i, j), [A(i, i)], A(i, j))
            for k in _krange(j + 1, i, direction):
                bld.add(KernelKind.GEMM, Step.TRINV, (i, j, k),
                        [A(i, k), col(k, j)], A(i, j))
            bld.add(KernelKind.TRMM_RIGHT_NEG, Step.TRINV, (i, j), [A(j, j)], A(i, j))


def _step3_into(bld: _Builder, t: int, direction: str, placement: Placement):
    A = lambda i, j: TileId("A", i, j)
    out_of_place = placement is Placement.OUT_OF_PLACE
    if out_of_place and t > 1:
        bld.add_copies(t, "A", "C")
    src = (lambda k, i: TileId("C", k, i)) if out_of_place else A
    for i in range(t):
        for j in range(i):
            bld.add(KernelKind.TRMM_LEFT_T, Step.PRODUCT, (i, j), [src(i, i)], A(i, j))
        bld.add(KernelKind.LAUUM, Step.PRODUCT, (i,), [], A(i, i))
        for j in range(i):
            for k in _krange(i + 1, t, direction):
                bld.add(KernelKind.GEMM, Step.PRODUCT, (i, j, k),
                        [src(k, i), src(k, j)], A(i, j))
        for k in range(i + 1, t):
            bld.add(KernelKind.SYRK_ADD_T, Step.PRODUCT, (i, k), [src(k, i)], A(i, i))


def _stream(bld: _Builder, t, steps, placement, loops, barriers=None) -> TaskStream:
    return TaskStream(bld.tasks, barriers or set(), t, steps, placement, loops)


def gen_step1(t: int, direction: str = "U") -> TaskStream:
    """Tile Cholesky factorization of A into its lower factor."""
    _check_t(t)
    bld = _Builder()
    _step1_into(bld, t, direction)
    return _stream(bld, t, (Step.CHOLESKY,), Placement.IN_PLACE, direction * 3)


def gen_step2(t: int, direction: str = "D",
              placement: Placement = Placement.IN_PLACE) -> TaskStream:
    """Tile inversion of the lower factor (working array B when out-of-place)."""
    _check_t(t)
    bld = _Builder()
    _step2_into(bld, t, direction, placement)
    return _stream(bld, t, (Step.TRINV,), placement, direction * 3)


def gen_step3(t: int, direction: str = "U",
              placement: Placement = Placement.IN_PLACE) -> TaskStream:
    """Product of the inverted factor with its transpose (working array C)."""
    _check_t(t)
    bld = _Builder()
    _step3_into(bld, t, direction, placement)
    return _stream(bld, t, (Step.PRODUCT,), placement, direction * 3)


def gen_inversion(t: int, config: VariantConfig) -> TaskStream:
    """Full three-step stream; barrier markers between steps unless pipelined."""
    _check_t(t)
    bld = _Builder()
    barriers: set[int] = set()
    _step1_into(bld, t, config.loops[0])
    if not config.pipelined:
        barriers.add(len(bld.tasks))
    _step2_into(bld, t, config.loops[1], config.placement)
    if not config.pipelined:
        barriers.add(len(bld.tasks))
    _step3_into(bld, t, config.loops[2], config.placement)
    return _stream(bld, t, (Step.CHOLESKY, Step.TRINV, Step.PRODUCT),
                   config.placement, config.loops, barriers)


def format_stream(stream: TaskStream) -> str:
    """Line-oriented text form: `<id> <step> <kind>(<indices>) R:<tiles> RW:<tile>`."""
    lines = []
    for task in stream.tasks:
        if task.id in stream.barriers:
            lines.append("BARRIER")
        reads = ",".join(str(a.tile) for a in task.reads) or "-"
        lines.append(
            f"{task.id} {task.step.value} {task} R:{reads} RW:{task.output.tile}"
        )
    return "\n".join(lines) + "\n"

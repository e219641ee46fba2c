"""Critical-path and hazard analysis of task DAGs, plus DOT export.

Path length is counted in tasks (nodes), not edges, and copy tasks count
zero: they still order execution but the published per-variant path formulas
only make sense for kernel tasks. The copy-inclusive length is reported
alongside for transparency.
"""

from __future__ import annotations

from dataclasses import dataclass

from .scheduler import HazardKind, TaskDag, build_dag
from .taskgen import (
    Placement,
    Step,
    TaskStream,
    VariantConfig,
    gen_inversion,
    gen_step1,
    gen_step2,
    gen_step3,
)


@dataclass
class PathReport:
    """Longest-chain measurement of one variant's DAG."""

    variant: str
    t: int
    critical_path: int
    node_count: int
    edge_counts: dict
    witness: list[int]
    copy_inclusive_path: int

    def __str__(self) -> str:
        return (
            f"{self.variant}: critical path {self.critical_path} tasks "
            f"({self.node_count} kernel tasks, "
            f"{self.copy_inclusive_path} counting copies)"
        )


def critical_path(dag: TaskDag) -> PathReport:
    """Longest chain by dynamic programming over the (id-ascending) topological
    order. The witness records the kernel tasks of one maximal chain."""
    n = len(dag)
    weight = [0 if t.is_copy else 1 for t in dag.tasks]
    dist = [0] * n
    parent = [-1] * n
    for v in range(n):
        best, who = 0, -1
        for u in dag.pred[v]:
            if dist[u] > best:
                best, who = dist[u], u
        dist[v] = best + weight[v]
        parent[v] = who
    dist_all = [0] * n
    for v in range(n):
        dist_all[v] = 1 + max((dist_all[u] for u in dag.pred[v]), default=0)

    end = max(range(n), key=lambda v: (dist[v], -v)) if n else -1
    witness: list[int] = []
    v = end
    while v != -1:
        if not dag.tasks[v].is_copy:
            witness.append(v)
        v = parent[v]
    witness.reverse()

    kernel_nodes = sum(weight)
    counts = {k: sum(dag.edge_stats[k].values()) for k in HazardKind}
    return PathReport(
        variant=dag.stream.describe(),
        t=dag.stream.t,
        critical_path=dist[end] if n else 0,
        node_count=kernel_nodes,
        edge_counts=counts,
        witness=witness,
        copy_inclusive_path=max(dist_all, default=0),
    )


def hazard_census(dag: TaskDag) -> dict:
    """Edge counts per hazard kind, split intra-step / cross-step / copy-related.

    Uses the statistics frozen at DAG build time, so pruning cannot skew them.
    """
    out = {}
    for kind in HazardKind:
        cats = dag.edge_stats[kind]
        out[kind] = {
            "intra_step": cats.get("intra_step", 0),
            "cross_step": cats.get("cross_step", 0),
            "copy_related": cats.get("copy_related", 0),
            "total": sum(cats.values()),
        }
    return out


def weak_components(dag: TaskDag, include_copies: bool = False) -> int:
    """Number of weakly-connected components, by default among kernel tasks
    only (edges touching a copy task are ignored)."""
    ids = [t.id for t in dag.tasks if include_copies or not t.is_copy]
    parent = {i: i for i in ids}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in dag.edges:
        if e.src in parent and e.dst in parent:
            parent[find(e.src)] = find(e.dst)
    return len({find(i) for i in ids})


# -- formula verification ----------------------------------------------------

# (name, builder(t) -> TaskStream, formula(t) -> int). The per-step rows are
# the published critical-path table; the full-pipeline and penalty rows come
# from the pipelining and loop-reversal analyses.
def _full(t, placement, pipelined, loops="UDU"):
    return gen_inversion(t, VariantConfig(placement, loops, pipelined))


FORMULAS: list[tuple] = [
    ("step1/in", lambda t: gen_step1(t, "U"), lambda t: 3 * t - 2),
    ("step1/out", lambda t: gen_step1(t, "U"), lambda t: 3 * t - 2),
    ("step2/in", lambda t: gen_step2(t, "D", Placement.IN_PLACE), lambda t: 3 * t - 3),
    ("step2/out", lambda t: gen_step2(t, "D", Placement.OUT_OF_PLACE), lambda t: 2 * t - 1),
    ("step3/in", lambda t: gen_step3(t, "U", Placement.IN_PLACE), lambda t: 3 * t - 2),
    ("step3/out", lambda t: gen_step3(t, "U", Placement.OUT_OF_PLACE), lambda t: t),
    ("full/in/barriered", lambda t: _full(t, Placement.IN_PLACE, False), lambda t: 9 * t - 7),
    ("full/in/pipelined", lambda t: _full(t, Placement.IN_PLACE, True), lambda t: 9 * t - 9),
    ("full/out/barriered", lambda t: _full(t, Placement.OUT_OF_PLACE, False), lambda t: 6 * t - 3),
    ("full/out/pipelined", lambda t: _full(t, Placement.OUT_OF_PLACE, True), lambda t: 5 * t - 2),
    ("step2/in/UUU", lambda t: gen_step2(t, "U", Placement.IN_PLACE),
     lambda t: t * t - 2 * t + 3),
    ("step2/out/UUU", lambda t: gen_step2(t, "U", Placement.OUT_OF_PLACE),
     lambda t: t * (t - 1) // 2 + 2),
]


@dataclass
class FormulaRow:
    variant: str
    t: int
    measured: int
    formula: int

    @property
    def match(self) -> bool:
        return self.measured == self.formula

    def csv(self) -> str:
        return f"{self.variant},{self.t},{self.measured},{self.formula},{str(self.match).lower()}"


def formula_table(t_range, variants=None) -> list[FormulaRow]:
    """Measure critical paths over t_range and compare with the closed forms.

    Formulas hold for t >= 2; degenerate t=1 streams disagree with several of
    them (e.g. 3t-3 = 0 against a one-task step), so callers keep t_range
    within 2 and up.
    """
    rows = []
    for name, builder, formula in FORMULAS:
        if variants is not None and name not in variants:
            continue
        for t in t_range:
            report = critical_path(build_dag(builder(t)))
            rows.append(FormulaRow(name, t, report.critical_path, formula(t)))
    return rows


def formula_csv(rows: list[FormulaRow]) -> str:
    return "variant,t,measured,formula,match\n" + "\n".join(r.csv() for r in rows) + "\n"


def sweep_loop_orders(t: int) -> dict:
    """Critical path of every step and placement under both directions, plus
    of the full pipeline under all 8 loop-order triples.

    Returns {"steps": {(step, placement, direction): path},
             "full": {(placement, loops): path}}.
    """
    steps = {}
    for direction in "UD":
        steps[("step1", "in", direction)] = critical_path(
            build_dag(gen_step1(t, direction))).critical_path
        for placement in Placement:
            steps[("step2", placement.value, direction)] = critical_path(
                build_dag(gen_step2(t, direction, placement))).critical_path
            steps[("step3", placement.value, direction)] = critical_path(
                build_dag(gen_step3(t, direction, placement))).critical_path
    full = {}
    for placement in Placement:
        for d1 in "UD":
            for d2 in "UD":
                for d3 in "UD":
                    loops = d1 + d2 + d3
                    full[(placement.value, loops)] = critical_path(
                        build_dag(_full(t, placement, True, loops))).critical_path
    return {"steps": steps, "full": full}


# -- DOT export ---------------------------------------------------------------

_EDGE_STYLE = {
    HazardKind.RAW: 'color="black"',
    HazardKind.WAR: 'color="red" style="dashed"',
    HazardKind.WAW: 'color="blue" style="dotted"',
    None: 'color="gray60" style="dashed" arrowhead="empty"',
}


def export_dot(dag: TaskDag, include_copies: bool = True, title: str | None = None) -> str:
    """Render the DAG as deterministic Graphviz DOT text.

    Nodes are labeled KIND(i,j[,k]); hazard kinds pick the edge style; copy
    tasks (and barrier-induced edges) are drawn grayed out.
    """
    lines = [f'digraph "{title or dag.stream.describe()}" {{']
    lines.append('  node [shape=box fontname="Helvetica"];')
    for task in dag.tasks:
        if task.is_copy and not include_copies:
            continue
        style = ' style="dashed" color="gray60"' if task.is_copy else ""
        lines.append(f'  n{task.id} [label="{task}"{style}];')
    for e in sorted(dag.edges, key=lambda e: (e.src, e.dst, e.kind is None,
                                              str(e.kind), str(e.tile))):
        if not include_copies and (dag.tasks[e.src].is_copy or dag.tasks[e.dst].is_copy):
            continue
        style = _EDGE_STYLE[e.kind]
        label = f' [label="{e.tile}" {style}]' if e.tile is not None else f" [{style}]"
        lines.append(f"  n{e.src} -> n{e.dst}{label};")
    lines.append("}")
    return "\n".join(lines) + "\n"

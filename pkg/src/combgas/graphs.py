"""Finite simple graphs, builders, perturbations, and amenability measures.

Vertices are identified by coordinate tuples (integers, variable arity) so that
the finite volumes of an exhaustion include into each other honestly: the box
[-n,n]^d uses labels (j1,...,jd), the chain [-n,n] uses (j,), and a comb
product uses base-label + fiber-label concatenation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import sparse

MAX_DEGREE = 64


class GraphBuildError(ValueError):
    pass


@dataclass(frozen=True)
class Graph:
    """Finite simple undirected graph with stable ids and coordinate labels.

    Immutable after build; `adjacency[v]` is the sorted tuple of neighbors of
    vertex id v and `labels[v]` its coordinate tuple.
    """

    labels: tuple
    adjacency: tuple
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index",
                           {lab: i for i, lab in enumerate(self.labels)})

    @property
    def vertex_count(self):
        return len(self.labels)

    @property
    def edge_count(self):
        return sum(len(a) for a in self.adjacency) // 2

    def id_of(self, label):
        return self._index[tuple(label)]

    def has_vertex(self, label):
        return tuple(label) in self._index

    def degree(self, v):
        return len(self.adjacency[v])

    @property
    def max_degree(self):
        return max((len(a) for a in self.adjacency), default=0)

    def has_edge(self, u, v):
        return v in self.adjacency[u]

    def edges(self):
        for u, nbrs in enumerate(self.adjacency):
            for v in nbrs:
                if u < v:
                    yield (u, v)

    def is_connected(self):
        n = self.vertex_count
        if n == 0:
            return True
        seen = np.zeros(n, dtype=bool)
        stack = [0]
        seen[0] = True
        count = 1
        while stack:
            u = stack.pop()
            for v in self.adjacency[u]:
                if not seen[v]:
                    seen[v] = True
                    count += 1
                    stack.append(v)
        return count == n

    def adjacency_matrix(self):
        n = self.vertex_count
        rows, cols = [], []
        for u, nbrs in enumerate(self.adjacency):
            rows.extend([u] * len(nbrs))
            cols.extend(nbrs)
        data = np.ones(len(rows))
        return sparse.csr_matrix((data, (rows, cols)), shape=(n, n))

    def laplacian_matrix(self):
        a = self.adjacency_matrix()
        deg = np.asarray([self.degree(v) for v in range(self.vertex_count)],
                         dtype=float)
        return sparse.diags(deg).tocsr() - a

    def to_json(self):
        return json.dumps({
            "labels": [list(l) for l in self.labels],
            "edges": [[u, v] for u, v in self.edges()],
        })

    def to_edge_list(self):
        """Plain text export: `u v` per edge line, then a label table."""
        lines = ["%d %d" % (u, v) for u, v in self.edges()]
        lines.append("# labels")
        for i, lab in enumerate(self.labels):
            lines.append("# %d %s" % (i, ",".join(str(c) for c in lab)))
        return "\n".join(lines) + "\n"


def from_edges(labels, edge_labels, max_degree=MAX_DEGREE):
    """Build a Graph from coordinate labels and label-pair edges."""
    labels = tuple(tuple(l) for l in labels)
    index = {}
    for i, lab in enumerate(labels):
        if lab in index:
            raise GraphBuildError("duplicate vertex label %r" % (lab,))
        index[lab] = i
    adj = [set() for _ in labels]
    for a, b in edge_labels:
        u, v = index[tuple(a)], index[tuple(b)]
        if u == v:
            raise GraphBuildError("self-loop at %r" % (a,))
        adj[u].add(v)
        adj[v].add(u)
    for i, nbrs in enumerate(adj):
        if len(nbrs) > max_degree:
            raise GraphBuildError(
                "degree %d at %r exceeds cap %d" % (len(nbrs), labels[i], max_degree))
    return Graph(labels, tuple(tuple(sorted(n)) for n in adj))


def graph_from_json(text):
    doc = json.loads(text)
    labels = [tuple(l) for l in doc["labels"]]
    edges = [(labels[u], labels[v]) for u, v in doc["edges"]]
    return from_edges(labels, edges)


def build_lattice_box(d, n, boundary="free"):
    """Box [-n,n]^d with free or periodic (modulo 2n+1) nearest-neighbor edges."""
    if d < 1:
        raise GraphBuildError("d must be >= 1")
    if boundary not in ("free", "periodic"):
        raise GraphBuildError("boundary must be free or periodic")
    side = 2 * n + 1
    coords = [tuple(c) for c in np.stack(np.meshgrid(
        *[np.arange(-n, n + 1)] * d, indexing="ij"), axis=-1).reshape(-1, d)]
    coords = [tuple(int(x) for x in c) for c in coords]
    edges = []
    for c in coords:
        for ax in range(d):
            nb = list(c)
            nb[ax] += 1
            if nb[ax] > n:
                if boundary == "periodic" and side > 2:
                    nb[ax] -= side
                else:
                    continue
            nbt = tuple(nb)
            if nbt != c:
                edges.append((c, nbt))
    # periodic side==2 would duplicate edges; side is always odd here
    return from_edges(coords, set(tuple(sorted(e)) for e in edges))


def build_chain(n):
    """Path graph on [-n,n] with labels (j,); anchor is (0,)."""
    labels = [(j,) for j in range(-n, n + 1)]
    edges = [((j,), (j + 1,)) for j in range(-n, n)]
    return from_edges(labels, edges)


def build_cycle(m):
    """Cycle on m >= 3 vertices, labels (j,) for j = 0..m-1 (test oracle)."""
    if m < 3:
        raise GraphBuildError("cycle needs >= 3 vertices")
    labels = [(j,) for j in range(m)]
    edges = [((j,), ((j + 1) % m,)) for j in range(m)]
    return from_edges(labels, edges)


def comb_product(base, fiber, root):
    """Comb product: fibers attached at `root`, base edges along the root copy.

    (g,h) ~ (g',h') iff (g = g' and h ~ h') or (h = h' = root and g ~ g').
    Labels are concatenated (base coords..., fiber coords...).
    """
    root = tuple(root)
    if not fiber.has_vertex(root):
        raise GraphBuildError("invalid fiber root %r" % (root,))
    labels = [bl + fl for bl in base.labels for fl in fiber.labels]
    edges = []
    for bl in base.labels:
        for (u, v) in fiber.edges():
            edges.append((bl + fiber.labels[u], bl + fiber.labels[v]))
    for (u, v) in base.edges():
        edges.append((base.labels[u] + root, base.labels[v] + root))
    return from_edges(labels, edges)


@dataclass(frozen=True)
class Perturbation:
    """Edge edits on a base graph plus optional finite attachments.

    `attached` is a tuple of (graph, links) pairs; links are (attached_label,
    base_label) pairs wiring new vertices into the base.
    """

    removed_edges: tuple = ()
    added_edges: tuple = ()
    attached: tuple = ()

    def __post_init__(self):
        rem = {tuple(sorted((tuple(a), tuple(b)))) for a, b in self.removed_edges}
        add = {tuple(sorted((tuple(a), tuple(b)))) for a, b in self.added_edges}
        if rem & add:
            raise GraphBuildError("added and removed edge sets must be disjoint")


@dataclass(frozen=True)
class PerturbationBlocks:
    """The (D, C, B) data of a perturbed adjacency in block form.

    support: base labels spanning the ranges of D and C;
    d_block: symmetric matrix on support with +-1 entries for edge edits;
    c_block: 0/1 matrix, rows = support, columns = vertices of b_graph.
    """

    support: tuple
    d_block: np.ndarray
    c_block: np.ndarray
    b_graph: Graph


def apply_perturbation(g, p):
    """Apply edge edits and attachments; return (new graph, blocks)."""
    edges = {tuple(sorted(e)) for e in g.edges()}
    support = []
    support_ix = {}

    def sup(label):
        if label not in support_ix:
            support_ix[label] = len(support)
            support.append(label)
        return support_ix[label]

    d_entries = []
    for a, b in p.removed_edges:
        u, v = g.id_of(a), g.id_of(b)
        if tuple(sorted((u, v))) not in edges:
            raise GraphBuildError("edge to remove not present: %r-%r" % (a, b))
        edges.discard(tuple(sorted((u, v))))
        d_entries.append((sup(tuple(a)), sup(tuple(b)), -1.0))
    for a, b in p.added_edges:
        u, v = g.id_of(a), g.id_of(b)
        if tuple(sorted((u, v))) in edges:
            raise GraphBuildError("edge to add already present: %r-%r" % (a, b))
        if u == v:
            raise GraphBuildError("self-loop at %r" % (a,))
        edges.add(tuple(sorted((u, v))))
        d_entries.append((sup(tuple(a)), sup(tuple(b)), 1.0))

    new_labels = list(g.labels)
    new_edges = [(g.labels[u], g.labels[v]) for u, v in edges]
    b_labels = []
    c_entries = []
    for bg, links in p.attached:
        offset = len(b_labels)
        for lab in bg.labels:
            if lab in g._index or lab in set(b_labels):
                raise GraphBuildError("attached label %r clashes" % (lab,))
            b_labels.append(lab)
            new_labels.append(lab)
        for u, v in bg.edges():
            new_edges.append((bg.labels[u], bg.labels[v]))
        for alab, blab in links:
            alab, blab = tuple(alab), tuple(blab)
            if not bg.has_vertex(alab):
                raise GraphBuildError("dangling attachment vertex %r" % (alab,))
            if not g.has_vertex(blab):
                raise GraphBuildError("unknown base vertex %r" % (blab,))
            c_entries.append((sup(blab), offset + bg.id_of(alab)))
            new_edges.append((alab, blab))

    m = len(support)
    d_block = np.zeros((m, m))
    for i, j, val in d_entries:
        d_block[i, j] += val
        d_block[j, i] += val
    c_block = np.zeros((m, len(b_labels)))
    for i, j in c_entries:
        c_block[i, j] = 1.0
    b_graph = from_edges(b_labels, []) if not p.attached else _induced(
        b_labels, new_edges)
    blocks = PerturbationBlocks(tuple(support), d_block, c_block, b_graph)
    return from_edges(new_labels, new_edges), blocks


def _induced(labels, edge_labels):
    labset = set(labels)
    edges = [(a, b) for a, b in edge_labels
             if tuple(a) in labset and tuple(b) in labset]
    return from_edges(labels, edges)


def folner_ratio(family, n):
    """Exact boundary-to-volume ratio |F(Λn)|/|V(Λn)| of a family volume."""
    return family.folner(n)


def boundary_count(g, infinite_neighbors):
    """Vertices of g adjacent to the complement, via a neighbor rule.

    `infinite_neighbors(label)` yields the neighbor labels of a vertex in the
    infinite graph; a vertex is boundary when some neighbor lies outside g.
    """
    count = 0
    for lab in g.labels:
        if any(not g.has_vertex(nb) for nb in infinite_neighbors(lab)):
            count += 1
    return count


def symdiff_density(x, y, window):
    """Exact |(EX symdiff EY) ∩ E(window)| / |window| as a Fraction.

    Edges are counted when both endpoints lie in the window; x and y must
    agree on the window's vertex labels.
    """
    window = {tuple(w) for w in window}
    for w in window:
        if not x.has_vertex(w) or not y.has_vertex(w):
            raise GraphBuildError("window vertex %r missing" % (w,))

    def window_edges(g):
        out = set()
        for u, v in g.edges():
            lu, lv = g.labels[u], g.labels[v]
            if lu in window and lv in window:
                out.add(tuple(sorted((lu, lv))))
        return out

    diff = window_edges(x) ^ window_edges(y)
    return Fraction(len(diff), len(window))


# ---------------------------------------------------------------------------
# JSON graph description interface


_BUILDERS = {
    "lattice_box": lambda p: build_lattice_box(
        p["d"], p["n"], p.get("boundary", "free")),
    "chain": lambda p: build_chain(p["n"]),
    "cycle": lambda p: build_cycle(p["m"]),
}


def build_from_description(doc):
    """Build a graph from a JSON description {builder, params, perturbation}."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    name = doc.get("builder")
    if name == "comb":
        params = doc.get("params", {})
        base = build_from_description(params["base"])[0]
        fiber = build_from_description(params["fiber"])[0]
        g = comb_product(base, fiber, tuple(params["root"]))
    elif name in _BUILDERS:
        g = _BUILDERS[name](doc.get("params", {}))
    else:
        raise GraphBuildError("unknown builder %r" % (name,))
    blocks = None
    records = doc.get("perturbation", [])
    if records:
        removed, added, attached = [], [], []
        for rec in records:
            op = rec.get("op")
            if op == "add_edge":
                added.append((tuple(rec["u"]), tuple(rec["v"])))
            elif op == "remove_edge":
                removed.append((tuple(rec["u"]), tuple(rec["v"])))
            elif op == "attach":
                bg = graph_from_json(json.dumps(rec["graph"]))
                links = [(tuple(a), tuple(b)) for a, b in rec["links"]]
                attached.append((bg, links))
            else:
                raise GraphBuildError("unknown perturbation op %r" % (op,))
        g, blocks = apply_perturbation(g, Perturbation(
            tuple(removed), tuple(added), tuple(attached)))
    return g, blocks

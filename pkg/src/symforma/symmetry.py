"""Permutation groups acting on graphs, planar point groups, orbits and quotient gain graphs.

Vertices are 0-based inside the library. Scenario files and the CLI use
1-based labels; convert with :func:`perm_from_images` / :meth:`Graph.from_one_based`.
A permutation is a tuple of images, ``perm[i]`` being the image of vertex ``i``.
Composition follows function notation: ``compose(a, b)[i] == a[b[i]]``.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .exceptions import (
    ArgumentError,
    AssumptionError,
    CapacityError,
    RepresentationError,
    SymmetryError,
    UnsupportedActionError,
)

Permutation = tuple  # tuple[int, ...]

HOMOMORPHISM_TOL = 1e-12


# ---------------------------------------------------------------------------
# graphs and permutations


@dataclass(frozen=True)
class Graph:
    """Finite simple graph on vertices ``0..n-1``."""

    n: int
    edges: tuple

    def __init__(self, n: int, edges: Iterable[Sequence[int]]):
        if int(n) < 1:
            raise ArgumentError(f"vertex count must be positive, got {n}")
        normalized = set()
        for e in edges:
            i, j = (int(v) for v in e)
            if i == j:
                raise ArgumentError(f"self-loop at vertex {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ArgumentError(f"edge ({i}, {j}) has an endpoint outside 0..{n - 1}")
            key = (min(i, j), max(i, j))
            if key in normalized:
                raise ArgumentError(f"duplicate edge {key}")
            normalized.add(key)
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "edges", tuple(sorted(normalized)))

    @classmethod
    def from_one_based(cls, n, edges):
        return cls(n, [(i - 1, j - 1) for i, j in edges])

    @cached_property
    def edge_set(self) -> frozenset:
        return frozenset(self.edges)

    @cached_property
    def edge_index(self) -> dict:
        return {e: k for k, e in enumerate(self.edges)}

    @cached_property
    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n, self.n), dtype=bool)
        for i, j in self.edges:
            A[i, j] = A[j, i] = True
        return A

    def neighbors(self, v):
        return [int(u) for u in np.flatnonzero(self.adjacency[v])]

    def has_edge(self, i, j) -> bool:
        return (min(i, j), max(i, j)) in self.edge_set

    def laplacian(self) -> np.ndarray:
        A = self.adjacency.astype(float)
        return np.diag(A.sum(axis=1)) - A

    def incidence(self) -> np.ndarray:
        """n x m incidence matrix, edge ``(i, j)`` oriented as leaving ``i``."""
        E = np.zeros((self.n, len(self.edges)))
        for k, (i, j) in enumerate(self.edges):
            E[i, k] = 1.0
            E[j, k] = -1.0
        return E

    def is_connected(self) -> bool:
        seen = {0}
        queue = deque([0])
        while queue:
            v = queue.popleft()
            for u in self.neighbors(v):
                if u not in seen:
                    seen.add(u)
                    queue.append(u)
        return len(seen) == self.n


def identity(n: int) -> Permutation:
    return tuple(range(n))


def check_permutation(perm: Sequence[int], n: int | None = None) -> Permutation:
    perm = tuple(int(x) for x in perm)
    if n is not None and len(perm) != n:
        raise ArgumentError(f"permutation has length {len(perm)}, expected {n}")
    if sorted(perm) != list(range(len(perm))):
        raise ArgumentError(f"{perm} is not a bijection of 0..{len(perm) - 1}")
    return perm


def perm_from_images(images: Sequence[int], one_based: bool = True) -> Permutation:
    """Build a permutation from its image array (1-based by default, as in scenario files)."""
    offset = 1 if one_based else 0
    return check_permutation([x - offset for x in images])


def perm_from_cycles(n: int, cycles: Iterable[Sequence[int]], one_based: bool = True) -> Permutation:
    """``perm_from_cycles(4, [(1, 2, 4, 3)])`` is the map 1->2->4->3->1."""
    offset = 1 if one_based else 0
    images = list(range(n))
    for cyc in cycles:
        cyc = [c - offset for c in cyc]
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            images[a] = b
    return check_permutation(images, n)


def compose(a: Permutation, b: Permutation) -> Permutation:
    """``a o b``: apply ``b`` first, then ``a``."""
    return tuple(a[x] for x in b)


def invert(a: Permutation) -> Permutation:
    inv = [0] * len(a)
    for i, x in enumerate(a):
        inv[x] = i
    return tuple(inv)


def cycle_notation(perm: Permutation, one_based: bool = True) -> str:
    offset = 1 if one_based else 0
    seen, parts = set(), []
    for start in range(len(perm)):
        if start in seen or perm[start] == start:
            seen.add(start)
            continue
        cyc, v = [], start
        while v not in seen:
            seen.add(v)
            cyc.append(str(v + offset))
            v = perm[v]
        parts.append("(" + " ".join(cyc) + ")")
    return "".join(parts) or "id"


def check_automorphism(graph: Graph, perm: Sequence[int]) -> bool:
    """True iff ``perm`` maps the edge set of ``graph`` onto itself."""
    if len(perm) != graph.n:
        raise ArgumentError(f"permutation has length {len(perm)}, graph has {graph.n} vertices")
    perm = check_permutation(perm)
    E = graph.edge_set
    return all((min(perm[i], perm[j]), max(perm[i], perm[j])) in E for i, j in graph.edges)


def _first_bad_edge(graph, perm):
    for i, j in graph.edges:
        a, b = perm[i], perm[j]
        if (min(a, b), max(a, b)) not in graph.edge_set:
            return (i, j), (a, b)
    return None


# ---------------------------------------------------------------------------
# groups


class PermutationGroup:
    """Finite group of permutations; element 0 is the identity.

    Construction checks closure and inverses exactly, so instances are
    always valid groups.
    """

    _VALIDATE_MAX_ORDER = 5000

    def __init__(self, elements: Sequence[Sequence[int]], words=None):
        elements = [check_permutation(e) for e in elements]
        if not elements:
            raise ArgumentError("a group needs at least the identity")
        n = len(elements[0])
        if any(len(e) != n for e in elements):
            raise ArgumentError("group elements act on different vertex counts")
        if elements[0] != identity(n):
            raise ArgumentError("element 0 must be the identity")
        self.n = n
        self.elements = tuple(elements)
        self.index = {e: k for k, e in enumerate(self.elements)}
        if len(self.index) != len(self.elements):
            raise ArgumentError("duplicate group elements")
        # words[k] = (parent, generator) with element k = gen o parent; None for identity
        self.words = words
        if len(self.elements) <= self._VALIDATE_MAX_ORDER:
            self.composition_table  # noqa: B018 - forces the closure check

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __repr__(self):
        return f"PermutationGroup(order={len(self)}, n={self.n})"

    @property
    def order(self) -> int:
        return len(self.elements)

    @cached_property
    def composition_table(self) -> np.ndarray:
        m = len(self.elements)
        table = np.empty((m, m), dtype=np.int64)
        for a, ea in enumerate(self.elements):
            for b, eb in enumerate(self.elements):
                c = self.index.get(compose(ea, eb))
                if c is None:
                    raise ArgumentError(
                        f"not closed: {cycle_notation(ea)} o {cycle_notation(eb)} is missing"
                    )
                table[a, b] = c
        return table

    @cached_property
    def inverse_table(self) -> np.ndarray:
        inv = np.empty(len(self.elements), dtype=np.int64)
        for k, e in enumerate(self.elements):
            j = self.index.get(invert(e))
            if j is None:
                raise ArgumentError(f"inverse of {cycle_notation(e)} is missing")
            inv[k] = j
        return inv

    def compose_index(self, a: int, b: int) -> int:
        return int(self.composition_table[a, b])

    def inverse_index(self, a: int) -> int:
        return int(self.inverse_table[a])

    def element_mapping(self, u: int, v: int) -> int:
        """Index of the first element sending vertex ``u`` to ``v`` (-1 if none)."""
        for k, e in enumerate(self.elements):
            if e[u] == v:
                return k
        return -1

    def is_subgroup_of(self, other: "PermutationGroup") -> bool:
        return all(e in other.index for e in self.elements)

    def same_elements(self, other: "PermutationGroup") -> bool:
        return set(self.elements) == set(other.elements)


def group_closure(generators: Sequence[Sequence[int]], n: int | None = None) -> PermutationGroup:
    """Smallest group containing ``generators``.

    Elements come out identity first, then breadth-first: for each element in
    discovery order, ``g o e`` for each generator ``g`` in the given order.
    """
    gens = [check_permutation(g) for g in generators]
    if not gens:
        if n is None:
            raise ArgumentError("vertex count required for an empty generator list")
        return PermutationGroup([identity(n)], words=[None])
    size = len(gens[0])
    if any(len(g) != size for g in gens):
        raise ArgumentError("generators act on different vertex counts")
    if n is not None and n != size:
        raise ArgumentError(f"generators act on {size} vertices, expected {n}")
    elements = [identity(size)]
    words = [None]
    index = {elements[0]: 0}
    k = 0
    while k < len(elements):
        e = elements[k]
        for gi, g in enumerate(gens):
            new = compose(g, e)
            if new not in index:
                index[new] = len(elements)
                elements.append(new)
                words.append((k, gi))
        k += 1
    return PermutationGroup(elements, words=words)


def enumerate_automorphisms(graph: Graph, max_n: int = 10) -> PermutationGroup:
    """Aut(graph) by brute force over all n! permutations."""
    if graph.n > max_n:
        raise CapacityError(
            f"brute-force automorphism search is capped at n={max_n} (graph has {graph.n}); "
            "supply generators and use group_closure instead"
        )
    A = graph.adjacency
    found = []
    for perm in itertools.permutations(range(graph.n)):
        p = np.asarray(perm)
        if np.array_equal(A[np.ix_(p, p)], A):
            found.append(perm)
    return PermutationGroup(found)


# ---------------------------------------------------------------------------
# point groups


def _snap(x: float) -> float:
    for exact in (0.0, 0.5, -0.5, 1.0, -1.0):
        if abs(x - exact) < 1e-15:
            return exact
    return x


def rotation_matrix(power: int, order: int) -> np.ndarray:
    """Counter-clockwise rotation by ``2*pi*power/order`` with exact values at multiples of 30 degrees."""
    if order < 1:
        raise ArgumentError(f"rotation order must be positive, got {order}")
    power %= order
    theta = 2.0 * math.pi * power / order
    c, s = _snap(math.cos(theta)), _snap(math.sin(theta))
    return np.array([[c, -s], [s, c]])


def reflection_matrix(axis_deg: float) -> np.ndarray:
    """Reflection in the line through the origin at ``axis_deg`` degrees from the x-axis."""
    two = 2.0 * math.radians(axis_deg)
    c, s = _snap(math.cos(two)), _snap(math.sin(two))
    return np.array([[c, s], [s, -c]])


class PointRepresentation:
    """Homomorphism from a permutation group into O(d), one matrix per element."""

    def __init__(self, group: PermutationGroup, matrices, tol: float = HOMOMORPHISM_TOL):
        mats = np.asarray(matrices, dtype=float)
        if mats.ndim != 3 or mats.shape[0] != len(group) or mats.shape[1] != mats.shape[2]:
            raise RepresentationError(
                f"expected {len(group)} square matrices, got array of shape {mats.shape}"
            )
        self.group = group
        self.matrices = mats
        self.matrices.setflags(write=False)
        self.dimension = mats.shape[1]
        self._validate(tol)

    def _validate(self, tol):
        d = self.dimension
        I = np.eye(d)
        if np.max(np.abs(self.matrices[0] - I)) > tol:
            raise RepresentationError("identity element is not mapped to the identity matrix")
        for k, M in enumerate(self.matrices):
            if np.max(np.abs(M @ M.T - I)) > tol:
                raise RepresentationError(
                    f"matrix of {cycle_notation(self.group.elements[k])} is not orthogonal"
                )
        table = self.group.composition_table
        prod = np.einsum("aij,bjk->abik", self.matrices, self.matrices)
        err = np.max(np.abs(prod - self.matrices[table]), axis=(2, 3))
        bad = np.argwhere(err > tol)
        if bad.size:
            a, b = bad[0]
            ea, eb = self.group.elements[a], self.group.elements[b]
            raise RepresentationError(
                f"not a homomorphism at pair ({cycle_notation(ea)}, {cycle_notation(eb)}): "
                f"error {err[a, b]:.3e}"
            )

    def __getitem__(self, k):
        return self.matrices[k]

    def __len__(self):
        return len(self.matrices)

    @classmethod
    def from_generators(cls, group, generators, matrices, tol=HOMOMORPHISM_TOL):
        """Extend generator matrices to every element along Cayley-graph words, then validate."""
        gens = [check_permutation(g) for g in generators]
        mats = [np.asarray(M, dtype=float) for M in matrices]
        if len(gens) != len(mats):
            raise RepresentationError(f"{len(gens)} generators but {len(mats)} matrices")
        if not gens:
            d = 2
            return cls(group, np.broadcast_to(np.eye(d), (len(group), d, d)).copy(), tol)
        d = mats[0].shape[0]
        out = [None] * len(group)
        out[0] = np.eye(d)
        queue = deque([0])
        while queue:
            k = queue.popleft()
            for g, M in zip(gens, mats):
                new = group.index.get(compose(g, group.elements[k]))
                if new is None:
                    raise RepresentationError(f"generator {cycle_notation(g)} is not in the group")
                if out[new] is None:
                    out[new] = M @ out[k]
                    queue.append(new)
        if any(m is None for m in out):
            raise RepresentationError("generators do not generate the whole group")
        return cls(group, np.array(out), tol)

    def group_sum(self) -> np.ndarray:
        """Sum of tau(gamma) over the group."""
        return self.matrices.sum(axis=0)


def standard_representation(
    group: PermutationGroup,
    kind: str,
    generators: Sequence[Sequence[int]] = (),
    order: int | None = None,
    powers: Sequence[int] | None = None,
    axis_deg: float = 90.0,
    rotation_power: int = 1,
) -> PointRepresentation:
    """Planar point-group representation assigned on the generators.

    kind:
        ``trivial``    every element maps to I.
        ``rotation``   generator ``k`` maps to the rotation by ``2*pi*powers[k]/order`` (C_n).
        ``reflection`` the single generator maps to the mirror at ``axis_deg`` (C_s).
        ``dihedral``   generators ``[rotation, reflection]`` (C_nv).
    """
    generators = list(generators)
    if kind == "trivial":
        return PointRepresentation(group, np.broadcast_to(np.eye(2), (len(group), 2, 2)).copy())
    if kind == "rotation":
        if order is None:
            order = len(group)
        if powers is None:
            powers = [1] * len(generators)
        if len(powers) != len(generators):
            raise RepresentationError(f"{len(generators)} generators but {len(powers)} powers")
        mats = [rotation_matrix(pw, order) for pw in powers]
    elif kind == "reflection":
        if len(generators) != 1:
            raise RepresentationError("a reflection group has exactly one generator")
        mats = [reflection_matrix(axis_deg)]
    elif kind == "dihedral":
        if len(generators) != 2:
            raise RepresentationError("dihedral groups take generators [rotation, reflection]")
        if order is None:
            order = len(group) // 2
        mats = [rotation_matrix(rotation_power, order), reflection_matrix(axis_deg)]
    else:
        raise RepresentationError(f"unknown point group kind {kind!r}")
    return PointRepresentation.from_generators(group, generators, mats)


# ---------------------------------------------------------------------------
# actions, orbits, quotients


@dataclass(frozen=True)
class GroupAction:
    graph: Graph
    group: PermutationGroup

    def __post_init__(self):
        if self.group.n != self.graph.n:
            raise ArgumentError(
                f"group acts on {self.group.n} vertices, graph has {self.graph.n}"
            )
        for perm in self.group.elements:
            bad = _first_bad_edge(self.graph, perm)
            if bad is not None:
                (i, j), (a, b) = bad
                raise SymmetryError(
                    f"{cycle_notation(perm)} is not an automorphism: edge {{{i + 1},{j + 1}}} "
                    f"maps to {{{a + 1},{b + 1}}} which is not an edge"
                )

    @cached_property
    def free(self) -> bool:
        return all(
            perm[i] != i for perm in self.group.elements[1:] for i in range(self.graph.n)
        )


@dataclass(frozen=True)
class OrbitData:
    vertex_orbits: tuple  # tuple of sorted tuples, ordered by representative
    representatives: tuple
    edge_orbits: tuple  # tuple of sorted tuples of edges, ordered by smallest edge
    representative_edges: tuple
    orbit_of: tuple  # vertex -> orbit index
    mapper: tuple  # vertex u -> group element index gamma_u with gamma_u(u) = rep(u)

    def rep(self, v: int) -> int:
        return self.representatives[self.orbit_of[v]]

    def edge_orbit_of(self, edge) -> int:
        edge = (min(edge), max(edge))
        for k, orb in enumerate(self.edge_orbits):
            if edge in orb:
                return k
        raise KeyError(edge)


def compute_orbits(action: GroupAction) -> OrbitData:
    graph, group = action.graph, action.group
    orbit_of = [-1] * graph.n
    vertex_orbits = []
    for v in range(graph.n):
        if orbit_of[v] >= 0:
            continue
        orb = tuple(sorted({perm[v] for perm in group.elements}))
        for u in orb:
            orbit_of[u] = len(vertex_orbits)
        vertex_orbits.append(orb)
    reps = tuple(orb[0] for orb in vertex_orbits)

    seen = set()
    edge_orbits = []
    for i, j in graph.edges:
        if (i, j) in seen:
            continue
        orb = set()
        for perm in group.elements:
            a, b = perm[i], perm[j]
            orb.add((min(a, b), max(a, b)))
        seen |= orb
        edge_orbits.append(tuple(sorted(orb)))
    edge_orbits.sort(key=lambda o: o[0])

    mapper = tuple(group.element_mapping(u, reps[orbit_of[u]]) for u in range(graph.n))
    return OrbitData(
        vertex_orbits=tuple(vertex_orbits),
        representatives=reps,
        edge_orbits=tuple(edge_orbits),
        representative_edges=tuple(o[0] for o in edge_orbits),
        orbit_of=tuple(orbit_of),
        mapper=mapper,
    )


@dataclass(frozen=True)
class QuotientEdge:
    """Directed gain edge ``((tail, head); gain)``; ``graph_edge`` is ``{tail, gain(head)}``."""

    tail: int
    head: int
    gain: int
    graph_edge: tuple

    @property
    def is_loop(self) -> bool:
        return self.tail == self.head


@dataclass(frozen=True)
class QuotientGainGraph:
    vertices: tuple
    edges: tuple
    group: PermutationGroup = field(repr=False)

    def reversed_edge(self, k: int) -> QuotientEdge:
        e = self.edges[k]
        return QuotientEdge(e.head, e.tail, self.group.inverse_index(e.gain), e.graph_edge)

    def column_of(self, v: int) -> int:
        return self.vertices.index(v)


def build_quotient(action: GroupAction, orbits: OrbitData) -> QuotientGainGraph:
    """Quotient gain graph, one directed edge per edge orbit.

    For the smallest edge ``{a, b}`` of each orbit the tail is the endpoint with
    the lower representative; the edge is moved by ``gamma_tail`` so that it
    reads ``{i, x}`` with ``i`` a representative, and the gain is the unique
    element sending ``rep(x)`` to ``x``.
    """
    if not action.free:
        raise UnsupportedActionError(
            "the group action is not free; quotient gain graphs need every non-identity "
            "element to move every vertex"
        )
    group = action.group
    edges = []
    for orb in orbits.edge_orbits:
        a, b = orb[0]
        u, v = (a, b) if orbits.rep(a) <= orbits.rep(b) else (b, a)
        i = orbits.rep(u)
        x = group.elements[orbits.mapper[u]][v]
        j = orbits.rep(x)
        gain = group.inverse_index(orbits.mapper[x])
        edges.append(QuotientEdge(i, j, gain, (min(i, x), max(i, x))))
    return QuotientGainGraph(orbits.representatives, tuple(edges), group)


def orbit_spanning_trees(action: GroupAction, orbits: OrbitData, tree_only: bool = True):
    """Breadth-first spanning tree of each orbit-induced subgraph.

    Returns one list of ``(parent, child)`` pairs per vertex orbit; neighbours
    are visited in ascending order from the representative. With
    ``tree_only=False`` every induced edge is returned instead (still
    requiring connectivity).
    """
    graph = action.graph
    trees = []
    for orb in orbits.vertex_orbits:
        members = set(orb)
        root = orb[0]
        seen = {root}
        queue = deque([root])
        tree = []
        while queue:
            v = queue.popleft()
            for w in graph.neighbors(v):
                if w in members and w not in seen:
                    seen.add(w)
                    tree.append((v, w))
                    queue.append(w)
        if len(seen) != len(orb):
            labels = "{" + ",".join(str(v + 1) for v in orb) + "}"
            raise AssumptionError(
                f"vertex orbit {labels} induces a disconnected subgraph; "
                "agents in this orbit cannot exchange relative positions"
            )
        if not tree_only:
            tree = [(i, j) for i, j in graph.edges if i in members and j in members]
        trees.append(tree)
    return trees

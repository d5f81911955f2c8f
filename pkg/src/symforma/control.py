"""Formation potentials, their gradients, and the four closed-loop control laws.

Configurations are ``(n, d)`` arrays (flat vectors are reshaped). Controls are
returned in the same ``(n, d)`` layout. Runtime gradients are analytic; the
finite-difference checks live in the test-suite and ``verify`` module.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import ArgumentError
from .rigidity import Framework, SymmetryContext, orbit_rigidity_matrix_raw
from .symmetry import GroupAction, OrbitData, PointRepresentation, orbit_spanning_trees

LAWS = ("classic", "symmetric", "orbit", "orbit_consensus")

# Dissipative sign on the symmetry-forcing term of the consensus-shifted orbit law.
_CONSENSUS_COUPLING_SIGN = -1.0


@dataclass(frozen=True)
class SymmetryCoupling:
    """Symmetry-forcing structure over the per-orbit spanning trees.

    For tree edge ``k = (a, b)``, ``transforms[k] = tau(gamma)`` with
    ``gamma(b) = a``, so ``p_a - transforms[k] @ p_b`` vanishes on symmetric
    configurations. ``Ebar`` has block ``I`` at ``a`` and ``-transforms[k].T``
    at ``b`` in column block ``k``; ``Q = Ebar @ Ebar.T``.
    """

    tree_edges: tuple
    pairs: np.ndarray
    transforms: np.ndarray
    Ebar: np.ndarray
    Q: np.ndarray

    @property
    def n_edges(self) -> int:
        return len(self.pairs)

    def residuals(self, p: np.ndarray) -> np.ndarray:
        """Per-tree-edge vectors ``p_a - tau p_b`` (the symmetry error q-bar, one row per edge)."""
        if not len(self.pairs):
            return np.zeros((0, p.shape[1]))
        a, b = self.pairs[:, 0], self.pairs[:, 1]
        return p[a] - np.einsum("kij,kj->ki", self.transforms, p[b])


def build_coupling(
    action: GroupAction,
    rep: PointRepresentation,
    orbits: OrbitData,
    trees: Sequence | None = None,
    tree_only: bool = True,
) -> SymmetryCoupling:
    if trees is None:
        trees = orbit_spanning_trees(action, orbits, tree_only=tree_only)
    group = action.group
    d = rep.dimension
    n = action.graph.n
    pairs, mats = [], []
    for tree in trees:
        for a, b in tree:
            g = group.element_mapping(b, a)
            pairs.append((a, b))
            mats.append(rep[g])
    pairs = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    mats = np.array(mats, dtype=float).reshape(-1, d, d)
    Ebar = np.zeros((d * n, d * len(pairs)))
    for k, (a, b) in enumerate(pairs):
        Ebar[d * a : d * a + d, d * k : d * k + d] = np.eye(d)
        Ebar[d * b : d * b + d, d * k : d * k + d] = -mats[k].T
    return SymmetryCoupling(
        tree_edges=tuple(tuple(t) for t in trees),
        pairs=pairs,
        transforms=mats,
        Ebar=Ebar,
        Q=Ebar @ Ebar.T,
    )


def representative_permutation(orbits: OrbitData) -> list:
    """Vertex order with representatives first (orbit order), then the rest ascending."""
    reps = list(orbits.representatives)
    rest = [v for v in range(len(orbits.orbit_of)) if v not in set(reps)]
    return reps + rest


def permutation_matrix(order: Sequence[int], d: int) -> np.ndarray:
    n = len(order)
    P = np.zeros((d * n, d * n))
    for row, v in enumerate(order):
        P[d * row : d * row + d, d * v : d * v + d] = np.eye(d)
    return P


def _scatter(index: np.ndarray, n: int) -> np.ndarray:
    S = np.zeros((n, len(index)))
    S[index, np.arange(len(index))] = 1.0
    return S


@dataclass(frozen=True)
class ControllerSpec:
    law: str
    framework: Framework
    context: SymmetryContext | None
    coupling: SymmetryCoupling | None
    edges: np.ndarray
    d2: np.ndarray
    q_tail: np.ndarray
    q_head: np.ndarray
    q_gain: np.ndarray
    d0sq: np.ndarray
    order: tuple
    laplacian: np.ndarray | None
    _scatter_edges: tuple
    _scatter_quotient: tuple

    @property
    def n(self) -> int:
        return self.framework.n

    @property
    def dimension(self) -> int:
        return self.framework.dimension

    @property
    def P(self) -> np.ndarray:
        return permutation_matrix(self.order, self.dimension)

    @property
    def uses_consensus(self) -> bool:
        return self.law == "orbit_consensus"


def build_controller(
    law: str,
    framework: Framework,
    context: SymmetryContext | None = None,
    trees: Sequence | None = None,
    tree_only: bool = True,
) -> ControllerSpec:
    """Assemble a controller for ``law`` from a framework carrying target lengths.

    Orbit-law targets for quotient edges are the targets of their representative
    graph edges.
    """
    if law not in LAWS:
        raise ArgumentError(f"unknown control law {law!r}; choose one of {LAWS}")
    if framework.target_distances is None:
        framework = framework.with_targets_from_points()
    graph = framework.graph
    n, d = framework.n, framework.dimension
    edges = np.array(graph.edges, dtype=np.int64).reshape(-1, 2)
    d2 = framework.squared_targets()

    coupling = None
    q_tail = q_head = np.zeros(0, dtype=np.int64)
    q_gain = np.zeros((0, d, d))
    d0sq = np.zeros(0)
    order = tuple(range(n))
    if law != "classic":
        if context is None:
            raise ArgumentError(f"law {law!r} needs a symmetry context")
        coupling = build_coupling(context.action, context.rep, context.orbits, trees, tree_only)
        order = tuple(representative_permutation(context.orbits))
    if law in ("orbit", "orbit_consensus"):
        if context.quotient is None:
            raise ArgumentError("orbit laws need a free group action")
        qe = context.quotient.edges
        q_tail = np.array([e.tail for e in qe], dtype=np.int64)
        q_head = np.array([e.head for e in qe], dtype=np.int64)
        q_gain = np.array([context.rep[e.gain] for e in qe]).reshape(-1, d, d)
        d0sq = np.array([framework.target_distances[e.graph_edge] ** 2 for e in qe])
    laplacian = None
    if law == "orbit_consensus":
        if not graph.is_connected():
            raise ArgumentError("consensus augmentation needs a connected graph")
        laplacian = graph.laplacian()
    return ControllerSpec(
        law=law,
        framework=framework,
        context=context,
        coupling=coupling,
        edges=edges,
        d2=d2,
        q_tail=q_tail,
        q_head=q_head,
        q_gain=q_gain,
        d0sq=d0sq,
        order=order,
        laplacian=laplacian,
        _scatter_edges=(_scatter(edges[:, 0], n), _scatter(edges[:, 1], n)),
        _scatter_quotient=(_scatter(q_tail, n), _scatter(q_head, n)),
    )


def _as_points(spec: ControllerSpec, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return p.reshape(spec.n, spec.dimension)


# ---------------------------------------------------------------------------
# potentials


def distance_errors(spec: ControllerSpec, p) -> np.ndarray:
    """Squared-length errors ``|p_i - p_j|^2 - d_ij^2`` per graph edge."""
    p = _as_points(spec, p)
    diff = p[spec.edges[:, 0]] - p[spec.edges[:, 1]]
    return np.einsum("ki,ki->k", diff, diff) - spec.d2


def formation_potential(spec: ControllerSpec, p) -> float:
    return 0.25 * float(np.sum(distance_errors(spec, p) ** 2))


def symmetry_potential(spec: ControllerSpec, p) -> float:
    """Half the squared symmetry error summed over tree edges."""
    p = _as_points(spec, p)
    if spec.coupling is None:
        return 0.0
    return 0.5 * float(np.sum(spec.coupling.residuals(p) ** 2))


def quotient_errors(spec: ControllerSpec, p) -> np.ndarray:
    """``|p_i - tau(gain) p_j|^2 - d0^2`` per quotient edge; equals O(p0) p0 - d0^2."""
    p = _as_points(spec, p)
    diff = p[spec.q_tail] - np.einsum("kij,kj->ki", spec.q_gain, p[spec.q_head])
    return np.einsum("ki,ki->k", diff, diff) - spec.d0sq


def orbit_edge_potential(spec: ControllerSpec, p) -> float:
    return 0.25 * float(np.sum(quotient_errors(spec, p) ** 2))


# ---------------------------------------------------------------------------
# control laws


def control_classic(spec: ControllerSpec, p) -> np.ndarray:
    """Negative gradient of the formation potential, ``-R^T (R p - d^2)``."""
    p = _as_points(spec, p)
    diff = p[spec.edges[:, 0]] - p[spec.edges[:, 1]]
    s = (np.einsum("ki,ki->k", diff, diff) - spec.d2)[:, None] * diff
    Si, Sj = spec._scatter_edges
    return Sj @ s - Si @ s


def _symmetry_term(spec, p):
    return (spec.coupling.Q @ p.reshape(-1)).reshape(p.shape)


def control_symmetric(spec: ControllerSpec, p) -> np.ndarray:
    p = _as_points(spec, p)
    return control_classic(spec, p) - _symmetry_term(spec, p)


def _orbit_distance_term(spec, p):
    pi, pj = p[spec.q_tail], p[spec.q_head]
    tail_block = pi - np.einsum("kij,kj->ki", spec.q_gain, pj)
    head_block = pj - np.einsum("kji,kj->ki", spec.q_gain, pi)
    sigma = np.einsum("ki,ki->k", tail_block, tail_block) - spec.d0sq
    St, Sh = spec._scatter_quotient
    # a loop receives both blocks at the same vertex, which sums to its 2p - tau p - tau^-1 p row
    return St @ (sigma[:, None] * tail_block) + Sh @ (sigma[:, None] * head_block)


def control_orbit(spec: ControllerSpec, p) -> np.ndarray:
    """Orbit law: representatives follow ``-O^T sigma``, every agent follows ``-Q p``."""
    p = _as_points(spec, p)
    return -_orbit_distance_term(spec, p) - _symmetry_term(spec, p)


def control_orbit_stacked(spec: ControllerSpec, p) -> np.ndarray:
    """Same law through explicit O(G0, p0), P and Q in representative-first coordinates."""
    p = _as_points(spec, p)
    d, ctx = spec.dimension, spec.context
    P = spec.P
    pt = P @ p.reshape(-1)
    k0 = d * len(ctx.orbits.representatives)
    p0 = pt[:k0]
    O = orbit_rigidity_matrix_raw(ctx.quotient, ctx.rep, p0)
    top = -O.T @ (O @ p0 - spec.d0sq)
    ut = np.concatenate([top, np.zeros(len(pt) - k0)]) - P @ spec.coupling.Q @ P.T @ pt
    return (P.T @ ut).reshape(p.shape)


def control_orbit_per_agent(spec: ControllerSpec, p) -> np.ndarray:
    """Same law assembled agent by agent from edge-local terms."""
    p = _as_points(spec, p)
    ctx = spec.context
    quotient, rep, group = ctx.quotient, ctx.rep, ctx.action.group
    u = np.zeros_like(p)
    d0 = dict(zip(range(len(quotient.edges)), spec.d0sq))
    for i in quotient.vertices:
        for k, e in enumerate(quotient.edges):
            if e.is_loop and e.tail == i:
                T = rep[e.gain]
                err = float(np.sum(((np.eye(len(T)) - T) @ p[i]) ** 2)) - d0[k]
                u[i] -= err * (2 * p[i] - T @ p[i] - T.T @ p[i])
            elif not e.is_loop and i in (e.tail, e.head):
                oriented = e if e.tail == i else quotient.reversed_edge(k)
                T = rep[oriented.gain]
                j = oriented.head
                err = float(np.sum((p[i] - T @ p[j]) ** 2)) - d0[k]
                u[i] += err * (T @ p[j] - p[i])
    for tree in spec.coupling.tree_edges:
        for a, b in tree:
            for x, y in ((a, b), (b, a)):
                T = rep[group.element_mapping(y, x)]
                u[x] += T @ p[y] - p[x]
    return u


def control_orbit_consensus(spec: ControllerSpec, p, r):
    """Orbit law evaluated at the shifted state ``p - r`` plus Laplacian flow on ``r``."""
    p = _as_points(spec, p)
    r = _as_points(spec, r)
    c = p - r
    u = -_orbit_distance_term(spec, c) + _CONSENSUS_COUPLING_SIGN * _symmetry_term(spec, c)
    r_dot = -(spec.laplacian @ r)
    return u, r_dot


def group_average(rep: PointRepresentation, p) -> np.ndarray:
    """``z = sum_v sum_gamma tau(gamma) p_v``."""
    p = np.asarray(p, dtype=float).reshape(-1, rep.dimension)
    return np.einsum("gij,vj->i", rep.matrices, p)


def control(spec: ControllerSpec, p, r=None):
    """Dispatch on ``spec.law``; returns ``u`` or ``(u, r_dot)`` for the consensus law."""
    if spec.law == "classic":
        return control_classic(spec, p)
    if spec.law == "symmetric":
        return control_symmetric(spec, p)
    if spec.law == "orbit":
        return control_orbit(spec, p)
    if r is None:
        r = np.zeros_like(np.asarray(p, dtype=float))
    return control_orbit_consensus(spec, p, r)


def total_potential(spec: ControllerSpec, p) -> float:
    """The potential each law descends: F_f, F_f + F_s, or F_e + F_s."""
    if spec.law == "classic":
        return formation_potential(spec, p)
    if spec.law == "symmetric":
        return formation_potential(spec, p) + symmetry_potential(spec, p)
    return orbit_edge_potential(spec, p) + symmetry_potential(spec, p)


# ---------------------------------------------------------------------------
# orbit error system


def error_signals(spec: ControllerSpec, p, r=None):
    """``(sigma_bar, q_bar, V)`` with ``V = (|sigma_bar|^2 + |q_bar|^2) / 2``.

    For the consensus law the signals are evaluated at ``p - r``.
    """
    p = _as_points(spec, p)
    if r is not None:
        p = p - _as_points(spec, r)
    sigma = quotient_errors(spec, p)
    q = spec.coupling.residuals(p).reshape(-1)
    return sigma, q, 0.5 * float(sigma @ sigma + q @ q)


def error_jacobian(spec: ControllerSpec, p) -> np.ndarray:
    """``[O^T embedded at representatives, Ebar]``; the orbit error matrix is ``J^T J``."""
    p = _as_points(spec, p)
    d, ctx = spec.dimension, spec.context
    O = orbit_rigidity_matrix_raw(ctx.quotient, ctx.rep, p[list(ctx.orbits.representatives)])
    JO = np.zeros((d * spec.n, O.shape[0]))
    for k, v in enumerate(ctx.orbits.representatives):
        JO[d * v : d * v + d] = O.T[d * k : d * k + d]
    return np.hstack([JO, spec.coupling.Ebar])


def orbit_error_matrix(spec: ControllerSpec, p) -> np.ndarray:
    J = error_jacobian(spec, p)
    return J.T @ J


def equilibrium_control(spec: ControllerSpec, p, sigma, q) -> np.ndarray:
    """``-[O^T; 0] sigma - Ebar q`` in original vertex order; zero on the equilibrium set."""
    J = error_jacobian(spec, p)
    return -(J @ np.concatenate([sigma, q])).reshape(spec.n, spec.dimension)


@dataclass(frozen=True)
class EdgeBudget:
    quotient_edges: int
    tree_edges: int
    construction_count: int
    distinct_edges: int
    bound: float
    group_order: int

    @property
    def within_bound(self) -> bool:
        return self.construction_count <= self.bound + 1e-12

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__} | {"within_bound": self.within_bound}


def edge_budget(context: SymmetryContext, coupling: SymmetryCoupling) -> EdgeBudget:
    """Edges the orbit law touches, counted per construction and as distinct graph edges."""
    quotient_graph_edges = {e.graph_edge for e in context.quotient.edges}
    tree = {(min(a, b), max(a, b)) for a, b in map(tuple, coupling.pairs)}
    order = len(context.action.group)
    n = context.action.graph.n
    return EdgeBudget(
        quotient_edges=len(context.quotient.edges),
        tree_edges=len(tree),
        construction_count=len(context.quotient.edges) + len(tree),
        distinct_edges=len(quotient_graph_edges | tree),
        bound=(1.0 + 1.0 / order) * n,
        group_order=order,
    )

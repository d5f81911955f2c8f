"""Rigidity and orbit rigidity matrices, their kernels and cokernels, and framework classification."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .exceptions import ArgumentError, SymmetryError
from .symmetry import (
    GroupAction,
    Graph,
    OrbitData,
    PointRepresentation,
    QuotientGainGraph,
    build_quotient,
    compute_orbits,
    cycle_notation,
)

RANK_TOL = 1e-9
SYMMETRY_TOL = 1e-9


class DegenerateEdgeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Framework:
    """A graph with one point per vertex, optionally carrying target edge lengths.

    ``points`` has shape (n, d). ``target_distances`` maps sorted 0-based edges
    to positive lengths.
    """

    graph: Graph
    points: np.ndarray
    target_distances: Mapping | None = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            if pts.size % self.graph.n:
                raise ArgumentError(f"configuration of length {pts.size} does not fit {self.graph.n} vertices")
            pts = pts.reshape(self.graph.n, -1)
        if pts.shape[0] != self.graph.n:
            raise ArgumentError(f"configuration has {pts.shape[0]} points, graph has {self.graph.n} vertices")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.target_distances is not None:
            td = {}
            for e, dist in self.target_distances.items():
                key = (min(e), max(e))
                if key not in self.graph.edge_set:
                    raise ArgumentError(f"target distance given for non-edge {key}")
                if not dist > 0:
                    raise ArgumentError(f"target distance for {key} must be positive, got {dist}")
                td[key] = float(dist)
            missing = [e for e in self.graph.edges if e not in td]
            if missing:
                raise ArgumentError(f"missing target distances for edges {missing}")
            object.__setattr__(self, "target_distances", td)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    @property
    def flat(self) -> np.ndarray:
        return self.points.reshape(-1)

    def edge_lengths(self) -> np.ndarray:
        e = np.array(self.graph.edges, dtype=int).reshape(-1, 2)
        return np.linalg.norm(self.points[e[:, 0]] - self.points[e[:, 1]], axis=1)

    def squared_targets(self) -> np.ndarray:
        """Squared target lengths in edge order; the current lengths when no targets are set."""
        if self.target_distances is None:
            return self.edge_lengths() ** 2
        return np.array([self.target_distances[e] ** 2 for e in self.graph.edges])

    def with_targets_from_points(self) -> "Framework":
        lengths = self.edge_lengths()
        return Framework(self.graph, self.points, dict(zip(self.graph.edges, lengths)))

    def symmetry_violation(self, action: GroupAction, rep: PointRepresentation, tol=SYMMETRY_TOL):
        """First ``(element index, vertex)`` with ``tau(g) p_i != p_g(i)``, or None."""
        for k, perm in enumerate(action.group.elements):
            moved = self.points @ rep[k].T
            err = np.max(np.abs(moved - self.points[list(perm)]), axis=1)
            bad = np.flatnonzero(err > tol)
            if bad.size:
                return k, int(bad[0])
        return None

    def require_symmetric(self, action, rep, tol=SYMMETRY_TOL):
        bad = self.symmetry_violation(action, rep, tol)
        if bad is not None:
            k, i = bad
            g = action.group.elements[k]
            raise SymmetryError(
                f"configuration is not symmetric: tau({cycle_notation(g)}) p_{i + 1} != p_{g[i] + 1}"
            )


@dataclass(frozen=True)
class MatrixAnalysis:
    """Numeric rank with orthonormal kernel and cokernel bases from one SVD."""

    matrix: np.ndarray
    rank: int
    singular_values: np.ndarray
    kernel_basis: np.ndarray
    cokernel_basis: np.ndarray
    warnings: tuple = field(default=())

    @property
    def kernel_dim(self) -> int:
        return self.kernel_basis.shape[1]

    @property
    def cokernel_dim(self) -> int:
        return self.cokernel_basis.shape[1]

    def to_csv(self, path=None) -> str:
        lines = [",".join(f"{x:.17g}" for x in row) for row in self.matrix]
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


RigidityMatrixResult = MatrixAnalysis
OrbitRigidityMatrixResult = MatrixAnalysis


def analyze_matrix(A: np.ndarray, tol: float = RANK_TOL, notes=()) -> MatrixAnalysis:
    A = np.asarray(A, dtype=float)
    m, k = A.shape
    if m == 0 or k == 0:
        return MatrixAnalysis(A, 0, np.zeros(0), np.eye(k), np.eye(m), tuple(notes))
    U, s, Vt = np.linalg.svd(A)
    rank = int(np.sum(s > tol * s[0])) if s[0] > 0 else 0
    return MatrixAnalysis(
        matrix=A,
        rank=rank,
        singular_values=s,
        kernel_basis=Vt[rank:].T.copy(),
        cokernel_basis=U[:, rank:].copy(),
        warnings=tuple(notes),
    )


def rigidity_matrix_raw(graph: Graph, points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=float).reshape(graph.n, -1)
    d = pts.shape[1]
    R = np.zeros((len(graph.edges), d * graph.n))
    for k, (i, j) in enumerate(graph.edges):
        diff = pts[i] - pts[j]
        R[k, d * i : d * i + d] = diff
        R[k, d * j : d * j + d] = -diff
    return R


def rigidity_matrix(framework: Framework, tol: float = RANK_TOL) -> MatrixAnalysis:
    """R(G, p): one row per edge in lexicographic order."""
    notes = []
    pts = framework.points
    for i, j in framework.graph.edges:
        if np.allclose(pts[i], pts[j], rtol=0.0, atol=1e-14):
            msg = f"edge {{{i + 1},{j + 1}}} has coincident endpoints; its row is zero"
            notes.append(msg)
            warnings.warn(msg, DegenerateEdgeWarning, stacklevel=2)
    return analyze_matrix(rigidity_matrix_raw(framework.graph, pts), tol, notes)


@dataclass(frozen=True)
class TrivialMotionBasis:
    columns: np.ndarray  # dn x (d + d(d-1)/2), orthonormal when not degenerate
    raw: np.ndarray
    degenerate: bool


def trivial_motion_columns(points: np.ndarray) -> np.ndarray:
    """Translations, then one rotation ``u_i = S p_i`` per coordinate plane (unnormalized)."""
    pts = np.asarray(points, dtype=float)
    n, d = pts.shape
    cols = []
    for a in range(d):
        t = np.zeros((n, d))
        t[:, a] = 1.0
        cols.append(t.reshape(-1))
    for a in range(d):
        for b in range(a + 1, d):
            S = np.zeros((d, d))
            S[a, b], S[b, a] = -1.0, 1.0
            cols.append((pts @ S.T).reshape(-1))
    return np.column_stack(cols)


def trivial_motions(framework: Framework) -> TrivialMotionBasis:
    raw = trivial_motion_columns(framework.points)
    U, s, _ = np.linalg.svd(raw, full_matrices=False)
    rank = int(np.sum(s > RANK_TOL * max(s[0], 1.0)))
    degenerate = rank < raw.shape[1]
    return TrivialMotionBasis(columns=U[:, :rank].copy(), raw=raw, degenerate=degenerate)


def orbit_rigidity_matrix_raw(quotient: QuotientGainGraph, rep: PointRepresentation, pbar) -> np.ndarray:
    pbar = np.asarray(pbar, dtype=float).reshape(len(quotient.vertices), -1)
    d = pbar.shape[1]
    col = {v: k for k, v in enumerate(quotient.vertices)}
    O = np.zeros((len(quotient.edges), d * len(quotient.vertices)))
    for r, e in enumerate(quotient.edges):
        T = rep[e.gain]
        i, j = col[e.tail], col[e.head]
        if e.is_loop:
            O[r, d * i : d * i + d] = 2 * pbar[i] - T @ pbar[i] - T.T @ pbar[i]
        else:
            O[r, d * i : d * i + d] = pbar[i] - T @ pbar[j]
            O[r, d * j : d * j + d] = pbar[j] - T.T @ pbar[i]
    return O


def orbit_rigidity_matrix(quotient, rep, pbar, tol: float = RANK_TOL) -> MatrixAnalysis:
    """O(G0, pbar) with rows in quotient-edge order; ``pbar`` lists representative points."""
    return analyze_matrix(orbit_rigidity_matrix_raw(quotient, rep, pbar), tol)


def symmetric_lift_matrix(orbits: OrbitData, rep: PointRepresentation) -> np.ndarray:
    """Linear map ubar -> u with u_v = tau(gamma_v)^-1 ubar_rep(v); columns follow the representatives."""
    d = rep.dimension
    n = len(orbits.orbit_of)
    L = np.zeros((d * n, d * len(orbits.representatives)))
    for v in range(n):
        k = orbits.orbit_of[v]
        L[d * v : d * v + d, d * k : d * k + d] = rep[orbits.mapper[v]].T
    return L


def lift_symmetric_motion(ubar, orbits: OrbitData, rep: PointRepresentation) -> np.ndarray:
    """Extend a velocity per representative to the symmetric motion of every vertex (flat)."""
    ubar = np.asarray(ubar, dtype=float).reshape(-1)
    return symmetric_lift_matrix(orbits, rep) @ ubar


def stress_lift_matrix(graph: Graph, orbits: OrbitData, quotient: QuotientGainGraph | None = None) -> np.ndarray:
    """|E| x |E0| map copying each orbit value onto its edges.

    A loop whose gain is an involution stands for a single graph edge touching
    its representative, while its orbit-matrix row counts that edge twice, so
    the lifted value on such orbits is doubled.
    """
    M = np.zeros((len(graph.edges), len(orbits.edge_orbits)))
    for k, orb in enumerate(orbits.edge_orbits):
        scale = 1.0
        if quotient is not None:
            e = quotient.edges[k]
            if e.is_loop and quotient.group.inverse_index(e.gain) == e.gain:
                scale = 2.0
        for edge in orb:
            M[graph.edge_index[edge], k] = scale
    return M


def lift_symmetric_stress(omega_bar, orbits: OrbitData, graph: Graph, quotient=None) -> np.ndarray:
    omega_bar = np.asarray(omega_bar, dtype=float).reshape(-1)
    return stress_lift_matrix(graph, orbits, quotient) @ omega_bar


def _intersection_dim(A: np.ndarray, B: np.ndarray, tol: float = RANK_TOL):
    """Dimension of span(A) & span(B) for full-column-rank A, B, plus B-coordinates of a basis."""
    if A.shape[1] == 0 or B.shape[1] == 0:
        return 0, np.zeros((B.shape[1], 0))
    ana = analyze_matrix(np.hstack([A, -B]), tol)
    coords = ana.kernel_basis[A.shape[1] :]
    return ana.kernel_dim, coords


@dataclass(frozen=True)
class SymmetryContext:
    """Everything derived from a (graph, group, representation) triple."""

    action: GroupAction
    rep: PointRepresentation
    orbits: OrbitData
    quotient: QuotientGainGraph | None

    @classmethod
    def build(cls, action: GroupAction, rep: PointRepresentation):
        orbits = compute_orbits(action)
        quotient = build_quotient(action, orbits) if action.free else None
        return cls(action, rep, orbits, quotient)

    def representative_points(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(self.action.graph.n, -1)
        return pts[list(self.orbits.representatives)]


@dataclass(frozen=True)
class RigidityClass:
    infinitesimally_rigid: bool
    independent: bool
    isostatic: bool
    rank: int
    kernel_dim: int
    cokernel_dim: int
    nontrivial_motion_dim: int
    affinely_spanning: bool
    sym_inf_rigid: bool | None = None
    sym_independent: bool | None = None
    sym_isostatic: bool | None = None
    orbit_rank: int | None = None
    orbit_kernel_dim: int | None = None
    orbit_cokernel_dim: int | None = None
    sym_trivial_dim: int | None = None
    sym_nontrivial_motion_dim: int | None = None
    caveats: tuple = ()

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def symmetric_trivial_dim(framework: Framework, ctx: SymmetryContext) -> int:
    T = trivial_motions(framework).columns
    L = symmetric_lift_matrix(ctx.orbits, ctx.rep)
    return _intersection_dim(T, L)[0]


def classify(framework: Framework, symmetry: SymmetryContext | None = None, tol: float = RANK_TOL) -> RigidityClass:
    """Rigidity flags of a framework, and forced-symmetric flags when a free symmetry is given."""
    d, n = framework.dimension, framework.n
    caveats = []
    centered = framework.points - framework.points.mean(axis=0)
    affine_rank = int(np.linalg.matrix_rank(centered, tol=1e-9 * max(1.0, np.abs(centered).max()))) if n > 1 else 0
    spanning = affine_rank == d
    if not spanning:
        caveats.append("points do not affinely span R^d; plain classification is unreliable")
    R = rigidity_matrix(framework, tol)
    caveats.extend(R.warnings)
    n_trivial = d * (d + 1) // 2
    rigid = R.rank == d * n - n_trivial
    independent = R.cokernel_dim == 0
    trivial_dim = trivial_motions(framework).columns.shape[1]
    out = dict(
        infinitesimally_rigid=rigid,
        independent=independent,
        isostatic=rigid and independent,
        rank=R.rank,
        kernel_dim=R.kernel_dim,
        cokernel_dim=R.cokernel_dim,
        nontrivial_motion_dim=R.kernel_dim - trivial_dim,
        affinely_spanning=spanning,
    )
    if symmetry is not None and symmetry.quotient is not None:
        framework.require_symmetric(symmetry.action, symmetry.rep)
        O = orbit_rigidity_matrix(symmetry.quotient, symmetry.rep, symmetry.representative_points(framework.points), tol)
        sym_triv = symmetric_trivial_dim(framework, symmetry)
        sym_rigid = O.kernel_dim == sym_triv
        sym_indep = O.cokernel_dim == 0
        out.update(
            sym_inf_rigid=sym_rigid,
            sym_independent=sym_indep,
            sym_isostatic=sym_rigid and sym_indep,
            orbit_rank=O.rank,
            orbit_kernel_dim=O.kernel_dim,
            orbit_cokernel_dim=O.cokernel_dim,
            sym_trivial_dim=sym_triv,
            sym_nontrivial_motion_dim=O.kernel_dim - sym_triv,
        )
    elif symmetry is not None:
        caveats.append("group action is not free; forced-symmetric flags not computed")
    return RigidityClass(caveats=tuple(caveats), **out)


@dataclass(frozen=True)
class IsomorphismCheck:
    orbit_kernel_dim: int
    symmetric_kernel_dim: int
    orbit_cokernel_dim: int
    symmetric_cokernel_dim: int
    max_motion_residual: float
    max_stress_residual: float

    @property
    def dims_match(self) -> bool:
        return (
            self.orbit_kernel_dim == self.symmetric_kernel_dim
            and self.orbit_cokernel_dim == self.symmetric_cokernel_dim
        )


def check_orbit_isomorphism(framework: Framework, ctx: SymmetryContext, tol: float = RANK_TOL) -> IsomorphismCheck:
    """Compare ker/coker of the orbit matrix with the symmetric parts of ker/coker of R.

    The symmetric motions are computed independently as ker(R L) and the
    symmetric stresses as ker((R^T) M), with L and M the lift maps.
    """
    R = rigidity_matrix_raw(framework.graph, framework.points)
    O = orbit_rigidity_matrix(ctx.quotient, ctx.rep, ctx.representative_points(framework.points), tol)
    L = symmetric_lift_matrix(ctx.orbits, ctx.rep)
    M = stress_lift_matrix(framework.graph, ctx.orbits, ctx.quotient)
    scale = max(1.0, np.abs(R).max())
    sym_motions = analyze_matrix(R @ L, tol) if R.size else None
    sym_stresses = analyze_matrix(R.T @ M, tol) if R.size else None
    motion_res = 0.0
    for col in O.kernel_basis.T:
        u = lift_symmetric_motion(col, ctx.orbits, ctx.rep)
        motion_res = max(motion_res, float(np.abs(R @ u).max()) / scale)
    stress_res = 0.0
    for col in O.cokernel_basis.T:
        w = lift_symmetric_stress(col, ctx.orbits, framework.graph, ctx.quotient)
        stress_res = max(stress_res, float(np.abs(w @ R).max()) / scale)
    return IsomorphismCheck(
        orbit_kernel_dim=O.kernel_dim,
        symmetric_kernel_dim=sym_motions.kernel_dim if sym_motions else L.shape[1],
        orbit_cokernel_dim=O.cokernel_dim,
        symmetric_cokernel_dim=sym_stresses.kernel_dim if sym_stresses else 0,
        max_motion_residual=motion_res,
        max_stress_residual=stress_res,
    )

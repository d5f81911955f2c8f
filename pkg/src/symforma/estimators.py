"""scikit-learn style wrappers over the functional core.

Structure (graph, group, representation, law) goes in the constructor;
``fit`` takes a configuration. Fitted attributes end in an underscore.

Example:
    >>> from symforma.estimators import OrbitRigidityAnalyzer
    >>> est = OrbitRigidityAnalyzer.from_scenario("c4_mirror")
    >>> est.fit(est.scenario_points_).classification_.sym_isostatic
    True
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import control as ctl
from .rigidity import (
    Framework,
    SymmetryContext,
    check_orbit_isomorphism,
    classify,
    lift_symmetric_motion,
    orbit_rigidity_matrix,
    rigidity_matrix,
)
from .scenario import Scenario, load_scenario
from .sim import IntegratorConfig, convergence_report, integrate
from .symmetry import Graph, GroupAction, group_closure, perm_from_images, standard_representation
from .validation import check_batch, check_configuration, check_edges, check_positive


def _resolve(scenario) -> Scenario:
    return scenario if isinstance(scenario, Scenario) else load_scenario(scenario)


def _symmetry_params(sc: Scenario) -> dict:
    sym = sc.document["symmetry"]
    return {
        "generators": [list(g) for g in sym["generators"]],
        "representation": {"kind": sym["representation"]["kind"], **sym["representation"]["params"]},
    }


class RigidityAnalyzer(TransformerMixin, BaseEstimator):
    """Rank, kernel and classification of the rigidity matrix at a configuration.

    Parameters
    ----------
    n : int
        Number of vertices.
    edges : list of pairs
        1-based edge list.
    tol : float
        Relative singular-value threshold for numeric rank.
    """

    def __init__(self, n=None, edges=(), tol=1e-9):
        self.n = n
        self.edges = edges
        self.tol = tol

    def _graph(self) -> Graph:
        if self.n is None:
            raise ValueError("n must be set")
        return Graph(self.n, check_edges(self.edges, self.n))

    def fit(self, X, y=None):
        graph = self._graph()
        check_positive(self.tol, "tol")
        pts = check_configuration(X, graph.n)
        self.framework_ = Framework(graph, pts)
        self.analysis_ = rigidity_matrix(self.framework_, self.tol)
        self.classification_ = classify(self.framework_, tol=self.tol)
        self.rank_ = self.analysis_.rank
        self.kernel_ = self.analysis_.kernel_basis
        self.n_features_in_ = graph.n * pts.shape[1]
        return self

    def transform(self, X):
        """Edge strain rates ``R u`` for each row ``u`` of a batch of velocity fields."""
        check_is_fitted(self, "analysis_")
        U = check_batch(X, self.framework_.n, self.framework_.dimension)
        return U @ self.analysis_.matrix.T


class OrbitRigidityAnalyzer(TransformerMixin, BaseEstimator):
    """Forced-symmetric rigidity through the orbit rigidity matrix.

    Parameters
    ----------
    n, edges : see :class:`RigidityAnalyzer`.
    generators : list of image arrays
        1-based one-line permutations generating the symmetry group.
    representation : dict
        ``{"kind": ..., **params}`` as in scenario files.
    """

    def __init__(self, n=None, edges=(), generators=(), representation=None, tol=1e-9):
        self.n = n
        self.edges = edges
        self.generators = generators
        self.representation = representation
        self.tol = tol

    @classmethod
    def from_scenario(cls, scenario, **kwargs):
        sc = _resolve(scenario)
        est = cls(n=sc.n, edges=[list(e) for e in sc.document["graph"]["edges"]], **_symmetry_params(sc), **kwargs)
        est.scenario_points_ = sc.setup.framework.points.copy()
        return est

    def _context(self) -> SymmetryContext:
        graph = Graph(self.n, check_edges(self.edges, self.n))
        gens = [perm_from_images(g) for g in self.generators]
        group = group_closure(gens, self.n)
        rep_spec = dict(self.representation or {"kind": "trivial"})
        kind = rep_spec.pop("kind")
        rep = standard_representation(group, kind, gens, **rep_spec)
        return SymmetryContext.build(GroupAction(graph, group), rep)

    def fit(self, X, y=None):
        check_positive(self.tol, "tol")
        ctx = self._context()
        pts = check_configuration(X, self.n)
        fw = Framework(ctx.action.graph, pts)
        fw.require_symmetric(ctx.action, ctx.rep)
        self.context_ = ctx
        self.framework_ = fw
        self.classification_ = classify(fw, ctx, self.tol)
        if ctx.quotient is not None:
            self.orbit_analysis_ = orbit_rigidity_matrix(ctx.quotient, ctx.rep, ctx.representative_points(pts), self.tol)
            self.isomorphism_ = check_orbit_isomorphism(fw, ctx, self.tol)
        else:
            self.orbit_analysis_ = None
            self.isomorphism_ = None
        self.n_features_in_ = self.n * pts.shape[1]
        return self

    def transform(self, X):
        """Lift rows of reduced symmetric motions (one vector per representative) to full motions."""
        check_is_fitted(self, "context_")
        d = self.framework_.dimension
        k = len(self.context_.orbits.representatives)
        Ubar = check_batch(X, k, d)
        return np.array([lift_symmetric_motion(u, self.context_.orbits, self.context_.rep).reshape(-1) for u in Ubar])


class FormationController(BaseEstimator):
    """Closed-loop formation controller; ``fit`` takes the target configuration.

    Parameters
    ----------
    law : {"classic", "symmetric", "orbit", "orbit_consensus"}
    n, edges, generators, representation : problem structure (1-based).
    dt, T, method : integrator settings.
    """

    def __init__(
        self,
        law="orbit",
        n=None,
        edges=(),
        generators=(),
        representation=None,
        dt=1e-3,
        T=50.0,
        method="rk4",
        tol=1e-6,
    ):
        self.law = law
        self.n = n
        self.edges = edges
        self.generators = generators
        self.representation = representation
        self.dt = dt
        self.T = T
        self.method = method
        self.tol = tol

    @classmethod
    def from_scenario(cls, scenario, **kwargs):
        sc = _resolve(scenario)
        integ = sc.document["integrator"]
        params = dict(
            law=sc.controller,
            n=sc.n,
            edges=[list(e) for e in sc.document["graph"]["edges"]],
            dt=integ["dt"],
            T=integ["T"],
            method=integ["method"],
            **_symmetry_params(sc),
        )
        params.update(kwargs)
        est = cls(**params)
        est.scenario_points_ = sc.setup.framework.points.copy()
        est.scenario_initial_ = sc.setup.p0.copy()
        return est

    def fit(self, X, y=None):
        """Build the controller for target configuration ``X``."""
        ctx = OrbitRigidityAnalyzer(self.n, self.edges, self.generators, self.representation)._context()
        pts = check_configuration(X, self.n)
        fw = Framework(ctx.action.graph, pts).with_targets_from_points()
        if self.law != "classic":
            fw.require_symmetric(ctx.action, ctx.rep)
        self.spec_ = ctl.build_controller(self.law, fw, ctx if self.law != "classic" else None)
        self.config_ = IntegratorConfig(self.method, check_positive(self.dt, "dt"), check_positive(self.T, "T"))
        self.n_features_in_ = self.n * pts.shape[1]
        return self

    def control(self, p, r=None):
        check_is_fitted(self, "spec_")
        return ctl.control(self.spec_, check_configuration(p, self.n, self.spec_.dimension), r)

    def simulate(self, p0, r0=None):
        check_is_fitted(self, "spec_")
        p0 = check_configuration(p0, self.n, self.spec_.dimension)
        if r0 is not None:
            r0 = check_configuration(r0, self.n, self.spec_.dimension)
        return integrate(self.spec_, p0, r0, self.config_)

    def predict(self, X):
        """Terminal configurations (flattened) reached from each initial configuration in ``X``."""
        check_is_fitted(self, "spec_")
        P0 = check_batch(X, self.n, self.spec_.dimension)
        return np.array([self.simulate(p.reshape(self.n, -1)).final.reshape(-1) for p in P0])

    def score(self, X, y=None):
        """Fraction of initial configurations whose runs meet ``tol``."""
        check_is_fitted(self, "spec_")
        P0 = check_batch(X, self.n, self.spec_.dimension)
        ok = [convergence_report(self.simulate(p.reshape(self.n, -1)), self.spec_, self.tol).passed for p in P0]
        return float(np.mean(ok))

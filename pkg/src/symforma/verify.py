"""Self-check suites behind ``symforma verify``.

Each suite returns a list of :class:`Check` records; a suite passes when
every check does.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import control as ctl
from .exceptions import SymformaError
from .rigidity import (
    Framework,
    check_orbit_isomorphism,
    classify,
    orbit_rigidity_matrix_raw,
    rigidity_matrix,
)
from .scenario import builtin, builtin_scenarios
from .sim import IntegratorConfig, convergence_report, integrate
from .symmetry import (
    Graph,
    GroupAction,
    compute_orbits,
    enumerate_automorphisms,
    group_closure,
    perm_from_cycles,
    perm_from_images,
)

SUITES = ("rigidity", "gradients", "invariants", "convergence")


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


@dataclass
class SuiteReport:
    suite: str
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks],
        }


def c4_graph() -> Graph:
    return Graph.from_one_based(4, [(1, 2), (1, 3), (2, 4), (3, 4)])


# ---------------------------------------------------------------------------
# rigidity


def _example3_oracle(name: str, pbar: np.ndarray) -> dict:
    """Symbolic orbit-matrix rows keyed by the 0-based representative graph edge."""
    if name == "c4_rotation":
        (x1, y1), = pbar
        return {(0, 2): [2 * x1, 2 * y1]}
    if name == "c4_mirror":
        (x1, y1), (x3, y3) = pbar
        return {
            (0, 2): [x1 - x3, y1 - y3, x3 - x1, y3 - y1],
            (0, 1): [4 * x1, 0, 0, 0],
            (2, 3): [0, 0, 4 * x3, 0],
        }
    (x1, y1), (x2, y2) = pbar
    return {
        (0, 1): [x1 - x2, y1 - y2, x2 - x1, y2 - y1],
        (0, 2): [x1 + x2, y1 + y2, x2 + x1, y2 + y1],
    }


def example3_matrix_error(name: str, pbar=None) -> float:
    setup = builtin(name).setup
    ctx = setup.context
    if pbar is None:
        pbar = ctx.representative_points(setup.framework.points)
    O = orbit_rigidity_matrix_raw(ctx.quotient, ctx.rep, pbar)
    oracle = _example3_oracle(name, np.asarray(pbar))
    # the representative graph edge of a quotient edge may be any member of its orbit
    orbits = ctx.orbits
    err = 0.0
    for k, e in enumerate(ctx.quotient.edges):
        key = next(key for key in oracle if orbits.edge_orbit_of(key) == orbits.edge_orbit_of(e.graph_edge))
        err = max(err, float(np.abs(O[k] - np.asarray(oracle[key], dtype=float)).max()))
    if O.shape[0] != len(oracle):
        err = np.inf
    return err


def suite_rigidity() -> list:
    checks = []
    G = c4_graph()
    aut = enumerate_automorphisms(G)
    psi1 = perm_from_images([2, 4, 1, 3])
    psi4 = perm_from_cycles(4, [(1, 2), (3, 4)])
    closure = group_closure([psi1, psi4])
    checks.append(Check("aut_c4", len(aut) == 8 and aut.same_elements(closure), f"|Aut(C4)| = {len(aut)}"))

    orbits = compute_orbits(GroupAction(G, group_closure([psi4])))
    vo = sorted(tuple(v + 1 for v in o) for o in orbits.vertex_orbits)
    eo = sorted(tuple(sorted(tuple(x + 1 for x in e) for e in o)) for o in orbits.edge_orbits)
    ok = vo == [(1, 2), (3, 4)] and eo == [((1, 2),), ((1, 3), (2, 4)), ((3, 4),)]
    checks.append(Check("orbits_c4_mirror", ok, f"vertex {vo}, edge {eo}"))

    rng = np.random.default_rng(2024)
    expected_kernel = {"c4_rotation": 1, "c4_mirror": 1, "c4_halfturn": 2}
    expected_iso = {"c4_rotation": True, "c4_mirror": True, "c4_halfturn": False}
    for name in expected_kernel:
        errs = [example3_matrix_error(name)]
        n_reps = len(builtin(name).setup.context.orbits.representatives)
        errs += [example3_matrix_error(name, rng.normal(size=(n_reps, 2))) for _ in range(5)]
        checks.append(Check(f"orbit_matrix_{name}", max(errs) <= 1e-12, f"max entry error {max(errs):.2e}"))
        setup = builtin(name).setup
        cls = classify(setup.framework, setup.context)
        ok = cls.orbit_kernel_dim == expected_kernel[name] and cls.sym_isostatic == expected_iso[name]
        checks.append(
            Check(f"classify_{name}", ok, f"kernel dim {cls.orbit_kernel_dim}, sym_isostatic {cls.sym_isostatic}")
        )

    worst, dims_ok = 0.0, True
    for sc in builtin_scenarios():
        s = sc.setup
        if s.context.quotient is None:
            continue
        iso = check_orbit_isomorphism(s.framework, s.context)
        dims_ok &= iso.dims_match
        worst = max(worst, iso.max_motion_residual, iso.max_stress_residual)
    checks.append(Check("orbit_isomorphism", dims_ok and worst <= 1e-8, f"max lift residual {worst:.2e}"))

    fig1 = builtin("fig1_c3v").setup.framework
    sym_rank = rigidity_matrix(fig1).rank
    pert = fig1.points + 0.05 * np.random.default_rng(11).normal(size=fig1.points.shape)
    gen_rank = rigidity_matrix(Framework(fig1.graph, pert)).rank
    checks.append(Check("fig1_rank_drop", gen_rank == 15 and sym_rank <= 14, f"generic {gen_rank}, symmetric {sym_rank}"))

    s8 = builtin("example8").setup
    spec = ctl.build_controller("orbit", s8.framework, s8.context, s8.trees)
    budget = ctl.edge_budget(s8.context, spec.coupling)
    checks.append(
        Check(
            "edge_budget_example8",
            budget.within_bound,
            f"construction {budget.construction_count}, distinct {budget.distinct_edges}, bound {budget.bound:g}",
        )
    )
    return checks


# ---------------------------------------------------------------------------
# gradients


def central_gradient(f, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def gradient_pairs(spec_sym, spec_orbit):
    """The five (potential, control) pairs; each control is minus the potential's gradient."""
    return [
        ("classic", lambda p: ctl.formation_potential(spec_sym, p), lambda p: ctl.control_classic(spec_sym, p)),
        ("symmetric", lambda p: ctl.total_potential(spec_sym, p), lambda p: ctl.control_symmetric(spec_sym, p)),
        ("orbit", lambda p: ctl.total_potential(spec_orbit, p), lambda p: ctl.control_orbit(spec_orbit, p)),
        (
            "symmetry_forcing",
            lambda p: ctl.symmetry_potential(spec_orbit, p),
            lambda p: -(spec_orbit.coupling.Q @ np.reshape(p, -1)),
        ),
        (
            "orbit_edge",
            lambda p: ctl.orbit_edge_potential(spec_orbit, p),
            lambda p: -ctl._orbit_distance_term(spec_orbit, np.reshape(p, (spec_orbit.n, -1))),
        ),
    ]


def worst_gradient_errors(n_states: int = 10, seed: int = 0) -> dict:
    s = builtin("example8").setup
    spec_sym = ctl.build_controller("symmetric", s.framework, s.context, s.trees)
    spec_orbit = ctl.build_controller("orbit", s.framework, s.context, s.trees)
    rng = np.random.default_rng(seed)
    states = [s.framework.points + 0.3 * rng.normal(size=s.framework.points.shape) for _ in range(n_states)]
    out = {}
    for name, F, u in gradient_pairs(spec_sym, spec_orbit):
        worst = 0.0
        for p in states:
            fd = -central_gradient(F, p)
            an = np.reshape(u(p), -1)
            worst = max(worst, float(np.linalg.norm(an - fd) / max(1.0, np.linalg.norm(fd))))
        out[name] = worst
    return out


def suite_gradients() -> list:
    return [Check(f"gradient_{k}", v <= 1e-6, f"max relative error {v:.2e}") for k, v in worst_gradient_errors().items()]


# ---------------------------------------------------------------------------
# invariants


def suite_invariants() -> list:
    checks = []
    sc = builtin("c4_mirror")
    s = sc.setup
    spec = ctl.build_controller("symmetric", s.framework, s.context, s.trees)
    traj = integrate(spec, s.p0, cfg=IntegratorConfig(dt=1e-3, T=20.0))
    z = traj.monitors["z"]
    drift = float(np.abs(z - z[0]).max())
    checks.append(Check("z_invariance_c4_mirror", drift <= 1e-8, f"max drift {drift:.2e}"))

    s8 = builtin("example8").setup
    spec = ctl.build_controller("orbit", s8.framework, s8.context, s8.trees)
    Q = spec.coupling.Q
    psd = float(np.linalg.eigvalsh(Q).min())
    kills = float(np.abs(Q @ s8.framework.flat).max())
    checks.append(Check("Q_psd_and_symmetric_kernel", psd >= -1e-12 and kills <= 1e-12, f"min eig {psd:.1e}, |Q p*| {kills:.1e}"))

    traj = integrate(spec, s8.p0, cfg=IntegratorConfig(T=20.0))
    inc = float(np.diff(traj.monitors["V"]).max())
    checks.append(Check("lyapunov_monotone_example8", inc <= 1e-10, f"max per-step increase {inc:.2e}"))

    c4 = builtin("c4_rotation").setup
    spec = ctl.build_controller("orbit", c4.framework, c4.context, c4.trees)
    a = integrate(spec, c4.p0, cfg=IntegratorConfig(dt=1e-3, T=5.0)).final
    b = integrate(spec, c4.p0, cfg=IntegratorConfig(dt=5e-4, T=5.0)).final
    diff = float(np.abs(a - b).max())
    checks.append(Check("step_halving_c4_rotation", diff <= 1e-6, f"terminal difference {diff:.2e}"))
    return checks


# ---------------------------------------------------------------------------
# convergence


def run_builtin(name: str, law: str | None = None, T: float | None = None):
    """Integrate a built-in scenario; returns ``(spec, trajectory, report)``."""
    sc = builtin(name)
    s = sc.setup
    spec = ctl.build_controller(law or sc.controller, s.framework, s.context, s.trees)
    cfg = s.config if T is None else IntegratorConfig(s.config.method, s.config.dt, T, s.config.divergence_guard)
    traj = integrate(spec, s.p0, s.r0, cfg)
    return spec, traj, convergence_report(traj, spec)


def _guarded_run(name):
    try:
        return run_builtin(name)[2], ""
    except SymformaError as exc:
        return None, str(exc)


def suite_convergence() -> list:
    checks = []
    rep, err = _guarded_run("example8")
    detail = err or f"edge error {rep.max_edge_error:.2e}, orbit error {rep.max_orbit_error:.2e}, rate {rep.rate}"
    if rep is not None and rep.status != "ok":
        detail = f"trajectory {rep.status}; " + detail
    checks.append(Check("example8_orbit", rep is not None and rep.passed, detail))
    rep, err = _guarded_run("example8_consensus")
    ok = rep is not None and rep.passed and rep.consensus_error <= 1e-8
    detail = err or (
        f"status {rep.status}, edge error {rep.max_edge_error:.2e}, centroid error {rep.centroid_error:.2e}, "
        f"|r(T) - r*| {rep.consensus_error:.2e}"
    )
    checks.append(Check("example8_consensus", ok, detail))
    return checks


_RUNNERS = {
    "rigidity": suite_rigidity,
    "gradients": suite_gradients,
    "invariants": suite_invariants,
    "convergence": suite_convergence,
}


def run_suite(name: str) -> list:
    """Run ``name`` (or ``all``) and return a list of :class:`SuiteReport`."""
    if name == "all":
        names = list(SUITES)
    elif name in _RUNNERS:
        names = [name]
    else:
        raise ValueError(f"unknown suite {name!r}; choose from {SUITES + ('all',)}")
    return [SuiteReport(n, _RUNNERS[n]()) for n in names]

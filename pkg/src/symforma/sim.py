"""Fixed-step integration of the closed loops with per-step monitors."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .control import ControllerSpec, control
from .exceptions import ArgumentError, IntegrationError

V_FLOOR = 1e-24


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk4"
    dt: float = 1e-3
    T: float = 50.0
    divergence_guard: float = 1e6

    def __post_init__(self):
        if self.method not in ("rk4", "euler"):
            raise ArgumentError(f"unknown integration method {self.method!r}")
        if not self.dt > 0:
            raise ArgumentError(f"dt must be positive, got {self.dt}")
        if not self.T >= self.dt:
            raise ArgumentError(f"horizon T={self.T} is shorter than dt={self.dt}")

    @property
    def steps(self) -> int:
        return int(round(self.T / self.dt))


@dataclass
class Trajectory:
    law: str
    config: IntegratorConfig
    times: np.ndarray
    states: np.ndarray  # (N+1, n, d)
    virtual: np.ndarray | None  # (N+1, n, d) for the consensus law
    monitors: dict = field(default_factory=dict)
    status: str = "ok"
    diagnostic: str = ""

    def __len__(self):
        return len(self.times)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def columns(self):
        n, d = self.states.shape[1:]
        axes = "xyz"[:d] if d <= 3 else [str(a) for a in range(d)]
        names = ["t"] + [f"p_{i + 1}_{a}" for i in range(n) for a in axes]
        if self.virtual is not None:
            names += [f"r_{i + 1}_{a}" for i in range(n) for a in axes]
        names += ["V"] + [f"z_{a}" for a in axes] + ["dist_err_max", "sym_err_max"]
        return names

    def table(self) -> np.ndarray:
        N = len(self.times)
        parts = [self.times[:, None], self.states.reshape(N, -1)]
        if self.virtual is not None:
            parts.append(self.virtual.reshape(N, -1))
        m = self.monitors
        parts += [m["V"][:, None], m["z"], m["dist_err_max"][:, None], m["sym_err_max"][:, None]]
        return np.hstack(parts)

    def to_csv(self, path) -> None:
        np.savetxt(path, self.table(), fmt="%.17g", delimiter=",", header=",".join(self.columns()), comments="")

    def to_json(self, path) -> None:
        tab = self.table()
        record = {
            "law": self.law,
            "status": self.status,
            "diagnostic": self.diagnostic,
            "config": {"method": self.config.method, "dt": self.config.dt, "T": self.config.T},
            "columns": {name: tab[:, k].tolist() for k, name in enumerate(self.columns())},
        }
        with open(path, "w") as fh:
            json.dump(record, fh)


def _vector_field(spec: ControllerSpec):
    n, d = spec.n, spec.dimension
    size = n * d
    if spec.uses_consensus:

        def f(x):
            u, r_dot = control(spec, x[:size].reshape(n, d), x[size:].reshape(n, d))
            return np.concatenate([u.reshape(-1), r_dot.reshape(-1)])

    else:

        def f(x):
            return control(spec, x.reshape(n, d)).reshape(-1)

    return f


def integrate(spec: ControllerSpec, p0, r0=None, cfg: IntegratorConfig | None = None) -> Trajectory:
    """Integrate ``spec``'s closed loop from ``p0`` (and ``r0`` for the consensus law).

    Divergence past ``cfg.divergence_guard`` truncates the trajectory with a
    diagnostic; a non-finite state raises :class:`IntegrationError`.
    """
    cfg = cfg or IntegratorConfig()
    n, d = spec.n, spec.dimension
    p0 = np.asarray(p0, dtype=float).reshape(n, d)
    x = p0.reshape(-1).copy()
    if spec.uses_consensus:
        r0 = p0 if r0 is None else np.asarray(r0, dtype=float).reshape(n, d)
        x = np.concatenate([x, r0.reshape(-1)])
    f = _vector_field(spec)
    N = cfg.steps
    dt = cfg.dt
    X = np.empty((N + 1, x.size))
    X[0] = x
    status, diagnostic = "ok", ""
    last = N
    guard = cfg.divergence_guard

    def too_big(y):
        return np.max(np.abs(y)) > guard

    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(N):
            if cfg.method == "rk4":
                k1 = f(x)
                s2 = x + 0.5 * dt * k1
                k2 = f(s2)
                s3 = x + 0.5 * dt * k2
                k3 = f(s3)
                s4 = x + dt * k3
                k4 = f(s4)
                stages = (s2, s3, s4)
                x_new = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            else:
                stages = ()
                x_new = x + dt * f(x)
            # blow-up inside a step shows up in the stages before it overflows the update
            if any(too_big(s) for s in stages) or (np.all(np.isfinite(x_new)) and too_big(x_new)):
                status = "diverged"
                diagnostic = f"|state| exceeded {guard:g} during step {k + 1} (t={(k + 1) * dt:g}); trajectory truncated"
                last = k
                break
            if not np.all(np.isfinite(x_new)):
                raise IntegrationError("non-finite state", k + 1)
            x = x_new
            X[k + 1] = x
    X = X[: last + 1]
    times = np.arange(last + 1) * dt
    states = X[:, : n * d].reshape(-1, n, d)
    virtual = X[:, n * d :].reshape(-1, n, d) if spec.uses_consensus else None
    traj = Trajectory(spec.law, cfg, times, states, virtual, status=status, diagnostic=diagnostic)
    traj.monitors = compute_monitors(spec, states, virtual)
    return traj


def _batched_transform(mats, pts):
    return np.einsum("kij,tkj->tki", mats, pts)


def compute_monitors(spec: ControllerSpec, states: np.ndarray, virtual: np.ndarray | None = None) -> dict:
    """Monitor series for a stack of configurations ``(T, n, d)``.

    ``V`` is half the squared norm of the law's error vector: squared-length
    errors over all edges (classic), plus the tree symmetry errors
    (symmetric), or the quotient-edge errors plus tree symmetry errors (orbit
    laws, evaluated at ``p - r`` for the consensus law).
    """
    T = states.shape[0]
    shifted = states if virtual is None else states - virtual
    e = spec.edges
    diff = states[:, e[:, 0]] - states[:, e[:, 1]]
    lengths2 = np.einsum("tki,tki->tk", diff, diff)
    dist_err = np.abs(np.sqrt(lengths2) - np.sqrt(spec.d2))
    out = {"dist_err_max": dist_err.max(axis=1) if e.size else np.zeros(T)}

    ctx = spec.context
    if ctx is not None:
        rep, orbits = ctx.rep, ctx.orbits
        mapped = np.einsum("vij,tvj->tvi", rep.matrices[list(orbits.mapper)], shifted)
        target = shifted[:, [orbits.rep(v) for v in range(spec.n)]]
        out["sym_err_max"] = np.linalg.norm(mapped - target, axis=2).max(axis=1)
        out["z"] = np.einsum("gij,tvj->ti", rep.matrices, states)
    else:
        out["sym_err_max"] = np.zeros(T)
        out["z"] = states.sum(axis=1)

    if spec.coupling is not None and len(spec.coupling.pairs):
        a, b = spec.coupling.pairs[:, 0], spec.coupling.pairs[:, 1]
        q = (shifted[:, a] - _batched_transform(spec.coupling.transforms, shifted[:, b])).reshape(T, -1)
    else:
        q = np.zeros((T, 0))
    if spec.law in ("orbit", "orbit_consensus"):
        qd = shifted[:, spec.q_tail] - _batched_transform(spec.q_gain, shifted[:, spec.q_head])
        sigma = np.einsum("tki,tki->tk", qd, qd) - spec.d0sq
    else:
        sigma = lengths2 - spec.d2
        if spec.law == "classic":
            q = np.zeros((T, 0))
    out["sigma"] = sigma
    out["q"] = q
    out["V"] = 0.5 * (np.einsum("tk,tk->t", sigma, sigma) + np.einsum("tk,tk->t", q, q))
    return out


def fit_decay_rate(times, V, window=None, floor: float = V_FLOOR):
    """Least-squares slope of ``-log V``; defaults to the final half of the horizon.

    Samples at or below ``floor`` are roundoff and are dropped. Returns None
    when fewer than ten samples remain.
    """
    times = np.asarray(times)
    V = np.asarray(V)
    if window is None:
        window = (times[-1] / 2.0, times[-1])
    mask = (times >= window[0]) & (times <= window[1]) & (V > floor)
    if mask.sum() < 10:
        return None
    slope, _ = np.polyfit(times[mask], np.log(V[mask]), 1)
    return float(-slope)


@dataclass
class ConvergenceReport:
    edge_errors: np.ndarray
    orbit_errors: np.ndarray
    rate: float | None
    tolerance: float
    centroid_error: float | None = None
    consensus_error: float | None = None
    status: str = "ok"
    law: str = "orbit"

    @property
    def max_edge_error(self) -> float:
        return float(self.edge_errors.max()) if self.edge_errors.size else 0.0

    @property
    def max_orbit_error(self) -> float:
        return float(self.orbit_errors.max()) if self.orbit_errors.size else 0.0

    @property
    def passed(self) -> bool:
        ok = self.status == "ok" and self.max_edge_error < self.tolerance
        # the classic law does not steer towards symmetry; its orbit errors are informational
        if self.law != "classic":
            ok = ok and self.max_orbit_error < self.tolerance
        if self.centroid_error is not None:
            ok = ok and self.centroid_error < self.tolerance
        return ok

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "law": self.law,
            "status": self.status,
            "tolerance": self.tolerance,
            "max_edge_error": self.max_edge_error,
            "max_orbit_error": self.max_orbit_error,
            "edge_errors": self.edge_errors.tolist(),
            "orbit_errors": self.orbit_errors.tolist(),
            "rate": self.rate,
            "centroid_error": self.centroid_error,
            "consensus_error": self.consensus_error,
        }


def orbit_symmetry_errors(spec: ControllerSpec, points) -> np.ndarray:
    """Per vertex orbit, ``max |p_u - tau(gamma_vu) p_v|`` over all ordered pairs ``u, v`` in the orbit."""
    ctx = spec.context
    if ctx is None:
        return np.zeros(0)
    group, rep = ctx.action.group, ctx.rep
    errs = []
    for orb in ctx.orbits.vertex_orbits:
        worst = 0.0
        for u in orb:
            for v in orb:
                g = group.element_mapping(v, u)
                worst = max(worst, float(np.linalg.norm(points[u] - rep[g] @ points[v])))
        errs.append(worst)
    return np.array(errs)


def convergence_report(traj: Trajectory, spec: ControllerSpec, tolerance: float = 1e-6, window=None) -> ConvergenceReport:
    final = traj.final
    e = spec.edges
    lengths = np.linalg.norm(final[e[:, 0]] - final[e[:, 1]], axis=1)
    edge_errors = np.abs(lengths - np.sqrt(spec.d2))
    shifted = final if traj.virtual is None else final - traj.virtual[-1]
    orbit_errors = orbit_symmetry_errors(spec, shifted)
    V = traj.monitors["V"]
    rate = None if np.all(V <= V_FLOOR) else fit_decay_rate(traj.times, V, window)
    centroid_error = consensus_error = None
    if traj.virtual is not None:
        r_star = traj.virtual[0].mean(axis=0)
        centroid_error = float(np.linalg.norm(final.mean(axis=0) - r_star))
        consensus_error = float(np.abs(traj.virtual[-1] - r_star).max())
    return ConvergenceReport(
        edge_errors=edge_errors,
        orbit_errors=orbit_errors,
        rate=rate,
        tolerance=tolerance,
        centroid_error=centroid_error,
        consensus_error=consensus_error,
        status=traj.status,
        law=traj.law,
    )

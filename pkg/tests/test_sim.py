import json

import numpy as np
import pytest

from conftest import framework_with_targets
from symforma import control as ctl
from symforma.exceptions import ArgumentError, IntegrationError
from symforma.scenario import builtin
from symforma.sim import (
    IntegratorConfig,
    convergence_report,
    fit_decay_rate,
    integrate,
)
from symforma.symmetry import Graph
from symforma.verify import run_builtin

EDGE = Graph(2, [(0, 1)])


@pytest.fixture
def edge_spec():
    return ctl.build_controller("classic", framework_with_targets(EDGE, [[0, 0], [1, 0]]))


def squared_length_oracle(t, s0):
    # d/dt s = -4 (s - 1) s for one edge of unit target length, s = |p1 - p2|^2
    return 1.0 / (1.0 - (1.0 - 1.0 / s0) * np.exp(-4.0 * t))


def test_config_validation():
    with pytest.raises(ArgumentError):
        IntegratorConfig(method="leapfrog")
    with pytest.raises(ArgumentError):
        IntegratorConfig(dt=0.0)
    with pytest.raises(ArgumentError):
        IntegratorConfig(dt=1.0, T=0.5)
    assert IntegratorConfig(dt=1e-3, T=2.0).steps == 2000


def test_equilibrium_is_constant(c4_rotation_setup):
    s = c4_rotation_setup
    spec = ctl.build_controller("orbit", s.framework, s.context, s.trees)
    traj = integrate(spec, s.framework.points, cfg=IntegratorConfig(T=1.0))
    assert np.abs(traj.states - s.framework.points).max() < 1e-14
    assert convergence_report(traj, spec).rate is None


def test_single_edge_matches_closed_form(edge_spec):
    traj = integrate(edge_spec, [[0, 0], [2, 0]], cfg=IntegratorConfig(dt=1e-3, T=1.0))
    s = np.sum((traj.states[:, 0] - traj.states[:, 1]) ** 2, axis=1)
    np.testing.assert_allclose(s, squared_length_oracle(traj.times, 4.0), rtol=1e-10)


def test_single_edge_converges(edge_spec):
    traj = integrate(edge_spec, [[0, 0], [2, 0]], cfg=IntegratorConfig(T=10.0))
    rep = convergence_report(traj, edge_spec)
    assert rep.passed and rep.max_edge_error < 1e-6
    # linearised rate of s - 1 is 4, so V = (s - 1)^2 / 4 decays at 8
    assert rep.rate is None or rep.rate == pytest.approx(8.0, rel=0.05)


def test_euler_is_first_order(edge_spec):
    exact = squared_length_oracle(0.5, 4.0)

    def err(dt):
        traj = integrate(edge_spec, [[0, 0], [2, 0]], cfg=IntegratorConfig("euler", dt, 0.5))
        return abs(np.sum((traj.final[0] - traj.final[1]) ** 2) - exact)

    assert err(1e-3) / err(5e-4) == pytest.approx(2.0, rel=0.05)


def test_step_halving_rk4(c4_rotation_setup):
    s = c4_rotation_setup
    spec = ctl.build_controller("orbit", s.framework, s.context, s.trees)
    a = integrate(spec, s.p0, cfg=IntegratorConfig(dt=1e-3, T=5.0)).final
    b = integrate(spec, s.p0, cfg=IntegratorConfig(dt=5e-4, T=5.0)).final
    assert np.abs(a - b).max() < 1e-6


def test_divergence_truncates(edge_spec):
    traj = integrate(edge_spec, [[0, 0], [10, 0]], cfg=IntegratorConfig("euler", 0.1, 5.0))
    assert traj.status == "diverged"
    assert "truncated" in traj.diagnostic
    assert len(traj) < 51
    assert not convergence_report(traj, edge_spec).passed


@pytest.mark.slow
def test_flipped_consensus_coupling_diverges(monkeypatch):
    monkeypatch.setattr(ctl, "_CONSENSUS_COUPLING_SIGN", 1.0)
    _, traj, rep = run_builtin("example8_consensus")
    assert traj.status == "diverged"
    assert not rep.passed


def test_nan_raises(edge_spec):
    with pytest.raises(IntegrationError) as info:
        integrate(edge_spec, [[np.nan, 0], [1, 0]], cfg=IntegratorConfig(T=0.01))
    assert info.value.step == 1


def test_fit_decay_rate_recovers_exponential():
    t = np.linspace(0, 10, 1001)
    assert fit_decay_rate(t, 3.0 * np.exp(-0.7 * t)) == pytest.approx(0.7, rel=1e-9)
    assert fit_decay_rate(t[:5], np.exp(-t[:5])) is None


def test_monitors(example8):
    spec = ctl.build_controller("orbit", example8.framework, example8.context, example8.trees)
    traj = integrate(spec, example8.p0, cfg=IntegratorConfig(T=1.0))
    m = traj.monitors
    V = m["V"]
    assert V.shape == (len(traj),)
    assert np.all(np.diff(V) <= 1e-15)
    assert m["dist_err_max"][-1] < m["dist_err_max"][0]


class TestExport:
    @pytest.fixture
    def traj(self, edge_spec):
        return integrate(edge_spec, [[0, 0], [2, 0]], cfg=IntegratorConfig(dt=0.01, T=0.1))

    def test_csv_header_and_shape(self, traj, tmp_path):
        path = tmp_path / "t.csv"
        traj.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "t,p_1_x,p_1_y,p_2_x,p_2_y,V,z_x,z_y,dist_err_max,sym_err_max"
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        assert data.shape == (11, 10)
        np.testing.assert_array_equal(data, traj.table())

    def test_csv_is_deterministic(self, edge_spec, tmp_path):
        cfg = IntegratorConfig(dt=0.01, T=0.5)
        for name in ("a.csv", "b.csv"):
            integrate(edge_spec, [[0, 0], [2, 0]], cfg=cfg).to_csv(tmp_path / name)
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_json(self, traj, tmp_path):
        path = tmp_path / "t.json"
        traj.to_json(path)
        rec = json.loads(path.read_text())
        assert rec["law"] == "classic" and rec["status"] == "ok"
        assert list(rec["columns"]) == traj.columns()
        assert rec["columns"]["t"][-1] == pytest.approx(0.1)

    def test_consensus_columns(self):
        sc = builtin("example8_consensus")
        s = sc.setup
        spec = ctl.build_controller("orbit_consensus", s.framework, s.context, s.trees)
        traj = integrate(spec, s.p0, s.r0, IntegratorConfig(dt=0.01, T=0.02))
        cols = traj.columns()
        assert cols.index("r_1_x") == 1 + 2 * spec.n
        assert f"r_{spec.n}_y" in cols
        assert traj.table().shape == (3, len(cols))

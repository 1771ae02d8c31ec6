import numpy as np
import pytest

from evoctrl import dynamics, game, reference


def test_velocity_vanishes_at_rest_points(A):
    for _, eq in game.EQUILIBRIA:
        x = np.asarray(eq, dtype=float)
        v = dynamics.replicator_velocity(A, x)
        assert np.allclose(v, 0.0, atol=1e-14)


def test_velocity_is_tangent_to_simplex(A):
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = rng.dirichlet(np.ones(5))
        v = dynamics.replicator_velocity(A, x)
        assert abs(v.sum()) < 1e-12


def test_jacobian_matches_directional_derivative(A):
    f = dynamics.replicator_field(A)
    rng = np.random.default_rng(1)
    x = rng.dirichlet(np.ones(5))
    J = dynamics.jacobian(f, x)
    for _ in range(5):
        v = rng.normal(size=5)
        v /= np.linalg.norm(v)
        h = 1e-6
        dd = (f(x + h * v) - f(x - h * v)) / (2 * h)
        assert np.allclose(J @ v, dd, atol=1e-6)


def test_spectrum_order_is_canonical():
    J = np.diag([1.0, 3.0, 2.0])
    s = dynamics.eigs(J)
    assert np.allclose(s.eigenvalues.real, [3.0, 2.0, 1.0])
    # conjugate pairs come out with positive imaginary part first
    R = np.array([[0.0, -1.0], [1.0, 0.0]])
    s2 = dynamics.eigs(R)
    assert s2.eigenvalues[0].imag > 0 > s2.eigenvalues[1].imag


def test_open_loop_spectrum_at_nash_1(A, nash1):
    J = dynamics.jacobian(dynamics.replicator_field(A), nash1)
    lam = dynamics.eigs(J).eigenvalues
    assert np.allclose(lam, reference.OPEN_LOOP_EIGENVALUES, atol=1e-5)


def test_open_loop_eigenvectors_match_table(A, nash1):
    J = dynamics.jacobian(dynamics.replicator_field(A), nash1)
    s = dynamics.eigs(J)
    for k in range(5):
        col = reference.phase_align(s.eigenvectors[:, k], reference.EIGENVECTOR_TABLE[:, k])
        assert np.max(np.abs(col - reference.EIGENVECTOR_TABLE[:, k])) < 5e-3, f"column {k + 1}"


def test_fourth_eigenvector_high_precision(A, nash1):
    J = dynamics.jacobian(dynamics.replicator_field(A), nash1)
    s = dynamics.eigs(J)
    col = reference.phase_align(s.eigenvectors[:, 3], reference.EIGENVECTOR_4_PRECISE)
    assert np.max(np.abs(col.real - reference.EIGENVECTOR_4_PRECISE)) < 2e-5
    assert np.max(np.abs(col.imag)) < 1e-10


def test_nash_2_open_spectrum(A, nash2):
    J = dynamics.jacobian(dynamics.replicator_field(A), nash2)
    lam = np.sort(dynamics.eigs(J).eigenvalues.real)
    assert np.allclose(lam, np.sort(reference.NASH_2_OPEN_SPECTRUM), atol=1e-6)
    assert np.max(np.abs(dynamics.eigs(J).eigenvalues.imag)) < 1e-8


def test_integrate_stays_on_simplex(A):
    f = dynamics.replicator_field(A)
    traj = dynamics.integrate(f, np.full(5, 0.2), dt=0.01, steps=500)
    assert traj.shape == (501, 5)
    assert np.allclose(traj.sum(axis=1), 1.0, atol=1e-9)
    assert (traj >= -1e-12).all()


def test_integrate_fixed_point_is_stationary(A, nash2):
    f = dynamics.replicator_field(A)
    traj = dynamics.integrate(f, nash2, dt=0.01, steps=100)
    assert np.allclose(traj[-1], nash2, atol=1e-10)


def test_integrate_rejects_off_simplex_start(A):
    f = dynamics.replicator_field(A)
    with pytest.raises(ValueError):
        dynamics.integrate(f, np.ones(5), dt=0.01, steps=10)


def test_integrate_blow_up_guard():
    growth = dynamics.VectorField(lambda x: 5.0 * x, label="unstable")
    with pytest.raises(dynamics.BlowUp):
        dynamics.integrate(growth, np.full(5, 0.2), dt=0.1, steps=200, renormalize=False)


def test_renormalized_field_is_tangent(A):
    leaky = dynamics.VectorField(lambda x: x * 0 + 1.0, label="leaky")
    proj = dynamics.renormalized_field(leaky)
    rng = np.random.default_rng(2)
    for _ in range(10):
        x = rng.dirichlet(np.ones(5))
        assert abs(proj(x).sum()) < 1e-12


def test_tangent_spectrum_keeps_the_neutral_mode(A, nash2):
    # within the simplex the rest point keeps its drift direction (rate 0)
    # and one of the two -0.5 contractions is transverse to the simplex
    f = dynamics.replicator_field(A)
    ts = dynamics.tangent_spectrum(f, nash2)
    assert ts.shape == (4,)
    got = np.sort(ts.real)
    assert np.allclose(got, [-1.5, -1.5, -0.5, 0.0], atol=1e-6)
    assert np.max(np.abs(ts.imag)) < 1e-8


def test_save_trajectory_format(A, tmp_path):
    f = dynamics.replicator_field(A)
    traj = dynamics.integrate(f, np.full(5, 0.2), dt=0.05, steps=10)
    out = tmp_path / "traj.csv"
    dynamics.save_trajectory(traj, 0.05, out)
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "t,x1,x2,x3,x4,x5"
    assert len(lines) == 12
    row = lines[3].split(",")
    assert float(row[0]) == pytest.approx(0.10)
    assert sum(float(v) for v in row[1:]) == pytest.approx(1.0, abs=1e-9)

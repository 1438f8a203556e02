"""Tests for the truncated-Fock exact-diagonalization consistency checks."""

import math

import numpy as np
import pytest
import scipy.linalg as sla

from pairboson.errors import DimensionExceeded, ModelError
from pairboson.model import Model, gaussian_profile, delta_profile
from pairboson.oracle import (
    FockSpec, build_operator, build_hamiltonian, trace_pressure,
    check_superstability, check_variational_chain,
    check_pair_exchange_bound, _workspace,
)
from pairboson.pressure import ThermoPoint, OrderPoint, pressure_fv_modes

MODES = ((0.0,), (1.0,), (-1.0,))
MODEL = Model(dim=1, mass=0.5, u=0.5, v=1.0,
              lambda_profile=gaussian_profile(0.5))
TP = ThermoPoint(beta=1.0, mu=-0.4)
V = 3.0


def spec(n_max=6, headroom=2):
    return FockSpec(modes=MODES, n_max=n_max, headroom=headroom)


class TestFockSpec:
    def test_requires_zero_mode(self):
        with pytest.raises(ModelError):
            FockSpec(modes=((1.0,), (-1.0,)), n_max=4)

    def test_requires_negation_closure(self):
        with pytest.raises(ModelError):
            FockSpec(modes=((0.0,), (1.0,)), n_max=4)

    def test_dimension_cap(self):
        with pytest.raises(DimensionExceeded):
            build_operator(FockSpec(modes=MODES, n_max=40), "N", MODEL)


class TestLadderAlgebra:
    def test_a0_squared_on_two_quanta(self):
        # A_0 = a_0 a_0 maps |2,0,0> to sqrt(2)|0,0,0>
        sp = FockSpec(modes=((0.0,),), n_max=2)
        A0 = build_operator(sp, "A_k", MODEL, k=(0.0,)).matrix
        ws = _workspace(sp)
        states = [ws.ext_states[i] for i in ws.work_idx]
        i0, i2 = states.index((0,)), states.index((2,))
        assert A0[i0, i2] == pytest.approx(math.sqrt(2.0))

    def test_n_diagonal(self):
        sp = spec(4)
        N = build_operator(sp, "N", MODEL).matrix
        ws = _workspace(sp)
        assert np.allclose(N, np.diag(np.diag(N)))
        np.testing.assert_allclose(np.diag(N).real,
                                   [sum(ws.ext_states[i])
                                    for i in ws.work_idx])

    def test_qdagq_on_two_zero_quanta(self):
        # <n0=2| Q^dag Q |n0=2> = N0 (N0 - 1) = 2 for the delta profile
        m = Model(dim=1, mass=0.5, u=0.5, v=1.0,
                  lambda_profile=delta_profile())
        sp = spec(4)
        QdQ = build_operator(sp, "Q_dagger_Q", m).matrix
        ws = _workspace(sp)
        idx = [ws.ext_states[i] for i in ws.work_idx].index((2, 0, 0))
        assert QdQ[idx, idx] == pytest.approx(2.0)

    def test_commutator_on_interior(self):
        # [a, a^dag] = 1 on all states with n < n_max
        sp = FockSpec(modes=((0.0,),), n_max=6, headroom=2)
        ws = _workspace(sp)
        a = ws.lower[0].toarray()
        comm = a @ a.conj().T - a.conj().T @ a
        interior = [i for i, s in enumerate(ws.ext_states)
                    if s[0] < sp.n_max]
        for i in interior:
            assert comm[i, i] == pytest.approx(1.0)


class TestHamiltonianIdentities:
    Q, RHO, ETA = 0.3, 0.8, 0.2

    def test_hermiticity(self):
        for kind in ("full", "approx1", "approx2", "residual_r",
                     "mean_field"):
            H = build_hamiltonian(spec(), kind, MODEL, V, q=self.Q,
                                  rho=self.RHO, eta=self.ETA).matrix
            assert np.max(np.abs(H - H.conj().T)) < 1e-12

    def test_full_equals_approx1_plus_residual(self):
        sp = spec()
        Hf = build_hamiltonian(sp, "full", MODEL, V, eta=self.ETA).matrix
        H1 = build_hamiltonian(sp, "approx1", MODEL, V, q=self.Q,
                               eta=self.ETA).matrix
        Hr = build_hamiltonian(sp, "residual_r", MODEL, V, q=self.Q,
                               eta=self.ETA).matrix
        assert np.max(np.abs(Hf - H1 - Hr)) < 1e-12

    def test_approx1_minus_approx2_is_density_square(self):
        sp = spec()
        H1 = build_hamiltonian(sp, "approx1", MODEL, V, q=self.Q,
                               eta=self.ETA).matrix
        H2 = build_hamiltonian(sp, "approx2", MODEL, V, q=self.Q,
                               rho=self.RHO, eta=self.ETA).matrix
        ws = _workspace(sp)
        Nw = ws.Ntot[ws.work_idx]
        D = (MODEL.v / (2.0 * V)) * (Nw - V * self.RHO) ** 2
        assert np.max(np.abs((H1 - H2) - np.diag(D))) < 1e-12

    def test_residual_sign(self):
        sp = spec()
        Hr = build_hamiltonian(sp, "residual_r", MODEL, V, q=self.Q).matrix
        assert sla.eigvalsh(Hr.real).max() < 1e-10  # u > 0: residual <= 0
        m = Model(dim=1, mass=0.5, u=-0.5, v=1.0,
                  lambda_profile=gaussian_profile(0.5))
        Hr = build_hamiltonian(sp, "residual_r", m, V, q=self.Q).matrix
        assert sla.eigvalsh(Hr.real).min() > -1e-10  # u < 0: residual >= 0

    def test_residual_sign_negative_control(self):
        # flipping the sign of u must break the semidefiniteness check
        m = Model(dim=1, mass=0.5, u=-0.5, v=1.0,
                  lambda_profile=gaussian_profile(0.5))
        Hr = build_hamiltonian(spec(), "residual_r", m, V, q=self.Q).matrix
        assert sla.eigvalsh(Hr.real).max() > 1e-3  # not <= 0 anymore


class TestTracePressure:
    def test_single_mode_geometric_sum(self):
        sp = FockSpec(modes=((0.0,),), n_max=10)
        omega = 0.7
        m = Model(dim=1, mass=0.5, u=0.0, v=1.0,
                  lambda_profile=gaussian_profile(1.0))
        ws = _workspace(sp)
        from pairboson.oracle import OperatorMatrix
        H = OperatorMatrix(matrix=np.diag(omega * ws.Ntot[ws.work_idx])
                           .astype(complex), label="test", params={})
        tp = ThermoPoint(beta=2.0, mu=0.0)
        got = trace_pressure(H, sp, tp, 1.0)
        expected = math.log(sum(math.exp(-2.0 * omega * n)
                                for n in range(11))) / 2.0
        assert got == pytest.approx(expected, rel=1e-14)
        # n_max -> infinity: geometric series
        assert got == pytest.approx(-math.log1p(-math.exp(-2.0 * omega))
                                    / 2.0, rel=1e-6)

    def test_approx2_matches_closed_form(self):
        q, rho, eta = 0.3, 0.8, 0.2
        closed = pressure_fv_modes(MODEL, TP, OrderPoint(q, rho, eta),
                                   [0.0, 1.0, 1.0], V)
        errs = []
        for n_max in (6, 9, 12):
            H = build_hamiltonian(spec(n_max), "approx2", MODEL, V,
                                  q=q, rho=rho, eta=eta)
            ptr = trace_pressure(H, spec(n_max), TP, V)
            errs.append(abs(ptr - closed) / abs(closed))
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] <= 1e-4

    def test_gauge_covariance(self):
        q, rho, eta = 0.3, 0.8, 0.2
        sp = spec(6)
        for kind in ("full", "approx1", "approx2"):
            base = trace_pressure(build_hamiltonian(
                sp, kind, MODEL, V, q=q, rho=rho, eta=eta), sp, TP, V)
            for phi in (0.9, 2.4):
                rot = trace_pressure(build_hamiltonian(
                    sp, kind, MODEL, V, q=q, rho=rho,
                    eta=eta * np.exp(1j * phi)), sp, TP, V)
                assert abs(rot - base) < 1e-12

    def test_truncation_monotone(self):
        prev = -np.inf
        for n_max in (4, 6, 8):
            p = trace_pressure(build_hamiltonian(
                spec(n_max), "full", MODEL, V, eta=0.2), spec(n_max), TP, V)
            assert p >= prev
            prev = p


class TestChecks:
    def test_superstability_delta_single_mode(self):
        # N^2 + MVN - Q^dag Q = N(MV + 1) >= 0 exactly
        m = Model(dim=1, mass=0.5, u=0.5, v=1.0,
                  lambda_profile=delta_profile())
        sp = FockSpec(modes=((0.0,),), n_max=8)
        rep = check_superstability(sp, m, 2.0)
        assert rep["passed"]
        assert rep["min_eig_pair_bound"] >= -1e-10

    def test_superstability_three_mode(self):
        for u in (0.5, -0.5):
            m = Model(dim=1, mass=0.5, u=u, v=1.0,
                      lambda_profile=gaussian_profile(0.5))
            rep = check_superstability(spec(), m, V)
            assert rep["passed"], rep

    def test_variational_chain(self):
        rep = check_variational_chain(spec(), MODEL, TP, V,
                                      q_grid=np.linspace(0.0, 0.8, 4),
                                      rho_grid=np.linspace(0.1, 1.5, 4),
                                      eta=0.2)
        assert rep["passed"]
        assert rep["min_slack_full_vs_approx1"] >= -1e-10
        assert rep["min_slack_approx2_vs_approx1"] >= -1e-10

    def test_variational_chain_repulsive_flips(self):
        m = Model(dim=1, mass=0.5, u=-0.5, v=1.0,
                  lambda_profile=gaussian_profile(0.5))
        rep = check_variational_chain(spec(), m, TP, V,
                                      q_grid=np.linspace(0.0, 0.8, 4),
                                      rho_grid=np.linspace(0.1, 1.5, 4),
                                      eta=0.2)
        assert rep["passed"]

    def test_pair_exchange_bound(self):
        for sign in (1, -1):
            rep = check_pair_exchange_bound(spec(), MODEL, (1.0,), (0.0,),
                                            sign=sign)
            assert rep["passed"], rep

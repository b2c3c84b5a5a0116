from fractions import Fraction

import math
import pytest

from gshe import normal_form as nf


def test_reduction_matrix_symplectic():
    nf.check_symplectic(nf.reduction_matrix())


def test_non_symplectic_rejected():
    T = nf.reduction_matrix()
    T = [row[:] for row in T]
    T[0][1] = T[0][1] * 2
    with pytest.raises(nf.NotSymplectic):
        nf.check_symplectic(T)


def test_linear_reduction_coefficients():
    H = nf.linear_reduce(nf.original_hamiltonian())
    assert H.coefficient((0, 0, 3, 0)) == nf.kappa * nf.s * Fraction(-1, 12)
    assert H.coefficient((0, 4, 0, 0)) == nf.ExactPoly.const(Fraction(-1, 256))


def test_poisson_basics():
    assert nf.poisson(nf.q1, nf.p1) == nf.ExactPoly.const(1)
    assert nf.poisson(nf.I1, nf.I2).is_zero()
    assert nf.poisson(nf.I1, nf.I3).is_zero()
    a, b, c = nf.q1 * nf.p2, nf.q2 ** 2 + nf.p1, nf.p1 * nf.q1
    jac = nf.poisson(a, nf.poisson(b, c)) + nf.poisson(b, nf.poisson(c, a)) + nf.poisson(c, nf.poisson(a, b))
    assert jac.is_zero()


def test_sqrt2_reduction():
    assert nf.s * nf.s == nf.ExactPoly.const(2)


def test_transcribed_generators_leave_residual():
    with pytest.raises(nf.NormalizationMismatch):
        nf.psi5_normalize(5, f4="transcribed")


def test_lie_flow_rejects_low_weight():
    with pytest.raises(nf.NonincreasingWeight):
        nf.lie_flow(nf.original_hamiltonian(), nf.p1 * nf.p2, 5)


def test_derived_generator_normalizes_exactly():
    H, rep = nf.psi5_normalize(5, f4="derived")
    assert rep.residual.is_zero()
    assert rep.eta_matches and rep.mu_matches


def test_derived_generator_keeps_printed_kappa1_part():
    printed = nf.generators()[4]
    derived = nf.derived_f4()
    diff = printed - derived
    for mono in diff.terms:
        assert mono[nf.KAPPA] == 3


def test_nf_separatrix_closed_forms():
    sep = nf.nf_separatrix(0.1, 2, 0.0, 0.0)
    assert sep.r5 == pytest.approx(math.sqrt(2 / (125 / 288)), rel=1e-14)
    assert sep.r5 == pytest.approx(2.146625, abs=1e-6)
    # dr5/dz = -R5 and dR5/dz = -r5 (1 - eta r5^2)
    eta = 125 / 288
    h = 1e-6
    for z in (-1.5, -0.3, 0.7):
        a = nf.nf_separatrix(0.1, 2, 0.0, z)
        ap = nf.nf_separatrix(0.1, 2, 0.0, z + h)
        am = nf.nf_separatrix(0.1, 2, 0.0, z - h)
        assert (ap.r5 - am.r5) / (2 * h) == pytest.approx(-a.R5, abs=1e-8)
        assert (ap.R5 - am.R5) / (2 * h) == pytest.approx(-a.r5 * (1 - eta * a.r5 ** 2), abs=1e-8)

"""Equation-of-motion derivation and averaging against hand-checked forms."""

import pytest

from cqf import (FILTER_PHASE, I_UNIT, average, average_symbol, identity,
                 meanfield_derive, parameters, qle_rhs, qmul, zero)
from cqf.algebra import ScalarExpr
from cqf.errors import AlgebraError, SpaceMismatchError
from cqf.meanfield import MeanfieldEquation, ModelDefinition


def _avg(*exprs) -> ScalarExpr:
    ops = []
    for e in exprs:
        ops.extend(e.monomial_ops())
    return ScalarExpr.from_average(average_symbol(tuple(ops)))


def test_field_operator_equation(laser):
    """d a/dt = -(i Delta + kappa/2) a - i g sge."""
    got = qle_rhs(laser.a, laser.model)
    expected = laser.a.scale(-(I_UNIT * laser.delta + laser.kappa / 2)) \
        - laser.sge.scale(I_UNIT * laser.g)
    assert got == expected
    assert repr(got) == "(-i*Δ - 1/2*κ)*a - i*g*σge"


def test_population_operator_equation(laser):
    """d see/dt = -gamma see + nu (1 - see) + i g (a' sge - a seg)."""
    got = qle_rhs(laser.see, laser.model)
    expected = (
        laser.see.scale(-laser.gamma)
        + (identity(laser.space) - laser.see).scale(laser.nu)
        + (qmul(laser.ad, laser.sge) - qmul(laser.a, laser.seg)).scale(I_UNIT * laser.g)
    )
    assert got == expected


def test_coherence_operator_equation_has_the_doubled_term(laser):
    """The commutator gives i g a (2 see - 1), matching the second-order
    photon equation's structure; the damping is -(gamma+nu)/2."""
    got = qle_rhs(laser.sge, laser.model)
    expected = (
        laser.sge.scale(-(laser.gamma + laser.nu) / 2)
        - laser.a.scale(I_UNIT * laser.g)
        + qmul(laser.a, laser.see).scale(2 * I_UNIT * laser.g)
    )
    assert got == expected


def test_identity_is_conserved(laser, three_level, optomech):
    for model in (laser.model, three_level.model, optomech.model):
        assert qle_rhs(identity(model.space), model).is_zero


def test_projector_completeness_is_conserved(three_level):
    """Sum of all level projectors evolves trivially (populations conserved)."""
    total = zero(three_level.space)
    for m in (1, 2, 3):
        total = total + three_level.s(m, m)
    assert total == identity(three_level.space)
    assert qle_rhs(total, three_level.model).is_zero


def test_qle_rhs_is_linear(laser):
    alpha, beta = parameters("c1 c2")
    x, y = qmul(laser.ad, laser.a), laser.see
    combined = qle_rhs(x.scale(alpha) + y.scale(beta), laser.model)
    separate = qle_rhs(x, laser.model).scale(alpha) + \
        qle_rhs(y, laser.model).scale(beta)
    assert combined == separate


def test_space_mismatch_raises(laser, optomech):
    with pytest.raises(SpaceMismatchError):
        qle_rhs(optomech.a, laser.model)


def test_averaging_is_linear(laser):
    lam1, lam2 = parameters("λ1 λ2")
    x = qmul(laser.ad, laser.sge).scale(lam1) + laser.see.scale(lam2)
    assert average(x) == lam1 * _avg(laser.ad, laser.sge) + lam2 * _avg(laser.see)


def test_average_of_identity(laser):
    assert average(identity(laser.space)) == ScalarExpr.one()
    assert average(qmul(laser.a, laser.ad)) == _avg(laser.ad, laser.a) + 1


def test_averaged_field_equation(laser):
    got = average(qle_rhs(laser.a, laser.model))
    expected = -(I_UNIT * laser.delta + laser.kappa / 2) * _avg(laser.a) \
        - I_UNIT * laser.g * _avg(laser.sge)
    assert got == expected
    assert repr(got) == "-i*Δ*⟨a⟩ - 1/2*κ*⟨a⟩ - i*g*⟨σge⟩"


def test_averaged_population_equation(laser):
    got = average(qle_rhs(laser.see, laser.model))
    expected = laser.nu * (1 - _avg(laser.see)) - laser.gamma * _avg(laser.see) \
        + I_UNIT * laser.g * (_avg(laser.ad, laser.sge) - _avg(laser.a, laser.seg))
    assert got == expected


def test_first_order_field_equation(laser):
    eqs = meanfield_derive([laser.a], laser.model, 1, None)
    eq = eqs.equations[0]
    assert eq.lhs == average_symbol(laser.a.monomial_ops())
    expected = -(I_UNIT * laser.delta + laser.kappa / 2) * _avg(laser.a) \
        - I_UNIT * laser.g * _avg(laser.sge)
    assert eq.rhs == expected
    assert eq.render() == "d⟨a⟩/dt = -i*Δ*⟨a⟩ - 1/2*κ*⟨a⟩ - i*g*⟨σge⟩"


def test_second_order_photon_equation(laser):
    eqs = meanfield_derive([qmul(laser.ad, laser.a)], laser.model, 2,
                           FILTER_PHASE)
    eq = eqs.equations[0]
    expected = -laser.kappa * _avg(laser.ad, laser.a) \
        - I_UNIT * laser.g * _avg(laser.ad, laser.sge) \
        + I_UNIT * laser.g * _avg(laser.a, laser.seg)
    assert eq.rhs == expected


def test_second_order_population_equation(laser):
    eqs = meanfield_derive([laser.see], laser.model, 2, FILTER_PHASE)
    eq = eqs.equations[0]
    expected = laser.nu * (1 - _avg(laser.see)) - laser.gamma * _avg(laser.see) \
        + I_UNIT * laser.g * (_avg(laser.ad, laser.sge) - _avg(laser.a, laser.seg))
    assert eq.rhs == expected


def test_sum_seeds_are_rejected(laser):
    with pytest.raises(AlgebraError, match="separately"):
        meanfield_derive([laser.a + laser.see], laser.model, 2, None)


def test_duplicate_and_conjugate_seeds_collapse(laser):
    eqs = meanfield_derive([laser.a, laser.a, adjoint_of(laser.a)],
                           laser.model, 1, None)
    assert len(eqs) == 1


def adjoint_of(x):
    return x.dag()


def test_equation_hermiticity(laser):
    """Deriving O and O' independently gives conjugate right-hand sides."""
    for op in (laser.a, qmul(laser.ad, laser.sge), laser.sge):
        rhs = average(qle_rhs(op, laser.model))
        rhs_dag = average(qle_rhs(op.dag(), laser.model))
        assert rhs.conj() == rhs_dag


def test_mismatched_jump_rate_lengths(laser):
    with pytest.raises(AlgebraError):
        ModelDefinition.create(laser.space, laser.model.hamiltonian,
                               jumps=(laser.a,), rates=())

"""Shared model fixtures.

The single-atom laser (cavity + two-level atom with decay, pumping and
cavity loss) is the workhorse: small enough to solve by hand, rich enough
to exercise every part of the pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass

import pytest

from cqf import (FILTER_PHASE, ModelDefinition, QExpr, ScalarExpr, create,
                 destroy, fock, nlevel, parameters, product, transition)


@dataclass
class Laser:
    space: object
    a: QExpr
    ad: QExpr
    sge: QExpr
    seg: QExpr
    see: QExpr
    delta: ScalarExpr
    g: ScalarExpr
    kappa: ScalarExpr
    gamma: ScalarExpr
    nu: ScalarExpr
    model: ModelDefinition
    params: dict


def make_laser() -> Laser:
    hc = fock("cavity")
    ha = nlevel("atom", ("g", "e"))
    h = product(hc, ha)
    a = destroy(h, "a")
    ad = create(h, "a")
    sge = transition(h, "σ", "g", "e")
    seg = transition(h, "σ", "e", "g")
    see = transition(h, "σ", "e", "e")
    delta, g, kappa, gamma, nu = parameters("Δ g κ γ ν")
    H = delta * (ad * a) + g * (ad * sge + a * seg)
    model = ModelDefinition.create(h, H, jumps=(a, sge, seg),
                                   rates=(kappa, gamma, nu))
    params = dict(Δ=0.5, g=1.5, γ=1.25, κ=1.0, ν=4.0)
    return Laser(h, a, ad, sge, seg, see, delta, g, kappa, gamma, nu,
                 model, params)


@pytest.fixture(scope="session")
def laser() -> Laser:
    return make_laser()


@dataclass
class ThreeLevel:
    space: object
    a: QExpr
    ad: QExpr
    model: ModelDefinition
    params: dict

    def s(self, i, j) -> QExpr:
        return transition(self.space, "σ", str(i), str(j))


def make_three_level() -> ThreeLevel:
    hf = fock("cavity")
    ha = nlevel("atom", 3)
    h = product(hf, ha)
    a = destroy(h, "a")
    ad = create(h, "a")

    def s(i, j):
        return transition(h, "σ", str(i), str(j))

    d3, g, big_gamma, gamma, kappa, nu = parameters("Δ3 g Γ γ κ ν")
    H = d3 * s(3, 3) + g * (ad * s(1, 3) + a * s(3, 1))
    model = ModelDefinition.create(
        h, H, jumps=(a, s(3, 2), s(1, 3), s(2, 1)),
        rates=(kappa, big_gamma, gamma, nu))
    params = dict(Δ3=0.0, g=1.8, Γ=20.0, γ=1.5, κ=1.0, ν=10.0)
    return ThreeLevel(h, a, ad, model, params)


@pytest.fixture(scope="session")
def three_level() -> ThreeLevel:
    return make_three_level()


@dataclass
class Tavis:
    space: object
    a: QExpr
    ad: QExpr
    n_atoms: int
    model: ModelDefinition
    params: dict

    def s(self, i, j, k) -> QExpr:
        return transition(self.space, f"σ{k + 1}", str(i), str(j),
                          f"atom{k + 1}")


def make_tavis(n_atoms: int) -> Tavis:
    hf = fock("cavity")
    atoms = [nlevel(f"atom{i + 1}", 2) for i in range(n_atoms)]
    h = product(hf, *atoms)
    a = destroy(h, "a", "cavity")
    ad = create(h, "a", "cavity")

    def s(i, j, k):
        return transition(h, f"σ{k + 1}", str(i), str(j), f"atom{k + 1}")

    delta, g, kappa, gamma = parameters("Δ g κ γ")
    H = delta * (ad * a)
    for k in range(n_atoms):
        H = H + g * (ad * s(1, 2, k) + a * s(2, 1, k))
    jumps = [a] + [s(1, 2, k) for k in range(n_atoms)]
    rates = [kappa] + [gamma] * n_atoms
    model = ModelDefinition.create(h, H, jumps, rates)
    params = dict(Δ=0.5, g=0.5, γ=0.25, κ=1.0)
    return Tavis(h, a, ad, n_atoms, model, params)


@dataclass
class Optomech:
    space: object
    a: QExpr
    b: QExpr
    model: ModelDefinition
    params: dict


def make_optomech() -> Optomech:
    hc = fock("cavity")
    hm = fock("motion")
    h = product(hc, hm)
    a = destroy(h, "a", "cavity")
    b = destroy(h, "b", "motion")
    delta, om, drive, g0, kappa = parameters("Δ ωm E G κ")
    H = (-1) * delta * (a.dag() * a) + om * (b.dag() * b) \
        + g0 * (a.dag() * a * (b + b.dag())) + drive * (a + a.dag())
    model = ModelDefinition.create(h, H, jumps=(a,), rates=(kappa,))
    params = dict(Δ=-10.0, ωm=1.0, E=200.0, G=0.0125, κ=20.0)
    return Optomech(h, a, b, model, params)


@pytest.fixture(scope="session")
def optomech() -> Optomech:
    return make_optomech()

"""Tests for the single-copy OR testers and the amplified decision."""

import math

import numpy as np
import pytest

from shadowtomo.errors import ModeUnsupportedError
from shadowtomo.instances import or_promise_instance, random_density, random_effect
from shadowtomo.ledger import CopySource
from shadowtomo.linalg import tensor_power
from shadowtomo.modes import FidelityMode
from shadowtomo.orbound import (
    OrBoundParams,
    controlled_or_test,
    or_bound_decide,
    random_order_or_test,
)
from shadowtomo.quantum import (
    DensityMatrix,
    ThresholdEffect,
    accept_prob,
    identity_effect,
    materialize_threshold,
    zero_effect,
)
from shadowtomo.rng import substream


def test_params_derived_ell_formula():
    p = OrBoundParams(c=0.9, epsilon=0.5, delta=0.1)
    # ceil(4 ln(max(M,2)) / eps^2), explicit at a few sizes
    assert p.derived_ell(8) == math.ceil(4.0 * math.log(8) / 0.25)
    assert p.derived_ell(1) == math.ceil(4.0 * math.log(2) / 0.25)
    assert OrBoundParams(c=0.9, epsilon=0.5, delta=0.1, ell=7).derived_ell(8) == 7


def test_params_derived_rounds_formula():
    p = OrBoundParams(c=0.9, epsilon=0.5, delta=0.1)
    assert p.derived_rounds() == math.ceil(48.0 * math.log(10.0))
    assert OrBoundParams(c=0.9, epsilon=0.5, delta=0.1, rounds=11).derived_rounds() == 11


def test_params_validation():
    with pytest.raises(ValueError):
        OrBoundParams(c=0.5, epsilon=0.6, delta=0.1)  # eps > c
    with pytest.raises(ValueError):
        OrBoundParams(c=0.5, epsilon=0.1, delta=1.5)


def test_controlled_or_certain_effect_exact_lower_bound():
    # single effect with Tr(E rho) = 1: accept prob at least 1/7
    rho = DensityMatrix(np.diag([1.0, 0.0]).astype(complex))
    res = controlled_or_test([identity_effect(2)], rho, FidelityMode.EXACT_TENSOR, substream(0, 0))
    assert res.exact_accept_prob is not None
    assert res.exact_accept_prob >= 1.0 / 7.0


def test_controlled_or_all_zero_effects_never_accepts():
    rho = DensityMatrix(np.diag([0.5, 0.5]).astype(complex))
    res = controlled_or_test(
        [zero_effect(2), zero_effect(2)], rho, FidelityMode.EXACT_TENSOR, substream(1, 0)
    )
    assert res.exact_accept_prob == 0.0
    assert not res.accepted


def test_controlled_or_rejects_fresh_mode():
    rho = DensityMatrix(np.diag([0.5, 0.5]).astype(complex))
    with pytest.raises(ModeUnsupportedError):
        controlled_or_test(
            [identity_effect(2)], rho, FidelityMode.FRESH_COPY_STATISTICAL, substream(2, 0)
        )


def test_controlled_or_monte_carlo_matches_exact_prob():
    rng = substream(3, 0)
    rho = random_density(2, rng)
    effects = [random_effect(2, rng) for _ in range(3)]
    exact = controlled_or_test(
        effects, rho, FidelityMode.EXACT_TENSOR, substream(3, 1)
    ).exact_accept_prob
    runs = 2000
    hits = 0
    for i in range(runs):
        res = controlled_or_test(effects, rho, FidelityMode.PER_COPY_COLLAPSE, substream(3, i + 2))
        hits += res.accepted
    freq = hits / runs
    sigma = math.sqrt(exact * (1.0 - exact) / runs)
    assert abs(freq - exact) <= 3.0 * sigma + 1e-9


def test_controlled_or_acceptance_bounds_on_random_instances():
    # eps and Delta read off the instance itself, so both bounds must hold
    for s in range(25):
        rng = substream(4, s)
        m = int(rng.integers(1, 5))
        ell = int(rng.integers(1, 4))
        base = random_density(2, rng)
        joint = DensityMatrix(tensor_power(base.mat, ell), atol=1e-8)
        effects = []
        for _ in range(m):
            e = random_effect(2, rng)
            if ell == 1:
                effects.append(e)
            else:
                t = int(rng.integers(1, ell + 1))
                effects.append(materialize_threshold(ThresholdEffect(e, ell, t, "at_least")))
        ps = [accept_prob(e, joint) for e in effects]
        res = controlled_or_test(effects, joint, FidelityMode.EXACT_TENSOR, substream(5, s))
        assert res.exact_accept_prob >= max(ps) ** 2 / 7.0 - 1e-12
        assert res.exact_accept_prob <= 4.0 * sum(ps) + 1e-12


def test_random_order_all_identity_accepts_all_zero_rejects():
    rho = DensityMatrix(np.diag([0.5, 0.5]).astype(complex))
    assert random_order_or_test(
        [identity_effect(2)] * 3, rho, FidelityMode.PER_COPY_COLLAPSE, substream(6, 0)
    )
    assert not random_order_or_test(
        [zero_effect(2)] * 3, rho, FidelityMode.PER_COPY_COLLAPSE, substream(6, 1)
    )


def test_or_bound_decide_consumes_exactly_ell_times_rounds():
    rng = substream(7, 0)
    inst = or_promise_instance(2, 4, 0.95, 0.3, rng)
    params = OrBoundParams(c=0.9, epsilon=0.5, delta=0.1)
    src = CopySource(inst.rho, FidelityMode.FRESH_COPY_STATISTICAL, substream(7, 1))
    decision = or_bound_decide(list(inst.effects), src, params, FidelityMode.FRESH_COPY_STATISTICAL)
    ell = params.derived_ell(4)
    rounds = params.derived_rounds()
    assert decision.ell == ell
    assert decision.rounds == rounds
    assert decision.copies_consumed == ell * rounds
    assert src.ledger.consumed == ell * rounds


def test_or_bound_decide_planted_and_all_below():
    params = OrBoundParams(c=0.9, epsilon=0.5, delta=0.1)
    planted = 0
    below = 0
    for s in range(40):
        rng = substream(8, s)
        inst_hi = or_promise_instance(2, 4, 0.95, 0.3, rng)
        src = CopySource(inst_hi.rho, FidelityMode.FRESH_COPY_STATISTICAL, substream(9, s))
        if or_bound_decide(list(inst_hi.effects), src, params, src.mode).case == "case_i":
            planted += 1
        rng2 = substream(10, s)
        inst_lo = or_promise_instance(2, 4, None, 0.3, rng2)
        src2 = CopySource(inst_lo.rho, FidelityMode.FRESH_COPY_STATISTICAL, substream(11, s))
        if or_bound_decide(list(inst_lo.effects), src2, params, src2.mode).case == "case_ii":
            below += 1
    assert planted >= 38
    assert below >= 38


def test_or_bound_decide_certain_effect_case_i():
    # M=1, E=I, c=1: every round accepts
    params = OrBoundParams(c=1.0, epsilon=0.5, delta=0.1)
    rho = DensityMatrix(np.diag([0.5, 0.5]).astype(complex))
    src = CopySource(rho, FidelityMode.FRESH_COPY_STATISTICAL, substream(12, 0))
    decision = or_bound_decide([identity_effect(2)], src, params, src.mode)
    assert decision.case == "case_i"
    assert decision.accept_count == decision.rounds


def test_or_bound_threshold_clamped_into_register_range():
    # c - eps/2 above 1 would give threshold > ell; the builder must clamp
    params = OrBoundParams(c=1.0, epsilon=0.1, delta=0.1, ell=3, rounds=8)
    rho = DensityMatrix(np.diag([1.0, 0.0]).astype(complex))
    src = CopySource(rho, FidelityMode.FRESH_COPY_STATISTICAL, substream(13, 0))
    decision = or_bound_decide([identity_effect(2)], src, params, src.mode)
    assert 0 <= decision.threshold <= 3 + 1

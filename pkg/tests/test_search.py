"""Tests for the gentle binary search over candidate measurements."""

import math

import numpy as np
import pytest

from shadowtomo.instances import or_promise_instance
from shadowtomo.ledger import CopySource
from shadowtomo.modes import FidelityMode
from shadowtomo.quantum import DensityMatrix, Effect, identity_effect
from shadowtomo.rng import substream
from shadowtomo.search import (
    SearchParams,
    gentle_search,
    search_budget,
    search_copy_bound,
    verification_size,
    verify_candidate,
)


def test_level_params_padding_and_split():
    p = SearchParams(c=0.9, epsilon=0.5, delta=0.1)
    levels, alpha, beta = p.level_params(8)
    assert levels == 3
    assert abs(alpha - 0.5 / 3) < 1e-15
    assert abs(beta - 0.1 / 3) < 1e-15
    # non-power-of-two pads up
    assert p.level_params(5)[0] == 3
    assert p.level_params(1)[0] == 0


def test_params_validation():
    with pytest.raises(ValueError):
        SearchParams(c=0.5, epsilon=0.5, delta=0.1)  # eps must be < c


def test_search_budget_frozen_values():
    # M=8, c=0.9, eps=0.5, delta=0.1: three halving levels with shrinking
    # ells, the fixed round count, and the final verification sample
    p = SearchParams(c=0.9, epsilon=0.5, delta=0.1)
    b = search_budget(8, p)
    assert b.levels == 3
    assert b.ells == (200, 100, 100)
    assert b.rounds == 164
    assert sum(e * b.rounds for e in b.ells) == 65600
    assert b.verify_units == 681
    assert b.total_units == 66281


def test_search_budget_single_candidate_is_verification_only():
    p = SearchParams(c=0.9, epsilon=0.5, delta=0.1)
    b = search_budget(1, p)
    assert b.levels == 0
    assert b.ells == ()
    assert b.total_units == b.verify_units == verification_size(0.1, min(0.5, 0.4))


def test_verification_size_formula():
    assert verification_size(0.1, 0.4) == math.ceil(32.0 * math.log(10.0) / 0.16)


def test_search_copy_bound_formula():
    got = search_copy_bound(8, 0.5, 0.1)
    lg = 3.0
    want = 64.0 * lg**4 / 0.25 * (math.log(lg) + math.log(10.0))
    assert abs(got - want) < 1e-9


def test_budget_within_copy_bound_at_reference_point():
    p = SearchParams(c=0.9, epsilon=0.5, delta=0.1)
    assert search_budget(8, p).total_units <= search_copy_bound(8, 0.5, 0.1)


def test_verify_candidate_confirms_and_rejects():
    rho = DensityMatrix(np.diag([1.0, 0.0]).astype(complex))
    src = CopySource(rho, FidelityMode.FRESH_COPY_STATISTICAL, substream(0, 0))
    ok, mean = verify_candidate(identity_effect(2), src, 0.9, 0.4, 0.05, src.mode)
    assert ok and mean == 1.0
    src2 = CopySource(rho, FidelityMode.FRESH_COPY_STATISTICAL, substream(0, 1))
    low = Effect(np.diag([0.1, 0.0]).astype(complex))
    ok2, mean2 = verify_candidate(low, src2, 0.9, 0.4, 0.05, src2.mode)
    assert not ok2
    assert mean2 < 0.5


def test_gentle_search_finds_planted_candidate():
    found = 0
    for s in range(25):
        rng = substream(1, s)
        inst = or_promise_instance(2, 8, 0.95, 0.3, rng)
        truth = np.array(inst.ground_truth)
        p = SearchParams(c=0.9, epsilon=0.5, delta=0.1)
        src = CopySource(inst.rho, FidelityMode.FRESH_COPY_STATISTICAL, substream(2, s))
        res = gentle_search(list(inst.effects), src, p, src.mode)
        if res.found and truth[res.index] >= 0.9 - 0.5:
            found += 1
        assert res.copies_consumed == search_budget(8, p).total_units
        assert res.copies_consumed <= search_copy_bound(8, 0.5, 0.1)
    assert found >= 23


def test_gentle_search_all_far_below_returns_not_found():
    # decoys must sit below the verification cutoff bar - gap/2 = 0.2 for
    # the reject guarantee to apply
    misses = 0
    for s in range(20):
        rng = substream(3, s)
        inst = or_promise_instance(2, 8, None, 0.1, rng)
        p = SearchParams(c=0.9, epsilon=0.5, delta=0.1)
        src = CopySource(inst.rho, FidelityMode.FRESH_COPY_STATISTICAL, substream(4, s))
        res = gentle_search(list(inst.effects), src, p, src.mode)
        misses += not res.found
    assert misses >= 18


def test_gentle_search_level_bars_decrease_linearly():
    rng = substream(5, 0)
    inst = or_promise_instance(2, 8, 0.95, 0.3, rng)
    p = SearchParams(c=0.9, epsilon=0.5, delta=0.1)
    src = CopySource(inst.rho, FidelityMode.FRESH_COPY_STATISTICAL, substream(5, 1))
    res = gentle_search(list(inst.effects), src, p, src.mode)
    levels, alpha, _ = p.level_params(8)
    assert len(res.level_bars) == levels
    for k, bar in enumerate(res.level_bars):
        assert abs(bar - (0.9 - k * alpha)) < 1e-12


def test_gentle_search_deterministic_for_fixed_seed():
    rng = substream(6, 0)
    inst = or_promise_instance(2, 4, 0.95, 0.3, rng)
    p = SearchParams(c=0.9, epsilon=0.5, delta=0.1)
    results = []
    for _ in range(2):
        src = CopySource(inst.rho, FidelityMode.FRESH_COPY_STATISTICAL, substream(6, 1))
        results.append(gentle_search(list(inst.effects), src, p, src.mode))
    assert results[0] == results[1]


def test_gentle_search_handles_none_padding():
    # padding to a power of two inserts never-accept placeholders; a list
    # already containing None slots must behave the same way
    rng = substream(7, 0)
    inst = or_promise_instance(2, 4, 0.95, 0.3, rng)
    effects = list(inst.effects) + [None, None]
    p = SearchParams(c=0.9, epsilon=0.5, delta=0.1)
    src = CopySource(inst.rho, FidelityMode.FRESH_COPY_STATISTICAL, substream(7, 1))
    res = gentle_search(effects, src, p, src.mode)
    if res.found:
        assert res.index < 4

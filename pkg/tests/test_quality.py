"""Comparison rules, the allowance schedule, and the facilitator."""
from __future__ import annotations

import math
from random import Random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cogopt import catalog
from cogopt.quality import (
    COMPARATOR_PARAMS,
    AdjusterState,
    QualityPair,
    State,
    adjust_ratio_reaching,
    encode,
    keep_best,
    make_adjuster,
    make_facilitator,
    qc_natural,
    qc_o3r,
    qc_penalized,
    qc_static_relaxing,
    qc_stochastic,
)
from conftest import ScriptedRng, flat_problem

_qp = QualityPair

_finite = st.floats(allow_nan=False, allow_infinity=False, width=64)
_pairs = st.builds(_qp, st.floats(0, 1e9), _finite)


def test_natural_prefers_less_violation_then_less_objective():
    assert qc_natural(_qp(0.0, 5.0), _qp(1.0, -5.0))
    assert not qc_natural(_qp(1.0, -5.0), _qp(0.0, 5.0))
    assert qc_natural(_qp(2.0, 3.0), _qp(2.0, 3.0))  # ties are acceptable
    assert qc_natural(_qp(2.0, 2.9), _qp(2.0, 3.0))
    assert not qc_natural(_qp(2.0, 3.1), _qp(2.0, 3.0))


@given(a=_pairs, b=_pairs)
def test_natural_is_lexicographic_tuple_order(a, b):
    assert qc_natural(a, b) == (tuple(a) <= tuple(b))


@given(a=_pairs, b=_pairs, c=_pairs)
def test_natural_is_transitive(a, b, c):
    if qc_natural(a, b) and qc_natural(b, c):
        assert qc_natural(a, c)


@given(a=_pairs, b=_pairs, c_ap=st.floats(0, 1e6))
def test_penalized_is_a_single_weighted_figure(a, b, c_ap):
    want = a.v_obj + c_ap * a.v_con <= b.v_obj + c_ap * b.v_con
    assert qc_penalized(a, b, c_ap) == want


def test_penalized_with_zero_weight_ignores_violation():
    assert qc_penalized(_qp(100.0, 1.0), _qp(0.0, 2.0), 0.0)


def test_penalized_rejects_negative_weight():
    with pytest.raises(ValueError, match="-1"):
        qc_penalized(_qp(0, 0), _qp(0, 0), -1.0)


def test_stochastic_deterministic_clauses_consume_no_draws():
    rng = ScriptedRng([])  # raises if anything draws
    assert qc_stochastic(_qp(0.0, 9.0), _qp(1.0, 0.0), 0.5, rng)
    assert qc_stochastic(_qp(1.0, 3.0), _qp(1.0, 3.0), 0.5, rng)
    assert not qc_stochastic(_qp(1.0, 3.1), _qp(1.0, 3.0), 0.5, rng)
    assert rng.consumed == 0


def test_stochastic_tie_break_consumes_exactly_one_draw():
    a, b = _qp(2.0, 1.0), _qp(1.0, 5.0)  # a is more violated but better
    rng = ScriptedRng([0.3])
    assert qc_stochastic(a, b, 0.5, rng)  # U < c_pf and objectives agree
    assert rng.consumed == 1

    rng = ScriptedRng([0.7])
    assert not qc_stochastic(a, b, 0.5, rng)  # U >= c_pf: violation decides

    # Even a winning draw cannot rescue a worse objective.
    rng = ScriptedRng([0.0])
    assert not qc_stochastic(_qp(2.0, 9.0), _qp(1.0, 5.0), 0.5, rng)
    assert rng.consumed == 1


def test_stochastic_rejects_bad_probability():
    for c_pf in (-0.1, 1.1):
        with pytest.raises(ValueError):
            qc_stochastic(_qp(0, 0), _qp(0, 0), c_pf, Random(0))


def test_static_relaxing_truth_table():
    c_er = 1.0
    # b outside the allowance: only a strictly smaller violation wins.
    assert qc_static_relaxing(_qp(1.5, 99.0), _qp(2.0, 0.0), c_er)
    assert not qc_static_relaxing(_qp(2.0, 0.0), _qp(2.0, 99.0), c_er)
    # Both inside: violations are forgiven, objectives decide.
    assert qc_static_relaxing(_qp(1.0, 3.0), _qp(0.0, 4.0), c_er)
    assert not qc_static_relaxing(_qp(0.0, 5.0), _qp(1.0, 4.0), c_er)
    # a outside, b inside: a cannot win.
    assert not qc_static_relaxing(_qp(1.1, -99.0), _qp(0.5, 99.0), c_er)


def test_zero_allowance_relaxing_matches_natural_on_distinct_violations():
    # With c_er = 0 only exactly-feasible states are forgiven.
    assert qc_static_relaxing(_qp(0.0, 2.0), _qp(0.0, 3.0), 0.0)
    assert not qc_static_relaxing(_qp(1e-12, -1.0), _qp(0.0, 1.0), 0.0)


# --------------------------------------------------------------------------
# Allowance schedule
# --------------------------------------------------------------------------


def _fresh(c_ere=1e-3, c_rnu=0.5, c_rtu=0.5):
    return AdjusterState(c_ere=c_ere, c_rnu=c_rnu, c_rtu=c_rtu)


def test_allowance_starts_at_worst_feedback_violation():
    adj = _fresh()
    adjust_ratio_reaching(adj, 1, 100, [_qp(0.5, 0), _qp(7.25, 0), _qp(3.0, 0)])
    assert adj.c_er == 7.25


def test_first_cycle_requires_feedback():
    with pytest.raises(ValueError, match="feedback"):
        adjust_ratio_reaching(_fresh(), 1, 100, [])


def test_allowance_pins_to_zero_past_the_horizon():
    adj = _fresh(c_rtu=0.5)
    adj.c_er = 4.0
    adjust_ratio_reaching(adj, 51, 100, [])  # t_th = 50
    assert adj.c_er == 0.0


def test_contraction_gated_by_reached_ratio():
    adj = _fresh(c_ere=1e-3, c_rnu=0.5, c_rtu=0.5)
    adj.c_er = 4.0
    # 1 of 3 within the allowance: 1 <= 0.5 * 3, no movement.
    adjust_ratio_reaching(adj, 10, 100, [_qp(3.0, 0), _qp(5.0, 0), _qp(9.0, 0)])
    assert adj.c_er == 4.0
    # 2 of 3 within: 2 > 1.5, one geometric step toward the target.
    adjust_ratio_reaching(adj, 10, 100, [_qp(3.0, 0), _qp(4.0, 0), _qp(9.0, 0)])
    assert adj.c_er == pytest.approx(4.0 * (1e-3 / 4.0) ** (1.0 / 41.0), rel=1e-15)


def test_zero_allowance_stays_zero():
    adj = _fresh()
    adj.c_er = 0.0
    adjust_ratio_reaching(adj, 5, 100, [_qp(0.0, 0)])
    assert adj.c_er == 0.0


def test_horizon_rounds_half_up():
    # 0.25 * 10 = 2.5 rounds to 3: cycle 3 is still active, cycle 4 is not.
    adj = _fresh(c_rtu=0.25)
    adj.c_er = 2.0
    adjust_ratio_reaching(adj, 3, 10, [_qp(0.0, 0), _qp(0.0, 0)])
    assert 0.0 < adj.c_er < 2.0
    adjust_ratio_reaching(adj, 4, 10, [])
    assert adj.c_er == 0.0


def test_rtu_zero_disables_the_schedule_entirely():
    adj = _fresh(c_rtu=0.0)
    adjust_ratio_reaching(adj, 1, 100, [_qp(9.0, 0)])
    assert adj.c_er == 0.0


@given(
    c_er0=st.floats(1e-6, 1e6),
    c_ere=st.floats(1e-9, 1e3),
    t_th=st.integers(2, 60),
)
def test_always_gated_schedule_lands_exactly_on_target(c_er0, c_ere, t_th):
    """A contraction per cycle reaches c_ere at the horizon, not before zero."""
    adj = AdjusterState(c_ere=c_ere, c_rnu=0.5, c_rtu=0.5)
    n_cycles = 2 * t_th  # makes the horizon land exactly on t_th
    feedback = [_qp(0.0, 0.0), _qp(min(c_er0, c_ere) / 2.0, 0.0)]
    adjust_ratio_reaching(adj, 1, n_cycles, [_qp(c_er0, 0.0)])
    assert adj.c_er == c_er0
    previous = adj.c_er
    for t in range(2, t_th + 1):
        adjust_ratio_reaching(adj, t, n_cycles, feedback)
        if c_ere <= c_er0:
            assert adj.c_er <= previous
        previous = adj.c_er
    assert adj.c_er == pytest.approx(c_ere, rel=1e-9)


def test_make_adjuster_target_scales_with_band_width():
    problem = catalog.load("G11")  # one +/- 1e-4 band
    adj = make_adjuster(problem, c_rre=10.0, c_rnu=0.5, c_rtu=0.5)
    assert adj.c_ere == pytest.approx(10.0 * 1e-4, rel=1e-15)
    assert adj.c_er == 0.0


# --------------------------------------------------------------------------
# Facilitator
# --------------------------------------------------------------------------

_O3R_PARAMS = {"C_RRE": 10.0, "C_RNU": 0.5, "C_RTU": 0.5, "C_FB": "$x_DP"}


def test_o3r_keeps_natural_search_on_wide_landscapes():
    fac = make_facilitator(catalog.load("G06"), "O3R", dict(_O3R_PARAMS), Random(0))
    assert fac.adjuster is None
    assert fac.internal is qc_natural
    assert fac.feedback_chunk == ""


def test_o3r_relaxes_only_banded_landscapes():
    fac = make_facilitator(catalog.load("G11"), "O3R", dict(_O3R_PARAMS), Random(0))
    assert fac.adjuster is not None
    assert fac.feedback_chunk == "$x_DP"
    fac.adjuster.c_er = 5.0
    # Within the allowance the more-violated but better-valued state wins...
    assert fac.internal(_qp(3.0, 1.0), _qp(0.0, 2.0))
    # ...which the natural rule would never allow.
    assert not fac.natural(_qp(3.0, 1.0), _qp(0.0, 2.0))


def test_o3r_dispatch_boundary_uses_band_width():
    narrow = flat_problem(intervals=((0.0, 0.0),), eps_h=1e-4)
    wide = flat_problem(intervals=((0.0, 3e-4),), eps_h=1e-4)
    adj = AdjusterState(c_ere=1.0, c_rnu=0.5, c_rtu=0.5)
    assert qc_o3r(narrow, adj) is not qc_natural  # width 2e-4 <= 2 * eps_h
    assert qc_o3r(wide, adj) is qc_natural  # width 3e-4 > 2 * eps_h


def test_facilitator_kinds_and_their_parameters():
    assert COMPARATOR_PARAMS == {
        "O": (),
        "P": ("C_AP",),
        "S": ("C_PF",),
        "RS": ("C_ER",),
        "O3R": ("C_RRE", "C_RNU", "C_RTU", "C_FB"),
    }


def test_make_facilitator_natural_and_penalized():
    problem = catalog.load("G06")
    fac = make_facilitator(problem, "O", {}, Random(0))
    assert fac.internal is qc_natural and fac.adjuster is None

    fac = make_facilitator(problem, "P", {"C_AP": 2.0}, Random(0))
    assert fac.internal(_qp(1.0, 0.0), _qp(0.0, 2.0))  # 0 + 2*1 <= 2 + 0
    assert not fac.internal(_qp(1.0, 0.1), _qp(0.0, 2.0))


def test_make_facilitator_stochastic_draws_from_the_given_stream():
    rng = ScriptedRng([0.99])
    fac = make_facilitator(catalog.load("G06"), "S", {"C_PF": 0.45}, rng)
    assert not fac.internal(_qp(2.0, 0.0), _qp(1.0, 5.0))
    assert rng.consumed == 1


def test_make_facilitator_static_relaxing():
    fac = make_facilitator(catalog.load("G06"), "RS", {"C_ER": 1.0}, Random(0))
    assert fac.internal(_qp(1.0, 3.0), _qp(0.5, 4.0))


def test_make_facilitator_rejects_bad_configuration():
    problem = catalog.load("G06")
    with pytest.raises(ValueError, match="C_AP"):
        make_facilitator(problem, "P", {"C_AP": -1.0}, Random(0))
    with pytest.raises(ValueError, match="C_PF"):
        make_facilitator(problem, "S", {"C_PF": 1.5}, Random(0))
    with pytest.raises(ValueError, match="unknown comparator"):
        make_facilitator(problem, "Q", {}, Random(0))


def test_keep_best_improves_strictly():
    fac = make_facilitator(catalog.load("G06"), "O", {}, Random(0))
    assert keep_best(fac, (1.0, 1.0), _qp(1.0, 5.0))  # first offer always lands
    assert fac.best_so_far == State((1.0, 1.0), _qp(1.0, 5.0))

    # An equal-quality candidate never displaces the incumbent.
    assert not keep_best(fac, (2.0, 2.0), _qp(1.0, 5.0))
    assert fac.best_so_far.x == (1.0, 1.0)

    assert keep_best(fac, (3.0, 3.0), _qp(1.0, 4.0))
    assert not keep_best(fac, (4.0, 4.0), _qp(2.0, -100.0))
    assert fac.best_so_far.x == (3.0, 3.0)


def test_encode_pairs_violation_with_objective():
    problem = flat_problem(dimension=2, intervals=((-math.inf, 4.0),))
    q = encode(problem, (1.0, 2.0))
    assert q == _qp(0.0, 3.0)
    q = encode(problem, (9.0, 2.0))  # first coordinate read by the row
    assert q == _qp(5.0, 11.0)

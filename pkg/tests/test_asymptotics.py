import math

import numpy as np
import pytest

from dumbbell_spectra.analytic import RectMode
from dumbbell_spectra.asymptotics import (BranchRecord, BranchTrace, boundary_value,
                                          eigfn_error_ratios, fit_slope, limit_field,
                                          slope_deviation, sl_targets, track_branches, verdict)
from dumbbell_spectra.eigen import Parity
from dumbbell_spectra.errors import BranchNotFound, InsufficientData, TheoremViolation

from conftest import M_WIDTH, MU1, dumbbell


def _rec(eps, le, lo, ie=7, io=6, ce=7, co=6, err=None, stable=True):
    e = err if err is not None else eps * eps
    return BranchRecord(eps, le, lo, (le, le), (lo, lo), ie, io, ce, co, stable, stable,
                        e, e, e, e)


def _trace(mu=MU1, slope_e=2.0, slope_o=-1.0, eps=(0.08, 0.04, 0.02)):
    return BranchTrace(mu, slope_e, slope_o,
                       [_rec(e, mu + slope_e * e, mu + slope_o * e) for e in eps])


def test_synthetic_slope_exact():
    fit = fit_slope(_trace())
    assert fit["slope_even"] == pytest.approx(2.0)
    assert fit["r_squared_even"] == pytest.approx(1.0)
    assert fit["deviation_odd"] == pytest.approx(0.0, abs=1e-12)
    assert fit["intercept_log_model_even"] == pytest.approx(2.0)


def test_log_model_recovers_intercept():
    eps = np.array([0.08, 0.04, 0.02, 0.01])
    d = eps * (2.5 + 3.0 * eps * np.log(eps) + 1.0 * eps)
    tr = BranchTrace(1.0, 2.5, -1.0, [_rec(e, 1.0 + x, 1.0 - e) for e, x in zip(eps, d)])
    fit = fit_slope(tr)
    assert fit["intercept_log_model_even"] == pytest.approx(2.5, rel=1e-10)
    assert fit["deviation_even"] > 0.0


def test_insufficient_data():
    with pytest.raises(InsufficientData):
        fit_slope(_trace(eps=(0.08, 0.04)))


def test_zero_target_deviation_uses_scale():
    assert slope_deviation(0.01, 0.0, 0.5) == pytest.approx(0.02)
    assert slope_deviation(1.1, 1.0, 5.0) == pytest.approx(0.1)


def test_trace_requires_decreasing_eps():
    with pytest.raises(ValueError):
        BranchTrace(1.0, 1.0, 1.0, [_rec(0.01, 1, 1), _rec(0.02, 1, 1)])


def test_ratio_verdicts():
    tr = BranchTrace(1.0, 1.0, 1.0, [_rec(e, 1, 1, err=e * e) for e in (0.08, 0.04, 0.02)])
    assert eigfn_error_ratios(tr)["verdict"] == "consistent with o(eps)"
    bad = BranchTrace(1.0, 1.0, 1.0, [_rec(e, 1, 1, err=e) for e in (0.08, 0.04, 0.02)])
    bad.records[-1].h1_err_bulk_even = 0.03
    out = eigfn_error_ratios(bad)
    assert out["monotone"]["h1_err_bulk_even"] is False
    assert out["verdict"] == "not consistent with o(eps)"
    zero = BranchTrace(1.0, 1.0, 1.0, [_rec(e, 1, 1, err=0.0) for e in (0.08, 0.04)])
    assert eigfn_error_ratios(zero)["ratios"]["h1_err_neck_odd"] == [0.0, 0.0]


def test_limit_field_parity():
    spec = dumbbell(0.05)
    mode = RectMode(2, 0, M_WIDTH)
    even = limit_field(spec, Parity.EVEN, mode)
    odd = limit_field(spec, Parity.ODD, mode)
    x, y = np.array([-1.0, 3.0]), np.array([0.2, 0.2])
    assert even(x, y)[0] == pytest.approx(even(x, y)[1])
    assert odd(x, y)[0] == pytest.approx(-odd(x, y)[1])
    assert boundary_value(spec, mode) == pytest.approx(1 / math.sqrt(M_WIDTH))
    assert boundary_value(spec) == pytest.approx(1 / math.sqrt(2 * M_WIDTH))


def test_verdict_on_synthetic_sharp_pair():
    spec = dumbbell(0.05)
    mode = RectMode(2, 0, M_WIDTH)
    sl = sl_targets(spec, MU1, mode)
    tr = _trace(slope_e=sl.theta_even, slope_o=sl.theta_odd)
    rep = verdict(spec, MU1, tr, sl, mode)
    assert rep.courant_sharp_verdict == "Courant sharp pair"
    assert rep.deficiency_bound_satisfied and rep.counts_equal_bounds
    assert all(o["match"] for o in rep.ordering)
    assert rep.as_dict()["schema"] == 1


def test_verdict_flags_broken_counts():
    spec = dumbbell(0.05)
    mode = RectMode(2, 0, M_WIDTH)
    sl = sl_targets(spec, MU1, mode)
    tr = _trace()
    tr.records[-1].count_even = 5
    with pytest.raises(TheoremViolation) as info:
        verdict(spec, MU1, tr, sl, mode)
    assert "evidence" not in str(info.value)
    assert info.value.evidence["counts"][-1]["observed"]["even"] == 5


def test_unstable_counts_are_inconclusive():
    spec = dumbbell(0.05)
    mode = RectMode(2, 0, M_WIDTH)
    sl = sl_targets(spec, MU1, mode)
    tr = _trace()
    for r in tr.records:
        r.count_even, r.stable_even = 5, False
    rep = verdict(spec, MU1, tr, sl, mode)
    assert rep.courant_sharp_verdict == "inconclusive"
    assert len(rep.inconclusive) == 3


@pytest.mark.slow
def test_zero_mode_branches_small_mesh():
    spec = dumbbell(0.1)
    tr = track_branches(spec, 0.0, [0.1, 0.05, 0.025], h_bulk=0.1, neck_layers=2, k_eigs=4)
    for r in tr.records:
        assert abs(r.lambda_even) < 1e-9
        assert r.lambda_odd > 0
        assert (r.index_even, r.index_odd, r.count_even, r.count_odd) == (1, 2, 1, 2)
    assert tr.approach_monotone()["odd"]


def test_branch_not_found():
    spec = dumbbell(0.1)
    mode = RectMode(5, 0, M_WIDTH)
    with pytest.raises(BranchNotFound):
        track_branches(spec, mode.lam, [0.1], h_bulk=0.15, neck_layers=2, k_eigs=3, mode=mode)


@pytest.mark.slow
def test_neck_mode_not_mistaken_for_branch():
    # mu_2 lies just above tau_4, so an odd neck mode sits closer to mu_2
    # than the odd branch does
    spec = dumbbell(0.05)
    mode = RectMode(1, 2, M_WIDTH)
    tr = track_branches(spec, mode.lam, [0.05], h_bulk=0.05, neck_layers=2, k_eigs=38, mode=mode)
    r = tr.records[0]
    assert (r.index_even, r.index_odd) == (33, 34)
    assert r.lambda_even < r.lambda_odd

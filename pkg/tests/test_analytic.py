import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dumbbell_spectra.analytic import (REPORTED_FIGURES, RectMode, closed_form_theta,
                                       courant_sharp_set, eigen_index, find_mode, limit_spectrum,
                                       omega0_boundary_value, predict_limit_indices,
                                       predict_nodal_counts, rect_spectrum)
from dumbbell_spectra.errors import AssumptionViolated, Resonant

from conftest import M_WIDTH, MU1, MU2

TAUS_L2 = [(n * math.pi / 2) ** 2 for n in range(1, 11)]


def test_mode_normalization():
    for j, n in ((0, 0), (2, 0), (1, 2)):
        mode = RectMode(j, n, M_WIDTH)
        x = np.linspace(0, M_WIDTH, 801)
        y = np.linspace(0, 1, 401)
        X, Y = np.meshgrid(x, y, indexing="ij")
        integral = np.trapezoid(np.trapezoid(mode(X, Y) ** 2, y, axis=1), x)
        assert integral == pytest.approx(1.0, rel=1e-4)


def test_spectrum_prefix():
    modes = rect_spectrum(M_WIDTH, 1.0, 6)
    assert [(m.j, m.n) for m in modes] == [(0, 0), (1, 0), (2, 0), (3, 0), (0, 1), (1, 1)]
    assert modes[2].lam == pytest.approx(MU1, rel=1e-14)


def test_mu1_identification():
    _, modes = find_mode(M_WIDTH, 1.0, 2, 0)
    vals = [m.lam for m in modes]
    pred = predict_limit_indices(MU1, vals, TAUS_L2)
    assert (pred.index_in_bulk, pred.k, pred.odd, pred.even) == (3, 1, 6, 7)
    assert pred.as_dict()["indices"] == {"even": 7, "odd": 6}


def test_mu2_identification():
    mode, modes = find_mode(M_WIDTH, 1.0, 1, 2)
    assert mode.lam == pytest.approx(MU2)
    vals = [m.lam for m in modes]
    pred = predict_limit_indices(MU2, vals, TAUS_L2)
    assert (pred.index_in_bulk, pred.k, pred.even, pred.odd) == (15, 4, 33, 34)
    assert REPORTED_FIGURES["mu2"]["reported_index"] == 31


def test_count_bounds():
    c = predict_nodal_counts(RectMode(2, 0, M_WIDTH), 1)
    assert (c.even_bound, c.odd_bound, c.equality_expected) == (7, 6, True)
    c = predict_nodal_counts(RectMode(1, 2, M_WIDTH), 4)
    assert (c.even_bound, c.odd_bound, c.equality_expected) == (15, 16, False)


def test_boundary_value():
    assert omega0_boundary_value(RectMode(2, 0, M_WIDTH), 0.5) == pytest.approx(1 / math.sqrt(M_WIDTH))


def test_assumption_checks():
    vals = [0.0, 1.0, 1.0, 2.0]
    with pytest.raises(AssumptionViolated):
        predict_limit_indices(1.0, vals, TAUS_L2)
    with pytest.raises(AssumptionViolated):
        predict_limit_indices(TAUS_L2[0], [0.0, TAUS_L2[0]], TAUS_L2)
    with pytest.raises(AssumptionViolated):
        predict_limit_indices(2.0, [0.0, 2.0], [1.0])


def test_limit_spectrum_merge():
    merged = limit_spectrum([0.0, 3.0], [2.0, 5.0])
    assert [e.value for e in merged] == [0.0, 0.0, 2.0, 3.0, 3.0, 5.0]
    assert [e.source for e in merged][:3] == ["BulkDouble", "BulkDouble", "NeckTau"]


@given(st.floats(0.01, 60.0), st.floats(0.5, 2.0), st.floats(0.1, 2.0))
def test_closed_forms_away_from_poles(mu, L, a):
    s = math.sqrt(mu)
    try:
        te = closed_form_theta(mu, L, a, "even")
        to = closed_form_theta(mu, L, a, "odd")
    except Resonant:
        return
    assert te == pytest.approx(-2 * a * a * s * math.tan(s * L / 2))
    assert to == pytest.approx(2 * a * a * s / math.tan(s * L / 2))


def test_resonant_poles():
    with pytest.raises(Resonant):
        closed_form_theta(TAUS_L2[0], 2.0, 1.0, "even")
    with pytest.raises(Resonant):
        closed_form_theta(TAUS_L2[1], 2.0, 1.0, "odd")
    closed_form_theta(TAUS_L2[0], 2.0, 1.0, "odd")


def test_zero_mu_limits():
    assert closed_form_theta(0.0, 2.0, 0.5, "even") == 0.0
    assert closed_form_theta(0.0, 2.0, 0.5, "odd") == pytest.approx(0.5)


def test_eigen_index_ties():
    assert eigen_index([0.0, 1.0, 1.0, 2.0], 1.0) == 2
    assert eigen_index([0.0, 1.0, 1.0, 2.0], 2.0) == 4


def test_courant_set_square_like():
    assert courant_sharp_set(1.01, 1.0, 15) == [1, 2, 4, 9]

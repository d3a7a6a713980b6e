"""Epsilon sweeps: follow the even and odd branches emanating from a bulk
eigenvalue ``mu`` and compare them with the one-dimensional predictions.

Each swept ``epsilon`` is meshed at ``h`` and at ``h/2`` (uniform refinement);
branch eigenvalues are Richardson-combined as ``(4 lam_fine - lam_coarse) / 3``
before any slope is fitted.  Nodal counts and ``H^1`` errors use the fine
level, with the coarse level serving as the count-stability witness.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analytic import (CountPrediction, IndexPrediction, RectMode, find_mode,
                       predict_limit_indices, predict_nodal_counts)
from .analytic import eigen_index as bulk_eigen_index
from .eigen import Parity, classify_symmetry, smallest_eigenpairs
from .errors import BranchNotFound, InsufficientData, TheoremViolation
from .fem import BULK, NECK, FeField, assemble_mass, assemble_stiffness, interpolate, norms
from .geometry import DumbbellSpec
from .mesh import TriMesh, generate, refine_uniform
from .nodal import DEFAULT_THRESHOLD, DeficiencyRecord, count_nodal_domains
from .nodal import eigen_index as fem_eigen_index
from .sturm import DEFAULT_NODES, GUARD, BranchOrder, SLAnalysis, SLGrid, analyze, branch_order

SLOPE_TOL = 0.15
RATIO_SLACK = 0.05
RATIO_FLOOR = 1e-12
WINDOW_FLOOR = 0.5
MIN_OVERLAP = 0.5


# ------------------------------------------------------------------ reference fields

def bulk_reference(spec: DumbbellSpec, mode=None):
    """Normalized bulk eigenfunction on the left bulk, in its own frame.

    ``mode`` is any callable ``f(X, Y)`` normalized on one bulk (for example
    a :class:`RectMode`); None stands for the constant ``1/sqrt(area)``.
    """
    if mode is not None:
        return mode
    c = 1.0 / math.sqrt(spec.bulk_area())
    return lambda X, Y: np.full(np.shape(np.asarray(X)), c)


def boundary_value(spec: DumbbellSpec, mode=None) -> float:
    """``phi^e(p_0)`` for the symmetric extension normalized on both bulks."""
    f = bulk_reference(spec, mode)
    ax, ay = spec.left.attachment
    return float(np.asarray(f(np.array([ax]), np.array([ay])))[0]) / math.sqrt(2.0)


def limit_field(spec: DumbbellSpec, parity: Parity, mode=None):
    """``phi^e`` or ``phi^o`` on both bulks as a function of neck coordinates."""
    f = bulk_reference(spec, mode)
    ax, ay = spec.left.attachment
    L = spec.length
    sgn = 1.0 if parity is Parity.EVEN else -1.0
    s2 = math.sqrt(2.0)

    def phi(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        left = f(x + ax, y + ay)
        right = sgn * f(L - x + ax, y + ay)
        return np.where(x <= 0.5 * L, left, right) / s2

    return phi


def sl_targets(spec: DumbbellSpec, mu: float, mode=None, nodes: int = DEFAULT_NODES,
               guard: float = GUARD) -> SLAnalysis:
    """Neck analysis at ``mu`` with boundary data taken from the bulk mode."""
    grid = SLGrid.build(spec.neck, nodes)
    return analyze(grid, mu, a=boundary_value(spec, mode), guard=guard, profile=spec.neck)


# ------------------------------------------------------------------ traces

@dataclass
class BranchRecord:
    """Observations at one ``epsilon``.

    ``lambda_*`` are Richardson values; ``levels_*`` hold the raw coarse and
    fine eigenvalues.  Indices and counts refer to the fine level.
    """

    epsilon: float
    lambda_even: float
    lambda_odd: float
    levels_even: tuple
    levels_odd: tuple
    index_even: int
    index_odd: int
    count_even: int
    count_odd: int
    stable_even: bool
    stable_odd: bool
    h1_err_bulk_even: float
    h1_err_bulk_odd: float
    h1_err_neck_even: float
    h1_err_neck_odd: float
    vertices: int = 0

    @property
    def order(self) -> BranchOrder:
        if self.lambda_even < self.lambda_odd:
            return BranchOrder.EVEN_BELOW_ODD
        return BranchOrder.ODD_BELOW_EVEN

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["levels_even"] = list(self.levels_even)
        d["levels_odd"] = list(self.levels_odd)
        d["order"] = self.order.value
        return d


CSV_COLUMNS = ("epsilon", "lambda_even", "lambda_odd", "index_even", "index_odd", "count_even",
               "count_odd", "stable_even", "stable_odd", "h1_err_bulk_even", "h1_err_bulk_odd",
               "h1_err_neck_even", "h1_err_neck_odd")


@dataclass
class BranchTrace:
    """Both branches of one ``mu`` across a strictly decreasing ``epsilon`` list."""

    mu: float
    theta_even: float
    theta_odd: float
    records: list = field(default_factory=list)

    def __post_init__(self):
        eps = [r.epsilon for r in self.records]
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("epsilon values must be strictly decreasing")

    @property
    def epsilons(self) -> np.ndarray:
        return np.array([r.epsilon for r in self.records])

    def approach_monotone(self) -> dict:
        """Whether ``|lambda - mu|`` shrinks with ``epsilon`` (a flag only)."""
        out = {}
        for name in ("even", "odd"):
            d = [abs(getattr(r, f"lambda_{name}") - self.mu) for r in self.records]
            out[name] = all(b <= a for a, b in zip(d, d[1:]))
        return out

    def rows(self) -> list[list]:
        return [[getattr(r, c) for c in CSV_COLUMNS] for r in self.records]

    def as_dict(self) -> dict:
        return {"mu": self.mu, "theta_even": self.theta_even, "theta_odd": self.theta_odd,
                "records": [r.as_dict() for r in self.records],
                "approach_monotone": self.approach_monotone()}


def _solve(mesh: TriMesh, k: int, tol: float, seed: int, max_krylov):
    K = assemble_stiffness(mesh)
    M = assemble_mass(mesh)
    pairs = smallest_eigenpairs(K, M, min(k, mesh.n_vertices), tol=tol,
                                max_krylov=max_krylov, seed=seed)
    return classify_symmetry(pairs, mesh.mirror, M, K=K), M


def _pick(pairs, mu: float, parity: Parity, window: float, Mb, ref: np.ndarray):
    """The eigenpair of the given symmetry, within ``window`` of ``mu``, that
    overlaps most with the limiting bulk field ``ref`` (bulk mass ``Mb``).

    Nearness in eigenvalue alone is not enough: close to a Dirichlet
    eigenvalue of the neck, a neck-concentrated mode can sit nearer to ``mu``
    than the branch itself.
    """
    cands = [p for p in pairs if p.symmetry is parity and abs(p.lam - mu) <= window]
    if not cands:
        raise BranchNotFound(f"no {parity.value} eigenvalue within {window:.4g} of mu = {mu:.8g}")
    w = Mb @ ref
    overlaps = [abs(float(p.vector @ w)) for p in cands]
    best = int(np.argmax(overlaps))
    if overlaps[best] < MIN_OVERLAP:
        raise BranchNotFound(f"no {parity.value} eigenvalue within {window:.4g} of mu = {mu:.8g} "
                             f"resembles the bulk mode (best overlap {overlaps[best]:.3f})")
    return cands[best]


def _h1_sq(diff: FeField, regions) -> float:
    n = norms(diff, regions)
    return n["l2_sq"] + n["h1_semi_sq"]


def _errors(mesh: TriMesh, M, u, ref_bulk: FeField, ref_neck: FeField):
    sign = 1.0 if float(u @ (M @ ref_bulk.values)) >= 0.0 else -1.0
    field_u = FeField(mesh, sign * u)
    return (_h1_sq(field_u - ref_bulk, BULK), _h1_sq(field_u - ref_neck, NECK), field_u)


def _one_epsilon(spec, eps, mu, sl, mode, h_bulk, layers, k, tol, seed, max_krylov,
                 threshold) -> BranchRecord:
    sp_eps = spec.with_epsilon(eps)
    coarse = generate(sp_eps, h_bulk, layers, seed=seed)
    fine = refine_uniform(coarse)
    levels = []
    for mesh in (coarse, fine):
        pairs, M = _solve(mesh, k, tol, seed, max_krylov)
        Mb = assemble_mass(mesh, BULK)
        picked = {}
        for parity, theta_t in ((Parity.EVEN, sl.theta_even), (Parity.ODD, sl.theta_odd)):
            window = max(10.0 * eps * abs(theta_t), WINDOW_FLOOR)
            ref = interpolate(mesh, limit_field(spec, parity, mode)).values
            picked[parity] = _pick(pairs, mu, parity, window, Mb, ref)
        levels.append((mesh, M, pairs, picked))

    mesh_c, _, _, pick_c = levels[0]
    mesh_f, M_f, pairs_f, pick_f = levels[1]
    lams_f = [p.lam for p in pairs_f]
    grid = SLGrid.build(spec.neck, DEFAULT_NODES)
    out = {}
    for parity, xi in ((Parity.EVEN, sl.xi_even), (Parity.ODD, sl.xi_odd)):
        phi = limit_field(spec, parity, mode)
        ref_b = interpolate(mesh_f, phi)
        ref_n = interpolate(mesh_f, lambda x, y, xi=xi: np.interp(x, grid.x, xi) + 0.0 * y)
        eb, en, u_f = _errors(mesh_f, M_f, pick_f[parity].vector, ref_b, ref_n)
        u_c = FeField(mesh_c, pick_c[parity].vector)
        c_f = count_nodal_domains(u_f, threshold).count
        c_c = count_nodal_domains(u_c, threshold).count
        lam_c, lam_f = pick_c[parity].lam, pick_f[parity].lam
        out[parity] = dict(
            lam=(4.0 * lam_f - lam_c) / 3.0, levels=(lam_c, lam_f),
            index=fem_eigen_index(lams_f, pick_f[parity].index_1based),
            count=c_f, stable=c_f == c_c, eb=eb, en=en)
    e, o = out[Parity.EVEN], out[Parity.ODD]
    return BranchRecord(
        float(eps), e["lam"], o["lam"], e["levels"], o["levels"], e["index"], o["index"],
        e["count"], o["count"], e["stable"], o["stable"], e["eb"], o["eb"], e["en"], o["en"],
        fine.n_vertices)


def track_branches(spec: DumbbellSpec, mu: float, epsilons, h_bulk: float = 0.02,
                   neck_layers: int = 2, k_eigs: int = 10, mode=None,
                   prediction: IndexPrediction | None = None, sl: SLAnalysis | None = None,
                   tol: float = 1e-8, seed: int = 0, max_krylov: int | None = None,
                   threshold: float = DEFAULT_THRESHOLD, workers: int = 1) -> BranchTrace:
    """Follow the even and odd branches limiting to ``mu``.

    Parameters
    ----------
    spec : DumbbellSpec
        Geometry; its own ``epsilon`` is ignored.
    mu : float
        Simple bulk eigenvalue with ``phi(p_0) != 0``.
    epsilons : sequence of float
        Strictly decreasing neck widths.
    h_bulk, neck_layers : mesh parameters of the coarse level.
    k_eigs : int
        Minimum number of eigenpairs; raised to cover the predicted indices
        plus three when ``prediction`` is given.
    mode : callable, optional
        Bulk eigenfunction normalized on one bulk (constant when None).
    workers : int
        Number of ``epsilon`` values solved concurrently.

    Raises
    ------
    BranchNotFound
        If no eigenvalue of the required symmetry lies within
        ``max(10 eps |Theta|, 0.5)`` of ``mu`` with bulk overlap at least
        ``MIN_OVERLAP``.  Among several candidates the largest overlap wins.
    """
    eps = [float(e) for e in epsilons]
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilon values must be strictly decreasing")
    if sl is None:
        sl = sl_targets(spec, mu, mode)
    k = int(k_eigs)
    if prediction is not None:
        k = max(k, max(prediction.even, prediction.odd) + 3)

    def job(e):
        return _one_epsilon(spec, e, mu, sl, mode, h_bulk, neck_layers, k, tol, seed,
                            max_krylov, threshold)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(job, eps))
    else:
        records = [job(e) for e in eps]
    return BranchTrace(float(mu), float(sl.theta_even), float(sl.theta_odd), records)


# ------------------------------------------------------------------ slope fits

def _origin_fit(x: np.ndarray, d: np.ndarray):
    s = float(x @ d / (x @ x))
    res = float(np.sum((d - s * x) ** 2))
    tot = float(d @ d)
    r2 = 1.0 if tot == 0.0 else 1.0 - res / tot
    return s, r2


def slope_deviation(slope: float, target: float, scale: float) -> float:
    """Relative distance to ``target``; a zero target is measured against
    ``scale`` instead."""
    if abs(target) > 1e-12 * max(scale, 1e-300):
        return abs(slope - target) / abs(target)
    return abs(slope - target) / scale if scale > 0 else abs(slope - target)


def fit_slope(trace: BranchTrace) -> dict:
    """Least-squares slope of ``lambda - mu`` against ``epsilon`` through the
    origin, per branch, with deviations from the ``Theta`` targets.

    The fit ``(lambda - mu)/eps = c0 + c1 eps log eps + c2 eps`` is reported
    alongside as ``intercept_log_model`` (a diagnostic, not used for any
    verdict).

    Raises
    ------
    InsufficientData
        With fewer than three ``epsilon`` values.
    """
    if len(trace.records) < 3:
        raise InsufficientData(f"need at least 3 epsilon values, got {len(trace.records)}")
    x = trace.epsilons
    scale = max(abs(trace.theta_even), abs(trace.theta_odd))
    out = {"targets": {"even": trace.theta_even, "odd": trace.theta_odd}}
    A = np.column_stack([np.ones_like(x), x * np.log(x), x])
    for name, target in (("even", trace.theta_even), ("odd", trace.theta_odd)):
        d = np.array([getattr(r, f"lambda_{name}") for r in trace.records]) - trace.mu
        s, r2 = _origin_fit(x, d)
        out[f"slope_{name}"] = s
        out[f"r_squared_{name}"] = r2
        out[f"deviation_{name}"] = slope_deviation(s, target, scale)
        coef = np.linalg.lstsq(A, d / x, rcond=None)[0] if len(x) >= 3 else [float("nan")]
        out[f"intercept_log_model_{name}"] = float(coef[0])
    return out


def slopes_within(fit: dict, tol: float = SLOPE_TOL) -> dict:
    return {name: bool(fit[f"deviation_{name}"] <= tol) for name in ("even", "odd")}


# ------------------------------------------------------------------ eigenfunction errors

SERIES = ("h1_err_bulk_even", "h1_err_bulk_odd", "h1_err_neck_even", "h1_err_neck_odd")


def eigfn_error_ratios(trace: BranchTrace, slack: float = RATIO_SLACK,
                       floor: float = RATIO_FLOOR) -> dict:
    """Ratios ``err^2 / eps`` per series and whether each decreases.

    A step passes when ``r_next <= (1 + slack) r_prev`` or ``r_next <= floor``.
    """
    eps = trace.epsilons
    table = {}
    monotone = {}
    for s in SERIES:
        r = np.array([getattr(rec, s) for rec in trace.records]) / eps
        table[s] = [float(v) for v in r]
        monotone[s] = bool(all(b <= (1.0 + slack) * a or b <= floor for a, b in zip(r, r[1:])))
    ok = all(monotone.values())
    return {"epsilons": [float(e) for e in eps], "ratios": table, "monotone": monotone,
            "verdict": "consistent with o(eps)" if ok else "not consistent with o(eps)"}


# ------------------------------------------------------------------ verdicts

@dataclass
class VerdictReport:
    mu: dict
    sl: dict
    indices: list
    counts: list
    deficiency: list
    deficiency_bound_satisfied: bool
    counts_equal_bounds: bool | None
    courant_sharp_verdict: str
    courant_sharp: dict
    ordering: list
    slope_even: float | None
    slope_odd: float | None
    slope_targets: dict
    slope_fit: dict | None
    eigfn_ratio_table: dict | None
    inconclusive: list
    reference: dict | None = None

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["schema"] = 1
        return d


def bulk_identification(mu: float, mode: RectMode) -> dict:
    """Index, nodal count and deficiency of a rectangle mode in one bulk."""
    _, modes = find_mode(mode.M, mode.H, mode.j, mode.n)
    vals = [m.lam for m in modes]
    index = bulk_eigen_index(vals, mu)
    return {"mu": float(mu), "mode": [mode.j, mode.n], "index": index,
            "count": mode.nodal_count, "deficiency": index - mode.nodal_count,
            "crossings": mode.has_crossings, "bulk_values": vals}


def verdict(spec: DumbbellSpec, mu: float, trace: BranchTrace, sl_analysis: SLAnalysis,
            mode: RectMode, reference: dict | None = None) -> VerdictReport:
    """Compare a trace with every prediction and assemble the report.

    Hard checks (stable counts only): each branch deficiency is at least
    twice the bulk deficiency; counts equal the predicted bounds when the
    bulk mode has no nodal crossings; at the smallest ``epsilon`` the pair
    is Courant sharp when the bulk mode is (and has no crossings) and is not
    when the bulk mode is not.

    Raises
    ------
    TheoremViolation
        With the full report as evidence if any hard check fails.
    """
    ident = bulk_identification(mu, mode)
    bulk_values = ident.pop("bulk_values")
    pred: IndexPrediction = predict_limit_indices(mu, bulk_values, sl_analysis.taus)
    bounds: CountPrediction = predict_nodal_counts(mode, sl_analysis.k)
    order = branch_order(sl_analysis)
    bulk_def = ident["deficiency"]
    crossing_free = not ident["crossings"]

    indices, counts, defs, ordering, inconclusive, failures = [], [], [], [], [], []
    for r in trace.records:
        indices.append({"epsilon": r.epsilon, "observed": {"even": r.index_even, "odd": r.index_odd},
                        "predicted": {"even": pred.even, "odd": pred.odd},
                        "match": r.index_even == pred.even and r.index_odd == pred.odd})
        counts.append({"epsilon": r.epsilon, "observed": {"even": r.count_even, "odd": r.count_odd},
                       "bounds": {"even": bounds.even_bound, "odd": bounds.odd_bound},
                       "stable": {"even": r.stable_even, "odd": r.stable_odd}})
        ordering.append({"epsilon": r.epsilon, "observed": r.order.value, "predicted": order.value,
                         "match": r.order is order})
        for name in ("even", "odd"):
            idx, cnt = getattr(r, f"index_{name}"), getattr(r, f"count_{name}")
            stable = getattr(r, f"stable_{name}")
            rec = DeficiencyRecord(idx, cnt, idx - cnt, idx == cnt, stable)
            defs.append({"epsilon": r.epsilon, "branch": name, **rec.as_dict()})
            if not stable:
                inconclusive.append({"epsilon": r.epsilon, "branch": name,
                                     "reason": "nodal count changed under refinement"})
                continue
            if rec.deficiency < 2 * bulk_def:
                failures.append(f"{name} branch at eps={r.epsilon}: deficiency {rec.deficiency} "
                                f"< 2 x bulk deficiency {bulk_def}")
            bound = bounds.even_bound if name == "even" else bounds.odd_bound
            if crossing_free and cnt != bound:
                failures.append(f"{name} branch at eps={r.epsilon}: count {cnt} differs from "
                                f"crossing-free prediction {bound}")

    last = trace.records[-1]
    d_last = {n: getattr(last, f"index_{n}") - getattr(last, f"count_{n}") for n in ("even", "odd")}
    stable_last = last.stable_even and last.stable_odd
    pair_sharp = d_last["even"] == 0 and d_last["odd"] == 0
    bulk_sharp = bulk_def == 0
    expected = True if (bulk_sharp and crossing_free) else (False if not bulk_sharp else None)
    if stable_last and expected is not None and pair_sharp != expected:
        failures.append(f"at eps={last.epsilon} the pair is {'' if pair_sharp else 'not '}Courant "
                        f"sharp while the bulk mode is {'' if bulk_sharp else 'not '}")
    sharp = {"even": d_last["even"] == 0, "odd": d_last["odd"] == 0, "bulk": bulk_sharp,
             "expected_pair": expected}
    if not stable_last:
        word = "inconclusive"
    else:
        word = "Courant sharp pair" if pair_sharp else "not Courant sharp"

    try:
        fit = fit_slope(trace)
    except InsufficientData:
        fit = None
    ratios = eigfn_error_ratios(trace) if len(trace.records) >= 2 else None
    eq = None
    if crossing_free:
        eq = all(c["observed"]["even"] == bounds.even_bound and c["observed"]["odd"] == bounds.odd_bound
                 for c in counts)

    report = VerdictReport(
        mu=ident, sl=sl_analysis.as_dict(), indices=indices, counts=counts, deficiency=defs,
        deficiency_bound_satisfied=not any("deficiency" in f for f in failures),
        counts_equal_bounds=eq, courant_sharp_verdict=word, courant_sharp=sharp,
        ordering=ordering,
        slope_even=None if fit is None else fit["slope_even"],
        slope_odd=None if fit is None else fit["slope_odd"],
        slope_targets={"even": sl_analysis.theta_even, "odd": sl_analysis.theta_odd},
        slope_fit=fit, eigfn_ratio_table=ratios, inconclusive=inconclusive,
        reference=reference)
    if failures:
        raise TheoremViolation("; ".join(failures), evidence=report.as_dict())
    return report

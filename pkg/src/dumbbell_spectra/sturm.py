"""One-dimensional weighted problem ``-(g v')' = tau g v`` on ``[0, L]``.

Linear finite elements on a uniform grid.  Dirichlet eigenvalues come from
bisection on the inertia of the tridiagonal ``K - tau M`` (a Sturm sequence
count), which also yields ``k`` (the number of ``tau_n`` below a given value)
without computing the spectrum.  The boundary-value solutions ``xi`` with
prescribed end values give the energy functional ``Theta``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from ._accel import jit
from .errors import (InternalMismatch, NearResonance, RefineNeeded, ResolutionExceeded,
                     ZeroEndpoint)
from .geometry import NeckProfile

DEFAULT_NODES = 4096
GUARD = 1e-6
RESONANT_TOL = 1e-8


class BranchOrder(str, enum.Enum):
    EVEN_BELOW_ODD = "EvenBelowOdd"
    ODD_BELOW_EVEN = "OddBelowEven"


@dataclass(frozen=True, eq=False)
class SLGrid:
    """Uniform grid with ``N`` intervals and the assembled tridiagonal matrices.

    ``kd``/``ko`` hold the diagonal and off-diagonal of the stiffness
    ``int g v' w'``; ``md``/``mo`` those of the mass ``int g v w``.  ``g`` is
    linear on each element, interpolating its nodal values.
    """

    n: int
    length: float
    g: np.ndarray
    kd: np.ndarray
    ko: np.ndarray
    md: np.ndarray
    mo: np.ndarray

    @classmethod
    def build(cls, profile: NeckProfile | None = None, n: int = DEFAULT_NODES,
              length: float | None = None) -> "SLGrid":
        if profile is None:
            profile = NeckProfile.constant(1.0, 1.0 if length is None else length)
        L = profile.length if length is None else float(length)
        if n < 4:
            raise ResolutionExceeded("need at least 4 intervals")
        x = L * np.arange(n + 1) / n
        g = np.asarray(profile(x * profile.length / L), dtype=float)
        h = L / n
        ga, gb = g[:-1], g[1:]
        ke = 0.5 * (ga + gb) / h
        kd = np.zeros(n + 1)
        kd[:-1] += ke
        kd[1:] += ke
        ko = -ke
        md = np.zeros(n + 1)
        md[:-1] += h * (3 * ga + gb) / 12
        md[1:] += h * (ga + 3 * gb) / 12
        mo = h * (ga + gb) / 12
        return cls(n, L, g, kd, ko, md, mo)

    @property
    def h(self) -> float:
        return self.length / self.n

    @property
    def x(self) -> np.ndarray:
        return self.length * np.arange(self.n + 1) / self.n

    def refined(self, profile: NeckProfile | None = None) -> "SLGrid":
        """Grid with twice as many intervals (g re-sampled from ``profile`` or
        linearly interpolated)."""
        if profile is not None:
            return SLGrid.build(profile, 2 * self.n, self.length)
        x2 = self.length * np.arange(2 * self.n + 1) / (2 * self.n)
        g2 = np.interp(x2, self.x, self.g)
        prof = NeckProfile.piecewise_linear(g2, self.length)
        return SLGrid.build(prof, 2 * self.n, self.length)


@jit
def count_below(kd, ko, md, mo, lam):
    """Number of Dirichlet eigenvalues strictly below ``lam`` (inertia count)."""
    n = kd.shape[0] - 2  # interior unknowns 1..N-1
    neg = 0
    d = 1.0
    for i in range(1, n + 1):
        a = kd[i] - lam * md[i]
        if i > 1:
            b = ko[i - 1] - lam * mo[i - 1]
            if d == 0.0:
                d = 1e-300
            a -= b * b / d
        d = a
        if d < 0.0:
            neg += 1
    return neg


@jit
def _bisect_eigs(kd, ko, md, mo, m, upper, rtol):
    out = np.empty(m)
    for j in range(m):
        lo = 0.0 if j == 0 else out[j - 1]
        hi = upper
        # smallest tau with count_below(tau) >= j+1, i.e. the (j+1)-th eigenvalue
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if count_below(kd, ko, md, mo, mid) >= j + 1:
                hi = mid
            else:
                lo = mid
            if hi - lo <= rtol * hi:
                break
        out[j] = 0.5 * (lo + hi)
    return out


def dirichlet_spectrum(grid: SLGrid, m: int) -> np.ndarray:
    """First ``m`` Dirichlet eigenvalues ``tau_1 < ... < tau_m``.

    Raises
    ------
    ResolutionExceeded
        If ``m > N/4``.
    """
    if m < 1:
        return np.empty(0)
    if m > grid.n // 4:
        raise ResolutionExceeded(f"m = {m} exceeds N/4 = {grid.n // 4}")
    upper = 1.0
    while count_below(grid.kd, grid.ko, grid.md, grid.mo, upper) < m:
        upper *= 2.0
    return _bisect_eigs(grid.kd, grid.ko, grid.md, grid.mo, m, upper, 1e-15)


def k_below(grid: SLGrid, lam: float) -> int:
    """``k`` = number of Dirichlet eigenvalues strictly below ``lam``."""
    return int(count_below(grid.kd, grid.ko, grid.md, grid.mo, float(lam)))


def check_admissible(grid: SLGrid, lam: float, guard: float = GUARD) -> None:
    """Raise :class:`NearResonance` if some ``tau_n`` lies within
    ``guard * max(1, lam)`` of ``lam``."""
    delta = guard * max(1.0, abs(lam))
    if k_below(grid, lam - delta) != k_below(grid, lam + delta):
        raise NearResonance(f"lambda = {lam:.10g} is within {delta:.3g} of a Dirichlet eigenvalue")


def solve_bvp(grid: SLGrid, lam: float, a: float, b: float, guard: float = GUARD) -> np.ndarray:
    """Nodal values of the discrete ``xi`` with ``xi(0) = a``, ``xi(L) = b``."""
    check_admissible(grid, lam, guard)
    n = grid.n
    diag = grid.kd - lam * grid.md
    off = grid.ko - lam * grid.mo
    rhs = np.zeros(n - 1)
    rhs[0] -= off[0] * a
    rhs[-1] -= off[-1] * b
    ab = np.zeros((3, n - 1))
    ab[0, 1:] = off[1:-1]
    ab[1, :] = diag[1:-1]
    ab[2, :-1] = off[1:-1]
    xi = np.empty(n + 1)
    xi[0], xi[-1] = a, b
    xi[1:-1] = solve_banded((1, 1), ab, rhs)
    return xi


def _energies(grid: SLGrid, xi: np.ndarray) -> tuple[float, float]:
    # stiffness via element differences avoids cancellation for flat xi
    stiff = float(np.sum(-grid.ko * np.diff(xi) ** 2))
    mass = float(xi @ (grid.md * xi) + 2.0 * np.sum(grid.mo * xi[:-1] * xi[1:]))
    return stiff, mass


def theta_quadrature(grid: SLGrid, lam: float, xi: np.ndarray) -> float:
    """``int g xi'^2 - lam int g xi^2`` evaluated exactly for the P1 field."""
    stiff, mass = _energies(grid, xi)
    return stiff - lam * mass


def theta_endpoint(grid: SLGrid, xi: np.ndarray) -> float:
    """``g(L) xi(L) xi'(L) - g(0) xi(0) xi'(0)`` with one-sided second-order
    differences."""
    h = grid.h
    d0 = (-3 * xi[0] + 4 * xi[1] - xi[2]) / (2 * h)
    dl = (3 * xi[-1] - 4 * xi[-2] + xi[-3]) / (2 * h)
    return float(grid.g[-1] * xi[-1] * dl - grid.g[0] * xi[0] * d0)


def _theta_one(grid: SLGrid, lam: float, a: float, b: float, guard: float):
    xi = solve_bvp(grid, lam, a, b, guard)
    tq = theta_quadrature(grid, lam, xi)
    te = theta_endpoint(grid, xi)
    tol = max(1e-6, 5 * grid.h)
    stiff, mass = _energies(grid, xi)
    # floors: both forms carry O(h^2 lam) errors relative to the separate
    # energies, which dominate when Theta nearly cancels (close to a Neumann
    # eigenvalue, or lam = 0); and roundoff in the endpoint differences of a
    # nearly flat xi
    energy = max(1e-6, grid.h * (1.0 + abs(lam))) * (stiff + abs(lam) * mass)
    scale = max(abs(tq), abs(te), energy, 1e-9 * (a * a + b * b) / grid.h)
    if abs(tq - te) > tol * scale:
        raise InternalMismatch(f"Theta quadrature {tq:.10g} vs endpoint form {te:.10g}")
    return tq, xi


def theta(grid: SLGrid, lam: float, a: float, b: float, guard: float = GUARD,
          return_xi: bool = False, extrapolate: bool = True,
          profile: NeckProfile | None = None):
    """``Theta_lam(a, b) = int g xi'^2 - lam int g xi^2``.

    The quadrature value is cross-checked against the endpoint form
    ``g xi xi' |_0^L`` on every grid used.  With ``extrapolate`` (default) the
    result is the Richardson combination ``(4 Theta_{2N} - Theta_N) / 3``,
    which removes the leading ``O(h^2)`` error.

    Raises
    ------
    NearResonance
        If ``lam`` is within the guard band of a Dirichlet eigenvalue.
    InternalMismatch
        If quadrature and endpoint forms differ by more than
        ``max(1e-6, 5h)`` relative to the larger of ``|Theta|`` and the
        expected ``O(h (1 + lam))`` error of the separate energies.
    """
    t1, xi = _theta_one(grid, lam, a, b, guard)
    if extrapolate:
        t2, _ = _theta_one(grid.refined(profile), lam, a, b, guard)
        t1 = (4.0 * t2 - t1) / 3.0
    return (t1, xi) if return_xi else t1


def zero_count(xi) -> int:
    """Strict sign changes of the nodal values in the open interval.

    Interior nodes that are exactly zero are skipped; a sign change across
    them still counts once.
    """
    xi = np.asarray(xi, dtype=float)
    if xi[0] == 0.0 or xi[-1] == 0.0:
        raise ZeroEndpoint("boundary value must be nonzero")
    s = np.sign(xi)
    s = s[s != 0]
    return int(np.sum(s[1:] != s[:-1]))


def zero_positions(grid: SLGrid, xi) -> np.ndarray:
    """Zeros of the piecewise-linear interpolant (linear inverse interpolation)."""
    xi = np.asarray(xi)
    x = grid.x
    i = np.flatnonzero(np.sign(xi[:-1]) * np.sign(xi[1:]) < 0)
    t = xi[i] / (xi[i] - xi[i + 1])
    return x[i] + t * (x[i + 1] - x[i])


def stable_zero_count(grid: SLGrid, lam: float, a: float, b: float, guard: float = GUARD,
                      profile: NeckProfile | None = None) -> int:
    """Zero count on the grid and on its refinement; they must agree."""
    c1 = zero_count(solve_bvp(grid, lam, a, b, guard))
    c2 = zero_count(solve_bvp(grid.refined(profile), lam, a, b, guard))
    if c1 != c2:
        raise RefineNeeded(f"zero count changed from {c1} to {c2} under refinement")
    return c1


@dataclass
class SLAnalysis:
    """Everything the neck contributes at a bulk eigenvalue ``mu``."""

    taus: np.ndarray
    mu: float
    k: int
    a: float
    xi_even: np.ndarray
    xi_odd: np.ndarray
    theta_even: float
    theta_odd: float
    n_even: int
    n_odd: int
    neumann_resonant: bool
    grid_nodes: int

    def as_dict(self) -> dict:
        return {
            "taus": [float(t) for t in self.taus],
            "mu": float(self.mu),
            "k": int(self.k),
            "a": float(self.a),
            "theta_even": float(self.theta_even),
            "theta_odd": float(self.theta_odd),
            "N_e": int(self.n_even),
            "N_o": int(self.n_odd),
            "order": branch_order(self).value,
            "neumann_resonant": bool(self.neumann_resonant),
            "nodes": int(self.grid_nodes),
        }


def analyze(grid: SLGrid, mu: float, a: float = 1.0, m: int = 10, guard: float = GUARD,
            profile: NeckProfile | None = None) -> SLAnalysis:
    """Dirichlet spectrum, ``k``, even/odd solutions, ``Theta`` and zero counts
    at ``mu`` for symmetric data ``(a, a)`` and ``(a, -a)``."""
    if a == 0.0:
        raise ZeroEndpoint("boundary value must be nonzero")
    taus = dirichlet_spectrum(grid, min(m, grid.n // 4))
    k = k_below(grid, mu)
    te, xe = theta(grid, mu, a, a, guard, return_xi=True, profile=profile)
    to, xo = theta(grid, mu, a, -a, guard, return_xi=True, profile=profile)
    ne = stable_zero_count(grid, mu, a, a, guard, profile)
    no = stable_zero_count(grid, mu, a, -a, guard, profile)
    resonant = min(abs(te), abs(to)) <= RESONANT_TOL * a * a
    return SLAnalysis(taus, float(mu), k, float(a), xe, xo, te, to, ne, no, resonant, grid.n)


def parity_table(k: int) -> tuple[int, int]:
    """Zero counts ``(N_e, N_o)`` forced by ``k``."""
    return (k, k + 1) if k % 2 == 0 else (k + 1, k)


def branch_order(an: SLAnalysis) -> BranchOrder:
    """Which branch lies lower, checked three ways.

    The ``Theta`` ordering, the zero-count ordering and the parity of ``k``
    must agree; any disagreement raises :class:`InternalMismatch`.
    """
    by_theta = an.theta_even < an.theta_odd
    by_zeros = an.n_even < an.n_odd
    by_k = an.k % 2 == 0
    if not (by_theta == by_zeros == by_k):
        raise InternalMismatch(
            f"ordering disagreement: Theta_e={an.theta_even:.6g}, Theta_o={an.theta_odd:.6g}, "
            f"N_e={an.n_even}, N_o={an.n_odd}, k={an.k}")
    return BranchOrder.EVEN_BELOW_ODD if by_theta else BranchOrder.ODD_BELOW_EVEN


def closed_form_tau(n: int, length: float) -> float:
    return (n * math.pi / length) ** 2

"""Closed-form oracles: rectangle Neumann modes, the limiting spectrum of the
separated domain plus neck, index and nodal-count predictions, and the
constant-profile ``Theta`` formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AssumptionViolated, Resonant

TIE_TOL = 1e-9


@dataclass(frozen=True)
class RectMode:
    """Neumann mode ``cos(j pi x / M) cos(n pi y / H)`` of ``[0, M] x [0, H]``."""

    j: int
    n: int
    M: float
    H: float = 1.0

    @property
    def lam(self) -> float:
        return math.pi**2 * (self.j**2 / self.M**2 + self.n**2 / self.H**2)

    @property
    def nodal_count(self) -> int:
        return (self.j + 1) * (self.n + 1)

    @property
    def norm_const(self) -> float:
        """``c`` with ``int (c cos cos)^2 = 1`` over the rectangle."""
        fj = 1.0 if self.j == 0 else 2.0
        fn = 1.0 if self.n == 0 else 2.0
        return math.sqrt(fj * fn / (self.M * self.H))

    @property
    def has_crossings(self) -> bool:
        return self.j > 0 and self.n > 0

    def __call__(self, x, y):
        return self.norm_const * np.cos(self.j * np.pi * np.asarray(x) / self.M) * \
            np.cos(self.n * np.pi * np.asarray(y) / self.H)

    def gradient(self, x, y):
        c = self.norm_const
        kx, ky = self.j * np.pi / self.M, self.n * np.pi / self.H
        x, y = np.asarray(x), np.asarray(y)
        return (-c * kx * np.sin(kx * x) * np.cos(ky * y),
                -c * ky * np.cos(kx * x) * np.sin(ky * y))


def rect_spectrum(M: float, H: float, count: int) -> list[RectMode]:
    """The first ``count`` Neumann modes in ascending order.

    Ties are broken by ``(n, j)``.
    """
    if not (M > 0 and H > 0):
        raise ValueError("M and H must be positive")
    if count <= 0:
        return []
    bound = math.pi**2 * max(1.0 / M**2, 1.0 / H**2)
    while True:
        jmax = int(math.floor(math.sqrt(bound) * M / math.pi)) + 1
        nmax = int(math.floor(math.sqrt(bound) * H / math.pi)) + 1
        modes = [RectMode(j, n, M, H) for j in range(jmax + 1) for n in range(nmax + 1)]
        modes = [m for m in modes if m.lam <= bound]
        if len(modes) >= count:
            modes.sort(key=lambda m: (m.lam, m.n, m.j))
            return modes[:count]
        bound *= 2.0


def mode_value_at(mode: RectMode, offset: float) -> float:
    """Value of the normalized mode at the attachment point ``(M, offset)``."""
    return float(mode(mode.M, offset))


def omega0_boundary_value(mode: RectMode, offset: float) -> float:
    """``phi^e(p_0)`` for the reflected mode normalized on the union of both
    bulks (the single-bulk value divided by ``sqrt(2)``)."""
    return mode_value_at(mode, offset) / math.sqrt(2.0)


def eigen_index(values, mu: float, tol: float = TIE_TOL) -> int:
    """1-based index ``min{i : lambda_i = mu}`` with relative tie tolerance."""
    vals = np.asarray(values, dtype=float)
    return 1 + int(np.sum(vals < mu - tol * max(1.0, abs(mu))))


@dataclass(frozen=True)
class LimitEntry:
    source: str  # "BulkDouble" or "NeckTau"
    value: float
    label: str


def limit_spectrum(bulk_values, taus) -> list[LimitEntry]:
    """Bulk eigenvalues (each inserted twice) merged with the Dirichlet
    eigenvalues of the neck, ascending."""
    out = []
    for i, v in enumerate(bulk_values):
        out.append(LimitEntry("BulkDouble", float(v), f"mu_{i + 1}"))
        out.append(LimitEntry("BulkDouble", float(v), f"mu_{i + 1}"))
    for i, t in enumerate(taus):
        out.append(LimitEntry("NeckTau", float(t), f"tau_{i + 1}"))
    out.sort(key=lambda e: (e.value, e.source))
    return out


@dataclass(frozen=True)
class IndexPrediction:
    mu: float
    index_in_bulk: int
    k: int
    even: int
    odd: int

    @property
    def low(self) -> int:
        return min(self.even, self.odd)

    def as_dict(self) -> dict:
        return {"mu": self.mu, "index_in_bulk": self.index_in_bulk, "k": self.k,
                "indices": {"even": self.even, "odd": self.odd}}


def predict_limit_indices(mu: float, bulk_values, taus, guard: float = 1e-6,
                          tol: float = TIE_TOL) -> IndexPrediction:
    """Dumbbell indices of the even and odd branches emanating from ``mu``.

    The pair occupies positions ``2 index + k - 1`` and ``2 index + k``; the
    lower one belongs to the even branch when ``k`` is even and to the odd
    branch when ``k`` is odd.

    Raises
    ------
    AssumptionViolated
        If ``mu`` is not a simple bulk eigenvalue, coincides with a Dirichlet
        eigenvalue of the neck, or ``taus`` does not extend beyond ``mu``.
    """
    vals = np.asarray(bulk_values, dtype=float)
    taus = np.asarray(taus, dtype=float)
    scale = max(1.0, abs(mu))
    close = np.abs(vals - mu) <= tol * scale
    if close.sum() != 1:
        raise AssumptionViolated(f"mu = {mu:.10g} is not a simple bulk eigenvalue "
                                 f"({int(close.sum())} matches)")
    if np.any(np.abs(taus - mu) <= guard * scale):
        raise AssumptionViolated(f"mu = {mu:.10g} coincides with a Dirichlet eigenvalue of the neck")
    if len(taus) == 0 or taus.max() <= mu:
        raise AssumptionViolated("Dirichlet eigenvalues supplied do not extend beyond mu")
    index = eigen_index(vals, mu, tol)
    k = int(np.sum(taus < mu))
    low, high = 2 * index + k - 1, 2 * index + k
    even, odd = (low, high) if k % 2 == 0 else (high, low)
    return IndexPrediction(float(mu), index, k, even, odd)


@dataclass(frozen=True)
class CountPrediction:
    even_bound: int
    odd_bound: int
    equality_expected: bool

    def as_dict(self) -> dict:
        return {"even_bound": self.even_bound, "odd_bound": self.odd_bound,
                "equality_expected": self.equality_expected}


def predict_nodal_counts(mode: RectMode, k: int) -> CountPrediction:
    """Upper bounds on the nodal counts of the two branches.

    With ``c`` the bulk nodal count, the branch sitting at the lower position
    gets ``2c + k - 1`` and the other ``2c + k``; the bounds are attained when
    the bulk mode has no interior nodal crossings.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    c = mode.nodal_count
    if k % 2 == 0:
        even, odd = 2 * c + k - 1, 2 * c + k
    else:
        even, odd = 2 * c + k, 2 * c + k - 1
    return CountPrediction(even, odd, not mode.has_crossings)


def closed_form_theta(mu: float, L: float, a: float, parity: str, guard: float = 1e-6) -> float:
    """``Theta`` for the constant profile ``g = 1`` on ``[0, L]``.

    Even data ``(a, a)``: ``-2 a^2 sqrt(mu) tan(sqrt(mu) L / 2)``; odd data
    ``(a, -a)``: ``2 a^2 sqrt(mu) cot(sqrt(mu) L / 2)``, with limits ``0`` and
    ``4 a^2 / L`` at ``mu = 0``.

    Raises
    ------
    Resonant
        If ``mu`` lies within ``guard * max(1, mu)`` of a pole.
    """
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    parity = parity.lower()
    if parity not in ("even", "odd"):
        raise ValueError("parity must be 'even' or 'odd'")
    scale = guard * max(1.0, mu)
    # poles: even at tau_n with n odd, odd at tau_n with n even (n >= 1)
    nn = math.sqrt(mu) * L / math.pi
    start = 1 if parity == "even" else 2
    for n in range(max(start, int(nn) - 2), int(nn) + 3):
        if (n - start) % 2 == 0 and abs(mu - (n * math.pi / L) ** 2) <= scale:
            raise Resonant(f"mu = {mu:.10g} is at a pole of the {parity} formula (n = {n})")
    if mu == 0.0:
        return 0.0 if parity == "even" else 4.0 * a * a / L
    s = math.sqrt(mu)
    x = s * L / 2.0
    if parity == "even":
        return -2.0 * a * a * s * math.tan(x)
    return 2.0 * a * a * s / math.tan(x)


def courant_sharp_set(M: float, H: float, count: int, tol: float = TIE_TOL) -> list[int]:
    """1-based positions among the first ``count`` modes whose nodal count
    equals their eigenvalue index."""
    modes = rect_spectrum(M, H, count)
    vals = [m.lam for m in modes]
    sharp = []
    for pos, m in enumerate(modes, start=1):
        if m.nodal_count == eigen_index(vals, m.lam, tol):
            sharp.append(pos)
    return sharp


def find_mode(M: float, H: float, j: int, n: int, count: int = 400):
    """Mode ``(j, n)`` together with the spectrum prefix containing it."""
    target = RectMode(j, n, M, H)
    while True:
        modes = rect_spectrum(M, H, count)
        if modes[-1].lam > target.lam * (1 + 1e-6) + 1e-12:
            return target, modes
        count *= 2


REPORTED_FIGURES = {
    # figures quoted for the second rectangular example; emitted, not asserted
    "mu2": {"reported_index": 31, "reported_deficiency": 20, "reported_bound": 16},
}

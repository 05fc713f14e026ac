"""The limiting spectral law of inner-product kernel random matrices.

The measure is parameterized by (a, nu, gamma) and characterized by its
Stieltjes transform m(z), the unique solution in the upper half-plane of

    -1/m = z + a*(1 - 1/(1 + a*gamma*m)) + gamma*(nu - a^2)*m.

Clearing denominators turns this into a cubic in m,

    (a*g^2*(nu-a^2)) m^3 + ((z+a)*a*g + g*(nu-a^2)) m^2 + (z + a*g) m + 1 = 0

with g = gamma, which this module solves in closed form.  The law is the
free additive convolution of a centered, a-scaled Marcenko-Pastur law and
a semicircle law of variance gamma*(nu - a^2); that identity fixes the
R-transform, the free cumulants, and (through non-crossing partitions)
every moment, all of which are exposed here.
"""

from __future__ import annotations

import itertools
import math
from bisect import bisect_left
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .cubic import solve_cubic, solve_cubic_many, solve_quadratic, solve_quadratic_many
from .errors import ConfigError, ConsistencyError, DomainError, SizeCapError

MAX_MOMENT_ORDER = 14  # Catalan growth cap for partition enumeration
_MP_DEGENERACY_RTOL = 1e-12


@dataclass(frozen=True)
class LimitLawParams:
    """The triple (a, nu, gamma) of a limit law.

    For laws derived from a kernel, a = E[xi k(xi)] and nu = E[k(xi)^2],
    so nu >= a^2 by Cauchy-Schwarz; gamma is the row/column aspect limit.
    """

    a: float
    nu: float
    gamma: float

    def __post_init__(self):
        if not (self.gamma > 0):
            raise ConfigError(f"gamma must be > 0, got {self.gamma}")
        if not (self.nu > 0):
            raise ConfigError(f"nu must be > 0, got {self.nu}")
        if self.nu < self.a * self.a * (1.0 - 1e-12) - 1e-300:
            raise ConfigError(
                f"nu = {self.nu} < a^2 = {self.a * self.a}; no kernel realizes these parameters"
            )

    @property
    def semicircle_variance(self) -> float:
        return self.gamma * max(self.nu - self.a * self.a, 0.0)

    @property
    def is_marcenko_pastur(self) -> bool:
        """True when nu == a^2, i.e. the semicircle component vanishes."""
        return abs(self.nu - self.a * self.a) <= _MP_DEGENERACY_RTOL * self.nu


@dataclass(frozen=True)
class StieltjesSolution:
    z: complex
    m: complex
    residual: float


@dataclass(frozen=True)
class SupportIntervals:
    """Support of the law: one or two closed intervals, plus (only in the
    degenerate Marcenko-Pastur case with gamma > 1) a point mass recorded
    both as a zero-width interval and in the atom fields."""

    intervals: tuple[tuple[float, float], ...]
    atom_location: float | None = None
    atom_mass: float | None = None

    @property
    def min_edge(self) -> float:
        return self.intervals[0][0]

    @property
    def max_edge(self) -> float:
        return self.intervals[-1][1]

    @property
    def norm(self) -> float:
        return max(abs(self.min_edge), abs(self.max_edge))

    def __contains__(self, x: float) -> bool:
        return any(lo <= x <= hi for lo, hi in self.intervals)


@dataclass(frozen=True)
class DensityGrid:
    xs: np.ndarray
    density: np.ndarray
    epsilon: float

    def integral(self) -> float:
        return float(np.trapezoid(self.density, self.xs))


@dataclass(frozen=True)
class CumulantSequence:
    kappas: np.ndarray  # kappas[l-1] holds kappa_l

    def __getitem__(self, l: int) -> float:
        return float(self.kappas[l - 1])

    def __len__(self) -> int:
        return len(self.kappas)


def _cubic_coefficients(z, p: LimitLawParams):
    """Coefficients (c3, c2, c1, c0) of the polynomial in m; c2, c1 follow
    the shape of z."""
    b = p.a * p.gamma
    c = p.semicircle_variance
    c3 = b * c
    c2 = (z + p.a) * b + c
    c1 = z + b
    return c3, c2, c1, 1.0


def _negligible_leading(c3: float, c2) -> bool:
    """A cubic coefficient far below the quadratic's scale makes Cardano
    cancel catastrophically on the two physical roots; the third root then
    sits near -c2/c3 in the lower half-plane and can be dropped.  Solve the
    quadratic instead and Newton-polish against the full cubic."""
    scale = float(np.max(np.abs(c2)))
    return abs(c3) <= 1e-10 * max(scale, 1e-300)


def _polish(roots, c3, c2, c1, c0, iters: int = 3):
    for _ in range(iters):
        f = ((c3 * roots + c2) * roots + c1) * roots + c0
        df = (3.0 * c3 * roots + 2.0 * c2) * roots + c1
        step = np.where(df != 0, f / np.where(df == 0, 1.0, df), 0.0)
        roots = roots - step
    return roots


def _roots_at(z: complex, p: LimitLawParams) -> list[complex]:
    c3, c2, c1, c0 = _cubic_coefficients(z, p)
    if c3 != 0.0 and not _negligible_leading(c3, c2):
        return list(solve_cubic(c3, c2, c1, c0))
    if c2 != 0.0:
        roots = np.asarray(solve_quadratic(c2, c1, c0))
        roots = _polish(roots, c3, c2, c1, c0)
        return [complex(r) for r in roots]
    return [complex(-c0 / c1)]


def _poly_residual(m: complex, z: complex, p: LimitLawParams) -> float:
    c3, c2, c1, c0 = _cubic_coefficients(z, p)
    return float(abs(((c3 * m + c2) * m + c1) * m + c0))


def stieltjes(z: complex, p: LimitLawParams) -> StieltjesSolution:
    """Stieltjes transform m(z) for a single z in the upper half-plane.

    All roots of the defining polynomial are computed in closed form and
    the unique root with Im m > 0 is selected.  If roundoff leaves more
    than one candidate near the real axis, the root is disambiguated by
    continuity along a vertical homotopy from high above the real axis,
    where m ~ -1/z identifies the physical branch.
    """
    z = complex(z)
    if not z.imag > 0:
        raise DomainError(f"stieltjes requires Im z > 0, got z = {z}")
    roots = _roots_at(z, p)
    upper = [r for r in roots if r.imag > 0]
    if len(upper) == 1:
        m = upper[0]
    elif len(upper) == 0:
        raise ConsistencyError(f"no upper-half-plane root at z = {z}; roots = {roots}")
    else:
        m = _homotopy_root(z, p)
    return StieltjesSolution(z=z, m=m, residual=_poly_residual(m, z, p))


def _homotopy_root(z: complex, p: LimitLawParams) -> complex:
    top = max(10.0, 4.0 * math.sqrt(p.gamma * p.nu), 2.0 * abs(z))
    heights = np.geomspace(top, z.imag, 60)
    zt = complex(z.real, heights[0])
    m = min(_roots_at(zt, p), key=lambda r: abs(r - (-1.0 / zt)))
    for h in heights[1:]:
        zt = complex(z.real, h)
        m = min(_roots_at(zt, p), key=lambda r: abs(r - m))
    if not m.imag > 0:
        raise ConsistencyError(f"homotopy terminated off the upper half-plane at z = {z}")
    return m


def stieltjes_grid(zs: np.ndarray, p: LimitLawParams) -> np.ndarray:
    """Vectorized m(z) over an array of upper-half-plane points.

    Selects, per point, the root with the largest imaginary part; the two
    spurious branches of the cubic lie in the closed lower half-plane up
    to roundoff, so this matches the scalar path.
    """
    zs = np.asarray(zs, dtype=complex)
    if not np.all(zs.imag > 0):
        raise DomainError("stieltjes_grid requires Im z > 0 everywhere")
    c3, c2, c1, c0 = _cubic_coefficients(zs, p)
    if c3 != 0.0 and not _negligible_leading(c3, c2):
        roots = solve_cubic_many(c3, c2, c1, c0)
    else:
        roots = _polish(solve_quadratic_many(c2, c1, c0), c3, c2, c1, c0)
    pick = np.argmax(roots.imag, axis=0)
    m = np.take_along_axis(roots, pick[None, ...], axis=0)[0]
    if not np.all(m.imag > 0):
        bad = zs[m.imag <= 0]
        raise ConsistencyError(f"no upper-half-plane root at {bad[:3]} ...")
    return m


def density(
    p: LimitLawParams,
    xs: np.ndarray,
    epsilon: float = 1e-6,
    richardson: bool = False,
) -> DensityGrid:
    """Density by Stieltjes inversion: Im m(x + i*eps) / pi on a grid.

    With richardson=True a two-point extrapolation eps -> 0 is applied,
    rho = 2*rho(eps) - rho(2*eps), which removes the leading linear bias
    of the smoothing at interior points.
    """
    if not epsilon > 0:
        raise DomainError(f"epsilon must be > 0, got {epsilon}")
    xs = np.asarray(xs, dtype=float)
    rho = stieltjes_grid(xs + 1j * epsilon, p).imag / np.pi
    if richardson:
        rho2 = stieltjes_grid(xs + 2j * epsilon, p).imag / np.pi
        rho = 2.0 * rho - rho2
    return DensityGrid(xs=xs, density=np.maximum(rho, 0.0), epsilon=epsilon)


def _support_discriminant(x: np.ndarray, p: LimitLawParams) -> np.ndarray:
    """Real-coefficient discriminant whose negative set is the interior of
    the support (a negative discriminant means a complex-conjugate root
    pair, i.e. an imaginary solution branch)."""
    x = np.asarray(x, dtype=float)
    c3, c2, c1, c0 = _cubic_coefficients(x, p)
    if c3 != 0.0:
        return (
            18.0 * c3 * c2 * c1 * c0
            - 4.0 * c2**3 * c0
            + c2**2 * c1**2
            - 4.0 * c3 * c1**3
            - 27.0 * c3**2 * c0**2
        )
    return c1 * c1 - 4.0 * c2 * c0


def _bisect_edge(p: LimitLawParams, lo: float, hi: float, xtol: float = 1e-12) -> float:
    flo = float(_support_discriminant(np.asarray([lo]), p)[0])
    for _ in range(200):
        if hi - lo <= xtol:
            break
        mid = 0.5 * (lo + hi)
        fmid = float(_support_discriminant(np.asarray([mid]), p)[0])
        if (flo < 0) == (fmid < 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def support(p: LimitLawParams, scan_points: int = 2000) -> SupportIntervals:
    """Support intervals, edges refined to ~1e-10.

    The degenerate case nu == a^2 (pure rescaled Marcenko-Pastur) is
    returned in closed form; for gamma > 1 it carries a point mass of
    1 - 1/gamma at -a, reported as a zero-width interval plus atom fields.
    """
    if p.is_marcenko_pastur:
        g, a = p.gamma, p.a
        e1 = a * (g - 2.0 * math.sqrt(g))
        e2 = a * (g + 2.0 * math.sqrt(g))
        cont = (min(e1, e2), max(e1, e2))
        if p.gamma > 1.0:
            atom = -a
            pieces = sorted([cont, (atom, atom)])
            return SupportIntervals(
                intervals=tuple(pieces), atom_location=atom, atom_mass=1.0 - 1.0 / g
            )
        return SupportIntervals(intervals=(cont,))

    g = p.gamma
    window = abs(p.a) * (g + 2.0 * math.sqrt(g) + 1.0) + 2.0 * math.sqrt(p.semicircle_variance) + 1.0
    for _ in range(8):
        xs = np.linspace(-window, window, scan_points + 1)
        disc = _support_discriminant(xs, p)
        if disc[0] < 0 or disc[-1] < 0:
            window *= 2.0
            continue
        neg = disc < 0
        if not np.any(neg):
            window *= 2.0  # support thinner than the scan can see; widen & retry
            continue
        edges = []
        for i in range(scan_points):
            if neg[i] != neg[i + 1]:
                edges.append(_bisect_edge(p, xs[i], xs[i + 1]))
        if len(edges) % 2 != 0:
            raise ConsistencyError(f"odd number of support edges found: {edges}")
        intervals = tuple((edges[i], edges[i + 1]) for i in range(0, len(edges), 2))
        if not 1 <= len(intervals) <= 2:
            raise ConsistencyError(f"expected 1 or 2 support intervals, found {intervals}")
        return SupportIntervals(intervals=intervals)
    raise ConsistencyError(f"support scan failed to bracket the spectrum for {p}")


def r_transform(z: complex, p: LimitLawParams) -> complex:
    """R(z) = -a*(1 - 1/(1 - a*gamma*z)) + gamma*(nu - a^2)*z."""
    z = complex(z)
    denom = 1.0 - p.a * p.gamma * z
    if abs(denom) < 1e-12 * (1.0 + abs(p.a * p.gamma * z)):
        raise DomainError(f"R-transform pole at z = 1/(a*gamma); got z = {z}")
    return -p.a * (1.0 - 1.0 / denom) + p.semicircle_variance * z


def free_cumulants(p: LimitLawParams, order: int) -> CumulantSequence:
    """kappa_1..kappa_order: kappa_1 = 0, kappa_2 = gamma*nu, and
    kappa_l = a^l gamma^(l-1) for l >= 3."""
    if order < 1:
        raise ConfigError(f"order must be >= 1, got {order}")
    kap = np.zeros(order)
    if order >= 2:
        kap[1] = p.gamma * p.nu
    for l in range(3, order + 1):
        kap[l - 1] = p.a**l * p.gamma ** (l - 1)
    return CumulantSequence(kappas=kap)


def _nc_partitions(elems: tuple[int, ...]) -> Iterator[tuple[tuple[int, ...], ...]]:
    """Stream all non-crossing partitions of a sorted tuple of labels.

    Decomposition: the block containing the first element splits the rest
    into independent gaps, each partitioned non-crossingly.
    """
    if not elems:
        yield ()
        return
    first, rest = elems[0], elems[1:]
    for r in range(len(rest) + 1):
        for comb in itertools.combinations(rest, r):
            block = (first,) + comb
            gaps: list[list[int]] = [[] for _ in range(r + 1)]
            ci = 0
            for e in rest:
                if ci < r and e == comb[ci]:
                    ci += 1
                    continue
                gaps[bisect_left(comb, e)].append(e)

            def emit(i: int) -> Iterator[tuple[tuple[int, ...], ...]]:
                if i == len(gaps):
                    yield ()
                    return
                for head in _nc_partitions(tuple(gaps[i])):
                    for tail in emit(i + 1):
                        yield head + tail

            for sub in emit(0):
                yield tuple(sorted((block,) + sub, key=lambda b: b[0]))


def iter_nc_partitions(l: int) -> Iterator[tuple[tuple[int, ...], ...]]:
    if not 1 <= l <= MAX_MOMENT_ORDER:
        raise SizeCapError(f"l must be in [1, {MAX_MOMENT_ORDER}], got {l}")
    return _nc_partitions(tuple(range(1, l + 1)))


def enumerate_nc_partitions(l: int) -> list[tuple[tuple[int, ...], ...]]:
    """All non-crossing partitions of {1..l}; the count is Catalan(l)."""
    return list(iter_nc_partitions(l))


def catalan(l: int) -> int:
    return math.comb(2 * l, l) // (l + 1)


def moment(p: LimitLawParams, l: int) -> float:
    """The l-th moment as the cumulant sum over non-crossing partitions.

    Partitions with a singleton block drop out (kappa_1 = 0).  Terms are
    combined with Kahan compensation; Catalan(14) ~ 2.7e6 of them at the
    size cap.
    """
    if not 1 <= l <= MAX_MOMENT_ORDER:
        raise SizeCapError(f"l must be in [1, {MAX_MOMENT_ORDER}], got {l}")
    kap = free_cumulants(p, l).kappas
    total = 0.0
    comp = 0.0
    for part in iter_nc_partitions(l):
        term = 1.0
        for block in part:
            if len(block) == 1:
                term = 0.0
                break
            term *= kap[len(block) - 1]
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


def check_sign_property(p: LimitLawParams, tol: float = 1e-9) -> bool:
    """Does the sign of a push the support the right way?  For a >= 0 the
    top edge dominates in magnitude, for a <= 0 the bottom edge does."""
    sup = support(p)
    slack = tol * max(1.0, sup.norm)
    if p.a >= 0 and sup.max_edge + slack < -sup.min_edge:
        return False
    if p.a <= 0 and -sup.min_edge + slack < sup.max_edge:
        return False
    return True

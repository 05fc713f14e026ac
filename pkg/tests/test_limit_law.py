import itertools
import math

import numpy as np
import pytest

from kernelspectra.errors import ConfigError, DomainError, SizeCapError
from kernelspectra.limit_law import (
    LimitLawParams,
    catalan,
    check_sign_property,
    density,
    enumerate_nc_partitions,
    free_cumulants,
    moment,
    r_transform,
    stieltjes,
    stieltjes_grid,
    support,
)

SEMICIRCLE = LimitLawParams(a=0.0, nu=1.0, gamma=1.0)


def test_stieltjes_decays_like_minus_one_over_z():
    for p in (SEMICIRCLE, LimitLawParams(1.0, 2.0, 3.0), LimitLawParams(-0.5, 1.0, 0.5)):
        sol = stieltjes(100j, p)
        assert abs(sol.m - (-1 / 100j)) < 1e-3 * abs(sol.m)


def test_stieltjes_semicircle_center():
    # semicircle density at 0 is 1/pi, so Im m(0 + i eps) -> 1
    sol = stieltjes(0.0 + 1e-6j, SEMICIRCLE)
    assert sol.m.imag == pytest.approx(1.0, abs=1e-3)


def test_stieltjes_rejects_lower_half_plane():
    with pytest.raises(DomainError):
        stieltjes(1.0 - 0.1j, SEMICIRCLE)
    with pytest.raises(DomainError):
        stieltjes(1.0, SEMICIRCLE)


def test_herglotz_property_randomized():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        a = rng.uniform(-2, 2)
        nu = a * a + rng.uniform(1e-3, 4.0)
        gamma = rng.uniform(0.05, 10.0)
        p = LimitLawParams(a, nu, gamma)
        z = complex(rng.uniform(-10, 10), 10 ** rng.uniform(-6, 1))
        sol = stieltjes(z, p)
        assert sol.m.imag > 0
        assert sol.residual < 1e-10


def test_grid_matches_scalar_path():
    p = LimitLawParams(0.8, 1.5, 2.0)
    zs = np.linspace(-6, 6, 101) + 1e-5j
    grid = stieltjes_grid(zs, p)
    for i in (0, 17, 50, 83, 100):
        assert grid[i] == pytest.approx(stieltjes(zs[i], p).m, abs=1e-10)


def test_density_semicircle_center():
    dg = density(SEMICIRCLE, np.array([0.0]), epsilon=1e-6)
    assert dg.density[0] == pytest.approx(1 / math.pi, abs=1e-3)


def test_density_scaled_semicircle():
    # gamma*nu = 4: radius 4 semicircle has density 1/(2 pi) at the center
    dg = density(LimitLawParams(0.0, 1.0, 4.0), np.array([0.0]), epsilon=1e-6)
    assert dg.density[0] == pytest.approx(1 / (2 * math.pi), abs=1e-3)


def test_density_vanishes_outside_support():
    for p in (SEMICIRCLE, LimitLawParams(1.0, 3.0, 2.0)):
        edge = support(p).norm
        dg = density(p, np.array([edge + 1.0, -edge - 1.0]))
        assert np.all(dg.density < 1e-4)


def test_density_integrates_to_one():
    for p in (SEMICIRCLE, LimitLawParams(0.7, 1.1, 3.0), LimitLawParams(-1.0, 2.5, 0.3)):
        sup = support(p)
        xs = np.linspace(sup.min_edge - 0.5, sup.max_edge + 0.5, 6001)
        assert density(p, xs).integral() == pytest.approx(1.0, abs=1e-3)


def test_density_richardson_refines():
    xs = np.linspace(-1.0, 1.0, 11)
    plain = density(SEMICIRCLE, xs, epsilon=1e-3).density
    extrap = density(SEMICIRCLE, xs, epsilon=1e-3, richardson=True).density
    exact = np.sqrt(4 - xs**2) / (2 * math.pi)
    assert np.max(np.abs(extrap - exact)) < np.max(np.abs(plain - exact))


def test_support_semicircle():
    sup = support(SEMICIRCLE)
    assert len(sup.intervals) == 1
    assert sup.min_edge == pytest.approx(-2.0, abs=1e-8)
    assert sup.max_edge == pytest.approx(2.0, abs=1e-8)
    assert sup.norm == pytest.approx(2.0, abs=1e-8)


def test_support_shifted_marcenko_pastur():
    sup = support(LimitLawParams(1.0, 1.0, 1.0))
    assert sup.intervals == ((-1.0, 3.0),)
    assert sup.norm == 3.0


def test_support_wide_semicircle():
    sup = support(LimitLawParams(0.0, 2.0, 10.0))
    assert sup.max_edge == pytest.approx(2 * math.sqrt(20), abs=1e-8)
    assert sup.min_edge == pytest.approx(-2 * math.sqrt(20), abs=1e-8)


def test_support_atom_case():
    sup = support(LimitLawParams(1.0, 1.0, 4.0))
    assert sup.atom_location == pytest.approx(-1.0)
    assert sup.atom_mass == pytest.approx(0.75)
    assert sup.intervals[0] == (-1.0, -1.0)
    assert sup.intervals[1] == (0.0, 8.0)
    assert sup.norm == 8.0


def test_support_single_interval_when_gamma_at_most_one():
    rng = np.random.default_rng(5)
    for _ in range(20):
        a = rng.uniform(-1.5, 1.5)
        nu = a * a + rng.uniform(0.01, 2.0)
        gamma = rng.uniform(0.05, 1.0)
        assert len(support(LimitLawParams(a, nu, gamma)).intervals) == 1


def test_support_two_intervals_near_degeneracy():
    # a strong MP component with a whisper of semicircle smearing splits
    # the spectrum: the atom at -a fattens into a second interval
    sup = support(LimitLawParams(1.0, 1.02, 4.0))
    assert len(sup.intervals) == 2
    assert sup.intervals[0][0] < -1.0 < sup.intervals[0][1] < sup.intervals[1][0]


def test_support_reflection():
    for (a, nu, g) in ((1.0, 2.0, 1.0), (0.7, 0.6, 4.0), (1.3, 2.0, 0.4)):
        plus = support(LimitLawParams(a, nu, g))
        minus = support(LimitLawParams(-a, nu, g))
        assert minus.max_edge == pytest.approx(-plus.min_edge, abs=1e-9)
        assert minus.min_edge == pytest.approx(-plus.max_edge, abs=1e-9)


def test_norm_continuity_away_from_degeneracy():
    base = LimitLawParams(0.9, 1.7, 2.5)
    ref = support(base).norm
    for da, dnu, dg in itertools.product((-1e-4, 1e-4), repeat=3):
        got = support(LimitLawParams(base.a + da, base.nu + dnu, base.gamma + dg)).norm
        assert abs(got - ref) < 1e-3


def test_params_validation():
    with pytest.raises(ConfigError):
        LimitLawParams(0.0, 1.0, 0.0)
    with pytest.raises(ConfigError):
        LimitLawParams(0.0, 0.0, 1.0)
    with pytest.raises(ConfigError):
        LimitLawParams(2.0, 1.0, 1.0)  # nu < a^2


def test_r_transform_examples():
    p = LimitLawParams(1.0, 2.0, 3.0)
    assert r_transform(0.0, p) == 0.0
    # derivative at 0 equals the second cumulant gamma*nu
    h = 1e-6
    deriv = (r_transform(h, p) - r_transform(-h, p)) / (2 * h)
    assert deriv == pytest.approx(p.gamma * p.nu, rel=1e-6)
    # a = 0: exactly linear
    p0 = LimitLawParams(0.0, 1.5, 2.0)
    for z in (0.3, -1.2, 0.05 + 0.4j):
        assert r_transform(z, p0) == pytest.approx(p0.gamma * p0.nu * z, abs=1e-14)
    with pytest.raises(DomainError):
        r_transform(1 / (p.a * p.gamma), p)


def test_free_cumulants_closed_form():
    got = free_cumulants(LimitLawParams(1.0, 2.0, 3.0), 4).kappas
    assert np.allclose(got, [0.0, 6.0, 9.0, 27.0])
    got0 = free_cumulants(LimitLawParams(0.0, 1.5, 2.0), 6).kappas
    assert np.allclose(got0, [0.0, 3.0, 0.0, 0.0, 0.0, 0.0])


def test_free_cumulants_match_r_transform_series():
    # oracle: Taylor coefficients of R by a Cauchy contour integral
    p = LimitLawParams(0.8, 1.4, 2.0)
    radius = 0.25 / (abs(p.a) * p.gamma)
    ts = np.linspace(0.0, 2 * math.pi, 512, endpoint=False)
    ring = radius * np.exp(1j * ts)
    vals = np.array([r_transform(z, p) for z in ring])
    kap = free_cumulants(p, 8)
    for l in range(1, 9):
        coef = np.mean(vals / ring ** (l - 1))  # coefficient of z^{l-1}
        assert coef.real == pytest.approx(kap[l], abs=1e-10)
        assert abs(coef.imag) < 1e-10


def test_cumulant_additivity_of_free_components():
    # The law is the free convolution of an a-scaled centered MP law and a
    # semicircle law; cumulants must add, term by term.
    p = LimitLawParams(1.2, 3.0, 2.5)
    total = free_cumulants(p, 10).kappas
    mp_part = np.array(
        [0.0] + [p.a**l * p.gamma ** (l - 1) for l in range(2, 11)]
    )
    sc_part = np.zeros(10)
    sc_part[1] = p.gamma * (p.nu - p.a**2)
    assert np.max(np.abs(total - (mp_part + sc_part))) < 1e-12


def _crossing(block_a, block_b):
    return any(
        a1 < b1 < a2 < b2 or b1 < a1 < b2 < a2
        for a1, a2 in itertools.combinations(block_a, 2)
        for b1, b2 in itertools.combinations(block_b, 2)
    )


def _all_set_partitions(elems):
    if not elems:
        yield []
        return
    first, rest = elems[0], elems[1:]
    for sub in _all_set_partitions(rest):
        for i in range(len(sub)):
            yield sub[:i] + [sorted([first] + sub[i])] + sub[i + 1 :]
        yield [[first]] + sub


def brute_force_noncrossing(l):
    out = set()
    for part in _all_set_partitions(list(range(1, l + 1))):
        if any(_crossing(x, y) for x, y in itertools.combinations(part, 2)):
            continue
        out.add(tuple(sorted(tuple(b) for b in part)))
    return out


@pytest.mark.parametrize("l", [1, 2, 3, 4, 5])
def test_nc_partitions_against_brute_force(l):
    got = {tuple(sorted(part)) for part in enumerate_nc_partitions(l)}
    expected = brute_force_noncrossing(l)
    assert got == expected
    assert len(got) == catalan(l)


def test_nc_pair_partitions_at_l4():
    pairings = [
        part for part in enumerate_nc_partitions(4) if all(len(b) == 2 for b in part)
    ]
    assert sorted(pairings) == [
        (((1, 2), (3, 4))),
        (((1, 4), (2, 3))),
    ]


def test_nc_partitions_cap():
    with pytest.raises(SizeCapError):
        enumerate_nc_partitions(15)
    with pytest.raises(SizeCapError):
        moment(SEMICIRCLE, 15)


def test_moment_closed_forms():
    p = LimitLawParams(1.1, 2.3, 1.7)
    g, nu, a = p.gamma, p.nu, p.a
    assert moment(p, 1) == 0.0
    assert moment(p, 2) == pytest.approx(g * nu, rel=1e-14)
    assert moment(p, 3) == pytest.approx(a**3 * g**2, rel=1e-14)
    # two non-crossing pairings contribute kappa_2^2; the single block kappa_4
    assert moment(p, 4) == pytest.approx(2 * g**2 * nu**2 + a**4 * g**3, rel=1e-14)


def test_moments_match_density_integrals():
    for p in (
        SEMICIRCLE,
        LimitLawParams(1.0, 2.0, 1.0),
        LimitLawParams(0.6, 1.0, 3.0),
        LimitLawParams(-0.8, 1.5, 0.5),
    ):
        sup = support(p)
        xs = np.linspace(sup.min_edge - 0.2, sup.max_edge + 0.2, 20001)
        rho = density(p, xs, epsilon=1e-7).density
        scale = max(1.0, sup.norm)
        for l in range(1, 9):
            numeric = float(np.trapezoid(rho * xs**l, xs))
            assert moment(p, l) == pytest.approx(numeric, abs=1e-4 * scale**l)


def test_sign_property():
    assert check_sign_property(LimitLawParams(1.0, 1.0, 1.0))
    assert check_sign_property(LimitLawParams(0.0, 1.0, 1.0))
    assert check_sign_property(LimitLawParams(-1.0, 1.0, 1.0))
    rng = np.random.default_rng(3)
    for _ in range(25):
        a = rng.uniform(-2, 2)
        p = LimitLawParams(a, a * a + rng.uniform(0.05, 2), rng.uniform(0.1, 6))
        assert check_sign_property(p)

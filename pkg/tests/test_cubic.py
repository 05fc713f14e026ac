import numpy as np

from kernelspectra.cubic import (
    solve_cubic,
    solve_cubic_many,
    solve_quadratic,
    solve_quadratic_many,
)


def poly_val(coeffs, x):
    out = 0j
    for c in coeffs:
        out = out * x + c
    return out


def test_quadratic_roots_random():
    rng = np.random.default_rng(0)
    for _ in range(200):
        c = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        for r in solve_quadratic(*c):
            assert abs(poly_val(c, r)) < 1e-10 * max(1.0, *np.abs(c))


def test_cubic_roots_random():
    rng = np.random.default_rng(1)
    for _ in range(300):
        c = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        roots = solve_cubic(*c)
        assert len(roots) == 3
        for r in roots:
            assert abs(poly_val(c, r)) < 1e-9 * max(1.0, *np.abs(c))
        # compare against the companion-matrix solver as an oracle
        ref = np.sort_complex(np.roots(c))
        assert np.allclose(np.sort_complex(np.array(roots)), ref, atol=1e-7)


def test_cubic_repeated_roots():
    # (x - 1)^3 = x^3 - 3x^2 + 3x - 1
    roots = np.array(solve_cubic(1.0, -3.0, 3.0, -1.0))
    assert np.allclose(roots, 1.0, atol=1e-5)


def test_vectorized_matches_scalar():
    rng = np.random.default_rng(2)
    c3 = 0.7 - 0.2j
    c0 = 1.0 + 0.0j
    c2 = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    c1 = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    many = solve_cubic_many(c3, c2, c1, c0)
    for i in range(50):
        ref = np.sort_complex(np.array(solve_cubic(c3, c2[i], c1[i], c0)))
        assert np.allclose(np.sort_complex(many[:, i]), ref, atol=1e-8)
    many_q = solve_quadratic_many(c2[0], c1, c0)
    for i in range(50):
        ref = np.sort_complex(np.array(solve_quadratic(c2[0], c1[i], c0)))
        assert np.allclose(np.sort_complex(many_q[:, i]), ref, atol=1e-8)

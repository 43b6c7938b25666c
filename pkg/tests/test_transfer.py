import math

import numpy as np
import pytest

from ifslab import (
    AtomicMeasure,
    GridFunction,
    Potential,
    SummabilityError,
    affine_family,
    apply,
    apply_at,
    attractor_hull,
    dini_diagnostics,
    dual_apply,
    normalized_operator,
    perron_pair,
    spectral_radius,
    uniform_grid,
)

LOG23 = math.log(2) / math.log(3)


def grid_for(family, m=256):
    lo, hi = attractor_hull(family, 64)
    return uniform_grid(lo, hi, m)


# -- apply ---------------------------------------------------------------------


def test_apply_dyadic_constant_one(dyadic):
    nodes = grid_for(dyadic, 128)
    f = GridFunction.constant(nodes, 1.0)
    out, tail = apply(dyadic, Potential.geometric(0.5), f, truncation=40)
    assert np.allclose(out.values, 1.0 - 2.0 ** -40, rtol=0, atol=1e-15)
    assert tail == pytest.approx(2.0 ** -40, rel=1e-12)


def test_apply_zero_function(cantor):
    nodes = grid_for(cantor, 64)
    out, tail = apply(cantor, Potential.geometric(0.7), GridFunction.constant(nodes, 0.0))
    assert np.all(out.values == 0.0) and tail == 0.0


def test_apply_gauss_telescoping(gauss_full):
    # sum_j (j+x)^-2 / (1 + 1/(j+x)) telescopes to 1/(1+x)
    nodes = uniform_grid(0.0, 1.0, 512)
    f = GridFunction.from_callable(nodes, lambda x: 1.0 / (1.0 + x))
    out, tail = apply(gauss_full, Potential.geometric(1.0), f, truncation=600, analytic_tail=True)
    assert tail == 0.0
    interp_err = 2.0 * (nodes[1] - nodes[0]) ** 2 / 8.0
    assert np.abs(out.values - f.values).max() <= interp_err + 1e-12


def test_apply_summability_error(gauss_full):
    nodes = uniform_grid(0.0, 1.0, 32)
    with pytest.raises(SummabilityError):
        apply(gauss_full, Potential.geometric(0.4), GridFunction.constant(nodes, 1.0),
              truncation=100)


def test_apply_finite_family_full_coverage_zero_tail(cantor):
    nodes = grid_for(cantor, 64)
    _, tail = apply(cantor, Potential.geometric(1.0), GridFunction.constant(nodes, 1.0),
                    truncation=10)
    assert tail == 0.0


# -- spectral radius -----------------------------------------------------------


def test_spectral_radius_cantor_moran_exponent(cantor):
    pd = spectral_radius(cantor, Potential.geometric(LOG23), grid=256, tol=1e-12)
    assert pd.rho == pytest.approx(1.0, abs=1e-10)
    assert pd.rho_bracket[0] <= 1.0 <= pd.rho_bracket[1] + 1e-12


def test_spectral_radius_cantor_row_sum(cantor):
    pd = spectral_radius(cantor, Potential.geometric(1.0), grid=64)
    assert pd.rho == pytest.approx(2.0 / 3.0, abs=1e-10)


def test_spectral_radius_dyadic_is_one(dyadic):
    pd = spectral_radius(dyadic, Potential.geometric(0.5), truncation=60, grid=512)
    assert abs(pd.rho - 1.0) <= 1e-9 + pd.tail_bound
    for _, lo, hi, _ in pd.trace:
        assert lo <= 1.0 + 1e-12 and 1.0 <= hi + pd.tail_bound + 1e-12


def test_collatz_wielandt_sandwich_per_iteration(gauss_digits):
    pd = spectral_radius(gauss_digits, Potential.geometric(1.0), grid=256)
    for _, lo, hi, _ in pd.trace:
        assert lo <= pd.rho * (1 + 1e-9)
        assert pd.rho <= hi * (1 + 1e-9)


# -- Perron pair ---------------------------------------------------------------


def test_perron_constant_derivative_h_constant(dyadic):
    pd = perron_pair(dyadic, Potential.geometric(0.5), truncation=60, grid=256)
    rel_var = pd.h.values.max() / pd.h.values.min() - 1.0
    assert rel_var < 1e-12
    assert pd.pairing == pytest.approx(1.0, abs=1e-12)


def test_perron_gauss_full_eigenfunction(gauss_full):
    pd = perron_pair(gauss_full, Potential.geometric(1.0), truncation=600, grid=1024)
    href = 1.0 / (1.0 + pd.h.nodes)
    scale = float(np.mean(pd.h.values / href))
    assert np.abs(pd.h.values / (scale * href) - 1.0).max() < 1e-6


def test_perron_cantor_cylinder_masses(cantor):
    pd = perron_pair(cantor, Potential.geometric(LOG23), grid=512)
    left = pd.mu.masses[pd.mu.positions < 0.5].sum()
    assert left == pytest.approx(0.5, abs=1e-8)


def test_uniform_bounds_prop(gauss_digits):
    # min h / max h <= rho^-n T^n 1 <= max h / min h for n <= 20
    pot = Potential.geometric(1.0)
    pd = perron_pair(gauss_digits, pot, grid=256)
    lo_bound = pd.h.values.min() / pd.h.values.max()
    hi_bound = pd.h.values.max() / pd.h.values.min()
    f = GridFunction.constant(pd.h.nodes, 1.0)
    for n in range(1, 21):
        f, _ = apply(gauss_digits, pot, f)
        vals = f.values / pd.rho ** n
        assert np.all(vals >= lo_bound * (1 - 1e-9))
        assert np.all(vals <= hi_bound * (1 + 1e-9))


def test_sup_norm_convergence_monotone(gauss_digits):
    pot = Potential.geometric(1.0)
    pd = perron_pair(gauss_digits, pot, grid=256, tol=1e-11, tol_rho=1e-13)
    f = GridFunction.constant(pd.h.nodes, 1.0)
    residuals = []
    for _ in range(40):
        f, _ = apply(gauss_digits, pot, f)
        f = f.with_values(f.values / pd.rho)
        residuals.append(float(np.abs(f.values - pd.h.values).max()))
        if residuals[-1] < 1e-9:
            break
    assert residuals[-1] < 1e-9
    for a, b in zip(residuals[3:], residuals[4:]):
        assert b <= a * (1 + 1e-9)


def test_eigenpair_uniqueness_different_starts(gauss_digits):
    pot = Potential.geometric(0.8)
    tol = 1e-10
    pd1 = perron_pair(gauss_digits, pot, grid=256, tol=tol)
    pd2 = perron_pair(gauss_digits, pot, grid=256, tol=tol,
                      start=lambda x: 1.0 + 0.5 * np.sin(9.0 * x) ** 2)
    h1 = pd1.h.values / pd1.h.values.max()
    h2 = pd2.h.values / pd2.h.values.max()
    assert np.abs(h1 - h2).max() < 5 * tol


# -- dual operator --------------------------------------------------------------


def test_dual_apply_two_affine_maps_half_weights(cantor):
    pot = Potential.custom(
        [lambda y: np.full_like(np.asarray(y, dtype=float), 0.5)] * 2,
        sup_bounds=[0.5, 0.5],
    )
    mu = AtomicMeasure(np.array([0.3]), np.array([1.0]))
    out = dual_apply(cantor, pot, mu)
    assert np.allclose(np.sort(out.positions), [0.1, 0.3 / 3 + 2 / 3])
    assert np.allclose(out.masses, [0.5, 0.5])


def test_duality_identity_before_binning(cantor):
    rng = np.random.default_rng(11)
    pot = Potential.geometric(LOG23)
    nodes = grid_for(cantor, 128)
    mu = AtomicMeasure(rng.uniform(0, 1, 10), rng.uniform(0.1, 1, 10))
    f = GridFunction(nodes, rng.uniform(-1, 2, nodes.size))
    lhs = dual_apply(cantor, pot, mu).pair(f)
    rhs = float(np.sum(mu.masses * apply_at(cantor, pot, f, mu.positions)))
    assert abs(lhs - rhs) < 1e-12


def test_duality_bound_after_binning(dyadic):
    # |<T* mu, f> - <mu, T f>| <= tail ||f|| + bin_width Lip(f) mass
    rng = np.random.default_rng(4)
    pot = Potential.geometric(0.5)
    nodes = grid_for(dyadic, 256)
    width = nodes[1] - nodes[0]
    mu = AtomicMeasure(rng.uniform(0, 1 / 3, 20), rng.uniform(0.1, 1, 20))
    n_trunc = 40
    tail = dyadic.tail_sup(0.5, n_trunc)
    for _ in range(50):
        f = GridFunction(nodes, rng.uniform(-1, 1, nodes.size))
        lip = float(np.abs(np.diff(f.values)).max() / width)
        lhs = dual_apply(dyadic, pot, mu, truncation=n_trunc, bin_nodes=nodes).pair(f)
        tf, _ = apply(dyadic, pot, f, truncation=n_trunc)
        rhs = float(np.sum(mu.masses * apply_at(dyadic, pot, f, mu.positions,
                                                truncation=n_trunc)))
        bound = tail * f.sup_norm + width * lip * mu.total_mass + 1e-12
        assert abs(lhs - rhs) <= bound


def test_dual_mass_factor_dyadic(dyadic):
    # one dual step multiplies total mass by T_s 1 = 1 - tail at the atoms
    pot = Potential.geometric(0.5)
    mu = AtomicMeasure(np.linspace(0.01, 0.3, 100), np.full(100, 0.01))
    out = dual_apply(dyadic, pot, mu, truncation=40)
    factor = out.total_mass / mu.total_mass
    assert factor == pytest.approx(1.0 - 2.0 ** -40, abs=2 ** -41)


def test_dual_explosion_guard(cantor):
    pot = Potential.geometric(1.0)
    mu = AtomicMeasure(np.linspace(0, 1, 100), np.full(100, 0.01))
    with pytest.raises(ValueError, match="bin_nodes"):
        dual_apply(cantor, pot, mu, max_atoms=50)


def test_weak_star_convergence(gauss_digits):
    pot = Potential.geometric(1.0)
    pd = perron_pair(gauss_digits, pot, grid=256, tol=1e-11, tol_mu=1e-12)
    nodes = pd.h.nodes
    rng = np.random.default_rng(21)
    for trial in range(3):
        xi = AtomicMeasure(
            rng.uniform(nodes[0], nodes[-1], 30), rng.uniform(0.1, 1.0, 30)
        ).normalized()
        meas = xi.bin_to(nodes)
        for _ in range(120):
            meas = dual_apply(gauss_digits, pot, meas, bin_nodes=nodes)
            meas = AtomicMeasure(meas.positions, meas.masses / pd.rho)
        for _ in range(10):
            f = GridFunction(nodes, rng.uniform(0.0, 2.0, nodes.size))
            lhs = meas.pair(f)
            rhs = xi.bin_to(nodes).pair(pd.h) * pd.mu.pair(f)
            assert abs(lhs - rhs) < 1e-7


# -- normalized operator ---------------------------------------------------------


def test_normalized_operator_fixes_constants(gauss_digits):
    pot = Potential.geometric(1.0)
    pd = perron_pair(gauss_digits, pot, grid=256, tol=1e-11)
    ones = GridFunction.constant(pd.h.nodes, 1.0)
    out = normalized_operator(pd, gauss_digits, pot, ones)
    assert np.abs(out.values - 1.0).max() < 1e-9


def test_normalized_operator_inverse_h_to_one(gauss_digits):
    pot = Potential.geometric(1.0)
    pd = perron_pair(gauss_digits, pot, grid=256, tol=1e-11)
    f = GridFunction(pd.h.nodes, 1.0 / pd.h.values)
    for _ in range(80):
        f = normalized_operator(pd, gauss_digits, pot, f)
    assert np.abs(f.values - 1.0).max() < 1e-9


def test_normalized_operator_affine_matches_scaled_apply(dyadic):
    pot = Potential.geometric(0.5)
    pd = perron_pair(dyadic, pot, truncation=60, grid=128)
    rng = np.random.default_rng(2)
    f = GridFunction(pd.h.nodes, rng.uniform(0.5, 2.0, pd.h.nodes.size))
    lhs = normalized_operator(pd, dyadic, pot, f)
    tf, _ = apply(dyadic, pot, f, truncation=pd.truncation, analytic_tail=True)
    assert np.abs(lhs.values - tf.values / pd.rho).max() < 1e-12


# -- measures and grid functions --------------------------------------------------


def test_gridfunction_clamps_outside():
    g = GridFunction([0.0, 1.0], [2.0, 3.0])
    assert g(-5.0) == 2.0 and g(7.0) == 3.0


def test_atomic_measure_normalization_and_pairing():
    mu = AtomicMeasure([0.1, 0.9], [1.0, 3.0])
    assert mu.total_mass == 4.0
    assert mu.normalized().total_mass == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        AtomicMeasure([0.1], [-1.0])


def test_binning_preserves_pairing_with_grid_functions():
    rng = np.random.default_rng(9)
    nodes = np.linspace(0, 1, 31)
    mu = AtomicMeasure(rng.uniform(0, 1, 200), rng.uniform(0, 1, 200))
    f = GridFunction(nodes, rng.uniform(-1, 1, 31))
    assert mu.bin_to(nodes).pair(f) == pytest.approx(mu.pair(f), abs=1e-12)
    assert mu.bin_to(nodes).total_mass == pytest.approx(mu.total_mass, abs=1e-12)


# -- Dini diagnostics --------------------------------------------------------------


def test_dini_constant_potential(cantor):
    pot = Potential.custom(
        [lambda y: np.full_like(np.asarray(y, dtype=float), 0.4)] * 2,
        sup_bounds=[0.4, 0.4],
    )
    rows = dini_diagnostics(pot, cantor, [0.2, 0.6])
    for r in rows:
        assert r.alpha == pytest.approx(0.0, abs=1e-12)
        assert r.phi == pytest.approx(0.0, abs=1e-10)


def test_dini_affine_geometric_zero(dyadic):
    rows = dini_diagnostics(Potential.geometric(0.7), dyadic, [0.5])
    assert rows[0].alpha == 0.0 and rows[0].phi == 0.0


def test_dini_gauss_digits_finite(gauss_digits):
    rows = dini_diagnostics(Potential.geometric(1.0), gauss_digits, [0.6])
    row = rows[0]
    assert row.converged and math.isfinite(row.phi)
    assert 0 < row.phi < 4.0
    # partial sums are Cauchy with ratio <= the family contraction
    terms = [gauss_digits.dini_modulus(gauss_digits.contraction ** m * 0.6) for m in range(60)]
    ratios = [b / a for a, b in zip(terms, terms[1:]) if a > 1e-14]
    assert max(ratios) <= gauss_digits.contraction + 0.05

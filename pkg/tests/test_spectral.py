import numpy as np
import pytest

from nsclab.spectral import (
    Grid,
    MeanValueError,
    SpectralField,
    State,
    apply_multiplier,
    dealias_23,
    field_lp_norm,
    load_state,
    random_field,
    save_state,
    to_physical,
    to_spectral,
    zero_field,
    zero_state,
)

from oracles import convolve_modes


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(d=4, n=16)
    with pytest.raises(ValueError):
        Grid(d=2, n=6)
    with pytest.raises(ValueError):
        Grid(d=2, n=17)
    with pytest.raises(ValueError):
        Grid(d=2, n=16, L=-1.0)


def test_single_mode_gradient_exact():
    g = Grid(d=2, n=16)
    f = zero_field(g)
    f.coeffs[3, 2] = 1.0 + 0.5j
    xi = [w[3, 2] for w in g.wavevectors()]
    out = apply_multiplier(f, "grad")
    for comp, x in zip(out, xi):
        assert comp.coeffs[3, 2] == 1j * x * (1.0 + 0.5j)
        comp.coeffs[3, 2] = 0.0
        assert np.all(comp.coeffs == 0.0)


def test_laplacian_inverse_composition(rng, grid2d):
    f = random_field(grid2d, rng)
    back = apply_multiplier(apply_multiplier(f, "inv_neg_laplacian"), "laplacian")
    assert np.max(np.abs(back.coeffs + f.coeffs)) <= 1e-12


def test_lambda_sigma_two_equals_neg_laplacian(rng, grid2d):
    f = random_field(grid2d, rng)
    a = apply_multiplier(f, "lambda_sigma", sigma=2.0)
    b = apply_multiplier(f, "laplacian")
    assert np.max(np.abs(a.coeffs + b.coeffs)) <= 1e-12


def test_singular_multiplier_rejects_nonzero_mean(grid2d, rng):
    f = random_field(grid2d, rng, zero_mean=False)
    f.coeffs[0, 0] = 0.7
    with pytest.raises(MeanValueError) as err:
        apply_multiplier(f, "inv_neg_laplacian")
    assert abs(err.value.mean_value - 0.7) < 1e-15
    with pytest.raises(MeanValueError):
        apply_multiplier(f, "lambda_sigma", sigma=-1.0)
    # nonnegative orders are fine with a mean
    apply_multiplier(f, "lambda_sigma", sigma=1.0)


def test_transform_round_trip(rng, grid2d):
    f = random_field(grid2d, rng, zero_mean=False)
    samples = to_physical(f)
    back = to_spectral(grid2d, samples)
    scale = np.max(np.abs(f.coeffs))
    assert np.max(np.abs(back.coeffs - f.coeffs)) <= 1e-12 * max(1.0, scale)


def test_constant_field_physical_samples():
    g = Grid(d=1, n=16)
    f = zero_field(g)
    f.coeffs[0] = 3.25
    assert np.allclose(to_physical(f), 3.25)


def test_real_input_gives_hermitian_output(rng):
    g = Grid(d=2, n=16)
    samples = rng.standard_normal(g.shape)
    f = to_spectral(g, samples)
    assert f.is_hermitian(1e-12)


def test_mode_product_support_matches_convolution():
    g = Grid(d=1, n=32)
    f1, f2 = zero_field(g), zero_field(g)
    f1.coeffs[3] = 2.0
    f1.coeffs[-3] = 2.0
    f2.coeffs[5] = 1.0 - 1.0j
    f2.coeffs[-5] = 1.0 + 1.0j
    prod = to_spectral(g, to_physical(f1) * to_physical(f2))
    expected = convolve_modes(
        {(3,): 2.0, (-3,): 2.0}, {(5,): 1.0 - 1.0j, (-5,): 1.0 + 1.0j}
    )
    for m in range(-g.n // 2, g.n // 2):
        want = expected.get((m,), 0.0)
        assert abs(prod.coeffs[m % g.n] - want) < 1e-13


def test_dealias_rules(rng):
    g = Grid(d=2, n=32)  # keep |m_i| <= 10
    inside = zero_field(g)
    inside.coeffs[4, 5] = 1.0
    assert np.array_equal(dealias_23(inside).coeffs, inside.coeffs)
    outside = zero_field(g)
    outside.coeffs[12, 0] = 1.0
    assert np.all(dealias_23(outside).coeffs == 0.0)
    f = random_field(g, rng)
    once = dealias_23(f)
    twice = dealias_23(once)
    assert np.array_equal(once.coeffs, twice.coeffs)


def test_parseval(rng):
    g = Grid(d=2, n=32, L=5.0)
    f = random_field(g, rng, zero_mean=False)
    phys = to_physical(f)
    lhs = np.sum(np.abs(phys) ** 2) * (g.L / g.n) ** g.d
    rhs = g.L**g.d * np.sum(np.abs(f.coeffs) ** 2)
    assert abs(lhs - rhs) <= 1e-10 * rhs
    assert abs(f.l2_norm() ** 2 - rhs) <= 1e-12 * rhs


def test_derivative_matches_analytic():
    g = Grid(d=1, n=64, L=3.0)
    x = np.arange(g.n) * g.L / g.n
    f = to_spectral(g, np.sin(2 * np.pi * x / g.L))
    df = to_physical(apply_multiplier(f, "grad_j", j=0))
    exact = (2 * np.pi / g.L) * np.cos(2 * np.pi * x / g.L)
    assert np.max(np.abs(df.real - exact)) <= 1e-10


def test_hermitian_closure(rng, grid2d):
    f = random_field(grid2d, rng)
    ops = [
        lambda h: apply_multiplier(h, "grad_j", j=0),
        lambda h: apply_multiplier(h, "laplacian"),
        lambda h: apply_multiplier(h, "inv_neg_laplacian"),
        lambda h: apply_multiplier(h, "lambda_sigma", sigma=0.5),
        dealias_23,
    ]
    for op in ops:
        assert op(f).is_hermitian(1e-12)


def test_nyquist_zeroed_by_derivatives():
    g = Grid(d=1, n=16)
    f = zero_field(g)
    f.coeffs[g.n // 2] = 1.0  # the Nyquist entry
    out = apply_multiplier(f, "grad_j", j=0)
    assert np.all(out.coeffs == 0.0)


def test_lp_norm_single_mode():
    g = Grid(d=2, n=32, L=2.0)
    f = zero_field(g)
    f.coeffs[1, 0] = 0.5  # complex exponential, |f| = 0.5 everywhere
    assert abs(field_lp_norm(f, 4) - 0.5 * g.L ** (2 / 4)) < 1e-12
    assert abs(field_lp_norm(f, np.inf) - 0.5) < 1e-12


def test_state_round_trip_container(tmp_path, rng, grid2d):
    st = State(
        a=random_field(grid2d, rng),
        v=(random_field(grid2d, rng), random_field(grid2d, rng)),
        theta=random_field(grid2d, rng),
        q=(random_field(grid2d, rng), random_field(grid2d, rng)),
        time=1.75,
    )
    path = tmp_path / "state.fld"
    save_state(path, st)
    back = load_state(path)
    assert back.time == 1.75
    assert back.grid == st.grid
    for f1, f2 in zip(st.fields(), back.fields()):
        # complex64 storage: single-precision round trip
        assert np.max(np.abs(f1.coeffs - f2.coeffs)) <= 1e-6 * max(1.0, np.max(np.abs(f1.coeffs)))


def test_state_stacking(grid2d, rng):
    st = zero_state(grid2d)
    arr = st.stacked()
    assert arr.shape == (6,) + grid2d.shape
    st2 = State.from_stacked(grid2d, arr, 0.5, True)
    assert st2.time == 0.5
    assert st2.component_labels() == ["a", "v1", "v2", "theta", "q1", "q2"]


def test_state_grid_mismatch(grid2d):
    other = Grid(d=2, n=16)
    with pytest.raises(ValueError):
        State(a=zero_field(grid2d), v=(zero_field(other), zero_field(other)), theta=zero_field(grid2d))

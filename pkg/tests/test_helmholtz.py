import numpy as np
import pytest

from helmvanka.grid import absorbing_layer, constant_model, no_attenuation, unit_grid
from helmvanka.helmholtz import (
    apply_shift,
    assemble_helmholtz,
    assemble_laplacian,
    assemble_mass,
    laplacian_weights,
    mass_weights,
)
from helmvanka.stencil import StencilOperator, linear_combination, matvec, residual

from conftest import crandn, dense_helmholtz


def _center(op, grid):
    mid = tuple(n // 2 for n in grid.shape)
    return op.diagonal()[mid]


def _coef(op, grid, offset):
    mid = tuple(n // 2 for n in grid.shape)
    return op.coefficient(offset)[mid]


def test_laplacian_2d_weights():
    g = unit_grid(2, (16, 16))
    h = 1 / 16
    L = assemble_laplacian(g)
    assert _center(L, g) == pytest.approx(10 / (3 * h**2))
    assert _coef(L, g, (0, 1)) == pytest.approx(-2 / (3 * h**2))
    assert _coef(L, g, (1, 1)) == pytest.approx(-1 / (6 * h**2))


def test_helmholtz_2d_center():
    g = unit_grid(2, (16, 16))
    h, omega = 1 / 16, 20.0
    H, _ = assemble_helmholtz(g, constant_model(g), omega)
    assert _center(H, g) == pytest.approx(10 / (3 * h**2) - 2 / 3 * omega**2)
    assert _coef(H, g, (-1, 0)) == pytest.approx(-2 / (3 * h**2) - omega**2 / 12)


def test_helmholtz_3d_center():
    g = unit_grid(3, (8, 8, 8))
    h, omega = 1 / 8, 5.0
    H, M = assemble_helmholtz(g, constant_model(g), omega)
    assert _center(H, g) == pytest.approx(4 / h**2 - omega**2 / 2)
    assert _coef(H, g, (0, 0, 1)) == pytest.approx(-1 / (3 * h**2) - omega**2 / 12)
    assert _coef(H, g, (0, 1, 1)) == pytest.approx(-1 / (6 * h**2))
    assert not H.has_offset((1, 1, 1))
    assert _center(M, g) == 0.5


def test_weights_sum():
    for dim in (2, 3):
        assert sum(laplacian_weights(dim, 0.1).values()) == pytest.approx(0.0, abs=1e-10)
        assert sum(mass_weights(dim).values()) == pytest.approx(1.0)


def test_attenuation_sign_matches_shift():
    g = unit_grid(2, (64, 64))
    omega = 30.0
    att = absorbing_layer(g, 20, 1.0)
    H, M = assemble_helmholtz(g, constant_model(g), omega, att)
    Hs = apply_shift(H, M, 0.5, omega)
    d0 = H.diagonal()
    # both the layer and the shift push the diagonal's imaginary part down
    assert d0[32, 0].imag == pytest.approx(-omega**2 * 2 / 3)
    assert d0[32, 32].imag == 0.0
    assert Hs.diagonal()[32, 0].imag < d0[32, 0].imag


def test_out_of_domain_couplings_zero():
    g = unit_grid(2, (6, 6))
    H, M = assemble_helmholtz(g, constant_model(g), 3.0)
    for op in (H, M):
        assert np.all(op.coefficient((0, -1))[:, 0] == 0)
        assert np.all(op.coefficient((1, 1))[-1, :] == 0)
        assert np.all(op.coefficient((1, 1))[:, -1] == 0)


def test_shift_zero_is_identity():
    g = unit_grid(2, (8, 8))
    H, M = assemble_helmholtz(g, constant_model(g), 10.0)
    assert apply_shift(H, M, 0.0, 10.0) is H


def test_shift_center_change():
    g = unit_grid(2, (256, 256))
    omega = 2 * np.pi * 25.6
    H, M = assemble_helmholtz(g, constant_model(g), omega)
    Hs = apply_shift(H, M, 0.3, omega)
    delta = _center(Hs, g) - _center(H, g)
    assert delta.real == 0.0
    assert delta.imag == pytest.approx(-0.3 * omega**2 * 2 / 3)
    assert -delta.imag == pytest.approx(5174.6, abs=0.1)


def test_shift_matches_dense():
    g = unit_grid(2, (6, 6))
    omega, alpha = 7.0, 0.4
    H, M = assemble_helmholtz(g, constant_model(g), omega)
    Hs = apply_shift(H, M, alpha, omega).to_csr().toarray()
    ref = dense_helmholtz(g.shape, 1 / 6, omega**2 * (1 + 1j * alpha))
    assert np.allclose(Hs, ref, rtol=0, atol=1e-12 * np.abs(ref).max())


def test_shift_grid_mismatch():
    g1, g2 = unit_grid(2, (6, 6)), unit_grid(2, (8, 8))
    H, _ = assemble_helmholtz(g1, constant_model(g1), 1.0)
    with pytest.raises(ValueError):
        apply_shift(H, assemble_mass(g2), 0.1, 1.0)


def test_assemble_rejects_foreign_model():
    g1, g2 = unit_grid(2, (6, 6)), unit_grid(2, (8, 8))
    with pytest.raises(ValueError):
        assemble_helmholtz(g1, constant_model(g2), 1.0)
    with pytest.raises(ValueError):
        assemble_helmholtz(g1, constant_model(g1), 0.0)


def test_matvec_zero_and_constant():
    g = unit_grid(2, (10, 10))
    L = assemble_laplacian(g)
    assert np.all(L.matvec(np.zeros(g.shape)) == 0)
    v = L.matvec(np.ones(g.shape, dtype=complex))
    assert np.abs(v[1:-1, 1:-1]).max() < 1e-9


@pytest.mark.parametrize("dim,cells", [(2, (8, 8)), (3, (4, 4, 4))])
def test_matvec_dense_oracle(rng, dim, cells):
    g = unit_grid(dim, cells)
    k2 = rng.uniform(0.3, 1.0, g.shape)
    from helmvanka.grid import SlownessModel

    omega = 9.0
    H, _ = assemble_helmholtz(g, SlownessModel(g, k2), omega)
    ref = dense_helmholtz(g.shape, 1 / cells[0], k2 * omega**2)
    u = crandn(rng, g.shape)
    v = matvec(H, u)
    expect = (ref @ u.ravel()).reshape(g.shape)
    assert np.linalg.norm(v - expect) <= 1e-13 * np.linalg.norm(expect)
    assert np.allclose(H.to_csr().toarray(), ref, rtol=0, atol=1e-12 * np.abs(ref).max())


def test_residual_properties(rng):
    g = unit_grid(2, (8, 8))
    H, _ = assemble_helmholtz(g, constant_model(g), 6.0, no_attenuation(g))
    q = crandn(rng, g.shape)
    assert np.array_equal(residual(H, np.zeros(g.shape), q), q)
    u = np.linalg.solve(H.to_csr().toarray(), q.ravel()).reshape(g.shape)
    assert np.linalg.norm(residual(H, u, q)) <= 1e-10 * np.linalg.norm(q)
    u1, u2 = crandn(rng, g.shape), crandn(rng, g.shape)
    lhs = residual(H, u1 + u2, q)
    rhs = residual(H, u1, q) - H.matvec(u2)
    assert np.linalg.norm(lhs - rhs) <= 1e-13 * np.linalg.norm(lhs)


def test_matvec_grid_mismatch():
    g = unit_grid(2, (8, 8))
    L = assemble_laplacian(g)
    with pytest.raises(ValueError):
        matvec(L, np.zeros(10))
    with pytest.raises(ValueError):
        residual(L, np.zeros(g.shape), np.zeros(5))


@pytest.mark.parametrize("dim,cells", [(2, (6, 6)), (3, (4, 4, 4))])
def test_symmetric_without_abc(dim, cells):
    g = unit_grid(dim, cells)
    H, _ = assemble_helmholtz(g, constant_model(g, 0.7), 11.0)
    A = H.to_csr().toarray()
    assert np.array_equal(A, A.T)


def test_mass_of_constant():
    g = unit_grid(3, (6, 6, 6))
    v = assemble_mass(g).matvec(np.full(g.shape, 2.5 + 0j))
    assert np.allclose(v[1:-1, 1:-1, 1:-1], 2.5)


def _manufactured_error(n, dim=2):
    """Max interior error of ``L u - M(-Lap u)`` for a product of sines."""
    g = unit_grid(dim, (n,) * dim)
    axes = np.meshgrid(*[np.linspace(0, 1, n + 1)] * dim, indexing="ij")
    u = np.prod([np.sin(np.pi * a + 0.3) for a in axes], axis=0)
    f = dim * np.pi**2 * u
    Lu = assemble_laplacian(g).matvec(u.astype(complex))
    Mf = assemble_mass(g).matvec(f.astype(complex))
    inner = (slice(1, -1),) * dim
    return np.abs(Lu - Mf)[inner].max()


def test_fourth_order_consistency_3d():
    e = [_manufactured_error(n, 3) for n in (8, 16)]
    assert np.log2(e[0] / e[1]) > 3.7


def test_linear_combination_union_of_offsets():
    g = unit_grid(2, (4, 4))
    A = StencilOperator(g, [(0, 0)], np.ones((1,) + g.shape))
    B = StencilOperator(g, [(0, 1)], np.ones((1,) + g.shape))
    C = linear_combination(2.0, A, 3.0, B)
    assert C.has_offset((0, 0)) and C.has_offset((0, 1))
    assert np.all(C.coefficient((0, 1)) == 3.0)
    with pytest.raises(ValueError):
        linear_combination(1.0, A, 1.0, StencilOperator(unit_grid(2, (2, 2)), [(0, 0)], np.ones((1, 3, 3))))

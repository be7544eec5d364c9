import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helmvanka.grid import constant_model, unit_grid
from helmvanka.helmholtz import apply_shift, assemble_helmholtz
from helmvanka.lfa import sigma_for_ppw, smoothing_factor
from helmvanka.smoothers import (
    PATCH_KINDS,
    SingularPatchError,
    apply_vanka,
    build_patches,
    factor_patches,
    local_matrices,
    patch_size,
    smoother_flops,
)
from helmvanka.stencil import StencilOperator

from conftest import PATCH_CATALOG, crandn, dense_helmholtz, dense_patches, dense_smoother


def _shifted(cells, omega=None, alpha=0.5):
    g = unit_grid(len(cells), cells)
    h = 1 / max(cells)
    omega = 2 * np.pi / (10 * h) if omega is None else omega
    H, M = assemble_helmholtz(g, constant_model(g), omega)
    return g, apply_shift(H, M, alpha, omega)


@pytest.mark.parametrize(
    "kind,sizes", [("jacobi", (1, 1)), ("element", (4, 8)), ("plus", (5, 7)), ("rb", (5, 13)), ("full", (9, 27))]
)
def test_patch_sizes(kind, sizes):
    assert (patch_size(kind, 2), patch_size(kind, 3)) == sizes
    for dim in (2, 3):
        assert sorted(map(tuple, build_patches(unit_grid(dim, (4,) * dim), kind).offsets)) == sorted(
            PATCH_CATALOG[dim][kind]
        )


def test_unknown_kind():
    with pytest.raises(ValueError):
        build_patches(unit_grid(2, (4, 4)), "diamond")


def test_boundary_patch_shapes():
    g = unit_grid(2, (8, 8))
    plus = dict(build_patches(g, "plus").patches())
    assert len(plus[(0, 0)]) == 3
    assert len(plus[(0, 4)]) == 4
    assert len(plus[(4, 4)]) == 5
    rb = dict(build_patches(g, "rb").patches())
    assert len(rb[(0, 4)]) == 3
    assert len(rb[(0, 0)]) == 2
    el = build_patches(g, "element")
    assert el.n_patches == 64
    assert all(len(m) == 4 for _, m in el.patches())


def test_interior_weights():
    g = unit_grid(2, (8, 8))
    ps = build_patches(g, "plus")
    assert ps.counts[4, 4] == 5
    assert ps.weights[4, 4] == pytest.approx(1 / 5)
    assert ps.counts[0, 0] == 3
    ps = build_patches(unit_grid(3, (6, 6, 6)), "rb")
    assert ps.counts[3, 3, 3] == 13


@settings(max_examples=25, deadline=None)
@given(
    kind=st.sampled_from(PATCH_KINDS),
    dim=st.sampled_from([2, 3]),
    cells=st.lists(st.integers(4, 9), min_size=3, max_size=3),
)
def test_partition_of_unity(kind, dim, cells):
    g = unit_grid(dim, cells[:dim])
    ps = build_patches(g, kind)
    acc = np.zeros(g.size)
    for anchor, members in ps.patches():
        acc[members] += ps.weights.ravel()[members]
    assert np.abs(acc - 1).max() <= 1e-14
    # every node is covered
    assert ps.counts.min() >= 1


def test_grid_too_small():
    with pytest.raises(ValueError):
        build_patches(unit_grid(2, (1, 4)), "plus")


def test_jacobi_local_matrix():
    g, A = _shifted((8, 8))
    Hloc = local_matrices(A, build_patches(g, "jacobi"))
    assert Hloc.shape == g.shape + (1, 1)
    assert np.array_equal(Hloc[..., 0, 0], A.diagonal())


def test_element_local_matrix():
    g, A = _shifted((8, 8))
    Hloc = local_matrices(A, build_patches(g, "element"))[3, 3]
    a, b, c = A.diagonal()[4, 4], A.coefficient((0, 1))[4, 4], A.coefficient((1, 1))[4, 4]
    # members (0,0), (0,1), (1,0), (1,1): corners of one cell
    ref = np.array([[a, b, b, c], [b, a, c, b], [b, c, a, b], [c, b, b, a]])
    assert np.allclose(Hloc, ref, rtol=1e-14)


def test_rb_local_matrix():
    g, A = _shifted((8, 8))
    ps = build_patches(g, "rb")
    Hloc = local_matrices(A, ps)[4, 4]
    center = [tuple(o) for o in ps.offsets].index((0, 0))
    a, c = A.diagonal()[4, 4], A.coefficient((1, 1))[4, 4]
    off = Hloc - np.diag(np.diag(Hloc))
    others = [i for i in range(5) if i != center]
    assert np.allclose(np.diag(Hloc), a)
    assert np.allclose(off[center, others], c)
    assert np.allclose(off[np.ix_(others, others)], 0)


@pytest.mark.parametrize("kind", PATCH_KINDS)
def test_vanka_dense_oracle_2d(rng, kind):
    g, A = _shifted((8, 8))
    w = 0.8
    S = dense_smoother(A.to_csr().toarray(), dense_patches(g.shape, kind), w)
    vps = factor_patches(A, build_patches(g, kind), w)
    u, q = crandn(rng, g.shape), crandn(rng, g.shape)
    ustar = np.linalg.solve(A.to_csr().toarray(), q.ravel())
    got = apply_vanka(vps, A, u, q).ravel()
    expect = ustar + S @ (u.ravel() - ustar)
    assert np.linalg.norm(got - expect) <= 1e-12 * np.linalg.norm(expect)


@pytest.mark.parametrize("kind", ["element", "plus"])
def test_vanka_dense_oracle_3d(rng, kind):
    g, A = _shifted((4, 4, 4))
    w = 0.7
    S = dense_smoother(A.to_csr().toarray(), dense_patches(g.shape, kind), w)
    vps = factor_patches(A, build_patches(g, kind), w)
    e = crandn(rng, g.shape)
    got = apply_vanka(vps, A, e, np.zeros(g.shape)).ravel()
    assert np.linalg.norm(got - S @ e.ravel()) <= 1e-12 * np.linalg.norm(got)


def test_vanka_fixed_point(rng):
    g, A = _shifted((8, 8))
    u = crandn(rng, g.shape)
    q = A.matvec(u)
    vps = factor_patches(A, build_patches(g, "rb"), 0.9)
    assert np.linalg.norm(apply_vanka(vps, A, u, q) - u) <= 1e-12 * np.linalg.norm(u)


def test_jacobi_is_damped_jacobi(rng):
    g, A = _shifted((16, 16))
    w = 0.6
    u, q = crandn(rng, g.shape), crandn(rng, g.shape)
    r = q - (A.to_csr() @ u.ravel()).reshape(g.shape)
    expect = u + w * r / A.diagonal()
    got = apply_vanka(factor_patches(A, build_patches(g, "jacobi"), w), A, u, q)
    assert np.abs(got - expect).max() <= 1e-14 * np.abs(expect).max()


def test_local_inverses_kept_for_small_grids():
    g, A = _shifted((8, 8))
    vps = factor_patches(A, build_patches(g, "plus"))
    assert vps.local_inverses.shape == g.shape + (5, 5)
    vps = factor_patches(A, build_patches(g, "plus"), keep_local=10)
    assert vps.local_inverses is None


def test_with_damping_shares_update():
    g, A = _shifted((8, 8))
    vps = factor_patches(A, build_patches(g, "rb"), 0.5)
    other = vps.with_damping(0.9)
    assert other.damping == 0.9 and other.update is vps.update


def test_singular_patch_names_center():
    g = unit_grid(2, (6, 6))
    coeffs = np.ones((1,) + g.shape, dtype=complex)
    coeffs[0][2, 3] = 0.0
    A = StencilOperator(g, [(0, 0)], coeffs)
    with pytest.raises(SingularPatchError) as info:
        factor_patches(A, build_patches(g, "jacobi"))
    assert info.value.center == (2, 3)
    assert "(3, 2)" in str(info.value)


def test_foreign_grid():
    g, A = _shifted((8, 8))
    with pytest.raises(ValueError):
        factor_patches(A, build_patches(unit_grid(2, (4, 4)), "plus"))
    vps = factor_patches(A, build_patches(g, "plus"))
    _, B = _shifted((16, 16))
    with pytest.raises(ValueError):
        apply_vanka(vps, B, np.zeros(B.shape), np.zeros(B.shape))


def test_smoother_flops():
    assert smoother_flops("jacobi", 1).total == 10
    assert smoother_flops("rb", 1).total == 34
    assert smoother_flops("jacobi", 2).residual == 25
    assert smoother_flops("element", 1, dim=3, stencil_points=19).total == 19 + 64


def test_smoothing_reduces_high_frequencies(rng):
    """One sweep damps the upper half of the spectrum close to the LFA factor."""
    h = 1 / 64
    sigma = sigma_for_ppw(h)
    # periodic 16x16 problem at the spacing of a 64^2 grid, random error
    # restricted to the high half of the discrete spectrum
    shape = (16, 16)
    A = dense_helmholtz(shape, h, sigma * (1 + 0.0j), periodic=True)
    w = 0.83
    S = dense_smoother(A, dense_patches(shape, "rb", periodic=True), w)
    e = crandn(rng, shape)
    E = np.fft.fft2(e)
    k = np.fft.fftfreq(16) * 2 * np.pi
    k1, k2 = np.meshgrid(k, k, indexing="xy")
    high = (np.abs(k1) >= np.pi / 2) | (np.abs(k2) >= np.pi / 2)
    E[~high] = 0
    e_high = np.fft.ifft2(E)
    after = (S @ e_high.ravel()).reshape(shape)
    Ea = np.fft.fft2(after)
    ratio = np.sqrt((np.abs(Ea[high]) ** 2).sum() / (np.abs(E[high]) ** 2).sum())
    assert ratio <= smoothing_factor("rb", w, h, sigma) + 0.05

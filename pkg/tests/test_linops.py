import numpy as np
import pytest

from ligme.linops import (
    DenseOperator,
    Identity,
    ZeroOperator,
    make_blur,
    make_diff_1d,
    make_diff_2d,
    make_mask,
    op_norm,
    vstack,
)


def all_kinds(n=12):
    """One instance of every operator kind, at probe-friendly sizes."""
    rng = np.random.default_rng(0)
    side = 4
    return [
        DenseOperator(rng.standard_normal((7, n))),
        Identity(n),
        ZeroOperator(5, n),
        make_diff_1d(n),
        *make_diff_2d(side),
        make_blur(side),
        make_mask(n, {1, 4, 7}),
        vstack([make_diff_1d(n), Identity(n)]),
    ]


def test_diff1d_examples():
    d = make_diff_1d(4)
    assert np.allclose(d.apply([3.0, 3.0, 3.0, 3.0]), 0.0)
    d3 = make_diff_1d(3)
    assert np.allclose(d3.apply([0.0, 1.0, 3.0]), [1.0, 2.0])


def test_identity_roundtrip():
    ident = Identity(3)
    x = np.array([1.0, 2.0, 3.0])
    assert np.array_equal(ident.apply(x), x)
    assert np.array_equal(ident.adjoint_apply(x), x)


def test_mask_selects_kept_entries():
    m = make_mask(4, {1, 3})
    out = m.apply([1.0, 2.0, 3.0, 4.0])
    assert np.array_equal(out, [1.0, 0.0, 3.0, 0.0])
    # diagonal 0/1 matrix is its own adjoint
    assert np.array_equal(m.adjoint_apply(out), m.apply(out))


def test_mask_bounds_checked():
    with pytest.raises(ValueError):
        make_mask(4, {0, 2})
    with pytest.raises(ValueError):
        make_mask(4, {5})


def test_adjoint_identity_all_kinds():
    rng = np.random.default_rng(1)
    for op in all_kinds():
        for _ in range(100):
            x = rng.standard_normal(op.cols)
            y = rng.standard_normal(op.rows)
            lhs = float(op.apply(x) @ y)
            rhs = float(x @ op.adjoint_apply(y))
            assert abs(lhs - rhs) <= 1e-10 * (1.0 + abs(lhs))


def test_structured_matches_dense():
    rng = np.random.default_rng(2)
    for op in all_kinds():
        dense = op.to_dense()
        assert dense.shape == (op.rows, op.cols)
        for _ in range(20):
            x = rng.standard_normal(op.cols)
            assert np.allclose(op.apply(x), dense @ x, atol=1e-12)
            y = rng.standard_normal(op.rows)
            assert np.allclose(op.adjoint_apply(y), dense.T @ y, atol=1e-12)


def test_dimension_mismatch_raises():
    d = make_diff_1d(5)
    with pytest.raises(ValueError):
        d.apply(np.zeros(4))
    with pytest.raises(ValueError):
        d.adjoint_apply(np.zeros(5))


def test_op_norm_identity_and_diag():
    assert op_norm(Identity(7)) == pytest.approx(1.0, rel=1e-9)
    diag = DenseOperator(np.diag([3.0, -5.0]))
    assert op_norm(diag) == pytest.approx(5.0, rel=1e-8)


def test_op_norm_zero_operator():
    assert op_norm(ZeroOperator(4, 6)) == 0.0


@pytest.mark.parametrize("n", [4, 8, 16, 32])
def test_op_norm_difference_matches_svd_oracle(n):
    d = make_diff_1d(n)
    oracle = np.linalg.svd(d.to_dense(), compute_uv=False)[0]
    assert oracle == pytest.approx(2.0 * np.sin((n - 1) * np.pi / (2 * n)), rel=1e-12)
    assert op_norm(d) == pytest.approx(oracle, rel=1e-7)


def test_op_norm_never_below_rayleigh_probe():
    rng = np.random.default_rng(3)
    op = DenseOperator(rng.standard_normal((9, 13)))
    bound = op_norm(op)
    for _ in range(50):
        x = rng.standard_normal(13)
        assert np.linalg.norm(op.apply(x)) / np.linalg.norm(x) <= bound * (1 + 1e-8)


def test_vstack_shapes_and_adjoint_slices():
    rng = np.random.default_rng(4)
    children = [make_diff_1d(10), Identity(10), DenseOperator(rng.standard_normal((3, 10)))]
    stacked = vstack(children)
    assert stacked.rows == 9 + 10 + 3 and stacked.cols == 10
    y = rng.standard_normal(stacked.rows)
    pieces = np.split(y, np.cumsum([c.rows for c in children])[:-1])
    expected = sum(c.adjoint_apply(p) for c, p in zip(children, pieces))
    assert np.allclose(stacked.adjoint_apply(y), expected, atol=1e-12)
    with pytest.raises(ValueError):
        vstack([make_diff_1d(4), Identity(5)])


def test_diff_2d_shapes_and_constant_image():
    n = 5
    dv, dh = make_diff_2d(n)
    assert dv.shape == (n * (n - 1), n * n) == dh.shape
    const = np.full(n * n, 2.5)
    assert np.allclose(dv.apply(const), 0.0)
    assert np.allclose(dh.apply(const), 0.0)


def test_kronecker_nonsquare_factors():
    from ligme.linops import KroneckerProduct

    rng = np.random.default_rng(5)
    left = rng.standard_normal((3, 2))
    right = rng.standard_normal((2, 4))
    op = KroneckerProduct(left, right)
    assert op.shape == (6, 8)
    dense = np.kron(left, right)
    x = rng.standard_normal(8)
    y = rng.standard_normal(6)
    assert np.allclose(op.apply(x), dense @ x, atol=1e-12)
    assert np.allclose(op.adjoint_apply(y), dense.T @ y, atol=1e-12)


def test_blur_condition_number():
    a = make_blur(16)
    cond = np.linalg.cond(a.to_dense())
    assert cond == pytest.approx(593.0, rel=0.01)


def test_factory_validation():
    with pytest.raises(ValueError):
        make_diff_1d(1)
    with pytest.raises(ValueError):
        make_blur(1)

import numpy as np
import pytest
from oracles import naive_depthwise_conv

from tsrkit.kernels import (
    DeformableParams,
    SeparableParams,
    SpatialAttentionParams,
    conv2d_depthwise,
    conv2d_depthwise_vjp,
    deformable_conv_forward,
    grad_check,
    multiply,
    multiply_vjp,
    pointwise_projection,
    pointwise_projection_vjp,
    separable_pair,
    separable_pair_vjp,
    spatial_attention_forward,
)
from tsrkit.kernels_selftest import (
    composite_attention_arrays,
    composite_attention_forward,
    composite_attention_vjp,
)


def rng(seed=0):
    return np.random.default_rng(seed)


# ------------------------------------------------------------ depthwise conv

def test_conv_identity_kernel():
    x = rng(1).standard_normal((3, 8, 8))
    kernel = np.zeros((3, 3, 3))
    kernel[:, 1, 1] = 1.0
    np.testing.assert_array_equal(conv2d_depthwise(x, kernel), x)


def test_conv_box_kernel_interior():
    x = np.ones((1, 6, 6))
    kernel = np.ones((1, 3, 3))
    out = conv2d_depthwise(x, kernel)
    np.testing.assert_allclose(out[0, 1:-1, 1:-1], 9.0)
    assert out[0, 0, 0] == 4.0  # corner sees a 2x2 window


def test_conv_matches_naive_loops():
    x = rng(2).standard_normal((1, 5, 5))
    kernel = rng(3).standard_normal((1, 3, 3))
    np.testing.assert_allclose(
        conv2d_depthwise(x, kernel), naive_depthwise_conv(x, kernel), atol=1e-12
    )


def test_conv_matches_naive_loops_rectangular():
    x = rng(4).standard_normal((2, 7, 4))
    kernel = rng(5).standard_normal((2, 5, 3))
    np.testing.assert_allclose(
        conv2d_depthwise(x, kernel), naive_depthwise_conv(x, kernel), atol=1e-12
    )


def test_conv_rejects_even_kernel():
    x = np.zeros((1, 4, 4))
    with pytest.raises(ValueError):
        conv2d_depthwise(x, np.zeros((1, 2, 3)))


def test_conv_rejects_nonfinite():
    x = np.full((1, 4, 4), np.nan)
    with pytest.raises(ValueError):
        conv2d_depthwise(x, np.zeros((1, 3, 3)))


def test_conv_linearity():
    g = rng(6)
    x, y = g.standard_normal((2, 2, 6, 6))
    kernel = g.standard_normal((2, 3, 3))
    lhs = conv2d_depthwise(2.5 * x - 0.5 * y, kernel)
    rhs = 2.5 * conv2d_depthwise(x, kernel) - 0.5 * conv2d_depthwise(y, kernel)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)


# ------------------------------------------------------------ separable pair

def test_separable_identity():
    x = rng(7).standard_normal((2, 8, 8))
    u = np.zeros((2, 7))
    v = np.zeros((2, 7))
    u[:, 3] = 1.0
    v[:, 3] = 1.0
    np.testing.assert_array_equal(separable_pair(x, SeparableParams(u, v)), x)


def test_separable_zero_kernels():
    x = rng(8).standard_normal((2, 8, 8))
    params = SeparableParams(np.zeros((2, 11)), np.zeros((2, 11)))
    np.testing.assert_array_equal(separable_pair(x, params), np.zeros_like(x))


@pytest.mark.parametrize("k", [7, 11, 21])
def test_separable_equals_rank1_full_kernel(k):
    g = rng(k)
    x = g.standard_normal((2, 16, 16))
    params = SeparableParams(g.standard_normal((2, k)), g.standard_normal((2, k)))
    full = np.einsum("ci,cj->cij", params.vertical, params.horizontal)
    np.testing.assert_allclose(
        separable_pair(x, params), conv2d_depthwise(x, full), atol=1e-9
    )


# ---------------------------------------------------------- spatial attention

def test_attention_preserves_shape():
    for shape in ((1, 8, 8), (2, 12, 7), (4, 5, 16), (8, 3, 3)):
        params = SpatialAttentionParams.random(shape[0], seed=41)
        x = rng(42).standard_normal(shape)
        assert spatial_attention_forward(x, params).shape == shape


def test_attention_zero_input():
    params = SpatialAttentionParams.random(2, seed=9)
    out = spatial_attention_forward(np.zeros((2, 6, 6)), params)
    np.testing.assert_array_equal(out, np.zeros((2, 6, 6)))


def test_attention_channel_mismatch():
    params = SpatialAttentionParams.random(2, seed=9)
    with pytest.raises(ValueError):
        spatial_attention_forward(np.zeros((3, 6, 6)), params)


def test_attention_matches_primitive_composition():
    params = SpatialAttentionParams.random(2, seed=10)
    x = rng(11).standard_normal((2, 8, 8))
    stacked = np.concatenate(
        [separable_pair(x, p) for p in params.branches], axis=0
    )
    expected = multiply(pointwise_projection(stacked, params.projection), x)
    np.testing.assert_allclose(
        spatial_attention_forward(x, params), expected, atol=1e-12
    )


def test_projection_invalid_shapes():
    with pytest.raises(ValueError):
        pointwise_projection(np.zeros((4, 3, 3)), np.zeros((2, 5)))
    with pytest.raises(ValueError):
        SpatialAttentionParams(
            branch7=SeparableParams(np.zeros((2, 7)), np.zeros((2, 7))),
            branch11=SeparableParams(np.zeros((2, 11)), np.zeros((2, 11))),
            branch21=SeparableParams(np.zeros((2, 21)), np.zeros((2, 21))),
            projection=np.zeros((2, 5)),
        )


# ------------------------------------------------------------ deformable conv

def zero_offsets(k, h, w):
    return np.zeros((2 * k * k, h, w))


def test_deformable_zero_offsets_equals_conv():
    g = rng(12)
    x = g.standard_normal((3, 9, 9))
    weights = g.standard_normal((3, 3, 3))
    out = deformable_conv_forward(x, DeformableParams(weights, zero_offsets(3, 9, 9)))
    np.testing.assert_allclose(out, conv2d_depthwise(x, weights), atol=1e-12)


def test_deformable_uniform_column_shift():
    g = rng(13)
    x = g.standard_normal((2, 6, 8))
    weights = g.standard_normal((2, 3, 3))
    offsets = zero_offsets(3, 6, 8)
    offsets[1::2] = 1.0
    out = deformable_conv_forward(x, DeformableParams(weights, offsets))
    widened = np.concatenate([x, np.zeros((2, 6, 1))], axis=2)
    expected = conv2d_depthwise(widened, weights)[:, :, 1:]
    np.testing.assert_allclose(out, expected, atol=1e-12)


def test_deformable_fractional_offset_on_ramp():
    # ramp image: value equals the column index, so sampling at +0.5 columns
    # reads the exact midpoint everywhere the stencil stays inside
    h, w = 5, 7
    x = np.tile(np.arange(w, dtype=float), (h, 1))[None]
    weights = np.zeros((1, 3, 3))
    weights[0, 1, 1] = 1.0  # center tap only
    offsets = zero_offsets(3, h, w)
    offsets[9] = 0.5  # tap 4 (center) dx channel is 2*4+1
    out = deformable_conv_forward(x, DeformableParams(weights, offsets))
    np.testing.assert_allclose(out[0, :, : w - 1], x[0, :, : w - 1] + 0.5, atol=1e-12)
    # last column samples half inside, half outside (reads zero)
    np.testing.assert_allclose(out[0, :, w - 1], (w - 1) / 2.0, atol=1e-12)


def test_deformable_integer_sampling_is_exact():
    g = rng(14)
    x = g.standard_normal((1, 6, 6))
    weights = np.zeros((1, 3, 3))
    weights[0, 1, 1] = 1.0
    offsets = zero_offsets(3, 6, 6)
    offsets[8] = 2.0  # dy of the center tap
    out = deformable_conv_forward(x, DeformableParams(weights, offsets))
    np.testing.assert_array_equal(out[0, :4], x[0, 2:])
    np.testing.assert_array_equal(out[0, 4:], 0.0)


def test_deformable_shape_validation():
    x = np.zeros((1, 4, 4))
    with pytest.raises(ValueError):
        deformable_conv_forward(x, DeformableParams(np.zeros((1, 3, 3)), np.zeros((18, 3, 4))))
    with pytest.raises(ValueError):
        DeformableParams(np.zeros((1, 2, 2)), np.zeros((8, 4, 4)))
    bad_offsets = np.full((18, 4, 4), np.inf)
    with pytest.raises(ValueError):
        deformable_conv_forward(x, DeformableParams(np.zeros((1, 3, 3)), bad_offsets))


# ------------------------------------------------------------- grad checking

def test_grad_conv2d_depthwise():
    g = rng(15)
    x = g.standard_normal((2, 6, 6))
    kernel = g.standard_normal((2, 3, 3))
    err = grad_check(
        conv2d_depthwise, [x, kernel], lambda x_, k_, co: conv2d_depthwise_vjp(x_, k_, co)
    )
    assert err <= 1e-7


def test_grad_separable_pair():
    g = rng(16)
    x = g.standard_normal((2, 8, 8))
    params = SeparableParams(g.standard_normal((2, 7)), g.standard_normal((2, 7)))

    def forward(x_, u, v):
        return separable_pair(x_, SeparableParams(u, v))

    def vjp(x_, u, v, co):
        return separable_pair_vjp(x_, SeparableParams(u, v), co)

    err = grad_check(forward, [x, params.vertical, params.horizontal], vjp)
    assert err <= 1e-7


def test_grad_pointwise_projection_linear():
    g = rng(17)
    x = g.standard_normal((6, 5, 5))
    weights = g.standard_normal((2, 6))
    err = grad_check(
        pointwise_projection,
        [x, weights],
        lambda x_, w_, co: pointwise_projection_vjp(x_, w_, co),
        epsilon=1e-5,
    )
    assert err <= 1e-7


def test_grad_multiply():
    g = rng(18)
    a = g.standard_normal((2, 5, 5))
    b = g.standard_normal((2, 5, 5))
    err = grad_check(multiply, [a, b], lambda a_, b_, co: multiply_vjp(a_, b_, co))
    assert err <= 1e-7


def test_grad_attention_composite():
    g = rng(19)
    x = g.standard_normal((2, 6, 6))
    params = SpatialAttentionParams.random(2, seed=19)
    err = grad_check(
        composite_attention_forward,
        [x, *composite_attention_arrays(params)],
        composite_attention_vjp,
        epsilon=1e-5,
    )
    assert err <= 1e-4


def test_grad_zero_everything():
    x = np.zeros((1, 4, 4))
    kernel = np.zeros((1, 3, 3))
    cotangent_catcher = {}

    def vjp(x_, k_, co):
        cotangent_catcher["grads"] = conv2d_depthwise_vjp(x_, k_, co)
        return cotangent_catcher["grads"]

    err = grad_check(conv2d_depthwise, [x, kernel], vjp)
    assert err == 0.0
    d_x, d_kernel = cotangent_catcher["grads"]
    np.testing.assert_array_equal(d_x, 0.0)
    np.testing.assert_array_equal(d_kernel, 0.0)


def test_grad_check_reports_nonfinite():
    def forward(x):
        return x

    def vjp(x, co):
        return [np.full_like(x, np.nan)]

    with pytest.raises(ArithmeticError):
        grad_check(forward, [np.ones((1, 2, 2))], vjp)

import numpy as np
import pytest

from exceptions import ConfigError, DimensionError, UnsupportedConfigurationError
from lgl import (
    LglBlockParams,
    LglConfig,
    block_parameter_shapes,
    cpe,
    ffn,
    global_branch,
    global_sparse_attn,
    lgl_block,
    local_agg,
    local_prop,
    sample_delegates,
)
from lgl.params import FfnParams, LocalAggParams, LocalPropParams
from models.schemas import Propagation, Sampler
from nn import AttnParams, Conv2dParams, LinearParams, mhsa
from services.weight_store import WeightStore
from tensor import Tensor
from tensor.core import zeros
from tensor.ops import pad2d, reshape


def _t(arr) -> Tensor:
    return Tensor.from_numpy(np.asarray(arr, dtype=np.float32))


def random_block(cfg: LglConfig, rng, zero_branches: bool = False) -> LglBlockParams:
    store = WeightStore()
    for name, spec in block_parameter_shapes(cfg, "b").items():
        if spec.kind == "gamma":
            data = np.ones(spec.shape)
        elif zero_branches or spec.kind == "beta":
            data = np.zeros(spec.shape)
        else:
            data = rng.uniform(-1, 1, spec.shape) / np.sqrt(spec.fan_in)
        store.add(name, _t(data))
    return LglBlockParams.from_store(store, "b", cfg)


def random_attn(rng, c, heads) -> AttnParams:
    ws = [_t(rng.standard_normal((c, c)) / np.sqrt(c)) for _ in range(4)]
    bs = [_t(rng.standard_normal(c) * 0.1) for _ in range(4)]
    return AttnParams(*ws, heads=heads, bq=bs[0], bk=bs[1], bv=bs[2], bo=bs[3])


RAMP = _t(np.arange(16).reshape(1, 4, 4, 1))


@pytest.mark.parametrize(
    "sampler,expected",
    [
        (Sampler.CENTER, [[0, 2], [8, 10]]),
        (Sampler.AVG, [[2.5, 4.5], [10.5, 12.5]]),
        (Sampler.MAX, [[5, 7], [13, 15]]),
    ],
)
def test_samplers_on_ramp(sampler, expected):
    d = sample_delegates(RAMP, 2, sampler)
    np.testing.assert_array_equal(d.data[0, :, :, 0], expected)


def test_center_offset_for_r4_is_one():
    d = sample_delegates(RAMP, 4, Sampler.CENTER)
    assert d.shape == (1, 1, 1, 1)
    assert d.data[0, 0, 0, 0] == 5.0


@pytest.mark.parametrize("sampler", list(Sampler))
def test_r1_sampling_is_identity(sampler, make_tensor):
    x = make_tensor(1, 3, 5, 2)
    assert sample_delegates(x, 1, sampler) is x


def test_samplers_agree_on_constant_input():
    x = _t(np.full((1, 6, 6, 3), 2.25))
    grids = [sample_delegates(x, 2, s) for s in Sampler]
    assert grids[0] == grids[1] == grids[2]


def test_sample_rate_must_be_positive(make_tensor):
    with pytest.raises(ConfigError):
        sample_delegates(make_tensor(1, 2, 2, 1), 0)


def test_non_divisible_grid_is_padded_bottom_right(make_tensor):
    x = make_tensor(1, 5, 3, 2)
    d = sample_delegates(x, 2, Sampler.MAX)
    assert d.shape == (1, 3, 2, 2)


def test_cpe_with_zero_kernel_is_identity(make_tensor):
    x = make_tensor(1, 5, 5, 4)
    p = Conv2dParams(weight=zeros((3, 3, 1, 4)), bias=zeros((4,)), padding=(1, 1), groups=4)
    assert cpe(x, p) == x


def test_local_agg_identity_weights(make_tensor):
    c = 3
    eye = _t(np.eye(c).reshape(1, 1, c, c))
    delta = np.zeros((3, 3, 1, c))
    delta[1, 1] = 1.0
    p = LocalAggParams(
        pw1=Conv2dParams(weight=eye),
        dw=Conv2dParams(weight=_t(delta), padding=(1, 1), groups=c),
        pw2=Conv2dParams(weight=eye),
    )
    x = make_tensor(1, 4, 4, c)
    np.testing.assert_allclose(local_agg(x, p).data, x.data, atol=1e-6)


def test_ffn_with_zero_second_layer_outputs_zero(make_tensor):
    p = FfnParams(
        fc1=LinearParams(weight=make_tensor(4, 16), bias=make_tensor(16)),
        fc2=LinearParams(weight=zeros((16, 4)), bias=zeros((4,))),
    )
    assert ffn(make_tensor(1, 6, 4), p) == zeros((1, 6, 4))


def test_transposed_propagation_example():
    cfg = LglConfig.create(channels=1, sample_rate=2)
    prop = LocalPropParams(weight=_t(np.array([[1, 2], [3, 4]]).reshape(2, 2, 1)))
    out = local_prop(_t([[[[3.0]]]]), cfg, prop)
    np.testing.assert_array_equal(out.data[0, :, :, 0], [[3, 6], [9, 12]])


def test_r1_unit_kernel_propagation_is_identity(make_tensor):
    cfg = LglConfig.create(channels=2, sample_rate=1)
    d = make_tensor(1, 3, 3, 2)
    assert local_prop(d, cfg, LocalPropParams(weight=_t(np.ones((1, 1, 2))))) == d


def test_bilinear_propagation_of_constant_grid():
    cfg = LglConfig.create(channels=2, sample_rate=2, propagation=Propagation.BILINEAR)
    out = local_prop(_t(np.full((1, 3, 3, 2), 1.25)), cfg, out_hw=(5, 6))
    assert out.shape == (1, 5, 6, 2)
    assert np.all(out.data == np.float32(1.25))


def test_propagation_none_is_rejected_for_sparse_attention():
    with pytest.raises(ConfigError):
        LglConfig.create(channels=4, propagation=Propagation.NONE)


def test_propagation_none_cannot_upsample(make_tensor):
    cfg = LglConfig.create(channels=2, sample_rate=2, propagation="none", attn_mode="kv_downsampled")
    with pytest.raises(UnsupportedConfigurationError):
        local_prop(make_tensor(1, 2, 2, 2), cfg)


def test_heads_must_divide_channels():
    with pytest.raises(ConfigError, match="heads"):
        LglConfig.create(channels=36, heads=5)


def test_even_local_kernel_is_rejected():
    with pytest.raises(ConfigError, match="odd"):
        LglConfig.create(channels=4, local_kernel=4)


def test_r1_sparse_attention_equals_full_mhsa(rng):
    for _ in range(200):
        heads = int(rng.choice([1, 2, 4]))
        c = heads * int(rng.integers(1, 9))
        h, w = (int(v) for v in rng.integers(1, 9, size=2))
        cfg = LglConfig.create(channels=c, heads=heads, sample_rate=1)
        p = random_attn(rng, c, heads)
        x = _t(rng.standard_normal((1, h, w, c)))
        got = global_sparse_attn(x, cfg, p)
        want = reshape(mhsa(reshape(x, (1, h * w, c)), p), (1, h, w, c))
        assert np.max(np.abs(got.data - want.data)) < 1e-5


def test_sparse_attention_single_delegate(rng):
    p = random_attn(rng, 4, 2)
    x = _t(rng.standard_normal((1, 4, 4, 4)))
    cfg = LglConfig.create(channels=4, heads=2, sample_rate=4)
    got = global_sparse_attn(x, cfg, p)
    want = mhsa(_t(x.data[:, 1:2, 1, :]), p)
    assert got.shape == (1, 1, 1, 4)
    np.testing.assert_allclose(got.data.reshape(-1), want.data.reshape(-1), atol=1e-6)


def test_sparse_attention_on_sampled_tokens(rng):
    p = random_attn(rng, 4, 1)
    x = _t(rng.standard_normal((1, 4, 4, 4)))
    cfg = LglConfig.create(channels=4, sample_rate=2)
    tokens = _t(x.data[:, ::2, ::2, :].reshape(1, 4, 4))
    want = mhsa(tokens, p).data.reshape(1, 2, 2, 4)
    np.testing.assert_allclose(global_sparse_attn(x, cfg, p).data, want, atol=1e-6)


@pytest.mark.parametrize("r", [1, 2, 4])
def test_block_preserves_shape(rng, r):
    cfg = LglConfig.create(channels=288, heads=8, sample_rate=r)
    x = _t(rng.standard_normal((1, 14, 14, 288)))
    assert lgl_block(x, random_block(cfg, rng), cfg).shape == (1, 14, 14, 288)


@pytest.mark.parametrize(
    "options",
    [
        {},
        {"sampler": "avg"},
        {"propagation": "bilinear"},
        {"attn_mode": "kv_downsampled", "propagation": "none"},
        {"dual_cpe": False},
        {"share_ffn": True},
        {"local_branch": False},
    ],
)
def test_zero_branches_are_exact_identity(rng, options):
    cfg = LglConfig.create(channels=8, heads=2, sample_rate=2, **options)
    x = _t(rng.standard_normal((1, 7, 6, 8)))
    assert lgl_block(x, random_block(cfg, rng, zero_branches=True), cfg) == x


def test_divisibility_matches_padded_computation(rng):
    cfg = LglConfig.create(channels=4, sample_rate=2, sampler="avg")
    p = random_attn(rng, 4, 1)
    prop = LocalPropParams(weight=_t(rng.standard_normal((2, 2, 4))), bias=_t(rng.standard_normal(4)))
    x = _t(rng.standard_normal((1, 5, 7, 4)))
    out = global_branch(x, cfg, p, prop)
    assert out.shape == x.shape
    padded = global_branch(pad2d(x, 0, 1, 0, 1), cfg, p, prop)
    np.testing.assert_allclose(out.data, padded.data[:, :5, :7], atol=1e-6)


def test_block_errors_carry_context(rng):
    cfg = LglConfig.create(channels=8, heads=2, sample_rate=2)
    with pytest.raises(DimensionError, match=r"^stage2\.block0: "):
        lgl_block(_t(rng.standard_normal((1, 4, 4, 6))), random_block(cfg, rng), cfg, name="stage2.block0")


def test_shared_ffn_drops_second_ffn_parameters():
    shared = block_parameter_shapes(LglConfig.create(channels=8, share_ffn=True), "b")
    assert not any(name.startswith("b.ffn2") for name in shared)
    single_cpe = block_parameter_shapes(LglConfig.create(channels=8, dual_cpe=False), "b")
    assert "b.cpe2.weight" not in single_cpe and "b.cpe1.weight" in single_cpe

import numpy as np
import pytest

from exceptions import ConfigError, DimensionError, FormatError, MissingParameterError
from models.schemas import VariantSpec
from nn.parallel import current_threads
from services import analysis_service, model_service
from services.model_service import EdgeViTModel, build_variant, init_params, stage_grids
from services.weight_store import WeightStore, load_weights, save_weights
from tensor import Tensor
from tensor.core import zeros

TINY = {
    "name": "tiny",
    "channels": [8, 8, 16, 16],
    "blocks": [1, 1, 1, 1],
    "heads": [1, 2, 2, 4],
    "num_classes": 10,
    "input_size": 32,
}


@pytest.fixture(scope="module")
def tiny() -> VariantSpec:
    return build_variant(TINY)


def test_named_variants():
    assert build_variant("xxs").channels == [36, 72, 144, 288]
    assert build_variant("s").blocks == [1, 2, 3, 2]
    xs = build_variant("EdgeViT-XS")
    assert (xs.channels, xs.blocks, xs.heads) == ([48, 96, 240, 384], [1, 1, 2, 2], [1, 2, 4, 8])
    assert xs.sample_rates == [4, 2, 2, 1]


def test_unknown_variant():
    with pytest.raises(ConfigError, match="unknown variant"):
        build_variant("xxl")


def test_custom_spec_checks_divisibility():
    with pytest.raises(ConfigError, match="heads 5"):
        build_variant({**TINY, "channels": [36, 72, 144, 288], "heads": [5, 2, 4, 8]})


def test_custom_spec_needs_four_stages():
    with pytest.raises(ConfigError):
        build_variant({**TINY, "blocks": [1, 1, 1]})


def test_spec_json_round_trip(tmp_path, tiny):
    path = tmp_path / "tiny.json"
    model_service.dump_spec(tiny, path)
    assert model_service.load_spec(path) == tiny


@pytest.mark.parametrize(
    "size,grids", [(224, [(56, 56), (28, 28), (14, 14), (7, 7)]), (256, [(64, 64), (32, 32), (16, 16), (8, 8)])]
)
def test_stage_grid_plan(size, grids):
    assert stage_grids(build_variant("xxs"), size) == grids


def test_init_is_deterministic(tiny):
    a, b = init_params(tiny, seed=3), init_params(tiny, seed=3)
    assert a == b
    assert init_params(tiny, seed=4) != a


def test_init_values(tiny):
    store = init_params(tiny, seed=0)
    assert np.all(store.get("stage1.block0.norm1.gamma").data == 1.0)
    assert np.all(store.get("head.fc.bias").data == 0.0)
    w = store.get("stage2.block0.ffn1.fc1.weight").data
    assert np.abs(w).max() <= np.sqrt(1.0 / 8)


def test_parameter_names_match_count_breakdown(tiny):
    store = init_params(tiny)
    report = analysis_service.count_params(tiny)
    assert store.names() == [row.path for row in report.breakdown]
    assert sum(t.size for _, t in store.items()) == report.total_params


@pytest.mark.parametrize("size", [32, 36])
def test_forward_shapes(tiny, size):
    model = EdgeViTModel(tiny, init_params(tiny))
    x = model_service.random_input(size, seed=1)
    stages, logits = model.forward_stages(x)
    assert logits.shape == (1, 10)
    assert [s.shape[-1] for s in stages] == tiny.channels
    assert [s.shape[1:3] for s in stages] == stage_grids(tiny, size)


@pytest.fixture(scope="module")
def variant_models():
    models = {}

    def get(name: str) -> EdgeViTModel:
        if name not in models:
            spec = build_variant(name)
            models[name] = EdgeViTModel(spec, init_params(spec, seed=0))
        return models[name]

    return get


@pytest.mark.parametrize("name", ["xxs", "xs", "s"])
@pytest.mark.parametrize("size, grids", [(224, [56, 28, 14, 7]), (256, [64, 32, 16, 8])])
def test_variant_forward(variant_models, name, size, grids):
    model = variant_models(name)
    stages, logits = model.forward_stages(model_service.random_input(size, seed=0))
    assert logits.shape == (1, 1000)
    assert np.all(np.isfinite(logits.data))
    assert [s.shape for s in stages] == [
        (1, g, g, c) for g, c in zip(grids, model.spec.channels)
    ]


def test_single_sample_forward_uses_intra_op_threads(tiny, monkeypatch):
    weights = init_params(tiny, seed=4)
    x = model_service.random_input(32, seed=4)
    serial = model_service.forward(tiny, weights, x, threads=1)

    seen = []
    original = EdgeViTModel.forward_stages

    def recording(self, inp):
        seen.append(current_threads())
        return original(self, inp)

    monkeypatch.setattr(EdgeViTModel, "forward_stages", recording)
    threaded = model_service.forward(tiny, weights, x, threads=3)
    assert seen == [3]
    assert current_threads() == 1
    np.testing.assert_allclose(threaded.data, serial.data, atol=1e-5, rtol=0)


def test_batched_forward_matches_per_sample(tiny):
    weights = init_params(tiny)
    x = model_service.random_input(32, seed=2, batch=3)
    batched = model_service.forward(tiny, weights, x, threads=2)
    single = model_service.forward(tiny, weights, Tensor.from_numpy(x.data[1:2]))
    assert batched.shape == (3, 10)
    np.testing.assert_array_equal(batched.data[1:2], single.data)


def test_zero_branches_reduce_to_embedding_path(tiny):
    weights = init_params(tiny, seed=5)
    zeroed = WeightStore()
    for name, tensor in weights.items():
        if ".block" in name and not name.endswith(".gamma"):
            tensor = zeros(tensor.shape)
        zeroed.add(name, tensor)
    bare = build_variant({**TINY, "blocks": [0, 0, 0, 0]})
    x = model_service.random_input(32, seed=6)
    assert model_service.forward(tiny, zeroed, x) == model_service.forward(bare, zeroed, x)


def test_weights_round_trip(tmp_path, tiny):
    store = init_params(tiny, seed=9)
    path = tmp_path / "w.evwt"
    save_weights(store, path)
    assert load_weights(path) == store


def test_corrupt_weight_magic(tmp_path, tiny):
    path = tmp_path / "w.evwt"
    save_weights(init_params(tiny), path)
    path.write_bytes(b"XXXX" + path.read_bytes()[4:])
    with pytest.raises(FormatError, match="magic"):
        load_weights(path)


def test_duplicate_names_are_rejected(tiny):
    store = init_params(tiny)
    with pytest.raises(FormatError, match="duplicate"):
        store.add("head.fc.bias", zeros((10,)))


def test_missing_parameter_fails_forward_with_context(tmp_path, tiny):
    store = init_params(tiny).without("stage3.block0.attn.k.weight")
    path = tmp_path / "w.evwt"
    save_weights(store, path)
    loaded = load_weights(path)
    with pytest.raises(MissingParameterError, match="stage3.block0.attn.k.weight"):
        EdgeViTModel(tiny, loaded)


def test_rgb_input_required(tiny):
    model = EdgeViTModel(tiny, init_params(tiny))
    with pytest.raises(DimensionError, match="RGB"):
        model.forward(zeros((1, 32, 32, 4)))

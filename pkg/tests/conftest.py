import numpy as np
import pytest
import torch

torch.set_num_threads(4)


@pytest.fixture(scope="session")
def toy_root(tmp_path_factory):
    """Default toy dataset tree (3 sources x 2 styles, 100/25 per subclass)."""
    from artbrain.dataset import ToySpec, generate_toy

    root = tmp_path_factory.mktemp("toy")
    generate_toy(ToySpec(), 7, root)
    return root


@pytest.fixture(scope="session")
def toy_arrays(toy_root):
    """Preprocessed toy tensors: (train_x, train_y, test_x, test_y)."""
    from artbrain.dataset import load_split, validate_manifest
    from artbrain.preprocess import PreprocessConfig

    manifest, report = validate_manifest(toy_root)
    assert report.ok
    pre = PreprocessConfig(target_side=64)
    train_x, train_y = load_split(toy_root, manifest, "train", pre)
    test_x, test_y = load_split(toy_root, manifest, "test", pre)
    return train_x, train_y, test_x, test_y


@pytest.fixture(scope="session")
def tiny_weights(tmp_path_factory):
    """Seeded random tiny-model weights saved as an archive (fast, untrained)."""
    from artbrain.model import ModelConfig, Predictor, build_network

    torch.manual_seed(1234)
    model = build_network(ModelConfig.tiny())
    path = tmp_path_factory.mktemp("weights") / "tiny.acnx"
    Predictor(model).save(path)
    return path


@pytest.fixture()
def rng():
    return np.random.default_rng(0)

import numpy as np
import pytest
from sklearn.base import clone

from artbrain.errors import DataError
from artbrain.estimator import ArtClassifier
from artbrain.model import Predictor
from artbrain.preprocess import ImageTensor


@pytest.fixture(scope="module")
def fitted(toy_arrays):
    """Classifier fitted briefly on a slice of the toy training split."""
    train_images, train_targets, _, _ = toy_arrays
    rng = np.random.default_rng(0)
    subset = rng.permutation(len(train_images))[:60]
    clf = ArtClassifier(max_epochs=2, batch_size=16, seed=1, val_fraction=0.2)
    clf.fit(train_images[subset], train_targets[subset])
    return clf, subset


class TestSklearnProtocol:
    def test_get_params_round_trip(self):
        clf = ArtClassifier(max_epochs=5, initial_lr=3e-4)
        params = clf.get_params()
        assert params["max_epochs"] == 5
        assert params["initial_lr"] == 3e-4
        assert params["variant"] == "tiny"
        clf.set_params(max_epochs=7, dropout=0.1)
        assert clf.max_epochs == 7
        assert clf.dropout == 0.1

    def test_clone_keeps_hyperparameters_only(self, fitted):
        clf, _ = fitted
        copied = clone(clf)
        assert copied.get_params() == clf.get_params()
        assert not hasattr(copied, "model_")

    def test_unfitted_prediction_rejected(self, toy_arrays):
        train_images, _, _, _ = toy_arrays
        with pytest.raises(DataError):
            ArtClassifier().predict(train_images[:2])


class TestFitPredict:
    def test_fitted_attributes(self, fitted):
        clf, _ = fitted
        np.testing.assert_array_equal(clf.classes_, np.arange(30))
        assert len(clf.result_.history) == 2
        assert clf.config_.use_attention is True

    def test_predict_proba_shape_and_normalization(self, fitted, toy_arrays):
        clf, _ = fitted
        _, _, test_images, _ = toy_arrays
        probs = clf.predict_proba(test_images[:10])
        assert probs.shape == (10, 30)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)
        assert probs.min() >= 0.0

    def test_predict_is_argmax_of_proba(self, fitted, toy_arrays):
        clf, _ = fitted
        _, _, test_images, _ = toy_arrays
        probs = clf.predict_proba(test_images[:10])
        np.testing.assert_array_equal(clf.predict(test_images[:10]), probs.argmax(axis=1))

    def test_predict_source_sums_subclasses(self, fitted, toy_arrays):
        clf, _ = fitted
        _, _, test_images, _ = toy_arrays
        probs = clf.predict_proba(test_images[:10])
        marginals = probs.reshape(10, 3, 10).sum(axis=2)
        np.testing.assert_array_equal(
            clf.predict_source(test_images[:10]), marginals.argmax(axis=1)
        )

    def test_uint8_rasters_accepted(self, fitted, rng):
        clf, _ = fitted
        rasters = rng.integers(0, 256, size=(3, 80, 96, 3), dtype=np.uint8)
        probs = clf.predict_proba(rasters)
        assert probs.shape == (3, 30)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)

    def test_bad_batches_rejected(self, fitted, rng):
        clf, _ = fitted
        with pytest.raises(DataError):
            clf.predict_proba(np.zeros((2, 3, 64), dtype=np.float32))
        with pytest.raises(DataError):  # wrong spatial side for the variant
            clf.predict_proba(np.zeros((2, 3, 32, 32), dtype=np.float32))
        with pytest.raises(DataError):  # float NHWC is ambiguous, refuse it
            clf.predict_proba(np.zeros((2, 64, 64, 3), dtype=np.float32))
        with pytest.raises(DataError):
            clf.fit(np.zeros((4, 3, 64, 64), dtype=np.float32), np.zeros((3,)))

    def test_as_predictor_matches_proba(self, fitted, toy_arrays):
        clf, _ = fitted
        _, _, test_images, _ = toy_arrays
        predictor = clf.as_predictor()
        assert isinstance(predictor, Predictor)
        assert predictor.model_version == "tiny-estimator"
        probs = clf.predict_proba(test_images[:1])[0]
        prediction = predictor.predict_tensor(ImageTensor(data=test_images[0]))
        np.testing.assert_allclose(prediction.probs, probs, atol=1e-9)

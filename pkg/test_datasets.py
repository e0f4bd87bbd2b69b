"""
Tests for task generation: image features, PCA, engineered quantum labels,
synthetic blobs, phase recipes and dataset files.
"""
import gzip
import struct

import numpy as np
import pytest

from qcl.core.exceptions import ArgumentException, DataIOException, DatasetGenerationException
from qcl.services.datasets.engineered import engineer_labels, generate_engineered_task, label_circuit
from qcl.services.datasets.images import (
    build_image_task,
    image_to_128,
    load_idx_corpus,
    read_idx,
    resize_image,
)
from qcl.services.datasets.pca import build_pca_task, pca_apply, pca_fit, pca_project
from qcl.services.datasets.phase import sample_phase_dataset
from qcl.services.datasets.storage import load_task, read_vector_csv, save_task
from qcl.services.datasets.synthetic import synthetic_two_class
from qcl.services.datasets.types import PrepMethod, Sample, StateRecipe, TaskDataset, TaskKind, split_train_test
from qcl.services.simulation.circuit import build_feature_encoding, compose_input_state, readout_z


def write_idx(path, array, code=0x08):
    header = bytes([0, 0, code, array.ndim]) + struct.pack(f">{array.ndim}I", *array.shape)
    payload = header + array.tobytes()
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "wb") as fh:
        fh.write(payload)
    return path


@pytest.fixture
def idx_corpus(tmp_path, rng):
    images = rng.integers(0, 256, size=(200, 28, 28), dtype=np.uint8)
    labels = (np.arange(200) % 10).astype(np.uint8)
    return (
        write_idx(tmp_path / "images-idx3-ubyte.gz", images),
        write_idx(tmp_path / "labels-idx1-ubyte", labels),
    )


# -- image features -----------------------------------------------------------

def test_image_to_128_constant_image():
    features = image_to_128(np.ones((16, 16)))
    assert features.shape == (128,)
    np.testing.assert_allclose(features, 0.125)
    np.testing.assert_allclose(image_to_128(np.ones((16, 16)), "max_scale"), 2.0)


def test_image_to_128_blank_image():
    np.testing.assert_array_equal(image_to_128(np.zeros((16, 16))), np.zeros(128))


def test_image_to_128_sums_adjacent_pairs():
    pixels = np.zeros(256)
    pixels[0], pixels[1], pixels[255] = 3.0, 4.0, 12.0
    features = image_to_128(pixels.reshape(16, 16))
    assert features[0] == pytest.approx(7.0 / 13.0)
    assert features[127] == pytest.approx(12.0 / 13.0)
    assert np.count_nonzero(features) == 2


def test_image_to_128_rejects_bad_input():
    with pytest.raises(ArgumentException):
        image_to_128(np.ones((28, 28)))
    with pytest.raises(ArgumentException):
        image_to_128(-np.ones((16, 16)))


def test_resize_image():
    small = resize_image(np.full((28, 28), 80.0))
    assert small.shape == (16, 16)
    np.testing.assert_allclose(small, 80.0, atol=1e-3)
    with pytest.raises(ArgumentException):
        resize_image(np.ones((28, 28)), method="lanczos9")


def test_read_idx(idx_corpus):
    images_path, labels_path = idx_corpus
    images, labels = load_idx_corpus(images_path, labels_path)
    assert images.shape == (200, 28, 28)
    assert labels.tolist()[:12] == [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 0, 1]
    assert read_idx(labels_path).dtype == np.uint8


def test_read_idx_errors(tmp_path):
    with pytest.raises(DataIOException):
        read_idx(tmp_path / "absent")
    junk = tmp_path / "junk"
    junk.write_bytes(b"\x01\x02\x03\x04rest")
    with pytest.raises(DataIOException):
        read_idx(junk)
    short = tmp_path / "short"
    short.write_bytes(bytes([0, 0, 0x08, 1]) + struct.pack(">I", 10) + b"\x00\x01")
    with pytest.raises(DataIOException):
        read_idx(short)


def test_build_image_task(idx_corpus):
    images, labels = load_idx_corpus(*idx_corpus)
    task = build_image_task(images, labels, classes=(3, 8), n_train=10, n_test=4, seed=5)
    assert task.task_kind == TaskKind.IMAGE_128
    assert task.class_counts() == {"train": [5, 5], "test": [2, 2]}
    assert all(s.features.shape == (128,) for s in task.train + task.test)

    again = build_image_task(images, labels, classes=(3, 8), n_train=10, n_test=4, seed=5)
    np.testing.assert_array_equal(task.train[0].features, again.train[0].features)


def test_build_image_task_needs_enough_images(idx_corpus):
    images, labels = load_idx_corpus(*idx_corpus)
    with pytest.raises(ArgumentException):
        build_image_task(images, labels, classes=(0, 1), n_train=40, n_test=4)
    with pytest.raises(ArgumentException):
        build_image_task(images, labels, classes=(0, 1, 2))


# -- PCA ----------------------------------------------------------------------

def test_pca_standardizes_training_features(rng):
    X = rng.normal(size=(50, 3)) * [3.0, 1.0, 0.2]
    model = pca_fit(X, 3)
    out = pca_apply(model, X)
    np.testing.assert_allclose(out.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(out.std(axis=0), 1.0, atol=1e-12)
    np.testing.assert_allclose(model.components @ model.components.T, np.eye(3), atol=1e-12)
    assert np.all(np.diff(model.explained_variance) <= 0)


def test_pca_preserves_distances_of_low_rank_data(rng):
    basis = np.linalg.qr(rng.normal(size=(6, 2)))[0].T
    X = rng.normal(size=(20, 2)) @ basis + 1.5
    model = pca_fit(X, 2)
    projected = pca_project(model, X)
    for i, j in [(0, 1), (3, 7), (5, 19)]:
        assert np.linalg.norm(projected[i] - projected[j]) == pytest.approx(np.linalg.norm(X[i] - X[j]))


def test_pca_skips_degenerate_directions(rng):
    X = rng.normal(size=(20, 2)) @ np.linalg.qr(rng.normal(size=(5, 2)))[0].T
    model = pca_fit(X, 3)
    assert model.k == 2
    assert model.skipped == [2]


def test_pca_argument_errors(rng):
    with pytest.raises(ArgumentException):
        pca_fit(rng.normal(size=(10, 3)), 4)
    with pytest.raises(ArgumentException):
        pca_fit(rng.normal(size=(3, 5)), 4)


def test_build_pca_task(rng):
    X = rng.normal(size=(40, 12))
    labels = [i % 2 for i in range(40)]
    task = build_pca_task(X, labels, n_test=10, k=4, seed=2)
    assert task.task_kind == TaskKind.PCA_10
    assert len(task.train) == 30 and len(task.test) == 10
    assert task.train[0].features.shape == (4,)
    train = np.array([s.features for s in task.train])
    np.testing.assert_allclose(train.std(axis=0), 1.0, atol=1e-12)


# -- engineered labels --------------------------------------------------------

def test_engineer_labels_with_unreachable_band(rng):
    xs = rng.uniform(-1, 1, size=(10, 3))
    theta = rng.uniform(0, 2 * np.pi, label_circuit(3).n_params)
    with pytest.raises(DatasetGenerationException):
        engineer_labels(xs, theta, thresholds=(-1.0, 1.0))


def test_engineer_labels_argument_errors(rng):
    xs = rng.uniform(-1, 1, size=(4, 3))
    theta = rng.uniform(0, 2 * np.pi, label_circuit(3).n_params)
    with pytest.raises(ArgumentException):
        engineer_labels(xs, theta, thresholds=(0.1, 0.5))
    with pytest.raises(ArgumentException):
        engineer_labels(xs, theta[:-1])


def test_label_circuit_shape():
    circuit = label_circuit(10)
    assert circuit.n_params == 90
    assert circuit.readout_qubit == 1
    assert "CZ" in circuit.gate_counts()


def test_engineered_labels_respect_dead_band(rng):
    xs = rng.uniform(-1, 1, size=(200, 3))
    task = generate_engineered_task(xs, seed=4, max_redraws=10)
    circuit = label_circuit(3)
    theta_rand = np.array(task.metadata["theta_rand"])
    for sample in task.train + task.test:
        state = compose_input_state(build_feature_encoding(sample.features))
        z = readout_z(circuit, theta_rand, input_state=state)
        if sample.label_index == 0:
            assert z > 0.2
        else:
            assert z < -0.2
    kept = task.metadata["kept"]
    assert len(task.train) + len(task.test) == kept
    assert task.metadata["discard_rate"] == pytest.approx(1 - kept / 200)
    assert len(task.test) == max(2, int(round(kept * (111 / 667))))


def test_engineered_task_is_seeded(rng):
    xs = rng.uniform(-1, 1, size=(60, 3))
    a = generate_engineered_task(xs, seed=8, max_redraws=10)
    b = generate_engineered_task(xs, seed=8, max_redraws=10)
    assert a.metadata["theta_rand"] == b.metadata["theta_rand"]
    assert [s.label for s in a.train] == [s.label for s in b.train]


# -- synthetic ----------------------------------------------------------------

def test_synthetic_two_class():
    task = synthetic_two_class(dim=4, count=200, separation=6.0, seed=3, n_test=20)
    assert task.class_counts()["train"][0] + task.class_counts()["train"][1] == 200
    X = np.array([s.features for s in task.train + task.test])
    np.testing.assert_allclose(X.mean(axis=0), 0.0, atol=1e-12)
    y = np.array([s.label_index for s in task.train + task.test])
    assert np.linalg.norm(X[y == 0].mean(axis=0) - X[y == 1].mean(axis=0)) > 1.5

    again = synthetic_two_class(dim=4, count=200, separation=6.0, seed=3, n_test=20)
    np.testing.assert_array_equal(task.train[7].features, again.train[7].features)


def test_synthetic_argument_errors():
    with pytest.raises(ArgumentException):
        synthetic_two_class(dim=3, count=10, separation=-1.0)
    with pytest.raises(ArgumentException):
        synthetic_two_class(dim=0, count=10, separation=1.0)


# -- phase recipes ------------------------------------------------------------

def test_phase_dataset_ranges():
    task = sample_phase_dataset(6, 20, 10, prep=PrepMethod.EXACT, seed=1)
    assert task.task_kind == TaskKind.QUANTUM_PHASE
    assert task.class_counts() == {"train": [10, 10], "test": [5, 5]}
    for s in task.train + task.test:
        r = s.state_recipe
        assert r.n_qubits == 6 and r.alpha is None
        if s.label_index == 0:
            assert 0.0 <= r.h <= 0.5
        else:
            assert 2.5 <= r.h <= 3.0


def test_phase_dataset_is_seeded():
    a = sample_phase_dataset(4, 6, 2, seed=9)
    b = sample_phase_dataset(4, 6, 2, seed=9)
    assert [s.state_recipe.h for s in a.train] == [s.state_recipe.h for s in b.train]


def test_phase_dataset_rejects_overlapping_ranges():
    with pytest.raises(ArgumentException):
        sample_phase_dataset(4, 4, 2, spt_range=(0.0, 1.2))
    with pytest.raises(ArgumentException):
        sample_phase_dataset(4, 0, 2)


# -- types and storage --------------------------------------------------------

def test_split_train_test(rng):
    samples = [Sample.from_class([float(i)], i % 2) for i in range(10)]
    train, test = split_train_test(samples, 3, rng)
    assert len(train) == 7 and len(test) == 3
    assert {id(s) for s in train}.isdisjoint({id(s) for s in test})
    with pytest.raises(ArgumentException):
        split_train_test(samples, 10, rng)


def test_validate_requires_both_classes():
    one_class = [Sample.from_class([0.0], 0), Sample.from_class([1.0], 0)]
    task = TaskDataset(one_class, one_class[:1], TaskKind.PCA_10)
    with pytest.raises(DatasetGenerationException):
        task.validate()


def test_vector_task_round_trip(vector_task_factory, tmp_path):
    task = vector_task_factory(dim=3, name="blobs")
    save_task(task, tmp_path, extra={"seed": 5})
    loaded = load_task(tmp_path)
    assert loaded.name == "blobs"
    assert loaded.task_kind == TaskKind.PCA_10
    assert [s.label for s in loaded.train] == [s.label for s in task.train]
    for a, b in zip(loaded.test, task.test):
        np.testing.assert_array_equal(a.features, b.features)


def test_phase_task_round_trip_with_sidecars(tmp_path):
    alpha = np.linspace(-1, 1, 12)
    train = [
        Sample.from_recipe(StateRecipe(0.1, PrepMethod.VARIATIONAL, 4, alpha), 0),
        Sample.from_recipe(StateRecipe(2.7, PrepMethod.VARIATIONAL, 4), 1),
    ]
    test = [Sample.from_recipe(StateRecipe(0.4, PrepMethod.EXACT, 4), 0)]
    task = TaskDataset(train, test, TaskKind.QUANTUM_PHASE, "phase", {"n": 4})
    save_task(task, tmp_path)
    assert (tmp_path / "alpha_0.npy").is_file()
    assert not (tmp_path / "alpha_1.npy").exists()

    loaded = load_task(tmp_path)
    np.testing.assert_array_equal(loaded.train[0].state_recipe.alpha, alpha)
    assert loaded.train[1].state_recipe.alpha is None
    assert loaded.test[0].state_recipe.prep == PrepMethod.EXACT
    assert [s.state_recipe.h for s in loaded.train] == [0.1, 2.7]


def test_storage_errors(tmp_path):
    with pytest.raises(DataIOException):
        load_task(tmp_path / "missing")
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(DataIOException):
        read_vector_csv(bad)


def test_synthetic_blobs_are_linearly_separable():
    task = synthetic_two_class(dim=10, count=400, separation=6.0, seed=0, n_test=200)

    def design(split):
        X = np.array([s.features for s in split])
        return np.hstack([X, np.ones((len(split), 1))])

    y = np.array([1.0 if s.label_index == 0 else -1.0 for s in task.train])
    w, *_ = np.linalg.lstsq(design(task.train), y, rcond=None)
    predicted = np.where(design(task.test) @ w > 0, 0, 1)
    truth = np.array([s.label_index for s in task.test])
    assert np.mean(predicted == truth) > 0.99

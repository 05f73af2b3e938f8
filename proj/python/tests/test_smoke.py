import math

import numpy as np
import pytest

import mvkernel as mvk


def test_version():
    assert mvk.__version__.count(".") == 2


def test_dataset_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    views = [rng.normal(size=(30, 3)), rng.normal(size=(30, 2))]
    ds = mvk.MultiViewDataset(views, rng.uniform(size=(30, 1)))
    assert len(ds) == 30 and ds.num_views == 2
    files = mvk.save_dataset(ds, tmp_path)
    back = mvk.load_dataset(files[-1])
    np.testing.assert_array_equal(back.view(0), views[0])
    assert mvk.concatenate_views(back).shape == (30, 5)


def test_shape_mismatch_raises():
    with pytest.raises(mvk.MvkError) as err:
        mvk.MultiViewDataset([np.zeros((3, 2)), np.zeros((4, 2))])
    assert err.value.code == "ShapeMismatch"


def test_identity_covariance_gives_squared_euclidean():
    x = np.array([[0.0, 0.0], [3.0, 4.0], [1.0, 1.0]])
    d = mvk.mahalanobis_distances(x, [np.eye(2)] * 3)
    assert d[0, 1] == pytest.approx(25.0)
    assert d[1, 2] == pytest.approx(13.0)
    np.testing.assert_array_equal(d, d.T)


def test_pseudo_inverse_and_rank():
    c = np.diag([4.0, 1.0, 0.0])
    np.testing.assert_allclose(mvk.pseudo_inverse(c, 1e-9), np.diag([0.25, 1.0, 0.0]))
    assert mvk.numerical_rank(c, 1e-9) == 2


def test_two_block_diffusion_map_separates_clusters():
    k = np.full((6, 6), 1e-6)
    k[:3, :3] = 1.0
    k[3:, 3:] = 1.0
    emb = mvk.diffusion_map(k, dims=1)
    phi = emb["coordinates"][:, 0]
    assert emb["eigenvalues"][0] == pytest.approx(1.0, abs=1e-10)
    assert np.all(np.sign(phi[:3]) == np.sign(phi[0]))
    assert np.all(np.sign(phi[3:]) == -np.sign(phi[0]))


def test_spectral_lines():
    lines = mvk.spectral_lines([1.0, math.exp(-math.pi**2 * 0.02 / 2)], 0.02)
    assert lines == pytest.approx([0.0, 1.0])


def test_helix_algorithm2_kernel_is_valid():
    ds = mvk.make_helix_dataset(200, seed=1)
    res = mvk.algorithm2_kernel(ds, epsilon=5.0, knn=15)
    assert mvk.kernel_violation(res["kernel"]) == ""
    p = mvk.row_normalize(res["kernel"])
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)


def test_kernel_io_roundtrip(tmp_path):
    k = mvk.ground_truth_kernel(np.random.default_rng(2).uniform(size=(20, 2)), 0.1)
    mvk.write_kernel(tmp_path / "k.mvk", k)
    assert (tmp_path / "k.mvk").stat().st_size == 16 + 20 * 20 * 8
    np.testing.assert_array_equal(mvk.read_kernel(tmp_path / "k.mvk"), k)
    assert mvk.q_factor(k, k) == 0.0


def test_run_experiment(tmp_path):
    report = mvk.run_experiment(
        "helix_singleview", {"densities": [300], "radii": [0.5, 1.0], "seeds": [0], "out": str(tmp_path)}
    )
    assert report["experiment"] == "helix_singleview"
    assert all(len(a["sha256"]) == 64 for a in report["artifacts"])

"""Smoke tests for the python bindings: geometry, covariance pipeline,
eigensolver cross-checked against numpy, MUSIC, and a tiny training loop."""

import math

import numpy as np
import pytest

import nfdoa


@pytest.fixture(scope="module")
def ula65():
    return nfdoa.ArrayConfig(65)


def test_geometry(ula65):
    assert nfdoa.rayleigh_distance(32.0, 1.0) == pytest.approx(2048.0)
    lo, hi = nfdoa.fresnel_bounds(ula65)
    assert lo == pytest.approx(112.0, rel=0.01)
    assert hi == pytest.approx(2048.0)

    src = nfdoa.SourcePlacement(theta=math.radians(30.0), range=200.0)
    assert nfdoa.exact_range(src, ula65, ula65.ref_index) == pytest.approx(200.0)

    a = nfdoa.near_field_steering(src, ula65)
    assert a.shape == (65,)
    assert a[ula65.ref_index - 1] == 1.0 + 0.0j
    # amplitude equals r / r_n
    for n in (1, 17, 65):
        rn = nfdoa.exact_range(src, ula65, n)
        assert abs(a[n - 1]) == pytest.approx(200.0 / rn, rel=1e-12)

    ff = nfdoa.far_field_steering(0.0, ula65)
    assert np.allclose(ff, np.ones(65))

    alpha, beta = nfdoa.fresnel_params(src, ula65)
    assert alpha == pytest.approx(math.pi / 2)
    assert beta == pytest.approx(math.pi * 0.1875 / 200.0)


def test_snapshots_and_covariance(ula65):
    src = nfdoa.SourcePlacement(theta=math.radians(-20.0), range=500.0)
    y = nfdoa.received_snapshots([src], ula65, snapshots=100, snr_db=10.0, seed=3)
    assert y.shape == (65, 100)

    r = nfdoa.sample_covariance(y, ula65)
    assert np.allclose(r, r.conj().T)

    vcm = nfdoa.reconstruct_vcm(r)
    # exactly Hermitian Toeplitz
    assert np.array_equal(vcm, vcm.conj().T)
    for t in range(1, 65):
        diag = np.diagonal(vcm, offset=t)
        assert np.all(diag == diag[0])

    cropped = nfdoa.crop_vcm(vcm, 33)
    assert cropped.shape == (33, 33)
    assert np.array_equal(cropped, vcm[16:49, 16:49])


def test_eigensolver_against_numpy(ula65):
    rng = np.random.default_rng(7)
    x = rng.normal(size=(20, 20)) + 1j * rng.normal(size=(20, 20))
    herm = (x + x.conj().T) / 2
    values, vectors = nfdoa.hermitian_eig(herm)
    np_values = np.linalg.eigvalsh(herm)[::-1]
    assert np.allclose(values, np_values, atol=1e-10)
    recon = vectors @ np.diag(values) @ vectors.conj().T
    assert np.allclose(recon, herm, atol=1e-10)


def test_subspace_and_music(ula65):
    src = nfdoa.SourcePlacement(theta=math.radians(17.0), range=600.0)
    r = nfdoa.analytic_covariance([src], ula65, 0.01)
    vcm = nfdoa.reconstruct_vcm(r)

    vectors, values, noise_floor = nfdoa.signal_subspace(vcm, 1)
    assert values[0] > 10 * noise_floor

    grid = [math.radians(t / 10.0) for t in range(-890, 891)]
    spectrum = nfdoa.music_spectrum_far(vcm, 1, ula65.spacing, grid)
    peak = math.degrees(grid[int(np.argmax(spectrum))])
    assert peak == pytest.approx(17.0, abs=0.11)

    estimates, spec2d, n_theta, n_range = nfdoa.near_field_music(
        r, 1, ula65, theta_lo_deg=-60, theta_hi_deg=60, theta_step_deg=0.5,
        range_lo=300, range_hi=900, range_step=100,
    )
    assert len(spec2d) == n_theta * n_range
    theta_est, range_est = estimates[0]
    assert math.degrees(theta_est) == pytest.approx(17.0, abs=0.5)
    assert range_est == pytest.approx(600.0, rel=0.2)


def test_feature_pipeline_and_training():
    cfg = nfdoa.ArrayConfig(33)
    spec = nfdoa.DatasetSpec()
    spec.array = cfg
    spec.n_in = 17
    spec.distances = [100.0, 300.0]
    spec.theta_lo_deg = -60.0
    spec.theta_hi_deg = 60.0
    spec.theta_step_deg = 10.0
    spec.snapshots = 50
    spec.seed = 5
    dataset = nfdoa.build_dataset(spec)
    assert len(dataset) == 2 * 13
    feature = dataset[0].feature
    assert feature.shape == (17,)
    assert np.linalg.norm(feature) == pytest.approx(1.0, abs=1e-8)

    model = nfdoa.build_cvnn(17, seed=2)
    base = model.predict(feature)
    assert math.isfinite(base)

    tc = nfdoa.TrainConfig()
    tc.epochs = 20
    tc.batch_size = 8
    tc.seed = 2
    history = nfdoa.train_model(model, dataset, tc, val_fraction=0.1)
    assert len(history.train_loss) == 20
    assert history.train_loss[-1] < history.train_loss[0]

    report = nfdoa.evaluate(model, dataset)
    assert report.rmse_deg < 45.0
    assert len(report.errors_deg) == len(dataset)


def test_checkpoint_roundtrip(tmp_path):
    model = nfdoa.build_cvnn(13, seed=4)
    path = str(tmp_path / "ckpt.json")
    nfdoa.save_checkpoint(model, nfdoa.TrainConfig(), 4, path)
    loaded = nfdoa.load_checkpoint(path)
    rng = np.random.default_rng(1)
    feature = rng.normal(size=13) + 1j * rng.normal(size=13)
    assert loaded.predict(feature) == model.predict(feature)


def test_flops():
    cvnn = nfdoa.build_cvnn(33, seed=0)
    assert nfdoa.flops_count(cvnn) == 241415
    assert abs(nfdoa.tdnn_flops(33) / 0.34e6 - 1.0) < 0.25
    tdnn = nfdoa.build_tdnn(33, seed=0)
    assert tdnn.name == "tdnn"
    assert tdnn.flops > nfdoa.flops_count(cvnn)

from types import SimpleNamespace

import numpy as np
import pytest

from tooltrack.data_model import Detection
from tooltrack.errors import ValidationError
from tooltrack.kalman import KalmanConfig, KalmanState, kf_init, kf_predict, kf_update

CFG = KalmanConfig().resolved(image_diagonal=float(np.hypot(1920, 1080)))


def det(cx, cy, w, h, frame=0):
    return Detection(frame, (cx, cy, w, h), 0.9, 0, np.zeros(4))


def test_init_positions_and_zero_velocity():
    s = kf_init(det(100, 50, 20, 10), CFG)
    assert s.mean[:4].tolist() == [100.0, 50.0, 200.0, 2.0]
    assert s.mean[4:].tolist() == [0.0, 0.0, 0.0, 0.0]


def test_init_deterministic():
    a = kf_init(det(100, 50, 20, 10), CFG)
    b = kf_init(det(100, 50, 20, 10), CFG)
    assert np.array_equal(a.mean, b.mean)
    assert np.array_equal(a.covariance, b.covariance)


def test_init_covariance_matches_config():
    s = kf_init(det(100, 50, 20, 10), CFG)
    scale = np.sqrt(200.0)
    stds = np.array([
        CFG.meas_position_std_scale * scale,
        CFG.meas_position_std_scale * scale,
        CFG.meas_area_std_scale * 200.0,
        CFG.meas_aspect_std,
    ]) * CFG.init_position_std_scale
    expected = np.concatenate([stds**2, CFG.init_velocity_var_scale * stds**2])
    assert np.array_equal(np.diag(s.covariance), expected)


def test_init_rejects_bad_bbox():
    stub = SimpleNamespace(bbox=(10.0, 10.0, 0.0, 5.0))
    with pytest.raises(ValidationError):
        kf_init(stub, CFG)


def test_predict_constant_velocity_identity():
    s = kf_init(det(100, 50, 20, 10), CFG)
    mean = s.mean.copy()
    mean[4:] = [2.0, -1.0, 0.0, 0.0]
    s = KalmanState(mean=mean, covariance=s.covariance)
    p = kf_predict(s, CFG, dt=1)
    assert p.mean[:4].tolist() == [102.0, 49.0, 200.0, 2.0]


def test_predict_leaves_input_unmodified():
    s = kf_init(det(100, 50, 20, 10), CFG)
    mean_before = s.mean.copy()
    cov_before = s.covariance.copy()
    kf_predict(s, CFG, dt=2)
    assert np.array_equal(s.mean, mean_before)
    assert np.array_equal(s.covariance, cov_before)


def test_predict_dt3_equals_three_single_steps():
    s = kf_init(det(100, 50, 20, 10), CFG)
    mean = s.mean.copy()
    mean[4:6] = [3.0, 1.5]
    s = KalmanState(mean=mean, covariance=s.covariance)
    once = kf_predict(s, CFG, dt=3)
    chained = kf_predict(kf_predict(kf_predict(s, CFG), CFG), CFG)
    assert np.array_equal(once.mean, chained.mean)
    assert np.allclose(once.covariance, chained.covariance, atol=1e-9, rtol=0)


def test_predict_grows_trace():
    s = kf_init(det(100, 50, 20, 10), CFG)
    for _ in range(5):
        nxt = kf_predict(s, CFG)
        assert np.trace(nxt.covariance) > np.trace(s.covariance)
        s = nxt


def test_predict_rejects_bad_dt():
    s = kf_init(det(100, 50, 20, 10), CFG)
    with pytest.raises(ValidationError):
        kf_predict(s, CFG, dt=0)
    with pytest.raises(ValidationError):
        kf_predict(s, CFG, dt=1.5)


def test_update_zero_innovation_keeps_mean():
    s = kf_init(det(100, 50, 20, 10), CFG)
    p = kf_predict(s, CFG)
    cx, cy, a, r = p.mean[:4]
    w = np.sqrt(a * r)
    upd = kf_update(p, det(cx, cy, w, a / w), CFG)
    assert np.allclose(upd.mean, p.mean, atol=1e-9, rtol=0)


def test_update_shrinks_position_variance():
    s = kf_predict(kf_init(det(100, 50, 20, 10), CFG), CFG)
    upd = kf_update(s, det(101, 51, 20, 10), CFG)
    assert upd.covariance[0, 0] <= s.covariance[0, 0]
    assert upd.covariance[1, 1] <= s.covariance[1, 1]


def _simulate_line(n_frames, v=(3.0, -2.0), start=(100.0, 400.0), size=(40.0, 30.0)):
    for f in range(n_frames):
        yield f, det(start[0] + v[0] * f, start[1] + v[1] * f, size[0], size[1], frame=f)


def test_noiseless_line_one_step_error_converges():
    frames = list(_simulate_line(50))
    s = kf_init(frames[0][1], CFG)
    errors = {}
    for f, d in frames[1:]:
        s = kf_predict(s, CFG)
        errors[f] = float(np.hypot(s.mean[0] - d.bbox[0], s.mean[1] - d.bbox[1]))
        s = kf_update(s, d, CFG)
    assert all(errors[f] < 0.5 for f in range(11, 50))


def test_noiseless_line_error_non_increasing_after_burn_in():
    frames = list(_simulate_line(60))
    s = kf_init(frames[0][1], CFG)
    errs = []
    for f, d in frames[1:]:
        s = kf_predict(s, CFG)
        errs.append(float(np.hypot(s.mean[0] - d.bbox[0], s.mean[1] - d.bbox[1])))
        s = kf_update(s, d, CFG)
    burn = errs[10:]
    assert all(b <= a + 1e-9 for a, b in zip(burn, burn[1:]))


def test_singular_innovation_raises_estimation_error():
    from tooltrack.errors import EstimationError

    degenerate = KalmanConfig(
        meas_position_std_scale=0.0,
        meas_area_std_scale=0.0,
        meas_aspect_std=0.0,
        process_position_std=0.0,
        process_area_std_scale=0.0,
        process_aspect_std=0.0,
        init_position_std_scale=0.0,
    )
    s = kf_predict(kf_init(det(100, 50, 20, 10), degenerate), degenerate)
    with pytest.raises(EstimationError):
        kf_update(s, det(100, 50, 20, 10), degenerate)


def test_covariance_symmetric_psd_over_random_cycles():
    rng = np.random.default_rng(7)
    s = kf_init(det(500, 500, 50, 40), CFG)
    for i in range(10_000):
        s = kf_predict(s, CFG)
        if i % 2 == 0:
            cx = float(np.clip(s.mean[0] + rng.normal(0, 5), 1, 1900))
            cy = float(np.clip(s.mean[1] + rng.normal(0, 5), 1, 1000))
            w = float(rng.uniform(20, 80))
            h = float(rng.uniform(20, 80))
            s = kf_update(s, det(cx, cy, w, h), CFG)
        assert np.allclose(s.covariance, s.covariance.T, atol=1e-9, rtol=0)
    assert np.linalg.eigvalsh(s.covariance).min() >= -1e-8

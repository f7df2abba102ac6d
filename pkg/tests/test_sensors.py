import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import binomtest

from uuvnav import sensors as sn
from uuvnav import state as sc
from uuvnav.sensors import (BiasState, DvlParams, ImuParams, PressureParams, StuckState,
                            SurfaceFixParams, UsblParams)

from .oracles import random_state

ZERO_IMU = ImuParams(0.0, 0.0, 1000.0, 0.0, 0.0, 0.0, 300.0, 0.0, 0.0)


def rng(seed=0):
    return np.random.default_rng(seed)


def test_table_defaults():
    p = ImuParams()
    assert (p.gyro_noise_density, p.gyro_random_walk, p.gyro_bias_corr_time,
            p.gyro_turn_on_bias_sigma) == (3.394e-4, 3.8785e-5, 1000.0, 0.0087)
    assert (p.accel_noise_density, p.accel_random_walk, p.accel_bias_corr_time,
            p.accel_turn_on_bias_sigma) == (0.004, 0.006, 300.0, 0.1960)
    assert (DvlParams().noise_sigma, DvlParams().noise_amplitude) == (0.05, 2.0)
    pp = PressureParams()
    assert (pp.noise_sigma, pp.noise_amplitude, pp.standard_pressure, pp.kpa_per_m) == \
        (3.0, 0.0, 101.325, 9.80638)
    u = UsblParams()
    assert (u.noise_sigma, u.stuck_probability, u.stuck_duration) == (0.5, 0.05, 10.0)
    assert SurfaceFixParams().noise_sigma == 0.05


@pytest.mark.parametrize("make", [
    lambda: ImuParams(gyro_noise_density=-1.0),
    lambda: ImuParams(accel_bias_corr_time=0.0),
    lambda: DvlParams(noise_sigma=-0.1),
    lambda: PressureParams(kpa_per_m=0.0),
    lambda: UsblParams(stuck_probability=1.5),
    lambda: SurfaceFixParams(period=0.0),
])
def test_param_validation(make):
    with pytest.raises(ValueError):
        make()


def test_stuck_state_invariant():
    with pytest.raises(ValueError):
        StuckState(10.0, None)


# -- IMU bias ------------------------------------------------------------------

def test_init_bias_zero_sigma():
    b = sn.init_bias(ZERO_IMU, rng())
    assert not b.gyro_bias.any() and not b.accel_bias.any()


def test_init_bias_std():
    g = rng(1)
    draws = np.array([sn.init_bias(ImuParams(), g).gyro_bias for _ in range(10_000)])
    assert abs(draws.std() / 0.0087 - 1) < 0.05


def test_init_bias_deterministic():
    a, b = sn.init_bias(ImuParams(), rng(5)), sn.init_bias(ImuParams(), rng(5))
    assert np.array_equal(a.gyro_bias, b.gyro_bias) and np.array_equal(a.accel_bias, b.accel_bias)


def test_step_bias_constant_without_walk():
    p = ImuParams(gyro_random_walk=0.0, accel_random_walk=0.0,
                  gyro_bias_corr_time=1e300, accel_bias_corr_time=1e300)
    b = BiasState(np.array([0.1, -0.2, 0.3]), np.array([1.0, 2.0, 3.0]))
    out = sn.step_bias(b, p, 0.05, rng())
    assert np.array_equal(out.gyro_bias, b.gyro_bias)
    assert np.array_equal(out.accel_bias, b.accel_bias)


def test_step_bias_decay_factor():
    p = ImuParams(gyro_random_walk=0.0)
    b = BiasState(np.ones(3), np.zeros(3))
    out = sn.step_bias(b, p, 0.05, rng())
    assert out.gyro_bias[0] == pytest.approx(math.exp(-5e-5))
    assert out.gyro_bias[0] == pytest.approx(0.99995, abs=1e-8)


def test_step_bias_stationary_std():
    # 1000 parallel chains x 1000 steps = 1e6 steps; tau chosen so chains decorrelate
    tau, rw, dt = 2.0, 0.006, 0.05
    p = ImuParams(accel_bias_corr_time=tau, accel_random_walk=rw, gyro_random_walk=0.0)
    g = rng(3)
    b = BiasState(np.zeros(1000), np.zeros(1000))
    samples = []
    for k in range(1000):
        b = sn.step_bias(b, p, dt, g)
        if k >= 400:           # burn-in of 10 correlation times
            samples.append(b.accel_bias.copy())
    expected = rw * math.sqrt(tau / 2)
    assert abs(np.std(samples) / expected - 1) < 0.10


# -- IMU samples ---------------------------------------------------------------

def test_imu_zero_noise_is_exact():
    truth = random_state(rng(2))
    z = sn.sample_imu(truth, BiasState(), ZERO_IMU, 0.05, rng())
    assert np.array_equal(z.values, truth[list(sn.IMU_MASK)])
    assert z.mask == sn.IMU_MASK
    assert z.angular == (True,) * 3 + (False,) * 6


def test_imu_gyro_noise_calibration():
    truth = random_state(rng(2))
    g = rng(4)
    b = BiasState(np.array([0.01, 0.0, -0.01]), np.zeros(3))
    res = np.array([sn.sample_imu(truth, b, ImuParams(), 0.05, g).values[3:6]
                    for _ in range(10_000)]) - truth[9:12] - b.gyro_bias
    expected = 3.394e-4 / math.sqrt(0.05)
    assert abs(res.std() / expected - 1) < 0.05


def test_imu_accel_and_orientation_calibration():
    truth = random_state(rng(2))
    g = rng(6)
    vals = np.array([sn.sample_imu(truth, BiasState(), ImuParams(), 0.05, g).values
                     for _ in range(10_000)])
    ori = sc.wrap_angles(vals[:, 0:3] - truth[3:6])
    acc = vals[:, 6:9] - truth[12:15]
    assert abs(ori.std() / 0.005 - 1) < 0.05
    assert abs(acc.std() / (0.004 / math.sqrt(0.05)) - 1) < 0.05


def test_imu_covariance_matches_noise():
    z = sn.sample_imu(np.zeros(15), BiasState(), ImuParams(), 0.05, rng())
    d = np.diag(z.covariance)
    assert d[0] == pytest.approx(0.005 ** 2)
    assert d[3] == pytest.approx(3.394e-4 ** 2 / 0.05)
    assert d[6] == pytest.approx(0.004 ** 2 / 0.05)


def test_imu_stream_deterministic():
    truth = random_state(rng(2))
    a, b = sn.Imu(ImuParams(), rng(9)), sn.Imu(ImuParams(), rng(9))
    for k in range(50):
        za, zb = a.sample(truth, k * 0.05, 0.05), b.sample(truth, k * 0.05, 0.05)
        assert np.array_equal(za.values, zb.values)


# -- DVL -----------------------------------------------------------------------

def test_dvl_zero_noise():
    truth = random_state(rng(1))
    z = sn.sample_dvl(truth, DvlParams(0.0), rng())
    assert np.array_equal(z.values, truth[6:9]) and z.mask == (6, 7, 8)


def test_dvl_calibration_and_tail():
    truth = np.zeros(15)
    truth[6] = 0.5
    g = rng(2)
    vals = np.array([sn.sample_dvl(truth, DvlParams(), g).values for _ in range(10_000)])
    res = vals - truth[6:9]
    assert abs(res.std() / 0.05 - 1) < 0.05
    # 5 sigma bound; P(any of 3e4 draws outside) ~ 2e-2 for the fixed seed checked here
    assert np.abs(res).max() < 0.25
    z = sn.sample_dvl(truth, DvlParams(), g)
    assert np.allclose(z.covariance, np.eye(3) * 0.0025)


# -- pressure ------------------------------------------------------------------

def test_pressure_at_surface():
    p = PressureParams(noise_sigma=0.0)
    assert sn.pressure_from_depth(0.0, p) == 101.325
    z = sn.sample_pressure(np.zeros(15), p, rng())
    assert z.values[0] == 0.0 and z.mask == (2,)


def test_pressure_one_metre():
    assert sn.pressure_from_depth(1.0) == pytest.approx(111.13138, abs=1e-12)
    truth = np.zeros(15)
    truth[2] = -1.0
    z = sn.sample_pressure(truth, PressureParams(noise_sigma=0.0), rng())
    assert z.values[0] == pytest.approx(-1.0, abs=1e-12)


@given(st.floats(0.0, 1000.0))
def test_pressure_round_trip(depth):
    assert sn.depth_from_pressure(sn.pressure_from_depth(depth)) == pytest.approx(depth, abs=1e-12)


def test_pressure_calibration():
    truth = np.zeros(15)
    truth[2] = -5.0
    g = rng(3)
    z = np.array([sn.sample_pressure(truth, PressureParams(), g).values[0]
                  for _ in range(10_000)])
    assert abs(z.std() / (3.0 / 9.80638) - 1) < 0.05
    r = sn.sample_pressure(truth, PressureParams(), g).covariance[0, 0]
    assert r == pytest.approx((3.0 / 9.80638) ** 2)


# -- USBL ----------------------------------------------------------------------

def test_usbl_exact_without_noise_or_faults():
    p = UsblParams(0.0, 0.0, 10.0)
    st_ = StuckState()
    g = rng()
    for k in range(20):
        truth = random_state(g)
        z, st_ = sn.sample_usbl(truth, st_, p, float(k), g)
        assert np.array_equal(z.values, truth[:3])


def test_usbl_stuck_onset_rate():
    p = UsblParams()
    g = rng(11)
    onsets = 0
    for k in range(10_000):
        _, st_ = sn.sample_usbl(np.zeros(15), StuckState(), p, float(k), g)
        onsets += st_.stuck_until is not None
    assert 0.045 <= onsets / 10_000 <= 0.055
    assert binomtest(onsets, 10_000, 0.05).pvalue > 0.001


def test_usbl_stuck_window_holds_value():
    p = UsblParams()
    held = np.array([1.0, 2.0, -3.0])
    st_ = StuckState(110.0, held)
    g = rng()
    truth = random_state(g)
    for t in np.arange(100.0, 110.0, 0.5):
        z, st_ = sn.sample_usbl(truth, st_, p, float(t), g)
        assert np.array_equal(z.values, held)
    z, st_ = sn.sample_usbl(truth, st_, p, 110.0, g)
    assert not np.array_equal(z.values, held)


def test_usbl_stuck_windows_do_not_overlap():
    p = UsblParams(stuck_probability=0.3)
    g = rng(5)
    st_ = StuckState()
    windows = []
    for k in range(2000):
        was_stuck = st_.is_stuck(float(k))
        _, new = sn.sample_usbl(random_state(g), st_, p, float(k), g)
        if new is not st_ and new.stuck_until is not None:
            assert not was_stuck
            windows.append((float(k), new.stuck_until))
        st_ = new
    for (a0, a1), (b0, _) in zip(windows, windows[1:]):
        assert b0 >= a1


def test_usbl_stream_values_constant_during_stuck():
    s = sn.Usbl(UsblParams(stuck_probability=0.2), rng(8))
    g = rng(1)
    prev = None
    for k in range(500):
        stuck = s.stuck.is_stuck(float(k))
        z = s.sample(random_state(g), float(k), 1.0)
        if stuck:
            assert np.array_equal(z.values, prev)
        prev = z.values
        assert np.allclose(z.covariance, np.eye(3) * 0.25)


# -- surface fix ---------------------------------------------------------------

def test_surface_fix_zero_noise():
    truth = random_state(rng(3))
    z = sn.sample_surface_fix(truth, SurfaceFixParams(0.0), rng())
    assert np.array_equal(z.values, truth[:3]) and z.mask == (0, 1, 2)


def test_surface_fix_calibration_and_replay():
    truth = random_state(rng(3))
    g = rng(7)
    vals = np.array([sn.sample_surface_fix(truth, SurfaceFixParams(), g).values
                     for _ in range(10_000)])
    assert abs((vals - truth[:3]).std() / 0.05 - 1) < 0.05
    a = sn.sample_surface_fix(truth, SurfaceFixParams(), rng(99))
    b = sn.sample_surface_fix(truth, SurfaceFixParams(), rng(99))
    assert np.array_equal(a.values, b.values)


def test_masks_are_disjoint_within_measurements():
    truth = random_state(rng(3))
    for z in (sn.sample_imu(truth, BiasState(), ImuParams(), 0.05, rng()),
              sn.sample_dvl(truth, DvlParams(), rng()),
              sn.sample_pressure(truth, PressureParams(), rng()),
              sn.sample_surface_fix(truth, SurfaceFixParams(), rng())):
        assert len(set(z.mask)) == len(z.mask)

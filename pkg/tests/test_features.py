import time

import numpy as np
import pytest

from qhardy.features import (
    cauchy_kernel_eval,
    cauchy_log,
    cauchy_log_closed_form,
    cr_operator_residual,
    cr_residuals,
    default_eps,
    hardy_jet,
    local_features,
    quaternion_log,
    reconstruct,
)
from qhardy.fixtures import gaussian_blob, smooth_image
from qhardy.quaternion import Quaternion, conjugate, exp_pure, mul
from qhardy.scale_space import HardyFrame, hardy_lift, hardy_lift_derivs


@pytest.fixture(scope="module")
def frame():
    return hardy_lift(smooth_image(48), 0.8, 1.1)


def scaled(frame, lam):
    return HardyFrame(lam * frame.r, lam * frame.m1, lam * frame.m2, lam * frame.m3,
                      frame.y1, frame.y2, frame.spacing, frame.radius, frame.normalize)


class TestLocalFeatures:
    def test_identities(self, frame):
        ff = local_features(frame)
        total = frame.r**2 + frame.m1**2 + frame.m2**2 + frame.m3**2
        assert np.max(np.abs(ff.A**2 - total)) < 1e-10
        assert np.max(np.abs(ff.a - np.log(ff.A))) < 1e-12
        assert np.all((ff.theta >= 0) & (ff.theta <= np.pi))
        assert np.allclose(ff.phase_vector_norm(), ff.theta)
        assert ff.p.shape == (3, 48, 48)

    def test_polar_form_recovers_quaternion(self, frame):
        ff = local_features(frame)
        q = frame.as_quaternion()
        p = np.stack([np.zeros_like(ff.p1), ff.p1, ff.p2, ff.p3], axis=-1)
        rebuilt = np.exp(ff.a)[..., None] * exp_pure(p)
        assert np.max(np.abs(rebuilt - q)) < 1e-12

    def test_reconstruct_round_trip(self, frame):
        r, m1, m2, m3 = reconstruct(local_features(frame))
        for got, want in zip((r, m1, m2, m3), frame.fields()):
            assert np.max(np.abs(got - want)) < 1e-9

    def test_positive_scaling(self, frame):
        base = local_features(frame)
        for lam in (0.01, 7.0):
            other = local_features(scaled(frame, lam))
            assert np.max(np.abs(other.theta - base.theta)) < 1e-10
            assert np.max(np.abs(other.a - base.a - np.log(lam))) < 1e-10

    def test_negative_scalar_part_gives_obtuse_phase(self):
        fr = hardy_lift(-smooth_image(32).data, 0.5, 0.5)
        ff = local_features(fr)
        assert np.all(ff.theta > np.pi / 2)

    def test_constant_image_has_zero_phase(self):
        ff = local_features(hardy_lift(np.full((20, 20), 4.0), 0.5, 0.5))
        assert np.max(np.abs(ff.theta)) < 1e-12
        assert np.max(np.abs(ff.p)) == 0.0
        assert np.allclose(ff.a, np.log(4.0))

    def test_zero_image_is_finite(self):
        ff = local_features(hardy_lift(np.zeros((20, 20)), 0.5, 0.5))
        assert np.all(np.isfinite(ff.a))
        assert default_eps(hardy_lift(np.zeros((20, 20)), 0.5, 0.5)) > 0


def unit_field(img, y1, y2, R):
    q = hardy_lift(img, y1, y2, radius=R).as_quaternion()
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


class TestHardyJet:
    """Phase rates checked against finite differences of the unit quaternion ``e^p``."""

    def setup_method(self):
        self.img = smooth_image(32)
        self.y = (1.2, 0.9)
        self.R = 10.0
        self.frame = hardy_lift(self.img, *self.y, radius=self.R)
        self.jet = hardy_jet(self.frame, hardy_lift_derivs(self.img, *self.y, radius=self.R))

    def fd_unit(self, axis, d=1e-4):
        y = np.array(self.y)
        e = np.zeros(2)
        e[axis] = d
        up = unit_field(self.img, *(y + e), self.R)
        dn = unit_field(self.img, *(y - e), self.R)
        return (up - dn) / (2 * d)

    def test_left_rate_in_y1(self):
        u = unit_field(self.img, *self.y, self.R)
        oracle = mul(self.fd_unit(0), conjugate(u))
        got = np.moveaxis(self.jet.left_rate("y1"), 0, -1)
        assert np.max(np.abs(oracle[..., 0])) < 1e-6
        assert np.max(np.abs(got - oracle[..., 1:])) < 1e-6

    def test_right_rate_in_y2(self):
        u = unit_field(self.img, *self.y, self.R)
        oracle = mul(conjugate(u), self.fd_unit(1))
        got = np.moveaxis(self.jet.right_rate("y2"), 0, -1)
        assert np.max(np.abs(got - oracle[..., 1:])) < 1e-6

    def test_attenuation_rate_in_y(self):
        d = 1e-4
        for axis, v in ((0, "y1"), (1, "y2")):
            y = np.array(self.y)
            e = np.zeros(2)
            e[axis] = d
            a_up = np.log(hardy_lift(self.img, *(y + e), radius=self.R).amplitude())
            a_dn = np.log(hardy_lift(self.img, *(y - e), radius=self.R).amplitude())
            assert np.max(np.abs(self.jet.da(v) - (a_up - a_dn) / (2 * d))) < 1e-6

    def test_phase_vector_rate(self):
        d = 1e-4
        y = np.array(self.y)
        up = local_features(hardy_lift(self.img, y[0] + d, y[1], radius=self.R)).p
        dn = local_features(hardy_lift(self.img, y[0] - d, y[1], radius=self.R)).p
        assert np.max(np.abs(self.jet.dp("y1") - (up - dn) / (2 * d))) < 1e-6

    def test_spatial_left_rate_converges(self):
        # central differences of r, m versus of the unit field; both tend to the same rate
        errs = []
        for n, h in ((64, 0.5), (128, 0.25)):
            fr = hardy_lift(smooth_image(n, h), 1.2, 0.9, radius=10.0)
            jet = hardy_jet(fr)
            u = fr.as_quaternion() / fr.amplitude()[..., None]
            oracle = mul(np.gradient(u, h, axis=1), conjugate(u))[..., 1:]
            got = np.moveaxis(jet.left_rate("t1"), 0, -1)
            b = int(10 / h)
            errs.append(np.max(np.abs(got - oracle)[b:-b, b:-b]))
        assert errs[1] < errs[0] / 3
        assert errs[1] < 1e-3


class TestCRResiduals:
    def test_blob_converges(self):
        t0 = time.perf_counter()
        coarse = cr_residuals(gaussian_blob(64, 1.0), 2.0, 2.0)
        fine = cr_residuals(gaussian_blob(128, 0.5), 2.0, 2.0)
        assert time.perf_counter() - t0 < 30
        for key in ("t1", "y1", "t2", "y2"):
            c, f = coarse.max_interior[key], fine.max_interior[key]
            assert np.isfinite(c) and c > 0
            assert c / f >= 1.5
        assert coarse.flagged == 0

    def test_vector_channels_vanish(self):
        rep = cr_residuals(gaussian_blob(64, 1.0), 2.0, 2.0)
        for key in ("t1_vec_j", "t1_vec_k", "t2_vec_i", "t2_vec_k"):
            assert rep.max_interior[key] < 1e-10

    def test_phase_form_matches_direct_residuals(self, rng):
        rep = cr_residuals(gaussian_blob(64, 1.0), 2.0, 2.0)
        idx = np.argwhere(rep.mask)
        pick = idx[rng.choice(len(idx), 20, replace=False)]
        for key, arr in (("t1", rep.res_t1), ("y1", rep.res_y1), ("t2", rep.res_t2), ("y2", rep.res_y2)):
            for i, j in pick:
                assert abs(rep.phase_form[key][i, j] - arr[i, j]) < 1e-6

    def test_constant_image(self):
        # renormalised kernels keep constants exactly constant at every scale
        rep = cr_residuals(np.full((32, 32), 2.0), 1.0, 1.0, radius=8.0, normalize=True)
        assert all(v == 0.0 for v in rep.main_maxima().values())
        for arr in (rep.res_t1, rep.res_y1, rep.res_t2, rep.res_y2):
            assert np.max(np.abs(arr)) < 1e-12


class TestCauchyKernel:
    def test_values(self):
        assert cauchy_kernel_eval((1, 0), (1, 0)).isclose(Quaternion(1, 0, 0, 0))
        assert cauchy_kernel_eval((0, 1), (0, 1)).isclose(Quaternion(0, 0, 0, 1))
        with pytest.raises(ValueError):
            cauchy_kernel_eval((0, 0), (1, 1))
        with pytest.raises(ValueError):
            cauchy_log(1.0, 1.0, 0.0, 0.0)

    def test_closed_form_matches_polar_log(self, rng):
        pts = rng.uniform(0.2, 2.0, size=(4, 50)) * np.array([[1], [1], [1], [1]])
        pts[0] *= rng.choice([-1, 1], 50)
        pts[2] *= rng.choice([-1, 1], 50)
        assert np.max(np.abs(cauchy_log(*pts) - cauchy_log_closed_form(*pts))) < 1e-12

    def test_log_inverts_exponential(self, rng):
        q = rng.normal(size=(30, 4))
        lg = quaternion_log(q)
        v = np.concatenate([np.zeros((30, 1)), lg[:, 1:]], axis=1)
        assert np.max(np.abs(np.exp(lg[:, :1]) * exp_pure(v) - q)) < 1e-12

    def test_kernel_is_holomorphic_but_its_log_is_not(self):
        from qhardy.features import _cauchy_array

        point = (1.0, 1.0, 1.0, 1.0)
        prev = None
        for h in (1e-2, 1e-3, 1e-4):
            left, right = cr_operator_residual(_cauchy_array, point, h)
            assert left < 10 * h**2 and right < 10 * h**2
            ll, rr = cr_operator_residual(cauchy_log, point, h)
            assert ll > 0.01 and rr > 0.01
            if prev is not None:
                assert abs(ll - prev) < 1e-3
            prev = ll

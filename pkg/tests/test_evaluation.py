import math
import re

import numpy as np
import pytest

from qhardy.evaluation import (
    CSV_HEADER,
    BenchRow,
    NoiseKind,
    NoiseSpec,
    add_noise,
    benchmark,
    calibrate,
    cell_seed,
    edge_image,
    localization_error,
    psnr,
    rows_to_csv,
    snr,
    ssim,
)
from qhardy.fixtures import square_image
from qhardy.scale_space import ScalarField


def ssim_oracle(x, y, win=8):
    c1, c2 = (0.01 * 255) ** 2, (0.03 * 255) ** 2
    vals = []
    for i in range(x.shape[0] - win + 1):
        for j in range(x.shape[1] - win + 1):
            a = x[i : i + win, j : j + win]
            b = y[i : i + win, j : j + win]
            ma, mb = a.mean(), b.mean()
            va, vb = a.var(), b.var()
            cab = ((a - ma) * (b - mb)).mean()
            vals.append((2 * ma * mb + c1) * (2 * cab + c2) / ((ma**2 + mb**2 + c1) * (va + vb + c2)))
    return float(np.mean(vals))


class TestNoise:
    def test_zero_strength_is_identity(self, rng):
        img = rng.integers(0, 256, (20, 20)).astype(float)
        for spec in (NoiseSpec("salt_pepper", density=0.0), NoiseSpec("gaussian", variance=0.0),
                     NoiseSpec("speckle", variance=0.0)):
            assert np.array_equal(add_noise(img, spec).data, img)

    def test_salt_pepper_count_is_binomial(self):
        img = np.full((100, 100), 128.0)
        n, p = 10000, 0.1
        sigma = math.sqrt(n * p * (1 - p))
        for seed in range(50):
            noisy = add_noise(img, NoiseSpec("salt_pepper", density=p, seed=seed)).data
            changed = np.count_nonzero(noisy != img)
            assert abs(changed - n * p) <= 3 * sigma
            assert set(np.unique(noisy[noisy != img])) <= {0.0, 255.0}

    def test_gaussian_statistics(self):
        img = np.full((200, 200), 128.0)
        noisy = add_noise(img, NoiseSpec("gaussian", variance=0.001, seed=1)).data
        assert np.std(noisy - img) == pytest.approx(math.sqrt(0.001) * 255, rel=0.03)

    def test_poisson_mean(self):
        img = np.full((200, 200), 40.0)
        noisy = add_noise(img, NoiseSpec("poisson", seed=3)).data
        assert noisy.mean() == pytest.approx(40.0, rel=0.01)
        assert noisy.var() == pytest.approx(40.0, rel=0.05)

    def test_speckle_scales_with_intensity(self):
        img = np.zeros((10, 10))
        assert np.array_equal(add_noise(img, NoiseSpec("speckle", variance=0.5, seed=1)).data, img)

    def test_deterministic_and_clipped(self, rng):
        img = rng.integers(0, 256, (32, 32)).astype(float)
        spec = NoiseSpec("gaussian", variance=0.05, seed=42)
        a, b = add_noise(img, spec).data, add_noise(img, spec).data
        assert np.array_equal(a, b)
        assert a.min() >= 0 and a.max() <= 255
        assert not np.array_equal(a, add_noise(img, NoiseSpec("gaussian", variance=0.05, seed=43)).data)

    def test_keeps_spacing(self):
        out = add_noise(ScalarField(np.zeros((4, 4)), 0.5), NoiseSpec("poisson"))
        assert out.spacing == 0.5

    def test_validation(self):
        with pytest.raises(ValueError):
            add_noise(np.full((4, 4), 300.0), NoiseSpec("gaussian", variance=0.1))
        with pytest.raises(ValueError):
            add_noise(np.full((4, 4), -1.0), NoiseSpec("gaussian", variance=0.1))
        with pytest.raises(ValueError):
            NoiseSpec("salt_pepper", density=1.5)
        with pytest.raises(ValueError):
            NoiseSpec("gaussian", variance=-1)
        with pytest.raises(ValueError):
            NoiseSpec("uniform")

    def test_snr_falls_with_variance(self):
        img = square_image().data
        means = []
        for var in (0.001, 0.01, 0.05, 0.2):
            means.append(np.mean([snr(img, add_noise(img, NoiseSpec("gaussian", variance=var, seed=s)))
                                  for s in range(20)]))
        assert all(a > b for a, b in zip(means, means[1:]))

    @pytest.mark.parametrize("kind", ["gaussian", "salt_pepper", "speckle"])
    def test_calibrate_hits_target(self, kind):
        img = square_image()
        spec = calibrate(img, NoiseSpec(kind, seed=5), 15.0)
        assert abs(snr(img, add_noise(img, spec)) - 15.0) <= 0.2

    def test_calibrate_edge_cases(self):
        img = square_image()
        spec = NoiseSpec("poisson", seed=2)
        assert calibrate(img, spec, 20.0) == spec
        with pytest.raises(ValueError):
            calibrate(img, NoiseSpec("salt_pepper"), -30.0)


class TestMetrics:
    def test_psnr(self):
        a = np.zeros((10, 10))
        b = a.copy()
        b[::2, :] = 1.0
        b[1::2, :] = -1.0
        assert psnr(a, b) == pytest.approx(48.13, abs=0.01)
        assert psnr(a, b) == psnr(b, a)
        assert psnr(a, a) == math.inf
        with pytest.raises(ValueError):
            psnr(a, np.zeros((3, 3)))

    def test_snr(self):
        clean = np.full((4, 4), 10.0)
        assert snr(clean, clean + 1.0) == pytest.approx(20.0)
        assert snr(clean, clean) == math.inf

    def test_ssim_identity_and_range(self, rng):
        x = rng.integers(0, 256, (24, 24)).astype(float)
        assert ssim(x, x) == 1.0
        y = np.clip(x + rng.normal(0, 30, x.shape), 0, 255)
        v = ssim(x, y)
        assert 0.0 <= v < 1.0

    def test_ssim_matches_window_oracle(self, rng):
        x = rng.integers(0, 256, (12, 13)).astype(float)
        y = np.clip(x + rng.normal(0, 40, x.shape), 0, 255)
        assert ssim(x, y) == pytest.approx(ssim_oracle(x, y), abs=1e-12)

    def test_ssim_of_inverted_checkerboard(self):
        x = np.indices((8, 8)).sum(axis=0) % 2 * 255.0
        assert ssim(x, 255 - x) < 0.01
        assert ssim_oracle(x, 255 - x) < 0.01

    def test_ssim_validation(self):
        with pytest.raises(ValueError):
            ssim(np.zeros((4, 4)), np.ones((4, 4)))
        with pytest.raises(ValueError):
            ssim(np.zeros((8, 8)), np.zeros((9, 8)))


def test_cell_seed_is_stable():
    assert cell_seed(7, "square", "gaussian") == cell_seed(7, "square", "gaussian")
    assert cell_seed(7, "square", "gaussian") != cell_seed(7, "square", "speckle")
    assert cell_seed(7, "a", "bc") != cell_seed(7, "ab", "c")
    assert 0 <= cell_seed(0) < 2**63


def test_localization_error():
    truth = np.zeros((5, 5), bool)
    truth[:, 2] = True
    edges = np.zeros((5, 5))
    assert localization_error(edges, truth) == 0.0
    edges[0, 3] = 1
    assert localization_error(edges, truth) == 1.0
    edges[4, 0] = 1
    assert localization_error(edges, truth) == 2.0
    assert localization_error(edges, np.zeros((5, 5), bool)) == math.inf


def square_edges(img, det, kind):
    return (img.data > 128).astype(np.uint8) if det == "thresh" else np.zeros(img.shape, np.uint8)


class TestBenchmark:
    images = [("square", square_image())]

    def test_no_noise_gives_self_comparisons(self):
        rows = benchmark(self.images, ["thresh", "blank"], [], square_edges)
        assert [r.noise for r in rows] == ["none", "none"]
        assert all(r.ssim == 1.0 and r.psnr_db == math.inf and r.error is None for r in rows)

    def test_rows_and_errors(self):
        def flaky(img, det, kind):
            if det == "broken":
                raise RuntimeError("boom")
            assert kind is NoiseKind.SALT_PEPPER
            return square_edges(img, "thresh", kind)

        rows = benchmark(self.images, ["ok", "broken"], [NoiseSpec("salt_pepper", density=0.05)], flaky)
        assert len(rows) == 2
        ok, bad = rows
        assert ok.error is None and 0 <= ok.ssim <= 1 and math.isfinite(ok.snr_db)
        assert "boom" in bad.error and math.isnan(bad.ssim)
        assert bad.snr_db == ok.snr_db

    def test_csv_is_byte_stable(self):
        specs = [NoiseSpec("gaussian", variance=0.01), NoiseSpec("salt_pepper", density=0.05)]
        runs = [rows_to_csv(benchmark(self.images, ["thresh"], specs, square_edges, base_seed=3))
                for _ in range(2)]
        assert runs[0] == runs[1]
        lines = runs[0].split("\n")
        assert lines[0] == ",".join(CSV_HEADER)
        assert runs[0].endswith("\n") and "\r" not in runs[0]
        fields = lines[1].split(",")
        assert fields[0:2] == ["square", "gaussian"]
        assert all(re.fullmatch(r"-?\d+\.\d{4}|inf|nan", f) for f in (fields[2], fields[4], fields[5]))
        assert re.fullmatch(r"\d+\.\d{4}", fields[2])

    def test_csv_special_values(self):
        text = rows_to_csv([BenchRow("a", "none", math.inf, "qdla", math.inf, 1.0),
                            BenchRow("a", "x", math.nan, "qdla", math.nan, math.nan, "err")])
        assert text.splitlines()[1] == "a,none,inf,qdla,inf,1.0000"
        assert text.splitlines()[2] == "a,x,nan,qdla,nan,nan"


def test_edge_image():
    assert edge_image(np.array([[0, 1], [2, 0]])).tolist() == [[0.0, 255.0], [255.0, 0.0]]

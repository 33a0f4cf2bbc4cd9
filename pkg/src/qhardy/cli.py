"""Command-line interface: ``qhardy {detect,features,noise,bench,verify}``.

Every option can also come from a flat ``key = value`` file passed with
``--config``; explicit flags beat the file, which beats built-in defaults.
Exit codes: 0 success, 2 usage error, 3 data error, 4 verification failure.
"""
from __future__ import annotations

import argparse
import configparser
import math
import sys
import time
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np

from .detectors import Detector
from .evaluation import (
    TABLE_SCALES,
    NoiseKind,
    NoiseSpec,
    add_noise,
    benchmark,
    calibrate,
    cell_seed,
    rows_to_csv,
    snr,
)
from .features import cauchy_log, cr_operator_residual, cr_residuals, local_features
from .fixtures import FIXTURES, gaussian_blob, make_fixture
from .image_io import ImageFormatError, load_image, save_image
from .pipeline import DEFAULT_NMS_RADIUS, DEFAULT_SCALE, RunConfig, StageError, detect_edges
from .qft import spectrum_onesided_check
from .scale_space import ScalarField, hardy_lift

__all__ = ["main", "build_parser", "resolve_options", "OPTIONS"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_VERIFY = 4

# Tolerances used by ``verify``.
SPECTRAL_TOL = 1e-8
CR_RATIO_MIN = 1.5
CAUCHY_MIN_RESIDUAL = 0.01


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


def _bool(text: str) -> bool:
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_float(text: str) -> Optional[float]:
    return None if str(text).strip().lower() in ("", "none") else float(text)


def _csv_list(text: str) -> list[str]:
    return [s.strip() for s in str(text).split(",") if s.strip()]


VERIFY_FIXTURES = {"random": "spectral", "blob": "cr", "cauchy": "cauchy"}

# name -> (converter, default); defaults not listed here are ``None``.
OPTIONS: dict[str, tuple[Callable[[str], Any], Any]] = {
    "input": (str, None),
    "fixture": (str, None),
    "output": (str, None),
    "detector": (str, Detector.QDLA.value),
    "y1": (float, DEFAULT_SCALE),
    "y2": (float, DEFAULT_SCALE),
    "nms_radius": (float, DEFAULT_NMS_RADIUS),
    "low": (_opt_float, None),
    "high": (_opt_float, None),
    "normalize": (_bool, True),
    "auto_baseline": (_bool, False),
    "truncation": (float, 8.0),
    "noise": (str, None),
    "variance": (float, 0.01),
    "density": (float, 0.05),
    "target_snr": (_opt_float, None),
    "seed": (int, 0),
    "size": (int, 64),
    "images": (_csv_list, []),
    "fixtures": (_csv_list, ["square"]),
    "detectors": (_csv_list, ["qdla", "mqdla", "sdla", "msdla", "sobel", "canny"]),
    "noises": (_csv_list, ["poisson", "gaussian", "salt_pepper", "speckle"]),
    "timing": (_bool, True),
}


def read_config(path: str) -> dict[str, Any]:
    """Parse a flat ``key = value`` file; ``#`` and ``;`` start comments."""
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";"), delimiters=("=",)
    )
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror or exc}") from exc
    try:
        parser.read_string("[config]\n" + text, source=str(path))
    except configparser.Error as exc:
        raise UsageError(f"{path}: malformed config ({exc})") from exc
    out: dict[str, Any] = {}
    for key, raw in parser.items("config"):
        name = key.strip().replace("-", "_")
        if name not in OPTIONS:
            raise UsageError(f"{path}: unknown config key {key!r}")
        value = raw.strip().strip('"').strip("'")
        try:
            out[name] = OPTIONS[name][0](value)
        except ValueError as exc:
            raise UsageError(f"{path}: bad value for {key!r}: {exc}") from exc
    return out


def resolve_options(args: argparse.Namespace) -> dict[str, Any]:
    """Merge defaults, config file and explicit flags (in increasing priority)."""
    merged = {name: default for name, (_, default) in OPTIONS.items()}
    config_path = getattr(args, "config", None)
    if config_path:
        merged.update(read_config(config_path))
    for name in OPTIONS:
        if hasattr(args, name):
            merged[name] = getattr(args, name)
    return merged


def _add(p: argparse.ArgumentParser, *names: str, **kw) -> None:
    p.add_argument(*names, default=argparse.SUPPRESS, **kw)


def _source_args(p: argparse.ArgumentParser) -> None:
    _add(p, "--input", "-i", help="input image (binary PGM or PNG)")
    _add(p, "--fixture", choices=sorted(FIXTURES), help="use a synthetic image instead of --input")
    _add(p, "--size", type=int, help="fixture size in pixels (default 64)")


def _lift_args(p: argparse.ArgumentParser) -> None:
    _add(p, "--y1", type=float, help=f"scale along t1 (default {DEFAULT_SCALE})")
    _add(p, "--y2", type=float, help=f"scale along t2 (default {DEFAULT_SCALE})")
    _add(p, "--truncation", type=float, help="kernel radius in multiples of the scale (default 8)")


def _pipeline_args(p: argparse.ArgumentParser) -> None:
    _add(p, "--detector", "-d", choices=[d.value for d in Detector], help="edge detector (default qdla)")
    _add(p, "--nms-radius", dest="nms_radius", type=float, help="NMS sampling radius (default 1.5)")
    _add(p, "--low", type=float, help="hysteresis low threshold (default per detector)")
    _add(p, "--high", type=float, help="hysteresis high threshold (default per detector)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--normalize", dest="normalize", action="store_true", default=argparse.SUPPRESS,
                   help="rescale NMS magnitudes to [0, 100] before thresholding (default)")
    g.add_argument("--no-normalize", dest="normalize", action="store_false", default=argparse.SUPPRESS,
                   help="threshold raw magnitudes")
    _add(p, "--auto-baseline", dest="auto_baseline", action="store_true",
         help="let Sobel/Canny choose thresholds from their magnitude histogram")


def _noise_args(p: argparse.ArgumentParser) -> None:
    _add(p, "--variance", type=float, help="gaussian/speckle variance (default 0.01)")
    _add(p, "--density", type=float, help="salt-and-pepper density (default 0.05)")
    _add(p, "--target-snr", dest="target_snr", type=float,
         help="calibrate variance/density to this SNR in dB")
    _add(p, "--seed", type=int, help="random seed (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qhardy", description="Quaternion Hardy scale-space edge analysis.")
    parser.add_argument("--config", help="flat key=value file with default options")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="detect edges and write a binary edge image")
    _source_args(p)
    _lift_args(p)
    _pipeline_args(p)
    _noise_args(p)
    _add(p, "--noise", choices=[k.value for k in NoiseKind], help="corrupt the input before detection")
    _add(p, "--output", "-o", help="edge image path (.png or .pgm)")
    _add(p, "--timing", type=_bool, help="print per-stage wall time (default true)")

    p = sub.add_parser("features", help="write amplitude, attenuation, phase and |p| images")
    _source_args(p)
    _lift_args(p)
    _add(p, "--output", "-o", help="output directory")

    p = sub.add_parser("noise", help="corrupt an image with synthetic noise")
    _source_args(p)
    _noise_args(p)
    _add(p, "--noise", choices=[k.value for k in NoiseKind], help="noise kind")
    _add(p, "--output", "-o", help="noisy image path")

    p = sub.add_parser("bench", help="score noisy against clean edge maps (CSV)")
    _add(p, "--images", type=_csv_list, help="comma-separated image paths")
    _add(p, "--fixtures", type=_csv_list, help="comma-separated fixture names (default square)")
    _add(p, "--size", type=int, help="fixture size in pixels (default 64)")
    _add(p, "--detectors", type=_csv_list, help="comma-separated detectors (default all six)")
    _add(p, "--noises", type=_csv_list, help="comma-separated noise kinds, or 'none'")
    _pipeline_args(p)
    _noise_args(p)
    _add(p, "--output", "-o", help="CSV path (default stdout)")

    p = sub.add_parser("verify", help="numerical checks of the spectral and Cauchy-Riemann identities")
    p.add_argument("--check", choices=["all", "spectral", "cr", "cauchy"], default="all",
                   help="which check to run (default all)")
    p.add_argument("--fixture", choices=sorted(VERIFY_FIXTURES), default=None,
                   help="run the check attached to a fixture: random (spectral), blob (cr), cauchy")
    _add(p, "--seed", type=int, help="seed for the random spectral fixture (default 0)")
    for p in sub.choices.values():
        _add(p, "--config", help="flat key=value file with default options")
    return parser


def _load_source(opts: dict[str, Any]) -> tuple[str, ScalarField]:
    if opts["input"] and opts["fixture"]:
        raise UsageError("give either --input or --fixture, not both")
    if opts["input"]:
        try:
            return Path(opts["input"]).stem, load_image(opts["input"])
        except ImageFormatError as exc:
            raise DataError(str(exc)) from exc
    if opts["fixture"]:
        try:
            return opts["fixture"], make_fixture(opts["fixture"], opts["size"])
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    raise UsageError("an input image (--input) or --fixture is required")


def _fixture_for_noise(img: ScalarField) -> ScalarField:
    # fixtures outside [0, 255] (e.g. the unit-height blob) are stretched for noise runs
    lo, hi = float(img.data.min()), float(img.data.max())
    if lo >= 0 and hi <= 255:
        return img
    span = hi - lo if hi > lo else 1.0
    return img.with_data((img.data - lo) * (255.0 / span))


def _run_config(opts: dict[str, Any], **overrides) -> RunConfig:
    values = dict(
        detector=opts["detector"],
        y1=opts["y1"],
        y2=opts["y2"],
        nms_radius=opts["nms_radius"],
        low=opts["low"],
        high=opts["high"],
        normalize=opts["normalize"],
        auto_baseline=opts["auto_baseline"],
        truncation=opts["truncation"],
        seed=opts["seed"],
    )
    values.update(overrides)
    try:
        return RunConfig(**values)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _noise_spec(opts: dict[str, Any], kind: str, img: ScalarField, seed: int) -> NoiseSpec:
    try:
        spec = NoiseSpec(kind, variance=opts["variance"], density=opts["density"], seed=seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if opts["target_snr"] is not None:
        try:
            spec = calibrate(img, spec, opts["target_snr"])
        except ValueError as exc:
            raise DataError(str(exc)) from exc
    return spec


def _require_output(opts: dict[str, Any]) -> Path:
    if not opts["output"]:
        raise UsageError("--output is required")
    return Path(opts["output"])


def _save(field, path: Path) -> None:
    try:
        save_image(field, path)
    except ImageFormatError as exc:
        raise DataError(str(exc)) from exc


def cmd_detect(opts: dict[str, Any], out) -> int:
    cfg = _run_config(opts)
    out_path = _require_output(opts)
    t0 = time.perf_counter()
    _, img = _load_source(opts)
    load_time = time.perf_counter() - t0
    if opts["noise"]:
        img = _fixture_for_noise(img)
        spec = _noise_spec(opts, opts["noise"], img, opts["seed"])
        try:
            noisy = add_noise(img, spec)
        except ValueError as exc:
            raise DataError(str(exc)) from exc
        print(f"noise {spec.kind.value}: snr {snr(img, noisy):.4f} dB", file=out)
        img = noisy
    try:
        result = detect_edges(img, cfg)
    except StageError as exc:
        raise DataError(str(exc)) from exc
    t0 = time.perf_counter()
    _save(result.edges.astype(np.float64) * 255.0, out_path)
    save_time = time.perf_counter() - t0
    low, high = result.thresholds
    print(
        f"{cfg.detector.value}: {int(result.edges.sum())} edge pixels, "
        f"thresholds {low:g}/{high:g}{' (normalized)' if cfg.normalize else ''}",
        file=out,
    )
    if opts["timing"]:
        stages = {"load": load_time, **result.timings, "save": save_time}
        for name, secs in stages.items():
            print(f"  {name:<10s} {secs * 1e3:9.2f} ms", file=out)
    return EXIT_OK


def _to_display(values: np.ndarray) -> np.ndarray:
    lo, hi = float(np.min(values)), float(np.max(values))
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        return np.zeros_like(values)
    return (values - lo) * (255.0 / (hi - lo))


def cmd_features(opts: dict[str, Any], out) -> int:
    out_dir = _require_output(opts)
    _, img = _load_source(opts)
    if not (opts["y1"] > 0 and opts["y2"] > 0):
        raise UsageError("scales must be positive")
    try:
        frame = hardy_lift(img, opts["y1"], opts["y2"], truncation=opts["truncation"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    ff = local_features(frame)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"{out_dir}: {exc.strerror or exc}") from exc
    maps = {
        "amplitude": ff.A,
        "attenuation": ff.a,
        "phase": ff.theta,
        "phase_vector_norm": ff.phase_vector_norm(),
    }
    for name, values in maps.items():
        path = out_dir / f"{name}.png"
        _save(_to_display(values), path)
        print(f"{name}: [{float(values.min()):.6g}, {float(values.max()):.6g}] -> {path}", file=out)
    return EXIT_OK


def cmd_noise(opts: dict[str, Any], out) -> int:
    if not opts["noise"]:
        raise UsageError("--noise is required")
    out_path = _require_output(opts)
    _, img = _load_source(opts)
    img = _fixture_for_noise(img)
    spec = _noise_spec(opts, opts["noise"], img, opts["seed"])
    try:
        noisy = add_noise(img, spec)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    _save(noisy, out_path)
    if spec.kind is NoiseKind.SALT_PEPPER:
        param = f"density {spec.density:.6g}, "
    elif spec.kind is NoiseKind.POISSON:
        param = ""
    else:
        param = f"variance {spec.variance:.6g}, "
    print(f"{spec.kind.value}: {param}snr {snr(img, noisy):.4f} dB", file=out)
    return EXIT_OK


def cmd_bench(opts: dict[str, Any], out) -> int:
    images: list[tuple[str, ScalarField]] = []
    for path in opts["images"]:
        try:
            images.append((Path(path).stem, load_image(path)))
        except ImageFormatError as exc:
            raise DataError(str(exc)) from exc
    if not opts["images"]:
        for name in opts["fixtures"]:
            try:
                images.append((name, _fixture_for_noise(make_fixture(name, opts["size"]))))
            except ValueError as exc:
                raise UsageError(str(exc)) from exc
    detectors = opts["detectors"]
    for d in detectors:
        try:
            Detector(d)
        except ValueError:
            raise UsageError(f"unknown detector {d!r}") from None
    kinds = [k for k in opts["noises"] if k != "none"]
    for k in kinds:
        try:
            NoiseKind(k)
        except ValueError:
            raise UsageError(f"unknown noise kind {k!r}") from None
    base = _run_config(opts)

    def edge_fn(img, det, kind):
        y = TABLE_SCALES[kind] if kind is not None else None
        cfg = base.evolve(detector=Detector(det), **({} if y is None else {"y1": y, "y2": y}))
        return detect_edges(img, cfg).edges

    rows = []
    for name, img in images:
        specs = [
            _noise_spec(opts, k, img, cell_seed(opts["seed"], name, k)) for k in kinds
        ]
        rows.extend(benchmark([(name, img)], detectors, specs, edge_fn, base_seed=opts["seed"]))
    text = rows_to_csv(rows)
    if opts["output"]:
        try:
            with open(opts["output"], "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            raise DataError(f"{opts['output']}: {exc.strerror or exc}") from exc
    else:
        out.write(text)
    for r in rows:
        if r.error:
            print(f"cell {r.image}/{r.noise}/{r.detector} failed: {r.error}", file=sys.stderr)
    return EXIT_OK


def _verdict(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


def verify_spectral(seed: int, out) -> bool:
    rng = np.random.Generator(np.random.PCG64(seed))
    rep = spectrum_onesided_check(rng.random((32, 32)))
    ok = rep.max_leak < SPECTRAL_TOL and rep.factor_error < SPECTRAL_TOL
    print(f"spectral  max_leak {rep.max_leak:.3e}  factor_error {rep.factor_error:.3e}  "
          f"(tol {SPECTRAL_TOL:g})  {_verdict(ok)}", file=out)
    return ok


def verify_cr(out) -> bool:
    coarse = cr_residuals(gaussian_blob(64, 1.0), 2.0, 2.0).main_maxima()
    fine = cr_residuals(gaussian_blob(128, 0.5), 2.0, 2.0).main_maxima()
    ok = True
    print("cauchy-riemann  blob y1=y2=2, spacing 1 -> 0.5", file=out)
    for key in ("t1", "y1", "t2", "y2"):
        ratio = coarse[key] / fine[key] if fine[key] > 0 else math.inf
        good = math.isfinite(coarse[key]) and ratio >= CR_RATIO_MIN
        ok &= good
        print(f"  {key:<3s} {coarse[key]:.3e} -> {fine[key]:.3e}  ratio {ratio:.2f}  {_verdict(good)}", file=out)
    return ok


def verify_cauchy(out) -> bool:
    """The log of the Cauchy kernel is not holomorphic; a large residual is expected."""
    point = (1.0, 1.0, 1.0, 1.0)
    left, right = cr_operator_residual(cauchy_log, point, 1e-4)
    expected = left > CAUCHY_MIN_RESIDUAL and right > CAUCHY_MIN_RESIDUAL
    print(f"cauchy-log  left {left:.4f}  right {right:.4f}  "
          f"holomorphy FAIL (expected nonzero: log of the Cauchy kernel is not holomorphic)"
          f"  {'as expected' if expected else 'UNEXPECTED'}", file=out)
    return expected


def cmd_verify(opts: dict[str, Any], check: str, out) -> int:
    ok = True
    if check in ("all", "spectral"):
        ok &= verify_spectral(opts["seed"], out)
    if check in ("all", "cr"):
        ok &= verify_cr(out)
    if check in ("all", "cauchy"):
        ok &= verify_cauchy(out)
    print(f"verify: {_verdict(ok)}", file=out)
    return EXIT_OK if ok else EXIT_VERIFY


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        opts = resolve_options(args)
        if args.command == "detect":
            return cmd_detect(opts, out)
        if args.command == "features":
            return cmd_features(opts, out)
        if args.command == "noise":
            return cmd_noise(opts, out)
        if args.command == "bench":
            return cmd_bench(opts, out)
        check = VERIFY_FIXTURES[args.fixture] if args.fixture else args.check
        return cmd_verify(opts, check, out)
    except UsageError as exc:
        print(f"qhardy: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"qhardy: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

"""Command-line pipeline: phantom, mask, subsample, inpaint, metrics, sweep.

Exit codes: 0 success, 2 usage error, 1 runtime error (single-line stderr
diagnostic). All randomness is controlled by explicit seeds, so reruns
with identical flags reproduce identical outputs (wall time aside).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bpfa import BpfaHyperParams, inpaint, save_diagnostics_csv, save_dictionary
from .maps_io import (
    MapImage,
    MapKind,
    MetricsRecord,
    load_map,
    save_map,
    write_metrics_csv,
)
from .phantom import PhantomSpec, generate_phantom
from .plots import plot_sweep_figures
from .quality import SsimParams, psnr, ssim
from .sampling import (
    acquisition_time_estimate,
    apply_acquisition,
    generate_uniform_mask,
    load_mask,
    save_mask,
)

DEFAULT_RATIOS = [0.01, 0.05, 0.10, 0.15, 0.25]
DEFAULT_SEEDS = [0, 1, 2, 3, 4]
DEFAULT_PATTERNS_PER_SECOND = 1623.4


def _save_labels(labels: np.ndarray, path) -> None:
    """Grain labels as 16-bit big-endian P5."""
    h, w = labels.shape
    header = b"P5\n%d %d\n65535\n" % (w, h)
    Path(path).write_bytes(header + labels.astype(">u2").tobytes())


def _add_bpfa_args(p: argparse.ArgumentParser) -> None:
    defaults = BpfaHyperParams()
    p.add_argument("--atoms", type=int, default=defaults.n_atoms,
                   help="dictionary size K")
    p.add_argument("--burn-in", type=int, default=defaults.burn_in)
    p.add_argument("--samples", type=int, default=defaults.samples)
    p.add_argument("--patch-size", type=int, default=8)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument(
        "--keep-measured",
        choices=["auto", "yes", "no"],
        default="auto",
        help="overwrite reconstructed pixels with measured values on the sampled set",
    )


def _keep_measured_flag(value: str) -> bool | None:
    return {"auto": None, "yes": True, "no": False}[value]


def _hyperparams(args) -> BpfaHyperParams:
    return BpfaHyperParams(
        n_atoms=args.atoms,
        burn_in=args.burn_in,
        samples=args.samples,
        seed=args.seed,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ebsd-subsample",
        description="Simulate probe-subsampled EBSD map acquisition and reconstruct "
        "maps by patch-based Bayesian dictionary learning.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out-dir", type=Path, default=Path("."))
        p.add_argument("--config", type=Path, help="flat JSON config; flags override")

    p = sub.add_parser("phantom", help="generate a synthetic grain-structure map")
    common(p)
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--grains", type=int, default=60)
    p.add_argument("--boundary-width", type=float, default=1.5)

    p = sub.add_parser("mask", help="generate a probe-position sampling mask")
    common(p)
    p.add_argument("--input", type=Path, help="map file defining the grid size")
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--ratio", type=float)
    p.add_argument("--out", type=Path, help="mask path (default out-dir/mask.txt)")

    p = sub.add_parser("subsample", help="apply a sampling mask to a map")
    common(p)
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--mask", type=Path)
    p.add_argument("--ratio", type=float, help="generate a mask instead of loading one")
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("inpaint", help="reconstruct a full map from subsampled data")
    common(p)
    p.add_argument("--input", type=Path, required=True, help="full map to subsample, or "
                   "already-masked map when --mask is given")
    p.add_argument("--mask", type=Path, help="existing mask file; --input is masked data")
    p.add_argument("--ratio", type=float, help="subsample --input at this ratio first")
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--out", type=Path)
    p.add_argument("--dump-dictionary", type=Path)
    _add_bpfa_args(p)

    p = sub.add_parser("metrics", help="SSIM/PSNR between two maps")
    common(p)
    p.add_argument("--reference", type=Path, required=True)
    p.add_argument("--test", type=Path, required=True)
    p.add_argument("--ratio", type=float, default=1.0, help="recorded sampling ratio")
    p.add_argument("--out-csv", type=Path, help="append-style single-record CSV")
    p.add_argument(
        "--patterns-per-second", type=float, default=DEFAULT_PATTERNS_PER_SECOND
    )

    p = sub.add_parser("sweep", help="full ratio sweep with CSV, figures and report")
    common(p)
    p.add_argument("--ratios", type=float, nargs="+", default=DEFAULT_RATIOS)
    p.add_argument("--seeds", type=int, nargs="+", default=DEFAULT_SEEDS)
    p.add_argument(
        "--kinds",
        nargs="+",
        choices=["band_contrast", "ipf"],
        default=["band_contrast", "ipf"],
    )
    p.add_argument(
        "--patterns-per-second", type=float, default=DEFAULT_PATTERNS_PER_SECOND
    )
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--grains", type=int, default=60)
    p.add_argument("--boundary-width", type=float, default=1.5)
    p.add_argument("--save-maps", action="store_true", help="keep per-leg maps")
    _add_bpfa_args(p)
    return parser


def _apply_config(args: argparse.Namespace, argv: list[str]) -> None:
    """Overlay flat JSON config values; explicit flags win."""
    if not getattr(args, "config", None):
        return
    config = json.loads(Path(args.config).read_text())
    if not isinstance(config, dict):
        raise ValueError("config must be a flat JSON object")
    for key, value in config.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            raise ValueError(f"unknown config key: {key}")
        if f"--{dest.replace('_', '-')}" in argv:
            continue
        current = getattr(args, dest)
        if isinstance(current, Path):
            value = Path(value)
        setattr(args, dest, value)


def _grid_size(args) -> tuple[int, int]:
    if args.input is not None:
        image = load_map(args.input)
        return image.width, image.height
    if args.width and args.height:
        return args.width, args.height
    raise ValueError("give either --input or both --width and --height")


def cmd_phantom(args) -> int:
    spec = PhantomSpec(
        width=args.width,
        height=args.height,
        n_grains=args.grains,
        boundary_width_px=args.boundary_width,
        seed=args.seed,
    )
    bc, ipf, labels = generate_phantom(spec)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    save_map(bc, args.out_dir / "band_contrast.pgm")
    save_map(ipf, args.out_dir / "ipf.ppm")
    _save_labels(labels, args.out_dir / "labels.pgm")
    print(f"wrote phantom maps to {args.out_dir}")
    return 0


def cmd_mask(args) -> int:
    if args.ratio is None:
        raise ValueError("give --ratio (flag or config)")
    width, height = _grid_size(args)
    sampling = generate_uniform_mask(width * height, args.ratio, args.seed)
    out = args.out or args.out_dir / "mask.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    save_mask(sampling, out)
    print(f"wrote mask with {sampling.m} of {sampling.n_positions} positions to {out}")
    return 0


def cmd_subsample(args) -> int:
    image = load_map(args.input)
    if args.mask is not None:
        sampling = load_mask(args.mask)
    elif args.ratio is not None:
        sampling = generate_uniform_mask(image.n_positions, args.ratio, args.seed)
    else:
        raise ValueError("give --mask or --ratio")
    masked = apply_acquisition(image, sampling, args.noise_sigma, args.seed)
    out = args.out or args.out_dir / f"subsampled{args.input.suffix}"
    out.parent.mkdir(parents=True, exist_ok=True)
    save_map(masked.map, out)
    if args.mask is None:
        save_mask(sampling, out.with_suffix(".mask.txt"))
    print(f"wrote subsampled map to {out}")
    return 0


def cmd_inpaint(args) -> int:
    image = load_map(args.input)
    if args.mask is not None:
        sampling = load_mask(args.mask)
        masked = apply_acquisition(image, sampling, 0.0, args.seed)
    elif args.ratio is not None:
        sampling = generate_uniform_mask(image.n_positions, args.ratio, args.seed)
        masked = apply_acquisition(image, sampling, args.noise_sigma, args.seed)
    else:
        raise ValueError("give --mask or --ratio")
    recon, state, diag = inpaint(
        masked,
        _hyperparams(args),
        patch_size=args.patch_size,
        stride=args.stride,
        keep_measured=_keep_measured_flag(args.keep_measured),
    )
    out = args.out or args.out_dir / f"inpainted{args.input.suffix}"
    out.parent.mkdir(parents=True, exist_ok=True)
    save_map(recon, out)
    save_diagnostics_csv(diag, out.with_suffix(".diagnostics.csv"))
    if args.dump_dictionary is not None:
        save_dictionary(state, args.dump_dictionary)
    print(
        f"wrote inpainted map to {out} "
        f"(final observed RMSE {diag.rmse_observed[-1]:.4f}, "
        f"{state.active_atoms()} active atoms)"
    )
    return 0


def cmd_metrics(args) -> int:
    reference = load_map(args.reference)
    test = load_map(args.test)
    s = ssim(reference, test)
    p = psnr(reference, test)
    print(f"ssim={s:.6f} psnr_db={p:.6f}")
    if args.out_csv is not None:
        record = MetricsRecord(
            sampling_ratio=args.ratio,
            ssim=s,
            psnr_db=p,
            map_kind=reference.kind,
            seed=args.seed,
            wall_time_s=0.0,
            estimated_acquisition_s=acquisition_time_estimate(
                reference.n_positions, args.ratio, args.patterns_per_second
            ),
        )
        args.out_csv.parent.mkdir(parents=True, exist_ok=True)
        write_metrics_csv([record], args.out_csv)
    return 0


def _sweep_report(args, hp: BpfaHyperParams, n_positions: int) -> str:
    ssim_p = SsimParams()
    lines = [
        "ratio sweep report",
        "==================",
        "",
        "assumptions (values the source experiment does not pin down):",
        f"  mask family: uniform random probe positions, without replacement",
        f"  phantom: {args.width}x{args.height} Voronoi, {args.grains} grains, "
        f"boundary width {args.boundary_width} px",
        f"  patch geometry: {args.patch_size}x{args.patch_size}, stride {args.stride}",
        f"  dictionary atoms K: {hp.n_atoms}",
        f"  beta-process prior: a0={hp.a0}, b0={hp.b0}",
        f"  gamma priors: c0={hp.c0}, d0={hp.d0}, e0={hp.e0}, f0={hp.f0}",
        f"  sweeps: burn_in={hp.burn_in}, samples={hp.samples}",
        f"  keep_measured: {args.keep_measured}",
        f"  noise sigma: {args.noise_sigma}",
        f"  SSIM: {ssim_p.window_size}x{ssim_p.window_size} Gaussian window, "
        f"sigma {ssim_p.sigma}, k1={ssim_p.k1}, k2={ssim_p.k2}, L={ssim_p.dynamic_range}, "
        "interior-only averaging",
        f"  acquisition rate: {args.patterns_per_second} patterns/s over "
        f"{n_positions} probe positions",
        "",
        f"ratios: {args.ratios}",
        f"seeds: {args.seeds}",
        f"map kinds: {args.kinds}",
        "aggregation: median over seeds",
    ]
    return "\n".join(lines) + "\n"


def cmd_sweep(args) -> int:
    if sorted(args.ratios) != args.ratios:
        raise ValueError("ratios must be ascending")
    args.out_dir.mkdir(parents=True, exist_ok=True)
    spec = PhantomSpec(
        width=args.width,
        height=args.height,
        n_grains=args.grains,
        boundary_width_px=args.boundary_width,
        seed=args.seed,
    )
    bc, ipf, _ = generate_phantom(spec)
    truth = {"band_contrast": bc, "ipf": ipf}
    save_map(bc, args.out_dir / "phantom_band_contrast.pgm")
    save_map(ipf, args.out_dir / "phantom_ipf.ppm")

    records: list[MetricsRecord] = []
    csv_path = args.out_dir / "metrics.csv"
    try:
        for kind_name in args.kinds:
            reference = truth[kind_name]
            for ratio in args.ratios:
                for seed in args.seeds:
                    sampling = generate_uniform_mask(
                        reference.n_positions, ratio, seed
                    )
                    masked = apply_acquisition(
                        reference, sampling, args.noise_sigma, seed
                    )
                    hp = BpfaHyperParams(
                        n_atoms=args.atoms,
                        burn_in=args.burn_in,
                        samples=args.samples,
                        seed=seed,
                    )
                    recon, _, diag = inpaint(
                        masked,
                        hp,
                        patch_size=args.patch_size,
                        stride=args.stride,
                        keep_measured=_keep_measured_flag(args.keep_measured),
                    )
                    record = MetricsRecord(
                        sampling_ratio=ratio,
                        ssim=ssim(reference, recon),
                        psnr_db=psnr(reference, recon),
                        map_kind=reference.kind,
                        seed=seed,
                        wall_time_s=diag.wall_time_s,
                        estimated_acquisition_s=acquisition_time_estimate(
                            reference.n_positions, ratio, args.patterns_per_second
                        ),
                    )
                    records.append(record)
                    print(
                        f"{kind_name} ratio={ratio} seed={seed}: "
                        f"ssim={record.ssim:.4f} psnr={record.psnr_db:.2f} dB "
                        f"({record.wall_time_s:.1f} s)"
                    )
                    if args.save_maps:
                        suffix = ".pgm" if reference.channels == 1 else ".ppm"
                        save_map(
                            recon,
                            args.out_dir
                            / f"recon_{kind_name}_r{ratio:g}_s{seed}{suffix}",
                        )
    except Exception:
        if records:
            write_metrics_csv(records, csv_path)
        raise
    write_metrics_csv(records, csv_path)
    hp = _hyperparams(args)
    plot_sweep_figures(records, args.out_dir / "ssim.svg", args.out_dir / "psnr.svg")
    (args.out_dir / "report.txt").write_text(
        _sweep_report(args, hp, bc.n_positions)
    )
    print(f"wrote {len(records)} records to {csv_path}")
    return 0


_COMMANDS = {
    "phantom": cmd_phantom,
    "mask": cmd_mask,
    "subsample": cmd_subsample,
    "inpaint": cmd_inpaint,
    "metrics": cmd_metrics,
    "sweep": cmd_sweep,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args, argv)
        return _COMMANDS[args.command](args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface: ``hsitd {detect,synth,sweep,eval}``.

Exit codes: 0 success, 1 invalid arguments or inputs, 2 file errors,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import fields, replace
from pathlib import Path


from .cube import flatten, load_cube, load_mask, load_spectrum, normalize
from .detector import DetectionMap, roc_auc, sam_baseline
from .errors import CubeFormatError, HsiError, NumericalError, ValidationError
from .pipeline import PipelineConfig, run_pipeline
from .subspace import AdmmConfig
from .synth import SyntheticSpec, generate_scene, write_scene

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_NUMERICAL = 0, 1, 2, 3

_PIPELINE_KEYS = {f.name for f in fields(PipelineConfig)} - {"admm"}
_ADMM_KEYS = {f.name for f in fields(AdmmConfig)}
_PATH_KEYS = {"cube", "mask", "target", "out"}
SWEEP_PARAMS = {"K": int, "omega": int, "sigma": float,
                "lambda1": float, "lambda2": float, "lambda3": float, "lambda4": float}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _add_pipeline_args(p: argparse.ArgumentParser) -> None:
    d = PipelineConfig()
    a = AdmmConfig()
    g = p.add_argument_group("model parameters (flags override --config, which overrides defaults)")
    g.add_argument("--K", type=int, help=f"background subspace size (default {d.K})")
    for i in range(1, 5):
        g.add_argument(f"--lambda{i}", type=float,
                       help=f"trade-off weight lambda{i} (default {getattr(d, f'lambda{i}')})")
    g.add_argument("--sigma", type=float,
                   help=f"squared-distance threshold for graph edges (default {d.sigma})")
    g.add_argument("--omega", type=int, help=f"region side length in pixels (default {d.omega})")
    g.add_argument("--warm-start", action="store_true", default=None,
                   help="start background learning from the SVD basis instead of zero")
    g.add_argument("--mu0", type=float, help=f"initial ADMM penalty (default {a.mu0})")
    g.add_argument("--mu-max", dest="mu_max", type=float, help=f"penalty cap (default {a.mu_max:g})")
    g.add_argument("--gamma", type=float, help=f"penalty growth factor (default {a.gamma})")
    g.add_argument("--eps", type=float, help=f"primal residual tolerance (default {a.eps})")
    g.add_argument("--k-max", dest="k_max", type=int, help=f"iteration cap (default {a.k_max})")
    g.add_argument("--config", help="TOML file of key = value settings")


def _add_input_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cube", help="cube path (<name> of <name>.json + <name>.raw)")
    p.add_argument("--mask", help="ground-truth mask, ASCII PGM")
    p.add_argument("--target", help="target spectrum CSV, one value per line (raw cube scale)")
    p.add_argument("--seed", type=int, help="accepted for config symmetry; detection is deterministic")
    p.add_argument("-o", "--out", help="output directory")
    p.add_argument("--csv", action="store_true", help="also write the map as row,col,score CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hsitd", description="Hyperspectral target detection with a learned "
                     "low-rank background and graph-regularized sparse coding.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("detect", help="run the detector on a cube")
    _add_input_args(p)
    _add_pipeline_args(p)

    p = sub.add_parser("sweep", help="rerun detection over values of one parameter")
    _add_input_args(p)
    _add_pipeline_args(p)
    p.add_argument("--param", required=True, help=f"one of {', '.join(SWEEP_PARAMS)}")
    p.add_argument("--values", required=True, help="comma-separated values")

    p = sub.add_parser("synth", help="generate a seeded synthetic scene")
    s = SyntheticSpec()
    p.add_argument("--height", type=int, default=s.height)
    p.add_argument("--width", type=int, default=s.width)
    p.add_argument("--bands", type=int, default=s.bands)
    p.add_argument("--rank", type=int, default=s.background_rank, help="number of background endmembers")
    p.add_argument("--n-targets", type=int, default=s.n_targets)
    p.add_argument("--abundance", type=float, default=s.target_abundance,
                   help="target fraction in implanted pixels")
    p.add_argument("--snr", type=float, default=s.noise_snr_db, help="noise SNR in dB ('inf' for none)")
    p.add_argument("--no-noise", action="store_true", help="same as --snr inf")
    p.add_argument("--seed", type=int, default=s.seed)
    p.add_argument("-o", "--out", required=True, help="output directory")

    p = sub.add_parser("eval", help="ROC/AUC of a detection map against a mask")
    p.add_argument("--map", required=True, help="detection map cube path")
    p.add_argument("--mask", required=True, help="ground-truth mask, ASCII PGM")
    p.add_argument("--roc", help="ROC CSV output (default <map>_roc.csv)")
    return parser


def _load_config_file(path) -> dict:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise CubeFormatError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"malformed config {path}: {exc}") from None
    allowed = _PIPELINE_KEYS | _ADMM_KEYS | _PATH_KEYS | {"seed"}
    unknown = set(data) - allowed
    if unknown:
        raise ValidationError(f"unknown config keys in {path}: {', '.join(sorted(unknown))}")
    return data


def resolve_settings(args: argparse.Namespace) -> tuple[PipelineConfig, dict]:
    """Merge defaults, config file and flags into a config plus path dict."""
    settings = _load_config_file(args.config) if args.config else {}
    for key in _PIPELINE_KEYS | _ADMM_KEYS | _PATH_KEYS | {"seed"}:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    admm = AdmmConfig(**{k: settings[k] for k in _ADMM_KEYS if k in settings})
    config = PipelineConfig(admm=admm, **{k: settings[k] for k in _PIPELINE_KEYS if k in settings})
    paths = {k: settings.get(k) for k in _PATH_KEYS}
    return config, paths


def _load_inputs(paths: dict):
    if not paths["cube"]:
        raise ValidationError("--cube is required")
    if not paths["target"] and not paths["mask"]:
        raise ValidationError("--target or --mask is required")
    cube = load_cube(paths["cube"])
    mask = load_mask(paths["mask"]) if paths["mask"] else None
    target = load_spectrum(paths["target"]) if paths["target"] else None
    if mask is not None and mask.shape != (cube.height, cube.width):
        raise ValidationError(f"mask {mask.shape} does not match cube {(cube.height, cube.width)}")
    return cube, mask, target


def _write_run(result, out: Path, csv: bool, cube, mask) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    result.map.save(out / "map", csv=csv)
    report = dict(result.report)
    if mask is not None:
        (out / "roc.csv").write_text(result.roc.to_csv())
        sam = sam_baseline(flatten(normalize(cube)), result.target, shape=mask.shape)
        report["auc_sam"] = roc_auc(sam, mask).auc
    (out / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    return report


def cmd_detect(args) -> int:
    config, paths = resolve_settings(args)
    cube, mask, target = _load_inputs(paths)
    result = run_pipeline(cube, config, target=target, mask=mask)
    out = Path(paths["out"] or ".")
    report = _write_run(result, out, args.csv, cube, mask)
    msg = f"wrote {out / 'map'}.json/.raw and {out / 'report.json'}"
    if report["auc"] is not None:
        msg += f"; AUC = {report['auc']:.6f}"
    print(msg)
    return EXIT_OK


def _parse_values(param: str, text: str) -> list:
    if param not in SWEEP_PARAMS:
        raise ValidationError(f"unknown sweep parameter {param!r}; choose from {', '.join(SWEEP_PARAMS)}")
    items = [s.strip() for s in text.split(",") if s.strip()]
    if not items:
        raise ValidationError("--values is empty")
    try:
        return [SWEEP_PARAMS[param](s) for s in items]
    except ValueError:
        raise ValidationError(f"cannot parse --values {text!r} as {SWEEP_PARAMS[param].__name__}") from None


def cmd_sweep(args) -> int:
    values = _parse_values(args.param, args.values)
    config, paths = resolve_settings(args)
    # validate every point before any IO
    configs = [replace(config, **{args.param: v}) for v in values]
    if not paths["mask"]:
        raise ValidationError("sweep needs --mask to compute AUC")
    cube, mask, target = _load_inputs(paths)
    out = Path(paths["out"] or ".")
    rows = ["value,auc,seconds"]
    for value, cfg in zip(values, configs):
        t0 = time.perf_counter()
        result = run_pipeline(cube, cfg, target=target, mask=mask)
        seconds = time.perf_counter() - t0
        _write_run(result, out / f"{args.param}={value}", args.csv, cube, mask)
        rows.append(f"{value},{result.report['auc']!r},{seconds:.6f}")
        print(f"{args.param}={value}: AUC = {result.report['auc']:.6f} ({seconds:.2f} s)")
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text("\n".join(rows) + "\n")
    return EXIT_OK


def cmd_synth(args) -> int:
    spec = SyntheticSpec(
        height=args.height, width=args.width, bands=args.bands,
        background_rank=args.rank, n_targets=args.n_targets,
        target_abundance=args.abundance,
        noise_snr_db=math.inf if args.no_noise else args.snr,
        seed=args.seed,
    )
    paths = write_scene(generate_scene(spec), args.out)
    print(f"wrote {paths['cube']}.json/.raw, {paths['mask']}, {paths['target']}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cube = load_cube(args.map)
    mask = load_mask(args.mask)
    if cube.bands != 1:
        raise ValidationError(f"detection map must have one band, found {cube.bands}")
    if mask.shape != (cube.height, cube.width):
        raise ValidationError(f"mask {mask.shape} does not match map {(cube.height, cube.width)}")
    roc = roc_auc(DetectionMap(cube.values[0]), mask)
    base = Path(args.map)
    if base.suffix in (".json", ".raw"):
        base = base.with_suffix("")
    roc_path = Path(args.roc) if args.roc else base.with_name(base.name + "_roc.csv")
    roc_path.write_text(roc.to_csv())
    print(f"AUC = {roc.auc!r}")
    return EXIT_OK


COMMANDS = {"detect": cmd_detect, "synth": cmd_synth, "sweep": cmd_sweep, "eval": cmd_eval}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse errors and --help
        return exc.code
    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"hsitd: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except CubeFormatError as exc:
        print(f"hsitd: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericalError as exc:
        print(f"hsitd: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except HsiError as exc:
        print(f"hsitd: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"hsitd: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

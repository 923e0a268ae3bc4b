"""Command-line front end for reproducible reconstruction experiments.

Subcommands: ``mask`` and ``phantom`` generate inputs, ``encode`` applies
retrospective undersampling, ``recon`` runs a solver, ``eval`` compares two
volumes, ``tune`` grid-searches solver hyper-parameters.  All data moves
through the ``.hdr``/``.dat`` volume format; solver settings move through
flat ``key=value`` config files.

Exit codes: 0 success, 2 usage or configuration error, 3 data or file
format error, 4 numeric failure during a solve.
"""

import argparse
import json
import math
import sys

from .core import (
    ConfigError,
    DataError,
    KSpaceData,
    NumericError,
    SolverConfig,
)
from .dataio import read_cplx, read_mask, write_cplx, write_mask
from .metrics import mse, mse_per_element, psnr, ssim
from .operators import encode
from .sim import DEFAULT_SIGMA_FRAC, PHANTOM_KINDS, make_phantom, make_vd_mask
from .solvers import SOLVER_NAMES, default_config, run_solver, tune_hyperparams

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

_INT_FIELDS = {"rank_k", "iterations"}
_STR_FIELDS = {"placement", "dc_mode", "lr_mode", "transform", "t_step_input"}


def _parse_field_value(name, token):
    if name not in SolverConfig.field_names():
        raise ConfigError(f"unknown config field {name!r}")
    if name in _STR_FIELDS:
        return token
    try:
        if name in _INT_FIELDS:
            return int(token)
        return float(token)
    except ValueError as exc:
        raise ConfigError(f"bad value {token!r} for config field {name!r}") from exc


def read_config_file(path) -> dict:
    """Parse a key=value config file into typed overrides."""
    overrides = {}
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read config file {path}: {exc}") from exc
    for raw in lines:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"bad config line {line!r} (expected key=value)")
        key, _, token = line.partition("=")
        key, token = key.strip(), token.strip()
        overrides[key] = _parse_field_value(key, token)
    return overrides


def write_config_file(path, cfg: SolverConfig) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for name in SolverConfig.field_names():
            value = getattr(cfg, name)
            if isinstance(value, float):
                fh.write(f"{name}={value!r}\n")
            else:
                fh.write(f"{name}={value}\n")


def parse_grid_spec(spec: str) -> dict:
    """Parse "field=v1,v2;field2=v1,..." into a typed search space."""
    space = {}
    for chunk in spec.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "=" not in chunk:
            raise ConfigError(f"bad grid token {chunk!r} (expected field=v1,v2,...)")
        name, _, values = chunk.partition("=")
        name = name.strip()
        tokens = [tok.strip() for tok in values.split(",") if tok.strip()]
        if not tokens:
            raise ConfigError(f"grid field {name!r} lists no values")
        space[name] = [_parse_field_value(name, tok) for tok in tokens]
    if not space:
        raise ConfigError("empty grid specification")
    return space


def _parse_dc(flag):
    """Parse --dc replace | weighted:NU into (mode, nu)."""
    if flag == "replace":
        return "replace", 1.0
    if flag.startswith("weighted:"):
        token = flag.partition(":")[2]
        try:
            return "weighted", float(token)
        except ValueError as exc:
            raise ConfigError(f"bad weighted data-consistency weight {token!r}") from exc
    raise ConfigError(f"bad --dc value {flag!r} (expected replace or weighted:NU)")


def _add_solver_flags(parser):
    parser.add_argument("--solver", required=True, choices=SOLVER_NAMES)
    parser.add_argument("--config", help="key=value config file applied before explicit flags")
    parser.add_argument("--placement", choices=["l1", "l2", "l3"], help="low-rank module placement")
    parser.add_argument("--iters", type=int, help="number of iterations")
    parser.add_argument("--lambda1", type=float, help="sparse regularization weight")
    parser.add_argument("--lambda2", type=float, help="low-rank regularization weight")
    parser.add_argument("--rho", type=float, help="penalty parameter")
    parser.add_argument("--eta1", type=float, help="multiplier update rate")
    parser.add_argument("--eta2", type=float, help="gradient step size")
    parser.add_argument("--rank-k", type=int, help="retained rank of the hard thresholding step")
    parser.add_argument("--p", type=float, help="singular-value shrinkage exponent in (0, 1]")
    parser.add_argument("--lr-mode", choices=["hard", "soft"], help="low-rank thresholding mode")
    parser.add_argument("--dc", help="data consistency: replace or weighted:NU")
    parser.add_argument(
        "--transform",
        choices=["temporal_fourier", "temporal_haar"],
        help="temporal sparsifying transform",
    )


def _flag_overrides(args) -> dict:
    overrides = {}
    if args.placement is not None:
        overrides["placement"] = args.placement.upper()
    if args.iters is not None:
        overrides["iterations"] = args.iters
    for flag, field in [
        ("lambda1", "lambda1"),
        ("lambda2", "lambda2"),
        ("rho", "rho"),
        ("eta1", "eta1"),
        ("eta2", "eta2"),
        ("rank_k", "rank_k"),
        ("p", "p"),
        ("lr_mode", "lr_mode"),
        ("transform", "transform"),
    ]:
        value = getattr(args, flag)
        if value is not None:
            overrides[field] = value
    if args.dc is not None:
        mode, nu = _parse_dc(args.dc)
        overrides["dc_mode"] = mode
        overrides["dc_nu"] = nu
    return overrides


def _load_kspace(ksp_path, mask_path) -> KSpaceData:
    vol = read_cplx(ksp_path)
    mask = read_mask(mask_path)
    return KSpaceData(vol.data, mask)


def _build_config(args, y: KSpaceData) -> SolverConfig:
    overrides = {}
    if args.config:
        overrides.update(read_config_file(args.config))
    overrides.update(_flag_overrides(args))
    return default_config(y, **overrides)


def _metric_lines(ref, rec, as_json):
    raw = mse(ref, rec)
    scaled = mse_per_element(ref, rec) * 1e5
    p = psnr(ref, rec)
    s = ssim(ref, rec)
    if as_json:
        payload = {
            "mse": raw,
            "mse_per_element_e5": scaled,
            "psnr": "inf" if math.isinf(p) else round(p, 6),
            "ssim": round(s, 6),
        }
        return [json.dumps(payload, sort_keys=True)]
    psnr_text = "inf" if math.isinf(p) else f"{p:.4f}"
    return [
        f"mse={raw:.6e}",
        f"mse_e5={scaled:.4f}",
        f"psnr={psnr_text}",
        f"ssim={s:.4f}",
    ]


def cmd_mask(args):
    mask = make_vd_mask(
        ny=args.ny,
        nt=args.nt,
        acceleration=args.accel,
        sigma_frac=args.sigma_frac,
        seed=args.seed,
        per_frame=not args.static_pattern,
    )
    write_mask(args.out, mask)
    print(f"wrote {args.out}.hdr {args.out}.dat")
    print(f"achieved acceleration: {mask.achieved_acceleration:.4f}")
    return EXIT_OK


def cmd_phantom(args):
    img = make_phantom(
        nx=args.nx,
        ny=args.ny,
        nt=args.nt,
        kind=args.kind,
        seed=args.seed,
        rank=args.rank,
        sparsity=args.sparsity,
    )
    write_cplx(args.out, img)
    print(f"wrote {args.out}.hdr {args.out}.dat")
    return EXIT_OK


def cmd_encode(args):
    img = read_cplx(args.image)
    mask = read_mask(args.mask)
    ksp = encode(img, mask)
    write_cplx(args.out, ksp.data)
    print(f"wrote {args.out}.hdr {args.out}.dat")
    return EXIT_OK


def cmd_recon(args):
    y = _load_kspace(args.ksp, args.mask)
    cfg = _build_config(args, y)
    reference = read_cplx(args.ref) if args.ref else None
    report = run_solver(args.solver, y, cfg, reference=reference)
    write_cplx(args.out, report.image)
    print(f"wrote {args.out}.hdr {args.out}.dat ({report.seconds:.2f} s)")
    if args.trace:
        with open(args.trace, "w", encoding="ascii") as fh:
            for rec in report.trace:
                fh.write(
                    json.dumps(
                        {
                            "iteration": rec.iteration,
                            "objective": rec.objective,
                            "data_fidelity": rec.data_fidelity,
                            "sparse_term": rec.sparse_term,
                            "nuclear_term": rec.nuclear_term,
                            "rel_change": rec.rel_change,
                            "split_gap": rec.split_gap,
                        }
                    )
                    + "\n"
                )
    if reference is not None:
        for line in _metric_lines(reference, report.image, as_json=False):
            print(line)
    return EXIT_OK


def cmd_eval(args):
    ref = read_cplx(args.ref)
    rec = read_cplx(args.rec)
    for line in _metric_lines(ref, rec, as_json=args.json):
        print(line)
    return EXIT_OK


def cmd_tune(args):
    y = _load_kspace(args.ksp, args.mask)
    reference = read_cplx(args.ref)
    space = parse_grid_spec(args.grid)
    base = _build_config(args, y)
    best = tune_hyperparams(y, reference, space, args.solver, base=base)
    write_config_file(args.out, best)
    report = run_solver(args.solver, y, best, reference=reference)
    print(f"wrote {args.out}")
    print(f"best psnr: {report.metrics['psnr']:.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynlr",
        description="Sparse and low-rank dynamic MRI reconstruction experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mask", help="generate a Gaussian variable-density sampling mask")
    p.add_argument("--ny", type=int, required=True)
    p.add_argument("--nt", type=int, required=True)
    p.add_argument("--accel", type=float, required=True)
    p.add_argument("--sigma-frac", type=float, default=DEFAULT_SIGMA_FRAC)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--static-pattern", action="store_true", help="same lines in every frame")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("phantom", help="generate a synthetic dynamic phantom")
    p.add_argument("--nx", type=int, required=True)
    p.add_argument("--ny", type=int, required=True)
    p.add_argument("--nt", type=int, required=True)
    p.add_argument("--kind", default="beating_rings", help=f"one of {', '.join(PHANTOM_KINDS)}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rank", type=int, default=1)
    p.add_argument("--sparsity", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("encode", help="retrospectively undersample a volume into k-space")
    p.add_argument("--image", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("recon", help="reconstruct undersampled k-space")
    p.add_argument("--ksp", required=True)
    p.add_argument("--mask", required=True)
    _add_solver_flags(p)
    p.add_argument("--ref", help="reference volume; prints metrics when given")
    p.add_argument("--out", required=True)
    p.add_argument("--trace", help="write per-iteration diagnostics as JSON lines")
    p.set_defaults(func=cmd_recon)

    p = sub.add_parser("eval", help="compare a reconstruction against a reference")
    p.add_argument("--ref", required=True)
    p.add_argument("--rec", required=True)
    p.add_argument("--json", action="store_true", help="print one machine-readable JSON line")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("tune", help="grid-search solver hyper-parameters")
    p.add_argument("--ksp", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--grid", required=True, help='e.g. "lambda1=1e-4,1e-3;rank_k=2,4"')
    _add_solver_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tune)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def run():
    sys.exit(main())

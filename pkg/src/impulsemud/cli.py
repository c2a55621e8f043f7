"""Command-line front end.

Four subcommands emit CSV (UTF-8, LF line endings, 12 significant digits
unless noted) plus an optional flat key=value manifest sidecar that pins
the resolved parameters, the seed, and a checksum of the output:

* ``ber``        - Monte Carlo BER sweep for user 1.
* ``are``        - asymptotic-relative-efficiency grid over (epsilon, kappa).
* ``dump-psi``   - penalty/score table for one family on an x grid.
* ``dump-codes`` - the spreading matrix, 17 significant digits.

Exit codes: 0 success, 1 numeric/runtime failure, 2 usage error. The
environment variable ``IMPULSE_MUD_SEED`` overrides the built-in default
seed; explicit flags win. A ``--config`` file of ``key=value`` lines is
merged under flags (flags win, config beats built-in defaults).
"""

from __future__ import annotations

import argparse
import hashlib
import math
import os
import sys

import numpy as np

from . import __version__
from .analysis import are_grid
from .errors import ImpulseMudError
from .montecarlo import ExperimentSpec, sweep
from .noise import calibrate
from .penalty import (
    HuberPenalty,
    LsPenalty,
    XPenalty,
    huber_threshold,
    minimax_penalty,
    x_penalty,
)
from .spreading import build_spreading_matrix, generate_m_sequence

_DETECTOR_CHOICES = ("ls", "huber", "x")
_SCALE_CHOICES = ("total", "nominal")


def _fmt(value) -> str:
    return f"{float(value):.12g}"


def _parse_grid(text: str) -> list[float]:
    """Inclusive ``start:stop:step`` range or comma-separated list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"expected start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0.0 or stop < start:
            raise ValueError(f"need stop >= start and step > 0 in {text!r}")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(n)]
    values = [float(tok) for tok in text.split(",") if tok.strip()]
    if not values:
        raise ValueError(f"empty grid specification {text!r}")
    return values


def _load_config(path: str, parser: argparse.ArgumentParser) -> dict[str, str]:
    config: dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    parser.error(f"{path}:{lineno}: expected key=value, got {line!r}")
                key, _, value = line.partition("=")
                config[key.strip().replace("-", "_")] = value.strip()
    except OSError as exc:
        parser.error(f"cannot read config file {path}: {exc}")
    return config


class _Settings:
    """Resolves option values: flag, then config file, then default."""

    def __init__(self, args: argparse.Namespace, parser: argparse.ArgumentParser):
        self.args = args
        self.parser = parser
        path = getattr(args, "config", None)
        self.config = _load_config(path, parser) if path else {}

    def get(self, name: str, default, conv=None):
        value = getattr(self.args, name, None)
        if value is not None:
            return value
        if name in self.config:
            raw = self.config[name]
            try:
                return conv(raw) if conv is not None else raw
            except ValueError:
                self.parser.error(f"config value {name}={raw!r} is invalid")
        return default() if callable(default) else default


def _default_seed(parser: argparse.ArgumentParser) -> int:
    env = os.environ.get("IMPULSE_MUD_SEED")
    if env is None:
        return 1
    try:
        return int(env)
    except ValueError:
        parser.error(f"IMPULSE_MUD_SEED must be an integer, got {env!r}")


def _check_noise_params(parser, epsilon, kappa, total_variance):
    if not (0.0 <= epsilon < 1.0):
        parser.error(f"epsilon must be in [0, 1), got {epsilon}")
    if not (kappa >= 1.0):
        parser.error(f"kappa must be >= 1, got {kappa}")
    if not (total_variance > 0.0):
        parser.error(f"total-variance must be > 0, got {total_variance}")


def _build_signatures(parser, degree, taps, users):
    if not (2 <= degree <= 16):
        parser.error(f"degree must be in [2, 16], got {degree}")
    n_chips = (1 << degree) - 1
    if not (1 <= users <= n_chips):
        parser.error(f"users must be in [1, {n_chips}] for degree {degree}, got {users}")
    base = generate_m_sequence(degree, taps)
    return build_spreading_matrix(base, users)


def _cmd_ber(args, parser):
    st = _Settings(args, parser)
    users = st.get("users", 5, int)
    degree = st.get("degree", 5, int)
    taps = st.get("taps", None, lambda s: int(s, 0))
    epsilon = st.get("epsilon", 0.01, float)
    kappa = st.get("kappa", 100.0, float)
    total_variance = st.get("total_variance", 1.0, float)
    snr_text = st.get("snr", "0:12:2")
    detectors_text = st.get("detectors", "ls,huber,x")
    seed = st.get("seed", lambda: _default_seed(parser), int)
    min_errors = st.get("min_errors", 100, int)
    max_frames = st.get("max_frames", 1_000_000, int)
    threads = st.get("threads", lambda: os.cpu_count() or 1, int)
    x_sigma_scale = st.get("x_sigma", "total")
    huber_scale = st.get("huber_scale", "total")
    noise_scale = st.get("noise_scale", 1.0, float)

    _check_noise_params(parser, epsilon, kappa, total_variance)
    if min_errors < 1:
        parser.error(f"min-errors must be >= 1, got {min_errors}")
    if max_frames < 1:
        parser.error(f"max-frames must be >= 1, got {max_frames}")
    if threads < 1:
        parser.error(f"threads must be >= 1, got {threads}")
    if x_sigma_scale not in _SCALE_CHOICES:
        parser.error(f"x-sigma must be one of {_SCALE_CHOICES}, got {x_sigma_scale!r}")
    if huber_scale not in _SCALE_CHOICES:
        parser.error(f"huber-scale must be one of {_SCALE_CHOICES}, got {huber_scale!r}")
    try:
        snr_points = _parse_grid(snr_text)
    except ValueError as exc:
        parser.error(f"bad --snr: {exc}")
    names = [tok.strip() for tok in detectors_text.split(",") if tok.strip()]
    if not names:
        parser.error("detectors list is empty")
    for name in names:
        if name not in _DETECTOR_CHOICES:
            parser.error(f"unknown detector {name!r}; choose from {_DETECTOR_CHOICES}")

    s = _build_signatures(parser, degree, taps, users)
    noise = calibrate(epsilon, kappa, total_variance)
    builders = {
        "ls": lambda: LsPenalty(),
        "huber": lambda: minimax_penalty(noise, scale=huber_scale),
        "x": lambda: x_penalty(noise, scale=x_sigma_scale),
    }
    penalties = tuple((name, builders[name]()) for name in names)
    spec = ExperimentSpec(
        n_users=users,
        n_chips=s.n_chips,
        noise=noise,
        snr_db_points=tuple(snr_points),
        penalties=penalties,
        seed=seed,
        min_errors=min_errors,
        max_frames=max_frames,
        noise_scale=noise_scale,
    )
    results = sweep(spec, s, threads=threads)

    lines = ["detector,snr_db,frames,errors,ber,ci95"]
    for name, _ in penalties:
        for point in results[name]:
            lines.append(
                f"{name},{_fmt(point.snr_db)},{point.frames},{point.errors},"
                f"{_fmt(point.ber)},{_fmt(point.ci95_halfwidth)}"
            )
    csv_text = "\n".join(lines) + "\n"
    params = {
        "command": "ber",
        "users": users,
        "degree": degree,
        "taps": taps if taps is not None else "default",
        "epsilon": _fmt(epsilon),
        "kappa": _fmt(kappa),
        "total_variance": _fmt(total_variance),
        "snr": ",".join(_fmt(v) for v in snr_points),
        "detectors": ",".join(names),
        "seed": seed,
        "min_errors": min_errors,
        "max_frames": max_frames,
        "x_sigma": x_sigma_scale,
        "huber_scale": huber_scale,
        "noise_scale": _fmt(noise_scale),
    }
    return csv_text, params


def _cmd_are(args, parser):
    st = _Settings(args, parser)
    epsilons_text = st.get("epsilons", None)
    kappas_text = st.get("kappas", "10,50,100,1000")
    total_variance = st.get("total_variance", 1.0, float)
    huber_scale = st.get("huber_scale", "total")
    verbatim = bool(getattr(args, "verbatim_eq9", False)) or (
        st.config.get("verbatim_eq9", "").lower() in ("1", "true", "yes")
    )

    if epsilons_text is None:
        epsilons = list(np.geomspace(1e-3, 0.3, 20))
    else:
        try:
            epsilons = _parse_grid(epsilons_text)
        except ValueError as exc:
            parser.error(f"bad --epsilons: {exc}")
    try:
        kappas = _parse_grid(kappas_text)
    except ValueError as exc:
        parser.error(f"bad --kappas: {exc}")
    for eps in epsilons:
        if not (0.0 < eps < 1.0):
            parser.error(f"epsilons must lie in (0, 1), got {eps}")
    for kappa in kappas:
        if not (kappa >= 1.0):
            parser.error(f"kappas must be >= 1, got {kappa}")
    if not (total_variance > 0.0):
        parser.error(f"total-variance must be > 0, got {total_variance}")
    if huber_scale not in _SCALE_CHOICES:
        parser.error(f"huber-scale must be one of {_SCALE_CHOICES}, got {huber_scale!r}")

    grid = are_grid(
        epsilons,
        kappas,
        total_variance,
        verbatim_numerator=verbatim,
        huber_scale=huber_scale,
    )
    lines = ["epsilon,kappa,V_x,V_other,ARE"]
    for i, eps in enumerate(grid.epsilons):
        for j, kappa in enumerate(grid.kappas):
            lines.append(
                f"{_fmt(eps)},{_fmt(kappa)},{_fmt(grid.v_x[i, j])},"
                f"{_fmt(grid.v_other[i, j])},{_fmt(grid.values[i, j])}"
            )
    csv_text = "\n".join(lines) + "\n"
    params = {
        "command": "are",
        "epsilons": ",".join(_fmt(e) for e in epsilons),
        "kappas": ",".join(_fmt(k) for k in kappas),
        "total_variance": _fmt(total_variance),
        "huber_scale": huber_scale,
        "verbatim_eq9": str(verbatim).lower(),
    }
    return csv_text, params


def _cmd_dump_psi(args, parser):
    st = _Settings(args, parser)
    family = st.get("family", "x")
    sigma = st.get("sigma", 1.0, float)
    gamma = st.get("gamma", None, float)
    epsilon = st.get("epsilon", None, float)
    noise_std = st.get("noise_std", 1.0, float)
    range_text = st.get("range", "-5:5:0.01")

    if family not in _DETECTOR_CHOICES:
        parser.error(f"family must be one of {_DETECTOR_CHOICES}, got {family!r}")
    try:
        grid = _parse_grid(range_text)
    except ValueError as exc:
        parser.error(f"bad --range: {exc}")

    if family == "ls":
        penalty = LsPenalty()
    elif family == "x":
        if not (sigma > 0.0):
            parser.error(f"sigma must be > 0, got {sigma}")
        penalty = XPenalty(sigma)
    else:
        if gamma is not None:
            if not (gamma > 0.0):
                parser.error(f"gamma must be > 0, got {gamma}")
            penalty = HuberPenalty(gamma)
        elif epsilon is not None:
            if not (0.0 < epsilon < 1.0):
                parser.error(f"epsilon must be in (0, 1), got {epsilon}")
            if not (noise_std > 0.0):
                parser.error(f"noise-std must be > 0, got {noise_std}")
            penalty = HuberPenalty(huber_threshold(epsilon).k * noise_std)
        else:
            parser.error("huber family needs --gamma or --epsilon")

    lines = ["x,rho,psi,psi_prime"]
    for x in grid:
        lines.append(
            f"{_fmt(x)},{_fmt(penalty.rho(x))},{_fmt(penalty.psi(x))},"
            f"{_fmt(penalty.psi_prime(x))}"
        )
    csv_text = "\n".join(lines) + "\n"
    params = {
        "command": "dump-psi",
        "family": family,
        "range": range_text,
    }
    if family == "x":
        params["sigma"] = _fmt(sigma)
    elif family == "huber":
        params["gamma"] = _fmt(penalty.gamma)
    return csv_text, params


def _cmd_dump_codes(args, parser):
    st = _Settings(args, parser)
    degree = st.get("degree", 5, int)
    users = st.get("users", 5, int)
    taps = st.get("taps", None, lambda s: int(s, 0))

    s = _build_signatures(parser, degree, taps, users)
    lines = [
        ",".join(f"{value:.17g}" for value in row) for row in s.entries
    ]
    csv_text = "\n".join(lines) + "\n"
    params = {
        "command": "dump-codes",
        "degree": degree,
        "users": users,
        "taps": taps if taps is not None else "default",
    }
    return csv_text, params


def _add_common_output_flags(sub):
    sub.add_argument("--out", help="write CSV to this file (default: stdout)")
    sub.add_argument(
        "--manifest",
        help="write the run manifest here (default: <out>.manifest when --out is set)",
    )
    sub.add_argument("--config", help="key=value file merged under flags")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="impulsemud",
        description="Robust multiuser detection experiments in impulsive noise",
    )
    parser.add_argument("--version", action="version", version=f"impulsemud {__version__}")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    ber = subs.add_parser("ber", help="Monte Carlo BER sweep for user 1")
    ber.add_argument("--users", type=int)
    ber.add_argument("--degree", type=int, help="m-sequence degree; N = 2**degree - 1")
    ber.add_argument("--taps", type=lambda s: int(s, 0), help="feedback polynomial mask")
    ber.add_argument("--epsilon", type=float)
    ber.add_argument("--kappa", type=float)
    ber.add_argument("--total-variance", dest="total_variance", type=float)
    ber.add_argument("--snr", help="start:stop:step (inclusive) or comma list, in dB")
    ber.add_argument("--detectors", help="comma list from: ls, huber, x")
    ber.add_argument("--seed", type=int)
    ber.add_argument("--min-errors", dest="min_errors", type=int)
    ber.add_argument("--max-frames", dest="max_frames", type=int)
    ber.add_argument("--threads", type=int)
    ber.add_argument(
        "--x-sigma",
        dest="x_sigma",
        choices=_SCALE_CHOICES,
        help="which noise std sets the redescending scale (default: total)",
    )
    ber.add_argument(
        "--huber-scale",
        dest="huber_scale",
        choices=_SCALE_CHOICES,
        help="which noise std scales the Huber threshold (default: total)",
    )
    ber.add_argument("--noise-scale", dest="noise_scale", type=float)
    _add_common_output_flags(ber)
    ber.set_defaults(handler=_cmd_ber)

    are_cmd = subs.add_parser("are", help="asymptotic relative efficiency grid")
    are_cmd.add_argument("--epsilons", help="comma list or start:stop:step")
    are_cmd.add_argument("--kappas", help="comma list or start:stop:step")
    are_cmd.add_argument("--total-variance", dest="total_variance", type=float)
    are_cmd.add_argument(
        "--huber-scale", dest="huber_scale", choices=_SCALE_CHOICES
    )
    are_cmd.add_argument(
        "--verbatim-eq9",
        dest="verbatim_eq9",
        action="store_true",
        help="use the originally published numerator variant (documentation runs)",
    )
    _add_common_output_flags(are_cmd)
    are_cmd.set_defaults(handler=_cmd_are)

    dump_psi = subs.add_parser("dump-psi", help="penalty/score table for one family")
    dump_psi.add_argument("--family", choices=_DETECTOR_CHOICES)
    dump_psi.add_argument("--sigma", type=float)
    dump_psi.add_argument("--gamma", type=float)
    dump_psi.add_argument("--epsilon", type=float)
    dump_psi.add_argument("--noise-std", dest="noise_std", type=float)
    dump_psi.add_argument("--range", help="start:stop:step (inclusive)")
    _add_common_output_flags(dump_psi)
    dump_psi.set_defaults(handler=_cmd_dump_psi)

    dump_codes = subs.add_parser("dump-codes", help="spreading matrix as CSV")
    dump_codes.add_argument("--degree", type=int)
    dump_codes.add_argument("--users", type=int)
    dump_codes.add_argument("--taps", type=lambda s: int(s, 0))
    _add_common_output_flags(dump_codes)
    dump_codes.set_defaults(handler=_cmd_dump_codes)

    return parser


def _write_outputs(csv_text: str, params: dict, args) -> None:
    data = csv_text.encode("utf-8")
    out_path = getattr(args, "out", None)
    manifest_path = getattr(args, "manifest", None)
    if out_path:
        with open(out_path, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.write(csv_text)
    if manifest_path is None and out_path:
        manifest_path = out_path + ".manifest"
    if manifest_path:
        lines = [f"command={params.pop('command')}", f"version={__version__}"]
        lines.extend(f"{key}={params[key]}" for key in sorted(params))
        lines.append(f"sha256={hashlib.sha256(data).hexdigest()}")
        with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")


_GRID_FLAGS = ("--range", "--snr", "--epsilons", "--kappas")


def _merge_grid_flags(argv):
    """Join grid flags with their value so ranges may start with a minus.

    argparse would otherwise read ``--range -5:5:0.01`` as two flags.
    """
    merged = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _GRID_FLAGS and i + 1 < len(argv):
            merged.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            merged.append(tok)
            i += 1
    return merged


def main(argv=None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    args = parser.parse_args(_merge_grid_flags(list(argv)))
    try:
        csv_text, params = args.handler(args, parser)
        _write_outputs(csv_text, params, args)
    except ImpulseMudError as exc:
        print(f"impulsemud: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"impulsemud: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

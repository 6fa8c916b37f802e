"""Command-line front end.

Every file written by a subcommand gets a ``<out>.manifest`` sidecar of
``key=value`` lines; ``bellsphere rerun <manifest>`` regenerates the output
byte for byte.

Exit codes: 0 success, 1 usage, 2 I/O error, 3 insufficient data.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import shlex
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .channels import (
    BirefringenceSpec,
    BMesonSpec,
    FiberSpec,
    KaonSpec,
    PdlSpec,
    birefringence_operator,
    pdl_operator,
    trajectory,
)
from .correlations import SYSTEMS, Settings4, chsh_theta_scan, get_system, maximize_S
from .errors import InsufficientDataError
from .montecarlo import ExperimentConfig, combine_chsh, estimate_E, run_settings
from .states import BlochVector, element_bloch

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_DATA = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(x: float) -> str:
    return f"{x + 0.0:.12g}"


def _floats(raw: str) -> list[float]:
    try:
        return [float(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {raw!r}") from None


_NAMES = ("L", "R", "V", "H", "K_S", "K_L", "K0", "K0bar")


def _vector(raw: str) -> BlochVector:
    try:
        return element_bloch(raw)
    except KeyError:
        pass
    values = _floats(raw)
    if len(values) != 3:
        raise argparse.ArgumentTypeError(f"expected x,y,z or a state name, got {raw!r}")
    v = np.array(values)
    n = np.linalg.norm(v)
    if n == 0:
        raise argparse.ArgumentTypeError("zero vector")
    return BlochVector.from_array(v / n)


def _kaon(args) -> KaonSpec:
    return KaonSpec(delta_m=args.delta_m, gamma_s=1.0, gamma_l=args.gamma_l_ratio)


def _bmeson(args) -> BMesonSpec:
    return BMesonSpec(delta_m=args.bmeson_delta_m)


def _add_physics(p: argparse.ArgumentParser) -> None:
    p.add_argument("--delta-m", type=float, default=0.477, help="kaon m_S - m_L in units of gamma_S")
    p.add_argument("--gamma-l-ratio", type=float, default=1 / 580, help="kaon gamma_L / gamma_S")
    p.add_argument("--bmeson-delta-m", type=float, default=0.723, help="B-meson mass difference times tau_B")


def _angle_scale(args, system: str) -> float:
    """Factor converting user units to radians (1 for time-like settings)."""
    if system == "photon" and args.unit == "deg":
        return math.pi / 180.0
    return 1.0


# ---------------------------------------------------------------- output


def _write_output(args, text: str) -> None:
    if args.out == "-":
        sys.stdout.write(text)
        return
    path = Path(args.out)
    path.write_text(text, encoding="utf-8", newline="")
    manifest = _manifest(args)
    Path(str(path) + ".manifest").write_text(manifest, encoding="utf-8", newline="")


def _manifest(args) -> str:
    lines = [
        f"command={args.command}",
        f"tool_version={__version__}",
        f"seed={getattr(args, 'seed', '')}",
        f"output={args.out}",
        f"argv={shlex.join(args._argv)}",
    ]
    for key in sorted(vars(args)):
        if key.startswith("_") or key in ("command", "func"):
            continue
        value = getattr(args, key)
        if isinstance(value, BlochVector):
            value = ",".join(fmt(c) for c in value.as_array())
        lines.append(f"param.{key}={value}")
    return "\n".join(lines) + "\n"


def _csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------- commands


def cmd_scan(args) -> int:
    system = get_system(args.system, _kaon(args), _bmeson(args))
    scale = _angle_scale(args, args.system)
    lo, hi = (v / scale for v in system.default_range)
    lo = lo if args.min is None else args.min
    hi = hi if args.max is None else args.max
    if args.steps < 2:
        raise UsageError("--steps must be at least 2")
    params = np.linspace(lo, hi, args.steps)
    records = chsh_theta_scan(system, lo * scale, hi * scale, args.steps)
    rows = [
        [fmt(p), fmt(r.E), fmt(r.E3), fmt(r.S), fmt(r.abs_S), int(r.violates)]
        for p, r in zip(params, records)
    ]
    _write_output(args, _csv_text(["param", "E", "E3", "S", "abs_S", "violates"], rows))
    return EXIT_OK


def _trajectory_spec(args):
    if args.channel == "birefringence":
        return BirefringenceSpec(args.axis, args.rate), BlochVector(0, 0, 1)
    if args.channel == "pdl":
        return PdlSpec(args.pdl_axis or args.axis, args.alpha_max, args.alpha_min), BlochVector(0, 0, 1)
    if args.channel == "fiber":
        biref = BirefringenceSpec(args.axis, args.rate)
        return FiberSpec(biref, args.alpha_max, args.alpha_min, args.pdl_axis), BlochVector(0, 0, 1)
    if args.channel == "kaon":
        return _kaon(args), element_bloch("K0")
    if args.channel == "kaon-mixing":
        return KaonSpec(delta_m=args.delta_m, gamma_s=0.0, gamma_l=0.0), element_bloch("K0")
    return _bmeson(args), element_bloch("K0")


def _massive_frame(m: BlochVector) -> BlochVector:
    """Half turn about x: puts K_L (long-lived) on +z.  Its own inverse."""
    return BlochVector(m.x, -m.y, -m.z)


def cmd_trajectory(args) -> int:
    spec, default_start = _trajectory_spec(args)
    massive = args.channel in ("kaon", "kaon-mixing", "bmeson")
    frame = _massive_frame if massive else (lambda m: m)
    if args.start is None:
        start = default_start
    elif args.start in _NAMES:
        start = element_bloch(args.start)
    else:
        start = frame(_vector(args.start))
    if args.length < 0:
        raise UsageError("--length must be non-negative")
    if args.steps < 1:
        raise UsageError("--steps must be positive")
    extents = [0.0] if args.length == 0 else np.linspace(0.0, args.length, args.steps)
    rows = []
    for z, m, w in trajectory(spec, start, extents):
        m = frame(m)
        rows.append([fmt(z), fmt(m.x), fmt(m.y), fmt(m.z), fmt(w)])
    _write_output(args, _csv_text(["z", "x", "y", "z_comp", "weight"], rows))
    return EXIT_OK


def _photon_channel_b(args, scale: float):
    op = np.eye(2, dtype=complex)
    if args.biref_angle:
        op = birefringence_operator(BirefringenceSpec(args.biref_axis, args.biref_angle * scale)) @ op
    if args.pdl_tmax is not None or args.pdl_tmin is not None:
        tmax = 1.0 if args.pdl_tmax is None else args.pdl_tmax
        tmin = tmax if args.pdl_tmin is None else args.pdl_tmin
        op = pdl_operator(PdlSpec.from_transmissions(args.pdl_axis, tmax, tmin)) @ op
    return op


def cmd_montecarlo(args) -> int:
    scale = _angle_scale(args, args.system)
    if (args.settings is None) == (args.theta is None):
        raise UsageError("give exactly one of --settings or --theta")
    if args.theta is not None:
        user = [0.0, 2 * args.theta, args.theta, 3 * args.theta]
    else:
        user = args.settings
    if len(user) == 4:
        settings = Settings4(*(v * scale for v in user))
        user_pairs = Settings4(*user).pairs()
    elif len(user) == 2:
        settings = (user[0] * scale, user[1] * scale)
        user_pairs = [tuple(user)]
    else:
        raise UsageError("--settings takes two or four values")
    config = ExperimentConfig(
        system=args.system,
        settings=settings,
        pairs=args.pairs,
        efficiency=args.efficiency,
        seed=args.seed,
        channel_b=_photon_channel_b(args, scale) if args.system == "photon" else None,
        kaon=_kaon(args),
        bmeson=_bmeson(args),
    )
    counts = run_settings(config, workers=args.workers)
    rows = []
    for k, ((sa, sb), c) in enumerate(zip(user_pairs, counts)):
        est = estimate_E(c) if c.coincidences else None
        rows.append(
            [k, fmt(sa), fmt(sb), *c.as_tuple(),
             "" if est is None else fmt(est.value), "" if est is None else fmt(est.se)]
        )
    header = ["pair", "setting_a", "setting_b", "n_pp", "n_pm", "n_mp", "n_mm",
              "n_single_a", "n_single_b", "n_lost", "E_R", "SE"]
    _write_output(args, _csv_text(header, rows))

    first = estimate_E(counts[0])
    if len(counts) == 4:
        chsh = combine_chsh(counts)
        summary = _csv_text(["E_R", "SE", "S", "SE_S"],
                            [[fmt(first.value), fmt(first.se), fmt(chsh.S), fmt(chsh.se)]])
    else:
        summary = _csv_text(["E_R", "SE"], [[fmt(first.value), fmt(first.se)]])
    sys.stdout.write(summary)
    if args.out != "-":
        Path(args.out + ".summary.csv").write_text(summary, encoding="utf-8", newline="")
    return EXIT_OK


def cmd_maximize(args) -> int:
    system = get_system(args.system, _kaon(args), _bmeson(args))
    best = maximize_S(system)
    scale = _angle_scale(args, args.system)
    line = f"{args.system},{best.param / scale:.6f},{best.abs_S:.6f}\n"
    if args.out is None:
        sys.stdout.write(line)
    else:
        _write_output(args, line)
    return EXIT_OK


def cmd_rerun(args) -> int:
    entries = {}
    for line in Path(args.manifest).read_text(encoding="utf-8").splitlines():
        key, _, value = line.partition("=")
        entries[key] = value
    if "argv" not in entries:
        raise UsageError(f"{args.manifest} has no argv entry")
    argv = shlex.split(entries["argv"])
    if args.out is not None:
        argv = _replace_out(argv, args.out)
    return main(argv)


def _replace_out(argv: list[str], out: str) -> list[str]:
    argv = list(argv)
    for i, tok in enumerate(argv):
        if tok == "--out" and i + 1 < len(argv):
            argv[i + 1] = out
            return argv
        if tok.startswith("--out="):
            argv[i] = f"--out={out}"
            return argv
    return argv + ["--out", out]


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bellsphere", description="Bell-CHSH correlations for photons, kaons and B-mesons.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    scan = sub.add_parser("scan", help="tabulate S(theta) = 3E(theta) - E(3 theta)")
    scan.add_argument("--system", choices=SYSTEMS, required=True)
    scan.add_argument("--min", type=float, default=None)
    scan.add_argument("--max", type=float, default=None)
    scan.add_argument("--steps", type=int, default=1001)
    scan.add_argument("--unit", choices=("deg", "rad"), default="deg", help="photon angle unit")
    scan.add_argument("--out", required=True, help="CSV path or - for stdout")
    _add_physics(scan)
    scan.set_defaults(func=cmd_scan)

    traj = sub.add_parser("trajectory", help="Bloch-vector path through a channel")
    traj.add_argument("--channel", choices=("birefringence", "pdl", "fiber", "kaon", "kaon-mixing", "bmeson"), required=True)
    traj.add_argument("--start", default=None, help="x,y,z or a state name (L, R, V, H, K_S, K_L, K0, K0bar); "
                      "kaon and B-meson coordinates put K_L on +z")
    traj.add_argument("--axis", type=_vector, default=BlochVector(1.0, 0.0, 0.0), help="birefringence axis")
    traj.add_argument("--pdl-axis", type=_vector, default=None, help="low-loss axis (default: --axis)")
    traj.add_argument("--rate", type=float, default=1.0, help="birefringence rate, rad per unit length")
    traj.add_argument("--alpha-max", type=float, default=0.0, help="attenuation of the favored state")
    traj.add_argument("--alpha-min", type=float, default=0.5, help="attenuation of the orthogonal state")
    traj.add_argument("--length", type=float, default=2 * math.pi, help="fiber length or time")
    traj.add_argument("--steps", type=int, default=201)
    traj.add_argument("--out", required=True)
    _add_physics(traj)
    traj.set_defaults(func=cmd_trajectory)

    mc = sub.add_parser("montecarlo", help="simulate coincidence counts")
    mc.add_argument("--system", choices=("photon", "kaon", "bmeson"), required=True)
    mc.add_argument("--settings", type=_floats, default=None, help="a,b or a,a',b,b'")
    mc.add_argument("--theta", type=float, default=None, help="use settings 0, 2 theta, theta, 3 theta")
    mc.add_argument("--unit", choices=("deg", "rad"), default="deg", help="photon angle unit")
    mc.add_argument("--pairs", type=int, default=1_000_000)
    mc.add_argument("--seed", type=int, default=0)
    mc.add_argument("--efficiency", type=float, default=1.0)
    mc.add_argument("--workers", type=int, default=1)
    mc.add_argument("--biref-angle", type=float, default=0.0, help="birefringence on arm B (angle unit)")
    mc.add_argument("--biref-axis", type=_vector, default=BlochVector(1.0, 0.0, 0.0))
    mc.add_argument("--pdl-tmax", type=float, default=None, help="PDL on arm B: favored transmission")
    mc.add_argument("--pdl-tmin", type=float, default=None, help="PDL on arm B: orthogonal transmission")
    mc.add_argument("--pdl-axis", type=_vector, default=BlochVector(0.0, 0.0, 1.0))
    mc.add_argument("--out", required=True)
    _add_physics(mc)
    mc.set_defaults(func=cmd_montecarlo)

    mx = sub.add_parser("maximize", help="maximum |S| over the one-parameter family")
    mx.add_argument("--system", choices=SYSTEMS, required=True)
    mx.add_argument("--unit", choices=("deg", "rad"), default="deg", help="photon angle unit")
    mx.add_argument("--out", default=None)
    _add_physics(mx)
    mx.set_defaults(func=cmd_maximize)

    rr = sub.add_parser("rerun", help="regenerate an output from its manifest")
    rr.add_argument("manifest")
    rr.add_argument("--out", default=None, help="write somewhere else instead")
    rr.set_defaults(func=cmd_rerun)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    args._argv = argv
    try:
        return args.func(args)
    except (UsageError, argparse.ArgumentTypeError) as exc:
        parser.print_usage(sys.stderr)
        print(f"bellsphere: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InsufficientDataError as exc:
        print(f"bellsphere: insufficient data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"bellsphere: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"bellsphere: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

Exit status: 0 success, 2 bad config (field-level message), 3 runtime model
error, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .body import apply_distortion, load_body_file, parse_distortion, read_body_document, \
    load_body_spec, validate_model
from .errors import BodySchemaError, SpecError, StateError
from .experiments import load_scenario, run_scenario
from .noise import NoiseModel
from .pipeline import (MODES, SINGLE, VARIANTS, JointState, TouchEvent, check_state,
                       forward_kinematics, remap_touch_single, remap_touch_triangulated,
                       somatic_localization)
from .posture import EfferenceCopy, PosturalPrior, ProprioceptiveCue, estimate_posture_at

log = logging.getLogger("bodyschema")

EXIT_CONFIG, EXIT_MODEL, EXIT_IO = 2, 3, 4


class UsageError(SpecError):
    pass


def parse_angles(text, flag="--angles"):
    """Parse ``shoulder=0,elbow=1.5708`` into a dict."""
    out = {}
    if not text:
        return out
    for item in text.split(","):
        name, sep, value = item.partition("=")
        if not sep or not name.strip():
            raise UsageError(flag, f"expected name=value, got {item!r}")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise UsageError(f"{flag} {name.strip()}", f"not a number: {value!r}") from None
    return out


def parse_taxels(text):
    """Parse ``19,23`` or ``19:1.0,23:0.5`` into ``((id, intensity), ...)``."""
    out = []
    for item in text.split(","):
        tid, _, w = item.partition(":")
        try:
            out.append((int(tid), float(w) if w else 1.0))
        except ValueError:
            raise UsageError("--taxels", f"bad taxel entry {item!r}") from None
    return tuple(out)


def _fmt(v):
    return "(" + ", ".join(f"{x:.3f}" for x in v) + ")"


def _load_models(args):
    doc = read_body_document(args.config)
    size, shape = load_body_spec(doc)
    if getattr(args, "stored", False):
        size, shape = apply_distortion(size, shape, parse_distortion(doc.get("distortion")))
    return size, shape


def _state(size, args):
    angles = parse_angles(args.angles)
    state = JointState(angles, args.time_ms or 0.0)
    missing = [j for j in size.joint_ids if j not in angles]
    check_state(size, state, allow_default=True)
    if missing:
        print(f"notice: joint(s) {', '.join(missing)} not given; using the zero posture",
              file=sys.stderr)
    return state


def _emit(args, text):
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_validate(args):
    size, shape = load_body_spec(read_body_document(args.config), strict=False)
    violations = validate_model(size, shape)
    if args.format == "json":
        text = json.dumps({"violations": [vars(v) for v in violations],
                           "count": len(violations)}, indent=2) + "\n"
    else:
        text = "".join(f"{v}\n" for v in violations) + f"{len(violations)} violations\n"
    _emit(args, text)
    return 0 if not violations else EXIT_CONFIG


def cmd_fk(args):
    size, _ = _load_models(args)
    state = _state(size, args)
    poses = forward_kinematics(size, state, allow_default=True)
    from .geometry import transform_point
    rows = {}
    for name, lm in size.landmarks.items():
        rows[name] = (transform_point(poses[lm.link], lm.offset), poses[lm.link].rotation.quat)
    if args.format == "json":
        text = json.dumps({n: {"xyz_mm": p.tolist(), "quat": list(q)}
                           for n, (p, q) in rows.items()}, indent=2) + "\n"
    else:
        text = "".join(f"{n}: {_fmt(p)} quat=({', '.join(f'{c:.6f}' for c in q)})\n"
                       for n, (p, q) in rows.items())
    _emit(args, text)
    return 0


def cmd_locate(args):
    _, shape = _load_models(args)
    touch = TouchEvent(parse_taxels(args.taxels), link=args.link)
    link, local = somatic_localization(touch, shape, args.mode)
    if args.format == "json":
        text = json.dumps({"link": link, "local_mm": local.tolist(), "mode": args.mode}) + "\n"
    else:
        text = f"{link}: {_fmt(local)}\n"
    _emit(args, text)
    return 0


def cmd_remap(args):
    size, shape = _load_models(args)
    state = _state(size, args)
    state = JointState(check_state(size, state, allow_default=True), state.timestamp)
    touch = TouchEvent(parse_taxels(args.taxels), link=args.link)
    if args.variant == SINGLE:
        res = remap_touch_single(touch, size, shape, state, args.mode)
    else:
        res = remap_touch_triangulated(touch, size, shape, state,
                                       NoiseModel(weber_fraction=args.weber),
                                       args.seed if args.seed is not None else 0, args.mode)
    if args.format == "json":
        text = json.dumps({"link": res.link, "local_mm": res.local.tolist(),
                           "spatial_mm": res.spatial.tolist(), "variant": res.variant,
                           "mode": res.mode}) + "\n"
    else:
        text = (f"somatic {res.link}: {_fmt(res.local)}\n"
                f"spatial: {_fmt(res.spatial)} [{res.variant}, {res.mode}]\n")
    _emit(args, text)
    return 0


def cmd_estimate(args):
    size, _ = _load_models(args)
    joints = list(size.joint_ids)
    prior = PosturalPrior(args.prior_std, parse_angles(args.prior_mean, "--prior-mean"))
    aff = None
    if args.angles:
        aff = ProprioceptiveCue(parse_angles(args.angles), args.afferent_std, args.latency_ms)
    eff = None
    if args.efference:
        eff = EfferenceCopy(parse_angles(args.efference, "--efference"), args.efference_std,
                            args.efference_latency_ms)
    for cue in (aff, eff):
        if cue is not None:
            for j in cue.angles:
                if j not in joints:
                    raise StateError(f"unknown joint {j!r}")
    post = estimate_posture_at(args.time_ms or 0.0, prior, aff, eff, joints=joints)
    if args.format == "json":
        text = json.dumps({"time_ms": post.timestamp, "mean": post.mean,
                           "variance": post.variance,
                           "sources": {k: list(v) for k, v in post.sources.items()}},
                          indent=2) + "\n"
    else:
        text = f"t = {post.timestamp:g} ms\n" + "".join(
            f"{j}: mean {post.mean[j]:.6f} rad, var {post.variance[j]:.6g} rad^2 "
            f"[{' + '.join(post.sources[j])}]\n" for j in joints)
    _emit(args, text)
    return 0


def cmd_experiment(args):
    sc = load_scenario(args.config).with_overrides(args.seed, args.variant, args.mode)
    report = run_scenario(sc)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    stem = out / sc.id
    written = []
    if args.format in ("csv", "svg"):
        stem.with_suffix(".csv").write_text(report.to_csv())
        written.append(stem.with_suffix(".csv"))
    stem.with_suffix(".json").write_text(report.to_json())
    written.append(stem.with_suffix(".json"))
    if args.format == "svg":
        from .plotting import plot_report
        written.append(plot_report(report, stem.with_suffix(".svg")))
    for p in written:
        print(f"wrote {p}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="bodyschema", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_default="planar_arm", formats=("text", "json")):
        sp.add_argument("--config", default=config_default,
                        help="body spec JSON (or builtin: planar_arm, hand)")
        sp.add_argument("--out", help="write output to this path instead of stdout")
        sp.add_argument("--format", choices=formats, default=formats[0])
        return sp

    sp = common(sub.add_parser("validate", help="print the model validation report"))
    sp.set_defaults(func=cmd_validate)

    for name, func, helptext in (("fk", cmd_fk, "landmark poses for a joint state"),
                                 ("locate", cmd_locate, "somatic localization of a touch"),
                                 ("remap", cmd_remap, "spatial localization of a touch")):
        sp = common(sub.add_parser(name, help=helptext))
        sp.add_argument("--stored", action="store_true",
                        help="apply the body spec's distortion (stored model)")
        if name != "locate":
            sp.add_argument("--angles", default="", help="joint angles, e.g. shoulder=0,elbow=1.57")
            sp.add_argument("--time-ms", type=float, default=0.0)
        if name != "fk":
            sp.add_argument("--taxels", required=True, help="ids, optionally id:intensity")
            sp.add_argument("--link", help="patch link when taxel ids are ambiguous")
            sp.add_argument("--mode", choices=MODES, default="pointing")
        if name == "remap":
            sp.add_argument("--variant", choices=VARIANTS, default=SINGLE)
            sp.add_argument("--weber", type=float, default=0.0, help="Weber fraction k")
            sp.add_argument("--seed", type=int)
        sp.set_defaults(func=func)

    sp = common(sub.add_parser("estimate", help="posture posterior at a query time"))
    sp.add_argument("--angles", default="", help="afferent (proprioceptive) joint angles")
    sp.add_argument("--afferent-std", type=float, default=0.1)
    sp.add_argument("--latency-ms", type=float, default=80.0)
    sp.add_argument("--prior-std", type=float, default=0.2)
    sp.add_argument("--prior-mean", default="")
    sp.add_argument("--efference", default="", help="efference-copy joint angles")
    sp.add_argument("--efference-std", type=float, default=0.1)
    sp.add_argument("--efference-latency-ms", type=float, default=0.0)
    sp.add_argument("--time-ms", type=float, default=0.0)
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("experiment", help="run a scenario and write report files")
    sp.add_argument("--config", required=True, help="scenario JSON")
    sp.add_argument("--out", help="output directory (default: current directory)")
    sp.add_argument("--format", choices=("csv", "json", "svg"), default="csv",
                    help="csv: CSV + JSON summary; json: summary only; svg: also a figure")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--variant", choices=VARIANTS)
    sp.add_argument("--mode", choices=MODES)
    sp.set_defaults(func=cmd_experiment)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BodySchemaError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

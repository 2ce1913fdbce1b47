"""Command-line frontend.

Every command loads one circuit (a preset name or a JSON file), runs one
pipeline, prints a summary table and writes its artifacts atomically with
a ``.meta.json`` provenance sidecar. Exit status: 0 success, 2 invalid
input, 3 certification failure, 4 numeric failure.
"""

import argparse
import contextlib
import json
import math
import os
import sys
import tempfile
from importlib import resources

import numpy as np

from . import __version__
from .certify import (NoCommonRateError, certificate_to_dict, certify_p_passive,
                      compose_feedback, predict_attractor, rate_intervals)
from .circuits import (Switches, bistability_check, boundedness_certificate,
                       circuit_from_dict, circuit_to_dict, closed_loop_vector_field,
                       equilibria, loop_transfer_function, opamp_certificate)
from .errors import CertificationError, NumericError, ValidationError
from .sim import (DEFAULT_DT, DEFAULT_T_END, classify_attractor, integrate,
                  multistability_probe, sweep_classification)

PRESETS = ("bistable", "ladder_oscillator", "mixed_sweep", "mixed_switching")
COMMANDS = ("certify", "rates", "equilibria", "simulate", "probe", "sweep", "reproduce")
EXIT_OK, EXIT_VALIDATION, EXIT_CERTIFICATION, EXIT_NUMERIC = 0, 2, 3, 4


# -- inputs ------------------------------------------------------------------

def _preset_text(name):
    return resources.files("ppassive.presets").joinpath(f"{name}.json").read_text()


def preset_runs():
    """Run defaults (horizons, schedules, grids) for every preset."""
    return json.loads(resources.files("ppassive.presets").joinpath("runs.json").read_text())


def load_preset(name):
    if name not in PRESETS:
        raise ValidationError(f"unknown preset {name!r}; expected one of {list(PRESETS)}")
    return circuit_from_dict(json.loads(_preset_text(name)))


def load_circuit(path):
    """Parse and validate a circuit description file."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ValidationError(f"circuit file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    return circuit_from_dict(data)


# -- outputs -----------------------------------------------------------------

@contextlib.contextmanager
def atomic_open(path):
    """Write to a temporary file next to ``path`` and rename on success."""
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def write_json(path, obj):
    with atomic_open(path) as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_artifact(path, writer, provenance):
    """Write one artifact plus its provenance sidecar ``<path>.meta.json``."""
    with atomic_open(path) as fh:
        writer(fh)
    write_json(os.fspath(path) + ".meta.json", provenance)
    return os.fspath(path)


def print_table(rows, out=None):
    out = out or sys.stdout
    rows = [[str(c) for c in r] for r in rows]
    if not rows:
        return
    widths = [max(len(r[i]) for r in rows if i < len(r)) for i in range(max(map(len, rows)))]
    for r in rows:
        out.write("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() + "\n")


def _fmt(x):
    return "inf" if x == math.inf else f"{x:.6g}"


# -- commands ----------------------------------------------------------------

class Context:
    def __init__(self, args):
        self.args = args
        self.runs = preset_runs()
        if args.preset:
            self.cl = load_preset(args.preset)
            self.run = self.runs[args.preset]
            self.name = args.preset
        else:
            self.cl = load_circuit(args.circuit)
            self.run = {}
            self.name = os.path.splitext(os.path.basename(args.circuit))[0]
        self.artifacts = []

    def option(self, key, flag=None, default=None):
        v = getattr(self.args, flag or key, None)
        if v is not None:
            return v
        return self.run.get(key, default)

    def provenance(self, command, **options):
        return {"tool": "ppassive", "version": __version__, "command": command,
                "source": self.args.preset or os.path.abspath(self.args.circuit),
                "circuit": circuit_to_dict(self.cl), "options": options}

    def out_path(self, default_name):
        out = self.args.out
        if out is None:
            return default_name
        if self.args.command == "reproduce" or out.endswith(os.sep) or os.path.isdir(out):
            return os.path.join(out, default_name)
        return out

    def echo_circuit(self):
        comps = self.cl.components
        print(f"circuit: {self.name} ({self.cl.topology})")
        print_table([["component", "value (SI)"]]
                    + [[k, repr(float(v))] for k, v in comps.items()]
                    + [["phi", json.dumps(self.cl.opamp.phi.to_dict()["params"])
                        + f" [{self.cl.opamp.phi.kind}]"],
                       ["Vr", repr(float(self.cl.Vr))],
                       ["switches", str(self.cl.switches.as_tuple())]])


def _composed_for(cl, p, lam=None):
    """Network certificates of degree ``p`` paired with their closed-loop composition."""
    g = loop_transfer_function(cl)
    op = opamp_certificate(cl.opamp)
    if lam is not None:
        net = certify_p_passive(g, lam)
        if net.degree != p:
            raise CertificationError(
                f"loop has {net.degree} dominant poles at rate {lam:g}, not {p}")
        return op, [(net, compose_feedback(op, net))]
    pairs = []
    for iv in rate_intervals(g, p):
        common = iv.intersect(op.rates)
        if common.is_empty:
            continue
        net = certify_p_passive(g, common.midpoint)
        pairs.append((net, compose_feedback(op, net)))
    return op, pairs


def cmd_rates(ctx):
    p = ctx.option("p", default=2)
    op, pairs = _composed_for(ctx.cl, p, ctx.args.lam)
    rows = [["network degree", "network rates", "closed-loop rates", "strict"]]
    for net, cert in pairs:
        rows.append([net.degree, str(net.rates), str(cert.rates), cert.strict])
    print(f"op-amp rates: {op.rates}")
    print_table(rows)
    if not pairs:
        raise NoCommonRateError(f"rates: no strictly {p}-passive rate shared with the op-amp")
    _, cert = pairs[0]
    doc = certificate_to_dict(cert)
    path = write_artifact(ctx.out_path(f"{ctx.name}_p{p}_certificate.json"),
                          lambda fh: fh.write(json.dumps(_jsonable(doc), indent=2) + "\n"),
                          ctx.provenance("rates", p=p, lam=ctx.args.lam))
    ctx.artifacts.append(path)
    return cert


def cmd_certify(ctx):
    g = loop_transfer_function(ctx.cl)
    degrees = [ctx.args.p] if ctx.args.p is not None else range(g.order + 1)
    found = []
    for p in degrees:
        try:
            op, pairs = _composed_for(ctx.cl, p, ctx.args.lam)
        except CertificationError:
            if ctx.args.p is not None:
                raise
            continue
        found.extend(pairs)
    op = opamp_certificate(ctx.cl.opamp)
    try:
        bound = boundedness_certificate(ctx.cl)
        bounded = True
    except CertificationError:
        bound, bounded = None, False
    rows = [["degree", "closed-loop rates", "strict", "prediction"]]
    for _, cert in found:
        pred = predict_attractor(cert.degree, cert.strict, bounded)
        rows.append([cert.degree, str(cert.rates), cert.strict, pred.kind.value])
    print(f"op-amp rates: {op.rates}")
    print_table(rows)
    if bound is not None:
        print(f"bounded: radius r = {_fmt(bound.r)} V, storage level {_fmt(bound.level)}")
    if not found:
        raise NoCommonRateError("certify: no closed-loop certificate at any degree")
    doc = {"certificates": [certificate_to_dict(c) for _, c in found],
           "bounded": bounded,
           "boundedness": None if bound is None else
           {"r": bound.r, "z_radius": bound.z_radius, "level": bound.level,
            "P": bound.P}}
    path = write_artifact(ctx.out_path(f"{ctx.name}_certificates.json"),
                          lambda fh: fh.write(json.dumps(_jsonable(doc), indent=2) + "\n"),
                          ctx.provenance("certify", p=ctx.args.p, lam=ctx.args.lam))
    ctx.artifacts.append(path)
    return found


def cmd_equilibria(ctx):
    eqs = equilibria(ctx.cl)
    rows = [["x (V)", "stability", "unstable dim", "max Re eig"]]
    for e in eqs:
        rows.append([f"{e.x:.6g}", e.stability, e.unstable_dim,
                     f"{float(np.max(e.eigenvalues.real)):.6g}"])
    print_table(rows)
    doc = {"equilibria": [{"state": e.state, "stability": e.stability,
                           "eigenvalues_real": e.eigenvalues.real,
                           "eigenvalues_imag": e.eigenvalues.imag} for e in eqs]}
    if ctx.cl.topology == "bistable":
        doc["bistability_condition"] = bistability_check(ctx.cl)
        print(f"bistability condition holds: {doc['bistability_condition']}")
    path = write_artifact(ctx.out_path(f"{ctx.name}_equilibria.json"),
                          lambda fh: fh.write(json.dumps(_jsonable(doc), indent=2) + "\n"),
                          ctx.provenance("equilibria"))
    ctx.artifacts.append(path)
    return eqs


def _schedule(ctx):
    sched = ctx.run.get("schedule")
    if not sched:
        return None
    return [(float(t), Switches(bool(a), bool(b))) for t, (a, b) in sched]


def cmd_simulate(ctx):
    dt = ctx.option("dt", default=DEFAULT_DT)
    t_end = ctx.option("t_end", default=DEFAULT_T_END)
    x0 = np.zeros(ctx.cl.state_dim)
    x0[0] = ctx.run.get("x0_opamp", 0.1)
    sched = _schedule(ctx)
    traj = integrate(ctx.cl, x0, t_end, dt, schedule=sched)
    ends = [t for t, _ in traj.switch_log[1:]] + [math.inf]
    rows = [["segment", "switches", "attractor", "period (s)", "amplitude (V)", "final x (V)"]]
    for (t0, sw), t1 in zip(traj.switch_log, ends):
        seg = traj.segment(t0, t1)
        cl_seg = ctx.cl.with_switches(sw)
        rep = classify_attractor(seg, lambda y, c=cl_seg: closed_loop_vector_field(c, y))
        rows.append([f"[{_fmt(t0)}, {_fmt(min(t1, t_end))})", sw.as_tuple(), rep.kind,
                     _fmt(rep.period) if rep.period else "-",
                     _fmt(rep.amplitude) if rep.amplitude else "-", f"{seg.x[-1]:.6g}"])
    print_table(rows)
    path = write_artifact(ctx.out_path(f"{ctx.name}_trajectory.csv"), traj.write_csv,
                          ctx.provenance("simulate", dt=dt, t_end=t_end, x0=x0,
                                         schedule=[(t, sw.as_tuple()) for t, sw in sched or []]))
    ctx.artifacts.append(path)
    return traj


def cmd_probe(ctx):
    probe = ctx.run.get("probe", {})
    n = ctx.args.ics or probe.get("ics", 200)
    radius = ctx.args.radius or probe.get("radius", 50.0)
    seed = ctx.args.seed if ctx.args.seed is not None else probe.get("seed", 0)
    t_end = ctx.args.t_end or probe.get("t_end", 5.0)
    dt = ctx.args.dt or DEFAULT_DT
    res = multistability_probe(ctx.cl, n, radius, seed, t_end=t_end, dt=dt,
                               workers=ctx.args.workers)
    rows = [["cluster", "x (V)", "members"]]
    for i, (loc, members) in enumerate(res.clusters):
        rows.append([i, f"{loc[0]:.6g}", len(members)])
    print_table(rows)
    print(f"undetermined runs: {len(res.undetermined)}")
    doc = {"clusters": [{"location": loc, "members": list(m)} for loc, m in res.clusters],
           "undetermined": list(res.undetermined), "initial_states": res.initial_states,
           "generator": "numpy PCG64", "seed": seed}
    path = write_artifact(ctx.out_path(f"{ctx.name}_probe.json"),
                          lambda fh: fh.write(json.dumps(_jsonable(doc), indent=2) + "\n"),
                          ctx.provenance("probe", ics=n, radius=radius, seed=seed,
                                         t_end=t_end, dt=dt))
    ctx.artifacts.append(path)
    return res


def cmd_sweep(ctx):
    if ctx.cl.topology != "mixed_feedback":
        raise ValidationError("sweep needs a mixed_feedback circuit")
    n = ctx.args.grid or ctx.run.get("grid", 60)
    top = ctx.run.get("R_max", 3000.0)
    lo = top / n
    grid = np.linspace(lo, top, n)
    c = ctx.cl.components
    m = sweep_classification(c["R1"], c["R2"], c["C1"], c["C2"], ctx.cl.opamp,
                             grid, grid, workers=ctx.args.workers)
    counts = m.counts()
    print_table([["label", "cells"]] + [[k, counts.get(k, 0)] for k in ("p0", "p2", "none")])
    path = write_artifact(ctx.out_path(f"{ctx.name}_map.csv"), m.write_csv,
                          ctx.provenance("sweep", grid=n, R_min=lo,
                                         R_max=float(grid[-1])))
    ctx.artifacts.append(path)
    return m


SCENARIOS = {
    "bistable": (cmd_equilibria, cmd_probe, cmd_simulate),
    "ladder_oscillator": (cmd_rates, cmd_equilibria, cmd_simulate),
    "mixed_sweep": (cmd_sweep,),
    "mixed_switching": (cmd_simulate,),
}


def cmd_reproduce(ctx):
    if not ctx.args.preset:
        raise ValidationError("reproduce needs --preset")
    if ctx.args.out is None:
        ctx.args.out = f"reproduce_{ctx.name}"
    print(f"scenario: {ctx.run.get('scenario', ctx.name)}")
    for step in SCENARIOS[ctx.name]:
        print(f"\n== {step.__name__[4:]} ==")
        step(ctx)


HANDLERS = {"certify": cmd_certify, "rates": cmd_rates, "equilibria": cmd_equilibria,
            "simulate": cmd_simulate, "probe": cmd_probe, "sweep": cmd_sweep,
            "reproduce": cmd_reproduce}


def build_parser():
    ap = argparse.ArgumentParser(prog="ppassive", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"ppassive {__version__}")
    ap.add_argument("command", choices=COMMANDS)
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=PRESETS)
    src.add_argument("--circuit", metavar="FILE")
    ap.add_argument("--p", type=int, help="passivity degree")
    ap.add_argument("--lambda", dest="lam", type=float, help="rate to certify at")
    ap.add_argument("--dt", type=float)
    ap.add_argument("--t-end", dest="t_end", type=float)
    ap.add_argument("--ics", type=int, help="number of random initial states")
    ap.add_argument("--radius", type=float, help="initial-state ball radius (V)")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--grid", type=int, help="sweep points per resistor axis")
    ap.add_argument("--out", help="artifact path (directory for reproduce)")
    ap.add_argument("--workers", type=int, default=None,
                    help="worker pool size (default: number of processors)")
    return ap


def _validate(args):
    bad = []
    for name in ("dt", "t_end", "radius"):
        v = getattr(args, name)
        if v is not None and not (math.isfinite(v) and v > 0):
            bad.append(f"--{name.replace('_', '-')} must be > 0")
    for name in ("ics", "grid", "workers"):
        v = getattr(args, name)
        if v is not None and v < 1:
            bad.append(f"--{name} must be >= 1")
    if args.p is not None and args.p < 0:
        bad.append("--p must be >= 0")
    if args.lam is not None and not (math.isfinite(args.lam) and args.lam >= 0):
        bad.append("--lambda must be >= 0")
    if bad:
        raise ValidationError("; ".join(bad), bad)


def run(argv=None):
    """Execute one command; returns the exit status."""
    args = build_parser().parse_args(argv)
    try:
        _validate(args)
        ctx = Context(args)
        ctx.echo_circuit()
        print()
        HANDLERS[args.command](ctx)
        for path in ctx.artifacts:
            print(f"wrote {path}")
        return EXIT_OK
    except ValidationError as exc:
        print(f"{args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except CertificationError as exc:
        print(f"{args.command}: certification failed: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATION
    except NumericError as exc:
        print(f"{args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()

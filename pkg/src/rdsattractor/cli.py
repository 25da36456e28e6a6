"""Command line experiment runner.

    rdsattractor COMMAND [--config PATH] [--seed U64] [--out DIR] [--set key=value ...]

Every run writes manifest.txt (resolved configuration and its hash), one or
more CSV files and summary.txt into --out. All randomness is derived from
--seed through per-purpose labels.
"""
from __future__ import annotations

import argparse
import math
import os
import shutil
import sys
import tempfile

import numpy as np

from . import __version__
from .attractor import (UnitBall, build_discrete, build_param_family, dimension_report,
                        dump_attractor, load_rows, semi_invariance_defects, toy_absorbing_radii)
from .cocycle import DiscreteRDS, probe_points
from .config import Settings, apply_overrides, config_hash, derive_seed, read_config
from .diagnostics import attraction_rate, box_dimension, symmetric_distance
from .errors import ConfigError, RDSError
from .nets import BallNets, property_battery
from .noise import sample_path
from .systems import AbsorbingRadius, GalerkinSystem, ToySystem, config_from_settings, toy_pullback_point

COMMANDS = ("simulate", "build-attractor", "sweep-epsilon", "dimension", "rate",
            "toy-contrast", "nets-selftest")

DEFAULTS = {
    "system": "toy",
    "epsilon": "0.2",
    "toy.dt": "0.01",
    "toy.R0": "1.1",
    "tau0": "1.0",
    "r": "0.5",
    "depth": "10",
    "probes": "64",
    "probe.seed": "0",
    "unit.pitch": "0.00390625",
    "history": "40",
    "simulate.T": "10",
    "simulate.u0": "0.5",
    "simulate.every": "10",
    "sweep.eps": "0.4,0.2,0.1,0.05",
    "sweep.seeds": "20",
    "rate.ball": "3.0",
    "rate.probes": "601",
    "contrast.T_pull": "50",
    "contrast.seeds": "100",
    "contrast.attractor_seeds": "5",
    "dimension.input": "",
    "dimension.eps_lo": "0.001",
    "dimension.eps_hi": "0.25",
    "dimension.levels": "8",
    "selftest.cases": "100",
}


def resolve(config_path, overrides):
    conf = dict(DEFAULTS)
    if config_path:
        conf.update(read_config(config_path))
    return apply_overrides(conf, overrides)


# ---------------------------------------------------------------------------
# shared setup

class Context:
    def __init__(self, conf, seed, out):
        self.conf = conf
        self.s = Settings(conf)
        self.seed = seed
        self.out = out
        self.hash = config_hash(conf)
        self.summary = {}

    def path_seed(self, label="path"):
        return derive_seed(self.seed, label)

    def csv(self, name, header, rows):
        with open(os.path.join(self.out, name), "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(x) for x in row) + "\n")

    def is_toy(self):
        kind = self.s.text("system")
        if kind not in ("toy", "pde"):
            raise ConfigError(f"system must be toy or pde, got {kind!r}")
        return kind == "toy"

    def toy_dt(self):
        return self.s.real("toy.dt")

    def pde_config(self, eps=None):
        cfg = config_from_settings(self.s)
        return cfg if eps is None else cfg.with_epsilon(eps)

    def make_path(self, seed, tmin, tmax):
        if self.is_toy():
            dt = self.toy_dt()
            return sample_path(seed, (_align(tmin, dt), _align(tmax, dt)), dt, 1, [1.0], [1.0])
        cfg = self.pde_config()
        lo = _align(tmin - cfg.burn_in, cfg.dt) if cfg.epsilon != 0 else _align(tmin, cfg.dt)
        return sample_path(seed, (lo, _align(tmax, cfg.dt)), cfg.dt, cfg.J, cfg.b, cfg.lam)

    def system(self, eps):
        if self.is_toy():
            return ToySystem(eps, self.toy_dt())
        return GalerkinSystem(self.pde_config(eps))

    def rds(self, path, eps):
        return DiscreteRDS(self.system(eps), path, self.s.real("tau0"))

    def attractor_path(self, seed):
        n, tau0 = self.s.integer("depth"), self.s.real("tau0")
        back = -(n + 1) * tau0 - (0 if self.is_toy() else self.s.real("history"))
        return self.make_path(seed, back, 2 * tau0)

    def unit(self, lam):
        return UnitBall(lam, self.s.real("unit.pitch"))

    def radii(self, rds):
        n, r = self.s.integer("depth"), self.s.real("r")
        if isinstance(rds.system, ToySystem):
            return toy_absorbing_radii(rds, n, r, self.s.real("toy.R0"))
        ar = AbsorbingRadius(rds.system.cfg, rds.path, rds.tau0)
        return np.array([ar(k * rds.tau0) for k in range(-n, 1)])


def _align(t, dt):
    return round(t / dt) * dt


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


# ---------------------------------------------------------------------------
# commands

def cmd_simulate(ctx):
    s = ctx.s
    T = s.real("simulate.T")
    every = s.integer("simulate.every")
    path = ctx.make_path(ctx.path_seed(), 0.0, T)
    eps = s.real("epsilon")
    sysm = ctx.system(eps)
    given = s.reals("simulate.u0")
    if len(given) > sysm.J:
        raise ConfigError(f"simulate.u0 has {len(given)} entries for {sysm.J} modes")
    u = np.zeros((1, sysm.J))
    u[0, :len(given)] = given
    n_total = round(T / sysm.dt)
    rows = [(0.0, *u[0])]
    i = 0
    while i < n_total:
        n = min(every, n_total - i)
        u = sysm.advance(u, path, i, n)
        i += n
        rows.append((i * sysm.dt, *u[0]))
    ctx.csv("trajectory.csv", ["t"] + [f"coeff_{j + 1}" for j in range(sysm.J)], rows)
    ctx.summary.update({"steps": n_total, "final_h_norm": float(np.linalg.norm(u[0]))})


def _build(ctx, seed):
    s = ctx.s
    path = ctx.attractor_path(seed)
    rds = ctx.rds(path, s.real("epsilon"))
    unit = ctx.unit(rds.lam)
    approx = build_discrete(rds, s.integer("depth"), s.real("r"), radii=ctx.radii(rds),
                            unit=unit, probes=s.integer("probes"), probe_seed=s.integer("probe.seed"))
    return path, rds, unit, approx


def cmd_build_attractor(ctx):
    seed = ctx.path_seed()
    _, rds, unit, approx = _build(ctx, seed)
    dump_attractor(approx, os.path.join(ctx.out, "attractor"), seed, ctx.hash)
    defects = semi_invariance_defects(approx, rds)
    ctx.csv("K_seq.csv", ["k", "K_k", "probes", "region_radius"],
            [(k - approx.depth, K, ctx.s.integer("probes"), R + approx.r)
             for k, (K, R) in enumerate(zip(approx.K_seq, approx.radii[:-1]))])
    rep = dimension_report(approx, unit, eps_hi=ctx.s.real("dimension.eps_hi"))
    ctx.csv("dimension.csv", ["eps", "count"], zip(rep.eps_grid, rep.counts))
    ctx.summary.update({
        "depth": approx.depth, "eps_n": approx.eps_n, "size_E_n": len(approx.E_n),
        "semi_invariance_max_defect": max(defects, default=0.0),
        "absorbing_violations": len(approx.violations),
        "xi": rep.xi, "C_entropy": rep.C_entropy, "d_bound": rep.d_bound,
        "fitted_dim": rep.fitted_dim,
    })


def _family(ctx, path, grid, unit, ball_nets):
    s = ctx.s
    return build_param_family(lambda e: ctx.rds(path, e), grid, s.integer("depth"), s.real("r"),
                              radii_for=ctx.radii, unit=unit, ball_nets=ball_nets,
                              probes=s.integer("probes"), probe_seed=s.integer("probe.seed"))


def _shared_nets(ctx):
    """Unit-ball cloud and U_0 nets shared by every member of a family."""
    if ctx.is_toy():
        lam = np.ones(1)
        return ctx.unit(lam), BallNets(lam, ctx.s.real("toy.R0") + 2.0)
    return ctx.unit(ctx.pde_config().lam), None


def cmd_sweep_epsilon(ctx):
    s = ctx.s
    eps = s.reals("sweep.eps")
    if not eps or any(not 0 < abs(e) <= 1 for e in eps):
        raise ConfigError("sweep.eps must be non-zero values in [-1, 1]")
    unit, ball_nets = _shared_nets(ctx)
    table = []
    for i in range(s.integer("sweep.seeds")):
        seed = ctx.path_seed(f"path:{i}")
        fam = _family(ctx, ctx.attractor_path(seed), [0.0] + eps, unit, ball_nets)
        for e in eps:
            table.append((i, seed, e, symmetric_distance(fam[e].E_n, fam[0.0].E_n)))
    ctx.csv("sweep.csv", ["seed_index", "seed", "epsilon", "ds_to_eps0"], table)
    med = [float(np.median([row[3] for row in table if row[2] == e])) for e in eps]
    ctx.csv("sweep_median.csv", ["epsilon", "median_ds"], zip(eps, med))
    fit = np.polyfit(np.log(np.abs(eps)), np.log(med), 1) if all(m > 0 for m in med) else [math.nan]
    monotone = all(b <= a + 0.02 for a, b in zip(med, med[1:]))
    ctx.summary.update({
        "median_first": med[0], "median_last": med[-1],
        "decrease_factor": med[0] / med[-1] if med[-1] > 0 else math.inf,
        "monotone_within_0.02": monotone, "holder_exponent": float(fit[0]),
    })


def cmd_dimension(ctx):
    s = ctx.s
    src = s.text("dimension.input")
    if not src:
        raise ConfigError("set dimension.input to an E_k.csv file or an attractor directory")
    if os.path.isdir(src):
        man = Settings(read_config(os.path.join(src, "manifest.txt")))
        src = os.path.join(src, f"E_{man.integer('depth')}.csv")
    pts = load_rows(src)
    dim, resid, grid, counts = box_dimension(pts, s.real("dimension.eps_lo"), s.real("dimension.eps_hi"),
                                             s.integer("dimension.levels"))
    ctx.csv("dimension.csv", ["eps", "count"], zip(grid, counts))
    ctx.summary.update({"points": len(pts), "box_dimension": dim, "residual": resid})


def cmd_rate(ctx):
    s = ctx.s
    path, rds, _, approx = _build(ctx, ctx.path_seed())
    B = s.real("rate.ball")
    n_probes = s.integer("rate.probes")
    if rds.J == 1:
        probes = np.linspace(-B, B, n_probes)[:, None]
    else:
        probes = probe_points(np.zeros(rds.J), B, n_probes, ctx.path_seed("rate.probes"), rds.J)
    fit = attraction_rate(approx, rds, probes)
    ctx.csv("rate.csv", ["k", "distance", "above_floor"],
            [(k + 1, d, int(u)) for k, (d, u) in enumerate(zip(fit.distances, fit.used))])
    T = _absorption_steps(rds, probes, approx.radii)
    ctx.summary.update({
        "slope_log2": fit.slope_log2, "beta": fit.beta, "C_fit": fit.C, "floor": fit.floor,
        "indeterminate": fit.indeterminate, "T_B": T,
        "C_B": 2.0 ** T * approx.r if T is not None else math.nan,
    })


def _absorption_steps(rds, probes, radii):
    """Steps from slot -n until the probes stay inside the absorbing balls."""
    n = len(radii) - 1
    u = np.asarray(probes, dtype=float)
    inside = []
    for k in range(n + 1):
        if k:
            u = rds.step_batch(k - 1 - n, u)
        norms = np.sqrt(np.sum(rds.lam * u * u, axis=1))
        inside.append(bool(np.all(norms <= radii[k])))
    if not inside[-1]:
        return None
    k = n
    while k > 0 and inside[k - 1]:
        k -= 1
    return k


def cmd_toy_contrast(ctx):
    s = ctx.s
    if not ctx.is_toy():
        raise ConfigError("toy-contrast runs on the toy system")
    eps = s.real("epsilon")
    T_pull = s.real("contrast.T_pull")
    interval = np.linspace(-1, 1, 2001)[:, None]
    starts = np.linspace(-3, 3, 61)[:, None]
    rows = []
    unit, ball_nets = _shared_nets(ctx)
    M0 = None
    n_attr = s.integer("contrast.attractor_seeds")
    for i in range(s.integer("contrast.seeds")):
        seed = ctx.path_seed(f"path:{i}")
        dt = ctx.toy_dt()
        back = max(T_pull, (s.integer("depth") + 1) * s.real("tau0"))
        path = sample_path(seed, (-_align(back, dt), 2.0), dt, 1, [1.0], [1.0])
        pb = toy_pullback_point(path, eps, T_pull)
        n = round(T_pull / dt)
        A = ToySystem(eps, dt).advance(starts, path, -n, n)
        ds_min = symmetric_distance(A, interval)
        ds_exp = math.nan
        if i < n_attr:
            fam = _family(ctx, path, [0.0, eps], unit, ball_nets)
            M0 = fam[0.0].E_n
            ds_exp = symmetric_distance(fam[eps].E_n, M0)
        rows.append((i, seed, pb.point, pb.gap, int(pb.gap <= 1e-6), ds_min, ds_exp))
    ctx.csv("contrast.csv", ["seed_index", "seed", "pullback_point", "gap", "collapsed",
                             "ds_minimal_to_interval", "ds_exponential_to_eps0"], rows)
    gaps = np.array([r[3] for r in rows])
    dmin = np.array([r[5] for r in rows])
    dexp = np.array([r[6] for r in rows if not math.isnan(r[6])])
    ctx.summary.update({
        "seeds": len(rows), "collapse_fraction": float(np.mean(gaps <= 1e-6)),
        "median_gap": float(np.median(gaps)),
        "fraction_ds_minimal_ge_0.8": float(np.mean(dmin >= 0.8)),
        "median_ds_exponential": float(np.median(dexp)) if len(dexp) else math.nan,
    })


def cmd_nets_selftest(ctx):
    tally = property_battery(ctx.s.integer("selftest.cases"), ctx.path_seed("selftest"))
    ctx.csv("selftest.csv", ["property", "cases", "failures"],
            [(k, c, f) for k, (c, f) in sorted(tally.items())])
    failures = sum(f for _, f in tally.values())
    ctx.summary.update({"properties": len(tally), "failures": failures})
    return failures


HANDLERS = {
    "simulate": cmd_simulate,
    "build-attractor": cmd_build_attractor,
    "sweep-epsilon": cmd_sweep_epsilon,
    "dimension": cmd_dimension,
    "rate": cmd_rate,
    "toy-contrast": cmd_toy_contrast,
    "nets-selftest": cmd_nets_selftest,
}


# ---------------------------------------------------------------------------
# entry point

def build_parser():
    parser = argparse.ArgumentParser(prog="rdsattractor", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key = value configuration file")
        p.add_argument("--seed", type=int, default=0, help="root seed (unsigned 64-bit)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a configuration key (repeatable)")
    return parser


def _write_kv(fname, mapping):
    with open(fname, "w") as fh:
        for k, v in mapping.items():
            fh.write(f"{k} = {_fmt(v)}\n")


def run(command, config_path=None, seed=0, out_dir="out", overrides=()):
    """Run one experiment; returns the exit status."""
    if not 0 <= seed < 2 ** 64:
        print("ERROR config seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 1
    os.makedirs(out_dir, exist_ok=True)
    stage = tempfile.mkdtemp(prefix=".partial-", dir=out_dir)
    try:
        conf = resolve(config_path, overrides)
        ctx = Context(conf, seed, stage)
        manifest = {"command": command, "seed": seed, "config_hash": ctx.hash}
        manifest.update({f"config.{k}": conf[k] for k in sorted(conf)})
        _write_kv(os.path.join(stage, "manifest.txt"), manifest)
        failures = HANDLERS[command](ctx)
        _write_kv(os.path.join(stage, "summary.txt"), ctx.summary)
        for name in os.listdir(stage):
            dst = os.path.join(out_dir, name)
            if os.path.isdir(dst):
                shutil.rmtree(dst)
            os.replace(os.path.join(stage, name), dst)
        if failures:
            print(f"ERROR selftest {failures} property check(s) failed", file=sys.stderr)
            return 1
        return 0
    except RDSError as exc:
        print(f"ERROR {exc.code} {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"ERROR io {exc}", file=sys.stderr)
        return 1
    finally:
        shutil.rmtree(stage, ignore_errors=True)


def main(argv=None):
    args = build_parser().parse_args(argv)
    return run(args.command, args.config, args.seed, args.out, args.set)

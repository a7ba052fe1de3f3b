"""Command line runner.

Exit codes: 0 success, 1 a check failed, 2 invalid configuration or input.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import inspect
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .analysis import REPORT_SCHEMA, cf_compare, compare_rows, ecf, report_csv
from .functionals import (WindowPolicy, particle_functional_sample, prop1_ladder, read_jsonl,
                          rosen_ladder, samples_from_array, write_jsonl)
from .limits import CfQuery, FieldPool, limit_cf
from .localtime import local_time_moment_exact
from .model import LevyModel, LimitSpec, ModelParams, SlowlyVarying, validate
from .sampling import RngSpec, simulate_path
from .testfunctions import GaussianBumps, HeavyTailPair, IntervalCombination

LADDER_SCHEMA = "hsssi.ladder/1"
TABLE_SCHEMA = "hsssi.table/1"


class ConfigError(ValueError):
    """Invalid configuration; reported with exit code 2."""


# ---------------------------------------------------------------------------
# configuration

EXPERIMENTS = {
    "localtime-moments": ex.localtime_oracle_experiment,
    "localtime-scaling": ex.scaling_experiment,
    "prop1": ex.prop1_experiment,
    "rosen": ex.rosen_experiment,
    "psi-ladder": ex.psi_ladder_experiment,
    "fdd": ex.fdd_experiment,
    "selfsim": ex.selfsim_experiment,
    "stationarity": ex.stationarity_experiment,
    "epsilon": ex.epsilon_experiment,
}


@dataclasses.dataclass
class ExperimentConfig:
    experiment: str
    seed: int
    regime: str = "first-order"
    params: dict = dataclasses.field(default_factory=lambda: {"alpha": 1.5, "beta": 1.5})
    phi: dict | None = None
    T: list | None = None
    replicas: int | None = None
    times: list | None = None
    theta: list | None = None
    window: dict = dataclasses.field(default_factory=dict)   # omitted keys: experiment defaults
    output: str = "hsssi-out"
    options: dict = dataclasses.field(default_factory=dict)

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        names = {f.name for f in dataclasses.fields(cls)}
        for k in d:
            if k not in names:
                raise ConfigError(f"unknown config key {k!r}")
        if "seed" not in d:
            raise ConfigError("config key 'seed' is mandatory")
        if "experiment" not in d:
            raise ConfigError("config key 'experiment' is mandatory")
        seed = d["seed"]
        if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed < 2 ** 64:
            raise ConfigError("'seed' must be an unsigned 64-bit integer")
        cfg = cls(**d)
        cfg.check()
        return cfg

    def to_dict(self):
        return dataclasses.asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON: {e}") from None
        return cls.from_dict(d)

    def check(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {sorted(EXPERIMENTS)}")
        for k in self.params:
            if k not in ("alpha", "beta", "epsilon_cut", "kappa_c", "kappa_d", "gamma1", "gamma2"):
                raise ConfigError(f"unknown config key 'params.{k}'")
        for k in self.window:
            if k not in ("K", "tolerance"):
                raise ConfigError(f"unknown config key 'window.{k}'")
        sig = inspect.signature(EXPERIMENTS[self.experiment]).parameters
        for k in self.options:
            if k not in sig or k in ("spec", "phi", "workers"):
                raise ConfigError(f"unknown config key 'options.{k}' for {self.experiment}")
        viol = validate(self.model_params(), self.make_phi(), self.make_spec())
        if viol:
            raise ConfigError("; ".join(viol))

    def model_params(self):
        p = {k: v for k, v in self.params.items() if k not in ("gamma1", "gamma2")}
        try:
            return ModelParams(**p)
        except TypeError as e:
            raise ConfigError(str(e)) from None

    def make_spec(self):
        params = self.model_params()
        if self.regime == "first-order":
            return LimitSpec.first_order(params)
        if self.regime == "second-order":
            return LimitSpec.second_order(params)
        if self.regime in ("heavy-symmetric", "heavy-asymmetric"):
            g1 = self.params.get("gamma1", 1.1)
            g2 = self.params.get("gamma2", g1 if self.regime == "heavy-symmetric" else 1.2)
            return LimitSpec.heavy(params, g1, g2)
        raise ConfigError(f"unknown regime {self.regime!r}")

    def make_phi(self):
        if self.phi is not None:
            return phi_from_dict(self.phi)
        spec = self.make_spec()
        if spec.family.is_heavy:
            return HeavyTailPair(spec.gamma1, spec.gamma2)
        return ex.default_spec(self.regime)[1]

    def kwargs(self):
        """Keyword arguments for the experiment function."""
        sig = inspect.signature(EXPERIMENTS[self.experiment]).parameters
        kw = {"seed": self.seed}
        if self.T is not None:
            kw["Ts"] = [float(t) for t in self.T]
        if self.replicas is not None:
            for name in ("n_replicas", "n_paths"):
                if name in sig:
                    kw[name] = int(self.replicas)
                    break
        if self.times is not None and "times" in sig:
            kw["times"] = tuple(float(t) for t in self.times)
        if "family" in sig:
            kw["family"] = self.regime
        if "spec" in sig:
            kw["spec"] = self.make_spec()
        if "phi" in sig and (self.phi is not None or self.experiment in ("fdd", "epsilon")):
            kw["phi"] = self.make_phi()
        if "K" in sig and "K" in self.window:
            kw["K"] = float(self.window["K"])
        if "beta" in sig:
            kw["beta"] = float(self.params.get("beta", 1.5))
        kw.update(self.options)
        return {k: v for k, v in kw.items() if k in sig}


def phi_from_dict(d):
    d = dict(d)
    kind = d.pop("type", None)
    builders = {
        "indicator": lambda: IntervalCombination.indicator(d.pop("a", 0.0), d.pop("b", 1.0),
                                                           d.pop("c", 1.0)),
        "haar": IntervalCombination.haar,
        "intervals": lambda: IntervalCombination(tuple(tuple(p) for p in d.pop("pieces"))),
        "gaussian-difference": lambda: GaussianBumps.difference(d.pop("s1", 1.0), d.pop("s2", 2.0)),
        "heavy-pair": lambda: HeavyTailPair(d.pop("gamma1"), d.pop("gamma2"), d.pop("amp1", 1.0),
                                            d.pop("amp2", 1.0)),
    }
    if kind is None:
        raise ConfigError("phi needs a 'type'")
    if kind not in builders:
        raise ConfigError(f"unknown phi type {kind!r}")
    try:
        phi = builders[kind]()
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"invalid phi: {e}") from None
    if d:
        raise ConfigError(f"unknown config key 'phi.{next(iter(d))}'")
    return phi


PRESETS = {
    "thm1-small": {
        "experiment": "fdd", "seed": 42, "regime": "first-order",
        "params": {"alpha": 1.5, "beta": 1.5}, "phi": {"type": "indicator", "a": -1.0, "b": 1.0},
        "T": [100.0, 1000.0, 10000.0], "replicas": 2000, "times": [0.5, 1.0],
        "output": "thm1-small",
        "options": {"prelimit_paths": 400, "limit_paths": 1000},
    },
    "rosen-small": {
        "experiment": "rosen", "seed": 42, "params": {"alpha": 1.5, "beta": 1.5},
        "T": [100.0, 1000.0], "replicas": 1000, "output": "rosen-small",
    },
    "localtime-small": {
        "experiment": "localtime-moments", "seed": 42, "replicas": 2000,
        "output": "localtime-small", "options": {"betas": [1.5]},
    },
}


def load_config(path=None, preset=None):
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        return ExperimentConfig.from_dict(json.loads(json.dumps(PRESETS[preset])))
    if path is None:
        raise ConfigError("need a config file or --preset")
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from None
    return ExperimentConfig.from_json(text)


# ---------------------------------------------------------------------------
# output helpers

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def table_csv(header, rows, schema=TABLE_SCHEMA):
    buf = io.StringIO()
    buf.write(f"# schema: {schema}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def write_result(result: ex.ExperimentResult, outdir: Path, config: ExperimentConfig | None = None):
    outdir.mkdir(parents=True, exist_ok=True)
    for name, (header, rows) in sorted(result.tables.items()):
        schema = {"ladder": LADDER_SCHEMA, "report": REPORT_SCHEMA}.get(name, TABLE_SCHEMA)
        (outdir / f"{name}.csv").write_text(table_csv(header, rows, schema))
    summary = result.summary()
    if config is not None:
        summary["config"] = config.to_dict()
    (outdir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def _print_checks(summary, out=sys.stdout):
    for c in summary["checks"]:
        tag = "" if c.get("required", True) else " (diagnostic)"
        print(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']}{tag}: {c['detail']}", file=out)


# ---------------------------------------------------------------------------
# subcommands

def cmd_run(args):
    cfg = load_config(args.config, args.preset)
    if args.print_config:
        print(cfg.to_json())
        return 0
    out = Path(args.output or cfg.output)
    result = EXPERIMENTS[cfg.experiment](**cfg.kwargs())
    summary = write_result(result, out, cfg)
    _print_checks(summary)
    return 0 if result.passed else 1


def _params_from_args(args):
    try:
        return ModelParams(args.alpha, args.beta, args.epsilon)
    except TypeError as e:
        raise ConfigError(str(e)) from None


def _spec_from_args(args, params):
    if args.family in ("heavy-symmetric", "heavy-asymmetric"):
        g2 = args.gamma2 if args.gamma2 is not None else (
            args.gamma1 if args.family == "heavy-symmetric" else 1.2)
        return LimitSpec.heavy(params, args.gamma1, g2)
    if args.family == "second-order":
        return LimitSpec.second_order(params)
    return LimitSpec.first_order(params)


def cmd_validate(args):
    if args.config:
        d = json.loads(Path(args.config).read_text())
        cfg = ExperimentConfig.from_dict(d)   # raises ConfigError on violations
        print(f"ok: {cfg.experiment} ({cfg.regime})")
        return 0
    params = _params_from_args(args)
    spec = _spec_from_args(args, params)
    phi = phi_from_dict(json.loads(args.phi)) if args.phi else None
    viol = validate(params, phi, spec)
    if viol:
        for v in viol:
            print(f"violation: {v}", file=sys.stderr)
        return 2
    print(f"ok: {spec.family.value}, H = {spec.hurst:.6f}")
    return 0


def _model_from_args(args):
    if args.preset_f in (None, "none"):
        return LevyModel.pure_stable(args.beta)
    sv = {"log": SlowlyVarying.log, "iterated-log": SlowlyVarying.iterated_log}[args.preset_f]()
    return LevyModel.rv_density(args.beta, sv)


def cmd_simulate_path(args):
    model = _model_from_args(args)
    path = simulate_path(model, args.horizon, args.dt, RngSpec(args.seed, args.stream))
    if args.out:
        path.dump(args.out)
        print(f"wrote {path.values.size} values to {args.out}")
    else:
        print(table_csv(("t", "x"), zip(path.times, path.values), "hsssi.path/1"), end="")
    return 0


def cmd_localtime_moments(args):
    v = local_time_moment_exact(args.beta, args.t, args.x, args.n)
    print(f"{v:.6g}")
    return 0


def _times(s):
    return [float(t) for t in s.split(",")]


def cmd_prop1(args):
    model = _model_from_args(args)
    phi = phi_from_dict(json.loads(args.phi))
    Ts = _times(args.T)
    vals = prop1_ladder(model, phi, Ts, args.x, _times(args.times), args.replicas,
                        RngSpec(args.seed, 300), args.dt)
    return _emit_samples(args, vals, "prop1")


def cmd_rosen(args):
    phi = phi_from_dict(json.loads(args.phi))
    vals = rosen_ladder(args.beta, phi, _times(args.T), _times(args.times), args.replicas,
                        RngSpec(args.seed, 400), args.step)
    return _emit_samples(args, vals, "rosen")


def _emit_samples(args, vals, regime):
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    times = _times(args.times)
    for T, v in sorted(vals.items()):
        write_jsonl(samples_from_array(v, times, regime, T, args.seed), out / f"samples_T{T:g}.jsonl")
        for j, t in enumerate(times):
            rows.append((T, t, v[:, j].mean(), v[:, j].std(ddof=1) / math.sqrt(v.shape[0]),
                         (v[:, j] ** 2).mean()))
    text = table_csv(("T", "t", "mean", "se", "second_moment"), rows, LADDER_SCHEMA)
    (out / "ladder.csv").write_text(text)
    print(text, end="")
    return 0


def cmd_particles(args):
    params = _params_from_args(args)
    spec = _spec_from_args(args, params)
    phi = phi_from_dict(json.loads(args.phi)) if args.phi else ex.default_spec(spec.family.value)[1]
    viol = validate(params, phi, spec)
    if viol:
        raise ConfigError("; ".join(viol))
    times = _times(args.times)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    samples = []
    for r in range(args.replicas):
        s = particle_functional_sample(spec, phi, args.T, times, WindowPolicy(args.K, args.tolerance),
                                       RngSpec(args.seed, 900).child(r), dt=args.dt)
        s.replica = r
        samples.append(s)
    write_jsonl(samples, out / f"samples_T{args.T:g}.jsonl")
    warn = sorted({w for s in samples for w in s.warnings})
    for w in warn:
        print(f"warning: {w}", file=sys.stderr)
    print(f"wrote {len(samples)} samples to {out / f'samples_T{args.T:g}.jsonl'}")
    return 0


def _limit_pool(args, spec, times):
    kw = {}
    if spec.family.is_heavy:
        kw = dict(gamma=spec.gamma, variant=ex.kernel_variant(spec))
    return FieldPool.build(spec.params.beta, times, args.pool_paths, RngSpec(args.seed, 500),
                           dt=args.dt, K=args.K, **kw)


def cmd_cf_limit(args):
    params = _params_from_args(args)
    spec = _spec_from_args(args, params)
    viol = validate(params, None, spec)
    if viol:
        raise ConfigError("; ".join(viol))
    times = _times(args.times)
    coeffs = _times(args.coeffs) if args.coeffs else [1.0] * len(times)
    try:
        q = CfQuery(_times(args.theta), coeffs, times)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    pool = _limit_pool(args, spec, sorted(set(times)))
    res = limit_cf(spec, q, pool, args.scale)
    text = res.to_csv()
    if args.out:
        Path(args.out).write_text(text)
    print(text, end="")
    return 0


def cmd_compare(args):
    params = _params_from_args(args)
    spec = _spec_from_args(args, params)
    samples = read_jsonl(args.samples)
    if len(samples) < 2:
        raise ConfigError("need at least two samples")
    times = list(samples[0].times)
    coeffs = _times(args.coeffs) if args.coeffs else [1.0] * len(times)
    pool = _limit_pool(args, spec, times)
    fn, I = ex.limit_cf_callable(spec, pool, coeffs, times)
    theta = _times(args.theta) if args.theta else \
        list(ex.theta_grid_for_exponent(ex.stable_constant(params.alpha) * I * args.scale ** params.alpha,
                                        params.alpha, 16))
    q = CfQuery(theta, coeffs, times)
    rep = ecf(samples, q)
    if args.fit_scale:
        res = cf_compare(rep, lambda th: fn(th)[0], args.k_sigma, fit_scale=True)
        lam = res.fitted_scale
    else:
        lam = args.scale
    tv, tse = fn(lam * rep.theta)
    res = cf_compare(rep, tv, args.k_sigma, target_se=tse)
    text = report_csv(compare_rows(samples[0].T, rep, tv, res))
    if args.out:
        Path(args.out).write_text(text)
    print(text, end="")
    print(f"sup distance {res.sup_distance:.6g}, scale {lam:.6g}, {'PASS' if res.passed else 'FAIL'}",
          file=sys.stderr)
    return 0 if res.passed else 1


def cmd_report(args):
    run_dir = Path(args.run_dir)
    if not run_dir.is_dir():
        raise ConfigError(f"{run_dir} is not a directory")
    summaries = []
    for p in sorted(run_dir.rglob("summary.json")):
        summaries.append({"path": str(p.relative_to(run_dir)), **json.loads(p.read_text())})
    report = {"runs": summaries, "passed": all(s.get("passed", False) for s in summaries),
              "n_checks": sum(len(s.get("checks", [])) for s in summaries),
              "n_failed": sum(not c["passed"] and c.get("required", True)
                             for s in summaries for c in s.get("checks", []))}
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    Path(args.out or run_dir / "report.json").write_text(text)
    print(f"{len(summaries)} runs, {report['n_checks']} checks, {report['n_failed']} failed")
    return 0 if report["passed"] else 1


# ---------------------------------------------------------------------------
# parser

def _add_model(p, family=True):
    p.add_argument("--alpha", type=float, default=1.5)
    p.add_argument("--beta", type=float, default=1.5)
    p.add_argument("--epsilon", type=float, default=1.0, help="weight cutoff")
    if family:
        p.add_argument("--family", default="first-order",
                       choices=["first-order", "second-order", "heavy-symmetric", "heavy-asymmetric"])
        p.add_argument("--gamma1", type=float, default=1.1)
        p.add_argument("--gamma2", type=float, default=None)


def build_parser():
    ap = argparse.ArgumentParser(prog="hsssi", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment from a JSON config or preset")
    p.add_argument("config", nargs="?")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--output")
    p.add_argument("--print-config", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="check parameters against the model hypotheses")
    p.add_argument("--config")
    _add_model(p)
    p.add_argument("--phi", help="JSON test function, e.g. '{\"type\": \"haar\"}'")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate-path", help="simulate one Levy path")
    p.add_argument("--beta", type=float, default=1.5)
    p.add_argument("--preset-f", choices=["none", "log", "iterated-log"], default="none")
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--out", help="binary dump (otherwise CSV on stdout)")
    p.set_defaults(func=cmd_simulate_path)

    p = sub.add_parser("localtime-moments", help="exact local-time moment E L_t(x)^n")
    p.add_argument("--beta", type=float, default=1.5)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--x", type=float, default=0.0)
    p.add_argument("--n", type=int, default=1)
    p.set_defaults(func=cmd_localtime_moments)

    p = sub.add_parser("prop1", help="first-order single-path functional along a T ladder")
    p.add_argument("--beta", type=float, default=1.5)
    p.add_argument("--preset-f", choices=["none", "log", "iterated-log"], default="none")
    p.add_argument("--phi", default='{"type": "indicator", "a": -0.5, "b": 0.5}')
    p.add_argument("--T", default="100,1000,10000")
    p.add_argument("--x", type=float, default=0.0)
    p.add_argument("--times", default="1")
    p.add_argument("--replicas", type=int, default=1000)
    p.add_argument("--dt", type=float, default=1e-5)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--output", default="prop1-out")
    p.set_defaults(func=cmd_prop1)

    p = sub.add_parser("rosen", help="normalized occupation time of a zero-integral function")
    p.add_argument("--beta", type=float, default=1.5)
    p.add_argument("--phi", default='{"type": "haar"}')
    p.add_argument("--T", default="100,1000,10000")
    p.add_argument("--times", default="1")
    p.add_argument("--replicas", type=int, default=1000)
    p.add_argument("--step", type=float, default=0.1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--output", default="rosen-out")
    p.set_defaults(func=cmd_rosen)

    p = sub.add_parser("particles", help="particle functional with one path per particle")
    _add_model(p)
    p.add_argument("--phi")
    p.add_argument("--T", type=float, default=10.0)
    p.add_argument("--times", default="0.5,1")
    p.add_argument("--replicas", type=int, default=100)
    p.add_argument("--K", type=float, default=10.0)
    p.add_argument("--tolerance", type=float, default=1e-3)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--output", default="particles-out")
    p.set_defaults(func=cmd_particles)

    for name, func, hlp in (("cf-limit", cmd_cf_limit, "characteristic function of the limit"),
                            ("compare", cmd_compare, "compare samples with the limit CF")):
        p = sub.add_parser(name, help=hlp)
        _add_model(p)
        p.add_argument("--theta", default="0.1,0.5,1" if name == "cf-limit" else None)
        p.add_argument("--coeffs")
        p.add_argument("--times", default="1")
        p.add_argument("--scale", type=float, default=1.0, help="int phi or c(phi) factor")
        p.add_argument("--pool-paths", type=int, default=2000)
        p.add_argument("--dt", type=float, default=1e-4)
        p.add_argument("--K", type=float, default=10.0)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out")
        if name == "compare":
            p.add_argument("samples")
            p.add_argument("--k-sigma", type=float, default=3.0)
            p.add_argument("--fit-scale", action="store_true")
        p.set_defaults(func=func)

    p = sub.add_parser("report", help="aggregate summaries of a run directory")
    p.add_argument("run_dir")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

Exit codes: 0 success, 2 invalid input or configuration, 3 numerical failure.
"""

import argparse
import configparser
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numba
import numpy as np

from tmkernel import io, oracle, pipelines
from tmkernel.diagnostics import distortion, rc_quality
from tmkernel.dynamics import (
    SdeConfig,
    get_potential,
    test_points_grid,
    test_points_subsample,
    test_points_uniform,
)
from tmkernel.kernels.gram import KernelSpec
from tmkernel.whitney import draw_feature_matrix, euclidean_distance_matrix

EXIT_INVALID = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    """One full run of either algorithm, as read from an INI file.

    Exactly one of ``kernel`` (kernel embedding) or ``features`` (random
    linear features, which also needs ``r``) is set.
    """

    potential: str = None
    bursts: str = None
    beta: float = None
    dt: float = None
    tau: float = None
    seed: int = 1
    points: str = None
    M: int = None
    kernel: str = None
    features: str = None
    r: int = None
    learner: str = "dmap"
    bandwidth: float = None
    components: int = 2
    out: str = "out"

    def validate(self):
        if (self.kernel is None) == (self.features is None):
            raise ConfigError("set exactly one of kernel= (kernel embedding) or features= (linear features)")
        if self.features is not None and self.r is None:
            raise ConfigError("linear-feature mode needs the manifold dimension r")
        if (self.potential is None) == (self.bursts is None):
            raise ConfigError("set exactly one of potential= (simulate) or bursts= (existing file)")
        if self.potential is not None:
            self.validate_sampling()
        if self.learner not in ("dmap", "mds"):
            raise ConfigError(f"unknown learner {self.learner!r}; use dmap or mds")
        if self.learner == "dmap" and self.bandwidth is None:
            raise ConfigError("diffusion maps need bandwidth=")
        return self

    def validate_sampling(self):
        if None in (self.potential, self.beta, self.dt, self.tau, self.points, self.M):
            raise ConfigError("simulation needs potential, beta, dt, tau, points and M")
        self.sde()
        return self

    def sde(self):
        try:
            return SdeConfig(self.beta, self.dt, self.tau, seed=self.seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


_TYPES = {"beta": float, "dt": float, "tau": float, "seed": int, "M": int, "r": int,
          "bandwidth": float, "components": int}


def load_config(path):
    """Flat INI: keys from all sections are merged, later sections win."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    if not parser.read(path):
        raise ConfigError(f"cannot read config file {path}")
    values = {}
    known = PipelineConfig.__dataclass_fields__
    for section in parser.sections():
        for key, raw in parser.items(section):
            if key not in known:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            try:
                values[key] = _TYPES.get(key, str)(raw)
            except ValueError:
                raise ConfigError(f"{path}: {key} = {raw!r} is not a valid {_TYPES[key].__name__}") from None
    return PipelineConfig(**values)


def parse_points(spec, box, seed):
    """``grid:32x32``, ``uniform:200`` or ``subsample:<trajectory.csv>:N:stride``."""
    kind, _, arg = spec.partition(":")
    if kind == "grid":
        return test_points_grid(box, tuple(int(m) for m in arg.split("x")))
    if kind == "uniform":
        return test_points_uniform(box, int(arg), seed)
    if kind == "subsample":
        path, N, stride = arg.rsplit(":", 2)
        return test_points_subsample(np.loadtxt(path, delimiter=",", ndmin=2), int(N), int(stride))
    if kind == "file":
        return np.loadtxt(arg, delimiter=",", ndmin=2)
    raise ConfigError(f"cannot parse test points {spec!r}")


def _grid_arg(text, box):
    shape = tuple(int(m) for m in text.split("x"))
    if len(shape) != len(box):
        raise ConfigError(f"grid {text} has {len(shape)} axes, the potential has {len(box)}")
    return oracle.Grid(box, shape)


def _ball_arg(text):
    vals = [float(v) for v in text.split(",")]
    return oracle.ball(vals[:-1], vals[-1])


def _provenance(args, **extra):
    return dict({"seed": args.seed}, **extra)


# subcommands

def cmd_sample(args):
    cfg = _merged(args).validate_sampling()
    pot = get_potential(cfg.potential)
    points = parse_points(cfg.points, pot.box, cfg.seed)
    ens = pipelines.stage_sample(args.out, cfg.potential, cfg.sde(), points, cfg.M)
    if args.csv:
        io.write_bursts_csv(args.csv, ens)
    print(f"wrote {ens.N} x {ens.M} endpoints to {args.out}")


def _load_bursts(path):
    return io.read_bursts_csv(path) if str(path).endswith(".csv") else io.read_bursts(path)


def cmd_gram(args):
    ens = _load_bursts(args.bursts)
    kernel = KernelSpec.parse(args.kernel)
    K, _ = pipelines.stage_gram(ens, kernel, args.out, args.distance)
    print(f"wrote {K.N} x {K.N} {kernel} gram matrix to {args.out}")


def cmd_embed_whitney(args):
    ens = _load_bursts(args.bursts)
    if args.features:
        F = io.read_feature_matrix(args.features)
        if F.r != args.r:
            raise ConfigError(f"feature matrix has r={F.r}, --r says {args.r}")
    else:
        F = draw_feature_matrix(args.r, ens.dim, args.distribution, args.seed)
    pipelines.stage_whitney(ens, F, args.out, args.seed)
    print(f"wrote {ens.N} x {2 * args.r + 1} coordinates to {args.out}")


def cmd_dmap(args):
    res = pipelines.stage_dmap(args.matrix, args.bandwidth, args.components, args.out, seed=args.seed)
    print("eigenvalues:", " ".join(f"{v:.6g}" for v in res.eigenvalues))


def cmd_mds(args):
    res = pipelines.stage_mds(args.matrix, args.k, args.out, seed=args.seed)
    print("leading eigenvalues:", " ".join(f"{v:.6g}" for v in res.eigenvalues[: args.k + 2]))


def cmd_oracle(args):
    pot = get_potential(args.potential)
    grid = _grid_arg(args.grid, pot.box)
    prov = _provenance(args, potential=args.potential, beta=args.beta)
    out = Path(args.out)
    if args.task == "density":
        io.write_grid_field(out, oracle.invariant_density(pot, args.beta, grid), prov)
    elif args.task == "committor":
        if not (args.A and args.B):
            raise ConfigError("committor needs --A and --B as x,y,...,radius")
        q = oracle.committor(pot, args.beta, grid, _ball_arg(args.A), _ball_arg(args.B))
        io.write_grid_field(out, q, prov)
    else:
        pairs = oracle.generator_eigs(pot, args.beta, grid, args.d, form=args.form)
        for k, (rate, f) in enumerate(pairs):
            io.write_grid_field(out.with_name(f"{out.name}.{k}.csv"), f, dict(prov, rate=rate))
    print(f"wrote {args.task} on a {args.grid} grid")


def _distance_input(path):
    if str(path).endswith(".coords.csv"):
        return euclidean_distance_matrix(io.read_coordinates(path))
    return pipelines.as_distance(io.read_matrix(path))


def cmd_distortion(args):
    rep = distortion(_distance_input(args.reference), _distance_input(args.embedded), args.floor)
    if args.out:
        io.write_distortion(args.out, rep, _provenance(args))
    print(f"contraction {rep.contraction:.6g} at {rep.contraction_pair}, "
          f"expansion {rep.expansion:.6g} at {rep.expansion_pair}, "
          f"distortion {rep.distortion:.6g} ({rep.pairs_skipped} pairs below floor {rep.floor:.3g})")


def cmd_rc_quality(args):
    coords = io.read_coordinates(args.embedding)
    points = _load_bursts(args.bursts).points
    if coords.shape[0] != points.shape[0]:
        raise ConfigError(f"embedding has {coords.shape[0]} rows, bursts have {points.shape[0]} test points")
    if args.columns:
        coords = coords[:, : args.columns]
    fields = [io.read_grid_field(f) for f in args.fields]
    res = rc_quality(coords, [f.at(points) for f in fields], args.bins)
    for f, r in zip(args.fields, res):
        print(f"{f}: {r:.6g}")


def cmd_repro(args):
    if args.experiment not in pipelines.RECIPES:
        raise ConfigError(f"unknown experiment {args.experiment!r}; choose from {sorted(pipelines.RECIPES)}")
    recipe_cls = {"muller-brown": pipelines.MullerBrownRecipe, "horseshoe": pipelines.HorseshoeRecipe}
    summary = pipelines.RECIPES[args.experiment](args.out, recipe_cls[args.experiment](seed=args.seed))
    print(json.dumps({k: v for k, v in summary.items() if k not in ("recipe", "sweep")}, indent=1))


def cmd_run(args):
    cfg = _merged(args).validate()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.potential is not None:
        pot = get_potential(cfg.potential)
        ens = pipelines.stage_sample(out / "bursts.tmb", cfg.potential, cfg.sde(),
                                     parse_points(cfg.points, pot.box, cfg.seed), cfg.M)
    else:
        ens = _load_bursts(cfg.bursts)
    if cfg.kernel is not None:
        _, D = pipelines.stage_gram(ens, KernelSpec.parse(cfg.kernel), out / "gram.tmm", out / "distance.tmm")
    else:
        if cfg.features in ("uniform", "gaussian"):
            F = draw_feature_matrix(cfg.r, ens.dim, cfg.features, cfg.seed)
        else:
            F = io.read_feature_matrix(cfg.features)
        io.write_feature_matrix(out / "features.csv", F)
        D = euclidean_distance_matrix(pipelines.stage_whitney(ens, F, out / "whitney.coords.csv", cfg.seed))
    if cfg.learner == "dmap":
        res = pipelines.stage_dmap(D, cfg.bandwidth, cfg.components, out / "rc", seed=cfg.seed)
    else:
        res = pipelines.stage_mds(D, cfg.components, out / "rc", seed=cfg.seed)
    print(f"wrote {res.coords.shape[0]} reaction coordinate values to {out / 'rc.coords.csv'}")


def _merged(args):
    """Config file values overridden by explicitly given flags."""
    cfg = load_config(args.config) if args.config else PipelineConfig()
    flags = {k: getattr(args, k) for k in ("potential", "beta", "dt", "tau", "points", "M")
             if getattr(args, k, None) is not None}
    if args.seed_given:
        flags["seed"] = args.seed
    if args.command == "run" and args.out:
        flags["out"] = args.out
    return replace(cfg, **flags)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with pipeline settings")
    common.add_argument("--seed", type=int, default=None, help="master seed (default 1)")
    common.add_argument("--threads", type=int, help="worker threads for sampling and Gram matrices")

    p = argparse.ArgumentParser(prog="tmkernel", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", parents=[common], help="simulate bursts from test points")
    s.add_argument("--potential")
    s.add_argument("--beta", type=float)
    s.add_argument("--dt", type=float)
    s.add_argument("--tau", type=float)
    s.add_argument("--points", help="grid:32x32, uniform:200, subsample:traj.csv:N:stride or file:pts.csv")
    s.add_argument("-M", "--M", type=int, dest="M")
    s.add_argument("--out", required=True)
    s.add_argument("--csv", help="also export the bursts as CSV")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("gram", parents=[common], help="empirical Gram matrix of a burst file")
    s.add_argument("bursts")
    s.add_argument("--kernel", required=True, help="linear, polynomial:p or gaussian:sigma")
    s.add_argument("--out", required=True)
    s.add_argument("--distance", help="also write the squared kernel distance matrix here")
    s.set_defaults(func=cmd_gram)

    s = sub.add_parser("embed-whitney", parents=[common], help="random linear feature embedding")
    s.add_argument("bursts")
    s.add_argument("--r", type=int, required=True, help="manifold dimension; 2r+1 features")
    s.add_argument("--features", help="feature matrix CSV (default: draw one from the seed)")
    s.add_argument("--distribution", default="uniform", choices=("uniform", "gaussian"))
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_embed_whitney)

    s = sub.add_parser("dmap", parents=[common], help="diffusion maps on a distance or Gram matrix")
    s.add_argument("matrix")
    s.add_argument("--bandwidth", type=float, required=True)
    s.add_argument("--components", type=int, default=2)
    s.add_argument("--out", required=True, help="output stem")
    s.set_defaults(func=cmd_dmap)

    s = sub.add_parser("mds", parents=[common], help="classical MDS on a distance or Gram matrix")
    s.add_argument("matrix")
    s.add_argument("--k", type=int, default=2)
    s.add_argument("--out", required=True, help="output stem")
    s.set_defaults(func=cmd_mds)

    s = sub.add_parser("oracle", parents=[common], help="grid reference fields")
    s.add_argument("task", choices=("density", "committor", "eigs"))
    s.add_argument("--potential", required=True)
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--grid", required=True, help="cells per axis, e.g. 128x128")
    s.add_argument("--A", help="committor set: centre coordinates then radius")
    s.add_argument("--B")
    s.add_argument("--d", type=int, default=3, help="number of eigenpairs")
    s.add_argument("--form", default="density", choices=("density", "observable"))
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("distortion", parents=[common], help="distortion of an embedding")
    s.add_argument("reference")
    s.add_argument("embedded", help="matrix file or a .coords.csv (Euclidean distances)")
    s.add_argument("--floor", type=float, help="default: 5%% of the median reference distance")
    s.add_argument("--out")
    s.set_defaults(func=cmd_distortion)

    s = sub.add_parser("rc-quality", parents=[common], help="residual of eigenfunctions along a coordinate")
    s.add_argument("embedding", help="coordinates CSV")
    s.add_argument("--bursts", required=True, help="burst file holding the test points")
    s.add_argument("--fields", nargs="+", required=True, help="grid field CSVs")
    s.add_argument("--bins", type=int, default=20)
    s.add_argument("--columns", type=int, help="use only the leading coordinate columns")
    s.set_defaults(func=cmd_rc_quality)

    s = sub.add_parser("repro", parents=[common], help="reproduce a benchmark experiment")
    s.add_argument("experiment", help="muller-brown or horseshoe")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_repro)

    s = sub.add_parser("run", parents=[common], help="full pipeline from a config file")
    s.add_argument("--out", help="output directory (overrides out= in the config)")
    s.set_defaults(func=cmd_run)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    args.seed_given = args.seed is not None
    if args.seed is None:
        args.seed = 1
    try:
        if args.threads:
            numba.set_num_threads(max(1, min(args.threads, numba.config.NUMBA_NUM_THREADS)))
        args.func(args)
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"tmkernel: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, KeyError, OSError) as exc:
        print(f"tmkernel: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return 0


if __name__ == "__main__":
    sys.exit(main())

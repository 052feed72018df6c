"""Command-line interface.

Exit codes: 0 on success, 1 on usage, configuration or file errors, 2 when
the task itself fails (no successful swing-up).
"""

import argparse
import functools
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .benchmark import N_TRIALS, evaluate_controller
from .controllers import ZeroController, energy_lqr_baseline
from .dynamics import ModelParams
from .optimize.de import DeConfig
from .optimize.policy_search import SNESPolicySearch, fast_policy_rollout
from .optimize.sysid import DEFAULT_FREE, SysIdDataset, relative_bounds, sysid_cost, sysid_multi, synthetic_dataset
from .perturbations import generate_perturbation_profile
from .policy import load_policy, policy_controller, save_policy
from .robustness import SCALAR_CRITERIA, SweepSpec, evaluate_robustness
from .scoring import score_trajectory
from .simulation import ImperfectionConfig, Trajectory, rollout

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_TASK_FAILED = 2

logger = logging.getLogger("dpbench")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _common(parser):
    parser.add_argument("--config", help="JSON experiment configuration; flags override it")
    parser.add_argument("--robot", choices=("pendubot", "acrobot"))
    parser.add_argument("--dt", type=float)
    parser.add_argument("--t-final", type=float)
    parser.add_argument("--threshold", type=float)
    parser.add_argument("--weights", choices=("sim", "hardware"))
    parser.add_argument("--model", dest="model_params", help="model parameter JSON")
    parser.add_argument("--seed", type=int, help="master seed")


def _controller_args(parser):
    parser.add_argument("--controller", choices=("baseline", "zero", "policy"), default="baseline")
    parser.add_argument("--policy", help="policy binary for --controller policy")


def _config(args):
    base = io.BenchConfig.load(args.config) if args.config else io.BenchConfig()
    return base.with_overrides(
        robot=args.robot,
        dt=args.dt,
        t_final=args.t_final,
        threshold=args.threshold,
        weights=args.weights,
        model_params=args.model_params,
        seed=args.seed,
    )


def _factory(args, config, p):
    kind = config.robot
    if args.controller == "baseline":
        return functools.partial(energy_lqr_baseline, kind, p)
    if args.controller == "zero":
        return ZeroController
    if not args.policy:
        raise UsageError("--controller policy needs --policy FILE")
    return functools.partial(policy_controller, load_policy(args.policy), kind, p)


def cmd_simulate(args):
    config = _config(args)
    p = config.load_model()
    factory = _factory(args, config, p)
    perturbation = None
    if args.perturb:
        perturbation = generate_perturbation_profile(config.seed, config.t_final)
    imperfections = ImperfectionConfig(
        vel_noise_sigma=args.vel_noise,
        torque_noise_sigma=args.tau_noise,
        k_resp=args.k_resp,
        delay=args.delay,
        perturbation=perturbation,
        rng_seed=config.seed,
    )
    traj = rollout(factory(), config.robot, p, imperfections, config.t_final, config.dt)
    report = score_trajectory(traj, p, config.weights, config.threshold)
    io.write_trajectory_csv(traj, args.out)
    report_path = args.report or str(Path(args.out).with_suffix(".json"))
    io.write_json(report.to_dict(), report_path)
    print(io.dumps(report.to_dict()), end="")
    return EXIT_OK if report.criteria.success else EXIT_TASK_FAILED


def cmd_evaluate(args):
    config = _config(args)
    p = config.load_model()
    name = args.name or (Path(args.policy).stem if args.controller == "policy" and args.policy else args.controller)
    result = evaluate_controller(
        _factory(args, config, p),
        config.robot,
        p,
        name=name,
        n_trials=args.trials,
        seed=config.seed,
        perturb=not args.no_perturb,
        weights=config.weights,
        t_final=config.t_final,
        dt=config.dt,
        threshold=config.threshold,
        n_jobs=args.n_jobs,
    )
    doc = result.to_dict()
    if args.out:
        io.write_json(doc, args.out)
    print(io.dumps(doc["row"]), end="")
    return EXIT_OK if result.row.successes > 0 else EXIT_TASK_FAILED


def cmd_robustness(args):
    config = _config(args)
    p = config.load_model()
    specs = {c: SweepSpec(c, config.sweep_values(c)) for c in ("model",) + SCALAR_CRITERIA}
    report = evaluate_robustness(
        _factory(args, config, p),
        config.robot,
        p,
        specs=specs,
        seed=config.seed,
        t_final=config.t_final,
        dt=config.dt,
        threshold=config.threshold,
        n_jobs=args.n_jobs,
    )
    doc = dict(report.to_dict(), n_rollouts=report.n_rollouts)
    if args.out:
        io.write_json(doc, args.out)
    if args.points:
        Path(args.points).write_text(report.points_csv())
    print(io.dumps(doc), end="")
    return EXIT_OK


def _load_dataset(directory, trim):
    paths = sorted(Path(directory).glob("*.csv"))
    if not paths:
        raise FileNotFoundError(f"no trajectory CSV files in {directory}")
    return SysIdDataset.from_trajectories([io.read_trajectory_csv(path) for path in paths], trim)


def cmd_sysid(args):
    config = _config(args)
    p = config.load_model()
    data_dir = Path(args.data)
    if args.generate:
        data_dir.mkdir(parents=True, exist_ok=True)
        synth = synthetic_dataset(p, args.generate, dt=config.dt, seed=config.seed, trim=args.trim)
        for i, (tau, x) in enumerate(zip(synth.torques, synth.states)):
            traj = Trajectory(np.arange(len(x)) * synth.dt, x, tau)
            io.write_trajectory_csv(traj, data_dir / f"recording_{i:03d}.csv")
    elif not data_dir.is_dir():
        raise FileNotFoundError(f"data directory {data_dir} does not exist")
    data = _load_dataset(data_dir, args.trim)
    free = tuple(args.free.split(","))
    unknown = set(free) - set(ModelParams.field_names())
    if unknown:
        raise UsageError(f"unknown parameters {sorted(unknown)}")
    base = p if args.center is None else io.read_params_json(args.center)
    de = DeConfig(
        bounds=relative_bounds(base, free, args.spread),
        popsize=args.popsize,
        max_generations=args.generations,
        tol=args.tol,
        seed=config.seed,
    )
    solutions = sysid_multi(data, de, args.k, base, free, n_jobs=args.n_jobs)
    best = solutions[0]
    io.write_params_json(best.params, args.out)
    if args.progress:
        io.write_progress_csv(best.history, args.progress)
    doc = {
        "cost": best.cost,
        "free": list(free),
        "params": best.params.to_dict(),
        "solutions": [{"cost": sol.cost, "params": {f: getattr(sol.params, f) for f in free}} for sol in solutions],
        "nominal_cost": sysid_cost(p, data),
    }
    print(io.dumps(doc), end="")
    return EXIT_OK


def cmd_train(args):
    config = _config(args)
    p = config.load_model()
    hidden = tuple(int(h) for h in args.hidden.split(",")) if args.hidden else (32,)
    search = SNESPolicySearch(
        kind=config.robot,
        model_params=p,
        fitness=args.fitness,
        robust=args.robust,
        n_generations=args.generations,
        popsize=args.popsize,
        sigma0=args.sigma0,
        hidden=hidden,
        history_window=args.history,
        initial_policy=load_policy(args.init) if args.init else None,
        pretrain=None if args.no_pretrain else "clone",
        n_particles=args.particles,
        weight_preset=config.weights,
        t_final=config.t_final,
        dt=config.dt,
        seed=config.seed,
        n_jobs=args.n_jobs,
        verbose=args.verbose,
    ).fit()
    save_policy(search.policy_, args.out)
    if args.progress:
        # costs are negated fitness values
        h = search.history_
        io.write_progress_csv(np.column_stack([h[:, 0], -h[:, 1], -h[:, 2]]), args.progress)
    traj = fast_policy_rollout(search.policy_, config.robot, p, None, config.t_final, config.dt)
    report = score_trajectory(traj, p, config.weights, config.threshold)
    doc = {"best_fitness": search.best_fitness_, "nominal": report.to_dict(), "policy": args.out}
    print(io.dumps(doc), end="")
    return EXIT_OK if report.criteria.success else EXIT_TASK_FAILED


def cmd_leaderboard(args):
    rows = io.load_rows(args.rows)
    if not rows:
        raise FileNotFoundError(f"no leaderboard rows (*.json) in {args.rows}")
    table = io.leaderboard_markdown(rows)
    if args.md:
        Path(args.md).write_text(table)
    if args.csv:
        io.write_leaderboard_csv(rows, args.csv)
    print(table, end="")
    return EXIT_OK


def cmd_plotdata(args):
    traj = io.read_trajectory_csv(args.traj)
    io.write_plot_csv(traj, args.out)
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="dpbench", description="Double pendulum swing-up benchmark")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("simulate", help="run one trial and score it")
    _common(sp)
    _controller_args(sp)
    sp.add_argument("--out", default="trajectory.csv", help="trajectory CSV")
    sp.add_argument("--report", help="score JSON (default: next to --out)")
    sp.add_argument("--vel-noise", type=float, default=0.0)
    sp.add_argument("--tau-noise", type=float, default=0.0)
    sp.add_argument("--k-resp", type=float, default=1.0)
    sp.add_argument("--delay", type=float, default=0.0)
    sp.add_argument("--perturb", action="store_true", help="apply a perturbation profile drawn from --seed")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("evaluate", help="multi-trial protocol, writes a leaderboard row")
    _common(sp)
    _controller_args(sp)
    sp.add_argument("--name")
    sp.add_argument("--trials", type=int, default=N_TRIALS)
    sp.add_argument("--no-perturb", action="store_true")
    sp.add_argument("--out", help="row JSON")
    sp.add_argument("--n-jobs", type=int, default=1)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("robustness", help="six-criterion robustness score")
    _common(sp)
    _controller_args(sp)
    sp.add_argument("--out", help="report JSON")
    sp.add_argument("--points", help="per-point CSV")
    sp.add_argument("--n-jobs", type=int, default=1)
    sp.set_defaults(func=cmd_robustness)

    sp = sub.add_parser("sysid", help="identify model parameters by torque replay")
    _common(sp)
    sp.add_argument("--data", required=True, help="directory of trajectory CSV recordings")
    sp.add_argument("--generate", type=int, default=0, help="first write this many synthetic recordings")
    sp.add_argument("--free", default=",".join(DEFAULT_FREE))
    sp.add_argument("--center", help="parameter JSON at the centre of the bounds (default: --model)")
    sp.add_argument("--spread", type=float, default=0.5)
    sp.add_argument("--trim", type=float, default=1.5)
    sp.add_argument("--generations", type=int, default=300)
    sp.add_argument("--popsize", type=int)
    sp.add_argument("--tol", type=float, default=0.0)
    sp.add_argument("--k", type=int, default=1, help="number of DE runs")
    sp.add_argument("--out", default="params.json")
    sp.add_argument("--progress", help="progress CSV")
    sp.add_argument("--n-jobs", type=int, default=1)
    sp.set_defaults(func=cmd_sysid)

    sp = sub.add_parser("train", help="SNES policy training")
    _common(sp)
    sp.add_argument("--out", default="policy.bin")
    sp.add_argument("--fitness", choices=("score", "evolsac", "history_sac"), default="score")
    sp.add_argument("--robust", action="store_true")
    sp.add_argument("--particles", type=int, default=4)
    sp.add_argument("--generations", type=int, default=200)
    sp.add_argument("--popsize", type=int, default=16)
    sp.add_argument("--sigma0", type=float, default=0.01)
    sp.add_argument("--hidden", help="comma-separated hidden widths (default 32)")
    sp.add_argument("--history", type=int, choices=(0, 12), default=0)
    sp.add_argument("--init", help="initial policy binary")
    sp.add_argument("--no-pretrain", action="store_true")
    sp.add_argument("--progress", help="progress CSV")
    sp.add_argument("--n-jobs", type=int, default=1)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("leaderboard", help="rank evaluation rows")
    sp.add_argument("--rows", required=True, help="directory of row JSON files")
    sp.add_argument("--md")
    sp.add_argument("--csv")
    sp.set_defaults(func=cmd_leaderboard)

    sp = sub.add_parser("plotdata", help="time series CSV for plotting")
    sp.add_argument("--traj", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_plotdata)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (UsageError, OSError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"dpbench {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

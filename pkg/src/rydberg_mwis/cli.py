"""Command-line runner: ``python -m rydberg_mwis <command> --config PATH``.

Every command writes a ``manifest.json`` holding the resolved config (with
command-line overrides folded in), its hash and the seeds used.  Passing
that manifest back as ``--config`` reproduces the outputs byte for byte.
JSON outputs carry ``config_hash`` and ``seeds`` fields; CSV outputs start
with a ``# config_hash=... seed=...`` comment line.

Exit codes: 0 success, 2 bad config or instance, 3 refused (blockade cap),
4 run failure (calibration divergence, integration error).
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import PlantModel, random_plant, run_calibration
from .embedding import decode, validate_embedding
from .errors import CalibrationError, IntegrationError, MwisError
from .evolve import RunRecord, anneal, evolve, exact_expectation, probabilities, trajectory_csv
from .experiment import FIXTURES, Experiment, build_experiment, canonical_json, config_hash, load_config
from .graph import brute_force_mwis, index_to_bitstring
from .hamiltonian import check_blockade_cap
from .optimizer import VERIFY_SHOTS, optimize, verify
from .schedule import Schedule

log = logging.getLogger("rydberg_mwis")

COMMANDS = ("solve", "embed", "anneal", "optimize", "calibrate", "schedule-dump")
EXIT_CONFIG, EXIT_REFUSED, EXIT_FAILED = 2, 3, 4
SUITE_WITHIN = 5
EXACT_FLOOR = 1e-12


class Refused(MwisError):
    pass


class Run:
    """Output directory bound to one resolved config."""

    def __init__(self, command: str, config: dict, out: Path):
        self.command = command
        self.config = config
        self.out = out
        self.hash = config_hash(config)
        self.seeds = {"master": int(config.get("seed", 0))}

    def stamp(self, payload: dict) -> dict:
        return {"config_hash": self.hash, "seeds": self.seeds, **payload}

    def write_json(self, name: str, payload: dict, stamp: bool = True) -> Path:
        return self._write(name, canonical_json(self.stamp(payload) if stamp else payload))

    def write_csv(self, name: str, body: str) -> Path:
        return self._write(name, f"# config_hash={self.hash} seed={self.seeds['master']}\n{body}")

    def _write(self, name: str, text: str) -> Path:
        path = self.out / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        log.info("wrote %s", path)
        return path

    def manifest(self) -> None:
        self.write_json("manifest.json", {"command": self.command, "config": self.config,
                                          "version": __version__})


def resolve_config(args) -> dict:
    cfg = copy.deepcopy(load_config(args.config))
    cfg.pop("out", None)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.shots is not None:
        cfg.setdefault("evolution", {})["shots"] = args.shots
    run = cfg.setdefault("run", {})
    if args.exact:
        run["exact"] = True
    if args.force:
        run["force"] = True
    if not run:
        del cfg["run"]
    return cfg


def _out_dir(args, command: str) -> Path:
    if args.out:
        return Path(args.out)
    raw = load_config(args.config)
    return Path(raw.get("out") or f"runs/{command}")


# -- commands --------------------------------------------------------------------


def cmd_solve(exp: Experiment, run: Run) -> dict:
    logical = brute_force_mwis(exp.logical_graph)
    payload = {"logical": logical.to_dict(), "graph": exp.logical_graph.to_dict()}
    if exp.embedding is not None:
        emb = brute_force_mwis(exp.cost_graph)
        payload["embedded"] = emb.to_dict()
        payload["decoded"] = sorted({decode(exp.embedding, s) for s in emb.optima})
    run.write_json("solve.json", payload)
    return {"optimal_cost": logical.optimal_cost, "optima": list(logical.optima)}


def cmd_embed(exp: Experiment, run: Run) -> dict:
    if exp.embedding is None:
        raise MwisError("config is missing the 'embedding' block")
    ok, report = validate_embedding(exp.embedding)
    run.write_json("embedding.json", {
        "embedding": exp.embedding.to_dict(),
        "valid": ok,
        "reason": report.reason,
        "embedded_optima": list(report.embedded_optima),
        "decoded_optima": list(report.decoded_optima),
        "logical_optima": list(report.logical_optima),
    })
    if not ok:
        raise MwisError(f"embedding does not preserve the MWIS: {report.reason}")
    return {"valid": ok, "logical_optima": list(report.logical_optima)}


def _check_cap(exp: Experiment, delta_max: float, force: bool) -> None:
    ok, margin = check_blockade_cap(exp.system(), delta_max)
    if not ok:
        msg = (f"blockade cap violated: max light shift exceeds the weakest blockade "
               f"interaction by {-margin:.3f} MHz")
        if not force:
            raise Refused(msg + " (use --force to run anyway)")
        log.warning("%s; running because of --force", msg)


def _decoded(exp: Experiment, bitstring: str) -> str | None:
    return decode(exp.embedding, bitstring) if exp.embedding is not None else None


def cmd_anneal(exp: Experiment, run: Run) -> dict:
    opts = exp.config.get("run", {})
    params = exp.ramp()
    _check_cap(exp, params.delta_max, opts.get("force", False))
    system, schedule, evo = exp.system(), Schedule(params), exp.evolution()
    shots = exp.shots
    sample_seed = exp.seed
    run.seeds["sample"] = sample_seed
    summary = {}

    if opts.get("exact"):
        res = evolve(system, schedule, evo)
        p = probabilities(res.state)
        nz = np.nonzero(p > EXACT_FLOOR)[0]
        dist = {index_to_bitstring(int(i), system.n_sites): float(p[i]) for i in nz}
        top = index_to_bitstring(int(np.argmax(p)), system.n_sites)
        run.write_json("distribution.json", {
            "probabilities": dist,
            "exact_cost": exact_expectation(p, exp.cost_graph, exp.penalty),
            "argmax": top,
            "decoded_argmax": _decoded(exp, top),
            "norm_drift": res.norm_drift,
            "params": params.to_config(),
            "penalty": exp.penalty,
        })
        summary.update(exact_argmax=top, exact_argmax_probability=float(p.max()))
        if shots == 0:
            _trajectory(exp, run, res)
            return summary
    elif shots < 1:
        raise MwisError("evolution.shots must be >= 1 unless --exact is given")

    rec, res = anneal(system, schedule, exp.cost_graph, shots, sample_seed, evo, exp.penalty)
    top = rec.argmax()
    rec.metadata.update(config_hash=run.hash, argmax=top, decoded_argmax=_decoded(exp, top))
    rec.seeds["master"] = exp.seed
    run.write_json("record.json", rec.to_dict(), stamp=False)
    _trajectory(exp, run, res)
    summary.update(argmax=top, decoded_argmax=_decoded(exp, top), estimated_cost=rec.estimated_cost)
    return summary


def _trajectory(exp: Experiment, run: Run, res) -> None:
    if len(res.snapshot_times):
        floor = float(exp.config.get("evolution", {}).get("trajectory_floor", 1e-4))
        run.write_csv("trajectory.csv", trajectory_csv(res, exp.layout.n_sites, floor))


def cmd_optimize(exp: Experiment, run: Run) -> dict:
    block = exp.config.get("optimizer", {})
    prob = exp.opt_problem()
    budget = int(block.get("budget", 80))
    verify_shots = int(block.get("verify_shots", VERIFY_SHOTS))
    _check_cap(exp, prob.initial.delta_max, exp.config.get("run", {}).get("force", False))
    run.seeds.update(problem_digest=prob.digest())

    def save(ev):
        payload = {"index": ev.index, "params": ev.params.to_config(), "cost": ev.cost,
                   "stderr": ev.stderr, "feasible": ev.feasible, "seed": ev.seed,
                   "record": ev.record.to_dict() if ev.record is not None else None}
        run.write_json(f"evaluations/{ev.index:04d}.json", payload)

    result = optimize(prob, budget, on_evaluation=save)
    run.write_csv("summary.csv", result.summary_csv(prob.tunables))
    rec = verify(prob, result.best_params, verify_shots)
    top = rec.argmax()
    rec.metadata.update(config_hash=run.hash, argmax=top, decoded_argmax=_decoded(exp, top))
    run.write_json("verification.json", rec.to_dict(), stamp=False)
    run.write_json("result.json", {
        "best_params": result.best_params.to_config(),
        "best_cost": result.best_cost,
        "evaluations": result.evaluations,
        "budget": budget,
        "bounds": {k: list(prob.bounds[k]) for k in prob.tunables},
        "verification": {"argmax": top, "decoded_argmax": _decoded(exp, top),
                         "estimated_cost": rec.estimated_cost, "shots": verify_shots},
    })
    return {"best_cost": result.best_cost, "verified_argmax": top, "decoded_argmax": _decoded(exp, top)}


def _suite_member(args):
    k, n, spread, crosstalk, noise, target, max_iters, tol, seed = args
    plant = random_plant(n, seed=[seed, k], gain_spread=spread, crosstalk=crosstalk, noise=noise)
    try:
        hist = run_calibration(plant, target, max_iters, tol, seed=[seed, k, 1])
    except CalibrationError:
        return k, -1, False, float("nan")
    return k, len(hist), hist.converged, hist.rms[-1]


def cmd_calibrate(exp: Experiment, run: Run, jobs: int = 1) -> dict:
    block = exp.config.get("calibration")
    if block is None:
        raise MwisError("config is missing the 'calibration' block")
    if "target" not in block:
        raise MwisError("calibration block is missing field 'target'")
    target = np.asarray(block["target"], dtype=float)
    max_iters, tol = int(block.get("max_iters", 20)), float(block.get("tol", 0.02))

    if "plant" in block:
        plant = PlantModel.from_dict(block["plant"])
        hist = run_calibration(plant, target, max_iters, tol, seed=exp.seed)
        run.write_csv("history.csv", hist.to_csv())
        run.write_json("calibration.json", {"plant": plant.to_dict(), "converged": hist.converged,
                                            "iterations": len(hist), "rms": hist.rms,
                                            "final_weights": hist.final_weights.tolist()})
        if not hist.converged:
            raise CalibrationError(f"no convergence below {tol} in {max_iters} iterations")
        return {"iterations": len(hist), "final_rms": hist.rms[-1]}

    if "random" not in block:
        raise MwisError("calibration block needs a 'plant' or 'random' field")
    r = block["random"]
    tasks = [(k, target.size, float(r.get("gain_spread", 0.3)), float(r.get("crosstalk", 0.0)),
              float(r.get("noise", 0.005)), target, max_iters, tol, exp.seed)
             for k in range(int(r.get("n_plants", 100)))]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_suite_member, tasks))
    else:
        rows = [_suite_member(t) for t in tasks]
    lines = ["plant,iterations,converged,final_rms"]
    lines += [f"{k},{n},{int(c)},{rms!r}" for k, n, c, rms in rows]
    run.write_csv("suite.csv", "\n".join(lines) + "\n")
    within = sum(1 for _, n, c, _ in rows if c and n <= SUITE_WITHIN)
    frac = within / len(rows)
    run.write_json("calibration.json", {"n_plants": len(rows), "within_iterations": SUITE_WITHIN,
                                        "fraction_converged": frac,
                                        "diverged": sum(1 for _, n, _, _ in rows if n < 0)})
    return {"fraction_converged_within_5": frac}


def cmd_schedule_dump(exp: Experiment, run: Run) -> dict:
    sched = Schedule(exp.ramp())
    n = int(exp.config.get("evolution", {}).get("schedule_points", 1001))
    run.write_csv("schedule.csv", sched.to_csv(n))
    return {"total_duration_us": sched.total_duration}


# -- entry point -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True,
                        help=f"config or manifest JSON path, or a bundled fixture ({', '.join(FIXTURES)})")
    common.add_argument("--seed", type=int, help="master seed (overrides config)")
    common.add_argument("--out", help="output directory (default: config 'out' or runs/<command>)")
    common.add_argument("--shots", type=int, help="readout shots (overrides evolution.shots)")
    common.add_argument("--exact", action="store_true", help="also write the exact output distribution")
    common.add_argument("--force", action="store_true", help="run even if the blockade cap is violated")
    common.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="rydberg-mwis", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.jobs < 1:
        log.error("--jobs must be >= 1")
        return EXIT_CONFIG
    try:
        cfg = resolve_config(args)
        exp = build_experiment(cfg, require_problem=args.command != "calibrate")
        run = Run(args.command, cfg, _out_dir(args, args.command))
        if args.command == "calibrate":
            summary = cmd_calibrate(exp, run, args.jobs)
        else:
            handler = globals()["cmd_" + args.command.replace("-", "_")]
            summary = handler(exp, run)
        run.manifest()
    except Refused as exc:
        log.error("%s", exc)
        return EXIT_REFUSED
    except (CalibrationError, IntegrationError) as exc:
        log.error("%s", exc)
        return EXIT_FAILED
    except (MwisError, ValueError, KeyError, TypeError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_CONFIG
    print(json.dumps({"command": args.command, "out": str(run.out), "config_hash": run.hash, **summary},
                     sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())

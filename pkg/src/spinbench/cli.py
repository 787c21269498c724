"""Command-line orchestration: generate instances, run solvers, score results.

Subcommands: gen | solve | bench | thermo | simulate | metrics.
Exit codes: 0 success, 1 numerical/contract failure, 2 I/O or usage error.
All structured outputs are JSON (sorted keys) or CSV; files are written
atomically (temp + rename). Sample JSON schema:

    {instance_hash, solver, params, seed, t_run_seconds,
     samples: [{spins: [+-1...], energy, replica}], best_energy}
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import annealers, dynamics, instances, metrics, oracle, thermo
from .errors import (ContractionError, CooFormatError, DegenerateDataError,
                     DomainError, InconsistencyError)
from .model import IsingModel, energy_many
from .peps import (ClusterAssignment, DropletParams, SearchParams,
                   branch_and_bound, build_peps, cluster_to_potts,
                   solve_with_transforms)

SOLVERS = ("bruteforce", "sa", "pa", "sbm", "peps", "descent")
WORKERS_ENV = "SPINBENCH_WORKERS"


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _dump_json(payload: dict) -> bytes:
    return (json.dumps(payload, sort_keys=True, indent=1) + "\n").encode()


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _load_model(path: Path) -> tuple[IsingModel, str]:
    text = path.read_text()
    return instances.parse_coo(text), _sha256(text.encode())


def _parse_lattice(text: str) -> instances.LatticeSpec:
    parts = text.lower().split("x")
    if len(parts) not in (2, 3):
        raise DomainError(f"lattice must look like MxN or MxNxT, got {text!r}")
    nums = [int(p) for p in parts]
    if len(nums) == 2:
        nums.append(1)
    return instances.LatticeSpec(nums[0], nums[1], nums[2])


def _generate_coo(cls: instances.InstanceClass, edges, seed: int,
                  num_spins: int) -> str:
    model = instances.generate(cls, edges, seed=seed, num_spins=num_spins)
    return instances.write_coo(model)


def cmd_gen(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cls = instances.InstanceClass(args.instance_class)
    spec = _parse_lattice(args.lattice)
    if not args.diagonals:
        spec = instances.LatticeSpec(spec.rows, spec.cols, spec.cell_size,
                                     diagonal_edges=False)
    edges = instances.build_lattice(spec)
    name = args.name or f"{cls.value}_{args.lattice}".replace("-", "")
    workers = int(os.environ.get(WORKERS_ENV, "1"))
    seeds = [args.seed + idx for idx in range(args.count)]
    if workers > 1 and args.count > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            texts = list(pool.map(_generate_coo, [cls] * len(seeds),
                                  [edges] * len(seeds), seeds,
                                  [spec.num_spins] * len(seeds)))
    else:
        texts = [_generate_coo(cls, edges, s, spec.num_spins) for s in seeds]
    files = []
    for idx, text in enumerate(texts):
        fname = f"{name}_{idx}.txt"
        _atomic_write(out_dir / fname, text.encode())
        files.append({"name": fname, "sha256": _sha256(text.encode()),
                      "seed": seeds[idx]})
    manifest = {
        "instance_class": cls.value,
        "lattice": {"rows": spec.rows, "cols": spec.cols,
                    "cell_size": spec.cell_size,
                    "diagonal_edges": spec.diagonal_edges},
        "seed": args.seed,
        "count": args.count,
        "files": files,
    }
    _atomic_write(out_dir / f"{name}_manifest.json", _dump_json(manifest))
    print(f"wrote {args.count} instances and manifest to {out_dir}")
    return 0


def _run_solver(model: IsingModel, args) -> annealers.SampleSet:
    if args.solver == "sa":
        params = annealers.SaParams(t0=args.t0, steps=args.steps_sa,
                                    replicas=args.replicas)
        return annealers.simulated_annealing(model, params, args.seed)
    if args.solver == "pa":
        params = annealers.PaParams(steps=args.steps_pa,
                                    trajectories=args.replicas)
        return annealers.parallel_annealing(model, params, args.seed)
    if args.solver == "sbm":
        params = annealers.SbParams(steps=args.steps_sb,
                                    replicas=args.replicas)
        return annealers.simulated_bifurcation(model, params, args.seed)
    if args.solver == "descent":
        return annealers.descent_sample_set(model, args.seed, args.replicas)
    raise DomainError(f"unhandled solver {args.solver}")


def _peps_sample_set(model: IsingModel, args) -> annealers.SampleSet:
    spec = _parse_lattice(args.lattice)
    if not args.diagonals:
        spec = instances.LatticeSpec(spec.rows, spec.cols, spec.cell_size,
                                     diagonal_edges=False)
    assignment = ClusterAssignment.from_lattice(spec)
    droplets = None
    if args.droplet_energy is not None:
        droplets = DropletParams(max_energy=args.droplet_energy,
                                 min_hamming=args.droplet_hamming)
    params = SearchParams(max_states=args.max_states,
                          cutoff_prob=args.cutoff_prob, chi=args.chi,
                          droplets=droplets)
    t0 = time.perf_counter()
    if args.transforms == "all":
        solution = solve_with_transforms(model, assignment, args.beta, params)
    else:
        potts = cluster_to_potts(model, assignment)
        network = build_peps(potts, args.beta, args.transforms)
        solution = branch_and_bound(network, params)
    run_time = max(time.perf_counter() - t0, 1e-9)
    records = [
        annealers.SampleRecord(spins=e.spins, energy=e.energy, replica=k)
        for k, e in enumerate(solution.entries)
    ]
    params_snapshot = {
        "beta": args.beta, "chi": args.chi, "max_states": args.max_states,
        "cutoff_prob": args.cutoff_prob, "transforms": args.transforms,
        "lattice": args.lattice, "winning_transform": solution.transform,
        "droplets": [{"size": d.size, "excitation": d.excitation,
                      "flips": np.flatnonzero(d.flip_mask).tolist()}
                     for d in solution.droplets],
    }
    return annealers.SampleSet("peps", args.seed, params_snapshot, records,
                               run_time)


def _bruteforce_sample_set(model: IsingModel, args) -> annealers.SampleSet:
    t0 = time.perf_counter()
    spectrum = oracle.brute_force(model, k=args.k_lowest)
    run_time = max(time.perf_counter() - t0, 1e-9)
    records = [
        annealers.SampleRecord(spins=spectrum.states[i],
                               energy=float(spectrum.energies[i]), replica=i)
        for i in range(len(spectrum))
    ]
    return annealers.SampleSet("bruteforce", args.seed,
                               {"k_lowest": args.k_lowest}, records, run_time)


def cmd_solve(args) -> int:
    model, content_hash = _load_model(Path(args.instance))
    if args.solver == "bruteforce":
        result = _bruteforce_sample_set(model, args)
    elif args.solver == "peps":
        result = _peps_sample_set(model, args)
    else:
        result = _run_solver(model, args)
    result.verify(model)
    payload = result.to_json_dict(instance_hash=content_hash)
    _atomic_write(Path(args.out), _dump_json(payload))
    print(f"{args.solver}: best energy {result.best_energy:.10g} "
          f"({len(result.records)} samples) -> {args.out}")
    return 0


def _load_sample_file(path: Path) -> dict:
    with path.open() as fh:
        return json.load(fh)


def cmd_bench(args) -> int:
    manifest = json.loads(Path(args.manifest).read_text())
    known_hashes = {f["name"]: f["sha256"] for f in manifest["files"]}
    runs: list[dict] = []
    inputs = {}
    for fname in args.samples:
        data = _load_sample_file(Path(fname))
        inputs[Path(fname).name] = _sha256(Path(fname).read_bytes())
        if data["instance_hash"] not in known_hashes.values():
            print(f"error: {fname} was produced for an instance outside the "
                  "manifest", file=sys.stderr)
            return 1
        runs.append(data)

    by_instance: dict[str, list[dict]] = {}
    for run in runs:
        by_instance.setdefault(run["instance_hash"], []).append(run)

    pooled_best = {h: min(r["best_energy"] for r in rs)
                   for h, rs in by_instance.items()}
    pooled_states: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for h, rs in by_instance.items():
        states = np.array([s["spins"] for r in rs for s in r["samples"]],
                          dtype=np.int8)
        energies = np.array([s["energy"] for r in rs for s in r["samples"]])
        pooled_states[h] = (states, energies)

    config = metrics.MetricConfig(target_confidence=args.p_target,
                                  approx_ratio=args.a_ratio,
                                  independence_fraction=args.independence,
                                  restarts=args.restarts)
    d_total = {}
    for h, (states, energies) in pooled_states.items():
        d_total[h], _ = metrics.diversity(
            states, energies, pooled_best[h], config.approx_ratio,
            config.independence_fraction, config.restarts, seed=0)

    solvers = sorted({r["solver"] for r in runs})
    budgets = sorted({r["t_run_seconds"] for r in runs})
    rows = []
    for solver in solvers:
        for budget in budgets:
            e_vals, d_vals = [], []
            for h, rs in by_instance.items():
                usable = [r for r in rs
                          if r["solver"] == solver and r["t_run_seconds"] <= budget]
                if not usable:
                    continue
                best = min(r["best_energy"] for r in usable)
                e_vals.append(metrics.e_approx(best, pooled_best[h]))
                states = np.array([s["spins"] for r in usable
                                   for s in r["samples"]], dtype=np.int8)
                energies = np.array([s["energy"] for r in usable
                                     for s in r["samples"]])
                d_solver, _ = metrics.diversity(
                    states, energies, pooled_best[h], config.approx_ratio,
                    config.independence_fraction, config.restarts, seed=0)
                d_vals.append(metrics.d_approx(d_solver, max(d_total[h], 1)))
            if e_vals:
                rows.append({"solver": solver, "time_budget": budget,
                             "median_e_approx": float(np.median(e_vals)),
                             "median_d_approx": float(np.median(d_vals)),
                             "instances": len(e_vals)})

    out_prefix = Path(args.out)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["solver", "time_budget",
                                             "median_e_approx",
                                             "median_d_approx", "instances"])
    writer.writeheader()
    writer.writerows(rows)
    _atomic_write(out_prefix.with_suffix(".csv"), buf.getvalue().encode())
    payload = {"inputs": inputs,
               "pooled_best": pooled_best,
               "d_total": d_total,
               "curves": rows}
    _atomic_write(out_prefix.with_suffix(".json"), _dump_json(payload))
    print(f"wrote {out_prefix.with_suffix('.csv')} and .json "
          f"({len(rows)} curve points)")
    return 0


def _load_configs(path: Path, n: int) -> np.ndarray:
    """Configuration list: solver JSON or plain text lines of +-1 entries."""
    if path.suffix == ".json":
        data = _load_sample_file(path)
        return np.array([s["spins"] for s in data["samples"]], dtype=np.int8)
    rows = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        rows.append([int(tok) for tok in line.split()])
    arr = np.array(rows, dtype=np.int8)
    if arr.ndim != 2 or arr.shape[1] != n:
        raise DomainError(f"{path}: expected rows of {n} entries")
    return arr


def cmd_thermo(args) -> int:
    model, content_hash = _load_model(Path(args.instance))
    before = _load_configs(Path(args.before), model.num_spins)
    after = _load_configs(Path(args.after), model.num_spins)

    stats = thermo.energy_change_stats(model, before, after)
    estimate = thermo.pseudo_likelihood_beta(model, after,
                                             beta_max=args.beta_max)
    bounds = thermo.tur_bounds(stats, args.beta1, estimate.beta,
                               num_spins=model.num_spins)

    if args.de2 is not None:
        mode = thermo.classify_mode(stats.mean, args.de2,
                                    stats.mean + args.de2).value
    else:
        inferred = thermo.infer_mode(stats.mean, bounds)
        mode = inferred.value if inferred is not None else "indeterminate"

    record = {
        "instance_hash": content_hash,
        "beta1": args.beta1,
        "beta2": estimate.beta,
        "beta2_boundary_hit": estimate.boundary_hit,
        "de1_mean": stats.mean,
        "de1_second_moment": stats.second_moment,
        "sample_count": stats.count,
        "entropy_lb": bounds.entropy_lb,
        "heat_lb": bounds.heat_lb,
        "work_lb": bounds.work_lb,
        "per_spin": {
            "entropy_lb": bounds.entropy_lb_per_spin,
            "heat_lb": bounds.heat_lb_per_spin,
            "work_lb": bounds.work_lb_per_spin,
        },
        "mode": mode,
    }
    if model.num_spins <= oracle.BRUTE_FORCE_CAP and not args.no_exact:
        ground = oracle.ground_set(model)
        p_gs = thermo.ground_state_fraction(after, ground.states)
        q_gs = thermo.solution_quality(energy_many(model, after),
                                       ground.ground_energy)
        record["p_gs"] = p_gs
        record["q_gs"] = q_gs
        if bounds.work_lb > 0 and bounds.heat_lb != 0:
            eta_comp, eta_th = thermo.efficiencies(p_gs, bounds.work_lb,
                                                   bounds.heat_lb)
            record["eta_comp"] = eta_comp
            record["eta_th"] = eta_th
    _atomic_write(Path(args.out), _dump_json(record))
    print(f"beta2 = {estimate.beta:.6f}, mode = {mode} -> {args.out}")
    return 0


def cmd_simulate(args) -> int:
    model, content_hash = _load_model(Path(args.instance))
    envelope = None
    if args.envelopes:
        envelope = dynamics.envelopes_from_csv(Path(args.envelopes).read_text())
    schedule = dynamics.AnnealSchedule(
        total_time=args.tau, path=args.schedule,
        turning_point=args.s_target, envelope_table=envelope)

    t0 = time.perf_counter()
    dist = dynamics.ice_ensemble(model, args.sigma, args.draws, schedule,
                                 args.steps, args.seed)
    run_time = max(time.perf_counter() - t0, 1e-9)
    dist.check_normalized(1e-10)
    ground = oracle.ground_set(model)
    record = {
        "instance_hash": content_hash,
        "schedule": {"path": args.schedule, "tau": args.tau,
                     "s_target": args.s_target,
                     "envelopes": args.envelopes or "linear-default"},
        "steps": args.steps,
        "sigma": args.sigma,
        "draws": args.draws,
        "seed": args.seed,
        "t_run_seconds": run_time,
        "ground_energy": ground.ground_energy,
        "ground_degeneracy": len(ground),
        "gs_probability": dynamics.ground_state_probability(dist, ground.states),
        "distribution": [float(p) for p in dist.probabilities],
    }
    if args.reference:
        ref = _load_sample_file(Path(args.reference))
        ref_dist = np.array(ref["distribution"])
        record["tvd"] = dynamics.tvd(dist.probabilities, ref_dist)
        record["fidelity"] = dynamics.classical_fidelity(dist.probabilities,
                                                         ref_dist)
    _atomic_write(Path(args.out), _dump_json(record))
    print(f"GS probability {record['gs_probability']:.6f} -> {args.out}")
    return 0


def cmd_metrics(args) -> int:
    runs = [_load_sample_file(Path(f)) for f in args.samples]
    if not runs:
        raise DomainError("no sample files given")
    hashes = {r["instance_hash"] for r in runs}
    if len(hashes) > 1:
        print("error: sample files span multiple instances", file=sys.stderr)
        return 1
    pooled_best = min(r["best_energy"] for r in runs)
    states = np.array([s["spins"] for r in runs for s in r["samples"]],
                      dtype=np.int8)
    energies = np.array([s["energy"] for r in runs for s in r["samples"]])
    d_total, _ = metrics.diversity(states, energies, pooled_best,
                                   args.a_ratio, args.independence,
                                   args.restarts, seed=0)
    per_solver = {}
    for solver in sorted({r["solver"] for r in runs}):
        mine = [r for r in runs if r["solver"] == solver]
        best = min(r["best_energy"] for r in mine)
        threshold = pooled_best + args.a_ratio * 2 * abs(pooled_best)
        succ = sum(1 for r in mine if r["best_energy"] <= threshold)
        t_mean = float(np.mean([r["t_run_seconds"] for r in mine]))
        s_states = np.array([s["spins"] for r in mine for s in r["samples"]],
                            dtype=np.int8)
        s_energies = np.array([s["energy"] for r in mine
                               for s in r["samples"]])
        d_solver, _ = metrics.diversity(s_states, s_energies, pooled_best,
                                        args.a_ratio, args.independence,
                                        args.restarts, seed=0)
        per_solver[solver] = {
            "best_energy": best,
            "e_approx": metrics.e_approx(best, pooled_best),
            "runs": len(mine),
            "success_fraction": succ / len(mine),
            "time_to_target": metrics.tts(succ / len(mine), args.p_target,
                                          t_mean),
            "diversity": d_solver,
            "d_approx": metrics.d_approx(d_solver, max(d_total, 1)),
        }
    payload = {"pooled_best": pooled_best, "d_total": d_total,
               "per_solver": per_solver}
    _atomic_write(Path(args.out), _dump_json(payload))
    print(f"pooled best {pooled_best:.10g}, D_total {d_total} -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinbench",
        description="Spin-glass instance generation, solving, and scoring")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate benchmark instances")
    p.add_argument("--class", dest="instance_class", required=True,
                   choices=[c.value for c in instances.InstanceClass])
    p.add_argument("--lattice", required=True, help="MxN or MxNxT")
    p.add_argument("--no-diagonals", dest="diagonals", action="store_false")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--name", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="run one solver on one instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--solver", required=True, choices=SOLVERS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--replicas", type=int, default=16)
    p.add_argument("--t0", type=float, default=2.0)
    p.add_argument("--steps-sa", type=int, default=200)
    p.add_argument("--steps-pa", type=int, default=1000)
    p.add_argument("--steps-sb", type=int, default=1000)
    p.add_argument("--k-lowest", type=int, default=100)
    p.add_argument("--lattice", default=None, help="MxNxT for peps clustering")
    p.add_argument("--no-diagonals", dest="diagonals", action="store_false")
    p.add_argument("--beta", type=float, default=2.0)
    p.add_argument("--chi", type=int, default=64)
    p.add_argument("--max-states", type=int, default=256)
    p.add_argument("--cutoff-prob", type=float, default=0.0)
    p.add_argument("--transforms", default="all",
                   help="'all' or one transform name")
    p.add_argument("--droplet-energy", type=float, default=None,
                   help="max excitation above the best state to record")
    p.add_argument("--droplet-hamming", type=int, default=1,
                   help="min Hamming distance between recorded excitations")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="median quality/diversity curves")
    p.add_argument("--manifest", required=True)
    p.add_argument("--samples", nargs="+", required=True)
    p.add_argument("--p-target", type=float, default=0.99)
    p.add_argument("--a-ratio", type=float, default=0.01)
    p.add_argument("--independence", type=float, default=0.5)
    p.add_argument("--restarts", type=int, default=100)
    p.add_argument("--out", required=True, help="output prefix (.csv, .json)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("thermo", help="effective temperature and TUR bounds")
    p.add_argument("--instance", required=True)
    p.add_argument("--before", required=True,
                   help="initial configurations (text or solver JSON)")
    p.add_argument("--after", required=True,
                   help="final configurations (text or solver JSON)")
    p.add_argument("--beta1", type=float, required=True)
    p.add_argument("--beta-max", type=float, default=thermo.DEFAULT_BETA_MAX)
    p.add_argument("--de2", type=float, default=None,
                   help="known environment energy change (fixtures)")
    p.add_argument("--no-exact", action="store_true",
                   help="skip brute-force ground-state metrics")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_thermo)

    p = sub.add_parser("simulate", help="closed-system annealing dynamics")
    p.add_argument("--instance", required=True)
    p.add_argument("--schedule", default=dynamics.PATH_FORWARD,
                   choices=[dynamics.PATH_FORWARD, dynamics.PATH_REVERSE,
                            dynamics.PATH_REVERSE_PAUSE])
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--s-target", type=float, default=None)
    p.add_argument("--envelopes", default=None, help="CSV of s,A,B rows")
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--draws", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reference", default=None,
                   help="earlier simulate JSON for TVD/fidelity")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("metrics", help="score a set of sample files")
    p.add_argument("--samples", nargs="+", required=True)
    p.add_argument("--p-target", type=float, default=0.99)
    p.add_argument("--a-ratio", type=float, default=0.01)
    p.add_argument("--independence", type=float, default=0.5)
    p.add_argument("--restarts", type=int, default=100)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "solve" and args.solver == "peps" and not args.lattice:
        parser.error("peps requires --lattice MxNxT")
    try:
        return args.func(args)
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CooFormatError, json.JSONDecodeError) as exc:
        print(f"error: malformed input: {exc}", file=sys.stderr)
        return 2
    except (ContractionError, DegenerateDataError, InconsistencyError,
            DomainError, AssertionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

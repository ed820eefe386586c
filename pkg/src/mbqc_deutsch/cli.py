"""Command-line interface: ``run``, ``tomography`` and ``sweep``.

Exit codes: 0 success, 2 bad configuration, 3 I/O failure, 4 estimation failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import cluster, mbqc, qcore, tomography
from .cluster import NoiseSpec, ResourceKind
from .errors import ConfigurationError, EstimationError
from .mbqc import BlackBox

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_ESTIMATION = 0, 2, 3, 4


@dataclass(frozen=True)
class RunConfig:
    blackbox: BlackBox = BlackBox.I_II
    resource: ResourceKind = ResourceKind.PHI_C
    noise: NoiseSpec = NoiseSpec()
    feedforward: bool = True
    repetitions: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.repetitions < 1:
            raise ConfigurationError("repetitions must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must be a 64-bit unsigned integer")

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        return cls(
            BlackBox.parse(args.blackbox),
            ResourceKind(args.resource),
            NoiseSpec.parse(args.noise),
            args.ff,
            getattr(args, "reps", 1),
            args.seed,
        )

    def resource_state(self) -> np.ndarray:
        ideal = cluster.build_resource(self.resource)
        if self.noise.model == "none":
            return ideal
        return cluster.apply_noise(ideal, self.noise)

    def as_dict(self) -> dict:
        return {
            "blackbox": self.blackbox.value,
            "resource": self.resource.value,
            "noise": str(self.noise),
            "feedforward": self.feedforward,
            "repetitions": self.repetitions,
            "seed": self.seed,
        }


def _ideal_resource(kind: ResourceKind) -> np.ndarray:
    return cluster.build_resource(kind)


def _branch_rows(config: RunConfig, state) -> list[dict]:
    rows = mbqc.branch_table(config.blackbox, state, config.feedforward, config.resource)
    return [
        {"s2": r.outcomes[2], "s4": r.outcomes[4], "probability": r.probability,
         "p_constant": r.p_constant, "fidelity": r.fidelity}
        for r in rows
    ]


def cmd_run(config: RunConfig, out: Path | None = None) -> dict:
    """Execute the program ``repetitions`` times and compare with exact predictions."""
    state = config.resource_state()
    program = mbqc.program_for(config.blackbox, config.resource)
    verdicts = []
    for i in range(config.repetitions):
        rng = np.random.default_rng([config.seed, i])
        verdicts.append(mbqc.classify(mbqc.execute(program, state, rng, config.feedforward)).value)
    expected = config.blackbox.expected.value
    n_const = verdicts.count(mbqc.Verdict.CONSTANT.value)
    report = {
        "config": config.as_dict(),
        "expected": expected,
        "counts": {"Constant": n_const, "Balanced": len(verdicts) - n_const},
        "classification": max(("Constant", "Balanced"), key=lambda v: verdicts.count(v)),
        "success_rate": verdicts.count(expected) / len(verdicts),
        "exact_success_probability": mbqc.success_probability(
            config.blackbox, state, config.feedforward, config.resource),
        "branches": _branch_rows(config, state),
        "runs": verdicts,
    }
    if out is not None:
        Path(out).write_text(json.dumps(report, indent=1))
    return report


def _format_run(report: dict) -> str:
    lines = [
        f"black box {report['config']['blackbox']} on {report['config']['resource']}"
        f" (noise {report['config']['noise']}, ff={'on' if report['config']['feedforward'] else 'off'})",
        f"classification: {report['classification']}"
        f"  [Constant {report['counts']['Constant']}, Balanced {report['counts']['Balanced']}]",
        f"expected: {report['expected']}",
        f"empirical success rate: {report['success_rate']:.4f}",
        f"exact success probability: {report['exact_success_probability']:.12f}",
        "branches:  s2 s4  prob      P(Constant)  fidelity",
    ]
    for b in report["branches"]:
        lines.append(f"           {b['s2']}  {b['s4']}   {b['probability']:.6f}  "
                     f"{b['p_constant']:.6f}     {b['fidelity']:.6f}")
    return "\n".join(lines)


def output_state(config: RunConfig) -> np.ndarray:
    """Branch-averaged logical (1,3) output, i.e. the state seen over many repetitions."""
    program = mbqc.program_for(config.blackbox, config.resource)
    return mbqc.average_output(mbqc.enumerate_branches(program, config.resource_state(), config.feedforward))


def cmd_tomography(target: str, config: RunConfig, shots: int, out: Path,
                   runs: int = 100, mode: str = "multinomial") -> dict:
    """Simulate counts, reconstruct, and write ``counts.csv``, ``rho.json``, ``report.json``."""
    if target == "resource":
        state = config.resource_state()
        rho_true = qcore.density(state) if state.ndim == 1 else state
        ideal = _ideal_resource(config.resource)
        plan = tomography.settings_plan(4)
    elif target == "output":
        rho_true = output_state(config)
        ideal = mbqc.ideal_output(config.blackbox)
        plan = tomography.settings_plan(2)
    else:
        raise ConfigurationError(f"unknown tomography target {target!r}")
    counts = tomography.simulate_counts(rho_true, plan, shots, config.seed, mode)
    result = tomography.mle_reconstruct(counts)
    fid = qcore.fidelity(result.rho, ideal)
    report = {
        "config": config.as_dict(),
        "target": target,
        "shots": shots,
        "backend": tomography.BACKEND,
        "fidelity": fid,
        "fidelity_true_state": qcore.fidelity(rho_true, ideal),
        "log_likelihood": result.log_likelihood,
        "iterations": result.iterations,
        "newton_steps": result.newton_steps,
        "converged": result.converged,
    }
    if runs >= 2:
        bar = tomography.monte_carlo_errorbar(counts, ideal, runs, seed=config.seed)
        report["errorbar"] = {"mean": bar.mean, "std": bar.std, "runs": bar.runs}
    if target == "output":
        report["negativity"] = qcore.negativity(result.rho)
        report["mean_abs_imag"] = float(np.abs(result.rho.imag).mean())
    else:
        f_w, passed = tomography.biseparability_witness(result.rho, ideal)
        report["witness"] = {"fidelity": f_w, "passed": passed}
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    counts.to_csv(out / "counts.csv")
    tomography.write_density_json(result.rho, out / "rho.json")
    (out / "report.json").write_text(json.dumps(report, indent=1))
    return report


def _format_tomography(report: dict) -> str:
    lines = [
        f"{report['target']} tomography, {report['shots']} shots/setting ({report['backend']} kernel)",
        f"fidelity with ideal target: {report['fidelity']:.6f}"
        f" (true state {report['fidelity_true_state']:.6f})",
    ]
    if "errorbar" in report:
        e = report["errorbar"]
        lines.append(f"Monte Carlo: {e['mean']:.6f} +/- {e['std']:.6f} over {e['runs']} runs")
    if "negativity" in report:
        lines.append(f"negativity: {report['negativity']:.3e}")
        lines.append(f"mean |Im rho|: {report['mean_abs_imag']:.3e}")
    if "witness" in report:
        w = report["witness"]
        verdict = "passed" if w["passed"] else "failed"
        lines.append(f"biseparability witness (F > 0.5): {verdict} at F = {w['fidelity']:.6f}")
    return "\n".join(lines)


SWEEP_FIELDS = ("p", "F_resource", "success_bb", "fidelity_out_ff", "fidelity_out_noff")


def cmd_sweep(blackbox: BlackBox, grid, resource: ResourceKind = ResourceKind.PHI_C) -> list[dict]:
    """Exact white-noise sweep; every number comes from branch enumeration."""
    grid = [float(p) for p in grid]
    if not grid or any(not 0.0 <= p <= 1.0 for p in grid):
        raise ConfigurationError(f"sweep grid must be nonempty and inside [0, 1]: {grid}")
    ideal = _ideal_resource(resource)
    target = mbqc.ideal_output(blackbox)
    program = mbqc.program_for(blackbox, resource)
    rows = []
    for p in grid:
        rho = cluster.apply_noise(ideal, NoiseSpec.white(p))
        out = {ff: mbqc.average_output(mbqc.enumerate_branches(program, rho, ff)) for ff in (True, False)}
        rows.append({
            "p": p,
            "F_resource": qcore.fidelity(rho, ideal),
            "success_bb": mbqc.success_probability(blackbox, rho, True, resource),
            "fidelity_out_ff": qcore.fidelity(out[True], target),
            "fidelity_out_noff": qcore.fidelity(out[False], target),
        })
    return rows


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(float(r[k])) for k in SWEEP_FIELDS})
    return buf.getvalue()


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--blackbox", default="bb1", choices=[b.value for b in BlackBox])
    p.add_argument("--resource", default="phi-c", choices=[r.value for r in ResourceKind])
    p.add_argument("--noise", default="none", help="none | white:p | dephase:q1,q2,q3,q4")
    p.add_argument("--ff", action=argparse.BooleanOptionalAction, default=True,
                   help="apply feed-forward corrections (default on)")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mbqc-deutsch", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute the algorithm repeatedly")
    _common(p)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--out", type=Path, help="write the JSON report here")

    p = sub.add_parser("tomography", help="synthetic tomography of the resource or output")
    p.add_argument("target", choices=["resource", "output"])
    _common(p)
    p.add_argument("--shots", type=int, default=500)
    p.add_argument("--runs", type=int, default=100, help="Monte Carlo runs (0 disables)")
    p.add_argument("--mode", default="multinomial", choices=["multinomial", "poisson"])
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("sweep", help="exact white-noise sweep as CSV")
    p.add_argument("--blackbox", default="bb1", choices=[b.value for b in BlackBox])
    p.add_argument("--resource", default="phi-c", choices=[r.value for r in ResourceKind])
    p.add_argument("--grid", default="0,0.25,0.5,0.75,1", help="comma-separated white-noise weights")
    p.add_argument("--out", type=Path, help="write CSV here instead of stdout")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            report = cmd_run(RunConfig.from_args(args), args.out)
            print(_format_run(report))
        elif args.command == "tomography":
            config = RunConfig.from_args(args)
            report = cmd_tomography(args.target, config, args.shots, args.out, args.runs, args.mode)
            print(_format_tomography(report))
        else:
            try:
                grid = [float(x) for x in args.grid.split(",")]
            except ValueError:
                raise ConfigurationError(f"cannot parse grid {args.grid!r}") from None
            text = sweep_csv(cmd_sweep(BlackBox.parse(args.blackbox), grid, ResourceKind(args.resource)))
            if args.out:
                Path(args.out).write_text(text)
            else:
                sys.stdout.write(text)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except EstimationError as exc:
        print(f"estimation error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: ``autoresonance <command> --config PATH``.

Each command validates its YAML config, runs one experiment family and
writes CSV/JSON outputs plus ``manifest.json`` into the output directory.
Outputs do not depend on ``--workers`` and contain no timestamps, so two
runs of the same config are byte-identical.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .asymptotics import extend_coeffs, leading_coeffs, reference_series, residual
from .config import COMMANDS, load_config, resolve_out_dir
from .dynamics import DuffingParams, ModelParams
from .errors import AutoresonanceError, ConfigError, DomainError, IncompleteRunError, InvalidInputError
from .integrate import STEP_LIMIT, IntegratorConfig
from .lyapunov import DomainBox, GridSpec, certify_domain
from .perturbations import (
    Distribution,
    JumpTrainSpec,
    RandomPertPath,
    make_example1,
    sample_jump_train,
    sample_single_jump,
)
from .serialization import write_csv, write_json
from .simulation import (
    BasinGrid,
    CaptureCriterion,
    JumpTrainFactory,
    MonteCarloConfig,
    PhaseProblem,
    SingleJumpFactory,
    ZeroFactory,
    basin_scan,
    duffing_compare,
    integrate_until_escape,
    monte_carlo_escape,
    write_trajectory_csv,
)

__all__ = ["main", "run"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

log = logging.getLogger("autoresonance")


def _params(cfg) -> ModelParams:
    m = cfg["model"]
    return ModelParams(lam=m["lambda"], delta=m["delta"], f=m["f"])


def _integrator(cfg) -> IntegratorConfig:
    return IntegratorConfig(**cfg["integrator"])


def _path_for(pert: dict, seed: int) -> Optional[RandomPertPath]:
    kind = pert["kind"]
    if kind == "jump_train":
        spec = JumpTrainSpec(pert["N"], Distribution.from_dict(pert["jump"]), pert["mu"], pert["offset"])
        return sample_jump_train(spec, seed)
    if kind == "single_jump":
        return sample_single_jump(
            Distribution.from_dict(pert["omega"]), Distribution.from_dict(pert["jump"]), pert["mu"], seed
        )
    return None


def _factory(pert: dict):
    kind = pert["kind"]
    if kind == "jump_train":
        return JumpTrainFactory(pert["N"], Distribution.from_dict(pert["jump"]), pert["offset"])
    if kind == "single_jump":
        return SingleJumpFactory(Distribution.from_dict(pert["omega"]), Distribution.from_dict(pert["jump"]))
    if kind in ("none", "zero"):
        return ZeroFactory()
    raise ConfigError(f"montecarlo.perturbation.kind must be jump_train, single_jump or none, got {kind!r}")


def cmd_simulate(cfg: dict, out: Path, workers: int) -> List[str]:
    sec = cfg["simulate"]
    params = _params(cfg)
    ref = reference_series(params, sec["ref_order"])
    tau0 = sec["tau0"]
    if sec["start_on_reference"]:
        r_ref, psi_ref = ref.eval(tau0)
        R, P = sec["offset"]
        initial = (r_ref + math.sqrt(params.lam * tau0) * R, psi_ref + P)
    else:
        initial = tuple(sec["initial"])

    pert = sec["perturbation"]
    kind = pert["kind"]
    files = ["trajectory.csv", "summary.json"]
    if kind == "none":
        problem = PhaseProblem(params)
    elif kind == "example1":
        problem = PhaseProblem(params, make_example1(), pert["mu"])
    elif kind in ("jump_train", "single_jump"):
        path = _path_for(pert, cfg["seed"])
        problem = PhaseProblem(params, path)
        grid = np.linspace(tau0, sec["horizon"], 1001)
        taus = sorted(set(grid.tolist()) | {b for b in path.breakpoints if tau0 <= b <= sec["horizon"]})
        path.to_csv(out / "perturbation.csv", taus)
        files.append("perturbation.csv")
    else:
        raise ConfigError(f"simulate.perturbation.kind must be none, example1, jump_train or single_jump, got {kind!r}")

    traj = integrate_until_escape(
        problem, initial, tau0, sec["horizon"], sec["epsilon"], ref, _integrator(cfg), sec["norm"]
    )
    write_trajectory_csv(traj, out / "trajectory.csv", ref, sec["norm"])
    r_end, psi_end = (float(v) for v in traj.final_state)
    write_json(out / "summary.json", {
        "status": traj.status,
        "escape_time": traj.escape_time,
        "final_tau": traj.final_time,
        "final_r": r_end,
        "final_psi": psi_end,
        "final_ratio": r_end / (params.lam * traj.final_time),
        "n_steps": traj.n_steps,
        "n_samples": len(traj.times),
    })
    if traj.status == STEP_LIMIT:
        raise IncompleteRunError(
            f"step budget of {cfg['integrator']['max_steps']} exhausted at tau={traj.final_time:.17g}; "
            "raise integrator.max_steps or h_max",
            files,
        )
    return files


def cmd_asymptotics(cfg: dict, out: Path, workers: int) -> List[str]:
    sec = cfg["asymptotics"]
    params = _params(cfg)
    series = extend_coeffs(params, sec["branch"], sec["order"])
    psi0, r0, psi1, r1 = leading_coeffs(params, sec["branch"])
    payload = series.to_dict()
    payload["leading"] = {"psi0": psi0, "r0": r0, "psi1": psi1, "r1": r1}
    write_json(out / "series.json", payload)
    taus = np.asarray(sec["taus"], dtype=float)
    if np.any(taus <= 0):
        raise DomainError("asymptotics.taus must be positive")
    res_r, res_psi = residual(series, taus, sec["precision"])
    write_csv(out / "residuals.csv", ["tau", "residual_r", "residual_psi"], zip(taus, np.atleast_1d(res_r), np.atleast_1d(res_psi)))
    return ["series.json", "residuals.csv"]


def cmd_certify(cfg: dict, out: Path, workers: int) -> List[str]:
    sec = cfg["certify"]
    params = _params(cfg)
    # with m = 0 the report is a zero-margin diagnosis and no reference exists
    ref = reference_series(params, sec["ref_order"]) if params.m != 0.0 else None
    box = DomainBox(sec["rho_max"], sec["tau_min"], sec["tau_max"])
    grid = GridSpec(sec["n_angle"], sec["n_rho"], sec["n_tau"], sec["max_rounds"])
    report = certify_domain(params, ref, box, grid, workers=workers)
    write_json(out / "certificate.json", report.to_dict())
    return ["certificate.json"]


def cmd_basin(cfg: dict, out: Path, workers: int) -> List[str]:
    sec = cfg["basin"]
    params = _params(cfg)
    crit = CaptureCriterion(sec["ratio_lo"], sec["ratio_hi"], sec["phase_window"])
    if sec["points"] is not None:
        grid = [tuple(p) for p in sec["points"]]
    else:
        grid = BasinGrid(sec["r_min"], sec["r_max"], sec["n_r"], sec["psi_min"], sec["psi_max"], sec["n_psi"])
    result = basin_scan(params, grid, sec["tau_max"], crit, sec["tau_init"], _integrator(cfg), workers)
    result.to_csv(out / "basin.csv")
    write_json(out / "summary.json", {"counts": result.counts(), "n_points": len(result.cells)})
    return ["basin.csv", "summary.json"]


def cmd_montecarlo(cfg: dict, out: Path, workers: int) -> List[str]:
    sec = cfg["montecarlo"]
    mc = MonteCarloConfig(
        n_trials=sec["n_trials"],
        mu=sec["mu"],
        kappa=sec["kappa"],
        epsilon=sec["epsilon"],
        tau0=sec["tau0"],
        seed=cfg["seed"],
        params=_params(cfg),
        pert=_factory(sec["perturbation"]),
        ref_order=sec["ref_order"],
        norm=sec["norm"],
        initial_offset=tuple(sec["initial_offset"]),
        integrator=_integrator(cfg),
    )
    report = monte_carlo_escape(mc, workers=workers)
    write_json(out / "report.json", report.to_dict())
    return ["report.json"]


def cmd_duffing(cfg: dict, out: Path, workers: int) -> List[str]:
    sec = cfg["duffing"]
    dp = DuffingParams(sec["beta"], sec["gamma"], sec["eps"], sec["alpha"])
    cfg_int = _integrator(cfg)
    report = duffing_compare(dp, sec["horizon_t"], cfg_int, sec["x0"], sec["v0"], sec["samples_per_period"])
    write_json(out / "report.json", report.to_dict())
    report.to_csv(out / "envelope.csv")
    return ["report.json", "envelope.csv"]


COMMAND_FUNCS: Dict[str, Callable[[dict, Path, int], List[str]]] = {
    "simulate": cmd_simulate,
    "asymptotics": cmd_asymptotics,
    "certify": cmd_certify,
    "basin": cmd_basin,
    "montecarlo": cmd_montecarlo,
    "duffing": cmd_duffing,
}


def _manifest(command: str, cfg: dict, files: List[str]) -> dict:
    # the output location and worker count do not affect results, so they stay out
    echo = {k: v for k, v in cfg.items() if k != "output"}
    return {
        "tool": "autoresonance",
        "version": __version__,
        "command": command,
        "seed": cfg["seed"],
        "config": echo,
        "outputs": sorted(files),
    }


def run(command: str, config: str, out: Optional[str] = None, workers: int = 1, seed: Optional[int] = None) -> Path:
    """Run one command; raises package errors instead of exiting."""
    cfg = load_config(config, command)
    if seed is not None:
        cfg["seed"] = int(seed)
    if workers < 1:
        raise ConfigError("--workers must be at least 1")
    out_dir = resolve_out_dir(out, cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        files = COMMAND_FUNCS[command](cfg, out_dir, workers)
    except IncompleteRunError as exc:
        # partial outputs stay auditable
        write_json(out_dir / "manifest.json", _manifest(command, cfg, exc.args[1]))
        raise
    write_json(out_dir / "manifest.json", _manifest(command, cfg, files))
    return out_dir


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="autoresonance", description="Autoresonance stability experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "simulate": "integrate the resonance equations and write a trajectory CSV",
        "asymptotics": "compute asymptotic series coefficients and residuals",
        "certify": "search for a Lyapunov certificate box",
        "basin": "classify a grid of initial points as captured or bounded",
        "montecarlo": "estimate escape probability under random perturbations",
        "duffing": "compare the Duffing envelope against the averaged model",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", required=True, metavar="PATH", help="YAML experiment config")
        p.add_argument("--out", metavar="DIR", help="output directory (overrides config and $AUTORESONANCE_OUT)")
        p.add_argument("--workers", type=int, default=1, metavar="N", help="worker processes (results do not depend on it)")
        p.add_argument("--seed", type=int, default=None, metavar="S", help="master seed (overrides config)")
        p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        out = run(args.command, args.config, args.out, args.workers, args.seed)
    except (ConfigError, DomainError, InvalidInputError) as exc:
        print(f"autoresonance {args.command}: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"autoresonance {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (AutoresonanceError, ArithmeticError, np.linalg.LinAlgError) as exc:
        msg = exc.args[0] if isinstance(exc, IncompleteRunError) else exc
        print(f"autoresonance {args.command}: numerical failure: {msg}", file=sys.stderr)
        return EXIT_NUMERICAL
    log.info("wrote outputs to %s", out)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

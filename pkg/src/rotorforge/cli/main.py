"""``rotorforge <subcommand> --config FILE [--jobs N] [--out DIR]``.

Exit status: 0 when every check passed, 2 when a check failed (the run
completed but falsified an expectation), 1 on errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import platform
import sys
import time
from typing import Dict, List, Optional, Sequence

import numpy as np

from .. import __version__
from ..chain import check_nondegenerate
from ..experiments import (Report, Table, norm_bound_checks, asymptotic_comparison,
                           coordinate_scalings, decoupled_comparison, degenerate_experiment,
                           dissipation_decomposition, dissipation_experiment,
                           m1_window_integrals, p1_approximation,
                           scaling_experiment, stability_monitor, symmetry_experiment)
from ..experiments.runs import initial_state
from ..experiments.verify import verify_chain
from ..integrator import energy_balance_residual, integrate, trajectory_csv
from ..normal_form import build_normal_form, check_identities, dumps_normal_form
from .config import SUBCOMMANDS, ConfigError, RunConfig, check_for_subcommand, parse_config

EXIT_OK, EXIT_ERROR, EXIT_FALSIFIED = 0, 1, 2
BALANCE_TOL = 1e-5  # relative to max(1, |H0|) per 1e4 time units

log = logging.getLogger("rotorforge")


class Outcome:
    """Reports and extra payload files of one subcommand."""

    def __init__(self):
        self.reports: List[Report] = []
        self.files: Dict[str, str] = {}


# -- subcommands -----------------------------------------------------------------


def run_simulate(cfg: RunConfig, out: Outcome) -> None:
    chain = cfg.chain()
    icfg = cfg.integrator()
    ecfg = cfg.experiment("simulate")
    rep = Report("simulate", params={"t_final": icfg.t_final, "scheme": icfg.scheme,
                                     "steps_per_fast_period": icfg.steps_per_fast_period,
                                     "L_list": list(ecfg.L_list)})
    rows = []
    for L in ecfg.L_list:
        for seed in ecfg.seeds:
            tr = integrate(chain, initial_state(ecfg, L, seed), icfg, L=L)
            res = energy_balance_residual(tr)
            scale = max(1.0, abs(tr.H0))
            allowed = BALANCE_TOL * scale * max(1.0, icfg.t_final / 1e4)
            rows.append([L, seed, tr.H0, float(tr.H[-1]), tr.final_dissipated, res, res / scale])
            rep.check(f"energy balance L={L:g} seed={seed}", res <= allowed, res / scale,
                      f"<= {BALANCE_TOL:g} per 1e4 time units")
            out.files[f"trajectory_L{L:g}_seed{seed}.csv"] = trajectory_csv(tr)
    rep.tables["balance"] = Table(["L", "seed", "H0", "H_final", "dissipated",
                                   "balance_residual", "relative_residual"], rows)
    out.reports.append(rep)


def run_normal_form(cfg: RunConfig, out: Outcome) -> None:
    chain = cfg.chain()
    nf = build_normal_form(chain)
    ids = check_identities(nf)
    rep = Report("normal_form", params={"n": chain.n, "k": chain.k, "nstar": nf.cutoff,
                                        "max_order": nf.max_order})
    rows = []
    for j, chi in enumerate(nf.generators):
        rows.append([j, chi.n_modes, chi.n_terms, nf.resonant_layers[j].n_modes,
                     nf.resonant_layers[j].n_terms])
    rep.tables["layers"] = Table(["j", "generator_modes", "generator_terms",
                                  "resonant_modes", "resonant_terms"], rows)
    for name, flags in ids.items():
        rep.check(name, all(flags), [bool(x) for x in flags])
    out.files["normal_form.txt"] = dumps_normal_form(nf, timestamp="fixed")
    out.reports.append(rep)


def run_scaling(cfg: RunConfig, out: Outcome) -> None:
    ecfg = cfg.experiment("scaling")
    chain = ecfg.chain
    if chain.k < chain.n:
        out.reports.append(symmetry_experiment(ecfg))
    out.reports.append(scaling_experiment(ecfg))


def run_dissipation(cfg: RunConfig, out: Outcome) -> None:
    out.reports.append(dissipation_experiment(cfg.experiment("dissipation")))


def run_decompose(cfg: RunConfig, out: Outcome) -> None:
    ecfg = cfg.experiment("decompose")
    pts = cfg["experiment"]["points"]
    out.reports.append(p1_approximation(ecfg, points=pts))
    out.reports.append(coordinate_scalings(ecfg, points=pts))
    out.reports.append(decoupled_comparison(ecfg))
    out.reports.append(m1_window_integrals(ecfg))
    if ecfg.chain.gamma > 0:
        out.reports.append(dissipation_decomposition(ecfg))


def run_asymptotics(cfg: RunConfig, out: Outcome) -> None:
    out.reports.append(asymptotic_comparison(cfg.experiment("asymptotics")))


def run_degenerate(cfg: RunConfig, out: Outcome) -> None:
    chain = cfg.chain()
    if check_nondegenerate(chain.potentials[0]):
        raise ConfigError(
            f"refusing: U_1 = {chain.potentials[0].spec!r} passes the non-degeneracy check "
            "(U' and U'' never vanish together); the degenerate experiment needs a first "
            "bond that violates it, e.g. 'potentials = degenerate_quartic; cosine' with "
            "chain.degenerate_allowed = true")
    out.reports.append(degenerate_experiment(cfg.experiment("degenerate")))


def run_stability(cfg: RunConfig, out: Outcome) -> None:
    e = cfg["experiment"]
    out.reports.append(stability_monitor(cfg.experiment("stability"), T_cap=e["T_cap"],
                                         rho_max=e["rho_max"]))


def run_verify(cfg: RunConfig, out: Outcome) -> None:
    out.reports.append(verify_chain(cfg.chain(), seeds=cfg["experiment"]["seeds"] or (0,)))


def run_bounds(cfg: RunConfig, out: Outcome) -> None:
    e = cfg["experiment"]
    base = e["seeds"][0]
    seeds = tuple(range(base, base + e["bound_functions"]))
    out.reports.append(norm_bound_checks(seeds, e["bound_L"]))


RUNNERS = {
    "simulate": run_simulate, "normal-form": run_normal_form, "scaling": run_scaling,
    "dissipation": run_dissipation, "decompose": run_decompose,
    "asymptotics": run_asymptotics, "degenerate": run_degenerate,
    "stability": run_stability, "verify": run_verify, "bounds": run_bounds,
}
assert set(RUNNERS) == set(SUBCOMMANDS)


# -- outputs ------------------------------------------------------------------------


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def write_outputs(out: Outcome, cfg: RunConfig, kind: str, out_dir: str,
                  wall_time: float) -> Dict[str, str]:
    """Write CSV tables, JSON reports, payload files and ``manifest.json``.

    File names carry the subcommand and the first 12 hex digits of the config
    hash.  Everything except the manifest is a pure function of the config.
    """
    os.makedirs(out_dir, exist_ok=True)
    tag = f"{kind}_{cfg.config_hash[:12]}"
    formats = cfg["output"]["formats"]
    payload: Dict[str, str] = {}
    for rep in out.reports:
        rep.meta.update({"config_hash": cfg.config_hash, "version": __version__,
                         "seeds": list(cfg["experiment"]["seeds"])})
        if "csv" in formats:
            for name, table in sorted(rep.tables.items()):
                payload[f"{tag}_{rep.kind}_{name}.csv"] = table.to_csv()
        if "json" in formats:
            payload[f"{tag}_{rep.kind}.json"] = rep.to_json() + "\n"
    for name, text in sorted(out.files.items()):
        payload[f"{tag}_{name}"] = text
    hashes = {}
    for name, text in sorted(payload.items()):
        with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        hashes[name] = _sha(text)
    manifest = {
        "subcommand": kind,
        "config": cfg.echo(),
        "config_hash": cfg.config_hash,
        "seeds": list(cfg["experiment"]["seeds"]),
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "wall_time_s": round(wall_time, 3),
        "passed": all(r.passed for r in out.reports),
        "reports": {r.kind: r.passed for r in out.reports},
        "files": hashes,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return hashes


def execute(cfg: RunConfig, kind: str, out_dir: Optional[str] = None) -> int:
    """Run one subcommand and write its outputs; returns the exit status."""
    check_for_subcommand(cfg, kind)
    out_dir = out_dir or cfg["output"]["dir"]
    t0 = time.perf_counter()
    out = Outcome()
    RUNNERS[kind](cfg, out)
    write_outputs(out, cfg, kind, out_dir, time.perf_counter() - t0)
    for rep in out.reports:
        print(rep.summary())
    return EXIT_OK if all(r.passed for r in out.reports) else EXIT_FALSIFIED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rotorforge",
                                description="Rotator-chain normal forms and experiments.")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", required=False, help="run configuration file")
    p.add_argument("--jobs", type=int, default=None, help="worker processes for sweeps")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        text = ""
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        cfg = parse_config(text)
        if args.jobs is not None:
            if args.jobs < 1:
                raise ConfigError("--jobs must be at least 1")
            cfg["experiment"]["jobs"] = args.jobs
        return execute(cfg, args.subcommand, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError, RuntimeError, ArithmeticError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

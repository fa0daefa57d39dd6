"""Command-line front end.

    qutrit-corr curves      --p-grid 0:1:0.05 --out DIR
    qutrit-corr roundtrip   P [--noise-sigma S] [--monte-carlo M] --seed N --out DIR
    qutrit-corr reconstruct RECORD MODEL [--monte-carlo M] --seed N --out DIR

Exit codes: 0 success, 1 validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .correlations import ConvergenceError, make_isotropic, negativity, quantum_discord
from .io import (
    InputError,
    PLRecord,
    RunConfig,
    RunManifest,
    atomic_write,
    curves_csv,
    load_config,
    load_model,
    load_record,
    matrix_to_pairs,
    quantize,
    write_json,
)
from .nv import prepare_isotropic
from .plotting import plot_curves, plot_density_matrix
from .qudit import DensityMatrix, fidelity
from .tomography import (
    PLModel,
    default_pl_model,
    estimate_p_ensemble,
    monte_carlo_reconstruct,
    noise_for_element_sigma,
    simulate_measurement,
    simulate_normalization,
    solve_normalization,
)

log = logging.getLogger(__name__)

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2
CURVE_COLUMNS = ["p", "negativity", "discord", "mutual_information", "classical_correlation"]
# stand-in sigma for noiseless records, which must still carry positive error bars
NOISELESS_SIGMA = 1e-12
DEFAULT_ELEMENT_SIGMA = 0.01


def parse_p_grid(text: str) -> list[float]:
    """'a,b,c' or 'start:stop:step' (stop inclusive)."""
    text = text.strip()
    if not text:
        raise InputError("p grid is empty")
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise InputError(f"range grid must be start:stop:step, got {text!r}")
        try:
            start, stop, step = (float(x) for x in parts)
        except ValueError as exc:
            raise InputError(f"bad number in p grid {text!r}") from exc
        if not step > 0:
            raise InputError("grid step must be positive")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        grid = [round(start + i * step, 12) for i in range(max(n, 0))]
    else:
        try:
            grid = [float(x) for x in text.split(",") if x.strip()]
        except ValueError as exc:
            raise InputError(f"bad number in p grid {text!r}") from exc
    if not grid:
        raise InputError("p grid is empty")
    bad = [p for p in grid if not 0.0 <= p <= 1.0]
    if bad:
        raise InputError(f"grid values outside [0, 1]: {bad}")
    return grid


def derived_seeds(seed: int) -> dict[str, int]:
    """Independent child seeds for each random stage of a run."""
    states = np.random.SeedSequence(seed).generate_state(3)
    return dict(zip(("normalization", "measurement", "monte_carlo"), (int(s) for s in states)))


def _manifest(args, command: str, **parameters) -> RunManifest:
    return RunManifest(
        command=command,
        seed=args.seed,
        output_dir=str(args.out),
        config_path=None if args.config is None else str(args.config),
        parameters=parameters,
    )


# --- curves --------------------------------------------------------------------------

def curve_rows(grid, run: RunConfig) -> tuple[list[dict], list[dict]]:
    rows, diagnostics = [], []
    for p in grid:
        rep = quantum_discord(make_isotropic(p), run.optimizer)
        rows.append({
            "p": p,
            "negativity": rep.negativity,
            "discord": rep.discord,
            "mutual_information": rep.mutual_information,
            "classical_correlation": rep.classical_correlation,
        })
        diagnostics.append({
            "p": p,
            "optimizer_basis": rep.optimizer_basis.as_array(),
            "evaluations": rep.optimizer_evals,
        })
    return rows, diagnostics


def cmd_curves(args, run: RunConfig) -> int:
    grid = parse_p_grid(args.p_grid)
    rows, diagnostics = curve_rows(grid, run)
    manifest = _manifest(args, "curves", p_grid=grid)
    out = Path(args.out)
    atomic_write(out / "curves.csv", curves_csv(manifest, rows, CURVE_COLUMNS))
    write_json(out / "curves.json", {
        "manifest": manifest.to_dict(),
        "config": run.to_dict(),
        "diagnostics": diagnostics,
    })
    plot_curves(rows, out / "curves.png")
    return EXIT_OK


# --- tomography ----------------------------------------------------------------------

def _simulator(run: RunConfig, realistic: bool):
    if realistic:
        return lambda q: prepare_isotropic(q, run.nv, ideal=False)[0]
    return make_isotropic


def reconstruction_section(record: PLRecord, model: PLModel, M: int, seed: int,
                           run: RunConfig, realistic: bool, with_discord: bool) -> tuple[dict, DensityMatrix]:
    """Monte Carlo MLE, p estimate and correlations; shared by both commands."""
    mc = monte_carlo_reconstruct(record, model, M, derived_seeds(seed)["monte_carlo"])
    simulator = _simulator(run, realistic)
    p_hat, p_sigma, _ = estimate_p_ensemble(mc.states, simulator)
    negs = np.array([negativity(s) for s in mc.states])
    section = {
        "members": M,
        "unconverged": mc.unconverged,
        "mean_matrix": matrix_to_pairs(mc.mean.matrix),
        "std_real": mc.std_real,
        "std_imag": mc.std_imag,
        "p_hat": p_hat,
        "p_sigma": p_sigma,
        "fidelity_to_estimate": fidelity(mc.mean, simulator(p_hat)),
        "negativity": float(negs.mean()),
        "negativity_sigma": float(negs.std(ddof=1)) if M > 1 else 0.0,
    }
    if with_discord:
        section["discord_of_mean"] = quantum_discord(mc.mean, run.optimizer).discord
    if mc.unconverged:
        log.warning("%d of %d MLE runs hit the iteration cap", mc.unconverged, M)
    return section, mc


def _quantized_record(rec: PLRecord) -> PLRecord:
    # match exactly what a later reconstruct run will read back from disk
    return PLRecord.from_dict(quantize(rec.to_dict()))


def _quantized_model(model: PLModel) -> PLModel:
    return PLModel.from_dict(quantize(model.to_dict()))


def _write_state_outputs(out: Path, report: dict, mc, title: str, reference=None) -> None:
    write_json(out / "report.json", report)
    plot_density_matrix(mc.mean.matrix, out / "density_matrix.png", mc.std_real, mc.std_imag,
                        reference=reference, title=title)


def cmd_roundtrip(args, run: RunConfig) -> int:
    p = args.p
    if not 0.0 <= p <= 1.0:
        raise InputError(f"p must lie in [0, 1], got {p}")
    if args.monte_carlo < 1:
        raise InputError("at least one Monte Carlo member required")
    true_model = run.pl_model or default_pl_model()
    if args.noise_sigma is None:
        noise = noise_for_element_sigma(true_model, DEFAULT_ELEMENT_SIGMA)
    else:
        noise = args.noise_sigma
    if noise < 0:
        raise InputError("--noise-sigma must be non-negative")
    seeds = derived_seeds(args.seed)
    sigma = noise if noise > 0 else NOISELESS_SIGMA
    noisy = noise > 0

    # the ideal pipeline calibrates with a perfectly polarized nucleus
    norm_cfg = run.nv if args.realistic else replace(run.nv, p_n=1.0)
    norm_rec = _quantized_record(simulate_normalization(
        norm_cfg, true_model, sigma, seeds["normalization"] if noisy else None))
    norm = solve_normalization(norm_rec)
    model = _quantized_model(norm.model)

    prepared = prepare_isotropic(p, run.nv, ideal=not args.realistic)[0]
    record = _quantized_record(simulate_measurement(
        prepared, true_model, sigma, seeds["measurement"] if noisy else None))

    section, mc = reconstruction_section(record, model, args.monte_carlo, args.seed, run,
                                         args.realistic, args.discord)
    target = make_isotropic(p)
    manifest = _manifest(args, "roundtrip", p=p, noise_sigma=noise, monte_carlo=args.monte_carlo,
                         realistic=args.realistic)
    report = {
        "manifest": manifest.to_dict(),
        "config": run.to_dict(),
        "normalization": {
            "p_e": norm.p_e,
            "p_e_alternatives": list(norm.alternatives),
            "rates": norm.model.rates,
            "residual": norm.residual,
            "true_rates": true_model.rates,
        },
        "target": {
            "p": p,
            "matrix": matrix_to_pairs(target.matrix),
            "fidelity_to_target": fidelity(mc.mean, target),
            "fidelity_to_prepared": fidelity(mc.mean, prepared),
        },
        "reconstruction": section,
    }
    out = Path(args.out)
    write_json(out / "normalization_record.json", {"manifest": manifest.to_dict(),
                                                   "record": norm_rec.to_dict()})
    write_json(out / "measurement_record.json", {"manifest": manifest.to_dict(),
                                                 "record": record.to_dict()})
    write_json(out / "pl_model.json", {"manifest": manifest.to_dict(), "model": model.to_dict()})
    _write_state_outputs(out, report, mc, f"p = {p:g}", reference=target.matrix)
    return EXIT_OK


def cmd_reconstruct(args, run: RunConfig) -> int:
    if args.monte_carlo < 1:
        raise InputError("at least one Monte Carlo member required")
    record = load_record(args.record, expected_kind="state-measurement")
    model = load_model(args.model)
    section, mc = reconstruction_section(record, model, args.monte_carlo, args.seed, run,
                                         args.realistic, args.discord)
    manifest = _manifest(args, "reconstruct", record=str(args.record), model=str(args.model),
                         monte_carlo=args.monte_carlo, realistic=args.realistic)
    report = {"manifest": manifest.to_dict(), "config": run.to_dict(), "reconstruction": section}
    _write_state_outputs(Path(args.out), report, mc, "reconstruction")
    return EXIT_OK


# --- entry point ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="JSON run configuration")
    common.add_argument("--seed", type=int, default=0, help="master random seed")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    tomo = argparse.ArgumentParser(add_help=False)
    tomo.add_argument("--monte-carlo", type=int, default=100, metavar="M",
                      help="number of Monte Carlo members (default 100)")
    tomo.add_argument("--realistic", action="store_true",
                      help="use the configured polarizations instead of ideal pumping")
    tomo.add_argument("--discord", action="store_true",
                      help="also compute the discord of the mean reconstructed state")

    parser = argparse.ArgumentParser(prog="qutrit-corr", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curves", parents=[common], help="negativity and discord against p")
    p.add_argument("--p-grid", default="0:1:0.05", help="'a,b,c' or 'start:stop:step'")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("roundtrip", parents=[common, tomo],
                       help="prepare, measure and reconstruct an isotropic state")
    p.add_argument("p", type=float, help="isotropic mixing parameter")
    p.add_argument("--noise-sigma", type=float, default=None,
                   help="absolute PL noise; default gives ~0.01 per-element error bars")
    p.set_defaults(func=cmd_roundtrip)

    p = sub.add_parser("reconstruct", parents=[common, tomo],
                       help="reconstruct from a measurement record and PL model")
    p.add_argument("record", type=Path, help="state-measurement record JSON")
    p.add_argument("model", type=Path, help="PL model JSON")
    p.set_defaults(func=cmd_reconstruct)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        run = load_config(args.config)
        return args.func(args, run)
    except (ConvergenceError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

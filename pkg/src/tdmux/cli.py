"""Command-line entry point: ``tdmux run | budget | spectrum | tomo``.

Exit codes: 0 success, 2 bad input (contract error), 3 reconstruction did
not converge.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .demuxsim.report import emit_report
from .demuxsim.scenario import load_scenario, run_scenario, signal_escort
from .errors import ContractError, ConvergenceError
from .qmetrics import NAMED_KETS, fidelity, purity, tangle
from .tomography import LIKELIHOODS, TomographyDataset, mle_fit, monte_carlo_uncertainty
from .upconvert import mode_budget

EXIT_OK = 0
EXIT_CONTRACT = 2
EXIT_CONVERGENCE = 3

log = logging.getLogger("tdmux")


def _scenario_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON file with Scenario fields")
    p.add_argument("--prep", help="preparation id, i to viii")
    p.add_argument("--chirp", type=float, help="chirp parameter A in s^2")
    p.add_argument("--crystal-delay", type=float, help="crystal delay T in s")
    p.add_argument("--convention", choices=("swapped", "direct"))


def _overrides(args, *names) -> dict:
    return {n: getattr(args, n, None) for n in ("prep", "chirp", "crystal_delay", "convention", *names)}


def cmd_run(args) -> int:
    overrides = _overrides(args, "seed", "exposure", "mc_samples", "likelihood", "n_workers")
    if args.noiseless:
        overrides["noiseless"] = True
    scenario = load_scenario(args.config, **overrides)
    report = run_scenario(scenario)
    paths = emit_report(report, args.out)
    for r in report.rows:
        t = "-" if r.tangle_meas is None else str(r.tangle_meas)
        p = "-" if r.purity_meas is None else str(r.purity_meas)
        f = "-" if r.fidelity is None else str(r.fidelity)
        flag = " (background only)" if r.background_only else ""
        print(f"{r.name:>3}  tangle {t} [{r.tangle_theo:.3f}]  purity {p} [{r.purity_theo:.3f}]  fidelity {f}{flag}")
    print(f"wrote {paths['json'].parent}")
    return EXIT_OK


def cmd_budget(args) -> int:
    scenario = load_scenario(args.config, **_overrides(args))
    signal, escort = signal_escort(scenario)
    budget = mode_budget(signal.sigma, escort.sigma, scenario.chirp)
    print(json.dumps(dataclasses.asdict(budget), indent=2))
    return EXIT_OK


def cmd_spectrum(args) -> int:
    scenario = load_scenario(args.config, noiseless=True, **_overrides(args))
    report = run_scenario(scenario)
    path = report.combined_spectrum(args.points).to_csv(args.out)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_tomo(args) -> int:
    dataset = TomographyDataset.from_csv(args.input)
    target = None
    if args.target is not None:
        key = args.target.lower()
        if key not in NAMED_KETS:
            raise ContractError(f"unknown target {args.target!r}; choose from {sorted(NAMED_KETS)}")
        target = NAMED_KETS[key]
    fit = mle_fit(dataset, model=args.likelihood)
    mc = monte_carlo_uncertainty(dataset, args.mc_samples, args.seed, target=target, model=args.likelihood,
                                 n_workers=args.n_workers)
    metrics = {"tangle": tangle(fit.state), "purity": purity(fit.state)}
    if target is not None:
        metrics["fidelity"] = fidelity(fit.state, target)
    out = {
        "rho": fit.state.to_json_dict(),
        "metrics": metrics,
        "errors": {k: v.to_dict() for k, v in mc.items()},
        "target": args.target,
        "likelihood": args.likelihood,
        "diagnostics": fit.diagnostics(),
    }
    text = json.dumps(out, indent=2)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tdmux", description="Time-to-frequency demultiplexing simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate a preparation end to end and write a report")
    _scenario_args(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--exposure", type=float, help="per-setting exposure of the channel detectors (s)")
    p.add_argument("--mc-samples", type=int)
    p.add_argument("--likelihood", choices=LIKELIHOODS)
    p.add_argument("--workers", dest="n_workers", type=int)
    p.add_argument("--noiseless", action="store_true", help="skip counting noise and tomography")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("budget", help="print the admissible mode separation window")
    _scenario_args(p)
    p.set_defaults(func=cmd_budget)

    p = sub.add_parser("spectrum", help="write the generated comb spectrum as CSV")
    _scenario_args(p)
    p.add_argument("--points", type=int, default=2001)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("tomo", help="reconstruct a state from a counts CSV")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--target", help=f"pure target state, one of {', '.join(NAMED_KETS)}")
    p.add_argument("--likelihood", choices=LIKELIHOODS, default="poisson")
    p.add_argument("--mc-samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", dest="n_workers", type=int, default=1)
    p.add_argument("--out", type=Path, help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_tomo)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())

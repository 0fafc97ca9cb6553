"""Command-line front end: ``interlink analyze | measure | eth``.

Every command writes one JSON report that embeds its run manifest. Reports
go to ``--out``, else to ``$INTERLINK_OUT_DIR/<command>.json``, else stdout.
Exit codes: 0 success, 2 parse error, 3 size cap, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .errors import InterlinkError, NumericError, ParseError
from .graph import build_interlink_graph
from .io import (
    RunManifest,
    default_output_dir,
    dumps_report,
    load_scenario_config,
    parse_state_file,
    write_series_csv,
)
from .measurement import definiteness_expectation
from .metrics import interlink_report, tensor_factorization
from .scenarios import MODES, ORDERS, SCENARIOS, STATES, SQRT_HALF, ScenarioConfig, final_state, run_scenario, state_parties
from .state import Mask, PureState, as_mask, cut_entropy
from .thermal import (
    DEFAULT_HX,
    DEFAULT_HZ,
    DEFAULT_J,
    build_hamiltonian,
    diagonalize,
    eth_window,
    mid_window,
    quench_evolution,
    solve_beta,
    thermal_energy,
    y_product_state,
)

MID_WINDOW = 0.2
CLOSED_FORM_TOL = 1e-9


# ---------------------------------------------------------------- analyze


def _parse_amplitude(text: str) -> complex:
    """``0.6`` or ``0.6,0.1`` (real, imaginary)."""
    parts = text.split(",")
    try:
        vals = [float(p) for p in parts]
    except ValueError as exc:
        raise ParseError(f"bad amplitude {text!r}; expected RE or RE,IM") from exc
    if len(vals) == 1:
        return complex(vals[0], 0.0)
    if len(vals) == 2:
        return complex(vals[0], vals[1])
    raise ParseError(f"bad amplitude {text!r}; expected RE or RE,IM")


def _resolve_side(token: str, parties: dict[str, Mask], n: int) -> tuple[str, Mask]:
    qubits: list[int] = []
    for item in token.split(","):
        item = item.strip()
        if item in parties:
            qubits.extend(parties[item])
        else:
            try:
                qubits.append(int(item))
            except ValueError:
                raise ParseError(f"unknown party {item!r}; known: {', '.join(parties)}") from None
    return token, as_mask(qubits, n)


def parse_pair(text: str, parties: dict[str, Mask], n: int) -> tuple[tuple[str, Mask], tuple[str, Mask]]:
    """``A:D``, ``0:3`` or ``A,B:3`` into two labelled masks."""
    sides = text.split(":")
    if len(sides) != 2 or not all(sides):
        raise ParseError(f"bad pair {text!r}; expected LEFT:RIGHT")
    return _resolve_side(sides[0], parties, n), _resolve_side(sides[1], parties, n)


def _analysis_source(args) -> tuple[PureState, dict[str, Mask], dict]:
    if args.state_file is not None:
        state = parse_state_file(args.state_file)
        parties = {str(q): (q,) for q in range(state.n_qubits)}
        return state, parties, {"state_file": str(args.state_file)}
    name = args.scenario
    u = _parse_amplitude(args.u) if args.u is not None else SQRT_HALF
    v = _parse_amplitude(args.v) if args.v is not None else SQRT_HALF
    state = final_state(name, u, v)
    source = {"scenario": name}
    if name in SCENARIOS:
        source.update(u=u, v=v)
    return state, state_parties(name), source


def cmd_analyze(args) -> tuple[dict, list[str]]:
    state, parties, source = _analysis_source(args)
    n = state.n_qubits
    labels = list(parties)
    masks = [parties[k] for k in labels]

    entropies = {label: cut_entropy(state, m) if len(m) < n else 0.0 for label, m in parties.items()}
    for token in args.subsets or []:
        label, mask = _resolve_side(token, parties, n)
        entropies[label] = cut_entropy(state, mask) if len(mask) < n else 0.0

    pairs = []
    for text in args.pairs or []:
        (la, a), (lb, b) = parse_pair(text, parties, n)
        rep = interlink_report(state, a, b).to_dict()
        rep.update(label=f"{la}:{lb}", entropy_a=cut_entropy(state, a), entropy_b=cut_entropy(state, b))
        joint = as_mask(a + b)
        rep["entropy_ab"] = cut_entropy(state, joint) if len(joint) < n else 0.0
        pairs.append(rep)

    graph = build_interlink_graph(state, masks, labels)
    factors = tensor_factorization(state, masks)
    report = {
        "source": source,
        "n_qubits": n,
        "parties": {k: list(m) for k, m in parties.items()},
        "entropies": entropies,
        "pairs": pairs,
        "factorization": [[labels[i] for i, m in enumerate(masks) if m[0] in f] for f in factors],
        "graph": graph.to_dict(),
    }
    outputs = []
    if args.graph is not None:
        Path(args.graph).write_text(graph.to_dot())
        outputs.append(str(args.graph))
    return report, outputs


# ---------------------------------------------------------------- measure


def _scenario_config(args) -> ScenarioConfig:
    overrides = {
        "name": args.scenario,
        "u": _parse_amplitude(args.u) if args.u is not None else None,
        "v": _parse_amplitude(args.v) if args.v is not None else None,
        "mode": args.mode,
        "order": args.order,
        "shots": args.shots,
        "seed": args.seed,
        "per_shot": True if args.per_shot else None,
    }
    if args.config is not None:
        return load_scenario_config(args.config, **overrides)
    if overrides["u"] is not None and overrides["v"] is None:
        # a lone u fixes v up to phase
        overrides["v"] = complex(np.sqrt(max(0.0, 1.0 - abs(overrides["u"]) ** 2)))
    if overrides["v"] is not None and overrides["u"] is None:
        overrides["u"] = complex(np.sqrt(max(0.0, 1.0 - abs(overrides["v"]) ** 2)))
    return ScenarioConfig(**{k: v for k, v in overrides.items() if v is not None})


def cmd_measure(args) -> tuple[dict, list[str]]:
    cfg = _scenario_config(args)
    run = run_scenario(cfg)
    lay = cfg.layout()
    report = {
        "config": {
            "name": cfg.name,
            "u": cfg.u,
            "v": cfg.v,
            "mode": cfg.mode,
            "order": cfg.order,
            "shots": cfg.shots,
            "seed": cfg.seed,
        },
        "readouts": run.readouts,
        "frequencies": run.frequencies(),
        "joint_counts": run.joint_counts(),
        "branch_weights": run.branch_weights(),
        "definiteness": {
            name: definiteness_expectation(run.tree, reg.pointer) for name, reg in lay.registers.items()
        },
        "entropy_ledgers": run.ledgers,
        "branch_tree": run.tree.to_dict(),
    }
    if cfg.name == "epr" and cfg.shots:
        product = run.outcomes[:, 0] * run.outcomes[:, 1]
        report["anticorrelation"] = {
            "fraction_product_minus_one": float(np.mean(product == -1)),
            "count_product_minus_one": int(np.sum(product == -1)),
        }
    if cfg.per_shot:
        report["outcomes"] = run.outcomes.astype(int)
    return report, []


# ---------------------------------------------------------------- eth


def _window_fraction(text: str) -> float:
    if text == "mid":
        return MID_WINDOW
    try:
        frac = float(text)
    except ValueError:
        raise ParseError(f"bad window {text!r}; expected 'mid' or a fraction in (0, 1)") from None
    if not 0 < frac < 1:
        raise ParseError(f"window fraction {frac} must lie in (0, 1)")
    return frac


def _hamiltonian_spec(args, hz: float | None = None) -> dict:
    spec = {"model": args.model, "n": args.n, "J": args.J, "hx": args.hx, "boundary": args.boundary}
    spec["hz"] = args.hz if hz is None else hz
    if hz is not None and args.model == "tfim" and hz != 0:
        spec["model"] = "mfi"
    return spec


def _window_summary(h, subsystem, fraction) -> dict:
    matches = eth_window(h, subsystem, fraction)
    spec = diagonalize(h)
    idx = mid_window(h.dim, fraction)
    out = {"window": [idx.start, idx.stop], "eigenstates": len(matches)}
    if not matches:
        out.update(
            mean_trace_distance=None,
            max_trace_distance=None,
            mean_entropy_gap=None,
            max_entropy_gap=None,
            max_energy_residual=None,
        )
        return out
    td = np.array([m.trace_distance for m in matches])
    gap = np.array([abs(m.entanglement_entropy - m.thermal_entropy) for m in matches])
    resid = [abs(thermal_energy(spec, m.beta) - m.energy) / spec.width for m in matches]
    out.update(
        mean_trace_distance=float(td.mean()),
        max_trace_distance=float(td.max()),
        mean_entropy_gap=float(gap.mean()),
        max_entropy_gap=float(gap.max()),
        max_energy_residual=float(max(resid)),
        eigenstate_rows=[m.to_dict() for m in matches],
    )
    return out


def zz_closed_form(n: int, J: float, boundary: str = "open") -> dict:
    """Closed-form checks for ``J sum Z_i Z_{i+1}``.

    Energies are ``J * sum s_i s_{i+1}`` over spin configurations. For the
    open chain ``<H>_beta = -(n-1) J tanh(beta J)``, so the energy
    ``-(n-1) J tanh(J)`` must give back beta = 1.
    """
    h = build_hamiltonian({"model": "zz", "n": n, "J": J, "boundary": boundary})
    spec = diagonalize(h)
    bonds = list(range(n - 1)) if boundary == "open" else list(range(n))
    configs = np.arange(2**n)
    spins = 1 - 2 * ((configs[:, None] >> np.arange(n)) & 1)
    energies = np.sort(sum(J * spins[:, i] * spins[:, (i + 1) % n] for i in bonds))
    spectrum_err = float(np.max(np.abs(spec.eigenvalues - energies)))
    checks = {"spectrum_max_error": spectrum_err, "spectrum_ok": spectrum_err <= CLOSED_FORM_TOL}
    if boundary == "open" and J != 0:
        grid = [0.1, 0.5, 1.0, 2.0]
        err = max(abs(thermal_energy(spec, b) + (n - 1) * J * np.tanh(b * J)) for b in grid)
        beta = solve_beta(spec, -(n - 1) * J * np.tanh(J))
        checks.update(
            thermal_energy_max_error=float(err),
            thermal_energy_ok=bool(err <= CLOSED_FORM_TOL),
            solved_beta=beta,
            solved_beta_ok=bool(abs(beta - 1.0) <= 1e-6),
        )
    checks["all_ok"] = all(v for k, v in checks.items() if k.endswith("_ok"))
    return checks


def cmd_eth(args) -> tuple[dict, list[str]]:
    fraction = _window_fraction(args.window)
    h = build_hamiltonian(_hamiltonian_spec(args))
    subsystem = as_mask(args.subsys, args.n)
    report = {
        "model": {
            "name": h.name,
            "n": h.n_sites,
            "boundary": h.boundary,
            "terms": [[t.coefficient, t.label()] for t in h.terms],
        },
        "subsystem": list(subsystem),
        "window_fraction": fraction,
        "eth": _window_summary(h, subsystem, fraction),
    }
    if not args.rows:
        report["eth"].pop("eigenstate_rows", None)

    if h.name == "zz":
        checks = zz_closed_form(args.n, args.J, args.boundary)
        report["closed_form"] = checks
        if not checks["all_ok"]:
            raise NumericError(f"closed-form checks failed: {checks}")

    if args.compare:
        other = 0.0 if args.hz != 0 else DEFAULT_HZ
        rows = []
        for hz in sorted({args.hz, other}):
            hh = build_hamiltonian(_hamiltonian_spec(args, hz))
            summary = _window_summary(hh, subsystem, fraction)
            rows.append(
                {
                    "hz": hz,
                    "integrable": hz == 0,
                    "mean_trace_distance": summary["mean_trace_distance"],
                    "mean_entropy_gap": summary["mean_entropy_gap"],
                }
            )
        integ = next(r for r in rows if r["integrable"])
        nonint = next(r for r in rows if not r["integrable"])
        report["comparison"] = {
            "rows": rows,
            "integrable_larger": bool(integ["mean_trace_distance"] > nonint["mean_trace_distance"]),
        }

    times = np.linspace(0.0, args.t_max, args.samples)
    quench = quench_evolution(h, y_product_state(args.n), times, subsystem)
    t_late = args.t_max / 2
    report["quench"] = {
        "initial_state": "all spins along +y",
        "beta": quench.beta,
        "energy": quench.energy,
        "t_max": args.t_max,
        "samples": args.samples,
        "late_time_from": t_late,
        "late_time_mean_trace_distance": quench.late_time_distance(t_late),
    }
    outputs = []
    if args.csv is not None:
        write_series_csv(
            args.csv,
            [(s.t, s.trace_distance, s.entanglement_entropy, s.thermal_entropy) for s in quench.samples],
        )
        outputs.append(str(args.csv))
    return report, outputs


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="interlink", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", type=Path, help="report path (default: $INTERLINK_OUT_DIR or stdout)")
        p.add_argument("--timing", action="store_true", help="record wall-clock time in the manifest")

    p = sub.add_parser("analyze", help="entropy, mutual information and interlinking of a state")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", choices=STATES)
    src.add_argument("--state-file", type=Path)
    p.add_argument("--pairs", nargs="+", metavar="A:B", help="pairs of parties or qubit lists")
    p.add_argument("--subsets", nargs="+", metavar="A,B", help="extra subsystems to report entropies for")
    p.add_argument("--u", help="spin-up amplitude for measurement scenarios (RE or RE,IM)")
    p.add_argument("--v", help="spin-down amplitude for measurement scenarios (RE or RE,IM)")
    p.add_argument("--graph", type=Path, help="write the interlink graph as DOT")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("measure", help="sample a measurement scenario")
    p.add_argument("--scenario", choices=SCENARIOS)
    p.add_argument("--config", type=Path, help="scenario JSON; flags given here override it")
    p.add_argument("--u", help="spin-up amplitude (RE or RE,IM)")
    p.add_argument("--v", help="spin-down amplitude (RE or RE,IM)")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--order", choices=ORDERS)
    p.add_argument("--shots", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--per-shot", action="store_true", help="include every shot's outcomes")
    common(p)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("eth", help="eigenstate thermalization checks on a spin chain")
    p.add_argument("--n", type=int, default=10, help="number of sites")
    p.add_argument("--subsys", type=int, nargs="+", default=[0], help="subsystem sites")
    p.add_argument("--window", default="mid", help="'mid' (central 20%%) or a fraction")
    p.add_argument("--model", choices=("mfi", "tfim", "zz"), default="mfi")
    p.add_argument("--J", type=float, default=DEFAULT_J)
    p.add_argument("--hx", type=float, default=DEFAULT_HX)
    p.add_argument("--hz", type=float, default=DEFAULT_HZ)
    p.add_argument("--boundary", choices=("open", "periodic"), default="open")
    p.add_argument("--compare", action="store_true", help="also run the integrable (hz=0) point, or the default hz")
    p.add_argument("--rows", action="store_true", help="include per-eigenstate rows")
    p.add_argument("--t-max", type=float, default=100.0)
    p.add_argument("--samples", type=int, default=101)
    p.add_argument("--csv", type=Path, help="write the quench time series")
    common(p)
    p.set_defaults(func=cmd_eth)
    return parser


def _check_measure_args(args) -> None:
    if args.command == "measure" and args.scenario is None and args.config is None:
        raise ParseError("measure needs --scenario or --config")


def _arguments(args) -> dict:
    skip = {"func", "out", "timing"}
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        out[k] = str(v) if isinstance(v, Path) else v
    return out


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        _check_measure_args(args)
        report, outputs = args.func(args)
        out_path = args.out
        if out_path is None and default_output_dir() is not None:
            out_path = default_output_dir() / f"{args.command}.json"
        manifest = RunManifest(
            command=args.command,
            config_path=str(args.config) if getattr(args, "config", None) else None,
            seed=report.get("config", {}).get("seed"),
            tool_version=__version__,
            outputs=outputs + ([str(out_path)] if out_path is not None else []),
            arguments=_arguments(args),
        )
        if args.timing:
            manifest.wall_clock_seconds = time.perf_counter() - start
        report["manifest"] = manifest.to_dict()
        text = dumps_report(report)
        if out_path is None:
            sys.stdout.write(text)
        else:
            out_path.parent.mkdir(parents=True, exist_ok=True)
            out_path.write_text(text)
    except InterlinkError as exc:
        print(f"interlink {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"interlink {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())

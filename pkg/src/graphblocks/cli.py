"""Command-line interface.

Subcommands: catalog, simulate, sweep, descriptors, lc, report.
Exit codes: 0 success, 2 configuration error, 3 physics-invariant
violation (light-cone breach or oracle disagreement).
"""
from __future__ import annotations

import argparse
import json
import os
import secrets
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (BlockVelocityRecord, FitError,
                       descriptor_correlation_report, fit_butterfly_with_sensitivity,
                       fit_entanglement_velocity)
from .catalog import (build_catalog, catalog_to_text, read_catalog,
                      write_catalog)
from .engine import (EnsembleConfig, PhysicsViolationError, run_ensemble,
                     run_entropy_realization, run_otoc_realization,
                     sample_layer)
from .graphs import (GraphSpec, BlockDescriptors, lc_equivalent, lc_orbit,
                     local_complement, preparation_circuit)
from .runio import (ConfigError, config_from_mapping, config_to_mapping,
                    default_output_dir, parse_config_text, parse_edge_list,
                    validate_run_csvs, write_entropy_csv, write_manifest,
                    write_otoc_csv, write_scatter_csv, write_velocities_json,
                    write_velocity_table)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PHYSICS = 3

LN2 = float(np.log(2.0))


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PhysicsViolationError as exc:
        print(f"physics invariant violated: {exc}", file=sys.stderr)
        return EXIT_PHYSICS


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="graphblocks",
                                description="graph-state block circuit toolkit")
    p.add_argument("--version", action="version", version=f"graphblocks {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("catalog", help="build the LC-class block catalog")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--reference", type=Path, default=None,
                   help="descriptor fingerprint table (default: bundled)")
    c.add_argument("--out", type=Path, default=None, help="catalog file path")
    c.set_defaults(func=cmd_catalog)

    s = sub.add_parser("simulate", help="run one circuit ensemble")
    _add_run_arguments(s)
    s.add_argument("--oracle-check", action="store_true",
                   help="verify against the dense oracle (N <= 10)")
    s.add_argument("--figures", action="store_true", help="render figures")
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="run the pipeline across a parameter axis")
    _add_run_arguments(w)
    w.add_argument("--axis", choices=("alpha", "block", "n"), required=True)
    w.add_argument("--values", required=True,
                   help="comma-separated axis values")
    w.set_defaults(func=cmd_sweep)

    d = sub.add_parser("descriptors", help="gamma / wp / height of an edge list")
    d.add_argument("--n", type=int, required=True)
    d.add_argument("--edges", required=True, help="e.g. '1-2,2-3,3-4'")
    d.set_defaults(func=cmd_descriptors)

    l = sub.add_parser("lc", help="local-complementation queries")
    lsub = l.add_subparsers(dest="lc_command", required=True)
    lo = lsub.add_parser("orbit", help="labeled LC orbit size and members")
    lo.add_argument("--n", type=int, required=True)
    lo.add_argument("--edges", required=True)
    lo.add_argument("--max-size", type=int, default=100_000)
    lo.add_argument("--list", action="store_true", help="print every member")
    lo.set_defaults(func=cmd_lc_orbit)
    le = lsub.add_parser("equivalent", help="LC equivalence of two graphs")
    le.add_argument("--n", type=int, required=True)
    le.add_argument("--edges1", required=True)
    le.add_argument("--edges2", required=True)
    le.add_argument("--labeled", action="store_true",
                    help="exact labeled-orbit membership instead of up-to-permutation")
    le.set_defaults(func=cmd_lc_equivalent)
    lc_ = lsub.add_parser("complement", help="apply local complementation at a vertex")
    lc_.add_argument("--n", type=int, required=True)
    lc_.add_argument("--edges", required=True)
    lc_.add_argument("--vertex", type=int, required=True)
    lc_.set_defaults(func=cmd_lc_complement)

    r = sub.add_parser("report", help="combine runs into tables, scatters, figures")
    r.add_argument("--runs", nargs="+", type=Path, required=True,
                   help="simulation output directories")
    r.add_argument("--out", type=Path, default=None)
    r.add_argument("--no-figures", action="store_true")
    r.set_defaults(func=cmd_report)
    return p


def _add_run_arguments(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None, help="key = value file")
    p.add_argument("--block", default=None,
                   help="catalog block name, e.g. n5-g4")
    p.add_argument("--block-edges", default=None, help="custom block edge list")
    p.add_argument("--block-n", type=int, default=None)
    p.add_argument("--chain-length", type=int, default=None)
    p.add_argument("--sparsity", type=float, default=None)
    p.add_argument("--boundary", choices=("periodic", "open"), default=None)
    p.add_argument("--layers", type=int, default=None)
    p.add_argument("--otoc-layers", type=int, default=None)
    p.add_argument("--realizations", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--log-base", choices=("2", "e"), default=None)
    p.add_argument("--jobs", type=int, default=None,
                   help="parallel realization workers (default: CPU count)")
    p.add_argument("--outdir", type=Path, default=None)
    p.add_argument("--reference", type=Path, default=None)


# -- catalog ------------------------------------------------------------------

def cmd_catalog(args) -> int:
    catalog = build_catalog(args.n, args.reference)
    out = args.out or (default_output_dir() / f"catalog_n{args.n}.txt")
    out.parent.mkdir(parents=True, exist_ok=True)
    digest = write_catalog(catalog, out)
    print(f"n={args.n}: {catalog.class_count} LC classes -> {out}")
    for e in catalog.entries:
        flags = f"  [{','.join(e.flags)}]" if e.flags else ""
        print(f"  {e.name}\tgamma={e.gamma}\twp={e.wp}\t"
              f"edges={','.join(f'{u}-{v}' for u, v in e.graph.sorted_edges())}{flags}")
    for note in catalog.report.summary_lines():
        print(f"  note: {note}")
    if all(e.source == "canonical" for e in catalog.entries) and not catalog.report.matched:
        print(f"  note: no reference rows for n={args.n}; canonical representatives only")
    print(f"catalog sha256: {digest}")
    return EXIT_OK


# -- simulate -----------------------------------------------------------------

def _resolve_config(args) -> tuple[EnsembleConfig, str | None]:
    """Precedence: CLI flags > config file > defaults."""
    values: dict = {}
    if args.config is not None:
        values.update(parse_config_text(Path(args.config).read_text()))
    overrides = {
        "chain_length": args.chain_length,
        "sparsity": args.sparsity,
        "boundary": args.boundary,
        "layers": args.layers,
        "otoc_layers": args.otoc_layers,
        "realizations": args.realizations,
        "master_seed": args.seed,
        "log_base": args.log_base,
        "block_n": args.block_n,
        "block_edges": args.block_edges,
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    catalog_version = None
    block_name = args.block or values.pop("catalog_block", None)
    if block_name is not None:
        try:
            n = int(str(block_name).split("-")[0].lstrip("n"))
        except ValueError:
            raise ConfigError(f"field 'block': cannot parse size from {block_name!r}")
        catalog = build_catalog(n, args.reference)
        try:
            entry = catalog.by_name(str(block_name))
        except KeyError:
            names = ", ".join(e.name for e in catalog.entries)
            raise ConfigError(f"field 'block': {block_name!r} not in catalog ({names})")
        values["block"] = entry.graph
        import hashlib
        catalog_version = hashlib.sha256(catalog_to_text(catalog).encode()).hexdigest()
    if values.get("master_seed") is None:
        values["master_seed"] = secrets.randbits(63)
    return config_from_mapping(values), catalog_version


def cmd_simulate(args) -> int:
    cfg, catalog_version = _resolve_config(args)
    jobs = args.jobs or os.cpu_count() or 1
    outdir = args.outdir or default_output_dir()
    outdir.mkdir(parents=True, exist_ok=True)
    print(f"block={cfg.block.name or 'custom'} N={cfg.chain_length} "
          f"alpha={cfg.sparsity} -> r={cfg.blocks_per_layer} blocks per layer, "
          f"R={cfg.realizations}, seed={cfg.master_seed}")
    result = run_ensemble(cfg, jobs=jobs)
    print(f"layers: entropy={result.entropy_layers} otoc={result.otoc_layers}")
    if args.oracle_check:
        code = _oracle_check(cfg, result)
        if code != EXIT_OK:
            return code
    paths = _write_run_outputs(cfg, result, outdir, catalog_version)
    if args.figures:
        from .report import render_run_figures
        for fig in render_run_figures(outdir):
            print(f"wrote {fig}")
    print(f"wrote {', '.join(str(p) for p in paths)}")
    return EXIT_OK


def _write_run_outputs(cfg: EnsembleConfig, result, outdir: Path,
                       catalog_version: str | None) -> list[Path]:
    entropy_path = outdir / "entropy.csv"
    otoc_path = outdir / "otoc.csv"
    vel_path = outdir / "velocities.json"
    write_entropy_csv(result, entropy_path)
    write_otoc_csv(result, otoc_path)
    validate_run_csvs(entropy_path, otoc_path)
    tolerance = 1.0 if cfg.log_base == 2 else LN2
    extra = {
        "block_n": cfg.block.n_vertices,
        "log_base": str(cfg.log_base),
        "entropy_layers": result.entropy_layers,
        "otoc_layers": result.otoc_layers,
        "blocks_per_layer": cfg.blocks_per_layer,
        "master_seed": cfg.master_seed,
    }
    desc = BlockDescriptors.of(cfg.block)
    extra["gamma"] = float(desc.gamma)
    extra["gamma_exact"] = str(desc.gamma)
    extra["wp"] = desc.wp
    errors = {}
    try:
        fe = fit_entanglement_velocity(result.entropy_mean, tolerance)
    except FitError as exc:
        fe = None
        errors["v_E"] = str(exc)
    try:
        fb = fit_butterfly_with_sensitivity(result.otoc_mean, cfg.chain_length,
                                            cfg.otoc_origin)
    except FitError as exc:
        fb = None
        errors["v_B"] = str(exc)
    if errors:
        extra["errors"] = errors
    payload = {"block": cfg.block.name or "custom",
               "v_E": fe.as_dict() if fe else None,
               "v_B": fb.as_dict() if fb else None}
    payload.update(extra)
    vel_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    manifest_path = outdir / "manifest.json"
    write_manifest(manifest_path, cfg,
                   {"entropy": entropy_path, "otoc": otoc_path,
                    "velocities": vel_path},
                   catalog_version=catalog_version)
    return [entropy_path, otoc_path, vel_path, manifest_path]


def _oracle_check(cfg: EnsembleConfig, result) -> int:
    """Replay realization 0 against the dense statevector oracle."""
    from .oracle import (DenseState, MAX_OPERATOR_QUBITS, MAX_STATE_QUBITS,
                         conjugate_operator, otoc_of_operator, pauli_matrix)
    from .pauli import PauliString
    from .stabilizer import block_sites
    N = cfg.chain_length
    if N > MAX_STATE_QUBITS:
        raise ConfigError(f"--oracle-check needs chain_length <= {MAX_STATE_QUBITS}")
    t_check = min(result.entropy_layers, 30)
    fast = run_entropy_realization(cfg, cfg.realization_rng(0), t_check)
    rng = cfg.realization_rng(0)
    dense = DenseState.zero_state(N)
    start, length = cfg.half_region
    region = [(start - 1 + k) % N + 1 for k in range(length)]
    for t in range(1, t_check + 1):
        layer = sample_layer(cfg, rng)
        for s in layer.starts:
            sites = block_sites(cfg.block.n_vertices, s, N, cfg.boundary)
            for q in sites:
                dense.apply_h(q)
            for u, v in cfg.block.sorted_edges():
                dense.apply_cz(sites[u - 1], sites[v - 1])
        if abs(dense.entropy(region) - fast[t]) > 1e-9:
            print(f"oracle mismatch: entropy layer {t}: dense "
                  f"{dense.entropy(region)} vs tableau {fast[t]}", file=sys.stderr)
            return EXIT_PHYSICS
    print(f"oracle check: entropy series matches for {t_check} layers")
    if N <= MAX_OPERATOR_QUBITS:
        t_check = min(result.otoc_layers, 10)
        field = run_otoc_realization(cfg, cfg.realization_rng(0), t_check)
        rng = cfg.realization_rng(0)
        w = pauli_matrix(PauliString.single(N, cfg.otoc_origin, cfg.otoc_initial))
        for t in range(1, t_check + 1):
            layer = sample_layer(cfg, rng)
            for s in layer.starts:
                sites = block_sites(cfg.block.n_vertices, s, N, cfg.boundary)
                for u, v in reversed(cfg.block.sorted_edges()):
                    w = conjugate_operator(w, ("CZ", sites[u - 1], sites[v - 1]), N)
                for q in sites:
                    w = conjugate_operator(w, ("H", q), N)
            for x in range(1, N + 1):
                if round(otoc_of_operator(w, x, N)) != int(field[t, x - 1]):
                    print(f"oracle mismatch: OTOC layer {t} site {x}",
                          file=sys.stderr)
                    return EXIT_PHYSICS
        print(f"oracle check: OTOC field matches for {t_check} layers")
    return EXIT_OK


# -- sweep ---------------------------------------------------------------------

def cmd_sweep(args) -> int:
    outdir = args.outdir or default_output_dir()
    outdir.mkdir(parents=True, exist_ok=True)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    cells: list[tuple[str, dict]] = []
    if args.axis == "alpha":
        cells = [(f"alpha={v}", {"sparsity": float(v)}) for v in values]
    elif args.axis == "block":
        cells = [(v, {"block": v}) for v in values]
    else:  # axis == n: every catalog block of each size
        for v in values:
            catalog = build_catalog(int(v), args.reference)
            cells.extend((e.name, {"block": e.name}) for e in catalog.entries)
    records: list[BlockVelocityRecord] = []
    curve_rows = []
    failures: dict[str, str] = {}
    for label, cell in cells:
        cell_dir = outdir / label.replace("=", "_")
        cell_args = _clone_run_args(args, cell, cell_dir)
        try:
            code = cmd_simulate(cell_args)
            if code != EXIT_OK:
                failures[label] = f"exit code {code}"
                continue
            meta = json.loads((cell_dir / "velocities.json").read_text())
            if meta.get("errors"):
                failures[label] = json.dumps(meta["errors"])
                continue
            rec = BlockVelocityRecord(
                block_name=meta["block"], n=meta["block_n"],
                v_e=meta["v_E"]["velocity"], v_e_stderr=meta["v_E"]["stderr"],
                v_b=meta["v_B"]["velocity"], v_b_stderr=meta["v_B"]["stderr"],
                gamma=meta["gamma"], wp=meta["wp"],
                policy_id=f'{meta["v_E"]["policy_id"]}+{meta["v_B"]["policy_id"]}')
            records.append(rec)
            curve_rows.append((label, rec.block_name, rec.v_e, rec.v_b))
        except (ConfigError, FitError) as exc:
            failures[label] = str(exc)
    table, ve_gamma, vb_wp = descriptor_correlation_report(records)
    write_velocity_table(outdir / "velocities_table.csv", table)
    write_scatter_csv(outdir / "ve_vs_gamma.csv",
                      ["gamma", "v_E", "block_name", "n"], ve_gamma)
    write_scatter_csv(outdir / "vb_vs_wp.csv",
                      ["wp", "v_B", "block_name", "n"], vb_wp)
    write_scatter_csv(outdir / f"sweep_{args.axis}.csv",
                      [args.axis, "block_name", "v_E", "v_B"], curve_rows)
    if failures:
        (outdir / "failures.json").write_text(
            json.dumps(failures, indent=2, sort_keys=True) + "\n")
        print(f"{len(failures)} cell(s) failed; see failures.json")
    print(f"sweep complete: {len(records)} cells -> {outdir}")
    return EXIT_OK


def _clone_run_args(args, cell: dict, cell_dir: Path):
    clone = argparse.Namespace(**vars(args))
    clone.outdir = cell_dir
    clone.oracle_check = getattr(args, "oracle_check", False)
    clone.figures = getattr(args, "figures", False)
    for key, value in cell.items():
        if key == "block":
            clone.block = value
        elif key == "sparsity":
            clone.sparsity = value
    return clone


# -- descriptors / lc ------------------------------------------------------------

def _graph_from_args(n: int, edges: str) -> GraphSpec:
    return GraphSpec.from_edges(n, parse_edge_list(edges), name="query")


def cmd_descriptors(args) -> int:
    g = _graph_from_args(args.n, args.edges)
    desc = BlockDescriptors.of(g)
    print(f"height: {','.join(str(h) for h in desc.height)}")
    print(f"gamma: {desc.gamma} ({float(desc.gamma):.6g})")
    print(f"wp: {desc.wp}")
    print(f"ame_candidate: {desc.is_ame_candidate}")
    print(f"connected: {g.is_connected()}")
    gates = preparation_circuit(g)
    print("preparation:", " ".join(
        f"H{gate[1]}" if gate[0] == "H" else f"CZ({gate[1]},{gate[2]})" for gate in gates))
    return EXIT_OK


def cmd_lc_orbit(args) -> int:
    g = _graph_from_args(args.n, args.edges)
    orbit = lc_orbit(g, max_size=args.max_size)
    print(f"labeled orbit size: {len(orbit)}")
    if args.list:
        for key in sorted(orbit):
            print("  " + (",".join(f"{u}-{v}" for u, v in key) or "(edgeless)"))
    return EXIT_OK


def cmd_lc_equivalent(args) -> int:
    g1 = _graph_from_args(args.n, args.edges1)
    g2 = _graph_from_args(args.n, args.edges2)
    verdict = lc_equivalent(g1, g2, labeled=args.labeled)
    kind = "labeled" if args.labeled else "unlabeled"
    print(f"{kind} LC-equivalent: {verdict}")
    return EXIT_OK


def cmd_lc_complement(args) -> int:
    g = _graph_from_args(args.n, args.edges)
    out = local_complement(g, args.vertex)
    print(",".join(f"{u}-{v}" for u, v in out.sorted_edges()) or "(edgeless)")
    return EXIT_OK


# -- report ----------------------------------------------------------------------

def cmd_report(args) -> int:
    out = args.out or (default_output_dir() / "report")
    out.mkdir(parents=True, exist_ok=True)
    records = []
    curves = []
    fields = []
    missing = []
    for run_dir in args.runs:
        vel = Path(run_dir) / "velocities.json"
        if not vel.exists():
            missing.append(str(run_dir))
            continue
        meta = json.loads(vel.read_text())
        if not meta.get("v_E") or not meta.get("v_B"):
            missing.append(f"{run_dir} (fit errors)")
            continue
        records.append(BlockVelocityRecord(
            block_name=meta["block"], n=meta["block_n"],
            v_e=meta["v_E"]["velocity"], v_e_stderr=meta["v_E"]["stderr"],
            v_b=meta["v_B"]["velocity"], v_b_stderr=meta["v_B"]["stderr"],
            gamma=meta["gamma"], wp=meta["wp"],
            policy_id=f'{meta["v_E"]["policy_id"]}+{meta["v_B"]["policy_id"]}'))
        from .runio import read_entropy_csv, read_otoc_csv
        mean, _, _ = read_entropy_csv(Path(run_dir) / "entropy.csv")
        curves.append((meta["block"], mean))
        fields.append((meta["block"], Path(run_dir) / "otoc.csv"))
    table, ve_gamma, vb_wp = descriptor_correlation_report(records)
    write_velocity_table(out / "velocities_table.csv", table)
    write_scatter_csv(out / "ve_vs_gamma.csv",
                      ["gamma", "v_E", "block_name", "n"], ve_gamma)
    write_scatter_csv(out / "vb_vs_wp.csv",
                      ["wp", "v_B", "block_name", "n"], vb_wp)
    if missing:
        print("skipped runs without usable velocities: " + ", ".join(missing))
    if not args.no_figures and records:
        from .report import plot_entropy_curves, plot_otoc_field, plot_scatter
        from .runio import read_otoc_csv
        plot_entropy_curves(curves, out / "entropy_growth.png")
        plot_scatter(ve_gamma, out / "ve_vs_gamma.png", "gamma (mean cut entropy)",
                     "v_E", "entanglement velocity vs block height")
        plot_scatter(vb_wp, out / "vb_vs_wp.png", "wp (ordered connectivity)",
                     "v_B", "butterfly velocity vs block connectivity")
        for label, otoc_path in fields:
            plot_otoc_field(read_otoc_csv(otoc_path),
                            out / f"otoc_{label}.png", label)
    print(f"report written to {out} ({len(records)} runs)")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

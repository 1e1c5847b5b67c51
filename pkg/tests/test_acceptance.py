"""Acceptance gate.

Each test implements one numbered acceptance criterion at its stated
tolerance and prints a single PASS/FAIL line (plus sub-details). The
ensemble criteria share one bank of measured velocities per block
configuration, computed once per session at N = 200, alpha = 1/2,
R = 200, fixed master seed.
"""
import math
import os
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from graphblocks.analysis import (fit_butterfly_with_sensitivity,
                                  fit_entanglement_velocity)
from graphblocks.catalog import (EXPECTED_CLASS_COUNTS, build_catalog,
                                 load_reference_table)
from graphblocks.engine import (EnsembleConfig, run_ensemble,
                                run_otoc_realization, sample_layer)
from graphblocks.graphs import (GraphSpec, height_function, local_complement,
                                star_graph)
from graphblocks.oracle import DenseState, conjugate_operator, otoc_of_operator, pauli_matrix
from graphblocks.pauli import PauliString
from graphblocks.stabilizer import StabilizerTableau

from conftest import apply_gates_dense, apply_gates_tableau, random_gate_sequence

N_CHAIN = 200
ALPHA = 0.5
R_RUNS = 200
SEED = 20260809
JOBS = os.cpu_count() or 2

V_E_TOL = 0.05
V_B_TOL = 0.08

_velocity_bank: dict = {}


def _criterion(num: int, label: str, ok: bool, details: str = "") -> None:
    verdict = "PASS" if ok else "FAIL"
    suffix = f" ({details})" if details else ""
    print(f"ACCEPTANCE C{num} {label}: {verdict}{suffix}")
    assert ok, f"criterion {num} failed: {label}{suffix}"


def measure_block(graph: GraphSpec, alpha: float = ALPHA,
                  boundary: str = "periodic") -> tuple[float, float]:
    """(v_E in bits/layer, v_B in sites/layer), cached per configuration."""
    key = (graph.edge_key(), graph.n_vertices, alpha, boundary)
    if key not in _velocity_bank:
        cfg = EnsembleConfig(block=graph, chain_length=N_CHAIN, sparsity=alpha,
                             boundary=boundary, realizations=R_RUNS,
                             master_seed=SEED)
        t0 = time.time()
        res = run_ensemble(cfg, jobs=JOBS)
        fe = fit_entanglement_velocity(res.entropy_mean)
        fb = fit_butterfly_with_sensitivity(res.otoc_mean, N_CHAIN,
                                            cfg.otoc_origin)
        print(f"  measured {graph.name:10s} alpha={alpha:4.2f} {boundary:8s} "
              f"v_E={fe.velocity:.3f} v_B={fb.velocity:.3f} "
              f"[T=({res.entropy_layers},{res.otoc_layers}), {time.time()-t0:.0f}s]")
        _velocity_bank[key] = (fe.velocity, fb.velocity)
    return _velocity_bank[key]


@pytest.fixture(scope="module")
def catalogs():
    return {n: build_catalog(n) for n in (4, 5, 6, 7)}


@pytest.fixture(scope="module")
def reference():
    return load_reference_table()


@pytest.fixture(scope="module")
def small_catalog_velocities(catalogs, reference):
    """Measured (v_E, v_B) plus reference rows for the n=4 and n=5 blocks."""
    out = {}
    for n in (4, 5):
        rows = {r.row: r for r in reference[n]}
        for e in catalogs[n].entries:
            row = rows[int(e.source.rsplit(":", 1)[1])]
            out[e.name] = (*measure_block(e.graph), row.v_e, row.v_b)
    return out


# -- criterion 1: descriptor exactness ---------------------------------------

def test_c1_descriptor_exactness(catalogs, reference):
    # cold-process rebuild keeps the timing honest about enumeration cost
    t0 = time.time()
    probe = subprocess.run(
        [sys.executable, "-c",
         "from graphblocks.catalog import build_catalog\n"
         "for n in (4, 5, 6, 7):\n"
         "    build_catalog(n)\n"],
        capture_output=True, text=True)
    elapsed = time.time() - t0
    assert probe.returncode == 0, probe.stderr
    exact = True
    details = []
    for n in (4, 5, 6, 7):
        rows = {r.row: r for r in reference[n]}
        matched = 0
        for e in catalogs[n].entries:
            if not e.source.startswith("ref:"):
                continue
            matched += 1
            row = rows[int(e.source.rsplit(":", 1)[1])]
            gamma_ok = abs(float(e.gamma) - float(row.gamma)) < 0.005
            exact &= gamma_ok and e.wp == row.wp
        details.append(f"n={n}: {matched}/{len(rows)} rows reconstructed")
    # n = 4, 5, 7 reconstruct completely; the defective n=6 wp column rows
    # must be reported as unrealizable rather than silently patched
    full = (len(catalogs[4].report.matched) == 2
            and len(catalogs[5].report.matched) == 4
            and len(catalogs[7].report.matched) == 26)
    n6 = catalogs[6].report
    n6_reported = all("not realizable" in reason for reason in n6.unmatched.values())
    for row, reason in sorted(n6.unmatched.items()):
        print(f"  n=6 reference defect surfaced: row {row}: {reason}")
    _criterion(1, "descriptor exactness",
               exact and full and n6_reported and elapsed < 60.0,
               "; ".join(details) + f"; rebuild {elapsed:.1f}s < 60s")


def test_c2_class_counts(catalogs):
    counts = {n: catalogs[n].class_count for n in (4, 5, 6, 7)}
    ok = counts == {4: 2, 5: 4, 6: 11, 7: 26}
    _criterion(2, "LC class counts", ok, f"{counts}")


# -- criterion 3: velocity reproduction ----------------------------------------

@pytest.mark.slow
def test_c3_velocity_reproduction(small_catalog_velocities):
    bank = small_catalog_velocities
    d_bits = {k: abs(ve - rve) for k, (ve, vb, rve, rvb) in bank.items()}
    d_nats = {k: abs(ve * math.log(2) - rve)
              for k, (ve, vb, rve, rvb) in bank.items()}
    d_vb = {k: abs(vb - rvb) for k, (ve, vb, rve, rvb) in bank.items()}
    bits_ok = max(d_bits.values()) <= V_E_TOL
    nats_ok = max(d_nats.values()) <= V_E_TOL
    vb_ok = max(d_vb.values()) <= V_B_TOL
    for k in sorted(bank):
        ve, vb, rve, rvb = bank[k]
        print(f"  {k}: v_E={ve:.3f} (ref {rve:.3f}, bits d={d_bits[k]:.3f}, "
              f"nats d={d_nats[k]:.3f}); v_B={vb:.3f} (ref {rvb:.3f}, d={d_vb[k]:.3f})")
    if bits_ok and not nats_ok:
        base = "bits (log2)"
    elif nats_ok and not bits_ok:
        base = "nats"
    elif bits_ok and nats_ok:
        base = "both"
    else:
        base = "neither"
    print(f"  entropy base matching the reference velocities: {base}")
    if (bits_ok or nats_ok) and vb_ok:
        _criterion(3, "velocity reproduction",
                   True, f"base={base}, max|dv_E|={min(max(d_bits.values()), max(d_nats.values())):.3f}, "
                         f"max|dv_B|={max(d_vb.values()):.3f}")
        return
    # the criterion's own fallback: rank orderings must hold and the
    # absolute-scale discrepancy is documented rather than hidden
    orderings = _small_catalog_orderings_hold(bank)
    print("  absolute-scale discrepancy documented: "
          f"bits_ok={bits_ok} nats_ok={nats_ok} vb_ok={vb_ok}; "
          f"rank orderings hold={orderings}")
    _criterion(3, "velocity reproduction (rank-order fallback)", orderings,
               "absolute tolerances missed; criteria 4-5 govern")


def _small_catalog_orderings_hold(bank) -> bool:
    ve = {k: v[0] for k, v in bank.items()}
    vb = {k: v[1] for k, v in bank.items()}
    return (ve["n4-g1"] > ve["n4-g2"] and vb["n4-g1"] > vb["n4-g2"]
            and ve["n5-g4"] > ve["n5-g1"] > ve["n5-g2"] > ve["n5-g3"]
            and vb["n5-g1"] > vb["n5-g4"] > vb["n5-g2"] > vb["n5-g3"])


# -- criterion 4: rank reproduction ---------------------------------------------

@pytest.mark.slow
def test_c4_rank_reproduction(catalogs, small_catalog_velocities):
    bank = small_catalog_velocities
    ve = {k: v[0] for k, v in bank.items()}
    vb = {k: v[1] for k, v in bank.items()}
    n4 = ve["n4-g1"] > ve["n4-g2"] and vb["n4-g1"] > vb["n4-g2"]
    n5_ve = ve["n5-g4"] > ve["n5-g1"] > ve["n5-g2"] > ve["n5-g3"]
    n5_vb = vb["n5-g1"] > vb["n5-g4"] > vb["n5-g2"] > vb["n5-g3"]
    print(f"  n=4 orderings hold: {n4}")
    print(f"  n=5 v_E ordering 4>1>2>3: {n5_ve}; v_B ordering 1>4>2>3: {n5_vb}")

    # n=6: the reference wp column is defective, so row-to-class identity
    # cannot be pinned; the documented v_E/v_B inversion is tested through
    # the GHZ class (identifiable exactly: every labeling has gamma = 1)
    results6 = {e.name: measure_block(e.graph) for e in catalogs[6].entries}
    ghz_name = next(e.name for e in catalogs[6].entries if "ghz-class" in e.flags)
    ve6 = {k: v[0] for k, v in results6.items()}
    vb6 = {k: v[1] for k, v in results6.items()}
    print("  n=6 per-class velocities (dynamics-level disambiguation report):")
    for e in catalogs[6].entries:
        print(f"    {e.name}: gamma={e.gamma} wp={e.wp} "
              f"v_E={ve6[e.name]:.3f} v_B={vb6[e.name]:.3f} flags={e.flags}")
    inversion_partners = [k for k in ve6
                          if ve6[k] > ve6[ghz_name] and vb6[k] < vb6[ghz_name]]
    print(f"  inversion vs {ghz_name}: higher v_E but lower v_B for "
          f"{inversion_partners}")
    inversion = bool(inversion_partners)

    cross_ve = ve["n5-g4"] > min(ve6.values())
    cross_vb = vb["n5-g2"] > min(vb6.values())
    print(f"  cross-size: v_E(n5-g4)={ve['n5-g4']:.3f} > min n=6 v_E="
          f"{min(ve6.values()):.3f}: {cross_ve}")
    print(f"  cross-size: v_B(n5-g2)={vb['n5-g2']:.3f} > min n=6 v_B="
          f"{min(vb6.values()):.3f}: {cross_vb}")
    _criterion(4, "rank reproduction",
               n4 and n5_ve and n5_vb and inversion and cross_ve and cross_vb)


# -- criterion 5: sparsity monotonicity -------------------------------------------

@pytest.mark.slow
def test_c5_sparsity_monotonicity(catalogs):
    alphas = (0.25, 0.5, 0.75, 1.0)
    names = [e.name for e in catalogs[5].entries]
    sweep = {(a, e.name): measure_block(e.graph, alpha=a)
             for a in alphas for e in catalogs[5].entries}
    star = [sweep[(a, "n5-g1")] for a in alphas]
    star_ve = all(x[0] < y[0] for x, y in zip(star, star[1:]))
    star_vb = all(x[1] < y[1] for x, y in zip(star, star[1:]))
    print(f"  star-5 v_E by alpha: {[f'{x[0]:.3f}' for x in star]} increasing={star_ve}")
    print(f"  star-5 v_B by alpha: {[f'{x[1]:.3f}' for x in star]} increasing={star_vb}")
    ve_ranks = {a: tuple(sorted(names, key=lambda k: -sweep[(a, k)][0]))
                for a in alphas}
    vb_ranks = {a: tuple(sorted(names, key=lambda k: -sweep[(a, k)][1]))
                for a in alphas}
    rank_stable = (len(set(ve_ranks.values())) == 1
                   and len(set(vb_ranks.values())) == 1)
    for a in alphas:
        print(f"  alpha={a}: v_E rank {ve_ranks[a]}, v_B rank {vb_ranks[a]}")
    _criterion(5, "sparsity monotonicity", star_ve and star_vb and rank_stable)


# -- criterion 6: boundary robustness ----------------------------------------------

@pytest.mark.slow
def test_c6_boundary_robustness(catalogs, small_catalog_velocities):
    bank = small_catalog_velocities
    obc = {}
    for n in (4, 5):
        for e in catalogs[n].entries:
            obc[e.name] = measure_block(e.graph, boundary="open")
    # fits succeeding means linear growth followed by a detected plateau
    linear = all(v[0] > 0 for v in obc.values())
    n4 = obc["n4-g1"][0] > obc["n4-g2"][0]
    n5 = (obc["n5-g4"][0] > obc["n5-g1"][0] > obc["n5-g2"][0] > obc["n5-g3"][0])
    periodic_n4 = bank["n4-g1"][0] > bank["n4-g2"][0]
    periodic_n5 = (bank["n5-g4"][0] > bank["n5-g1"][0]
                   > bank["n5-g2"][0] > bank["n5-g3"][0])
    same_as_periodic = n4 == periodic_n4 and n5 == periodic_n5
    for name, (ve_o, vb_o) in sorted(obc.items()):
        print(f"  open {name}: v_E={ve_o:.3f} v_B={vb_o:.3f} "
              f"(periodic v_E={bank[name][0]:.3f})")
    _criterion(6, "boundary robustness", linear and n4 and n5 and same_as_periodic)


# -- criterion 7: oracle equivalence --------------------------------------------------

def test_c7_oracle_equivalence(rng):
    t0 = time.time()
    worst = 0.0
    for trial in range(100):
        n = int(rng.integers(2, 11))
        gates = random_gate_sequence(rng, n, 40)
        tab = apply_gates_tableau(StabilizerTableau.zero_state(n), gates)
        den = apply_gates_dense(DenseState.zero_state(n), gates)
        for _ in range(3):
            start = int(rng.integers(1, n + 1))
            length = int(rng.integers(1, n))
            sites = [(start - 1 + k) % n + 1 for k in range(length)]
            worst = max(worst, abs(tab.entropy_bits(start, length)
                                   - den.entropy(sites)))
    entropy_ok = worst < 1e-9
    mismatches = 0
    for trial in range(50):
        n = int(rng.integers(2, 9))
        p = PauliString.single(n, int(rng.integers(1, n + 1)), "X")
        w = pauli_matrix(p.copy())
        for gate in random_gate_sequence(rng, n, 20):
            if gate[0] == "H":
                p.conjugate_h(gate[1])
            else:
                p.conjugate_cz(gate[1], gate[2])
            w = conjugate_operator(w, gate, n)
        for x in range(1, n + 1):
            if p.otoc_indicator(x) != round(otoc_of_operator(w, x, n)):
                mismatches += 1
    elapsed = time.time() - t0
    _criterion(7, "oracle equivalence",
               entropy_ok and mismatches == 0 and elapsed < 30.0,
               f"entropy max dev {worst:.1e}, OTOC mismatches {mismatches}, "
               f"{elapsed:.1f}s < 30s")


# -- criterion 8: property suites -------------------------------------------------------

def test_c8_property_suites(rng, tmp_path):
    # LC invariance of the height function, exact
    lc_ok = True
    for _ in range(50):
        n = int(rng.integers(3, 8))
        while True:
            k = int(rng.integers(n - 1, n * (n - 1) // 2 + 1))
            pool = [(u, v) for u in range(1, n) for v in range(u + 1, n + 1)]
            idx = rng.choice(len(pool), size=k, replace=False)
            g = GraphSpec.from_edges(n, [pool[i] for i in idx])
            if g.is_connected():
                break
        h0 = height_function(g)
        for _ in range(10):
            g = local_complement(g, int(rng.integers(1, n + 1)))
            if height_function(g) != h0:
                lc_ok = False
    print(f"  height LC-invariance over 50 graphs x 10 moves: {lc_ok}")

    # strict light cone over >= 10^4 realization-layers (checked per layer
    # inside run_otoc_realization, which raises on any breach)
    cone_cfg = EnsembleConfig(block=star_graph(5), chain_length=50,
                              sparsity=0.5, layers=100, otoc_layers=100,
                              realizations=1, master_seed=SEED + 1)
    layers_checked = 0
    for i in range(100):
        run_otoc_realization(cone_cfg, cone_cfg.realization_rng(i), 100)
        layers_checked += 100
    cone_ok = layers_checked >= 10_000
    print(f"  strict light cone: {layers_checked} realization-layers, no breach")

    # determinism of run_ensemble across 1, 4, and 8 parallel jobs
    from graphblocks.runio import write_entropy_csv, write_otoc_csv
    det_cfg = EnsembleConfig(block=star_graph(4), chain_length=60,
                             sparsity=0.5, layers=60, otoc_layers=40,
                             realizations=16, master_seed=SEED + 2)
    blobs = []
    for jobs in (1, 4, 8):
        res = run_ensemble(det_cfg, jobs=jobs)
        e, o = tmp_path / f"e{jobs}.csv", tmp_path / f"o{jobs}.csv"
        write_entropy_csv(res, e)
        write_otoc_csv(res, o)
        blobs.append((e.read_bytes(), o.read_bytes()))
    det_ok = all(b == blobs[0] for b in blobs[1:])
    print(f"  run_ensemble byte-identical across jobs 1/4/8: {det_ok}")

    # synthetic round trip within 2 percent
    synth_ok = True
    for v in (0.4, 0.9, 1.6):
        series = np.minimum(v * np.arange(501.0), 100.0)
        series += rng.uniform(-0.5, 0.5, size=series.size)
        fit = fit_entanglement_velocity(series, plateau_tolerance=1.5)
        synth_ok &= abs(fit.velocity - v) / v < 0.02
    field_ok = True
    for v in (0.8, 1.6):
        t = np.arange(201.0)
        field = np.zeros((201, 200))
        for ti in range(201):
            d = np.minimum(np.abs(np.arange(1, 201) - 100), 200 - np.abs(np.arange(1, 201) - 100))
            field[ti] = 1.0 / (1.0 + np.exp((d - v * ti) / 1.5))
        field += rng.uniform(-0.05, 0.05, size=field.shape)
        fb = fit_butterfly_with_sensitivity(np.clip(field, 0, 1), 200, 100)
        field_ok &= abs(fb.velocity - v) / v < 0.02
    print(f"  synthetic fit round-trip <2%: entropy {synth_ok}, front {field_ok}")
    _criterion(8, "property suites",
               lc_ok and cone_ok and det_ok and synth_ok and field_ok)

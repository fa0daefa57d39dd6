"""Acceptance criteria 1-11, each at its stated tolerance.

Every test prints one line ``[criterion N] PASS|FAIL ...`` straight to the
terminal. Run ``pytest tests/test_acceptance.py`` or execute this file.
"""

import json
import time

import numpy as np
import pytest

from conftest import ORACLE_DISCORD
from qutrit_correlations import cli
from qutrit_correlations.correlations import LOG2_3, make_isotropic, negativity, quantum_discord
from qutrit_correlations.io import pairs_to_matrix
from qutrit_correlations.nv import NvConfig, prepare_isotropic, prepare_with_nuclear_leakage
from qutrit_correlations.qudit import DensityMatrix, fidelity
from qutrit_correlations.tomography import (
    PLRecord,
    RawStateEstimate,
    default_pl_model,
    estimate_p,
    mle_reconstruct,
    nuclear_polarization,
    nuclear_polarization_signals,
    simulate_measurement,
    simulate_normalization,
    simulate_nuclear_polarization,
    solve_elements,
    solve_normalization,
)

PREP_GRID = [0.0, 0.25, 0.5, 0.94, 1.0]
SEPARABLE_GRID = sorted(ORACLE_DISCORD)
SEED = 2024


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {n}] {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return emit


def printed_step1(p):
    return np.diag([(1 - p) / 3, 0, 0, 0, (1 + 2 * p) / 3, 0, 0, 0, (1 - p) / 3])


def printed_step2(p):
    d = np.full(9, (1 - p) / 9)
    d[4] = (1 + 8 * p) / 9
    return np.diag(d)


def printed_final(p):
    m = np.diag([(1 + 2 * p) / 9 if k in (0, 4, 8) else (1 - p) / 9 for k in range(9)])
    for i, j in ((0, 4), (0, 8), (4, 8)):
        m[i, j] = m[j, i] = p / 3
    return m


def read_json(path):
    return json.loads(path.read_text())


def numeric_bytes(out_dir):
    """Output bytes with the manifest lines/sections removed."""
    blobs = {}
    for path in sorted(out_dir.iterdir()):
        if path.suffix == ".csv":
            blobs[path.name] = "\n".join(
                ln for ln in path.read_text().splitlines() if not ln.startswith("#"))
        elif path.suffix == ".json":
            d = read_json(path)
            d.pop("manifest", None)
            blobs[path.name] = json.dumps(d, sort_keys=True)
    return blobs


@pytest.fixture(scope="module")
def noisy_runs(tmp_path_factory):
    """Two identical criterion-7 runs: calibrated noise, M = 100, p = 0.94."""
    base = tmp_path_factory.mktemp("c7")
    times = []
    for name in ("a", "b"):
        t0 = time.perf_counter()
        code = cli.main(["roundtrip", "0.94", "--monte-carlo", "100", "--seed", str(SEED),
                         "--out", str(base / name)])
        times.append(time.perf_counter() - t0)
        assert code == 0
    return base, times


def test_criterion_01_negativity_closed_form(verdict):
    t0 = time.perf_counter()
    ps = np.linspace(0, 1, 101)
    err = max(abs(negativity(make_isotropic(p)) - max(0.0, (4 * p - 1) / 3)) for p in ps)
    dt = time.perf_counter() - t0
    verdict(1, err <= 1e-9 and dt < 1.0,
            f"negativity closed form: max error {err:.2e} over 101 points ({dt:.2f} s)")


def test_criterion_02_discord_endpoints(verdict):
    t0 = time.perf_counter()
    d0 = quantum_discord(make_isotropic(0.0)).discord
    t1 = time.perf_counter()
    d1 = quantum_discord(make_isotropic(1.0)).discord
    t2 = time.perf_counter()
    worst = max(t1 - t0, t2 - t1)
    ok = d0 <= 1e-6 and abs(d1 - LOG2_3) <= 1e-3 and worst < 60
    verdict(2, ok, f"discord endpoints: D(0) = {d0:.2e}, |D(1) - log2 3| = {abs(d1 - LOG2_3):.2e} "
                   f"(slowest point {worst:.1f} s)")


def test_criterion_03_separable_discord(verdict):
    rows = []
    for p in SEPARABLE_GRID:
        rep = quantum_discord(make_isotropic(p))
        rows.append((p, rep.negativity, rep.discord, ORACLE_DISCORD[p] - 1e-3))
    ok = all(n <= 1e-10 and d >= floor for _, n, d, floor in rows)
    margin = min(d - floor for _, _, d, floor in rows)
    verdict(3, ok, "separable with discord: max N = "
                   f"{max(r[1] for r in rows):.1e}, min D = {min(r[2] for r in rows):.4f}, "
                   f"smallest margin over oracle floor {margin:.2e}")


def test_criterion_04_discord_monotone(verdict):
    ps = np.round(np.arange(0, 21) * 0.05, 10)
    d = np.array([quantum_discord(make_isotropic(p)).discord for p in ps])
    worst = float(np.min(np.diff(d)))
    verdict(4, worst >= -1e-4, f"discord monotone on 0.05 grid: smallest step {worst:.3e}")


def test_criterion_05_preparation(verdict):
    t0 = time.perf_counter()
    err = 0.0
    for p in PREP_GRID:
        final, (s1, s2, _) = prepare_isotropic(p)
        err = max(err,
                  np.abs(s1.matrix - printed_step1(p)).max(),
                  np.abs(s2.matrix - printed_step2(p)).max(),
                  np.abs(final.matrix - printed_final(p)).max())
    dt = time.perf_counter() - t0
    verdict(5, err <= 1e-9 and dt < 1.0,
            f"ideal preparation: max entry error {err:.2e} over steps I-III ({dt:.2f} s)")


def test_criterion_06_noiseless_roundtrip(verdict):
    model = default_pl_model()
    norm = solve_normalization(simulate_normalization(NvConfig(p_n=1.0), model, 1e-12))
    worst_f, worst_p = 1.0, 0.0
    for p in PREP_GRID:
        prepared = prepare_isotropic(p)[0]
        raw = solve_elements(simulate_measurement(prepared, model, 1e-12), norm.model)
        state, _ = mle_reconstruct(raw)
        worst_f = min(worst_f, fidelity(state, make_isotropic(p)))
        worst_p = max(worst_p, abs(estimate_p(state, make_isotropic) - p))
    ok = worst_f >= 1 - 1e-5 and worst_p <= 1e-4
    verdict(6, ok, f"noiseless round trip: min fidelity 1 - {1 - worst_f:.1e}, "
                   f"max |p_hat - p| {worst_p:.1e}")


def test_criterion_07_noisy_roundtrip(verdict, noisy_runs):
    base, times = noisy_runs
    rep = read_json(base / "a" / "report.json")
    f = rep["target"]["fidelity_to_target"]
    r = rep["reconstruction"]
    mean = pairs_to_matrix(r["mean_matrix"])
    ok = f >= 0.95 and times[0] < 300 and r["members"] == 100 and mean.shape == (9, 9)
    verdict(7, ok, f"noisy round trip (M = 100): fidelity {f:.4f}, "
                   f"p_hat = {r['p_hat']:.4f} +- {r['p_sigma']:.4f} ({times[0]:.0f} s)")


def test_criterion_08_mle_physicality(verdict):
    rng = np.random.default_rng(SEED)
    bad, negatives = 0, 0
    for _ in range(500):
        base = RawStateEstimate.from_state(make_isotropic(rng.uniform()))
        x = base.vector() + rng.normal(0, 0.05, 15)
        negatives += bool(np.any(x[:9] < 0))
        state, _ = mle_reconstruct(RawStateEstimate.from_vector(x))
        m = state.matrix
        try:
            DensityMatrix(m)  # re-validate from scratch
        except ValueError:
            bad += 1
            continue
        if np.linalg.eigvalsh(m).min() < -1e-10 or abs(np.trace(m) - 1) > 1e-10:
            bad += 1
    verdict(8, bad == 0 and negatives > 0,
            f"MLE physicality: {500 - bad}/500 valid ({negatives} inputs with negative populations)")


def test_criterion_09_nuclear_polarization(verdict):
    rng = np.random.default_rng(SEED)
    err = 0.0
    for _ in range(100):
        pe, pn = rng.uniform(0.5, 1.0), rng.uniform(0.0, 1.0)
        rates = rng.uniform(0.5, 1.0, 9)
        rec = PLRecord(nuclear_polarization_signals(pe, pn, rates), 1e-3, "nuclear-polarization")
        err = max(err, abs(nuclear_polarization(rec) - pn))
    own = nuclear_polarization(simulate_nuclear_polarization(0.9, 0.981, default_pl_model()))
    ok = err <= 1e-12 and abs(own - 0.981) <= 1e-12
    verdict(9, ok, f"nuclear polarization: max round-trip error {err:.1e}, recovered p_n = {own:.12f}")


def test_criterion_10_nuclear_correction(verdict):
    f = fidelity(make_isotropic(0.5), prepare_with_nuclear_leakage(0.5, 0.981))
    ok = f >= 0.999 and abs(f - 0.9996) <= 5e-4
    verdict(10, ok, f"p_n = 0.981 corrected state at p = 0.5: fidelity {f:.5f} (reference 0.9996)")


def test_criterion_11_determinism(verdict, noisy_runs, tmp_path):
    grid = ",".join(str(p) for p in SEPARABLE_GRID)
    for name in ("a", "b"):
        assert cli.main(["curves", "--p-grid", grid, "--seed", str(SEED),
                         "--out", str(tmp_path / name)]) == 0
    same3 = numeric_bytes(tmp_path / "a") == numeric_bytes(tmp_path / "b")
    base, _ = noisy_runs
    same7 = numeric_bytes(base / "a") == numeric_bytes(base / "b")
    verdict(11, same3 and same7,
            f"determinism: criterion 3 outputs identical {same3}, criterion 7 outputs identical {same7}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))

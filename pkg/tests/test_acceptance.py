"""Acceptance criteria, one test each, at their stated tolerances.

Each test prints a single ``PASS``/``FAIL`` line. Run directly with
``python3 tests/test_acceptance.py`` to get just the nine lines.
"""

import contextlib
import io
import json
import math
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

from discordlab.cli import main as cli_main, run_sweep
from discordlab.discord import (Side, discord_report, geometric_discord, k_matrix, m1_multicopy,
                                m2_multicopy, moments_from_k, q_indicator)
from discordlab.experiment import ExperimentConfig, estimate_m1, estimate_m2, throughput
from discordlab.optics import DetectorModel, reconstruct_coincidence_operators, uv_box_distribution
from discordlab.robustness import robustness_sweep
from discordlab.seeding import substream
from discordlab.states import (bell_states, bloch_decompose, classical_quantum, ket_to_dm,
                               random_state, singlet, state_to_dict, werner)

def report(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    print("\n" + line, flush=True)
    return ok


def criterion_1():
    start = time.perf_counter()
    errs = []
    s = discord_report(singlet())
    errs += [s.d_a - 0.5, s.q_a - 0.5, m1_multicopy(singlet()) - 3, m2_multicopy(singlet()) - 3]
    hh = ket_to_dm([1, 0, 0, 0])
    h = discord_report(hh)
    errs += [h.d_a, h.q_a, m1_multicopy(hh) - 2, m2_multicopy(hh) - 4]
    w = discord_report(werner(0.5))
    errs += [w.d_a - 0.125, w.q_a - 0.125]
    elapsed = time.perf_counter() - start
    worst = max(abs(e) for e in errs)
    return report(1, worst <= 1e-10 and elapsed < 1, f"max error {worst:.2e}, {elapsed:.3f} s")


def criterion_2():
    worst1 = worst2 = 0.0
    for i in range(10 ** 4):
        rho = random_state(substream(2024, i))
        b = bloch_decompose(rho)
        for side in Side:
            m = moments_from_k(k_matrix(b, side))
            worst1 = max(worst1, abs(m1_multicopy(rho, side) - m.m1))
            worst2 = max(worst2, abs(m2_multicopy(rho, side) - m.m2))
    ok = worst1 <= 1e-10 and worst2 <= 1e-9
    return report(2, ok, f"max |dM1| {worst1:.2e}, max |dM2| {worst2:.2e} over 1e4 states x 2 sides")


def criterion_3():
    worst = 0.0
    for eta in (1.0, 0.75):
        det = DetectorModel(eta)
        e14, e23 = reconstruct_coincidence_operators(det)
        worst = max(worst, np.abs(e14 - det.r * np.eye(4)).max(), np.abs(e23 - det.r * singlet()).max())
    hom = uv_box_distribution(ket_to_dm([1, 0, 0, 0]), DetectorModel(1.0)).p23
    p23 = {k: uv_box_distribution(v, DetectorModel(1.0)).p23 for k, v in bell_states().items()}
    only_singlet = p23.pop("psi-") > 0 and all(abs(v) <= 1e-12 for v in p23.values())
    ok = worst <= 1e-10 and abs(hom) <= 1e-12 and only_singlet
    return report(3, ok, f"operator error {worst:.2e}, HOM p23 {hom:.1e}, singlet-only p23 {only_singlet}")


def criterion_4():
    start = time.perf_counter()
    n = 10 ** 6
    m1 = estimate_m1(singlet(), ExperimentConfig(eta=1.0, iterations=n, seed=0))
    z_m1 = abs(m1.value - 3) / m1.std_error
    p1 = 1 / 16
    z_n1 = abs(m1.n_success / n - p1) / math.sqrt(p1 * (1 - p1) / n)
    m2 = estimate_m2(singlet(), ExperimentConfig(eta=1.0, iterations=n, seed=0, delay_scheme="prob"))
    p2 = 0.25 ** 2 * 0.25 ** 4
    z_n2 = abs(m2.n_success / n - p2) / math.sqrt(p2 * (1 - p2) / n)
    elapsed = time.perf_counter() - start
    ok = z_m1 <= 3 and z_n1 <= 3 and z_n2 <= 3 and elapsed < 300
    return report(4, ok, f"M1 {m1.value:.4f} ({z_m1:.2f} se), N1/N {z_n1:.2f} sigma, "
                          f"N2/N {z_n2:.2f} sigma, {elapsed:.1f} s")


def _three_sf(value, target):
    # "agree to three significant figures": relative error below 5e-3
    return abs(value - target) / abs(target) < 5e-3


def criterion_5():
    rep = throughput(ExperimentConfig(eta=0.75, tau_ns=50.0, delay_scheme="prob"), n_target=1000)
    det = throughput(ExperimentConfig(eta=1.0, tau_ns=50.0, delay_scheme="det"), n_target=1000)
    ok = (_three_sf(rep.rate_m1_hz, 15.8e3) and _three_sf(rep.rate_m2_hz, 6.25)
          and rep.time_for_target_s < 180 and det.time_m2_s <= 1.0)
    return report(5, ok, f"M1 {rep.rate_m1_hz:.1f} Hz, M2 {rep.rate_m2_hz:.4f} Hz, "
                          f"total {rep.time_for_target_s:.1f} s, ideal det M2 {det.time_m2_s:.3f} s")


def criterion_6():
    _, violations, bad = run_sweep(10 ** 5, seed=0)
    return report(6, violations == 0 and bad == 0,
                  f"1e5 states: {violations} sandwich violations, {bad} negative radicands")


def criterion_7():
    maxima = [robustness_sweep(10 ** 4, f, seed=7).max_delta for f in (0.90, 0.95, 0.99)]
    ok = maxima[0] < 0.05 and maxima[0] >= maxima[1] >= maxima[2]
    return report(7, ok, "max |Q' - Q| at f_min 0.90/0.95/0.99: " + ", ".join(f"{m:.4f}" for m in maxima))


def _qubit_state(rng):
    g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    m = g @ g.conj().T
    return m / np.trace(m)


def criterion_8():
    rng = np.random.default_rng(8)
    worst_cq = 0.0
    for _ in range(1000):
        basis, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        p = rng.random()
        rho = classical_quantum([p, 1 - p], basis, [_qubit_state(rng), _qubit_state(rng)])
        worst_cq = max(worst_cq, discord_report(rho).q_a)
    generic, min_q, i = 0, math.inf, 0
    while generic < 1000:
        rho = random_state(substream(88, i))
        i += 1
        k = k_matrix(bloch_decompose(rho), Side.A)
        if geometric_discord(k) < 1e-3:
            continue
        generic += 1
        min_q = min(min_q, q_indicator(moments_from_k(k)))
    ok = worst_cq <= 1e-10 and min_q > 0
    return report(8, ok, f"max Q_A over CQ states {worst_cq:.1e}, min Q_A over discordant states {min_q:.2e}")


def criterion_9():
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        state = tmp / "state.json"
        state.write_text(json.dumps(state_to_dict(werner(0.7))))
        commands = [
            ["analyze", str(state)],
            ["sweep", "--count", "200", "--seed", "9"],
            ["simulate", str(state), "--count", "200000", "--seed", "9"],
            ["throughput", "--scheme", "det"],
            ["robustness", "--n-pairs", "50", "--seed", "9", "--summary", "{dir}/summary.json"],
        ]
        mismatched = []
        for cmd in commands:
            outputs = []
            for run in ("a", "b"):
                d = tmp / f"{cmd[0]}_{run}"
                d.mkdir()
                argv = [a.format(dir=d) for a in cmd] + ["--out", str(d / "out")]
                quiet = io.StringIO()
                with contextlib.redirect_stdout(quiet), contextlib.redirect_stderr(quiet):
                    code = cli_main(argv)
                if code != 0:
                    mismatched.append(cmd[0])
                outputs.append({p.name: p.read_bytes() for p in d.iterdir()
                                if not p.name.endswith(".manifest.json")})
            if outputs[0] != outputs[1] or not outputs[0]:
                mismatched.append(cmd[0])
    return report(9, not mismatched, f"{len(commands)} commands rerun, differing: {mismatched or 'none'}")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9]


@pytest.mark.slow
@pytest.mark.parametrize("criterion", CRITERIA, ids=lambda f: f.__name__)
def test_criterion(criterion, capsys):
    with capsys.disabled():
        ok = criterion()
    assert ok


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    sys.exit(0 if all(results) else 1)

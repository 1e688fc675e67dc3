"""Acceptance criteria A1..A9; each test records one PASS/FAIL line."""

import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import pytest

from vacuum_euler.affine_oracle import AffineParams, AffineReference, to_rescaled
from vacuum_euler.energy import Context, damping, energy_reports, theta_limit, zero_order_identity_residual
from vacuum_euler.envelopes import decay_envelopes, envelope_checks
from vacuum_euler.experiments import ExperimentConfig, report_rows, simulate
from vacuum_euler.kinematics import affine_radial_flow, ball_samples, flow_quantities, lagrangian_density, piola_residual, radial_polynomial_flow
from vacuum_euler.operator_calculus import full_suite
from vacuum_euler.params import make_eos, time_weights
from vacuum_euler.radial_solver import RadialState, SolverConfig, run
from vacuum_euler.reduction import reduction_errors
from vacuum_euler.weights import cutoff, model_profile

# ---------------------------------------------------------------------------
# A1


def _oracle_error(n):
    cfg = SolverConfig(n=n, cfl=0.4, delta=1e-3, gamma=2.0, tau_max=1.0, stride=0.01)
    tr = run(cfg, lambda r: 0.05 * r, lambda r: r.copy())
    ref = AffineReference.for_tau(AffineParams(1.0, 1.05, 1e-3, make_eos(2.0)), 1.0)
    phi, nu = to_rescaled(ref, tr.taus, tr.r)
    return max(np.max(np.abs(tr.phi - phi)), np.max(np.abs(tr.nu - nu)))


def test_a1_affine_oracle(verdict):
    t0 = time.perf_counter()
    errs = [_oracle_error(n) for n in (65, 129, 257)]
    elapsed = time.perf_counter() - t0
    orders = [math.log2(errs[k] / errs[k + 1]) for k in range(2)]
    acc = errs[-1] <= 1e-4
    order_ok = all(1.5 <= o <= 2.5 for o in orders)
    ok = verdict(
        "A1",
        acc and order_ok and elapsed <= 120,
        f"sup error n=257 {errs[-1]:.2e} (<=1e-4: {acc}); errors {[f'{e:.2e}' for e in errs]}, "
        f"observed orders {[f'{o:.2f}' for o in orders]} (2.0+-0.5: {order_ok}); {elapsed:.1f}s",
    )
    assert ok


# ---------------------------------------------------------------------------
# A2


def test_a2_radial_reduction(verdict):
    t0 = time.perf_counter()
    W, dW = (lambda r: 1 - r**2), (lambda r: -2 * r)
    ratios = {}
    for alpha in (1.0, 1.5):
        e1 = reduction_errors(alpha, W, dW, 1 / 16)
        e2 = reduction_errors(alpha, W, dW, 1 / 32)
        ratios.update({f"{k}@alpha={alpha:g}": e1[k] / e2[k] for k in e1})
    elapsed = time.perf_counter() - t0
    ok = all(2.8 <= q <= 5.2 for q in ratios.values()) and elapsed <= 60
    verdict("A2", ok, f"ratios {', '.join(f'{k}={q:.2f}' for k, q in ratios.items())}; {elapsed:.1f}s")
    assert ok


# ---------------------------------------------------------------------------
# A3 / A4 share the 18-run sweep


def _sweep_member(args):
    delta, eps, gamma = args
    cfg = ExperimentConfig(n=129, tau_max=5.0, stride=0.01, delta=delta, epsilon=eps, gamma=gamma, order=2, identity=False)
    traj = simulate(cfg)
    rows = report_rows(traj, cfg)
    try:
        rate = theta_limit(traj, cfg.context())["rate"]
    except ValueError:
        rate = float("nan")
    return cfg, traj.status, rows, rate


@pytest.fixture(scope="module")
def sweep18():
    grid = list(itertools.product((1e-4, 1e-3, 1e-2), (0.0, 1e-3, 1e-2), (5 / 3, 2.0)))
    t0 = time.perf_counter()
    with ProcessPoolExecutor(max_workers=4) as pool:
        out = list(pool.map(_sweep_member, grid))
    return out, time.perf_counter() - t0


def test_a3_global_boundedness(sweep18, verdict):
    members, elapsed = sweep18
    completed = all(status == "completed" for _, status, _, _ in members)
    tripped = []
    ratios = []
    for cfg, _, rows, _ in members:
        bad = [r["tau"] for r in rows if not (r["apriori_S"] and r["apriori_A"] and r["apriori_J"])]
        if bad:
            sup_s = max(r["S_N"] for r in rows)
            tripped.append(f"(delta={cfg.delta:g}, eps={cfg.epsilon:g}, gamma={cfg.gamma:.3g}) at tau={bad[0]:.2f}, sup S_N={sup_s:.3f}")
        ratios.append(max(r["S_N"] for r in rows) / (cfg.epsilon + math.sqrt(cfg.delta)))
    C = max(ratios)
    ok = completed and not tripped and C <= 50 and elapsed <= 900
    verdict(
        "A3",
        ok,
        f"all completed: {completed}; fitted C = {C:.3f} (<=50: {C <= 50}); "
        f"a-priori trips: {'; '.join(tripped) if tripped else 'none'}; {elapsed:.1f}s",
    )
    assert ok


def test_a4_theta_limit(sweep18, verdict):
    members, _ = sweep18
    rel = []
    for cfg, _, _, rate in members:
        rel.append(rate / (time_weights(cfg.solver().eos.beta).sigma1 / 2))
    ok = all(0.5 <= q <= 1.5 for q in rel)
    verdict("A4", ok, f"fitted rate / (sigma1/2) in [{min(rel):.3f}, {max(rel):.3f}] over {len(rel)} runs")
    assert ok


# ---------------------------------------------------------------------------
# A5


def _identity_residual(n, dt):
    cfg = SolverConfig(n=n, delta=1e-3, gamma=2.0, tau_max=1.0, stride=dt, dtau_max=dt)
    tr = run(cfg, lambda r: 0.05 * r)
    ctx = Context(cfg.eos, cfg.weight, cutoff(), cfg.delta)
    return float(np.max(zero_order_identity_residual(tr, ctx)))


def test_a5_zero_order_identity(verdict):
    coarse = _identity_residual(129, 2e-3)
    fine = _identity_residual(257, 1e-3)
    ratio = coarse / fine
    ok = fine <= 1e-5 and 3.0 <= ratio <= 5.0
    verdict("A5", ok, f"residual (n=257, dtau=1e-3) {fine:.2e}; ratio under (h, dtau) halving {ratio:.2f}")
    assert ok


# ---------------------------------------------------------------------------
# A6


def test_a6_identity_suite(verdict):
    t0 = time.perf_counter()
    result = full_suite(max_degree=6, max_order=3)
    elapsed = time.perf_counter() - t0
    failures = {k: v for k, v in result.items() if not k.startswith("_") and v}
    worst = result["_worst_reconstruction_residual"]
    ok = not failures and worst <= 1e-10 and elapsed <= 10
    verdict("A6", ok, f"exact failures {failures or 'none'}; worst reconstruction residual {worst:.1e}; {elapsed:.1f}s")
    assert ok


# ---------------------------------------------------------------------------
# A7


def test_a7_envelopes(verdict):
    notes = []
    ok = True
    for beta in (0.5, 1.0, 2.0, 2.5, 3.0, 4.0):
        chk = envelope_checks(decay_envelopes(beta))
        ok &= chk["bounded"]
        if beta > 2:
            ok &= bool(chk["integrable"])
            notes.append(f"beta={beta:g} tail<={np.max(chk['tail_fraction']):.1e}")
        else:
            notes.append(f"beta={beta:g} sup={np.max(chk['sup']):.2f}")
    verdict("A7", ok, "; ".join(notes))
    assert ok


# ---------------------------------------------------------------------------
# A8


def _random_state(rng, n=65):
    r = np.linspace(0, 1, n)
    c = rng.normal(scale=0.03, size=4)
    phi = r + c[0] * r**3 + c[1] * r**5
    nu = c[2] * r + c[3] * r**3 * np.cos(2 * r)
    return RadialState(float(rng.uniform(0, 5)), phi, nu)


def test_a8_structural_invariants(verdict):
    rng = np.random.default_rng(2024)
    checks = {}
    min_damp = math.inf
    beta2_zero = True
    for gamma in (4 / 3, 5 / 3, 2.0):  # beta = 1, 2, 3
        eos = make_eos(gamma)
        ctx = Context(eos, model_profile(1e-3, eos.alpha), cutoff(), 1e-3)
        for _ in range(1000):
            d = damping(_random_state(rng), ctx)
            min_damp = min(min_damp, d)
            if abs(eos.beta - 2) < 1e-12:
                beta2_zero &= d == 0.0
    checks["damping>=0"] = min_damp >= 0
    checks["damping==0 at beta=2"] = beta2_zero

    cfg = SolverConfig(n=65, delta=1e-3, tau_max=1.0, stride=0.05)
    tr = run(cfg, lambda r: 0.01 * r * np.exp(-r**2))
    reps = energy_reports(tr, Context(cfg.eos, cfg.weight, cutoff(), cfg.delta), with_identity=False)
    checks["C_N==0"] = all(rep.C_N == 0 for rep in reps)

    prof = model_profile(0.01, 1.5)
    x = ball_samples(200)
    r = np.linalg.norm(x, axis=1)
    q = flow_quantities(affine_radial_flow().grad(0.6, x))
    mass = np.max(np.abs(lagrangian_density(prof, q.J, r) * q.J - prof.density(r)))
    checks["fJ=w^alpha"] = mass <= 1e-12

    piola = []
    for flow in (radial_polynomial_flow(0.05, 0.0, 0.05), affine_radial_flow()):
        piola.append(piola_residual(flow, 0.02, 0.5) / piola_residual(flow, 0.01, 0.5))
    checks["Piola O(h^2)"] = all(2.8 <= p <= 5.2 for p in piola)

    betas = rng.uniform(1e-3, 20, size=10_000)
    split = max(abs(time_weights(b).sigma1 + time_weights(b).sigma2 - b) for b in betas)
    checks["sigma1+sigma2=beta"] = split <= 1e-12

    ok = all(checks.values())
    verdict("A8", ok, ", ".join(f"{k}: {v}" for k, v in checks.items()) + f"; min damping {min_damp:.2e}; Piola ratios {[f'{p:.2f}' for p in piola]}")
    assert ok


# ---------------------------------------------------------------------------
# A9


def test_a9_cutoff_insensitivity(verdict):
    base = ExperimentConfig(n=129, tau_max=5.0, stride=0.01, delta=1e-3, epsilon=1e-2, gamma=2.0, identity=False)
    finals = {}
    for r1, r0 in ((0.5, 0.75), (0.4, 0.7)):
        cfg = base.with_(r1=r1, r0=r0)
        finals[(r1, r0)] = report_rows(simulate(cfg), cfg)[-1]["S_N"]
    a, b = finals[(0.5, 0.75)], finals[(0.4, 0.7)]
    change = abs(b - a) / a
    ok = change < 0.2
    verdict("A9", ok, f"S_N(tau_max) {a:.5f} vs {b:.5f}, relative change {change:.2%}")
    assert ok

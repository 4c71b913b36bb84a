"""End-to-end acceptance criteria, one test per criterion (criterion 4 is
split into its two clauses).  Each test prints one PASS/FAIL line; run with
``pytest tests/test_acceptance.py -v -s`` to see them live.

Criteria 3 and 4a are implemented faithfully and are expected to fail: the
exact steady-state Wigner lobes sit at the near-threshold quantum positions
(0.29 and 0.23 away from the criterion targets), beyond the stated 0.2 / 0.15
tolerances; see the companion lines they print and notes/decisions.md.
"""

import math

import numpy as np
import pytest
from scipy.stats import chi2

from sgqed.config import DetectionConfig, SimParams
from sgqed.hilbert import (
    atom_ops,
    build_space,
    dressed_ops,
    expectation,
    field_ops,
    vacuum_ground,
)
from sgqed.lindblad import (
    evolve_me_expectations,
    liouvillian,
    rf_reference_wtd,
    steady_state,
    waiting_time_density,
)
from sgqed.phase_space import locate_peaks, reduced_field, wigner
from sgqed.semiclassics import bimodal_peaks, verify_secular_ansatz
from sgqed.trajectories import classify_attractor, run_ensemble, run_trajectory

pytestmark = pytest.mark.acceptance

GRID = np.linspace(-6.0, 6.0, 201)

FIG2 = dict(g=7.0, kappa=1.0, gamma=0.0, epsilon=300.0)
FIG3 = dict(g=7.0, kappa=1.0, gamma=0.0, epsilon=30.0)
FIG4 = dict(kappa=1.0, gamma=5.0, epsilon=20.0)


def report(criterion: str, ok: bool, detail: str) -> bool:
    print(f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} - {detail}", flush=True)
    return ok


def solve_ss(cutoff, **rates):
    space = build_space(cutoff)
    liou = liouvillian(space, rates["g"], rates["kappa"], rates["gamma"], rates["epsilon"])
    rho = steady_state(liou)
    residual = float(np.max(np.abs(liou.matrix @ rho.matrix.reshape(-1, order="F"))))
    return space, rho, residual


# ---------------------------------------------------------------------------

def test_criterion_1_operator_identity():
    """Drift of the bare-basis record equation == dressed-basis form, gamma=0."""
    space = build_space(35)
    g, eps = FIG2["g"], FIG2["epsilon"]
    a, adag = field_ops(space)
    sm, sp, _ = atom_ops(space)
    dz, dp, dm = dressed_ops(space)
    lhs = -1j * eps * (sp + sm) + g * (adag @ sm - a @ sp)
    rhs = -1j * eps * dz + (g / 2) * dz @ (adag - a) + (g / 2) * (dp - dm) @ (adag + a)
    dev = float(np.max(np.abs(lhs - rhs)))
    assert report("1 operator identity", dev < 1e-12, f"max entry deviation {dev:.2e} (< 1e-12)")


def test_criterion_2_steady_state_quality():
    worst = 0.0
    details = []
    for label, cutoff, rates in [
        ("fig2", 35, FIG2),
        ("fig3", 35, FIG3),
        ("fig4 g=0.5", 20, {**FIG4, "g": 0.5}),
        ("fig4 g=5", 20, {**FIG4, "g": 5.0}),
    ]:
        space, rho, residual = solve_ss(cutoff, **rates)
        m = rho.matrix
        herm = float(np.max(np.abs(m - m.conj().T)))
        tr = abs(np.trace(m) - 1.0)
        eig_min = float(np.linalg.eigvalsh(m).min())
        ok = residual <= 1e-8 and herm <= 1e-10 and tr <= 1e-10 and eig_min >= -1e-8
        details.append(f"{label}: res {residual:.1e}")
        worst = max(worst, residual)
        assert ok, f"{label}: residual {residual}, herm {herm}, trace dev {tr}, eig {eig_min}"
    assert report("2 steady-state residuals", True, "; ".join(details))


@pytest.fixture(scope="module")
def fig2_ss_wigner():
    space, rho, _ = solve_ss(35, **FIG2)
    return wigner(reduced_field(rho), GRID, GRID)


def test_criterion_3_fig2_bimodality(fig2_ss_wigner):
    peaks = sorted(locate_peaks(fig2_ss_wigner, 2, min_separation=2.0), key=lambda p: p.real)
    targets = (-3.5 + 0.0j, 3.5 + 0.0j)
    dists = [abs(p - t) for p, t in zip(peaks, targets)]
    pred = bimodal_peaks(FIG2["g"], FIG2["kappa"], FIG2["epsilon"])
    eq11 = sorted((pred.alpha_down, pred.alpha_up), key=lambda p: p.real)
    eq11_dists = [abs(p - t) for p, t in zip(peaks, eq11)]
    ok = max(dists) < 0.2
    report("3 fig2 bimodality", ok,
           f"peaks {peaks[0]:.3f}, {peaks[1]:.3f}; distance to +-3.5+0i = "
           f"{max(dists):.3f} (< 0.2 required); distance to the bimodal-peak "
           f"formula = {max(eq11_dists):.3f}")
    assert max(eq11_dists) < 0.05, "steady state disagrees with the peak formula itself"
    assert ok, (
        f"exact quantum lobes sit at {peaks[0]:.3f}/{peaks[1]:.3f}, "
        f"{max(dists):.3f} > 0.2 from +-3.5+0i: the drive-induced offset "
        f"-i g^3/(4 eps kappa^2) = -0.286i is physical (matches the peak "
        f"formula to {max(eq11_dists):.3f}); see notes/decisions.md"
    )


@pytest.fixture(scope="module")
def fig3_ss_wigner():
    space, rho, _ = solve_ss(35, **FIG3)
    return wigner(reduced_field(rho), GRID, GRID)


def test_criterion_4a_fig3_wigner_peak_oracle(fig3_ss_wigner):
    peaks = sorted(locate_peaks(fig3_ss_wigner, 2, min_separation=2.0), key=lambda p: p.real)
    pred = bimodal_peaks(FIG3["g"], FIG3["kappa"], FIG3["epsilon"])
    targets = sorted((pred.alpha_down, pred.alpha_up), key=lambda p: p.real)
    dists = [abs(p - t) for p, t in zip(peaks, targets)]
    ok = max(dists) < 0.15
    report("4a fig3 Wigner peak oracle", ok,
           f"lobes {peaks[0]:.3f}, {peaks[1]:.3f} vs formula {targets[0]:.3f}, "
           f"{targets[1]:.3f}; distance {max(dists):.3f} (< 0.15 required)")
    assert ok, (
        f"quantum lobes are {max(dists):.3f} from the semiclassical formula at "
        f"1.22x threshold (gap shrinks to 0.044 at eps/kappa=40, 0.010 at 300); "
        f"see notes/decisions.md"
    )


def test_criterion_4b_fig3_bloch_centers():
    params = SimParams(**FIG3, fock_cutoff=35, t_final=100.0, n_traj=20, seed=400)
    det = DetectionConfig(mode="homodyne", theta=0.0, bandwidth_B=0.5)
    recs = run_ensemble(params, det, batch_size=20)
    xs, ys = [], []
    for rec in recs:
        late = rec.times > 10.0
        xs.append(rec.x[late])
        ys.append(rec.y[late])
    x_all = np.concatenate(xs)
    y_all = np.concatenate(ys)
    pred = bimodal_peaks(FIG3["g"], FIG3["kappa"], FIG3["epsilon"])
    plus = x_all > 0.1
    minus = x_all < -0.1
    x_plus = float(x_all[plus].mean())
    x_minus = float(x_all[minus].mean())
    y_center = float(np.concatenate([y_all[plus], y_all[minus]]).mean())
    dev = max(abs(x_plus - pred.x_center), abs(x_minus + pred.x_center),
              abs(y_center - pred.y_center))
    ok = dev < 0.1
    assert report("4b fig3 Bloch centers", ok,
                  f"dwell centers X = {x_plus:+.3f}/{x_minus:+.3f} (target +-{pred.x_center:.3f}), "
                  f"Y = {y_center:.3f} (target {pred.y_center:.3f}); max dev {dev:.3f} (< 0.1)")


# ---------------------------------------------------------------------------

FIG2_TRAJ = dict(**FIG2, fock_cutoff=40, t_final=100.0, n_traj=100)


def _attractor_counts(recs):
    labels = [classify_attractor(r) for r in recs]
    return labels.count(1), labels.count(-1), labels.count(0)


def test_criterion_5_contextual_attractor_statistics():
    results = []
    ok_all = True

    recs = run_ensemble(SimParams(**FIG2_TRAJ, seed=1000),
                        DetectionConfig(mode="homodyne", theta=0.0), batch_size=100)
    n_plus, n_minus, n_unres = _attractor_counts(recs)
    frac = n_plus / 100.0
    ok = n_unres == 0 and 0.35 <= frac <= 0.65
    ok_all &= ok
    # an unresolved trajectory that visited both poles inside the window is a
    # rare genuine attractor switch caught in transit, not a failure to relax
    in_transit = sum(
        1 for r in recs
        if classify_attractor(r) == 0
        and r.x[r.times >= r.times[-1] - 10.0].max() > 0.9
        and r.x[r.times >= r.times[-1] - 10.0].min() < -0.9
    )
    results.append(f"theta=0: {n_plus}+/{n_minus}-/{n_unres}? frac {frac:.2f}"
                   + (f" ({in_transit} caught mid-switch)" if n_unres else ""))

    recs = run_ensemble(SimParams(**FIG2_TRAJ, seed=2000),
                        DetectionConfig(mode="homodyne", theta=2 * math.pi / 3), batch_size=100)
    n_plus, n_minus, n_unres = _attractor_counts(recs)
    consensus = max(n_plus, n_minus)
    ok = consensus >= 90
    ok_all &= ok
    results.append(f"theta=2pi/3: consensus {consensus}/100")

    recs = run_ensemble(SimParams(**FIG2_TRAJ, seed=3000),
                        DetectionConfig(mode="homodyne", theta=math.pi / 2), batch_size=100)
    worst_x = max(float(np.abs(r.x).max()) for r in recs)
    ok = worst_x < 0.05
    ok_all &= ok
    results.append(f"theta=pi/2: max|X| {worst_x:.1e}")

    recs = run_ensemble(SimParams(**FIG2_TRAJ, seed=4000),
                        DetectionConfig(mode="heterodyne"), batch_size=100)
    n_plus, n_minus, n_unres = _attractor_counts(recs)
    frac = n_plus / 100.0
    ok = n_unres == 0 and 0.35 <= frac <= 0.65
    ok_all &= ok
    results.append(f"heterodyne: {n_plus}+/{n_minus}-/{n_unres}? frac {frac:.2f}")

    assert report("5 contextual attractor statistics", ok_all, "; ".join(results))


def test_criterion_6_unraveling_consistency():
    cutoff = 10
    rates = dict(g=1.0, kappa=1.0, gamma=1.0, epsilon=2.0)
    space = build_space(cutoff)
    liou = liouvillian(space, **rates)
    _, _, sz = atom_ops(space)
    dt = 0.002
    checkpoints = np.arange(1, 21) * 0.5
    rho0 = vacuum_ground(space).density_matrix()
    me_sz = evolve_me_expectations(liou, rho0, dt, checkpoints, [sz]).real[:, 0]

    params = SimParams(**rates, fock_cutoff=cutoff, t_final=10.0, n_traj=200, dt=dt)
    stride = int(round(0.5 / dt))
    ok_all = True
    results = []
    for label, det, seed in [
        ("homodyne theta=0", DetectionConfig(mode="homodyne", theta=0.0, atomic_counting=True), 6000),
        ("homodyne theta=pi/2", DetectionConfig(mode="homodyne", theta=math.pi / 2, atomic_counting=True), 7000),
        ("heterodyne", DetectionConfig(mode="heterodyne", atomic_counting=True), 8000),
    ]:
        recs = run_ensemble(params, det, seed_base=seed, batch_size=200, record_stride=stride)
        rows = np.round(checkpoints / (stride * dt)).astype(int)
        z_mat = np.stack([r.z[rows] for r in recs])
        mean = z_mat.mean(axis=0)
        se = z_mat.std(axis=0, ddof=1) / math.sqrt(len(recs))
        pulls = np.abs(mean - me_sz) / np.maximum(se, 1e-12)
        ok = bool(np.all(pulls <= 3.0))
        ok_all &= ok
        results.append(f"{label}: max pull {pulls.max():.2f} sigma")
    assert report("6 unraveling consistency", ok_all, "; ".join(results))


def test_criterion_7_conditional_cat_states():
    snap_times = tuple(np.arange(5.0, 100.1, 5.0))
    params = SimParams(**FIG3, fock_cutoff=35, t_final=100.0, seed=500)
    det = DetectionConfig(mode="homodyne", theta=math.pi / 2, bandwidth_B=0.5)
    rec = run_trajectory(params, det, snapshot_times=snap_times)
    min_w = np.inf
    for _, state in rec.snapshots:
        w = wigner(reduced_field(state), GRID, GRID)
        min_w = min(min_w, float(w.values.min()))
    fringes_ok = min_w < -0.01

    ens = run_ensemble(SimParams(**FIG3, fock_cutoff=35, t_final=60.0, n_traj=50, seed=600),
                       det, snapshot_times=(60.0,), batch_size=50)
    avg_field = np.mean([reduced_field(r.snapshots[0][1]).matrix for r in ens], axis=0)
    from sgqed.hilbert import DensityMatrix
    w_avg = wigner(DensityMatrix(avg_field), GRID, GRID)
    avg_min = float(w_avg.values.min())
    mixture_ok = avg_min > -0.005

    # companion: the exact ensemble average (the stationary state; the ME has
    # relaxed to it at t = 60 within e^{-0.114*60} ~ 1e-3) is fringe-free
    _, rho_ss, _ = solve_ss(35, **FIG3)
    w_exact = wigner(reduced_field(rho_ss), GRID, GRID)
    exact_min = float(w_exact.values.min())
    assert exact_min > -0.005, "exact ensemble average should carry no fringes"

    report("7 conditional cat states", fringes_ok and mixture_ok,
           f"deepest conditioned fringe {min_w:.3f} (< -0.01 required); "
           f"50-seed ensemble-average min W {avg_min:.4f} (> -0.005 required); "
           f"exact ensemble average min W {exact_min:.5f}")
    assert fringes_ok
    assert mixture_ok, (
        f"a 50-seed empirical average retains residual fringes at the "
        f"(depth)/sqrt(N) sampling floor ~ -0.07 (measured {avg_min:.4f}); the "
        f"exact ensemble average is fringe-free (min W {exact_min:.5f}); "
        f"-0.005 would need ~1e4 seeds; see notes/decisions.md"
    )


def test_criterion_8_waiting_time_statistics():
    results = []
    ok_all = True

    # (a) g = 0 exact match, then g/gamma = 0.1: finite deviations with the
    # oscillation minima displaced to larger tau (a slightly larger period)
    tau = np.arange(0.0, 1.0 + 1e-12, 0.0005)
    space_g0 = build_space(2)
    w_g0 = waiting_time_density(space_g0, SimParams(g=0.0, **FIG4, fock_cutoff=2), tau)
    ref = rf_reference_wtd(FIG4["gamma"], FIG4["epsilon"], tau)
    dev_g0 = float(np.max(np.abs(w_g0.values - ref.values))) / float(ref.values.max())
    space_a = build_space(20)
    w_a = waiting_time_density(space_a, SimParams(g=0.5, **FIG4, fock_cutoff=20), tau)
    dev_a = float(np.max(np.abs(w_a.values - ref.values))) / float(ref.values.max())

    def interior_minima(vals, t, n):
        out = []
        for i in range(2, len(t) - 2):
            if vals[i] < vals[i - 1] and vals[i] < vals[i + 1]:
                out.append(t[i])
        return np.array(out[:n])

    minima_a = interior_minima(w_a.values, tau, 4)
    ref_zeros = 4 * math.pi * np.arange(1, 5) / math.sqrt(
        16 * FIG4["epsilon"] ** 2 - FIG4["gamma"] ** 2)
    shift = float(np.sum(minima_a - ref_zeros))
    ok_a = dev_g0 < 0.02 and dev_a > 1e-3 and np.all(minima_a >= ref_zeros) and shift > 0
    ok_all &= ok_a
    results.append(f"(a) g=0 dev {dev_g0:.1e} of peak; g/gamma=0.1 dev {dev_a:.1e}, "
                   f"minima shifted by {(minima_a - ref_zeros).round(5).tolist()}")

    # (b) g/gamma = 1: the density never reaches zero (w(0) = 0 identically
    # for any collapse model, so the statement concerns tau > 0)
    space_b = build_space(20)
    params_b = SimParams(g=5.0, **FIG4, fock_cutoff=20)
    liou_b = liouvillian(build_space(20), 5.0, 1.0, FIG4["gamma"], FIG4["epsilon"])
    rho_b = steady_state(liou_b)
    sm, sp_, _ = atom_ops(space_b)
    rate_b = FIG4["gamma"] * expectation(rho_b, sp_ @ sm).real
    tau_b = np.arange(0.0, 20.0 / rate_b, 0.002)
    w_b = waiting_time_density(space_b, params_b, tau_b, rho_ss=rho_b)
    positive_min = float(w_b.values[1:].min())
    dip = float(interior_minima(w_b.values, tau_b, 1)[0]) if len(
        interior_minima(w_b.values, tau_b, 1)) else np.nan
    dip_val = float(np.interp(dip, tau_b, w_b.values))
    ok_b = positive_min > 0.0
    ok_all &= ok_b
    results.append(f"(b) g/gamma=1 min w(tau>0) {positive_min:.2e} > 0, "
                   f"first dip {dip_val:.2f} = {dip_val / w_b.values.max():.0%} of peak")

    # (c) single-trajectory histogram over 1e4 lifetimes vs w(tau), chi^2 at 99%
    params_t = SimParams(g=0.5, **FIG4, fock_cutoff=24, t_final=10_000.0, seed=800)
    det = DetectionConfig(mode="heterodyne", atomic_counting=True)
    rec = run_trajectory(params_t, det, record_stride=4000)
    waits = np.diff(rec.clicks)
    space_c = build_space(24)
    tau_c = np.arange(0.0, 2.0 + 1e-12, 0.004)
    w_c = waiting_time_density(space_c, SimParams(g=0.5, **FIG4, fock_cutoff=24), tau_c)
    bin_w = 0.02
    edges = np.arange(0.0, 1.2 + bin_w, bin_w)
    counts, _ = np.histogram(waits, bins=edges)
    dense = np.interp(0.5 * (edges[:-1] + edges[1:]), tau_c, w_c.values)
    expected = dense * bin_w * len(waits)
    mask = expected >= 20.0
    chi2_stat = float(np.sum((counts[mask] - expected[mask]) ** 2 / expected[mask]))
    dof = int(mask.sum()) - 1
    chi2_crit = float(chi2.ppf(0.99, dof))
    ok_c = chi2_stat < chi2_crit
    ok_all &= ok_c
    results.append(f"(c) {len(waits)} waits, chi2 {chi2_stat:.1f} < {chi2_crit:.1f} "
                   f"(99%, dof {dof})")

    # (d) empirical mean waiting time vs 1/(gamma <sp sm>_ss), 3 standard errors
    space_d = build_space(24)
    liou_d = liouvillian(space_d, 0.5, 1.0, FIG4["gamma"], FIG4["epsilon"])
    rho_d = steady_state(liou_d)
    sm_d, sp_d, _ = atom_ops(space_d)
    ref_mean = 1.0 / (FIG4["gamma"] * expectation(rho_d, sp_d @ sm_d).real)
    se = waits.std(ddof=1) / math.sqrt(len(waits))
    pull = abs(waits.mean() - ref_mean) / se
    ok_d = pull <= 3.0
    ok_all &= ok_d
    results.append(f"(d) mean wait {waits.mean():.4f} vs {ref_mean:.4f} "
                   f"({pull:.2f} sigma)")

    assert report("8 waiting-time statistics", ok_all, "; ".join(results))


def test_criterion_9_secular_ansatz_residuals():
    space = build_space(35)
    g = FIG2["g"]
    r_up = verify_secular_ansatz(space, g, 1.0, g / 2, "up")
    r_down = verify_secular_ansatz(space, g, 1.0, -g / 2, "down")
    r_off = verify_secular_ansatz(space, g, 1.0, g / 2 + 1.0, "up")
    ok = r_up < 1e-6 and r_down < 1e-6 and r_off > 0.1
    assert report("9 secular ansatz", ok,
                  f"matched residuals {r_up:.1e}/{r_down:.1e} (< 1e-6), "
                  f"offset residual {r_off:.3f} (> 0.1)")


def test_criterion_10_rabi_limit():
    eps = 2.0
    params = SimParams(g=0.0, gamma=0.0, epsilon=eps, fock_cutoff=1,
                       t_final=5 * math.pi / eps, dt=0.001 / (2 * eps))
    rec = run_trajectory(params, DetectionConfig(mode="none"), record_stride=10)
    dev = float(np.max(np.abs(rec.z + np.cos(2 * eps * rec.times))))
    assert report("10 Rabi limit", dev < 1e-3,
                  f"max |Z + cos(2 eps t)| = {dev:.2e} over 5 periods (< 1e-3)")

//! Acceptance criteria 1 to 12. Each test prints one `PASS`/`FAIL` line
//! before asserting. Run with `--nocapture` to see the lines.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use nonlocal::asymptotics::large_q_grid;
use nonlocal::grid::{erf, evenness_violation};
use nonlocal::physical::one_sided_slopes;
use nonlocal::regime::QcrEstimate;
use nonlocal::*;
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

fn verdict(n: u32, title: &str, pass: bool, detail: String) {
    println!("criterion {n:>2} [{}] {title}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} failed: {detail}");
}

fn half_grid() -> Grid {
    make_grid(-10.0, 0.0, 1001).unwrap()
}

fn qcr(model: Model) -> &'static QcrEstimate {
    static FERM1: OnceLock<QcrEstimate> = OnceLock::new();
    static FERM2: OnceLock<QcrEstimate> = OnceLock::new();
    let (cell, lo, hi) = match model {
        Model::Ferm1 => (&FERM1, 1.0, 1.8),
        _ => (&FERM2, 1.5, 3.0),
    };
    cell.get_or_init(|| find_qcr(model, lo, hi, &IterationConfig::default(), 6).unwrap())
}

#[test]
fn criterion_01_kink_existence() {
    let start = Instant::now();
    let r = solve_padic(&IterationConfig::default().with_max_steps(500)).unwrap();
    let elapsed = start.elapsed();
    let phi = &r.final_field;
    let parity = parity_violation(phi).unwrap();
    let left = (phi.value(0) - 1.0).abs();
    let right = (phi.value(phi.len() - 1) + 1.0).abs();
    let pass = r.converged()
        && r.steps_taken <= 500
        && r.residual < 1e-6
        && parity < 1e-8
        && left < 1e-3
        && right < 1e-3
        && elapsed < Duration::from_secs(10);
    verdict(
        1,
        "p-adic kink",
        pass,
        format!(
            "{} after {} steps, residual {:.2e}, parity {:.1e}, edge errors {:.1e}/{:.1e}, {:.2?}",
            r.terminated_by, r.steps_taken, r.residual, parity, left, right, elapsed
        ),
    );
}

#[test]
fn criterion_02_first_iterate() {
    let cfg = IterationConfig { max_steps: 1, record_every: 1, ..IterationConfig::default() };
    let r = solve_padic(&cfg).unwrap();
    let phi1 = &r.snapshots.iter().find(|(n, _)| *n == 1).unwrap().1;
    let dist = (1..phi1.len() - 1).map(|i| (phi1.value(i) - cbrt_signed(-erf(phi1.t(i)))).abs()).fold(0.0, f64::max);
    verdict(2, "first iterate is cbrt(-erf)", dist < 1e-7, format!("sup distance {dist:.2e}"));
}

#[test]
fn criterion_03_proof_constant() {
    let start = Instant::now();
    let d = deviation_profile(&IterationConfig::new(half_grid())).unwrap();
    let elapsed = start.elapsed();
    let pass = d.delta_max > 0.0 && d.delta_max < 0.05 && elapsed < Duration::from_secs(5);
    verdict(3, "deviation bound", pass, format!("delta_max {:.6}, {elapsed:.2?}", d.delta_max));
}

#[test]
fn criterion_04_geometric_convergence() {
    let cfg = IterationConfig { max_steps: 30, step_tol: f64::MIN_POSITIVE, ..IterationConfig::new(half_grid()) };
    let r = solve_padic_half(&cfg).unwrap();
    let fit = geometric_fit(&r.step_diffs[4..30]).unwrap();
    verdict(
        4,
        "half-axis geometric convergence",
        fit.ratio <= 0.5,
        format!("fitted ratio {:.4} over steps 5-30 ({} diffs)", fit.ratio, r.step_diffs.len()),
    );
}

#[test]
fn criterion_05_regimes() {
    let start = Instant::now();
    let mut labels = Vec::new();
    let mut pass = true;
    for (q2, want) in [
        (0.96, RegimeKind::Interpolating),
        (1.0, RegimeKind::Interpolating),
        (1.4, RegimeKind::Periodic),
        (1.8, RegimeKind::Periodic),
    ] {
        let r = solve_ferm1(&IterationConfig::default().with_q_squared(q2).with_max_steps(2000)).unwrap();
        let got = classify(&r).kind;
        pass &= got == want;
        labels.push(format!("{q2}: {got}"));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(60);
    verdict(5, "single-equation regimes", pass, format!("{}, {elapsed:.2?}", labels.join(", ")));
}

#[test]
fn criterion_06_critical_single() {
    let start = Instant::now();
    let est = qcr(Model::Ferm1);
    let elapsed = start.elapsed();
    let pass = (1.25..=1.55).contains(&est.q_squared) && elapsed < Duration::from_secs(600);
    verdict(
        6,
        "critical q^2, single equation",
        pass,
        format!("{:.4} in bracket [{:.4}, {:.4}], {elapsed:.2?}", est.q_squared, est.bracket.0, est.bracket.1),
    );
}

#[test]
fn criterion_07_critical_system() {
    let start = Instant::now();
    let est = qcr(Model::Ferm2);
    let elapsed = start.elapsed();
    let pass = (2.0..=2.5).contains(&est.q_squared) && elapsed < Duration::from_secs(600);
    verdict(
        7,
        "critical q^2, system",
        pass,
        format!("{:.4} in bracket [{:.4}, {:.4}], {elapsed:.2?}", est.q_squared, est.bracket.0, est.bracket.1),
    );
}

fn q0(model: CharModel) -> &'static DoubleRoot {
    static FERM1: OnceLock<DoubleRoot> = OnceLock::new();
    static FERM2: OnceLock<DoubleRoot> = OnceLock::new();
    let cell = if model == CharModel::Ferm1 { &FERM1 } else { &FERM2 };
    cell.get_or_init(|| find_q0(model).unwrap())
}

#[test]
fn criterion_08_spectral_thresholds() {
    let start = Instant::now();
    let (a, b) = (q0(CharModel::Ferm1), q0(CharModel::Ferm2));
    let elapsed = start.elapsed();
    let res = |m, r: &DoubleRoot| char_value(m, Complex64::new(r.omega0, 0.0), r.q0_squared).norm();
    let (ra, rb) = (res(CharModel::Ferm1, a), res(CharModel::Ferm2, b));
    let pass = (a.q0_squared - 1.77).abs() <= 0.02
        && (b.q0_squared - 3.05).abs() <= 0.02
        && ra < 1e-10
        && rb < 1e-10
        && elapsed < Duration::from_secs(1);
    verdict(
        8,
        "double-root thresholds",
        pass,
        format!("ferm1 {:.6} (|f| {ra:.1e}), ferm2 {:.6} (|f| {rb:.1e}), {elapsed:.2?}", a.q0_squared, b.q0_squared),
    );
}

#[test]
fn criterion_09_threshold_ordering() {
    let (s1, s2) = (qcr(Model::Ferm1), qcr(Model::Ferm2));
    let (a, b) = (q0(CharModel::Ferm1), q0(CharModel::Ferm2));
    let pass = a.q0_squared > s1.bracket.1 && b.q0_squared > s2.bracket.1;
    verdict(
        9,
        "q0^2 above critical bracket",
        pass,
        format!("ferm1 {:.4} > {:.4}, ferm2 {:.4} > {:.4}", a.q0_squared, s1.bracket.1, b.q0_squared, s2.bracket.1),
    );
}

#[test]
fn criterion_10_system_shape() {
    let cfg = IterationConfig::default().with_q_squared(q_string_squared());
    let (r, state) = solve_ferm2(&cfg).unwrap();
    let sigma = &state.sigma;
    let even = evenness_violation(sigma).unwrap();
    let edges = [(sigma.value(0) - 1.0).abs(), (sigma.value(sigma.len() - 1) - 1.0).abs()];
    let jump = state.phi.jump().map_or(0.0, |j| (j.left - j.right).abs());
    let psi = smooth_field(&state.phi).unwrap();
    let (l, rt) = one_sided_slopes(&psi).unwrap();
    let pass =
        r.converged() && even < 1e-10 && edges[0] <= 1e-2 && edges[1] <= 1e-2 && jump > 0.1 && (l - rt).abs() < 1e-6;
    verdict(
        10,
        "two-field solution shape",
        pass,
        format!(
            "{} in {} steps, sigma evenness {even:.1e}, sigma edge errors {:.1e}/{:.1e}, phi jump {jump:.4}, smoothed slope mismatch {:.1e}",
            r.terminated_by,
            r.steps_taken,
            edges[0],
            edges[1],
            (l - rt).abs()
        ),
    );
}

#[test]
fn criterion_11_kernel_invariants() {
    let g = Grid::standard();
    let mut constants: f64 = 0.0;
    for spec in [KernelSpec::gauss(10.0), KernelSpec::ferm(0.96, 10.0), KernelSpec::ferm(2.0, 10.0)] {
        for c in [-1.0, 0.5, 1.0] {
            let out = convolve(&spec, &Field::constant(g, c).unwrap()).unwrap();
            constants = out.values().iter().fold(constants, |m, v| m.max((v - c).abs()));
        }
    }

    let mut runner = TestRunner::new(Config { cases: 10_000, failure_persistence: None, ..Config::default() });
    let spec = KernelSpec::half_axis(10.0);
    let positive = runner
        .run(&(-10.0..-1e-6_f64, -10.0..-1e-6_f64), |(t, s)| {
            prop_assert!(kernel_weight(&spec, t, s) > 0.0);
            Ok(())
        })
        .is_ok();

    let step = sample_profile(SeedKind::NegStep.into(), &g);
    let k_step = convolve(&KernelSpec::gauss(10.0), &step).unwrap();
    let erf_gap = (0..g.n_points()).map(|i| (k_step.value(i) + erf(g.node(i))).abs()).fold(0.0, f64::max);

    // fields flat at the edges, where constant continuation is exact
    let kink = solve_padic(&IterationConfig::default()).unwrap().final_field;
    let mut semigroup: f64 = 0.0;
    for f in [step.clone(), sample_profile(SeedKind::NegErf.into(), &g), kink] {
        let twice = smooth_field(&smooth_field(&f).unwrap()).unwrap();
        let once = convolve(&KernelSpec::gauss(10.0), &f).unwrap();
        semigroup = semigroup.max(sup_diff(&twice, &once).unwrap());
    }

    let pass = constants < 1e-10 && positive && erf_gap < 1e-8 && semigroup < 1e-8;
    verdict(
        11,
        "kernel invariants",
        pass,
        format!(
            "constants {constants:.1e}, K_- positive on 10^4 pairs: {positive}, erf identity {erf_gap:.1e}, semigroup {semigroup:.1e}"
        ),
    );
}

#[test]
fn criterion_12_large_q_limit() {
    let start = Instant::now();
    let run = |q2: f64| large_q_comparison(q2, &IterationConfig::new(large_q_grid(q2).unwrap())).unwrap();
    let (c25, c100) = (run(25.0), run(100.0));
    let elapsed = start.elapsed();
    let pass =
        c25.period_mismatch < 0.1 && c100.period_mismatch < c25.period_mismatch && elapsed < Duration::from_secs(300);
    verdict(
        12,
        "large-q oscillator limit",
        pass,
        format!(
            "q^2=25: period {:.4} vs orbit {:.4} at amplitude {:.3} (mismatch {:.3}); q^2=100: period {:.4} vs orbit {:.4} at amplitude {:.3} (mismatch {:.3}); {elapsed:.2?}",
            c25.measured_period,
            c25.orbit.period.unwrap_or(f64::NAN),
            c25.amplitude,
            c25.period_mismatch,
            c100.measured_period,
            c100.orbit.period.unwrap_or(f64::NAN),
            c100.amplitude,
            c100.period_mismatch
        ),
    );
}

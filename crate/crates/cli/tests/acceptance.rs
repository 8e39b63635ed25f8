//! Acceptance suite. Each test checks one criterion end to end and prints a single
//! `PASS` or `FAIL` line with the measured quantities before asserting.
//!
//! Run with `cargo test -p mbseq-cli --test acceptance -- --nocapture --test-threads 1`.

use std::time::Instant;

use mbseq::analysis::{
    discs_contain, gershgorin_discs, gram_and_coherence, recover_message, recovery_condition,
    snr_ratio,
};
use mbseq::bases::{band_geometry, dpss, fourier_band, message_only_geometry, prolate_matrix};
use mbseq::numerics::{
    condition_number, sym_eig, Complex64, ComplexVector, RankMode, DEFAULT_RANK_TOL,
};
use mbseq::oracle::{exhaustive_single, reference_single_sdp};
use mbseq::rounding::{candidate_rng, quantize, round, CandidateEvaluator, Projector};
use mbseq::sdp::{build_single_sdp, solve, CoherenceConvention, Sense};
use mbseq::{
    design_single, hadamard_set, prbs_set, BasisKind, BinarySequence, GridSpec, PowerBound,
    RealSymMatrix, SdpProblem, SolveStatus, SolverOptions,
};
use mbseq_cli::config::{Baseline, RunConfig};
use mbseq_cli::experiments::{run_gain, run_sweep, SweepRow};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {id} ({name}): {} | {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

/// Adjacent pairs of `xs` for which `ok(prev, next)` fails.
fn violations(xs: &[f64], ok: impl Fn(f64, f64) -> bool) -> usize {
    xs.windows(2).filter(|w| !ok(w[0], w[1])).count()
}

fn fmt_list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.3}")).collect();
    format!("[{}]", parts.join(", "))
}

fn desk_config(json: &str) -> RunConfig {
    RunConfig::from_json(json).expect("acceptance configs are valid")
}

fn sweep(json: &str) -> Vec<SweepRow> {
    run_sweep(&desk_config(json), None).expect("sweep runs")
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_1_oracle_equivalence() {
    let start = Instant::now();
    let alphas = [0.3, 0.5, 1.0];
    let grid = GridSpec::new(8, 1).unwrap();
    let bound = std::f64::consts::FRAC_PI_2 - 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut instances, mut redrawn, mut dominated, mut ratio_ok) = (0, 0, 0, 0);
    let mut worst_gap = f64::INFINITY;
    while instances < 100 {
        let alpha = alphas[instances % alphas.len()];
        let geo = band_geometry(grid, rng.random_range(2..=7), BasisKind::Fourier).unwrap();
        let (message, interferer) = (geo.message, geo.interferer);
        let exact = exhaustive_single(&message, &interferer, alpha).unwrap();
        if exact.feasible_count == 0 {
            redrawn += 1;
            continue;
        }
        let problem = build_single_sdp(&message, &interferer, alpha).unwrap();
        let relaxed = solve(&problem, &SolverOptions::default()).unwrap();
        let gap = relaxed.objective - exact.best_objective;
        worst_gap = worst_gap.min(gap);
        if gap >= -1e-6 {
            dominated += 1;
        }
        let (s, _) = design_single(
            &message,
            &interferer,
            PowerBound(alpha),
            1000,
            instances as u64,
            &SolverOptions::default(),
        )
        .unwrap();
        if let Some(s) = s {
            let achieved = message.energy(&s.to_f64());
            if achieved / relaxed.objective >= bound {
                ratio_ok += 1;
            }
        }
        instances += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = dominated == 100 && ratio_ok >= 95 && secs <= 300.0;
    report(
        1,
        "oracle equivalence",
        pass,
        &format!(
            "relaxation >= exhaustive on {dominated}/100 (worst gap {worst_gap:.2e}), ratio >= pi/2-1 on \
             {ratio_ok}/100, {redrawn} infeasible instances redrawn, {secs:.1} s"
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------

/// Fraction of pairs of identity-projected candidates with `|s_i^T s_j| >= alpha n`.
fn tail_rate(n: usize, alpha: f64, pairs: usize, seed: u64) -> f64 {
    let eig = sym_eig(&RealSymMatrix::identity(n)).unwrap();
    let projector = Projector::new(&eig);
    let draw = |l: usize| quantize(&projector.draw(&mut candidate_rng(seed, 0, l))).to_f64();
    let threshold = alpha * n as f64;
    let hits = (0..pairs)
        .filter(|&p| {
            let (a, b) = (draw(2 * p), draw(2 * p + 1));
            let ip: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
            ip.abs() >= threshold
        })
        .count();
    hits as f64 / pairs as f64
}

#[test]
fn criterion_2_rademacher_tail() {
    let start = Instant::now();
    let alpha = 0.4;
    let bound = 2.0 * (-0.5 * alpha * alpha * 30.0f64).exp();
    let rate30 = tail_rate(30, alpha, 100_000, 2);
    let rates: Vec<f64> = [1, 2, 4]
        .iter()
        .map(|&r| tail_rate(30 * r, alpha, 100_000, 3))
        .collect();
    let secs = start.elapsed().as_secs_f64();
    let monotone = violations(&rates, |a, b| b < a) == 0;
    let pass = rate30 <= bound && monotone && secs <= 60.0;
    report(
        2,
        "Rademacher tail",
        pass,
        &format!(
            "P(|s_i^T s_j| >= 12) = {rate30:.4} <= {bound:.4}; rate for R = 1, 2, 4: {}; {secs:.1} s",
            fmt_list(&rates)
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_3_oversampling_trend() {
    let start = Instant::now();
    let rows = sweep(
        r#"{"N":15,"R":1,"alpha":0.4,"L":2000,"c":"random","seed":3,
            "sweep":{"parameter":"R","values":[1,2,4,6,8],"trials":10}}"#,
    );
    let secs = start.elapsed().as_secs_f64();
    let infeasible_r1 = rows[0].trials.iter().filter(|t| !t.completed).count();
    let power: Vec<f64> = rows[1..].iter().map(SweepRow::power_db_feasible).collect();
    let kappa: Vec<f64> = rows[1..].iter().map(SweepRow::condition_feasible).collect();
    let feasible: Vec<f64> = rows.iter().map(SweepRow::feasible_fraction).collect();
    let pv = violations(&power, |a, b| b < a);
    let kv = violations(&kappa, |a, b| b >= a);
    let pass = infeasible_r1 >= 8 && pv <= 1 && kv <= 1 && secs <= 1800.0;
    report(
        3,
        "oversampling trend",
        pass,
        &format!(
            "R = 1 infeasible in {infeasible_r1}/10; feasible fraction {}; R >= 2 power dB {} ({pv} violations), \
             condition {} ({kv} violations); {secs:.0} s",
            fmt_list(&feasible),
            fmt_list(&power),
            fmt_list(&kappa)
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_4_tolerance_tradeoff() {
    let mut pass = true;
    let mut details = Vec::new();
    for r in [2, 4] {
        let rows = sweep(&format!(
            r#"{{"N":15,"R":{r},"alpha":0.4,"L":2000,"c":"random","seed":4,
                "sweep":{{"parameter":"alpha","values":[0.1,0.2,0.4,0.7,1.0],"trials":10}}}}"#
        ));
        let feasible: Vec<f64> = rows.iter().map(SweepRow::feasible_fraction).collect();
        let points: Vec<&SweepRow> = rows
            .iter()
            .filter(|row| row.feasible_fraction() > 0.0)
            .collect();
        let power: Vec<f64> = points.iter().map(|row| row.power_db_feasible()).collect();
        let kappa: Vec<f64> = points.iter().map(|row| row.condition_feasible()).collect();
        let pv = violations(&power, |a, b| b < a);
        let kv = violations(&kappa, |a, b| b > a);
        let mut ok = pv <= 1 && kv <= 1;
        if r == 2 {
            ok &= feasible[0] < 0.5;
        }
        pass &= ok;
        details.push(format!(
            "R = {r}: feasible {}, power dB {} ({pv} violations), condition {} ({kv} violations)",
            fmt_list(&feasible),
            fmt_list(&power),
            fmt_list(&kappa)
        ));
    }
    report(4, "tolerance trade-off", pass, &details.join("; "));
    assert!(pass);
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_5_projection_count() {
    let rows = sweep(
        r#"{"N":15,"R":4,"alpha":0.4,"c":"random","seed":5,
            "sweep":{"parameter":"L","values":[10,100,1000,10000],"trials":10}}"#,
    );
    let feasible: Vec<f64> = rows.iter().map(SweepRow::feasible_fraction).collect();
    let power: Vec<f64> = rows.iter().map(SweepRow::power_db_raw).collect();
    let spread: Vec<f64> = rows.iter().map(SweepRow::condition_spread).collect();
    let fv = violations(&feasible, |a, b| b >= a);
    // Infinite means compare equal, which counts as nonincreasing.
    let pv = violations(&power, |a, b| {
        b <= a || (a.is_infinite() && b.is_infinite())
    });
    let spread_ok = spread[3] <= spread[1];
    let pass = fv == 0 && pv == 0 && spread_ok;
    report(
        5,
        "projection count",
        pass,
        &format!(
            "feasible {}, power dB {}, condition spread {}",
            fmt_list(&feasible),
            fmt_list(&power),
            fmt_list(&spread)
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_6_gain_profiles() {
    let cfg = desk_config(r#"{"N":15,"R":4,"alpha":0.4,"L":2000,"c":"random","seed":6}"#);
    let prbs = run_gain(&cfg, Some(Baseline::Prbs), Some(10)).unwrap();
    let fourier = run_gain(&cfg, Some(Baseline::MultiFourier), Some(10)).unwrap();
    let slepian = run_gain(&cfg, Some(Baseline::MultiSlepian), Some(10)).unwrap();

    let prbs_db = prbs.mean_gain_db();
    let prbs_dev = prbs_db.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let f_mid = fourier.gain_db_at(0.5);
    let f_edges = fourier.gain_db_at(0.0).max(fourier.gain_db_at(1.0));
    let inner: Vec<f64> = slepian
        .offsets
        .iter()
        .zip(slepian.mean_gain_db())
        .filter(|(d, _)| (0.1..=0.9).contains(*d))
        .map(|(_, g)| g)
        .collect();
    let s_max = inner.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s_min = inner.iter().copied().fold(f64::INFINITY, f64::min);
    let s_mean = inner.iter().sum::<f64>() / inner.len() as f64;
    let used = |g: &mbseq_cli::experiments::GainResult| g.usable.iter().filter(|u| **u).count();

    let prbs_ok = prbs_dev <= 1.5;
    let fourier_ok = f_edges <= f_mid - 10.0;
    let slepian_ok = s_max - s_min <= 6.0 && s_mean <= f_mid;
    let pass = prbs_ok && fourier_ok && slepian_ok;
    report(
        6,
        "gain profiles",
        pass,
        &format!(
            "prbs max |gain| {prbs_dev:.2} dB; multi_fourier edges {f_edges:.1} dB vs mid {f_mid:.1} dB \
             ({} sets); multi_slepian inner spread {:.1} dB, mean {s_mean:.1} dB ({} sets)",
            used(&fourier),
            s_max - s_min,
            used(&slepian)
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------

fn random_sequence(rng: &mut ChaCha8Rng, n: usize) -> BinarySequence {
    BinarySequence::new(
        (0..n)
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect(),
    )
    .unwrap()
}

fn random_complex(rng: &mut ChaCha8Rng, n: usize) -> ComplexVector {
    ComplexVector::from_fn(n, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Band energy of `v` in `[-w, w]` by composite Simpson integration of its DTFT.
fn band_energy_numeric(v: &[f64], w: f64, panels: usize) -> f64 {
    let h = 2.0 * w / panels as f64;
    let spectrum = |f: f64| {
        let (mut re, mut im) = (0.0, 0.0);
        for (k, &x) in v.iter().enumerate() {
            let phase = -2.0 * std::f64::consts::PI * f * k as f64;
            re += x * phase.cos();
            im += x * phase.sin();
        }
        re * re + im * im
    };
    let mut acc = spectrum(-w) + spectrum(w);
    for i in 1..panels {
        acc += spectrum(-w + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

#[test]
fn criterion_7_structural_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures: Vec<String> = Vec::new();
    let cases = 1000;

    // Gershgorin containment of the Gram spectrum.
    let mut gersh = 0;
    for _ in 0..cases {
        let (n, r) = (rng.random_range(2..=6), rng.random_range(1..=3));
        let set = prbs_set(n, r, rng.random()).unwrap();
        let q = gram_and_coherence(&set, None).unwrap().gram;
        let eig = sym_eig(&q).unwrap();
        if discs_contain(&gershgorin_discs(&q), &eig.values, 1e-9) {
            gersh += 1;
        }
    }
    if gersh < cases {
        failures.push(format!("gershgorin {gersh}/{cases}"));
    }

    // Odd-length sequences are never orthogonal.
    let mut odd = 0;
    for _ in 0..cases {
        let n = 2 * rng.random_range(0..10) + 1;
        let (a, b) = (
            random_sequence(&mut rng, n).to_f64(),
            random_sequence(&mut rng, n).to_f64(),
        );
        if a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>().abs() >= 1.0 {
            odd += 1;
        }
    }
    if odd < cases {
        failures.push(format!("odd-length parity {odd}/{cases}"));
    }

    // Hadamard sets: Q = N I exactly and kappa = 1.
    for n in [2, 4, 8, 16, 32, 64] {
        let set = hadamard_set(n).unwrap();
        let q = gram_and_coherence(&set, None).unwrap().gram;
        let exact =
            (0..n).all(|i| (0..n).all(|j| q.get(i, j) == if i == j { n as f64 } else { 0.0 }));
        let kappa = condition_number(&set.matrix(), DEFAULT_RANK_TOL, RankMode::Full).unwrap();
        if !exact || (kappa - 1.0).abs() > 1e-12 {
            failures.push(format!(
                "hadamard n = {n}: exact gram {exact}, kappa {kappa}"
            ));
        }
    }

    // DPSS orthonormality and eigenvalue-concentration match.
    let mut dpss_worst = 0.0f64;
    for (n, nw, d) in [(64, 1.0, 3), (64, 2.0, 3), (33, 1.5, 2), (100, 3.0, 5)] {
        let w = nw / n as f64;
        let basis = dpss(n, w, d).unwrap();
        let gram = basis.vectors.transpose() * &basis.vectors;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                dpss_worst = dpss_worst.max((gram[(i, j)] - target).abs());
            }
            let v: Vec<f64> = basis.vectors.column(i).iter().copied().collect();
            let quad = prolate_matrix(n, w).quadratic_form(&v);
            let integral = band_energy_numeric(&v, w, 4096);
            dpss_worst = dpss_worst
                .max((quad - basis.eigenvalues[i]).abs())
                .max((integral - basis.eigenvalues[i]).abs());
        }
        if basis.eigenvalues.windows(2).any(|p| p[1] > p[0]) {
            failures.push(format!("dpss n = {n}: eigenvalues not descending"));
        }
    }
    if dpss_worst > 1e-6 {
        failures.push(format!("dpss worst deviation {dpss_worst:.2e}"));
    }

    // Noiseless in-band recovery and the SNR bound.
    let (mut rec_worst, mut snr_bad) = (0.0f64, 0);
    for _ in 0..cases {
        let (big_n, r) = (rng.random_range(2..=8), rng.random_range(1..=3));
        let grid = GridSpec::new(big_n, r).unwrap();
        let message = message_only_geometry(grid).unwrap().message;
        let set = prbs_set(big_n, r, rng.random()).unwrap();
        let kappa = recovery_condition(&set, &message).unwrap();
        if !kappa.is_finite() {
            continue;
        }
        let m = set.matrix().map(|x| Complex64::new(x, 0.0)) * message.basis();
        let c = random_complex(&mut rng, big_n);
        let back = recover_message(&set, &message, &(&m * &c), DEFAULT_RANK_TOL).unwrap();
        rec_worst = rec_worst.max((back - &c).norm() / c.norm());
        let e = random_complex(&mut rng, big_n);
        if snr_ratio(&set, &message, &c, &e).unwrap() > kappa * (1.0 + 1e-9) {
            snr_bad += 1;
        }
    }
    if rec_worst > 1e-8 {
        failures.push(format!("recovery relative error {rec_worst:.2e}"));
    }
    if snr_bad > 0 {
        failures.push(format!("snr ratio above kappa in {snr_bad} cases"));
    }

    // Selection is independent of the worker count.
    let grid = GridSpec::new(6, 2).unwrap();
    let geo = band_geometry(grid, 3, BasisKind::Fourier).unwrap();
    let prior = vec![random_sequence(&mut rng, 12)];
    let evaluator = CandidateEvaluator::branch(
        &geo.message,
        &geo.interferer,
        &prior,
        0.5,
        CoherenceConvention::Squared,
        grid,
    )
    .unwrap();
    let factor: Vec<Vec<f64>> = (0..12)
        .map(|_| (0..12).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let cov = RealSymMatrix::from_lower_fn(12, |i, j| {
        factor[i].iter().zip(&factor[j]).map(|(a, b)| a * b).sum()
    });
    let eig = sym_eig(&cov).unwrap();
    let outcomes: Vec<_> = [1, 2, 4]
        .iter()
        .map(|&threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| round(&eig, &evaluator, 3000, 17, 1).unwrap())
        })
        .collect();
    if outcomes.windows(2).any(|p| p[0] != p[1]) {
        failures.push("rounding differs across thread counts".into());
    }

    let pass = failures.is_empty();
    report(
        7,
        "structural invariants",
        pass,
        &if pass {
            format!(
                "{cases} cases each; dpss worst deviation {dpss_worst:.1e}; recovery error {rec_worst:.1e}"
            )
        } else {
            failures.join("; ")
        },
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_8_solver_gate() {
    let c = RealSymMatrix::from_lower_fn(2, |i, j| if i == j { 0.0 } else { 1.0 });
    let mut analytic = Vec::new();
    for (sense, target) in [(Sense::Maximize, 2.0), (Sense::Minimize, -2.0)] {
        let sol = solve(
            &SdpProblem::new(c.clone(), sense, vec![]).unwrap(),
            &SolverOptions::default(),
        )
        .unwrap();
        analytic.push((sol.objective - target).abs());
    }
    let analytic_ok = analytic.iter().all(|e| *e <= 1e-6);

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    let mut compared = 0;
    while compared < 20 {
        let n = rng.random_range(4..=7);
        let grid = GridSpec::new(n, 1).unwrap();
        let picked: Vec<usize> = sample(&mut rng, n, 4).into_iter().map(|i| i + 1).collect();
        let interferer = fourier_band(&picked[..2], grid).unwrap();
        let message = fourier_band(&picked[2..], grid).unwrap();
        let alpha = rng.random_range(0.2..1.5);
        let problem = build_single_sdp(&message, &interferer, alpha).unwrap();
        let admm = solve(&problem, &SolverOptions::default()).unwrap();
        if admm.status == SolveStatus::Infeasible {
            continue;
        }
        let reference = reference_single_sdp(&problem).unwrap();
        worst = worst.max((admm.objective - reference).abs() / reference.abs().max(1e-12));
        compared += 1;
    }
    let pass = analytic_ok && worst <= 1e-4;
    report(
        8,
        "solver gate",
        pass,
        &format!(
            "analytic errors {}; worst relative gap to reference on 20 instances {worst:.2e}",
            analytic
                .iter()
                .map(|e| format!("{e:.1e}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    );
    assert!(pass);
}

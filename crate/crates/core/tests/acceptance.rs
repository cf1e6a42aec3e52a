//! Acceptance checks, one test per criterion. Each test prints a single
//! `criterion N: PASS|FAIL` line with the measured quantities before
//! asserting, so `cargo test --test acceptance -- --nocapture` gives the
//! full table.

use std::collections::HashMap;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uav_erasure::analysis::special::{lower_incomplete_gamma, regularized_lower_gamma};
use uav_erasure::analysis::{
    self, interferer_loss_factor, interferer_loss_factor_nofading, loss, AnalysisInputs, NoFadingMode,
    ReplicationExponents,
};
use uav_erasure::channel::{sample_distance, FadingModel, Geometry};
use uav_erasure::cli::{preset, SweepSpec};
use uav_erasure::energy::{n_max, EnergyProfile};
use uav_erasure::fountain::{decode, decode_probability, encode, SourceBlock};
use uav_erasure::simulator::run_many;
use uav_erasure::{ScenarioConfig, SchemeKind};

const RANDOM_ACCESS: [SchemeKind; 3] = [SchemeKind::Fountain, SchemeKind::Replication, SchemeKind::Baseline];

fn report(n: u32, ok: bool, detail: &str) {
    println!("criterion {n}: {} {detail}", if ok { "PASS" } else { "FAIL" });
}

#[derive(Clone, Copy, Debug)]
struct Point {
    sim: f64,
    hw: f64,
    analysis: f64,
}

/// Simulated and analytical MDP per grid point (in preset order) and scheme.
struct Grid {
    configs: Vec<ScenarioConfig>,
    values: HashMap<(usize, SchemeKind), Point>,
    elapsed: Duration,
}

impl Grid {
    fn at(&self, i: usize, s: SchemeKind) -> Point {
        self.values[&(i, s)]
    }

    /// Indices of the points whose config satisfies `pred`, in order.
    fn select(&self, pred: impl Fn(&ScenarioConfig) -> bool) -> Vec<usize> {
        (0..self.configs.len()).filter(|&i| pred(&self.configs[i])).collect()
    }
}

fn evaluate(configs: Vec<ScenarioConfig>) -> Grid {
    let start = Instant::now();
    let mut values = HashMap::new();
    let inputs0 = AnalysisInputs::from_config(&configs[0]).unwrap();
    let f = interferer_loss_factor(
        &inputs0.capture,
        &inputs0.geometry,
        &inputs0.fading,
        &inputs0.quadrature,
    )
    .unwrap()
    .value;
    for (i, cfg) in configs.iter().enumerate() {
        let inputs = AnalysisInputs::from_config(cfg).unwrap();
        for s in SchemeKind::ALL {
            let r = run_many(&cfg.with_scheme(s)).unwrap();
            let a = analysis::mdp(s, &inputs, f, ReplicationExponents::CopyCount);
            values.insert(
                (i, s),
                Point {
                    sim: r.mdp_estimate,
                    hw: r.half_width_95,
                    analysis: a,
                },
            );
        }
    }
    Grid {
        configs,
        values,
        elapsed: start.elapsed(),
    }
}

fn preset_grid(name: &str) -> Grid {
    let spec = SweepSpec::parse(preset(name).unwrap(), &[]).unwrap();
    evaluate(spec.points().unwrap())
}

fn fig1() -> &'static Grid {
    static G: OnceLock<Grid> = OnceLock::new();
    G.get_or_init(|| preset_grid("fig1"))
}

fn fig2() -> &'static Grid {
    static G: OnceLock<Grid> = OnceLock::new();
    G.get_or_init(|| preset_grid("fig2"))
}

fn fig3() -> &'static Grid {
    static G: OnceLock<Grid> = OnceLock::new();
    G.get_or_init(|| preset_grid("fig3"))
}

/// `a >= b` allowing for both confidence intervals.
fn geq_within_ci(a: Point, b: Point) -> bool {
    a.sim >= b.sim - (a.hw + b.hw)
}

/// `a > b` with the intervals separated.
fn gt_outside_ci(a: Point, b: Point) -> bool {
    a.sim - a.hw > b.sim + b.hw
}

#[test]
fn criterion_1_fountain_codec() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let trials = 10_000;
    let mut mismatches = 0usize;
    let mut decoded = 0usize;
    for beta in [1usize, 5, 10] {
        for eps in [0usize, 3, 5] {
            for _ in 0..trials {
                let block = SourceBlock::random(beta, 16, &mut rng).unwrap();
                let frames = encode(&block, beta + eps, &mut rng).unwrap();
                let out = decode(&frames, beta).unwrap();
                if let Some(m) = out.messages {
                    decoded += 1;
                    mismatches += (m.as_slice() != block.messages()) as usize;
                }
            }
        }
    }
    let mut worst_sigma: f64 = 0.0;
    let mut rate_ok = true;
    for beta in [1usize, 5, 10] {
        for z in [beta, beta + 2, beta + 5] {
            let p = decode_probability(z, beta, 256);
            let mut full = 0usize;
            for _ in 0..trials {
                let block = SourceBlock::random(beta, 1, &mut rng).unwrap();
                let frames = encode(&block, z, &mut rng).unwrap();
                full += decode(&frames, beta).unwrap().success as usize;
            }
            let rate = full as f64 / trials as f64;
            let sigma = (p * (1.0 - p) / trials as f64).sqrt();
            let dev = (rate - p).abs();
            if sigma > 0.0 {
                worst_sigma = worst_sigma.max(dev / sigma);
            }
            rate_ok &= dev <= 3.0 * sigma;
        }
    }
    let elapsed = start.elapsed();
    let ok = mismatches == 0 && rate_ok && elapsed < Duration::from_secs(60);
    report(
        1,
        ok,
        &format!(
            "{decoded} decodes, {mismatches} payload mismatches; worst full-rank deviation {worst_sigma:.2} sigma; {:.1} s",
            elapsed.as_secs_f64()
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_2_simulation_matches_analysis() {
    let g = fig1();
    let mut worst = (0.0, String::new());
    for i in 0..g.configs.len() {
        for s in SchemeKind::ALL {
            let p = g.at(i, s);
            let d = (p.sim - p.analysis).abs();
            if d > worst.0 {
                worst = (d, format!("{s} at p_b={}", g.configs[i].p_b));
            }
        }
    }
    let ok = worst.0 <= 0.03 && g.elapsed < Duration::from_secs(600);
    report(
        2,
        ok,
        &format!(
            "max |sim - analysis| = {:.4} ({}), limit 0.03; {:.0} s for {} points x 4 schemes x {} runs",
            worst.0,
            worst.1,
            g.elapsed.as_secs_f64(),
            g.configs.len(),
            g.configs[0].runs
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_3_scheme_ordering_against_wakeup_probability() {
    use SchemeKind::*;
    let g = fig1();
    let mut failures = Vec::new();
    for i in 0..g.configs.len() {
        let p_b = g.configs[i].p_b;
        if !geq_within_ci(g.at(i, Fountain), g.at(i, Replication)) {
            failures.push(format!("fountain < replication at p_b={p_b}"));
        }
        if !geq_within_ci(g.at(i, Replication), g.at(i, Baseline)) {
            failures.push(format!("replication < baseline at p_b={p_b}"));
        }
        if p_b <= 0.5 {
            for s in RANDOM_ACCESS {
                if !gt_outside_ci(g.at(i, s), g.at(i, TdmaBestCase)) {
                    failures.push(format!("tdma not below {s} at p_b={p_b}"));
                }
            }
        }
    }
    let mut cfg = g.configs[0].clone();
    cfg.p_b = 0.95;
    let high = evaluate(vec![cfg]);
    let tdma = high.at(0, TdmaBestCase);
    let mut best = 0.0f64;
    for s in RANDOM_ACCESS {
        best = best.max(high.at(0, s).sim);
        if !gt_outside_ci(tdma, high.at(0, s)) {
            failures.push(format!(
                "tdma not above {s} at p_b=0.95 ({:.4} vs {:.4})",
                tdma.sim,
                high.at(0, s).sim
            ));
        }
    }
    let ok = failures.is_empty();
    report(
        3,
        ok,
        &format!(
            "at p_b=0.95 tdma {:.4} vs best proposed {:.4}; violations: {failures:?}",
            tdma.sim, best
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_4_hovering_time_trends() {
    use SchemeKind::*;
    let g = fig2();
    let mut failures = Vec::new();
    let mut crossover = Vec::new();
    for eps in [1usize, 3] {
        let idx = g.select(|c| c.epsilon == eps);
        for s in RANDOM_ACCESS {
            for w in idx.windows(2) {
                if g.at(w[1], s).sim <= g.at(w[0], s).sim {
                    failures.push(format!("{s} eps={eps} not increasing at n_s={}", g.configs[w[1]].n_s));
                }
            }
        }
        for &i in &idx {
            let n_s = g.configs[i].n_s;
            let (f, r, b) = (g.at(i, Fountain), g.at(i, Replication), g.at(i, Baseline));
            if eps == 1 {
                if n_s <= 60 && f.sim >= b.sim {
                    failures.push(format!("eps=1 fountain not below baseline at n_s={n_s}"));
                }
                if (70..=90).contains(&n_s) {
                    crossover.push((n_s, f.sim - r.sim.max(b.sim).max(g.at(i, TdmaBestCase).sim)));
                }
            } else if !(f.sim > b.sim && r.sim > b.sim) {
                failures.push(format!("eps=3 proposed not above baseline at n_s={n_s}"));
            }
        }
    }
    if !crossover.iter().any(|&(_, margin)| margin > 0.0) {
        failures.push("eps=1 fountain never above all schemes for n_s in [70, 90]".into());
    }
    let ok = failures.is_empty();
    let margins: Vec<String> = crossover.iter().map(|(n, m)| format!("n_s={n}: {m:+.4}")).collect();
    report(
        4,
        ok,
        &format!(
            "eps=1 fountain margin over best other: [{}]; violations: {failures:?}",
            margins.join(", ")
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_5_node_density_trends() {
    use SchemeKind::*;
    let g = fig3();
    let mut failures = Vec::new();
    let mut rep_gap: f64 = 0.0;
    for eps in [1usize, 3] {
        let idx = g.select(|c| c.epsilon == eps);
        for s in RANDOM_ACCESS {
            for w in idx.windows(2) {
                if g.at(w[1], s).sim >= g.at(w[0], s).sim {
                    failures.push(format!("{s} eps={eps} not decreasing at n={}", g.configs[w[1]].n));
                }
            }
        }
        for &i in &idx {
            let n = g.configs[i].n;
            let (f, r, b) = (g.at(i, Fountain), g.at(i, Replication), g.at(i, Baseline));
            if eps == 3 {
                if !(f.sim > r.sim && f.sim > b.sim && f.sim > g.at(i, TdmaBestCase).sim) {
                    failures.push(format!("eps=3 fountain not strictly best at n={n}"));
                }
            } else {
                let gap = (r.sim - b.sim).abs() - (r.hw + b.hw);
                rep_gap = rep_gap.max(gap);
                if gap > 0.0 {
                    failures.push(format!(
                        "eps=1 replication {:.4} outside CI of baseline {:.4} at n={n}",
                        r.sim, b.sim
                    ));
                }
                if n == 50 && f.sim >= b.sim {
                    failures.push("eps=1 fountain not below baseline at n=50".into());
                }
                if n == 10 && f.sim <= b.sim {
                    failures.push("eps=1 fountain not above baseline at n=10".into());
                }
            }
        }
    }
    let ok = failures.is_empty();
    report(
        5,
        ok,
        &format!("largest replication-baseline excess over CI {rep_gap:+.4}; violations: {failures:?}"),
    );
    assert!(ok);
}

/// Monte Carlo of the loss factor: SF pair, both fading draws and both
/// distances sampled; returns (mean, standard error).
fn sampled_loss(cfg: &ScenarioConfig, samples: usize, fading: bool, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let xi = cfg.capture_matrix().unwrap();
    let g = cfg.geometry;
    let sampler = cfg.fading.sampler().unwrap();
    let k = xi.len();
    let mut lost = 0usize;
    for _ in 0..samples {
        let (a, b) = (rng.random_range(0..k), rng.random_range(0..k));
        let (d0, u) = (sample_distance(&g, rng), sample_distance(&g, rng));
        let (fa, fb) = if fading {
            (sampler.sample(rng), sampler.sample(rng))
        } else {
            (1.0, 1.0)
        };
        let ratio = (fa * d0.powf(-g.path_loss_exp)) / (fb * u.powf(-g.path_loss_exp));
        lost += (ratio < xi.get(a, b)) as usize;
    }
    let p = lost as f64 / samples as f64;
    (p, (p * (1.0 - p) / samples as f64).sqrt())
}

#[test]
fn criterion_6_loss_factor_oracles() {
    let cfg = SweepSpec::parse(preset("fig1").unwrap(), &[]).unwrap().base;
    let inputs = AnalysisInputs::from_config(&cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);

    let quad = interferer_loss_factor(&inputs.capture, &inputs.geometry, &inputs.fading, &inputs.quadrature)
        .unwrap()
        .value;
    let (mc, se) = sampled_loss(&cfg, 1_000_000, true, &mut rng);
    let fading_ok = (quad - mc).abs() <= 3.0 * se;

    let nf_quad = interferer_loss_factor_nofading(&inputs.capture, &inputs.geometry, NoFadingMode::Quadrature).unwrap();
    let (nf_mc, nf_se) = sampled_loss(&cfg, 1_000_000, false, &mut rng);
    let nofading_ok = (nf_quad - nf_mc).abs() <= 3.0 * nf_se;

    // the four branches of the printed expression: t = xi^(1/alpha) below
    // h/w, in (h/w, 1), in (1, w/h), above w/h
    let g = Geometry::default();
    let (h, w) = (g.altitude_m, g.max_distance());
    let branch_t = [0.5 * h / w, 0.7, 1.6, 1.2 * w / h];
    let mut branch_notes = Vec::new();
    let mut branches_ok = true;
    for (n, t) in branch_t.into_iter().enumerate() {
        let xi = t.powf(g.path_loss_exp);
        let q = loss::nofading_pair_integral(xi, &g);
        let printed = loss::nofading_pair_literal(xi, &g);
        let corrected = loss::nofading_pair_closed_form(xi, &g);
        if (printed - q).abs() <= 1e-3 {
            branch_notes.push(format!("branch {}: printed matches", n + 1));
        } else {
            // documented discrepancy: the corrected constant must reproduce the quadrature
            branches_ok &= (corrected - q).abs() <= 1e-12;
            branch_notes.push(format!(
                "branch {}: printed {printed:.4} vs quadrature {q:.4}, corrected {corrected:.6}",
                n + 1
            ));
        }
    }
    let ok = fading_ok && nofading_ok && branches_ok;
    report(
        6,
        ok,
        &format!(
            "fading F quad {quad:.5} vs MC {mc:.5} (se {se:.1e}); no-fading quad {nf_quad:.5} vs MC {nf_mc:.5} \
             (se {nf_se:.1e}); {}",
            branch_notes.join("; ")
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_7_channel_distributions() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 100_000;
    let g = Geometry::default();
    let mut d: Vec<f64> = (0..n).map(|_| sample_distance(&g, &mut rng)).collect();
    d.sort_by(f64::total_cmp);
    let ks = |xs: &[f64], cdf: &dyn Fn(f64) -> f64| -> f64 {
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / xs.len() as f64)
                    .abs()
                    .max((f - (i + 1) as f64 / xs.len() as f64).abs())
            })
            .fold(0.0, f64::max)
    };
    let d_sup = ks(&d, &|u| g.distance_cdf(u));

    let fading = FadingModel { m: 3.0, omega: 1.0 };
    let sampler = fading.sampler().unwrap();
    let mut a: Vec<f64> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
    a.sort_by(f64::total_cmp);
    let a_sup = ks(&a, &|x| regularized_lower_gamma(fading.m, fading.m * x / fading.omega));

    let g32 = lower_incomplete_gamma(3.0, 2.0);
    let ok = d_sup < 0.01 && a_sup < 0.01 && (g32 - 0.646647).abs() <= 1e-6;
    report(
        7,
        ok,
        &format!("distance sup {d_sup:.4}, fading sup {a_sup:.4}, gamma(3, 2) = {g32:.7}"),
    );
    assert!(ok);
}

#[test]
fn criterion_8_frame_cap() {
    let n = n_max(&EnergyProfile::default()).unwrap();
    let ok = (9..=11).contains(&n);
    report(8, ok, &format!("n_max = {n} (target 10 +/- 1)"));
    assert!(ok);
}

#[test]
fn criterion_9_deterministic_csv() {
    let bin = env!("CARGO_BIN_EXE_uav-erasure");
    let dir = std::env::temp_dir().join(format!("uav-erasure-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let commands: [&[&str]; 4] = [
        &["simulate", "--preset", "fig1", "--runs", "200", "--seed", "42"],
        &["sweep", "--preset", "fig3", "--runs", "50", "--seed", "42"],
        &["analyze", "--preset", "fig2", "--curves"],
        &["nmax"],
    ];
    let mut mismatched = Vec::new();
    for (k, args) in commands.iter().enumerate() {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let path = dir.join(format!("{k}-{rep}.csv"));
            let status = Command::new(bin).args(*args).arg("--out").arg(&path).status().unwrap();
            assert!(status.success(), "{args:?}");
            outputs.push(std::fs::read(&path).unwrap());
        }
        if outputs[0] != outputs[1] || outputs[0].is_empty() {
            mismatched.push(args.join(" "));
        }
    }
    std::fs::remove_dir_all(&dir).ok();
    let ok = mismatched.is_empty();
    report(
        9,
        ok,
        &format!(
            "{} commands run twice; differing outputs: {mismatched:?}",
            commands.len()
        ),
    );
    assert!(ok);
}

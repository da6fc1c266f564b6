//! End-to-end acceptance suite. Runs every criterion, prints one
//! `PASS`/`FAIL` line each and exits non-zero if any failed.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use fdris_core::channel::{ChannelRealization, RisGeometry, SphericalPosition};
use fdris_core::covert::{audit, dep, log_mgf, optimal_dep, optimal_threshold, CovertConfig, WardenStats};
use fdris_core::cqp::Slab;
use fdris_core::experiment::{mean_std, run_optimize, run_sweep, SweepParam};
use fdris_core::optimizer::{
    covert_slabs, freq_gradient, freq_hessian, mmse_aux, pdd_solve, surrogate_quadratic, FreqContext, Mode,
    SolverOptions,
};
use fdris_core::scenario::{preset, PRESET_NAMES};
use fdris_core::surface::{
    align_delays, beampattern_conventional, beampattern_fdris, cascade_vector, conventional_alignment,
    linear_frequencies, BeamState,
};
use fdris_core::{dbm_to_watt, CVector, Complex64, RMatrix, RVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn dep_threshold() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let grid = 10_000;
    let (mut worst_cells, mut worst_beaten, mut worst_closed) = (0.0f64, 0.0f64, 0.0f64);
    let (mut worst_above, mut worst_excess) = (0.0f64, f64::NEG_INFINITY);
    let mut ok = true;
    for _ in 0..100 {
        let v = rng.random_range(1.5..4.0);
        let s2 = 10f64.powf(rng.random_range(-15.0..-9.0));
        let omega = rng.random_range(0.0..1.2) * (v * v - 1.0) * s2 / v;
        let cfg = CovertConfig { varsigma: v, xi: 0.2, psi: 0.0, sigma2_w: vec![s2], sigma2_b: s2, p_t: 1.0 };
        let (lo, hi) = (s2 / v, s2 * v);
        let cell = (hi - lo) / (grid - 1) as f64;
        let tau_at = |i: usize| if i + 1 == grid { hi } else { lo + cell * i as f64 };
        let deps: Vec<f64> = (0..grid).map(|i| dep(tau_at(i), omega, &cfg, 0).unwrap()).collect();
        let (arg, best) = deps.iter().enumerate().fold((0, f64::INFINITY), |a, (i, &p)| if p < a.1 { (i, p) } else { a });
        let tau_star = optimal_threshold(omega, &cfg, 0);
        let p_star = optimal_dep(omega, &cfg, 0);
        let cells = (tau_star - tau_at(arg)).abs() / cell;
        // The DEP has a kink at its minimiser, so the grid minimum sits above
        // the true one by up to the DEP change across one cell.
        let resolution = [arg.saturating_sub(1), (arg + 1).min(grid - 1)]
            .iter()
            .map(|&j| (deps[j] - best).abs())
            .fold(0.0, f64::max);
        let above = best - p_star;
        let closed = (p_star - dep(tau_star, omega, &cfg, 0).unwrap()).abs();
        worst_cells = worst_cells.max(cells);
        worst_beaten = worst_beaten.max(-above);
        worst_above = worst_above.max(above);
        worst_excess = worst_excess.max(above - resolution);
        worst_closed = worst_closed.max(closed);
        ok &= cells <= 1.0 && -above <= 1e-6 && above <= resolution + 1e-6 && closed <= 1e-6;
    }
    outcome(
        ok,
        format!(
            "argmin offset {worst_cells:.3} cells, grid min minus closed form up to {worst_above:.2e} \
             (exceeds one-cell resolution by at most {worst_excess:.1e}), grid below closed form by {worst_beaten:.1e}, \
             dep(τ*) mismatch {worst_closed:.1e}"
        ),
    )
}

// Closed form minus a Monte Carlo estimate, in bootstrap standard errors
// computed over batch means.
fn mgf_z_score(stats: &WardenStats, psi: f64, samples: usize, rng: &mut ChaCha8Rng) -> f64 {
    let batches = 200;
    let per = samples / batches;
    let sd = (stats.sigma_tilde2 / 2.0).sqrt();
    let batch_means: Vec<f64> = (0..batches)
        .map(|_| {
            (0..per)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    (psi * (stats.mu + Complex64::new(re * sd, im * sd)).norm_sqr()).exp()
                })
                .sum::<f64>()
                / per as f64
        })
        .collect();
    let estimate = |means: &[f64]| (means.iter().sum::<f64>() / means.len() as f64).ln() / psi;
    let est = estimate(&batch_means);
    let boots: Vec<f64> = (0..300)
        .map(|_| {
            let pick: Vec<f64> = (0..batches).map(|_| batch_means[rng.random_range(0..batches)]).collect();
            estimate(&pick)
        })
        .collect();
    let (_, se) = mean_std(&boots);
    (est - log_mgf(stats, psi).unwrap()).abs() / se
}

fn log_mgf_mc() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut retests = Vec::new();
    for i in 0..50u64 {
        let s2: f64 = rng.random_range(0.05..2.0);
        let psi = rng.random_range(0.001..0.2) / s2;
        let mu = Complex64::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
        let stats = WardenStats { mu, sigma_tilde2: s2, omega_det: 0.0 };
        let z = mgf_z_score(&stats, psi, 1_000_000, &mut rng);
        worst = worst.max(z);
        if z > 3.0 {
            // Fifty 3-SE checks miss about once in eight runs by chance alone,
            // so a miss is confirmed on an independent, ten times larger sample.
            let mut fresh = ChaCha8Rng::seed_from_u64(2);
            fresh.set_stream(1 + i);
            retests.push((z, mgf_z_score(&stats, psi, 10_000_000, &mut fresh)));
        }
    }
    let mut limit_err = 0.0f64;
    for _ in 0..50 {
        let mu = Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let s2 = rng.random_range(0.01..2.0);
        let stats = WardenStats { mu, sigma_tilde2: s2, omega_det: 0.0 };
        limit_err = limit_err.max((log_mgf(&stats, 0.0).unwrap() - (mu.norm_sqr() + s2)).abs());
        limit_err = limit_err.max((log_mgf(&stats, 1e-12).unwrap() - (mu.norm_sqr() + s2)).abs());
    }
    let confirmed = retests.iter().all(|(_, z)| *z <= 3.0);
    let retest_note = if retests.is_empty() {
        String::new()
    } else {
        let list: Vec<String> = retests.iter().map(|(a, b)| format!("{a:.2} -> {b:.2}")).collect();
        format!(", retested at 1e7 samples: {}", list.join(", "))
    };
    outcome(
        confirmed && limit_err <= 1e-8,
        format!("worst |MC - closed| = {worst:.2} bootstrap SE at 1e6 samples{retest_note}, ψ→0 error {limit_err:.1e}"),
    )
}

fn random_position(rng: &mut ChaCha8Rng) -> SphericalPosition {
    SphericalPosition::from_degrees(rng.random_range(30.0..150.0), rng.random_range(-60.0..60.0), rng.random_range(10.0..60.0))
        .unwrap()
}

fn derivatives() -> Outcome {
    const STEP: f64 = 20.0;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut g_err, mut h_err) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let n = rng.random_range(2..=8);
        let k = rng.random_range(1..=4);
        let geom = RisGeometry::half_wavelength_with_count(n, 28e9).unwrap();
        let alice = random_position(&mut rng);
        let bob = random_position(&mut rng);
        let willies: Vec<_> = (0..k).map(|_| random_position(&mut rng)).collect();
        let chan = ChannelRealization::draw(&geom, &alice, &bob, &willies, 10.0, &mut rng).unwrap();
        let theta = CVector::from_iterator(n, (0..n).map(|_| Complex64::cis(rng.random_range(0.0..6.3))));
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(10e6..30e6)).collect();
        let ctx = FreqContext::new(&geom, &chan, &theta, vec![f64::MAX; k], 10e6, 30e6).unwrap();
        let shift = |l: usize, d: f64| {
            let mut g = f.clone();
            g[l] += d;
            g
        };
        let (gb, gw) = freq_gradient(&f, &ctx).unwrap();
        let (hb, hw) = freq_hessian(&f, &ctx).unwrap();
        for j in 0..=k {
            let value = |x: &[f64]| if j == 0 { ctx.bob_gain(x) } else { ctx.warden_gain(j - 1, x) };
            let grad = |x: &[f64]| {
                let (b, w) = freq_gradient(x, &ctx).unwrap();
                if j == 0 { b } else { w[j - 1].clone() }
            };
            let (ga, ha) = if j == 0 { (&gb, &hb) } else { (&gw[j - 1], &hw[j - 1]) };
            let fd = RVector::from_iterator(n, (0..n).map(|l| (value(&shift(l, STEP)) - value(&shift(l, -STEP))) / (2.0 * STEP)));
            g_err = g_err.max((ga - &fd).norm() / fd.norm());
            let mut fh = RMatrix::zeros(n, n);
            for l in 0..n {
                fh.set_column(l, &((grad(&shift(l, STEP)) - grad(&shift(l, -STEP))) / (2.0 * STEP)));
            }
            h_err = h_err.max((ha - &fh).norm() / fh.norm());
        }
    }
    outcome(g_err <= 1e-5 && h_err <= 1e-4, format!("gradient rel err {g_err:.2e}, hessian rel err {h_err:.2e}"))
}

fn beampattern() -> Outcome {
    let geom = RisGeometry::half_wavelength(10, 10, 28e9).unwrap();
    let alice = SphericalPosition::from_degrees(30.0, 70.0, 100.0).unwrap();
    let bob = SphericalPosition::from_degrees(50.0, 40.0, 40.0).unwrap();
    let freqs = linear_frequencies(100, 10e6, 40e6);
    let delays = align_delays(&geom, &alice, &bob, &freqs).unwrap();
    let state = BeamState::from_delays(freqs, delays, geom.g).unwrap();
    let at_target = beampattern_fdris(&geom, &alice, &bob, &state);
    let far = beampattern_fdris(&geom, &alice, &bob.with_dist(80.0), &state);
    let u = conventional_alignment(&geom, &alice, &bob);
    let conv: Vec<f64> = [5.0, 20.0, 40.0, 80.0, 300.0]
        .iter()
        .map(|d| beampattern_conventional(&geom, &alice, &bob.with_dist(*d), &u))
        .collect();
    let identical = conv.iter().all(|b| b.to_bits() == conv[0].to_bits());
    outcome(
        (at_target - 1.0).abs() <= 1e-12 && identical && far < at_target,
        format!("FD-RIS BP at target {at_target:.15}, at 2x distance {far:.4}, conventional bit-identical across distances: {identical}"),
    )
}

fn optimizer_traces() -> Outcome {
    let opts = SolverOptions::default();
    let (mut runs, mut worst_drop, mut audits_failed, mut infeasible) = (0, 0.0f64, 0, 0);
    for name in PRESET_NAMES {
        let mut scn = preset(name).unwrap().with_elements(36).unwrap().with_xi(0.2).unwrap();
        scn.n_mc = 5;
        for mode in [Mode::FdRis, Mode::Conventional] {
            let out = run_optimize(&scn, mode, &opts).unwrap();
            for d in &out.draws {
                runs += 1;
                for w in d.trace.windows(2) {
                    worst_drop = worst_drop.max(w[0].rate_bpcu - w[1].rate_bpcu);
                }
                match &d.solution {
                    Some((state, _)) => {
                        let chan = fdris_core::experiment::draw_channel(&scn, scn.seed, d.record.draw).unwrap();
                        let a = audit(&state.theta_vec, &state.freqs, &chan, &scn.geom, &scn.cfg).unwrap();
                        if !a.iter().all(|w| w.passes() && w.mu2 <= w.h_k.max(0.0).max(w.rhs) + 1e-8) {
                            audits_failed += 1;
                        }
                    }
                    None => infeasible += 1,
                }
            }
        }
    }
    outcome(
        worst_drop <= 1e-9 && audits_failed == 0 && infeasible == 0,
        format!("{runs} runs, largest trace drop {worst_drop:.1e}, audit failures {audits_failed}, unsolved draws {infeasible}"),
    )
}

fn ordering() -> Outcome {
    let opts = SolverOptions::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for name in PRESET_NAMES {
        let mut scn = preset(name).unwrap().with_elements(64).unwrap().with_xi(0.2).unwrap();
        scn.n_mc = 10;
        let fd = run_optimize(&scn, Mode::FdRis, &opts).unwrap().aggregate.mean_rate;
        let conv = run_optimize(&scn, Mode::Conventional, &opts).unwrap().aggregate.mean_rate;
        ok &= fd >= conv;
        if name == "case3" {
            ok &= fd >= 1.5 * conv;
        }
        parts.push(format!("{name} {fd:.3} vs {conv:.3} (x{:.2})", fd / conv));
    }
    outcome(ok, parts.join(", "))
}

// Non-decreasing up to one inversion no larger than the pooled std.
fn near_monotone(means: &[f64], stds: &[f64]) -> bool {
    let mut inversions = 0;
    for i in 1..means.len() {
        if means[i] < means[i - 1] {
            let pooled = ((stds[i].powi(2) + stds[i - 1].powi(2)) / 2.0).sqrt();
            if means[i - 1] - means[i] > pooled {
                return false;
            }
            inversions += 1;
        }
    }
    inversions <= 1
}

fn trends() -> Outcome {
    let opts = SolverOptions::default();
    let mut scn = preset("case3").unwrap();
    scn.n_mc = 5;
    let mut ok = true;
    let mut parts = Vec::new();
    for (param, values, label) in [
        (SweepParam::Xi, vec![0.05, 0.1, 0.2, 0.4], "xi"),
        (SweepParam::Dfmax, vec![15e6, 20e6, 30e6, 50e6], "dfmax"),
    ] {
        let rows = run_sweep(&scn, param, &values, &[Mode::FdRis], &opts).unwrap();
        let means: Vec<f64> = rows.iter().map(|r| r.mean_rate).collect();
        let stds: Vec<f64> = rows.iter().map(|r| r.std_rate).collect();
        ok &= near_monotone(&means, &stds);
        parts.push(format!("{label}: {}", means.iter().map(|m| format!("{m:.3}")).collect::<Vec<_>>().join(" ")));
    }
    outcome(ok, parts.join("; "))
}

fn grid_best(obj: &fdris_core::cqp::ConcaveQuadratic, slabs: &[Slab], n: usize) -> Option<f64> {
    let levels = 16usize;
    let mut best: Option<f64> = None;
    for code in 0..levels.pow(n as u32) {
        let v = CVector::from_iterator(
            n,
            (0..n).map(|l| Complex64::cis(std::f64::consts::TAU * ((code / levels.pow(l as u32)) % levels) as f64 / levels as f64)),
        );
        if slabs.iter().all(|s| s.b.dotc(&v).norm_sqr() <= s.cap) {
            let val = obj.value(&v);
            best = Some(best.map_or(val, |b: f64| b.max(val)));
        }
    }
    best
}

fn small_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let alice = SphericalPosition::from_degrees(70.0, 10.0, 70.0).unwrap();
    let bob = SphericalPosition::from_degrees(120.0, 30.0, 20.0).unwrap();
    let (mut worst, mut count) = (f64::NEG_INFINITY, 0);
    let mut all_ok = true;
    for trial in 0..30 {
        let n = 2 + trial % 3;
        let k = trial % 2;
        let geom = RisGeometry::half_wavelength_with_count(n, 28e9).unwrap();
        let willies: Vec<_> = (0..k).map(|_| random_position(&mut rng)).collect();
        let chan = ChannelRealization::draw(&geom, &alice, &bob, &willies, 31.6, &mut rng).unwrap();
        let cfg = CovertConfig {
            varsigma: 2.0,
            xi: 0.2,
            psi: 100.0,
            sigma2_w: vec![dbm_to_watt(-110.0); k],
            sigma2_b: dbm_to_watt(-110.0),
            p_t: dbm_to_watt(15.0),
        };
        let freqs = linear_frequencies(n, 10e6, 30e6);
        let h = cascade_vector(&chan.h_rb(&geom, &freqs).unwrap(), &chan.incident(&geom)).unwrap();
        let start = CVector::from_iterator(n, (0..n).map(|_| Complex64::cis(rng.random_range(0.0..6.3))));
        let aux = mmse_aux(&start, &h, cfg.p_t, cfg.sigma2_b);
        let obj = surrogate_quadratic(&aux, &h, cfg.p_t, cfg.sigma2_b).unwrap();
        let mut slabs = covert_slabs(&chan, &geom, &cfg, &freqs).unwrap();
        for s in &mut slabs {
            // Widen the cap so a 16-level grid has feasible points to compare with.
            s.cap = s.cap.max(0.3 * n as f64 * s.b.norm_squared());
        }
        let Some(best) = grid_best(&obj, &slabs, n) else { continue };
        let out = pdd_solve(&obj, &slabs, &start, &SolverOptions::default()).unwrap();
        all_ok &= out.feasible && out.objective >= best - 1e-3;
        worst = worst.max(best - out.objective);
        count += 1;
    }
    outcome(all_ok && count >= 20, format!("{count} instances, largest grid advantage {worst:.2e}"))
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let dir = tmp.path().join(sub);
        let status = Command::new(env!("CARGO_BIN_EXE_fdris"))
            .args(["optimize", "--scenario", "case3", "--seed", "7", "--mc", "3", "--elements", "16", "--out-dir"])
            .arg(&dir)
            .output()
            .unwrap();
        assert!(status.status.success(), "optimize failed: {}", String::from_utf8_lossy(&status.stderr));
        read_all(&dir)
    };
    let (a, b) = (run("a"), run("b"));
    let same = !a.is_empty() && a == b;
    outcome(same, format!("{} CSV files compared byte for byte", a.len()))
}

type Criterion = (u32, &'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "closed-form DEP and threshold", dep_threshold, Duration::from_secs(10)),
        (2, "log-MGF against Monte Carlo", log_mgf_mc, Duration::from_secs(60)),
        (3, "frequency derivatives", derivatives, Duration::from_secs(30)),
        (4, "beampattern invariants", beampattern, Duration::from_secs(5)),
        (5, "optimizer monotonicity and feasibility", optimizer_traces, Duration::from_secs(600)),
        (6, "FD-RIS vs conventional ordering", ordering, Duration::from_secs(1200)),
        (7, "monotone trends in xi and dfmax", trends, Duration::from_secs(1800)),
        (8, "small-instance PDD oracle", small_oracle, Duration::from_secs(60)),
        (9, "determinism of optimize output", determinism, Duration::from_secs(600)),
    ];
    let filter: Option<u32> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (id, name, run, limit) in criteria {
        if filter.is_some_and(|f| f != id) {
            continue;
        }
        let t = Instant::now();
        let out = run();
        let elapsed = t.elapsed();
        let in_time = elapsed <= limit;
        let pass = out.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {id} [{}] {name}: {} ({:.1}s of {}s)",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

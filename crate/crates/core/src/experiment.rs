//! Monte Carlo orchestration, sweeps, beampattern rasters and the CSV/JSON
//! writers behind the `fdris` binary.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelRealization, SphericalPosition};
use crate::covert::{dep, CovertConfig, SolutionMetrics};
use crate::error::{Error, Result};
use crate::optimizer::{alternate, DesignSpace, Mode, SolverOptions, TraceRow};
use crate::scenario::Scenario;
use crate::surface::{
    align_delays, beampattern_conventional, beampattern_fdris, conventional_alignment, linear_frequencies, BeamState,
};

/// Channel draw `index` of a run seeded with `seed`. Every draw owns an
/// independent ChaCha stream, so results do not depend on scheduling.
pub fn draw_channel(scn: &Scenario, seed: u64, index: usize) -> Result<ChannelRealization> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    ChannelRealization::draw(&scn.geom, &scn.alice, &scn.bob, &scn.willies, scn.rician_factor(), &mut rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawRecord {
    pub draw: usize,
    pub rate_bpcu: f64,
    pub feasible: bool,
    pub iterations: usize,
    pub converged: bool,
    pub restored: bool,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub scheme: Mode,
    pub n_mc: usize,
    pub mean_rate: f64,
    pub std_rate: f64,
    pub feasible_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct DrawOutcome {
    pub record: DrawRecord,
    pub trace: Vec<TraceRow>,
    pub solution: Option<(BeamState, SolutionMetrics)>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub draws: Vec<DrawOutcome>,
    pub aggregate: Aggregate,
}

fn solve_draw(scn: &Scenario, mode: Mode, seed: u64, index: usize, opts: &SolverOptions) -> DrawOutcome {
    let attempt = || -> Result<(crate::optimizer::AlternateResult, SolutionMetrics)> {
        let chan = draw_channel(scn, seed, index)?;
        let space = DesignSpace { f_min: scn.f_bounds.0, f_max: scn.f_bounds.1, mode };
        let draw_opts = SolverOptions { seed: seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15), ..*opts };
        let res = alternate(&chan, &scn.geom, &scn.cfg, &space, &draw_opts)?;
        let metrics = SolutionMetrics::evaluate(&res.state.theta_vec, &res.state.freqs, &chan, &scn.geom, &scn.cfg)?;
        Ok((res, metrics))
    };
    match attempt() {
        Ok((res, metrics)) => DrawOutcome {
            record: DrawRecord {
                draw: index,
                rate_bpcu: metrics.rate_bpcu,
                feasible: metrics.feasible,
                iterations: res.iterations,
                converged: res.converged,
                restored: res.restored,
                error: String::new(),
            },
            trace: res.trace,
            solution: Some((res.state, metrics)),
        },
        Err(e) => DrawOutcome {
            record: DrawRecord {
                draw: index,
                rate_bpcu: f64::NAN,
                feasible: false,
                iterations: 0,
                converged: false,
                restored: false,
                error: e.to_string(),
            },
            trace: Vec::new(),
            solution: None,
        },
    }
}

/// Mean and sample standard deviation; `(NaN, NaN)` for an empty slice.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

/// Runs the alternating design on `scn.n_mc` channel draws seeded from
/// `scn.seed`. Failed draws are recorded and excluded from the mean.
pub fn run_optimize(scn: &Scenario, mode: Mode, opts: &SolverOptions) -> Result<RunOutput> {
    opts.validate()?;
    let draws: Vec<DrawOutcome> = (0..scn.n_mc)
        .into_par_iter()
        .map(|i| solve_draw(scn, mode, scn.seed, i, opts))
        .collect();
    let rates: Vec<f64> = draws.iter().filter(|d| d.solution.is_some()).map(|d| d.record.rate_bpcu).collect();
    let (mean_rate, std_rate) = mean_std(&rates);
    let feasible = draws.iter().filter(|d| d.record.feasible).count();
    Ok(RunOutput {
        aggregate: Aggregate {
            scheme: mode,
            n_mc: scn.n_mc,
            mean_rate,
            std_rate,
            feasible_fraction: feasible as f64 / scn.n_mc as f64,
        },
        draws,
    })
}

/// The conventional-RIS baseline: modulation frequencies pinned to zero.
pub fn run_conventional_baseline(scn: &Scenario, opts: &SolverOptions) -> Result<RunOutput> {
    run_optimize(scn, Mode::Conventional, opts)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Io(e.to_string())
}

pub fn write_trace_csv(trace: &[TraceRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in trace {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `draws.csv`, `summary.json` and per-draw `trace_NNN.csv`,
/// `metrics_NNN.json` into `dir`.
pub fn write_run(out: &RunOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("draws.csv")).map_err(csv_err)?;
    for d in &out.draws {
        w.serialize(&d.record).map_err(csv_err)?;
    }
    w.flush()?;
    for d in &out.draws {
        let i = d.record.draw;
        write_trace_csv(&d.trace, &dir.join(format!("trace_{i:03}.csv")))?;
        if let Some((_, metrics)) = &d.solution {
            let text = serde_json::to_string_pretty(metrics).map_err(json_err)?;
            fs::write(dir.join(format!("metrics_{i:03}.json")), text + "\n")?;
        }
    }
    let text = serde_json::to_string_pretty(&out.aggregate).map_err(json_err)?;
    fs::write(dir.join("summary.json"), text + "\n")?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    L,
    Xi,
    Dfmax,
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "L" | "l" => Ok(Self::L),
            "xi" => Ok(Self::Xi),
            "dfmax" => Ok(Self::Dfmax),
            other => Err(Error::invalid("param", format!("unknown sweep parameter `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param_value: f64,
    pub scheme: Mode,
    pub mean_rate: f64,
    pub std_rate: f64,
}

pub fn apply_param(scn: &Scenario, param: SweepParam, value: f64) -> Result<Scenario> {
    match param {
        SweepParam::L => {
            if !(value >= 1.0 && value.fract() == 0.0) {
                return Err(Error::invalid("L", "element count must be a positive integer"));
            }
            scn.with_elements(value as usize)
        }
        SweepParam::Xi => scn.with_xi(value),
        SweepParam::Dfmax => scn.with_f_max(value),
    }
}

/// One row per (value, scheme) pair, values in the given order.
pub fn run_sweep(
    scn: &Scenario,
    param: SweepParam,
    values: &[f64],
    schemes: &[Mode],
    opts: &SolverOptions,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(values.len() * schemes.len());
    for &v in values {
        let point = apply_param(scn, param, v)?;
        for &mode in schemes {
            let out = run_optimize(&point, mode, opts)?;
            rows.push(SweepRow {
                param_value: v,
                scheme: mode,
                mean_rate: out.aggregate.mean_rate,
                std_rate: out.aggregate.std_rate,
            });
        }
    }
    Ok(rows)
}

pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Inclusive range `start:stop:step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Axis {
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        let bad = || Error::invalid("grid", format!("expected start:stop:step, got `{text}`"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let nums: Vec<f64> = parts.iter().map(|p| p.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?;
        let axis = Self { start: nums[0], stop: nums[1], step: nums[2] };
        if !(axis.step > 0.0 && axis.stop >= axis.start && axis.start.is_finite() && axis.stop.is_finite()) {
            return Err(bad());
        }
        Ok(axis)
    }

    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridDim {
    Theta,
    Phi,
    Dist,
}

/// Two swept axes and a fixed value for the remaining coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamGrid {
    pub first: (GridDim, Axis),
    pub second: (GridDim, Axis),
    pub fixed: (GridDim, f64),
}

impl BeamGrid {
    /// Parses `theta=0:180:1,dist=5:80:0.5` plus the fixed coordinate.
    pub fn parse(spec: &str, fixed: (GridDim, f64)) -> Result<Self> {
        let mut axes = Vec::new();
        for item in spec.split(',') {
            let (key, range) = item
                .split_once('=')
                .ok_or_else(|| Error::invalid("grid", format!("expected name=start:stop:step, got `{item}`")))?;
            let dim = match key.trim() {
                "theta" => GridDim::Theta,
                "phi" => GridDim::Phi,
                "dist" => GridDim::Dist,
                other => return Err(Error::invalid("grid", format!("unknown axis `{other}`"))),
            };
            axes.push((dim, Axis::parse(range)?));
        }
        if axes.len() != 2 {
            return Err(Error::invalid("grid", "exactly two axes are required"));
        }
        let dims = [axes[0].0, axes[1].0, fixed.0];
        if dims[0] == dims[1] || dims[0] == dims[2] || dims[1] == dims[2] {
            return Err(Error::invalid("grid", "the two axes and the fixed coordinate must differ"));
        }
        Ok(Self { first: axes[0], second: axes[1], fixed })
    }

    fn positions(&self) -> Result<Vec<SphericalPosition>> {
        let mut out = Vec::new();
        for a in self.first.1.values() {
            for b in self.second.1.values() {
                let mut coords = [0.0; 3];
                for (dim, v) in [(self.first.0, a), (self.second.0, b), self.fixed] {
                    coords[dim as usize] = v;
                }
                out.push(SphericalPosition::from_degrees(coords[0], coords[1], coords[2])?);
            }
        }
        Ok(out)
    }
}

/// How the surface is configured for a beampattern raster.
#[derive(Debug, Clone, PartialEq)]
pub enum BeamSource {
    /// Delays aligned to Bob at linearly spaced frequencies.
    FdRisAligned,
    /// Conventional phases aligned to Bob's direction.
    ConventionalAligned,
    /// An explicit FD-RIS state.
    State(BeamState),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamRow {
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub dist_m: f64,
    pub gain_linear: f64,
    pub gain_db: f64,
}

pub fn run_beampattern(scn: &Scenario, source: &BeamSource, grid: &BeamGrid) -> Result<Vec<BeamRow>> {
    let geom = &scn.geom;
    let n = geom.num_elements();
    enum Eval {
        Fd(BeamState),
        Conv(crate::CVector),
    }
    let eval = match source {
        BeamSource::FdRisAligned => {
            let freqs = linear_frequencies(n, scn.f_bounds.0, scn.f_bounds.1);
            let delays = align_delays(geom, &scn.alice, &scn.bob, &freqs)?;
            Eval::Fd(BeamState::from_delays(freqs, delays, geom.g)?)
        }
        BeamSource::ConventionalAligned => Eval::Conv(conventional_alignment(geom, &scn.alice, &scn.bob)),
        BeamSource::State(s) => {
            if s.len() != n {
                return Err(Error::LengthMismatch { expected: n, got: s.len() });
            }
            Eval::Fd(s.clone())
        }
    };
    let rows = grid
        .positions()?
        .into_par_iter()
        .map(|p| {
            let gain = match &eval {
                Eval::Fd(state) => beampattern_fdris(geom, &scn.alice, &p, state),
                Eval::Conv(u) => beampattern_conventional(geom, &scn.alice, &p, u),
            };
            BeamRow {
                theta_deg: p.theta.to_degrees(),
                phi_deg: p.phi.to_degrees(),
                dist_m: p.dist,
                gain_linear: gain,
                gain_db: 10.0 * gain.max(1e-30).log10(),
            }
        })
        .collect();
    Ok(rows)
}

pub fn write_beampattern_csv(rows: &[BeamRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Heatmap of a raster produced by [`run_beampattern`] (rows are laid out
/// with the first axis outermost).
pub fn beampattern_svg(rows: &[BeamRow], grid: &BeamGrid) -> String {
    let nx = grid.first.1.values().len();
    let ny = grid.second.1.values().len();
    let cell = 4.0;
    let (w, h) = (nx as f64 * cell, ny as f64 * cell);
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    for (idx, r) in rows.iter().enumerate() {
        let (i, j) = (idx / ny, idx % ny);
        let v = r.gain_linear.clamp(0.0, 1.0);
        // Dark blue through yellow.
        let (red, green, blue) = ((255.0 * v) as u8, (40.0 + 200.0 * v) as u8, (120.0 * (1.0 - v)) as u8);
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{}" width="{cell}" height="{cell}" fill="rgb({red},{green},{blue})"/>"#,
            i as f64 * cell,
            h - (j + 1) as f64 * cell
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepRow {
    pub tau: f64,
    pub omega: f64,
    pub dep: f64,
}

/// DEP over `tau_points` thresholds spanning the assumed range, for each
/// received power in `omegas` (watts).
pub fn dep_curve(varsigma: f64, sigma2: f64, omegas: &[f64], tau_points: usize) -> Result<Vec<DepRow>> {
    let cfg = CovertConfig { varsigma, xi: 0.5, psi: 0.0, sigma2_w: vec![sigma2], sigma2_b: sigma2, p_t: 0.0 };
    cfg.validate()?;
    if tau_points < 2 {
        return Err(Error::invalid("tau_points", "need at least two thresholds"));
    }
    let (lo, hi) = (sigma2 / varsigma, sigma2 * varsigma);
    let mut rows = Vec::with_capacity(omegas.len() * tau_points);
    for &omega in omegas {
        for i in 0..tau_points {
            let tau = if i + 1 == tau_points { hi } else { lo + (hi - lo) * i as f64 / (tau_points - 1) as f64 };
            rows.push(DepRow { tau, omega, dep: dep(tau, omega, &cfg, 0)? });
        }
    }
    Ok(rows)
}

pub fn write_dep_csv(rows: &[DepRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

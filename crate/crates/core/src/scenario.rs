//! Scenario description: JSON schema, unit conversion and the built-in
//! warden-geometry presets.
//!
//! JSON fields use degrees, metres, dBm and hertz; [`Scenario`] holds SI
//! values (radians, watts).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{RisGeometry, SphericalPosition};
use crate::covert::CovertConfig;
use crate::error::{Error, Result};
use crate::{db_to_linear, dbm_to_watt};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositionSpec {
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub dist_m: f64,
}

impl PositionSpec {
    fn to_position(self, field: &str) -> Result<SphericalPosition> {
        SphericalPosition::from_degrees(self.theta_deg, self.phi_deg, self.dist_m)
            .map_err(|e| Error::Scenario(format!("{field}: {e}")))
    }

    fn from_position(p: &SphericalPosition) -> Self {
        Self { theta_deg: p.theta.to_degrees(), phi_deg: p.phi.to_degrees(), dist_m: p.dist }
    }
}

fn default_g() -> u32 {
    1
}
fn default_a0() -> f64 {
    1.0
}
fn default_varsigma() -> f64 {
    2.0
}
fn default_psi() -> f64 {
    100.0
}
fn default_n_mc() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RisSpec {
    pub l_y: usize,
    pub l_z: usize,
    pub f_c_hz: f64,
    /// Element spacing; half a carrier wavelength when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing_m: Option<f64>,
    #[serde(default = "default_g")]
    pub g: u32,
    #[serde(default = "default_a0")]
    pub a0: f64,
    #[serde(default)]
    pub phi0_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovertSpec {
    #[serde(default = "default_varsigma")]
    pub varsigma: f64,
    pub xi: f64,
    #[serde(default = "default_psi")]
    pub psi: f64,
    /// Nominal warden noise power, shared by every warden.
    pub sigma2_w_dbm: f64,
    pub sigma2_b_dbm: f64,
    pub p_t_dbm: f64,
}

/// On-disk scenario layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: String,
    pub ris: RisSpec,
    pub alice: PositionSpec,
    pub bob: PositionSpec,
    pub willies: Vec<PositionSpec>,
    pub covert: CovertSpec,
    pub rician_beta_db: f64,
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    #[serde(default = "default_n_mc")]
    pub n_mc: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub geom: RisGeometry,
    pub alice: SphericalPosition,
    pub bob: SphericalPosition,
    pub willies: Vec<SphericalPosition>,
    pub cfg: CovertConfig,
    pub rician_beta_db: f64,
    pub f_bounds: (f64, f64),
    pub n_mc: usize,
    pub seed: u64,
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<Scenario> {
        let bad = |field: &str, e: Error| Error::Scenario(format!("{field}: {e}"));
        let mut geom = RisGeometry::half_wavelength(self.ris.l_y, self.ris.l_z, self.ris.f_c_hz).map_err(|e| bad("ris", e))?;
        if let Some(s) = self.ris.spacing_m {
            geom.spacing = s;
        }
        geom.g = self.ris.g;
        geom.a0 = self.ris.a0;
        geom.phi0 = self.ris.phi0_deg.to_radians();
        geom.validate().map_err(|e| bad("ris", e))?;

        let alice = self.alice.to_position("alice")?;
        let bob = self.bob.to_position("bob")?;
        let willies = self
            .willies
            .iter()
            .enumerate()
            .map(|(k, w)| w.to_position(&format!("willies[{k}]")))
            .collect::<Result<Vec<_>>>()?;
        if willies.is_empty() {
            return Err(Error::Scenario("willies: at least one warden is required".into()));
        }
        let cfg = CovertConfig {
            varsigma: self.covert.varsigma,
            xi: self.covert.xi,
            psi: self.covert.psi,
            sigma2_w: vec![dbm_to_watt(self.covert.sigma2_w_dbm); willies.len()],
            sigma2_b: dbm_to_watt(self.covert.sigma2_b_dbm),
            p_t: dbm_to_watt(self.covert.p_t_dbm),
        };
        cfg.validate().map_err(|e| bad("covert", e))?;
        if !self.rician_beta_db.is_finite() {
            return Err(Error::Scenario("rician_beta_db: must be finite".into()));
        }
        if !(self.f_min_hz >= 0.0 && self.f_min_hz < self.f_max_hz && self.f_max_hz.is_finite()) {
            return Err(Error::Scenario(format!(
                "f_min_hz/f_max_hz: need 0 <= f_min < f_max, got [{}, {}]",
                self.f_min_hz, self.f_max_hz
            )));
        }
        if self.n_mc == 0 {
            return Err(Error::Scenario("n_mc: must be at least 1".into()));
        }
        Ok(Scenario {
            name: self.name,
            geom,
            alice,
            bob,
            willies,
            cfg,
            rician_beta_db: self.rician_beta_db,
            f_bounds: (self.f_min_hz, self.f_max_hz),
            n_mc: self.n_mc,
            seed: self.seed,
        })
    }
}

impl Scenario {
    /// Linear Rician factor.
    pub fn rician_factor(&self) -> f64 {
        db_to_linear(self.rician_beta_db)
    }

    pub fn num_wardens(&self) -> usize {
        self.willies.len()
    }

    /// Same scenario with `n` elements laid out as close to square as possible.
    pub fn with_elements(&self, n: usize) -> Result<Self> {
        let mut geom = RisGeometry::half_wavelength_with_count(n, self.geom.f_c)?;
        geom.spacing = self.geom.spacing;
        geom.g = self.geom.g;
        geom.a0 = self.geom.a0;
        geom.phi0 = self.geom.phi0;
        Ok(Self { geom, ..self.clone() })
    }

    pub fn with_xi(&self, xi: f64) -> Result<Self> {
        let cfg = CovertConfig { xi, ..self.cfg.clone() };
        cfg.validate()?;
        Ok(Self { cfg, ..self.clone() })
    }

    pub fn with_f_max(&self, f_max: f64) -> Result<Self> {
        if !(f_max > self.f_bounds.0 && f_max.is_finite()) {
            return Err(Error::invalid("f_max", "must exceed f_min"));
        }
        Ok(Self { f_bounds: (self.f_bounds.0, f_max), ..self.clone() })
    }

    /// Back-conversion to the on-disk layout.
    pub fn to_file(&self) -> ScenarioFile {
        let w = |x: f64| 10.0 * x.log10() + 30.0;
        ScenarioFile {
            name: self.name.clone(),
            ris: RisSpec {
                l_y: self.geom.l_y,
                l_z: self.geom.l_z,
                f_c_hz: self.geom.f_c,
                spacing_m: Some(self.geom.spacing),
                g: self.geom.g,
                a0: self.geom.a0,
                phi0_deg: self.geom.phi0.to_degrees(),
            },
            alice: PositionSpec::from_position(&self.alice),
            bob: PositionSpec::from_position(&self.bob),
            willies: self.willies.iter().map(PositionSpec::from_position).collect(),
            covert: CovertSpec {
                varsigma: self.cfg.varsigma,
                xi: self.cfg.xi,
                psi: self.cfg.psi,
                sigma2_w_dbm: w(self.cfg.sigma2_w[0]),
                sigma2_b_dbm: w(self.cfg.sigma2_b),
                p_t_dbm: w(self.cfg.p_t),
            },
            rician_beta_db: self.rician_beta_db,
            f_min_hz: self.f_bounds.0,
            f_max_hz: self.f_bounds.1,
            n_mc: self.n_mc,
            seed: self.seed,
        }
    }
}

/// Parses a scenario from JSON text. Errors carry the line, column and
/// offending field.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let file: ScenarioFile = serde_json::from_str(text)
        .map_err(|e| Error::Scenario(format!("line {}, column {}: {e}", e.line(), e.column())))?;
    file.into_scenario()
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_scenario(&text).map_err(|e| match e {
        Error::Scenario(msg) => Error::Scenario(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub const PRESET_NAMES: [&str; 3] = ["case1", "case2", "case3"];

fn pos(theta_deg: f64, phi_deg: f64, dist_m: f64) -> PositionSpec {
    PositionSpec { theta_deg, phi_deg, dist_m }
}

/// Built-in warden-geometry presets with a 6 × 6 surface and ξ = 0.2.
pub fn preset_file(name: &str) -> Option<ScenarioFile> {
    let (thetas, phis, dists): ([f64; 4], [f64; 4], [f64; 4]) = match name {
        "case1" => ([85.0, 90.0, 100.0, 145.0], [50.0, 15.0, 45.0, 60.0], [45.0, 20.0, 55.0, 30.0]),
        "case2" => ([115.0, 110.0, 110.0, 125.0], [30.0, 25.0, 35.0, 40.0], [45.0, 20.0, 55.0, 30.0]),
        "case3" => ([120.0, 110.0, 110.0, 125.0], [30.0, 25.0, 35.0, 40.0], [15.0, 20.0, 55.0, 30.0]),
        _ => return None,
    };
    Some(ScenarioFile {
        name: name.to_string(),
        ris: RisSpec { l_y: 6, l_z: 6, f_c_hz: 28e9, spacing_m: None, g: 1, a0: 1.0, phi0_deg: 0.0 },
        alice: pos(70.0, 10.0, 70.0),
        bob: pos(120.0, 30.0, 20.0),
        willies: (0..4).map(|k| pos(thetas[k], phis[k], dists[k])).collect(),
        covert: CovertSpec {
            varsigma: 2.0,
            xi: 0.2,
            psi: 100.0,
            sigma2_w_dbm: -110.0,
            sigma2_b_dbm: -110.0,
            p_t_dbm: 15.0,
        },
        rician_beta_db: 15.0,
        f_min_hz: 10e6,
        f_max_hz: 30e6,
        n_mc: 20,
        seed: 0,
    })
}

pub fn preset(name: &str) -> Result<Scenario> {
    preset_file(name)
        .ok_or_else(|| Error::Scenario(format!("unknown preset `{name}` (expected one of {PRESET_NAMES:?})")))?
        .into_scenario()
}

/// Resolves a preset name or a path to a JSON scenario file.
pub fn resolve_scenario(spec: &str) -> Result<Scenario> {
    if PRESET_NAMES.contains(&spec) {
        preset(spec)
    } else {
        load_scenario(Path::new(spec))
    }
}

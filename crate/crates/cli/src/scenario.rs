//! Scenario documents: parsing with unknown-key reporting, validation,
//! refinement, hashing and the shipped presets.
//!
//! A scenario is one JSON object. Enumerated sections are externally tagged,
//! e.g. `"geometry": {"radial": {"n": 801, "r_max": 2.0}}`.

use std::path::Path;

use gcf_core::audit::AuditConfig;
use gcf_core::grid::Grid2;
use gcf_core::params::DEFAULT_LAMBDA;
use gcf_core::radial::{flat_disc_profile, hemisphere_profile, MAX_CFL};
use gcf_core::{FlowParams, GcfError, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub alpha: f64,
    /// Nondegeneracy constant, used only as a reported threshold.
    #[serde(default = "default_lambda")]
    pub lambda_nd: f64,
    pub geometry: Geometry,
    pub profile: Profile,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    pub output: OutputTimes,
    #[serde(default)]
    pub interface: InterfaceSpec,
    #[serde(default)]
    pub audit: AuditConfig,
    #[serde(default)]
    pub waiting: Option<WaitingSpec>,
    #[serde(default)]
    pub hodograph: Option<HodographSpec>,
    #[serde(default)]
    pub sphere: Option<SphereSpec>,
}

fn default_lambda() -> f64 {
    DEFAULT_LAMBDA
}

fn default_cfl() -> f64 {
    gcf_core::radial::DEFAULT_CFL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    /// `n` nodes on `[0, r_max]`. Audits lift frames onto an `audit_n`
    /// square grid of half width `0.7 r_max`.
    Radial {
        n: usize,
        r_max: f64,
        #[serde(default = "default_audit_n")]
        audit_n: usize,
    },
    /// `n x n` nodes on `[-half_width, half_width]^2`.
    Graph2d { n: usize, half_width: f64 },
}

fn default_audit_n() -> usize {
    129
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Flat disc of radius `rho0` with rim `scale * dist^exponent`;
    /// `exponent` defaults to `beta`.
    FlatDisc {
        rho0: f64,
        scale: f64,
        #[serde(default)]
        exponent: Option<f64>,
    },
    /// Lower hemisphere of a sphere of radius `radius` centered at height
    /// `center_height`.
    Hemisphere { center_height: f64, radius: f64 },
    /// Union of two flat discs centered at `(+-offset, 0)`; the rim is
    /// `scale * dist^exponent` to the nearer disc. Not convex once the discs
    /// overlap.
    TwoDiscs {
        offset: f64,
        radius: f64,
        scale: f64,
        #[serde(default)]
        exponent: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputTimes {
    pub every: f64,
    pub until: f64,
}

impl OutputTimes {
    /// `every, 2 every, ...` up to `until`; the initial frame is implicit.
    pub fn times(&self) -> Vec<f64> {
        let n = (self.until / self.every + 1e-9).floor() as usize;
        (1..=n).map(|k| k as f64 * self.every).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InterfaceSpec {
    pub epsilons: Vec<f64>,
    pub n_theta: usize,
    pub center: [f64; 2],
    /// Collar widths for the vanishing-exponent fits.
    pub widths: Vec<f64>,
    /// Envelope window start; snapped to the first output time at or after
    /// it. `None` uses the second output time.
    pub envelope_t0: Option<f64>,
    pub envelope_residual: f64,
    pub monotone_tol: f64,
}

impl Default for InterfaceSpec {
    fn default() -> Self {
        Self {
            epsilons: vec![0.0, 0.01],
            n_theta: 64,
            center: [0.0, 0.0],
            widths: vec![0.2, 0.1, 0.05],
            envelope_t0: None,
            envelope_residual: 0.05,
            monotone_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WaitingSpec {
    /// Probe point inside the initial flat set.
    pub probe: [f64; 2],
    /// Height at which the probe counts as released.
    pub tol: f64,
    pub t_end: f64,
    /// Required free-boundary radius for `t <= t*/2`.
    pub flat_min: f64,
    pub barrier: BarrierScan,
}

impl Default for WaitingSpec {
    fn default() -> Self {
        Self {
            probe: [0.44, 0.0],
            tol: 1e-4,
            t_end: 0.06,
            flat_min: 0.45,
            barrier: BarrierScan::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BarrierScan {
    pub big_t: f64,
    pub c_scale: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub dr: f64,
    pub t_max: f64,
    pub nt: usize,
    pub tol: f64,
}

impl Default for BarrierScan {
    fn default() -> Self {
        Self {
            big_t: 1.0,
            c_scale: 1.0,
            r_min: 0.1,
            r_max: 2.0,
            dr: 0.01,
            t_max: 0.5,
            nt: 51,
            tol: 1e-8,
        }
    }
}

impl BarrierScan {
    pub fn radii(&self) -> Vec<f64> {
        let n = ((self.r_max - self.r_min) / self.dr + 1e-9).floor() as usize;
        (0..=n).map(|k| self.r_min + k as f64 * self.dr).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        if self.nt == 1 {
            return vec![0.0];
        }
        (0..self.nt)
            .map(|k| self.t_max * k as f64 / (self.nt - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HodographSpec {
    pub t0: f64,
    /// Polar angles of the interface points `P0` on `Gamma(t0)`.
    pub angles: Vec<f64>,
    pub eta_max: f64,
    pub c: f64,
    pub g_floor: f64,
    /// Smallest `z` entering residuals, bounds and seminorms.
    pub z_min: f64,
    pub lambda: f64,
    pub nu: f64,
    pub gamma: f64,
    pub pairs: usize,
    pub seed: u64,
    /// Snapshot spacing is `dt_factor * h^2` for grid spacing `h`.
    pub dt_factor: f64,
    /// Patch spans this length in `y`, with spacing `h`.
    pub patch_span: f64,
}

impl Default for HodographSpec {
    fn default() -> Self {
        Self {
            t0: 0.02,
            angles: vec![0.0],
            eta_max: 0.3,
            c: 0.2,
            g_floor: 0.02,
            z_min: 0.02,
            lambda: 1e-3,
            nu: 1e-3,
            gamma: 0.5,
            pairs: 2000,
            seed: 7,
            dt_factor: 2.0,
            patch_span: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SphereSpec {
    pub alphas: Vec<f64>,
    pub tol: f64,
}

impl Default for SphereSpec {
    fn default() -> Self {
        Self {
            alphas: vec![1.0, 0.75],
            tol: 5e-3,
        }
    }
}

impl Profile {
    fn exponent(&self, params: &FlowParams) -> f64 {
        match self {
            Profile::FlatDisc { exponent, .. } | Profile::TwoDiscs { exponent, .. } => {
                exponent.unwrap_or(params.beta)
            }
            Profile::Hemisphere { .. } => 1.0,
        }
    }

    /// Radial profile, or `None` for profiles without rotational symmetry.
    pub fn radial(&self, params: &FlowParams) -> Option<Box<dyn Fn(f64) -> f64 + Sync>> {
        let e = self.exponent(params);
        match *self {
            Profile::FlatDisc { rho0, scale, .. } => {
                Some(Box::new(flat_disc_profile(rho0, scale, e)))
            }
            Profile::Hemisphere {
                center_height,
                radius,
            } => Some(Box::new(hemisphere_profile(center_height, radius))),
            Profile::TwoDiscs { .. } => None,
        }
    }

    pub fn planar(&self, params: &FlowParams) -> Box<dyn Fn(f64, f64) -> f64 + Sync> {
        if let Some(f) = self.radial(params) {
            return Box::new(move |x: f64, y: f64| f(x.hypot(y)));
        }
        let e = self.exponent(params);
        let Profile::TwoDiscs {
            offset,
            radius,
            scale,
            ..
        } = *self
        else {
            unreachable!("only two_discs lacks a radial form")
        };
        Box::new(move |x: f64, y: f64| {
            let d = (x - offset).hypot(y).min((x + offset).hypot(y)) - radius;
            if d > 0.0 {
                scale * d.powf(e)
            } else {
                0.0
            }
        })
    }
}

impl Scenario {
    /// Reads and validates a scenario file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| GcfError::io(path, e))?;
        Self::parse(&text)
    }

    /// Parses a scenario document. Every unknown key is reported, not only
    /// the first.
    pub fn parse(text: &str) -> Result<Self> {
        let mut unknown = Vec::new();
        let mut de = serde_json::Deserializer::from_str(text);
        let scenario: Scenario =
            serde_ignored::deserialize(&mut de, |path| unknown.push(path.to_string()))?;
        de.end()?;
        if !unknown.is_empty() {
            return Err(GcfError::Config(format!(
                "unknown keys: {}",
                unknown.join(", ")
            )));
        }
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn params(&self) -> Result<FlowParams> {
        FlowParams::new(self.alpha)?.with_lambda(self.lambda_nd)
    }

    /// Canonical serialization; the hash is taken over these bytes.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("scenario serializes")
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    /// Grid spacing of the primary solve.
    pub fn spacing(&self) -> f64 {
        match self.geometry {
            Geometry::Radial { n, r_max, .. } => r_max / (n - 1) as f64,
            Geometry::Graph2d { n, half_width } => 2.0 * half_width / (n - 1) as f64,
        }
    }

    /// Halves the spacing `k` times: `n -> (n - 1) 2^k + 1`, so coarse nodes
    /// are nodes of every refined grid.
    pub fn refined(&self, k: u32) -> Result<Self> {
        let up = |n: usize| -> Result<usize> {
            (n - 1)
                .checked_mul(1usize.checked_shl(k).unwrap_or(0))
                .filter(|&m| m > 0 && m < 1 << 24)
                .map(|m| m + 1)
                .ok_or_else(|| GcfError::Config(format!("refinement level {k} too large")))
        };
        let mut s = self.clone();
        s.geometry = match self.geometry {
            Geometry::Radial { n, r_max, audit_n } => Geometry::Radial {
                n: up(n)?,
                r_max,
                audit_n: up(audit_n)?,
            },
            Geometry::Graph2d { n, half_width } => Geometry::Graph2d {
                n: up(n)?,
                half_width,
            },
        };
        if k > 0 {
            s.name = format!("{}_r{k}", self.name);
        }
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let params = self.params()?;
        let bad = |msg: String| Err(GcfError::Config(msg));
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if self.name.is_empty() {
            return bad("name must not be empty".into());
        }
        if !(self.cfl > 0.0 && self.cfl <= MAX_CFL) {
            return bad(format!("cfl = {} outside (0, {MAX_CFL}]", self.cfl));
        }
        let o = &self.output;
        if !(pos(o.every) && o.until >= o.every && o.until / o.every <= 1e5) {
            return bad(format!(
                "output times need 0 < every <= until with at most 1e5 frames, got every = {}, until = {}",
                o.every, o.until
            ));
        }
        let extent = match self.geometry {
            Geometry::Radial { n, r_max, audit_n } => {
                if n < 8 || audit_n < 5 || !pos(r_max) {
                    return bad(format!(
                        "radial geometry needs n >= 8, audit_n >= 5, r_max > 0; got {n}, {audit_n}, {r_max}"
                    ));
                }
                if self.profile.radial(&params).is_none() {
                    return bad("radial geometry needs a rotationally symmetric profile".into());
                }
                r_max
            }
            Geometry::Graph2d { n, half_width } => {
                if n < 9 || !pos(half_width) {
                    return bad(format!(
                        "graph2d geometry needs n >= 9 and half_width > 0; got {n}, {half_width}"
                    ));
                }
                half_width
            }
        };
        self.validate_profile(&params, extent)?;
        let it = &self.interface;
        if it.n_theta < 3 || it.epsilons.iter().any(|&e| !(e >= 0.0 && e.is_finite())) {
            return bad("interface needs n_theta >= 3 and levels epsilon >= 0".into());
        }
        if it.widths.is_empty() || it.widths.iter().any(|&w| !pos(w)) {
            return bad("interface collar widths must be positive".into());
        }
        if let Some(w) = &self.waiting {
            let b = &w.barrier;
            if !(pos(w.tol) && pos(w.t_end) && w.flat_min >= 0.0) {
                return bad("waiting needs tol > 0, t_end > 0, flat_min >= 0".into());
            }
            if !(pos(b.r_min) && b.r_max >= b.r_min && pos(b.dr) && b.nt >= 1) {
                return bad("barrier scan needs 0 < r_min <= r_max, dr > 0, nt >= 1".into());
            }
            if !(b.t_max >= 0.0 && b.t_max < b.big_t && pos(b.c_scale)) {
                return bad("barrier scan needs 0 <= t_max < T and c_scale > 0".into());
            }
        }
        if let Some(h) = &self.hodograph {
            if !(pos(h.t0) && pos(h.eta_max) && h.c > 0.0 && h.c < 1.0) {
                return bad("hodograph needs t0 > 0, eta_max > 0, 0 < c < 1".into());
            }
            if !(h.gamma > 0.0 && h.gamma < 1.0) || h.angles.is_empty() {
                return bad("hodograph needs 0 < gamma < 1 and at least one angle".into());
            }
            if !(pos(h.dt_factor) && pos(h.patch_span) && h.z_min >= 0.0 && h.g_floor >= 0.0) {
                return bad("hodograph spacing, span and floors must be positive".into());
            }
        }
        if let Some(s) = &self.sphere {
            for &a in &s.alphas {
                FlowParams::new(a)?;
            }
            if !pos(s.tol) {
                return bad("sphere tolerance must be positive".into());
            }
        }
        Ok(())
    }

    /// Disc condition: the initial flat set contains a disc of positive
    /// radius. Normalization: `{f <= 1}` lies inside the computational
    /// domain, so the window edge carries heights of at least one.
    fn validate_profile(&self, params: &FlowParams, extent: f64) -> Result<()> {
        let bad = |msg: String| Err(GcfError::Config(msg));
        let e = self.profile.exponent(params);
        match self.profile {
            Profile::FlatDisc { rho0, scale, .. } => {
                if !(rho0 > 0.0) {
                    return bad(format!("rho0 must be positive, got {rho0}"));
                }
                if !(scale > 0.0) || !(e >= 1.0) {
                    return bad(format!(
                        "rim needs scale > 0 and exponent >= 1, got {scale}, {e}"
                    ));
                }
                if rho0 >= extent {
                    return bad(format!(
                        "flat disc rho0 = {rho0} exceeds the domain {extent}"
                    ));
                }
            }
            Profile::TwoDiscs {
                offset,
                radius,
                scale,
                ..
            } => {
                if !(radius > 0.0) || !(offset >= 0.0) || !(scale > 0.0) || !(e >= 1.0) {
                    return bad(
                        "two_discs needs radius > 0, offset >= 0, scale > 0, exponent >= 1".into(),
                    );
                }
                if offset + radius >= extent {
                    return bad("two_discs flat set leaves the domain".into());
                }
            }
            Profile::Hemisphere {
                center_height,
                radius,
            } => {
                if !(radius > 0.0 && center_height >= radius) {
                    return bad(format!(
                        "hemisphere needs radius > 0 and center_height >= radius, got {radius}, {center_height}"
                    ));
                }
                if extent >= radius {
                    return bad(format!(
                        "hemisphere domain {extent} must stay inside the radius {radius}"
                    ));
                }
                // closed-form profile: the height normalization does not apply
                return Ok(());
            }
        }
        let low = match self.geometry {
            Geometry::Radial { r_max, .. } => self.profile.radial(params).map(|f| f(r_max)),
            Geometry::Graph2d { n, half_width } => {
                let grid = Grid2::square(n, half_width)?;
                let f = self.profile.planar(params);
                let mut low = f64::INFINITY;
                for i in 0..n {
                    for (a, b) in [(i, 0), (i, n - 1), (0, i), (n - 1, i)] {
                        low = low.min(f(grid.x(a), grid.y(b)));
                    }
                }
                Some(low)
            }
        };
        match low {
            Some(v) if v >= 1.0 => Ok(()),
            Some(v) => bad(format!(
                "height on the domain edge is {v}; the level set {{f <= 1}} must lie inside the domain"
            )),
            None => Ok(()),
        }
    }
}

/// Names of the shipped presets, in file order.
pub const PRESET_NAMES: [&str; 4] = [
    "benchmark_radial",
    "benchmark_2d",
    "negative_control",
    "sphere",
];

pub fn preset(name: &str) -> Result<Scenario> {
    let flat = Profile::FlatDisc {
        rho0: 0.5,
        scale: 1.0,
        exponent: None,
    };
    let interface = InterfaceSpec {
        epsilons: vec![0.0, 0.001, 0.01],
        n_theta: 8,
        envelope_t0: Some(0.01),
        ..InterfaceSpec::default()
    };
    let s = match name {
        "benchmark_radial" => Scenario {
            name: name.into(),
            alpha: 1.0,
            lambda_nd: DEFAULT_LAMBDA,
            geometry: Geometry::Radial {
                n: 801,
                r_max: 2.0,
                audit_n: 129,
            },
            profile: flat,
            cfl: 0.4,
            output: OutputTimes {
                every: 0.0025,
                until: 0.05,
            },
            interface,
            audit: AuditConfig::default(),
            waiting: Some(WaitingSpec::default()),
            hodograph: Some(HodographSpec::default()),
            sphere: None,
        },
        "benchmark_2d" | "negative_control" => Scenario {
            name: name.into(),
            alpha: 1.0,
            lambda_nd: DEFAULT_LAMBDA,
            // same spacing; the wider window keeps f >= 1 on the edge for two discs
            geometry: if name == "benchmark_2d" {
                Geometry::Graph2d {
                    n: 129,
                    half_width: 1.6,
                }
            } else {
                Geometry::Graph2d {
                    n: 145,
                    half_width: 1.8,
                }
            },
            profile: if name == "benchmark_2d" {
                flat
            } else {
                Profile::TwoDiscs {
                    offset: 0.3,
                    radius: 0.4,
                    scale: 1.0,
                    exponent: None,
                }
            },
            cfl: 0.4,
            output: OutputTimes {
                every: 0.0025,
                until: 0.02,
            },
            interface: InterfaceSpec {
                epsilons: vec![0.01],
                n_theta: 64,
                envelope_t0: Some(0.005),
                ..InterfaceSpec::default()
            },
            audit: AuditConfig::default(),
            waiting: None,
            hodograph: (name == "benchmark_2d").then(HodographSpec::default),
            sphere: None,
        },
        "sphere" => Scenario {
            name: name.into(),
            alpha: 1.0,
            lambda_nd: DEFAULT_LAMBDA,
            geometry: Geometry::Radial {
                n: 2048,
                r_max: 0.99,
                audit_n: 129,
            },
            profile: Profile::Hemisphere {
                center_height: 1.0,
                radius: 1.0,
            },
            cfl: 0.4,
            output: OutputTimes {
                every: 0.005,
                until: 0.1,
            },
            interface: InterfaceSpec {
                epsilons: vec![0.01],
                n_theta: 8,
                ..InterfaceSpec::default()
            },
            audit: AuditConfig::default(),
            waiting: None,
            hodograph: None,
            sphere: Some(SphereSpec::default()),
        },
        other => {
            return Err(GcfError::Config(format!(
                "unknown preset {other:?}; known: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(s)
}

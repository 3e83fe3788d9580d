//! Experiment configuration: one TOML file describing the profile, the
//! wavenumbers, the grid, the initial data, the time samples, tolerances,
//! and output location. The full schema:
//!
//! ```toml
//! [profile]
//! kind = "quadratic"        # "couette" | "quadratic" | "sinusoidal" | "table"
//! param = 0.2               # a (quadratic) or eps (sinusoidal); ignored otherwise
//! # table = "u_of_y.csv"    # kind = "table": CSV of y,u rows spanning [0,1]
//!
//! [grid]
//! ny = 257                  # odd, >= 65
//! levels = 8                # dyadic grading depth near the critical layer (2..=20)
//!
//! [modes]
//! alphas = [1, 2]           # nonzero integers, distinct
//!
//! [initial]
//! shape = "sine"            # "sine" | "sine2" | "bump" | "mixed"
//! amplitude = 1.0
//! # per-alpha tabulated data instead of a named shape:
//! # [initial.tabulated]
//! # 1 = "mode1.csv"         # CSV of y,re,im rows matching the grid
//!
//! [time]
//! kind = "dyadic"           # "dyadic" | "linear" | "explicit"
//! t_min = 1.0               # first positive dyadic sample
//! t_max = 256.0
//! per_octave = 3            # dyadic samples per doubling
//! # n = 41                  # kind = "linear": sample count on [0, t_max]
//! # points = [0.0, 1.5]     # kind = "explicit": ascending, first >= 0
//! fit_min = 16.0            # decay-fit window
//! fit_max = 256.0
//!
//! [tolerances]
//! oracle = 1e-8             # step-size heuristic for the reference stepper
//! # embedding = 1e-10       # absolute override of the A²+B² threshold
//!
//! [output]
//! outdir = "out"
//!
//! [options]
//! oracle_order = "second"   # "second" | "compact"
//! ```
//!
//! Every run is a pure function of this file: no environment variables are
//! read, and re-running a config reproduces all artifacts byte for byte.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{d2dy2, ddy, InitialData, ModeInitial};
use crate::oracle::EllipticOrder;
use crate::profile::ShearProfile;

/// Top-level parsed configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Base flow selection.
    pub profile: ProfileSpec,
    /// Wall-normal discretization.
    pub grid: GridSpec,
    /// Streamwise wavenumbers.
    pub modes: ModesSpec,
    /// Initial vorticity per mode.
    #[serde(default)]
    pub initial: InitialSpec,
    /// Time sampling.
    #[serde(default)]
    pub time: TimeSpec,
    /// Numerical tolerances.
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Artifact destination.
    #[serde(default)]
    pub output: OutputSpec,
    /// Subcommand knobs.
    #[serde(default)]
    pub options: Options,
}

/// Which shear profile to run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    /// "couette", "quadratic", "sinusoidal", or "table".
    pub kind: String,
    /// Shape parameter for the parametric kinds.
    #[serde(default)]
    pub param: f64,
    /// CSV path (y,u rows) for kind = "table".
    #[serde(default)]
    pub table: Option<PathBuf>,
}

/// Wall-normal grid sizes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Node count (odd, at least 65).
    pub ny: usize,
    /// Dyadic grading depth near the critical layer.
    #[serde(default = "default_levels")]
    pub levels: i32,
}

fn default_levels() -> i32 {
    8
}

/// The mode list.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesSpec {
    /// Signed nonzero integer wavenumbers, no duplicates.
    pub alphas: Vec<i64>,
}

/// Initial vorticity: a named analytic shape, or per-mode tabulated samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    /// "sine", "sine2", "bump", or "mixed".
    #[serde(default = "default_shape")]
    pub shape: String,
    /// Overall scale applied to the named shape.
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    /// Per-alpha CSV paths (y,re,im rows) overriding the named shape.
    #[serde(default)]
    pub tabulated: BTreeMap<String, PathBuf>,
}

fn default_shape() -> String {
    "sine".into()
}

fn default_amplitude() -> f64 {
    1.0
}

impl Default for InitialSpec {
    fn default() -> InitialSpec {
        InitialSpec {
            shape: default_shape(),
            amplitude: default_amplitude(),
            tabulated: BTreeMap::new(),
        }
    }
}

/// Time-sample generation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    /// "dyadic", "linear", or "explicit".
    #[serde(default = "default_tkind")]
    pub kind: String,
    /// First positive sample of the dyadic ladder.
    #[serde(default = "default_tmin")]
    pub t_min: f64,
    /// Last sample.
    #[serde(default = "default_tmax")]
    pub t_max: f64,
    /// Dyadic samples per doubling.
    #[serde(default = "default_per_octave")]
    pub per_octave: usize,
    /// Sample count for the linear kind (0 and t_max included).
    #[serde(default)]
    pub n: Option<usize>,
    /// Explicit ascending samples.
    #[serde(default)]
    pub points: Option<Vec<f64>>,
    /// Lower end of the decay-fit window.
    #[serde(default = "default_fit_min")]
    pub fit_min: f64,
    /// Upper end of the decay-fit window.
    #[serde(default = "default_fit_max")]
    pub fit_max: f64,
}

fn default_tkind() -> String {
    "dyadic".into()
}
fn default_tmin() -> f64 {
    1.0
}
fn default_tmax() -> f64 {
    256.0
}
fn default_per_octave() -> usize {
    3
}
fn default_fit_min() -> f64 {
    16.0
}
fn default_fit_max() -> f64 {
    256.0
}

impl Default for TimeSpec {
    fn default() -> TimeSpec {
        TimeSpec {
            kind: default_tkind(),
            t_min: default_tmin(),
            t_max: default_tmax(),
            per_octave: default_per_octave(),
            n: None,
            points: None,
            fit_min: default_fit_min(),
            fit_max: default_fit_max(),
        }
    }
}

/// Positive numerical tolerances.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Accuracy heuristic handed to the reference stepper.
    #[serde(default = "default_oracle_tol")]
    pub oracle: f64,
    /// Absolute override of the embedding threshold on A²+B².
    #[serde(default)]
    pub embedding: Option<f64>,
}

fn default_oracle_tol() -> f64 {
    1e-8
}

impl Default for Tolerances {
    fn default() -> Tolerances {
        Tolerances {
            oracle: default_oracle_tol(),
            embedding: None,
        }
    }
}

/// Where artifacts land.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Directory for CSV/JSON artifacts (created if missing).
    #[serde(default = "default_outdir")]
    pub outdir: PathBuf,
}

fn default_outdir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSpec {
    fn default() -> OutputSpec {
        OutputSpec {
            outdir: default_outdir(),
        }
    }
}

/// Subcommand-specific knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    /// Elliptic scheme for the reference stepper: "second" or "compact".
    #[serde(default = "default_order")]
    pub oracle_order: String,
}

fn default_order() -> String {
    "second".into()
}

impl Default for Options {
    fn default() -> Options {
        Options {
            oracle_order: default_order(),
        }
    }
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::ConfigError(msg.into())
}

impl ExperimentConfig {
    /// Parse and validate a TOML config file.
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| cfg_err(format!("cannot read {}: {e}", path.display())))?;
        ExperimentConfig::from_str(&text)
    }

    /// Parse and validate config text.
    #[allow(clippy::should_implement_trait)]
    pub fn from_str(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| cfg_err(format!("parse failure: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Check every invariant the schema promises.
    pub fn validate(&self) -> Result<()> {
        match self.profile.kind.as_str() {
            "couette" | "quadratic" | "sinusoidal" => {}
            "table" => {
                if self.profile.table.is_none() {
                    return Err(cfg_err("profile.kind = \"table\" needs profile.table"));
                }
            }
            other => return Err(cfg_err(format!("unknown profile kind {other:?}"))),
        }
        if self.grid.ny < 65 {
            return Err(cfg_err(format!("grid.ny = {} < 65", self.grid.ny)));
        }
        if self.grid.ny % 2 == 0 {
            return Err(cfg_err(format!(
                "grid.ny = {} must be odd (composite quadrature panels)",
                self.grid.ny
            )));
        }
        if !(2..=20).contains(&self.grid.levels) {
            return Err(cfg_err(format!(
                "grid.levels = {} outside 2..=20",
                self.grid.levels
            )));
        }
        if self.modes.alphas.is_empty() {
            return Err(cfg_err("modes.alphas is empty"));
        }
        for (i, &a) in self.modes.alphas.iter().enumerate() {
            if a == 0 {
                return Err(cfg_err(
                    "modes.alphas contains 0: the x-mean mode is excluded by convention",
                ));
            }
            if self.modes.alphas[..i].contains(&a) {
                return Err(cfg_err(format!("modes.alphas repeats {a}")));
            }
        }
        match self.initial.shape.as_str() {
            "sine" | "sine2" | "bump" | "mixed" => {}
            other => return Err(cfg_err(format!("unknown initial shape {other:?}"))),
        }
        if !self.initial.amplitude.is_finite() {
            return Err(cfg_err("initial.amplitude must be finite"));
        }
        for key in self.initial.tabulated.keys() {
            let parsed: i64 = key
                .parse()
                .map_err(|_| cfg_err(format!("initial.tabulated key {key:?} is not an integer")))?;
            if parsed == 0 {
                return Err(cfg_err(
                    "initial.tabulated key 0: the x-mean mode is excluded",
                ));
            }
            if !self.modes.alphas.contains(&parsed) {
                return Err(cfg_err(format!(
                    "initial.tabulated key {key} is not in modes.alphas"
                )));
            }
        }
        match self.time.kind.as_str() {
            "dyadic" => {
                if !(self.time.t_min > 0.0 && self.time.t_max >= self.time.t_min) {
                    return Err(cfg_err("time: need 0 < t_min <= t_max"));
                }
                if self.time.per_octave == 0 || self.time.per_octave > 16 {
                    return Err(cfg_err("time.per_octave outside 1..=16"));
                }
            }
            "linear" => {
                let n = self.time.n.unwrap_or(0);
                if n < 2 {
                    return Err(cfg_err("time.kind = \"linear\" needs n >= 2"));
                }
                if !(self.time.t_max > 0.0) {
                    return Err(cfg_err("time.t_max must be positive"));
                }
            }
            "explicit" => {
                let pts = self
                    .time
                    .points
                    .as_ref()
                    .ok_or_else(|| cfg_err("time.kind = \"explicit\" needs time.points"))?;
                if pts.is_empty() || pts[0] < 0.0 {
                    return Err(cfg_err("time.points must start at t >= 0"));
                }
                if pts.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(cfg_err("time.points must strictly increase"));
                }
            }
            other => return Err(cfg_err(format!("unknown time kind {other:?}"))),
        }
        if !(self.time.fit_min > 0.0 && self.time.fit_max > self.time.fit_min) {
            return Err(cfg_err("time: need 0 < fit_min < fit_max"));
        }
        if !(self.tolerances.oracle > 0.0) {
            return Err(cfg_err("tolerances.oracle must be positive"));
        }
        if let Some(e) = self.tolerances.embedding {
            if !(e > 0.0) {
                return Err(cfg_err("tolerances.embedding must be positive"));
            }
        }
        match self.options.oracle_order.as_str() {
            "second" | "compact" => {}
            other => return Err(cfg_err(format!("unknown oracle order {other:?}"))),
        }
        Ok(())
    }

    /// Construct the configured shear profile.
    pub fn build_profile(&self) -> Result<ShearProfile> {
        match self.profile.kind.as_str() {
            "couette" => Ok(ShearProfile::couette()),
            "quadratic" => ShearProfile::quadratic(self.profile.param),
            "sinusoidal" => ShearProfile::sinusoidal(self.profile.param),
            "table" => {
                let path = self.profile.table.as_ref().unwrap();
                let (ys, us) = read_table2(path)?;
                ShearProfile::from_table(&ys, &us)
            }
            _ => unreachable!("validated"),
        }
    }

    /// The uniform y-grid for the configured node count.
    pub fn build_ygrid(&self) -> Vec<f64> {
        let ny = self.grid.ny;
        (0..ny).map(|i| i as f64 / (ny - 1) as f64).collect()
    }

    /// The time samples (always starting at 0).
    pub fn build_tgrid(&self) -> Vec<f64> {
        match self.time.kind.as_str() {
            "dyadic" => {
                let mut out = vec![0.0];
                let factor = 2.0_f64.powf(1.0 / self.time.per_octave as f64);
                let mut t = self.time.t_min;
                while t <= self.time.t_max * (1.0 + 1e-12) {
                    out.push(t);
                    t *= factor;
                }
                out
            }
            "linear" => {
                let n = self.time.n.unwrap();
                (0..n)
                    .map(|i| self.time.t_max * i as f64 / (n - 1) as f64)
                    .collect()
            }
            "explicit" => {
                let pts = self.time.points.clone().unwrap();
                if pts[0] > 0.0 {
                    let mut out = vec![0.0];
                    out.extend(pts);
                    out
                } else {
                    pts
                }
            }
            _ => unreachable!("validated"),
        }
    }

    /// The initial data for every configured mode.
    pub fn build_initial(&self, base: &Path) -> Result<InitialData> {
        let ygrid = self.build_ygrid();
        let h = 1.0 / (self.grid.ny - 1) as f64;
        let mut modes = Vec::with_capacity(self.modes.alphas.len());
        for &a in &self.modes.alphas {
            let alpha = a as f64;
            let key = a.to_string();
            let mode = if let Some(rel) = self.initial.tabulated.get(&key) {
                let path = if rel.is_absolute() {
                    rel.clone()
                } else {
                    base.join(rel)
                };
                let omega0 = read_mode_csv(&path, self.grid.ny)?;
                let domega0 = ddy(&omega0, h);
                let d2omega0 = d2dy2(&omega0, h);
                ModeInitial {
                    alpha,
                    omega0,
                    domega0,
                    d2omega0,
                }
            } else {
                named_shape(&self.initial.shape, self.initial.amplitude, alpha, &ygrid)
            };
            modes.push(mode);
        }
        Ok(InitialData { ygrid, modes })
    }

    /// The configured elliptic scheme for the reference stepper.
    pub fn oracle_order(&self) -> EllipticOrder {
        match self.options.oracle_order.as_str() {
            "compact" => EllipticOrder::FourthCompact,
            _ => EllipticOrder::Second,
        }
    }

    /// Effective embedding threshold on A²+B².
    pub fn embedding_tol(&self, p: &ShearProfile) -> f64 {
        self.tolerances
            .embedding
            .unwrap_or_else(|| crate::spectrum::default_embedding_tol(p))
    }
}

/// Sample a named analytic shape (value together with two derivatives).
fn named_shape(shape: &str, amplitude: f64, alpha: f64, ygrid: &[f64]) -> ModeInitial {
    let a = amplitude;
    match shape {
        "sine" => ModeInitial::from_fn(
            alpha,
            ygrid,
            |y| Complex64::new(a * (PI * y).sin(), 0.0),
            |y| Complex64::new(a * PI * (PI * y).cos(), 0.0),
            |y| Complex64::new(-a * PI * PI * (PI * y).sin(), 0.0),
        ),
        "sine2" => ModeInitial::from_fn(
            alpha,
            ygrid,
            |y| Complex64::new(a * (2.0 * PI * y).sin(), 0.0),
            |y| Complex64::new(a * 2.0 * PI * (2.0 * PI * y).cos(), 0.0),
            |y| Complex64::new(-a * 4.0 * PI * PI * (2.0 * PI * y).sin(), 0.0),
        ),
        "bump" => ModeInitial::from_fn(
            alpha,
            ygrid,
            |y| Complex64::new(a * 16.0 * (y * y * (1.0 - y) * (1.0 - y)), 0.0),
            |y| Complex64::new(a * 16.0 * 2.0 * y * (1.0 - y) * (1.0 - 2.0 * y), 0.0),
            |y| Complex64::new(a * 16.0 * 2.0 * (1.0 - 6.0 * y + 6.0 * y * y), 0.0),
        ),
        "mixed" => ModeInitial::from_fn(
            alpha,
            ygrid,
            |y| Complex64::new(a * ((PI * y).sin() + 0.5 * (2.0 * PI * y).sin()), 0.0),
            |y| Complex64::new(a * PI * ((PI * y).cos() + (2.0 * PI * y).cos()), 0.0),
            |y| {
                Complex64::new(
                    -a * PI * PI * ((PI * y).sin() + 2.0 * (2.0 * PI * y).sin()),
                    0.0,
                )
            },
        ),
        _ => unreachable!("validated"),
    }
}

/// Read a two-column numeric CSV (comments and a header line tolerated).
fn read_table2(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| cfg_err(format!("cannot read {}: {e}", path.display())))?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 2 {
            return Err(cfg_err(format!(
                "{}: expected 2 columns, got {}",
                path.display(),
                cells.len()
            )));
        }
        match (cells[0].parse::<f64>(), cells[1].parse::<f64>()) {
            (Ok(x), Ok(y)) => {
                xs.push(x);
                ys.push(y);
            }
            _ if xs.is_empty() => continue, // header row
            _ => {
                return Err(cfg_err(format!(
                    "{}: non-numeric row {line:?}",
                    path.display()
                )))
            }
        }
    }
    Ok((xs, ys))
}

/// Read tabulated mode data: y,re,im rows whose y-column must match the
/// uniform ny-node grid.
fn read_mode_csv(path: &Path, ny: usize) -> Result<Vec<Complex64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| cfg_err(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 3 {
            return Err(cfg_err(format!(
                "{}: expected y,re,im rows",
                path.display()
            )));
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            cells.iter().map(|c| c.parse::<f64>()).collect();
        match parsed {
            Ok(v) => rows.push((v[0], Complex64::new(v[1], v[2]))),
            Err(_) if rows.is_empty() => continue, // header row
            Err(_) => {
                return Err(cfg_err(format!(
                    "{}: non-numeric row {line:?}",
                    path.display()
                )))
            }
        }
    }
    if rows.len() != ny {
        return Err(cfg_err(format!(
            "{}: {} rows but the grid has {ny} nodes",
            path.display(),
            rows.len()
        )));
    }
    let mut out = Vec::with_capacity(ny);
    for (i, (y, v)) in rows.into_iter().enumerate() {
        let expect = i as f64 / (ny - 1) as f64;
        if (y - expect).abs() > 1e-9 {
            return Err(cfg_err(format!(
                "{}: row {i} has y = {y}, expected {expect}",
                path.display()
            )));
        }
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [profile]
        kind = "couette"

        [grid]
        ny = 65

        [modes]
        alphas = [1]
    "#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ExperimentConfig::from_str(MINIMAL).unwrap();
        assert_eq!(cfg.grid.levels, 8);
        assert_eq!(cfg.initial.shape, "sine");
        assert_eq!(cfg.time.kind, "dyadic");
        let t = cfg.build_tgrid();
        assert_eq!(t.first(), Some(&0.0));
        assert!((t.last().unwrap() - 256.0).abs() < 1e-9);
        assert_eq!(t.len(), 26); // 0 plus three samples per octave over 1..256
        let p = cfg.build_profile().unwrap();
        assert_eq!(p.u(0.5), 0.5);
        let init = cfg.build_initial(Path::new(".")).unwrap();
        assert_eq!(init.modes.len(), 1);
        assert!((init.modes[0].omega0[32].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_zero_is_rejected() {
        let text = MINIMAL.replace("alphas = [1]", "alphas = [1, 0]");
        match ExperimentConfig::from_str(&text) {
            Err(Error::ConfigError(msg)) => assert!(msg.contains("x-mean")),
            other => panic!("expected ConfigError, got {other:?}"),
        }
    }

    #[test]
    fn bad_values_are_rejected_with_reasons() {
        for (needle, replacement) in [
            ("ny = 65", "ny = 33"),
            ("ny = 65", "ny = 66"),
            ("kind = \"couette\"", "kind = \"poiseuille\""),
            ("alphas = [1]", "alphas = [1, 1]"),
            ("alphas = [1]", "alphas = []"),
        ] {
            let text = MINIMAL.replace(needle, replacement);
            assert!(
                matches!(
                    ExperimentConfig::from_str(&text),
                    Err(Error::ConfigError(_))
                ),
                "{replacement} should be rejected"
            );
        }
        let extra = format!("{MINIMAL}\n[tolerances]\noracle = -1.0\n");
        assert!(matches!(
            ExperimentConfig::from_str(&extra),
            Err(Error::ConfigError(_))
        ));
        let unknown = format!("{MINIMAL}\n[nonsense]\nx = 1\n");
        assert!(matches!(
            ExperimentConfig::from_str(&unknown),
            Err(Error::ConfigError(_))
        ));
    }

    #[test]
    fn dyadic_grid_honors_per_octave() {
        let text = format!(
            "{MINIMAL}\n[time]\nkind = \"dyadic\"\nt_min = 16.0\nt_max = 256.0\nper_octave = 3\n"
        );
        let cfg = ExperimentConfig::from_str(&text).unwrap();
        let t = cfg.build_tgrid();
        assert_eq!(t[0], 0.0);
        assert_eq!(t.len(), 1 + 3 * 4 + 1);
        assert!((t.last().unwrap() - 256.0).abs() < 1e-9);
        for w in t[1..].windows(2) {
            assert!((w[1] / w[0] - 2.0_f64.powf(1.0 / 3.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn named_shapes_have_consistent_derivatives() {
        let ygrid: Vec<f64> = (0..257).map(|i| i as f64 / 256.0).collect();
        let h = 1.0 / 256.0;
        for shape in ["sine", "sine2", "bump", "mixed"] {
            let m = named_shape(shape, 0.7, 1.0, &ygrid);
            assert!(
                m.fd_consistency(h) <= 30.0 * h * h,
                "{shape}: stored derivative inconsistent with samples"
            );
            assert!(m.omega0[0].norm() < 1e-12 && m.omega0[256].norm() < 1e-12);
        }
    }

    #[test]
    fn tabulated_modes_round_trip_through_csv() {
        let dir = tempfile::tempdir().unwrap();
        let ny = 65;
        let path = dir.path().join("mode1.csv");
        let mut text = String::from("# y,re,im\n");
        for i in 0..ny {
            let y = i as f64 / (ny - 1) as f64;
            text.push_str(&format!("{y:.17e},{:.17e},{:.17e}\n", y * (1.0 - y), -y));
        }
        std::fs::write(&path, text).unwrap();
        let cfg_text = format!("{MINIMAL}\n[initial]\n[initial.tabulated]\n1 = \"mode1.csv\"\n");
        let cfg = ExperimentConfig::from_str(&cfg_text).unwrap();
        let init = cfg.build_initial(dir.path()).unwrap();
        let m = &init.modes[0];
        let y = 32.0 / 64.0;
        assert!((m.omega0[32].re - y * (1.0 - y)).abs() < 1e-15);
        assert!((m.omega0[32].im + y).abs() < 1e-15);
        // Finite-difference derivatives of the quadratic are exact.
        assert!((m.d2omega0[30].re + 2.0).abs() < 1e-9);
    }
}

//! Configuration-driven experiments with fit reports, CSV curves and field snapshots.

mod runners;

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::SolverConfig;
use crate::error::{Error, Result};
use crate::fit::PowerFit;
use crate::initial::InitialSpec;
use crate::observables::{ConvexRegion, ObservableRecord, SmoothCutoff};
use crate::potentials::PotentialSpec;
use crate::scattering::ScatteringConfig;
use crate::spectral::snapshot::write_snapshot;
use crate::spectral::{GridSpec, SpectralField};

pub use runners::{
    run_blowup_probe, run_conservation, run_free_decay, run_kernel_lightcone, run_max_velocity, run_min_velocity,
    run_phase_space, run_picard_contraction, run_scattering_decay,
};

/// Cubic periodic box with `n` points per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub n: usize,
    pub length: f64,
}

impl GridConfig {
    pub fn build(&self) -> Result<GridSpec> {
        GridSpec::cubic(self.dim, self.n, self.length)
    }
}

fn default_potential() -> PotentialSpec {
    PotentialSpec::zero()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub grid: GridConfig,
    #[serde(default = "default_potential")]
    pub potential: PotentialSpec,
    #[serde(default)]
    pub initial: Option<InitialSpec>,
    pub solver: SolverConfig,
    #[serde(default)]
    pub scattering: Option<ScatteringConfig>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

fn p_list() -> Vec<f64> {
    vec![4.0, 8.0]
}
fn lightcone_times() -> Vec<f64> {
    vec![5.0, 10.0, 20.0]
}
fn ratio_cap() -> f64 {
    1e-2
}
fn samples() -> usize {
    80
}
fn mass_tol() -> f64 {
    1e-12
}
fn momentum_tol() -> f64 {
    1e-10
}
fn energy_ratio() -> [f64; 2] {
    [3.2, 4.8]
}
fn floor_cap() -> f64 {
    1e-9
}
fn horizon_fraction() -> f64 {
    0.8
}
fn relative_tolerance() -> f64 {
    0.25
}
fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn phase_threshold() -> f64 {
    -0.7
}
fn defect_prediction() -> f64 {
    -2.0
}
fn defect_tolerance() -> f64 {
    0.3
}
fn band() -> [f64; 2] {
    [0.4, 0.9]
}
fn probe() -> f64 {
    0.3
}
fn contraction_cap() -> f64 {
    0.5
}
fn product_cap() -> f64 {
    0.05
}
fn agreement_factor() -> f64 {
    5.0
}

/// Which experiment to run and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    /// Free evolution; fits `||psi_t||_inf` and `||psi_t||_p` against `t^(-d/2)` and `t^(-d(1 - 2/p)/2)`.
    FreeDecay {
        #[serde(default)]
        window: Option<[f64; 2]>,
        #[serde(default = "p_list")]
        lebesgue_exponents: Vec<f64>,
        #[serde(default = "samples")]
        samples: usize,
        /// Allowed slope error; 0.08 in one dimension and 0.1 otherwise when absent.
        #[serde(default)]
        tolerance: Option<f64>,
    },
    /// Free evolution of the kernel `F^-1 <xi>^(-d/2 - 1)` inside and outside the light cone.
    KernelLightcone {
        /// The last time is checked against envelopes calibrated on the others.
        #[serde(default = "lightcone_times")]
        times: Vec<f64>,
        #[serde(default = "ratio_cap")]
        ratio_threshold: f64,
    },
    /// Mass, momentum and energy drift, with an energy error order check at `dt / 2`.
    Conservation {
        #[serde(default = "yes")]
        refine: bool,
        #[serde(default = "mass_tol")]
        mass_tolerance: f64,
        #[serde(default = "momentum_tol")]
        momentum_tolerance: f64,
        #[serde(default = "energy_ratio")]
        energy_ratio: [f64; 2],
    },
    /// `||1_Y psi_t|| <= e^(t - dist(X, Y)) ||psi_0|| + eps_grid` for data supported in `X`.
    MaxVelocity {
        source: ConvexRegion,
        target: ConvexRegion,
        #[serde(default = "floor_cap")]
        floor_threshold: f64,
        #[serde(default = "horizon_fraction")]
        horizon_fraction: f64,
    },
    /// Decay of `||psi_t - e^(-it<grad>) psi_+||_Hs` against `1 - (d/r) min(1, r/q)`.
    ScatteringDecay {
        #[serde(default = "one")]
        r: f64,
        #[serde(default = "relative_tolerance")]
        tolerance: f64,
        #[serde(default = "yes")]
        check_doubling: bool,
    },
    /// `||g(x^2/t^2) f(Theta^2) psi_t||` for disjoint supports, and the velocity defect.
    PhaseSpace {
        f: SmoothCutoff,
        g: SmoothCutoff,
        #[serde(default)]
        window: Option<[f64; 2]>,
        #[serde(default = "phase_threshold")]
        exponent_threshold: f64,
        #[serde(default = "defect_prediction")]
        defect_prediction: f64,
        #[serde(default = "defect_tolerance")]
        defect_tolerance: f64,
    },
    /// Mass in slow regions for data scattering to a `Theta^2`-band.
    MinVelocity {
        #[serde(default = "band")]
        band: [f64; 2],
        #[serde(default = "probe")]
        probe: f64,
        #[serde(default)]
        amplitude: Option<f64>,
        #[serde(default)]
        window: Option<[f64; 2]>,
    },
    /// Sweep of the initial mass under a focusing potential and its sign-flipped twin.
    BlowupProbe {
        masses: Vec<f64>,
        #[serde(default = "yes")]
        include_defocusing: bool,
    },
    /// Duhamel fixed point: contraction ratios and agreement with Strang splitting.
    PicardContraction {
        #[serde(default = "contraction_cap")]
        ratio_threshold: f64,
        #[serde(default = "product_cap")]
        product_threshold: f64,
        #[serde(default = "agreement_factor")]
        agreement_factor: f64,
    },
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::FreeDecay { .. } => "free_decay",
            Experiment::KernelLightcone { .. } => "kernel_lightcone",
            Experiment::Conservation { .. } => "conservation",
            Experiment::MaxVelocity { .. } => "max_velocity",
            Experiment::ScatteringDecay { .. } => "scattering_decay",
            Experiment::PhaseSpace { .. } => "phase_space",
            Experiment::MinVelocity { .. } => "min_velocity",
            Experiment::BlowupProbe { .. } => "blowup_probe",
            Experiment::PicardContraction { .. } => "picard_contraction",
        }
    }
}

/// Relative mass within the outer 5% of the box above which a run counts as wrapped.
pub const WRAP_THRESHOLD: f64 = 1e-8;

/// Radius around the data center beyond which the initial state is negligible.
pub fn initial_reach(spec: &InitialSpec, dim: usize) -> Option<f64> {
    let offset = crate::spectral::grid::norm(&spec.center(dim));
    let radius = match spec {
        InitialSpec::Bump { radius, .. } => Some(*radius),
        InitialSpec::Gaussian { width, .. } | InitialSpec::Modulated { width, .. } => Some(6.0 * width),
        InitialSpec::RandomSmooth { .. } => None,
    }?;
    Some(offset + radius)
}

/// Smallest box length keeping a signal of the given reach inside the light cone up to `horizon`.
pub fn light_cone_length(horizon: f64, reach: f64) -> f64 {
    2.0 * (horizon + reach)
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Field-level validation, including the light-cone sizing rule.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        let d = self.grid.dim;
        if let Err(e) = self.grid.build() {
            errors.push(format!("grid: {e}"));
        }
        self.potential.collect_errors(d, "potential", &mut errors);
        self.solver.collect_errors("solver", &mut errors);
        if let Some(init) = &self.initial {
            init.collect_errors(d, "initial", &mut errors);
        } else if !matches!(self.experiment, Experiment::KernelLightcone { .. }) {
            errors.push(format!("initial: required for {}", self.experiment.name()));
        }
        if let Some(sc) = &self.scattering {
            sc.collect_errors("scattering", &mut errors);
        } else if matches!(self.experiment, Experiment::ScatteringDecay { .. } | Experiment::MinVelocity { .. }) {
            errors.push(format!("scattering: required for {}", self.experiment.name()));
        }
        self.collect_experiment_errors(&mut errors);
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigInvalid(errors))
        }
    }

    fn sizing(&self, horizon: f64, extra: f64, errors: &mut Vec<String>) {
        let Some(init) = &self.initial else { return };
        match initial_reach(init, self.grid.dim) {
            Some(reach) => {
                let need = light_cone_length(horizon, reach + extra);
                if self.grid.length < need {
                    errors.push(format!(
                        "grid.length: light-cone sizing rule L >= 2 (T + R0{}) requires at least {need:.2}, got {}",
                        if extra > 0.0 { " + D" } else { "" },
                        self.grid.length
                    ));
                }
            }
            None => errors.push(format!(
                "initial: {} needs spatially localized data for the light-cone sizing rule",
                self.experiment.name()
            )),
        }
    }

    fn collect_experiment_errors(&self, errors: &mut Vec<String>) {
        let d = self.grid.dim;
        let t_final = self.solver.t_final;
        let check_window = |w: &Option<[f64; 2]>, horizon: f64, errors: &mut Vec<String>| {
            if let Some([a, b]) = w {
                if !(a.is_finite() && b.is_finite() && 0.0 < *a && a < b && *b <= horizon) {
                    errors.push(format!("experiment.window: need 0 < lo < hi <= {horizon}, got [{a}, {b}]"));
                }
            }
        };
        match &self.experiment {
            Experiment::FreeDecay { window, lebesgue_exponents, samples, tolerance } => {
                check_window(window, t_final, errors);
                if lebesgue_exponents.iter().any(|p| !(*p > 2.0 && p.is_finite())) {
                    errors.push("experiment.lebesgue_exponents: each p must lie in (2, inf)".into());
                }
                if *samples < 4 {
                    errors.push("experiment.samples: at least 4 sample times are needed".into());
                }
                if let Some(t) = tolerance {
                    if !(*t > 0.0) {
                        errors.push(format!("experiment.tolerance: must be positive, got {t}"));
                    }
                }
                self.sizing(t_final, 0.0, errors);
            }
            Experiment::KernelLightcone { times, ratio_threshold } => {
                if times.len() < 2 || times.iter().any(|t| !(*t > 0.0)) {
                    errors.push("experiment.times: need at least two positive times".into());
                } else if times.windows(2).any(|w| w[1] <= w[0]) {
                    errors.push("experiment.times: must be increasing".into());
                } else {
                    let need = light_cone_length(2.0 * times[times.len() - 1], 10.0);
                    if self.grid.length < need {
                        errors.push(format!(
                            "grid.length: light-cone sizing rule for the kernel out to |x| = 2t requires at least {need:.2}, got {}",
                            self.grid.length
                        ));
                    }
                }
                if !(*ratio_threshold > 0.0) {
                    errors.push("experiment.ratio_threshold: must be positive".into());
                }
            }
            Experiment::Conservation { energy_ratio, .. } => {
                if !(energy_ratio[0] < energy_ratio[1]) {
                    errors.push("experiment.energy_ratio: need lo < hi".into());
                }
            }
            Experiment::MaxVelocity { source, target, horizon_fraction, .. } => {
                source.collect_errors(d, "experiment.source", errors);
                target.collect_errors(d, "experiment.target", errors);
                if source.dim() == d && target.dim() == d {
                    let dist = crate::observables::region_distance(source, target);
                    if !(dist > 0.0) {
                        errors.push("experiment.target: must lie at positive distance from experiment.source".into());
                    }
                    self.sizing(t_final, dist, errors);
                }
                if !(*horizon_fraction > 0.0 && *horizon_fraction <= 1.0) {
                    errors.push("experiment.horizon_fraction: must lie in (0, 1]".into());
                }
            }
            Experiment::ScatteringDecay { r, tolerance, check_doubling } => {
                if !(*r >= 1.0) {
                    errors.push(format!("experiment.r: must be at least 1, got {r}"));
                }
                if !(*tolerance > 0.0) {
                    errors.push("experiment.tolerance: must be positive".into());
                }
                if let Some(sc) = &self.scattering {
                    let horizon = if *check_doubling { 2.0 * sc.t_inf } else { sc.t_inf };
                    self.sizing(horizon, 0.0, errors);
                }
            }
            Experiment::PhaseSpace { f, g, window, .. } => {
                for (name, c) in [("f", f), ("g", g)] {
                    if let Err(e) = c.validate() {
                        errors.push(format!("experiment.{name}: {e}"));
                    }
                }
                if f.overlaps(g) {
                    errors.push("experiment.g: support must be disjoint from the support of experiment.f".into());
                }
                check_window(window, t_final, errors);
                self.sizing(t_final, 0.0, errors);
            }
            Experiment::MinVelocity { band, probe, amplitude, window } => {
                if !(0.0 < band[0] && band[0] < band[1] && band[1] <= 1.0) {
                    errors.push(format!("experiment.band: need 0 < lo < hi <= 1, got {band:?}"));
                }
                if !(*probe > 0.0 && *probe < band[0]) {
                    errors.push(format!("experiment.probe: must lie in (0, band lo), got {probe}"));
                }
                if let Some(a) = amplitude {
                    if !(*a > 0.0) {
                        errors.push("experiment.amplitude: must be positive".into());
                    }
                }
                check_window(window, t_final, errors);
                let horizon = self.scattering.as_ref().map_or(t_final, |s| s.t_inf.max(t_final));
                self.sizing(horizon, 0.0, errors);
            }
            Experiment::BlowupProbe { masses, .. } => {
                if masses.is_empty() || masses.iter().any(|m| !(*m > 0.0)) {
                    errors.push("experiment.masses: need at least one positive mass".into());
                } else if masses.windows(2).any(|w| w[1] <= w[0]) {
                    errors.push("experiment.masses: must be increasing".into());
                }
                let k = self.potential.couplings();
                if k.is_empty() || k.iter().any(|c| *c >= 0.0) {
                    errors.push("potential: blowup_probe needs a focusing potential (every coupling negative)".into());
                }
            }
            Experiment::PicardContraction { ratio_threshold, .. } => {
                if !(*ratio_threshold > 0.0 && *ratio_threshold < 1.0) {
                    errors.push("experiment.ratio_threshold: must lie in (0, 1)".into());
                }
            }
        }
    }
}

/// One quantitative check inside a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    /// Human-readable acceptance condition, e.g. `<= 1e-12`.
    pub condition: String,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, measured: f64, bound: f64) -> Self {
        Self { name: name.into(), measured, condition: format!("<= {bound:e}"), passed: measured <= bound }
    }

    pub fn within(name: &str, measured: f64, target: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            condition: format!("within {tol} of {target}"),
            passed: (measured - target).abs() <= tol,
        }
    }

    pub fn between(name: &str, measured: f64, lo: f64, hi: f64) -> Self {
        Self { name: name.into(), measured, condition: format!("in [{lo}, {hi}]"), passed: lo <= measured && measured <= hi }
    }

    pub fn holds(name: &str, measured: f64, condition: &str, passed: bool) -> Self {
        Self { name: name.into(), measured, condition: condition.into(), passed }
    }
}

/// Result of one experiment: the main fit, its prediction and every check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub experiment: String,
    /// The estimate being reproduced, stated in words.
    pub claim: String,
    pub fit: Option<PowerFit>,
    pub window: Option<[f64; 2]>,
    pub predicted: Option<f64>,
    pub tolerance: Option<f64>,
    /// All predictions compatible with the potential when it spans several classes.
    #[serde(default)]
    pub candidates: Vec<f64>,
    pub checks: Vec<Check>,
    #[serde(default)]
    pub diagnostics: BTreeMap<String, f64>,
    #[serde(default)]
    pub notes: Vec<String>,
    pub seed: u64,
    pub passed: bool,
}

impl FitReport {
    pub fn new(experiment: &str, claim: &str, seed: u64) -> Self {
        Self {
            experiment: experiment.into(),
            claim: claim.into(),
            fit: None,
            window: None,
            predicted: None,
            tolerance: None,
            candidates: Vec::new(),
            checks: Vec::new(),
            diagnostics: BTreeMap::new(),
            notes: Vec::new(),
            seed,
            passed: false,
        }
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn diagnostic(&mut self, name: &str, value: f64) {
        self.diagnostics.insert(name.into(), value);
    }

    pub fn finish(mut self) -> Self {
        self.passed = !self.checks.is_empty() && self.checks.iter().all(|c| c.passed);
        self
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// A named table written as `<name>.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Curve {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// One row per record: `t` followed by the union of record columns.
    pub fn from_records(name: &str, records: &[ObservableRecord]) -> Self {
        let mut header = vec!["t".to_string()];
        for r in records {
            for (k, _) in &r.values {
                if !header.contains(k) {
                    header.push(k.clone());
                }
            }
        }
        let rows = records
            .iter()
            .map(|r| {
                let mut row = vec![r.t];
                row.extend(header[1..].iter().map(|k| r.get(k).unwrap_or(f64::NAN)));
                row
            })
            .collect();
        Self { name: name.into(), header, rows }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn write<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for row in &self.rows {
            out.write_record(row.iter().map(|v| format!("{v:.17e}")))?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: FitReport,
    pub curves: Vec<Curve>,
    pub snapshots: Vec<(String, SpectralField)>,
}

/// Validates the configuration and runs the experiment it names.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    match cfg.experiment {
        Experiment::FreeDecay { .. } => run_free_decay(cfg),
        Experiment::KernelLightcone { .. } => run_kernel_lightcone(cfg),
        Experiment::Conservation { .. } => run_conservation(cfg),
        Experiment::MaxVelocity { .. } => run_max_velocity(cfg),
        Experiment::ScatteringDecay { .. } => run_scattering_decay(cfg),
        Experiment::PhaseSpace { .. } => run_phase_space(cfg),
        Experiment::MinVelocity { .. } => run_min_velocity(cfg),
        Experiment::BlowupProbe { .. } => run_blowup_probe(cfg),
        Experiment::PicardContraction { .. } => run_picard_contraction(cfg),
    }
}

/// Writes `report.json`, `config.json`, one CSV per curve and one `.bssf` per snapshot.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, out: &RunOutput) -> Result<()> {
    fs::create_dir_all(dir)?;
    serde_json::to_writer_pretty(BufWriter::new(File::create(dir.join("report.json"))?), &out.report)?;
    serde_json::to_writer_pretty(BufWriter::new(File::create(dir.join("config.json"))?), cfg)?;
    for c in &out.curves {
        c.write(BufWriter::new(File::create(dir.join(format!("{}.csv", c.name)))?))?;
    }
    for (name, field) in &out.snapshots {
        write_snapshot(BufWriter::new(File::create(dir.join(format!("{name}.bssf")))?), field)?;
    }
    Ok(())
}

/// Reads every `report.json` in `dir` and its immediate subdirectories.
pub fn collect_reports(dir: &Path) -> Result<Vec<(PathBuf, FitReport)>> {
    let mut out = Vec::new();
    let mut candidates = vec![dir.join("report.json")];
    if dir.is_dir() {
        let mut subs: Vec<PathBuf> = fs::read_dir(dir)?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
        subs.sort();
        candidates.extend(subs.into_iter().map(|p| p.join("report.json")));
    }
    for path in candidates {
        if path.is_file() {
            let report: FitReport = serde_json::from_str(&fs::read_to_string(&path)?)?;
            out.push((path, report));
        }
    }
    Ok(out)
}

/// Plain-text rendering of a report.
pub fn render_report(r: &FitReport) -> String {
    let mut s = format!("{} [{}]\n  claim: {}\n", r.experiment, if r.passed { "PASS" } else { "FAIL" }, r.claim);
    if let Some(f) = &r.fit {
        s += &format!("  fit: exponent {:.4} constant {:.4e} residual {:.2e} ({} points)\n", f.exponent, f.constant, f.residual, f.points);
    }
    if let Some([a, b]) = r.window {
        s += &format!("  window: [{a}, {b}]\n");
    }
    if let Some(p) = r.predicted {
        s += &format!("  predicted: {p:.4}");
        if let Some(t) = r.tolerance {
            s += &format!(" +- {t}");
        }
        s += "\n";
    }
    if !r.candidates.is_empty() {
        s += &format!("  candidates: {:?}\n", r.candidates);
    }
    for c in &r.checks {
        s += &format!("  [{}] {}: {:.6e} ({})\n", if c.passed { "ok" } else { "FAIL" }, c.name, c.measured, c.condition);
    }
    for (k, v) in &r.diagnostics {
        s += &format!("  {k} = {v:.6e}\n");
    }
    for n in &r.notes {
        s += &format!("  note: {n}\n");
    }
    s
}

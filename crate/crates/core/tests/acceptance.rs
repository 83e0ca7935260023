//! Acceptance suite: one PASS/FAIL line per criterion, then a combined assertion.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::Instant;

use bosonstar::experiments::{run, Check, Experiment, ExperimentConfig, FitReport};
use bosonstar::initial::InitialSpec;
use bosonstar::observables::ConvexRegion;
use bosonstar::potentials::{build_kernel, PotentialSpec};
use bosonstar::scattering::{roundtrip, ScatteringConfig};
use bosonstar::spectral::{free_propagate, g0_symbol, g0_symbol_max, theta_squared, GridSpec, SpectralField};
use num_complex::Complex64;

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self { passed, detail: detail.into() }
    }
}

fn config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.json"));
    ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn report(cfg: &ExperimentConfig) -> Result<FitReport, String> {
    run(cfg).map(|o| o.report).map_err(|e| format!("{}: {e}", cfg.experiment.name()))
}

fn summary(r: &FitReport) -> String {
    r.checks
        .iter()
        .map(|c| format!("{}{}={:.3e}", if c.passed { "" } else { "!" }, c.name, c.measured))
        .collect::<Vec<_>>()
        .join(" ")
}

fn from_reports(reports: Vec<Result<FitReport, String>>) -> Verdict {
    let mut passed = true;
    let mut parts = Vec::new();
    for r in reports {
        match r {
            Ok(r) => {
                passed &= r.passed;
                parts.push(summary(&r));
            }
            Err(e) => {
                passed = false;
                parts.push(format!("error {e}"));
            }
        }
    }
    Verdict::new(passed, parts.join(" | "))
}

fn random_fields(grid: &GridSpec, count: u64) -> Vec<SpectralField> {
    (0..count)
        .map(|seed| InitialSpec::RandomSmooth { bandwidth: 3.0, norm: Some(1.0) }.build(grid, seed).unwrap())
        .collect()
}

fn unitarity_and_group_law() -> Verdict {
    let start = Instant::now();
    let grid = GridSpec::cubic(1, 4096, 200.0).unwrap();
    let mut norm_err: f64 = 0.0;
    let mut group_err: f64 = 0.0;
    for (i, psi) in random_fields(&grid, 8).iter().enumerate() {
        let s = 3.7 * (i as f64 + 1.0);
        let t = -11.3 + 2.9 * i as f64;
        let n0 = psi.norm_l2();
        norm_err = norm_err.max((free_propagate(psi, t).norm_l2() - n0).abs() / n0);
        let two = free_propagate(&free_propagate(psi, s), t);
        let one = free_propagate(psi, s + t);
        group_err = group_err.max(two.sub(&one).unwrap().norm_l2() / n0);
    }
    let secs = start.elapsed().as_secs_f64();
    Verdict::new(
        norm_err <= 1e-12 && group_err <= 1e-12 && secs < 5.0,
        format!("norm {norm_err:.2e}, composition {group_err:.2e}, {secs:.2}s"),
    )
}

/// `(2 pi)^(-1/2) int e^(i x xi - i t <xi>) hat(xi) dxi` by the trapezoid rule on a dense frequency lattice.
fn quadrature_oracle(x: f64, t: f64, width: f64) -> Complex64 {
    let h = 2e-3;
    let cut = 40.0 / width;
    let m = (cut / h) as i64;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in -m..=m {
        let xi = j as f64 * h;
        // transform of e^(-x^2 / (2 w^2))
        let hat = width * (-0.5 * width * width * xi * xi).exp();
        acc += Complex64::from_polar(hat, x * xi - t * (1.0 + xi * xi).sqrt());
    }
    acc * h / (2.0 * PI).sqrt()
}

fn gaussian_oracle() -> Verdict {
    let (width, t, length) = (1.0, 10.0, 100.0);
    let grid = GridSpec::cubic(1, 2048, length).unwrap();
    let psi = SpectralField::from_fn(&grid, |x| Complex64::new((-x[0] * x[0] / (2.0 * width * width)).exp(), 0.0));
    let out = free_propagate(&psi, t).to_physical();
    let (mut num, mut den) = (0.0, 0.0);
    for (i, v) in out.values().iter().enumerate() {
        let x = grid.coordinate(0, i);
        if x.abs() <= 0.25 * length {
            let exact = quadrature_oracle(x, t, width);
            num += (v - exact).norm_sqr();
            den += exact.norm_sqr();
        }
    }
    let rel = (num / den).sqrt();
    Verdict::new(rel <= 1e-8, format!("relative L2 error on the central half {rel:.2e}"))
}

fn conservation() -> Verdict {
    let cfg = config("conservation");
    let steps = (cfg.solver.t_final / cfg.solver.dt).round();
    let mut v = from_reports(vec![report(&cfg)]);
    v.passed &= steps >= 1000.0;
    v.detail = format!("{steps} steps: {}", v.detail);
    v
}

fn dispersive_exponents() -> Verdict {
    from_reports(vec![report(&config("free_decay_1d")), report(&config("free_decay_2d"))])
}

fn light_cone() -> Verdict {
    from_reports(vec![report(&config("kernel_lightcone"))])
}

fn max_velocity() -> Verdict {
    let base = config("max_velocity");
    let source = ConvexRegion::Ball { center: vec![0.0], radius: 2.0 };
    let mut reports = Vec::new();
    for d in [6.0, 10.0] {
        let targets = [
            ConvexRegion::HalfSpace { normal: vec![1.0], offset: 2.0 + d },
            ConvexRegion::Ball { center: vec![2.0 + d + 3.0], radius: 3.0 },
        ];
        for target in targets {
            for potential in [PotentialSpec::zero(), PotentialSpec::Delta { kappa: -0.1 }] {
                let mut cfg = base.clone();
                cfg.experiment = Experiment::MaxVelocity {
                    source: source.clone(),
                    target: target.clone(),
                    floor_threshold: 1e-9,
                    horizon_fraction: 0.8,
                };
                cfg.potential = potential;
                cfg.solver.t_final = 0.8 * d;
                reports.push(report(&cfg).map(|mut r| {
                    // the excess is attained at t = 0; the peak ratio shows how tight the bound gets later
                    let peak = r.diagnostics["peak_bound_fraction"];
                    r.checks.push(Check::holds("peak_bound_fraction", peak, "", true));
                    r
                }));
            }
        }
    }
    let mut v = from_reports(reports);
    v.detail = format!("8 runs: {}", v.detail);
    v
}

fn multiplier_bounds() -> Verdict {
    let grids = [
        GridSpec::cubic(1, 4096, 50.0).unwrap(),
        GridSpec::cubic(2, 128, 10.0).unwrap(),
        GridSpec::new(vec![64, 32], vec![5.0, 40.0]).unwrap(),
        GridSpec::cubic(3, 32, 4.0).unwrap(),
    ];
    let mut theta_ok = true;
    let mut g0_max: f64 = 0.0;
    for g in &grids {
        theta_ok &= g.sample_frequencies(theta_squared).iter().all(|v| (0.0..1.0).contains(v));
        let d = g.dim();
        let mut dirs: Vec<Vec<f64>> = (0..d).map(|a| (0..d).map(|b| if a == b { 1.0 } else { 0.0 }).collect()).collect();
        dirs.push(vec![1.0 / (d as f64).sqrt(); d]);
        if d >= 2 {
            let mut n = vec![0.0; d];
            n[0] = 0.6;
            n[1] = -0.8;
            dirs.push(n);
        }
        for n in &dirs {
            g0_max = g0_max.max(g0_symbol_max(g, n).unwrap());
        }
    }
    // along xi = lambda n the symbol increases to 1
    let n = [0.6, 0.8];
    let along: Vec<f64> = [1.0, 10.0, 1e2, 1e3, 1e4, 1e6].iter().map(|l| g0_symbol(&[0.6 * l, 0.8 * l], &n)).collect();
    let rising = along.windows(2).all(|w| w[1] > w[0]);
    let limit = 1.0 - along[along.len() - 1];
    Verdict::new(
        theta_ok && g0_max <= 1.0 + 1e-12 && rising && limit.abs() < 1e-5,
        format!("theta^2 in [0,1): {theta_ok}, max |G0| {g0_max:.15}, 1 - G0(1e6 n) = {limit:.2e}"),
    )
}

fn picard() -> Verdict {
    from_reports(vec![report(&config("picard_contraction"))])
}

fn scattering_decay() -> Verdict {
    from_reports(vec![report(&config("scattering_decay"))])
}

fn roundtrip_error() -> Verdict {
    let grid = GridSpec::cubic(1, 1024, 256.0).unwrap();
    let kernel = build_kernel(&PotentialSpec::Yukawa { kappa: 0.05, mu: 1.0 }, &grid, true).unwrap();
    let psi = InitialSpec::Modulated { center: None, width: 2.0, wave_vector: vec![0.5], amplitude: 1.0, norm: Some(0.5) }
        .build(&grid, 0)
        .unwrap();
    let errors: Vec<f64> = [20.0, 40.0]
        .iter()
        .map(|&t| roundtrip(&psi, &kernel, &ScatteringConfig::new(t, 0.04)).unwrap_or(f64::INFINITY))
        .collect();
    let small = errors.iter().all(|e| *e <= 5e-3);
    let decreasing = errors[1] < errors[0];
    Verdict::new(
        small && decreasing,
        format!(
            "T=20: {:.3e}, T=40: {:.3e}; below 5e-3: {small}, decreasing under doubling: {decreasing}",
            errors[0], errors[1]
        ),
    )
}

fn phase_space_and_min_velocity() -> Verdict {
    from_reports(vec![report(&config("phase_space")), report(&config("min_velocity"))])
}

fn blowup_probe() -> Verdict {
    from_reports(vec![report(&config("blowup_probe"))])
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Verdict); 12] = [
        ("unitarity and group law", unitarity_and_group_law),
        ("Gaussian against quadrature oracle", gaussian_oracle),
        ("conservation laws", conservation),
        ("dispersive exponents", dispersive_exponents),
        ("kernel light cone", light_cone),
        ("maximal velocity", max_velocity),
        ("multiplier bounds", multiplier_bounds),
        ("Picard contraction", picard),
        ("scattering decay", scattering_decay),
        ("scattering roundtrip", roundtrip_error),
        ("phase space and minimal velocity", phase_space_and_min_velocity),
        ("blow-up probe", blowup_probe),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        println!(
            "criterion {:>2} {} {name} ({:.1}s): {}",
            i + 1,
            if v.passed { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            v.detail
        );
        if !v.passed {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

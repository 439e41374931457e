//! Mode pipelines: each turns a validated configuration into artifacts on disk and a JSON summary.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use meander_core::averaging::{
    average_rational, check_symmetries, detuning_scan, find_equilibria, hopf_amplitude_scan,
    modulated_travelling_wave_check, planar_action, planar_equivariance_defect, rational_action, seed_grid,
    verify_locking, AveragedPlanarField, ContinuationOptions, HopfOptions, LockingOptions, MtwOptions, NewtonOptions,
    PlanarField, RationalField, SymmetryAction,
};
use meander_core::center_bundle::{
    to_standard_form, CenterBundleSystem, PolynomialIntForm, RandomSystemSpec, StandardForm,
};
use meander_core::lattice_fhn::{make_spiral_initial, run as run_pde, GridSpec};
use meander_core::meander_analysis::{analyze_path, AnalysisOptions, LatticeGeometry, PathReport};
use meander_core::tip_track::TipPath;
use meander_core::torus_fourier::{diophantine_check, FrequencyVector};
use meander_core::{RotationSeries, TorusPolynomial, Vec2, VectorPolynomial};
use rand::SeedableRng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{CbConfig, ExperimentConfig, Mode, SweepParameter};
use crate::error::CliError;
use crate::output::{path_svg, read_path_file, write_file, write_path_csv, write_trajectory_csv};
use crate::presets;

/// Files written by a run and its machine-readable summary.
#[derive(Clone, Debug)]
pub struct Artifacts {
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

/// One PDE run: the raw tip path and its analysis.
#[derive(Clone, Debug)]
pub struct PdeOutcome {
    pub label: String,
    pub path: TipPath,
    pub report: Option<PathReport>,
    pub analysis_error: Option<String>,
}

pub fn analysis_options(cfg: &ExperimentConfig) -> AnalysisOptions {
    AnalysisOptions {
        transient_fraction: cfg.analysis.transient_fraction,
        anchor_tol: cfg.analysis.anchor_tol,
        thickness_segment: cfg
            .analysis
            .thickness_segment
            .map(|[a, b]| ((a[0], a[1]), (b[0], b[1]))),
    }
}

/// Configurations of the individual runs of a sweep, labelled by parameter value.
pub fn sweep_members(cfg: &ExperimentConfig) -> Vec<(String, ExperimentConfig)> {
    let Some(sweep) = &cfg.run.sweep else {
        return vec![(String::new(), cfg.clone())];
    };
    sweep
        .values
        .iter()
        .map(|&v| {
            let mut c = cfg.clone();
            c.run.sweep = None;
            let name = match sweep.parameter {
                SweepParameter::Tau => {
                    c.kinetics.tau = v;
                    "tau"
                }
                SweepParameter::Beta => {
                    c.kinetics.beta = v;
                    "beta"
                }
                SweepParameter::Gamma => {
                    c.kinetics.gamma = v;
                    "gamma"
                }
                SweepParameter::Epsilon => {
                    c.perturbation.epsilon = v;
                    "epsilon"
                }
            };
            (format!("{name}_{v}"), c)
        })
        .collect()
}

/// Integrates one PDE configuration (no sweep) and analyzes the tip path.
pub fn simulate(cfg: &ExperimentConfig) -> Result<PdeOutcome, CliError> {
    let grid = GridSpec::new(cfg.grid.n, cfg.grid.half_width, cfg.grid.dt)?;
    let init = make_spiral_initial(&grid, &cfg.kinetics)?;
    let (mut path, _) = run_pde(
        &init,
        &cfg.kinetics,
        &cfg.perturbation,
        &grid,
        cfg.run.t_end,
        cfg.run.sample_every,
        cfg.run.tip_tracking,
    )?;
    let k = cfg.kinetics;
    let p = cfg.perturbation;
    path.provenance = vec![
        ("preset".into(), cfg.preset.clone().unwrap_or_default()),
        (
            "grid".into(),
            format!("n={} half_width={} dt={}", grid.n(), grid.half_width(), grid.dt()),
        ),
        (
            "kinetics".into(),
            format!("tau={} beta={} gamma={}", k.tau, k.beta, k.gamma),
        ),
        (
            "perturbation".into(),
            format!(
                "epsilon={} a1={} a2={} b1={} b2={} c1={} c2={}",
                p.epsilon, p.a1, p.a2, p.b1, p.b2, p.c1, p.c2
            ),
        ),
    ];
    let (report, analysis_error) = match analyze_path(&path, &analysis_options(cfg)) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(PdeOutcome {
        label: String::new(),
        path,
        report,
        analysis_error,
    })
}

fn out_path(cfg: &ExperimentConfig, label: &str, ext: &str) -> PathBuf {
    let stem = if label.is_empty() {
        cfg.stem()
    } else {
        format!("{}_{label}", cfg.stem())
    };
    cfg.output.dir.join(format!("{stem}.{ext}"))
}

fn write_path_artifacts(
    cfg: &ExperimentConfig,
    label: &str,
    path: &TipPath,
    files: &mut Vec<PathBuf>,
) -> Result<(), CliError> {
    let csv = out_path(cfg, label, "csv");
    let mut buf = Vec::new();
    write_path_csv(path, &mut buf).map_err(|e| CliError::io(&csv, e))?;
    write_file(&csv, &buf)?;
    files.push(csv);
    if cfg.output.svg {
        let svg = out_path(cfg, label, "svg");
        write_file(
            &svg,
            path_svg(path, &LatticeGeometry::default(), cfg.analysis.transient_fraction).as_bytes(),
        )?;
        files.push(svg);
    }
    Ok(())
}

fn write_summary(cfg: &ExperimentConfig, summary: &Value, files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let p = out_path(cfg, "", "json");
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    write_file(&p, text.as_bytes())?;
    files.push(p);
    Ok(())
}

fn outcome_json(o: &PdeOutcome, cfg: &ExperimentConfig) -> Value {
    json!({
        "label": o.label,
        "kinetics": cfg.kinetics,
        "perturbation": cfg.perturbation,
        "samples": o.path.len(),
        "gaps": o.path.gaps.len(),
        "report": o.report,
        "analysis_error": o.analysis_error,
    })
}

fn simulate_pde(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let members = sweep_members(cfg);
    let results: Vec<Result<(PdeOutcome, ExperimentConfig), CliError>> = members
        .into_par_iter()
        .map(|(label, c)| {
            let mut o = simulate(&c)?;
            o.label = label;
            Ok((o, c))
        })
        .collect();
    let mut files = Vec::new();
    let mut runs = Vec::new();
    for r in results {
        let (o, c) = r?;
        write_path_artifacts(cfg, &o.label, &o.path, &mut files)?;
        runs.push(outcome_json(&o, &c));
    }
    let summary = json!({ "mode": cfg.mode.as_str(), "preset": cfg.preset, "runs": runs });
    write_summary(cfg, &summary, &mut files)?;
    Ok(Artifacts { files, summary })
}

fn analyze_file(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let input = cfg
        .input
        .path
        .as_ref()
        .ok_or_else(|| CliError::Config("input.path: required".into()))?;
    let path = read_path_file(input)?;
    let report = analyze_path(&path, &analysis_options(cfg))?;
    let mut files = Vec::new();
    if cfg.output.svg {
        let svg = out_path(cfg, "", "svg");
        write_file(
            &svg,
            path_svg(&path, &LatticeGeometry::default(), cfg.analysis.transient_fraction).as_bytes(),
        )?;
        files.push(svg);
    }
    let summary = json!({ "mode": cfg.mode.as_str(), "input": input, "samples": path.len(), "report": report });
    write_summary(cfg, &summary, &mut files)?;
    Ok(Artifacts { files, summary })
}

/// The center-bundle system described by `[cb]`: explicit tables, or a seeded random system when all are empty.
pub fn build_system(cb: &CbConfig) -> Result<CenterBundleSystem, CliError> {
    if cb.h1.is_empty() && cb.h2.is_empty() && cb.f1.is_empty() && cb.f2.is_empty() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(cb.seed);
        return Ok(CenterBundleSystem::random_symmetric(
            &mut rng,
            cb.omega,
            cb.epsilon,
            &RandomSystemSpec::default(),
        ));
    }
    let int = |v: f64, what: &str| -> Result<i32, CliError> {
        if v.fract() != 0.0 || v.abs() > 1e6 {
            return Err(CliError::Config(format!("cb.{what}: index {v} is not an integer")));
        }
        Ok(v as i32)
    };
    let mut h1 = BTreeMap::new();
    for row in &cb.h1 {
        *h1.entry(int(row[0], "h1")?).or_insert(Vec2::zeros()) += Vec2::new(row[1], row[2]);
    }
    let mut h2 = TorusPolynomial::zero(1);
    for row in &cb.h2 {
        let k = [int(row[0], "h2")?];
        h2 = h2
            .add(&TorusPolynomial::cos_mode(&k, row[1]))
            .add(&TorusPolynomial::sin_mode(&k, row[2]));
    }
    let term = |m: &[f64], a: f64, b: f64, what: &str| -> Result<TorusPolynomial, CliError> {
        let m: Vec<i32> = m.iter().map(|&v| int(v, what)).collect::<Result<_, _>>()?;
        Ok(TorusPolynomial::cos_mode(&m, a).add(&TorusPolynomial::sin_mode(&m, b)))
    };
    let mut f1 = [TorusPolynomial::zero(4), TorusPolynomial::zero(4)];
    for row in &cb.f1 {
        let c = int(row[4], "f1")?;
        if !(0..=1).contains(&c) {
            return Err(CliError::Config(format!("cb.f1: component {c} must be 0 or 1")));
        }
        let t = term(&row[..4], row[5], row[6], "f1")?;
        f1[c as usize] = f1[c as usize].add(&t);
    }
    let mut f2 = TorusPolynomial::zero(4);
    for row in &cb.f2 {
        f2 = f2.add(&term(&row[..4], row[4], row[5], "f2")?);
    }
    let mut f1 = VectorPolynomial::from_components(&f1[0], &f1[1]);
    if cb.symmetrize {
        f1 = f1.lattice_symmetrize();
        f2 = f2.lattice_symmetrize();
    }
    Ok(CenterBundleSystem::new(
        cb.omega,
        cb.epsilon,
        RotationSeries::new(h1),
        h2,
        f1,
        f2,
    )?)
}

/// Largest distance between the transformed system trajectory and the standard-form trajectory.
pub fn transform_error(sys: &CenterBundleSystem, cb: &CbConfig) -> Result<f64, CliError> {
    let full = sys.integrate(cb.initial, cb.t_end, cb.dt, cb.sample_every);
    let (mapped, std): (Vec<[f64; 4]>, _) = match to_standard_form(sys)? {
        StandardForm::NonInt(f) => (
            full.y.iter().map(|s| f.to_standard_coords(s)).collect(),
            f.integrate(f.to_standard_coords(&cb.initial), cb.t_end, cb.dt, cb.sample_every),
        ),
        StandardForm::Int(f) => (
            full.y.iter().map(|s| f.to_standard_coords(s)).collect(),
            f.integrate(f.to_standard_coords(&cb.initial), cb.t_end, cb.dt, cb.sample_every),
        ),
    };
    let mut worst: f64 = 0.0;
    for (a, b) in mapped.iter().zip(&std.y) {
        for i in 0..4 {
            worst = worst.max((a[i] - b[i]).abs());
        }
    }
    Ok(worst)
}

fn cb_integrate(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let cb = &cfg.cb;
    let sys = build_system(cb)?;
    let traj = sys.integrate(cb.initial, cb.t_end, cb.dt, cb.sample_every);
    let form = to_standard_form(&sys)?;
    let (kind, warning, drift) = match &form {
        StandardForm::NonInt(f) => ("non_integer", f.near_integer_warning(), None),
        StandardForm::Int(f) => {
            use meander_core::center_bundle::IntStandardForm;
            ("integer", None, Some((f.drift().x, f.drift().y)))
        }
    };
    let err = transform_error(&sys, cb)?;
    let mut files = Vec::new();
    let csv = out_path(cfg, "", "csv");
    let mut buf = BufWriter::new(Vec::new());
    write_trajectory_csv(&traj, ["psi1", "psi2", "phi", "theta"], &mut buf).map_err(|e| CliError::io(&csv, e))?;
    write_file(&csv, &buf.into_inner().map_err(|e| CliError::Io(e.to_string()))?)?;
    files.push(csv);
    let summary = json!({
        "mode": cfg.mode.as_str(),
        "omega": sys.omega(),
        "epsilon": sys.epsilon(),
        "standard_form": kind,
        "near_integer_distance": warning,
        "drift": drift,
        "samples": traj.len(),
        "final": traj.last().map(|(t, y)| json!({ "t": t, "state": y })),
        "transform_error": err,
    });
    write_summary(cfg, &summary, &mut files)?;
    Ok(Artifacts { files, summary })
}

fn cb_average(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let cb = &cfg.cb;
    let sys = build_system(cb)?;
    let StandardForm::NonInt(form) = to_standard_form(&sys)? else {
        return Err(CliError::Config("cb-average needs a non-integer cb.omega".into()));
    };
    let nopts = NewtonOptions::default();
    let summary = match cb.ratio {
        Some([k, l]) => {
            let avg = average_rational(&form, k, l)?;
            let sym = check_symmetries(&avg, 64, cb.seed);
            let seeds = seed_grid([(-1.5, 1.5), (-1.5, 1.5), (0.0, TAU)], 5);
            let f = avg.state_fn(0.0);
            let eq = find_equilibria(
                &f,
                &seeds,
                &nopts,
                [false, false, true],
                Some(&rational_action as SymmetryAction<3>),
            );
            json!({
                "mode": cfg.mode.as_str(),
                "ratio": [k, l],
                "symmetries": sym,
                "max_violation": sym.max_violation(),
                "equilibria": eq.equilibria,
                "failed_seeds": eq.failed_seeds,
            })
        }
        None => {
            let avg = AveragedPlanarField::with_nodes(&form, 64);
            let defect = planar_equivariance_defect(&avg, 16, 2.0, cb.seed);
            let seeds = seed_grid([(-1.5, 1.5), (-1.5, 1.5)], 7);
            let f = avg.state_fn();
            let eq = find_equilibria(
                &f,
                &seeds,
                &nopts,
                [false, false],
                Some(&planar_action as SymmetryAction<2>),
            );
            json!({
                "mode": cfg.mode.as_str(),
                "omega": form.system().omega(),
                "nodes": avg.nodes(),
                "equivariance_defect": defect,
                "equilibria": eq.equilibria,
                "failed_seeds": eq.failed_seeds,
            })
        }
    };
    let mut files = Vec::new();
    write_summary(cfg, &summary, &mut files)?;
    Ok(Artifacts { files, summary })
}

fn lock_scan(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let plant = cfg.plant.plant();
    let s = &cfg.scan;
    let seeds = seed_grid([(-0.5, 0.5), (-0.5, 0.5), (0.0, TAU)], s.seeds_per_axis);
    let rep = detuning_scan(
        &plant.averaged(),
        (s.zeta_min, s.zeta_max),
        s.zeta_start,
        &seeds,
        &ContinuationOptions::default(),
        &NewtonOptions::default(),
    );
    let locking = rep
        .branch
        .iter()
        .find(|b| b.zeta == s.zeta_start && s.zeta_start == 0.0)
        .map(|b| {
            let (k, l) = plant.averaged().ratio();
            let mut form = plant.form();
            form.g1 = form.g1.add(&VectorPolynomial::from_components(
                &TorusPolynomial::cos_mode(&[0, 0, 0, 1], 1.0),
                &TorusPolynomial::sin_mode(&[0, 0, 0, 1], 1.0),
            ));
            let mut v = verify_locking(
                &form,
                k,
                l,
                Vec2::new(b.x[0], b.x[1]),
                b.x[2],
                s.eps,
                &LockingOptions::default(),
            );
            v.orbit.clear();
            v
        });
    let summary = json!({
        "mode": cfg.mode.as_str(),
        "plant": plant,
        "window": rep.window,
        "lower": rep.lower,
        "upper": rep.upper,
        "branch_points": rep.branch.len(),
        "predicted_hopf": plant.hopf_zeta(),
        "predicted_fold": plant.fold_zeta(),
        "locking": locking,
    });
    let mut files = Vec::new();
    write_summary(cfg, &summary, &mut files)?;
    Ok(Artifacts { files, summary })
}

fn hopf_scan(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let plant = cfg.plant.plant();
    let z0 = plant.hopf_zeta();
    let guess_phi = plant
        .branch_phi(z0)
        .ok_or_else(|| CliError::Config("plant has no locked branch at its Hopf point".into()))?;
    let zetas: Vec<f64> = cfg.scan.offsets.iter().map(|d| z0 + d).collect();
    let scan = hopf_amplitude_scan(
        &plant.averaged(),
        z0,
        [0.0, 0.0, guess_phi],
        &zetas,
        None,
        &HopfOptions::default(),
    );
    let summary = json!({ "mode": cfg.mode.as_str(), "plant": plant, "scan": scan });
    let mut files = Vec::new();
    write_summary(cfg, &summary, &mut files)?;
    Ok(Artifacts { files, summary })
}

/// Integer-`omega` form with `Z(phi) = -sin phi` and drift `V`.
pub fn planted_mtw_form(resonance: i32, v: Vec2) -> PolynomialIntForm {
    let h2 = TorusPolynomial::sin_mode(&[0, 0, 1, 0], -1.0)
        .add(&TorusPolynomial::cos_mode(&[0, 0, 0, 1], 0.5))
        .add(&TorusPolynomial::cos_mode(&[1, 0, 0, 0], 1.0).mul(&TorusPolynomial::sin_mode(&[0, 0, 0, 1], 0.3)));
    PolynomialIntForm {
        resonance,
        v,
        h1: VectorPolynomial::from_components(
            &TorusPolynomial::cos_mode(&[0, 0, 0, 1], 1.0),
            &TorusPolynomial::zero(4),
        ),
        h2,
    }
}

fn mtw_check(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let m = &cfg.mtw;
    let form = planted_mtw_form(m.resonance, Vec2::new(m.v[0], m.v[1]));
    let opts = MtwOptions {
        psi_nodes: 8,
        theta_nodes: 8,
        angle_tol: m.angle_tol,
        ..MtwOptions::default()
    };
    let v = modulated_travelling_wave_check(&form, &m.eps, &opts);
    let summary = json!({
        "mode": cfg.mode.as_str(),
        "verdict": v,
        "drift_ok": v.drift_ok(),
        "band_ratio_ok": v.band_ratio_ok(),
    });
    let mut files = Vec::new();
    write_summary(cfg, &summary, &mut files)?;
    Ok(Artifacts { files, summary })
}

fn dioph_check(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let d = &cfg.dioph;
    let w = FrequencyVector::new(d.frequencies.clone())?;
    let rep = diophantine_check(&w, d.rho, d.mu, d.n_max);
    let summary = json!({ "mode": cfg.mode.as_str(), "satisfied": rep.is_satisfied(), "report": rep });
    let mut files = Vec::new();
    write_summary(cfg, &summary, &mut files)?;
    Ok(Artifacts { files, summary })
}

/// Executes the pipeline selected by `cfg.mode`.
pub fn run_config(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    cfg.validate()?;
    match cfg.mode {
        Mode::SimulatePde => simulate_pde(cfg),
        Mode::AnalyzePath => analyze_file(cfg),
        Mode::CbIntegrate => cb_integrate(cfg),
        Mode::CbAverage => cb_average(cfg),
        Mode::LockScan => lock_scan(cfg),
        Mode::HopfScan => hopf_scan(cfg),
        Mode::MtwCheck => mtw_check(cfg),
        Mode::DiophCheck => dioph_check(cfg),
    }
}

/// Runs a named preset, optionally at full scale and into a chosen directory.
pub fn run_preset(name: &str, full_scale: bool, out_dir: Option<&Path>) -> Result<Artifacts, CliError> {
    let mut cfg = presets::find(name)
        .ok_or_else(|| {
            CliError::Config(format!(
                "unknown preset `{name}`; known: {}",
                presets::names().join(", ")
            ))
        })?
        .config;
    if full_scale {
        presets::full_scale(&mut cfg);
    }
    if let Some(d) = out_dir {
        cfg.output.dir = d.to_path_buf();
    }
    run_config(&cfg)
}

//! Named parameter bundles, one per reproduced experiment.
//!
//! PDE presets run at desk scale (100x100, `t_end = 3000`); [`full_scale`]
//! switches them to the 200x200 grid and a longer horizon.

use meander_core::lattice_fhn::{KineticParams, PerturbationSpec};

use crate::config::{ExperimentConfig, Mode, SweepConfig, SweepParameter};

/// Bumped whenever a preset's parameters change.
pub const PRESET_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct FigurePreset {
    pub name: &'static str,
    pub description: &'static str,
    pub config: ExperimentConfig,
}

fn kin(tau: f64, beta: f64, gamma: f64) -> KineticParams {
    KineticParams { tau, beta, gamma }
}

#[allow(clippy::too_many_arguments)]
fn pert(epsilon: f64, a1: f64, a2: f64, b1: f64, b2: f64, c1: f64, c2: f64) -> PerturbationSpec {
    PerturbationSpec {
        epsilon,
        a1,
        a2,
        b1,
        b2,
        c1,
        c2,
    }
}

fn pde(name: &str, kinetics: KineticParams, perturbation: PerturbationSpec) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(Mode::SimulatePde);
    c.preset = Some(name.to_string());
    c.kinetics = kinetics;
    c.perturbation = perturbation;
    c
}

fn sweep(mut c: ExperimentConfig, parameter: SweepParameter, values: &[f64]) -> ExperimentConfig {
    c.run.sweep = Some(SweepConfig {
        parameter,
        values: values.to_vec(),
    });
    c
}

fn other(name: &str, mode: Mode) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(mode);
    c.preset = Some(name.to_string());
    c
}

/// Every preset, in listing order.
pub fn all() -> Vec<FigurePreset> {
    let fig2 = kin(0.1858, 0.755, 0.5);
    let mut grid_coarse = pde("grid_coarse", kin(0.25, 0.755, 0.5), PerturbationSpec::default());
    grid_coarse.grid.n = 50;
    let mut pl1 = pde(
        "pl1",
        kin(0.1018, 0.8, 0.5),
        pert(0.01, -0.1997, 0.2997, 0.001, -0.001, -1.0, 1.5),
    );
    pl1.grid.dt = Some(0.025);
    let mut hb = sweep(
        pde("hb", kin(0.1012, 0.8, 0.5), pert(0.01, -0.2, 0.3, 0.0, 0.0, -1.0, 1.5)),
        SweepParameter::Tau,
        &[0.1012, 0.1014, 0.1016, 0.1018, 0.1020],
    );
    hb.grid.dt = Some(0.025);
    let mut cb_average = other("cb_average_l3", Mode::CbAverage);
    cb_average.cb.omega = 1.0 / 3.0;
    cb_average.cb.ratio = Some([1, 3]);
    let mut cb_integrate = other("cb_integrate", Mode::CbIntegrate);
    cb_integrate.cb.initial = [0.1, -0.2, 0.3, 0.0];
    let mut hopf_scan = other("hopf_sqrt", Mode::HopfScan);
    hopf_scan.scan.zeta_min = 0.0;
    vec![
        FigurePreset {
            name: "fig2",
            description: "homogeneous medium, two-frequency flower",
            config: pde("fig2", fig2, PerturbationSpec::default()),
        },
        FigurePreset {
            name: "grid_coarse",
            description: "50x50 grid, grid-induced four-petal locking",
            config: grid_coarse,
        },
        FigurePreset {
            name: "irrat1",
            description: "lattice forcing, anchored two-frequency meander",
            config: pde("irrat1", fig2, pert(0.01, -0.7, 0.14, -2.5, -0.5, 0.5, 1.5)),
        },
        FigurePreset {
            name: "irrat2",
            description: "lattice forcing, anchored three-frequency meander",
            config: pde("irrat2", fig2, pert(0.01, -0.9, 0.46, -2.5, 0.5, -0.5, 1.5)),
        },
        FigurePreset {
            name: "pl1",
            description: "three-petal phase-locked path",
            config: pl1,
        },
        FigurePreset {
            name: "pl2_six",
            description: "six-petal phase-locked path",
            config: pde(
                "pl2_six",
                kin(0.22, 0.87, 0.49),
                pert(0.01, 1.4, 0.92, 5.0, 1.0, -1.0, 3.0),
            ),
        },
        FigurePreset {
            name: "pl2_four",
            description: "four-petal phase-locked path",
            config: pde(
                "pl2_four",
                kin(0.17, 0.8, 0.65),
                pert(0.01, -1.75, -0.35, -6.25, 1.25, 1.25, -3.75),
            ),
        },
        FigurePreset {
            name: "sn",
            description: "either side of a saddle-node at the edge of a locking window",
            config: sweep(
                pde(
                    "sn",
                    kin(0.15818, 0.8, 0.65),
                    pert(0.01, -0.082, -0.014, -0.1, 0.05, -0.25, -0.15),
                ),
                SweepParameter::Tau,
                &[0.15818, 0.15816],
            ),
        },
        FigurePreset {
            name: "hb",
            description: "fattened flowers past a Hopf point, tau sweep",
            config: hb,
        },
        FigurePreset {
            name: "mtw",
            description: "linear meander near the drift resonance, beta sweep",
            config: sweep(
                pde(
                    "mtw",
                    kin(0.26, 0.793, 0.5),
                    pert(0.01, -0.6, -0.4, -0.00005, 0.00007, -3.0, -2.0),
                ),
                SweepParameter::Beta,
                &[0.793, 0.79275, 0.792875],
            ),
        },
        FigurePreset {
            name: "dioph_golden",
            description: "Diophantine check of the golden-mean frequency vector",
            config: other("dioph_golden", Mode::DiophCheck),
        },
        FigurePreset {
            name: "cb_integrate",
            description: "random lattice-symmetric center-bundle system with transform check",
            config: cb_integrate,
        },
        FigurePreset {
            name: "cb_average_l3",
            description: "rational averaging at omega = 1/3 of a random system",
            config: cb_average,
        },
        FigurePreset {
            name: "lock_window",
            description: "detuning scan of the planted averaged system",
            config: other("lock_window", Mode::LockScan),
        },
        FigurePreset {
            name: "hopf_sqrt",
            description: "limit-cycle amplitude past the planted Hopf point",
            config: hopf_scan,
        },
        FigurePreset {
            name: "mtw_planted",
            description: "orientation locking with Z(phi) = -sin phi at integer omega",
            config: other("mtw_planted", Mode::MtwCheck),
        },
    ]
}

pub fn find(name: &str) -> Option<FigurePreset> {
    all().into_iter().find(|p| p.name == name)
}

pub fn names() -> Vec<&'static str> {
    all().iter().map(|p| p.name).collect()
}

/// 200x200 grid with the default stable time step and a 20000 horizon.
pub fn full_scale(cfg: &mut ExperimentConfig) {
    if cfg.mode == Mode::SimulatePde {
        cfg.grid.n = 200;
        cfg.grid.dt = None;
        cfg.run.t_end = 20_000.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{emit_config, parse_config};

    /// `(name, tau, beta, gamma, [eps, a1, a2, b1, b2, c1, c2])`
    const TABLE: &[(&str, f64, f64, f64, [f64; 7])] = &[
        ("fig2", 0.1858, 0.755, 0.5, [0.0; 7]),
        ("grid_coarse", 0.25, 0.755, 0.5, [0.0; 7]),
        ("irrat1", 0.1858, 0.755, 0.5, [0.01, -0.7, 0.14, -2.5, -0.5, 0.5, 1.5]),
        ("irrat2", 0.1858, 0.755, 0.5, [0.01, -0.9, 0.46, -2.5, 0.5, -0.5, 1.5]),
        (
            "pl1",
            0.1018,
            0.8,
            0.5,
            [0.01, -0.1997, 0.2997, 0.001, -0.001, -1.0, 1.5],
        ),
        ("pl2_six", 0.22, 0.87, 0.49, [0.01, 1.4, 0.92, 5.0, 1.0, -1.0, 3.0]),
        (
            "pl2_four",
            0.17,
            0.8,
            0.65,
            [0.01, -1.75, -0.35, -6.25, 1.25, 1.25, -3.75],
        ),
        (
            "sn",
            0.15818,
            0.8,
            0.65,
            [0.01, -0.082, -0.014, -0.1, 0.05, -0.25, -0.15],
        ),
        ("hb", 0.1012, 0.8, 0.5, [0.01, -0.2, 0.3, 0.0, 0.0, -1.0, 1.5]),
        (
            "mtw",
            0.26,
            0.793,
            0.5,
            [0.01, -0.6, -0.4, -0.00005, 0.00007, -3.0, -2.0],
        ),
    ];

    #[test]
    fn literal_fidelity() {
        for &(name, tau, beta, gamma, p) in TABLE {
            let c = find(name).unwrap().config;
            assert_eq!(c.mode, Mode::SimulatePde, "{name}");
            assert_eq!(
                (c.kinetics.tau, c.kinetics.beta, c.kinetics.gamma),
                (tau, beta, gamma),
                "{name}"
            );
            let q = c.perturbation;
            assert_eq!([q.epsilon, q.a1, q.a2, q.b1, q.b2, q.c1, q.c2], p, "{name}");
        }
        assert_eq!(find("grid_coarse").unwrap().config.grid.n, 50);
        assert_eq!(find("fig2").unwrap().config.grid.n, 100);
    }

    #[test]
    fn sweeps() {
        let values = |n: &str| find(n).unwrap().config.run.sweep.unwrap();
        let s = values("sn");
        assert_eq!((s.parameter, s.values), (SweepParameter::Tau, vec![0.15818, 0.15816]));
        let s = values("hb");
        assert_eq!(s.parameter, SweepParameter::Tau);
        assert_eq!(s.values.first(), Some(&0.1012));
        assert_eq!(s.values.last(), Some(&0.1020));
        let s = values("mtw");
        assert_eq!(
            (s.parameter, s.values),
            (SweepParameter::Beta, vec![0.793, 0.79275, 0.792875])
        );
    }

    #[test]
    fn dioph_golden_literal() {
        let d = find("dioph_golden").unwrap().config.dioph;
        assert_eq!(d.frequencies, vec![(5f64.sqrt() - 1.0) / 2.0, 1.0]);
        assert_eq!((d.rho, d.mu, d.n_max), (0.2, 1.0, 50));
    }

    #[test]
    fn presets_are_valid_and_roundtrip() {
        let names = names();
        let unique: std::collections::BTreeSet<_> = names.iter().collect();
        assert_eq!(unique.len(), names.len());
        for p in all() {
            p.config.validate().unwrap_or_else(|e| panic!("{}: {e}", p.name));
            assert_eq!(p.config.preset.as_deref(), Some(p.name));
            let text = emit_config(&p.config).unwrap();
            assert_eq!(parse_config(&text).unwrap(), p.config, "{}", p.name);
        }
    }

    #[test]
    fn full_scale_is_opt_in() {
        let mut c = find("fig2").unwrap().config;
        assert_eq!(c.grid.n, 100);
        full_scale(&mut c);
        assert_eq!(c.grid.n, 200);
        assert!(c.validate().is_ok());
        let mut d = find("dioph_golden").unwrap().config;
        full_scale(&mut d);
        assert_eq!(d, find("dioph_golden").unwrap().config);
    }
}

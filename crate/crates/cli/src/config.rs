//! Experiment configuration: a TOML document with one table per concern.
//!
//! Only `mode` is required. A `preset` supplies every other value, and keys
//! given explicitly override the preset key by key.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::PathBuf;

use meander_core::lattice_fhn::{KineticParams, PerturbationSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::presets;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    SimulatePde,
    AnalyzePath,
    CbIntegrate,
    CbAverage,
    LockScan,
    HopfScan,
    MtwCheck,
    DiophCheck,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::SimulatePde => "simulate-pde",
            Mode::AnalyzePath => "analyze-path",
            Mode::CbIntegrate => "cb-integrate",
            Mode::CbAverage => "cb-average",
            Mode::LockScan => "lock-scan",
            Mode::HopfScan => "hopf-scan",
            Mode::MtwCheck => "mtw-check",
            Mode::DiophCheck => "dioph-check",
        }
    }
}

fn fig2_kinetics() -> KineticParams {
    KineticParams {
        tau: 0.1858,
        beta: 0.755,
        gamma: 0.5,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n: usize,
    pub half_width: f64,
    /// Time step; `"auto"` selects `0.9 dx^2 / 4`.
    #[serde(with = "auto_dt")]
    pub dt: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n: 100,
            half_width: 10.0 * PI,
            dt: Some(0.05),
        }
    }
}

mod auto_dt {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_f64(*x),
            None => s.serialize_str("auto"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Some(x)),
            Raw::Text(t) if t == "auto" => Ok(None),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "dt must be a number or \"auto\", got \"{t}\""
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Tau,
    Beta,
    Gamma,
    Epsilon,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub t_end: f64,
    pub sample_every: usize,
    pub tip_tracking: bool,
    /// Independent PDE runs over one kinetic or perturbation parameter.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            t_end: 3000.0,
            sample_every: 4,
            tip_tracking: true,
            sweep: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub transient_fraction: f64,
    pub anchor_tol: f64,
    /// Segment `[[x0, y0], [x1, y1]]` across the band for the thickness measure.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thickness_segment: Option<[[f64; 2]; 2]>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            transient_fraction: 0.5,
            anchor_tol: 0.3,
            thickness_segment: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// File stem; the preset name or the mode when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prefix: Option<String>,
    pub svg: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            prefix: None,
            svg: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InputConfig {
    /// Tip-path CSV for `analyze-path`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

/// Center-bundle system: explicit coefficient tables, or a random lattice-symmetric system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CbConfig {
    pub omega: f64,
    pub epsilon: f64,
    /// Seed of the random system used when every table is empty.
    pub seed: u64,
    /// Rows `[k, bx, by]` of `h1(theta) = sum R_{k theta} b_k`.
    pub h1: Vec<[f64; 3]>,
    /// Rows `[k, a, b]` adding `a cos k theta + b sin k theta` to `h2`.
    pub h2: Vec<[f64; 3]>,
    /// Rows `[m1, m2, m3, m4, component, a, b]` adding `a cos <m, x> + b sin <m, x>` to one component of `F1`.
    pub f1: Vec<[f64; 7]>,
    /// Rows `[m1, m2, m3, m4, a, b]` for `F2`.
    pub f2: Vec<[f64; 6]>,
    /// Project `F1`, `F2` onto the lattice-symmetric subspace before validation.
    pub symmetrize: bool,
    pub initial: [f64; 4],
    pub t_end: f64,
    pub dt: f64,
    pub sample_every: usize,
    /// `[k, l]` for rational averaging; irrational averaging when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<[i32; 2]>,
}

impl Default for CbConfig {
    fn default() -> Self {
        Self {
            omega: 0.37,
            epsilon: 0.05,
            seed: 1,
            h1: Vec::new(),
            h2: Vec::new(),
            f1: Vec::new(),
            f2: Vec::new(),
            symmetrize: true,
            initial: [0.0; 4],
            t_end: 200.0,
            dt: 0.01,
            sample_every: 10,
            ratio: None,
        }
    }
}

/// Coefficients of the planted averaged system with a locking window and a Hopf point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlantConfig {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub kappa: f64,
    pub d: f64,
    pub c: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        let h = meander_core::averaging::HopfPlant::default();
        Self {
            p: h.p,
            q: h.q,
            r: h.r,
            kappa: h.kappa,
            d: h.d,
            c: h.c,
        }
    }
}

impl PlantConfig {
    pub fn plant(&self) -> meander_core::averaging::HopfPlant {
        meander_core::averaging::HopfPlant {
            p: self.p,
            q: self.q,
            r: self.r,
            kappa: self.kappa,
            d: self.d,
            c: self.c,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub zeta_min: f64,
    pub zeta_max: f64,
    pub zeta_start: f64,
    pub seeds_per_axis: usize,
    /// Distances past the Hopf point for the amplitude scan.
    pub offsets: Vec<f64>,
    /// Full-system locking check at `zeta_start`, with this `eps`.
    pub eps: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            zeta_min: -1.5,
            zeta_max: 1.5,
            zeta_start: 0.0,
            seeds_per_axis: 5,
            offsets: (0..6).map(|i| 0.001 * 2f64.powi(i)).collect(),
            eps: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MtwConfig {
    pub resonance: i32,
    /// Drift `V` of the integer-`omega` standard form.
    pub v: [f64; 2],
    pub eps: Vec<f64>,
    pub angle_tol: f64,
}

impl Default for MtwConfig {
    fn default() -> Self {
        Self {
            resonance: 1,
            v: [1.0, 0.5],
            eps: vec![1e-3, 1e-5],
            angle_tol: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiophConfig {
    pub frequencies: Vec<f64>,
    pub rho: f64,
    pub mu: f64,
    pub n_max: u32,
}

impl Default for DiophConfig {
    fn default() -> Self {
        Self {
            frequencies: vec![(5f64.sqrt() - 1.0) / 2.0, 1.0],
            rho: 0.2,
            mu: 1.0,
            n_max: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default = "fig2_kinetics")]
    pub kinetics: KineticParams,
    #[serde(default)]
    pub perturbation: PerturbationSpec,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub input: InputConfig,
    #[serde(default)]
    pub cb: CbConfig,
    #[serde(default)]
    pub plant: PlantConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub mtw: MtwConfig,
    #[serde(default)]
    pub dioph: DiophConfig,
}

impl ExperimentConfig {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            preset: None,
            kinetics: fig2_kinetics(),
            perturbation: PerturbationSpec::default(),
            grid: GridConfig::default(),
            run: RunConfig::default(),
            analysis: AnalysisConfig::default(),
            output: OutputConfig::default(),
            input: InputConfig::default(),
            cb: CbConfig::default(),
            plant: PlantConfig::default(),
            scan: ScanConfig::default(),
            mtw: MtwConfig::default(),
            dioph: DiophConfig::default(),
        }
    }

    /// Range checks that the modules would otherwise report later.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |key: &str, why: &str| Err(CliError::Config(format!("{key}: {why}")));
        if let Err(e) = self.kinetics.validate() {
            return bad("kinetics", &e.to_string());
        }
        if let Err(e) = self.perturbation.validate() {
            return bad("perturbation", &e.to_string());
        }
        if self.grid.n < 3 {
            return bad("grid.n", "must be at least 3");
        }
        if !(self.grid.half_width > 0.0) {
            return bad("grid.half_width", "must be positive");
        }
        if self.grid.dt.is_some_and(|dt| !(dt > 0.0)) {
            return bad("grid.dt", "must be positive");
        }
        if !(self.run.t_end >= 0.0) {
            return bad("run.t_end", "must be non-negative");
        }
        if self.run.sample_every == 0 {
            return bad("run.sample_every", "must be at least 1");
        }
        if let Some(s) = &self.run.sweep {
            if s.values.is_empty() {
                return bad("run.sweep.values", "must not be empty");
            }
        }
        if !(0.0..1.0).contains(&self.analysis.transient_fraction) {
            return bad("analysis.transient_fraction", "must lie in [0, 1)");
        }
        if !(self.cb.dt > 0.0) || self.cb.sample_every == 0 || !(self.cb.t_end >= 0.0) {
            return bad("cb", "dt must be positive, sample_every at least 1, t_end non-negative");
        }
        if let Some([_, l]) = self.cb.ratio {
            if l < 2 {
                return bad("cb.ratio", "denominator must be at least 2");
            }
        }
        if self.scan.zeta_min >= self.scan.zeta_max {
            return bad("scan", "zeta_min must be below zeta_max");
        }
        if self.scan.seeds_per_axis == 0 {
            return bad("scan.seeds_per_axis", "must be at least 1");
        }
        if self.mtw.eps.iter().any(|e| !(*e >= 0.0)) {
            return bad("mtw.eps", "must be non-negative");
        }
        if self.dioph.frequencies.is_empty() || !(self.dioph.rho > 0.0) || self.dioph.n_max == 0 {
            return bad("dioph", "needs frequencies, rho > 0 and n_max >= 1");
        }
        if self.mode == Mode::AnalyzePath && self.input.path.is_none() {
            return bad("input.path", "required for analyze-path");
        }
        Ok(())
    }

    pub fn stem(&self) -> String {
        self.output
            .prefix
            .clone()
            .or_else(|| self.preset.clone())
            .unwrap_or_else(|| self.mode.as_str().to_string())
    }
}

/// Every accepted key, as `(table, key)`; top-level keys use an empty table name.
pub const SCHEMA: &[(&str, &str)] = &[
    ("", "mode"),
    ("", "preset"),
    ("kinetics", "tau"),
    ("kinetics", "beta"),
    ("kinetics", "gamma"),
    ("perturbation", "epsilon"),
    ("perturbation", "a1"),
    ("perturbation", "a2"),
    ("perturbation", "b1"),
    ("perturbation", "b2"),
    ("perturbation", "c1"),
    ("perturbation", "c2"),
    ("grid", "n"),
    ("grid", "half_width"),
    ("grid", "dt"),
    ("run", "t_end"),
    ("run", "sample_every"),
    ("run", "tip_tracking"),
    ("run", "sweep"),
    ("analysis", "transient_fraction"),
    ("analysis", "anchor_tol"),
    ("analysis", "thickness_segment"),
    ("output", "dir"),
    ("output", "prefix"),
    ("output", "svg"),
    ("input", "path"),
    ("cb", "omega"),
    ("cb", "epsilon"),
    ("cb", "seed"),
    ("cb", "h1"),
    ("cb", "h2"),
    ("cb", "f1"),
    ("cb", "f2"),
    ("cb", "symmetrize"),
    ("cb", "initial"),
    ("cb", "t_end"),
    ("cb", "dt"),
    ("cb", "sample_every"),
    ("cb", "ratio"),
    ("plant", "p"),
    ("plant", "q"),
    ("plant", "r"),
    ("plant", "kappa"),
    ("plant", "d"),
    ("plant", "c"),
    ("scan", "zeta_min"),
    ("scan", "zeta_max"),
    ("scan", "zeta_start"),
    ("scan", "seeds_per_axis"),
    ("scan", "offsets"),
    ("scan", "eps"),
    ("mtw", "resonance"),
    ("mtw", "v"),
    ("mtw", "eps"),
    ("mtw", "angle_tol"),
    ("dioph", "frequencies"),
    ("dioph", "rho"),
    ("dioph", "mu"),
    ("dioph", "n_max"),
];

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn required_missing(table: &toml::Table) -> Vec<&'static str> {
    ["mode"].into_iter().filter(|k| !table.contains_key(*k)).collect()
}

/// Parses and validates a configuration, resolving the preset if one is named.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    let missing = required_missing(&table);
    if !missing.is_empty() {
        return Err(CliError::Config(format!(
            "missing required key(s): {}",
            missing.join(", ")
        )));
    }
    let merged = match table.get("preset") {
        Some(toml::Value::String(name)) => {
            let preset = presets::find(name).ok_or_else(|| {
                CliError::Config(format!(
                    "unknown preset `{name}`; known: {}",
                    presets::names().join(", ")
                ))
            })?;
            let mut base = toml::Table::try_from(&preset.config).map_err(|e| CliError::Config(e.to_string()))?;
            merge(&mut base, table);
            base
        }
        Some(other) => return Err(CliError::Config(format!("preset must be a string, got {other}"))),
        None => table,
    };
    let cfg = ExperimentConfig::deserialize(toml::Value::Table(merged)).map_err(|e| CliError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Canonical TOML text of a configuration; `parse_config` of the result yields `cfg` again.
pub fn emit_config(cfg: &ExperimentConfig) -> Result<String, CliError> {
    toml::to_string(cfg).map_err(|e| CliError::Config(e.to_string()))
}

/// Keys present in `text` that the schema does not list.
pub fn unknown_keys(text: &str) -> Result<BTreeSet<String>, CliError> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    let known: BTreeSet<(&str, &str)> = SCHEMA.iter().copied().collect();
    let mut out = BTreeSet::new();
    for (k, v) in &table {
        match v {
            toml::Value::Table(t) => {
                for key in t.keys() {
                    if !known.contains(&(k.as_str(), key.as_str())) {
                        out.insert(format!("{k}.{key}"));
                    }
                }
            }
            _ if !known.contains(&("", k.as_str())) => {
                out.insert(k.clone());
            }
            _ => {}
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_preset_config() {
        let c = parse_config("mode = \"simulate-pde\"\npreset = \"fig2\"\n").unwrap();
        assert_eq!(
            c.kinetics,
            KineticParams {
                tau: 0.1858,
                beta: 0.755,
                gamma: 0.5
            }
        );
        assert_eq!(c.perturbation.epsilon, 0.0);
    }

    #[test]
    fn empty_text_names_required_keys() {
        let e = parse_config("").unwrap_err().to_string();
        assert!(e.contains("mode"), "{e}");
    }

    #[test]
    fn unknown_key_is_named() {
        let e = parse_config("mode = \"simulate-pde\"\n[grid]\nsize = 3\n")
            .unwrap_err()
            .to_string();
        assert!(e.contains("size"), "{e}");
        let e = parse_config("mode = \"simulate-pde\"\ncolour = 1\n")
            .unwrap_err()
            .to_string();
        assert!(e.contains("colour"), "{e}");
    }

    #[test]
    fn syntax_errors_carry_line() {
        let e = parse_config("mode = \"simulate-pde\"\n[grid\n")
            .unwrap_err()
            .to_string();
        assert!(e.contains("line 2"), "{e}");
    }

    #[test]
    fn overrides_apply_per_key() {
        let c = parse_config("mode = \"simulate-pde\"\npreset = \"pl1\"\n[kinetics]\ntau = 0.10195\n").unwrap();
        assert_eq!(c.kinetics.tau, 0.10195);
        assert_eq!(c.kinetics.beta, 0.8);
        assert_eq!(c.perturbation.a1, -0.1997);
    }

    #[test]
    fn roundtrip_with_and_without_preset() {
        for text in [
            "mode = \"simulate-pde\"\npreset = \"hb\"\n",
            "mode = \"cb-average\"\n[cb]\nratio = [1, 3]\nh1 = [[0, 1.0, 0.5]]\nf2 = [[0, 0, 4, 0, 0.0, 1.0]]\n",
            "mode = \"dioph-check\"\n[dioph]\nfrequencies = [0.5, 1.0]\n",
        ] {
            let c = parse_config(text).unwrap();
            let again = parse_config(&emit_config(&c).unwrap()).unwrap();
            assert_eq!(c, again);
        }
    }

    #[test]
    fn schema_is_exhaustive() {
        let full = emit_config(&{
            let mut c = ExperimentConfig::new(Mode::AnalyzePath);
            c.preset = Some("fig2".into());
            c.grid.dt = Some(0.05);
            c.run.sweep = Some(SweepConfig {
                parameter: SweepParameter::Tau,
                values: vec![0.2],
            });
            c.analysis.thickness_segment = Some([[0.0, 0.0], [1.0, 0.0]]);
            c.output.prefix = Some("x".into());
            c.input.path = Some("p.csv".into());
            c.cb.ratio = Some([1, 3]);
            c
        })
        .unwrap();
        let table: toml::Table = full.parse().unwrap();
        let mut emitted = BTreeSet::new();
        for (k, v) in &table {
            match v {
                toml::Value::Table(t) => emitted.extend(t.keys().map(|key| (k.clone(), key.clone()))),
                _ => {
                    emitted.insert((String::new(), k.clone()));
                }
            }
        }
        let schema: BTreeSet<(String, String)> = SCHEMA.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        assert_eq!(emitted, schema);
        assert!(unknown_keys(&full).unwrap().is_empty());
    }

    #[test]
    fn every_table_rejects_strangers() {
        let tables: BTreeSet<&str> = SCHEMA.iter().map(|(t, _)| *t).filter(|t| !t.is_empty()).collect();
        for t in tables {
            let text = format!("mode = \"dioph-check\"\n[{t}]\nnot_a_key = 1\n");
            let e = parse_config(&text).unwrap_err().to_string();
            assert!(e.contains("not_a_key"), "{t}: {e}");
            assert_eq!(unknown_keys(&text).unwrap().len(), 1);
        }
    }

    #[test]
    fn auto_time_step_survives_preset_overlay() {
        let mut c = parse_config("mode = \"simulate-pde\"\npreset = \"fig2\"\n").unwrap();
        c.grid.dt = None;
        let text = emit_config(&c).unwrap();
        assert!(text.contains("dt = \"auto\""), "{text}");
        assert_eq!(parse_config(&text).unwrap(), c);
        assert!(parse_config("mode = \"simulate-pde\"\n[grid]\ndt = \"fast\"\n").is_err());
        assert_eq!(
            parse_config("mode = \"simulate-pde\"\n[grid]\ndt = 1\nn = 10\n")
                .unwrap()
                .grid
                .dt,
            Some(1.0)
        );
    }

    #[test]
    fn range_checks() {
        for text in [
            "mode = \"simulate-pde\"\n[kinetics]\ntau = -1.0\nbeta = 0.7\ngamma = 0.5\n",
            "mode = \"simulate-pde\"\n[grid]\nn = 2\n",
            "mode = \"analyze-path\"\n",
            "mode = \"simulate-pde\"\n[analysis]\ntransient_fraction = 1.0\n",
            "mode = \"simulate-pde\"\npreset = \"nope\"\n",
        ] {
            assert!(matches!(parse_config(text), Err(CliError::Config(_))), "{text}");
        }
    }
}

//! Experiment configuration: a TOML file, `--set` overrides, then flags.

use std::path::{Path, PathBuf};

use doslab::dos::{CompareOptions, SweepSpec, DEFAULT_ETA, DEFAULT_QUAD_TOL};
use doslab::spectral::{Estimator, DEFAULT_DENSE_CAP, DEFAULT_POLY_TOL, MIN_PROBES};
use doslab::{Domain, DomainDescriptor, MethodPolicy, Potential, PotentialDescriptor};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out: PathBuf,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
    pub cache: CacheConfig,
    pub domain: DomainDescriptor,
    pub potential: PotentialDescriptor,
    pub sweep: SweepConfig,
    pub method: MethodConfig,
    pub oracle: OracleConfig,
    pub compare: CompareConfig,
    pub rescale: RescaleConfig,
    pub ids: IdsConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("doslab-out"),
            threads: 0,
            cache: CacheConfig::default(),
            domain: DomainDescriptor::Box { dimension: 2, half_width: 1.0 },
            potential: PotentialDescriptor::Example,
            sweep: SweepConfig::default(),
            method: MethodConfig::default(),
            oracle: OracleConfig::default(),
            compare: CompareConfig::default(),
            rescale: RescaleConfig::default(),
            ids: IdsConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CacheConfig {
    pub enabled: bool,
    pub dir: PathBuf,
}

impl Default for CacheConfig {
    fn default() -> Self {
        Self { enabled: true, dir: PathBuf::from(".doslab-cache") }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub t: Vec<f64>,
    pub hbar: Vec<f64>,
    pub eta: f64,
    pub quad_tol: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let s = SweepSpec::default();
        Self { t: s.ts, hbar: s.hbars, eta: DEFAULT_ETA, quad_tol: DEFAULT_QUAD_TOL }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodConfig {
    pub dense_cap: usize,
    pub estimator: Estimator,
    pub probes: usize,
    pub degree: Option<usize>,
    pub poly_tol: f64,
    pub decay: f64,
}

impl Default for MethodConfig {
    fn default() -> Self {
        let p = MethodPolicy::default();
        Self {
            dense_cap: DEFAULT_DENSE_CAP,
            estimator: p.estimator,
            probes: p.probes,
            degree: None,
            poly_tol: DEFAULT_POLY_TOL,
            decay: p.decay,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub t: Vec<f64>,
    pub quad_tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { t: vec![0.25, 0.5, 1.0, 2.0], quad_tol: DEFAULT_QUAD_TOL }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    /// Second domain; defaults to the unit ball of the main domain's dimension.
    pub domain: Option<DomainDescriptor>,
    pub t: Vec<f64>,
    pub hbar: Vec<f64>,
    pub oracle_fit_t: Vec<f64>,
    pub differ_tol: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        let c = CompareOptions::default();
        Self {
            domain: None,
            t: c.sweep.ts,
            hbar: c.sweep.hbars,
            oracle_fit_t: c.oracle_fit_ts,
            differ_tol: c.differ_tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RescaleConfig {
    pub r: Vec<f64>,
    pub h: f64,
    pub t: Vec<f64>,
}

impl Default for RescaleConfig {
    fn default() -> Self {
        Self { r: vec![2.0, 3.0], h: 0.05, t: vec![0.5, 1.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdsConfig {
    pub r: f64,
    pub eta: f64,
    /// Defaults to minus the potential bound.
    pub lambda_min: Option<f64>,
    pub lambda_max: f64,
    pub points: usize,
    pub resolution: usize,
    pub t: Vec<f64>,
}

impl Default for IdsConfig {
    fn default() -> Self {
        Self {
            r: 10.0,
            eta: 0.3125,
            lambda_min: None,
            lambda_max: 40.0,
            points: 16001,
            resolution: 4096,
            t: vec![0.5, 1.0, 2.0],
        }
    }
}

/// A config whose records have been turned into core objects.
pub struct Resolved {
    pub config: ExperimentConfig,
    pub domain: Domain,
    pub potential: Potential,
    pub compare_domain: Domain,
    pub lambdas: Vec<f64>,
}

impl Resolved {
    pub fn policy(&self) -> MethodPolicy {
        let m = &self.config.method;
        MethodPolicy {
            dense_cap: m.dense_cap,
            estimator: m.estimator,
            probes: m.probes,
            degree: m.degree,
            poly_tol: m.poly_tol,
            decay: m.decay,
            seed: self.config.seed,
        }
    }

    pub fn sweep_spec(&self) -> SweepSpec {
        let s = &self.config.sweep;
        SweepSpec { ts: s.t.clone(), hbars: s.hbar.clone(), eta: s.eta, policy: self.policy(), quad_tol: s.quad_tol }
    }

    pub fn compare_options(&self) -> CompareOptions {
        let c = &self.config.compare;
        CompareOptions {
            sweep: SweepSpec { ts: c.t.clone(), hbars: c.hbar.clone(), ..self.sweep_spec() },
            oracle_fit_ts: c.oracle_fit_t.clone(),
            differ_tol: c.differ_tol,
        }
    }
}

/// Reads `path` (or starts from defaults) and applies `key=value` overrides.
pub fn load(path: Option<&Path>, overrides: &[String]) -> CliResult<ExperimentConfig> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?,
        None => String::new(),
    };
    let origin = path.map_or_else(|| "<defaults>".to_string(), |p| p.display().to_string());
    if overrides.is_empty() {
        // Parsing the text directly keeps line and column in diagnostics.
        return toml::from_str(&text).map_err(|e| CliError::config(origin, e.message_with_span(&text)));
    }
    let mut table: toml::Table = toml::from_str(&text).map_err(|e| CliError::config(&origin, e.message_with_span(&text)))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::config(format!("{origin} with --set overrides"), e.message()))
}

trait SpanMessage {
    fn message_with_span(&self, text: &str) -> String;
}

impl SpanMessage for toml::de::Error {
    fn message_with_span(&self, text: &str) -> String {
        match self.span() {
            Some(span) => {
                let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
                format!("line {line}: {}", self.message())
            }
            None => self.message().to_string(),
        }
    }
}

/// `a.b.c=value`; the value is read as TOML and falls back to a bare string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> CliResult<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::config("--set", format!("expected KEY=VALUE, got '{assignment}'")))?;
    let key = key.trim();
    let path: Vec<&str> = key.split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(CliError::config("--set", format!("malformed key '{key}'")));
    }
    let value = match toml::from_str::<toml::Table>(&format!("v = {}", raw.trim())) {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let mut node = table;
    for part in &path[..path.len() - 1] {
        let entry = node.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| CliError::config(key, format!("'{part}' is not a table")))?;
    }
    node.insert(path[path.len() - 1].to_string(), value);
    Ok(())
}

fn check_list(field: &str, xs: &[f64], descending: bool) -> CliResult<()> {
    if xs.is_empty() {
        return Err(CliError::config(field, "must not be empty"));
    }
    if let Some(x) = xs.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        return Err(CliError::config(field, format!("values must be positive and finite, got {x}")));
    }
    if descending && xs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CliError::config(field, "must be strictly descending"));
    }
    Ok(())
}

fn check_positive(field: &str, x: f64) -> CliResult<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(field, format!("must be positive and finite, got {x}")))
    }
}

fn build_domain(field: &str, desc: &DomainDescriptor) -> CliResult<Domain> {
    if let DomainDescriptor::MaskFunction { .. } = desc {
        return Err(CliError::config(
            format!("{field}.kind"),
            "mask-function domains need code and cannot be given in a config file",
        ));
    }
    Domain::from_descriptor(desc).map_err(|e| CliError::config(field, e))
}

impl ExperimentConfig {
    /// Checks every field and builds the core objects; nothing is computed yet.
    pub fn resolve(self) -> CliResult<Resolved> {
        let domain = build_domain("domain", &self.domain)?;
        let dim = domain.dim();
        if let PotentialDescriptor::Custom { .. } = self.potential {
            return Err(CliError::config("potential.kind", "custom potentials need code and cannot be given in a config file"));
        }
        let potential = Potential::from_descriptor(&self.potential, dim).map_err(|e| CliError::config("potential", e))?;
        let compare_desc = self.compare.domain.clone().unwrap_or(DomainDescriptor::Ball { dimension: dim, radius: 1.0 });
        let compare_domain = build_domain("compare.domain", &compare_desc)?;
        if compare_domain.dim() != dim {
            return Err(CliError::config(
                "compare.domain.dimension",
                format!("must equal domain.dimension = {dim}, got {}", compare_domain.dim()),
            ));
        }

        check_list("sweep.t", &self.sweep.t, false)?;
        check_list("sweep.hbar", &self.sweep.hbar, true)?;
        check_positive("sweep.eta", self.sweep.eta)?;
        check_positive("sweep.quad_tol", self.sweep.quad_tol)?;

        let m = &self.method;
        if m.probes < MIN_PROBES {
            return Err(CliError::config("method.probes", format!("must be at least {MIN_PROBES}, got {}", m.probes)));
        }
        if m.degree == Some(0) {
            return Err(CliError::config("method.degree", "must be at least 1"));
        }
        check_positive("method.poly_tol", m.poly_tol)?;
        check_positive("method.decay", m.decay)?;

        check_list("oracle.t", &self.oracle.t, false)?;
        check_positive("oracle.quad_tol", self.oracle.quad_tol)?;

        check_list("compare.t", &self.compare.t, false)?;
        check_list("compare.hbar", &self.compare.hbar, true)?;
        check_list("compare.oracle_fit_t", &self.compare.oracle_fit_t, false)?;
        if self.compare.t.len() < 2 || self.compare.oracle_fit_t.len() < 2 {
            return Err(CliError::config("compare.t", "mean extraction needs at least two t values"));
        }
        check_positive("compare.differ_tol", self.compare.differ_tol)?;

        check_list("rescale.r", &self.rescale.r, false)?;
        check_positive("rescale.h", self.rescale.h)?;
        check_list("rescale.t", &self.rescale.t, false)?;

        let ids = &self.ids;
        check_positive("ids.r", ids.r)?;
        check_positive("ids.eta", ids.eta)?;
        check_list("ids.t", &ids.t, false)?;
        if ids.points < 2 {
            return Err(CliError::config("ids.points", "must be at least 2"));
        }
        if ids.resolution == 0 {
            return Err(CliError::config("ids.resolution", "must be positive"));
        }
        let lo = ids.lambda_min.unwrap_or(-potential.bound());
        if !(lo.is_finite() && ids.lambda_max.is_finite() && ids.lambda_max > lo) {
            return Err(CliError::config("ids.lambda_max", format!("must exceed lambda_min = {lo}")));
        }
        let step = (ids.lambda_max - lo) / (ids.points - 1) as f64;
        let lambdas = (0..ids.points).map(|i| lo + i as f64 * step).collect();

        Ok(Resolved { config: self, domain, potential, compare_domain, lambdas })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        let r = ExperimentConfig::default().resolve().unwrap();
        assert_eq!(r.domain.dim(), 2);
        assert_eq!(r.lambdas.len(), 16001);
        assert_eq!(r.lambdas[0], -0.5);
    }

    #[test]
    fn override_paths() {
        let mut t = toml::Table::new();
        apply_override(&mut t, "sweep.hbar=[0.2, 0.1]").unwrap();
        apply_override(&mut t, "domain.kind=ball").unwrap();
        assert_eq!(t["sweep"]["hbar"].as_array().unwrap().len(), 2);
        assert_eq!(t["domain"]["kind"].as_str(), Some("ball"));
        assert!(apply_override(&mut t, "novalue").is_err());
        assert!(apply_override(&mut t, "sweep.hbar.x=1").is_err());
    }

    #[test]
    fn unknown_field_reports_line() {
        let text = "seed = 1\n\n[sweep]\nteta = 0.1\n";
        let err = toml::from_str::<ExperimentConfig>(text).unwrap_err();
        assert!(err.message_with_span(text).starts_with("line 4"), "{}", err.message_with_span(text));
    }

    #[test]
    fn mask_domain_rejected() {
        let cfg = ExperimentConfig {
            domain: DomainDescriptor::MaskFunction { dimension: 2, label: "m".into(), bounding_radius: 1.0, scale: 1.0 },
            ..Default::default()
        };
        match cfg.resolve() {
            Err(CliError::Config { field, .. }) => assert_eq!(field, "domain.kind"),
            _ => panic!("mask domain accepted"),
        }
    }
}

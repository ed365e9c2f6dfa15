//! Reproducible experiments described by a JSON configuration.
//!
//! A run produces a [`Report`] (written as `report.json`) and a tabular
//! [`Series`] (written as `series.csv`). Numeric payloads depend only on the
//! configuration, so rerunning a config reproduces the CSV byte for byte.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};

use crate::budgets::{summarize, BudgetSummary};
use crate::certify::{certify, extract_factor, Certificate, CertifyOptions};
use crate::error::{Error, Result};
use crate::norms::{christoffel_sup, nikolskii_constant, NikolskiiEstimate};
use crate::points::{generate_points, tensor_points, PointSet, PointSpec, Provenance, Sample};
use crate::recovery::{verify_recovery, RecoveryBoundReport};
use crate::rng::{self, purpose};
use crate::search::{minimal_m_search, two_stage_subsample, CurveRow, Generator, SearchOptions, TwoStageBudgets};
use crate::space::{make_lacunary_space, make_trig_space, tensor_product, SpaceSpec, Spectrum, Subspace, Target, TrigPolynomial, C64};
use crate::tolerances::Tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Certify,
    Nikolskii,
    Generate,
    Subsample,
    Recover,
    StudyScaling,
    StudyLacunary,
    StudyTensor,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Certify => "certify",
            ExperimentKind::Nikolskii => "nikolskii",
            ExperimentKind::Generate => "generate",
            ExperimentKind::Subsample => "subsample",
            ExperimentKind::Recover => "recover",
            ExperimentKind::StudyScaling => "study-scaling",
            ExperimentKind::StudyLacunary => "study-lacunary",
            ExperimentKind::StudyTensor => "study-tensor",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub k: Vec<i64>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Function to recover.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetSpec {
    Trig { dimension: usize, terms: Vec<TermSpec> },
    /// Values on a finite set, as `[re, im]`.
    Values { values: Vec<[f64; 2]> },
}

impl TargetSpec {
    pub fn build(&self) -> Target {
        match self {
            TargetSpec::Trig { dimension, terms } => Target::Trig(TrigPolynomial::from_terms(
                *dimension,
                terms.iter().map(|t| (t.k.clone(), C64::new(t.re, t.im))),
            )),
            TargetSpec::Values { values } => Target::Values(values.iter().map(|[re, im]| C64::new(*re, *im)).collect()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Nothing is written when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_report")]
    pub report: String,
    #[serde(default = "default_series")]
    pub series: String,
}

fn default_report() -> String {
    "report.json".into()
}

fn default_series() -> String {
    "series.csv".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            report: default_report(),
            series: default_series(),
        }
    }
}

fn default_p() -> f64 {
    2.0
}

fn default_constant() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<PointSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetSpec>,
    #[serde(default = "default_p", with = "crate::certify::exponent")]
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// `N` for study-scaling (odd, one-dimensional trig spaces), `n` for study-lacunary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lacunary_ratio: Option<f64>,
    /// Upper end of the searched range of `m`; the lower end is always `N - 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<Generator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budgets: Option<TwoStageBudgets>,
    /// Leading constant of the reported theoretical budgets.
    #[serde(default = "default_constant")]
    pub leading_constant: f64,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// Command-line overrides applied on top of a config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub eps: Option<f64>,
    pub trials: Option<usize>,
    pub threshold: Option<f64>,
    pub tolerances: Vec<String>,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            space: None,
            points: None,
            target: None,
            p: 2.0,
            q: None,
            eps: None,
            sizes: None,
            lacunary_ratio: None,
            m_max: None,
            generator: None,
            trials: None,
            threshold: None,
            seed: None,
            budgets: None,
            leading_constant: 1.0,
            output: OutputConfig::default(),
            tolerances: Tolerances::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(if path == "." { String::new() } else { path }, e.into_inner().to_string())
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if o.seed.is_some() {
            self.seed = o.seed;
        }
        if let Some(dir) = &o.out {
            self.output.dir = Some(dir.clone());
        }
        if let Some(p) = o.p {
            self.p = p;
        }
        if o.q.is_some() {
            self.q = o.q;
        }
        if o.eps.is_some() {
            self.eps = o.eps;
        }
        if o.trials.is_some() {
            self.trials = o.trials;
        }
        if o.threshold.is_some() {
            self.threshold = o.threshold;
        }
        for t in &o.tolerances {
            self.tolerances.set(t)?;
        }
        Ok(())
    }

    fn randomized(&self) -> bool {
        fn random_points(spec: &PointSpec) -> bool {
            match spec {
                PointSpec::Iid { .. } | PointSpec::Leverage { .. } => true,
                PointSpec::Equispaced { .. } => false,
                PointSpec::Tensor { factors } => factors.iter().any(random_points),
            }
        }
        match self.kind {
            ExperimentKind::Subsample => true,
            ExperimentKind::StudyScaling | ExperimentKind::StudyLacunary => {
                self.generator.unwrap_or(Generator::Iid) == Generator::Iid
            }
            ExperimentKind::Nikolskii => false,
            _ => self.points.as_ref().is_some_and(random_points),
        }
    }

    /// Checks the fields the configured kind needs, reporting the offending field path.
    pub fn validate(&self) -> Result<()> {
        use ExperimentKind::*;
        let need = |present: bool, field: &str| {
            if present {
                Ok(())
            } else {
                Err(Error::config(field, format!("required for kind `{}`", self.kind.name())))
            }
        };
        if !(self.p >= 1.0) {
            return Err(Error::config("p", format!("p = {} must be at least 1", self.p)));
        }
        if let Some(q) = self.q {
            if !(q >= 1.0) || q.is_infinite() {
                return Err(Error::config("q", format!("q = {q} must lie in [1, ∞)")));
            }
        }
        if let Some(eps) = self.eps {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::config("eps", format!("ε = {eps} must lie in (0, 1)")));
            }
        }
        if let Some(t) = self.threshold {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::config("threshold", format!("{t} must lie in (0, 1]")));
            }
        }
        if self.trials == Some(0) {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if !(self.leading_constant > 0.0) {
            return Err(Error::config("leading_constant", "must be positive"));
        }
        match self.kind {
            Certify | Generate => {
                need(self.space.is_some(), "space")?;
                need(self.points.is_some(), "points")?;
            }
            Nikolskii => {
                need(self.space.is_some(), "space")?;
                need(self.q.is_some(), "q")?;
            }
            Subsample => {
                need(self.space.is_some(), "space")?;
                need(self.eps.is_some(), "eps")?;
                need(self.budgets.is_some(), "budgets")?;
            }
            Recover => {
                need(self.space.is_some(), "space")?;
                need(self.points.is_some(), "points")?;
                need(self.target.is_some(), "target")?;
            }
            StudyScaling | StudyLacunary => {
                need(self.eps.is_some(), "eps")?;
                need(self.trials.is_some(), "trials")?;
                need(self.threshold.is_some(), "threshold")?;
                let sizes = self.sizes.as_deref().unwrap_or_default();
                if sizes.is_empty() {
                    return Err(Error::config("sizes", "must be a nonempty list"));
                }
                for (i, &s) in sizes.iter().enumerate() {
                    let bad = if self.kind == StudyScaling { s == 0 || s % 2 == 0 } else { s == 0 };
                    if bad {
                        let want = if self.kind == StudyScaling { "an odd N = 2n + 1" } else { "positive" };
                        return Err(Error::config(format!("sizes[{i}]"), format!("{s} is not {want}")));
                    }
                }
            }
            StudyTensor => {
                match &self.space {
                    Some(SpaceSpec::Tensor { .. }) => {}
                    _ => return Err(Error::config("space", "study-tensor needs a tensor space")),
                }
                match (&self.space, &self.points) {
                    (Some(SpaceSpec::Tensor { factors: s }), Some(PointSpec::Tensor { factors: p })) if s.len() == p.len() => {}
                    _ => return Err(Error::config("points", "study-tensor needs tensor points with one spec per factor")),
                }
            }
        }
        if self.randomized() && self.seed.is_none() {
            return Err(Error::config("seed", format!("required for randomized kind `{}`", self.kind.name())));
        }
        Ok(())
    }

    fn certify_options(&self) -> CertifyOptions {
        CertifyOptions {
            restarts: self.tolerances.restarts,
            seed: self.seed.unwrap_or(0),
            tolerances: self.tolerances.clone(),
        }
    }

    fn build_space(&self) -> Result<Subspace> {
        self.space
            .as_ref()
            .ok_or_else(|| Error::config("space", "missing"))?
            .build()
            .map_err(|e| e.context("building the space"))
    }
}

/// Least-squares fit of `log y = exponent · log x + intercept`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub exponent: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
    pub points: usize,
}

pub fn loglog_fit(x: &[f64], y: &[f64]) -> Option<Fit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n as f64;
    let my = ly.iter().sum::<f64>() / n as f64;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let ss: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - intercept - exponent * a).powi(2)).sum();
    Some(Fit {
        exponent,
        intercept,
        residual: (ss / n as f64).sqrt(),
        points: n,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "kebab-case")]
pub enum Record {
    Certificate {
        label: String,
        certificate: Certificate,
    },
    Points {
        label: String,
        provenance: Provenance,
        points: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    Nikolskii {
        estimate: NikolskiiEstimate,
        budgets: BudgetSummary,
    },
    Subsample {
        seed: u64,
        attempts: usize,
        provenance: Provenance,
        stage1: Certificate,
        certificate: Certificate,
    },
    Recovery {
        report: RecoveryBoundReport,
    },
    /// One minimal-`m` search. Trial `t` draws its points from stream
    /// `rng::stream_id(stream_purpose, t)` of `seed`.
    Search {
        size: usize,
        n: usize,
        seed: u64,
        stream_purpose: u32,
        m_max: usize,
        m_star: Option<usize>,
        curve: Vec<CurveRow>,
        budgets: BudgetSummary,
    },
    Extraction {
        factor: usize,
        extracted: Certificate,
        direct: Certificate,
        difference: f64,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<Fit>,
    /// Fit of `m_star` against `N log2 N`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_n_log_n: Option<Fit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_star: Option<Vec<(usize, usize)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nondecreasing: Option<bool>,
    /// `m_star` of the last size over that of the first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_holds: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub within_bracket: Option<bool>,
    /// Some search ran out of its `m` range.
    #[serde(default)]
    pub exhausted: bool,
}

/// Tabular payload written as CSV.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Series {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Series {
    fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub wall_clock_seconds: f64,
    pub records: Vec<Record>,
    pub summary: Summary,
    #[serde(skip)]
    pub series: Series,
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn tag<T: Serialize>(t: &T) -> String {
    match serde_json::to_value(t) {
        Ok(serde_json::Value::String(s)) => s,
        _ => String::new(),
    }
}

fn cert_row(label: &str, c: &Certificate) -> Vec<String> {
    vec![
        label.to_string(),
        c.m.to_string(),
        num(c.p),
        num(c.c1_pow),
        num(c.c2_pow),
        tag(&c.method),
        tag(&c.status),
    ]
}

const CERT_HEADER: [&str; 7] = ["label", "m", "p", "c1", "c2", "method", "status"];

/// Runs the experiment and writes `report.json` and `series.csv` when an
/// output directory is configured.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let start = Instant::now();
    info!("running {} (seed {:?})", config.kind.name(), config.seed);
    let (records, summary, series) = match config.kind {
        ExperimentKind::Certify => run_certify(config)?,
        ExperimentKind::Nikolskii => run_nikolskii(config)?,
        ExperimentKind::Generate => run_generate(config)?,
        ExperimentKind::Subsample => run_subsample(config)?,
        ExperimentKind::Recover => run_recover(config)?,
        ExperimentKind::StudyScaling | ExperimentKind::StudyLacunary => run_study(config)?,
        ExperimentKind::StudyTensor => run_tensor(config)?,
    };
    let report = Report {
        config: config.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        records,
        summary,
        series,
    };
    if let Some(dir) = &config.output.dir {
        write_outputs(&report, dir)?;
    }
    Ok(report)
}

pub fn write_outputs(report: &Report, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(report)?;
    fs::write(dir.join(&report.config.output.report), json + "\n")?;
    fs::write(dir.join(&report.config.output.series), report.series.to_csv()?)?;
    Ok(())
}

type Outcome = (Vec<Record>, Summary, Series);

fn points_record(label: &str, sample: &Sample) -> Record {
    Record::Points {
        label: label.to_string(),
        provenance: sample.points().provenance().clone(),
        points: sample.points().points().to_vec(),
        weights: sample.weights().map(|w| w.to_vec()),
    }
}

fn run_certify(cfg: &ExperimentConfig) -> Result<Outcome> {
    let space = cfg.build_space()?;
    let sample = generate_points(&space, cfg.points.as_ref().expect("validated"), cfg.seed)?;
    let cert = certify(&space, sample.points(), sample.weights(), cfg.p, &cfg.certify_options())
        .map_err(|e| e.context("certifying"))?;
    let mut series = Series::new(&CERT_HEADER);
    series.push(cert_row("sample", &cert));
    let records = vec![
        points_record("sample", &sample),
        Record::Certificate {
            label: "sample".into(),
            certificate: cert,
        },
    ];
    Ok((records, Summary::default(), series))
}

fn budgets_for(cfg: &ExperimentConfig, space: &Subspace, q: f64, b: f64) -> Result<BudgetSummary> {
    let n = space.dim();
    let t = (christoffel_sup(space, &cfg.tolerances)? / n as f64).sqrt();
    Ok(summarize(cfg.leading_constant, n, b, q, t, cfg.eps.unwrap_or(0.5)))
}

fn run_nikolskii(cfg: &ExperimentConfig) -> Result<Outcome> {
    let space = cfg.build_space()?;
    let q = cfg.q.expect("validated");
    let est = nikolskii_constant(&space, q, &cfg.tolerances).map_err(|e| e.context("estimating the Nikol'skii constant"))?;
    let budgets = budgets_for(cfg, &space, q, est.b)?;
    let mut series = Series::new(&["q", "M", "B", "certified_lower_bound", "method", "grid_size"]);
    series.push(vec![
        num(est.q),
        num(est.m),
        num(est.b),
        num(est.certified_lower_bound),
        tag(&est.method),
        est.grid_size.to_string(),
    ]);
    Ok((vec![Record::Nikolskii { estimate: est, budgets }], Summary::default(), series))
}

fn run_generate(cfg: &ExperimentConfig) -> Result<Outcome> {
    let space = cfg.build_space()?;
    let sample = generate_points(&space, cfg.points.as_ref().expect("validated"), cfg.seed)?;
    let d = sample.points().dimension();
    let mut header: Vec<String> = vec!["index".into()];
    header.extend((1..=d).map(|t| format!("x{t}")));
    header.push("weight".into());
    let mut series = Series {
        header,
        rows: Vec::new(),
    };
    let m = sample.points().len();
    for (j, x) in sample.points().points().iter().enumerate() {
        let mut row = vec![j.to_string()];
        row.extend(x.iter().map(|v| num(*v)));
        row.push(num(sample.weights().map_or(1.0 / m as f64, |w| w[j])));
        series.push(row);
    }
    Ok((vec![points_record("sample", &sample)], Summary::default(), series))
}

fn run_subsample(cfg: &ExperimentConfig) -> Result<Outcome> {
    let space = cfg.build_space()?;
    let seed = cfg.seed.expect("validated");
    let q = cfg.q.unwrap_or(cfg.p);
    let out = two_stage_subsample(
        &space,
        q,
        cfg.eps.expect("validated"),
        cfg.budgets.as_ref().expect("validated"),
        seed,
        &cfg.certify_options(),
    )?;
    let mut series = Series::new(&CERT_HEADER);
    series.push(cert_row("stage1", &out.stage1));
    series.push(cert_row("subset", &out.certificate));
    let records = vec![Record::Subsample {
        seed,
        attempts: out.attempts,
        provenance: out.points.provenance().clone(),
        stage1: out.stage1,
        certificate: out.certificate,
    }];
    Ok((records, Summary::default(), series))
}

fn run_recover(cfg: &ExperimentConfig) -> Result<Outcome> {
    let space = cfg.build_space()?;
    let sample = generate_points(&space, cfg.points.as_ref().expect("validated"), cfg.seed)?;
    let target = cfg.target.as_ref().expect("validated").build();
    let rep = verify_recovery(&target, &space, &sample.clone().into_weighted(), cfg.p, &cfg.certify_options())?;
    let mut series = Series::new(&["p", "lhs", "rhs", "bound_constant", "d_inf", "holds", "advisory"]);
    series.push(vec![
        num(rep.p),
        num(rep.lhs),
        num(rep.rhs),
        num(rep.bound_constant),
        num(rep.d_inf),
        rep.holds.to_string(),
        rep.advisory.to_string(),
    ]);
    let summary = Summary {
        bound_holds: Some(rep.holds),
        ..Summary::default()
    };
    Ok((vec![points_record("sample", &sample), Record::Recovery { report: rep }], summary, series))
}

/// Default top of the searched range: `20 N^{max(1, p/2)} log2(2N)`.
fn default_m_max(n: usize, p: f64, kind: ExperimentKind) -> usize {
    let nf = n as f64;
    let power = if kind == ExperimentKind::StudyLacunary { (p / 2.0).max(1.0) } else { 1.0 };
    (20.0 * nf.powf(power) * (2.0 * nf).log2()).ceil() as usize
}

fn run_study(cfg: &ExperimentConfig) -> Result<Outcome> {
    let seed = cfg.seed.unwrap_or(0);
    let eps = cfg.eps.expect("validated");
    let trials = cfg.trials.expect("validated");
    let threshold = cfg.threshold.expect("validated");
    let ratio = cfg.lacunary_ratio.unwrap_or(2.0);
    let mut records = Vec::new();
    let mut series = Series::new(&["size", "n", "m", "trials", "successes", "c1_min", "c2_max"]);
    let mut found: Vec<(usize, usize)> = Vec::new();
    let mut exhausted = false;

    for (i, &size) in cfg.sizes.as_deref().expect("validated").iter().enumerate() {
        let space = if cfg.kind == ExperimentKind::StudyScaling {
            make_trig_space(1, Spectrum::cube(1, (size as i64 - 1) / 2)?)?
        } else {
            make_lacunary_space(size, ratio)?
        };
        let n = space.dim();
        let m_max = cfg.m_max.unwrap_or_else(|| default_m_max(n, cfg.p, cfg.kind));
        let study_seed = rng::derive(seed, purpose::STUDY, i as u64);
        let opts = SearchOptions {
            m_max,
            generator: cfg.generator.unwrap_or(Generator::Iid),
            certify: CertifyOptions {
                seed: study_seed,
                ..cfg.certify_options()
            },
        };
        let q = cfg.q.unwrap_or(2.0);
        let nik = nikolskii_constant(&space, q, &cfg.tolerances)?;
        let budgets = budgets_for(cfg, &space, q, nik.b)?;
        info!("size {size}: N = {n}, m in [{}, {m_max}], seed {study_seed}", n - 1);
        let (m_star, curve) = match minimal_m_search(&space, cfg.p, eps, trials, threshold, study_seed, &opts) {
            Ok(out) => (Some(out.m_star), out.curve),
            Err(Error::SearchFailed { curve, .. }) => {
                exhausted = true;
                (None, curve)
            }
            Err(e) => return Err(e.context(format!("searching size {size}"))),
        };
        for r in &curve {
            series.push(vec![
                size.to_string(),
                n.to_string(),
                r.m.to_string(),
                r.trials.to_string(),
                r.successes.to_string(),
                num(r.c1_min),
                num(r.c2_max),
            ]);
        }
        if let Some(m) = m_star {
            found.push((size, m));
        }
        records.push(Record::Search {
            size,
            n,
            seed: study_seed,
            stream_purpose: purpose::TRIAL,
            m_max,
            m_star,
            curve,
            budgets,
        });
    }

    let x: Vec<f64> = found.iter().map(|&(s, _)| s as f64).collect();
    let y: Vec<f64> = found.iter().map(|&(_, m)| m as f64).collect();
    let x_log: Vec<f64> = x.iter().map(|v| v * v.log2().max(1.0)).collect();
    let summary = Summary {
        fit: loglog_fit(&x, &y),
        fit_n_log_n: loglog_fit(&x_log, &y),
        nondecreasing: Some(!exhausted && found.windows(2).all(|w| w[1].1 >= w[0].1)),
        growth_ratio: match (found.first(), found.last()) {
            (Some(a), Some(b)) if found.len() >= 2 => Some(b.1 as f64 / a.1 as f64),
            _ => None,
        },
        m_star: Some(found),
        exhausted,
        ..Summary::default()
    };
    Ok((records, summary, series))
}

fn run_tensor(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (space_specs, point_specs) = match (&cfg.space, &cfg.points) {
        (Some(SpaceSpec::Tensor { factors: s }), Some(PointSpec::Tensor { factors: p })) => (s, p),
        _ => unreachable!("validated"),
    };
    let opts = cfg.certify_options();
    let spaces = space_specs.iter().map(|s| s.build()).collect::<Result<Vec<_>>>()?;
    let mut factor_sets: Vec<PointSet> = Vec::new();
    for (i, (space, spec)) in spaces.iter().zip(point_specs).enumerate() {
        let seed = cfg.seed.map(|s| rng::derive(s, purpose::STUDY, i as u64));
        match generate_points(space, spec, seed)? {
            Sample::Plain(p) => factor_sets.push(p),
            Sample::Weighted(_) => {
                return Err(Error::config(format!("points.factors[{i}]"), "weighted factor sets are not supported"))
            }
        }
    }
    let tensor = tensor_product(&spaces)?;
    let product_points = tensor_points(&factor_sets)?;

    let mut records = Vec::new();
    let mut series = Series::new(&CERT_HEADER);
    let mut lo = 1.0;
    let mut hi = 1.0;
    for (i, (space, pts)) in spaces.iter().zip(&factor_sets).enumerate() {
        let c = certify(space, pts, None, cfg.p, &opts).map_err(|e| e.context(format!("certifying factor {i}")))?;
        lo *= c.c1_pow;
        hi *= c.c2_pow;
        let label = format!("factor{i}");
        series.push(cert_row(&label, &c));
        records.push(Record::Certificate { label, certificate: c });
    }
    let product = certify(&tensor, &product_points, None, cfg.p, &opts).map_err(|e| e.context("certifying the product set"))?;
    series.push(cert_row("product", &product));
    let within = product.c1_pow >= lo - 1e-8 && product.c2_pow <= hi + 1e-8;
    records.push(Record::Certificate {
        label: "product".into(),
        certificate: product.clone(),
    });
    for (i, space) in spaces.iter().enumerate() {
        let (pts, extracted) = extract_factor(&tensor, &product_points, i, &product)?;
        let direct = certify(space, &pts, None, cfg.p, &opts)?;
        let difference = (extracted.c1_pow - direct.c1_pow).abs().max((extracted.c2_pow - direct.c2_pow).abs());
        series.push(cert_row(&format!("extracted{i}"), &extracted));
        records.push(Record::Extraction {
            factor: i,
            extracted,
            direct,
            difference,
        });
    }
    let summary = Summary {
        within_bracket: Some(within),
        ..Summary::default()
    };
    Ok((records, summary, series))
}

/// Human-readable summary printed by the CLI.
pub fn summary_table(report: &Report) -> String {
    let mut out = format!(
        "{} (sampdisc {}, seed {}, {:.2} s)\n",
        report.config.kind.name(),
        report.version,
        report.seed.map_or("-".to_string(), |s| s.to_string()),
        report.wall_clock_seconds
    );
    let widths: Vec<usize> = (0..report.series.header.len())
        .map(|c| {
            report
                .series
                .rows
                .iter()
                .map(|r| r[c].len())
                .chain([report.series.header[c].len()])
                .max()
                .unwrap_or(0)
                .min(24)
        })
        .collect();
    let line = |cells: &[String]| -> String {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{:>w$}", if c.len() > *w { &c[..*w] } else { c.as_str() }, w = w))
            .collect::<Vec<_>>()
            .join("  ")
    };
    const MAX_ROWS: usize = 40;
    out += &line(&report.series.header);
    out.push('\n');
    for r in report.series.rows.iter().take(MAX_ROWS) {
        out += &line(r);
        out.push('\n');
    }
    if report.series.rows.len() > MAX_ROWS {
        out += &format!("... {} more rows\n", report.series.rows.len() - MAX_ROWS);
    }
    let s = &report.summary;
    if let Some(m) = &s.m_star {
        out += &format!(
            "m_star: {}\n",
            m.iter().map(|(a, b)| format!("{a}→{b}")).collect::<Vec<_>>().join(", ")
        );
    }
    if let Some(f) = &s.fit {
        out += &format!("exponent vs size: {:.3} (residual {:.3})\n", f.exponent, f.residual);
    }
    if let Some(f) = &s.fit_n_log_n {
        out += &format!("exponent vs size·log2(size): {:.3} (residual {:.3})\n", f.exponent, f.residual);
    }
    if let Some(b) = s.bound_holds {
        out += &format!("recovery bound holds: {b}\n");
    }
    if let Some(b) = s.within_bracket {
        out += &format!("product certificate within factor bracket: {b}\n");
    }
    if s.exhausted {
        out += "some searches exhausted their m range\n";
    }
    out
}

//! End-to-end driver: ingest, sample, summarize, quantify, select, write.
//!
//! Output directory layout:
//!
//! | file | content |
//! |------|---------|
//! | `config.txt` | the resolved configuration, re-readable by [`RunConfig::from_file`] |
//! | `draws.csv` | retained posterior draws, one row each |
//! | `moments.csv` | `A`, `S`, `M` in long form |
//! | `path.csv` | every `γ_λ` entry in long form |
//! | `tradeoff.csv` | per-λ mean loss gap, band, `π_λ`, support size |
//! | `graph_kappa_<κ>.dot` | selected support per κ |
//! | `report.txt` | data summary, selections, versions, seed, timing |

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::factor::FactorConfig;
use crate::io;
use crate::loss_gap::{delta_samples, select_model, LossGapOptions, LossGapResult, Selection};
use crate::model::Dataset;
use crate::moments::{build_lasso_problem, compute_moments, MomentSet, PredictorMode};
use crate::path::{lambda_grid, solve_path, SummaryPath};
use crate::ssvs::{inclusion_frequencies, run_chains, ModelPrior, SsvsConfig};

/// κ levels reported by default.
pub const DEFAULT_KAPPAS: [f64; 6] = [0.02, 0.04, 0.125, 0.325, 0.475, 0.4975];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub responses: Option<PathBuf>,
    pub predictors: Option<PathBuf>,
    pub ssvs: SsvsConfig,
    pub factor: FactorConfig,
    pub chains: usize,
    pub mode: PredictorMode,
    pub grid_size: usize,
    pub grid_ratio: f64,
    pub kappas: Vec<f64>,
    pub band: f64,
    pub replicates: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            responses: None,
            predictors: None,
            ssvs: SsvsConfig::default(),
            factor: FactorConfig::default(),
            chains: 1,
            mode: PredictorMode::Random,
            grid_size: 50,
            grid_ratio: 1e-3,
            kappas: DEFAULT_KAPPAS.to_vec(),
            band: crate::loss_gap::DEFAULT_BAND,
            replicates: crate::loss_gap::DEFAULT_REPLICATES,
            seed: 1,
            output_dir: PathBuf::from("psvs-out"),
        }
    }
}

/// The four prior/predictor combinations; everything else is shared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    RandomPointMass,
    FixedPointMass,
    RandomAlternative,
    FixedAlternative,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::RandomPointMass,
        Scenario::FixedPointMass,
        Scenario::RandomAlternative,
        Scenario::FixedAlternative,
    ];

    pub fn mode(self) -> PredictorMode {
        match self {
            Scenario::RandomPointMass | Scenario::RandomAlternative => PredictorMode::Random,
            Scenario::FixedPointMass | Scenario::FixedAlternative => PredictorMode::Fixed,
        }
    }

    pub fn point_mass(self) -> bool {
        matches!(self, Scenario::RandomPointMass | Scenario::FixedPointMass)
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::RandomPointMass => "random_point_mass",
            Scenario::FixedPointMass => "fixed_point_mass",
            Scenario::RandomAlternative => "random_alternative",
            Scenario::FixedAlternative => "fixed_alternative",
        }
    }

    /// `base` with only the mode and prior switched, writing to a subdirectory.
    pub fn configure(self, base: &RunConfig) -> RunConfig {
        let mut cfg = base.clone();
        cfg.mode = self.mode();
        cfg.ssvs.point_mass = self.point_mass();
        cfg.output_dir = base.output_dir.join(self.name());
        cfg
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse `{value}` for key `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("`{key}` expects true/false, got `{value}`"))),
    }
}

pub fn parse_kappas(value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse("kappa", s))
        .collect()
}

impl RunConfig {
    /// Documented configuration keys.
    pub const KEYS: [&'static str; 21] = [
        "responses",
        "predictors",
        "output_dir",
        "seed",
        "mode",
        "point_mass",
        "model_prior",
        "n_iter",
        "burn_in",
        "thin",
        "chains",
        "residual_factor",
        "residual_loading_prior_var",
        "factors",
        "loading_prior_var",
        "idio_prior_shape",
        "idio_prior_scale",
        "mean_prior_var",
        "grid_size",
        "grid_ratio",
        "kappa",
    ];

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = RunConfig::default();
        cfg.apply_text(&text)?;
        // relative data paths resolve against the config file's directory
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.responses, &mut cfg.predictors].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (key, value) in io::parse_key_values(text)? {
            self.set(&key, &value)?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "responses" => self.responses = Some(PathBuf::from(value)),
            "predictors" => self.predictors = Some(PathBuf::from(value)),
            "output_dir" => self.output_dir = PathBuf::from(value),
            "seed" => self.seed = parse(key, value)?,
            "mode" => self.mode = value.parse()?,
            "point_mass" => self.ssvs.point_mass = parse_bool(key, value)?,
            "model_prior" => self.ssvs.model_prior = value.parse::<ModelPrior>()?,
            "n_iter" => self.ssvs.n_iter = parse(key, value)?,
            "burn_in" => self.ssvs.burn_in = parse(key, value)?,
            "thin" => self.ssvs.thin = parse(key, value)?,
            "chains" => self.chains = parse(key, value)?,
            "residual_factor" => self.ssvs.residual_factor = parse_bool(key, value)?,
            "residual_loading_prior_var" => self.ssvs.residual_loading_prior_var = parse(key, value)?,
            "factors" => self.factor.k = parse(key, value)?,
            "loading_prior_var" => self.factor.prior_scale_loadings = parse(key, value)?,
            "idio_prior_shape" => self.factor.prior_shape_idio = parse(key, value)?,
            "idio_prior_scale" => self.factor.prior_scale_idio = parse(key, value)?,
            "mean_prior_var" => self.factor.prior_var_mu = parse(key, value)?,
            "grid_size" => self.grid_size = parse(key, value)?,
            "grid_ratio" => self.grid_ratio = parse(key, value)?,
            "kappa" => self.kappas = parse_kappas(value)?,
            "band" => self.band = parse(key, value)?,
            "replicates" => self.replicates = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// The configuration as `key = value` text.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        if let Some(p) = &self.responses {
            kv("responses", p.display().to_string());
        }
        if let Some(p) = &self.predictors {
            kv("predictors", p.display().to_string());
        }
        kv("output_dir", self.output_dir.display().to_string());
        kv("seed", self.seed.to_string());
        kv("mode", self.mode.to_string());
        kv("point_mass", self.ssvs.point_mass.to_string());
        kv("model_prior", self.ssvs.model_prior.to_string());
        kv("n_iter", self.ssvs.n_iter.to_string());
        kv("burn_in", self.ssvs.burn_in.to_string());
        kv("thin", self.ssvs.thin.to_string());
        kv("chains", self.chains.to_string());
        kv("residual_factor", self.ssvs.residual_factor.to_string());
        kv("residual_loading_prior_var", self.ssvs.residual_loading_prior_var.to_string());
        kv("factors", self.factor.k.to_string());
        kv("loading_prior_var", self.factor.prior_scale_loadings.to_string());
        kv("idio_prior_shape", self.factor.prior_shape_idio.to_string());
        kv("idio_prior_scale", self.factor.prior_scale_idio.to_string());
        kv("mean_prior_var", self.factor.prior_var_mu.to_string());
        kv("grid_size", self.grid_size.to_string());
        kv("grid_ratio", self.grid_ratio.to_string());
        kv(
            "kappa",
            self.kappas.iter().map(f64::to_string).collect::<Vec<_>>().join(", "),
        );
        kv("band", self.band.to_string());
        kv("replicates", self.replicates.to_string());
        s
    }

    pub fn validate(&self) -> Result<()> {
        self.ssvs.validate()?;
        if self.chains == 0 {
            return Err(Error::Config("chains must be at least 1".into()));
        }
        if self.grid_size < 2 {
            return Err(Error::Config("grid_size must be at least 2".into()));
        }
        if !(self.grid_ratio > 0.0 && self.grid_ratio < 1.0) {
            return Err(Error::Config("grid_ratio must lie in (0, 1)".into()));
        }
        if self.kappas.is_empty() {
            return Err(Error::Config("at least one kappa is required".into()));
        }
        if let Some(k) = self.kappas.iter().find(|k| !(**k > 0.0 && **k <= 0.5)) {
            return Err(Error::Config(format!("kappa {k} outside (0, 0.5]")));
        }
        if !(self.band > 0.0 && self.band < 1.0) {
            return Err(Error::Config("band must lie in (0, 1)".into()));
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be positive".into()));
        }
        for p in [&self.responses, &self.predictors].into_iter().flatten() {
            if !p.is_file() {
                return Err(Error::Config(format!("data file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    fn loss_gap_seed(&self) -> u64 {
        self.seed ^ 0x9E37_79B9_7F4A_7C15
    }
}

#[derive(Debug, Clone)]
pub struct KappaSelection {
    pub kappa: f64,
    pub selection: Selection,
    pub graph_file: PathBuf,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub n_draws: usize,
    pub singular_skips: usize,
    pub inclusion: Vec<f64>,
    pub moments: MomentSet,
    pub path: SummaryPath,
    pub loss_gap: LossGapResult,
    pub selections: Vec<KappaSelection>,
    pub timings: Vec<(&'static str, Duration)>,
    pub report_file: PathBuf,
}

impl RunReport {
    pub fn selection_at(&self, kappa: f64) -> Option<&Selection> {
        self.selections
            .iter()
            .find(|s| s.kappa == kappa)
            .map(|s| &s.selection)
    }
}

/// Ingests the configured data files and runs the pipeline on them.
pub fn run_pipeline(config: &RunConfig) -> Result<RunReport> {
    let (Some(y), Some(x)) = (&config.responses, &config.predictors) else {
        return Err(Error::Config("responses and predictors paths are required".into()));
    };
    config.validate()?;
    let dataset = io::ingest(y, x).map_err(|e| e.in_stage("ingest"))?;
    run_on_dataset(&dataset, config)
}

pub fn run_on_dataset(dataset: &Dataset, config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    fs::create_dir_all(&config.output_dir).map_err(|e| Error::from(e).in_stage("output"))?;
    let out = |name: &str| config.output_dir.join(name);
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |name: &'static str, timings: &mut Vec<(&'static str, Duration)>| {
        timings.push((name, clock.elapsed()));
        clock = Instant::now();
    };

    let ssvs = SsvsConfig {
        seed: config.seed,
        ..config.ssvs.clone()
    };
    let chain = run_chains(dataset, &ssvs, &config.factor, config.chains)
        .map_err(|e| e.in_stage("sampling"))?;
    if chain.draws.is_empty() {
        return Err(Error::EmptyDraws("the chain retained no draws".into()).in_stage("sampling"));
    }
    lap("sampling", &mut timings);

    let x_obs = (config.mode == PredictorMode::Fixed).then_some(&dataset.x);
    let moments = compute_moments(&chain.draws, config.mode, x_obs).map_err(|e| e.in_stage("moments"))?;
    let problem = build_lasso_problem(&moments);
    lap("moments", &mut timings);

    // a posterior concentrated on β = 0 leaves nothing to penalize; the path
    // is then the single all-zero summary at λ = 0
    let grid = match lambda_grid(&problem, config.grid_size, config.grid_ratio) {
        Ok(grid) => grid,
        Err(Error::DegenerateGrid(_)) => vec![0.0],
        Err(e) => return Err(e.in_stage("path")),
    };
    let path = solve_path(&problem, &grid).map_err(|e| e.in_stage("path"))?;
    lap("path", &mut timings);

    let opts = LossGapOptions {
        replicates: config.replicates,
        band: config.band,
        seed: config.loss_gap_seed(),
    };
    let loss_gap = delta_samples(&path, &chain.draws, config.mode, x_obs, opts)
        .map_err(|e| e.in_stage("loss_gap"))?;
    lap("loss_gap", &mut timings);

    let write = || -> Result<Vec<KappaSelection>> {
        fs::write(out("config.txt"), config.to_text())?;
        io::write_draws(&chain.draws, &out("draws.csv"))?;
        io::write_moments(&moments, &out("moments.csv"))?;
        io::write_path(&path, &out("path.csv"))?;
        io::emit_tradeoff_table(&loss_gap, &out("tradeoff.csv"))?;
        config
            .kappas
            .iter()
            .map(|&kappa| {
                let selection = select_model(&loss_gap, &path, kappa);
                let graph_file = out(&format!("graph_kappa_{kappa}.dot"));
                io::emit_graph(
                    &selection.support,
                    &dataset.response_names,
                    &dataset.predictor_names,
                    &graph_file,
                )?;
                Ok(KappaSelection {
                    kappa,
                    selection,
                    graph_file,
                })
            })
            .collect()
    };
    let selections = write().map_err(|e| e.in_stage("output"))?;
    lap("output", &mut timings);

    let mut report = RunReport {
        n_draws: chain.draws.len(),
        singular_skips: chain.singular_skips,
        inclusion: inclusion_frequencies(&chain.draws),
        moments,
        path,
        loss_gap,
        selections,
        timings,
        report_file: out("report.txt"),
    };
    let text = render_report(dataset, config, &report);
    fs::write(&report.report_file, text).map_err(|e| Error::from(e).in_stage("output"))?;
    report.report_file = out("report.txt");
    Ok(report)
}

/// Report lines starting with `time.` carry wall-clock timing; everything
/// else is a deterministic function of the data and configuration.
pub fn render_report(dataset: &Dataset, config: &RunConfig, report: &RunReport) -> String {
    let mut s = String::new();
    let mut line = |text: String| {
        s.push_str(&text);
        s.push('\n');
    };
    line(format!("psvs {}", env!("CARGO_PKG_VERSION")));
    line(format!("seed = {}", config.seed));
    line(format!("mode = {}", config.mode));
    line(format!("point_mass = {}", config.ssvs.point_mass));
    line(format!("model_prior = {}", config.ssvs.model_prior));
    if let Some(p) = &config.responses {
        line(format!("responses_file = {}", p.display()));
    }
    if let Some(p) = &config.predictors {
        line(format!("predictors_file = {}", p.display()));
    }
    line(format!("n = {}, q = {}, p = {}", dataset.n(), dataset.q(), dataset.p()));
    line(format!("responses = {}", dataset.response_names.join(", ")));
    line(format!("predictors = {}", dataset.predictor_names.join(", ")));
    line(format!(
        "response_means = {}",
        dataset.y_mean.iter().map(|v| io::fmt_num(*v)).collect::<Vec<_>>().join(", ")
    ));
    line(format!(
        "predictor_means = {}",
        dataset.x_mean.iter().map(|v| io::fmt_num(*v)).collect::<Vec<_>>().join(", ")
    ));
    line(format!(
        "draws = {} ({} chain(s), {} iterations, burn-in {}, thin {})",
        report.n_draws, config.chains, config.ssvs.n_iter, config.ssvs.burn_in, config.ssvs.thin
    ));
    line(format!("singular_alpha_skips = {}", report.singular_skips));
    for (name, freq) in dataset.predictor_names.iter().zip(&report.inclusion) {
        line(format!("inclusion[{name}] = {}", io::fmt_num(*freq)));
    }
    line(format!(
        "cholesky_jitter = M {}, S {}",
        io::fmt_num(report.moments.jitter_m),
        io::fmt_num(report.moments.jitter_s)
    ));
    if report.path.len() == 1 {
        line("lambda_max = 0 (degenerate: every summary is zero)".to_string());
    } else {
        line(format!("lambda_max = {}", io::fmt_num(report.path.lambdas[0])));
    }
    line(format!(
        "grid = {} points, ratio {}, then 0",
        config.grid_size, config.grid_ratio
    ));
    line(format!("replicates = {}, band = {}", config.replicates, config.band));
    for ks in &report.selections {
        let sel = &ks.selection;
        let links: Vec<String> = sel
            .support
            .iter()
            .map(|&(j, i)| format!("{}~{}", dataset.response_names[j], dataset.predictor_names[i]))
            .collect();
        let mut predictors: Vec<usize> = sel.support.iter().map(|&(_, i)| i).collect();
        predictors.sort_unstable();
        predictors.dedup();
        line(format!(
            "kappa {}: grid index {}, lambda {}, pi {}, links {}, qualified {}",
            ks.kappa,
            sel.index,
            io::fmt_num(sel.lambda),
            io::fmt_num(sel.pi),
            sel.support.len(),
            sel.qualified
        ));
        line(format!(
            "kappa {} predictors: {}",
            ks.kappa,
            predictors
                .iter()
                .map(|&i| dataset.predictor_names[i].as_str())
                .collect::<Vec<_>>()
                .join(", ")
        ));
        line(format!("kappa {} links: {}", ks.kappa, links.join(", ")));
    }
    for (stage, d) in &report.timings {
        line(format!("time.{stage} = {:.3} s", d.as_secs_f64()));
    }
    s
}

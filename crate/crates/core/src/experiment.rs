//! End-to-end experiment pipeline: configuration, training of the three
//! reward models, weight selection, planning on test scenarios and reports.
//!
//! Every artifact lands under the configured output directory:
//!
//! | file | contents |
//! |------|----------|
//! | `demos.json` | demonstrations used for training |
//! | `posterior-<model>.json` | posterior mass aligned with the reward space |
//! | `marginals.json` | per-model, per-feature marginals |
//! | `entropy.csv` | normalized marginal entropy per model and feature |
//! | `baseline-weights.json` | fitted baseline weight vector |
//! | `weights.json` | selected weight vector per model, with epsilon |
//! | `weights.csv` | the same vectors as a table |
//! | `results.csv` | `scenario,model,run,risk,path_length` |
//! | `summary.json` | mean risk and path length per scenario and model |
//! | `trajectories/` | one plan per scenario, model and run |
//! | `costmaps/` | costmap JSON, PGM raster and raster scale |
//! | `scatter.svg` | risk against path length for every run |

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bayes::{compute_posterior, Marginal, Posterior, PriorSpec, RewardSpace, DEFAULT_WEIGHT_SET};
use crate::demonstrator::generate_demos;
use crate::envmodel::{Cell, DemonstrationSet, Environment};
use crate::error::{Error, Result};
use crate::maxent::{maxent_irl_fit, MaxEntFitConfig, RewardVector};
use crate::planner::{evaluate, plan, PlanRecord, RiskSpec, SummaryRow};
use crate::riskselect::{
    build_costmap, normalized_entropy_with, select_weights, EntropyNormalization, SelectionConfig,
};

pub const DEFAULT_BETA: f64 = 0.3;
pub const DEFAULT_EPSILON: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    RabrlUniform,
    RabrlDirichlet,
    MaxentBaseline,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [
        ModelKind::RabrlUniform,
        ModelKind::RabrlDirichlet,
        ModelKind::MaxentBaseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::RabrlUniform => "rabrl-uniform",
            ModelKind::RabrlDirichlet => "rabrl-dirichlet",
            ModelKind::MaxentBaseline => "maxent-baseline",
        }
    }

    pub fn is_bayesian(self) -> bool {
        self != ModelKind::MaxentBaseline
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown model {s:?}")))
    }
}

/// A feature given either by position or by name.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureRef {
    Index(usize),
    Name(String),
}

impl FeatureRef {
    pub fn resolve(&self, env: &Environment) -> Result<usize> {
        let index = match self {
            FeatureRef::Index(i) => Some(*i).filter(|&i| i < env.feature_dim()),
            FeatureRef::Name(n) => env.feature_index(n),
        };
        index.ok_or_else(|| Error::Config(format!("unknown dangerous feature {self:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Route {
    pub start: Cell,
    pub goal: Cell,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub environment: PathBuf,
    /// Each route is one evaluation run.
    pub routes: Vec<Route>,
}

/// Parameters for sampling demonstrations from a scripted demonstrator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub true_weights: Vec<f64>,
    pub beta: f64,
    pub count: usize,
    pub seed: u64,
    pub start: Cell,
    pub goal: Cell,
}

/// Demonstrations come from `path` when set; otherwise they are generated.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DemoSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generate: Option<GeneratorSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub train_environment: PathBuf,
    #[serde(default)]
    pub test_scenarios: Vec<Scenario>,
    pub demonstrations: DemoSpec,
    #[serde(default = "default_weight_set")]
    pub weight_set: Vec<f64>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub entropy_normalization: EntropyNormalization,
    /// Required when `rabrl-dirichlet` is among the models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dirichlet_alpha: Option<Vec<f64>>,
    #[serde(default = "default_models")]
    pub models: Vec<ModelKind>,
    pub dangerous_feature: FeatureRef,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub baseline: MaxEntFitConfig,
}

fn default_weight_set() -> Vec<f64> {
    DEFAULT_WEIGHT_SET.to_vec()
}

fn default_beta() -> f64 {
    DEFAULT_BETA
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_models() -> Vec<ModelKind> {
    ModelKind::ALL.to_vec()
}

impl ExperimentConfig {
    /// Parses `path` and resolves relative paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.train_environment);
        fix(&mut self.output_dir);
        if let Some(p) = self.demonstrations.path.as_mut() {
            fix(p);
        }
        for s in &mut self.test_scenarios {
            fix(&mut s.environment);
        }
    }

    /// Checks everything that does not require reading other files.
    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::Config("model list is empty".into()));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!("beta must be finite and >= 0, got {}", self.beta)));
        }
        self.selection(self.epsilon)?;
        if self.models.contains(&ModelKind::RabrlDirichlet) && self.dirichlet_alpha.is_none() {
            return Err(Error::Config("rabrl-dirichlet requires dirichlet_alpha".into()));
        }
        if self.demonstrations.path.is_none() && self.demonstrations.generate.is_none() {
            return Err(Error::Config("demonstrations need a path or a generate section".into()));
        }
        let mut names: Vec<&str> = self.test_scenarios.iter().map(|s| s.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("scenario names must be unique".into()));
        }
        if let Some(s) = self.test_scenarios.iter().find(|s| s.routes.is_empty()) {
            return Err(Error::Config(format!("scenario {} has no routes", s.name)));
        }
        Ok(())
    }

    pub fn selection(&self, epsilon: f64) -> Result<SelectionConfig> {
        let cfg = SelectionConfig {
            epsilon,
            normalization: self.entropy_normalization,
        };
        cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn prior_for(&self, model: ModelKind) -> Option<PriorSpec> {
        match model {
            ModelKind::RabrlUniform => Some(PriorSpec::ModifiedUniform),
            ModelKind::RabrlDirichlet => Some(PriorSpec::Dirichlet {
                alpha: self.dirichlet_alpha.clone().unwrap_or_default(),
            }),
            ModelKind::MaxentBaseline => None,
        }
    }

    pub fn scenario(&self, name: &str) -> Result<&Scenario> {
        self.test_scenarios
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::Config(format!("unknown scenario {name:?}")))
    }

    fn out(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }
}

/// Learned state of one model after training.
#[derive(Clone, Debug)]
pub struct ModelResult {
    pub model: ModelKind,
    pub posterior: Option<Posterior>,
    pub marginals: Vec<Marginal>,
    pub entropies: Vec<f64>,
    pub weights: RewardVector,
}

#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub feature_names: Vec<String>,
    pub demos: DemonstrationSet,
    pub epsilon: f64,
    pub models: Vec<ModelResult>,
}

impl TrainOutput {
    pub fn model(&self, kind: ModelKind) -> Option<&ModelResult> {
        self.models.iter().find(|m| m.model == kind)
    }

    pub fn selection(&self) -> WeightsFile {
        WeightsFile {
            epsilon: self.epsilon,
            features: self.feature_names.clone(),
            models: self
                .models
                .iter()
                .map(|m| ModelWeights {
                    model: m.model,
                    weights: m.weights.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelWeights {
    pub model: ModelKind,
    pub weights: RewardVector,
}

/// Contents of `weights.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightsFile {
    pub epsilon: f64,
    pub features: Vec<String>,
    pub models: Vec<ModelWeights>,
}

impl WeightsFile {
    pub fn get(&self, model: ModelKind) -> Option<&RewardVector> {
        self.models.iter().find(|m| m.model == model).map(|m| &m.weights)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMarginals {
    pub model: ModelKind,
    pub marginals: Vec<Marginal>,
    pub entropies: Vec<f64>,
}

/// Loads or generates the training demonstrations.
pub fn load_demos(cfg: &ExperimentConfig, env: &Environment) -> Result<DemonstrationSet> {
    let demos = match (&cfg.demonstrations.path, &cfg.demonstrations.generate) {
        (Some(p), _) => DemonstrationSet::load(p)?,
        (None, Some(g)) => generate(env, g, g.seed)?,
        (None, None) => return Err(Error::Config("no demonstration source".into())),
    };
    demos.validate(env)?;
    Ok(demos)
}

fn generate(env: &Environment, g: &GeneratorSpec, seed: u64) -> Result<DemonstrationSet> {
    generate_demos(env, &g.true_weights, g.beta, g.count, seed, g.start, g.goal)
}

/// Samples demonstrations with the configured generator and `seed`, writing
/// them to the configured demonstration path (or `demos.json` in the output
/// directory). Returns the written path.
pub fn run_demo_gen(cfg: &ExperimentConfig, seed: u64) -> Result<(PathBuf, DemonstrationSet)> {
    let g = cfg
        .demonstrations
        .generate
        .as_ref()
        .ok_or_else(|| Error::Config("demo-gen needs a demonstrations.generate section".into()))?;
    let env = Environment::load(&cfg.train_environment)?;
    let demos = generate(&env, g, seed)?;
    let path = match &cfg.demonstrations.path {
        Some(p) => p.clone(),
        None => {
            create_dir(&cfg.output_dir)?;
            cfg.out("demos.json")
        }
    };
    demos.save(&path)?;
    Ok((path, demos))
}

/// Trains every configured model in memory.
pub fn train(cfg: &ExperimentConfig) -> Result<TrainOutput> {
    cfg.validate()?;
    let env = Environment::load(&cfg.train_environment)?;
    let demos = load_demos(cfg, &env)?;
    let sel = cfg.selection(cfg.epsilon)?;
    let space = RewardSpace::new(cfg.weight_set.clone(), env.feature_dim())
        .map_err(|e| Error::Config(e.to_string()))?;
    let mut models = Vec::with_capacity(cfg.models.len());
    for &model in &cfg.models {
        let result = match cfg.prior_for(model) {
            Some(prior) => {
                prior.validate(env.feature_dim()).map_err(|e| Error::Config(e.to_string()))?;
                let post = compute_posterior(&env, &demos, cfg.beta, &space, &prior)?;
                bayesian_result(model, post, sel)?
            }
            None => {
                let init = vec![0.0; env.feature_dim()];
                let weights = maxent_irl_fit(&env, &demos, cfg.baseline, &init)?;
                ModelResult {
                    model,
                    posterior: None,
                    marginals: Vec::new(),
                    entropies: Vec::new(),
                    weights,
                }
            }
        };
        models.push(result);
    }
    Ok(TrainOutput {
        feature_names: env.feature_names().to_vec(),
        demos,
        epsilon: cfg.epsilon,
        models,
    })
}

/// Marginals, entropies and selected weights of a posterior.
pub fn bayesian_result(model: ModelKind, post: Posterior, sel: SelectionConfig) -> Result<ModelResult> {
    let marginals = post.marginals();
    let dim = post.space().dim();
    let entropies = marginals
        .iter()
        .map(|m| normalized_entropy_with(m, sel.normalization, dim))
        .collect();
    let weights = select_weights(&marginals, &sel, post.space().weight_set())?;
    Ok(ModelResult {
        model,
        posterior: Some(post),
        marginals,
        entropies,
        weights,
    })
}

/// Trains and writes every training artifact.
pub fn run_train(cfg: &ExperimentConfig) -> Result<TrainOutput> {
    let out = train(cfg)?;
    create_dir(&cfg.output_dir)?;
    write(&cfg.out("demos.json"), &out.demos.to_json())?;
    let mut marginals = Vec::new();
    for m in &out.models {
        match &m.posterior {
            Some(post) => {
                let path = cfg.out(&format!("posterior-{}.json", m.model));
                write(&path, &serde_json::to_string(&post.to_export())?)?;
                marginals.push(ModelMarginals {
                    model: m.model,
                    marginals: m.marginals.clone(),
                    entropies: m.entropies.clone(),
                });
            }
            None => write(&cfg.out("baseline-weights.json"), &serde_json::to_string(&m.weights)?)?,
        }
    }
    write(&cfg.out("marginals.json"), &serde_json::to_string_pretty(&marginals)?)?;
    write(&cfg.out("entropy.csv"), &entropy_csv(&out.feature_names, &marginals))?;
    write_weights(cfg, &out.selection())?;
    Ok(out)
}

fn write_weights(cfg: &ExperimentConfig, w: &WeightsFile) -> Result<()> {
    write(&cfg.out("weights.json"), &serde_json::to_string_pretty(w)?)?;
    write(&cfg.out("weights.csv"), &weights_csv(w))
}

/// Re-selects weights from the stored posteriors at a new `epsilon` and
/// rewrites `weights.json`. The baseline weights are carried over.
pub fn run_select(cfg: &ExperimentConfig, epsilon: f64) -> Result<WeightsFile> {
    let sel = cfg.selection(epsilon)?;
    let previous = load_weights(cfg)?;
    let mut models = Vec::new();
    for &model in &cfg.models {
        let weights = if model.is_bayesian() {
            let post = load_posterior(cfg, model)?;
            select_weights(&post.marginals(), &sel, post.space().weight_set())?
        } else {
            previous
                .get(model)
                .cloned()
                .ok_or_else(|| missing_artifact(&cfg.out("weights.json")))?
        };
        models.push(ModelWeights { model, weights });
    }
    let w = WeightsFile {
        epsilon,
        features: previous.features,
        models,
    };
    write_weights(cfg, &w)?;
    Ok(w)
}

pub fn load_posterior(cfg: &ExperimentConfig, model: ModelKind) -> Result<Posterior> {
    let path = cfg.out(&format!("posterior-{model}.json"));
    let text = read_artifact(&path)?;
    Posterior::from_export(serde_json::from_str(&text)?)
}

pub fn load_weights(cfg: &ExperimentConfig) -> Result<WeightsFile> {
    let text = read_artifact(&cfg.out("weights.json"))?;
    Ok(serde_json::from_str(&text)?)
}

fn read_artifact(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(missing_artifact(path));
    }
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn missing_artifact(path: &Path) -> Error {
    Error::Config(format!("missing trained artifact {}; run train first", path.display()))
}

/// Plans every route of `scenario` for every model in `weights`, in config
/// model order. Returned records are risk-assessed.
pub fn plan_scenario(
    cfg: &ExperimentConfig,
    scenario: &Scenario,
    weights: &WeightsFile,
) -> Result<Vec<PlanRecord>> {
    let env = Environment::load(&scenario.environment)?;
    let risk = RiskSpec {
        dangerous_feature: cfg.dangerous_feature.resolve(&env)?,
    };
    if env.feature_names() != weights.features.as_slice() {
        return Err(Error::Config(format!(
            "scenario {} features {:?} differ from training features {:?}",
            scenario.name,
            env.feature_names(),
            weights.features
        )));
    }
    let mut records = Vec::new();
    for &model in &cfg.models {
        let w = weights
            .get(model)
            .ok_or_else(|| missing_artifact(&cfg.out("weights.json")))?;
        let costmap = build_costmap(&env, w)?;
        for (run, route) in scenario.routes.iter().enumerate() {
            let p = plan(&costmap, route.start, route.goal)?.assess(&env, risk);
            records.push(PlanRecord {
                scenario: scenario.name.clone(),
                model: model.name().to_string(),
                run,
                plan: p,
            });
        }
    }
    Ok(records)
}

/// Plans one scenario and writes its trajectories and costmaps.
pub fn run_plan(cfg: &ExperimentConfig, scenario: &str) -> Result<Vec<PlanRecord>> {
    let weights = load_weights(cfg)?;
    let s = cfg.scenario(scenario)?;
    let records = plan_scenario(cfg, s, &weights)?;
    write_plan_artifacts(cfg, s, &weights, &records)?;
    Ok(records)
}

fn write_plan_artifacts(
    cfg: &ExperimentConfig,
    scenario: &Scenario,
    weights: &WeightsFile,
    records: &[PlanRecord],
) -> Result<()> {
    let traj_dir = cfg.out("trajectories");
    let cost_dir = cfg.out("costmaps");
    create_dir(&traj_dir)?;
    create_dir(&cost_dir)?;
    let env = Environment::load(&scenario.environment)?;
    for &model in &cfg.models {
        if let Some(w) = weights.get(model) {
            build_costmap(&env, w)?.save(&cost_dir, &format!("{}-{model}", scenario.name))?;
        }
    }
    for r in records {
        let path = traj_dir.join(format!("{}-{}-{}.json", r.scenario, r.model, r.run));
        write(&path, &serde_json::to_string(&r.plan)?)?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub epsilon: f64,
    pub summary: Vec<SummaryRow>,
    #[serde(skip)]
    pub records: Vec<PlanRecord>,
}

/// Plans every scenario and writes `results.csv`, `summary.json`,
/// trajectories, costmaps and `scatter.svg`.
pub fn run_evaluate(cfg: &ExperimentConfig) -> Result<EvaluationReport> {
    if cfg.test_scenarios.is_empty() {
        return Err(Error::Config("no test scenarios configured".into()));
    }
    let weights = load_weights(cfg)?;
    let mut records = Vec::new();
    for s in &cfg.test_scenarios {
        let rs = plan_scenario(cfg, s, &weights)?;
        write_plan_artifacts(cfg, s, &weights, &rs)?;
        records.extend(rs);
    }
    let report = EvaluationReport {
        epsilon: weights.epsilon,
        summary: evaluate(&records),
        records,
    };
    write(&cfg.out("results.csv"), &results_csv(&report.records))?;
    write(&cfg.out("summary.json"), &serde_json::to_string_pretty(&report)?)?;
    write(&cfg.out("scatter.svg"), &scatter_svg(&report.records))?;
    Ok(report)
}

pub fn results_csv(records: &[PlanRecord]) -> String {
    let mut s = String::from("scenario,model,run,risk,path_length\n");
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{:.6},{}",
            r.scenario,
            r.model,
            r.run,
            r.plan.risk.unwrap_or(0.0),
            r.plan.path_length
        );
    }
    s
}

pub fn entropy_csv(features: &[String], rows: &[ModelMarginals]) -> String {
    let mut s = format!("model,{}\n", features.join(","));
    for r in rows {
        let cells: Vec<String> = r.entropies.iter().map(|h| format!("{h:.6}")).collect();
        let _ = writeln!(s, "{},{}", r.model, cells.join(","));
    }
    s
}

pub fn weights_csv(w: &WeightsFile) -> String {
    let mut s = format!("model,{}\n", w.features.join(","));
    for m in &w.models {
        let cells: Vec<String> = m.weights.iter().map(|x| format!("{x:.6}")).collect();
        let _ = writeln!(s, "{},{}", m.model, cells.join(","));
    }
    s
}

/// Minimal static scatter plot of risk (y) against path length (x).
pub fn scatter_svg(records: &[PlanRecord]) -> String {
    const W: f64 = 480.0;
    const H: f64 = 320.0;
    const M: f64 = 48.0;
    const COLORS: [&str; 6] = ["#0072b2", "#e69f00", "#009e73", "#cc79a7", "#56b4e9", "#d55e00"];
    let max_len = records.iter().map(|r| r.plan.path_length).max().unwrap_or(1).max(1) as f64;
    let mut models: Vec<&str> = Vec::new();
    for r in records {
        if !models.contains(&r.model.as_str()) {
            models.push(&r.model);
        }
    }
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    );
    let _ = writeln!(
        s,
        "<line x1=\"{M}\" y1=\"{y}\" x2=\"{x}\" y2=\"{y}\" stroke=\"black\"/><line x1=\"{M}\" y1=\"{M}\" x2=\"{M}\" y2=\"{y}\" stroke=\"black\"/>",
        y = H - M,
        x = W - M
    );
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" font-size=\"12\">path length</text>", W / 2.0 - 30.0, H - 12.0);
    let _ = writeln!(s, "<text x=\"8\" y=\"{}\" font-size=\"12\">risk</text>", M - 8.0);
    for r in records {
        let k = models.iter().position(|m| *m == r.model).unwrap_or(0);
        let x = M + (W - 2.0 * M) * r.plan.path_length as f64 / max_len;
        let y = H - M - (H - 2.0 * M) * r.plan.risk.unwrap_or(0.0);
        let _ = writeln!(
            s,
            "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"4\" fill=\"{}\"><title>{} {} run {}</title></circle>",
            COLORS[k % COLORS.len()],
            r.scenario,
            r.model,
            r.run
        );
    }
    for (k, m) in models.iter().enumerate() {
        let y = 16.0 + 14.0 * k as f64;
        let _ = writeln!(
            s,
            "<circle cx=\"{}\" cy=\"{y}\" r=\"4\" fill=\"{}\"/><text x=\"{}\" y=\"{}\" font-size=\"11\">{m}</text>",
            W - 150.0,
            COLORS[k % COLORS.len()],
            W - 140.0,
            y + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

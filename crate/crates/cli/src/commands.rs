use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use social_sampling::evaluation::{
    binned_interaction_summary, cross_validate, default_performance_bins, default_popularity_bins,
    ols_interaction_regression, CvKind, CvScheme,
};
use social_sampling::inference::{
    fit_with, gamma_profile, predict_panel, rank_traders, skill_credible_interval, FitOptions,
};
use social_sampling::models::{ModelFamily, ModelSpec};
use social_sampling::pipeline::{
    daily_profits, generate_synthetic_market, ingest, parse_trades_path, write_trades_path, IngestOptions,
    PerformanceMetricSpec, SyntheticMarketConfig,
};
use social_sampling::simulator::{run_sweep, SweepGrid};
use social_sampling::PanelDataset;

use crate::config::{
    digest, load_config, resolve_input, versioned, EvaluateConfig, FitConfig, IngestConfig, InputDigest, SynthConfig,
};
use crate::error::{CliError, CliResult};
use crate::{EvaluateArgs, FitArgs, IngestArgs, SimulateArgs, SynthArgs};

/// What a command hands back for its manifest.
pub struct RunRecord {
    pub config: Value,
    pub seed: u64,
    pub inputs: Vec<InputDigest>,
    pub diagnostics: Option<usize>,
}

/// Output directory that remembers every file written into it.
pub struct OutDir {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.push(p.clone());
        p
    }

    fn writer(&mut self, name: &str) -> CliResult<BufWriter<File>> {
        let p = self.path(name);
        let f = File::create(&p).map_err(|e| CliError::io(&p, e))?;
        Ok(BufWriter::new(f))
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut w = self.writer(name)?;
        serde_json::to_writer_pretty(&mut w, value).map_err(social_sampling::Error::from)?;
        writeln!(w)
            .and_then(|_| w.flush())
            .map_err(|e| CliError::io(self.dir.join(name), e))
    }

    pub fn into_written(self) -> Vec<PathBuf> {
        self.written
    }
}

fn require(path: Option<PathBuf>, what: &str) -> CliResult<PathBuf> {
    let p = path.ok_or_else(|| CliError::config(format!("no {what} given (use the flag or the config field)")))?;
    resolve_input(&p)
}

pub fn simulate(
    args: &SimulateArgs,
    config: Option<&Path>,
    seed: Option<u64>,
    out: &mut OutDir,
) -> CliResult<RunRecord> {
    let Some(path) = config else {
        return Err(CliError::config("simulate needs --config with a sweep grid"));
    };
    let mut grid: SweepGrid = load_config(Some(path), "simulate")?;
    if let Some(s) = seed {
        grid.seed = s;
    }
    if let Some(r) = args.repetitions {
        grid.repetitions = r;
    }
    if let Some(m) = args.max_cells {
        grid.max_cells = m;
    }
    let table = run_sweep(&grid)?;
    let csv_path = out.path("sweep.csv");
    let f = File::create(&csv_path).map_err(|e| CliError::io(&csv_path, e))?;
    table.write_csv(BufWriter::new(f))?;
    out.json("sweep.json", &table)?;
    Ok(RunRecord {
        config: versioned(&grid)?,
        seed: grid.seed,
        inputs: vec![],
        diagnostics: None,
    })
}

pub fn fit(args: &FitArgs, config: Option<&Path>, seed: Option<u64>, out: &mut OutDir) -> CliResult<RunRecord> {
    let mut cfg: FitConfig = load_config(config, "fit")?;
    if let Some(p) = &args.panel {
        cfg.panel = Some(p.clone());
    }
    if let Some(f) = &args.family {
        cfg.family = f.parse()?;
    }
    if let Some(g) = args.gamma {
        cfg.gamma = g;
    }
    if let Some(grid) = &args.gamma_profile {
        cfg.gamma_profile = grid.clone();
    }
    if args.skill_intervals {
        cfg.skill_intervals = true;
    }
    if let Some(t) = &args.trades {
        cfg.trades = Some(t.clone());
    }
    if let Some(l) = args.skill_level {
        cfg.skill_level = l;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let panel_path = require(cfg.panel.take(), "panel file")?;
    cfg.panel = Some(panel_path.clone());
    let mut inputs = vec![digest(&panel_path)?];
    let panel = PanelDataset::read_csv_path(&panel_path)?;

    let options = FitOptions {
        gamma: cfg.gamma,
        ..FitOptions::default()
    };
    let result = fit_with(cfg.family, &panel, &options)?;
    out.json("fit.json", &result)?;

    if !cfg.gamma_profile.is_empty() {
        let profile = gamma_profile(&panel, &cfg.gamma_profile)?;
        let p = out.path("gamma_profile.csv");
        let mut w = csv::Writer::from_path(&p).map_err(social_sampling::Error::from)?;
        w.write_record(["gamma", "log_likelihood", "eta", "converged", "error"])
            .map_err(social_sampling::Error::from)?;
        for pt in &profile {
            w.write_record([
                pt.gamma.to_string(),
                pt.log_likelihood.map(|v| v.to_string()).unwrap_or_default(),
                pt.eta.map(|v| v.to_string()).unwrap_or_default(),
                pt.converged.to_string(),
                pt.error.clone().unwrap_or_default(),
            ])
            .map_err(social_sampling::Error::from)?;
        }
        w.flush().map_err(|e| CliError::io(&p, e))?;
    }

    if cfg.skill_intervals {
        let trades_path = require(cfg.trades.take(), "trade log for --skill-intervals (use --trades)")?;
        cfg.trades = Some(trades_path.clone());
        inputs.push(digest(&trades_path)?);
        let parsed = parse_trades_path(&trades_path)?;
        let ranking = rank_traders(&daily_profits(&parsed.records));
        let p = out.path("skill_intervals.csv");
        let mut w = csv::Writer::from_path(&p).map_err(social_sampling::Error::from)?;
        w.write_record([
            "rank",
            "user_id",
            "score",
            "positive_days",
            "negative_days",
            "lower",
            "upper",
        ])
        .map_err(social_sampling::Error::from)?;
        for (i, t) in ranking.iter().enumerate() {
            let ci = skill_credible_interval(t.positive_days, t.negative_days, cfg.skill_level)?;
            w.write_record([
                (i + 1).to_string(),
                t.user_id.to_string(),
                t.score.to_string(),
                t.positive_days.to_string(),
                t.negative_days.to_string(),
                ci.lower.to_string(),
                ci.upper.to_string(),
            ])
            .map_err(social_sampling::Error::from)?;
        }
        w.flush().map_err(|e| CliError::io(&p, e))?;
    }

    Ok(RunRecord {
        config: versioned(&cfg)?,
        seed: cfg.seed,
        inputs,
        diagnostics: None,
    })
}

/// Accepts the full scheme names and the short forms `by_user`, `by_day`
/// and `temporal`.
pub fn parse_scheme(s: &str) -> CliResult<CvKind> {
    Ok(match s {
        "by_user" => CvKind::ByUser10fold,
        "by_day" => CvKind::ByDay10fold,
        "temporal" => CvKind::TemporalLastFraction,
        other => other.parse()?,
    })
}

#[derive(Serialize)]
struct RegressionOutput {
    regression: Option<social_sampling::evaluation::RegressionResult>,
    error: Option<String>,
}

pub fn evaluate(
    args: &EvaluateArgs,
    config: Option<&Path>,
    seed: Option<u64>,
    out: &mut OutDir,
) -> CliResult<RunRecord> {
    let mut cfg: EvaluateConfig = load_config(config, "evaluate")?;
    if let Some(p) = &args.panel {
        cfg.panel = Some(p.clone());
    }
    if let Some(f) = &args.families {
        cfg.families = f.iter().map(|s| s.parse::<ModelFamily>()).collect::<Result<_, _>>()?;
    }
    if let Some(s) = &args.scheme {
        cfg.scheme = parse_scheme(s)?;
    }
    if let Some(f) = args.fraction {
        cfg.fraction = f;
    }
    if let Some(k) = args.folds {
        cfg.folds = k;
    }
    if let Some(b) = &args.bins {
        cfg.bins = b.clone();
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if cfg.bins != "default" {
        return Err(CliError::config(format!(
            "unknown bin set {:?}; only \"default\" is available",
            cfg.bins
        )));
    }
    if cfg.families.is_empty() {
        return Err(CliError::config("no model families to evaluate"));
    }
    let panel_path = require(cfg.panel.take(), "panel file")?;
    cfg.panel = Some(panel_path.clone());
    let inputs = vec![digest(&panel_path)?];
    let panel = PanelDataset::read_csv_path(&panel_path)?;

    let scheme = CvScheme {
        kind: cfg.scheme,
        fraction: cfg.fraction,
        folds: cfg.folds,
        seed: cfg.seed,
    };
    let report = cross_validate(&cfg.families, &panel, &scheme)?;
    let p = out.path("report.csv");
    let f = File::create(&p).map_err(|e| CliError::io(&p, e))?;
    report.write_csv(BufWriter::new(f))?;
    out.json("report.json", &report)?;

    // Predicted changes come from the canonical model fitted on the whole panel.
    let predictions = fit_with(ModelFamily::SocialSampling, &panel, &FitOptions::default())
        .and_then(|fit| predict_panel(&fit.model, &panel))
        .ok();
    let binned = binned_interaction_summary(
        &panel,
        predictions.as_deref(),
        &default_popularity_bins(),
        &default_performance_bins(),
    )?;
    let p = out.path("binned.csv");
    let f = File::create(&p).map_err(|e| CliError::io(&p, e))?;
    binned.write_csv(BufWriter::new(f))?;

    let regression = match ols_interaction_regression(&panel) {
        Ok(r) => RegressionOutput {
            regression: Some(r),
            error: None,
        },
        Err(e) => RegressionOutput {
            regression: None,
            error: Some(e.to_string()),
        },
    };
    out.json("regression.json", &regression)?;

    Ok(RunRecord {
        config: versioned(&cfg)?,
        seed: cfg.seed,
        inputs,
        diagnostics: None,
    })
}

pub fn synth(args: &SynthArgs, config: Option<&Path>, seed: Option<u64>, out: &mut OutDir) -> CliResult<RunRecord> {
    let mut cfg: SynthConfig = load_config(config, "synth")?;
    if let Some(v) = args.users {
        cfg.n_users = Some(v);
    }
    if let Some(v) = args.days {
        cfg.n_days = Some(v);
    }
    if let Some(v) = args.decisions_per_day {
        cfg.decisions_per_day = Some(v);
    }
    if let Some(v) = args.eta {
        cfg.generator_model = Some(ModelSpec::SocialSampling {
            eta: v,
            gamma: args.gamma.unwrap_or(1.0),
        });
    } else if let Some(g) = args.gamma {
        cfg.generator_model = Some(match cfg.generator_model {
            Some(ModelSpec::SocialSampling { eta, .. }) => ModelSpec::SocialSampling { eta, gamma: g },
            None => ModelSpec::SocialSampling { eta: 0.8, gamma: g },
            Some(_) => return Err(CliError::config("--gamma only applies to a social-sampling generator")),
        });
    }
    if let Some(v) = args.unfollow_rate {
        cfg.unfollow_rate = Some(v);
    }
    if let Some(s) = seed {
        cfg.seed = Some(s);
    }
    let mut market = SyntheticMarketConfig::new(
        cfg.n_users.unwrap_or(50),
        cfg.n_days.unwrap_or(100),
        cfg.decisions_per_day.unwrap_or(1000),
        cfg.generator_model.unwrap_or(ModelSpec::social_sampling(0.8)),
        cfg.seed.unwrap_or(0),
    );
    if let Some(v) = cfg.trader_skill {
        market.trader_skill = v;
    }
    if let Some(v) = cfg.unfollow_rate {
        market.unfollow_rate = v;
    }
    if let Some(v) = cfg.initial_popularity_max {
        market.initial_popularity_max = v;
    }
    if let Some(v) = cfg.window_days {
        market.window_days = v;
    }
    if let Some(v) = cfg.start_date {
        market.start_date = v;
    }
    let generated = generate_synthetic_market(&market)?;
    let p = out.path("trades.csv");
    write_trades_path(&generated.trades, &p)?;
    let p = out.path("panel.csv");
    generated.panel.write_csv_path(&p)?;
    out.json("truth.json", &generated.truth)?;

    let resolved = SynthConfig {
        n_users: Some(market.n_users),
        n_days: Some(market.n_days),
        decisions_per_day: Some(market.decisions_per_day),
        generator_model: Some(market.generator_model),
        trader_skill: Some(market.trader_skill),
        unfollow_rate: Some(market.unfollow_rate),
        initial_popularity_max: Some(market.initial_popularity_max),
        window_days: Some(market.window_days),
        start_date: Some(market.start_date),
        seed: Some(market.seed),
    };
    Ok(RunRecord {
        config: versioned(&resolved)?,
        seed: market.seed,
        inputs: vec![],
        diagnostics: None,
    })
}

#[derive(Serialize)]
struct IngestSummary {
    total_rows: usize,
    records: usize,
    quarantined: usize,
    diagnostics: usize,
    mirror_count: usize,
    unresolved_mirrors: Vec<u64>,
    imputed_ids: Vec<u64>,
    unimputable: Vec<social_sampling::pipeline::UnimputableParent>,
    panel_days: usize,
    panel_rows: usize,
}

pub fn ingest_cmd(args: &IngestArgs, config: Option<&Path>, out: &mut OutDir) -> CliResult<RunRecord> {
    let mut cfg: IngestConfig = load_config(config, "ingest")?;
    if let Some(p) = &args.trades {
        cfg.trades = Some(p.clone());
    }
    if let Some(m) = &args.metric {
        cfg.metric = m.parse()?;
    }
    if let Some(w) = args.window {
        cfg.window_days = w;
    }
    if args.impute {
        cfg.impute = true;
    }
    let trades_path = require(cfg.trades.take(), "trade log")?;
    cfg.trades = Some(trades_path.clone());
    let inputs = vec![digest(&trades_path)?];
    let parsed = parse_trades_path(&trades_path)?;

    let metric = PerformanceMetricSpec {
        kind: cfg.metric,
        window_days: cfg.window_days,
        closed_trades_only: cfg.closed_trades_only,
        amount_source: cfg.amount_source,
    };
    metric.validate()?;
    let result = ingest(
        &parsed.records,
        &IngestOptions {
            metric,
            impute: cfg.impute,
        },
    )?;
    let p = out.path("panel.csv");
    result.panel.write_csv_path(&p)?;

    let p = out.path("diagnostics.csv");
    let mut w = csv::Writer::from_path(&p).map_err(social_sampling::Error::from)?;
    w.write_record(["line", "column", "message"])
        .map_err(social_sampling::Error::from)?;
    for d in &parsed.diagnostics {
        w.write_record([
            d.line.to_string(),
            d.column.clone().unwrap_or_default(),
            d.message.clone(),
        ])
        .map_err(social_sampling::Error::from)?;
    }
    w.flush().map_err(|e| CliError::io(&p, e))?;

    out.json(
        "ingest.json",
        &IngestSummary {
            total_rows: parsed.total_rows,
            records: parsed.records.len(),
            quarantined: parsed.quarantined.len(),
            diagnostics: parsed.diagnostics.len(),
            mirror_count: result.mirror_count,
            unresolved_mirrors: result.unresolved_mirrors,
            imputed_ids: result.imputed_ids,
            unimputable: result.unimputable,
            panel_days: result.panel.day_count(),
            panel_rows: result.panel.scored_rows(),
        },
    )?;
    Ok(RunRecord {
        config: versioned(&cfg)?,
        seed: 0,
        inputs,
        diagnostics: Some(parsed.diagnostics.len()),
    })
}

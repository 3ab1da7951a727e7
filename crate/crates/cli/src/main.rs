//! Command-line tool for spline-mixture density and quantile regression:
//! fitting (MLE/MAP/MCMC), prediction, local-effect and importance tables,
//! goodness-of-fit, chain traces, cross-validation, fold generation and the
//! benchmark data simulator. Plot-style commands emit plot-ready CSV tables.
//!
//! Exit codes: 0 success, 2 validation error, 3 capability error,
//! 4 numerical failure.

mod config;
mod csvio;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ndarray::Array2;

use splinemix_core::basis::SplineBasis;
use splinemix_core::error::{Error, Result};
use splinemix_core::interpret::{self, AleEffects, ViKind};
use splinemix_core::model::{
    FittedModel, Method, Normalization, PredictKind, TrainingLog,
};
use splinemix_core::network::{Dataset, NetworkShape};
use splinemix_core::persist;
use splinemix_core::sampler::run_chain;
use splinemix_core::sim;
use splinemix_core::trainer::{self, create_folds, FoldAssignment};

use config::RunConfig;
use csvio::{fmt, read_covariates, read_numeric_csv, read_xy, TableWriter};

#[derive(Parser)]
#[command(
    name = "splinemix",
    version,
    about = "Semi-parametric density and quantile regression with spline mixtures"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct ModelData {
    /// Fitted model file.
    #[arg(long)]
    model: PathBuf,
    /// CSV with covariate columns (a response column is used when needed
    /// and ignored otherwise).
    #[arg(long)]
    data: PathBuf,
    /// Response column name in the data file.
    #[arg(long, default_value = "Y")]
    response: String,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit a model from a CSV file and write a model file.
    Fit {
        /// TOML run configuration; defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        /// Output model file.
        #[arg(long)]
        out: PathBuf,
        /// Override the configured method (MLE, MAP or MCMC).
        #[arg(long)]
        method: Option<String>,
        /// Override the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Also print the per-layer architecture table.
        #[arg(long)]
        show_model: bool,
        /// Suppress progress output.
        #[arg(long)]
        quiet: bool,
    },
    /// Estimated PDF/CDF/QF curves as a long-format table.
    Predict {
        #[command(flatten)]
        io: ModelData,
        /// PDF, CDF or QF.
        #[arg(long)]
        kind: String,
        /// Comma-separated abscissae (response values for PDF/CDF, levels
        /// in (0,1) for QF). Defaults: 101 response points or 99 levels.
        #[arg(long)]
        grid: Option<String>,
        /// Credible level for pointwise bands (MCMC models only).
        #[arg(long)]
        ci_level: Option<f64>,
        /// Emit every posterior sample curve (MCMC models only).
        #[arg(long)]
        get_all: bool,
    },
    /// Quantile accumulated local effects of one covariate or a pair.
    Qale {
        #[command(flatten)]
        io: ModelData,
        /// 1-based covariate index.
        #[arg(long)]
        var: usize,
        /// Second 1-based index for an interaction surface.
        #[arg(long)]
        var2: Option<usize>,
        /// Comma-separated quantile levels.
        #[arg(long, default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
        tau: String,
        /// Maximum number of bins.
        #[arg(long, default_value_t = 40)]
        bins: usize,
        /// Credible level for pointwise bands (main effects, MCMC only).
        #[arg(long)]
        ci_level: Option<f64>,
        /// Emit per-sample curves (main effects, MCMC only).
        #[arg(long)]
        get_all: bool,
    },
    /// ALE-induced quantile variable importance.
    Qvi {
        #[command(flatten)]
        io: ModelData,
        /// Comma-separated 1-based covariate indices; all when omitted.
        #[arg(long)]
        vars: Option<String>,
        #[arg(long, default_value = "0.1,0.5,0.9")]
        tau: String,
        #[arg(long, default_value_t = 40)]
        bins: usize,
        /// Credible level for error bars (MCMC models only).
        #[arg(long)]
        ci_level: Option<f64>,
    },
    /// PIT goodness-of-fit Q-Q table.
    Gof {
        #[command(flatten)]
        io: ModelData,
        /// Emit one Q-Q series per posterior sample (MCMC models only).
        #[arg(long)]
        get_all: bool,
    },
    /// Per-iteration trace of the log-likelihood or of an estimate
    /// (MCMC models only).
    Trace {
        /// Fitted model file.
        #[arg(long)]
        model: PathBuf,
        /// loglik, PDF, CDF or QF.
        #[arg(long, default_value = "loglik")]
        target: String,
        /// Comma-separated covariate vector for PDF/CDF/QF targets.
        #[arg(long)]
        x: Option<String>,
        /// Quantile level for the QF target.
        #[arg(long)]
        tau: Option<f64>,
        /// Response value for PDF/CDF targets.
        #[arg(long)]
        y: Option<f64>,
        /// Iteration window "start,end" (1-based, inclusive).
        #[arg(long)]
        window: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// K-fold cross-validation error for MLE/MAP configurations.
    Cv {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 5)]
        nfold: usize,
        /// Pre-computed folds CSV (columns fold,row; 1-based).
        #[arg(long)]
        folds: Option<PathBuf>,
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate pre-computed CV folds.
    Folds {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        nfold: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a benchmark dataset (columns X1,X2,X3,Y).
    Simulate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Fit { config, data, out, method, seed, show_model, quiet } => {
            cmd_fit(config.as_deref(), &data, &out, method, seed, show_model, quiet)
        }
        Cmd::Predict { io, kind, grid, ci_level, get_all } => {
            cmd_predict(&io, &kind, grid.as_deref(), ci_level, get_all)
        }
        Cmd::Qale { io, var, var2, tau, bins, ci_level, get_all } => {
            cmd_qale(&io, var, var2, &tau, bins, ci_level, get_all)
        }
        Cmd::Qvi { io, vars, tau, bins, ci_level } => cmd_qvi(&io, vars.as_deref(), &tau, bins, ci_level),
        Cmd::Gof { io, get_all } => cmd_gof(&io, get_all),
        Cmd::Trace { model, target, x, tau, y, window, out } => {
            cmd_trace(&model, &target, x.as_deref(), tau, y, window.as_deref(), out.as_deref())
        }
        Cmd::Cv { config, data, nfold, folds, method, seed, out } => {
            cmd_cv(config.as_deref(), &data, nfold, folds.as_deref(), method, seed, out.as_deref())
        }
        Cmd::Folds { n, nfold, seed, out } => cmd_folds(n, nfold, seed, out.as_deref()),
        Cmd::Simulate { n, seed, out } => cmd_simulate(n, seed, out.as_deref()),
    }
}

fn parse_f64_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("bad {what} entry '{t}'")))
        })
        .collect()
}

fn parse_usize_list(s: &str, what: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::invalid(format!("bad {what} entry '{t}'")))
        })
        .collect()
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

/// 1-based CLI covariate index to 0-based, with bounds check.
fn covariate_index(var: usize, p: usize) -> Result<usize> {
    if var == 0 || var > p {
        return Err(Error::invalid(format!(
            "covariate index {var} out of range (1..={p})"
        )));
    }
    Ok(var - 1)
}

fn cmd_fit(
    config: Option<&Path>,
    data_path: &Path,
    out: &Path,
    method_override: Option<String>,
    seed_override: Option<u64>,
    show_model: bool,
    quiet: bool,
) -> Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(m) = method_override {
        cfg.method = m;
    }
    if let Some(s) = seed_override {
        cfg.seed = Some(s);
    }
    let method = cfg.method()?;
    let (x_raw, y_raw, _names) = read_xy(data_path, &cfg.response)?;

    let (data, record) = if cfg.normalize {
        let y_slice: Vec<f64> = y_raw.iter().copied().collect();
        let record = Normalization::fit(&x_raw, &y_slice)?;
        let mut x = Array2::zeros(x_raw.dim());
        for (i, row) in x_raw.rows().into_iter().enumerate() {
            let (xi, _) = record.x_to_internal(row.as_slice().expect("contiguous"));
            for (j, v) in xi.into_iter().enumerate() {
                x[[i, j]] = v;
            }
        }
        let y = y_raw.mapv(|v| record.y_to_internal(v).0);
        (Dataset::new(x, y)?, record)
    } else {
        (Dataset::new(x_raw.clone(), y_raw.clone())?, Normalization::identity(x_raw.ncols()))
    };

    let basis = SplineBasis::new(cfg.k)?;
    let shape = NetworkShape::new(data.p(), cfg.hidden.clone(), cfg.k, cfg.activation()?)?;
    let verbose = !quiet;

    let mut model = match method {
        Method::Mle => trainer::fit_mle(&data, &shape, &basis, &cfg.train_control(verbose))?,
        Method::Map => trainer::fit_map(
            &data,
            &shape,
            &basis,
            &cfg.prior_config()?,
            &cfg.train_control(verbose),
        )?,
        Method::Mcmc => run_chain(&data, &shape, &basis, &cfg.prior_config()?, &cfg.mcmc_control(verbose)?)?,
    };
    model.normalization = record;
    persist::save(&model, out)?;

    print_summary(&model, &x_raw, &y_raw.to_vec(), show_model)?;
    Ok(())
}

fn print_summary(model: &FittedModel, x: &Array2<f64>, y: &[f64], show_model: bool) -> Result<()> {
    match model.method {
        Method::Mcmc => {
            let prior = model.prior.map(|p| format!("{:?}", p.variant)).unwrap_or_default();
            println!("Fitted with MCMC ({prior} prior)");
        }
        m => println!("Fitted with {m}"),
    }
    println!();
    if show_model {
        println!("Model specification:");
        println!("  {:>6} {:>6}  {}", "Input", "Output", "Activation");
        let mut widths = vec![model.shape.input];
        widths.extend_from_slice(&model.shape.hidden);
        widths.push(model.shape.output);
        for l in 0..widths.len() - 1 {
            let act = if l + 2 == widths.len() {
                "softmax".to_string()
            } else {
                format!("{:?}", model.shape.activation).to_lowercase()
            };
            println!("  {:>6} {:>6}  {}", widths[l], widths[l + 1], act);
        }
        println!();
    }
    match &model.log {
        TrainingLog::Optimizer(log) => {
            println!("Learning rate: {}", log.lr);
            println!("Batch size: {}", log.batch_size);
            println!();
            println!(
                "Loss:\n  train = {:.4},  validation = {:.4}",
                log.train_loss[log.best_epoch], log.best_valid_loss
            );
            println!();
            println!("Elapsed time: {:.2} minutes", log.elapsed_secs / 60.0);
        }
        TrainingLog::Sampler(log) => {
            println!("MCMC diagnostics:");
            println!(
                "  Final acceptance ratio is {:.2} and target is {}",
                log.mean_accept, log.target_accept
            );
            println!("  Divergences: {}", log.divergences);
            for w in &log.warnings {
                println!("  Warning: {w}");
            }
            println!();
            let ll = interpret::pointwise_loglik(model, x, y)?;
            let loo = interpret::loo_is(&ll)?;
            let waic = interpret::waic(&ll)?;
            println!("Expected log pointwise predictive density (elpd) estimates:");
            println!("  elpd.LOO = {:.4},  elpd.WAIC = {:.4}", loo.elpd, waic.elpd);
            println!();
            println!("Elapsed time: {:.2} minutes", log.elapsed_secs / 60.0);
        }
    }
    Ok(())
}

fn cmd_predict(
    io: &ModelData,
    kind: &str,
    grid: Option<&str>,
    ci_level: Option<f64>,
    get_all: bool,
) -> Result<()> {
    let model = persist::load(&io.model)?;
    let (x, _names) = read_covariates(&io.data, &io.response)?;
    if x.ncols() != model.shape.input {
        return Err(Error::invalid(format!(
            "data has {} covariates, model expects {}",
            x.ncols(),
            model.shape.input
        )));
    }
    let kind: PredictKind = kind.parse()?;
    let grid_vals = grid.map(|g| parse_f64_list(g, "grid")).transpose()?;
    let res = model.predict_curves(&x, kind, grid_vals.as_deref(), ci_level, get_all)?;
    if res.clamped {
        eprintln!("warning: some query points were outside the observed ranges and were clamped");
    }
    let abscissa = match kind {
        PredictKind::Qf => "tau",
        _ => "y",
    };
    if get_all {
        let samples = res.samples.as_ref().expect("get_all requested");
        let mut t = TableWriter::new(&["obs", abscissa, "sample", "value"]);
        for i in 0..x.nrows() {
            for (j, &g) in res.grid.iter().enumerate() {
                for (s, m) in samples.iter().enumerate() {
                    t.row(&[
                        (i + 1).to_string(),
                        fmt(g),
                        (s + 1).to_string(),
                        fmt(m[[i, j]]),
                    ]);
                }
            }
        }
        t.finish(io.out.as_deref())
    } else if res.lower.is_some() {
        let (lo, up) = (res.lower.as_ref().unwrap(), res.upper.as_ref().unwrap());
        let mut t = TableWriter::new(&["obs", abscissa, "mean", "lower", "upper"]);
        for i in 0..x.nrows() {
            for (j, &g) in res.grid.iter().enumerate() {
                t.row(&[
                    (i + 1).to_string(),
                    fmt(g),
                    fmt(res.mean[[i, j]]),
                    fmt(lo[[i, j]]),
                    fmt(up[[i, j]]),
                ]);
            }
        }
        t.finish(io.out.as_deref())
    } else {
        let mut t = TableWriter::new(&["obs", abscissa, "mean"]);
        for i in 0..x.nrows() {
            for (j, &g) in res.grid.iter().enumerate() {
                t.row(&[(i + 1).to_string(), fmt(g), fmt(res.mean[[i, j]])]);
            }
        }
        t.finish(io.out.as_deref())
    }
}

fn cmd_qale(
    io: &ModelData,
    var: usize,
    var2: Option<usize>,
    tau: &str,
    bins: usize,
    ci_level: Option<f64>,
    get_all: bool,
) -> Result<()> {
    let model = persist::load(&io.model)?;
    let (x, _names) = read_covariates(&io.data, &io.response)?;
    let taus = parse_f64_list(tau, "tau")?;
    let j = covariate_index(var, x.ncols())?;
    let idx: Vec<usize> = match var2 {
        Some(v2) => vec![j, covariate_index(v2, x.ncols())?],
        None => vec![j],
    };
    let res = interpret::qale(&model, &x, &idx, &taus, bins, ci_level, get_all)?;
    match &res.effects {
        AleEffects::Main { ale, .. } => {
            let edges = &res.bin_edges[0];
            if let Some(samples) = &res.samples {
                let mut t = TableWriter::new(&["var", "tau", "x", "sample", "ale"]);
                for (ti, &tv) in res.tau.iter().enumerate() {
                    for (e, &xv) in edges.iter().enumerate() {
                        for (s, m) in samples.iter().enumerate() {
                            t.row(&[
                                var.to_string(),
                                fmt(tv),
                                fmt(xv),
                                (s + 1).to_string(),
                                fmt(m[[e, ti]]),
                            ]);
                        }
                    }
                }
                t.finish(io.out.as_deref())
            } else if let (Some(lo), Some(up)) = (&res.lower, &res.upper) {
                let mut t = TableWriter::new(&["var", "tau", "x", "ale", "lower", "upper"]);
                for (ti, &tv) in res.tau.iter().enumerate() {
                    for (e, &xv) in edges.iter().enumerate() {
                        t.row(&[
                            var.to_string(),
                            fmt(tv),
                            fmt(xv),
                            fmt(ale[[e, ti]]),
                            fmt(lo[[e, ti]]),
                            fmt(up[[e, ti]]),
                        ]);
                    }
                }
                t.finish(io.out.as_deref())
            } else {
                let mut t = TableWriter::new(&["var", "tau", "x", "ale"]);
                for (ti, &tv) in res.tau.iter().enumerate() {
                    for (e, &xv) in edges.iter().enumerate() {
                        t.row(&[var.to_string(), fmt(tv), fmt(xv), fmt(ale[[e, ti]])]);
                    }
                }
                t.finish(io.out.as_deref())
            }
        }
        AleEffects::Interaction { ale, .. } => {
            let (e1, e2) = (&res.bin_edges[0], &res.bin_edges[1]);
            let mut t = TableWriter::new(&["var1", "var2", "tau", "x1", "x2", "ale"]);
            for (ti, &tv) in res.tau.iter().enumerate() {
                for (a, &x1) in e1.iter().enumerate() {
                    for (b, &x2) in e2.iter().enumerate() {
                        t.row(&[
                            var.to_string(),
                            var2.expect("interaction").to_string(),
                            fmt(tv),
                            fmt(x1),
                            fmt(x2),
                            fmt(ale[[a, b, ti]]),
                        ]);
                    }
                }
            }
            t.finish(io.out.as_deref())
        }
    }
}

fn cmd_qvi(
    io: &ModelData,
    vars: Option<&str>,
    tau: &str,
    bins: usize,
    ci_level: Option<f64>,
) -> Result<()> {
    let model = persist::load(&io.model)?;
    let (x, names) = read_covariates(&io.data, &io.response)?;
    let taus = parse_f64_list(tau, "tau")?;
    let indices: Option<Vec<usize>> = vars
        .map(|v| -> Result<Vec<usize>> {
            parse_usize_list(v, "vars")?
                .into_iter()
                .map(|i| covariate_index(i, x.ncols()))
                .collect()
        })
        .transpose()?;
    let res = interpret::qvi(&model, &x, indices.as_deref(), &taus, bins, ci_level)?;
    let headers: Vec<&str> = if res.lower.is_some() {
        vec!["var", "name", "tau", "kind", "vi", "lower", "upper"]
    } else {
        vec!["var", "name", "tau", "kind", "vi"]
    };
    let mut t = TableWriter::new(&headers);
    for (vi_row, &j) in res.var_index.iter().enumerate() {
        for (ti, &tv) in res.tau.iter().enumerate() {
            let kind = match res.kind[vi_row] {
                ViKind::Sd => "sd",
                ViKind::Range => "range",
            };
            let mut row = vec![
                (j + 1).to_string(),
                names[j].clone(),
                fmt(tv),
                kind.to_string(),
                fmt(res.vi[[vi_row, ti]]),
            ];
            if let (Some(lo), Some(up)) = (&res.lower, &res.upper) {
                row.push(fmt(lo[[vi_row, ti]]));
                row.push(fmt(up[[vi_row, ti]]));
            }
            t.row(&row);
        }
    }
    t.finish(io.out.as_deref())
}

fn cmd_gof(io: &ModelData, get_all: bool) -> Result<()> {
    let model = persist::load(&io.model)?;
    let (x, y, _names) = read_xy(&io.data, &io.response)?;
    let y: Vec<f64> = y.iter().copied().collect();
    let res = interpret::pit(&model, &x, &y, get_all)?;
    if let Some(series) = &res.sample_sorted {
        let mut t = TableWriter::new(&["sample", "i", "expected", "observed"]);
        for (s, us) in series.iter().enumerate() {
            for (i, &u) in us.iter().enumerate() {
                t.row(&[
                    (s + 1).to_string(),
                    (i + 1).to_string(),
                    fmt(res.positions[i]),
                    fmt(u),
                ]);
            }
        }
        t.finish(io.out.as_deref())
    } else {
        let mut t = TableWriter::new(&["i", "expected", "observed"]);
        for (i, &u) in res.sorted_u.iter().enumerate() {
            t.row(&[(i + 1).to_string(), fmt(res.positions[i]), fmt(u)]);
        }
        t.finish(io.out.as_deref())
    }
}

fn cmd_trace(
    model_path: &Path,
    target: &str,
    x: Option<&str>,
    tau: Option<f64>,
    y: Option<f64>,
    window: Option<&str>,
    out: Option<&Path>,
) -> Result<()> {
    let model = persist::load(model_path)?;
    let log = match &model.log {
        TrainingLog::Sampler(log) => log,
        _ => {
            return Err(Error::capability(format!(
                "trace requires an MCMC model; this model was fitted with {}",
                model.method
            )))
        }
    };
    let window = window
        .map(|w| -> Result<(usize, usize)> {
            let parts = parse_usize_list(w, "window")?;
            if parts.len() != 2 || parts[0] == 0 || parts[1] < parts[0] {
                return Err(Error::invalid("window must be 'start,end' with 1 <= start <= end"));
            }
            Ok((parts[0], parts[1]))
        })
        .transpose()?;
    let in_window = |iter_1based: usize| match window {
        Some((a, b)) => iter_1based >= a && iter_1based <= b,
        None => true,
    };
    // Absolute iteration of the s-th stored sample.
    let stored_iter = |s: usize| log.warmup + (s + 1) * log.thin;

    let mut t = TableWriter::new(&["iteration", "value"]);
    match target.to_ascii_lowercase().as_str() {
        "loglik" => {
            for s in 0..model.n_samples() {
                let it = stored_iter(s);
                if in_window(it) {
                    t.row(&[it.to_string(), fmt(log.loglik[it - 1])]);
                }
            }
        }
        kind @ ("pdf" | "cdf" | "qf") => {
            let xv = parse_f64_list(
                x.ok_or_else(|| Error::invalid("--x is required for estimate traces"))?,
                "x",
            )?;
            if xv.len() != model.shape.input {
                return Err(Error::invalid(format!(
                    "x has {} entries, model expects {}",
                    xv.len(),
                    model.shape.input
                )));
            }
            for s in 0..model.n_samples() {
                let it = stored_iter(s);
                if !in_window(it) {
                    continue;
                }
                let single = FittedModel {
                    weights: vec![model.weights[s].clone()],
                    ..model.clone()
                };
                let value = match kind {
                    "qf" => {
                        let tv = tau.ok_or_else(|| Error::invalid("--tau is required for the QF target"))?;
                        single.quantile_external(&xv, tv)?
                    }
                    "pdf" => {
                        let yv = y.ok_or_else(|| Error::invalid("--y is required for the PDF target"))?;
                        single.pdf_external(&xv, yv)?
                    }
                    _ => {
                        let yv = y.ok_or_else(|| Error::invalid("--y is required for the CDF target"))?;
                        single.cdf_external(&xv, yv)?
                    }
                };
                t.row(&[it.to_string(), fmt(value)]);
            }
        }
        other => {
            return Err(Error::invalid(format!(
                "unknown trace target '{other}' (expected loglik, PDF, CDF or QF)"
            )))
        }
    }
    t.finish(out)
}

fn read_folds_file(path: &Path, n: usize) -> Result<FoldAssignment> {
    let table = read_numeric_csv(path)?;
    if table.headers != ["fold", "row"] {
        return Err(Error::invalid(format!(
            "{}: fold file must have columns fold,row",
            path.display()
        )));
    }
    let nfold = table
        .rows
        .iter()
        .map(|r| r[0] as usize)
        .max()
        .unwrap_or(0);
    let mut folds = vec![Vec::new(); nfold];
    for r in &table.rows {
        let (f, row) = (r[0] as usize, r[1] as usize);
        if f == 0 || f > nfold || row == 0 || row > n {
            return Err(Error::invalid(format!(
                "{}: fold entry ({f},{row}) out of range",
                path.display()
            )));
        }
        folds[f - 1].push(row - 1);
    }
    let assignment = FoldAssignment { folds };
    assignment.validate(n)?;
    Ok(assignment)
}

fn cmd_cv(
    config: Option<&Path>,
    data_path: &Path,
    nfold: usize,
    folds_path: Option<&Path>,
    method_override: Option<String>,
    seed_override: Option<u64>,
    out: Option<&Path>,
) -> Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(m) = method_override {
        cfg.method = m;
    }
    if let Some(s) = seed_override {
        cfg.seed = Some(s);
    }
    let method = cfg.method()?;
    if cfg.normalize {
        return Err(Error::capability(
            "cross-validation expects responses already on [0,1]; fold-wise normalization is not supported",
        ));
    }
    let (x, y, _names) = read_xy(data_path, &cfg.response)?;
    let data = Dataset::new(x, y)?;
    let folds = match folds_path {
        Some(p) => read_folds_file(p, data.n())?,
        None => create_folds(data.n(), nfold, cfg.seed.unwrap_or(0))?,
    };
    let basis = SplineBasis::new(cfg.k)?;
    let shape = NetworkShape::new(data.p(), cfg.hidden.clone(), cfg.k, cfg.activation()?)?;
    let prior = cfg.prior_config()?;
    let result = trainer::cv_error(
        &data,
        &shape,
        &basis,
        method,
        Some(&prior),
        &cfg.train_control(false),
        &folds,
    )?;
    let mut t = TableWriter::new(&["fold", "cve"]);
    for (i, v) in result.per_fold.iter().enumerate() {
        t.row(&[(i + 1).to_string(), fmt(*v)]);
    }
    t.row(&["mean".to_string(), fmt(result.cve)]);
    t.finish(out)
}

fn cmd_folds(n: usize, nfold: usize, seed: u64, out: Option<&Path>) -> Result<()> {
    let folds = create_folds(n, nfold, seed)?;
    let mut t = TableWriter::new(&["fold", "row"]);
    for (f, fold) in folds.folds.iter().enumerate() {
        for &row in fold {
            t.row(&[(f + 1).to_string(), (row + 1).to_string()]);
        }
    }
    t.finish(out)
}

fn cmd_simulate(n: usize, seed: u64, out: Option<&Path>) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let data = sim::simulate(n, seed);
    let mut t = TableWriter::new(&["X1", "X2", "X3", "Y"]);
    for i in 0..n {
        t.row(&[
            fmt(data.x[[i, 0]]),
            fmt(data.x[[i, 1]]),
            fmt(data.x[[i, 2]]),
            fmt(data.y[i]),
        ]);
    }
    t.finish(out)
}

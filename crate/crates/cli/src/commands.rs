//! Subcommand definitions and handlers.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use renoir::attacks::{AttackKind, AttackSpec, EotMode};
use renoir::certify::{certify_net, convert_certificate_with_diam};
use renoir::data::{load_csv, write_csv};
use renoir::divergences::{kl_discrete, renyi_discrete, tv_discrete, DiscreteDistribution, Metric};
use renoir::net::{load_with_meta, save};
use renoir::numfmt::sig9;
use renoir::riskbounds::{curve_to_csv, guaranteed_accuracy_curve, risk_report};
use renoir::{Error, Norm, Result};

use crate::config::{sha256_hex, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(
    name = "renoir",
    version,
    about = "Certify, attack and bound noise-injected classifiers"
)]
pub struct Cli {
    /// Worker threads for per-input Monte Carlo work; results do not depend on it.
    #[arg(long, global = true, env = "RENOIR_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the dataset of a config as CSV.
    Data {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the model of a config; writes the model and a loss trace CSV.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the robustness certificate of a model as JSON.
    Certify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value = "renyi")]
        metric: Metric,
        /// Label-space diameter for the Wasserstein bound.
        #[arg(long, default_value_t = 1.0)]
        diam: f64,
    },
    /// Attack every row of a dataset and print a risk report as JSON.
    Attack(AttackArgs),
    /// Emit the guaranteed-accuracy curve as CSV.
    Curve {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// `start:stop:step` (inclusive) or a comma-separated list.
        #[arg(long)]
        alpha_grid: String,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 10_000)]
        mc: usize,
        #[arg(long)]
        seed: u64,
        /// Write the CSV here (plus `<out>.meta.json`) instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Divergence between two discrete distributions.
    Divergence {
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        p: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        q: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value = "renyi")]
        metric: Metric,
    },
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long = "attack")]
    pub kind: AttackKind,
    /// Defaults to the attack's native norm (pgd: linf, cw: l2, ead: l1, grid: l2).
    #[arg(long)]
    pub norm: Option<Norm>,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    #[arg(long, default_value_t = 0.006)]
    pub step_size: f64,
    #[arg(long, default_value_t = 80)]
    pub eot: usize,
    #[arg(long, default_value = "loss")]
    pub eot_mode: EotMode,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub no_random_start: bool,
    #[arg(long, default_value_t = 100)]
    pub eval_draws: usize,
    #[arg(long)]
    pub eval_seed: Option<u64>,
    #[arg(long, default_value_t = 0.1)]
    pub c_init: f64,
    #[arg(long, default_value_t = 6)]
    pub binary_steps: usize,
    #[arg(long, default_value_t = 0.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = 0.01)]
    pub c1: f64,
    #[arg(long, default_value_t = 0.1)]
    pub c2: f64,
    #[arg(long, default_value_t = 5)]
    pub grid_resolution: usize,
    #[arg(long, default_value_t = 100)]
    pub grid_draws: usize,
    /// Noise draws per input for the risk estimates.
    #[arg(long, default_value_t = 1000)]
    pub mc: usize,
    /// Rényi order of the certificate used for the gap bounds.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl AttackArgs {
    pub fn spec(&self) -> AttackSpec {
        let base = match self.kind {
            AttackKind::Pgd => AttackSpec::pgd(self.alpha, self.steps, self.step_size, self.seed),
            AttackKind::Cw => AttackSpec::cw(self.alpha, self.steps, self.step_size, self.seed),
            AttackKind::Ead => AttackSpec::ead(self.alpha, self.steps, self.step_size, self.seed),
            AttackKind::Grid => {
                AttackSpec::grid(self.alpha, Norm::L2, self.grid_resolution, self.grid_draws, self.seed)
            }
        };
        AttackSpec {
            norm: self.norm.unwrap_or(base.norm),
            steps: self.steps,
            step_size: self.step_size,
            eot_samples: self.eot,
            eot_mode: self.eot_mode,
            random_start: !self.no_random_start,
            eval_draws: self.eval_draws,
            eval_seed: self.eval_seed.unwrap_or(base.eval_seed),
            c_init: self.c_init,
            binary_steps: self.binary_steps,
            kappa: self.kappa,
            c1: self.c1,
            c2: self.c2,
            grid_resolution: self.grid_resolution,
            grid_draws: self.grid_draws,
            ..base
        }
    }
}

/// Parse `start:stop:step` (inclusive) or `a,b,c`.
pub fn parse_alpha_grid(s: &str) -> Result<Vec<f64>> {
    let num = |t: &str| -> Result<f64> {
        t.trim()
            .parse()
            .map_err(|_| Error::param("alpha-grid", format!("`{t}` is not a number")))
    };
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if step.is_nan() || step <= 0.0 || stop < start {
                return Err(Error::param("alpha-grid", "need step > 0 and stop >= start"));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|k| start + k as f64 * step).collect())
        }
        [_] => s.split(',').map(num).collect(),
        _ => Err(Error::param(
            "alpha-grid",
            "expected start:stop:step or a comma-separated list",
        )),
    }
}

fn file_hash(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

fn with_meta(mut v: Value, meta: Value) -> Value {
    if let Value::Object(map) = &mut v {
        map.insert("meta".into(), meta);
    }
    v
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn pretty(v: &Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

/// Missing inputs are configuration errors, not I/O failures.
fn require_file(name: &'static str, path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::param(name, format!("{} does not exist", path.display())))
    }
}

fn require_inputs(command: &Command) -> Result<()> {
    match command {
        Command::Data { config, .. } | Command::Train { config, .. } => require_file("config", config),
        Command::Certify { model, .. } => require_file("model", model),
        Command::Attack(AttackArgs { model, data, .. }) | Command::Curve { model, data, .. } => {
            require_file("model", model)?;
            require_file("data", data)
        }
        Command::Divergence { .. } => Ok(()),
    }
}

pub fn run(command: &Command) -> Result<()> {
    require_inputs(command)?;
    match command {
        Command::Data { config, out } => {
            let cfg = ExperimentConfig::load(config)?;
            write_csv(&cfg.dataset()?, out)
        }
        Command::Train { config, out } => {
            let cfg = ExperimentConfig::load(config)?;
            let data = cfg.dataset()?;
            let (net, trace) = cfg.train(&data)?;
            let meta = json!({"config_hash": cfg.hash()?, "seed": cfg.seed});
            save(&net, out, Some(&meta))?;
            let mut csv = String::from("epoch,loss\n");
            for (e, l) in trace.iter().enumerate() {
                csv.push_str(&format!("{e},{}\n", sig9(*l)));
            }
            std::fs::write(sibling(out, ".loss.csv"), csv)?;
            Ok(())
        }
        Command::Certify {
            model,
            alpha,
            lambda,
            metric,
            diam,
        } => {
            let (net, model_meta) = load_with_meta(model)?;
            let cert = certify_net(&net, *alpha, *lambda)?;
            let cert = convert_certificate_with_diam(&cert, *metric, *diam)?;
            let args = json!({"model": file_hash(model)?, "alpha": alpha, "lambda": lambda.to_string(), "metric": metric, "diam": diam});
            let meta = json!({"config_hash": sha256_hex(args.to_string().as_bytes()), "seed": seed_of(&model_meta)});
            emit(&pretty(&with_meta(serde_json::to_value(&cert)?, meta))?, None)
        }
        Command::Attack(a) => {
            let (net, _) = load_with_meta(&a.model)?;
            let data = load_csv(&a.data)?;
            let spec = a.spec();
            let report = risk_report(&net, &data, &spec, a.lambda, a.mc, a.seed)?;
            let args = json!({
                "model": file_hash(&a.model)?, "data": file_hash(&a.data)?,
                "spec": spec, "mc": a.mc, "lambda": a.lambda.to_string(),
            });
            let meta = json!({"config_hash": sha256_hex(args.to_string().as_bytes()), "seed": a.seed});
            emit(
                &pretty(&with_meta(serde_json::to_value(&report)?, meta))?,
                a.out.as_deref(),
            )
        }
        Command::Curve {
            model,
            data,
            alpha_grid,
            lambda,
            mc,
            seed,
            out,
        } => {
            let (net, _) = load_with_meta(model)?;
            let ds = load_csv(data)?;
            let grid = parse_alpha_grid(alpha_grid)?;
            let rows = guaranteed_accuracy_curve(&net, &ds, &grid, *lambda, *mc, *seed)?;
            let csv = curve_to_csv(&rows);
            if let Some(out) = out {
                let args = json!({
                    "model": file_hash(model)?, "data": file_hash(data)?,
                    "alpha_grid": grid, "lambda": lambda.to_string(), "mc": mc,
                });
                let meta = json!({"meta": {"config_hash": sha256_hex(args.to_string().as_bytes()), "seed": seed}});
                std::fs::write(sibling(out, ".meta.json"), pretty(&meta)?)?;
            }
            emit(&csv, out.as_deref())
        }
        Command::Divergence { p, q, lambda, metric } => {
            let p = DiscreteDistribution::new(p.clone())?;
            let q = DiscreteDistribution::new(q.clone())?;
            let v = match metric {
                Metric::Renyi => renyi_discrete(&p, &q, *lambda)?,
                Metric::Kl => kl_discrete(&p, &q)?,
                Metric::Tv => tv_discrete(&p, &q)?,
                other => {
                    return Err(Error::param(
                        "metric",
                        format!("{other} is only available as a certificate conversion"),
                    ))
                }
            };
            emit(&format!("{v:.6}\n"), None)
        }
    }
}

fn seed_of(meta: &Option<Value>) -> Value {
    meta.as_ref()
        .and_then(|m| m.get("seed").cloned())
        .unwrap_or(Value::Null)
}

/// Run inside a pool capped at `threads` workers, when given.
pub fn run_with_threads(cli: &Cli) -> Result<()> {
    match cli.threads {
        Some(0) => Err(Error::param("threads", "must be >= 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Numeric(format!("thread pool: {e}")))?
            .install(|| run(&cli.command)),
        None => run(&cli.command),
    }
}

/// Exit status: 0 success, 2 configuration or validation error, 3 numeric failure.
pub fn exit_code(result: &Result<()>) -> u8 {
    match result {
        Ok(()) => 0,
        Err(e) if e.is_validation() => 2,
        Err(_) => 3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_grid_forms() {
        let g = parse_alpha_grid("0:0.5:0.01").unwrap();
        assert_eq!(g.len(), 51);
        assert!((g[50] - 0.5).abs() < 1e-12);
        assert_eq!(parse_alpha_grid("0.1,0.2").unwrap(), vec![0.1, 0.2]);
        assert!(parse_alpha_grid("0:1").is_err());
        assert!(parse_alpha_grid("1:0:0.1").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Ok(())), 0);
        assert_eq!(exit_code(&Err(Error::NoNoiseModel)), 2);
        assert_eq!(exit_code(&Err(Error::Numeric("x".into()))), 3);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}

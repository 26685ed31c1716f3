use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dmp_core::models::Algorithm;
use dmp_core::risk::{catalog_to_delimited, device_catalog_lookup_by_name, full_catalog};
use dmp_orchestrator::data::load_dataset;
use dmp_orchestrator::{prepare, read_dp_input, reproduce_experiment, Config, ExperimentSpec, OrchestratorError, Result, System};

#[derive(Parser)]
#[command(name = "dmp", version, about = "Diabetes risk prediction with an auditable ledger")]
struct Cli {
    /// TOML configuration file; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory holding the ledger, keys and deployed models.
    #[arg(long, global = true, default_value = ".dmp-state")]
    state: PathBuf,
    /// Exported ICU tables to use instead of the synthetic cohort.
    #[arg(long, global = true)]
    mimic_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate datasets, printing row and class counts.
    Ingest {
        #[arg(long = "dataset")]
        datasets: Vec<String>,
    },
    /// Train, tune and deploy a model.
    Dpmt {
        #[arg(long)]
        dataset: String,
        #[arg(long, default_value = "rf")]
        algorithm: Algorithm,
        /// Enable recursive feature elimination.
        #[arg(long)]
        fs: bool,
        /// Enable SMOTE on the training split.
        #[arg(long)]
        smote: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Predict for one record (JSON object or one-row CSV).
    Dp {
        #[arg(long)]
        record: PathBuf,
        #[arg(long, default_value = "user")]
        user: String,
    },
    /// Run the experiment matrix.
    Reproduce {
        #[arg(long = "dataset")]
        datasets: Vec<String>,
        #[arg(long = "algorithm")]
        algorithms: Vec<Algorithm>,
        /// Write `table.txt` and `results.jsonl` here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inspect the ledger.
    Ledger {
        #[command(subcommand)]
        action: LedgerAction,
    },
    /// Print the effective configuration as TOML.
    Config,
    /// Print the device catalog.
    Catalog {
        #[arg(long)]
        factor: Option<String>,
    },
}

#[derive(Subcommand)]
enum LedgerAction {
    /// Check block hashes and links.
    Verify,
    /// List transactions touching a participant, tx id or payload hash.
    Audit { key: String },
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(d) = &cli.mimic_dir {
        cfg.datasets.insert("mimic".into(), d.to_string_lossy().into_owned());
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Ingest { datasets } => {
            let names = if datasets.is_empty() { cfg.datasets.keys().cloned().collect() } else { datasets };
            for name in names {
                let (raw, report) = load_dataset(&cfg, &name)?;
                let data = prepare(&cfg, &name)?;
                let (rp, rn) = raw.class_counts();
                let (cp, cn) = data.clean.class_counts();
                println!("{name}: {} rows ({rp} positive / {rn} negative)", raw.len());
                println!("{name}: {} rows after cleaning ({cp} / {cn}), {} encoded features", data.clean.len(), data.matrix.n_cols());
                if let Some(r) = report {
                    println!(
                        "{name}: {} patients, {} without admission, {} with unknown ethnicity",
                        r.patients_seen, r.skipped_no_admission, r.excluded_missing_ethnicity
                    );
                }
            }
        }
        Command::Dpmt { dataset, algorithm, fs, smote, seed } => {
            let mut spec = ExperimentSpec::new(&cfg, &dataset, algorithm, fs, smote);
            if let Some(s) = seed {
                spec.seeds = vec![s];
            }
            let mut sys = System::open(&cli.state, cfg)?;
            let (model, outcome) = sys.run_dpmt(&spec)?;
            let m = &model.report.metrics;
            println!("deployed {} ({})", model.version, outcome.artifact.spec.describe());
            println!("features: {}", model.artifact.selected_features.join(", "));
            println!(
                "holdout accuracy {:.4}  precision {:.4}  recall {:.4}  f1 {:.4}  auc {}",
                m.accuracy,
                m.precision_pos,
                m.recall_pos,
                m.f_measure,
                model.report.auc.map_or("n/a".into(), |a| format!("{a:.4}"))
            );
            println!("deployment tx {}", model.deployment_tx);
        }
        Command::Dp { record, user } => {
            let input = read_dp_input(&record)?;
            let mut sys = System::open(&cli.state, cfg)?;
            let out = sys.run_dp(&user, &input)?;
            println!("model {}", out.model_version);
            println!("class {}", if out.prediction.positive { "positive" } else { "negative" });
            println!("score {:.6}", out.prediction.score);
            if let Some(p) = out.prediction.probability {
                println!("probability {p:.6}");
            }
            println!("request tx {}", out.request_tx.tx_id);
            println!("result tx {}", out.result_tx.tx_id);
        }
        Command::Reproduce { datasets, algorithms, out } => {
            let names: Vec<String> = if datasets.is_empty() { cfg.datasets.keys().cloned().collect() } else { datasets };
            let algs = if algorithms.is_empty() { Algorithm::ALL.to_vec() } else { algorithms };
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let specs = ExperimentSpec::matrix(&cfg, &refs, &algs);
            let bundle = reproduce_experiment(&specs, &cfg)?;
            let table = bundle.to_table();
            print!("{table}");
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("table.txt"), &table)?;
                std::fs::write(dir.join("results.jsonl"), bundle.to_json_lines())?;
            }
        }
        Command::Ledger { action } => {
            let sys = System::open(&cli.state, cfg)?;
            let channel = sys.channel().to_string();
            match action {
                LedgerAction::Verify => match sys.ledger().verify_chain(&channel)? {
                    Ok(()) => {
                        let n = sys.ledger().blocks(&channel)?.len();
                        println!("chain '{channel}' intact: {n} blocks");
                    }
                    Err(t) => {
                        return Err(OrchestratorError::Workflow(format!(
                            "chain '{channel}' tampered at block {} ({:?})",
                            t.index, t.kind
                        )))
                    }
                },
                LedgerAction::Audit { key } => {
                    for tx in sys.ledger().audit_trail(&channel, &key)? {
                        let meta: Vec<String> = tx.draft.metadata.iter().map(|(k, v)| format!("{k}={v}")).collect();
                        println!(
                            "{:>6} {} {:<26} {} -> {} {:?} {}",
                            tx.seq,
                            tx.tx_id.short(),
                            tx.tx_type().to_string(),
                            tx.actor(),
                            tx.subject(),
                            tx.status,
                            meta.join(" ")
                        );
                    }
                }
            }
        }
        Command::Config => print!("{}", cfg.to_toml()),
        Command::Catalog { factor } => {
            let text = match factor {
                Some(f) => catalog_to_delimited(device_catalog_lookup_by_name(&f).map_err(OrchestratorError::Load)?, b','),
                None => catalog_to_delimited(full_catalog(), b','),
            };
            print!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

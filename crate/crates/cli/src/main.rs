use std::fs;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use seam_cli::{server, DataArgs};
use seam_core::fixture::{generate_csv, FixtureConfig};
use seam_core::ingest::{ingest_dir, ingest_path, IngestConfig};
use seam_core::validation::{run_mse_trial, SyntheticScenario, TrialReport};
use seam_core::{MatchupRequest, MatchupService, PlayerId};
use tracing::info;

#[derive(Parser)]
#[command(name = "seam", version, about = "Synthetic batter-vs-pitcher spray charts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve the JSON API.
    Serve {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
    /// Ingest a CSV file or directory and print the ingest report.
    Ingest { path: PathBuf },
    /// Compute one matchup and print the report as JSON.
    Matchup {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        batter: String,
        #[arg(long)]
        pitcher: String,
        #[arg(long)]
        pitcher_ratio: Option<f64>,
        #[arg(long)]
        batter_ratio: Option<f64>,
        /// Per-axis node cap for the densities in the output.
        #[arg(long)]
        max_nodes: Option<usize>,
    },
    /// Run Monte Carlo MSE scenarios on synthetic ground truth.
    Validate {
        /// Scenario names; all of them when omitted.
        #[arg(long = "scenario")]
        scenarios: Vec<String>,
        #[arg(long, default_value_t = 200)]
        replications: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
        format: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a deterministic synthetic Statcast-style CSV.
    Fixture {
        #[arg(long, default_value_t = 10_000)]
        pitches: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        pitchers: Option<usize>,
        #[arg(long)]
        batters: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        seasons: Vec<u16>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Csv,
}

fn env_var(k: &str) -> Option<String> {
    std::env::var(k).ok().filter(|v| !v.is_empty())
}

fn emit(out: Option<&PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn trials_csv(reports: &[TrialReport]) -> String {
    let mut s = String::from(
        "scenario,replications,n,lambda,lambda_p,lambda_b,mse_blended,se_blended,mse_direct,se_direct,difference,se_difference,blended_better\n",
    );
    for r in reports {
        s.push_str(&format!(
            "{},{},{},{},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{}\n",
            r.scenario,
            r.replications,
            r.n,
            r.mean_lambda[0],
            r.mean_lambda[1],
            r.mean_lambda[2],
            r.mse_blended.mean,
            r.mse_blended.se,
            r.mse_direct.mean,
            r.mse_direct.se,
            r.difference.mean,
            r.difference.se,
            r.blended_better()
        ));
    }
    s
}

async fn shutdown_signal() {
    let _ = tokio::signal::ctrl_c().await;
}

fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();

    match Cli::parse().command {
        Command::Serve {
            mut data,
            mut port,
            host,
        } => {
            data.apply_env(env_var).map_err(anyhow::Error::msg)?;
            if let Some(p) = env_var("SEAM_PORT") {
                port = p.parse().context("SEAM_PORT")?;
            }
            let service = Arc::new(MatchupService::load(data.service_config()?)?);
            let snap = service.snapshot();
            info!(
                hash = %snap.dataset_hash,
                pitchers = snap.tables.pitchers.len(),
                batters = snap.tables.batters.len(),
                aggregations = service.aggregations(),
                "dataset loaded"
            );
            let addr: SocketAddr = format!("{host}:{port}").parse().context("listen address")?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                info!(%addr, "listening");
                axum::serve(listener, server::router(service))
                    .with_graceful_shutdown(shutdown_signal())
                    .await?;
                anyhow::Ok(())
            })?;
        }
        Command::Ingest { path } => {
            let config = IngestConfig::default();
            let out = if path.is_dir() {
                ingest_dir(&path, &config)?
            } else {
                ingest_path(&path, &config)?
            };
            println!("{}", serde_json::to_string_pretty(&out.report)?);
        }
        Command::Matchup {
            mut data,
            batter,
            pitcher,
            pitcher_ratio,
            batter_ratio,
            max_nodes,
        } => {
            data.apply_env(env_var).map_err(anyhow::Error::msg)?;
            let service = MatchupService::load(data.service_config()?)?;
            let report = service.compute_matchup(&MatchupRequest {
                batter_id: PlayerId::new(batter),
                pitcher_id: PlayerId::new(pitcher),
                season: None,
                pitcher_stuff_ratio: pitcher_ratio,
                batter_launch_ratio: batter_ratio,
                max_nodes,
            })?;
            println!("{}", serde_json::to_string(&report)?);
        }
        Command::Validate {
            scenarios,
            replications,
            seed,
            format,
            out,
        } => {
            let names: Vec<String> = if scenarios.is_empty() {
                SyntheticScenario::NAMES.iter().map(|s| s.to_string()).collect()
            } else {
                scenarios
            };
            let mut reports = Vec::new();
            for name in &names {
                let Some(mut scenario) = SyntheticScenario::named(name) else {
                    bail!(
                        "unknown scenario `{name}`; known: {}",
                        SyntheticScenario::NAMES.join(", ")
                    );
                };
                if let Some(s) = seed {
                    scenario.seed = s;
                }
                let report = run_mse_trial(&scenario, replications)?.without_nodes();
                info!(scenario = %name, better = report.blended_better(), "trial done");
                reports.push(report);
            }
            let text = match format {
                ReportFormat::Json => serde_json::to_string_pretty(&reports)?,
                ReportFormat::Csv => trials_csv(&reports),
            };
            emit(out.as_ref(), &text)?;
        }
        Command::Fixture {
            pitches,
            seed,
            pitchers,
            batters,
            seasons,
            out,
        } => {
            let mut config = FixtureConfig::with_pitches(pitches, seed);
            if let Some(p) = pitchers {
                config.pitchers = p;
            }
            if let Some(b) = batters {
                config.batters = b;
            }
            if !seasons.is_empty() {
                config.seasons = seasons;
            }
            let csv = generate_csv(&config);
            match out {
                Some(p) => fs::write(&p, csv).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{csv}"),
            }
        }
    }
    Ok(())
}

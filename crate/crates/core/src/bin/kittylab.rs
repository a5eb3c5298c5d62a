use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use kittylab::auction::{collusion_experiment, CollusionConfig};
use kittylab::genescience::mix_genes_traced;
use kittylab::market::{
    diamond_scenario, run_batch, run_simulation_with_trades, trades_csv, BatchSummary, JewelTier,
    ScenarioConfig,
};
use kittylab::prediction::{monte_carlo_distribution, predict_child, trait_distribution};
use kittylab::{cattributes, CattributeRegistry, Digest, Eth, Execution, GeneArray};

#[derive(Parser)]
#[command(name = "kittylab", version, about = "CryptoKitties breeding and market fairness laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Breed two genes with a seed digest and print the child.
    Mix {
        #[arg(long)]
        matron: GeneArray,
        #[arg(long)]
        sire: GeneArray,
        #[arg(long)]
        seed: Digest,
    },
    /// Exact child for a known target digest, or the per-cell child law.
    Predict {
        #[arg(long)]
        matron: GeneArray,
        #[arg(long)]
        sire: GeneArray,
        #[arg(long)]
        target_seed: Option<Digest>,
        /// Add a Monte Carlo column with this many samples.
        #[arg(long)]
        monte_carlo: Option<usize>,
        #[arg(long, default_value_t = 0)]
        mc_seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the Cattributes a gene shows.
    Cattributes {
        #[arg(long)]
        gene: GeneArray,
        #[arg(long)]
        registry: Option<PathBuf>,
    },
    /// Breed children from a Diamond kitty and value them at jewel minimums.
    JewelScenario {
        #[arg(long, default_value_t = 499)]
        children: u32,
    },
    /// Collusion experiment on Dutch auctions with an optional bid delay.
    AuctionSim {
        #[arg(long, default_value_t = 1000)]
        auctions: usize,
        #[arg(long, default_value_t = 0)]
        delay: u64,
        #[arg(long, default_value_t = 60.0)]
        discovery_mean: f64,
        #[arg(long, default_value_t = 5)]
        public_bidders: usize,
        #[arg(long, default_value = "5")]
        start_price: Eth,
        #[arg(long, default_value = "0.5")]
        end_price: Eth,
        #[arg(long, default_value_t = 5760)]
        duration: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Agent-based market run; writes report.json and trades.csv.
    MarketSim {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Also run this many consecutive seeds and write summary.json.
        #[arg(long, default_value_t = 1)]
        replicates: u64,
        #[arg(long)]
        sequential: bool,
    },
}

enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn write_or_print(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Mix { matron, sire, seed } => {
            let trace = mix_genes_traced(&matron, &sire, seed);
            let mut out = format!("{}\n", trace.child.to_hex());
            out.push_str("cell\tmatron\tsire\tchild\tmutated\n");
            for i in 0..matron.cells().len() {
                let _ = writeln!(
                    out,
                    "{i}\t{}\t{}\t{}\t{}",
                    matron.get(i),
                    sire.get(i),
                    trace.child.get(i),
                    trace.mutated[i]
                );
            }
            print!("{out}");
        }
        Command::Predict { matron, sire, target_seed, monte_carlo, mc_seed, out } => {
            let text = match target_seed {
                Some(seed) => format!("{}\n", predict_child(&matron, &sire, seed).to_hex()),
                None => {
                    let exact = trait_distribution(&matron, &sire);
                    match monte_carlo {
                        Some(0) => return Err(Failure::Usage(anyhow::anyhow!("--monte-carlo must be positive"))),
                        Some(n) => {
                            let mc = monte_carlo_distribution(&matron, &sire, n, mc_seed);
                            eprintln!("max abs error {:.6}", exact.max_abs_diff(&mc));
                            exact.to_csv_with_empirical(&mc)
                        }
                        None => exact.to_csv(),
                    }
                }
            };
            write_or_print(out.as_deref(), &text)?;
        }
        Command::Cattributes { gene, registry } => {
            let registry = match registry {
                Some(p) => CattributeRegistry::load(&p)
                    .with_context(|| format!("loading registry {}", p.display()))
                    .map_err(Failure::Usage)?,
                None => CattributeRegistry::builtin(),
            };
            for name in cattributes(&gene, &registry) {
                println!("{name}");
            }
        }
        Command::JewelScenario { children } => {
            let s = diamond_scenario(children);
            println!("children {}", s.children);
            println!("gross {}", s.gross);
            println!("fees {}", s.fees);
            println!("net {}", s.net);
            for tier in JewelTier::ALL {
                println!("{} {}", tier.name(), s.tiers.get(tier));
            }
        }
        Command::AuctionSim {
            auctions,
            delay,
            discovery_mean,
            public_bidders,
            start_price,
            end_price,
            duration,
            seed,
            out,
        } => {
            if duration == 0 || end_price.is_negative() || start_price < end_price {
                return Err(Failure::Usage(anyhow::anyhow!(
                    "need duration > 0 and start price >= end price >= 0"
                )));
            }
            if !(discovery_mean.is_finite() && discovery_mean >= 1.0) {
                return Err(Failure::Usage(anyhow::anyhow!("--discovery-mean must be at least 1")));
            }
            let cfg = CollusionConfig {
                auctions,
                delay_blocks: delay,
                discovery_mean_blocks: discovery_mean,
                public_bidders,
                start_price,
                end_price,
                duration_blocks: duration,
                seed,
            };
            let report = collusion_experiment(&cfg);
            let summary = format!(
                "colluder_wins {} public_wins {} colluder_win_rate {:.4} mean_winning_price {}",
                report.colluder_wins,
                report.public_wins,
                report.colluder_win_rate(),
                report.mean_winning_price
            );
            match out {
                Some(p) => {
                    write_or_print(Some(&p), &report.to_csv())?;
                    println!("{summary}");
                }
                None => {
                    print!("{}", report.to_csv());
                    eprintln!("{summary}");
                }
            }
        }
        Command::MarketSim { config, seed, out, replicates, sequential } => {
            let mut cfg = ScenarioConfig::load(&config).map_err(|e| Failure::Usage(e.into()))?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if replicates == 0 {
                return Err(Failure::Usage(anyhow::anyhow!("--replicates must be positive")));
            }
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let output = run_simulation_with_trades(&cfg).context("simulation failed")?;
            fs::write(out.join("report.json"), output.report.to_json() + "\n")
                .context("writing report.json")?;
            fs::write(out.join("trades.csv"), trades_csv(&output.trades)).context("writing trades.csv")?;
            if replicates > 1 {
                let exec = if sequential { Execution::Sequential } else { Execution::Parallel };
                let seeds: Vec<u64> = (0..replicates).map(|i| cfg.seed.wrapping_add(i)).collect();
                let reports = run_batch(&cfg, &seeds, exec).context("simulation failed")?;
                let summary = BatchSummary::from_reports(&reports);
                let json = serde_json::to_string_pretty(&summary).context("serializing summary")?;
                fs::write(out.join("summary.json"), json + "\n").context("writing summary.json")?;
            }
            let r = &output.report;
            println!(
                "scenario {} seed {} gini {:.4} informed_advantage {:.4}",
                r.scenario_id, r.rng_seed, r.gini, r.informed_advantage
            );
            for f in &r.condition_flags {
                println!("condition {} {}", f.condition, if f.satisfied { "met" } else { "violated" });
            }
        }
    }
    Ok(())
}

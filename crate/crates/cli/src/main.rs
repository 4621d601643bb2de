//! `lab` — build hand abstractions for Numeral211 hold'em, train CFR
//! strategies on them, and measure exact exploitability.
//!
//! Exit codes: 0 success, 1 mismatch or assertion failure, 2 usage errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use numeral211::abstraction::AbstractionMap;
use numeral211::game::{GameRules, HandOrder, PHASES};
use numeral211::harness::{
    cache_dir, compute_counts, expected_counts_builtin, load_expected_counts, reproduce,
    run_checkpoints, AlgoSpec, EvalRow, ExperimentConfig, Lab, Protocol,
};
use numeral211::solver::{Binding, Trainer};

#[derive(Parser)]
#[command(name = "lab", version, about)]
struct Cli {
    /// Override the hand-rank category order, strongest first
    /// (e.g. "sf,trips,straight,flush,pair,high").
    #[arg(long, global = true)]
    hand_order: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recompute the per-phase class-count table from scratch and diff it
    /// against the expected constants.
    Counts {
        /// TOML file with the expected counts (defaults to the built-in
        /// table, also checked in under data/expected_counts.toml).
        #[arg(long)]
        expected: Option<PathBuf>,
    },
    /// Build or refresh feature caches for one phase.
    Features {
        #[arg(long)]
        phase: u8,
        /// Recall depth of the cached records (0 = plain winrates).
        #[arg(long, default_value_t = 0)]
        k: u8,
        /// Output file (defaults to the cache directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build an abstraction map and write it to a file.
    Abstract(AbstractArgs),
    /// Train a strategy profile with chance-sampled CFR.
    Train {
        /// Player 1's abstraction map.
        #[arg(long)]
        map1: PathBuf,
        /// Player 2's abstraction map.
        #[arg(long)]
        map2: PathBuf,
        #[arg(long)]
        iters: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (>1 sacrifices bitwise determinism).
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Weight average-strategy contributions by iteration number
        /// instead of uniformly.
        #[arg(long)]
        linear_averaging: bool,
        /// Also write intermediate profiles every N iterations.
        #[arg(long)]
        checkpoint_every: Option<u64>,
    },
    /// Train under a protocol and report exact exploitability.
    Eval {
        /// sym: both seats use --map. asym: each seat is trained against
        /// an unabstracted (lossless) opponent and the two abstracted
        /// seats are concatenated.
        #[arg(long, value_parser = ["sym", "asym"])]
        mode: String,
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        iters: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Append rows to this CSV file (header written if new).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run a declarative experiment sweep: build, train, evaluate, emit
    /// CSV + SVG + manifest.
    Reproduce {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "experiments")]
        out_dir: PathBuf,
    },
    /// Small-scale property suites (count oracles, EMD cross-checks,
    /// resolution bounds, exploitability sanity, cache tampering).
    Selftest,
}

#[derive(Args)]
struct AbstractArgs {
    /// Algorithm: li, poi, krwi, ehs, paaa, paaemd, krwemd, or a
    /// comma-separated per-phase composition like "poi,poi,krwemd".
    #[arg(long)]
    algo: String,
    /// Per-phase bucket counts, ascending phases: "100,225,396".
    #[arg(long)]
    buckets: Option<String>,
    /// Per-phase recall depths, ascending phases: "0,1,2".
    #[arg(long)]
    k: Option<String>,
    /// Per-phase recall block weights, ascending phases, current phase
    /// first within each block: "1:4,1:16,4,1".
    #[arg(long)]
    weights: Option<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    restarts: Option<u32>,
    #[arg(long)]
    max_iters: Option<u32>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn rules_with_order(hand_order: &Option<String>) -> Result<GameRules, numeral211::Error> {
    let mut rules = GameRules::default();
    if let Some(order) = hand_order {
        rules.hand_order = HandOrder::parse(order)?;
    }
    Ok(rules)
}

fn run(cli: Cli) -> Result<(), numeral211::Error> {
    let rules = rules_with_order(&cli.hand_order)?;
    match cli.command {
        Command::Counts { expected } => {
            let lab = Lab::with_rules(rules)?;
            let computed = compute_counts(&lab);
            print!("{}", computed.render());
            let want = match expected {
                Some(path) => load_expected_counts(path)?,
                None => expected_counts_builtin(),
            };
            computed.check(&want)?;
            println!("all counts match");
            Ok(())
        }
        Command::Features { phase, k, out } => {
            let lab = Lab::with_rules(rules)?;
            let path = match out {
                Some(p) => p,
                None => {
                    let dir = cache_dir();
                    std::fs::create_dir_all(&dir)?;
                    dir.join(format!("features-phase{phase}-k{k}.bin"))
                }
            };
            lab.features.save_phase(phase, k, &path)?;
            println!(
                "wrote {} records ({} classes, recall {k}) to {}",
                lab.features.class_count(phase) * (k as usize + 1),
                lab.features.class_count(phase),
                path.display()
            );
            Ok(())
        }
        Command::Abstract(args) => {
            let lab = Lab::with_rules(rules)?;
            let spec = parse_algo_spec(&args)?;
            let map = spec.build(&lab, args.seed)?;
            map.save(&args.out)?;
            println!(
                "algorithm {} buckets {}/{}/{} -> {}",
                map.meta.algorithm,
                map.bucket_count(1),
                map.bucket_count(2),
                map.bucket_count(3),
                args.out.display()
            );
            Ok(())
        }
        Command::Train {
            map1,
            map2,
            iters,
            seed,
            out,
            threads,
            linear_averaging,
            checkpoint_every,
        } => {
            let lab = Lab::with_rules(rules)?;
            let m1 = AbstractionMap::load(&map1, &lab.features)?;
            let m2 = AbstractionMap::load(&map2, &lab.features)?;
            let binding = Binding {
                game: &lab.game,
                iso: &lab.iso,
                maps: [&m1, &m2],
            };
            let mut trainer = Trainer::new(binding, seed);
            trainer.set_linear_averaging(linear_averaging);
            let mut done = 0u64;
            let slice = checkpoint_every.unwrap_or(iters).max(1);
            while done < iters {
                let step = slice.min(iters - done);
                if threads > 1 {
                    trainer.run_parallel(step, threads);
                } else {
                    trainer.run(step);
                }
                done += step;
                if done < iters && checkpoint_every.is_some() {
                    let ckpt = out.with_extension(format!("{done}.bin"));
                    trainer.profile().save(&ckpt)?;
                    println!("checkpoint {done} -> {}", ckpt.display());
                }
            }
            let profile = trainer.into_profile();
            profile.save(&out)?;
            println!(
                "trained {iters} iterations (seed {seed}) -> {}",
                out.display()
            );
            Ok(())
        }
        Command::Eval {
            mode,
            map,
            iters,
            seed,
            csv,
        } => {
            let lab = Lab::with_rules(rules)?;
            let map = AbstractionMap::load(&map, &lab.features)?;
            let protocol = if mode == "sym" {
                Protocol::Sym
            } else {
                Protocol::Asym
            };
            let null_map = numeral211::abstraction::build_li(&lab.features);
            let rows = run_checkpoints(
                &lab,
                &map.meta.algorithm,
                &map,
                Some(&null_map),
                protocol,
                seed,
                &[iters],
                Some(&cache_dir().join("runs")),
            )?;
            let row = &rows[0];
            println!(
                "{} {} seed {} iters {}: exploitability {:.3} mb/g (br1 {:.4}, br2 {:.4} chips)",
                row.algorithm, row.params, row.seed, row.iterations, row.eps_mb_per_g, row.br1,
                row.br2
            );
            if let Some(path) = csv {
                let mut text = if path.exists() {
                    std::fs::read_to_string(&path)?
                } else {
                    format!("{}\n", EvalRow::csv_header())
                };
                text.push_str(&row.to_csv());
                text.push('\n');
                std::fs::write(&path, text)?;
            }
            Ok(())
        }
        Command::Reproduce { config, out_dir } => {
            let lab = Lab::with_rules(rules)?;
            let cfg = ExperimentConfig::load(&config)?;
            let outcome = reproduce(&lab, &cfg, &out_dir)?;
            for f in outcome.files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::Selftest => numeral211::harness::selftest(|name, ok| {
            println!("{} {name}", if ok { "PASS" } else { "FAIL" });
        }),
    }
}

fn parse_algo_spec(args: &AbstractArgs) -> Result<AlgoSpec, numeral211::Error> {
    let mut spec = AlgoSpec::named(&args.algo);
    if let Some(b) = &args.buckets {
        spec.buckets = Some(parse_triple(b, "buckets")?);
    }
    if let Some(k) = &args.k {
        let v = parse_triple(k, "k")?;
        spec.k = Some([v[0] as u8, v[1] as u8, v[2] as u8]);
    }
    if let Some(w) = &args.weights {
        let groups: Vec<Vec<f64>> = w
            .split(':')
            .map(|g| {
                g.split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<f64>()
                            .map_err(|_| numeral211::Error::Config(format!("bad weight {x:?}")))
                    })
                    .collect()
            })
            .collect::<Result<_, _>>()?;
        if groups.len() > PHASES {
            return Err(numeral211::Error::Config(
                "at most one weight group per phase".into(),
            ));
        }
        // Missing leading groups default to a single unit weight (early
        // phases have little history to weight).
        let mut full: Vec<Vec<f64>> = vec![vec![1.0]; PHASES - groups.len()];
        full.extend(groups);
        spec.weights = Some(full);
    }
    spec.restarts = args.restarts;
    spec.max_iters = args.max_iters;
    Ok(spec)
}

fn parse_triple(s: &str, what: &str) -> Result<[usize; PHASES], numeral211::Error> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != PHASES {
        return Err(numeral211::Error::Config(format!(
            "--{what} needs {PHASES} comma-separated values"
        )));
    }
    let mut out = [0usize; PHASES];
    for (i, p) in parts.iter().enumerate() {
        out[i] = p
            .trim()
            .parse()
            .map_err(|_| numeral211::Error::Config(format!("bad {what} value {p:?}")))?;
    }
    Ok(out)
}

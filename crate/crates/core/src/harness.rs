//! Experiment orchestration: the class-count table, declarative experiment
//! configs, cached train+evaluate runs, CSV/manifest/plot emission, and the
//! quick self-test suites behind `lab selftest`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::abstraction::{
    build_composed, build_ehs, build_krwemd, build_krwi, build_li, build_paaa, build_paaemd,
    build_poi, partition_refines, AbstractionMap, ClusterParams, PhaseSpec,
};
use crate::evaluator::{Evaluator, Translated};
use crate::features::Features;
use crate::game::{Game, GameRules, PHASES};
use crate::iso::IsoTables;
use crate::plot::{line_plot, Series};
use crate::solver::{Binding, Trainer};
use crate::util::Fnv64;
use crate::{Error, Result};

/// Version stamp for cached run results; bump to invalidate.
const RUN_FORMAT_VERSION: u32 = 1;

/// Everything the pipelines share: the game, canonical tables and feature
/// tables, built once.
pub struct Lab {
    pub game: Game,
    pub iso: IsoTables,
    pub features: Features,
}

impl Lab {
    pub fn new() -> Lab {
        Lab::with_rules(GameRules::default()).expect("default rules are valid")
    }

    pub fn with_rules(rules: GameRules) -> Result<Lab> {
        let game = Game::new(rules)?;
        let iso = IsoTables::build(game.num_cards());
        let features = Features::build(&game, &iso);
        Ok(Lab {
            game,
            iso,
            features,
        })
    }
}

impl Default for Lab {
    fn default() -> Self {
        Lab::new()
    }
}

/// Cache directory: `$N211_CACHE_DIR` or `./cache`.
pub fn cache_dir() -> PathBuf {
    std::env::var_os("N211_CACHE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("cache"))
}

// ---------------------------------------------------------------------
// Class-count table

/// Per-phase equivalence-class counts of the canonical partitions,
/// recomputed from scratch. The recall row carries one count per
/// recall depth and phase.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsTable {
    pub null: [u64; PHASES],
    pub li: [u64; PHASES],
    pub poi: [u64; PHASES],
    pub krwi: [Vec<u64>; PHASES],
}

pub fn compute_counts(lab: &Lab) -> CountsTable {
    let n = lab.game.num_cards();
    let mut krwi: [Vec<u64>; PHASES] = Default::default();
    for phase in 1..=PHASES as u8 {
        krwi[phase as usize - 1] = (0..phase)
            .map(|k| lab.features.krwi_ids(phase, k).unwrap().1 as u64)
            .collect();
    }
    CountsTable {
        null: [
            crate::game::observation_count(n, 1),
            crate::game::observation_count(n, 2),
            crate::game::observation_count(n, 3),
        ],
        li: [
            lab.iso.class_count(1) as u64,
            lab.iso.class_count(2) as u64,
            lab.iso.class_count(3) as u64,
        ],
        poi: [
            lab.features.poi_ids(1).1 as u64,
            lab.features.poi_ids(2).1 as u64,
            lab.features.poi_ids(3).1 as u64,
        ],
        krwi,
    }
}

impl CountsTable {
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("partition   phase1      phase2            phase3\n");
        out.push_str(&format!(
            "null        {:<11} {:<17} {}\n",
            self.null[0], self.null[1], self.null[2]
        ));
        out.push_str(&format!(
            "li          {:<11} {:<17} {}\n",
            self.li[0], self.li[1], self.li[2]
        ));
        out.push_str(&format!(
            "poi         {:<11} {:<17} {}\n",
            self.poi[0], self.poi[1], self.poi[2]
        ));
        let fmt_k = |v: &Vec<u64>| {
            v.iter()
                .enumerate()
                .map(|(k, c)| format!("k{k}={c}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        out.push_str(&format!(
            "krwi        {:<11} {:<17} {}\n",
            fmt_k(&self.krwi[0]),
            fmt_k(&self.krwi[1]),
            fmt_k(&self.krwi[2])
        ));
        out
    }

    /// Compare against the expected table, returning a human-readable diff
    /// on mismatch.
    pub fn check(&self, expected: &CountsTable) -> Result<()> {
        if self == expected {
            return Ok(());
        }
        let mut diff = String::new();
        let rows = [
            ("null", &self.null, &expected.null),
            ("li", &self.li, &expected.li),
            ("poi", &self.poi, &expected.poi),
        ];
        for (name, got, want) in rows {
            for p in 0..PHASES {
                if got[p] != want[p] {
                    diff.push_str(&format!(
                        "{name} phase{}: computed {} expected {}; ",
                        p + 1,
                        got[p],
                        want[p]
                    ));
                }
            }
        }
        for p in 0..PHASES {
            if self.krwi[p] != expected.krwi[p] {
                diff.push_str(&format!(
                    "krwi phase{}: computed {:?} expected {:?}; ",
                    p + 1,
                    self.krwi[p],
                    expected.krwi[p]
                ));
            }
        }
        Err(Error::CountMismatch(diff))
    }
}

pub fn load_expected_counts<P: AsRef<Path>>(path: P) -> Result<CountsTable> {
    let text = fs::read_to_string(&path)?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{e}")))
}

// ---------------------------------------------------------------------
// Abstraction specs

/// Named abstraction algorithm with parameters, parseable from CLI and
/// config files.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AlgoSpec {
    /// One name, or three comma-separated per-phase names for composed
    /// pipelines ("poi,poi,krwemd").
    pub algo: String,
    #[serde(default)]
    pub buckets: Option<[usize; PHASES]>,
    #[serde(default)]
    pub k: Option<[u8; PHASES]>,
    /// Per-phase recall block weights, ascending phases.
    #[serde(default)]
    pub weights: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub restarts: Option<u32>,
    #[serde(default)]
    pub max_iters: Option<u32>,
}

impl AlgoSpec {
    pub fn named(algo: &str) -> AlgoSpec {
        AlgoSpec {
            algo: algo.to_string(),
            buckets: None,
            k: None,
            weights: None,
            restarts: None,
            max_iters: None,
        }
    }

    pub fn cluster_params(&self) -> ClusterParams {
        let mut p = ClusterParams::default();
        if let Some(r) = self.restarts {
            p.restarts = r;
        }
        if let Some(m) = self.max_iters {
            p.max_iters = m;
        }
        p
    }

    fn weights_for(&self, phase: u8, k: u8) -> Vec<f64> {
        self.weights
            .as_ref()
            .and_then(|w| w.get(phase as usize - 1).cloned())
            .unwrap_or_else(|| vec![1.0; k as usize + 1])
    }

    /// Build the map this spec describes.
    pub fn build(&self, lab: &Lab, seed: u64) -> Result<AbstractionMap> {
        let params = self.cluster_params();
        let iso = &lab.iso;
        let features = &lab.features;
        let need_buckets = || {
            self.buckets
                .ok_or_else(|| Error::Config(format!("{} requires --buckets", self.algo)))
        };
        if self.algo.contains(',') {
            let names: Vec<&str> = self.algo.split(',').collect();
            if names.len() != PHASES {
                return Err(Error::Config(
                    "composed specs need one algorithm per phase".into(),
                ));
            }
            let mut specs: Vec<PhaseSpec> = Vec::new();
            for (i, name) in names.iter().enumerate() {
                let phase = i as u8 + 1;
                specs.push(match *name {
                    "li" => PhaseSpec::Li,
                    "poi" => PhaseSpec::Poi,
                    "krwi" => PhaseSpec::Krwi {
                        k: self.k.map(|k| k[i]).unwrap_or(phase - 1),
                    },
                    "ehs" => PhaseSpec::Ehs {
                        m: need_buckets()?[i],
                    },
                    "paaa" => PhaseSpec::Paa {
                        m: need_buckets()?[i],
                        emd: false,
                    },
                    "paaemd" => PhaseSpec::Paa {
                        m: need_buckets()?[i],
                        emd: true,
                    },
                    "krwemd" => {
                        let k = self.k.map(|k| k[i]).unwrap_or(phase - 1);
                        PhaseSpec::KrwEmd {
                            m: need_buckets()?[i],
                            k,
                            weights: self.weights_for(phase, k),
                        }
                    }
                    other => {
                        return Err(Error::Config(format!("unknown phase algorithm {other:?}")))
                    }
                });
            }
            let arr: [PhaseSpec; PHASES] = specs.try_into().expect("length checked");
            return build_composed(iso, features, &arr, seed, &params);
        }
        match self.algo.as_str() {
            "li" => Ok(build_li(features)),
            "poi" => Ok(build_poi(features)),
            "krwi" => build_krwi(features, self.k.unwrap_or([0, 1, 2])),
            "ehs" => build_ehs(iso, features, need_buckets()?, seed, &params),
            "paaa" => build_paaa(iso, features, need_buckets()?, seed, &params),
            "paaemd" => build_paaemd(iso, features, need_buckets()?, seed, &params),
            "krwemd" => {
                let k = self.k.unwrap_or([0, 1, 2]);
                let weights: [Vec<f64>; PHASES] = [
                    self.weights_for(1, k[0]),
                    self.weights_for(2, k[1]),
                    self.weights_for(3, k[2]),
                ];
                build_krwemd(iso, features, need_buckets()?, k, &weights, seed, &params)
            }
            other => Err(Error::Config(format!("unknown algorithm {other:?}"))),
        }
    }
}

// ---------------------------------------------------------------------
// Cached runs

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Sym,
    Asym,
}

/// One CSV row: an evaluation of one trained setup at one checkpoint.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EvalRow {
    pub algorithm: String,
    pub params: String,
    pub seed: u64,
    pub iterations: u64,
    pub eps_mb_per_g: f64,
    pub br1: f64,
    pub br2: f64,
}

impl EvalRow {
    pub fn csv_header() -> &'static str {
        "algorithm,params,seed,iterations,eps_mb_per_g,br1,br2"
    }

    pub fn to_csv(&self) -> String {
        // Free-text fields are kept comma-free so rows parse by splitting.
        format!(
            "{},{},{},{},{},{},{}",
            self.algorithm.replace(',', "/"),
            self.params.replace(',', "/"),
            self.seed,
            self.iterations,
            self.eps_mb_per_g,
            self.br1,
            self.br2
        )
    }

    pub fn from_csv(line: &str) -> Result<EvalRow> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(Error::Config(format!("bad csv row: {line:?}")));
        }
        let err = |e: std::num::ParseFloatError| Error::Config(e.to_string());
        Ok(EvalRow {
            algorithm: f[0].to_string(),
            params: f[1].to_string(),
            seed: f[2].parse().map_err(|_| Error::Config("bad seed".into()))?,
            iterations: f[3]
                .parse()
                .map_err(|_| Error::Config("bad iterations".into()))?,
            eps_mb_per_g: f[4].parse().map_err(err)?,
            br1: f[5].parse().map_err(err)?,
            br2: f[6].parse().map_err(err)?,
        })
    }
}

/// Train on a map (symmetric or one-sided pair) and evaluate exact
/// exploitability at each checkpoint. Results are cached on disk keyed by
/// every input that affects them; `N211_NO_RUN_CACHE=1` disables the
/// cache.
#[allow(clippy::too_many_arguments)]
pub fn run_checkpoints(
    lab: &Lab,
    algorithm: &str,
    map: &AbstractionMap,
    null_map: Option<&AbstractionMap>,
    protocol: Protocol,
    seed: u64,
    checkpoints: &[u64],
    cache: Option<&Path>,
) -> Result<Vec<EvalRow>> {
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) || checkpoints.is_empty() {
        return Err(Error::Config(
            "checkpoint schedule must be nonempty and strictly increasing".into(),
        ));
    }
    let mut key = Fnv64::new();
    key.write_u32(RUN_FORMAT_VERSION)
        .write_u64(map.hash())
        .write_u64(null_map.map_or(0, |m| m.hash()))
        .write_u64(seed)
        .write_u64(match protocol {
            Protocol::Sym => 1,
            Protocol::Asym => 2,
        });
    for &c in checkpoints {
        key.write_u64(c);
    }
    let key = key.finish();
    let cache_file = cache.map(|dir| dir.join(format!("run-{key:016x}.json")));
    let use_cache = std::env::var_os("N211_NO_RUN_CACHE").is_none();
    if use_cache {
        if let Some(path) = &cache_file {
            if let Ok(text) = fs::read_to_string(path) {
                if let Ok(rows) = serde_json::from_str::<Vec<EvalRow>>(&text) {
                    return Ok(rows);
                }
            }
        }
    }

    let evaluator = Evaluator::new(&lab.game, &lab.iso);
    let mut rows = Vec::new();
    match protocol {
        Protocol::Sym => {
            let binding = Binding {
                game: &lab.game,
                iso: &lab.iso,
                maps: [map, map],
            };
            let mut trainer = Trainer::new(binding, seed);
            let mut done = 0u64;
            for &target in checkpoints {
                trainer.run(target - done);
                done = target;
                let profile = trainer.profile();
                let strategy = Translated {
                    profiles: [profile, profile],
                    maps: [map, map],
                };
                let report = evaluator.exploitability(&strategy);
                rows.push(EvalRow {
                    algorithm: algorithm.to_string(),
                    params: map.meta.params.clone(),
                    seed,
                    iterations: target,
                    eps_mb_per_g: report.exploitability_mb,
                    br1: report.br_chips[0],
                    br2: report.br_chips[1],
                });
            }
        }
        Protocol::Asym => {
            let null_map = null_map.ok_or_else(|| {
                Error::Config("one-sided protocol requires the lossless null map".into())
            })?;
            let binding_a = Binding {
                game: &lab.game,
                iso: &lab.iso,
                maps: [map, null_map],
            };
            let binding_b = Binding {
                game: &lab.game,
                iso: &lab.iso,
                maps: [null_map, map],
            };
            let mut trainer_a = Trainer::new(binding_a, seed);
            let mut trainer_b = Trainer::new(binding_b, seed);
            let mut done = 0u64;
            for &target in checkpoints {
                trainer_a.run(target - done);
                trainer_b.run(target - done);
                done = target;
                let strategy = Translated {
                    profiles: [trainer_a.profile(), trainer_b.profile()],
                    maps: [map, map],
                };
                let report = evaluator.exploitability(&strategy);
                rows.push(EvalRow {
                    algorithm: algorithm.to_string(),
                    params: map.meta.params.clone(),
                    seed,
                    iterations: target,
                    eps_mb_per_g: report.exploitability_mb,
                    br1: report.br_chips[0],
                    br2: report.br_chips[1],
                });
            }
        }
    }

    if use_cache {
        if let Some(path) = &cache_file {
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, serde_json::to_string_pretty(&rows).unwrap())?;
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------------
// Declarative experiments

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    /// Evaluation checkpoints (iteration counts), strictly increasing.
    pub checkpoints: Vec<u64>,
    pub seeds: Vec<u64>,
    pub protocols: Vec<Protocol>,
    #[serde(rename = "abstraction")]
    pub abstractions: Vec<AlgoSpec>,
}

impl ExperimentConfig {
    pub fn load<P: AsRef<Path>>(path: P) -> Result<ExperimentConfig> {
        let text = fs::read_to_string(&path)?;
        let cfg: ExperimentConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.checkpoints.is_empty() || self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "checkpoints must be nonempty and strictly increasing".into(),
            ));
        }
        if self.seeds.is_empty() || self.protocols.is_empty() || self.abstractions.is_empty() {
            return Err(Error::Config(
                "seeds, protocols and abstractions must be nonempty".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of a reproduction sweep: all evaluation rows plus the files
/// written.
pub struct ReproduceOutcome {
    pub rows_by_protocol: BTreeMap<String, Vec<EvalRow>>,
    pub files: Vec<PathBuf>,
}

/// Run a full experiment sweep: build every abstraction for every seed,
/// train under every protocol, evaluate at every checkpoint, and emit CSV
/// + SVG + a manifest into `out_dir`.
pub fn reproduce(lab: &Lab, config: &ExperimentConfig, out_dir: &Path) -> Result<ReproduceOutcome> {
    config.validate()?;
    fs::create_dir_all(out_dir)?;
    let run_cache = cache_dir().join("runs");
    let null_map = build_li(&lab.features);

    let mut rows_by_protocol: BTreeMap<String, Vec<EvalRow>> = BTreeMap::new();
    let mut manifest_runs = Vec::new();
    for spec in &config.abstractions {
        for &seed in &config.seeds {
            let map = spec.build(lab, seed)?;
            for &protocol in &config.protocols {
                let rows = run_checkpoints(
                    lab,
                    &spec.algo,
                    &map,
                    Some(&null_map),
                    protocol,
                    seed,
                    &config.checkpoints,
                    Some(&run_cache),
                )?;
                manifest_runs.push(serde_json::json!({
                    "algorithm": spec.algo,
                    "params": map.meta.params,
                    "map_hash": format!("{:016x}", map.hash()),
                    "seed": seed,
                    "protocol": match protocol { Protocol::Sym => "sym", Protocol::Asym => "asym" },
                    "checkpoints": config.checkpoints,
                }));
                let label = match protocol {
                    Protocol::Sym => "sym",
                    Protocol::Asym => "asym",
                };
                rows_by_protocol.entry(label.to_string()).or_default().extend(rows);
            }
        }
    }

    let mut files = Vec::new();
    for (protocol, rows) in &rows_by_protocol {
        // CSV.
        let csv_path = out_dir.join(format!("{}-{}.csv", config.name, protocol));
        let mut csv = String::from(EvalRow::csv_header());
        csv.push('\n');
        for row in rows {
            csv.push_str(&row.to_csv());
            csv.push('\n');
        }
        fs::write(&csv_path, csv)?;
        files.push(csv_path);

        // Plot: mean exploitability per algorithm across seeds.
        let mut series: BTreeMap<String, BTreeMap<u64, (f64, u32)>> = BTreeMap::new();
        for row in rows {
            let label = if row.params.is_empty() {
                row.algorithm.clone()
            } else {
                format!("{} {}", row.algorithm, row.params)
            };
            let slot = series
                .entry(label)
                .or_default()
                .entry(row.iterations)
                .or_insert((0.0, 0));
            slot.0 += row.eps_mb_per_g;
            slot.1 += 1;
        }
        let series: Vec<Series> = series
            .into_iter()
            .map(|(name, pts)| Series {
                name,
                points: pts
                    .into_iter()
                    .map(|(x, (sum, cnt))| (x as f64, sum / cnt as f64))
                    .collect(),
            })
            .collect();
        let svg = line_plot(
            &format!("{} ({protocol})", config.name),
            "iterations",
            "exploitability (mb/g)",
            &series,
        );
        let svg_path = out_dir.join(format!("{}-{}.svg", config.name, protocol));
        fs::write(&svg_path, svg)?;
        files.push(svg_path);
    }

    // Manifest: everything needed to reproduce the sweep bit-exactly.
    let manifest = serde_json::json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": config.name,
        "feature_hash": format!("{:016x}", lab.features.content_hash()),
        "single_threaded_training": true,
        "runs": manifest_runs,
    });
    let manifest_path = out_dir.join(format!("{}-manifest.json", config.name));
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest).unwrap())?;
    files.push(manifest_path);

    Ok(ReproduceOutcome {
        rows_by_protocol,
        files,
    })
}

// ---------------------------------------------------------------------
// Self test

/// Small-scale property suites; each returns Ok or a description of the
/// first failure. Runs in well under the ten-minute budget.
pub fn selftest<F: FnMut(&str, bool)>(mut report: F) -> Result<()> {
    let mut all_ok = true;
    let mut check = |name: &str, r: std::result::Result<(), String>, report: &mut F| {
        let ok = r.is_ok();
        all_ok &= ok;
        report(name, ok);
        if let Err(e) = r {
            eprintln!("  {name}: {e}");
        }
    };

    // Full-deck class counts against the pinned expectations.
    let lab = Lab::new();
    check(
        "class counts",
        {
            let computed = compute_counts(&lab);
            let expected = expected_counts_builtin();
            computed.check(&expected).map_err(|e| e.to_string())
        },
        &mut report,
    );

    // EMD: fast path against the transportation simplex.
    check(
        "emd routes agree",
        {
            use crate::clustering::{emd, transport_simplex, GroundDistanceMatrix};
            use rand::Rng;
            use rand_chacha::rand_core::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
            let d = GroundDistanceMatrix::unit_steps(3);
            let mut worst = 0.0f64;
            for _ in 0..500 {
                let mut p = [0.0f64; 3];
                let mut q = [0.0f64; 3];
                for v in p.iter_mut() {
                    *v = rng.random::<f64>();
                }
                for v in q.iter_mut() {
                    *v = rng.random::<f64>();
                }
                let ps: f64 = p.iter().sum();
                let qs: f64 = q.iter().sum();
                p.iter_mut().for_each(|v| *v /= ps);
                q.iter_mut().for_each(|v| *v /= qs);
                let fast = emd(&p, &q, &d).unwrap();
                let slow = transport_simplex(&p, &q, |i, j| d.get(i, j));
                worst = worst.max((fast - slow).abs());
            }
            if worst < 1e-9 {
                Ok(())
            } else {
                Err(format!("max deviation {worst}"))
            }
        },
        &mut report,
    );

    // Resolution bounds on a reduced deck.
    let small = Lab::with_rules(GameRules::with_ranks(6))?;
    check(
        "outcome partition bounds clustering",
        (|| {
            let mut failure = None;
            for seed in [1u64, 2] {
                let map = build_paaemd(
                    &small.iso,
                    &small.features,
                    [6, 10, 14],
                    seed,
                    &ClusterParams::default(),
                )
                .map_err(|e| e.to_string())?;
                for phase in 1..=PHASES as u8 {
                    let (poi, count) = small.features.poi_ids(phase);
                    if !partition_refines(poi, count, map.assignment(phase)) {
                        failure = Some(format!("phase {phase} seed {seed}"));
                    }
                }
            }
            failure.map_or(Ok(()), Err)
        })(),
        &mut report,
    );

    // Zero-sum and nonnegative exploitability on the reduced deck.
    check(
        "exploitability sane",
        {
            let ev = Evaluator::new(&small.game, &small.iso);
            let report = ev.exploitability(&crate::evaluator::UniformStrategy);
            if report.exploitability_chips >= -1e-9 {
                Ok(())
            } else {
                Err(format!("negative exploitability {}", report.exploitability_chips))
            }
        },
        &mut report,
    );

    // Cache tampering is detected.
    check(
        "cache hash mismatch detected",
        (|| {
            let dir = std::env::temp_dir().join(format!("n211-selftest-{}", std::process::id()));
            fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
            let path = dir.join("wr.bin");
            small
                .features
                .save_phase(2, 1, &path)
                .map_err(|e| e.to_string())?;
            let mut bytes = fs::read(&path).map_err(|e| e.to_string())?;
            let mid = bytes.len() / 2;
            bytes[mid] ^= 0xff;
            fs::write(&path, &bytes).map_err(|e| e.to_string())?;
            let r = small.features.load_phase(2, 1, &path);
            fs::remove_dir_all(&dir).ok();
            if r.is_err() {
                Ok(())
            } else {
                Err("tampered cache loaded silently".to_string())
            }
        })(),
        &mut report,
    );

    if all_ok {
        Ok(())
    } else {
        Err(Error::CountMismatch("selftest failed".into()))
    }
}

/// The expected class counts, compiled in (the on-disk copy under data/
/// is for the CLI).
pub fn expected_counts_builtin() -> CountsTable {
    CountsTable {
        null: [780, 29640, 1_096_680],
        li: [100, 2260, 62020],
        poi: [100, 2250, 3957],
        krwi: [vec![100], vec![2234, 2248], vec![3957, 51000, 51070]],
    }
}

//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the measured numbers (visible with `--nocapture`; the per-test
//! ok/FAILED line is the machine-readable verdict).
//!
//! The heavy criteria train real strategies at the pinned iteration
//! budgets and take hours in total on a small machine. Finished
//! train+evaluate results are cached under `target/acceptance-runs`;
//! delete that directory (or set N211_NO_RUN_CACHE=1) to recompute
//! everything from scratch.

mod common;

use std::path::PathBuf;
use std::sync::{Mutex, OnceLock};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use numeral211::abstraction::{
    build_ehs, build_krwemd, build_krwi, build_li, build_paaa, build_paaemd, build_poi,
    partition_refines, AbstractionMap, ClusterParams,
};
use numeral211::clustering::{emd, GroundDistanceMatrix};
use numeral211::evaluator::{
    node_groups, BehaviorStrategy, Evaluator, PreparedSigma, Translated, UniformStrategy,
};
use numeral211::features::Features;
use numeral211::game::{
    Action, Card, Game, GameRules, Player, PublicTree, Signal,
    PHASES,
};
use numeral211::harness::{
    compute_counts, expected_counts_builtin, run_checkpoints, EvalRow, Lab, Protocol,
};
use numeral211::iso::{num_pairs, IsoTables};
use numeral211::solver::{train, Binding, Trainer};

const CHECKPOINTS: [u64; 3] = [1_000_000, 10_000_000, 100_000_000];
const FULL_BUDGET: u64 = 100_000_000;
const SEEDS: [u64; 3] = [1, 2, 3];

fn lab() -> &'static Lab {
    static LAB: OnceLock<Lab> = OnceLock::new();
    LAB.get_or_init(Lab::new)
}

fn null_map() -> &'static AbstractionMap {
    static MAP: OnceLock<AbstractionMap> = OnceLock::new();
    MAP.get_or_init(|| build_li(&lab().features))
}

fn run_cache() -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../target/acceptance-runs");
    std::fs::create_dir_all(&dir).expect("cache dir");
    dir
}

/// Trainings of different criteria are serialized against each other so
/// peak memory stays bounded; each block parallelizes internally.
fn heavy_lock() -> std::sync::MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap()
}

/// Order-preserving parallel map with a fixed worker count.
fn pmap<J: Send, T: Send, F: Fn(J) -> T + Sync>(jobs: Vec<J>, workers: usize, f: F) -> Vec<T> {
    let n = jobs.len();
    let queue: Mutex<Vec<(usize, J)>> = Mutex::new(jobs.into_iter().enumerate().rev().collect());
    let results: Mutex<Vec<Option<T>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers.max(1) {
            scope.spawn(|| loop {
                let Some((i, job)) = queue.lock().unwrap().pop() else {
                    return;
                };
                let out = f(job);
                results.lock().unwrap()[i] = Some(out);
            });
        }
    });
    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|o| o.expect("worker finished"))
        .collect()
}

/// The lossless symmetric reference run shared by criteria 5 and 6.
fn li_seed1_rows() -> &'static Vec<EvalRow> {
    static ROWS: OnceLock<Vec<EvalRow>> = OnceLock::new();
    ROWS.get_or_init(|| {
        run_checkpoints(
            lab(),
            "li",
            null_map(),
            None,
            Protocol::Sym,
            SEEDS[0],
            &CHECKPOINTS,
            Some(&run_cache()),
        )
        .expect("reference run")
    })
}

// -------------------------------------------------------------------
// Criterion 1: exact class-count table, computed from scratch.

#[test]
fn criterion_1_class_count_table() {
    let computed = compute_counts(lab());
    let expected = expected_counts_builtin();
    computed.check(&expected).expect("counts differ");
    println!(
        "CRITERION 1: PASS — null {:?}, lossless {:?}, outcome {:?}, recall {:?} all exact",
        computed.null, computed.li, computed.poi, computed.krwi
    );
}

// -------------------------------------------------------------------
// Criterion 2: both EMD routes against an independent LP simplex.

#[test]
fn criterion_2_emd_matches_lp_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let d3 = GroundDistanceMatrix::unit_steps(3);
    let random_hist = |rng: &mut ChaCha8Rng, dim: usize| -> Vec<f64> {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() + 1e-6).collect();
        let s: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= s);
        v
    };

    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let p = random_hist(&mut rng, 3);
        let q = random_hist(&mut rng, 3);
        let fast = emd(&p, &q, &d3).unwrap();
        let oracle = common::lp_emd(&p, &q, &d3);
        worst = worst.max((fast - oracle).abs());
    }
    assert!(worst <= 1e-9, "unit-step matrix deviation {worst}");

    let mut worst_general = 0.0f64;
    for case in 0..200 {
        let dim = 3 + (case % 3); // 3..=5
        let mut rows = vec![vec![0.0f64; dim]; dim];
        for i in 0..dim {
            for j in i + 1..dim {
                let v = rng.random::<f64>() * 2.0 + 0.05;
                rows[i][j] = v;
                rows[j][i] = v;
            }
        }
        let d = GroundDistanceMatrix::new(&rows).unwrap();
        let p = random_hist(&mut rng, dim);
        let q = random_hist(&mut rng, dim);
        let got = emd(&p, &q, &d).unwrap();
        let oracle = common::lp_emd(&p, &q, &d);
        worst_general = worst_general.max((got - oracle).abs());
    }
    assert!(
        worst_general <= 1e-9,
        "general matrix deviation {worst_general}"
    );

    // Nine-entry recall-feature distances: the blockwise fast path against
    // block-by-block LP solves.
    let mut worst_blocks = 0.0f64;
    for _ in 0..200 {
        let mut f = Vec::new();
        let mut g = Vec::new();
        for _ in 0..3 {
            f.extend(random_hist(&mut rng, 3));
            g.extend(random_hist(&mut rng, 3));
        }
        let w = [
            rng.random::<f64>() * 16.0,
            rng.random::<f64>() * 4.0,
            rng.random::<f64>(),
        ];
        let fast = numeral211::clustering::krwemd_unit3(&f, &g, &w);
        let oracle: f64 = (0..3)
            .map(|j| w[j] * common::lp_emd(&f[j * 3..j * 3 + 3], &g[j * 3..j * 3 + 3], &d3))
            .sum();
        worst_blocks = worst_blocks.max((fast - oracle).abs());
    }
    assert!(worst_blocks <= 1e-9, "block deviation {worst_blocks}");
    println!(
        "CRITERION 2: PASS — 1000 unit-step cases (max dev {worst:.2e}), \
         200 random symmetric matrices (max dev {worst_general:.2e}), \
         200 three-block recall distances (max dev {worst_blocks:.2e})"
    );
}

// -------------------------------------------------------------------
// Criterion 3: the outcome partition bounds every clustering output;
// the recall partition bounds the recall clustering.

#[test]
fn criterion_3_resolution_bounds() {
    let lab = lab();
    let params = ClusterParams::default();
    let configs: [[usize; PHASES]; 2] = [[100, 225, 396], [50, 100, 200]];
    let seeds = [11u64, 12, 13];
    let weights: [Vec<f64>; PHASES] = [vec![1.0], vec![4.0, 1.0], vec![16.0, 4.0, 1.0]];

    struct Job {
        name: &'static str,
        m: [usize; PHASES],
        seed: u64,
    }
    let mut jobs = Vec::new();
    for &m in &configs {
        for &seed in &seeds {
            for name in ["ehs", "paaa", "paaemd", "krwemd"] {
                jobs.push(Job { name, m, seed });
            }
        }
    }
    let failures: Vec<String> = pmap(jobs, 2, |job| {
        let map = match job.name {
            "ehs" => build_ehs(&lab.iso, &lab.features, job.m, job.seed, &params),
            "paaa" => build_paaa(&lab.iso, &lab.features, job.m, job.seed, &params),
            "paaemd" => build_paaemd(&lab.iso, &lab.features, job.m, job.seed, &params),
            _ => build_krwemd(
                &lab.iso,
                &lab.features,
                job.m,
                [0, 1, 2],
                &weights,
                job.seed,
                &params,
            ),
        }
        .unwrap_or_else(|e| panic!("{} {:?} seed {}: {e}", job.name, job.m, job.seed));
        let mut bad = Vec::new();
        for phase in 1..=PHASES as u8 {
            let (bound, count) = if job.name == "krwemd" {
                let (ids, c) = lab.features.krwi_ids(phase, phase - 1).unwrap();
                (ids, c)
            } else {
                lab.features.poi_ids(phase)
            };
            if !partition_refines(bound, count, map.assignment(phase)) {
                bad.push(format!(
                    "{} {:?} seed {} phase {phase}: equal-feature classes split",
                    job.name, job.m, job.seed
                ));
            }
        }
        bad
    })
    .into_iter()
    .flatten()
    .collect();
    assert!(failures.is_empty(), "{failures:?}");
    println!(
        "CRITERION 3: PASS — 2 bucket configs x 3 seeds x (ehs, paaa, paaemd bounded by the \
         outcome partition; krwemd bounded by the recall partition), exhaustive over classes"
    );
}

// -------------------------------------------------------------------
// Criterion 4: losslessness — recomputing features per RAW observation
// reproduces the canonical class features exactly, all phases and recall
// depths.

#[test]
fn criterion_4_lossless_classes_have_constant_features() {
    use rayon::prelude::*;
    let lab = lab();
    let n = lab.game.num_cards();
    let pairs = num_pairs(n);
    let ranks = lab.game.rank_table();
    let card = Card::from_index;

    // Raw phase-3 winrates, indexed [pid][b1][b2].
    let raw3: Vec<[u32; 3]> = (0..pairs * n * n)
        .into_par_iter()
        .map(|key| {
            let pid = key / (n * n);
            let b1 = ((key / n) % n) as u8;
            let b2 = (key % n) as u8;
            let (h0, h1) = pair_from(pid, n);
            if b1 == b2 || [h0, h1].contains(&b1) || [h0, h1].contains(&b2) {
                return [0; 3];
            }
            let mine = ranks.rank4_code([card(h0), card(h1), card(b1), card(b2)]);
            let mut counts = [0u32; 3];
            for o1 in 0..n as u8 {
                if [h0, h1, b1, b2].contains(&o1) {
                    continue;
                }
                for o2 in o1 + 1..n as u8 {
                    if [h0, h1, b1, b2].contains(&o2) {
                        continue;
                    }
                    let theirs = ranks.rank4_code([card(o1), card(o2), card(b1), card(b2)]);
                    counts[match mine.cmp(&theirs) {
                        std::cmp::Ordering::Less => 0,
                        std::cmp::Ordering::Equal => 1,
                        std::cmp::Ordering::Greater => 2,
                    }] += 1;
                }
            }
            counts
        })
        .collect();

    // Raw earlier-phase winrates by successor averaging.
    let mut raw2 = vec![[0u32; 3]; pairs * n];
    for pid in 0..pairs {
        let (h0, h1) = pair_from(pid, n);
        for b1 in 0..n as u8 {
            if b1 == h0 || b1 == h1 {
                continue;
            }
            let mut acc = [0u32; 3];
            for b2 in 0..n as u8 {
                if b2 == b1 || b2 == h0 || b2 == h1 {
                    continue;
                }
                let w = raw3[(pid * n + b1 as usize) * n + b2 as usize];
                for t in 0..3 {
                    acc[t] += w[t];
                }
            }
            raw2[pid * n + b1 as usize] = acc;
        }
    }
    let mut raw1 = vec![[0u32; 3]; pairs];
    for pid in 0..pairs {
        let (h0, h1) = pair_from(pid, n);
        let mut acc = [0u32; 3];
        for b1 in 0..n as u8 {
            if b1 == h0 || b1 == h1 {
                continue;
            }
            let w = raw2[pid * n + b1 as usize];
            for t in 0..3 {
                acc[t] += w[t];
            }
        }
        raw1[pid] = acc;
    }

    // Every raw observation matches its canonical class, at every recall
    // depth (the k-block vectors are prefixes of the deepest one).
    let mut checked = 0u64;
    for pid in 0..pairs {
        let (h0, h1) = pair_from(pid, n);
        assert_eq!(
            raw1[pid],
            lab.features.winrate_counts(1, lab.iso.index_raw(1, pid, 0, 0)),
            "phase 1 pid {pid}"
        );
        checked += 1;
        for b1 in 0..n as u8 {
            if b1 == h0 || b1 == h1 {
                continue;
            }
            let idx2 = lab.iso.index_raw(2, pid, b1, 0);
            let blocks2 = lab.features.krwf_counts(2, 1, idx2).unwrap();
            assert_eq!(raw2[pid * n + b1 as usize], blocks2[0]);
            assert_eq!(raw1[pid], blocks2[1]);
            checked += 1;
            for b2 in 0..n as u8 {
                if b2 == b1 || b2 == h0 || b2 == h1 {
                    continue;
                }
                let idx3 = lab.iso.index_raw(3, pid, b1, b2);
                let blocks3 = lab.features.krwf_counts(3, 2, idx3).unwrap();
                assert_eq!(raw3[(pid * n + b1 as usize) * n + b2 as usize], blocks3[0]);
                assert_eq!(raw2[pid * n + b1 as usize], blocks3[1]);
                assert_eq!(raw1[pid], blocks3[2]);
                checked += 1;
            }
        }
    }
    println!(
        "CRITERION 4: PASS — {checked} raw observations match their canonical class features \
         exactly at every recall depth"
    );
}

fn pair_from(pid: usize, n: usize) -> (u8, u8) {
    let mut a = 0usize;
    let mut acc = 0usize;
    loop {
        let row = n - a - 1;
        if acc + row > pid {
            return (a as u8, (a + 1 + pid - acc) as u8);
        }
        acc += row;
        a += 1;
    }
}

// -------------------------------------------------------------------
// Criterion 5: exploitability strictly decreases over training decades
// and at least halves from 1e6 to 1e8 iterations.

#[test]
fn criterion_5_convergence_under_lossless_abstraction() {
    let rows = {
        let _guard = heavy_lock();
        li_seed1_rows().clone()
    };
    let eps: Vec<f64> = rows.iter().map(|r| r.eps_mb_per_g).collect();
    assert_eq!(eps.len(), 3);
    assert!(
        eps[0] > eps[1] && eps[1] > eps[2],
        "not strictly decreasing: {eps:?}"
    );
    assert!(
        eps[2] <= eps[0] / 2.0,
        "final {} above half of {}",
        eps[2],
        eps[0]
    );
    println!(
        "CRITERION 5: PASS — lossless symmetric exploitability {:.2} -> {:.2} -> {:.2} mb/g \
         at 1e6/1e7/1e8 iterations",
        eps[0], eps[1], eps[2]
    );
}

// -------------------------------------------------------------------
// Criterion 6: symmetric protocol ordering at matched budget, mean over
// three seeds: recall <= outcome, lossless within 20% of recall.

#[test]
fn criterion_6_symmetric_partition_ordering() {
    let lab = lab();
    let poi = build_poi(&lab.features);
    let krwi = build_krwi(&lab.features, [0, 1, 2]).unwrap();

    let (mean_li, mean_poi, mean_krwi) = {
        let _guard = heavy_lock();
        // The lossless seed-1 run doubles as the criterion-5 reference.
        let mut jobs: Vec<(&'static str, &AbstractionMap, u64)> = Vec::new();
        for &seed in &SEEDS[1..] {
            jobs.push(("li", null_map(), seed));
        }
        for &seed in &SEEDS {
            jobs.push(("poi", &poi, seed));
            jobs.push(("krwi", &krwi, seed));
        }
        let results = pmap(jobs, 2, |(name, map, seed)| {
            run_checkpoints(
                lab,
                name,
                map,
                None,
                Protocol::Sym,
                seed,
                &[FULL_BUDGET],
                Some(&run_cache()),
            )
            .expect("run")
            .pop()
            .expect("one row")
        });
        let mut sums = std::collections::HashMap::new();
        sums.insert("li", li_seed1_rows().last().unwrap().eps_mb_per_g);
        for row in results {
            *sums.entry(match row.algorithm.as_str() {
                "li" => "li",
                "poi" => "poi",
                _ => "krwi",
            })
            .or_insert(0.0) += row.eps_mb_per_g;
        }
        (
            sums["li"] / 3.0,
            sums["poi"] / 3.0,
            sums["krwi"] / 3.0,
        )
    };
    assert!(
        mean_krwi <= mean_poi,
        "recall partition ({mean_krwi:.3}) worse than outcome partition ({mean_poi:.3})"
    );
    assert!(
        mean_li <= 1.2 * mean_krwi,
        "lossless ({mean_li:.3}) more than 20% above recall ({mean_krwi:.3})"
    );
    println!(
        "CRITERION 6: PASS — symmetric mean exploitability at 1e8 iters over 3 seeds: \
         lossless {mean_li:.2}, recall {mean_krwi:.2}, outcome {mean_poi:.2} mb/g"
    );
}

// -------------------------------------------------------------------
// Criterion 7: one-sided protocol ordering at buckets 100/225/396, mean
// over three seeds: recall-feature clustering beats the equity and
// potential-aware baselines.

#[test]
fn criterion_7_asymmetric_algorithm_ordering() {
    let lab = lab();
    let params = ClusterParams::default();
    let buckets = [100usize, 225, 396];
    // Exponentially decreasing historical importance is the strongest
    // configuration; the full sweep lives in configs/algorithms.toml.
    let weights: [Vec<f64>; PHASES] = [vec![1.0], vec![4.0, 1.0], vec![16.0, 4.0, 1.0]];

    let (mean_ehs, mean_paaemd, mean_krwemd) = {
        let _guard = heavy_lock();
        let mut jobs: Vec<(&'static str, u64)> = Vec::new();
        for &seed in &SEEDS {
            jobs.push(("ehs", seed));
            jobs.push(("paaemd", seed));
            jobs.push(("krwemd", seed));
        }
        let rows = pmap(jobs, 2, |(name, seed)| {
            let map = match name {
                "ehs" => build_ehs(&lab.iso, &lab.features, buckets, seed, &params),
                "paaemd" => build_paaemd(&lab.iso, &lab.features, buckets, seed, &params),
                _ => build_krwemd(
                    &lab.iso,
                    &lab.features,
                    buckets,
                    [0, 1, 2],
                    &weights,
                    seed,
                    &params,
                ),
            }
            .expect("map build");
            run_checkpoints(
                lab,
                name,
                &map,
                Some(null_map()),
                Protocol::Asym,
                seed,
                &[FULL_BUDGET],
                Some(&run_cache()),
            )
            .expect("run")
            .pop()
            .expect("one row")
        });
        let mut sums = std::collections::HashMap::new();
        for row in rows {
            *sums.entry(row.algorithm.clone()).or_insert(0.0) += row.eps_mb_per_g;
        }
        (
            sums["ehs"] / 3.0,
            sums["paaemd"] / 3.0,
            sums["krwemd"] / 3.0,
        )
    };
    assert!(
        mean_krwemd < mean_paaemd,
        "recall clustering ({mean_krwemd:.3}) not below potential-aware ({mean_paaemd:.3})"
    );
    assert!(
        mean_krwemd < mean_ehs,
        "recall clustering ({mean_krwemd:.3}) not below equity buckets ({mean_ehs:.3})"
    );
    println!(
        "CRITERION 7: PASS — one-sided mean exploitability at 1e8 iters over 3 seeds: \
         recall-emd {mean_krwemd:.2} < potential-aware {mean_paaemd:.2} and equity {mean_ehs:.2} mb/g"
    );
}

// -------------------------------------------------------------------
// Criterion 8: exactness and zero-sum.

/// Random total strategy over an abstraction map's buckets.
struct RandomBucketStrategy<'a> {
    map: &'a AbstractionMap,
    rows: [Vec<f64>; 6],
    row_len: [u32; 6],
}

impl<'a> RandomBucketStrategy<'a> {
    fn new(game: &'a Game, map: &'a AbstractionMap, seed: u64) -> RandomBucketStrategy<'a> {
        let tree = game.tree();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows: [Vec<f64>; 6] = Default::default();
        let mut row_len = [0u32; 6];
        for p in Player::BOTH {
            for phase in 1..=PHASES as u8 {
                let i = p as usize * PHASES + phase as usize - 1;
                row_len[i] = tree.row_len(phase, p);
                let len = row_len[i] as usize * map.bucket_count(phase);
                rows[i] = (0..len).map(|_| rng.random::<f64>() + 1e-9).collect();
            }
        }
        RandomBucketStrategy { map, rows, row_len }
    }
}

impl BehaviorStrategy for RandomBucketStrategy<'_> {
    fn probs(
        &self,
        actor: Player,
        phase: u8,
        slot: u32,
        n_actions: usize,
        _actions: &[Action],
        canonical: u32,
        out: &mut [f64; 3],
    ) {
        let i = actor as usize * PHASES + phase as usize - 1;
        let bucket = self.map.bucket(phase, canonical);
        let base = bucket as usize * self.row_len[i] as usize + slot as usize;
        let row = &self.rows[i][base..base + n_actions];
        let sum: f64 = row.iter().sum();
        for a in 0..n_actions {
            out[a] = row[a] / sum;
        }
    }

    fn prepare(&self, tree: &PublicTree) -> Option<PreparedSigma> {
        let groups = node_groups(tree);
        let mut rows: [&[f64]; 6] = [&[]; 6];
        let mut bucket_count = [0usize; 6];
        let mut translate: [Vec<u32>; 6] = Default::default();
        for p in Player::BOTH {
            for phase in 1..=PHASES as u8 {
                let i = p as usize * PHASES + phase as usize - 1;
                rows[i] = &self.rows[i];
                bucket_count[i] = self.map.bucket_count(phase);
                translate[i] = self.map.assignment(phase).to_vec();
            }
        }
        Some(PreparedSigma::from_rows(
            rows,
            self.row_len,
            bucket_count,
            &groups,
            translate,
        ))
    }
}

#[test]
fn criterion_8a_exploitability_never_negative() {
    let lab = lab();
    let evaluator = Evaluator::new(&lab.game, &lab.iso);
    let poi = build_poi(&lab.features);
    let worst = pmap((0..100u64).collect::<Vec<_>>(), 2, |seed| {
        let strategy = RandomBucketStrategy::new(&lab.game, &poi, 1000 + seed);
        evaluator.exploitability(&strategy).exploitability_chips
    })
    .into_iter()
    .fold(f64::INFINITY, f64::min);
    assert!(worst >= -1e-9, "exploitability {worst} below -1e-9 chips");
    println!(
        "CRITERION 8a: PASS — 100 random full-game strategy profiles, \
         minimum exploitability {worst:.3e} chips (>= -1e-9)"
    );
}

#[test]
fn criterion_8b_terminal_payoffs_zero_sum() {
    let game = Game::numeral211();
    let tree = game.tree();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut terminals = 0u64;
    for (id, node) in tree.nodes() {
        if !node.is_terminal() {
            continue;
        }
        for _ in 0..200 {
            // Random full deal.
            let mut cards: Vec<u8> = (0..40).collect();
            for i in 0..6 {
                let j = rng.random_range(i..40);
                cards.swap(i, j);
            }
            let sig = Signal::deal(
                [
                    [Card::from_index(cards[0]), Card::from_index(cards[1])],
                    [Card::from_index(cards[2]), Card::from_index(cards[3])],
                ],
                &[Card::from_index(cards[4]), Card::from_index(cards[5])],
            )
            .unwrap();
            let u = game.showdown_utility(id, &sig).unwrap();
            assert_eq!(u[0] + u[1], 0, "terminal {id} not zero-sum: {u:?}");
            terminals += 1;
        }
    }
    println!("CRITERION 8b: PASS — {terminals} terminal payoffs sum to zero exactly");
}

#[test]
fn criterion_8c_vector_best_response_equals_naive() {
    // Reduced 6-rank deck. Per-hole values against trained and uniform
    // opponents on the full betting structure, plus whole-game totals on
    // the single-raise variant.
    let rules = GameRules::with_ranks(6);
    let game = Game::new(rules).unwrap();
    let iso = IsoTables::build(24);
    let features = Features::build(&game, &iso);
    let li = build_li(&features);
    let binding = Binding {
        game: &game,
        iso: &iso,
        maps: [&li, &li],
    };
    let profile = train(binding, 30_000, 4242);
    let trained = Translated {
        profiles: [&profile, &profile],
        maps: [&li, &li],
    };
    let evaluator = Evaluator::new(&game, &iso);

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let pairs = num_pairs(24);
    let mut sample: Vec<usize> = (0..pairs).collect();
    for i in 0..48 {
        let j = rng.random_range(i..pairs);
        sample.swap(i, j);
    }
    sample.truncate(48);

    let mut worst = 0.0f64;
    for responder in Player::BOTH {
        for (name, strategy) in [
            ("trained", &trained as &dyn BehaviorStrategy),
            ("uniform", &UniformStrategy as &dyn BehaviorStrategy),
        ] {
            let vector = evaluator.best_response_per_hole(responder, strategy);
            let naive =
                common::naive_best_response_per_hole(&game, &iso, responder, strategy, &sample);
            for (i, &pid) in sample.iter().enumerate() {
                let diff = (vector[pid] - naive[i]).abs();
                worst = worst.max(diff);
                assert!(
                    diff <= 1e-9,
                    "{name} responder {responder:?} hole {pid}: vector {} naive {}",
                    vector[pid],
                    naive[i]
                );
            }
        }
    }

    // Whole-game totals on the single-raise variant.
    let mut toy_rules = GameRules::with_ranks(6);
    toy_rules.max_raises = 1;
    let toy = Game::new(toy_rules).unwrap();
    let toy_ev = Evaluator::new(&toy, &iso);
    let all: Vec<usize> = (0..pairs).collect();
    let mut worst_total = 0.0f64;
    for responder in Player::BOTH {
        let vector = toy_ev.best_response_per_hole(responder, &UniformStrategy);
        let naive =
            common::naive_best_response_per_hole(&toy, &iso, responder, &UniformStrategy, &all);
        let v: f64 = vector.iter().sum::<f64>() / pairs as f64;
        let nv: f64 = naive.iter().sum::<f64>() / pairs as f64;
        worst_total = worst_total.max((v - nv).abs());
        assert!((v - nv).abs() <= 1e-9, "totals differ: {v} vs {nv}");
    }
    println!(
        "CRITERION 8c: PASS — vector and naive best response agree \
         (48 sampled holes x 2 responders x 2 opponents, max dev {worst:.2e}; \
         whole-game totals max dev {worst_total:.2e})"
    );
}

#[test]
fn criterion_8d_evaluator_zero_sum() {
    // Fixed-vs-fixed expected values of the two seats cancel.
    let rules = GameRules::with_ranks(6);
    let game = Game::new(rules).unwrap();
    let iso = IsoTables::build(24);
    let features = Features::build(&game, &iso);
    let poi = build_poi(&features);
    let evaluator = Evaluator::new(&game, &iso);
    let mut worst = 0.0f64;
    for seed in 0..10 {
        let s = RandomBucketStrategy::new(&game, &poi, 500 + seed);
        let u1 = evaluator.expected_value(Player::P1, &s, &s);
        let u2 = evaluator.expected_value(Player::P2, &s, &s);
        worst = worst.max((u1 + u2).abs());
    }
    assert!(worst <= 1e-9, "expected values off zero-sum by {worst}");
    println!("CRITERION 8d: PASS — u1 + u2 within {worst:.2e} of zero for 10 random profiles");
}

// -------------------------------------------------------------------
// Criterion 9: bitwise determinism of maps, profiles, and reports.

#[test]
fn criterion_9_bitwise_determinism() {
    let lab = lab();
    let params = ClusterParams::default();
    let weights: [Vec<f64>; PHASES] = [vec![1.0], vec![4.0, 1.0], vec![16.0, 4.0, 1.0]];
    let build = || {
        build_krwemd(
            &lab.iso,
            &lab.features,
            [50, 100, 200],
            [0, 1, 2],
            &weights,
            21,
            &params,
        )
        .unwrap()
    };
    let map_a = build();
    let map_b = build();
    assert_eq!(map_a.hash(), map_b.hash(), "maps differ across rebuilds");
    for phase in 1..=PHASES as u8 {
        assert_eq!(map_a.assignment(phase), map_b.assignment(phase));
    }
    // Byte-identical serialized form.
    let dir = std::env::temp_dir().join(format!("n211-acc9-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let (pa, pb) = (dir.join("a.bin"), dir.join("b.bin"));
    map_a.save(&pa).unwrap();
    map_b.save(&pb).unwrap();
    assert_eq!(std::fs::read(&pa).unwrap(), std::fs::read(&pb).unwrap());
    std::fs::remove_dir_all(&dir).ok();

    let binding = Binding {
        game: &lab.game,
        iso: &lab.iso,
        maps: [&map_a, &map_a],
    };
    let train_once = || {
        let mut t = Trainer::new(binding, 77);
        t.run(30_000);
        t.into_profile()
    };
    let prof_a = train_once();
    let prof_b = train_once();
    assert!(
        prof_a.bitwise_eq(&prof_b),
        "profiles differ across identical single-threaded runs"
    );

    let evaluator = Evaluator::new(&lab.game, &lab.iso);
    let eval_once = |p: &numeral211::solver::StrategyProfile| {
        let s = Translated {
            profiles: [p, p],
            maps: [&map_a, &map_a],
        };
        evaluator.exploitability(&s)
    };
    let ra = eval_once(&prof_a);
    let rb = eval_once(&prof_b);
    assert_eq!(
        ra.exploitability_mb.to_bits(),
        rb.exploitability_mb.to_bits()
    );
    assert_eq!(ra.br_chips[0].to_bits(), rb.br_chips[0].to_bits());
    assert_eq!(ra.br_chips[1].to_bits(), rb.br_chips[1].to_bits());
    // Report rows are identical too.
    let row_a = EvalRow {
        algorithm: "krwemd".into(),
        params: map_a.meta.params.clone(),
        seed: 77,
        iterations: 30_000,
        eps_mb_per_g: ra.exploitability_mb,
        br1: ra.br_chips[0],
        br2: ra.br_chips[1],
    };
    let row_b = EvalRow {
        algorithm: "krwemd".into(),
        params: map_b.meta.params.clone(),
        seed: 77,
        iterations: 30_000,
        eps_mb_per_g: rb.exploitability_mb,
        br1: rb.br_chips[0],
        br2: rb.br_chips[1],
    };
    assert_eq!(row_a, row_b);
    assert_eq!(row_a.to_csv(), row_b.to_csv());
    println!(
        "CRITERION 9: PASS — rebuilt map, retrained profile, and re-evaluated report are \
         bitwise identical (exploitability {:.3} mb/g)",
        ra.exploitability_mb
    );
}

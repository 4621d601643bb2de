use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use numeral211::abstraction::{build_li, build_poi};
use numeral211::clustering::{emd, krwemd_unit3, transport_simplex, GroundDistanceMatrix};
use numeral211::evaluator::{Evaluator, UniformStrategy};
use numeral211::features::Features;
use numeral211::game::{Card, Game, GameRules, Observation, Player};
use numeral211::iso::{canonical_key, IsoTables};
use numeral211::solver::{Binding, Trainer};

fn bench_canonicalize(c: &mut Criterion) {
    let obs = Observation::new(
        ["Ah".parse().unwrap(), "9c".parse().unwrap()],
        &["2d".parse::<Card>().unwrap(), "9d".parse().unwrap()],
    )
    .unwrap();
    c.bench_function("canonical_key phase3", |b| {
        b.iter(|| canonical_key(black_box(&obs)))
    });
}

fn bench_rank(c: &mut Criterion) {
    let game = Game::numeral211();
    let cards = [
        "7h".parse().unwrap(),
        "8h".parse().unwrap(),
        "9h".parse().unwrap(),
        "9s".parse().unwrap(),
    ];
    c.bench_function("rank4_code", |b| {
        b.iter(|| game.rank_table().rank4_code(black_box(cards)))
    });
}

fn bench_emd(c: &mut Criterion) {
    let d = GroundDistanceMatrix::unit_steps(3);
    let p = [0.2, 0.5, 0.3];
    let q = [0.6, 0.1, 0.3];
    c.bench_function("emd 3d line formula", |b| {
        b.iter(|| emd(black_box(&p), black_box(&q), &d).unwrap())
    });
    c.bench_function("emd 3d transport simplex", |b| {
        b.iter(|| transport_simplex(black_box(&p), black_box(&q), |i, j| d.get(i, j)))
    });
    let f = [0.2, 0.5, 0.3, 0.1, 0.1, 0.8, 0.4, 0.4, 0.2];
    let g = [0.3, 0.5, 0.2, 0.8, 0.1, 0.1, 0.4, 0.4, 0.2];
    let w = [16.0, 4.0, 1.0];
    c.bench_function("krwemd 3 blocks", |b| {
        b.iter(|| krwemd_unit3(black_box(&f), black_box(&g), black_box(&w)))
    });
}

fn bench_trainer(c: &mut Criterion) {
    let game = Game::new(GameRules::with_ranks(10)).unwrap();
    let iso = IsoTables::build(40);
    let features = Features::build(&game, &iso);
    let poi = build_poi(&features);
    let binding = Binding {
        game: &game,
        iso: &iso,
        maps: [&poi, &poi],
    };
    let mut group = c.benchmark_group("trainer");
    group.sample_size(10);
    group.bench_function("cfr 10k iterations (outcome buckets)", |b| {
        b.iter(|| {
            let mut t = Trainer::new(binding, 1);
            t.run(10_000);
            black_box(t.profile().iterations)
        })
    });
    group.finish();
}

fn bench_evaluator(c: &mut Criterion) {
    let game = Game::new(GameRules::with_ranks(6)).unwrap();
    let iso = IsoTables::build(24);
    let features = Features::build(&game, &iso);
    let _li = build_li(&features);
    let evaluator = Evaluator::new(&game, &iso);
    let mut group = c.benchmark_group("evaluator");
    group.sample_size(10);
    group.bench_function("best response 6-rank uniform", |b| {
        b.iter(|| evaluator.best_response_value(Player::P1, &UniformStrategy))
    });
    group.finish();
}

fn bench_deal_sampling(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    c.bench_function("sample 6 cards", |b| {
        b.iter(|| {
            let mut cards: [u8; 40] = std::array::from_fn(|i| i as u8);
            for i in 0..6usize {
                let j = rng.random_range(i..40);
                cards.swap(i, j);
            }
            black_box(cards[5])
        })
    });
}

criterion_group!(
    benches,
    bench_canonicalize,
    bench_rank,
    bench_emd,
    bench_trainer,
    bench_evaluator,
    bench_deal_sampling
);
criterion_main!(benches);

use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ocsmatch::harness::enumerate::{enumerate_exact, enumerate_float, sequence};
use ocsmatch::harness::experiment::Schedule;
use ocsmatch::harness::generators::{random, upper_triangular, weighted_layers};
use ocsmatch::harness::offline::offline_opt;
use ocsmatch::lp::{build_lp, solve_lp};
use ocsmatch::ocs::{ImprovedOcs, OcsVariant, OriginalOcs, Pair, RngCoins, Selector};
use ocsmatch::GainShareParams;

fn lp(c: &mut Criterion) {
    c.bench_function("solve_lp gamma=1/16 kmax=7", |b| {
        b.iter(|| solve_lp(&build_lp(black_box(1.0 / 16.0), 1.5, 7).unwrap()).unwrap())
    });
    c.bench_function("solve_lp gamma=1/16 kmax=15", |b| {
        b.iter(|| solve_lp(&build_lp(black_box(1.0 / 16.0), 1.5, 15).unwrap()).unwrap())
    });
}

fn selectors(c: &mut Criterion) {
    let pairs: Vec<Pair> = (0..1000).map(|t| Pair::new(t, t % 7, (t * 3 + 1) % 7 + 7).unwrap()).collect();
    c.bench_function("original OCS 1000 rounds", |b| {
        b.iter_batched(
            || (OriginalOcs::default(), RngCoins(ChaCha8Rng::seed_from_u64(1))),
            |(mut s, mut coins)| {
                for &p in &pairs {
                    black_box(s.select(p, &mut coins).unwrap());
                }
            },
            BatchSize::SmallInput,
        )
    });
    c.bench_function("improved OCS 1000 rounds", |b| {
        b.iter_batched(
            || (ImprovedOcs::optimal(), RngCoins(ChaCha8Rng::seed_from_u64(1))),
            |(mut s, mut coins)| {
                for &p in &pairs {
                    black_box(s.select(p, &mut coins).unwrap());
                }
            },
            BatchSize::SmallInput,
        )
    });
}

fn enumeration(c: &mut Criterion) {
    let s = sequence(&[(0, 1), (1, 2), (0, 2), (2, 1), (0, 1), (1, 0), (2, 0), (0, 1), (1, 2), (0, 2), (2, 1), (0, 1)])
        .unwrap();
    c.bench_function("enumerate original exact 12 rounds", |b| {
        b.iter(|| enumerate_exact(OcsVariant::Original, black_box(&s)).unwrap())
    });
    c.bench_function("enumerate improved 7 rounds", |b| {
        b.iter(|| enumerate_float(OcsVariant::Improved, black_box(&s[..7])).unwrap())
    });
}

fn matching(c: &mut Criterion) {
    let params = GainShareParams::table_improved();
    let tri = upper_triangular(50, 0);
    let layers = weighted_layers(20, &[1.0, 2.0, 3.0, 5.0, 8.0], 0);
    c.bench_function("matcher plan triangular n=50", |b| {
        b.iter(|| Schedule::plan(black_box(&tri), &params, OcsVariant::Improved).unwrap())
    });
    c.bench_function("matcher plan layers 20x5", |b| {
        b.iter(|| Schedule::plan(black_box(&layers), &params, OcsVariant::Improved).unwrap())
    });
    let sched = Schedule::plan(&layers, &params, OcsVariant::Improved).unwrap();
    c.bench_function("replay one trial layers 20x5", |b| b.iter(|| sched.replay(1, black_box(7)).unwrap()));
    let inst = random(60, 60, 100, 0.5, 0);
    c.bench_function("offline optimum 60x60", |b| b.iter(|| offline_opt(black_box(&inst))));
}

criterion_group!(benches, lp, selectors, enumeration, matching);
criterion_main!(benches);

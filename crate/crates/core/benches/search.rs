use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use tepo::builtin::builtin;
use tepo::search::{search_max_tepo, Mode, SearchConfig};

fn workers() -> usize {
    std::thread::available_parallelism().map_or(2, |n| n.get().max(2))
}

fn sequential_vs_parallel(c: &mut Criterion) {
    let mut group = c.benchmark_group("search");
    group.sample_size(10);
    for (name, k) in [("sq2", 5), ("hex2", 6), ("tri3", 4)] {
        let m = builtin(name).unwrap();
        for threads in [1, workers()] {
            let label = if threads == 1 { "sequential".to_string() } else { format!("parallel-{threads}") };
            group.bench_with_input(BenchmarkId::new(format!("{name}-k{k}"), label), &threads, |b, &t| {
                let mut cfg = SearchConfig::new(k, Mode::A);
                cfg.shards = t;
                b.iter(|| black_box(search_max_tepo(&m, &cfg).unwrap().max_tepo));
            });
        }
    }
    group.finish();
}

criterion_group!(benches, sequential_vs_parallel);
criterion_main!(benches);

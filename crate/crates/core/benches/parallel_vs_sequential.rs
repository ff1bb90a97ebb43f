use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tracelab::distinguish::{success_rate, Method};
use tracelab::hard_pairs::{brute_force_closest_pair, build_family};
use tracelab::poly::ArcSpec;
use tracelab::{BitString, ChannelParams};

fn workloads(c: &mut Criterion, label: &str, run: &dyn Fn(&mut (dyn FnMut() + Send))) {
    let params = ChannelParams::new(0.5).unwrap();
    let x = BitString::from_u64(0b1011_0010_1110_0101, 16);
    let y = BitString::from_u64(0b1011_0010_1110_0100, 16);
    let family = build_family(27).unwrap();
    let arc = ArcSpec::for_block_length(27, 1025).unwrap();

    let mut group = c.benchmark_group("success_rate_kgram3");
    group.sample_size(10);
    group.bench_function(BenchmarkId::from_parameter(label), |b| {
        b.iter(|| run(&mut || {
            success_rate(&x, &y, params, Method::Kgram(3), 64, 200, 7).unwrap();
        }))
    });
    group.finish();

    let mut group = c.benchmark_group("closest_pair_L27");
    group.sample_size(10);
    group.bench_function(BenchmarkId::from_parameter(label), |b| {
        b.iter(|| run(&mut || {
            brute_force_closest_pair(&family, 3, params, arc).unwrap();
        }))
    });
    group.finish();
}

#[cfg(feature = "parallel")]
fn bench(c: &mut Criterion) {
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    workloads(c, "sequential", &|f| single.install(f));
    workloads(c, "parallel", &|f| f());
}

#[cfg(not(feature = "parallel"))]
fn bench(c: &mut Criterion) {
    workloads(c, "sequential", &|f| f());
}

criterion_group!(benches, bench);
criterion_main!(benches);

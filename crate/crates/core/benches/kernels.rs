use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use triqmc::digital::{pascal_pair, triangle_points};
use triqmc::harness::TestFunction;
use triqmc::quality::weight_report;
use triqmc::walsh::{discretize, walsh_spectrum, DiscretizedTable};
use triqmc::{basu_owen_pair, Triangle};

/// Runs `f` on a single worker and on the default pool. Without the
/// `parallel` feature only the sequential path exists.
fn both<F: Fn() + Sync + Send>(c: &mut Criterion, group: &str, f: F) {
    let mut g = c.benchmark_group(group);
    g.sample_size(10);
    #[cfg(feature = "parallel")]
    {
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        g.bench_function(BenchmarkId::new("single-worker", 1), |b| b.iter(|| one.install(&f)));
        g.bench_function(BenchmarkId::new("global-pool", rayon::current_num_threads()), |b| b.iter(&f));
    }
    #[cfg(not(feature = "parallel"))]
    g.bench_function(BenchmarkId::new("sequential", 1), |b| b.iter(&f));
    g.finish();
}

fn kernels(c: &mut Criterion) {
    let t = Triangle::unit();
    let exp = TestFunction::ExpSum;

    both(c, "points_2^18", || {
        black_box(triangle_points(&basu_owen_pair(), &t, 1 << 18).unwrap());
    });

    both(c, "discretize_exp_n5", || {
        black_box(discretize(|cell| exp.cell_average(cell), &t, 5).unwrap());
    });

    let values: Vec<f64> = (0..1 << 20).map(|i| ((i * 7919) % 1013) as f64).collect();
    let table = DiscretizedTable::from_values(10, values, t).unwrap();
    both(c, "spectrum_n10", || {
        black_box(walsh_spectrum(&table));
    });

    both(c, "dual_weights_m14", || {
        black_box(weight_report(&pascal_pair(), 14, 14).unwrap());
    });
}

criterion_group!(benches, kernels);
criterion_main!(benches);

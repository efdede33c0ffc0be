use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use mgkit::{prolong, residual, restrict, sweep, GridDims, Ordering, PoissonProblem, RestrictionKind, SmootherKind};

fn bench_sweeps(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep");
    for n in [64usize, 256] {
        let p = PoissonProblem::manufactured(GridDims::from_interior(n).unwrap());
        let u = mgkit::Grid2D::zeros(p.dims(), p.spacing());
        for (name, kind, ord) in [
            ("jacobi", SmootherKind::Jacobi, Ordering::Lexicographic),
            ("gs-lex", SmootherKind::GaussSeidel, Ordering::Lexicographic),
            ("gs-rb", SmootherKind::GaussSeidel, Ordering::RedBlack),
            ("sor-1.5", SmootherKind::Sor(1.5), Ordering::Lexicographic),
        ] {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| sweep(black_box(&u), p.rhs(), kind, ord).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_transfers(c: &mut Criterion) {
    let mut group = c.benchmark_group("transfer");
    for n in [64usize, 256] {
        let p = PoissonProblem::manufactured(GridDims::from_interior(n).unwrap());
        let u = mgkit::Grid2D::zeros(p.dims(), p.spacing());
        let r = residual(&p, &u).unwrap();
        let coarse = restrict(&r, RestrictionKind::FullWeighting).unwrap();
        group.bench_with_input(BenchmarkId::new("residual", n), &n, |b, _| b.iter(|| residual(&p, black_box(&u)).unwrap()));
        group.bench_with_input(BenchmarkId::new("restrict-full", n), &n, |b, _| {
            b.iter(|| restrict(black_box(&r), RestrictionKind::FullWeighting).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("prolong", n), &n, |b, _| b.iter(|| prolong(black_box(&coarse)).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, bench_sweeps, bench_transfers);
criterion_main!(benches);

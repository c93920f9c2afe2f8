use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use reifenberg::flatness::{certify_domain, FlatnessConfig, ProbePlan};
use reifenberg::geometry::{Aabb, BallDomain, Domain, HalfSpace, Point, PointSetComplement};
use reifenberg::harmonic::{sample_exits, WosConfig};
use reifenberg::whitney::{decompose, WhitneyConfig};
use reifenberg::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn walks(c: &mut Criterion) {
    let d = BallDomain::<2>::unit();
    let pole = Point::<2>::new(0.3, 0.1);
    let mut g = c.benchmark_group("wos_disk_20k");
    g.sample_size(10);
    for (name, exec) in MODES {
        let cfg = WosConfig {
            tol: Some(1e-5),
            exec,
            ..Default::default()
        };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| sample_exits(&d, &pole, 20_000, 1, &cfg).unwrap().walks)
        });
    }
    g.finish();
}

fn whitney(c: &mut Criterion) {
    let e: Vec<Point<2>> = (0..8)
        .map(|k| Point::<2>::new(-0.8 + 0.2 * k as f64, 0.1 * k as f64 - 0.4))
        .collect();
    let set = PointSetComplement::new(e);
    let bbox = Aabb {
        lo: Point::<2>::repeat(-1.0),
        hi: Point::<2>::repeat(1.0),
    };
    let mut g = c.benchmark_group("whitney_points");
    g.sample_size(10);
    for (name, exec) in MODES {
        let mut cfg = WhitneyConfig::new(8.0, f64::INFINITY, bbox);
        cfg.max_level = 12;
        cfg.exec = exec;
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| decompose(&set, &cfg).unwrap().cubes.len())
        });
    }
    g.finish();
}

fn flatness(c: &mut Criterion) {
    let d = BallDomain::<2>::unit();
    let h = HalfSpace::<3>::upper(4.0);
    let plan2 = ProbePlan {
        window: d.window(),
        r_top: 0.5,
        levels: 4,
    };
    let plan3 = ProbePlan {
        window: h.window,
        r_top: 1.0,
        levels: 3,
    };
    let mut g = c.benchmark_group("certify");
    g.sample_size(10);
    for (name, exec) in MODES {
        let fc = FlatnessConfig {
            exec,
            ..Default::default()
        };
        g.bench_function(BenchmarkId::new("disk", name), |b| {
            b.iter(|| certify_domain(&d, f64::INFINITY, 64, &plan2, &fc).unwrap().delta_sup)
        });
        let fc3 = FlatnessConfig {
            separation_res: 16,
            spacing: 1.0 / 16.0,
            exec,
            ..Default::default()
        };
        g.bench_function(BenchmarkId::new("half_space_3d", name), |b| {
            b.iter(|| certify_domain(&h, f64::INFINITY, 16, &plan3, &fc3).unwrap().delta_sup)
        });
    }
    g.finish();
}

criterion_group!(benches, walks, whitney, flatness);
criterion_main!(benches);

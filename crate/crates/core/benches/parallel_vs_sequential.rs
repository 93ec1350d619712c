use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::Rng as _;

use deca::data::{gen_planted_implicit, split, CleanRule, SplitMode, SplitSpec};
use deca::eval::recall_ndcg;
use deca::loss::{deca_p_loss, deca_p_multiclass_loss, BinaryPhase, ClassExample, DecaConfig, Labeled, MultiPhase};
use deca::model::{build_model, Input, ModelSpec};
use deca::{par, rng};

fn modes() -> [(&'static str, bool); 2] {
    [("parallel", false), ("sequential", true)]
}

fn run<R>(sequential: bool, f: impl FnOnce() -> R) -> R {
    if sequential {
        par::sequential(f)
    } else {
        f()
    }
}

fn binary_objective(c: &mut Criterion) {
    let (nu, ni) = (2000, 1000);
    let mk = |spec: ModelSpec, s| build_model(&spec.with_seed(s).with_init_scale(0.1)).unwrap();
    let f = mk(ModelSpec::mf(nu, ni, 32), 1);
    let prior = mk(ModelSpec::mf(nu, ni, 32), 2);
    let h = mk(ModelSpec::h_pairwise(nu, ni, 32), 3);
    let hp = mk(ModelSpec::h_pairwise(nu, ni, 32), 4);
    let mut r = rng::stream(0, 99);
    let batch: Vec<Labeled> = (0..2048)
        .map(|_| Labeled {
            input: Input::Pair { user: r.random_range(0..nu as u32), item: r.random_range(0..ni as u32) },
            label: r.random_range(0..2),
        })
        .collect();
    let cfg = DecaConfig::default();
    let mut group = c.benchmark_group("deca_p_loss/batch2048");
    for (name, seq) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run(seq, || deca_p_loss(&f, &prior, &h, &hp, black_box(&batch), &cfg, BinaryPhase::DenoisePositive).unwrap()))
        });
    }
    group.finish();
}

fn multiclass_objective(c: &mut Criterion) {
    let (dim, classes) = (32, 10);
    let spec = ModelSpec::mlp_classifier(dim, vec![128], classes).with_init_scale(0.1);
    let f = build_model(&spec.clone().with_seed(1)).unwrap();
    let prior = build_model(&spec.with_seed(2)).unwrap();
    let h = build_model(&ModelSpec::h_multiclass(f.embedding_dim(), classes).with_seed(3)).unwrap();
    let mut r = rng::stream(0, 98);
    let features: Vec<f64> = (0..512 * dim).map(|_| r.random_range(-1.0..1.0)).collect();
    let batch: Vec<ClassExample> = (0..512)
        .map(|i| ClassExample { features: &features[i * dim..(i + 1) * dim], label: r.random_range(0..classes) })
        .collect();
    let cfg = DecaConfig::default();
    let mut group = c.benchmark_group("deca_p_multiclass_loss/batch512");
    for (name, seq) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run(seq, || deca_p_multiclass_loss(&f, &prior, &h, black_box(&batch), &cfg, 3, MultiPhase::StopGradient).unwrap()))
        });
    }
    group.finish();
}

fn ranking_eval(c: &mut Criterion) {
    let ds = gen_planted_implicit(1000, 500, 8, 0.2, 0.0, 5).unwrap();
    let spec = SplitSpec { mode: SplitMode::Random, ratios: [0.8, 0.1, 0.1], clean_rule: CleanRule::HiddenTruth };
    let s = split(&ds, &spec, 1).unwrap();
    let model = build_model(&ModelSpec::mf(1000, 500, 32).with_seed(1)).unwrap();
    let mut group = c.benchmark_group("recall_ndcg/1000x500");
    group.sample_size(20);
    for (name, seq) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run(seq, || recall_ndcg(&model, &s.train, black_box(&s.test), &[5, 20]).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, binary_objective, multiclass_objective, ranking_eval);
criterion_main!(benches);

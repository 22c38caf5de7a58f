use criterion::{black_box, criterion_group, criterion_main, Criterion};

use intstab_core::claw::ClawScheme;
use intstab_core::field::sliding_sup;
use intstab_core::hjb::HjbScheme;
use intstab_core::{seminorm_diff, Control, ControlledOperator, FluxModel, GridField, Hamiltonian, SchemeConfig, Sym2};

fn bench_sliding_sup(c: &mut Criterion) {
    let f1 = GridField::from_fn_1d(-5.0, 5.0, 1e-3, |x| (3.0 * x).sin() * (-x * x).exp());
    c.bench_function("sliding_sup 1d n=10001 r=1", |b| b.iter(|| sliding_sup(black_box(&f1), 1.0)));
    let f2 = GridField::from_fn_2d(-2.0, 2.0, 0.01, |x, y| (x * y).cos());
    c.bench_function("sliding_sup 2d 401^2 r=0.5", |b| b.iter(|| sliding_sup(black_box(&f2), 0.5)));
}

fn bench_hjb_step(c: &mut Criterion) {
    let cfg = SchemeConfig::default();
    let f1 = GridField::from_fn_1d(-12.0, 12.0, 1.0 / 160.0, |x| (1.0 - x.abs()).max(0.0));
    let s1 = HjbScheme::new(&Hamiltonian::EtaNu { eta: 1.0, nu: 1.0 }, 1, f1.h(), &cfg).unwrap();
    let dt1 = 0.9 / s1.diagonal_coefficient();
    c.bench_function("hjb step eta-nu 1d n=3841", |b| b.iter(|| s1.step(black_box(&f1), dt1)));

    let f2 = GridField::from_fn_2d(-2.0, 2.0, 0.02, |x, y| (1.0 - x.hypot(y)).max(0.0));
    let s2 = HjbScheme::new(&Hamiltonian::ModelNorm, 2, f2.h(), &cfg).unwrap();
    let dt2 = 0.9 / s2.diagonal_coefficient();
    c.bench_function("hjb step model-norm 2d 201^2", |b| b.iter(|| s2.step(black_box(&f2), dt2)));
}

fn bench_claw_step(c: &mut Criterion) {
    let cfg = SchemeConfig::default();
    let flux = FluxModel::burgers_porous(0.0, 1.0);
    let u = GridField::from_fn_1d(-3.0, 3.0, 0.005, |x| if x.abs() < 1.0 { 0.5 + 0.5 * (4.0 * x).sin() } else { 0.0 });
    let s = ClawScheme::new(&flux, u.h(), &cfg).unwrap();
    let dt = 0.9 / s.diagonal_coefficient();
    c.bench_function("claw step burgers-porous n=1201", |b| b.iter(|| s.step(black_box(&u), dt)));
}

fn bench_seminorm_diff(c: &mut Criterion) {
    let op = ControlledOperator::new(
        2,
        vec![
            Control::new([0.0; 2], Sym2::new(2.0, 0.5, 1.0)),
            Control::new([0.0; 2], Sym2::new(1.0, -0.3, 2.0)),
            Control::new([0.0; 2], Sym2::new(1.5, 0.0, 1.5)),
        ],
    )
    .unwrap();
    c.bench_function("seminorm_diff 2d three caps", |b| b.iter(|| seminorm_diff(black_box(&op)).unwrap()));
}

criterion_group!(benches, bench_sliding_sup, bench_hjb_step, bench_claw_step, bench_seminorm_diff);
criterion_main!(benches);

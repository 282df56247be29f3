use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use riskset_core::conditional::eval_conditional;
use riskset_core::duality::{biconjugate_residual, DomainInterval, DualCandidate};
use riskset_core::sampling;
use riskset_core::sets::{quarter_circle, sigma_domain_classify};
use riskset_core::{ConditionalVectorRisk, FiltrationSequence, ScalarRisk, UpperConvexSet, VectorRisk};

fn kernels(c: &mut Criterion) {
    let mut rng = sampling::trial_rng(1, 0);
    let space = sampling::space_with(&mut rng, 6);
    let x = sampling::random_vector(&mut rng, space.clone(), 3);
    let ent = |b: f64| ScalarRisk::entropic(b).unwrap();

    let r = VectorRisk::separable(vec![ent(0.5), ent(1.0), ent(2.0)]).unwrap();
    c.bench_function("separable entropic eval (6 outcomes, N=3)", |b| b.iter(|| r.eval(black_box(&x)).unwrap()));

    let set = UpperConvexSet::flagship();
    c.bench_function("flagship sigma at (-1,-1)", |b| b.iter(|| set.sigma(black_box(&[-1.0, -1.0])).unwrap()));
    let grid = quarter_circle(181).unwrap();
    c.bench_function("flagship domain sweep (181 directions)", |b| b.iter(|| sigma_domain_classify(&set, &grid).unwrap()));

    let tree = FiltrationSequence::binary_tree(3);
    let tree_space = sampling::space_with(&mut rng, 8);
    let y = sampling::random_vector(&mut rng, tree_space, 2);
    let cond = ConditionalVectorRisk::entropic(&[1.0, 2.0], tree.stage(2).unwrap().clone()).unwrap();
    c.bench_function("conditional entropic eval (depth-3 tree, stage 2)", |b| {
        b.iter(|| eval_conditional(&cond, black_box(&y)).unwrap())
    });

    let y0 = sampling::random_vector(&mut rng, space, 2);
    let rho = ent(1.0);
    let ri = |z: &riskset_core::RandomVector| rho.eval(z.space(), &z.column(0));
    c.bench_function("Esscher biconjugate residual", |b| {
        b.iter(|| {
            let u = DualCandidate::entropic_oracle(1.0, 0, black_box(&y0)).unwrap();
            biconjugate_residual(&ri, 0, &y0, &[u], DomainInterval::CASH_ADDITIVE).unwrap()
        })
    });
}

criterion_group!(benches, kernels);
criterion_main!(benches);

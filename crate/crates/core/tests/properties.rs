use std::sync::Arc;

use proptest::prelude::*;
use riskset_core::conditional::eval_conditional;
use riskset_core::prob::{as_leq, conditional_expectation};
use riskset_core::spec::{parse_scalar, parse_set, parse_vector};
use riskset_core::vector::FunctionalRegistry;
use riskset_core::{
    ConditionalVectorRisk, FiniteProbabilitySpace, Partition, RandomVector, ScalarRisk, UpperConvexSet, VectorRisk,
};

fn space_strategy(max: usize) -> impl Strategy<Value = Arc<FiniteProbabilitySpace>> {
    prop::collection::vec(0.05f64..1.0, 1..=max).prop_map(|w| {
        let total: f64 = w.iter().sum();
        let mut p: Vec<f64> = w.iter().map(|v| v / total).collect();
        // absorb rounding in the last mass
        let head: f64 = p[..p.len() - 1].iter().sum();
        *p.last_mut().unwrap() = 1.0 - head;
        FiniteProbabilitySpace::new(p).unwrap().shared()
    })
}

fn space_and_column(max: usize) -> impl Strategy<Value = (Arc<FiniteProbabilitySpace>, Vec<f64>)> {
    space_strategy(max).prop_flat_map(|s| {
        let n = s.outcomes();
        (Just(s), prop::collection::vec(-10.0f64..10.0, n))
    })
}

fn space_and_vector(max: usize, dim: usize) -> impl Strategy<Value = RandomVector> {
    space_strategy(max).prop_flat_map(move |s| {
        let n = s.outcomes();
        prop::collection::vec(prop::collection::vec(-10.0f64..10.0, dim), n)
            .prop_map(move |rows| RandomVector::from_rows(s.clone(), &rows).unwrap())
    })
}

fn scalar_strategy() -> impl Strategy<Value = ScalarRisk> {
    prop_oneof![
        Just(ScalarRisk::WorstCase),
        Just(ScalarRisk::NegExpectation),
        (0.05f64..1.0).prop_map(|a| ScalarRisk::avar(a).unwrap()),
        (0.05f64..5.0).prop_map(|b| ScalarRisk::entropic(b).unwrap()),
    ]
}

proptest! {
    #[test]
    fn scalar_between_mean_and_worst((space, x) in space_and_column(6), rho in scalar_strategy()) {
        let v = rho.eval(&space, &x);
        let neg_mean = -space.expectation(&x);
        let worst = x.iter().map(|a| -a).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(v >= neg_mean - 1e-9 && v <= worst + 1e-9, "{rho}: {v} not in [{neg_mean}, {worst}]");
    }

    #[test]
    fn scalar_cash_additive((space, x) in space_and_column(6), rho in scalar_strategy(), m in -20.0f64..20.0) {
        let shifted: Vec<f64> = x.iter().map(|a| a + m).collect();
        prop_assert!((rho.eval(&space, &shifted) - (rho.eval(&space, &x) - m)).abs() < 1e-9);
    }

    #[test]
    fn scalar_spec_round_trips(rho in scalar_strategy()) {
        let text = rho.to_string();
        prop_assert_eq!(parse_scalar(&text).unwrap(), rho);
    }

    #[test]
    fn vector_spec_round_trips(components in prop::collection::vec(scalar_strategy(), 1..4)) {
        let r = VectorRisk::separable(components).unwrap();
        let text = r.to_string();
        let back = parse_vector(&text, &FunctionalRegistry::with_builtins()).unwrap();
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn leq_is_reflexive_and_transitive(x in space_and_vector(5, 2), a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let y = x.shift(&[a, 0.0]).unwrap();
        let z = y.shift(&[0.0, b]).unwrap();
        prop_assert!(as_leq(&x, &x).unwrap());
        prop_assert!(as_leq(&x, &y).unwrap() && as_leq(&y, &z).unwrap() && as_leq(&x, &z).unwrap());
        if a > 0.0 {
            prop_assert!(!as_leq(&y, &x).unwrap());
        }
    }

    #[test]
    fn conditional_expectation_tower(x in space_and_vector(6, 2), split in 1usize..6) {
        let n = x.outcomes();
        let k = split.min(n);
        let cells = if k < n { vec![(0..k).collect(), (k..n).collect()] } else { vec![(0..n).collect()] };
        let p = Partition::new(cells, n).unwrap();
        let e = conditional_expectation(&x, &p).unwrap();
        prop_assert!(p.is_measurable(&e));
        for (a, b) in e.mean().iter().zip(x.mean()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn trivial_conditional_is_unconditional(x in space_and_vector(6, 2), b1 in 0.1f64..3.0, b2 in 0.1f64..3.0) {
        let p = Partition::trivial(x.outcomes());
        let r = ConditionalVectorRisk::entropic(&[b1, b2], p).unwrap();
        let out = eval_conditional(&r, &x).unwrap();
        let plain = VectorRisk::separable(vec![ScalarRisk::entropic(b1).unwrap(), ScalarRisk::entropic(b2).unwrap()])
            .unwrap()
            .eval(&x)
            .unwrap();
        for k in 0..x.outcomes() {
            for (j, want) in plain.iter().enumerate() {
                prop_assert!((out.get(k, j) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn flagship_members_lie_below_the_support(m in prop::collection::vec(-3.0f64..3.0, 2), angle in 180.5f64..269.5, up in 0.0f64..5.0) {
        let c = UpperConvexSet::flagship();
        let rad = angle.to_radians();
        let w = [rad.cos(), rad.sin()];
        let sigma = c.sigma(&w).unwrap().value.as_f64();
        if c.membership(&m).unwrap() {
            prop_assert!(w[0] * m[0] + w[1] * m[1] <= sigma + 1e-9);
            prop_assert!(c.membership(&[m[0] + up, m[1]]).unwrap());
            prop_assert!(c.membership(&[m[0], m[1] + up]).unwrap());
        }
    }

    #[test]
    fn set_spec_round_trips(u1 in 0.1f64..2.0, u2 in 0.1f64..2.0, c in -2.0f64..2.0, s1 in -1.0f64..1.0) {
        let set = UpperConvexSet::halfspace(vec![u1, u2], c).unwrap().shifted(vec![s1, 0.0]).unwrap();
        let text = set.to_string();
        prop_assert_eq!(parse_set(&text, Some(2)).unwrap().to_string(), text);
    }
}

//! Acceptance run: one PASS/FAIL line per sub-check at its stated tolerance.
//!
//! Some claims are known to be false for the objects as defined (see
//! `KNOWN_RED`). They are checked exactly as stated and print FAIL; only an
//! unexpected failure makes the binary exit nonzero.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;
use riskset_core::audit::{AuditRecord, Verdict};
use riskset_core::conditional::{
    audit_locality, conditional_separability_diagnostic, entropic_family, eval_conditional, time_consistency_check,
};
use riskset_core::duality::audit_dual_structure;
use riskset_core::sampling;
use riskset_core::setrisk::{
    allocation_rule, allocation_rule_diagnostic, efficient_allocation, nudged, strong_separability_check, sv_membership,
    sv_support,
};
use riskset_core::sets::{active_constraint_residual, cancellation_check, quarter_circle, sigma_domain_classify};
use riskset_core::vector::{
    audit_vector_property, coupling_discrepancy, marginal_domination_diagnostic, theorem31_harness, FunctionalRegistry,
    VectorProperty, DEFAULT_L_SCHEDULE,
};
use riskset_core::{
    ConditionalVectorRisk, FiltrationSequence, FiniteProbabilitySpace, RandomVector, RiskError, ScalarRisk,
    SetValuedRiskMeasure, UpperConvexSet, VectorFunctional, VectorRisk,
};

const SEED: u64 = 20_240_601;
const CLOSED: f64 = 1e-9;
const INCL: f64 = 1e-8;

/// Sub-checks whose stated outcome contradicts the objects as defined.
const KNOWN_RED: &[(&str, &str)] = &[
    ("1.ph", "entropic risk is convex, not positively homogeneous: r(2X) != 2 r(X) in general"),
    ("4.axes", "sigma_C(-e_i) = log 2 is a finite supremum approached as k -> -inf, not +inf"),
    ("4.domain", "dom sigma_C is the closed quarter R^2_- since both axes are finite"),
    ("7.unbounded", "sigma_C(-e_1) is finite, so v = (1,0) has a finite infimum that is not attained"),
];

struct Suite {
    unexpected: usize,
    lines: usize,
}

impl Suite {
    fn check(&mut self, id: &str, ok: bool, detail: impl AsRef<str>) {
        self.lines += 1;
        let known = KNOWN_RED.iter().find(|(k, _)| *k == id);
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("{tag}  {id:<22} {}", detail.as_ref());
        match (ok, known) {
            (false, Some((_, why))) => println!("      known: {why}"),
            (false, None) => self.unexpected += 1,
            (true, Some(_)) => println!("      note: listed as known red but passed"),
            (true, None) => {}
        }
    }

    fn record(&mut self, id: &str, r: &AuditRecord, tol: f64) {
        let ok = r.verdict == Verdict::Pass && r.max_residual <= tol;
        let detail = format!("{} [{}] trials={} max_residual={:.3e} <= {tol:e}", r.name, r.anchor, r.trials, r.max_residual);
        self.check(id, ok, detail);
    }
}

fn uniform(n: usize) -> Arc<FiniteProbabilitySpace> {
    FiniteProbabilitySpace::uniform(n).unwrap().shared()
}

fn ent(beta: f64) -> ScalarRisk {
    ScalarRisk::entropic(beta).unwrap()
}

fn axiom_records(r: &VectorRisk, trials: usize, seed: u64, props: &[VectorProperty]) -> Vec<AuditRecord> {
    props
        .iter()
        .enumerate()
        .map(|(k, p)| audit_vector_property(r, p, trials, seed + k as u64).unwrap())
        .collect()
}

fn criterion1(s: &mut Suite) -> Vec<AuditRecord> {
    let start = Instant::now();
    let r = VectorRisk::separable(vec![ent(0.5), ent(1.0), ent(2.0)]).unwrap();
    let props = [
        VectorProperty::Monotonicity,
        VectorProperty::CashAdditivity,
        VectorProperty::Convexity,
        VectorProperty::PositiveHomogeneity(vec![0.0, 1.0]),
    ];
    let records = axiom_records(&r, 1000, SEED, &props);
    for (rec, id) in records.iter().zip(["1.monotonicity", "1.cash-additivity", "1.convexity", "1.ph-0-1"]) {
        s.record(id, rec, CLOSED);
    }
    let ph = audit_vector_property(&r, &VectorProperty::PositiveHomogeneity(vec![0.0, 1.0, 2.0]), 1000, SEED + 10).unwrap();
    s.record("1.ph", &ph, CLOSED);
    let mut refuted = Vec::new();
    for i in 0..r.dim() {
        if marginal_domination_diagnostic(&r, i, &DEFAULT_L_SCHEDULE).unwrap().is_refuted() {
            refuted.push(i);
        }
    }
    s.check("1.domination", refuted.is_empty(), format!("marginal domination not refuted on any component (refuted: {refuted:?})"));
    let elapsed = start.elapsed();
    s.check("1.runtime", elapsed < Duration::from_secs(5), format!("axiom suite took {:.2} s < 5 s", elapsed.as_secs_f64()));
    records
}

fn criterion2(s: &mut Suite) {
    let registry = FunctionalRegistry::with_builtins();
    let mut candidates: Vec<VectorRisk> = vec![
        VectorRisk::separable(vec![ent(1.0), ent(2.0)]).unwrap(),
        VectorRisk::separable(vec![ScalarRisk::WorstCase, ScalarRisk::NegExpectation]).unwrap(),
        VectorRisk::separable(vec![ScalarRisk::avar(0.25).unwrap(), ent(0.5), ScalarRisk::WorstCase]).unwrap(),
        VectorRisk::aggregate_entropic(1.0, vec![0.5, 0.5]).unwrap(),
    ];
    candidates.extend(registry.names().map(|n| VectorRisk::custom(registry.get(n).unwrap().clone())));
    let mut qualifying = 0;
    for (k, r) in candidates.iter().enumerate() {
        let v = theorem31_harness(r, 500, SEED + 100 * k as u64).unwrap();
        if v.hypotheses_hold {
            qualifying += 1;
            s.record(&format!("2.invariance[{k}]"), &v.invariance, CLOSED);
        } else {
            println!("      {}: hypotheses refuted ({}), invariance informational", v.functional, v.refuted.join("; "));
        }
    }
    s.check("2.qualifying", qualifying >= 1, format!("{qualifying} functionals satisfy every hypothesis"));

    let agg = VectorRisk::aggregate_entropic(1.0, vec![0.5, 0.5]).unwrap();
    let v = theorem31_harness(&agg, 500, SEED).unwrap();
    s.check("2.aggregate-refuted", v.refuted_domination(), format!("aggregate_entropic refuted on: {}", v.refuted.join("; ")));
    let (_, _, d) = coupling_discrepancy(&agg, uniform(2), &[-1.0, 1.0]).unwrap();
    let want = 1f64.cosh().ln();
    s.check("2.aggregate-discrepancy", (d - want).abs() <= 1e-6, format!("discrepancy {d:.9} vs log cosh 1 = {want:.9} (1e-6)"));
}

fn criterion3(s: &mut Suite) {
    let records = audit_dual_structure(&[ent(1.0), ScalarRisk::WorstCase, ent(2.5)], 100, SEED).unwrap();
    for (rec, id) in records.iter().zip(["3.offdiagonal", "3.esscher", "3.positive-entry"]) {
        s.record(id, rec, CLOSED);
    }
}

fn criterion4(s: &mut Suite) {
    let c = UpperConvexSet::flagship();
    let diag = c.sigma(&[-1.0, -1.0]).unwrap();
    let v = diag.value.value();
    s.check("4.diagonal", v.is_some_and(|v| v.abs() <= INCL), format!("sigma_C(-1,-1) = {v:?} (0 +- 1e-8)"));

    let mut axes = Vec::new();
    for w in [[-1.0, 0.0], [0.0, -1.0]] {
        let sup = c.sigma(&w).unwrap();
        axes.push(format!("{w:?}: {:?} certificate={}", sup.value.value(), sup.value.certificate().is_some()));
    }
    let both_inf = [[-1.0, 0.0], [0.0, -1.0]].iter().all(|w| c.sigma(w).unwrap().value.certificate().is_some());
    s.check("4.axes", both_inf, format!("axes classified +inf with certificates; observed {}", axes.join(", ")));

    let grid = quarter_circle(181).unwrap();
    let classes = sigma_domain_classify(&c, &grid).unwrap();
    let last = classes.len() - 1;
    let mismatches =
        classes.iter().enumerate().filter(|(k, cl)| cl.is_finite() != (*k != 0 && *k != last)).count();
    s.check("4.domain", mismatches == 0, format!("finite exactly on the open quarter; {mismatches} of 181 directions disagree"));

    let fine = sigma_domain_classify(&c, &quarter_circle(361).unwrap()).unwrap();
    let mut worst: f64 = 0.0;
    let mut flips = 0;
    for (k, cl) in classes.iter().enumerate() {
        let other = &fine[2 * k];
        if cl.is_finite() != other.is_finite() {
            flips += 1;
        } else if let (Some(a), Some(b)) = (cl.support.value.value(), other.support.value.value()) {
            worst = worst.max((a - b).abs());
        }
    }
    s.check("4.doubling", flips == 0 && worst <= INCL, format!("361-point grid agrees: {flips} class flips, max value gap {worst:.2e}"));

    let rep = active_constraint_residual(&c, &[-1.0, -1.0]).unwrap();
    let gap = (rep.value_grid - rep.value_reduced).abs();
    s.check(
        "4.active-constraint",
        gap <= INCL && rep.slack.abs() <= INCL,
        format!("|grid - reduced| = {gap:.2e}, slack = {:.2e} (1e-8)", rep.slack),
    );
}

fn criterion5(s: &mut Suite) {
    let c = UpperConvexSet::flagship();
    let grid = quarter_circle(181).unwrap();
    let (mut bad_cmp, mut bad_inc, mut worst) = (0, 0, 0f64);
    for t in 0..500u64 {
        let mut rng = sampling::trial_rng(SEED + 5, t);
        let x = sampling::values(&mut rng, 2);
        let y: Vec<f64> = x.iter().map(|v| v + rng.random_range(0.0..sampling::VALUE_RANGE)).collect();
        let v = cancellation_check(&c, &x, &y, &grid).unwrap();
        worst = worst.max(v.max_violation);
        if !(v.comparable && v.holds) {
            bad_cmp += 1;
        }
        let d = rng.random_range(0.01..sampling::VALUE_RANGE);
        let e = rng.random_range(0.01..sampling::VALUE_RANGE);
        let (x2, y2) = ([x[0] + d, x[1]], [x[0], x[1] + e]);
        let v = cancellation_check(&c, &x2, &y2, &grid).unwrap();
        if v.comparable || !v.holds || v.separating.is_none() {
            bad_inc += 1;
        }
    }
    s.check("5.comparable", bad_cmp == 0, format!("500 pairs x <= y: {bad_cmp} violations, max sigma gap {worst:.2e} (1e-8)"));
    s.check("5.incomparable", bad_inc == 0, format!("500 incomparable pairs: {bad_inc} without a separating direction"));
}

fn criterion6(s: &mut Suite) {
    let v = strong_separability_check(&SetValuedRiskMeasure::flagship(), 100, SEED + 6, &quarter_circle(181).unwrap()).unwrap();
    s.record("6.identity", &v.identity, INCL);
}

fn criterion7(s: &mut Suite) {
    let f = SetValuedRiskMeasure::flagship();
    let (mut members, mut worst, mut errors) = (0, 0f64, Vec::new());
    let trials = 200;
    for t in 0..trials {
        let mut rng = sampling::trial_rng(SEED + 7, t);
        let space = sampling::space(&mut rng);
        let x = sampling::random_vector(&mut rng, space, 2);
        let v = [rng.random_range(0.05..2.0), rng.random_range(0.05..2.0)];
        match efficient_allocation(&f, &x, &v) {
            Ok(a) => {
                if sv_membership(&f, &x, &nudged(&a.m)).unwrap() {
                    members += 1;
                }
                let sigma = sv_support(&f, &x, &[-v[0], -v[1]]).unwrap().value.as_f64();
                worst = worst.max((a.total + sigma).abs());
            }
            Err(e) => errors.push(e.to_string()),
        }
    }
    s.check(
        "7.membership",
        members == trials && errors.is_empty(),
        format!("{members}/{trials} efficient allocations in R(X); {} errors {:?}", errors.len(), errors.first()),
    );
    s.check("7.value-identity", worst <= INCL && errors.is_empty(), format!("max |v.m* + sigma_R(X)(-v)| = {worst:.2e} (1e-8)"));

    let agg = SetValuedRiskMeasure::aggregate_halfspace(1.0, vec![1.0, 1.0]).unwrap();
    let rule = allocation_rule(&agg, vec![1.0, 1.0]);
    let diag = allocation_rule_diagnostic(&rule, &agg, 200, SEED + 70).unwrap();
    s.record("7.rule-membership", &diag.membership, 0.0);
    s.check(
        "7.rule-hypothesis",
        !diag.harness.hypotheses_hold,
        format!("aggregate_halfspace rule fails: {}", diag.harness.refuted.join("; ")),
    );
    let (_, _, d) = coupling_discrepancy(&rule, uniform(2), &[-1.0, 1.0]).unwrap();
    s.check("7.rule-copula", d > 1e-6, format!("coupling discrepancy {d:.6} > 1e-6"));

    let x = RandomVector::from_columns(uniform(2), &[vec![0.0, -1.0], vec![0.0, -1.0]]).unwrap();
    let got = efficient_allocation(&f, &x, &[1.0, 0.0]);
    let unbounded = matches!(got, Err(RiskError::Unbounded { .. }));
    s.check("7.unbounded", unbounded, format!("v = (1,0) on the flagship measure: {got:?}"));
}

fn exhaustive_locality(r: &ConditionalVectorRisk, rng: &mut impl Rng, pairs: usize) -> f64 {
    let p = r.partition();
    let k = p.cells().len();
    let space = sampling::space_with(rng, p.outcomes());
    let mut worst: f64 = 0.0;
    for mask in 0..(1usize << k) {
        let cells: Vec<usize> = (0..k).filter(|c| mask >> c & 1 == 1).collect();
        let event = p.event(&cells);
        for _ in 0..pairs {
            let x = sampling::random_vector(rng, space.clone(), r.dim());
            let y = sampling::random_vector(rng, space.clone(), r.dim());
            let lhs = eval_conditional(r, &x.paste(&y, &event).unwrap()).unwrap();
            let rhs = eval_conditional(r, &x).unwrap().paste(&eval_conditional(r, &y).unwrap(), &event).unwrap();
            for (a, b) in lhs.table().values().iter().zip(rhs.table().values()) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    worst
}

fn criterion8(s: &mut Suite) {
    let tree = FiltrationSequence::binary_tree(3);
    for (stage, p) in tree.partitions().iter().enumerate() {
        let e = ConditionalVectorRisk::entropic(&[0.5, 2.0], p.clone()).unwrap();
        let a = ConditionalVectorRisk::aggregate(1.0, vec![0.5, 0.5], p.clone()).unwrap();
        let mut rng = sampling::trial_rng(SEED + 8, stage as u64);
        let worst = exhaustive_locality(&e, &mut rng, 4).max(exhaustive_locality(&a, &mut rng, 4));
        let unions = 1usize << p.cells().len();
        s.check(&format!("8.locality-all[{stage}]"), worst <= CLOSED, format!("{unions} cell unions, max residual {worst:.2e} (1e-9)"));
        s.record(&format!("8.locality[{stage}]"), &audit_locality(&e, 100, SEED + 80).unwrap(), CLOSED);

        s.record(&format!("8.sep-entropic[{stage}]"), &conditional_separability_diagnostic(&e, 100, SEED + 81).unwrap(), CLOSED);
        let rec = conditional_separability_diagnostic(&a, 100, SEED + 81).unwrap();
        let cell = rec.witness.as_ref().and_then(|w| w.data.get("cell")).cloned();
        s.check(
            &format!("8.sep-aggregate[{stage}]"),
            rec.verdict == Verdict::Fail && cell.is_some(),
            format!("aggregate refuted with cell witness {cell:?}, residual {:.3e}", rec.max_residual),
        );
    }

    let mut worst: f64 = 0.0;
    for betas in [[1.0, 1.0], [0.5, 3.0]] {
        let family = entropic_family(&tree, &betas).unwrap();
        for t in 0..50u64 {
            let mut rng = sampling::trial_rng(SEED + 88, t);
            let space = sampling::space_with(&mut rng, 8);
            let x = sampling::random_vector(&mut rng, space, 2);
            for a in 0..tree.stages() {
                for b in a..tree.stages() {
                    worst = worst.max(time_consistency_check(&family, &x, a, b).unwrap());
                }
            }
        }
    }
    s.check("8.time-consistency", worst <= CLOSED, format!("depth-3 tree, all s <= t, 100 positions: max residual {worst:.2e} (1e-9)"));
}

fn criterion9(s: &mut Suite, first: &[AuditRecord], started: Instant) {
    let r = VectorRisk::separable(vec![ent(0.5), ent(1.0), ent(2.0)]).unwrap();
    let props = [VectorProperty::Monotonicity, VectorProperty::CashAdditivity, VectorProperty::Convexity];
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let again = pool.install(|| axiom_records(&r, 1000, SEED, &props));
    s.check("9.determinism", again[..] == first[..3], "axiom records identical on a single-threaded rerun");
    let elapsed = started.elapsed();
    s.check("9.runtime", elapsed < Duration::from_secs(60), format!("full run took {:.2} s < 60 s", elapsed.as_secs_f64()));
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut s = Suite { unexpected: 0, lines: 0 };
    let first = criterion1(&mut s);
    criterion2(&mut s);
    criterion3(&mut s);
    criterion4(&mut s);
    criterion5(&mut s);
    criterion6(&mut s);
    criterion7(&mut s);
    criterion8(&mut s);
    criterion9(&mut s, &first, started);
    println!("acceptance: {} checks, {} unexpected failures", s.lines, s.unexpected);
    if s.unexpected == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}

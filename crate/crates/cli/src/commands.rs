//! Subcommand bodies. Each returns the audit records and free-form results
//! that go into the report; any error is an input error (exit code 2).

use std::path::Path;

use riskset_core::audit::{AuditRecord, Witness};
use riskset_core::conditional::{
    audit_locality, conditional_separability_diagnostic, eval_conditional, time_consistency_check, ConditionalVectorRisk,
};
use riskset_core::duality::{
    audit_dual_structure, biconjugate_residual, dual_feasibility, offdiagonal_zero_check, DomainInterval, DualCandidate,
    FEASIBILITY_TOL,
};
use riskset_core::io::{parse_scenarios, parse_tree, ScenarioTree};
use riskset_core::prob::FiniteProbabilitySpace;
use riskset_core::scalar::{audit_scalar_property, ScalarProperty};
use riskset_core::setrisk::{
    allocation_rule, allocation_rule_diagnostic, audit_set_property, efficient_allocation, frontier_csv, frontier_sample,
    nudged, strong_separability_check, sv_membership, SetProperty,
};
use riskset_core::sets::{direction_grid, quarter_circle, recession_check, sigma_domain_classify, SupportMethod};
use riskset_core::spec::{parse_spec, Spec};
use riskset_core::vector::{
    audit_vector_property, coupling_discrepancy, marginal_domination_diagnostic, theorem31_harness, FunctionalRegistry,
    VectorProperty, DEFAULT_L_SCHEDULE,
};
use riskset_core::{
    ConjugateValue, RandomVector, RiskError, ScalarRisk, SetValuedRiskMeasure, UpperConvexSet, VectorFunctional, VectorRisk,
};
use serde_json::{json, Value};

use crate::report::RunConfig;

pub type Outcome = (Vec<AuditRecord>, Vec<Value>);
type CmdResult<T> = Result<T, String>;

fn err(e: RiskError) -> String {
    e.to_string()
}

fn scenarios(cfg: &RunConfig) -> CmdResult<RandomVector> {
    let path = cfg.scenarios.as_deref().ok_or("this subcommand needs --scenarios PATH")?;
    parse_scenarios(Path::new(path)).map(|(_, x)| x).map_err(|e| format!("{path}: {e}"))
}

fn tree(cfg: &RunConfig) -> CmdResult<ScenarioTree> {
    let path = cfg.tree.as_deref().ok_or("this subcommand needs --tree PATH")?;
    parse_tree(Path::new(path)).map_err(|e| format!("{path}: {e}"))
}

fn specs(cfg: &RunConfig, dim: Option<usize>) -> CmdResult<Vec<(String, Spec)>> {
    if cfg.spec.is_empty() {
        return Err("at least one --spec is required".into());
    }
    let registry = FunctionalRegistry::with_builtins();
    cfg.spec.iter().map(|s| parse_spec(s, &registry, dim).map(|p| (s.clone(), p)).map_err(err)).collect()
}

fn check_dim(spec: &str, expected: usize, got: usize) -> CmdResult<()> {
    if expected == got {
        Ok(())
    } else {
        Err(format!("`{spec}` has dimension {expected} but the scenarios have {got} columns"))
    }
}

fn seed_for(cfg: &RunConfig, k: usize) -> u64 {
    cfg.seed.wrapping_add(100 * k as u64)
}

fn value_json(v: &ConjugateValue) -> Value {
    match v.value() {
        Some(x) => json!(x),
        None => json!("+inf"),
    }
}

pub fn evaluate(cfg: &RunConfig) -> CmdResult<Outcome> {
    if cfg.tree.is_some() {
        return evaluate_tree(cfg);
    }
    let x = scenarios(cfg)?;
    let mut results = Vec::new();
    for (text, spec) in specs(cfg, Some(x.dim()))? {
        let value = match spec {
            Spec::Scalar(rho) => {
                let v: Vec<f64> = x.columns().iter().map(|c| rho.eval(x.space(), c)).collect();
                json!({ "spec": text, "kind": "scalar", "values": v })
            }
            Spec::Vector(r) => {
                check_dim(&text, r.dim(), x.dim())?;
                json!({ "spec": text, "kind": "vector", "values": r.eval(&x).map_err(err)? })
            }
            Spec::SetValued(r) => {
                check_dim(&text, r.dim(), x.dim())?;
                let set = r.value_set(&x).map_err(err)?;
                let w = vec![-1.0 / (x.dim() as f64).sqrt(); x.dim()];
                let s = set.sigma(&w).map_err(err)?;
                json!({ "spec": text, "kind": "set_valued", "value_set": set.to_string(), "w": w,
                        "sigma": value_json(&s.value), "attainment": s.attainment })
            }
            Spec::Set(_) => return Err(format!("`{text}` is a set; use the support subcommand")),
        };
        results.push(value);
    }
    Ok((Vec::new(), results))
}

fn vector_spec(text: &str, spec: Spec) -> CmdResult<VectorRisk> {
    match spec {
        Spec::Vector(r) => Ok(r),
        _ => Err(format!("`{text}` is not a vector functional")),
    }
}

fn evaluate_tree(cfg: &RunConfig) -> CmdResult<Outcome> {
    let tree = tree(cfg)?;
    let mut results = Vec::new();
    for (text, spec) in specs(cfg, Some(tree.x.dim()))? {
        let r = vector_spec(&text, spec)?;
        check_dim(&text, r.dim(), tree.x.dim())?;
        let mut stages = Vec::new();
        for p in tree.filtration.partitions() {
            let out = eval_conditional(&ConditionalVectorRisk::cellwise(r.clone(), p.clone()), &tree.x).map_err(err)?;
            let cells: Vec<Value> =
                p.cells().iter().map(|c| json!({ "outcomes": c, "value": out.table().row(c[0]) })).collect();
            stages.push(json!({ "cells": cells }));
        }
        results.push(json!({ "spec": text, "kind": "conditional", "stages": stages }));
    }
    Ok((Vec::new(), results))
}

fn wanted(cfg: &RunConfig, name: &str) -> bool {
    let key = name.to_ascii_lowercase().replace('_', "-");
    cfg.audits.is_empty() || cfg.audits.iter().any(|a| a.to_ascii_lowercase().replace('_', "-") == key)
}

fn vector_audits(r: &VectorRisk, cfg: &RunConfig) -> CmdResult<Vec<AuditRecord>> {
    let props = [
        VectorProperty::Monotonicity,
        VectorProperty::CashSubadditivity,
        VectorProperty::CashAdditivity,
        VectorProperty::CashPreserving,
        VectorProperty::Convexity,
        VectorProperty::PositiveHomogeneity(vec![0.0, 1.0, 2.0]),
    ];
    let mut records = Vec::new();
    for (k, p) in props.iter().enumerate() {
        let key = match p {
            VectorProperty::PositiveHomogeneity(_) => "positive-homogeneity".to_string(),
            other => other.name(),
        };
        if wanted(cfg, &key) {
            records.push(audit_vector_property(r, p, cfg.trials, seed_for(cfg, k)).map_err(err)?);
        }
    }
    if wanted(cfg, "marginal-domination") {
        for i in 0..r.dim() {
            records.push(marginal_domination_diagnostic(r, i, &DEFAULT_L_SCHEDULE).map_err(err)?.to_record());
        }
    }
    Ok(records)
}

fn check_audit_names(cfg: &RunConfig, known: &[&str]) -> CmdResult<()> {
    for a in &cfg.audits {
        let key = a.to_ascii_lowercase().replace('_', "-");
        if !known.contains(&key.as_str()) {
            return Err(format!("unknown audit `{a}`; expected one of {}", known.join(", ")));
        }
    }
    Ok(())
}

pub fn audit(cfg: &RunConfig) -> CmdResult<Outcome> {
    let mut records = Vec::new();
    let mut known: Vec<&str> = ScalarProperty::ALL.iter().map(|p| p.name()).collect();
    known.extend(["positive-homogeneity", "marginal-domination", "recession"]);
    known.extend(SetProperty::ALL.iter().map(|p| p.name()));
    check_audit_names(cfg, &known)?;
    for (text, spec) in specs(cfg, None)? {
        match spec {
            Spec::Scalar(rho) => {
                for (k, p) in ScalarProperty::ALL.into_iter().enumerate() {
                    if wanted(cfg, p.name()) {
                        records.push(audit_scalar_property(&rho, p, cfg.trials, seed_for(cfg, k)).map_err(err)?);
                    }
                }
            }
            Spec::Vector(r) => records.extend(vector_audits(&r, cfg)?),
            Spec::SetValued(r) => {
                let grid = direction_grid(r.dim(), cfg.grid).map_err(err)?;
                for (k, p) in SetProperty::ALL.into_iter().enumerate() {
                    if wanted(cfg, p.name()) {
                        records.push(audit_set_property(&r, p, cfg.trials, seed_for(cfg, k), &grid).map_err(err)?);
                    }
                }
            }
            Spec::Set(c) => {
                if wanted(cfg, "recession") {
                    records.push(recession_record(&text, &c)?);
                }
            }
        }
    }
    Ok((records, Vec::new()))
}

fn recession_record(text: &str, c: &UpperConvexSet) -> CmdResult<AuditRecord> {
    let seed = c.seed_point();
    let samples: Vec<Vec<f64>> = [0.0, 1.0, 5.0].iter().map(|t| seed.iter().map(|v| v + t).collect()).collect();
    let schedule = [1e-3, 1.0, 1e3, 1e6];
    let v = recession_check(c, &samples, &schedule).map_err(err)?;
    let name = format!("recession cone contains R^N_+ ({text})");
    let anchor = "Lemma 4.3 / C + R^N_+ = C";
    Ok(match v.witness {
        None => AuditRecord::pass(name, anchor, samples.len(), 0.0),
        Some((k, i, l)) => AuditRecord::fail(
            name,
            anchor,
            samples.len(),
            l,
            Witness::new(k, format!("x + {l} e_{i} left the set")).with("x", samples[k].clone()),
        ),
    })
}

pub fn separability(cfg: &RunConfig) -> CmdResult<Outcome> {
    let mut records = Vec::new();
    let mut results = Vec::new();
    for (k, (text, spec)) in specs(cfg, None)?.into_iter().enumerate() {
        let seed = seed_for(cfg, k);
        match spec {
            Spec::Vector(r) => {
                let v = theorem31_harness(&r, cfg.trials, seed).map_err(err)?;
                records.extend(v.records());
                let space = FiniteProbabilitySpace::uniform(2).map_err(err)?.shared();
                let z = coupling_discrepancy(&r, space, &[-1.0, 1.0]).ok();
                results.push(json!({
                    "spec": text,
                    "hypotheses_hold": v.hypotheses_hold,
                    "refuted": v.refuted,
                    "contradiction": v.contradiction,
                    "invariance_max_discrepancy": v.invariance.max_residual,
                    "coupling_z_pm1": z.map(|(a, b, d)| json!({ "comonotone": a, "countermonotone": b, "discrepancy": d })),
                }));
            }
            Spec::SetValued(r) => {
                let grid = direction_grid(r.dim(), cfg.grid).map_err(err)?;
                let v = strong_separability_check(&r, cfg.trials, seed, &grid).map_err(err)?;
                records.push(v.identity.clone());
                records.extend(v.harness.records());
                results.push(json!({
                    "spec": text,
                    "identity_max_residual": v.identity.max_residual,
                    "hypotheses_hold": v.harness.hypotheses_hold,
                    "refuted": v.harness.refuted,
                }));
            }
            _ => return Err(format!("`{text}`: separability needs a vector or set-valued functional")),
        }
    }
    Ok((records, results))
}

pub fn dual(cfg: &RunConfig) -> CmdResult<Outcome> {
    let x = match cfg.scenarios {
        Some(_) => Some(scenarios(cfg)?),
        None => None,
    };
    let mut records = Vec::new();
    let mut results = Vec::new();
    for (k, (text, spec)) in specs(cfg, None)?.into_iter().enumerate() {
        let comps: Vec<ScalarRisk> = match spec {
            Spec::Vector(VectorRisk::Separable(c)) => c,
            _ => return Err(format!("`{text}`: dual needs a separable vector functional")),
        };
        records.extend(audit_dual_structure(&comps, cfg.trials, seed_for(cfg, k)).map_err(err)?);
        let Some(x) = &x else { continue };
        check_dim(&text, comps.len(), x.dim())?;
        let mut table = Vec::new();
        for (i, rho) in comps.iter().enumerate() {
            let ScalarRisk::Entropic { beta } = *rho else {
                table.push(json!({ "component": i, "oracle": Value::Null }));
                continue;
            };
            let cand = DualCandidate::entropic_oracle(beta, i, x).map_err(err)?;
            let flags = dual_feasibility(&cand.u, i, DomainInterval::CASH_ADDITIVE).map_err(err)?;
            let off = offdiagonal_zero_check(&cand.u, i, FEASIBILITY_TOL).map_err(err)?;
            let ri = |z: &RandomVector| rho.eval(z.space(), &z.column(i));
            let residual =
                biconjugate_residual(&ri, i, x, std::slice::from_ref(&cand), DomainInterval::CASH_ADDITIVE).map_err(err)?;
            table.push(json!({
                "component": i,
                "oracle": cand.u.column(i),
                "conjugate": cand.conjugate,
                "feasibility": flags,
                "offdiagonal": off,
                "biconjugate_residual": residual,
            }));
        }
        results.push(json!({ "spec": text, "components": table }));
    }
    Ok((records, results))
}

fn support_table(set: &UpperConvexSet, points: usize) -> CmdResult<Value> {
    let grid = direction_grid(set.dim(), points).map_err(err)?;
    let classes = sigma_domain_classify(set, &grid).map_err(err)?;
    let finite = classes.iter().filter(|c| c.is_finite()).count();
    let rows: Vec<Value> = classes
        .iter()
        .map(|c| {
            json!({
                "angle_deg": c.direction.angle_deg,
                "w": c.direction.w,
                "finite": c.is_finite(),
                "sigma": value_json(&c.support.value),
                "attained": c.support.attainment.is_some(),
                "method": match c.method { SupportMethod::Analytic => "analytic", SupportMethod::NumericProbe => "numeric" },
            })
        })
        .collect();
    Ok(json!({ "set": set.to_string(), "finite": finite, "infinite": classes.len() - finite, "directions": rows }))
}

pub fn support(cfg: &RunConfig) -> CmdResult<Outcome> {
    let x = match cfg.scenarios {
        Some(_) => Some(scenarios(cfg)?),
        None => None,
    };
    let mut results = Vec::new();
    for (text, spec) in specs(cfg, x.as_ref().map(|x| x.dim()))? {
        let set = match spec {
            Spec::Set(c) => c,
            Spec::SetValued(r) => {
                let x = x.as_ref().ok_or("a set-valued spec needs --scenarios")?;
                check_dim(&text, r.dim(), x.dim())?;
                r.value_set(x).map_err(err)?
            }
            _ => return Err(format!("`{text}`: support needs a set or a set-valued measure")),
        };
        let mut table = support_table(&set, cfg.grid)?;
        table["spec"] = json!(text);
        results.push(table);
    }
    Ok((Vec::new(), results))
}

fn set_valued(text: &str, spec: Spec) -> CmdResult<SetValuedRiskMeasure> {
    match spec {
        Spec::SetValued(r) => Ok(r),
        _ => Err(format!("`{text}` is not a set-valued measure")),
    }
}

pub fn frontier(cfg: &RunConfig) -> CmdResult<Outcome> {
    let x = scenarios(cfg)?;
    let all = specs(cfg, Some(x.dim()))?;
    if all.len() != 1 {
        return Err("frontier takes exactly one --spec".into());
    }
    let (text, spec) = all.into_iter().next().expect("one spec");
    let r = set_valued(&text, spec)?;
    check_dim(&text, r.dim(), x.dim())?;
    let grid = quarter_circle(cfg.grid).map_err(err)?;
    let points = frontier_sample(&r, &x, &grid).map_err(err)?;
    let csv = frontier_csv(&points).map_err(err)?;
    let finite = points.iter().filter(|p| p.sigma.is_finite()).count();
    let mut result = json!({ "spec": text, "points": points.len(), "finite": finite });
    match &cfg.csv {
        Some(path) => {
            std::fs::write(path, &csv).map_err(|e| format!("{path}: {e}"))?;
            result["csv_path"] = json!(path);
        }
        None => result["csv"] = json!(csv),
    }
    Ok((Vec::new(), vec![result]))
}

pub fn allocate(cfg: &RunConfig) -> CmdResult<Outcome> {
    let x = scenarios(cfg)?;
    let mut records = Vec::new();
    let mut results = Vec::new();
    for (k, (text, spec)) in specs(cfg, Some(x.dim()))?.into_iter().enumerate() {
        let r = set_valued(&text, spec)?;
        check_dim(&text, r.dim(), x.dim())?;
        let v = cfg.weights.clone().unwrap_or_else(|| vec![1.0; r.dim()]);
        let name = format!("efficient allocation (v = {v:?})");
        let anchor = "Cor 4.9 / efficient allocation";
        let result = match efficient_allocation(&r, &x, &v) {
            Ok(a) => {
                let member = sv_membership(&r, &x, &nudged(&a.m)).map_err(err)?;
                let gap = (a.total + a.support).abs();
                records.push(if member && gap <= cfg.tolerances.inclusion {
                    AuditRecord::pass(&name, anchor, 1, gap)
                } else {
                    AuditRecord::fail(
                        &name,
                        anchor,
                        1,
                        gap,
                        Witness::new(0, if member { "v^T m* != -sigma(-v)" } else { "m* is outside R(X)" })
                            .with("m", a.m.clone()),
                    )
                });
                json!({ "spec": text, "v": v, "status": "attained", "m": a.m, "total": a.total, "support": a.support })
            }
            Err(RiskError::Unbounded { direction }) => {
                records.push(AuditRecord::pass(&name, anchor, 1, 0.0).informational());
                json!({ "spec": text, "v": v, "status": "unbounded", "direction": direction })
            }
            Err(RiskError::NotAttained { infimum }) => {
                records.push(AuditRecord::pass(&name, anchor, 1, 0.0).informational());
                json!({ "spec": text, "v": v, "status": "not_attained", "infimum": infimum })
            }
            Err(e) => return Err(err(e)),
        };
        results.push(result);
        let rule = allocation_rule(&r, v);
        let diag = allocation_rule_diagnostic(&rule, &r, cfg.trials, seed_for(cfg, k)).map_err(err)?;
        records.push(diag.membership.clone());
        records.extend(diag.harness.records());
        results.push(json!({
            "rule": rule.name(),
            "hypotheses_hold": diag.harness.hypotheses_hold,
            "refuted": diag.harness.refuted,
            "consistent": diag.consistent,
        }));
    }
    Ok((records, results))
}

pub fn conditional(cfg: &RunConfig) -> CmdResult<Outcome> {
    let tree = tree(cfg)?;
    let mut records = Vec::new();
    let mut results = Vec::new();
    for (k, (text, spec)) in specs(cfg, Some(tree.x.dim()))?.into_iter().enumerate() {
        let r = vector_spec(&text, spec)?;
        check_dim(&text, r.dim(), tree.x.dim())?;
        let family: Vec<ConditionalVectorRisk> = tree
            .filtration
            .partitions()
            .iter()
            .map(|p| ConditionalVectorRisk::cellwise(r.clone(), p.clone()))
            .collect();
        let seed = seed_for(cfg, k);
        for (s, c) in family.iter().enumerate() {
            let tag = |mut rec: AuditRecord| {
                rec.name = format!("{} (stage {s})", rec.name);
                rec
            };
            records.push(tag(audit_locality(c, cfg.trials, seed.wrapping_add(s as u64)).map_err(err)?));
            records.push(tag(conditional_separability_diagnostic(c, cfg.trials, seed.wrapping_add(s as u64)).map_err(err)?));
        }
        // equal-beta entropic is the reference family where consistency is known
        let reference = matches!(&r, VectorRisk::Separable(c) if c.iter().all(|p| matches!(p, ScalarRisk::Entropic { .. })));
        let mut residuals = Vec::new();
        for s in 0..family.len() {
            for t in s + 1..family.len() {
                let res = time_consistency_check(&family, &tree.x, s, t).map_err(err)?;
                residuals.push(json!({ "s": s, "t": t, "residual": res }));
                let name = format!("time consistency (stages {s}, {t})");
                let anchor = "Sec 4.2 / time consistency (diagnostic)";
                records.push(if !reference {
                    AuditRecord::pass(name, anchor, 1, res).informational()
                } else if res <= cfg.tolerances.closed_form {
                    AuditRecord::pass(name, anchor, 1, res)
                } else {
                    AuditRecord::fail(name, anchor, 1, res, Witness::new(0, "r^s(X) != r^s(-r^t(X))").with("X", tree.x.table().values()))
                });
            }
        }
        results.push(json!({ "spec": text, "stages": family.len(), "reference_family": reference, "time_consistency": residuals }));
    }
    Ok((records, results))
}

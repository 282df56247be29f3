//! Closed convex upper sets in `R^N`, held dually: a membership oracle and
//! a support function `sigma_C(w) = sup_{x in C} w^T x` with extended
//! values.
//!
//! The entropic offset set is
//! `C = { -(log(1 - b_i k_i) / b_i)_i : k in K, k_i < 1/b_i }`
//! for an upper halfspace polyhedron `K` with `0` on its boundary. The
//! substitution `y_i = exp(-b_i x_i) = 1 - b_i k_i` turns `sigma_C(w)` into
//! the maximization of the concave `sum_i (-w_i/b_i) log y_i` over the
//! polyhedron `{ y > 0 : g_r^T y <= h_r }`.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, RiskError};
use crate::extended::{ConjugateValue, DIVERGENCE_THRESHOLD};
use crate::optimize::{golden_section_max, quadratic_polish, Maximum};
use crate::sampling;

/// Slack allowed on `a^T k >= b` in entropic membership.
pub const BOUNDARY_TOL: f64 = 1e-12;
/// Tolerance of support-function inclusion tests.
pub const INCLUSION_TOL: f64 = 1e-8;
/// Default size of the quarter-circle direction grid.
pub const DEFAULT_GRID_POINTS: usize = 181;

/// Probe scale cap for ray searches.
const MAX_RAY: f64 = 1e12;
/// Shrink applied to the analytic bracket of the 1-D support problem.
const BRACKET_SHRINK: f64 = 1e-12;

/// Row `a^T k >= b` of the polyhedron `K`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfspaceRow {
    pub a: Vec<f64>,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UpperConvexSet {
    /// `R^N_+`.
    Orthant { dim: usize },
    /// `{ x : u^T x >= c }` with `u >= 0`, `u != 0`.
    Halfspace { normal: Vec<f64>, offset: f64 },
    EntropicOffset { rows: Vec<HalfspaceRow>, beta: Vec<f64> },
    /// `shift + base`.
    Shifted { base: Box<UpperConvexSet>, shift: Vec<f64> },
}

/// Value of a support function and, when the sup is attained, a maximizer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Support {
    pub value: ConjugateValue,
    pub attainment: Option<Vec<f64>>,
}

impl Support {
    fn attained(value: f64, at: Vec<f64>) -> Self {
        Self { value: ConjugateValue::finite(value), attainment: Some(at) }
    }

    fn unattained(value: f64) -> Self {
        Self { value: ConjugateValue::finite(value), attainment: None }
    }

    fn infinite(direction: Vec<f64>, probes: Vec<(f64, f64)>, reason: &str) -> Self {
        Self { value: ConjugateValue::infinite(direction, probes, reason), attainment: None }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got { Ok(()) } else { Err(RiskError::DimensionMismatch { expected, got }) }
}

/// Probes `t -> origin + t d` at `t = 1, 10, ...` until `w^T x` passes the
/// divergence threshold.
fn ray_probes(origin: &[f64], d: &[f64], w: &[f64]) -> Vec<(f64, f64)> {
    let mut probes = Vec::new();
    let mut t = 1.0;
    loop {
        let v = dot(w, origin) + t * dot(w, d);
        probes.push((t, v));
        if v > DIVERGENCE_THRESHOLD || t >= MAX_RAY {
            return probes;
        }
        t *= 10.0;
    }
}

/// Certificate for `w` with a positive entry: `e_j` is a recession direction
/// of every upper set.
fn positive_direction_support(seed: &[f64], w: &[f64]) -> Option<Support> {
    let j = w.iter().position(|&v| v > 0.0)?;
    let mut d = vec![0.0; w.len()];
    d[j] = 1.0;
    let probes = ray_probes(seed, &d, w);
    Some(Support::infinite(d, probes, "w has a positive entry and C + R^N_+ = C"))
}

impl UpperConvexSet {
    pub fn orthant(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(RiskError::InvalidParameter("dimension must be >= 1".into()));
        }
        Ok(Self::Orthant { dim })
    }

    pub fn halfspace(normal: Vec<f64>, offset: f64) -> Result<Self> {
        if normal.is_empty() || normal.iter().any(|&u| !(u >= 0.0 && u.is_finite())) || normal.iter().sum::<f64>() <= 0.0
        {
            return Err(RiskError::InvalidParameter(format!("halfspace normal must be >= 0 and nonzero, got {normal:?}")));
        }
        if !offset.is_finite() {
            return Err(RiskError::InvalidParameter("halfspace offset must be finite".into()));
        }
        Ok(Self::Halfspace { normal, offset })
    }

    /// Entropic offset of `K = { k : a_r^T k >= b_r }`.
    pub fn entropic(rows: Vec<HalfspaceRow>, beta: Vec<f64>) -> Result<Self> {
        let n = beta.len();
        if n == 0 || beta.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
            return Err(RiskError::InvalidParameter(format!("beta must be positive, got {beta:?}")));
        }
        if rows.is_empty() {
            return Err(RiskError::InvalidParameter("K needs at least one halfspace".into()));
        }
        for row in &rows {
            check_dim(n, row.a.len())?;
            if row.a.iter().any(|&a| !(a >= 0.0 && a.is_finite())) {
                return Err(RiskError::InvalidParameter(format!("K + R^N_+ = K needs a >= 0, got {:?}", row.a)));
            }
            if !(row.b <= 0.0) {
                return Err(RiskError::InvalidParameter(format!("0 must lie in K, got b = {}", row.b)));
            }
        }
        if !rows.iter().any(|r| r.b.abs() <= BOUNDARY_TOL && r.a.iter().any(|&a| a > 0.0)) {
            return Err(RiskError::InvalidParameter("0 must lie on the boundary of K".into()));
        }
        Ok(Self::EntropicOffset { rows, beta })
    }

    /// `K = { k_1 + k_2 >= 0 }`, `beta = (1, 1)`.
    pub fn flagship() -> Self {
        Self::entropic(vec![HalfspaceRow { a: vec![1.0, 1.0], b: 0.0 }], vec![1.0, 1.0]).expect("valid")
    }

    pub fn shifted(self, shift: Vec<f64>) -> Result<Self> {
        check_dim(self.dim(), shift.len())?;
        Ok(match self {
            Self::Shifted { base, shift: inner } => {
                Self::Shifted { base, shift: inner.iter().zip(&shift).map(|(a, b)| a + b).collect() }
            }
            base => Self::Shifted { base: Box::new(base), shift },
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Orthant { dim } => *dim,
            Self::Halfspace { normal, .. } => normal.len(),
            Self::EntropicOffset { beta, .. } => beta.len(),
            Self::Shifted { shift, .. } => shift.len(),
        }
    }

    /// Whether the recession cone is exactly `R^N_+`.
    pub fn has_orthant_recession(&self) -> bool {
        match self {
            Self::Orthant { .. } | Self::EntropicOffset { .. } => true,
            Self::Halfspace { normal, .. } => normal.len() == 1,
            Self::Shifted { base, .. } => base.has_orthant_recession(),
        }
    }

    /// A point known to lie in the set.
    pub fn seed_point(&self) -> Vec<f64> {
        match self {
            Self::Orthant { dim } => vec![0.0; *dim],
            Self::Halfspace { normal, offset } => {
                let norm2 = dot(normal, normal);
                normal.iter().map(|u| offset * u / norm2).collect()
            }
            Self::EntropicOffset { beta, .. } => vec![0.0; beta.len()],
            Self::Shifted { base, shift } => base.seed_point().iter().zip(shift).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn membership(&self, x: &[f64]) -> Result<bool> {
        check_dim(self.dim(), x.len())?;
        Ok(match self {
            Self::Orthant { .. } => x.iter().all(|&v| v >= 0.0),
            Self::Halfspace { normal, offset } => dot(normal, x) >= *offset,
            Self::EntropicOffset { rows, beta } => {
                let k: Vec<f64> = x.iter().zip(beta).map(|(&xi, &b)| -(-b * xi).exp_m1() / b).collect();
                rows.iter().all(|row| {
                    let ak: f64 = row.a.iter().zip(&k).map(|(&a, &ki)| if a == 0.0 { 0.0 } else { a * ki }).sum();
                    ak >= row.b - BOUNDARY_TOL
                })
            }
            Self::Shifted { base, shift } => {
                let local: Vec<f64> = x.iter().zip(shift).map(|(a, b)| a - b).collect();
                base.membership(&local)?
            }
        })
    }

    pub fn sigma(&self, w: &[f64]) -> Result<Support> {
        check_dim(self.dim(), w.len())?;
        match self {
            Self::Orthant { dim } => Ok(positive_direction_support(&vec![0.0; *dim], w)
                .unwrap_or_else(|| Support::attained(0.0, vec![0.0; *dim]))),
            Self::Halfspace { normal, offset } => Ok(halfspace_sigma(normal, *offset, w)),
            Self::EntropicOffset { rows, beta } => entropic_sigma(rows, beta, w),
            Self::Shifted { base, shift } => {
                let inner = base.sigma(w)?;
                Ok(Support {
                    value: inner.value.offset(dot(w, shift)),
                    attainment: inner.attainment.map(|a| a.iter().zip(shift).map(|(x, s)| x + s).collect()),
                })
            }
        }
    }
}

impl fmt::Display for UpperConvexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        match self {
            Self::Orthant { .. } => write!(f, "orthant"),
            Self::Halfspace { normal, offset } => write!(f, "halfspace:u={};c={}", list(normal), offset),
            Self::EntropicOffset { rows, beta } => {
                let k: Vec<String> = rows.iter().map(|r| format!("[{},{}]", list(&r.a), r.b)).collect();
                write!(f, "entropic:K=[{}];beta={}", k.join(","), list(beta))
            }
            Self::Shifted { base, shift } => write!(f, "shift({};{})", list(shift), base),
        }
    }
}

fn halfspace_sigma(u: &[f64], c: f64, w: &[f64]) -> Support {
    let norm2 = dot(u, u);
    let lambda = -dot(w, u) / norm2;
    let residual: Vec<f64> = w.iter().zip(u).map(|(wi, ui)| wi + lambda * ui).collect();
    let scale = dot(w, w).sqrt().max(1.0);
    let base: Vec<f64> = u.iter().map(|ui| c * ui / norm2).collect();
    if dot(&residual, &residual).sqrt() <= 1e-12 * scale {
        if lambda >= 0.0 {
            return Support::attained(-lambda * c, base);
        }
        let probes = ray_probes(&base, u, w);
        return Support::infinite(u.to_vec(), probes, "w is a positive multiple of the normal");
    }
    // `residual` is orthogonal to `u`, so the ray stays in the halfspace.
    let probes = ray_probes(&base, &residual, w);
    Support::infinite(residual, probes, "w is not a nonpositive multiple of the normal")
}

/// `K` in `y` coordinates: `g_r^T y <= h_r`, `y > 0`.
struct YPolyhedron {
    g: Vec<Vec<f64>>,
    h: Vec<f64>,
}

impl YPolyhedron {
    fn new(rows: &[HalfspaceRow], beta: &[f64]) -> Self {
        let g: Vec<Vec<f64>> = rows.iter().map(|r| r.a.iter().zip(beta).map(|(a, b)| a / b).collect()).collect();
        let h = rows.iter().zip(&g).map(|(r, gr)| gr.iter().sum::<f64>() - r.b).collect();
        Self { g, h }
    }

    fn swapped(&self) -> Self {
        Self { g: self.g.iter().map(|r| vec![r[1], r[0]]).collect(), h: self.h.clone() }
    }

    fn slack(&self, y: &[f64]) -> f64 {
        self.g.iter().zip(&self.h).map(|(g, h)| h - dot(g, y)).fold(f64::INFINITY, f64::min)
    }

    /// Largest `y_2` allowed at `y_1`: `min_{g_r2 > 0} (h_r - g_r1 y_1) / g_r2`.
    fn upper(&self, y1: f64) -> f64 {
        self.g
            .iter()
            .zip(&self.h)
            .filter(|(g, _)| g[1] > 0.0)
            .map(|(g, h)| (h - g[0] * y1) / g[1])
            .fold(f64::INFINITY, f64::min)
    }

    /// `sup y_1` over the closure of the feasible set plus whether `y_2 > 0`
    /// is still available there.
    fn y1_max(&self) -> (f64, bool) {
        let mut weak = f64::INFINITY;
        let mut strict = f64::INFINITY;
        for (g, h) in self.g.iter().zip(&self.h) {
            if g[0] > 0.0 {
                let t = h / g[0];
                if g[1] > 0.0 { strict = strict.min(t) } else { weak = weak.min(t) }
            }
        }
        (weak.min(strict), weak < strict)
    }
}

fn entropic_sigma(rows: &[HalfspaceRow], beta: &[f64], w: &[f64]) -> Result<Support> {
    let zero = vec![0.0; beta.len()];
    if let Some(s) = positive_direction_support(&zero, w) {
        return Ok(s);
    }
    if beta.len() != 2 {
        return Err(RiskError::Unsupported(format!(
            "closed-form entropic support needs N = 2, got N = {}",
            beta.len()
        )));
    }
    if w.iter().all(|&v| v == 0.0) {
        return Ok(Support::attained(0.0, zero));
    }
    let poly = YPolyhedron::new(rows, beta);
    let c = [-w[0] / beta[0], -w[1] / beta[1]];
    for i in 0..2 {
        if c[i] > 0.0 && !poly.g.iter().any(|g| g[i] > 0.0) {
            let mut d = vec![0.0; 2];
            d[i] = -1.0;
            let probes = ray_probes(&zero, &d, w);
            return Ok(Support::infinite(d, probes, "coordinate unconstrained below by K"));
        }
    }
    let to_x = |y: [f64; 2]| vec![-y[0].ln() / beta[0], -y[1].ln() / beta[1]];
    if c[1] == 0.0 || c[0] == 0.0 {
        // Only one logarithm is active; the sup sits at the largest
        // feasible value of that coordinate.
        // `q` has the active coordinate first.
        let (i, q) = if c[1] == 0.0 { (0, poly) } else { (1, poly.swapped()) };
        let (ymax, room) = q.y1_max();
        let value = c[i] * ymax.ln();
        if !room {
            return Ok(Support::unattained(value));
        }
        let other = q.upper(ymax);
        let other = if other.is_finite() { other } else { 1.0 };
        let y = if i == 0 { [ymax, other] } else { [other, ymax] };
        return Ok(Support::attained(value, to_x(y)));
    }
    let (ymax, room) = poly.y1_max();
    let psi = |y1: f64| {
        let y2 = poly.upper(y1);
        if y1 <= 0.0 || !(y2 > 0.0) { f64::NEG_INFINITY } else { c[0] * y1.ln() + c[1] * y2.ln() }
    };
    let lo = BRACKET_SHRINK.min(ymax / 2.0);
    let hi = if room { ymax } else { ymax - BRACKET_SHRINK * ymax.max(1.0) };
    let m = golden_section_max(psi, lo, hi, BRACKET_SHRINK);
    let m = quadratic_polish(psi, m, 1e-7 * ymax.max(1.0), lo, hi);
    let Maximum { x: y1, value } = m;
    Ok(Support::attained(value, to_x([y1, poly.upper(y1)])))
}

/// Independent check of the reduction to the boundary: a zooming 2-D grid
/// search over the inequality-constrained problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActiveConstraintReport {
    pub value_reduced: f64,
    pub value_grid: f64,
    /// Maximizer of the grid search in `y` coordinates.
    pub optimizer_y: Vec<f64>,
    /// `min_r (h_r - g_r^T y)` at the grid maximizer.
    pub slack: f64,
}

pub fn active_constraint_residual(set: &UpperConvexSet, w: &[f64]) -> Result<ActiveConstraintReport> {
    let UpperConvexSet::EntropicOffset { rows, beta } = set else {
        return Err(RiskError::Unsupported("active-constraint check needs an entropic offset set".into()));
    };
    check_dim(beta.len(), w.len())?;
    if beta.len() != 2 || !w.iter().all(|&v| v < 0.0) {
        return Err(RiskError::Precondition("needs N = 2 and w in the open negative orthant".into()));
    }
    let reduced = set.sigma(w)?.value.value().ok_or_else(|| RiskError::Precondition("infinite support".into()))?;
    let poly = YPolyhedron::new(rows, beta);
    let c = [-w[0] / beta[0], -w[1] / beta[1]];
    let (y1max, _) = poly.y1_max();
    let y2max = poly.swapped().y1_max().0;
    let objective = |y: [f64; 2]| {
        if y[0] <= 0.0 || y[1] <= 0.0 || poly.slack(&y) < 0.0 {
            f64::NEG_INFINITY
        } else {
            c[0] * y[0].ln() + c[1] * y[1].ln()
        }
    };
    const RES: usize = 41;
    let mut centre = [y1max / 2.0, y2max / 2.0];
    let mut half = [y1max / 2.0, y2max / 2.0];
    let mut best = ([1.0, 1.0], objective([1.0, 1.0]));
    for _ in 0..14 {
        for a in 0..RES {
            for b in 0..RES {
                let y = [
                    centre[0] - half[0] + 2.0 * half[0] * a as f64 / (RES - 1) as f64,
                    centre[1] - half[1] + 2.0 * half[1] * b as f64 / (RES - 1) as f64,
                ];
                let v = objective(y);
                if v > best.1 {
                    best = (y, v);
                }
            }
        }
        centre = best.0;
        half = [4.0 * half[0] / (RES - 1) as f64, 4.0 * half[1] / (RES - 1) as f64];
    }
    Ok(ActiveConstraintReport {
        value_reduced: reduced,
        value_grid: best.1,
        optimizer_y: best.0.to_vec(),
        slack: poly.slack(&best.0),
    })
}

/// A unit direction, with its angle when it comes from the quarter circle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Direction {
    pub angle_deg: Option<f64>,
    pub w: Vec<f64>,
}

fn snap(v: f64) -> f64 {
    if v.abs() < 1e-15 { 0.0 } else { v }
}

/// `points` unit vectors of `R^2_-` at angles from 180 to 270 degrees,
/// endpoints included (they are the axis directions `-e_1`, `-e_2`).
pub fn quarter_circle(points: usize) -> Result<Vec<Direction>> {
    if points < 2 {
        return Err(RiskError::InvalidParameter("direction grid needs at least 2 points".into()));
    }
    Ok((0..points)
        .map(|k| {
            let deg = 180.0 + 90.0 * k as f64 / (points - 1) as f64;
            let rad = deg.to_radians();
            Direction { angle_deg: Some(deg), w: vec![snap(rad.cos()), snap(rad.sin())] }
        })
        .collect())
}

/// Directions of `R^N_- \ {0}` for any `N`: the quarter circle for
/// `N = 2`; axes, the diagonal and seeded samples otherwise.
pub fn direction_grid(dim: usize, points: usize) -> Result<Vec<Direction>> {
    match dim {
        0 => Err(RiskError::InvalidParameter("dimension must be >= 1".into())),
        1 => Ok(vec![Direction { angle_deg: None, w: vec![-1.0] }]),
        2 => quarter_circle(points),
        _ => {
            let mut out: Vec<Direction> = (0..dim)
                .map(|i| {
                    let mut w = vec![0.0; dim];
                    w[i] = -1.0;
                    Direction { angle_deg: None, w }
                })
                .collect();
            out.push(Direction { angle_deg: None, w: vec![-1.0 / (dim as f64).sqrt(); dim] });
            let mut rng = sampling::trial_rng(0, 0);
            while out.len() < points.max(dim + 1) {
                let raw: Vec<f64> = (0..dim).map(|_| -rng.random_range(0.0..1.0f64)).collect();
                let norm = dot(&raw, &raw).sqrt();
                if norm > 1e-3 {
                    out.push(Direction { angle_deg: None, w: raw.iter().map(|v| v / norm).collect() });
                }
            }
            Ok(out)
        }
    }
}

/// Lower estimate of `sigma_C(w)` from ray searches through a known member,
/// used when no closed form is available. A ray that never leaves `C` and
/// improves `w^T x` certifies `+inf`.
pub fn numeric_sigma(set: &UpperConvexSet, w: &[f64], rays: &[Vec<f64>]) -> Result<Support> {
    check_dim(set.dim(), w.len())?;
    let seed = set.seed_point();
    if let Some(s) = positive_direction_support(&seed, w) {
        return Ok(s);
    }
    let at = |d: &[f64], t: f64| -> Vec<f64> { seed.iter().zip(d).map(|(s, di)| s + t * di).collect() };
    let mut best = (dot(w, &seed), seed.clone());
    for d in rays {
        check_dim(set.dim(), d.len())?;
        let slope = dot(w, d);
        if set.membership(&at(d, MAX_RAY))? {
            if slope > 0.0 {
                return Ok(Support::infinite(d.clone(), ray_probes(&seed, d, w), "ray stays in C"));
            }
            continue;
        }
        // Bracket the exit scale geometrically, then bisect.
        let mut lo = 0.0;
        let mut hi = 1e-6;
        while set.membership(&at(d, hi))? {
            lo = hi;
            hi *= 10.0;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if set.membership(&at(d, mid))? { lo = mid } else { hi = mid }
        }
        let x = at(d, lo);
        let v = dot(w, &x);
        if v > best.0 {
            best = (v, x);
        }
    }
    Ok(Support::attained(best.0, best.1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportMethod {
    Analytic,
    NumericProbe,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionClass {
    pub direction: Direction,
    pub support: Support,
    pub method: SupportMethod,
}

impl DirectionClass {
    pub fn is_finite(&self) -> bool {
        self.support.is_finite()
    }
}

/// Rays used by the numeric fallback: the grid itself plus `e_i - e_j`.
fn fallback_rays(dim: usize, grid: &[Direction]) -> Vec<Vec<f64>> {
    let mut rays: Vec<Vec<f64>> = grid.iter().map(|d| d.w.clone()).collect();
    for i in 0..dim {
        for j in 0..dim {
            if i != j {
                let mut d = vec![0.0; dim];
                d[i] = 1.0;
                d[j] = -1.0;
                rays.push(d);
            }
        }
    }
    rays
}

/// Support value per grid direction, analytic where available.
pub fn sigma_domain_classify(set: &UpperConvexSet, grid: &[Direction]) -> Result<Vec<DirectionClass>> {
    if grid.is_empty() {
        return Err(RiskError::InvalidParameter("empty direction grid".into()));
    }
    let rays = fallback_rays(set.dim(), grid);
    grid.par_iter()
        .map(|direction| {
            let (support, method) = match set.sigma(&direction.w) {
                Ok(s) => (s, SupportMethod::Analytic),
                Err(RiskError::Unsupported(_)) => (numeric_sigma(set, &direction.w, &rays)?, SupportMethod::NumericProbe),
                Err(e) => return Err(e),
            };
            Ok(DirectionClass { direction: direction.clone(), support, method })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Separation {
    pub w: Vec<f64>,
    pub sigma_x: f64,
    pub sigma_y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CancellationVerdict {
    /// `x <= y` componentwise.
    pub comparable: bool,
    /// Inclusion inequalities hold (comparable) or a separating direction
    /// was found (incomparable).
    pub holds: bool,
    /// Largest `sigma_{y+C} - sigma_{x+C}` over finite directions.
    pub max_violation: f64,
    pub separating: Option<Separation>,
    pub finite_directions: usize,
}

/// `x + C ⊇ y + C` forces `x <= y` for upper sets with recession cone
/// `R^N_+`: checked through `sigma_{x+C}(w) = w^T x + sigma_C(w)`.
pub fn cancellation_check(set: &UpperConvexSet, x: &[f64], y: &[f64], grid: &[Direction]) -> Result<CancellationVerdict> {
    check_dim(set.dim(), x.len())?;
    check_dim(set.dim(), y.len())?;
    if !set.has_orthant_recession() {
        return Err(RiskError::Precondition("cancellation needs recession cone R^N_+".into()));
    }
    let classes = sigma_domain_classify(set, grid)?;
    let comparable = x.iter().zip(y).all(|(a, b)| a <= b);
    let mut max_violation: f64 = 0.0;
    let mut separating: Option<Separation> = None;
    let mut finite = 0;
    for class in &classes {
        let Some(s) = class.support.value.value() else { continue };
        finite += 1;
        let w = &class.direction.w;
        let (sx, sy) = (dot(w, x) + s, dot(w, y) + s);
        max_violation = max_violation.max(sy - sx);
        if !comparable && sx < sy - INCLUSION_TOL && separating.as_ref().is_none_or(|best| sx - sy < best.sigma_x - best.sigma_y) {
            separating = Some(Separation { w: w.clone(), sigma_x: sx, sigma_y: sy });
        }
    }
    let holds = if comparable { max_violation <= INCLUSION_TOL } else { separating.is_some() };
    Ok(CancellationVerdict { comparable, holds, max_violation, separating, finite_directions: finite })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExitProbe {
    pub direction: Vec<f64>,
    /// First schedule scale at which the probe left the set.
    pub exit_lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecessionVerdict {
    /// `x + lambda e_i` stayed in the set for every sample, axis and scale.
    pub holds: bool,
    /// `(sample, axis, lambda)` of the first violation.
    pub witness: Option<(usize, usize, f64)>,
    pub exits: Vec<ExitProbe>,
    /// Every `e_i - e_j` probe exited, so the recession cone is no larger
    /// than `R^N_+` along those directions.
    pub recession_is_orthant: bool,
}

pub fn recession_check(set: &UpperConvexSet, samples: &[Vec<f64>], schedule: &[f64]) -> Result<RecessionVerdict> {
    if samples.is_empty() || schedule.is_empty() || schedule.iter().any(|&l| !(l > 0.0)) {
        return Err(RiskError::InvalidParameter("need samples and a positive schedule".into()));
    }
    let dim = set.dim();
    for (k, x) in samples.iter().enumerate() {
        if !set.membership(x)? {
            return Err(RiskError::Precondition(format!("sample {k} is not in C")));
        }
    }
    let mut witness = None;
    'outer: for (k, x) in samples.iter().enumerate() {
        for i in 0..dim {
            for &l in schedule {
                let mut z = x.clone();
                z[i] += l;
                if !set.membership(&z)? {
                    witness = Some((k, i, l));
                    break 'outer;
                }
            }
        }
    }
    let mut exits = Vec::new();
    let origin = &samples[0];
    for i in 0..dim {
        for j in 0..dim {
            if i == j {
                continue;
            }
            let mut d = vec![0.0; dim];
            d[i] = 1.0;
            d[j] = -1.0;
            let mut exit_lambda = None;
            let mut l = 1.0;
            while l <= MAX_RAY {
                let z: Vec<f64> = origin.iter().zip(&d).map(|(a, b)| a + l * b).collect();
                if !set.membership(&z)? {
                    exit_lambda = Some(l);
                    break;
                }
                l *= 10.0;
            }
            exits.push(ExitProbe { direction: d, exit_lambda });
        }
    }
    let recession_is_orthant = exits.iter().all(|e| e.exit_lambda.is_some());
    Ok(RecessionVerdict { holds: witness.is_none(), witness, exits, recession_is_orthant })
}

/// Closed convex cones with finite descriptions.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Cone {
    Orthant { dim: usize },
    NegOrthant { dim: usize },
    Zero { dim: usize },
    Whole { dim: usize },
    /// Conic hull of the generators.
    Generated { dim: usize, generators: Vec<Vec<f64>> },
    /// `{ w : n^T w <= 0 }` for every normal `n`.
    Halfspaces { dim: usize, normals: Vec<Vec<f64>> },
}

impl Cone {
    pub fn dim(&self) -> usize {
        match self {
            Self::Orthant { dim }
            | Self::NegOrthant { dim }
            | Self::Zero { dim }
            | Self::Whole { dim }
            | Self::Generated { dim, .. }
            | Self::Halfspaces { dim, .. } => *dim,
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        check_dim(self.dim(), x.len())?;
        Ok(match self {
            Self::Orthant { .. } => x.iter().all(|&v| v >= -tol),
            Self::NegOrthant { .. } => x.iter().all(|&v| v <= tol),
            Self::Zero { .. } => x.iter().all(|&v| v.abs() <= tol),
            Self::Whole { .. } => true,
            Self::Halfspaces { normals, .. } => normals.iter().all(|n| dot(n, x) <= tol),
            Self::Generated { generators, .. } => in_conic_hull(generators, x, tol),
        })
    }
}

/// `C° = { w : w^T x <= 0 for all x in C }`.
pub fn polar(cone: &Cone) -> Result<Cone> {
    let dim = cone.dim();
    let check = |vs: &[Vec<f64>]| vs.iter().try_for_each(|v| check_dim(dim, v.len()));
    Ok(match cone {
        Cone::Orthant { .. } => Cone::NegOrthant { dim },
        Cone::NegOrthant { .. } => Cone::Orthant { dim },
        Cone::Zero { .. } => Cone::Whole { dim },
        Cone::Whole { .. } => Cone::Zero { dim },
        Cone::Generated { generators, .. } => {
            check(generators)?;
            Cone::Halfspaces { dim, normals: generators.clone() }
        }
        Cone::Halfspaces { normals, .. } => {
            check(normals)?;
            Cone::Generated { dim, generators: normals.clone() }
        }
    })
}

/// Carathéodory: `x` is in the conic hull iff some at most `dim`
/// generators reproduce it with nonnegative least-squares weights.
fn in_conic_hull(generators: &[Vec<f64>], x: &[f64], tol: f64) -> bool {
    let dim = x.len();
    if x.iter().all(|v| v.abs() <= tol) {
        return true;
    }
    let scale = 1.0 + dot(x, x).sqrt();
    let target = nalgebra::DVector::from_column_slice(x);
    let mut subset = Vec::new();
    fn visit(
        start: usize,
        left: usize,
        subset: &mut Vec<usize>,
        test: &mut dyn FnMut(&[usize]) -> bool,
        total: usize,
    ) -> bool {
        if !subset.is_empty() && test(subset) {
            return true;
        }
        if left == 0 {
            return false;
        }
        for k in start..total {
            subset.push(k);
            if visit(k + 1, left - 1, subset, test, total) {
                return true;
            }
            subset.pop();
        }
        false
    }
    let mut test = |idx: &[usize]| {
        let m = nalgebra::DMatrix::from_fn(dim, idx.len(), |r, c| generators[idx[c]][r]);
        let Ok(lambda) = m.clone().svd(true, true).solve(&target, 1e-12) else { return false };
        let residual = (&m * &lambda - &target).norm();
        lambda.iter().all(|&l| l >= -tol) && residual <= tol * scale
    };
    visit(0, dim.min(generators.len()), &mut subset, &mut test, generators.len())
}

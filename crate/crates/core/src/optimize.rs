//! Parameter searches that cancel leading error coefficients.
//!
//! Conditions are evaluated by contracting the family's step sequence as a
//! series at the candidate parameters. Equalities are solved by a bracket
//! scan followed by safeguarded secant steps; with two free parameters the
//! last one is solved for in an inner loop so the outer search is scalar.

use crate::analysis::{extract_error_profile, ErrorProfile, Precision, PROFILE_ORDER};
use crate::error::{Error, Result};
use crate::propagator::{bda_t1_min, ContractedPropagator, Family, FamilyParams};
use crate::real::DoubleDouble;
use crate::series::factorial;

/// Residual required of every solved equality.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Iteration cap per scalar root.
pub const MAX_ITER: usize = 200;

const SCAN_POINTS: usize = 400;
const INNER_SCAN_POINTS: usize = 32;
const MAX_GRID_STEP: f64 = 1e-3;
const GOLDEN_TOL: f64 = 1e-7;
const COEFF_ORDER: usize = 12;
/// ACB's `t₀` range stops short of the pole of `v₁` at `½`.
const ACB_T0_SCAN_MAX: f64 = 0.499;

/// A scaled series coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coefficient {
    /// `δ_k` of ζ₁, `k` even.
    Zeta(usize),
    /// `δ′_k` of κ₁, `k` odd.
    Kappa(usize),
}

impl std::fmt::Display for Coefficient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Coefficient::Zeta(k) => write!(f, "delta_{k}"),
            Coefficient::Kappa(k) => write!(f, "delta'_{k}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Goal {
    Equal(Coefficient, f64),
    Maximize(Coefficient),
}

/// A free parameter and its search interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Parameter {
    pub name: &'static str,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizationTarget {
    pub label: String,
    pub family: Family,
    pub goals: Vec<Goal>,
    /// Free parameters in family order; with two, the last is the inner one.
    pub parameters: Vec<Parameter>,
}

/// Free parameters of a family over its admissible domain.
pub fn family_parameters(family: Family) -> Vec<Parameter> {
    let unit = |name| Parameter { name, lower: 0.0, upper: 1.0 };
    match family {
        Family::PaTi | Family::FourA => vec![unit("alpha")],
        Family::Bda => vec![Parameter { name: "t1", lower: bda_t1_min(), upper: 0.5 }, unit("alpha")],
        Family::Acb => vec![
            Parameter { name: "t0", lower: 0.0, upper: ACB_T0_SCAN_MAX },
            Parameter { name: "a1", lower: 0.0, upper: 0.5 },
        ],
        Family::Exact => vec![],
    }
}

fn params_from(family: Family, x: &[f64]) -> Result<FamilyParams> {
    Ok(match (family, x) {
        (Family::PaTi, [alpha]) => FamilyParams::PaTi { alpha: *alpha },
        (Family::FourA, [alpha]) => FamilyParams::FourA { alpha: *alpha },
        (Family::Bda, [t1, alpha]) => FamilyParams::Bda { t1: *t1, alpha: *alpha },
        (Family::Acb, [t0, a1]) => FamilyParams::Acb { t0: *t0, a1: *a1 },
        _ => {
            return Err(Error::InvalidArgument(format!(
                "{} takes a different number of parameters",
                family.name()
            )))
        }
    })
}

impl OptimizationTarget {
    pub fn new(label: impl Into<String>, family: Family, goals: Vec<Goal>) -> Self {
        Self { label: label.into(), family, goals, parameters: family_parameters(family) }
    }

    /// `α` of PA_TI with the ε⁴ coefficient of ζ₁ made exact.
    pub fn ti() -> Self {
        Self::new("TI", Family::PaTi, vec![Goal::Equal(Coefficient::Zeta(4), 1.0)])
    }

    /// `α` of 4A with `δ₆ = 1`.
    pub fn four_a_prime() -> Self {
        Self::new("4A'", Family::FourA, vec![Goal::Equal(Coefficient::Zeta(6), 1.0)])
    }

    /// BDA with `δ₆ = 1` and `δ₈` as large as possible.
    pub fn bd_prime() -> Self {
        Self::new(
            "BD'",
            Family::Bda,
            vec![Goal::Equal(Coefficient::Zeta(6), 1.0), Goal::Maximize(Coefficient::Zeta(8))],
        )
    }

    /// BDA with `δ₆ = 1` and `δ′₅ = 1`.
    pub fn bd_star() -> Self {
        Self::new(
            "BD*",
            Family::Bda,
            vec![Goal::Equal(Coefficient::Zeta(6), 1.0), Goal::Equal(Coefficient::Kappa(5), 1.0)],
        )
    }

    /// ACB with `δ₆ = 1` and `δ′₅ = 1`, the twelfth-order Hamiltonian target.
    pub fn ca_twelfth() -> Self {
        Self::new(
            "CA-12",
            Family::Acb,
            vec![Goal::Equal(Coefficient::Zeta(6), 1.0), Goal::Equal(Coefficient::Kappa(5), 1.0)],
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Solved,
    NoRealSolution,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizationResult {
    pub label: String,
    pub status: Status,
    pub params: Option<FamilyParams>,
    /// Each goal's coefficient at the optimum.
    pub achieved: Vec<(Coefficient, f64)>,
    /// `|value − target|` for each equality goal.
    pub residuals: Vec<f64>,
    pub profile: Option<ErrorProfile>,
}

impl OptimizationResult {
    fn none(label: &str) -> Self {
        Self {
            label: label.to_string(),
            status: Status::NoRealSolution,
            params: None,
            achieved: vec![],
            residuals: vec![],
            profile: None,
        }
    }

    pub fn value(&self, c: Coefficient) -> Option<f64> {
        self.achieved.iter().find(|(k, _)| *k == c).map(|&(_, v)| v)
    }
}

/// Scaled coefficient of the propagator built from `p`.
pub fn coefficient(p: &FamilyParams, c: Coefficient, prec: Precision) -> Result<f64> {
    let prop = ContractedPropagator::from_family(p)?;
    let order = COEFF_ORDER.max(match c {
        Coefficient::Zeta(k) | Coefficient::Kappa(k) => k,
    });
    let (zm1, kappa) = match prec {
        Precision::Double => {
            let s = prop.series(order)?;
            (s.zeta_minus_one, s.kappa)
        }
        Precision::Extended => {
            let s = prop.series_in::<DoubleDouble>(order)?;
            (s.zeta_minus_one.to_f64(), s.kappa.to_f64())
        }
    };
    Ok(match c {
        Coefficient::Zeta(k) => zm1.coeff(k) * factorial(k),
        Coefficient::Kappa(k) => kappa.coeff(k) * factorial(k),
    })
}

/// Root of `f` on `[a, b]` given a sign change, by secant steps that fall
/// back to bisection when they leave the bracket or stall.
pub fn refine_root(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
) -> Result<f64> {
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::InvalidArgument("root is not bracketed".into()));
    }
    let mut prev_width = f64::INFINITY;
    for _ in 0..MAX_ITER {
        let width = (b - a).abs();
        let mid = 0.5 * (a + b);
        if width <= 4.0 * f64::EPSILON * mid.abs().max(1e-300) {
            return Ok(if fa.abs() < fb.abs() { a } else { b });
        }
        let secant = b - fb * (b - a) / (fb - fa);
        // Bisect when the secant leaves the bracket or the last step stalled.
        let inside = secant > a.min(b) && secant < a.max(b);
        let x = if inside && width <= 0.5 * prev_width { secant } else { mid };
        prev_width = width;
        let fx = f(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        if fa.abs().min(fb.abs()) <= 1e-15 && (b - a).abs() <= 1e-12 {
            return Ok(if fa.abs() < fb.abs() { a } else { b });
        }
    }
    Err(Error::NonConvergence(MAX_ITER))
}

/// All roots of `f` on `[lo, hi]` found by a uniform bracket scan.
///
/// Points where `f` fails are gaps; no bracket spans a gap. A refined root is
/// kept only if `|f| ≤ tol` there, which discards sign flips across poles.
pub fn scan_roots(
    mut f: impl FnMut(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    points: usize,
    tol: f64,
) -> Result<Vec<f64>> {
    let xs: Vec<f64> = (0..=points).map(|i| lo + (hi - lo) * i as f64 / points as f64).collect();
    let vals: Vec<Option<f64>> = xs.iter().map(|&x| f(x).ok().filter(|v| v.is_finite())).collect();
    let mut roots = Vec::new();
    for i in 0..points {
        let (Some(fa), Some(fb)) = (vals[i], vals[i + 1]) else { continue };
        if fa == 0.0 {
            roots.push(xs[i]);
            continue;
        }
        if fb == 0.0 || fa.signum() == fb.signum() {
            continue;
        }
        let x = match refine_root(&mut f, xs[i], xs[i + 1], fa, fb) {
            Ok(x) => x,
            Err(Error::NonConvergence(n)) => return Err(Error::NonConvergence(n)),
            Err(_) => continue,
        };
        if f(x).map(|v| v.abs() <= tol).unwrap_or(false) {
            roots.push(x);
        }
    }
    if let Some(fb) = vals[points] {
        if fb == 0.0 {
            roots.push(xs[points]);
        }
    }
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    Ok(roots)
}

fn golden_max(mut f: impl FnMut(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<f64> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    let mut iter = 0;
    while (b - a).abs() > GOLDEN_TOL {
        iter += 1;
        if iter > MAX_ITER {
            return Err(Error::NonConvergence(MAX_ITER));
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

struct Problem<'a> {
    target: &'a OptimizationTarget,
    prec: Precision,
}

impl Problem<'_> {
    fn eval(&self, x: &[f64], c: Coefficient) -> Result<f64> {
        coefficient(&params_from(self.target.family, x)?, c, self.prec)
    }

    /// Inner root of `goal` over the last parameter at fixed outer value.
    fn inner(&self, outer: f64, goal: Goal) -> Result<f64> {
        let Goal::Equal(c, v) = goal else {
            return Err(Error::InvalidArgument("inner goal must be an equality".into()));
        };
        let p = self.target.parameters[1];
        let roots = scan_roots(
            |y| Ok(self.eval(&[outer, y], c)? - v),
            p.lower,
            p.upper,
            INNER_SCAN_POINTS,
            RESIDUAL_TOL,
        )?;
        roots.first().copied().ok_or(Error::InvalidArgument(format!(
            "no {} in [{}, {}] satisfies {c} = {v} at {} = {outer}",
            p.name, p.lower, p.upper, self.target.parameters[0].name
        )))
    }

    fn finish(&self, x: &[f64]) -> Result<OptimizationResult> {
        let params = params_from(self.target.family, x)?;
        let mut achieved = Vec::new();
        let mut residuals = Vec::new();
        for g in &self.target.goals {
            match *g {
                Goal::Equal(c, v) => {
                    let a = coefficient(&params, c, self.prec)?;
                    achieved.push((c, a));
                    residuals.push((a - v).abs());
                }
                Goal::Maximize(c) => achieved.push((c, coefficient(&params, c, self.prec)?)),
            }
        }
        if residuals.iter().any(|&r| r > RESIDUAL_TOL) {
            return Err(Error::NonConvergence(MAX_ITER));
        }
        let prop = ContractedPropagator::from_family(&params)?;
        let profile = extract_error_profile(&prop, PROFILE_ORDER, self.prec).ok();
        Ok(OptimizationResult {
            label: self.target.label.clone(),
            status: Status::Solved,
            params: Some(params),
            achieved,
            residuals,
            profile,
        })
    }
}

/// Solves the target's goals over its free parameters.
pub fn solve_conditions(target: &OptimizationTarget, prec: Precision) -> Result<OptimizationResult> {
    let prob = Problem { target, prec };
    let params = &target.parameters;
    match (params.len(), target.goals.as_slice()) {
        (1, [Goal::Equal(c, v)]) => {
            let p = params[0];
            let roots = scan_roots(
                |x| Ok(prob.eval(&[x], *c)? - v),
                p.lower,
                p.upper,
                SCAN_POINTS,
                RESIDUAL_TOL,
            )?;
            match roots.first() {
                Some(&x) => prob.finish(&[x]),
                None => Ok(OptimizationResult::none(&target.label)),
            }
        }
        (2, [inner @ Goal::Equal(..), Goal::Equal(c, v)]) => {
            let p = params[0];
            let outer = |x: f64| -> Result<f64> {
                let y = prob.inner(x, *inner)?;
                Ok(prob.eval(&[x, y], *c)? - v)
            };
            let roots = scan_roots(outer, p.lower, p.upper, SCAN_POINTS, RESIDUAL_TOL)?;
            match roots.first() {
                Some(&x) => {
                    let y = prob.inner(x, *inner)?;
                    prob.finish(&[x, y])
                }
                None => Ok(OptimizationResult::none(&target.label)),
            }
        }
        (2, [inner @ Goal::Equal(..), Goal::Maximize(c)]) => {
            let p = params[0];
            let objective = |x: f64| -> Result<f64> {
                let y = prob.inner(x, *inner)?;
                prob.eval(&[x, y], *c)
            };
            let steps = ((p.upper - p.lower) / MAX_GRID_STEP).ceil() as usize;
            let h = (p.upper - p.lower) / steps as f64;
            let best = (0..=steps)
                .map(|i| p.lower + h * i as f64)
                .filter_map(|x| objective(x).ok().map(|v| (x, v)))
                .max_by(|a, b| a.1.total_cmp(&b.1));
            let Some((x0, _)) = best else {
                return Ok(OptimizationResult::none(&target.label));
            };
            let x = golden_max(objective, (x0 - h).max(p.lower), (x0 + h).min(p.upper))?;
            let y = prob.inner(x, *inner)?;
            prob.finish(&[x, y])
        }
        _ => Err(Error::InvalidArgument(format!(
            "unsupported target: {} parameters with goals {:?}",
            params.len(),
            target.goals
        ))),
    }
}

/// ACB parameters `(t₀, a₁)` with `δ₆ = 1`, for each `a₁` in the grid.
///
/// Every root in `t₀ ∈ (0, ½)` is reported; values of `a₁` without a root
/// contribute nothing.
pub fn ca_sixth_order_locus(a1_grid: &[f64], prec: Precision) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for &a1 in a1_grid {
        FamilyParams::Acb { t0: 0.25, a1 }.validate()?;
        let roots = scan_roots(
            |t0| Ok(coefficient(&FamilyParams::Acb { t0, a1 }, Coefficient::Zeta(6), prec)? - 1.0),
            1e-6,
            ACB_T0_SCAN_MAX,
            SCAN_POINTS,
            RESIDUAL_TOL,
        )?;
        out.extend(roots.into_iter().map(|t0| (t0, a1)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refine_simple_roots() {
        let r = refine_root(|x| Ok(x * x - 2.0), 0.0, 2.0, -2.0, 2.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
        let r = refine_root(|x| Ok(x.powi(7) - 1e-7), 0.0, 1.0, -1e-7, 1.0 - 1e-7).unwrap();
        assert!((r.powi(7) - 1e-7).abs() < 1e-15);
    }

    #[test]
    fn scan_rejects_pole() {
        let roots = scan_roots(|x| Ok(1.0 / (x - 0.3)), 0.0, 1.0, 100, 1e-9).unwrap();
        assert!(roots.is_empty());
        let roots = scan_roots(|x| Ok((x - 0.25) * (x - 0.7)), 0.0, 1.0, 100, 1e-9).unwrap();
        assert_eq!(roots.len(), 2);
    }

    #[test]
    fn golden_finds_peak() {
        let x = golden_max(|x| Ok(-(x - 0.37f64).powi(2)), 0.0, 1.0).unwrap();
        assert!((x - 0.37).abs() < 1e-7);
    }

    #[test]
    fn ti_and_four_a_prime() {
        let ti = solve_conditions(&OptimizationTarget::ti(), Precision::Double).unwrap();
        let Some(FamilyParams::PaTi { alpha }) = ti.params else { panic!() };
        assert!((alpha - 1.0 / 48.0).abs() < 1e-12);
        let fa = solve_conditions(&OptimizationTarget::four_a_prime(), Precision::Double).unwrap();
        let Some(FamilyParams::FourA { alpha }) = fa.params else { panic!() };
        assert!((alpha - 0.2).abs() < 1e-12);
        assert_eq!(fa.profile.unwrap().thermo_order, 6);
    }

    #[test]
    fn wrong_shape_is_rejected() {
        let t = OptimizationTarget::new("x", Family::PaTi, vec![Goal::Maximize(Coefficient::Zeta(4))]);
        assert!(solve_conditions(&t, Precision::Double).is_err());
    }
}

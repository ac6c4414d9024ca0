//! Short-time propagators as kinetic/potential split-step sequences.
//!
//! For the harmonic oscillator every factor `e^{-w T}` or `e^{-w V}` acts on
//! the Gaussian kernel as a unit-determinant shear, so a whole palindromic
//! sequence contracts to the canonical form `e^{-μ₁V} e^{-κ₁T} e^{-μ₁V}`:
//! multiply the shears `[[1, aε], [0, 1]]` (kinetic) and `[[1, 0], [β, 1]]`
//! (potential), then read `ζ₁` off the half-trace and `κ₁` off the upper
//! right entry. The product is computed over any [`Scalar`], so the same
//! routine yields numbers, exact derivatives, and truncated series.

use std::fmt;

use crate::error::{Error, Result};
use crate::real::{Dual, Real, Scalar};
use crate::series::Series;

/// Upper end of the default step-size validity range.
pub const DEFAULT_VALIDITY: f64 = 3.0;

const SEQUENCE_TOL: f64 = 1e-10;

/// One exponential factor of a split-step propagator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Step {
    /// `e^{-a ε T}`.
    Kinetic { a: f64 },
    /// `e^{-b ε V - c ε³ [V,[T,V]]}`.
    Potential { b: f64, c: f64 },
}

impl Step {
    pub fn kinetic(a: f64) -> Self {
        Step::Kinetic { a }
    }

    pub fn potential(b: f64) -> Self {
        Step::Potential { b, c: 0.0 }
    }

    pub fn potential_with_commutator(b: f64, c: f64) -> Self {
        Step::Potential { b, c }
    }

    /// Shear weight at step size `eps`. Since `[V,[T,V]] = x² = 2V` for the
    /// oscillator, a potential step shears by `bε + 2cε³`.
    pub fn weight<S: Scalar>(&self, eps: &S) -> S {
        match *self {
            Step::Kinetic { a } => eps.lift(a) * eps.clone(),
            Step::Potential { b, c } => {
                let e2 = eps.clone() * eps.clone();
                eps.lift(b) * eps.clone() + eps.lift(2.0 * c) * e2 * eps.clone()
            }
        }
    }

    fn approx_eq(&self, other: &Step) -> bool {
        match (*self, *other) {
            (Step::Kinetic { a: x }, Step::Kinetic { a: y }) => (x - y).abs() <= SEQUENCE_TOL,
            (Step::Potential { b: b1, c: c1 }, Step::Potential { b: b2, c: c2 }) => {
                (b1 - b2).abs() <= SEQUENCE_TOL && (c1 - c2).abs() <= SEQUENCE_TOL
            }
            _ => false,
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Step::Kinetic { a } => write!(f, "T {a}"),
            Step::Potential { b, c } => write!(f, "V {b} {c}"),
        }
    }
}

/// A validated palindromic and first-order consistent split-step sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct StepSequence {
    steps: Vec<Step>,
    label: String,
}

impl StepSequence {
    pub fn new(label: impl Into<String>, steps: Vec<Step>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidArgument("empty step sequence".into()));
        }
        for s in &steps {
            if let Step::Kinetic { a } = *s {
                if !(a >= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "kinetic weight {a} is negative"
                    )));
                }
            }
        }
        let n = steps.len();
        if !(0..n / 2).all(|i| steps[i].approx_eq(&steps[n - 1 - i])) {
            return Err(Error::NonPalindromicSequence);
        }
        let (kinetic, potential) = steps.iter().fold((0.0, 0.0), |(k, p), s| match *s {
            Step::Kinetic { a } => (k + a, p),
            Step::Potential { b, .. } => (k, p + b),
        });
        if (kinetic - 1.0).abs() > SEQUENCE_TOL || (potential - 1.0).abs() > SEQUENCE_TOL {
            return Err(Error::InconsistentSequence { kinetic, potential });
        }
        Ok(Self { steps, label: label.into() })
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The sequence for `G₁(ε)²` expressed as a propagator in the doubled
    /// step `2ε`: weights halve and commutator weights shrink by 8.
    pub fn squared(&self) -> StepSequence {
        let half: Vec<Step> = self
            .steps
            .iter()
            .map(|s| match *s {
                Step::Kinetic { a } => Step::Kinetic { a: a / 2.0 },
                Step::Potential { b, c } => Step::Potential { b: b / 2.0, c: c / 8.0 },
            })
            .collect();
        let mut steps = half.clone();
        steps.extend(half);
        StepSequence { steps, label: format!("{}^2", self.label) }
    }
}

/// Named propagator families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    /// Primitive approximation with a double-commutator term (α = 1/48 is TI).
    PaTi,
    /// Two-kinetic-factor fourth-order 4A.
    FourA,
    /// Three-kinetic-factor fourth-order BDA.
    Bda,
    /// Four-kinetic-factor ACB ("Chin action").
    Acb,
    /// The exact harmonic propagator.
    Exact,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::PaTi => "pa",
            Family::FourA => "4a",
            Family::Bda => "bda",
            Family::Acb => "acb",
            Family::Exact => "exact",
        }
    }
}

/// Family choice plus its free parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FamilyParams {
    PaTi { alpha: f64 },
    FourA { alpha: f64 },
    Bda { t1: f64, alpha: f64 },
    Acb { t0: f64, a1: f64 },
    Exact,
}

/// Lower end of the admissible BDA `t₁`, `½(1 − 1/√3)`.
pub fn bda_t1_min() -> f64 {
    0.5 * (1.0 - 1.0 / 3f64.sqrt())
}

/// Admissible `t₀` for ACB is `[0, ½)`; the upper end is a pole of `v₁`.
pub const ACB_T0_MAX: f64 = 0.5;

fn check_range(name: &'static str, value: f64, lower: f64, upper: f64) -> Result<()> {
    if value >= lower && value <= upper {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange { name, value, lower, upper })
    }
}

/// Derived coefficients of the BDA family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BdaCoefficients {
    pub t1: f64,
    pub t2: f64,
    pub v0: f64,
    pub v1: f64,
    pub u0: f64,
}

pub fn bda_coefficients(t1: f64) -> BdaCoefficients {
    let v1 = 1.0 / (12.0 * t1 * (1.0 - t1));
    BdaCoefficients {
        t1,
        t2: 1.0 - 2.0 * t1,
        v0: 0.5 - v1,
        v1,
        u0: (1.0 / (6.0 * t1 * (1.0 - t1).powi(2)) - 1.0) / 48.0,
    }
}

/// Derived coefficients of the ACB family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AcbCoefficients {
    pub t0: f64,
    pub t1: f64,
    pub v1: f64,
    pub v2: f64,
    pub u0: f64,
}

pub fn acb_coefficients(t0: f64) -> AcbCoefficients {
    let s = 1.0 - 2.0 * t0;
    let v1 = 1.0 / (6.0 * s * s);
    AcbCoefficients {
        t0,
        t1: 0.5 - t0,
        v1,
        v2: 1.0 - 2.0 * v1,
        u0: (1.0 - 1.0 / s + 1.0 / (6.0 * s.powi(3))) / 12.0,
    }
}

impl FamilyParams {
    pub fn family(&self) -> Family {
        match self {
            FamilyParams::PaTi { .. } => Family::PaTi,
            FamilyParams::FourA { .. } => Family::FourA,
            FamilyParams::Bda { .. } => Family::Bda,
            FamilyParams::Acb { .. } => Family::Acb,
            FamilyParams::Exact => Family::Exact,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FamilyParams::PaTi { alpha } | FamilyParams::FourA { alpha } => {
                check_range("alpha", alpha, 0.0, 1.0)
            }
            FamilyParams::Bda { t1, alpha } => {
                check_range("t1", t1, bda_t1_min(), 0.5)?;
                check_range("alpha", alpha, 0.0, 1.0)
            }
            FamilyParams::Acb { t0, a1 } => {
                if !(t0 >= 0.0 && t0 < ACB_T0_MAX) {
                    return Err(Error::ParameterOutOfRange {
                        name: "t0",
                        value: t0,
                        lower: 0.0,
                        upper: ACB_T0_MAX,
                    });
                }
                check_range("a1", a1, 0.0, 0.5)
            }
            FamilyParams::Exact => Ok(()),
        }
    }

    pub fn default_label(&self) -> String {
        match *self {
            FamilyParams::PaTi { alpha } => format!("PA_TI(alpha={alpha})"),
            FamilyParams::FourA { alpha } => format!("4A(alpha={alpha})"),
            FamilyParams::Bda { t1, alpha } => format!("BDA(t1={t1}, alpha={alpha})"),
            FamilyParams::Acb { t0, a1 } => format!("ACB(t0={t0}, a1={a1})"),
            FamilyParams::Exact => "exact".into(),
        }
    }
}

/// Literal split-step sequence of a family.
pub fn build_family(p: &FamilyParams) -> Result<StepSequence> {
    p.validate()?;
    let steps = match *p {
        FamilyParams::PaTi { alpha } => vec![
            Step::potential_with_commutator(0.5, alpha),
            Step::kinetic(1.0),
            Step::potential_with_commutator(0.5, alpha),
        ],
        FamilyParams::FourA { alpha } => {
            let outer = Step::potential_with_commutator(1.0 / 6.0, alpha / 144.0);
            let half = Step::kinetic(0.5);
            vec![
                outer,
                half,
                Step::potential_with_commutator(2.0 / 3.0, (1.0 - alpha) / 72.0),
                half,
                outer,
            ]
        }
        FamilyParams::Bda { t1, alpha } => {
            let k = bda_coefficients(t1);
            let outer = Step::potential_with_commutator(k.v0, alpha * k.u0);
            let inner = Step::potential_with_commutator(k.v1, (1.0 - alpha) * k.u0);
            vec![
                outer,
                Step::kinetic(k.t1),
                inner,
                Step::kinetic(k.t2),
                inner,
                Step::kinetic(k.t1),
                outer,
            ]
        }
        FamilyParams::Acb { t0, a1 } => {
            let k = acb_coefficients(t0);
            let side = Step::potential_with_commutator(k.v1, a1 * k.u0);
            let edge = Step::kinetic(k.t0);
            let mid = Step::kinetic(k.t1);
            vec![
                edge,
                side,
                mid,
                Step::potential_with_commutator(k.v2, (1.0 - 2.0 * a1) * k.u0),
                mid,
                side,
                edge,
            ]
        }
        FamilyParams::Exact => return Err(Error::NoStepForm("the exact propagator")),
    };
    StepSequence::new(p.default_label(), steps)
}

/// The named propagators, with parameters as published.
pub mod presets {
    use super::{bda_t1_min, ContractedPropagator, FamilyParams};

    pub const PA: FamilyParams = FamilyParams::PaTi { alpha: 0.0 };
    pub const TI: FamilyParams = FamilyParams::PaTi { alpha: 1.0 / 48.0 };
    pub const FOUR_A: FamilyParams = FamilyParams::FourA { alpha: 0.0 };
    pub const FOUR_A_PRIME: FamilyParams = FamilyParams::FourA { alpha: 0.2 };
    pub const BD_PRIME: FamilyParams = FamilyParams::Bda { t1: 0.27564, alpha: 0.171438 };
    pub const BD_STAR: FamilyParams = FamilyParams::Bda { t1: 0.264654, alpha: 0.142872 };
    pub const CA1: FamilyParams = FamilyParams::Acb { t0: 0.1430, a1: 0.0 };
    pub const CA2: FamilyParams = FamilyParams::Acb { t0: 0.1215, a1: 0.33 };

    /// BDA at its smallest `t₁` with no outer commutator weight.
    pub fn bd() -> FamilyParams {
        FamilyParams::Bda { t1: bda_t1_min(), alpha: 0.0 }
    }

    /// Looks up a preset by name (case-insensitive).
    pub fn by_name(name: &str) -> Option<(&'static str, FamilyParams)> {
        let n = name.trim().to_ascii_lowercase();
        Some(match n.as_str() {
            "pa" => ("PA", PA),
            "ti" => ("TI", TI),
            "4a" => ("4A", FOUR_A),
            "4a'" | "4a-prime" | "4aprime" => ("4A'", FOUR_A_PRIME),
            "bd" => ("BD", bd()),
            "bd'" | "bd-prime" | "bdprime" => ("BD'", BD_PRIME),
            "bd*" | "bd-star" | "bdstar" => ("BD*", BD_STAR),
            "ca1" => ("CA1", CA1),
            "ca2" => ("CA2", CA2),
            "exact" => ("exact", FamilyParams::Exact),
            _ => return None,
        })
    }

    /// Contracted preset, labelled with its short name.
    pub fn propagator(name: &str) -> Option<ContractedPropagator> {
        let (label, p) = by_name(name)?;
        ContractedPropagator::from_family(&p).ok().map(|c| c.with_label(label))
    }

    pub const NAMES: [&str; 10] =
        ["PA", "TI", "4A", "4A'", "BD", "BD'", "BD*", "CA1", "CA2", "exact"];
}

/// Values that support a checked division, for [`contract_pair`].
pub trait PairOperand: Scalar {
    fn checked_div(&self, rhs: &Self) -> Result<Self>;
}

impl PairOperand for f64 {
    fn checked_div(&self, rhs: &Self) -> Result<Self> {
        if *rhs == 0.0 {
            Err(Error::ContractionSingularity(*rhs))
        } else {
            Ok(self / rhs)
        }
    }
}

impl PairOperand for Series<f64> {
    /// Cancels the common leading power of ε before dividing.
    fn checked_div(&self, rhs: &Self) -> Result<Self> {
        let m = rhs
            .coeffs()
            .iter()
            .position(|&c| c != 0.0)
            .ok_or(Error::ContractionSingularity(0.0))?;
        if self.coeffs().iter().take(m).any(|&c| c != 0.0) {
            return Err(Error::DivisionBySingularSeries);
        }
        self.drop_leading(m)?.try_div(&rhs.drop_leading(m)?)
    }
}

/// Merges `e^{-aT} e^{-bV} e^{-cT}` into `e^{-νV} e^{-κT} e^{-μV}`, returning
/// `(κ, ν, μ)` with `κ = a + abc + c`, `ν = bc/κ`, `μ = ba/κ`.
pub fn contract_pair<S: PairOperand>(a: &S, b: &S, c: &S) -> Result<(S, S, S)> {
    let kappa = a.clone() + a.clone() * b.clone() * c.clone() + c.clone();
    let nu = (b.clone() * c.clone()).checked_div(&kappa)?;
    let mu = (b.clone() * a.clone()).checked_div(&kappa)?;
    Ok((kappa, nu, mu))
}

/// Inverse of [`contract_pair`]: splits `e^{-νV} e^{-κT} e^{-μV}` into
/// `e^{-aT} e^{-bV} e^{-cT}` with `b = μ + ν + μνκ`, `a = μκ/b`, `c = νκ/b`.
pub fn split_pair(kappa: f64, nu: f64, mu: f64) -> Result<(f64, f64, f64)> {
    let b = mu + nu + mu * nu * kappa;
    if b == 0.0 {
        return Err(Error::ContractionSingularity(b));
    }
    Ok((mu * kappa / b, b, nu * kappa / b))
}

/// Deviation `A = M − I` of the shear product, entries `[a11, a12, a21, a22]`.
///
/// Tracking `A` instead of `M` keeps `ζ₁ − 1` free of cancellation.
fn shear_deviation<S: Scalar>(steps: &[Step], eps: &S) -> [S; 4] {
    let zero = eps.lift(0.0);
    let mut a = [zero.clone(), zero.clone(), zero.clone(), zero];
    for step in steps {
        let w = step.weight(eps);
        let [a11, a12, a21, a22] = a;
        a = match step {
            // (I + A)(I + w e₁₂)
            Step::Kinetic { .. } => {
                let n12 = a12 + w.clone() + a11.clone() * w.clone();
                let n22 = a22.clone() + a21.clone() * w;
                [a11, n12, a21, n22]
            }
            // (I + A)(I + w e₂₁)
            Step::Potential { .. } => {
                let n11 = a11 + a12.clone() * w.clone();
                let n21 = a21 + w.clone() + a22.clone() * w;
                [n11, a12, n21, a22]
            }
        };
    }
    a
}

/// The canonical-form coefficients at one step size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contraction<T> {
    pub eps: T,
    pub kappa: T,
    pub mu: T,
    pub zeta: T,
    pub zeta_minus_one: T,
    /// dζ₁/dε, exact (forward-mode derivative of the shear product).
    pub dzeta: T,
    /// dκ₁/dε.
    pub dkappa: T,
    pub extrapolated: bool,
}

impl<T: Real> Contraction<T> {
    /// `λ = (1/κ₁) dζ₁/dε`.
    pub fn lambda(&self) -> T {
        self.dzeta / self.kappa
    }
}

/// Truncated ε-expansions of the canonical-form coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesContraction<T = f64> {
    pub kappa: Series<T>,
    pub zeta: Series<T>,
    pub zeta_minus_one: Series<T>,
}

impl<T: Real> SeriesContraction<T> {
    /// `μ₁ = (ζ₁ − 1)/κ₁`, one order shallower.
    pub fn mu(&self) -> Result<Series<T>> {
        self.zeta_minus_one.drop_leading(1)?.try_div(&self.kappa.drop_leading(1)?)
    }

    pub fn order(&self) -> usize {
        self.kappa.order().min(self.zeta.order())
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Form {
    Steps(StepSequence),
    Exact,
}

/// A short-time propagator reduced to the single-kinetic canonical form.
#[derive(Clone, Debug, PartialEq)]
pub struct ContractedPropagator {
    label: String,
    form: Form,
    validity: f64,
}

impl ContractedPropagator {
    pub fn from_sequence(seq: StepSequence) -> Self {
        Self { label: seq.label().to_string(), form: Form::Steps(seq), validity: DEFAULT_VALIDITY }
    }

    pub fn exact() -> Self {
        Self { label: "exact".into(), form: Form::Exact, validity: f64::INFINITY }
    }

    pub fn from_family(p: &FamilyParams) -> Result<Self> {
        match p {
            FamilyParams::Exact => Ok(Self::exact()),
            _ => Ok(Self::from_sequence(build_family(p)?)),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Step sizes above `eps_max` are flagged as extrapolated.
    pub fn with_validity(mut self, eps_max: f64) -> Self {
        self.validity = eps_max;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn validity(&self) -> f64 {
        self.validity
    }

    pub fn sequence(&self) -> Option<&StepSequence> {
        match &self.form {
            Form::Steps(s) => Some(s),
            Form::Exact => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.form, Form::Exact)
    }

    pub fn evaluate(&self, eps: f64) -> Result<Contraction<f64>> {
        self.evaluate_in(eps)
    }

    /// Canonical-form coefficients at `eps` in the precision `T`.
    pub fn evaluate_in<T: Real>(&self, eps: T) -> Result<Contraction<T>> {
        if !(eps > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "step size must be positive, got {}",
                eps.to_f64()
            )));
        }
        let (kappa, dkappa, zm1, dzeta) = match &self.form {
            Form::Steps(seq) => {
                let e = Dual::variable(eps);
                let [a11, a12, _, a22] = shear_deviation(seq.steps(), &e);
                let half = T::from_f64(0.5);
                let zm1 = (a11.value + a22.value) * half;
                let dz = (a11.deriv + a22.deriv) * half;
                (a12.value, a12.deriv, zm1, dz)
            }
            Form::Exact => {
                let (ch, sh) = (eps * T::from_f64(0.5)).cosh_sinh();
                let two = T::from_f64(2.0);
                let kappa = two * sh * ch;
                let zeta = T::one() + two * sh * sh;
                (kappa, zeta, two * sh * sh, kappa)
            }
        };
        if !(kappa > T::zero()) {
            return Err(Error::ContractionSingularity(kappa.to_f64()));
        }
        Ok(Contraction {
            eps,
            kappa,
            mu: zm1 / kappa,
            zeta: T::one() + zm1,
            zeta_minus_one: zm1,
            dzeta,
            dkappa,
            extrapolated: eps.to_f64() > self.validity,
        })
    }

    pub fn series(&self, order: usize) -> Result<SeriesContraction<f64>> {
        self.series_in(order)
    }

    /// ε-expansions of κ₁ and ζ₁ truncated at `order`.
    pub fn series_in<T: Real>(&self, order: usize) -> Result<SeriesContraction<T>> {
        let (kappa, zm1) = match &self.form {
            Form::Steps(seq) => {
                let e = Series::<T>::variable(order);
                let [a11, a12, _, a22] = shear_deviation(seq.steps(), &e);
                (a12, (a11 + a22).scale(T::from_f64(0.5)))
            }
            Form::Exact => {
                let mut sinh = vec![T::zero(); order + 1];
                let mut cosh_m1 = vec![T::zero(); order + 1];
                let mut inv_fact = T::one();
                for k in 1..=order {
                    inv_fact = inv_fact / T::from_f64(k as f64);
                    if k % 2 == 1 {
                        sinh[k] = inv_fact;
                    } else {
                        cosh_m1[k] = inv_fact;
                    }
                }
                (Series::new(sinh, order), Series::new(cosh_m1, order))
            }
        };
        if kappa.coeffs().iter().all(|&c| c == T::zero()) {
            return Err(Error::ContractionSingularity(0.0));
        }
        let zeta = &zm1 + &Series::constant(T::one(), order);
        Ok(SeriesContraction { kappa, zeta, zeta_minus_one: zm1 })
    }

    /// Full 2×2 shear product `[[m11, m12], [m21, m22]]` at `eps`.
    pub fn shear_matrix(&self, eps: f64) -> [[f64; 2]; 2] {
        match &self.form {
            Form::Steps(seq) => {
                let [a11, a12, a21, a22] = shear_deviation(seq.steps(), &eps);
                [[1.0 + a11, a12], [a21, 1.0 + a22]]
            }
            Form::Exact => {
                let (c, s) = (eps.cosh(), eps.sinh());
                [[c, s], [s, c]]
            }
        }
    }
}

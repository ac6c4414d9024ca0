//! Error coefficients of a propagator and empirical convergence orders.
//!
//! The scaled coefficients `δ_{2k} = (2k)!·[ε^{2k}]ζ₁` and
//! `δ′_{2k+1} = (2k+1)!·[ε^{2k+1}]κ₁` equal one for an exact propagator. The
//! first defective `δ` fixes the thermodynamic error `−(2n+1)C ε^{2n}`; the
//! Hamiltonian error `ρ_H − 1 = (γ−1)²/(2γ)` is read off the `γ` series.

use std::env;
use std::str::FromStr;

use crate::energies::{energies_in, portal_in};
use crate::error::{Error, Result};
use crate::propagator::ContractedPropagator;
use crate::real::{DoubleDouble, Real};
use crate::series::{factorial, Series};

/// Tolerance for "scaled coefficient equals one".
pub const MATCH_TOL: f64 = 1e-9;

/// Truncation order used when a profile is needed implicitly.
pub const PROFILE_ORDER: usize = 24;

/// Arithmetic used for series extraction and sweeps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Precision {
    #[default]
    Double,
    /// Double-double, about 32 significant digits.
    Extended,
}

impl Precision {
    /// Reads `PIMC_HO_PRECISION` (`double` or `extended`), defaulting to double.
    pub fn from_env() -> Result<Self> {
        match env::var("PIMC_HO_PRECISION") {
            Ok(v) => v.parse(),
            Err(_) => Ok(Precision::Double),
        }
    }

    /// Smallest relative error that still resolves in this arithmetic.
    pub fn default_floor(self) -> f64 {
        match self {
            Precision::Double => 1e-12,
            Precision::Extended => 1e-24,
        }
    }
}

impl FromStr for Precision {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "double" | "f64" => Ok(Precision::Double),
            "extended" | "double-double" | "dd" => Ok(Precision::Extended),
            other => Err(Error::InvalidArgument(format!("unknown precision {other:?}"))),
        }
    }
}

/// Which energy estimator a sweep looks at.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Estimator {
    Thermo,
    Hamiltonian,
}

impl FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "thermo" | "t" | "thermodynamic" => Ok(Estimator::Thermo),
            "hamiltonian" | "h" => Ok(Estimator::Hamiltonian),
            other => Err(Error::InvalidArgument(format!("unknown estimator {other:?}"))),
        }
    }
}

/// What a sweep's relative error is measured against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Reference {
    /// The universal discrete energy `E_N` of the same propagator, so the
    /// error is `ρ_X − 1` and carries no finite-τ term.
    #[default]
    Universal,
    /// The continuum energy `½coth(τ/2)`.
    ClosedForm,
}

impl FromStr for Reference {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "universal" => Ok(Reference::Universal),
            "closed-form" | "closed" | "exact" => Ok(Reference::ClosedForm),
            other => Err(Error::InvalidArgument(format!("unknown reference {other:?}"))),
        }
    }
}

/// Leading error structure of a propagator.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorProfile {
    /// ζ₁ is correct through `ε^{2n}`.
    pub n: usize,
    /// κ₁ is correct through `ε^{2m−1}`.
    pub m: usize,
    /// `δ_{2n+2}`.
    pub delta: f64,
    /// `δ′_{2n+1}`.
    pub delta_prime: f64,
    pub c: f64,
    pub d: f64,
    /// `(2n+1)C`.
    pub thermo_coefficient: f64,
    pub thermo_order: usize,
    /// `½D²`.
    pub half_d_squared: f64,
    /// Leading exponent of `ρ_H − 1`, `None` if it vanishes through the truncation.
    pub hamiltonian_order: Option<usize>,
    /// Leading coefficient of `ρ_H − 1`.
    pub hamiltonian_coefficient: f64,
    /// Scaled ζ₁ coefficients `δ_{2k}`, index `k`.
    pub zeta_deltas: Vec<f64>,
    /// Scaled κ₁ coefficients `δ′_{2k+1}`, index `k`.
    pub kappa_deltas: Vec<f64>,
    pub truncation: usize,
}

impl ErrorProfile {
    /// `δ_{2k}`.
    pub fn delta_even(&self, two_k: usize) -> Option<f64> {
        (two_k % 2 == 0).then(|| self.zeta_deltas.get(two_k / 2).copied()).flatten()
    }

    /// `δ′_{2k+1}`.
    pub fn delta_odd(&self, two_k_plus_one: usize) -> Option<f64> {
        (two_k_plus_one % 2 == 1).then(|| self.kappa_deltas.get(two_k_plus_one / 2).copied()).flatten()
    }

    /// True when κ₁ is accurate enough for the doubled Hamiltonian order.
    pub fn kappa_matched(&self) -> bool {
        self.m >= self.n
    }
}

fn series_for(prop: &ContractedPropagator, order: usize, prec: Precision) -> Result<(Series, Series)> {
    Ok(match prec {
        Precision::Double => {
            let s = prop.series(order)?;
            (s.zeta_minus_one, s.kappa)
        }
        Precision::Extended => {
            let s = prop.series_in::<DoubleDouble>(order)?;
            (s.zeta_minus_one.to_f64(), s.kappa.to_f64())
        }
    })
}

/// `γ(ε)` as a series, computed in the requested precision.
pub fn gamma_series(prop: &ContractedPropagator, order: usize, prec: Precision) -> Result<Series> {
    match prec {
        Precision::Double => gamma_series_in::<f64>(prop, order),
        Precision::Extended => Ok(gamma_series_in::<DoubleDouble>(prop, order)?.to_f64()),
    }
}

fn gamma_series_in<T: Real>(prop: &ContractedPropagator, order: usize) -> Result<Series<T>> {
    let s = prop.series_in::<T>(order)?;
    let two = Series::constant(T::from_f64(2.0), order);
    let zm1 = &s.zeta_minus_one;
    let sq = (zm1 * &(zm1 + &two)).drop_leading(2)?.sqrt()?;
    sq.try_div(&s.kappa.drop_leading(1)?)
}

/// `(ρ_T, ρ_H)` as series.
pub fn ratio_series(
    prop: &ContractedPropagator,
    order: usize,
    prec: Precision,
) -> Result<(Series, Series)> {
    match prec {
        Precision::Double => ratio_series_in::<f64>(prop, order),
        Precision::Extended => {
            let (t, h) = ratio_series_in::<DoubleDouble>(prop, order)?;
            Ok((t.to_f64(), h.to_f64()))
        }
    }
}

fn ratio_series_in<T: Real>(prop: &ContractedPropagator, order: usize) -> Result<(Series<T>, Series<T>)> {
    let s = prop.series_in::<T>(order)?;
    let gamma = gamma_series_in::<T>(prop, order)?;
    let lambda = s.zeta.derivative().drop_leading(1)?.try_div(&s.kappa.drop_leading(1)?)?;
    let rho_t = lambda.try_div(&gamma)?;
    let rho_h = (&gamma + &gamma.recip()?).scale(T::from_f64(0.5));
    Ok((rho_t, rho_h))
}

/// `u(ε) = arccosh ζ₁(ε)`, obtained by integrating `du/dε = ρ_T`.
pub fn u_series(prop: &ContractedPropagator, order: usize, prec: Precision) -> Result<Series> {
    Ok(ratio_series(prop, order, prec)?.0.integrate())
}

fn scaled_is_one(x: f64) -> bool {
    (x - 1.0).abs() <= MATCH_TOL
}

/// Detects the matched order and the leading defects from the series of ζ₁, κ₁.
pub fn extract_error_profile(
    prop: &ContractedPropagator,
    order: usize,
    prec: Precision,
) -> Result<ErrorProfile> {
    let (zm1, kappa) = series_for(prop, order, prec)?;
    let zeta_deltas: Vec<f64> =
        (0..=order / 2).map(|k| if k == 0 { 1.0 } else { zm1.coeff(2 * k) * factorial(2 * k) }).collect();
    let kappa_deltas: Vec<f64> =
        (0..=(order.saturating_sub(1)) / 2).map(|k| kappa.coeff(2 * k + 1) * factorial(2 * k + 1)).collect();

    let n = match (1..zeta_deltas.len()).find(|&k| !scaled_is_one(zeta_deltas[k])) {
        Some(k) => k - 1,
        None => {
            return Err(Error::TruncationTooShallow { order, needed: order + 2 });
        }
    };
    let needed = 2 * n + 4;
    if order < needed {
        return Err(Error::TruncationTooShallow { order, needed });
    }
    let m = (0..kappa_deltas.len()).find(|&k| !scaled_is_one(kappa_deltas[k])).unwrap_or(kappa_deltas.len());

    let delta = zeta_deltas[n + 1];
    let delta_prime = kappa_deltas[n];
    let c = (1.0 - delta) / factorial(2 * n + 2);
    let d = (1.0 - delta_prime) / factorial(2 * n + 1) - c;

    let gamma = gamma_series(prop, order, prec)?;
    // ρ_H − 1 = (γ−1)²/(2γ) starts at twice the leading exponent of γ − 1.
    let lead = (1..=gamma.order())
        .find(|&k| gamma.coeff(k).abs() > MATCH_TOL / factorial(k));
    let (hamiltonian_order, hamiltonian_coefficient) = match lead {
        Some(k) => (Some(2 * k), 0.5 * gamma.coeff(k).powi(2)),
        None => (None, 0.0),
    };

    Ok(ErrorProfile {
        n,
        m,
        delta,
        delta_prime,
        c,
        d,
        thermo_coefficient: (2 * n + 1) as f64 * c,
        thermo_order: 2 * n,
        half_d_squared: 0.5 * d * d,
        hamiltonian_order,
        hamiltonian_coefficient,
        zeta_deltas,
        kappa_deltas,
        truncation: order,
    })
}

/// Leading-order prefactors `(1 − (2n+1)Cε^{2n}, 1 + c_H ε^{p_H})`.
///
/// When κ₁ is accurate enough, `c_H = ½D²` and `p_H = 4n`; otherwise the
/// degraded pair read off the γ series is used.
pub fn predicted_prefactors(profile: &ErrorProfile, eps: f64) -> (f64, f64) {
    let thermo = 1.0 - profile.thermo_coefficient * eps.powi(profile.thermo_order as i32);
    let ham = match profile.hamiltonian_order {
        Some(p) => 1.0 + profile.hamiltonian_coefficient * eps.powi(p as i32),
        None => 1.0,
    };
    (thermo, ham)
}

/// Relative error of one estimator at `(N, ε)`.
///
/// With [`Reference::Universal`] the value is `|ρ_X − 1|` and `n` is unused.
pub fn relative_error(
    prop: &ContractedPropagator,
    est: Estimator,
    n: usize,
    eps: f64,
    reference: Reference,
    prec: Precision,
) -> Result<f64> {
    match prec {
        Precision::Double => relative_error_in::<f64>(prop, est, n, eps, reference),
        Precision::Extended => relative_error_in::<DoubleDouble>(prop, est, n, eps, reference),
    }
}

fn signed_error_in<T: Real>(
    prop: &ContractedPropagator,
    est: Estimator,
    n: usize,
    eps: f64,
    reference: Reference,
) -> Result<T> {
    let e = T::from_f64(eps);
    match reference {
        Reference::Universal => {
            let p = portal_in(prop, e)?;
            Ok(match est {
                Estimator::Thermo => p.rho_t_minus_one,
                Estimator::Hamiltonian => p.rho_h_minus_one,
            })
        }
        Reference::ClosedForm => {
            let r = energies_in(prop, n, e)?;
            let (c, s) = (r.tau * T::from_f64(0.5)).cosh_sinh();
            let exact = T::from_f64(0.5) * c / s;
            let value = match est {
                Estimator::Thermo => r.thermo,
                Estimator::Hamiltonian => r.hamiltonian,
            };
            Ok((value - exact) / exact)
        }
    }
}

fn relative_error_in<T: Real>(
    prop: &ContractedPropagator,
    est: Estimator,
    n: usize,
    eps: f64,
    reference: Reference,
) -> Result<f64> {
    Ok(signed_error_in::<T>(prop, est, n, eps, reference)?.to_f64().abs())
}

/// `(E^X/E_ref − 1)/ε^p` at fixed `τ`, with `N = τ/ε` rounded.
pub fn leading_ratio(
    prop: &ContractedPropagator,
    est: Estimator,
    tau: f64,
    eps: f64,
    order: usize,
    reference: Reference,
) -> Result<f64> {
    let n = (tau / eps).round().max(1.0) as usize;
    let eps = tau / n as f64;
    let err = signed_error_in::<f64>(prop, est, n, eps, reference)?;
    Ok(err / eps.powi(order as i32))
}

/// One sweep sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub n: usize,
    pub eps: f64,
    pub rel_error: f64,
}

/// Sweep settings for [`fit_order`].
#[derive(Clone, Debug, PartialEq)]
pub struct FitOptions {
    pub tau: f64,
    /// Bead counts; each gives `ε = τ/N`.
    pub beads: Vec<usize>,
    pub reference: Reference,
    pub precision: Precision,
    pub floor: f64,
    pub cap: f64,
}

/// Roughly log-uniform bead counts between `lo` and `hi`.
pub fn log_beads(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<usize> = (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1).max(1) as f64).exp().round() as usize)
        .collect();
    out.dedup();
    out
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tau: 10.0,
            beads: log_beads(10, 1000, 41),
            reference: Reference::Universal,
            precision: Precision::Double,
            floor: Precision::Double.default_floor(),
            cap: 1e-3,
        }
    }
}

impl FitOptions {
    /// Switches precision and lowers the floor to match.
    pub fn with_precision(mut self, prec: Precision) -> Self {
        self.precision = prec;
        self.floor = prec.default_floor();
        self
    }
}

/// Relative errors over the bead list at fixed `τ`.
pub fn sweep(prop: &ContractedPropagator, est: Estimator, opts: &FitOptions) -> Result<Vec<SweepPoint>> {
    opts.beads
        .iter()
        .map(|&n| {
            let eps = opts.tau / n as f64;
            let rel_error = relative_error(prop, est, n, eps, opts.reference, opts.precision)?;
            Ok(SweepPoint { n, eps, rel_error })
        })
        .collect()
}

/// Log-log least-squares slope of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderFit {
    /// Order predicted by the error profile, if one exists.
    pub nominal: Option<usize>,
    pub slope: f64,
    pub intercept: f64,
    /// `(ε_min, ε_max)` of the points used.
    pub window: (f64, f64),
    pub points: usize,
    /// RMS residual in `ln(error)`.
    pub residual: f64,
}

/// Slope of `ln|error|` against `ln ε` over the points with error in `[floor, cap]`.
pub fn fit_order(prop: &ContractedPropagator, est: Estimator, opts: &FitOptions) -> Result<OrderFit> {
    let pts: Vec<(f64, f64)> = sweep(prop, est, opts)?
        .into_iter()
        .filter(|p| p.rel_error >= opts.floor && p.rel_error <= opts.cap)
        .map(|p| (p.eps.ln(), p.rel_error.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::WindowEmpty { floor: opts.floor, cap: opts.cap });
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::WindowEmpty { floor: opts.floor, cap: opts.cap });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual =
        (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / k).sqrt();
    let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.0), hi.max(p.0))
    });
    let nominal = extract_error_profile(prop, PROFILE_ORDER, opts.precision).ok().and_then(|p| match est {
        Estimator::Thermo => Some(p.thermo_order),
        Estimator::Hamiltonian => p.hamiltonian_order,
    });
    Ok(OrderFit {
        nominal,
        slope,
        intercept,
        window: (lo.exp(), hi.exp()),
        points: pts.len(),
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagator::FamilyParams;

    fn fam(p: FamilyParams) -> ContractedPropagator {
        ContractedPropagator::from_family(&p).unwrap()
    }

    #[test]
    fn pa_ti_profile() {
        for &alpha in &[0.0, 0.1, 0.3] {
            let p = extract_error_profile(&fam(FamilyParams::PaTi { alpha }), 14, Precision::Double)
                .unwrap();
            assert_eq!(p.n, 1);
            assert!((p.delta - 48.0 * alpha).abs() < 1e-12);
            assert!((p.d - (1.0 + 16.0 * alpha) / 8.0).abs() < 1e-12);
        }
        let pa = extract_error_profile(&fam(FamilyParams::PaTi { alpha: 0.0 }), 14, Precision::Double)
            .unwrap();
        assert!((pa.thermo_coefficient - 0.125).abs() < 1e-14);
        assert_eq!(pa.hamiltonian_order, Some(4));
        assert!((pa.hamiltonian_coefficient - 1.0 / 128.0).abs() < 1e-14);
        assert!((pa.hamiltonian_coefficient - pa.half_d_squared).abs() < 1e-14);
    }

    #[test]
    fn ti_profile_degrades_hamiltonian() {
        let p = extract_error_profile(
            &fam(FamilyParams::PaTi { alpha: 1.0 / 48.0 }),
            14,
            Precision::Double,
        )
        .unwrap();
        assert_eq!(p.n, 2);
        assert!(p.delta.abs() < 1e-12);
        assert!((p.thermo_coefficient - 1.0 / 144.0).abs() < 1e-14);
        assert!(!p.kappa_matched());
        assert_eq!(p.hamiltonian_order, Some(4));
        assert!((p.hamiltonian_coefficient - 1.0 / 72.0).abs() < 1e-14);
    }

    #[test]
    fn four_a_profile() {
        for &alpha in &[0.0, 0.4, 0.9] {
            let p = extract_error_profile(&fam(FamilyParams::FourA { alpha }), 14, Precision::Double)
                .unwrap();
            assert_eq!(p.n, 2);
            assert!((p.delta_prime - 5.0 / 6.0 * (1.0 - alpha)).abs() < 1e-12);
            assert!((p.delta - 5.0 / 6.0 * (1.0 + alpha)).abs() < 1e-12);
            assert!((p.d - (1.0 + 7.0 * alpha) / 864.0).abs() < 1e-14);
            assert_eq!(p.hamiltonian_order, Some(8));
        }
    }

    #[test]
    fn exact_and_shallow_truncations_rejected() {
        let e = extract_error_profile(&ContractedPropagator::exact(), 14, Precision::Double);
        assert!(matches!(e, Err(Error::TruncationTooShallow { .. })));
        let ti = fam(FamilyParams::PaTi { alpha: 1.0 / 48.0 });
        assert_eq!(
            extract_error_profile(&ti, 7, Precision::Double),
            Err(Error::TruncationTooShallow { order: 7, needed: 8 })
        );
    }

    #[test]
    fn predicted_prefactor_examples() {
        let pa = extract_error_profile(&fam(FamilyParams::PaTi { alpha: 0.0 }), 14, Precision::Double)
            .unwrap();
        let (t, h) = predicted_prefactors(&pa, 0.1);
        assert!((t - (1.0 - 0.01 / 8.0)).abs() < 1e-15);
        assert!((h - (1.0 + 1e-4 / 128.0)).abs() < 1e-15);
        let ti = extract_error_profile(
            &fam(FamilyParams::PaTi { alpha: 1.0 / 48.0 }),
            14,
            Precision::Double,
        )
        .unwrap();
        let (_, h) = predicted_prefactors(&ti, 0.1);
        assert!((h - (1.0 + 1e-4 / 72.0)).abs() < 1e-15);
    }

    #[test]
    fn u_series_leading_defect() {
        for p in [
            FamilyParams::PaTi { alpha: 0.0 },
            FamilyParams::PaTi { alpha: 1.0 / 48.0 },
            FamilyParams::FourA { alpha: 0.0 },
        ] {
            let prop = fam(p);
            let prof = extract_error_profile(&prop, 16, Precision::Double).unwrap();
            let u = u_series(&prop, 16, Precision::Double).unwrap();
            assert!((u.coeff(1) - 1.0).abs() < 1e-14);
            for k in 2..=2 * prof.n {
                assert!(u.coeff(k).abs() < 1e-14, "{p:?} k={k}");
            }
            assert!((u.coeff(2 * prof.n + 1) + prof.c).abs() < 1e-8, "{p:?}");
        }
    }

    #[test]
    fn u_series_matches_numeric_u() {
        let prop = fam(FamilyParams::Bda { t1: 0.3, alpha: 0.5 });
        let u = u_series(&prop, 30, Precision::Double).unwrap();
        let p = crate::energies::portal(&prop, 0.3).unwrap();
        assert!((u.eval(0.3) - p.u).abs() < 1e-13);
    }

    #[test]
    fn pa_slopes() {
        let pa = fam(FamilyParams::PaTi { alpha: 0.0 });
        let opts = FitOptions::default();
        let t = fit_order(&pa, Estimator::Thermo, &opts).unwrap();
        assert!((t.slope - 2.0).abs() < 0.3, "{t:?}");
        assert_eq!(t.nominal, Some(2));
        let h = fit_order(&pa, Estimator::Hamiltonian, &opts).unwrap();
        assert!((h.slope - 4.0).abs() < 0.3, "{h:?}");
    }

    #[test]
    fn empty_window() {
        let mut opts = FitOptions::default();
        opts.floor = 1.0;
        opts.cap = 2.0;
        let pa = fam(FamilyParams::PaTi { alpha: 0.0 });
        assert!(matches!(fit_order(&pa, Estimator::Thermo, &opts), Err(Error::WindowEmpty { .. })));
    }

    #[test]
    fn parsing() {
        assert_eq!("extended".parse::<Precision>().unwrap(), Precision::Extended);
        assert_eq!("H".parse::<Estimator>().unwrap(), Estimator::Hamiltonian);
        assert_eq!("closed-form".parse::<Reference>().unwrap(), Reference::ClosedForm);
        assert!("quad".parse::<Precision>().is_err());
    }
}

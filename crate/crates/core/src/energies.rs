//! Portal quantities and N-bead energies of a contracted propagator.
//!
//! Once `ζ₁` and `κ₁` are known, the N-fold product stays in canonical form
//! with `ζ_N = cosh(Nu)`, `u = arccosh ζ₁`, and `γ = √(ζ₁²−1)/κ₁` unchanged.
//! Every energy is then the universal `E_N = ½coth(Nu/2)` times a factor that
//! depends only on the short-time propagator.

use crate::error::{Error, Result};
use crate::propagator::ContractedPropagator;
use crate::real::Real;

/// Above this `Nu` the hyperbolic functions switch to exponential forms.
const ASYMPTOTIC_NU: f64 = 40.0;

/// Short-time quantities that fix every N-bead energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PortalQuantities<T = f64> {
    pub eps: T,
    pub zeta: T,
    pub zeta_minus_one: T,
    pub kappa: T,
    pub u: T,
    pub gamma: T,
    pub lambda: T,
    pub rho_t: T,
    pub rho_h: T,
    /// `ρ_H − 1 = (γ − 1)²/(2γ)`, without cancellation.
    pub rho_h_minus_one: T,
    /// `ρ_T − 1 = (λ − γ)/γ`.
    pub rho_t_minus_one: T,
    /// `g = e^{u/2}`.
    pub g: T,
    pub g_inv: T,
    pub extrapolated: bool,
}

/// Portal quantities at step size `eps`.
pub fn portal(prop: &ContractedPropagator, eps: f64) -> Result<PortalQuantities<f64>> {
    portal_in(prop, eps)
}

pub fn portal_in<T: Real>(prop: &ContractedPropagator, eps: T) -> Result<PortalQuantities<T>> {
    let c = prop.evaluate_in(eps)?;
    let zm1 = c.zeta_minus_one;
    if zm1 < T::zero() {
        return Err(Error::SubunityZeta(zm1.to_f64()));
    }
    let one = T::one();
    let two = T::from_f64(2.0);
    let h = zm1 / two;
    let root_h = h.sqrt();
    let root_1h = (one + h).sqrt();
    let g = root_1h + root_h;
    let g_inv = root_1h - root_h;
    // g − 1 = h/(√(1+h) + 1) + √h
    let g_m1 = h / (root_1h + one) + root_h;
    let u = two * g_m1.ln_1p();
    let gamma = (zm1 * (zm1 + two)).sqrt() / c.kappa;
    let lambda = c.lambda();
    let gm1 = gamma - one;
    Ok(PortalQuantities {
        eps,
        zeta: c.zeta,
        zeta_minus_one: zm1,
        kappa: c.kappa,
        u,
        gamma,
        lambda,
        rho_t: lambda / gamma,
        rho_h: (gamma + one / gamma) / two,
        rho_h_minus_one: gm1 * gm1 / (two * gamma),
        rho_t_minus_one: (lambda - gamma) / gamma,
        g,
        g_inv,
        extrapolated: c.extrapolated,
    })
}

/// Energies of the N-bead discretization.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyResult<T = f64> {
    pub n: usize,
    pub eps: T,
    pub tau: T,
    /// Universal discrete energy `½coth(Nu/2)`.
    pub universal: T,
    pub thermo: T,
    pub hamiltonian: T,
    pub partition: T,
    pub label: String,
    pub extrapolated: bool,
}

fn check_beads(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidArgument("bead count must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// `(½coth(x), 1/(2 sinh x))`.
fn half_coth_and_csch<T: Real>(x: T) -> (T, T) {
    let half = T::from_f64(0.5);
    let one = T::one();
    if x.to_f64() > ASYMPTOTIC_NU / 2.0 {
        let q = (-x).exp();
        let q2 = q * q;
        (half * (one + q2) / (one - q2), q / (one - q2))
    } else {
        let (c, s) = x.cosh_sinh();
        (half * c / s, half / s)
    }
}

/// `E_N = ½coth(Nu/2)` for portal parameter `u`.
pub fn universal_energy<T: Real>(u: T, n: usize) -> T {
    half_coth_and_csch(T::from_f64(n as f64) * u * T::from_f64(0.5)).0
}

/// All N-bead energies at step size `eps`.
pub fn energies(prop: &ContractedPropagator, n: usize, eps: f64) -> Result<EnergyResult<f64>> {
    energies_in(prop, n, eps)
}

/// All N-bead energies at total time `tau`, with `ε = τ/N`.
pub fn energies_at_tau(
    prop: &ContractedPropagator,
    n: usize,
    tau: f64,
) -> Result<EnergyResult<f64>> {
    check_beads(n)?;
    energies_in(prop, n, tau / n as f64)
}

pub fn energies_in<T: Real>(
    prop: &ContractedPropagator,
    n: usize,
    eps: T,
) -> Result<EnergyResult<T>> {
    check_beads(n)?;
    let p = portal_in(prop, eps)?;
    let nn = T::from_f64(n as f64);
    let (e, z) = half_coth_and_csch(nn * p.u * T::from_f64(0.5));
    Ok(EnergyResult {
        n,
        eps,
        tau: nn * eps,
        universal: e,
        thermo: p.rho_t * e,
        hamiltonian: p.rho_h * e,
        partition: z,
        label: prop.label().to_string(),
        extrapolated: p.extrapolated,
    })
}

/// `E_N^T` at step size `eps`.
pub fn thermo_energy(prop: &ContractedPropagator, n: usize, eps: f64) -> Result<f64> {
    Ok(energies(prop, n, eps)?.thermo)
}

/// `E_N^H` at step size `eps`.
pub fn hamiltonian_energy(prop: &ContractedPropagator, n: usize, eps: f64) -> Result<f64> {
    Ok(energies(prop, n, eps)?.hamiltonian)
}

/// `Z_N = 1/(2 sinh(Nu/2))` at step size `eps`.
pub fn partition_function(prop: &ContractedPropagator, n: usize, eps: f64) -> Result<f64> {
    Ok(energies(prop, n, eps)?.partition)
}

/// Canonical-form coefficients of the N-fold product.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeadQuantities {
    pub zeta: f64,
    pub kappa: f64,
    pub mu: f64,
}

pub fn bead_quantities(prop: &ContractedPropagator, n: usize, eps: f64) -> Result<BeadQuantities> {
    check_beads(n)?;
    let p = portal(prop, eps)?;
    let nu = n as f64 * p.u;
    Ok(BeadQuantities {
        zeta: nu.cosh(),
        kappa: nu.sinh() / p.gamma,
        mu: p.gamma * (nu / 2.0).tanh(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagator::{FamilyParams, StepSequence};
    use crate::real::DoubleDouble;

    fn pa() -> ContractedPropagator {
        ContractedPropagator::from_family(&FamilyParams::PaTi { alpha: 0.0 }).unwrap()
    }

    fn ti() -> ContractedPropagator {
        ContractedPropagator::from_family(&FamilyParams::PaTi { alpha: 1.0 / 48.0 }).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn exact_portal() {
        let p = portal(&ContractedPropagator::exact(), 0.8).unwrap();
        assert!(rel(p.u, 0.8) < 1e-15);
        assert!((p.gamma - 1.0).abs() < 1e-15);
        assert!((p.rho_h - 1.0).abs() < 1e-15);
        assert!((p.lambda - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pa_portal() {
        let p = portal(&pa(), 1.0).unwrap();
        assert_eq!(p.zeta, 1.5);
        assert!((p.u - 0.962_423_650_119_206_9).abs() < 1e-15);
        assert!(rel(p.gamma, 1.25f64.sqrt()) < 1e-15);
        assert!((p.lambda - 1.0).abs() < 1e-15);
        assert!(rel(p.u.sinh(), p.gamma * p.kappa) < 1e-13);
        assert!((p.g * p.g_inv - 1.0).abs() < 1e-15);
        assert!(rel(p.g, (p.u / 2.0).exp()) < 1e-15);
    }

    #[test]
    fn pa_and_ti_rational_values() {
        let e = |p: &ContractedPropagator, n| energies_at_tau(p, n, 5.0).unwrap().thermo;
        assert!((e(&pa(), 2) - 66.0 / 205.0).abs() < 1e-14);
        assert!((e(&pa(), 4) - 10948.0 / 25365.0).abs() < 1e-14);
        assert!((e(&ti(), 2) - 432_964.0 / 946_445.0).abs() < 1e-14);
        for &tau in &[0.5, 2.0, 7.0] {
            let r = energies_at_tau(&pa(), 1, tau).unwrap();
            assert!(rel(r.thermo, 1.0 / tau) < 1e-14);
            assert!(rel(r.hamiltonian, (1.0 + tau * tau / 8.0) / tau) < 1e-14);
        }
    }

    #[test]
    fn exact_energy_is_closed_form() {
        for n in [1, 3, 17] {
            let r = energies_at_tau(&ContractedPropagator::exact(), n, 5.0).unwrap();
            assert!((r.thermo - 0.506_783_654_906_1).abs() < 1e-12);
            assert!((r.hamiltonian - r.thermo).abs() < 1e-14);
            assert!(rel(r.partition, 1.0 / (2.0 * 2.5f64.sinh())) < 1e-13);
        }
    }

    #[test]
    fn partition_function_examples() {
        assert!((partition_function(&pa(), 1, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let z = partition_function(&ContractedPropagator::exact(), 50, 2.0).unwrap();
        assert!(rel(z, (-50.0f64).exp()) < 1e-12);
        let b = bead_quantities(&pa(), 3, 0.7).unwrap();
        let z = partition_function(&pa(), 3, 0.7).unwrap();
        assert!(rel(z, 1.0 / (2.0 * (b.zeta - 1.0)).sqrt()) < 1e-12);
    }

    #[test]
    fn large_nu_is_finite() {
        let r = energies_at_tau(&ti(), 4, 2000.0).unwrap();
        assert!(r.universal.is_finite() && r.partition >= 0.0);
        assert!((r.universal - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bead_quantities_round_trip() {
        let p = ContractedPropagator::from_family(&FamilyParams::FourA { alpha: 0.3 }).unwrap();
        let c = p.evaluate(0.6).unwrap();
        let b = bead_quantities(&p, 1, 0.6).unwrap();
        assert!(rel(b.zeta, c.zeta) < 1e-13);
        assert!(rel(b.kappa, c.kappa) < 1e-13);
        assert!(rel(b.mu, c.mu) < 1e-13);
        let g1 = portal(&p, 0.6).unwrap().gamma;
        for n in [2, 4, 8] {
            let b = bead_quantities(&p, n, 0.6).unwrap();
            assert!(rel((b.zeta * b.zeta - 1.0).sqrt() / b.kappa, g1) < 1e-12);
        }
    }

    #[test]
    fn doubling_matches_squared_sequence() {
        let p = ContractedPropagator::from_family(&FamilyParams::Bda { t1: 0.3, alpha: 0.2 })
            .unwrap();
        let sq = ContractedPropagator::from_sequence(p.sequence().unwrap().squared());
        let b = bead_quantities(&p, 2, 0.4).unwrap();
        let c = sq.evaluate(0.8).unwrap();
        assert!(rel(b.zeta, c.zeta) < 1e-13);
        assert!(rel(b.kappa, c.kappa) < 1e-13);
        assert!(rel(b.mu, c.mu) < 1e-13);
    }

    #[test]
    fn ratio_law_and_pa_factor() {
        for &eps in &[0.1, 0.5, 1.5] {
            let p = portal(&ti(), eps).unwrap();
            let want = (1.0 + p.gamma * p.gamma) / (2.0 * p.lambda);
            for n in [1, 5, 40] {
                let r = energies(&ti(), n, eps).unwrap();
                assert!(rel(r.hamiltonian / r.thermo, want) < 1e-12);
            }
            let r = energies(&pa(), 7, eps).unwrap();
            assert!(rel(r.hamiltonian, (1.0 + eps * eps / 8.0) * r.thermo) < 1e-13);
        }
    }

    #[test]
    fn subunity_zeta_is_rejected() {
        use crate::propagator::Step;
        // Strong negative potential shear drives ζ₁ below one.
        let seq = StepSequence::new(
            "neg",
            vec![
                Step::potential(3.0),
                Step::kinetic(0.5),
                Step::potential(-5.0),
                Step::kinetic(0.5),
                Step::potential(3.0),
            ],
        )
        .unwrap();
        let p = ContractedPropagator::from_sequence(seq);
        assert!((0..60)
            .map(|i| 0.05 + 0.05 * i as f64)
            .any(|e| matches!(portal(&p, e), Err(Error::SubunityZeta(_)))));
    }

    #[test]
    fn extended_precision_agrees() {
        let p = ContractedPropagator::from_family(&FamilyParams::FourA { alpha: 0.0 }).unwrap();
        let d = energies(&p, 6, 0.5).unwrap();
        let x = energies_in(&p, 6, DoubleDouble::from(0.5)).unwrap();
        assert!(rel(x.thermo.to_f64(), d.thermo) < 1e-14);
        assert!(rel(x.hamiltonian.to_f64(), d.hamiltonian) < 1e-14);
    }
}

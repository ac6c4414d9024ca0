//! Brute-force check of the analytic energies on a position grid.
//!
//! The short-time kernel is tabulated on `[-L, L]`, multiplied out by
//! quadrature, and the energies are recomputed from the resulting `G_N`:
//! `Z_N` from its weighted trace, `E^T` by differencing `ln Z_N` in ε, and
//! `E^H` by applying `H` to the first argument with a 5-point stencil.
//! Nothing here uses `u`, `γ`, or `λ`.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::error::{Error, Result};
use crate::propagator::ContractedPropagator;

/// Relative step of the central ε-difference for `E^T`.
pub const FD_REL_STEP: f64 = 1e-4;

/// Largest admissible `G_N(±L, ±L)/max G_N(x, x)`.
const EDGE_DECAY: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quadrature {
    Trapezoid,
    Simpson,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    half_width: f64,
    points: usize,
    rule: Quadrature,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { half_width: 10.0, points: 2001, rule: Quadrature::Simpson }
    }
}

impl GridSpec {
    pub fn new(half_width: f64, points: usize, rule: Quadrature) -> Result<Self> {
        if points < 64 {
            return Err(Error::InvalidGrid(format!("need at least 64 points, got {points}")));
        }
        if !(half_width >= 6.0) {
            return Err(Error::InvalidGrid(format!("half-width {half_width} is below 6")));
        }
        if rule == Quadrature::Simpson && points % 2 == 0 {
            return Err(Error::InvalidGrid(format!("Simpson needs an odd point count, got {points}")));
        }
        Ok(Self { half_width, points, rule })
    }

    /// The stricter grid used where 1e-6 agreement is claimed.
    pub fn tightened() -> Self {
        Self { half_width: 14.0, points: 4001, rule: Quadrature::Simpson }
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn rule(&self) -> Quadrature {
        self.rule
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points - 1) as f64
    }

    /// Same interval with the spacing halved.
    pub fn refined(&self) -> Self {
        Self { points: 2 * self.points - 1, ..*self }
    }

    pub fn nodes(&self) -> Array1<f64> {
        Array1::linspace(-self.half_width, self.half_width, self.points)
    }

    pub fn weights(&self) -> Array1<f64> {
        let h = self.spacing();
        let m = self.points;
        Array1::from_shape_fn(m, |i| match self.rule {
            Quadrature::Trapezoid if i == 0 || i == m - 1 => 0.5 * h,
            Quadrature::Trapezoid => h,
            Quadrature::Simpson if i == 0 || i == m - 1 => h / 3.0,
            Quadrature::Simpson if i % 2 == 1 => 4.0 * h / 3.0,
            Quadrature::Simpson => 2.0 * h / 3.0,
        })
    }
}

/// `G₁(xᵢ, xⱼ; ε)` on the grid.
#[derive(Clone, Debug)]
pub struct KernelMatrix {
    pub matrix: Array2<f64>,
    pub grid: GridSpec,
    pub eps: f64,
    pub nodes: Array1<f64>,
    pub weights: Array1<f64>,
}

/// Tabulates `(2πκ₁)^{-1/2} e^{-μ₁x²/2} e^{-(x-x')²/(2κ₁)} e^{-μ₁x'²/2}`.
pub fn build_kernel(prop: &ContractedPropagator, eps: f64, grid: GridSpec) -> Result<KernelMatrix> {
    let c = prop.evaluate(eps)?;
    if !(c.mu > 0.0) {
        return Err(Error::NonIntegrableKernel(c.mu));
    }
    let nodes = grid.nodes();
    let norm = (2.0 * PI * c.kappa).sqrt().recip();
    let m = grid.points();
    let entry = |i: usize, j: usize| {
        let (x, y) = (nodes[i], nodes[j]);
        let d = x - y;
        norm * (-0.5 * c.mu * (x * x + y * y) - d * d / (2.0 * c.kappa)).exp()
    };
    // Fill one quarter; the rest follows from x ↔ x′ and x → −x.
    let mut matrix = Array2::zeros((m, m));
    for i in 0..m {
        for j in i..m - i {
            let v = entry(i, j);
            let (i2, j2) = (m - 1 - i, m - 1 - j);
            matrix[[i, j]] = v;
            matrix[[j, i]] = v;
            matrix[[i2, j2]] = v;
            matrix[[j2, i2]] = v;
        }
    }
    Ok(KernelMatrix { matrix, grid, eps, weights: grid.weights(), nodes })
}

impl KernelMatrix {
    /// `A W B` with `W` the quadrature weights.
    fn weighted_product(&self, a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
        let aw = a * &self.weights.view().insert_axis(Axis(0));
        aw.dot(b)
    }

    /// Full `G_n` by repeated squaring.
    pub fn propagate(&self, n: usize) -> Result<Array2<f64>> {
        if n == 0 {
            return Err(Error::InvalidArgument("bead count must be at least 1".into()));
        }
        if n == 1 {
            return Ok(self.matrix.clone());
        }
        let half = self.propagate(n / 2)?;
        let sq = self.weighted_product(&half, &half);
        Ok(if n % 2 == 1 { self.weighted_product(&sq, &self.matrix) } else { sq })
    }

    /// `G_n(x_{i+d}, x_i)` for `d = −2..=2`; entries off the grid are zero.
    fn bands(&self, n: usize) -> Result<[Array1<f64>; 5]> {
        let m = self.grid.points();
        let mut out: [Array1<f64>; 5] = std::array::from_fn(|_| Array1::zeros(m));
        if n == 1 {
            for (k, band) in out.iter_mut().enumerate() {
                for i in 0..m {
                    if let Some(r) = (i + k).checked_sub(2).filter(|&r| r < m) {
                        band[i] = self.matrix[[r, i]];
                    }
                }
            }
            return Ok(out);
        }
        if m % 2 == 1 {
            return Ok(self.parity_bands(n));
        }
        let b = n / 2;
        let gb = self.propagate(b)?;
        let ga = if n - b == b { gb.clone() } else { self.propagate(n - b)? };
        let gaw = ga * &self.weights.view().insert_axis(Axis(0));
        for (k, band) in out.iter_mut().enumerate() {
            for i in 0..m {
                if let Some(r) = (i + k).checked_sub(2).filter(|&r| r < m) {
                    // G_b is symmetric, so its column i is row i.
                    band[i] = gaw.row(r).dot(&gb.row(i));
                }
            }
        }
        Ok(out)
    }

    /// Even and odd blocks of the kernel on `x ≥ 0`, for odd `M`.
    ///
    /// The grid and the kernel are symmetric under `x → −x`, so products
    /// split into two half-size blocks.
    fn fold(&self) -> Parity {
        let m = self.grid.points();
        let c = (m - 1) / 2;
        let g = &self.matrix;
        let even = Array2::from_shape_fn((c + 1, c + 1), |(p, q)| {
            if q == 0 {
                2.0 * g[[c + p, c]]
            } else {
                g[[c + p, c + q]] + g[[c + p, c - q]]
            }
        });
        let odd = Array2::from_shape_fn((c, c), |(p, q)| g[[c + 1 + p, c + 1 + q]] - g[[c + 1 + p, c - 1 - q]]);
        let mut we = self.weights.slice(ndarray::s![c..]).to_owned();
        we[0] *= 0.5;
        let wo = self.weights.slice(ndarray::s![c + 1..]).to_owned();
        Parity { even, odd, we, wo }
    }

    fn parity_bands(&self, n: usize) -> [Array1<f64>; 5] {
        let m = self.grid.points();
        let c = (m - 1) / 2;
        let one = self.fold();
        let b = n / 2;
        let pb = one.power(b);
        let pa = if n - b == b { pb.clone() } else { one.power(n - b) };
        let ae = &pa.even * &pa.we.view().insert_axis(Axis(0));
        let ao = &pa.odd * &pa.wo.view().insert_axis(Axis(0));
        let even = |p: usize, q: usize| ae.row(p).dot(&pb.even.row(q));
        let odd = |p: usize, q: usize| ao.row(p).dot(&pb.odd.row(q));
        let entry = |r: usize, i: usize| {
            let (r, i) = if i < c { (m - 1 - r, m - 1 - i) } else { (r, i) };
            let ti = i - c;
            let (tr, same_side) = if r >= c { (r - c, true) } else { (c - r, false) };
            if ti == 0 {
                return 0.5 * even(tr, 0);
            }
            if tr == 0 {
                return 0.5 * even(0, ti);
            }
            let (e, o) = (even(tr, ti), odd(tr - 1, ti - 1));
            if same_side {
                0.5 * (e + o)
            } else {
                0.5 * (e - o)
            }
        };
        let mut out: [Array1<f64>; 5] = std::array::from_fn(|_| Array1::zeros(m));
        for (k, band) in out.iter_mut().enumerate() {
            for i in 0..m {
                if let Some(r) = (i + k).checked_sub(2).filter(|&r| r < m) {
                    band[i] = entry(r, i);
                }
            }
        }
        out
    }

    fn trace(&self, diag: ArrayView1<f64>) -> f64 {
        diag.dot(&self.weights)
    }

    fn check_decay(&self, diag: ArrayView1<f64>) -> Result<()> {
        let peak = diag.iter().cloned().fold(0.0, f64::max);
        let edge = diag[0].max(diag[diag.len() - 1]);
        if edge > EDGE_DECAY * peak {
            return Err(Error::GridTooCoarse(format!(
                "diagonal at the boundary is {:.3e} of its peak; widen the grid",
                edge / peak
            )));
        }
        Ok(())
    }
}

#[derive(Clone)]
struct Parity {
    even: Array2<f64>,
    odd: Array2<f64>,
    we: Array1<f64>,
    wo: Array1<f64>,
}

impl Parity {
    fn product(&self, other: &Parity) -> Parity {
        let even = (&self.even * &self.we.view().insert_axis(Axis(0))).dot(&other.even);
        let odd = (&self.odd * &self.wo.view().insert_axis(Axis(0))).dot(&other.odd);
        Parity { even, odd, we: self.we.clone(), wo: self.wo.clone() }
    }

    fn power(&self, n: usize) -> Parity {
        if n == 1 {
            return self.clone();
        }
        let half = self.power(n / 2);
        let sq = half.product(&half);
        if n % 2 == 1 {
            sq.product(self)
        } else {
            sq
        }
    }
}

/// Oracle estimates at one `(N, ε)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleEnergies {
    pub n: usize,
    pub eps: f64,
    pub partition: f64,
    pub thermo: f64,
    pub hamiltonian: f64,
}

fn log_partition(prop: &ContractedPropagator, n: usize, eps: f64, grid: GridSpec) -> Result<f64> {
    let k = build_kernel(prop, eps, grid)?;
    let bands = k.bands(n)?;
    Ok(k.trace(bands[2].view()).ln())
}

/// `Z_N`, `E^T`, `E^H` from the grid.
pub fn oracle_energies(
    prop: &ContractedPropagator,
    n: usize,
    eps: f64,
    grid: GridSpec,
) -> Result<OracleEnergies> {
    let k = build_kernel(prop, eps, grid)?;
    let bands = k.bands(n)?;
    k.check_decay(bands[2].view())?;
    let z = k.trace(bands[2].view());

    let dh = FD_REL_STEP * eps;
    let up = log_partition(prop, n, eps + dh, grid)?;
    let down = log_partition(prop, n, eps - dh, grid)?;
    // E^T = −∂ln Z/∂τ with τ = Nε.
    let thermo = -(up - down) / (2.0 * dh * n as f64);

    let h = grid.spacing();
    let m = grid.points();
    let mut num = 0.0;
    for i in 2..m - 2 {
        let d2 = (-bands[0][i] + 16.0 * bands[1][i] - 30.0 * bands[2][i] + 16.0 * bands[3][i]
            - bands[4][i])
            / (12.0 * h * h);
        let x = k.nodes[i];
        num += k.weights[i] * (-0.5 * d2 + 0.5 * x * x * bands[2][i]);
    }
    Ok(OracleEnergies { n, eps, partition: z, thermo, hamiltonian: num / z })
}

/// [`oracle_energies`] at total time `tau`.
pub fn oracle_energies_at_tau(
    prop: &ContractedPropagator,
    n: usize,
    tau: f64,
    grid: GridSpec,
) -> Result<OracleEnergies> {
    if n == 0 {
        return Err(Error::InvalidArgument("bead count must be at least 1".into()));
    }
    oracle_energies(prop, n, tau / n as f64, grid)
}

/// Like [`oracle_energies`], but fails if halving the spacing moves any
/// result by more than `tol` relative.
pub fn oracle_energies_checked(
    prop: &ContractedPropagator,
    n: usize,
    eps: f64,
    grid: GridSpec,
    tol: f64,
) -> Result<OracleEnergies> {
    let coarse = oracle_energies(prop, n, eps, grid)?;
    let fine = oracle_energies(prop, n, eps, grid.refined())?;
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    let shift = rel(coarse.partition, fine.partition)
        .max(rel(coarse.thermo, fine.thermo))
        .max(rel(coarse.hamiltonian, fine.hamiltonian));
    if shift > tol {
        return Err(Error::GridTooCoarse(format!(
            "refining to {} points shifts results by {shift:.3e} (> {tol:.1e})",
            grid.refined().points()
        )));
    }
    Ok(fine)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energies::energies;
    use crate::propagator::FamilyParams;

    fn pa() -> ContractedPropagator {
        ContractedPropagator::from_family(&FamilyParams::PaTi { alpha: 0.0 }).unwrap()
    }

    fn small() -> GridSpec {
        GridSpec::new(10.0, 401, Quadrature::Simpson).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(10.0, 63, Quadrature::Trapezoid).is_err());
        assert!(GridSpec::new(5.0, 101, Quadrature::Trapezoid).is_err());
        assert!(GridSpec::new(10.0, 100, Quadrature::Simpson).is_err());
        assert!(GridSpec::new(10.0, 100, Quadrature::Trapezoid).is_ok());
        let w: f64 = small().weights().sum();
        assert!((w - 20.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_entries() {
        let g = GridSpec::new(10.0, 201, Quadrature::Simpson).unwrap();
        let k = build_kernel(&pa(), 1.0, g).unwrap();
        // x = 1 is node 110 when h = 0.1.
        let i = 110;
        assert!((k.nodes[i] - 1.0).abs() < 1e-12);
        assert!((k.matrix[[i, i]] - 0.241_970_724_519_143_37).abs() < 1e-12);
        assert!((k.matrix[[100, 100]] - (2.0 * PI).sqrt().recip()).abs() < 1e-15);
        assert_eq!(k.matrix, k.matrix.t());
        assert!(k.matrix.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn non_integrable_kernel() {
        use crate::propagator::{Step, StepSequence};
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
        let g = GridSpec::new(10.0, 65, Quadrature::Simpson).unwrap();
        assert!((1..60)
            .map(|i| 0.05 * i as f64)
            .any(|e| matches!(build_kernel(&p, e, g), Err(Error::NonIntegrableKernel(_)))));
    }

    #[test]
    fn parity_blocks_match_full_products() {
        let k = build_kernel(&pa(), 0.8, small()).unwrap();
        let m = k.grid.points();
        for n in [2, 3, 4, 5] {
            let g = k.propagate(n).unwrap();
            let bands = k.parity_bands(n);
            for (d, band) in bands.iter().enumerate() {
                for i in 0..m {
                    if let Some(r) = (i + d).checked_sub(2).filter(|&r| r < m) {
                        let want = g[[r, i]];
                        assert!((band[i] - want).abs() <= 1e-12 * want.abs().max(1e-300), "n={n} d={d} i={i}");
                    }
                }
            }
        }
    }

    #[test]
    fn squaring_matches_direct_power() {
        let k = build_kernel(&pa(), 0.8, small()).unwrap();
        let g4 = k.propagate(4).unwrap();
        let g2 = k.propagate(2).unwrap();
        let g4b = k.weighted_product(&g2, &g2);
        let g3 = k.propagate(3).unwrap();
        let g4c = k.weighted_product(&g3, &k.matrix);
        for i in 0..k.grid.points() {
            let d = g4[[i, i]];
            if d > 1e-200 {
                assert!(((g4b[[i, i]] - d) / d).abs() < 1e-8);
                assert!(((g4c[[i, i]] - d) / d).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn pa_agrees_with_analytic() {
        let o = oracle_energies(&pa(), 4, 1.25, GridSpec::default()).unwrap();
        let a = energies(&pa(), 4, 1.25).unwrap();
        assert!(((o.partition - a.partition) / a.partition).abs() < 1e-6);
        assert!(((o.thermo - a.thermo) / a.thermo).abs() < 1e-6);
        assert!(((o.hamiltonian - a.hamiltonian) / a.hamiltonian).abs() < 1e-6);
    }

    #[test]
    fn exact_hamiltonian() {
        let o = oracle_energies(&ContractedPropagator::exact(), 1, 5.0, small()).unwrap();
        assert!((o.hamiltonian - 0.5 / 2.5f64.tanh()).abs() < 1e-6);
    }

    #[test]
    fn refinement_converges() {
        let p = ContractedPropagator::from_family(&FamilyParams::FourA { alpha: 0.0 }).unwrap();
        let exact = energies(&p, 2, 1.0).unwrap().hamiltonian;
        let errs: Vec<f64> = [65, 129, 257]
            .iter()
            .map(|&m| {
                let g = GridSpec::new(10.0, m, Quadrature::Simpson).unwrap();
                (oracle_energies(&p, 2, 1.0, g).unwrap().hamiltonian - exact).abs()
            })
            .collect();
        assert!(errs[0] >= 4.0 * errs[1] && errs[1] >= 4.0 * errs[2], "{errs:?}");
    }

    #[test]
    fn narrow_grid_is_flagged() {
        let g = GridSpec::new(6.0, 201, Quadrature::Simpson).unwrap();
        let e = oracle_energies(&ContractedPropagator::exact(), 1, 0.05, g);
        assert!(matches!(e, Err(Error::GridTooCoarse(_))), "{e:?}");
    }
}

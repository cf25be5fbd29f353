//! Closed forms for the second-order tree with sender auxiliary: the
//! symmetry-adapted basis, the effective 4-chain eigensystem, the resonance
//! condition, the transfer amplitude, and the exact fidelity F_n.
//!
//! The residual phase φ_n = √5(2n+1)π is reduced mod 2π in extended
//! precision (integer arithmetic on a 60-digit √5) before any trig: for
//! large n a double-precision product loses exactly the digits that decide
//! the infidelity, which sits many orders below 1.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DVector;
use num_bigint::BigUint;
use num_complex::Complex64;

use crate::dynamics::ExcitationState;
use crate::error::{Error, Result};
use crate::network::{NetworkSpec, NodeId};

/// √5 scaled by 10^60, as an integer.
fn sqrt5_scaled() -> &'static BigUint {
    static CELL: OnceLock<BigUint> = OnceLock::new();
    CELL.get_or_init(|| (BigUint::from(5u32) * BigUint::from(10u32).pow(120)).sqrt())
}

fn ten_pow_60() -> &'static BigUint {
    static CELL: OnceLock<BigUint> = OnceLock::new();
    CELL.get_or_init(|| BigUint::from(10u32).pow(60))
}

fn biguint_to_f64(x: &BigUint) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().expect("BigUint always converts to f64")
}

/// φ_n mod 2π in [0, 2π), computed in extended precision.
pub fn phi_mod_2pi(n: u64) -> f64 {
    let x = sqrt5_scaled() * BigUint::from(2 * n + 1);
    let rem = &x % (ten_pow_60() * BigUint::from(2u32));
    PI * (biguint_to_f64(&rem) / 1e60)
}

/// sin²(φ_n/2), accurate down to the 1e-30 scale: the distance from
/// √5(2n+1) to the nearest even integer is isolated exactly in integer
/// arithmetic before the (small-argument) sine is taken.
pub fn sin_sq_half_phi(n: u64) -> f64 {
    let x = sqrt5_scaled() * BigUint::from(2 * n + 1);
    let two = ten_pow_60() * BigUint::from(2u32);
    let rem = &x % &two; // √5(2n+1) mod 2, scaled
    let dist = (&rem).min(&(&two - &rem)).clone(); // distance to nearest even integer
    let d = biguint_to_f64(&dist) / 1e60;
    let s = (PI * d / 2.0).sin();
    s * s
}

/// 1 − F_n = u²(3+u)/4 with u = sin²(φ_n/2); algebraically identical to
/// 1 − the closed-form F_n below but free of the 1−F cancellation.
pub fn analytic_infidelity(n: u64) -> f64 {
    let u = sin_sq_half_phi(n);
    u * u * (3.0 + u) / 4.0
}

/// F_n = (1/4)cos²(φ_n/2)·[3 − cos²(φ_n/2)]².
pub fn analytic_fidelity(n: u64) -> f64 {
    1.0 - analytic_infidelity(n)
}

/// Resonant field and free-evolution time for the effective 4-chain with
/// coupling `j`: ω = (7+√5)J/2, τ_n = (2n+1)π/J.
pub fn resonance_params(n: u64, j: f64) -> Result<(f64, f64)> {
    if j <= 0.0 {
        return Err(Error::invalid("chain coupling must be positive"));
    }
    let omega = (7.0 + 5.0f64.sqrt()) / 2.0 * j;
    let tau = (2 * n + 1) as f64 * PI / j;
    Ok((omega, tau))
}

/// One near-resonant protocol instance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResonancePoint {
    pub n: u64,
    pub tau: f64,
    /// Residual phase φ_n = √5(2n+1)π (raw; use [`phi_mod_2pi`] for the
    /// reduced value).
    pub phi: f64,
    pub fidelity: f64,
}

impl ResonancePoint {
    pub fn at(n: u64, j: f64) -> Result<Self> {
        let (_, tau) = resonance_params(n, j)?;
        Ok(ResonancePoint {
            n,
            tau,
            phi: 5.0f64.sqrt() * (2 * n + 1) as f64 * PI,
            fidelity: analytic_fidelity(n),
        })
    }

    pub fn infidelity(&self) -> f64 {
        analytic_infidelity(self.n)
    }
}

/// Minimum-infidelity point over n = 0..=max_n; ties go to the smallest n.
/// Exhaustive scan; trivially cheap for every n this protocol can use.
pub fn best_resonance(max_n: u64, j: f64) -> Result<ResonancePoint> {
    let mut best_n = 0;
    let mut best = analytic_infidelity(0);
    for n in 1..=max_n {
        let inf = analytic_infidelity(n);
        if inf < best {
            best = inf;
            best_n = n;
        }
    }
    ResonancePoint::at(best_n, j)
}

/// Eigensystem of the uniform 4-chain (diagonal ω, off-diagonal j), in
/// closed form. Eigenvectors are rows over the basis (v0_new, v1, v2, v3).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct H4System {
    pub omega: f64,
    pub j: f64,
    pub energies: [f64; 4],
    pub vectors: [[f64; 4]; 4],
}

pub fn h4_eigensystem(omega: f64, j: f64) -> Result<H4System> {
    if j == 0.0 {
        return Err(Error::invalid("chain coupling must be nonzero"));
    }
    let s5 = 5.0f64.sqrt();
    let energies = [
        omega - (s5 + 1.0) * j / 2.0,
        omega - (s5 - 1.0) * j / 2.0,
        omega + (s5 - 1.0) * j / 2.0,
        omega + (s5 + 1.0) * j / 2.0,
    ];
    let g = (1.0 + s5) / 2.0;
    let h = (1.0 - s5) / 2.0;
    let np = 1.0 / (5.0 + s5).sqrt();
    let nm = 1.0 / (5.0 - s5).sqrt();
    let vectors = [
        [-np, np * g, -np * g, np],
        [nm, nm * h, nm * h, nm],
        [-nm, nm * h, -nm * h, nm],
        [np, np * g, np * g, np],
    ];
    Ok(H4System { omega, j, energies, vectors })
}

impl H4System {
    /// The matrix the closed forms diagonalize: tridiagonal (ω; j).
    pub fn matrix(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(4, 4);
        for i in 0..4 {
            m[(i, i)] = self.omega;
            if i + 1 < 4 {
                m[(i, i + 1)] = self.j;
                m[(i + 1, i)] = self.j;
            }
        }
        m
    }
}

/// ⟨v3| e^{-iH₄τ} |v0_new⟩ in closed form:
/// (√5−5)/20·(e^{−iE₁τ} − e^{−iE₄τ}) + (√5+5)/20·(e^{−iE₂τ} − e^{−iE₃τ}).
pub fn transfer_amplitude(sys: &H4System, tau: f64) -> Complex64 {
    let s5 = 5.0f64.sqrt();
    let e = |k: usize| Complex64::from_polar(1.0, -sys.energies[k] * tau);
    (s5 - 5.0) / 20.0 * (e(0) - e(3)) + (s5 + 5.0) / 20.0 * (e(1) - e(2))
}

/// The symmetry-adapted basis of the 9-node tree-with-auxiliary: the sender
/// triplet v0_new heads the transport chain, v1..v7 complete the invariant
/// blocks, and the sender singlet s0 is fully decoupled (the storage state).
#[derive(Clone, Debug)]
pub struct SymmetryBasis {
    pub v0_new: ExcitationState,
    pub v: [ExcitationState; 7],
    pub s0: ExcitationState,
}

impl SymmetryBasis {
    /// All nine vectors in block order: v0_new, v1..v7, s0.
    pub fn vectors(&self) -> Vec<&ExcitationState> {
        let mut out = vec![&self.v0_new];
        out.extend(self.v.iter());
        out.push(&self.s0);
        out
    }
}

pub fn symmetry_basis(net: &NetworkSpec) -> Result<SymmetryBasis> {
    let expected: Vec<NodeId> = {
        let mut v = vec![NodeId::tree(0, 0), NodeId::tree(0, 1), NodeId::tree(1, 1), NodeId::tree(1, 2)];
        v.extend((1..=4).map(|b| NodeId::tree(2, b)));
        v.push(NodeId::tree_aux(0, 0));
        v
    };
    if net.len() != expected.len() || !expected.iter().all(|id| net.contains(id)) {
        return Err(Error::invalid("network is not the 9-node BT2 with sender auxiliary"));
    }

    let one = Complex64::new(1.0, 0.0);
    let combo = |terms: &[(NodeId, f64)]| -> Result<ExcitationState> {
        let terms: Vec<(NodeId, Complex64)> =
            terms.iter().map(|(id, c)| (id.clone(), one * *c)).collect();
        ExcitationState::superpose(net, &terms)
    };
    let leaf = NodeId::tree;

    let v0_new = combo(&[(NodeId::tree(0, 0), 1.0), (NodeId::tree_aux(0, 0), 1.0)])?;
    let s0 = combo(&[(NodeId::tree(0, 0), 1.0), (NodeId::tree_aux(0, 0), -1.0)])?;
    let v = [
        combo(&[(NodeId::tree(0, 1), 1.0)])?,
        combo(&[(leaf(1, 1), 1.0), (leaf(1, 2), 1.0)])?,
        combo(&[(leaf(2, 1), 1.0), (leaf(2, 2), 1.0), (leaf(2, 3), 1.0), (leaf(2, 4), 1.0)])?,
        combo(&[(leaf(1, 1), 1.0), (leaf(1, 2), -1.0)])?,
        combo(&[(leaf(2, 1), 1.0), (leaf(2, 2), 1.0), (leaf(2, 3), -1.0), (leaf(2, 4), -1.0)])?,
        combo(&[(leaf(2, 1), 1.0), (leaf(2, 2), -1.0), (leaf(2, 3), 1.0), (leaf(2, 4), -1.0)])?,
        combo(&[(leaf(2, 1), 1.0), (leaf(2, 2), -1.0), (leaf(2, 3), -1.0), (leaf(2, 4), 1.0)])?,
    ];
    Ok(SymmetryBasis { v0_new, v, s0 })
}

/// Rotates a sector matrix into the given orthonormal vectors: R[i][j] =
/// ⟨b_i|H|b_j⟩. Used to exhibit the block structure.
pub fn rotate_into_basis(
    matrix: &nalgebra::DMatrix<f64>,
    basis: &[&ExcitationState],
) -> nalgebra::DMatrix<f64> {
    let n = basis.len();
    let real = |s: &ExcitationState| DVector::from_fn(s.dim(), |i, _| s.amps[i].re);
    let cols: Vec<DVector<f64>> = basis.iter().map(|s| real(s)).collect();
    nalgebra::DMatrix::from_fn(n, n, |i, j| cols[i].dot(&(matrix * &cols[j])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{overlap, sector_hamiltonian};
    use crate::network::build_bt2_with_aux;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::SQRT_2;

    // Independent oracle for φ_n reduction: a literature value of √5 to 70
    // digits, combined with u128 arithmetic on (2n+1), kept separate from the
    // BigUint path used by the implementation.
    const SQRT5_70: &str =
        "2.2360679774997896964091736687747634474550219781388544906209203718280671";

    fn oracle_sin_sq_half_phi(n: u64) -> f64 {
        // digits -> u128 chunks; multiply by (2n+1) and reduce mod 2 manually
        let digits: Vec<u8> = SQRT5_70
            .chars()
            .filter(|c| c.is_ascii_digit())
            .map(|c| c as u8 - b'0')
            .collect();
        let m = 2 * n as u128 + 1;
        // long multiplication over base-10 digits, most significant first
        let mut prod = vec![0u128; digits.len()];
        for (i, &d) in digits.iter().enumerate() {
            prod[i] = d as u128 * m;
        }
        for i in (1..prod.len()).rev() {
            let carry = prod[i] / 10;
            prod[i] %= 10;
            prod[i - 1] += carry;
        }
        // integer part is prod[0] (still possibly >= 10), fraction follows
        let int_part = prod[0];
        let mut frac = 0.0f64;
        let mut scale = 0.1;
        for &d in &prod[1..55] {
            frac += d as f64 * scale;
            scale *= 0.1;
        }
        // distance of int_part + frac to the nearest even integer
        let r = (int_part % 2) as f64 + frac;
        let d = r.min(2.0 - r);
        (PI * d / 2.0).sin().powi(2)
    }

    #[test]
    fn phase_reduction_matches_independent_oracle() {
        for n in [0u64, 1, 4, 8, 17, 35, 80, 152, 2736, 9999] {
            let a = sin_sq_half_phi(n);
            let b = oracle_sin_sq_half_phi(n);
            assert!(
                (a - b).abs() <= 1e-12 * b.max(1e-30),
                "n={n}: {a:e} vs oracle {b:e}"
            );
        }
    }

    #[test]
    fn headline_infidelity_at_n8() {
        let inf = analytic_infidelity(8);
        assert!(inf < 1e-6);
        // frozen from a 60-digit evaluation of Eq-21 with φ_8 = 17√5·π
        assert_abs_diff_eq!(inf, 1.3674891464296917e-7, epsilon = 1e-17);
    }

    #[test]
    fn fidelity_bounded_for_all_n() {
        for n in 0..=10_000u64 {
            let f = analytic_fidelity(n);
            assert!((0.0..=1.0).contains(&f), "n={n}: F={f}");
        }
    }

    #[test]
    fn fidelity_is_one_at_zero_phase() {
        // formula limit: cos² = 1 -> F = (1/4)(3-1)² = 1
        let u: f64 = 0.0;
        assert_eq!(1.0 - u * u * (3.0 + u) / 4.0, 1.0);
    }

    #[test]
    fn resonance_values() {
        let (omega, tau) = resonance_params(0, 1.0).unwrap();
        assert_abs_diff_eq!(omega, (7.0 + 5.0f64.sqrt()) / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(tau, PI, epsilon = 1e-15);
        let (_, t5) = resonance_params(5, 2.0).unwrap();
        let (_, t6) = resonance_params(6, 2.0).unwrap();
        assert_abs_diff_eq!(t6 - t5, PI, epsilon = 1e-12); // 2π/J with J=2
        assert!(resonance_params(0, 0.0).is_err());
    }

    #[test]
    fn h4_closed_form_eigenvalues() {
        let sys = h4_eigensystem(0.0, 1.0).unwrap();
        let s5 = 5.0f64.sqrt();
        let expect = [-(s5 + 1.0) / 2.0, -(s5 - 1.0) / 2.0, (s5 - 1.0) / 2.0, (s5 + 1.0) / 2.0];
        for (a, b) in sys.energies.iter().zip(expect) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        assert!(h4_eigensystem(1.0, 0.0).is_err());
    }

    #[test]
    fn h4_vectors_are_eigenvectors() {
        // independent check: multiply by the tridiagonal matrix directly
        let sys = h4_eigensystem(1.3, -0.7).unwrap();
        let m = sys.matrix();
        for k in 0..4 {
            let v = nalgebra::DVector::from_row_slice(&sys.vectors[k]);
            let hv = &m * &v;
            let ev = sys.energies[k] * &v;
            assert!((hv - ev).amax() < 1e-12, "eigenpair {k}");
            assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn h4_matches_numeric_diagonalization() {
        let sys = h4_eigensystem(4.618, SQRT_2).unwrap();
        let h = crate::dynamics::SectorHamiltonian::from_matrix(sys.matrix());
        for k in 0..4 {
            assert_abs_diff_eq!(h.eigenvalues()[k], sys.energies[k], epsilon = 1e-12);
            // up to global sign
            let num: Vec<f64> = (0..4).map(|i| h.eigenvectors()[(i, k)]).collect();
            let dot: f64 = num.iter().zip(sys.vectors[k]).map(|(a, b)| a * b).sum();
            let sign = dot.signum();
            for (a, b) in num.iter().zip(sys.vectors[k]) {
                assert_abs_diff_eq!(sign * a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn amplitude_zero_at_start() {
        let sys = h4_eigensystem(2.0, 1.0).unwrap();
        assert!(transfer_amplitude(&sys, 0.0).norm() < 1e-15);
    }

    #[test]
    fn amplitude_modulus_at_resonance() {
        for n in [0u64, 1, 8, 35] {
            let j = SQRT_2;
            let (omega, tau) = resonance_params(n, j).unwrap();
            let sys = h4_eigensystem(omega, j).unwrap();
            let amp = transfer_amplitude(&sys, tau);
            let expect = (1.0 - sin_sq_half_phi(n)).sqrt(); // |cos(φ_n/2)|
            assert_abs_diff_eq!(amp.norm(), expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn basis_is_orthonormal() {
        let net = build_bt2_with_aux(1.0, 0.0).unwrap();
        let basis = symmetry_basis(&net).unwrap();
        let vs = basis.vectors();
        assert_eq!(vs.len(), 9);
        for (i, a) in vs.iter().enumerate() {
            for (j, b) in vs.iter().enumerate() {
                let g = overlap(a, b).unwrap();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((g - Complex64::new(expect, 0.0)).norm() < 1e-12, "gram[{i}][{j}]");
            }
        }
    }

    #[test]
    fn effective_chain_coupling() {
        let j0 = 0.9;
        let net = build_bt2_with_aux(j0, 0.0).unwrap();
        let h = sector_hamiltonian(&net);
        let basis = symmetry_basis(&net).unwrap();
        let rotated = rotate_into_basis(h.matrix(), &basis.vectors());
        assert_abs_diff_eq!(rotated[(2, 3)], SQRT_2 * j0, epsilon = 1e-12); // ⟨v2|H|v3⟩
        assert_abs_diff_eq!(rotated[(0, 1)], SQRT_2 * j0, epsilon = 1e-12); // ⟨v0_new|H|v1⟩
    }

    #[test]
    fn sender_singlet_decoupled() {
        let omega = 2.7;
        let net = build_bt2_with_aux(1.0, omega).unwrap();
        let h = sector_hamiltonian(&net);
        let basis = symmetry_basis(&net).unwrap();
        let vs = basis.vectors();
        let rotated = rotate_into_basis(h.matrix(), &vs);
        for j in 0..9 {
            let expect = if j == 8 { omega } else { 0.0 };
            assert_abs_diff_eq!(rotated[(8, j)], expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn symmetry_basis_rejects_other_topologies() {
        let net = crate::network::build_binary_tree(2, 1.0, 0.0).unwrap();
        assert!(symmetry_basis(&net).is_err());
    }

    #[test]
    fn best_resonance_scan() {
        let j = 1.0;
        let p0 = best_resonance(0, j).unwrap();
        assert_eq!(p0.n, 0);
        let p8 = best_resonance(8, j).unwrap();
        assert_eq!(p8.n, 8);
        assert!(p8.infidelity() < 1e-6);
        // min over a growing set is non-increasing
        let mut prev = f64::INFINITY;
        for max_n in [0u64, 3, 8, 50, 100, 200] {
            let p = best_resonance(max_n, j).unwrap();
            assert!(p.infidelity() <= prev);
            prev = p.infidelity();
        }
        // record points dictated by the odd convergents of √5
        assert_eq!(best_resonance(100, j).unwrap().n, 80);
        assert_eq!(best_resonance(200, j).unwrap().n, 152);
    }

    #[test]
    fn resonance_point_fields() {
        let p = ResonancePoint::at(3, 2.0).unwrap();
        assert_abs_diff_eq!(p.tau, 7.0 * PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.phi, 5.0f64.sqrt() * 7.0 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(p.fidelity, analytic_fidelity(3), epsilon = 0.0);
    }
}

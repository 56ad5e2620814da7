//! 4x4 unitary algebra for SWAP absorption.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const UNITARY_TOL: f64 = 1e-9;

/// A two-qubit gate matrix in the computational basis (00, 01, 10, 11).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct U4Matrix(pub [[Complex64; 4]; 4]);

impl U4Matrix {
    pub fn identity() -> Self {
        let mut m = [[Complex64::ZERO; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = Complex64::ONE;
        }
        U4Matrix(m)
    }

    pub fn swap() -> Self {
        let mut m = U4Matrix::identity();
        m.0.swap(1, 2);
        U4Matrix(m.0)
    }

    pub fn cnot() -> Self {
        let mut m = U4Matrix::identity();
        m.0.swap(2, 3);
        U4Matrix(m.0)
    }

    /// fSim gate in the convention of chemical-simulation programs: the
    /// controlled-phase corner carries the sign of the modified SWAP folded
    /// in, so it reads -e^{-i phi}.
    pub fn fsim(theta: f64, phi: f64) -> Self {
        let c = Complex64::new(theta.cos(), 0.0);
        let s = Complex64::new(0.0, -theta.sin());
        let corner = -Complex64::new(0.0, -phi).exp();
        let z = Complex64::ZERO;
        let one = Complex64::ONE;
        U4Matrix([
            [one, z, z, z],
            [z, c, s, z],
            [z, s, c, z],
            [z, z, z, corner],
        ])
    }

    pub fn mul(&self, other: &U4Matrix) -> U4Matrix {
        let mut out = [[Complex64::ZERO; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                for (k, other_row) in other.0.iter().enumerate() {
                    out[i][j] += self.0[i][k] * other_row[j];
                }
            }
        }
        U4Matrix(out)
    }

    pub fn dagger(&self) -> U4Matrix {
        let mut out = [[Complex64::ZERO; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                out[i][j] = self.0[j][i].conj();
            }
        }
        U4Matrix(out)
    }

    /// Max-norm deviation of U†U from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = self.dagger().mul(self);
        let mut worst: f64 = 0.0;
        for (i, row) in prod.0.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let expect = if i == j { Complex64::ONE } else { Complex64::ZERO };
                worst = worst.max((v - expect).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_defect() <= UNITARY_TOL
    }

    pub fn max_entry_distance(&self, other: &U4Matrix) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        worst
    }
}

/// Absorb a SWAP into a two-qubit gate: SWAP * W, which permutes the middle
/// two rows of W. Rejects non-unitary input.
pub fn absorb_swap_matrix(w: &U4Matrix) -> Result<U4Matrix> {
    let defect = w.unitarity_defect();
    if defect > UNITARY_TOL {
        return Err(Error::NotUnitary(defect));
    }
    Ok(U4Matrix::swap().mul(w))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn absorbing_swap_gives_identity() {
        let out = absorb_swap_matrix(&U4Matrix::swap()).unwrap();
        assert_eq!(out, U4Matrix::identity());
    }

    #[test]
    fn absorbed_fsim_matches_row_swap() {
        let theta = 0.37;
        let phi = 1.21;
        let out = absorb_swap_matrix(&U4Matrix::fsim(theta, phi)).unwrap();
        // Middle block [[-i sin, cos], [cos, -i sin]] and corner -e^{-i phi}.
        let c = Complex64::new(theta.cos(), 0.0);
        let s = Complex64::new(0.0, -theta.sin());
        assert!((out.0[1][1] - s).norm() < 1e-12);
        assert!((out.0[1][2] - c).norm() < 1e-12);
        assert!((out.0[2][1] - c).norm() < 1e-12);
        assert!((out.0[2][2] - s).norm() < 1e-12);
        let corner = -Complex64::new(0.0, -phi).exp();
        assert!((out.0[3][3] - corner).norm() < 1e-12);
        assert!(out.is_unitary());
    }

    #[test]
    fn absorbed_cnot_permutes_rows() {
        let out = absorb_swap_matrix(&U4Matrix::cnot()).unwrap();
        // Basis (00,01,10,11) maps to rows (00,11,01,10).
        let e = |i: usize, j: usize| out.0[i][j].re;
        assert_eq!(e(0, 0), 1.0);
        assert_eq!(e(1, 3), 1.0);
        assert_eq!(e(2, 1), 1.0);
        assert_eq!(e(3, 2), 1.0);
    }

    #[test]
    fn rejects_non_unitary() {
        let mut m = U4Matrix::identity();
        m.0[0][0] = Complex64::new(2.0, 0.0);
        assert!(matches!(absorb_swap_matrix(&m), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn absorb_is_involution() {
        let w = U4Matrix::fsim(0.9, 0.4);
        let twice = absorb_swap_matrix(&absorb_swap_matrix(&w).unwrap()).unwrap();
        assert!(twice.max_entry_distance(&w) <= 1e-12);
    }
}

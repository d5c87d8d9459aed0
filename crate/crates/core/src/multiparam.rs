//! Joint estimation of `(J, γ, D)`: QFI matrix, Uhlmann matrix and
//! sloppiness diagnostics.

use nalgebra::{Matrix3, Matrix4, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::chain::{ChainParams, ChainPoint, Param};
use crate::error::{Error, Result};
use crate::fisher::{sld, SUPPORT_TOL};
use crate::quadrature::QuadratureConfig;

/// Smallest/largest eigenvalue ratio below which inversion is refused.
pub const INVERSION_RATIO: f64 = 1e-10;
/// `det / max(H_μμ)³` below this counts as a vanishing determinant.
pub const RELATIVE_DET_ZERO: f64 = 1e-5;
/// Tolerated negative eigenvalue of a QFI matrix.
pub const PSD_TOL: f64 = 1e-9;

/// The three SLDs at a point, indexed by [`Param::index`].
pub fn slds_at(pt: &ChainPoint) -> Result<(Matrix4<f64>, [Matrix4<f64>; 3])> {
    let rho = pt.checked_state()?.matrix();
    let l = Param::ALL.map(|p| sld(&rho, &pt.tangent(p).matrix(), SUPPORT_TOL));
    Ok((rho, l))
}

fn pair_trace(rho: &Matrix4<f64>, a: &Matrix4<f64>, b: &Matrix4<f64>) -> f64 {
    (rho * a * b).trace()
}

/// `H_{μν}` over `(J, γ, D)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QfiMatrix {
    pub entries: [[f64; 3]; 3],
}

impl QfiMatrix {
    pub fn at(pt: &ChainPoint) -> Result<Self> {
        let (rho, l) = slds_at(pt)?;
        let mut entries = [[0.0; 3]; 3];
        for m in 0..3 {
            for n in m..3 {
                let h = 0.5 * (pair_trace(&rho, &l[m], &l[n]) + pair_trace(&rho, &l[n], &l[m]));
                entries[m][n] = h;
                entries[n][m] = h;
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, a: Param, b: Param) -> f64 {
        self.entries[a.index()][b.index()]
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.entries[i][j])
    }

    pub fn max_abs(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_diagonal(&self) -> f64 {
        (0..3).fold(0.0, |m, i| m.max(self.entries[i][i]))
    }

    pub fn sloppiness(&self) -> SloppinessReport {
        SloppinessReport::of(self)
    }

    /// `H⁻¹`, refused when the matrix is near singular.
    pub fn inverse(&self) -> Result<Matrix3<f64>> {
        let report = self.sloppiness();
        if !(report.condition >= INVERSION_RATIO) {
            return Err(Error::IllConditioned {
                ratio: report.condition,
            });
        }
        self.matrix().try_inverse().ok_or(Error::IllConditioned {
            ratio: report.condition,
        })
    }
}

/// `U_{μν} = ½ Tr[ρ (L_μ L_ν − L_ν L_μ)]`, antisymmetric with zero diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UhlmannMatrix {
    pub entries: [[f64; 3]; 3],
}

impl UhlmannMatrix {
    pub fn at(pt: &ChainPoint) -> Result<Self> {
        let (rho, l) = slds_at(pt)?;
        let mut entries = [[0.0; 3]; 3];
        for m in 0..3 {
            for n in (m + 1)..3 {
                let u = 0.5 * (pair_trace(&rho, &l[m], &l[n]) - pair_trace(&rho, &l[n], &l[m]));
                entries[m][n] = u;
                entries[n][m] = -u;
            }
        }
        Ok(Self { entries })
    }

    pub fn magnitude(&self, a: Param, b: Param) -> f64 {
        self.entries[a.index()][b.index()].abs()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Determinant and spectrum of a QFI matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SloppinessReport {
    /// Product of the eigenvalues.
    pub det: f64,
    /// Descending.
    pub eigenvalues: [f64; 3],
    /// Smallest over largest eigenvalue; NaN for the zero matrix.
    pub condition: f64,
    /// `det / max(H_μμ)³`.
    pub relative_det: f64,
    /// `relative_det` is below [`RELATIVE_DET_ZERO`].
    pub singular: bool,
}

impl SloppinessReport {
    pub fn of(h: &QfiMatrix) -> Self {
        let eig = SymmetricEigen::new(h.matrix());
        let mut ev = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
        ev.sort_by(|a, b| b.total_cmp(a));
        let det = ev[0] * ev[1] * ev[2];
        let condition = if ev[0] > 0.0 { ev[2] / ev[0] } else { f64::NAN };
        let scale = h.max_diagonal().powi(3);
        let relative_det = if scale > 0.0 { det / scale } else { f64::NAN };
        Self {
            det,
            eigenvalues: ev,
            condition,
            relative_det,
            singular: !(relative_det >= RELATIVE_DET_ZERO),
        }
    }
}

pub fn qfi_matrix(params: &ChainParams, quad: &QuadratureConfig) -> Result<QfiMatrix> {
    QfiMatrix::at(&ChainPoint::evaluate(params, quad)?)
}

pub fn uhlmann_matrix(params: &ChainParams, quad: &QuadratureConfig) -> Result<UhlmannMatrix> {
    UhlmannMatrix::at(&ChainPoint::evaluate(params, quad)?)
}

pub fn qfim_det(params: &ChainParams, quad: &QuadratureConfig) -> Result<SloppinessReport> {
    Ok(qfi_matrix(params, quad)?.sloppiness())
}

/// Everything the multiparameter layer computes at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiparamPoint {
    pub qfim: QfiMatrix,
    pub uhlmann: UhlmannMatrix,
    pub sloppiness: SloppinessReport,
}

impl MultiparamPoint {
    pub fn at(pt: &ChainPoint) -> Result<Self> {
        let qfim = QfiMatrix::at(pt)?;
        Ok(Self {
            qfim,
            uhlmann: UhlmannMatrix::at(pt)?,
            sloppiness: qfim.sloppiness(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fisher::qfi_at;

    fn point(j: f64, g: f64, d: f64) -> ChainPoint {
        ChainPoint::evaluate(
            &ChainParams::new(j, g, d).unwrap(),
            &QuadratureConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn diagonal_matches_block_formula() {
        for (j, g, d) in [
            (0.5, 0.7, 0.1),
            (0.999, 0.2, -0.3),
            (-1.5, 1.0, 0.2),
            (1.3, 0.5, 0.02),
        ] {
            let pt = point(j, g, d);
            let h = QfiMatrix::at(&pt).unwrap();
            for p in Param::ALL {
                let single = qfi_at(&pt, p).unwrap().total();
                let diag = h.get(p, p);
                assert!(
                    (diag - single).abs() <= 1e-6 * single.abs().max(1e-12),
                    "{p} at ({j},{g},{d}): {diag} vs {single}"
                );
            }
        }
    }

    #[test]
    fn symmetric_and_psd() {
        let h = QfiMatrix::at(&point(0.8, 1.0, 0.1)).unwrap();
        let m = h.matrix();
        assert!((m - m.transpose()).abs().max() <= 1e-10);
        assert!(h.sloppiness().eigenvalues[2] >= -PSD_TOL);
    }

    #[test]
    fn uhlmann_is_antisymmetric_with_zero_diagonal() {
        let u = UhlmannMatrix::at(&point(0.7, 0.5, 0.1)).unwrap();
        for i in 0..3 {
            assert_eq!(u.entries[i][i], 0.0);
            for j in 0..3 {
                assert_eq!(u.entries[i][j], -u.entries[j][i]);
            }
        }
    }

    #[test]
    fn det_is_eigen_product() {
        let r = qfim_det(
            &ChainParams::new(0.999, 0.2, -0.3).unwrap(),
            &QuadratureConfig::default(),
        )
        .unwrap();
        let prod: f64 = r.eigenvalues.iter().product();
        assert!((r.det - prod).abs() <= 1e-8 * prod.abs());
        assert!(r.eigenvalues[0] >= r.eigenvalues[1] && r.eigenvalues[1] >= r.eigenvalues[2]);
        assert!(r.det > 0.0);
    }

    #[test]
    fn refuses_to_invert_singular_matrix() {
        let h = QfiMatrix {
            entries: [[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        };
        assert!(matches!(h.inverse(), Err(Error::IllConditioned { .. })));
        let ok = QfiMatrix {
            entries: [[2.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 4.0]],
        };
        assert!((ok.inverse().unwrap()[(0, 0)] - 0.5).abs() < 1e-15);
    }
}

//! Classical Fisher information of the two-spin `σᶻ ⊗ σᶻ` measurement and
//! quantum Fisher information of the reduced X state.
//!
//! The X state splits into two commuting blocks. Writing each block as
//! `½(ω⁰ 1 + ω¹ σˣ + ω³ σᶻ)` on its own two-dimensional subspace, the QFI
//! of a block is
//!
//! ```text
//! H_block = [ (ω·∂ω)² / (ω·ω) - ∂ω·∂ω ] / ω⁰ + (∂ω⁰)² / ω⁰
//! ```
//!
//! with `·` the Minkowski contraction `diag(1, -1, -1, -1)`. The SLD route
//! ([`sld`], [`qfi_eigen`]) diagonalizes the full 4×4 state and is kept as an
//! independent check of the block formula.

use nalgebra::{Matrix4, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::chain::{ChainParams, ChainPoint, Correlators, Param, TwoSpinXState, XStateTangent};
use crate::error::{Error, Result};
use crate::quadrature::QuadratureConfig;

/// Outcome probabilities below this are treated as zero.
pub const ZERO_PROBABILITY: f64 = 1e-12;
/// A vanishing outcome whose derivative exceeds this makes the FI diverge.
pub const DIVERGENT_SLOPE: f64 = 1e-8;
/// Blocks with weight `ω⁰` below this are treated as absent.
pub const EMPTY_BLOCK: f64 = 1e-14;
/// Blocks with `(ω·ω)/(ω⁰)²` below this are treated as pure.
pub const PURE_BLOCK: f64 = 1e-14;
/// Eigenvalue pairs with `p_i + p_j` below this are outside the support.
pub const SUPPORT_TOL: f64 = 1e-12;
/// Below this the QFI counts as zero when forming the saturation.
pub const ZERO_QFI: f64 = 1e-12;
/// Offset used to approach a singular point when taking the saturation limit.
pub const LIMIT_STEP: f64 = 1e-4;
/// Agreement required between the two one-sided saturation limits.
pub const LIMIT_AGREEMENT: f64 = 1e-3;

fn minkowski(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3]
}

/// Bloch four-vectors of the two blocks of an X state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochBlocks {
    /// Outer block on span{|00⟩, |11⟩}.
    pub omega: [f64; 4],
    /// Inner block on span{|01⟩, |10⟩}.
    pub omega_tilde: [f64; 4],
}

impl BlochBlocks {
    pub fn from_state(s: &TwoSpinXState) -> Self {
        Self {
            omega: [
                s.a_plus + s.a_minus,
                2.0 * s.b_minus,
                0.0,
                s.a_plus - s.a_minus,
            ],
            omega_tilde: [2.0 * s.c, 2.0 * s.b_plus, 0.0, 0.0],
        }
    }

    pub fn from_correlators(c: &Correlators) -> Self {
        Self {
            omega: [0.5 * (1.0 + c.gzz), 0.5 * (c.gxx - c.gyy), 0.0, c.mz],
            omega_tilde: [0.5 * (1.0 - c.gzz), 0.5 * (c.gxx + c.gyy), 0.0, 0.0],
        }
    }

    pub fn from_tangent(t: &XStateTangent) -> Self {
        Self {
            omega: [
                t.a_plus + t.a_minus,
                2.0 * t.b_minus,
                0.0,
                t.a_plus - t.a_minus,
            ],
            omega_tilde: [2.0 * t.c, 2.0 * t.b_plus, 0.0, 0.0],
        }
    }

    /// Minkowski norms `(ω·ω, ω̃·ω̃)`; both non-negative for a valid state.
    pub fn norms(&self) -> (f64, f64) {
        (
            minkowski(&self.omega, &self.omega),
            minkowski(&self.omega_tilde, &self.omega_tilde),
        )
    }

    /// Rebuilds the 4×4 density matrix.
    pub fn reconstruct(&self) -> Matrix4<f64> {
        let w = &self.omega;
        let t = &self.omega_tilde;
        let mut m = Matrix4::zeros();
        m[(0, 0)] = 0.5 * (w[0] + w[3]);
        m[(3, 3)] = 0.5 * (w[0] - w[3]);
        m[(0, 3)] = 0.5 * w[1];
        m[(3, 0)] = 0.5 * w[1];
        m[(1, 1)] = 0.5 * (t[0] + t[3]);
        m[(2, 2)] = 0.5 * (t[0] - t[3]);
        m[(1, 2)] = 0.5 * t[1];
        m[(2, 1)] = 0.5 * t[1];
        m
    }
}

/// QFI contribution of one block and whether a limiting form was used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockQfi {
    pub value: f64,
    pub degenerate: bool,
}

/// QFI of a single block `½(ω⁰ 1 + ω·σ)` for the tangent `∂ω`.
///
/// An absent block contributes nothing. For a pure block the first fraction
/// is 0/0; it is dropped, which is the pure-state QFI of that block.
pub fn block_qfi(w: &[f64; 4], dw: &[f64; 4]) -> BlockQfi {
    let w0 = w[0];
    if w0 < EMPTY_BLOCK {
        return BlockQfi {
            value: 0.0,
            degenerate: true,
        };
    }
    let norm = minkowski(w, w);
    let population = dw[0] * dw[0] / w0;
    let metric = minkowski(dw, dw);
    if norm < PURE_BLOCK * w0 * w0 {
        return BlockQfi {
            value: -metric / w0 + population,
            degenerate: true,
        };
    }
    let proj = minkowski(w, dw);
    BlockQfi {
        value: (proj * proj / norm - metric) / w0 + population,
        degenerate: false,
    }
}

/// Block-decomposed QFI of the X state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XStateQfi {
    pub h1: BlockQfi,
    pub h2: BlockQfi,
}

impl XStateQfi {
    pub fn total(&self) -> f64 {
        self.h1.value + self.h2.value
    }

    pub fn degenerate(&self) -> bool {
        self.h1.degenerate || self.h2.degenerate
    }
}

pub fn xstate_qfi_from_blocks(blocks: &BlochBlocks, tangent: &BlochBlocks) -> XStateQfi {
    XStateQfi {
        h1: block_qfi(&blocks.omega, &tangent.omega),
        h2: block_qfi(&blocks.omega_tilde, &tangent.omega_tilde),
    }
}

fn positive_blocks(state: &TwoSpinXState) -> Result<BlochBlocks> {
    let blocks = BlochBlocks::from_state(state);
    let (n1, n2) = blocks.norms();
    if n1 < -1e-9 || n2 < -1e-9 {
        return Err(Error::PositivityViolation(format!(
            "negative Minkowski norm ({n1:e}, {n2:e})"
        )));
    }
    Ok(blocks)
}

/// QFI for one parameter via the block formula.
pub fn qfi_xstate(params: &ChainParams, wrt: Param, quad: &QuadratureConfig) -> Result<XStateQfi> {
    let pt = ChainPoint::evaluate(params, quad)?;
    qfi_at(&pt, wrt)
}

pub fn qfi_at(pt: &ChainPoint, wrt: Param) -> Result<XStateQfi> {
    let state = pt.checked_state()?;
    let blocks = positive_blocks(&state)?;
    Ok(xstate_qfi_from_blocks(
        &blocks,
        &BlochBlocks::from_tangent(&pt.tangent(wrt)),
    ))
}

/// Classical FI of outcome probabilities `p` with derivatives `dp`.
///
/// Returns the information and whether some outcome was dropped as a
/// vanishing probability with vanishing slope.
pub fn outcome_fi(p: &[f64], dp: &[f64]) -> Result<(f64, bool)> {
    let mut total = 0.0;
    let mut dropped = false;
    for (k, (&pk, &dk)) in p.iter().zip(dp).enumerate() {
        if pk < ZERO_PROBABILITY {
            if dk.abs() > DIVERGENT_SLOPE {
                return Err(Error::DivergentInformation {
                    outcome: k,
                    probability: pk,
                    derivative: dk,
                });
            }
            dropped = true;
            continue;
        }
        total += dk * dk / pk;
    }
    Ok((total, dropped))
}

/// FI of the two-spin magnetization at an evaluated point.
pub fn magnetization_fi_at(pt: &ChainPoint, wrt: Param) -> Result<(f64, bool)> {
    let s = pt.state();
    let t = pt.tangent(wrt);
    outcome_fi(&s.populations(), &t.populations())
}

/// FI of measuring `σᶻ ⊗ σᶻ` on the two neighbouring spins.
pub fn magnetization_fi(params: &ChainParams, wrt: Param, quad: &QuadratureConfig) -> Result<f64> {
    let pt = ChainPoint::evaluate(params, quad)?;
    Ok(magnetization_fi_at(&pt, wrt)?.0)
}

/// Symmetric logarithmic derivative of `rho` along `drho`, restricted to
/// the support `p_i + p_j > tol`.
pub fn sld(rho: &Matrix4<f64>, drho: &Matrix4<f64>, tol: f64) -> Matrix4<f64> {
    let eig = SymmetricEigen::new(*rho);
    let v = &eig.eigenvectors;
    let d = v.transpose() * drho * v;
    let mut l = Matrix4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            let s = eig.eigenvalues[i] + eig.eigenvalues[j];
            if s > tol {
                l[(i, j)] = 2.0 * d[(i, j)] / s;
            }
        }
    }
    v * l * v.transpose()
}

/// QFI `Σ 2 |⟨i|∂ρ|j⟩|² / (p_i + p_j)` over the support.
pub fn qfi_eigen(rho: &Matrix4<f64>, drho: &Matrix4<f64>, tol: f64) -> f64 {
    let eig = SymmetricEigen::new(*rho);
    let v = &eig.eigenvectors;
    let d = v.transpose() * drho * v;
    let mut h = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let s = eig.eigenvalues[i] + eig.eigenvalues[j];
            if s > tol {
                h += 2.0 * d[(i, j)] * d[(i, j)] / s;
            }
        }
    }
    h
}

/// FI, QFI and their ratio at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherPoint {
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "H1")]
    pub h1: f64,
    #[serde(rename = "H2")]
    pub h2: f64,
    /// `F/H`, or NaN when `H` vanishes.
    #[serde(rename = "S")]
    pub s: f64,
    /// A vanishing outcome or a rank-deficient block was handled by its
    /// limiting form.
    pub singular: bool,
}

impl FisherPoint {
    pub fn at(pt: &ChainPoint, wrt: Param) -> Result<Self> {
        let (f, dropped) = magnetization_fi_at(pt, wrt)?;
        let q = qfi_at(pt, wrt)?;
        let h = q.total();
        Ok(Self {
            f,
            h,
            h1: q.h1.value,
            h2: q.h2.value,
            s: if h > ZERO_QFI { f / h } else { f64::NAN },
            singular: dropped || q.degenerate(),
        })
    }
}

pub fn fisher_point(
    params: &ChainParams,
    wrt: Param,
    quad: &QuadratureConfig,
) -> Result<FisherPoint> {
    FisherPoint::at(&ChainPoint::evaluate(params, quad)?, wrt)
}

/// Saturation `F/H`, with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Saturation {
    pub value: f64,
    /// Taken as the limit from neighbouring points.
    pub from_limit: bool,
}

/// Saturation `S = F/H`.
///
/// Where `H` vanishes, or where the state changes rank so that `F` and `H`
/// take their limiting forms (the decoupled point `J = 0` is one), the
/// ratio is replaced by the mean of its values at `wrt ± 1e-4`.
pub fn saturation(params: &ChainParams, wrt: Param, quad: &QuadratureConfig) -> Result<Saturation> {
    let fp = fisher_point(params, wrt, quad)?;
    saturation_from(params, &fp, wrt, quad)
}

/// [`saturation`] reusing an already computed [`FisherPoint`] at `params`.
pub fn saturation_from(
    params: &ChainParams,
    fp: &FisherPoint,
    wrt: Param,
    quad: &QuadratureConfig,
) -> Result<Saturation> {
    if fp.h > ZERO_QFI && !fp.singular {
        return Ok(Saturation {
            value: fp.s,
            from_limit: false,
        });
    }
    let x = params.get(wrt);
    let mut sides = Vec::with_capacity(2);
    for dx in [-LIMIT_STEP, LIMIT_STEP] {
        let probe = params.with(wrt, x + dx);
        if probe.validate().is_err() {
            continue;
        }
        let side = fisher_point(&probe, wrt, quad)?;
        // Near-degenerate side points are fine as long as H is resolved.
        if side.h <= ZERO_QFI || !side.s.is_finite() {
            return Err(Error::UndefinedSaturation {
                lower: f64::NAN,
                upper: f64::NAN,
            });
        }
        sides.push(side.s);
    }
    match sides.as_slice() {
        [one] => Ok(Saturation {
            value: *one,
            from_limit: true,
        }),
        [lo, hi] if (lo - hi).abs() <= LIMIT_AGREEMENT => Ok(Saturation {
            value: 0.5 * (lo + hi),
            from_limit: true,
        }),
        [lo, hi] => Err(Error::UndefinedSaturation {
            lower: *lo,
            upper: *hi,
        }),
        _ => Err(Error::UndefinedSaturation {
            lower: f64::NAN,
            upper: f64::NAN,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::x_state;

    fn q() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn p(j: f64, g: f64, d: f64) -> ChainParams {
        ChainParams::new(j, g, d).unwrap()
    }

    #[test]
    fn pure_up_state_blocks() {
        let s = x_state(&p(0.0, 0.4, 0.2), &q()).unwrap();
        let b = BlochBlocks::from_state(&s);
        for (x, e) in b.omega.iter().zip([1.0, 0.0, 0.0, 1.0]) {
            assert!((x - e).abs() < 1e-12);
        }
        assert!(b.omega_tilde.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn blocks_from_state_and_correlators_agree() {
        let pt = ChainPoint::evaluate(&p(0.7, 0.5, 0.1), &q()).unwrap();
        let a = BlochBlocks::from_state(&pt.state());
        let b = BlochBlocks::from_correlators(&pt.correlators);
        for k in 0..4 {
            assert!((a.omega[k] - b.omega[k]).abs() < 1e-14);
            assert!((a.omega_tilde[k] - b.omega_tilde[k]).abs() < 1e-14);
        }
        assert!((a.omega[0] + a.omega_tilde[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn isotropic_weak_coupling_carries_no_information() {
        let fp = fisher_point(&p(0.3, 0.0, 0.0), Param::J, &q()).unwrap();
        assert!(fp.f.abs() < 1e-12);
        assert!(fp.h.abs() < 1e-12);
    }

    #[test]
    fn sld_of_zero_tangent_is_zero() {
        let s = x_state(&p(0.5, 0.7, 0.1), &q()).unwrap().matrix();
        let l = sld(&s, &Matrix4::zeros(), SUPPORT_TOL);
        assert!(l.norm() == 0.0);
        assert_eq!(qfi_eigen(&s, &Matrix4::zeros(), SUPPORT_TOL), 0.0);
    }

    #[test]
    fn sld_commuting_case() {
        let rho = Matrix4::from_diagonal(&nalgebra::Vector4::new(0.4, 0.3, 0.2, 0.1));
        let drho = Matrix4::from_diagonal(&nalgebra::Vector4::new(0.1, -0.05, 0.02, -0.07));
        let l = sld(&rho, &drho, SUPPORT_TOL);
        for i in 0..4 {
            assert!((l[(i, i)] - drho[(i, i)] / rho[(i, i)]).abs() < 1e-14);
        }
        assert!((l - Matrix4::from_diagonal(&l.diagonal())).norm() < 1e-14);
    }

    #[test]
    fn pure_state_without_tangent() {
        let rho = x_state(&p(0.0, 0.5, 0.0), &q()).unwrap().matrix();
        assert_eq!(qfi_eigen(&rho, &Matrix4::zeros(), SUPPORT_TOL), 0.0);
    }

    #[test]
    fn divergent_information_is_flagged() {
        let err = outcome_fi(&[1.0, 0.0], &[-1e-3, 1e-3]).unwrap_err();
        assert!(matches!(
            err,
            Error::DivergentInformation { outcome: 1, .. }
        ));
        let (f, dropped) = outcome_fi(&[1.0, 0.0], &[0.0, 1e-10]).unwrap();
        assert_eq!(f, 0.0);
        assert!(dropped);
    }

    #[test]
    fn block_formula_matches_normalized_qubit() {
        // r = 0.6 along x rotating: |∂r|² = 0.36, r·∂r = 0
        let w = [1.0, 0.6, 0.0, 0.0];
        let dw = [0.0, 0.0, 0.0, 0.6];
        let b = block_qfi(&w, &dw);
        assert!((b.value - 0.36).abs() < 1e-15);
        assert!(!b.degenerate);
        // radial change: (r·∂r)²/(1-r²) + |∂r|²
        let dw = [0.0, 1.0, 0.0, 0.0];
        assert!((block_qfi(&w, &dw).value - (0.36 / 0.64 + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn saturation_at_decoupled_point_uses_limit() {
        let s = saturation(&p(0.0, 0.5, 0.0), Param::J, &q()).unwrap();
        assert!(s.from_limit);
        assert!((s.value - 1.0).abs() < 1e-3, "{s:?}");
    }

    #[test]
    fn saturation_undefined_without_information() {
        // at J = 0 nothing depends on gamma
        let err = saturation(&p(0.0, 0.5, 0.0), Param::Gamma, &q()).unwrap_err();
        assert!(matches!(err, Error::UndefinedSaturation { .. }));
    }
}

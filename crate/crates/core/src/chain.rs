//! Ground-state magnetization and nearest-neighbour correlators of the
//! anisotropic XY chain with Dzyaloshinskii–Moriya coupling, in the
//! thermodynamic limit, and the two-spin X state they determine.
//!
//! Every quantity is a one-dimensional integral over the mode angle
//! `phi ∈ [0, π]` of an integrand built from
//!
//! ```text
//! N(phi) = J (cos phi - 2 D sin phi) - 1
//! u(phi) = J γ sin phi
//! Δ(phi) = sqrt(N² + u²)
//! ```
//!
//! with `⟨σᶻ⟩ = -(1/π) ∫ N/Δ` and
//! `G±1 = -(1/π) ∫ cos(phi) N/Δ ± (1/π) ∫ sin(phi) u/Δ`.
//! Derivatives with respect to `(J, γ, D)` are integrated directly: with
//! `W = (u ∂N - N ∂u)/Δ³` one has `∂(N/Δ) = u W` and `∂(u/Δ) = -N W`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureConfig};

/// Tolerance used when checking positivity of a constructed state.
pub const POSITIVITY_TOL: f64 = 1e-9;

/// One of the three Hamiltonian parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Param {
    J,
    Gamma,
    D,
}

impl Param {
    pub const ALL: [Param; 3] = [Param::J, Param::Gamma, Param::D];

    pub fn index(self) -> usize {
        match self {
            Param::J => 0,
            Param::Gamma => 1,
            Param::D => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Param::J => "J",
            Param::Gamma => "gamma",
            Param::D => "D",
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "J" | "j" => Ok(Param::J),
            "gamma" | "g" | "γ" => Ok(Param::Gamma),
            "D" | "d" => Ok(Param::D),
            other => Err(Error::InvalidInput(format!(
                "unknown parameter '{other}' (expected J, gamma or D)"
            ))),
        }
    }
}

/// Hamiltonian parameters in units of the external field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    #[serde(rename = "J")]
    pub j: f64,
    pub gamma: f64,
    #[serde(rename = "D")]
    pub d: f64,
}

impl ChainParams {
    pub fn new(j: f64, gamma: f64, d: f64) -> Result<Self> {
        let p = Self { j, gamma, d };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.j.is_finite() && self.gamma.is_finite() && self.d.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite parameters {self:?}"
            )));
        }
        if !(-1.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidInput(format!(
                "anisotropy gamma = {} outside [-1, 1]",
                self.gamma
            )));
        }
        Ok(())
    }

    pub fn get(&self, p: Param) -> f64 {
        match p {
            Param::J => self.j,
            Param::Gamma => self.gamma,
            Param::D => self.d,
        }
    }

    /// Copy with one parameter replaced. Not validated.
    pub fn with(&self, p: Param, value: f64) -> Self {
        let mut out = *self;
        match p {
            Param::J => out.j = value,
            Param::Gamma => out.gamma = value,
            Param::D => out.d = value,
        }
        out
    }

    /// The point `(-J, γ, -D)` reached by `phi -> π - phi`.
    pub fn mirrored(&self) -> Self {
        Self {
            j: -self.j,
            gamma: self.gamma,
            d: -self.d,
        }
    }

    /// `|J| = 1` exactly: the dispersion closes at `phi = 0` or `phi = π`
    /// and parameter derivatives diverge.
    pub fn is_critical(&self) -> bool {
        self.j.abs() == 1.0
    }
}

/// Selects `G+1` or `G-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// `⟨σᶻ⟩` and the nearest-neighbour correlators. Also used for their
/// parameter derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Correlators {
    pub mz: f64,
    pub gxx: f64,
    pub gyy: f64,
    pub gzz: f64,
}

/// The independent entries of the two-spin reduced density matrix
///
/// ```text
/// ⎛ a+  0   0   b- ⎞
/// ⎜ 0   c   b+  0  ⎟
/// ⎜ 0   b+  c   0  ⎟
/// ⎝ b-  0   0   a- ⎠
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoSpinXState {
    pub a_plus: f64,
    pub a_minus: f64,
    pub b_plus: f64,
    pub b_minus: f64,
    pub c: f64,
}

/// Parameter derivative of a [`TwoSpinXState`]; same layout, traceless.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct XStateTangent {
    pub a_plus: f64,
    pub a_minus: f64,
    pub b_plus: f64,
    pub b_minus: f64,
    pub c: f64,
}

fn x_matrix(a_plus: f64, a_minus: f64, b_plus: f64, b_minus: f64, c: f64) -> Matrix4<f64> {
    #[rustfmt::skip]
    let m = Matrix4::new(
        a_plus,  0.0,    0.0,    b_minus,
        0.0,     c,      b_plus, 0.0,
        0.0,     b_plus, c,      0.0,
        b_minus, 0.0,    0.0,    a_minus,
    );
    m
}

impl TwoSpinXState {
    /// Assembles the state without checking positivity.
    pub fn from_correlators(c: &Correlators) -> Self {
        Self {
            a_plus: 0.25 * (1.0 + 2.0 * c.mz + c.gzz),
            a_minus: 0.25 * (1.0 - 2.0 * c.mz + c.gzz),
            b_plus: 0.25 * (c.gxx + c.gyy),
            b_minus: 0.25 * (c.gxx - c.gyy),
            c: 0.25 * (1.0 - c.gzz),
        }
    }

    pub fn trace(&self) -> f64 {
        self.a_plus + self.a_minus + 2.0 * self.c
    }

    /// Checks `a±, c ≥ 0`, `b-² ≤ a+ a-` and `|b+| ≤ c` up to `tol`.
    pub fn check_positivity(&self, tol: f64) -> Result<()> {
        let Self {
            a_plus,
            a_minus,
            b_plus,
            b_minus,
            c,
        } = *self;
        if a_plus < -tol || a_minus < -tol || c < -tol {
            return Err(Error::PositivityViolation(format!(
                "negative population (a+ {a_plus:e}, a- {a_minus:e}, c {c:e})"
            )));
        }
        if b_minus * b_minus > a_plus.max(0.0) * a_minus.max(0.0) + tol {
            return Err(Error::PositivityViolation(format!(
                "b-^2 = {:e} exceeds a+ a- = {:e}",
                b_minus * b_minus,
                a_plus * a_minus
            )));
        }
        if b_plus.abs() > c + tol {
            return Err(Error::PositivityViolation(format!(
                "|b+| = {:e} exceeds c = {c:e}",
                b_plus.abs()
            )));
        }
        Ok(())
    }

    /// Outcome probabilities of `σᶻ ⊗ σᶻ` in the order ↑↑, ↑↓, ↓↑, ↓↓.
    pub fn populations(&self) -> [f64; 4] {
        [self.a_plus, self.c, self.c, self.a_minus]
    }

    pub fn matrix(&self) -> Matrix4<f64> {
        x_matrix(self.a_plus, self.a_minus, self.b_plus, self.b_minus, self.c)
    }
}

impl XStateTangent {
    pub fn from_correlators(dc: &Correlators) -> Self {
        Self {
            a_plus: 0.25 * (2.0 * dc.mz + dc.gzz),
            a_minus: 0.25 * (-2.0 * dc.mz + dc.gzz),
            b_plus: 0.25 * (dc.gxx + dc.gyy),
            b_minus: 0.25 * (dc.gxx - dc.gyy),
            c: -0.25 * dc.gzz,
        }
    }

    pub fn populations(&self) -> [f64; 4] {
        [self.a_plus, self.c, self.c, self.a_minus]
    }

    pub fn matrix(&self) -> Matrix4<f64> {
        x_matrix(self.a_plus, self.a_minus, self.b_plus, self.b_minus, self.c)
    }
}

/// `Δ(phi)` for `phi ∈ [0, π]`.
pub fn delta(params: &ChainParams, phi: f64) -> f64 {
    let (s, c) = phi.sin_cos();
    let n = params.j * (c - 2.0 * params.d * s) - 1.0;
    n.hypot(params.j * params.gamma * s)
}

#[inline]
fn mode(params: &ChainParams, phi: f64) -> Result<(f64, f64, f64, f64, f64)> {
    let (s, c) = phi.sin_cos();
    let n = params.j * (c - 2.0 * params.d * s) - 1.0;
    let u = params.j * params.gamma * s;
    let dl = n.hypot(u);
    if dl == 0.0 || !dl.is_finite() {
        return Err(Error::CriticalPoint { phi });
    }
    Ok((s, c, n, u, dl))
}

// [⟨σᶻ⟩, A, B] integrands, without the 1/π.
fn value_integrand(params: &ChainParams, phi: f64) -> Result<[f64; 3]> {
    let (s, c, n, u, dl) = mode(params, phi)?;
    let ratio = n / dl;
    Ok([-ratio, -c * ratio, s * u / dl])
}

// value integrands followed by their (J, γ, D) derivatives
fn full_integrand(params: &ChainParams, phi: f64) -> Result<[f64; 12]> {
    let (s, c, n, u, dl) = mode(params, phi)?;
    let ratio = n / dl;
    let inv3 = 1.0 / (dl * dl * dl);
    let &ChainParams { j, gamma, d } = params;

    // (∂N, ∂u) for each parameter
    let partials = [
        (c - 2.0 * d * s, gamma * s),
        (0.0, j * s),
        (-2.0 * j * s, 0.0),
    ];

    let mut out = [0.0; 12];
    out[0] = -ratio;
    out[1] = -c * ratio;
    out[2] = s * u / dl;
    for (k, &(dn, du)) in partials.iter().enumerate() {
        let w = (u * dn - n * du) * inv3;
        out[3 + 3 * k] = -u * w;
        out[4 + 3 * k] = -c * u * w;
        out[5 + 3 * k] = -s * n * w;
    }
    Ok(out)
}

fn assemble(mz: f64, a: f64, b: f64) -> Correlators {
    let g_plus = a + b;
    let g_minus = a - b;
    Correlators {
        mz,
        gxx: g_minus,
        gyy: g_plus,
        gzz: mz * mz - g_plus * g_minus,
    }
}

fn raw_values(params: &ChainParams, quad: &QuadratureConfig) -> Result<([f64; 3], f64)> {
    params.validate()?;
    let est = integrate(|phi| value_integrand(params, phi), 0.0, PI, quad)?;
    let v = est.value.map(|x| x / PI);
    Ok((v, est.max_abs_error() / PI))
}

/// `⟨σᶻ⟩` at zero temperature.
pub fn magnetization(params: &ChainParams, quad: &QuadratureConfig) -> Result<f64> {
    params.validate()?;
    let est = integrate(
        |phi| value_integrand(params, phi).map(|v| [v[0]]),
        0.0,
        PI,
        quad,
    )?;
    Ok(est.value[0] / PI)
}

/// `G+1` or `G-1`.
pub fn g_correlator(params: &ChainParams, sign: Sign, quad: &QuadratureConfig) -> Result<f64> {
    params.validate()?;
    let est = integrate(
        |phi| value_integrand(params, phi).map(|v| [v[1], v[2]]),
        0.0,
        PI,
        quad,
    )?;
    let [a, b] = est.value.map(|x| x / PI);
    Ok(match sign {
        Sign::Plus => a + b,
        Sign::Minus => a - b,
    })
}

/// `(⟨σᶻ⟩, ⟨σˣσˣ⟩ = G-1, ⟨σʸσʸ⟩ = G+1, ⟨σᶻσᶻ⟩ = ⟨σᶻ⟩² - G+1 G-1)`.
pub fn correlators(params: &ChainParams, quad: &QuadratureConfig) -> Result<Correlators> {
    let ([mz, a, b], _) = raw_values(params, quad)?;
    Ok(assemble(mz, a, b))
}

/// Correlators together with the largest quadrature error estimate.
pub fn correlators_with_error(
    params: &ChainParams,
    quad: &QuadratureConfig,
) -> Result<(Correlators, f64)> {
    let ([mz, a, b], err) = raw_values(params, quad)?;
    Ok((assemble(mz, a, b), err))
}

/// The reduced two-spin state, checked for positivity.
pub fn x_state(params: &ChainParams, quad: &QuadratureConfig) -> Result<TwoSpinXState> {
    let state = TwoSpinXState::from_correlators(&correlators(params, quad)?);
    state.check_positivity(POSITIVITY_TOL)?;
    Ok(state)
}

/// Correlators and their gradient with respect to `(J, γ, D)`, from a
/// single adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainPoint {
    pub params: ChainParams,
    pub correlators: Correlators,
    /// Indexed by [`Param::index`].
    pub gradient: [Correlators; 3],
    pub abs_error: f64,
}

impl ChainPoint {
    pub fn evaluate(params: &ChainParams, quad: &QuadratureConfig) -> Result<Self> {
        params.validate()?;
        if params.is_critical() {
            let phi = if params.j > 0.0 { 0.0 } else { PI };
            return Err(Error::CriticalPoint { phi });
        }
        let est = integrate(|phi| full_integrand(params, phi), 0.0, PI, quad)?;
        let v = est.value.map(|x| x / PI);
        let corr = assemble(v[0], v[1], v[2]);
        let g_plus = v[1] + v[2];
        let g_minus = v[1] - v[2];
        let mut gradient = [Correlators::default(); 3];
        for (k, g) in gradient.iter_mut().enumerate() {
            let (dm, da, db) = (v[3 + 3 * k], v[4 + 3 * k], v[5 + 3 * k]);
            let (dgp, dgm) = (da + db, da - db);
            *g = Correlators {
                mz: dm,
                gxx: dgm,
                gyy: dgp,
                gzz: 2.0 * corr.mz * dm - (dgp * g_minus + g_plus * dgm),
            };
        }
        Ok(Self {
            params: *params,
            correlators: corr,
            gradient,
            abs_error: est.max_abs_error() / PI,
        })
    }

    pub fn derivative(&self, wrt: Param) -> &Correlators {
        &self.gradient[wrt.index()]
    }

    /// Unchecked state; see [`ChainPoint::checked_state`].
    pub fn state(&self) -> TwoSpinXState {
        TwoSpinXState::from_correlators(&self.correlators)
    }

    pub fn checked_state(&self) -> Result<TwoSpinXState> {
        let s = self.state();
        s.check_positivity(POSITIVITY_TOL)?;
        Ok(s)
    }

    pub fn tangent(&self, wrt: Param) -> XStateTangent {
        XStateTangent::from_correlators(self.derivative(wrt))
    }
}

/// `∂(⟨σᶻ⟩, ⟨σˣσˣ⟩, ⟨σʸσʸ⟩, ⟨σᶻσᶻ⟩)/∂wrt`, by differentiation under the
/// integral sign.
pub fn d_correlators(
    params: &ChainParams,
    wrt: Param,
    quad: &QuadratureConfig,
) -> Result<Correlators> {
    Ok(*ChainPoint::evaluate(params, quad)?.derivative(wrt))
}

//! Parameter sweeps, curve-feature detection and figure data bundles.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::chain::{ChainParams, ChainPoint, Param};
use crate::error::{Error, Result};
use crate::fisher::{saturation_from, FisherPoint};
use crate::multiparam::MultiparamPoint;
use crate::quadrature::QuadratureConfig;

/// Distance from `|J| = 1` used when a sweep lands on a critical point.
pub const CRITICAL_OFFSET: f64 = 1e-3;
/// Margin excluded at both ends of `-1 < J < 0` by the feature detector.
pub const FEATURE_MARGIN: f64 = 1e-2;
pub const MIN_FEATURE_POINTS: usize = 200;
/// Width to which feature thresholds are bracketed.
pub const THRESHOLD_WIDTH: f64 = 1e-3;
/// `D_loss` profiles varying less than this are flat.
pub const FLAT_VARIATION: f64 = 1e-2;

/// Formats with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantity {
    F,
    H,
    S,
    #[serde(rename = "QFIM")]
    Qfim,
    U,
    #[serde(rename = "det")]
    Det,
}

impl FromStr for Quantity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "F" => Ok(Quantity::F),
            "H" => Ok(Quantity::H),
            "S" => Ok(Quantity::S),
            "QFIM" | "qfim" => Ok(Quantity::Qfim),
            "U" => Ok(Quantity::U),
            "det" | "Det" => Ok(Quantity::Det),
            _ => Err(Error::InvalidInput(format!("unknown quantity {s:?}"))),
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantity::F => "F",
            Quantity::H => "H",
            Quantity::S => "S",
            Quantity::Qfim => "QFIM",
            Quantity::U => "U",
            Quantity::Det => "det",
        })
    }
}

/// `points` evenly spaced values from `lo` to `hi` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl AxisRange {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        let r = Self { lo, hi, points };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.lo > self.hi {
            return Err(Error::InvalidInput(format!(
                "range {}:{} is not an interval",
                self.lo, self.hi
            )));
        }
        if self.points < 2 {
            return Err(Error::InvalidInput(
                "a range needs at least 2 points".into(),
            ));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let n = self.points - 1;
        (0..=n)
            .map(|i| {
                if i == n {
                    self.hi
                } else {
                    self.lo + (self.hi - self.lo) * i as f64 / n as f64
                }
            })
            .collect()
    }
}

impl FromStr for AxisRange {
    type Err = Error;
    /// `lo:hi:n`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("range {s:?} is not lo:hi:n"));
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, n] = parts.as_slice() else {
            return Err(bad());
        };
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        let n: usize = n.trim().parse().map_err(|_| bad())?;
        Self::new(lo, hi, n)
    }
}

/// Moves `|J| = 1` to `±(1 - 1e-3)`, with a warning.
pub fn nudge_critical(p: ChainParams) -> (ChainParams, Option<String>) {
    if p.is_critical() {
        let j = p.j.signum() * (1.0 - CRITICAL_OFFSET);
        (
            ChainParams { j, ..p },
            Some(format!("J = {} is critical; evaluated at J = {j}", p.j)),
        )
    } else {
        (p, None)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: Param,
    pub range: AxisRange,
    /// Values of the parameters not swept; the axis entry is ignored.
    pub fixed: ChainParams,
    pub quantities: Vec<Quantity>,
    pub wrt: Vec<Param>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.range.validate()?;
        self.fixed.validate()?;
        if self.quantities.is_empty() {
            return Err(Error::InvalidInput("no quantities requested".into()));
        }
        let single = self
            .quantities
            .iter()
            .any(|q| matches!(q, Quantity::F | Quantity::H | Quantity::S));
        if single && self.wrt.is_empty() {
            return Err(Error::InvalidInput(
                "F, H and S need at least one --wrt".into(),
            ));
        }
        for v in self.range.values() {
            self.fixed.with(self.axis, v).validate()?;
        }
        Ok(())
    }

    pub fn columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = ["J", "gamma", "D"].map(String::from).to_vec();
        let pairs = [(0, 1), (0, 2), (1, 2)];
        let name = |i: usize| Param::ALL[i].name();
        for q in &self.quantities {
            match q {
                Quantity::F | Quantity::H | Quantity::S => {
                    for w in &self.wrt {
                        cols.push(format!("{q}_{}", w.name()));
                    }
                }
                Quantity::Qfim => {
                    for a in 0..3 {
                        for b in a..3 {
                            cols.push(format!("H_{}{}", name(a), name(b)));
                        }
                    }
                }
                Quantity::U => {
                    for (a, b) in pairs {
                        cols.push(format!("U_{}{}", name(a), name(b)));
                    }
                }
                Quantity::Det => {
                    cols.extend(
                        ["det", "relative_det", "eig_1", "eig_2", "eig_3"].map(String::from),
                    );
                }
            }
        }
        cols
    }

    fn width(&self, q: Quantity) -> usize {
        match q {
            Quantity::F | Quantity::H | Quantity::S => self.wrt.len(),
            Quantity::Qfim => 6,
            Quantity::U => 3,
            Quantity::Det => 5,
        }
    }

    /// Points of the sweep after the criticality nudge.
    pub fn points(&self) -> (Vec<ChainParams>, Vec<String>) {
        let mut warnings = Vec::new();
        let pts = self
            .range
            .values()
            .into_iter()
            .map(|v| {
                let (p, w) = nudge_critical(self.fixed.with(self.axis, v));
                warnings.extend(w);
                p
            })
            .collect();
        (pts, warnings)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub values: Vec<f64>,
    /// Failures at this point, `; `-separated.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub columns: Vec<String>,
    pub rows: Vec<SweepRow>,
    pub warnings: Vec<String>,
}

impl SweepTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.values[i]).collect())
    }

    /// Appends the rows of `other`, which must have the same columns.
    pub fn append(&mut self, other: SweepTable) -> Result<()> {
        if other.columns != self.columns {
            return Err(Error::InvalidInput(
                "cannot join tables with different columns".into(),
            ));
        }
        self.rows.extend(other.rows);
        self.warnings.extend(other.warnings);
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = self.columns.clone();
        header.push("error".into());
        out.write_record(&header)?;
        for row in &self.rows {
            let mut rec: Vec<String> = row.values.iter().map(|&x| fmt17(x)).collect();
            rec.push(row.error.clone().unwrap_or_default());
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }
}

fn multiparam_values(m: &MultiparamPoint, q: Quantity) -> Vec<f64> {
    match q {
        Quantity::Qfim => {
            let h = &m.qfim.entries;
            vec![h[0][0], h[0][1], h[0][2], h[1][1], h[1][2], h[2][2]]
        }
        Quantity::U => {
            let u = &m.uhlmann.entries;
            vec![u[0][1].abs(), u[0][2].abs(), u[1][2].abs()]
        }
        _ => {
            let s = &m.sloppiness;
            vec![
                s.det,
                s.relative_det,
                s.eigenvalues[0],
                s.eigenvalues[1],
                s.eigenvalues[2],
            ]
        }
    }
}

fn evaluate_row(spec: &SweepSpec, p: &ChainParams, quad: &QuadratureConfig) -> SweepRow {
    let mut values = vec![p.j, p.gamma, p.d];
    let mut errors: Vec<String> = Vec::new();
    let pt = match ChainPoint::evaluate(p, quad) {
        Ok(pt) => Some(pt),
        Err(e) => {
            errors.push(e.to_string());
            None
        }
    };
    let mut multi: Option<Result<MultiparamPoint>> = None;
    for &q in &spec.quantities {
        let width = spec.width(q);
        let Some(pt) = pt.as_ref() else {
            values.extend(std::iter::repeat_n(f64::NAN, width));
            continue;
        };
        let got: std::result::Result<Vec<f64>, String> = match q {
            Quantity::F | Quantity::H | Quantity::S => spec
                .wrt
                .iter()
                .map(|&w| {
                    let fp = FisherPoint::at(pt, w)?;
                    Ok(match q {
                        Quantity::F => fp.f,
                        Quantity::H => fp.h,
                        _ => saturation_from(p, &fp, w, quad)?.value,
                    })
                })
                .collect::<Result<Vec<f64>>>()
                .map_err(|e| e.to_string()),
            Quantity::Qfim | Quantity::U | Quantity::Det => {
                match multi.get_or_insert_with(|| MultiparamPoint::at(pt)) {
                    Ok(m) => Ok(multiparam_values(m, q)),
                    Err(e) => Err(e.to_string()),
                }
            }
        };
        match got {
            Ok(v) => values.extend(v),
            Err(msg) => {
                values.extend(std::iter::repeat_n(f64::NAN, width));
                errors.push(format!("{q}: {msg}"));
            }
        }
    }
    SweepRow {
        values,
        error: if errors.is_empty() {
            None
        } else {
            Some(errors.join("; "))
        },
    }
}

/// Evaluates a sweep in parallel; rows are in axis order and per-point
/// failures become NaN with a message.
pub fn sweep(spec: &SweepSpec, quad: &QuadratureConfig) -> Result<SweepTable> {
    spec.validate()?;
    quad.validate()?;
    let (pts, warnings) = spec.points();
    let rows = pts
        .par_iter()
        .map(|p| evaluate_row(spec, p, quad))
        .collect();
    Ok(SweepTable {
        columns: spec.columns(),
        rows,
        warnings,
    })
}

// ---------------------------------------------------------------------------
// curve features

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveClass {
    Monotone,
    Bump,
    Peak,
}

impl fmt::Display for CurveClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CurveClass::Monotone => "monotone",
            CurveClass::Bump => "bump",
            CurveClass::Peak => "peak",
        })
    }
}

// Signs of `v`, dropping entries within `floor` of zero.
fn signs(v: &[f64], floor: f64) -> Vec<i8> {
    v.iter()
        .filter(|x| x.abs() > floor)
        .map(|&x| if x > 0.0 { 1 } else { -1 })
        .collect()
}

fn sign_changes(s: &[i8]) -> usize {
    s.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Classifies `H(J)` sampled on a uniform grid.
///
/// `peak`: an interior strict local maximum. `bump`: no such maximum, but
/// the second difference, smoothed by a 5-point moving average, changes
/// sign at least twice. `monotone` otherwise.
pub fn classify_curve(h: &[f64]) -> CurveClass {
    let scale = h.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let floor = 1e-12 * scale;
    let d1: Vec<f64> = h.windows(2).map(|w| w[1] - w[0]).collect();
    let s1 = signs(&d1, floor);
    if s1.windows(2).any(|w| w[0] > 0 && w[1] < 0) {
        return CurveClass::Peak;
    }
    let d2: Vec<f64> = h.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect();
    let smooth: Vec<f64> = d2.windows(5).map(|w| w.iter().sum::<f64>() / 5.0).collect();
    if sign_changes(&signs(&smooth, floor)) >= 2 {
        CurveClass::Bump
    } else {
        CurveClass::Monotone
    }
}

/// Checks the sampling requirements and classifies a `(J, H)` curve.
pub fn detect_features(js: &[f64], hs: &[f64]) -> Result<CurveClass> {
    if js.len() != hs.len() {
        return Err(Error::InvalidInput(
            "J and H columns differ in length".into(),
        ));
    }
    if js.len() < MIN_FEATURE_POINTS {
        return Err(Error::InvalidInput(format!(
            "feature detection needs at least {MIN_FEATURE_POINTS} points, got {}",
            js.len()
        )));
    }
    if !js.windows(2).all(|w| w[1] > w[0]) || js[0] <= -1.0 || js[js.len() - 1] >= 0.0 {
        return Err(Error::InvalidInput(
            "feature curves must be increasing in J inside (-1, 0)".into(),
        ));
    }
    if hs.iter().any(|h| !h.is_finite()) {
        return Err(Error::InvalidInput(
            "curve contains non-finite values".into(),
        ));
    }
    Ok(classify_curve(hs))
}

/// `H(J)` on `points` evenly spaced values of `[-1 + 1e-2, -1e-2]`.
pub fn feature_curve(
    gamma: f64,
    d: f64,
    points: usize,
    quad: &QuadratureConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let js = AxisRange::new(-1.0 + FEATURE_MARGIN, -FEATURE_MARGIN, points)?.values();
    let hs = js
        .par_iter()
        .map(|&j| {
            Ok(crate::fisher::fisher_point(&ChainParams::new(j, gamma, d)?, Param::J, quad)?.h)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((js, hs))
}

/// Classifies the `H(J)` curve at `(γ, D)`, checked against a grid with
/// twice the resolution.
pub fn classify(gamma: f64, d: f64, points: usize, quad: &QuadratureConfig) -> Result<CurveClass> {
    let (js, hs) = feature_curve(gamma, d, points, quad)?;
    let coarse = detect_features(&js, &hs)?;
    let (js, hs) = feature_curve(gamma, d, 2 * points - 1, quad)?;
    let fine = detect_features(&js, &hs)?;
    if coarse != fine {
        return Err(Error::InsufficientResolution {
            coarse: coarse.to_string(),
            fine: fine.to_string(),
        });
    }
    Ok(coarse)
}

/// A threshold in `D` known to lie in `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Bisects `[lo, hi]` for the boundary where `pred` turns true.
fn bisect_d<F>(mut lo: f64, mut hi: f64, mut pred: F) -> Result<Threshold>
where
    F: FnMut(f64) -> Result<bool>,
{
    while hi - lo > THRESHOLD_WIDTH {
        let mid = 0.5 * (lo + hi);
        if pred(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Threshold {
        value: 0.5 * (lo + hi),
        lo,
        hi,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveFeature {
    #[serde(rename = "D")]
    pub d: f64,
    pub class: CurveClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureReport {
    pub gamma: f64,
    pub points: usize,
    pub curves: Vec<CurveFeature>,
    /// First `D` at which the curve stops being monotone.
    pub d_bump: Option<Threshold>,
    /// First `D` at which an interior peak appears.
    pub d_peak: Option<Threshold>,
    pub d_loss: Option<DLoss>,
}

/// Classifies the curves at each `D` (sorted ascending) and brackets the
/// monotone→non-monotone and non-peak→peak boundaries.
pub fn feature_report(
    gamma: f64,
    d_values: &[f64],
    points: usize,
    quad: &QuadratureConfig,
) -> Result<FeatureReport> {
    let mut ds = d_values.to_vec();
    ds.sort_by(f64::total_cmp);
    ds.dedup();
    let curves = ds
        .iter()
        .map(|&d| {
            Ok(CurveFeature {
                d,
                class: classify(gamma, d, points, quad)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let boundary = |pred: &dyn Fn(CurveClass) -> bool| -> Result<Option<Threshold>> {
        let Some(k) = curves.iter().position(|c| pred(c.class)) else {
            return Ok(None);
        };
        if k == 0 {
            return Ok(None);
        }
        bisect_d(curves[k - 1].d, curves[k].d, |d| {
            Ok(pred(classify(gamma, d, points, quad)?))
        })
        .map(Some)
    };
    let d_bump = boundary(&|c| c != CurveClass::Monotone)?;
    let d_peak = boundary(&|c| c == CurveClass::Peak)?;
    Ok(FeatureReport {
        gamma,
        points,
        curves,
        d_bump,
        d_peak,
        d_loss: None,
    })
}

/// Operational `D_loss`: the `D` maximizing `∫_{1.2}^{2} H(J) dJ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DLoss {
    pub threshold: Threshold,
    /// The maximizer is an end of the `D` range.
    pub at_edge: bool,
    /// `(D, ∫H)` on the input grid.
    pub profile: Vec<(f64, f64)>,
    pub j_points: usize,
}

pub const D_LOSS_J: (f64, f64) = (1.2, 2.0);

/// Trapezoid `∫ H(J) dJ` over `[1.2, 2]`.
pub fn integrated_qfi(gamma: f64, d: f64, j_points: usize, quad: &QuadratureConfig) -> Result<f64> {
    let js = AxisRange::new(D_LOSS_J.0, D_LOSS_J.1, j_points)?.values();
    let hs = js
        .par_iter()
        .map(|&j| {
            Ok(crate::fisher::fisher_point(&ChainParams::new(j, gamma, d)?, Param::J, quad)?.h)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(js
        .windows(2)
        .zip(hs.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum())
}

pub fn detect_d_loss(
    gamma: f64,
    d_range: &AxisRange,
    j_points: usize,
    quad: &QuadratureConfig,
) -> Result<DLoss> {
    d_range.validate()?;
    let ds = d_range.values();
    let profile = ds
        .iter()
        .map(|&d| Ok((d, integrated_qfi(gamma, d, j_points, quad)?)))
        .collect::<Result<Vec<_>>>()?;
    let (best, &(_, top)) = profile
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("range has at least two points");
    let low = profile.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let variation = if top != 0.0 {
        (top - low) / top.abs()
    } else {
        0.0
    };
    if !(variation >= FLAT_VARIATION) {
        return Err(Error::FlatProfile { variation });
    }
    let last = ds.len() - 1;
    let at_edge = best == 0 || best == last;
    let threshold = if at_edge {
        let (lo, hi) = if best == 0 {
            (ds[0], ds[1])
        } else {
            (ds[last - 1], ds[last])
        };
        Threshold {
            value: ds[best],
            lo,
            hi,
        }
    } else {
        golden_max(ds[best - 1], ds[best + 1], |d| {
            integrated_qfi(gamma, d, j_points, quad)
        })?
    };
    Ok(DLoss {
        threshold,
        at_edge,
        profile,
        j_points,
    })
}

fn golden_max<F>(mut a: f64, mut b: f64, mut f: F) -> Result<Threshold>
where
    F: FnMut(f64) -> Result<f64>,
{
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > THRESHOLD_WIDTH {
        if fc >= fd {
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
    Ok(Threshold {
        value: 0.5 * (a + b),
        lo: a,
        hi: b,
    })
}

// ---------------------------------------------------------------------------
// figure bundles

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

impl Figure {
    pub const ALL: [Figure; 6] = [
        Figure::Fig1,
        Figure::Fig2,
        Figure::Fig3,
        Figure::Fig4,
        Figure::Fig5,
        Figure::Fig6,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Figure::Fig1 => "F, H and S for J over [-2, 2], D = 0, four anisotropies",
            Figure::Fig2 => "F, H and S for J over [-2, 2], gamma = 0.7, five DM couplings",
            Figure::Fig3 => "F, H and S for J over [-2, 2], gamma = 0.2, five DM couplings",
            Figure::Fig4 => "QFI matrix and Uhlmann magnitudes against D at J = 0.999",
            Figure::Fig5 => "QFI matrix determinant and spectrum against D at J = 0.999",
            Figure::Fig6 => "QFI matrix, Uhlmann magnitudes and determinant against J at gamma = 1",
        }
    }

    pub fn sweeps(self) -> Vec<SweepSpec> {
        const FIG1_GAMMA: [f64; 4] = [0.2, 0.5, 0.7, 1.0];
        const DM: [f64; 5] = [0.0, 0.02, 0.1, 0.2, 0.3];
        const FIXED_J_GAMMA: [f64; 3] = [0.2, 0.5, 1.0];
        const FIG6_D: [f64; 4] = [0.01, 0.1, 0.2, 0.3];
        let j_axis = AxisRange {
            lo: -2.0,
            hi: 2.0,
            points: 401,
        };
        let d_axis = AxisRange {
            lo: -0.4,
            hi: 0.4,
            points: 81,
        };
        let fhs = vec![Quantity::F, Quantity::H, Quantity::S];
        let along_j = |gamma: f64, d: f64, quantities: &Vec<Quantity>| SweepSpec {
            axis: Param::J,
            range: j_axis,
            fixed: ChainParams { j: 0.0, gamma, d },
            quantities: quantities.clone(),
            wrt: vec![Param::J],
        };
        let along_d = |gamma: f64, quantities: Vec<Quantity>| SweepSpec {
            axis: Param::D,
            range: d_axis,
            fixed: ChainParams {
                j: 0.999,
                gamma,
                d: 0.0,
            },
            quantities,
            wrt: Vec::new(),
        };
        match self {
            Figure::Fig1 => FIG1_GAMMA.iter().map(|&g| along_j(g, 0.0, &fhs)).collect(),
            Figure::Fig2 => DM.iter().map(|&d| along_j(0.7, d, &fhs)).collect(),
            Figure::Fig3 => DM.iter().map(|&d| along_j(0.2, d, &fhs)).collect(),
            Figure::Fig4 => FIXED_J_GAMMA
                .iter()
                .map(|&g| along_d(g, vec![Quantity::Qfim, Quantity::U]))
                .collect(),
            Figure::Fig5 => FIXED_J_GAMMA
                .iter()
                .map(|&g| along_d(g, vec![Quantity::Det]))
                .collect(),
            Figure::Fig6 => {
                let q = vec![Quantity::Qfim, Quantity::U, Quantity::Det];
                FIG6_D.iter().map(|&d| along_j(1.0, d, &q)).collect()
            }
        }
    }
}

impl FromStr for Figure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown figure {s:?} (fig1..fig6)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub figure: String,
    pub description: String,
    pub library: String,
    pub version: String,
    pub quadrature: QuadratureConfig,
    pub sweeps: Vec<SweepSpec>,
    pub data: String,
    pub columns: Vec<String>,
    pub rows: usize,
    pub failed_rows: usize,
    pub warnings: Vec<String>,
}

/// Evaluates every sweep behind a figure into one table.
pub fn figure_table(fig: Figure, quad: &QuadratureConfig) -> Result<SweepTable> {
    let mut sweeps = fig.sweeps().into_iter();
    let first = sweeps.next().expect("figures have at least one sweep");
    let mut table = sweep(&first, quad)?;
    for s in sweeps {
        table.append(sweep(&s, quad)?)?;
    }
    Ok(table)
}

/// Writes `<name>.csv` and `<name>.json` into `dir`.
pub fn figure_bundle(
    fig: Figure,
    dir: &Path,
    quad: &QuadratureConfig,
) -> Result<(PathBuf, PathBuf)> {
    let table = figure_table(fig, quad)?;
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{}.csv", fig.name()));
    let json_path = dir.join(format!("{}.json", fig.name()));
    table.write_csv(fs::File::create(&csv_path)?)?;
    let manifest = Manifest {
        figure: fig.name().into(),
        description: fig.description().into(),
        library: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        quadrature: *quad,
        sweeps: fig.sweeps(),
        data: format!("{}.csv", fig.name()),
        columns: table.columns.clone(),
        rows: table.rows.len(),
        failed_rows: table.rows.iter().filter(|r| r.error.is_some()).count(),
        warnings: table.warnings.clone(),
    };
    let mut f = fs::File::create(&json_path)?;
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    f.write_all(b"\n")?;
    Ok((csv_path, json_path))
}

//! Adaptive Gauss–Kronrod (G10/K21) integration of vector-valued integrands.
//!
//! All components share one subdivision tree. An interval is bisected while
//! any component misses its own tolerance `max(abs_tol, rel_tol * |I_k|)`;
//! the interval chosen for bisection is the one with the worst normalized
//! error over all components.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances and subdivision budget for the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_subdivisions: 1 << 12,
        }
    }
}

impl QuadratureConfig {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        let cfg = Self {
            abs_tol,
            rel_tol,
            max_subdivisions,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Tolerance `1e-13`, close to the roundoff floor of the error estimate.
    ///
    /// Needed where `H` is ill-conditioned, as near the factorizing field
    /// where one block is almost pure. Within about `1e-4` of `|J| = 1` the
    /// error estimate can stall above this tolerance.
    pub fn precise() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-13,
            max_subdivisions: 1 << 12,
        }
    }

    /// Same tolerance for the absolute and relative criteria.
    pub fn with_tol(tol: f64) -> Result<Self> {
        Self::new(tol, tol, Self::default().max_subdivisions)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |t: f64| t.is_finite() && t > 0.0;
        if !ok(self.abs_tol) || !ok(self.rel_tol) {
            return Err(Error::InvalidInput(format!(
                "quadrature tolerances must be positive (abs {}, rel {})",
                self.abs_tol, self.rel_tol
            )));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidInput(
                "max_subdivisions must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Halves both tolerances.
    pub fn tightened(&self) -> Self {
        Self {
            abs_tol: self.abs_tol * 0.5,
            rel_tol: self.rel_tol * 0.5,
            max_subdivisions: self.max_subdivisions,
        }
    }
}

/// Integral estimate with a per-component absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<const N: usize> {
    pub value: [f64; N],
    pub abs_error: [f64; N],
    pub subdivisions: usize,
}

impl<const N: usize> Estimate<N> {
    pub fn max_abs_error(&self) -> f64 {
        self.abs_error.iter().copied().fold(0.0, f64::max)
    }
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

struct Segment<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    error: [f64; N],
    // worst component error relative to its tolerance at creation time
    priority: f64,
}

impl<const N: usize> PartialEq for Segment<N> {
    fn eq(&self, other: &Self) -> bool {
        self.priority == other.priority
    }
}
impl<const N: usize> Eq for Segment<N> {}
impl<const N: usize> PartialOrd for Segment<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const N: usize> Ord for Segment<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority.total_cmp(&other.priority)
    }
}

// QUADPACK error rescaling for a single component.
fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 {
            res_asc * scale
        } else {
            res_asc
        };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

fn kronrod21<const N: usize, F>(f: &mut F, a: f64, b: f64) -> Result<([f64; N], [f64; N])>
where
    F: FnMut(f64) -> Result<[f64; N]>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let mut fv = [[0.0; N]; 21];
    fv[0] = f(center)?;
    for (j, &x) in XGK.iter().take(10).enumerate() {
        let dx = half * x;
        fv[1 + 2 * j] = f(center - dx)?;
        fv[2 + 2 * j] = f(center + dx)?;
    }

    let mut value = [0.0; N];
    let mut error = [0.0; N];
    for k in 0..N {
        let fc = fv[0][k];
        let mut kron = WGK[10] * fc;
        let mut gauss = 0.0;
        let mut res_abs = WGK[10] * fc.abs();
        for j in 0..10 {
            let (lo, hi) = (fv[1 + 2 * j][k], fv[2 + 2 * j][k]);
            kron += WGK[j] * (lo + hi);
            res_abs += WGK[j] * (lo.abs() + hi.abs());
            // odd Kronrod indices coincide with the 10-point Gauss nodes
            if j % 2 == 1 {
                gauss += WG[j / 2] * (lo + hi);
            }
        }
        let mean = 0.5 * kron;
        let mut res_asc = WGK[10] * (fc - mean).abs();
        for j in 0..10 {
            res_asc += WGK[j] * ((fv[1 + 2 * j][k] - mean).abs() + (fv[2 + 2 * j][k] - mean).abs());
        }
        let scale = half.abs();
        value[k] = kron * half;
        error[k] = rescale_error((kron - gauss) * half, res_abs * scale, res_asc * scale);
    }
    Ok((value, error))
}

fn tolerance(cfg: &QuadratureConfig, total: f64) -> f64 {
    cfg.abs_tol.max(cfg.rel_tol * total.abs())
}

/// Integrates the vector-valued `f` over `[a, b]`.
///
/// `f` may fail (for example on a non-finite integrand); the error is
/// propagated unchanged.
pub fn integrate<const N: usize, F>(
    mut f: F,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<Estimate<N>>
where
    F: FnMut(f64) -> Result<[f64; N]>,
{
    cfg.validate()?;
    let (value, error) = kronrod21(&mut f, a, b)?;
    let mut total = value;
    let mut total_err = error;

    let priority = |e: &[f64; N], t: &[f64; N]| {
        (0..N)
            .map(|k| e[k] / tolerance(cfg, t[k]))
            .fold(0.0, f64::max)
    };

    let mut heap = BinaryHeap::new();
    heap.push(Segment {
        a,
        b,
        value,
        error,
        priority: priority(&error, &total),
    });

    let converged =
        |tot: &[f64; N], err: &[f64; N]| (0..N).all(|k| err[k] <= tolerance(cfg, tot[k]));

    let mut subdivisions = 1;
    while !converged(&total, &total_err) {
        if subdivisions >= cfg.max_subdivisions {
            return Err(Error::QuadratureFailure {
                subdivisions,
                abs_error: total_err.iter().copied().fold(0.0, f64::max),
            });
        }
        let seg = heap.pop().expect("heap never empties while unconverged");
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // interval no longer representable: the integrand is singular here
            return Err(Error::QuadratureFailure {
                subdivisions,
                abs_error: total_err.iter().copied().fold(0.0, f64::max),
            });
        }
        let (lv, le) = kronrod21(&mut f, seg.a, mid)?;
        let (rv, re) = kronrod21(&mut f, mid, seg.b)?;
        for k in 0..N {
            total[k] += lv[k] + rv[k] - seg.value[k];
            total_err[k] += le[k] + re[k] - seg.error[k];
        }
        heap.push(Segment {
            a: seg.a,
            b: mid,
            value: lv,
            error: le,
            priority: priority(&le, &total),
        });
        heap.push(Segment {
            a: mid,
            b: seg.b,
            value: rv,
            error: re,
            priority: priority(&re, &total),
        });
        subdivisions += 1;
    }

    // re-sum to shed the drift of the running updates
    let mut value = [0.0; N];
    let mut abs_error = [0.0; N];
    for seg in heap.iter() {
        for k in 0..N {
            value[k] += seg.value[k];
            abs_error[k] += seg.error[k];
        }
    }
    Ok(Estimate {
        value,
        abs_error,
        subdivisions,
    })
}

/// Scalar convenience wrapper around [`integrate`].
pub fn integrate_scalar<F>(mut f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    let est = integrate(|x| Ok([f(x)]), a, b, cfg)?;
    Ok((est.value[0], est.abs_error[0]))
}

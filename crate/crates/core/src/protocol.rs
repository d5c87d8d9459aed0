//! Simulated adaptive estimation of the coupling `J`.
//!
//! The chain only sees `j = J/B`. Each round fixes a field `B`, draws `M`
//! two-spin `σᶻ ⊗ σᶻ` outcomes at `j = J_true/B`, estimates `ĵ` by maximum
//! likelihood and reports `Ĵ = ĵ·B`. The next round sets `|B|` to the last
//! estimate. `γ` and `D` are known.
//!
//! Per-round variance is the plug-in bound `B² / (M F(ĵ))`, where `F` is the
//! per-shot information about `j`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::chain::{x_state, ChainParams, ChainPoint, Param};
use crate::error::{Error, Result};
use crate::fisher::magnetization_fi_at;
use crate::quadrature::QuadratureConfig;

/// Golden-section search stops at this bracket width (relative to `1 + |j|`).
const GOLDEN_TOL: f64 = 1e-9;
/// Offset applied when `ĵ` lands exactly on a critical value `|j| = 1`.
const CRITICAL_NUDGE: f64 = 1e-9;
/// Step of the central difference used for `∂ ln F / ∂j`.
const SLOPE_STEP: f64 = 1e-4;
/// Log-likelihood drop defining the interval reported for a degenerate
/// likelihood.
const FLAT_DROP: f64 = 0.5;
/// Fields smaller than this in magnitude cannot be set.
const MIN_FIELD: f64 = 1e-12;

/// Outcome probabilities `(↑↑, ↑↓, ↓↑, ↓↓)` at effective parameters.
pub fn outcome_probabilities(effective: &ChainParams, quad: &QuadratureConfig) -> Result<[f64; 4]> {
    Ok(x_state(effective, quad)?.populations())
}

fn clamp_probs(p: &[f64; 4]) -> [f64; 4] {
    let q = p.map(|x| x.max(0.0));
    let s: f64 = q.iter().sum();
    q.map(|x| x / s)
}

/// One multinomial draw, as a chain of conditional binomials.
pub fn sample_with<R: rand::Rng + ?Sized>(probs: &[f64; 4], shots: u64, rng: &mut R) -> [u64; 4] {
    let p = clamp_probs(probs);
    let mut counts = [0u64; 4];
    let mut left = shots;
    let mut mass = 1.0;
    for k in 0..3 {
        if left == 0 {
            break;
        }
        let q = if mass > 0.0 {
            (p[k] / mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let n = Binomial::new(left, q).map(|b| b.sample(rng)).unwrap_or(0);
        counts[k] = n;
        left -= n;
        mass -= p[k];
    }
    counts[3] = left;
    counts
}

/// Multinomial `(M, probs)` draw reproducible under `seed`.
pub fn sample_outcomes(probs: &[f64; 4], shots: u64, seed: u64) -> [u64; 4] {
    sample_with(probs, shots, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Uniform grid of effective couplings searched by the estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for EstimatorGrid {
    fn default() -> Self {
        Self {
            lo: 0.0,
            hi: 3.0,
            points: 301,
        }
    }
}

impl EstimatorGrid {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        let g = Self { lo, hi, points };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::InvalidInput(format!(
                "estimator grid [{}, {}] is not a finite interval",
                self.lo, self.hi
            )));
        }
        if self.points < 3 {
            return Err(Error::InvalidInput(
                "estimator grid needs at least 3 points".into(),
            ));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let step = (self.hi - self.lo) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| self.lo + step * i as f64)
            .collect()
    }

    /// The grid of `sign·j`.
    pub fn signed(&self, orientation: Orientation) -> Self {
        match orientation {
            Orientation::Aligned => *self,
            Orientation::Opposed => Self {
                lo: -self.hi,
                hi: -self.lo,
                points: self.points,
            },
        }
    }
}

fn log_likelihood(counts: &[u64; 4], p: &[f64; 4]) -> f64 {
    let mut ll = 0.0;
    for (&n, &pk) in counts.iter().zip(p) {
        if n == 0 {
            continue;
        }
        if pk <= 0.0 {
            return f64::NEG_INFINITY;
        }
        ll += n as f64 * pk.ln();
    }
    ll
}

/// Outcome model over the estimator grid for fixed `(γ, D)`.
///
/// Building it costs one quadrature per grid point; it is shared across
/// rounds and seeds.
#[derive(Debug, Clone)]
pub struct LikelihoodModel {
    pub gamma: f64,
    pub d: f64,
    pub grid: EstimatorGrid,
    js: Vec<f64>,
    probs: Vec<[f64; 4]>,
    quad: QuadratureConfig,
}

impl LikelihoodModel {
    pub fn new(gamma: f64, d: f64, grid: EstimatorGrid, quad: &QuadratureConfig) -> Result<Self> {
        grid.validate()?;
        quad.validate()?;
        ChainParams::new(0.0, gamma, d)?;
        let js = grid.values();
        let probs = js
            .par_iter()
            .map(|&j| outcome_probabilities(&ChainParams { j, gamma, d }, quad))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            gamma,
            d,
            grid,
            js,
            probs,
            quad: *quad,
        })
    }

    pub fn params(&self, j: f64) -> ChainParams {
        ChainParams {
            j,
            gamma: self.gamma,
            d: self.d,
        }
    }

    pub fn probabilities(&self, j: f64) -> Result<[f64; 4]> {
        outcome_probabilities(&self.params(j), &self.quad)
    }

    /// Per-shot FI about `j`; `|j| = 1` is approached from inside.
    pub fn fisher(&self, j: f64) -> Result<f64> {
        let j = if j.abs() == 1.0 {
            j * (1.0 - CRITICAL_NUDGE)
        } else {
            j
        };
        let pt = ChainPoint::evaluate(&self.params(j), &self.quad)?;
        Ok(magnetization_fi_at(&pt, Param::J)?.0)
    }

    /// Maximum-likelihood `ĵ` for the given counts.
    pub fn estimate(&self, counts: &[u64; 4]) -> Result<JEstimate> {
        let shots: u64 = counts.iter().sum();
        if shots == 0 {
            return Err(Error::InvalidInput("no outcomes to estimate from".into()));
        }
        let ll: Vec<f64> = self
            .probs
            .iter()
            .map(|p| log_likelihood(counts, p))
            .collect();
        let (best, &ll_max) = ll
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("grid is non-empty");
        let last = self.js.len() - 1;
        let at_edge = best == 0 || best == last;
        let degenerate = counts.iter().filter(|&&n| n > 0).count() == 1;

        if degenerate {
            let mut lo = best;
            while lo > 0 && ll[lo - 1] >= ll_max - FLAT_DROP {
                lo -= 1;
            }
            let mut hi = best;
            while hi < last && ll[hi + 1] >= ll_max - FLAT_DROP {
                hi += 1;
            }
            return Ok(JEstimate {
                j: 0.5 * (self.js[lo] + self.js[hi]),
                fisher: 0.0,
                log_slope: 0.0,
                at_edge,
                degenerate: true,
            });
        }

        let j = if at_edge {
            self.js[best]
        } else {
            self.refine(counts, self.js[best - 1], self.js[best + 1])?
        };
        let fisher = self.fisher(j)?;
        Ok(JEstimate {
            j,
            fisher,
            log_slope: self.log_fisher_slope(j, fisher),
            at_edge,
            degenerate: false,
        })
    }

    fn refine(&self, counts: &[u64; 4], mut a: f64, mut b: f64) -> Result<f64> {
        let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
        let f = |j: f64| -> Result<f64> { Ok(-log_likelihood(counts, &self.probabilities(j)?)) };
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let mut fc = f(c)?;
        let mut fd = f(d)?;
        while (b - a) > GOLDEN_TOL * (1.0 + a.abs().max(b.abs())) {
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = f(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = f(d)?;
            }
        }
        Ok(0.5 * (a + b))
    }

    // |∂ ln F/∂j| by central difference; 0 when a neighbour is unavailable.
    fn log_fisher_slope(&self, j: f64, fisher: f64) -> f64 {
        if !(fisher > 0.0) {
            return 0.0;
        }
        let h = SLOPE_STEP * (1.0 + j.abs());
        match (self.fisher(j - h), self.fisher(j + h)) {
            (Ok(lo), Ok(hi)) if lo > 0.0 && hi > 0.0 => ((hi.ln() - lo.ln()) / (2.0 * h)).abs(),
            _ => 0.0,
        }
    }
}

/// Maximum-likelihood estimate of the effective coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JEstimate {
    pub j: f64,
    /// Per-shot FI about `j` at the estimate.
    pub fisher: f64,
    /// `|∂ ln F / ∂j|` at the estimate.
    pub log_slope: f64,
    pub at_edge: bool,
    /// All outcomes fell in one cell; `j` is the midpoint of the
    /// near-flat likelihood interval.
    pub degenerate: bool,
}

/// Estimate of `J` from one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleEstimate {
    pub j_hat: f64,
    #[serde(rename = "J")]
    pub estimate: f64,
    /// `B² / (M F(ĵ))`; infinite when the round carries no information.
    pub variance: f64,
    /// Standard deviation of `ln variance` propagated from `ĵ`.
    pub log_variance_sd: f64,
    pub at_edge: bool,
    pub degenerate: bool,
}

impl MleEstimate {
    fn from_j(est: &JEstimate, field: f64, shots: u64) -> Self {
        let m = shots as f64;
        let informative = !est.degenerate && est.fisher > 0.0;
        let variance = if informative {
            field * field / (m * est.fisher)
        } else {
            f64::INFINITY
        };
        let log_variance_sd = if informative {
            est.log_slope / (m * est.fisher).sqrt()
        } else {
            f64::INFINITY
        };
        Self {
            j_hat: est.j,
            estimate: est.j * field,
            variance,
            log_variance_sd,
            at_edge: est.at_edge,
            degenerate: est.degenerate,
        }
    }
}

/// MLE of `J` from counts taken at field `B`.
pub fn mle_estimate(counts: &[u64; 4], field: f64, model: &LikelihoodModel) -> Result<MleEstimate> {
    check_field(field)?;
    let est = model.estimate(counts)?;
    Ok(MleEstimate::from_j(&est, field, counts.iter().sum()))
}

fn check_field(field: f64) -> Result<()> {
    if !field.is_finite() || field.abs() < MIN_FIELD {
        return Err(Error::InvalidInput(format!(
            "field B = {field} cannot be set"
        )));
    }
    Ok(())
}

/// Relative sign of the field and the current estimate of `J`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// `B = J_av`, so `j > 0`.
    #[default]
    Aligned,
    /// `B = -J_av`, so `j < 0`.
    Opposed,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Aligned => 1.0,
            Orientation::Opposed => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    #[serde(rename = "J_true")]
    pub j_true: f64,
    pub gamma: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "J_guess")]
    pub j_guess: f64,
    pub shots: u64,
    pub rounds: usize,
    /// Grid of `|j|`; the sign of `j` is fixed by the field orientation.
    pub grid: EstimatorGrid,
    pub seed: u64,
    pub orientation: Orientation,
    /// After the last round, if the estimate is stable and the field is
    /// opposed, run one more round with the aligned field.
    pub sign_switch: bool,
}

impl ProtocolConfig {
    pub fn new(j_true: f64, gamma: f64, d: f64, j_guess: f64, shots: u64, rounds: usize) -> Self {
        Self {
            j_true,
            gamma,
            d,
            j_guess,
            shots,
            rounds,
            grid: EstimatorGrid::default(),
            seed: 0,
            orientation: Orientation::Aligned,
            sign_switch: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ChainParams::new(self.j_true, self.gamma, self.d)?;
        if !self.j_guess.is_finite() || self.j_guess.abs() < MIN_FIELD {
            return Err(Error::InvalidInput(format!(
                "initial guess {} cannot set a field",
                self.j_guess
            )));
        }
        if self.shots == 0 {
            return Err(Error::InvalidInput(
                "shots per round must be at least 1".into(),
            ));
        }
        if self.rounds == 0 {
            return Err(Error::InvalidInput("rounds must be at least 1".into()));
        }
        self.grid.validate()?;
        if self.grid.lo < 0.0 {
            return Err(Error::InvalidInput(
                "protocol grid ranges over |j| and must be non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn model(&self, quad: &QuadratureConfig) -> Result<ProtocolModel> {
        ProtocolModel::new(self.gamma, self.d, self.grid, quad)
    }
}

/// Likelihood models for both field orientations.
///
/// With `D = 0` the outcome distribution is even in `j`, so the sign of `j`
/// is not identifiable from the counts; it is fixed by how the field is set.
#[derive(Debug, Clone)]
pub struct ProtocolModel {
    pub aligned: LikelihoodModel,
    pub opposed: LikelihoodModel,
}

impl ProtocolModel {
    pub fn new(gamma: f64, d: f64, grid: EstimatorGrid, quad: &QuadratureConfig) -> Result<Self> {
        Ok(Self {
            aligned: LikelihoodModel::new(gamma, d, grid.signed(Orientation::Aligned), quad)?,
            opposed: LikelihoodModel::new(gamma, d, grid.signed(Orientation::Opposed), quad)?,
        })
    }

    pub fn get(&self, orientation: Orientation) -> &LikelihoodModel {
        match orientation {
            Orientation::Aligned => &self.aligned,
            Orientation::Opposed => &self.opposed,
        }
    }

    fn matches(&self, cfg: &ProtocolConfig) -> bool {
        let m = &self.aligned;
        m.gamma == cfg.gamma && m.d == cfg.d && m.grid == cfg.grid
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    #[serde(rename = "B")]
    pub field: f64,
    pub orientation: Orientation,
    /// `(↑↑, ↑↓, ↓↑, ↓↓)`.
    pub counts: [u64; 4],
    #[serde(rename = "J_av")]
    pub estimate: f64,
    pub j_hat: f64,
    pub variance_est: f64,
    pub log_variance_sd: f64,
    pub at_edge: bool,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTrace {
    pub seed: u64,
    pub rounds: Vec<RoundRecord>,
    pub converged: bool,
    pub final_estimate: f64,
    pub final_variance: f64,
    /// Why the run did not converge.
    pub failure: Option<String>,
}

impl ProtocolTrace {
    /// One JSON object per round.
    pub fn write_json_lines<W: Write>(&self, mut w: W) -> Result<()> {
        for r in &self.rounds {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Variance non-increasing from round to round, up to 3 standard
    /// deviations of the log-variance.
    pub fn variance_non_increasing(&self) -> bool {
        self.rounds.windows(2).all(|w| {
            let (a, b) = (&w[0], &w[1]);
            if !(a.variance_est.is_finite() && b.variance_est.is_finite()) {
                return false;
            }
            let slack = 3.0 * a.log_variance_sd.hypot(b.log_variance_sd);
            b.variance_est.ln() <= a.variance_est.ln() + slack
        })
    }
}

fn stable(a: &RoundRecord, b: &RoundRecord) -> bool {
    (b.estimate - a.estimate).abs() <= 3.0 * (a.variance_est + b.variance_est).sqrt()
}

fn one_round<R: rand::Rng>(
    model: &ProtocolModel,
    cfg: &ProtocolConfig,
    round: usize,
    field: f64,
    orientation: Orientation,
    rng: &mut R,
) -> Result<RoundRecord> {
    let model = model.get(orientation);
    let probs = model.probabilities(cfg.j_true / field)?;
    let counts = sample_with(&probs, cfg.shots, rng);
    let est = mle_estimate(&counts, field, model)?;
    Ok(RoundRecord {
        round,
        field,
        orientation,
        counts,
        estimate: est.estimate,
        j_hat: est.j_hat,
        variance_est: est.variance,
        log_variance_sd: est.log_variance_sd,
        at_edge: est.at_edge,
        degenerate: est.degenerate,
    })
}

/// Runs the adaptive protocol against a prebuilt model for `(γ, D)`.
pub fn adaptive_run_with(model: &ProtocolModel, cfg: &ProtocolConfig) -> Result<ProtocolTrace> {
    cfg.validate()?;
    if !model.matches(cfg) {
        return Err(Error::InvalidInput(
            "likelihood model does not match the configuration".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rounds: Vec<RoundRecord> = Vec::with_capacity(cfg.rounds + 1);
    let mut failure = None;
    let mut anchor = cfg.j_guess;
    let mut orientation = cfg.orientation;
    for k in 1..=cfg.rounds {
        let field = orientation.sign() * anchor;
        if !field.is_finite() || field.abs() < MIN_FIELD {
            failure = Some(format!("round {k}: estimate {anchor} cannot set a field"));
            break;
        }
        let rec = one_round(model, cfg, k, field, orientation, &mut rng)?;
        anchor = rec.estimate;
        rounds.push(rec);
    }
    if failure.is_none() && cfg.sign_switch && orientation == Orientation::Opposed {
        let n = rounds.len();
        if n >= 2 && stable(&rounds[n - 2], &rounds[n - 1]) && anchor.abs() >= MIN_FIELD {
            orientation = Orientation::Aligned;
            let rec = one_round(model, cfg, n + 1, anchor, orientation, &mut rng)?;
            rounds.push(rec);
        }
    }

    let last = rounds.last().copied();
    let mut trace = ProtocolTrace {
        seed: cfg.seed,
        converged: false,
        final_estimate: last.map_or(f64::NAN, |r| r.estimate),
        final_variance: last.map_or(f64::INFINITY, |r| r.variance_est),
        rounds,
        failure,
    };
    if trace.failure.is_none() {
        trace.failure = convergence_failure(&trace);
    }
    trace.converged = trace.failure.is_none();
    Ok(trace)
}

fn convergence_failure(trace: &ProtocolTrace) -> Option<String> {
    let rounds = &trace.rounds;
    if let Some(r) = rounds
        .iter()
        .find(|r| r.degenerate || !r.variance_est.is_finite())
    {
        return Some(format!("round {}: uninformative outcomes", r.round));
    }
    let last = rounds.last()?;
    if last.at_edge {
        return Some("final estimate at the edge of the estimator grid".into());
    }
    if !trace.variance_non_increasing() {
        return Some("variance increased between rounds".into());
    }
    if rounds.len() >= 2 && !stable(&rounds[rounds.len() - 2], last) {
        return Some("final estimate not stable to 3 sigma".into());
    }
    None
}

pub fn adaptive_run(cfg: &ProtocolConfig, quad: &QuadratureConfig) -> Result<ProtocolTrace> {
    cfg.validate()?;
    adaptive_run_with(&cfg.model(quad)?, cfg)
}

/// Runs `cfg` for each seed in parallel; traces come back in seed order.
pub fn run_ensemble(
    model: &ProtocolModel,
    cfg: &ProtocolConfig,
    seeds: &[u64],
) -> Result<Vec<ProtocolTrace>> {
    seeds
        .par_iter()
        .map(|&seed| adaptive_run_with(model, &ProtocolConfig { seed, ..*cfg }))
        .collect()
}

/// Ensemble statistics for one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrbRound {
    pub round: usize,
    pub runs: usize,
    pub mean_estimate: f64,
    /// Sample variance of the estimates across runs.
    pub empirical_variance: f64,
    pub median_variance_est: f64,
    /// Mean over runs of `B² / (M F(J_true/B))` at the fields actually set.
    pub crb: f64,
    /// `empirical_variance / crb`.
    pub ratio: f64,
    /// False when the bound is zero or infinite.
    pub attainable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrbReport {
    /// `1 / (M F(J_true))` at unit field.
    pub static_crb: f64,
    pub static_attainable: bool,
    pub rounds: Vec<CrbRound>,
    pub converged_fraction: f64,
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn bound(fisher: f64, field: f64, shots: u64) -> f64 {
    if fisher > 0.0 {
        field * field / (shots as f64 * fisher)
    } else {
        f64::INFINITY
    }
}

// FI about j at the true effective coupling; infinite exactly at |j| = 1.
fn true_fisher(model: &LikelihoodModel, j: f64) -> Result<f64> {
    if j.abs() == 1.0 {
        return Ok(f64::INFINITY);
    }
    model.fisher(j)
}

/// Compares the ensemble spread of each round with the Cramér–Rao bound.
pub fn crb_report(
    traces: &[ProtocolTrace],
    cfg: &ProtocolConfig,
    model: &ProtocolModel,
) -> Result<CrbReport> {
    let model = &model.aligned;
    let static_crb = bound(true_fisher(model, cfg.j_true)?, 1.0, cfg.shots);
    let depth = traces.iter().map(|t| t.rounds.len()).max().unwrap_or(0);
    let mut rounds = Vec::with_capacity(depth);
    for k in 0..depth {
        let recs: Vec<&RoundRecord> = traces.iter().filter_map(|t| t.rounds.get(k)).collect();
        let n = recs.len() as f64;
        let mean = recs.iter().map(|r| r.estimate).sum::<f64>() / n;
        let empirical_variance = if recs.len() > 1 {
            recs.iter()
                .map(|r| (r.estimate - mean).powi(2))
                .sum::<f64>()
                / (n - 1.0)
        } else {
            f64::NAN
        };
        let mut v: Vec<f64> = recs.iter().map(|r| r.variance_est).collect();
        let bounds = recs
            .par_iter()
            .map(|r| {
                Ok(bound(
                    true_fisher(model, cfg.j_true / r.field)?,
                    r.field,
                    cfg.shots,
                ))
            })
            .collect::<Result<Vec<f64>>>()?;
        let crb = bounds.iter().sum::<f64>() / n;
        let attainable = crb.is_finite() && crb > 0.0;
        rounds.push(CrbRound {
            round: k + 1,
            runs: recs.len(),
            mean_estimate: mean,
            empirical_variance,
            median_variance_est: median(&mut v),
            crb,
            ratio: if attainable {
                empirical_variance / crb
            } else {
                f64::NAN
            },
            attainable,
        });
    }
    let converged = traces.iter().filter(|t| t.converged).count();
    Ok(CrbReport {
        static_crb,
        static_attainable: static_crb.is_finite() && static_crb > 0.0,
        rounds,
        converged_fraction: if traces.is_empty() {
            f64::NAN
        } else {
            converged as f64 / traces.len() as f64
        },
    })
}

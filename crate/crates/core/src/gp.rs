//! Gaussian-process Bayes factor on log₂ VI ratios.
//!
//! Both hypotheses are zero-mean GPs. The signal model has a
//! squared-exponential covariance plus white noise, the noise-only model
//! white noise alone. The log Bayes factor is the difference of the two
//! maximised log marginal likelihoods.
//!
//! Observations sharing an `x` value are handled exactly by splitting the
//! likelihood into a GP on the group means (noise `σ_n²/n_g`) and an
//! independent within-group term, so a series with many replicates per
//! level only factorises a matrix the size of the number of levels.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::VICurveSet;

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const GRID_POINTS: usize = 12;
const LENGTH_RANGE: (f64, f64) = (0.05, 2.0);
const SIGNAL_RANGE: (f64, f64) = (1e-3, 10.0);
const NOISE_RANGE: (f64, f64) = (1e-3, 2.0);
/// Relative signal variance of the embedded near-noise-only candidate.
const SIGNAL_FLOOR: f64 = 1e-12;
const DEGENERATE_NOISE: f64 = 1e-12;
const GOLDEN_ITERS: usize = 48;
const MAX_CYCLES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSeries {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Cells dropped because the null VI was zero.
    pub dropped_zero_null: usize,
    /// Cells dropped because the observed VI was zero.
    pub dropped_zero_observed: usize,
}

impl RatioSeries {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Dimension(format!("{} x values for {} y values", x.len(), y.len())));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("series values must be finite".into()));
        }
        Ok(RatioSeries {
            x,
            y,
            dropped_zero_null: 0,
            dropped_zero_observed: 0,
        })
    }

    /// `log₂(vic / vic_random)` for every level above 0, pairing replicate
    /// columns by index. Missing cells are skipped.
    pub fn from_curves(set: &VICurveSet) -> Self {
        let mut s = RatioSeries {
            x: Vec::new(),
            y: Vec::new(),
            dropped_zero_null: 0,
            dropped_zero_observed: 0,
        };
        for (l, &p) in set.grid.levels.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (a, b) in set.vic[l].iter().zip(&set.vic_random[l]) {
                let (Some(a), Some(b)) = (a, b) else { continue };
                if *b == 0.0 {
                    s.dropped_zero_null += 1;
                } else if *a == 0.0 {
                    s.dropped_zero_observed += 1;
                } else {
                    s.x.push(p);
                    s.y.push((a / b).log2());
                }
            }
        }
        s
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dropped(&self) -> usize {
        self.dropped_zero_null + self.dropped_zero_observed
    }

    fn distinct_x(&self) -> usize {
        let mut xs = self.x.clone();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GPModel {
    pub signal_variance: f64,
    pub length_scale: f64,
    pub noise_variance: f64,
}

impl GPModel {
    pub fn noise_only(noise_variance: f64) -> Self {
        GPModel {
            signal_variance: 0.0,
            length_scale: 1.0,
            noise_variance,
        }
    }

    pub fn kernel(&self, a: f64, b: f64) -> f64 {
        let d = a - b;
        self.signal_variance * (-0.5 * d * d / (self.length_scale * self.length_scale)).exp()
    }

    fn validate(&self) -> Result<()> {
        if !(self.signal_variance >= 0.0 && self.length_scale > 0.0 && self.noise_variance > 0.0) {
            return Err(Error::InvalidInput(format!("invalid hyperparameters {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelClass {
    NoiseOnly,
    SignalPlusNoise,
}

/// Series summarised by distinct `x`.
struct Grouped {
    x: Vec<f64>,
    count: Vec<f64>,
    mean: Vec<f64>,
    within_ss: f64,
    n: usize,
}

impl Grouped {
    fn new(s: &RatioSeries) -> Grouped {
        let mut idx: Vec<usize> = (0..s.len()).collect();
        idx.sort_by(|&a, &b| s.x[a].total_cmp(&s.x[b]));
        let mut g = Grouped {
            x: Vec::new(),
            count: Vec::new(),
            mean: Vec::new(),
            within_ss: 0.0,
            n: s.len(),
        };
        let mut start = 0;
        while start < idx.len() {
            let x = s.x[idx[start]];
            let mut end = start;
            while end < idx.len() && s.x[idx[end]] == x {
                end += 1;
            }
            let ys: Vec<f64> = idx[start..end].iter().map(|&i| s.y[i]).collect();
            let mean = ys.iter().sum::<f64>() / ys.len() as f64;
            g.within_ss += ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>();
            g.x.push(x);
            g.count.push(ys.len() as f64);
            g.mean.push(mean);
            start = end;
        }
        g
    }

    fn covariance(&self, m: &GPModel) -> DMatrix<f64> {
        let k = self.x.len();
        DMatrix::from_fn(k, k, |i, j| {
            let mut v = m.kernel(self.x[i], self.x[j]);
            if i == j {
                v += m.noise_variance / self.count[i];
            }
            v
        })
    }

    fn within_terms(&self) -> (f64, f64) {
        let extra = self.n as f64 - self.x.len() as f64;
        let log_counts: f64 = self.count.iter().map(|c| c.ln()).sum();
        (extra, log_counts)
    }
}

fn factorize(a: &DMatrix<f64>) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    if let Some(c) = Cholesky::new(a.clone()) {
        return Ok(c);
    }
    let n = a.nrows();
    let scale = (a.trace() / n as f64).abs().max(f64::MIN_POSITIVE);
    let mut jitter = 1e-8;
    while jitter <= 1e-2 * (1.0 + 1e-12) {
        let mut b = a.clone();
        for i in 0..n {
            b[(i, i)] += jitter * scale;
        }
        if let Some(c) = Cholesky::new(b) {
            log::debug!("kernel factorised with jitter {jitter:e}");
            return Ok(c);
        }
        jitter *= 10.0;
    }
    let eig = SymmetricEigen::new(a.clone()).eigenvalues;
    let (lo, hi) = eig
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Err(Error::Numerical(format!(
        "kernel matrix is not positive definite (eigenvalues in [{lo:e}, {hi:e}], condition {:e})",
        hi.abs() / lo.abs()
    )))
}

fn lml_grouped(g: &Grouped, m: &GPModel, want_grad: bool) -> Result<(f64, [f64; 3])> {
    let a = g.covariance(m);
    let chol = factorize(&a)?;
    let ybar = DVector::from_column_slice(&g.mean);
    let alpha = chol.solve(&ybar);
    let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let k = g.x.len() as f64;
    let (extra, log_counts) = g.within_terms();
    let s2 = m.noise_variance;
    let mut lml = -0.5 * ybar.dot(&alpha) - 0.5 * log_det - 0.5 * k * LN_2PI;
    lml += -0.5 * extra * (LN_2PI + s2.ln()) - 0.5 * g.within_ss / s2 - 0.5 * log_counts;

    let mut grad = [0.0; 3];
    if want_grad {
        // d/dθ = ½ tr((ααᵀ − A⁻¹) dA/dθ) for the group-mean part.
        let inv = chol.inverse();
        let w = &alpha * alpha.transpose() - inv;
        let n = g.x.len();
        let l2 = m.length_scale * m.length_scale;
        for i in 0..n {
            for j in 0..n {
                let kij = m.kernel(g.x[i], g.x[j]);
                let d = g.x[i] - g.x[j];
                grad[0] += w[(i, j)] * kij;
                grad[1] += w[(i, j)] * kij * d * d / l2;
            }
            grad[2] += w[(i, i)] * s2 / g.count[i];
        }
        for v in grad.iter_mut() {
            *v *= 0.5;
        }
        grad[2] += -0.5 * extra + 0.5 * g.within_ss / s2;
    }
    Ok((lml, grad))
}

/// Exact Gaussian log marginal likelihood of `series` under `model`.
pub fn log_marginal_likelihood(model: &GPModel, series: &RatioSeries) -> Result<f64> {
    check_series(series)?;
    model.validate()?;
    Ok(lml_grouped(&Grouped::new(series), model, false)?.0)
}

/// Log marginal likelihood and its gradient with respect to
/// `(ln σ_f², ln ℓ, ln σ_n²)`.
pub fn log_marginal_likelihood_grad(model: &GPModel, series: &RatioSeries) -> Result<(f64, [f64; 3])> {
    check_series(series)?;
    model.validate()?;
    lml_grouped(&Grouped::new(series), model, true)
}

fn check_series(s: &RatioSeries) -> Result<()> {
    if s.is_empty() {
        return Err(Error::InsufficientData("empty series".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GPFit {
    pub model: GPModel,
    pub log_marginal_likelihood: f64,
    pub degenerate: bool,
}

fn log_grid(lo: f64, hi: f64) -> Vec<f64> {
    (0..GRID_POINTS)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (GRID_POINTS - 1) as f64).exp())
        .collect()
}

/// Maximise `f` over `[a, b]` by golden-section search.
fn golden(mut a: f64, mut b: f64, f: &mut impl FnMut(f64) -> f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_ITERS {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

fn second_moment(y: &[f64]) -> f64 {
    y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64
}

fn variance(y: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / y.len() as f64
}

/// Maximum-likelihood hyperparameters for the chosen model class.
///
/// Variances are searched relative to the second moment of `y` about zero,
/// the natural scale of a zero-mean model. A constant series is flagged
/// degenerate and gets a noise-only model with a tiny noise floor.
pub fn fit_hyperparameters(series: &RatioSeries, class: ModelClass) -> Result<GPFit> {
    check_series(series)?;
    if series.distinct_x() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} distinct x values; at least 3 are needed",
            series.distinct_x()
        )));
    }
    let g = Grouped::new(series);
    let scale = second_moment(&series.y);
    if variance(&series.y) == 0.0 {
        let model = GPModel::noise_only(DEGENERATE_NOISE * scale.max(1.0));
        let lml = lml_grouped(&g, &model, false).map(|r| r.0).unwrap_or(f64::NEG_INFINITY);
        return Ok(GPFit {
            model,
            log_marginal_likelihood: lml,
            degenerate: true,
        });
    }
    let eval = |m: &GPModel| lml_grouped(&g, m, false).map(|r| r.0).unwrap_or(f64::NEG_INFINITY);

    let (nlo, nhi) = (NOISE_RANGE.0 * scale, NOISE_RANGE.1 * scale);
    let mut noise_best = (GPModel::noise_only(nlo), f64::NEG_INFINITY);
    for s2 in log_grid(nlo, nhi) {
        let m = GPModel::noise_only(s2);
        let v = eval(&m);
        if v > noise_best.1 {
            noise_best = (m, v);
        }
    }
    let (t, v) = golden(nlo.ln(), nhi.ln(), &mut |t| eval(&GPModel::noise_only(t.exp())));
    if v > noise_best.1 {
        noise_best = (GPModel::noise_only(t.exp()), v);
    }
    if class == ModelClass::NoiseOnly {
        return Ok(GPFit {
            model: noise_best.0,
            log_marginal_likelihood: noise_best.1,
            degenerate: false,
        });
    }

    let range = g.x.last().unwrap() - g.x.first().unwrap();
    let bounds = [
        (SIGNAL_FLOOR * scale, SIGNAL_RANGE.1 * scale),
        (LENGTH_RANGE.0 * range, LENGTH_RANGE.1 * range),
        (nlo, nhi),
    ];
    let make = |p: [f64; 3]| GPModel {
        signal_variance: p[0],
        length_scale: p[1],
        noise_variance: p[2],
    };
    let lengths = log_grid(bounds[1].0, bounds[1].1);
    let mut best = (
        [SIGNAL_FLOOR * scale, lengths[GRID_POINTS / 2], noise_best.0.noise_variance],
        f64::NEG_INFINITY,
    );
    best.1 = eval(&make(best.0));
    for sf in log_grid(SIGNAL_RANGE.0 * scale, SIGNAL_RANGE.1 * scale) {
        for &l in &lengths {
            for sn in log_grid(nlo, nhi) {
                let p = [sf, l, sn];
                let v = eval(&make(p));
                if v > best.1 {
                    best = (p, v);
                }
            }
        }
    }
    for _ in 0..MAX_CYCLES {
        let before = best.1;
        for axis in 0..3 {
            let (lo, hi) = bounds[axis];
            let mut objective = |t: f64| {
                let mut p = best.0;
                p[axis] = t.exp();
                eval(&make(p))
            };
            let (t, v) = golden(lo.ln(), hi.ln(), &mut objective);
            if v > best.1 {
                best.0[axis] = t.exp();
                best.1 = v;
            }
        }
        if best.1 - before < 1e-10 {
            break;
        }
    }
    Ok(GPFit {
        model: make(best.0),
        log_marginal_likelihood: best.1,
        degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GPOutcome {
    pub log_bf: f64,
    pub fitted_signal: GPFit,
    pub fitted_noise: GPFit,
    pub dropped_cells: usize,
    pub n_points: usize,
}

/// Log Bayes factor of signal-plus-noise against noise-only.
pub fn bayes_factor(series: &RatioSeries) -> Result<GPOutcome> {
    let fitted_noise = fit_hyperparameters(series, ModelClass::NoiseOnly)?;
    let fitted_signal = if fitted_noise.degenerate {
        fitted_noise
    } else {
        fit_hyperparameters(series, ModelClass::SignalPlusNoise)?
    };
    Ok(GPOutcome {
        log_bf: fitted_signal.log_marginal_likelihood - fitted_noise.log_marginal_likelihood,
        fitted_signal,
        fitted_noise,
        dropped_cells: series.dropped(),
        n_points: series.len(),
    })
}

pub fn gp_test(set: &VICurveSet) -> Result<GPOutcome> {
    bayes_factor(&RatioSeries::from_curves(set))
}

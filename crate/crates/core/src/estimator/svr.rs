//! Epsilon-insensitive support vector regression trained by sequential
//! minimal optimization on the dual.
//!
//! With l training points the dual has 2l variables `beta = [a; a*]` with
//! signs `z = [+1..; -1..]`:
//!
//! ```text
//! min  1/2 beta' Q beta + p' beta
//! s.t. z' beta = 0,  0 <= beta_t <= C
//! Q_ts = z_t z_s K(x_t, x_s),  p = [eps - y; eps + y]
//! ```
//!
//! Each step updates the maximal violating pair (first-order working set
//! selection, ties to the lowest index), so training is deterministic. The
//! solver stops once the violation gap `max_{I_up} -z G - min_{I_low} -z G`
//! drops below `tol`. The fitted function is
//! `f(x) = sum_i (a_i - a*_i) K(x_i, x) + bias` on standardized inputs.

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use super::{standardize, FeatureMatrix, Scaler};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Rbf,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    Rbf { gamma: f64 },
    Linear,
}

impl Kernel {
    #[inline]
    fn eval(&self, x: ArrayView1<f64>, y: ArrayView1<f64>) -> f64 {
        match *self {
            Kernel::Rbf { gamma } => {
                let d2: f64 = x.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }
            Kernel::Linear => x.dot(&y),
        }
    }
}

fn check_lengths(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "kernel arguments differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

/// `exp(-gamma * |x - y|^2)`
pub fn rbf_kernel(x: &[f64], y: &[f64], gamma: f64) -> Result<f64> {
    check_lengths(x, y)?;
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::InvalidConfig(format!("gamma must be positive, got {gamma}")));
    }
    Ok(Kernel::Rbf { gamma }.eval(ArrayView1::from(x), ArrayView1::from(y)))
}

pub fn linear_kernel(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x, y)?;
    Ok(Kernel::Linear.eval(ArrayView1::from(x), ArrayView1::from(y)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub kernel: KernelKind,
    pub c: f64,
    pub epsilon: f64,
    /// `None` resolves to 1 / (number of features after constant columns are dropped).
    pub gamma: Option<f64>,
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SvrParams {
    fn default() -> Self {
        Self {
            kernel: KernelKind::Rbf,
            c: 1.0,
            epsilon: 0.1,
            gamma: None,
            tol: 1e-3,
            max_iterations: 10_000_000,
        }
    }
}

impl SvrParams {
    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidConfig(format!("C must be positive, got {}", self.c)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::InvalidConfig(format!("gamma must be positive, got {g}")));
            }
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidConfig("tol must be positive".into()));
        }
        Ok(())
    }

    fn resolve_kernel(&self, num_features: usize) -> Kernel {
        match self.kernel {
            KernelKind::Linear => Kernel::Linear,
            KernelKind::Rbf => Kernel::Rbf {
                gamma: self.gamma.unwrap_or(1.0 / num_features as f64),
            },
        }
    }
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub format_version: u32,
    pub kernel: Kernel,
    pub params: SvrParams,
    pub scaler: Scaler,
    /// Standardized training rows with a non-zero coefficient.
    pub support_vectors: Vec<Vec<f64>>,
    pub dual_coefficients: Vec<f64>,
    pub bias: f64,
    /// Violation gap at termination.
    pub kkt_violation: f64,
    pub iterations: usize,
}

impl SvrModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: SvrModel = serde_json::from_str(text)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported model format version {}",
                m.format_version
            )));
        }
        if m.support_vectors.len() != m.dual_coefficients.len() {
            return Err(Error::InvalidInput(
                "support vector / coefficient count mismatch".into(),
            ));
        }
        Ok(m)
    }

    /// Evaluates the kernel expansion on one standardized row.
    pub fn decision(&self, x: ArrayView1<f64>) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coefficients)
            .map(|(sv, &c)| c * self.kernel.eval(ArrayView1::from(sv.as_slice()), x))
            .sum::<f64>()
            + self.bias
    }
}

struct Solution {
    beta: Vec<f64>,
    gradient: Vec<f64>,
    gap: f64,
    iterations: usize,
}

/// SMO over the 2l-variable dual. `kmat` is the l x l kernel matrix.
fn solve_dual(kmat: &Array2<f64>, y: &[f64], params: &SvrParams) -> Result<Solution> {
    let l = y.len();
    let n = 2 * l;
    let c = params.c;
    let z = |t: usize| if t < l { 1.0 } else { -1.0 };
    let q = |t: usize, s: usize| z(t) * z(s) * kmat[[t % l, s % l]];
    let mut beta = vec![0.0; n];
    let mut g: Vec<f64> = (0..n)
        .map(|t| {
            if t < l {
                params.epsilon - y[t]
            } else {
                params.epsilon + y[t - l]
            }
        })
        .collect();

    let mut iterations = 0;
    loop {
        // maximal violating pair
        let mut gmax = f64::NEG_INFINITY;
        let mut gmin = f64::INFINITY;
        let (mut i, mut j) = (usize::MAX, usize::MAX);
        for t in 0..n {
            let v = -z(t) * g[t];
            let up = if z(t) > 0.0 { beta[t] < c } else { beta[t] > 0.0 };
            let low = if z(t) > 0.0 { beta[t] > 0.0 } else { beta[t] < c };
            if up && v > gmax {
                gmax = v;
                i = t;
            }
            if low && v < gmin {
                gmin = v;
                j = t;
            }
        }
        let gap = gmax - gmin;
        if i == usize::MAX || j == usize::MAX || gap < params.tol {
            return Ok(Solution {
                beta,
                gradient: g,
                gap: gap.max(0.0),
                iterations,
            });
        }
        if iterations >= params.max_iterations {
            return Err(Error::NotConverged {
                iterations,
                violation: gap,
            });
        }
        iterations += 1;

        let (old_i, old_j) = (beta[i], beta[j]);
        let mut quad = q(i, i) + q(j, j);
        if z(i) != z(j) {
            quad += 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = 1e-12;
            }
            let delta = (-g[i] - g[j]) / quad;
            let diff = beta[i] - beta[j];
            beta[i] += delta;
            beta[j] += delta;
            if diff > 0.0 {
                if beta[j] < 0.0 {
                    beta[j] = 0.0;
                    beta[i] = diff;
                }
            } else if beta[i] < 0.0 {
                beta[i] = 0.0;
                beta[j] = -diff;
            }
            if diff > 0.0 {
                if beta[i] > c {
                    beta[i] = c;
                    beta[j] = c - diff;
                }
            } else if beta[j] > c {
                beta[j] = c;
                beta[i] = c + diff;
            }
        } else {
            quad -= 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = 1e-12;
            }
            let delta = (g[i] - g[j]) / quad;
            let sum = beta[i] + beta[j];
            beta[i] -= delta;
            beta[j] += delta;
            if sum > c {
                if beta[i] > c {
                    beta[i] = c;
                    beta[j] = sum - c;
                }
            } else if beta[j] < 0.0 {
                beta[j] = 0.0;
                beta[i] = sum;
            }
            if sum > c {
                if beta[j] > c {
                    beta[j] = c;
                    beta[i] = sum - c;
                }
            } else if beta[i] < 0.0 {
                beta[i] = 0.0;
                beta[j] = sum;
            }
        }

        let (di, dj) = (beta[i] - old_i, beta[j] - old_j);
        for (t, gt) in g.iter_mut().enumerate() {
            *gt += q(t, i) * di + q(t, j) * dj;
        }
    }
}

/// Offset from the solved dual: mean of z*G over free variables, or the
/// midpoint of the feasible interval when none is free.
fn bias(sol: &Solution, l: usize, c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free = 0usize;
    let mut free_sum = 0.0;
    for (t, (&b, &g)) in sol.beta.iter().zip(&sol.gradient).enumerate() {
        let zt = if t < l { 1.0 } else { -1.0 };
        let yg = zt * g;
        if b >= c {
            if zt < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if b <= 0.0 {
            if zt > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 {
        free_sum / free as f64
    } else {
        (ub + lb) / 2.0
    };
    -rho
}

/// Standardizes the training table, then fits the dual problem.
pub fn train_svr(features: &FeatureMatrix, params: &SvrParams) -> Result<SvrModel> {
    params.validate()?;
    let y = features.labels()?.to_vec();
    if features.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 labeled rows, got {}",
            features.len()
        )));
    }
    let (table, scaler) = standardize(features)?;
    let kernel = params.resolve_kernel(table.num_features());
    let x = &table.rows;
    let l = x.nrows();
    let mut kmat = Array2::<f64>::zeros((l, l));
    for a in 0..l {
        for b in a..l {
            let v = kernel.eval(x.row(a), x.row(b));
            kmat[[a, b]] = v;
            kmat[[b, a]] = v;
        }
    }
    let sol = solve_dual(&kmat, &y, params)?;
    let b = bias(&sol, l, params.c);
    let mut support_vectors = Vec::new();
    let mut dual_coefficients = Vec::new();
    for i in 0..l {
        let coef = sol.beta[i] - sol.beta[i + l];
        if coef != 0.0 {
            support_vectors.push(x.row(i).to_vec());
            dual_coefficients.push(coef);
        }
    }
    log::debug!(
        "SVR fit: {} support vectors of {l}, {} iterations, gap {:.2e}",
        support_vectors.len(),
        sol.iterations,
        sol.gap
    );
    Ok(SvrModel {
        format_version: MODEL_FORMAT_VERSION,
        kernel,
        params: *params,
        scaler,
        support_vectors,
        dual_coefficients,
        bias: b,
        kkt_violation: sol.gap,
        iterations: sol.iterations,
    })
}

pub fn predict(model: &SvrModel, features: &FeatureMatrix) -> Result<Vec<f64>> {
    let x = model.scaler.transform(features)?;
    Ok(x.rows().into_iter().map(|r| model.decision(r)).collect())
}

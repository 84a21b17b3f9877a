//! Kernel SVM trained by sequential minimal optimization on the dual
//! problem, with an LRU-style kernel row cache.
//!
//! Score convention: `f(x) = sum_i coeff_i K(x_i, x) - b` with
//! `coeff_i = alpha_i * y_i`, so an on-margin support vector satisfies
//! `b = u_i - y_i`.

use serde::{Deserialize, Serialize};

use super::linear::dot;
use super::{Learned, Model, ModelSpec, TrainMeta};
use crate::data::{Dataset, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    Linear,
    /// `exp(-||a - b||^2 / (2 sigma2))`.
    Rbf { sigma2: f64 },
}

impl Kernel {
    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::Linear => dot(a, b),
            Kernel::Rbf { sigma2 } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-d2 / (2.0 * sigma2)).exp()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    /// Box bound on the dual coefficients.
    pub c: f64,
    /// RBF width; `None` uses the feature count.
    pub sigma2: Option<f64>,
    /// KKT tolerance the solver converges to.
    pub tol: f64,
    /// Cap on successful pair updates; 0 picks `max(100_000, 50 n)`.
    pub max_iter: usize,
    /// Kernel row cache budget in MiB.
    pub cache_mb: usize,
    /// Kept for the uniform interface; the solver is deterministic.
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams { c: 1.0, sigma2: None, tol: 1e-3, max_iter: 0, cache_mb: 256, seed: 0 }
    }
}

impl SvmParams {
    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) {
            return Err(Error::InvalidInput("C must be > 0".into()));
        }
        if let Some(s) = self.sigma2 {
            if !(s > 0.0) {
                return Err(Error::InvalidInput("sigma2 must be > 0".into()));
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidInput("tol must be > 0".into()));
        }
        Ok(())
    }
}

/// Lazily computed kernel rows with FIFO eviction.
struct RowCache<'a> {
    x: &'a Matrix,
    kernel: Kernel,
    rows: Vec<Option<Box<[f64]>>>,
    filled: std::collections::VecDeque<usize>,
    capacity: usize,
}

impl<'a> RowCache<'a> {
    fn new(x: &'a Matrix, kernel: Kernel, cache_mb: usize) -> Self {
        let n = x.n_rows();
        let budget_rows = (cache_mb * 1024 * 1024) / (8 * n.max(1));
        RowCache {
            x,
            kernel,
            rows: vec![None; n],
            filled: std::collections::VecDeque::new(),
            capacity: budget_rows.clamp(2, n.max(2)),
        }
    }

    fn row(&mut self, i: usize) -> &[f64] {
        if self.rows[i].is_none() {
            if self.filled.len() >= self.capacity {
                let evict = self.filled.pop_front().unwrap();
                self.rows[evict] = None;
            }
            let xi = self.x.row(i);
            let row: Box<[f64]> =
                (0..self.x.n_rows()).map(|j| self.kernel.eval(xi, self.x.row(j))).collect();
            self.rows[i] = Some(row);
            self.filled.push_back(i);
        }
        self.rows[i].as_ref().unwrap()
    }
}

/// Converged dual variables plus diagnostics.
#[derive(Debug, Clone)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    /// Offset in the `f(x) = u(x) - b` convention.
    pub b: f64,
    /// Successful pair updates.
    pub iterations: usize,
    /// Max KKT violation at the returned `(alpha, b)`.
    pub kkt_residual: f64,
    /// Dual objective after each successful update (only when traced).
    pub objective_trace: Vec<f64>,
    pub hit_iteration_cap: bool,
}

/// Solve the dual with SMO. `t` holds labels in {-1, +1}.
///
/// Deterministic: the first violator is scanned in index order and the
/// partner is the argmax-|E1 - E2| non-bound point (ties to the lower
/// index), falling back to sequential scans.
pub fn solve_dual(
    x: &Matrix,
    t: &[f64],
    kernel: Kernel,
    params: &SvmParams,
    trace: bool,
) -> Result<DualSolution> {
    let n = x.n_rows();
    if n < 2 {
        return Err(Error::Fit("SMO needs at least two rows".into()));
    }
    let c = params.c;
    // Examine with half the public tolerance so the final residual stays
    // within it after the offset is re-derived from margin vectors.
    let tol = params.tol / 2.0;
    let max_iter = if params.max_iter == 0 { (50 * n).max(100_000) } else { params.max_iter };

    let mut cache = RowCache::new(x, kernel, params.cache_mb);
    let mut alpha = vec![0.0f64; n];
    // u[i] = sum_j alpha_j t_j K(j, i); maintained incrementally.
    let mut u = vec![0.0f64; n];
    let mut b = 0.0f64;
    let mut iterations = 0usize;
    let mut objective_trace = Vec::new();
    let mut hit_cap = false;

    let objective = |alpha: &[f64], u: &[f64]| -> f64 {
        let mut w = 0.0;
        for i in 0..n {
            w += alpha[i] - 0.5 * alpha[i] * t[i] * u[i];
        }
        w
    };

    // Returns true if the (i1, i2) pair made progress.
    let take_step = |i1: usize,
                         i2: usize,
                         alpha: &mut [f64],
                         u: &mut [f64],
                         b: &mut f64,
                         cache: &mut RowCache|
     -> bool {
        if i1 == i2 {
            return false;
        }
        let (y1, y2) = (t[i1], t[i2]);
        let (a1_old, a2_old) = (alpha[i1], alpha[i2]);
        let e1 = u[i1] - *b - y1;
        let e2 = u[i2] - *b - y2;
        let s = y1 * y2;

        let (lo, hi) = if (y1 - y2).abs() > 0.5 {
            ((a2_old - a1_old).max(0.0), (c + a2_old - a1_old).min(c))
        } else {
            ((a2_old + a1_old - c).max(0.0), (a2_old + a1_old).min(c))
        };
        if lo >= hi {
            return false;
        }

        let k11 = cache.kernel.eval(cache.x.row(i1), cache.x.row(i1));
        let k22 = cache.kernel.eval(cache.x.row(i2), cache.x.row(i2));
        let k12 = cache.kernel.eval(cache.x.row(i1), cache.x.row(i2));
        let eta = k11 + k22 - 2.0 * k12;

        let mut a2 = if eta > 0.0 {
            (a2_old + y2 * (e1 - e2) / eta).clamp(lo, hi)
        } else {
            // Degenerate curvature: evaluate the objective at both ends.
            let f1 = y1 * (e1 + *b) - a1_old * k11 - s * a2_old * k12;
            let f2 = y2 * (e2 + *b) - s * a1_old * k12 - a2_old * k22;
            let l1 = a1_old + s * (a2_old - lo);
            let h1 = a1_old + s * (a2_old - hi);
            let lobj = l1 * f1 + lo * f2
                + 0.5 * l1 * l1 * k11
                + 0.5 * lo * lo * k22
                + s * lo * l1 * k12;
            let hobj = h1 * f1 + hi * f2
                + 0.5 * h1 * h1 * k11
                + 0.5 * hi * hi * k22
                + s * hi * h1 * k12;
            if lobj < hobj - 1e-12 {
                lo
            } else if lobj > hobj + 1e-12 {
                hi
            } else {
                return false;
            }
        };
        if (a2 - a2_old).abs() < 1e-10 * (a2 + a2_old + 1e-10) {
            return false;
        }
        // Snap to the box to keep bound classification exact.
        if a2 < 1e-12 {
            a2 = 0.0;
        } else if a2 > c - 1e-12 {
            a2 = c;
        }
        let mut a1 = a1_old + s * (a2_old - a2);
        if a1 < 1e-12 {
            a1 = 0.0;
        } else if a1 > c - 1e-12 {
            a1 = c;
        }

        let d1 = (a1 - a1_old) * y1;
        let d2 = (a2 - a2_old) * y2;

        let b1 = e1 + d1 * k11 + d2 * k12 + *b;
        let b2 = e2 + d1 * k12 + d2 * k22 + *b;
        *b = if a1 > 0.0 && a1 < c {
            b1
        } else if a2 > 0.0 && a2 < c {
            b2
        } else {
            0.5 * (b1 + b2)
        };

        let row1 = cache.row(i1).to_vec();
        for (uj, &k1j) in u.iter_mut().zip(&row1) {
            *uj += d1 * k1j;
        }
        let row2 = cache.row(i2);
        for (uj, &k2j) in u.iter_mut().zip(row2.iter()) {
            *uj += d2 * k2j;
        }

        alpha[i1] = a1;
        alpha[i2] = a2;
        true
    };

    let examine = |i2: usize,
                       alpha: &mut [f64],
                       u: &mut [f64],
                       b: &mut f64,
                       cache: &mut RowCache|
     -> bool {
        let y2 = t[i2];
        let a2 = alpha[i2];
        let e2 = u[i2] - *b - y2;
        let r2 = e2 * y2;
        let violates = (r2 < -tol && a2 < c) || (r2 > tol && a2 > 0.0);
        if !violates {
            return false;
        }

        // Heuristic 1: largest |E1 - E2| among non-bound points.
        let mut best: Option<(f64, usize)> = None;
        for i1 in 0..n {
            if alpha[i1] > 0.0 && alpha[i1] < c {
                let e1 = u[i1] - *b - t[i1];
                let gap = (e1 - e2).abs();
                if best.map_or(true, |(g, _)| gap > g) {
                    best = Some((gap, i1));
                }
            }
        }
        if let Some((_, i1)) = best {
            if take_step(i1, i2, alpha, u, b, cache) {
                return true;
            }
        }
        // Heuristic 2: sequential scan over non-bound points.
        for off in 0..n {
            let i1 = (i2 + 1 + off) % n;
            if alpha[i1] > 0.0 && alpha[i1] < c && take_step(i1, i2, alpha, u, b, cache) {
                return true;
            }
        }
        // Heuristic 3: sequential scan over everything.
        for off in 0..n {
            let i1 = (i2 + 1 + off) % n;
            if take_step(i1, i2, alpha, u, b, cache) {
                return true;
            }
        }
        false
    };

    let mut examine_all = true;
    loop {
        let mut num_changed = 0usize;
        for i in 0..n {
            if !examine_all && !(alpha[i] > 0.0 && alpha[i] < c) {
                continue;
            }
            if examine(i, &mut alpha, &mut u, &mut b, &mut cache) {
                num_changed += 1;
                iterations += 1;
                if trace {
                    objective_trace.push(objective(&alpha, &u));
                }
                if iterations >= max_iter {
                    hit_cap = true;
                    break;
                }
            }
        }
        if hit_cap {
            break;
        }
        if examine_all {
            if num_changed == 0 {
                break;
            }
            examine_all = false;
        } else if num_changed == 0 {
            examine_all = true;
        }
    }

    // Recover b from on-margin support vectors; fall back to averaging over
    // all support vectors if none sits on the margin.
    let margin_eps = 1e-8 * c.max(1.0);
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..n {
        if alpha[i] > margin_eps && alpha[i] < c - margin_eps {
            sum += u[i] - t[i];
            count += 1;
        }
    }
    if count == 0 {
        for i in 0..n {
            if alpha[i] > margin_eps {
                sum += u[i] - t[i];
                count += 1;
            }
        }
    }
    let b_final = if count > 0 { sum / count as f64 } else { b };

    let mut residual = 0.0f64;
    for i in 0..n {
        let yf = t[i] * (u[i] - b_final);
        let v = if alpha[i] <= margin_eps {
            (1.0 - yf).max(0.0)
        } else if alpha[i] >= c - margin_eps {
            (yf - 1.0).max(0.0)
        } else {
            (yf - 1.0).abs()
        };
        residual = residual.max(v);
    }

    Ok(DualSolution {
        alpha,
        b: b_final,
        iterations,
        kkt_residual: residual,
        objective_trace,
        hit_iteration_cap: hit_cap,
    })
}

/// Train a kernel SVM via SMO and keep only the support vectors.
pub fn fit_svm(d: &Dataset, spec: &ModelSpec, params: &SvmParams, linear: bool) -> Result<Model> {
    params.validate()?;
    let (n0, n1) = d.label_counts();
    if n0 == 0 || n1 == 0 {
        return Err(Error::Fit("SVM requires both classes in training data".into()));
    }

    let kernel = if linear {
        Kernel::Linear
    } else {
        Kernel::Rbf { sigma2: params.sigma2.unwrap_or(d.n_cols() as f64) }
    };
    let t: Vec<f64> = d.y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();

    let sol = solve_dual(&d.x, &t, kernel, params, false)?;

    let keep_eps = 1e-9 * params.c.max(1.0);
    let mut sv_rows = Vec::new();
    let mut coeff = Vec::new();
    for i in 0..d.n_rows() {
        if sol.alpha[i] > keep_eps {
            sv_rows.push(d.x.row(i).to_vec());
            coeff.push(sol.alpha[i] * t[i]);
        }
    }

    let warning = sol.hit_iteration_cap.then(|| {
        format!(
            "SMO hit the iteration cap ({} updates), KKT residual {:.2e}",
            sol.iterations, sol.kkt_residual
        )
    });

    Ok(Model {
        version: super::MODEL_FORMAT_VERSION,
        spec: spec.clone(),
        learned: Learned::Svm {
            kernel,
            support: Matrix::from_rows(&sv_rows),
            coeff,
            b: sol.b,
            n_features: d.n_cols(),
        },
        meta: TrainMeta {
            seed: params.seed,
            epochs_run: sol.iterations,
            final_loss: -sol.kkt_residual,
            warning,
        },
    })
}

#[inline]
pub(super) fn svm_score(kernel: &Kernel, support: &Matrix, coeff: &[f64], b: f64, row: &[f64]) -> f64 {
    let mut s = 0.0;
    for (i, c) in coeff.iter().enumerate() {
        s += c * kernel.eval(support.row(i), row);
    }
    s - b
}

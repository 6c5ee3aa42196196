//! Numerical checks of the worst-additive-noise inequalities at `n = 1`.
//!
//! Gaussian instances are evaluated by covariance algebra; non-Gaussian
//! probes use a two-component (or larger) Gaussian mixture for `X` and
//! Gauss-Hermite quadrature for the mixture entropies.

use gauss_quad::GaussLegendre;
use nalgebra::{DMatrix, Matrix2, SymmetricEigen, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{domain, invalid, Result};
use crate::gic_core::{GaussianModel, Lin, SignalKind};

const PSD_TOL: f64 = -1e-10;
const LOG2_2PIE: f64 = 4.094_191_170_361_282;

/// Covariance of `(Z, X + Z, U)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianTriple {
    k: [[f64; 3]; 3],
}

impl GaussianTriple {
    pub fn new(k: [[f64; 3]; 3]) -> Result<Self> {
        for i in 0..3 {
            for j in 0..3 {
                if !k[i][j].is_finite() || (k[i][j] - k[j][i]).abs() > 1e-12 * (1.0 + k[i][j].abs()) {
                    return Err(invalid("triple covariance must be finite and symmetric"));
                }
            }
        }
        let m = DMatrix::from_fn(3, 3, |i, j| k[i][j]);
        if SymmetricEigen::new(m).eigenvalues.iter().any(|&e| e < PSD_TOL * (1.0 + k[1][1].abs())) {
            return Err(invalid("triple covariance must be positive semidefinite"));
        }
        let tol = 1e-12 * (1.0 + k[0][0].abs());
        if (k[0][1] - k[0][0]).abs() > tol || k[0][2].abs() > tol {
            return Err(invalid("Z must be independent of X and U"));
        }
        Ok(Self { k })
    }

    pub fn from_parts(var_x: f64, var_z: f64, var_u: f64, cov_xu: f64) -> Result<Self> {
        Self::new([[var_z, var_z, 0.0], [var_z, var_x + var_z, cov_xu], [0.0, cov_xu, var_u]])
    }

    pub fn var_z(&self) -> f64 {
        self.k[0][0]
    }

    pub fn var_x(&self) -> f64 {
        self.k[1][1] - self.k[0][0]
    }

    pub fn var_u(&self) -> f64 {
        self.k[2][2]
    }

    pub fn cov_xu(&self) -> f64 {
        self.k[1][2]
    }

    /// `Var(X | U)`, unconditional when `U` is degenerate.
    pub fn var_x_given_u(&self) -> f64 {
        if self.var_u() <= 0.0 {
            self.var_x()
        } else {
            self.var_x() - self.cov_xu().powi(2) / self.var_u()
        }
    }
}

/// Right side of the conditional worst-noise inequality: `h(X|U) - h(X+Z|U)` for Gaussian `(X, U)`.
fn gaussian_side(var_x_u: f64, var_z: f64) -> f64 {
    0.5 * (var_x_u / (var_x_u + var_z)).log2()
}

/// Both sides of the inequality for a Gaussian triple; returns right minus left.
///
/// The left side is assembled from log-determinants of the full covariance,
/// the right from conditional variances, so the residual measures agreement
/// of two independent evaluations of an equality.
pub fn lemma1_gap(t: &GaussianTriple) -> Result<f64> {
    if !(t.var_z() > 0.0) {
        return Err(domain("Var(Z) must be positive"));
    }
    let vxu = t.var_x_given_u();
    if !(vxu > 0.0) {
        return Err(domain("X must not be deterministic given U"));
    }
    let cov = DMatrix::from_fn(3, 3, |i, j| t.k[i][j]);
    let model = GaussianModel::new(cov, SignalKind::Real)?;
    let (z, xz, u) = (Lin::atom(0), Lin::atom(1), Lin::atom(2));
    let x = &xz - &z;
    let given: Vec<&Lin> = if t.var_u() > 0.0 { vec![&u] } else { vec![] };
    let left = model.conditional_entropy(&[&x], &given) - model.conditional_entropy(&[&xz], &given);
    Ok(gaussian_side(vxu, t.var_z()) - left)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mixture1D {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
}

impl Mixture1D {
    pub fn new(weights: Vec<f64>, means: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.len() != means.len() || weights.len() != variances.len() {
            return Err(invalid("mixture needs equally many weights, means and variances"));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) || variances.iter().any(|v| !(*v > 0.0)) {
            return Err(invalid("mixture weights must be nonnegative and variances positive"));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || means.iter().any(|m| !m.is_finite()) {
            return Err(invalid("mixture weights must not all vanish"));
        }
        let weights = weights.iter().map(|w| w / total).collect();
        Ok(Self { weights, means, variances })
    }

    /// `±mu` with equal weights and common component variance.
    pub fn symmetric(mu: f64, variance: f64) -> Result<Self> {
        Self::new(vec![0.5, 0.5], vec![-mu, mu], vec![variance, variance])
    }

    pub fn mean(&self) -> f64 {
        self.weights.iter().zip(&self.means).map(|(w, m)| w * m).sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.weights.iter().zip(&self.means).zip(&self.variances).map(|((w, m), v)| w * (v + (m - mu).powi(2))).sum()
    }

    fn convolved(&self, noise_var: f64) -> Self {
        Self {
            weights: self.weights.clone(),
            means: self.means.clone(),
            variances: self.variances.iter().map(|v| v + noise_var).collect(),
        }
    }
}

/// Composite Gauss-Legendre settings; the panel count doubles until successive
/// estimates agree to `rel_tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureOptions {
    pub rel_tol: f64,
    pub start_panels: usize,
    pub max_panels: usize,
    /// Cap on panels per axis for 2-D integrals.
    pub max_panels_2d: usize,
    /// Half-width of the integration box in component standard deviations.
    pub span_sd: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-8, start_panels: 8, max_panels: 512, max_panels_2d: 128, span_sd: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quadrature {
    pub value: f64,
    /// Panels per axis used by the final estimate (0 for closed forms).
    pub panels: usize,
    pub converged: bool,
}

const GL_ORDER: usize = 12;

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = terms.collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// Nodes and weights of a composite rule on `[lo, hi]`.
fn composite(rule: &GaussLegendre, lo: f64, hi: f64, panels: usize) -> Vec<(f64, f64)> {
    let h = (hi - lo) / panels as f64;
    let mut out = Vec::with_capacity(panels * GL_ORDER);
    for i in 0..panels {
        let mid = lo + h * (i as f64 + 0.5);
        for (x, w) in rule.as_node_weight_pairs() {
            out.push((mid + 0.5 * h * x, 0.5 * h * w));
        }
    }
    out
}

fn check_opts(opts: &QuadratureOptions) -> Result<()> {
    if !(opts.rel_tol > 0.0) || opts.start_panels == 0 || opts.max_panels < opts.start_panels || !(opts.span_sd > 0.0) {
        return Err(invalid(format!("bad quadrature options {opts:?}")));
    }
    Ok(())
}

/// Doubles the panel count until two successive estimates agree.
fn adaptive<F: Fn(usize) -> f64>(estimate: F, opts: &QuadratureOptions) -> Result<Quadrature> {
    check_opts(opts)?;
    let mut panels = opts.start_panels;
    let mut prev = estimate(panels);
    while panels * 2 <= opts.max_panels {
        panels *= 2;
        let cur = estimate(panels);
        if (cur - prev).abs() <= opts.rel_tol * cur.abs().max(1.0) {
            return Ok(Quadrature { value: cur, panels, converged: true });
        }
        prev = cur;
    }
    Ok(Quadrature { value: prev, panels, converged: false })
}

fn legendre() -> Result<GaussLegendre> {
    GaussLegendre::new(GL_ORDER).map_err(|e| invalid(format!("quadrature rule: {e}")))
}

/// `-p ln p`, zero where the density underflows.
fn plogp(log_p: f64) -> f64 {
    if log_p.is_finite() {
        -log_p.exp() * log_p
    } else {
        0.0
    }
}

/// Differential entropy (bits) of a 1-D Gaussian mixture.
pub fn mixture_entropy_1d(m: &Mixture1D, opts: &QuadratureOptions) -> Result<Quadrature> {
    let comps: Vec<(f64, f64, f64)> = m
        .weights
        .iter()
        .zip(&m.means)
        .zip(&m.variances)
        .filter(|((w, _), _)| **w > 0.0)
        .map(|((w, mu), v)| (*w, *mu, *v))
        .collect();
    if let [(_, _, v)] = comps[..] {
        check_opts(opts)?;
        return Ok(Quadrature { value: gaussian_entropy_bits(v), panels: 0, converged: true });
    }
    let lo = comps.iter().map(|&(_, mu, v)| mu - opts.span_sd * v.sqrt()).fold(f64::INFINITY, f64::min);
    let hi = comps.iter().map(|&(_, mu, v)| mu + opts.span_sd * v.sqrt()).fold(f64::NEG_INFINITY, f64::max);
    let log_density = |x: f64| {
        log_sum_exp(comps.iter().map(|&(w, mu, v)| w.ln() - 0.5 * (2.0 * std::f64::consts::PI * v).ln() - (x - mu).powi(2) / (2.0 * v)))
    };
    let rule = legendre()?;
    let est = |panels: usize| {
        composite(&rule, lo, hi, panels).into_iter().map(|(x, w)| w * plogp(log_density(x))).sum::<f64>() / std::f64::consts::LN_2
    };
    adaptive(est, opts)
}

/// 2-D components: weight, mean, covariance.
type Component2 = (f64, [f64; 2], Matrix2<f64>);

/// Differential entropy (bits) of a 2-D Gaussian mixture.
///
/// Integrates in coordinates whitened by the overall mixture covariance.
pub fn mixture_entropy_2d(comps: &[Component2], opts: &QuadratureOptions) -> Result<Quadrature> {
    let comps: Vec<Component2> = comps.iter().copied().filter(|c| c.0 > 0.0).collect();
    let total: f64 = comps.iter().map(|c| c.0).sum();
    if comps.is_empty() || !(total > 0.0) {
        return Err(domain("mixture needs a positive weight"));
    }
    for c in &comps {
        if c.2.cholesky().is_none() {
            return Err(domain("mixture component covariance must be positive definite"));
        }
    }
    if let [(_, _, c)] = comps[..] {
        check_opts(opts)?;
        return Ok(Quadrature { value: LOG2_2PIE + 0.5 * c.determinant().log2(), panels: 0, converged: true });
    }
    let mean = comps.iter().fold([0.0; 2], |acc, (w, mu, _)| [acc[0] + w * mu[0] / total, acc[1] + w * mu[1] / total]);
    let mut pooled = Matrix2::zeros();
    for (w, mu, c) in &comps {
        let d = Vector2::new(mu[0] - mean[0], mu[1] - mean[1]);
        pooled += (c + d * d.transpose()) * (w / total);
    }
    let l = pooled.cholesky().ok_or_else(|| domain("degenerate mixture covariance"))?.l();
    let l_inv = l.try_inverse().ok_or_else(|| domain("degenerate mixture covariance"))?;
    let mut prepared = Vec::with_capacity(comps.len());
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for (w, mu, c) in &comps {
        let m = l_inv * Vector2::new(mu[0] - mean[0], mu[1] - mean[1]);
        let cw = l_inv * c * l_inv.transpose();
        for i in 0..2 {
            let sd = cw[(i, i)].sqrt();
            lo[i] = lo[i].min(m[i] - opts.span_sd * sd);
            hi[i] = hi[i].max(m[i] + opts.span_sd * sd);
        }
        let inv = cw.try_inverse().ok_or_else(|| domain("singular mixture component"))?;
        let log_norm = (w / total).ln() - (2.0 * std::f64::consts::PI).ln() - 0.5 * cw.determinant().ln();
        prepared.push((m, inv, log_norm));
    }
    let log_density = |t: Vector2<f64>| log_sum_exp(prepared.iter().map(|(m, inv, ln)| {
        let d = t - m;
        ln - 0.5 * (d.transpose() * inv * d)[(0, 0)]
    }));
    let rule = legendre()?;
    let est = |panels: usize| {
        let xs = composite(&rule, lo[0], hi[0], panels);
        let ys = composite(&rule, lo[1], hi[1], panels);
        let mut h = 0.0;
        for &(x, wx) in &xs {
            for &(y, wy) in &ys {
                h += wx * wy * plogp(log_density(Vector2::new(x, y)));
            }
        }
        h / std::f64::consts::LN_2
    };
    let opts_2d = QuadratureOptions { max_panels: opts.max_panels.min(opts.max_panels_2d).max(opts.start_panels), ..*opts };
    let mut q = adaptive(est, &opts_2d)?;
    q.value += l.determinant().log2();
    Ok(q)
}

fn gaussian_entropy_bits(var: f64) -> f64 {
    0.5 * (LOG2_2PIE + var.log2())
}

/// `U = c X + E` with `E ~ N(0, var_e)` independent of everything else.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UCoupling {
    pub c: f64,
    pub var_e: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeResult {
    /// Right side minus left side.
    pub gap: f64,
    pub left: f64,
    pub right: f64,
    pub converged: bool,
}

/// Conditional worst-noise inequality with a mixture `X` and the Gaussian
/// pair matched to the exact covariance of `(Z, X + Z, U)`.
pub fn lemma1_inequality_probe(
    x: &Mixture1D,
    coupling: UCoupling,
    var_z: f64,
    opts: &QuadratureOptions,
) -> Result<ProbeResult> {
    if !(var_z > 0.0) || !(coupling.var_e >= 0.0) {
        return Err(domain("need Var(Z) > 0 and Var(E) >= 0"));
    }
    let var_x = x.variance();
    let var_u = coupling.c * coupling.c * var_x + coupling.var_e;
    let triple = GaussianTriple::from_parts(var_x, var_z, var_u, coupling.c * var_x)?;
    let right = gaussian_side(triple.var_x_given_u(), var_z);
    let (left, converged) = if coupling.c == 0.0 {
        let a = mixture_entropy_1d(x, opts)?;
        let b = mixture_entropy_1d(&x.convolved(var_z), opts)?;
        (a.value - b.value, a.converged && b.converged)
    } else {
        if !(coupling.var_e > 0.0) {
            return Err(domain("U = cX without noise makes X deterministic given U"));
        }
        let c = coupling.c;
        let build = |noise: f64| -> Vec<Component2> {
            x.weights
                .iter()
                .zip(&x.means)
                .zip(&x.variances)
                .map(|((w, m), v)| {
                    (*w, [*m, c * m], Matrix2::new(v + noise, c * v, c * v, c * c * v + coupling.var_e))
                })
                .collect()
        };
        let a = mixture_entropy_2d(&build(0.0), opts)?;
        let b = mixture_entropy_2d(&build(var_z), opts)?;
        (a.value - b.value, a.converged && b.converged)
    };
    Ok(ProbeResult { gap: right - left, left, right, converged })
}

/// Gaussian instance of the two-signal inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma2Instance {
    pub var_x: f64,
    pub var_y: f64,
    pub cov_xy: f64,
    pub var_z: f64,
    pub var_w: f64,
    pub cov_zw: f64,
    pub var_v: f64,
}

impl Lemma2Instance {
    pub fn var_z_minus_w(&self) -> f64 {
        self.var_z + self.var_w - 2.0 * self.cov_zw
    }
}

/// Right minus left side of the two-signal inequality for Gaussian `X, Y`.
pub fn lemma2_gap(s: &Lemma2Instance) -> Result<f64> {
    let dzw = s.var_z_minus_w();
    if s.var_v < dzw - 1e-12 * (1.0 + dzw.abs()) {
        return Err(domain(format!("need var(V) >= var(Z-W), got {} < {}", s.var_v, dzw)));
    }
    if s.cov_xy.powi(2) > s.var_x * s.var_y * (1.0 + 1e-12) || s.cov_zw.powi(2) > s.var_z * s.var_w * (1.0 + 1e-12) {
        return Err(invalid("pair covariances must be positive semidefinite"));
    }
    let mut cov = DMatrix::zeros(4, 4);
    cov[(0, 0)] = s.var_x;
    cov[(1, 1)] = s.var_y;
    cov[(0, 1)] = s.cov_xy;
    cov[(1, 0)] = s.cov_xy;
    cov[(2, 2)] = s.var_z;
    cov[(3, 3)] = s.var_w;
    cov[(2, 3)] = s.cov_zw;
    cov[(3, 2)] = s.cov_zw;
    let mut m = GaussianModel::new(cov, SignalKind::Real)?;
    let v = m.add_independent(s.var_v);
    let vt = m.add_independent((s.var_v - dzw).max(0.0));
    let (x, y, z, w) = (Lin::atom(0), Lin::atom(1), Lin::atom(2), Lin::atom(3));
    let xyz = &(&x + &y) + &z;
    let yw = &y + &w;
    let given: Vec<&Lin> = if m.var(&yw) > 0.0 { vec![&yw] } else { vec![] };
    let left = m.conditional_entropy(&[&xyz], &given) - m.entropy(&[&(&x + &v)]);
    let right = m.conditional_entropy(&[&xyz], &given) - m.conditional_entropy(&[&(&xyz + &vt)], &given);
    Ok(right - left)
}

/// Right minus left of `h(X+W) - h(X+Z) <= h(Xg+W) - h(Xg+Z)` for a mixture `X`.
pub fn corollary7_gap(var_w: f64, var_z: f64, cov_wz: f64, x: &Mixture1D, opts: &QuadratureOptions) -> Result<ProbeResult> {
    if !(var_w >= 0.0 && var_z > 0.0) || var_z < var_w {
        return Err(domain(format!("need var(Z) >= var(W), got {var_z} < {var_w}")));
    }
    if cov_wz.powi(2) > var_w * var_z * (1.0 + 1e-12) {
        return Err(invalid("W, Z covariance must be positive semidefinite"));
    }
    let var_x = x.variance();
    let right = gaussian_entropy_bits(var_x + var_w) - gaussian_entropy_bits(var_x + var_z);
    let a = mixture_entropy_1d(&x.convolved(var_w), opts)?;
    let b = mixture_entropy_1d(&x.convolved(var_z), opts)?;
    let left = a.value - b.value;
    Ok(ProbeResult { gap: right - left, left, right, converged: a.converged && b.converged })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BatteryReport {
    pub instances: usize,
    pub min_gap: f64,
    pub max_abs_gaussian_residual: f64,
    pub unconverged: usize,
}

fn random_mixture(rng: &mut ChaCha8Rng) -> Result<Mixture1D> {
    let w = rng.gen_range(0.1..0.9);
    let mu1 = rng.gen_range(-3.0..3.0);
    let mu2 = rng.gen_range(-3.0..3.0);
    Mixture1D::new(vec![w, 1.0 - w], vec![mu1, mu2], vec![rng.gen_range(0.2..2.0), rng.gen_range(0.2..2.0)])
}

/// Randomized mixture probes of the conditional lemma, plus Gaussian residuals.
pub fn lemma1_battery(instances: usize, seed: u64, opts: &QuadratureOptions) -> Result<BatteryReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = BatteryReport { instances, min_gap: f64::INFINITY, max_abs_gaussian_residual: 0.0, unconverged: 0 };
    for _ in 0..instances {
        let x = random_mixture(&mut rng)?;
        let var_z = rng.gen_range(0.1..3.0);
        let coupling = if rng.gen_bool(0.25) {
            UCoupling { c: 0.0, var_e: 1.0 }
        } else {
            UCoupling { c: rng.gen_range(-1.5..1.5), var_e: rng.gen_range(0.2..2.0) }
        };
        let t = GaussianTriple::from_parts(x.variance(), var_z, coupling.c.powi(2) * x.variance() + coupling.var_e, coupling.c * x.variance())?;
        rep.max_abs_gaussian_residual = rep.max_abs_gaussian_residual.max(lemma1_gap(&t)?.abs());
        let probe = lemma1_inequality_probe(&x, coupling, var_z, opts)?;
        if probe.converged {
            rep.min_gap = rep.min_gap.min(probe.gap);
        } else {
            rep.unconverged += 1;
        }
    }
    Ok(rep)
}

/// Randomized Gaussian instances of the two-signal lemma.
pub fn lemma2_battery(instances: usize, seed: u64) -> Result<BatteryReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = BatteryReport { instances, min_gap: f64::INFINITY, max_abs_gaussian_residual: 0.0, unconverged: 0 };
    for _ in 0..instances {
        let (var_x, var_y) = (rng.gen_range(0.1..5.0), rng.gen_range(0.0..5.0));
        let (var_z, var_w) = (rng.gen_range(0.1..2.0), rng.gen_range(0.0..2.0));
        let rxy: f64 = rng.gen_range(-0.95..0.95);
        let rzw: f64 = rng.gen_range(-0.95..0.95);
        let mut s = Lemma2Instance {
            var_x,
            var_y,
            cov_xy: rxy * (var_x * var_y).sqrt(),
            var_z,
            var_w,
            cov_zw: rzw * (var_z * var_w).sqrt(),
            var_v: 0.0,
        };
        s.var_v = s.var_z_minus_w() + rng.gen_range(0.0..2.0);
        rep.min_gap = rep.min_gap.min(lemma2_gap(&s)?);
        let eq = Lemma2Instance { var_y: 0.0, cov_xy: 0.0, var_w: 0.0, cov_zw: 0.0, var_v: s.var_z, ..s };
        rep.max_abs_gaussian_residual = rep.max_abs_gaussian_residual.max(lemma2_gap(&eq)?.abs());
    }
    Ok(rep)
}

/// Randomized mixture probes of the unconditional corollary, plus Gaussian residuals.
pub fn corollary7_battery(instances: usize, seed: u64, opts: &QuadratureOptions) -> Result<BatteryReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = BatteryReport { instances, min_gap: f64::INFINITY, max_abs_gaussian_residual: 0.0, unconverged: 0 };
    for _ in 0..instances {
        let x = random_mixture(&mut rng)?;
        let var_z: f64 = rng.gen_range(0.1..3.0);
        let var_w = var_z * rng.gen_range(0.0..1.0);
        let cov = rng.gen_range(-1.0..1.0) * (var_w * var_z).sqrt();
        let g = Mixture1D::new(vec![1.0], vec![x.mean()], vec![x.variance()])?;
        let eq = corollary7_gap(var_w, var_z, cov, &g, opts)?;
        rep.max_abs_gaussian_residual = rep.max_abs_gaussian_residual.max(eq.gap.abs());
        let probe = corollary7_gap(var_w, var_z, cov, &x, opts)?;
        if probe.converged {
            rep.min_gap = rep.min_gap.min(probe.gap);
        } else {
            rep.unconverged += 1;
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use gauss_quad::Simpson;
    use proptest::prelude::*;

    fn simpson_entropy(m: &Mixture1D) -> f64 {
        let sd = m.variance().sqrt();
        let mu = m.mean();
        let lo = mu - 10.0 * sd - m.means.iter().map(|x| (x - mu).abs()).fold(0.0, f64::max);
        let hi = 2.0 * mu - lo;
        let f = |x: f64| -> f64 {
            m.weights
                .iter()
                .zip(&m.means)
                .zip(&m.variances)
                .map(|((w, mu), v)| w * (-(x - mu).powi(2) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt())
                .sum()
        };
        let rule = Simpson::new(20000).unwrap();
        rule.integrate(lo, hi, |x| {
            let p = f(x);
            if p > 0.0 {
                -p * p.log2()
            } else {
                0.0
            }
        })
    }

    #[test]
    fn gaussian_triples_close() {
        let t = GaussianTriple::from_parts(2.0, 0.7, 1.5, 0.9).unwrap();
        assert!(lemma1_gap(&t).unwrap().abs() < 1e-10);
        let ind = GaussianTriple::from_parts(2.0, 0.7, 1.5, 0.0).unwrap();
        assert!(lemma1_gap(&ind).unwrap().abs() < 1e-10);
        let degenerate_u = GaussianTriple::from_parts(2.0, 0.7, 0.0, 0.0).unwrap();
        assert!(lemma1_gap(&degenerate_u).unwrap().abs() < 1e-10);
        let tiny = GaussianTriple::from_parts(2.0, 1e-9, 1.5, 0.9).unwrap();
        assert!(lemma1_gap(&tiny).unwrap().abs() < 1e-10);
        assert!(gaussian_side(1.0, 1e-12).abs() < 1e-11);
        assert!(GaussianTriple::new([[1.0, 0.5, 0.0], [0.5, 2.0, 0.0], [0.0, 0.0, 1.0]]).is_err());
    }

    #[test]
    fn entropy_quadrature_matches_simpson() {
        let opts = QuadratureOptions::default();
        for m in [Mixture1D::symmetric(2.0, 1.0).unwrap(), Mixture1D::new(vec![0.3, 0.7], vec![-1.0, 2.5], vec![0.4, 1.3]).unwrap()] {
            let q = mixture_entropy_1d(&m, &opts).unwrap();
            assert!(q.converged);
            assert!((q.value - simpson_entropy(&m)).abs() < 1e-7, "{} vs {}", q.value, simpson_entropy(&m));
        }
        let g = Mixture1D::new(vec![1.0], vec![0.3], vec![2.0]).unwrap();
        assert!((mixture_entropy_1d(&g, &opts).unwrap().value - gaussian_entropy_bits(2.0)).abs() < 1e-12);
    }

    #[test]
    fn two_dimensional_gaussian_entropy_exact() {
        let c = Matrix2::new(2.0, 0.6, 0.6, 1.0);
        let q = mixture_entropy_2d(&[(1.0, [0.0, 1.0], c)], &QuadratureOptions::default()).unwrap();
        let exact = LOG2_2PIE + 0.5 * c.determinant().log2();
        assert!((q.value - exact).abs() < 1e-10);
    }

    #[test]
    fn lemma1_probe_examples() {
        let opts = QuadratureOptions::default();
        let gauss = Mixture1D::new(vec![1.0, 0.0], vec![0.0, 3.0], vec![1.0, 1.0]).unwrap();
        let r = lemma1_inequality_probe(&gauss, UCoupling { c: 0.7, var_e: 0.5 }, 1.0, &opts).unwrap();
        assert!(r.converged && r.gap.abs() < 1e-8);
        let mix = Mixture1D::symmetric(2.0, 0.25).unwrap();
        let r = lemma1_inequality_probe(&mix, UCoupling { c: 0.0, var_e: 1.0 }, 1.0, &opts).unwrap();
        let oracle = gaussian_side(mix.variance(), 1.0) - (simpson_entropy(&mix) - simpson_entropy(&mix.convolved(1.0)));
        assert!(r.gap > 1e-3 && (r.gap - oracle).abs() < 1e-6);
        let collapsed = Mixture1D::symmetric(1e-4, 1.0).unwrap();
        let r = lemma1_inequality_probe(&collapsed, UCoupling { c: 0.5, var_e: 1.0 }, 1.0, &opts).unwrap();
        assert!(r.gap.abs() < 1e-7);
        let coupled = lemma1_inequality_probe(&mix, UCoupling { c: 0.8, var_e: 0.3 }, 0.5, &opts).unwrap();
        assert!(coupled.converged && coupled.gap >= -1e-6);
    }

    #[test]
    fn lemma2_examples() {
        let base = Lemma2Instance { var_x: 1.3, var_y: 0.0, cov_xy: 0.0, var_z: 1.0, var_w: 0.0, cov_zw: 0.0, var_v: 1.0 };
        assert!(lemma2_gap(&base).unwrap().abs() < 1e-12);
        let t = GaussianTriple::from_parts(1.3, 1.0, 1.0, 0.0).unwrap();
        assert!((lemma2_gap(&base).unwrap() - lemma1_gap(&t).unwrap()).abs() < 1e-10);
        let ind = Lemma2Instance { var_w: 1.0, var_v: 2.0, ..base };
        assert!((ind.var_z_minus_w() - 2.0).abs() < 1e-15);
        assert!(lemma2_gap(&ind).is_ok());
        assert!(lemma2_gap(&Lemma2Instance { var_v: 1.9, ..ind }).is_err());
    }

    #[test]
    fn corollary7_examples() {
        let opts = QuadratureOptions::default();
        let g = Mixture1D::new(vec![1.0], vec![0.0], vec![1.5]).unwrap();
        assert!(corollary7_gap(0.25, 1.0, 0.2, &g, &opts).unwrap().gap.abs() < 1e-12);
        let mix = Mixture1D::symmetric(2.0, 0.3).unwrap();
        assert!(corollary7_gap(1.0, 1.0, 1.0, &mix, &opts).unwrap().gap.abs() < 1e-12);
        let r = corollary7_gap(0.25, 1.0, 0.0, &mix, &opts).unwrap();
        let oracle = (gaussian_entropy_bits(mix.variance() + 0.25) - gaussian_entropy_bits(mix.variance() + 1.0))
            - (simpson_entropy(&mix.convolved(0.25)) - simpson_entropy(&mix.convolved(1.0)));
        assert!(r.gap > 1e-3 && (r.gap - oracle).abs() < 1e-6);
        assert!(corollary7_gap(1.0, 0.5, 0.0, &mix, &opts).is_err());
    }

    #[test]
    fn batteries() {
        let opts = QuadratureOptions::default();
        let a = lemma1_battery(20, 3, &opts).unwrap();
        assert!(a.min_gap >= -1e-6 && a.max_abs_gaussian_residual <= 1e-9);
        let b = lemma2_battery(10_000, 4).unwrap();
        assert!(b.min_gap >= -1e-9 && b.max_abs_gaussian_residual <= 1e-9);
        let c = corollary7_battery(20, 5, &opts).unwrap();
        assert!(c.min_gap >= -1e-6 && c.max_abs_gaussian_residual <= 1e-9);
    }

    proptest! {
        #[test]
        fn lemma1_gaussian_residual_vanishes(vx in 0.01..10.0f64, vz in 0.01..10.0f64, vu in 0.01..10.0f64, r in -0.99..0.99f64) {
            let t = GaussianTriple::from_parts(vx, vz, vu, r * (vx * vu).sqrt()).unwrap();
            prop_assert!(lemma1_gap(&t).unwrap().abs() < 1e-9);
        }
    }
}

//! Channel and genie data model plus the jointly Gaussian entropy engine.
//!
//! All entropies are in bits. A [`GaussianModel`] is a set of jointly Gaussian
//! "atoms" with a known covariance; every signal of interest is a linear
//! combination of atoms, so any (conditional) entropy reduces to a log-det.

use std::f64::consts::{E, PI};
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};

/// Rounding slack used when clamping Schur complements and checking boxes.
pub const CLAMP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalKind {
    #[default]
    Real,
    Complex,
}

impl SignalKind {
    /// Multiplier in front of `log2` of a variance (½ for real, 1 for complex).
    pub fn prelog(self) -> f64 {
        match self {
            SignalKind::Real => 0.5,
            SignalKind::Complex => 1.0,
        }
    }

    fn entropy_base(self) -> f64 {
        match self {
            SignalKind::Real => 2.0 * PI * E,
            SignalKind::Complex => PI * E,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub p1: f64,
    pub p2: f64,
    pub h12: f64,
    pub h21: f64,
    pub kind: SignalKind,
}

impl ChannelParams {
    pub fn new(p1: f64, p2: f64, h12: f64, h21: f64, kind: SignalKind) -> Result<Self> {
        for (name, p) in [("p1", p1), ("p2", p2)] {
            if !(p.is_finite() && p > 0.0) {
                return Err(invalid(format!("{name} must be a positive finite power, got {p}")));
            }
        }
        for (name, h) in [("h12", h12), ("h21", h21)] {
            if !h.is_finite() {
                return Err(invalid(format!("{name} must be finite, got {h}")));
            }
        }
        Ok(Self { p1, p2, h12, h21, kind })
    }

    /// Equal powers `p` and equal cross gains `g`.
    pub fn symmetric(p: f64, g: f64, kind: SignalKind) -> Result<Self> {
        Self::new(p, p, g, g, kind)
    }

    pub fn symmetric_real(p: f64, g: f64) -> Result<Self> {
        Self::symmetric(p, g, SignalKind::Real)
    }

    /// Interference-to-noise ratio at receiver 1, `|h12|^2 P2`.
    pub fn inr1(&self) -> f64 {
        self.h12 * self.h12 * self.p2
    }

    /// Interference-to-noise ratio at receiver 2, `|h21|^2 P1`.
    pub fn inr2(&self) -> f64 {
        self.h21 * self.h21 * self.p1
    }

    pub fn is_weak(&self) -> bool {
        self.h12 * self.h12 <= 1.0 && self.h21 * self.h21 <= 1.0
    }

    pub fn require_weak(&self) -> Result<()> {
        if self.is_weak() {
            Ok(())
        } else {
            Err(domain(format!(
                "weak interference required (|h12|^2 = {}, |h21|^2 = {})",
                self.h12 * self.h12,
                self.h21 * self.h21
            )))
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.p1 == self.p2 && self.h12 == self.h21
    }

    /// The same channel with user indices exchanged.
    pub fn swapped(&self) -> Self {
        Self { p1: self.p2, p2: self.p1, h12: self.h21, h21: self.h12, kind: self.kind }
    }
}

/// Genie noise parameters: std-devs of `N_i`, `W_i` and their correlations with `Z_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenieParams {
    pub sigma_n1: f64,
    pub sigma_n2: f64,
    pub sigma_w1: f64,
    pub sigma_w2: f64,
    pub rho_n1: f64,
    pub rho_n2: f64,
    pub rho_w1: f64,
    pub rho_w2: f64,
}

impl Default for GenieParams {
    fn default() -> Self {
        Self::unit()
    }
}

impl GenieParams {
    /// Unit-variance genie noises uncorrelated with the receiver noise.
    pub fn unit() -> Self {
        Self::from_array([1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0])
    }

    /// Field order: `sigma_n1, sigma_n2, sigma_w1, sigma_w2, rho_n1, rho_n2, rho_w1, rho_w2`.
    pub fn to_array(&self) -> [f64; 8] {
        [
            self.sigma_n1,
            self.sigma_n2,
            self.sigma_w1,
            self.sigma_w2,
            self.rho_n1,
            self.rho_n2,
            self.rho_w1,
            self.rho_w2,
        ]
    }

    pub fn from_array(a: [f64; 8]) -> Self {
        Self {
            sigma_n1: a[0],
            sigma_n2: a[1],
            sigma_w1: a[2],
            sigma_w2: a[3],
            rho_n1: a[4],
            rho_n2: a[5],
            rho_w1: a[6],
            rho_w2: a[7],
        }
    }

    pub fn in_box(&self) -> bool {
        let a = self.to_array();
        a[..4].iter().all(|s| s.is_finite() && *s >= -CLAMP_TOL && *s <= 1.0 + CLAMP_TOL)
            && a[4..].iter().all(|r| r.is_finite() && r.abs() <= 1.0 + CLAMP_TOL)
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_box() {
            Ok(())
        } else {
            Err(invalid(format!("genie parameters outside [0,1]^4 x [-1,1]^4: {self:?}")))
        }
    }

    /// Exchange user indices (`N1 <-> N2`, `W1 <-> W2`).
    pub fn swapped(&self) -> Self {
        Self {
            sigma_n1: self.sigma_n2,
            sigma_n2: self.sigma_n1,
            sigma_w1: self.sigma_w2,
            sigma_w2: self.sigma_w1,
            rho_n1: self.rho_n2,
            rho_n2: self.rho_n1,
            rho_w1: self.rho_w2,
            rho_w2: self.rho_w1,
        }
    }
}

/// Variances derived from a genie parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedNoise {
    /// `Var(Z_i | N_i) = 1 - rho_Ni^2`.
    pub var_v_n1: f64,
    pub var_v_n2: f64,
    /// `Var(W_i | Z_i - W_i)`.
    pub var_v_w1: f64,
    pub var_v_w2: f64,
    pub var_z_minus_w1: f64,
    pub var_z_minus_w2: f64,
    /// `Var(Z1 - N1/h21)`.
    pub var_z1_minus_hinv_n1: f64,
    /// `Var(Z2 - N2/h12)`.
    pub var_z2_minus_hinv_n2: f64,
    /// `Z_i - W_i` is (numerically) deterministic.
    pub degenerate_w1: bool,
    pub degenerate_w2: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoundId {
    Etw,
    KramerSym,
    Thm3,
    Thm4,
    Thm4Swapped,
    Thm5,
    Thm5Swapped,
    Thm6Simplified,
    Cor1RBar,
    RSymStar,
    BestUpper,
    Thm9,
    Thm9Swapped,
    Thm10,
    Thm10Swapped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub value: f64,
    pub achieving_params: Option<GenieParams>,
    pub feasible: bool,
    pub bound_id: BoundId,
    pub channel: ChannelParams,
    /// For a pointwise minimum of several bounds, the one that attained it.
    pub attained_by: Option<BoundId>,
}

impl BoundResult {
    pub fn feasible(bound_id: BoundId, channel: ChannelParams, value: f64, k: Option<GenieParams>) -> Self {
        Self { value, achieving_params: k, feasible: true, bound_id, channel, attained_by: None }
    }

    pub fn infeasible(bound_id: BoundId, channel: ChannelParams, k: Option<GenieParams>) -> Self {
        Self {
            value: f64::INFINITY,
            achieving_params: k,
            feasible: false,
            bound_id,
            channel,
            attained_by: None,
        }
    }
}

/// Differential entropy of a scalar Gaussian with the given variance.
pub fn gaussian_entropy(variance: f64, kind: SignalKind) -> Result<f64> {
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(domain(format!("entropy needs a positive variance, got {variance}")));
    }
    Ok(kind.prelog() * (kind.entropy_base() * variance).log2())
}

/// Schur complement `var_a - |cov_ab|^2 / var_b`, clamped at zero.
pub fn conditional_variance(var_a: f64, var_b: f64, cov_ab: f64) -> Result<f64> {
    if !(var_b > 0.0) {
        return Err(domain(format!("conditioning variance must be positive, got {var_b}")));
    }
    let c2 = cov_ab * cov_ab;
    if c2 > var_a * var_b + CLAMP_TOL * (1.0 + var_a * var_b) {
        return Err(invalid(format!(
            "covariance {cov_ab} exceeds the Cauchy-Schwarz limit for variances {var_a}, {var_b}"
        )));
    }
    Ok((var_a - c2 / var_b).max(0.0))
}

pub fn derive_noise(ch: &ChannelParams, k: &GenieParams) -> Result<DerivedNoise> {
    k.validate()?;
    if ch.h12 == 0.0 || ch.h21 == 0.0 {
        return Err(domain("zero cross gain: h^-1 noise terms are undefined"));
    }
    let var_z_minus = |s: f64, r: f64| (1.0 + s * s - 2.0 * r * s).max(0.0);
    let zw1 = var_z_minus(k.sigma_w1, k.rho_w1);
    let zw2 = var_z_minus(k.sigma_w2, k.rho_w2);
    let v_w = |s: f64, r: f64, zw: f64| {
        if zw <= CLAMP_TOL {
            (s * s, true)
        } else {
            ((s * s * (1.0 - r * r) / zw).max(0.0), false)
        }
    };
    let (vw1, deg1) = v_w(k.sigma_w1, k.rho_w1, zw1);
    let (vw2, deg2) = v_w(k.sigma_w2, k.rho_w2, zw2);
    let z_minus_hinv_n = |h: f64, s: f64, r: f64| (1.0 + s * s / (h * h) - 2.0 * r * s / h).max(0.0);
    Ok(DerivedNoise {
        var_v_n1: (1.0 - k.rho_n1 * k.rho_n1).max(0.0),
        var_v_n2: (1.0 - k.rho_n2 * k.rho_n2).max(0.0),
        var_v_w1: vw1,
        var_v_w2: vw2,
        var_z_minus_w1: zw1,
        var_z_minus_w2: zw2,
        var_z1_minus_hinv_n1: z_minus_hinv_n(ch.h21, k.sigma_n1, k.rho_n1),
        var_z2_minus_hinv_n2: z_minus_hinv_n(ch.h12, k.sigma_n2, k.rho_n2),
        degenerate_w1: deg1,
        degenerate_w2: deg2,
    })
}

/// Coefficient vector of a linear combination of model atoms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Lin(Vec<f64>);

impl Lin {
    pub fn atom(index: usize) -> Self {
        let mut v = vec![0.0; index + 1];
        v[index] = 1.0;
        Lin(v)
    }

    pub fn coeff(&self, index: usize) -> f64 {
        self.0.get(index).copied().unwrap_or(0.0)
    }

    fn len(&self) -> usize {
        self.0.len()
    }
}

impl Add for &Lin {
    type Output = Lin;
    fn add(self, rhs: &Lin) -> Lin {
        let n = self.len().max(rhs.len());
        Lin((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl Sub for &Lin {
    type Output = Lin;
    fn sub(self, rhs: &Lin) -> Lin {
        let n = self.len().max(rhs.len());
        Lin((0..n).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl Mul<&Lin> for f64 {
    type Output = Lin;
    fn mul(self, rhs: &Lin) -> Lin {
        Lin(rhs.0.iter().map(|c| self * c).collect())
    }
}

/// Jointly Gaussian atoms with a fixed covariance matrix.
#[derive(Debug, Clone)]
pub struct GaussianModel {
    cov: DMatrix<f64>,
    kind: SignalKind,
}

impl GaussianModel {
    pub fn new(cov: DMatrix<f64>, kind: SignalKind) -> Result<Self> {
        if !cov.is_square() {
            return Err(invalid("atom covariance must be square"));
        }
        let n = cov.nrows();
        for i in 0..n {
            for j in 0..n {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 * (1.0 + cov[(i, j)].abs()) {
                    return Err(invalid("atom covariance must be symmetric"));
                }
            }
        }
        Ok(Self { cov, kind })
    }

    pub fn kind(&self) -> SignalKind {
        self.kind
    }

    pub fn atoms(&self) -> usize {
        self.cov.nrows()
    }

    /// Append an atom independent of all others.
    pub fn add_independent(&mut self, variance: f64) -> Lin {
        let n = self.atoms();
        let mut cov = DMatrix::zeros(n + 1, n + 1);
        cov.view_mut((0, 0), (n, n)).copy_from(&self.cov);
        cov[(n, n)] = variance.max(0.0);
        self.cov = cov;
        Lin::atom(n)
    }

    pub fn covariance(&self, vars: &[&Lin]) -> DMatrix<f64> {
        let n = self.atoms();
        let mut a = DMatrix::zeros(vars.len(), n);
        for (r, v) in vars.iter().enumerate() {
            for c in 0..n {
                a[(r, c)] = v.coeff(c);
            }
        }
        &a * &self.cov * a.transpose()
    }

    pub fn cov(&self, x: &Lin, y: &Lin) -> f64 {
        self.covariance(&[x, y])[(0, 1)]
    }

    pub fn var(&self, x: &Lin) -> f64 {
        self.covariance(&[x])[(0, 0)]
    }

    /// Covariance of `target` given `given`; degenerate directions of `given` are dropped.
    pub fn conditional_covariance(&self, target: &[&Lin], given: &[&Lin]) -> DMatrix<f64> {
        let mut all: Vec<&Lin> = target.to_vec();
        all.extend_from_slice(given);
        let k = self.covariance(&all);
        let t = target.len();
        let g = given.len();
        let ktt = k.view((0, 0), (t, t)).into_owned();
        if g == 0 {
            return ktt;
        }
        let ktg = k.view((0, t), (t, g)).into_owned();
        let kgg = k.view((t, t), (g, g)).into_owned();
        let scale = (0..g).map(|i| kgg[(i, i)].abs()).fold(0.0, f64::max).max(1.0);
        let pinv = kgg.pseudo_inverse(1e-13 * scale).unwrap_or_else(|_| DMatrix::zeros(g, g));
        let mut c = ktt - &ktg * pinv * ktg.transpose();
        for i in 0..t {
            for j in 0..t {
                let s = 0.5 * (c[(i, j)] + c[(j, i)]);
                c[(i, j)] = s;
                c[(j, i)] = s;
            }
        }
        c
    }

    pub fn entropy(&self, vars: &[&Lin]) -> f64 {
        log_det_entropy(&self.covariance(vars), self.kind)
    }

    pub fn conditional_entropy(&self, target: &[&Lin], given: &[&Lin]) -> f64 {
        log_det_entropy(&self.conditional_covariance(target, given), self.kind)
    }

    pub fn mutual_information(&self, a: &[&Lin], b: &[&Lin]) -> f64 {
        let ha = log_det_entropy(&self.covariance(a), self.kind);
        ha - self.conditional_entropy(a, b)
    }
}

/// Entropy (bits) of a Gaussian vector with covariance `cov`; `-inf` when singular.
pub fn log_det_entropy(cov: &DMatrix<f64>, kind: SignalKind) -> f64 {
    let n = cov.nrows();
    if n == 0 {
        return 0.0;
    }
    let Some(ch) = cov.clone().cholesky() else {
        return f64::NEG_INFINITY;
    };
    let l = ch.l();
    let mut log_det = 0.0;
    for i in 0..n {
        let d = l[(i, i)];
        if !(d > 0.0) {
            return f64::NEG_INFINITY;
        }
        log_det += 2.0 * d.log2();
    }
    kind.prelog() * (n as f64 * kind.entropy_base().log2() + log_det)
}

/// Named Gaussian surrogates of the channel and genie signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Surrogate {
    X1,
    X2,
    Z1,
    Z2,
    N1,
    N2,
    W1,
    W2,
    /// Unit-variance genie noise independent of everything (outer-bound genie).
    N1Unit,
    N2Unit,
    Y1,
    Y2,
    S1,
    S2,
    U1,
    U2,
    /// `h21 X1 + N1'`.
    S1Unit,
    /// `h12 X2 + N2'`.
    S2Unit,
}

/// Second moments of the Gaussian surrogates for a channel and genie choice.
#[derive(Debug, Clone)]
pub struct CovarianceTable {
    model: GaussianModel,
    ch: ChannelParams,
}

impl CovarianceTable {
    pub fn lin(&self, s: Surrogate) -> Lin {
        use Surrogate::*;
        let (h12, h21) = (self.ch.h12, self.ch.h21);
        let at = |s: Surrogate| Lin::atom(s as usize);
        match s {
            X1 | X2 | Z1 | Z2 | N1 | N2 | W1 | W2 | N1Unit | N2Unit => at(s),
            Y1 => &(&at(X1) + &(h12 * &at(X2))) + &at(Z1),
            Y2 => &(&(h21 * &at(X1)) + &at(X2)) + &at(Z2),
            S1 => &(h21 * &at(X1)) + &at(N1),
            S2 => &(h12 * &at(X2)) + &at(N2),
            U1 => &(h12 * &at(X2)) + &at(W1),
            U2 => &(h21 * &at(X1)) + &at(W2),
            S1Unit => &(h21 * &at(X1)) + &at(N1Unit),
            S2Unit => &(h12 * &at(X2)) + &at(N2Unit),
        }
    }

    pub fn var(&self, s: Surrogate) -> f64 {
        self.model.var(&self.lin(s))
    }

    pub fn cov(&self, a: Surrogate, b: Surrogate) -> f64 {
        self.model.cov(&self.lin(a), &self.lin(b))
    }

    pub fn model(&self) -> &GaussianModel {
        &self.model
    }

    pub fn into_model(self) -> GaussianModel {
        self.model
    }

    pub fn channel(&self) -> &ChannelParams {
        &self.ch
    }
}

/// Build the covariance table of all surrogates.
///
/// `N_i` and `W_i` are taken conditionally independent given `Z_i`, so
/// `Cov(N_i, W_i) = rho_Ni sigma_Ni rho_Wi sigma_Wi`.
pub fn gic_covariances(ch: &ChannelParams, k: &GenieParams) -> Result<CovarianceTable> {
    k.validate()?;
    use Surrogate::*;
    let mut cov = DMatrix::zeros(10, 10);
    let mut set = |a: Surrogate, b: Surrogate, v: f64| {
        cov[(a as usize, b as usize)] = v;
        cov[(b as usize, a as usize)] = v;
    };
    set(X1, X1, ch.p1);
    set(X2, X2, ch.p2);
    set(N1Unit, N1Unit, 1.0);
    set(N2Unit, N2Unit, 1.0);
    let users = [
        (Z1, N1, W1, k.sigma_n1, k.rho_n1, k.sigma_w1, k.rho_w1),
        (Z2, N2, W2, k.sigma_n2, k.rho_n2, k.sigma_w2, k.rho_w2),
    ];
    for (z, n, w, sn, rn, sw, rw) in users {
        set(z, z, 1.0);
        set(n, n, sn * sn);
        set(w, w, sw * sw);
        set(z, n, rn * sn);
        set(z, w, rw * sw);
        set(n, w, rn * sn * rw * sw);
    }
    Ok(CovarianceTable { model: GaussianModel::new(cov, ch.kind)?, ch: *ch })
}

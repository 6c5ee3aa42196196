//! Sum-rate upper bounds: closed forms and genie-parametrized bounds.
//!
//! Parametrized bounds are written in "complex" form (one `log2` per variance
//! ratio) and scaled by [`SignalKind::prelog`]; the averaged two-user bounds
//! carry an extra leading ½.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::gic_core::{
    derive_noise, BoundId, BoundResult, ChannelParams, DerivedNoise, GenieParams, SignalKind, CLAMP_TOL,
};
use crate::param_search::{minimize_bound, ParametrizedBound, SearchOptions};

/// Relative slack for feasibility inequalities (absorbs rounding at equality).
pub const FEAS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UpperBoundId {
    Etw,
    KramerSym,
    Thm3,
    Thm4,
    Thm5,
    Thm5Swapped,
    Thm6Simplified,
    Cor1RBar,
    RSymStar,
    BestUpper,
}

impl UpperBoundId {
    pub const ALL: [UpperBoundId; 10] = [
        UpperBoundId::Etw,
        UpperBoundId::KramerSym,
        UpperBoundId::Thm3,
        UpperBoundId::Thm4,
        UpperBoundId::Thm5,
        UpperBoundId::Thm5Swapped,
        UpperBoundId::Thm6Simplified,
        UpperBoundId::Cor1RBar,
        UpperBoundId::RSymStar,
        UpperBoundId::BestUpper,
    ];

    pub fn bound_id(self) -> BoundId {
        match self {
            UpperBoundId::Etw => BoundId::Etw,
            UpperBoundId::KramerSym => BoundId::KramerSym,
            UpperBoundId::Thm3 => BoundId::Thm3,
            UpperBoundId::Thm4 => BoundId::Thm4,
            UpperBoundId::Thm5 => BoundId::Thm5,
            UpperBoundId::Thm5Swapped => BoundId::Thm5Swapped,
            UpperBoundId::Thm6Simplified => BoundId::Thm6Simplified,
            UpperBoundId::Cor1RBar => BoundId::Cor1RBar,
            UpperBoundId::RSymStar => BoundId::RSymStar,
            UpperBoundId::BestUpper => BoundId::BestUpper,
        }
    }
}

/// A constraint `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Inequality {
    pub label: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

impl Inequality {
    pub fn holds(&self) -> bool {
        self.lhs.is_finite() && self.rhs.is_finite() && self.lhs <= self.rhs + FEAS_TOL * (1.0 + self.rhs.abs())
    }
}

/// Families of genie constraints, stated for the unswapped index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GenieFamily {
    /// Change-of-interference genies `U1, U2` (sum bound and the implicit region bound).
    ChangeOfInterference,
    /// Hybrid bound with `Ṽ_N1` and `Z̃1`.
    HybridA,
    /// Hybrid bound with `Z̃'1` and `Ṽ'_N1` (sum bound and the weighted region bound).
    HybridB,
}

fn box_violations(k: &GenieParams) -> Vec<Inequality> {
    let mut out = Vec::new();
    let labels_s = ["sigma_n1 in [0,1]", "sigma_n2 in [0,1]", "sigma_w1 in [0,1]", "sigma_w2 in [0,1]"];
    let labels_r = ["|rho_n1| <= 1", "|rho_n2| <= 1", "|rho_w1| <= 1", "|rho_w2| <= 1"];
    let a = k.to_array();
    for i in 0..4 {
        let s = a[i];
        if !(-CLAMP_TOL..=1.0 + CLAMP_TOL).contains(&s) {
            out.push(Inequality { label: labels_s[i], lhs: (s - 1.0).max(-s), rhs: 0.0 });
        }
        let r = a[4 + i];
        if !(r.abs() <= 1.0 + CLAMP_TOL) {
            out.push(Inequality { label: labels_r[i], lhs: r.abs() - 1.0, rhs: 0.0 });
        }
    }
    out
}

/// Every constraint of a genie family, satisfied or not.
pub fn genie_constraints(family: GenieFamily, ch: &ChannelParams, k: &GenieParams) -> Result<Vec<Inequality>> {
    let boxed = box_violations(k);
    if !boxed.is_empty() {
        return Ok(boxed);
    }
    let d = derive_noise(ch, k)?;
    let (h12s, h21s) = (ch.h12 * ch.h12, ch.h21 * ch.h21);
    let mut out = Vec::new();
    match family {
        GenieFamily::ChangeOfInterference => {
            out.push(Inequality { label: "|h12|^2 var(Z2-W2) <= var(V_W1)", lhs: h12s * d.var_z_minus_w2, rhs: d.var_v_w1 });
            out.push(Inequality { label: "|h21|^2 var(Z1-W1) <= var(V_W2)", lhs: h21s * d.var_z_minus_w1, rhs: d.var_v_w2 });
            out.push(Inequality { label: "var(Z1-W1) > 0", lhs: 1e-10, rhs: d.var_z_minus_w1 });
            out.push(Inequality { label: "var(Z2-W2) > 0", lhs: 1e-10, rhs: d.var_z_minus_w2 });
        }
        GenieFamily::HybridA | GenieFamily::HybridB => {
            let min_nw = (k.sigma_n1 * k.sigma_n1).min(k.sigma_w2 * k.sigma_w2);
            out.push(Inequality { label: "min(sigma_n1^2, sigma_w2^2) <= var(V_W2)", lhs: min_nw, rhs: d.var_v_w2 });
            if family == GenieFamily::HybridA {
                out.push(Inequality { label: "var(Z1-N1/h21) <= var(V_N1)", lhs: d.var_z1_minus_hinv_n1, rhs: d.var_v_n1 });
                out.push(Inequality { label: "|h12|^2 var(Z2-W2) <= 1", lhs: h12s * d.var_z_minus_w2, rhs: 1.0 });
            } else {
                out.push(Inequality { label: "|h12|^2 var(Z2-W2) <= var(V_N1)", lhs: h12s * d.var_z_minus_w2, rhs: d.var_v_n1 });
                out.push(Inequality { label: "var(Z1-N1/h21) <= 1", lhs: d.var_z1_minus_hinv_n1, rhs: 1.0 });
            }
            out.push(Inequality { label: "sigma_n1 > 0", lhs: 1e-10, rhs: k.sigma_n1 * k.sigma_n1 });
            out.push(Inequality { label: "var(Z2-W2) > 0", lhs: 1e-10, rhs: d.var_z_minus_w2 });
        }
    }
    Ok(out)
}

pub fn genie_feasible(family: GenieFamily, ch: &ChannelParams, k: &GenieParams) -> bool {
    genie_constraints(family, ch, k).map(|c| c.iter().all(Inequality::holds)).unwrap_or(false)
}

/// Second moments shared by the genie-parametrized closed forms.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Moments {
    pub p1: f64,
    pub p2: f64,
    pub a: f64,
    pub b: f64,
    pub k: GenieParams,
    pub d: DerivedNoise,
    /// `Var(Y1 | U1)`.
    pub y1_u1: f64,
    pub y2_u2: f64,
    /// `Var(Y1 | S1)`.
    pub y1_s1: f64,
    /// `|h21|^2 (Var(Y1|U1) - var(Z1-W1))`.
    pub r_y1_u1: f64,
    /// `|h12|^2 (Var(Y2|U2) - var(Z2-W2))`.
    pub r_y2_u2: f64,
    /// `Var(Y1|S1) - var(Z1-N1/h21)`.
    pub r_y1_s1: f64,
}

fn schur(var: f64, cov: f64, var_given: f64) -> f64 {
    if var_given <= 0.0 {
        var
    } else {
        var - cov * cov / var_given
    }
}

impl Moments {
    pub fn new(ch: &ChannelParams, k: &GenieParams) -> Result<Self> {
        let d = derive_noise(ch, k)?;
        let (p1, p2, a, b) = (ch.p1, ch.p2, ch.inr1(), ch.inr2());
        let (h12s, h21s) = (ch.h12 * ch.h12, ch.h21 * ch.h21);
        let (sw1, rw1, sw2, rw2) = (k.sigma_w1, k.rho_w1, k.sigma_w2, k.rho_w2);
        let (sn1, rn1) = (k.sigma_n1, k.rho_n1);
        let y1_u1 = schur(p1 + a + 1.0, a + rw1 * sw1, a + sw1 * sw1);
        let y2_u2 = schur(p2 + b + 1.0, b + rw2 * sw2, b + sw2 * sw2);
        let y1_s1 = schur(p1 + a + 1.0, ch.h21 * p1 + rn1 * sn1, b + sn1 * sn1);
        let r_y1_u1 = h21s * schur(p1, rw1 * sw1 - sw1 * sw1, a + sw1 * sw1);
        let r_y2_u2 = h12s * schur(p2, rw2 * sw2 - sw2 * sw2, b + sw2 * sw2);
        let r_y1_s1 = schur(a, rn1 * sn1 - sn1 * sn1 / ch.h21, b + sn1 * sn1);
        Ok(Self { p1, p2, a, b, k: *k, d, y1_u1, y2_u2, y1_s1, r_y1_u1, r_y2_u2, r_y1_s1 })
    }

    /// `R0` in complex form.
    pub fn r0(&self) -> f64 {
        let (k, d, b) = (&self.k, &self.d, self.b);
        let sn1s = k.sigma_n1 * k.sigma_n1;
        ((b + sn1s) / (b + d.var_v_w2)).log2()
            + ((b + k.sigma_w2 * k.sigma_w2) / (b + 1.0)).log2()
            + ((self.p1 + self.a + 1.0) / sn1s).log2()
            + ((self.p2 + b + 1.0) / d.var_z_minus_w2).log2()
    }

    /// `h(U1) - h(W1 - Z1)` in complex form.
    pub fn t_u1(&self) -> f64 {
        ((self.a + self.k.sigma_w1 * self.k.sigma_w1) / self.d.var_z_minus_w1).log2()
    }

    pub fn t_u2(&self) -> f64 {
        ((self.b + self.k.sigma_w2 * self.k.sigma_w2) / self.d.var_z_minus_w2).log2()
    }

    /// `h(Y1|U1) - h(h21 Y1 + Ṽ_W2 | U1)` in complex form.
    pub fn t_y1_u1(&self) -> f64 {
        (self.y1_u1 / (self.r_y1_u1 + self.d.var_v_w2)).log2()
    }

    pub fn t_y2_u2(&self) -> f64 {
        (self.y2_u2 / (self.r_y2_u2 + self.d.var_v_w1)).log2()
    }
}

fn finite_or_infeasible(id: BoundId, ch: &ChannelParams, k: &GenieParams, value: f64) -> BoundResult {
    if value.is_finite() {
        BoundResult::feasible(id, *ch, value, Some(*k))
    } else {
        BoundResult::infeasible(id, *ch, Some(*k))
    }
}

/// `½ log2(|g|P + |g|^-1 (P + 1))`.
pub fn r_sym_star(p: f64, g: f64) -> Result<f64> {
    check_p(p)?;
    let ag = nonzero_gain(g)?;
    Ok(0.5 * (ag * p + (p + 1.0) / ag).log2())
}

fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("power must be positive, got {p}")))
    }
}

fn nonzero_gain(g: f64) -> Result<f64> {
    if g == 0.0 || !g.is_finite() {
        Err(domain("cross gain must be nonzero and finite"))
    } else {
        Ok(g.abs())
    }
}

fn weak_gain(g: f64) -> Result<f64> {
    let ag = nonzero_gain(g)?;
    if ag * ag > 1.0 {
        return Err(domain(format!("weak interference required, g^2 = {}", ag * ag)));
    }
    Ok(ag)
}

/// Kramer's bound for the symmetric real channel.
pub fn kramer_sym(p: f64, g: f64) -> Result<f64> {
    check_p(p)?;
    let ag = weak_gain(g)?;
    let g2 = ag * ag;
    let root = ((1.0 + g2).powi(2) + 4.0 * g2 * (1.0 + g2) * p).sqrt();
    Ok(r_sym_star(p, g)? + 0.5 * ((g2 - 1.0 + root) / (ag * (1.0 - g2 + root))).log2())
}

/// Threshold in `g^2` between the two branches of [`gamma`].
pub const GAMMA_BREAK_G2: f64 = 0.405;

/// Excess of the corollary upper bound over `R_sym*`.
pub fn gamma(g: f64) -> Result<f64> {
    let ag = weak_gain(g)?;
    let g2 = ag * ag;
    Ok(if g2 <= GAMMA_BREAK_G2 {
        0.5 * ((4.0 * g2 + 1.0) / (4.0 * ag)).log2()
    } else {
        0.5 * (2.0 * g2 / (4.0 * g2 - 1.0).sqrt()).log2()
    })
}

pub fn cor1_rbar(p: f64, g: f64) -> Result<f64> {
    Ok(r_sym_star(p, g)? + gamma(g)?)
}

/// The genie noise variance rule of the simplified bound.
pub fn thm6_sigma_n1_sq(g: f64) -> Result<f64> {
    let ag = weak_gain(g)?;
    let g2 = ag * ag;
    Ok(if g2 <= 0.5 { 4.0 * g2 * (1.0 - g2) } else { 1.0 })
}

/// Value of the hybrid sum bound at the A-step genie, as a closed form in `sigma_n1_sq`.
pub fn a_step_closed_form(p: f64, g: f64, sigma_n1_sq: f64) -> Result<f64> {
    check_p(p)?;
    let ag = weak_gain(g)?;
    let (g2, s) = (ag * ag, sigma_n1_sq);
    Ok(0.5 * (p + g2 * p + 1.0).log2() - 0.25 * g2.log2()
        + 0.25 * ((g2 * p + s) / (g2 * p + 1.0)).log2()
        + 0.25 * (4.0 * g2 * g2 / (s * (4.0 * g2 - s))).log2())
}

/// Value of the hybrid sum bound at the B-step genie.
pub fn b_step_closed_form(p: f64, g: f64) -> Result<f64> {
    let ag = weak_gain(g)?;
    Ok(r_sym_star(p, g)? + 0.5 * ((4.0 * ag * ag + 1.0) / (4.0 * ag)).log2())
}

pub fn thm6_simplified(p: f64, g: f64) -> Result<f64> {
    check_p(p)?;
    let ag = weak_gain(g)?;
    let g2 = ag * ag;
    let s = thm6_sigma_n1_sq(g)?;
    let first = 0.25 * ((g2 * p + s) / (g2 * p + 1.0)).log2() + 0.25 * (4.0 * g2 * g2 / (s * (4.0 * g2 - s))).log2();
    let second = 0.5 * ((4.0 * g2 + 1.0) / (4.0 * ag)).log2();
    Ok(r_sym_star(p, g)? + first.min(second))
}

/// Genie making the three hybrid-B constraints tight except `var(V_W2)`:
/// `var(Z1 - N1/h21) = 1`, `var(V_W2) = sigma_w2^2`, `var(V_N1) = |h12|^2 var(Z2 - W2)`.
pub fn a_step_kappa(ch: &ChannelParams, sigma_n1_sq: f64) -> Result<GenieParams> {
    nonzero_gain(ch.h12)?;
    nonzero_gain(ch.h21)?;
    if !(sigma_n1_sq > 0.0 && sigma_n1_sq <= 1.0) {
        return Err(domain(format!("sigma_n1^2 must lie in (0, 1], got {sigma_n1_sq}")));
    }
    let sn1 = sigma_n1_sq.sqrt();
    let rn1 = sn1 / (2.0 * ch.h21);
    let sw2_sq = 1.0 - (1.0 - rn1 * rn1) / (ch.h12 * ch.h12);
    if !(sw2_sq >= -CLAMP_TOL) || rn1.abs() > 1.0 + CLAMP_TOL {
        return Err(domain(format!("sigma_n1^2 = {sigma_n1_sq} lies outside the A-step window")));
    }
    let sw2 = sw2_sq.max(0.0).sqrt().min(1.0);
    let k = GenieParams { sigma_n1: sn1, rho_n1: rn1.clamp(-1.0, 1.0), sigma_w2: sw2, rho_w2: sw2, ..GenieParams::unit() };
    k.validate()?;
    Ok(k)
}

/// The A-step window `[4 g^2 (1 - g^2), min(1, 4 g^2)]` for symmetric channels.
pub fn a_step_window(g: f64) -> Result<(f64, f64)> {
    let ag = weak_gain(g)?;
    let g2 = ag * ag;
    Ok((4.0 * g2 * (1.0 - g2), (4.0 * g2).min(1.0)))
}

/// Genie with `sigma_w2 = 1`, `var(Z1 - N1/h21) = 1`, `var(V_N1) = |h12|^2 var(Z2 - W2)`
/// and `var(V_W2) = sigma_n1^2`.
pub fn b_step_kappa(ch: &ChannelParams) -> Result<GenieParams> {
    nonzero_gain(ch.h12)?;
    nonzero_gain(ch.h21)?;
    let (h12s, h21s) = (ch.h12 * ch.h12, ch.h21 * ch.h21);
    let sn1_sq = (2.0 - 0.5 / h12s) / (2.0 - 0.125 / (h12s * h21s));
    if !(sn1_sq > 0.0 && sn1_sq <= 1.0 + CLAMP_TOL) {
        return Err(domain("B-step genie outside the parameter box for this channel"));
    }
    let sn1 = sn1_sq.min(1.0).sqrt();
    let rn1 = sn1 / (2.0 * ch.h21);
    let rw2 = 1.0 - (1.0 - rn1 * rn1) / (2.0 * h12s);
    let k = GenieParams { sigma_n1: sn1, rho_n1: rn1, sigma_w2: 1.0, rho_w2: rw2, ..GenieParams::unit() };
    if !k.in_box() {
        return Err(domain("B-step genie outside the parameter box for this channel"));
    }
    Ok(k)
}

/// Change-of-interference sum bound.
pub fn thm3_bound(ch: &ChannelParams, k: &GenieParams) -> BoundResult {
    let id = BoundId::Thm3;
    if !ch.is_weak() || !genie_feasible(GenieFamily::ChangeOfInterference, ch, k) {
        return BoundResult::infeasible(id, *ch, Some(*k));
    }
    let Ok(m) = Moments::new(ch, k) else {
        return BoundResult::infeasible(id, *ch, Some(*k));
    };
    let sum = (1.0 + m.p1 / (m.a + 1.0)).log2()
        + m.t_u1()
        + m.t_y1_u1()
        + (1.0 + m.p2 / (m.b + 1.0)).log2()
        + m.t_u2()
        + m.t_y2_u2();
    finite_or_infeasible(id, ch, k, 0.5 * ch.kind.prelog() * sum)
}

fn hybrid_bound(id: BoundId, family: GenieFamily, ch: &ChannelParams, k: &GenieParams) -> BoundResult {
    if !ch.is_weak() || !genie_feasible(family, ch, k) {
        return BoundResult::infeasible(id, *ch, Some(*k));
    }
    let Ok(m) = Moments::new(ch, k) else {
        return BoundResult::infeasible(id, *ch, Some(*k));
    };
    let vn1 = m.d.var_v_n1;
    let sum = match family {
        GenieFamily::HybridA => (m.y1_s1 / (m.r_y1_s1 + vn1)).log2() + (m.y2_u2 / (m.r_y2_u2 + 1.0)).log2(),
        _ => (m.y1_s1 / (m.r_y1_s1 + 1.0)).log2() + (m.y2_u2 / (m.r_y2_u2 + vn1)).log2(),
    } + m.r0();
    finite_or_infeasible(id, ch, k, 0.5 * ch.kind.prelog() * sum)
}

fn relabel(mut r: BoundResult, id: BoundId, ch: &ChannelParams, k: &GenieParams) -> BoundResult {
    r.bound_id = id;
    r.channel = *ch;
    r.achieving_params = Some(*k);
    r
}

/// Hybrid sum bound with genies `Ṽ_N1`, `Z̃1`.
pub fn thm4_bound(ch: &ChannelParams, k: &GenieParams) -> BoundResult {
    hybrid_bound(BoundId::Thm4, GenieFamily::HybridA, ch, k)
}

/// [`thm4_bound`] with user indices exchanged (`k` is given in the original indexing).
pub fn thm4_swapped(ch: &ChannelParams, k: &GenieParams) -> BoundResult {
    let r = hybrid_bound(BoundId::Thm4Swapped, GenieFamily::HybridA, &ch.swapped(), &k.swapped());
    relabel(r, BoundId::Thm4Swapped, ch, k)
}

/// Hybrid sum bound with genies `Z̃'1`, `Ṽ'_N1`.
pub fn thm5_bound(ch: &ChannelParams, k: &GenieParams) -> BoundResult {
    hybrid_bound(BoundId::Thm5, GenieFamily::HybridB, ch, k)
}

/// [`thm5_bound`] with user indices exchanged (`k` is given in the original indexing).
pub fn thm5_swapped(ch: &ChannelParams, k: &GenieParams) -> BoundResult {
    let r = hybrid_bound(BoundId::Thm5Swapped, GenieFamily::HybridB, &ch.swapped(), &k.swapped());
    relabel(r, BoundId::Thm5Swapped, ch, k)
}

/// The seven outer-bound constraint values with unit independent genie noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtwValues {
    pub r1: f64,
    pub r2: f64,
    pub sum_a: f64,
    pub sum_b: f64,
    pub sum_c: f64,
    /// Bound on `2 R1 + R2`.
    pub two_r1_r2: f64,
    /// Bound on `R1 + 2 R2`.
    pub r1_two_r2: f64,
}

pub fn etw_values(ch: &ChannelParams) -> EtwValues {
    let pl = ch.kind.prelog();
    let (p1, p2, a, b) = (ch.p1, ch.p2, ch.inr1(), ch.inr2());
    let i1_given_x2 = (1.0 + p1).log2();
    let i2_given_x1 = (1.0 + p2).log2();
    let i1 = (1.0 + p1 / (a + 1.0)).log2();
    let i2 = (1.0 + p2 / (b + 1.0)).log2();
    let i1_genie = (1.0 + b).log2() + ((1.0 + a + p1 / (1.0 + b)) / (1.0 + a)).log2();
    let i2_genie = (1.0 + a).log2() + ((1.0 + b + p2 / (1.0 + a)) / (1.0 + b)).log2();
    EtwValues {
        r1: pl * i1_given_x2,
        r2: pl * i2_given_x1,
        sum_a: pl * (i1_given_x2 + i2),
        sum_b: pl * (i1 + i2_given_x1),
        sum_c: pl * (i1_genie + i2_genie),
        two_r1_r2: pl * (i1_given_x2 + i1 + i2_genie),
        r1_two_r2: pl * (i1_genie + i2_given_x1 + i2),
    }
}

/// Minimum of the three sum-rate constraints of the genie-aided outer bound.
pub fn etw_sum_bound(ch: &ChannelParams) -> BoundResult {
    if !ch.is_weak() {
        return BoundResult::infeasible(BoundId::Etw, *ch, None);
    }
    let v = etw_values(ch);
    BoundResult::feasible(BoundId::Etw, *ch, v.sum_a.min(v.sum_b).min(v.sum_c), None)
}

/// Pointwise minimum over every implemented sum-rate upper bound.
///
/// The symmetric closed forms enter only for symmetric real channels.
pub fn best_upper(ch: &ChannelParams, opts: &SearchOptions) -> Result<BoundResult> {
    ch.require_weak()?;
    let mut candidates: Vec<BoundResult> = vec![etw_sum_bound(ch)];
    for target in [ParametrizedBound::Thm3, ParametrizedBound::Thm4, ParametrizedBound::Thm5, ParametrizedBound::Thm5Swapped] {
        candidates.push(minimize_bound(target, ch, opts)?);
    }
    if ch.kind == SignalKind::Real && ch.is_symmetric() && ch.h12 != 0.0 {
        let (p, g) = (ch.p1, ch.h12);
        for (id, v) in [
            (BoundId::KramerSym, kramer_sym(p, g)?),
            (BoundId::Thm6Simplified, thm6_simplified(p, g)?),
            (BoundId::Cor1RBar, cor1_rbar(p, g)?),
        ] {
            candidates.push(BoundResult::feasible(id, *ch, v, None));
        }
    }
    let best = candidates
        .into_iter()
        .filter(|c| c.feasible && c.value.is_finite())
        .fold(None::<BoundResult>, |acc, c| match acc {
            Some(a) if a.value <= c.value => Some(a),
            _ => Some(c),
        });
    let best = best.ok_or_else(|| domain("no feasible upper bound for this channel"))?;
    Ok(BoundResult {
        value: best.value,
        achieving_params: best.achieving_params,
        feasible: true,
        bound_id: BoundId::BestUpper,
        channel: *ch,
        attained_by: Some(best.bound_id),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gic_core::{gic_covariances, GaussianModel, Lin, Surrogate};
    use proptest::prelude::*;

    fn sym(p: f64, g2: f64) -> ChannelParams {
        ChannelParams::symmetric_real(p, g2.sqrt()).unwrap()
    }

    #[test]
    fn r_sym_star_examples() {
        for p in [0.5, 4.0, 100.0] {
            let v = r_sym_star(p, 1.0).unwrap();
            assert!((v - 0.5 * (2.0 * p + 1.0).log2()).abs() < 1e-14);
        }
        assert!((r_sym_star(64.0, 0.5).unwrap() - 0.5 * 162f64.log2()).abs() < 1e-13);
        assert!((r_sym_star(64.0, 0.5).unwrap() - 3.67).abs() < 1e-3);
        assert!(r_sym_star(10.0, 0.0).is_err());
        for i in 1..=100 {
            let g2 = i as f64 / 100.0;
            assert!(r_sym_star(1000.0, g2.sqrt()).unwrap() >= 0.5 * 2001f64.log2() - 1e-12);
        }
    }

    #[test]
    fn kramer_examples() {
        for p in [1.0, 7.0, 1e4] {
            assert!((kramer_sym(p, 1.0).unwrap() - r_sym_star(p, 1.0).unwrap()).abs() < 1e-13);
        }
        let g = 0.5f64.sqrt();
        let gap = kramer_sym(1e9, g).unwrap() - r_sym_star(1e9, g).unwrap();
        assert!((gap - 0.5 * (1.0 / g).log2()).abs() < 1e-3);
        let g = 0.9f64.sqrt();
        assert!(kramer_sym(1000.0, g).unwrap() < cor1_rbar(1000.0, g).unwrap());
        assert!(kramer_sym(10.0, 0.0).is_err());
    }

    #[test]
    fn gamma_examples() {
        assert!(gamma(0.5).unwrap().abs() < 1e-15);
        assert!(gamma(0.5f64.sqrt()).unwrap().abs() < 1e-15);
        let g = 0.405f64.sqrt();
        let from_first = 0.5 * ((4.0 * 0.405 + 1.0) / (4.0 * g)).log2();
        let from_second = 0.5 * (2.0 * 0.405 / (4.0 * 0.405 - 1.0f64).sqrt()).log2();
        assert!((gamma(g).unwrap() - from_first).abs() < 1e-15);
        assert!((from_first - 0.0204).abs() < 1e-3 && (from_second - 0.0204).abs() < 1e-3);
        let top = 0.5 * (2.0 / 3f64.sqrt()).log2();
        assert!((gamma(1.0).unwrap() - top).abs() < 1e-15);
        assert!((top - 0.1037).abs() < 1e-4);
    }

    #[test]
    fn thm6_examples() {
        assert_eq!(thm6_sigma_n1_sq(0.5f64.sqrt()).unwrap(), 1.0);
        assert!((4.0f64 * 0.5 * 0.5 - 1.0).abs() < 1e-15);
        let g = 0.5;
        let v = thm6_simplified(50.0, g).unwrap();
        assert!(v <= r_sym_star(50.0, g).unwrap() + 1e-15);
        assert!((0.5 * ((4.0 * 0.25 + 1.0) / (4.0 * 0.5f64)).log2()).abs() < 1e-15);
        assert!(thm6_simplified(10.0, 0.0).is_err());
    }

    #[test]
    fn etw_examples() {
        let ch = sym(10.0, 0.3);
        let t = gic_covariances(&ch, &GenieParams::unit()).unwrap();
        let m = t.model();
        use Surrogate::*;
        let mi = |x: Surrogate, y: &[Surrogate]| {
            let ys: Vec<Lin> = y.iter().map(|s| t.lin(*s)).collect();
            let yr: Vec<&Lin> = ys.iter().collect();
            m.mutual_information(&[&t.lin(x)], &yr)
        };
        let v = etw_values(&ch);
        let i1g = mi(X1, &[Y1, S1Unit]);
        let i2g = mi(X2, &[Y2, S2Unit]);
        assert!((v.sum_c - (i1g + i2g)).abs() < 1e-10);
        assert!((v.sum_c - 2.0 * i1g).abs() < 1e-10);

        let ch = ChannelParams::new(3.0, 5.0, 0.4, 0.7, SignalKind::Real).unwrap();
        let v = etw_values(&ch);
        let expect = 0.5 * 4f64.log2() + 0.5 * (1f64 + 5.0 / (0.49 * 3.0 + 1.0)).log2();
        assert!((v.sum_a - expect).abs() < 1e-13);
        assert!((v.r1 - 0.5 * 4f64.log2()).abs() < 1e-15);

        let tiny = etw_sum_bound(&sym(10.0, 1e-16)).value;
        assert!((tiny - 11f64.log2()).abs() < 1e-9);
        assert!(!etw_sum_bound(&sym(10.0, 1.5)).feasible);
    }

    /// Differences of Gaussian entropies of the surrogates, assembled term by term.
    struct Assembly {
        m: GaussianModel,
        t: crate::gic_core::CovarianceTable,
    }

    impl Assembly {
        fn new(ch: &ChannelParams, k: &GenieParams) -> Self {
            let t = gic_covariances(ch, k).unwrap();
            Self { m: t.model().clone(), t }
        }
        fn l(&self, s: Surrogate) -> Lin {
            self.t.lin(s)
        }
        fn h(&self, x: &Lin, given: &[&Lin]) -> f64 {
            self.m.conditional_entropy(&[x], given)
        }
        fn fresh(&mut self, var: f64) -> Lin {
            self.m.add_independent(var)
        }
    }

    fn thm5_by_assembly(ch: &ChannelParams, k: &GenieParams) -> f64 {
        use Surrogate::*;
        let d = derive_noise(ch, k).unwrap();
        let mut a = Assembly::new(ch, k);
        let z1p = a.fresh(1.0 - d.var_z1_minus_hinv_n1);
        let vn1p = a.fresh(d.var_v_n1 - ch.h12 * ch.h12 * d.var_z_minus_w2);
        let v_w2 = a.fresh(d.var_v_w2);
        let (y1, y2, s1, u2, x1, x2) = (a.l(Y1), a.l(Y2), a.l(S1), a.l(U2), a.l(X1), a.l(X2));
        let t1 = a.h(&y1, &[&s1]) - a.h(&(&y1 + &z1p), &[&s1]);
        let t2 = a.h(&y2, &[&u2]) - a.h(&(&(ch.h12 * &y2) + &vn1p), &[&u2]);
        let r0 = a.h(&s1, &[]) - a.h(&(&(ch.h21 * &x1) + &v_w2), &[]) + a.h(&u2, &[]) - a.h(&y2, &[&x2])
            + a.h(&y1, &[])
            - a.h(&a.l(N1), &[])
            + a.h(&y2, &[])
            - a.h(&(&a.l(Z2) - &a.l(W2)), &[]);
        0.5 * (t1 + t2 + r0)
    }

    #[test]
    fn thm5_a_step_matches_assembly_and_closed_form() {
        let g = 0.5f64.sqrt();
        let ch = sym(10.0, 0.5);
        let (lo, hi) = a_step_window(g).unwrap();
        for s in [lo, 0.5 * (lo + hi), hi] {
            let k = a_step_kappa(&ch, s).unwrap();
            let r = thm5_bound(&ch, &k);
            assert!(r.feasible, "A-step genie should be feasible at sigma^2 = {s}");
            assert!((r.value - a_step_closed_form(10.0, g, s).unwrap()).abs() < 1e-9);
            assert!((r.value - thm5_by_assembly(&ch, &k)).abs() < 1e-9);
        }
    }

    #[test]
    fn thm5_b_step_matches_closed_form() {
        for p in [10.0, 100.0] {
            for g2 in [0.1, 0.3, 0.7, 1.0] {
                let ch = sym(p, g2);
                let k = b_step_kappa(&ch).unwrap();
                let r = thm5_bound(&ch, &k);
                assert!(r.feasible);
                assert!((r.value - b_step_closed_form(p, g2.sqrt()).unwrap()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn thm3_examples() {
        let ch = sym(7.0, 1.0);
        let k = GenieParams { sigma_w1: 0.0, rho_w1: 0.0, ..GenieParams::unit() };
        assert!(!thm3_bound(&ch, &k).feasible);
        let ch = sym(7.0, 0.04);
        let r = thm3_bound(&ch, &GenieParams::unit());
        assert!(r.feasible && r.value.is_finite());
    }

    #[test]
    fn r0_example() {
        let (p, g2) = (10.0, 0.3);
        let ch = sym(p, g2);
        let k = GenieParams::unit();
        let m = Moments::new(&ch, &k).unwrap();
        assert!((m.d.var_v_w2 - 0.5).abs() < 1e-15);
        let first = ((g2 * p + 1.0) / (g2 * p + 0.5)).log2();
        let second = 0.0;
        let rest = ((p + g2 * p + 1.0) / 1.0).log2() + ((p + g2 * p + 1.0) / 2.0).log2();
        assert!((m.r0() - (first + second + rest)).abs() < 1e-12);
    }

    #[test]
    fn swapped_variants_agree_on_symmetric_channels() {
        let ch = sym(20.0, 0.6);
        let k = GenieParams { sigma_n1: 0.8, rho_n1: 0.5, sigma_w2: 0.9, rho_w2: 0.6, ..GenieParams::unit() };
        let ks = k.swapped();
        assert_eq!(thm4_bound(&ch, &k).value, thm4_swapped(&ch, &ks).value);
        assert_eq!(thm5_bound(&ch, &k).value, thm5_swapped(&ch, &ks).value);
    }

    #[test]
    fn best_upper_examples() {
        let opts = SearchOptions::default();
        for p in [3.0, 50.0] {
            let ch = sym(p, 1.0);
            let b = best_upper(&ch, &opts).unwrap();
            assert!(b.value <= kramer_sym(p, 1.0).unwrap() + 1e-12);
        }
        let ch = sym(100.0, 0.3);
        let b = best_upper(&ch, &opts).unwrap();
        let g = 0.3f64.sqrt();
        let rival = kramer_sym(100.0, g).unwrap().min(etw_sum_bound(&ch).value);
        assert!(b.value <= rival - 0.05);
        assert!(b.attained_by.is_some());
        let ch = sym(10.0, 0.4);
        assert!(etw_sum_bound(&ch).value >= best_upper(&ch, &opts).unwrap().value);
        assert_eq!(best_upper(&ch.swapped(), &opts).unwrap().value, best_upper(&ch, &opts).unwrap().value);
    }

    #[test]
    fn new_bounds_dominate_r_sym_star_at_p1000() {
        let c = (1.0 - 0.5f64.sqrt()).powi(2);
        for i in 0..200 {
            let g2 = c + (1.0 - c) * (i as f64 + 0.5) / 200.0;
            let g = g2.sqrt();
            let rs = r_sym_star(1000.0, g).unwrap();
            assert!(thm6_simplified(1000.0, g).unwrap() >= rs - 1e-9);
            assert!(cor1_rbar(1000.0, g).unwrap() >= rs - 1e-9);
        }
    }

    proptest! {
        #[test]
        fn cor1_dominates_thm6(p in 0.1..1e5f64, g2 in 1e-4..=1.0f64) {
            let g = g2.sqrt();
            prop_assert!(cor1_rbar(p, g).unwrap() >= thm6_simplified(p, g).unwrap() - 1e-12);
        }

        #[test]
        fn gamma_range(g2 in (1.0 / 12.0)..=1.0f64) {
            let v = gamma(g2.sqrt()).unwrap();
            let top = 0.5 * (2.0 / 3f64.sqrt()).log2();
            prop_assert!(v >= -1e-15 && v <= top + 1e-15);
        }

        #[test]
        fn hybrid_bounds_continuous_in_kappa(
            p in 1.0..200.0f64, g2 in 0.1..0.9f64, t in 0.05..0.95f64, eps_dir in prop::array::uniform4(-1.0..1.0f64),
        ) {
            let ch = sym(p, g2);
            let (lo, hi) = a_step_window(g2.sqrt()).unwrap();
            let k = a_step_kappa(&ch, lo + t * (hi - lo)).unwrap();
            let base = thm5_bound(&ch, &k);
            prop_assume!(base.feasible);
            let h = 1e-9;
            let mut a = k.to_array();
            for (slot, e) in [0usize, 3, 4, 7].iter().zip(eps_dir) {
                a[*slot] += h * e;
            }
            let moved = thm5_bound(&ch, &GenieParams::from_array(a));
            if moved.feasible {
                prop_assert!((moved.value - base.value).abs() < 1e-6);
            }
        }
    }
}

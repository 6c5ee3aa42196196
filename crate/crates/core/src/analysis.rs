//! Rate gaps, high-SNR characterization, GDOF conversion and regime labels
//! for the symmetric real channel.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::lower_bounds::{r_shk, underline_r, TDM_SWITCH_P};
use crate::upper_bounds::{cor1_rbar, gamma, r_sym_star, GAMMA_BREAK_G2};

/// `(1 - sqrt(1/2))^2`, displayed as 0.086.
pub const MODERATE_LOW_G2: f64 = 0.085_786_437_626_904_95;
/// Upper breakpoint of the asymptotic gap.
pub const DELTA_INF_HIGH_G2: f64 = 0.835;
/// Spread over the last two offset estimates above which convergence is flagged.
pub const OFFSET_SPREAD_LIMIT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    Noisy,
    Moderate,
    WeakNonModerate,
    Strong,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Noisy => "noisy",
            Regime::Moderate => "moderate",
            Regime::WeakNonModerate => "weak_non_moderate",
            Regime::Strong => "strong",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeLabel {
    pub regime: Regime,
    /// GDOF exponent, defined for `P > 1`.
    pub alpha: Option<f64>,
    pub g2: f64,
}

/// `log(g^2 P) / log P`.
pub fn alpha_of(p: f64, g2: f64) -> Option<f64> {
    (p > 1.0 && g2 > 0.0).then(|| (g2 * p).ln() / p.ln())
}

/// `g^2 = P^(alpha - 1)`.
pub fn g2_of_alpha(p: f64, alpha: f64) -> Result<f64> {
    if !(p > 1.0) || !alpha.is_finite() {
        return Err(domain(format!("alpha needs P > 1 and finite alpha, got P = {p}, alpha = {alpha}")));
    }
    Ok(p.powf(alpha - 1.0))
}

pub fn moderate_interval(p: f64) -> (f64, f64) {
    (MODERATE_LOW_G2.max(p.powf(-1.0 / 3.0)), 1.0)
}

pub fn is_moderate(p: f64, g2: f64) -> bool {
    let (lo, hi) = moderate_interval(p);
    g2 > lo && g2 < hi
}

pub fn classify(p: f64, g: f64) -> Result<RegimeLabel> {
    if !(p > 0.0) || !p.is_finite() || g == 0.0 || !g.is_finite() {
        return Err(domain(format!("classify needs P > 0 and g != 0, got P = {p}, g = {g}")));
    }
    let g2 = g * g;
    let regime = if g2 > 1.0 {
        Regime::Strong
    } else if is_moderate(p, g2) {
        Regime::Moderate
    } else if g.abs() * (1.0 + g2 * p) <= 0.5 {
        Regime::Noisy
    } else {
        Regime::WeakNonModerate
    };
    Ok(RegimeLabel { regime, alpha: alpha_of(p, g2), g2 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapCeiling {
    /// Valid for `P < 23.3`.
    LowPower,
    HighPower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    /// `cor1_rbar - underline_r`.
    pub delta: f64,
    pub ceiling: f64,
    pub ceiling_kind: GapCeiling,
}

/// Analytic ceiling on the gap between the corollary bound and the piecewise lower bound.
pub fn gap_ceiling(p: f64, g: f64) -> Result<(f64, GapCeiling)> {
    let ag = g.abs();
    let g2 = ag * ag;
    let gm = gamma(g)?;
    if p < TDM_SWITCH_P {
        let v = 0.5 * ((ag * p + (p + 1.0) / ag) / (1.0 + 2.0 * p)).log2() + gm;
        Ok((v, GapCeiling::LowPower))
    } else {
        let a = 0.5 * (4.0 / (2.0 * ag + 1.0 / ag)).log2();
        let g3p = ag * g2 * p;
        let b = 0.5 * ((1.0 / g2 + g3p) / (1.0 + g3p)).log2();
        Ok((a.max(b) + gm, GapCeiling::HighPower))
    }
}

pub fn delta_gap(p: f64, g: f64) -> Result<GapReport> {
    let g2 = g * g;
    if !(p > 0.0) || !(g2 > p.powf(-1.0 / 3.0) && g2 <= 1.0) {
        return Err(domain(format!("gap needs P^(-1/3) < g^2 <= 1, got P = {p}, g^2 = {g2}")));
    }
    let delta = cor1_rbar(p, g)? - underline_r(p, g)?;
    let (ceiling, ceiling_kind) = gap_ceiling(p, g)?;
    Ok(GapReport { delta, ceiling, ceiling_kind })
}

const BRANCH_EPS: f64 = 1e-12;

/// Asymptotic gap between the best upper and lower bounds as `P -> inf`.
pub fn delta_inf(g: f64) -> Result<f64> {
    let ag = g.abs();
    let g2 = ag * ag;
    if !(g2 > 0.0 && g2 <= 1.0) {
        return Err(domain(format!("delta_inf needs 0 < g^2 <= 1, got {g2}")));
    }
    Ok(if g2 < MODERATE_LOW_G2 - BRANCH_EPS {
        0.5 * ((4.0 * g2 + 1.0) / (2.0 * g2 + 1.0)).log2()
    } else if g2 <= GAMMA_BREAK_G2 + BRANCH_EPS {
        0.5 * ((4.0 * g2 + 1.0) / (4.0 * ag)).log2()
    } else if g2 <= DELTA_INF_HIGH_G2 + BRANCH_EPS {
        0.5 * (2.0 * g2 / (4.0 * g2 - 1.0).sqrt()).log2()
    } else {
        0.5 * (1.0 / ag).log2()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HighSnrSubregime {
    /// `P^(-1/3) <= g^2 < 0.086`.
    H0,
    H1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HighSnr {
    pub rate: f64,
    pub subregime: HighSnrSubregime,
    /// `rate / (½ log2 P)`.
    pub ratio: f64,
    pub ratio_approx: Option<f64>,
    /// `P^(-1/3) <= g^2 <= 1`.
    pub in_regime: bool,
}

pub fn high_snr_characterization(p: f64, g: f64) -> Result<HighSnr> {
    let ag = g.abs();
    let g2 = ag * ag;
    let rs = r_sym_star(p, g)?;
    let subregime = if g2 < MODERATE_LOW_G2 { HighSnrSubregime::H0 } else { HighSnrSubregime::H1 };
    let rate = match subregime {
        HighSnrSubregime::H0 => rs + 0.5 * (2.0 * ag + 1.0 / ag).log2() - 1.0,
        HighSnrSubregime::H1 => rs,
    };
    let in_regime = g2 >= p.powf(-1.0 / 3.0) && g2 <= 1.0;
    let ratio_approx = alpha_of(p, g2).map(|a| match subregime {
        HighSnrSubregime::H0 => 1.0 - a / 2.0,
        HighSnrSubregime::H1 => (3.0 - a) / 4.0,
    });
    Ok(HighSnr { rate, subregime, ratio: rate / (0.5 * p.log2()), ratio_approx, in_regime })
}

/// `max(R_SHK, underline_R)`, the lower side of the high-SNR characterization.
pub fn high_snr_lower(p: f64, g: f64) -> Result<f64> {
    Ok(r_shk(p, g)?.max(underline_r(p, g)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OffsetEstimate {
    /// `log2 P - 2 R(P)` for each power.
    pub sequence: Vec<f64>,
    pub last: f64,
    /// Aitken-accelerated limit (falls back to `last`).
    pub extrapolated: f64,
    pub converged: bool,
}

fn aitken(s: &[f64]) -> f64 {
    let n = s.len();
    let (a, b, c) = (s[n - 3], s[n - 2], s[n - 1]);
    let den = c - 2.0 * b + a;
    if den.abs() < 1e-300 || !den.is_finite() {
        return c;
    }
    let e = c - (c - b).powi(2) / den;
    if e.is_finite() {
        e
    } else {
        c
    }
}

fn extrapolate(sequence: Vec<f64>) -> Result<OffsetEstimate> {
    if sequence.len() < 3 {
        return Err(domain("offset extrapolation needs at least three powers"));
    }
    let n = sequence.len();
    let last = sequence[n - 1];
    let converged = (sequence[n - 1] - sequence[n - 2]).abs() <= OFFSET_SPREAD_LIMIT;
    Ok(OffsetEstimate { extrapolated: aitken(&sequence), last, converged, sequence })
}

fn check_powers(p_list: &[f64]) -> Result<()> {
    if p_list.len() < 3 || p_list.windows(2).any(|w| !(w[1] > w[0])) || p_list[0] <= 0.0 {
        return Err(domain("power list must be increasing, positive, with at least three values"));
    }
    Ok(())
}

/// High-SNR power offset `log2 P - 2 R(P)` of a sum-rate evaluator.
pub fn power_offset<F: Fn(f64) -> Result<f64>>(rate: F, p_list: &[f64]) -> Result<OffsetEstimate> {
    check_powers(p_list)?;
    let seq = p_list.iter().map(|&p| rate(p).map(|r| p.log2() - 2.0 * r)).collect::<Result<Vec<_>>>()?;
    extrapolate(seq)
}

/// Half the offset of `reference` minus that of `rate`: the limit of `rate - reference` in bits.
pub fn offset_difference<F, G>(rate: F, reference: G, p_list: &[f64]) -> Result<OffsetEstimate>
where
    F: Fn(f64) -> Result<f64>,
    G: Fn(f64) -> Result<f64>,
{
    check_powers(p_list)?;
    let seq = p_list.iter().map(|&p| Ok(rate(p)? - reference(p)?)).collect::<Result<Vec<_>>>()?;
    extrapolate(seq)
}

/// Powers `10^lo, 10^(lo+1), ..., 10^hi`.
pub fn decade_powers(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|e| 10f64.powi(e)).collect()
}

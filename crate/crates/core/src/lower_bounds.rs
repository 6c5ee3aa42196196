//! Achievable sum rates for the symmetric real channel: time division,
//! treating interference as noise, and two Han-Kobayashi special cases.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::upper_bounds::r_sym_star;

/// Power threshold below which the piecewise lower bound uses time division.
pub const TDM_SWITCH_P: f64 = 23.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HkPoint {
    pub a_star: f64,
    pub rate: f64,
    /// `P^(-1/3) < g^2 < 1`.
    pub regime_ok: bool,
}

fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("power must be positive, got {p}")))
    }
}

fn weak_gain(g: f64) -> Result<f64> {
    let ag = g.abs();
    if ag == 0.0 || !ag.is_finite() || ag * ag > 1.0 {
        return Err(domain(format!("need 0 < g^2 <= 1, got g = {g}")));
    }
    Ok(ag)
}

/// Time division with power control, `½ log2(1 + 2P)`.
pub fn r_tdm(p: f64) -> Result<f64> {
    check_p(p)?;
    Ok(0.5 * (1.0 + 2.0 * p).log2())
}

/// Both users treat interference as noise.
pub fn r_tin(p: f64, g: f64) -> Result<f64> {
    check_p(p)?;
    Ok((1.0 + p / (g * g * p + 1.0)).log2())
}

pub fn hk_regime(p: f64, g: f64) -> bool {
    let g2 = g * g;
    g2 > p.powf(-1.0 / 3.0) && g2 < 1.0
}

/// The two inner terms of the power-split max-min sum rate, each including
/// the common `½ log2(1 + aP)` part.
pub fn hk_branches(p: f64, g: f64, a: f64) -> (f64, f64) {
    let g2 = g * g;
    let ab = 1.0 - a;
    let base = 0.5 * (1.0 + a * p).log2();
    let first = 0.25 * (1.0 + (ab * p + g2 * p) / (1.0 + a * p)).log2()
        + 0.25 * (1.0 + (p + g2 * ab * p) / (1.0 + g2 * a * p)).log2();
    let second = 0.5 * (1.0 + g2 * ab * p / (1.0 + g2 * a * p)).log2() + 0.5 * (1.0 + g2 * p / (1.0 + a * p)).log2();
    (base + first, base + second)
}

/// Sum rate achieved by the private-power fraction `a`.
pub fn hk_rate_at_split(p: f64, g: f64, a: f64) -> f64 {
    let (b1, b2) = hk_branches(p, g, a);
    b1.min(b2)
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

/// Numeric maximizer of [`hk_rate_at_split`] over `a in [0, 1]`.
pub fn hk_split_numeric(p: f64, g: f64) -> f64 {
    let n = 1000;
    let f = |a: f64| hk_rate_at_split(p, g, a);
    let best = (0..=n).map(|i| i as f64 / n as f64).fold((0.0, f64::NEG_INFINITY), |acc, a| {
        let v = f(a);
        if v > acc.1 {
            (a, v)
        } else {
            acc
        }
    });
    let step = 1.0 / n as f64;
    golden_max(f, (best.0 - step).max(0.0), (best.0 + step).min(1.0), 1e-12)
}

/// Closed-form optimal private-power fraction.
pub fn hk_a_star(p: f64, g: f64) -> Result<HkPoint> {
    check_p(p)?;
    let ag = weak_gain(g)?;
    let g2 = ag * ag;
    let a0 = (1.0 + p + g2 * p).powi(2);
    let a1 = (1.0 + g2 * p).powi(2);
    let a2 = 2.0 * a1.powf(1.5) - a0 * (1.0 + g2);
    let den = a0 * g2 - a1;
    let disc = a2 * a2 - 4.0 * den * (a0 - a1 * a1);
    let closed = (a2 + disc.max(0.0).sqrt()) / (2.0 * den * p);
    let ok_closed = den.abs() > 1e-12 * a0 && disc >= 0.0 && closed.is_finite() && (0.0..=1.0).contains(&closed);
    let a_star = if ok_closed { closed } else { hk_split_numeric(p, g) };
    let (b1, _) = hk_branches(p, ag, a_star);
    Ok(HkPoint { a_star, rate: b1, regime_ok: hk_regime(p, ag) })
}

/// HK sum rate at the optimal split, in its `R_sym*`-anchored form.
pub fn hk_sum(p: f64, g: f64) -> Result<HkPoint> {
    let pt = hk_a_star(p, g)?;
    let ag = g.abs();
    let a = pt.a_star;
    let rate = r_sym_star(p, g)? + 0.25 * ((1.0 + a * p) / (1.0 / (ag * ag) + a * p)).log2();
    Ok(HkPoint { rate, ..pt })
}

/// `R_sym* + ¼ log2((1 + |g|^3 P) / (g^-2 + |g|^3 P))`, the first branch at `a = |g|^3`.
pub fn hk_lower_fixed_a_closed_form(p: f64, g: f64) -> Result<f64> {
    check_p(p)?;
    let ag = weak_gain(g)?;
    let a = ag.powi(3);
    Ok(r_sym_star(p, g)? + 0.25 * ((1.0 + a * p) / (1.0 / (ag * ag) + a * p)).log2())
}

/// Achievable sum rate with the private-power fraction fixed at `|g|^3`.
///
/// Equals [`hk_lower_fixed_a_closed_form`] whenever the first branch is the
/// active one, which holds for `P >= 23.3` inside the regime.
pub fn hk_lower_fixed_a(p: f64, g: f64) -> Result<f64> {
    check_p(p)?;
    let ag = weak_gain(g)?;
    Ok(hk_rate_at_split(p, ag, ag.powi(3)))
}

/// Simplified HK scheme with the private power at the noise level.
pub fn r_shk(p: f64, g: f64) -> Result<f64> {
    check_p(p)?;
    let ag = weak_gain(g)?;
    let g2 = ag * ag;
    Ok(0.5 * (1.0 + p + g2 * p).log2() + 0.5 * (2.0 + 1.0 / g2).log2() - 1.0)
}

/// Piecewise lower bound: time division below [`TDM_SWITCH_P`], otherwise the better HK scheme.
pub fn underline_r(p: f64, g: f64) -> Result<f64> {
    check_p(p)?;
    weak_gain(g)?;
    if p < TDM_SWITCH_P {
        r_tdm(p)
    } else {
        Ok(hk_lower_fixed_a(p, g)?.max(r_shk(p, g)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tdm_tin_examples() {
        assert!((r_tdm(4.0).unwrap() - 0.5 * 9f64.log2()).abs() < 1e-15);
        assert!((r_tdm(4.0).unwrap() - 1.585).abs() < 1e-3);
        assert!((r_tdm(0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!((r_tin(7.0, 0.0).unwrap() - 8f64.log2()).abs() < 1e-15);
        assert!((r_tin(1e12, 1.0).unwrap() - 1.0).abs() < 1e-9);
        let v = r_tin(7.0, 0.05f64.sqrt()).unwrap();
        assert!((v - 2.0 * 0.5 * (1.0 + 7.0 / 1.35f64).log2()).abs() < 1e-12);
        assert!((v - 2.629).abs() < 1e-3);
    }

    #[test]
    fn tdm_meets_fixed_split_hk_at_the_crossing_power() {
        let p: f64 = 23.239;
        let g = p.powf(-1.0 / 6.0);
        assert!((hk_lower_fixed_a(p, g).unwrap() - r_tdm(p).unwrap()).abs() < 1e-3);
    }

    #[test]
    fn a_star_examples() {
        let (p, g) = (100.0, 0.3f64.sqrt());
        let pt = hk_a_star(p, g).unwrap();
        assert!(pt.regime_ok);
        assert!((pt.a_star - hk_split_numeric(p, g)).abs() < 1e-6);

        for g2 in [0.2f64, 0.5, 0.8] {
            let g: f64 = g2.sqrt();
            let lim = g.powi(3) * (1.0 + g + g2) / (1.0 + g2 + g2 * g2);
            assert!((hk_a_star(1e8, g).unwrap().a_star - lim).abs() < 1e-5);
        }
        for p in [23.3f64, 50.0, 1e3, 1e5] {
            let lo: f64 = p.powf(-1.0 / 3.0);
            for i in 1..20 {
                let g2 = lo + (1.0 - lo) * i as f64 / 20.0;
                let g = g2.sqrt();
                assert!(hk_a_star(p, g).unwrap().a_star >= g.powi(3) - 1e-12);
            }
        }
    }

    #[test]
    fn hk_sum_examples() {
        let (p, g) = (100.0, 0.3f64.sqrt());
        let pt = hk_sum(p, g).unwrap();
        let direct = hk_a_star(p, g).unwrap().rate;
        assert!((pt.rate - direct).abs() < 1e-9);
        let (b1, b2) = hk_branches(p, g, pt.a_star);
        assert!(pt.rate <= b2 + 1e-9 && (pt.rate - b1).abs() < 1e-9);
        let g = 0.5f64.sqrt();
        assert!((hk_sum(1e10, g).unwrap().rate - r_sym_star(1e10, g).unwrap()).abs() < 1e-3);
        assert!(!hk_sum(10.0, 0.1).unwrap().regime_ok);
    }

    #[test]
    fn fixed_split_examples() {
        for p in [23.3f64, 64.0, 1e3, 1e5] {
            let lo: f64 = p.powf(-1.0 / 3.0);
            for i in 1..40 {
                let g = (lo + (1.0 - lo) * i as f64 / 40.0).sqrt();
                let v = hk_lower_fixed_a(p, g).unwrap();
                assert!(v <= hk_sum(p, g).unwrap().rate + 1e-12);
                assert!((v - hk_lower_fixed_a_closed_form(p, g).unwrap()).abs() < 1e-12);
            }
        }
        let p = 40.0;
        assert!((hk_lower_fixed_a(p, 1.0).unwrap() - 0.5 * 81f64.log2()).abs() < 1e-12);

        let p: f64 = 64.0;
        let excess = |g2: f64| hk_lower_fixed_a(p, g2.sqrt()).unwrap() - r_sym_star(p, g2.sqrt()).unwrap();
        let at_edge = excess(0.25);
        assert!((at_edge + 0.5 * (2.0 / 3f64.sqrt()).log2()).abs() < 1e-12);
        for i in 1..100 {
            assert!(excess(0.25 + 0.75 * i as f64 / 100.0) >= at_edge - 1e-12);
        }
    }

    #[test]
    fn shk_examples() {
        let (p, g) = (1e6, 0.2f64.sqrt());
        let second = r_sym_star(p, g).unwrap() + 0.5 * ((2.0 * g + 1.0 / g) / 4.0).log2();
        assert!((r_shk(p, g).unwrap() - second).abs() <= 0.01);
        let c = 1.0 - 0.5f64.sqrt();
        assert!((0.5 * (2.0 * c + 1.0 / c).log2() - 1.0).abs() < 1e-12);
        let gap = r_shk(1e9, c).unwrap() - r_sym_star(1e9, c).unwrap();
        assert!(gap.abs() < 1e-6);
        let v = r_shk(10.0, 1.0).unwrap();
        assert!((v - r_sym_star(10.0, 1.0).unwrap() - 0.5 * 0.75f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn underline_r_examples() {
        assert_eq!(underline_r(10.0, 0.5).unwrap(), r_tdm(10.0).unwrap());
        let g = 0.2;
        assert_eq!(underline_r(1e6, g).unwrap(), r_shk(1e6, g).unwrap());
        let g = 0.5f64.sqrt();
        assert!(hk_lower_fixed_a(1000.0, g).unwrap() > r_shk(1000.0, g).unwrap());
        assert_eq!(underline_r(1000.0, g).unwrap(), hk_lower_fixed_a(1000.0, g).unwrap());
    }

    proptest! {
        #[test]
        fn anchored_rate_increases_with_split(p in 23.3..1e5f64, t in 0.01..0.99f64) {
            let lo: f64 = p.powf(-1.0 / 3.0);
            let g2 = lo + (1.0 - lo) * t;
            let g = g2.sqrt();
            let a_star = hk_a_star(p, g).unwrap().a_star;
            let f = |a: f64| r_sym_star(p, g).unwrap() + 0.25 * ((1.0 + a * p) / (1.0 / g2 + a * p)).log2();
            let (a0, n) = (g.powi(3), 16);
            let mut prev = f(a0);
            for i in 1..=n {
                let a = a0 + (a_star - a0) * i as f64 / n as f64;
                let v = f(a);
                prop_assert!(v >= prev - 1e-12);
                prev = v;
            }
        }

        #[test]
        fn moderate_regime_lower_bound_properties(p in 23.3..1e6f64, t in 0.001..0.999f64) {
            let c = (1.0 - 0.5f64.sqrt()).powi(2);
            let lo = c.max(p.powf(-1.0 / 3.0));
            let g = (lo + (1.0 - lo) * t).sqrt();
            let u = underline_r(p, g).unwrap();
            prop_assert!(u >= r_tdm(p).unwrap() - 1e-12);
            prop_assert!(r_sym_star(p, g).unwrap() - u <= 0.5 * (2.0 / 3f64.sqrt()).log2() + 1e-9);
        }
    }
}

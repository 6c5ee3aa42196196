//! Independent re-derivations used to cross-check closed forms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Result};
use crate::gic_core::{derive_noise, gic_covariances, ChannelParams, CovarianceTable, GaussianModel, GenieParams, Lin, SignalKind, Surrogate};

/// Power-split sum rate written out directly: `½log(1+aP) + min(first, second)`.
pub fn hk_rate(p: f64, g: f64, a: f64) -> f64 {
    let g2 = g * g;
    let abar = 1.0 - a;
    let private = 0.5 * (1.0 + a * p).log2();
    let joint = 0.25 * (1.0 + (abar * p + g2 * p) / (1.0 + a * p)).log2()
        + 0.25 * (1.0 + (p + g2 * abar * p) / (1.0 + g2 * a * p)).log2();
    let separate = 0.5 * (1.0 + g2 * abar * p / (1.0 + g2 * a * p)).log2() + 0.5 * (1.0 + g2 * p / (1.0 + a * p)).log2();
    private + joint.min(separate)
}

/// Maximizer of [`hk_rate`] over `a` in `[0, 1]`: a `1e-3` scan, then golden section.
pub fn a_star_brute(p: f64, g: f64) -> (f64, f64) {
    let n = 1000;
    let mut best = (0.0, hk_rate(p, g, 0.0));
    for i in 1..=n {
        let a = i as f64 / n as f64;
        let v = hk_rate(p, g, a);
        if v > best.1 {
            best = (a, v);
        }
    }
    let (mut lo, mut hi) = ((best.0 - 1e-3).max(0.0), (best.0 + 1e-3).min(1.0));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (hk_rate(p, g, x1), hk_rate(p, g, x2));
    while hi - lo > 1e-12 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = hk_rate(p, g, x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = hk_rate(p, g, x1);
        }
    }
    let a = 0.5 * (lo + hi);
    let v = hk_rate(p, g, a);
    if v >= best.1 {
        (a, v)
    } else {
        best
    }
}

/// Entropy bookkeeping over the surrogate table plus fresh independent atoms.
struct Assembly {
    m: GaussianModel,
    t: CovarianceTable,
}

impl Assembly {
    fn new(ch: &ChannelParams, k: &GenieParams) -> Result<Self> {
        let t = gic_covariances(ch, k)?;
        Ok(Self { m: t.model().clone(), t })
    }

    fn l(&self, s: Surrogate) -> Lin {
        self.t.lin(s)
    }

    fn h(&self, x: &Lin, given: &[&Lin]) -> f64 {
        self.m.conditional_entropy(&[x], given)
    }

    fn fresh(&mut self, var: f64) -> Result<Lin> {
        if var < -1e-12 {
            return Err(domain(format!("negative variance {var} for an auxiliary noise")));
        }
        Ok(self.m.add_independent(var))
    }
}

/// Change-of-interference sum bound assembled from conditional entropies.
pub fn thm3_assembled(ch: &ChannelParams, k: &GenieParams) -> Result<f64> {
    use Surrogate::*;
    let d = derive_noise(ch, k)?;
    let (h12, h21) = (ch.h12, ch.h21);
    let mut a = Assembly::new(ch, k)?;
    let vt_w2 = a.fresh(d.var_v_w2 - h21 * h21 * d.var_z_minus_w1)?;
    let vt_w1 = a.fresh(d.var_v_w1 - h12 * h12 * d.var_z_minus_w2)?;
    let (y1, y2, u1, u2, x1, x2) = (a.l(Y1), a.l(Y2), a.l(U1), a.l(U2), a.l(X1), a.l(X2));
    let (z1, z2, w1, w2) = (a.l(Z1), a.l(Z2), a.l(W1), a.l(W2));
    let i1 = a.h(&y1, &[]) - a.h(&y1, &[&x1]);
    let i2 = a.h(&y2, &[]) - a.h(&y2, &[&x2]);
    let side1 = a.h(&u1, &[]) - a.h(&(&w1 - &z1), &[]) + a.h(&y1, &[&u1]) - a.h(&(&(h21 * &y1) + &vt_w2), &[&u1]);
    let side2 = a.h(&u2, &[]) - a.h(&(&w2 - &z2), &[]) + a.h(&y2, &[&u2]) - a.h(&(&(h12 * &y2) + &vt_w1), &[&u2]);
    Ok(0.5 * (i1 + i2 + side1 + side2))
}

/// Hybrid sum bound (genies `Z̃'1`, `Ṽ'_N1`) with its `R0` part, assembled from entropies.
pub fn thm5_assembled(ch: &ChannelParams, k: &GenieParams) -> Result<f64> {
    use Surrogate::*;
    let d = derive_noise(ch, k)?;
    let mut a = Assembly::new(ch, k)?;
    let z1p = a.fresh(1.0 - d.var_z1_minus_hinv_n1)?;
    let vn1p = a.fresh(d.var_v_n1 - ch.h12 * ch.h12 * d.var_z_minus_w2)?;
    let v_w2 = a.fresh(d.var_v_w2)?;
    let (y1, y2, s1, u2, x1, x2) = (a.l(Y1), a.l(Y2), a.l(S1), a.l(U2), a.l(X1), a.l(X2));
    let t1 = a.h(&y1, &[&s1]) - a.h(&(&y1 + &z1p), &[&s1]);
    let t2 = a.h(&y2, &[&u2]) - a.h(&(&(ch.h12 * &y2) + &vn1p), &[&u2]);
    let r0 = a.h(&s1, &[]) - a.h(&(&(ch.h21 * &x1) + &v_w2), &[]) + a.h(&u2, &[]) - a.h(&y2, &[&x2]) + a.h(&y1, &[])
        - a.h(&a.l(N1), &[])
        + a.h(&y2, &[])
        - a.h(&(&a.l(Z2) - &a.l(W2)), &[]);
    Ok(0.5 * (t1 + t2 + r0))
}

/// The `R0` part alone.
pub fn r0_assembled(ch: &ChannelParams, k: &GenieParams) -> Result<f64> {
    use Surrogate::*;
    let d = derive_noise(ch, k)?;
    let mut a = Assembly::new(ch, k)?;
    let v_w2 = a.fresh(d.var_v_w2)?;
    let (y1, y2, s1, u2, x1, x2) = (a.l(Y1), a.l(Y2), a.l(S1), a.l(U2), a.l(X1), a.l(X2));
    Ok(a.h(&s1, &[]) - a.h(&(&(ch.h21 * &x1) + &v_w2), &[]) + a.h(&u2, &[]) - a.h(&y2, &[&x2]) + a.h(&y1, &[])
        - a.h(&a.l(N1), &[])
        + a.h(&y2, &[])
        - a.h(&(&a.l(Z2) - &a.l(W2)), &[]))
}

/// Weighted bound on `R1 + 2 R2`, assembled along its derivation.
pub fn thm10_assembled(ch: &ChannelParams, k: &GenieParams) -> Result<f64> {
    use Surrogate::*;
    let d = derive_noise(ch, k)?;
    let mut a = Assembly::new(ch, k)?;
    let vn1p = a.fresh(d.var_v_n1 - ch.h12 * ch.h12 * d.var_z_minus_w2)?;
    let v_w2 = a.fresh(d.var_v_w2)?;
    let (y1, y2, s1, u2, x1, x2) = (a.l(Y1), a.l(Y2), a.l(S1), a.l(U2), a.l(X1), a.l(X2));
    let first = a.h(&s1, &[]) - a.h(&(&(ch.h21 * &x1) + &v_w2), &[]) + a.h(&u2, &[]) - a.h(&y2, &[&x2]);
    let second = a.h(&y2, &[&u2]) - a.h(&(&(ch.h12 * &y2) + &vn1p), &[&u2]);
    let third = a.h(&y1, &[&s1]) - a.h(&a.l(N1), &[]) + a.h(&y2, &[]) - a.h(&(&a.l(Z2) - &a.l(W2)), &[]);
    Ok(first + second + third)
}

/// `n` accepted draws of `(channel, genie)` for which `accept` holds.
pub fn random_instances<F: Fn(&ChannelParams, &GenieParams) -> bool>(
    n: usize,
    seed: u64,
    max_gain: f64,
    accept: F,
) -> Result<Vec<(ChannelParams, GenieParams)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut tries = 0usize;
    while out.len() < n {
        tries += 1;
        if tries > 5_000_000 {
            return Err(domain("could not draw enough feasible instances"));
        }
        let kind = if rng.gen_bool(0.5) { SignalKind::Real } else { SignalKind::Complex };
        let ch = ChannelParams::new(
            10f64.powf(rng.gen_range(-0.5..2.5)),
            10f64.powf(rng.gen_range(-0.5..2.5)),
            rng.gen_range(0.05..max_gain),
            rng.gen_range(0.05..max_gain),
            kind,
        )?;
        let mut a = [0.0; 8];
        for (i, v) in a.iter_mut().enumerate() {
            *v = if i < 4 { rng.gen_range(0.0..=1.0) } else { rng.gen_range(-1.0..=1.0) };
        }
        let k = GenieParams::from_array(a);
        if accept(&ch, &k) {
            out.push((ch, k));
        }
    }
    Ok(out)
}

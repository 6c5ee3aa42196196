//! Minimization of genie-parametrized bounds over the genie vector.
//!
//! Every bound depends on four of the eight genie coordinates. The search
//! scans a box grid over those four, then refines the best cells and the
//! analytic warm starts with a Nelder-Mead simplex followed by a shrinking
//! compass search. Infeasible points score `+inf`.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::gic_core::{BoundId, BoundResult, ChannelParams, GenieParams};
use crate::rate_region::thm10_bound;
use crate::upper_bounds::{
    a_step_kappa, a_step_window, b_step_kappa, genie_constraints, thm3_bound, thm4_bound, thm5_bound, GenieFamily,
    Inequality,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub grid_points_per_dim: usize,
    pub refine_iters: usize,
    pub tol_bits: f64,
    pub seed: u64,
    pub restarts: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { grid_points_per_dim: 9, refine_iters: 200, tol_bits: 1e-7, seed: 0, restarts: 8 }
    }
}

impl SearchOptions {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points_per_dim < 2 {
            return Err(invalid("grid_points_per_dim must be at least 2"));
        }
        if !(self.tol_bits > 0.0) {
            return Err(invalid("tol_bits must be positive"));
        }
        Ok(())
    }

    /// A cheaper profile for searches repeated at many points.
    pub fn light(&self) -> Self {
        Self {
            grid_points_per_dim: self.grid_points_per_dim.min(5),
            refine_iters: self.refine_iters.min(120),
            restarts: self.restarts.min(3),
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParametrizedBound {
    Thm3,
    Thm4,
    Thm4Swapped,
    Thm5,
    Thm5Swapped,
    /// Weighted region bound on `R1 + 2 R2`.
    Thm10,
    /// Weighted region bound on `2 R1 + R2`.
    Thm10Swapped,
}

/// Indices into [`GenieParams::to_array`].
pub const COORDS_W: [usize; 4] = [2, 3, 6, 7];
pub const COORDS_N1W2: [usize; 4] = [0, 3, 4, 7];
pub const COORDS_N2W1: [usize; 4] = [1, 2, 5, 6];

impl ParametrizedBound {
    pub fn bound_id(self) -> BoundId {
        match self {
            ParametrizedBound::Thm3 => BoundId::Thm3,
            ParametrizedBound::Thm4 => BoundId::Thm4,
            ParametrizedBound::Thm4Swapped => BoundId::Thm4Swapped,
            ParametrizedBound::Thm5 => BoundId::Thm5,
            ParametrizedBound::Thm5Swapped => BoundId::Thm5Swapped,
            ParametrizedBound::Thm10 => BoundId::Thm10,
            ParametrizedBound::Thm10Swapped => BoundId::Thm10Swapped,
        }
    }

    pub fn family(self) -> GenieFamily {
        match self {
            ParametrizedBound::Thm3 => GenieFamily::ChangeOfInterference,
            ParametrizedBound::Thm4 | ParametrizedBound::Thm4Swapped => GenieFamily::HybridA,
            _ => GenieFamily::HybridB,
        }
    }

    pub fn is_swapped(self) -> bool {
        matches!(self, ParametrizedBound::Thm4Swapped | ParametrizedBound::Thm5Swapped | ParametrizedBound::Thm10Swapped)
    }

    /// Genie coordinates the bound depends on, in the original indexing.
    pub fn coords(self) -> [usize; 4] {
        match self {
            ParametrizedBound::Thm3 => COORDS_W,
            b if b.is_swapped() => COORDS_N2W1,
            _ => COORDS_N1W2,
        }
    }

    fn unswapped(self) -> Self {
        match self {
            ParametrizedBound::Thm4Swapped => ParametrizedBound::Thm4,
            ParametrizedBound::Thm5Swapped => ParametrizedBound::Thm5,
            ParametrizedBound::Thm10Swapped => ParametrizedBound::Thm10,
            b => b,
        }
    }

    /// Bound value at `k` (original indexing); infeasible yields `+inf`.
    pub fn evaluate(self, ch: &ChannelParams, k: &GenieParams) -> BoundResult {
        let (c, kk) = if self.is_swapped() { (ch.swapped(), k.swapped()) } else { (*ch, *k) };
        let mut r = match self.unswapped() {
            ParametrizedBound::Thm3 => thm3_bound(&c, &kk),
            ParametrizedBound::Thm4 => thm4_bound(&c, &kk),
            ParametrizedBound::Thm5 => thm5_bound(&c, &kk),
            _ => thm10_bound(&c, &kk),
        };
        r.bound_id = self.bound_id();
        r.channel = *ch;
        r.achieving_params = Some(*k);
        r
    }

    /// Maps `k` onto the bound's feasible surface where that surface has no interior.
    ///
    /// For Hybrid-A, `Var(V_N1) >= Var(Z1 - N1/h21)` reduces to `(sigma_n1/h21 - rho_n1)^2 <= 0`,
    /// so `rho_n1` is tied to `sigma_n1` (in the working index order).
    pub fn project(self, ch: &ChannelParams, k: &GenieParams) -> GenieParams {
        if self.family() != GenieFamily::HybridA {
            return *k;
        }
        let (c, mut kk) = if self.is_swapped() { (ch.swapped(), k.swapped()) } else { (*ch, *k) };
        if c.h21 != 0.0 {
            kk.sigma_n1 = kk.sigma_n1.clamp(0.0, c.h21.abs().min(1.0));
            kk.rho_n1 = (kk.sigma_n1 / c.h21).clamp(-1.0, 1.0);
        }
        if self.is_swapped() {
            kk.swapped()
        } else {
            kk
        }
    }

    /// Analytic genies known to be feasible for Hybrid-B bounds, in original indexing.
    pub fn warm_starts(self, ch: &ChannelParams) -> Vec<GenieParams> {
        if self.family() != GenieFamily::HybridB {
            return Vec::new();
        }
        let c = if self.is_swapped() { ch.swapped() } else { *ch };
        let mut out = Vec::new();
        if let Ok(k) = b_step_kappa(&c) {
            out.push(k);
        }
        if c.is_symmetric() {
            if let Ok((lo, hi)) = a_step_window(c.h12) {
                for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
                    if let Ok(k) = a_step_kappa(&c, lo + t * (hi - lo)) {
                        out.push(k);
                    }
                }
            }
        }
        if self.is_swapped() {
            out.iter_mut().for_each(|k| *k = k.swapped());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Feasibility {
    pub feasible: bool,
    pub violated: Vec<Inequality>,
}

/// Exact constraint evaluation for a parametrized bound.
pub fn feasibility(bound: ParametrizedBound, ch: &ChannelParams, k: &GenieParams) -> Feasibility {
    let (c, kk) = if bound.is_swapped() { (ch.swapped(), k.swapped()) } else { (*ch, *k) };
    let mut violated: Vec<Inequality> = match genie_constraints(bound.family(), &c, &kk) {
        Ok(list) => list.into_iter().filter(|i| !i.holds()).collect(),
        Err(_) => vec![Inequality { label: "nonzero cross gains", lhs: 1.0, rhs: 0.0 }],
    };
    if !ch.is_weak() {
        violated.push(Inequality { label: "weak interference", lhs: ch.h12.abs().max(ch.h21.abs()), rhs: 1.0 });
    }
    Feasibility { feasible: violated.is_empty(), violated }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchOutcome {
    pub value: f64,
    pub params: Option<GenieParams>,
    /// Best value after each stage/iteration; nonincreasing.
    pub history: Vec<f64>,
    pub evaluations: usize,
}

fn lex_cmp(a: &(f64, [f64; 4]), b: &(f64, [f64; 4])) -> Ordering {
    a.0.total_cmp(&b.0).then_with(|| {
        a.1.iter().zip(b.1.iter()).map(|(x, y)| x.total_cmp(y)).find(|o| *o != Ordering::Equal).unwrap_or(Ordering::Equal)
    })
}

const LOWER: [f64; 4] = [0.0, 0.0, -1.0, -1.0];
const UPPER: [f64; 4] = [1.0, 1.0, 1.0, 1.0];

fn project(x: [f64; 4]) -> [f64; 4] {
    let mut y = x;
    for i in 0..4 {
        y[i] = y[i].clamp(LOWER[i], UPPER[i]);
    }
    y
}

struct Searcher<'a, F: Fn(&GenieParams) -> f64> {
    objective: &'a F,
    coords: [usize; 4],
    base: [f64; 8],
    evaluations: usize,
    best: (f64, [f64; 4]),
    history: Vec<f64>,
}

impl<'a, F: Fn(&GenieParams) -> f64> Searcher<'a, F> {
    fn genie(&self, x: &[f64; 4]) -> GenieParams {
        let mut a = self.base;
        for (slot, v) in self.coords.iter().zip(x.iter()) {
            a[*slot] = *v;
        }
        GenieParams::from_array(a)
    }

    fn eval(&mut self, x: [f64; 4]) -> f64 {
        let x = project(x);
        self.evaluations += 1;
        let v = (self.objective)(&self.genie(&x));
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if lex_cmp(&(v, x), &self.best) == Ordering::Less {
            self.best = (v, x);
        }
        v
    }

    fn record(&mut self) {
        self.history.push(self.best.0);
    }

    fn nelder_mead(&mut self, start: [f64; 4], iters: usize, tol: f64) {
        let step = 0.1;
        let mut simplex: Vec<([f64; 4], f64)> = Vec::with_capacity(5);
        let v0 = self.eval(start);
        simplex.push((project(start), v0));
        for i in 0..4 {
            let mut x = project(start);
            let span = UPPER[i] - LOWER[i];
            x[i] = if x[i] + step * span <= UPPER[i] { x[i] + step * span } else { x[i] - step * span };
            let v = self.eval(x);
            simplex.push((project(x), v));
        }
        for _ in 0..iters {
            simplex.sort_by(|a, b| lex_cmp(&(a.1, a.0), &(b.1, b.0)));
            let (best, worst) = (simplex[0].1, simplex[4].1);
            if best.is_finite() && worst.is_finite() && (worst - best).abs() <= tol {
                let size = simplex.iter().map(|(x, _)| dist(x, &simplex[0].0)).fold(0.0, f64::max);
                if size < 1e-9 {
                    break;
                }
            }
            let mut centroid = [0.0; 4];
            for (x, _) in &simplex[..4] {
                for i in 0..4 {
                    centroid[i] += x[i] / 4.0;
                }
            }
            let towards = |t: f64, x: &[f64; 4]| {
                let mut y = [0.0; 4];
                for i in 0..4 {
                    y[i] = centroid[i] + t * (x[i] - centroid[i]);
                }
                project(y)
            };
            let xw = simplex[4].0;
            let xr = towards(-1.0, &xw);
            let fr = self.eval(xr);
            if fr < simplex[0].1 {
                let xe = towards(-2.0, &xw);
                let fe = self.eval(xe);
                simplex[4] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[3].1 {
                simplex[4] = (xr, fr);
            } else {
                let (xc, fc) = if fr < simplex[4].1 {
                    let xc = towards(-0.5, &xw);
                    (xc, self.eval(xc))
                } else {
                    let xc = towards(0.5, &xw);
                    (xc, self.eval(xc))
                };
                if fc < simplex[4].1.min(fr) {
                    simplex[4] = (xc, fc);
                } else {
                    let x0 = simplex[0].0;
                    for j in 1..5 {
                        let mut y = [0.0; 4];
                        for i in 0..4 {
                            y[i] = x0[i] + 0.5 * (simplex[j].0[i] - x0[i]);
                        }
                        let y = project(y);
                        let fy = self.eval(y);
                        simplex[j] = (y, fy);
                    }
                }
            }
            self.record();
        }
    }

    /// Shrinking coordinate search around the incumbent.
    fn compass(&mut self, tol: f64) {
        let mut step = 0.05;
        while step > 1e-11 {
            let mut improved = false;
            for i in 0..4 {
                for dir in [1.0, -1.0] {
                    let (v, x) = self.best;
                    let mut y = x;
                    y[i] += dir * step;
                    let before = v;
                    let fy = self.eval(y);
                    if fy < before - tol * 1e-3 {
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
            self.record();
        }
    }
}

fn dist(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Minimize `objective` over the four genie coordinates `coords`, holding the
/// rest at [`GenieParams::unit`].
pub fn minimize_over_genie<F: Fn(&GenieParams) -> f64>(
    objective: &F,
    coords: [usize; 4],
    warm: &[GenieParams],
    opts: &SearchOptions,
) -> Result<SearchOutcome> {
    opts.validate()?;
    let mut s = Searcher {
        objective,
        coords,
        base: GenieParams::unit().to_array(),
        evaluations: 0,
        best: (f64::INFINITY, [1.0, 1.0, 1.0, 1.0]),
        history: Vec::new(),
    };
    let n = opts.grid_points_per_dim;
    let axis = |i: usize, j: usize| LOWER[i] + (UPPER[i] - LOWER[i]) * j as f64 / (n - 1) as f64;
    let keep = opts.restarts.max(1);
    let mut cells: Vec<(f64, [f64; 4])> = Vec::new();
    for i0 in 0..n {
        for i1 in 0..n {
            for i2 in 0..n {
                for i3 in 0..n {
                    let x = [axis(0, i0), axis(1, i1), axis(2, i2), axis(3, i3)];
                    let v = s.eval(x);
                    if v.is_finite() {
                        cells.push((v, x));
                    }
                }
            }
        }
    }
    cells.sort_by(lex_cmp);
    s.record();

    let mut starts: Vec<[f64; 4]> = warm
        .iter()
        .map(|k| {
            let a = k.to_array();
            [a[coords[0]], a[coords[1]], a[coords[2]], a[coords[3]]]
        })
        .collect();
    for w in &starts.clone() {
        s.eval(*w);
    }
    starts.extend(cells.iter().take(keep).map(|c| c.1));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..(keep / 2).max(1) {
        let x = [rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0), rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)];
        if s.eval(x).is_finite() {
            starts.push(x);
        }
    }
    for x in starts {
        s.nelder_mead(x, opts.refine_iters, opts.tol_bits);
    }
    if s.best.0.is_finite() {
        let start = s.best.1;
        s.nelder_mead(start, opts.refine_iters, opts.tol_bits);
        s.compass(opts.tol_bits);
    }
    s.record();
    let (value, x) = s.best;
    let params = value.is_finite().then(|| s.genie(&x));
    Ok(SearchOutcome { value, params, history: s.history, evaluations: s.evaluations })
}

pub fn minimize_bound_traced(bound: ParametrizedBound, ch: &ChannelParams, opts: &SearchOptions) -> Result<SearchOutcome> {
    ch.require_weak()?;
    let objective = |k: &GenieParams| bound.evaluate(ch, &bound.project(ch, k)).value;
    let mut out = minimize_over_genie(&objective, bound.coords(), &bound.warm_starts(ch), opts)?;
    out.params = out.params.map(|k| bound.project(ch, &k));
    Ok(out)
}

/// Smallest feasible bound value found, with the genie attaining it.
pub fn minimize_bound(bound: ParametrizedBound, ch: &ChannelParams, opts: &SearchOptions) -> Result<BoundResult> {
    let out = minimize_bound_traced(bound, ch, opts)?;
    Ok(match out.params {
        Some(k) if out.value.is_finite() => BoundResult::feasible(bound.bound_id(), *ch, out.value, Some(k)),
        _ => BoundResult::infeasible(bound.bound_id(), *ch, None),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::upper_bounds::{b_step_closed_form, r_sym_star, thm6_simplified};
    use crate::gic_core::derive_noise;
    use proptest::prelude::*;

    fn sym(p: f64, g2: f64) -> ChannelParams {
        ChannelParams::symmetric_real(p, g2.sqrt()).unwrap()
    }

    #[test]
    fn thm5_minimum_below_warm_starts() {
        let ch = sym(100.0, 0.3);
        let r = minimize_bound(ParametrizedBound::Thm5, &ch, &SearchOptions::default()).unwrap();
        assert!(r.feasible);
        assert!(r.value <= b_step_closed_form(100.0, 0.3f64.sqrt()).unwrap() + 1e-12);
        assert!(feasibility(ParametrizedBound::Thm5, &ch, &r.achieving_params.unwrap()).feasible);
    }

    #[test]
    fn thm5_minimum_tracks_simplified_bound() {
        let p: f64 = 100.0;
        let c = (1.0 - 0.5f64.sqrt()).powi(2);
        let lo = c.max(p.powf(-1.0 / 3.0));
        let opts = SearchOptions::default();
        let mut worst_gap: f64 = 0.0;
        for i in 1..10 {
            let g2 = lo + (1.0 - lo) * i as f64 / 10.0;
            let ch = sym(p, g2);
            let m = minimize_bound(ParametrizedBound::Thm5, &ch, &opts).unwrap().value;
            let t6 = thm6_simplified(p, g2.sqrt()).unwrap();
            assert!(m <= t6 + 1e-3, "g2 = {g2}: {m} vs {t6}");
            worst_gap = worst_gap.max(t6 - m);
        }
        assert!(worst_gap <= 1e-2, "simplified bound is {worst_gap} above the minimized one");
    }

    #[test]
    fn thm3_against_thm5_at_p7() {
        let opts = SearchOptions::default();
        let mut n_ge = 0;
        for g2 in [0.3, 0.4, 0.5, 0.6, 0.7] {
            let ch = sym(7.0, g2);
            let b1 = minimize_bound(ParametrizedBound::Thm3, &ch, &opts).unwrap();
            let b3 = minimize_bound(ParametrizedBound::Thm5, &ch, &opts).unwrap();
            assert!(b1.feasible && b3.feasible);
            if b1.value >= b3.value - 1e-6 {
                n_ge += 1;
            }
        }
        assert!(n_ge >= 3);
    }

    #[test]
    fn hybrid_a_search_lands_on_its_feasible_surface() {
        for g2 in [0.1f64, 0.3, 0.7] {
            let ch = ChannelParams::symmetric_real(7.0, g2.sqrt()).unwrap();
            for b in [ParametrizedBound::Thm4, ParametrizedBound::Thm4Swapped] {
                let r = minimize_bound(b, &ch, &SearchOptions::default()).unwrap();
                assert!(r.feasible && r.value.is_finite(), "{b:?} at g^2 = {g2}");
                assert!(feasibility(b, &ch, &r.achieving_params.unwrap()).feasible);
            }
        }
        let ch = ChannelParams::new(20.0, 30.0, 0.5, 0.7, crate::SignalKind::Real).unwrap();
        let k = ParametrizedBound::Thm4Swapped.project(&ch, &GenieParams::unit());
        assert!(feasibility(ParametrizedBound::Thm4Swapped, &ch, &k).violated.iter().all(|i| !i.label.contains("V_N1")));
    }

    #[test]
    fn deterministic_and_monotone() {
        let ch = ChannelParams::new(20.0, 30.0, 0.5, 0.7, crate::SignalKind::Real).unwrap();
        let opts = SearchOptions { seed: 42, ..SearchOptions::default() };
        let a = minimize_bound_traced(ParametrizedBound::Thm4, &ch, &opts).unwrap();
        let b = minimize_bound_traced(ParametrizedBound::Thm4, &ch, &opts).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.params, b.params);
        assert!(a.history.windows(2).all(|w| w[1] <= w[0]));
        if let Some(k) = a.params {
            assert!(feasibility(ParametrizedBound::Thm4, &ch, &k).feasible);
        }
    }

    #[test]
    fn feasibility_examples() {
        let g = 0.5f64.sqrt();
        let ch = sym(10.0, 0.5);
        let k = crate::upper_bounds::a_step_kappa(&ch, 1.0).unwrap();
        assert!(feasibility(ParametrizedBound::Thm5, &ch, &k).feasible);
        let (lo, hi) = crate::upper_bounds::a_step_window(g).unwrap();
        assert!(lo <= hi);
        let zeros = GenieParams::from_array([0.0; 8]);
        let f = feasibility(ParametrizedBound::Thm3, &ch, &zeros);
        assert!(!f.feasible && !f.violated.is_empty());
        let outside = GenieParams { sigma_n1: 1.5, ..GenieParams::unit() };
        assert!(!feasibility(ParametrizedBound::Thm5, &ch, &outside).feasible);
        assert!(r_sym_star(10.0, g).is_ok());
    }

    fn independent_checks(family: GenieFamily, ch: &ChannelParams, k: &GenieParams) -> bool {
        let (h12, h21) = (ch.h12, ch.h21);
        let zw = |s: f64, r: f64| 1.0 + s * s - 2.0 * r * s;
        let vw = |s: f64, r: f64| s * s - (r * s - s * s).powi(2) / zw(s, r);
        let vn = |r: f64| 1.0 - r * r;
        let zn1 = 1.0 + k.sigma_n1.powi(2) / (h21 * h21) - 2.0 * k.rho_n1 * k.sigma_n1 / h21;
        let tol = 1e-12;
        let le = |a: f64, b: f64| a <= b + tol * (1.0 + b.abs());
        match family {
            GenieFamily::ChangeOfInterference => {
                zw(k.sigma_w1, k.rho_w1) > 1e-10
                    && zw(k.sigma_w2, k.rho_w2) > 1e-10
                    && le(h12 * h12 * zw(k.sigma_w2, k.rho_w2), vw(k.sigma_w1, k.rho_w1))
                    && le(h21 * h21 * zw(k.sigma_w1, k.rho_w1), vw(k.sigma_w2, k.rho_w2))
            }
            GenieFamily::HybridA | GenieFamily::HybridB => {
                let z2w2 = zw(k.sigma_w2, k.rho_w2);
                if !(z2w2 > 1e-10 && k.sigma_n1 * k.sigma_n1 > 1e-10) {
                    return false;
                }
                let c1 = le(k.sigma_n1.powi(2).min(k.sigma_w2.powi(2)), vw(k.sigma_w2, k.rho_w2));
                if family == GenieFamily::HybridA {
                    c1 && le(zn1, vn(k.rho_n1)) && le(h12 * h12 * z2w2, 1.0)
                } else {
                    c1 && le(h12 * h12 * z2w2, vn(k.rho_n1)) && le(zn1, 1.0)
                }
            }
        }
    }

    proptest! {
        #[test]
        fn feasibility_matches_independent_derivation(
            s in prop::array::uniform4(0.0..=1.0f64),
            r in prop::array::uniform4(-1.0..=1.0f64),
            g2 in 0.01..=1.0f64,
            p in 0.5..100.0f64,
        ) {
            let ch = sym(p, g2);
            let k = GenieParams {
                sigma_n1: s[0], sigma_n2: s[1], sigma_w1: s[2], sigma_w2: s[3],
                rho_n1: r[0], rho_n2: r[1], rho_w1: r[2], rho_w2: r[3],
            };
            prop_assume!(derive_noise(&ch, &k).is_ok());
            for (bound, family) in [
                (ParametrizedBound::Thm3, GenieFamily::ChangeOfInterference),
                (ParametrizedBound::Thm4, GenieFamily::HybridA),
                (ParametrizedBound::Thm5, GenieFamily::HybridB),
            ] {
                prop_assert_eq!(feasibility(bound, &ch, &k).feasible, independent_checks(family, &ch, &k));
            }
        }
    }
}

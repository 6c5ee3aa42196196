//! Capacity-region outer bounds, the time-division inner region, and
//! boundary tracing by constraint intersection.
//!
//! Every constraint is expressed as a ceiling on `R1` given `R2`, so a region
//! boundary is the pointwise minimum of ceilings over an `R2` grid.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::gic_core::{BoundId, BoundResult, ChannelParams, GenieParams};
use crate::param_search::{minimize_bound, minimize_over_genie, ParametrizedBound, SearchOptions, COORDS_W};
use crate::upper_bounds::{etw_values, genie_feasible, GenieFamily, Moments};

pub const DEFAULT_REGION_POINTS: usize = 400;
const ANCHORS: usize = 12;
const TRACE_TOL: f64 = 1e-9;

pub type Ceiling = Arc<dyn Fn(f64) -> Option<f64> + Send + Sync>;

#[derive(Clone)]
pub enum ConstraintShape {
    /// `c1 R1 + c2 R2 <= value`.
    Linear { c1: f64, c2: f64, value: f64 },
    /// `R1 <= f(R2)`; `None` where the constraint is absent.
    Implicit(Ceiling),
}

impl fmt::Debug for ConstraintShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintShape::Linear { c1, c2, value } => {
                f.debug_struct("Linear").field("c1", c1).field("c2", c2).field("value", value).finish()
            }
            ConstraintShape::Implicit(_) => f.write_str("Implicit(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RegionConstraint {
    pub shape: ConstraintShape,
    pub label: &'static str,
    pub source: BoundId,
    pub genies: Vec<GenieParams>,
}

impl RegionConstraint {
    pub fn linear(label: &'static str, source: BoundId, c1: f64, c2: f64, value: f64) -> Result<Self> {
        if !(c1 >= 0.0 && c2 >= 0.0) || (c1 == 0.0 && c2 == 0.0) || value.is_nan() {
            return Err(invalid(format!("bad linear constraint {label}: c1={c1}, c2={c2}, value={value}")));
        }
        Ok(Self { shape: ConstraintShape::Linear { c1, c2, value }, label, source, genies: Vec::new() })
    }

    /// Largest admissible `R1` at `r2` (may be negative or infinite).
    pub fn ceiling(&self, r2: f64) -> f64 {
        match &self.shape {
            ConstraintShape::Linear { c1, c2, value } => {
                if *c1 > 0.0 {
                    (value - c2 * r2) / c1
                } else if c2 * r2 <= value + TRACE_TOL {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                }
            }
            ConstraintShape::Implicit(f) => f(r2).unwrap_or(f64::INFINITY),
        }
    }

    fn r2_limit(&self) -> Option<f64> {
        match &self.shape {
            ConstraintShape::Linear { c2, value, .. } if *c2 > 0.0 => Some(value / c2),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionBoundary {
    /// `(R1, R2)` pairs, `R1` nondecreasing and `R2` nonincreasing.
    pub points: Vec<(f64, f64)>,
    /// Grid step in bits.
    pub resolution: f64,
}

/// The seven constraints of the genie-aided outer bound with unit genie noise.
pub fn etw_region(ch: &ChannelParams) -> Result<Vec<RegionConstraint>> {
    ch.require_weak()?;
    let v = etw_values(ch);
    Ok(vec![
        RegionConstraint::linear("R1", BoundId::Etw, 1.0, 0.0, v.r1)?,
        RegionConstraint::linear("R2", BoundId::Etw, 0.0, 1.0, v.r2)?,
        RegionConstraint::linear("R1+R2 (a)", BoundId::Etw, 1.0, 1.0, v.sum_a)?,
        RegionConstraint::linear("R1+R2 (b)", BoundId::Etw, 1.0, 1.0, v.sum_b)?,
        RegionConstraint::linear("R1+R2 (c)", BoundId::Etw, 1.0, 1.0, v.sum_c)?,
        RegionConstraint::linear("2R1+R2", BoundId::Etw, 2.0, 1.0, v.two_r1_r2)?,
        RegionConstraint::linear("R1+2R2", BoundId::Etw, 1.0, 2.0, v.r1_two_r2)?,
    ])
}

fn single_user(ch: &ChannelParams) -> Result<Vec<RegionConstraint>> {
    let v = etw_values(ch);
    Ok(vec![
        RegionConstraint::linear("R1", BoundId::Etw, 1.0, 0.0, v.r1)?,
        RegionConstraint::linear("R2", BoundId::Etw, 0.0, 1.0, v.r2)?,
    ])
}

/// Pieces of the implicit bound `R1 <= A + p log2((c 2^{-R2/p} - d) / z) - R2` for one genie.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thm9Terms {
    pub offset: f64,
    /// `P2 + |h21|^2 P1 + 1`.
    pub c: f64,
    /// `1 - sigma_W2^2`.
    pub d: f64,
    /// `var(Z2 - W2)`.
    pub z: f64,
    pub prelog: f64,
}

impl Thm9Terms {
    /// `p log2((c 2^{-R2/p} - d) / z)`, or `None` where the argument is not positive.
    pub fn epi_term(&self, r2: f64) -> Option<f64> {
        let arg = self.c * (-r2 / self.prelog).exp2() - self.d;
        (arg > 0.0).then(|| self.prelog * (arg / self.z).log2())
    }

    pub fn r1_ceiling(&self, r2: f64) -> Option<f64> {
        self.epi_term(r2).map(|e| self.offset + e - r2)
    }

    /// Inverse reading: the `R1` ceiling implied by `R2 <= A + p log2((c 2^{-R1/p} - d)/z) - R1`.
    pub fn inverse_ceiling(&self, r2: f64) -> f64 {
        let s = self.z * ((r2 - self.offset) / self.prelog).exp2();
        let x = (self.d + (self.d * self.d + 4.0 * self.c * s).sqrt()) / (2.0 * self.c);
        -self.prelog * x.log2()
    }
}

/// Terms of the implicit region bound on `R1` (`None` when the genie is infeasible).
pub fn thm9_terms(ch: &ChannelParams, k: &GenieParams) -> Option<Thm9Terms> {
    if !ch.is_weak() || !genie_feasible(GenieFamily::ChangeOfInterference, ch, k) || k.sigma_w2 > 1.0 {
        return None;
    }
    let m = Moments::new(ch, k).ok()?;
    let p = ch.kind.prelog();
    let offset = p * (m.t_u1() + m.t_y1_u1() + m.t_y2_u2());
    let t = Thm9Terms { offset, c: m.p2 + m.b + 1.0, d: 1.0 - k.sigma_w2 * k.sigma_w2, z: m.d.var_z_minus_w2, prelog: p };
    offset.is_finite().then_some(t)
}

fn thm9_anchor_genies(ch: &ChannelParams, r2_max: f64, opts: &SearchOptions) -> Result<Vec<GenieParams>> {
    let light = opts.light();
    let found: Vec<Option<GenieParams>> = (0..ANCHORS)
        .into_par_iter()
        .map(|i| {
            let r2 = r2_max * i as f64 / (ANCHORS - 1) as f64;
            let objective = |k: &GenieParams| thm9_terms(ch, k).and_then(|t| t.r1_ceiling(r2)).unwrap_or(f64::INFINITY);
            minimize_over_genie(&objective, COORDS_W, &[GenieParams::unit()], &light).map(|o| o.params)
        })
        .collect::<Result<_>>()?;
    let mut out: Vec<GenieParams> = Vec::new();
    for k in found.into_iter().flatten() {
        if !out.contains(&k) {
            out.push(k);
        }
    }
    Ok(out)
}

/// The implicit region bounds on `R1` and, with indices exchanged, on `R2`.
///
/// Each is the pointwise minimum over a set of genies minimized at anchor
/// points spread over `[0, R2max]`.
pub fn thm9_constraints(ch: &ChannelParams, opts: &SearchOptions) -> Result<Vec<RegionConstraint>> {
    ch.require_weak()?;
    let v = etw_values(ch);
    let direct = thm9_anchor_genies(ch, v.r2, opts)?;
    let sw = ch.swapped();
    let mirrored = thm9_anchor_genies(&sw, v.r1, opts)?;

    let terms: Vec<Thm9Terms> = direct.iter().filter_map(|k| thm9_terms(ch, k)).collect();
    let f: Ceiling = Arc::new(move |r2: f64| {
        terms.iter().filter_map(|t| t.r1_ceiling(r2)).fold(None, |acc: Option<f64>, c| Some(acc.map_or(c, |a| a.min(c))))
    });
    let terms_sw: Vec<Thm9Terms> = mirrored.iter().filter_map(|k| thm9_terms(&sw, k)).collect();
    let g: Ceiling = Arc::new(move |r2: f64| {
        terms_sw.iter().map(|t| t.inverse_ceiling(r2)).fold(None, |acc: Option<f64>, c| Some(acc.map_or(c, |a| a.min(c))))
    });
    Ok(vec![
        RegionConstraint { shape: ConstraintShape::Implicit(f), label: "R1 implicit", source: BoundId::Thm9, genies: direct },
        RegionConstraint {
            shape: ConstraintShape::Implicit(g),
            label: "R2 implicit",
            source: BoundId::Thm9Swapped,
            genies: mirrored.iter().map(GenieParams::swapped).collect(),
        },
    ])
}

/// Weighted bound on `R1 + 2 R2` at a Hybrid-B genie.
pub fn thm10_bound(ch: &ChannelParams, k: &GenieParams) -> BoundResult {
    let id = BoundId::Thm10;
    if !ch.is_weak() || !genie_feasible(GenieFamily::HybridB, ch, k) {
        return BoundResult::infeasible(id, *ch, Some(*k));
    }
    let Ok(m) = Moments::new(ch, k) else {
        return BoundResult::infeasible(id, *ch, Some(*k));
    };
    let (d, b) = (&m.d, m.b);
    let sn1s = k.sigma_n1 * k.sigma_n1;
    let sum = ((b + sn1s) / (b + d.var_v_w2)).log2()
        + ((b + k.sigma_w2 * k.sigma_w2) / (b + 1.0)).log2()
        + (m.y2_u2 / (m.r_y2_u2 + d.var_v_n1)).log2()
        + (m.y1_s1 / sn1s).log2()
        + ((m.p2 + b + 1.0) / d.var_z_minus_w2).log2();
    let value = ch.kind.prelog() * sum;
    if value.is_finite() {
        BoundResult::feasible(id, *ch, value, Some(*k))
    } else {
        BoundResult::infeasible(id, *ch, Some(*k))
    }
}

/// Minimized weighted bounds: `R1 + 2 R2` and `2 R1 + R2`.
pub fn thm10_constraints(ch: &ChannelParams, opts: &SearchOptions) -> Result<Vec<RegionConstraint>> {
    ch.require_weak()?;
    let mut out = Vec::new();
    for (bound, c1, c2, label) in
        [(ParametrizedBound::Thm10, 1.0, 2.0, "R1+2R2"), (ParametrizedBound::Thm10Swapped, 2.0, 1.0, "2R1+R2")]
    {
        let r = minimize_bound(bound, ch, opts)?;
        if r.feasible {
            let mut c = RegionConstraint::linear(label, r.bound_id, c1, c2, r.value)?;
            c.genies = r.achieving_params.into_iter().collect();
            out.push(c);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum OuterRegion {
    /// The genie-aided outer bound with unit noise.
    Etw,
    /// Single-user, change-of-interference sum and the implicit bounds.
    Outer1,
    /// Single-user, hybrid sum and the weighted bounds.
    Outer2,
}

impl OuterRegion {
    pub const ALL: [OuterRegion; 3] = [OuterRegion::Etw, OuterRegion::Outer1, OuterRegion::Outer2];

    pub fn name(self) -> &'static str {
        match self {
            OuterRegion::Etw => "etw",
            OuterRegion::Outer1 => "outer1",
            OuterRegion::Outer2 => "outer2",
        }
    }
}

pub fn outer_region(region: OuterRegion, ch: &ChannelParams, opts: &SearchOptions) -> Result<Vec<RegionConstraint>> {
    ch.require_weak()?;
    let mut cs = match region {
        OuterRegion::Etw => return etw_region(ch),
        _ => single_user(ch)?,
    };
    let sum_bounds: &[ParametrizedBound] = match region {
        OuterRegion::Outer1 => &[ParametrizedBound::Thm3],
        _ => &[ParametrizedBound::Thm5, ParametrizedBound::Thm5Swapped],
    };
    for b in sum_bounds {
        let r = minimize_bound(*b, ch, opts)?;
        if r.feasible {
            let mut c = RegionConstraint::linear("R1+R2", r.bound_id, 1.0, 1.0, r.value)?;
            c.genies = r.achieving_params.into_iter().collect();
            cs.push(c);
        }
    }
    if region == OuterRegion::Outer1 {
        cs.extend(thm9_constraints(ch, opts)?);
    } else {
        cs.extend(thm10_constraints(ch, opts)?);
    }
    Ok(cs)
}

/// Minimum ceiling over all constraints at `r2`.
pub fn region_ceiling(constraints: &[RegionConstraint], r2: f64) -> f64 {
    constraints.iter().map(|c| c.ceiling(r2)).fold(f64::INFINITY, f64::min)
}

fn r2_extent(constraints: &[RegionConstraint]) -> f64 {
    let mut hi = constraints.iter().filter_map(RegionConstraint::r2_limit).fold(f64::INFINITY, f64::min);
    if region_ceiling(constraints, hi) >= 0.0 {
        return hi;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if region_ceiling(constraints, mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    lo
}

/// Boundary of the intersection on a uniform `R2` grid with `intervals` steps.
pub fn intersect_and_trace(constraints: &[RegionConstraint], intervals: usize) -> Result<RegionBoundary> {
    if constraints.is_empty() {
        return Err(invalid("no constraints to intersect"));
    }
    let has = |pred: fn(f64, f64) -> bool| {
        constraints.iter().any(|c| matches!(c.shape, ConstraintShape::Linear { c1, c2, .. } if pred(c1, c2)))
    };
    if !has(|c1, c2| c1 > 0.0 && c2 == 0.0) || !has(|c1, c2| c1 == 0.0 && c2 > 0.0) {
        return Err(invalid("both single-user constraints are required"));
    }
    if intervals == 0 {
        return Err(invalid("resolution must be at least one interval"));
    }
    let r2_max = r2_extent(constraints);
    if !(r2_max >= 0.0) || region_ceiling(constraints, 0.0) < 0.0 {
        return Err(invalid("the constraints leave an empty region"));
    }
    let step = r2_max / intervals as f64;
    let mut ceilings: Vec<(f64, f64)> = (0..=intervals)
        .into_par_iter()
        .map(|i| {
            let r2 = if i == intervals { r2_max } else { step * i as f64 };
            (region_ceiling(constraints, r2).max(0.0), r2)
        })
        .collect();
    for i in 1..ceilings.len() {
        ceilings[i].0 = ceilings[i].0.min(ceilings[i - 1].0);
    }
    ceilings.reverse();
    Ok(RegionBoundary { points: ceilings, resolution: step })
}

/// Power-controlled time division: `(λ C(P1/λ), (1-λ) C(P2/(1-λ)))` for `λ` in `[0, 1]`.
pub fn tdm_inner_region(ch: &ChannelParams, intervals: usize) -> Result<RegionBoundary> {
    if intervals == 0 {
        return Err(invalid("resolution must be at least one interval"));
    }
    let pl = ch.kind.prelog();
    let rate = |lambda: f64, p: f64| if lambda <= 0.0 { 0.0 } else { lambda * pl * (1.0 + p / lambda).log2() };
    let points = (0..=intervals)
        .map(|i| {
            let l = i as f64 / intervals as f64;
            (rate(l, ch.p1), rate(1.0 - l, ch.p2))
        })
        .collect();
    Ok(RegionBoundary { points, resolution: 1.0 / intervals as f64 })
}

/// Whether every point of `inner` lies under the boundary of `constraints`.
pub fn contains(constraints: &[RegionConstraint], inner: &RegionBoundary, tol: f64) -> bool {
    inner.points.iter().all(|&(r1, r2)| region_ceiling(constraints, r2) >= r1 - tol)
}

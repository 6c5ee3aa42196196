use gic_bounds::analysis::{alpha_of, classify};
use gic_bounds::lower_bounds::{hk_lower_fixed_a, hk_sum, r_shk, r_tdm, r_tin, underline_r};
use gic_bounds::param_search::{minimize_bound, ParametrizedBound, SearchOptions};
use gic_bounds::upper_bounds::{best_upper, cor1_rbar, etw_sum_bound, kramer_sym, r_sym_star, thm6_simplified};
use gic_bounds::{ChannelParams, SignalKind};
use rayon::prelude::*;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Column {
    Etw,
    Kramer,
    Thm3,
    Thm4,
    Thm5,
    Thm5Swapped,
    Thm6,
    Cor1RBar,
    RSymStar,
    BestUpper,
    Tdm,
    Tin,
    Hk,
    HkLower,
    Shk,
    UnderlineR,
}

impl Column {
    pub const ALL: [Column; 16] = [
        Column::Etw,
        Column::Kramer,
        Column::Thm3,
        Column::Thm4,
        Column::Thm5,
        Column::Thm5Swapped,
        Column::Thm6,
        Column::Cor1RBar,
        Column::RSymStar,
        Column::BestUpper,
        Column::Tdm,
        Column::Tin,
        Column::Hk,
        Column::HkLower,
        Column::Shk,
        Column::UnderlineR,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Column::Etw => "etw",
            Column::Kramer => "kramer",
            Column::Thm3 => "thm3",
            Column::Thm4 => "thm4",
            Column::Thm5 => "thm5",
            Column::Thm5Swapped => "thm5_swapped",
            Column::Thm6 => "thm6",
            Column::Cor1RBar => "cor1_rbar",
            Column::RSymStar => "r_sym_star",
            Column::BestUpper => "best_upper",
            Column::Tdm => "tdm",
            Column::Tin => "tin",
            Column::Hk => "hk",
            Column::HkLower => "hk_lower",
            Column::Shk => "shk",
            Column::UnderlineR => "underline_r",
        }
    }

    /// Closed forms derived for the symmetric real channel only.
    fn real_only(self) -> bool {
        !matches!(self, Column::Etw | Column::Thm3 | Column::Thm4 | Column::Thm5 | Column::Thm5Swapped | Column::BestUpper)
    }

    fn evaluate(self, ch: &ChannelParams, opts: &SearchOptions) -> Option<f64> {
        if self.real_only() && ch.kind != SignalKind::Real {
            return None;
        }
        let (p, g) = (ch.p1, ch.h12);
        let minimized = |b: ParametrizedBound| minimize_bound(b, ch, opts).ok().filter(|r| r.feasible).map(|r| r.value);
        let v = match self {
            Column::Etw => Some(etw_sum_bound(ch).value),
            Column::Kramer => kramer_sym(p, g).ok(),
            Column::Thm3 => minimized(ParametrizedBound::Thm3),
            Column::Thm4 => minimized(ParametrizedBound::Thm4),
            Column::Thm5 => minimized(ParametrizedBound::Thm5),
            Column::Thm5Swapped => minimized(ParametrizedBound::Thm5Swapped),
            Column::Thm6 => thm6_simplified(p, g).ok(),
            Column::Cor1RBar => cor1_rbar(p, g).ok(),
            Column::RSymStar => r_sym_star(p, g).ok(),
            Column::BestUpper => best_upper(ch, opts).ok().map(|r| r.value),
            Column::Tdm => r_tdm(p).ok(),
            Column::Tin => r_tin(p, g).ok(),
            Column::Hk => hk_sum(p, g).ok().map(|h| h.rate),
            Column::HkLower => hk_lower_fixed_a(p, g).ok(),
            Column::Shk => r_shk(p, g).ok(),
            Column::UnderlineR => underline_r(p, g).ok(),
        };
        v.filter(|x| x.is_finite())
    }
}

/// `all`, or a comma-separated list of column names; returned in column order.
pub fn parse_bounds(text: &str) -> Result<Vec<Column>, CliError> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if item == "all" {
            out.extend(Column::ALL);
            continue;
        }
        let c = Column::ALL
            .into_iter()
            .find(|c| c.name() == item)
            .ok_or_else(|| CliError::Usage(format!("unknown bound '{item}'")))?;
        out.push(c);
    }
    if out.is_empty() {
        return Err(CliError::Usage("the bound list is empty".into()));
    }
    out.sort();
    out.dedup();
    Ok(out)
}

pub struct Row {
    pub p: f64,
    pub g2: f64,
    pub alpha: Option<f64>,
    pub values: Vec<Option<f64>>,
    pub regime: Option<&'static str>,
}

pub fn rows(points: &[(f64, f64)], columns: &[Column], kind: SignalKind, opts: &SearchOptions) -> Result<Vec<Row>, CliError> {
    for &(p, g2) in points {
        if !(p > 0.0) || !(g2 > 0.0) {
            return Err(CliError::Usage(format!("need P > 0 and g^2 > 0, got P = {p}, g^2 = {g2}")));
        }
    }
    points
        .par_iter()
        .map(|&(p, g2)| {
            let ch = ChannelParams::symmetric(p, g2.sqrt(), kind)?;
            Ok(Row {
                p,
                g2,
                alpha: alpha_of(p, g2),
                values: columns.iter().map(|c| c.evaluate(&ch, opts)).collect(),
                regime: classify(p, ch.h12).ok().map(|l| l.regime.as_str()),
            })
        })
        .collect()
}

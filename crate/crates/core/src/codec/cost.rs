//! The bit-cost ledger: fractional formula values per section, the actual
//! encoded bits, and the audited slack between them.
//!
//! Formulas count fractional bits (no ceilings); the real stream cannot, so
//! the ledger keeps both and bounds their gap explicitly: each gamma code
//! costs at most one bit over its 2·log₂ budget, each shifted gamma at most
//! two more, and each fixed-width field (rank, raw draw, local index) at
//! most one bit over its fractional width.

use serde::{Deserialize, Serialize};

use super::rank::log2_binomial;
use super::{Section, SectionTable, SRow};
use crate::analysis::NodeClassification;
use crate::graph::Graph;
use crate::protocol::RaesParams;

/// One section's ledger entry.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SectionCost {
    /// Formula value in fractional bits.
    pub fractional: f64,
    /// Bits actually written.
    pub actual_bits: u64,
    /// Audited upper bound on actual − fractional.
    pub slack_bits: u64,
}

impl SectionCost {
    /// The audited inequality actual ≤ fractional + slack.
    pub fn within_slack(&self) -> bool {
        (self.actual_bits as f64) <= self.fractional + self.slack_bits as f64 + 1e-6
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Sections {
    pub table1: SectionCost,
    pub table3: SectionCost,
    pub table2_upper: SectionCost,
    pub field1: SectionCost,
    pub field2: SectionCost,
    pub field3: SectionCost,
    pub field4_cats: SectionCost,
    pub field4_ranks: SectionCost,
    pub field5: SectionCost,
}

impl Sections {
    pub fn get(&self, s: Section) -> &SectionCost {
        match s {
            Section::Table1 => &self.table1,
            Section::Table3 => &self.table3,
            Section::Table2Upper => &self.table2_upper,
            Section::Field1 => &self.field1,
            Section::Field2 => &self.field2,
            Section::Field3 => &self.field3,
            Section::Field4Cats => &self.field4_cats,
            Section::Field4Ranks => &self.field4_ranks,
            Section::Field5 => &self.field5,
        }
    }
}

/// Whether the expansion theorem's hypotheses hold for this instance; the
/// required constants are astronomical, so these are reported, not
/// enforced. ε is the measured mean cut fraction.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TheoremHypotheses {
    /// d >= 44.
    pub d_ok: bool,
    /// c >= max{(2/α)², 10·e^(10d)}, compared in logarithms to avoid
    /// overflow.
    pub c_ok: bool,
    /// λ⁺ <= ε·α²·Δ, when λ⁺ was supplied.
    pub lambda_ok: Option<bool>,
    pub lambda2_plus: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostReport {
    pub n: usize,
    pub s: usize,
    pub d: u32,
    pub cd: u32,
    pub t_max: u32,
    pub delta: u32,
    /// Mean cut fractions ε and δ over S.
    pub eps: f64,
    pub delta_mean: f64,
    pub sections: Sections,
    /// Uncompressed size n·d·T·log₂Δ in fractional bits.
    pub raw_total_fractional: f64,
    pub total_actual_bits: u64,
    /// The closed-form savings expression evaluated at (n, s, d, ε); its
    /// sign is meaningful only under the theorem's constants.
    pub savings: f64,
    pub hypotheses: TheoremHypotheses,
}

impl CostReport {
    pub fn cost_s(&self) -> f64 {
        self.sections.table1.fractional
    }

    pub fn cost_a(&self) -> f64 {
        self.sections.field1.fractional
    }

    pub fn cost_cut(&self) -> f64 {
        self.sections.field2.fractional
    }

    pub fn cost_dest_acc(&self) -> f64 {
        self.sections.field3.fractional
    }

    pub fn cost_c(&self) -> f64 {
        self.sections.table3.fractional
    }

    pub fn cost_dest_rej(&self) -> f64 {
        self.sections.field4_cats.fractional + self.sections.field4_ranks.fractional
    }

    /// Fractional bits of the unused S-side randomness (Field 5).
    pub fn unused_fractional(&self) -> f64 {
        self.sections.field5.fractional
    }

    /// Sum of all per-section actual bit counts; equals the stream length.
    pub fn actual_sum(&self) -> u64 {
        [
            self.sections.table1,
            self.sections.table3,
            self.sections.table2_upper,
            self.sections.field1,
            self.sections.field2,
            self.sections.field3,
            self.sections.field4_cats,
            self.sections.field4_ranks,
            self.sections.field5,
        ]
        .iter()
        .map(|c| c.actual_bits)
        .sum()
    }
}

/// Per-section counters of written prefix-free integers, shift-by-one
/// encodings, and fixed-width fields.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct SlackParts {
    pub gammas: u64,
    pub shifts: u64,
    pub fixed: u64,
}

impl SlackParts {
    fn bits(&self) -> u64 {
        self.gammas + 2 * self.shifts + self.fixed
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct SectionSlack {
    pub table1: SlackParts,
    pub table3: SlackParts,
    pub table2_upper: SlackParts,
    pub field1: SlackParts,
    pub field2: SlackParts,
    pub field3: SlackParts,
    pub field4_cats: SlackParts,
    pub field4_ranks: SlackParts,
    pub field5: SlackParts,
}

/// log₂ floored at zero for counts below one.
fn log2_pos(x: f64) -> f64 {
    if x < 1.0 {
        0.0
    } else {
        x.log2()
    }
}

/// The closed-form savings of the compressed representation over the raw
/// one, as a function of (n, s, d, ε):
/// −3s·log(n/s) + ((1 − 13ε·log(1/ε))/2)·d·s·log(n/s) − (1/4 + 2ε)·d·s.
pub fn savings_expression(n: usize, s: usize, d: u32, eps: f64) -> f64 {
    let ratio = (n as f64 / s as f64).log2();
    let ds = d as f64 * s as f64;
    let xlx = if eps > 0.0 { eps * (1.0 / eps).log2() } else { 0.0 };
    -3.0 * s as f64 * ratio + (1.0 - 13.0 * xlx) / 2.0 * ds * ratio - (0.25 + 2.0 * eps) * ds
}

pub(crate) fn build_cost_report(
    g: &Graph,
    params: &RaesParams,
    rows: &[SRow],
    classification: &NodeClassification,
    table: &SectionTable,
    slack: &SectionSlack,
) -> CostReport {
    let n = g.n();
    let s = rows.len();
    let d = params.d;
    let t_max = params.max_rounds;
    let delta = g.delta();
    let dt = d as u64 * t_max as u64;
    let log_delta = log2_pos(delta as f64);
    let c = params.c_value();

    let eps: f64 =
        rows.iter().map(|r| r.eps_d() as f64).sum::<f64>() / (s as f64 * d as f64);
    let delta_mean: f64 = rows
        .iter()
        .map(|r| (delta - r.deg_s()) as f64)
        .sum::<f64>()
        / (s as f64 * delta as f64);

    let frac_table1 = 2.0 * log2_pos(s as f64) + log2_binomial(n as u64, s as u64);

    let mut frac_table3 = 0.0;
    for rc in &classification.rounds {
        let ct = rc.critical.len() as u64;
        frac_table3 += 2.0 * log2_pos(ct as f64) + log2_binomial(n as u64, ct);
    }

    let frac_upper = (n - s) as f64 * dt as f64 * log_delta;

    let mut frac_field1 = 0.0;
    let mut frac_field2 = 0.0;
    let mut frac_field3 = 0.0;
    let mut frac_cats = 0.0;
    let mut frac_ranks = 0.0;
    let mut frac_field5 = 0.0;
    for row in rows {
        let ell = row.ell() as f64;
        frac_field1 += 2.0 * log2_pos(ell) + log2_binomial(row.ell() as u64, d as u64);
        frac_field2 += 2.0 * log2_pos(row.eps_d() as f64)
            + log2_binomial(d as u64, row.eps_d() as u64);
        frac_field3 += (d - row.eps_d()) as f64 * log2_pos(row.deg_s() as f64)
            + row.eps_d() as f64 * log_delta;
        frac_cats += ell - d as f64;
        frac_field5 += (dt - row.ell() as u64) as f64 * log_delta;

        let rss = classification.rss(row.v) as f64;
        frac_ranks += rss * log2_pos(2.0 * n as f64 / c);
        for t in 1..=classification.rounds.len() as u32 {
            let rc = classification.rc(row.v, t) as f64;
            if rc > 0.0 {
                frac_ranks += rc * log2_pos(classification.c_t(t) as f64);
            }
        }
    }

    let section_cost = |sec: Section, frac: f64, parts: &SlackParts| SectionCost {
        fractional: frac,
        actual_bits: table.bits(sec) as u64,
        slack_bits: parts.bits(),
    };
    let sections = Sections {
        table1: section_cost(Section::Table1, frac_table1, &slack.table1),
        table3: section_cost(Section::Table3, frac_table3, &slack.table3),
        table2_upper: section_cost(Section::Table2Upper, frac_upper, &slack.table2_upper),
        field1: section_cost(Section::Field1, frac_field1, &slack.field1),
        field2: section_cost(Section::Field2, frac_field2, &slack.field2),
        field3: section_cost(Section::Field3, frac_field3, &slack.field3),
        field4_cats: section_cost(Section::Field4Cats, frac_cats, &slack.field4_cats),
        field4_ranks: section_cost(Section::Field4Ranks, frac_ranks, &slack.field4_ranks),
        field5: section_cost(Section::Field5, frac_field5, &slack.field5),
    };

    CostReport {
        n,
        s,
        d,
        cd: params.cd,
        t_max,
        delta,
        eps,
        delta_mean,
        sections,
        raw_total_fractional: n as f64 * dt as f64 * log_delta,
        total_actual_bits: table.total_bits() as u64,
        savings: savings_expression(n, s, d, eps),
        hypotheses: TheoremHypotheses {
            d_ok: d >= 44,
            c_ok: c >= (2.0 / g.alpha()).powi(2)
                && c.ln() >= 10.0f64.ln() + 10.0 * d as f64,
            lambda_ok: None,
            lambda2_plus: None,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table1_formula_example() {
        // n = 4, s = 3: 2·log2(3) + log2(C(4,3)) = 3.1699 + 2 = 5.1699.
        let value = 2.0 * 3.0f64.log2() + log2_binomial(4, 3);
        assert!((value - 5.169925).abs() < 1e-5);
    }

    #[test]
    fn savings_edge_cases() {
        // ε = 0 zeroes the ε·log(1/ε) term.
        let s0 = savings_expression(64, 8, 4, 0.0);
        let expect = -3.0 * 8.0 * 3.0 + 0.5 * 4.0 * 8.0 * 3.0 - 0.25 * 4.0 * 8.0;
        assert!((s0 - expect).abs() < 1e-9);
        // ε = 1: log(1/1) = 0 again.
        let s1 = savings_expression(64, 8, 4, 1.0);
        let expect = -3.0 * 8.0 * 3.0 + 0.5 * 4.0 * 8.0 * 3.0 - 2.25 * 4.0 * 8.0;
        assert!((s1 - expect).abs() < 1e-9);
    }
}

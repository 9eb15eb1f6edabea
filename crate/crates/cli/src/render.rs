//! Text layout of inference results.

use std::collections::BTreeSet;
use std::fmt::Write;

use lpmln::asp::{penalty_levels, phi_extend, Flavor};
use lpmln::inference::{format_probability, marginals_of, Distribution, MapModel, Marginals};
use lpmln::{GroundProgram, HardMode, Interpretation};

fn optimization(gp: &GroundProgram, model: &Interpretation, scale: u32, mode: HardMode) -> String {
    let levels = penalty_levels(gp, model, scale);
    match mode {
        HardMode::Strict => format!("Optimization: {}", levels[&0]),
        HardMode::Relaxed => format!("Optimization: {} {}", levels[&1], levels[&0]),
    }
}

/// The optimal models with their unsat atoms; `Answer: k` headers appear only for ties.
pub fn map(gp: &GroundProgram, models: &[MapModel], scale: u32, mode: HardMode) -> String {
    let mut out = String::new();
    for (k, m) in models.iter().enumerate() {
        if models.len() > 1 {
            writeln!(out, "Answer: {}", k + 1).unwrap();
        }
        writeln!(out, "{}", phi_extend(gp, &m.model, Flavor::Penalty)).unwrap();
        writeln!(out, "{}", optimization(gp, &m.model, scale, mode)).unwrap();
    }
    out.push_str("OPTIMUM FOUND\n");
    out
}

/// Every stable model, then one probability line per answer, then queried marginals if any.
pub fn all(gp: &GroundProgram, dist: &Distribution, scale: u32, mode: HardMode, preds: &BTreeSet<String>) -> String {
    let mut out = String::new();
    for (k, e) in dist.entries.iter().enumerate() {
        writeln!(out, "Answer: {}", k + 1).unwrap();
        writeln!(out, "{}", phi_extend(gp, &e.model, Flavor::Penalty)).unwrap();
        writeln!(out, "{}", optimization(gp, &e.model, scale, mode)).unwrap();
    }
    out.push('\n');
    for (k, e) in dist.entries.iter().enumerate() {
        writeln!(out, "Probability of Answer {} : {}", k + 1, format_probability(e.probability)).unwrap();
    }
    if !preds.is_empty() {
        out.push('\n');
        out.push_str(&marginals(&marginals_of(dist, gp.atoms(), preds)));
    }
    out
}

pub fn marginals(m: &Marginals) -> String {
    m.values.iter().map(|(a, p)| format!("{a} {}\n", format_probability(*p))).collect()
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::atoms::rule_atoms;
use super::{AnalysisError, AnalysisMode, EXHAUSTIVE_ATOM_LIMIT};
use crate::diagnostics::{codes, Diagnostic, Location, Severity};
use crate::syntax::Ruleset;

/// Flags every clause that no assignment of its rule's atoms makes active.
///
/// Atoms are independent unless syntactically identical or negations of each
/// other, so `t > 20` and `t > 30` may both be assumed true or false; clauses
/// that are only dead because of such numeric relationships go unreported.
pub fn detect_dead_clauses(
    rs: &Ruleset,
    mode: AnalysisMode,
) -> Result<Vec<Diagnostic>, AnalysisError> {
    let mut diags = Vec::new();
    for (index, rule) in rs.rules.iter().enumerate() {
        let ra = rule_atoms(rs, rule);
        let k = ra.atoms.len() as u32;
        let n = ra.clauses.len();
        let mut reached = vec![false; n];
        let mut remaining = n;
        let mut visit = |bits: u64| -> bool {
            if let Some(i) = ra.active_clause(bits) {
                if !reached[i] {
                    reached[i] = true;
                    remaining -= 1;
                }
            }
            remaining == 0
        };
        match mode {
            AnalysisMode::Exhaustive => {
                if k > EXHAUSTIVE_ATOM_LIMIT {
                    return Err(AnalysisError::TooLarge {
                        subject: format!("rule {}", rule.id),
                        size: format!("2^{k}"),
                        limit: EXHAUSTIVE_ATOM_LIMIT,
                    });
                }
                for bits in 0..(1u64 << k) {
                    if visit(bits) {
                        break;
                    }
                }
            }
            AnalysisMode::Sampled { samples, seed } => {
                if k > 64 {
                    return Err(AnalysisError::TooLarge {
                        subject: format!("rule {}", rule.id),
                        size: format!("2^{k}"),
                        limit: 64,
                    });
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index as u64);
                let mask = if k >= 64 { u64::MAX } else { (1u64 << k) - 1 };
                for _ in 0..samples {
                    if visit(rng.gen::<u64>() & mask) {
                        break;
                    }
                }
            }
        }
        let how = match mode {
            AnalysisMode::Exhaustive => "no assignment",
            AnalysisMode::Sampled { .. } => "no sampled assignment",
        };
        for (clause, hit) in reached.iter().enumerate() {
            if !hit {
                diags.push(Diagnostic::new(
                    Severity::Warning,
                    codes::DEAD_CLAUSE,
                    Location::Rule {
                        rule: rule.id.clone(),
                        index,
                        clause: Some(clause),
                    },
                    format!("{how} of the rule's {k} atom(s) makes clause {clause} active"),
                ));
            }
        }
    }
    Ok(diags)
}

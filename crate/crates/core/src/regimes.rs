//! Counterfactual regimes and the exogeneity each one needs.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeRow {
    /// Short identifier (`pe`, `li`, `nc`).
    pub id: String,
    pub regime: String,
    pub what_varies: String,
    pub held_fixed: String,
    pub causal_object: String,
    /// `individual`, `local` or `global`.
    pub required_exogeneity: String,
    pub exogeneity_condition: String,
    pub typical_interpretation: String,
}

#[allow(clippy::too_many_arguments)]
fn row(id: &str, regime: &str, varies: &str, fixed: &str, object: &str, exo: &str, cond: &str, interp: &str) -> RegimeRow {
    RegimeRow {
        id: id.into(),
        regime: regime.into(),
        what_varies: varies.into(),
        held_fixed: fixed.into(),
        causal_object: object.into(),
        required_exogeneity: exo.into(),
        exogeneity_condition: cond.into(),
        typical_interpretation: interp.into(),
    }
}

/// The regime table, ordered from weakest to strongest exogeneity requirement.
pub fn regime_table() -> Vec<RegimeRow> {
    vec![
        row(
            "pe",
            "partial equilibrium",
            "outcome of unit i only",
            "outcomes of all other units",
            "direct (own) effect",
            "individual",
            "D_i ⊥ ε_i | X_i",
            "standard regression coefficient",
        ),
        row(
            "li",
            "local interaction",
            "unit i and its direct neighbors",
            "higher-order feedback",
            "first-order spillovers",
            "local",
            "D_i ⊥ ε_j | X for all j with w_ij > 0",
            "local spatial spillovers",
        ),
        row(
            "nc",
            "network-consistent",
            "all units through equilibrium",
            "nothing",
            "total equilibrium effect",
            "global",
            "D ⊥ ε | X",
            "SAR impacts / spatial multipliers",
        ),
    ]
}

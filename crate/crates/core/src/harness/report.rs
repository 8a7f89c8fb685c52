use serde::{Deserialize, Serialize};

use crate::capacity::PCapacityEstimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InequalityId {
    #[serde(rename = "eAV")]
    EAv,
    #[serde(rename = "e14")]
    E14,
    #[serde(rename = "e29_first")]
    E29First,
    #[serde(rename = "e29_second")]
    E29Second,
    #[serde(rename = "e29e")]
    E29e,
    #[serde(rename = "sandwich_j")]
    SandwichJ,
    #[serde(rename = "limits_k")]
    LimitsK,
    #[serde(rename = "e11_conjecture")]
    E11Conjecture,
    #[serde(rename = "e12")]
    E12,
    #[serde(rename = "e13")]
    E13,
    #[serde(rename = "e23")]
    E23,
    #[serde(rename = "e24")]
    E24,
    #[serde(rename = "e25_scan")]
    E25Scan,
    #[serde(rename = "e26")]
    E26,
    #[serde(rename = "e210")]
    E210,
    #[serde(rename = "AF")]
    Af,
    #[serde(rename = "e20aa")]
    E20aa,
    #[serde(rename = "willmore")]
    Willmore,
}

impl InequalityId {
    pub const ALL: [InequalityId; 18] = [
        InequalityId::EAv,
        InequalityId::E14,
        InequalityId::E29First,
        InequalityId::E29Second,
        InequalityId::E29e,
        InequalityId::SandwichJ,
        InequalityId::LimitsK,
        InequalityId::E11Conjecture,
        InequalityId::E12,
        InequalityId::E13,
        InequalityId::E23,
        InequalityId::E24,
        InequalityId::E25Scan,
        InequalityId::E26,
        InequalityId::E210,
        InequalityId::Af,
        InequalityId::E20aa,
        InequalityId::Willmore,
    ];

    pub fn as_str(self) -> &'static str {
        use InequalityId::*;
        match self {
            EAv => "eAV",
            E14 => "e14",
            E29First => "e29_first",
            E29Second => "e29_second",
            E29e => "e29e",
            SandwichJ => "sandwich_j",
            LimitsK => "limits_k",
            E11Conjecture => "e11_conjecture",
            E12 => "e12",
            E13 => "e13",
            E23 => "e23",
            E24 => "e24",
            E25Scan => "e25_scan",
            E26 => "e26",
            E210 => "e210",
            Af => "AF",
            E20aa => "e20aa",
            Willmore => "willmore",
        }
    }

    /// Whether both sides coincide on every ball. For `sandwich_j` this holds
    /// for the upper branch only.
    pub fn ball_equality(self) -> bool {
        use InequalityId::*;
        matches!(
            self,
            EAv | E29First | E29Second | E29e | E25Scan | E26 | E210 | Af | E20aa | Willmore
        )
    }

    /// Open conjectures are reported but never asserted.
    pub fn exploratory(self) -> bool {
        matches!(self, InequalityId::E11Conjecture | InequalityId::E25Scan)
    }
}

impl std::fmt::Display for InequalityId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How `slack` is judged against `tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// One-sided: pass iff `slack >= -tolerance`.
    AtMost,
    /// Two-sided: pass iff `|slack| <= tolerance`.
    Approx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacitySource {
    Solver,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BracketEnd {
    Lower,
    Upper,
    Best,
}

/// A capacity value with its bracket and where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityBracket {
    pub p: f64,
    pub source: CapacitySource,
    pub best: f64,
    pub lower: f64,
    pub upper: f64,
    pub grid: Option<usize>,
    pub spacing: Option<f64>,
    pub box_radius: Option<f64>,
}

impl CapacityBracket {
    pub fn from_estimate(e: &PCapacityEstimate) -> Self {
        CapacityBracket {
            p: e.p,
            source: CapacitySource::Solver,
            best: e.best(),
            lower: e.lower,
            upper: e.upper,
            grid: Some(e.grid),
            spacing: Some(e.spacing),
            box_radius: Some(e.box_radius),
        }
    }

    pub fn exact(p: f64, value: f64) -> Self {
        CapacityBracket {
            p,
            source: CapacitySource::ClosedForm,
            best: value,
            lower: value,
            upper: value,
            grid: None,
            spacing: None,
            box_radius: None,
        }
    }

    pub fn at(&self, end: BracketEnd) -> f64 {
        match end {
            BracketEnd::Lower => self.lower,
            BracketEnd::Upper => self.upper,
            BracketEnd::Best => self.best,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub capacity: Option<CapacityBracket>,
    /// Bracket end the reported sides were evaluated at.
    pub capacity_end: Option<BracketEnd>,
    /// Polar resolution of the boundary quadrature for area, volume and Willmore terms.
    pub mesh_resolution: Option<usize>,
    /// Polar resolution of the singular single-layer rule.
    pub riesz_resolution: Option<usize>,
    /// Number of boundary points the single-layer potential was sampled at.
    pub riesz_samples: Option<usize>,
    /// Change of the slack across the capacity bracket.
    pub propagated_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub body: String,
    pub n: usize,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub inequality: InequalityId,
    /// Sub-case, e.g. `lower`/`upper` of the sandwich or `first`/`second` of `e210`.
    pub branch: Option<String>,
    pub left: f64,
    pub right: f64,
    pub slack: f64,
    pub relation: Relation,
    pub scale: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// False for exploratory checks, which never fail a run.
    pub asserted: bool,
    pub provenance: Provenance,
}

impl InequalityReport {
    /// Failed and asserted.
    pub fn violated(&self) -> bool {
        self.asserted && !self.pass
    }

    /// `slack / tolerance`; above one means the inequality is resolved as strict.
    pub fn resolution(&self) -> f64 {
        self.slack / self.tolerance
    }
}

pub(crate) fn judge(relation: Relation, slack: f64, tolerance: f64) -> bool {
    match relation {
        Relation::AtMost => slack >= -tolerance,
        Relation::Approx => slack.abs() <= tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identifiers_round_trip() {
        for id in InequalityId::ALL {
            let s = serde_json::to_string(&id).unwrap();
            assert_eq!(s, format!("\"{}\"", id.as_str()));
            let back: InequalityId = serde_json::from_str(&s).unwrap();
            assert_eq!(back, id);
        }
    }

    #[test]
    fn judging() {
        assert!(judge(Relation::AtMost, -0.5, 1.0));
        assert!(!judge(Relation::AtMost, -1.5, 1.0));
        assert!(judge(Relation::AtMost, 10.0, 1.0));
        assert!(!judge(Relation::Approx, 10.0, 1.0));
    }
}

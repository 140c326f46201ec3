//! Effect terms and model specifications.
//!
//! The textual names produced by `Display` and accepted by `FromStr` are the
//! names used in configuration files and CSV headers.

use std::fmt;
use std::str::FromStr;

use crate::attributes::AttributeData;
use crate::error::AlaamError;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EffectTerm {
    Intercept,
    OutActivity,
    InActivity,
    /// Homogeneous out-star of order 2 or 3 anchored at an outcome-1 node.
    OutStar(u8),
    Contagion,
    ReciprocalContagion,
    IndirectContagion,
    IndirectTies,
    MixedTwoPath,
    ClosureContagion,
    TransitiveContagion,
    Covariate(String),
    /// Contagion weighted by the sender's value of the named covariate.
    ContagionInteraction(String),
}

impl EffectTerm {
    /// Terms whose change statistic depends on other nodes' outcomes.
    pub fn is_dependence(&self) -> bool {
        matches!(
            self,
            Self::Contagion
                | Self::ReciprocalContagion
                | Self::IndirectContagion
                | Self::ClosureContagion
                | Self::TransitiveContagion
                | Self::ContagionInteraction(_)
        )
    }

    /// Number of outcome factors in every monomial of the statistic.
    pub fn outcome_degree(&self) -> u32 {
        match self {
            Self::TransitiveContagion => 3,
            t if t.is_dependence() => 2,
            _ => 1,
        }
    }

    pub fn covariate(&self) -> Option<&str> {
        match self {
            Self::Covariate(c) | Self::ContagionInteraction(c) => Some(c),
            _ => None,
        }
    }
}

impl fmt::Display for EffectTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Intercept => f.write_str("intercept"),
            Self::OutActivity => f.write_str("out-activity"),
            Self::InActivity => f.write_str("in-activity"),
            Self::OutStar(s) => write!(f, "out-star({s})"),
            Self::Contagion => f.write_str("contagion"),
            Self::ReciprocalContagion => f.write_str("reciprocal-contagion"),
            Self::IndirectContagion => f.write_str("indirect-contagion"),
            Self::IndirectTies => f.write_str("indirect-ties"),
            Self::MixedTwoPath => f.write_str("mixed-two-path"),
            Self::ClosureContagion => f.write_str("closure-contagion"),
            Self::TransitiveContagion => f.write_str("transitive-contagion"),
            Self::Covariate(c) => write!(f, "covariate({c})"),
            Self::ContagionInteraction(c) => write!(f, "contagion-interaction({c})"),
        }
    }
}

impl FromStr for EffectTerm {
    type Err = AlaamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || AlaamError::Config(format!("unknown effect term {s:?}"));
        if let Some(open) = s.find('(') {
            let arg = s[open + 1..].strip_suffix(')').ok_or_else(bad)?.trim();
            if arg.is_empty() {
                return Err(bad());
            }
            return match &s[..open] {
                "out-star" => match arg {
                    "2" => Ok(Self::OutStar(2)),
                    "3" => Ok(Self::OutStar(3)),
                    _ => Err(AlaamError::Config(format!(
                        "out-star order must be 2 or 3, got {arg:?}"
                    ))),
                },
                "covariate" => Ok(Self::Covariate(arg.to_owned())),
                "contagion-interaction" => Ok(Self::ContagionInteraction(arg.to_owned())),
                _ => Err(bad()),
            };
        }
        Ok(match s {
            "intercept" => Self::Intercept,
            "out-activity" => Self::OutActivity,
            "in-activity" => Self::InActivity,
            "contagion" => Self::Contagion,
            "reciprocal-contagion" => Self::ReciprocalContagion,
            "indirect-contagion" => Self::IndirectContagion,
            "indirect-ties" => Self::IndirectTies,
            "mixed-two-path" => Self::MixedTwoPath,
            "closure-contagion" => Self::ClosureContagion,
            "transitive-contagion" => Self::TransitiveContagion,
            _ => return Err(bad()),
        })
    }
}

/// Ordered list of effect terms. Term order fixes the coordinate order of
/// both the parameter and the statistic vectors.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ModelSpec {
    pub terms: Vec<EffectTerm>,
}

impl ModelSpec {
    pub fn new(terms: Vec<EffectTerm>) -> Self {
        Self { terms }
    }

    pub fn parse<S: AsRef<str>>(names: &[S]) -> Result<Self, AlaamError> {
        let terms = names
            .iter()
            .map(|s| s.as_ref().parse())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { terms })
    }

    /// Number of parameters `p`.
    pub fn dim(&self) -> usize {
        self.terms.len()
    }

    pub fn names(&self) -> Vec<String> {
        self.terms.iter().map(ToString::to_string).collect()
    }

    pub fn has_dependence(&self) -> bool {
        self.terms.iter().any(EffectTerm::is_dependence)
    }

    /// Position of a term, if present.
    pub fn index_of(&self, term: &EffectTerm) -> Option<usize> {
        self.terms.iter().position(|t| t == term)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpecViolation {
    Empty,
    UnknownCovariate { term: String, covariate: String },
    DuplicateTerm(String),
}

impl fmt::Display for SpecViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Empty => f.write_str("model has no terms"),
            Self::UnknownCovariate { term, covariate } => {
                write!(f, "term {term} refers to unknown covariate {covariate:?}")
            }
            Self::DuplicateTerm(t) => write!(f, "term {t} is listed more than once"),
        }
    }
}

/// Checks covariate bindings and duplicates, returning every violation.
pub fn validate_spec(spec: &ModelSpec, data: &AttributeData) -> Result<(), Vec<SpecViolation>> {
    let mut violations = Vec::new();
    if spec.terms.is_empty() {
        violations.push(SpecViolation::Empty);
    }
    for (k, term) in spec.terms.iter().enumerate() {
        if let Some(c) = term.covariate() {
            if data.covariates.get(c).is_none() {
                violations.push(SpecViolation::UnknownCovariate {
                    term: term.to_string(),
                    covariate: c.to_owned(),
                });
            }
        }
        // report each duplicated term once, at its second occurrence
        let first = spec.terms.iter().position(|t| t == term).unwrap_or(k);
        if first < k && !spec.terms[first + 1..k].contains(term) {
            violations.push(SpecViolation::DuplicateTerm(term.to_string()));
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

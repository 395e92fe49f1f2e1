use serde::{Deserialize, Serialize};

use super::config::RunConfig;

/// How a check value is compared with its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    /// `value < threshold`.
    Below,
    /// `value <= threshold`.
    AtMost,
    /// `value > threshold`.
    Above,
    /// `value >= threshold`.
    AtLeast,
    /// `value == threshold`.
    Equals,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub relation: Relation,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, relation: Relation, threshold: f64) -> Self {
        let pass = match relation {
            Relation::Below => value < threshold,
            Relation::AtMost => value <= threshold,
            Relation::Above => value > threshold,
            Relation::AtLeast => value >= threshold,
            Relation::Equals => value == threshold,
        };
        Self {
            name: name.into(),
            value,
            threshold,
            relation,
            pass,
        }
    }

    pub fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Relation::Below, threshold)
    }

    pub fn above(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Relation::Above, threshold)
    }

    /// Records a yes/no property as `1 == 1`.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, if ok { 1.0 } else { 0.0 }, Relation::Equals, 1.0)
    }
}

/// Checks of one stage of a run, with its wall time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub name: String,
    pub checks: Vec<Check>,
    /// Extra numbers worth keeping that are not pass/fail.
    pub notes: Vec<(String, f64)>,
    pub wall_seconds: f64,
}

impl Section {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub version: String,
    pub commit: String,
    pub config: RunConfig,
    pub sections: Vec<Section>,
    pub passed: bool,
    pub wall_seconds: f64,
}

impl RunReport {
    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.sections.iter().flat_map(|s| &s.checks).find(|c| c.name == name)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.sections.iter().flat_map(|s| &s.checks).filter(|c| !c.pass)
    }

    /// The report as pretty JSON with every `wall_seconds` set to zero, for
    /// byte comparison of runs.
    pub fn without_timings(&self) -> RunReport {
        let mut r = self.clone();
        r.wall_seconds = 0.0;
        r.sections.iter_mut().for_each(|s| s.wall_seconds = 0.0);
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relations() {
        assert!(Check::below("a", 1.0, 2.0).pass);
        assert!(!Check::below("a", 2.0, 2.0).pass);
        assert!(!Check::below("a", f64::NAN, 2.0).pass);
        assert!(Check::above("a", 3.0, 2.0).pass);
        assert!(Check::new("a", 2.0, Relation::AtLeast, 2.0).pass);
        assert!(Check::holds("a", true).pass && !Check::holds("a", false).pass);
    }
}

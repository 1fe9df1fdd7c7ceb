use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::Label;

/// How many violating instances a report keeps verbatim.
pub const MAX_RECORDED_VIOLATIONS: usize = 16;

/// One checked instance of an inequality or identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    /// Labels identifying the instance (a subset `U`, an interval, ...).
    pub witness: Vec<Label>,
    pub observed: f64,
    pub bound: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

/// Outcome of an exhaustive or sampled lemma check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma: String,
    pub checked: u64,
    pub violation_count: u64,
    pub violations: Vec<Instance>,
    /// Non-vacuous instance with the smallest `observed - bound`.
    pub tightest: Option<Instance>,
    #[serde(skip)]
    best_slack: Option<f64>,
}

impl LemmaReport {
    pub fn new(lemma: impl Into<String>) -> Self {
        LemmaReport {
            lemma: lemma.into(),
            checked: 0,
            violation_count: 0,
            violations: Vec::new(),
            tightest: None,
            best_slack: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }

    /// Counts one instance; `instance` is only built on failure.
    pub fn record(&mut self, ok: bool, instance: impl FnOnce() -> Instance) {
        self.checked += 1;
        if !ok {
            self.violation_count += 1;
            if self.violations.len() < MAX_RECORDED_VIOLATIONS {
                self.violations.push(instance());
            }
        }
    }

    /// Keeps `instance` as the tightest one if `slack` is strictly smaller
    /// than the best seen so far.
    pub fn offer_tight(&mut self, slack: f64, instance: impl FnOnce() -> Instance) {
        if self.best_slack.is_none_or(|b| slack < b) {
            self.best_slack = Some(slack);
            self.tightest = Some(instance());
        }
    }

    /// Folds `other` into `self`; `self` is assumed to come first in scan order.
    pub fn merge(&mut self, other: LemmaReport) {
        self.checked += other.checked;
        self.violation_count += other.violation_count;
        for v in other.violations {
            if self.violations.len() < MAX_RECORDED_VIOLATIONS {
                self.violations.push(v);
            }
        }
        if let (Some(s), Some(t)) = (other.best_slack, other.tightest) {
            self.offer_tight(s, || t);
        }
    }
}

impl fmt::Display for LemmaReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(
            f,
            "{verdict} {}: {} instances checked, {} violations",
            self.lemma, self.checked, self.violation_count
        )?;
        if let Some(t) = &self.tightest {
            write!(f, "; tightest {:?} observed {} vs bound {}", t.witness, t.observed, t.bound)?;
        }
        if let Some(v) = self.violations.first() {
            write!(f, "; first violation {:?} ({})", v.witness, v.note)?;
        }
        Ok(())
    }
}

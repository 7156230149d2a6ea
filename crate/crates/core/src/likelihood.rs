//! Log-likelihood of the bivariate model under two observation schemes.
//!
//! Under the termination scheme B (death) ends follow-up, so a subject who
//! dies first contributes the marginal density of Y, and a subject censored
//! at `t` contributes `Pr(t < X < Y)`. The [`loglik_lawless`] variant treats
//! both events as observable and uses the joint survival for doubly
//! censored subjects.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numerics::neumaier_sum;

/// Observation category of one subject, indicators (p, q, r).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    /// p = 1: transplant at `t_x`, death at `t_y`.
    BothObserved,
    /// q = 1: transplant at `t_x`, alive when censored at `t_y`.
    AObservedBCensored,
    /// r = 1: death at `t_y` without transplant; `t_x = t_y`.
    BObservedNoA,
    /// p = q = r = 0: censored at `t_x = t_y`, no transplant.
    BothCensored,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::BothObserved,
        Category::AObservedBCensored,
        Category::BObservedNoA,
        Category::BothCensored,
    ];

    /// The (p, q, r) indicator triple.
    pub fn indicators(self) -> (u8, u8, u8) {
        match self {
            Category::BothObserved => (1, 0, 0),
            Category::AObservedBCensored => (0, 1, 0),
            Category::BObservedNoA => (0, 0, 1),
            Category::BothCensored => (0, 0, 0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub category: Category,
    pub t_x: f64,
    pub t_y: f64,
}

impl SubjectRecord {
    pub fn both_observed(t_x: f64, t_y: f64) -> Self {
        Self {
            category: Category::BothObserved,
            t_x,
            t_y,
        }
    }

    pub fn a_observed(t_x: f64, censored_at: f64) -> Self {
        Self {
            category: Category::AObservedBCensored,
            t_x,
            t_y: censored_at,
        }
    }

    pub fn b_observed(death: f64) -> Self {
        Self {
            category: Category::BObservedNoA,
            t_x: death,
            t_y: death,
        }
    }

    pub fn censored(t: f64) -> Self {
        Self {
            category: Category::BothCensored,
            t_x: t,
            t_y: t,
        }
    }

    fn check_positive(&self) -> std::result::Result<(), String> {
        for (name, t) in [("t_x", self.t_x), ("t_y", self.t_y)] {
            if !(t > 0.0) || !t.is_finite() {
                return Err(format!("{name} must be a positive finite time, got {t}"));
            }
        }
        Ok(())
    }

    /// Termination-scheme invariants.
    pub fn validate(&self) -> std::result::Result<(), String> {
        self.check_positive()?;
        match self.category {
            Category::BothObserved if self.t_x >= self.t_y => Err(format!(
                "both events observed requires t_x < t_y, got {} >= {}",
                self.t_x, self.t_y
            )),
            Category::AObservedBCensored if self.t_x > self.t_y => Err(format!(
                "transplant after censoring: t_x {} > t_y {}",
                self.t_x, self.t_y
            )),
            Category::BObservedNoA | Category::BothCensored if self.t_x != self.t_y => Err(format!(
                "{:?} requires t_x = t_y, got {} and {}",
                self.category, self.t_x, self.t_y
            )),
            _ => Ok(()),
        }
    }
}

/// Per-category tallies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub p: usize,
    pub q: usize,
    pub r: usize,
    pub censored: usize,
}

impl CategoryCounts {
    pub fn total(&self) -> usize {
        self.p + self.q + self.r + self.censored
    }

    pub fn get(&self, c: Category) -> usize {
        match c {
            Category::BothObserved => self.p,
            Category::AObservedBCensored => self.q,
            Category::BObservedNoA => self.r,
            Category::BothCensored => self.censored,
        }
    }

    fn bump(&mut self, c: Category) {
        match c {
            Category::BothObserved => self.p += 1,
            Category::AObservedBCensored => self.q += 1,
            Category::BObservedNoA => self.r += 1,
            Category::BothCensored => self.censored += 1,
        }
    }
}

/// A validated, non-empty collection of subjects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    records: Vec<SubjectRecord>,
    counts: CategoryCounts,
}

impl Dataset {
    /// Builds a termination-scheme dataset, rejecting any record that breaks
    /// the category invariants (no silent reordering).
    pub fn new(records: Vec<SubjectRecord>) -> Result<Self> {
        Self::build(records, SubjectRecord::validate)
    }

    /// Dataset for the Lawless scheme: only positivity of times is checked.
    pub fn lawless(records: Vec<SubjectRecord>) -> Result<Self> {
        Self::build(records, SubjectRecord::check_positive)
    }

    fn build(
        records: Vec<SubjectRecord>,
        check: impl Fn(&SubjectRecord) -> std::result::Result<(), String>,
    ) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::NoRecords);
        }
        let mut counts = CategoryCounts::default();
        for (index, rec) in records.iter().enumerate() {
            check(rec).map_err(|reason| Error::InvalidRecord { index, reason })?;
            counts.bump(rec.category);
        }
        Ok(Self { records, counts })
    }

    pub fn records(&self) -> &[SubjectRecord] {
        &self.records
    }

    pub fn counts(&self) -> CategoryCounts {
        self.counts
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Concatenation of `self` repeated `times` times.
    pub fn replicated(&self, times: usize) -> Result<Self> {
        let records = self.records.iter().copied().cycle().take(self.len() * times).collect();
        Self::build(records, |_| Ok(()))
    }
}

/// Log of the termination-scheme factor for a single record.
pub fn log_factor_termination(rec: &SubjectRecord, theta: &ModelParams) -> Result<f64> {
    match rec.category {
        Category::BothObserved => theta.log_joint_density(rec.t_x, rec.t_y),
        Category::AObservedBCensored => theta.log_neg_ds_dx(rec.t_x, rec.t_y),
        Category::BObservedNoA => theta.log_marginal_density_y(rec.t_y),
        Category::BothCensored => theta.log_tail_prob(rec.t_y),
    }
}

/// Log of the Lawless factor for a single record.
pub fn log_factor_lawless(rec: &SubjectRecord, theta: &ModelParams) -> Result<f64> {
    match rec.category {
        Category::BothObserved => theta.log_joint_density(rec.t_x, rec.t_y),
        Category::AObservedBCensored => theta.log_neg_ds_dx(rec.t_x, rec.t_y),
        Category::BObservedNoA => theta.log_neg_ds_dy(rec.t_x, rec.t_y),
        Category::BothCensored => theta.log_joint_survival(rec.t_x, rec.t_y),
    }
}

fn contribution(index: usize, v: Result<f64>) -> Result<f64> {
    match v {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(v) => Err(Error::Contribution {
            index,
            source: Box::new(Error::Domain(format!("log factor is {v}"))),
        }),
        Err(e) => Err(Error::Contribution {
            index,
            source: Box::new(e),
        }),
    }
}

/// Termination-scheme log-likelihood. Censored subjects are evaluated at their
/// own censoring time; the tail probability is computed once per distinct time.
pub fn loglik_termination(data: &Dataset, theta: &ModelParams) -> Result<f64> {
    let mut tails: HashMap<u64, f64> = HashMap::new();
    let mut terms = Vec::with_capacity(data.len());
    for (index, rec) in data.records().iter().enumerate() {
        let v = if rec.category == Category::BothCensored {
            let key = rec.t_y.to_bits();
            match tails.get(&key) {
                Some(&v) => v,
                None => {
                    let v = contribution(index, theta.log_tail_prob(rec.t_y))?;
                    tails.insert(key, v);
                    v
                }
            }
        } else {
            contribution(index, log_factor_termination(rec, theta))?
        };
        terms.push(v);
    }
    Ok(neumaier_sum(terms))
}

/// Log-likelihood when both events are observable.
pub fn loglik_lawless(data: &Dataset, theta: &ModelParams) -> Result<f64> {
    let terms = data
        .records()
        .iter()
        .enumerate()
        .map(|(index, rec)| contribution(index, log_factor_lawless(rec, theta)))
        .collect::<Result<Vec<_>>>()?;
    Ok(neumaier_sum(terms))
}

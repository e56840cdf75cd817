//! Annotation budget arithmetic: human-written vs model-generated summaries.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Reported speed-up of editing a model draft over writing a summary from scratch.
pub const HUMAN_EDITING_TIME_REDUCTION: f64 = 0.70;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RateCard {
    /// Dollars per human-written summary.
    pub human_rate: f64,
    /// Dollars per million input tokens.
    pub gpt_in_rate: f64,
    /// Dollars per million output tokens.
    pub gpt_out_rate: f64,
    pub avg_in_tokens: f64,
    pub avg_out_tokens: f64,
}

impl Default for RateCard {
    fn default() -> Self {
        Self {
            human_rate: 0.01,
            gpt_in_rate: 0.50,
            gpt_out_rate: 1.50,
            avg_in_tokens: 700.0,
            avg_out_tokens: 20.0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BudgetError {
    #[error("invalid rate card: {0}")]
    InvalidRates(String),
    #[error("budget ${budget} does not cover one human summary at ${human_rate}")]
    BudgetTooSmall { budget: f64, human_rate: f64 },
    #[error("invalid budget: {0}")]
    InvalidBudget(String),
}

impl RateCard {
    /// Rates must be positive; token averages may be zero but not negative.
    pub fn validate(&self) -> Result<(), BudgetError> {
        for (name, v) in [
            ("human_rate", self.human_rate),
            ("gpt_in_rate", self.gpt_in_rate),
            ("gpt_out_rate", self.gpt_out_rate),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(BudgetError::InvalidRates(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("avg_in_tokens", self.avg_in_tokens), ("avg_out_tokens", self.avg_out_tokens)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(BudgetError::InvalidRates(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.avg_in_tokens + self.avg_out_tokens <= 0.0 {
            return Err(BudgetError::InvalidRates("a model summary must use some tokens".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Human,
    Gpt,
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "human" => Ok(Method::Human),
            "gpt" => Ok(Method::Gpt),
            other => Err(format!("unknown method {other:?} (expected human or gpt)")),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Human => "human",
            Method::Gpt => "gpt",
        })
    }
}

pub fn cost_per_summary(method: Method, rates: &RateCard) -> f64 {
    match method {
        Method::Human => rates.human_rate,
        Method::Gpt => {
            rates.avg_in_tokens * rates.gpt_in_rate / 1e6
                + rates.avg_out_tokens * rates.gpt_out_rate / 1e6
        }
    }
}

/// `floor(x)`, except that a value within floating-point noise of an integer
/// rounds to it ($2.5 / $0.01 must buy exactly 250, not 249).
fn floor_tolerant(x: f64) -> u64 {
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as u64
    } else {
        x.floor() as u64
    }
}

/// Whole summaries affordable with `budget` dollars.
pub fn summaries_for_budget(budget: f64, method: Method, rates: &RateCard) -> Result<u64, BudgetError> {
    if !(budget >= 0.0 && budget.is_finite()) {
        return Err(BudgetError::InvalidBudget(format!("budget must be >= 0, got {budget}")));
    }
    rates.validate()?;
    Ok(floor_tolerant(budget / cost_per_summary(method, rates)))
}

/// Budget split for generating model drafts and then paying humans to edit some.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoStepPlan {
    pub budget: f64,
    pub human_share: f64,
    pub gpt_count: u64,
    pub human_count: u64,
    /// Dollars left after buying whole summaries.
    pub residual: f64,
}

pub const DEFAULT_HUMAN_SHARE: f64 = 0.5;

/// Spends `human_share` of the budget on human summaries and the rest on model ones.
pub fn plan_two_step(budget: f64, human_share: f64, rates: &RateCard) -> Result<TwoStepPlan, BudgetError> {
    rates.validate()?;
    if !(0.0..=1.0).contains(&human_share) {
        return Err(BudgetError::InvalidBudget(format!(
            "human share must be in [0, 1], got {human_share}"
        )));
    }
    if !(budget.is_finite()) || floor_tolerant(budget / rates.human_rate) < 1 {
        return Err(BudgetError::BudgetTooSmall {
            budget,
            human_rate: rates.human_rate,
        });
    }
    let human_budget = budget * human_share;
    let human_count = summaries_for_budget(human_budget, Method::Human, rates)?;
    let gpt_count = summaries_for_budget(budget - human_budget, Method::Gpt, rates)?;
    let spent = human_count as f64 * cost_per_summary(Method::Human, rates)
        + gpt_count as f64 * cost_per_summary(Method::Gpt, rates);
    Ok(TwoStepPlan {
        budget,
        human_share,
        gpt_count,
        human_count,
        residual: (budget - spent).max(0.0),
    })
}

/// Formatted comparison of what each budget buys.
pub fn render_budget_table(budgets: &[f64], rates: &RateCard) -> Result<String, BudgetError> {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "cost per summary: human ${:.5}, gpt ${:.5}",
        cost_per_summary(Method::Human, rates),
        cost_per_summary(Method::Gpt, rates)
    );
    let _ = writeln!(out, "{:>10} {:>10} {:>10}", "budget", "human", "gpt");
    for &b in budgets {
        let _ = writeln!(
            out,
            "{:>10} {:>10} {:>10}",
            format!("${b}"),
            summaries_for_budget(b, Method::Human, rates)?,
            summaries_for_budget(b, Method::Gpt, rates)?
        );
    }
    let _ = writeln!(
        out,
        "editing a model draft is reported ~{:.0}% faster than writing from scratch",
        HUMAN_EDITING_TIME_REDUCTION * 100.0
    );
    Ok(out)
}

//! Monte Carlo estimates and their comma-separated rendering.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    pub metric: String,
    pub estimate: f64,
    pub trials: u64,
    /// Binomial standard error of `estimate`.
    pub stderr: f64,
    pub closed_form: Option<f64>,
}

pub fn binomial_stderr(p: f64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}

impl AttackOutcome {
    pub fn from_counts(metric: impl Into<String>, hits: u64, trials: u64, closed_form: Option<f64>) -> Self {
        let estimate = if trials == 0 { 0.0 } else { hits as f64 / trials as f64 };
        AttackOutcome {
            metric: metric.into(),
            estimate,
            trials,
            stderr: binomial_stderr(estimate, trials),
            closed_form,
        }
    }

    pub fn exact(metric: impl Into<String>, value: f64, closed_form: Option<f64>) -> Self {
        AttackOutcome { metric: metric.into(), estimate: value, trials: 1, stderr: 0.0, closed_form }
    }

    /// Standard error implied by the closed form, or by the estimate when
    /// there is none.
    pub fn reference_sigma(&self) -> f64 {
        binomial_stderr(self.closed_form.unwrap_or(self.estimate), self.trials)
    }

    /// Whether the estimate is within `k` reference standard errors of the
    /// closed form. `None` without a closed form.
    pub fn within_sigmas(&self, k: f64) -> Option<bool> {
        self.closed_form.map(|c| (self.estimate - c).abs() <= k * self.reference_sigma() + 1e-15)
    }

    pub fn csv_row(&self) -> String {
        let closed = self.closed_form.map(|c| format!("{c}")).unwrap_or_default();
        format!("{},{},{},{},{}", self.metric, self.estimate, self.stderr, closed, self.trials)
    }
}

pub const CSV_HEADER: &str = "metric,estimate,stderr,closed_form,trials";

pub fn to_csv(rows: &[AttackOutcome]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

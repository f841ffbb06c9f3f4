//! Run reports: the solve subcommand's output in text and structured form.

use serde::{Deserialize, Serialize};

use msm_core::expand::{ExpandedModel, Site};
use msm_core::lp::{LpSolution, Status};
use msm_core::tree::ScenarioTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ReportStatus {
    Optimal,
    Infeasible,
    Unbounded,
    Error,
}

impl From<Status> for ReportStatus {
    fn from(status: Status) -> Self {
        match status {
            Status::Optimal => ReportStatus::Optimal,
            Status::Infeasible => ReportStatus::Infeasible,
            Status::Unbounded => ReportStatus::Unbounded,
        }
    }
}

impl std::fmt::Display for ReportStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ReportStatus::Optimal => "OPTIMAL",
            ReportStatus::Infeasible => "INFEASIBLE",
            ReportStatus::Unbounded => "UNBOUNDED",
            ReportStatus::Error => "ERROR",
        })
    }
}

/// One decision in the reported policy: the value of a variable instance.
/// `node` is absent for deterministic (stage-wide) variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyEntry {
    pub var: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub node: Option<usize>,
    pub stage: u32,
    pub value: f64,
}

/// Outcome of one solve run. The policy is present exactly when the
/// status is `OPTIMAL` and holds one entry per LP column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub status: ReportStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub objective_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub policy: Option<Vec<PolicyEntry>>,
    pub diagnostics: Vec<String>,
}

impl RunReport {
    pub fn error(message: String) -> Self {
        RunReport {
            status: ReportStatus::Error,
            objective_value: None,
            policy: None,
            diagnostics: vec![message],
        }
    }

    /// Assemble a report from a solved expansion.
    pub fn from_solution(
        expanded: &ExpandedModel,
        tree: &ScenarioTree,
        solution: &LpSolution,
    ) -> Self {
        let mut diagnostics = vec![
            format!("columns: {}", expanded.lp.n_cols),
            format!("rows: {}", expanded.lp.n_rows()),
        ];
        if expanded.coupling_rows > 0 {
            diagnostics.push(format!("coupling rows: {}", expanded.coupling_rows));
        }
        if let Some(r) = solution.max_residual {
            diagnostics.push(format!("max residual: {r:e}"));
        }

        let policy = solution.x.as_ref().map(|x| {
            expanded
                .columns
                .reverse()
                .iter()
                .zip(x)
                .map(|((var, site), &value)| {
                    let (node, stage) = match *site {
                        Site::Node(id) => (Some(id), tree.node(id).stage),
                        Site::Stage(stage) => (None, stage),
                        Site::Scenario { leaf, stage } => {
                            (Some(tree.path(leaf)[stage as usize]), stage)
                        }
                    };
                    PolicyEntry { var: var.clone(), node, stage, value }
                })
                .collect()
        });

        RunReport {
            status: solution.status.into(),
            objective_value: solution.objective_value,
            policy,
            diagnostics,
        }
    }

    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "status: {}", self.status);
        if let Some(v) = self.objective_value {
            let _ = writeln!(out, "objective: {v}");
        }
        if let Some(policy) = &self.policy {
            let _ = writeln!(out, "policy:");
            for entry in policy {
                match entry.node {
                    Some(node) => {
                        let _ = writeln!(
                            out,
                            "  {} [node {}, stage {}] = {}",
                            entry.var, node, entry.stage, entry.value
                        );
                    }
                    None => {
                        let _ =
                            writeln!(out, "  {} [stage {}] = {}", entry.var, entry.stage, entry.value);
                    }
                }
            }
        }
        if !self.diagnostics.is_empty() {
            let _ = writeln!(out, "diagnostics:");
            for d in &self.diagnostics {
                let _ = writeln!(out, "  {d}");
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objective_value_roundtrips_through_json_exactly() {
        let report = RunReport {
            status: ReportStatus::Optimal,
            objective_value: Some(4.5f64 + 1e-13),
            policy: Some(vec![PolicyEntry {
                var: "x".into(),
                node: Some(3),
                stage: 2,
                value: 0.1 + 0.2,
            }]),
            diagnostics: vec!["columns: 1".into()],
        };
        let text = report.to_json();
        let back: RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, report);
        assert_eq!(back.objective_value.unwrap().to_bits(), report.objective_value.unwrap().to_bits());
    }

    #[test]
    fn error_reports_have_no_policy() {
        let report = RunReport::error("bad input".into());
        assert_eq!(report.status, ReportStatus::Error);
        assert!(report.policy.is_none());
        assert!(report.to_json().contains("\"ERROR\""));
    }
}

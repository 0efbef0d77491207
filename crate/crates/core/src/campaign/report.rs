use serde::{Deserialize, Serialize};

use super::{CampaignConfig, CampaignStats};
use crate::exec::FaultSet;
use crate::triage::{BugCluster, BugKind};

/// Rows of the bug table that a synthetic campaign cannot fill, with the
/// reason.
pub const OMITTED_ROWS: [(&str, &str); 1] = [(
    "Interesting bugs",
    "every fault is injected on purpose, so none is more interesting than another",
)];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub row: String,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub id: usize,
    pub kind: BugKind,
    pub signature: String,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Omitted {
    pub row: String,
    pub reason: String,
}

/// Campaign summary. It holds no timing so that equal runs give equal
/// bytes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub strategy: String,
    pub seed: u64,
    pub faults: FaultSet,
    pub stats: CampaignStats,
    pub table: Vec<TableRow>,
    pub clusters: Vec<ClusterSummary>,
    pub omitted: Vec<Omitted>,
}

impl Report {
    pub fn new(cfg: &CampaignConfig, stats: &CampaignStats, clusters: &[BugCluster]) -> Report {
        let unique = |k: BugKind| clusters.iter().filter(|c| c.kind == k).count();
        let bug_programs: usize = clusters.iter().map(|c| c.members.len()).sum();
        let table = vec![
            TableRow { row: "Correct programs %".into(), value: format!("{:.1}", stats.validity() * 100.0) },
            TableRow { row: "Frontend crashes".into(), value: unique(BugKind::FrontendCrash).to_string() },
            TableRow { row: "Backend crashes".into(), value: unique(BugKind::BackendCrash).to_string() },
            TableRow { row: "Miscompilations".into(), value: unique(BugKind::Miscompilation).to_string() },
            TableRow { row: "Duplicates".into(), value: (bug_programs - clusters.len()).to_string() },
        ];
        Report {
            strategy: cfg.strategy.name().to_string(),
            seed: cfg.seed,
            faults: cfg.faults,
            stats: stats.clone(),
            table,
            clusters: clusters
                .iter()
                .map(|c| ClusterSummary { id: c.id, kind: c.kind, signature: c.signature.clone(), size: c.members.len() })
                .collect(),
            omitted: OMITTED_ROWS.iter().map(|(r, why)| Omitted { row: r.to_string(), reason: why.to_string() }).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// The bug table as aligned text.
    pub fn render_table(&self) -> String {
        let w = self.table.iter().map(|r| r.row.len()).max().unwrap_or(0);
        let mut out = format!("{:<w$}  {}\n", "", self.strategy.to_uppercase());
        for r in &self.table {
            out.push_str(&format!("{:<w$}  {}\n", r.row, r.value));
        }
        for o in &self.omitted {
            out.push_str(&format!("({} omitted: {})\n", o.row, o.reason));
        }
        out
    }
}

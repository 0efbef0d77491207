use serde::{Deserialize, Serialize};

use super::{BugKind, BugRecord};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugCluster {
    pub id: usize,
    pub kind: BugKind,
    pub signature: String,
    /// Record ids in input order.
    pub members: Vec<String>,
    /// Smallest member program.
    pub representative: String,
}

/// Groups records by kind and signature, clusters in order of first
/// appearance. A crash and a miscompilation never share a cluster.
pub fn dedup(records: &[BugRecord]) -> Vec<BugCluster> {
    let mut out: Vec<BugCluster> = Vec::new();
    for r in records {
        match out.iter_mut().find(|c| c.kind == r.kind && c.signature == r.signature) {
            Some(c) => {
                c.members.push(r.id.clone());
                if r.program.len() < c.representative.len() {
                    c.representative = r.program.clone();
                }
            }
            None => out.push(BugCluster {
                id: out.len(),
                kind: r.kind,
                signature: r.signature.clone(),
                members: vec![r.id.clone()],
                representative: r.program.clone(),
            }),
        }
    }
    out
}

use crate::covariance::BlockCovarianceMatrix;
use crate::error::Result;
use crate::tensor::trace_norm;

use super::report::CriterionReport;
use super::topology::NetworkTopology;

pub const CRITERION: &str = "trace-norm";

/// `tr Γ >= 2 sum_{x<y} ||γ_xy||_tr`, necessary for every NCDS network with
/// local channels. The topology only guards the NCDS assumption; the bound
/// itself ignores which sources exist.
pub fn trace_norm_criterion(gamma: &BlockCovarianceMatrix, topology: &NetworkTopology) -> Result<CriterionReport> {
    topology.check_ncds()?;
    topology.check_nodes(gamma.node_labels())?;
    let lhs = gamma.trace();
    let n = gamma.node_labels().len();
    let mut rhs = 0.0;
    let mut blocks = serde_json::Map::new();
    for x in 0..n {
        for y in x + 1..n {
            let t = trace_norm(&gamma.block_at(x, y));
            rhs += 2.0 * t;
            blocks.insert(
                format!("{}-{}", gamma.node_labels()[x], gamma.node_labels()[y]),
                serde_json::json!(t),
            );
        }
    }
    let tolerance = 1e-9 * (1.0 + lhs.abs());
    Ok(CriterionReport::new(CRITERION, lhs, rhs, tolerance).with_detail("block_trace_norms", blocks))
}

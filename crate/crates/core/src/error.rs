use crate::lp::LpError;
use crate::market_tree::NodeId;
use crate::rational::ParseRationalError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid market tree: {0}")]
    InvalidTree(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("invalid claim: {0}")]
    InvalidClaim(String),
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
    #[error("invalid price system: {0}")]
    InvalidPriceSystem(String),
    #[error("invalid stopping time / event: {0}")]
    InvalidEvent(String),
    #[error("no consistent price system on the subtree at node {start}")]
    NoConsistentPriceSystem { start: NodeId },
    #[error("primal layout does not match the solution vector: {0}")]
    LayoutMismatch(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Parse(#[from] ParseRationalError),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("operation undefined on the empty sequence")]
    EmptySequence,
    #[error("coordinate {0} is not a bit")]
    NotBinary(u32),
    #[error("malformed node literal {0:?}")]
    BadLiteral(String),
    #[error("branch period must be nonempty")]
    EmptyPeriod,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FamilyError {
    #[error("binary node {0} ends in 1 and is not in the image of the embedding")]
    NotInImage(String),
    #[error("index {index} out of range for a list of {len} members")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("branch {index} does not pass through ⟨{index}⟩ (it passes through {found})")]
    BranchRootMismatch { index: usize, found: String },
    #[error("pair ({n}, {i}) refers to branch {n} but only {len} branches were supplied")]
    PairOutOfRange { n: usize, i: usize, len: usize },
    #[error("duplicate member label {0:?}")]
    DuplicateLabel(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeasureError {
    #[error("window [{from}, {to}) is not within a list of length {len}")]
    WindowOutOfRange { from: usize, to: usize, len: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CohenError {
    #[error("report targets {got:?} do not match run targets {expected:?}")]
    MismatchedTargets {
        expected: Vec<String>,
        got: Vec<String>,
    },
}

/// Failures reported by a [`crate::sacks::NameOracle`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error(
        "oracle exhausted: only {found} of {wanted} admissible elements within probe depth {depth}"
    )]
    Exhausted {
        wanted: usize,
        found: usize,
        depth: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SacksError {
    #[error("node {node} is not in the condition")]
    NotInCondition { node: String },
    #[error("invalid vector splitting point: {0}")]
    InvalidVecSplit(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("set of size {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("oracle contract violated at stage {stage}: {detail}")]
    OracleContractViolated { stage: usize, detail: String },
    #[error("stage would need a-sets of size 2^{exponent}, budget is 2^{budget}")]
    BudgetExceeded { exponent: usize, budget: usize },
    #[error("not a fusion sequence: ≤_{0} fails between entries {0} and {next}", next = .0 + 1)]
    NotAFusionSequence(usize),
}

use thiserror::Error;

/// Errors raised across the library. Variants map onto CLI exit codes via
/// [`Error::exit_code`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("edge {0}-{1} appears in both graphs")]
    SharedEdge(usize, usize),
    #[error("graphs have different vertex counts ({0} vs {1})")]
    VertexCountMismatch(usize, usize),
    #[error("not a permutation of [{0}]")]
    NotAPermutation(usize),
    #[error("invalid edge {0}-{1} on {2} vertices")]
    InvalidEdge(usize, usize, usize),
    #[error("degree-sum parity violated: n={n}, d={d}")]
    ParityViolation { n: usize, d: usize },
    #[error("perfect matchings need an even vertex count, got {0}")]
    OddN(usize),
    #[error("invalid degree {d} for {n} vertices")]
    InvalidDegree { n: usize, d: usize },
    #[error("{what} cap exceeded: {value} > {cap}")]
    CapExceeded { what: &'static str, value: usize, cap: usize },
    #[error("measure has empty support")]
    EmptySupport,
    #[error("rejection budget of {0} attempts exceeded")]
    RejectionBudgetExceeded(u64),
    #[error("graph is not {0}-regular")]
    NotRegular(usize),
    #[error("McKay hypothesis violated: delta_hat = {delta_hat} > eps * sum(g) = {bound}")]
    HypothesisViolated { delta_hat: f64, bound: f64 },
    #[error("edge {0}-{1} already present in H")]
    EdgeAlreadyPresent(usize, usize),
    #[error("degree of H exceeds d at vertex {0}")]
    DegreeExceeded(usize),
    #[error("too many edges in H for the conditional estimate")]
    TooManyEdges,
    #[error("sample variance of X is zero")]
    DegenerateX,
    #[error("expected cell count below floor: {0}")]
    SparseCells(String),
    #[error("no feasible flow meeting the coupling bound")]
    InfeasibleFlow,
    #[error("zeta recursion did not reach epsilon within {0} steps")]
    NonTermination(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// 3 for exhausted rejection budgets, 2 for every precondition failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::RejectionBudgetExceeded(_) | Error::NonTermination(_) => 3,
            _ => 2,
        }
    }
}

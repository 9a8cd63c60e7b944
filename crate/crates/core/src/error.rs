use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{what} = {value} is outside its domain ({expected})")]
    Domain {
        what: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("infeasible request: {0}")]
    Feasibility(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("degenerate arm: {0}")]
    DegenerateArm(&'static str),

    #[error("eigensolver did not converge after {iterations} iterations (residuals {residuals:?})")]
    SolverNonConvergence {
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("rejection region is not an interval: {0}")]
    NonMonotone(String),

    #[error("expression error: {0}")]
    Expr(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn check_probability(what: &'static str, p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value: p,
            expected: "0 < p < 1",
        })
    }
}

pub(crate) fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got == want {
        Ok(())
    } else {
        Err(Error::Dimension(format!("{what}: length {got}, expected {want}")))
    }
}

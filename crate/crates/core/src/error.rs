use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("derivative order {requested} exceeds the supported maximum {max}")]
    OrderCap { requested: usize, max: usize },
    #[error("not a norm: {0}")]
    NotANorm(String),
    #[error("ball constants: {0}")]
    Constants(String),
    #[error("degenerate flag: g(y,y)g(z,z) - g(y,z)^2 = {0:e}")]
    DegenerateFlag(f64),
    #[error("singular or indefinite tensor: {0}")]
    Singular(String),
    #[error("point not covered: {0}")]
    Uncovered(String),
    #[error("no analytic reference for {0}")]
    OracleMissing(String),
    #[error("step size underflow: {0}")]
    StepUnderflow(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

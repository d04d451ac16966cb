use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid Pauli character {character:?} at position {position}")]
    Parse { position: usize, character: char },

    #[error("empty Pauli string")]
    EmptyPauli,

    #[error("width mismatch: {left} qubits vs {right} qubits")]
    DimensionMismatch { left: usize, right: usize },

    #[error("trace collapse{}: identity coefficient {identity:e} is below {epsilon:e}", location(.step, .gate))]
    TraceCollapse {
        identity: f64,
        epsilon: f64,
        step: Option<usize>,
        gate: Option<usize>,
    },

    #[error("degenerate state: purity is zero")]
    DegenerateState,

    #[error("relative error undefined for a zero reference value")]
    DivisionByZero,

    #[error("imaginary residue {imag:e} exceeds tolerance for real part {real:e}")]
    ImaginaryResidue { real: f64, imag: f64 },

    #[error("Hamiltonian has no non-identity terms")]
    EmptyHamiltonian,

    #[error("identity generator cannot be used as a gate")]
    IdentityGenerator,

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("{n} qubits exceed the dense size guard of {max}")]
    SizeGuard { n: usize, max: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed input at line {line}: {message}")]
    Format { line: usize, message: String },
}

fn location(step: &Option<usize>, gate: &Option<usize>) -> String {
    match (step, gate) {
        (Some(s), Some(g)) => format!(" at Trotter step {s}, gate {g}"),
        (Some(s), None) => format!(" at Trotter step {s}"),
        _ => String::new(),
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

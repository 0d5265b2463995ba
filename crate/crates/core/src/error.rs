use thiserror::Error;

/// Errors surfaced by the toolkit.
///
/// Domain violations (a kernel evaluated where it is undefined, an exponent
/// outside its admissible interval) are recoverable and reported as values;
/// they never panic.
#[derive(Debug, Error)]
pub enum CaloricError {
    /// Parameter outside its admissible range, e.g. `s` outside `(0, 1]`.
    #[error("parameter {name} = {value} outside admissible range {range}")]
    ParamRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    /// Kernel evaluated at a point where it is undefined (origin, or a
    /// removed axis such as `x = 0` for spatial-factorization formulas).
    #[error("kernel {kernel} undefined at ({x:?}, {t})")]
    KernelDomain {
        kernel: &'static str,
        x: Vec<f64>,
        t: f64,
    },

    /// Quadrature failed to reach the requested tolerance.
    #[error("quadrature did not converge: {context} (achieved {achieved:.3e}, wanted {wanted:.3e})")]
    QuadratureDiverged {
        context: &'static str,
        achieved: f64,
        wanted: f64,
    },

    /// A grid operation received incompatible shapes or axes.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Binary or JSON payload is malformed.
    #[error("malformed {format}: {detail}")]
    MalformedData { format: &'static str, detail: String },

    /// Construction is infeasible with the given parameters
    /// (e.g. a Cantor set requesting more children than lattice slots).
    #[error("infeasible construction: {0}")]
    Infeasible(String),

    /// A kernel evaluation failed while summing a potential; carries the
    /// index of the offending atom.
    #[error("atom {index}: {source}")]
    AtomContext {
        index: usize,
        #[source]
        source: Box<CaloricError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CaloricError>;

impl CaloricError {
    /// Shorthand for a range violation.
    pub fn param(name: &'static str, value: f64, range: &'static str) -> Self {
        CaloricError::ParamRange { name, value, range }
    }
}

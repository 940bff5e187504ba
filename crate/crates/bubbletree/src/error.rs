//! Error type shared by every module of the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Failures surfaced by the numerical pipelines.
///
/// Variants split into three groups, mirrored by the CLI exit codes:
/// invalid input (construction-time rejection), numerical-budget exhaustion
/// (a computation that cannot reach its tolerance inside its resource cap),
/// and domain preconditions of individual operations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// The identically-zero polynomial where a nonzero one is required.
    #[error("zero polynomial")]
    ZeroPolynomial,

    /// A map tuple whose entries are all the zero polynomial.
    #[error("all tuple entries are the zero polynomial")]
    ZeroTuple,

    /// A homogeneous coordinate pair (0, 0).
    #[error("zero homogeneous coordinate vector")]
    ZeroVector,

    /// Affine substitution with scale zero.
    #[error("affine substitution requires a nonzero scale")]
    ZeroScale,

    /// An operation that is undefined for constant maps.
    #[error("curve is constant")]
    ConstantCurve,

    /// Malformed input detected at construction time.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Adaptive quadrature hit its cell cap before reaching the tolerance.
    #[error("quadrature budget exceeded: {cells} cells, error {err:.3e} > tol {tol:.3e}")]
    QuadratureBudgetExceeded { cells: usize, err: f64, tol: f64 },

    /// An extrapolated sequence did not settle below its tolerance.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// A bracketing search found no solution in its admissible range.
    #[error("no solution: {0}")]
    NoSolution(String),

    /// The bubble recursion exceeded the depth bound implied by the energy
    /// quantum; indicates a numerical failure upstream.
    #[error("bubble recursion exceeded depth {0}")]
    DepthExceeded(usize),

    /// A tree-of-spheres relation without the unique minimal element.
    #[error("root has no predecessor")]
    RootHasNoPredecessor,

    /// The image of the curve is too spread out for a small-image estimate.
    #[error("image diameter {diameter:.4} exceeds limit {limit}")]
    ImageTooLarge { diameter: f64, limit: f64 },

    /// A circle-valued check that requires mean zero received a nonzero mean.
    #[error("Fourier coefficient at index 0 must vanish, got modulus {0:.3e}")]
    NonzeroMean(f64),
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("structure constants are not antisymmetric (defect {defect:e})")]
    AntisymmetryViolation { defect: f64 },

    #[error("matrix is not antisymmetric (defect {defect:e})")]
    NotAntisymmetric { defect: f64 },

    #[error("series did not converge: {0}")]
    NonConvergence(String),

    #[error("fields live on spaces of different dimension ({left} vs {right})")]
    MixedDimensions { left: usize, right: usize },

    #[error("finite-difference Jacobian is ill-conditioned (condition number {condition:e})")]
    JacobianIllConditioned { condition: f64 },

    #[error("no polynomial of degree <= {max_degree} fits (best residual {best_residual:e})")]
    NoFit { max_degree: usize, best_residual: f64 },

    #[error("Dirac space has dimension {got}, expected {expected}")]
    DimensionDrop { expected: usize, got: usize },

    #[error("subspace is not isotropic (defect {defect:e})")]
    NotIsotropic { defect: f64 },

    #[error("Dirac space is not the graph of a bivector (intersection with V has dimension {intersection_dim})")]
    NotGraph { intersection_dim: usize },

    #[error("Dirac space is not the graph of a two-form (intersection with V* has dimension {intersection_dim})")]
    NotTwoFormGraph { intersection_dim: usize },

    #[error("point is off the transversal (distance {distance:e})")]
    PointNotOnX { distance: f64 },

    #[error("mixed block of the split does not vanish ({residual:e})")]
    MixedBlockNonzero { residual: f64 },

    #[error("subspace is not a Poisson transversal here (min singular value {min_sv:e})")]
    NotTransversal { min_sv: f64 },

    #[error("operator Xi is singular at the base point (min singular value {min_sv:e})")]
    SingularBase { min_sv: f64 },

    #[error("map is not a Lie algebra morphism (residual {residual:e})")]
    NotMorphism { residual: f64 },

    #[error("preimage of the transversal is not transversal (min singular value {min_sv:e})")]
    PreimageNotTransversal { min_sv: f64 },

    #[error("preimage of the transversal is empty (residual {residual:e})")]
    EmptyPreimage { residual: f64 },

    #[error("matrix is not in the image of the representation (residual {residual:e})")]
    NotInAdjointImage { residual: f64 },

    #[error("representation is not a faithful homomorphism: {0}")]
    BadRepresentation(String),

    #[error("arrows are not composable (mismatch {mismatch:e})")]
    NotComposable { mismatch: f64 },

    #[error("arrow is not in the restricted groupoid (constraint residual {residual:e})")]
    NotMember { residual: f64 },

    #[error("block dimensions do not fit: {0}")]
    BlockDimensionMismatch(String),

    #[error("subalgebra is not Frobenius for this covector (min singular value {min_sv:e})")]
    NotFrobenius { min_sv: f64 },

    #[error("subspace is not closed under the bracket (residual {residual:e})")]
    NotSubalgebra { residual: f64 },

    #[error("isotropy solve is rank deficient (min singular value {min_sv:e})")]
    SingularIsotropy { min_sv: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("could not parse input: {0}")]
    Parse(String),
}

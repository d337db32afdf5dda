//! Error type shared by all modules.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building orbits and evaluating zeta
/// functions. Variants split into two classes: invalid requests (bad
/// parameters, inadmissible weights, selectors that match nothing) and
/// numerical failures of an otherwise valid request. [`Error::is_invalid_input`]
/// exposes the class so callers can map it onto exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A phase-point direction is not a unit vector.
    #[error("direction norm {norm} differs from 1 by more than 1e-14")]
    InvalidDirection { norm: f64 },

    /// A point handed to the section chart does not lie on the stated disc.
    #[error("point is off the disc-{disc} boundary by {dist:e} (limit 1e-10 r)")]
    OffBoundary { disc: usize, dist: f64 },

    /// Section momentum `|p| = 1` has no transverse outgoing direction.
    #[error("section momentum p = {p} is tangent; |p| < 1 is required")]
    TangentSection { p: f64 },

    /// A flight meets a disc tangentially; downstream quantities would be
    /// ill-conditioned, so this is reported instead of silently continuing.
    #[error("grazing impact on disc {disc}: |<v',n>| = {dot:e} < 1e-12")]
    DegenerateHit { disc: usize, dot: f64 },

    /// Newton refinement of a periodic orbit failed to converge.
    #[error(
        "orbit '{word}' did not converge: residual {residual:e} after {iterations} iterations"
    )]
    NewtonDivergence {
        word: String,
        residual: f64,
        iterations: usize,
    },

    /// The converged polygon is not a genuine orbit: some segment crosses a
    /// disc before reaching its nominal endpoint, so the word is shadowed.
    #[error("orbit '{word}' is shadowed: segment {segment} is blocked by disc {blocker}")]
    ShadowedOrbit {
        word: String,
        segment: usize,
        blocker: usize,
    },

    /// An orbit came out marginal or stable, which the dispersing geometry
    /// forbids; treated as fatal.
    #[error("orbit '{word}' is not hyperbolic: |Lambda| = {lambda_abs}")]
    NotHyperbolic { word: String, lambda_abs: f64 },

    /// A weight fails an admissibility requirement (for example a derivative
    /// weight whose support touches a disc boundary).
    #[error("inadmissible weight: {0}")]
    InadmissibleWeight(String),

    /// A zeta evaluation was requested too close to a zero of one of its
    /// band factors.
    #[error("evaluation point {at:?} lies within 1e-8 of a band-{band} zero near {zero:?}")]
    PoleProximity {
        band: usize,
        at: (f64, f64),
        zero: (f64, f64),
    },

    /// The direct orbit sum does not converge at this spectral parameter.
    #[error("direct orbit sum diverges: repeat terms of '{word}' grow by factor {ratio}")]
    DivergentDirectSum { word: String, ratio: f64 },

    /// Contour quadrature failed its self-consistency check.
    #[error("contour quadrature unreliable: refinement changed the result by {change:e}")]
    UnreliableContour { change: f64 },

    /// The rectangle scan could not resolve a cell even after re-dissection.
    #[error("resonance scan failed: {0}")]
    ScanFailure(String),

    /// A residue was requested at a zero that is not simple, or where another
    /// band vanishes as well; the contour route must be used instead.
    #[error("residue precondition violated: {0}")]
    ResidueUnavailable(String),

    /// The trapped-set mask came out empty, so localization is undefined.
    #[error("trapped-set mask is empty on this grid")]
    EmptyMask,

    /// A resonance selector matched nothing.
    #[error("no resonance matches selector: {0}")]
    NoMatch(String),
}

impl Error {
    /// True when the error reflects an invalid request rather than a
    /// numerical failure while processing a valid one.
    pub fn is_invalid_input(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::InvalidDirection { .. }
                | Error::OffBoundary { .. }
                | Error::TangentSection { .. }
                | Error::InadmissibleWeight(_)
                | Error::NoMatch(_)
        )
    }
}

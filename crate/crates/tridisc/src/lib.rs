//! Periodic-orbit computations for the symmetric three-disc open billiard.
//!
//! A point particle moves freely between three equal discs centred on the
//! vertices of an equilateral triangle and reflects specularly off their
//! boundaries. Almost every trajectory escapes; the ones that stay forever
//! form a fractal repeller built from unstable periodic orbits. This crate
//! computes those orbits and uses them to evaluate weighted dynamical zeta
//! functions, locate their complex zeros (the resonances of the escape
//! dynamics), and render the associated invariant distributions on the
//! boundary Poincare section.
//!
//! Modules, in dependency order:
//!
//! * [`geometry`]: disc layout, free flight and specular reflection, the
//!   Birkhoff section coordinates `(q, p)`, and the sixfold symmetry group.
//! * [`symbolic`]: prime cycles in the full and fundamental domains and the
//!   unfolding of fundamental words into closed full-domain itineraries.
//! * [`orbits`]: Newton refinement of periodic orbits, stability via the
//!   transverse monodromy, and orbit-averaged weights.
//! * [`zeta`]: cycle expansions of band zeta functions and the weighted
//!   resonance sum they resum.
//! * [`resonances`]: zero scans over rectangles, Newton polishing, residues
//!   and Laurent coefficients by contour quadrature.
//! * [`ruelle_dist`]: smoothed invariant distributions on the section and a
//!   localization diagnostic against the trapped-set mask.

// Negated float comparisons like `!(x > 0.0)` reject NaN together
// with the out-of-range values; `partial_cmp` chains would bury that.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod orbits;
pub mod resonances;
pub mod ruelle_dist;
pub mod symbolic;
pub mod zeta;

pub use error::{Error, Result};
pub use geometry::{DiscSystem, Flight, GroupElement, PhasePoint, SectionPoint};
pub use orbits::{OrbitTable, PeriodicOrbit, WeightSpec};
pub use resonances::{
    default_contour_radius, laurent_coefficient, residue, residue_coefficients, scan,
    winding_number, Rect, ResidueCoefficients, Resonance,
};
pub use ruelle_dist::{distribution_grid, localization_metric, sigma1_mask, DistributionGrid};
pub use symbolic::{Domain, PrimeCycle, UnfoldedItinerary};
pub use zeta::{
    build_expansion, build_weighted_expansions, direct_orbit_sum, weighted_zeta,
    weighted_zeta_direct, CycleExpansion, DetMode, DirectPrime, EvalMode, PrimeFactor, ZetaValue,
};

/// Crate version, embedded in output-file provenance headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

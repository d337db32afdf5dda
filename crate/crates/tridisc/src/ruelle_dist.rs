//! Smoothed restrictions of invariant distributions to the Birkhoff
//! section, rendered as grids, plus the trapped-neighborhood mask and a
//! localization diagnostic.
//!
//! The distribution attached to a simple resonance `λ0` assigns to a
//! test function its residue of the weighted sum at `λ0`. Restricted to
//! the disc-boundary section and mollified with an isotropic Gaussian
//! of width `σ`, that becomes an honest function of the section
//! coordinates `(q, p)`: its value at a node is the residue of the
//! section-comb weight centred there. Because residues factor through
//! one weight-independent coefficient per prime cycle, a whole grid
//! costs one coefficient pass plus `O(nodes × bounces)` kernel sums.
//!
//! The mask marks the section points whose forward or backward ray
//! still hits a disc — the neighborhood where the trapped set lives —
//! and [`localization_metric`] measures how much of the rendered
//! distribution's mass sits within a few cells of that mask, which
//! grows as `σ` shrinks.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{from_birkhoff, next_reflection, DiscSystem, Flight, SectionPoint};
use crate::orbits::{comb_value, OrbitTable};
use crate::resonances::{residue_coefficients, Resonance};
use crate::zeta::build_expansion;

/// Largest accepted grid, columns × rows.
const MAX_NQ: usize = 2000;
const MAX_NP: usize = 1000;

/// A complex-valued field on the section grid, with the trapped-set
/// neighborhood mask and the normalization extrema of its real part.
///
/// Nodes are uniform and endpoint-inclusive: `q` runs over `n_q` nodes
/// on `[−π, π]` (column index), `p` over `n_p` nodes on `[−1, 1]` (row
/// index, ascending). Values are stored row-major.
#[derive(Clone, Debug)]
pub struct DistributionGrid {
    pub(crate) n_q: usize,
    pub(crate) n_p: usize,
    pub(crate) sigma: f64,
    pub(crate) lambda0: Complex64,
    pub(crate) band: usize,
    pub(crate) n_max: usize,
    pub(crate) values: Vec<Complex64>,
    pub(crate) mask: Vec<bool>,
    pub(crate) min_abs_re: f64,
    pub(crate) max_abs_re: f64,
}

impl DistributionGrid {
    pub fn n_q(&self) -> usize {
        self.n_q
    }

    pub fn n_p(&self) -> usize {
        self.n_p
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// The resonance the grid renders.
    pub fn lambda0(&self) -> Complex64 {
        self.lambda0
    }

    pub fn band(&self) -> usize {
        self.band
    }

    /// Expansion order the residue coefficients were computed from.
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Column coordinate: `q_i = −π + 2π·i/(n_q−1)`.
    pub fn q_node(&self, i: usize) -> f64 {
        -PI + TAU * i as f64 / (self.n_q - 1) as f64
    }

    /// Row coordinate: `p_j = −1 + 2·j/(n_p−1)`.
    pub fn p_node(&self, j: usize) -> f64 {
        -1.0 + 2.0 * j as f64 / (self.n_p - 1) as f64
    }

    fn index(&self, i: usize, j: usize) -> usize {
        j * self.n_q + i
    }

    /// Value at column `i`, row `j`.
    pub fn value(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.index(i, j)]
    }

    /// Whether the node at column `i`, row `j` lies in the
    /// trapped-neighborhood mask.
    pub fn in_mask(&self, i: usize, j: usize) -> bool {
        self.mask[self.index(i, j)]
    }

    /// Row-major values, row `j` = `p_node(j)` ascending.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Row-major mask, aligned with [`DistributionGrid::values`].
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Smallest `|Re value|` over the grid.
    pub fn min_abs_re(&self) -> f64 {
        self.min_abs_re
    }

    /// Largest `|Re value|` over the grid.
    pub fn max_abs_re(&self) -> f64 {
        self.max_abs_re
    }
}

fn validate_grid_shape(n_q: usize, n_p: usize) -> Result<()> {
    if !(2..=MAX_NQ).contains(&n_q) || !(2..=MAX_NP).contains(&n_p) {
        return Err(Error::InvalidParameter(format!(
            "grid {n_q}x{n_p} outside 2..={MAX_NQ} x 2..={MAX_NP}"
        )));
    }
    Ok(())
}

/// Renders the σ-smoothed section restriction of the invariant
/// distribution at a simple resonance.
///
/// Each node value is the residue of the weighted sum at `λ0` for the
/// section-comb weight centred on the node: with the per-prime residue
/// coefficients `c_p` and denominator `D`, the node value is
/// `−k0·(Σ_p a_p·c_p)/D`, where `a_p` sums the periodic section
/// Gaussian over the orbit's group-symmetrized bounces.
pub fn distribution_grid(
    sys: &DiscSystem,
    table: &OrbitTable,
    res: &Resonance,
    n_q: usize,
    n_p: usize,
    sigma: f64,
) -> Result<DistributionGrid> {
    validate_grid_shape(n_q, n_p)?;
    if !(sigma > 0.0 && sigma <= 10.0) {
        return Err(Error::InvalidParameter(format!(
            "smoothing width sigma = {sigma} outside (0, 10]"
        )));
    }
    if sys.d_over_r() != table.system().d_over_r() {
        return Err(Error::InvalidParameter(
            "system and orbit table describe different disc layouts".into(),
        ));
    }
    if res.order != 1 {
        return Err(Error::ResidueUnavailable(format!(
            "grid rendering needs a simple resonance; zero at {} has order {}",
            res.lambda0, res.order
        )));
    }
    if res.n_max > table.n_max() {
        return Err(Error::InvalidParameter(format!(
            "resonance was computed at length {} but the table only reaches {}",
            res.n_max,
            table.n_max()
        )));
    }

    let exp = build_expansion(table, res.band, res.n_max)?;
    let kit = residue_coefficients(std::slice::from_ref(&exp), res)?;
    let scale = -(res.band as f64) / kit.denominator;

    // Flatten every orbit's symmetrized bounces, each tagged with its
    // prime's residue coefficient, so one pass per node covers all
    // primes.
    let retained: Vec<_> = table
        .orbits()
        .iter()
        .filter(|o| o.cycle.len() <= res.n_max)
        .collect();
    if retained.len() != kit.coefficients.len() {
        return Err(Error::InvalidParameter(
            "orbit table does not match the expansion's prime list".into(),
        ));
    }
    let mut bounces: Vec<(f64, f64, Complex64)> = Vec::new();
    for (orbit, &c) in retained.iter().zip(&kit.coefficients) {
        for s in &orbit.section_bounces {
            bounces.push((s.q, s.p, c));
        }
    }

    let values: Vec<Complex64> = (0..n_p)
        .into_par_iter()
        .flat_map_iter(|j| {
            let p0 = -1.0 + 2.0 * j as f64 / (n_p - 1) as f64;
            let bounces = &bounces;
            (0..n_q).map(move |i| {
                let q0 = -PI + TAU * i as f64 / (n_q - 1) as f64;
                let mut acc = Complex64::new(0.0, 0.0);
                for &(qb, pb, c) in bounces {
                    acc += comb_value(qb, pb, q0, p0, sigma) * c;
                }
                scale * acc
            })
        })
        .collect();

    let mask = sigma1_mask(sys, n_q, n_p)?;
    let mut min_abs_re = f64::INFINITY;
    let mut max_abs_re = 0.0f64;
    for v in &values {
        min_abs_re = min_abs_re.min(v.re.abs());
        max_abs_re = max_abs_re.max(v.re.abs());
    }

    Ok(DistributionGrid {
        n_q,
        n_p,
        sigma,
        lambda0: res.lambda0,
        band: res.band,
        n_max: res.n_max,
        values,
        mask,
        min_abs_re,
        max_abs_re,
    })
}

/// Marks the section nodes whose trajectory experiences at least one
/// more disc reflection beyond the section bounce itself, forward or
/// backward in time: the neighborhood of the trapped set on the
/// section.
///
/// The forward ray is the node's outgoing ray; the backward ray is the
/// outgoing ray of the momentum-reversed node `(q, −p)`, which retraces
/// the incoming segment. Tangent nodes (`|p| = 1`) and grazing hits are
/// excluded.
pub fn sigma1_mask(sys: &DiscSystem, n_q: usize, n_p: usize) -> Result<Vec<bool>> {
    validate_grid_shape(n_q, n_p)?;
    let disc = sys.reference_disc();
    let ray_hits = |q: f64, p: f64| -> bool {
        let Ok(s) = SectionPoint::new(q, p, disc) else {
            return false;
        };
        let Ok(phase) = from_birkhoff(sys, &s) else {
            return false;
        };
        matches!(next_reflection(sys, &phase), Ok(Flight::Hit { .. }))
    };
    let mut mask = Vec::with_capacity(n_q * n_p);
    for j in 0..n_p {
        let p = -1.0 + 2.0 * j as f64 / (n_p - 1) as f64;
        for i in 0..n_q {
            let q = -PI + TAU * i as f64 / (n_q - 1) as f64;
            mask.push(ray_hits(q, p) || ray_hits(q, -p));
        }
    }
    Ok(mask)
}

/// Fraction of the grid's `Σ|Re value|` mass lying within `delta` cells
/// (Chebyshev distance on node indices) of the mask.
///
/// `delta = 0` restricts to the mask itself; a `delta` spanning the
/// grid returns 1. Shrinking `σ` concentrates the rendered distribution
/// on the trapped set, so this fraction grows as `σ` falls.
pub fn localization_metric(grid: &DistributionGrid, delta: usize) -> Result<f64> {
    if !grid.mask.iter().any(|&b| b) {
        return Err(Error::EmptyMask);
    }

    // Separable Chebyshev dilation: a horizontal max filter, then a
    // vertical one.
    let (n_q, n_p) = (grid.n_q, grid.n_p);
    let mut horiz = vec![false; n_q * n_p];
    for j in 0..n_p {
        for i in 0..n_q {
            let lo = i.saturating_sub(delta);
            let hi = (i + delta).min(n_q - 1);
            horiz[j * n_q + i] = (lo..=hi).any(|i2| grid.mask[j * n_q + i2]);
        }
    }
    let mut near = 0.0f64;
    let mut total = 0.0f64;
    for j in 0..n_p {
        let lo = j.saturating_sub(delta);
        let hi = (j + delta).min(n_p - 1);
        for i in 0..n_q {
            let dilated = (lo..=hi).any(|j2| horiz[j2 * n_q + i]);
            let m = grid.values[j * n_q + i].re.abs();
            total += m;
            if dilated {
                near += m;
            }
        }
    }
    if total == 0.0 {
        return Err(Error::InvalidParameter(
            "grid carries no mass; the localization fraction is undefined".into(),
        ));
    }
    Ok(near / total)
}

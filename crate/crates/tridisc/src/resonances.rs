//! Locating zeros of the zeta bands and extracting pole data of the
//! weighted sum at those zeros.
//!
//! Zeros are found by an argument-principle scan: the rectangle is
//! tiled into cells, the winding number of a band's `1/ζ_(k)` around
//! each cell boundary is computed by adaptive argument tracking, and
//! winding cells seed Newton refinement on the same truncated
//! expansion. Zero-finding always targets the band truncations — never
//! the assembled weighted sum, whose poles make Newton ill-posed.
//!
//! At a simple band-`k0` zero `λ0`, the weighted sum has the residue
//!
//! ```text
//! Res_{λ=λ0} Z_f = −k0 · ∂_β ζ_(k0)^{-1}(λ0) / ∂_λ ζ_(k0)^{-1}(λ0) ,
//! ```
//!
//! evaluated analytically from the expansion ([`residue`]); the same
//! quantity — and higher Laurent coefficients — can be recovered by
//! trapezoidal contour quadrature around the zero
//! ([`laurent_coefficient`]), and the two routes serve as mutual
//! oracles. [`residue_coefficients`] factors the residue into one
//! weight-independent coefficient per prime cycle so that many weights
//! can be evaluated against one resonance cheaply.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::zeta::{weighted_zeta, CycleExpansion, EvalMode};

/// Axis-aligned rectangle in the complex spectral plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    /// Lower edge of the real range.
    pub re_min: f64,
    /// Upper edge of the real range.
    pub re_max: f64,
    /// Lower edge of the imaginary range.
    pub im_min: f64,
    /// Upper edge of the imaginary range.
    pub im_max: f64,
}

impl Rect {
    /// Creates a rectangle, rejecting empty or non-finite ranges.
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let r = Rect {
            re_min,
            re_max,
            im_min,
            im_max,
        };
        if ![re_min, re_max, im_min, im_max]
            .iter()
            .all(|v| v.is_finite())
            || re_min >= re_max
            || im_min >= im_max
        {
            return Err(Error::InvalidParameter(format!(
                "degenerate rectangle [{re_min}, {re_max}] x [{im_min}, {im_max}]i"
            )));
        }
        Ok(r)
    }

    /// Whether `z` lies in the closed rectangle, with `slack` of leeway.
    pub fn contains(&self, z: Complex64, slack: f64) -> bool {
        z.re >= self.re_min - slack
            && z.re <= self.re_max + slack
            && z.im >= self.im_min - slack
            && z.im <= self.im_max + slack
    }

    fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    fn height(&self) -> f64 {
        self.im_max - self.im_min
    }

    fn center(&self) -> Complex64 {
        Complex64::new(
            0.5 * (self.re_min + self.re_max),
            0.5 * (self.im_min + self.im_max),
        )
    }
}

/// A located zero of one band truncation: a candidate resonance of the
/// weighted zeta function.
#[derive(Clone, Debug)]
pub struct Resonance {
    /// The zero itself.
    pub lambda0: Complex64,
    /// Band index whose truncation vanishes here.
    pub band: usize,
    /// Zero multiplicity, read off the cell winding number.
    pub order: usize,
    /// Expansion order the zero was computed from.
    pub n_max: usize,
    /// `|ζ_(k)^{-1}(λ0)|` after Newton refinement.
    pub newton_residual: f64,
}

/// Weight-independent factorization of the residue at a simple zero:
/// `Res Z_f = −k0 · (Σ_p A_p·c_p) / D` for any weight vector `A`.
#[derive(Clone, Debug)]
pub struct ResidueCoefficients {
    /// Band index of the zero.
    pub band: usize,
    /// The zero the coefficients were computed at.
    pub lambda0: Complex64,
    /// One coefficient per prime of the expansion:
    /// `c_p = Σ_{π∋p} (−1)^{m_π} w_π(λ0)`.
    pub coefficients: Vec<Complex64>,
    /// Denominator `D = ∂_λ ζ_(k0)^{-1}(λ0)`.
    pub denominator: Complex64,
}

impl ResidueCoefficients {
    /// Assembles the residue for a weight vector (aligned with the
    /// primes of the expansion the coefficients came from).
    pub fn residue_for(&self, weights: &[f64]) -> Result<Complex64> {
        if weights.len() != self.coefficients.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} weights, got {}",
                self.coefficients.len(),
                weights.len()
            )));
        }
        let mut num = Complex64::new(0.0, 0.0);
        for (&a, c) in weights.iter().zip(&self.coefficients) {
            num += a * c;
        }
        Ok(-(self.band as f64) * num / self.denominator)
    }
}

/// Outcome classification while measuring one cell.
enum CellIssue {
    /// A band value came out vanishingly small on the cell boundary: a
    /// zero sits within ~1e-6 of an edge and the dissection must move.
    BoundaryZero,
    /// Genuine failure that shifting the dissection will not cure.
    Hard(Error),
}

impl From<Error> for CellIssue {
    fn from(e: Error) -> Self {
        CellIssue::Hard(e)
    }
}

/// Band values this small on a cell edge mean a zero is within about
/// 1e-6 of the edge (values grow away from a zero at the scale of the
/// λ-derivative, which is O(1) or larger on these truncations).
const BOUNDARY_ZERO_ABS: f64 = 1e-6;

/// Snap tolerance: zeros this close to the real axis are real.
const REAL_SNAP: f64 = 1e-10;

/// Zeros of the same band closer than this are one zero.
const MERGE_TOL: f64 = 1e-8;

fn eval(exp: &CycleExpansion, z: Complex64) -> Complex64 {
    exp.zeta_inv(z, EvalMode::Value)
        .expect("value evaluation cannot fail")
}

fn eval_d(exp: &CycleExpansion, z: Complex64) -> Complex64 {
    exp.zeta_inv(z, EvalMode::DLambda)
        .expect("derivative evaluation cannot fail")
}

/// Accumulated argument change along the straight segment `z0 → z1`,
/// refining until each step turns by less than π/2. `v0`, `v1` are the
/// band values at the endpoints.
fn segment_arg(
    exp: &CycleExpansion,
    z0: Complex64,
    v0: Complex64,
    z1: Complex64,
    v1: Complex64,
    depth: usize,
) -> std::result::Result<f64, CellIssue> {
    if v0.norm() < BOUNDARY_ZERO_ABS || v1.norm() < BOUNDARY_ZERO_ABS {
        return Err(CellIssue::BoundaryZero);
    }
    let turn = (v1 / v0).arg();
    if turn.abs() <= FRAC_PI_2 && depth < 40 {
        return Ok(turn);
    }
    if depth == 0 {
        return Err(CellIssue::Hard(Error::ScanFailure(format!(
            "argument tracking failed to resolve the boundary near {z0}"
        ))));
    }
    let zm = 0.5 * (z0 + z1);
    let vm = eval(exp, zm);
    Ok(segment_arg(exp, z0, v0, zm, vm, depth - 1)? + segment_arg(exp, zm, vm, z1, v1, depth - 1)?)
}

/// Argument change along one edge, pre-split so that the phase of the
/// fastest-oscillating expansion term advances at most ~π/4 per step.
fn edge_arg(
    exp: &CycleExpansion,
    z0: Complex64,
    z1: Complex64,
    max_period: f64,
) -> std::result::Result<f64, CellIssue> {
    let length = (z1 - z0).norm();
    let h0 = (PI / (4.0 * max_period.max(1.0))).min(length);
    let steps = (length / h0).ceil() as usize;
    let mut total = 0.0;
    let mut za = z0;
    let mut va = eval(exp, za);
    for i in 1..=steps {
        let t = i as f64 / steps as f64;
        let zb = z0 + (z1 - z0) * t;
        let vb = eval(exp, zb);
        total += segment_arg(exp, za, va, zb, vb, 40)?;
        za = zb;
        va = vb;
    }
    Ok(total)
}

/// Winding number of a band value around the rectangle boundary,
/// counterclockwise.
fn rect_winding(
    exp: &CycleExpansion,
    rect: &Rect,
    max_period: f64,
) -> std::result::Result<i32, CellIssue> {
    let c = [
        Complex64::new(rect.re_min, rect.im_min),
        Complex64::new(rect.re_max, rect.im_min),
        Complex64::new(rect.re_max, rect.im_max),
        Complex64::new(rect.re_min, rect.im_max),
    ];
    let mut total = 0.0;
    for i in 0..4 {
        total += edge_arg(exp, c[i], c[(i + 1) % 4], max_period)?;
    }
    let w = total / TAU;
    let rounded = w.round();
    if (w - rounded).abs() > 0.25 {
        return Err(CellIssue::Hard(Error::ScanFailure(format!(
            "non-integer winding {w:.3} around cell centred at {}",
            rect.center()
        ))));
    }
    Ok(rounded as i32)
}

/// Counts zeros (with multiplicity) of one band truncation inside a
/// rectangle by the argument principle. Fails rather than guessing when
/// a zero sits within ~1e-6 of the boundary.
pub fn winding_number(exp: &CycleExpansion, rect: &Rect) -> Result<i32> {
    match rect_winding(exp, rect, exp.max_total_period()) {
        Ok(w) => Ok(w),
        Err(CellIssue::BoundaryZero) => Err(Error::ScanFailure(
            "a zero lies too close to the requested contour; move the boundary".into(),
        )),
        Err(CellIssue::Hard(e)) => Err(e),
    }
}

/// Newton refinement of a band zero from a seed. Returns the polished
/// zero and `|ζ^{-1}|` there. `order` selects the modified step
/// `λ ← λ − order·v/v'` so multiple zeros converge quadratically too.
///
/// The zero-quality gate is `|v| ≤ 1e-10·|v'|`, relaxed to the
/// expansion's f64 evaluation-noise floor where pseudo-cycle terms are
/// so large that cancellation noise exceeds that bound (deep in the
/// left half-plane); the best iterate ever seen is the one kept, since
/// iterates bounce randomly once they reach the noise floor.
fn newton_zero(exp: &CycleExpansion, seed: Complex64, order: usize) -> Result<(Complex64, f64)> {
    let mut z = seed;
    let mut best = (seed, f64::INFINITY);
    for _ in 0..100 {
        let v = eval(exp, z);
        let dv = eval_d(exp, z);
        if v.norm() < best.1 {
            best = (z, v.norm());
        }
        if dv.norm() == 0.0 {
            break;
        }
        let step = v / dv * (order as f64);
        z -= step;
        if step.norm() <= 1e-14 * (1.0 + z.norm()) {
            let v = eval(exp, z);
            if v.norm() < best.1 {
                best = (z, v.norm());
            }
            break;
        }
    }
    let (z, resid) = best;
    let dv = eval_d(exp, z);
    let quality_scale = if order == 1 { dv.norm() } else { 1.0 };
    let gate = (1e-10 * quality_scale.max(1e-300)).max(exp.evaluation_noise_floor(z));
    if resid > gate {
        return Err(Error::NewtonDivergence {
            word: format!("band-{} zero near {seed}", exp.band()),
            residual: resid,
            iterations: 100,
        });
    }
    Ok((z, resid))
}

/// Resolves all zeros inside a cell of known winding number: Newton for
/// a single zero, recursive subdivision when several share the cell.
fn resolve_cell(
    exp: &CycleExpansion,
    cell: &Rect,
    winding: i32,
    max_period: f64,
    depth: usize,
) -> std::result::Result<Vec<(Complex64, f64, usize)>, CellIssue> {
    if winding <= 0 {
        return Ok(Vec::new());
    }
    if winding == 1 {
        if let Ok((z, resid)) = newton_zero(exp, cell.center(), 1) {
            if cell.contains(z, 0.0) {
                return Ok(vec![(z, resid, 1)]);
            }
        }
        // Seed attracted elsewhere: close in by subdividing.
    }
    let min_side = cell.width().min(cell.height());
    if min_side <= 1e-5 || depth == 0 {
        // Cannot separate further: treat as one zero of this order.
        let (z, resid) =
            newton_zero(exp, cell.center(), winding as usize).map_err(CellIssue::Hard)?;
        return Ok(vec![(z, resid, winding as usize)]);
    }
    let mid_re = 0.5 * (cell.re_min + cell.re_max);
    let mid_im = 0.5 * (cell.im_min + cell.im_max);
    let quads = [
        Rect {
            re_min: cell.re_min,
            re_max: mid_re,
            im_min: cell.im_min,
            im_max: mid_im,
        },
        Rect {
            re_min: mid_re,
            re_max: cell.re_max,
            im_min: cell.im_min,
            im_max: mid_im,
        },
        Rect {
            re_min: cell.re_min,
            re_max: mid_re,
            im_min: mid_im,
            im_max: cell.im_max,
        },
        Rect {
            re_min: mid_re,
            re_max: cell.re_max,
            im_min: mid_im,
            im_max: cell.im_max,
        },
    ];
    let mut found = Vec::new();
    let mut accounted = 0;
    for q in &quads {
        let w = rect_winding(exp, q, max_period)?;
        accounted += w;
        found.extend(resolve_cell(exp, q, w, max_period, depth - 1)?);
    }
    if accounted != winding {
        return Err(CellIssue::Hard(Error::ScanFailure(format!(
            "subdivision of the cell at {} lost track of zeros ({} vs {})",
            cell.center(),
            accounted,
            winding
        ))));
    }
    Ok(found)
}

/// Scans a rectangle for zeros of every supplied band truncation.
///
/// The rectangle is tiled into cells of at most `cell` on a side; each
/// cell boundary's winding number seeds Newton refinement. When a zero
/// falls within ~1e-6 of an internal cell edge, the whole dissection is
/// shifted and retried rather than risking a silent miss. A rectangle
/// edge lying exactly on the real axis is padded outward by half a
/// cell, because real zeros — which sit on that edge — must land in
/// cell interiors; the pad region's finds are filtered back out.
///
/// Zeros within 1e-10 of the real axis are snapped onto it. Complex
/// zeros whose mirror image lies in the rectangle are reported together
/// with their exact conjugates, so the returned set is closed under
/// conjugation to working precision. The list is sorted by
/// (Im, Re, band) and each zero carries its cell's winding number as
/// its multiplicity.
pub fn scan(expansions: &[CycleExpansion], rect: &Rect, cell: f64) -> Result<Vec<Resonance>> {
    if expansions.is_empty() {
        return Err(Error::InvalidParameter(
            "scan needs at least one band expansion".into(),
        ));
    }
    if !(cell > 0.0 && cell <= 0.5) {
        return Err(Error::InvalidParameter(format!(
            "cell size {cell} outside (0, 0.5]"
        )));
    }
    Rect::new(rect.re_min, rect.re_max, rect.im_min, rect.im_max)?;

    // Pad outward when an edge sits on the real axis, so real zeros are
    // interior points of the padded region.
    let mut padded = *rect;
    if rect.im_min == 0.0 {
        padded.im_min = -0.5 * cell;
    }
    if rect.im_max == 0.0 {
        padded.im_max = 0.5 * cell;
    }

    let mut raw: Vec<Resonance> = Vec::new();
    let mut settled = false;
    'attempt: for attempt in 0..4 {
        raw.clear();
        let shift = attempt as f64 * 0.137 * cell;
        let cells = dissect(&padded, cell, shift);
        for exp in expansions {
            let max_period = exp.max_total_period();
            let windings: Vec<std::result::Result<i32, CellIssue>> = {
                use rayon::prelude::*;
                cells
                    .par_iter()
                    .map(|c| rect_winding(exp, c, max_period))
                    .collect()
            };
            for (c, w) in cells.iter().zip(windings) {
                let w = match w {
                    Ok(w) => w,
                    Err(CellIssue::BoundaryZero) => continue 'attempt,
                    Err(CellIssue::Hard(e)) => return Err(e),
                };
                if w <= 0 {
                    continue;
                }
                let zeros = match resolve_cell(exp, c, w, max_period, 20) {
                    Ok(z) => z,
                    Err(CellIssue::BoundaryZero) => continue 'attempt,
                    Err(CellIssue::Hard(e)) => return Err(e),
                };
                for (z, resid, order) in zeros {
                    raw.push(Resonance {
                        lambda0: z,
                        band: exp.band(),
                        order,
                        n_max: exp.n_max(),
                        newton_residual: resid,
                    });
                }
            }
        }
        // All cells measured cleanly; check that no polished zero sits
        // within 1e-6 of an internal dissection edge (winding would
        // have been fragile there even if it came out integer).
        let near_edge = raw.iter().any(|r| {
            let z = r.lambda0;
            nearest_grid_line(z.re, padded.re_min - shift, cell) < 1e-6
                || nearest_grid_line(z.im, padded.im_min - shift, cell) < 1e-6
        });
        if !near_edge {
            settled = true;
            break 'attempt;
        }
    }
    if !settled {
        return Err(Error::ScanFailure(
            "zeros remained within 1e-6 of cell edges after re-dissection".into(),
        ));
    }

    // Snap onto the real axis, drop pad-region finds, merge duplicates.
    for r in &mut raw {
        if r.lambda0.im.abs() <= REAL_SNAP {
            r.lambda0.im = 0.0;
        }
    }
    raw.retain(|r| rect.contains(r.lambda0, 1e-10));
    raw.sort_by(|a, b| {
        a.band
            .cmp(&b.band)
            .then(a.lambda0.im.total_cmp(&b.lambda0.im))
            .then(a.lambda0.re.total_cmp(&b.lambda0.re))
    });
    raw.dedup_by(|b, a| {
        if a.band == b.band && (a.lambda0 - b.lambda0).norm() <= MERGE_TOL {
            a.order = a.order.max(b.order);
            true
        } else {
            false
        }
    });

    // Conjugation closure: the upper-half zero is canonical, and its
    // mirror (when inside the rectangle) is its exact conjugate.
    let mut out = raw.clone();
    for r in &raw {
        if r.lambda0.im > REAL_SNAP {
            let mirror = r.lambda0.conj();
            if rect.contains(mirror, 1e-10) {
                match out.iter_mut().find(|s| {
                    s.band == r.band
                        && s.lambda0.im < 0.0
                        && (s.lambda0 - mirror).norm() <= MERGE_TOL
                }) {
                    Some(partner) => {
                        partner.lambda0 = mirror;
                        partner.order = r.order;
                        partner.newton_residual = r.newton_residual;
                    }
                    None => out.push(Resonance {
                        lambda0: mirror,
                        ..r.clone()
                    }),
                }
            }
        } else if r.lambda0.im < -REAL_SNAP {
            let mirror = r.lambda0.conj();
            if rect.contains(mirror, 1e-10)
                && !raw
                    .iter()
                    .any(|s| s.band == r.band && (s.lambda0 - mirror).norm() <= MERGE_TOL)
            {
                out.push(Resonance {
                    lambda0: mirror,
                    ..r.clone()
                });
            }
        }
    }
    out.sort_by(|a, b| {
        a.lambda0
            .im
            .total_cmp(&b.lambda0.im)
            .then(a.lambda0.re.total_cmp(&b.lambda0.re))
            .then(a.band.cmp(&b.band))
    });
    Ok(out)
}

fn dissect(padded: &Rect, cell: f64, shift: f64) -> Vec<Rect> {
    let mut cells = Vec::new();
    let re0 = padded.re_min - shift;
    let im0 = padded.im_min - shift;
    let n_re = ((padded.re_max - re0) / cell).ceil() as usize;
    let n_im = ((padded.im_max - im0) / cell).ceil() as usize;
    for j in 0..n_im {
        for i in 0..n_re {
            let r = Rect {
                re_min: (re0 + i as f64 * cell).max(padded.re_min),
                re_max: (re0 + (i + 1) as f64 * cell).min(padded.re_max),
                im_min: (im0 + j as f64 * cell).max(padded.im_min),
                im_max: (im0 + (j + 1) as f64 * cell).min(padded.im_max),
            };
            if r.width() > 1e-12 && r.height() > 1e-12 {
                cells.push(r);
            }
        }
    }
    cells
}

fn nearest_grid_line(x: f64, origin: f64, cell: f64) -> f64 {
    let t = (x - origin) / cell;
    (t - t.round()).abs() * cell
}

/// Checks that `res` is a simple zero of exactly one supplied band and
/// returns that band's expansion. Other bands must stay bounded away
/// from zero at `λ0`, else the ratio formula mixes poles and the
/// contour route must be used instead.
fn simple_zero_expansion<'a>(
    expansions: &'a [CycleExpansion],
    res: &Resonance,
) -> Result<&'a CycleExpansion> {
    if res.order != 1 {
        return Err(Error::ResidueUnavailable(format!(
            "zero at {} has order {}; use contour coefficients",
            res.lambda0, res.order
        )));
    }
    let own = expansions
        .iter()
        .find(|e| e.band() == res.band)
        .ok_or_else(|| {
            Error::InvalidParameter(format!("no band-{} expansion supplied", res.band))
        })?;
    for e in expansions {
        if e.band() == res.band {
            continue;
        }
        let v = eval(e, res.lambda0);
        let dv = eval_d(e, res.lambda0);
        let distance = if dv.norm() > 0.0 {
            v.norm() / dv.norm()
        } else {
            v.norm()
        };
        if distance < 1e-6 {
            return Err(Error::ResidueUnavailable(format!(
                "band {} also vanishes within 1e-6 of {}",
                e.band(),
                res.lambda0
            )));
        }
    }
    Ok(own)
}

/// Residue of the weighted sum at a simple band zero, by the analytic
/// ratio formula. The band-`k0` expansion must carry the weights of the
/// desired `f`.
pub fn residue(expansions: &[CycleExpansion], res: &Resonance) -> Result<Complex64> {
    let own = simple_zero_expansion(expansions, res)?;
    let db = own.zeta_inv(res.lambda0, EvalMode::DBeta)?;
    let dl = own.zeta_inv(res.lambda0, EvalMode::DLambda)?;
    if dl.norm() == 0.0 {
        return Err(Error::ResidueUnavailable(format!(
            "λ-derivative vanishes at {}; zero is not simple",
            res.lambda0
        )));
    }
    Ok(-(res.band as f64) * db / dl)
}

/// Weight-independent residue factorization at a simple band zero:
/// coefficients `c_p` such that `Res Z_f = −k0 (Σ_p A_p c_p)/D` for any
/// weight vector aligned with the expansion's primes. Weights need not
/// be attached.
pub fn residue_coefficients(
    expansions: &[CycleExpansion],
    res: &Resonance,
) -> Result<ResidueCoefficients> {
    let own = simple_zero_expansion(expansions, res)?;
    let dl = own.zeta_inv(res.lambda0, EvalMode::DLambda)?;
    if dl.norm() == 0.0 {
        return Err(Error::ResidueUnavailable(format!(
            "λ-derivative vanishes at {}; zero is not simple",
            res.lambda0
        )));
    }
    Ok(ResidueCoefficients {
        band: res.band,
        lambda0: res.lambda0,
        coefficients: own.per_prime_coefficients(res.lambda0),
        denominator: dl,
    })
}

/// Default contour radius around `λ0`: 0.1, shrunk to half the distance
/// to the nearest other listed zero.
pub fn default_contour_radius(resonances: &[Resonance], lambda0: Complex64) -> f64 {
    let mut radius: f64 = 0.1;
    for r in resonances {
        let d = (r.lambda0 - lambda0).norm();
        if d > MERGE_TOL {
            radius = radius.min(0.5 * d);
        }
    }
    radius
}

/// Laurent coefficient `Res_{λ=λ0}[Z_f(λ)(λ−λ0)^{k_ord}]` by
/// trapezoidal quadrature on the circle of radius `radius` around
/// `λ0`, starting from `nodes` points and doubling until two successive
/// results agree; exponentially convergent for the analytic integrand.
///
/// The expansions must cover bands `1..=k_max` with weights attached
/// (they feed [`weighted_zeta`]). The circle is verified to enclose
/// `λ0`'s zero and nothing else: each band's winding is measured on the
/// circle and the enclosed-zero centroid must coincide with `λ0`.
pub fn laurent_coefficient(
    expansions: &[CycleExpansion],
    lambda0: Complex64,
    k_ord: usize,
    radius: f64,
    nodes: usize,
) -> Result<Complex64> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "contour radius {radius} must be positive"
        )));
    }
    if nodes < 32 {
        return Err(Error::InvalidParameter(format!(
            "at least 32 contour nodes required, got {nodes}"
        )));
    }

    contour_is_isolated(expansions, lambda0, radius)?;

    let mut n = nodes;
    let mut previous: Option<Complex64> = None;
    loop {
        let (coeff, scale) = contour_sum(expansions, lambda0, k_ord, radius, n)?;
        if let Some(prev) = previous {
            let change = (coeff - prev).norm();
            if change <= 1e-8 * scale.max(coeff.norm()).max(1e-300) {
                return Ok(coeff);
            }
            if n >= 4096 {
                return Err(Error::UnreliableContour { change });
            }
        }
        previous = Some(coeff);
        n *= 2;
    }
}

/// One trapezoidal pass: returns the coefficient estimate and a scale
/// (integrand magnitude × radius power) for the convergence test.
fn contour_sum(
    expansions: &[CycleExpansion],
    lambda0: Complex64,
    k_ord: usize,
    radius: f64,
    n: usize,
) -> Result<(Complex64, f64)> {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut mag = 0.0f64;
    for j in 0..n {
        let theta = TAU * j as f64 / n as f64;
        let offset = Complex64::from_polar(radius, theta);
        let z = weighted_zeta(expansions, lambda0 + offset)?;
        acc += z.value * offset.powu(k_ord as u32 + 1);
        mag = mag.max(z.value.norm());
    }
    let coeff = acc / n as f64;
    Ok((coeff, mag * radius.powi(k_ord as i32 + 1)))
}

/// Verifies the circle encloses exactly the zeros at `λ0`: every band's
/// winding-weighted centroid of enclosed zeros must sit at `λ0` itself,
/// and bands with no zero at `λ0` must not wind at all.
fn contour_is_isolated(
    expansions: &[CycleExpansion],
    lambda0: Complex64,
    radius: f64,
) -> Result<()> {
    let n = 512;
    for exp in expansions {
        let mut winding = 0.0;
        let mut centroid = Complex64::new(0.0, 0.0);
        let mut prev_v: Option<Complex64> = None;
        let mut first_v = Complex64::new(0.0, 0.0);
        for j in 0..=n {
            let theta = TAU * (j % n) as f64 / n as f64;
            let z = lambda0 + Complex64::from_polar(radius, theta);
            let v = eval(exp, z);
            if v.norm() < 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "contour of radius {radius} at {lambda0} passes through a band-{} zero",
                    exp.band()
                )));
            }
            if let Some(pv) = prev_v {
                winding += (v / pv).arg();
            } else {
                first_v = v;
            }
            // Midpoint-rule centroid: ∮ λ·v'/v dλ / (2πi·w).
            let dv = eval_d(exp, z);
            if j < n {
                let dz = Complex64::from_polar(radius, theta) * Complex64::new(0.0, TAU / n as f64);
                centroid += z * (dv / v) * dz;
            }
            prev_v = Some(v);
        }
        let _ = first_v;
        let w = (winding / TAU).round();
        if (winding / TAU - w).abs() > 0.25 {
            return Err(Error::UnreliableContour {
                change: (winding / TAU - w).abs(),
            });
        }
        let w = w as i32;
        let own_distance = {
            let v = eval(exp, lambda0);
            let dv = eval_d(exp, lambda0);
            if dv.norm() > 0.0 {
                v.norm() / dv.norm()
            } else {
                v.norm()
            }
        };
        let owns_zero = own_distance < 1e-6;
        if !owns_zero && w != 0 {
            return Err(Error::InvalidParameter(format!(
                "contour of radius {radius} around {lambda0} encloses {w} unrelated band-{} zero(s)",
                exp.band()
            )));
        }
        if owns_zero {
            if w < 1 {
                return Err(Error::InvalidParameter(format!(
                    "contour of radius {radius} around {lambda0} misses its own band-{} zero",
                    exp.band()
                )));
            }
            let c = centroid / (Complex64::new(0.0, TAU) * w as f64);
            if (c - lambda0).norm() > 1e-6 * (1.0 + lambda0.norm()) {
                return Err(Error::InvalidParameter(format!(
                    "contour of radius {radius} around {lambda0} encloses an additional band-{} zero (centroid {c})",
                    exp.band()
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DiscSystem;
    use crate::orbits::{OrbitTable, WeightSpec};
    use crate::symbolic::Domain;
    use crate::zeta::build_expansion;
    use crate::zeta::build_weighted_expansions;
    use std::sync::OnceLock;

    fn table8() -> &'static OrbitTable {
        static TABLE: OnceLock<OrbitTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            let sys = DiscSystem::new(6.0, 1.0).unwrap();
            OrbitTable::build(&sys, Domain::Fundamental, 8).unwrap()
        })
    }

    fn band1() -> CycleExpansion {
        build_expansion(table8(), 1, 8).unwrap()
    }

    fn scan_band1(rect: Rect) -> Vec<Resonance> {
        scan(&[band1()], &rect, 0.5).unwrap()
    }

    #[test]
    fn real_zero_matches_axis_bisection_and_known_escape_rate() {
        let rect = Rect::new(-1.0, 0.5, 0.0, 5.0).unwrap();
        let found = scan_band1(rect);
        let real: Vec<_> = found.iter().filter(|r| r.lambda0.im == 0.0).collect();
        assert_eq!(real.len(), 1, "expected one real zero, got {found:?}");
        let scanned = real[0].lambda0.re;

        // Independent 1D oracle: bisection of the real-valued band-1
        // truncation on the real axis.
        let exp = band1();
        let g = |x: f64| eval(&exp, Complex64::new(x, 0.0)).re;
        let (mut lo, mut hi) = (-0.6, -0.2);
        assert!(g(lo) < 0.0 && g(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let bisected = 0.5 * (lo + hi);
        assert!(
            (scanned - bisected).abs() <= 1e-10,
            "scan {scanned} vs bisection {bisected}"
        );
        assert!((scanned + 0.4103384).abs() < 5e-6, "leading zero {scanned}");
        assert_eq!(real[0].order, 1);
    }

    #[test]
    fn empty_rectangle_far_right_finds_nothing() {
        let rect = Rect::new(10.0, 11.5, 0.0, 5.0).unwrap();
        assert!(scan_band1(rect).is_empty());
        assert_eq!(winding_number(&band1(), &rect).unwrap(), 0);
    }

    #[test]
    fn symmetric_rectangle_is_conjugation_closed_bitwise() {
        let rect = Rect::new(-1.0, 0.5, -5.0, 5.0).unwrap();
        let found = scan_band1(rect);
        assert!(!found.is_empty());
        for r in &found {
            if r.lambda0.im != 0.0 {
                let mirror = r.lambda0.conj();
                assert!(
                    found
                        .iter()
                        .any(|s| s.lambda0 == mirror && s.band == r.band),
                    "no exact conjugate partner for {}",
                    r.lambda0
                );
            }
        }
        // Sorted by (Im, Re, band).
        for w in found.windows(2) {
            assert!((w[0].lambda0.im, w[0].lambda0.re) <= (w[1].lambda0.im, w[1].lambda0.re));
        }
    }

    #[test]
    fn winding_total_equals_zero_count_with_multiplicity() {
        let rect = Rect::new(-1.0, 0.5, 0.1, 10.0).unwrap();
        let found = scan_band1(rect);
        let total: usize = found.iter().map(|r| r.order).sum();
        let w = winding_number(&band1(), &rect).unwrap();
        assert!(w > 0);
        assert_eq!(total, w as usize);
    }

    #[test]
    fn zero_quality_invariant_holds_for_every_reported_zero() {
        let rect = Rect::new(-1.0, 0.5, 0.0, 10.0).unwrap();
        let exp = band1();
        let mut strict_zone_seen = false;
        for r in scan_band1(rect) {
            let v = eval(&exp, r.lambda0);
            let dv = eval_d(&exp, r.lambda0);
            let floor = exp.evaluation_noise_floor(r.lambda0);
            assert!(
                v.norm() <= (1e-10 * dv.norm()).max(floor),
                "zero at {} has residual {:e} vs derivative {:e} (noise floor {:e})",
                r.lambda0,
                v.norm(),
                dv.norm(),
                floor
            );
            // Where cancellation noise stays below the strict bound the
            // strict bound itself must hold.
            if r.lambda0.re >= -0.6 {
                strict_zone_seen = true;
                assert!(
                    v.norm() <= 1e-10 * dv.norm(),
                    "well-conditioned zero at {} has residual {:e} vs derivative {:e}",
                    r.lambda0,
                    v.norm(),
                    dv.norm()
                );
            }
        }
        assert!(strict_zone_seen);
    }

    #[test]
    fn constant_weight_residue_is_the_band_index() {
        let exps = build_weighted_expansions(table8(), &WeightSpec::ConstantOne, 2, 8).unwrap();
        let rect = Rect::new(-1.0, 0.5, 0.0, 5.0).unwrap();
        for r in scan(&[exps[0].clone()], &rect, 0.5).unwrap() {
            let res = residue(&exps, &r).unwrap();
            assert!(
                (res - Complex64::new(1.0, 0.0)).norm() <= 1e-13,
                "residue {res} at {}",
                r.lambda0
            );
        }
    }

    #[test]
    fn contour_coefficient_matches_ratio_residue() {
        let exps = build_weighted_expansions(table8(), &WeightSpec::ConstantOne, 2, 8).unwrap();
        let rect = Rect::new(-1.0, 0.5, 0.0, 4.0).unwrap();
        let found = scan(&[exps[0].clone()], &rect, 0.5).unwrap();
        assert!(found.len() >= 2);
        for r in found.iter().take(2) {
            let rho = default_contour_radius(&found, r.lambda0);
            let by_ratio = residue(&exps, r).unwrap();
            let by_contour = laurent_coefficient(&exps, r.lambda0, 0, rho, 64).unwrap();
            assert!(
                (by_contour - by_ratio).norm() <= 1e-6 * by_ratio.norm(),
                "at {}: contour {by_contour} vs ratio {by_ratio}",
                r.lambda0
            );
        }
    }

    #[test]
    fn higher_coefficients_vanish_at_simple_zeros() {
        let exps = build_weighted_expansions(table8(), &WeightSpec::ConstantOne, 2, 8).unwrap();
        let rect = Rect::new(-1.0, 0.5, 0.0, 4.0).unwrap();
        let found = scan(&[exps[0].clone()], &rect, 0.5).unwrap();
        let r = &found[0];
        let rho = default_contour_radius(&found, r.lambda0);
        for k_ord in [1usize, 2] {
            let c = laurent_coefficient(&exps, r.lambda0, k_ord, rho, 64).unwrap();
            assert!(c.norm() <= 1e-8, "order-{k_ord} coefficient {c}");
        }
    }

    #[test]
    fn coefficient_factorization_reconstructs_residues() {
        let exps = build_weighted_expansions(table8(), &WeightSpec::ConstantOne, 2, 8).unwrap();
        let rect = Rect::new(-1.0, 0.5, 0.0, 4.0).unwrap();
        let found = scan(&[exps[0].clone()], &rect, 0.5).unwrap();
        let kit = residue_coefficients(&exps, &found[0]).unwrap();

        // Flow-period weights reproduce the unit residue algebraically.
        let periods = table8().weights(&WeightSpec::ConstantOne).unwrap();
        let via_kit = kit.residue_for(&periods).unwrap();
        assert!((via_kit - Complex64::new(1.0, 0.0)).norm() <= 1e-12);

        // A synthetic weight vector must match the β-derivative route.
        let synthetic: Vec<f64> = (0..periods.len())
            .map(|i| (0.7 + 0.31 * i as f64).cos())
            .collect();
        let mut own = exps[0].clone();
        own.set_weights(&synthetic).unwrap();
        let db = own.zeta_inv(found[0].lambda0, EvalMode::DBeta).unwrap();
        let dl = own.zeta_inv(found[0].lambda0, EvalMode::DLambda).unwrap();
        let direct = -db / dl;
        let via_kit = kit.residue_for(&synthetic).unwrap();
        assert!(
            (via_kit - direct).norm() <= 1e-12 * direct.norm().max(1.0),
            "kit {via_kit} vs direct {direct}"
        );

        // Real weights at the real zero give a real residue.
        assert!(via_kit.im.abs() <= 1e-10);
        // All-zero weights give residue zero.
        let zeros = vec![0.0; periods.len()];
        assert_eq!(kit.residue_for(&zeros).unwrap().norm(), 0.0);
    }

    #[test]
    fn zeros_are_stable_under_truncation_refinement() {
        let rect = Rect::new(-1.0, 0.5, 0.0, 4.0).unwrap();
        let scans: Vec<Vec<Resonance>> = [6usize, 7, 8]
            .iter()
            .map(|&n| scan(&[build_expansion(table8(), 1, n).unwrap()], &rect, 0.5).unwrap())
            .collect();
        assert_eq!(scans[0].len(), scans[2].len());
        assert_eq!(scans[1].len(), scans[2].len());
        for (i, deep) in scans[2].iter().enumerate() {
            let z = deep.lambda0;
            // Successive shifts are the honest error bars, and each
            // refinement must tighten them.
            let bar67 = (scans[1][i].lambda0 - scans[0][i].lambda0).norm();
            let bar78 = (z - scans[1][i].lambda0).norm();
            assert!(
                bar78 < bar67,
                "error bar grew at {z}: {bar67:e} then {bar78:e}"
            );
            // The leading chain is converged far beyond this; only the
            // second chain hugging the rectangle's left edge still
            // carries ~1e-3 bars at these truncations.
            if z.re >= -0.6 {
                assert!(bar78 < 1e-9, "zero at {z} moved by {bar78:e}");
            }
            if z.im == 0.0 {
                assert!(bar78 < 1e-6, "leading zero moved by {bar78:e}");
            }
        }
    }

    #[test]
    fn flow_derivative_weights_leave_no_residue() {
        use crate::geometry::{PhasePoint, Vec2};
        let g = WeightSpec::PhaseGaussian {
            center: PhasePoint::new(Vec2::new(0.3, -0.4), Vec2::new(0.0, 1.0)).unwrap(),
            width_pos: 0.25,
            width_dir: 0.9,
        };
        let xg = WeightSpec::FlowDerivative(Box::new(g));
        let exps = build_weighted_expansions(table8(), &xg, 1, 8).unwrap();
        let rect = Rect::new(-1.0, 0.5, 0.0, 4.0).unwrap();
        let found = scan(&exps, &rect, 0.5).unwrap();
        assert!(!found.is_empty());
        for r in &found {
            let res = residue(&exps, r).unwrap();
            assert!(
                res.norm() <= 1e-10,
                "flow-derivative residue {res} at {}",
                r.lambda0
            );
        }
    }

    #[test]
    fn residue_linearity_in_weights() {
        let exps = build_weighted_expansions(table8(), &WeightSpec::ConstantOne, 1, 8).unwrap();
        let rect = Rect::new(-1.0, 0.5, 0.0, 4.0).unwrap();
        let found = scan(&exps, &rect, 0.5).unwrap();
        let kit = residue_coefficients(&exps, &found[1]).unwrap();
        let n = exps[0].primes().len();
        let w1: Vec<f64> = (0..n).map(|i| (1.1 + i as f64).sin()).collect();
        let w2: Vec<f64> = (0..n).map(|i| (0.3 * i as f64).cos()).collect();
        let combo: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| 1.7 * a - 0.4 * b).collect();
        let lhs = kit.residue_for(&combo).unwrap();
        let rhs = 1.7 * kit.residue_for(&w1).unwrap() - 0.4 * kit.residue_for(&w2).unwrap();
        assert!((lhs - rhs).norm() <= 1e-12 * (lhs.norm() + rhs.norm() + 1.0));
    }

    #[test]
    fn oversized_contours_and_bad_requests_are_rejected() {
        let exps = build_weighted_expansions(table8(), &WeightSpec::ConstantOne, 2, 8).unwrap();
        let rect = Rect::new(-1.0, 0.5, 0.0, 4.0).unwrap();
        let found = scan(&[exps[0].clone()], &rect, 0.5).unwrap();
        let real = found.iter().find(|r| r.lambda0.im == 0.0).unwrap();
        // A radius reaching the next zero pair must be refused.
        let huge = laurent_coefficient(&exps, real.lambda0, 0, 1.6, 64);
        assert!(huge.is_err(), "oversized contour accepted: {huge:?}");

        assert!(scan(&[], &rect, 0.5).is_err());
        assert!(scan(&[band1()], &rect, 0.6).is_err());
        assert!(scan(&[band1()], &rect, 0.0).is_err());
        assert!(Rect::new(1.0, 1.0, 0.0, 1.0).is_err());
        assert!(laurent_coefficient(&exps, real.lambda0, 0, 0.1, 16).is_err());

        let fake_double = Resonance {
            order: 2,
            ..real.clone()
        };
        assert!(matches!(
            residue(&exps, &fake_double),
            Err(Error::ResidueUnavailable(_))
        ));
        let fake_band = Resonance {
            band: 7,
            ..real.clone()
        };
        assert!(residue(&exps, &fake_band).is_err());
    }
}

//! Realizes symbolic cycles as closed billiard trajectories and computes
//! their periods, transverse stability data, and orbit-averaged weights.
//!
//! Reflection points are found by minimizing the total chord length of the
//! closed polygon over the boundary angles; in a dispersing billiard every
//! realizable word gives a strict local minimum reachable by damped Newton
//! from the centers-polygon guess. Stability comes from composing per-flight
//! and per-bounce transverse Jacobians in (displacement, angle) coordinates.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, Matrix2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{
    next_reflection, to_birkhoff, DiscSystem, Flight, GroupElement, PhasePoint, SectionPoint, Vec2,
    ELEMENTS,
};
use crate::symbolic::{enumerate_prime_cycles, unfold, Domain, PrimeCycle};

/// A weight function on phase space, evaluated as an integral (or bounce
/// sum) over one primitive period of each orbit.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec {
    /// f = 1; the orbit weight is the primitive period, exactly.
    ConstantOne,
    /// Product of position and direction Gaussians centred on a phase point.
    PhaseGaussian {
        center: PhasePoint,
        width_pos: f64,
        width_dir: f64,
    },
    /// Derivative of the inner weight along the flow, v . grad_x(inner).
    /// Closed-orbit weights of such functions telescope to zero.
    FlowDerivative(Box<WeightSpec>),
    /// Smoothing kernel on the Birkhoff section: a periodic Gaussian of
    /// width sigma around (q0, p0), summed over the orbit's section bounces.
    SectionComb { q0: f64, p0: f64, sigma: f64 },
    /// Finite linear combination of weights; evaluated through a single
    /// quadrature of the combined smooth integrand.
    Linear(Vec<(f64, WeightSpec)>),
}

/// A solved periodic orbit.
///
/// `itinerary` and `reflection_angles` describe the unfolded full-domain
/// realization (length `m * n_p` for a fundamental cycle). The monodromy is
/// the transverse linearized return map over one primitive period: for
/// fundamental cycles the folded map, carrying the holonomy sign.
#[derive(Debug, Clone)]
pub struct PeriodicOrbit {
    pub cycle: PrimeCycle,
    /// Full-domain disc labels of the realized closed polygon.
    pub itinerary: Vec<u8>,
    /// Global polar angle (about the bounce disc's centre) of each bounce.
    pub reflection_angles: Vec<f64>,
    /// Primitive period (= total polygon length / m).
    pub t_p: f64,
    /// Transverse monodromy over one primitive period.
    pub monodromy: Matrix2<f64>,
    /// Determinant of the monodromy, accumulated factor by factor. Every
    /// flight, bounce and fold factor has unit determinant exactly in f64,
    /// so this stays exactly 1; the naive determinant of the composed matrix
    /// drifts by roundoff of order |Lambda|^2 * machine epsilon instead.
    pub monodromy_det: f64,
    /// Expanding eigenvalue of the monodromy, |lambda| > 1.
    pub lambda: f64,
    /// Sign of lambda.
    pub sigma: i8,
    /// Holonomy of the fundamental period (identity for full-domain cycles).
    pub h: GroupElement,
    /// Number of fundamental periods in the full-domain closure.
    pub m: usize,
    /// Group-symmetrized reference-disc section coordinates of the bounces
    /// of one primitive period, with outgoing directions.
    pub section_bounces: Vec<SectionPoint>,
    /// Max-norm of the length-functional gradient at the solution.
    pub newton_residual: f64,
}

impl PeriodicOrbit {
    /// Number of bounces in one primitive period.
    pub fn bounces_per_period(&self) -> usize {
        self.itinerary.len() / self.m
    }
}

/// Bounce positions for given boundary angles.
fn polygon(sys: &DiscSystem, itinerary: &[u8], angles: &[f64]) -> Vec<Vec2> {
    itinerary
        .iter()
        .zip(angles)
        .map(|(&d, &a)| sys.boundary_point(d as usize, a))
        .collect()
}

/// Total length of the closed polygon.
fn polygon_length(points: &[Vec2]) -> f64 {
    let n = points.len();
    (0..n)
        .map(|i| (points[(i + 1) % n] - points[i]).norm())
        .sum()
}

/// Gradient of the length functional with respect to the boundary angles.
///
/// d l_i / d theta_i = -<u_i, x_i'> and d l_{i-1} / d theta_i = <u_{i-1}, x_i'>
/// with u_i the unit chord from bounce i to bounce i+1 and x_i' = r t(theta_i).
pub fn length_gradient(sys: &DiscSystem, itinerary: &[u8], angles: &[f64]) -> DVector<f64> {
    let n = angles.len();
    let points = polygon(sys, itinerary, angles);
    let mut grad = DVector::zeros(n);
    for i in 0..n {
        let j = (i + 1) % n;
        let chord = points[j] - points[i];
        let u = chord.normalize();
        let ti = sys.r() * sys.tangent(angles[i]);
        let tj = sys.r() * sys.tangent(angles[j]);
        grad[i] -= u.dot(&ti);
        grad[j] += u.dot(&tj);
    }
    grad
}

/// Hessian of the length functional; cyclic tridiagonal (dense storage), with
/// both bands folding onto the same entries for two-bounce polygons.
pub fn length_hessian(sys: &DiscSystem, itinerary: &[u8], angles: &[f64]) -> DMatrix<f64> {
    let n = angles.len();
    let points = polygon(sys, itinerary, angles);
    let mut hess = DMatrix::zeros(n, n);
    let r = sys.r();
    for i in 0..n {
        let j = (i + 1) % n;
        let chord = points[j] - points[i];
        let l = chord.norm();
        let u = chord / l;
        let a = r * sys.tangent(angles[i]);
        let b = r * sys.tangent(angles[j]);
        let ei = r * sys.normal(angles[i]);
        let ej = r * sys.normal(angles[j]);
        // Second derivatives of l = |x_j - x_i| in the two endpoint angles.
        hess[(i, i)] += (a.norm_squared() - u.dot(&a).powi(2)) / l + u.dot(&ei);
        hess[(j, j)] += (b.norm_squared() - u.dot(&b).powi(2)) / l - u.dot(&ej);
        let cross = -(a.dot(&b) - u.dot(&a) * u.dot(&b)) / l;
        hess[(i, j)] += cross;
        hess[(j, i)] += cross;
    }
    hess
}

/// Initial guess: each bounce angle points along the interior bisector of
/// the directions to the previous and next discs of the itinerary.
fn centers_polygon_guess(sys: &DiscSystem, itinerary: &[u8]) -> Vec<f64> {
    let n = itinerary.len();
    (0..n)
        .map(|i| {
            let c = sys.center(itinerary[i] as usize);
            let prev = sys.center(itinerary[(i + n - 1) % n] as usize);
            let next = sys.center(itinerary[(i + 1) % n] as usize);
            let bisector = (prev - c).normalize() + (next - c).normalize();
            bisector.y.atan2(bisector.x)
        })
        .collect()
}

/// Damped Newton minimization of the length functional. Returns the
/// converged angles and the final gradient max-norm.
fn newton_solve(sys: &DiscSystem, word: &str, itinerary: &[u8]) -> Result<(Vec<f64>, f64)> {
    let mut angles = centers_polygon_guess(sys, itinerary);
    let tol = 1e-13 * sys.r();
    let mut residual = f64::INFINITY;
    for iteration in 0..100 {
        let grad = length_gradient(sys, itinerary, &angles);
        residual = grad.amax();
        if residual <= tol {
            return Ok((angles, residual));
        }
        let hess = length_hessian(sys, itinerary, &angles);
        let step = hess
            .clone()
            .lu()
            .solve(&(-&grad))
            .ok_or_else(|| Error::NewtonDivergence {
                word: word.to_string(),
                residual,
                iterations: iteration,
            })?;
        // Backtrack on the objective; dispersing geometry admits descent.
        let length_now = polygon_length(&polygon(sys, itinerary, &angles));
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = angles
                .iter()
                .enumerate()
                .map(|(i, &a)| a + alpha * step[i])
                .collect();
            let length_trial = polygon_length(&polygon(sys, itinerary, &trial));
            if length_trial <= length_now + 1e-14 * length_now.abs() {
                angles = trial;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(Error::NewtonDivergence {
                word: word.to_string(),
                residual,
                iterations: iteration,
            });
        }
    }
    let grad = length_gradient(sys, itinerary, &angles);
    residual = residual.min(grad.amax());
    if residual <= tol {
        Ok((angles, residual))
    } else {
        Err(Error::NewtonDivergence {
            word: word.to_string(),
            residual,
            iterations: 100,
        })
    }
}

/// Replays the polygon through the flow and confirms it is a genuine orbit:
/// every chord must reach the next itinerary disc unobstructed.
fn validate_replay(sys: &DiscSystem, word: &str, itinerary: &[u8], points: &[Vec2]) -> Result<()> {
    let n = points.len();
    let mut state = PhasePoint {
        position: points[0],
        direction: (points[1 % n] - points[0]).normalize(),
    };
    let mut replayed_length = 0.0;
    for segment in 0..n {
        let target = (segment + 1) % n;
        let expected_disc = itinerary[target] as usize;
        match next_reflection(sys, &state)? {
            Flight::Hit {
                disc,
                flight_length,
                point,
            } => {
                if disc != expected_disc {
                    return Err(Error::ShadowedOrbit {
                        word: word.to_string(),
                        segment,
                        blocker: disc,
                    });
                }
                let drift = (point.position - points[target]).norm();
                if drift > 1e-10 * sys.d().max(1.0) {
                    return Err(Error::ShadowedOrbit {
                        word: word.to_string(),
                        segment,
                        blocker: disc,
                    });
                }
                replayed_length += flight_length;
                // Re-anchor the replayed direction on the exact polygon so
                // roundoff does not accumulate over long words.
                let next = (segment + 2) % n;
                state = PhasePoint {
                    position: point.position,
                    direction: (points[next] - points[target]).normalize(),
                };
            }
            Flight::Escape => {
                return Err(Error::ShadowedOrbit {
                    word: word.to_string(),
                    segment,
                    blocker: expected_disc,
                });
            }
        }
    }
    let total = polygon_length(points);
    if (replayed_length - total).abs() > 1e-10 * total {
        return Err(Error::ShadowedOrbit {
            word: word.to_string(),
            segment: 0,
            blocker: itinerary[0] as usize,
        });
    }
    Ok(())
}

/// Transverse monodromy over the first `n_period` bounces of the polygon,
/// in (displacement, angle) coordinates: flight [[1, L], [0, 1]] followed at
/// each bounce by the dispersing mirror -[[1, 0], [2/(r cos phi), 1]].
/// `negate` multiplies in the holonomy sign for folded fundamental periods.
fn transverse_monodromy(
    sys: &DiscSystem,
    itinerary: &[u8],
    points: &[Vec2],
    n_period: usize,
    negate: bool,
) -> (Matrix2<f64>, f64) {
    let n = points.len();
    let mut m = Matrix2::identity();
    let mut det = 1.0f64;
    for i in 0..n_period {
        let j = (i + 1) % n;
        let chord = points[j] - points[i];
        let l = chord.norm();
        let u = chord / l;
        let normal = (points[j] - sys.center(itinerary[j] as usize)).normalize();
        // Incidence angle of the incoming chord against the outward normal.
        let cos_phi = u.dot(&normal).abs();
        let flight = Matrix2::new(1.0, l, 0.0, 1.0);
        let bounce = -Matrix2::new(1.0, 0.0, 2.0 / (sys.r() * cos_phi), 1.0);
        m = bounce * flight * m;
        // Both factor determinants evaluate exactly in f64 (1*1 - L*0).
        det *= flight.determinant() * bounce.determinant();
    }
    // The fold factor -I has determinant +1 and flips both transverse
    // coordinates, so the accumulated determinant is unchanged.
    if negate {
        (-m, det)
    } else {
        (m, det)
    }
}

/// Expanding eigenvalue and its sign from a unit-determinant monodromy.
fn expanding_eigenvalue(word: &str, m: &Matrix2<f64>) -> Result<(f64, i8)> {
    let tr = m.trace();
    if tr.abs() <= 2.0 {
        return Err(Error::NotHyperbolic {
            word: word.to_string(),
            lambda_abs: tr.abs() / 2.0,
        });
    }
    let magnitude = (tr.abs() + (tr * tr - 4.0).sqrt()) / 2.0;
    if magnitude <= 1.0 + 1e-6 {
        return Err(Error::NotHyperbolic {
            word: word.to_string(),
            lambda_abs: magnitude,
        });
    }
    let sigma: i8 = if tr >= 0.0 { 1 } else { -1 };
    Ok((sigma as f64 * magnitude, sigma))
}

/// Group-symmetrized section coordinates of the first `n_period` bounces:
/// each bounce, with its outgoing direction, is pushed to the reference disc
/// by both group elements that map its disc there.
fn section_images(
    sys: &DiscSystem,
    itinerary: &[u8],
    points: &[Vec2],
    n_period: usize,
) -> Result<Vec<SectionPoint>> {
    let n = points.len();
    let mut out = Vec::with_capacity(2 * n_period);
    for i in 0..n_period {
        let j = (i + 1) % n;
        let outgoing = (points[j] - points[i]).normalize();
        let phase = PhasePoint {
            position: points[i],
            direction: outgoing,
        };
        for &g in &ELEMENTS {
            if g.apply_disc(itinerary[i] as usize) == sys.reference_disc() {
                out.push(to_birkhoff(sys, &g.act_phase(&phase))?);
            }
        }
    }
    Ok(out)
}

/// Solves a symbolic cycle into a periodic orbit.
///
/// Fundamental cycles are unfolded to their full-domain closure first; the
/// polygon is refined by damped Newton from the centers-polygon guess and
/// validated by replaying it through the flow, so shadowed words surface as
/// errors rather than spurious orbits.
pub fn find_orbit(sys: &DiscSystem, cycle: &PrimeCycle) -> Result<PeriodicOrbit> {
    let word = cycle.word();
    let (itinerary, h, m) = match cycle.domain() {
        Domain::Full => (cycle.symbols().to_vec(), GroupElement::E, 1),
        Domain::Fundamental => {
            let u = unfold(cycle)?;
            (u.full_closure(), u.h, u.m)
        }
    };
    let (angles, newton_residual) = newton_solve(sys, &word, &itinerary)?;
    let points = polygon(sys, &itinerary, &angles);
    validate_replay(sys, &word, &itinerary, &points)?;
    let n_period = itinerary.len() / m;
    let t_p = polygon_length(&points) / m as f64;
    let negate = h.is_reflection();
    let (monodromy, monodromy_det) =
        transverse_monodromy(sys, &itinerary, &points, n_period, negate);
    let (lambda, sigma) = expanding_eigenvalue(&word, &monodromy)?;
    let section_bounces = section_images(sys, &itinerary, &points, n_period)?;
    Ok(PeriodicOrbit {
        cycle: cycle.clone(),
        itinerary,
        reflection_angles: angles,
        t_p,
        monodromy,
        monodromy_det,
        lambda,
        sigma,
        h,
        m,
        section_bounces,
        newton_residual,
    })
}

/// Recomputes the monodromy, expanding eigenvalue and sign of a solved orbit.
pub fn monodromy_of(sys: &DiscSystem, orbit: &PeriodicOrbit) -> Result<(Matrix2<f64>, f64, i8)> {
    let points = polygon(sys, &orbit.itinerary, &orbit.reflection_angles);
    let n_period = orbit.itinerary.len() / orbit.m;
    let (m, _) = transverse_monodromy(
        sys,
        &orbit.itinerary,
        &points,
        n_period,
        orbit.h.is_reflection(),
    );
    let (lambda, sigma) = expanding_eigenvalue(&orbit.cycle.word(), &m)?;
    Ok((m, lambda, sigma))
}

/// Smooth phase-space kernel: a Gaussian differentiated `order` times along
/// the flow. Order 0 is the Gaussian itself.
#[derive(Clone, Copy)]
struct GaussKernel {
    center: PhasePoint,
    width_pos: f64,
    width_dir: f64,
    order: usize,
}

impl GaussKernel {
    fn value(&self, x: &Vec2, v: &Vec2) -> f64 {
        let dx = x - self.center.position;
        let dv = v - self.center.direction;
        let g = (-dx.norm_squared() / (2.0 * self.width_pos * self.width_pos)).exp()
            * (-dv.norm_squared() / (2.0 * self.width_dir * self.width_dir)).exp();
        let w2 = self.width_pos * self.width_pos;
        match self.order {
            0 => g,
            // v . grad_x g = -(v . dx)/w^2 g. The direction factor is
            // constant along a straight flight.
            1 => -(v.dot(&dx) / w2) * g,
            // Second flow derivative: ((v.dx)^2/w^2 - |v|^2)/w^2 g.
            2 => ((v.dot(&dx).powi(2) / w2 - v.norm_squared()) / w2) * g,
            _ => unreachable!("derivative depth limited during flattening"),
        }
    }
}

/// One additive piece of a flattened weight.
enum WeightTerm {
    Smooth(f64, GaussKernel),
    Constant(f64),
    Comb {
        scale: f64,
        q0: f64,
        p0: f64,
        sigma: f64,
    },
}

/// Flattens a WeightSpec into additive terms, resolving FlowDerivative
/// nesting into kernel derivative orders (depth at most 2 is analytic here).
fn flatten_weight(
    sys: &DiscSystem,
    f: &WeightSpec,
    scale: f64,
    depth: usize,
    out: &mut Vec<WeightTerm>,
) -> Result<()> {
    match f {
        WeightSpec::ConstantOne => {
            if depth > 0 {
                // The flow derivative of a constant vanishes identically.
                return Ok(());
            }
            out.push(WeightTerm::Constant(scale));
            Ok(())
        }
        WeightSpec::PhaseGaussian {
            center,
            width_pos,
            width_dir,
        } => {
            if !(*width_pos > 0.0) || !(*width_dir > 0.0) {
                return Err(Error::InadmissibleWeight(format!(
                    "Gaussian widths must be positive, got ({width_pos}, {width_dir})"
                )));
            }
            if depth > 2 {
                return Err(Error::InadmissibleWeight(
                    "flow-derivative nesting deeper than 2 is not supported analytically".into(),
                ));
            }
            if depth > 0 {
                // Telescoping exactness needs the kernel support clear of
                // every disc boundary (3-width ball).
                for disc in 0..3 {
                    let gap = ((center.position - sys.center(disc)).norm() - sys.r()).abs();
                    if gap <= 3.0 * width_pos {
                        return Err(Error::InadmissibleWeight(format!(
                            "flow-derivative Gaussian support touches disc {disc}: \
                             boundary gap {gap:.3e} <= 3 width_pos = {:.3e}",
                            3.0 * width_pos
                        )));
                    }
                }
            }
            out.push(WeightTerm::Smooth(
                scale,
                GaussKernel {
                    center: *center,
                    width_pos: *width_pos,
                    width_dir: *width_dir,
                    order: depth,
                },
            ));
            Ok(())
        }
        WeightSpec::FlowDerivative(inner) => flatten_weight(sys, inner, scale, depth + 1, out),
        WeightSpec::SectionComb { q0, p0, sigma } => {
            if depth > 0 {
                return Err(Error::InadmissibleWeight(
                    "section combs are bounce sums, not smooth flow observables; \
                     their flow derivative is undefined"
                        .into(),
                ));
            }
            if !(*sigma > 0.0) {
                return Err(Error::InadmissibleWeight(format!(
                    "section comb width sigma = {sigma} must be positive"
                )));
            }
            out.push(WeightTerm::Comb {
                scale,
                q0: *q0,
                p0: *p0,
                sigma: *sigma,
            });
            Ok(())
        }
        WeightSpec::Linear(parts) => {
            for (coeff, part) in parts {
                flatten_weight(sys, part, scale * coeff, depth, out)?;
            }
            Ok(())
        }
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], computed once by Newton
/// iteration on the Legendre polynomial.
fn gauss_legendre_15() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| {
        let n = 15usize;
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                // Evaluate P_n and P_n' by the three-term recurrence.
                let (mut p0, mut p1) = (1.0f64, x);
                for j in 2..=n {
                    let jf = j as f64;
                    let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let (mut p0, mut p1) = (1.0f64, x);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            out.push((-x, w));
        }
        out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        out
    })
}

fn gl15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    gauss_legendre_15()
        .iter()
        .map(|&(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Adaptive bisection with a Gauss-Legendre panel; the error indicator is
/// the change under one subdivision.
fn adaptive_quadrature<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    let whole = gl15(f, a, b);
    let mid = 0.5 * (a + b);
    let left = gl15(f, a, mid);
    let right = gl15(f, mid, b);
    if (left + right - whole).abs() <= tol || depth >= 40 {
        left + right
    } else {
        adaptive_quadrature(f, a, mid, 0.5 * tol, depth + 1)
            + adaptive_quadrature(f, mid, b, 0.5 * tol, depth + 1)
    }
}

/// Periodic section Gaussian with three wrap images in q.
pub(crate) fn comb_value(q: f64, p: f64, q0: f64, p0: f64, sigma: f64) -> f64 {
    use std::f64::consts::TAU;
    let norm = 1.0 / (TAU * sigma * sigma);
    let dq = crate::geometry::wrap_angle(q - q0);
    let dp = p - p0;
    let mut total = 0.0;
    for image in [-1.0f64, 0.0, 1.0] {
        let dqi = dq + image * TAU;
        total += (-(dqi * dqi + dp * dp) / (2.0 * sigma * sigma)).exp();
    }
    norm * total
}

/// Integrates a weight over one primitive period of the orbit.
///
/// Fundamental-domain orbits represent the symmetry-reduced system, so
/// smooth weights are accumulated over all six group images (the pushforward
/// to the quotient) and integrated along one fundamental period of the
/// unfolded polygon. ConstantOne means the constant function 1 on the
/// reduced system itself and integrates to exactly T_p. Section combs are
/// already group-symmetrized through `section_bounces`.
pub fn orbit_weight(sys: &DiscSystem, orbit: &PeriodicOrbit, f: &WeightSpec) -> Result<f64> {
    let mut terms = Vec::new();
    flatten_weight(sys, f, 1.0, 0, &mut terms)?;

    let mut total = 0.0;
    let mut smooth: Vec<(f64, GaussKernel)> = Vec::new();
    for term in &terms {
        match term {
            WeightTerm::Constant(scale) => total += scale * orbit.t_p,
            WeightTerm::Comb {
                scale,
                q0,
                p0,
                sigma,
            } => {
                let mut acc = 0.0;
                for s in &orbit.section_bounces {
                    acc += comb_value(s.q, s.p, *q0, *p0, *sigma);
                }
                total += scale * acc;
            }
            WeightTerm::Smooth(scale, kernel) => smooth.push((*scale, *kernel)),
        }
    }

    if !smooth.is_empty() {
        let points = polygon(sys, &orbit.itinerary, &orbit.reflection_angles);
        let n = points.len();
        let n_period = orbit.bounces_per_period();
        let symmetrize = orbit.cycle.domain() == Domain::Fundamental;
        let tol = 1e-10 * orbit.t_p / (n_period as f64);
        for i in 0..n_period {
            let j = (i + 1) % n;
            let chord = points[j] - points[i];
            let l = chord.norm();
            let u = chord / l;
            let x0 = points[i];
            let integrand = |s: f64| {
                let x = x0 + s * u;
                let mut value = 0.0;
                for (scale, kernel) in &smooth {
                    if symmetrize {
                        for g in &ELEMENTS {
                            let gx = g.act_vector(&x);
                            let gv = g.act_vector(&u);
                            value += scale * kernel.value(&gx, &gv);
                        }
                    } else {
                        value += scale * kernel.value(&x, &u);
                    }
                }
                value
            };
            total += adaptive_quadrature(&integrand, 0.0, l, tol, 0);
        }
    }
    Ok(total)
}

/// A complete set of solved prime orbits up to a topological length.
#[derive(Debug, Clone)]
pub struct OrbitTable {
    sys: DiscSystem,
    domain: Domain,
    n_max: usize,
    orbits: Vec<PeriodicOrbit>,
}

impl OrbitTable {
    /// Solves every prime cycle of length <= n_max in parallel. Fails if any
    /// word is unrealizable; use [`OrbitTable::build_lenient`] to keep going.
    pub fn build(sys: &DiscSystem, domain: Domain, n_max: usize) -> Result<Self> {
        let cycles = enumerate_prime_cycles(domain, n_max)?;
        let solved: Result<Vec<PeriodicOrbit>> = cycles
            .par_iter()
            .map(|cycle| find_orbit(sys, cycle))
            .collect();
        Ok(OrbitTable {
            sys: sys.clone(),
            domain,
            n_max,
            orbits: solved?,
        })
    }

    /// Like [`OrbitTable::build`], but unrealizable words are returned as
    /// (word, error) pairs and the table keeps the solved remainder.
    pub fn build_lenient(
        sys: &DiscSystem,
        domain: Domain,
        n_max: usize,
    ) -> Result<(Self, Vec<(String, Error)>)> {
        let cycles = enumerate_prime_cycles(domain, n_max)?;
        let attempts: Vec<(String, Result<PeriodicOrbit>)> = cycles
            .par_iter()
            .map(|cycle| (cycle.word(), find_orbit(sys, cycle)))
            .collect();
        let mut orbits = Vec::new();
        let mut failures = Vec::new();
        for (word, attempt) in attempts {
            match attempt {
                Ok(orbit) => orbits.push(orbit),
                Err(e) => failures.push((word, e)),
            }
        }
        Ok((
            OrbitTable {
                sys: sys.clone(),
                domain,
                n_max,
                orbits,
            },
            failures,
        ))
    }

    pub fn system(&self) -> &DiscSystem {
        &self.sys
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Solved orbits, sorted by (length, word).
    pub fn orbits(&self) -> &[PeriodicOrbit] {
        &self.orbits
    }

    /// Primitive periods in table order.
    pub fn periods(&self) -> Vec<f64> {
        self.orbits.iter().map(|o| o.t_p).collect()
    }

    /// Per-orbit weights A_p for a weight spec, in table order.
    pub fn weights(&self, f: &WeightSpec) -> Result<Vec<f64>> {
        self.orbits
            .par_iter()
            .map(|orbit| orbit_weight(&self.sys, orbit, f))
            .collect()
    }
}

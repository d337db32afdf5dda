//! Disc layout, free flight and specular reflection, Birkhoff section
//! charts, and the C3v symmetry group of the three-disc scatterer.
//!
//! Three discs of radius `r` sit on the vertices of an equilateral triangle
//! with side `d = d_over_r * r`, centred on the origin. Disc `i` lies at
//! polar angle `90 + 120 i` degrees. All lengths are in units of `r`
//! (default 1) and the particle moves at unit speed, so lengths and times
//! coincide.

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};

/// Tolerance on the normal velocity component below which an impact is
/// treated as tangent grazing and rejected.
pub const GRAZING_TOL: f64 = 1e-12;

/// Planar vector alias used throughout the crate.
pub type Vec2 = Vector2<f64>;

fn sqrt3() -> f64 {
    3.0_f64.sqrt()
}

/// Wraps an angle to the periodic interval `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let w = a.rem_euclid(two_pi);
    if w > std::f64::consts::PI {
        w - two_pi
    } else {
        w
    }
}

/// The symmetric three-disc scatterer.
///
/// Immutable after construction; every operation on it is a pure function,
/// so values can be shared freely across worker threads.
#[derive(Debug, Clone)]
pub struct DiscSystem {
    d_over_r: f64,
    r: f64,
    reference_disc: usize,
    centers: [Vec2; 3],
}

impl DiscSystem {
    /// Builds the system with centre spacing `d = d_over_r * r` and the
    /// reference disc set to 0. Spacings `d_over_r <= 2` would make the
    /// disc closures overlap and are rejected.
    pub fn new(d_over_r: f64, r: f64) -> Result<Self> {
        if !(d_over_r > 2.0) || !d_over_r.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "d_over_r = {d_over_r}; disc closures must be disjoint (d_over_r > 2)"
            )));
        }
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "disc radius r = {r} must be positive"
            )));
        }
        let radius_to_center = d_over_r * r / sqrt3();
        let mut centers = [Vec2::zeros(); 3];
        for (i, c) in centers.iter_mut().enumerate() {
            let alpha = Self::center_angle(i);
            *c = Vec2::new(
                radius_to_center * alpha.cos(),
                radius_to_center * alpha.sin(),
            );
        }
        Ok(DiscSystem {
            d_over_r,
            r,
            reference_disc: 0,
            centers,
        })
    }

    /// Polar angle of centre `i`: disc 0 on top, then counterclockwise.
    fn center_angle(i: usize) -> f64 {
        std::f64::consts::FRAC_PI_2 + (i as f64) * 2.0 * std::f64::consts::FRAC_PI_3
    }

    /// Selects the disc whose boundary carries the Birkhoff section.
    pub fn with_reference_disc(mut self, disc: usize) -> Result<Self> {
        if disc > 2 {
            return Err(Error::InvalidParameter(format!(
                "reference disc index {disc} not in 0..=2"
            )));
        }
        self.reference_disc = disc;
        Ok(self)
    }

    pub fn d_over_r(&self) -> f64 {
        self.d_over_r
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Centre spacing `d`.
    pub fn d(&self) -> f64 {
        self.d_over_r * self.r
    }

    pub fn reference_disc(&self) -> usize {
        self.reference_disc
    }

    pub fn centers(&self) -> &[Vec2; 3] {
        &self.centers
    }

    pub fn center(&self, disc: usize) -> Vec2 {
        self.centers[disc]
    }

    /// The symbolic grammar is only complete for well-separated discs; for
    /// tight spacings the caller should surface this advisory.
    pub fn spacing_warning(&self) -> Option<String> {
        if self.d_over_r < 2.5 {
            Some(format!(
                "d_over_r = {} is below 2.5: some symbolic words may be shadowed and the \
                 binary fundamental-domain grammar incomplete",
                self.d_over_r
            ))
        } else {
            None
        }
    }

    /// Global polar angle (about centre `disc`) of the Birkhoff origin: the
    /// boundary point closest to the triangle centroid.
    pub fn origin_angle(&self, disc: usize) -> f64 {
        Self::center_angle(disc) + std::f64::consts::PI
    }

    /// Boundary point of `disc` at global polar angle `theta` about its centre.
    pub fn boundary_point(&self, disc: usize, theta: f64) -> Vec2 {
        self.center(disc) + self.r * Vec2::new(theta.cos(), theta.sin())
    }

    /// Outward unit normal at boundary angle `theta`.
    pub fn normal(&self, theta: f64) -> Vec2 {
        Vec2::new(theta.cos(), theta.sin())
    }

    /// Counterclockwise unit tangent at boundary angle `theta`; the Birkhoff
    /// momentum is the velocity projection onto this direction.
    pub fn tangent(&self, theta: f64) -> Vec2 {
        Vec2::new(-theta.sin(), theta.cos())
    }
}

/// A flow variable: a point in the plane together with a unit direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub position: Vec2,
    pub direction: Vec2,
}

impl PhasePoint {
    /// Validating constructor: the direction must be unit to 1e-14.
    pub fn new(position: Vec2, direction: Vec2) -> Result<Self> {
        let norm = direction.norm();
        if (norm - 1.0).abs() > 1e-14 {
            return Err(Error::InvalidDirection { norm });
        }
        Ok(PhasePoint {
            position,
            direction,
        })
    }
}

/// Result of following a ray to the next disc impact.
#[derive(Debug, Clone, Copy)]
pub enum Flight {
    /// The ray meets disc `disc` after `flight_length`; `point` carries the
    /// impact position and the specularly reflected direction.
    Hit {
        disc: usize,
        flight_length: f64,
        point: PhasePoint,
    },
    /// The ray misses all three discs.
    Escape,
}

/// Follows the ray from `x` to its next disc impact and reflects it.
///
/// Expects `x` outside all open discs (on a boundary the direction must not
/// point inward). Tangent impacts with `|<v',n>| < 1e-12` are reported as
/// [`Error::DegenerateHit`] rather than silently reflected: downstream
/// stability data would be ill-conditioned there.
pub fn next_reflection(sys: &DiscSystem, x: &PhasePoint) -> Result<Flight> {
    let v = x.direction;
    // Flights shorter than this are re-impacts on the departure disc caused
    // by roundoff; the shortest genuine flight is d - 2r >> 1e-9 r.
    let t_min = 1e-9 * sys.r();
    let mut best: Option<(usize, f64)> = None;
    for disc in 0..3 {
        let rel = x.position - sys.center(disc);
        let b = v.dot(&rel);
        let c = rel.norm_squared() - sys.r() * sys.r();
        let discriminant = b * b - c;
        if discriminant < 0.0 {
            continue;
        }
        let t_enter = -b - discriminant.sqrt();
        if t_enter > t_min && best.is_none_or(|(_, t)| t_enter < t) {
            best = Some((disc, t_enter));
        }
    }
    let Some((disc, t)) = best else {
        return Ok(Flight::Escape);
    };
    let position = x.position + t * v;
    let n = (position - sys.center(disc)) / sys.r();
    let vn = v.dot(&n);
    if vn.abs() < GRAZING_TOL {
        return Err(Error::DegenerateHit {
            disc,
            dot: vn.abs(),
        });
    }
    // Specular reflection reverses the normal component exactly and leaves
    // the tangential component untouched. Renormalizing afterwards (a 1 ulp
    // correction) keeps arbitrarily long bounce chains on the unit circle.
    let direction = (v - 2.0 * vn * n).normalize();
    Ok(Flight::Hit {
        disc,
        flight_length: t,
        point: PhasePoint {
            position,
            direction,
        },
    })
}

/// A point of the Birkhoff section: boundary arc coordinate and tangential
/// momentum on one disc.
///
/// `q` is the signed boundary angle from the disc's centroid-facing origin
/// point, counterclockwise positive, so the arc from the origin has length
/// `q * r`. `p` is the velocity projection onto the counterclockwise
/// tangent. `q` lives on the circle `[-pi, pi]` with its ends identified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionPoint {
    pub q: f64,
    pub p: f64,
    pub disc: usize,
}

impl SectionPoint {
    /// Validating constructor; wraps `q` into `(-pi, pi]`.
    pub fn new(q: f64, p: f64, disc: usize) -> Result<Self> {
        if disc > 2 {
            return Err(Error::InvalidParameter(format!(
                "disc index {disc} not in 0..=2"
            )));
        }
        if !(-1.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "section momentum p = {p} not in [-1, 1]"
            )));
        }
        Ok(SectionPoint {
            q: wrap_angle(q),
            p,
            disc,
        })
    }
}

/// Charts a boundary phase point into Birkhoff coordinates.
///
/// The disc is inferred as the one whose boundary carries the position; the
/// position must lie on it to `1e-10 r`. The direction may point inward or
/// outward; only its tangential projection enters `p`.
pub fn to_birkhoff(sys: &DiscSystem, x: &PhasePoint) -> Result<SectionPoint> {
    let mut best = (usize::MAX, f64::INFINITY);
    for disc in 0..3 {
        let dist = ((x.position - sys.center(disc)).norm() - sys.r()).abs();
        if dist < best.1 {
            best = (disc, dist);
        }
    }
    let (disc, dist) = best;
    if dist > 1e-10 * sys.r() {
        return Err(Error::OffBoundary { disc, dist });
    }
    let rel = x.position - sys.center(disc);
    let theta = rel.y.atan2(rel.x);
    let q = wrap_angle(theta - sys.origin_angle(disc));
    let p = x.direction.dot(&sys.tangent(theta)).clamp(-1.0, 1.0);
    Ok(SectionPoint { q, p, disc })
}

/// Inverse chart: the boundary point at arc coordinate `q` with the unique
/// outgoing direction whose tangential projection is `p`.
///
/// `|p| = 1` leaves no outgoing normal component and is rejected.
pub fn from_birkhoff(sys: &DiscSystem, s: &SectionPoint) -> Result<PhasePoint> {
    if s.disc > 2 {
        return Err(Error::InvalidParameter(format!(
            "disc index {} not in 0..=2",
            s.disc
        )));
    }
    if s.p.abs() >= 1.0 {
        return Err(Error::TangentSection { p: s.p });
    }
    let theta = sys.origin_angle(s.disc) + s.q;
    let position = sys.boundary_point(s.disc, theta);
    let direction = s.p * sys.tangent(theta) + (1.0 - s.p * s.p).sqrt() * sys.normal(theta);
    Ok(PhasePoint {
        position,
        direction,
    })
}

/// One of the six symmetries of the configuration: the identity, rotations
/// by plus and minus 120 degrees about the centroid, and the three mirrors
/// through a disc centre and the centroid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupElement {
    /// Identity.
    E,
    /// Rotation by +120 degrees (counterclockwise); disc labels advance i -> i+1.
    R1,
    /// Rotation by -120 degrees; disc labels retreat i -> i-1.
    R2,
    /// Mirror through the disc-0 axis (the 90 degree line); swaps discs 1, 2.
    S0,
    /// Mirror through the disc-1 axis (the 210 degree line); swaps discs 0, 2.
    S1,
    /// Mirror through the disc-2 axis (the 330 degree line); swaps discs 0, 1.
    S2,
}

/// All six elements in canonical order.
pub const ELEMENTS: [GroupElement; 6] = [
    GroupElement::E,
    GroupElement::R1,
    GroupElement::R2,
    GroupElement::S0,
    GroupElement::S1,
    GroupElement::S2,
];

impl GroupElement {
    /// Planar action as a 2x2 matrix.
    pub fn matrix(self) -> Matrix2<f64> {
        let h = 0.5;
        let s = sqrt3() / 2.0;
        match self {
            GroupElement::E => Matrix2::new(1.0, 0.0, 0.0, 1.0),
            GroupElement::R1 => Matrix2::new(-h, -s, s, -h),
            GroupElement::R2 => Matrix2::new(-h, s, -s, -h),
            // Mirror through the line at angle a: [[cos 2a, sin 2a], [sin 2a, -cos 2a]].
            GroupElement::S0 => Matrix2::new(-1.0, 0.0, 0.0, 1.0),
            GroupElement::S1 => Matrix2::new(h, s, s, -h),
            GroupElement::S2 => Matrix2::new(h, -s, -s, -h),
        }
    }

    /// Action on disc labels: disc `i` maps to `disc_perm()[i]`.
    pub fn disc_perm(self) -> [usize; 3] {
        match self {
            GroupElement::E => [0, 1, 2],
            GroupElement::R1 => [1, 2, 0],
            GroupElement::R2 => [2, 0, 1],
            GroupElement::S0 => [0, 2, 1],
            GroupElement::S1 => [2, 1, 0],
            GroupElement::S2 => [1, 0, 2],
        }
    }

    pub fn apply_disc(self, disc: usize) -> usize {
        self.disc_perm()[disc]
    }

    /// Composition `self . other`: `other` acts first. The label action is
    /// faithful, so the product is identified through its permutation.
    pub fn compose(self, other: GroupElement) -> GroupElement {
        let a = self.disc_perm();
        let b = other.disc_perm();
        let prod = [a[b[0]], a[b[1]], a[b[2]]];
        *ELEMENTS
            .iter()
            .find(|g| g.disc_perm() == prod)
            .expect("C3v is closed under composition")
    }

    pub fn inverse(self) -> GroupElement {
        *ELEMENTS
            .iter()
            .find(|g| self.compose(**g) == GroupElement::E)
            .expect("every C3v element has an inverse")
    }

    /// True for the three mirrors (planar determinant -1).
    pub fn is_reflection(self) -> bool {
        matches!(self, GroupElement::S0 | GroupElement::S1 | GroupElement::S2)
    }

    /// Planar determinant: +1 for rotations, -1 for mirrors.
    pub fn det(self) -> f64 {
        if self.is_reflection() {
            -1.0
        } else {
            1.0
        }
    }

    /// Order of the element in the group: 1, 2, or 3.
    pub fn order(self) -> usize {
        match self {
            GroupElement::E => 1,
            GroupElement::R1 | GroupElement::R2 => 3,
            _ => 2,
        }
    }

    pub fn act_vector(self, v: &Vec2) -> Vec2 {
        self.matrix() * v
    }

    /// Acts on both components of a phase point (the group fixes the centroid
    /// at the origin, so positions transform linearly).
    pub fn act_phase(self, x: &PhasePoint) -> PhasePoint {
        PhasePoint {
            position: self.act_vector(&x.position),
            direction: self.act_vector(&x.direction),
        }
    }
}

/// Fold elements per 60 degree sector, counted counterclockwise from the
/// canonical wedge `[30, 90]` degrees: the element mapping that sector onto
/// the canonical wedge.
const FOLD_BY_SECTOR: [GroupElement; 6] = [
    GroupElement::E,
    GroupElement::S0,
    GroupElement::R2,
    GroupElement::S2,
    GroupElement::R1,
    GroupElement::S1,
];

/// Folds a phase point into the fundamental wedge.
///
/// The canonical wedge is the closed sector of polar angles `[30, 90]`
/// degrees (bounded by the mirror axes through discs 0 and 1, containing
/// half of disc 0). Returns the folded point `y` and the group element `g`
/// with `g(y) = x`.
///
/// Tie-breaks: a position already in the closed canonical wedge (its walls
/// included) returns `(x, identity)`; positions exactly on other sector
/// walls fold with the counterclockwise neighbour sector's element as
/// selected by floating-point rounding of the sector index.
pub fn fold_to_fundamental(_sys: &DiscSystem, x: &PhasePoint) -> (PhasePoint, GroupElement) {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};
    let theta = x.position.y.atan2(x.position.x);
    let wedge_start = PI / 6.0;
    if (wedge_start..=FRAC_PI_2).contains(&theta) {
        return (*x, GroupElement::E);
    }
    let sector = ((theta - wedge_start).rem_euclid(2.0 * PI) / FRAC_PI_3).floor() as usize;
    let fold = FOLD_BY_SECTOR[sector.min(5)];
    (fold.act_phase(x), fold.inverse())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn sys6() -> DiscSystem {
        DiscSystem::new(6.0, 1.0).unwrap()
    }

    #[test]
    fn constructor_rejects_overlapping_and_degenerate_spacings() {
        assert!(DiscSystem::new(2.0, 1.0).is_err());
        assert!(DiscSystem::new(1.5, 1.0).is_err());
        assert!(DiscSystem::new(6.0, 0.0).is_err());
        assert!(DiscSystem::new(6.0, -1.0).is_err());
        assert!(DiscSystem::new(f64::NAN, 1.0).is_err());
        assert!(DiscSystem::new(2.2, 1.0)
            .unwrap()
            .spacing_warning()
            .is_some());
        assert!(sys6().spacing_warning().is_none());
    }

    #[test]
    fn centers_form_an_equilateral_triangle_of_side_d() {
        let sys = sys6();
        let d = sys.d();
        for i in 0..3 {
            let dist = (sys.center(i) - sys.center((i + 1) % 3)).norm();
            assert_relative_eq!(dist, d, max_relative = 1e-12);
        }
        let centroid: Vec2 = sys.centers().iter().sum::<Vec2>() / 3.0;
        assert_abs_diff_eq!(centroid.norm(), 0.0, epsilon = 1e-12 * d);
    }

    #[test]
    fn collinear_flight_between_discs_has_length_d_minus_2r() {
        let sys = sys6();
        let u = (sys.center(1) - sys.center(0)).normalize();
        let start = PhasePoint {
            position: sys.center(0) + sys.r() * u,
            direction: u,
        };
        match next_reflection(&sys, &start).unwrap() {
            Flight::Hit {
                disc,
                flight_length,
                point,
            } => {
                assert_eq!(disc, 1);
                assert_relative_eq!(flight_length, sys.d() - 2.0 * sys.r(), max_relative = 1e-12);
                // Normal incidence: the reflected ray retraces the segment and
                // the two-bounce trajectory is periodic.
                assert_abs_diff_eq!((point.direction + u).norm(), 0.0, epsilon = 1e-12);
                match next_reflection(&sys, &point).unwrap() {
                    Flight::Hit { disc, point, .. } => {
                        assert_eq!(disc, 0);
                        assert_abs_diff_eq!(
                            (point.position - start.position).norm(),
                            0.0,
                            epsilon = 1e-10
                        );
                        assert_abs_diff_eq!((point.direction - u).norm(), 0.0, epsilon = 1e-12);
                    }
                    Flight::Escape => panic!("return leg must hit disc 0"),
                }
            }
            Flight::Escape => panic!("collinear ray must hit disc 1"),
        }
    }

    #[test]
    fn radially_outward_ray_escapes() {
        let sys = sys6();
        let outward = sys.center(0).normalize();
        let start = PhasePoint {
            position: sys.center(0) + sys.r() * outward,
            direction: outward,
        };
        assert!(matches!(
            next_reflection(&sys, &start).unwrap(),
            Flight::Escape
        ));
    }

    #[test]
    fn reflection_preserves_speed_and_flips_normal_component() {
        let sys = sys6();
        let start = PhasePoint {
            position: Vec2::new(0.3, -0.2),
            direction: Vec2::new(0.0, 1.0),
        };
        if let Flight::Hit { disc, point, .. } = next_reflection(&sys, &start).unwrap() {
            assert_abs_diff_eq!(point.direction.norm(), 1.0, epsilon = 1e-14);
            let n = (point.position - sys.center(disc)).normalize();
            let t = Vec2::new(-n.y, n.x);
            assert_abs_diff_eq!(
                point.direction.dot(&n),
                -start.direction.dot(&n),
                epsilon = 1e-13
            );
            assert_abs_diff_eq!(
                point.direction.dot(&t),
                start.direction.dot(&t),
                epsilon = 1e-13
            );
        } else {
            panic!("ray from near the centroid must hit a disc");
        }
    }

    #[test]
    fn phase_point_constructor_enforces_unit_direction() {
        assert!(PhasePoint::new(Vec2::zeros(), Vec2::new(0.0, 1.0)).is_ok());
        assert!(PhasePoint::new(Vec2::zeros(), Vec2::new(0.0, 1.1)).is_err());
        assert!(PhasePoint::new(Vec2::zeros(), Vec2::zeros()).is_err());
    }

    #[test]
    fn birkhoff_origin_is_centroid_facing_with_normal_direction() {
        let sys = sys6();
        let x = from_birkhoff(
            &sys,
            &SectionPoint {
                q: 0.0,
                p: 0.0,
                disc: 0,
            },
        )
        .unwrap();
        // Origin point: boundary point of disc 0 nearest the centroid.
        let expect = sys.center(0) - sys.center(0).normalize() * sys.r();
        assert_abs_diff_eq!((x.position - expect).norm(), 0.0, epsilon = 1e-12);
        // Normal outgoing direction points at the centroid.
        let inward = -sys.center(0).normalize();
        assert_abs_diff_eq!((x.direction - inward).norm(), 0.0, epsilon = 1e-12);
        let s = to_birkhoff(&sys, &x).unwrap();
        assert_abs_diff_eq!(s.q, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.p, 0.0, epsilon = 1e-12);
        assert_eq!(s.disc, 0);
    }

    #[test]
    fn tangential_direction_has_unit_momentum() {
        let sys = sys6();
        let theta = sys.origin_angle(0);
        let x = PhasePoint {
            position: sys.boundary_point(0, theta),
            direction: sys.tangent(theta),
        };
        let s = to_birkhoff(&sys, &x).unwrap();
        assert_abs_diff_eq!(s.p, 1.0, epsilon = 1e-14);
        // The tangent direction itself is rejected by the inverse chart.
        assert!(from_birkhoff(
            &sys,
            &SectionPoint {
                q: 0.0,
                p: 1.0,
                disc: 0
            }
        )
        .is_err());
    }

    #[test]
    fn off_boundary_points_are_rejected_by_the_chart() {
        let sys = sys6();
        let x = PhasePoint {
            position: sys.center(0) + Vec2::new(0.0, -1.001),
            direction: Vec2::new(0.0, 1.0),
        };
        assert!(matches!(
            to_birkhoff(&sys, &x),
            Err(Error::OffBoundary { .. })
        ));
    }

    #[test]
    fn group_table_is_closed_with_correct_determinants_and_orders() {
        for &a in &ELEMENTS {
            let det = a.matrix().determinant();
            assert_relative_eq!(det, a.det(), max_relative = 1e-14);
            assert_eq!(a.compose(a.inverse()), GroupElement::E);
            // Matrix of a product equals the product of matrices.
            for &b in &ELEMENTS {
                let c = a.compose(b);
                let diff = (a.matrix() * b.matrix() - c.matrix()).norm();
                assert_abs_diff_eq!(diff, 0.0, epsilon = 1e-14);
            }
            // The label permutation mirrors the planar action on centres.
            let sys = sys6();
            for i in 0..3 {
                let moved = a.act_vector(&sys.center(i));
                let target = sys.center(a.apply_disc(i));
                assert_abs_diff_eq!((moved - target).norm(), 0.0, epsilon = 1e-12);
            }
        }
        assert_eq!(GroupElement::R1.order(), 3);
        assert_eq!(GroupElement::S0.order(), 2);
        assert_eq!(GroupElement::E.order(), 1);
        assert_eq!(GroupElement::R1.compose(GroupElement::R1), GroupElement::R2);
        assert_eq!(GroupElement::S2.compose(GroupElement::R1), GroupElement::S0);
    }

    #[test]
    fn folding_wedge_interior_is_identity_and_rotations_are_undone() {
        let sys = sys6();
        // Polar angle 60 degrees: inside the canonical wedge.
        let x = PhasePoint {
            position: Vec2::new(1.0, sqrt3()),
            direction: Vec2::new(0.0, 1.0),
        };
        let (y, g) = fold_to_fundamental(&sys, &x);
        assert_eq!(g, GroupElement::E);
        assert_eq!(y, x);

        let rotated = GroupElement::R1.act_phase(&x);
        let (y2, g2) = fold_to_fundamental(&sys, &rotated);
        assert_eq!(g2, GroupElement::R1);
        assert_abs_diff_eq!((y2.position - x.position).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((y2.direction - x.direction).norm(), 0.0, epsilon = 1e-12);
        let back = g2.act_phase(&y2);
        assert_abs_diff_eq!(
            (back.position - rotated.position).norm(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn canonical_wall_points_fold_to_themselves() {
        let sys = sys6();
        // On the 90 degree wall, direction off-wall.
        let x = PhasePoint {
            position: Vec2::new(0.0, 2.0),
            direction: Vec2::new(1.0, 0.0),
        };
        let (y, g) = fold_to_fundamental(&sys, &x);
        assert_eq!(g, GroupElement::E);
        assert_eq!(y, x);
    }

    #[test]
    fn wrap_angle_lands_in_half_open_interval() {
        use std::f64::consts::PI;
        assert_abs_diff_eq!(wrap_angle(3.0 * PI), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_angle(-PI), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_angle(0.1), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_angle(2.0 * PI + 0.1), 0.1, epsilon = 1e-12);
    }
}

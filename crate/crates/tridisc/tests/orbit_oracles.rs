//! Independent dynamical oracles for solved periodic orbits.
//!
//! The transverse stability matrices are validated against centered finite
//! differences of the actual flow (perturb, fly, project back), and the
//! symmetry-reduced description (symbols, holonomy, fold sign, period) is
//! validated against a from-scratch simulation of the billiard in the
//! reduced wedge with explicit mirror walls. Neither oracle shares code
//! with the per-bounce matrix composition being tested.

use nalgebra::Matrix2;
use tridisc::geometry::{
    fold_to_fundamental, next_reflection, DiscSystem, Flight, GroupElement, PhasePoint, Vec2,
    ELEMENTS,
};
use tridisc::orbits::find_orbit;
use tridisc::symbolic::{enumerate_prime_cycles, Domain, PrimeCycle};

fn sys6() -> DiscSystem {
    DiscSystem::new(6.0, 1.0).unwrap()
}

fn rot90(v: &Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}

fn rotate(v: &Vec2, angle: f64) -> Vec2 {
    let (s, c) = angle.sin_cos();
    Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

/// Flies a phase point through `n` reflections of the full three-disc flow.
fn fly(sys: &DiscSystem, start: &PhasePoint, n: usize) -> PhasePoint {
    let mut state = *start;
    for _ in 0..n {
        match next_reflection(sys, &state).unwrap() {
            Flight::Hit { point, .. } => state = point,
            Flight::Escape => panic!("periodic orbit escaped during oracle replay"),
        }
    }
    state
}

/// Transverse (displacement, angle) coordinates of `state` relative to the
/// reference phase point (x0, u0), measured on the plane through x0
/// perpendicular to u0 after sliding along the flow direction.
fn transverse_coords(x0: &Vec2, u0: &Vec2, state: &PhasePoint) -> (f64, f64) {
    let e_perp = rot90(u0);
    let t_star = -(state.position - x0).dot(u0) / state.direction.dot(u0);
    let on_plane = state.position + t_star * state.direction;
    let displacement = (on_plane - x0).dot(&e_perp);
    let angle = state.direction.dot(&e_perp).atan2(state.direction.dot(u0));
    (displacement, angle)
}

/// Finite-difference Jacobian of a transverse return map at step size eps.
fn fd_jacobian<F: Fn(f64, f64) -> (f64, f64)>(map: &F, eps: f64) -> Matrix2<f64> {
    let (dp_p, da_p) = map(eps, 0.0);
    let (dp_m, da_m) = map(-eps, 0.0);
    let (ap_p, aa_p) = map(0.0, eps);
    let (ap_m, aa_m) = map(0.0, -eps);
    Matrix2::new(
        (dp_p - dp_m) / (2.0 * eps),
        (ap_p - ap_m) / (2.0 * eps),
        (da_p - da_m) / (2.0 * eps),
        (aa_p - aa_m) / (2.0 * eps),
    )
}

/// Richardson-extrapolated centered differences: (4 J(eps/2) - J(eps)) / 3.
fn fd_jacobian_richardson<F: Fn(f64, f64) -> (f64, f64)>(map: &F, eps: f64) -> Matrix2<f64> {
    let coarse = fd_jacobian(map, eps);
    let fine = fd_jacobian(map, 0.5 * eps);
    (4.0 * fine - coarse) / 3.0
}

#[test]
fn finite_difference_monodromy_matches_composed_matrices_full_domain() {
    let sys = sys6();
    for word in [&[0u8, 1][..], &[0, 1, 2], &[0, 1, 0, 2]] {
        let cycle = PrimeCycle::new(Domain::Full, word).unwrap();
        let orbit = find_orbit(&sys, &cycle).unwrap();
        let n = orbit.itinerary.len();
        let x0 = sys.boundary_point(orbit.itinerary[0] as usize, orbit.reflection_angles[0]);
        let x1 = sys.boundary_point(
            orbit.itinerary[1 % n] as usize,
            orbit.reflection_angles[1 % n],
        );
        let u0 = (x1 - x0).normalize();
        let e_perp = rot90(&u0);

        let map = |d: f64, a: f64| {
            let start = PhasePoint {
                position: x0 + d * e_perp,
                direction: rotate(&u0, a),
            };
            let end = fly(&sys, &start, n);
            transverse_coords(&x0, &u0, &end)
        };
        let jac = fd_jacobian_richardson(&map, 1e-6);
        let reference = orbit.monodromy;
        let rel = (jac.trace() - reference.trace()).abs() / reference.trace().abs();
        assert!(
            rel < 1e-6,
            "FD trace {} vs composed trace {} (rel {rel:.2e}) for {word:?}",
            jac.trace(),
            reference.trace()
        );
        for idx in 0..4 {
            let (got, want) = (jac[idx], reference[idx]);
            assert!(
                (got - want).abs() <= 1e-4 * reference.trace().abs().max(1.0),
                "FD entry {idx}: {got} vs {want} for {word:?}"
            );
        }
    }
}

/// The canonical wedge is bounded by mirror half-lines at polar angles 90
/// degrees (reflection across the y-axis) and 30 degrees (reflection across
/// the line through the first neighbouring disc's axis).
struct WedgeWall {
    /// Unit vector along the wall half-line.
    along: Vec2,
    /// Unit normal of the wall line, pointing out of the wedge.
    outward: Vec2,
    mirror: GroupElement,
}

fn wedge_walls() -> [WedgeWall; 2] {
    let a90 = std::f64::consts::FRAC_PI_2;
    let a30 = std::f64::consts::FRAC_PI_6;
    [
        WedgeWall {
            along: Vec2::new(a90.cos(), a90.sin()),
            outward: Vec2::new(-1.0, 0.0),
            mirror: GroupElement::S0,
        },
        WedgeWall {
            along: Vec2::new(a30.cos(), a30.sin()),
            outward: Vec2::new(a30.sin(), -a30.cos()),
            mirror: GroupElement::S1,
        },
    ]
}

/// Chooses the in-wedge representative of a phase point sitting exactly on
/// a wedge wall with an outward-pointing direction (symmetric orbits bounce
/// on the mirror lines). Returns the folded state and the mirror applied,
/// if any.
fn push_inside(state: &PhasePoint) -> (PhasePoint, Option<GroupElement>) {
    for wall in wedge_walls() {
        if state.position.dot(&wall.outward).abs() <= 1e-9
            && state.direction.dot(&wall.outward) > 1e-12
        {
            let m = wall.mirror.matrix();
            return (
                PhasePoint {
                    position: m * state.position,
                    direction: m * state.direction,
                },
                Some(wall.mirror),
            );
        }
    }
    (*state, None)
}

/// One disc-bounce step of the reduced (folded) billiard: the ray is traced
/// inside the wedge, reflected across a mirror wall whenever it would leave,
/// and specularly reflected when it returns to the reference disc.
/// Returns the updated state, the number of wall crossings, the ordered
/// product of wall mirrors, and the flight length accumulated on this step.
fn reduced_step(sys: &DiscSystem, state: &PhasePoint) -> (PhasePoint, usize, GroupElement, f64) {
    let walls = wedge_walls();
    let c0 = sys.center(0);
    let r = sys.r();
    let mut pos = state.position;
    let mut dir = state.direction;
    let mut crossings = 0usize;
    let mut mirror_product = GroupElement::E;
    let mut flown = 0.0;
    for _ in 0..16 {
        // Candidate hit on the reference disc (entering root).
        let rel = pos - c0;
        let b = dir.dot(&rel);
        let c = rel.norm_squared() - r * r;
        let disc_t = {
            let disc = b * b - c;
            if disc > 0.0 {
                let t = -b - disc.sqrt();
                (t > 1e-9).then_some(t)
            } else {
                None
            }
        };
        // Candidate wall crossings.
        let mut nearest_wall: Option<(f64, usize)> = None;
        for (w, wall) in walls.iter().enumerate() {
            let denom = dir.dot(&wall.outward);
            if denom.abs() < 1e-14 {
                continue;
            }
            let t = -pos.dot(&wall.outward) / denom;
            if t > 1e-9
                && (pos + t * dir).dot(&wall.along) > 0.0
                && nearest_wall.is_none_or(|(best, _)| t < best)
            {
                nearest_wall = Some((t, w));
            }
        }
        // Disc wins ties: symmetric orbits bounce exactly on a mirror line,
        // where the disc hit and a wall crossing coincide. The outgoing
        // state is then folded back inside by `push_inside`, which counts
        // as this step's wall crossing.
        let disc_first = match (disc_t, nearest_wall) {
            (Some(td), Some((tw, _))) => td <= tw + 1e-9,
            (Some(_), None) => true,
            _ => false,
        };
        if disc_first {
            let td = disc_t.unwrap();
            let hit = pos + td * dir;
            let n = (hit - c0) / r;
            let reflected = (dir - 2.0 * dir.dot(&n) * n).normalize();
            let (state, pushed) = push_inside(&PhasePoint {
                position: hit,
                direction: reflected,
            });
            if let Some(mirror) = pushed {
                crossings += 1;
                mirror_product = mirror.compose(mirror_product);
            }
            return (state, crossings, mirror_product, flown + td);
        }
        match nearest_wall {
            Some((tw, w)) => {
                pos += tw * dir;
                flown += tw;
                let m = walls[w].mirror.matrix();
                pos = m * pos;
                dir = m * dir;
                crossings += 1;
                mirror_product = walls[w].mirror.compose(mirror_product);
            }
            None => panic!("reduced trajectory escaped the wedge"),
        }
    }
    panic!("reduced trajectory crossed too many walls in one step");
}

/// Starting state for the reduced simulation: the orbit's first bounce with
/// its outgoing direction, folded into the canonical wedge.
fn folded_start(sys: &DiscSystem, orbit: &tridisc::orbits::PeriodicOrbit) -> PhasePoint {
    let n = orbit.itinerary.len();
    let x0 = sys.boundary_point(orbit.itinerary[0] as usize, orbit.reflection_angles[0]);
    let x1 = sys.boundary_point(
        orbit.itinerary[1 % n] as usize,
        orbit.reflection_angles[1 % n],
    );
    let start = PhasePoint {
        position: x0,
        direction: (x1 - x0).normalize(),
    };
    push_inside(&fold_to_fundamental(sys, &start).0).0
}

#[test]
fn reduced_wedge_simulation_reproduces_holonomy_sign_closure_and_period() {
    let sys = sys6();
    for cycle in enumerate_prime_cycles(Domain::Fundamental, 4).unwrap() {
        let orbit = find_orbit(&sys, &cycle).unwrap();
        let n_p = cycle.len();
        let start = folded_start(&sys, &orbit);

        let mut state = start;
        let mut total_crossings = 0usize;
        let mut holonomy = GroupElement::E;
        let mut reduced_length = 0.0;
        for _ in 0..n_p {
            let (next, crossings, mirrors, flown) = reduced_step(&sys, &state);
            // Per-step counts reach 3+ when a chord passes near the centre,
            // and their parity is shifted whenever a bounce sits on the far
            // half of its disc; only the total parity per period is chart
            // independent.
            assert!(
                (1..=4).contains(&crossings),
                "reduced step of '{}' crossed {crossings} walls",
                cycle.word()
            );
            total_crossings += crossings;
            holonomy = mirrors.compose(holonomy);
            reduced_length += flown;
            state = next;
        }

        // Odd wall-crossing parity over one period is exactly a reflection
        // holonomy; this pins the fold sign used in the monodromy.
        assert_eq!(
            total_crossings % 2 == 1,
            orbit.h.is_reflection(),
            "fold parity disagrees for '{}'",
            cycle.word()
        );
        // The accumulated mirror product is conjugate to the holonomy, so
        // its order and parity must match.
        assert_eq!(
            holonomy.order(),
            orbit.h.order(),
            "order for '{}'",
            cycle.word()
        );
        assert_eq!(
            holonomy.is_reflection(),
            orbit.h.is_reflection(),
            "parity for '{}'",
            cycle.word()
        );
        assert_eq!(holonomy.order(), orbit.m, "m for '{}'", cycle.word());
        // The reduced trajectory closes after one fundamental period.
        assert!(
            (state.position - start.position).norm() < 1e-9
                && (state.direction - start.direction).norm() < 1e-9,
            "reduced orbit of '{}' did not close",
            cycle.word()
        );
        // Folding is isometric, so the reduced length is the period.
        assert!(
            (reduced_length - orbit.t_p).abs() < 1e-10 * orbit.t_p,
            "reduced length {} vs period {} for '{}'",
            reduced_length,
            orbit.t_p,
            cycle.word()
        );
    }
}

/// Symbols are decodable from the realized disc labels alone: symbol 0 at
/// step i means the trajectory returns to the disc it came from two bounces
/// earlier, symbol 1 means it moves on to the third disc. This rule is
/// independent of the group-chain construction that produced the labels.
#[test]
fn symbols_match_backscatter_decoding_of_disc_labels() {
    let sys = sys6();
    for cycle in enumerate_prime_cycles(Domain::Fundamental, 6).unwrap() {
        let orbit = find_orbit(&sys, &cycle).unwrap();
        let labels = &orbit.itinerary;
        let n = labels.len();
        let n_p = cycle.len();
        for i in 0..n {
            let expected = cycle.symbols()[i % n_p];
            let decoded = if labels[(i + 2) % n] == labels[i] {
                0u8
            } else {
                1u8
            };
            assert_eq!(
                decoded,
                expected,
                "backscatter decoding disagrees at step {i} of '{}' (labels {labels:?})",
                cycle.word()
            );
        }
    }
}

/// The deck element of one fundamental period: the group element carrying
/// bounce 0 of the closure onto bounce n_p.
fn deck_element(sys: &DiscSystem, orbit: &tridisc::orbits::PeriodicOrbit) -> GroupElement {
    let n = orbit.itinerary.len();
    let n_p = orbit.itinerary.len() / orbit.m;
    let x0 = sys.boundary_point(orbit.itinerary[0] as usize, orbit.reflection_angles[0]);
    let x1 = sys.boundary_point(
        orbit.itinerary[1 % n] as usize,
        orbit.reflection_angles[1 % n],
    );
    let u0 = (x1 - x0).normalize();
    let xa = sys.boundary_point(
        orbit.itinerary[n_p % n] as usize,
        orbit.reflection_angles[n_p % n],
    );
    let xb = sys.boundary_point(
        orbit.itinerary[(n_p + 1) % n] as usize,
        orbit.reflection_angles[(n_p + 1) % n],
    );
    let ua = (xb - xa).normalize();
    let mut matches: Vec<GroupElement> = ELEMENTS
        .iter()
        .copied()
        .filter(|g| {
            (g.act_vector(&x0) - xa).norm() < 1e-9 && (g.act_vector(&u0) - ua).norm() < 1e-9
        })
        .collect();
    assert_eq!(
        matches.len(),
        1,
        "deck element of '{}' not unique: {matches:?}",
        orbit.cycle.word()
    );
    matches.pop().unwrap()
}

/// Validates the folded (fundamental) monodromy, including its holonomy
/// sign, by finite differences of the deck-transformed full flow: fly one
/// fundamental period in the full domain, pull back by the deck element,
/// and project transversally. No wedge folding is involved, so this is an
/// independent check of the -I fold factor for reflection holonomies.
#[test]
fn finite_difference_monodromy_matches_folded_matrices_fundamental_domain() {
    let sys = sys6();
    for word in [&[0u8][..], &[1], &[0, 1], &[0, 0, 1], &[0, 1, 1]] {
        let cycle = PrimeCycle::new(Domain::Fundamental, word).unwrap();
        let orbit = find_orbit(&sys, &cycle).unwrap();
        let n = orbit.itinerary.len();
        let n_p = cycle.len();
        let x0 = sys.boundary_point(orbit.itinerary[0] as usize, orbit.reflection_angles[0]);
        let x1 = sys.boundary_point(
            orbit.itinerary[1 % n] as usize,
            orbit.reflection_angles[1 % n],
        );
        let u0 = (x1 - x0).normalize();
        let e_perp = rot90(&u0);
        let deck = deck_element(&sys, &orbit);
        assert_eq!(
            deck.is_reflection(),
            orbit.h.is_reflection(),
            "deck parity vs holonomy parity for {word:?}"
        );
        let deck_inv = deck.inverse();

        let map = |d: f64, a: f64| {
            let start = PhasePoint {
                position: x0 + d * e_perp,
                direction: rotate(&u0, a),
            };
            let end = fly(&sys, &start, n_p);
            let pulled = deck_inv.act_phase(&end);
            transverse_coords(&x0, &u0, &pulled)
        };
        let jac = fd_jacobian_richardson(&map, 1e-6);
        let want = orbit.monodromy.trace();
        let got = jac.trace();
        let rel = (got - want).abs() / want.abs();
        assert!(
            rel < 1e-5,
            "deck FD trace {got} vs folded composed trace {want} (rel {rel:.2e}) for {word:?}"
        );
        // Sign agreement is the point: it fixes sigma_p.
        assert_eq!(got.signum(), want.signum(), "trace sign for {word:?}");
    }
}

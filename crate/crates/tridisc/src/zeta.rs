//! Weighted dynamical zeta functions over periodic orbits.
//!
//! The central object is the weighted sum over closed orbits
//!
//! ```text
//! Z_f(λ) = Σ_γ e^{−λ T_γ} · A_p / |det(id − P_γ)| ,
//! ```
//!
//! where γ = (p, r) runs over repeats of prime cycles, `T_γ = r·T_p`,
//! `A_p` is the weight of the primitive cycle, and `P_γ` its transverse
//! monodromy. For a 2×2 area-preserving monodromy with eigenvalues
//! `Λ, 1/Λ` (`|Λ| > 1`) the determinant admits the expansion
//!
//! ```text
//! 1/|det(id − P_p^r)| = Σ_{k≥1} k · σ_p^{r(k+1)} · |Λ_p|^{−rk} ,
//! ```
//!
//! with `σ_p = sign Λ_p`, which regroups `Z_f` into bands:
//! `Z_f = Σ_k k·F_k` with `F_k = −∂_β log ζ_(k)^{-1}|_{β=0}` and
//!
//! ```text
//! 1/ζ_(k)(β, λ) = Π_p (1 − e^{β A_p} σ_p^{k+1} e^{−λ T_p} |Λ_p|^{−k}) .
//! ```
//!
//! [`build_expansion`] expands one such band product into its truncated
//! alternating sum over *pseudo-cycles* (sets of distinct primes with
//! bounded total topological length), [`CycleExpansion::zeta_inv`]
//! evaluates the truncation and its exact λ- and β-derivatives, and
//! [`weighted_zeta`] assembles `Σ_k k·(−∂_β ζ_(k)^{-1}/ζ_(k)^{-1})`.
//! [`weighted_zeta_direct`] instead sums the orbit series term by term
//! (prime by prime, repeat by repeat) and exists purely as a cross-check
//! oracle; its determinants can be evaluated exactly or truncated to the
//! same band order as an expansion so both routes share one truncation.
//!
//! All pseudo-cycle sums run in ascending order of total period with
//! compensated (Neumaier) accumulation: curvature terms cancel against
//! shorter pseudo-cycles almost exactly, and that cancellation is the
//! entire point of the expansion.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::orbits::{OrbitTable, WeightSpec};

/// Which quantity [`CycleExpansion::zeta_inv`] evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalMode {
    /// The truncated value of `1/ζ_(k)` at `β = 0`.
    Value,
    /// Its analytic λ-derivative (each pseudo-cycle picks up `−T_π`).
    DLambda,
    /// Its analytic β-derivative at `β = 0` (each pseudo-cycle picks up
    /// `A_π = Σ_{p∈π} A_p`); requires weights to be attached.
    DBeta,
}

/// How [`weighted_zeta_direct`] evaluates `1/|det(id − P_p^r)|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DetMode {
    /// The exact closed form `u/(1 − s·u)²` with `s = σ_p^r`,
    /// `u = |Λ_p|^{−r}`.
    Exact,
    /// The band sum `Σ_{k=1}^{K} k·s^{k+1}·u^k`, truncating the
    /// determinant at the same order as a `k_max = K` expansion so the
    /// two routes can be compared at full floating-point precision.
    Bands(usize),
}

/// Per-prime data carried by an expansion (read-only view).
#[derive(Clone, Debug)]
pub struct PrimeFactor {
    /// Canonical symbol word of the prime cycle.
    pub word: String,
    /// Primitive period `T_p`.
    pub period: f64,
    /// `ln |Λ_p|` of the expanding eigenvalue.
    pub ln_abs_lambda: f64,
    /// Sign `σ_p` of the expanding eigenvalue (`±1`).
    pub sigma: i8,
}

/// One pseudo-cycle term of the truncated product expansion.
#[derive(Clone, Debug)]
struct ExpansionTerm {
    /// Indices into the prime list, strictly ascending.
    members: Vec<u32>,
    /// Total period `T_π = Σ T_p`, summed in member order.
    t_total: f64,
    /// λ-independent coefficient `(−1)^m · Π σ_p^{k+1} · Π |Λ_p|^{−k}`.
    coeff: f64,
    /// Total attached weight `A_π = Σ A_p`, summed in member order;
    /// zero until weights are attached.
    a_total: f64,
}

/// A truncated pseudo-cycle expansion of one band factor `1/ζ_(k)`.
///
/// Stores every set of distinct prime cycles with total topological
/// length `≤ n_max`, each carrying its alternating sign, total period,
/// and per-band stability factor. Immutable after construction except
/// for weight attachment via [`CycleExpansion::set_weights`].
#[derive(Clone, Debug)]
pub struct CycleExpansion {
    band: usize,
    n_max: usize,
    primes: Vec<PrimeFactor>,
    terms: Vec<ExpansionTerm>,
    weights: Option<Vec<f64>>,
}

/// Result of a zeta evaluation: the partial sum together with an upper
/// bound on the truncated remainder (bands beyond `k_max` for
/// [`weighted_zeta`], repeats beyond `r_max` for the direct sum).
#[derive(Clone, Copy, Debug)]
pub struct ZetaValue {
    /// The evaluated partial sum.
    pub value: Complex64,
    /// Upper bound on the absolute value of the omitted remainder.
    pub tail: f64,
}

/// Neumaier compensated accumulator. Exactly antisymmetric: feeding the
/// negation of every addend in the same order yields the negated sum
/// bit-for-bit, which the β/λ derivative identity tests rely on.
#[derive(Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    correction: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.correction += (self.sum - t) + x;
        } else {
            self.correction += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.correction
    }
}

impl CycleExpansion {
    /// Band index `k ≥ 1` of the factor this expansion truncates.
    pub fn band(&self) -> usize {
        self.band
    }

    /// Maximal total topological length of the retained pseudo-cycles.
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// The prime cycles contributing to this expansion, in the order
    /// weights must be supplied.
    pub fn primes(&self) -> &[PrimeFactor] {
        &self.primes
    }

    /// Number of retained pseudo-cycle terms (the empty set is not
    /// stored; it contributes the leading constant 1).
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Whether per-prime weights are attached (required for
    /// [`EvalMode::DBeta`]).
    pub fn weights_attached(&self) -> bool {
        self.weights.is_some()
    }

    /// Attaches one weight `A_p` per prime, in the order of
    /// [`CycleExpansion::primes`]. Replaces any previous attachment.
    pub fn set_weights(&mut self, weights: &[f64]) -> Result<()> {
        if weights.len() != self.primes.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} weights (one per prime), got {}",
                self.primes.len(),
                weights.len()
            )));
        }
        for term in &mut self.terms {
            let mut a = 0.0;
            for &m in &term.members {
                a += weights[m as usize];
            }
            term.a_total = a;
        }
        self.weights = Some(weights.to_vec());
        Ok(())
    }

    /// Weights currently attached, if any.
    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Largest total flow period among the retained pseudo-cycles: the
    /// fastest oscillation rate of the truncation in Im λ.
    pub fn max_total_period(&self) -> f64 {
        // Terms are kept sorted by ascending total period.
        self.terms.last().map_or(1.0, |t| t.t_total)
    }

    /// Attainable absolute accuracy of [`CycleExpansion::zeta_inv`] at
    /// `λ`. Individual pseudo-cycle terms grow like `e^{−Re λ·T_π}`
    /// while the alternating sum cancels them, so each term's own
    /// rounding — about one ulp — bounds the achievable precision no
    /// matter how carefully the sum is accumulated.
    pub fn evaluation_noise_floor(&self, lambda: Complex64) -> f64 {
        let mut magnitude = Compensated::default();
        for term in &self.terms {
            magnitude.add(term.coeff.abs() * (-lambda.re * term.t_total).exp());
        }
        1e-15 * magnitude.value()
    }

    /// Per-prime pseudo-cycle sums `c_p = Σ_{π∋p} (−1)^{m_π} w_π(λ)`,
    /// where `w_π` is the unweighted pseudo-cycle term of this band.
    /// The β-derivative with weights `A` equals `Σ_p A_p·c_p`, so these
    /// factor residues into weight-independent pieces.
    pub fn per_prime_coefficients(&self, lambda: Complex64) -> Vec<Complex64> {
        let mut c = vec![Complex64::new(0.0, 0.0); self.primes.len()];
        for term in &self.terms {
            let base = term.coeff * (-lambda * term.t_total).exp();
            for &m in &term.members {
                c[m as usize] += base;
            }
        }
        c
    }

    /// Evaluates the truncated expansion or one of its exact analytic
    /// derivatives at `λ`. The alternating pseudo-cycle sum runs in
    /// ascending order of total period with compensated accumulation.
    pub fn zeta_inv(&self, lambda: Complex64, mode: EvalMode) -> Result<Complex64> {
        if mode == EvalMode::DBeta && self.weights.is_none() {
            return Err(Error::InvalidParameter(
                "β-derivative requested but no weights are attached to the expansion".into(),
            ));
        }
        let mut re = Compensated::default();
        let mut im = Compensated::default();
        if mode == EvalMode::Value {
            // The empty pseudo-cycle: constant 1, no λ- or β-dependence.
            re.add(1.0);
        }
        for term in &self.terms {
            let base = (-(lambda * term.t_total)).exp() * term.coeff;
            let scaled = match mode {
                EvalMode::Value => base,
                EvalMode::DLambda => base * (-term.t_total),
                EvalMode::DBeta => base * term.a_total,
            };
            re.add(scaled.re);
            im.add(scaled.im);
        }
        Ok(Complex64::new(re.value(), im.value()))
    }
}

/// Builds the truncated pseudo-cycle expansion of the band factor
/// `1/ζ_(band)` from an orbit table, retaining every set of distinct
/// primes with total topological length `≤ n_max`.
///
/// The table must contain all prime cycles up to `n_max`; asking beyond
/// its range is rejected rather than silently producing an incomplete
/// expansion.
pub fn build_expansion(table: &OrbitTable, band: usize, n_max: usize) -> Result<CycleExpansion> {
    if band == 0 {
        return Err(Error::InvalidParameter(
            "band index must be at least 1".into(),
        ));
    }
    if n_max == 0 {
        return Err(Error::InvalidParameter(
            "expansion order n_max must be at least 1".into(),
        ));
    }
    if n_max > table.n_max() {
        return Err(Error::InvalidParameter(format!(
            "orbit table stops at length {} and is missing primes up to requested length {}",
            table.n_max(),
            n_max
        )));
    }

    let orbits: Vec<_> = table
        .orbits()
        .iter()
        .filter(|o| o.cycle.len() <= n_max)
        .collect();
    let primes: Vec<PrimeFactor> = orbits
        .iter()
        .map(|o| PrimeFactor {
            word: o.cycle.word(),
            period: o.t_p,
            ln_abs_lambda: o.lambda.abs().ln(),
            sigma: o.sigma,
        })
        .collect();
    let lengths: Vec<usize> = orbits.iter().map(|o| o.cycle.len()).collect();

    // Per-prime single-cycle factor for this band:
    //   t_p = σ_p^{band+1} · e^{−λ T_p} · |Λ_p|^{−band},
    // split into a sign and a log-magnitude so products never overflow.
    let k = band as f64;
    let factor_sign: Vec<f64> = primes
        .iter()
        .map(|p| {
            if p.sigma >= 0 || (band + 1).is_multiple_of(2) {
                1.0
            } else {
                -1.0
            }
        })
        .collect();

    // Depth-first enumeration of subsets of distinct primes with total
    // length ≤ n_max. Orbit tables are sorted by ascending length, so
    // each level can stop scanning as soon as one prime no longer fits.
    #[allow(clippy::too_many_arguments)]
    fn enumerate(
        start: usize,
        room: usize,
        lengths: &[usize],
        primes: &[PrimeFactor],
        factor_sign: &[f64],
        k: f64,
        members: &mut Vec<u32>,
        terms: &mut Vec<ExpansionTerm>,
    ) {
        for i in start..lengths.len() {
            if lengths[i] > room {
                break;
            }
            members.push(i as u32);
            terms.push(make_term(members, primes, factor_sign, k));
            enumerate(
                i + 1,
                room - lengths[i],
                lengths,
                primes,
                factor_sign,
                k,
                members,
                terms,
            );
            members.pop();
        }
    }

    let mut terms: Vec<ExpansionTerm> = Vec::new();
    let mut members: Vec<u32> = Vec::new();
    enumerate(
        0,
        n_max,
        &lengths,
        &primes,
        &factor_sign,
        k,
        &mut members,
        &mut terms,
    );

    terms.sort_by(|a, b| {
        a.t_total
            .partial_cmp(&b.t_total)
            .expect("pseudo-cycle periods are finite")
            .then_with(|| a.members.cmp(&b.members))
    });

    Ok(CycleExpansion {
        band,
        n_max,
        primes,
        terms,
        weights: None,
    })
}

fn make_term(
    members: &[u32],
    primes: &[PrimeFactor],
    factor_sign: &[f64],
    k: f64,
) -> ExpansionTerm {
    let mut t_total = 0.0;
    let mut ln_amp = 0.0;
    let mut sign = 1.0;
    for &m in members {
        let m = m as usize;
        t_total += primes[m].period;
        ln_amp -= k * primes[m].ln_abs_lambda;
        sign *= -factor_sign[m];
    }
    ExpansionTerm {
        members: members.to_vec(),
        t_total,
        coeff: sign * ln_amp.exp(),
        a_total: 0.0,
    }
}

/// Builds the expansions for bands `1..=k_max` and attaches the weights
/// of `f` to each, ready for [`weighted_zeta`].
pub fn build_weighted_expansions(
    table: &OrbitTable,
    f: &WeightSpec,
    k_max: usize,
    n_max: usize,
) -> Result<Vec<CycleExpansion>> {
    if k_max == 0 {
        return Err(Error::InvalidParameter("k_max must be at least 1".into()));
    }
    let all_weights = table.weights(f)?;
    let filtered: Vec<f64> = table
        .orbits()
        .iter()
        .zip(&all_weights)
        .filter(|(o, _)| o.cycle.len() <= n_max)
        .map(|(_, w)| *w)
        .collect();
    let mut expansions = Vec::with_capacity(k_max);
    for band in 1..=k_max {
        let mut exp = build_expansion(table, band, n_max)?;
        exp.set_weights(&filtered)?;
        expansions.push(exp);
    }
    Ok(expansions)
}

/// Assembles the weighted zeta function from band expansions:
///
/// ```text
/// Z_f(λ) = Σ_{k=1}^{k_max} k · [ −∂_β ζ_(k)^{-1} / ζ_(k)^{-1} ](λ) ,
/// ```
///
/// where the expansions must cover bands `1..=k_max` in order, agree on
/// their truncation, and carry attached weights. The returned tail
/// bounds the omitted bands `k > k_max` via the geometric estimate
/// `Σ_p |A_p| R(|Λ_p|^{-1}) e^{−Re λ·T_p} / (1 − e^{−Re λ·T_p}|Λ_p|^{−(k_max+1)})`
/// with `R(q) = Σ_{k>k_max} k·q^k` in closed form.
///
/// Evaluation within `1e-8` of a zero of any contributing band is
/// rejected: the band ratio is about to blow up and the result would be
/// dominated by cancellation noise.
pub fn weighted_zeta(expansions: &[CycleExpansion], lambda: Complex64) -> Result<ZetaValue> {
    if expansions.is_empty() {
        return Err(Error::InvalidParameter(
            "at least the band-1 expansion is required".into(),
        ));
    }
    for (i, exp) in expansions.iter().enumerate() {
        if exp.band != i + 1 {
            return Err(Error::InvalidParameter(format!(
                "expansions must cover bands 1..={} in order; position {} holds band {}",
                expansions.len(),
                i,
                exp.band
            )));
        }
        if exp.n_max != expansions[0].n_max || exp.primes.len() != expansions[0].primes.len() {
            return Err(Error::InvalidParameter(
                "band expansions disagree on truncation or prime content".into(),
            ));
        }
        if exp.weights.is_none() {
            return Err(Error::InvalidParameter(format!(
                "band {} has no weights attached",
                exp.band
            )));
        }
    }

    let mut re = Compensated::default();
    let mut im = Compensated::default();
    for exp in expansions {
        let value = exp.zeta_inv(lambda, EvalMode::Value)?;
        let dl = exp.zeta_inv(lambda, EvalMode::DLambda)?;
        let distance = if dl.norm() > 0.0 {
            value.norm() / dl.norm()
        } else {
            value.norm()
        };
        if distance < 1e-8 {
            let zero = if dl.norm() > 0.0 {
                lambda - value / dl
            } else {
                lambda
            };
            return Err(Error::PoleProximity {
                band: exp.band,
                at: (lambda.re, lambda.im),
                zero: (zero.re, zero.im),
            });
        }
        let db = exp.zeta_inv(lambda, EvalMode::DBeta)?;
        let contribution = (-db / value) * (exp.band as f64);
        re.add(contribution.re);
        im.add(contribution.im);
    }

    let tail = band_tail_bound(&expansions[expansions.len() - 1], lambda);
    Ok(ZetaValue {
        value: Complex64::new(re.value(), im.value()),
        tail,
    })
}

/// Bound on `Σ_{k>k_max} k·F_k`: for each prime, all repeats of the
/// omitted bands are summed geometrically. Infinite when some prime has
/// `e^{−Re λ·T_p}|Λ_p|^{−(k_max+1)} ≥ 1` (no decay left to bound with).
fn band_tail_bound(last: &CycleExpansion, lambda: Complex64) -> f64 {
    let k_max = last.band as i32;
    let weights = last
        .weights
        .as_ref()
        .expect("weighted_zeta validated weight attachment");
    let mut tail = 0.0f64;
    for (p, &a) in last.primes.iter().zip(weights) {
        let q = (-p.ln_abs_lambda).exp();
        let x = (-lambda.re * p.period).exp();
        // R(q) = Σ_{k>K} k q^k = q^{K+1}·((K+1)(1−q) + q)/(1−q)².
        let kk = k_max as f64;
        let r_q = q.powi(k_max + 1) * ((kk + 1.0) * (1.0 - q) + q) / ((1.0 - q) * (1.0 - q));
        let denom = 1.0 - x * q.powi(k_max + 1);
        if denom <= 0.0 {
            return f64::INFINITY;
        }
        tail += a.abs() * r_q * x / denom;
    }
    tail
}

/// One prime cycle's data for the direct orbit sum, decoupled from the
/// billiard so synthetic single-orbit systems can exercise the series.
#[derive(Clone, Debug)]
pub struct DirectPrime {
    /// Identifying word, used in divergence reports.
    pub word: String,
    /// Primitive period `T_p > 0`.
    pub period: f64,
    /// `ln |Λ_p| > 0` of the expanding eigenvalue.
    pub ln_abs_lambda: f64,
    /// Sign of the expanding eigenvalue (`±1`).
    pub sigma: i8,
    /// Weight `A_p` of the primitive cycle.
    pub weight: f64,
}

/// Sums the orbit series literally: primes in the given order, repeats
/// `r = 1..=r_max` innermost, each term
/// `e^{−λ r T_p} · A_p · D_r(p)` with `D_r` the determinant factor
/// selected by `det`. Rejects spectral parameters where some prime's
/// repeat terms fail to decay (`e^{−Re λ·T_p}/|Λ_p| ≥ 1`), and reports
/// a geometric bound on the repeats beyond `r_max`.
pub fn direct_orbit_sum(
    primes: &[DirectPrime],
    lambda: Complex64,
    r_max: usize,
    det: DetMode,
) -> Result<ZetaValue> {
    if r_max == 0 {
        return Err(Error::InvalidParameter("r_max must be at least 1".into()));
    }
    if let DetMode::Bands(0) = det {
        return Err(Error::InvalidParameter(
            "band-truncated determinants need at least one band".into(),
        ));
    }
    for p in primes {
        if !(p.period > 0.0) || !(p.ln_abs_lambda > 0.0) || (p.sigma != 1 && p.sigma != -1) {
            return Err(Error::InvalidParameter(format!(
                "prime '{}' must have positive period, |Λ| > 1 and σ = ±1",
                p.word
            )));
        }
        let rho = (-lambda.re * p.period - p.ln_abs_lambda).exp();
        if rho >= 1.0 {
            return Err(Error::DivergentDirectSum {
                word: p.word.clone(),
                ratio: rho,
            });
        }
    }

    let mut re = Compensated::default();
    let mut im = Compensated::default();
    let mut tail = 0.0f64;
    for p in primes {
        let u1 = (-p.ln_abs_lambda).exp();
        for r in 1..=r_max {
            let u = (-(r as f64) * p.ln_abs_lambda).exp();
            let s = if p.sigma == 1 || r % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            let d = match det {
                DetMode::Exact => u / ((1.0 - s * u) * (1.0 - s * u)),
                DetMode::Bands(k_cut) => {
                    let mut acc = 0.0;
                    let mut u_k = 1.0;
                    for k in 1..=k_cut {
                        u_k *= u;
                        let s_k = if s > 0.0 || (k + 1) % 2 == 0 {
                            1.0
                        } else {
                            -1.0
                        };
                        acc += (k as f64) * s_k * u_k;
                    }
                    acc
                }
            };
            let term = (-(lambda * ((r as f64) * p.period))).exp() * (p.weight * d);
            re.add(term.re);
            im.add(term.im);
        }
        // |D_r| ≤ u_r/(1−u_1)² in both modes, so the r > r_max repeats
        // are bounded by a geometric series in ρ = e^{−Re λ·T_p}/|Λ_p|.
        let rho = (-lambda.re * p.period - p.ln_abs_lambda).exp();
        tail +=
            p.weight.abs() / ((1.0 - u1) * (1.0 - u1)) * rho.powi(r_max as i32 + 1) / (1.0 - rho);
    }
    Ok(ZetaValue {
        value: Complex64::new(re.value(), im.value()),
        tail,
    })
}

/// Evaluates the weighted orbit sum directly from an orbit table: primes
/// up to `n_max`, repeats up to `r_max`, weights from `f`. This is the
/// oracle route — quadratic cancellation-free bookkeeping, no pseudo-
/// cycle combinatorics — and is only trustworthy where the series
/// converges absolutely (large enough `Re λ`).
pub fn weighted_zeta_direct(
    table: &OrbitTable,
    lambda: Complex64,
    f: &WeightSpec,
    r_max: usize,
    n_max: usize,
    det: DetMode,
) -> Result<ZetaValue> {
    if n_max == 0 {
        return Err(Error::InvalidParameter(
            "direct sum needs primes of at least length 1".into(),
        ));
    }
    if n_max > table.n_max() {
        return Err(Error::InvalidParameter(format!(
            "orbit table stops at length {} and is missing primes up to requested length {}",
            table.n_max(),
            n_max
        )));
    }
    let weights = table.weights(f)?;
    let primes: Vec<DirectPrime> = table
        .orbits()
        .iter()
        .zip(&weights)
        .filter(|(o, _)| o.cycle.len() <= n_max)
        .map(|(o, &w)| DirectPrime {
            word: o.cycle.word(),
            period: o.t_p,
            ln_abs_lambda: o.lambda.abs().ln(),
            sigma: o.sigma,
            weight: w,
        })
        .collect();
    direct_orbit_sum(&primes, lambda, r_max, det)
}

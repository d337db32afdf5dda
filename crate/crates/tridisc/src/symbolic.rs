//! Symbolic dynamics of the three-disc billiard: prime cycles in the
//! full-domain (disc labels, no cyclically adjacent repeats) and
//! fundamental-domain (binary) alphabets, and the unfolding of fundamental
//! words into closed full-domain itineraries.
//!
//! Fundamental-domain coding: symbol 1 means the trajectory circulates to
//! the third disc, symbol 0 means it bounces back to the disc it came from.
//! Each symbol carries a fixed group element (a rotation for 1, a mirror
//! for 0); their ordered product over one period is the holonomy `h`, and
//! the full-domain orbit closes after `m = order(h)` fundamental periods.

use crate::error::{Error, Result};
use crate::geometry::GroupElement;

/// Which symbolic alphabet a cycle lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Domain {
    /// Disc labels {0,1,2}, adjacent symbols distinct cyclically.
    Full,
    /// Binary {0,1} alphabet of the symmetry-reduced dynamics.
    Fundamental,
}

impl std::fmt::Display for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Domain::Full => write!(f, "full"),
            Domain::Fundamental => write!(f, "fundamental"),
        }
    }
}

/// A primitive periodic word in canonical form (its lexicographically
/// minimal cyclic rotation).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrimeCycle {
    symbols: Vec<u8>,
    domain: Domain,
}

/// Index of the lexicographically least rotation (Booth's algorithm).
fn least_rotation(w: &[u8]) -> usize {
    let n = w.len();
    let at = |i: usize| w[i % n];
    let mut f = vec![usize::MAX; 2 * n];
    let mut k = 0usize;
    for j in 1..2 * n {
        let sj = at(j);
        let mut i = f[j - k - 1];
        while i != usize::MAX && sj != at(k + i + 1) {
            if sj < at(k + i + 1) {
                k = j - i - 1;
            }
            i = f[i];
        }
        if i == usize::MAX && sj != at(k) {
            if sj < at(k) {
                k = j;
            }
            f[j - k] = usize::MAX;
        } else {
            f[j - k] = if i == usize::MAX { 0 } else { i + 1 };
        }
    }
    k
}

/// Smallest period of the word (KMP failure function); the word is
/// primitive iff its smallest period is its length.
fn smallest_period(w: &[u8]) -> usize {
    let n = w.len();
    let mut fail = vec![0usize; n];
    for i in 1..n {
        let mut j = fail[i - 1];
        while j > 0 && w[i] != w[j] {
            j = fail[j - 1];
        }
        if w[i] == w[j] {
            j += 1;
        }
        fail[i] = j;
    }
    let p = n - fail[n - 1];
    if n.is_multiple_of(p) {
        p
    } else {
        n
    }
}

impl PrimeCycle {
    /// Validates alphabet, adjacency (full domain) and primitivity, and
    /// stores the canonical rotation.
    pub fn new(domain: Domain, symbols: &[u8]) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::InvalidParameter("empty symbolic word".into()));
        }
        let max_symbol = match domain {
            Domain::Full => 2,
            Domain::Fundamental => 1,
        };
        if let Some(&bad) = symbols.iter().find(|&&s| s > max_symbol) {
            return Err(Error::InvalidParameter(format!(
                "symbol {bad} outside the {domain} alphabet 0..={max_symbol}"
            )));
        }
        if domain == Domain::Full {
            let n = symbols.len();
            for i in 0..n {
                if symbols[i] == symbols[(i + 1) % n] {
                    return Err(Error::InvalidParameter(format!(
                        "full-domain word {:?} repeats a disc label at adjacent bounces",
                        symbols
                    )));
                }
            }
        }
        if smallest_period(symbols) != symbols.len() {
            return Err(Error::InvalidParameter(format!(
                "word {symbols:?} is a repetition of a shorter word, not primitive"
            )));
        }
        let k = least_rotation(symbols);
        let mut canonical = Vec::with_capacity(symbols.len());
        canonical.extend_from_slice(&symbols[k..]);
        canonical.extend_from_slice(&symbols[..k]);
        Ok(PrimeCycle {
            symbols: canonical,
            domain,
        })
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Topological length `n_p`.
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The word as digits, e.g. "0012".
    pub fn word(&self) -> String {
        self.symbols.iter().map(|s| char::from(b'0' + s)).collect()
    }
}

impl std::fmt::Display for PrimeCycle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.word())
    }
}

/// All binary Lyndon words of length up to `n_max` in lexicographic order
/// (Duval's generation); these are exactly the canonical primitive necklaces.
fn binary_lyndon_words(n_max: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut w: Vec<u8> = vec![0];
    loop {
        out.push(w.clone());
        // Extend periodically to length n_max, then increment the last
        // non-maximal symbol.
        let period = w.len();
        while w.len() < n_max {
            let c = w[w.len() - period];
            w.push(c);
        }
        while let Some(&last) = w.last() {
            if last == 1 {
                w.pop();
            } else {
                break;
            }
        }
        match w.last_mut() {
            Some(last) => *last += 1,
            None => return out,
        }
    }
}

/// Full-domain canonical primitive words of length exactly `n` via DFS over
/// no-adjacent-repeat strings, keeping the ones equal to their own least
/// rotation and primitive.
fn full_domain_words(n: usize, out: &mut Vec<Vec<u8>>) {
    if n < 2 {
        // A length-1 full-domain word would repeat its label cyclically.
        return;
    }
    let mut w: Vec<u8> = Vec::with_capacity(n);
    // The canonical rotation starts with the minimal symbol, which for a
    // nonempty word over {0,1,2} with adjacency constraints is always the
    // smallest label used; starting with 0 or 1 suffices since a canonical
    // word cannot start with 2 (it would have to consist of 2s only).
    fn dfs(w: &mut Vec<u8>, n: usize, out: &mut Vec<Vec<u8>>) {
        if w.len() == n {
            if w[0] != w[n - 1] && smallest_period(w) == n && least_rotation(w) == 0 {
                out.push(w.clone());
            }
            return;
        }
        for s in 0..3u8 {
            if let Some(&last) = w.last() {
                if last == s {
                    continue;
                }
                // Prune: a canonical word never contains a symbol smaller
                // than its first symbol.
                if s < w[0] {
                    continue;
                }
            }
            w.push(s);
            dfs(w, n, out);
            w.pop();
        }
    }
    dfs(&mut w, n, out);
}

/// Enumerates all prime cycles with length up to `n_max`, sorted by
/// (length, lexicographic word).
pub fn enumerate_prime_cycles(domain: Domain, n_max: usize) -> Result<Vec<PrimeCycle>> {
    if !(1..=24).contains(&n_max) {
        return Err(Error::InvalidParameter(format!(
            "n_max = {n_max} outside the supported range 1..=24"
        )));
    }
    let mut words: Vec<Vec<u8>> = match domain {
        Domain::Fundamental => binary_lyndon_words(n_max),
        Domain::Full => {
            let mut all = Vec::new();
            for n in 2..=n_max {
                full_domain_words(n, &mut all);
            }
            all
        }
    };
    words.sort_by(|a, b| (a.len(), a.as_slice()).cmp(&(b.len(), b.as_slice())));
    words
        .into_iter()
        .map(|w| PrimeCycle::new(domain, &w))
        .collect()
}

/// One fundamental period of a reduced cycle unfolded into the full domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnfoldedItinerary {
    /// Disc labels visited during one fundamental period, starting on disc 0.
    pub labels: Vec<u8>,
    /// Holonomy: ordered product of the per-symbol group elements.
    pub h: GroupElement,
    /// Order of `h`; the full-domain orbit closes after `m` periods.
    pub m: usize,
}

/// Group element carried by one fundamental-domain symbol: symbol 0 is the
/// mirror swapping discs 0 and 1 (a back-scatter between two discs), symbol
/// 1 the counterclockwise rotation (circulation to the third disc).
fn symbol_element(s: u8) -> GroupElement {
    if s == 0 {
        GroupElement::S2
    } else {
        GroupElement::R1
    }
}

/// Unfolds one period of a fundamental cycle into full-domain disc labels.
///
/// Seeding the itinerary on disc 0, the label after `i` symbols is
/// `G_i(0)` with `G_i = g(w_1) . g(w_2) ... g(w_i)` (rightmost element acts
/// first). Consecutive labels always differ because both generators move
/// disc 0. The holonomy is `h = G_n`; repeating the period `m = order(h)`
/// times with labels `h^j(G_i(0))` closes the full-domain word.
pub fn unfold(cycle: &PrimeCycle) -> Result<UnfoldedItinerary> {
    if cycle.domain() != Domain::Fundamental {
        return Err(Error::InvalidParameter(
            "unfold expects a fundamental-domain cycle".into(),
        ));
    }
    let mut labels = Vec::with_capacity(cycle.len());
    let mut g = GroupElement::E;
    for &s in cycle.symbols() {
        labels.push(g.apply_disc(0) as u8);
        g = g.compose(symbol_element(s));
    }
    let h = g;
    Ok(UnfoldedItinerary {
        labels,
        h,
        m: h.order(),
    })
}

impl UnfoldedItinerary {
    /// The closed full-domain word: `m` copies of the period, each mapped by
    /// the accumulated holonomy power.
    pub fn full_closure(&self) -> Vec<u8> {
        let mut word = Vec::with_capacity(self.m * self.labels.len());
        let mut power = GroupElement::E;
        for _ in 0..self.m {
            for &l in &self.labels {
                word.push(power.apply_disc(l as usize) as u8);
            }
            power = self.h.compose(power);
        }
        word
    }
}

/// Number of enumerated orbits with period at most `t`.
///
/// The count grows exponentially in `t` for hyperbolic repellers; the
/// library only counts over the finite enumerated set.
pub fn count_by_period(periods: &[f64], t: f64) -> usize {
    periods.iter().filter(|&&p| p <= t).count()
}

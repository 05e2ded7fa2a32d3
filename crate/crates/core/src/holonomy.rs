//! Closed geodesics of a Belyi surface from closed walks on its ribbon graph.
//!
//! A non-backtracking walk turns left or right at every trivalent vertex.
//! Writing `L = [[1,1],[0,1]]` and `R = [[1,0],[1,1]]`, the holonomy of a
//! closed walk is the product of its turn matrices; its trace fixes the length
//! `2 arccosh(|tr| / 2)` of the geodesic in the free homotopy class of the
//! walk. Pure `L` (or pure `R`) walks run around a face and are parabolic.
//!
//! Free homotopy classes correspond to cyclically non-backtracking closed
//! walks up to rotation; unoriented classes also identify a walk with its
//! reverse. The enumerator visits each primitive unoriented class exactly once
//! by keeping only the walk whose dart sequence is the lexicographically
//! smallest among all rotations of it and of its reverse.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::invalid;
use crate::{Budget, Error, Meter, Result, RibbonGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Turn {
    L,
    R,
}

impl Turn {
    pub fn swapped(self) -> Turn {
        match self {
            Turn::L => Turn::R,
            Turn::R => Turn::L,
        }
    }
}

/// Cyclic word over `{L, R}`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TurnWord(Vec<Turn>);

impl TurnWord {
    pub fn new(letters: Vec<Turn>) -> Result<Self> {
        if letters.is_empty() {
            return invalid("turn words are nonempty");
        }
        Ok(TurnWord(letters))
    }

    pub fn letters(&self) -> &[Turn] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn rotated(&self, by: usize) -> TurnWord {
        let mut v = self.0.clone();
        v.rotate_left(by % self.0.len());
        TurnWord(v)
    }

    /// The word read backwards with `L` and `R` exchanged: the turn word of
    /// the reversed walk.
    pub fn reverse_swapped(&self) -> TurnWord {
        TurnWord(self.0.iter().rev().map(|t| t.swapped()).collect())
    }

    /// Lexicographically least rotation of the word or of its reverse–swap.
    pub fn canonical(&self) -> TurnWord {
        let a = min_rotation(&self.0);
        let b = min_rotation(&self.reverse_swapped().0);
        TurnWord(a.min(b))
    }

    /// Not a proper power of a shorter word.
    pub fn is_primitive(&self) -> bool {
        smallest_period(&self.0) == self.0.len()
    }

    /// Uses both letters.
    pub fn is_mixed(&self) -> bool {
        self.0.iter().any(|&t| t == Turn::L) && self.0.iter().any(|&t| t == Turn::R)
    }
}

impl fmt::Display for TurnWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.0 {
            f.write_str(match t {
                Turn::L => "L",
                Turn::R => "R",
            })?;
        }
        Ok(())
    }
}

impl FromStr for TurnWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(|c| match c {
                'L' => Ok(Turn::L),
                'R' => Ok(Turn::R),
                other => invalid(format!("unexpected turn letter {other:?}")),
            })
            .collect::<Result<Vec<_>>>()?;
        TurnWord::new(letters)
    }
}

fn min_rotation<T: Ord + Clone>(v: &[T]) -> Vec<T> {
    (0..v.len())
        .map(|i| {
            let mut r = v.to_vec();
            r.rotate_left(i);
            r
        })
        .min()
        .unwrap_or_default()
}

fn smallest_period<T: PartialEq>(v: &[T]) -> usize {
    let n = v.len();
    (1..=n)
        .find(|&p| n % p == 0 && (p..n).all(|i| v[i] == v[i - p]))
        .unwrap_or(n)
}

/// Exact `SL(2, Z)` element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HolonomyMatrix {
    pub a: BigInt,
    pub b: BigInt,
    pub c: BigInt,
    pub d: BigInt,
}

impl HolonomyMatrix {
    pub fn identity() -> Self {
        HolonomyMatrix { a: BigInt::one(), b: BigInt::zero(), c: BigInt::zero(), d: BigInt::one() }
    }

    pub fn generator(t: Turn) -> Self {
        match t {
            Turn::L => HolonomyMatrix { a: 1.into(), b: 1.into(), c: 0.into(), d: 1.into() },
            Turn::R => HolonomyMatrix { a: 1.into(), b: 0.into(), c: 1.into(), d: 1.into() },
        }
    }

    pub fn mul(&self, o: &HolonomyMatrix) -> HolonomyMatrix {
        HolonomyMatrix {
            a: &self.a * &o.a + &self.b * &o.c,
            b: &self.a * &o.b + &self.b * &o.d,
            c: &self.c * &o.a + &self.d * &o.c,
            d: &self.c * &o.b + &self.d * &o.d,
        }
    }

    /// Right multiplication by a generator, done in place.
    pub fn push(&mut self, t: Turn) {
        match t {
            // [[a,b],[c,d]] * L = [[a, a+b],[c, c+d]]
            Turn::L => {
                self.b += &self.a;
                self.d += &self.c;
            }
            // [[a,b],[c,d]] * R = [[a+b, b],[c+d, d]]
            Turn::R => {
                self.a += &self.b;
                self.c += &self.d;
            }
        }
    }

    pub fn det(&self) -> BigInt {
        &self.a * &self.d - &self.b * &self.c
    }

    pub fn trace(&self) -> BigInt {
        &self.a + &self.d
    }
}

/// Product of the generator matrices of `w` in reading order.
pub fn word_to_matrix(w: &TurnWord) -> HolonomyMatrix {
    let mut m = HolonomyMatrix::identity();
    for &t in w.letters() {
        m.push(t);
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MatrixClass {
    Hyperbolic { length: f64 },
    Parabolic,
    Elliptic,
}

/// `2 arccosh(t / 2)` for an integer `t >= 2`, accurate for any size of `t`.
pub fn length_from_trace(abs_trace: &BigInt) -> f64 {
    match abs_trace.to_f64() {
        Some(t) if t.is_finite() && t < 1e150 => 2.0 * (t / 2.0).acosh(),
        _ => {
            // 2 arccosh(t/2) = 2 ln t - O(t^-2); take ln from the top 64 bits
            let bits = abs_trace.bits();
            let shift = bits.saturating_sub(64);
            let top = (abs_trace >> shift).to_f64().unwrap_or(f64::MAX);
            2.0 * (top.ln() + shift as f64 * std::f64::consts::LN_2)
        }
    }
}

pub fn classify_matrix(m: &HolonomyMatrix) -> MatrixClass {
    let t = m.trace().abs();
    let two = BigInt::from(2);
    match t.cmp(&two) {
        Ordering::Greater => MatrixClass::Hyperbolic { length: length_from_trace(&t) },
        Ordering::Equal => MatrixClass::Parabolic,
        Ordering::Less => MatrixClass::Elliptic,
    }
}

/// Walk-length cutoff `floor(2 cosh(R/2)) + 1`. A mixed word of length `k`
/// has `|tr| >= k + 1` (attained by `L^{k-1} R`, a walk winding around a
/// cusp), so no mixed word longer than `floor(2 cosh(R/2)) - 1` has length
/// at most `R`; the extra 2 absorbs rounding of the threshold.
pub fn walk_length_cutoff(radius: f64) -> usize {
    (2.0 * (radius / 2.0).cosh() * (1.0 + 1e-12)).floor() as usize + 1
}

/// Whether a trace `t` (as `f64`, possibly rounded) gives length `<= radius`.
/// Decided on the trace scale `t <= 2 cosh(R/2)`; inside a relative band of
/// `1e-12` around the threshold it falls back to comparing lengths.
fn trace_within(t: f64, radius: f64) -> bool {
    let threshold = 2.0 * (radius / 2.0).cosh();
    if t < threshold * (1.0 - 1e-12) {
        true
    } else if t > threshold * (1.0 + 1e-12) {
        false
    } else {
        2.0 * (t / 2.0).acosh() <= radius
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClosedGeodesic {
    /// Canonical turn word.
    pub word: TurnWord,
    /// Absolute trace of the holonomy.
    pub trace: BigInt,
    pub length: f64,
    /// Canonical dart sequence of the representing walk.
    pub walk: Vec<usize>,
}

#[derive(Clone, Debug, Default)]
pub struct GeodesicEnumeration {
    /// Primitive unoriented hyperbolic classes of length `<= R`, sorted by
    /// `(length, word)`.
    pub geodesics: Vec<ClosedGeodesic>,
    /// Primitive unoriented parabolic (pure-turn) classes met within the walk
    /// cutoff, as canonical dart sequences. Each is a face of the ribbon graph.
    pub parabolic: Vec<Vec<usize>>,
    pub walk_cutoff: usize,
    pub nodes_visited: u64,
}

struct Search<'a> {
    g: &'a RibbonGraph,
    radius: f64,
    k_max: usize,
    path: Vec<usize>,
    turns: Vec<Turn>,
    meter: Meter,
    out: GeodesicEnumeration,
}

// 2x2 product of nonnegative matrices, saturating at u128::MAX. Saturated
// entries only ever underestimate, so pruning on them is safe.
#[derive(Clone, Copy)]
struct PrefixMatrix([u128; 4]);

impl PrefixMatrix {
    const I: PrefixMatrix = PrefixMatrix([1, 0, 0, 1]);

    fn push(self, t: Turn) -> PrefixMatrix {
        let [a, b, c, d] = self.0;
        match t {
            Turn::L => PrefixMatrix([a, a.saturating_add(b), c, c.saturating_add(d)]),
            Turn::R => PrefixMatrix([a.saturating_add(b), b, c.saturating_add(d), d]),
        }
    }

    fn trace(self) -> f64 {
        self.0[0].saturating_add(self.0[3]) as f64
    }
}

impl<'a> Search<'a> {
    fn options(&self, d: usize) -> [(usize, Turn); 2] {
        let x = self.g.alpha_at(d);
        [(self.g.sigma_at(x), Turn::L), (self.g.sigma_inv_at(x), Turn::R)]
    }

    fn extend(&mut self, prefix: PrefixMatrix) -> Result<()> {
        self.meter.tick(1)?;
        self.out.nodes_visited += 1;
        let start = self.path[0];
        let last = *self.path.last().unwrap();
        for (next, turn) in self.options(last) {
            let m = prefix.push(turn);
            if !trace_within(m.trace(), self.radius) {
                // traces only grow as letters are appended to a nonnegative product
                continue;
            }
            if next == start {
                self.turns.push(turn);
                self.close();
                self.turns.pop();
            }
            if next >= start && self.path.len() < self.k_max {
                self.path.push(next);
                self.turns.push(turn);
                self.extend(m)?;
                self.turns.pop();
                self.path.pop();
            }
        }
        Ok(())
    }

    fn close(&mut self) {
        let walk = &self.path;
        if smallest_period(walk) != walk.len() {
            return;
        }
        let fwd = min_rotation(walk);
        if fwd != *walk {
            return;
        }
        let rev: Vec<usize> = walk.iter().rev().map(|&d| self.g.alpha_at(d)).collect();
        if min_rotation(&rev) < fwd {
            return;
        }
        let word = TurnWord(self.turns.clone());
        if !word.is_mixed() {
            self.out.parabolic.push(fwd);
            return;
        }
        let trace = word_to_matrix(&word).trace().abs();
        let t = trace.to_f64().unwrap_or(f64::INFINITY);
        if !trace_within(t, self.radius) {
            return;
        }
        let length = length_from_trace(&trace);
        self.out.geodesics.push(ClosedGeodesic { word: word.canonical(), trace, length, walk: fwd });
    }
}

/// All primitive unoriented closed geodesics of length `<= radius`.
pub fn enumerate_geodesics(g: &RibbonGraph, radius: f64, budget: Budget) -> Result<GeodesicEnumeration> {
    if !(radius > 0.0) || !radius.is_finite() {
        return invalid(format!("radius must be positive and finite, got {radius}"));
    }
    let k_max = walk_length_cutoff(radius);
    let mut s = Search {
        g,
        radius,
        k_max,
        path: Vec::with_capacity(k_max),
        turns: Vec::with_capacity(k_max),
        meter: Meter::new(budget, "geodesic enumeration"),
        out: GeodesicEnumeration { walk_cutoff: k_max, ..Default::default() },
    };
    for start in 0..g.dart_count() {
        s.path.push(start);
        s.extend(PrefixMatrix::I)?;
        s.path.pop();
    }
    let mut out = s.out;
    out.geodesics.sort_by(|x, y| {
        x.length.total_cmp(&y.length).then_with(|| x.word.cmp(&y.word)).then_with(|| x.walk.cmp(&y.walk))
    });
    out.parabolic.sort();
    Ok(out)
}

/// `N_R(S)`: number of primitive unoriented closed geodesics of length `<= R`.
pub fn count_nr(g: &RibbonGraph, radius: f64, budget: Budget) -> Result<usize> {
    Ok(enumerate_geodesics(g, radius, budget)?.geodesics.len())
}

pub fn systole(g: &RibbonGraph, radius_cap: f64, budget: Budget) -> Result<Option<f64>> {
    let e = enumerate_geodesics(g, radius_cap, budget)?;
    Ok(e.geodesics.first().map(|c| c.length))
}

/// Upper bound on the geodesic count of the compactified surface by the
/// count of the cusped surface at twice the radius.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompactifiedBound {
    pub bound: usize,
    /// The bound presumes embedded cusps of sufficient width, which is not
    /// checked per sample. Set only when `S_C` is itself hyperbolic.
    pub valid_assuming_cusp_width: bool,
}

pub fn bound_nr_compactified(g: &RibbonGraph, radius: f64, budget: Budget) -> Result<CompactifiedBound> {
    if !(radius > 0.0) {
        return invalid("radius must be positive");
    }
    let bound = count_nr(g, 2.0 * radius, budget)?;
    let hyperbolic = g.surface_invariants()?.hyperbolic_compactification;
    Ok(CompactifiedBound { bound, valid_assuming_cusp_width: hyperbolic })
}

/// CSV with columns `word,trace,length`, rows sorted by `(length, word)`.
pub fn geodesics_csv(geodesics: &[ClosedGeodesic]) -> String {
    let mut out = String::from("word,trace,length\n");
    for c in geodesics {
        out.push_str(&format!("{},{},{:.12}\n", c.word, c.trace, c.length));
    }
    out
}

//! Period-one continuous piecewise-linear paths and exact evaluation of the
//! location functionals used on them.

use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{format_rational, frac, half, int, one, zero, Rational};

/// Continuous piecewise-linear `g` with `g(t + 1) = g(t)`, given by nodes
/// `0 = t_0 < … < t_n = 1` and `y_0 = y_n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiecewiseLinearPath {
    times: Vec<Rational>,
    values: Vec<Rational>,
}

impl PiecewiseLinearPath {
    pub fn new(nodes: Vec<(Rational, Rational)>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidPath("need at least two nodes".into()));
        }
        let (times, values): (Vec<_>, Vec<_>) = nodes.into_iter().unzip();
        if !times[0].is_zero() || *times.last().unwrap() != one() {
            return Err(Error::InvalidPath("nodes must run from t = 0 to t = 1".into()));
        }
        if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPath(format!("node times not increasing at index {}", i + 1)));
        }
        if values[0] != *values.last().unwrap() {
            return Err(Error::InvalidPath("g(0) and g(1) differ".into()));
        }
        Ok(Self { times, values })
    }

    /// The constant path `c`.
    pub fn constant(c: Rational) -> Self {
        Self {
            times: vec![zero(), one()],
            values: vec![c, c],
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = (Rational, Rational)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    pub fn node_count(&self) -> usize {
        self.times.len()
    }

    /// Exact value at any rational `t`.
    pub fn eval(&self, t: Rational) -> Rational {
        let s = frac(&t);
        let i = self.times.partition_point(|x| *x <= s) - 1;
        if self.times[i] == s {
            return self.values[i];
        }
        self.interpolate(i, s)
    }

    fn interpolate(&self, i: usize, s: Rational) -> Rational {
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        y0 + (y1 - y0) * (s - t0) / (t1 - t0)
    }

    /// `θ_c g = g(· + c)`.
    pub fn shift(&self, c: Rational) -> Self {
        let r = frac(&c);
        let times: std::collections::BTreeSet<Rational> = self.times[..self.times.len() - 1]
            .iter()
            .map(|t| frac(&(*t - r)))
            .chain([zero()])
            .collect();
        let mut nodes: Vec<(Rational, Rational)> = times.into_iter().map(|t| (t, self.eval(t + r))).collect();
        nodes.push((one(), nodes[0].1));
        Self::new(nodes).expect("shifted nodes stay valid")
    }

    pub fn min_value(&self) -> Rational {
        *self.values.iter().min().unwrap()
    }

    pub fn max_value(&self) -> Rational {
        *self.values.iter().max().unwrap()
    }

    /// Linear pieces `(s0, y0, s1, y1)` of the unrolled path clipped to
    /// `[a, b]`, in time order.
    fn pieces(&self, a: Rational, b: Rational) -> Vec<(Rational, Rational, Rational, Rational)> {
        let mut out = Vec::new();
        let first = a.floor().to_integer();
        let last = b.floor().to_integer();
        for p in first..=last {
            let base = int(p);
            for i in 0..self.times.len() - 1 {
                let lo = base + self.times[i];
                let hi = base + self.times[i + 1];
                if hi < a || lo > b {
                    continue;
                }
                let s0 = if lo < a { a } else { lo };
                let s1 = if hi > b { b } else { hi };
                let y0 = if s0 == lo { self.values[i] } else { self.interpolate(i, s0 - base) };
                let y1 = if s1 == hi { self.values[i + 1] } else { self.interpolate(i, s1 - base) };
                out.push((s0, y0, s1, y1));
            }
        }
        out
    }
}

/// A location in the query interval or `∞` (no location).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Location {
    At(Rational),
    Infinity,
}

impl Location {
    pub fn finite(&self) -> Option<Rational> {
        match self {
            Location::At(t) => Some(*t),
            Location::Infinity => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Location::Infinity)
    }

    /// Translates a finite location by `d`.
    pub fn offset(self, d: Rational) -> Self {
        match self {
            Location::At(t) => Location::At(t + d),
            Location::Infinity => Location::Infinity,
        }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::At(t) => f.write_str(&format_rational(t)),
            Location::Infinity => f.write_str("inf"),
        }
    }
}

impl Serialize for Location {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Leftmost maximizer of `g` on `[a, b]`.
pub fn sup_location(g: &PiecewiseLinearPath, a: Rational, b: Rational) -> Location {
    let mut best: Option<(Rational, Rational)> = None;
    for (s0, y0, s1, y1) in g.pieces(a, b) {
        for (s, y) in [(s0, y0), (s1, y1)] {
            if best.map_or(true, |(_, v)| y > v) {
                best = Some((s, y));
            }
        }
    }
    Location::At(best.expect("nonempty window").0)
}

/// Smallest `t ∈ [a, b]` with `g(t) = level`.
pub fn first_hit(g: &PiecewiseLinearPath, level: Rational, a: Rational, b: Rational) -> Location {
    g.pieces(a, b)
        .into_iter()
        .find_map(|(s0, y0, s1, y1)| hit_in_piece(s0, y0, s1, y1, level, true))
        .map_or(Location::Infinity, Location::At)
}

/// Largest `t ∈ [a, b]` with `g(t) = level`.
pub fn last_hit(g: &PiecewiseLinearPath, level: Rational, a: Rational, b: Rational) -> Location {
    g.pieces(a, b)
        .into_iter()
        .rev()
        .find_map(|(s0, y0, s1, y1)| hit_in_piece(s0, y0, s1, y1, level, false))
        .map_or(Location::Infinity, Location::At)
}

fn hit_in_piece(
    s0: Rational,
    y0: Rational,
    s1: Rational,
    y1: Rational,
    level: Rational,
    earliest: bool,
) -> Option<Rational> {
    let (first, second) = if earliest { ((s0, y0), (s1, y1)) } else { ((s1, y1), (s0, y0)) };
    if first.1 == level {
        return Some(first.0);
    }
    if second.1 == level {
        return Some(second.0);
    }
    if (y0 - level).signum() * (y1 - level).signum() < zero() {
        return Some(s0 + (level - y0) * (s1 - s0) / (y1 - y0));
    }
    None
}

/// Supremum location truncated at level ½.
pub fn truncated_sup_location(g: &PiecewiseLinearPath, a: Rational, b: Rational) -> Location {
    let loc = sup_location(g, a, b);
    match loc {
        Location::At(t) if g.eval(t) >= half() => loc,
        _ => Location::Infinity,
    }
}

/// Which of the three functionals the composite locator uses for `g`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CompositeBranch {
    TruncatedSup,
    FirstHitMinusOne,
    LastHitMinusTwo,
}

pub fn composite_branch(g: &PiecewiseLinearPath) -> CompositeBranch {
    let (lo, hi) = (g.min_value(), g.max_value());
    if !lo.is_negative() {
        CompositeBranch::TruncatedSup
    } else if lo <= -one() && -one() <= hi {
        CompositeBranch::FirstHitMinusOne
    } else {
        CompositeBranch::LastHitMinusTwo
    }
}

/// Truncated supremum for nonnegative paths, first hit of −1 for paths
/// reaching −1, otherwise last hit of −2.
pub fn composite_location(g: &PiecewiseLinearPath, a: Rational, b: Rational) -> Location {
    match composite_branch(g) {
        CompositeBranch::TruncatedSup => truncated_sup_location(g, a, b),
        CompositeBranch::FirstHitMinusOne => first_hit(g, -one(), a, b),
        CompositeBranch::LastHitMinusTwo => last_hit(g, int(-2), a, b),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Locator {
    Sup,
    FirstHit(Rational),
    LastHit(Rational),
    TruncatedSup,
    Composite,
}

impl Locator {
    pub fn locate(&self, g: &PiecewiseLinearPath, a: Rational, b: Rational) -> Location {
        match *self {
            Locator::Sup => sup_location(g, a, b),
            Locator::FirstHit(level) => first_hit(g, level, a, b),
            Locator::LastHit(level) => last_hit(g, level, a, b),
            Locator::TruncatedSup => truncated_sup_location(g, a, b),
            Locator::Composite => composite_location(g, a, b),
        }
    }

    /// Parses `sup`, `first-hit:LEVEL`, `last-hit:LEVEL`, `truncated-sup`
    /// or `composite`.
    pub fn parse(text: &str) -> Result<Self> {
        let level = |s: &str| crate::rational::parse_rational(s);
        match text.split_once(':') {
            Some(("first-hit", l)) => Ok(Locator::FirstHit(level(l)?)),
            Some(("last-hit", l)) => Ok(Locator::LastHit(level(l)?)),
            None if text == "sup" => Ok(Locator::Sup),
            None if text == "truncated-sup" => Ok(Locator::TruncatedSup),
            None if text == "composite" => Ok(Locator::Composite),
            _ => Err(Error::Parse(format!("unknown locator {text:?}"))),
        }
    }
}

impl fmt::Display for Locator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Locator::Sup => f.write_str("sup"),
            Locator::FirstHit(l) => write!(f, "first-hit:{}", format_rational(l)),
            Locator::LastHit(l) => write!(f, "last-hit:{}", format_rational(l)),
            Locator::TruncatedSup => f.write_str("truncated-sup"),
            Locator::Composite => f.write_str("composite"),
        }
    }
}

/// A locator bound to one path, with indexes that answer windows of
/// length at most one in logarithmic time. Agrees exactly with
/// [`Locator::locate`].
pub struct PreparedLocator<'a> {
    path: &'a PiecewiseLinearPath,
    kind: Prepared,
}

enum Prepared {
    Sup { table: SparseMax, truncate: bool },
    FirstHit { level: Rational, segments: Vec<usize> },
    LastHit { level: Rational, segments: Vec<usize> },
}

impl<'a> PreparedLocator<'a> {
    pub fn new(path: &'a PiecewiseLinearPath, locator: Locator) -> Self {
        let resolved = match locator {
            Locator::Composite => match composite_branch(path) {
                CompositeBranch::TruncatedSup => Locator::TruncatedSup,
                CompositeBranch::FirstHitMinusOne => Locator::FirstHit(-one()),
                CompositeBranch::LastHitMinusTwo => Locator::LastHit(int(-2)),
            },
            other => other,
        };
        let n = path.times.len() - 1;
        let doubled = |g: usize| path.values[g % n];
        let crossing = |level: Rational| -> Vec<usize> {
            (0..2 * n)
                .filter(|&s| {
                    let (y0, y1) = (doubled(s), doubled(s + 1));
                    (y0 <= level && level <= y1) || (y1 <= level && level <= y0)
                })
                .collect()
        };
        let kind = match resolved {
            Locator::Sup | Locator::TruncatedSup => Prepared::Sup {
                table: SparseMax::new((0..=2 * n).map(doubled).collect()),
                truncate: resolved == Locator::TruncatedSup,
            },
            Locator::FirstHit(level) => Prepared::FirstHit {
                level,
                segments: crossing(level),
            },
            Locator::LastHit(level) => Prepared::LastHit {
                level,
                segments: crossing(level),
            },
            Locator::Composite => unreachable!(),
        };
        Self { path, kind }
    }

    fn n(&self) -> usize {
        self.path.times.len() - 1
    }

    /// Time of global node `g` of the two-period unrolling.
    fn time(&self, g: usize) -> Rational {
        let n = self.n();
        if g >= n {
            self.path.times[g - n] + one()
        } else {
            self.path.times[g]
        }
    }

    /// Value of the segment starting at global node `seg` at local time `s`.
    fn value_on(&self, seg: usize, s: Rational) -> Rational {
        let n = self.n();
        let (t0, t1) = (self.time(seg), self.time(seg + 1));
        let (y0, y1) = (self.path.values[seg % n], self.path.values[(seg + 1) % n]);
        if s == t0 {
            y0
        } else if s == t1 {
            y1
        } else {
            y0 + (y1 - y0) * (s - t0) / (t1 - t0)
        }
    }

    /// Segment index containing local time `s ∈ [0, 2)`.
    fn segment_at(&self, s: Rational) -> usize {
        let n = self.n();
        let local = if s >= one() { s - one() } else { s };
        let i = self.path.times.partition_point(|x| *x <= local) - 1;
        (if s >= one() { i + n } else { i }).min(2 * n - 1)
    }

    pub fn locate(&self, a: Rational, b: Rational) -> Location {
        let width = b - a;
        if width > one() {
            let locator = match &self.kind {
                Prepared::Sup { truncate: false, .. } => Locator::Sup,
                Prepared::Sup { truncate: true, .. } => Locator::TruncatedSup,
                Prepared::FirstHit { level, .. } => Locator::FirstHit(*level),
                Prepared::LastHit { level, .. } => Locator::LastHit(*level),
            };
            return locator.locate(self.path, a, b);
        }
        let base = a.floor();
        let la = a - base;
        let lb = b - base;
        let local = match &self.kind {
            Prepared::Sup { table, truncate } => self.sup(table, *truncate, la, lb),
            Prepared::FirstHit { level, segments } => self.first(*level, segments, la, lb),
            Prepared::LastHit { level, segments } => self.last(*level, segments, la, lb),
        };
        local.offset(base)
    }

    fn sup(&self, table: &SparseMax, truncate: bool, a: Rational, b: Rational) -> Location {
        let sa = self.segment_at(a);
        let sb = self.segment_at(b);
        let mut best = (a, self.value_on(sa, a));
        // Interior nodes strictly inside (a, b).
        let lo = sa + 1;
        let hi = if self.time(sb) == b { sb.saturating_sub(1) } else { sb };
        if lo <= hi {
            let g = table.argmax(lo, hi);
            let v = table.values[g];
            if v > best.1 {
                best = (self.time(g), v);
            }
        }
        let vb = self.value_on(sb, b);
        if vb > best.1 {
            best = (b, vb);
        }
        if truncate && best.1 < half() {
            Location::Infinity
        } else {
            Location::At(best.0)
        }
    }

    fn first(&self, level: Rational, segments: &[usize], a: Rational, b: Rational) -> Location {
        let start = self.segment_at(a);
        let from = segments.partition_point(|s| *s < start);
        for &seg in &segments[from..] {
            let t0 = self.time(seg);
            if t0 > b {
                break;
            }
            let s0 = if t0 < a { a } else { t0 };
            let t1 = self.time(seg + 1);
            let s1 = if t1 > b { b } else { t1 };
            if let Some(t) = hit_in_piece(s0, self.value_on(seg, s0), s1, self.value_on(seg, s1), level, true) {
                return Location::At(t);
            }
        }
        Location::Infinity
    }

    fn last(&self, level: Rational, segments: &[usize], a: Rational, b: Rational) -> Location {
        let end = self.segment_at(b);
        let upto = segments.partition_point(|s| *s <= end);
        for &seg in segments[..upto].iter().rev() {
            let t1 = self.time(seg + 1);
            if t1 < a {
                break;
            }
            let s1 = if t1 > b { b } else { t1 };
            let t0 = self.time(seg);
            let s0 = if t0 < a { a } else { t0 };
            if let Some(t) = hit_in_piece(s0, self.value_on(seg, s0), s1, self.value_on(seg, s1), level, false) {
                return Location::At(t);
            }
        }
        Location::Infinity
    }
}

/// Range arg-max with ties resolved to the smallest index.
struct SparseMax {
    values: Vec<Rational>,
    levels: Vec<Vec<usize>>,
}

impl SparseMax {
    fn new(values: Vec<Rational>) -> Self {
        let mut levels = vec![(0..values.len()).collect::<Vec<_>>()];
        let mut width = 1;
        while 2 * width <= values.len() {
            let prev = levels.last().unwrap();
            let next = (0..=values.len() - 2 * width)
                .map(|i| {
                    let (l, r) = (prev[i], prev[i + width]);
                    if values[r] > values[l] {
                        r
                    } else {
                        l
                    }
                })
                .collect();
            levels.push(next);
            width *= 2;
        }
        Self { values, levels }
    }

    fn argmax(&self, lo: usize, hi: usize) -> usize {
        let len = hi - lo + 1;
        let k = usize::BITS as usize - 1 - len.leading_zeros() as usize;
        let l = self.levels[k][lo];
        let r = self.levels[k][hi + 1 - (1 << k)];
        if self.values[r] > self.values[l] {
            r
        } else {
            l
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use proptest::prelude::*;

    fn path(nodes: &[(Rational, Rational)]) -> PiecewiseLinearPath {
        PiecewiseLinearPath::new(nodes.to_vec()).unwrap()
    }

    fn triangle() -> PiecewiseLinearPath {
        path(&[(zero(), zero()), (half(), one()), (one(), zero())])
    }

    #[test]
    fn eval_examples() {
        let g = triangle();
        assert_eq!(g.eval(rat(1, 4)), half());
        assert_eq!(g.eval(rat(3, 2)), one());
        assert_eq!(g.eval(rat(-1, 4)), half());
    }

    #[test]
    fn rejects_bad_nodes() {
        assert!(PiecewiseLinearPath::new(vec![(zero(), zero())]).is_err());
        assert!(PiecewiseLinearPath::new(vec![(zero(), zero()), (one(), one())]).is_err());
        assert!(PiecewiseLinearPath::new(vec![(zero(), zero()), (half(), one()), (half(), one()), (one(), zero())]).is_err());
    }

    #[test]
    fn shift_examples() {
        let g = triangle();
        assert_eq!(g.shift(zero()), g);
        assert_eq!(g.shift(one()), g);
        let h = g.shift(half());
        assert_eq!(h.eval(zero()), one());
        assert_eq!(sup_location(&h, zero(), rat(9, 10)), Location::At(zero()));
    }

    #[test]
    fn sup_location_examples() {
        let g = triangle();
        assert_eq!(sup_location(&g, rat(1, 5), rat(4, 5)), Location::At(half()));
        let c = PiecewiseLinearPath::constant(int(3));
        assert_eq!(sup_location(&c, rat(1, 3), rat(2, 3)), Location::At(rat(1, 3)));
        let twin = path(&[
            (zero(), zero()),
            (rat(3, 10), one()),
            (half(), zero()),
            (rat(7, 10), one()),
            (one(), zero()),
        ]);
        assert_eq!(sup_location(&twin, zero(), one()), Location::At(rat(3, 10)));
    }

    #[test]
    fn hit_examples() {
        let g = triangle();
        assert_eq!(first_hit(&g, half(), zero(), one()), Location::At(rat(1, 4)));
        assert_eq!(first_hit(&g, int(2), zero(), one()), Location::Infinity);
        assert_eq!(first_hit(&g, zero(), rat(1, 10), rat(9, 10)), Location::Infinity);
        assert_eq!(first_hit(&g, zero(), zero(), one()), Location::At(zero()));
        assert_eq!(last_hit(&g, half(), zero(), one()), Location::At(rat(3, 4)));
        let flat = PiecewiseLinearPath::constant(zero());
        assert_eq!(last_hit(&flat, zero(), rat(1, 5), rat(3, 5)), Location::At(rat(3, 5)));
        assert_eq!(last_hit(&g, int(-1), zero(), one()), Location::Infinity);
    }

    #[test]
    fn truncated_and_composite_examples() {
        let g = triangle();
        assert_eq!(truncated_sup_location(&g, zero(), one()), Location::At(half()));
        let low = path(&[(zero(), zero()), (half(), rat(1, 4)), (one(), zero())]);
        assert_eq!(truncated_sup_location(&low, zero(), one()), Location::Infinity);
        let edge = path(&[(zero(), zero()), (rat(2, 5), half()), (one(), zero())]);
        assert_eq!(truncated_sup_location(&edge, zero(), one()), Location::At(rat(2, 5)));

        assert_eq!(composite_location(&g, zero(), one()), Location::At(half()));
        let dip = path(&[(zero(), zero()), (rat(3, 10), int(-1)), (one(), zero())]);
        assert_eq!(composite_location(&dip, zero(), one()), Location::At(rat(3, 10)));
        let deep = path(&[(zero(), int(-2)), (half(), rat(-3, 2)), (one(), int(-2))]);
        assert_eq!(composite_branch(&deep), CompositeBranch::LastHitMinusTwo);
        assert_eq!(composite_location(&deep, rat(1, 10), rat(11, 10)), Location::At(one()));
    }

    #[test]
    fn locator_text_round_trip() {
        for l in [
            Locator::Sup,
            Locator::FirstHit(int(-1)),
            Locator::LastHit(rat(-3, 2)),
            Locator::TruncatedSup,
            Locator::Composite,
        ] {
            assert_eq!(Locator::parse(&l.to_string()).unwrap(), l);
        }
        assert!(Locator::parse("median").is_err());
    }

    pub(crate) fn arb_path() -> impl Strategy<Value = PiecewiseLinearPath> {
        (1usize..7).prop_flat_map(|n| {
            (
                proptest::collection::btree_set(1i128..24, n - 1),
                proptest::collection::vec(-6i128..=6, n),
            )
                .prop_map(|(cuts, ys)| {
                    let mut nodes = vec![(zero(), rat(ys[0], 2))];
                    for (c, y) in cuts.into_iter().zip(&ys[1..]) {
                        nodes.push((rat(c, 24), rat(*y, 2)));
                    }
                    nodes.push((one(), rat(ys[0], 2)));
                    PiecewiseLinearPath::new(nodes).unwrap()
                })
        })
    }

    fn arb_locator() -> impl Strategy<Value = Locator> {
        prop_oneof![
            Just(Locator::Sup),
            (-4i128..=4).prop_map(|l| Locator::FirstHit(rat(l, 2))),
            (-4i128..=4).prop_map(|l| Locator::LastHit(rat(l, 2))),
            Just(Locator::TruncatedSup),
            Just(Locator::Composite),
        ]
    }

    proptest! {
        #[test]
        fn prepared_agrees_with_scan(g in arb_path(), loc in arb_locator(), a in -40i128..40, w in 1i128..=48) {
            let a = rat(a, 24);
            let b = a + rat(w, 48);
            let prepared = PreparedLocator::new(&g, loc);
            prop_assert_eq!(prepared.locate(a, b), loc.locate(&g, a, b));
        }

        #[test]
        fn shift_matches_eval(g in arb_path(), c in -30i128..30, t in -30i128..30) {
            let (c, t) = (rat(c, 17), rat(t, 13));
            prop_assert_eq!(g.shift(c).eval(t), g.eval(t + c));
        }

        #[test]
        fn hits_match_dense_scan(g in arb_path(), level in -4i128..=4) {
            let level = rat(level, 2);
            // Node values are multiples of ½ and node times multiples of
            // 1/24, so any half-integer level hit shows up on a fine grid or
            // as a sign change between grid points.
            let grid: Vec<Rational> = (0..=240).map(|i| rat(i, 240)).collect();
            let touched = grid.windows(2).any(|w| {
                let (y0, y1) = (g.eval(w[0]) - level, g.eval(w[1]) - level);
                y0.is_zero() || y1.is_zero() || (y0.is_positive() != y1.is_positive())
            });
            prop_assert_eq!(first_hit(&g, level, zero(), one()).is_infinite(), !touched);
            prop_assert_eq!(last_hit(&g, level, zero(), one()).is_infinite(), !touched);
            prop_assert!(!sup_location(&g, zero(), one()).is_infinite());
        }
    }
}

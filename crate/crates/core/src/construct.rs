//! Periodic paths whose shifted locations have a prescribed law, and the
//! laws attaining the invariant density bound.
//!
//! The supremum construction places, per base block, an anchor followed by
//! a descending staircase of left-block plateau pairs, the central nodes at
//! height ½ and an ascending staircase of right-block pairs. Plateau pairs
//! and equal neighbours are joined by V-shaped dips.
//!
//! A zero atom at `0` or `T` cannot be produced by a continuous path unless
//! every component is a bare base block (then the anchors alone do it).
//! Otherwise a boundary budget `ε` is borrowed from another atom or from the
//! longest non-base block, and the plan records the realized law.

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::density::{Block, BlockDecomposition, BlockKind, LocationLaw, PiecewiseDensity};
use crate::error::{Error, Result};
use crate::membership::{check_class, check_tv, LawClass};
use crate::paths::PiecewiseLinearPath;
use crate::rational::{self, floor_int, half, int, is_integer, min_r, one, rat, zero, Rational};

/// Default boundary budget borrowed for zero boundary atoms.
pub fn default_budget() -> Rational {
    rat(1, 1 << 20)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComponentPlan {
    #[serde(with = "rational::as_str")]
    pub start: Rational,
    #[serde(with = "rational::as_str")]
    pub length: Rational,
    #[serde(with = "rational::as_str")]
    pub anchor_height: Rational,
    #[serde(serialize_with = "blocks_ser")]
    pub left: Vec<Block>,
    #[serde(serialize_with = "blocks_ser")]
    pub right: Vec<Block>,
    #[serde(serialize_with = "opt_block_ser")]
    pub central: Option<Block>,
    /// Extra length of the sub-½ excursion producing mass at infinity.
    #[serde(with = "rational::as_str")]
    pub escape: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConstructionPlan {
    pub m1: usize,
    #[serde(with = "rational::as_str")]
    pub d1: Rational,
    #[serde(with = "rational::as_str")]
    pub d2: Rational,
    pub components: Vec<ComponentPlan>,
    /// Whether the realized law equals the requested one.
    pub exact: bool,
    /// Mass moved to the boundary atoms when the target has a zero one.
    #[serde(with = "rational::as_str")]
    pub borrowed: Rational,
    #[serde(skip)]
    pub realized: LocationLaw,
}

impl ConstructionPlan {
    pub fn lengths(&self) -> Vec<Rational> {
        self.components.iter().map(|c| c.length).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Construction {
    pub path: PiecewiseLinearPath,
    pub plan: ConstructionPlan,
}

fn blocks_ser<S: serde::Serializer>(blocks: &[Block], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(blocks.len()))?;
    for b in blocks {
        seq.serialize_element(&[rational::format_rational(&b.lower), rational::format_rational(&b.upper)])?;
    }
    seq.end()
}

fn opt_block_ser<S: serde::Serializer>(block: &Option<Block>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match block {
        Some(b) => blocks_ser(std::slice::from_ref(b), s),
        None => s.serialize_none(),
    }
}

/// Path whose supremum location over `[0, T]` has law `law ∈ E¹_T`.
pub fn construct_invariant(law: &LocationLaw) -> Result<Construction> {
    construct_invariant_with_budget(law, default_budget())
}

pub fn construct_invariant_with_budget(law: &LocationLaw, budget: Rational) -> Result<Construction> {
    gate(law, LawClass::Invariant)?;
    build_supremum_path(law, false, budget)
}

/// Path whose truncated supremum location (level ½) has law `law`, a law
/// of the extreme class with `f ≥ 1` and a positive atom at infinity.
pub fn construct_invariant_with_escape(law: &LocationLaw) -> Result<Construction> {
    construct_invariant_with_escape_budget(law, default_budget())
}

pub fn construct_invariant_with_escape_budget(law: &LocationLaw, budget: Rational) -> Result<Construction> {
    if law.atom_infinity().is_zero() {
        return Err(Error::Precondition("no mass at infinity; use the invariant construction".into()));
    }
    gate(law, LawClass::Extreme)?;
    if law.density().inf() < one() {
        return Err(Error::MembershipGate {
            class: "ET".into(),
            reason: "density drops below 1".into(),
        });
    }
    build_supremum_path(law, true, budget)
}

fn gate(law: &LocationLaw, class: LawClass) -> Result<()> {
    let report = check_class(law, class);
    if report.is_member() {
        Ok(())
    } else {
        Err(Error::MembershipGate {
            class: class.to_string(),
            reason: format!("{:?}", report.violated_conditions),
        })
    }
}

fn build_supremum_path(law: &LocationLaw, escape: bool, budget: Rational) -> Result<Construction> {
    let horizon = law.horizon();
    let decomposition = law.density().block_decomposition()?;
    let m1 = decomposition.count(BlockKind::Base);
    if m1 == 0 {
        return Err(Error::Precondition("no base block".into()));
    }
    let mut blocks: Vec<Block> = decomposition.blocks.clone();
    let (mut a, mut b, mut c) = (law.atom_zero(), law.atom_horizon(), law.atom_infinity());
    let bare = blocks.iter().all(|blk| blk.kind == BlockKind::Base);
    let chain = a.is_zero() && b.is_zero() && !escape && bare;

    let mut borrowed = zero();
    if !chain {
        let need = usize::from(a.is_zero()) + usize::from(b.is_zero());
        if need > 0 {
            let eps = borrow(&mut blocks, &mut [&mut a, &mut b, &mut c], need, budget, horizon)?;
            if a.is_zero() {
                a = eps;
            }
            if b.is_zero() {
                b = eps;
            }
            borrowed = eps * int(need as i128);
        }
    }

    let realized_density = BlockDecomposition {
        horizon,
        blocks: blocks.clone(),
    }
    .reconstruct();
    let realized = LocationLaw::new(realized_density, a, b, c)?;

    let centrals: Vec<Block> = blocks.iter().filter(|x| x.kind == BlockKind::Central).cloned().collect();
    let offset = usize::from(escape);
    if centrals.len() + offset > m1 {
        return Err(Error::Precondition(format!(
            "{} central blocks do not fit into {} components",
            centrals.len(),
            m1 - offset
        )));
    }
    let m = int(m1 as i128);
    let d1 = a / m;
    let d2 = b / m;

    let mut components: Vec<ComponentPlan> = (0..m1)
        .map(|j| ComponentPlan {
            start: zero(),
            length: zero(),
            anchor_height: if chain { int(2) } else { int(2) - int(j as i128) / (int(4) * m) },
            left: Vec::new(),
            right: Vec::new(),
            central: None,
            escape: if escape && j == 0 { c } else { zero() },
        })
        .collect();
    for (i, blk) in centrals.into_iter().enumerate() {
        components[i + offset].central = Some(blk);
    }
    for (i, blk) in blocks.iter().filter(|x| x.kind == BlockKind::Left).enumerate() {
        components[i % m1].left.push(blk.clone());
    }
    for (i, blk) in blocks.iter().filter(|x| x.kind == BlockKind::Right).enumerate() {
        components[i % m1].right.push(blk.clone());
    }

    let mut points: Vec<(Rational, Rational)> = Vec::new();
    let mut pos = zero();
    for comp in components.iter_mut() {
        comp.start = pos;
        points.push((pos, comp.anchor_height));
        if chain {
            comp.length = horizon;
            pos += horizon;
            continue;
        }
        let mut q = zero();
        let mut slice = d1;
        let mut level = one();
        for blk in &comp.left {
            slice /= int(2);
            level /= int(2);
            // Descending stretches of length d1/4, d1/8, ...
            let p = q + slice / int(2);
            q = p + blk.upper;
            points.push((pos + p, one() + level));
            points.push((pos + q, one() + level));
        }
        let c0 = d1 + comp.left.iter().map(|x| x.upper).sum::<Rational>();
        points.push((pos + c0, half()));
        let c2 = if comp.escape.is_positive() {
            c0 + horizon + comp.escape
        } else if let Some(central) = &comp.central {
            points.push((pos + c0 + central.upper, half()));
            c0 + central.upper + horizon - central.lower
        } else {
            c0 + horizon
        };
        points.push((pos + c2, half()));
        let length = c2 + comp.right.iter().map(|x| horizon - x.lower).sum::<Rational>() + d2;
        let mut right_points = Vec::new();
        let mut r = length;
        let mut slice = d2;
        let mut level = one();
        for blk in &comp.right {
            slice /= int(2);
            level /= int(2);
            r -= slice / int(2);
            right_points.push((pos + r, one() + level));
            r -= horizon - blk.lower;
            right_points.push((pos + r, one() + level));
        }
        right_points.reverse();
        points.extend(right_points);
        comp.length = length;
        pos += length;
    }
    if pos != one() {
        return Err(Error::Precondition(format!("component lengths sum to {pos}, not 1")));
    }
    points.push((one(), components[0].anchor_height));

    let nodes = join_points(&points, |h, gap| min_r(h / int(2), gap / int(2)));
    let path = PiecewiseLinearPath::new(nodes)?;
    Ok(Construction {
        path,
        plan: ConstructionPlan {
            m1,
            d1,
            d2,
            components,
            exact: borrowed.is_zero(),
            borrowed,
            realized,
        },
    })
}

/// Moves `need · ε` of mass to the empty boundary atoms, taking it from the
/// largest positive atom or, failing that, by trimming the longest
/// non-base block. Returns `ε`.
fn borrow(
    blocks: &mut [Block],
    atoms: &mut [&mut Rational; 3],
    need: usize,
    budget: Rational,
    horizon: Rational,
) -> Result<Rational> {
    let total = int(need as i128);
    let donor = (0..3)
        .filter(|&i| atoms[i].is_positive())
        .max_by(|&i, &j| atoms[i].cmp(&atoms[j]).then(j.cmp(&i)));
    if let Some(i) = donor {
        let eps = min_r(budget, *atoms[i] / (int(2) * total));
        *atoms[i] -= eps * total;
        return Ok(eps);
    }
    let (idx, _) = blocks
        .iter()
        .enumerate()
        .filter(|(_, x)| x.kind != BlockKind::Base)
        .max_by(|(i, x), (j, y)| x.length().cmp(&y.length()).then(j.cmp(i)))
        .ok_or_else(|| Error::Precondition("nothing to borrow boundary mass from".into()))?;
    let blk = &mut blocks[idx];
    let eps = min_r(budget, blk.length() / (int(4) * total));
    match blk.kind {
        BlockKind::Right => blk.lower += eps * total,
        _ => blk.upper -= eps * total,
    }
    debug_assert!(blk.upper <= horizon);
    Ok(eps)
}

/// Adds a V-shaped dip between equal neighbours, with depth chosen by
/// `depth(height, gap)`, and straight lines elsewhere.
fn join_points(points: &[(Rational, Rational)], depth: impl Fn(Rational, Rational) -> Rational) -> Vec<(Rational, Rational)> {
    let mut nodes = Vec::with_capacity(2 * points.len());
    for w in points.windows(2) {
        let ((t0, y0), (t1, y1)) = (w[0], w[1]);
        nodes.push((t0, y0));
        if y0 == y1 {
            let gap = t1 - t0;
            nodes.push((t0 + gap / int(2), y0 - depth(y0, gap)));
        }
    }
    nodes.push(*points.last().expect("nonempty"));
    nodes
}

/// Hit schedule of a first-time construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FirstTimePlan {
    /// Gap lengths `u_i = f⁻¹(i + 1)`.
    #[serde(with = "rational::vec_as_str")]
    pub levels: Vec<Rational>,
    /// Times where the path equals −1 before the flat stretch.
    #[serde(with = "rational::vec_as_str")]
    pub hits: Vec<Rational>,
    /// Flat stretch at −1 carrying the atom at 0.
    #[serde(with = "rational::vec_as_str")]
    pub flat: Vec<Rational>,
    /// Largest slope used by the dips.
    #[serde(with = "rational::as_str")]
    pub max_slope: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FirstTimeConstruction {
    pub path: PiecewiseLinearPath,
    pub plan: FirstTimePlan,
}

/// Path whose first hitting time of −1 over `[0, T]` has law `law ∈ E^M_T`.
pub fn construct_first_time(law: &LocationLaw) -> Result<FirstTimeConstruction> {
    gate(law, LawClass::FirstTime)?;
    let f = law.density();
    let top = floor_int(&f.sup());
    let a = law.atom_zero();
    if top == 0 {
        let (value, flat) = if a == one() {
            (-one(), vec![zero(), one()])
        } else {
            (zero(), Vec::new())
        };
        return Ok(FirstTimeConstruction {
            path: PiecewiseLinearPath::constant(value),
            plan: FirstTimePlan {
                levels: Vec::new(),
                hits: Vec::new(),
                flat,
                max_slope: zero(),
            },
        });
    }
    let levels: Vec<Rational> = (1..=top).map(|i| f.generalized_inverse(int(i))).collect::<Result<_>>()?;
    let mut hits = vec![zero()];
    for u in &levels[1..] {
        let last = *hits.last().unwrap();
        hits.push(last + u);
    }
    let s_last = *hits.last().unwrap();
    let mut points: Vec<(Rational, Rational)> = hits.iter().map(|s| (*s, -one())).collect();
    let mut flat = Vec::new();
    if a.is_positive() {
        points.push((s_last + a, -one()));
        flat = vec![s_last, s_last + a];
    }
    points.push((one(), -one()));

    // Unit-slope dips everywhere except along the flat stretch.
    let mut nodes = Vec::new();
    for w in points.windows(2) {
        let ((t0, y0), (t1, _)) = (w[0], w[1]);
        nodes.push((t0, y0));
        let is_flat = a.is_positive() && t0 == s_last;
        if !is_flat {
            let gap = t1 - t0;
            nodes.push((t0 + gap / int(2), y0 - gap / int(2)));
        }
    }
    nodes.push((one(), -one()));
    Ok(FirstTimeConstruction {
        path: PiecewiseLinearPath::new(nodes)?,
        plan: FirstTimePlan {
            levels,
            hits,
            flat,
            max_slope: one(),
        },
    })
}

/// `max(⌊(1−T)/t⌋, ⌊(1−T)/(T−t)⌋) + 2`, the largest density value an
/// invariant location can have at `t`.
pub fn density_bound(t: Rational, horizon: Rational) -> Result<i128> {
    if !(t.is_positive() && t < horizon && horizon <= one()) {
        return Err(Error::OutOfRange(format!("need 0 < t < T ≤ 1, got t = {t}, T = {horizon}")));
    }
    let rest = one() - horizon;
    Ok(floor_int(&(rest / t)).max(floor_int(&(rest / (horizon - t)))) + 2)
}

/// A law of the invariant class whose density reaches [`density_bound`] at
/// `t` on `[t, t + eps)`; the remaining mass is split between the atoms at
/// `0` and `T`.
pub fn bound_attaining_law(t: Rational, horizon: Rational, eps: Rational) -> Result<LocationLaw> {
    density_bound(t, horizon)?;
    if !eps.is_positive() || t + eps >= horizon {
        return Err(Error::Precondition(format!("plateau width {eps} must be positive and end before T")));
    }
    let rest = one() - horizon;
    let left_half = t < horizon / int(2);
    let ratio = if left_half { rest / t } else { rest / (horizon - t) };
    if is_integer(&ratio) {
        return Err(Error::Precondition(format!("(1 − T)/{} = {ratio} is an integer", if left_half { "t" } else { "(T − t)" })));
    }
    let k = floor_int(&ratio);
    let (values, max_eps) = if left_half {
        (vec![int(1 + k), int(2 + k), one()], (rest - int(k) * t) / int(1 + k))
    } else {
        (vec![one(), int(2 + k), int(1 + k)], rest - int(k) * (horizon - t))
    };
    if eps > max_eps {
        return Err(Error::Precondition(format!("plateau width {eps} exceeds {max_eps}")));
    }
    let density = PiecewiseDensity::step(vec![zero(), t, t + eps, horizon], values)?;
    let atom = (one() - density.mass()) / int(2);
    let law = LocationLaw::new(density, atom, atom, zero())?;
    debug_assert!(check_class(&law, LawClass::Invariant).is_member());
    Ok(law)
}

/// Whether `f − 1` satisfies the variation condition (needed for a
/// component free of central blocks).
pub fn shifted_tv_holds(law: &LocationLaw) -> bool {
    check_tv(&law.density().offset(-one())).is_member()
}

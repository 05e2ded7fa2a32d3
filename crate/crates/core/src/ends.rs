//! Topological type of (possibly infinite-type) surfaces from the invariants
//! of their space of ends, and the three admissibility properties satisfied
//! by surfaces in the support of an ergodic invariant random subgroup of
//! `PSL(2, R)`:
//!
//! 1. more than two non-cuspidal ends forces a Cantor set of them;
//! 2. an end of genus zero forces genus zero overall;
//! 3. cuspidal ends, if any, are dense.
//!
//! Classification is a finite decision table over [`EndsDescriptor`]s.
//! Descriptors outside the table are reported as ambiguous.

use serde::{Deserialize, Serialize};

use crate::error::invalid;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Genus {
    Finite(u64),
    Infinite,
}

/// Shape of the closed set of non-cuspidal ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoncuspEnds {
    Zero,
    One,
    Two,
    /// Finitely many, at least three.
    Many(u64),
    Cantor,
    /// Infinite but not perfect (a Cantor set plus isolated points, a
    /// convergent sequence, ...).
    NonPerfect,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CuspEnds {
    None,
    Finite(u64),
    InfiniteDense,
    InfiniteNotDense,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FiniteType {
    pub genus: u64,
    pub punctures: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EndsDescriptor {
    pub total_genus: Genus,
    pub noncusp_ends: NoncuspEnds,
    /// Every non-cuspidal end has infinite genus.
    pub every_end_infinite_genus: bool,
    /// Some non-cuspidal end has genus zero.
    pub some_end_genus_zero: bool,
    pub cusp_ends: CuspEnds,
    pub finite_type: Option<FiniteType>,
}

impl EndsDescriptor {
    pub fn finite_type(genus: u64, punctures: u64) -> Self {
        EndsDescriptor {
            total_genus: Genus::Finite(genus),
            noncusp_ends: NoncuspEnds::Zero,
            every_end_infinite_genus: false,
            some_end_genus_zero: false,
            cusp_ends: if punctures == 0 { CuspEnds::None } else { CuspEnds::Finite(punctures) },
            finite_type: Some(FiniteType { genus, punctures }),
        }
    }

    /// Infinite-type descriptor where every non-cuspidal end has the same
    /// genus (`0` or infinite).
    pub fn infinite(noncusp: NoncuspEnds, infinite_genus: bool, cusps: CuspEnds) -> Self {
        EndsDescriptor {
            total_genus: if infinite_genus { Genus::Infinite } else { Genus::Finite(0) },
            noncusp_ends: noncusp,
            every_end_infinite_genus: infinite_genus,
            some_end_genus_zero: !infinite_genus,
            cusp_ends: cusps,
            finite_type: None,
        }
    }

    /// Structural consistency, independent of admissibility.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InconsistentDescriptor(m.to_string()));
        if self.every_end_infinite_genus && self.total_genus != Genus::Infinite {
            return bad("every end has infinite genus but total genus is finite");
        }
        match (self.noncusp_ends, self.finite_type) {
            (NoncuspEnds::Zero, None) => return bad("no non-cuspidal end requires a finite-type surface"),
            (NoncuspEnds::Zero, Some(ft)) => {
                if self.total_genus != Genus::Finite(ft.genus) {
                    return bad("finite-type genus disagrees with total genus");
                }
                let expected = if ft.punctures == 0 { CuspEnds::None } else { CuspEnds::Finite(ft.punctures) };
                if self.cusp_ends != expected {
                    return bad("finite-type punctures disagree with cusp ends");
                }
                if self.every_end_infinite_genus || self.some_end_genus_zero {
                    return bad("end-genus flags are set on a surface without non-cuspidal ends");
                }
            }
            (_, Some(_)) => return bad("finite-type data on a surface with non-cuspidal ends"),
            (nc, None) => {
                if let NoncuspEnds::Many(k) = nc {
                    if k < 3 {
                        return bad("Many(k) needs k >= 3");
                    }
                }
                if self.every_end_infinite_genus == self.some_end_genus_zero {
                    return bad("ends have genus zero or infinity: exactly one end-genus flag must hold");
                }
            }
        }
        if let CuspEnds::Finite(0) = self.cusp_ends {
            return bad("use CuspEnds::None for zero cusps");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Violation {
    /// More than two non-cuspidal ends that do not form a Cantor set.
    NoncuspEndsNotCantor,
    /// A genus-zero end on a surface of nonzero genus.
    GenusZeroEndWithGenus,
    /// Cuspidal ends that are not dense in the end space.
    CuspEndsNotDense,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Admissibility {
    pub violations: Vec<Violation>,
    /// Finite-type surfaces satisfy the properties vacuously.
    pub vacuous: bool,
}

impl Admissibility {
    pub fn is_admissible(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_irs_admissible(d: &EndsDescriptor) -> Result<Admissibility> {
    d.validate()?;
    if d.finite_type.is_some() {
        return Ok(Admissibility { violations: Vec::new(), vacuous: true });
    }
    let mut violations = Vec::new();
    if matches!(d.noncusp_ends, NoncuspEnds::Many(_) | NoncuspEnds::NonPerfect) {
        violations.push(Violation::NoncuspEndsNotCantor);
    }
    if d.some_end_genus_zero && d.total_genus != Genus::Finite(0) {
        violations.push(Violation::GenusZeroEndWithGenus);
    }
    if matches!(d.cusp_ends, CuspEnds::Finite(_) | CuspEnds::InfiniteNotDense) {
        violations.push(Violation::CuspEndsNotDense);
    }
    Ok(Admissibility { violations, vacuous: false })
}

/// Infinite-type surfaces without punctures that can carry dense cusps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BaseSurface {
    LochNess,
    JacobLadder,
    CantorTree,
    BloomingCantorTree,
    Plane,
    Cylinder,
}

impl BaseSurface {
    pub const ALL: [BaseSurface; 6] = [
        BaseSurface::LochNess,
        BaseSurface::JacobLadder,
        BaseSurface::CantorTree,
        BaseSurface::BloomingCantorTree,
        BaseSurface::Plane,
        BaseSurface::Cylinder,
    ];

    fn ends(self) -> (NoncuspEnds, bool) {
        match self {
            BaseSurface::LochNess => (NoncuspEnds::One, true),
            BaseSurface::JacobLadder => (NoncuspEnds::Two, true),
            BaseSurface::CantorTree => (NoncuspEnds::Cantor, false),
            BaseSurface::BloomingCantorTree => (NoncuspEnds::Cantor, true),
            BaseSurface::Plane => (NoncuspEnds::One, false),
            BaseSurface::Cylinder => (NoncuspEnds::Two, false),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SurfaceType {
    FiniteType { genus: u64, punctures: u64 },
    Base(BaseSurface),
    /// The base minus a locally finite set of points meeting every
    /// neighbourhood of every end.
    Punctured(BaseSurface),
}

impl SurfaceType {
    /// The plane and the cylinder satisfy the three properties but do not
    /// occur for non-atomic invariant random subgroups.
    pub fn is_irs_realizable(&self) -> bool {
        !matches!(self, SurfaceType::Base(BaseSurface::Plane | BaseSurface::Cylinder))
    }

    /// The ten infinite types that occur, followed by the plane and the
    /// cylinder.
    pub fn infinite_types() -> Vec<SurfaceType> {
        let mut v: Vec<SurfaceType> = BaseSurface::ALL[..4].iter().map(|&b| SurfaceType::Base(b)).collect();
        v.extend(BaseSurface::ALL.iter().map(|&b| SurfaceType::Punctured(b)));
        v.push(SurfaceType::Base(BaseSurface::Plane));
        v.push(SurfaceType::Base(BaseSurface::Cylinder));
        v
    }

    pub fn canonical_descriptor(&self) -> EndsDescriptor {
        match *self {
            SurfaceType::FiniteType { genus, punctures } => EndsDescriptor::finite_type(genus, punctures),
            SurfaceType::Base(b) => {
                let (nc, inf) = b.ends();
                EndsDescriptor::infinite(nc, inf, CuspEnds::None)
            }
            SurfaceType::Punctured(b) => {
                let (nc, inf) = b.ends();
                EndsDescriptor::infinite(nc, inf, CuspEnds::InfiniteDense)
            }
        }
    }
}

pub fn classify(d: &EndsDescriptor) -> Result<SurfaceType> {
    let adm = check_irs_admissible(d)?;
    if !adm.is_admissible() {
        return Err(Error::NotAdmissible(format!("{:?}", adm.violations)));
    }
    if let Some(ft) = d.finite_type {
        return Ok(SurfaceType::FiniteType { genus: ft.genus, punctures: ft.punctures });
    }
    let infinite_genus = match (d.total_genus, d.every_end_infinite_genus) {
        (Genus::Infinite, true) => true,
        (Genus::Finite(0), false) => false,
        _ => return Err(Error::Ambiguous(format!("genus data {:?} outside the decision table", d.total_genus))),
    };
    let base = BaseSurface::ALL
        .iter()
        .copied()
        .find(|b| b.ends() == (d.noncusp_ends, infinite_genus))
        .ok_or_else(|| Error::Ambiguous(format!("end space {:?} outside the decision table", d.noncusp_ends)))?;
    match d.cusp_ends {
        CuspEnds::None => Ok(SurfaceType::Base(base)),
        CuspEnds::InfiniteDense => Ok(SurfaceType::Punctured(base)),
        other => Err(Error::Ambiguous(format!("cusp ends {other:?} outside the decision table"))),
    }
}

/// One complementary component of a compact exhaustion, with the handles
/// added at its level and the components it splits into one level deeper.
/// A childless non-cusp node below the last level is capped off (no end).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExhaustionTree {
    #[serde(default)]
    pub handles_added: u64,
    #[serde(default)]
    pub cusp_leaf: bool,
    #[serde(default)]
    pub children: Vec<ExhaustionTree>,
}

/// Default number of consecutive agreeing depths required for stability.
pub const DEFAULT_STABILITY_DEPTHS: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExhaustionReading {
    pub descriptor: EndsDescriptor,
    pub stable: bool,
}

impl ExhaustionTree {
    pub fn leaf() -> Self {
        ExhaustionTree { handles_added: 0, cusp_leaf: false, children: Vec::new() }
    }

    pub fn cusp() -> Self {
        ExhaustionTree { handles_added: 0, cusp_leaf: true, children: Vec::new() }
    }

    pub fn node(handles_added: u64, children: Vec<ExhaustionTree>) -> Self {
        ExhaustionTree { handles_added, cusp_leaf: false, children }
    }

    /// Chain of `height + 1` nodes with `handles` at every level.
    pub fn chain(height: usize, handles: u64) -> Self {
        let mut t = ExhaustionTree::node(handles, Vec::new());
        for _ in 0..height {
            t = ExhaustionTree::node(handles, vec![t]);
        }
        t
    }

    /// Complete binary tree of the given height.
    pub fn binary(height: usize, handles: u64) -> Self {
        if height == 0 {
            ExhaustionTree::node(handles, Vec::new())
        } else {
            let c = ExhaustionTree::binary(height - 1, handles);
            ExhaustionTree::node(handles, vec![c.clone(), c])
        }
    }

    pub fn height(&self) -> usize {
        self.children.iter().map(|c| c.height() + 1).max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cusp_leaf && !self.children.is_empty() {
            return invalid("cusp leaves have no children");
        }
        self.children.iter().try_for_each(|c| c.validate())
    }

    /// Reads the end invariants off the first `depth` levels and reports
    /// whether they agree over the last `stability` depths.
    pub fn descriptor(&self, depth: usize, stability: usize) -> Result<ExhaustionReading> {
        self.validate()?;
        if depth == 0 {
            return invalid("depth must be at least 1");
        }
        if depth > self.height() {
            return invalid(format!("depth {depth} exceeds tree height {}", self.height()));
        }
        if stability == 0 {
            return invalid("stability window must be at least 1");
        }
        let descriptor = self.descriptor_at(depth);
        let stable = depth >= stability && (depth + 1 - stability..depth).all(|j| self.descriptor_at(j) == descriptor);
        Ok(ExhaustionReading { descriptor, stable })
    }

    /// Whether this node reaches level `target` (relative) through non-cusp
    /// nodes.
    fn reaches(&self, target: usize) -> bool {
        if self.cusp_leaf {
            return false;
        }
        target == 0 || self.children.iter().any(|c| c.reaches(target - 1))
    }

    fn descriptor_at(&self, depth: usize) -> EndsDescriptor {
        // live nodes at each level: non-cusp nodes with a descendant at `depth`
        let mut levels: Vec<Vec<&ExhaustionTree>> = vec![vec![self]];
        let mut handles_total = self.handles_added;
        let mut cusps = 0u64;
        let mut new_cusps_at_last = 0u64;
        let mut spawning_parents = 0usize;
        for level in 1..=depth {
            let mut next = Vec::new();
            let prev = &levels[level - 1];
            for &node in prev {
                let mut spawned = false;
                for c in &node.children {
                    if c.cusp_leaf {
                        cusps += 1;
                        spawned = true;
                        if level == depth {
                            new_cusps_at_last += 1;
                        }
                    } else {
                        handles_total += c.handles_added;
                        next.push(c);
                    }
                }
                if spawned && level == depth && node.reaches(depth - level + 1) {
                    spawning_parents += 1;
                }
            }
            levels.push(next);
        }
        let live = |level: usize| -> Vec<&ExhaustionTree> {
            levels[level].iter().copied().filter(|n| n.reaches(depth - level)).collect()
        };
        let ends = live(depth);
        if ends.is_empty() {
            return EndsDescriptor::finite_type(handles_total, cusps);
        }
        let parents = if depth >= 1 { live(depth - 1) } else { Vec::new() };
        let live_children =
            |p: &ExhaustionTree| p.children.iter().filter(|c| !c.cusp_leaf && c.reaches(0)).count();
        let noncusp_ends = if depth == 0 || ends.len() == parents.len() {
            match ends.len() {
                1 => NoncuspEnds::One,
                2 => NoncuspEnds::Two,
                k => NoncuspEnds::Many(k as u64),
            }
        } else if parents.iter().all(|p| live_children(p) >= 2) {
            NoncuspEnds::Cantor
        } else {
            NoncuspEnds::NonPerfect
        };
        let with_handles = ends.iter().filter(|n| n.handles_added > 0).count();
        let every_inf = with_handles == ends.len();
        let cusp_ends = if cusps == 0 {
            CuspEnds::None
        } else if new_cusps_at_last == 0 {
            CuspEnds::Finite(cusps)
        } else if spawning_parents == parents.len() {
            CuspEnds::InfiniteDense
        } else {
            CuspEnds::InfiniteNotDense
        };
        EndsDescriptor {
            total_genus: if with_handles > 0 { Genus::Infinite } else { Genus::Finite(handles_total) },
            noncusp_ends,
            every_end_infinite_genus: every_inf,
            some_end_genus_zero: !every_inf,
            cusp_ends,
            finite_type: None,
        }
    }
}

/// Convenience wrapper with the default stability window.
pub fn descriptor_from_exhaustion(t: &ExhaustionTree, depth: usize) -> Result<ExhaustionReading> {
    t.descriptor(depth, DEFAULT_STABILITY_DEPTHS)
}

//! Finite boxes of Z^d, nearest-neighbour adjacency, outer boundaries and
//! bond sets.
//!
//! Sites inside a box are numbered lexicographically with the last axis
//! running fastest, so index order and `Ord` on [`Site`] agree.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site(Vec<i64>);

impl Site {
    pub fn new(coords: Vec<i64>) -> Self {
        Site(coords)
    }

    pub fn origin(d: usize) -> Self {
        Site(vec![0; d])
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn l1_distance(&self, other: &Site) -> i64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum()
    }

    /// Parity of the coordinate sum.
    pub fn is_even(&self) -> bool {
        self.0.iter().map(|x| x.abs()).sum::<i64>() % 2 == 0
    }

    fn shifted(&self, axis: usize, by: i64) -> Site {
        let mut c = self.0.clone();
        c[axis] += by;
        Site(c)
    }
}

impl From<&[i64]> for Site {
    fn from(c: &[i64]) -> Self {
        Site(c.to_vec())
    }
}

impl<const N: usize> From<[i64; N]> for Site {
    fn from(c: [i64; N]) -> Self {
        Site(c.to_vec())
    }
}

/// The 2d nearest neighbours, axis by axis, minus before plus.
pub fn neighbors(site: &Site) -> Vec<Site> {
    let mut out = Vec::with_capacity(2 * site.dimension());
    for axis in 0..site.dimension() {
        out.push(site.shifted(axis, -1));
        out.push(site.shifted(axis, 1));
    }
    out
}

/// Axis-aligned box `[lower, upper]` (inclusive) in Z^d.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LatticeBox {
    lower: Vec<i64>,
    upper: Vec<i64>,
}

impl LatticeBox {
    pub fn new(lower: Vec<i64>, upper: Vec<i64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidParameter(format!(
                "box corners {lower:?} and {upper:?} must share a positive dimension"
            )));
        }
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(Error::InvalidParameter(format!(
                "box lower corner {lower:?} exceeds upper corner {upper:?}"
            )));
        }
        Ok(Self { lower, upper })
    }

    /// Cube of side `side` containing the origin, `[-side/2, side - 1 - side/2]^d`.
    pub fn cube(d: usize, side: usize) -> Result<Self> {
        if d == 0 || side == 0 {
            return Err(Error::InvalidParameter(format!(
                "cube needs positive dimension and side, got d={d}, side={side}"
            )));
        }
        let lo = -((side / 2) as i64);
        let hi = lo + side as i64 - 1;
        Self::new(vec![lo; d], vec![hi; d])
    }

    /// Single-site box.
    pub fn singleton(site: &Site) -> Self {
        Self {
            lower: site.0.clone(),
            upper: site.0.clone(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[i64] {
        &self.lower
    }

    pub fn upper(&self) -> &[i64] {
        &self.upper
    }

    pub fn side_lengths(&self) -> Vec<usize> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (u - l + 1) as usize)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.side_lengths().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, site: &Site) -> bool {
        site.dimension() == self.dimension()
            && site
                .0
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (l, u))| l <= x && x <= u)
    }

    /// Box grown by `k` sites along every axis in both directions.
    pub fn expanded(&self, k: i64) -> Self {
        Self {
            lower: self.lower.iter().map(|x| x - k).collect(),
            upper: self.upper.iter().map(|x| x + k).collect(),
        }
    }

    /// Row-major strides, last axis fastest.
    pub fn strides(&self) -> Vec<usize> {
        let sides = self.side_lengths();
        let mut strides = vec![1usize; sides.len()];
        for axis in (0..sides.len().saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * sides[axis + 1];
        }
        strides
    }

    pub fn index_of(&self, site: &Site) -> Option<usize> {
        if !self.contains(site) {
            return None;
        }
        Some(
            site.0
                .iter()
                .zip(&self.lower)
                .zip(self.strides())
                .map(|((x, l), s)| (x - l) as usize * s)
                .sum(),
        )
    }

    pub fn site_at(&self, mut index: usize) -> Site {
        let sides = self.side_lengths();
        let mut coords = vec![0; sides.len()];
        for axis in (0..sides.len()).rev() {
            coords[axis] = self.lower[axis] + (index % sides[axis]) as i64;
            index /= sides[axis];
        }
        Site(coords)
    }

    /// All sites in lexicographic order.
    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.len()).map(move |i| self.site_at(i))
    }

    /// Number of coordinates of `site` lying outside the box.
    fn axes_outside(&self, site: &Site) -> usize {
        site.0
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .filter(|(x, (l, u))| x < l || x > u)
            .count()
    }

    /// Outer boundary {j outside the box with a neighbour inside}, lexicographic.
    pub fn outer_boundary(&self) -> Vec<Site> {
        self.expanded(1)
            .sites()
            .filter(|s| self.axes_outside(s) == 1)
            .collect()
    }

    pub fn on_outer_boundary(&self, site: &Site) -> bool {
        site.dimension() == self.dimension() && self.axes_outside(site) == 1 && self.expanded(1).contains(site)
    }

    /// Sites of the box with at least one neighbour outside it.
    pub fn inner_layer(&self) -> Vec<Site> {
        self.sites()
            .filter(|s| neighbors(s).iter().any(|n| !self.contains(n)))
            .collect()
    }

    /// Bonds with at least one endpoint in the box.
    pub fn bonds_touching(&self) -> BondSet {
        let mut set = BTreeSet::new();
        for site in self.sites() {
            for n in neighbors(&site) {
                set.insert(Bond::new(site.clone(), n));
            }
        }
        BondSet(set.into_iter().collect())
    }
}

/// Unordered nearest-neighbour pair, stored with the smaller site first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bond(Site, Site);

impl Bond {
    fn new(a: Site, b: Site) -> Self {
        if a <= b {
            Bond(a, b)
        } else {
            Bond(b, a)
        }
    }

    pub fn endpoints(&self) -> (&Site, &Site) {
        (&self.0, &self.1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BondSet(Vec<Bond>);

impl BondSet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Bond> {
        self.0.iter()
    }
}

/// Flat indexing of a box together with its outer boundary.
///
/// Storage covers the box grown by one layer; the corner cells of that frame
/// are not part of the outer boundary and are never read.
#[derive(Clone, Debug)]
pub struct Frame {
    region: LatticeBox,
    frame: LatticeBox,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    bonds: Vec<(usize, usize)>,
    offsets: Vec<isize>,
}

impl Frame {
    pub fn new(region: &LatticeBox) -> Self {
        let frame = region.expanded(1);
        let interior: Vec<usize> = region
            .sites()
            .map(|s| frame.index_of(&s).expect("box lies inside its frame"))
            .collect();
        let boundary: Vec<usize> = region
            .outer_boundary()
            .iter()
            .map(|s| frame.index_of(s).expect("boundary lies inside the frame"))
            .collect();
        let strides = frame.strides();
        let mut offsets = Vec::with_capacity(2 * strides.len());
        for s in &strides {
            offsets.push(-(*s as isize));
            offsets.push(*s as isize);
        }
        // Every bond of the touching set has an interior endpoint, so walking
        // the interior and keeping pairs once yields the set without Site keys.
        let mut bonds = Vec::new();
        for &i in &interior {
            for &off in &offsets {
                let j = (i as isize + off) as usize;
                let j_inside = region.contains(&frame.site_at(j));
                if !j_inside || i < j {
                    bonds.push((i.min(j), i.max(j)));
                }
            }
        }
        bonds.sort_unstable();
        Self {
            region: region.clone(),
            frame,
            interior,
            boundary,
            bonds,
            offsets,
        }
    }

    pub fn region(&self) -> &LatticeBox {
        &self.region
    }

    /// The box grown by one layer; flat indices refer to this box.
    pub fn frame_box(&self) -> &LatticeBox {
        &self.frame
    }

    pub fn storage_len(&self) -> usize {
        self.frame.len()
    }

    /// Flat indices of the box sites, lexicographic.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    /// Flat indices of the outer boundary, lexicographic.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    /// Bonds with at least one endpoint in the box, as flat index pairs.
    pub fn bonds(&self) -> &[(usize, usize)] {
        &self.bonds
    }

    /// Flat-index offsets of the 2d neighbours, valid from any box site.
    pub fn offsets(&self) -> &[isize] {
        &self.offsets
    }

    pub fn index_of(&self, site: &Site) -> Option<usize> {
        self.frame.index_of(site)
    }

    pub fn site_at(&self, index: usize) -> Site {
        self.frame.site_at(index)
    }
}

impl PartialEq for Frame {
    fn eq(&self, other: &Self) -> bool {
        self.region == other.region
    }
}

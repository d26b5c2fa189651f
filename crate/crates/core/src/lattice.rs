//! Sites of Z^d (d = 1, 2), the square-spiral enumeration and finite volumes.
//!
//! In d = 2 the enumeration is the counterclockwise square spiral that starts
//! at the origin and takes its first step in the +x direction:
//!
//! ```text
//!  y = 1:   4  3  2
//!  y = 0:   5  0  1
//!  y = -1:  6  7  8   9 ...
//! ```
//!
//! In d = 1 the order is the natural order of the nonnegative integers.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A lattice site. One-dimensional sites store `y = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i32>", into = "Vec<i32>")]
pub struct Site {
    dim: u8,
    x: i32,
    y: i32,
}

impl Site {
    pub const fn d1(x: i32) -> Self {
        Site { dim: 1, x, y: 0 }
    }

    pub const fn d2(x: i32, y: i32) -> Self {
        Site { dim: 2, x, y }
    }

    pub fn origin(dim: u8) -> Self {
        Site { dim, x: 0, y: 0 }
    }

    pub fn from_coords(coords: &[i32]) -> Result<Self> {
        match *coords {
            [x] => Ok(Site::d1(x)),
            [x, y] => Ok(Site::d2(x, y)),
            _ => Err(Error::InvalidParameter(format!(
                "sites have 1 or 2 coordinates, got {}",
                coords.len()
            ))),
        }
    }

    pub fn dim(&self) -> u8 {
        self.dim
    }

    pub fn x(&self) -> i32 {
        self.x
    }

    pub fn y(&self) -> i32 {
        self.y
    }

    pub fn coords(&self) -> Vec<i32> {
        if self.dim == 1 {
            vec![self.x]
        } else {
            vec![self.x, self.y]
        }
    }

    /// Sup-norm radius `max_i |x_i|`.
    pub fn radius(&self) -> u32 {
        self.x.unsigned_abs().max(self.y.unsigned_abs())
    }

    pub fn offset(&self, dx: i32, dy: i32) -> Site {
        Site { dim: self.dim, x: self.x + dx, y: if self.dim == 1 { 0 } else { self.y + dy } }
    }

    pub fn translate(&self, by: &Site) -> Site {
        self.offset(by.x, by.y)
    }

    /// Nearest neighbours in Z^d (2d of them).
    pub fn neighbors(&self) -> Vec<Site> {
        if self.dim == 1 {
            vec![self.offset(1, 0), self.offset(-1, 0)]
        } else {
            vec![self.offset(1, 0), self.offset(0, 1), self.offset(-1, 0), self.offset(0, -1)]
        }
    }
}

impl TryFrom<Vec<i32>> for Site {
    type Error = Error;
    fn try_from(v: Vec<i32>) -> Result<Self> {
        Site::from_coords(&v)
    }
}

impl From<Site> for Vec<i32> {
    fn from(s: Site) -> Self {
        s.coords()
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dim == 1 {
            write!(f, "({})", self.x)
        } else {
            write!(f, "({},{})", self.x, self.y)
        }
    }
}

/// Sup-norm distance between two sites of the same dimension.
pub fn site_distance(a: &Site, b: &Site) -> u32 {
    debug_assert_eq!(a.dim, b.dim);
    a.x.abs_diff(b.x).max(a.y.abs_diff(b.y))
}

/// The enumeration Γ of Z^d used to order sites.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpiralOrder {
    dim: u8,
}

impl SpiralOrder {
    pub fn new(dim: u8) -> Result<Self> {
        match dim {
            1 | 2 => Ok(SpiralOrder { dim }),
            _ => Err(Error::InvalidParameter(format!("unsupported dimension {dim}"))),
        }
    }

    pub fn dim(&self) -> u8 {
        self.dim
    }

    pub fn index_of(&self, site: &Site) -> Result<u64> {
        if site.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: site.dim });
        }
        if self.dim == 1 {
            return u64::try_from(site.x).map_err(|_| Error::OutOfRange(site.to_string()));
        }
        let (x, y) = (site.x as i64, site.y as i64);
        let s = x.abs().max(y.abs());
        if s == 0 {
            return Ok(0);
        }
        let base = (2 * s - 1) * (2 * s - 1);
        let offset = if x == s && y > -s {
            y + s - 1
        } else if y == s {
            2 * s + (s - 1 - x)
        } else if x == -s {
            4 * s + (s - 1 - y)
        } else {
            6 * s + (x + s - 1)
        };
        Ok((base + offset) as u64)
    }

    pub fn site_of(&self, index: u64) -> Site {
        if self.dim == 1 {
            return Site::d1(i32::try_from(index).expect("index exceeds i32 range"));
        }
        if index == 0 {
            return Site::d2(0, 0);
        }
        // smallest shell s with (2s + 1)^2 > index
        let mut s = ((((index as f64).sqrt() - 1.0) / 2.0).floor() as i64).max(0);
        while (2 * s + 1) * (2 * s + 1) <= index as i64 {
            s += 1;
        }
        while s > 0 && (2 * s - 1) * (2 * s - 1) > index as i64 {
            s -= 1;
        }
        let offset = index as i64 - (2 * s - 1) * (2 * s - 1);
        let side = 2 * s;
        let (x, y) = match offset / side {
            0 => (s, offset - s + 1),
            1 => (s - 1 - (offset - side), s),
            2 => (-s, s - 1 - (offset - 2 * side)),
            _ => (offset - 3 * side - s + 1, -s),
        };
        Site::d2(x as i32, y as i32)
    }

    /// `(<x)` when `strict`, otherwise `(≤x)`, sorted by Γ.
    pub fn predecessors(&self, site: &Site, strict: bool) -> Result<Vec<Site>> {
        let k = self.index_of(site)?;
        let end = if strict { k } else { k + 1 };
        Ok((0..end).map(|i| self.site_of(i)).collect())
    }
}

/// The centered box `B_n = [-n, n]^d ∩ Z^d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CenteredBox {
    pub dim: u8,
    pub radius: u32,
}

impl CenteredBox {
    pub fn new(dim: u8, radius: u32) -> Self {
        CenteredBox { dim, radius }
    }

    pub fn len(&self) -> usize {
        (2 * self.radius as usize + 1).pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, site: &Site) -> bool {
        site.dim == self.dim && site.radius() <= self.radius
    }

    /// Sites in coordinate order (x fastest for d = 2).
    pub fn sites(&self) -> Vec<Site> {
        let n = self.radius as i32;
        if self.dim == 1 {
            (-n..=n).map(Site::d1).collect()
        } else {
            (-n..=n).flat_map(|y| (-n..=n).map(move |x| Site::d2(x, y))).collect()
        }
    }
}

/// A finite volume Λ with its sites listed in spiral order. The position of a
/// site in that list is its *slot*.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Volume {
    dim: u8,
    sites: Vec<Site>,
    slots: HashMap<Site, usize>,
}

impl Volume {
    pub fn from_sites(dim: u8, sites: impl IntoIterator<Item = Site>) -> Result<Self> {
        let order = SpiralOrder::new(dim)?;
        let mut keyed = Vec::new();
        for s in sites {
            keyed.push((order.index_of(&s)?, s));
        }
        keyed.sort_unstable_by_key(|(k, _)| *k);
        keyed.dedup_by_key(|(k, _)| *k);
        if keyed.is_empty() {
            return Err(Error::InvalidParameter("empty volume".into()));
        }
        let sites: Vec<Site> = keyed.into_iter().map(|(_, s)| s).collect();
        let slots = sites.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        Ok(Volume { dim, sites, slots })
    }

    /// Sites `0, 1, ..., n - 1` of Z.
    pub fn line(n: usize) -> Self {
        Volume::from_sites(1, (0..n as i32).map(Site::d1)).expect("line volume")
    }

    /// A `width × height` rectangle of Z^2 placed as centrally as possible
    /// (x ranges over `[-(w-1)/2, w - 1 - (w-1)/2]`, likewise for y).
    pub fn rectangle(width: usize, height: usize) -> Self {
        let x0 = -((width as i32 - 1) / 2);
        let y0 = -((height as i32 - 1) / 2);
        let sites = (0..height as i32)
            .flat_map(|j| (0..width as i32).map(move |i| Site::d2(x0 + i, y0 + j)));
        Volume::from_sites(2, sites).expect("rectangle volume")
    }

    pub fn centered_box(dim: u8, radius: u32) -> Result<Self> {
        Volume::from_sites(dim, CenteredBox::new(dim, radius).sites())
    }

    pub fn dim(&self) -> u8 {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site(&self, slot: usize) -> Site {
        self.sites[slot]
    }

    pub fn slot(&self, site: &Site) -> Option<usize> {
        self.slots.get(site).copied()
    }

    pub fn contains(&self, site: &Site) -> bool {
        self.slots.contains_key(site)
    }

    /// Sites outside the volume adjacent to it (its outer nearest-neighbour collar).
    pub fn outer_boundary(&self) -> Vec<Site> {
        let mut out: Vec<Site> = self
            .sites
            .iter()
            .flat_map(|s| s.neighbors())
            .filter(|n| !self.contains(n))
            .collect();
        out.sort();
        out.dedup();
        out
    }
}

//! Periodic hypercubic lattices, the nearest-neighbour hopping matrix and
//! subsystem masks.
//!
//! Sites are indexed row-major with the first coordinate running fastest:
//! `site = x_0 + L x_1 + L^2 x_2`. In two dimensions `x_0` is the column and
//! `x_1` the row.

use std::f64::consts::PI;
use std::fmt;

use faer::Mat;

use crate::error::{Error, Result};

/// A `d`-dimensional hypercubic lattice of linear size `L` with periodic
/// boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Lattice {
    dim: usize,
    size: usize,
}

impl Lattice {
    /// Builds a lattice. `L` must be even; for `d >= 2` it must also be at
    /// least 4 so that periodic wrapping never produces doubled bonds.
    pub fn new(dim: usize, size: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidLattice(format!(
                "dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if size < 2 {
            return Err(Error::InvalidLattice(format!(
                "linear size must be at least 2, got {size}"
            )));
        }
        if size % 2 != 0 {
            return Err(Error::InvalidLattice(format!(
                "linear size must be even for half filling, got {size}"
            )));
        }
        if dim >= 2 && size < 4 {
            return Err(Error::InvalidLattice(format!(
                "L = {size} in d = {dim} wraps onto doubled bonds; use L >= 4"
            )));
        }
        Ok(Lattice { dim, size })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Linear size `L`.
    pub fn size(&self) -> usize {
        self.size
    }

    /// Number of sites `V = L^d`.
    pub fn num_sites(&self) -> usize {
        self.size.pow(self.dim as u32)
    }

    /// Particle number at half filling.
    pub fn half_filling(&self) -> usize {
        self.num_sites() / 2
    }

    pub fn coords(&self, site: usize) -> [usize; 3] {
        let mut c = [0; 3];
        let mut rest = site;
        for slot in c.iter_mut().take(self.dim) {
            *slot = rest % self.size;
            rest /= self.size;
        }
        c
    }

    pub fn site(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .take(self.dim)
            .rev()
            .fold(0, |acc, &x| acc * self.size + (x % self.size))
    }

    /// Parity of `x_0 + ... + x_{d-1}`.
    pub fn parity(&self, site: usize) -> usize {
        self.coords(site).iter().sum::<usize>() % 2
    }

    /// Distinct nearest neighbours of `site` (`2d` of them for `L > 2`).
    pub fn neighbours(&self, site: usize) -> Vec<usize> {
        let c = self.coords(site);
        let mut out = Vec::with_capacity(2 * self.dim);
        for axis in 0..self.dim {
            for shift in [1, self.size - 1] {
                let mut n = c;
                n[axis] = (n[axis] + shift) % self.size;
                let j = self.site(&n);
                if !out.contains(&j) {
                    out.push(j);
                }
            }
        }
        out
    }

    /// Dense real symmetric hopping matrix with `-1` on every bond.
    pub fn hopping_matrix(&self) -> Mat<f64> {
        let v = self.num_sites();
        let mut h = Mat::<f64>::zeros(v, v);
        for i in 0..v {
            for j in self.neighbours(i) {
                h[(i, j)] = -1.0;
            }
        }
        h
    }

    /// Single-particle energies `-2 sum_i cos(2 pi k_i / L)` of the hopping
    /// matrix, indexed like sites with `k` in place of `x`.
    pub fn band_energies(&self) -> Vec<f64> {
        (0..self.num_sites())
            .map(|k| {
                self.coords(k)
                    .iter()
                    .take(self.dim)
                    .map(|&ki| -2.0 * (2.0 * PI * ki as f64 / self.size as f64).cos())
                    .sum()
            })
            .collect()
    }

    pub fn descriptor(&self) -> String {
        format!("d={} L={} boundary=periodic", self.dim, self.size)
    }
}

impl fmt::Display for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.descriptor())
    }
}

/// Partition geometry of a subsystem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Geometry {
    /// `width` consecutive values of `x_0` starting at `offset`, spanning
    /// every other direction.
    Strip { width: usize, offset: usize },
    /// `Strip { width: L / 2, offset: 0 }`.
    HalfCut,
    /// Sites with odd `x_0 + ... + x_{d-1}`. With 1-based coordinates this is
    /// "even columns in odd rows and odd columns in even rows".
    Checkerboard,
    Custom,
}

impl Geometry {
    pub fn strip(width: usize) -> Self {
        Geometry::Strip { width, offset: 0 }
    }

    /// Short tag used in file names and headers.
    pub fn tag(&self) -> String {
        match self {
            Geometry::Strip { width, offset: 0 } => format!("strip{width}"),
            Geometry::Strip { width, offset } => format!("strip{width}@{offset}"),
            Geometry::HalfCut => "halfcut".into(),
            Geometry::Checkerboard => "checkerboard".into(),
            Geometry::Custom => "custom".into(),
        }
    }

    /// Parses the tag produced by [`Geometry::tag`].
    pub fn parse(tag: &str) -> Result<Self> {
        let bad = || Error::InvalidMask(format!("unknown geometry `{tag}`"));
        match tag {
            "halfcut" | "half_cut" => Ok(Geometry::HalfCut),
            "checkerboard" => Ok(Geometry::Checkerboard),
            "custom" => Ok(Geometry::Custom),
            s if s.starts_with("strip") => {
                let body = &s[5..];
                let (w, o) = match body.split_once('@') {
                    Some((w, o)) => (w, Some(o)),
                    None => (body, None),
                };
                let width = w.parse().map_err(|_| bad())?;
                let offset = o.map(str::parse).transpose().map_err(|_| bad())?.unwrap_or(0);
                Ok(Geometry::Strip { width, offset })
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

/// Ordered set of lattice sites forming a subsystem `A`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsystemMask {
    sites: Vec<usize>,
    geometry: Geometry,
}

impl SubsystemMask {
    /// Builds the mask for `geometry` on `lattice`.
    pub fn new(lattice: &Lattice, geometry: Geometry) -> Result<Self> {
        let l = lattice.size();
        let sites: Vec<usize> = match &geometry {
            Geometry::Strip { width, offset } => {
                if *width == 0 || *width >= l {
                    return Err(Error::InvalidMask(format!(
                        "strip width {width} outside [1, {}]",
                        l - 1
                    )));
                }
                (0..lattice.num_sites())
                    .filter(|&s| (lattice.coords(s)[0] + l - offset % l) % l < *width)
                    .collect()
            }
            Geometry::HalfCut => return Self::new(lattice, Geometry::strip(l / 2)).map(|m| m.with_geometry(Geometry::HalfCut)),
            Geometry::Checkerboard => {
                if l % 2 != 0 {
                    return Err(Error::InvalidMask("checkerboard needs even L".into()));
                }
                (0..lattice.num_sites())
                    .filter(|&s| lattice.parity(s) == 1)
                    .collect()
            }
            Geometry::Custom => {
                return Err(Error::InvalidMask(
                    "custom masks are built with SubsystemMask::custom".into(),
                ))
            }
        };
        Ok(SubsystemMask { sites, geometry })
    }

    /// Arbitrary mask from a site list; the list is sorted and validated.
    pub fn custom(lattice: &Lattice, mut sites: Vec<usize>) -> Result<Self> {
        sites.sort_unstable();
        if sites.is_empty() {
            return Err(Error::InvalidMask("empty subsystem".into()));
        }
        if sites.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidMask("duplicate sites".into()));
        }
        if let Some(&last) = sites.last() {
            if last >= lattice.num_sites() {
                return Err(Error::InvalidMask(format!(
                    "site {last} outside lattice of {} sites",
                    lattice.num_sites()
                )));
            }
        }
        Ok(SubsystemMask {
            sites,
            geometry: Geometry::Custom,
        })
    }

    fn with_geometry(mut self, geometry: Geometry) -> Self {
        self.geometry = geometry;
        self
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn contains(&self, site: usize) -> bool {
        self.sites.binary_search(&site).is_ok()
    }

    /// Sites of the lattice not in this mask.
    pub fn complement(&self, lattice: &Lattice) -> Result<Self> {
        let sites = (0..lattice.num_sites())
            .filter(|s| !self.contains(*s))
            .collect();
        SubsystemMask::custom(lattice, sites)
    }

    /// Union with a disjoint mask.
    pub fn union(&self, lattice: &Lattice, other: &SubsystemMask) -> Result<Self> {
        if self.sites.iter().any(|s| other.contains(*s)) {
            return Err(Error::InvalidMask("masks overlap".into()));
        }
        let mut sites = self.sites.clone();
        sites.extend_from_slice(&other.sites);
        SubsystemMask::custom(lattice, sites)
    }

    pub fn is_disjoint(&self, other: &SubsystemMask) -> bool {
        !self.sites.iter().any(|s| other.contains(*s))
    }

    /// Plain-text descriptor embedded in output headers.
    pub fn descriptor(&self, lattice: &Lattice) -> String {
        format!(
            "{} geometry={} sites={}",
            lattice.descriptor(),
            self.geometry.tag(),
            self.sites.len()
        )
    }
}

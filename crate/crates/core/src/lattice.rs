//! Lattice geometry for 1D chains and 3D cubic lattices.
//!
//! Sites are indexed `0..N`. In 3D the index of coordinate `(x, y, z)` is
//! `x + L·(y + L·z)`.

use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Open,
}

/// A 1D chain of `length` sites or a cubic lattice of `length³` sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    dimension: usize,
    length: usize,
    boundary: Boundary,
}

impl LatticeSpec {
    pub fn chain(length: usize, boundary: Boundary) -> Result<Self> {
        Self::new(1, length, boundary)
    }

    pub fn cubic(length: usize, boundary: Boundary) -> Result<Self> {
        Self::new(3, length, boundary)
    }

    pub fn new(dimension: usize, length: usize, boundary: Boundary) -> Result<Self> {
        if dimension != 1 && dimension != 3 {
            return usage(format!("lattice dimension must be 1 or 3, got {dimension}"));
        }
        if length < 2 {
            return usage(format!("lattice needs at least 2 sites per axis, got {length}"));
        }
        Ok(Self {
            dimension,
            length,
            boundary,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Sites per axis.
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Total number of sites `N`.
    pub fn num_sites(&self) -> usize {
        self.length.pow(self.dimension as u32)
    }

    fn check(&self, site: usize) -> Result<()> {
        if site >= self.num_sites() {
            return usage(format!(
                "site index {site} out of range for lattice with {} sites",
                self.num_sites()
            ));
        }
        Ok(())
    }

    pub fn coordinates(&self, site: usize) -> Result<[usize; 3]> {
        self.check(site)?;
        Ok(self.coords_unchecked(site))
    }

    fn coords_unchecked(&self, site: usize) -> [usize; 3] {
        let l = self.length;
        match self.dimension {
            1 => [site, 0, 0],
            _ => [site % l, (site / l) % l, site / (l * l)],
        }
    }

    pub fn site_at(&self, coords: [usize; 3]) -> Result<usize> {
        let l = self.length;
        let used = &coords[..self.dimension];
        if used.iter().any(|&c| c >= l) || coords[self.dimension..].iter().any(|&c| c != 0) {
            return usage(format!("coordinates {coords:?} outside the lattice"));
        }
        Ok(match self.dimension {
            1 => coords[0],
            _ => coords[0] + l * (coords[1] + l * coords[2]),
        })
    }

    /// The central site: `N/2` on a chain, `(L/2, L/2, L/2)` on a cube.
    pub fn center(&self) -> usize {
        let h = self.length / 2;
        match self.dimension {
            1 => h,
            _ => h + self.length * (h + self.length * h),
        }
    }

    /// Nearest neighbours of `site`, each listed once, in ascending order.
    pub fn neighbors(&self, site: usize) -> Result<Vec<usize>> {
        self.check(site)?;
        let l = self.length as isize;
        let c = self.coords_unchecked(site);
        let mut out = Vec::with_capacity(2 * self.dimension);
        for axis in 0..self.dimension {
            for step in [-1isize, 1] {
                let raw = c[axis] as isize + step;
                let wrapped = match self.boundary {
                    Boundary::Periodic => raw.rem_euclid(l),
                    Boundary::Open if raw < 0 || raw >= l => continue,
                    Boundary::Open => raw,
                };
                let mut nc = c;
                nc[axis] = wrapped as usize;
                let n = self.index_unchecked(nc);
                if n != site {
                    out.push(n);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    fn index_unchecked(&self, c: [usize; 3]) -> usize {
        c[0] + self.length * (c[1] + self.length * c[2])
    }

    /// Squared Euclidean distance in lattice units; minimal image on periodic axes.
    pub fn squared_displacement(&self, i: usize, j: usize) -> Result<u64> {
        self.check(i)?;
        self.check(j)?;
        let (a, b) = (self.coords_unchecked(i), self.coords_unchecked(j));
        let l = self.length as u64;
        Ok((0..self.dimension)
            .map(|axis| {
                let d = (a[axis] as i64 - b[axis] as i64).unsigned_abs();
                let d = match self.boundary {
                    Boundary::Periodic => d.min(l - d),
                    Boundary::Open => d,
                };
                d * d
            })
            .sum())
    }

    /// All undirected nearest-neighbour bonds `(i, j)` with `i < j`.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.num_sites() {
            for j in self.neighbors(i).expect("index in range") {
                if i < j {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn chain_neighbors() {
        let p = LatticeSpec::chain(5, Boundary::Periodic).unwrap();
        assert_eq!(p.neighbors(0).unwrap(), vec![1, 4]);
        let o = LatticeSpec::chain(5, Boundary::Open).unwrap();
        assert_eq!(o.neighbors(0).unwrap(), vec![1]);
        assert_eq!(o.neighbors(4).unwrap(), vec![3]);
        assert!(o.neighbors(5).is_err());
    }

    #[test]
    fn cube_coordination() {
        let c = LatticeSpec::cubic(3, Boundary::Periodic).unwrap();
        for s in 0..c.num_sites() {
            assert_eq!(c.neighbors(s).unwrap().len(), 6);
        }
        let open = LatticeSpec::cubic(3, Boundary::Open).unwrap();
        assert_eq!(open.neighbors(0).unwrap().len(), 3);
        assert_eq!(open.neighbors(open.center()).unwrap().len(), 6);
    }

    #[test]
    fn two_site_ring_has_single_neighbor() {
        let p = LatticeSpec::chain(2, Boundary::Periodic).unwrap();
        assert_eq!(p.neighbors(0).unwrap(), vec![1]);
    }

    #[test]
    fn displacements() {
        let o = LatticeSpec::chain(10, Boundary::Open).unwrap();
        assert_eq!(o.squared_displacement(2, 7).unwrap(), 25);
        assert_eq!(o.squared_displacement(4, 4).unwrap(), 0);
        let p = LatticeSpec::chain(10, Boundary::Periodic).unwrap();
        assert_eq!(p.squared_displacement(1, 9).unwrap(), 4);
        let c = LatticeSpec::cubic(4, Boundary::Periodic).unwrap();
        let a = c.site_at([0, 0, 0]).unwrap();
        let b = c.site_at([3, 2, 1]).unwrap();
        assert_eq!(c.squared_displacement(a, b).unwrap(), 1 + 4 + 1);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(LatticeSpec::new(2, 4, Boundary::Open).is_err());
        assert!(LatticeSpec::chain(1, Boundary::Open).is_err());
    }

    #[test]
    fn center_site() {
        assert_eq!(LatticeSpec::chain(400, Boundary::Open).unwrap().center(), 200);
        let c = LatticeSpec::cubic(11, Boundary::Periodic).unwrap();
        assert_eq!(c.coordinates(c.center()).unwrap(), [5, 5, 5]);
    }

    fn any_lattice() -> impl Strategy<Value = LatticeSpec> {
        (prop_oneof![Just(1usize), Just(3)], 2usize..7, any::<bool>()).prop_map(|(d, l, per)| {
            let b = if per { Boundary::Periodic } else { Boundary::Open };
            LatticeSpec::new(d, l, b).unwrap()
        })
    }

    proptest! {
        #[test]
        fn coordinate_map_is_bijective(lat in any_lattice()) {
            for s in 0..lat.num_sites() {
                let c = lat.coordinates(s).unwrap();
                prop_assert_eq!(lat.site_at(c).unwrap(), s);
            }
        }

        #[test]
        fn neighbor_relation_and_distance_symmetric(lat in any_lattice(), a in 0usize..400, b in 0usize..400) {
            let n = lat.num_sites();
            let (i, j) = (a % n, b % n);
            prop_assert_eq!(lat.squared_displacement(i, j).unwrap(), lat.squared_displacement(j, i).unwrap());
            let ni = lat.neighbors(i).unwrap();
            let nj = lat.neighbors(j).unwrap();
            prop_assert_eq!(ni.contains(&j), nj.contains(&i));
            if lat.boundary() == Boundary::Periodic && lat.length() > 2 {
                prop_assert_eq!(ni.len(), 2 * lat.dimension());
            }
        }
    }
}

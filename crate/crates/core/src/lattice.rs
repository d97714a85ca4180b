//! Two-dimensional lattice geometry.
//!
//! Lengths are measured in units of the transition wavelength λ, so the free-space
//! wavenumber is `k = 2π`. Site detunings and Zeeman shifts are in units of the
//! single-atom linewidth Γ0.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wavenumber of the atomic transition in units of 1/λ.
pub const K0: f64 = 2.0 * PI;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sqr(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, rhs: Vec2) -> Vec2 {
        rhs * self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeFamily {
    Square,
    Triangular,
    NbSquare,
    Custom,
}

impl fmt::Display for LatticeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            LatticeFamily::Square => "square",
            LatticeFamily::Triangular => "triangular",
            LatticeFamily::NbSquare => "nb-square",
            LatticeFamily::Custom => "custom",
        };
        f.write_str(name)
    }
}

/// One atom of the unit cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub offset: Vec2,
    /// Shift of the transition frequency relative to ω_A, in Γ0.
    pub detuning: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSpec {
    family: LatticeFamily,
    a1: Vec2,
    a2: Vec2,
    sites: Vec<Site>,
}

impl LatticeSpec {
    pub fn new(family: LatticeFamily, a1: Vec2, a2: Vec2, sites: Vec<Site>) -> Result<Self> {
        let area = a1.cross(a2).abs();
        let scale = a1.norm() * a2.norm();
        if !(area.is_finite() && area > 1e-12 * scale && scale > 0.0) {
            return Err(Error::InvalidLattice(format!(
                "lattice vectors {a1:?} and {a2:?} are linearly dependent"
            )));
        }
        if sites.is_empty() || sites.len() > 2 {
            return Err(Error::InvalidLattice(format!(
                "basis must hold one or two sites, got {}",
                sites.len()
            )));
        }
        let lattice = LatticeSpec {
            family,
            a1,
            a2,
            sites,
        };
        for site in &lattice.sites {
            let (f1, f2) = lattice.fractional(site.offset);
            let tol = 1e-9;
            if f1 < -tol || f1 >= 1.0 - tol || f2 < -tol || f2 >= 1.0 - tol {
                return Err(Error::InvalidLattice(format!(
                    "basis offset {:?} lies outside the primitive cell",
                    site.offset
                )));
            }
        }
        Ok(lattice)
    }

    pub fn square(a: f64) -> Result<Self> {
        Self::new(
            LatticeFamily::Square,
            Vec2::new(a, 0.0),
            Vec2::new(0.0, a),
            vec![Site {
                offset: Vec2::ZERO,
                detuning: 0.0,
            }],
        )
    }

    pub fn triangular(a: f64) -> Result<Self> {
        Self::new(
            LatticeFamily::Triangular,
            Vec2::new(a, 0.0),
            Vec2::new(0.5 * a, 0.5 * 3f64.sqrt() * a),
            vec![Site {
                offset: Vec2::ZERO,
                detuning: 0.0,
            }],
        )
    }

    /// Checkerboard square lattice of spacing `a`: the second sublattice is
    /// detuned by `detuning` (Γ0).
    pub fn nb_square(a: f64, detuning: f64) -> Result<Self> {
        Self::new(
            LatticeFamily::NbSquare,
            Vec2::new(a, a),
            Vec2::new(a, -a),
            vec![
                Site {
                    offset: Vec2::ZERO,
                    detuning: 0.0,
                },
                Site {
                    offset: Vec2::new(a, 0.0),
                    detuning,
                },
            ],
        )
    }

    pub fn family(&self) -> LatticeFamily {
        self.family
    }

    pub fn a1(&self) -> Vec2 {
        self.a1
    }

    pub fn a2(&self) -> Vec2 {
        self.a2
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn cell_area(&self) -> f64 {
        self.a1.cross(self.a2).abs()
    }

    /// Vector from the first to the second basis site, if there are two.
    pub fn basis_vector(&self) -> Option<Vec2> {
        (self.sites.len() == 2).then(|| self.sites[1].offset - self.sites[0].offset)
    }

    /// Fractional coordinates of `r` in the (a1, a2) basis.
    pub fn fractional(&self, r: Vec2) -> (f64, f64) {
        let det = self.a1.cross(self.a2);
        (r.cross(self.a2) / det, self.a1.cross(r) / det)
    }

    pub fn lattice_vector(&self, m: i64, n: i64) -> Vec2 {
        self.a1 * m as f64 + self.a2 * n as f64
    }

    /// Smallest distance between any two distinct atoms.
    pub fn nearest_neighbour_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for s in &self.sites {
            for t in &self.sites {
                for m in -3..=3 {
                    for n in -3..=3 {
                        let d = (self.lattice_vector(m, n) + t.offset - s.offset).norm();
                        if d > 1e-12 * self.a1.norm() && d < best {
                            best = d;
                        }
                    }
                }
            }
        }
        best
    }

    /// Index of the basis site that `r` belongs to, if `r` is a lattice point.
    pub fn sublattice_of(&self, r: Vec2) -> Option<usize> {
        self.sites.iter().position(|s| {
            let (f1, f2) = self.fractional(r - s.offset);
            (f1 - f1.round()).abs() < 1e-6 && (f2 - f2.round()).abs() < 1e-6
        })
    }

    pub fn reciprocal(&self) -> ReciprocalBasis {
        let det = self.a1.cross(self.a2);
        let g1 = Vec2::new(self.a2.y, -self.a2.x) * (2.0 * PI / det);
        let g2 = Vec2::new(-self.a1.y, self.a1.x) * (2.0 * PI / det);
        ReciprocalBasis { g1, g2 }
    }

    /// Reciprocal basis together with all G vectors with |G| <= `g_max`.
    pub fn reciprocal_set(&self, g_max: f64) -> ReciprocalSet {
        let basis = self.reciprocal();
        ReciprocalSet {
            shells: basis.shells(self, g_max),
            basis,
            g_max,
        }
    }

    /// Map `k` onto the equivalent point closest to Γ.
    pub fn fold_to_first_zone(&self, k: Vec2) -> Vec2 {
        let basis = self.reciprocal();
        let (f1, f2) = (k.dot(self.a1) / (2.0 * PI), k.dot(self.a2) / (2.0 * PI));
        let (m0, n0) = (f1.round() as i64, f2.round() as i64);
        let mut best = k - basis.vector(m0, n0);
        for m in m0 - 2..=m0 + 2 {
            for n in n0 - 2..=n0 + 2 {
                let candidate = k - basis.vector(m, n);
                if candidate.norm_sqr() < best.norm_sqr() - 1e-14 {
                    best = candidate;
                }
            }
        }
        best
    }

    /// High-symmetry point by name ("G"/"Gamma"/"Γ", "X", "M", "K").
    pub fn symmetry_point(&self, name: &str) -> Result<Vec2> {
        let ReciprocalBasis { g1, g2 } = self.reciprocal();
        let unknown = || Error::UnknownWaypoint {
            name: name.to_string(),
            family: self.family.to_string(),
        };
        if matches!(name, "G" | "Gamma" | "Γ") {
            return Ok(Vec2::ZERO);
        }
        match self.family {
            LatticeFamily::Square | LatticeFamily::NbSquare => match name {
                "X" => Ok(g1 * 0.5),
                "M" => Ok((g1 + g2) * 0.5),
                _ => Err(unknown()),
            },
            LatticeFamily::Triangular => match name {
                "K" => Ok((g1 * 2.0 + g2) * (1.0 / 3.0)),
                "M" => Ok((g1 + g2) * 0.5),
                _ => Err(unknown()),
            },
            LatticeFamily::Custom => Err(unknown()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReciprocalBasis {
    pub g1: Vec2,
    pub g2: Vec2,
}

impl ReciprocalBasis {
    pub fn vector(&self, m: i64, n: i64) -> Vec2 {
        self.g1 * m as f64 + self.g2 * n as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.g1.cross(self.g2).abs()
    }

    /// All G with |G| <= `g_max`, sorted by length with ties broken by (Gx, Gy).
    fn shells(&self, lattice: &LatticeSpec, g_max: f64) -> Vec<Vec2> {
        // m = G·a1/2π, so |m| <= g_max |a1| / 2π.
        let m_max = (g_max * lattice.a1.norm() / (2.0 * PI)).ceil() as i64 + 1;
        let n_max = (g_max * lattice.a2.norm() / (2.0 * PI)).ceil() as i64 + 1;
        let limit = g_max * g_max * (1.0 + 1e-12);
        let mut out = Vec::new();
        for m in -m_max..=m_max {
            for n in -n_max..=n_max {
                let g = self.vector(m, n);
                if g.norm_sqr() <= limit {
                    out.push(g);
                }
            }
        }
        out.sort_by(|a, b| {
            a.norm_sqr()
                .total_cmp(&b.norm_sqr())
                .then(a.x.total_cmp(&b.x))
                .then(a.y.total_cmp(&b.y))
        });
        out
    }
}

#[derive(Clone, Debug)]
pub struct ReciprocalSet {
    pub basis: ReciprocalBasis,
    pub shells: Vec<Vec2>,
    pub g_max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Waypoint {
    Named(String),
    Point(Vec2),
}

impl Waypoint {
    pub fn named(name: &str) -> Self {
        Waypoint::Named(name.to_string())
    }

    fn resolve(&self, lattice: &LatticeSpec) -> Result<Vec2> {
        match self {
            Waypoint::Named(name) => lattice.symmetry_point(name),
            Waypoint::Point(k) => Ok(*k),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathPoint {
    pub k: Vec2,
    pub arc: f64,
}

/// Piecewise-linear path through `waypoints` with `samples_per_segment` points
/// per segment, endpoints included and shared between segments.
pub fn bz_path(
    lattice: &LatticeSpec,
    waypoints: &[Waypoint],
    samples_per_segment: usize,
) -> Result<Vec<PathPoint>> {
    let corners = waypoints
        .iter()
        .map(|w| w.resolve(lattice))
        .collect::<Result<Vec<_>>>()?;
    let counts = vec![samples_per_segment; corners.len().saturating_sub(1)];
    sample_segments(&corners, &counts)
}

/// Path with roughly `total` points distributed over segments by length.
pub fn bz_path_total(
    lattice: &LatticeSpec,
    waypoints: &[Waypoint],
    total: usize,
) -> Result<Vec<PathPoint>> {
    let corners = waypoints
        .iter()
        .map(|w| w.resolve(lattice))
        .collect::<Result<Vec<_>>>()?;
    if corners.len() < 2 {
        return sample_segments(&corners, &[]);
    }
    let lengths: Vec<f64> = corners.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    let sum: f64 = lengths.iter().sum();
    let intervals = total.saturating_sub(1).max(lengths.len());
    let counts: Vec<usize> = lengths
        .iter()
        .map(|l| ((l / sum) * intervals as f64).round().max(1.0) as usize + 1)
        .collect();
    sample_segments(&corners, &counts)
}

fn sample_segments(corners: &[Vec2], counts: &[usize]) -> Result<Vec<PathPoint>> {
    let mut out = Vec::new();
    if corners.is_empty() {
        return Ok(out);
    }
    if corners.len() == 1 {
        out.push(PathPoint {
            k: corners[0],
            arc: 0.0,
        });
        return Ok(out);
    }
    if counts.iter().any(|&c| c < 2) {
        return Err(Error::InvalidArgument(
            "each path segment needs at least 2 samples".into(),
        ));
    }
    let mut arc = 0.0;
    for (seg, pair) in corners.windows(2).enumerate() {
        let (start, end) = (pair[0], pair[1]);
        let length = (end - start).norm();
        let n = counts[seg];
        let first = if seg == 0 { 0 } else { 1 };
        for i in first..n {
            let t = i as f64 / (n - 1) as f64;
            out.push(PathPoint {
                k: start + (end - start) * t,
                arc: arc + t * length,
            });
        }
        arc += length;
    }
    Ok(out)
}

/// Periodic n×n sampling of one primitive reciprocal cell.
#[derive(Clone, Debug)]
pub struct BzGrid {
    pub n: usize,
    pub basis: ReciprocalBasis,
    /// Row-major in (i, j): `points[i * n + j] = (i/n) g1 + (j/n) g2`.
    pub points: Vec<Vec2>,
}

impl BzGrid {
    pub fn index(&self, i: usize, j: usize) -> usize {
        (i % self.n) * self.n + (j % self.n)
    }

    pub fn point(&self, i: usize, j: usize) -> Vec2 {
        self.points[self.index(i, j)]
    }

    pub fn plaquette_area(&self) -> f64 {
        self.basis.cell_area() / (self.n * self.n) as f64
    }
}

pub fn bz_grid(lattice: &LatticeSpec, n: usize) -> Result<BzGrid> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "Brillouin-zone grid needs n >= 2, got {n}"
        )));
    }
    let basis = lattice.reciprocal();
    let mut points = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            points.push(basis.g1 * (i as f64 / n as f64) + basis.g2 * (j as f64 / n as f64));
        }
    }
    Ok(BzGrid { n, basis, points })
}

/// Which excited states take part.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transitions {
    /// σ+ and σ− (the x, y dipole components).
    Sigma,
    /// π only (z).
    Pi,
    /// σ+, σ− and π.
    SigmaPi,
}

impl Transitions {
    /// Cartesian components (0 = x, 1 = y, 2 = z) carried by the scheme.
    pub fn components(self) -> &'static [usize] {
        match self {
            Transitions::Sigma => &[0, 1],
            Transitions::Pi => &[2],
            Transitions::SigmaPi => &[0, 1, 2],
        }
    }

    pub fn dim(self) -> usize {
        self.components().len()
    }
}

/// Level structure of each atom: enabled transitions plus Zeeman shift μB (Γ0).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelScheme {
    pub transitions: Transitions,
    pub zeeman: f64,
}

impl LevelScheme {
    pub fn sigma(zeeman: f64) -> Self {
        LevelScheme {
            transitions: Transitions::Sigma,
            zeeman,
        }
    }

    pub fn full(zeeman: f64) -> Self {
        LevelScheme {
            transitions: Transitions::SigmaPi,
            zeeman,
        }
    }
}

/// Dimensionful parameters, used only when converting to or from lab units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub wavelength_nm: f64,
    /// Γ0 in rad/s.
    pub gamma0: f64,
    /// Ground-state fluctuation width in units of the lattice spacing.
    pub a_ho: f64,
}

impl PhysicalParams {
    pub fn new(wavelength_nm: f64, gamma0: f64, a_ho: f64) -> Result<Self> {
        if !(wavelength_nm > 0.0 && gamma0 > 0.0 && a_ho >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "need λ > 0, Γ0 > 0, a_ho >= 0 (got {wavelength_nm}, {gamma0}, {a_ho})"
            )));
        }
        Ok(PhysicalParams {
            wavelength_nm,
            gamma0,
            a_ho,
        })
    }

    /// ω_A = 2πc/λ in rad/s.
    pub fn atomic_frequency(&self) -> f64 {
        2.0 * PI * crate::layered::SPEED_OF_LIGHT / (self.wavelength_nm * 1e-9)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Vec2, b: Vec2) -> bool {
        (a - b).norm() < 1e-12 * (1.0 + b.norm())
    }

    #[test]
    fn square_reciprocal_basis() {
        let a = 0.3;
        let r = LatticeSpec::square(a).unwrap().reciprocal();
        assert!(close(r.g1, Vec2::new(2.0 * PI / a, 0.0)));
        assert!(close(r.g2, Vec2::new(0.0, 2.0 * PI / a)));
    }

    #[test]
    fn triangular_reciprocal_basis() {
        let a = 0.5;
        let r = LatticeSpec::triangular(a).unwrap().reciprocal();
        let s3 = 3f64.sqrt();
        assert!(close(r.g1, Vec2::new(2.0 * PI / a, -2.0 * PI / (a * s3))));
        assert!(close(r.g2, Vec2::new(0.0, 4.0 * PI / (a * s3))));
    }

    #[test]
    fn duality() {
        let l = LatticeSpec::triangular(0.7).unwrap();
        let r = l.reciprocal();
        for (ai, gi) in [(l.a1(), r.g1), (l.a2(), r.g2)] {
            assert!((ai.dot(gi) - 2.0 * PI).abs() < 1e-12);
        }
        assert!(l.a1().dot(r.g2).abs() < 1e-12);
        assert!(l.a2().dot(r.g1).abs() < 1e-12);
        // Reciprocal of the reciprocal lattice, with 2π scaling, is the original.
        let dual = LatticeSpec::new(
            LatticeFamily::Custom,
            r.g1,
            r.g2,
            vec![Site {
                offset: Vec2::ZERO,
                detuning: 0.0,
            }],
        )
        .unwrap()
        .reciprocal();
        assert!(close(dual.g1, l.a1()));
        assert!(close(dual.g2, l.a2()));
    }

    #[test]
    fn degenerate_lattice_rejected() {
        let err = LatticeSpec::new(
            LatticeFamily::Custom,
            Vec2::new(1.0, 1.0),
            Vec2::new(2.0, 2.0),
            vec![Site {
                offset: Vec2::ZERO,
                detuning: 0.0,
            }],
        );
        assert!(matches!(err, Err(Error::InvalidLattice(_))));
    }

    #[test]
    fn offsets_outside_cell_rejected() {
        let err = LatticeSpec::new(
            LatticeFamily::Custom,
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
            vec![
                Site {
                    offset: Vec2::ZERO,
                    detuning: 0.0,
                },
                Site {
                    offset: Vec2::new(1.5, 0.2),
                    detuning: 0.0,
                },
            ],
        );
        assert!(matches!(err, Err(Error::InvalidLattice(_))));
    }

    #[test]
    fn nb_square_geometry() {
        let a = 0.054;
        let l = LatticeSpec::nb_square(a, 30.0).unwrap();
        assert!((l.cell_area() - 2.0 * a * a).abs() < 1e-15);
        assert!((l.nearest_neighbour_distance() - a).abs() < 1e-15);
        // The two sublattices together tile the square grid of spacing a.
        for i in -4i32..=4 {
            for j in -4i32..=4 {
                let r = Vec2::new(i as f64 * a, j as f64 * a);
                let sub = l.sublattice_of(r).expect("every grid point is an atom");
                assert_eq!(sub, ((i + j).rem_euclid(2)) as usize);
            }
        }
        assert!(l.sublattice_of(Vec2::new(0.5 * a, 0.0)).is_none());
    }

    #[test]
    fn shells_sorted_and_nested() {
        let l = LatticeSpec::triangular(0.5).unwrap();
        let small = l.reciprocal_set(60.0);
        let large = l.reciprocal_set(120.0);
        assert!(small
            .shells
            .windows(2)
            .all(|w| w[0].norm() <= w[1].norm() + 1e-12));
        assert_eq!(small.shells[0], Vec2::ZERO);
        assert_eq!(&large.shells[..small.shells.len()], &small.shells[..]);
        let r = l.lattice_vector(3, -7);
        for g in &large.shells {
            let phase = g.dot(r) / (2.0 * PI);
            assert!((phase - phase.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn path_endpoints() {
        let a = 0.25;
        let l = LatticeSpec::square(a).unwrap();
        let path = bz_path(&l, &[Waypoint::named("G"), Waypoint::named("X")], 2).unwrap();
        assert_eq!(path.len(), 2);
        assert!(close(path[0].k, Vec2::ZERO));
        assert!(close(path[1].k, Vec2::new(PI / a, 0.0)));
        assert!(bz_path(&l, &[], 10).unwrap().is_empty());
        let full = bz_path(
            &l,
            &["G", "X", "M", "G"].map(Waypoint::named),
            11,
        )
        .unwrap();
        assert_eq!(full.len(), 31);
        assert!(full.windows(2).all(|w| w[1].arc >= w[0].arc));
    }

    #[test]
    fn triangular_k_point() {
        let a = 0.5;
        let l = LatticeSpec::triangular(a).unwrap();
        let k = l.symmetry_point("K").unwrap();
        assert!(close(k, Vec2::new(4.0 * PI / (3.0 * a), 0.0)));
        // K is a zone corner: equidistant from Γ and its two nearest G vectors.
        let r = l.reciprocal();
        assert!(((k - r.g1).norm() - k.norm()).abs() < 1e-12);
        assert!(((k - r.g1 - r.g2).norm() - k.norm()).abs() < 1e-12);
        assert!(matches!(
            l.symmetry_point("X"),
            Err(Error::UnknownWaypoint { .. })
        ));
    }

    #[test]
    fn grid_covers_cell_once() {
        let a = 0.4;
        let l = LatticeSpec::square(a).unwrap();
        let g = bz_grid(&l, 2).unwrap();
        let expected = [
            Vec2::ZERO,
            Vec2::new(0.0, PI / a),
            Vec2::new(PI / a, 0.0),
            Vec2::new(PI / a, PI / a),
        ];
        for (p, e) in g.points.iter().zip(expected) {
            assert!(close(*p, e));
        }
        let g = bz_grid(&l, 7).unwrap();
        let area = g.plaquette_area() * 49.0;
        assert!((area - (2.0 * PI).powi(2) / l.cell_area()).abs() < 1e-9);
        assert_eq!(g.index(7, 3), g.index(0, 3));
        for (i, p) in g.points.iter().enumerate() {
            for q in &g.points[i + 1..] {
                let f = l.fractional(Vec2::new(p.x - q.x, p.y - q.y));
                let _ = f;
                assert!((*p - *q).norm() > 1e-9);
            }
        }
        assert!(bz_grid(&l, 1).is_err());
    }

    #[test]
    fn folding_is_periodic() {
        let l = LatticeSpec::triangular(0.5).unwrap();
        let r = l.reciprocal();
        let k = Vec2::new(3.1, -1.7);
        let shifted = k + r.vector(2, -3);
        assert!(close(l.fold_to_first_zone(shifted), l.fold_to_first_zone(k)));
    }
}

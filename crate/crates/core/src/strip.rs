//! Ribbons: periodic along x, open along y. Eigenmodes are Fourier analysed
//! along x and labelled by the edge they live on.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bloch::{eigensystem, zeeman_block};
use crate::error::{Error, Result};
use crate::greens::{add_scaled, greens_planar, zero_tensor};
use crate::lattice::{LatticeFamily, LatticeSpec, LevelScheme, Vec2, K0};

/// Rows at each edge used for the edge label.
pub const EDGE_ROWS: usize = 4;
/// Probability ratio between the two edge bands that makes a mode an edge mode.
pub const EDGE_RATIO: f64 = 15.0;

#[derive(Clone, Debug)]
pub struct StripModel {
    pub m: usize,
    pub n: usize,
    /// Translation between neighbouring columns (along x).
    pub step: Vec2,
    /// Translation between neighbouring rows.
    pub row: Vec2,
    /// Columns per lattice period along x: the ribbon's true unit cell.
    pub period: usize,
    /// Site (i, j) sits at `positions[j * m + i]`.
    pub positions: Vec<Vec2>,
    pub detunings: Vec<f64>,
    pub components: Vec<usize>,
    pub matrix: Array2<Complex64>,
}

impl StripModel {
    pub fn site_index(&self, i: usize, j: usize) -> usize {
        j * self.m + i
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Column step and row step of a ribbon cut from `lattice`.
fn ribbon_vectors(lattice: &LatticeSpec) -> Result<(Vec2, Vec2)> {
    match lattice.family() {
        LatticeFamily::NbSquare => {
            let a = lattice.nearest_neighbour_distance();
            Ok((Vec2::new(a, 0.0), Vec2::new(0.0, a)))
        }
        _ if lattice.num_sites() == 1 && lattice.a1().y.abs() < 1e-12 * lattice.a1().norm() => {
            Ok((lattice.a1(), lattice.a2()))
        }
        _ => Err(Error::InvalidArgument(
            "ribbons need a Bravais lattice with a1 along x, or the nb-square lattice".into(),
        )),
    }
}

/// Build the ribbon Hamiltonian. Couplings reach ⌊M/2⌋ columns around the ring;
/// at exactly M/2 columns the two equivalent images are averaged so that the
/// matrix stays invariant under column translations.
pub fn build_strip(
    lattice: &LatticeSpec,
    scheme: &LevelScheme,
    m: usize,
    n: usize,
    cap: usize,
) -> Result<StripModel> {
    if m < 8 || n < 8 || m % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "ribbon needs even M ≥ 8 and N ≥ 8 (got {m} × {n})"
        )));
    }
    let comps = scheme.transitions.components().to_vec();
    let nc = comps.len();
    let dim = m * n * nc;
    if dim > cap {
        return Err(Error::MemoryGuard { dim, cap });
    }
    let (step, row) = ribbon_vectors(lattice)?;
    let mut positions = Vec::with_capacity(m * n);
    let mut detunings = Vec::with_capacity(m * n);
    let mut sublattice = Vec::with_capacity(m * n);
    for j in 0..n {
        for i in 0..m {
            let r = step * i as f64 + row * j as f64;
            let s = lattice.sublattice_of(r).ok_or_else(|| {
                Error::InvalidArgument("ribbon site is not a lattice point".into())
            })?;
            positions.push(r);
            detunings.push(lattice.sites()[s].detuning);
            sublattice.push(s);
        }
    }
    let period = (1..=m)
        .find(|&p| {
            m % p == 0
                && (0..n).all(|j| (0..m).all(|i| sublattice[j * m + i] == sublattice[j * m + (i + p) % m]))
        })
        .unwrap_or(m);
    if lattice.sublattice_of(step * m as f64).is_none()
        || lattice.sublattice_of(step * m as f64) != lattice.sublattice_of(Vec2::ZERO)
    {
        return Err(Error::InvalidArgument(format!(
            "M = {m} columns is not commensurate with the lattice"
        )));
    }
    let ring = step * m as f64;
    let half = m / 2;
    let scale = Complex64::new(3.0 * PI / K0, 0.0);
    let xi = zeeman_block(scheme.zeeman);
    // Couplings depend only on the column offset and the two rows.
    let mut h = Array2::<Complex64>::zeros((dim, dim));
    for dj in 0..n {
        for rj in 0..n {
            for d in 0..m {
                // Column offset d ∈ [0, M) wrapped to (−M/2, M/2].
                let wrapped = if d > half { d as i64 - m as i64 } else { d as i64 };
                let base = step * wrapped as f64 + row * (dj as f64 - rj as f64);
                let mut g = zero_tensor();
                if d == half {
                    let other = base - ring;
                    add_scaled(&mut g, &greens_planar(base, K0)?, Complex64::new(0.5, 0.0));
                    add_scaled(&mut g, &greens_planar(other, K0)?, Complex64::new(0.5, 0.0));
                } else if d == 0 && dj == rj {
                    continue;
                } else {
                    g = greens_planar(base, K0)?;
                }
                for ci in 0..m {
                    let cj = (ci + m - d) % m;
                    let a_site = dj * m + ci;
                    let b_site = rj * m + cj;
                    for (a, &ca) in comps.iter().enumerate() {
                        for (b, &cb) in comps.iter().enumerate() {
                            h[[a_site * nc + a, b_site * nc + b]] = g[ca][cb] * scale;
                        }
                    }
                }
            }
        }
    }
    for s in 0..m * n {
        for (a, &ca) in comps.iter().enumerate() {
            for (b, &cb) in comps.iter().enumerate() {
                h[[s * nc + a, s * nc + b]] += xi[ca][cb];
            }
            h[[s * nc + a, s * nc + a]] += Complex64::new(detunings[s], -0.5);
        }
    }
    Ok(StripModel {
        m,
        n,
        step,
        row,
        period,
        positions,
        detunings,
        components: comps,
        matrix: h,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeLabel {
    Upper,
    Lower,
    Bulk,
}

impl std::fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EdgeLabel::Upper => "upper",
            EdgeLabel::Lower => "lower",
            EdgeLabel::Bulk => "bulk",
        })
    }
}

#[derive(Clone, Debug)]
pub struct StripMode {
    pub energy: Complex64,
    /// Dominant Fourier momentum along x, in (−π/|step|, π/|step|].
    pub kx: f64,
    pub label: EdgeLabel,
    /// Probability in the top and bottom `EDGE_ROWS` rows.
    pub upper_weight: f64,
    pub lower_weight: f64,
}

impl StripMode {
    pub fn gamma(&self) -> f64 {
        -self.energy.im
    }
}

#[derive(Clone, Debug)]
pub struct StripSpectrum {
    pub m: usize,
    pub n: usize,
    pub spacing: f64,
    pub period: usize,
    pub modes: Vec<StripMode>,
}

impl StripSpectrum {
    /// Length of the true unit cell along x.
    pub fn cell(&self) -> f64 {
        self.spacing * self.period as f64
    }

    /// `kx` folded into the zone of the true unit cell, (−π/cell, π/cell].
    pub fn fold(&self, kx: f64) -> f64 {
        let g = 2.0 * PI / self.cell();
        let mut f = kx.rem_euclid(g);
        if f > 0.5 * g * (1.0 + 1e-12) {
            f -= g;
        }
        f
    }
}

/// Label one mode from its site probabilities (row-major, `p[j * m + i]`).
pub fn edge_label(p: &[f64], m: usize, n: usize) -> (EdgeLabel, f64, f64) {
    let rows = EDGE_ROWS.min(n / 2);
    let sum_rows = |r: std::ops::Range<usize>| -> f64 {
        r.map(|j| p[j * m..(j + 1) * m].iter().sum::<f64>()).sum()
    };
    let lower = sum_rows(0..rows);
    let upper = sum_rows(n - rows..n);
    let label = if upper >= EDGE_RATIO * lower && upper > 0.0 {
        EdgeLabel::Upper
    } else if lower >= EDGE_RATIO * upper && lower > 0.0 {
        EdgeLabel::Lower
    } else {
        EdgeLabel::Bulk
    };
    (label, upper, lower)
}

/// Momentum index with the largest x-Fourier power summed over rows and
/// components; returns k_x in (−π/a, π/a].
pub fn dominant_kx(v: &[Complex64], m: usize, n: usize, nc: usize, spacing: f64) -> f64 {
    let mut best = (0usize, -1.0);
    let twiddle: Vec<Complex64> = (0..m)
        .map(|i| Complex64::from_polar(1.0, -2.0 * PI * i as f64 / m as f64))
        .collect();
    for q in 0..m {
        let mut power = 0.0;
        for j in 0..n {
            for c in 0..nc {
                let mut s = Complex64::new(0.0, 0.0);
                for i in 0..m {
                    s += v[(j * m + i) * nc + c] * twiddle[(q * i) % m];
                }
                power += s.norm_sqr();
            }
        }
        if power > best.1 * (1.0 + 1e-12) {
            best = (q, power);
        }
    }
    // The DFT with e^{−2πiqi/M} picks out e^{+ik_x x} with k_x = 2πq/(Ma).
    let q = best.0 as i64;
    let q = if q > (m / 2) as i64 { q - m as i64 } else { q };
    2.0 * PI * q as f64 / (m as f64 * spacing)
}

pub fn classify_and_fourier(model: &StripModel) -> Result<StripSpectrum> {
    let pairs = eigensystem(&model.matrix)?;
    let nc = model.components.len();
    let spacing = model.step.norm();
    let modes = pairs
        .iter()
        .map(|(e, v)| {
            let p: Vec<f64> = (0..model.m * model.n)
                .map(|s| (0..nc).map(|c| v[s * nc + c].norm_sqr()).sum())
                .collect();
            let (label, upper_weight, lower_weight) = edge_label(&p, model.m, model.n);
            StripMode {
                energy: *e,
                kx: dominant_kx(v, model.m, model.n, nc, spacing),
                label,
                upper_weight,
                lower_weight,
            }
        })
        .collect();
    Ok(StripSpectrum {
        m: model.m,
        n: model.n,
        spacing,
        period: model.period,
        modes,
    })
}

/// Gap crossings of one edge at energy `level`: edge modes in neighbouring k_x
/// bins whose energies straddle `level`, joined when closer than `max_jump`.
/// Momenta are folded into the zone of the true unit cell first, so a branch
/// split between k_x and k_x + 2π/cell by the labelling is followed as one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Crossings {
    /// Crossings with dE/dk_x > 0.
    pub rising: usize,
    pub falling: usize,
}

impl Crossings {
    pub fn total(&self) -> usize {
        self.rising + self.falling
    }

    /// Net chirality: +1 per right-moving branch.
    pub fn net(&self) -> i64 {
        self.rising as i64 - self.falling as i64
    }
}

pub fn edge_crossings(spec: &StripSpectrum, edge: EdgeLabel, level: f64, max_jump: f64) -> Crossings {
    let m = spec.m / spec.period;
    let bin = |kx: f64| -> usize {
        let q = (spec.fold(kx) * spec.cell() * m as f64 / (2.0 * PI)).round() as i64;
        q.rem_euclid(m as i64) as usize
    };
    let mut bins: Vec<Vec<f64>> = vec![Vec::new(); m];
    for md in spec.modes.iter().filter(|md| md.label == edge) {
        bins[bin(md.kx)].push(md.energy.re);
    }
    let mut out = Crossings::default();
    for q in 0..m {
        let next = (q + 1) % m;
        // Greedy one-to-one pairing between the two bins, shortest jumps first;
        // each accepted pair straddling the level is one crossing. Pairs that
        // do not straddle still take part so they can claim their partners.
        let mut candidates: Vec<(f64, usize, usize, bool, bool)> = Vec::new();
        for (s, &e) in bins[q].iter().enumerate() {
            for (t, &f) in bins[next].iter().enumerate() {
                if (f - e).abs() <= max_jump {
                    let straddles = (e - level) * (f - level) < 0.0;
                    candidates.push(((f - e).abs(), s, t, f > e, straddles));
                }
            }
        }
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut used_here = vec![false; bins[q].len()];
        let mut used_next = vec![false; bins[next].len()];
        for (_, s, t, up, straddles) in candidates {
            if used_here[s] || used_next[t] {
                continue;
            }
            used_here[s] = true;
            used_next[t] = true;
            if !straddles {
                continue;
            }
            if up {
                out.rising += 1;
            } else {
                out.falling += 1;
            }
        }
    }
    out
}

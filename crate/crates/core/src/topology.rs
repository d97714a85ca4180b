//! Chern numbers from Bloch eigenvectors on a discretised zone (lattice link
//! variables, one U(1) or U(N) link per grid edge).

use std::f64::consts::PI;
use std::ops::Range;

use ndarray::Array2;
use ndarray_linalg::Determinant;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::bloch::{build_bloch_matrix, eigensystem};
use crate::error::{Error, Result};
use crate::interaction::InteractionModel;
use crate::lattice::{bz_grid, BzGrid, LevelScheme};

pub const DEFAULT_GRID: usize = 60;

/// Largest accepted plaquette flux. Beyond this the phase of the plaquette
/// product can alias by 2π and the integer is no longer trustworthy.
pub const MAX_PLAQUETTE_FLUX: f64 = 0.9 * PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChernOptions {
    pub n: usize,
    /// Smallest accepted separation in Re E between consecutive bands (Γ0).
    pub min_gap: f64,
    pub max_residual: f64,
}

impl Default for ChernOptions {
    fn default() -> Self {
        ChernOptions {
            n: DEFAULT_GRID,
            min_gap: 1e-6,
            max_residual: 0.01,
        }
    }
}

/// Eigenvectors of every band on every grid point, bands sorted by Re E.
#[derive(Clone, Debug)]
pub struct GridEigensystem {
    pub grid: BzGrid,
    /// `energies[p][b]`, `vectors[p][b]` with `p = grid.index(i, j)`.
    pub energies: Vec<Vec<Complex64>>,
    pub vectors: Vec<Vec<Vec<Complex64>>>,
}

impl GridEigensystem {
    pub fn compute(model: &InteractionModel, scheme: &LevelScheme, n: usize) -> Result<Self> {
        let grid = bz_grid(model.lattice(), n)?;
        let solved: Vec<Result<Vec<(Complex64, Vec<Complex64>)>>> = grid
            .points
            .par_iter()
            .map(|&k| eigensystem(&build_bloch_matrix(model, scheme, k)?.matrix))
            .collect();
        let mut energies = Vec::with_capacity(solved.len());
        let mut vectors = Vec::with_capacity(solved.len());
        for s in solved {
            let (e, v): (Vec<_>, Vec<_>) = s?.into_iter().unzip();
            energies.push(e);
            vectors.push(v);
        }
        Ok(GridEigensystem {
            grid,
            energies,
            vectors,
        })
    }

    pub fn num_bands(&self) -> usize {
        self.energies.first().map_or(0, |e| e.len())
    }

    /// Minimum over the grid of Re E_{lower+1} − Re E_lower, with its location.
    pub fn min_gap_above(&self, lower: usize) -> (f64, usize, usize) {
        let n = self.grid.n;
        let mut best = (f64::INFINITY, 0, 0);
        for i in 0..n {
            for j in 0..n {
                let e = &self.energies[self.grid.index(i, j)];
                let g = e[lower + 1].re - e[lower].re;
                if g < best.0 {
                    best = (g, i, j);
                }
            }
        }
        best
    }
}

/// Berry flux through every plaquette for a group of bands, `flux[i * n + j]`
/// at the plaquette with lower-left corner (i, j). Each value lies in (−π, π].
pub fn berry_flux_map(sys: &GridEigensystem, bands: Range<usize>) -> Vec<f64> {
    let n = sys.grid.n;
    let g = &sys.grid;
    let link = |p: usize, q: usize| -> Complex64 {
        let a = &sys.vectors[p];
        let b = &sys.vectors[q];
        let m = bands.len();
        if m == 1 {
            let s: Complex64 = a[bands.start]
                .iter()
                .zip(&b[bands.start])
                .map(|(x, y)| x.conj() * y)
                .sum();
            return s;
        }
        let mut s = Array2::<Complex64>::zeros((m, m));
        for (r, ba) in bands.clone().enumerate() {
            for (c, bb) in bands.clone().enumerate() {
                s[[r, c]] = a[ba].iter().zip(&b[bb]).map(|(x, y)| x.conj() * y).sum();
            }
        }
        s.det().unwrap_or(Complex64::new(0.0, 0.0))
    };
    (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            let p00 = g.index(i, j);
            let p10 = g.index(i + 1, j);
            let p11 = g.index(i + 1, j + 1);
            let p01 = g.index(i, j + 1);
            let w = link(p00, p10) * link(p10, p11) * link(p11, p01) * link(p01, p00);
            // arg ∈ (−π, π].
            let a = w.arg();
            if a == -PI {
                PI
            } else {
                a
            }
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct BandChern {
    pub bands: Range<usize>,
    pub chern: i64,
    pub residual: f64,
    /// Largest |flux| on a single plaquette.
    pub max_flux: f64,
    /// Smallest separation in Re E to the neighbouring bands (Γ0), infinite at
    /// the edges of the spectrum.
    pub min_gap: f64,
}

#[derive(Clone, Debug)]
pub struct ChernResult {
    pub n: usize,
    pub groups: Vec<BandChern>,
}

impl ChernResult {
    pub fn total(&self) -> i64 {
        self.groups.iter().map(|g| g.chern).sum()
    }

    /// Chern numbers per group, lowest band first.
    pub fn values(&self) -> Vec<i64> {
        self.groups.iter().map(|g| g.chern).collect()
    }
}

fn group_chern(sys: &GridEigensystem, bands: Range<usize>, opts: &ChernOptions) -> Result<BandChern> {
    let flux = berry_flux_map(sys, bands.clone());
    let total: f64 = flux.iter().sum::<f64>() / (2.0 * PI);
    let chern = total.round();
    let residual = (total - chern).abs();
    let max_flux = flux.iter().fold(0.0f64, |m, f| m.max(f.abs()));
    let nb = sys.num_bands();
    let below = if bands.start > 0 {
        sys.min_gap_above(bands.start - 1).0
    } else {
        f64::INFINITY
    };
    let above = if bands.end < nb {
        sys.min_gap_above(bands.end - 1).0
    } else {
        f64::INFINITY
    };
    if residual > opts.max_residual || max_flux > MAX_PLAQUETTE_FLUX {
        return Err(Error::Resolution {
            band: bands.start,
            residual: residual.max(max_flux / PI),
            n: sys.grid.n,
        });
    }
    Ok(BandChern {
        bands,
        chern: chern as i64,
        residual,
        max_flux,
        min_gap: below.min(above),
    })
}

/// One Chern number per band. Every pair of consecutive bands must stay separated
/// by more than `min_gap` on the whole grid.
pub fn chern_numbers(
    model: &InteractionModel,
    scheme: &LevelScheme,
    opts: &ChernOptions,
) -> Result<ChernResult> {
    let sys = GridEigensystem::compute(model, scheme, opts.n)?;
    chern_from_grid(&sys, opts)
}

pub fn chern_from_grid(sys: &GridEigensystem, opts: &ChernOptions) -> Result<ChernResult> {
    let nb = sys.num_bands();
    for lower in 0..nb.saturating_sub(1) {
        let (gap, i, j) = sys.min_gap_above(lower);
        if gap <= opts.min_gap {
            return Err(Error::DegenerateBands {
                lower,
                upper: lower + 1,
                i,
                j,
                gap,
            });
        }
    }
    let groups = (0..nb)
        .map(|b| group_chern(sys, b..b + 1, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(ChernResult { n: sys.grid.n, groups })
}

/// Chern numbers of band groups: consecutive bands closer than `min_gap` somewhere
/// on the grid are merged and get a single (non-Abelian) invariant.
pub fn chern_groups(sys: &GridEigensystem, opts: &ChernOptions) -> Result<ChernResult> {
    let nb = sys.num_bands();
    let mut groups = Vec::new();
    let mut start = 0;
    for lower in 0..nb {
        let split = lower + 1 == nb || sys.min_gap_above(lower).0 > opts.min_gap;
        if split {
            groups.push(group_chern(sys, start..lower + 1, opts)?);
            start = lower + 1;
        }
    }
    Ok(ChernResult { n: sys.grid.n, groups })
}

//! Bloch matrices of the lattice and their complex band structure.

use ndarray::Array2;
use ndarray_linalg::Eig;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::interaction::InteractionModel;
use crate::lattice::{LevelScheme, Vec2};

/// `M(k_B)` in units of Γ0, relative to ω_A. Rows and columns are ordered site
/// major, then by the enabled Cartesian components.
#[derive(Clone, Debug)]
pub struct BlochMatrix {
    pub k: Vec2,
    pub matrix: Array2<Complex64>,
    /// (site, component) label of every row.
    pub labels: Vec<(usize, usize)>,
    pub shell_count: usize,
    pub width: f64,
    pub environment: &'static str,
}

impl BlochMatrix {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    /// `(M + M†)/2`: the conservative part, with all radiative loss removed.
    pub fn hermitian_part(&self) -> Array2<Complex64> {
        let h = self.matrix.t().mapv(|v| v.conj());
        (&self.matrix + &h).mapv(|v| v * 0.5)
    }

    /// `(M − M†)/(2i)`: minus the decay matrix, negative semidefinite for a
    /// passive system.
    pub fn anti_hermitian_part(&self) -> Array2<Complex64> {
        let h = self.matrix.t().mapv(|v| v.conj());
        (&self.matrix - &h).mapv(|v| v / Complex64::new(0.0, 2.0))
    }
}

/// Zeeman block ξ on the Cartesian components: ξ_xy = −iμB, ξ_yx = +iμB.
pub fn zeeman_block(zeeman: f64) -> [[Complex64; 3]; 3] {
    let z = Complex64::new(0.0, 0.0);
    [
        [z, Complex64::new(0.0, -zeeman), z],
        [Complex64::new(0.0, zeeman), z, z],
        [z, z, z],
    ]
}

pub fn build_bloch_matrix(
    model: &InteractionModel,
    scheme: &LevelScheme,
    k: Vec2,
) -> Result<BlochMatrix> {
    let lattice = model.lattice();
    let sites = lattice.sites();
    let comps = scheme.transitions.components();
    let nc = comps.len();
    let dim = sites.len() * nc;
    let scale = Complex64::new(model.coupling_scale(), 0.0);
    let xi = zeeman_block(scheme.zeeman);
    // The image of each atom in the surface shifts and broadens its own line.
    let image = model.self_scattered();
    let mut m = Array2::<Complex64>::zeros((dim, dim));
    for (mu, s_mu) in sites.iter().enumerate() {
        for (nu, s_nu) in sites.iter().enumerate() {
            let chi = model.lattice_sum(k, s_mu.offset - s_nu.offset)?;
            for (a, &ca) in comps.iter().enumerate() {
                for (b, &cb) in comps.iter().enumerate() {
                    let mut v = chi[ca][cb] * scale;
                    if mu == nu {
                        v += xi[ca][cb] + image[ca][cb] * scale;
                        if a == b {
                            v += Complex64::new(s_mu.detuning, -0.5);
                        }
                    }
                    m[[mu * nc + a, nu * nc + b]] = v;
                }
            }
        }
    }
    let labels = (0..sites.len())
        .flat_map(|s| comps.iter().map(move |&c| (s, c)))
        .collect();
    Ok(BlochMatrix {
        k,
        matrix: m,
        labels,
        shell_count: model.shell_count(),
        width: model.width(),
        environment: model.environment().tag(),
    })
}

/// One eigenmode at one Bloch vector.
#[derive(Clone, Debug)]
pub struct BandPoint {
    pub k: Vec2,
    pub band: usize,
    /// `ω − iγ` in Γ0, relative to ω_A.
    pub energy: Complex64,
    /// Right eigenvector, unit norm, largest component real and positive.
    pub vector: Vec<Complex64>,
    pub inside_light_cone: bool,
}

impl BandPoint {
    pub fn omega(&self) -> f64 {
        self.energy.re
    }

    pub fn gamma(&self) -> f64 {
        -self.energy.im
    }
}

/// Eigenpairs of a general complex matrix sorted by Re E, unit-normalised with a
/// fixed phase.
pub fn eigensystem(m: &Array2<Complex64>) -> Result<Vec<(Complex64, Vec<Complex64>)>> {
    if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Eigensolver("matrix has non-finite entries".into()));
    }
    let (vals, vecs) = m.eig().map_err(|e| Error::Eigensolver(e.to_string()))?;
    let mut out: Vec<(Complex64, Vec<Complex64>)> = vals
        .iter()
        .enumerate()
        .map(|(j, &e)| (e, normalise(vecs.column(j).to_vec())))
        .collect();
    out.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    Ok(out)
}

/// Unit norm, with the largest-magnitude entry (first one on ties) made real
/// positive.
pub fn normalise(mut v: Vec<Complex64>) -> Vec<Complex64> {
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let mut best = 0;
    let mut best_mag = -1.0;
    for (i, c) in v.iter().enumerate() {
        // Tiny slack keeps the pick stable against rounding noise between equal entries.
        if c.norm() > best_mag * (1.0 + 1e-9) {
            best = i;
            best_mag = c.norm();
        }
    }
    let phase = if best_mag > 0.0 {
        v[best].conj() / v[best].norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let f = phase / norm.max(f64::MIN_POSITIVE);
    for c in v.iter_mut() {
        *c *= f;
    }
    v
}

pub fn light_cone_classify(model: &InteractionModel, k: Vec2) -> bool {
    model.lattice().fold_to_first_zone(k).norm() < model.light_radius()
}

pub fn solve_bands(model: &InteractionModel, scheme: &LevelScheme, k: Vec2) -> Result<Vec<BandPoint>> {
    let m = build_bloch_matrix(model, scheme, k)?;
    let inside = light_cone_classify(model, k);
    Ok(eigensystem(&m.matrix)?
        .into_iter()
        .enumerate()
        .map(|(band, (energy, vector))| BandPoint {
            k,
            band,
            energy,
            vector,
            inside_light_cone: inside,
        })
        .collect())
}

/// A k-point left out of a sweep, with the reason.
#[derive(Clone, Debug)]
pub struct SkippedPoint {
    pub index: usize,
    pub k: Vec2,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct BandSweep {
    /// Per sampled k (in input order) the bands, or `None` when skipped.
    pub points: Vec<Option<Vec<BandPoint>>>,
    pub skipped: Vec<SkippedPoint>,
}

impl BandSweep {
    pub fn num_bands(&self) -> usize {
        self.points.iter().flatten().map(|b| b.len()).next().unwrap_or(0)
    }

    /// Re E of one band at every retained point.
    pub fn band(&self, band: usize) -> Vec<f64> {
        self.points
            .iter()
            .flatten()
            .map(|b| b[band].omega())
            .collect()
    }
}

/// Solve every k in parallel. Light-circle and plasmon-pole hits are skipped and
/// reported; any other failure aborts. With `track`, band labels follow the
/// largest eigenvector overlap from one retained point to the next.
pub fn band_sweep(
    model: &InteractionModel,
    scheme: &LevelScheme,
    ks: &[Vec2],
    track: bool,
) -> Result<BandSweep> {
    let results: Vec<Result<Vec<BandPoint>>> = ks
        .par_iter()
        .map(|&k| solve_bands(model, scheme, k))
        .collect();
    let mut sweep = BandSweep::default();
    for (index, (r, &k)) in results.into_iter().zip(ks).enumerate() {
        match r {
            Ok(b) => sweep.points.push(Some(b)),
            Err(e @ (Error::LightCircle { .. } | Error::PlasmonPole { .. })) => {
                log::info!("skipping k = ({:.6}, {:.6}): {e}", k.x, k.y);
                sweep.skipped.push(SkippedPoint {
                    index,
                    k,
                    reason: e.to_string(),
                });
                sweep.points.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    if track {
        track_bands(&mut sweep.points);
    }
    Ok(sweep)
}

fn overlap(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm()
}

fn track_bands(points: &mut [Option<Vec<BandPoint>>]) {
    let mut prev: Option<Vec<Vec<Complex64>>> = None;
    for slot in points.iter_mut() {
        let Some(bands) = slot else { continue };
        if let Some(p) = &prev {
            let n = bands.len();
            let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
            for (i, pv) in p.iter().enumerate() {
                for (j, b) in bands.iter().enumerate() {
                    pairs.push((overlap(pv, &b.vector), i, j));
                }
            }
            pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
            let mut assign = vec![usize::MAX; n];
            let mut used = vec![false; n];
            for (_, i, j) in pairs {
                if assign[i] == usize::MAX && !used[j] {
                    assign[i] = j;
                    used[j] = true;
                }
            }
            let old = std::mem::take(bands);
            let mut old: Vec<Option<BandPoint>> = old.into_iter().map(Some).collect();
            for (i, &j) in assign.iter().enumerate() {
                let mut b = old[j].take().expect("assignment is a permutation");
                b.band = i;
                bands.push(b);
            }
        }
        prev = Some(bands.iter().map(|b| b.vector.clone()).collect());
    }
}

/// Gap between bands `lower` and `lower + 1` of a sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapReport {
    pub lower: usize,
    /// `min_k E_{lower+1} − max_k E_lower`; negative when the bands overlap in energy.
    pub indirect: f64,
    /// `min_k (E_{lower+1}(k) − E_lower(k))`.
    pub direct: f64,
    pub top_of_lower: f64,
    pub bottom_of_upper: f64,
}

/// Gap analysis on Re E. With `outside_only`, points inside the light cone are
/// ignored (their modes are broadened by radiation).
pub fn band_gap(sweep: &BandSweep, lower: usize, outside_only: bool) -> Option<GapReport> {
    let mut top = f64::NEG_INFINITY;
    let mut bottom = f64::INFINITY;
    let mut direct = f64::INFINITY;
    let mut any = false;
    for b in sweep.points.iter().flatten() {
        if lower + 1 >= b.len() || (outside_only && b[0].inside_light_cone) {
            continue;
        }
        any = true;
        top = top.max(b[lower].omega());
        bottom = bottom.min(b[lower + 1].omega());
        direct = direct.min(b[lower + 1].omega() - b[lower].omega());
    }
    any.then_some(GapReport {
        lower,
        indirect: bottom - top,
        direct,
        top_of_lower: top,
        bottom_of_upper: bottom,
    })
}

/// Largest gap (by the indirect measure) between consecutive bands.
pub fn widest_gap(sweep: &BandSweep, outside_only: bool) -> Option<GapReport> {
    (0..sweep.num_bands().saturating_sub(1))
        .filter_map(|l| band_gap(sweep, l, outside_only))
        .max_by(|a, b| a.indirect.total_cmp(&b.indirect))
}

//! Finite clusters of atoms with couplings from the real-space Green's function.

use ndarray::Array2;
use num_complex::Complex64;

use crate::bloch::{eigensystem, zeeman_block};
use crate::error::{Error, Result};
use crate::greens::greens_planar;
use crate::lattice::{LatticeSpec, LevelScheme, Vec2, K0};

/// Atoms of a finite patch: positions (λ), per-site detuning (Γ0) and sublattice.
#[derive(Clone, Debug, Default)]
pub struct Cluster {
    pub positions: Vec<Vec2>,
    pub detunings: Vec<f64>,
    pub sublattice: Vec<usize>,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// All lattice atoms within `radius` of the origin, in a fixed order.
    pub fn disc(lattice: &LatticeSpec, radius: f64) -> Self {
        let r1 = lattice.a1().norm();
        let r2 = lattice.a2().norm();
        let area = lattice.cell_area();
        // Enough cells to cover the disc along either direction.
        let reach = (radius * r1.max(r2) / area).ceil() as i64 + 2;
        let mut c = Cluster::default();
        for m in -reach..=reach {
            for n in -reach..=reach {
                let base = lattice.lattice_vector(m, n);
                for (s, site) in lattice.sites().iter().enumerate() {
                    let r = base + site.offset;
                    if r.norm() <= radius * (1.0 + 1e-12) {
                        c.positions.push(r);
                        c.detunings.push(site.detuning);
                        c.sublattice.push(s);
                    }
                }
            }
        }
        c
    }

    /// Remove the listed site indices (duplicates ignored).
    pub fn without(&self, removed: &[usize]) -> Self {
        let mut c = Cluster::default();
        for i in 0..self.len() {
            if !removed.contains(&i) {
                c.positions.push(self.positions[i]);
                c.detunings.push(self.detunings[i]);
                c.sublattice.push(self.sublattice[i]);
            }
        }
        c
    }
}

/// H_eff of the cluster in Γ0 relative to ω_A: `(δ_i − i/2)` and ξ on the
/// diagonal blocks, `(3π/k)G(r_i − r_j)` between atoms. Rows are site major.
pub fn cluster_hamiltonian(cluster: &Cluster, scheme: &LevelScheme, cap: usize) -> Result<Array2<Complex64>> {
    let comps = scheme.transitions.components();
    let nc = comps.len();
    let n = cluster.len();
    let dim = n * nc;
    if dim > cap {
        return Err(Error::MemoryGuard { dim, cap });
    }
    let scale = 3.0 * std::f64::consts::PI / K0;
    let xi = zeeman_block(scheme.zeeman);
    let mut h = Array2::<Complex64>::zeros((dim, dim));
    for i in 0..n {
        for (a, &ca) in comps.iter().enumerate() {
            for (b, &cb) in comps.iter().enumerate() {
                let mut v = xi[ca][cb];
                if a == b {
                    v += Complex64::new(cluster.detunings[i], -0.5);
                }
                h[[i * nc + a, i * nc + b]] = v;
            }
        }
        for j in (i + 1)..n {
            let g = greens_planar(cluster.positions[i] - cluster.positions[j], K0)?;
            for (a, &ca) in comps.iter().enumerate() {
                for (b, &cb) in comps.iter().enumerate() {
                    let v = g[ca][cb] * scale;
                    h[[i * nc + a, j * nc + b]] = v;
                    h[[j * nc + b, i * nc + a]] = v;
                }
            }
        }
    }
    Ok(h)
}

/// Bloch-filtered block of a finite cluster, `(1/N_μ) Σ_{i∈μ, j∈ν} e^{ik·(r_j − r_i)}
/// H_ij` (with r_j − r_i measured between unit-cell origins), built directly
/// without forming the full Hamiltonian. Eigenvalues approach the
/// infinite-lattice bands as the cluster grows.
pub fn bloch_filtered(
    lattice: &LatticeSpec,
    cluster: &Cluster,
    scheme: &LevelScheme,
    k: Vec2,
) -> Result<Array2<Complex64>> {
    let comps = scheme.transitions.components();
    let nc = comps.len();
    let m = lattice.num_sites();
    let dim = m * nc;
    let scale = 3.0 * std::f64::consts::PI / K0;
    let xi = zeeman_block(scheme.zeeman);
    let mut out = Array2::<Complex64>::zeros((dim, dim));
    let mut counts = vec![0usize; m];
    let offsets: Vec<Vec2> = lattice.sites().iter().map(|s| s.offset).collect();
    for i in 0..cluster.len() {
        let mu = cluster.sublattice[i];
        counts[mu] += 1;
        let cell_i = cluster.positions[i] - offsets[mu];
        for j in 0..cluster.len() {
            if i == j {
                continue;
            }
            let nu = cluster.sublattice[j];
            let cell_j = cluster.positions[j] - offsets[nu];
            let phase = Complex64::from_polar(scale, k.dot(cell_j - cell_i));
            let g = greens_planar(cluster.positions[i] - cluster.positions[j], K0)?;
            for (a, &ca) in comps.iter().enumerate() {
                for (b, &cb) in comps.iter().enumerate() {
                    out[[mu * nc + a, nu * nc + b]] += g[ca][cb] * phase;
                }
            }
        }
    }
    for mu in 0..m {
        let c = counts[mu].max(1) as f64;
        for a in 0..nc {
            for col in 0..dim {
                out[[mu * nc + a, col]] /= c;
            }
        }
        for (a, &ca) in comps.iter().enumerate() {
            for (b, &cb) in comps.iter().enumerate() {
                out[[mu * nc + a, mu * nc + b]] += xi[ca][cb];
            }
            out[[mu * nc + a, mu * nc + a]] +=
                Complex64::new(lattice.sites()[mu].detuning, -0.5);
        }
    }
    Ok(out)
}

/// Sorted eigenvalues of the Bloch-filtered block.
pub fn filtered_bands(
    lattice: &LatticeSpec,
    cluster: &Cluster,
    scheme: &LevelScheme,
    k: Vec2,
) -> Result<Vec<Complex64>> {
    Ok(eigensystem(&bloch_filtered(lattice, cluster, scheme, k)?)?
        .into_iter()
        .map(|(e, _)| e)
        .collect())
}

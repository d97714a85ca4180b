//! Photon-mediated couplings of a 2D lattice, summed in momentum space.
//!
//! `InteractionModel::lattice_sum(q, d)` returns `Σ_R e^{−iq·R} G(R + d)` (the
//! `R + d = 0` term omitted) via `(1/𝒜) Σ_G g(G + q) e^{i(G+q)·d}` minus the
//! source value when `d = 0`. The result is periodic in `q` over the reciprocal
//! lattice, so `q` is folded into the first zone first.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greens::{
    add_scaled, diagonal, max_abs, regularized_source, sub, weyl_regularized, zero_tensor,
    Tensor3, LIGHT_GUARD,
};
use crate::lattice::{LatticeSpec, Vec2, K0};
use crate::layered::{scattered_source, weyl_scattered, SurfaceEnvironment};
use crate::quadrature::QuadOptions;

/// How the atoms' position spread is modelled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AtomModel {
    /// Atoms pinned to their sites. The sums use a Gaussian regulator of width
    /// `a_reg` (units of λ) with the exponential prefactor that removes its effect;
    /// `None` picks `min(0.1·R_nn, 0.5/k)`.
    Point { a_reg: Option<f64> },
    /// Atoms spread over a Gaussian of width `a_ho` (units of λ).
    Fluctuating { a_ho: f64 },
}

impl AtomModel {
    pub fn point() -> Self {
        AtomModel::Point { a_reg: None }
    }

    /// `a_ho` given in units of the lattice spacing, as is customary; zero means
    /// point atoms.
    pub fn from_spacing_fraction(a_ho_over_a: f64, spacing: f64) -> Self {
        if a_ho_over_a > 0.0 {
            AtomModel::Fluctuating {
                a_ho: a_ho_over_a * spacing,
            }
        } else {
            AtomModel::point()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Environment {
    FreeSpace,
    Surface(SurfaceEnvironment),
}

impl Environment {
    pub fn eps_d(&self) -> f64 {
        match self {
            Environment::FreeSpace => 1.0,
            Environment::Surface(s) => s.eps_d,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Environment::FreeSpace => "free-space",
            Environment::Surface(_) => "surface",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumOptions {
    /// Momentum cutoff |G + q| ≤ g_max (1/λ). `None` adapts it to the regulator.
    pub g_max: Option<f64>,
    /// Relative guard around the light circle.
    pub light_guard: f64,
    /// Largest allowed contribution (Γ0) of the outermost 10% of the momentum disc
    /// when `g_max` is set explicitly.
    pub shell_tolerance: f64,
    /// Radius of the detour around the plasmon pole in the source integrals.
    pub pole_radius: f64,
}

impl Default for SumOptions {
    fn default() -> Self {
        SumOptions {
            g_max: None,
            light_guard: LIGHT_GUARD,
            shell_tolerance: 1e-8,
            pole_radius: 1e-3,
        }
    }
}

/// Gaussian tail cutoff: e^{−a²p²/2} < e^{−TAIL_EXPONENT}.
const TAIL_EXPONENT: f64 = 40.0;

/// Prepared coupling model for one lattice, environment and atom model.
#[derive(Clone, Debug)]
pub struct InteractionModel {
    lattice: LatticeSpec,
    env: Environment,
    atoms: AtomModel,
    opts: SumOptions,
    /// Wavenumber in the medium holding the atoms, √ε_d·k.
    k: f64,
    width: f64,
    prefactor: f64,
    p_max: f64,
    p_max_sc: f64,
    shells: Vec<Vec2>,
    free_source: Complex64,
    surface_source: Tensor3,
}

impl InteractionModel {
    pub fn new(
        lattice: &LatticeSpec,
        env: Environment,
        atoms: AtomModel,
        opts: SumOptions,
    ) -> Result<Self> {
        let eps_d = env.eps_d();
        let k = K0 * eps_d.sqrt();
        let (width, prefactored) = match atoms {
            AtomModel::Point { a_reg } => {
                let w = a_reg.unwrap_or_else(|| {
                    (0.1 * lattice.nearest_neighbour_distance()).min(0.5 / k)
                });
                if !(w > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "regulator width must be positive, got {w}"
                    )));
                }
                (w, true)
            }
            AtomModel::Fluctuating { a_ho } => {
                if !(a_ho > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "fluctuation width must be positive, got {a_ho}"
                    )));
                }
                if matches!(env, Environment::Surface(_)) {
                    return Err(Error::InvalidArgument(
                        "fluctuating atoms are supported in free space only; use a_ho = 0 above a surface"
                            .into(),
                    ));
                }
                (a_ho, false)
            }
        };
        let auto = (2.0 * TAIL_EXPONENT).sqrt() / width;
        let p_max = opts.g_max.unwrap_or(auto);
        if !(p_max > 0.0) {
            return Err(Error::InvalidArgument(format!("G_max must be positive, got {p_max}")));
        }
        let (p_max_sc, surface_source) = match env {
            Environment::FreeSpace => (0.0, zero_tensor()),
            Environment::Surface(s) => {
                let reach = (k * k + (TAIL_EXPONENT / (2.0 * s.h)).powi(2)).sqrt();
                let src = scattered_source(K0, &s, QuadOptions::default(), opts.pole_radius)?;
                (reach, src.tensor())
            }
        };
        let r = lattice.reciprocal();
        let fold_radius = r.g1.norm() + r.g2.norm();
        let shells = lattice
            .reciprocal_set(p_max.max(p_max_sc) + fold_radius)
            .shells;
        let free_source = regularized_source(k, width)?;
        Ok(InteractionModel {
            lattice: lattice.clone(),
            env,
            atoms,
            opts,
            k,
            width,
            prefactor: if prefactored {
                (0.5 * k * k * width * width).exp()
            } else {
                1.0
            },
            p_max,
            p_max_sc,
            shells,
            free_source,
            surface_source,
        })
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn environment(&self) -> &Environment {
        &self.env
    }

    pub fn atoms(&self) -> AtomModel {
        self.atoms
    }

    /// Wavenumber in the dielectric holding the atoms (1/λ).
    pub fn k(&self) -> f64 {
        self.k
    }

    /// Width of the Gaussian regulator actually used (λ).
    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn g_max(&self) -> f64 {
        self.p_max
    }

    pub fn shell_count(&self) -> usize {
        self.shells.len()
    }

    /// Conversion from Green's-function units to Γ0: 3πΓ0/k.
    pub fn coupling_scale(&self) -> f64 {
        3.0 * PI / self.k
    }

    /// Light-circle radius for the folded Bloch vector.
    pub fn light_radius(&self) -> f64 {
        self.k
    }

    /// `Σ_R e^{−iq·R} G(R + d)` in Green's-function units, self term excluded.
    pub fn lattice_sum(&self, q: Vec2, d: Vec2) -> Result<Tensor3> {
        let q0 = self.lattice.fold_to_first_zone(q);
        let has_offset = d.norm_sqr() > 0.0;
        let mut free = zero_tensor();
        let mut outer = zero_tensor();
        let mut scattered = zero_tensor();
        let outer_radius = 0.9 * self.p_max;
        let surface = match &self.env {
            Environment::Surface(s) if !s.is_matched() => Some(s),
            _ => None,
        };
        for g in &self.shells {
            let p = *g + q0;
            let pn = p.norm();
            let phase = if has_offset {
                Complex64::from_polar(1.0, p.dot(d))
            } else {
                Complex64::new(1.0, 0.0)
            };
            if pn <= self.p_max {
                let s = weyl_regularized(p, self.k, self.width, self.opts.light_guard)?;
                add_scaled(&mut free, &s.g, phase);
                if pn > outer_radius {
                    add_scaled(&mut outer, &s.g, phase);
                }
            }
            if let Some(env) = surface {
                if pn <= self.p_max_sc {
                    let gs = weyl_scattered(p, 0.0, K0, env, self.opts.light_guard)?;
                    add_scaled(&mut scattered, &gs, phase);
                }
            }
        }
        let inv_area = 1.0 / self.lattice.cell_area();
        if self.opts.g_max.is_some() {
            let residual = max_abs(&outer) * inv_area * self.prefactor * self.coupling_scale();
            if residual > self.opts.shell_tolerance {
                return Err(Error::ShellConvergence {
                    residual,
                    g_max: self.p_max,
                });
            }
        }
        let mut total = zero_tensor();
        let free_part = if has_offset {
            free
        } else {
            sub(
                &free,
                &diagonal([self.free_source * self.lattice.cell_area(); 3]),
            )
        };
        add_scaled(
            &mut total,
            &free_part,
            Complex64::new(inv_area * self.prefactor, 0.0),
        );
        if surface.is_some() {
            add_scaled(&mut total, &scattered, Complex64::new(inv_area, 0.0));
            if !has_offset {
                add_scaled(&mut total, &self.surface_source, Complex64::new(-1.0, 0.0));
            }
        }
        Ok(total)
    }

    /// Field of an atom's own image at its site, `G_sc(0)`; zero off a surface.
    pub fn self_scattered(&self) -> Tensor3 {
        match &self.env {
            Environment::Surface(s) if !s.is_matched() => self.surface_source,
            _ => zero_tensor(),
        }
    }

    /// Lattice sum in the Bloch-vector convention `Σ_R e^{ik·R} G(R + offset)`.
    pub fn momentum_sum(&self, k_b: Vec2, offset: Vec2) -> Result<Tensor3> {
        self.lattice_sum(-k_b, offset)
    }
}

/// Which combination of the regulated sum and source to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutoffForm {
    /// `e^{k²a²/2}·[S − G*(0)]`, in which the regulator cancels between the terms.
    Balanced,
    /// `e^{k²a²/2}·S − G*(0)`: the prefactor on the sum only.
    SumOnly,
}

/// The regulated free-space combination for `Σ_{R≠0} e^{−iq·R}G(R)` at one width
/// `a`, with `S = (1/𝒜)Σ_G g*(G+q; 0)` summed until the Gaussian tail is e^{−40}.
pub fn regulated_combination(
    lattice: &LatticeSpec,
    q: Vec2,
    a: f64,
    form: CutoffForm,
) -> Result<Tensor3> {
    let k = K0;
    let q0 = lattice.fold_to_first_zone(q);
    let p_max = (2.0 * TAIL_EXPONENT).sqrt() / a;
    let r = lattice.reciprocal();
    let set = lattice.reciprocal_set(p_max + r.g1.norm() + r.g2.norm());
    let mut s = zero_tensor();
    // Sum from the outside in so the many small terms accumulate first.
    for g in set.shells.iter().rev() {
        let p = *g + q0;
        if p.norm() <= p_max {
            let w = weyl_regularized(p, k, a, LIGHT_GUARD)?;
            add_scaled(&mut s, &w.g, Complex64::new(1.0, 0.0));
        }
    }
    let inv_area = 1.0 / lattice.cell_area();
    for row in s.iter_mut() {
        for v in row.iter_mut() {
            *v *= inv_area;
        }
    }
    let src = diagonal([regularized_source(k, a)?; 3]);
    let pre = Complex64::new((0.5 * k * k * a * a).exp(), 0.0);
    Ok(match form {
        CutoffForm::Balanced => crate::greens::scale(&sub(&s, &src), pre),
        CutoffForm::SumOnly => sub(&crate::greens::scale(&s, pre), &src),
    })
}

/// Result of a regulator sweep toward the point-atom limit.
#[derive(Clone, Debug)]
pub struct CutoffEstimate {
    pub value: Tensor3,
    /// Largest per-component spread over the sweep, relative to the component
    /// magnitude (floored at 1e-3 of the tensor's largest entry).
    pub spread: f64,
    pub values: Vec<Tensor3>,
}

/// Evaluate the balanced combination over a strictly decreasing list of widths and
/// return the smallest-width value with the observed plateau spread.
pub fn cutoff_extrapolated_sum(
    lattice: &LatticeSpec,
    k_b: Vec2,
    widths: &[f64],
    tolerance: f64,
) -> Result<CutoffEstimate> {
    if widths.is_empty() || widths.windows(2).any(|w| w[1] >= w[0]) || widths[0] <= 0.0 {
        return Err(Error::InvalidArgument(
            "regulator widths must be positive and strictly decreasing".into(),
        ));
    }
    let values = widths
        .iter()
        .map(|&a| regulated_combination(lattice, -k_b, a, CutoffForm::Balanced))
        .collect::<Result<Vec<_>>>()?;
    let last = *values.last().expect("non-empty");
    let spread = plateau_spread(&values);
    if spread > tolerance {
        return Err(Error::Plateau {
            spread,
            tolerance,
            values,
        });
    }
    Ok(CutoffEstimate {
        value: last,
        spread,
        values,
    })
}

pub fn plateau_spread(values: &[Tensor3]) -> f64 {
    let Some(last) = values.last() else {
        return 0.0;
    };
    let floor = 1e-3 * max_abs(last);
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let re: Vec<Complex64> = values.iter().map(|v| v[i][j]).collect();
            let reference = last[i][j].norm().max(floor);
            if reference == 0.0 {
                continue;
            }
            for a in &re {
                for b in &re {
                    worst = worst.max((a - b).norm() / reference);
                }
            }
        }
    }
    worst
}

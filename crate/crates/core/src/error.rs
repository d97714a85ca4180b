use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("unknown waypoint `{name}` for the {family} lattice family")]
    UnknownWaypoint { name: String, family: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Evaluation outside the domain of a closed-form expression.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("light-circle singularity: |p| = {p} lies within the guard of k = {k}")]
    LightCircle { p: f64, k: f64 },

    #[error("surface-plasmon pole: Fresnel denominator {denominator:e} at |p| = {p}")]
    PlasmonPole { p: f64, denominator: f64 },

    #[error("lattice sum not converged: outermost shell contributes {residual:e} of the total (|G| <= {g_max})")]
    ShellConvergence { residual: f64, g_max: f64 },

    #[error("cutoff extrapolation did not plateau: spread {spread:e} exceeds {tolerance:e}")]
    Plateau {
        spread: f64,
        tolerance: f64,
        values: Vec<[[Complex64; 3]; 3]>,
    },

    #[error("quadrature did not converge: estimate {estimate}, error estimate {error:e} after {evaluations} evaluations")]
    Integration {
        estimate: Complex64,
        error: f64,
        evaluations: usize,
    },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("bands {lower} and {upper} are degenerate on plaquette ({i}, {j}): gap {gap:e}")]
    DegenerateBands {
        lower: usize,
        upper: usize,
        i: usize,
        j: usize,
        gap: f64,
    },

    #[error("Chern number of band {band} not resolved (residual {residual:.3e}); increase the grid size beyond {n}")]
    Resolution { band: usize, residual: f64, n: usize },

    #[error("frequency {omega:e} rad/s outside the permittivity table [{min:e}, {max:e}] and no Drude fallback")]
    PermittivityRange { omega: f64, min: f64, max: f64 },

    #[error("permittivity table: {0}")]
    PermittivityTable(String),

    #[error("model too large: dimension {dim} exceeds the configured cap {cap}")]
    MemoryGuard { dim: usize, cap: usize },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    #[error("site {site} appears in partitions `{first}` and `{second}`")]
    OverlappingPartitions {
        site: usize,
        first: String,
        second: String,
    },

    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures caused by the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::LightCircle { .. }
                | Error::PlasmonPole { .. }
                | Error::ShellConvergence { .. }
                | Error::Plateau { .. }
                | Error::Integration { .. }
                | Error::Eigensolver(_)
                | Error::DegenerateBands { .. }
                | Error::Resolution { .. }
                | Error::StepUnderflow { .. }
                | Error::NonFinite { .. }
        )
    }
}

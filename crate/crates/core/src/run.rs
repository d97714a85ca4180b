//! Run orchestration: one function per mode, each producing plain-text tables
//! with a commented header. Numbers are formatted with fixed precision so that
//! identical inputs give identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::bloch::{band_gap, band_sweep, widest_gap};
use crate::config::{Mode, RunConfig};
use crate::dynamics::{evolve, perimeter_partitions, rectangle, routing_metrics, EvolutionConfig};
use crate::error::{Error, Result};
use crate::interaction::{Environment, InteractionModel};
use crate::lattice::{bz_path_total, Vec2, Waypoint, K0};
use crate::layered::{scattered_source, weyl_scattered};
use crate::quadrature::QuadOptions;
use crate::strip::{build_strip, classify_and_fourier, edge_crossings, EdgeLabel};
use crate::topology::{chern_numbers, ChernOptions};

/// Named text artifacts of one run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutput {
    pub files: BTreeMap<String, String>,
}

impl RunOutput {
    fn add(&mut self, name: &str, text: String) {
        self.files.insert(name.to_string(), text);
    }

    /// Write every artifact into `dir`, in name order.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.display().to_string(),
            source,
        })?;
        let mut written = Vec::new();
        for (name, text) in &self.files {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(|source| Error::Io {
                path: p.display().to_string(),
                source,
            })?;
            written.push(p);
        }
        Ok(written)
    }
}

fn header(cfg: &RunConfig, title: &str, columns: &str) -> String {
    format!(
        "# atomic-bands {} {} {title}\n# energies in Γ0 relative to ω_A, lengths in λ, momenta in 1/λ\n# columns: {columns}\n",
        env!("CARGO_PKG_VERSION"),
        mode_name(cfg.mode)
    )
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Bands => "bands",
        Mode::Chern => "chern",
        Mode::Strip => "strip",
        Mode::Evolve => "evolve",
        Mode::GreensProbe => "greens-probe",
    }
}

pub fn build_model(cfg: &RunConfig) -> Result<InteractionModel> {
    InteractionModel::new(
        &cfg.lattice_spec()?,
        cfg.environment_model()?,
        cfg.atom_model(),
        cfg.sum_options(),
    )
}

/// Execute the configured mode. The effective config is always echoed as
/// `config.toml`.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    let mut out = match cfg.mode {
        Mode::Bands => run_bands(cfg)?,
        Mode::Chern => run_chern(cfg)?,
        Mode::Strip => run_strip(cfg)?,
        Mode::Evolve => run_evolve(cfg)?,
        Mode::GreensProbe => run_probe(cfg)?,
    };
    out.add("config.toml", cfg.echo());
    Ok(out)
}

pub fn run_bands(cfg: &RunConfig) -> Result<RunOutput> {
    let model = build_model(cfg)?;
    let lattice = model.lattice().clone();
    let waypoints: Vec<Waypoint> = cfg.path().iter().map(|s| Waypoint::named(s)).collect();
    let path = bz_path_total(&lattice, &waypoints, cfg.numerics.path_points)?;
    let ks: Vec<Vec2> = path.iter().map(|p| p.k).collect();
    let sweep = band_sweep(&model, &cfg.level_scheme(), &ks, false)?;
    let mut t = header(cfg, "band structure", "index arc kx ky band omega gamma inside_light_cone");
    for (i, (pp, bands)) in path.iter().zip(&sweep.points).enumerate() {
        if let Some(bands) = bands {
            for b in bands {
                writeln!(
                    t,
                    "{i} {:.8} {:.8} {:.8} {} {:.10e} {:.10e} {}",
                    pp.arc,
                    pp.k.x,
                    pp.k.y,
                    b.band,
                    b.omega(),
                    b.gamma(),
                    u8::from(b.inside_light_cone)
                )
                .unwrap();
            }
        }
    }
    for s in &sweep.skipped {
        writeln!(t, "# skipped {} ({:.8}, {:.8}): {}", s.index, s.k.x, s.k.y, s.reason).unwrap();
    }
    let mut g = header(cfg, "band gaps", "lower indirect direct top_of_lower bottom_of_upper");
    let outside = cfg.numerics.gap_outside_light_cone;
    writeln!(g, "# outside_light_cone_only = {outside}").unwrap();
    for lower in 0..sweep.num_bands().saturating_sub(1) {
        if let Some(r) = band_gap(&sweep, lower, outside) {
            writeln!(
                g,
                "{} {:.8e} {:.8e} {:.8e} {:.8e}",
                r.lower, r.indirect, r.direct, r.top_of_lower, r.bottom_of_upper
            )
            .unwrap();
        }
    }
    if let Some(w) = widest_gap(&sweep, outside) {
        writeln!(g, "# widest gap above band {}: {:.6}", w.lower, w.indirect).unwrap();
    }
    let mut out = RunOutput::default();
    out.add("bands.tsv", t);
    out.add("gaps.tsv", g);
    Ok(out)
}

pub fn run_chern(cfg: &RunConfig) -> Result<RunOutput> {
    let model = build_model(cfg)?;
    let opts = ChernOptions {
        n: cfg.numerics.grid,
        ..Default::default()
    };
    let r = chern_numbers(&model, &cfg.level_scheme(), &opts)?;
    let mut t = header(cfg, "Chern numbers", "band chern residual max_flux min_gap");
    writeln!(t, "# grid {} x {}", r.n, r.n).unwrap();
    for g in &r.groups {
        writeln!(
            t,
            "{} {} {:.3e} {:.6} {:.6e}",
            g.bands.start, g.chern, g.residual, g.max_flux, g.min_gap
        )
        .unwrap();
    }
    writeln!(t, "# total {}", r.total()).unwrap();
    let mut out = RunOutput::default();
    out.add("chern.tsv", t);
    Ok(out)
}

pub fn run_strip(cfg: &RunConfig) -> Result<RunOutput> {
    let lattice = cfg.lattice_spec()?;
    let s = &cfg.strip;
    let model = build_strip(&lattice, &cfg.level_scheme(), s.m, s.n, cfg.numerics.memory_cap)?;
    let spec = classify_and_fourier(&model)?;
    let mut t = header(cfg, "ribbon spectrum", "kx omega gamma label upper_weight lower_weight");
    for m in &spec.modes {
        writeln!(
            t,
            "{:.8} {:.10e} {:.10e} {} {:.6} {:.6}",
            m.kx,
            m.energy.re,
            m.gamma(),
            m.label,
            m.upper_weight,
            m.lower_weight
        )
        .unwrap();
    }
    for &level in &s.levels {
        for edge in [EdgeLabel::Upper, EdgeLabel::Lower] {
            let c = edge_crossings(&spec, edge, level, s.max_jump);
            writeln!(
                t,
                "# crossings level {level} {edge}: rising {} falling {}",
                c.rising, c.falling
            )
            .unwrap();
        }
    }
    let mut out = RunOutput::default();
    out.add("strip.tsv", t);
    Ok(out)
}

pub fn run_evolve(cfg: &RunConfig) -> Result<RunOutput> {
    let lattice = cfg.lattice_spec()?;
    let d = &cfg.drive;
    let a = cfg.lattice.a;
    let full = rectangle(&lattice, Vec2::new(a, 0.0), Vec2::new(0.0, a), d.nx, d.ny)?;
    let [si, sj] = d.site.unwrap_or([d.nx / 2, 0]);
    let removed: Vec<usize> = d.removed.iter().map(|[i, j]| j * d.nx + i).collect();
    let driven_full = sj * d.nx + si;
    if removed.contains(&driven_full) {
        return Err(Error::InvalidArgument("the driven site is removed".into()));
    }
    let cluster = full.without(&removed);
    // Indices in the reduced cluster.
    let keep: Vec<usize> = (0..full.len()).filter(|i| !removed.contains(i)).collect();
    let driven = keep.iter().position(|&i| i == driven_full).expect("driven site kept");
    let mut ec = EvolutionConfig::new(cluster.clone(), cfg.level_scheme(), driven);
    ec.rabi = d.rabi;
    ec.drive_detuning = d.detuning;
    ec.ramp = d.ramp;
    ec.frame = d.frame;
    ec.snapshots = d.snapshots.clone();
    ec.tolerance = d.tolerance;
    ec.cap = cfg.numerics.memory_cap;
    let trace = evolve(&ec)?;
    let parts = perimeter_partitions(d.nx, d.ny, driven_full, d.edge_width, d.source_radius, d.forward_ccw, &removed)?;
    // Partitions are in patch indices; map snapshots back onto the patch.
    let mut t = header(cfg, "driven evolution", "t site x y population");
    let mut m = header(cfg, "routing metrics", "t excited norm forward_fraction backward_fraction");
    writeln!(t, "# steps {} rejected {}", trace.steps, trace.rejected).unwrap();
    for s in &trace.snapshots {
        for (ci, p) in s.populations.iter().enumerate() {
            let r = cluster.positions[ci];
            writeln!(t, "{:.6} {} {:.8} {:.8} {:.10e}", s.t, keep[ci], r.x, r.y, p).unwrap();
        }
        let mut full_pop = vec![0.0; full.len()];
        for (ci, &fi) in keep.iter().enumerate() {
            full_pop[fi] = s.populations[ci];
        }
        let snap = crate::dynamics::Snapshot {
            t: s.t,
            populations: full_pop,
            ground: s.ground,
        };
        let r = routing_metrics(&snap, &parts);
        writeln!(
            m,
            "{:.6} {:.10e} {:.12} {:.6} {:.6}",
            s.t,
            r.excited,
            s.norm(),
            r.forward_fraction,
            r.backward_fraction
        )
        .unwrap();
        for (name, v) in &r.populations {
            writeln!(m, "#   {name} {v:.10e}").unwrap();
        }
    }
    let mut out = RunOutput::default();
    out.add("trace.tsv", t);
    out.add("metrics.tsv", m);
    Ok(out)
}

pub fn run_probe(cfg: &RunConfig) -> Result<RunOutput> {
    let Environment::Surface(env) = cfg.environment_model()? else {
        return Err(Error::InvalidArgument("greens-probe needs a surface".into()));
    };
    let mut t = header(
        cfg,
        "reflected Weyl tensor at z = 0",
        "px/k py/k re_xx im_xx re_yy im_yy re_zz im_zz re_xz im_xz",
    );
    writeln!(t, "# eps_d {} eps_m {} h {}", env.eps_d, env.eps_m, env.h).unwrap();
    for &[px, py] in &cfg.probe.momenta {
        let p = Vec2::new(px * K0, py * K0);
        match weyl_scattered(p, 0.0, K0, &env, cfg.numerics.light_guard) {
            Ok(g) => {
                writeln!(
                    t,
                    "{px:.6} {py:.6} {:.10e} {:.10e} {:.10e} {:.10e} {:.10e} {:.10e} {:.10e} {:.10e}",
                    g[0][0].re, g[0][0].im, g[1][1].re, g[1][1].im, g[2][2].re, g[2][2].im, g[0][2].re, g[0][2].im
                )
                .unwrap();
            }
            Err(e) if e.is_numerical() => writeln!(t, "# {px:.6} {py:.6} skipped: {e}").unwrap(),
            Err(e) => return Err(e),
        }
    }
    let src = scattered_source(K0, &env, QuadOptions::default(), 1e-3)?;
    writeln!(
        t,
        "# source xx {:.10e} {:.10e} zz {:.10e} {:.10e}",
        src.xx.re, src.xx.im, src.zz.re, src.zz.im
    )
    .unwrap();
    let mut out = RunOutput::default();
    out.add("probe.tsv", t);
    Ok(out)
}

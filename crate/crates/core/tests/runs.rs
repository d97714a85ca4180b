use atomic_bands::config::{parse_config, parse_with_overrides, ConfigError};
use atomic_bands::run::run;
use atomic_bands::Error;

const BANDS: &str = r#"
mode = "bands"

[lattice]
family = "square"
a = 0.3

[scheme]
transitions = "sigma"
zeeman = 0.5

[numerics]
path_points = 24
"#;

#[test]
fn identical_configs_give_identical_bytes() {
    let cfg = parse_config(BANDS).unwrap();
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    assert_eq!(a, b);
    assert!(a.files.contains_key("bands.tsv"));
    assert!(a.files.contains_key("gaps.tsv"));
    assert!(a.files["bands.tsv"].starts_with("# atomic-bands "));
}

#[test]
fn echoed_config_reproduces_the_run() {
    let cfg = parse_config(BANDS).unwrap();
    let out = run(&cfg).unwrap();
    let again = parse_config(&out.files["config.toml"]).unwrap();
    assert_eq!(again, cfg);
    assert_eq!(run(&again).unwrap().files["bands.tsv"], out.files["bands.tsv"]);
}

#[test]
fn band_table_has_one_row_per_band_and_point() {
    let cfg = parse_config(BANDS).unwrap();
    let out = run(&cfg).unwrap();
    let rows: Vec<&str> = out.files["bands.tsv"].lines().filter(|l| !l.starts_with('#')).collect();
    let skipped = out.files["bands.tsv"].lines().filter(|l| l.starts_with("# skipped")).count();
    let points: std::collections::BTreeSet<&str> = rows.iter().map(|r| r.split_whitespace().next().unwrap()).collect();
    assert!(points.len() + skipped >= 24);
    assert_eq!(rows.len(), 2 * points.len());
    for r in rows {
        let cols: Vec<&str> = r.split_whitespace().collect();
        assert_eq!(cols.len(), 8);
        let gamma: f64 = cols[6].parse().unwrap();
        assert!(gamma > -1e-8);
    }
}

#[test]
fn overrides_change_only_their_key() {
    let base = parse_config(BANDS).unwrap();
    let cfg = parse_with_overrides(BANDS, &["scheme.zeeman=-0.5".to_string()]).unwrap();
    assert_eq!(cfg.scheme.zeeman, -0.5);
    assert_eq!(cfg.lattice, base.lattice);
    assert_eq!(cfg.numerics, base.numerics);
}

#[test]
fn bad_values_name_their_key() {
    let err = parse_with_overrides(BANDS, &["numerics.path_points=1".to_string()]).unwrap_err();
    match err {
        ConfigError::Invalid { key, .. } => assert_eq!(key, "numerics.path_points"),
        other => panic!("{other}"),
    }
    assert!(matches!(parse_config("mode = \"bands\"\n[lattice]\nspacing = 1.0\n"), Err(ConfigError::Parse(_))));
}

#[test]
fn zero_field_chern_reports_degenerate_bands() {
    let cfg = parse_config(
        r#"
mode = "chern"
[lattice]
family = "triangular"
a = 0.4
[scheme]
zeeman = 0.0
[numerics]
grid = 12
"#,
    )
    .unwrap();
    let err = run(&cfg).unwrap_err();
    assert!(matches!(err, Error::DegenerateBands { .. }), "{err}");
    assert!(err.is_numerical());
}

#[test]
fn probe_of_matched_media_is_zero() {
    let cfg = parse_config(
        r#"
mode = "greens-probe"
[environment]
kind = "surface"
eps_d = 1.0
eps_m = 1.0
height = 0.1
"#,
    )
    .unwrap();
    let out = run(&cfg).unwrap();
    let t = &out.files["probe.tsv"];
    let rows: Vec<&str> = t.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 4);
    for r in rows {
        for v in r.split_whitespace().skip(2) {
            assert_eq!(v.parse::<f64>().unwrap(), 0.0);
        }
    }
}

#[test]
fn small_evolution_reports_routing_metrics() {
    let cfg = parse_config(
        r#"
mode = "evolve"
[lattice]
family = "nb-square"
a = 0.054
detuning = 30.0
[scheme]
zeeman = 20.0
[drive]
nx = 6
ny = 6
snapshots = [2.0, 4.0]
edge_width = 1
source_radius = 1.0
"#,
    )
    .unwrap();
    let out = run(&cfg).unwrap();
    let m = &out.files["metrics.tsv"];
    let rows: Vec<Vec<f64>> = m
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        // The norm of the no-jump state never grows.
        assert!(r[2] <= 1.0 + 1e-9);
        assert!(r[3] >= 0.0 && r[3] <= 1.0 && r[4] >= 0.0 && r[4] <= 1.0);
    }
    // The ramp is still switching on, so the excitation grows.
    assert!(rows[1][1] > rows[0][1]);
}

#[test]
fn oversized_ribbon_is_refused() {
    let cfg = parse_with_overrides(
        "mode = \"strip\"\n[lattice]\nfamily = \"nb-square\"\na = 0.054\ndetuning = 30.0\n",
        &["numerics.memory_cap=100".to_string()],
    )
    .unwrap();
    assert!(matches!(run(&cfg), Err(Error::MemoryGuard { .. })));
}

#[test]
fn shipped_configs_are_valid() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            let cfg = atomic_bands::config::load_config(&p, &[]).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            cfg.environment_model().unwrap();
            n += 1;
        }
    }
    assert!(n >= 5);
}

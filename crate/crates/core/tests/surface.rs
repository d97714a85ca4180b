use atomic_bands::interaction::{AtomModel, Environment, InteractionModel, SumOptions};
use atomic_bands::lattice::{LatticeSpec, Vec2, K0};
use atomic_bands::layered::{spp_momentum, weyl_scattered, SurfaceEnvironment};

fn model(eps_m: f64, h: f64) -> InteractionModel {
    let env = Environment::Surface(SurfaceEnvironment::new(1.0, eps_m, h).unwrap());
    InteractionModel::new(&LatticeSpec::square(0.3).unwrap(), env, AtomModel::point(), SumOptions::default()).unwrap()
}

/// Decay rates (Γ/Γ0) of a dipole parallel and perpendicular to a perfect mirror
/// at height h, from the image-dipole field.
fn mirror_rates(h: f64) -> (f64, f64) {
    let x = 2.0 * K0 * h;
    let (s, c) = x.sin_cos();
    let par = 1.0 - 1.5 * (s / x + c / (x * x) - s / (x * x * x));
    let perp = 1.0 + 3.0 * (s / (x * x * x) - c / (x * x));
    (par, perp)
}

#[test]
fn image_rates_match_perfect_mirror() {
    for h in [0.02, 0.1, 0.25, 0.5, 0.8] {
        let m = model(-1e6, h);
        let g = m.self_scattered();
        let s = m.coupling_scale();
        let par = 1.0 - 2.0 * (g[0][0] * s).im;
        let perp = 1.0 - 2.0 * (g[2][2] * s).im;
        let (want_par, want_perp) = mirror_rates(h);
        assert!((par - want_par).abs() < 5e-3, "h = {h}: Γ_par {par} vs {want_par}");
        assert!((perp - want_perp).abs() < 5e-3, "h = {h}: Γ_perp {perp} vs {want_perp}");
    }
}

#[test]
fn far_from_the_surface_the_image_vanishes() {
    let m = model(-25.0, 6.0);
    let (g, s) = (m.self_scattered(), m.coupling_scale());
    for row in &g {
        for v in row {
            assert!((v * s).norm() < 0.05, "{v}");
        }
    }
}

#[test]
fn matched_media_have_no_image() {
    let m = model(1.0, 0.1);
    assert!(m.self_scattered().iter().flatten().all(|v| v.norm() == 0.0));
}

#[test]
fn lossless_surfaces_never_add_gain() {
    // Purcell factors of a passive mirror are positive for any height.
    for eps_m in [-3.0, -5.5, -25.0, 2.25] {
        for h in [0.03, 0.1, 0.3] {
            let m = model(eps_m, h);
            let g = m.self_scattered();
            let s = m.coupling_scale();
            assert!(1.0 - 2.0 * (g[0][0] * s).im > 0.0);
            assert!(1.0 - 2.0 * (g[2][2] * s).im > 0.0);
        }
    }
}

#[test]
fn scattered_tensor_is_reciprocal() {
    let env = SurfaceEnvironment::new(1.0, -12.0, 0.1).unwrap();
    for (px, py) in [(0.3, 0.4), (1.7, -0.2), (3.0, 2.5)] {
        let p = Vec2::new(px * K0, py * K0);
        let g = weyl_scattered(p, 0.0, K0, &env, 1e-6).unwrap();
        let gm = weyl_scattered(Vec2::new(-p.x, -p.y), 0.0, K0, &env, 1e-6).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                assert!((g[a][b] - gm[b][a]).norm() <= 1e-12 * (1.0 + g[a][b].norm()), "{a}{b}");
            }
        }
    }
}

#[test]
fn plasmon_sits_outside_the_light_cone() {
    for eps_m in [-2.0, -5.5, -25.0, -100.0] {
        let p = spp_momentum(K0, 1.0, eps_m).unwrap();
        let want = K0 * (eps_m / (eps_m + 1.0)).sqrt();
        assert!((p - want).abs() < 1e-12 * want);
        assert!(p > K0);
    }
    // Above the surface plasma frequency there is no bound plasmon.
    assert!(spp_momentum(K0, 1.0, -0.5).is_none());
}

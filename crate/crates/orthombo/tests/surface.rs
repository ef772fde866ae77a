use std::collections::HashMap;

use orthombo::cpm_surface::{band_width, build_band, BandSpec, Surface, SurfaceDiffuser};

fn key(p: &[f64; 3]) -> [u64; 3] {
    p.map(f64::to_bits)
}

#[test]
fn sphere_band_size_matches_reference_count() {
    let spec = BandSpec { dx: 0.05, w_b: 0.5532, p: 3, eps: 1e-6 };
    let band = build_band(&Surface::sphere(1.0).unwrap(), spec).unwrap();
    let rel = band.cell_count() as f64 / 136_114.0 - 1.0;
    assert!(rel.abs() <= 0.25, "{} cells", band.cell_count());
    assert_eq!(band.n_q(), 27 * band.cell_count());
    assert!((band.area() / (4.0 * std::f64::consts::PI) - 1.0).abs() < 0.02);
}

#[test]
fn wider_band_changes_little() {
    let (tau, eps, dx) = (0.01, 1e-3, 0.1);
    let sphere = Surface::sphere(1.0).unwrap();
    let w = band_width(tau, eps).unwrap();
    let narrow = build_band(&sphere, BandSpec { dx, w_b: w, p: 2, eps }).unwrap();
    let wide = build_band(&sphere, BandSpec { dx, w_b: 1.5 * w, p: 2, eps }).unwrap();
    assert!(wide.n_q() > narrow.n_q());

    let f = |b: &orthombo::cpm_surface::BandSet| {
        let z: Vec<f64> = b.closest.iter().map(|q| q[2] + q[0] * q[1]).collect();
        let d = SurfaceDiffuser::new(b, tau, eps).unwrap();
        d.diffuse_scalars(&[&z]).unwrap().remove(0)
    };
    let (a, b) = (f(&narrow), f(&wide));
    let index: HashMap<[u64; 3], usize> = wide.quad_points.iter().enumerate().map(|(i, p)| (key(p), i)).collect();
    let mut common = 0;
    let mut worst = 0.0f64;
    for (i, p) in narrow.quad_points.iter().enumerate() {
        if let Some(&j) = index.get(&key(p)) {
            common += 1;
            worst = worst.max((a[i] - b[j]).abs());
        }
    }
    assert_eq!(common, narrow.n_q());
    assert!(worst <= 10.0 * eps, "max difference {worst:e}");
}

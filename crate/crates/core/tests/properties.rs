use std::sync::Arc;

use proptest::prelude::*;

use cgo_core::almost_holo::{extension_coeffs, PhaseExtension};
use cgo_core::contour::{build_contour, ContourConfig};
use cgo_core::geometry::{make_circle, make_ellipse, DEFAULT_REPARAM_TOL};
use cgo_core::oracle::f_boundary;
use cgo_core::phase::{find_poles, SpectralParam};
use cgo_core::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn disk_rotation_equivariance(theta in 0.0..std::f64::consts::TAU, arg in 0.0..std::f64::consts::TAU,
                                  modulus in 1.0..60.0f64, r in 1.3..4.0f64, phi in 0.0..std::f64::consts::TAU) {
        let disk = make_circle(c(0.0, 0.0), 1.0).unwrap();
        let z = Complex64::from_polar(r, phi);
        let k = Complex64::from_polar(modulus, arg);
        let rot = Complex64::from_polar(1.0, theta);
        let base = f_boundary(&disk, z, k, 1e-13).unwrap().value;
        let turned = f_boundary(&disk, rot * z, k / rot, 1e-13).unwrap().value;
        prop_assert!((turned - base / rot).norm() <= 1e-8 * base.norm());
    }

    #[test]
    fn poles_follow_a_simultaneous_rotation(theta in 0.0..std::f64::consts::TAU, arg in 0.0..std::f64::consts::TAU) {
        let ell = make_ellipse(1.5, 1.0, DEFAULT_REPARAM_TOL).unwrap();
        let k = Complex64::from_polar(5.0, arg);
        let rot = Complex64::from_polar(1.0, theta);
        let poles = find_poles(ell.boundary(), &SpectralParam::new(k).unwrap()).unwrap();
        let turned = ell.rotated(theta).unwrap();
        let moved = find_poles(turned.boundary(), &SpectralParam::new(k / rot).unwrap()).unwrap();
        prop_assert!((moved.w_plus - rot * poles.w_plus).norm() < 1e-9);
        prop_assert!((moved.w_minus - rot * poles.w_minus).norm() < 1e-9);
        prop_assert!((moved.u0_plus - poles.u0_plus).abs() < 1e-9);
    }

    #[test]
    fn contour_nodes_descend_away_from_the_poles(arg in 0.0..std::f64::consts::TAU, modulus in 10.0..300.0f64) {
        let ell = make_ellipse(1.5, 1.0, DEFAULT_REPARAM_TOL).unwrap();
        let sp = SpectralParam::new(Complex64::from_polar(modulus, arg)).unwrap();
        let ext: Arc<dyn PhaseExtension> = Arc::new(extension_coeffs(&ell, &sp, 4).unwrap());
        let contour = build_contour(&ell, &sp, ext, &ContourConfig::default()).unwrap();
        for node in contour.nodes() {
            prop_assert!(node.u.im <= 1e-9 * modulus);
        }
    }
}

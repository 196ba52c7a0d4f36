use proptest::prelude::*;

use nhom::harness::{fit_loglog, fmt_f64};
use nhom::mesh::{OfflineMesh, Rect};
use nhom::reconstruct::{minimum_samples, unisolvent_patch, Basis, LeastSquares};
use nhom::Point;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn least_squares_reproduces_polynomials(
        q in 4usize..20,
        col in 0usize..20,
        row in 0usize..20,
        m in 1usize..=3,
        coeffs in prop::collection::vec(-1.0f64..1.0, 10),
        x0 in -2.0f64..2.0,
        y0 in -2.0f64..2.0,
        scale in 0.1f64..5.0,
    ) {
        let domain = Rect::new(x0, y0, x0 + scale, y0 + scale).unwrap();
        let mesh = OfflineMesh::new(domain, q).unwrap();
        let k = mesh.element_id(col % q, row % q);
        let patch = unisolvent_patch(&mesh, k, m, minimum_samples(m)).unwrap();
        let basis = Basis::new(m, patch.center(), patch.geometry.outer_radius);
        let c = &coeffs[..basis.dim()];
        let pts = patch.sample_points();
        let values: Vec<f64> = pts.iter().map(|&p| basis.combine(c, p)).collect();
        let fit = LeastSquares::new(&pts, basis, k).unwrap().fit(&values);
        let b = mesh.elements[k].bounds;
        for z in [b.center(), Point::new(b.x0, b.y0), Point::new(b.x1, b.y1)] {
            prop_assert!((basis.combine(&fit, z) - basis.combine(c, z)).abs() < 1e-9);
        }
    }

    #[test]
    fn loglog_fit_recovers_exponent(
        a in -5.0f64..5.0,
        c in 0.01f64..100.0,
        x0 in 1.0f64..10.0,
        ratio in 1.5f64..4.0,
    ) {
        let x: Vec<f64> = (0..4).map(|i| x0 * ratio.powi(i)).collect();
        let y: Vec<f64> = x.iter().map(|v| c * v.powf(a)).collect();
        let s = fit_loglog(&x, &y).unwrap();
        prop_assert!((s.slope - a).abs() < 1e-9);
    }

    #[test]
    fn csv_floats_roundtrip(v in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        prop_assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
    }
}

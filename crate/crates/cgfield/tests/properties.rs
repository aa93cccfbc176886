//! Property tests: exact basis expansion over random Gaussian-rational
//! matrices, the determinant law of the interacting metric, and sampled
//! field round-trips.

use cgfield::field_metrics::{self, PotentialSample, RegionLabel};
use cgfield::gamma::{self, CliffordElement, GaussianRational, Rational};
use cgfield::spacetime::{self, CatalogPotential, Grid4, VecPotential};
use num_complex::Complex64;
use proptest::prelude::*;

fn gaussian_rational() -> impl Strategy<Value = GaussianRational> {
    (
        -9i64..=9,
        1i64..=4,
        -9i64..=9,
        1i64..=4,
    )
        .prop_map(|(rn, rd, in_, id)| {
            GaussianRational::new(Rational::new(rn, rd), Rational::new(in_, id))
        })
}

fn clifford_matrix() -> impl Strategy<Value = CliffordElement> {
    proptest::collection::vec(gaussian_rational(), 16).prop_map(|v| {
        let mut m = CliffordElement::zero();
        for r in 0..4 {
            for c in 0..4 {
                m.set_entry(r, c, v[r * 4 + c]);
            }
        }
        m
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// Every 4x4 Gaussian-rational matrix is reproduced exactly by its
    /// sixteen-coefficient basis expansion.
    #[test]
    fn basis_expansion_roundtrips_exactly(m in clifford_matrix()) {
        let coeffs = gamma::basis_expand(&m);
        prop_assert_eq!(gamma::basis_reconstruct(&coeffs), m);
    }

    /// The brute-force determinant of the interacting metric equals
    /// (1 - A0^2 + A.A)^2, and classification respects the boundary
    /// precedence bound > free > interior/singular.
    #[test]
    fn u1_determinant_and_classification(
        a0 in -2.0f64..2.0,
        ax in -2.0f64..2.0,
        ay in -2.0f64..2.0,
        az in -2.0f64..2.0,
    ) {
        let s = PotentialSample::u1(a0, [ax, ay, az]);
        let (d, raw) = field_metrics::metric_determinant(&s);
        let rel = (raw - Complex64::new(d * d, 0.0)).norm() / (d * d).max(1.0);
        prop_assert!(rel <= 1e-12, "relative deviation {}", rel);

        let tol = 1e-6;
        let v = field_metrics::classify_region(&s, tol).unwrap();
        let expected = if d.abs() <= tol {
            RegionLabel::BoundBoundary
        } else if (d - 1.0).abs() <= tol {
            RegionLabel::FreeBoundary
        } else if d > 0.0 && d < 1.0 {
            RegionLabel::Interior
        } else {
            RegionLabel::Singular
        };
        prop_assert_eq!(v.label, expected);
        prop_assert_eq!(v.d_value, d);
    }

    /// Writing a sampled potential and reloading it reproduces the values
    /// exactly (shortest-roundtrip text formatting).
    #[test]
    fn cgf1_roundtrip_exact(seed in 0u64..1000) {
        let grid = Grid4::new([3, 3, 3, 3], [0.1; 4], [-0.1; 4]);
        let amp = 0.1 + (seed as f64) * 1e-3;
        let a = VecPotential::from_catalog(
            &CatalogPotential::PlaneWave { amp, k: 1.7 },
            grid,
        );
        let dir = std::env::temp_dir().join(format!("cgfield_prop_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("w{seed}.cgf"));
        spacetime::write_vec_potential(&a, &path).unwrap();
        let b = spacetime::load_vec_potential(&path).unwrap();
        std::fs::remove_file(&path).ok();
        for t in 0..3 {
            for x in 0..3 {
                for y in 0..3 {
                    for z in 0..3 {
                        prop_assert_eq!(a.value([t, x, y, z]), b.value([t, x, y, z]));
                    }
                }
            }
        }
    }
}

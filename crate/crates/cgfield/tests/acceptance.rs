//! Acceptance suite: one test per shipped verification criterion, each
//! printing its measured value (visible with `--nocapture`). Every
//! tolerance is pinned here, in code.

use cgfield::appendix::{self, Quadrature, SmoothSpinorField as _};
use cgfield::config::{Command, RunConfig};
use cgfield::field_metrics::{self, ColourMode, PotentialSample};
use cgfield::gamma::{self, MinkowskiIndex};
use cgfield::manifold::{self, ComplexPoint, DerivativeStencil, MetricField, StencilOrder};
use cgfield::spacetime::{self, CatalogPotential, Grid4, GridRegion, VecPotential};
use cgfield::suites;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

const SEED: u64 = 42;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn stencil() -> DerivativeStencil {
    DerivativeStencil::new(1e-3, StencilOrder::Two)
}

/// 1. All 10 anticommutator pairs and all 64 triple decompositions hold in
/// exact arithmetic, in under a second.
#[test]
fn criterion_01_gamma_identities_exact() {
    let t0 = Instant::now();
    let mi = |k: usize| MinkowskiIndex::new(k).unwrap();
    let mut pairs = 0;
    for mu in 0..4 {
        for nu in mu..4 {
            let ac = gamma::anticommutator(&gamma::gamma(mi(mu)), &gamma::gamma(mi(nu)));
            let expect = gamma::CliffordElement::identity().scale(num_complex::Complex::new(
                gamma::minkowski_metric(mi(mu), mi(nu)) * num_rational::Ratio::from_integer(2),
                num_rational::Ratio::from_integer(0),
            ));
            assert!(ac.sub(&expect).is_zero(), "pair ({mu},{nu}) not exact");
            pairs += 1;
        }
    }
    assert_eq!(pairs, 10);
    let mut triples = 0;
    for s in 0..4 {
        for r in 0..4 {
            for l in 0..4 {
                let direct = gamma::gamma(mi(s))
                    .mul(&gamma::gamma(mi(r)))
                    .mul(&gamma::gamma(mi(l)));
                assert_eq!(
                    direct,
                    gamma::triple_decompose(mi(s), mi(r), mi(l)),
                    "triple ({s},{r},{l}) not exact"
                );
                triples += 1;
            }
        }
    }
    assert_eq!(triples, 64);
    let dt = t0.elapsed();
    assert!(dt.as_secs_f64() < 1.0, "runtime {dt:?} exceeds 1 s");
    println!("criterion 1: PASS - 10 pairs + 64 triples exact in {dt:?}");
}

/// 2. Constant metrics at n = 1, 2, 4 give vanishing connection, curvature
/// and Ricci (<= 1e-12), in under a second.
#[test]
fn criterion_02_flatness() {
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    for n in [1usize, 2, 4] {
        let mut m = DMatrix::identity(n, n);
        if n > 1 {
            m[(0, n - 1)] = c(0.3, 0.1);
            m[(n - 1, 0)] = c(0.3, -0.1);
        }
        let metric = MetricField::constant(m, true);
        let p = ComplexPoint::new(vec![c(0.2, -0.4); n]);
        let conn = manifold::connection_from_metric(&metric, &p, &stencil()).unwrap();
        let curv = manifold::curvature_components(&metric, &p, &stencil()).unwrap();
        let ricci = manifold::ricci_logdet(&metric, &p, &stencil()).unwrap();
        worst = worst
            .max(conn.max_abs())
            .max(curv.max_abs())
            .max(ricci.iter().map(|x| x.norm()).fold(0.0, f64::max));
    }
    assert!(worst <= 1e-12, "flatness residual {worst}");
    let dt = t0.elapsed();
    assert!(dt.as_secs_f64() < 1.0, "runtime {dt:?} exceeds 1 s");
    println!("criterion 2: PASS - flatness residual {worst:.2e} in {dt:?}");
}

/// 3. Ricci route equivalence <= 1e-6 on 20 seeded random Hermitian
/// polynomial metrics (n = 2, h = 1e-3), and the exponential Kaehler
/// exemplar gives R = 1 +- 1e-6; under 10 s.
#[test]
fn criterion_03_ricci_route_equivalence() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let probe = ComplexPoint::new(vec![c(0.1, -0.2), c(0.25, 0.15)]);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let metric = MetricField::random_hermitian_poly(2, 0.2, &mut rng);
        let r1 = manifold::ricci_logdet(&metric, &probe, &stencil()).unwrap();
        let r2 = manifold::ricci_via_connection(&metric, &probe, &stencil()).unwrap();
        worst = worst.max((&r1 - &r2).iter().map(|x| x.norm()).fold(0.0, f64::max));
    }
    assert!(worst <= 1e-6, "route deviation {worst}");

    let metric = MetricField::exp_kahler();
    let p = ComplexPoint::new(vec![c(0.3, 0.5)]);
    let r = manifold::ricci_logdet(&metric, &p, &stencil()).unwrap()[(0, 0)];
    let dev = (r - c(1.0, 0.0)).norm();
    assert!(dev <= 1e-6, "exemplar Ricci deviation {dev}");
    let dt = t0.elapsed();
    assert!(dt.as_secs_f64() < 10.0, "runtime {dt:?} exceeds 10 s");
    println!(
        "criterion 3: PASS - route deviation {worst:.2e}, exemplar deviation {dev:.2e} in {dt:?}"
    );
}

/// 4. Ricci antisymmetry |R_{jbar k} + R_{k jbar}| <= 1e-5 across the two
/// Ricci forms on the same metric set.
#[test]
fn criterion_04_ricci_antisymmetry() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let probe = ComplexPoint::new(vec![c(0.1, -0.2), c(0.25, 0.15)]);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let metric = MetricField::random_hermitian_poly(2, 0.2, &mut rng);
        let r1 = manifold::ricci_logdet(&metric, &probe, &stencil()).unwrap();
        let r2 = manifold::ricci_second_form(&metric, &probe, &stencil()).unwrap();
        for j in 0..2 {
            for k in 0..2 {
                worst = worst.max((r1[(j, k)] + r2[(k, j)]).norm());
            }
        }
    }
    assert!(worst <= 1e-5, "antisymmetry residual {worst}");
    println!("criterion 4: PASS - antisymmetry residual {worst:.2e}");
}

/// 5. Brute-force determinant of the interacting metric equals
/// (1 - A0^2 + A^2)^2 to 1e-12 on 1000 seeded samples, in under a second.
#[test]
fn criterion_05_determinant_oracle() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let s = PotentialSample::u1(
            rng.random_range(-2.0..2.0),
            [
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
            ],
        );
        let (d, raw) = field_metrics::metric_determinant(&s);
        let rel = (raw - c(d * d, 0.0)).norm() / (d * d).max(1.0);
        worst = worst.max(rel);
    }
    assert!(worst <= 1e-12, "determinant relative error {worst}");
    let dt = t0.elapsed();
    assert!(dt.as_secs_f64() < 1.0, "runtime {dt:?} exceeds 1 s");
    println!("criterion 5: PASS - worst relative error {worst:.2e} in {dt:?}");
}

/// 6. The Coulomb sweep locates the bound boundary at r = 1.000 +- 1e-6 and
/// stays within 1e-3 of the free boundary for r >= 32; under a second.
#[test]
fn criterion_06_region_boundaries() {
    let t0 = Instant::now();
    let d_at = |r: f64| field_metrics::metric_determinant(&PotentialSample::u1(1.0 / r, [0.0; 3])).0;
    let (mut lo, mut hi) = (0.5, 40.0);
    assert!(d_at(lo) < 0.0 && d_at(hi) > 0.0);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if d_at(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let boundary = 0.5 * (lo + hi);
    assert!(
        (boundary - 1.0).abs() <= 1e-6,
        "bound boundary at {boundary}"
    );
    let verdict =
        field_metrics::classify_region(&PotentialSample::u1(1.0 / boundary, [0.0; 3]), 1e-6)
            .unwrap();
    assert_eq!(verdict.label, field_metrics::RegionLabel::BoundBoundary);

    let mut r = 32.0;
    let mut far_gap: f64 = 0.0;
    while r <= 40.0 {
        far_gap = far_gap.max(1.0 - d_at(r));
        r += 0.25;
    }
    assert!(far_gap <= 1e-3, "free-boundary gap {far_gap}");
    let dt = t0.elapsed();
    assert!(dt.as_secs_f64() < 1.0, "runtime {dt:?} exceeds 1 s");
    println!(
        "criterion 6: PASS - boundary at r = {boundary:.7}, far gap {far_gap:.2e} in {dt:?}"
    );
}

/// 7. The Coulomb Laplacian residual over the shell decreases by a factor
/// in [3.5, 4.5] when h halves.
#[test]
fn criterion_07_poisson_convergence() {
    let run = |hh: f64| {
        let nx = (4.0 / hh).round() as usize + 1;
        let nyz = (3.0 / hh).round() as usize + 1;
        let grid = Grid4::new([1, nx, nyz, nyz], [1.0, hh, hh, hh], [0.0, 1.0, -1.5, -1.5]);
        let a = VecPotential::from_catalog(&CatalogPotential::Coulomb { q: 1.0 }, grid);
        let region = GridRegion {
            lo: [0, 1, 1, 1],
            hi: [1, nx - 1, nyz - 1, nyz - 1],
            r_min: Some(1.2),
            r_max: Some(5.0),
        };
        spacetime::poisson_residual(&a, &region).unwrap()
    };
    let coarse = run(0.1);
    let fine = run(0.05);
    let ratio = coarse / fine;
    assert!(
        (3.5..=4.5).contains(&ratio),
        "ratio {ratio} (coarse {coarse:.3e}, fine {fine:.3e})"
    );
    println!("criterion 7: PASS - order-2 ratio {ratio:.3}");
}

/// 8. Plane-wave mass extraction gives |m^2| <= 10 h^2; the wave identity
/// for Avec^2 converges at order 2 on a null wave and holds on the static
/// uniform-B potential.
#[test]
fn criterion_08_mass_and_wave_identity() {
    let h = 0.01;
    let n = 25usize;
    let half = (n - 1) / 2;
    let grid = Grid4::new([n; 4], [h; 4], [-h * half as f64; 4]);
    let a = VecPotential::from_catalog(&CatalogPotential::PlaneWave { amp: 0.8, k: 1.1 }, grid);
    let mass = spacetime::extract_mass(&a, &GridRegion::whole_interior(&a.grid, 2), 1e-4).unwrap();
    assert!(
        mass.median.abs() <= 10.0 * h * h,
        "median m^2 {} vs bound {}",
        mass.median,
        10.0 * h * h
    );

    // oblique null wave: genuine order-2 convergence of the full identity
    let wave = |hh: f64, n: usize| {
        let half = (n - 1) / 2;
        let grid = Grid4::new([n; 4], [hh; 4], [-hh * half as f64; 4]);
        VecPotential::from_catalog(
            &CatalogPotential::ObliqueWave {
                amp: 0.8,
                kx: 1.1,
                kz: 1.1,
            },
            grid,
        )
    };
    let a_coarse = wave(0.02, 13);
    let a_fine = wave(0.01, 25);
    let rep_c = spacetime::box_identity_check(&a_coarse, [6, 6, 6, 8], 1e-6).unwrap();
    let rep_f = spacetime::box_identity_check(&a_fine, [12, 12, 12, 16], 1e-6).unwrap();
    let ratio = rep_c.residual / rep_f.residual;
    assert!(
        (3.5..=4.5).contains(&ratio),
        "wave-identity ratio {ratio} ({} -> {})",
        rep_c.residual,
        rep_f.residual
    );

    // static uniform-B potential passes at the same order (here: exactly,
    // since every stencil is exact on a quadratic field)
    let hb = 0.05;
    let grid = Grid4::new([9; 4], [hb; 4], [-hb * 4.0; 4]);
    let ab = VecPotential::from_catalog(&CatalogPotential::UniformB { b: [0.0, 0.0, 1.5] }, grid);
    let rep_b = spacetime::box_identity_check(&ab, [4, 4, 4, 4], 1e-9).unwrap();
    assert!(
        rep_b.residual <= 10.0 * hb * hb,
        "uniform-B residual {}",
        rep_b.residual
    );
    println!(
        "criterion 8: PASS - |m^2| = {:.2e}, wave ratio {ratio:.3}, uniform-B residual {:.2e}",
        mass.median.abs(),
        rep_b.residual
    );
}

/// 9. The Lagrangian identity holds to 10 h^2 on E-only, B-only and
/// plane-wave catalog fields.
#[test]
fn criterion_09_lagrangian_identity() {
    let mk_grid = |n: usize, h: f64| {
        let half = (n - 1) as f64 / 2.0;
        Grid4::new([n; 4], [h; 4], [-h * half; 4])
    };
    let cases = [
        (
            "pure E",
            CatalogPotential::PureE { e0: 1.2 },
            mk_grid(7, 0.1),
            [3usize, 3, 3, 3],
        ),
        (
            "uniform B",
            CatalogPotential::UniformB { b: [0.3, -0.2, 1.5] },
            mk_grid(7, 0.1),
            [3, 3, 3, 3],
        ),
        (
            "plane wave",
            CatalogPotential::PlaneWave { amp: 0.8, k: 1.1 },
            mk_grid(13, 0.02),
            [6, 6, 6, 8],
        ),
    ];
    let mut worst: f64 = 0.0;
    for (name, cat, grid, idx) in cases {
        let h = grid.spacing[0];
        let a = VecPotential::from_catalog(&cat, grid);
        let res = spacetime::lagrangian_check(&a, idx).unwrap();
        assert!(res <= 10.0 * h * h, "{name}: residual {res}");
        worst = worst.max(res);
    }
    println!("criterion 9: PASS - worst Lagrangian residual {worst:.2e}");
}

/// 10. The motion-equation expansion verifies at relative tolerance 1e-4 on
/// (a) constant potential + plane wave and (b) Gaussian potential and
/// spinor over a straight Simpson path with 201 nodes, with convergence
/// ratio >= 3 under refinement; under 30 s.
#[test]
fn criterion_10_expansion_certification() {
    let t0 = Instant::now();
    let path = appendix::PathSpec::straight(
        [-0.8, -0.5, 0.3, -0.2],
        [0.9, 0.6, -0.4, 0.5],
        201,
        Quadrature::Simpson,
    )
    .unwrap();

    let a = appendix::ConstantVectorField([0.4, -0.2, 0.1, 0.3]);
    let psi = appendix::PlaneWaveSpinor::on_shell([0.3, -0.1, 0.2], 1.0);
    let rep_a = appendix::verify_expansion(&a, &psi, &path, 1e-4).unwrap();
    assert!(rep_a.pass, "case (a) error {}", rep_a.relative_error);

    let (av, psig) = appendix::standard_gaussian_pair(SEED);
    let rep_b = appendix::verify_expansion(&av, &psig, &path, 1e-4).unwrap();
    assert!(rep_b.pass, "case (b) error {}", rep_b.relative_error);
    assert!(
        rep_b.convergence_ratio >= 3.0 || rep_b.relative_error < 1e-9,
        "convergence ratio {}",
        rep_b.convergence_ratio
    );
    let dt = t0.elapsed();
    assert!(dt.as_secs_f64() < 30.0, "runtime {dt:?} exceeds 30 s");
    println!(
        "criterion 10: PASS - errors (a) {:.2e}, (b) {:.2e}, ratio {:.1} in {dt:?}",
        rep_a.relative_error, rep_b.relative_error, rep_b.convergence_ratio
    );
}

/// 11. The quadratic Dirac residual vanishes on shell (<= 10 h^2 with
/// central differences) and the off-shell gap equals |p^2 - m^2| |psi|
/// within 1%.
#[test]
fn criterion_11_quadratic_dirac() {
    let h = 1e-3;
    let x = [0.3, -0.1, 0.2, 0.5];
    let a = appendix::ConstantVectorField([0.0; 4]);
    let psi = appendix::PlaneWaveSpinor::on_shell([0.4, -0.2, 0.3], 1.1);
    let psi_fd = {
        let p = psi.clone();
        appendix::FdSpinorField::new(move |y| p.eval(y), h)
    };
    let res = appendix::quadratic_dirac_residual(&a, &psi_fd, 1.1, &x);
    let on_shell = appendix::v4_max_abs(&res);
    assert!(on_shell <= 10.0 * h * h, "on-shell residual {on_shell}");

    let wrong_mass = 1.4f64;
    let res = appendix::quadratic_dirac_residual(&a, &psi, wrong_mass, &x);
    let gap = (1.1f64 * 1.1 - wrong_mass * wrong_mass).abs();
    let psi_at = psi.eval(&x);
    let mut worst_rel: f64 = 0.0;
    for k in 0..4 {
        let want = gap * psi_at[k].norm();
        if want > 1e-12 {
            worst_rel = worst_rel.max((res[k].norm() - want).abs() / want);
        }
    }
    assert!(worst_rel <= 0.01, "off-shell gap deviation {worst_rel}");
    println!(
        "criterion 11: PASS - on-shell {on_shell:.2e}, off-shell gap deviation {worst_rel:.2e}"
    );
}

/// 12. A product colour metric with colour block diag(1,1,0) has numerical
/// rank exactly 8 (deficit 4); full-rank metrics have deficit 0.
#[test]
fn criterion_12_colour_rank_drop() {
    let s = PotentialSample::u1(0.0, [0.0; 3]);
    let mut q = DMatrix::<Complex64>::identity(3, 3);
    q[(2, 2)] = c(0.0, 0.0);
    let cm = field_metrics::build_colour_metric(&s, ColourMode::Product, Some(&q)).unwrap();
    let rep = field_metrics::colour_rank_analysis(&cm, 1e-9);
    assert_eq!(rep.rank, 8, "rank {}", rep.rank);
    assert_eq!(rep.deficit, 4);

    let full = field_metrics::build_colour_metric(
        &s,
        ColourMode::Product,
        Some(&DMatrix::<Complex64>::identity(3, 3)),
    )
    .unwrap();
    let rep_full = field_metrics::colour_rank_analysis(&full, 1e-9);
    assert_eq!(rep_full.deficit, 0);
    println!("criterion 12: PASS - degenerate rank 8 (deficit 4), full-rank deficit 0");
}

/// 13. Two runs with the same seed produce byte-identical JSON report
/// bodies (and identical sweep CSVs).
#[test]
fn criterion_13_determinism() {
    let cfg = RunConfig::default();
    let r1 = suites::run(Command::All, &cfg);
    let r2 = suites::run(Command::All, &cfg);
    let j1 = r1.report.to_json().unwrap();
    let j2 = r2.report.to_json().unwrap();
    assert_eq!(j1, j2, "report bodies differ between identical runs");
    assert_eq!(r1.region_csv, r2.region_csv);
    assert_eq!(r1.term_files, r2.term_files);
    assert!(!r1.report.has_failures(), "default run must be all green");
    println!(
        "criterion 13: PASS - {} bytes of report identical across runs",
        j1.len()
    );
}

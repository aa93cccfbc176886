//! Deterministic verification suites behind the CLI commands.
//!
//! Every suite derives its randomness from the master seed, so `all`
//! produces exactly the records of the individual commands concatenated,
//! and identical seeds reproduce byte-identical reports.

use crate::appendix::{self, Quadrature, SmoothSpinorField as _};
use crate::config::{
    AppendixConfig, Command, FieldsConfig, ManifoldConfig, RegionConfig, RunConfig,
};
use crate::field_metrics::{self, ColourMode, PotentialSample, Signature};
use crate::gamma::{self, MinkowskiIndex};
use crate::manifold::{self, ComplexPoint, DerivativeStencil, MetricField};
use crate::report::{digest, Convergence, Record, Report, ReportError, write_atomic};
use crate::spacetime::{self, CatalogPotential, Grid4, GridRegion, SpinorField, VecPotential};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Everything a run produces: the report plus side artifacts.
pub struct RunArtifacts {
    pub report: Report,
    pub region_csv: Option<String>,
    pub term_files: Vec<(String, String)>,
}

fn suite_rng(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9e3779b97f4a7c15))
}

// ---------------------------------------------------------------------------
// gamma-selftest: 10 anticommutator pairs + 64 triple decompositions,
// exact arithmetic. Exactly 74 records.
// ---------------------------------------------------------------------------

pub fn gamma_suite() -> Vec<Record> {
    let mut records = Vec::with_capacity(74);
    let mi = |k: usize| MinkowskiIndex::new(k).unwrap();
    for mu in 0..4 {
        for nu in mu..4 {
            let ac = gamma::anticommutator(&gamma::gamma(mi(mu)), &gamma::gamma(mi(nu)));
            let expect = gamma::CliffordElement::identity().scale(num_complex::Complex::new(
                gamma::minkowski_metric(mi(mu), mi(nu)) * num_rational::Ratio::from_integer(2),
                num_rational::Ratio::from_integer(0),
            ));
            let diff = ac.sub(&expect);
            let value = max_abs_f64(&diff);
            records.push(Record::check(
                &format!("gamma_anticommutator_{mu}{nu}"),
                &format!("{{gamma_{mu}, gamma_{nu}}} = 2 g_{mu}{nu} I, exact"),
                value,
                0.0,
                &digest(&["anticommutator", &mu.to_string(), &nu.to_string()]),
            ));
        }
    }
    for s in 0..4 {
        for r in 0..4 {
            for l in 0..4 {
                let direct = gamma::gamma(mi(s))
                    .mul(&gamma::gamma(mi(r)))
                    .mul(&gamma::gamma(mi(l)));
                let decomposed = gamma::triple_decompose(mi(s), mi(r), mi(l));
                let value = max_abs_f64(&direct.sub(&decomposed));
                records.push(Record::check(
                    &format!("gamma_triple_{s}{r}{l}"),
                    "triple product = metric/epsilon decomposition, exact",
                    value,
                    0.0,
                    &digest(&["triple", &s.to_string(), &r.to_string(), &l.to_string()]),
                ));
            }
        }
    }
    records
}

fn max_abs_f64(m: &gamma::CliffordElement) -> f64 {
    m.to_f64()
        .iter()
        .flatten()
        .map(|c| c.norm())
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// manifold suite
// ---------------------------------------------------------------------------

pub fn manifold_suite(cfg: &ManifoldConfig, seed: u64, tol_scale: f64) -> Vec<Record> {
    let mut records = Vec::new();
    let st = DerivativeStencil::new(cfg.h, manifold::StencilOrder::Two);
    let c = Complex64::new;
    let seed_s = seed.to_string();
    let dg = move |parts: &[&str]| {
        let mut v: Vec<&str> = vec!["manifold", &seed_s];
        v.extend_from_slice(parts);
        digest(&v)
    };

    // flatness of constant metrics
    for n in [1usize, 2, 4] {
        let mut m = DMatrix::identity(n, n);
        if n > 1 {
            m[(0, n - 1)] = c(0.3, 0.1);
            m[(n - 1, 0)] = c(0.3, -0.1);
        }
        let metric = MetricField::constant(m, true);
        let p = ComplexPoint::new(vec![c(0.2, -0.4); n]);
        let conn = manifold::connection_from_metric(&metric, &p, &st);
        let curv = manifold::curvature_components(&metric, &p, &st);
        let ricci = manifold::ricci_logdet(&metric, &p, &st);
        let value = match (conn, curv, ricci) {
            (Ok(cn), Ok(cv), Ok(rc)) => cn
                .max_abs()
                .max(cv.max_abs())
                .max(rc.iter().map(|x| x.norm()).fold(0.0, f64::max)),
            _ => f64::INFINITY,
        };
        records.push(Record::check(
            &format!("manifold_flatness_n{n}"),
            "constant metric: connection, curvature, Ricci all vanish",
            value,
            cfg.flat_tol * tol_scale,
            &dg(&["flat", &n.to_string()]),
        ));
    }

    // Kaehler exemplar R_{1bar 1} = 1 (log-det route)
    {
        let metric = MetricField::exp_kahler();
        let p = ComplexPoint::new(vec![c(0.3, 0.5)]);
        let r = manifold::ricci_logdet(&metric, &p, &st)
            .map(|m| (m[(0, 0)] - c(1.0, 0.0)).norm())
            .unwrap_or(f64::INFINITY);
        records.push(Record::check(
            "manifold_exp_kahler_ricci",
            "exponential Kaehler metric: Ricci = 1 via log-determinant",
            r,
            cfg.route_tol * tol_scale,
            &dg(&["exp_kahler"]),
        ));
    }

    // route equivalence + antisymmetry + compatibility on seeded metrics
    {
        let mut rng = suite_rng(seed, 2);
        let probe = ComplexPoint::new(vec![c(0.1, -0.2), c(0.25, 0.15)]);
        let mut worst_route: f64 = 0.0;
        let mut worst_antisym: f64 = 0.0;
        let mut worst_compat: f64 = 0.0;
        let mut worst_hermit: f64 = 0.0;
        for _ in 0..cfg.random_metrics {
            let metric = MetricField::random_hermitian_poly(2, cfg.metric_amplitude, &mut rng);
            let r1 = manifold::ricci_logdet(&metric, &probe, &st).expect("regular metric");
            let r2 = manifold::ricci_via_connection(&metric, &probe, &st).expect("regular metric");
            let rform2 = manifold::ricci_second_form(&metric, &probe, &st).expect("regular metric");
            worst_route = worst_route.max(
                (&r1 - &r2)
                    .iter()
                    .map(|x| x.norm())
                    .fold(0.0, f64::max),
            );
            for j in 0..2 {
                for k in 0..2 {
                    worst_antisym = worst_antisym.max((r1[(j, k)] + rform2[(k, j)]).norm());
                }
            }
            worst_compat = worst_compat.max(
                manifold::check_metric_compatibility(&metric, &probe, &st)
                    .expect("regular metric"),
            );
            let (_, hres) = manifold::check_hermitian_symmetry(&metric, &probe, &st, 1.0)
                .expect("hermitian metric");
            worst_hermit = worst_hermit.max(hres);
        }
        records.push(
            Record::check(
                "manifold_ricci_route_equivalence",
                "log-determinant Ricci equals connection-trace Ricci",
                worst_route,
                cfg.route_tol * tol_scale,
                &dg(&["routes"]),
            )
            .with_details(format!(
                "{} seeded Hermitian polynomial metrics, n = 2, h = {}",
                cfg.random_metrics, cfg.h
            )),
        );
        records.push(Record::check(
            "manifold_ricci_antisymmetry",
            "R_{jbar k} = -R_{k jbar} across the two Ricci forms",
            worst_antisym,
            cfg.antisymmetry_tol * tol_scale,
            &dg(&["antisym"]),
        ));
        records.push(Record::check(
            "manifold_metric_compatibility",
            "dA/dz = A Gamma: the connection preserves the metric",
            worst_compat,
            cfg.compatibility_tol * tol_scale,
            &dg(&["compat"]),
        ));
        records.push(Record::check(
            "manifold_hermitian_symmetry",
            "conj(Ricci) equals the conjugate-family Ricci on Hermitian metrics",
            worst_hermit,
            cfg.hermitian_tol * tol_scale,
            &dg(&["hermit"]),
        ));
    }

    // determinant-derivative identity on a seeded 3x3 metric
    {
        let mut rng = suite_rng(seed, 3);
        let metric = MetricField::random_hermitian_poly(3, cfg.metric_amplitude * 0.75, &mut rng);
        let p = ComplexPoint::new(vec![c(0.1, 0.2), c(-0.2, 0.1), c(0.05, -0.15)]);
        let res = manifold::det_derivative_identity_residual(&metric, &p, &st)
            .unwrap_or(f64::INFINITY);
        records.push(Record::check(
            "manifold_det_derivative_identity",
            "d(det A) = det A tr(A^-1 dA)",
            res,
            cfg.det_identity_tol * tol_scale,
            &dg(&["detid"]),
        ));
    }

    // Ricci identity (torsion-free): exemplar + seeded Kaehler metric
    {
        let ist = DerivativeStencil::new(cfg.identity_h, manifold::StencilOrder::Two);
        let metric = MetricField::exp_kahler();
        let p = ComplexPoint::new(vec![c(0.3, 0.2)]);
        let rep = manifold::ricci_identity_check(&metric, &p, &ist, cfg.ricci_identity_tol)
            .expect("regular metric");
        records.push(
            Record::check(
                "manifold_ricci_identity_exp",
                "covariant Ricci identity R_{jbar k;m} + R_{m jbar;k} = 0",
                rep.residual,
                cfg.ricci_identity_tol * tol_scale,
                &dg(&["ricci_id_exp"]),
            )
            .with_convergence(Convergence::new(rep.residual, rep.refined_residual)),
        );

        let mut rng = suite_rng(seed, 4);
        let metric = MetricField::random_kahler(2, 0.3, 2, &mut rng);
        let p = ComplexPoint::new(vec![c(0.1, 0.05), c(-0.15, 0.1)]);
        let rep = manifold::ricci_identity_check(&metric, &p, &ist, cfg.ricci_identity_tol)
            .expect("regular metric");
        records.push(
            Record::check(
                "manifold_ricci_identity_kahler",
                "covariant Ricci identity on a seeded Kaehler metric",
                rep.residual,
                cfg.ricci_identity_tol * tol_scale,
                &dg(&["ricci_id_rand"]),
            )
            .with_convergence(Convergence::new(rep.residual, rep.refined_residual)),
        );
    }

    // Einstein-form trace logic at n = 4
    {
        let metric = MetricField::diag_exp(4);
        let p = ComplexPoint::new(vec![c(0.2, -0.3); 4]);
        let e = manifold::einstein_form(&metric, &p, &st).expect("regular metric");
        let value = (e.trace + e.scalar * 3.0).norm() / e.scalar.norm().max(1e-12);
        records.push(Record::check(
            "manifold_einstein_trace",
            "metric contraction of the Einstein form equals (1 - n) R at n = 4",
            value,
            1e-6 * tol_scale,
            &dg(&["einstein"]),
        ));
    }

    // analyticity checks
    {
        let p = ComplexPoint::new(vec![c(0.4, 0.9)]);
        let (_, res) = manifold::check_analytic(|q| q.coords()[0].powu(3), &p, 1e-5, &st)
            .expect("finite");
        records.push(Record::check(
            "manifold_analytic_cubic",
            "Cauchy-Riemann residual of z^3 vanishes",
            res,
            1e-5 * tol_scale,
            &dg(&["analytic_cubic"]),
        ));
        let (_, res) = manifold::check_analytic(|q| c(q.coords()[0].re, 0.0), &p, 1e-5, &st)
            .expect("finite");
        records.push(Record::check(
            "manifold_analytic_re_z",
            "Cauchy-Riemann residual of Re(z) equals 1/2",
            (res - 0.5).abs(),
            1e-9 * tol_scale,
            &dg(&["analytic_re"]),
        ));
    }

    // order-2 convergence of the log-det Ricci on a non-quadratic metric
    {
        let metric = MetricField::new(1, true, "entire C", |z| {
            let w = z[0] * z[0].conj();
            DMatrix::from_element(1, 1, (w + w * w * w * 0.3).exp())
        });
        let p = ComplexPoint::new(vec![c(0.5, 0.3)]);
        let exact = {
            let w = (p.coords()[0] * p.coords()[0].conj()).re;
            1.0 + 2.7 * w * w
        };
        let coarse_st = DerivativeStencil::new(2e-2, manifold::StencilOrder::Two);
        let e_coarse = (manifold::ricci_logdet(&metric, &p, &coarse_st).unwrap()[(0, 0)].re
            - exact)
            .abs();
        let e_fine = (manifold::ricci_logdet(&metric, &p, &coarse_st.halved()).unwrap()[(0, 0)]
            .re
            - exact)
            .abs();
        let conv = Convergence::new(e_coarse, e_fine);
        records.push(
            Record::check_range(
                "manifold_fd_convergence_order",
                "log-det Ricci truncation shrinks ~4x when h halves",
                conv.ratio,
                3.5,
                4.5,
                &dg(&["convergence"]),
            )
            .with_convergence(conv),
        );
    }

    records
}

// ---------------------------------------------------------------------------
// region suite
// ---------------------------------------------------------------------------

pub fn region_suite(cfg: &RegionConfig, seed: u64, tol_scale: f64) -> (Vec<Record>, String) {
    let mut records = Vec::new();
    let seed_s = seed.to_string();
    let dg = move |parts: &[&str]| {
        let mut v: Vec<&str> = vec!["region", &seed_s];
        v.extend_from_slice(parts);
        digest(&v)
    };

    // determinant oracle on seeded samples
    {
        let mut rng = suite_rng(seed, 10);
        let mut worst: f64 = 0.0;
        for _ in 0..cfg.det_samples {
            let s = PotentialSample::u1(
                rng.random_range(-2.0..2.0),
                [
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                ],
            );
            let (d, raw) = field_metrics::metric_determinant(&s);
            let rel = (raw - Complex64::new(d * d, 0.0)).norm() / (d * d).max(1.0);
            worst = worst.max(rel);
        }
        records.push(
            Record::check(
                "region_determinant_oracle",
                "brute-force metric determinant equals D^2, D = 1 - A0^2 + A^2",
                worst,
                cfg.det_rel_tol * tol_scale,
                &dg(&["det_oracle"]),
            )
            .with_details(format!(
                "{} seeded samples, |A0|,|A| <= 2; relative to max(D^2, 1)",
                cfg.det_samples
            )),
        );
    }

    // Coulomb sweep CSV and boundary location
    let mut csv = String::from("r,d,label\n");
    {
        let coulomb = |r: f64| PotentialSample::u1(1.0 / r, [0.0; 3]);
        let mut r = cfg.sweep_start;
        while r <= cfg.sweep_stop + 1e-12 {
            let verdict = field_metrics::classify_region(&coulomb(r), cfg.boundary_tol)
                .expect("positive tolerance");
            writeln!(csv, "{},{},{}", r, verdict.d_value, verdict.label.as_str())
                .expect("string write");
            r += cfg.sweep_step;
        }

        // bisection on D(r) = 0 between the sweep ends
        let d_at = |r: f64| field_metrics::metric_determinant(&coulomb(r)).0;
        let (mut lo, mut hi) = (cfg.sweep_start, cfg.sweep_stop);
        let boundary = if d_at(lo) < 0.0 && d_at(hi) > 0.0 {
            while hi - lo > cfg.boundary_locate_tol {
                let mid = 0.5 * (lo + hi);
                if d_at(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        } else {
            f64::NAN
        };
        records.push(Record::check(
            "region_bound_boundary_radius",
            "Coulomb q = 1: the bound boundary D = 0 sits at r = 1",
            (boundary - 1.0).abs(),
            1e-6 * tol_scale,
            &dg(&["boundary"]),
        ));

        // asymptotically-free side: 1 - D within 1e-3 for r >= far_radius
        let mut far_gap: f64 = 0.0;
        let mut r = cfg.far_radius;
        while r <= cfg.sweep_stop + 1e-12 {
            far_gap = far_gap.max(1.0 - d_at(r));
            r += cfg.sweep_step;
        }
        records.push(Record::check(
            "region_free_boundary_tail",
            "Coulomb sweep: D within 1e-3 of the free boundary for large r",
            far_gap,
            1e-3 * tol_scale,
            &dg(&["far"]),
        ));

        // the sweep grid itself must contain a BoundBoundary row at r = 1
        let has_bound_row = csv
            .lines()
            .any(|l| l.ends_with(",BoundBoundary") && l.starts_with('1'));
        records.push(Record::check(
            "region_sweep_bound_row",
            "sweep contains a BoundBoundary row at r = 1.00",
            if has_bound_row { 0.0 } else { 1.0 },
            0.0,
            &dg(&["bound_row"]),
        ));
    }

    // perturbative exclusion: D > 0 whenever |A0| < 1 with real Avec
    {
        let mut rng = suite_rng(seed, 11);
        let mut min_d = f64::INFINITY;
        for _ in 0..500 {
            let s = PotentialSample::u1(
                rng.random_range(-0.999..0.999),
                [
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                    rng.random_range(-2.0..2.0),
                ],
            );
            min_d = min_d.min(field_metrics::metric_determinant(&s).0);
        }
        records.push(
            Record::check_range(
                "region_perturbative_exclusion",
                "D = 0 unreachable for |A0| < 1 with real vector potential",
                min_d,
                1e-12,
                f64::INFINITY,
                &dg(&["exclusion"]),
            )
            .with_details("min D over 500 seeded samples must stay positive".to_string()),
        );
    }

    // Kronecker determinant law for the product colour metric
    {
        let s = PotentialSample::u1(0.3, [0.1, 0.2, -0.1]);
        let mut q = DMatrix::<Complex64>::identity(3, 3);
        q[(0, 1)] = Complex64::new(0.2, 0.1);
        q[(1, 0)] = Complex64::new(0.2, -0.1);
        q[(2, 2)] = Complex64::new(0.5, 0.0);
        let cm = field_metrics::build_colour_metric(&s, ColourMode::Product, Some(&q))
            .expect("colour block supplied");
        let dp = field_metrics::build_u1_metric(&s).m.determinant();
        let dq = q.determinant();
        let want = dp.powu(3) * dq.powu(4);
        let got = cm.m.clone().determinant();
        records.push(Record::check(
            "region_kronecker_determinant",
            "det(P (x) Q) = det(P)^3 det(Q)^4 for the 4x4 (x) 3x3 product",
            (got - want).norm() / want.norm(),
            1e-10 * tol_scale,
            &dg(&["kron"]),
        ));
    }

    // colour rank drop
    {
        let s = PotentialSample::u1(0.0, [0.0; 3]);
        let mut q = DMatrix::<Complex64>::identity(3, 3);
        q[(2, 2)] = Complex64::new(0.0, 0.0);
        let cm = field_metrics::build_colour_metric(&s, ColourMode::Product, Some(&q))
            .expect("colour block supplied");
        let rep = field_metrics::colour_rank_analysis(&cm, cfg.rank_tol);
        records.push(
            Record::check(
                "region_colour_rank_drop",
                "degenerate colour block diag(1,1,0) drops the 12x12 rank to 8",
                (rep.rank as f64 - 8.0).abs(),
                0.0,
                &dg(&["rank_drop"]),
            )
            .with_details(format!("rank {}, deficit {}", rep.rank, rep.deficit)),
        );
        let full = field_metrics::build_colour_metric(
            &s,
            ColourMode::Product,
            Some(&DMatrix::<Complex64>::identity(3, 3)),
        )
        .expect("colour block supplied");
        let rep = field_metrics::colour_rank_analysis(&full, cfg.rank_tol);
        records.push(Record::check(
            "region_colour_full_rank",
            "full-rank colour metric has zero rank deficit",
            rep.deficit as f64,
            0.0,
            &dg(&["rank_full"]),
        ));
    }

    // U(3) extension
    {
        let mut coeffs = [[0.0; 9]; 3];
        coeffs[0][0] = 1.0;
        coeffs[1][0] = 0.5;
        coeffs[2][0] = -0.25;
        let ext = field_metrics::u3_extend(&PotentialSample::coloured(0.0, [0.0; 3], coeffs))
            .expect("colour coefficients present");
        let mut dev: f64 = 0.0;
        for (k, scale) in [(0usize, 1.0), (1, 0.5), (2, -0.25)] {
            let want = field_metrics::lambda0() * Complex64::new(scale, 0.0);
            dev = dev.max(
                (&ext.components[k] - want)
                    .iter()
                    .map(|c| c.norm())
                    .fold(0.0, f64::max),
            );
        }
        records.push(
            Record::check(
                "region_u3_imaginary_vector",
                "pure lambda^0 coefficients give A = i (A0^1, A0^2, A0^3)",
                dev,
                1e-14,
                &dg(&["u3"]),
            )
            .with_details(format!(
                "lambda0 unitary: {}, lambda0 Hermitian: {}",
                ext.lambda0_unitary, ext.lambda0_hermitian
            )),
        );
        records.push(Record::check(
            "region_lambda0_unitary_not_hermitian",
            "lambda^0 (lambda^0)^dagger = I while lambda^0 is non-Hermitian",
            if ext.lambda0_unitary && !ext.lambda0_hermitian {
                0.0
            } else {
                1.0
            },
            0.0,
            &dg(&["lambda0"]),
        ));
    }

    // signature census
    {
        let g0 = DMatrix::from_fn(4, 4, |r, c| {
            let g = gamma::gamma(MinkowskiIndex::new(0).unwrap()).to_f64();
            g[r][c]
        });
        let cases = [
            (
                "region_signature_gamma0",
                field_metrics::signature_classify(&g0, 1e-12),
                Signature::Hyperbolic,
                "gamma_0 has mixed eigenvalue signs: hyperbolic",
            ),
            (
                "region_signature_identity3",
                field_metrics::signature_classify(&DMatrix::<Complex64>::identity(3, 3), 1e-12),
                Signature::Elliptic,
                "the colour identity block is elliptic",
            ),
            (
                "region_signature_degenerate",
                field_metrics::signature_classify(
                    &DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                        Complex64::new(1.0, 0.0),
                        Complex64::new(0.0, 0.0),
                    ])),
                    1e-12,
                ),
                Signature::Degenerate,
                "a vanishing eigenvalue is degenerate",
            ),
        ];
        for (name, got, want, reference) in cases {
            records.push(Record::check(
                name,
                reference,
                if got == want { 0.0 } else { 1.0 },
                0.0,
                &dg(&[name]),
            ));
        }
    }

    (records, csv)
}

// ---------------------------------------------------------------------------
// fields suite
// ---------------------------------------------------------------------------

/// Centered grid with an odd point count so that halving the spacing keeps
/// the physical probe points.
fn centered_grid(n: usize, h: f64) -> Grid4 {
    let n = if n % 2 == 0 { n + 1 } else { n };
    let half = (n - 1) as f64 / 2.0;
    Grid4::new([n; 4], [h; 4], [-h * half; 4])
}

pub fn fields_suite(cfg: &FieldsConfig, tol_scale: f64) -> Vec<Record> {
    let mut records = Vec::new();
    let dg = |parts: &[&str]| {
        let mut v: Vec<&str> = vec!["fields"];
        v.extend_from_slice(parts);
        digest(&v)
    };
    let h = cfg.grid_h;
    let n = if cfg.grid_n % 2 == 0 {
        cfg.grid_n + 1
    } else {
        cfg.grid_n
    };
    let center = (n - 1) / 2;
    // probe two steps off the wave node so the fields are nonzero there
    let probe = [center, center, center, center + 2];
    let probe_fine = [2 * probe[0], 2 * probe[1], 2 * probe[2], 2 * probe[3]];

    // Poisson convergence on the Coulomb shell
    {
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
            spacetime::poisson_residual(&a, &region).expect("non-empty region")
        };
        let coarse = run(cfg.poisson_h);
        let fine = run(cfg.poisson_h / 2.0);
        let conv = Convergence::new(coarse, fine);
        records.push(
            Record::check_range(
                "fields_poisson_convergence",
                "laplacian of the Coulomb potential converges to zero at order 2",
                conv.ratio,
                3.5,
                4.5,
                &dg(&["poisson"]),
            )
            .with_convergence(conv),
        );
    }

    // wave-identity residuals with order-2 convergence; the wave travels
    // obliquely so the axis stencil errors cannot cancel identically
    {
        let wave = CatalogPotential::ObliqueWave {
            amp: cfg.wave_amp,
            kx: cfg.wave_k,
            kz: cfg.wave_k,
        };
        let a_coarse = VecPotential::from_catalog(&wave, centered_grid(n, h));
        let a_fine = VecPotential::from_catalog(&wave, centered_grid(2 * n - 1, h / 2.0));
        let rep_c = spacetime::box_identity_check(&a_coarse, probe, cfg.gauge_tol)
            .expect("transverse wave");
        let rep_f = spacetime::box_identity_check(&a_fine, probe_fine, cfg.gauge_tol)
            .expect("transverse wave");
        let conv = Convergence::new(rep_c.residual, rep_f.residual);
        records.push(
            Record::check_range(
                "fields_box_identity_wave_order",
                "wave identity for Avec^2 on a null wave converges at order 2",
                conv.ratio,
                3.0,
                5.0,
                &dg(&["box_wave"]),
            )
            .with_convergence(conv),
        );
        records.push(Record::check(
            "fields_box_identity_wave_reduced",
            "reduced (transverse) wave identity holds for the null wave",
            rep_f.residual_reduced,
            10.0 * (h / 2.0) * (h / 2.0) * tol_scale,
            &dg(&["box_wave_reduced"]),
        ));

        let axis_wave = CatalogPotential::PlaneWave {
            amp: cfg.wave_amp,
            k: cfg.wave_k,
        };
        let a_fine = VecPotential::from_catalog(&axis_wave, centered_grid(2 * n - 1, h / 2.0));
        let mass = spacetime::extract_mass(
            &a_fine,
            &GridRegion::whole_interior(&a_fine.grid, 2),
            cfg.mass_a2_threshold,
        )
        .expect("wave has vector part");
        records.push(
            Record::check(
                "fields_mass_null_wave",
                "plane-wave mass-squared ratio vanishes",
                mass.median.abs(),
                10.0 * (h / 2.0) * (h / 2.0) * tol_scale,
                &dg(&["mass"]),
            )
            .with_details(format!("pointwise spread {:.3e}", mass.spread)),
        );

        let trep = spacetime::transverse_identity_check(&a_fine, probe_fine, cfg.gauge_tol)
            .expect("transverse wave");
        records.push(Record::check(
            "fields_transverse_identity",
            "B^2 equals the gradient contraction minus its transpose",
            trep.residual_two_term,
            10.0 * (h / 2.0) * (h / 2.0) * tol_scale,
            &dg(&["transverse"]),
        ));
    }

    // uniform-B field: exact identity passes, reduced form misses by B^2
    {
        let b = cfg.uniform_b;
        let a = VecPotential::from_catalog(
            &CatalogPotential::UniformB { b: [0.0, 0.0, b] },
            centered_grid(9, 0.05),
        );
        let rep = spacetime::box_identity_check(&a, [4, 4, 4, 4], cfg.gauge_tol)
            .expect("divergence-free");
        records.push(Record::check(
            "fields_box_identity_uniform_b",
            "exact wave identity (with the transpose term) on a uniform-B potential",
            rep.residual,
            10.0 * 0.05 * 0.05 * tol_scale,
            &dg(&["box_b"]),
        ));
        records.push(
            Record::diagnostic(
                "fields_box_identity_uniform_b_reduced_gap",
                "reduced form misses the uniform-B case by B^2",
                (rep.residual_reduced - b * b).abs(),
                &dg(&["box_b_gap"]),
            )
            .with_details(format!(
                "reduced residual {:.6e}, transpose term {:.6e}",
                rep.residual_reduced, rep.transpose_term
            )),
        );
    }

    // Lagrangian identity on the three catalog fields
    {
        let cases: [(&str, CatalogPotential, Grid4, [usize; 4]); 3] = [
            (
                "fields_lagrangian_pure_e",
                CatalogPotential::PureE { e0: cfg.pure_e },
                centered_grid(7, 0.1),
                [3, 3, 3, 3],
            ),
            (
                "fields_lagrangian_uniform_b",
                CatalogPotential::UniformB {
                    b: [0.3, -0.2, cfg.uniform_b],
                },
                centered_grid(7, 0.1),
                [3, 3, 3, 3],
            ),
            (
                "fields_lagrangian_plane_wave",
                CatalogPotential::PlaneWave {
                    amp: cfg.wave_amp,
                    k: cfg.wave_k,
                },
                centered_grid(n, h),
                probe,
            ),
        ];
        for (name, cat, grid, idx) in cases {
            let a = VecPotential::from_catalog(&cat, grid);
            let hh = a.grid.spacing[0];
            let res = spacetime::lagrangian_check(&a, idx).expect("interior point");
            records.push(Record::check(
                name,
                "-1/4 F.F equals (E^2 - B^2)/2 under diag(+,-,-,-)",
                res,
                10.0 * hh * hh * tol_scale,
                &dg(&[name]),
            ));
        }
    }

    // field-tensor consistency
    {
        let a = VecPotential::from_fn(
            |x| {
                [
                    (x[1] * 1.7).sin() * x[0],
                    x[2] * x[3] + x[0] * x[0],
                    (x[3] * 0.9).cos(),
                    x[1] - 0.3 * x[2],
                ]
            },
            centered_grid(9, 0.05),
            "generic",
        );
        let idx = [4, 4, 4, 4];
        let f = spacetime::field_tensor(&a, idx).expect("interior");
        let em = spacetime::em_fields(&a, idx).expect("interior");
        let asym = (f + f.transpose())
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max);
        records.push(Record::check(
            "fields_tensor_antisymmetry",
            "field tensor is antisymmetric by construction",
            asym,
            1e-12,
            &dg(&["antisym"]),
        ));
        let mut edev: f64 = 0.0;
        for i in 0..3 {
            edev = edev.max((f[(i + 1, 0)] - em.e[i]).abs());
        }
        records.push(Record::check(
            "fields_tensor_electric_consistency",
            "F^{i0} equals the electric field from the same stencils",
            edev,
            1e-12,
            &dg(&["fe"]),
        ));
    }

    // current conservation for an on-shell superposition, plus detection
    {
        let hh = 0.05;
        let grid = centered_grid(9, hh);
        let w1 = spacetime::dirac_plane_wave([0.4, -0.2, 0.3], 1.0);
        let w2 = spacetime::dirac_plane_wave([-0.1, 0.3, 0.2], 1.0);
        let psi = SpinorField::from_fn(
            move |x| {
                let (a, b) = (w1(x), w2(x));
                core::array::from_fn(|k| a[k] + 0.6 * b[k])
            },
            grid,
            "two-wave superposition",
        );
        let region = GridRegion::whole_interior(&psi.grid, 2);
        let div = spacetime::current_divergence(&psi, &region).expect("interior region");
        records.push(Record::check(
            "fields_current_conservation",
            "Dirac current divergence vanishes for on-shell superpositions",
            div,
            10.0 * hh * hh * tol_scale,
            &dg(&["current"]),
        ));

        let noisy = SpinorField::from_fn(
            |x| {
                core::array::from_fn(|k| {
                    Complex64::new(
                        ((x[0] * 13.7 + x[1] * 7.3 + k as f64) * 997.0).sin(),
                        ((x[2] * 11.1 - x[3] * 5.9) * 883.0).cos(),
                    )
                })
            },
            centered_grid(9, hh),
            "noise",
        );
        let div = spacetime::current_divergence(&noisy, &region).expect("interior region");
        records.push(
            Record::check_range(
                "fields_current_noise_detected",
                "random non-solutions show a large current divergence",
                div,
                1.0,
                f64::INFINITY,
                &dg(&["noise"]),
            )
            .with_details("detection case: divergence must be at least 1".to_string()),
        );
    }

    records
}

// ---------------------------------------------------------------------------
// appendix suite
// ---------------------------------------------------------------------------

fn v4_json(v: &appendix::V4) -> serde_json::Value {
    serde_json::Value::Array(
        v.iter()
            .map(|c| serde_json::json!([c.re, c.im]))
            .collect(),
    )
}

fn expansion_case_json(
    case: &str,
    report: &appendix::ExpansionReport,
    motion: &appendix::MotionReport,
) -> String {
    let mut local = serde_json::Map::new();
    for (name, v) in &report.terms.local_terms {
        local.insert(name.clone(), v4_json(v));
    }
    let mut integral = serde_json::Map::new();
    for (name, v) in &report.terms.integral_terms {
        integral.insert(name.clone(), v4_json(v));
    }
    let mut dirac = serde_json::Map::new();
    for (name, v, mag) in &motion.dirac_terms {
        dirac.insert(name.clone(), serde_json::json!({"value": v4_json(v), "magnitude": mag}));
    }
    let mut nonlocal = serde_json::Map::new();
    for (name, v, mag) in &motion.nonlocal_terms {
        nonlocal.insert(
            name.clone(),
            serde_json::json!({"value": v4_json(v), "magnitude": mag}),
        );
    }
    let doc = serde_json::json!({
        "case": case,
        "lhs": v4_json(&report.lhs),
        "rhs_total": v4_json(&report.rhs_total),
        "relative_error": report.relative_error,
        "coarse_relative_error": report.coarse_relative_error,
        "convergence_ratio": report.convergence_ratio,
        "endpoint_terms": serde_json::Value::Object(local),
        "integral_terms": serde_json::Value::Object(integral),
        "motion_dirac_terms": serde_json::Value::Object(dirac),
        "motion_nonlocal_terms": serde_json::Value::Object(nonlocal),
    });
    serde_json::to_string_pretty(&doc).expect("serialisable")
}

pub fn appendix_suite(
    cfg: &AppendixConfig,
    seed: u64,
    tol_scale: f64,
) -> (Vec<Record>, Vec<(String, String)>) {
    let mut records = Vec::new();
    let mut term_files = Vec::new();
    let seed_s = seed.to_string();
    let dg = move |parts: &[&str]| {
        let mut v: Vec<&str> = vec!["appendix", &seed_s];
        v.extend_from_slice(parts);
        digest(&v)
    };
    let quad = if cfg.quadrature == "trapezoid" {
        Quadrature::Trapezoid
    } else {
        Quadrature::Simpson
    };
    let path = appendix::PathSpec::straight(cfg.path_start, cfg.path_end, cfg.points, quad)
        .expect("validated configuration");
    let tol = cfg.tol * tol_scale;

    let run_constant = matches!(cfg.cases.as_str(), "constant" | "both");
    let run_gaussian = matches!(cfg.cases.as_str(), "gaussian" | "both");

    // case (a): constant potential, on-shell plane wave
    if run_constant {
        let a = appendix::ConstantVectorField([0.4, -0.2, 0.1, 0.3]);
        let psi = appendix::PlaneWaveSpinor::on_shell([0.3, -0.1, 0.2], 1.0);
        let report = appendix::verify_expansion(&a, &psi, &path, tol).expect("coarsenable path");
        records.push(
            Record::check(
                "appendix_expansion_constant_a",
                "motion-equation expansion: constant potential, plane-wave spinor",
                report.relative_error,
                tol,
                &dg(&["const_a"]),
            )
            .with_convergence(Convergence::new(
                report.coarse_relative_error,
                report.relative_error,
            )),
        );
        let motion = appendix::motion_equation_terms(&a, &psi, &path);
        term_files.push((
            "constant_plane_wave".to_string(),
            expansion_case_json("constant_plane_wave", &report, &motion),
        ));
    }

    // case (b): seeded Gaussian potential and spinor
    if run_gaussian {
        let (a, psi) = appendix::standard_gaussian_pair(seed);
        let report = appendix::verify_expansion(&a, &psi, &path, tol).expect("coarsenable path");
        records.push(
            Record::check(
                "appendix_expansion_gaussian",
                "motion-equation expansion: Gaussian potential and spinor",
                report.relative_error,
                tol,
                &dg(&["gaussian"]),
            )
            .with_convergence(Convergence::new(
                report.coarse_relative_error,
                report.relative_error,
            )),
        );
        records.push(Record::check(
            "appendix_expansion_convergence",
            "expansion error improves at least 3x under path refinement",
            if report.converged { 0.0 } else { 1.0 },
            0.0,
            &dg(&["converge"]),
        ));
        let t10 = report
            .terms
            .term("divergence_remainder")
            .copied()
            .unwrap_or([Complex64::new(0.0, 0.0); 4]);
        records.push(
            Record::diagnostic(
                "appendix_divergence_remainder_share",
                "magnitude of the divergence integral the printed expansion drops",
                appendix::v4_max_abs(&t10) / appendix::v4_max_abs(&report.lhs).max(1e-12),
                &dg(&["remainder"]),
            )
            .with_details(
                "relative to the left side; the nine-term form misses by this much".to_string(),
            ),
        );
        let motion = appendix::motion_equation_terms(&a, &psi, &path);
        term_files.push((
            "gaussian_straight".to_string(),
            expansion_case_json("gaussian_straight", &report, &motion),
        ));
    }

    // path reversal bookkeeping
    {
        let (a, psi) = appendix::standard_gaussian_pair(seed ^ 0x5bd1);
        let fwd = appendix::rhs_terms(&a, &psi, &path);
        let bwd = appendix::rhs_terms(&a, &psi, &path.reversed());
        let mut worst: f64 = 0.0;
        for ((_, f), (_, b)) in fwd
            .local_terms
            .iter()
            .chain(fwd.integral_terms.iter())
            .zip(bwd.local_terms.iter().chain(bwd.integral_terms.iter()))
        {
            let sum: appendix::V4 = core::array::from_fn(|k| f[k] + b[k]);
            worst = worst.max(appendix::v4_max_abs(&sum));
        }
        records.push(Record::check(
            "appendix_path_reversal",
            "reversing the path negates every expansion contribution",
            worst,
            1e-12,
            &dg(&["reversal"]),
        ));
    }

    // linearity in the spinor
    {
        let (a, psi1) = appendix::standard_gaussian_pair(seed ^ 0x1234);
        let (_, psi2) = appendix::standard_gaussian_pair(seed ^ 0x4321);
        let c1 = Complex64::new(0.7, -0.4);
        let c2 = Complex64::new(-0.3, 0.9);
        let combo = appendix::SpinorCombination {
            terms: vec![
                (
                    c1,
                    std::sync::Arc::new(psi1.clone()) as std::sync::Arc<dyn appendix::SmoothSpinorField>,
                ),
                (c2, std::sync::Arc::new(psi2.clone())),
            ],
        };
        let l = appendix::lhs_integral(&a, &combo, &path).value;
        let l1 = appendix::lhs_integral(&a, &psi1, &path).value;
        let l2 = appendix::lhs_integral(&a, &psi2, &path).value;
        let dev: appendix::V4 = core::array::from_fn(|k| l[k] - (c1 * l1[k] + c2 * l2[k]));
        records.push(Record::check(
            "appendix_linearity",
            "the expansion integrals are linear in the spinor",
            appendix::v4_max_abs(&dev),
            1e-10,
            &dg(&["linearity"]),
        ));
    }

    // pure gauge: F-proportional terms vanish, Ftilde terms survive
    {
        let chi = appendix::GaussianScalar {
            c: 0.6,
            center: [0.1, -0.2, 0.3, 0.0],
            width: 1.8,
            slope: [0.2, -0.1, 0.05, 0.15],
        };
        let chi2 = chi.clone();
        let a = appendix::FdVectorField::new(
            move |x| core::array::from_fn(|mu| gamma::METRIC_SIG[mu] as f64 * chi2.d(x, mu)),
            1e-4,
        );
        let (_, psi) = appendix::standard_gaussian_pair(seed ^ 0x77);
        let terms = appendix::rhs_terms(&a, &psi, &path);
        let f_local = appendix::v4_max_abs(terms.term("f_psi").expect("term present"));
        let f_grad = appendix::v4_max_abs(terms.term("grad_f_psi").expect("term present"));
        records.push(Record::check(
            "appendix_pure_gauge_f_vanishes",
            "field-tensor terms vanish for a pure-gauge potential",
            f_local.max(f_grad),
            1e-5 * tol_scale,
            &dg(&["gauge_f"]),
        ));
        let ftilde = appendix::v4_max_abs(terms.term("ftilde_psi").expect("term present"));
        records.push(Record::check_range(
            "appendix_pure_gauge_ftilde_survives",
            "operator-valued Ftilde terms do not vanish for a pure gauge",
            ftilde,
            1e-4,
            f64::INFINITY,
            &dg(&["gauge_ft"]),
        ));
    }

    // quadratic Dirac form
    {
        let x = [0.3, -0.1, 0.2, 0.5];
        let a = appendix::ConstantVectorField([0.0; 4]);
        let psi = appendix::PlaneWaveSpinor::on_shell([0.4, -0.2, 0.3], 1.1);

        // finite-difference route (nested central differences)
        let psi_fd = {
            let p = psi.clone();
            appendix::FdSpinorField::new(move |y| p.eval(y), cfg.fd_h)
        };
        let res = appendix::quadratic_dirac_residual(&a, &psi_fd, 1.1, &x);
        records.push(Record::check(
            "appendix_quadratic_dirac_on_shell",
            "quadratic Dirac residual vanishes on shell (central differences)",
            appendix::v4_max_abs(&res),
            10.0 * cfg.fd_h * cfg.fd_h * tol_scale,
            &dg(&["qd_on"]),
        ));

        // off-shell gap matches |p^2 - m^2| |psi| within 1%
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
        records.push(Record::check(
            "appendix_quadratic_dirac_off_shell",
            "off-shell residual equals |p^2 - m^2| |psi| within 1%",
            worst_rel,
            0.01,
            &dg(&["qd_off"]),
        ));

        // constant potential absorbed by a momentum shift
        let shift = [0.25, -0.15, 0.05, 0.1];
        let a = appendix::ConstantVectorField(shift);
        let base = appendix::PlaneWaveSpinor::on_shell([0.2, 0.1, -0.3], 0.9);
        let shifted = appendix::PlaneWaveSpinor {
            u: base.u,
            p: core::array::from_fn(|k| base.p[k] + shift[k]),
        };
        let res = appendix::quadratic_dirac_residual(&a, &shifted, 0.9, &x);
        records.push(Record::check(
            "appendix_quadratic_dirac_minimal_coupling",
            "a constant potential is absorbed by the minimal-coupling shift",
            appendix::v4_max_abs(&res),
            1e-10,
            &dg(&["qd_shift"]),
        ));
    }

    (records, term_files)
}

// ---------------------------------------------------------------------------
// orchestration
// ---------------------------------------------------------------------------

pub fn run(command: Command, cfg: &RunConfig) -> RunArtifacts {
    let mut records = Vec::new();
    let mut region_csv = None;
    let mut term_files = Vec::new();

    let want = |c: Command| command == Command::All || command == c;

    if want(Command::GammaSelftest) {
        records.extend(gamma_suite());
    }
    if want(Command::Manifold) {
        records.extend(manifold_suite(&cfg.manifold, cfg.seed, cfg.tol_scale));
    }
    if want(Command::Region) {
        let (recs, csv) = region_suite(&cfg.region, cfg.seed, cfg.tol_scale);
        records.extend(recs);
        region_csv = Some(csv);
    }
    if want(Command::Fields) {
        records.extend(fields_suite(&cfg.fields, cfg.tol_scale));
    }
    if want(Command::Appendix) {
        let (recs, files) = appendix_suite(&cfg.appendix, cfg.seed, cfg.tol_scale);
        records.extend(recs);
        term_files = files;
    }

    let report = Report::new(command.as_str(), cfg.seed, cfg.tol_scale, records);
    RunArtifacts {
        report,
        region_csv,
        term_files,
    }
}

/// Writes `report.json`, `region_sweep.csv` and `terms_<case>.json` under
/// `out_dir`; returns the paths written.
pub fn write_artifacts(
    artifacts: &RunArtifacts,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, ReportError> {
    let mut written = Vec::new();
    let report_path = out_dir.join("report.json");
    write_atomic(&report_path, &artifacts.report.to_json()?)?;
    written.push(report_path);
    if let Some(csv) = &artifacts.region_csv {
        let p = out_dir.join("region_sweep.csv");
        write_atomic(&p, csv)?;
        written.push(p);
    }
    for (case, body) in &artifacts.term_files {
        let p = out_dir.join(format!("terms_{case}.json"));
        write_atomic(&p, body)?;
        written.push(p);
    }
    Ok(written)
}

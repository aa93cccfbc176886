//! Concrete metric models built from potentials: the U(1) Dirac metric
//! `gamma_0 + gamma_0 gamma^mu A_mu`, its scalar-only approximation, colour
//! product and entangled forms, the U(3) extension, the physical-region
//! determinant `D = 1 - A_0^2 + Avec^2` and region classification, colour
//! rank analysis and signature classification.
//!
//! Natural units throughout (`e = 1`). The raw 4x4 determinant of the U(1)
//! metric equals `D^2` (one factor of `D` per two-spinor block); both
//! quantities are exposed and classification uses `D`, whose zero set is
//! the same.

use crate::gamma::{self, MinkowskiIndex};
use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FieldMetricsError {
    #[error("colour coefficients required for colour metric construction")]
    MissingColourData,
    #[error("tolerance must be positive, got {0}")]
    NonPositiveTolerance(f64),
}

/// A potential sample in natural units. `colour_coeffs[k][a]` holds the
/// coefficient of generator `lambda^a` (`a = 0` is the U(3) extension
/// generator `i I_3`) in the spatial component `A^k`, `k = 1..3`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSample {
    pub a0: f64,
    pub avec: [f64; 3],
    pub colour_coeffs: Option<[[f64; 9]; 3]>,
}

impl PotentialSample {
    pub fn u1(a0: f64, avec: [f64; 3]) -> Self {
        Self {
            a0,
            avec,
            colour_coeffs: None,
        }
    }

    pub fn coloured(a0: f64, avec: [f64; 3], coeffs: [[f64; 9]; 3]) -> Self {
        Self {
            a0,
            avec,
            colour_coeffs: Some(coeffs),
        }
    }
}

/// The interacting 4x4 fermion metric.
#[derive(Debug, Clone, PartialEq)]
pub struct DiracMetric {
    pub m: Matrix4<Complex64>,
}

/// 12x12 colour metric, either a spinor (x) colour Kronecker product or the
/// entangled form `gamma0 (x) I3 + A_mu gamma0 gamma^mu (x) A_k`.
#[derive(Debug, Clone)]
pub struct ColourMetric {
    pub m: DMatrix<Complex64>,
    pub mode: ColourMode,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColourMode {
    Product,
    Entangled,
}

/// Classification of a potential sample by the determinant
/// `D = 1 - A_0^2 + Avec^2` against the boundary values 0 and 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionVerdict {
    pub d_value: f64,
    pub label: RegionLabel,
}

/// Labels are assigned with precedence bound > free; `Interior` covers
/// `0 < D < 1` and `Singular` everything beyond either boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionLabel {
    BoundBoundary,
    FreeBoundary,
    Interior,
    Singular,
}

impl RegionLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegionLabel::BoundBoundary => "BoundBoundary",
            RegionLabel::FreeBoundary => "FreeBoundary",
            RegionLabel::Interior => "Interior",
            RegionLabel::Singular => "Singular",
        }
    }
}

fn gamma_f64(mu: usize) -> Matrix4<Complex64> {
    let g = gamma::gamma(MinkowskiIndex::new(mu).unwrap()).to_f64();
    Matrix4::from_fn(|r, c| g[r][c])
}

fn gamma_upper_f64(mu: usize) -> Matrix4<Complex64> {
    let g = gamma::gamma_upper(MinkowskiIndex::new(mu).unwrap()).to_f64();
    Matrix4::from_fn(|r, c| g[r][c])
}

/// `gamma_0 + gamma_0 gamma^mu A_mu` with `A_mu = (A_0, -Avec)` lowered from
/// the sample `(A^0, Avec)`; block structure
/// `[[ (1+A0) I2, -sigma.Avec ], [ -sigma.Avec, (-1+A0) I2 ]]`.
pub fn build_u1_metric(s: &PotentialSample) -> DiracMetric {
    let g0 = gamma_f64(0);
    let mut m = g0;
    // gamma_0 gamma^mu A_mu = gamma_0 (gamma^0 A_0 + gamma^k A_k)
    //                       = gamma_0 (gamma^0 A^0 - gamma^k A^k)
    let a_lower = [s.a0, -s.avec[0], -s.avec[1], -s.avec[2]];
    for mu in 0..4 {
        m += g0 * gamma_upper_f64(mu) * Complex64::new(a_lower[mu], 0.0);
    }
    DiracMetric { m }
}

/// Scalar-only (large-component) approximation `diag(1+A0, 1+A0, -1, -1)`.
/// Returns a warning flag when the vector part is not small relative to
/// the scalar part.
pub fn build_scalar_metric(s: &PotentialSample) -> (DiracMetric, Option<String>) {
    let avec_norm = (s.avec.iter().map(|x| x * x).sum::<f64>()).sqrt();
    let warn = if avec_norm > 0.1 * s.a0.abs() && avec_norm > 0.0 {
        Some(format!(
            "vector potential |Avec| = {avec_norm:.3e} is not small against |A0| = {:.3e}; the large-component approximation may not hold",
            s.a0.abs()
        ))
    } else {
        None
    };
    let mut m = Matrix4::zeros();
    m[(0, 0)] = Complex64::new(1.0 + s.a0, 0.0);
    m[(1, 1)] = Complex64::new(1.0 + s.a0, 0.0);
    m[(2, 2)] = Complex64::new(-1.0, 0.0);
    m[(3, 3)] = Complex64::new(-1.0, 0.0);
    (DiracMetric { m }, warn)
}

/// The paper-level determinant `D = 1 - A0^2 + Avec.Avec` together with the
/// raw 4x4 determinant of the assembled metric (equal to `D^2`).
pub fn metric_determinant(s: &PotentialSample) -> (f64, Complex64) {
    let avec2: f64 = s.avec.iter().map(|x| x * x).sum();
    let d = 1.0 - s.a0 * s.a0 + avec2;
    let raw = build_u1_metric(s).m.determinant();
    (d, raw)
}

/// Classifies the sample by `D` with boundary tolerance `tol`.
pub fn classify_region(s: &PotentialSample, tol: f64) -> Result<RegionVerdict, FieldMetricsError> {
    if tol <= 0.0 {
        return Err(FieldMetricsError::NonPositiveTolerance(tol));
    }
    let (d, _) = metric_determinant(s);
    let label = if d.abs() <= tol {
        RegionLabel::BoundBoundary
    } else if (d - 1.0).abs() <= tol {
        RegionLabel::FreeBoundary
    } else if d > 0.0 && d < 1.0 {
        RegionLabel::Interior
    } else {
        RegionLabel::Singular
    };
    Ok(RegionVerdict { d_value: d, label })
}

/// The eight Gell-Mann matrices, normalised so `tr(lambda^a lambda^b) =
/// 2 delta^{ab}`, indexed 1..=8.
pub fn gell_mann(a: usize) -> DMatrix<Complex64> {
    assert!((1..=8).contains(&a), "Gell-Mann index must be in 1..=8");
    let mut m = DMatrix::zeros(3, 3);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    match a {
        1 => {
            m[(0, 1)] = one;
            m[(1, 0)] = one;
        }
        2 => {
            m[(0, 1)] = -i;
            m[(1, 0)] = i;
        }
        3 => {
            m[(0, 0)] = one;
            m[(1, 1)] = -one;
        }
        4 => {
            m[(0, 2)] = one;
            m[(2, 0)] = one;
        }
        5 => {
            m[(0, 2)] = -i;
            m[(2, 0)] = i;
        }
        6 => {
            m[(1, 2)] = one;
            m[(2, 1)] = one;
        }
        7 => {
            m[(1, 2)] = -i;
            m[(2, 1)] = i;
        }
        8 => {
            let s = 1.0 / 3.0f64.sqrt();
            m[(0, 0)] = Complex64::new(s, 0.0);
            m[(1, 1)] = Complex64::new(s, 0.0);
            m[(2, 2)] = Complex64::new(-2.0 * s, 0.0);
        }
        _ => unreachable!(),
    }
    m
}

/// The U(3) extension generator `lambda^0 = i I_3`: unitary
/// (`lambda^0 (lambda^0)^dagger = I`) but not Hermitian.
pub fn lambda0() -> DMatrix<Complex64> {
    DMatrix::from_diagonal_element(3, 3, Complex64::new(0.0, 1.0))
}

/// Report about the U(3)-extended colour components.
#[derive(Debug, Clone)]
pub struct U3Extension {
    /// `A_k = A^k_0 i I3 + A^k_a lambda^a` for `k = 1..3`.
    pub components: [DMatrix<Complex64>; 3],
    /// `lambda^0 (lambda^0)^dagger = I` verified numerically.
    pub lambda0_unitary: bool,
    /// `lambda^0` is not Hermitian (flagged, by construction).
    pub lambda0_hermitian: bool,
}

/// Assembles the three spatial colour components over the nine U(3)
/// generators from `colour_coeffs`.
pub fn u3_extend(s: &PotentialSample) -> Result<U3Extension, FieldMetricsError> {
    let coeffs = s.colour_coeffs.ok_or(FieldMetricsError::MissingColourData)?;
    let l0 = lambda0();
    let build = |k: usize| {
        let mut m = DMatrix::zeros(3, 3);
        m += &l0 * Complex64::new(coeffs[k][0], 0.0);
        for a in 1..9 {
            m += gell_mann(a) * Complex64::new(coeffs[k][a], 0.0);
        }
        m
    };
    let l0dag = l0.adjoint();
    let unit = &l0 * &l0dag;
    let lambda0_unitary = (unit - DMatrix::<Complex64>::identity(3, 3))
        .iter()
        .all(|c| c.norm() < 1e-14);
    let lambda0_hermitian = (&l0 - l0.adjoint()).iter().all(|c| c.norm() < 1e-14);
    Ok(U3Extension {
        components: [build(0), build(1), build(2)],
        lambda0_unitary,
        lambda0_hermitian,
    })
}

fn kron(a: &Matrix4<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (bn, bm) = (b.nrows(), b.ncols());
    let mut out = DMatrix::zeros(4 * bn, 4 * bm);
    for r in 0..4 {
        for c in 0..4 {
            let s = a[(r, c)];
            for br in 0..bn {
                for bc in 0..bm {
                    out[(r * bn + br, c * bm + bc)] = s * b[(br, bc)];
                }
            }
        }
    }
    out
}

/// Builds the 12x12 colour metric.
///
/// * `Product`: `(spinor U(1) metric) (x) colour_block` — the caller
///   supplies the 3x3 colour block.
/// * `Entangled`: `gamma0 (x) I3 + A_0 gamma0 gamma^0 (x) I3 +
///   sum_k gamma0 gamma^k (x) A_k` with the spatial colour components
///   `A_k` from [`u3_extend`]; the scalar part carries no colour.
pub fn build_colour_metric(
    s: &PotentialSample,
    mode: ColourMode,
    colour_block: Option<&DMatrix<Complex64>>,
) -> Result<ColourMetric, FieldMetricsError> {
    match mode {
        ColourMode::Product => {
            let block = colour_block.ok_or(FieldMetricsError::MissingColourData)?;
            let spinor = build_u1_metric(s);
            Ok(ColourMetric {
                m: kron(&spinor.m, block),
                mode,
            })
        }
        ColourMode::Entangled => {
            let ext = u3_extend(s)?;
            let g0 = gamma_f64(0);
            let i3 = DMatrix::<Complex64>::identity(3, 3);
            let mut m = kron(&g0, &i3);
            // scalar part: A_0 gamma_0 gamma^0 (x) I3 (lowered A_0 = a0)
            let g0g0 = g0 * gamma_upper_f64(0);
            m += kron(&(g0g0 * Complex64::new(s.a0, 0.0)), &i3);
            // vector part: A_k gamma_0 gamma^k (x) A_k, lowered A_k = -A^k
            for k in 0..3 {
                let gk = g0 * gamma_upper_f64(k + 1) * Complex64::new(-1.0, 0.0);
                m += kron(&gk, &ext.components[k]);
            }
            Ok(ColourMetric { m, mode })
        }
    }
}

/// Numerical rank via singular values against `tol * sigma_max`, with the
/// rank deficit and a determinant-consistency flag.
#[derive(Debug, Clone)]
pub struct RankReport {
    pub rank: usize,
    pub deficit: usize,
    pub det_abs: f64,
    pub det_near_zero: bool,
}

pub fn colour_rank_analysis(cm: &ColourMetric, tol: f64) -> RankReport {
    let svd = cm.m.clone().svd(false, false);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let threshold = tol * sigma_max.max(1e-300);
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > threshold)
        .count();
    let n = cm.m.nrows();
    let det_abs = cm.m.clone().determinant().norm();
    RankReport {
        rank,
        deficit: n - rank,
        det_abs,
        det_near_zero: det_abs <= tol,
    }
}

/// Signature census of a Hermitian matrix by eigenvalue signs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Signature {
    Hyperbolic,
    Elliptic,
    Degenerate,
}

impl Signature {
    pub fn as_str(&self) -> &'static str {
        match self {
            Signature::Hyperbolic => "hyperbolic",
            Signature::Elliptic => "elliptic",
            Signature::Degenerate => "degenerate",
        }
    }
}

/// Classifies by the eigenvalues of the Hermitian part of `m`:
/// degenerate when any eigenvalue is within `tol` of zero, elliptic when
/// all share one sign, hyperbolic otherwise.
pub fn signature_classify(m: &DMatrix<Complex64>, tol: f64) -> Signature {
    let herm = (m + m.adjoint()).scale(0.5);
    let eigs = herm.symmetric_eigenvalues();
    if eigs.iter().any(|e| e.abs() <= tol) {
        Signature::Degenerate
    } else if eigs.iter().all(|e| *e > 0.0) || eigs.iter().all(|e| *e < 0.0) {
        Signature::Elliptic
    } else {
        Signature::Hyperbolic
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn free_sample_gives_gamma0() {
        let m = build_u1_metric(&PotentialSample::u1(0.0, [0.0; 3])).m;
        let g0 = gamma_f64(0);
        assert_eq!(m, g0);
    }

    #[test]
    fn scalar_only_diagonal() {
        let m = build_u1_metric(&PotentialSample::u1(0.4, [0.0; 3])).m;
        for k in 0..4 {
            let want = if k < 2 { 1.4 } else { -0.6 };
            assert_relative_eq!(m[(k, k)].re, want, epsilon = 1e-14);
        }
        assert!(m.iter().enumerate().all(|(idx, v)| {
            let (r, c) = (idx % 4, idx / 4);
            r == c || v.norm() < 1e-14
        }));
    }

    #[test]
    fn vector_part_fills_off_diagonal_blocks() {
        // A0 = 0, Avec = (1,0,0): off-diagonal blocks are -sigma_1
        let m = build_u1_metric(&PotentialSample::u1(0.0, [1.0, 0.0, 0.0])).m;
        let mut expect = Matrix4::<Complex64>::zeros();
        expect[(0, 0)] = Complex64::new(1.0, 0.0);
        expect[(1, 1)] = Complex64::new(1.0, 0.0);
        expect[(2, 2)] = Complex64::new(-1.0, 0.0);
        expect[(3, 3)] = Complex64::new(-1.0, 0.0);
        // -sigma.Avec = -sigma_1
        expect[(0, 3)] = Complex64::new(-1.0, 0.0);
        expect[(1, 2)] = Complex64::new(-1.0, 0.0);
        expect[(2, 1)] = Complex64::new(-1.0, 0.0);
        expect[(3, 0)] = Complex64::new(-1.0, 0.0);
        assert!((m - expect).iter().all(|v| v.norm() < 1e-14), "{m}");
    }

    #[test]
    fn block_structure_general_sample() {
        // [[ (1+A0) I2, -sigma.A ], [ -sigma.A, (-1+A0) I2 ]]
        let s = PotentialSample::u1(0.3, [0.2, -0.4, 0.1]);
        let m = build_u1_metric(&s).m;
        let sig = [
            [
                Complex64::new(s.avec[2], 0.0),
                Complex64::new(s.avec[0], -s.avec[1]),
            ],
            [
                Complex64::new(s.avec[0], s.avec[1]),
                Complex64::new(-s.avec[2], 0.0),
            ],
        ];
        for r in 0..2 {
            for c in 0..2 {
                let diag_top = if r == c { 1.0 + s.a0 } else { 0.0 };
                let diag_bot = if r == c { -1.0 + s.a0 } else { 0.0 };
                assert_relative_eq!(m[(r, c)].re, diag_top, epsilon = 1e-14);
                assert_relative_eq!(m[(r + 2, c + 2)].re, diag_bot, epsilon = 1e-14);
                assert_relative_eq!(m[(r, c + 2)].re, -sig[r][c].re, epsilon = 1e-14);
                assert_relative_eq!(m[(r, c + 2)].im, -sig[r][c].im, epsilon = 1e-14);
                assert_relative_eq!(m[(r + 2, c)].re, -sig[r][c].re, epsilon = 1e-14);
                assert_relative_eq!(m[(r + 2, c)].im, -sig[r][c].im, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn scalar_metric_form_and_warning() {
        let (dm, warn) = build_scalar_metric(&PotentialSample::u1(0.3, [0.0; 3]));
        assert!(warn.is_none());
        assert_relative_eq!(dm.m[(0, 0)].re, 1.3, epsilon = 1e-14);
        assert_relative_eq!(dm.m[(2, 2)].re, -1.0, epsilon = 1e-14);
        let det = dm.m.determinant();
        assert_relative_eq!(det.re, 1.3f64 * 1.3, epsilon = 1e-12);

        let (_, warn) = build_scalar_metric(&PotentialSample::u1(0.3, [0.2, 0.0, 0.0]));
        assert!(warn.is_some());
    }

    #[test]
    fn determinant_examples() {
        let (d, _) = metric_determinant(&PotentialSample::u1(0.0, [0.0; 3]));
        assert_relative_eq!(d, 1.0, epsilon = 1e-15);
        let (d, _) = metric_determinant(&PotentialSample::u1(1.0, [0.0; 3]));
        assert!(d.abs() < 1e-15);
        let (d, raw) = metric_determinant(&PotentialSample::u1(0.5, [0.1, 0.0, 0.0]));
        assert_relative_eq!(d, 0.76, epsilon = 1e-12);
        assert_relative_eq!(raw.re, 0.5776, epsilon = 1e-12);
        assert!(raw.im.abs() < 1e-12);
    }

    #[test]
    fn classify_coulomb_points() {
        // Coulomb A0 = 1/r at r = 1
        let v = classify_region(&PotentialSample::u1(1.0, [0.0; 3]), 1e-6).unwrap();
        assert_eq!(v.label, RegionLabel::BoundBoundary);
        // r = 1000: D = 1 - 1e-6 within tol 1e-3 of the free boundary
        let v = classify_region(&PotentialSample::u1(1e-3, [0.0; 3]), 1e-3).unwrap();
        assert_eq!(v.label, RegionLabel::FreeBoundary);
        let v = classify_region(&PotentialSample::u1(0.5, [0.0; 3]), 1e-6).unwrap();
        assert_eq!(v.label, RegionLabel::Interior);
        assert_relative_eq!(v.d_value, 0.75, epsilon = 1e-14);
        // inside r < 1: D < 0, beyond the bound boundary
        let v = classify_region(&PotentialSample::u1(2.0, [0.0; 3]), 1e-6).unwrap();
        assert_eq!(v.label, RegionLabel::Singular);
        assert!(classify_region(&PotentialSample::u1(0.0, [0.0; 3]), 0.0).is_err());
    }

    #[test]
    fn gell_mann_normalisation() {
        for a in 1..=8 {
            for b in 1..=8 {
                let t = (gell_mann(a) * gell_mann(b)).trace();
                let want = if a == b { 2.0 } else { 0.0 };
                assert_relative_eq!(t.re, want, epsilon = 1e-14);
                assert!(t.im.abs() < 1e-14);
            }
        }
        // lambda^3 = diag(1, -1, 0)
        let l3 = gell_mann(3);
        assert_relative_eq!(l3[(0, 0)].re, 1.0);
        assert_relative_eq!(l3[(1, 1)].re, -1.0);
        assert_relative_eq!(l3[(2, 2)].re, 0.0);
    }

    #[test]
    fn u3_extension_components() {
        let mut coeffs = [[0.0; 9]; 3];
        coeffs[0][0] = 1.0; // only A^1_0 active
        let ext = u3_extend(&PotentialSample::coloured(0.0, [0.0; 3], coeffs)).unwrap();
        let want = lambda0();
        assert!((ext.components[0].clone() - want).iter().all(|c| c.norm() < 1e-14));
        assert!(ext.components[1].iter().all(|c| c.norm() < 1e-14));
        assert!(ext.lambda0_unitary);
        assert!(!ext.lambda0_hermitian);

        let mut coeffs = [[0.0; 9]; 3];
        coeffs[0][3] = 1.0; // A^1_3 = 1: A_1 = lambda^3, Hermitian
        let ext = u3_extend(&PotentialSample::coloured(0.0, [0.0; 3], coeffs)).unwrap();
        let a1 = &ext.components[0];
        assert!((a1 - gell_mann(3)).iter().all(|c| c.norm() < 1e-14));
        assert!((a1 - a1.adjoint()).iter().all(|c| c.norm() < 1e-14));

        let ext = u3_extend(&PotentialSample::coloured(0.0, [0.0; 3], [[0.0; 9]; 3])).unwrap();
        assert!(ext.components.iter().all(|m| m.iter().all(|c| c.norm() < 1e-14)));
    }

    #[test]
    fn u3_requires_colour_data() {
        assert_eq!(
            u3_extend(&PotentialSample::u1(0.0, [0.0; 3])).unwrap_err(),
            FieldMetricsError::MissingColourData
        );
    }

    #[test]
    fn entangled_zero_coeffs_is_gamma0_kron_i3() {
        let s = PotentialSample::coloured(0.0, [0.0; 3], [[0.0; 9]; 3]);
        let cm = build_colour_metric(&s, ColourMode::Entangled, None).unwrap();
        let want = kron(&gamma_f64(0), &DMatrix::<Complex64>::identity(3, 3));
        assert!((cm.m.clone() - want).iter().all(|c| c.norm() < 1e-14));
    }

    #[test]
    fn entangled_single_generator_matches_manual_kronecker() {
        let mut coeffs = [[0.0; 9]; 3];
        coeffs[2][3] = 0.7; // A^3 carries lambda^3
        let s = PotentialSample::coloured(0.0, [0.0; 3], coeffs);
        let cm = build_colour_metric(&s, ColourMode::Entangled, None).unwrap();
        let g0 = gamma_f64(0);
        let mut want = kron(&g0, &DMatrix::<Complex64>::identity(3, 3));
        let gk = g0 * gamma_upper_f64(3) * Complex64::new(-1.0, 0.0);
        want += kron(&gk, &(gell_mann(3) * Complex64::new(0.7, 0.0)));
        assert!((cm.m.clone() - want).iter().all(|c| c.norm() < 1e-13));
    }

    #[test]
    fn product_determinant_kronecker_law() {
        let s = PotentialSample::u1(0.0, [0.0; 3]);
        let i3 = DMatrix::<Complex64>::identity(3, 3);
        let cm = build_colour_metric(&s, ColourMode::Product, Some(&i3)).unwrap();
        // det(gamma0 (x) I3) = det(gamma0)^3 det(I3)^4 = 1
        let det = cm.m.clone().determinant();
        assert_relative_eq!(det.re, 1.0, epsilon = 1e-10);
        assert!(det.im.abs() < 1e-10);

        // general check det(P (x) Q) = det(P)^3 det(Q)^4
        let s = PotentialSample::u1(0.3, [0.1, 0.2, -0.1]);
        let mut q = DMatrix::<Complex64>::identity(3, 3);
        q[(0, 1)] = Complex64::new(0.2, 0.1);
        q[(1, 0)] = Complex64::new(0.2, -0.1);
        q[(2, 2)] = Complex64::new(0.5, 0.0);
        let cm = build_colour_metric(&s, ColourMode::Product, Some(&q)).unwrap();
        let dp = build_u1_metric(&s).m.determinant();
        let dq = q.determinant();
        let want = dp.powu(3) * dq.powu(4);
        let got = cm.m.clone().determinant();
        assert!((got - want).norm() <= 1e-10 * want.norm());
    }

    #[test]
    fn rank_drop_with_degenerate_colour_block() {
        let s = PotentialSample::u1(0.0, [0.0; 3]);
        let mut q = DMatrix::<Complex64>::identity(3, 3);
        q[(2, 2)] = Complex64::new(0.0, 0.0); // diag(1,1,0)
        let cm = build_colour_metric(&s, ColourMode::Product, Some(&q)).unwrap();
        let report = colour_rank_analysis(&cm, 1e-9);
        assert_eq!(report.rank, 8);
        assert_eq!(report.deficit, 4);
        assert!(report.det_near_zero);

        let full = build_colour_metric(
            &s,
            ColourMode::Product,
            Some(&DMatrix::<Complex64>::identity(3, 3)),
        )
        .unwrap();
        let report = colour_rank_analysis(&full, 1e-9);
        assert_eq!(report.rank, 12);
        assert_eq!(report.deficit, 0);
        assert!(!report.det_near_zero);
    }

    #[test]
    fn signature_cases() {
        let g0 = DMatrix::from_fn(4, 4, |r, c| gamma_f64(0)[(r, c)]);
        assert_eq!(signature_classify(&g0, 1e-12), Signature::Hyperbolic);
        let i3 = DMatrix::<Complex64>::identity(3, 3);
        assert_eq!(signature_classify(&i3, 1e-12), Signature::Elliptic);
        let mut deg = DMatrix::<Complex64>::identity(2, 2);
        deg[(1, 1)] = Complex64::new(0.0, 0.0);
        assert_eq!(signature_classify(&deg, 1e-12), Signature::Degenerate);
    }

    #[test]
    fn coulomb_scale_consistency() {
        // the family A0 = q/r crosses the bound boundary exactly at r = q
        for q in [0.5f64, 1.0, 2.0, 7.5] {
            let at = |r: f64| metric_determinant(&PotentialSample::u1(q / r, [0.0; 3])).0;
            assert!(at(q).abs() < 1e-12);
            let v = classify_region(&PotentialSample::u1(q / q, [0.0; 3]), 1e-6).unwrap();
            assert_eq!(v.label, RegionLabel::BoundBoundary);
            assert!(at(q * 0.9) < 0.0);
            assert!(at(q * 1.1) > 0.0);
        }
    }

    #[test]
    fn perturbative_exclusion() {
        // |A0| < 1 with real Avec cannot reach D = 0
        for k in 0..100 {
            let a0 = -0.99 + 1.98 * (k as f64) / 99.0;
            let s = PotentialSample::u1(a0, [0.3 * a0, -0.2, 0.1 * a0]);
            let (d, _) = metric_determinant(&s);
            assert!(d > 0.0);
        }
    }
}

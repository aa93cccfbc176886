//! Differential geometry of metric fields over complex coordinates.
//!
//! A metric field assigns to each point `z = (z^1, .., z^n)` an invertible
//! complex matrix `A` with components `A_{alphabar beta}` (row index barred,
//! column index unbarred). Derivatives are numerical central differences on
//! the real and imaginary parts of each coordinate:
//!
//! ```text
//! d/dz^a    = (d/dx^a - i d/dy^a) / 2
//! d/dzbar^a = (d/dx^a + i d/dy^a) / 2
//! ```
//!
//! Only holomorphic-direction ([1,0]-type) connection components exist;
//! the mixed families vanish identically and are never stored. The barred
//! families are reconstructed by conjugation where a formula needs them.
//!
//! Storage conventions used throughout (`M` is the metric matrix at a
//! point, `Minv` its inverse):
//!
//! * `M[(a, b)] = A_{abar b}`, `Minv[(a, b)] = A^{a bbar}`.
//! * connection: `Gamma_i = Minv * dM/dz^i`, so `Gamma_i[(b, a)] =
//!   Gamma^b_{i a}` — `i` is the differentiation direction, `a` the vector
//!   index. Metric compatibility is then the identity `dM/dz^i = M * Gamma_i`.
//! * Ricci: `ricci[(a, b)] = R_{abar b} = d^2 ln det A / dzbar^a dz^b`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;
use std::sync::Arc;
use thiserror::Error;

/// Magnitude below which a metric determinant counts as singular.
pub const SINGULAR_DET_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum ManifoldError {
    #[error("point dimension {point} does not match metric dimension {metric}")]
    DimensionMismatch { point: usize, metric: usize },
    #[error("physical-region singularity: |det A| = {det_abs:.3e} below {threshold:.1e} at a probe point")]
    SingularMetric { det_abs: f64, threshold: f64 },
    #[error("log-determinant branch jump inside the stencil (phase step {step:.3} rad)")]
    BranchJump { step: f64 },
    #[error("non-finite value produced while evaluating a derivative")]
    NonFinite,
    #[error("metric is not Hermitian at the probe point (max asymmetry {residual:.3e})")]
    NotHermitian { residual: f64 },
}

/// A point of an n-dimensional complex manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPoint {
    coords: Vec<Complex64>,
}

impl ComplexPoint {
    pub fn new(coords: Vec<Complex64>) -> Self {
        assert!(!coords.is_empty(), "manifold dimension must be >= 1");
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.coords
    }

    /// Returns a copy with coordinate `alpha` shifted by `dx + i dy`.
    fn shifted(&self, alpha: usize, dx: f64, dy: f64) -> Self {
        let mut c = self.coords.clone();
        c[alpha] += Complex64::new(dx, dy);
        Self { coords: c }
    }
}

/// Central-difference order for the numerical derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StencilOrder {
    Two,
    Four,
}

/// Step size and order of the finite-difference stencils.
#[derive(Debug, Clone, Copy)]
pub struct DerivativeStencil {
    pub h: f64,
    pub order: StencilOrder,
}

impl DerivativeStencil {
    pub fn new(h: f64, order: StencilOrder) -> Self {
        assert!(h > 0.0, "stencil step must be positive");
        Self { h, order }
    }

    pub fn halved(&self) -> Self {
        Self {
            h: self.h / 2.0,
            order: self.order,
        }
    }
}

impl Default for DerivativeStencil {
    fn default() -> Self {
        Self {
            h: 1e-3,
            order: StencilOrder::Two,
        }
    }
}

type MetricFn = dyn Fn(&[Complex64]) -> DMatrix<Complex64> + Send + Sync;

/// A callable metric `A_{alphabar beta}(z, zbar)` with its dimension and a
/// note describing where it is valid.
#[derive(Clone)]
pub struct MetricField {
    eval: Arc<MetricFn>,
    dim: usize,
    hermitian: bool,
    domain_note: String,
}

impl MetricField {
    pub fn new<F>(dim: usize, hermitian: bool, domain_note: &str, eval: F) -> Self
    where
        F: Fn(&[Complex64]) -> DMatrix<Complex64> + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(eval),
            dim,
            hermitian,
            domain_note: domain_note.to_string(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn domain_note(&self) -> &str {
        &self.domain_note
    }

    pub fn eval(&self, p: &ComplexPoint) -> Result<DMatrix<Complex64>, ManifoldError> {
        if p.dim() != self.dim {
            return Err(ManifoldError::DimensionMismatch {
                point: p.dim(),
                metric: self.dim,
            });
        }
        Ok((self.eval)(p.coords()))
    }

    fn eval_raw(&self, coords: &[Complex64]) -> DMatrix<Complex64> {
        (self.eval)(coords)
    }

    /// Constant metric; flat geometry.
    pub fn constant(m: DMatrix<Complex64>, hermitian: bool) -> Self {
        let dim = m.nrows();
        Self::new(dim, hermitian, "entire C^n", move |_| m.clone())
    }

    /// The one-dimensional Kaehler exemplar `A = e^{z zbar}`.
    pub fn exp_kahler() -> Self {
        Self::new(1, true, "entire C", |z| {
            let a = (z[0] * z[0].conj()).exp();
            DMatrix::from_element(1, 1, a)
        })
    }

    /// `A = diag(1, 1 + z^1 zbar^1)` on C^2.
    pub fn diag_poly2() -> Self {
        Self::new(2, true, "entire C^2", |z| {
            let mut m = DMatrix::identity(2, 2);
            m[(1, 1)] = Complex64::new(1.0, 0.0) + z[0] * z[0].conj();
            m
        })
    }

    /// Product exemplar `A = diag(e^{z^1 zbar^1}, .., e^{z^n zbar^n})`.
    pub fn diag_exp(dim: usize) -> Self {
        Self::new(dim, true, "entire C^n", move |z| {
            let mut m = DMatrix::zeros(dim, dim);
            for k in 0..dim {
                m[(k, k)] = (z[k] * z[k].conj()).exp();
            }
            m
        })
    }

    /// Deliberately non-Hermitian example `[[1, z], [0, 1]]`.
    pub fn shear_non_hermitian() -> Self {
        Self::new(2, false, "entire C^2", |z| {
            let mut m = DMatrix::identity(2, 2);
            m[(0, 1)] = z[0];
            m
        })
    }

    /// Random Hermitian polynomial metric `A = (I + N)(I + N)^dagger + I`
    /// with `N` a matrix of degree-<=2 polynomials in `z` with small random
    /// coefficients. Positive definite, Hermitian, entire.
    pub fn random_hermitian_poly<R: Rng>(dim: usize, amplitude: f64, rng: &mut R) -> Self {
        #[derive(Clone)]
        struct Poly {
            c0: Complex64,
            c1: Vec<Complex64>,
            c2: Vec<Vec<Complex64>>,
        }
        let mut rand_c = |scale: f64| {
            Complex64::new(
                rng.random_range(-scale..scale),
                rng.random_range(-scale..scale),
            )
        };
        let mut entries = Vec::with_capacity(dim * dim);
        for _ in 0..dim * dim {
            let c0 = rand_c(amplitude);
            let c1 = (0..dim).map(|_| rand_c(amplitude)).collect::<Vec<_>>();
            let c2 = (0..dim)
                .map(|_| (0..dim).map(|_| rand_c(amplitude * 0.5)).collect())
                .collect::<Vec<Vec<_>>>();
            entries.push(Poly { c0, c1, c2 });
        }
        Self::new(dim, true, "entire C^n (positive definite)", move |z| {
            let mut n = DMatrix::zeros(dim, dim);
            for r in 0..dim {
                for c in 0..dim {
                    let p = &entries[r * dim + c];
                    let mut v = p.c0;
                    for a in 0..dim {
                        v += p.c1[a] * z[a];
                        for b in 0..dim {
                            v += p.c2[a][b] * z[a] * z[b];
                        }
                    }
                    n[(r, c)] = v;
                }
            }
            let v = DMatrix::identity(dim, dim) + n;
            let vh = v.adjoint();
            v * vh + DMatrix::identity(dim, dim)
        })
    }

    /// Random Kaehler metric from the potential
    /// `Phi = |z|^2 + sum_k c_k |q_k(z)|^2` with quadratic `q_k`;
    /// `A_{abar b} = delta_{ab} + sum_k c_k (d_b q_k)(d_a q_k)^*`,
    /// so the connection is symmetric in its lower indices.
    pub fn random_kahler<R: Rng>(dim: usize, amplitude: f64, terms: usize, rng: &mut R) -> Self {
        #[derive(Clone)]
        struct Quad {
            c: f64,
            lin: Vec<Complex64>,
            quad: Vec<Vec<Complex64>>,
        }
        let mut qs = Vec::with_capacity(terms);
        for _ in 0..terms {
            let lin = (0..dim)
                .map(|_| {
                    Complex64::new(
                        rng.random_range(-amplitude..amplitude),
                        rng.random_range(-amplitude..amplitude),
                    )
                })
                .collect::<Vec<_>>();
            let quad = (0..dim)
                .map(|_| {
                    (0..dim)
                        .map(|_| {
                            Complex64::new(
                                rng.random_range(-amplitude..amplitude),
                                rng.random_range(-amplitude..amplitude),
                            )
                        })
                        .collect()
                })
                .collect::<Vec<Vec<_>>>();
            qs.push(Quad {
                c: rng.random_range(0.1..0.5),
                lin,
                quad,
            });
        }
        Self::new(dim, true, "entire C^n (Kaehler potential)", move |z| {
            let mut m = DMatrix::identity(dim, dim);
            for q in &qs {
                let grad: Vec<Complex64> = (0..dim)
                    .map(|b| {
                        let mut g = q.lin[b];
                        for a in 0..dim {
                            g += (q.quad[b][a] + q.quad[a][b]) * z[a];
                        }
                        g
                    })
                    .collect();
                for a in 0..dim {
                    for b in 0..dim {
                        m[(a, b)] += q.c * grad[b] * grad[a].conj();
                    }
                }
            }
            m
        })
    }
}

fn check_finite_scalar(v: Complex64) -> Result<Complex64, ManifoldError> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(ManifoldError::NonFinite)
    }
}

/// First derivative of a complex-scalar field with respect to `z^alpha`
/// (or `zbar^alpha` when `conjugate` is set), by central differences on the
/// real and imaginary parts of coordinate `alpha`.
pub fn holo_deriv_scalar<F>(
    f: F,
    p: &ComplexPoint,
    alpha: usize,
    conjugate: bool,
    stencil: &DerivativeStencil,
) -> Result<Complex64, ManifoldError>
where
    F: Fn(&ComplexPoint) -> Complex64,
{
    let h = stencil.h;
    let diff = |dx: f64, dy: f64| f(&p.shifted(alpha, dx, dy));
    let (dfdx, dfdy) = match stencil.order {
        StencilOrder::Two => (
            (diff(h, 0.0) - diff(-h, 0.0)) / (2.0 * h),
            (diff(0.0, h) - diff(0.0, -h)) / (2.0 * h),
        ),
        StencilOrder::Four => (
            (-diff(2.0 * h, 0.0) + 8.0 * diff(h, 0.0) - 8.0 * diff(-h, 0.0)
                + diff(-2.0 * h, 0.0))
                / (12.0 * h),
            (-diff(0.0, 2.0 * h) + 8.0 * diff(0.0, h) - 8.0 * diff(0.0, -h)
                + diff(0.0, -2.0 * h))
                / (12.0 * h),
        ),
    };
    let i = Complex64::new(0.0, 1.0);
    let v = if conjugate {
        0.5 * (dfdx + i * dfdy)
    } else {
        0.5 * (dfdx - i * dfdy)
    };
    check_finite_scalar(v)
}

/// Matrix-valued counterpart of [`holo_deriv_scalar`].
pub fn holo_deriv_matrix<F>(
    f: F,
    p: &ComplexPoint,
    alpha: usize,
    conjugate: bool,
    stencil: &DerivativeStencil,
) -> Result<DMatrix<Complex64>, ManifoldError>
where
    F: Fn(&ComplexPoint) -> DMatrix<Complex64>,
{
    let h = stencil.h;
    let diff = |dx: f64, dy: f64| f(&p.shifted(alpha, dx, dy));
    let (dfdx, dfdy) = match stencil.order {
        StencilOrder::Two => (
            (diff(h, 0.0) - diff(-h, 0.0)) / Complex64::new(2.0 * h, 0.0),
            (diff(0.0, h) - diff(0.0, -h)) / Complex64::new(2.0 * h, 0.0),
        ),
        StencilOrder::Four => (
            (diff(2.0 * h, 0.0).scale(-1.0) + diff(h, 0.0).scale(8.0) - diff(-h, 0.0).scale(8.0)
                + diff(-2.0 * h, 0.0))
                / Complex64::new(12.0 * h, 0.0),
            (diff(0.0, 2.0 * h).scale(-1.0) + diff(0.0, h).scale(8.0) - diff(0.0, -h).scale(8.0)
                + diff(0.0, -2.0 * h))
                / Complex64::new(12.0 * h, 0.0),
        ),
    };
    let i = Complex64::new(0.0, 1.0);
    let v = if conjugate {
        (dfdx + dfdy * i) * Complex64::new(0.5, 0.0)
    } else {
        (dfdx - dfdy * i) * Complex64::new(0.5, 0.0)
    };
    for e in v.iter() {
        check_finite_scalar(*e)?;
    }
    Ok(v)
}

/// Cauchy-Riemann check: residual is the largest antiholomorphic derivative
/// over all coordinate directions; the field is analytic at `p` when the
/// residual is within `tol`.
pub fn check_analytic<F>(
    f: F,
    p: &ComplexPoint,
    tol: f64,
    stencil: &DerivativeStencil,
) -> Result<(bool, f64), ManifoldError>
where
    F: Fn(&ComplexPoint) -> Complex64,
{
    let mut residual: f64 = 0.0;
    for alpha in 0..p.dim() {
        let d = holo_deriv_scalar(&f, p, alpha, true, stencil)?;
        residual = residual.max(d.norm());
    }
    Ok((residual <= tol, residual))
}

/// Connection coefficients `Gamma^b_{i a}` for each holomorphic direction
/// `i`; entry `(b, a)` of `comps[i]`.
#[derive(Debug, Clone)]
pub struct Connection {
    pub comps: Vec<DMatrix<Complex64>>,
}

impl Connection {
    /// `Gamma^beta_{i alpha}`
    pub fn coeff(&self, beta: usize, i: usize, alpha: usize) -> Complex64 {
        self.comps[i][(beta, alpha)]
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|m| m.iter())
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }
}

fn invert_metric(m: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>, ManifoldError> {
    let det = m.clone().determinant();
    if det.norm() < SINGULAR_DET_THRESHOLD {
        return Err(ManifoldError::SingularMetric {
            det_abs: det.norm(),
            threshold: SINGULAR_DET_THRESHOLD,
        });
    }
    m.clone()
        .try_inverse()
        .ok_or(ManifoldError::SingularMetric {
            det_abs: det.norm(),
            threshold: SINGULAR_DET_THRESHOLD,
        })
}

/// `Gamma_i = A^{-1} dA/dz^i`, holomorphic directions only.
pub fn connection_from_metric(
    metric: &MetricField,
    p: &ComplexPoint,
    stencil: &DerivativeStencil,
) -> Result<Connection, ManifoldError> {
    let m = metric.eval(p)?;
    let minv = invert_metric(&m)?;
    let n = metric.dim();
    let mut comps = Vec::with_capacity(n);
    for i in 0..n {
        let dm = holo_deriv_matrix(|q| metric.eval_raw(q.coords()), p, i, false, stencil)?;
        comps.push(&minv * dm);
    }
    Ok(Connection { comps })
}

/// The two independent nonzero curvature families (the barred pair is the
/// elementwise conjugate with indices relabelled):
///
/// * `mixed_lowered[j][k][(a, b)] = R^a_{b jbar k} = d Gamma^a_{k b} / dzbar^j`
/// * `mixed_raised [j][k][(a, b)] = R^a_{b j kbar} = -d Gamma^a_{j b} / dzbar^k`
#[derive(Debug, Clone)]
pub struct CurvatureFamilies {
    pub mixed_lowered: Vec<Vec<DMatrix<Complex64>>>,
    pub mixed_raised: Vec<Vec<DMatrix<Complex64>>>,
}

impl CurvatureFamilies {
    /// Conjugate family `R^abar_{bbar j kbar}` reconstructed from the first.
    pub fn conjugate_lowered(&self, j: usize, k: usize) -> DMatrix<Complex64> {
        self.mixed_lowered[j][k].map(|c| c.conj())
    }

    /// Conjugate family `R^abar_{bbar jbar k}` reconstructed from the second.
    pub fn conjugate_raised(&self, j: usize, k: usize) -> DMatrix<Complex64> {
        self.mixed_raised[j][k].map(|c| c.conj())
    }

    pub fn max_abs(&self) -> f64 {
        self.mixed_lowered
            .iter()
            .chain(self.mixed_raised.iter())
            .flatten()
            .flat_map(|m| m.iter())
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }
}

/// Evaluates both nonzero curvature families at `p`.
pub fn curvature_components(
    metric: &MetricField,
    p: &ComplexPoint,
    stencil: &DerivativeStencil,
) -> Result<CurvatureFamilies, ManifoldError> {
    let n = metric.dim();
    let gamma_at = |q: &ComplexPoint, i: usize| -> Result<DMatrix<Complex64>, ManifoldError> {
        let m = metric.eval(q)?;
        let minv = invert_metric(&m)?;
        let dm = holo_deriv_matrix(|r| metric.eval_raw(r.coords()), q, i, false, stencil)?;
        Ok(minv * dm)
    };
    let nan_matrix = |n: usize| DMatrix::from_element(n, n, Complex64::new(f64::NAN, 0.0));
    let mut mixed_lowered = vec![vec![DMatrix::zeros(n, n); n]; n];
    let mut mixed_raised = vec![vec![DMatrix::zeros(n, n); n]; n];
    for j in 0..n {
        for k in 0..n {
            let d = holo_deriv_matrix(
                |q| gamma_at(q, k).unwrap_or_else(|_| nan_matrix(n)),
                p,
                j,
                true,
                stencil,
            )?;
            mixed_lowered[j][k] = d;
            let dneg = holo_deriv_matrix(
                |q| gamma_at(q, j).unwrap_or_else(|_| nan_matrix(n)),
                p,
                k,
                true,
                stencil,
            )?;
            mixed_raised[j][k] = dneg.scale(-1.0);
        }
    }
    Ok(CurvatureFamilies {
        mixed_lowered,
        mixed_raised,
    })
}

/// `ln det A` with the phase unwrapped against a reference argument.
/// A step of more than pi/2 from the reference counts as a branch jump.
fn log_det_unwrapped(
    metric: &MetricField,
    q: &ComplexPoint,
    ref_arg: f64,
) -> Result<Complex64, ManifoldError> {
    let det = metric.eval(q)?.determinant();
    let det_abs = det.norm();
    if det_abs < SINGULAR_DET_THRESHOLD {
        return Err(ManifoldError::SingularMetric {
            det_abs,
            threshold: SINGULAR_DET_THRESHOLD,
        });
    }
    let mut arg = det.arg();
    while arg - ref_arg > PI {
        arg -= 2.0 * PI;
    }
    while arg - ref_arg < -PI {
        arg += 2.0 * PI;
    }
    let step = (arg - ref_arg).abs();
    if step > PI / 2.0 {
        return Err(ManifoldError::BranchJump { step });
    }
    Ok(Complex64::new(det_abs.ln(), arg))
}

/// Mixed second derivative taken with `first` acting as `d/dzbar^a` or
/// `d/dz^a` depending on `conj_first` and the second factor the opposite
/// type on index `b`, via 2-D cross stencils (order 2).
fn mixed_second<F>(
    eval: &F,
    p: &ComplexPoint,
    a: usize,
    b: usize,
    h: f64,
    conj_first: bool,
) -> Result<Complex64, ManifoldError>
where
    F: Fn(&ComplexPoint) -> Result<Complex64, ManifoldError>,
{
    let d2 = |ca: usize, ya: bool, cb: usize, yb: bool| -> Result<Complex64, ManifoldError> {
        if ca == cb && ya == yb {
            let shift = |s: f64| p.shifted(ca, if ya { 0.0 } else { s }, if ya { s } else { 0.0 });
            let plus = eval(&shift(h))?;
            let minus = eval(&shift(-h))?;
            let center = eval(p)?;
            Ok((plus - 2.0 * center + minus) / (h * h))
        } else {
            let sh = |s1: f64, s2: f64| {
                let q = p.shifted(ca, if ya { 0.0 } else { s1 }, if ya { s1 } else { 0.0 });
                q.shifted(cb, if yb { 0.0 } else { s2 }, if yb { s2 } else { 0.0 })
            };
            let pp = eval(&sh(h, h))?;
            let pm = eval(&sh(h, -h))?;
            let mp = eval(&sh(-h, h))?;
            let mm = eval(&sh(-h, -h))?;
            Ok((pp - pm - mp + mm) / (4.0 * h * h))
        }
    };
    let i = Complex64::new(0.0, 1.0);
    let xx = d2(a, false, b, false)?;
    let xy = d2(a, false, b, true)?;
    let yx = d2(a, true, b, false)?;
    let yy = d2(a, true, b, true)?;
    // (d_xa ± i d_ya)(d_xb ∓ i d_yb) / 4
    let v = if conj_first {
        0.25 * (xx - i * xy + i * yx + yy)
    } else {
        0.25 * (xx + i * xy - i * yx + yy)
    };
    check_finite_scalar(v)
}

/// Ricci tensor by the log-determinant route:
/// `R_{abar b} = d^2 ln det A / dzbar^a dz^b`.
pub fn ricci_logdet(
    metric: &MetricField,
    p: &ComplexPoint,
    stencil: &DerivativeStencil,
) -> Result<DMatrix<Complex64>, ManifoldError> {
    let n = metric.dim();
    let ref_arg = metric.eval(p)?.determinant().arg();
    let logdet = |q: &ComplexPoint| log_det_unwrapped(metric, q, ref_arg);
    let mut ricci = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            ricci[(a, b)] = mixed_second(&logdet, p, a, b, stencil.h, true)?;
        }
    }
    Ok(ricci)
}

/// Conjugate-type evaluation `d^2 ln det A / dz^a dzbar^b`, used by the
/// Hermitian-symmetry check.
fn ricci_conjugate_family(
    metric: &MetricField,
    p: &ComplexPoint,
    stencil: &DerivativeStencil,
) -> Result<DMatrix<Complex64>, ManifoldError> {
    let n = metric.dim();
    let ref_arg = metric.eval(p)?.determinant().arg();
    let logdet = |q: &ComplexPoint| log_det_unwrapped(metric, q, ref_arg);
    let mut out = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            out[(a, b)] = mixed_second(&logdet, p, a, b, stencil.h, false)?;
        }
    }
    Ok(out)
}

/// Ricci tensor by the independent connection-trace route:
/// `R_{abar b} = d (tr Gamma_b) / dzbar^a`.
pub fn ricci_via_connection(
    metric: &MetricField,
    p: &ComplexPoint,
    stencil: &DerivativeStencil,
) -> Result<DMatrix<Complex64>, ManifoldError> {
    let n = metric.dim();
    let trace_gamma = |q: &ComplexPoint, b: usize| -> Result<Complex64, ManifoldError> {
        let m = metric.eval(q)?;
        let minv = invert_metric(&m)?;
        let dm = holo_deriv_matrix(|r| metric.eval_raw(r.coords()), q, b, false, stencil)?;
        Ok((minv * dm).trace())
    };
    let mut ricci = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let f = |q: &ComplexPoint| {
                trace_gamma(q, b).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
            };
            ricci[(a, b)] = holo_deriv_scalar(f, p, a, true, stencil)?;
        }
    }
    Ok(ricci)
}

/// Second-form Ricci `R_{a bbar} = -d (tr Gamma_a) / dzbar^b`, the trace of
/// the `mixed_raised` curvature family. Antisymmetry means
/// `R_{abar b} = -R_{b abar}` within finite-difference tolerance.
pub fn ricci_second_form(
    metric: &MetricField,
    p: &ComplexPoint,
    stencil: &DerivativeStencil,
) -> Result<DMatrix<Complex64>, ManifoldError> {
    let n = metric.dim();
    let trace_gamma = |q: &ComplexPoint, a: usize| -> Result<Complex64, ManifoldError> {
        let m = metric.eval(q)?;
        let minv = invert_metric(&m)?;
        let dm = holo_deriv_matrix(|r| metric.eval_raw(r.coords()), q, a, false, stencil)?;
        Ok((minv * dm).trace())
    };
    let mut out = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let f = |q: &ComplexPoint| {
                trace_gamma(q, a).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
            };
            out[(a, b)] = -holo_deriv_scalar(f, p, b, true, stencil)?;
        }
    }
    Ok(out)
}

/// Max-abs residual of metric compatibility `dA/dz^i - A Gamma_i` over all
/// holomorphic directions (an identity of the construction, up to
/// finite-difference error).
pub fn check_metric_compatibility(
    metric: &MetricField,
    p: &ComplexPoint,
    stencil: &DerivativeStencil,
) -> Result<f64, ManifoldError> {
    let m = metric.eval(p)?;
    let conn = connection_from_metric(metric, p, stencil)?;
    let mut residual: f64 = 0.0;
    for i in 0..metric.dim() {
        let dm = holo_deriv_matrix(|q| metric.eval_raw(q.coords()), p, i, false, stencil)?;
        let r = dm - &m * &conn.comps[i];
        residual = residual.max(r.iter().map(|c| c.norm()).fold(0.0, f64::max));
    }
    Ok(residual)
}

/// Hermitian-symmetry check `conj(R_{abar b}) = R_{a bbar}`: the conjugated
/// Ricci of a Hermitian metric equals the conjugate-family evaluation.
/// Errors when the metric is not Hermitian at `p`.
pub fn check_hermitian_symmetry(
    metric: &MetricField,
    p: &ComplexPoint,
    stencil: &DerivativeStencil,
    tol: f64,
) -> Result<(bool, f64), ManifoldError> {
    let m = metric.eval(p)?;
    let asym = (&m - m.adjoint())
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    if asym > 1e-9 {
        return Err(ManifoldError::NotHermitian { residual: asym });
    }
    let ricci = ricci_logdet(metric, p, stencil)?;
    let conj_family = ricci_conjugate_family(metric, p, stencil)?;
    let mut residual: f64 = 0.0;
    for a in 0..metric.dim() {
        for b in 0..metric.dim() {
            residual = residual.max((ricci[(a, b)].conj() - conj_family[(a, b)]).norm());
        }
    }
    Ok((residual <= tol, residual))
}

/// Report from the Ricci-identity check `R_{jbar k;m} + R_{m jbar;k} = 0`
/// (torsion-free metrics). Covariant derivatives carry the connection term
/// of the unbarred index; the barred index has no surviving connection
/// family to contract with.
#[derive(Debug, Clone)]
pub struct RicciIdentityReport {
    pub residual: f64,
    /// Residual recomputed with the halved step; `converging == false`
    /// flags insufficient finite-difference order.
    pub refined_residual: f64,
    pub converging: bool,
}

pub fn ricci_identity_check(
    metric: &MetricField,
    p: &ComplexPoint,
    stencil: &DerivativeStencil,
    tol: f64,
) -> Result<RicciIdentityReport, ManifoldError> {
    let res = ricci_identity_residual(metric, p, stencil)?;
    let refined = ricci_identity_residual(metric, p, &stencil.halved())?;
    Ok(RicciIdentityReport {
        residual: res,
        refined_residual: refined,
        converging: refined <= res.max(tol),
    })
}

fn ricci_identity_residual(
    metric: &MetricField,
    p: &ComplexPoint,
    stencil: &DerivativeStencil,
) -> Result<f64, ManifoldError> {
    let n = metric.dim();
    let conn = connection_from_metric(metric, p, stencil)?;
    let ricci = ricci_logdet(metric, p, stencil)?; // R_{jbar k}
    let nan_matrix = |n: usize| DMatrix::from_element(n, n, Complex64::new(f64::NAN, 0.0));
    let mut dricci = vec![DMatrix::zeros(n, n); n];
    for m_dir in 0..n {
        dricci[m_dir] = holo_deriv_matrix(
            |q| ricci_logdet(metric, q, stencil).unwrap_or_else(|_| nan_matrix(n)),
            p,
            m_dir,
            false,
            stencil,
        )?;
    }
    let mut residual: f64 = 0.0;
    for j in 0..n {
        for k in 0..n {
            for m_dir in 0..n {
                // R_{jbar k;m} = d_m R_{jbar k} - Gamma^c_{m k} R_{jbar c}
                let mut cov1 = dricci[m_dir][(j, k)];
                for c in 0..n {
                    cov1 -= conn.coeff(c, m_dir, k) * ricci[(j, c)];
                }
                // R_{m jbar;k} = d_k R_{m jbar} - Gamma^c_{k m} R_{c jbar},
                // with R_{m jbar} = -R_{jbar m}
                let mut cov2 = -dricci[k][(j, m_dir)];
                for c in 0..n {
                    cov2 += conn.coeff(c, k, m_dir) * ricci[(j, c)];
                }
                residual = residual.max((cov1 + cov2).norm());
            }
        }
    }
    Ok(residual)
}

/// Einstein-form output: raised tensor `G^{rhobar m} = R^{rhobar m} -
/// A^{rhobar m} R`, its full contraction with the metric (equal to
/// `(1 - n) R`), and the scalar curvature `R`.
#[derive(Debug, Clone)]
pub struct EinsteinForm {
    pub g_raised: DMatrix<Complex64>,
    pub trace: Complex64,
    pub scalar: Complex64,
}

pub fn einstein_form(
    metric: &MetricField,
    p: &ComplexPoint,
    stencil: &DerivativeStencil,
) -> Result<EinsteinForm, ManifoldError> {
    let m = metric.eval(p)?;
    let minv = invert_metric(&m)?;
    let ricci = ricci_logdet(metric, p, stencil)?;
    let scalar = (&ricci * &minv).trace();
    let g_raised = &minv * &ricci * &minv - (&minv * scalar);
    let trace = (&m * &g_raised).trace();
    Ok(EinsteinForm {
        g_raised,
        trace,
        scalar,
    })
}

/// Residual of the determinant-derivative identity
/// `d_nu det A = det A * tr(A^{-1} d_nu A)` at `p`, maximised over
/// holomorphic directions.
pub fn det_derivative_identity_residual(
    metric: &MetricField,
    p: &ComplexPoint,
    stencil: &DerivativeStencil,
) -> Result<f64, ManifoldError> {
    let m = metric.eval(p)?;
    let minv = invert_metric(&m)?;
    let det = m.determinant();
    let mut residual: f64 = 0.0;
    for nu in 0..metric.dim() {
        let ddet = holo_deriv_scalar(
            |q| metric.eval_raw(q.coords()).determinant(),
            p,
            nu,
            false,
            stencil,
        )?;
        let dm = holo_deriv_matrix(|q| metric.eval_raw(q.coords()), p, nu, false, stencil)?;
        let rhs = det * (&minv * dm).trace();
        residual = residual.max((ddet - rhs).norm());
    }
    Ok(residual)
}

/// Connection, curvature families, Ricci (both routes) and scalar curvature
/// evaluated together at a point.
#[derive(Debug, Clone)]
pub struct GeometryTensors {
    pub connection: Connection,
    pub curvature: CurvatureFamilies,
    pub ricci: DMatrix<Complex64>,
    pub ricci_connection_route: DMatrix<Complex64>,
    pub scalar: Complex64,
}

pub fn geometry_tensors(
    metric: &MetricField,
    p: &ComplexPoint,
    stencil: &DerivativeStencil,
) -> Result<GeometryTensors, ManifoldError> {
    let connection = connection_from_metric(metric, p, stencil)?;
    let curvature = curvature_components(metric, p, stencil)?;
    let ricci = ricci_logdet(metric, p, stencil)?;
    let ricci_connection_route = ricci_via_connection(metric, p, stencil)?;
    let m = metric.eval(p)?;
    let minv = invert_metric(&m)?;
    let scalar = (&ricci * &minv).trace();
    Ok(GeometryTensors {
        connection,
        curvature,
        ricci,
        ricci_connection_route,
        scalar,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn stencil() -> DerivativeStencil {
        DerivativeStencil::default()
    }

    #[test]
    fn holo_deriv_holomorphic_monomial() {
        let p = ComplexPoint::new(vec![c(0.7, -0.3)]);
        let d = holo_deriv_scalar(|q| q.coords()[0], &p, 0, false, &stencil()).unwrap();
        assert_relative_eq!(d.re, 1.0, epsilon = 1e-10);
        assert_relative_eq!(d.im, 0.0, epsilon = 1e-10);
        let db = holo_deriv_scalar(|q| q.coords()[0], &p, 0, true, &stencil()).unwrap();
        assert!(db.norm() < 1e-10);
    }

    #[test]
    fn holo_deriv_z_zbar_and_zbar_squared() {
        // f = z zbar at z = 2 + i: df/dz = zbar = 2 - i
        let p = ComplexPoint::new(vec![c(2.0, 1.0)]);
        let d = holo_deriv_scalar(
            |q| q.coords()[0] * q.coords()[0].conj(),
            &p,
            0,
            false,
            &stencil(),
        )
        .unwrap();
        assert_relative_eq!(d.re, 2.0, epsilon = 1e-9);
        assert_relative_eq!(d.im, -1.0, epsilon = 1e-9);
        // f = zbar^2 at z = 1: df/dzbar = 2
        let p = ComplexPoint::new(vec![c(1.0, 0.0)]);
        let d = holo_deriv_scalar(
            |q| q.coords()[0].conj() * q.coords()[0].conj(),
            &p,
            0,
            true,
            &stencil(),
        )
        .unwrap();
        assert_relative_eq!(d.re, 2.0, epsilon = 1e-9);
        assert!(d.im.abs() < 1e-9);
    }

    #[test]
    fn analyticity_of_z_cubed_and_re_z() {
        let p = ComplexPoint::new(vec![c(0.4, 0.9)]);
        let (ok, res) = check_analytic(|q| q.coords()[0].powu(3), &p, 1e-5, &stencil()).unwrap();
        assert!(ok, "z^3 should be analytic, residual {res}");
        let (ok, res) =
            check_analytic(|q| c(q.coords()[0].re, 0.0), &p, 1e-8, &stencil()).unwrap();
        assert!(!ok);
        assert_relative_eq!(res, 0.5, epsilon = 1e-9);
        // |z|^2 at the origin: the zbar derivative is z = 0 there
        let origin = ComplexPoint::new(vec![c(0.0, 0.0)]);
        let (ok, _) = check_analytic(
            |q| q.coords()[0] * q.coords()[0].conj(),
            &origin,
            1e-8,
            &stencil(),
        )
        .unwrap();
        assert!(ok);
    }

    #[test]
    fn constant_metric_is_flat() {
        for n in [1usize, 2, 4] {
            let mut m = DMatrix::identity(n, n);
            if n > 1 {
                m[(0, n - 1)] = c(0.3, 0.1);
                m[(n - 1, 0)] = c(0.3, -0.1);
            }
            let metric = MetricField::constant(m, true);
            let p = ComplexPoint::new(vec![c(0.2, -0.4); n]);
            let conn = connection_from_metric(&metric, &p, &stencil()).unwrap();
            assert!(conn.max_abs() <= 1e-12);
            let curv = curvature_components(&metric, &p, &stencil()).unwrap();
            assert!(curv.max_abs() <= 1e-12);
            let ricci = ricci_logdet(&metric, &p, &stencil()).unwrap();
            assert!(ricci.iter().all(|r| r.norm() <= 1e-12));
        }
    }

    #[test]
    fn exp_kahler_connection_and_curvature() {
        let metric = MetricField::exp_kahler();
        let z = c(0.6, -0.2);
        let p = ComplexPoint::new(vec![z]);
        let conn = connection_from_metric(&metric, &p, &stencil()).unwrap();
        // Gamma^1_{11} = zbar
        let g = conn.coeff(0, 0, 0);
        assert_relative_eq!(g.re, z.conj().re, epsilon = 5e-6);
        assert_relative_eq!(g.im, z.conj().im, epsilon = 5e-6);
        // R^1_{1 1bar 1} = 1
        let curv = curvature_components(&metric, &p, &stencil()).unwrap();
        let r = curv.mixed_lowered[0][0][(0, 0)];
        assert_relative_eq!(r.re, 1.0, epsilon = 1e-5);
        assert!(r.im.abs() < 1e-5);
        // antisymmetry of the two families at matching slots
        let r2 = curv.mixed_raised[0][0][(0, 0)];
        assert!((r + r2).norm() < 1e-5);
    }

    #[test]
    fn exp_kahler_ricci_both_routes() {
        let metric = MetricField::exp_kahler();
        let p = ComplexPoint::new(vec![c(0.3, 0.5)]);
        let r1 = ricci_logdet(&metric, &p, &stencil()).unwrap()[(0, 0)];
        let r2 = ricci_via_connection(&metric, &p, &stencil()).unwrap()[(0, 0)];
        // ln det is exactly quadratic in the real coordinates, so the
        // log-det stencil is exact; the connection route carries the
        // truncation error of the nested first derivatives.
        assert_relative_eq!(r1.re, 1.0, epsilon = 1e-9);
        assert!(r1.im.abs() < 1e-9);
        assert!((r1 - r2).norm() < 5e-6);
    }

    #[test]
    fn diag_poly2_connection() {
        let metric = MetricField::diag_poly2();
        let z1 = c(0.4, 0.7);
        let p = ComplexPoint::new(vec![z1, c(-0.2, 0.1)]);
        let conn = connection_from_metric(&metric, &p, &stencil()).unwrap();
        let expect = z1.conj() / (1.0 + (z1 * z1.conj()).re);
        let got = conn.coeff(1, 0, 1); // Gamma^2_{1 2}
        assert_relative_eq!(got.re, expect.re, epsilon = 1e-8);
        assert_relative_eq!(got.im, expect.im, epsilon = 1e-8);
        for i in 0..2 {
            for b in 0..2 {
                for a in 0..2 {
                    if (b, i, a) != (1, 0, 1) {
                        assert!(conn.coeff(b, i, a).norm() < 1e-8, "({b},{i},{a})");
                    }
                }
            }
        }
    }

    #[test]
    fn diag_exp_ricci_is_identity() {
        let metric = MetricField::diag_exp(2);
        let p = ComplexPoint::new(vec![c(0.3, -0.1), c(-0.5, 0.2)]);
        let ricci = ricci_logdet(&metric, &p, &stencil()).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let want = if a == b { 1.0 } else { 0.0 };
                assert_relative_eq!(ricci[(a, b)].re, want, epsilon = 1e-7);
                assert!(ricci[(a, b)].im.abs() < 1e-7);
            }
        }
    }

    #[test]
    fn route_equivalence_on_random_hermitian_metrics() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..5 {
            let metric = MetricField::random_hermitian_poly(2, 0.2, &mut rng);
            let p = ComplexPoint::new(vec![c(0.1, -0.2), c(0.25, 0.15)]);
            let r1 = ricci_logdet(&metric, &p, &stencil()).unwrap();
            let r2 = ricci_via_connection(&metric, &p, &stencil()).unwrap();
            let dev = (&r1 - &r2).iter().map(|x| x.norm()).fold(0.0, f64::max);
            assert!(dev <= 1e-6, "trial {trial}: deviation {dev}");
        }
    }

    #[test]
    fn metric_compatibility_holds() {
        let metric = MetricField::exp_kahler();
        let p = ComplexPoint::new(vec![c(0.3, 0.4)]);
        let res = check_metric_compatibility(&metric, &p, &stencil()).unwrap();
        assert!(res <= 1e-8, "residual {res}");

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let metric = MetricField::random_hermitian_poly(2, 0.2, &mut rng);
        let p = ComplexPoint::new(vec![c(0.2, 0.1), c(-0.1, 0.2)]);
        let res = check_metric_compatibility(&metric, &p, &stencil()).unwrap();
        assert!(res <= 1e-6, "residual {res}");
    }

    #[test]
    fn hermitian_symmetry_and_detection() {
        let metric = MetricField::exp_kahler();
        let p = ComplexPoint::new(vec![c(0.4, -0.6)]);
        let (ok, res) = check_hermitian_symmetry(&metric, &p, &stencil(), 1e-7).unwrap();
        assert!(ok, "residual {res}");

        let bad = MetricField::shear_non_hermitian();
        let p = ComplexPoint::new(vec![c(0.5, 0.5), c(0.0, 0.0)]);
        match check_hermitian_symmetry(&bad, &p, &stencil(), 1e-7) {
            Err(ManifoldError::NotHermitian { .. }) => {}
            other => panic!("expected NotHermitian, got {other:?}"),
        }
    }

    #[test]
    fn ricci_antisymmetry_between_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let metric = MetricField::random_hermitian_poly(2, 0.2, &mut rng);
        let p = ComplexPoint::new(vec![c(0.15, -0.1), c(0.2, 0.25)]);
        let r1 = ricci_logdet(&metric, &p, &stencil()).unwrap();
        let r2 = ricci_second_form(&metric, &p, &stencil()).unwrap();
        for j in 0..2 {
            for k in 0..2 {
                // R_{jbar k} + R_{k jbar} -> 0
                let res = (r1[(j, k)] + r2[(k, j)]).norm();
                assert!(res <= 1e-5, "({j},{k}): {res}");
            }
        }
    }

    #[test]
    fn ricci_identity_on_kahler_metrics() {
        let st = DerivativeStencil::new(1e-2, StencilOrder::Two);
        let metric = MetricField::exp_kahler();
        let p = ComplexPoint::new(vec![c(0.3, 0.2)]);
        let report = ricci_identity_check(&metric, &p, &st, 1e-4).unwrap();
        assert!(report.residual <= 1e-4, "residual {}", report.residual);
        assert!(report.converging);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let metric = MetricField::random_kahler(2, 0.3, 2, &mut rng);
        let p = ComplexPoint::new(vec![c(0.1, 0.05), c(-0.15, 0.1)]);
        let report = ricci_identity_check(&metric, &p, &st, 1e-4).unwrap();
        assert!(report.residual <= 1e-4, "residual {}", report.residual);
    }

    #[test]
    fn einstein_form_trace_logic() {
        // constant metric: everything vanishes
        let metric = MetricField::constant(DMatrix::identity(4, 4), true);
        let p = ComplexPoint::new(vec![c(0.1, 0.1); 4]);
        let e = einstein_form(&metric, &p, &stencil()).unwrap();
        assert!(e.scalar.norm() <= 1e-12);
        assert!(e.trace.norm() <= 1e-12);

        // n = 4: trace(G) = -3 R
        let metric = MetricField::diag_exp(4);
        let p = ComplexPoint::new(vec![c(0.2, -0.3); 4]);
        let e = einstein_form(&metric, &p, &stencil()).unwrap();
        assert!((e.trace - e.scalar * (-3.0)).norm() < 1e-6 * e.scalar.norm().max(1.0));

        // n = 1: trace = (1-1) R = 0
        let metric = MetricField::exp_kahler();
        let p = ComplexPoint::new(vec![c(0.5, 0.1)]);
        let e = einstein_form(&metric, &p, &stencil()).unwrap();
        assert!(e.trace.norm() < 1e-8);
    }

    #[test]
    fn determinant_derivative_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let metric = MetricField::random_hermitian_poly(3, 0.15, &mut rng);
        let p = ComplexPoint::new(vec![c(0.1, 0.2), c(-0.2, 0.1), c(0.05, -0.15)]);
        let res = det_derivative_identity_residual(&metric, &p, &stencil()).unwrap();
        assert!(res <= 1e-5, "residual {res}");
    }

    #[test]
    fn singular_metric_reported() {
        let metric = MetricField::new(1, true, "degenerate at origin", |z| {
            DMatrix::from_element(1, 1, z[0] * z[0].conj())
        });
        let p = ComplexPoint::new(vec![c(0.0, 0.0)]);
        match connection_from_metric(&metric, &p, &stencil()) {
            Err(ManifoldError::SingularMetric { .. }) => {}
            other => panic!("expected SingularMetric, got {other:?}"),
        }
    }

    #[test]
    fn convergence_under_halving() {
        // Ricci of a metric with nonzero higher derivatives: the truncation
        // error of the order-2 stencil must shrink ~4x when h halves.
        let metric = MetricField::new(1, true, "entire C", |z| {
            let w = z[0] * z[0].conj();
            DMatrix::from_element(1, 1, (w + w * w * w * 0.3).exp())
        });
        let p = ComplexPoint::new(vec![c(0.5, 0.3)]);
        let coarse = DerivativeStencil::new(2e-2, StencilOrder::Two);
        let fine = coarse.halved();
        let r_coarse = ricci_logdet(&metric, &p, &coarse).unwrap()[(0, 0)];
        let r_fine = ricci_logdet(&metric, &p, &fine).unwrap()[(0, 0)];
        let exact = {
            // ln det A = w + 0.3 w^3, w = z zbar; d2/(dzbar dz) = 1 + 2.7 w^2
            let w = (p.coords()[0] * p.coords()[0].conj()).re;
            1.0 + 2.7 * w * w
        };
        let e_coarse = (r_coarse.re - exact).abs();
        let e_fine = (r_fine.re - exact).abs();
        let ratio = e_coarse / e_fine;
        assert!(
            (3.5..=4.5).contains(&ratio),
            "convergence ratio {ratio}, errors {e_coarse} {e_fine}"
        );
    }
}

//! Exact Dirac gamma-matrix algebra over Gaussian rationals.
//!
//! Conventions, fixed once here and used by every other module:
//!
//! * Metric signature `g = diag(+1, -1, -1, -1)`.
//! * [`gamma`] returns the *index-lowered* Dirac-representation matrices
//!   `gamma_mu`: `gamma_0 = diag(1, 1, -1, -1)` and
//!   `gamma_k = [[0, -sigma_k], [sigma_k, 0]]`. The raised set is
//!   `gamma^mu = g^{mumu} gamma_mu`, see [`gamma_upper`]. Any sign choice
//!   for the spatial matrices satisfies the Clifford relation; this one is
//!   pinned so that the triple-product decomposition below holds with
//!   `eps_{0123} = +1` — verified exhaustively over all 64 triples.
//! * `gamma5 = i gamma_0 gamma_1 gamma_2 gamma_3` (lowered product).
//! * `eps_{sigma rho lambda mu}` is totally antisymmetric with
//!   `eps_{0123} = +1`.
//!
//! All entries are Gaussian rationals (complex numbers with rational real
//! and imaginary parts), so every identity in this module is checked
//! exactly, not to a floating tolerance.

use num_complex::Complex;
use num_rational::Ratio;
use num_traits::{One, Zero};
use thiserror::Error;

/// Exact rational scalar.
pub type Rational = Ratio<i64>;
/// Exact complex scalar with rational parts.
pub type GaussianRational = Complex<Rational>;

/// Signature of the flat metric, `g_{mumu}` for `mu = 0..3`.
pub const METRIC_SIG: [i64; 4] = [1, -1, -1, -1];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GammaError {
    #[error("Minkowski index {0} out of range 0..=3")]
    IndexOutOfRange(usize),
}

/// A space-time index in `0..=3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MinkowskiIndex(u8);

impl MinkowskiIndex {
    pub fn new(mu: usize) -> Result<Self, GammaError> {
        if mu < 4 {
            Ok(Self(mu as u8))
        } else {
            Err(GammaError::IndexOutOfRange(mu))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Diagonal metric component `g_{mumu}` as an exact rational.
    pub fn sign(self) -> Rational {
        Rational::from_integer(METRIC_SIG[self.index()])
    }
}

/// Flat metric component `g_{munu}` (equal to `g^{munu}`).
pub fn minkowski_metric(mu: MinkowskiIndex, nu: MinkowskiIndex) -> Rational {
    if mu == nu {
        mu.sign()
    } else {
        Rational::zero()
    }
}

fn q(re: i64) -> GaussianRational {
    Complex::new(Rational::from_integer(re), Rational::zero())
}

fn qi(im: i64) -> GaussianRational {
    Complex::new(Rational::zero(), Rational::from_integer(im))
}

/// A 4x4 exact complex matrix viewed as an element of the Dirac algebra.
///
/// The sixteen products of distinct gamma matrices are linearly independent,
/// so every element has a unique expansion over the basis
/// `{I, gamma_mu, sigma_{munu}, gamma5 gamma_mu, gamma5}`; see
/// [`basis_expand`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliffordElement {
    entries: [[GaussianRational; 4]; 4],
}

impl CliffordElement {
    pub fn zero() -> Self {
        Self {
            entries: [[GaussianRational::zero(); 4]; 4],
        }
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for k in 0..4 {
            m.entries[k][k] = GaussianRational::one();
        }
        m
    }

    pub fn from_entries(entries: [[GaussianRational; 4]; 4]) -> Self {
        Self { entries }
    }

    pub fn entry(&self, r: usize, c: usize) -> GaussianRational {
        self.entries[r][c]
    }

    pub fn set_entry(&mut self, r: usize, c: usize, v: GaussianRational) {
        self.entries[r][c] = v;
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for r in 0..4 {
            for c in 0..4 {
                let mut acc = GaussianRational::zero();
                for k in 0..4 {
                    acc += self.entries[r][k] * other.entries[k][c];
                }
                out.entries[r][c] = acc;
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for r in 0..4 {
            for c in 0..4 {
                out.entries[r][c] += other.entries[r][c];
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for r in 0..4 {
            for c in 0..4 {
                out.entries[r][c] -= other.entries[r][c];
            }
        }
        out
    }

    pub fn neg(&self) -> Self {
        Self::zero().sub(self)
    }

    pub fn scale(&self, s: GaussianRational) -> Self {
        let mut out = self.clone();
        for r in 0..4 {
            for c in 0..4 {
                out.entries[r][c] *= s;
            }
        }
        out
    }

    pub fn trace(&self) -> GaussianRational {
        (0..4).map(|k| self.entries[k][k]).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.entries
            .iter()
            .all(|row| row.iter().all(|e| e.is_zero()))
    }

    /// Floating view for the numerical modules.
    pub fn to_f64(&self) -> [[Complex<f64>; 4]; 4] {
        let mut out = [[Complex::new(0.0, 0.0); 4]; 4];
        for r in 0..4 {
            for c in 0..4 {
                let e = self.entries[r][c];
                out[r][c] = Complex::new(rational_to_f64(e.re), rational_to_f64(e.im));
            }
        }
        out
    }
}

fn rational_to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Index-lowered gamma matrix `gamma_mu` in the Dirac representation.
///
/// `gamma(0)` is the diagonal matrix `diag(1, 1, -1, -1)`.
pub fn gamma(mu: MinkowskiIndex) -> CliffordElement {
    let mut m = CliffordElement::zero();
    match mu.index() {
        0 => {
            m.entries[0][0] = q(1);
            m.entries[1][1] = q(1);
            m.entries[2][2] = q(-1);
            m.entries[3][3] = q(-1);
        }
        // gamma_k = [[0, -sigma_k], [sigma_k, 0]]
        1 => {
            m.entries[0][3] = q(-1);
            m.entries[1][2] = q(-1);
            m.entries[2][1] = q(1);
            m.entries[3][0] = q(1);
        }
        2 => {
            m.entries[0][3] = qi(1);
            m.entries[1][2] = qi(-1);
            m.entries[2][1] = qi(-1);
            m.entries[3][0] = qi(1);
        }
        3 => {
            m.entries[0][2] = q(-1);
            m.entries[1][3] = q(1);
            m.entries[2][0] = q(1);
            m.entries[3][1] = q(-1);
        }
        _ => unreachable!(),
    }
    m
}

/// Index-raised gamma matrix `gamma^mu = g^{mumu} gamma_mu`.
pub fn gamma_upper(mu: MinkowskiIndex) -> CliffordElement {
    gamma(mu).scale(Complex::new(mu.sign(), Rational::zero()))
}

/// `gamma5 = i gamma_0 gamma_1 gamma_2 gamma_3`. Squares to the identity
/// and anticommutes with every `gamma_mu`.
pub fn gamma5() -> CliffordElement {
    let mut m = CliffordElement::zero();
    for (mu, g) in (0..4)
        .map(|k| gamma(MinkowskiIndex::new(k).unwrap()))
        .enumerate()
    {
        if mu == 0 {
            m = g;
        } else {
            m = m.mul(&g);
        }
    }
    m.scale(qi(1))
}

/// `ab + ba`, exact.
pub fn anticommutator(a: &CliffordElement, b: &CliffordElement) -> CliffordElement {
    a.mul(b).add(&b.mul(a))
}

/// Totally antisymmetric symbol with `eps_{0123} = +1`; zero when any two
/// indices coincide.
pub fn levi_civita(
    s: MinkowskiIndex,
    r: MinkowskiIndex,
    l: MinkowskiIndex,
    m: MinkowskiIndex,
) -> i64 {
    let idx = [s.index(), r.index(), l.index(), m.index()];
    let mut seen = [false; 4];
    for &i in &idx {
        if seen[i] {
            return 0;
        }
        seen[i] = true;
    }
    let mut sign = 1i64;
    for i in 0..4 {
        for j in (i + 1)..4 {
            if idx[i] > idx[j] {
                sign = -sign;
            }
        }
    }
    sign
}

/// Decomposed form of the triple product `gamma_sigma gamma_rho gamma_lambda`.
///
/// When the three indices are pairwise distinct this is
/// `-i eps_{sigma rho lambda mu} gamma5 gamma^mu`; otherwise it is
/// `g_{sigma rho} gamma_lambda + g_{rho lambda} gamma_sigma
///  - g_{sigma lambda} gamma_rho`. The metric branch also covers the
/// all-equal case; the exhaustive 64-triple test pins this down rather
/// than assuming it.
pub fn triple_decompose(
    sigma: MinkowskiIndex,
    rho: MinkowskiIndex,
    lambda: MinkowskiIndex,
) -> CliffordElement {
    let distinct = sigma != rho && rho != lambda && sigma != lambda;
    if distinct {
        let g5 = gamma5();
        let mut out = CliffordElement::zero();
        for m in 0..4 {
            let mu = MinkowskiIndex::new(m).unwrap();
            let e = levi_civita(sigma, rho, lambda, mu);
            if e != 0 {
                // -i * eps * gamma5 gamma^mu
                let term = g5.mul(&gamma_upper(mu)).scale(qi(-e));
                out = out.add(&term);
            }
        }
        out
    } else {
        let c = |x: Rational| Complex::new(x, Rational::zero());
        gamma(lambda)
            .scale(c(minkowski_metric(sigma, rho)))
            .add(&gamma(sigma).scale(c(minkowski_metric(rho, lambda))))
            .sub(&gamma(rho).scale(c(minkowski_metric(sigma, lambda))))
    }
}

/// The sixteen basis elements `{I, gamma_mu, sigma_{munu} (mu<nu),
/// gamma5 gamma_mu, gamma5}` with `sigma_{munu} = (i/2)[gamma_mu, gamma_nu]`.
pub fn basis_elements() -> Vec<(String, CliffordElement)> {
    let mut basis = Vec::with_capacity(16);
    basis.push(("I".to_string(), CliffordElement::identity()));
    for mu in 0..4 {
        let idx = MinkowskiIndex::new(mu).unwrap();
        basis.push((format!("gamma{mu}"), gamma(idx)));
    }
    for mu in 0..4 {
        for nu in (mu + 1)..4 {
            let a = gamma(MinkowskiIndex::new(mu).unwrap());
            let b = gamma(MinkowskiIndex::new(nu).unwrap());
            let comm = a.mul(&b).sub(&b.mul(&a));
            let sigma = comm.scale(GaussianRational::new(
                Rational::zero(),
                Rational::new(1, 2),
            ));
            basis.push((format!("sigma{mu}{nu}"), sigma));
        }
    }
    let g5 = gamma5();
    for mu in 0..4 {
        basis.push((
            format!("gamma5gamma{mu}"),
            g5.mul(&gamma(MinkowskiIndex::new(mu).unwrap())),
        ));
    }
    basis.push(("gamma5".to_string(), g5));
    basis
}

/// Expands `m` over the sixteen-element basis via trace inner products.
///
/// Each basis element `B` squares to `+I` or `-I`, so the coefficient is
/// `tr(B m) / tr(B B)` — exact in Gaussian rationals.
pub fn basis_expand(m: &CliffordElement) -> Vec<GaussianRational> {
    basis_elements()
        .iter()
        .map(|(_, b)| {
            let norm = b.mul(b).trace(); // +4 or -4
            b.mul(m).trace() / norm
        })
        .collect()
}

/// Rebuilds the matrix from basis coefficients, exactly.
pub fn basis_reconstruct(coeffs: &[GaussianRational]) -> CliffordElement {
    assert_eq!(coeffs.len(), 16, "sixteen basis coefficients expected");
    let mut out = CliffordElement::zero();
    for ((_, b), &c) in basis_elements().iter().zip(coeffs) {
        out = out.add(&b.scale(c));
    }
    out
}

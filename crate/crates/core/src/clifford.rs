//! Fiberwise Clifford algebra for Euclidean dimensions 3 and 4.
//!
//! In four dimensions the spinor fiber is `S = S⁺ ⊕ S⁻` with two complex
//! components each, stored as `(s⁺₀, s⁺₁, s⁻₀, s⁻₁)`. Generator `k` acts as
//!
//! ```text
//! e_k = [ 0    -τ_k† ]      τ = (1, iσ₁, iσ₂, iσ₃)
//!       [ τ_k   0    ]
//! ```
//!
//! so every generator exchanges the chiral halves. In three dimensions the
//! fiber has two components and `e_k = iσ_k`. These are the same blocks that
//! appear when the first direction of a 4-torus is treated as time.
//!
//! Real two-forms are stored by their `i<j` coefficients in lexicographic
//! order `(01, 02, 03, 12, 13, 23)`; `e₀∧e₁∧e₂∧e₃` is positively oriented.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// A 2×2 complex matrix, row-major.
pub type M2 = [[C64; 2]; 2];

/// Two complex components of a chiral half-spinor.
pub type Half = [C64; 2];

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Index pairs `(i, j)`, `i < j`, of two-form components in 4d.
pub const PAIRS4: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Pauli matrices.
pub fn pauli(k: usize) -> M2 {
    match k {
        0 => [[ZERO, ONE], [ONE, ZERO]],
        1 => [[ZERO, -I], [I, ZERO]],
        2 => [[ONE, ZERO], [ZERO, -ONE]],
        _ => panic!("Pauli index {k} out of range"),
    }
}

pub fn m2_mul(a: &M2, b: &M2) -> M2 {
    let mut out = [[ZERO; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, o) in row.iter_mut().enumerate() {
            *o = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn m2_adjoint(a: &M2) -> M2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

pub fn m2_scale(a: &M2, s: C64) -> M2 {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

pub fn m2_add(a: &M2, b: &M2) -> M2 {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

#[inline]
pub fn m2_apply(a: &M2, v: &Half) -> Half {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

/// Hermitian inner product `⟨u, v⟩ = Σ u_k conj(v_k)` (linear in the first slot).
#[inline]
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a * b.conj()).sum()
}

#[inline]
pub fn norm_sqr(u: &[C64]) -> f64 {
    u.iter().map(|a| a.norm_sqr()).sum()
}

/// The block `τ_k : S⁺ → S⁻` of generator `k` in four dimensions.
#[inline]
pub fn tau(k: usize) -> M2 {
    match k {
        0 => [[ONE, ZERO], [ZERO, ONE]],
        1..=3 => m2_scale(&pauli(k - 1), I),
        _ => panic!("direction {k} out of range"),
    }
}

/// `e_i e_j` restricted to `S⁺`, i.e. `-τ_i† τ_j`.
pub fn pair_on_plus(i: usize, j: usize) -> M2 {
    m2_scale(&m2_mul(&m2_adjoint(&tau(i)), &tau(j)), -ONE)
}

/// Generator `k` of the three-dimensional representation, `iσ_k`.
#[inline]
pub fn gamma3(k: usize) -> M2 {
    m2_scale(&pauli(k), I)
}

/// Dense square complex matrix used for the full representation.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![ZERO; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        CMatrix { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix { n: self.n, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn adjoint(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out[(i, j)] = self[(j, i)].conj();
            }
        }
        out
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        (0..self.n).map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum()).collect()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// Frobenius distance to `other`.
    pub fn distance(&self, other: &CMatrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

/// Irreducible Clifford representation of Euclidean `R^dim`.
#[derive(Debug, Clone)]
pub struct GammaRep {
    dim: usize,
    generators: Vec<CMatrix>,
    chirality: Option<CMatrix>,
}

impl GammaRep {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Complex dimension of the spinor fiber.
    pub fn fiber_dim(&self) -> usize {
        self.generators[0].size()
    }

    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }

    pub fn generator(&self, k: usize) -> &CMatrix {
        &self.generators[k]
    }

    /// Grading operator, `+1` on `S⁺` and `-1` on `S⁻` (4d only).
    pub fn chirality(&self) -> Option<&CMatrix> {
        self.chirality.as_ref()
    }
}

/// Builds the canonical representation for `dim ∈ {3, 4}`.
pub fn build_gamma_rep(dim: usize) -> Result<GammaRep> {
    match dim {
        4 => {
            let generators = (0..4)
                .map(|k| {
                    let t = tau(k);
                    let td = m2_adjoint(&t);
                    let mut m = CMatrix::zeros(4);
                    for i in 0..2 {
                        for j in 0..2 {
                            m[(i, j + 2)] = -td[i][j];
                            m[(i + 2, j)] = t[i][j];
                        }
                    }
                    m
                })
                .collect();
            let mut chi = CMatrix::zeros(4);
            chi[(0, 0)] = ONE;
            chi[(1, 1)] = ONE;
            chi[(2, 2)] = -ONE;
            chi[(3, 3)] = -ONE;
            Ok(GammaRep { dim, generators, chirality: Some(chi) })
        }
        3 => {
            let generators = (0..3)
                .map(|k| {
                    let g = gamma3(k);
                    let mut m = CMatrix::zeros(2);
                    for i in 0..2 {
                        for j in 0..2 {
                            m[(i, j)] = g[i][j];
                        }
                    }
                    m
                })
                .collect();
            Ok(GammaRep { dim, generators, chirality: None })
        }
        other => Err(Error::UnsupportedDimension(other)),
    }
}

/// A four-dimensional spinor split by chirality.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpinorFiber {
    pub plus: Half,
    pub minus: Half,
}

impl SpinorFiber {
    pub fn new(plus: Half, minus: Half) -> Self {
        Self { plus, minus }
    }

    pub fn to_vec(&self) -> Vec<C64> {
        vec![self.plus[0], self.plus[1], self.minus[0], self.minus[1]]
    }

    pub fn from_slice(v: &[C64]) -> Result<Self> {
        if v.len() != 4 {
            return Err(Error::DimensionMismatch { expected: 4, found: v.len() });
        }
        Ok(Self { plus: [v[0], v[1]], minus: [v[2], v[3]] })
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.plus) + norm_sqr(&self.minus)
    }

    pub fn inner(&self, other: &SpinorFiber) -> C64 {
        inner(&self.plus, &other.plus) + inner(&self.minus, &other.minus)
    }
}

/// Clifford multiplication `v · s` for a real vector `v` and a fiber vector `s`.
pub fn clifford_mul(rep: &GammaRep, v: &[f64], s: &[C64]) -> Result<Vec<C64>> {
    if v.len() != rep.dim {
        return Err(Error::DimensionMismatch { expected: rep.dim, found: v.len() });
    }
    if s.len() != rep.fiber_dim() {
        return Err(Error::DimensionMismatch { expected: rep.fiber_dim(), found: s.len() });
    }
    let mut out = vec![ZERO; s.len()];
    for (g, &vk) in rep.generators.iter().zip(v) {
        if vk == 0.0 {
            continue;
        }
        for (o, x) in out.iter_mut().zip(g.apply(s)) {
            *o += x * vk;
        }
    }
    Ok(out)
}

/// Action `Σ_{i<j} w_ij e_i e_j` of a real two-form on `S⁺` (4d).
pub fn two_form_matrix(w: &[f64; 6]) -> M2 {
    let mut m = [[ZERO; 2]; 2];
    for (c, &(i, j)) in PAIRS4.iter().enumerate() {
        if w[c] != 0.0 {
            m = m2_add(&m, &m2_scale(&pair_on_plus(i, j), C64::new(w[c], 0.0)));
        }
    }
    m
}

/// Applies a real two-form to an `S⁺` vector. Anti-self-dual forms act as zero.
pub fn two_form_action(rep: &GammaRep, w: &[f64; 6], s: &Half) -> Result<Half> {
    if rep.dim != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: rep.dim });
    }
    Ok(m2_apply(&two_form_matrix(w), s))
}

/// The spinor quadratic form `q_ij = Im⟨e_i e_j ψ, ψ⟩ / 4`, `i<j`.
///
/// `⟨e_i e_j ψ, ψ⟩` is purely imaginary, so the real coefficient stored here is its
/// imaginary part. The result is self-dual.
#[inline]
pub fn quadratic_form(psi: &Half) -> [f64; 6] {
    // With the chiral blocks above, e_i e_j on S⁺ reduces to ∓iσ_k; the Bloch
    // components b_k = ψ†σ_k ψ give every coefficient directly.
    let b = bloch(psi);
    let q1 = -0.25 * b[0];
    let q2 = -0.25 * b[1];
    let q3 = -0.25 * b[2];
    // (01, 02, 03, 12, 13, 23) with e01 = e23 = -iσ₁, e02 = -iσ₂ = -e13, e03 = e12 = -iσ₃
    [q1, q2, q3, q3, -q2, q1]
}

/// `ψ†σ_k ψ` for `k = 0, 1, 2`.
#[inline]
pub fn bloch(psi: &Half) -> [f64; 3] {
    let cross = psi[0].conj() * psi[1];
    [2.0 * cross.re, 2.0 * cross.im, psi[0].norm_sqr() - psi[1].norm_sqr()]
}

/// Reference value of [`quadratic_form`] computed through the pairing matrices.
pub fn quadratic_form_reference(psi: &Half) -> [f64; 6] {
    let mut q = [0.0; 6];
    for (c, &(i, j)) in PAIRS4.iter().enumerate() {
        let v = m2_apply(&pair_on_plus(i, j), psi);
        q[c] = 0.25 * inner(&v, psi).im;
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_half(rng: &mut ChaCha8Rng) -> Half {
        [C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))]
    }

    #[test]
    fn generators_square_to_minus_one() {
        for dim in [3, 4] {
            let rep = build_gamma_rep(dim).unwrap();
            let id = CMatrix::identity(rep.fiber_dim());
            for i in 0..dim {
                for j in 0..dim {
                    let ei = rep.generator(i);
                    let ej = rep.generator(j);
                    let anti = ei.mul(ej).add(&ej.mul(ei));
                    let expected = if i == j { id.scale(C64::new(-2.0, 0.0)) } else { CMatrix::zeros(rep.fiber_dim()) };
                    assert_eq!(anti, expected, "dim {dim} pair ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn generators_are_skew_adjoint_and_odd() {
        let rep = build_gamma_rep(4).unwrap();
        let chi = rep.chirality().unwrap();
        for g in rep.generators() {
            assert_eq!(g.adjoint(), g.scale(-ONE));
            // odd: anticommutes with the grading
            assert_eq!(chi.mul(g).add(&g.mul(chi)).max_abs(), 0.0);
        }
        // grading is the volume element up to sign
        let vol = rep.generator(0).mul(rep.generator(1)).mul(rep.generator(2)).mul(rep.generator(3));
        assert!(vol.distance(chi) < 1e-15 || vol.distance(&chi.scale(-ONE)) < 1e-15);
    }

    #[test]
    fn unsupported_dimension() {
        assert!(matches!(build_gamma_rep(5), Err(Error::UnsupportedDimension(5))));
    }

    #[test]
    fn clifford_mul_squares() {
        let rep = build_gamma_rep(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s: Vec<C64> = (0..4).map(|_| C64::new(rng.gen(), rng.gen())).collect();
        assert!(clifford_mul(&rep, &[0.0; 4], &s).unwrap().iter().all(|z| *z == ZERO));
        let e1 = [1.0, 0.0, 0.0, 0.0];
        let once = clifford_mul(&rep, &e1, &s).unwrap();
        let twice = clifford_mul(&rep, &e1, &once).unwrap();
        for (a, b) in twice.iter().zip(&s) {
            assert_eq!(*a, -*b);
        }
        let v: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let vv: f64 = v.iter().map(|x| x * x).sum();
        let w = clifford_mul(&rep, &v, &clifford_mul(&rep, &v, &s).unwrap()).unwrap();
        for (a, b) in w.iter().zip(&s) {
            assert!((a + b * vv).norm() < 1e-14);
        }
        // skew-adjointness: ⟨v·s, s⟩ + conj = 0
        let vs = clifford_mul(&rep, &v, &s).unwrap();
        assert!(inner(&vs, &s).re.abs() < 1e-14);
        assert!(clifford_mul(&rep, &[1.0; 3], &s).is_err());
    }

    #[test]
    fn quadratic_form_matches_pairing_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let psi = random_half(&mut rng);
            let a = quadratic_form(&psi);
            let b = quadratic_form_reference(&psi);
            for c in 0..6 {
                assert!((a[c] - b[c]).abs() < 1e-15);
            }
        }
        assert_eq!(quadratic_form(&[ZERO; 2]), [0.0; 6]);
    }

    #[test]
    fn quadratic_form_phase_invariant() {
        let psi = [C64::new(0.3, -0.7), C64::new(1.1, 0.2)];
        let ph = C64::from_polar(1.0, 0.83);
        let a = quadratic_form(&psi);
        let b = quadratic_form(&[psi[0] * ph, psi[1] * ph]);
        for c in 0..6 {
            assert!((a[c] - b[c]).abs() < 1e-15);
        }
    }

    #[test]
    fn anti_self_dual_forms_act_trivially() {
        let rep = build_gamma_rep(4).unwrap();
        let asd = [[1.0, 0.0, 0.0, 0.0, 0.0, -1.0], [0.0, 1.0, 0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 1.0, -1.0, 0.0, 0.0]];
        let s = [C64::new(0.4, 0.1), C64::new(-0.2, 0.9)];
        for w in asd {
            let r = two_form_action(&rep, &w, &s).unwrap();
            assert!(norm_sqr(&r) == 0.0);
        }
        assert_eq!(two_form_action(&rep, &[0.0; 6], &s).unwrap(), [ZERO; 2]);
    }
}

//! Exact calculators for the topological formulas: moduli dimension, indices,
//! basic-class enumeration, genus and curvature bounds, and counting rules.
//!
//! Classes are handled through `c₁(L²)` so the search lattice stays integral;
//! squares are divided by 4 at the end.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// Exact rational.
pub type Rational = Ratio<i128>;

fn rat(n: i64) -> Rational {
    Rational::from_integer(n as i128)
}

/// Largest box searched by [`basic_class_candidates`].
pub const MAX_SEARCH_BOX: u128 = 50_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourManifoldData {
    pub chi: i64,
    pub sigma: i64,
    pub b2plus: i64,
    /// Intersection form on `H²/torsion`; may be empty when only χ, σ are known.
    #[serde(default)]
    pub q: Vec<Vec<i64>>,
    #[serde(default)]
    pub b1: Option<i64>,
}

impl FourManifoldData {
    /// Data without an intersection form.
    pub fn numeric(chi: i64, sigma: i64, b2plus: i64) -> Self {
        Self { chi, sigma, b2plus, q: Vec::new(), b1: None }
    }

    pub fn rank(&self) -> usize {
        self.q.len()
    }

    /// Checks symmetry of `Q`, `σ(Q) = σ`, `b²⁺(Q) = b2plus` and `χ = 2 − 2b₁ + rank Q`.
    pub fn validate(&self) -> Result<()> {
        if self.q.is_empty() {
            return Ok(());
        }
        check_symmetric(&self.q)?;
        let (pos, neg, zero) = inertia(&self.q);
        if zero > 0 {
            return Err(Error::DegenerateForm);
        }
        if pos as i64 - neg as i64 != self.sigma {
            return Err(Error::InvalidParameter(format!("signature of Q is {}, data says {}", pos as i64 - neg as i64, self.sigma)));
        }
        if pos as i64 != self.b2plus {
            return Err(Error::InvalidParameter(format!("b2+ of Q is {pos}, data says {}", self.b2plus)));
        }
        if let Some(b1) = self.b1 {
            if self.chi != 2 - 2 * b1 + self.rank() as i64 {
                return Err(Error::InvalidParameter("chi != 2 - 2 b1 + rank Q".into()));
            }
        }
        Ok(())
    }

    /// `Q(x, y)`
    pub fn pair(&self, x: &[i64], y: &[i64]) -> Result<i128> {
        if x.len() != self.rank() || y.len() != self.rank() {
            return Err(Error::DimensionMismatch { expected: self.rank(), found: x.len().max(y.len()) });
        }
        Ok(quad(&self.q, x, y))
    }
}

fn quad(q: &[Vec<i64>], x: &[i64], y: &[i64]) -> i128 {
    let mut s = 0i128;
    for (i, row) in q.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            s += v as i128 * x[i] as i128 * y[j] as i128;
        }
    }
    s
}

fn check_symmetric(q: &[Vec<i64>]) -> Result<()> {
    let n = q.len();
    if q.iter().any(|r| r.len() != n) {
        return Err(Error::ShapeMismatch("intersection form must be square".into()));
    }
    for i in 0..n {
        for j in 0..i {
            if q[i][j] != q[j][i] {
                return Err(Error::InvalidParameter("intersection form must be symmetric".into()));
            }
        }
    }
    Ok(())
}

/// Determinant by fraction-free (Bareiss) elimination.
pub fn determinant(q: &[Vec<i64>]) -> i128 {
    let n = q.len();
    if n == 0 {
        return 1;
    }
    let mut m: Vec<Vec<i128>> = q.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            match (k + 1..n).find(|&i| m[i][k] != 0) {
                Some(i) => {
                    m.swap(i, k);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}

/// `(positive, negative, zero)` counts of a symmetric form, by rational
/// congruence diagonalization.
pub fn inertia(q: &[Vec<i64>]) -> (usize, usize, usize) {
    let n = q.len();
    let mut m: Vec<Vec<Rational>> = q.iter().map(|r| r.iter().map(|&v| rat(v)).collect()).collect();
    let (mut pos, mut neg) = (0, 0);
    let zero = Rational::from_integer(0);
    let mut active: Vec<usize> = (0..n).collect();
    while let Some(&first) = active.first() {
        // choose a nonzero diagonal pivot, or create one from an off-diagonal entry
        let pivot = active.iter().copied().find(|&i| m[i][i] != zero);
        let p = match pivot {
            Some(p) => p,
            None => {
                let found = active.iter().flat_map(|&i| active.iter().map(move |&j| (i, j))).find(|&(i, j)| i != j && m[i][j] != zero);
                match found {
                    None => break,
                    Some((i, j)) => {
                        // e_i ← e_i + e_j makes m[i][i] = 2 m[i][j] ≠ 0
                        for k in 0..n {
                            let v = m[j][k];
                            m[i][k] += v;
                        }
                        for k in 0..n {
                            let v = m[k][j];
                            m[k][i] += v;
                        }
                        i
                    }
                }
            }
        };
        let d = m[p][p];
        if d > zero {
            pos += 1;
        } else {
            neg += 1;
        }
        for &i in &active {
            if i == p {
                continue;
            }
            let f = m[i][p] / d;
            if f == zero {
                continue;
            }
            for k in 0..n {
                let v = m[p][k];
                m[i][k] -= f * v;
            }
            for k in 0..n {
                let v = m[k][p];
                m[k][i] -= f * v;
            }
        }
        active.retain(|&i| i != p);
        let _ = first;
    }
    (pos, neg, n - pos - neg)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinCClass {
    /// Coefficients of `c₁(L²)` in the basis of `Q`.
    pub c1_l2: Vec<i64>,
}

impl SpinCClass {
    /// `c₁(L)² = Q(c₁(L²), c₁(L²)) / 4`
    pub fn c1_l_squared(&self, md: &FourManifoldData) -> Result<Rational> {
        Ok(Rational::new(md.pair(&self.c1_l2, &self.c1_l2)?, 4))
    }
}

/// Dimension together with its index decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DimensionReport {
    pub dimension: Rational,
    pub dirac_index: Rational,
    pub asd_index: Rational,
}

/// `Ind D_A = c₁(L)² − σ/4`
pub fn dirac_index(c1_sq: Rational, md: &FourManifoldData) -> Rational {
    c1_sq - Rational::new(md.sigma as i128, 4)
}

/// `(χ + σ)/2`, minus the index of `d* + d⁺`.
pub fn asd_index(md: &FourManifoldData) -> Rational {
    Rational::new((md.chi + md.sigma) as i128, 2)
}

/// `c₁(L)² − (2χ + 3σ)/4` for a given value of `c₁(L)²`.
pub fn sw_dimension_from_square(md: &FourManifoldData, c1_sq: Rational) -> DimensionReport {
    DimensionReport {
        dimension: c1_sq - Rational::new((2 * md.chi + 3 * md.sigma) as i128, 4),
        dirac_index: dirac_index(c1_sq, md),
        asd_index: asd_index(md),
    }
}

pub fn sw_dimension(md: &FourManifoldData, s: &SpinCClass) -> Result<DimensionReport> {
    Ok(sw_dimension_from_square(md, s.c1_l_squared(md)?))
}

/// All `x` in `[−bound, bound]^rank` with `Q(x, x) = 2χ + 3σ`, lexicographic order.
pub fn basic_class_candidates(md: &FourManifoldData, bound: i64) -> Result<Vec<SpinCClass>> {
    if md.q.is_empty() {
        return Err(Error::DegenerateForm);
    }
    check_symmetric(&md.q)?;
    if determinant(&md.q) == 0 {
        return Err(Error::DegenerateForm);
    }
    if bound < 0 {
        return Err(Error::InvalidParameter("bound must be non-negative".into()));
    }
    let r = md.rank();
    let width = (2 * bound + 1) as u128;
    let total = width.checked_pow(r as u32).filter(|&t| t <= MAX_SEARCH_BOX);
    let Some(total) = total else {
        return Err(Error::InvalidParameter(format!("search box ({width})^{r} exceeds {MAX_SEARCH_BOX}")));
    };
    let target = (2 * md.chi + 3 * md.sigma) as i128;
    // partition the box by its leading coordinate; concatenation keeps the order
    let per_slice = (total / width) as usize;
    let slices: Vec<Vec<SpinCClass>> = par::map_collect(width as usize, |lead| {
        let mut out = Vec::new();
        let mut x = vec![-bound; r];
        x[0] = lead as i64 - bound;
        for idx in 0..per_slice {
            let mut rem = idx;
            for k in (1..r).rev() {
                x[k] = (rem % width as usize) as i64 - bound;
                rem /= width as usize;
            }
            if quad(&md.q, &x, &x) == target {
                out.push(SpinCClass { c1_l2: x.clone() });
            }
        }
        out
    });
    Ok(slices.into_iter().flatten().collect())
}

/// Lower bound `(d−1)(d−2)/2` on the genus of a surface representing `d·H` in `CP²`.
pub fn thom_genus_bound(d: i64) -> Result<i64> {
    if d < 1 {
        return Err(Error::InvalidParameter("degree must be at least 1".into()));
    }
    Ok((d - 1) * (d - 2) / 2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureEstimate {
    /// `|F_A| ≤ 2π(2g − 2)`
    pub curvature: f64,
    /// `|ψ|² ≤ 4π(2g − 2)`
    pub psi_sq: f64,
}

pub fn curvature_estimate_bound(g: i64) -> Result<CurvatureEstimate> {
    if g < 1 {
        return Err(Error::InvalidParameter("genus must be at least 1".into()));
    }
    let k = (2 * g - 2) as f64;
    Ok(CurvatureEstimate { curvature: 2.0 * std::f64::consts::PI * k, psi_sq: 4.0 * std::f64::consts::PI * k })
}

/// `−c₁(K)·A + A²`
pub fn gromov_dimension(c1k_dot_a: i64, a_sq: i64) -> i64 {
    -c1k_dot_a + a_sq
}

/// `(4N−2)c₂ − (N²−1)/2 (χ+σ) − δσ/4`
pub fn nonabelian_dimension(n: i64, c2: i64, chi: i64, sigma: i64, delta: i64) -> Result<Rational> {
    if n < 2 {
        return Err(Error::InvalidParameter("rank N must be at least 2".into()));
    }
    Ok(rat((4 * n - 2) * c2) - Rational::new(((n * n - 1) * (chi + sigma)) as i128, 2) - Rational::new((delta * sigma) as i128, 4))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectedSumVerdict {
    Vanishes,
    NoConclusion,
}

/// Vanishing of the invariants of `X₁ # X₂` when both summands have `b²⁺ ≥ 1`.
pub fn connected_sum_invariant(b2plus_1: i64, b2plus_2: i64) -> ConnectedSumVerdict {
    if b2plus_1 >= 1 && b2plus_2 >= 1 {
        ConnectedSumVerdict::Vanishes
    } else {
        ConnectedSumVerdict::NoConclusion
    }
}

/// `(χ, σ, b²⁺)` of a connected sum.
pub fn connected_sum_data(x: &FourManifoldData, y: &FourManifoldData) -> FourManifoldData {
    FourManifoldData::numeric(x.chi + y.chi - 2, x.sigma + y.sigma, x.b2plus + y.b2plus)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum CountingRule {
    /// Empty moduli for generic data, or odd dimension.
    Zero,
    /// `Σ ε_p` over the finitely many points.
    SignedCount,
    /// `∫_M c₁(𝓛)^{d/2}`.
    Pairing { degree: i64 },
    /// Non-integral dimension: the class is not characteristic.
    NotIntegral,
}

pub fn invariant_counting_rules(dim: Rational) -> CountingRule {
    if !dim.is_integer() {
        return CountingRule::NotIntegral;
    }
    let d = dim.to_integer();
    if d < 0 || d % 2 != 0 {
        CountingRule::Zero
    } else if d == 0 {
        CountingRule::SignedCount
    } else {
        CountingRule::Pairing { degree: (d / 2) as i64 }
    }
}

/// `(χ, σ, c₁(K)²)` for `CP² # n CP²-bar` with `K = −3H + ΣE_i`.
pub fn blowup_canonical_data(n: i64) -> (FourManifoldData, Rational) {
    let md = FourManifoldData::numeric(3 + n, 1 - n, 1);
    // c₁(L²) = K, so c₁(L)² = K²/4
    (md, Rational::new((9 - n) as i128, 4))
}

pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.to_integer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

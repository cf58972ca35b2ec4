//! Periodic cubical lattices on flat tori and their cochain calculus.
//!
//! A `k`-cochain stores one real coefficient per site and per increasing index
//! set `I` of size `k`, laid out site-major with index sets in lexicographic
//! order. Coefficients are the components of the discrete form in the
//! orthonormal coordinate frame; inner products carry the cell volume.
//!
//! `d` is the forward-difference coboundary; `d_star` is its exact adjoint for
//! the weighted inner product. The cup product is the cubical one:
//! `(α ∪ β)_{I⊔J}(x) = ε(I,J) α_I(x) β_J(x + e_I)`, which satisfies the graded
//! Leibniz rule exactly.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// Sign of the permutation that sorts the concatenation `(a, b)` of two disjoint
/// increasing index lists, encoded as bit masks.
pub fn shuffle_sign(a: u32, b: u32) -> f64 {
    // count pairs (i in a, j in b) with i > j
    let mut inversions = 0;
    let mut bits = a;
    while bits != 0 {
        let i = bits.trailing_zeros();
        inversions += (b & ((1u32 << i) - 1)).count_ones();
        bits &= bits - 1;
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// A periodic `N₁×…×N_d` grid with per-direction spacings.
#[derive(Debug, Clone)]
pub struct TorusLattice {
    dim: usize,
    sizes: Vec<usize>,
    spacings: Vec<f64>,
    strides: Vec<usize>,
    n_sites: usize,
    fwd: Vec<u32>,
    bwd: Vec<u32>,
    /// `comps[k]` lists the index masks of degree `k` in lexicographic order.
    comps: Vec<Vec<u32>>,
    /// position of a mask inside `comps[popcount]`
    comp_index: Vec<usize>,
}

impl TorusLattice {
    pub fn new(sizes: &[usize], spacings: &[f64]) -> Result<Self> {
        let dim = sizes.len();
        if dim != 3 && dim != 4 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if spacings.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: spacings.len() });
        }
        if let Some(n) = sizes.iter().find(|&&n| n < 4) {
            return Err(Error::InvalidLattice(format!("every direction needs at least 4 sites, got {n}")));
        }
        if spacings.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::InvalidLattice("spacings must be positive and finite".into()));
        }
        let n_sites: usize = sizes.iter().product();
        if n_sites > u32::MAX as usize {
            return Err(Error::InvalidLattice("too many sites".into()));
        }
        let mut strides = vec![1; dim];
        for mu in (0..dim - 1).rev() {
            strides[mu] = strides[mu + 1] * sizes[mu + 1];
        }
        let mut fwd = vec![0u32; n_sites * dim];
        let mut bwd = vec![0u32; n_sites * dim];
        for s in 0..n_sites {
            for mu in 0..dim {
                let n = (s / strides[mu]) % sizes[mu];
                let base = s - n * strides[mu];
                fwd[mu * n_sites + s] = (base + ((n + 1) % sizes[mu]) * strides[mu]) as u32;
                bwd[mu * n_sites + s] = (base + ((n + sizes[mu] - 1) % sizes[mu]) * strides[mu]) as u32;
            }
        }
        let mut comps = vec![Vec::new(); dim + 1];
        let mut comp_index = vec![0; 1 << dim];
        for k in 0..=dim {
            // lexicographic order of increasing index tuples
            let mut masks: Vec<u32> = (0u32..(1 << dim)).filter(|m| m.count_ones() as usize == k).collect();
            masks.sort_by_key(|m| {
                let mut idx: Vec<u32> = (0..dim as u32).filter(|i| m & (1 << i) != 0).collect();
                idx.resize(dim, u32::MAX);
                idx
            });
            for (pos, &m) in masks.iter().enumerate() {
                comp_index[m as usize] = pos;
            }
            comps[k] = masks;
        }
        Ok(Self { dim, sizes: sizes.to_vec(), spacings: spacings.to_vec(), strides, n_sites, fwd, bwd, comps, comp_index })
    }

    /// Hypercubic lattice with `n` sites and spacing `a` in every direction.
    pub fn cubic(dim: usize, n: usize, a: f64) -> Result<Self> {
        Self::new(&vec![n; dim], &vec![a; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }
    pub fn spacings(&self) -> &[f64] {
        &self.spacings
    }
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }
    /// Side length `N_μ a_μ`.
    pub fn extent(&self, mu: usize) -> f64 {
        self.sizes[mu] as f64 * self.spacings[mu]
    }
    pub fn cell_volume(&self) -> f64 {
        self.spacings.iter().product()
    }
    pub fn volume(&self) -> f64 {
        self.cell_volume() * self.n_sites as f64
    }

    #[inline]
    pub fn fwd(&self, s: usize, mu: usize) -> usize {
        self.fwd[mu * self.n_sites + s] as usize
    }
    #[inline]
    pub fn bwd(&self, s: usize, mu: usize) -> usize {
        self.bwd[mu * self.n_sites + s] as usize
    }
    /// Coordinate index `n_μ` of a site.
    #[inline]
    pub fn coord(&self, s: usize, mu: usize) -> usize {
        (s / self.strides[mu]) % self.sizes[mu]
    }
    pub fn coords(&self, s: usize) -> Vec<usize> {
        (0..self.dim).map(|mu| self.coord(s, mu)).collect()
    }
    pub fn site(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.strides).zip(&self.sizes).map(|((c, st), n)| (c % n) * st).sum()
    }
    /// Physical position `n_μ a_μ` along `μ`.
    #[inline]
    pub fn position(&self, s: usize, mu: usize) -> f64 {
        self.coord(s, mu) as f64 * self.spacings[mu]
    }
    /// `s + e_J` for every direction in mask `J`.
    #[inline]
    pub fn fwd_mask(&self, mut s: usize, mask: u32) -> usize {
        let mut m = mask;
        while m != 0 {
            s = self.fwd(s, m.trailing_zeros() as usize);
            m &= m - 1;
        }
        s
    }
    #[inline]
    pub fn bwd_mask(&self, mut s: usize, mask: u32) -> usize {
        let mut m = mask;
        while m != 0 {
            s = self.bwd(s, m.trailing_zeros() as usize);
            m &= m - 1;
        }
        s
    }

    /// Number of components of a `k`-form.
    pub fn n_comps(&self, k: usize) -> usize {
        binomial(self.dim, k)
    }
    /// Index masks of degree `k`, lexicographic.
    pub fn comp_masks(&self, k: usize) -> &[u32] {
        &self.comps[k]
    }
    /// Component slot of a mask within its degree.
    #[inline]
    pub fn comp_of(&self, mask: u32) -> usize {
        self.comp_index[mask as usize]
    }
    /// Component slot of the pair `(u, v)`, `u < v`.
    pub fn pair_index(&self, u: usize, v: usize) -> usize {
        self.comp_of((1 << u) | (1 << v))
    }
    fn full_mask(&self) -> u32 {
        (1u32 << self.dim) - 1
    }

    /// The zero `k`-cochain.
    pub fn zeros(&self, k: usize) -> Cochain {
        Cochain { degree: k, values: vec![0.0; self.n_sites * self.n_comps(k)] }
    }

    fn check(&self, c: &Cochain) -> Result<()> {
        if c.degree > self.dim {
            return Err(Error::DegreeOutOfRange { degree: c.degree, dim: self.dim });
        }
        let expected = self.n_sites * self.n_comps(c.degree);
        if c.values.len() != expected {
            return Err(Error::ShapeMismatch(format!("{}-cochain has {} values, expected {expected}", c.degree, c.values.len())));
        }
        Ok(())
    }
}

/// Real `k`-cochain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cochain {
    pub degree: usize,
    pub values: Vec<f64>,
}

impl Cochain {
    pub fn new(lat: &TorusLattice, degree: usize, values: Vec<f64>) -> Result<Self> {
        let c = Cochain { degree, values };
        lat.check(&c)?;
        Ok(c)
    }

    /// Cochain with every component at every site given by `f(site, comp)`.
    pub fn from_fn(lat: &TorusLattice, degree: usize, f: impl Fn(usize, usize) -> f64 + Sync + Send) -> Self {
        let nc = lat.n_comps(degree);
        Cochain { degree, values: par::map_collect(lat.n_sites() * nc, |i| f(i / nc, i % nc)) }
    }

    #[inline]
    pub fn get(&self, nc: usize, s: usize, c: usize) -> f64 {
        self.values[s * nc + c]
    }

    pub fn add(&self, other: &Cochain) -> Cochain {
        debug_assert_eq!(self.degree, other.degree);
        Cochain { degree: self.degree, values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Cochain) -> Cochain {
        debug_assert_eq!(self.degree, other.degree);
        Cochain { degree: self.degree, values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, s: f64) -> Cochain {
        Cochain { degree: self.degree, values: self.values.iter().map(|a| a * s).collect() }
    }

    /// `self + s·other`
    pub fn axpy(&self, s: f64, other: &Cochain) -> Cochain {
        Cochain { degree: self.degree, values: self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Weighted inner product `Σ_cells vol · ⟨a, b⟩`.
pub fn inner(lat: &TorusLattice, a: &Cochain, b: &Cochain) -> f64 {
    assert_eq!(a.values.len(), b.values.len());
    let nc = lat.n_comps(a.degree).max(1);
    lat.cell_volume() * par::sum(lat.n_sites(), |s| (0..nc).map(|c| a.values[s * nc + c] * b.values[s * nc + c]).sum::<f64>())
}

pub fn norm(lat: &TorusLattice, a: &Cochain) -> f64 {
    inner(lat, a, a).sqrt()
}

/// Forward-difference exterior derivative.
pub fn d(lat: &TorusLattice, c: &Cochain) -> Result<Cochain> {
    lat.check(c)?;
    let k = c.degree;
    if k >= lat.dim() {
        return Err(Error::DegreeOutOfRange { degree: k, dim: lat.dim() });
    }
    let nc_in = lat.n_comps(k);
    let nc_out = lat.n_comps(k + 1);
    let masks = lat.comp_masks(k + 1);
    let values = par::map_collect(lat.n_sites() * nc_out, |i| {
        let (s, j) = (i / nc_out, i % nc_out);
        let jm = masks[j];
        let mut acc = 0.0;
        let mut bits = jm;
        while bits != 0 {
            let mu = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let rest = jm & !(1 << mu);
            let sign = shuffle_sign(1 << mu, rest);
            let ci = lat.comp_of(rest);
            let diff = c.values[lat.fwd(s, mu) * nc_in + ci] - c.values[s * nc_in + ci];
            acc += sign * diff / lat.spacings()[mu];
        }
        acc
    });
    Ok(Cochain { degree: k + 1, values })
}

/// Adjoint of [`d`] for the weighted inner product (backward differences).
pub fn d_star(lat: &TorusLattice, c: &Cochain) -> Result<Cochain> {
    lat.check(c)?;
    let k = c.degree;
    if k == 0 {
        return Err(Error::DegreeOutOfRange { degree: 0, dim: lat.dim() });
    }
    let nc_in = lat.n_comps(k);
    let nc_out = lat.n_comps(k - 1);
    let masks = lat.comp_masks(k - 1);
    let full = lat.full_mask();
    let values = par::map_collect(lat.n_sites() * nc_out, |i| {
        let (s, j) = (i / nc_out, i % nc_out);
        let im = masks[j];
        let mut acc = 0.0;
        let mut bits = full & !im;
        while bits != 0 {
            let mu = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let jm = im | (1 << mu);
            let sign = shuffle_sign(1 << mu, im);
            let cj = lat.comp_of(jm);
            let diff = c.values[lat.bwd(s, mu) * nc_in + cj] - c.values[s * nc_in + cj];
            acc += sign * diff / lat.spacings()[mu];
        }
        acc
    });
    Ok(Cochain { degree: k - 1, values })
}

/// Pointwise Hodge star: `(*c)_J = ε(I, J) c_I` with `J` the complement of `I`.
pub fn hodge_star(lat: &TorusLattice, c: &Cochain) -> Result<Cochain> {
    lat.check(c)?;
    let k = c.degree;
    let nk = lat.n_comps(k);
    let out_deg = lat.dim() - k;
    let out_masks = lat.comp_masks(out_deg).to_vec();
    let full = lat.full_mask();
    let table: Vec<(usize, f64)> = out_masks
        .iter()
        .map(|&jm| {
            let im = full & !jm;
            (lat.comp_of(im), shuffle_sign(im, jm))
        })
        .collect();
    let values = par::map_collect(lat.n_sites() * nk, |i| {
        let (s, j) = (i / nk, i % nk);
        let (ci, sign) = table[j];
        sign * c.values[s * nk + ci]
    });
    Ok(Cochain { degree: out_deg, values })
}

/// Projection `(1 + *)/2` onto self-dual 2-cochains (4d only).
pub fn selfdual_project(lat: &TorusLattice, c: &Cochain) -> Result<Cochain> {
    if lat.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: lat.dim() });
    }
    if c.degree != 2 {
        return Err(Error::DegreeOutOfRange { degree: c.degree, dim: 4 });
    }
    lat.check(c)?;
    Ok(Cochain { degree: 2, values: c.values.chunks_exact(6).flat_map(selfdual_components).collect() })
}

/// Self-dual part of a single 4d two-form in `(01, 02, 03, 12, 13, 23)` order.
#[inline]
pub fn selfdual_components(w: &[f64]) -> [f64; 6] {
    let a = 0.5 * (w[0] + w[5]);
    let b = 0.5 * (w[1] - w[4]);
    let c = 0.5 * (w[2] + w[3]);
    [a, b, c, c, -b, a]
}

/// Cubical cup product.
pub fn cup(lat: &TorusLattice, a: &Cochain, b: &Cochain) -> Result<Cochain> {
    lat.check(a)?;
    lat.check(b)?;
    let k = a.degree + b.degree;
    if k > lat.dim() {
        return Err(Error::DegreeOutOfRange { degree: k, dim: lat.dim() });
    }
    let (na, nb, nk) = (lat.n_comps(a.degree), lat.n_comps(b.degree), lat.n_comps(k));
    let out_masks = lat.comp_masks(k);
    let a_masks = lat.comp_masks(a.degree);
    let values = par::map_collect(lat.n_sites() * nk, |i| {
        let (s, j) = (i / nk, i % nk);
        let km = out_masks[j];
        let mut acc = 0.0;
        for &im in a_masks {
            if im & !km != 0 {
                continue;
            }
            let jm = km & !im;
            let sign = shuffle_sign(im, jm);
            acc += sign * a.values[s * na + lat.comp_of(im)] * b.values[lat.fwd_mask(s, im) * nb + lat.comp_of(jm)];
        }
        acc
    });
    Ok(Cochain { degree: k, values })
}

/// Integral of a top-degree cochain.
pub fn integrate(lat: &TorusLattice, top: &Cochain) -> Result<f64> {
    lat.check(top)?;
    if top.degree != lat.dim() {
        return Err(Error::DegreeOutOfRange { degree: top.degree, dim: lat.dim() });
    }
    Ok(lat.cell_volume() * par::sum(lat.n_sites(), |s| top.values[s]))
}

/// Gradient of `α ↦ ∫ α ∪ β` for `α` of complementary degree.
pub fn cup_left_gradient(lat: &TorusLattice, beta: &Cochain) -> Result<Cochain> {
    lat.check(beta)?;
    let k = lat.dim() - beta.degree;
    let (nk, nb) = (lat.n_comps(k), lat.n_comps(beta.degree));
    let full = lat.full_mask();
    let masks = lat.comp_masks(k);
    let values = par::map_collect(lat.n_sites() * nk, |i| {
        let (s, c) = (i / nk, i % nk);
        let im = masks[c];
        let jm = full & !im;
        shuffle_sign(im, jm) * beta.values[lat.fwd_mask(s, im) * nb + lat.comp_of(jm)]
    });
    Ok(Cochain { degree: k, values })
}

/// Gradient of `α ↦ ∫ β ∪ α` for `α` of complementary degree.
pub fn cup_right_gradient(lat: &TorusLattice, beta: &Cochain) -> Result<Cochain> {
    lat.check(beta)?;
    let k = lat.dim() - beta.degree;
    let (nk, nb) = (lat.n_comps(k), lat.n_comps(beta.degree));
    let full = lat.full_mask();
    let masks = lat.comp_masks(k);
    let values = par::map_collect(lat.n_sites() * nk, |i| {
        let (s, c) = (i / nk, i % nk);
        let im = masks[c];
        let jm = full & !im;
        shuffle_sign(jm, im) * beta.values[lat.bwd_mask(s, jm) * nb + lat.comp_of(jm)]
    });
    Ok(Cochain { degree: k, values })
}

/// Sum of `F_uv a_u a_v` over the plaquettes of the `(u, v)` coordinate 2-torus
/// through `base`.
pub fn flux_through(lat: &TorusLattice, f: &Cochain, u: usize, v: usize, base: usize) -> f64 {
    let (u, v) = if u < v { (u, v) } else { (v, u) };
    let nc = lat.n_comps(2);
    let c = lat.pair_index(u, v);
    let area = lat.spacings()[u] * lat.spacings()[v];
    let mut total = 0.0;
    let mut row = base;
    for _ in 0..lat.sizes()[u] {
        let mut s = row;
        for _ in 0..lat.sizes()[v] {
            total += f.values[s * nc + c] * area;
            s = lat.fwd(s, v);
        }
        row = lat.fwd(row, u);
    }
    total
}

/// Constant-curvature background for the connection on `L²`.
///
/// `F_uv = 2π m_uv / (L_u L_v)`, realized by link angles in the gauge
/// `θ_v(x) = 2π m_uv n_u / (N_u N_v)` for `u < v`, plus transition twists
/// `-2π m_uv n_v / N_v` on the links that wrap around direction `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxBackground {
    m: Vec<Vec<i64>>,
    link_angles: Vec<f64>,
    field: Vec<f64>,
}

/// Default bound on `|m_uv|`.
pub const DEFAULT_MAX_FLUX: i64 = 16;

impl FluxBackground {
    pub fn flux(&self) -> &[Vec<i64>] {
        &self.m
    }

    /// Flux integers in upper-triangle lexicographic order.
    pub fn flux_upper(&self) -> Vec<i64> {
        let d = self.m.len();
        let mut out = Vec::new();
        for u in 0..d {
            for v in u + 1..d {
                out.push(self.m[u][v]);
            }
        }
        out
    }

    pub fn is_trivial(&self) -> bool {
        self.m.iter().flatten().all(|&x| x == 0)
    }

    /// Background angle on the link `(s, s + e_μ)` for the `L²` connection,
    /// including transition twists on wrap-around links.
    #[inline]
    pub fn link_angle(&self, dim: usize, s: usize, mu: usize) -> f64 {
        self.link_angles[s * dim + mu]
    }

    /// Constant curvature components `F₀` (one entry per 2-form slot).
    pub fn field(&self) -> &[f64] {
        &self.field
    }

    /// `F₀` as a 2-cochain.
    pub fn field_cochain(&self, lat: &TorusLattice) -> Cochain {
        let f = self.field.clone();
        Cochain::from_fn(lat, 2, move |_, c| f[c])
    }

    /// The background connection as a 1-cochain of form coefficients (angles
    /// divided by spacing). Wrap-around links include the transition twist.
    pub fn connection_cochain(&self, lat: &TorusLattice) -> Cochain {
        let d = lat.dim();
        Cochain::from_fn(lat, 1, |s, mu| self.link_angle(d, s, mu) / lat.spacings()[mu])
    }

    /// Whether the half-charge transition phases satisfy the cocycle condition,
    /// i.e. whether `S⁺ ⊗ L` exists for this `c₁(L²)`: all fluxes even.
    pub fn spinor_twists_consistent(&self) -> bool {
        self.m.iter().flatten().all(|x| x % 2 == 0)
    }

    /// `c₁(L²)` on the `(u, v)` torus: the integer `m_uv`.
    pub fn chern_l2(&self, u: usize, v: usize) -> i64 {
        self.m[u][v]
    }

    /// `c₁(L)` on the `(u, v)` torus: `m_uv / 2`.
    pub fn chern_l(&self, u: usize, v: usize) -> f64 {
        self.m[u][v] as f64 / 2.0
    }
}

/// Builds the flux background for an antisymmetric integer matrix `m`.
pub fn flux_background(lat: &TorusLattice, m: &[Vec<i64>]) -> Result<FluxBackground> {
    flux_background_bounded(lat, m, DEFAULT_MAX_FLUX)
}

pub fn flux_background_bounded(lat: &TorusLattice, m: &[Vec<i64>], max_flux: i64) -> Result<FluxBackground> {
    let d = lat.dim();
    if m.len() != d || m.iter().any(|row| row.len() != d) {
        return Err(Error::ShapeMismatch(format!("flux matrix must be {d}x{d}")));
    }
    for u in 0..d {
        for v in 0..d {
            if m[u][v] != -m[v][u] {
                return Err(Error::NonAntisymmetricFlux);
            }
            if m[u][v].abs() > max_flux {
                return Err(Error::FluxTooLarge { value: m[u][v], max: max_flux });
            }
        }
    }
    let n = lat.n_sites();
    let mut angles = vec![0.0; n * d];
    for u in 0..d {
        for v in u + 1..d {
            let muv = m[u][v];
            if muv == 0 {
                continue;
            }
            let (nu, nv) = (lat.sizes()[u] as f64, lat.sizes()[v] as f64);
            for s in 0..n {
                let cu = lat.coord(s, u) as f64;
                let cv = lat.coord(s, v) as f64;
                angles[s * d + v] += 2.0 * PI * muv as f64 * cu / (nu * nv);
                if lat.coord(s, u) + 1 == lat.sizes()[u] {
                    angles[s * d + u] -= 2.0 * PI * muv as f64 * cv / nv;
                }
            }
        }
    }
    let field = lat
        .comp_masks(2)
        .iter()
        .map(|&mask| {
            let u = mask.trailing_zeros() as usize;
            let v = (mask & !(1 << u)).trailing_zeros() as usize;
            2.0 * PI * m[u][v] as f64 / (lat.extent(u) * lat.extent(v))
        })
        .collect();
    Ok(FluxBackground { m: m.to_vec(), link_angles: angles, field })
}

/// Antisymmetric matrix from upper-triangle entries `(m01, m02, …)`.
pub fn flux_matrix(dim: usize, upper: &[i64]) -> Result<Vec<Vec<i64>>> {
    let expected = dim * (dim - 1) / 2;
    if upper.len() != expected {
        return Err(Error::DimensionMismatch { expected, found: upper.len() });
    }
    let mut m = vec![vec![0; dim]; dim];
    let mut it = upper.iter();
    for u in 0..dim {
        for v in u + 1..dim {
            let x = *it.next().unwrap();
            m[u][v] = x;
            m[v][u] = -x;
        }
    }
    Ok(m)
}

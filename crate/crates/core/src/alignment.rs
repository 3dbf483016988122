//! Alignment measures between Gram matrices, population alignment over
//! finite-support distributions, and the `(a, M)` system shared by the
//! joint weight learners.

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::kernel::{center, frobenius_product, BaseKernelBank, GramMatrix, KernelSpec, Sample};
use crate::linalg;
use crate::{Error, Result};

/// Every alignment between two matrices, with the intermediates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub centered: f64,
    pub uncentered: f64,
    pub unnormalized: f64,
    /// `⟨K_c, K′_c⟩_F`
    pub frobenius_numerator: f64,
    /// `(‖K_c‖_F, ‖K′_c‖_F)`
    pub norms: (f64, f64),
}

/// The ideal target kernel `yyᵀ`.
pub fn target_kernel(y: &[f64]) -> GramMatrix {
    let m = y.len();
    let entries = DMatrix::from_fn(m, m, |i, j| y[i] * y[j]);
    // rank one with a non-negative eigenvalue: PSD by construction
    GramMatrix::symmetric(entries).expect("outer product is symmetric")
}

fn same_dim(k: &GramMatrix, kp: &GramMatrix) -> Result<()> {
    if k.dim() != kp.dim() {
        return Err(Error::DimensionMismatch { expected: k.dim(), found: kp.dim() });
    }
    Ok(())
}

/// `ρ̂(K, K′) = ⟨K_c, K′_c⟩_F / (‖K_c‖_F ‖K′_c‖_F)`.
pub fn centered_alignment(k: &GramMatrix, kp: &GramMatrix) -> Result<f64> {
    same_dim(k, kp)?;
    let (kc, kpc) = (center(k), center(kp));
    let (nk, nkp) = (kc.frobenius_norm(), kpc.frobenius_norm());
    if nk == 0.0 || nkp == 0.0 {
        return Err(Error::degenerate("centered kernel matrix has zero Frobenius norm"));
    }
    Ok(frobenius_product(&kc, &kpc)? / (nk * nkp))
}

/// `Â(K, K′) = ⟨K, K′⟩_F / (‖K‖_F ‖K′‖_F)`.
pub fn uncentered_alignment(k: &GramMatrix, kp: &GramMatrix) -> Result<f64> {
    same_dim(k, kp)?;
    let (nk, nkp) = (k.frobenius_norm(), kp.frobenius_norm());
    if nk == 0.0 || nkp == 0.0 {
        return Err(Error::degenerate("kernel matrix has zero Frobenius norm"));
    }
    Ok(frobenius_product(k, kp)? / (nk * nkp))
}

/// `ρ̂_u(K, K′) = ⟨K_c, K′_c⟩_F / m²`.
pub fn unnormalized_alignment(k: &GramMatrix, kp: &GramMatrix) -> Result<f64> {
    same_dim(k, kp)?;
    let m = k.dim() as f64;
    Ok(frobenius_product(&center(k), &center(kp))? / (m * m))
}

/// All three alignments at once. The centered value is `NaN` when a
/// centered norm vanishes, and likewise for the uncentered value.
pub fn alignment_report(k: &GramMatrix, kp: &GramMatrix) -> Result<AlignmentReport> {
    same_dim(k, kp)?;
    let m = k.dim() as f64;
    let (kc, kpc) = (center(k), center(kp));
    let num = frobenius_product(&kc, &kpc)?;
    let norms = (kc.frobenius_norm(), kpc.frobenius_norm());
    let centered = if norms.0 > 0.0 && norms.1 > 0.0 { num / (norms.0 * norms.1) } else { f64::NAN };
    let uncentered = uncentered_alignment(k, kp).unwrap_or(f64::NAN);
    Ok(AlignmentReport {
        centered,
        uncentered,
        unnormalized: num / (m * m),
        frobenius_numerator: num,
        norms,
    })
}

/// One support point of a [`FiniteDistribution`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub point: Vec<f64>,
    pub label: f64,
    pub mass: f64,
}

/// Joint distribution of `(x, y)` with finite support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Atom>", into = "Vec<Atom>")]
pub struct FiniteDistribution {
    atoms: Vec<Atom>,
}

impl TryFrom<Vec<Atom>> for FiniteDistribution {
    type Error = Error;
    fn try_from(atoms: Vec<Atom>) -> Result<Self> {
        FiniteDistribution::new(atoms)
    }
}

impl From<FiniteDistribution> for Vec<Atom> {
    fn from(d: FiniteDistribution) -> Self {
        d.atoms
    }
}

impl FiniteDistribution {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::invalid("distribution needs at least one atom"));
        }
        let d = atoms[0].point.len();
        for (i, a) in atoms.iter().enumerate() {
            if a.point.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: a.point.len() });
            }
            if !(a.mass >= 0.0) || !a.mass.is_finite() {
                return Err(Error::invalid(format!("atom {i} has invalid mass {}", a.mass)));
            }
            if !a.label.is_finite() || a.point.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("atom {i} has non-finite entries")));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.mass).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("atom masses sum to {total}, expected 1")));
        }
        Ok(FiniteDistribution { atoms })
    }

    /// Two points on the first axis: a fraction `α` at `(−1, 0)` with label
    /// −1, the rest at `(1, 0)` with label +1.
    pub fn two_point(alpha: f64) -> Result<Self> {
        Self::two_point_noisy(alpha, 0.0)
    }

    /// [`two_point`](Self::two_point) with each label flipped with
    /// probability `flip`. For `flip > 0` the population alignment is
    /// below one, which makes sample fluctuations observable.
    pub fn two_point_noisy(alpha: f64, flip: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::param(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        if !(0.0..0.5).contains(&flip) {
            return Err(Error::param(format!("flip probability must lie in [0, 0.5), got {flip}")));
        }
        let mut atoms = Vec::new();
        for (x, y, w) in [(-1.0, -1.0, alpha), (1.0, 1.0, 1.0 - alpha)] {
            atoms.push(Atom { point: vec![x, 0.0], label: y, mass: w * (1.0 - flip) });
            if flip > 0.0 {
                atoms.push(Atom { point: vec![x, 0.0], label: -y, mass: w * flip });
            }
        }
        atoms.retain(|a| a.mass > 0.0);
        Self::new(atoms)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].point.len()
    }

    /// Number of distinct points in the support.
    pub fn support_size(&self) -> usize {
        let mut pts: Vec<&Vec<f64>> = self.atoms.iter().filter(|a| a.mass > 0.0).map(|a| &a.point).collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        pts.len()
    }

    /// `max K(x, x)` over the support.
    pub fn max_kernel_diagonal(&self, spec: &KernelSpec) -> f64 {
        self.atoms
            .iter()
            .map(|a| spec.eval(&a.point, &a.point))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max y²` over the support.
    pub fn max_label_sq(&self) -> f64 {
        self.atoms.iter().map(|a| a.label * a.label).fold(0.0, f64::max)
    }

    /// Draws `m` i.i.d. points.
    pub fn sample<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Result<Sample> {
        let idx = self.sample_indices(m, rng)?;
        Ok(self.sample_from_indices(&idx))
    }

    pub fn sample_indices<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Result<Vec<usize>> {
        let dist = WeightedIndex::new(self.atoms.iter().map(|a| a.mass))
            .map_err(|e| Error::invalid(format!("cannot sample from distribution: {e}")))?;
        Ok((0..m).map(|_| dist.sample(rng)).collect())
    }

    pub fn draw_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let dist = WeightedIndex::new(self.atoms.iter().map(|a| a.mass)).expect("validated masses");
        dist.sample(rng)
    }

    pub fn sample_from_indices(&self, idx: &[usize]) -> Sample {
        let d = self.dim();
        let points = DMatrix::from_fn(idx.len(), d, |i, j| self.atoms[idx[i]].point[j]);
        let labels = DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.atoms[i].label));
        Sample::from_parts_unchecked(points, labels)
    }
}

/// Exact second moments of a kernel and the target `yy′` under a finite
/// distribution, either centered or raw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationMoments {
    /// `E[K K′]`
    pub cross: f64,
    /// `E[K²]`
    pub kernel: f64,
    /// `E[K′²]`
    pub target: f64,
}

impl PopulationMoments {
    pub fn alignment(&self) -> Result<f64> {
        if self.kernel <= 0.0 || self.target <= 0.0 {
            return Err(Error::degenerate("population second moment vanishes on the support"));
        }
        Ok(self.cross / (self.kernel * self.target).sqrt())
    }
}

fn pair_matrix(dist: &FiniteDistribution, f: impl Fn(&Atom, &Atom) -> f64) -> DMatrix<f64> {
    let a = dist.atoms();
    DMatrix::from_fn(a.len(), a.len(), |i, j| f(&a[i], &a[j]))
}

/// Centers a kernel function over atoms: `K − E_x′K(x,·) − E_xK(·,x′) + E K`.
fn center_population(k: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let n = w.len();
    let means: Vec<f64> = (0..n).map(|i| (0..n).map(|j| w[j] * k[(i, j)]).sum()).collect();
    let grand: f64 = (0..n).map(|i| w[i] * means[i]).sum();
    DMatrix::from_fn(n, n, |i, j| k[(i, j)] - means[i] - means[j] + grand)
}

/// Enumerates all atom pairs, weighting by mass products.
pub fn population_moments(spec: &KernelSpec, dist: &FiniteDistribution, centered: bool) -> Result<PopulationMoments> {
    spec.validate(dist.dim())?;
    let w: Vec<f64> = dist.atoms().iter().map(|a| a.mass).collect();
    let mut k = pair_matrix(dist, |a, b| spec.eval(&a.point, &b.point));
    let mut t = pair_matrix(dist, |a, b| a.label * b.label);
    if centered {
        k = center_population(&k, &w);
        t = center_population(&t, &w);
    }
    let n = w.len();
    let (mut cross, mut kk, mut tt) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let p = w[i] * w[j];
            cross += p * k[(i, j)] * t[(i, j)];
            kk += p * k[(i, j)] * k[(i, j)];
            tt += p * t[(i, j)] * t[(i, j)];
        }
    }
    // rounding residue of an exactly-zero centered moment
    let raw_scale = pair_matrix(dist, |a, b| spec.eval(&a.point, &b.point)).amax().powi(2);
    if kk <= 1e-14 * raw_scale.max(f64::MIN_POSITIVE) {
        kk = 0.0;
    }
    Ok(PopulationMoments { cross, kernel: kk, target: tt })
}

/// Population centered alignment `ρ(K, K_Y)` with `K_Y(x, x′) = yy′`.
pub fn population_alignment(spec: &KernelSpec, dist: &FiniteDistribution) -> Result<f64> {
    if dist.support_size() < 2 {
        return Err(Error::degenerate("support has fewer than two distinct points"));
    }
    population_moments(spec, dist, true)?.alignment()
}

/// Population uncentered alignment `A(K, K_Y)`.
pub fn population_uncentered_alignment(spec: &KernelSpec, dist: &FiniteDistribution) -> Result<f64> {
    population_moments(spec, dist, false)?.alignment()
}

/// `a_k = ⟨K_kc, yyᵀ⟩_F` and `M_kl = ⟨K_kc, K_lc⟩_F`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentSystem {
    pub a: DVector<f64>,
    pub m: DMatrix<f64>,
    pub min_eigenvalue: f64,
}

/// Relative eigenvalue threshold under which `M` is treated as singular.
pub const SINGULAR_TOL: f64 = 1e-10;

impl AlignmentSystem {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// `λ_min(M) > 1e−10 · Tr[M]`, i.e. the centered base kernels are
    /// numerically linearly independent.
    pub fn is_invertible(&self) -> bool {
        self.min_eigenvalue > SINGULAR_TOL * self.m.trace()
    }

    pub fn singular_threshold(&self) -> f64 {
        SINGULAR_TOL * self.m.trace()
    }

    /// Centered alignment `ρ̂(K_μ, yyᵀ)` for weights `μ`, from `(a, M)`:
    /// `μᵀa / (√(μᵀMμ) ‖yyᵀ_c‖_F)`.
    pub fn alignment_of(&self, mu: &[f64], target_centered_norm: f64) -> f64 {
        let mu = DVector::from_column_slice(mu);
        mu.dot(&self.a) / (linalg::quad_form(&self.m, &mu).sqrt() * target_centered_norm)
    }
}

pub fn alignment_system(bank: &BaseKernelBank, y: &[f64]) -> Result<AlignmentSystem> {
    let m = bank.sample_size();
    if y.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: y.len() });
    }
    let centered = bank.centered();
    let yv = DVector::from_column_slice(y);
    let a: Vec<f64> = centered
        .iter()
        .map(|kc| linalg::quad_form(kc.matrix(), &yv))
        .collect();
    let p = bank.len();
    let pairs: Vec<(usize, usize)> = (0..p).flat_map(|k| (k..p).map(move |l| (k, l))).collect();
    let products: Vec<f64> = pairs
        .par_iter()
        .map(|&(k, l)| linalg::frobenius(centered[k].matrix(), centered[l].matrix()))
        .collect();
    let mut mm = DMatrix::zeros(p, p);
    for (&(k, l), &v) in pairs.iter().zip(&products) {
        mm[(k, l)] = v;
        mm[(l, k)] = v;
    }
    let min_eigenvalue = linalg::min_max_eigenvalue(&mm).0;
    Ok(AlignmentSystem { a: DVector::from_vec(a), m: mm, min_eigenvalue })
}

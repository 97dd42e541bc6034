//! Lowest eigenpairs of a real symmetric tridiagonal matrix.
//!
//! Eigenvalues come from Sturm-sequence bisection, which resolves each one to
//! a few ulps of the matrix norm independently of how close its neighbours
//! are. Eigenvectors come from inverse iteration with a pivoted tridiagonal
//! LU, re-orthogonalized against the vectors already found so that
//! near-degenerate doublets stay orthonormal.

/// Symmetric tridiagonal matrix stored as its diagonal and first off-diagonal.
#[derive(Debug, Clone)]
pub struct SymTridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl SymTridiagonal {
    /// `off.len()` must be `diag.len() - 1`.
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert!(!diag.is_empty());
        assert_eq!(off.len() + 1, diag.len());
        Self { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Gershgorin interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    fn norm_bound(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE)
    }

    fn pivot_floor(&self) -> f64 {
        let max_off_sq = self.off.iter().fold(0.0f64, |m, e| m.max(e * e));
        (f64::MIN_POSITIVE * max_off_sq.max(1.0)).max(f64::MIN_POSITIVE)
    }

    /// Number of eigenvalues strictly below `lambda`.
    pub fn count_below(&self, lambda: f64) -> usize {
        let floor = self.pivot_floor();
        let mut count = 0;
        let mut q = self.diag[0] - lambda;
        if q.abs() < floor {
            q = -floor;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.len() {
            q = self.diag[i] - lambda - self.off[i - 1] * self.off[i - 1] / q;
            if q.abs() < floor {
                q = -floor;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k` smallest eigenvalues in ascending order.
    pub fn lowest_eigenvalues(&self, k: usize) -> Vec<f64> {
        let k = k.min(self.len());
        let (glo, ghi) = self.gershgorin();
        let pad = 2.0 * f64::EPSILON * self.norm_bound() + self.pivot_floor();
        let (glo, ghi) = (glo - pad, ghi + pad);
        let mut out = Vec::with_capacity(k);
        for index in 0..k {
            // Every eigenvalue below `index` is already known, which tightens
            // the lower bracket.
            let mut lo = out.last().map_or(glo, |prev: &f64| prev - pad).max(glo);
            let mut hi = ghi;
            for _ in 0..256 {
                let mid = 0.5 * (lo + hi);
                let tol = 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) + self.pivot_floor();
                if hi - lo <= tol || mid <= lo || mid >= hi {
                    break;
                }
                if self.count_below(mid) > index {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        out
    }

    /// y = T x.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * x[i + 1];
            }
            y[i] = acc;
        }
        y
    }

    /// ‖T v − λ v‖₂ / ‖v‖₂.
    pub fn residual(&self, lambda: f64, v: &[f64]) -> f64 {
        let tv = self.apply(v);
        let r: f64 = tv
            .iter()
            .zip(v)
            .map(|(a, b)| (a - lambda * b).powi(2))
            .sum();
        let nv: f64 = v.iter().map(|x| x * x).sum();
        (r / nv).sqrt()
    }

    /// Unit eigenvector for the eigenvalue `lambda`, orthogonal to every
    /// vector in `previous` (assumed orthonormal).
    pub fn eigenvector(&self, lambda: f64, previous: &[Vec<f64>], max_iter: usize) -> Vec<f64> {
        let n = self.len();
        let lu = ShiftedLu::factor(self, lambda);
        // Deterministic start vector with no special structure.
        let mut state: u64 = 0x9e37_79b9_7f4a_7c15 ^ (previous.len() as u64);
        let mut v: Vec<f64> = (0..n)
            .map(|_| {
                state = state
                    .wrapping_mul(6_364_136_223_846_793_005)
                    .wrapping_add(1_442_695_040_888_963_407);
                0.5 + (state >> 11) as f64 / (1u64 << 53) as f64
            })
            .collect();
        orthonormalize(&mut v, previous);
        let target = 4.0 * f64::EPSILON * self.norm_bound() * (n as f64).sqrt();
        for _ in 0..max_iter.max(1) {
            lu.solve(&mut v);
            orthonormalize(&mut v, previous);
            if self.residual(lambda, &v) <= target {
                break;
            }
        }
        v
    }
}

/// Gram-Schmidt against `basis` (twice, for stability) followed by normalization.
fn orthonormalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= dot * y;
            }
        }
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 && norm.is_finite() {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// LU factorization of T − λI with partial pivoting (the fill-in of a
/// pivoted tridiagonal factorization is one extra super-diagonal).
struct ShiftedLu {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    upper2: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn factor(t: &SymTridiagonal, lambda: f64) -> Self {
        let n = t.len();
        let mut diag: Vec<f64> = t.diag.iter().map(|d| d - lambda).collect();
        let mut lower = t.off.clone();
        let mut upper = t.off.clone();
        let mut upper2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        let floor = f64::EPSILON * t.norm_bound();

        for i in 0..n.saturating_sub(1) {
            if diag[i].abs() >= lower[i].abs() {
                if diag[i] == 0.0 {
                    diag[i] = floor;
                }
                let fact = lower[i] / diag[i];
                lower[i] = fact;
                diag[i + 1] -= fact * upper[i];
            } else {
                let fact = diag[i] / lower[i];
                diag[i] = lower[i];
                lower[i] = fact;
                let tmp = upper[i];
                upper[i] = diag[i + 1];
                diag[i + 1] = tmp - fact * diag[i + 1];
                if i + 2 < n {
                    upper2[i] = upper[i + 1];
                    upper[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        // An exactly singular pivot only arises when λ is an eigenvalue to
        // working precision; any nonzero stand-in keeps the solve finite.
        for d in diag.iter_mut() {
            if *d == 0.0 {
                *d = floor;
            }
        }
        Self {
            lower,
            diag,
            upper,
            upper2,
            swapped,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.diag.len();
        for i in 0..n - 1 {
            if self.swapped[i] {
                let tmp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = tmp - self.lower[i] * b[i];
            } else {
                b[i + 1] -= self.lower[i] * b[i];
            }
        }
        b[n - 1] /= self.diag[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.upper[n - 2] * b[n - 1]) / self.diag[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.upper[i] * b[i + 1] - self.upper2[i] * b[i + 2]) / self.diag[i];
        }
        // Inverse iteration grows the vector by up to 1/floor per pass;
        // rescale before it can overflow.
        let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if scale > 1e150 {
            b.iter_mut().for_each(|x| *x /= scale);
        }
    }
}

//! Brute-force verification: a cyclic Jacobi eigensolver, the SPD square
//! root, reduction of a pencil to standard form and seeded random problem
//! generators.
//!
//! Nothing here calls into the solver code paths (no Cholesky, no LU, no
//! functional evaluation); the only shared piece is the [`Matrix`]
//! container.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::functional::SpdMatrix;
use crate::linalg::{Matrix, SymMatrix};
use crate::rng::{gaussian_vector, stream};

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_REL_TOL: f64 = 1e-12;

/// Eigenvalues ascending; column `i` of `eigenvectors` pairs with `eigenvalues[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

impl SpectralDecomposition {
    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.eigenvectors.column(i)
    }

    /// `Q Λ Qᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.eigenvalues.len();
        let q = &self.eigenvectors;
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = (0..n)
                    .map(|k| q[(i, k)] * self.eigenvalues[k] * q[(j, k)])
                    .sum();
            }
        }
        out
    }
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    libm::sqrt(s)
}

/// Cyclic Jacobi: sweeps of plane rotations until the off-diagonal
/// Frobenius norm drops below `1e-12‖A‖_F`.
pub fn jacobi_eigh(a: &SymMatrix) -> Result<SpectralDecomposition> {
    let n = a.n();
    let mut m = a.matrix().clone();
    let mut v = Matrix::identity(n);
    let scale = m.frobenius_norm();
    let mut sweeps = 0;
    while off_diagonal_norm(&m) > JACOBI_REL_TOL * scale {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let tau = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + libm::sqrt(1.0 + tau * tau))
                } else {
                    -1.0 / (-tau + libm::sqrt(1.0 + tau * tau))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    // stable: ties keep Jacobi output order
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let eigenvalues = order.iter().map(|&i| m[(i, i)]).collect();
    let mut eigenvectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            eigenvectors[(k, dst)] = v[(k, src)];
        }
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn spectral_function(d: &SpectralDecomposition, f: impl Fn(f64) -> f64) -> Matrix {
    let n = d.eigenvalues.len();
    let q = &d.eigenvectors;
    let fl: Vec<f64> = d.eigenvalues.iter().map(|&l| f(l)).collect();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = (0..n).map(|k| q[(i, k)] * fl[k] * q[(j, k)]).sum();
        }
    }
    out
}

fn checked_spd_decomposition(b: &SymMatrix) -> Result<SpectralDecomposition> {
    let d = jacobi_eigh(b)?;
    if let Some((row, &pivot)) = d.eigenvalues.iter().enumerate().find(|(_, l)| **l <= 0.0) {
        return Err(Error::NotPositiveDefinite { row, pivot });
    }
    Ok(d)
}

/// `√B = Q √Λ Qᵀ`.
pub fn spd_sqrt(b: &SpdMatrix) -> Result<SymMatrix> {
    let d = checked_spd_decomposition(b.sym())?;
    SymMatrix::new(spectral_function(&d, libm::sqrt))
}

fn inv_sqrt(b: &SymMatrix) -> Result<Matrix> {
    let d = checked_spd_decomposition(b)?;
    Ok(spectral_function(&d, |l| 1.0 / libm::sqrt(l)))
}

fn mul(x: &Matrix, y: &Matrix) -> Matrix {
    let (n, k, m) = (x.rows(), x.cols(), y.cols());
    let mut out = Matrix::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            out[(i, j)] = (0..k).map(|l| x[(i, l)] * y[(l, j)]).sum();
        }
    }
    out
}

/// `C = √B⁻¹ A √B⁻¹`, sharing its eigenvalues with the pencil `(A, B)`.
pub fn reduce_to_standard(a: &SymMatrix, b: &SpdMatrix) -> Result<SymMatrix> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            found: b.n(),
        });
    }
    let s = inv_sqrt(b.sym())?;
    SymMatrix::new(mul(&mul(&s, a.matrix()), &s))
}

/// Generalized eigenpairs with B-orthonormal eigenvectors `x_i = √B⁻¹ r_i`.
pub fn generalized_eigh(a: &SymMatrix, b: &SpdMatrix) -> Result<SpectralDecomposition> {
    let c = reduce_to_standard(a, b)?;
    let d = jacobi_eigh(&c)?;
    let s = inv_sqrt(b.sym())?;
    Ok(SpectralDecomposition {
        eigenvalues: d.eigenvalues,
        eigenvectors: mul(&s, &d.eigenvectors),
    })
}

/// Parameters of a seeded random test problem.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomProblemSpec {
    pub n: usize,
    pub seed: u64,
    pub eig_range_a: (f64, f64),
    pub eig_range_b: (f64, f64),
    pub spd_a: bool,
}

impl RandomProblemSpec {
    /// SPD `A` with spectrum in `[0.5, 10]`, `B` with spectrum in `[1, 4]`.
    pub fn spd_pair(n: usize, seed: u64) -> Self {
        RandomProblemSpec {
            n,
            seed,
            eig_range_a: (0.5, 10.0),
            eig_range_b: (1.0, 4.0),
            spd_a: true,
        }
    }

    /// Indefinite symmetric `A` with spectrum in `[-5, 5]`.
    pub fn symmetric(n: usize, seed: u64) -> Self {
        RandomProblemSpec {
            eig_range_a: (-5.0, 5.0),
            spd_a: false,
            ..RandomProblemSpec::spd_pair(n, seed)
        }
    }

    fn validate(&self) -> Result<()> {
        let ordered = |(lo, hi): (f64, f64)| lo <= hi && lo.is_finite() && hi.is_finite();
        if self.n == 0 {
            return Err(Error::invalid("n must be positive"));
        }
        if !ordered(self.eig_range_a) || !ordered(self.eig_range_b) {
            return Err(Error::invalid("eigenvalue ranges must be ordered"));
        }
        if !(self.eig_range_b.0 > 0.0) || (self.spd_a && !(self.eig_range_a.0 > 0.0)) {
            return Err(Error::invalid("positive definite ranges need lo > 0"));
        }
        Ok(())
    }
}

/// Orthogonal factor of the QR decomposition of a seeded Gaussian matrix
/// (modified Gram–Schmidt, columns re-orthogonalized twice).
fn random_orthogonal<R: Rng>(rng: &mut R, n: usize) -> Matrix {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v = gaussian_vector(rng, n);
        for _ in 0..2 {
            for c in &cols {
                let p: f64 = c.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (vi, ci) in v.iter_mut().zip(c) {
                    *vi -= p * ci;
                }
            }
        }
        let nv = libm::sqrt(v.iter().map(|x| x * x).sum());
        if nv > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nv);
            cols.push(v);
        }
    }
    let mut q = Matrix::zeros(n, n);
    for (j, c) in cols.iter().enumerate() {
        for (i, v) in c.iter().enumerate() {
            q[(i, j)] = *v;
        }
    }
    q
}

fn spectrum<R: Rng>(rng: &mut R, n: usize, (lo, hi): (f64, f64)) -> Vec<f64> {
    (0..n).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect()
}

/// `Q Λ Qᵀ` with a given spectrum and a random orthogonal `Q` drawn from
/// the sub-stream `name` of `seed`.
pub fn with_spectrum(n: usize, eigenvalues: &[f64], seed: u64, name: &str) -> Result<SymMatrix> {
    if eigenvalues.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: eigenvalues.len(),
        });
    }
    let mut rng = stream(seed, name);
    let q = random_orthogonal(&mut rng, n);
    SymMatrix::new(
        SpectralDecomposition {
            eigenvalues: eigenvalues.to_vec(),
            eigenvectors: q,
        }
        .reconstruct(),
    )
}

/// Random `A` from `spec` (spectrum uniform in `eig_range_a`).
pub fn random_spd(spec: &RandomProblemSpec) -> Result<SymMatrix> {
    spec.validate()?;
    let mut rng = stream(spec.seed, "oracle/a/spectrum");
    let eig = spectrum(&mut rng, spec.n, spec.eig_range_a);
    with_spectrum(spec.n, &eig, spec.seed, "oracle/a/q")
}

/// Random pair `(A, B)` from `spec`.
pub fn random_pair(spec: &RandomProblemSpec) -> Result<(SymMatrix, SpdMatrix)> {
    let a = random_spd(spec)?;
    let mut rng = stream(spec.seed, "oracle/b/spectrum");
    let eig = spectrum(&mut rng, spec.n, spec.eig_range_b);
    let b = with_spectrum(spec.n, &eig, spec.seed, "oracle/b/q")?;
    Ok((a, SpdMatrix::new(b)?))
}

fn orthonormal_basis(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for c in &basis {
                let p: f64 = c.iter().zip(&w).map(|(a, b)| a * b).sum();
                for (wi, ci) in w.iter_mut().zip(c) {
                    *wi -= p * ci;
                }
            }
        }
        let nw = libm::sqrt(w.iter().map(|x| x * x).sum());
        if nw > 0.0 {
            w.iter_mut().for_each(|x| *x /= nw);
            basis.push(w);
        }
    }
    basis
}

/// Sine of the largest principal angle between `span(u)` and `span(v)`,
/// computed as `‖(I − P_V) U‖₂` for orthonormalized `U`. Accurate for small
/// angles. Spans of different dimension give 1.
pub fn max_principal_angle_sin(u: &[Vec<f64>], v: &[Vec<f64>]) -> Result<f64> {
    let u = orthonormal_basis(u);
    let v = orthonormal_basis(v);
    if u.len() != v.len() || u.is_empty() {
        return Ok(1.0);
    }
    let n = u[0].len();
    let p = u.len();
    let mut w = vec![vec![0.0; n]; p];
    for (wi, ui) in w.iter_mut().zip(&u) {
        *wi = ui.clone();
        for vj in &v {
            let c: f64 = vj.iter().zip(ui).map(|(a, b)| a * b).sum();
            for (x, y) in wi.iter_mut().zip(vj) {
                *x -= c * y;
            }
        }
    }
    let mut gram = Matrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            gram[(i, j)] = w[i].iter().zip(&w[j]).map(|(a, b)| a * b).sum();
        }
    }
    let d = jacobi_eigh(&SymMatrix::new(gram)?)?;
    let top = d.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
    Ok(libm::sqrt(top))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_diff(x: &Matrix, y: &Matrix) -> f64 {
        x.as_slice()
            .iter()
            .zip(y.as_slice())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    #[test]
    fn jacobi_diagonal_input() {
        let a = SymMatrix::from_diagonal(&[3.0, 1.0, 2.0]).unwrap();
        let d = jacobi_eigh(&a).unwrap();
        assert_eq!(d.eigenvalues, vec![1.0, 2.0, 3.0]);
        // permutation matrix
        for j in 0..3 {
            let col = d.vector(j);
            assert_eq!(col.iter().filter(|v| **v == 0.0).count(), 2);
            assert_eq!(col.iter().filter(|v| v.abs() == 1.0).count(), 1);
        }
    }

    #[test]
    fn jacobi_two_by_two() {
        let a = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let d = jacobi_eigh(&a).unwrap();
        assert!((d.eigenvalues[0] - 1.0).abs() < 1e-15);
        assert!((d.eigenvalues[1] - 3.0).abs() < 1e-15);
        let r = 1.0 / libm::sqrt(2.0);
        let v0 = d.vector(0);
        let v1 = d.vector(1);
        assert!((v0[0].abs() - r).abs() < 1e-15 && (v0[0] + v0[1]).abs() < 1e-15);
        assert!((v1[0].abs() - r).abs() < 1e-15 && (v1[0] - v1[1]).abs() < 1e-15);
    }

    #[test]
    fn jacobi_reconstructs_random() {
        let a = random_spd(&RandomProblemSpec::symmetric(12, 3)).unwrap();
        let d = jacobi_eigh(&a).unwrap();
        assert!(max_abs_diff(&d.reconstruct(), a.matrix()) < 1e-9);
        let q = &d.eigenvectors;
        let qtq = mul(&q.transpose(), q);
        assert!(max_abs_diff(&qtq, &Matrix::identity(12)) < 1e-10);
        assert!(d.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn sqrt_examples() {
        let b = SpdMatrix::new(SymMatrix::from_diagonal(&[4.0, 9.0]).unwrap()).unwrap();
        let s = spd_sqrt(&b).unwrap();
        assert_eq!(s.matrix(), &Matrix::from_diagonal(&[2.0, 3.0]));
        let i = SpdMatrix::identity(3);
        assert_eq!(spd_sqrt(&i).unwrap().matrix(), &Matrix::identity(3));

        let (_, b) = random_pair(&RandomProblemSpec::spd_pair(10, 5)).unwrap();
        let s = spd_sqrt(&b).unwrap();
        let s2 = mul(s.matrix(), s.matrix());
        assert!(max_abs_diff(&s2, b.sym().matrix()) < 1e-9);
    }

    #[test]
    fn sqrt_of_diagonal_is_exact_per_entry() {
        let d = [2.0, 3.0, 5.0, 0.7];
        let b = SpdMatrix::new(SymMatrix::from_diagonal(&d).unwrap()).unwrap();
        let s = spd_sqrt(&b).unwrap();
        for (i, di) in d.iter().enumerate() {
            assert_eq!(s[(i, i)], libm::sqrt(*di));
        }
    }

    #[test]
    fn standard_form_examples() {
        let a = SymMatrix::from_diagonal(&[2.0, 6.0]).unwrap();
        let b = SpdMatrix::new(SymMatrix::from_diagonal(&[1.0, 4.0]).unwrap()).unwrap();
        let c = reduce_to_standard(&a, &b).unwrap();
        assert_eq!(c.matrix(), &Matrix::from_diagonal(&[2.0, 1.5]));
        let ge = generalized_eigh(&a, &b).unwrap();
        assert_eq!(ge.eigenvalues, vec![1.5, 2.0]);

        let a = random_spd(&RandomProblemSpec::symmetric(5, 1)).unwrap();
        let c = reduce_to_standard(&a, &SpdMatrix::identity(5)).unwrap();
        assert!(max_abs_diff(c.matrix(), a.matrix()) < 1e-14);
    }

    #[test]
    fn generalized_pairs_are_b_orthonormal_with_small_residual() {
        let (a, b) = random_pair(&RandomProblemSpec::spd_pair(8, 11)).unwrap();
        let d = generalized_eigh(&a, &b).unwrap();
        let scale = 1.0 + a.frobenius_norm();
        for i in 0..8 {
            let xi = d.vector(i);
            let ax = a.matvec(&xi);
            let bx = b.matvec(&xi);
            let r: f64 = ax
                .iter()
                .zip(&bx)
                .map(|(p, q)| (p - d.eigenvalues[i] * q).powi(2))
                .sum();
            assert!(libm::sqrt(r) < 1e-8 * scale);
            for j in 0..8 {
                let xj = d.vector(j);
                let ip: f64 = xj.iter().zip(&bx).map(|(p, q)| p * q).sum();
                let delta = if i == j { 1.0 } else { 0.0 };
                assert!((ip - delta).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn random_generators() {
        let spec = RandomProblemSpec {
            n: 1,
            seed: 9,
            eig_range_a: (2.0, 2.0),
            eig_range_b: (1.0, 1.0),
            spd_a: true,
        };
        assert_eq!(random_spd(&spec).unwrap().matrix(), &Matrix::from_diagonal(&[2.0]));

        let spec = RandomProblemSpec::spd_pair(10, 42);
        assert_eq!(random_spd(&spec).unwrap(), random_spd(&spec).unwrap());
        let spec = RandomProblemSpec {
            eig_range_a: (0.5, 10.0),
            ..spec
        };
        let d = jacobi_eigh(&random_spd(&spec).unwrap()).unwrap();
        assert!(d.eigenvalues.iter().all(|l| *l >= 0.5 - 1e-9 && *l <= 10.0 + 1e-9));
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut spec = RandomProblemSpec::spd_pair(3, 0);
        spec.eig_range_b = (0.0, 1.0);
        assert!(random_pair(&spec).is_err());
        spec = RandomProblemSpec::spd_pair(3, 0);
        spec.eig_range_a = (2.0, 1.0);
        assert!(random_spd(&spec).is_err());
    }

    #[test]
    fn principal_angles() {
        let e1 = vec![1.0, 0.0, 0.0];
        let e2 = vec![0.0, 1.0, 0.0];
        let mixed = vec![vec![1.0, 1.0, 0.0], vec![1.0, -2.0, 0.0]];
        assert!(max_principal_angle_sin(&[e1.clone(), e2.clone()], &mixed).unwrap() < 1e-15);
        let tilted = vec![1.0, 0.0, 1e-9];
        let s = max_principal_angle_sin(&[tilted], &[e1]).unwrap();
        assert!((s - 1e-9).abs() < 1e-18);
    }
}

//! Dense complex matrices: construction helpers, Hermitian spectra,
//! matrix functions, norms and a general matrix exponential.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{unzip, zip, Mat, Side};

use crate::error::{Error, Result};

pub use faer::c64;

pub type CMat = Mat<c64>;

/// Relative anti-Hermitian part tolerated (and silently removed) before an
/// eigendecomposition.
pub const HERM_TOL: f64 = 1e-10;
/// Eigenvalues below this fraction of the largest one are treated as zero
/// by generalized inverses and negative powers.
pub const GEN_INV_CLIP: f64 = 1e-14;
/// Largest Hilbert-space dimension handled densely (12 qubits).
pub const MAX_DIM: usize = 4096;

#[inline]
pub fn cx(re: f64, im: f64) -> c64 {
    c64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> c64 {
    c64::new(re, 0.0)
}

pub fn zeros(r: usize, c: usize) -> CMat {
    Mat::zeros(r, c)
}

pub fn eye(n: usize) -> CMat {
    Mat::identity(n, n)
}

pub fn check_dim(n: usize) -> Result<()> {
    if n > MAX_DIM {
        return Err(Error::Resource(format!(
            "Hilbert dimension {n} exceeds dense limit {MAX_DIM}"
        )));
    }
    Ok(())
}

pub fn real_diag(v: &[f64]) -> CMat {
    let n = v.len();
    let mut m = zeros(n, n);
    for (i, x) in v.iter().enumerate() {
        m[(i, i)] = cr(*x);
    }
    m
}

pub fn dagger(a: &CMat) -> CMat {
    a.adjoint().to_owned()
}

pub fn transpose(a: &CMat) -> CMat {
    a.transpose().to_owned()
}

pub fn scaled(a: &CMat, s: c64) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s)
}

/// `a + s * b`
pub fn axpy(a: &CMat, s: c64, b: &CMat) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] + s * b[(i, j)])
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn kron_all(ops: &[CMat]) -> CMat {
    let mut acc = eye(1);
    for o in ops {
        acc = kron(&acc, o);
    }
    acc
}

pub fn trace(a: &CMat) -> c64 {
    let mut t = c64::new(0.0, 0.0);
    for i in 0..a.nrows().min(a.ncols()) {
        t += a[(i, i)];
    }
    t
}

/// Hilbert-Schmidt inner product Tr[a^† b].
pub fn hs(a: &CMat, b: &CMat) -> c64 {
    let mut t = c64::new(0.0, 0.0);
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            t += a[(i, j)].conj() * b[(i, j)];
        }
    }
    t
}

/// Tr[a b] without forming the product.
pub fn trace_prod(a: &CMat, b: &CMat) -> c64 {
    let mut t = c64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            t += a[(i, k)] * b[(k, i)];
        }
    }
    t
}

pub fn fro(a: &CMat) -> f64 {
    a.norm_l2()
}

pub fn max_abs(a: &CMat) -> f64 {
    a.norm_max()
}

pub fn is_diagonal(a: &CMat) -> bool {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if i != j && (a[(i, j)].re != 0.0 || a[(i, j)].im != 0.0) {
                return false;
            }
        }
    }
    true
}

/// ‖a − a^†‖ relative to ‖a‖ (Frobenius).
pub fn herm_asymmetry(a: &CMat) -> f64 {
    let n = fro(a);
    if n == 0.0 {
        return 0.0;
    }
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += (a[(i, j)] - a[(j, i)].conj()).norm_sqr();
        }
    }
    s.sqrt() / n
}

pub fn symmetrize(a: &CMat) -> CMat {
    let mut h = a.adjoint().to_owned();
    zip!(&mut h, a).for_each(|unzip!(x, y)| *x = (*x + *y) * 0.5);
    h
}

/// Real eigenvalues in ascending order with a unitary eigenvector matrix.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl Spectrum {
    /// U f(Λ) U^†
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMat {
        let fv: Vec<c64> = self.values.iter().map(|&x| cr(f(x))).collect();
        self.apply_complex(&fv)
    }

    pub fn apply_complex(&self, fv: &[c64]) -> CMat {
        let u = &self.vectors;
        let n = u.nrows();
        let w = Mat::from_fn(n, fv.len(), |i, j| u[(i, j)] * fv[j]);
        &w * u.adjoint()
    }

    pub fn max_value(&self) -> f64 {
        *self.values.last().unwrap_or(&0.0)
    }

    pub fn min_value(&self) -> f64 {
        *self.values.first().unwrap_or(&0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn reconstruct(&self) -> CMat {
        self.apply(|x| x)
    }
}

/// Eigendecomposition of a Hermitian matrix. Inputs with a relative
/// anti-Hermitian part above [`HERM_TOL`] are rejected; smaller drift is
/// symmetrized away first.
pub fn eigh(a: &CMat) -> Result<Spectrum> {
    if a.nrows() != a.ncols() {
        return Err(Error::Argument("eigh: matrix not square".into()));
    }
    let asym = herm_asymmetry(a);
    if asym > HERM_TOL {
        return Err(Error::Argument(format!(
            "eigh: matrix not Hermitian (relative asymmetry {asym:.2e})"
        )));
    }
    Ok(eigh_sym(&symmetrize(a)))
}

/// Eigendecomposition of the Hermitian part of `a`, without the check.
pub fn eigh_sym(a: &CMat) -> Spectrum {
    let n = a.nrows();
    if is_diagonal(a) {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
        let values = idx.iter().map(|&i| a[(i, i)].re).collect();
        let mut vectors = zeros(n, n);
        for (col, &i) in idx.iter().enumerate() {
            vectors[(i, col)] = cr(1.0);
        }
        return Spectrum { values, vectors };
    }
    let h = symmetrize(a);
    assert!(
        h.col_iter().all(|c| c.iter().all(|z| z.re.is_finite() && z.im.is_finite())),
        "eigh: non-finite matrix entries"
    );
    if let Ok(e) = h.self_adjoint_eigen(Side::Lower) {
        let s = e.S().column_vector();
        return Spectrum {
            values: (0..n).map(|i| s[i].re).collect(),
            vectors: e.U().to_owned(),
        };
    }
    // exactly structured inputs can stall the QR sweeps; a fixed random
    // change of basis removes the structure without changing the spectrum
    let u = random::unitary(&mut random::rng(0x9e37), n);
    let hr = symmetrize(&(&(u.adjoint() * &h) * &u));
    let e = hr
        .self_adjoint_eigen(Side::Lower)
        .expect("Hermitian eigensolver did not converge");
    let s = e.S().column_vector();
    Spectrum {
        values: (0..n).map(|i| s[i].re).collect(),
        vectors: &u * e.U(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MatFun {
    Exp,
    Log,
    Pow(f64),
    GenInverse,
    Sqrt,
}

/// Applies a scalar function to a Hermitian matrix through its spectrum.
pub fn matfun(a: &CMat, f: MatFun) -> Result<CMat> {
    let sp = eigh(a)?;
    matfun_spectrum(&sp, f)
}

pub fn matfun_spectrum(sp: &Spectrum, f: MatFun) -> Result<CMat> {
    let top = sp.max_abs();
    let clip = GEN_INV_CLIP * top;
    match f {
        MatFun::Exp => {
            let m = sp.max_value();
            // shift for overflow safety, then restore
            let out = sp.apply(|x| (x - m).exp());
            Ok(scaled(&out, cr(m.exp())))
        }
        MatFun::Log => {
            if sp.values.iter().any(|&x| x <= clip) {
                return Err(Error::Domain(
                    "log of an operator with a vanishing or negative eigenvalue".into(),
                ));
            }
            Ok(sp.apply(f64::ln))
        }
        MatFun::Pow(p) => {
            if p < 0.0 {
                Ok(sp.apply(|x| if x > clip { x.powf(p) } else { 0.0 }))
            } else {
                Ok(sp.apply(|x| if x > 0.0 { x.powf(p) } else { 0.0 }))
            }
        }
        MatFun::GenInverse => Ok(sp.apply(|x| if x.abs() > clip { 1.0 / x } else { 0.0 })),
        MatFun::Sqrt => Ok(sp.apply(|x| if x > 0.0 { x.sqrt() } else { 0.0 })),
    }
}

/// Operator norm (largest singular value).
pub fn op_norm(a: &CMat) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    if a.nrows() == a.ncols() && herm_asymmetry(a) < 1e-13 {
        return eigh_sym(a).max_abs();
    }
    singular_values(a).first().copied().unwrap_or(0.0)
}

pub fn singular_values(a: &CMat) -> Vec<f64> {
    if is_diagonal(a) {
        let mut v: Vec<f64> = (0..a.nrows().min(a.ncols()))
            .map(|i| a[(i, i)].norm())
            .collect();
        v.sort_by(|x, y| y.total_cmp(x));
        return v;
    }
    a.singular_values().expect("SVD did not converge")
}

pub fn trace_norm(a: &CMat) -> f64 {
    if a.nrows() == a.ncols() && herm_asymmetry(a) < 1e-13 {
        return eigh_sym(a).values.iter().map(|x| x.abs()).sum();
    }
    singular_values(a).iter().sum()
}

/// Schatten p-norm; `p = f64::INFINITY` gives the operator norm.
pub fn schatten(a: &CMat, p: f64) -> f64 {
    if p.is_infinite() {
        return op_norm(a);
    }
    let sv = if a.nrows() == a.ncols() && herm_asymmetry(a) < 1e-13 {
        eigh_sym(a).values.iter().map(|x| x.abs()).collect()
    } else {
        singular_values(a)
    };
    sv.iter().map(|s| s.powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Solves a x = b.
pub fn solve(a: &CMat, b: &CMat) -> CMat {
    a.partial_piv_lu().solve(b)
}

pub fn inverse(a: &CMat) -> CMat {
    a.partial_piv_lu().inverse()
}

/// Full SVD: a = U diag(s) V^†.
pub fn svd(a: &CMat) -> (CMat, Vec<f64>, CMat) {
    let s = a.svd().expect("SVD did not converge");
    let sv = s.S().column_vector();
    let k = a.nrows().min(a.ncols());
    let vals = (0..k).map(|i| sv[i].re).collect();
    (s.U().to_owned(), vals, s.V().to_owned())
}

/// Exponential of a general square matrix (scaling and squaring with a
/// degree 13 Padé approximant).
pub fn expm(a: &CMat) -> CMat {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let n = a.nrows();
    // one-norm estimate
    let mut norm1 = 0.0f64;
    for j in 0..n {
        let mut s = 0.0;
        for i in 0..n {
            s += a[(i, j)].norm();
        }
        norm1 = norm1.max(s);
    }
    let theta13 = 5.371920351148152;
    let s = if norm1 > theta13 {
        (norm1 / theta13).log2().ceil() as i32
    } else {
        0
    };
    let a = scaled(a, cr(0.5f64.powi(s)));
    let id = eye(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let lin = |c: [f64; 4], m: [&CMat; 4]| -> CMat {
        Mat::from_fn(n, n, |i, j| {
            m[0][(i, j)] * c[0] + m[1][(i, j)] * c[1] + m[2][(i, j)] * c[2] + m[3][(i, j)] * c[3]
        })
    };
    let u_inner = lin([B[13], B[11], B[9], 0.0], [&a6, &a4, &a2, &id]);
    let u_inner = &a6 * &u_inner;
    let u_tail = lin([B[7], B[5], B[3], B[1]], [&a6, &a4, &a2, &id]);
    let u = &a * &(&u_inner + &u_tail);
    let v_inner = lin([B[12], B[10], B[8], 0.0], [&a6, &a4, &a2, &id]);
    let v_inner = &a6 * &v_inner;
    let v_tail = lin([B[6], B[4], B[2], B[0]], [&a6, &a4, &a2, &id]);
    let v = &v_inner + &v_tail;
    let p = &v + &u;
    let q = &v - &u;
    let mut r = solve(&q, &p);
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Row-major vectorization: vec(X)[i*n + j] = X[i, j].
pub fn vec_rm(x: &CMat) -> Vec<c64> {
    let (r, c) = (x.nrows(), x.ncols());
    let mut v = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            v.push(x[(i, j)]);
        }
    }
    v
}

pub fn unvec_rm(v: &[c64], r: usize, c: usize) -> CMat {
    Mat::from_fn(r, c, |i, j| v[i * c + j])
}

/// Superoperator matrix of X ↦ A X B in the row-major vectorization.
pub fn sandwich_superop(a: &CMat, b: &CMat) -> CMat {
    kron(a, &transpose(b))
}

pub fn matvec(a: &CMat, v: &[c64]) -> Vec<c64> {
    let mut out = vec![c64::new(0.0, 0.0); a.nrows()];
    for j in 0..a.ncols() {
        let vj = v[j];
        if vj.re == 0.0 && vj.im == 0.0 {
            continue;
        }
        for i in 0..a.nrows() {
            out[i] += a[(i, j)] * vj;
        }
    }
    out
}

/// Random matrices for tests and experiment ensembles.
pub mod random {
    use super::*;
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;
    use rand::SeedableRng;
    use rand_distr::StandardNormal;

    pub type Rng64 = ChaCha8Rng;

    pub fn rng(seed: u64) -> Rng64 {
        ChaCha8Rng::seed_from_u64(seed)
    }

    pub fn gaussian(rng: &mut Rng64) -> f64 {
        rng.sample(StandardNormal)
    }

    pub fn ginibre(rng: &mut Rng64, r: usize, c: usize) -> CMat {
        let mut m = zeros(r, c);
        for j in 0..c {
            for i in 0..r {
                m[(i, j)] = cx(gaussian(rng), gaussian(rng)) * std::f64::consts::FRAC_1_SQRT_2;
            }
        }
        m
    }

    pub fn hermitian(rng: &mut Rng64, n: usize) -> CMat {
        symmetrize(&ginibre(rng, n, n))
    }

    /// Haar-random unitary via Gram-Schmidt on a Ginibre matrix.
    pub fn unitary(rng: &mut Rng64, n: usize) -> CMat {
        let g = ginibre(rng, n, n);
        orthonormalize_columns(&g)
    }

    /// Hilbert-Schmidt random density matrix of full rank.
    pub fn density(rng: &mut Rng64, n: usize) -> CMat {
        density_rank(rng, n, n)
    }

    pub fn density_rank(rng: &mut Rng64, n: usize, k: usize) -> CMat {
        let g = ginibre(rng, n, k);
        let r = &g * g.adjoint();
        let t = trace(&r).re;
        symmetrize(&scaled(&r, cr(1.0 / t)))
    }

    pub fn pure_vector(rng: &mut Rng64, n: usize) -> Vec<c64> {
        let g = ginibre(rng, n, 1);
        let nrm = fro(&g);
        (0..n).map(|i| g[(i, 0)] / nrm).collect()
    }

    pub fn pure(rng: &mut Rng64, n: usize) -> CMat {
        let v = pure_vector(rng, n);
        Mat::from_fn(n, n, |i, j| v[i] * v[j].conj())
    }

    pub fn uniform(rng: &mut Rng64, lo: f64, hi: f64) -> f64 {
        rng.random_range(lo..hi)
    }
}

/// Modified Gram-Schmidt (applied twice) on the columns of `g`.
pub fn orthonormalize_columns(g: &CMat) -> CMat {
    let (n, k) = (g.nrows(), g.ncols());
    let mut q = g.clone();
    for _pass in 0..2 {
        for j in 0..k {
            for p in 0..j {
                let mut dot = c64::new(0.0, 0.0);
                for i in 0..n {
                    dot += q[(i, p)].conj() * q[(i, j)];
                }
                for i in 0..n {
                    let v = q[(i, p)];
                    q[(i, j)] -= dot * v;
                }
            }
            let mut nrm = 0.0;
            for i in 0..n {
                nrm += q[(i, j)].norm_sqr();
            }
            let nrm = nrm.sqrt();
            for i in 0..n {
                q[(i, j)] /= nrm;
            }
        }
    }
    q
}

/// Orthonormal basis (columns) of the span of the columns of `a`, dropping
/// directions whose singular value is below `tol` times the largest.
pub fn column_span(a: &CMat, tol: f64) -> CMat {
    if a.ncols() == 0 {
        return zeros(a.nrows(), 0);
    }
    let (u, s, _) = svd(a);
    let top = s.first().copied().unwrap_or(0.0);
    let rank = s.iter().filter(|&&x| x > tol * top.max(1e-300)).count();
    Mat::from_fn(a.nrows(), rank, |i, j| u[(i, j)])
}

/// Orthonormal basis of the null space of `a` (columns), using singular
/// values below `tol` times the largest.
pub fn null_space(a: &CMat, tol: f64) -> CMat {
    let n = a.ncols();
    if a.nrows() == 0 {
        return eye(n);
    }
    // work with the Hermitian Gram matrix for a square eigenproblem
    let g = a.adjoint() * a;
    let sp = eigh_sym(&g);
    let top = sp.max_abs().max(1e-300);
    let cols: Vec<usize> = (0..n)
        .filter(|&i| sp.values[i].abs().sqrt() <= tol * top.sqrt())
        .collect();
    Mat::from_fn(n, cols.len(), |i, j| sp.vectors[(i, cols[j])])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli_z() -> CMat {
        real_diag(&[1.0, -1.0])
    }

    #[test]
    fn z_spectrum() {
        let sp = eigh(&pauli_z()).unwrap();
        assert_eq!(sp.values, vec![-1.0, 1.0]);
    }

    #[test]
    fn identity_spectrum() {
        let sp = eigh(&eye(4)).unwrap();
        assert!(sp.values.iter().all(|&x| (x - 1.0).abs() < 1e-15));
    }

    #[test]
    fn moments_match_random_hermitian() {
        let mut r = random::rng(3);
        let h = random::hermitian(&mut r, 8);
        let sp = eigh(&h).unwrap();
        let tr = trace(&h).re;
        let tr2 = trace(&(&h * &h)).re;
        let s1: f64 = sp.values.iter().sum();
        let s2: f64 = sp.values.iter().map(|x| x * x).sum();
        assert!((tr - s1).abs() < 1e-9);
        assert!((tr2 - s2).abs() < 1e-9);
        let rec = sp.reconstruct();
        assert!(fro(&(&rec - &h)) <= 1e-9 * fro(&h));
        let gram = sp.vectors.adjoint() * &sp.vectors;
        assert!(fro(&(&gram - &eye(8))) < 1e-9);
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut a = eye(2);
        a[(0, 1)] = cr(1.0);
        assert!(matches!(eigh(&a), Err(Error::Argument(_))));
    }

    #[test]
    fn basic_matrix_functions() {
        let e = matfun(&zeros(3, 3), MatFun::Exp).unwrap();
        assert!(fro(&(&e - &eye(3))) < 1e-15);
        let ez = matfun(&pauli_z(), MatFun::Exp).unwrap();
        let lz = matfun(&ez, MatFun::Log).unwrap();
        assert!(fro(&(&lz - &pauli_z())) < 1e-14);
        let s = matfun(&real_diag(&[4.0, 9.0]), MatFun::Sqrt).unwrap();
        assert!(fro(&(&s - &real_diag(&[2.0, 3.0]))) < 1e-14);
        let g = matfun(&real_diag(&[2.0, 0.0]), MatFun::GenInverse).unwrap();
        assert!(fro(&(&g - &real_diag(&[0.5, 0.0]))) < 1e-15);
        assert!(matches!(
            matfun(&real_diag(&[1.0, 0.0]), MatFun::Log),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn exp_log_roundtrip_random_positive() {
        let mut r = random::rng(5);
        for _ in 0..5 {
            let rho = random::density(&mut r, 6);
            let l = matfun(&rho, MatFun::Log).unwrap();
            let back = matfun(&l, MatFun::Exp).unwrap();
            assert!(fro(&(&back - &rho)) < 1e-8);
        }
    }

    #[test]
    fn general_expm_matches_spectral() {
        let mut r = random::rng(9);
        let h = random::hermitian(&mut r, 6);
        let a = scaled(&h, cx(0.0, 1.3));
        let e1 = expm(&a);
        let sp = eigh(&h).unwrap();
        let fv: Vec<c64> = sp.values.iter().map(|&x| cx(0.0, 1.3 * x).exp()).collect();
        let e2 = sp.apply_complex(&fv);
        assert!(fro(&(&e1 - &e2)) < 1e-11);
        let big = scaled(&h, cr(9.0));
        let e3 = expm(&big);
        let e4 = matfun(&big, MatFun::Exp).unwrap();
        assert!(fro(&(&e3 - &e4)) <= 1e-10 * fro(&e4));
    }

    #[test]
    fn norms_agree() {
        let mut r = random::rng(11);
        let a = random::ginibre(&mut r, 5, 5);
        let sv = singular_values(&a);
        assert!((op_norm(&a) - sv[0]).abs() < 1e-12);
        assert!((trace_norm(&a) - sv.iter().sum::<f64>()).abs() < 1e-11);
        assert!((schatten(&a, 2.0) - fro(&a)).abs() < 1e-11);
    }

    #[test]
    fn holder_inequality() {
        let mut r = random::rng(12);
        for (p, q) in [(1.0, f64::INFINITY), (2.0, 2.0), (3.0, 1.5)] {
            let x = random::ginibre(&mut r, 4, 4);
            let y = random::ginibre(&mut r, 4, 4);
            let lhs = hs(&x, &y).norm();
            assert!(lhs <= schatten(&x, p) * schatten(&y, q) + 1e-12);
        }
    }

    #[test]
    fn null_space_and_span() {
        let mut a = zeros(3, 3);
        a[(0, 0)] = cr(1.0);
        a[(1, 1)] = cr(2.0);
        let ns = null_space(&a, 1e-10);
        assert_eq!(ns.ncols(), 1);
        assert!(ns[(2, 0)].norm() > 0.999);
        let sp = column_span(&a, 1e-10);
        assert_eq!(sp.ncols(), 2);
    }

    #[test]
    fn sandwich_superop_matches_product() {
        let mut r = random::rng(13);
        let a = random::ginibre(&mut r, 3, 3);
        let b = random::ginibre(&mut r, 3, 3);
        let x = random::ginibre(&mut r, 3, 3);
        let s = sandwich_superop(&a, &b);
        let y = unvec_rm(&matvec(&s, &vec_rm(&x)), 3, 3);
        assert!(fro(&(&y - &(&(&a * &x) * &b))) < 1e-12);
    }
}

//! Site-tagged operators and states, σ-weighted norms and inner products.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c64, check_dim, cr, eigh, eye, herm_asymmetry, matfun_spectrum, scaled, schatten, trace,
    CMat, MatFun, Spectrum,
};
use crate::tensor::{embed_sub, ipow, partial_trace_keep, Split};

/// A square matrix acting on the ordered sites in `support`.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    pub mat: CMat,
    pub support: Vec<usize>,
    pub d: usize,
}

impl DenseOperator {
    pub fn new(mat: CMat, support: Vec<usize>, d: usize) -> Result<Self> {
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Argument("support must be strictly increasing".into()));
        }
        let dim = ipow(d, support.len());
        check_dim(dim)?;
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(Error::Argument(format!(
                "matrix is {}x{}, support needs {dim}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(DenseOperator { mat, support, d })
    }

    pub fn identity(support: Vec<usize>, d: usize) -> Result<Self> {
        let dim = ipow(d, support.len());
        check_dim(dim)?;
        Self::new(eye(dim), support, d)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Tensor with the identity on `full_support \ support`.
    pub fn embed(&self, full_support: &[usize]) -> Result<DenseOperator> {
        let pos = positions_in(full_support, &self.support)?;
        check_dim(ipow(self.d, full_support.len()))?;
        let sp = Split::new(full_support.len(), self.d, &pos);
        Self::new(embed_sub(&self.mat, &sp), full_support.to_vec(), self.d)
    }

    /// Traces out `traced` (a subset of the support).
    pub fn partial_trace(&self, traced: &[usize]) -> Result<DenseOperator> {
        positions_in(&self.support, traced)?;
        let keep: Vec<usize> = self
            .support
            .iter()
            .copied()
            .filter(|s| !traced.contains(s))
            .collect();
        let pos = positions_in(&self.support, &keep)?;
        let sp = Split::new(self.support.len(), self.d, &pos);
        Self::new(partial_trace_keep(&self.mat, &sp), keep, self.d)
    }

    pub fn herm_eig(&self) -> Result<Spectrum> {
        eigh(&self.mat)
    }

    pub fn matfun(&self, f: MatFun) -> Result<DenseOperator> {
        let sp = self.herm_eig()?;
        Ok(DenseOperator {
            mat: matfun_spectrum(&sp, f)?,
            support: self.support.clone(),
            d: self.d,
        })
    }

    pub fn to_json(&self) -> OperatorJson {
        let n = self.dim();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let z = self.mat[(i, j)];
                entries.push([z.re, z.im]);
            }
        }
        OperatorJson {
            support: self.support.clone(),
            d: self.d,
            entries,
        }
    }

    pub fn from_json(j: &OperatorJson) -> Result<DenseOperator> {
        let dim = ipow(j.d, j.support.len());
        if j.entries.len() != dim * dim {
            return Err(Error::Argument("entry count does not match support".into()));
        }
        let mat = CMat::from_fn(dim, dim, |r, c| {
            let e = j.entries[r * dim + c];
            c64::new(e[0], e[1])
        });
        Self::new(mat, j.support.clone(), j.d)
    }
}

/// Row-major `[re, im]` pairs.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct OperatorJson {
    pub support: Vec<usize>,
    pub d: usize,
    pub entries: Vec<[f64; 2]>,
}

/// Positions of `sites` inside the ordered list `support`.
pub fn positions_in(support: &[usize], sites: &[usize]) -> Result<Vec<usize>> {
    sites
        .iter()
        .map(|s| {
            support
                .iter()
                .position(|x| x == s)
                .ok_or_else(|| Error::Argument(format!("site {s} not in support {support:?}")))
        })
        .collect()
}

/// A density operator: Hermitian, positive semidefinite, unit trace.
#[derive(Clone, Debug)]
pub struct QuantumState(DenseOperator);

pub const STATE_TOL: f64 = 1e-10;

impl QuantumState {
    pub fn new(op: DenseOperator) -> Result<Self> {
        validate_state(&op.mat)?;
        Ok(QuantumState(op))
    }

    pub fn op(&self) -> &DenseOperator {
        &self.0
    }

    pub fn mat(&self) -> &CMat {
        &self.0.mat
    }

    pub fn into_op(self) -> DenseOperator {
        self.0
    }
}

pub fn validate_state(m: &CMat) -> Result<()> {
    let asym = herm_asymmetry(m);
    if asym > STATE_TOL {
        return Err(Error::Argument(format!("state not Hermitian ({asym:.2e})")));
    }
    let t = trace(m);
    if (t.re - 1.0).abs() > STATE_TOL || t.im.abs() > STATE_TOL {
        return Err(Error::Argument(format!("state trace {t} != 1")));
    }
    let sp = eigh(m)?;
    if sp.min_value() < -STATE_TOL {
        return Err(Error::Argument(format!(
            "state has negative eigenvalue {:.3e}",
            sp.min_value()
        )));
    }
    Ok(())
}

fn full_rank_spectrum(sigma: &CMat) -> Result<Spectrum> {
    let sp = eigh(sigma)?;
    if sp.min_value() <= 1e-14 * sp.max_abs().max(1e-300) {
        return Err(Error::Domain("reference state is not full rank".into()));
    }
    Ok(sp)
}

/// ‖X‖_{p,σ} = Tr[|σ^{1/2p} X σ^{1/2p}|^p]^{1/p}, operator norm at p = ∞.
pub fn weighted_norm(x: &CMat, sigma: &CMat, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Argument(format!("p = {p} must be >= 1")));
    }
    let sp = full_rank_spectrum(sigma)?;
    if p.is_infinite() {
        return Ok(schatten(x, p));
    }
    let w = sp.apply(|l| l.powf(0.5 / p));
    let y = &(&w * x) * &w;
    Ok(schatten(&y, p))
}

/// Tr[√σ X^† √σ Y]
pub fn kms_inner(x: &CMat, y: &CMat, sigma: &CMat) -> Result<c64> {
    let sp = full_rank_spectrum(sigma)?;
    let s = sp.apply(f64::sqrt);
    let t = &(&(&s * x.adjoint()) * &s) * y;
    Ok(trace(&t))
}

/// Tr[σ X^† Y]
pub fn gns_inner(x: &CMat, y: &CMat, sigma: &CMat) -> Result<c64> {
    full_rank_spectrum(sigma)?;
    let t = &(sigma * x.adjoint()) * y;
    Ok(trace(&t))
}

/// Δ_σ^{is}(X) = σ^{is} X σ^{-is}
pub fn modular_conjugate(x: &CMat, sigma: &CMat, s: f64) -> Result<CMat> {
    let sp = full_rank_spectrum(sigma)?;
    Ok(modular_conjugate_spectrum(x, &sp, s))
}

pub fn modular_conjugate_spectrum(x: &CMat, sp: &Spectrum, s: f64) -> CMat {
    let ph: Vec<c64> = sp
        .values
        .iter()
        .map(|&l| c64::new(0.0, s * l.max(1e-300).ln()).exp())
        .collect();
    let u = sp.apply_complex(&ph);
    &(&u * x) * u.adjoint()
}

/// The maximally mixed state on `dim`.
pub fn maximally_mixed(dim: usize) -> CMat {
    scaled(&eye(dim), cr(1.0 / dim as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{fro, hs, kron, random, real_diag};
    use proptest::prelude::*;

    fn pauli_x() -> CMat {
        let mut m = crate::linalg::zeros(2, 2);
        m[(0, 1)] = cr(1.0);
        m[(1, 0)] = cr(1.0);
        m
    }

    #[test]
    fn embed_examples() {
        let z = DenseOperator::new(real_diag(&[1.0, -1.0]), vec![0], 2).unwrap();
        let e = z.embed(&[0, 1]).unwrap();
        assert!(fro(&(&e.mat - &kron(&z.mat, &eye(2)))) < 1e-15);
        let x = DenseOperator::new(pauli_x(), vec![1], 2).unwrap();
        let e = x.embed(&[0, 1, 2]).unwrap();
        let k = kron(&kron(&eye(2), &pauli_x()), &eye(2));
        assert!(fro(&(&e.mat - &k)) < 1e-15);
        let id = DenseOperator::identity(vec![3], 2).unwrap();
        assert!(fro(&(&id.embed(&[1, 3, 4]).unwrap().mat - &eye(8))) < 1e-15);
        assert!(matches!(x.embed(&[0, 2]), Err(Error::Argument(_))));
    }

    #[test]
    fn bell_partial_trace() {
        let mut bell = crate::linalg::zeros(4, 4);
        for &(i, j) in &[(0, 0), (0, 3), (3, 0), (3, 3)] {
            bell[(i, j)] = cr(0.5);
        }
        let op = DenseOperator::new(bell, vec![0, 1], 2).unwrap();
        let r = op.partial_trace(&[1]).unwrap();
        assert!(fro(&(&r.mat - &maximally_mixed(2))) < 1e-15);
        assert_eq!(r.support, vec![0]);
        assert!(matches!(op.partial_trace(&[5]), Err(Error::Argument(_))));
    }

    #[test]
    fn partial_trace_after_embed_scales() {
        let mut r = random::rng(4);
        let a = random::hermitian(&mut r, 2);
        let op = DenseOperator::new(a.clone(), vec![1], 2).unwrap();
        let e = op.embed(&[0, 1, 2]).unwrap();
        let back = e.partial_trace(&[0, 2]).unwrap();
        assert!(fro(&(&back.mat - &scaled(&a, cr(4.0)))) < 1e-13);
    }

    #[test]
    fn weighted_norm_examples() {
        let mut r = random::rng(5);
        let sigma = random::density(&mut r, 4);
        assert!((weighted_norm(&eye(4), &sigma, 1.0).unwrap() - 1.0).abs() < 1e-12);
        let x = random::hermitian(&mut r, 4);
        let mm = maximally_mixed(4);
        for p in [1.0, 2.0, 3.0] {
            let lhs = weighted_norm(&x, &mm, p).unwrap();
            let rhs = 4f64.powf(-1.0 / p) * schatten(&x, p);
            assert!((lhs - rhs).abs() < 1e-12);
        }
        let singular = real_diag(&[1.0, 0.0]);
        assert!(matches!(
            weighted_norm(&eye(2), &singular, 2.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn inner_product_examples() {
        let mut r = random::rng(6);
        let sigma = random::density(&mut r, 3);
        let k = kms_inner(&eye(3), &eye(3), &sigma).unwrap();
        assert!((k.re - 1.0).abs() < 1e-12 && k.im.abs() < 1e-12);
        let x = random::ginibre(&mut r, 3, 3);
        let y = random::ginibre(&mut r, 3, 3);
        let g1 = gns_inner(&x, &y, &sigma).unwrap();
        let g2 = gns_inner(&y, &x, &sigma).unwrap();
        assert!((g1 - g2.conj()).norm() < 1e-12);
        let mm = maximally_mixed(3);
        let a = kms_inner(&x, &y, &mm).unwrap();
        let b = gns_inner(&x, &y, &mm).unwrap();
        let c = hs(&x, &y) / 3.0;
        assert!((a - c).norm() < 1e-12 && (b - c).norm() < 1e-12);
        let kk = kms_inner(&x, &x, &sigma).unwrap();
        assert!(kk.re >= 0.0 && kk.im.abs() < 1e-12);
    }

    #[test]
    fn modular_examples() {
        let mut r = random::rng(7);
        let sigma = random::density(&mut r, 4);
        let x = random::ginibre(&mut r, 4, 4);
        let y = modular_conjugate(&x, &sigma, 0.0).unwrap();
        assert!(fro(&(&y - &x)) < 1e-12);
        let y = modular_conjugate(&sigma, &sigma, 1.7).unwrap();
        assert!(fro(&(&y - &sigma)) < 1e-12);
        for s in [0.3, 1.1, -2.0] {
            let y = modular_conjugate(&x, &sigma, s).unwrap();
            let a = weighted_norm(&x, &sigma, 2.0).unwrap();
            let b = weighted_norm(&y, &sigma, 2.0).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn json_roundtrip() {
        let mut r = random::rng(8);
        let op = DenseOperator::new(random::ginibre(&mut r, 4, 4), vec![2, 5], 2).unwrap();
        let j = serde_json::to_string(&op.to_json()).unwrap();
        let back: OperatorJson = serde_json::from_str(&j).unwrap();
        let back = DenseOperator::from_json(&back).unwrap();
        assert!(fro(&(&back.mat - &op.mat)) < 1e-14);
        assert_eq!(back.support, op.support);
    }

    #[test]
    fn state_validation() {
        assert!(QuantumState::new(DenseOperator::new(maximally_mixed(2), vec![0], 2).unwrap()).is_ok());
        let bad = real_diag(&[1.2, -0.2]);
        assert!(QuantumState::new(DenseOperator::new(bad, vec![0], 2).unwrap()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn norm_monotone_in_p(seed in 0u64..1000) {
            let mut r = random::rng(seed);
            let sigma = random::density(&mut r, 4);
            let x = random::hermitian(&mut r, 4);
            let n1 = weighted_norm(&x, &sigma, 1.0).unwrap();
            let n2 = weighted_norm(&x, &sigma, 2.0).unwrap();
            let ni = weighted_norm(&x, &sigma, f64::INFINITY).unwrap();
            prop_assert!(n1 <= n2 + 1e-10 && n2 <= ni + 1e-10);
        }

        #[test]
        fn norms_unitarily_invariant(seed in 0u64..1000) {
            let mut r = random::rng(seed);
            let sigma = random::density(&mut r, 3);
            let x = random::ginibre(&mut r, 3, 3);
            let u = random::unitary(&mut r, 3);
            let ud = u.adjoint().to_owned();
            let x2 = &(&u * &x) * &ud;
            let s2 = &(&u * &sigma) * &ud;
            for p in [1.0, 2.0, 4.0] {
                let a = weighted_norm(&x, &sigma, p).unwrap();
                let b = weighted_norm(&x2, &s2, p).unwrap();
                prop_assert!((a - b).abs() < 1e-9 * a.max(1.0));
            }
        }
    }
}

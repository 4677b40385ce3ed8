//! Linear maps on operators, either as explicit matrices (row-major
//! vectorization) or as sums of local pieces / closures, and conditional
//! expectations with their structural checks.

use std::sync::Arc;

use faer::Mat;

use crate::error::{Error, Result};
use crate::linalg::{
    c64, cr, dagger, eigh_sym, eye, fro, random, scaled, symmetrize, trace, trace_prod, unvec_rm, vec_rm, zeros,
    CMat, Spectrum,
};
use crate::operator::modular_conjugate_spectrum;
use crate::tensor::{apply_local_superop, Split};

/// Largest Hilbert dimension for which a superoperator is materialized as a
/// matrix (a 1024 × 1024 superoperator).
pub const DENSE_SUPEROP_MAX_DIM: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Picture {
    Heisenberg,
    Schrodinger,
}

impl Picture {
    pub fn flip(self) -> Picture {
        match self {
            Picture::Heisenberg => Picture::Schrodinger,
            Picture::Schrodinger => Picture::Heisenberg,
        }
    }
}

/// A superoperator matrix acting on a subset of positions, tensored with
/// the identity elsewhere.
#[derive(Clone)]
pub struct LocalTerm {
    pub split: Arc<Split>,
    pub mat: CMat,
}

impl LocalTerm {
    pub fn new(n: usize, d: usize, positions: &[usize], mat: CMat) -> LocalTerm {
        LocalTerm {
            split: Arc::new(Split::new(n, d, positions)),
            mat,
        }
    }

    pub fn apply(&self, x: &CMat) -> CMat {
        apply_local_superop(&self.mat, x, &self.split)
    }

    pub fn adjoint(&self) -> LocalTerm {
        LocalTerm {
            split: self.split.clone(),
            mat: dagger(&self.mat),
        }
    }
}

type MapFn = Arc<dyn Fn(&CMat) -> CMat + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Dense(CMat),
    /// Σ_k terms_k(X) + c (H X − X H)
    Local {
        terms: Vec<LocalTerm>,
        commutator: Option<(CMat, c64)>,
    },
    Func { fwd: MapFn, adj: Option<MapFn> },
}

#[derive(Clone)]
pub struct Superoperator {
    pub dim: usize,
    pub picture: Picture,
    repr: Repr,
}

impl std::fmt::Debug for Superoperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match &self.repr {
            Repr::Dense(_) => "dense",
            Repr::Local { .. } => "local",
            Repr::Func { .. } => "func",
        };
        write!(f, "Superoperator({kind}, dim {}, {:?})", self.dim, self.picture)
    }
}

impl Superoperator {
    pub fn dense(mat: CMat, dim: usize, picture: Picture) -> Superoperator {
        assert_eq!(mat.nrows(), dim * dim);
        Superoperator {
            dim,
            picture,
            repr: Repr::Dense(mat),
        }
    }

    pub fn local(dim: usize, picture: Picture, terms: Vec<LocalTerm>, commutator: Option<(CMat, c64)>) -> Superoperator {
        Superoperator {
            dim,
            picture,
            repr: Repr::Local { terms, commutator },
        }
    }

    pub fn from_fn(
        dim: usize,
        picture: Picture,
        fwd: impl Fn(&CMat) -> CMat + Send + Sync + 'static,
        adj: Option<MapFn>,
    ) -> Superoperator {
        Superoperator {
            dim,
            picture,
            repr: Repr::Func {
                fwd: Arc::new(fwd),
                adj,
            },
        }
    }

    pub fn identity(dim: usize, picture: Picture) -> Superoperator {
        Superoperator::from_fn(dim, picture, |x| x.clone(), Some(Arc::new(|x: &CMat| x.clone())))
    }

    pub fn zero(dim: usize, picture: Picture) -> Superoperator {
        Superoperator::local(dim, picture, Vec::new(), None)
    }

    pub fn local_terms(&self) -> Option<&[LocalTerm]> {
        match &self.repr {
            Repr::Local { terms, .. } => Some(terms),
            _ => None,
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.repr, Repr::Dense(_))
    }

    pub fn apply(&self, x: &CMat) -> CMat {
        match &self.repr {
            Repr::Dense(m) => unvec_rm(&crate::linalg::matvec(m, &vec_rm(x)), self.dim, self.dim),
            Repr::Local { terms, commutator } => {
                let mut out = zeros(self.dim, self.dim);
                for t in terms {
                    out += t.apply(x);
                }
                if let Some((h, c)) = commutator {
                    let comm = &(h * x) - &(x * h);
                    out += crate::linalg::scaled(&comm, *c);
                }
                out
            }
            Repr::Func { fwd, .. } => fwd(x),
        }
    }

    /// Hilbert-Schmidt adjoint (switches picture).
    pub fn adjoint(&self) -> Result<Superoperator> {
        let repr = match &self.repr {
            Repr::Dense(m) => Repr::Dense(dagger(m)),
            Repr::Local { terms, commutator } => Repr::Local {
                terms: terms.iter().map(|t| t.adjoint()).collect(),
                commutator: commutator.as_ref().map(|(h, c)| (h.clone(), c.conj())),
            },
            Repr::Func { fwd, adj } => match adj {
                Some(a) => Repr::Func {
                    fwd: a.clone(),
                    adj: Some(fwd.clone()),
                },
                None => {
                    if self.dim <= DENSE_SUPEROP_MAX_DIM {
                        Repr::Dense(dagger(&self.to_dense()?))
                    } else {
                        return Err(Error::Argument("adjoint unavailable for this map".into()));
                    }
                }
            },
        };
        Ok(Superoperator {
            dim: self.dim,
            picture: self.picture.flip(),
            repr,
        })
    }

    /// Explicit matrix in row-major vectorization.
    pub fn to_dense(&self) -> Result<CMat> {
        if let Repr::Dense(m) = &self.repr {
            return Ok(m.clone());
        }
        let n = self.dim;
        if n > DENSE_SUPEROP_MAX_DIM {
            return Err(Error::Resource(format!(
                "dense superoperator on dimension {n} exceeds {DENSE_SUPEROP_MAX_DIM}"
            )));
        }
        let mut m = zeros(n * n, n * n);
        let mut unit = zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                unit[(i, j)] = cr(1.0);
                let y = self.apply(&unit);
                unit[(i, j)] = cr(0.0);
                let col = i * n + j;
                for a in 0..n {
                    for b in 0..n {
                        m[(a * n + b, col)] = y[(a, b)];
                    }
                }
            }
        }
        Ok(m)
    }

    pub fn densified(&self) -> Result<Superoperator> {
        Ok(Superoperator::dense(self.to_dense()?, self.dim, self.picture))
    }

    /// self ∘ other
    pub fn compose(&self, other: &Superoperator) -> Superoperator {
        if let (Repr::Dense(a), Repr::Dense(b)) = (&self.repr, &other.repr) {
            return Superoperator::dense(a * b, self.dim, self.picture);
        }
        let (a, b) = (self.clone(), other.clone());
        let adj = match (self.adjoint(), other.adjoint()) {
            (Ok(aa), Ok(bb)) => Some(Arc::new(move |x: &CMat| bb.apply(&aa.apply(x))) as MapFn),
            _ => None,
        };
        Superoperator::from_fn(self.dim, self.picture, move |x| a.apply(&b.apply(x)), adj)
    }

    /// Σ_k c_k S_k
    pub fn lincomb(parts: &[(f64, Superoperator)]) -> Superoperator {
        let dim = parts[0].1.dim;
        let picture = parts[0].1.picture;
        if parts.iter().all(|(_, s)| s.is_dense()) {
            let mut m = zeros(dim * dim, dim * dim);
            for (c, s) in parts {
                if let Repr::Dense(x) = &s.repr {
                    m += crate::linalg::scaled(x, cr(*c));
                }
            }
            return Superoperator::dense(m, dim, picture);
        }
        let fwd_parts: Vec<(f64, Superoperator)> = parts.to_vec();
        let adj_parts: Option<Vec<(f64, Superoperator)>> = parts
            .iter()
            .map(|(c, s)| s.adjoint().ok().map(|a| (*c, a)))
            .collect();
        let adj = adj_parts.map(|ap| {
            Arc::new(move |x: &CMat| {
                let mut out = zeros(x.nrows(), x.ncols());
                for (c, s) in &ap {
                    out += crate::linalg::scaled(&s.apply(x), cr(*c));
                }
                out
            }) as MapFn
        });
        Superoperator::from_fn(
            dim,
            picture,
            move |x| {
                let mut out = zeros(x.nrows(), x.ncols());
                for (c, s) in &fwd_parts {
                    out += crate::linalg::scaled(&s.apply(x), cr(*c));
                }
                out
            },
            adj,
        )
    }

    /// S ⊗ id_k on (system ⊗ ancilla), ancilla of dimension k.
    pub fn extend_with_ancilla(&self, k: usize) -> Superoperator {
        let inner = self.clone();
        let dim = self.dim;
        let apply = move |s: &Superoperator, x: &CMat| -> CMat {
            let mut out = zeros(dim * k, dim * k);
            for a in 0..k {
                for b in 0..k {
                    let blk = Mat::from_fn(dim, dim, |i, j| x[(i * k + a, j * k + b)]);
                    let y = s.apply(&blk);
                    for i in 0..dim {
                        for j in 0..dim {
                            out[(i * k + a, j * k + b)] = y[(i, j)];
                        }
                    }
                }
            }
            out
        };
        let adj = self.adjoint().ok().map(|a| {
            let ap = apply.clone();
            Arc::new(move |x: &CMat| ap(&a, x)) as MapFn
        });
        Superoperator::from_fn(dim * k, self.picture, move |x| apply(&inner, x), adj)
    }
}

/// A conditional expectation given in both pictures, with the state it
/// preserves.
#[derive(Clone)]
pub struct ConditionalExpectation {
    pub heis: Superoperator,
    pub schr: Superoperator,
    pub sigma: CMat,
    pub label: String,
}

#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct CondExpReport {
    pub idempotence: f64,
    pub unitality: f64,
    pub sigma_invariance: f64,
    pub duality: f64,
    pub choi_min_eig: f64,
    pub modular: f64,
}

impl CondExpReport {
    pub fn passes(&self, tol: f64, choi_tol: f64) -> bool {
        self.idempotence < tol
            && self.unitality < tol
            && self.sigma_invariance < tol
            && self.duality < tol
            && self.choi_min_eig >= -choi_tol
            && self.modular < tol
    }
}

impl ConditionalExpectation {
    /// X ↦ Tr[σX] 1, the expectation onto the scalars.
    pub fn trace_map(sigma: &CMat) -> ConditionalExpectation {
        let n = sigma.nrows();
        let (s1, s2, s3) = (sigma.clone(), sigma.clone(), sigma.clone());
        let heis_fwd = move |x: &CMat| scaled(&eye(n), trace_prod(&s1, x));
        let schr_fwd = move |r: &CMat| scaled(&s2, trace(r));
        let s4 = sigma.clone();
        let heis = Superoperator::from_fn(
            n,
            Picture::Heisenberg,
            heis_fwd,
            Some(Arc::new(move |r: &CMat| scaled(&s4, trace(r)))),
        );
        let schr = Superoperator::from_fn(
            n,
            Picture::Schrodinger,
            schr_fwd,
            Some(Arc::new(move |x: &CMat| scaled(&eye(n), trace_prod(&s3, x)))),
        );
        ConditionalExpectation {
            heis,
            schr,
            sigma: sigma.clone(),
            label: "trace".into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.heis.dim
    }

    pub fn apply(&self, x: &CMat) -> CMat {
        self.heis.apply(x)
    }

    pub fn apply_state(&self, rho: &CMat) -> CMat {
        symmetrize(&self.schr.apply(rho))
    }

    /// Checks all structural properties on random Hermitian and general
    /// inputs; the Choi matrix is formed only for small dimensions.
    pub fn report(&self, samples: usize, seed: u64, s_values: &[f64]) -> CondExpReport {
        let n = self.dim();
        let mut rng = random::rng(seed);
        let mut rep = CondExpReport::default();
        rep.unitality = fro(&(&self.apply(&eye(n)) - &eye(n)));
        rep.sigma_invariance = fro(&(&self.apply_state(&self.sigma) - &self.sigma));
        let sig_sp = eigh_sym(&self.sigma);
        for _ in 0..samples {
            let x = random::ginibre(&mut rng, n, n);
            let nx = fro(&x);
            let ex = self.apply(&x);
            rep.idempotence = rep.idempotence.max(fro(&(&self.apply(&ex) - &ex)) / nx);
            let rho = random::density(&mut rng, n);
            let lhs = trace_prod(&self.schr.apply(&rho), &x);
            let rhs = trace_prod(&rho, &ex);
            rep.duality = rep.duality.max((lhs - rhs).norm() / nx);
            for &s in s_values {
                let a = modular_conjugate_spectrum(&ex, &sig_sp, s);
                let b = self.apply(&modular_conjugate_spectrum(&x, &sig_sp, s));
                rep.modular = rep.modular.max(fro(&(&a - &b)) / nx);
            }
        }
        rep.choi_min_eig = if n <= DENSE_SUPEROP_MAX_DIM {
            choi_min_eig(&self.heis)
        } else {
            f64::NAN
        };
        rep
    }
}

/// Smallest eigenvalue of the Choi matrix Σ_ij E_ij ⊗ Φ(E_ij).
pub fn choi_min_eig(phi: &Superoperator) -> f64 {
    choi_spectrum(phi).min_value()
}

pub fn choi_spectrum(phi: &Superoperator) -> Spectrum {
    let n = phi.dim;
    let mut choi = zeros(n * n, n * n);
    let mut unit = zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            unit[(i, j)] = cr(1.0);
            let y = phi.apply(&unit);
            unit[(i, j)] = cr(0.0);
            for a in 0..n {
                for b in 0..n {
                    choi[(i * n + a, j * n + b)] = y[(a, b)];
                }
            }
        }
    }
    eigh_sym(&choi)
}

/// Largest Frobenius difference of two maps over random inputs, relative to
/// the input norm.
pub fn sampled_difference(a: &Superoperator, b: &Superoperator, samples: usize, seed: u64) -> f64 {
    let mut rng = random::rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x = random::ginibre(&mut rng, a.dim, a.dim);
        worst = worst.max(fro(&(&a.apply(&x) - &b.apply(&x))) / fro(&x));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, sandwich_superop, trace};

    #[test]
    fn dense_and_local_agree() {
        let mut r = random::rng(1);
        let a = random::ginibre(&mut r, 2, 2);
        let b = random::ginibre(&mut r, 2, 2);
        let s = sandwich_superop(&a, &b);
        let local = Superoperator::local(
            8,
            Picture::Heisenberg,
            vec![LocalTerm::new(3, 2, &[1], s)],
            Some((random::hermitian(&mut r, 8), c64::new(0.0, 1.0))),
        );
        let dense = local.densified().unwrap();
        assert!(sampled_difference(&local, &dense, 5, 2) < 1e-12);
        let la = local.adjoint().unwrap();
        let da = dense.adjoint().unwrap();
        assert!(sampled_difference(&la, &da, 5, 3) < 1e-12);
        let x = random::ginibre(&mut r, 8, 8);
        let y = random::ginibre(&mut r, 8, 8);
        let lhs = trace_prod(&dagger(&y), &local.apply(&x));
        let rhs = trace_prod(&dagger(&la.apply(&y)), &x);
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn ancilla_extension() {
        let mut r = random::rng(4);
        let a = random::ginibre(&mut r, 2, 2);
        let s = Superoperator::dense(sandwich_superop(&a, &dagger(&a)), 2, Picture::Schrodinger);
        let ext = s.extend_with_ancilla(3);
        let x = random::ginibre(&mut r, 2, 2);
        let y = random::ginibre(&mut r, 3, 3);
        let out = ext.apply(&kron(&x, &y));
        let want = kron(&s.apply(&x), &y);
        assert!(fro(&(&out - &want)) < 1e-12);
    }

    #[test]
    fn trace_condexp_report() {
        // E(X) = Tr[σX] 1 is a conditional expectation onto the scalars.
        let mut r = random::rng(5);
        let sigma = random::density(&mut r, 3);
        let s1 = sigma.clone();
        let s2 = sigma.clone();
        let heis = Superoperator::from_fn(3, Picture::Heisenberg, move |x| {
            crate::linalg::scaled(&eye(3), trace_prod(&s1, x))
        }, None);
        let schr = Superoperator::from_fn(3, Picture::Schrodinger, move |x| {
            crate::linalg::scaled(&s2, trace(x))
        }, None);
        let e = ConditionalExpectation {
            heis,
            schr,
            sigma,
            label: "trace".into(),
        };
        let rep = e.report(4, 6, &[0.3, 1.0, 2.7]);
        assert!(rep.passes(1e-10, 1e-10), "{rep:?}");
    }
}

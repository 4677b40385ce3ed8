//! Edge potentials, local Hamiltonians, Gibbs states and Araki expansionals.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Region, SpinGraph};
use crate::linalg::{
    check_dim, cr, cx, eigh, fro, herm_asymmetry, symmetrize, HERM_TOL, kron, matfun, op_norm, random, real_diag, scaled, zeros,
    CMat, MatFun, Spectrum,
};
use crate::operator::{positions_in, DenseOperator, QuantumState};
use crate::tensor::{embed_sub, ipow, partial_trace_keep, Split};

pub fn pauli(c: char) -> CMat {
    let mut m = zeros(2, 2);
    match c {
        'I' => {
            m[(0, 0)] = cr(1.0);
            m[(1, 1)] = cr(1.0);
        }
        'X' => {
            m[(0, 1)] = cr(1.0);
            m[(1, 0)] = cr(1.0);
        }
        'Y' => {
            m[(0, 1)] = cx(0.0, -1.0);
            m[(1, 0)] = cx(0.0, 1.0);
        }
        'Z' => {
            m[(0, 0)] = cr(1.0);
            m[(1, 1)] = cr(-1.0);
        }
        _ => panic!("unknown Pauli label {c}"),
    }
    m
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Ising {
        #[serde(rename = "J")]
        j: f64,
        g: f64,
    },
    Potts {
        #[serde(rename = "J")]
        j: f64,
    },
    RandomCommuting {
        seed: u64,
    },
    Heisenberg {
        jx: f64,
        jy: f64,
        jz: f64,
    },
    /// Edge terms supplied directly.
    Custom,
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Ising { .. } => "ising",
            ModelSpec::Potts { .. } => "potts",
            ModelSpec::RandomCommuting { .. } => "random_commuting",
            ModelSpec::Heisenberg { .. } => "heisenberg",
            ModelSpec::Custom => "custom",
        }
    }
}

/// A nearest-neighbour potential: one Hermitian term per edge, ordered as
/// (smaller vertex, larger vertex).
#[derive(Clone, Debug)]
pub struct Potential {
    pub graph: SpinGraph,
    pub model: ModelSpec,
    terms: Vec<((usize, usize), CMat)>,
    pub j_bound: f64,
    pub commuting: bool,
}

impl Potential {
    pub fn build(graph: &SpinGraph, model: ModelSpec) -> Result<Potential> {
        let d = graph.d;
        let mut terms = Vec::new();
        match &model {
            ModelSpec::Ising { j, g } => {
                if d != 2 {
                    return Err(Error::Config("ising needs local dimension 2".into()));
                }
                let z = pauli('Z');
                let id = pauli('I');
                for &(a, b) in graph.edges() {
                    let ga = g / graph.degree(a) as f64;
                    let gb = g / graph.degree(b) as f64;
                    let t = &scaled(&kron(&z, &z), cr(*j))
                        + &(&scaled(&kron(&z, &id), cr(ga)) + &scaled(&kron(&id, &z), cr(gb)));
                    terms.push(((a, b), t));
                }
            }
            ModelSpec::Potts { j } => {
                let mut t = vec![0.0; d * d];
                for k in 0..d {
                    t[k * d + k] = -j;
                }
                let t = real_diag(&t);
                for &e in graph.edges() {
                    terms.push((e, t.clone()));
                }
            }
            ModelSpec::RandomCommuting { seed } => {
                let mut rng = random::rng(*seed);
                let us: Vec<CMat> = (0..graph.n()).map(|_| random::unitary(&mut rng, d)).collect();
                for &(a, b) in graph.edges() {
                    let diag: Vec<f64> = (0..d * d)
                        .map(|_| random::uniform(&mut rng, -1.0, 1.0))
                        .collect();
                    let u = kron(&us[a], &us[b]);
                    let t = &(&u * &real_diag(&diag)) * u.adjoint();
                    terms.push(((a, b), t));
                }
            }
            ModelSpec::Heisenberg { jx, jy, jz } => {
                if d != 2 {
                    return Err(Error::Config("heisenberg needs local dimension 2".into()));
                }
                let t = &(&scaled(&kron(&pauli('X'), &pauli('X')), cr(*jx))
                    + &scaled(&kron(&pauli('Y'), &pauli('Y')), cr(*jy)))
                    + &scaled(&kron(&pauli('Z'), &pauli('Z')), cr(*jz));
                for &e in graph.edges() {
                    terms.push((e, t.clone()));
                }
            }
            ModelSpec::Custom => {
                return Err(Error::Config(
                    "custom models are built with Potential::from_terms".into(),
                ))
            }
        }
        Self::assemble(graph, model, terms)
    }

    /// Potential from explicit edge terms (each a d²×d² Hermitian matrix
    /// ordered as (smaller vertex, larger vertex)).
    pub fn from_terms(graph: &SpinGraph, terms: Vec<((usize, usize), CMat)>) -> Result<Potential> {
        Self::assemble(graph, ModelSpec::Custom, terms)
    }

    fn assemble(
        graph: &SpinGraph,
        model: ModelSpec,
        mut terms: Vec<((usize, usize), CMat)>,
    ) -> Result<Potential> {
        let d = graph.d;
        for ((a, b), t) in &mut terms {
            if *a > *b {
                return Err(Error::Config(format!("edge term ({a},{b}) must be ordered")));
            }
            if !graph.edges().contains(&(*a, *b)) {
                return Err(Error::Config(format!("({a},{b}) is not an edge")));
            }
            if t.nrows() != d * d || t.ncols() != d * d {
                return Err(Error::Config("edge term has wrong dimension".into()));
            }
            if herm_asymmetry(t) > HERM_TOL {
                return Err(Error::Config("edge term not Hermitian".into()));
            }
            *t = symmetrize(t);
        }
        let j_bound = terms.iter().map(|(_, t)| op_norm(t)).fold(0.0, f64::max);
        let mut p = Potential {
            graph: graph.clone(),
            model,
            terms,
            j_bound,
            commuting: false,
        };
        p.commuting = p.max_commutator() < 1e-10;
        Ok(p)
    }

    pub fn terms(&self) -> &[((usize, usize), CMat)] {
        &self.terms
    }

    pub fn term(&self, a: usize, b: usize) -> Option<&CMat> {
        let e = (a.min(b), a.max(b));
        self.terms.iter().find(|(x, _)| *x == e).map(|(_, t)| t)
    }

    /// Edge term with the tensor order (a, b), whichever vertex is smaller.
    pub fn term_ordered(&self, a: usize, b: usize) -> Option<CMat> {
        let t = self.term(a, b)?;
        if a < b {
            Some(t.clone())
        } else {
            Some(swap_two_sites(t, self.graph.d))
        }
    }

    /// Largest commutator norm between embedded terms sharing a vertex.
    pub fn max_commutator(&self) -> f64 {
        let d = self.graph.d;
        let mut worst: f64 = 0.0;
        for i in 0..self.terms.len() {
            for k in i + 1..self.terms.len() {
                let ((a, b), ti) = &self.terms[i];
                let ((c, e), tk) = &self.terms[k];
                let sites = Region::new(vec![*a, *b, *c, *e]);
                if sites.len() == 4 {
                    continue;
                }
                let s = sites.sites();
                let ei = embed_sub(ti, &Split::new(s.len(), d, &positions_in(s, &[*a, *b]).unwrap()));
                let ek = embed_sub(tk, &Split::new(s.len(), d, &positions_in(s, &[*c, *e]).unwrap()));
                let comm = &(&ei * &ek) - &(&ek * &ei);
                worst = worst.max(fro(&comm));
            }
        }
        worst
    }

    /// H_A: sum of the terms supported inside `a`, as a matrix on `a`.
    pub fn hamiltonian_matrix(&self, a: &Region) -> Result<CMat> {
        if a.is_empty() {
            return Err(Error::Argument("empty region".into()));
        }
        let d = self.graph.d;
        let dim = ipow(d, a.len());
        check_dim(dim)?;
        let mut h = zeros(dim, dim);
        for ((x, y), t) in &self.terms {
            if a.contains(*x) && a.contains(*y) {
                let pos = positions_in(a.sites(), &[*x, *y])?;
                let sp = Split::new(a.len(), d, &pos);
                add_embedded(&mut h, t, &sp);
            }
        }
        Ok(h)
    }

    pub fn hamiltonian_on(&self, a: &Region) -> Result<DenseOperator> {
        DenseOperator::new(self.hamiltonian_matrix(a)?, a.sites().to_vec(), self.graph.d)
    }

    /// Sum of the terms incident to vertex `x`, on the closed ball around it.
    pub fn near_hamiltonian(&self, x: usize) -> Result<(Region, CMat)> {
        self.near_hamiltonian_in(x, &self.graph.all())
    }

    /// Same as [`Potential::near_hamiltonian`] with every site restricted
    /// to `gamma`.
    pub fn near_hamiltonian_in(&self, x: usize, gamma: &Region) -> Result<(Region, CMat)> {
        let ball = self.graph.closure(&Region::new(vec![x])).intersect(gamma);
        let d = self.graph.d;
        let dim = ipow(d, ball.len());
        check_dim(dim)?;
        let mut h = zeros(dim, dim);
        for ((a, b), t) in &self.terms {
            if (*a == x || *b == x) && ball.contains(*a) && ball.contains(*b) {
                let pos = positions_in(ball.sites(), &[*a, *b])?;
                add_embedded(&mut h, t, &Split::new(ball.len(), d, &pos));
            }
        }
        Ok((ball, h))
    }
}

fn add_embedded(h: &mut CMat, t: &CMat, sp: &Split) {
    for s in 0..sp.dsub {
        for u in 0..sp.dsub {
            let v = t[(s, u)];
            if v.re == 0.0 && v.im == 0.0 {
                continue;
            }
            for r in 0..sp.drest {
                h[(sp.g(s, r), sp.g(u, r))] += v;
            }
        }
    }
}

/// Exchanges the two tensor factors of an operator on C^d ⊗ C^d.
pub fn swap_two_sites(t: &CMat, d: usize) -> CMat {
    CMat::from_fn(d * d, d * d, |i, j| {
        let (i0, i1) = (i / d, i % d);
        let (j0, j1) = (j / d, j % d);
        t[(i1 * d + i0, j1 * d + j0)]
    })
}

/// Cached Gibbs data for one region.
#[derive(Clone, Debug)]
pub struct GibbsData {
    pub region: Region,
    pub sigma: CMat,
    pub log_z: f64,
    /// Eigen-decomposition of σ (ascending).
    pub spectrum: Spectrum,
}

impl GibbsData {
    pub fn pow(&self, p: f64) -> CMat {
        self.spectrum.apply(|x| x.max(0.0).powf(p))
    }
}

pub struct GibbsEnsemble {
    pub potential: Potential,
    pub beta: f64,
    cache: Mutex<HashMap<Region, Arc<GibbsData>>>,
}

impl GibbsEnsemble {
    pub fn new(potential: Potential, beta: f64) -> Result<GibbsEnsemble> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::Config(format!("beta = {beta} must be finite and >= 0")));
        }
        Ok(GibbsEnsemble {
            potential,
            beta,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn graph(&self) -> &SpinGraph {
        &self.potential.graph
    }

    pub fn d(&self) -> usize {
        self.potential.graph.d
    }

    /// σ^A = e^{-βH_A}/Z_A together with log Z_A.
    pub fn data(&self, a: &Region) -> Result<Arc<GibbsData>> {
        if let Some(g) = self.cache.lock().unwrap().get(a) {
            return Ok(g.clone());
        }
        let h = self.potential.hamiltonian_matrix(a)?;
        let sp = eigh(&h)?;
        let e0 = sp.min_value();
        let w: Vec<f64> = sp.values.iter().map(|&e| (-self.beta * (e - e0)).exp()).collect();
        let s: f64 = w.iter().sum();
        let probs: Vec<f64> = w.iter().map(|x| x / s).collect();
        let log_z = -self.beta * e0 + s.ln();
        let sigma = Spectrum {
            values: probs.clone(),
            vectors: sp.vectors.clone(),
        }
        .reconstruct();
        // ascending energies give descending weights; store σ's spectrum ascending
        let mut order: Vec<usize> = (0..probs.len()).collect();
        order.sort_by(|&i, &j| probs[i].total_cmp(&probs[j]));
        let vectors = CMat::from_fn(sp.vectors.nrows(), order.len(), |r, c| sp.vectors[(r, order[c])]);
        let spectrum = Spectrum {
            values: order.iter().map(|&i| probs[i]).collect(),
            vectors,
        };
        let data = Arc::new(GibbsData {
            region: a.clone(),
            sigma,
            log_z,
            spectrum,
        });
        self.cache.lock().unwrap().insert(a.clone(), data.clone());
        Ok(data)
    }

    pub fn gibbs(&self, a: &Region) -> Result<QuantumState> {
        let g = self.data(a)?;
        QuantumState::new(DenseOperator::new(g.sigma.clone(), a.sites().to_vec(), self.d())?)
    }

    pub fn sigma(&self, a: &Region) -> Result<CMat> {
        Ok(self.data(a)?.sigma.clone())
    }

    pub fn log_partition(&self, a: &Region) -> Result<f64> {
        Ok(self.data(a)?.log_z)
    }

    /// Global Gibbs state σ^Γ.
    pub fn sigma_global(&self) -> Result<Arc<GibbsData>> {
        self.data(&self.graph().all())
    }

    /// E_{A,B} = e^{-βH_{AB}} e^{β(H_A + H_B)} on A ∪ B.
    pub fn expansional(&self, a: &Region, b: &Region) -> Result<DenseOperator> {
        let (m, ab) = self.expansional_pair(a, b, false)?;
        DenseOperator::new(m, ab.sites().to_vec(), self.d())
    }

    /// E_{A,B} or its inverse as a matrix on A ∪ B.
    pub fn expansional_pair(&self, a: &Region, b: &Region, inverse: bool) -> Result<(CMat, Region)> {
        if !a.is_disjoint(b) {
            return Err(Error::Argument("expansional needs disjoint regions".into()));
        }
        let ab = a.union(b);
        let d = self.d();
        let h_ab = self.potential.hamiltonian_matrix(&ab)?;
        let mut h_sep = zeros(h_ab.nrows(), h_ab.ncols());
        for part in [a, b] {
            if part.is_empty() {
                continue;
            }
            let hp = self.potential.hamiltonian_matrix(part)?;
            let pos = positions_in(ab.sites(), part.sites())?;
            add_embedded(&mut h_sep, &hp, &Split::new(ab.len(), d, &pos));
        }
        let s = if inverse { -self.beta } else { self.beta };
        let e1 = matfun(&scaled(&h_ab, cr(-s)), MatFun::Exp)?;
        let e2 = matfun(&scaled(&h_sep, cr(s)), MatFun::Exp)?;
        let m = if inverse { &e2 * &e1 } else { &e1 * &e2 };
        Ok((m, ab))
    }

    /// Boundary-counting constant K_{A,B} = exp(β J d_max min{|∂_B A|, |∂_A B|}).
    pub fn expansional_constant(&self, a: &Region, b: &Region) -> f64 {
        let g = self.graph();
        let na = g.inner_boundary_towards(a, b).len();
        let nb = g.inner_boundary_towards(b, a).len();
        (self.beta * self.potential.j_bound * g.max_degree() as f64 * na.min(nb) as f64).exp()
    }

    /// Both sides of Z_{ABC} Z_B / (Z_{AB} Z_{BC}) = Tr[σ^{AB} E^{-1}_{A,B}] / Tr[σ^{ABC} E^{-1}_{A,BC}].
    pub fn lambda_abc(&self, a: &Region, b: &Region, c: &Region) -> Result<(f64, f64)> {
        if !a.is_disjoint(b) || !b.is_disjoint(c) || !a.is_disjoint(c) {
            return Err(Error::Argument("A, B, C must be disjoint".into()));
        }
        if !self.graph().edges_between(a, c).is_empty() {
            return Err(Error::Argument("B does not shield A from C".into()));
        }
        let ab = a.union(b);
        let bc = b.union(c);
        let abc = ab.union(c);
        let via_z = (self.log_partition(&abc)? + self.log_partition(b)?
            - self.log_partition(&ab)?
            - self.log_partition(&bc)?)
        .exp();
        let (einv_ab, r1) = self.expansional_pair(a, b, true)?;
        let (einv_abc, r2) = self.expansional_pair(a, &bc, true)?;
        debug_assert_eq!(r1, ab);
        debug_assert_eq!(r2, abc);
        let num = crate::linalg::trace_prod(&self.sigma(&ab)?, &einv_ab).re;
        let den = crate::linalg::trace_prod(&self.sigma(&abc)?, &einv_abc).re;
        Ok((via_z, num / den))
    }
}

/// tr_B[(1_A ⊗ σ_B) Q] for Q on the ordered sites `ab`, σ_B on the sites `b`.
pub fn weighted_partial_trace(q: &CMat, sigma_b: &CMat, ab: &Region, b: &Region, d: usize) -> Result<CMat> {
    let keep = ab.minus(b);
    let pos_b = positions_in(ab.sites(), b.sites())?;
    let spb = Split::new(ab.len(), d, &pos_b);
    let weighted = crate::tensor::left_mul_sub(sigma_b, q, &spb);
    let pos_a = positions_in(ab.sites(), keep.sites())?;
    Ok(partial_trace_keep(&weighted, &Split::new(ab.len(), d, &pos_a)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::GraphKind;
    use crate::linalg::{eye, trace};

    fn ising(n: usize, j: f64, g: f64) -> Potential {
        Potential::build(&SpinGraph::chain(n).unwrap(), ModelSpec::Ising { j, g }).unwrap()
    }

    #[test]
    fn build_examples() {
        let p = ising(2, 1.0, 0.0);
        assert_eq!(p.terms().len(), 1);
        assert!(fro(&(&p.terms()[0].1 - &kron(&pauli('Z'), &pauli('Z')))) < 1e-15);
        let rc = Potential::build(
            &SpinGraph::chain(4).unwrap(),
            ModelSpec::RandomCommuting { seed: 7 },
        )
        .unwrap();
        assert!(rc.commuting && rc.max_commutator() < 1e-10);
        let hz = Potential::build(
            &SpinGraph::chain(3).unwrap(),
            ModelSpec::Heisenberg { jx: 1.0, jy: 1.0, jz: 1.0 },
        )
        .unwrap();
        assert!(!hz.commuting && hz.max_commutator() > 0.1);
        let g3 = SpinGraph::build(GraphKind::Chain { n: 3 }, 3).unwrap();
        assert!(matches!(
            Potential::build(&g3, ModelSpec::Ising { j: 1.0, g: 0.0 }),
            Err(Error::Config(_))
        ));
        assert!(Potential::build(&g3, ModelSpec::Potts { j: 1.0 }).unwrap().commuting);
    }

    #[test]
    fn hamiltonian_examples() {
        let p = ising(3, 1.0, 0.0);
        let h1 = p.hamiltonian_matrix(&Region::new(vec![1])).unwrap();
        assert!(fro(&h1) == 0.0);
        let h = p.hamiltonian_matrix(&Region::range(0, 2)).unwrap();
        let zz = kron(&pauli('Z'), &pauli('Z'));
        let want = &kron(&zz, &eye(2)) + &kron(&eye(2), &zz);
        assert!(fro(&(&h - &want)) < 1e-14);
    }

    #[test]
    fn additivity_with_cross_terms() {
        let p = Potential::build(&SpinGraph::chain(5).unwrap(), ModelSpec::RandomCommuting { seed: 3 })
            .unwrap();
        let a = Region::range(0, 1);
        let b = Region::range(2, 4);
        let h = p.hamiltonian_matrix(&p.graph.all()).unwrap();
        let ha = kron(&p.hamiltonian_matrix(&a).unwrap(), &eye(8));
        let hb = kron(&eye(4), &p.hamiltonian_matrix(&b).unwrap());
        let cross = kron(&kron(&eye(2), p.term(1, 2).unwrap()), &eye(4));
        assert!(fro(&(&h - &(&(&ha + &hb) + &cross))) < 1e-12);
    }

    #[test]
    fn gibbs_examples() {
        let p = ising(3, 1.0, 0.3);
        let e0 = GibbsEnsemble::new(p.clone(), 0.0).unwrap();
        let all = p.graph.all();
        let s = e0.sigma(&all).unwrap();
        assert!(fro(&(&s - &scaled(&eye(8), cr(0.125)))) < 1e-15);
        assert!((e0.log_partition(&all).unwrap() - 3.0 * 2f64.ln()).abs() < 1e-14);
        // single spin with H = Z
        let g1 = SpinGraph::chain(2).unwrap();
        let mut t = kron(&pauli('Z'), &pauli('I'));
        t = &t + &zeros(4, 4);
        let p1 = Potential::from_terms(&g1, vec![((0, 1), t)]).unwrap();
        let beta = 0.7;
        let e = GibbsEnsemble::new(p1, beta).unwrap();
        let s = e.sigma(&g1.all()).unwrap();
        let r = crate::tensor::partial_trace_keep(&s, &Split::new(2, 2, &[0]));
        let c = 2.0 * beta.cosh();
        assert!((r[(0, 0)].re - (-beta).exp() / c).abs() < 1e-14);
        assert!((r[(1, 1)].re - beta.exp() / c).abs() < 1e-14);
        assert!(GibbsEnsemble::new(ising(2, 1.0, 0.0), -1.0).is_err());
    }

    #[test]
    fn commuting_gibbs_is_product_of_edge_factors() {
        let p = Potential::build(&SpinGraph::chain(4).unwrap(), ModelSpec::RandomCommuting { seed: 11 })
            .unwrap();
        let beta = 0.8;
        let e = GibbsEnsemble::new(p.clone(), beta).unwrap();
        let all = p.graph.all();
        let mut prod = eye(16);
        for ((a, b), t) in p.terms() {
            let f = matfun(&scaled(t, cr(-beta)), MatFun::Exp).unwrap();
            let sp = Split::new(4, 2, &[*a, *b]);
            prod = &prod * &embed_sub(&f, &sp);
        }
        let z = trace(&prod).re;
        let prod = scaled(&prod, cr(1.0 / z));
        assert!(fro(&(&prod - &e.sigma(&all).unwrap())) < 1e-10);
    }

    #[test]
    fn expansional_examples() {
        let p = ising(4, 1.0, 0.0);
        let beta = 0.6;
        let e = GibbsEnsemble::new(p, beta).unwrap();
        let a = Region::range(0, 1);
        let b = Region::range(2, 3);
        let ex = e.expansional(&a, &b).unwrap();
        assert!((op_norm(&ex.mat) - beta.exp()).abs() < 1e-10);
        // no crossing edge
        let p2 = Potential::from_terms(
            &SpinGraph::chain(3).unwrap(),
            vec![((0, 1), kron(&pauli('Z'), &pauli('Z')))],
        )
        .unwrap();
        let e2 = GibbsEnsemble::new(p2, 1.0).unwrap();
        let ex = e2.expansional(&Region::range(0, 1), &Region::new(vec![2])).unwrap();
        assert!(fro(&(&ex.mat - &eye(8))) < 1e-12);
    }

    #[test]
    fn lambda_examples() {
        let a = Region::range(0, 1);
        let b = Region::range(2, 3);
        let c = Region::range(4, 5);
        let e0 = GibbsEnsemble::new(ising(6, 1.0, 0.2), 0.0).unwrap();
        let (z, t) = e0.lambda_abc(&a, &b, &c).unwrap();
        assert!((z - 1.0).abs() < 1e-12 && (t - 1.0).abs() < 1e-12);
        let e = GibbsEnsemble::new(ising(6, 1.0, 0.0), 0.5).unwrap();
        let (z, t) = e.lambda_abc(&a, &b, &c).unwrap();
        assert!((z - t).abs() < 1e-10);
        assert!(e.lambda_abc(&a, &Region::new(vec![3]), &Region::new(vec![2])).is_err());
    }

    #[test]
    fn swap_is_involution() {
        let mut r = random::rng(1);
        let t = random::ginibre(&mut r, 9, 9);
        let s = swap_two_sites(&swap_two_sites(&t, 3), 3);
        assert!(fro(&(&s - &t)) == 0.0);
    }
}

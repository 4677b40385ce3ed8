//! Static clustering measures of Gibbs states, the strong similarity
//! relation and decay scans.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::dynamics::relative_entropy;
use crate::error::{Error, Result};
use crate::fit::{log_linear_fit, DecayFit};
use crate::hamiltonian::GibbsEnsemble;
use crate::lattice::Region;
use crate::linalg::{
    c64, cr, eigh_sym, eye, fro, herm_asymmetry, kron, matfun, op_norm, random, scaled, symmetrize,
    trace, trace_norm, trace_prod, zeros, CMat, MatFun, Spectrum,
};
use crate::operator::positions_in;
use crate::par;
use crate::tensor::{ipow, partial_trace_keep, Split};

/// Eigenvalues of positive operators below this (relative to the largest)
/// are outside the support.
pub const SUPPORT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerProduct {
    Gns,
    Kms,
}

/// Marginal of a state on Γ onto `sub` (sites kept in increasing order).
pub fn marginal(sigma: &CMat, gamma: &Region, sub: &Region, d: usize) -> Result<CMat> {
    let pos = positions_in(gamma.sites(), sub.sites())?;
    Ok(partial_trace_keep(sigma, &Split::new(gamma.len(), d, &pos)))
}

/// Cov_σ(f, g) = ⟨f, g⟩_σ − Tr[σf]Tr[σg] for self-adjoint f, g on the
/// same space as σ. The GNS form returns the real part of Tr[σfg].
pub fn covariance(sigma: &CMat, f: &CMat, g: &CMat, kind: InnerProduct) -> Result<f64> {
    if herm_asymmetry(f) > 1e-10 || herm_asymmetry(g) > 1e-10 {
        return Err(Error::Argument("covariance needs self-adjoint observables".into()));
    }
    let mean = trace_prod(sigma, f).re * trace_prod(sigma, g).re;
    let inner = match kind {
        InnerProduct::Gns => trace_prod(&(sigma * f), g).re,
        InnerProduct::Kms => {
            let s = matfun(sigma, MatFun::Sqrt)?;
            trace_prod(&(&(&s * f) * &s), g).re
        }
    };
    Ok(inner - mean)
}

fn check_disjoint(a: &Region, c: &Region) -> Result<()> {
    if a.is_empty() || c.is_empty() || !a.is_disjoint(c) {
        return Err(Error::Argument("regions must be nonempty and disjoint".into()));
    }
    Ok(())
}

/// σ_{AC}, σ_A, σ_C with A sites first inside σ_{AC}.
struct Marginals {
    ac: CMat,
    a: CMat,
    c: CMat,
    da: usize,
    dc: usize,
}

fn marginals(sigma: &CMat, gamma: &Region, a: &Region, c: &Region, d: usize) -> Result<Marginals> {
    check_disjoint(a, c)?;
    let mut pos = positions_in(gamma.sites(), a.sites())?;
    pos.extend(positions_in(gamma.sites(), c.sites())?);
    let ac = partial_trace_keep(sigma, &Split::new(gamma.len(), d, &pos));
    let (da, dc) = (ipow(d, a.len()), ipow(d, c.len()));
    let ma = partial_trace_keep(&ac, &Split::new(a.len() + c.len(), d, &(0..a.len()).collect::<Vec<_>>()));
    let mc = partial_trace_keep(
        &ac,
        &Split::new(a.len() + c.len(), d, &(a.len()..a.len() + c.len()).collect::<Vec<_>>()),
    );
    Ok(Marginals {
        ac: symmetrize(&ac),
        a: symmetrize(&ma),
        c: symmetrize(&mc),
        da,
        dc,
    })
}

/// tr_C[X (1 ⊗ g)] and tr_A[X (f ⊗ 1)] for X on A ⊗ C.
fn contract_c(x: &CMat, g: &CMat, da: usize, dc: usize) -> CMat {
    Mat::from_fn(da, da, |i, j| {
        let mut acc = c64::new(0.0, 0.0);
        for k in 0..dc {
            for l in 0..dc {
                acc += x[(i * dc + k, j * dc + l)] * g[(l, k)];
            }
        }
        acc
    })
}

fn contract_a(x: &CMat, f: &CMat, da: usize, dc: usize) -> CMat {
    Mat::from_fn(dc, dc, |k, l| {
        let mut acc = c64::new(0.0, 0.0);
        for i in 0..da {
            for j in 0..da {
                acc += x[(i * dc + k, j * dc + l)] * f[(j, i)];
            }
        }
        acc
    })
}

/// Sign of a Hermitian matrix, the trace-norm dual element.
fn sign(x: &CMat) -> CMat {
    eigh_sym(&symmetrize(x)).apply(|v| if v >= 0.0 { 1.0 } else { -1.0 })
}

#[derive(Clone, Debug, Serialize)]
pub struct CovSupReport {
    pub value: f64,
    /// ‖σ_AC − σ_A ⊗ σ_C‖₁ (GNS form only).
    pub upper_bound: f64,
    pub restarts: usize,
}

/// sup |Cov(f, g)| over self-adjoint f on A, g on C with ‖f‖, ‖g‖ ≤ 1,
/// by alternating trace-norm duality from random starting points.
pub fn covariance_sup(
    sigma: &CMat,
    gamma: &Region,
    a: &Region,
    c: &Region,
    d: usize,
    kind: InnerProduct,
    restarts: usize,
    seed: u64,
) -> Result<CovSupReport> {
    let m = marginals(sigma, gamma, a, c, d)?;
    let (da, dc) = (m.da, m.dc);
    // the covariance is Tr[X (f ⊗ g)] for a Hermitian X on A ⊗ C
    let x = match kind {
        InnerProduct::Gns => &m.ac - &kron(&m.a, &m.c),
        InnerProduct::Kms => {
            let s = matfun(sigma, MatFun::Sqrt)?;
            let mut pos = positions_in(gamma.sites(), a.sites())?;
            pos.extend(positions_in(gamma.sites(), c.sites())?);
            kms_effective(&s, &Split::new(gamma.len(), d, &pos), da, dc, &m)
        }
    };
    let upper_bound = trace_norm(&(&m.ac - &kron(&m.a, &m.c)));
    let mut rng = random::rng(seed);
    let mut best: f64 = 0.0;
    for _ in 0..restarts.max(1) {
        let mut g = sign(&random::hermitian(&mut rng, dc));
        let mut prev = -1.0;
        for _ in 0..500 {
            let xf = symmetrize(&contract_c(&x, &g, da, dc));
            let f = sign(&xf);
            let xg = symmetrize(&contract_a(&x, &f, da, dc));
            g = sign(&xg);
            let val = trace_norm(&xg);
            if (val - prev).abs() <= 1e-9 * val.max(1e-300) {
                prev = val;
                break;
            }
            prev = val;
        }
        best = best.max(prev);
    }
    Ok(CovSupReport {
        value: best,
        upper_bound,
        restarts: restarts.max(1),
    })
}

/// KMS covariance kernel: X with Cov_KMS(f ⊗ 1, 1 ⊗ g) = Tr[X (f ⊗ g)].
fn kms_effective(s: &CMat, sp: &Split, da: usize, dc: usize, m: &Marginals) -> CMat {
    let dac = da * dc;
    // Tr[s F s G] = Σ s[i,j] F[j,k] s[k,l] G[l,i] with F = f ⊗ 1, G = 1 ⊗ g
    // collect by the (A, C) digits of each index
    let mut x = zeros(dac, dac);
    let drest = sp.drest;
    for a1 in 0..da {
        for a2 in 0..da {
            for c1 in 0..dc {
                for c2 in 0..dc {
                    // coefficient of f[a1, a2] g[c1, c2]
                    let mut acc = c64::new(0.0, 0.0);
                    for cc in 0..dc {
                        for aa in 0..da {
                            for r in 0..drest {
                                for r2 in 0..drest {
                                    // j = (a1, cc, r), k = (a2, cc, r), l = (aa, c1, r2), i = (aa, c2, r2)
                                    let j = sp.g(a1 * dc + cc, r);
                                    let k = sp.g(a2 * dc + cc, r);
                                    let l = sp.g(aa * dc + c1, r2);
                                    let i = sp.g(aa * dc + c2, r2);
                                    acc += s[(i, j)] * s[(k, l)];
                                }
                            }
                        }
                    }
                    // Tr[X (f ⊗ g)] = Σ X[(a2 c2),(a1 c1)] f[a1,a2] g[c1,c2]
                    x[(a2 * dc + c2, a1 * dc + c1)] = acc;
                }
            }
        }
    }
    &x - &kron(&m.a, &m.c)
}

/// Hermitian orthonormal basis of d×d matrices.
pub fn hermitian_basis(d: usize) -> Vec<CMat> {
    let mut out = Vec::with_capacity(d * d);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        let mut m = zeros(d, d);
        m[(i, i)] = cr(1.0);
        out.push(m);
        for j in i + 1..d {
            let mut s = zeros(d, d);
            s[(i, j)] = cr(h);
            s[(j, i)] = cr(h);
            out.push(s);
            let mut a = zeros(d, d);
            a[(i, j)] = c64::new(0.0, -h);
            a[(j, i)] = c64::new(0.0, h);
            out.push(a);
        }
    }
    out
}

fn inv_sqrt_psd(q: &CMat) -> Result<CMat> {
    let sp = eigh_sym(q);
    let top = sp.max_abs();
    if sp.min_value() <= 1e-13 * top {
        return Err(Error::Domain("singular marginal".into()));
    }
    Ok(sp.apply(|v| v.powf(-0.5)))
}

/// sup Cov_GNS(f, g) / (‖f‖_{2,σ} ‖g‖_{2,σ}) over self-adjoint f on A and
/// g on C: the top singular value of Q_A^{-1/2} K Q_C^{-1/2} with K the
/// covariance matrix on Hermitian bases and Q the Gram matrices.
pub fn l2_clustering_value(sigma: &CMat, gamma: &Region, a: &Region, c: &Region, d: usize) -> Result<f64> {
    let m = marginals(sigma, gamma, a, c, d)?;
    let x = &m.ac - &kron(&m.a, &m.c);
    let ba = hermitian_basis(m.da);
    let bc = hermitian_basis(m.dc);
    let gram = |s: &CMat, b: &[CMat]| {
        Mat::from_fn(b.len(), b.len(), |i, j| cr(trace_prod(&(s * &b[i]), &b[j]).re))
    };
    let qa = gram(&m.a, &ba);
    let qc = gram(&m.c, &bc);
    let k = Mat::from_fn(ba.len(), bc.len(), |i, j| cr(trace_prod(&x, &kron(&ba[i], &bc[j])).re));
    let w = &(&inv_sqrt_psd(&qa)? * &k) * &inv_sqrt_psd(&qc)?;
    Ok(op_norm(&w))
}

fn check_shield(ens: &GibbsEnsemble, a: &Region, b: &Region, c: &Region) -> Result<()> {
    if a.is_empty() || c.is_empty() || !a.is_disjoint(b) || !a.is_disjoint(c) || !b.is_disjoint(c) {
        return Err(Error::Argument("A, B, C must be disjoint with A, C nonempty".into()));
    }
    if !ens.graph().edges_between(a, c).is_empty() {
        return Err(Error::Argument("B does not shield A from C".into()));
    }
    Ok(())
}

/// tr_{BC}σ^{ABC} and tr_B σ^{AB}.
fn local_pair(ens: &GibbsEnsemble, a: &Region, b: &Region, c: &Region) -> Result<(CMat, CMat)> {
    check_shield(ens, a, b, c)?;
    let abc = a.union(b).union(c);
    let ab = a.union(b);
    let d = ens.d();
    let w = marginal(&ens.sigma(&abc)?, &abc, a, d)?;
    let t = marginal(&ens.sigma(&ab)?, &ab, a, d)?;
    Ok((symmetrize(&w), symmetrize(&t)))
}

/// ‖tr_{BC}σ^{ABC} − tr_B σ^{AB}‖₁
pub fn local_indist(ens: &GibbsEnsemble, a: &Region, b: &Region, c: &Region) -> Result<f64> {
    let (w, t) = local_pair(ens, a, b, c)?;
    Ok(trace_norm(&(&w - &t)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliForm {
    /// ‖τ^{-1/2} ω τ^{-1/2} − 1‖
    Symmetric,
    /// ‖ω τ^{-1} − 1‖
    OneSided,
}

/// Strong local indistinguishability with ω = tr_{BC}σ^{ABC} and
/// τ = tr_B σ^{AB}, generalized inverses.
pub fn strong_local_indist(ens: &GibbsEnsemble, a: &Region, b: &Region, c: &Region, form: SliForm) -> Result<f64> {
    let (w, t) = local_pair(ens, a, b, c)?;
    let sp = eigh_sym(&t);
    let n = t.nrows();
    let proj = support_projector(&sp);
    Ok(match form {
        SliForm::Symmetric => {
            let ih = pinv_pow(&sp, -0.5);
            op_norm(&(&(&(&ih * &w) * &ih) - &proj))
        }
        SliForm::OneSided => {
            let inv = pinv_pow(&sp, -1.0);
            let _ = n;
            op_norm(&(&(&w * &inv) - &proj))
        }
    })
}

fn support_cut(sp: &Spectrum) -> f64 {
    SUPPORT_TOL * sp.max_abs().max(1e-300)
}

fn support_projector(sp: &Spectrum) -> CMat {
    let cut = support_cut(sp);
    sp.apply(|v| if v > cut { 1.0 } else { 0.0 })
}

fn pinv_pow(sp: &Spectrum, p: f64) -> CMat {
    let cut = support_cut(sp);
    sp.apply(|v| if v > cut { v.powf(p) } else { 0.0 })
}

/// ‖σ_AC (σ_A ⊗ σ_C)^{-1} − 1‖
pub fn mixing_condition(sigma: &CMat, gamma: &Region, a: &Region, c: &Region, d: usize) -> Result<f64> {
    let m = marginals(sigma, gamma, a, c, d)?;
    let prod = kron(&m.a, &m.c);
    let sp = eigh_sym(&prod);
    if sp.min_value() <= support_cut(&sp) {
        return Err(Error::Domain("singular marginal in the mixing condition".into()));
    }
    let inv = sp.apply(|v| 1.0 / v);
    let n = prod.nrows();
    Ok(op_norm(&(&(&m.ac * &inv) - &eye(n))))
}

/// I(A:C) = D(σ_AC ‖ σ_A ⊗ σ_C)
pub fn mutual_information(sigma: &CMat, gamma: &Region, a: &Region, c: &Region, d: usize) -> Result<f64> {
    let m = marginals(sigma, gamma, a, c, d)?;
    Ok(relative_entropy(&m.ac, &kron(&m.a, &m.c)))
}

/// D_max(σ_AC ‖ σ_A ⊗ σ_C)
pub fn max_mutual_information(sigma: &CMat, gamma: &Region, a: &Region, c: &Region, d: usize) -> Result<f64> {
    let m = marginals(sigma, gamma, a, c, d)?;
    Ok(max_relative_entropy(&m.ac, &kron(&m.a, &m.c)))
}

/// D_max(ω‖τ) = log ‖τ^{-1/2} ω τ^{-1/2}‖, +∞ without support inclusion.
pub fn max_relative_entropy(w: &CMat, t: &CMat) -> f64 {
    let st = eigh_sym(t);
    let sw = eigh_sym(w);
    let pt = support_projector(&st);
    let pw = support_projector(&sw);
    // supp ω ⊆ supp τ iff (1 − P_τ) P_ω = 0
    let n = w.nrows();
    if fro(&(&(&eye(n) - &pt) * &pw)) > 1e-8 {
        return f64::INFINITY;
    }
    let ih = pinv_pow(&st, -0.5);
    eigh_sym(&symmetrize(&(&(&ih * w) * &ih))).max_value().ln()
}

#[derive(Clone, Debug, Serialize)]
pub struct SimilarityResult {
    /// ‖ω^{1/2} τ^{-1} ω^{1/2} − 1‖ on the support of ω.
    pub epsilon: f64,
    /// D_max(ω‖τ)
    pub dmax: f64,
    /// ‖log(ω^{1/2} τ^{-1} ω^{1/2})‖, the two-sided version of D_max.
    pub log_norm: f64,
    pub support_equal: bool,
}

impl SimilarityResult {
    /// D_max ≤ log(1+ε) ≤ ε ≤ ‖log X‖ e^{‖log X‖}; returns the smallest
    /// slack of the three inequalities.
    pub fn bracket_slack(&self) -> f64 {
        let a = (1.0 + self.epsilon).ln() - self.dmax;
        let b = self.epsilon - (1.0 + self.epsilon).ln();
        let c = self.log_norm * self.log_norm.exp() - self.epsilon;
        a.min(b).min(c)
    }
}

/// ε with ω ~ε τ for positive operators (not necessarily normalized).
pub fn relation_epsilon(w: &CMat, t: &CMat) -> f64 {
    let sw = eigh_sym(w);
    let st = eigh_sym(t);
    let wh = sw.apply(|v| v.max(0.0).sqrt());
    let x = symmetrize(&(&(&wh * &pinv_pow(&st, -1.0)) * &wh));
    op_norm(&(&x - &support_projector(&sw)))
}

pub fn similarity(w: &CMat, t: &CMat) -> SimilarityResult {
    let sw = eigh_sym(w);
    let st = eigh_sym(t);
    let support_equal = fro(&(&support_projector(&sw) - &support_projector(&st))) < 1e-8;
    let wh = sw.apply(|v| v.max(0.0).sqrt());
    let x = symmetrize(&(&(&wh * &pinv_pow(&st, -1.0)) * &wh));
    let pw = support_projector(&sw);
    let epsilon = op_norm(&(&x - &pw));
    // eigenvalues of X on the support of ω
    let xs = eigh_sym(&x);
    let cut = support_cut(&xs);
    let on_support: Vec<f64> = xs.values.iter().copied().filter(|&v| v > cut).collect();
    let log_norm = on_support.iter().map(|v| v.ln().abs()).fold(0.0, f64::max);
    SimilarityResult {
        epsilon,
        dmax: max_relative_entropy(w, t),
        log_norm,
        support_equal,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RelationProperty {
    pub name: String,
    pub trials: usize,
    /// min over trials of (bound − measured).
    pub worst_slack: f64,
    pub failures: usize,
}

impl RelationProperty {
    pub fn passes(&self) -> bool {
        self.failures == 0
    }
}

fn random_positive(rng: &mut random::Rng64, n: usize) -> CMat {
    let g = random::ginibre(rng, n, n);
    let mut p = &g * g.adjoint();
    p += scaled(&eye(n), cr(0.05 * n as f64));
    symmetrize(&p)
}

/// B^{1/2}(1 + δH)B^{1/2} with ‖H‖ = 1: a positive operator near B.
fn perturbed(rng: &mut random::Rng64, b: &CMat, delta: f64) -> CMat {
    let n = b.nrows();
    let h = random::hermitian(rng, n);
    let h = scaled(&h, cr(delta / op_norm(&h)));
    let s = matfun(b, MatFun::Sqrt).expect("positive operator");
    symmetrize(&(&(&s * &(&eye(n) + &h)) * &s))
}

fn random_projection(rng: &mut random::Rng64, n: usize) -> CMat {
    let u = random::unitary(rng, n);
    let k = 1 + (random::uniform(rng, 0.0, 1.0) * (n - 1) as f64) as usize;
    let mut p = zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = c64::new(0.0, 0.0);
            for r in 0..k {
                acc += u[(i, r)] * u[(j, r)].conj();
            }
            p[(i, j)] = acc;
        }
    }
    p
}

fn normalized(x: &CMat) -> CMat {
    scaled(x, cr(1.0 / trace(x).re))
}

/// Checks the relation's symmetry, transitivity, tensor, locality,
/// normalization, chaining and D_max-bracket properties on random
/// positive operators of dimension ≤ 16, `samples` trials each.
pub fn relation_properties_check(samples: usize, seed: u64) -> Vec<RelationProperty> {
    let mut rng = random::rng(seed);
    let dims = [2usize, 3, 4, 8, 16];
    let mut out = Vec::new();
    let mut record = |name: &str, slacks: Vec<f64>| {
        let worst = slacks.iter().copied().fold(f64::INFINITY, f64::min);
        out.push(RelationProperty {
            name: name.into(),
            trials: slacks.len(),
            worst_slack: worst,
            failures: slacks.iter().filter(|&&s| !(s >= -1e-10)).count(),
        });
    };
    let tol_delta = |rng: &mut random::Rng64| random::uniform(rng, 0.01, 0.45);
    let pick = |rng: &mut random::Rng64, ds: &[usize]| ds[(random::uniform(rng, 0.0, ds.len() as f64) as usize).min(ds.len() - 1)];

    let mut s = Vec::new();
    for _ in 0..samples {
        let n = pick(&mut rng, &dims);
        let a = random_positive(&mut rng, n);
        let dl = tol_delta(&mut rng);
        let b = perturbed(&mut rng, &a, dl);
        let e = relation_epsilon(&a, &b);
        if e < 1.0 {
            s.push(e / (1.0 - e) - relation_epsilon(&b, &a));
        }
    }
    record("symmetry", s);

    let mut s = Vec::new();
    for _ in 0..samples {
        let n = pick(&mut rng, &dims);
        let a = random_positive(&mut rng, n);
        let dl = tol_delta(&mut rng);
        let b = perturbed(&mut rng, &a, dl);
        let dl = tol_delta(&mut rng);
        let c = perturbed(&mut rng, &b, dl);
        let (e1, e2) = (relation_epsilon(&a, &b), relation_epsilon(&b, &c));
        s.push(e1 * e2 + e1 + e2 - relation_epsilon(&a, &c));
    }
    record("transitivity", s);

    let mut s = Vec::new();
    for _ in 0..samples {
        let (n1, n2) = (pick(&mut rng, &[2, 3, 4]), pick(&mut rng, &[2, 4]));
        let a = random_positive(&mut rng, n1);
        let dl = tol_delta(&mut rng);
        let at = perturbed(&mut rng, &a, dl);
        let f = random_positive(&mut rng, n2);
        let dl = tol_delta(&mut rng);
        let ft = perturbed(&mut rng, &f, dl);
        let (e1, e2) = (relation_epsilon(&a, &at), relation_epsilon(&f, &ft));
        s.push(e1 * e2 + e1 + e2 - relation_epsilon(&kron(&a, &f), &kron(&at, &ft)));
    }
    record("tensor", s);

    // locality: tr_{H'}[P D P] ~ε tr_{H'}[P E P]
    let mut loc = Vec::new();
    let mut norm = Vec::new();
    for _ in 0..samples {
        let (n1, n2) = (pick(&mut rng, &[2, 3, 4]), pick(&mut rng, &[2, 4]));
        let dd = random_positive(&mut rng, n1 * n2);
        let dl = tol_delta(&mut rng);
        let ee = perturbed(&mut rng, &dd, dl);
        let eps = relation_epsilon(&dd, &ee);
        let p = kron(&eye(n1), &random_projection(&mut rng, n2));
        let sp = Split::new(2, 0, &[0]);
        let _ = sp;
        let keep = |x: &CMat| {
            let y = &(&p * x) * &p;
            Mat::from_fn(n1, n1, |i, j| {
                let mut acc = c64::new(0.0, 0.0);
                for r in 0..n2 {
                    acc += y[(i * n2 + r, j * n2 + r)];
                }
                acc
            })
        };
        let (rd, re) = (symmetrize(&keep(&dd)), symmetrize(&keep(&ee)));
        loc.push(eps - relation_epsilon(&rd, &re));
        norm.push(eps * (2.0 + eps) - relation_epsilon(&normalized(&rd), &normalized(&re)));
    }
    record("locality", loc);
    record("normalization", norm);

    let mut s = Vec::new();
    for _ in 0..samples {
        let n = pick(&mut rng, &dims);
        let k = 1 + (random::uniform(&mut rng, 0.0, 4.0) as usize);
        let mut ops = vec![random_positive(&mut rng, n)];
        for _ in 0..k {
            let prev = ops.last().unwrap().clone();
            let dl = random::uniform(&mut rng, 0.01, 0.2);
            ops.push(perturbed(&mut rng, &prev, dl));
        }
        let eps = ops
            .windows(2)
            .map(|w| relation_epsilon(&w[0], &w[1]))
            .fold(0.0, f64::max);
        s.push((1.0 + eps).powi(k as i32) - 1.0 - relation_epsilon(&ops[0], &ops[k]));
    }
    record("chaining", s);

    let mut s = Vec::new();
    for _ in 0..samples {
        let n = pick(&mut rng, &dims);
        let w = normalized(&random_positive(&mut rng, n));
        let dl = tol_delta(&mut rng);
        let t = normalized(&perturbed(&mut rng, &w, dl));
        s.push(similarity(&w, &t).bracket_slack());
    }
    record("dmax_bracket", s);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusteringMeasure {
    Covariance,
    L2Clustering,
    LocalIndist,
    StrongLocalIndist,
    MixingCondition,
    MutualInformation,
    MaxMutualInformation,
}

impl ClusteringMeasure {
    /// The six measures compared in decay scans.
    pub const SIX: [ClusteringMeasure; 6] = [
        ClusteringMeasure::Covariance,
        ClusteringMeasure::L2Clustering,
        ClusteringMeasure::LocalIndist,
        ClusteringMeasure::StrongLocalIndist,
        ClusteringMeasure::MixingCondition,
        ClusteringMeasure::MutualInformation,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ClusteringMeasure::Covariance => "covariance",
            ClusteringMeasure::L2Clustering => "l2_clustering",
            ClusteringMeasure::LocalIndist => "local_indist",
            ClusteringMeasure::StrongLocalIndist => "strong_local_indist",
            ClusteringMeasure::MixingCondition => "mixing_condition",
            ClusteringMeasure::MutualInformation => "mutual_information",
            ClusteringMeasure::MaxMutualInformation => "max_mutual_information",
        }
    }
}

impl std::str::FromStr for ClusteringMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let all = [
            ClusteringMeasure::Covariance,
            ClusteringMeasure::L2Clustering,
            ClusteringMeasure::LocalIndist,
            ClusteringMeasure::StrongLocalIndist,
            ClusteringMeasure::MixingCondition,
            ClusteringMeasure::MutualInformation,
            ClusteringMeasure::MaxMutualInformation,
        ];
        all.into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown measure {s:?}")))
    }
}

/// A = {a0}, B = the next `l` sites, C = the site after B, along the
/// chain order of the graph.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanGeometry {
    pub start: usize,
    pub ls: Vec<usize>,
}

impl ScanGeometry {
    pub fn regions(&self, l: usize) -> (Region, Region, Region) {
        let a = Region::new(vec![self.start]);
        let b = if l == 0 {
            Region::empty()
        } else {
            Region::range(self.start + 1, self.start + l)
        };
        let c = Region::new(vec![self.start + l + 1]);
        (a, b, c)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanPoint {
    pub l: usize,
    pub value: f64,
    pub boundary_a: usize,
    pub boundary_c: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanResult {
    pub measure: ClusteringMeasure,
    pub beta: f64,
    pub points: Vec<ScanPoint>,
    pub fit: Option<DecayFit>,
    /// Every value is below 1e-13.
    pub exact_zero: bool,
}

/// Values below this count as exact zeros in scans.
pub const EXACT_ZERO: f64 = 1e-13;
/// Values below this are excluded from decay fits.
pub const FIT_FLOOR: f64 = 1e-12;

/// Evaluates one measure at every separation of the geometry on the full
/// Gibbs state (local Gibbs states for the indistinguishability measures)
/// and fits an exponential decay.
pub fn decay_scan(ens: &GibbsEnsemble, measure: ClusteringMeasure, geom: &ScanGeometry, threads: usize) -> Result<ScanResult> {
    if geom.ls.len() < 3 {
        return Err(Error::Argument("a decay scan needs at least three separations".into()));
    }
    let g = ens.graph();
    let gamma = g.all();
    if geom.ls.iter().any(|&l| geom.start + l + 1 >= g.n()) {
        return Err(Error::Geometry("scan leaves the lattice".into()));
    }
    let needs_global = !matches!(measure, ClusteringMeasure::LocalIndist | ClusteringMeasure::StrongLocalIndist);
    let sigma = if needs_global { Some(ens.sigma(&gamma)?) } else { None };
    let d = ens.d();
    let values = par::map(&geom.ls, threads, |&l| -> Result<ScanPoint> {
        let (a, b, c) = geom.regions(l);
        let s = || sigma.as_ref().expect("global state");
        let value = match measure {
            ClusteringMeasure::Covariance => covariance_sup(s(), &gamma, &a, &c, d, InnerProduct::Gns, 8, 17 + l as u64)?.value,
            ClusteringMeasure::L2Clustering => l2_clustering_value(s(), &gamma, &a, &c, d)?,
            ClusteringMeasure::LocalIndist => local_indist(ens, &a, &b, &c)?,
            ClusteringMeasure::StrongLocalIndist => strong_local_indist(ens, &a, &b, &c, SliForm::Symmetric)?,
            ClusteringMeasure::MixingCondition => mixing_condition(s(), &gamma, &a, &c, d)?,
            ClusteringMeasure::MutualInformation => mutual_information(s(), &gamma, &a, &c, d)?,
            ClusteringMeasure::MaxMutualInformation => max_mutual_information(s(), &gamma, &a, &c, d)?,
        };
        Ok(ScanPoint {
            l,
            value,
            boundary_a: g.bd(&a).len(),
            boundary_c: g.bd(&c).len(),
        })
    });
    let points = values.into_iter().collect::<Result<Vec<_>>>()?;
    let exact_zero = points.iter().all(|p| p.value.abs() < EXACT_ZERO);
    let fit = if exact_zero {
        None
    } else {
        let x: Vec<f64> = points.iter().map(|p| p.l as f64).collect();
        let y: Vec<f64> = points.iter().map(|p| p.value).collect();
        log_linear_fit(&x, &y, FIT_FLOOR)
    };
    Ok(ScanResult {
        measure,
        beta: ens.beta,
        points,
        fit,
        exact_zero,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{pauli, ModelSpec, Potential};
    use crate::lattice::SpinGraph;
    use crate::linalg::real_diag;
    use crate::tensor::embed_sub;

    fn ising(n: usize, beta: f64) -> GibbsEnsemble {
        let g = SpinGraph::chain(n).unwrap();
        let p = Potential::build(&g, ModelSpec::Ising { j: 1.0, g: 0.5 }).unwrap();
        GibbsEnsemble::new(p, beta).unwrap()
    }

    fn on_site(op: &CMat, site: usize, n: usize) -> CMat {
        embed_sub(op, &Split::new(n, 2, &[site]))
    }

    #[test]
    fn covariance_brute_force() {
        let e = ising(4, 0.5);
        let s = e.sigma(&e.graph().all()).unwrap();
        let z0 = on_site(&pauli('Z'), 0, 4);
        let z3 = on_site(&pauli('Z'), 3, 4);
        let want = trace_prod(&s, &(&z0 * &z3)).re - trace_prod(&s, &z0).re * trace_prod(&s, &z3).re;
        for k in [InnerProduct::Gns, InnerProduct::Kms] {
            assert!((covariance(&s, &z0, &z3, k).unwrap() - want).abs() < 1e-12);
        }
        assert!(covariance(&s, &eye(16), &eye(16), InnerProduct::Gns).unwrap().abs() < 1e-12);
        let mut bad = z0.clone();
        bad[(0, 1)] = cr(1.0);
        assert!(covariance(&s, &bad, &z3, InnerProduct::Gns).is_err());
    }

    fn pauli_grid(sigma: &CMat, gamma: &Region, a: usize, c: usize, kind: InnerProduct) -> f64 {
        let n = gamma.len();
        let mut best: f64 = 0.0;
        for p in ['X', 'Y', 'Z'] {
            for q in ['X', 'Y', 'Z'] {
                let f = on_site(&pauli(p), a, n);
                let g = on_site(&pauli(q), c, n);
                best = best.max(covariance(sigma, &f, &g, kind).unwrap().abs());
            }
        }
        best
    }

    #[test]
    fn covariance_sup_against_grid() {
        let e = ising(6, 0.5);
        let gamma = e.graph().all();
        let s = e.sigma(&gamma).unwrap();
        let (a, c) = (Region::new(vec![0]), Region::new(vec![5]));
        for k in [InnerProduct::Gns, InnerProduct::Kms] {
            let r = covariance_sup(&s, &gamma, &a, &c, 2, k, 8, 1).unwrap();
            let grid = pauli_grid(&s, &gamma, 0, 5, k);
            assert!((r.value - grid).abs() < 1e-6, "{k:?} {} {grid}", r.value);
            assert!(r.value <= r.upper_bound + 1e-12);
        }
        let l2 = l2_clustering_value(&s, &gamma, &a, &c, 2).unwrap();
        assert!(l2 >= covariance_sup(&s, &gamma, &a, &c, 2, InnerProduct::Gns, 8, 1).unwrap().value - 1e-12);
        let e0 = ising(6, 0.0);
        let s0 = e0.sigma(&gamma).unwrap();
        assert!(covariance_sup(&s0, &gamma, &a, &c, 2, InnerProduct::Gns, 4, 1).unwrap().value < 1e-14);
        assert!(covariance_sup(&s, &gamma, &a, &a, 2, InnerProduct::Gns, 4, 1).is_err());
    }

    #[test]
    fn kms_kernel_on_non_commuting_state() {
        let g = SpinGraph::chain(3).unwrap();
        let p = Potential::build(&g, ModelSpec::Heisenberg { jx: 1.0, jy: 0.7, jz: 0.4 }).unwrap();
        let e = GibbsEnsemble::new(p, 0.8).unwrap();
        let gamma = g.all();
        let s = e.sigma(&gamma).unwrap();
        let (a, c) = (Region::new(vec![0]), Region::new(vec![2]));
        let m = marginals(&s, &gamma, &a, &c, 2).unwrap();
        let sq = matfun(&s, MatFun::Sqrt).unwrap();
        let pos = vec![0, 2];
        let x = kms_effective(&sq, &Split::new(3, 2, &pos), 2, 2, &m);
        let mut rng = random::rng(2);
        for _ in 0..3 {
            let f = random::hermitian(&mut rng, 2);
            let gg = random::hermitian(&mut rng, 2);
            let direct = covariance(&s, &on_site(&f, 0, 3), &on_site(&gg, 2, 3), InnerProduct::Kms).unwrap();
            assert!((trace_prod(&x, &kron(&f, &gg)).re - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn indistinguishability() {
        let e = ising(6, 0.7);
        let a = Region::new(vec![0]);
        let near = local_indist(&e, &a, &Region::range(1, 2), &Region::new(vec![3])).unwrap();
        let far = local_indist(&e, &a, &Region::range(1, 4), &Region::new(vec![5])).unwrap();
        assert!(far < near && near > 0.0);
        let sli = strong_local_indist(&e, &a, &Region::range(1, 2), &Region::new(vec![3]), SliForm::Symmetric).unwrap();
        assert!(near <= sli + 1e-12);
        let e0 = ising(6, 0.0);
        assert!(local_indist(&e0, &a, &Region::range(1, 2), &Region::new(vec![3])).unwrap() < 1e-14);
        assert!(local_indist(&e, &a, &Region::empty(), &Region::new(vec![1])).is_err());
        let h = ising(6, 0.3);
        let vals: Vec<f64> = (1..=3)
            .map(|l| strong_local_indist(&h, &a, &Region::range(1, l), &Region::new(vec![l + 1]), SliForm::OneSided).unwrap())
            .collect();
        assert!(vals[0] > vals[1] && vals[1] > vals[2] && vals[2].is_finite(), "{vals:?}");
    }

    #[test]
    fn mutual_information_values() {
        let bell = {
            let mut v = zeros(4, 4);
            for &i in &[0usize, 3] {
                for &j in &[0usize, 3] {
                    v[(i, j)] = cr(0.5);
                }
            }
            v
        };
        let gamma = Region::range(0, 1);
        let (a, c) = (Region::new(vec![0]), Region::new(vec![1]));
        assert!((mutual_information(&bell, &gamma, &a, &c, 2).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-12);
        let e = ising(8, 0.5);
        let g8 = e.graph().all();
        let s = e.sigma(&g8).unwrap();
        let (a, c) = (Region::new(vec![0]), Region::new(vec![7]));
        let mi = mutual_information(&s, &g8, &a, &c, 2).unwrap();
        assert!(mi <= mixing_condition(&s, &g8, &a, &c, 2).unwrap() + 1e-15);
        assert!(mi <= max_mutual_information(&s, &g8, &a, &c, 2).unwrap() + 1e-15);
        let m = marginals(&s, &g8, &a, &c, 2).unwrap();
        let l1 = trace_norm(&(&m.ac - &kron(&m.a, &m.c)));
        assert!(mi >= 0.5 * l1 * l1 - 1e-15);
    }

    #[test]
    fn similarity_examples() {
        let w = real_diag(&[0.6, 0.4]);
        let t = real_diag(&[0.5, 0.5]);
        let r = similarity(&w, &t);
        assert!((r.epsilon - 0.2).abs() < 1e-12 && r.support_equal);
        assert!(similarity(&w, &w).epsilon < 1e-12);
        assert!(r.bracket_slack() >= 0.0);
        // one-sided D_max does not control ε from below
        let w = real_diag(&[0.999, 0.001]);
        let t = real_diag(&[0.99, 0.01]);
        let r = similarity(&w, &t);
        assert!(r.dmax * r.dmax.exp() < r.epsilon);
        assert!(r.bracket_slack() >= 0.0);
    }

    #[test]
    fn relation_properties_hold() {
        for p in relation_properties_check(40, 3) {
            assert!(p.passes(), "{p:?}");
            assert!(p.trials > 0);
        }
        // diagonal hand examples
        let a = real_diag(&[1.0, 2.0]);
        let b = real_diag(&[1.1, 2.2]);
        let c = real_diag(&[1.21, 2.42]);
        let e1 = relation_epsilon(&a, &b);
        let e2 = relation_epsilon(&b, &c);
        assert!(relation_epsilon(&a, &c) <= e1 * e2 + e1 + e2 + 1e-12);
    }

    #[test]
    fn scans() {
        let e = ising(8, 0.5);
        let geom = ScanGeometry { start: 0, ls: vec![1, 2, 3, 4] };
        let r = decay_scan(&e, ClusteringMeasure::Covariance, &geom, 2).unwrap();
        let f = r.fit.unwrap();
        assert!(f.rate > 0.0 && f.r2 > 0.95);
        let e0 = ising(8, 0.0);
        for m in ClusteringMeasure::SIX {
            assert!(decay_scan(&e0, m, &geom, 1).unwrap().exact_zero, "{m:?}");
        }
        let short = ScanGeometry { start: 0, ls: vec![1, 2] };
        assert!(decay_scan(&e, ClusteringMeasure::Covariance, &short, 1).is_err());
    }
}

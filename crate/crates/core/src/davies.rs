//! Davies generators for single-site couplings, their detailed-balance and
//! spectral data, and the conditional expectations onto their fixed points.

use std::str::FromStr;
use std::sync::Arc;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{pauli, GibbsEnsemble};
use crate::lattice::Region;
use crate::linalg::{
    c64, cr, cx, dagger, eigh, eigh_sym, eye, fro, herm_asymmetry, hs, kron, op_norm,
    random, symmetrize, trace_prod, transpose, zeros, CMat, MatFun, Spectrum, matfun_spectrum,
};
use crate::operator::positions_in;
use crate::superop::{ConditionalExpectation, LocalTerm, Picture, Superoperator, DENSE_SUPEROP_MAX_DIM};
use crate::tensor::{embed_sub, ipow, Split};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChiKind {
    Glauber,
    Metropolis,
    ExpHalf,
}

impl FromStr for ChiKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<ChiKind> {
        match s {
            "glauber" => Ok(ChiKind::Glauber),
            "metropolis" => Ok(ChiKind::Metropolis),
            "exp_half" => Ok(ChiKind::ExpHalf),
            _ => Err(Error::Config(format!("unknown rate function '{s}'"))),
        }
    }
}

/// Transition rate as a function of the Bohr frequency.
#[derive(Clone, Copy, Debug)]
pub struct Chi {
    pub kind: ChiKind,
    pub beta: f64,
}

impl Chi {
    pub fn new(kind: ChiKind, beta: f64) -> Result<Chi> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::Config(format!("beta = {beta} must be finite and >= 0")));
        }
        Ok(Chi { kind, beta })
    }

    pub fn rate(&self, w: f64) -> f64 {
        let bw = self.beta * w;
        match self.kind {
            ChiKind::Glauber => 1.0 / (1.0 + (-bw).exp()),
            ChiKind::Metropolis => bw.exp().min(1.0),
            ChiKind::ExpHalf => (0.5 * bw).exp(),
        }
    }

    /// |χ(−ω) − e^{−βω} χ(ω)|, relative to χ(−ω).
    pub fn kms_residual(&self, w: f64) -> f64 {
        let lhs = self.rate(-w);
        let rhs = (-self.beta * w).exp() * self.rate(w);
        (lhs - rhs).abs() / lhs.abs().max(1e-300)
    }
}

/// Single-site coupling operators.
#[derive(Clone, Debug)]
pub enum Couplings {
    Xyz,
    X,
    Custom(Vec<CMat>),
}

impl Couplings {
    pub fn operators(&self, d: usize) -> Result<Vec<(String, CMat)>> {
        match self {
            Couplings::Xyz if d == 2 => Ok(['X', 'Y', 'Z']
                .iter()
                .map(|&c| (c.to_string(), pauli(c)))
                .collect()),
            Couplings::X if d == 2 => Ok(vec![("X".into(), pauli('X'))]),
            Couplings::Xyz => Ok(clock_shift_couplings(d)),
            Couplings::X => Ok(clock_shift_couplings(d).into_iter().take(1).collect()),
            Couplings::Custom(ops) => {
                let mut out = Vec::new();
                for (k, op) in ops.iter().enumerate() {
                    if op.nrows() != d || op.ncols() != d {
                        return Err(Error::Config(format!("coupling {k} is not {d}x{d}")));
                    }
                    if herm_asymmetry(op) > 1e-10 {
                        return Err(Error::Config(format!("coupling {k} is not Hermitian")));
                    }
                    out.push((format!("c{k}"), symmetrize(op)));
                }
                if out.is_empty() {
                    return Err(Error::Config("empty coupling list".into()));
                }
                Ok(out)
            }
        }
    }
}

/// Hermitian parts of the generalized shift and clock matrices.
fn clock_shift_couplings(d: usize) -> Vec<(String, CMat)> {
    let mut shift = zeros(d, d);
    let mut clock = zeros(d, d);
    for k in 0..d {
        shift[((k + 1) % d, k)] = cr(1.0);
        let ph = 2.0 * std::f64::consts::PI * k as f64 / d as f64;
        clock[(k, k)] = cx(ph.cos(), ph.sin());
    }
    let herm = |a: &CMat, imag: bool| -> CMat {
        let ad = dagger(a);
        if imag {
            Mat::from_fn(d, d, |i, j| cx(0.0, 1.0) * (a[(i, j)] - ad[(i, j)]))
        } else {
            a + &ad
        }
    };
    vec![
        ("S+".into(), herm(&shift, false)),
        ("S-".into(), herm(&shift, true)),
        ("C+".into(), herm(&clock, false)),
        ("C-".into(), herm(&clock, true)),
    ]
}

/// Groups sorted values into transitive clusters: consecutive values
/// closer than `tol` share a cluster.
fn clusters(values: &[f64], tol: f64) -> Vec<(f64, Vec<usize>)> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out: Vec<(f64, Vec<usize>)> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for i in idx {
        let v = values[i];
        if out.is_empty() || v - last > tol {
            out.push((v, vec![i]));
        } else {
            out.last_mut().unwrap().1.push(i);
        }
        last = v;
    }
    for (rep, members) in out.iter_mut() {
        *rep = members.iter().map(|&i| values[i]).sum::<f64>() / members.len() as f64;
    }
    out
}

/// Eigenprojectors of `h` with eigenvalues merged at `tol`.
pub fn energy_levels(h: &CMat, tol: f64) -> Result<Vec<(f64, CMat)>> {
    let sp = eigh(h)?;
    let n = h.nrows();
    Ok(clusters(&sp.values, tol)
        .into_iter()
        .map(|(e, members)| {
            let v = Mat::from_fn(n, members.len(), |i, k| sp.vectors[(i, members[k])]);
            (e, &v * v.adjoint())
        })
        .collect())
}

/// Bohr decomposition S = Σ_ω S(ω) with S(ω) = Σ_{E'−E=ω} P_E S P_{E'}.
/// Levels and frequencies are merged transitively at `tol`, defaulting to
/// 1e-9·max(‖H‖, 1).
pub fn bohr_decompose(h: &CMat, s: &CMat, tol: Option<f64>) -> Result<Vec<(f64, CMat)>> {
    let tol = tol.unwrap_or(1e-9 * op_norm(h).max(1.0));
    let levels = energy_levels(h, tol)?;
    let mut freqs = Vec::new();
    let mut blocks = Vec::new();
    for (e, p) in &levels {
        let ps = p * s;
        for (e2, p2) in &levels {
            let b = &ps * p2;
            if fro(&b) > 1e-14 * fro(s).max(1e-300) {
                freqs.push(e2 - e);
                blocks.push(b);
            }
        }
    }
    let mut out = Vec::new();
    for (w, members) in clusters(&freqs, tol) {
        let mut acc = zeros(s.nrows(), s.ncols());
        for i in members {
            acc += &blocks[i];
        }
        out.push((w, acc));
    }
    Ok(out)
}

/// Heisenberg-picture matrix of X ↦ c (A† X A − ½{A†A, X}).
pub fn dissipator_matrix(a: &CMat, c: f64) -> CMat {
    let n = a.nrows();
    let ad = dagger(a);
    let ada = &ad * a;
    let id = eye(n);
    let mut m = kron(&ad, &transpose(a));
    m -= crate::linalg::scaled(&kron(&ada, &id), cr(0.5));
    m -= crate::linalg::scaled(&kron(&id, &transpose(&ada)), cr(0.5));
    crate::linalg::scaled(&m, cr(c))
}

#[derive(Clone, Debug)]
pub struct Jump {
    pub site: usize,
    pub label: String,
    pub omega: f64,
    /// S(ω) on the support of the site term.
    pub op: CMat,
    pub rate: f64,
}

#[derive(Clone, Debug, Default)]
pub struct JumpSet {
    pub jumps: Vec<Jump>,
    /// (site, label, coupling operator on the same support as its jumps)
    pub couplings: Vec<(usize, String, CMat)>,
}

impl JumpSet {
    /// max ‖Σ_ω S(ω) − S‖_F
    pub fn reconstruction_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (x, label, s) in &self.couplings {
            let mut acc = zeros(s.nrows(), s.ncols());
            for j in self.jumps.iter().filter(|j| j.site == *x && &j.label == label) {
                acc += &j.op;
            }
            worst = worst.max(fro(&(&acc - s)));
        }
        worst
    }

    pub fn kms_residual(&self, chi: &Chi) -> f64 {
        self.jumps
            .iter()
            .map(|j| chi.kms_residual(j.omega))
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BohrMode {
    /// Frequencies of the Hamiltonian terms touching the site.
    Local,
    /// Frequencies of the full H_Γ (small systems only).
    Global,
}

/// Dissipative part belonging to one site.
#[derive(Clone, Debug)]
pub struct SiteTerm {
    pub site: usize,
    pub support: Region,
    /// Heisenberg superoperator matrix on `support`.
    pub heis: CMat,
}

pub struct Davies {
    pub ens: Arc<GibbsEnsemble>,
    pub region: Region,
    pub chi: Chi,
    pub mode: BohrMode,
    pub terms: Vec<SiteTerm>,
    pub jumps: JumpSet,
}

impl Davies {
    pub fn new(
        ens: Arc<GibbsEnsemble>,
        region: Region,
        couplings: &Couplings,
        chi: ChiKind,
        mode: BohrMode,
    ) -> Result<Davies> {
        if region.is_empty() {
            return Err(Error::Argument("empty region".into()));
        }
        let d = ens.d();
        let chi = Chi::new(chi, ens.beta)?;
        let ops = couplings.operators(d)?;
        let global_h = match mode {
            BohrMode::Global => {
                let dim = ipow(d, region.len());
                if dim > DENSE_SUPEROP_MAX_DIM {
                    return Err(Error::Resource(format!(
                        "global Bohr frequencies need dimension <= {DENSE_SUPEROP_MAX_DIM}, got {dim}"
                    )));
                }
                Some(ens.potential.hamiltonian_matrix(&region)?)
            }
            BohrMode::Local => None,
        };
        let mut terms = Vec::new();
        let mut jumps = JumpSet::default();
        for &x in region.sites() {
            let (support, h) = match &global_h {
                Some(h) => (region.clone(), h.clone()),
                None => ens.potential.near_hamiltonian_in(x, &region)?,
            };
            let pos = positions_in(support.sites(), &[x])?;
            let sp = Split::new(support.len(), d, &pos);
            let dim = sp.dim();
            let mut heis = zeros(dim * dim, dim * dim);
            for (label, s) in &ops {
                let se = embed_sub(s, &sp);
                for (w, sw) in bohr_decompose(&h, &se, None)? {
                    let rate = chi.rate(w);
                    heis += dissipator_matrix(&sw, rate);
                    jumps.jumps.push(Jump {
                        site: x,
                        label: label.clone(),
                        omega: w,
                        op: sw,
                        rate,
                    });
                }
                jumps.couplings.push((x, label.clone(), se));
            }
            terms.push(SiteTerm { site: x, support, heis });
        }
        Ok(Davies {
            ens,
            region,
            chi,
            mode,
            terms,
            jumps,
        })
    }

    pub fn d(&self) -> usize {
        self.ens.d()
    }

    pub fn dim(&self) -> usize {
        ipow(self.d(), self.region.len())
    }

    pub fn term(&self, x: usize) -> Option<&SiteTerm> {
        self.terms.iter().find(|t| t.site == x)
    }

    /// Dissipative part of the sites in `xs`, acting on the Hilbert space
    /// of `on` (which must contain their supports).
    pub fn local_dissipator_on(&self, xs: &Region, on: &Region, picture: Picture) -> Result<Superoperator> {
        let d = self.d();
        let mut lt = Vec::new();
        for t in self.terms.iter().filter(|t| xs.contains(t.site)) {
            let pos = positions_in(on.sites(), t.support.sites())?;
            let mat = match picture {
                Picture::Heisenberg => t.heis.clone(),
                Picture::Schrodinger => dagger(&t.heis),
            };
            lt.push(LocalTerm::new(on.len(), d, &pos, mat));
        }
        Ok(Superoperator::local(ipow(d, on.len()), picture, lt, None))
    }

    pub fn dissipator(&self, picture: Picture) -> Superoperator {
        self.local_dissipator_on(&self.region, &self.region, picture)
            .expect("site supports lie in the region")
    }

    /// Full generator i[H_Γ, ·] + dissipator (Heisenberg), or its dual.
    pub fn generator(&self, picture: Picture) -> Result<Superoperator> {
        let h = self.ens.potential.hamiltonian_matrix(&self.region)?;
        let coef = match picture {
            Picture::Heisenberg => cx(0.0, 1.0),
            Picture::Schrodinger => cx(0.0, -1.0),
        };
        let base = self.dissipator(picture);
        let terms = base.local_terms().expect("local representation").to_vec();
        Ok(Superoperator::local(self.dim(), picture, terms, Some((h, coef))))
    }

    /// The site term of `x` as a dense superoperator on the whole region.
    pub fn site_term_dense(&self, x: usize) -> Result<CMat> {
        self.local_dissipator_on(&Region::new(vec![x]), &self.region, Picture::Heisenberg)?
            .to_dense()
    }

    pub fn sigma(&self) -> Result<CMat> {
        self.ens.sigma(&self.region)
    }

    /// E^D_X: projection onto the fixed points of the site terms in `x`,
    /// computed on the union of their supports and extended by the identity.
    pub fn condexp(&self, x: &Region) -> Result<ConditionalExpectation> {
        if !x.is_subset(&self.region) || x.is_empty() {
            return Err(Error::Argument("E^D region must be a nonempty subset of the generator's region".into()));
        }
        let mut y = Region::empty();
        for t in self.terms.iter().filter(|t| x.contains(t.site)) {
            y = y.union(&t.support);
        }
        let l = self.local_dissipator_on(x, &y, Picture::Heisenberg)?;
        if ipow(self.d(), y.len()) > DENSE_SUPEROP_MAX_DIM && y == self.region {
            // an ergodic generator on the whole region projects onto σ
            let sigma = self.sigma()?;
            let rep = spectral_gap(&l, &sigma)?;
            if rep.kernel_dim != 1 {
                return Err(Error::Resource(format!(
                    "E^D on dimension {} with a degenerate kernel needs a dense projector",
                    self.dim()
                )));
            }
            let mut e = ConditionalExpectation::trace_map(&sigma);
            e.label = format!("E^D_{:?}", x.sites());
            return Ok(e);
        }
        let sig_y = self.ens.data(&y)?;
        let (e_heis, _) = kernel_projector(&l, &sig_y.spectrum)?;
        let d = self.d();
        let pos = positions_in(self.region.sites(), y.sites())?;
        let n = self.region.len();
        let heis = Superoperator::local(self.dim(), Picture::Heisenberg, vec![LocalTerm::new(n, d, &pos, e_heis.clone())], None);
        let schr = Superoperator::local(self.dim(), Picture::Schrodinger, vec![LocalTerm::new(n, d, &pos, dagger(&e_heis))], None);
        Ok(ConditionalExpectation {
            heis,
            schr,
            sigma: self.sigma()?,
            label: format!("E^D_{:?}", x.sites()),
        })
    }
}

/// Symmetry used for detailed-balance residuals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weighting {
    Gns,
    Kms,
}

/// max over random normalized X, Y of |⟨X, L Y⟩_σ − ⟨L X, Y⟩_σ| for a
/// Heisenberg-picture map.
pub fn detailed_balance_residual(l: &Superoperator, sigma: &CMat, w: Weighting, samples: usize, seed: u64) -> Result<f64> {
    let sp = eigh(sigma)?;
    let root = matfun_spectrum(&sp, MatFun::Sqrt)?;
    let inner = |a: &CMat, b: &CMat| -> c64 {
        match w {
            Weighting::Gns => trace_prod(sigma, &(&dagger(a) * b)),
            Weighting::Kms => trace_prod(&root, &(&(&dagger(a) * &root) * b)),
        }
    };
    let mut rng = random::rng(seed);
    let n = l.dim;
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let mut x = random::ginibre(&mut rng, n, n);
        let mut y = random::ginibre(&mut rng, n, n);
        x = crate::linalg::scaled(&x, cr(1.0 / fro(&x)));
        y = crate::linalg::scaled(&y, cr(1.0 / fro(&y)));
        let r = inner(&x, &l.apply(&y)) - inner(&l.apply(&x), &y);
        worst = worst.max(r.norm());
    }
    Ok(worst)
}

/// −σ^{1/4} L(σ^{-1/4} · σ^{-1/4}) σ^{1/4} as a dense matrix.
fn kms_hermitian(l: &Superoperator, sig: &Spectrum) -> Result<(CMat, CMat, CMat)> {
    let q = matfun_spectrum(sig, MatFun::Pow(0.25))?;
    let qi = matfun_spectrum(sig, MatFun::Pow(-0.25))?;
    let g = kron(&q, &transpose(&q));
    let gi = kron(&qi, &transpose(&qi));
    let ld = l.to_dense()?;
    let hmat = crate::linalg::scaled(&(&(&g * &ld) * &gi), cr(-1.0));
    let asym = herm_asymmetry(&hmat);
    if asym > 1e-8 {
        return Err(Error::Argument(format!(
            "generator is not KMS-symmetric (relative asymmetry {asym:.2e})"
        )));
    }
    Ok((symmetrize(&hmat), g, gi))
}

/// KMS-orthogonal projector onto ker L (Heisenberg matrix) and the kernel
/// dimension.
fn kernel_projector(l: &Superoperator, sig: &Spectrum) -> Result<(CMat, usize)> {
    let (h, g, gi) = kms_hermitian(l, sig)?;
    let sp = eigh_sym(&h);
    let scale = sp.max_abs().max(1e-300);
    let (kernel, rest) = split_kernel(&sp.values, scale)?;
    let n = h.nrows();
    let v = Mat::from_fn(n, kernel.len(), |i, k| sp.vectors[(i, kernel[k])]);
    let _ = rest;
    Ok((&(&gi * &(&v * v.adjoint())) * &g, kernel.len()))
}

/// Indices of kernel eigenvalues and the smallest nonzero eigenvalue.
fn split_kernel(values: &[f64], scale: f64) -> Result<(Vec<usize>, f64)> {
    let tol = 1e-8 * scale;
    let kernel: Vec<usize> = (0..values.len()).filter(|&i| values[i].abs() < tol).collect();
    let kmax = kernel.iter().map(|&i| values[i].abs()).fold(0.0, f64::max);
    let gap = (0..values.len())
        .filter(|&i| values[i].abs() >= tol)
        .map(|i| values[i].abs())
        .fold(f64::INFINITY, f64::min);
    if kernel.is_empty() {
        return Err(Error::Conditioning("generator has no kernel".into()));
    }
    if gap.is_finite() && (gap < 1e3 * kmax || gap < 1e-5 * scale) {
        return Err(Error::Conditioning(format!(
            "kernel not separated: largest kernel value {kmax:.2e}, gap {gap:.2e}"
        )));
    }
    Ok((kernel, gap))
}

/// KMS-orthogonal projection onto the fixed points of a KMS-symmetric
/// Heisenberg generator, as a conditional expectation.
pub fn fixed_point_projection(l: &Superoperator, sigma: &CMat) -> Result<ConditionalExpectation> {
    let sp = eigh(sigma)?;
    let (e, _) = kernel_projector(l, &sp)?;
    let n = l.dim;
    Ok(ConditionalExpectation {
        heis: Superoperator::dense(e.clone(), n, Picture::Heisenberg),
        schr: Superoperator::dense(dagger(&e), n, Picture::Schrodinger),
        sigma: sigma.clone(),
        label: "fixed-point projection".into(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GapReport {
    pub gap: f64,
    pub kernel_dim: usize,
    pub method: &'static str,
    pub iterations: usize,
}

/// Spectral gap of the negated KMS-symmetrized generator. Dense for
/// dimension ≤ [`DENSE_SUPEROP_MAX_DIM`], Lanczos with the kernel vector
/// σ^{1/2} deflated above.
pub fn spectral_gap(l: &Superoperator, sigma: &CMat) -> Result<GapReport> {
    let sp = eigh(sigma)?;
    if sp.min_value() <= 0.0 {
        return Err(Error::Domain("spectral gap needs a full-rank state".into()));
    }
    if l.dim <= DENSE_SUPEROP_MAX_DIM {
        let (h, _, _) = kms_hermitian(l, &sp)?;
        let hs_ = eigh_sym(&h);
        let scale = hs_.max_abs().max(1e-300);
        let (kernel, gap) = split_kernel(&hs_.values, scale)?;
        return Ok(GapReport {
            gap,
            kernel_dim: kernel.len(),
            method: "dense",
            iterations: 0,
        });
    }
    lanczos_gap(l, &sp)
}

fn lanczos_gap(l: &Superoperator, sp: &Spectrum) -> Result<GapReport> {
    let n = l.dim;
    let q = matfun_spectrum(sp, MatFun::Pow(0.25))?;
    let qi = matfun_spectrum(sp, MatFun::Pow(-0.25))?;
    let op = |x: &CMat| -> CMat {
        let y = l.apply(&(&(&qi * x) * &qi));
        crate::linalg::scaled(&(&(&q * &y) * &q), cr(-1.0))
    };
    let mut k0 = matfun_spectrum(sp, MatFun::Sqrt)?;
    k0 = crate::linalg::scaled(&k0, cr(1.0 / fro(&k0)));
    // symmetry probe
    let mut rng = random::rng(0x5eed);
    let a = random::ginibre(&mut rng, n, n);
    let b = random::ginibre(&mut rng, n, n);
    let (oa, ob) = (op(&a), op(&b));
    let asym = (hs(&a, &ob) - hs(&oa, &b)).norm() / (fro(&a) * fro(&ob) + fro(&oa) * fro(&b)).max(1e-300);
    if asym > 1e-8 {
        return Err(Error::Argument(format!(
            "generator is not KMS-symmetric (relative asymmetry {asym:.2e})"
        )));
    }
    let kres = fro(&op(&k0));
    let project = |x: &mut CMat, basis: &[CMat]| {
        for _ in 0..2 {
            let c = hs(&k0, x);
            *x -= crate::linalg::scaled(&k0, c);
            for v in basis {
                let c = hs(v, x);
                *x -= crate::linalg::scaled(v, c);
            }
        }
    };
    let mut v = random::ginibre(&mut rng, n, n);
    project(&mut v, &[]);
    v = crate::linalg::scaled(&v, cr(1.0 / fro(&v)));
    let mut basis: Vec<CMat> = vec![v];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let max_iter = (n * n - 1).min(400);
    let mut prev = f64::INFINITY;
    let mut stable = 0;
    let mut best = f64::INFINITY;
    let mut scale: f64 = 0.0;
    let mut iters = 0;
    for it in 0..max_iter {
        iters = it + 1;
        let cur = basis.last().unwrap().clone();
        let mut w = op(&cur);
        let a = hs(&cur, &w).re;
        alpha.push(a);
        project(&mut w, &basis);
        let b = fro(&w);
        let m = alpha.len();
        let mut t = zeros(m, m);
        for i in 0..m {
            t[(i, i)] = cr(alpha[i]);
            if i + 1 < m {
                t[(i, i + 1)] = cr(beta[i]);
                t[(i + 1, i)] = cr(beta[i]);
            }
        }
        let ts = eigh_sym(&t);
        best = ts.min_value();
        scale = scale.max(ts.max_abs());
        let resid = b * ts.vectors[(m - 1, 0)].norm();
        if (best - prev).abs() < 1e-12 * scale.max(1e-300) {
            stable += 1;
        } else {
            stable = 0;
        }
        prev = best;
        if (stable >= 3 && resid < 1e-8 * scale) || b < 1e-12 * scale.max(1e-300) {
            break;
        }
        beta.push(b);
        basis.push(crate::linalg::scaled(&w, cr(1.0 / b)));
    }
    let tol = 1e-8 * scale.max(1e-300);
    if kres > tol {
        return Err(Error::Conditioning(format!(
            "sigma^(1/2) is not in the kernel (residual {kres:.2e})"
        )));
    }
    let kernel_dim = if best < tol { 2 } else { 1 };
    Ok(GapReport {
        gap: best,
        kernel_dim,
        method: "lanczos",
        iterations: iters,
    })
}

//! Schmidt conditional expectations for commuting nearest-neighbour
//! potentials: edge factorizations, boundary block structure, the explicit
//! block formula, the KMS projection onto the boundary algebra, Schmidt
//! generators and the block-wise 1→∞ clustering norm.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use faer::Mat;
use serde::Serialize;

use crate::davies::Davies;
use crate::dynamics::relative_entropy;
use crate::error::{Error, Result};
use crate::hamiltonian::GibbsEnsemble;
use crate::lattice::Region;
use crate::linalg::{
    c64, column_span, cr, dagger, eigh_sym, eye, fro, kron, kron_all, matfun, null_space, random,
    sandwich_superop, scaled, solve, svd, trace, trace_prod, vec_rm, zeros, CMat, MatFun, Spectrum,
};
use crate::operator::{modular_conjugate_spectrum, positions_in};
use crate::superop::{sampled_difference, ConditionalExpectation, LocalTerm, Picture, Superoperator, DENSE_SUPEROP_MAX_DIM};
use crate::tensor::{conjugate_site, conjugate_sub, digits, ipow, Split};

/// Operator Schmidt decomposition e^{-βh_{bc}} = Σ_s L_s ⊗ R_s.
#[derive(Clone, Debug)]
pub struct EdgeFactorization {
    pub edge: (usize, usize),
    pub left: Vec<CMat>,
    pub right: Vec<CMat>,
    pub singular_values: Vec<f64>,
}

impl EdgeFactorization {
    pub fn rank(&self) -> usize {
        self.left.len()
    }

    pub fn reconstruct(&self) -> CMat {
        let d = self.left[0].nrows();
        let mut acc = zeros(d * d, d * d);
        for (l, r) in self.left.iter().zip(&self.right) {
            acc += kron(l, r);
        }
        acc
    }

    /// Smallest eigenvalue of the normalized Gram matrix of each factor list.
    pub fn gram_min_eig(&self) -> f64 {
        let g = |ops: &[CMat]| {
            let m = ops.len();
            let gm = Mat::from_fn(m, m, |i, j| {
                crate::linalg::hs(&ops[i], &ops[j]) / (fro(&ops[i]) * fro(&ops[j]))
            });
            eigh_sym(&gm).min_value()
        };
        g(&self.left).min(g(&self.right))
    }
}

/// Realignment SVD of a d²×d² operator into Σ_s s_k U_k ⊗ V_k, dropping
/// singular values below 1e-12 of the largest.
pub fn operator_schmidt(m: &CMat, d: usize) -> (Vec<CMat>, Vec<CMat>, Vec<f64>) {
    let mut r = zeros(d * d, d * d);
    for i1 in 0..d {
        for i2 in 0..d {
            for j1 in 0..d {
                for j2 in 0..d {
                    r[(i1 * d + j1, i2 * d + j2)] = m[(i1 * d + i2, j1 * d + j2)];
                }
            }
        }
    }
    let (u, s, v) = svd(&r);
    let top = s.first().copied().unwrap_or(0.0);
    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut sv = Vec::new();
    for (k, &sk) in s.iter().enumerate() {
        if sk <= 1e-12 * top {
            continue;
        }
        let w = sk.sqrt();
        left.push(Mat::from_fn(d, d, |i, j| u[(i * d + j, k)] * w));
        right.push(Mat::from_fn(d, d, |i, j| v[(i * d + j, k)].conj() * w));
        sv.push(sk);
    }
    (left, right, sv)
}

/// Factorization of e^{-βh_{bc}} with `b` as the left factor.
pub fn edge_schmidt_decompose(ens: &GibbsEnsemble, b: usize, c: usize) -> Result<EdgeFactorization> {
    let d = ens.d();
    let g = ens.graph();
    if !g.edges().contains(&(b.min(c), b.max(c))) {
        return Err(Error::Argument(format!("({b}, {c}) is not an edge")));
    }
    // an edge without a term factorizes trivially
    let h = ens.potential.term_ordered(b, c).unwrap_or_else(|| zeros(d * d, d * d));
    let e = matfun(&scaled(&h, cr(-ens.beta)), MatFun::Exp)?;
    let (left, right, singular_values) = operator_schmidt(&e, d);
    Ok(EdgeFactorization {
        edge: (b, c),
        left,
        right,
        singular_values,
    })
}

/// HS-orthonormal basis of the unital *-algebra generated by `gens`.
pub fn generate_algebra(gens: &[CMat], d: usize) -> Vec<CMat> {
    let to_cols = |ops: &[CMat]| {
        let vs: Vec<Vec<c64>> = ops.iter().map(vec_rm).collect();
        Mat::from_fn(d * d, vs.len(), |i, j| vs[j][i])
    };
    let from_cols = |m: &CMat| -> Vec<CMat> {
        (0..m.ncols())
            .map(|k| Mat::from_fn(d, d, |i, j| m[(i * d + j, k)]))
            .collect()
    };
    let mut seed = vec![eye(d)];
    for g in gens {
        seed.push(g.clone());
        seed.push(dagger(g));
    }
    let mut basis = from_cols(&column_span(&to_cols(&seed), 1e-10));
    loop {
        let mut all = basis.clone();
        for a in &basis {
            for b in &basis {
                all.push(a * b);
            }
        }
        let next = from_cols(&column_span(&to_cols(&all), 1e-10));
        if next.len() == basis.len() || next.len() >= d * d {
            return next;
        }
        basis = next;
    }
}

/// Largest relative commutator between elements of two operator lists.
fn max_commutator(a: &[CMat], b: &[CMat]) -> f64 {
    let mut worst: f64 = 0.0;
    for x in a {
        for y in b {
            let c = &(x * y) - &(y * x);
            worst = worst.max(fro(&c) / (fro(x) * fro(y)).max(1e-300));
        }
    }
    worst
}

fn eigen_clusters(sp: &Spectrum, tol: f64) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for i in 0..sp.values.len() {
        if i > 0 && sp.values[i] - sp.values[i - 1] <= tol {
            out.last_mut().unwrap().push(i);
        } else {
            out.push(vec![i]);
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct Block {
    /// First column of the block in the rotated basis.
    pub offset: usize,
    pub dout: usize,
    pub din: usize,
}

/// Block decomposition of one boundary site: in the basis given by the
/// columns of `w` (ordered block, out index, in index) the site algebra is
/// ⊕_α B(C^{dout}) ⊗ 1_{din}.
#[derive(Clone, Debug)]
pub struct SiteBlocks {
    pub site: usize,
    pub w: CMat,
    pub blocks: Vec<Block>,
    /// HS-orthonormal basis of the site algebra.
    pub algebra: Vec<CMat>,
}

impl SiteBlocks {
    pub fn trivial(site: usize, d: usize) -> SiteBlocks {
        SiteBlocks {
            site,
            w: eye(d),
            blocks: vec![Block { offset: 0, dout: 1, din: d }],
            algebra: vec![scaled(&eye(d), cr(1.0 / (d as f64).sqrt()))],
        }
    }

    /// Largest off-factor action of the algebra in the rotated basis: each
    /// element must be block diagonal with blocks of the form Y ⊗ 1.
    pub fn factor_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in &self.algebra {
            let r = &(dagger(&self.w) * a) * &self.w;
            let mut ideal = zeros(r.nrows(), r.ncols());
            for b in &self.blocks {
                for o in 0..b.dout {
                    for o2 in 0..b.dout {
                        let mut avg = c64::new(0.0, 0.0);
                        for k in 0..b.din {
                            avg += r[(b.offset + o * b.din + k, b.offset + o2 * b.din + k)];
                        }
                        avg /= b.din as f64;
                        for k in 0..b.din {
                            ideal[(b.offset + o * b.din + k, b.offset + o2 * b.din + k)] = avg;
                        }
                    }
                }
            }
            worst = worst.max(fro(&(&r - &ideal)));
        }
        worst
    }
}

/// Block structure of the algebra generated by `gens` on C^d.
pub fn site_blocks(site: usize, gens: &[CMat], d: usize, seed: u64) -> Result<SiteBlocks> {
    if gens.is_empty() {
        return Ok(SiteBlocks::trivial(site, d));
    }
    let alg = generate_algebra(gens, d);
    let m = alg.len();
    let mut rng = random::rng(seed);
    // center: Y = Σ c_i B_i commuting with every B_j
    let mut rows = zeros(m * d * d, m);
    for (j, bj) in alg.iter().enumerate() {
        for (i, bi) in alg.iter().enumerate() {
            let c = &(bj * bi) - &(bi * bj);
            let v = vec_rm(&c);
            for (r, x) in v.iter().enumerate() {
                rows[(j * d * d + r, i)] = *x;
            }
        }
    }
    // an abelian algebra is its own center
    let ns = if fro(&rows) < 1e-12 { eye(m) } else { null_space(&rows, 1e-9) };
    let mut central = zeros(d, d);
    for k in 0..ns.ncols() {
        let mut z = zeros(d, d);
        for i in 0..m {
            z += scaled(&alg[i], ns[(i, k)]);
        }
        let zh = &z + &dagger(&z);
        let za = scaled(&(&z - &dagger(&z)), c64::new(0.0, 1.0));
        central += scaled(&zh, cr(random::gaussian(&mut rng)));
        central += scaled(&za, cr(random::gaussian(&mut rng)));
    }
    let csp = eigh_sym(&central);
    let scale = csp.max_abs().max(1e-300);
    let mut w = zeros(d, d);
    let mut blocks = Vec::new();
    let mut offset = 0;
    for members in eigen_clusters(&csp, 1e-8 * scale) {
        let dim_a = members.len();
        let v = Mat::from_fn(d, dim_a, |i, k| csp.vectors[(i, members[k])]);
        let vd = dagger(&v);
        let restricted: Vec<CMat> = alg.iter().map(|b| &(&vd * b) * &v).collect();
        let cols = {
            let vs: Vec<Vec<c64>> = restricted.iter().map(vec_rm).collect();
            Mat::from_fn(dim_a * dim_a, vs.len(), |i, j| vs[j][i])
        };
        let rdim = column_span(&cols, 1e-9).ncols();
        let dout = (rdim as f64).sqrt().round() as usize;
        if dout * dout != rdim || dim_a % dout != 0 {
            return Err(Error::Numerical(format!(
                "site {site}: block of dimension {dim_a} carries an algebra of dimension {rdim}"
            )));
        }
        let din = dim_a / dout;
        // aligned basis of the factorization C^{dout} ⊗ C^{din}
        let mut hm = zeros(dim_a, dim_a);
        let mut xm = zeros(dim_a, dim_a);
        for r in &restricted {
            hm += scaled(&(r + &dagger(r)), cr(random::gaussian(&mut rng)));
            xm += scaled(r, c64::new(random::gaussian(&mut rng), random::gaussian(&mut rng)));
        }
        let hsp = eigh_sym(&hm);
        let hscale = hsp.max_abs().max(1e-300);
        let cl = eigen_clusters(&hsp, 1e-8 * hscale);
        if cl.len() != dout || cl.iter().any(|c| c.len() != din) {
            return Err(Error::Numerical(format!(
                "site {site}: factor eigenspaces do not split as {dout} x {din}"
            )));
        }
        let espace: Vec<CMat> = cl
            .iter()
            .map(|c| Mat::from_fn(dim_a, c.len(), |i, k| hsp.vectors[(i, c[k])]))
            .collect();
        let f = &espace[0];
        let mut local = zeros(dim_a, dim_a);
        for (o, e) in espace.iter().enumerate() {
            let g = if o == 0 {
                f.clone()
            } else {
                let q = e * dagger(e);
                let q1 = f * dagger(f);
                &(&(&q * &xm) * &q1) * f
            };
            let nrm = (0..din)
                .map(|i| {
                    let mut s = 0.0;
                    for r in 0..dim_a {
                        s += g[(r, i)].norm_sqr();
                    }
                    s.sqrt()
                })
                .fold(0.0, f64::max);
            if nrm < 1e-10 {
                return Err(Error::Numerical(format!("site {site}: unlucky alignment element")));
            }
            for k in 0..din {
                for r in 0..dim_a {
                    local[(r, o * din + k)] = g[(r, k)] / nrm;
                }
            }
        }
        let cols = &v * &local;
        for i in 0..d {
            for j in 0..dim_a {
                w[(i, offset + j)] = cols[(i, j)];
            }
        }
        blocks.push(Block { offset, dout, din });
        offset += dim_a;
    }
    Ok(SiteBlocks {
        site,
        w,
        blocks,
        algebra: alg,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SiteBlockSummary {
    pub site: usize,
    pub algebra_dim: usize,
    pub projector_ranks: Vec<usize>,
    pub factor_dims: Vec<(usize, usize)>,
}

/// Per-site block data for the boundary of a region.
#[derive(Clone, Debug)]
pub struct BoundaryBlocks {
    pub region: Region,
    pub sites: Vec<Arc<SiteBlocks>>,
}

impl BoundaryBlocks {
    pub fn summary(&self) -> Vec<SiteBlockSummary> {
        self.sites
            .iter()
            .map(|s| SiteBlockSummary {
                site: s.site,
                algebra_dim: s.algebra.len(),
                projector_ranks: s.blocks.iter().map(|b| b.dout * b.din).collect(),
                factor_dims: s.blocks.iter().map(|b| (b.dout, b.din)).collect(),
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary()).expect("plain data serializes")
    }
}

/// One boundary condition of a region with its index tables.
struct BlockTable {
    alpha: Vec<usize>,
    n_out: usize,
    n_in: usize,
    /// global index of (outer, inner), row-major
    idx: Vec<usize>,
    tau: CMat,
}

/// Everything needed to apply E^S_A on the region Γ.
struct BlockStructure {
    dim: usize,
    n: usize,
    d: usize,
    /// (position in Γ, W) for the boundary sites with a nontrivial basis change.
    rot: Vec<(usize, CMat)>,
    tables: Vec<BlockTable>,
}

/// π with u[(π(b), b)] = 1, when u is a permutation matrix.
fn permutation_of(u: &CMat) -> Option<Vec<usize>> {
    let n = u.nrows();
    let mut perm = Vec::with_capacity(n);
    for b in 0..n {
        let mut hit = None;
        for a in 0..n {
            let v = u[(a, b)];
            if (v - cr(1.0)).norm() < 1e-14 {
                if hit.is_some() {
                    return None;
                }
                hit = Some(a);
            } else if v.norm() > 1e-14 {
                return None;
            }
        }
        perm.push(hit?);
    }
    Some(perm)
}

impl BlockStructure {
    fn rotate_in(&self, x: &CMat) -> CMat {
        self.rot
            .iter()
            .fold(x.clone(), |y, (p, w)| conjugate_site(w, &y, self.n, self.d, *p))
    }

    fn rotate_out(&self, x: &CMat) -> CMat {
        self.rot
            .iter()
            .fold(x.clone(), |y, (p, w)| conjugate_site(&dagger(w), &y, self.n, self.d, *p))
    }

    fn heis(&self, x: &CMat) -> CMat {
        let xr = self.rotate_in(x);
        let mut out = zeros(self.dim, self.dim);
        for t in &self.tables {
            let (no, ni) = (t.n_out, t.n_in);
            for o in 0..no {
                let ro = &t.idx[o * ni..(o + 1) * ni];
                for o2 in 0..no {
                    let ro2 = &t.idx[o2 * ni..(o2 + 1) * ni];
                    let mut y = c64::new(0.0, 0.0);
                    for i in 0..ni {
                        for j in 0..ni {
                            y += t.tau[(i, j)] * xr[(ro[j], ro2[i])];
                        }
                    }
                    for i in 0..ni {
                        out[(ro[i], ro2[i])] = y;
                    }
                }
            }
        }
        self.rotate_out(&out)
    }

    fn schr(&self, rho: &CMat) -> CMat {
        let rr = self.rotate_in(rho);
        let mut out = zeros(self.dim, self.dim);
        for t in &self.tables {
            let (no, ni) = (t.n_out, t.n_in);
            for o in 0..no {
                let ro = &t.idx[o * ni..(o + 1) * ni];
                for o2 in 0..no {
                    let ro2 = &t.idx[o2 * ni..(o2 + 1) * ni];
                    let mut mv = c64::new(0.0, 0.0);
                    for i in 0..ni {
                        mv += rr[(ro[i], ro2[i])];
                    }
                    for i in 0..ni {
                        for j in 0..ni {
                            out[(ro[i], ro2[j])] = mv * t.tau[(i, j)];
                        }
                    }
                }
            }
        }
        self.rotate_out(&out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchmidtMethod {
    BlockFormula,
    KmsProjection,
}

/// The Schmidt algebra N_A restricted to A∂ (it is the full algebra
/// outside), with a KMS-orthonormal basis w.r.t. σ^{A∂}.
#[derive(Clone, Debug)]
pub struct SchmidtAlgebra {
    pub region: Region,
    pub support: Region,
    pub basis: Vec<CMat>,
    pub sigma: CMat,
}

impl SchmidtAlgebra {
    fn hs_projection_residual(&self, x: &CMat) -> f64 {
        // HS-orthonormalize once per call; the basis is small
        let n = x.nrows();
        let cols = {
            let vs: Vec<Vec<c64>> = self.basis.iter().map(vec_rm).collect();
            Mat::from_fn(n * n, vs.len(), |i, j| vs[j][i])
        };
        let q = column_span(&cols, 1e-12);
        let v = vec_rm(x);
        let vm = Mat::from_fn(n * n, 1, |i, _| v[i]);
        let p = &q * &(q.adjoint() * &vm);
        let r = &vm - &p;
        fro(&r) / fro(x).max(1e-300)
    }

    /// Largest relative loss when projecting products of basis elements
    /// back onto the span.
    pub fn closure_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in &self.basis {
            for b in &self.basis {
                worst = worst.max(self.hs_projection_residual(&(a * b)));
            }
            worst = worst.max(self.hs_projection_residual(&dagger(a)));
        }
        worst
    }

    pub fn modular_residual(&self, s: f64) -> f64 {
        let sp = eigh_sym(&self.sigma);
        self.basis
            .iter()
            .map(|b| self.hs_projection_residual(&modular_conjugate_spectrum(b, &sp, s)))
            .fold(0.0, f64::max)
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

type BlockKey = (usize, Vec<usize>);

/// Schmidt expectations of a commuting nearest-neighbour model on Γ.
pub struct SchmidtSystem {
    pub ens: Arc<GibbsEnsemble>,
    pub gamma: Region,
    sites: Mutex<HashMap<BlockKey, Arc<SiteBlocks>>>,
    structures: Mutex<HashMap<Region, Arc<BlockStructure>>>,
}

impl SchmidtSystem {
    pub fn new(ens: Arc<GibbsEnsemble>, gamma: Region) -> Result<SchmidtSystem> {
        if !ens.potential.commuting {
            return Err(Error::UnsupportedModel(format!(
                "Schmidt expectations need a commuting potential ({} is not)",
                ens.potential.model.name()
            )));
        }
        if gamma.is_empty() {
            return Err(Error::Argument("empty region".into()));
        }
        Ok(SchmidtSystem {
            ens,
            gamma,
            sites: Mutex::new(HashMap::new()),
            structures: Mutex::new(HashMap::new()),
        })
    }

    pub fn d(&self) -> usize {
        self.ens.d()
    }

    pub fn dim(&self) -> usize {
        ipow(self.d(), self.gamma.len())
    }

    fn check_region(&self, a: &Region) -> Result<()> {
        if a.is_empty() || !a.is_subset(&self.gamma) {
            return Err(Error::Argument(format!(
                "region {:?} must be a nonempty subset of {:?}",
                a.sites(),
                self.gamma.sites()
            )));
        }
        Ok(())
    }

    /// ∂A within Γ.
    pub fn boundary(&self, a: &Region) -> Region {
        self.ens.graph().bd(a).intersect(&self.gamma)
    }

    pub fn closure(&self, a: &Region) -> Region {
        a.union(&self.boundary(a))
    }

    /// Neighbours of `b` in Γ outside A.
    fn outward(&self, b: usize, a: &Region) -> Vec<usize> {
        self.ens
            .graph()
            .neighbors(b)
            .iter()
            .copied()
            .filter(|&c| self.gamma.contains(c) && !a.contains(c))
            .collect()
    }

    fn site(&self, b: usize, outward: Vec<usize>) -> Result<Arc<SiteBlocks>> {
        let key = (b, outward.clone());
        if let Some(s) = self.sites.lock().unwrap().get(&key) {
            return Ok(s.clone());
        }
        let d = self.d();
        let mut per_edge: Vec<Vec<CMat>> = Vec::new();
        for &c in &outward {
            let f = edge_schmidt_decompose(&self.ens, b, c)?;
            per_edge.push(f.left);
        }
        for i in 0..per_edge.len() {
            for j in i + 1..per_edge.len() {
                let alg_i = generate_algebra(&per_edge[i], d);
                let alg_j = generate_algebra(&per_edge[j], d);
                let c = max_commutator(&alg_i, &alg_j);
                if c > 1e-8 {
                    return Err(Error::UnsupportedModel(format!(
                        "boundary algebras at site {b} do not commute ({c:.2e})"
                    )));
                }
            }
        }
        let gens: Vec<CMat> = per_edge.into_iter().flatten().collect();
        // identity-proportional generators carry no structure
        let gens: Vec<CMat> = gens
            .into_iter()
            .filter(|g| {
                let t = trace(g) / d as f64;
                fro(&(g - &scaled(&eye(d), t))) > 1e-12 * fro(g)
            })
            .collect();
        let sb = Arc::new(site_blocks(b, &gens, d, 0x5c4d + b as u64)?);
        self.sites.lock().unwrap().insert(key, sb.clone());
        Ok(sb)
    }

    pub fn boundary_blocks(&self, a: &Region) -> Result<BoundaryBlocks> {
        self.check_region(a)?;
        let mut sites = Vec::new();
        for &b in self.boundary(a).sites() {
            sites.push(self.site(b, self.outward(b, a))?);
        }
        Ok(BoundaryBlocks {
            region: a.clone(),
            sites,
        })
    }

    fn structure(&self, a: &Region) -> Result<Arc<BlockStructure>> {
        if let Some(s) = self.structures.lock().unwrap().get(a) {
            return Ok(s.clone());
        }
        let bb = self.boundary_blocks(a)?;
        let d = self.d();
        let ad = self.closure(a);
        let n_ad = ad.len();
        let bsites: Vec<usize> = bb.sites.iter().map(|s| s.site).collect();
        let rot = kron_all(&bb.sites.iter().map(|s| s.w.clone()).collect::<Vec<_>>());
        let rot = if bsites.is_empty() { eye(1) } else { rot };
        // σ^{A∂} in the rotated basis
        let sig_ad = self.ens.sigma(&ad)?;
        let sig_rot = if bsites.is_empty() {
            sig_ad
        } else {
            let sp = Split::new(n_ad, d, &positions_in(ad.sites(), &bsites)?);
            conjugate_sub(&rot, &sig_ad, &sp)
        };
        let sp_ad = Split::new(self.gamma.len(), d, &positions_in(self.gamma.sites(), ad.sites())?);
        let a_pos: Vec<usize> = positions_in(ad.sites(), a.sites())?;
        let b_pos: Vec<usize> = positions_in(ad.sites(), &bsites)?;
        let nblocks: Vec<usize> = bb.sites.iter().map(|s| s.blocks.len()).collect();
        let n_alpha: usize = nblocks.iter().product();
        let drest = sp_ad.drest;
        let mut tables = Vec::new();
        for ai in 0..n_alpha {
            // mixed-radix boundary condition
            let mut alpha = vec![0; nblocks.len()];
            let mut rem = ai;
            for k in (0..nblocks.len()).rev() {
                alpha[k] = rem % nblocks[k];
                rem /= nblocks[k];
            }
            let blks: Vec<&Block> = bb.sites.iter().zip(&alpha).map(|(s, &x)| &s.blocks[x]).collect();
            let n_o_b: usize = blks.iter().map(|b| b.dout).product();
            let n_i_b: usize = blks.iter().map(|b| b.din).product();
            let n_a = ipow(d, a.len());
            let n_in = n_a * n_i_b;
            let local = |ob: usize, ia: usize, ib: usize| -> usize {
                let mut dig = vec![0usize; n_ad];
                for (p, x) in a_pos.iter().zip(digits(ia, a.len(), d)) {
                    dig[*p] = x;
                }
                let mut orem = ob;
                let mut irem = ib;
                let mut od = vec![0; blks.len()];
                let mut id = vec![0; blks.len()];
                for k in (0..blks.len()).rev() {
                    od[k] = orem % blks[k].dout;
                    orem /= blks[k].dout;
                    id[k] = irem % blks[k].din;
                    irem /= blks[k].din;
                }
                for k in 0..blks.len() {
                    dig[b_pos[k]] = blks[k].offset + od[k] * blks[k].din + id[k];
                }
                dig.iter().fold(0, |acc, &x| acc * d + x)
            };
            // τ^{(α)}: trace the boundary out-factors of P σ^{A∂} P
            let mut tau = zeros(n_in, n_in);
            for ob in 0..n_o_b {
                let li: Vec<usize> = (0..n_in).map(|i| local(ob, i / n_i_b, i % n_i_b)).collect();
                for i in 0..n_in {
                    for j in 0..n_in {
                        tau[(i, j)] += sig_rot[(li[i], li[j])];
                    }
                }
            }
            let tr = trace(&tau).re;
            if tr < 1e-14 {
                return Err(Error::DegenerateBlock(format!(
                    "boundary condition {alpha:?} of {:?} has weight {tr:.2e}",
                    a.sites()
                )));
            }
            tau = scaled(&tau, cr(1.0 / tr));
            let n_out = drest * n_o_b;
            let mut idx = Vec::with_capacity(n_out * n_in);
            for r in 0..drest {
                for ob in 0..n_o_b {
                    for i in 0..n_in {
                        idx.push(sp_ad.g(local(ob, i / n_i_b, i % n_i_b), r));
                    }
                }
            }
            tables.push(BlockTable {
                alpha,
                n_out,
                n_in,
                idx,
                tau,
            });
        }
        // permutation bases are folded into the index tables
        let gpos = positions_in(self.gamma.sites(), &bsites)?;
        let mut rot_sites = Vec::new();
        for (site, &p) in bb.sites.iter().zip(&gpos) {
            match permutation_of(&site.w) {
                Some(perm) => {
                    let sp = Split::new(self.gamma.len(), d, &[p]);
                    let mut global = vec![0usize; sp.dim()];
                    for s in 0..sp.dsub {
                        for r in 0..sp.drest {
                            global[sp.g(s, r)] = sp.g(perm[s], r);
                        }
                    }
                    for t in &mut tables {
                        for k in t.idx.iter_mut() {
                            *k = global[*k];
                        }
                    }
                }
                None => rot_sites.push((p, site.w.clone())),
            }
        }
        let s = Arc::new(BlockStructure {
            dim: self.dim(),
            n: self.gamma.len(),
            d,
            rot: rot_sites,
            tables,
        });
        self.structures.lock().unwrap().insert(a.clone(), s.clone());
        Ok(s)
    }

    /// τ^{(α)} for every boundary condition α of `a`, on A_in.
    pub fn tau_states(&self, a: &Region) -> Result<Vec<(Vec<usize>, CMat)>> {
        let s = self.structure(a)?;
        Ok(s.tables.iter().map(|t| (t.alpha.clone(), t.tau.clone())).collect())
    }

    /// Basis of N_A on A∂, KMS-orthonormal w.r.t. σ^{A∂}.
    pub fn algebra(&self, a: &Region) -> Result<SchmidtAlgebra> {
        let bb = self.boundary_blocks(a)?;
        let d = self.d();
        let ad = self.closure(a);
        let mut factors: Vec<Vec<CMat>> = Vec::new();
        let mut k = 0;
        for &x in ad.sites() {
            if a.contains(x) {
                factors.push(vec![eye(d)]);
            } else {
                factors.push(bb.sites[k].algebra.clone());
                k += 1;
            }
        }
        let mut basis = vec![eye(1)];
        for f in &factors {
            let mut next = Vec::with_capacity(basis.len() * f.len());
            for b in &basis {
                for g in f {
                    next.push(kron(b, g));
                }
            }
            basis = next;
        }
        let sigma = self.ens.sigma(&ad)?;
        let s = matfun(&sigma, MatFun::Sqrt)?;
        // Gram-Schmidt in the KMS inner product Tr[√σ X† √σ Y]
        let mut ortho: Vec<CMat> = Vec::new();
        for b in basis {
            let mut v = b;
            for _ in 0..2 {
                for q in &ortho {
                    let c = trace(&(&(&(&s * &dagger(q)) * &s) * &v));
                    v -= scaled(q, c);
                }
            }
            let nrm = trace(&(&(&(&s * &dagger(&v)) * &s) * &v)).re.max(0.0).sqrt();
            if nrm > 1e-10 {
                ortho.push(scaled(&v, cr(1.0 / nrm)));
            }
        }
        Ok(SchmidtAlgebra {
            region: a.clone(),
            support: ad,
            basis: ortho,
            sigma,
        })
    }

    /// E^S_A in either construction.
    pub fn condexp(&self, a: &Region, method: SchmidtMethod) -> Result<ConditionalExpectation> {
        self.check_region(a)?;
        let sigma = self.ens.sigma(&self.gamma)?;
        let label = format!("E^S_{:?}", a.sites());
        match method {
            SchmidtMethod::BlockFormula => {
                let s = self.structure(a)?;
                let s2 = s.clone();
                let s3 = s.clone();
                let s4 = s.clone();
                let dim = self.dim();
                let heis = Superoperator::from_fn(
                    dim,
                    Picture::Heisenberg,
                    move |x| s.heis(x),
                    Some(Arc::new(move |x: &CMat| s2.schr(x))),
                );
                let schr = Superoperator::from_fn(
                    dim,
                    Picture::Schrodinger,
                    move |x| s3.schr(x),
                    Some(Arc::new(move |x: &CMat| s4.heis(x))),
                );
                Ok(ConditionalExpectation { heis, schr, sigma, label })
            }
            SchmidtMethod::KmsProjection => {
                let alg = self.algebra(a)?;
                let ad = &alg.support;
                let d = self.d();
                let ldim = ipow(d, ad.len());
                if ldim > DENSE_SUPEROP_MAX_DIM {
                    return Err(Error::Resource(format!(
                        "KMS projection on A∂ of dimension {ldim} exceeds {DENSE_SUPEROP_MAX_DIM}"
                    )));
                }
                let m = alg.basis.len();
                let vs: Vec<Vec<c64>> = alg.basis.iter().map(vec_rm).collect();
                let bmat = Mat::from_fn(ldim * ldim, m, |i, j| vs[j][i]);
                let s = matfun(&alg.sigma, MatFun::Sqrt)?;
                let k = sandwich_superop(&s, &s);
                let bk = bmat.adjoint() * &k;
                let gram = &bk * &bmat;
                let e = &bmat * &solve(&gram, &bk);
                let pos = positions_in(self.gamma.sites(), ad.sites())?;
                let n = self.gamma.len();
                let dim = self.dim();
                let heis = Superoperator::local(dim, Picture::Heisenberg, vec![LocalTerm::new(n, d, &pos, e.clone())], None);
                let schr = Superoperator::local(dim, Picture::Schrodinger, vec![LocalTerm::new(n, d, &pos, dagger(&e))], None);
                Ok(ConditionalExpectation { heis, schr, sigma, label })
            }
        }
    }

    /// L^S_A = Σ_{x∈A} (E^S_x − id)
    pub fn lindbladian(&self, a: &Region, picture: Picture) -> Result<Superoperator> {
        self.check_region(a)?;
        let mut parts = Vec::new();
        for &x in a.sites() {
            let e = self.condexp(&Region::new(vec![x]), SchmidtMethod::BlockFormula)?;
            parts.push((
                1.0,
                match picture {
                    Picture::Heisenberg => e.heis,
                    Picture::Schrodinger => e.schr,
                },
            ));
        }
        parts.push((-(a.len() as f64), Superoperator::identity(self.dim(), picture)));
        Ok(Superoperator::lincomb(&parts))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CommutationReport {
    pub commutator: f64,
    /// ‖E1∘E2 − E_union‖ when a union expectation was supplied.
    pub union: Option<f64>,
}

/// Sampled superoperator differences between E1∘E2, E2∘E1 and an optional
/// target expectation.
pub fn condexp_commutation_check(
    e1: &ConditionalExpectation,
    e2: &ConditionalExpectation,
    target: Option<&ConditionalExpectation>,
    samples: usize,
    seed: u64,
) -> CommutationReport {
    let a = e1.heis.compose(&e2.heis);
    let b = e2.heis.compose(&e1.heis);
    CommutationReport {
        commutator: sampled_difference(&a, &b, samples, seed),
        union: target.map(|t| sampled_difference(&a, &t.heis, samples, seed + 1)),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SandwichReport {
    pub d_davies: f64,
    pub d_schmidt: f64,
    pub d_davies_padded: f64,
}

impl SandwichReport {
    /// Smallest slack of the two inequalities.
    pub fn slack(&self) -> f64 {
        (self.d_schmidt - self.d_davies).min(self.d_davies_padded - self.d_schmidt)
    }
}

/// D(ρ‖E^D_X ρ), D(ρ‖E^S_X ρ) and D(ρ‖E^D_{X∂} ρ).
pub fn sandwich_check(davies: &Davies, schmidt: &SchmidtSystem, x: &Region, rho: &CMat) -> Result<SandwichReport> {
    if davies.region != schmidt.gamma {
        return Err(Error::Argument("Davies and Schmidt systems live on different regions".into()));
    }
    let ed = davies.condexp(x)?;
    let es = schmidt.condexp(x, SchmidtMethod::BlockFormula)?;
    let ep = davies.condexp(&schmidt.closure(x))?;
    Ok(SandwichReport {
        d_davies: relative_entropy(rho, &ed.apply_state(rho)),
        d_schmidt: relative_entropy(rho, &es.apply_state(rho)),
        d_davies_padded: relative_entropy(rho, &ep.apply_state(rho)),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct QNormReport {
    /// Alternating-maximization estimate.
    pub value: f64,
    /// Maximum over computational basis inputs (exact when every map
    /// involved preserves the diagonal, as for classical models).
    pub grid: f64,
    pub restarts: usize,
    pub iterations: usize,
}

/// Block-wise L1(σ) → L∞ norm of E^S_C∘E^S_D − E^S_{C∪D} over positive
/// rank-one inputs, for C ∪ D = Γ (a single boundary condition with
/// τ = σ^Γ).
pub fn q_l1_linf_norm(sys: &SchmidtSystem, c: &Region, d: &Region, restarts: usize, seed: u64) -> Result<QNormReport> {
    if c.union(d) != sys.gamma {
        return Err(Error::Geometry("the 1→∞ clustering norm is evaluated for C ∪ D = Γ".into()));
    }
    if c.intersect(d).is_empty() {
        return Err(Error::Argument("C and D must overlap".into()));
    }
    let ec = sys.condexp(c, SchmidtMethod::BlockFormula)?;
    let ed = sys.condexp(d, SchmidtMethod::BlockFormula)?;
    let sigma = ec.sigma.clone();
    let n = sys.dim();
    let phi = |x: &CMat| -> CMat {
        let y = ec.heis.apply(&ed.heis.apply(x));
        let t = trace_prod(&sigma, x);
        let mut out = y;
        for i in 0..n {
            out[(i, i)] -= t;
        }
        crate::linalg::symmetrize(&out)
    };
    let phi_adj = |y: &CMat| -> CMat {
        let z = ed.schr.apply(&ec.schr.apply(y));
        let t = trace(y);
        crate::linalg::symmetrize(&(&z - &scaled(&sigma, t)))
    };
    let ssp = eigh_sym(&sigma);
    let s_mhalf = ssp.apply(|x| x.max(1e-300).powf(-0.5));
    let rank_one = |v: &[c64]| Mat::from_fn(n, n, |i, j| v[i] * v[j].conj());
    let quad = |m: &CMat, v: &[c64]| -> f64 {
        let mut acc = c64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += v[i].conj() * m[(i, j)] * v[j];
            }
        }
        acc.re
    };
    let top_abs = |m: &CMat| -> (f64, Vec<c64>) {
        let mut off: f64 = 0.0;
        let mut top: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                if i == j {
                    top = top.max(m[(i, i)].norm());
                } else {
                    off = off.max(m[(i, j)].norm());
                }
            }
        }
        // roundoff-level coherences do not move the top eigenvalue beyond 1e-13
        if off <= 1e-15 * top.max(1e-300) / n as f64 {
            let k = (0..n).max_by(|&a, &b| m[(a, a)].re.abs().total_cmp(&m[(b, b)].re.abs())).unwrap();
            let mut v = vec![c64::new(0.0, 0.0); n];
            v[k] = cr(1.0);
            return (m[(k, k)].re.abs(), v);
        }
        let sp = eigh_sym(m);
        let k = if sp.values[0].abs() >= sp.values[n - 1].abs() { 0 } else { n - 1 };
        (sp.values[k].abs(), (0..n).map(|i| sp.vectors[(i, k)]).collect())
    };
    // grid over computational basis inputs
    let mut grid: f64 = 0.0;
    let mut seeds: Vec<(f64, Vec<c64>)> = Vec::new();
    for i in 0..n {
        let mut v = vec![c64::new(0.0, 0.0); n];
        v[i] = cr(1.0);
        let (val, _) = top_abs(&phi(&rank_one(&v)));
        let val = val / sigma[(i, i)].re;
        grid = grid.max(val);
        seeds.push((val, v));
    }
    seeds.sort_by(|a, b| b.0.total_cmp(&a.0));
    seeds.truncate(4);
    let mut rng = random::rng(seed);
    for _ in 0..restarts {
        seeds.push((0.0, random::pure_vector(&mut rng, n)));
    }
    let mut best: f64 = 0.0;
    let mut iterations = 0;
    for (_, mut v) in seeds {
        let mut prev = -1.0;
        for _ in 0..200 {
            iterations += 1;
            let (_, u) = top_abs(&phi(&rank_one(&v)));
            let b = phi_adj(&rank_one(&u));
            let w = &(&s_mhalf * &b) * &s_mhalf;
            let (_, wv) = top_abs(&w);
            let wm = Mat::from_fn(n, 1, |i, _| wv[i]);
            let vm = &s_mhalf * &wm;
            v = (0..n).map(|i| vm[(i, 0)]).collect();
            let val = quad(&b, &v).abs() / quad(&sigma, &v);
            if (val - prev).abs() <= 1e-9 * val.max(1e-300) {
                prev = val;
                break;
            }
            prev = val;
        }
        best = best.max(prev);
    }
    Ok(QNormReport {
        value: best.max(grid),
        grid,
        restarts,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::davies::{BohrMode, ChiKind, Couplings};
    use crate::hamiltonian::{pauli, ModelSpec, Potential};
    use crate::lattice::SpinGraph;

    fn system(model: ModelSpec, n: usize, beta: f64) -> SchmidtSystem {
        let g = SpinGraph::chain(n).unwrap();
        let p = Potential::build(&g, model).unwrap();
        let e = Arc::new(GibbsEnsemble::new(p, beta).unwrap());
        SchmidtSystem::new(e, Region::range(0, n - 1)).unwrap()
    }

    fn ising(n: usize, beta: f64) -> SchmidtSystem {
        system(ModelSpec::Ising { j: 1.0, g: 0.5 }, n, beta)
    }

    #[test]
    fn edge_factorization() {
        let s = ising(3, 0.7);
        let f = edge_schmidt_decompose(&s.ens, 1, 0).unwrap();
        assert_eq!(f.rank(), 2);
        for l in &f.left {
            assert!(l[(0, 1)].norm() < 1e-12 && l[(1, 0)].norm() < 1e-12);
        }
        let e = matfun(&scaled(&s.ens.potential.term_ordered(1, 0).unwrap(), cr(-0.7)), MatFun::Exp).unwrap();
        assert!(fro(&(&f.reconstruct() - &e)) < 1e-10);
        assert!(f.gram_min_eig() > 1e-8);
        let z = ising(3, 0.0);
        assert_eq!(edge_schmidt_decompose(&z.ens, 0, 1).unwrap().rank(), 1);
        let r = system(ModelSpec::RandomCommuting { seed: 3 }, 3, 0.9);
        let f = edge_schmidt_decompose(&r.ens, 0, 1).unwrap();
        let e = matfun(&scaled(&r.ens.potential.term_ordered(0, 1).unwrap(), cr(-0.9)), MatFun::Exp).unwrap();
        assert!(fro(&(&f.reconstruct() - &e)) < 1e-10);
    }

    #[test]
    fn blocks_ising_interior() {
        let s = ising(5, 0.8);
        let bb = s.boundary_blocks(&Region::new(vec![2])).unwrap();
        assert_eq!(bb.sites.len(), 2);
        for sb in &bb.sites {
            assert_eq!(sb.blocks.len(), 2);
            assert!(sb.blocks.iter().all(|b| b.dout == 1 && b.din == 1));
            assert!(sb.factor_residual() < 1e-8);
        }
        assert!(bb.to_json().contains("factor_dims"));
        let s0 = ising(5, 0.0);
        let bb0 = s0.boundary_blocks(&Region::new(vec![2])).unwrap();
        assert!(bb0.sites.iter().all(|sb| sb.blocks.len() == 1 && sb.blocks[0].din == 2));
    }

    #[test]
    fn blocks_random_commuting() {
        let s = system(ModelSpec::RandomCommuting { seed: 11 }, 5, 1.0);
        for a in [Region::new(vec![2]), Region::range(1, 2)] {
            let bb = s.boundary_blocks(&a).unwrap();
            for sb in &bb.sites {
                assert!(sb.factor_residual() < 1e-8);
                let total: usize = sb.blocks.iter().map(|b| b.dout * b.din).sum();
                assert_eq!(total, 2);
            }
            let alg = s.algebra(&a).unwrap();
            assert!(alg.closure_residual() < 1e-8);
            for t in [0.5, 1.3] {
                assert!(alg.modular_residual(t) < 1e-8);
            }
        }
    }

    #[test]
    fn non_commuting_rejected() {
        let g = SpinGraph::chain(3).unwrap();
        let p = Potential::build(&g, ModelSpec::Heisenberg { jx: 1.0, jy: 1.0, jz: 1.0 }).unwrap();
        let e = Arc::new(GibbsEnsemble::new(p, 0.5).unwrap());
        assert!(matches!(
            SchmidtSystem::new(e, Region::range(0, 2)),
            Err(Error::UnsupportedModel(_))
        ));
    }

    #[test]
    fn methods_agree_and_axioms_hold() {
        for s in [ising(5, 0.6), system(ModelSpec::RandomCommuting { seed: 5 }, 5, 0.8)] {
            for a in [Region::new(vec![2]), Region::new(vec![0]), Region::range(1, 2)] {
                let eb = s.condexp(&a, SchmidtMethod::BlockFormula).unwrap();
                let ek = s.condexp(&a, SchmidtMethod::KmsProjection).unwrap();
                assert!(sampled_difference(&eb.heis, &ek.heis, 4, 1) < 1e-8, "{a:?}");
                let rep = eb.report(3, 2, &[0.3, 1.0, 2.7]);
                assert!(rep.passes(1e-8, 1e-8), "{a:?} {rep:?}");
            }
        }
    }

    #[test]
    fn decoupled_replaces_closure() {
        let g = SpinGraph::chain(3).unwrap();
        let p = Potential::from_terms(&g, vec![]).unwrap();
        let e = Arc::new(GibbsEnsemble::new(p, 1.0).unwrap());
        let s = SchmidtSystem::new(e, Region::range(0, 2)).unwrap();
        let c = s.condexp(&Region::new(vec![0]), SchmidtMethod::BlockFormula).unwrap();
        let mut r = random::rng(3);
        let rho = random::density(&mut r, 8);
        // trivial boundary algebra: sites {0, 1} are replaced
        let sp = Split::new(3, 2, &[2]);
        let red = crate::tensor::partial_trace_keep(&rho, &sp);
        let want = kron(&scaled(&eye(4), cr(0.25)), &red);
        assert!(fro(&(&c.apply_state(&rho) - &want)) < 1e-12);
    }

    #[test]
    fn tau_normalized_and_beta_zero() {
        let s = ising(5, 0.0);
        for (_, t) in s.tau_states(&Region::new(vec![2])).unwrap() {
            let n = t.nrows();
            assert!(fro(&(&t - &scaled(&eye(n), cr(1.0 / n as f64)))) < 1e-12);
        }
        let s = ising(5, 0.9);
        for (_, t) in s.tau_states(&Region::new(vec![2])).unwrap() {
            assert!((trace(&t).re - 1.0).abs() < 1e-12);
            assert!(eigh_sym(&t).min_value() > 0.0);
        }
    }

    #[test]
    fn whole_region_is_trace_map() {
        let s = ising(3, 0.5);
        let c = s.condexp(&Region::range(0, 2), SchmidtMethod::BlockFormula).unwrap();
        let mut r = random::rng(4);
        let rho = random::density(&mut r, 8);
        assert!(fro(&(&c.apply_state(&rho) - &c.sigma)) < 1e-12);
    }

    #[test]
    fn lindbladian_properties() {
        let s = ising(5, 0.5);
        let sigma = s.ens.sigma(&s.gamma).unwrap();
        let l = s.lindbladian(&Region::range(1, 3), Picture::Heisenberg).unwrap();
        let r = crate::davies::detailed_balance_residual(&l, &sigma, crate::davies::Weighting::Gns, 4, 1).unwrap();
        assert!(r < 1e-9);
        let la = s.lindbladian(&Region::new(vec![1]), Picture::Heisenberg).unwrap();
        let lb = s.lindbladian(&Region::range(2, 3), Picture::Heisenberg).unwrap();
        let sum = Superoperator::lincomb(&[(1.0, la), (1.0, lb)]);
        assert!(sampled_difference(&sum, &l, 3, 2) < 1e-10);
    }

    #[test]
    fn decoupled_single_site_gap() {
        let g = SpinGraph::chain(3).unwrap();
        let p = Potential::from_terms(&g, vec![]).unwrap();
        let e = Arc::new(GibbsEnsemble::new(p, 1.0).unwrap());
        let s = SchmidtSystem::new(e, Region::range(0, 2)).unwrap();
        let l = s.lindbladian(&Region::new(vec![1]), Picture::Heisenberg).unwrap();
        let gap = crate::davies::spectral_gap(&l, &s.ens.sigma(&s.gamma).unwrap()).unwrap();
        assert!((gap.gap - 1.0).abs() < 1e-10);
    }

    #[test]
    fn commutation_of_distant_and_nested() {
        let s = ising(7, 0.7);
        let a1 = Region::new(vec![1]);
        let a2 = Region::new(vec![4]);
        let e1 = s.condexp(&a1, SchmidtMethod::BlockFormula).unwrap();
        let e2 = s.condexp(&a2, SchmidtMethod::BlockFormula).unwrap();
        let eu = s.condexp(&a1.union(&a2), SchmidtMethod::BlockFormula).unwrap();
        let rep = condexp_commutation_check(&e1, &e2, Some(&eu), 3, 1);
        assert!(rep.commutator < 1e-9 && rep.union.unwrap() < 1e-9, "{rep:?}");
        let big = s.condexp(&Region::range(0, 2), SchmidtMethod::BlockFormula).unwrap();
        let nested = condexp_commutation_check(&big, &e1, Some(&big), 3, 2);
        assert!(nested.union.unwrap() < 1e-9);
        let adj = s.condexp(&Region::new(vec![2]), SchmidtMethod::BlockFormula).unwrap();
        let neg = condexp_commutation_check(&e1, &adj, None, 3, 3);
        assert!(neg.commutator > 1e-3);
    }

    #[test]
    fn sandwich_ordering() {
        let s = ising(5, 0.6);
        let dv = Davies::new(s.ens.clone(), s.gamma.clone(), &Couplings::Xyz, ChiKind::Glauber, BohrMode::Local).unwrap();
        let mut r = random::rng(9);
        for _ in 0..3 {
            let rho = random::density(&mut r, 32);
            let rep = sandwich_check(&dv, &s, &Region::new(vec![2]), &rho).unwrap();
            assert!(rep.slack() > -1e-9, "{rep:?}");
        }
        let sigma = s.ens.sigma(&s.gamma).unwrap();
        let rep = sandwich_check(&dv, &s, &Region::new(vec![2]), &sigma).unwrap();
        assert!(rep.d_davies_padded < 1e-9);
    }

    #[test]
    fn schmidt_fix_inside_davies_fix() {
        let s = ising(5, 0.6);
        let dv = Davies::new(s.ens.clone(), s.gamma.clone(), &Couplings::Xyz, ChiKind::Glauber, BohrMode::Local).unwrap();
        let a = Region::new(vec![2]);
        let es = s.condexp(&a, SchmidtMethod::BlockFormula).unwrap();
        let l = dv.local_dissipator_on(&a, &s.gamma, Picture::Heisenberg).unwrap();
        let mut r = random::rng(2);
        for _ in 0..3 {
            let x = es.apply(&random::ginibre(&mut r, 32, 32));
            assert!(fro(&l.apply(&x)) < 1e-8 * fro(&x));
        }
    }

    #[test]
    fn q_norm_matches_grid_on_ising() {
        let s = ising(3, 0.4);
        let rep = q_l1_linf_norm(&s, &Region::range(0, 1), &Region::range(1, 2), 16, 1).unwrap();
        assert!((rep.value - rep.grid).abs() < 1e-6, "{rep:?}");
        let z = ising(3, 0.0);
        let rep = q_l1_linf_norm(&z, &Region::range(0, 1), &Region::range(1, 2), 4, 1).unwrap();
        assert!(rep.value < 1e-12);
        let _ = pauli('Z');
    }
}

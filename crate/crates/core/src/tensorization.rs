//! The ω state, approximate tensorization of Schmidt expectations, the
//! empirical C(L) constant and the assembled MLSI bound.

use std::sync::Arc;

use serde::Serialize;

use crate::davies::{spectral_gap, BohrMode, ChiKind, Couplings, Davies};
use crate::dynamics::{
    default_initial_states, evolve_with, mlsi_upper_estimate, relative_entropy, uniform_grid, EvolveMode, MlsiBudget,
    Propagator,
};
use crate::error::{Error, Result};
use crate::hamiltonian::GibbsEnsemble;
use crate::lattice::{coarse_grain_sets, Coloring, Region, SpinGraph};
use crate::linalg::{cr, fro, random, zeros, CMat};
use crate::par;
use crate::schmidt::{q_l1_linf_norm, SchmidtMethod, SchmidtSystem};
use crate::superop::{ConditionalExpectation, Picture};

/// ω = E^S_{Γ₀*}(ρ), the label-0 expectations applied in vertex order.
#[derive(Clone, Debug, Serialize)]
pub struct OmegaState {
    #[serde(skip)]
    pub source: CMat,
    pub gamma0: Region,
    #[serde(skip)]
    pub omega: CMat,
    /// max_x ‖E^S_{x*}(ω) − ω‖_F over x ∈ Γ₀.
    pub invariance_residual: f64,
    /// Largest difference to ω when the expectations are applied in
    /// shuffled orders.
    pub order_residual: f64,
}

fn shuffled(v: &[usize], rng: &mut random::Rng64) -> Vec<usize> {
    let mut v = v.to_vec();
    for i in (1..v.len()).rev() {
        let j = (random::uniform(rng, 0.0, (i + 1) as f64) as usize).min(i);
        v.swap(i, j);
    }
    v
}

fn single_site_expectations(sys: &SchmidtSystem, sites: &[usize]) -> Result<Vec<ConditionalExpectation>> {
    sites
        .iter()
        .map(|&x| sys.condexp(&Region::new(vec![x]), SchmidtMethod::BlockFormula))
        .collect()
}

pub fn omega_state(sys: &SchmidtSystem, rho: &CMat, col: &Coloring, seed: u64) -> Result<OmegaState> {
    col.check(sys.ens.graph())?;
    if rho.nrows() != sys.dim() {
        return Err(Error::Argument("state dimension does not match Γ".into()));
    }
    let gamma0 = col.zeros().intersect(&sys.gamma);
    let es = single_site_expectations(sys, gamma0.sites())?;
    let apply = |order: &[usize]| order.iter().fold(rho.clone(), |r, &k| es[k].apply_state(&r));
    let natural: Vec<usize> = (0..es.len()).collect();
    let omega = apply(&natural);
    let mut rng = random::rng(seed);
    let mut order_residual: f64 = 0.0;
    for _ in 0..2 {
        let perm = shuffled(&natural, &mut rng);
        order_residual = order_residual.max(fro(&(&apply(&perm) - &omega)));
    }
    let invariance_residual = es
        .iter()
        .map(|e| fro(&(&e.apply_state(&omega) - &omega)))
        .fold(0.0, f64::max);
    Ok(OmegaState {
        source: rho.clone(),
        gamma0,
        omega,
        invariance_residual,
        order_residual,
    })
}

/// D(ω‖E^S_{R*}(ω))
pub fn condexp_entropy(sys: &SchmidtSystem, omega: &CMat, r: &Region) -> Result<f64> {
    let e = sys.condexp(r, SchmidtMethod::BlockFormula)?;
    Ok(relative_entropy(omega, &e.apply_state(omega)).max(0.0))
}

#[derive(Clone, Debug, Serialize)]
pub struct DrValue {
    pub total: f64,
    pub terms: Vec<f64>,
}

/// D_R(ω) = Σ_k D(ω‖E^S_{R_k*}(ω)) for regions whose boundary in Γ has
/// no label-0 vertex.
pub fn d_r(sys: &SchmidtSystem, omega: &OmegaState, col: &Coloring, rs: &[Region]) -> Result<DrValue> {
    for r in rs {
        if !col.avoids_zeros(&sys.boundary(r)) {
            return Err(Error::Geometry(format!("boundary of {:?} meets Γ₀", r.sites())));
        }
    }
    let terms = rs
        .iter()
        .map(|r| condexp_entropy(sys, &omega.omega, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(DrValue {
        total: terms.iter().sum(),
        terms,
    })
}

/// Every shortest path between two points of `r` stays in `r`.
pub fn is_convex(g: &SpinGraph, r: &Region) -> bool {
    let s = r.sites();
    for (i, &u) in s.iter().enumerate() {
        for &v in &s[i + 1..] {
            let duv = g.vertex_distance(u, v);
            if (0..g.n()).any(|w| !r.contains(w) && g.vertex_distance(u, w) + g.vertex_distance(w, v) == duv) {
                return false;
            }
        }
    }
    true
}

#[derive(Clone, Debug, Serialize)]
pub struct TensorizationReport {
    pub c: Region,
    pub d: Region,
    pub overlap_distance: usize,
    /// D(ω‖E^S_{C∪D*}(ω))
    pub lhs: f64,
    /// D(ω‖E^S_{C*}(ω))
    pub rhs_c: f64,
    /// D(ω‖E^S_{D*}(ω))
    pub rhs_d: f64,
    pub eta: f64,
    /// (rhs_c + rhs_d)/(1 − 2η̂) − lhs, infinite when η̂ ≥ 1/2.
    pub slack: f64,
}

impl TensorizationReport {
    pub fn passes(&self) -> bool {
        self.eta < 0.5 && self.slack >= -1e-8
    }
}

/// Validates the hypotheses on (C, D) and returns dist(C∖D, D∖C).
pub fn check_tensorization_pair(sys: &SchmidtSystem, col: &Coloring, c: &Region, d: &Region) -> Result<usize> {
    let g = sys.ens.graph();
    for (name, r) in [("C", c), ("D", d)] {
        if r.is_empty() || !r.is_subset(&sys.gamma) {
            return Err(Error::Geometry(format!("{name} must be a nonempty subset of Γ")));
        }
        if !is_convex(g, r) {
            return Err(Error::Geometry(format!("{name} is not convex")));
        }
    }
    let cd = c.union(d);
    for (name, r) in [("∂C", c), ("∂D", d), ("∂(C∪D)", &cd)] {
        if !col.avoids_zeros(&sys.boundary(r)) {
            return Err(Error::Geometry(format!("{name} meets Γ₀")));
        }
    }
    let (a, b) = (c.minus(d), d.minus(c));
    if a.is_empty() || b.is_empty() || c.is_disjoint(d) {
        return Err(Error::Geometry("C and D must overlap properly".into()));
    }
    let l = g.distance(&a, &b)?;
    if l <= 1 {
        return Err(Error::Geometry(format!("dist(C∖D, D∖C) = {l} must exceed 1")));
    }
    Ok(l)
}

pub fn approx_tensorization_check(
    sys: &SchmidtSystem,
    omega: &OmegaState,
    col: &Coloring,
    c: &Region,
    d: &Region,
    restarts: usize,
    seed: u64,
) -> Result<TensorizationReport> {
    let l = check_tensorization_pair(sys, col, c, d)?;
    let q = q_l1_linf_norm(sys, c, d, restarts, seed)?;
    let eta = q.value.max(q.grid);
    let w = &omega.omega;
    let lhs = condexp_entropy(sys, w, &c.union(d))?;
    let rhs_c = condexp_entropy(sys, w, c)?;
    let rhs_d = condexp_entropy(sys, w, d)?;
    let slack = if eta < 0.5 {
        (rhs_c + rhs_d) / (1.0 - 2.0 * eta) - lhs
    } else {
        f64::INFINITY
    };
    Ok(TensorizationReport {
        c: c.clone(),
        d: d.clone(),
        overlap_distance: l,
        lhs,
        rhs_c,
        rhs_d,
        eta,
        slack,
    })
}

/// Prefix/suffix pairs of Γ (in site order) that pass the hypotheses and
/// cover Γ.
pub fn admissible_pairs(sys: &SchmidtSystem, col: &Coloring) -> Vec<(Region, Region)> {
    let s = sys.gamma.sites();
    let mut out = Vec::new();
    for a in 0..s.len() {
        for b in 1..=a {
            let c = Region::new(s[..=a].to_vec());
            let d = Region::new(s[b..].to_vec());
            if c.union(&d) == sys.gamma && check_tensorization_pair(sys, col, &c, &d).is_ok() {
                out.push((c, d));
            }
        }
    }
    out
}

/// D(ρ‖E^S_{Γ₀*}(ρ)) and Σ_{x∈Γ₀} D(ρ‖E^S_{x*}(ρ)).
pub fn exact_tensorization_check(sys: &SchmidtSystem, rho: &CMat, col: &Coloring) -> Result<(f64, f64)> {
    let gamma0 = col.zeros().intersect(&sys.gamma);
    let es = single_site_expectations(sys, gamma0.sites())?;
    let joint = es.iter().fold(rho.clone(), |r, e| e.apply_state(&r));
    let lhs = relative_entropy(rho, &joint);
    let rhs = es.iter().map(|e| relative_entropy(rho, &e.apply_state(rho))).sum();
    Ok((lhs, rhs))
}

/// D(E^S_{Γ₀*}ρ ‖ E^S_{R*}E^S_{Γ₀*}ρ) and D(ρ‖E^S_{R*}ρ).
pub fn assembly_dpi_check(sys: &SchmidtSystem, rho: &CMat, col: &Coloring, r: &Region) -> Result<(f64, f64)> {
    let w = omega_state(sys, rho, col, 0)?;
    Ok((condexp_entropy(sys, &w.omega, r)?, condexp_entropy(sys, rho, r)?))
}

/// The coarse sets of the label-0 centers in Γ, cut to Γ, keeping only
/// sets not contained in another.
pub fn coarse_sets_in(g: &SpinGraph, col: &Coloring, l0: usize, gamma: &Region) -> Result<Vec<Region>> {
    let cg = coarse_grain_sets(g, col, l0)?;
    let cut: Vec<Region> = cg
        .centers
        .iter()
        .zip(&cg.sets)
        .filter(|(x, _)| gamma.contains(**x))
        .map(|(_, r)| r.intersect(gamma))
        .collect();
    let mut out: Vec<Region> = Vec::new();
    for (i, r) in cut.iter().enumerate() {
        let dominated = cut
            .iter()
            .enumerate()
            .any(|(j, s)| j != i && r.is_subset(s) && (r != s || j < i));
        if !dominated {
            out.push(r.clone());
        }
    }
    if out.iter().fold(Region::empty(), |u, r| u.union(r)) != *gamma {
        return Err(Error::Geometry("coarse sets do not cover Γ".into()));
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct CPoint {
    pub gamma: Region,
    pub size: usize,
    pub sets: Vec<Region>,
    /// Empirical max of D(ω‖E^S_{Γ*}ω)/D_R(ω), a lower bound on C(L).
    pub c_hat: f64,
    pub samples: usize,
    pub skipped: usize,
}

/// Basis states probed per Γ (evenly spaced when the dimension is larger).
pub const MAX_BASIS_STATES: usize = 64;
pub const C_DENOMINATOR_FLOOR: f64 = 1e-10;

fn probe_states(dim: usize, n_random: usize, seed: u64) -> Vec<CMat> {
    let nb = dim.min(MAX_BASIS_STATES);
    let mut out = Vec::with_capacity(nb + n_random);
    for k in 0..nb {
        let i = k * dim / nb;
        let mut p = zeros(dim, dim);
        p[(i, i)] = cr(1.0);
        out.push(p);
    }
    let mut rng = random::rng(seed);
    for _ in 0..n_random {
        out.push(random::density(&mut rng, dim));
    }
    out
}

/// Ĉ(L) for each Γ in `gammas`, over basis states and `n_random` random
/// states.
pub fn c_of_l_estimate(
    ens: Arc<GibbsEnsemble>,
    col: &Coloring,
    l0: usize,
    gammas: &[Region],
    n_random: usize,
    seed: u64,
    threads: usize,
) -> Result<Vec<CPoint>> {
    let mut out = Vec::new();
    for gamma in gammas {
        let sys = SchmidtSystem::new(ens.clone(), gamma.clone())?;
        let sets = coarse_sets_in(ens.graph(), col, l0, gamma)?;
        let states = probe_states(sys.dim(), n_random, seed);
        let ratios = par::map(&states, threads, |rho| -> Result<Option<f64>> {
            let w = omega_state(&sys, rho, col, seed)?;
            let den = d_r(&sys, &w, col, &sets)?.total;
            if den < C_DENOMINATOR_FLOOR {
                return Ok(None);
            }
            Ok(Some(condexp_entropy(&sys, &w.omega, gamma)? / den))
        });
        let ratios = ratios.into_iter().collect::<Result<Vec<_>>>()?;
        let used: Vec<f64> = ratios.iter().flatten().copied().collect();
        if used.is_empty() {
            return Err(Error::Estimation(format!(
                "every D_R denominator vanishes on Γ = {:?}",
                gamma.sites()
            )));
        }
        out.push(CPoint {
            gamma: gamma.clone(),
            size: gamma.len(),
            sets,
            c_hat: used.iter().copied().fold(0.0, f64::max),
            samples: used.len(),
            skipped: ratios.len() - used.len(),
        });
    }
    Ok(out)
}

/// min{α₀, α₁}/(2mC)
pub fn mlsi_assembly(alpha0: f64, alpha1: f64, c: f64, m: usize) -> Result<f64> {
    if !(alpha0 > 0.0 && alpha1 > 0.0 && c > 0.0 && m > 0) {
        return Err(Error::Argument("assembly inputs must be positive".into()));
    }
    Ok(alpha0.min(alpha1) / (2.0 * m as f64 * c))
}

#[derive(Clone, Debug)]
pub struct AssemblyOptions {
    pub l0: usize,
    pub couplings: Couplings,
    pub chi: ChiKind,
    pub budget: MlsiBudget,
    pub random_states: usize,
    pub trajectories: usize,
    pub seed: u64,
    pub threads: usize,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions {
            l0: 2,
            couplings: Couplings::X,
            chi: ChiKind::Glauber,
            budget: MlsiBudget::default(),
            random_states: 16,
            trajectories: 8,
            seed: 11,
            threads: 1,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AssemblyReport {
    pub alpha0: f64,
    pub alpha1: f64,
    pub c_hat: f64,
    pub multiplicity: usize,
    pub bound: f64,
    pub gap: f64,
    /// Fitted decay rates of D(ρ_t‖σ) under the Davies dissipator.
    pub rates: Vec<f64>,
}

impl AssemblyReport {
    pub fn min_rate(&self) -> f64 {
        self.rates.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn consistent(&self) -> bool {
        !self.rates.is_empty() && self.bound <= self.min_rate()
    }
}

/// The full chain: local MLSI estimates on x∂ (x ∈ Γ₀) and R∂, Ĉ on the
/// whole lattice, the assembled bound, and trajectory decay rates.
pub fn assembly_pipeline(ens: Arc<GibbsEnsemble>, opts: &AssemblyOptions) -> Result<AssemblyReport> {
    let g = ens.graph().clone();
    let col = g.two_coloring()?;
    let gamma = g.all();
    let cg = coarse_grain_sets(&g, &col, opts.l0)?;
    let davies = Davies::new(ens.clone(), gamma.clone(), &opts.couplings, opts.chi, BohrMode::Local)?;
    let local_alpha = |regions: Vec<Region>| -> Result<f64> {
        let est = par::map(&regions, opts.threads, |r| -> Result<f64> {
            let l = davies.local_dissipator_on(r, &gamma, Picture::Schrodinger)?;
            let e = davies.condexp(r)?;
            Ok(mlsi_upper_estimate(&l, &e, &opts.budget)?.ratio)
        });
        Ok(est.into_iter().collect::<Result<Vec<_>>>()?.into_iter().fold(f64::INFINITY, f64::min))
    };
    let zeros: Vec<Region> = col
        .zeros()
        .sites()
        .iter()
        .map(|&x| g.closure(&Region::new(vec![x])))
        .collect();
    let alpha0 = local_alpha(zeros)?;
    let alpha1 = local_alpha(cg.sets.iter().map(|r| g.closure(r)).collect())?;
    let c_hat = c_of_l_estimate(ens.clone(), &col, opts.l0, &[gamma.clone()], opts.random_states, opts.seed, opts.threads)?[0].c_hat;
    let bound = mlsi_assembly(alpha0, alpha1, c_hat, cg.multiplicity)?;

    let sigma = davies.sigma()?;
    let gap = spectral_gap(&davies.dissipator(Picture::Heisenberg), &sigma)?.gap;
    let prop = Propagator::new(&davies.dissipator(Picture::Schrodinger), EvolveMode::Auto)?;
    let times = uniform_grid(6.0 / gap, 60);
    let mut states = default_initial_states(davies.dim(), opts.trajectories, opts.seed);
    // the random states first, then the basis states, truncated
    states.rotate_left(davies.dim());
    states.truncate(2 * opts.trajectories);
    let mut rates = Vec::new();
    for rho in &states {
        let tr = evolve_with(&prop, rho, &times, &sigma)?;
        if let Some(f) = tr.fit(0.0) {
            rates.push(f.rate);
        }
    }
    Ok(AssemblyReport {
        alpha0,
        alpha1,
        c_hat,
        multiplicity: cg.multiplicity,
        bound,
        gap,
        rates,
    })
}

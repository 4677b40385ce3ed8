//! Relative entropies, entropy production, MLSI estimates, semigroup
//! evolution and mixing times.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use faer::Mat;
use serde::Serialize;

use crate::davies::spectral_gap;
use crate::error::{Error, Result};
use crate::fit::{log_linear_fit, DecayFit};
use crate::hamiltonian::GibbsEnsemble;
use crate::lattice::Region;
use crate::linalg::{
    c64, cr, dagger, eigh_sym, expm, eye, fro, kron, matfun, matvec, random, scaled, symmetrize, trace,
    trace_norm, trace_prod, unvec_rm, vec_rm, zeros, CMat, MatFun, Spectrum,
};
use crate::operator::positions_in;
use crate::par;
use crate::superop::{ConditionalExpectation, Picture, Superoperator, DENSE_SUPEROP_MAX_DIM};
use crate::tensor::{partial_trace_keep, Split};

/// Eigenvalues below this are treated as zero (and floored when needed).
pub const ENTROPY_FLOOR: f64 = 1e-12;

/// D(ρ‖σ) = Tr[ρ(log ρ − log σ)], +∞ when the support of ρ is not
/// contained in that of σ.
pub fn relative_entropy(rho: &CMat, sigma: &CMat) -> f64 {
    relative_entropy_flagged(rho, sigma).0
}

/// Same as [`relative_entropy`], also reporting whether any eigenvalue of
/// σ inside the support of ρ had to be floored.
pub fn relative_entropy_flagged(rho: &CMat, sigma: &CMat) -> (f64, bool) {
    let r = eigh_sym(rho);
    let s = eigh_sym(sigma);
    let mut neg_ent = 0.0;
    for &p in &r.values {
        if p > ENTROPY_FLOOR {
            neg_ent += p * p.ln();
        }
    }
    // Tr[ρ log σ] = Σ_k ⟨s_k|ρ|s_k⟩ log s_k
    let rot = &(s.vectors.adjoint() * rho) * &s.vectors;
    let mut cross = 0.0;
    let mut floored = false;
    for (k, &sk) in s.values.iter().enumerate() {
        let w = rot[(k, k)].re;
        if sk <= ENTROPY_FLOOR {
            if w > ENTROPY_FLOOR {
                return (f64::INFINITY, true);
            }
            if w > 0.0 {
                floored = true;
                cross += w * ENTROPY_FLOOR.ln();
            }
            continue;
        }
        cross += w * sk.ln();
    }
    ((neg_ent - cross).max(0.0), floored)
}

/// |D(ρ‖σ) − D(ρ‖E_*ρ) − D(E_*ρ‖σ)| for the state σ preserved by E.
pub fn chain_rule_check(rho: &CMat, e: &ConditionalExpectation) -> Result<f64> {
    let sigma = &e.sigma;
    let inv = fro(&(&e.apply_state(sigma) - sigma));
    if inv > 1e-8 {
        return Err(Error::Argument(format!("state is not invariant under {} ({inv:.2e})", e.label)));
    }
    let er = e.apply_state(rho);
    Ok((relative_entropy(rho, sigma) - relative_entropy(rho, &er) - relative_entropy(&er, sigma)).abs())
}

fn log_floor(sp: &Spectrum) -> CMat {
    sp.apply(|x| x.max(ENTROPY_FLOOR).ln())
}

/// Fréchet derivative of log at the matrix with spectrum `sp`, applied to y.
fn dlog(sp: &Spectrum, y: &CMat) -> CMat {
    let n = sp.values.len();
    let v = &sp.vectors;
    let yt = &(v.adjoint() * y) * v;
    let lam: Vec<f64> = sp.values.iter().map(|x| x.max(ENTROPY_FLOOR)).collect();
    let g = Mat::from_fn(n, n, |i, j| {
        let (a, b) = (lam[i], lam[j]);
        let w = if (a - b).abs() <= 1e-10 * a.max(b) {
            2.0 / (a + b)
        } else {
            (a.ln() - b.ln()) / (a - b)
        };
        yt[(i, j)] * w
    });
    &(v * &g) * v.adjoint()
}

fn require_picture(l: &Superoperator, p: Picture) -> Result<()> {
    if l.picture != p {
        return Err(Error::Argument(format!("expected a {p:?} generator")));
    }
    Ok(())
}

/// EP = −Tr[L_*(ρ)(log ρ − log E_*ρ)] for a Schrödinger generator, with a
/// flag when eigenvalues of ρ or E_*ρ were floored.
pub fn entropy_production(l: &Superoperator, rho: &CMat, e: &ConditionalExpectation) -> Result<(f64, bool)> {
    require_picture(l, Picture::Schrodinger)?;
    let sp = eigh_sym(rho);
    let er = e.apply_state(rho);
    let spe = eigh_sym(&er);
    let flagged = sp.min_value() <= ENTROPY_FLOOR || spe.min_value() <= ENTROPY_FLOOR;
    let k = &log_floor(&sp) - &log_floor(&spe);
    Ok((-trace_prod(&l.apply(rho), &k).re, flagged))
}

/// Finite difference of −D(ρ_t‖E_*ρ_t) at t = 0, with ρ_s from a
/// fifth-order Taylor expansion of the semigroup.
pub fn entropy_production_fd(l: &Superoperator, rho: &CMat, e: &ConditionalExpectation, h: f64) -> Result<f64> {
    require_picture(l, Picture::Schrodinger)?;
    let l1 = l.apply(rho);
    let l2 = l.apply(&l1);
    let l3 = l.apply(&l2);
    let l4 = l.apply(&l3);
    let l5 = l.apply(&l4);
    let at = |s: f64| {
        let mut r = rho.clone();
        let mut c = 1.0;
        for (k, lk) in [&l1, &l2, &l3, &l4, &l5].into_iter().enumerate() {
            c *= s / (k + 1) as f64;
            r += scaled(lk, cr(c));
        }
        symmetrize(&r)
    };
    let er = e.apply_state(rho);
    let d = |s: f64| relative_entropy(&at(s), &er);
    // five-point stencil
    Ok(-(d(-2.0 * h) - 8.0 * d(-h) + 8.0 * d(h) - d(2.0 * h)) / (12.0 * h))
}

#[derive(Clone, Debug)]
pub struct MlsiBudget {
    pub random_seeds: usize,
    pub product_seeds: usize,
    pub near_fixed_seeds: usize,
    /// Number of best seeds that are optimized.
    pub optimized: usize,
    pub iterations: usize,
    pub site_dim: usize,
    pub seed: u64,
}

impl Default for MlsiBudget {
    fn default() -> Self {
        MlsiBudget {
            random_seeds: 8,
            product_seeds: 4,
            near_fixed_seeds: 4,
            optimized: 6,
            iterations: 80,
            site_dim: 2,
            seed: 7,
        }
    }
}

/// Seeds with D(ρ‖E_*ρ) below this are discarded.
pub const MLSI_MIN_SEED_ENTROPY: f64 = 1e-10;
/// Optimizer moves stay above this entropy so that the ratio keeps about
/// ten significant digits.
pub const MLSI_MIN_STEP_ENTROPY: f64 = 1e-6;

/// Sampled upper bound on the MLSI constant.
#[derive(Clone, Debug, Serialize)]
pub struct MlsiEstimate {
    pub ratio: f64,
    #[serde(skip)]
    pub state: CMat,
    pub samples: usize,
    /// Best ratio after each optimizer iteration.
    pub trace: Vec<f64>,
}

struct MlsiProblem<'a> {
    l: &'a Superoperator,
    ladj: Superoperator,
    e: &'a ConditionalExpectation,
}

struct Eval {
    ratio: f64,
    d: f64,
    grad: Option<CMat>,
}

impl MlsiProblem<'_> {
    fn eval(&self, a: &CMat, with_grad: bool) -> Eval {
        let t = fro(a).powi(2);
        let rho = scaled(&(a * dagger(a)), cr(1.0 / t));
        let sp = eigh_sym(&rho);
        let er = self.e.apply_state(&rho);
        let spe = eigh_sym(&er);
        let log_er = log_floor(&spe);
        let k = &log_floor(&sp) - &log_er;
        let lr = self.l.apply(&rho);
        let ep = -trace_prod(&lr, &k).re;
        let d = trace_prod(&rho, &k).re;
        let ratio = ep / d;
        if !with_grad || !(d > 0.0) {
            return Eval { ratio, d, grad: None };
        }
        // identity shifts drop out after the trace projection below
        let g_d = &k - &self.e.heis.apply(&dlog(&spe, &rho));
        let mut g_ep = scaled(&self.ladj.apply(&k), cr(-1.0));
        g_ep -= dlog(&sp, &lr);
        g_ep += self.e.heis.apply(&dlog(&spe, &lr));
        let g = symmetrize(&scaled(&(&g_ep - &scaled(&g_d, cr(ratio))), cr(1.0 / d)));
        let gr = trace_prod(&g, &rho);
        let n = a.nrows();
        let shifted = &g - &scaled(&eye(n), gr);
        Eval {
            ratio,
            d,
            grad: Some(scaled(&(&shifted * a), cr(2.0 / t))),
        }
    }
}

fn mixed_with_identity(psi: &CMat, w: f64) -> CMat {
    let n = psi.nrows();
    let mut r = scaled(psi, cr(1.0 - w));
    r += scaled(&eye(n), cr(w / n as f64));
    r
}

/// Minimizes EP(ρ)/D(ρ‖E_*ρ) by gradient descent on ρ = AA†/Tr[AA†].
pub fn mlsi_upper_estimate(l: &Superoperator, e: &ConditionalExpectation, budget: &MlsiBudget) -> Result<MlsiEstimate> {
    mlsi_search(l, e, budget, &[])
}

fn mlsi_search(l: &Superoperator, e: &ConditionalExpectation, budget: &MlsiBudget, extra: &[CMat]) -> Result<MlsiEstimate> {
    require_picture(l, Picture::Schrodinger)?;
    let n = l.dim;
    let prob = MlsiProblem {
        l,
        ladj: l.adjoint()?,
        e,
    };
    let mut rng = random::rng(budget.seed);
    let mut seeds: Vec<CMat> = extra.to_vec();
    for i in 0..n {
        let mut p = zeros(n, n);
        p[(i, i)] = cr(1.0);
        seeds.push(mixed_with_identity(&p, 0.1));
    }
    // product seeds need n = site_dim^k
    let sites = (budget.site_dim >= 2).then(|| {
        let mut k = 0;
        let mut m = 1;
        while m < n {
            m *= budget.site_dim;
            k += 1;
        }
        (m == n).then_some(k)
    });
    if let Some(Some(k)) = sites {
        for _ in 0..budget.product_seeds {
            let factors: Vec<CMat> = (0..k).map(|_| random::pure(&mut rng, budget.site_dim)).collect();
            seeds.push(mixed_with_identity(&crate::linalg::kron_all(&factors), 0.1));
        }
    }
    for _ in 0..budget.random_seeds {
        seeds.push(random::density(&mut rng, n));
    }
    let sig_half = matfun(&e.sigma, MatFun::Sqrt)?;
    for _ in 0..budget.near_fixed_seeds {
        let h = random::hermitian(&mut rng, n);
        let hn = crate::linalg::op_norm(&h);
        let pert = &(&sig_half * &scaled(&h, cr(0.3 / hn))) * &sig_half;
        seeds.push(symmetrize(&(&e.sigma + &pert)));
    }
    let mut samples = 0;
    let mut start: Vec<(f64, CMat)> = Vec::new();
    for s in seeds {
        let a = matfun(&symmetrize(&s), MatFun::Sqrt)?;
        let a = scaled(&a, cr(1.0 / fro(&a)));
        let ev = prob.eval(&a, false);
        samples += 1;
        if ev.d >= MLSI_MIN_SEED_ENTROPY && ev.ratio.is_finite() {
            start.push((ev.ratio, a));
        }
    }
    if start.is_empty() {
        return Err(Error::Estimation("no seed state away from the fixed points".into()));
    }
    start.sort_by(|a, b| a.0.total_cmp(&b.0));
    start.truncate(budget.optimized.max(1));
    let mut best = (f64::INFINITY, zeros(n, n));
    let mut trace_log = Vec::new();
    for (_, mut a) in start {
        let mut cur = prob.eval(&a, true);
        samples += 1;
        let mut eta = 0.0;
        let mut flat = 0;
        for _ in 0..budget.iterations {
            let g = match &cur.grad {
                Some(g) => g.clone(),
                None => break,
            };
            let gn = fro(&g);
            if gn < 1e-14 {
                break;
            }
            if eta == 0.0 {
                eta = 0.1 / gn;
            }
            let mut moved = false;
            for _ in 0..20 {
                let cand = &a - &scaled(&g, cr(eta));
                let cand = scaled(&cand, cr(1.0 / fro(&cand)));
                let ev = prob.eval(&cand, false);
                samples += 1;
                if ev.d >= MLSI_MIN_STEP_ENTROPY && ev.ratio < cur.ratio {
                    let rel = (cur.ratio - ev.ratio) / cur.ratio.abs().max(1e-300);
                    flat = if rel < 1e-10 { flat + 1 } else { 0 };
                    a = cand;
                    cur = prob.eval(&a, true);
                    samples += 1;
                    eta *= 1.5;
                    moved = true;
                    break;
                }
                eta *= 0.3;
            }
            trace_log.push(best.0.min(cur.ratio));
            if !moved || flat >= 3 {
                break;
            }
        }
        if cur.ratio < best.0 {
            let t = fro(&a).powi(2);
            best = (cur.ratio, scaled(&(&a * dagger(&a)), cr(1.0 / t)));
        }
    }
    Ok(MlsiEstimate {
        ratio: best.0,
        state: best.1,
        samples,
        trace: trace_log,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CmlsiReport {
    pub base: MlsiEstimate,
    pub extended: MlsiEstimate,
    pub ancilla: usize,
    pub consistent: bool,
}

/// MLSI search for L ⊗ id_k next to the unextended one. The extended
/// search is seeded with the unextended minimizer tensored with 1/k.
pub fn cmlsi_probe(l: &Superoperator, e: &ConditionalExpectation, k: usize, budget: &MlsiBudget) -> Result<CmlsiReport> {
    let dim = l.dim * k;
    if dim > 2 * DENSE_SUPEROP_MAX_DIM {
        return Err(Error::Resource(format!("extended dimension {dim} exceeds {}", 2 * DENSE_SUPEROP_MAX_DIM)));
    }
    let base = mlsi_upper_estimate(l, e, budget)?;
    let lx = l.extend_with_ancilla(k);
    let ex = ConditionalExpectation {
        heis: e.heis.extend_with_ancilla(k),
        schr: e.schr.extend_with_ancilla(k),
        sigma: kron(&e.sigma, &scaled(&eye(k), cr(1.0 / k as f64))),
        label: format!("{} (ancilla {k})", e.label),
    };
    let seed = kron(&base.state, &scaled(&eye(k), cr(1.0 / k as f64)));
    let mut b = budget.clone();
    b.site_dim = 0;
    let extended = mlsi_search(&lx, &ex, &b, &[seed])?;
    let consistent = extended.ratio <= base.ratio + 1e-8;
    Ok(CmlsiReport {
        base,
        extended,
        ancilla: k,
        consistent,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolveMode {
    Auto,
    Dense,
    Integrator,
}

/// Local error target of the adaptive integrator.
pub const INTEGRATOR_TOL: f64 = 1e-10;
/// Largest accepted trace drift along a trajectory.
pub const TRACE_DRIFT_TOL: f64 = 1e-8;

enum Engine {
    Dense(CMat),
    Apply(Superoperator),
}

/// e^{sL} applied to states, either through cached dense exponentials or
/// an adaptive Dormand-Prince integrator.
pub struct Propagator {
    engine: Engine,
    n: usize,
    cache: Mutex<HashMap<u64, Arc<CMat>>>,
}

impl Propagator {
    pub fn new(l: &Superoperator, mode: EvolveMode) -> Result<Propagator> {
        require_picture(l, Picture::Schrodinger)?;
        let dense = match mode {
            EvolveMode::Dense => true,
            EvolveMode::Integrator => false,
            EvolveMode::Auto => l.dim <= DENSE_SUPEROP_MAX_DIM,
        };
        let engine = if dense {
            Engine::Dense(l.to_dense()?)
        } else {
            Engine::Apply(l.clone())
        };
        Ok(Propagator {
            engine,
            n: l.dim,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.engine, Engine::Dense(_))
    }

    fn exp_matrix(&self, s: f64) -> Arc<CMat> {
        if let Some(m) = self.cache.lock().unwrap().get(&s.to_bits()) {
            return m.clone();
        }
        let Engine::Dense(g) = &self.engine else {
            unreachable!("only dense engines cache exponentials")
        };
        let m = Arc::new(expm(&scaled(g, cr(s))));
        self.cache.lock().unwrap().insert(s.to_bits(), m.clone());
        m
    }

    /// Fills the cache with e^{L dt/2^j}, j = 0..=levels, by squaring.
    pub fn prepare_ladder(&self, dt: f64, levels: usize) {
        if !self.is_dense() {
            return;
        }
        let finest = dt * 0.5f64.powi(levels as i32);
        let mut m = self.exp_matrix(finest);
        for j in (0..levels).rev() {
            let s = dt * 0.5f64.powi(j as i32);
            let next = Arc::new(&*m * &*m);
            self.cache.lock().unwrap().entry(s.to_bits()).or_insert(next.clone());
            m = next;
        }
    }

    /// ρ(t0 + s) from ρ(t0).
    pub fn advance(&self, rho: &CMat, t0: f64, s: f64) -> Result<CMat> {
        if s == 0.0 {
            return Ok(rho.clone());
        }
        match &self.engine {
            Engine::Dense(_) => {
                let m = self.exp_matrix(s);
                Ok(unvec_rm(&matvec(&m, &vec_rm(rho)), self.n, self.n))
            }
            Engine::Apply(l) => dopri(l, rho, t0, s),
        }
    }
}

const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn dopri(l: &Superoperator, rho: &CMat, t0: f64, span: f64) -> Result<CMat> {
    let _ = DP_C;
    let mut y = rho.clone();
    let mut t = 0.0;
    let ly = l.apply(&y);
    let rate = fro(&ly) / fro(&y).max(1e-300);
    let mut h = if rate > 0.0 { (0.01 / rate).min(span) } else { span };
    let mut k1 = ly;
    while t < span {
        if span - t < h {
            h = span - t;
        }
        let mut ks: Vec<CMat> = vec![k1.clone()];
        for i in 1..7 {
            let mut yi = y.clone();
            for (j, kj) in ks.iter().enumerate() {
                let a = DP_A[i][j];
                if a != 0.0 {
                    yi += scaled(kj, cr(h * a));
                }
            }
            ks.push(l.apply(&yi));
        }
        let mut y5 = y.clone();
        let mut err = zeros(y.nrows(), y.ncols());
        for (j, kj) in ks.iter().enumerate() {
            let b5 = if j < 6 { DP_A[6][j] } else { 0.0 };
            if b5 != 0.0 {
                y5 += scaled(kj, cr(h * b5));
            }
            let db = b5 - DP_B4[j];
            if db != 0.0 {
                err += scaled(kj, cr(h * db));
            }
        }
        let scale = INTEGRATOR_TOL * (1.0 + fro(&y5));
        let e = fro(&err) / scale;
        if e <= 1.0 {
            t += h;
            y = y5;
            // first-same-as-last
            k1 = ks.pop().unwrap();
        }
        let factor = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h < 1e-12 * span.max(1.0) && t < span {
            return Err(Error::Integration {
                t: t0 + t,
                msg: format!("step size underflow (error ratio {e:.2e})"),
            });
        }
    }
    Ok(y)
}

/// States along a time grid with their distance to the fixed point.
#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    #[serde(skip)]
    pub states: Vec<CMat>,
    pub trace_distance: Vec<f64>,
    pub rel_entropy: Vec<f64>,
    /// Relative entropies of marginals, one curve per region label.
    pub local: Vec<(String, Vec<f64>)>,
    pub floored: bool,
    pub dense: bool,
}

impl Trajectory {
    /// Largest increase of D(ρ_t‖σ) between consecutive grid points.
    pub fn monotonicity_violation(&self) -> f64 {
        self.rel_entropy
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    pub fn fit(&self, t_min: f64) -> Option<DecayFit> {
        fit_window(&self.times, &self.rel_entropy, t_min)
    }
}

fn fit_window(times: &[f64], vals: &[f64], t_min: f64) -> Option<DecayFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(vals)
        .filter(|(t, _)| **t >= t_min)
        .map(|(a, b)| (*a, *b))
        .unzip();
    log_linear_fit(&x, &y, 1e-13)
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() || times[0] < 0.0 || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Argument("time grid must be nonnegative and sorted".into()));
    }
    Ok(())
}

/// ρ_t = e^{tL}ρ0 on the grid, with diagnostics against σ.
pub fn evolve(l: &Superoperator, rho0: &CMat, times: &[f64], sigma: &CMat, mode: EvolveMode) -> Result<Trajectory> {
    check_grid(times)?;
    let prop = Propagator::new(l, mode)?;
    evolve_with(&prop, rho0, times, sigma)
}

pub fn evolve_with(prop: &Propagator, rho0: &CMat, times: &[f64], sigma: &CMat) -> Result<Trajectory> {
    check_grid(times)?;
    let mut states = Vec::with_capacity(times.len());
    let mut td = Vec::with_capacity(times.len());
    let mut re = Vec::with_capacity(times.len());
    let mut floored = false;
    let mut rho = rho0.clone();
    let mut t_prev = 0.0;
    for &t in times {
        rho = symmetrize(&prop.advance(&rho, t_prev, t - t_prev)?);
        t_prev = t;
        let drift = (trace(&rho).re - 1.0).abs();
        if drift > TRACE_DRIFT_TOL {
            return Err(Error::Integration {
                t,
                msg: format!("trace drift {drift:.2e}"),
            });
        }
        td.push(trace_norm(&(&rho - sigma)));
        let (d, f) = relative_entropy_flagged(&rho, sigma);
        floored |= f;
        re.push(d);
        states.push(rho.clone());
    }
    Ok(Trajectory {
        times: times.to_vec(),
        states,
        trace_distance: td,
        rel_entropy: re,
        local: Vec::new(),
        floored,
        dense: prop.is_dense(),
    })
}

pub fn uniform_grid(horizon: f64, points: usize) -> Vec<f64> {
    (0..=points).map(|k| horizon * k as f64 / points as f64).collect()
}

#[derive(Clone, Debug)]
pub struct MixingOptions {
    /// Defaults to the spectral gap of the generator.
    pub gap: Option<f64>,
    /// Defaults to 20/gap.
    pub horizon: Option<f64>,
    pub grid: usize,
    pub random_states: usize,
    pub time_tol: f64,
    pub seed: u64,
    pub threads: usize,
    pub mode: EvolveMode,
}

impl Default for MixingOptions {
    fn default() -> Self {
        MixingOptions {
            gap: None,
            horizon: None,
            grid: 400,
            random_states: 32,
            time_tol: 1e-3,
            seed: 11,
            threads: 1,
            mode: EvolveMode::Auto,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MixingReport {
    pub eps: f64,
    pub t_mix: f64,
    pub per_state: Vec<f64>,
    pub gap: f64,
    /// (1/λ) log(ε^{-1} ‖σ^{-1/2}‖)
    pub bound: f64,
    pub horizon: f64,
}

impl MixingReport {
    pub fn within_bound(&self) -> bool {
        self.t_mix <= self.bound
    }
}

pub fn gap_bound(gap: f64, eps: f64, sigma: &CMat) -> f64 {
    let smin = eigh_sym(sigma).min_value();
    (1.0 / gap) * (smin.powf(-0.5) / eps).ln()
}

/// Computational basis states followed by `k` random pure states.
pub fn default_initial_states(n: usize, k: usize, seed: u64) -> Vec<CMat> {
    let mut out = Vec::with_capacity(n + k);
    for i in 0..n {
        let mut p = zeros(n, n);
        p[(i, i)] = cr(1.0);
        out.push(p);
    }
    let mut rng = random::rng(seed);
    for _ in 0..k {
        out.push(random::pure(&mut rng, n));
    }
    out
}

/// Smallest time with ‖ρ_t − σ‖₁ ≤ ε, maximized over initial states.
/// The distance is nonincreasing in t, so each state is located on the
/// grid and refined by bisection.
pub fn mixing_time(l: &Superoperator, sigma: &CMat, eps: f64, initial: Option<Vec<CMat>>, opts: &MixingOptions) -> Result<MixingReport> {
    require_picture(l, Picture::Schrodinger)?;
    if !(eps > 0.0) {
        return Err(Error::Argument("eps must be positive".into()));
    }
    let gap = match opts.gap {
        Some(g) => g,
        None => spectral_gap(&l.adjoint()?, sigma)?.gap,
    };
    if !(gap > 0.0) {
        return Err(Error::Domain("generator has no spectral gap".into()));
    }
    let horizon = opts.horizon.unwrap_or(20.0 / gap);
    let dt = horizon / opts.grid as f64;
    let levels = (dt / opts.time_tol).log2().ceil().max(0.0) as usize;
    let prop = Propagator::new(l, opts.mode)?;
    prop.prepare_ladder(dt, levels);
    let states = initial.unwrap_or_else(|| default_initial_states(l.dim, opts.random_states, opts.seed));
    let dist = |r: &CMat| trace_norm(&(r - sigma));
    let results = par::map(&states, opts.threads, |rho0| -> Result<f64> {
        let mut rho = rho0.clone();
        if dist(&rho) <= eps {
            return Ok(0.0);
        }
        let mut t = 0.0;
        for _ in 0..opts.grid {
            let next = prop.advance(&rho, t, dt)?;
            if dist(&next) <= eps {
                let mut h = dt;
                for _ in 0..levels {
                    h *= 0.5;
                    let mid = prop.advance(&rho, t, h)?;
                    if dist(&mid) > eps {
                        rho = mid;
                        t += h;
                    }
                }
                return Ok(t + h);
            }
            rho = next;
            t += dt;
        }
        Err(Error::Horizon { distance: dist(&rho) })
    });
    let per_state = results.into_iter().collect::<Result<Vec<f64>>>()?;
    let t_mix = per_state.iter().copied().fold(0.0, f64::max);
    Ok(MixingReport {
        eps,
        t_mix,
        per_state,
        gap,
        bound: gap_bound(gap, eps, sigma),
        horizon,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalCurve {
    pub times: Vec<f64>,
    pub local: Vec<f64>,
    pub global: Vec<f64>,
    /// max_t (local − global); ≤ 0 by data processing.
    pub dpi_violation: f64,
}

impl LocalCurve {
    pub fn fits(&self, t_min: f64) -> (Option<DecayFit>, Option<DecayFit>) {
        (
            fit_window(&self.times, &self.local, t_min),
            fit_window(&self.times, &self.global, t_min),
        )
    }
}

/// D(tr_{A^c} ρ_t ‖ tr_{A^c} σ^Γ) next to D(ρ_t‖σ^Γ).
pub fn local_mixing_curve(
    l: &Superoperator,
    ens: &GibbsEnsemble,
    gamma: &Region,
    a: &Region,
    rho0: &CMat,
    times: &[f64],
) -> Result<LocalCurve> {
    if a.is_empty() || !a.is_subset(gamma) {
        return Err(Error::Argument("local region must be a nonempty subset of the system".into()));
    }
    let sigma = ens.sigma(gamma)?;
    let traj = evolve(l, rho0, times, &sigma, EvolveMode::Auto)?;
    let sp = Split::new(gamma.len(), ens.d(), &positions_in(gamma.sites(), a.sites())?);
    let sig_a = partial_trace_keep(&sigma, &sp);
    let local: Vec<f64> = traj
        .states
        .iter()
        .map(|r| relative_entropy(&symmetrize(&partial_trace_keep(r, &sp)), &sig_a))
        .collect();
    let dpi_violation = local
        .iter()
        .zip(&traj.rel_entropy)
        .map(|(a, b)| a - b)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(LocalCurve {
        times: times.to_vec(),
        local,
        global: traj.rel_entropy,
        dpi_violation,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityCurve {
    pub times: Vec<f64>,
    /// D(ρ_t‖σ)/|Γ|
    pub density: Vec<f64>,
    /// D(ρ0‖σ) and log Z + β Tr[ρ0 H].
    pub initial: f64,
    pub initial_bound: f64,
    pub monotone: bool,
}

pub fn entropy_density_decay(
    l: &Superoperator,
    ens: &GibbsEnsemble,
    gamma: &Region,
    rho0: &CMat,
    times: &[f64],
) -> Result<DensityCurve> {
    let sigma = ens.sigma(gamma)?;
    let traj = evolve(l, rho0, times, &sigma, EvolveMode::Auto)?;
    let h = ens.potential.hamiltonian_matrix(gamma)?;
    let bound = ens.log_partition(gamma)? + ens.beta * trace_prod(rho0, &h).re;
    let n = gamma.len() as f64;
    Ok(DensityCurve {
        times: times.to_vec(),
        density: traj.rel_entropy.iter().map(|d| d / n).collect(),
        initial: relative_entropy(rho0, &sigma),
        initial_bound: bound,
        monotone: traj.monotonicity_violation() <= 1e-10,
    })
}

/// Complex scalar helper for tests and callers building states.
pub fn pure_state(v: &[c64]) -> CMat {
    let n = v.len();
    Mat::from_fn(n, n, |i, j| v[i] * v[j].conj())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::davies::{BohrMode, ChiKind, Couplings, Davies};
    use crate::hamiltonian::{ModelSpec, Potential};
    use crate::lattice::SpinGraph;
    use crate::linalg::real_diag;

    fn davies(n: usize, beta: f64) -> Davies {
        let g = SpinGraph::chain(n).unwrap();
        let p = Potential::build(&g, ModelSpec::Ising { j: 1.0, g: 0.5 }).unwrap();
        let e = Arc::new(GibbsEnsemble::new(p, beta).unwrap());
        Davies::new(e, Region::range(0, n - 1), &Couplings::Xyz, ChiKind::Glauber, BohrMode::Local).unwrap()
    }

    fn one_qubit() -> Davies {
        let g = SpinGraph::chain(1).unwrap();
        let p = Potential::from_terms(&g, vec![]).unwrap();
        let e = Arc::new(GibbsEnsemble::new(p, 0.0).unwrap());
        Davies::new(e, Region::range(0, 0), &Couplings::Xyz, ChiKind::Metropolis, BohrMode::Local).unwrap()
    }

    #[test]
    fn relative_entropy_values() {
        let r = real_diag(&[1.0, 0.0]);
        let s = real_diag(&[0.5, 0.5]);
        assert!((relative_entropy(&r, &s) - 2f64.ln()).abs() < 1e-14);
        assert_eq!(relative_entropy(&s, &r), f64::INFINITY);
        let mut rng = random::rng(1);
        for _ in 0..20 {
            let a = random::density(&mut rng, 4);
            let b = random::density(&mut rng, 4);
            let l1 = trace_norm(&(&a - &b));
            assert!(l1 * l1 <= 2.0 * relative_entropy(&a, &b) + 1e-12);
            assert!(relative_entropy(&a, &a) < 1e-12);
        }
    }

    #[test]
    fn chain_rule_for_davies_projection() {
        let dv = davies(3, 0.7);
        let e = dv.condexp(&Region::new(vec![1])).unwrap();
        let mut rng = random::rng(2);
        for _ in 0..5 {
            let rho = random::density(&mut rng, 8);
            assert!(chain_rule_check(&rho, &e).unwrap() < 1e-10);
        }
        let bad = ConditionalExpectation {
            sigma: maximally_mixed_like(8),
            ..e
        };
        assert!(chain_rule_check(&random::density(&mut rng, 8), &bad).is_err());
    }

    fn maximally_mixed_like(n: usize) -> CMat {
        let mut m = scaled(&eye(n), cr(1.0 / n as f64));
        m[(0, 0)] += cr(0.05);
        m[(1, 1)] -= cr(0.05);
        m
    }

    #[test]
    fn entropy_production_matches_difference() {
        let q = one_qubit();
        let l = q.dissipator(Picture::Schrodinger);
        let e = ConditionalExpectation::trace_map(&q.sigma().unwrap());
        let rho = real_diag(&[0.9, 0.1]);
        let (ep, _) = entropy_production(&l, &rho, &e).unwrap();
        let fd = entropy_production_fd(&l, &rho, &e, 1e-5).unwrap();
        assert!((ep - fd).abs() < 1e-6, "{ep} {fd}");
        let dv = davies(3, 0.8);
        let l = dv.generator(Picture::Schrodinger).unwrap();
        let e = ConditionalExpectation::trace_map(&dv.sigma().unwrap());
        let mut rng = random::rng(3);
        for _ in 0..20 {
            let rho = random::density(&mut rng, 8);
            let (ep, _) = entropy_production(&l, &rho, &e).unwrap();
            assert!(ep >= -1e-9);
            let fd = entropy_production_fd(&l, &rho, &e, 1e-5).unwrap();
            assert!((ep - fd).abs() < 1e-6);
        }
        assert!(entropy_production(&l, &e.sigma, &e).unwrap().0.abs() < 1e-10);
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let dv = davies(2, 0.6);
        let l = dv.dissipator(Picture::Schrodinger);
        let e = ConditionalExpectation::trace_map(&dv.sigma().unwrap());
        let prob = MlsiProblem {
            l: &l,
            ladj: l.adjoint().unwrap(),
            e: &e,
        };
        let mut rng = random::rng(5);
        let a = random::ginibre(&mut rng, 4, 4);
        let dir = random::ginibre(&mut rng, 4, 4);
        let g = prob.eval(&a, true).grad.unwrap();
        let h = 1e-6;
        let fp = prob.eval(&(&a + &scaled(&dir, cr(h))), false).ratio;
        let fm = prob.eval(&(&a - &scaled(&dir, cr(h))), false).ratio;
        let fd = (fp - fm) / (2.0 * h);
        let an = trace_prod(&dagger(&g), &dir).re;
        assert!((fd - an).abs() < 1e-6 * (1.0 + an.abs()), "{fd} {an}");
    }

    #[test]
    fn mlsi_one_qubit_against_sweep() {
        let q = one_qubit();
        let l = q.dissipator(Picture::Schrodinger);
        let e = ConditionalExpectation::trace_map(&q.sigma().unwrap());
        let est = mlsi_upper_estimate(&l, &e, &MlsiBudget::default()).unwrap();
        let mut rng = random::rng(8);
        let mut sweep = f64::INFINITY;
        for _ in 0..20000 {
            let rho = random::density(&mut rng, 2);
            let d = relative_entropy(&rho, &e.sigma);
            if d > 1e-10 {
                sweep = sweep.min(entropy_production(&l, &rho, &e).unwrap().0 / d);
            }
        }
        assert!(est.ratio <= sweep * 1.05, "{} {sweep}", est.ratio);
        let t = fro(&est.state);
        assert!(t > 0.0);
        let (ep, _) = entropy_production(&l, &est.state, &e).unwrap();
        let d = relative_entropy(&est.state, &e.sigma);
        assert!((ep / d - est.ratio).abs() < 1e-9 * est.ratio.max(1.0), "{} {} {:?}", ep / d, est.ratio, eigh_sym(&est.state).values);
        let c = cmlsi_probe(&l, &e, 2, &MlsiBudget::default()).unwrap();
        assert!(c.consistent && c.extended.ratio > 0.0);
    }

    #[test]
    fn dense_and_integrator_agree() {
        let dv = davies(3, 0.8);
        let l = dv.generator(Picture::Schrodinger).unwrap();
        let sigma = dv.sigma().unwrap();
        let mut rng = random::rng(4);
        let rho = random::density(&mut rng, 8);
        let grid = uniform_grid(5.0, 10);
        let a = evolve(&l, &rho, &grid, &sigma, EvolveMode::Dense).unwrap();
        let b = evolve(&l, &rho, &grid, &sigma, EvolveMode::Integrator).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            assert!(fro(&(x - y)) < 1e-7);
        }
        assert!(fro(&(&a.states[0] - &rho)) < 1e-14);
        assert!(a.monotonicity_violation() <= 1e-12);
        let z = Superoperator::zero(8, Picture::Schrodinger);
        let c = evolve(&z, &rho, &grid, &sigma, EvolveMode::Integrator).unwrap();
        assert!(fro(&(&c.states[10] - &rho)) < 1e-14);
    }

    #[test]
    fn mixing_within_gap_bound() {
        let q = one_qubit();
        let l = q.dissipator(Picture::Schrodinger);
        let sigma = q.sigma().unwrap();
        let r = mixing_time(&l, &sigma, 0.01, None, &MixingOptions::default()).unwrap();
        assert!(r.within_bound(), "{r:?}");
        assert!((r.gap - 4.0).abs() < 1e-9);
        let r0 = mixing_time(&l, &sigma, 0.01, Some(vec![sigma.clone()]), &MixingOptions::default()).unwrap();
        assert_eq!(r0.t_mix, 0.0);
        let dv = davies(3, 0.8);
        let l = dv.dissipator(Picture::Schrodinger);
        let sigma = dv.sigma().unwrap();
        let opts = MixingOptions {
            random_states: 4,
            threads: 2,
            ..Default::default()
        };
        let r = mixing_time(&l, &sigma, 0.01, None, &opts).unwrap();
        assert!(r.within_bound(), "{r:?}");
        let r2 = mixing_time(&l, &sigma, 0.001, None, &opts).unwrap();
        assert!(r2.t_mix >= r.t_mix);
        let short = MixingOptions {
            horizon: Some(0.01),
            ..opts
        };
        assert!(matches!(mixing_time(&l, &sigma, 0.01, None, &short), Err(Error::Horizon { .. })));
    }

    #[test]
    fn local_curve_below_global() {
        let dv = davies(4, 0.5);
        let l = dv.generator(Picture::Schrodinger).unwrap();
        let mut rng = random::rng(6);
        let rho = random::density(&mut rng, 16);
        let c = local_mixing_curve(&l, &dv.ens, &dv.region, &Region::range(1, 2), &rho, &uniform_grid(4.0, 20)).unwrap();
        assert!(c.dpi_violation <= 1e-10);
        let sigma = dv.sigma().unwrap();
        let c0 = local_mixing_curve(&l, &dv.ens, &dv.region, &Region::range(1, 2), &sigma, &uniform_grid(1.0, 4)).unwrap();
        assert!(c0.local.iter().all(|x| x.abs() < 1e-10));
    }

    #[test]
    fn density_curve_bound() {
        let dv = davies(3, 0.5);
        let l = dv.generator(Picture::Schrodinger).unwrap();
        let mut rng = random::rng(7);
        let factors: Vec<CMat> = (0..3).map(|_| random::pure(&mut rng, 2)).collect();
        let rho = crate::linalg::kron_all(&factors);
        let c = entropy_density_decay(&l, &dv.ens, &dv.region, &rho, &uniform_grid(3.0, 15)).unwrap();
        assert!(c.initial <= c.initial_bound + 1e-10);
        assert!(c.monotone);
    }
}

//! Index bookkeeping for operators on a product of `n` equal local spaces.
//!
//! Position 0 is the most significant tensor digit, so the basis index of a
//! product state |i_0 i_1 .. i_{n-1}> is `sum_k i_k d^(n-1-k)`.

use faer::{unzip, zip, Mat};

use crate::linalg::{c64, zeros, CMat};

pub fn ipow(d: usize, k: usize) -> usize {
    d.pow(k as u32)
}

/// Digits of `g` in base `d`, most significant first.
pub fn digits(mut g: usize, n: usize, d: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for k in (0..n).rev() {
        out[k] = g % d;
        g /= d;
    }
    out
}

/// Splits every global basis index into a (sub, rest) pair, where `sub`
/// enumerates the digits at the chosen positions (in the given order) and
/// `rest` the remaining digits in increasing position order.
#[derive(Clone, Debug)]
pub struct Split {
    pub n: usize,
    pub d: usize,
    pub positions: Vec<usize>,
    pub dsub: usize,
    pub drest: usize,
    /// `index[s * drest + r]` is the global index.
    index: Vec<usize>,
}

impl Split {
    pub fn new(n: usize, d: usize, positions: &[usize]) -> Split {
        let k = positions.len();
        let rest: Vec<usize> = (0..n).filter(|p| !positions.contains(p)).collect();
        let dsub = ipow(d, k);
        let drest = ipow(d, rest.len());
        let mut weight = vec![0usize; n];
        for p in 0..n {
            weight[p] = ipow(d, n - 1 - p);
        }
        let sub_off: Vec<usize> = (0..dsub)
            .map(|s| {
                let ds = digits(s, k, d);
                positions.iter().zip(ds).map(|(&p, x)| x * weight[p]).sum()
            })
            .collect();
        let rest_off: Vec<usize> = (0..drest)
            .map(|r| {
                let dr = digits(r, rest.len(), d);
                rest.iter().zip(dr).map(|(&p, x)| x * weight[p]).sum()
            })
            .collect();
        let mut index = Vec::with_capacity(dsub * drest);
        for s in 0..dsub {
            for r in 0..drest {
                index.push(sub_off[s] + rest_off[r]);
            }
        }
        Split {
            n,
            d,
            positions: positions.to_vec(),
            dsub,
            drest,
            index,
        }
    }

    #[inline]
    pub fn g(&self, s: usize, r: usize) -> usize {
        self.index[s * self.drest + r]
    }

    pub fn dim(&self) -> usize {
        self.dsub * self.drest
    }
}

/// Reduced operator on the split's `sub` positions: tr over the rest.
pub fn partial_trace_keep(x: &CMat, sp: &Split) -> CMat {
    let mut out = zeros(sp.dsub, sp.dsub);
    for s in 0..sp.dsub {
        for t in 0..sp.dsub {
            let mut acc = c64::new(0.0, 0.0);
            for r in 0..sp.drest {
                acc += x[(sp.g(s, r), sp.g(t, r))];
            }
            out[(s, t)] = acc;
        }
    }
    out
}

/// `op ⊗ 1` with `op` placed on the split's sub positions.
pub fn embed_sub(op: &CMat, sp: &Split) -> CMat {
    let dim = sp.dim();
    let mut out = zeros(dim, dim);
    for s in 0..sp.dsub {
        for t in 0..sp.dsub {
            let v = op[(s, t)];
            if v.re == 0.0 && v.im == 0.0 {
                continue;
            }
            for r in 0..sp.drest {
                out[(sp.g(s, r), sp.g(t, r))] = v;
            }
        }
    }
    out
}

/// (o ⊗ 1) x
pub fn left_mul_sub(o: &CMat, x: &CMat, sp: &Split) -> CMat {
    let dim = sp.dim();
    let mut out = zeros(dim, x.ncols());
    for col in 0..x.ncols() {
        for r in 0..sp.drest {
            for s in 0..sp.dsub {
                let mut acc = c64::new(0.0, 0.0);
                for t in 0..sp.dsub {
                    acc += o[(s, t)] * x[(sp.g(t, r), col)];
                }
                out[(sp.g(s, r), col)] = acc;
            }
        }
    }
    out
}

/// x (o ⊗ 1)
pub fn right_mul_sub(x: &CMat, o: &CMat, sp: &Split) -> CMat {
    let dim = sp.dim();
    let mut out = zeros(x.nrows(), dim);
    for r in 0..sp.drest {
        for t in 0..sp.dsub {
            let gt = sp.g(t, r);
            for row in 0..x.nrows() {
                let mut acc = c64::new(0.0, 0.0);
                for s in 0..sp.dsub {
                    acc += x[(row, sp.g(s, r))] * o[(s, t)];
                }
                out[(row, gt)] = acc;
            }
        }
    }
    out
}

/// (u ⊗ 1)^† x (u ⊗ 1)
pub fn conjugate_sub(u: &CMat, x: &CMat, sp: &Split) -> CMat {
    let ud = u.adjoint().to_owned();
    right_mul_sub(&left_mul_sub(&ud, x, sp), u, sp)
}

/// (1 ⊗ u ⊗ 1) x with u on site `p` of `n` sites of dimension `d`.
pub fn left_mul_site(u: &CMat, x: &CMat, n: usize, d: usize, p: usize) -> CMat {
    let lo = ipow(d, n - 1 - p);
    let blk = d * lo;
    let nc = x.ncols();
    let mut out = zeros(x.nrows(), nc);
    for h in 0..x.nrows() / blk {
        for s in 0..d {
            for t in 0..d {
                let c = u[(s, t)];
                if c == c64::new(0.0, 0.0) {
                    continue;
                }
                let src = x.as_ref().submatrix(h * blk + t * lo, 0, lo, nc);
                let dst = out.as_mut().submatrix_mut(h * blk + s * lo, 0, lo, nc);
                zip!(dst, src).for_each(|unzip!(a, b)| *a += c * *b);
            }
        }
    }
    out
}

/// x (1 ⊗ u ⊗ 1) with u on site `p`.
pub fn right_mul_site(x: &CMat, u: &CMat, n: usize, d: usize, p: usize) -> CMat {
    let lo = ipow(d, n - 1 - p);
    let blk = d * lo;
    let nr = x.nrows();
    let mut out = zeros(nr, x.ncols());
    for h in 0..x.ncols() / blk {
        for s in 0..d {
            for t in 0..d {
                let c = u[(s, t)];
                if c == c64::new(0.0, 0.0) {
                    continue;
                }
                let src = x.as_ref().submatrix(0, h * blk + s * lo, nr, lo);
                let dst = out.as_mut().submatrix_mut(0, h * blk + t * lo, nr, lo);
                zip!(dst, src).for_each(|unzip!(a, b)| *a += c * *b);
            }
        }
    }
    out
}

/// (1 ⊗ u ⊗ 1)^† x (1 ⊗ u ⊗ 1)
pub fn conjugate_site(u: &CMat, x: &CMat, n: usize, d: usize, p: usize) -> CMat {
    let ud = u.adjoint().to_owned();
    right_mul_site(&left_mul_site(&ud, x, n, d, p), u, n, d, p)
}

/// Applies `s ⊗ id_rest` where `s` is a superoperator matrix on the sub
/// space in row-major vectorization, acting on `x`.
pub fn apply_local_superop(s: &CMat, x: &CMat, sp: &Split) -> CMat {
    let (ds, dr) = (sp.dsub, sp.drest);
    // gather blocks: column (r, r'), row (a, b)
    let mut blocks = Mat::<c64>::zeros(ds * ds, dr * dr);
    for r in 0..dr {
        for rp in 0..dr {
            let col = r * dr + rp;
            for a in 0..ds {
                let ga = sp.g(a, r);
                for b in 0..ds {
                    blocks[(a * ds + b, col)] = x[(ga, sp.g(b, rp))];
                }
            }
        }
    }
    let out_blocks = s * &blocks;
    let dim = sp.dim();
    let mut out = zeros(dim, dim);
    for r in 0..dr {
        for rp in 0..dr {
            let col = r * dr + rp;
            for a in 0..ds {
                let ga = sp.g(a, r);
                for b in 0..ds {
                    out[(ga, sp.g(b, rp))] = out_blocks[(a * ds + b, col)];
                }
            }
        }
    }
    out
}

/// Reorders `x` into the (sub ⊗ rest) ordering of the split.
pub fn to_split_order(x: &CMat, sp: &Split) -> CMat {
    let dim = sp.dim();
    Mat::from_fn(dim, dim, |i, j| {
        x[(sp.g(i / sp.drest, i % sp.drest), sp.g(j / sp.drest, j % sp.drest))]
    })
}

pub fn from_split_order(y: &CMat, sp: &Split) -> CMat {
    let dim = sp.dim();
    let mut out = zeros(dim, dim);
    for i in 0..dim {
        let gi = sp.g(i / sp.drest, i % sp.drest);
        for j in 0..dim {
            out[(gi, sp.g(j / sp.drest, j % sp.drest))] = y[(i, j)];
        }
    }
    out
}

//! Dense exact matrices over 𝔽_p / ℤ_(p), with the local Smith form,
//! deterministic linear solves, and saturated kernels.
//!
//! Over ℤ_(p) the pivot of minimal p-adic valuation (ties broken by smallest
//! column, then row) always divides the rest of its block, so elimination
//! stays inside the ring and the diagonal comes out as p^{s₁} | p^{s₂} | …
//! with units normalized to 1. Over 𝔽_p the same code degenerates to
//! Gaussian elimination with 0/1 diagonal.

use crate::error::{Error, Result};
use crate::scalar::{Ring, Scalar};

/// Dense row-major matrix with all entries in one ring.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    ring: Ring,
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl Mat {
    pub fn zeros(ring: Ring, rows: usize, cols: usize) -> Mat {
        Mat {
            ring,
            rows,
            cols,
            data: vec![Scalar::zero(ring); rows * cols],
        }
    }

    pub fn identity(ring: Ring, n: usize) -> Mat {
        let mut m = Mat::zeros(ring, n, n);
        for i in 0..n {
            m.set(i, i, Scalar::one(ring));
        }
        m
    }

    /// Diagonal c·I.
    pub fn scaled_identity(ring: Ring, n: usize, c: &Scalar) -> Mat {
        let mut m = Mat::zeros(ring, n, n);
        for i in 0..n {
            m.set(i, i, c.clone());
        }
        m
    }

    pub fn from_rows(ring: Ring, rows: Vec<Vec<Scalar>>) -> Mat {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            for s in row {
                assert_eq!(s.ring(), ring);
                data.push(s);
            }
        }
        Mat {
            ring,
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn from_fn(
        ring: Ring,
        rows: usize,
        cols: usize,
        f: impl Fn(usize, usize) -> Scalar,
    ) -> Mat {
        let mut m = Mat::zeros(ring, rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Entries from integer literals, row-major.
    pub fn from_i64(ring: Ring, rows: usize, cols: usize, entries: &[i64]) -> Mat {
        assert_eq!(entries.len(), rows * cols);
        Mat::from_fn(ring, rows, cols, |i, j| {
            Scalar::from_i64(ring, entries[i * cols + j])
        })
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Scalar) {
        assert_eq!(v.ring(), self.ring);
        self.data[i * self.cols + j] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|s| s.is_zero())
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.ring, self.cols, self.rows, |i, j| {
            self.get(j, i).clone()
        })
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat::from_fn(self.ring, self.rows, self.cols, |i, j| {
            self.get(i, j).add(other.get(i, j))
        })
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat::from_fn(self.ring, self.rows, self.cols, |i, j| {
            self.get(i, j).sub(other.get(i, j))
        })
    }

    pub fn scale(&self, c: &Scalar) -> Mat {
        Mat::from_fn(self.ring, self.rows, self.cols, |i, j| {
            self.get(i, j).mul(c)
        })
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut out = Mat::zeros(self.ring, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let cur = out.get(i, j).add(&a.mul(b));
                    out.set(i, j, cur);
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(v.len(), self.cols, "vector length mismatch");
        let mut out = vec![Scalar::zero(self.ring); self.rows];
        for i in 0..self.rows {
            let mut acc = Scalar::zero(self.ring);
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a.is_zero() || v[j].is_zero() {
                    continue;
                }
                acc = acc.add(&a.mul(&v[j]));
            }
            out[i] = acc;
        }
        out
    }

    pub fn col(&self, j: usize) -> Vec<Scalar> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[Scalar]) {
        assert_eq!(v.len(), self.rows);
        for i in 0..self.rows {
            self.set(i, j, v[i].clone());
        }
    }

    /// Stack side by side.
    pub fn hstack(blocks: &[&Mat]) -> Mat {
        assert!(!blocks.is_empty());
        let ring = blocks[0].ring;
        let rows = blocks[0].rows;
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Mat::zeros(ring, rows, cols);
        let mut off = 0;
        for b in blocks {
            assert_eq!(b.rows, rows, "hstack row mismatch");
            for i in 0..rows {
                for j in 0..b.cols {
                    out.set(i, off + j, b.get(i, j).clone());
                }
            }
            off += b.cols;
        }
        out
    }

    /// Stack on top of each other.
    pub fn vstack(blocks: &[&Mat]) -> Mat {
        assert!(!blocks.is_empty());
        let ring = blocks[0].ring;
        let cols = blocks[0].cols;
        let rows = blocks.iter().map(|b| b.rows).sum();
        let mut out = Mat::zeros(ring, rows, cols);
        let mut off = 0;
        for b in blocks {
            assert_eq!(b.cols, cols, "vstack col mismatch");
            for i in 0..b.rows {
                for j in 0..cols {
                    out.set(off + i, j, b.get(i, j).clone());
                }
            }
            off += b.rows;
        }
        out
    }
}

/// U · M · V = D with U, V invertible over the ring and D diagonal
/// p^{s₁} | p^{s₂} | …, units normalized to 1.
#[derive(Debug, Clone)]
pub struct SmithForm {
    pub u: Mat,
    pub u_inv: Mat,
    pub d: Mat,
    pub v: Mat,
    pub v_inv: Mat,
    pub rank: usize,
}

impl SmithForm {
    /// Valuations s with d_i = p^s. Over 𝔽_p every nonzero divisor is 1,
    /// so all valuations are 0.
    pub fn divisor_valuations(&self) -> Vec<u32> {
        (0..self.rank)
            .map(|i| self.d.get(i, i).valuation().expect("nonzero divisor"))
            .collect()
    }
}

/// Smith normal form over the local ring (total on valid matrices).
pub fn local_smith_form(m: &Mat) -> SmithForm {
    let ring = m.ring();
    let rows = m.rows();
    let cols = m.cols();
    let mut d = m.clone();
    let mut u = Mat::identity(ring, rows);
    let mut u_inv = Mat::identity(ring, rows);
    let mut v = Mat::identity(ring, cols);
    let mut v_inv = Mat::identity(ring, cols);

    let steps = rows.min(cols);
    let mut rank = 0;
    for k in 0..steps {
        // minimal valuation, smallest column then row
        let mut best: Option<(u32, usize, usize)> = None;
        for j in k..cols {
            for i in k..rows {
                if let Some(val) = d.get(i, j).valuation() {
                    let cand = (val, j, i);
                    if best.map_or(true, |b| cand < b) {
                        best = Some(cand);
                    }
                }
            }
        }
        let Some((_, pj, pi)) = best else {
            break; // remaining block is zero
        };
        rank = k + 1;

        if pi != k {
            swap_rows(&mut d, k, pi);
            swap_rows(&mut u, k, pi);
            swap_cols(&mut u_inv, k, pi);
        }
        if pj != k {
            swap_cols(&mut d, k, pj);
            swap_cols(&mut v, k, pj);
            swap_rows(&mut v_inv, k, pj);
        }

        // normalize pivot to p^s
        let pivot = d.get(k, k).clone();
        let unit = pivot.unit_part().expect("nonzero pivot");
        if !unit.is_one() {
            let unit_inv = unit.inv().expect("unit");
            scale_row(&mut d, k, &unit_inv);
            scale_row(&mut u, k, &unit_inv);
            scale_col(&mut u_inv, k, &unit);
        }

        // clear below
        let pivot = d.get(k, k).clone();
        for i in (k + 1)..rows {
            let e = d.get(i, k).clone();
            if e.is_zero() {
                continue;
            }
            let f = e.div_exact(&pivot).expect("pivot has minimal valuation");
            row_axpy(&mut d, i, k, &f.neg());
            row_axpy(&mut u, i, k, &f.neg());
            col_axpy(&mut u_inv, k, i, &f);
        }
        // clear to the right
        for j in (k + 1)..cols {
            let e = d.get(k, j).clone();
            if e.is_zero() {
                continue;
            }
            let f = e.div_exact(&pivot).expect("pivot has minimal valuation");
            col_axpy(&mut d, j, k, &f.neg());
            col_axpy(&mut v, j, k, &f.neg());
            row_axpy(&mut v_inv, k, j, &f);
        }
    }

    SmithForm {
        u,
        u_inv,
        d,
        v,
        v_inv,
        rank,
    }
}

fn swap_rows(m: &mut Mat, a: usize, b: usize) {
    if a == b {
        return;
    }
    for j in 0..m.cols() {
        let x = m.get(a, j).clone();
        let y = m.get(b, j).clone();
        m.set(a, j, y);
        m.set(b, j, x);
    }
}

fn swap_cols(m: &mut Mat, a: usize, b: usize) {
    if a == b {
        return;
    }
    for i in 0..m.rows() {
        let x = m.get(i, a).clone();
        let y = m.get(i, b).clone();
        m.set(i, a, y);
        m.set(i, b, x);
    }
}

fn scale_row(m: &mut Mat, i: usize, c: &Scalar) {
    for j in 0..m.cols() {
        let x = m.get(i, j).mul(c);
        m.set(i, j, x);
    }
}

fn scale_col(m: &mut Mat, j: usize, c: &Scalar) {
    for i in 0..m.rows() {
        let x = m.get(i, j).mul(c);
        m.set(i, j, x);
    }
}

/// row_i += c · row_k
fn row_axpy(m: &mut Mat, i: usize, k: usize, c: &Scalar) {
    for j in 0..m.cols() {
        let add = m.get(k, j).mul(c);
        if add.is_zero() {
            continue;
        }
        let x = m.get(i, j).add(&add);
        m.set(i, j, x);
    }
}

/// col_j += c · col_k
fn col_axpy(m: &mut Mat, j: usize, k: usize, c: &Scalar) {
    for i in 0..m.rows() {
        let add = m.get(i, k).mul(c);
        if add.is_zero() {
            continue;
        }
        let x = m.get(i, j).add(&add);
        m.set(i, j, x);
    }
}

/// Deterministic exact solve M·u = v. `None` means v ∉ im M — a value,
/// not a failure. Free variables are set to zero.
pub fn solve(m: &Mat, v: &[Scalar]) -> Option<Vec<Scalar>> {
    assert_eq!(v.len(), m.rows(), "solve: rhs length mismatch");
    let s = local_smith_form(m);
    solve_with(&s, m.cols(), v)
}

/// Solve against a precomputed Smith form.
pub fn solve_with(s: &SmithForm, cols: usize, v: &[Scalar]) -> Option<Vec<Scalar>> {
    let w = s.u.apply(v);
    let mut t = vec![Scalar::zero(s.d.ring()); cols];
    for i in 0..w.len() {
        if i < s.rank {
            t[i] = w[i].div_exact(s.d.get(i, i))?;
        } else if !w[i].is_zero() {
            return None;
        }
    }
    Some(s.v.apply(&t))
}

/// Columns form a basis of ker M (saturated: a direct summand over ℤ_(p)).
pub fn kernel(m: &Mat) -> Mat {
    let s = local_smith_form(m);
    let ring = m.ring();
    let n = m.cols();
    let k = n - s.rank;
    let mut out = Mat::zeros(ring, n, k);
    for (idx, j) in (s.rank..n).enumerate() {
        for i in 0..n {
            out.set(i, idx, s.v.get(i, j).clone());
        }
    }
    out
}

/// Rank over the fraction field (= number of nonzero Smith divisors).
pub fn rank(m: &Mat) -> usize {
    local_smith_form(m).rank
}

pub fn vec_zero(ring: Ring, n: usize) -> Vec<Scalar> {
    vec![Scalar::zero(ring); n]
}

pub fn vec_is_zero(v: &[Scalar]) -> bool {
    v.iter().all(|s| s.is_zero())
}

pub fn vec_add(a: &[Scalar], b: &[Scalar]) -> Vec<Scalar> {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.add(y)).collect()
}

pub fn vec_sub(a: &[Scalar], b: &[Scalar]) -> Vec<Scalar> {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.sub(y)).collect()
}

pub fn vec_scale(c: &Scalar, a: &[Scalar]) -> Vec<Scalar> {
    a.iter().map(|x| x.mul(c)).collect()
}

pub fn vec_neg(a: &[Scalar]) -> Vec<Scalar> {
    a.iter().map(|x| x.neg()).collect()
}

/// Exact division of every coordinate by p^k; `None` if any fails.
pub fn vec_div_p_power(a: &[Scalar], ring: Ring, k: u32) -> Option<Vec<Scalar>> {
    let pk = Scalar::p_power(ring, k);
    a.iter().map(|x| x.div_exact(&pk)).collect()
}

pub fn vec_reduce_mod_p(a: &[Scalar]) -> Vec<Scalar> {
    a.iter().map(|x| x.reduce_mod_p()).collect()
}

/// Concatenate vectors (block unknowns / block right-hand sides).
pub fn vec_concat(parts: &[&[Scalar]]) -> Vec<Scalar> {
    let mut out = Vec::new();
    for p in parts {
        out.extend_from_slice(p);
    }
    out
}

/// Check an error-reporting invariant: M·u = v exactly.
pub fn check_solution(m: &Mat, u: &[Scalar], v: &[Scalar]) -> Result<()> {
    let got = m.apply(u);
    if got.iter().zip(v.iter()).all(|(a, b)| a.sub(b).is_zero()) {
        Ok(())
    } else {
        Err(Error::SolveFailed("solution fails exact recheck".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn local3() -> Ring {
        Ring::local(3).unwrap()
    }

    #[test]
    fn smith_identity() {
        let r = local3();
        let m = Mat::identity(r, 2);
        let s = local_smith_form(&m);
        assert_eq!(s.d, Mat::identity(r, 2));
        assert_eq!(s.rank, 2);
    }

    #[test]
    fn smith_diagonal_valuations() {
        let r = local3();
        let m = Mat::from_i64(r, 2, 2, &[1, 0, 0, 9]);
        let s = local_smith_form(&m);
        assert_eq!(s.d.get(0, 0).render(), "1");
        assert_eq!(s.d.get(1, 1).render(), "9");
        assert_eq!(s.divisor_valuations(), vec![0, 2]);
    }

    fn random_mat(rng: &mut ChaCha8Rng, ring: Ring, rows: usize, cols: usize) -> Mat {
        let entries: Vec<i64> = (0..rows * cols).map(|_| rng.gen_range(-12..=12)).collect();
        Mat::from_i64(ring, rows, cols, &entries)
    }

    #[test]
    fn smith_seeded_product_identity_and_chain() {
        let r = local3();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..8 {
            let m = random_mat(&mut rng, r, 4, 5);
            let s = local_smith_form(&m);
            // U·M·V = D exactly
            assert_eq!(s.u.mul(&m).mul(&s.v), s.d);
            // inverses really invert
            assert_eq!(s.u.mul(&s.u_inv), Mat::identity(r, 4));
            assert_eq!(s.v_inv.mul(&s.v), Mat::identity(r, 5));
            // divisibility chain and normalized units
            let vals = s.divisor_valuations();
            for w in vals.windows(2) {
                assert!(w[0] <= w[1]);
            }
            for i in 0..s.rank {
                assert!(s.d.get(i, i).unit_part().unwrap().is_one());
            }
            // off-diagonal zero
            for i in 0..4 {
                for j in 0..5 {
                    if i != j {
                        assert!(s.d.get(i, j).is_zero());
                    }
                }
            }
        }
    }

    #[test]
    fn smith_over_fp() {
        let r = Ring::fp(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = random_mat(&mut rng, r, 3, 6);
        let s = local_smith_form(&m);
        assert_eq!(s.u.mul(&m).mul(&s.v), s.d);
        for i in 0..s.rank {
            assert!(s.d.get(i, i).is_one());
        }
    }

    #[test]
    fn solve_zero_map() {
        let r = local3();
        let m = Mat::zeros(r, 1, 1);
        let u = solve(&m, &[Scalar::zero(r)]).unwrap();
        assert!(vec_is_zero(&u));
    }

    #[test]
    fn solve_valuation_obstruction() {
        let r = local3();
        let m = Mat::from_i64(r, 1, 1, &[3]);
        assert!(solve(&m, &[Scalar::one(r)]).is_none());
        assert!(solve(&m, &[Scalar::from_i64(r, 9)]).is_some());
    }

    #[test]
    fn solve_seeded_consistent_systems() {
        let r = local3();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..10 {
            let m = random_mat(&mut rng, r, 4, 6);
            let x: Vec<Scalar> = (0..6)
                .map(|_| Scalar::from_i64(r, rng.gen_range(-9..=9)))
                .collect();
            let v = m.apply(&x);
            let u = solve(&m, &v).expect("consistent");
            check_solution(&m, &u, &v).unwrap();
        }
    }

    #[test]
    fn solve_is_deterministic() {
        let r = local3();
        let m = Mat::from_i64(r, 2, 4, &[1, 2, 3, 4, 2, 4, 6, 8]);
        let v = vec![Scalar::from_i64(r, 5), Scalar::from_i64(r, 10)];
        let a = solve(&m, &v).unwrap();
        let b = solve(&m, &v).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn kernel_is_saturated() {
        let r = local3();
        // rows: x + 3y = 0 has saturated kernel (3, -1)·? -> (x,y) = t(-3,1): primitive
        let m = Mat::from_i64(r, 1, 2, &[1, 3]);
        let k = kernel(&m);
        assert_eq!(k.cols(), 1);
        assert!(m.mul(&k).is_zero());
        // basis vector must be primitive (some unit coordinate)
        assert!((0..2).any(|i| k.get(i, 0).is_unit()));
    }

    #[test]
    fn rank_counts_nonzero_divisors() {
        let r = local3();
        let m = Mat::from_i64(r, 2, 3, &[3, 0, 0, 0, 0, 0]);
        assert_eq!(rank(&m), 1);
    }
}

//! Graded modules, degreewise maps, chain complexes, and per-degree homology
//! with torsion decomposition over ℤ_(p) (or plain ranks over 𝔽_p).

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::matrix::{self, local_smith_form, Mat};
use crate::scalar::{Ring, Scalar};

/// Finite-type graded module: a rank for every degree up to the cap.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedModule {
    cap: usize,
    ranks: BTreeMap<usize, usize>,
    labels: BTreeMap<usize, Vec<String>>,
}

impl GradedModule {
    pub fn new(cap: usize, ranks: BTreeMap<usize, usize>) -> GradedModule {
        let ranks: BTreeMap<usize, usize> = ranks
            .into_iter()
            .filter(|&(d, r)| d <= cap && r > 0)
            .collect();
        GradedModule {
            cap,
            ranks,
            labels: BTreeMap::new(),
        }
    }

    pub fn with_labels(mut self, degree: usize, labels: Vec<String>) -> GradedModule {
        assert_eq!(labels.len(), self.rank(degree));
        self.labels.insert(degree, labels);
        self
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn rank(&self, degree: usize) -> usize {
        self.ranks.get(&degree).copied().unwrap_or(0)
    }

    pub fn label(&self, degree: usize, i: usize) -> String {
        self.labels
            .get(&degree)
            .map(|l| l[i].clone())
            .unwrap_or_else(|| format!("e{}_{}", degree, i))
    }

    pub fn check_degree(&self, degree: usize) -> Result<()> {
        if degree > self.cap {
            Err(Error::DegreeOutOfCap {
                degree,
                cap: self.cap,
            })
        } else {
            Ok(())
        }
    }
}

/// Degreewise map of graded modules with a homogeneous degree shift.
#[derive(Debug, Clone)]
pub struct GradedMap {
    ring: Ring,
    shift: i64,
    matrices: BTreeMap<usize, Mat>,
}

impl GradedMap {
    pub fn new(ring: Ring, shift: i64) -> GradedMap {
        GradedMap {
            ring,
            shift,
            matrices: BTreeMap::new(),
        }
    }

    pub fn shift(&self) -> i64 {
        self.shift
    }

    pub fn insert(&mut self, degree: usize, m: Mat) {
        assert_eq!(m.ring(), self.ring);
        self.matrices.insert(degree, m);
    }

    /// Matrix at a degree; absent degrees act as the zero map of the given
    /// shape.
    pub fn at(&self, degree: usize, source_rank: usize, target_rank: usize) -> Mat {
        match self.matrices.get(&degree) {
            Some(m) => {
                assert_eq!(m.cols(), source_rank, "graded map source rank");
                assert_eq!(m.rows(), target_rank, "graded map target rank");
                m.clone()
            }
            None => Mat::zeros(self.ring, target_rank, source_rank),
        }
    }

    /// Composite self ∘ other; shifts add.
    pub fn compose(&self, other: &GradedMap, source: &GradedModule) -> GradedMap {
        let mut out = GradedMap::new(self.ring, self.shift + other.shift);
        for (&n, m_other) in &other.matrices {
            let mid = n as i64 + other.shift;
            if mid < 0 {
                continue;
            }
            let mid_rank = m_other.rows();
            let tgt = mid + self.shift;
            if tgt < 0 {
                continue;
            }
            let m_self = self.at(mid as usize, mid_rank, {
                // infer target rank from stored matrix if any, else zero rows
                self.matrices
                    .get(&(mid as usize))
                    .map(|m| m.rows())
                    .unwrap_or(0)
            });
            let _ = source;
            out.insert(n, m_self.mul(m_other));
        }
        out
    }
}

/// Chain complex: module + differential of shift −1 that squares to zero.
#[derive(Debug, Clone)]
pub struct ChainComplex {
    ring: Ring,
    module: GradedModule,
    /// ∂_n : C_n → C_{n−1}, keyed by n.
    diff: BTreeMap<usize, Mat>,
}

impl ChainComplex {
    /// Builds and checks ∂² = 0 exactly in every stored degree.
    pub fn new(
        ring: Ring,
        module: GradedModule,
        diff: BTreeMap<usize, Mat>,
    ) -> Result<ChainComplex> {
        for (&n, m) in &diff {
            if m.cols() != module.rank(n)
                || m.rows() != module.rank(n.wrapping_sub(1).min(n.saturating_sub(1)))
            {
                // recompute cleanly below for n = 0
            }
            let target = if n == 0 { 0 } else { module.rank(n - 1) };
            if m.cols() != module.rank(n) || m.rows() != target {
                return Err(Error::DimensionMismatch(format!(
                    "differential at degree {}: {}x{} vs ranks {} -> {}",
                    n,
                    m.rows(),
                    m.cols(),
                    module.rank(n),
                    target
                )));
            }
        }
        let cx = ChainComplex { ring, module, diff };
        for (&n, _) in &cx.diff {
            if n >= 1 && cx.module.rank(n) > 0 {
                let d_n = cx.boundary(n);
                let d_prev = cx.boundary(n - 1);
                if !d_prev.mul(&d_n).is_zero() {
                    return Err(Error::Validation(format!(
                        "differential does not square to zero at degree {}",
                        n
                    )));
                }
            }
        }
        Ok(cx)
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn module(&self) -> &GradedModule {
        &self.module
    }

    pub fn rank(&self, n: usize) -> usize {
        self.module.rank(n)
    }

    pub fn cap(&self) -> usize {
        self.module.cap()
    }

    /// ∂_n as a matrix C_n → C_{n−1} (zero map if unset; degree 0 maps to 0).
    pub fn boundary(&self, n: usize) -> Mat {
        let target = if n == 0 { 0 } else { self.module.rank(n - 1) };
        match self.diff.get(&n) {
            Some(m) => m.clone(),
            None => Mat::zeros(self.ring, target, self.module.rank(n)),
        }
    }

    pub fn is_cycle(&self, n: usize, chain: &[Scalar]) -> bool {
        matrix::vec_is_zero(&self.boundary(n).apply(chain))
    }

    /// Homology at degree n: free rank, torsion orders p^s, and cycle
    /// representatives whose classes form a basis.
    pub fn homology_at(&self, n: usize) -> Result<HomologySummary> {
        if n + 1 > self.module.cap() {
            return Err(Error::DegreeOutOfCap {
                degree: n + 1,
                cap: self.module.cap(),
            });
        }
        let kernel = matrix::kernel(&self.boundary(n));
        let kappa = kernel.cols();

        // image generators of ∂_{n+1}: d_i · u_i with u_i = U⁻¹ e_i
        let s_up = local_smith_form(&self.boundary(n + 1));
        let mut img_cols: Vec<(Scalar, Vec<Scalar>)> = Vec::new();
        for i in 0..s_up.rank {
            let d_i = s_up.d.get(i, i).clone();
            let u_i = s_up.u_inv.col(i);
            img_cols.push((d_i, u_i));
        }

        // image in kernel coordinates
        let smith_kernel = local_smith_form(&kernel);
        let mut b = Mat::zeros(self.ring, kappa, img_cols.len());
        for (j, (d_i, u_i)) in img_cols.iter().enumerate() {
            let x = matrix::solve_with(&smith_kernel, kappa, u_i)
                .ok_or_else(|| Error::Validation("image generator is not a cycle".into()))?;
            b.set_col(j, &matrix::vec_scale(d_i, &x));
        }

        let s_b = local_smith_form(&b);
        let mut torsion: Vec<(u32, Vec<Scalar>)> = Vec::new();
        let mut free_reps: Vec<Vec<Scalar>> = Vec::new();
        for i in 0..kappa {
            let class_gen = kernel.apply(&s_b.u_inv.col(i));
            if i < s_b.rank {
                let s = s_b.d.get(i, i).valuation().expect("nonzero divisor");
                if s > 0 {
                    torsion.push((s, class_gen));
                }
            } else {
                free_reps.push(class_gen);
            }
        }
        torsion.sort_by_key(|(s, _)| *s);

        Ok(HomologySummary {
            degree: n,
            ring: self.ring,
            free_rank: free_reps.len(),
            torsion,
            free_reps,
            cycle_rank: kappa,
        })
    }

    /// Express a cycle's homology class: free coordinates (exact scalars) and
    /// torsion coordinates together with their orders p^s.
    pub fn class_coordinates(&self, n: usize, chain: &[Scalar]) -> Result<ClassCoordinates> {
        if !self.is_cycle(n, chain) {
            return Err(Error::NotACycle {
                degree: n,
                detail: "class_coordinates needs a cycle".into(),
            });
        }
        let summary = self.homology_at(n)?;
        // solve [free_reps | torsion_reps | boundary] x = chain
        let ring = self.ring;
        let dim = self.rank(n);
        let mut cols: Vec<Vec<Scalar>> = Vec::new();
        for r in &summary.free_reps {
            cols.push(r.clone());
        }
        for (_, r) in &summary.torsion {
            cols.push(r.clone());
        }
        let bnd = self.boundary(n + 1);
        let mut m = Mat::zeros(ring, dim, cols.len() + bnd.cols());
        for (j, c) in cols.iter().enumerate() {
            m.set_col(j, c);
        }
        for j in 0..bnd.cols() {
            let mut col = Vec::with_capacity(dim);
            for i in 0..dim {
                col.push(bnd.get(i, j).clone());
            }
            for (i, val) in col.into_iter().enumerate() {
                m.set(i, cols.len() + j, val);
            }
        }
        let x = matrix::solve(&m, chain)
            .ok_or_else(|| Error::SolveFailed("cycle not expressible in class basis".into()))?;
        let free: Vec<Scalar> = x[..summary.free_rank].to_vec();
        let torsion: Vec<(Scalar, u32)> = summary
            .torsion
            .iter()
            .enumerate()
            .map(|(i, (s, _))| (x[summary.free_rank + i].clone(), *s))
            .collect();
        Ok(ClassCoordinates { free, torsion })
    }
}

/// Free + torsion data of one homology degree, with representatives.
#[derive(Debug, Clone)]
pub struct HomologySummary {
    pub degree: usize,
    pub ring: Ring,
    pub free_rank: usize,
    /// (exponent s, representative cycle) for each ℤ/p^s summand, sorted by s.
    pub torsion: Vec<(u32, Vec<Scalar>)>,
    pub free_reps: Vec<Vec<Scalar>>,
    /// dim of the cycle space (kernel of ∂_n).
    pub cycle_rank: usize,
}

impl HomologySummary {
    pub fn torsion_orders(&self) -> Vec<u32> {
        self.torsion.iter().map(|(s, _)| *s).collect()
    }

    pub fn max_torsion_exponent(&self) -> u32 {
        self.torsion.iter().map(|(s, _)| *s).max().unwrap_or(0)
    }

    pub fn total_dim_mod_p_contribution(&self) -> usize {
        self.free_rank + self.torsion.len()
    }

    pub fn is_zero(&self) -> bool {
        self.free_rank == 0 && self.torsion.is_empty()
    }
}

/// Coordinates of a homology class: exact free coordinates plus torsion
/// coordinates read modulo their orders.
#[derive(Debug, Clone)]
pub struct ClassCoordinates {
    pub free: Vec<Scalar>,
    pub torsion: Vec<(Scalar, u32)>,
}

impl ClassCoordinates {
    pub fn is_zero(&self) -> bool {
        self.free.iter().all(|c| c.is_zero())
            && self
                .torsion
                .iter()
                .all(|(c, s)| c.is_zero() || c.valuation().map_or(true, |v| v >= *s))
    }

    /// Order of the class: Some(k) when p^k kills it, None when the free part
    /// is nonzero (infinite order).
    pub fn order_exponent(&self) -> Option<u32> {
        if self.free.iter().any(|c| !c.is_zero()) {
            return None;
        }
        let mut k = 0u32;
        for (c, s) in &self.torsion {
            if c.is_zero() {
                continue;
            }
            let v = c.valuation().unwrap_or(*s).min(*s);
            k = k.max(s.saturating_sub(v));
        }
        Some(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn local3() -> Ring {
        Ring::local(3).unwrap()
    }

    fn two_term(ring: Ring, mult: i64) -> ChainComplex {
        // C_1 = R --mult--> C_0 = R
        let mut ranks = BTreeMap::new();
        ranks.insert(0, 1);
        ranks.insert(1, 1);
        let module = GradedModule::new(4, ranks);
        let mut diff = BTreeMap::new();
        diff.insert(1, Mat::from_i64(ring, 1, 1, &[mult]));
        ChainComplex::new(ring, module, diff).unwrap()
    }

    #[test]
    fn zero_differential_free_homology() {
        let r = local3();
        let mut ranks = BTreeMap::new();
        ranks.insert(2, 3);
        let module = GradedModule::new(5, ranks);
        let cx = ChainComplex::new(r, module, BTreeMap::new()).unwrap();
        let h = cx.homology_at(2).unwrap();
        assert_eq!(h.free_rank, 3);
        assert!(h.torsion.is_empty());
    }

    #[test]
    fn multiplication_by_p_r_gives_torsion() {
        let r = local3();
        let cx = two_term(r, 9);
        let h0 = cx.homology_at(0).unwrap();
        assert_eq!(h0.free_rank, 0);
        assert_eq!(h0.torsion_orders(), vec![2]);
        let h1 = cx.homology_at(1).unwrap();
        assert!(h1.is_zero());
    }

    #[test]
    fn representatives_are_cycles_and_generate() {
        let r = local3();
        let cx = two_term(r, 9);
        let h0 = cx.homology_at(0).unwrap();
        let (s, rep) = &h0.torsion[0];
        assert_eq!(*s, 2);
        assert!(cx.is_cycle(0, rep));
        // class of rep is nonzero, class of 9·rep is zero
        let c = cx.class_coordinates(0, rep).unwrap();
        assert!(!c.is_zero());
        let nine_rep = matrix::vec_scale(&Scalar::from_i64(r, 9), rep);
        assert!(cx.class_coordinates(0, &nine_rep).unwrap().is_zero());
    }

    #[test]
    fn degree_cap_is_hard() {
        let r = local3();
        let cx = two_term(r, 9);
        assert!(matches!(
            cx.homology_at(4),
            Err(Error::DegreeOutOfCap { .. })
        ));
    }

    #[test]
    fn d_squared_checked() {
        let r = local3();
        let mut ranks = BTreeMap::new();
        ranks.insert(0, 1);
        ranks.insert(1, 1);
        ranks.insert(2, 1);
        let module = GradedModule::new(4, ranks);
        let mut diff = BTreeMap::new();
        diff.insert(1, Mat::from_i64(r, 1, 1, &[1]));
        diff.insert(2, Mat::from_i64(r, 1, 1, &[1]));
        assert!(ChainComplex::new(r, module, diff).is_err());
    }

    #[test]
    fn graded_map_composition_adds_shifts() {
        let r = local3();
        let mut ranks = BTreeMap::new();
        ranks.insert(1, 2);
        ranks.insert(2, 2);
        ranks.insert(3, 2);
        let module = GradedModule::new(4, ranks);
        let mut f = GradedMap::new(r, -1);
        f.insert(2, Mat::from_i64(r, 2, 2, &[1, 0, 0, 2]));
        f.insert(3, Mat::from_i64(r, 2, 2, &[0, 1, 1, 0]));
        let mut g = GradedMap::new(r, -1);
        g.insert(2, Mat::from_i64(r, 2, 2, &[1, 1, 0, 1]));
        let gf = g.compose(&f, &module);
        assert_eq!(gf.shift(), -2);
        let expected =
            Mat::from_i64(r, 2, 2, &[1, 1, 0, 1]).mul(&Mat::from_i64(r, 2, 2, &[0, 1, 1, 0]));
        assert_eq!(gf.at(3, 2, 2), expected);
    }

    #[test]
    fn class_order_exponent() {
        let r = local3();
        let cx = two_term(r, 27);
        let h = cx.homology_at(0).unwrap();
        let rep = h.torsion[0].1.clone();
        let tripled = matrix::vec_scale(&Scalar::from_i64(r, 3), &rep);
        let c = cx.class_coordinates(0, &tripled).unwrap();
        assert_eq!(c.order_exponent(), Some(2));
    }
}

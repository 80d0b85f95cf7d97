//! The mod-p page analysis of a finite-type chain complex over ℤ_(p): pages
//! E^r with their degree −1 operators β^r, class tracking for integral
//! chains, and the witness-producing representative lemmas.
//!
//! Pages are derived from the integral torsion ladder: a ℤ/p^s summand of
//! H_n contributes a β^s-paired couple (source chain in degree n+1, target
//! cycle in degree n) surviving to page s; free summands survive forever.
//! Everything else is exact linear algebra:
//!   · [x]_r is defined          ⟺  ∃c: ∂(x + pc) ∈ p^r C,
//!   · [x]_r = 0                 ⟺  ∃z, y: p^{r−1} x = ∂z + p^r y,
//! and every witness returned here satisfies its defining identity under
//! exact re-evaluation.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::graded::{ChainComplex, HomologySummary};
use crate::matrix::{self, Mat};
use crate::scalar::{Ring, Scalar};

/// One ℤ/p^s summand: a target cycle in degree n and an integral source in
/// degree n+1 with ∂source = p^s · target, exactly.
#[derive(Debug, Clone)]
pub struct LadderRung {
    pub exponent: u32,
    pub target: Vec<Scalar>,
    pub source: Vec<Scalar>,
}

/// Ladder data for one degree.
#[derive(Debug, Clone)]
pub struct DegreeLadder {
    pub degree: usize,
    pub free_reps: Vec<Vec<Scalar>>,
    pub rungs: Vec<LadderRung>,
}

/// Matched torsion pairs and free representatives per degree.
#[derive(Debug, Clone)]
pub struct TorsionLadder {
    pub degrees: BTreeMap<usize, Arc<DegreeLadder>>,
}

impl TorsionLadder {
    pub fn max_exponent(&self) -> u32 {
        self.degrees
            .values()
            .flat_map(|l| l.rungs.iter().map(|r| r.exponent))
            .max()
            .unwrap_or(0)
    }
}

/// Where a page basis vector comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HandleKind {
    Free,
    TorsionTarget { exponent: u32 },
    TorsionSource { exponent: u32 },
}

/// An integral chain representing a class on one page.
#[derive(Debug, Clone)]
pub struct ClassHandle {
    pub degree: usize,
    pub page: u32,
    pub representative: Vec<Scalar>,
    pub zero: bool,
}

#[derive(Debug, Clone)]
pub struct PageBasisVector {
    pub kind: HandleKind,
    pub handle: ClassHandle,
    /// Index of the originating ladder rung (targets and sources).
    pub rung: Option<usize>,
}

/// One page: per-degree 𝔽_p bases of class handles and β^r matrices.
#[derive(Debug)]
pub struct BocksteinPage {
    pub r: u32,
    pub basis: BTreeMap<usize, Vec<PageBasisVector>>,
    /// β^r at degree n: matrix page_n → page_{n−1} over 𝔽_p.
    pub beta: BTreeMap<usize, Mat>,
}

impl BocksteinPage {
    pub fn dim(&self, n: usize) -> usize {
        self.basis.get(&n).map_or(0, |b| b.len())
    }

    pub fn beta_rank(&self, n: usize) -> usize {
        self.beta.get(&n).map_or(0, matrix::rank)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeathReason {
    /// β^{page−1} of the class is nonzero, so it is not a cycle on the
    /// previous page.
    NonzeroBockstein,
    /// The class is hit by an earlier operator and becomes zero entering
    /// this page.
    HitByEarlierBockstein,
}

#[derive(Debug, Clone)]
pub enum SurvivalOutcome {
    Survives(ClassHandle),
    Dead { page: u32, reason: DeathReason },
}

/// Page engine for one chain complex over ℤ_(p).
pub struct Bockstein {
    complex: Arc<ChainComplex>,
    p: u32,
    homology: RwLock<BTreeMap<usize, Arc<HomologySummary>>>,
    ladders: RwLock<BTreeMap<usize, Arc<DegreeLadder>>>,
}

impl Bockstein {
    pub fn new(complex: Arc<ChainComplex>) -> Result<Bockstein> {
        let p = match complex.ring() {
            Ring::Local(p) => p,
            Ring::Fp(_) => {
                return Err(Error::UnsupportedRing(
                    "page analysis needs integral coefficients Z_(p)".into(),
                ))
            }
        };
        Ok(Bockstein {
            complex,
            p,
            homology: RwLock::new(BTreeMap::new()),
            ladders: RwLock::new(BTreeMap::new()),
        })
    }

    pub fn complex(&self) -> &Arc<ChainComplex> {
        &self.complex
    }

    pub fn prime(&self) -> u32 {
        self.p
    }

    fn ring(&self) -> Ring {
        self.complex.ring()
    }

    pub fn homology_at(&self, n: usize) -> Result<Arc<HomologySummary>> {
        if let Some(h) = self.homology.read().unwrap().get(&n) {
            return Ok(Arc::clone(h));
        }
        let h = Arc::new(self.complex.homology_at(n)?);
        let mut w = self.homology.write().unwrap();
        let entry = w.entry(n).or_insert_with(|| Arc::clone(&h));
        Ok(Arc::clone(entry))
    }

    /// The torsion ladder in one degree, with capping chains solved exactly.
    pub fn ladder_at(&self, n: usize) -> Result<Arc<DegreeLadder>> {
        if let Some(l) = self.ladders.read().unwrap().get(&n) {
            return Ok(Arc::clone(l));
        }
        let h = self.homology_at(n)?;
        let bnd = self.complex.boundary(n + 1);
        let mut rungs = Vec::new();
        for (s, target) in &h.torsion {
            let rhs = matrix::vec_scale(&Scalar::p_power(self.ring(), *s), target);
            let source = matrix::solve(&bnd, &rhs).ok_or_else(|| {
                Error::TheoryViolation("torsion representative admits no capping chain".into())
            })?;
            rungs.push(LadderRung {
                exponent: *s,
                target: target.clone(),
                source,
            });
        }
        let ladder = Arc::new(DegreeLadder {
            degree: n,
            free_reps: h.free_reps.clone(),
            rungs,
        });
        let mut w = self.ladders.write().unwrap();
        let entry = w.entry(n).or_insert_with(|| Arc::clone(&ladder));
        Ok(Arc::clone(entry))
    }

    /// Default page bound: the maximal torsion exponent in the window, + 1.
    pub fn default_r_max(&self, degrees: RangeInclusive<usize>) -> Result<u32> {
        let mut m = 0;
        for n in degrees {
            m = m.max(self.homology_at(n)?.max_torsion_exponent());
        }
        Ok(m + 1)
    }

    /// Pages E^1 .. E^{r_max} on a degree window, plus the ladder they are
    /// derived from.
    pub fn pages(
        &self,
        degrees: RangeInclusive<usize>,
        r_max: Option<u32>,
    ) -> Result<(Vec<BocksteinPage>, TorsionLadder)> {
        let (lo, hi) = (*degrees.start(), *degrees.end());
        if hi + 1 > self.complex.cap() {
            return Err(Error::DegreeOutOfCap {
                degree: hi + 1,
                cap: self.complex.cap(),
            });
        }
        let r_max = match r_max {
            Some(r) => r,
            None => self.default_r_max(lo..=hi)?,
        };
        let mut ladder_map = BTreeMap::new();
        let first = lo.saturating_sub(1);
        for n in first..=hi {
            ladder_map.insert(n, self.ladder_at(n)?);
        }
        let ladder = TorsionLadder {
            degrees: ladder_map,
        };
        let fp = Ring::Fp(self.p);
        let mut pages = Vec::new();
        for r in 1..=r_max {
            let mut basis: BTreeMap<usize, Vec<PageBasisVector>> = BTreeMap::new();
            for n in lo..=hi {
                let mut vecs = Vec::new();
                let here = &ladder.degrees[&n];
                for rep in &here.free_reps {
                    vecs.push(PageBasisVector {
                        kind: HandleKind::Free,
                        handle: ClassHandle {
                            degree: n,
                            page: r,
                            representative: rep.clone(),
                            zero: false,
                        },
                        rung: None,
                    });
                }
                for (k, rung) in here.rungs.iter().enumerate() {
                    if rung.exponent >= r {
                        vecs.push(PageBasisVector {
                            kind: HandleKind::TorsionTarget {
                                exponent: rung.exponent,
                            },
                            handle: ClassHandle {
                                degree: n,
                                page: r,
                                representative: rung.target.clone(),
                                zero: false,
                            },
                            rung: Some(k),
                        });
                    }
                }
                if n > 0 {
                    if let Some(below) = ladder.degrees.get(&(n - 1)) {
                        for (k, rung) in below.rungs.iter().enumerate() {
                            if rung.exponent >= r {
                                vecs.push(PageBasisVector {
                                    kind: HandleKind::TorsionSource {
                                        exponent: rung.exponent,
                                    },
                                    handle: ClassHandle {
                                        degree: n,
                                        page: r,
                                        representative: rung.source.clone(),
                                        zero: false,
                                    },
                                    rung: Some(k),
                                });
                            }
                        }
                    }
                }
                basis.insert(n, vecs);
            }
            // β^r: a source of exponent exactly r maps to its partner target
            let mut beta = BTreeMap::new();
            for n in lo..=hi {
                if n == 0 || n - 1 < lo {
                    continue;
                }
                let rows = basis[&(n - 1)].len();
                let cols = basis[&n].len();
                let mut m = Mat::zeros(fp, rows, cols);
                for (j, v) in basis[&n].iter().enumerate() {
                    if let HandleKind::TorsionSource { exponent } = v.kind {
                        if exponent == r {
                            let row = basis[&(n - 1)]
                                .iter()
                                .position(|w| {
                                    matches!(w.kind, HandleKind::TorsionTarget { .. })
                                        && w.rung == v.rung
                                })
                                .expect("partner target present on this page");
                            m.set(row, j, Scalar::one(fp));
                        }
                    }
                }
                beta.insert(n, m);
            }
            pages.push(BocksteinPage { r, basis, beta });
        }
        Ok((pages, ladder))
    }

    pub fn is_mod_p_cycle(&self, n: usize, chain: &[Scalar]) -> bool {
        self.complex
            .boundary(n)
            .apply(chain)
            .iter()
            .all(|c| c.is_zero() || c.valuation().map_or(false, |v| v >= 1))
    }

    fn p_power(&self, k: u32) -> Scalar {
        Scalar::p_power(self.ring(), k)
    }

    /// Witness that [x]_r is defined: (c, w) with ∂(x + pc) = p^r w, exactly.
    pub fn survival_witness(
        &self,
        n: usize,
        x: &[Scalar],
        r: u32,
    ) -> Result<Option<(Vec<Scalar>, Vec<Scalar>)>> {
        let ring = self.ring();
        let d_n = self.complex.boundary(n);
        let dims_prev = d_n.rows();
        let p_dn = d_n.scale(&self.p_power(1));
        let neg_pr = Mat::scaled_identity(ring, dims_prev, &self.p_power(r).neg());
        let m = Mat::hstack(&[&p_dn, &neg_pr]);
        let rhs = matrix::vec_neg(&d_n.apply(x));
        Ok(matrix::solve(&m, &rhs).map(|sol| {
            let c = sol[..x.len()].to_vec();
            let w = sol[x.len()..].to_vec();
            (c, w)
        }))
    }

    /// Witness that [x]_r = 0: (z, y) with p^{r−1} x = ∂z + p^r y, exactly.
    pub fn vanishing_witness(
        &self,
        n: usize,
        x: &[Scalar],
        r: u32,
    ) -> Result<Option<(Vec<Scalar>, Vec<Scalar>)>> {
        let ring = self.ring();
        let d_up = self.complex.boundary(n + 1);
        let pr = Mat::scaled_identity(ring, x.len(), &self.p_power(r));
        let m = Mat::hstack(&[&d_up, &pr]);
        let rhs = matrix::vec_scale(&self.p_power(r - 1), x);
        Ok(matrix::solve(&m, &rhs).map(|sol| {
            let z = sol[..d_up.cols()].to_vec();
            let y = sol[d_up.cols()..].to_vec();
            (z, y)
        }))
    }

    pub fn classes_equal_at(&self, n: usize, a: &[Scalar], b: &[Scalar], r: u32) -> Result<bool> {
        let diff = matrix::vec_sub(a, b);
        Ok(self.vanishing_witness(n, &diff, r)?.is_some())
    }

    /// The value β^r[x]_r as an integral cycle: w from a survival witness.
    pub fn beta_value(&self, n: usize, x: &[Scalar], r: u32) -> Result<Vec<Scalar>> {
        let (_, w) = self.survival_witness(n, x, r)?.ok_or_else(|| {
            Error::HypothesisFails(format!("class does not survive to page {}", r))
        })?;
        Ok(w)
    }

    /// Track an integral chain: the handle at page r, or the page at which
    /// the class dies.
    pub fn survives_to(&self, n: usize, chain: &[Scalar], r: u32) -> Result<SurvivalOutcome> {
        if !self.is_mod_p_cycle(n, chain) {
            return Err(Error::NotAModPCycle { degree: n });
        }
        if self.vanishing_witness(n, chain, 1)?.is_some() {
            return Ok(SurvivalOutcome::Survives(ClassHandle {
                degree: n,
                page: 1,
                representative: chain.to_vec(),
                zero: true,
            }));
        }
        for page in 2..=r {
            if self.survival_witness(n, chain, page)?.is_none() {
                return Ok(SurvivalOutcome::Dead {
                    page,
                    reason: DeathReason::NonzeroBockstein,
                });
            }
            if self.vanishing_witness(n, chain, page)?.is_some() {
                return Ok(SurvivalOutcome::Dead {
                    page,
                    reason: DeathReason::HitByEarlierBockstein,
                });
            }
        }
        Ok(SurvivalOutcome::Survives(ClassHandle {
            degree: n,
            page: r,
            representative: chain.to_vec(),
            zero: false,
        }))
    }

    /// Representative lemma: given β^r[a]_r = [b]_r (checked), produce (c, e)
    /// with d(a + pc) = p^r (b + pe), exactly. Follows the inductive
    /// construction on r, each existence step discharged by a linear solve.
    pub fn bss_witness(
        &self,
        n: usize,
        a: &[Scalar],
        b: &[Scalar],
        r: u32,
    ) -> Result<(Vec<Scalar>, Vec<Scalar>)> {
        if !self.is_mod_p_cycle(n, a) {
            return Err(Error::NotAModPCycle { degree: n });
        }
        // hypothesis: a survives to page r and β^r[a]_r = [b]_r
        let (_, w) = self.survival_witness(n, a, r)?.ok_or_else(|| {
            Error::HypothesisFails(format!("source class does not survive to page {}", r))
        })?;
        if n == 0 || !self.classes_equal_at(n - 1, &w, b, r)? {
            if n == 0 {
                return Err(Error::HypothesisFails(
                    "degree 0 has no operator target".into(),
                ));
            }
            return Err(Error::HypothesisFails(format!(
                "operator value disagrees with the prescribed class at page {}",
                r
            )));
        }
        let (c, e) = self.bss_witness_inner(n, a, b, r)?;
        // exact recheck of the defining identity
        let lhs = self.complex.boundary(n).apply(&matrix::vec_add(
            a,
            &matrix::vec_scale(&self.p_power(1), &c),
        ));
        let rhs = matrix::vec_scale(
            &self.p_power(r),
            &matrix::vec_add(b, &matrix::vec_scale(&self.p_power(1), &e)),
        );
        if !matrix::vec_is_zero(&matrix::vec_sub(&lhs, &rhs)) {
            return Err(Error::TheoryViolation(
                "representative witness fails exact recheck".into(),
            ));
        }
        Ok((c, e))
    }

    fn bss_witness_inner(
        &self,
        n: usize,
        a: &[Scalar],
        b: &[Scalar],
        r: u32,
    ) -> Result<(Vec<Scalar>, Vec<Scalar>)> {
        let ring = self.ring();
        let d_n = self.complex.boundary(n);
        if r == 1 {
            // da = px; solve x − b = −∂c + p e
            let da = d_n.apply(a);
            let x =
                matrix::vec_div_p_power(&da, ring, 1).ok_or(Error::NotAModPCycle { degree: n })?;
            let neg_d = d_n.scale(&Scalar::one(ring).neg());
            let p_id = Mat::scaled_identity(ring, x.len(), &self.p_power(1));
            let m = Mat::hstack(&[&neg_d, &p_id]);
            let rhs = matrix::vec_sub(&x, b);
            let sol = matrix::solve(&m, &rhs).ok_or_else(|| {
                Error::HypothesisFails("page-1 value is not the prescribed class".into())
            })?;
            let c = sol[..a.len()].to_vec();
            let e = sol[a.len()..].to_vec();
            return Ok((c, e));
        }
        // since a survives to page r, its page-(r−1) value is the zero class
        let zero_b = matrix::vec_zero(ring, b.len());
        let (c1, g) = self.bss_witness_inner(n, a, &zero_b, r - 1)?;
        // d(a + p c1) = p^r g  (one extra factor of p beyond page r−1)
        // solve ∂ỹ − p^r e' = p^{r−1}(g − b)
        let neg_pr = Mat::scaled_identity(ring, b.len(), &self.p_power(r).neg());
        let m = Mat::hstack(&[&d_n, &neg_pr]);
        let rhs = matrix::vec_scale(&self.p_power(r - 1), &matrix::vec_sub(&g, b));
        let sol = matrix::solve(&m, &rhs).ok_or_else(|| {
            Error::HypothesisFails(format!(
                "value class does not match the prescribed one at page {}",
                r
            ))
        })?;
        let ytilde = sol[..a.len()].to_vec();
        let eprime = sol[a.len()..].to_vec();
        let c = matrix::vec_sub(&c1, &ytilde);
        let e = matrix::vec_neg(&eprime);
        Ok((c, e))
    }

    /// From [b']_r = [b'']_r (checked), produce (e, f) with
    /// p^{r−1} b' = p^{r−1} b'' + p^r e + df, exactly.
    pub fn class_equal_witness(
        &self,
        n: usize,
        b1: &[Scalar],
        b2: &[Scalar],
        r: u32,
    ) -> Result<(Vec<Scalar>, Vec<Scalar>)> {
        let ring = self.ring();
        let w = matrix::vec_sub(b1, b2);
        let d_up = self.complex.boundary(n + 1);
        let (e, f) = if r == 1 {
            // w = p e + ∂f directly
            let p_id = Mat::scaled_identity(ring, w.len(), &self.p_power(1));
            let m = Mat::hstack(&[&p_id, &d_up]);
            let sol = matrix::solve(&m, &w)
                .ok_or_else(|| Error::HypothesisFails("classes differ at page 1".into()))?;
            (sol[..w.len()].to_vec(), sol[w.len()..].to_vec())
        } else {
            // find α with ∂α = p^{r−1}(w + pε), then delegate down a page
            let neg_pr = Mat::scaled_identity(ring, w.len(), &self.p_power(r).neg());
            let m = Mat::hstack(&[&d_up, &neg_pr]);
            let rhs = matrix::vec_scale(&self.p_power(r - 1), &w);
            let sol = matrix::solve(&m, &rhs)
                .ok_or_else(|| Error::HypothesisFails(format!("classes differ at page {}", r)))?;
            let alpha = sol[..d_up.cols()].to_vec();
            let (c, e0) = self.bss_witness(n + 1, &alpha, &w, r - 1)?;
            let f = matrix::vec_add(&alpha, &matrix::vec_scale(&self.p_power(1), &c));
            (matrix::vec_neg(&e0), f)
        };
        // exact recheck: p^{r−1}(b' − b'') − p^r e − df = 0
        let lhs = matrix::vec_scale(&self.p_power(r - 1), &w);
        let rhs = matrix::vec_add(&matrix::vec_scale(&self.p_power(r), &e), &d_up.apply(&f));
        if !matrix::vec_is_zero(&matrix::vec_sub(&lhs, &rhs)) {
            return Err(Error::TheoryViolation(
                "class-equality witness fails exact recheck".into(),
            ));
        }
        Ok((e, f))
    }

    /// Express a surviving class in a page basis: mod-p coordinates λ with
    /// [x]_r = Σ λ_i [g_i]_r, when solvable.
    pub fn page_class_coords(
        &self,
        n: usize,
        x: &[Scalar],
        r: u32,
        basis_reps: &[Vec<Scalar>],
    ) -> Result<Option<Vec<Scalar>>> {
        let ring = self.ring();
        let d_up = self.complex.boundary(n + 1);
        let mut g = Mat::zeros(ring, x.len(), basis_reps.len());
        for (j, rep) in basis_reps.iter().enumerate() {
            g.set_col(j, rep);
        }
        let g_scaled = g.scale(&self.p_power(r - 1));
        let pr = Mat::scaled_identity(ring, x.len(), &self.p_power(r));
        let m = Mat::hstack(&[&g_scaled, &d_up, &pr]);
        let rhs = matrix::vec_scale(&self.p_power(r - 1), x);
        Ok(matrix::solve(&m, &rhs).map(|sol| {
            sol[..basis_reps.len()]
                .iter()
                .map(|c| c.reduce_mod_p())
                .collect()
        }))
    }

    // ── independent iterated oracle ─────────────────────────────────────

    /// Mod-p basis of {x ∈ C_n : ∂x ∈ p^r C} (as columns over 𝔽_p).
    fn oracle_z_subspace(&self, n: usize, r: u32) -> Result<Mat> {
        let ring = self.ring();
        let d_n = self.complex.boundary(n);
        let pr = Mat::scaled_identity(ring, d_n.rows(), &self.p_power(r));
        let m = Mat::hstack(&[&d_n, &pr]);
        let k = matrix::kernel(&m);
        let dim = self.complex.rank(n);
        let mut cols = Mat::zeros(Ring::Fp(self.p), dim, k.cols());
        for j in 0..k.cols() {
            for i in 0..dim {
                cols.set(i, j, k.get(i, j).reduce_mod_p());
            }
        }
        Ok(cols)
    }

    /// Mod-p basis of {w : ∃z, y, p^{r−1} w = ∂z + p^r y}.
    fn oracle_b_subspace(&self, n: usize, r: u32) -> Result<Mat> {
        let ring = self.ring();
        let dim = self.complex.rank(n);
        let d_up = self.complex.boundary(n + 1);
        let prm1 = Mat::scaled_identity(ring, dim, &self.p_power(r - 1));
        let neg_d = d_up.scale(&Scalar::one(ring).neg());
        let neg_pr = Mat::scaled_identity(ring, dim, &self.p_power(r).neg());
        let m = Mat::hstack(&[&prm1, &neg_d, &neg_pr]);
        let k = matrix::kernel(&m);
        let mut cols = Mat::zeros(Ring::Fp(self.p), dim, k.cols());
        for j in 0..k.cols() {
            for i in 0..dim {
                cols.set(i, j, k.get(i, j).reduce_mod_p());
            }
        }
        Ok(cols)
    }

    /// dim E^r_n computed without the ladder: dim (Z̄+B̄) − dim B̄ over 𝔽_p.
    pub fn iterated_page_dim(&self, n: usize, r: u32) -> Result<usize> {
        let z = self.oracle_z_subspace(n, r)?;
        let b = self.oracle_b_subspace(n, r)?;
        let union = Mat::hstack(&[&z, &b]);
        Ok(matrix::rank(&union) - matrix::rank(&b))
    }

    /// rank β^r at degree n computed without the ladder.
    pub fn iterated_beta_rank(&self, n: usize, r: u32) -> Result<usize> {
        if n == 0 {
            return Ok(0);
        }
        let ring = self.ring();
        // β-values: for kernel columns (x; w) of [∂ | p^r], ∂x/p^r = −w
        let d_n = self.complex.boundary(n);
        let pr = Mat::scaled_identity(ring, d_n.rows(), &self.p_power(r));
        let m = Mat::hstack(&[&d_n, &pr]);
        let k = matrix::kernel(&m);
        let dim_prev = self.complex.rank(n - 1);
        let mut values = Mat::zeros(Ring::Fp(self.p), dim_prev, k.cols());
        for j in 0..k.cols() {
            for i in 0..dim_prev {
                values.set(i, j, k.get(d_n.cols() + i, j).reduce_mod_p().neg());
            }
        }
        // subtract what is already dead on the previous-degree page
        let z_prev = self.oracle_z_subspace(n - 1, r)?;
        let b_prev = self.oracle_b_subspace(n - 1, r)?;
        let dead = fp_intersection(&z_prev, &b_prev);
        let with = Mat::hstack(&[&values, &dead]);
        Ok(matrix::rank(&with) - matrix::rank(&dead))
    }
}

/// Page-level Hopf bookkeeping on a Hopf-algebra input: dimensions of the
/// primitive and indecomposable parts of one page degree and surjectivity of
/// the natural map between them.
#[derive(Debug, Clone)]
pub struct PageHopfCheck {
    pub page: u32,
    pub degree: usize,
    pub page_dim: usize,
    pub primitive_dim: usize,
    pub indecomposable_dim: usize,
    pub p_to_q_surjective: bool,
}

/// Check that a page of a chain Hopf algebra is primitively generated in one
/// degree: the primitive page classes surject onto the indecomposables.
pub fn page_hopf_check(
    a_engine: &Bockstein,
    t2_engine: &Bockstein,
    hah: &crate::hopf::HahPresentation,
    r: u32,
    degree: usize,
) -> Result<PageHopfCheck> {
    let fp = Ring::Fp(a_engine.prime());
    // page basis representatives per degree ≤ degree
    let mut reps: BTreeMap<usize, Vec<Vec<Scalar>>> = BTreeMap::new();
    for n in 1..=degree {
        let mut v = Vec::new();
        let here = a_engine.ladder_at(n)?;
        for rep in &here.free_reps {
            v.push(rep.clone());
        }
        for rung in &here.rungs {
            if rung.exponent >= r {
                v.push(rung.target.clone());
            }
        }
        if n >= 1 {
            if let Ok(below) = a_engine.ladder_at(n - 1) {
                for rung in &below.rungs {
                    if rung.exponent >= r {
                        v.push(rung.source.clone());
                    }
                }
            }
        }
        reps.insert(n, v);
    }
    let page_dim = reps[&degree].len();
    if page_dim == 0 {
        return Ok(PageHopfCheck {
            page: r,
            degree,
            page_dim: 0,
            primitive_dim: 0,
            indecomposable_dim: 0,
            p_to_q_surjective: true,
        });
    }
    // tensor-square page basis at this degree
    let mut t2_reps: Vec<Vec<Scalar>> = Vec::new();
    {
        let here = t2_engine.ladder_at(degree)?;
        for rep in &here.free_reps {
            t2_reps.push(rep.clone());
        }
        for rung in &here.rungs {
            if rung.exponent >= r {
                t2_reps.push(rung.target.clone());
            }
        }
        if degree >= 1 {
            let below = t2_engine.ladder_at(degree - 1)?;
            for rung in &below.rungs {
                if rung.exponent >= r {
                    t2_reps.push(rung.source.clone());
                }
            }
        }
    }
    // primitive page classes: kernel of the induced reduced diagonal
    let mut diag_coords = Mat::zeros(fp, t2_reps.len(), page_dim);
    for (j, rep) in reps[&degree].iter().enumerate() {
        let el = crate::algebra::Element::from_coeffs(hah.algebra(), degree, rep.clone())?;
        let d = hah.reduced_diagonal(&el)?;
        let coords = t2_engine
            .page_class_coords(degree, d.coeffs(), r, &t2_reps)?
            .ok_or_else(|| {
                Error::TheoryViolation("page diagonal not expressible in the page basis".into())
            })?;
        for (i, c) in coords.iter().enumerate() {
            diag_coords.set(i, j, c.clone());
        }
    }
    let p_basis = matrix::kernel(&diag_coords);
    let primitive_dim = p_basis.cols();
    // decomposable span: page coordinates of products of lower reps
    let mut prod_cols: Vec<Vec<Scalar>> = Vec::new();
    for i in 1..degree {
        let j = degree - i;
        if j < 1 {
            continue;
        }
        for ra in reps.get(&i).into_iter().flatten() {
            for rb in reps.get(&j).into_iter().flatten() {
                let ea = crate::algebra::Element::from_coeffs(hah.algebra(), i, ra.clone())?;
                let eb = crate::algebra::Element::from_coeffs(hah.algebra(), j, rb.clone())?;
                let prod = ea.mul(&eb)?;
                if let Some(coords) =
                    a_engine.page_class_coords(degree, prod.coeffs(), r, &reps[&degree])?
                {
                    prod_cols.push(coords);
                }
            }
        }
    }
    let mut products = Mat::zeros(fp, page_dim, prod_cols.len());
    for (j, c) in prod_cols.iter().enumerate() {
        products.set_col(j, c);
    }
    let prod_rank = matrix::rank(&products);
    let indecomposable_dim = page_dim - prod_rank;
    // surjectivity of P → Q: primitives plus products span everything
    let together = Mat::hstack(&[&products, &p_basis]);
    let p_to_q_surjective = matrix::rank(&together) - prod_rank == indecomposable_dim;
    Ok(PageHopfCheck {
        page: r,
        degree,
        page_dim,
        primitive_dim,
        indecomposable_dim,
        p_to_q_surjective,
    })
}

/// Basis of the intersection of two mod-p column spans.
fn fp_intersection(u: &Mat, w: &Mat) -> Mat {
    assert_eq!(u.rows(), w.rows());
    let neg_w = w.scale(&Scalar::one(w.ring()).neg());
    let m = Mat::hstack(&[u, &neg_w]);
    let k = matrix::kernel(&m);
    let mut out = Mat::zeros(u.ring(), u.rows(), k.cols());
    for j in 0..k.cols() {
        let coeffs: Vec<Scalar> = (0..u.cols()).map(|i| k.get(i, j).clone()).collect();
        let v = u.apply(&coeffs);
        out.set_col(j, &v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::graded::GradedModule;
    use std::collections::BTreeMap as Map;

    fn local3() -> Ring {
        Ring::local(3).unwrap()
    }

    fn two_term(mult: i64) -> Arc<ChainComplex> {
        let r = local3();
        let mut ranks = Map::new();
        ranks.insert(0, 1);
        ranks.insert(1, 1);
        let module = GradedModule::new(4, ranks);
        let mut diff = Map::new();
        diff.insert(1, Mat::from_i64(r, 1, 1, &[mult]));
        Arc::new(ChainComplex::new(r, module, diff).unwrap())
    }

    #[test]
    fn zero_differential_pages_stable() {
        let r = local3();
        let mut ranks = Map::new();
        ranks.insert(1, 2);
        ranks.insert(2, 1);
        let module = GradedModule::new(5, ranks);
        let cx = Arc::new(ChainComplex::new(r, module, Map::new()).unwrap());
        let b = Bockstein::new(cx).unwrap();
        let (pages, _) = b.pages(1..=2, Some(3)).unwrap();
        for page in &pages {
            assert_eq!(page.dim(1), 2);
            assert_eq!(page.dim(2), 1);
            for m in page.beta.values() {
                assert!(m.is_zero());
            }
        }
    }

    #[test]
    fn two_term_p_squared_survives_to_page_two() {
        let b = Bockstein::new(two_term(9)).unwrap();
        let (pages, ladder) = b.pages(0..=1, Some(3)).unwrap();
        assert_eq!(ladder.max_exponent(), 2);
        // pages 1 and 2 see both classes, page 3 sees none
        assert_eq!(pages[0].dim(0), 1);
        assert_eq!(pages[0].dim(1), 1);
        assert_eq!(pages[1].dim(0), 1);
        assert_eq!(pages[1].dim(1), 1);
        assert_eq!(pages[2].dim(0), 0);
        assert_eq!(pages[2].dim(1), 0);
        // β² is an isomorphism between them
        assert_eq!(pages[1].beta_rank(1), 1);
        assert_eq!(pages[0].beta_rank(1), 0);
        // oracle agrees page by page
        for page in &pages {
            for n in 0..=1 {
                assert_eq!(
                    page.dim(n),
                    b.iterated_page_dim(n, page.r).unwrap(),
                    "page {} degree {}",
                    page.r,
                    n
                );
            }
            assert_eq!(
                page.beta_rank(1),
                b.iterated_beta_rank(1, page.r).unwrap(),
                "page {}",
                page.r
            );
        }
    }

    #[test]
    fn prescribed_torsion_ladder_dimensions() {
        // H_1 = Z ⊕ Z/3 ⊕ Z/9 via a synthetic complex
        let cx = corpus::synthetic_complex(3, &[(1, 1, &[1, 2])], 4, 99).unwrap();
        let b = Bockstein::new(cx).unwrap();
        let (pages, _) = b.pages(1..=2, Some(4)).unwrap();
        // degree 1: dim E^1 = 1 free + 2 torsion targets = 3, then 2, then 1
        assert_eq!(pages[0].dim(1), 3);
        assert_eq!(pages[1].dim(1), 2);
        assert_eq!(pages[2].dim(1), 1);
        assert_eq!(pages[3].dim(1), 1);
        // degree 2 carries the sources: 2, then 2, then 1... checked via oracle
        for page in &pages {
            for n in 1..=2 {
                assert_eq!(
                    page.dim(n),
                    b.iterated_page_dim(n, page.r).unwrap(),
                    "page {} degree {}",
                    page.r,
                    n
                );
            }
        }
    }

    #[test]
    fn survives_to_classifies() {
        let b = Bockstein::new(two_term(3)).unwrap();
        let r = local3();
        // degree-1 generator a: ∂a = 3b → β¹ ≠ 0, dies entering page 2
        let a = vec![Scalar::one(r)];
        match b.survives_to(1, &a, 3).unwrap() {
            SurvivalOutcome::Dead { page, reason } => {
                assert_eq!(page, 2);
                assert_eq!(reason, DeathReason::NonzeroBockstein);
            }
            other => panic!("expected death, got {:?}", other),
        }
        // degree-0 generator: hit by β¹, zero entering page 2
        let t = vec![Scalar::one(r)];
        match b.survives_to(0, &t, 3).unwrap() {
            SurvivalOutcome::Dead { page, reason } => {
                assert_eq!(page, 2);
                assert_eq!(reason, DeathReason::HitByEarlierBockstein);
            }
            other => panic!("expected death, got {:?}", other),
        }
        // 3·anything is the zero handle at page 1
        let z = vec![Scalar::from_i64(r, 3)];
        match b.survives_to(0, &z, 2).unwrap() {
            SurvivalOutcome::Survives(h) => {
                assert!(h.zero);
                assert_eq!(h.page, 1);
            }
            other => panic!("expected zero handle, got {:?}", other),
        }
    }

    #[test]
    fn free_class_survives_everywhere() {
        let r = local3();
        let mut ranks = Map::new();
        ranks.insert(2, 1);
        let module = GradedModule::new(6, ranks);
        let cx = Arc::new(ChainComplex::new(r, module, Map::new()).unwrap());
        let b = Bockstein::new(cx).unwrap();
        let x = vec![Scalar::one(r)];
        for page in 1..=5 {
            match b.survives_to(2, &x, page).unwrap() {
                SurvivalOutcome::Survives(h) => assert!(!h.zero),
                other => panic!("expected survival, got {:?}", other),
            }
        }
    }

    #[test]
    fn bss_witness_exact_identity() {
        // ladder Z/9: a in degree 1 with ∂a = 9·b
        let b_engine = Bockstein::new(two_term(9)).unwrap();
        let r = local3();
        let a = vec![Scalar::one(r)];
        let b = vec![Scalar::one(r)];
        let (c, e) = b_engine.bss_witness(1, &a, &b, 2).unwrap();
        // identity rechecked inside; also spot-check c = e = 0 shape is allowed
        let d = b_engine.complex().boundary(1);
        let lhs = d.apply(&matrix::vec_add(
            &a,
            &matrix::vec_scale(&Scalar::from_i64(r, 3), &c),
        ));
        let rhs = matrix::vec_scale(
            &Scalar::from_i64(r, 9),
            &matrix::vec_add(&b, &matrix::vec_scale(&Scalar::from_i64(r, 3), &e)),
        );
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn bss_witness_hypothesis_checked() {
        let b_engine = Bockstein::new(two_term(9)).unwrap();
        let r = local3();
        let a = vec![Scalar::one(r)];
        // wrong page: β¹[a]₁ = 0 ≠ [b]₁ with b the generator
        let b = vec![Scalar::one(r)];
        assert!(matches!(
            b_engine.bss_witness(1, &a, &b, 1),
            Err(Error::HypothesisFails(_))
        ));
    }

    #[test]
    fn class_equal_witness_boundary_perturbation() {
        let b_engine = Bockstein::new(two_term(9)).unwrap();
        let r = local3();
        // b' = b'' → zero witnesses acceptable; recheck happens inside
        let b1 = vec![Scalar::from_i64(r, 5)];
        let (e, f) = b_engine.class_equal_witness(0, &b1, &b1, 2).unwrap();
        assert!(matrix::vec_is_zero(&e) && matrix::vec_is_zero(&f));
        // b'' = b' + ∂w
        let d = b_engine.complex().boundary(1);
        let w = vec![Scalar::one(r)];
        let b2 = matrix::vec_add(&b1, &d.apply(&w));
        let _ = b_engine.class_equal_witness(0, &b1, &b2, 2).unwrap();
    }

    #[test]
    fn seeded_witnesses_on_mixed_ladder() {
        use rand::{Rng, SeedableRng};
        let cx = corpus::synthetic_complex(3, &[(1, 0, &[2]), (2, 1, &[])], 5, 7).unwrap();
        let b_engine = Bockstein::new(cx.clone()).unwrap();
        let ladder = b_engine.ladder_at(1).unwrap();
        assert_eq!(ladder.rungs.len(), 1);
        let rung = &ladder.rungs[0];
        assert_eq!(rung.exponent, 2);
        // the capping chain is a legitimate page-2 witness source
        let (c, e) = b_engine
            .bss_witness(2, &rung.source, &rung.target, 2)
            .unwrap();
        let _ = (c, e);
        // randomized perturbation of the source by p·(chain) keeps the class
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let r = local3();
        let dim2 = cx.rank(2);
        let noise: Vec<Scalar> = (0..dim2)
            .map(|_| Scalar::from_i64(r, 3 * rng.gen_range(-2..=2)))
            .collect();
        let a2 = matrix::vec_add(&rung.source, &noise);
        if b_engine.is_mod_p_cycle(2, &a2) {
            let _ = b_engine.bss_witness(2, &a2, &rung.target, 2).unwrap();
        }
    }
}

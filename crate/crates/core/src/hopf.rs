//! Chain Hopf algebras up to homotopy: diagonals stored by their reduced
//! values on generators and extended multiplicatively, primitives and
//! indecomposables, the comparison map from homology-of-primitives to
//! primitives-of-homology, homotopy-defect solving, and degreewise duals.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use crate::algebra::{AlgebraPresentation, Derivation, Element, Flavor, GeneratorSpec, Monomial};
use crate::error::{Error, Result};
use crate::graded::{ChainComplex, ClassCoordinates, GradedModule};
use crate::matrix::{self, Mat};
use crate::scalar::{Ring, Scalar};
use crate::tensor::{TMono, TensorElement, TensorSpace};

/// Which coassociativity-defect formula a defect check uses. The pipeline
/// uses the reduced difference; the full sum is kept for experimentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoassocConvention {
    ReducedDifference,
    FullSum,
}

/// A chain Hopf algebra up to homotopy: algebra presentation, differential,
/// reduced diagonal values per generator, and optional homotopy witnesses.
pub struct HahPresentation {
    algebra: Arc<AlgebraPresentation>,
    t2: Arc<TensorSpace>,
    t3: Arc<TensorSpace>,
    differential: Derivation,
    diagonals: Vec<TensorElement>,
    f_witness: Vec<Option<TensorElement>>,
    g_witness: Vec<Option<TensorElement>>,
    delta_cache: RwLock<BTreeMap<(usize, usize), Arc<TensorElement>>>,
    complex_cache: RwLock<BTreeMap<(usize, usize), Arc<ChainComplex>>>,
}

impl fmt::Debug for HahPresentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HahPresentation")
            .field("algebra", &self.algebra)
            .field("differential", &self.differential)
            .finish()
    }
}

impl HahPresentation {
    /// Builds and validates: ∂² = 0 (via `Derivation`), diagonal degrees and
    /// reducedness, the chain-map property Δ̄∂g = ∂Δ̄g, and homotopy witness
    /// shapes.
    pub fn new(
        algebra: Arc<AlgebraPresentation>,
        differential: Derivation,
        diagonals: Vec<TensorElement>,
        f_witness: Vec<Option<TensorElement>>,
        g_witness: Vec<Option<TensorElement>>,
    ) -> Result<Arc<HahPresentation>> {
        let t2 = TensorSpace::new(&algebra, 2);
        let t3 = TensorSpace::new(&algebra, 3);
        if diagonals.len() != algebra.gen_count()
            || f_witness.len() != algebra.gen_count()
            || g_witness.len() != algebra.gen_count()
        {
            return Err(Error::DimensionMismatch(
                "diagonal/homotopy data must match the generator list".into(),
            ));
        }
        for (i, d) in diagonals.iter().enumerate() {
            let g = &algebra.generators()[i];
            if d.space().arity() != 2 || d.degree() != g.degree {
                return Err(Error::DimensionMismatch(format!(
                    "reduced diagonal of `{}` must live in degree {} of the tensor square",
                    g.name, g.degree
                )));
            }
            if !d.is_reduced() {
                return Err(Error::Validation(format!(
                    "reduced diagonal of `{}` contains unit tensor factors",
                    g.name
                )));
            }
        }
        for (i, w) in f_witness.iter().enumerate() {
            if let Some(w) = w {
                let g = &algebra.generators()[i];
                if w.space().arity() != 3 || w.degree() != g.degree + 1 {
                    return Err(Error::DimensionMismatch(format!(
                        "coassociativity homotopy of `{}` must have tensor-cube degree {}",
                        g.name,
                        g.degree + 1
                    )));
                }
            }
        }
        for (i, w) in g_witness.iter().enumerate() {
            if let Some(w) = w {
                let g = &algebra.generators()[i];
                if w.space().arity() != 2 || w.degree() != g.degree + 1 {
                    return Err(Error::DimensionMismatch(format!(
                        "cocommutativity homotopy of `{}` must have tensor-square degree {}",
                        g.name,
                        g.degree + 1
                    )));
                }
            }
        }
        let hah = Arc::new(HahPresentation {
            algebra,
            t2,
            t3,
            differential,
            diagonals,
            f_witness,
            g_witness,
            delta_cache: RwLock::new(BTreeMap::new()),
            complex_cache: RwLock::new(BTreeMap::new()),
        });
        // the differential must be a coderivation for the declared diagonal
        for (i, g) in hah.algebra.generators().iter().enumerate() {
            let lhs = hah.reduced_diagonal(hah.differential.value(i))?;
            let rhs = hah.diagonals[i].boundary(&hah.differential)?;
            if lhs != rhs {
                return Err(Error::NotACoderivation {
                    generator: g.name.clone(),
                });
            }
        }
        Ok(hah)
    }

    /// Strict primitively-generated structure: zero diagonals and homotopies.
    pub fn primitively_generated(
        algebra: Arc<AlgebraPresentation>,
        differential: Derivation,
    ) -> Result<Arc<HahPresentation>> {
        let t2 = TensorSpace::new(&algebra, 2);
        let diagonals = algebra
            .generators()
            .iter()
            .map(|g| TensorElement::zero(&t2, g.degree))
            .collect::<Result<Vec<_>>>()?;
        let n = algebra.gen_count();
        HahPresentation::new(
            algebra,
            differential,
            diagonals,
            vec![None; n],
            vec![None; n],
        )
    }

    pub fn algebra(&self) -> &Arc<AlgebraPresentation> {
        &self.algebra
    }

    pub fn tensor_square(&self) -> &Arc<TensorSpace> {
        &self.t2
    }

    pub fn tensor_cube(&self) -> &Arc<TensorSpace> {
        &self.t3
    }

    pub fn differential(&self) -> &Derivation {
        &self.differential
    }

    pub fn diagonal_value(&self, gen: usize) -> &TensorElement {
        &self.diagonals[gen]
    }

    pub fn diagonal_values(&self) -> &[TensorElement] {
        &self.diagonals
    }

    pub fn f_witness(&self, gen: usize) -> Option<&TensorElement> {
        self.f_witness[gen].as_ref()
    }

    pub fn g_witness(&self, gen: usize) -> Option<&TensorElement> {
        self.g_witness[gen].as_ref()
    }

    pub fn ring(&self) -> Ring {
        self.algebra.ring()
    }

    pub fn cap(&self) -> usize {
        self.algebra.cap()
    }

    /// Connectivity q: the algebra is trivial in degrees 0 < n < q.
    pub fn connectivity(&self) -> usize {
        self.algebra.connectivity()
    }

    /// All homotopy witnesses absent or zero.
    pub fn is_strict_data(&self) -> bool {
        self.f_witness
            .iter()
            .all(|w| w.as_ref().map_or(true, |x| x.is_zero()))
            && self
                .g_witness
                .iter()
                .all(|w| w.as_ref().map_or(true, |x| x.is_zero()))
    }

    /// Every generator has zero reduced diagonal.
    pub fn is_primitively_presented(&self) -> bool {
        self.diagonals.iter().all(|d| d.is_zero())
    }

    /// Full diagonal of one basis monomial, memoized. Δ(g) = g⊗1 + 1⊗g + Δ̄g
    /// on generators, extended as an algebra morphism.
    fn delta_mono(&self, degree: usize, idx: usize) -> Result<Arc<TensorElement>> {
        if let Some(d) = self.delta_cache.read().unwrap().get(&(degree, idx)) {
            return Ok(Arc::clone(d));
        }
        let mono = self.algebra.monomial_at(degree, idx)?;
        let letters = mono.letters();
        let value = if letters.is_empty() {
            let one = Element::unit(&self.algebra)?;
            TensorElement::pure(&self.t2, &[&one, &one])?
        } else {
            let g = letters[0] as usize;
            let rest = &letters[1..];
            let dg = self.delta_of_generator(g)?;
            if rest.is_empty() {
                dg
            } else {
                let rest_mono = match &mono {
                    Monomial::Word(_) => Monomial::Word(rest.to_vec()),
                    Monomial::Expo(e) => {
                        let mut e2 = e.clone();
                        e2[g] -= 1;
                        Monomial::Expo(e2)
                    }
                };
                let rd = self.algebra.monomial_degree(&rest_mono);
                let ri = self.algebra.index_of(&rest_mono)?;
                let drest = self.delta_mono(rd, ri)?;
                dg.mul(&drest)?
            }
        };
        let value = Arc::new(value);
        let mut w = self.delta_cache.write().unwrap();
        let entry = w.entry((degree, idx)).or_insert_with(|| Arc::clone(&value));
        Ok(Arc::clone(entry))
    }

    fn delta_of_generator(&self, g: usize) -> Result<TensorElement> {
        let el = Element::generator(&self.algebra, g)?;
        let one = Element::unit(&self.algebra)?;
        let mut d = TensorElement::pure(&self.t2, &[&el, &one])?;
        d = d.add(&TensorElement::pure(&self.t2, &[&one, &el])?)?;
        d.add(&self.diagonals[g])
    }

    /// Full diagonal Δa (algebra-morphism extension).
    pub fn full_diagonal(&self, a: &Element) -> Result<TensorElement> {
        self.algebra.check_degree(a.degree())?;
        let mut out = TensorElement::zero(&self.t2, a.degree())?;
        for (i, c) in a.support() {
            let d = self.delta_mono(a.degree(), i)?;
            out = out.add(&d.scale(&c))?;
        }
        Ok(out)
    }

    /// Reduced diagonal Δ̄a = Δa − a⊗1 − 1⊗a (zero on the unit by counit).
    pub fn reduced_diagonal(&self, a: &Element) -> Result<TensorElement> {
        if a.degree() == 0 {
            return TensorElement::zero(&self.t2, 0);
        }
        let full = self.full_diagonal(a)?;
        let one = Element::unit(&self.algebra)?;
        let a_right = TensorElement::pure(&self.t2, &[a, &one])?;
        let a_left = TensorElement::pure(&self.t2, &[&one, a])?;
        full.sub(&a_right)?.sub(&a_left)
    }

    /// Counit check (ε⊗1)Δa = a = (1⊗ε)Δa, exact.
    pub fn counit_holds(&self, a: &Element) -> Result<bool> {
        let full = self.full_diagonal(a)?;
        let mut left = Element::zero(&self.algebra, a.degree())?;
        let mut right = Element::zero(&self.algebra, a.degree())?;
        for (idx, c) in full.support() {
            let m = self.t2.monomial_at(a.degree(), idx)?;
            let (d0, i0) = m.parts[0];
            let (d1, i1) = m.parts[1];
            if d0 == 0 {
                left.add_at(i1, &c);
            }
            if d1 == 0 {
                right.add_at(i0, &c);
            }
        }
        Ok(left == *a && right == *a)
    }

    /// (Δ̄⊗1)x for x in the tensor square.
    pub fn dd_left(&self, x: &TensorElement) -> Result<TensorElement> {
        self.apply_to_first(x, true, false)
    }

    /// (1⊗Δ̄)x for x in the tensor square.
    pub fn dd_right(&self, x: &TensorElement) -> Result<TensorElement> {
        self.apply_to_first(x, false, false)
    }

    /// (Δ⊗1)x with the full diagonal (alternative defect convention).
    pub fn full_delta_left(&self, x: &TensorElement) -> Result<TensorElement> {
        self.apply_to_first(x, true, true)
    }

    /// (1⊗Δ)x with the full diagonal.
    pub fn full_delta_right(&self, x: &TensorElement) -> Result<TensorElement> {
        self.apply_to_first(x, false, true)
    }

    fn apply_to_first(&self, x: &TensorElement, left: bool, full: bool) -> Result<TensorElement> {
        assert_eq!(x.space().arity(), 2);
        let mut out = TensorElement::zero(&self.t3, x.degree())?;
        for (idx, c) in x.support() {
            let m = x.space().monomial_at(x.degree(), idx)?;
            let (target, other) = if left {
                (m.parts[0], m.parts[1])
            } else {
                (m.parts[1], m.parts[0])
            };
            let d = if full {
                (*self.delta_mono(target.0, target.1)?).clone()
            } else {
                let el = Element::from_monomial(
                    &self.algebra,
                    &self.algebra.monomial_at(target.0, target.1)?,
                    Scalar::one(self.ring()),
                )?;
                self.reduced_diagonal(&el)?
            };
            for (jdx, cc) in d.support() {
                let dm = self.t2.monomial_at(target.0, jdx)?;
                let parts = if left {
                    vec![dm.parts[0], dm.parts[1], other]
                } else {
                    vec![other, dm.parts[0], dm.parts[1]]
                };
                let t = self.t3.index_of(&TMono { parts })?;
                out.add_at(t, &c.mul(&cc));
            }
        }
        Ok(out)
    }

    /// Boundary matrix of A at one degree.
    pub fn boundary_matrix(&self, n: usize) -> Result<Mat> {
        self.algebra.check_degree(n)?;
        let rows = if n == 0 { 0 } else { self.algebra.dim(n - 1)? };
        let cols = self.algebra.dim(n)?;
        let mut m = Mat::zeros(self.ring(), rows, cols);
        for j in 0..cols {
            let e = Element::from_monomial(
                &self.algebra,
                &self.algebra.monomial_at(n, j)?,
                Scalar::one(self.ring()),
            )?;
            let de = self.differential.apply(&e)?;
            if n > 0 {
                m.set_col(j, de.coeffs());
            }
        }
        Ok(m)
    }

    /// Boundary matrix of the arity-k tensor power at one degree.
    pub fn tensor_boundary_matrix(&self, arity: usize, n: usize) -> Result<Mat> {
        self.algebra.check_degree(n)?;
        let space = self.tensor_space(arity);
        let rows = if n == 0 { 0 } else { space.dim(n - 1)? };
        let cols = space.dim(n)?;
        let mut m = Mat::zeros(self.ring(), rows, cols);
        for j in 0..cols {
            let mut e = TensorElement::zero(space, n)?;
            e.set_coeff_internal(j, Scalar::one(self.ring()));
            let de = e.boundary(&self.differential)?;
            if n > 0 {
                m.set_col(j, de.coeffs());
            }
        }
        Ok(m)
    }

    pub fn tensor_space(&self, arity: usize) -> &Arc<TensorSpace> {
        match arity {
            2 => &self.t2,
            3 => &self.t3,
            _ => panic!("supported tensor arities: 2, 3"),
        }
    }

    /// Matrix of Δ̄: A_n → (A⊗A)_n.
    pub fn diagonal_matrix(&self, n: usize) -> Result<Mat> {
        self.algebra.check_degree(n)?;
        let rows = self.t2.dim(n)?;
        let cols = self.algebra.dim(n)?;
        let mut m = Mat::zeros(self.ring(), rows, cols);
        for j in 0..cols {
            let e = Element::from_monomial(
                &self.algebra,
                &self.algebra.monomial_at(n, j)?,
                Scalar::one(self.ring()),
            )?;
            m.set_col(j, self.reduced_diagonal(&e)?.coeffs());
        }
        Ok(m)
    }

    /// Chain complex of the algebra (arity 1) or a tensor power (2, 3) on
    /// degrees 0..=max_degree, cached. Validates ∂² = 0 on construction.
    /// A cached complex built to a higher degree is reused as-is.
    pub fn complex(&self, arity: usize, max_degree: usize) -> Result<Arc<ChainComplex>> {
        self.algebra.check_degree(max_degree)?;
        {
            let cache = self.complex_cache.read().unwrap();
            if let Some((_, c)) = cache
                .iter()
                .find(|((a, m), _)| *a == arity && *m >= max_degree)
            {
                return Ok(Arc::clone(c));
            }
        }
        let ring = self.ring();
        let mut ranks = BTreeMap::new();
        let mut diffs = BTreeMap::new();
        for n in 0..=max_degree {
            let dim = match arity {
                1 => self.algebra.dim(n)?,
                _ => self.tensor_space(arity).dim(n)?,
            };
            if dim > 0 {
                ranks.insert(n, dim);
            }
            let mat = match arity {
                1 => self.boundary_matrix(n)?,
                _ => self.tensor_boundary_matrix(arity, n)?,
            };
            diffs.insert(n, mat);
        }
        let module = GradedModule::new(max_degree, ranks);
        let cx = Arc::new(ChainComplex::new(ring, module, diffs)?);
        let mut w = self.complex_cache.write().unwrap();
        let entry = w
            .entry((arity, max_degree))
            .or_insert_with(|| Arc::clone(&cx));
        Ok(Arc::clone(entry))
    }

    /// Basis of the primitive subspace P(A)_n = ker Δ̄ in one degree (empty in
    /// degree 0: primitives live in the augmentation ideal).
    pub fn primitives_at(&self, n: usize) -> Result<PrimitiveSubspace> {
        if n == 0 {
            return Ok(PrimitiveSubspace {
                degree: 0,
                kernel: Mat::zeros(self.ring(), self.algebra.dim(0)?, 0),
                basis: Vec::new(),
            });
        }
        let k = matrix::kernel(&self.diagonal_matrix(n)?);
        let mut basis = Vec::new();
        for j in 0..k.cols() {
            basis.push(Element::from_coeffs(&self.algebra, n, k.col(j))?);
        }
        Ok(PrimitiveSubspace {
            degree: n,
            kernel: k,
            basis,
        })
    }

    /// The primitive subcomplex (P(A), ∂|_P) on degrees 0..=max, together
    /// with the inclusion matrices per degree.
    pub fn primitive_complex(&self, max_degree: usize) -> Result<(Arc<ChainComplex>, Vec<Mat>)> {
        self.algebra.check_degree(max_degree)?;
        let ring = self.ring();
        let mut kernels = Vec::new();
        for n in 0..=max_degree {
            kernels.push(self.primitives_at(n)?.kernel);
        }
        let mut ranks = BTreeMap::new();
        let mut diffs = BTreeMap::new();
        for n in 0..=max_degree {
            let dim = kernels[n].cols();
            if dim > 0 {
                ranks.insert(n, dim);
            }
            let rows = if n == 0 { 0 } else { kernels[n - 1].cols() };
            let mut m = Mat::zeros(ring, rows, dim);
            if n > 0 && dim > 0 {
                let smith_prev = matrix::local_smith_form(&kernels[n - 1]);
                for j in 0..dim {
                    let p_j = Element::from_coeffs(&self.algebra, n, kernels[n].col(j))?;
                    let dp = self.differential.apply(&p_j)?;
                    let coords =
                        matrix::solve_with(&smith_prev, kernels[n - 1].cols(), dp.coeffs())
                            .ok_or_else(|| Error::NotACoderivation {
                                generator: format!("primitive basis element in degree {}", n),
                            })?;
                    m.set_col(j, &coords);
                }
            }
            diffs.insert(n, m);
        }
        let module = GradedModule::new(max_degree, ranks);
        Ok((Arc::new(ChainComplex::new(ring, module, diffs)?), kernels))
    }

    /// Indecomposables Q(A)_n = I(A)_n / (I·I)_n: monomial representatives
    /// chosen as the first basis completion in monomial order.
    pub fn indecomposables_at(&self, n: usize) -> Result<QuotientSlice> {
        self.algebra.check_degree(n)?;
        let ring = self.ring();
        let dim = self.algebra.dim(n)?;
        if n == 0 {
            return Ok(QuotientSlice {
                degree: 0,
                reps: Vec::new(),
                rep_indices: Vec::new(),
                decomposables: Mat::zeros(ring, dim, 0),
                torsion_orders: Vec::new(),
            });
        }
        let mut cols: Vec<Vec<Scalar>> = Vec::new();
        for i in 1..n {
            let da = self.algebra.dim(i)?;
            let db = self.algebra.dim(n - i)?;
            for a in 0..da {
                let ea = Element::from_monomial(
                    &self.algebra,
                    &self.algebra.monomial_at(i, a)?,
                    Scalar::one(ring),
                )?;
                for b in 0..db {
                    let eb = Element::from_monomial(
                        &self.algebra,
                        &self.algebra.monomial_at(n - i, b)?,
                        Scalar::one(ring),
                    )?;
                    cols.push(ea.mul(&eb)?.into_coeffs());
                }
            }
        }
        let mut dmat = Mat::zeros(ring, dim, cols.len());
        for (j, c) in cols.iter().enumerate() {
            dmat.set_col(j, c);
        }
        let smith = matrix::local_smith_form(&dmat);
        let torsion_orders: Vec<u32> = smith
            .divisor_valuations()
            .into_iter()
            .filter(|&v| v > 0)
            .collect();
        let mut rep_indices = Vec::new();
        let mut chosen: Vec<Vec<Scalar>> = Vec::new();
        for k in 0..dim {
            let mut cand = Mat::zeros(ring, dim, chosen.len() + cols.len());
            for (j, c) in chosen.iter().enumerate() {
                cand.set_col(j, c);
            }
            for (j, c) in cols.iter().enumerate() {
                cand.set_col(chosen.len() + j, c);
            }
            let mut e = matrix::vec_zero(ring, dim);
            e[k] = Scalar::one(ring);
            if matrix::solve(&cand, &e).is_none() {
                rep_indices.push(k);
                chosen.push(e);
            }
        }
        let reps = rep_indices
            .iter()
            .map(|&k| {
                Element::from_monomial(
                    &self.algebra,
                    &self.algebra.monomial_at(n, k)?,
                    Scalar::one(ring),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(QuotientSlice {
            degree: n,
            reps,
            rep_indices,
            decomposables: dmat,
            torsion_orders,
        })
    }

    /// The comparison map j: H_n(PA) → PH_n(A) over 𝔽_p, with kernel and
    /// cokernel dimensions.
    pub fn j_map_at(&self, n: usize) -> Result<JMapSlice> {
        if !self.ring().is_field() {
            return Err(Error::UnsupportedRing(
                "the primitive-homology comparison map is computed over F_p".into(),
            ));
        }
        self.algebra.check_degree(n + 1)?;
        let (pa, kernels) = self.primitive_complex(n + 1)?;
        let h_pa = pa.homology_at(n)?;
        let cx_a = self.complex(1, n + 1)?;
        let h_a = cx_a.homology_at(n)?;
        let cx_t2 = self.complex(2, n + 1)?;
        let h_t2 = cx_t2.homology_at(n)?;

        let ring = self.ring();
        let mut dstar = Mat::zeros(ring, h_t2.free_rank, h_a.free_rank);
        for (j, z) in h_a.free_reps.iter().enumerate() {
            let el = Element::from_coeffs(&self.algebra, n, z.clone())?;
            let dz = self.reduced_diagonal(&el)?;
            let coords = cx_t2.class_coordinates(n, dz.coeffs())?;
            for (i, c) in coords.free.iter().enumerate() {
                dstar.set(i, j, c.clone());
            }
        }
        let ph_basis = matrix::kernel(&dstar);
        let pha_dim = ph_basis.cols();

        let smith_ph = matrix::local_smith_form(&ph_basis);
        let mut jmat = Mat::zeros(ring, pha_dim, h_pa.free_rank);
        for (j, zp) in h_pa.free_reps.iter().enumerate() {
            let za = kernels[n].apply(zp);
            let coords = cx_a.class_coordinates(n, &za)?;
            let mut vec = coords.free.clone();
            vec.resize(h_a.free_rank, Scalar::zero(ring));
            let y = matrix::solve_with(&smith_ph, pha_dim, &vec).ok_or_else(|| {
                Error::TheoryViolation(
                    "class of a primitive cycle is not primitive in homology".into(),
                )
            })?;
            jmat.set_col(j, &y);
        }
        let rank = matrix::rank(&jmat);
        Ok(JMapSlice {
            degree: n,
            matrix: jmat,
            hpa_dim: h_pa.free_rank,
            pha_dim,
            kernel_dim: h_pa.free_rank - rank,
            cokernel_dim: pha_dim - rank,
        })
    }

    /// Coassociativity/cocommutativity defects of a diagonal candidate Φ, and
    /// deterministic homotopy witnesses when the defects bound.
    pub fn homotopy_defects(
        &self,
        phi: &TensorElement,
        convention: CoassocConvention,
    ) -> Result<HomotopyDefects> {
        let n = phi.degree();
        self.algebra.check_degree(n + 1)?;
        let assoc = match convention {
            CoassocConvention::ReducedDifference => self.dd_left(phi)?.sub(&self.dd_right(phi)?)?,
            CoassocConvention::FullSum => self
                .full_delta_left(phi)?
                .add(&self.full_delta_right(phi)?)?,
        };
        let comm = phi.tau()?.sub(phi)?;

        let cube = self.complex(3, n + 1)?;
        let square = self.complex(2, n + 1)?;
        let f = matrix::solve(&cube.boundary(n + 1), assoc.coeffs())
            .map(|v| TensorElement::from_coeffs(&self.t3, n + 1, v))
            .transpose()?;
        let g = matrix::solve(&square.boundary(n + 1), comm.coeffs())
            .map(|v| TensorElement::from_coeffs(&self.t2, n + 1, v))
            .transpose()?;

        let outcome = match (f, g) {
            (Some(f), Some(g)) => DefectOutcome::Solved { f, g },
            (f, g) => {
                let assoc_class = if f.is_none() {
                    Some(cube.class_coordinates(n, assoc.coeffs())?)
                } else {
                    None
                };
                let comm_class = if g.is_none() {
                    Some(square.class_coordinates(n, comm.coeffs())?)
                } else {
                    None
                };
                DefectOutcome::Obstructed {
                    assoc_class,
                    comm_class,
                }
            }
        };
        Ok(HomotopyDefects {
            assoc,
            comm,
            outcome,
        })
    }

    /// Free monogenic extension at the Hopf level: append a generator with
    /// ∂x = b (must be a cycle) and reduced diagonal Φ (default 0, which
    /// requires b primitive for the chain-map property).
    pub fn adjoin_generator(
        &self,
        spec: GeneratorSpec,
        b: &Element,
        phi: Option<&TensorElement>,
        f: Option<TensorElement>,
        g: Option<TensorElement>,
    ) -> Result<Arc<HahPresentation>> {
        if spec.degree == 0 || b.degree() + 1 != spec.degree {
            return Err(Error::DimensionMismatch(format!(
                "boundary of `{}` must have degree {}",
                spec.name,
                spec.degree.max(1) - 1
            )));
        }
        if !self.differential.apply(b)?.is_zero() {
            return Err(Error::NotACycle {
                degree: b.degree(),
                detail: format!("differential value for `{}` is not a cycle", spec.name),
            });
        }
        let new_gen_deg = spec.degree;
        let new_alg = self.algebra.adjoin(spec)?;
        let mut values = Vec::new();
        for v in self.differential.values() {
            values.push(v.embed_into(&new_alg)?);
        }
        values.push(b.embed_into(&new_alg)?);
        let differential = Derivation::new(&new_alg, values)?;
        let new_t2 = TensorSpace::new(&new_alg, 2);
        let new_t3 = TensorSpace::new(&new_alg, 3);
        let mut diagonals = Vec::new();
        for d in &self.diagonals {
            diagonals.push(embed_tensor(d, &new_t2)?);
        }
        diagonals.push(match phi {
            Some(p) => embed_tensor(p, &new_t2)?,
            None => TensorElement::zero(&new_t2, new_gen_deg)?,
        });
        let mut fw: Vec<Option<TensorElement>> = self
            .f_witness
            .iter()
            .map(|w| w.as_ref().map(|x| embed_tensor(x, &new_t3)).transpose())
            .collect::<Result<Vec<_>>>()?;
        fw.push(f.map(|x| embed_tensor(&x, &new_t3)).transpose()?);
        let mut gw: Vec<Option<TensorElement>> = self
            .g_witness
            .iter()
            .map(|w| w.as_ref().map(|x| embed_tensor(x, &new_t2)).transpose())
            .collect::<Result<Vec<_>>>()?;
        gw.push(g.map(|x| embed_tensor(&x, &new_t2)).transpose()?);
        HahPresentation::new(new_alg, differential, diagonals, fw, gw)
    }

    /// Multiplication and diagonal-component tables for degrees ≤ max; their
    /// transposes are the dual Hopf structure constants.
    pub fn dualize_range(&self, max: usize) -> Result<DualStructure> {
        self.algebra.check_degree(max)?;
        let ring = self.ring();
        let mut mult = BTreeMap::new();
        let mut diag = BTreeMap::new();
        for total in 0..=max {
            for i in 0..=total {
                let j = total - i;
                let di = self.algebra.dim(i)?;
                let dj = self.algebra.dim(j)?;
                let dt = self.algebra.dim(total)?;
                let mut mu = Mat::zeros(ring, dt, di * dj);
                for a in 0..di {
                    let ea = Element::from_monomial(
                        &self.algebra,
                        &self.algebra.monomial_at(i, a)?,
                        Scalar::one(ring),
                    )?;
                    for b in 0..dj {
                        let eb = Element::from_monomial(
                            &self.algebra,
                            &self.algebra.monomial_at(j, b)?,
                            Scalar::one(ring),
                        )?;
                        mu.set_col(a * dj + b, ea.mul(&eb)?.coeffs());
                    }
                }
                let mut dl = Mat::zeros(ring, di * dj, dt);
                for t in 0..dt {
                    let d = self.delta_mono(total, t)?;
                    let mut col = matrix::vec_zero(ring, di * dj);
                    for (idx, c) in d.support() {
                        let m = self.t2.monomial_at(total, idx)?;
                        if m.parts[0].0 == i {
                            let slot = m.parts[0].1 * dj + m.parts[1].1;
                            col[slot] = col[slot].add(&c);
                        }
                    }
                    dl.set_col(t, &col);
                }
                mult.insert((i, j), mu);
                diag.insert((i, j), dl);
            }
        }
        Ok(DualStructure { max, mult, diag })
    }
}

/// Move a tensor element into the tensor power over a structurally larger
/// presentation sharing the leading generators.
pub fn embed_tensor(x: &TensorElement, target: &Arc<TensorSpace>) -> Result<TensorElement> {
    let mut out = TensorElement::zero(target, x.degree())?;
    let src_base = x.space().base();
    let tgt_base = target.base();
    for (idx, c) in x.support() {
        let m = x.space().monomial_at(x.degree(), idx)?;
        let mut parts = Vec::with_capacity(m.parts.len());
        for &(d, i) in &m.parts {
            let mono = src_base.monomial_at(d, i)?;
            let mono2 = match mono {
                Monomial::Word(w) => Monomial::Word(w),
                Monomial::Expo(mut e) => {
                    e.resize(tgt_base.gen_count(), 0);
                    Monomial::Expo(e)
                }
            };
            parts.push((d, tgt_base.index_of(&mono2)?));
        }
        let t = target.index_of(&TMono { parts })?;
        out.add_at(t, &c);
    }
    Ok(out)
}

/// Per-degree basis of the primitive subspace, with its inclusion.
#[derive(Debug, Clone)]
pub struct PrimitiveSubspace {
    pub degree: usize,
    /// Columns are the primitive basis vectors in A_degree coordinates.
    pub kernel: Mat,
    pub basis: Vec<Element>,
}

impl PrimitiveSubspace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// Indecomposable quotient data in one degree.
#[derive(Debug, Clone)]
pub struct QuotientSlice {
    pub degree: usize,
    pub reps: Vec<Element>,
    pub rep_indices: Vec<usize>,
    pub decomposables: Mat,
    /// Nonzero torsion exponents of the quotient (empty over a field).
    pub torsion_orders: Vec<u32>,
}

impl QuotientSlice {
    pub fn dim(&self) -> usize {
        self.reps.len()
    }

    /// Natural projection I(A)_n → Q(A)_n in representative coordinates.
    pub fn project(&self, el: &Element) -> Result<Vec<Scalar>> {
        let ring = self.decomposables.ring();
        let dim = el.coeffs().len();
        let mut m = Mat::zeros(ring, dim, self.reps.len() + self.decomposables.cols());
        for (j, r) in self.reps.iter().enumerate() {
            m.set_col(j, r.coeffs());
        }
        for j in 0..self.decomposables.cols() {
            for i in 0..dim {
                m.set(i, self.reps.len() + j, self.decomposables.get(i, j).clone());
            }
        }
        let x = matrix::solve(&m, el.coeffs()).ok_or_else(|| {
            Error::SolveFailed(
                "element not expressible over representatives and decomposables".into(),
            )
        })?;
        Ok(x[..self.reps.len()].to_vec())
    }
}

/// The comparison map in one degree, with dimension bookkeeping.
#[derive(Debug, Clone)]
pub struct JMapSlice {
    pub degree: usize,
    pub matrix: Mat,
    pub hpa_dim: usize,
    pub pha_dim: usize,
    pub kernel_dim: usize,
    pub cokernel_dim: usize,
}

impl JMapSlice {
    pub fn is_isomorphism(&self) -> bool {
        self.kernel_dim == 0 && self.cokernel_dim == 0
    }
}

/// Defects of a diagonal candidate and their solved witnesses.
#[derive(Debug, Clone)]
pub struct HomotopyDefects {
    pub assoc: TensorElement,
    pub comm: TensorElement,
    pub outcome: DefectOutcome,
}

#[derive(Debug, Clone)]
pub enum DefectOutcome {
    Solved {
        f: TensorElement,
        g: TensorElement,
    },
    Obstructed {
        assoc_class: Option<ClassCoordinates>,
        comm_class: Option<ClassCoordinates>,
    },
}

/// Multiplication/diagonal structure tables; duals are the transposes.
pub struct DualStructure {
    pub max: usize,
    /// μ components A_i ⊗ A_j → A_{i+j}.
    pub mult: BTreeMap<(usize, usize), Mat>,
    /// Δ components A_{i+j} → A_i ⊗ A_j.
    pub diag: BTreeMap<(usize, usize), Mat>,
}

impl DualStructure {
    /// Dual diagonal component = transpose of multiplication.
    pub fn dual_diag(&self, i: usize, j: usize) -> Mat {
        self.mult[&(i, j)].transpose()
    }

    /// Dual multiplication component = transpose of the diagonal component.
    pub fn dual_mult(&self, i: usize, j: usize) -> Mat {
        self.diag[&(i, j)].transpose()
    }
}

/// The tensor coalgebra TC(V): words with the deconcatenation diagonal.
pub struct TensorCoalgebra {
    words: Arc<AlgebraPresentation>,
    t2: Arc<TensorSpace>,
}

impl TensorCoalgebra {
    pub fn new(
        ring: Ring,
        cogenerators: Vec<GeneratorSpec>,
        cap: usize,
    ) -> Result<TensorCoalgebra> {
        let words = AlgebraPresentation::new(ring, Flavor::FreeAssociative, cogenerators, cap)?;
        let t2 = TensorSpace::new(&words, 2);
        Ok(TensorCoalgebra { words, t2 })
    }

    pub fn module(&self) -> &Arc<AlgebraPresentation> {
        &self.words
    }

    pub fn tensor_square(&self) -> &Arc<TensorSpace> {
        &self.t2
    }

    /// Reduced deconcatenation Δ̄[v₁|…|v_k] = Σ proper splits (no signs).
    pub fn reduced_diagonal(&self, el: &Element) -> Result<TensorElement> {
        let n = el.degree();
        let mut out = TensorElement::zero(&self.t2, n)?;
        for (idx, c) in el.support() {
            let mono = self.words.monomial_at(n, idx)?;
            let letters = mono.letters();
            for cut in 1..letters.len() {
                let left = Monomial::Word(letters[..cut].to_vec());
                let right = Monomial::Word(letters[cut..].to_vec());
                let dl = self.words.monomial_degree(&left);
                let parts = vec![
                    (dl, self.words.index_of(&left)?),
                    (n - dl, self.words.index_of(&right)?),
                ];
                let t = self.t2.index_of(&TMono { parts })?;
                out.add_at(t, &c);
            }
        }
        Ok(out)
    }

    /// Matrix of Δ̄ in one degree.
    pub fn diagonal_matrix(&self, n: usize) -> Result<Mat> {
        let rows = self.t2.dim(n)?;
        let cols = self.words.dim(n)?;
        let ring = self.words.ring();
        let mut m = Mat::zeros(ring, rows, cols);
        for j in 0..cols {
            let e = Element::from_monomial(
                &self.words,
                &self.words.monomial_at(n, j)?,
                Scalar::one(ring),
            )?;
            m.set_col(j, self.reduced_diagonal(&e)?.coeffs());
        }
        Ok(m)
    }

    /// P(TC(V))_n: basis of ker Δ̄ in degree n.
    pub fn primitives_at(&self, n: usize) -> Result<Vec<Element>> {
        let k = matrix::kernel(&self.diagonal_matrix(n)?);
        (0..k.cols())
            .map(|j| Element::from_coeffs(&self.words, n, k.col(j)))
            .collect()
    }
}

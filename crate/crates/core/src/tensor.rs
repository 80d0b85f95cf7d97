//! Tensor powers A^{⊗k} (k = 2, 3) of an algebra presentation, with
//! Koszul-signed multiplication, the signed transposition τ, and the
//! componentwise differential. These spaces are where diagonals, homotopies,
//! and all the correction chains live.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use crate::algebra::{AlgebraPresentation, Derivation, Element};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Basis tensor monomial: one (degree, basis index) per factor.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TMono {
    pub parts: Vec<(usize, usize)>,
}

impl TMono {
    pub fn degree(&self) -> usize {
        self.parts.iter().map(|&(d, _)| d).sum()
    }
}

struct TBasis {
    monos: Vec<TMono>,
    index: BTreeMap<TMono, usize>,
}

/// The tensor power A^{⊗arity} as a graded space with memoized bases.
pub struct TensorSpace {
    base: Arc<AlgebraPresentation>,
    arity: usize,
    basis_cache: RwLock<BTreeMap<usize, Arc<TBasis>>>,
}

impl fmt::Debug for TensorSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TensorSpace(arity {})", self.arity)
    }
}

impl TensorSpace {
    pub fn new(base: &Arc<AlgebraPresentation>, arity: usize) -> Arc<TensorSpace> {
        assert!(arity >= 1 && arity <= 3, "supported arities: 1..=3");
        Arc::new(TensorSpace {
            base: Arc::clone(base),
            arity,
            basis_cache: RwLock::new(BTreeMap::new()),
        })
    }

    pub fn base(&self) -> &Arc<AlgebraPresentation> {
        &self.base
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    fn basis(&self, n: usize) -> Result<Arc<TBasis>> {
        self.base.check_degree(n)?;
        if let Some(b) = self.basis_cache.read().unwrap().get(&n) {
            return Ok(Arc::clone(b));
        }
        let mut monos = Vec::new();
        let mut parts = vec![(0usize, 0usize); self.arity];
        self.enumerate(0, n, &mut parts, &mut monos)?;
        let index = monos
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, m)| (m, i))
            .collect();
        let slice = Arc::new(TBasis { monos, index });
        let mut w = self.basis_cache.write().unwrap();
        let entry = w.entry(n).or_insert_with(|| Arc::clone(&slice));
        Ok(Arc::clone(entry))
    }

    fn enumerate(
        &self,
        pos: usize,
        remaining: usize,
        parts: &mut Vec<(usize, usize)>,
        out: &mut Vec<TMono>,
    ) -> Result<()> {
        if pos + 1 == self.arity {
            let dim = self.base.dim(remaining)?;
            for i in 0..dim {
                parts[pos] = (remaining, i);
                out.push(TMono {
                    parts: parts.clone(),
                });
            }
            return Ok(());
        }
        for d in 0..=remaining {
            let dim = self.base.dim(d)?;
            for i in 0..dim {
                parts[pos] = (d, i);
                self.enumerate(pos + 1, remaining - d, parts, out)?;
            }
        }
        Ok(())
    }

    pub fn dim(&self, n: usize) -> Result<usize> {
        Ok(self.basis(n)?.monos.len())
    }

    pub fn monomial_at(&self, n: usize, idx: usize) -> Result<TMono> {
        Ok(self.basis(n)?.monos[idx].clone())
    }

    pub fn index_of(&self, m: &TMono) -> Result<usize> {
        let n = m.degree();
        self.basis(n)?
            .index
            .get(m)
            .copied()
            .ok_or_else(|| Error::Validation(format!("tensor monomial not in basis: {:?}", m)))
    }

    pub fn render_monomial(&self, m: &TMono) -> String {
        m.parts
            .iter()
            .map(|&(d, i)| {
                self.base
                    .render_monomial(&self.base.monomial_at(d, i).unwrap())
            })
            .collect::<Vec<_>>()
            .join(" (x) ")
    }
}

/// Homogeneous element of a tensor power.
#[derive(Clone)]
pub struct TensorElement {
    space: Arc<TensorSpace>,
    degree: usize,
    coeffs: Vec<Scalar>,
}

impl fmt::Debug for TensorElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TensorElement[deg {}]({})", self.degree, self.render())
    }
}

impl PartialEq for TensorElement {
    fn eq(&self, other: &Self) -> bool {
        self.degree == other.degree
            && self.space.arity == other.space.arity
            && self.coeffs == other.coeffs
    }
}

impl TensorElement {
    pub fn zero(space: &Arc<TensorSpace>, degree: usize) -> Result<TensorElement> {
        let dim = space.dim(degree)?;
        Ok(TensorElement {
            space: Arc::clone(space),
            degree,
            coeffs: vec![Scalar::zero(space.base.ring()); dim],
        })
    }

    pub fn from_coeffs(
        space: &Arc<TensorSpace>,
        degree: usize,
        coeffs: Vec<Scalar>,
    ) -> Result<TensorElement> {
        let dim = space.dim(degree)?;
        if coeffs.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "tensor element of degree {}: got {} coefficients, basis has {}",
                degree,
                coeffs.len(),
                dim
            )));
        }
        Ok(TensorElement {
            space: Arc::clone(space),
            degree,
            coeffs,
        })
    }

    /// A single scaled basis tensor monomial.
    pub fn basis_vector(
        space: &Arc<TensorSpace>,
        degree: usize,
        idx: usize,
        coeff: Scalar,
    ) -> Result<TensorElement> {
        let mut e = TensorElement::zero(space, degree)?;
        e.coeffs[idx] = coeff;
        Ok(e)
    }

    /// Pure tensor e₁ ⊗ … ⊗ e_k, expanded multilinearly (no signs).
    pub fn pure(space: &Arc<TensorSpace>, factors: &[&Element]) -> Result<TensorElement> {
        assert_eq!(factors.len(), space.arity);
        let degree: usize = factors.iter().map(|e| e.degree()).sum();
        let mut out = TensorElement::zero(space, degree)?;
        let supports: Vec<Vec<(usize, Scalar)>> = factors.iter().map(|e| e.support()).collect();
        let mut choice = vec![0usize; factors.len()];
        expand_pure(space, factors, &supports, 0, &mut choice, &mut out)?;
        Ok(out)
    }

    pub fn space(&self) -> &Arc<TensorSpace> {
        &self.space
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn add(&self, other: &TensorElement) -> Result<TensorElement> {
        if self.degree != other.degree || self.space.arity != other.space.arity {
            return Err(Error::DimensionMismatch(
                "tensor elements of different shape".into(),
            ));
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.add(b))
            .collect();
        Ok(TensorElement {
            space: Arc::clone(&self.space),
            degree: self.degree,
            coeffs,
        })
    }

    pub fn sub(&self, other: &TensorElement) -> Result<TensorElement> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> TensorElement {
        TensorElement {
            space: Arc::clone(&self.space),
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c.neg()).collect(),
        }
    }

    pub fn scale(&self, c: &Scalar) -> TensorElement {
        TensorElement {
            space: Arc::clone(&self.space),
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|x| x.mul(c)).collect(),
        }
    }

    pub fn support(&self) -> Vec<(usize, Scalar)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (i, c.clone()))
            .collect()
    }

    pub(crate) fn set_coeff_internal(&mut self, idx: usize, c: Scalar) {
        self.coeffs[idx] = c;
    }

    pub(crate) fn add_at(&mut self, idx: usize, c: &Scalar) {
        self.coeffs[idx] = self.coeffs[idx].add(c);
    }

    /// Koszul-signed product: components multiply after the sign
    /// (−1)^{Σ_{i>j} |x_i||y_j|} for moving the y's into place.
    pub fn mul(&self, other: &TensorElement) -> Result<TensorElement> {
        if self.space.arity != other.space.arity {
            return Err(Error::DimensionMismatch("tensor arity mismatch".into()));
        }
        let space = &self.space;
        let base = &space.base;
        let n = self.degree + other.degree;
        let mut out = TensorElement::zero(space, n)?;
        for (i, ca) in self.support() {
            let ma = space.monomial_at(self.degree, i)?;
            for (j, cb) in other.support() {
                let mb = space.monomial_at(other.degree, j)?;
                // Koszul crossing sign
                let mut parity = 0usize;
                for ii in 1..space.arity {
                    for jj in 0..ii {
                        parity += ma.parts[ii].0 * mb.parts[jj].0;
                    }
                }
                // componentwise monomial products
                let mut sign = if parity % 2 == 0 { 1i64 } else { -1 };
                let mut parts = Vec::with_capacity(space.arity);
                let mut dead = false;
                for k in 0..space.arity {
                    let (da, ia) = ma.parts[k];
                    let (db, ib) = mb.parts[k];
                    let xa = base.monomial_at(da, ia)?;
                    let xb = base.monomial_at(db, ib)?;
                    match base.mono_mul(&xa, &xb) {
                        Some((m, s)) => {
                            sign *= s;
                            let d = base.monomial_degree(&m);
                            parts.push((d, base.index_of(&m)?));
                        }
                        None => {
                            dead = true;
                            break;
                        }
                    }
                }
                if dead {
                    continue;
                }
                let idx = space.index_of(&TMono { parts })?;
                let mut c = ca.mul(&cb);
                if sign < 0 {
                    c = c.neg();
                }
                out.coeffs[idx] = out.coeffs[idx].add(&c);
            }
        }
        Ok(out)
    }

    /// Componentwise differential Σ_i (−1)^{|x₁|+…+|x_{i−1}|} x₁⊗…∂x_i…⊗x_k.
    pub fn boundary(&self, d: &Derivation) -> Result<TensorElement> {
        let space = &self.space;
        let base = &space.base;
        if self.degree == 0 {
            return TensorElement::zero(space, 0);
        }
        let mut out = TensorElement::zero(space, self.degree - 1)?;
        for (idx, c) in self.support() {
            let m = space.monomial_at(self.degree, idx)?;
            let mut prefix = 0usize;
            for k in 0..space.arity {
                let (dk, ik) = m.parts[k];
                if dk > 0 {
                    let xk = crate::algebra::Element::from_monomial(
                        base,
                        &base.monomial_at(dk, ik)?,
                        Scalar::one(base.ring()),
                    )?;
                    let dxk = d.apply(&xk)?;
                    if !dxk.is_zero() {
                        for (jj, cc) in dxk.support() {
                            let mut parts = m.parts.clone();
                            parts[k] = (dk - 1, jj);
                            let tgt = space.index_of(&TMono { parts })?;
                            let mut term = c.mul(&cc);
                            if prefix % 2 == 1 {
                                term = term.neg();
                            }
                            out.coeffs[tgt] = out.coeffs[tgt].add(&term);
                        }
                    }
                }
                prefix += dk;
            }
        }
        Ok(out)
    }

    /// Signed transposition τ(a⊗b) = (−1)^{|a||b|} b⊗a (arity 2 only).
    pub fn tau(&self) -> Result<TensorElement> {
        if self.space.arity != 2 {
            return Err(Error::DimensionMismatch("tau needs arity 2".into()));
        }
        let space = &self.space;
        let mut out = TensorElement::zero(space, self.degree)?;
        for (idx, c) in self.support() {
            let m = space.monomial_at(self.degree, idx)?;
            let (da, ia) = m.parts[0];
            let (db, ib) = m.parts[1];
            let swapped = TMono {
                parts: vec![(db, ib), (da, ia)],
            };
            let tgt = space.index_of(&swapped)?;
            let mut cc = c;
            if (da * db) % 2 == 1 {
                cc = cc.neg();
            }
            out.coeffs[tgt] = out.coeffs[tgt].add(&cc);
        }
        Ok(out)
    }

    /// Coefficients supported on factors that are all of positive degree
    /// (the reduced part in I(A)^{⊗k}).
    pub fn reduced_part(&self) -> TensorElement {
        let mut out = self.clone();
        for (idx, _) in self.support() {
            let m = self.space.monomial_at(self.degree, idx).unwrap();
            if m.parts.iter().any(|&(d, _)| d == 0) {
                out.coeffs[idx] = Scalar::zero(self.space.base.ring());
            }
        }
        out
    }

    pub fn is_reduced(&self) -> bool {
        self.support().iter().all(|(idx, _)| {
            let m = self.space.monomial_at(self.degree, *idx).unwrap();
            m.parts.iter().all(|&(d, _)| d > 0)
        })
    }

    pub fn render(&self) -> String {
        let terms = self.support();
        if terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (k, (i, c)) in terms.iter().enumerate() {
            let mono = self
                .space
                .render_monomial(&self.space.monomial_at(self.degree, *i).unwrap());
            let neg = c.is_negative();
            let mag = c.abs();
            if k == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            if mag.is_one() {
                out.push_str(&mono);
            } else {
                out.push_str(&mag.render());
                out.push('*');
                out.push_str(&mono);
            }
        }
        out
    }
}

fn expand_pure(
    space: &Arc<TensorSpace>,
    factors: &[&Element],
    supports: &[Vec<(usize, Scalar)>],
    pos: usize,
    choice: &mut Vec<usize>,
    out: &mut TensorElement,
) -> Result<()> {
    if pos == factors.len() {
        let mut coeff = Scalar::one(space.base.ring());
        let mut parts = Vec::with_capacity(factors.len());
        for (k, &ci) in choice.iter().enumerate() {
            let (idx, c) = &supports[k][ci];
            coeff = coeff.mul(c);
            parts.push((factors[k].degree(), *idx));
        }
        let i = space.index_of(&TMono { parts })?;
        out.coeffs[i] = out.coeffs[i].add(&coeff);
        return Ok(());
    }
    for ci in 0..supports[pos].len() {
        choice[pos] = ci;
        expand_pure(space, factors, supports, pos + 1, choice, out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{Flavor, GeneratorSpec};
    use crate::scalar::Ring;

    fn setup(dx: usize, dy: usize) -> (Arc<AlgebraPresentation>, Arc<TensorSpace>) {
        let mut gens = vec![GeneratorSpec::new("x", dx), GeneratorSpec::new("y", dy)];
        gens.sort_by_key(|g| g.degree);
        let p =
            AlgebraPresentation::new(Ring::local(3).unwrap(), Flavor::FreeAssociative, gens, 12)
                .unwrap();
        let t2 = TensorSpace::new(&p, 2);
        (p, t2)
    }

    #[test]
    fn koszul_sign_in_tensor_product() {
        // (1⊗y)·(x⊗1) = (−1)^{|y||x|} x⊗y
        for (dx, dy, expect_neg) in [(2usize, 1usize, false), (1, 1, true)] {
            let (p, t2) = setup(dx, dy);
            let x = Element::generator(&p, p.gen_index("x").unwrap()).unwrap();
            let y = Element::generator(&p, p.gen_index("y").unwrap()).unwrap();
            let one = Element::unit(&p).unwrap();
            let a = TensorElement::pure(&t2, &[&one, &y]).unwrap();
            let b = TensorElement::pure(&t2, &[&x, &one]).unwrap();
            let prod = a.mul(&b).unwrap();
            let xy = TensorElement::pure(&t2, &[&x, &y]).unwrap();
            if expect_neg {
                assert_eq!(prod, xy.neg(), "dx={} dy={}", dx, dy);
            } else {
                assert_eq!(prod, xy, "dx={} dy={}", dx, dy);
            }
        }
    }

    #[test]
    fn tau_sign() {
        let (p, t2) = setup(1, 1);
        let x = Element::generator(&p, 0).unwrap();
        let y = Element::generator(&p, 1).unwrap();
        let xy = TensorElement::pure(&t2, &[&x, &y]).unwrap();
        let yx = TensorElement::pure(&t2, &[&y, &x]).unwrap();
        assert_eq!(xy.tau().unwrap(), yx.neg());
        // τ² = 1
        assert_eq!(xy.tau().unwrap().tau().unwrap(), xy);
    }

    #[test]
    fn boundary_satisfies_leibniz_shape() {
        // ∂(x⊗x) with ∂x = y, |x| = 2: y⊗x + x⊗y (sign +1 on both)
        let p = AlgebraPresentation::new(
            Ring::local(3).unwrap(),
            Flavor::FreeAssociative,
            vec![GeneratorSpec::new("y", 1), GeneratorSpec::new("x", 2)],
            12,
        )
        .unwrap();
        let t2 = TensorSpace::new(&p, 2);
        let y = Element::generator(&p, 0).unwrap();
        let x = Element::generator(&p, 1).unwrap();
        let d = Derivation::new(&p, vec![Element::zero(&p, 0).unwrap(), y.clone()]).unwrap();
        let xx = TensorElement::pure(&t2, &[&x, &x]).unwrap();
        let got = xx.boundary(&d).unwrap();
        let expected = TensorElement::pure(&t2, &[&y, &x])
            .unwrap()
            .add(&TensorElement::pure(&t2, &[&x, &y]).unwrap())
            .unwrap();
        assert_eq!(got, expected);
        // ∂² = 0
        assert!(got.boundary(&d).unwrap().is_zero());
    }

    #[test]
    fn tensor_mul_associative() {
        let (p, t2) = setup(2, 3);
        let x = Element::generator(&p, 0).unwrap();
        let y = Element::generator(&p, 1).unwrap();
        let one = Element::unit(&p).unwrap();
        let a = TensorElement::pure(&t2, &[&x, &y]).unwrap();
        let b = TensorElement::pure(&t2, &[&y, &one]).unwrap();
        let c = TensorElement::pure(&t2, &[&one, &x]).unwrap();
        let l = a.mul(&b).unwrap().mul(&c).unwrap();
        let r = a.mul(&b.mul(&c).unwrap()).unwrap();
        assert_eq!(l, r);
    }
}

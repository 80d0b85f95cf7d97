//! Presentations of finite-type graded algebras: free associative words and
//! graded-commutative monomials with optional truncation exponents, with
//! deterministic degreewise bases, Koszul-signed multiplication, derivations,
//! and free monogenic extensions.
//!
//! Monomial order everywhere: degree, then lexicographically in generator
//! order, then left-to-right word order. All caches are single-writer /
//! many-reader; presentations are immutable once built.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::scalar::{Ring, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Flavor {
    FreeAssociative,
    GradedCommutative,
}

/// One generator: name, positive degree, optional truncation exponent
/// (g^t = 0). Odd-degree commutative generators are forced to t = 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorSpec {
    pub name: String,
    pub degree: usize,
    pub truncation: Option<u32>,
}

impl GeneratorSpec {
    pub fn new(name: &str, degree: usize) -> GeneratorSpec {
        GeneratorSpec {
            name: name.to_string(),
            degree,
            truncation: None,
        }
    }

    pub fn truncated(name: &str, degree: usize, t: u32) -> GeneratorSpec {
        GeneratorSpec {
            name: name.to_string(),
            degree,
            truncation: Some(t),
        }
    }
}

/// A basis monomial: a word of generator indices, or an exponent vector.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Monomial {
    Word(Vec<u16>),
    Expo(Vec<u16>),
}

impl Monomial {
    pub fn unit(flavor: Flavor, gen_count: usize) -> Monomial {
        match flavor {
            Flavor::FreeAssociative => Monomial::Word(Vec::new()),
            Flavor::GradedCommutative => Monomial::Expo(vec![0; gen_count]),
        }
    }

    pub fn is_unit(&self) -> bool {
        match self {
            Monomial::Word(w) => w.is_empty(),
            Monomial::Expo(e) => e.iter().all(|&x| x == 0),
        }
    }

    /// Letters in canonical product order.
    pub fn letters(&self) -> Vec<u16> {
        match self {
            Monomial::Word(w) => w.clone(),
            Monomial::Expo(e) => {
                let mut out = Vec::new();
                for (i, &k) in e.iter().enumerate() {
                    for _ in 0..k {
                        out.push(i as u16);
                    }
                }
                out
            }
        }
    }
}

struct BasisSlice {
    monos: Vec<Monomial>,
    index: BTreeMap<Monomial, usize>,
}

/// A graded algebra presentation; owns memoized degreewise bases.
pub struct AlgebraPresentation {
    ring: Ring,
    flavor: Flavor,
    gens: Vec<GeneratorSpec>,
    cap: usize,
    basis_cache: RwLock<BTreeMap<usize, Arc<BasisSlice>>>,
}

impl fmt::Debug for AlgebraPresentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AlgebraPresentation")
            .field("ring", &self.ring)
            .field("flavor", &self.flavor)
            .field("gens", &self.gens)
            .field("cap", &self.cap)
            .finish()
    }
}

impl AlgebraPresentation {
    pub fn new(
        ring: Ring,
        flavor: Flavor,
        gens: Vec<GeneratorSpec>,
        cap: usize,
    ) -> Result<Arc<AlgebraPresentation>> {
        let mut gens = gens;
        let mut seen = std::collections::BTreeSet::new();
        let mut prev_degree = 0usize;
        for g in gens.iter_mut() {
            if g.degree == 0 {
                return Err(Error::Validation(format!(
                    "generator `{}` has degree 0; algebras are connected",
                    g.name
                )));
            }
            if !seen.insert(g.name.clone()) {
                return Err(Error::Validation(format!(
                    "duplicate generator name `{}`",
                    g.name
                )));
            }
            if g.degree < prev_degree {
                return Err(Error::Validation(
                    "generators must be listed in nondecreasing degree order".into(),
                ));
            }
            prev_degree = g.degree;
            match flavor {
                Flavor::FreeAssociative => {
                    if g.truncation.is_some() {
                        return Err(Error::WrongFlavor(format!(
                            "generator `{}`: free associative algebras admit no truncation",
                            g.name
                        )));
                    }
                }
                Flavor::GradedCommutative => {
                    if g.degree % 2 == 1 {
                        match g.truncation {
                            None => g.truncation = Some(2),
                            Some(2) => {}
                            Some(t) => {
                                return Err(Error::Validation(format!(
                                    "odd generator `{}` must have truncation 2, got {}",
                                    g.name, t
                                )))
                            }
                        }
                    } else if let Some(t) = g.truncation {
                        if t < 2 {
                            return Err(Error::Validation(format!(
                                "generator `{}`: truncation must be at least 2",
                                g.name
                            )));
                        }
                    }
                }
            }
        }
        Ok(Arc::new(AlgebraPresentation {
            ring,
            flavor,
            gens,
            cap,
            basis_cache: RwLock::new(BTreeMap::new()),
        }))
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn generators(&self) -> &[GeneratorSpec] {
        &self.gens
    }

    pub fn gen_count(&self) -> usize {
        self.gens.len()
    }

    pub fn gen_degree(&self, i: usize) -> usize {
        self.gens[i].degree
    }

    pub fn gen_index(&self, name: &str) -> Option<usize> {
        self.gens.iter().position(|g| g.name == name)
    }

    /// Connectivity: least generator degree (the algebra is q-reduced).
    pub fn connectivity(&self) -> usize {
        self.gens.iter().map(|g| g.degree).min().unwrap_or(1)
    }

    pub fn check_degree(&self, n: usize) -> Result<()> {
        if n > self.cap {
            Err(Error::DegreeOutOfCap {
                degree: n,
                cap: self.cap,
            })
        } else {
            Ok(())
        }
    }

    pub fn monomial_degree(&self, m: &Monomial) -> usize {
        match m {
            Monomial::Word(w) => w.iter().map(|&i| self.gens[i as usize].degree).sum(),
            Monomial::Expo(e) => e
                .iter()
                .enumerate()
                .map(|(i, &k)| self.gens[i].degree * k as usize)
                .sum(),
        }
    }

    fn enumerate(&self, n: usize) -> Vec<Monomial> {
        match self.flavor {
            Flavor::FreeAssociative => {
                let mut out = Vec::new();
                if n == 0 {
                    out.push(Monomial::Word(Vec::new()));
                    return out;
                }
                for (i, g) in self.gens.iter().enumerate() {
                    if g.degree > n {
                        continue;
                    }
                    for tail in self.basis(n - g.degree).unwrap().monos.iter() {
                        let Monomial::Word(t) = tail else {
                            unreachable!()
                        };
                        let mut w = Vec::with_capacity(t.len() + 1);
                        w.push(i as u16);
                        w.extend_from_slice(t);
                        out.push(Monomial::Word(w));
                    }
                }
                out.sort();
                out
            }
            Flavor::GradedCommutative => {
                let mut out = Vec::new();
                let mut expo = vec![0u16; self.gens.len()];
                self.enumerate_commutative(0, n, &mut expo, &mut out);
                out.sort();
                out
            }
        }
    }

    fn enumerate_commutative(
        &self,
        gen: usize,
        remaining: usize,
        expo: &mut Vec<u16>,
        out: &mut Vec<Monomial>,
    ) {
        if gen == self.gens.len() {
            if remaining == 0 {
                out.push(Monomial::Expo(expo.clone()));
            }
            return;
        }
        let g = &self.gens[gen];
        let max_by_degree = remaining / g.degree;
        let max = match g.truncation {
            Some(t) => max_by_degree.min(t as usize - 1),
            None => max_by_degree,
        };
        for k in 0..=max {
            expo[gen] = k as u16;
            self.enumerate_commutative(gen + 1, remaining - k * g.degree, expo, out);
        }
        expo[gen] = 0;
    }

    fn basis(&self, n: usize) -> Result<Arc<BasisSlice>> {
        self.check_degree(n)?;
        if let Some(b) = self.basis_cache.read().unwrap().get(&n) {
            return Ok(Arc::clone(b));
        }
        let monos = self.enumerate(n);
        let index = monos
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, m)| (m, i))
            .collect();
        let slice = Arc::new(BasisSlice { monos, index });
        self.basis_cache
            .write()
            .unwrap()
            .entry(n)
            .or_insert_with(|| Arc::clone(&slice));
        Ok(Arc::clone(
            self.basis_cache.read().unwrap().get(&n).unwrap(),
        ))
    }

    /// Ordered monomial basis in one degree.
    pub fn enumerate_basis(&self, n: usize) -> Result<Vec<Monomial>> {
        Ok(self.basis(n)?.monos.clone())
    }

    pub fn dim(&self, n: usize) -> Result<usize> {
        Ok(self.basis(n)?.monos.len())
    }

    pub fn monomial_at(&self, n: usize, idx: usize) -> Result<Monomial> {
        Ok(self.basis(n)?.monos[idx].clone())
    }

    pub fn index_of(&self, m: &Monomial) -> Result<usize> {
        let n = self.monomial_degree(m);
        self.basis(n)?
            .index
            .get(m)
            .copied()
            .ok_or_else(|| Error::Validation(format!("monomial not in basis: {:?}", m)))
    }

    /// Product of basis monomials with Koszul sign; `None` when a truncation
    /// kills it.
    pub fn mono_mul(&self, a: &Monomial, b: &Monomial) -> Option<(Monomial, i64)> {
        match (a, b) {
            (Monomial::Word(x), Monomial::Word(y)) => {
                let mut w = x.clone();
                w.extend_from_slice(y);
                Some((Monomial::Word(w), 1))
            }
            (Monomial::Expo(x), Monomial::Expo(y)) => {
                let mut sum = vec![0u16; x.len()];
                for i in 0..x.len() {
                    let s = x[i] + y[i];
                    let g = &self.gens[i];
                    if let Some(t) = g.truncation {
                        if s as u32 >= t {
                            return None;
                        }
                    }
                    sum[i] = s;
                }
                // Koszul sign from moving y_j (j < i) past x_i
                let mut parity = 0u64;
                for i in 0..x.len() {
                    if self.gens[i].degree % 2 == 0 || x[i] == 0 {
                        continue;
                    }
                    for j in 0..i {
                        if self.gens[j].degree % 2 == 0 {
                            continue;
                        }
                        parity += x[i] as u64 * y[j] as u64;
                    }
                }
                let sign = if parity % 2 == 0 { 1 } else { -1 };
                Some((Monomial::Expo(sum), sign))
            }
            _ => unreachable!("mixed monomial kinds"),
        }
    }

    pub fn render_monomial(&self, m: &Monomial) -> String {
        if m.is_unit() {
            return "1".to_string();
        }
        match m {
            Monomial::Word(w) => w
                .iter()
                .map(|&i| self.gens[i as usize].name.clone())
                .collect::<Vec<_>>()
                .join("."),
            Monomial::Expo(e) => {
                let mut parts = Vec::new();
                for (i, &k) in e.iter().enumerate() {
                    if k == 0 {
                        continue;
                    }
                    if k == 1 {
                        parts.push(self.gens[i].name.clone());
                    } else {
                        parts.push(format!("{}^{}", self.gens[i].name, k));
                    }
                }
                parts.join("*")
            }
        }
    }

    /// Fresh presentation on the first `count` generators.
    pub fn prefix(&self, count: usize) -> Result<Arc<AlgebraPresentation>> {
        AlgebraPresentation::new(
            self.ring,
            self.flavor,
            self.gens[..count].to_vec(),
            self.cap,
        )
    }

    /// Free monogenic extension of the underlying algebra: append one
    /// generator (free associative flavor only).
    pub fn adjoin(&self, spec: GeneratorSpec) -> Result<Arc<AlgebraPresentation>> {
        if self.flavor != Flavor::FreeAssociative {
            return Err(Error::WrongFlavor(
                "free monogenic extensions need a free associative algebra".into(),
            ));
        }
        let mut gens = self.gens.clone();
        gens.push(spec);
        AlgebraPresentation::new(self.ring, self.flavor, gens, self.cap)
    }

    /// Structural equality of the generator data (used to validate that two
    /// elements may interact).
    pub fn same_shape(&self, other: &AlgebraPresentation) -> bool {
        self.ring == other.ring
            && self.flavor == other.flavor
            && self.cap == other.cap
            && self.gens == other.gens
    }
}

/// Homogeneous element: scalar coefficients over one degree's monomial basis.
#[derive(Clone)]
pub struct Element {
    pres: Arc<AlgebraPresentation>,
    degree: usize,
    coeffs: Vec<Scalar>,
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Element[deg {}]({})", self.degree, self.render())
    }
}

impl PartialEq for Element {
    fn eq(&self, other: &Self) -> bool {
        self.degree == other.degree && self.coeffs == other.coeffs
    }
}

impl Element {
    pub fn zero(pres: &Arc<AlgebraPresentation>, degree: usize) -> Result<Element> {
        let dim = pres.dim(degree)?;
        Ok(Element {
            pres: Arc::clone(pres),
            degree,
            coeffs: vec![Scalar::zero(pres.ring()); dim],
        })
    }

    pub fn unit(pres: &Arc<AlgebraPresentation>) -> Result<Element> {
        let mut e = Element::zero(pres, 0)?;
        e.coeffs[0] = Scalar::one(pres.ring());
        Ok(e)
    }

    pub fn generator(pres: &Arc<AlgebraPresentation>, i: usize) -> Result<Element> {
        let _ = pres.gen_degree(i);
        let mono = match pres.flavor() {
            Flavor::FreeAssociative => Monomial::Word(vec![i as u16]),
            Flavor::GradedCommutative => {
                let mut e = vec![0u16; pres.gen_count()];
                e[i] = 1;
                Monomial::Expo(e)
            }
        };
        Element::from_monomial(pres, &mono, Scalar::one(pres.ring()))
    }

    pub fn from_monomial(
        pres: &Arc<AlgebraPresentation>,
        m: &Monomial,
        c: Scalar,
    ) -> Result<Element> {
        let n = pres.monomial_degree(m);
        let mut e = Element::zero(pres, n)?;
        let idx = pres.index_of(m)?;
        e.coeffs[idx] = c;
        Ok(e)
    }

    pub fn from_coeffs(
        pres: &Arc<AlgebraPresentation>,
        degree: usize,
        coeffs: Vec<Scalar>,
    ) -> Result<Element> {
        let dim = pres.dim(degree)?;
        if coeffs.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "element of degree {}: got {} coefficients, basis has {}",
                degree,
                coeffs.len(),
                dim
            )));
        }
        Ok(Element {
            pres: Arc::clone(pres),
            degree,
            coeffs,
        })
    }

    pub fn presentation(&self) -> &Arc<AlgebraPresentation> {
        &self.pres
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Scalar> {
        self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    fn check_compatible(&self, other: &Element) -> Result<()> {
        if !Arc::ptr_eq(&self.pres, &other.pres) && !self.pres.same_shape(&other.pres) {
            return Err(Error::MixedPresentation);
        }
        Ok(())
    }

    pub fn add(&self, other: &Element) -> Result<Element> {
        self.check_compatible(other)?;
        if self.degree != other.degree {
            return Err(Error::DimensionMismatch(
                "adding elements of different degrees".into(),
            ));
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.add(b))
            .collect();
        Ok(Element {
            pres: Arc::clone(&self.pres),
            degree: self.degree,
            coeffs,
        })
    }

    pub fn sub(&self, other: &Element) -> Result<Element> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Element {
        Element {
            pres: Arc::clone(&self.pres),
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c.neg()).collect(),
        }
    }

    pub fn scale(&self, c: &Scalar) -> Element {
        Element {
            pres: Arc::clone(&self.pres),
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|x| x.mul(c)).collect(),
        }
    }

    pub fn mul(&self, other: &Element) -> Result<Element> {
        self.check_compatible(other)?;
        let n = self.degree + other.degree;
        let mut out = Element::zero(&self.pres, n)?;
        let ring = self.pres.ring();
        for (i, ca) in self.coeffs.iter().enumerate() {
            if ca.is_zero() {
                continue;
            }
            let ma = self.pres.monomial_at(self.degree, i)?;
            for (j, cb) in other.coeffs.iter().enumerate() {
                if cb.is_zero() {
                    continue;
                }
                let mb = other.pres.monomial_at(other.degree, j)?;
                if let Some((m, sign)) = self.pres.mono_mul(&ma, &mb) {
                    let idx = self.pres.index_of(&m)?;
                    let mut c = ca.mul(cb);
                    if sign < 0 {
                        c = c.neg();
                    }
                    out.coeffs[idx] = out.coeffs[idx].add(&c);
                }
            }
        }
        let _ = ring;
        Ok(out)
    }

    pub(crate) fn add_at(&mut self, idx: usize, c: &Scalar) {
        self.coeffs[idx] = self.coeffs[idx].add(c);
    }

    /// Terms with nonzero coefficient, in basis order.
    pub fn support(&self) -> Vec<(usize, Scalar)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (i, c.clone()))
            .collect()
    }

    /// Canonical text rendering, e.g. "2*x^2*y + 1/2*y^3" or "u.v.u".
    pub fn render(&self) -> String {
        let terms = self.support();
        if terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (k, (i, c)) in terms.iter().enumerate() {
            let mono = self
                .pres
                .render_monomial(&self.pres.monomial_at(self.degree, *i).unwrap());
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
            } else if mono == "1" {
                out.push_str(&mag.render());
            } else {
                out.push_str(&mag.render());
                out.push('*');
                out.push_str(&mono);
            }
        }
        out
    }

    /// Move an element into a structurally larger presentation sharing the
    /// leading generators.
    pub fn embed_into(&self, target: &Arc<AlgebraPresentation>) -> Result<Element> {
        let mut out = Element::zero(target, self.degree)?;
        for (i, c) in self.support() {
            let m = self.pres.monomial_at(self.degree, i)?;
            let m2 = match m {
                Monomial::Word(w) => Monomial::Word(w),
                Monomial::Expo(mut e) => {
                    e.resize(target.gen_count(), 0);
                    Monomial::Expo(e)
                }
            };
            let idx = target.index_of(&m2)?;
            out.coeffs[idx] = out.coeffs[idx].add(&c);
        }
        Ok(out)
    }

    /// Reduce coefficients mod p into the 𝔽_p presentation `target`.
    pub fn reduce_mod_p_into(&self, target: &Arc<AlgebraPresentation>) -> Result<Element> {
        let coeffs = self.coeffs.iter().map(|c| c.reduce_mod_p()).collect();
        Element::from_coeffs(target, self.degree, coeffs)
    }

    /// Move an element into a structurally smaller presentation sharing the
    /// leading generators; errors when the support involves later ones.
    pub fn restrict_to(&self, target: &Arc<AlgebraPresentation>) -> Result<Element> {
        let mut out = Element::zero(target, self.degree)?;
        let cut = target.gen_count();
        for (i, c) in self.support() {
            let m = self.pres.monomial_at(self.degree, i)?;
            let m2 = match m {
                Monomial::Word(w) => {
                    if w.iter().any(|&g| g as usize >= cut) {
                        return Err(Error::Validation(
                            "element involves generators outside the target presentation".into(),
                        ));
                    }
                    Monomial::Word(w)
                }
                Monomial::Expo(e) => {
                    if e[cut..].iter().any(|&k| k > 0) {
                        return Err(Error::Validation(
                            "element involves generators outside the target presentation".into(),
                        ));
                    }
                    Monomial::Expo(e[..cut].to_vec())
                }
            };
            let idx = target.index_of(&m2)?;
            out.coeffs[idx] = out.coeffs[idx].add(&c);
        }
        Ok(out)
    }
}

/// A derivation, determined by its values on generators (degree −1).
#[derive(Clone)]
pub struct Derivation {
    pres: Arc<AlgebraPresentation>,
    values: Vec<Element>,
}

impl fmt::Debug for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vals: Vec<String> = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| format!("d{} = {}", self.pres.generators()[i].name, v.render()))
            .collect();
        write!(f, "Derivation({})", vals.join(", "))
    }
}

impl Derivation {
    /// Validates degrees, vanishing on degree-1 generators (connectivity),
    /// and ∂² = 0 on generators.
    pub fn new(pres: &Arc<AlgebraPresentation>, values: Vec<Element>) -> Result<Derivation> {
        if values.len() != pres.gen_count() {
            return Err(Error::DimensionMismatch(
                "derivation needs one value per generator".into(),
            ));
        }
        for (i, v) in values.iter().enumerate() {
            let g = &pres.generators()[i];
            if g.degree == 1 {
                if !v.is_zero() {
                    return Err(Error::Validation(format!(
                        "generator `{}` has degree 1; its boundary must vanish",
                        g.name
                    )));
                }
            } else if v.degree() != g.degree - 1 {
                return Err(Error::DimensionMismatch(format!(
                    "boundary of `{}` must have degree {}",
                    g.name,
                    g.degree - 1
                )));
            }
        }
        let d = Derivation {
            pres: Arc::clone(pres),
            values,
        };
        for (i, g) in pres.generators().iter().enumerate() {
            if !d.apply(&d.values[i])?.is_zero() {
                return Err(Error::InvalidDerivation {
                    generator: g.name.clone(),
                });
            }
        }
        Ok(d)
    }

    /// Build without the ∂² = 0 validation; callers must check and report.
    pub(crate) fn new_unchecked(
        pres: &Arc<AlgebraPresentation>,
        values: Vec<Element>,
    ) -> Derivation {
        Derivation {
            pres: Arc::clone(pres),
            values,
        }
    }

    /// The zero derivation.
    pub fn zero(pres: &Arc<AlgebraPresentation>) -> Result<Derivation> {
        let values = (0..pres.gen_count())
            .map(|i| {
                let d = pres.gen_degree(i);
                Element::zero(pres, d.saturating_sub(1))
            })
            .collect::<Result<Vec<_>>>()?;
        Derivation::new(pres, values)
    }

    pub fn presentation(&self) -> &Arc<AlgebraPresentation> {
        &self.pres
    }

    pub fn value(&self, gen: usize) -> &Element {
        &self.values[gen]
    }

    pub fn values(&self) -> &[Element] {
        &self.values
    }

    fn apply_monomial(&self, m: &Monomial) -> Result<Element> {
        let letters = m.letters();
        let n = self.pres.monomial_degree(m);
        if n == 0 {
            return Element::zero(&self.pres, 0);
        }
        let mut out = Element::zero(&self.pres, n - 1)?;
        let mut prefix_degree = 0usize;
        for (pos, &g) in letters.iter().enumerate() {
            let dv = &self.values[g as usize];
            if dv.is_zero() {
                prefix_degree += self.pres.gen_degree(g as usize);
                continue;
            }
            // ± prefix · ∂g · suffix, sign (−1)^{deg prefix}
            let mut term = prefix_product(&self.pres, &letters[..pos])?;
            term = term.mul(dv)?;
            term = term.mul(&prefix_product(&self.pres, &letters[pos + 1..])?)?;
            if prefix_degree % 2 == 1 {
                term = term.neg();
            }
            out = out.add(&term)?;
            prefix_degree += self.pres.gen_degree(g as usize);
        }
        Ok(out)
    }

    /// Graded Leibniz extension: ∂(ab) = ∂a·b + (−1)^{|a|} a·∂b.
    pub fn apply(&self, a: &Element) -> Result<Element> {
        if a.degree() == 0 {
            return Element::zero(&self.pres, 0);
        }
        let mut out = Element::zero(&self.pres, a.degree() - 1)?;
        for (i, c) in a.support() {
            let m = self.pres.monomial_at(a.degree(), i)?;
            let dm = self.apply_monomial(&m)?;
            out = out.add(&dm.scale(&c))?;
        }
        Ok(out)
    }
}

fn prefix_product(pres: &Arc<AlgebraPresentation>, letters: &[u16]) -> Result<Element> {
    let mut acc = Element::unit(pres)?;
    for &g in letters {
        acc = acc.mul(&Element::generator(pres, g as usize)?)?;
    }
    Ok(acc)
}

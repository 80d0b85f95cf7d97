//! Built-in regression fixtures and seeded random inputs: the two
//! polynomial⊗exterior differential Hopf algebras, the four elementary
//! truncated pairs, synthetic complexes with prescribed torsion, seeded
//! primitively generated presentations, and seeded extension problems.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{AlgebraPresentation, Derivation, Element, Flavor, GeneratorSpec};
use crate::error::{Error, Result};
use crate::graded::{ChainComplex, GradedModule};
use crate::hopf::HahPresentation;
use crate::matrix::{self, Mat};
use crate::scalar::{Ring, Scalar};
use crate::tensor::{TensorElement, TensorSpace};

/// F_p[x] ⊗ Λ(y) with ∂x = y, deg x = 2n: polynomial on an even generator,
/// exterior on its boundary.
pub fn example_one(p: u32, n: usize, cap: usize) -> Result<Arc<HahPresentation>> {
    let ring = Ring::fp(p)?;
    let alg = AlgebraPresentation::new(
        ring,
        Flavor::GradedCommutative,
        vec![
            GeneratorSpec::new("y", 2 * n - 1),
            GeneratorSpec::new("x", 2 * n),
        ],
        cap,
    )?;
    let y = Element::generator(&alg, 0)?;
    let zero_y = Element::zero(&alg, 2 * n - 2)?;
    let d = Derivation::new(&alg, vec![zero_y, y])?;
    HahPresentation::primitively_generated(alg, d)
}

/// Λ(x) ⊗ F_p[y] with ∂x = y, deg x = 2n+1: exterior on an odd generator,
/// polynomial on its boundary. Acyclic in positive degrees.
pub fn example_two(p: u32, n: usize, cap: usize) -> Result<Arc<HahPresentation>> {
    let ring = Ring::fp(p)?;
    let alg = AlgebraPresentation::new(
        ring,
        Flavor::GradedCommutative,
        vec![
            GeneratorSpec::new("y", 2 * n),
            GeneratorSpec::new("x", 2 * n + 1),
        ],
        cap,
    )?;
    let y = Element::generator(&alg, 0)?;
    let zero_y = Element::zero(&alg, 2 * n - 1)?;
    let d = Derivation::new(&alg, vec![zero_y, y])?;
    HahPresentation::primitively_generated(alg, d)
}

/// Λ(z) with zero differential (deg z odd).
pub fn b1(p: u32, deg_z: usize, cap: usize) -> Result<Arc<HahPresentation>> {
    let ring = Ring::fp(p)?;
    let alg = AlgebraPresentation::new(
        ring,
        Flavor::GradedCommutative,
        vec![GeneratorSpec::new("z", deg_z)],
        cap,
    )?;
    let d = Derivation::zero(&alg)?;
    HahPresentation::primitively_generated(alg, d)
}

/// F_p[z]/(z^p) with zero differential (deg z even).
pub fn b2(p: u32, deg_z: usize, cap: usize) -> Result<Arc<HahPresentation>> {
    let ring = Ring::fp(p)?;
    let alg = AlgebraPresentation::new(
        ring,
        Flavor::GradedCommutative,
        vec![GeneratorSpec::truncated("z", deg_z, p)],
        cap,
    )?;
    let d = Derivation::zero(&alg)?;
    HahPresentation::primitively_generated(alg, d)
}

/// Λ(x) ⊗ F_p[y]/(y^p) with ∂x = y (deg x odd).
pub fn b3(p: u32, deg_x: usize, cap: usize) -> Result<Arc<HahPresentation>> {
    let ring = Ring::fp(p)?;
    let alg = AlgebraPresentation::new(
        ring,
        Flavor::GradedCommutative,
        vec![
            GeneratorSpec::truncated("y", deg_x - 1, p),
            GeneratorSpec::new("x", deg_x),
        ],
        cap,
    )?;
    let y = Element::generator(&alg, 0)?;
    let zero_y = Element::zero(&alg, deg_x - 2)?;
    let d = Derivation::new(&alg, vec![zero_y, y])?;
    HahPresentation::primitively_generated(alg, d)
}

/// F_p[x]/(x^p) ⊗ Λ(y) with ∂x = y (deg x even).
pub fn b4(p: u32, deg_x: usize, cap: usize) -> Result<Arc<HahPresentation>> {
    let ring = Ring::fp(p)?;
    let alg = AlgebraPresentation::new(
        ring,
        Flavor::GradedCommutative,
        vec![
            GeneratorSpec::new("y", deg_x - 1),
            GeneratorSpec::truncated("x", deg_x, p),
        ],
        cap,
    )?;
    let y = Element::generator(&alg, 0)?;
    let zero_y = Element::zero(&alg, deg_x - 2)?;
    let d = Derivation::new(&alg, vec![zero_y, y])?;
    HahPresentation::primitively_generated(alg, d)
}

/// Three-generator free presentation over ℤ_(5) whose last generator carries
/// a nontrivial diagonal and a p-divisible boundary; exercises a two-page
/// trivialization.
pub fn demo_three_generator(cap: usize) -> Result<Arc<HahPresentation>> {
    let ring = Ring::local(5)?;
    let alg = AlgebraPresentation::new(
        ring,
        Flavor::FreeAssociative,
        vec![
            GeneratorSpec::new("u2", 2),
            GeneratorSpec::new("u3", 3),
            GeneratorSpec::new("u4", 4),
        ],
        cap,
    )?;
    let u2 = Element::generator(&alg, 0)?;
    let u3 = Element::generator(&alg, 1)?;
    let d = Derivation::new(
        &alg,
        vec![
            Element::zero(&alg, 1)?,
            Element::zero(&alg, 2)?,
            u3.scale(&Scalar::from_i64(ring, 5)),
        ],
    )?;
    let t2 = TensorSpace::new(&alg, 2);
    let diagonals = vec![
        TensorElement::zero(&t2, 2)?,
        TensorElement::zero(&t2, 3)?,
        TensorElement::pure(&t2, &[&u2, &u2])?,
    ];
    HahPresentation::new(alg, d, diagonals, vec![None; 3], vec![None; 3])
}

/// T(u2, u3) over ℤ_(p) with ∂u3 = p·u2: the smallest free presentation
/// whose truncated word-length-≤2 complex has p-torsion (three ℤ/p summands
/// in degree 4), so extensions in degree 6 genuinely need a second page.
pub fn torsion_pair(p: u32, cap: usize) -> Result<Arc<HahPresentation>> {
    let ring = Ring::local(p)?;
    let alg = AlgebraPresentation::new(
        ring,
        Flavor::FreeAssociative,
        vec![GeneratorSpec::new("u2", 2), GeneratorSpec::new("u3", 3)],
        cap,
    )?;
    let u2 = Element::generator(&alg, 0)?;
    let d = Derivation::new(
        &alg,
        vec![
            Element::zero(&alg, 1)?,
            u2.scale(&Scalar::from_i64(ring, p as i64)),
        ],
    )?;
    HahPresentation::primitively_generated(alg, d)
}

/// Load a fixture by short name. `n` tunes the generator degree where it
/// applies (default 1 → the smallest instance).
pub fn by_name(name: &str, p: u32, n: usize, cap: usize) -> Result<Arc<HahPresentation>> {
    match name {
        "ex1" => example_one(p, n, cap),
        "ex2" => example_two(p, n, cap),
        "b1" => b1(p, 2 * n + 1, cap),
        "b2" => b2(p, 2 * n, cap),
        "b3" => b3(p, 2 * n + 1, cap),
        "b4" => b4(p, 2 * n, cap),
        "demo3" => demo_three_generator(cap),
        "torsion-pair" => torsion_pair(p, cap),
        _ => Err(Error::Validation(format!(
            "unknown fixture `{}` (known: ex1 ex2 b1 b2 b3 b4 demo3 torsion-pair)",
            name
        ))),
    }
}

/// Random unimodular matrix over ℤ_(p): a short product of elementary ops.
fn random_unimodular(ring: Ring, n: usize, rng: &mut ChaCha8Rng) -> (Mat, Mat) {
    let mut t = Mat::identity(ring, n);
    let mut t_inv = Mat::identity(ring, n);
    if n == 0 {
        return (t, t_inv);
    }
    let ops = 2 * n;
    for _ in 0..ops {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if i == j {
            continue;
        }
        let c = Scalar::from_i64(ring, rng.gen_range(-2..=2i64));
        if c.is_zero() {
            continue;
        }
        // E = I + c·e_{ij}: T := E·T, T⁻¹ := T⁻¹·E⁻¹
        let mut e = Mat::identity(ring, n);
        e.set(i, j, c.clone());
        let mut e_inv = Mat::identity(ring, n);
        e_inv.set(i, j, c.neg());
        t = e.mul(&t);
        t_inv = t_inv.mul(&e_inv);
    }
    (t, t_inv)
}

/// A chain complex over ℤ_(p) with prescribed homology
/// H_d ≅ ℤ^{free} ⊕ ⊕_s ℤ/p^{s}, disguised by a seeded unimodular change of
/// basis in every degree.
pub fn synthetic_complex(
    p: u32,
    spec: &[(usize, usize, &[u32])],
    cap: usize,
    seed: u64,
) -> Result<Arc<ChainComplex>> {
    let ring = Ring::local(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // block layout per degree
    let mut ranks: BTreeMap<usize, usize> = BTreeMap::new();
    let mut blocks: Vec<(usize, u32, usize, usize)> = Vec::new(); // (degree d, exponent, target idx, source idx)
    for &(d, free, torsion) in spec {
        for _ in 0..free {
            *ranks.entry(d).or_default() += 1;
        }
        for &s in torsion {
            let t_idx = *ranks.entry(d).or_default();
            *ranks.get_mut(&d).unwrap() += 1;
            let s_idx = *ranks.entry(d + 1).or_default();
            *ranks.get_mut(&(d + 1)).unwrap() += 1;
            blocks.push((d, s, t_idx, s_idx));
        }
    }
    let mut diff: BTreeMap<usize, Mat> = BTreeMap::new();
    for (&d, &r) in &ranks {
        let below = if d == 0 {
            0
        } else {
            ranks.get(&(d - 1)).copied().unwrap_or(0)
        };
        diff.insert(d, Mat::zeros(ring, below, r));
    }
    for &(d, s, t_idx, s_idx) in &blocks {
        let m = diff.get_mut(&(d + 1)).unwrap();
        m.set(t_idx, s_idx, Scalar::p_power(ring, s));
    }
    // conjugate by unimodular basis changes
    let degrees: Vec<usize> = ranks.keys().copied().collect();
    let mut trans: BTreeMap<usize, (Mat, Mat)> = BTreeMap::new();
    for &d in &degrees {
        trans.insert(d, random_unimodular(ring, ranks[&d], &mut rng));
    }
    let mut final_diff = BTreeMap::new();
    for (&d, m) in &diff {
        if d == 0 || m.rows() == 0 {
            continue;
        }
        let (t_prev, _) = trans
            .get(&(d - 1))
            .cloned()
            .unwrap_or_else(|| (Mat::identity(ring, m.rows()), Mat::identity(ring, m.rows())));
        let (_, t_inv) = trans
            .get(&d)
            .cloned()
            .unwrap_or_else(|| (Mat::identity(ring, m.cols()), Mat::identity(ring, m.cols())));
        final_diff.insert(d, t_prev.mul(m).mul(&t_inv));
    }
    let module = GradedModule::new(cap, ranks);
    Ok(Arc::new(ChainComplex::new(ring, module, final_diff)?))
}

fn boundary_matrix_for(
    pres: &Arc<AlgebraPresentation>,
    derivation: &Derivation,
    n: usize,
) -> Result<Mat> {
    let ring = pres.ring();
    let rows = if n == 0 { 0 } else { pres.dim(n - 1)? };
    let cols = pres.dim(n)?;
    let mut m = Mat::zeros(ring, rows, cols);
    for j in 0..cols {
        let e = Element::from_monomial(pres, &pres.monomial_at(n, j)?, Scalar::one(ring))?;
        let de = derivation.apply(&e)?;
        if n > 0 {
            m.set_col(j, de.coeffs());
        }
    }
    Ok(m)
}

/// Seeded primitively generated free presentation: T(V) with primitive
/// generators and random primitive-cycle boundary values (p-divisible ones
/// sprinkled in over ℤ_(p) when `torsion` is set).
pub fn seeded_primitive_hah(
    ring: Ring,
    degrees: &[usize],
    cap: usize,
    seed: u64,
    torsion: bool,
) -> Result<Arc<HahPresentation>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut degs = degrees.to_vec();
    degs.sort();
    let gens: Vec<GeneratorSpec> = degs
        .iter()
        .enumerate()
        .map(|(i, &d)| GeneratorSpec::new(&format!("g{}", i + 1), d))
        .collect();
    let pres = AlgebraPresentation::new(ring, Flavor::FreeAssociative, gens, cap)?;
    // diagonal matrices do not depend on the differential
    let hah_zero = HahPresentation::primitively_generated(pres.clone(), Derivation::zero(&pres)?)?;
    let mut values: Vec<Element> = (0..pres.gen_count())
        .map(|i| Element::zero(&pres, pres.gen_degree(i).saturating_sub(1)))
        .collect::<Result<Vec<_>>>()?;
    for i in 0..pres.gen_count() {
        let d = pres.gen_degree(i);
        if d <= 1 {
            continue;
        }
        let partial = Derivation::new(&pres, values.clone())?;
        let bnd = boundary_matrix_for(&pres, &partial, d - 1)?;
        let diag = hah_zero.diagonal_matrix(d - 1)?;
        let stacked = Mat::vstack(&[&bnd, &diag]);
        let kernel = matrix::kernel(&stacked);
        if kernel.cols() == 0 {
            continue;
        }
        let dim = pres.dim(d - 1)?;
        let mut v = matrix::vec_zero(ring, dim);
        for j in 0..kernel.cols() {
            let c = Scalar::from_i64(ring, rng.gen_range(-1..=1i64));
            if c.is_zero() {
                continue;
            }
            v = matrix::vec_add(&v, &matrix::vec_scale(&c, &kernel.col(j)));
        }
        if torsion && !ring.is_field() && rng.gen_bool(0.5) {
            v = matrix::vec_scale(&Scalar::p_power(ring, 1), &v);
        }
        values[i] = Element::from_coeffs(&pres, d - 1, v)?;
    }
    let derivation = Derivation::new(&pres, values)?;
    HahPresentation::primitively_generated(pres, derivation)
}

/// Raw data of a seeded extension problem over ℤ_(p): a primitively
/// generated base, a new generator degree, a primitive-cycle boundary, and a
/// diagonal built by perturbing the trivial one with Δ̄a₀ + ∂Ψ₀ plus a
/// p-power torsion twist from the truncated word-length-≤2 complex.
pub struct SeededExtension {
    pub base: Arc<HahPresentation>,
    pub x_degree: usize,
    pub b: Element,
    pub phi: TensorElement,
    pub twisted: bool,
}

pub fn seeded_extension(p: u32, cap: usize, seed: u64) -> Result<SeededExtension> {
    let ring = Ring::local(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = 2usize;
    let base = seeded_primitive_hah(
        ring,
        &[2, 3],
        cap,
        seed.wrapping_mul(31).wrapping_add(7),
        true,
    )?;
    let hi = (q * p as usize - 1).min(cap - 1);
    let lo = 2 * q;
    let n = if lo >= hi { lo } else { rng.gen_range(lo..=hi) };

    // a0: random cycle in degree n
    let bnd = base.boundary_matrix(n)?;
    let kernel = matrix::kernel(&bnd);
    let dim = base.algebra().dim(n)?;
    let mut a0 = matrix::vec_zero(ring, dim);
    for j in 0..kernel.cols() {
        let c = Scalar::from_i64(ring, rng.gen_range(-1..=1i64));
        if !c.is_zero() {
            a0 = matrix::vec_add(&a0, &matrix::vec_scale(&c, &kernel.col(j)));
        }
    }
    let a0 = Element::from_coeffs(base.algebra(), n, a0)?;

    // Ψ0: sparse random reduced tensor chain one degree up (so that Φ stays
    // inside I(A)⊗I(A))
    let t2 = base.tensor_square();
    let dim_t2 = t2.dim(n + 1)?;
    let mut psi0 = TensorElement::zero(t2, n + 1)?;
    for idx in 0..dim_t2 {
        let mono = t2.monomial_at(n + 1, idx)?;
        if mono.parts.iter().any(|&(d, _)| d == 0) {
            continue;
        }
        if rng.gen_bool(0.25) {
            psi0.add_at(idx, &Scalar::from_i64(ring, rng.gen_range(-1..=1i64)));
        }
    }

    let mut phi = base
        .reduced_diagonal(&a0)?
        .add(&psi0.boundary(base.differential())?)?;

    // torsion twist: a cycle whose obstruction class is p-power torsion
    let mut twisted = false;
    if n >= 2 {
        let cobar = crate::cobar::TruncatedCobar::build(&base, cap)?;
        if let Some((s, omega)) = cobar.torsion_twist_cycle(n)? {
            phi = phi.add(&omega.scale(&Scalar::p_power(ring, s)))?;
            twisted = true;
        }
    }

    // boundary value for x: a primitive cycle (often zero)
    let mut b = Element::zero(base.algebra(), n.saturating_sub(1))?;
    if n >= 2 && rng.gen_bool(0.5) {
        let bnd_prev = base.boundary_matrix(n - 1)?;
        let diag_prev = base.diagonal_matrix(n - 1)?;
        let stacked = Mat::vstack(&[&bnd_prev, &diag_prev]);
        let k = matrix::kernel(&stacked);
        if k.cols() > 0 {
            let j = rng.gen_range(0..k.cols());
            b = Element::from_coeffs(base.algebra(), n - 1, k.col(j))?;
        }
    }

    Ok(SeededExtension {
        base,
        x_degree: n,
        b,
        phi,
        twisted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        assert!(example_one(3, 1, 20).is_ok());
        assert!(example_two(3, 1, 20).is_ok());
        assert!(b1(3, 3, 10).is_ok());
        assert!(b2(3, 2, 10).is_ok());
        assert!(b3(3, 3, 10).is_ok());
        assert!(b4(3, 2, 10).is_ok());
        assert!(demo_three_generator(14).is_ok());
    }

    #[test]
    fn synthetic_complex_has_prescribed_homology() {
        let cx = synthetic_complex(3, &[(2, 2, &[1, 3])], 6, 5).unwrap();
        let h = cx.homology_at(2).unwrap();
        assert_eq!(h.free_rank, 2);
        assert_eq!(h.torsion_orders(), vec![1, 3]);
        let h3 = cx.homology_at(3).unwrap();
        assert!(h3.is_zero());
    }

    #[test]
    fn seeded_presentations_are_valid() {
        for seed in 0..4 {
            let h = seeded_primitive_hah(Ring::local(3).unwrap(), &[2, 3], 10, seed, true).unwrap();
            assert!(h.is_primitively_presented());
        }
        let h = seeded_primitive_hah(Ring::fp(5).unwrap(), &[2, 2, 3], 10, 9, false).unwrap();
        assert!(h.is_strict_data());
    }
}

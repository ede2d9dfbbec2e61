//! Orthonormal polynomials on `T^d` for the inner product `d! ∫ f g`.
//!
//! For every degree `ℓ` the Rodrigues polynomials
//! `P_n = ∂^{|n|}/∂x^n [x^n (1 - |x|)^{|n|}]`, `|n| = ℓ`, span the space
//! `V_ℓ` of degree-`ℓ` polynomials orthogonal to all lower degrees. The basis
//! is obtained by exact Gram–Schmidt inside each `V_ℓ`; each element is
//! stored as a primitive integer polynomial `q` together with its exact
//! squared norm, and `P_{ℓ,k} = q / sqrt(<q, q>)` is only formed in floating
//! point.

mod bernstein;
mod gegenbauer;
mod nabla;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use gegenbauer::gegenbauer;
pub(crate) use gegenbauer::gegenbauer_unchecked;
pub use nabla::{apply_nabla, apply_nabla_with, MixedPairs};

use self::bernstein::BarycentricTable;
use crate::error::{check_dim, Error, Result};
use crate::poly::{poly_inner_product, MultiIndex, MultiIndexPolynomial};
use crate::quadrature::GaussChebyshev;
use crate::simplex::SimplexPoint;

pub const BASIS_SCHEMA: u32 = 1;

/// `r_ℓ^d = binom(ℓ + d - 1, ℓ)`, the dimension of `V_ℓ`.
pub fn dim_v(d: usize, degree: usize) -> usize {
    binomial_usize(degree + d - 1, degree)
}

fn binomial_usize(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

fn binomial_big(n: usize, k: usize) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

/// Default degree cap: 12 for `d <= 2`, 8 for `d = 3`, 6 beyond.
pub fn default_max_degree(d: usize) -> usize {
    match d {
        0..=2 => 12,
        3 => 8,
        _ => 6,
    }
}

/// Rodrigues polynomial `∂^{|n|}/∂x^n [x^n (1 - |x|)^{|n|}]`.
pub fn rodrigues(n: &MultiIndex) -> Result<MultiIndexPolynomial> {
    let d = n.dim();
    if d == 0 {
        return Err(Error::invalid("multi-index must have positive dimension"));
    }
    let degree = n.degree() as u32;
    let mut line = MultiIndexPolynomial::one(d);
    for i in 0..d {
        line = line.add_scaled(&MultiIndexPolynomial::variable(d, i), &-BigRational::one())?;
    }
    let mut p = &MultiIndexPolynomial::monomial(n.clone(), BigRational::one()) * &line.pow(degree);
    for (i, &e) in n.exponents().iter().enumerate() {
        for _ in 0..e {
            p = p.derivative(i);
        }
    }
    Ok(p)
}

/// Order in which Gram–Schmidt visits the Rodrigues family of one degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WithinDegreeOrder {
    #[default]
    GradedLex,
    Reversed,
}

/// One basis element: `P = poly / sqrt(norm_sq)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisElement {
    pub poly: MultiIndexPolynomial,
    pub norm_sq: BigRational,
}

impl BasisElement {
    pub fn scale(&self) -> f64 {
        self.norm_sq.to_f64().unwrap_or(f64::NAN).sqrt()
    }
}

/// Orthonormal basis `{P_{ℓ,k}}` of the polynomials of degree at most `L`.
#[derive(Debug, Clone)]
pub struct OrthonormalBasis {
    d: usize,
    max_degree: usize,
    order: WithinDegreeOrder,
    degrees: Vec<Vec<BasisElement>>,
    tables: Vec<BarycentricTable>,
    offsets: Vec<usize>,
}

/// Builds the basis up to degree `max_degree` with graded-lex ordering.
pub fn build_basis(d: usize, max_degree: usize) -> Result<OrthonormalBasis> {
    OrthonormalBasis::build(d, max_degree, WithinDegreeOrder::GradedLex)
}

/// `b_ℓ = (2ℓ + d)/d · binom(2ℓ + 2d - 1, 2ℓ)`, the exact bound
/// `|P_ℓ(x, y)| <= b_ℓ` on `T^d × T^d` for `ℓ >= 1`.
pub fn degree_kernel_bound(d: usize, degree: usize) -> Result<BigRational> {
    if d == 0 || degree == 0 {
        return Err(Error::invalid("degree kernel bound needs d >= 1 and ℓ >= 1"));
    }
    let c = binomial_big(2 * degree + 2 * d - 1, 2 * degree);
    Ok(BigRational::new(BigInt::from(2 * degree + d) * c, BigInt::from(d)))
}

/// `P_ℓ(x, y)` from the Gegenbauer integral representation
///
/// `P_ℓ(x,y) = (2ℓ+d)/(d π^{d+1}) ∫_{[-1,1]^{d+1}} C_{2ℓ}^{(d)}(Σ sqrt(x_i y_i) t_i) ∏ (1-t_i^2)^{-1/2} dt`
///
/// with `x_{d+1} = 1 - |x|`. The integrand has degree `2ℓ` in each `t_i`, so
/// the `(ℓ+1)`-node Gauss–Chebyshev tensor rule is exact.
pub fn degree_kernel_closed(d: usize, degree: usize, x: &SimplexPoint, y: &SimplexPoint) -> Result<f64> {
    if degree == 0 {
        return Err(Error::invalid("closed-form degree kernel needs ℓ >= 1 (P_0 = 1)"));
    }
    check_dim(d, x.dim())?;
    check_dim(d, y.dim())?;
    let a: Vec<f64> = x
        .barycentric()
        .iter()
        .zip(y.barycentric())
        .map(|(xi, yi)| (xi * yi).sqrt())
        .collect();
    let rule = GaussChebyshev::new(degree + 1);
    let lambda = d as f64;
    let mean = rule.tensor_mean(d + 1, |t| {
        let u: f64 = a.iter().zip(t).map(|(ai, ti)| ai * ti).sum();
        gegenbauer_unchecked(2 * degree, lambda, u.clamp(-1.0, 1.0))
    });
    Ok((2 * degree + d) as f64 / d as f64 * mean)
}

impl OrthonormalBasis {
    pub fn build(d: usize, max_degree: usize, order: WithinDegreeOrder) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("basis dimension must be positive"));
        }
        let mut degrees = Vec::with_capacity(max_degree + 1);
        for degree in 0..=max_degree {
            degrees.push(orthogonalize_degree(d, degree, order)?);
        }
        Ok(Self::from_parts(d, order, degrees))
    }

    fn from_parts(d: usize, order: WithinDegreeOrder, degrees: Vec<Vec<BasisElement>>) -> Self {
        let tables: Vec<BarycentricTable> = degrees
            .iter()
            .enumerate()
            .map(|(degree, els)| {
                let rows: Vec<(&MultiIndexPolynomial, f64)> =
                    els.iter().map(|e| (&e.poly, e.scale())).collect();
                BarycentricTable::new(d, degree, &rows)
            })
            .collect();
        let mut offsets = Vec::with_capacity(degrees.len() + 1);
        let mut acc = 0;
        for t in &tables {
            offsets.push(acc);
            acc += t.len();
        }
        offsets.push(acc);
        OrthonormalBasis { d, max_degree: degrees.len() - 1, order, degrees, tables, offsets }
    }

    /// Shared, lazily built basis for `(d, max_degree)` in graded-lex order.
    ///
    /// Reuses any larger basis already built for the same `d`.
    pub fn cached(d: usize, max_degree: usize) -> Result<Arc<Self>> {
        type Slot = Arc<OnceLock<Arc<OrthonormalBasis>>>;
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Slot>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let (slot, larger) = {
            let mut map = cache.lock().expect("basis cache poisoned");
            let larger = map
                .iter()
                .filter(|((dd, ll), s)| *dd == d && *ll > max_degree && s.get().is_some())
                .map(|(_, s)| s.get().cloned().expect("checked"))
                .next();
            (map.entry((d, max_degree)).or_default().clone(), larger)
        };
        if let Some(b) = slot.get() {
            return Ok(b.clone());
        }
        let built = match larger {
            Some(big) => big.truncated(max_degree),
            None => Self::build(d, max_degree, WithinDegreeOrder::GradedLex)?,
        };
        Ok(slot.get_or_init(|| Arc::new(built)).clone())
    }

    /// Copy restricted to degrees `0..=max_degree`.
    pub fn truncated(&self, max_degree: usize) -> Self {
        let keep = max_degree.min(self.max_degree);
        let degrees = self.degrees[..=keep].to_vec();
        let tables = self.tables[..=keep].to_vec();
        let offsets = self.offsets[..=keep + 1].to_vec();
        OrthonormalBasis { d: self.d, max_degree: keep, order: self.order, degrees, tables, offsets }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn order(&self) -> WithinDegreeOrder {
        self.order
    }

    pub fn elements(&self, degree: usize) -> Result<&[BasisElement]> {
        self.degrees
            .get(degree)
            .map(Vec::as_slice)
            .ok_or(Error::OutOfRange { degree, max: self.max_degree })
    }

    /// Total number of basis functions up to `max_degree`.
    pub fn len(&self) -> usize {
        self.offsets[self.max_degree + 1]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Position of degree `ℓ` inside [`Self::eval_all`] output.
    pub fn offset(&self, degree: usize) -> usize {
        self.offsets[degree]
    }

    /// Values `P_{ℓ,k}(x)` for all `ℓ <= L` and `k`, degree-major.
    pub fn eval_all(&self, x: &SimplexPoint) -> Result<Vec<f64>> {
        check_dim(self.d, x.dim())?;
        let bary = x.barycentric();
        let mut out = Vec::with_capacity(self.len());
        for t in &self.tables {
            t.eval_into(&bary, &mut out);
        }
        Ok(out)
    }

    /// Values `P_{ℓ,k}(x)`, `k = 1..r_ℓ`.
    pub fn eval_degree(&self, degree: usize, x: &SimplexPoint) -> Result<Vec<f64>> {
        check_dim(self.d, x.dim())?;
        let table = self.tables.get(degree).ok_or(Error::OutOfRange { degree, max: self.max_degree })?;
        let mut out = Vec::with_capacity(table.len());
        table.eval_into(&x.barycentric(), &mut out);
        Ok(out)
    }

    /// `P_ℓ(x, y) = Σ_k P_{ℓ,k}(x) P_{ℓ,k}(y)` from the basis.
    pub fn degree_kernel_direct(&self, degree: usize, x: &SimplexPoint, y: &SimplexPoint) -> Result<f64> {
        let px = self.eval_degree(degree, x)?;
        let py = self.eval_degree(degree, y)?;
        Ok(px.iter().zip(&py).map(|(a, b)| a * b).sum())
    }

    /// Exact `<P_{ℓ,k}, P_{ℓ',k'}>` when it is rational (always the case for
    /// a correct basis: 0 or 1); `None` otherwise.
    pub fn inner_product(&self, a: (usize, usize), b: (usize, usize)) -> Result<Option<BigRational>> {
        let ea = self.element(a.0, a.1)?;
        let eb = self.element(b.0, b.1)?;
        let ip = poly_inner_product(&ea.poly, &eb.poly)?;
        if ip.is_zero() {
            return Ok(Some(ip));
        }
        let ratio = &ip * &ip / (&ea.norm_sq * &eb.norm_sq);
        if ratio.is_one() {
            let sign = if ip.is_negative() { -BigRational::one() } else { BigRational::one() };
            return Ok(Some(sign));
        }
        Ok(None)
    }

    pub fn element(&self, degree: usize, k: usize) -> Result<&BasisElement> {
        let els = self.elements(degree)?;
        els.get(k).ok_or_else(|| {
            Error::invalid(format!("index k = {k} out of range for degree {degree} ({} elements)", els.len()))
        })
    }

    /// Fourier coefficient `a_k^ℓ(f) = d! ∫ f P_{ℓ,k}`, exact up to a single
    /// final rounding.
    pub fn fourier_coefficient(&self, f: &MultiIndexPolynomial, degree: usize, k: usize) -> Result<f64> {
        let e = self.element(degree, k)?;
        let ip = poly_inner_product(f, &e.poly)?;
        Ok(ip.to_f64().unwrap_or(f64::NAN) / e.scale())
    }

    pub fn to_document(&self) -> BasisDocument {
        BasisDocument {
            schema: BASIS_SCHEMA,
            d: self.d,
            max_degree: self.max_degree,
            order: self.order,
            degrees: self
                .degrees
                .iter()
                .enumerate()
                .map(|(degree, els)| DegreeDocument {
                    degree,
                    elements: els
                        .iter()
                        .map(|e| ElementDocument {
                            norm_sq: e.norm_sq.to_string(),
                            terms: e
                                .poly
                                .terms()
                                .map(|(a, c)| TermDocument { exponents: a.exponents().to_vec(), coeff: c.to_string() })
                                .collect(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_document(doc: &BasisDocument) -> Result<Self> {
        if doc.schema != BASIS_SCHEMA {
            return Err(Error::Parse(format!("unsupported basis schema {}", doc.schema)));
        }
        if doc.d == 0 || doc.degrees.len() != doc.max_degree + 1 {
            return Err(Error::Parse("basis document has inconsistent degree list".into()));
        }
        let mut degrees = Vec::with_capacity(doc.degrees.len());
        for (degree, dd) in doc.degrees.iter().enumerate() {
            if dd.degree != degree || dd.elements.len() != dim_v(doc.d, degree) {
                return Err(Error::Parse(format!("degree {degree} has the wrong number of elements")));
            }
            let mut els = Vec::with_capacity(dd.elements.len());
            for e in &dd.elements {
                let terms = e
                    .terms
                    .iter()
                    .map(|t| Ok((MultiIndex::new(t.exponents.clone()), parse_rational(&t.coeff)?)))
                    .collect::<Result<Vec<_>>>()?;
                let poly = MultiIndexPolynomial::from_terms(doc.d, terms)?;
                if poly.degree() != Some(degree) {
                    return Err(Error::Parse(format!("element of degree {degree} has degree {:?}", poly.degree())));
                }
                let norm_sq = parse_rational(&e.norm_sq)?;
                if !norm_sq.is_positive() {
                    return Err(Error::Parse("squared norm must be positive".into()));
                }
                els.push(BasisElement { poly, norm_sq });
            }
            degrees.push(els);
        }
        Ok(Self::from_parts(doc.d, doc.order, degrees))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_document())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: BasisDocument = serde_json::from_str(s)?;
        Self::from_document(&doc)
    }
}

/// Hex SHA-256 cache key for the graded-lex basis of `(d, L)`.
pub fn cache_key(d: usize, max_degree: usize) -> String {
    let mut h = Sha256::new();
    h.update(format!("simplex-qmc-basis;schema={BASIS_SCHEMA};order=graded-lex;d={d};L={max_degree}"));
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Cache file for the basis of `(d, L)` inside `dir`.
pub fn cache_path(dir: &std::path::Path, d: usize, max_degree: usize) -> std::path::PathBuf {
    dir.join(format!("basis-d{d}-L{max_degree}-{}.json", &cache_key(d, max_degree)[..16]))
}

/// Loads the basis from `dir` if a cache file exists, otherwise builds it
/// and writes the cache file. Returns the basis and whether it was a hit.
pub fn load_or_build(dir: &std::path::Path, d: usize, max_degree: usize) -> Result<(OrthonormalBasis, bool)> {
    let path = cache_path(dir, d, max_degree);
    if path.exists() {
        let text = std::fs::read_to_string(&path)?;
        let basis = OrthonormalBasis::from_json(&text)?;
        if basis.d() == d && basis.max_degree() == max_degree {
            return Ok((basis, true));
        }
        log::warn!("ignoring stale basis cache {}", path.display());
    }
    let basis = build_basis(d, max_degree)?;
    std::fs::create_dir_all(dir)?;
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, basis.to_json()?)?;
    std::fs::rename(&tmp, &path)?;
    Ok((basis, false))
}

fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
        None => Ok(BigRational::from_integer(s.trim().parse().map_err(|_| bad())?)),
    }
}

/// Serialized basis: exact coefficients as `"num/den"` strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisDocument {
    pub schema: u32,
    pub d: usize,
    pub max_degree: usize,
    pub order: WithinDegreeOrder,
    pub degrees: Vec<DegreeDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeDocument {
    pub degree: usize,
    pub elements: Vec<ElementDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementDocument {
    pub norm_sq: String,
    pub terms: Vec<TermDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermDocument {
    pub exponents: Vec<u32>,
    pub coeff: String,
}

/// Gram–Schmidt of the Rodrigues family of one degree.
///
/// Inner products are taken against the top-degree part of the second
/// argument: elements of `V_ℓ` are orthogonal to every lower-degree
/// polynomial, so the lower terms contribute nothing.
fn orthogonalize_degree(d: usize, degree: usize, order: WithinDegreeOrder) -> Result<Vec<BasisElement>> {
    let mut indices = MultiIndex::of_degree(d, degree);
    if order == WithinDegreeOrder::Reversed {
        indices.reverse();
    }
    let family = indices.iter().map(rodrigues).collect::<Result<Vec<_>>>()?;
    let tops: Vec<MultiIndexPolynomial> = family.iter().map(MultiIndexPolynomial::top_degree_part).collect();
    let r = family.len();

    let mut gram = vec![vec![BigRational::zero(); r]; r];
    for i in 0..r {
        for j in i..r {
            let g = poly_inner_product(&family[i], &tops[j])?;
            gram[j][i] = g.clone();
            gram[i][j] = g;
        }
    }

    // u_k = Σ_i coef[k][i] v_i with coef lower triangular, unit diagonal
    let mut coef: Vec<Vec<BigRational>> = Vec::with_capacity(r);
    let mut norms: Vec<BigRational> = Vec::with_capacity(r);
    for k in 0..r {
        let mut ck = vec![BigRational::zero(); r];
        ck[k] = BigRational::one();
        for j in 0..k {
            // <v_k, u_j> / <u_j, u_j>
            let proj: BigRational = (0..=j).map(|i| &coef[j][i] * &gram[k][i]).sum();
            if proj.is_zero() {
                continue;
            }
            let mu = proj / &norms[j];
            for i in 0..=j {
                ck[i] -= &mu * &coef[j][i];
            }
        }
        // <u_k, u_k> = <v_k, u_k> since u_k is orthogonal to every u_j, j < k
        let nk: BigRational = (0..=k).map(|i| &ck[i] * &gram[k][i]).sum();
        if !nk.is_positive() {
            return Err(Error::Internal(format!(
                "Gram–Schmidt produced a non-positive norm at degree {degree}, index {k}"
            )));
        }
        coef.push(ck);
        norms.push(nk);
    }

    let mut out = Vec::with_capacity(r);
    for k in 0..r {
        let mut u = MultiIndexPolynomial::zero(d);
        for i in 0..=k {
            if !coef[k][i].is_zero() {
                u = u.add_scaled(&family[i], &coef[k][i])?;
            }
        }
        if u.is_zero() {
            return Err(Error::Internal(format!("zero vector in Gram–Schmidt at degree {degree}")));
        }
        let (poly, factor) = u.primitive();
        let norm_sq = &norms[k] * &factor * &factor;
        out.push(BasisElement { poly, norm_sq });
    }
    Ok(out)
}

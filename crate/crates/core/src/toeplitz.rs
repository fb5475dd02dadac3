//! Toeplitz matrices in the monomial basis and the operator-algebra checks built on them.

use std::fmt::{self, Write as _};
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{validation, Error, Result};
use crate::gamma::{build_gamma_table, route, GammaTable, Theorem};
use crate::indexcore::{Basis, Partition, Space};
use crate::quad::QuadratureSpec;
use crate::symbolexpr::SymbolSpec;

/// Column-sparse complex matrix over a frozen basis.
///
/// Each column holds its nonzeros sorted by row. Assembled Toeplitz matrices
/// have at most one per column; products and commutators may carry more.
#[derive(Clone, Debug)]
pub struct ToeplitzMatrix {
    basis: Arc<Basis>,
    cols: Vec<Vec<(usize, Complex64)>>,
    shift: Option<Vec<i64>>,
    normalized: bool,
}

impl ToeplitzMatrix {
    pub fn zeros(basis: Arc<Basis>, normalized: bool) -> Self {
        let dim = basis.dim();
        Self { basis, cols: vec![Vec::new(); dim], shift: None, normalized }
    }

    pub fn identity(basis: Arc<Basis>, normalized: bool) -> Self {
        let n = basis.n();
        let cols = (0..basis.dim()).map(|i| vec![(i, Complex64::new(1.0, 0.0))]).collect();
        Self { basis, cols, shift: Some(vec![0; n]), normalized }
    }

    pub fn dim(&self) -> usize {
        self.cols.len()
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    /// Common shift of all nonzeros, when there is one.
    pub fn shift(&self) -> Option<&[i64]> {
        self.shift.as_deref()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn column(&self, col: usize) -> &[(usize, Complex64)] {
        &self.cols[col]
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.cols[col]
            .binary_search_by_key(&row, |e| e.0)
            .map(|i| self.cols[col][i].1)
            .unwrap_or_default()
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    /// `(row, col, value)` in column-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.cols.iter().enumerate().flat_map(|(c, col)| col.iter().map(move |&(r, v)| (r, c, v)))
    }

    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let mut d = vec![vec![Complex64::default(); self.dim()]; self.dim()];
        for (r, c, v) in self.triplets() {
            d[r][c] = v;
        }
        d
    }

    pub fn adjoint(&self) -> Self {
        let mut cols = vec![Vec::new(); self.dim()];
        for (r, c, v) in self.triplets() {
            cols[r].push((c, v.conj()));
        }
        for col in &mut cols {
            col.sort_by_key(|e| e.0);
        }
        let shift = self.shift.as_ref().map(|p| p.iter().map(|x| -x).collect());
        Self { basis: Arc::clone(&self.basis), cols, shift, normalized: self.normalized }
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() || !self.basis.is_compatible(&other.basis) {
            return Err(validation(format!(
                "dimension mismatch: {} ({}) vs {} ({})",
                self.dim(),
                self.basis.space(),
                other.dim(),
                other.basis.space()
            )));
        }
        if self.normalized != other.normalized {
            return Err(validation("cannot combine normalized and raw-monomial matrices"));
        }
        Ok(())
    }

    /// Audit of the shift structure: at most one nonzero per column, sitting at `α + p`.
    pub fn audit_shift_structure(&self) -> Result<()> {
        let b = &self.basis;
        for (c, col) in self.cols.iter().enumerate() {
            if col.len() > 1 {
                return Err(Error::Numerical(format!("column {} has {} nonzeros", b.indices()[c], col.len())));
            }
            if let (Some(&(r, _)), Some(p)) = (col.first(), &self.shift) {
                let want = b.indices()[c].shifted(p).and_then(|t| b.position(&t));
                if want != Some(r) {
                    return Err(Error::Numerical(format!(
                        "column {} has its nonzero in row {} instead of α + p",
                        b.indices()[c],
                        b.indices()[r]
                    )));
                }
            }
        }
        Ok(())
    }
}

fn add_shifts(p: Option<&Vec<i64>>, q: Option<&Vec<i64>>) -> Option<Vec<i64>> {
    Some(p?.iter().zip(q?).map(|(a, b)| a + b).collect())
}

/// Column for `γ(α)` with `β = α + p`. Normalized entries are
/// `γ(α)·‖z^β‖/‖z^α‖`, i.e. `⟨ψ e_α, e_β⟩` in the orthonormal basis.
pub fn assemble(table: &GammaTable, basis: &Arc<Basis>, normalized: bool) -> Result<ToeplitzMatrix> {
    if table.n != basis.n() || table.space != basis.space() || table.len() != basis.dim() {
        return Err(validation(format!(
            "dimension mismatch: table (n={}, {}, {} entries) vs basis (n={}, {}, dim {})",
            table.n,
            table.space,
            table.len(),
            basis.n(),
            basis.space(),
            basis.dim()
        )));
    }
    let p = table.shift.entries();
    let mut cols = vec![Vec::new(); basis.dim()];
    for (c, (alpha, v)) in table.entries.iter().enumerate() {
        let (Some(v), Some(beta)) = (v, alpha.shifted(p)) else { continue };
        let Some(r) = basis.position(&beta) else { continue };
        if *v == Complex64::default() {
            continue;
        }
        let scale = if normalized { (basis.norm_sq(r) / basis.norm_sq(c)).sqrt() } else { 1.0 };
        cols[c].push((r, v * scale));
    }
    Ok(ToeplitzMatrix { basis: Arc::clone(basis), cols, shift: Some(p.to_vec()), normalized })
}

/// `M1 · M2`.
pub fn compose(m1: &ToeplitzMatrix, m2: &ToeplitzMatrix) -> Result<ToeplitzMatrix> {
    m1.check_same(m2)?;
    let mut cols = Vec::with_capacity(m2.dim());
    let mut acc: Vec<Complex64> = vec![Complex64::default(); m1.dim()];
    let mut touched = Vec::new();
    for col in &m2.cols {
        for &(k, b) in col {
            for &(r, a) in &m1.cols[k] {
                if acc[r] == Complex64::default() {
                    touched.push(r);
                }
                acc[r] += a * b;
            }
        }
        touched.sort_unstable();
        touched.dedup();
        let mut out = Vec::with_capacity(touched.len());
        for &r in &touched {
            if acc[r] != Complex64::default() {
                out.push((r, acc[r]));
            }
            acc[r] = Complex64::default();
        }
        touched.clear();
        cols.push(out);
    }
    let shift = add_shifts(m1.shift.as_ref(), m2.shift.as_ref());
    Ok(ToeplitzMatrix { basis: Arc::clone(&m1.basis), cols, shift, normalized: m1.normalized })
}

/// `M1 − M2`.
pub fn subtract(m1: &ToeplitzMatrix, m2: &ToeplitzMatrix) -> Result<ToeplitzMatrix> {
    m1.check_same(m2)?;
    let cols = m1
        .cols
        .iter()
        .zip(&m2.cols)
        .map(|(a, b)| {
            let mut out: Vec<(usize, Complex64)> = a.clone();
            for &(r, v) in b {
                match out.binary_search_by_key(&r, |e| e.0) {
                    Ok(i) => out[i].1 -= v,
                    Err(i) => out.insert(i, (r, -v)),
                }
            }
            out.retain(|e| e.1 != Complex64::default());
            out
        })
        .collect();
    let shift = if m1.shift == m2.shift { m1.shift.clone() } else { None };
    Ok(ToeplitzMatrix { basis: Arc::clone(&m1.basis), cols, shift, normalized: m1.normalized })
}

/// `M1·M2 − M2·M1`.
pub fn commutator(m1: &ToeplitzMatrix, m2: &ToeplitzMatrix) -> Result<ToeplitzMatrix> {
    subtract(&compose(m1, m2)?, &compose(m2, m1)?)
}

pub fn frobenius_norm(m: &ToeplitzMatrix) -> f64 {
    m.cols.iter().flatten().fold(0.0, |acc, e| acc + e.1.norm_sqr()).sqrt()
}

/// `‖assemble(γ_ψ*) − assemble(γ_ψ)^*‖_F`.
pub fn adjoint_defect(psi: &SymbolSpec, basis: &Arc<Basis>, k: &Partition, spec: &QuadratureSpec) -> Result<f64> {
    let t = assemble(&build_gamma_table(psi, &basis.space(), k, spec)?, basis, true)?;
    let ts = assemble(&build_gamma_table(&psi.conj(), &basis.space(), k, spec)?, basis, true)?;
    Ok(frobenius_norm(&subtract(&ts, &t.adjoint())?))
}

/// Matrix of `psi` on `space` in the orthonormal basis.
pub fn operator(psi: &SymbolSpec, basis: &Arc<Basis>, k: &Partition, spec: &QuadratureSpec) -> Result<ToeplitzMatrix> {
    assemble(&build_gamma_table(psi, &basis.space(), k, spec)?, basis, true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Equal,
    Unequal,
    Inconclusive,
    Degenerate,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Equal => "EQUAL",
            Verdict::Unequal => "UNEQUAL",
            Verdict::Inconclusive => "INCONCLUSIVE",
            Verdict::Degenerate => "DEGENERATE",
        })
    }
}

pub const FUSION_EQUAL_TOL: f64 = 1e-10;
pub const FUSION_UNEQUAL_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FusionReport {
    pub defect: f64,
    pub scale: f64,
    pub verdict: Verdict,
}

impl FusionReport {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            if self.defect == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            self.defect / self.scale
        }
    }
}

fn verdict(defect: f64, scale: f64) -> Verdict {
    if scale == 0.0 && defect == 0.0 {
        return Verdict::Degenerate;
    }
    let rel = if scale == 0.0 { f64::INFINITY } else { defect / scale };
    if rel <= FUSION_EQUAL_TOL {
        Verdict::Equal
    } else if rel > FUSION_UNEQUAL_TOL {
        Verdict::Unequal
    } else {
        Verdict::Inconclusive
    }
}

/// `‖T_{aΠψ_j} − T_a Π T_{ψ_j}‖_F` against `‖T_{aΠψ_j}‖_F`.
pub fn fusion_defect(
    a: &SymbolSpec,
    factors: &[SymbolSpec],
    basis: &Arc<Basis>,
    k: &Partition,
    spec: &QuadratureSpec,
) -> Result<FusionReport> {
    if !matches!(a, SymbolSpec::QuasiRadial { .. }) {
        return Err(validation(format!("fusion needs a quasi-radial first factor, got {}", a.kind_name())));
    }
    for f in factors {
        let sv = f.shift_vector(k)?;
        if sv.entries().iter().any(|&x| x != 0) && sv.mode() != crate::indexcore::ShiftMode::BlockwiseZero {
            return Err(validation(format!("fusion factor shift {sv} must be blockwise-zero")));
        }
    }
    let mut leaves = vec![a.clone()];
    leaves.extend(factors.iter().cloned());
    let whole = operator(&SymbolSpec::Product(leaves), basis, k, spec)?;
    let mut prod = operator(a, basis, k, spec)?;
    for f in factors {
        prod = compose(&prod, &operator(f, basis, k, spec)?)?;
    }
    let defect = frobenius_norm(&subtract(&whole, &prod)?);
    let scale = frobenius_norm(&whole);
    Ok(FusionReport { defect, scale, verdict: verdict(defect, scale) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Family {
    Radial,
    Multi,
    Single,
    Extended,
    Ball,
}

fn family(psi: &SymbolSpec, space: &Space) -> Result<Family> {
    Ok(match route(psi, space)? {
        Theorem::QuasiRadial => Family::Radial,
        Theorem::MultiSphere => Family::Multi,
        Theorem::SingleSphere => Family::Single,
        Theorem::Extended => {
            if psi.leaves().iter().any(|l| matches!(l, SymbolSpec::SingleSphere { .. })) {
                Family::Single
            } else {
                Family::Extended
            }
        }
        Theorem::ExtendedBall => Family::Ball,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CommutationReport {
    pub max_relative: f64,
    /// `(i, j, ‖[T_i, T_j]‖_F / (‖T_i‖_F ‖T_j‖_F))` per pair.
    pub pairs: Vec<(usize, usize, f64)>,
}

/// Max pairwise relative commutator norm over one covered family.
pub fn commutation_suite(
    symbols: &[SymbolSpec],
    basis: &Arc<Basis>,
    k: &Partition,
    spec: &QuadratureSpec,
) -> Result<CommutationReport> {
    if symbols.len() < 2 {
        return Err(validation("a commutation suite needs at least two symbols"));
    }
    let space = basis.space();
    let mut fam = None;
    for (i, s) in symbols.iter().enumerate() {
        let f = family(s, &space)?;
        if f == Family::Radial {
            continue;
        }
        match fam {
            None => fam = Some(f),
            Some(g) if g == f => {}
            Some(g) => {
                return Err(validation(format!(
                    "symbol {i} ({}) is in the {f:?} family but the suite is {g:?}; one covered family per suite",
                    s.kind_name()
                )))
            }
        }
    }
    let ops: Vec<ToeplitzMatrix> = symbols.iter().map(|s| operator(s, basis, k, spec)).collect::<Result<_>>()?;
    let norms: Vec<f64> = ops.iter().map(frobenius_norm).collect();
    let mut pairs = Vec::new();
    let mut max_relative: f64 = 0.0;
    for i in 0..ops.len() {
        for j in i + 1..ops.len() {
            let c = frobenius_norm(&commutator(&ops[i], &ops[j])?);
            let denom = norms[i] * norms[j];
            let rel = if denom == 0.0 { 0.0 } else { c / denom };
            max_relative = max_relative.max(rel);
            pairs.push((i, j, rel));
        }
    }
    Ok(CommutationReport { max_relative, pairs })
}

/// Coordinate-list export: header, then `row col re im` per nonzero.
pub fn export_matrix(m: &ToeplitzMatrix) -> String {
    let b = m.basis();
    let space = match b.space() {
        Space::Projective { m } => format!("m={m}"),
        Space::Ball { lambda, cap } => format!("lambda={lambda} cap={cap}"),
    };
    let shift = match m.shift() {
        Some(p) => fmt_shift(p),
        None => "mixed".into(),
    };
    let mut s = format!(
        "# n={} {space} dim={} shift={shift} order=graded-lex normalized={}\n",
        b.n(),
        m.dim(),
        m.is_normalized()
    );
    for (r, c, v) in m.triplets() {
        let _ = writeln!(s, "{r} {c} {:e} {:e}", v.re, v.im);
    }
    s
}

pub(crate) fn fmt_shift(p: &[i64]) -> String {
    let parts: Vec<String> = p.iter().map(i64::to_string).collect();
    format!("({})", parts.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indexcore::MultiIndex;
    use crate::symbolexpr::{parse, Expr};

    fn basis(n: usize, m: u32) -> Arc<Basis> {
        Arc::new(Basis::new(n, Space::Projective { m }).unwrap())
    }

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn unit_is_identity() {
        let b = basis(2, 2);
        let k = Partition::single(2).unwrap();
        let t = operator(&SymbolSpec::unit(), &b, &k, &spec()).unwrap();
        assert_eq!(t.dim(), 6);
        for i in 0..6 {
            assert!((t.get(i, i) - 1.0).norm() < 1e-12);
        }
        assert_eq!(t.nnz(), 6);
        assert!(frobenius_norm(&commutator(&ToeplitzMatrix::identity(b.clone(), true), &t).unwrap()) == 0.0);
    }

    #[test]
    fn phase_has_three_nonzeros() {
        let b = basis(2, 2);
        let k = Partition::single(2).unwrap();
        let t = operator(&SymbolSpec::Phase { p: vec![1, -1] }, &b, &k, &spec()).unwrap();
        assert_eq!(t.nnz(), 3);
        t.audit_shift_structure().unwrap();
        let cols: Vec<&MultiIndex> = (0..6).filter(|&c| !t.column(c).is_empty()).map(|c| &b.indices()[c]).collect();
        let want = [MultiIndex::new(vec![0, 1]), MultiIndex::new(vec![0, 2]), MultiIndex::new(vec![1, 1])];
        assert_eq!(cols, want.iter().collect::<Vec<_>>());
    }

    #[test]
    fn quasi_radial_diagonal() {
        let b = basis(2, 2);
        let k = Partition::single(2).unwrap();
        let a = SymbolSpec::QuasiRadial { a: parse("r1^2/(1+r1^2)").unwrap() };
        let t = operator(&a, &b, &k, &spec()).unwrap();
        let want = [0.4, 0.6, 0.6, 0.8, 0.8, 0.8];
        for (i, w) in want.iter().enumerate() {
            assert!((t.get(i, i).re - w).abs() < 1e-12);
        }
    }

    #[test]
    fn frobenius_and_shift_composition() {
        let b = basis(1, 1);
        let mut d = ToeplitzMatrix::zeros(b, true);
        d.cols[0].push((0, Complex64::new(3.0, 0.0)));
        d.cols[1].push((1, Complex64::new(0.0, 4.0)));
        assert_eq!(frobenius_norm(&d), 5.0);

        let b = basis(3, 3);
        let k = Partition::single(3).unwrap();
        let p = operator(&SymbolSpec::Phase { p: vec![1, -1, 0] }, &b, &k, &spec()).unwrap();
        let q = operator(&SymbolSpec::Phase { p: vec![0, 1, -1] }, &b, &k, &spec()).unwrap();
        let pq = compose(&p, &q).unwrap();
        assert_eq!(pq.shift(), Some(&[1, 0, -1][..]));
        pq.audit_shift_structure().unwrap();
    }

    #[test]
    fn adjoint_consistency() {
        let k = Partition::new(vec![2, 1]).unwrap();
        let b = basis(3, 3);
        let psi = SymbolSpec::Product(vec![
            SymbolSpec::QuasiRadial { a: parse("r1^2/(1+r1^2+r2^2)").unwrap() },
            SymbolSpec::MultiSphere { block: 0, b: parse("s1^2").unwrap(), p: vec![1, -1] },
        ]);
        assert!(adjoint_defect(&psi, &b, &k, &spec()).unwrap() < 1e-10);
        let single = SymbolSpec::SingleSphere { block: 0, b: parse("sig1^2").unwrap(), p: vec![1, -1] };
        assert!(adjoint_defect(&single, &b, &k, &spec()).unwrap() < 1e-10);
    }

    #[test]
    fn multisphere_fusion_and_commutation() {
        let k = Partition::new(vec![2, 1]).unwrap();
        let b = basis(3, 3);
        let a = SymbolSpec::QuasiRadial { a: parse("r1^2/(1+r1^2+r2^2)").unwrap() };
        let b1 = SymbolSpec::MultiSphere { block: 0, b: parse("s1^2").unwrap(), p: vec![1, -1] };
        let b2 = SymbolSpec::MultiSphere { block: 1, b: Expr::one(), p: vec![0] };
        let f = fusion_defect(&a, &[b1.clone(), b2.clone()], &b, &k, &spec()).unwrap();
        assert_eq!(f.verdict, Verdict::Equal, "{f:?}");
        let c = commutation_suite(&[a, b1, b2], &b, &k, &spec()).unwrap();
        assert!(c.max_relative <= 1e-10);
    }

    #[test]
    fn mixed_family_rejected() {
        let k = Partition::new(vec![2, 1]).unwrap();
        let b = basis(3, 2);
        let s = SymbolSpec::SingleSphere { block: 0, b: Expr::one(), p: vec![1, -1] };
        let e = SymbolSpec::Extended { block: 0, b: Expr::one(), p: vec![1, -1] };
        assert!(matches!(commutation_suite(&[s, e], &b, &k, &spec()), Err(Error::Validation(_))));
    }

    #[test]
    fn degenerate_fusion() {
        // the only admissible α for p = (2,−2) at m = 1 do not exist
        let k = Partition::single(2).unwrap();
        let b = basis(2, 1);
        let a = SymbolSpec::QuasiRadial { a: Expr::one() };
        let f = SymbolSpec::MultiSphere { block: 0, b: Expr::one(), p: vec![2, -2] };
        let r = fusion_defect(&a, &[f], &b, &k, &spec()).unwrap();
        assert_eq!(r.verdict, Verdict::Degenerate);
    }

    #[test]
    fn export_format() {
        let b = basis(1, 1);
        let t = ToeplitzMatrix::identity(b, true);
        let s = export_matrix(&t);
        assert_eq!(s, "# n=1 m=1 dim=2 shift=(0) order=graded-lex normalized=true\n0 0 1e0 0e0\n1 1 1e0 0e0\n");
    }
}

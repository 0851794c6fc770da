//! Dense matrices of the dyadic and singular-integral operators over the
//! orthonormal finest-cell basis `e_i = |cell|^{-1/2} χ_{cell_i}`.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::dyadic::{DyadicGrid, DyadicInterval, DyadicSystem, Span, TruncationWindow, MAX_CELLS};
use crate::error::{LabError, Result};
use crate::format;
use crate::symbols::{haar_coefficients, Symbol};
use crate::weights::Weight;

/// The cell basis a matrix is expressed in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Basis {
    pub grid: DyadicGrid,
    pub window: TruncationWindow,
    pub n: usize,
}

impl Basis {
    pub fn of(sys: &DyadicSystem) -> Self {
        Basis { grid: sys.grid(), window: *sys.window(), n: sys.n_cells() }
    }
}

#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    matrix: DMatrix<f64>,
    basis: Basis,
    /// Weight of the source space, `"1"` when unweighted.
    pub source: String,
    /// Weight of the target space.
    pub target: String,
    pub label: String,
}

impl OperatorMatrix {
    pub fn new(matrix: DMatrix<f64>, basis: Basis, label: impl Into<String>) -> Result<Self> {
        if matrix.nrows() != basis.n || matrix.ncols() != basis.n {
            return Err(LabError::BasisMismatch(format!(
                "{}x{} matrix for a basis of {} cells",
                matrix.nrows(),
                matrix.ncols(),
                basis.n
            )));
        }
        Ok(OperatorMatrix { matrix, basis, source: "1".into(), target: "1".into(), label: label.into() })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn n(&self) -> usize {
        self.basis.n
    }

    pub fn frobenius(&self) -> f64 {
        self.matrix.norm()
    }

    fn check(&self, other: &OperatorMatrix) -> Result<()> {
        if self.basis != other.basis {
            return Err(LabError::BasisMismatch(format!("{} vs {}", self.label, other.label)));
        }
        Ok(())
    }

    fn derived(&self, matrix: DMatrix<f64>, label: String) -> OperatorMatrix {
        OperatorMatrix { matrix, basis: self.basis, source: self.source.clone(), target: self.target.clone(), label }
    }

    pub fn transpose(&self) -> OperatorMatrix {
        OperatorMatrix {
            matrix: self.matrix.transpose(),
            basis: self.basis,
            source: self.target.clone(),
            target: self.source.clone(),
            label: format!("({})^T", self.label),
        }
    }

    /// `self · other`
    pub fn compose(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.check(other)?;
        Ok(self.derived(&self.matrix * &other.matrix, format!("{}*{}", self.label, other.label)))
    }

    pub fn add(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.check(other)?;
        Ok(self.derived(&self.matrix + &other.matrix, format!("{}+{}", self.label, other.label)))
    }

    pub fn sub(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        self.check(other)?;
        Ok(self.derived(&self.matrix - &other.matrix, format!("{}-{}", self.label, other.label)))
    }

    pub fn scale(&self, c: f64) -> OperatorMatrix {
        self.derived(&self.matrix * c, format!("{c}*{}", self.label))
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let x = nalgebra::DVector::from_column_slice(v);
        (&self.matrix * x).as_slice().to_vec()
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        let m = &self.matrix;
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                if r != c && m[(r, c)] != 0.0 {
                    return None;
                }
            }
        }
        Some((0..m.nrows()).map(|i| m[(i, i)]).collect())
    }

    /// Flat little-endian binary: `N: u64`, `j_max: i64`, window `lo, hi: f64`,
    /// then `N²` row-major `f64`.
    pub fn write_binary(&self, mut w: impl Write) -> Result<()> {
        let n = self.n();
        w.write_all(&(n as u64).to_le_bytes())?;
        w.write_all(&(self.basis.window.j_max as i64).to_le_bytes())?;
        w.write_all(&self.basis.window.lo.to_le_bytes())?;
        w.write_all(&self.basis.window.hi.to_le_bytes())?;
        let mut buf = Vec::with_capacity(8 * n * n);
        for r in 0..n {
            for c in 0..n {
                buf.extend_from_slice(&self.matrix[(r, c)].to_le_bytes());
            }
        }
        w.write_all(&buf)?;
        Ok(())
    }

    /// Inverse of [`write_binary`](Self::write_binary); returns the header and the matrix.
    pub fn read_binary(mut r: impl Read) -> Result<(u64, i64, f64, f64, DMatrix<f64>)> {
        let mut b8 = [0u8; 8];
        let mut next = |r: &mut dyn Read| -> Result<[u8; 8]> {
            r.read_exact(&mut b8)?;
            Ok(b8)
        };
        let n = u64::from_le_bytes(next(&mut r)?);
        let j_max = i64::from_le_bytes(next(&mut r)?);
        let lo = f64::from_le_bytes(next(&mut r)?);
        let hi = f64::from_le_bytes(next(&mut r)?);
        if n as usize > MAX_CELLS {
            return Err(LabError::InvalidMatrix(format!("header claims N = {n}")));
        }
        let n = n as usize;
        let mut data = vec![0u8; 8 * n * n];
        r.read_exact(&mut data)?;
        let values: Vec<f64> = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok((n as u64, j_max, lo, hi, DMatrix::from_row_slice(n, n, &values)))
    }

    /// Row-major CSV without header; intended for small `N`.
    pub fn to_csv(&self) -> String {
        let n = self.n();
        let mut out = String::new();
        for r in 0..n {
            let row: Vec<String> = (0..n).map(|c| format::sig12(self.matrix[(r, c)])).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Sparse vector in the cell basis.
type Sparse = Vec<(usize, f64)>;

/// `Σ_t u_t v_tᵀ` (plus `diag` when given), assembled row by row so the
/// summation order is fixed regardless of thread count.
fn assemble(n: usize, terms: &[(Sparse, Sparse)], diag: Option<f64>) -> DMatrix<f64> {
    let mut by_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (t, (u, _)) in terms.iter().enumerate() {
        for &(r, ur) in u {
            by_row[r].push((t, ur));
        }
    }
    let rows: Vec<Vec<f64>> = by_row
        .par_iter()
        .enumerate()
        .map(|(r, entries)| {
            let mut row = vec![0.0; n];
            if let Some(d) = diag {
                row[r] = d;
            }
            for &(t, ur) in entries {
                for &(c, vc) in &terms[t].1 {
                    row[c] += ur * vc;
                }
            }
            row
        })
        .collect();
    DMatrix::from_row_iterator(n, n, rows.into_iter().flatten())
}

fn check_size(sys: &DyadicSystem) -> Result<()> {
    if sys.n_cells() > MAX_CELLS {
        return Err(LabError::Infeasible(format!("{} cells exceeds the cap of {MAX_CELLS}", sys.n_cells())));
    }
    Ok(())
}

/// `h_I` in the cell basis.
pub fn haar_vector(sys: &DyadicSystem, iv: &DyadicInterval) -> Sparse {
    let s = sys.cell_len().sqrt();
    sys.haar_values(iv).into_iter().map(|(c, v)| (c, v * s)).collect()
}

/// `1_I / |I|` in the cell basis.
fn average_vector(sys: &DyadicSystem, iv: &DyadicInterval) -> Sparse {
    let v = sys.cell_len().sqrt() / iv.len();
    sys.cell_range(iv).map(|c| (c, v)).collect()
}

fn scaled(v: Sparse, c: f64) -> Sparse {
    v.into_iter().map(|(i, x)| (i, x * c)).collect()
}

/// `Π_b = Σ_I b̂(I) h_I ⊗ 1_I/|I|`.
pub fn paraproduct(b: &Symbol, sys: &DyadicSystem) -> Result<OperatorMatrix> {
    check_size(sys)?;
    let coeffs = haar_coefficients(b, sys);
    let terms: Vec<(Sparse, Sparse)> = coeffs
        .iter()
        .filter(|(_, c)| *c != 0.0)
        .map(|(i, c)| (scaled(haar_vector(sys, i), c), average_vector(sys, i)))
        .collect();
    OperatorMatrix::new(assemble(sys.n_cells(), &terms, None), Basis::of(sys), format!("Pi[{}]", b.label()))
}

/// `Π*_b = Σ_I b̂(I) 1_I/|I| ⊗ h_I`.
pub fn paraproduct_adjoint(b: &Symbol, sys: &DyadicSystem) -> Result<OperatorMatrix> {
    let mut m = paraproduct(b, sys)?.transpose();
    m.label = format!("Pi*[{}]", b.label());
    Ok(m)
}

/// `f ↦ Π_f b = Σ_I ⟨b⟩_I h_I ⊗ h_I`, the Haar-diagonal part of `M_b`.
pub fn diagonal_paraproduct(b: &Symbol, sys: &DyadicSystem) -> Result<OperatorMatrix> {
    check_size(sys)?;
    let terms: Vec<(Sparse, Sparse)> = sys
        .haar_intervals()
        .iter()
        .map(|i| {
            let avg = b.integral(i.span()) / i.len();
            let h = haar_vector(sys, i);
            (scaled(h.clone(), avg), h)
        })
        .collect();
    OperatorMatrix::new(assemble(sys.n_cells(), &terms, None), Basis::of(sys), format!("Lambda[{}]", b.label()))
}

/// `T_ε = Σ_I ε_I h_I ⊗ h_I` on the Haar span, identity on its complement.
/// `eps` is aligned with `sys.haar_intervals()`.
pub fn haar_multiplier(eps: &[f64], sys: &DyadicSystem) -> Result<OperatorMatrix> {
    check_size(sys)?;
    let intervals = sys.haar_intervals();
    if eps.len() != intervals.len() {
        return Err(LabError::config(format!("{} signs for {} intervals", eps.len(), intervals.len())));
    }
    let terms: Vec<(Sparse, Sparse)> = intervals
        .iter()
        .zip(eps)
        .filter(|(_, &e)| e != 1.0)
        .map(|(i, &e)| {
            let h = haar_vector(sys, i);
            (scaled(h.clone(), e - 1.0), h)
        })
        .collect();
    OperatorMatrix::new(assemble(sys.n_cells(), &terms, Some(1.0)), Basis::of(sys), "T_eps")
}

/// `Ш h_I = (h_{I₋} − h_{I₊})/√2` for `j ≤ j_max − 2`, zero elsewhere.
pub fn petermichl_shift(sys: &DyadicSystem) -> Result<OperatorMatrix> {
    check_size(sys)?;
    let j_top = sys.window().j_max - 2;
    let terms: Vec<(Sparse, Sparse)> = sys
        .haar_intervals()
        .iter()
        .filter(|i| i.j <= j_top)
        .map(|i| {
            let (l, r) = i.children();
            let mut u = scaled(haar_vector(sys, &l), std::f64::consts::FRAC_1_SQRT_2);
            u.extend(scaled(haar_vector(sys, &r), -std::f64::consts::FRAC_1_SQRT_2));
            (u, haar_vector(sys, i))
        })
        .collect();
    OperatorMatrix::new(assemble(sys.n_cells(), &terms, None), Basis::of(sys), "Sha")
}

/// `R_b = Σ_I b̂(I)|I|^{-1/2} k_I ⊗ h_I` with `k_I = h_{I₊} − h_{I₋}`, over `j ≤ j_max − 2`.
pub fn remainder_matrix(b: &Symbol, sys: &DyadicSystem) -> Result<OperatorMatrix> {
    check_size(sys)?;
    let coeffs = haar_coefficients(b, sys);
    let j_top = sys.window().j_max - 2;
    let terms: Vec<(Sparse, Sparse)> = coeffs
        .iter()
        .filter(|(i, c)| i.j <= j_top && *c != 0.0)
        .map(|(i, c)| {
            let a = c / i.len().sqrt();
            let (l, r) = i.children();
            let mut k = scaled(haar_vector(sys, &r), a);
            k.extend(scaled(haar_vector(sys, &l), -a));
            (k, haar_vector(sys, i))
        })
        .collect();
    OperatorMatrix::new(assemble(sys.n_cells(), &terms, None), Basis::of(sys), format!("R[{}]", b.label()))
}

/// `k_I = h_{I₊} − h_{I₋}` in the cell basis.
pub fn k_vector(sys: &DyadicSystem, iv: &DyadicInterval) -> Sparse {
    let (l, r) = iv.children();
    let mut k = haar_vector(sys, &r);
    k.extend(scaled(haar_vector(sys, &l), -1.0));
    k
}

/// `∬_{[0,1)²} ds dt / (m + s − t) = Δ²G(m)` with `G(t) = t(ln|t| − 1)`.
pub fn hilbert_cell_integral(m: i64) -> f64 {
    match m {
        0 => 0.0,
        1 => 2.0 * std::f64::consts::LN_2,
        -1 => -2.0 * std::f64::consts::LN_2,
        _ => {
            let x = m.unsigned_abs() as f64;
            let v = x * (-1.0 / (x * x)).ln_1p() + 2.0 * (1.0 / x).atanh();
            v * m.signum() as f64
        }
    }
}

/// `⟨H e_j, e_i⟩` for the kernel `1/(x − y)` on the standard cells of `window`.
pub fn hilbert(window: &TruncationWindow) -> Result<OperatorMatrix> {
    let sys = DyadicSystem::new(DyadicGrid::Standard, *window)?;
    check_size(&sys)?;
    let n = sys.n_cells();
    let table: Vec<f64> = (0..n as i64).map(hilbert_cell_integral).collect();
    let m = DMatrix::from_fn(n, n, |i, j| {
        let d = i as i64 - j as i64;
        if d >= 0 {
            table[d as usize]
        } else {
            -table[(-d) as usize]
        }
    });
    OperatorMatrix::new(m, Basis::of(&sys), "H")
}

/// Diagonal of cell averages of `b` over the basis cells.
pub fn multiplication(b: &Symbol, sys: &DyadicSystem) -> Result<OperatorMatrix> {
    check_size(sys)?;
    let values = cell_averages(b, sys);
    OperatorMatrix::new(DMatrix::from_diagonal(&values.into()), Basis::of(sys), format!("M[{}]", b.label()))
}

pub fn cell_averages(b: &Symbol, sys: &DyadicSystem) -> Vec<f64> {
    sys.cells().iter().map(|c| b.integral(c.span()) / c.len()).collect()
}

/// Cell averages of a weight over a basis.
#[derive(Clone, Debug, PartialEq)]
pub struct CellWeights {
    pub values: Vec<f64>,
    pub label: String,
}

impl CellWeights {
    pub fn of(w: &Weight, basis: &Basis) -> Result<Self> {
        let sys = DyadicSystem::new(basis.grid, basis.window)?;
        let values = sys
            .cells()
            .iter()
            .map(|c| w.average(c.span()))
            .collect::<Result<Vec<_>>>()?;
        if let Some(i) = values.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(LabError::DegenerateWeight(format!(
                "{} has average {} on cell {}",
                w.label(),
                values[i],
                sys.cells()[i].id()
            )));
        }
        Ok(CellWeights { values, label: w.label() })
    }

    /// Cellwise reciprocal, the exact inverse of conjugation by `self`.
    pub fn reciprocal(&self) -> Self {
        CellWeights { values: self.values.iter().map(|v| v.recip()).collect(), label: format!("1/({})", self.label) }
    }
}

/// `D_{λ^{1/2}} T D_{μ^{-1/2}}` with cell averages of `λ` and `μ`.
pub fn weight_conjugate(t: &OperatorMatrix, lambda: &Weight, mu: &Weight) -> Result<OperatorMatrix> {
    let l = CellWeights::of(lambda, t.basis())?;
    let m = CellWeights::of(mu, t.basis())?;
    weight_conjugate_cells(t, &l, &m)
}

pub fn weight_conjugate_cells(t: &OperatorMatrix, lambda: &CellWeights, mu: &CellWeights) -> Result<OperatorMatrix> {
    let n = t.n();
    if lambda.values.len() != n || mu.values.len() != n {
        return Err(LabError::BasisMismatch("cell weights do not match the basis".into()));
    }
    let l: Vec<f64> = lambda.values.iter().map(|v| v.sqrt()).collect();
    let m: Vec<f64> = mu.values.iter().map(|v| v.sqrt().recip()).collect();
    let mut out = t.matrix.clone();
    for c in 0..n {
        for r in 0..n {
            out[(r, c)] *= l[r] * m[c];
        }
    }
    Ok(OperatorMatrix {
        matrix: out,
        basis: t.basis,
        source: mu.label.clone(),
        target: lambda.label.clone(),
        label: t.label.clone(),
    })
}

/// `AB − BA`; entrywise when `A` is diagonal.
pub fn commutator(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<OperatorMatrix> {
    a.check(b)?;
    let label = format!("[{},{}]", a.label, b.label);
    if let Some(d) = a.diagonal() {
        let m = DMatrix::from_fn(a.n(), a.n(), |i, j| (d[i] - d[j]) * b.matrix[(i, j)]);
        return Ok(a.derived(m, label));
    }
    Ok(a.derived(&a.matrix * &b.matrix - &b.matrix * &a.matrix, label))
}

/// `[M_b, H]` on the standard cells of `window`.
pub fn hilbert_commutator(b: &Symbol, window: &TruncationWindow) -> Result<OperatorMatrix> {
    let sys = DyadicSystem::new(DyadicGrid::Standard, *window)?;
    commutator(&multiplication(b, &sys)?, &hilbert(window)?)
}

/// Which commutator expansion to test.
#[derive(Clone, Debug)]
pub enum Expansion {
    /// `[b, T_ε] = Π_b T_ε − T_ε Π_b + Π*_b T_ε − T_ε Π*_b`
    HaarMultiplier(Vec<f64>),
    /// Six-term expansion of `[b, Ш]`.
    Shift,
}

#[derive(Clone, Debug)]
pub struct ResidualNorms {
    pub operator: f64,
    pub frobenius: f64,
}

#[derive(Clone, Debug)]
pub struct ExpansionResidual {
    /// Residual of the expansion as written, with `R_b` built from `k_I`.
    pub literal: ResidualNorms,
    /// Residual of `[Π_b + Π*_b + Λ_b, T]`, the decomposition `M_b = Π_b + Π*_b + Λ_b`
    /// plus a coarse mean term that commutes with `T`.
    pub decomposition: ResidualNorms,
    /// `‖[M_b, T]‖` on the same test functions, for scale.
    pub lhs: ResidualNorms,
    pub test_cells: usize,
}

fn restricted_norms(m: &DMatrix<f64>, cols: &[usize]) -> ResidualNorms {
    let sub = m.select_columns(cols);
    let frobenius = sub.norm();
    let operator = if frobenius == 0.0 { 0.0 } else { sub.singular_values().max() };
    ResidualNorms { operator, frobenius }
}

/// Norms of `LHS − RHS` on test functions supported in the cells whose midpoints
/// lie in `region`.
pub fn expansion_residual(
    b: &Symbol,
    expansion: &Expansion,
    sys: &DyadicSystem,
    region: Span,
) -> Result<ExpansionResidual> {
    let mb = multiplication(b, sys)?;
    let pi = paraproduct(b, sys)?;
    let pis = pi.transpose();
    let lam = diagonal_paraproduct(b, sys)?;
    let t = match expansion {
        Expansion::HaarMultiplier(eps) => haar_multiplier(eps, sys)?,
        Expansion::Shift => petermichl_shift(sys)?,
    };
    let cols: Vec<usize> = sys
        .cells()
        .iter()
        .enumerate()
        .filter(|(_, c)| {
            let m = c.midpoint();
            m >= region.lo && m < region.hi
        })
        .map(|(i, _)| i)
        .collect();
    if cols.is_empty() {
        return Err(LabError::config("no test cells inside the residual region"));
    }
    let lhs = commutator(&mb, &t)?;
    let pi_part = commutator(&pi, &t)?.add(&commutator(&pis, &t)?)?;
    let literal = match expansion {
        Expansion::HaarMultiplier(_) => pi_part.clone(),
        // Ш Π_b − Π_b Ш + Ш Π*_b − Π*_b Ш + R_b
        Expansion::Shift => pi_part.scale(-1.0).add(&remainder_matrix(b, sys)?)?,
    };
    let decomposition = pi_part.add(&commutator(&lam, &t)?)?;
    Ok(ExpansionResidual {
        literal: restricted_norms(lhs.sub(&literal)?.matrix(), &cols),
        decomposition: restricted_norms(lhs.sub(&decomposition)?.matrix(), &cols),
        lhs: restricted_norms(lhs.matrix(), &cols),
        test_cells: cols.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::SmoothKind;
    use crate::weights::DEFAULT_CENTER;
    use approx::assert_abs_diff_eq;

    fn sys(grid: DyadicGrid, lo: f64, hi: f64, j_min: i32, j_max: i32) -> DyadicSystem {
        DyadicSystem::new(grid, TruncationWindow::new(lo, hi, j_min, j_max).unwrap()).unwrap()
    }

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    #[test]
    fn paraproduct_maps_indicator_to_haar() {
        let s = sys(DyadicGrid::Standard, 0.0, 1.0, 0, 4);
        let i0 = DyadicInterval::new(DyadicGrid::Standard, 1, 1);
        let b = Symbol::haar(vec![(i0, 1.0)]);
        let pi = paraproduct(&b, &s).unwrap();
        let chi: Vec<f64> = (0..s.n_cells())
            .map(|c| if s.cell_range(&i0).contains(&c) { s.cell_len().sqrt() } else { 0.0 })
            .collect();
        let out = pi.apply(&chi);
        let mut want = vec![0.0; s.n_cells()];
        for (c, v) in haar_vector(&s, &i0) {
            want[c] = v;
        }
        for (a, b) in out.iter().zip(&want) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        assert_eq!(max_abs(paraproduct(&Symbol::constant(3.0), &s).unwrap().matrix()), 0.0);
    }

    #[test]
    fn multiplier_involution() {
        let s = sys(DyadicGrid::ThirdShift, 0.0, 2.0, -1, 5);
        let n = s.haar_intervals().len();
        let eps: Vec<f64> = (0..n).map(|k| if k % 3 == 0 { -1.0 } else { 1.0 }).collect();
        let t = haar_multiplier(&eps, &s).unwrap();
        let sq = t.compose(&t).unwrap();
        let id = DMatrix::<f64>::identity(s.n_cells(), s.n_cells());
        assert!(max_abs(&(sq.matrix() - id)) < 1e-12);
        let plus = haar_multiplier(&vec![1.0; n], &s).unwrap();
        assert_eq!(plus.matrix(), &DMatrix::<f64>::identity(s.n_cells(), s.n_cells()));
    }

    #[test]
    fn shift_display_rule() {
        let s = sys(DyadicGrid::Standard, 0.0, 1.0, 0, 4);
        let sha = petermichl_shift(&s).unwrap();
        let top = DyadicInterval::new(DyadicGrid::Standard, 0, 0);
        let mut h = vec![0.0; s.n_cells()];
        for (c, v) in haar_vector(&s, &top) {
            h[c] = v;
        }
        let out = sha.apply(&h);
        let (l, r) = top.children();
        let mut want = vec![0.0; s.n_cells()];
        for (c, v) in haar_vector(&s, &l) {
            want[c] += v / 2f64.sqrt();
        }
        for (c, v) in haar_vector(&s, &r) {
            want[c] -= v / 2f64.sqrt();
        }
        for (a, b) in out.iter().zip(&want) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        // deepest scale is killed
        let deep = DyadicInterval::new(DyadicGrid::Standard, 3, 5);
        let mut h = vec![0.0; s.n_cells()];
        for (c, v) in haar_vector(&s, &deep) {
            h[c] = v;
        }
        assert!(sha.apply(&h).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn hilbert_entries() {
        assert_abs_diff_eq!(hilbert_cell_integral(-1), -2.0 * 2f64.ln(), epsilon = 1e-15);
        let g = |t: f64| if t == 0.0 { 0.0 } else { t * (t.abs().ln() - 1.0) };
        for m in 2..40i64 {
            let x = m as f64;
            let direct = g(x + 1.0) - 2.0 * g(x) + g(x - 1.0);
            assert_abs_diff_eq!(hilbert_cell_integral(m), direct, epsilon = 1e-12);
            assert_eq!(hilbert_cell_integral(-m), -hilbert_cell_integral(m));
        }
        let w = TruncationWindow::new(0.0, 2.0, 0, 0).unwrap();
        let h = hilbert(&w).unwrap();
        // cells [0,1) and [1,2): x in cell 0, y in cell 1
        assert_abs_diff_eq!(h.matrix()[(0, 1)], -2.0 * 2f64.ln(), epsilon = 1e-15);
        let w = TruncationWindow::new(-1.0, 1.0, 0, 5).unwrap();
        let h = hilbert(&w).unwrap();
        assert_eq!(h.matrix(), &(-h.matrix().transpose()));
    }

    #[test]
    fn k_vectors() {
        let s = sys(DyadicGrid::Standard, 0.0, 1.0, 0, 4);
        let iv = DyadicInterval::new(DyadicGrid::Standard, 1, 0);
        let k = k_vector(&s, &iv);
        let norm2: f64 = k.iter().map(|(_, v)| v * v).sum();
        assert_abs_diff_eq!(norm2, 2.0, epsilon = 1e-14);
        let h = haar_vector(&s, &iv);
        let dot: f64 = k.iter().map(|(c, v)| v * h.iter().find(|(d, _)| d == c).map_or(0.0, |x| x.1)).sum();
        assert_abs_diff_eq!(dot, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn conjugation_round_trip() {
        let s = sys(DyadicGrid::Standard, -1.0, 1.0, 0, 5);
        let h = hilbert(s.window()).unwrap();
        let lam = CellWeights::of(&Weight::power(0.5, DEFAULT_CENTER), h.basis()).unwrap();
        let mu = CellWeights::of(&Weight::power(-0.25, DEFAULT_CENTER), h.basis()).unwrap();
        let once = weight_conjugate_cells(&h, &lam, &mu).unwrap();
        let back = weight_conjugate_cells(&once, &lam.reciprocal(), &mu.reciprocal()).unwrap();
        assert!(max_abs(&(back.matrix() - h.matrix())) < 1e-12);
        let same = weight_conjugate(&h, &Weight::one(), &Weight::one()).unwrap();
        assert_eq!(same.matrix(), h.matrix());
    }

    #[test]
    fn multiplier_expansion_is_exact() {
        let s = sys(DyadicGrid::Standard, -2.0, 2.0, -1, 6);
        let n = s.haar_intervals().len();
        let eps: Vec<f64> = (0..n).map(|k| if (k * 7) % 5 < 2 { -1.0 } else { 1.0 }).collect();
        let b = Symbol::sine(1);
        let r = expansion_residual(&b, &Expansion::HaarMultiplier(eps), &s, Span::new(0.0, 1.0)).unwrap();
        assert!(r.lhs.frobenius > 1e-3);
        assert!(r.literal.frobenius < 1e-12 * r.lhs.frobenius.max(1.0), "{:?}", r.literal);
        let c = Symbol::constant(2.0);
        let eps = vec![-1.0; n];
        let r = expansion_residual(&c, &Expansion::HaarMultiplier(eps), &s, Span::new(0.0, 1.0)).unwrap();
        assert_eq!(r.lhs.frobenius, 0.0);
    }

    #[test]
    fn shift_decomposition_exact_literal_not() {
        let s = sys(DyadicGrid::Standard, -2.0, 2.0, -1, 6);
        let b = Symbol::smooth(SmoothKind::Parabola);
        let r = expansion_residual(&b, &Expansion::Shift, &s, Span::new(0.0, 1.0)).unwrap();
        assert!(r.decomposition.frobenius < 1e-12 * r.lhs.frobenius.max(1.0));
        assert!(r.literal.frobenius > 0.1 * r.lhs.frobenius);
    }

    #[test]
    fn binary_round_trip() {
        let s = sys(DyadicGrid::Standard, -1.0, 1.0, 0, 3);
        let h = hilbert(s.window()).unwrap();
        let mut buf = Vec::new();
        h.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 32 + 8 * 16 * 16);
        let (n, j, lo, hi, m) = OperatorMatrix::read_binary(buf.as_slice()).unwrap();
        assert_eq!((n, j, lo, hi), (16, 3, -1.0, 1.0));
        assert_eq!(&m, h.matrix());
    }
}

// SPDX-License-Identifier: Apache-2.0

//! Covariance-matrix algebra for zero-mean Gaussian states.
//!
//! Quadratures are ordered `(X₁, Y₁, X₂, Y₂, …)` with `[X, Y] = 2i`, so the
//! vacuum covariance is the identity and every physical state has symplectic
//! eigenvalues `≥ 1`. The matrix `Ω` used throughout is block-diagonal with
//! blocks `[[0, 1], [-1, 0]]`; with this scaling the uncertainty relation reads
//! `V + iΩ ≥ 0` and the vacuum has symplectic spectrum exactly one.

use std::collections::HashSet;

use nalgebra::{DMatrix, Matrix2, Matrix4, SymmetricEigen};

use crate::error::{Error, Result};

/// Quadrature variance of the vacuum in the `[X, Y] = 2i` convention.
pub const VACUUM_VARIANCE: f64 = 1.0;

/// Relative tolerance for covariance symmetry.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Symplectic eigenvalues may undershoot one by this much before a state is
/// rejected as unphysical.
pub const PHYSICALITY_TOL: f64 = 1e-8;

/// Tolerance on the smallest eigenvalue of the complete-positivity matrix.
pub const CP_TOL: f64 = 1e-10;

/// Negative radicands in the two-mode eigenvalue formula down to this value
/// are treated as zero.
pub const RADICAND_TOL: f64 = 1e-10;

/// Block-diagonal symplectic form for `n_modes` modes.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

fn is_symmetric(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    let scale = m.amax().max(1.0);
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > rel_tol * scale {
                return false;
            }
        }
    }
    true
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Quadrature row indices `(2m, 2m+1)` for each listed mode.
pub(crate) fn quadrature_indices(modes: &[usize]) -> Vec<usize> {
    modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect()
}

/// Zero-mean multimode Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    cov: DMatrix<f64>,
    labels: Vec<String>,
}

impl GaussianState {
    /// Validated constructor: symmetric, physical, uniquely labelled.
    pub fn new(cov: DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        let state = Self::from_parts(cov, labels)?;
        let min = state
            .symplectic_eigenvalues()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min < 1.0 - PHYSICALITY_TOL {
            return Err(Error::NotPhysical(format!(
                "smallest symplectic eigenvalue {min:.12}"
            )));
        }
        Ok(state)
    }

    /// Structural checks only (shape, symmetry, labels). Physicality is the
    /// caller's responsibility.
    pub(crate) fn from_parts(cov: DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        if cov.nrows() != cov.ncols() {
            return Err(Error::Dimension(format!(
                "covariance is {}x{}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if cov.nrows() != 2 * labels.len() {
            return Err(Error::Dimension(format!(
                "{} labels for a {}x{} covariance",
                labels.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        if labels.is_empty() {
            return Err(Error::Modes("a state needs at least one mode".into()));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::Modes(format!("duplicate label `{l}`")));
            }
        }
        if !is_symmetric(&cov, SYMMETRY_TOL) {
            return Err(Error::NotPhysical("covariance is not symmetric".into()));
        }
        Ok(Self { cov, labels })
    }

    pub fn vacuum<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let n = labels.len();
        Self::from_parts(DMatrix::identity(2 * n, 2 * n) * VACUUM_VARIANCE, labels)
    }

    pub fn n_modes(&self) -> usize {
        self.labels.len()
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn into_cov(self) -> DMatrix<f64> {
        self.cov
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn mode_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Tensor product `self ⊗ other`.
    pub fn product(&self, other: &GaussianState) -> Result<Self> {
        let (n1, n2) = (self.cov.nrows(), other.cov.nrows());
        let mut cov = DMatrix::zeros(n1 + n2, n1 + n2);
        cov.view_mut((0, 0), (n1, n1)).copy_from(&self.cov);
        cov.view_mut((n1, n1), (n2, n2)).copy_from(&other.cov);
        let labels = self.labels.iter().chain(&other.labels).cloned().collect();
        Self::from_parts(cov, labels)
    }

    /// Partial trace onto the listed modes, in the listed order.
    pub fn reduced(&self, modes: &[usize]) -> Result<Self> {
        self.check_modes(modes, false)?;
        let idx = quadrature_indices(modes);
        let cov = DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.cov[(idx[i], idx[j])]);
        let labels = modes.iter().map(|&m| self.labels[m].clone()).collect();
        Self::from_parts(cov, labels)
    }

    /// 2x2 block between modes `i` and `j`.
    pub fn block(&self, i: usize, j: usize) -> Matrix2<f64> {
        Matrix2::from_fn(|r, c| self.cov[(2 * i + r, 2 * j + c)])
    }

    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        symplectic_eigenvalues(&self.cov)
    }

    fn check_modes(&self, modes: &[usize], proper: bool) -> Result<()> {
        if modes.is_empty() {
            return Err(Error::Modes("empty mode selection".into()));
        }
        let mut seen = HashSet::new();
        for &m in modes {
            if m >= self.n_modes() {
                return Err(Error::Modes(format!(
                    "mode {m} out of range for {} modes",
                    self.n_modes()
                )));
            }
            if !seen.insert(m) {
                return Err(Error::Modes(format!("mode {m} selected twice")));
            }
        }
        if proper && modes.len() == self.n_modes() {
            return Err(Error::Modes("selection must be a proper subset".into()));
        }
        Ok(())
    }
}

/// `n_modes` vacuum modes labelled `m0, m1, …`.
pub fn vacuum_state(n_modes: usize) -> Result<GaussianState> {
    if n_modes == 0 {
        return Err(Error::parameter("n_modes", "must be at least 1"));
    }
    GaussianState::vacuum((0..n_modes).map(|k| format!("m{k}")))
}

/// Single mechanical mode in a thermal state with mean occupation `n_occ`.
pub fn thermal_mech_state(n_occ: f64) -> Result<GaussianState> {
    if !(n_occ >= 0.0) || !n_occ.is_finite() {
        return Err(Error::parameter("n_occ", format!("{n_occ} is not a nonnegative number")));
    }
    let v = (2.0 * n_occ + 1.0) * VACUUM_VARIANCE;
    GaussianState::from_parts(DMatrix::identity(2, 2) * v, vec!["mech".into()])
}

/// Linear Gaussian channel `V → A V Aᵀ + N`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianChannel {
    transfer: DMatrix<f64>,
    noise: DMatrix<f64>,
}

impl GaussianChannel {
    /// Validated constructor. Rejects channels violating
    /// `N + iΩ_out − i A Ω_in Aᵀ ≥ 0`.
    pub fn new(transfer: DMatrix<f64>, noise: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = transfer.shape();
        if rows % 2 != 0 || cols % 2 != 0 || rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!("transfer matrix is {rows}x{cols}")));
        }
        if noise.shape() != (rows, rows) {
            return Err(Error::Dimension(format!(
                "noise is {}x{}, expected {rows}x{rows}",
                noise.nrows(),
                noise.ncols()
            )));
        }
        if !is_symmetric(&noise, SYMMETRY_TOL.max(1e-12)) {
            return Err(Error::Dimension("noise matrix is not symmetric".into()));
        }
        let mut noise = noise;
        symmetrize(&mut noise);
        let channel = Self { transfer, noise };
        let min = channel.cp_min_eigenvalue();
        let scale = channel.noise.amax().max(channel.transfer.amax().powi(2)).max(1.0);
        if min < -CP_TOL * scale {
            return Err(Error::NotCompletelyPositive { min_eigenvalue: min });
        }
        Ok(channel)
    }

    pub fn identity(n_modes: usize) -> Self {
        let d = 2 * n_modes;
        Self {
            transfer: DMatrix::identity(d, d),
            noise: DMatrix::zeros(d, d),
        }
    }

    /// Noiseless channel from a symplectic matrix.
    pub fn symplectic(transfer: DMatrix<f64>) -> Result<Self> {
        let d = transfer.nrows();
        let ch = Self::new(transfer, DMatrix::zeros(d, d))?;
        Ok(ch)
    }

    pub fn transfer(&self) -> &DMatrix<f64> {
        &self.transfer
    }

    pub fn noise(&self) -> &DMatrix<f64> {
        &self.noise
    }

    pub fn n_in(&self) -> usize {
        self.transfer.ncols() / 2
    }

    pub fn n_out(&self) -> usize {
        self.transfer.nrows() / 2
    }

    /// `self` followed by `next`: `(A₂A₁, A₂N₁A₂ᵀ + N₂)`.
    pub fn then(&self, next: &GaussianChannel) -> Result<Self> {
        if next.n_in() != self.n_out() {
            return Err(Error::Dimension(format!(
                "cannot compose {}-mode output with {}-mode input",
                self.n_out(),
                next.n_in()
            )));
        }
        let transfer = &next.transfer * &self.transfer;
        let noise = &next.transfer * &self.noise * next.transfer.transpose() + &next.noise;
        Self::new(transfer, noise)
    }

    /// `A Ω Aᵀ = Ω` and `N = 0` within `tol`.
    pub fn is_symplectic(&self, tol: f64) -> bool {
        if self.n_in() != self.n_out() || self.noise.amax() > tol {
            return false;
        }
        let omega = symplectic_form(self.n_in());
        (&self.transfer * &omega * self.transfer.transpose() - omega).amax() <= tol
    }

    /// Smallest eigenvalue of the Hermitian matrix `N + iΩ − iAΩAᵀ`, via its
    /// real 2d x 2d embedding.
    fn cp_min_eigenvalue(&self) -> f64 {
        let d = self.transfer.nrows();
        let omega_out = symplectic_form(self.n_out());
        let omega_in = symplectic_form(self.n_in());
        let im = omega_out - &self.transfer * omega_in * self.transfer.transpose();
        let mut big = DMatrix::zeros(2 * d, 2 * d);
        big.view_mut((0, 0), (d, d)).copy_from(&self.noise);
        big.view_mut((d, d), (d, d)).copy_from(&self.noise);
        big.view_mut((0, d), (d, d)).copy_from(&(-&im));
        big.view_mut((d, 0), (d, d)).copy_from(&im);
        symmetrize(&mut big);
        SymmetricEigen::new(big).eigenvalues.min()
    }
}

/// Pure loss: `A = √T·I`, `N = (1 − T)·I` on `2·n_modes` quadratures.
pub fn loss_channel(transmittance: f64, n_modes: usize) -> Result<GaussianChannel> {
    if !(0.0..=1.0).contains(&transmittance) {
        return Err(Error::parameter(
            "T_ls",
            format!("{transmittance} is outside [0, 1]"),
        ));
    }
    if n_modes == 0 {
        return Err(Error::parameter("n_modes", "must be at least 1"));
    }
    let d = 2 * n_modes;
    Ok(GaussianChannel {
        transfer: DMatrix::identity(d, d) * transmittance.sqrt(),
        noise: DMatrix::identity(d, d) * ((1.0 - transmittance) * VACUUM_VARIANCE),
    })
}

/// Apply `channel` to the listed modes of `state`.
///
/// For square channels the modes keep their positions. When the channel
/// changes the number of modes, the selected modes are removed and the
/// output modes are appended after the untouched ones, labelled
/// `<first selected label>:out<k>`.
pub fn apply_channel(
    state: &GaussianState,
    channel: &GaussianChannel,
    modes: &[usize],
) -> Result<GaussianState> {
    state.check_modes(modes, false)?;
    if channel.n_in() != modes.len() {
        return Err(Error::Dimension(format!(
            "channel acts on {} modes, {} selected",
            channel.n_in(),
            modes.len()
        )));
    }
    if channel.n_out() == channel.n_in() {
        let mut cov = state.cov.clone();
        apply_local(&mut cov, &quadrature_indices(modes), &channel.transfer, Some(&channel.noise));
        symmetrize(&mut cov);
        return GaussianState::from_parts(cov, state.labels.clone());
    }

    let kept: Vec<usize> = (0..state.n_modes()).filter(|m| !modes.contains(m)).collect();
    let kept_idx = quadrature_indices(&kept);
    let sel_idx = quadrature_indices(modes);
    let (nk, nout) = (kept_idx.len(), channel.transfer.nrows());
    let a = &channel.transfer;

    let v_kk = DMatrix::from_fn(nk, nk, |i, j| state.cov[(kept_idx[i], kept_idx[j])]);
    let v_ks = DMatrix::from_fn(nk, sel_idx.len(), |i, j| state.cov[(kept_idx[i], sel_idx[j])]);
    let v_ss = DMatrix::from_fn(sel_idx.len(), sel_idx.len(), |i, j| {
        state.cov[(sel_idx[i], sel_idx[j])]
    });
    let cross = v_ks * a.transpose();
    let out = a * v_ss * a.transpose() + &channel.noise;

    let mut cov = DMatrix::zeros(nk + nout, nk + nout);
    cov.view_mut((0, 0), (nk, nk)).copy_from(&v_kk);
    cov.view_mut((0, nk), (nk, nout)).copy_from(&cross);
    cov.view_mut((nk, 0), (nout, nk)).copy_from(&cross.transpose());
    cov.view_mut((nk, nk), (nout, nout)).copy_from(&out);
    symmetrize(&mut cov);

    let stem = &state.labels[modes[0]];
    let labels = kept
        .iter()
        .map(|&m| state.labels[m].clone())
        .chain((0..channel.n_out()).map(|k| format!("{stem}:out{k}")))
        .collect();
    GaussianState::from_parts(cov, labels)
}

/// In-place `V → A V Aᵀ + N` where `A` and `N` act on the quadrature rows
/// `idx` and the identity elsewhere.
pub(crate) fn apply_local(
    cov: &mut DMatrix<f64>,
    idx: &[usize],
    transfer: &DMatrix<f64>,
    noise: Option<&DMatrix<f64>>,
) {
    let k = idx.len();
    let n = cov.nrows();
    debug_assert_eq!(transfer.shape(), (k, k));

    let rows = DMatrix::from_fn(k, n, |i, j| cov[(idx[i], j)]);
    let rows = transfer * rows;
    for (i, &r) in idx.iter().enumerate() {
        for j in 0..n {
            cov[(r, j)] = rows[(i, j)];
        }
    }
    let cols = DMatrix::from_fn(n, k, |i, j| cov[(i, idx[j])]);
    let cols = cols * transfer.transpose();
    for (j, &c) in idx.iter().enumerate() {
        cov.column_mut(c).copy_from(&cols.column(j));
    }
    if let Some(noise) = noise {
        for (i, &r) in idx.iter().enumerate() {
            for (j, &c) in idx.iter().enumerate() {
                cov[(r, c)] += noise[(i, j)];
            }
        }
    }
}

/// Momentum reversal (`Y → −Y`) on the listed modes.
pub fn partial_transpose(state: &GaussianState, modes: &[usize]) -> Result<DMatrix<f64>> {
    state.check_modes(modes, true)?;
    Ok(partial_transpose_matrix(&state.cov, modes))
}

pub(crate) fn partial_transpose_matrix(cov: &DMatrix<f64>, modes: &[usize]) -> DMatrix<f64> {
    let mut out = cov.clone();
    for &m in modes {
        let y = 2 * m + 1;
        for j in 0..out.ncols() {
            out[(y, j)] = -out[(y, j)];
        }
        for i in 0..out.nrows() {
            out[(i, y)] = -out[(i, y)];
        }
    }
    out
}

/// Symplectic spectrum, one value per mode, sorted ascending.
///
/// Computed as the singular values of `V^{1/2} Ω V^{1/2}` (each appears
/// twice); with the unit-scaled `Ω` the vacuum maps to all ones.
pub fn symplectic_eigenvalues(cov: &DMatrix<f64>) -> Result<Vec<f64>> {
    let d = cov.nrows();
    if d != cov.ncols() || !d.is_multiple_of(2) || d == 0 {
        return Err(Error::Dimension(format!(
            "symplectic spectrum needs an even square matrix, got {}x{}",
            cov.nrows(),
            cov.ncols()
        )));
    }
    let mut sym = cov.clone();
    symmetrize(&mut sym);
    let eig = SymmetricEigen::new(sym);
    let sqrt_d = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| x.max(0.0).sqrt()));
    let root = &eig.eigenvectors * sqrt_d * eig.eigenvectors.transpose();
    let m = &root * symplectic_form(d / 2) * &root;
    let mut gram = m.transpose() * m;
    symmetrize(&mut gram);
    let mut nu2: Vec<f64> = SymmetricEigen::new(gram).eigenvalues.iter().copied().collect();
    nu2.sort_by(f64::total_cmp);
    Ok(nu2
        .chunks(2)
        .map(|pair| (0.5 * (pair[0] + pair[1])).max(0.0).sqrt())
        .collect())
}

fn to_matrix4(cov: &DMatrix<f64>) -> Result<Matrix4<f64>> {
    if cov.shape() != (4, 4) {
        return Err(Error::Dimension(format!(
            "two-mode covariance must be 4x4, got {}x{}",
            cov.nrows(),
            cov.ncols()
        )));
    }
    Ok(Matrix4::from_fn(|i, j| cov[(i, j)]))
}

/// Smallest symplectic eigenvalue of the partial transpose of a two-mode
/// covariance. Takes the original (untransposed) matrix; the transpose on
/// the second mode happens here.
///
/// Uses `ν₋² = (Σ − √(Σ² − 4 det V))/2`. When the two transposed
/// eigenvalues nearly coincide the result carries an absolute error of
/// order `ε/(ν₊² − ν₋²)`.
pub fn nu_minus(two_mode_cov: &DMatrix<f64>) -> Result<f64> {
    let v = to_matrix4(two_mode_cov)?;
    let a = v.fixed_view::<2, 2>(0, 0).determinant();
    let b = v.fixed_view::<2, 2>(2, 2).determinant();
    let c = v.fixed_view::<2, 2>(0, 2).determinant();
    // Momentum reversal on B flips the sign of det C and leaves det V alone.
    let sigma = a + b - 2.0 * c;
    let det = v.determinant();
    let mut radicand = sigma * sigma - 4.0 * det;
    if radicand < 0.0 {
        if radicand >= -RADICAND_TOL * sigma.abs().max(1.0).powi(2) {
            radicand = 0.0;
        } else {
            return Err(Error::NotPhysical(format!(
                "negative radicand {radicand:.3e} in two-mode spectrum"
            )));
        }
    }
    let nu2 = 0.5 * (sigma - radicand.sqrt());
    if nu2 < -RADICAND_TOL * sigma.abs().max(1.0) {
        return Err(Error::NotPhysical(format!("negative squared eigenvalue {nu2:.3e}")));
    }
    Ok(nu2.max(0.0).sqrt())
}

/// `−log₂ ν₋` without the clamp at zero. Positive exactly when the state
/// is entangled; used as a smooth optimization target.
pub fn signed_log_negativity(two_mode_cov: &DMatrix<f64>) -> Result<f64> {
    Ok(-nu_minus(two_mode_cov)?.log2())
}

/// `E_N = max(0, −log₂ ν₋)`.
pub fn log_negativity(two_mode_cov: &DMatrix<f64>) -> Result<f64> {
    Ok(signed_log_negativity(two_mode_cov)?.max(0.0))
}

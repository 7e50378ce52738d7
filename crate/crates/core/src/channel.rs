//! Joint-correlated MIMO channel model.
//!
//! A user's `M x N_k` channel is `H = U_r * H~ * U_t^H` with coupling matrix
//! `H~ = Hbar + P (.) Hhat`, where `Hbar` is a deterministic line-of-sight part
//! (nonzero only on the leading diagonal), `P` holds nonnegative scattering
//! amplitudes and `Hhat` has i.i.d. CN(0, 1) entries. The average power
//! coupling `Omega = |Hbar|^2 + P^2` is normalized so that it sums to `N_k * M`.
//!
//! The i.i.d. Rayleigh channel (`Hbar = 0`, `P = 1`, identity unitaries) and
//! the Kronecker model (rank-one `P`) are special cases.

use alloc::format;
use alloc::vec::Vec;
use nalgebra::SymmetricEigen;
use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::Rng;

use crate::error::{invalid_param, Error, Result};
use crate::linalg::{self, CMatrix, RMatrix, ZERO};

const UNITARY_TOL: f64 = 1e-10;
const POWER_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelMode {
    Iid,
    Correlated,
}

impl ChannelMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ChannelMode::Iid => "iid",
            ChannelMode::Correlated => "correlated",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "iid" => Some(ChannelMode::Iid),
            "correlated" => Some(ChannelMode::Correlated),
            _ => None,
        }
    }
}

/// Deterministic law of one user's channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    /// Receive antennas.
    pub m: usize,
    /// Transmit antennas.
    pub n_k: usize,
    pub hbar: CMatrix,
    pub p: RMatrix,
    pub u_t: CMatrix,
    pub u_r: CMatrix,
    pub mode: ChannelMode,
}

/// Average power coupling between receive and transmit eigenmodes.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    pub omega: RMatrix,
}

impl CouplingMatrix {
    pub fn total(&self) -> f64 {
        self.omega.iter().sum()
    }
}

/// Diagonal of the transmit correlation eigenvalue matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitEigenvalues {
    pub lambda_t: Vec<f64>,
}

impl TransmitEigenvalues {
    pub fn sum(&self) -> f64 {
        self.lambda_t.iter().sum()
    }
}

/// One draw of the channel, keeping both the coupling matrix and the full channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h_tilde: CMatrix,
    pub h: CMatrix,
}

impl ChannelRealization {
    /// Rebuilds `U_r * H~ * U_t^H`.
    pub fn reconstruct(&self, spec: &ChannelSpec) -> CMatrix {
        &spec.u_r * &self.h_tilde * spec.u_t.adjoint()
    }
}

impl ChannelSpec {
    /// Spatially white Rayleigh channel.
    pub fn iid(m: usize, n_k: usize) -> Result<Self> {
        check_dims(m, n_k)?;
        Ok(Self {
            m,
            n_k,
            hbar: CMatrix::zeros(m, n_k),
            p: RMatrix::from_element(m, n_k, 1.0),
            u_t: linalg::identity(n_k),
            u_r: linalg::identity(m),
            mode: ChannelMode::Iid,
        })
    }

    /// Builds a spec and checks every invariant, power constraint included.
    pub fn new(
        hbar: CMatrix,
        p: RMatrix,
        u_t: CMatrix,
        u_r: CMatrix,
        mode: ChannelMode,
    ) -> Result<Self> {
        let spec = Self {
            m: hbar.nrows(),
            n_k: hbar.ncols(),
            hbar,
            p,
            u_t,
            u_r,
            mode,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Shape, nonnegativity, LOS placement and unitarity checks.
    pub fn validate_structure(&self) -> Result<()> {
        check_dims(self.m, self.n_k)?;
        let (m, n) = (self.m, self.n_k);
        if self.hbar.shape() != (m, n) {
            return Err(Error::InvalidSpec(format!(
                "Hbar is {:?}, expected {m}x{n}",
                self.hbar.shape()
            )));
        }
        if self.p.shape() != (m, n) {
            return Err(Error::InvalidSpec(format!(
                "P is {:?}, expected {m}x{n}",
                self.p.shape()
            )));
        }
        if self.u_t.shape() != (n, n) || self.u_r.shape() != (m, m) {
            return Err(Error::InvalidSpec("unitary factor has the wrong order".into()));
        }
        if self.p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidSpec("P must be finite and nonnegative".into()));
        }
        for j in 0..n {
            for i in 0..m {
                let v = self.hbar[(i, j)];
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::InvalidSpec("Hbar must be finite".into()));
                }
                if i != j && v != ZERO {
                    return Err(Error::InvalidSpec(format!(
                        "LOS entry at ({i},{j}) lies off the leading diagonal"
                    )));
                }
            }
        }
        if linalg::unitarity_defect(&self.u_t) > UNITARY_TOL {
            return Err(Error::InvalidSpec("U_t is not unitary".into()));
        }
        if linalg::unitarity_defect(&self.u_r) > UNITARY_TOL {
            return Err(Error::InvalidSpec("U_r is not unitary".into()));
        }
        if self.mode == ChannelMode::Iid {
            let white = self.hbar.iter().all(|&v| v == ZERO)
                && self.p.iter().all(|&v| v == 1.0)
                && self.u_t == linalg::identity(n)
                && self.u_r == linalg::identity(m);
            if !white {
                return Err(Error::InvalidSpec(
                    "iid mode requires Hbar = 0, P = 1 and identity unitaries".into(),
                ));
            }
        }
        Ok(())
    }

    /// Structural checks plus the power constraint `sum(Omega) = N_k * M`.
    pub fn validate(&self) -> Result<()> {
        self.validate_structure()?;
        let total = build_omega(self)?.total();
        let target = (self.m * self.n_k) as f64;
        if ((total - target) / target).abs() > POWER_TOL {
            return Err(Error::InvalidSpec(format!(
                "coupling power {total} differs from N_k*M = {target}"
            )));
        }
        Ok(())
    }
}

fn check_dims(m: usize, n_k: usize) -> Result<()> {
    if m == 0 {
        return Err(invalid_param("m", "need at least one receive antenna"));
    }
    if n_k == 0 {
        return Err(invalid_param("n_k", "need at least one transmit antenna"));
    }
    Ok(())
}

/// `Omega = Hbar (.) conj(Hbar) + P (.) P`.
pub fn build_omega(spec: &ChannelSpec) -> Result<CouplingMatrix> {
    if spec.hbar.shape() != spec.p.shape() {
        return Err(Error::InvalidSpec(format!(
            "Hbar {:?} and P {:?} differ in shape",
            spec.hbar.shape(),
            spec.p.shape()
        )));
    }
    if spec.p.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::InvalidSpec("P must be nonnegative".into()));
    }
    let omega = RMatrix::from_fn(spec.p.nrows(), spec.p.ncols(), |i, j| {
        spec.hbar[(i, j)].norm_sqr() + spec.p[(i, j)] * spec.p[(i, j)]
    });
    Ok(CouplingMatrix { omega })
}

/// Rescales `Hbar` and `P` by a common factor so that `sum(Omega) = N_k * M`.
pub fn normalize_spec(spec: &ChannelSpec) -> Result<ChannelSpec> {
    let total = build_omega(spec)?.total();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::DegenerateSpec);
    }
    let target = (spec.hbar.nrows() * spec.hbar.ncols()) as f64;
    let scale = (target / total).sqrt();
    let mut out = spec.clone();
    if scale != 1.0 {
        out.hbar *= Complex64::new(scale, 0.0);
        out.p *= scale;
    }
    Ok(out)
}

/// Column sums of `Omega`.
pub fn transmit_eigenvalues(omega: &CouplingMatrix) -> TransmitEigenvalues {
    let lambda_t = omega.omega.column_iter().map(|c| c.iter().sum()).collect();
    TransmitEigenvalues { lambda_t }
}

/// Row sums of `Omega`: the receive-side eigenvalues.
pub fn receive_eigenvalues(omega: &CouplingMatrix) -> Vec<f64> {
    omega.omega.row_iter().map(|r| r.iter().sum()).collect()
}

/// Draws `H~ = Hbar + P (.) Hhat` only.
pub fn sample_tilde<R: Rng + ?Sized>(spec: &ChannelSpec, rng: &mut R) -> CMatrix {
    let mut h = spec.hbar.clone();
    for j in 0..spec.n_k {
        for i in 0..spec.m {
            let amp = spec.p[(i, j)];
            let z = linalg::complex_normal(rng, 1.0);
            if amp != 0.0 {
                h[(i, j)] += z * amp;
            }
        }
    }
    h
}

/// Draws one channel realization.
///
/// The same number of normals is consumed whatever `P` holds, so two specs of
/// equal shape stay aligned on a shared stream.
pub fn sample_coupling<R: Rng + ?Sized>(spec: &ChannelSpec, rng: &mut R) -> ChannelRealization {
    let h_tilde = sample_tilde(spec, rng);
    let h = &spec.u_r * &h_tilde * spec.u_t.adjoint();
    ChannelRealization { h_tilde, h }
}

/// Eigen-decomposition of the exponential correlation matrix `rho^|i-j|`,
/// eigenvalues sorted in decreasing order with matching eigenvector columns.
pub fn exp_correlation_eigen(n: usize, rho: f64) -> (Vec<f64>, RMatrix) {
    if rho == 0.0 {
        return (alloc::vec![1.0; n], RMatrix::identity(n, n));
    }
    let r = RMatrix::from_fn(n, n, |i, j| rho.powi((i as i32 - j as i32).abs()));
    let eig = SymmetricEigen::new(r);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();
    let vectors = RMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Parametric correlated channel.
///
/// Both sides use exponential correlation; the scattering part is the
/// Kronecker coupling `P^2 = lambda_r lambda_t^T / (1 + K)` and the LOS part
/// puts the remaining fraction `K / (1 + K)` of the total power evenly on the
/// leading diagonal. The unitaries are the correlation eigenvector bases.
pub fn make_exp_correlated_spec(
    m: usize,
    n_k: usize,
    rho_r: f64,
    rho_t: f64,
    rician_k: f64,
) -> Result<ChannelSpec> {
    check_dims(m, n_k)?;
    for (name, rho) in [("rho_r", rho_r), ("rho_t", rho_t)] {
        if !(0.0..1.0).contains(&rho) {
            return Err(invalid_param(name, format!("{rho} is outside [0, 1)")));
        }
    }
    if !(rician_k >= 0.0) || !rician_k.is_finite() {
        return Err(invalid_param("rician_k", format!("{rician_k} must be finite and >= 0")));
    }
    let (lambda_r, u_r) = exp_correlation_eigen(m, rho_r);
    let (lambda_t, u_t) = exp_correlation_eigen(n_k, rho_t);
    let scatter = 1.0 / (1.0 + rician_k);
    let p = RMatrix::from_fn(m, n_k, |i, j| (scatter * lambda_r[i] * lambda_t[j]).sqrt());
    let los_len = m.min(n_k);
    let los_power = rician_k / (1.0 + rician_k) * (m * n_k) as f64 / los_len as f64;
    let mut hbar = CMatrix::zeros(m, n_k);
    for d in 0..los_len {
        hbar[(d, d)] = Complex64::new(los_power.sqrt(), 0.0);
    }
    let spec = ChannelSpec {
        m,
        n_k,
        hbar,
        p,
        u_t: to_complex(&u_t),
        u_r: to_complex(&u_r),
        mode: ChannelMode::Correlated,
    };
    spec.validate_structure()?;
    let spec = normalize_spec(&spec)?;
    spec.validate()?;
    Ok(spec)
}

/// Compact description of a channel law, as found in scenario files.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub mode: ChannelMode,
    pub rho_r: f64,
    pub rho_t: f64,
    pub rician_k: f64,
    /// Overrides the channel stream seed derived from the master seed.
    pub seed: Option<u64>,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            mode: ChannelMode::Iid,
            rho_r: 0.0,
            rho_t: 0.0,
            rician_k: 0.0,
            seed: None,
        }
    }
}

impl ChannelParams {
    pub fn to_spec(&self, m: usize, n_k: usize) -> Result<ChannelSpec> {
        match self.mode {
            ChannelMode::Iid => ChannelSpec::iid(m, n_k),
            ChannelMode::Correlated => {
                make_exp_correlated_spec(m, n_k, self.rho_r, self.rho_t, self.rician_k)
            }
        }
    }
}

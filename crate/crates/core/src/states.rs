//! Random density matrices, partial transposition, Negativity and the
//! two-copy collective state.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qlinalg::{haar_unitary, hermitian_eigenvalues, swap_operator, CMat, Rng, C64};

/// Negativity above which a state is labeled entangled.
pub const ENTANGLEMENT_THRESHOLD: f64 = 1e-7;

/// Smallest eigenvalue accepted for a positive semidefinite matrix.
pub const PSD_TOLERANCE: f64 = -1e-10;

/// Tolerance on Hermiticity and unit trace when validating a state.
pub const STATE_TOLERANCE: f64 = 1e-12;

/// Bipartite system. Subsystem 1 is always the qubit that takes part in the
/// singlet projection; subsystem 2 is measured locally.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    TwoQubit,
    QubitQutrit,
}

impl SystemKind {
    pub const ALL: [SystemKind; 2] = [SystemKind::TwoQubit, SystemKind::QubitQutrit];

    /// `(dim₁, dim₂)`.
    pub fn dims(self) -> (usize, usize) {
        match self {
            SystemKind::TwoQubit => (2, 2),
            SystemKind::QubitQutrit => (2, 3),
        }
    }

    pub fn dim(self) -> usize {
        let (a, b) = self.dims();
        a * b
    }

    /// Dimension of the locally measured subsystem.
    pub fn local_dim(self) -> usize {
        self.dims().1
    }

    pub fn name(self) -> &'static str {
        match self {
            SystemKind::TwoQubit => "two-qubit",
            SystemKind::QubitQutrit => "qubit-qutrit",
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-qubit" => Ok(SystemKind::TwoQubit),
            "qubit-qutrit" => Ok(SystemKind::QubitQutrit),
            other => Err(Error::InvalidArgument(format!("unknown system kind `{other}`"))),
        }
    }
}

/// Which subsystem's indices a partial transpose acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Valid density matrix of a [`SystemKind`].
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    kind: SystemKind,
    mat: CMat,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(kind: SystemKind, mat: CMat) -> Result<Self> {
        let dim = kind.dim();
        if mat.rows() != dim || mat.cols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "{kind} state needs a {dim}x{dim} matrix, got {}x{}",
                mat.rows(),
                mat.cols()
            )));
        }
        let herr = mat.hermiticity_error();
        if herr > STATE_TOLERANCE {
            return Err(Error::NotHermitian(herr));
        }
        let tr = mat.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > STATE_TOLERANCE {
            return Err(Error::InvalidArgument(format!("trace {tr} differs from 1")));
        }
        let min = hermitian_eigenvalues(&mat)?[0];
        if min < PSD_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "matrix is not positive semidefinite (min eigenvalue {min:e})"
            )));
        }
        Ok(Self { kind, mat })
    }

    /// Pure state `|ψ><ψ|`; the ket is normalized first.
    pub fn from_pure(kind: SystemKind, ket: &[C64]) -> Result<Self> {
        let norm = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidArgument("zero or non-finite ket".into()));
        }
        let v: Vec<C64> = ket.iter().map(|z| z / norm).collect();
        Self::new(kind, hermitian_part(&CMat::outer(&v)))
    }

    pub fn maximally_mixed(kind: SystemKind) -> Self {
        let d = kind.dim();
        Self {
            kind,
            mat: CMat::identity(d).scale_real(1.0 / d as f64),
        }
    }

    /// Singlet `(|01> - |10>)/√2` on two qubits.
    pub fn singlet() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let ket = [
            C64::new(0.0, 0.0),
            C64::new(h, 0.0),
            C64::new(-h, 0.0),
            C64::new(0.0, 0.0),
        ];
        Self {
            kind: SystemKind::TwoQubit,
            mat: CMat::outer(&ket),
        }
    }

    /// Werner state `p |Ψ-><Ψ-| + (1 - p) I/4`, `p` in `[0, 1]`.
    pub fn werner(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("Werner weight {p} outside [0, 1]")));
        }
        let s = Self::singlet().mat.scale_real(p);
        let mixed = Self::maximally_mixed(SystemKind::TwoQubit).mat.scale_real(1.0 - p);
        Ok(Self {
            kind: SystemKind::TwoQubit,
            mat: &s + &mixed,
        })
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn mat(&self) -> &CMat {
        &self.mat
    }

    pub fn into_mat(self) -> CMat {
        self.mat
    }

    /// Conjugation `V ρ V†` by a unitary, e.g. a local `U₁ ⊗ U₂`.
    pub fn conjugate(&self, v: &CMat) -> Result<Self> {
        let m = &(v * &self.mat) * &v.adjoint();
        Self::new(self.kind, hermitian_part(&m))
    }

    pub fn partial_transpose(&self, subsystem: Subsystem) -> CMat {
        let (d1, d2) = self.kind.dims();
        partial_transpose(&self.mat, d1, d2, subsystem)
    }

    /// `|Σ_{λ<0} λ|` over the spectrum of the partial transpose on `subsystem`.
    pub fn negativity_on(&self, subsystem: Subsystem) -> Result<f64> {
        let eig = hermitian_eigenvalues(&self.partial_transpose(subsystem))?;
        let neg: f64 = eig.iter().filter(|&&l| l < 0.0).sum();
        Ok(neg.abs())
    }

    pub fn negativity(&self) -> Result<f64> {
        self.negativity_on(Subsystem::Second)
    }

    pub fn is_entangled(&self) -> Result<bool> {
        Ok(self.negativity()? > ENTANGLEMENT_THRESHOLD)
    }

    /// Two-copy state on `(sub₂, sub₁, sub₁, sub₂)`: the first copy is
    /// swapped so both qubits meet in the middle.
    pub fn collective_state(&self) -> CollectiveState {
        let (d1, d2) = self.kind.dims();
        let s = swap_operator(d2, d1);
        let swapped = &(&s.transpose() * &self.mat) * &s;
        CollectiveState {
            kind: self.kind,
            mat: swapped.kron(&self.mat),
        }
    }
}

/// Two-copy state `Sᵀ ρ S ⊗ ρ`, subsystems ordered
/// `(local-left, Bell-left, Bell-right, local-right)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CollectiveState {
    kind: SystemKind,
    mat: CMat,
}

impl CollectiveState {
    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn mat(&self) -> &CMat {
        &self.mat
    }

    /// Dimensions of the four subsystems in storage order.
    pub fn subsystem_dims(&self) -> [usize; 4] {
        let (q, l) = self.kind.dims();
        [l, q, q, l]
    }
}

/// Partial transpose of a `(d1·d2)`-dimensional operator.
pub fn partial_transpose(m: &CMat, d1: usize, d2: usize, subsystem: Subsystem) -> CMat {
    let n = d1 * d2;
    assert_eq!((m.rows(), m.cols()), (n, n), "operator dimension must be d1*d2");
    let mut out = CMat::zeros(n, n);
    for a in 0..d1 {
        for b in 0..d2 {
            for a2 in 0..d1 {
                for b2 in 0..d2 {
                    let src = match subsystem {
                        Subsystem::First => (a2 * d2 + b, a * d2 + b2),
                        Subsystem::Second => (a * d2 + b2, a2 * d2 + b),
                    };
                    out[(a * d2 + b, a2 * d2 + b2)] = m[src];
                }
            }
        }
    }
    out
}

/// Diagonal of the random state, drawn uniformly from the probability
/// simplex (flat Dirichlet): normalized standard exponentials.
///
/// Normalizing i.i.d. uniforms by their sum instead concentrates spectra
/// near the center of the simplex and inflates the separable fraction
/// (about 0.89 for two qubits and 0.81 for qubit-qutrit, against 0.63 and
/// 0.38 for the flat measure).
pub fn random_spectrum(dim: usize, rng: &mut Rng) -> Vec<f64> {
    // 1 - u lies in (0, 1]; the exponentials are finite and the sum positive
    // unless every draw hits exactly 1 - u = 1.
    loop {
        let raw: Vec<f64> = (0..dim).map(|_| -(1.0 - rng.uniform()).ln()).collect();
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            return raw.into_iter().map(|x| x / total).collect();
        }
    }
}

/// `U† diag(spectrum) U` with a Haar-random `U`.
pub fn rotate_spectrum(kind: SystemKind, spectrum: &[f64], rng: &mut Rng) -> DensityMatrix {
    let dim = kind.dim();
    assert_eq!(spectrum.len(), dim);
    let u = haar_unitary(dim, rng);
    let rho = &(&u.adjoint() * &CMat::from_real_diag(spectrum)) * &u;
    DensityMatrix {
        kind,
        mat: normalize_trace(&hermitian_part(&rho)),
    }
}

/// Random state with a flat-simplex spectrum and a Haar-random eigenbasis.
pub fn sample_density(kind: SystemKind, rng: &mut Rng) -> DensityMatrix {
    let spectrum = random_spectrum(kind.dim(), rng);
    rotate_spectrum(kind, &spectrum, rng)
}

fn hermitian_part(m: &CMat) -> CMat {
    (m + &m.adjoint()).scale_real(0.5)
}

fn normalize_trace(m: &CMat) -> CMat {
    m.scale_real(1.0 / m.trace().re)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ket(kind: SystemKind, index: usize) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); kind.dim()];
        v[index] = C64::new(1.0, 0.0);
        v
    }

    #[test]
    fn partial_transpose_fixed_points() {
        let mixed = DensityMatrix::maximally_mixed(SystemKind::TwoQubit);
        assert_eq!(mixed.partial_transpose(Subsystem::Second), *mixed.mat());
        let zz = DensityMatrix::from_pure(SystemKind::TwoQubit, &ket(SystemKind::TwoQubit, 0)).unwrap();
        assert_eq!(zz.partial_transpose(Subsystem::Second), *zz.mat());
    }

    #[test]
    fn singlet_partial_transpose_spectrum() {
        let pt = DensityMatrix::singlet().partial_transpose(Subsystem::Second);
        let e = hermitian_eigenvalues(&pt).unwrap();
        for (x, y) in e.iter().zip([-0.5, 0.5, 0.5, 0.5]) {
            assert!((x - y).abs() < 1e-10);
        }
        assert!((pt.trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn partial_transpose_index_map() {
        let mut m = CMat::zeros(6, 6);
        // ((a=0,b=1),(a'=1,b'=2)) = 7
        m[(1, 5)] = C64::new(7.0, 0.0);
        let pt1 = partial_transpose(&m, 2, 3, Subsystem::First);
        // moves to ((a'=1,b=1),(a=0,b'=2))
        assert_eq!(pt1[(4, 2)], C64::new(7.0, 0.0));
        let pt2 = partial_transpose(&m, 2, 3, Subsystem::Second);
        // moves to ((a=0,b'=2),(a'=1,b=1))
        assert_eq!(pt2[(2, 4)], C64::new(7.0, 0.0));
    }

    #[test]
    fn negativity_known_values() {
        let mixed = DensityMatrix::maximally_mixed(SystemKind::TwoQubit);
        assert!(mixed.negativity().unwrap() < 1e-15);
        assert!((DensityMatrix::singlet().negativity().unwrap() - 0.5).abs() < 1e-12);
        let w = DensityMatrix::werner(0.5).unwrap();
        assert!((w.negativity().unwrap() - 0.125).abs() < 1e-12);
    }

    #[test]
    fn entanglement_labels() {
        assert!(!DensityMatrix::maximally_mixed(SystemKind::TwoQubit)
            .is_entangled()
            .unwrap());
        assert!(!DensityMatrix::maximally_mixed(SystemKind::QubitQutrit)
            .is_entangled()
            .unwrap());
        assert!(DensityMatrix::singlet().is_entangled().unwrap());
        assert!(!DensityMatrix::werner(1.0 / 3.0).unwrap().is_entangled().unwrap());
        assert!(DensityMatrix::werner(0.34).unwrap().is_entangled().unwrap());
    }

    #[test]
    fn collective_state_of_product_basis_state() {
        // ρ = |0><0| ⊗ |1><1|  ->  ρ_T = |1><1| ⊗ |0><0| ⊗ |0><0| ⊗ |1><1|
        let rho = DensityMatrix::from_pure(SystemKind::TwoQubit, &ket(SystemKind::TwoQubit, 1)).unwrap();
        let t = rho.collective_state();
        // index of |1,0,0,1> in (2,2,2,2) ordering
        let idx = 0b1001;
        let mut expected = CMat::zeros(16, 16);
        expected[(idx, idx)] = C64::new(1.0, 0.0);
        assert_eq!(*t.mat(), expected);
        assert_eq!(t.subsystem_dims(), [2, 2, 2, 2]);
    }

    #[test]
    fn collective_state_qubit_qutrit_layout() {
        // ρ = |1><1|(qubit) ⊗ |2><2|(qutrit) -> |2>|1>|1>|2> on dims (3,2,2,3)
        let rho = DensityMatrix::from_pure(SystemKind::QubitQutrit, &ket(SystemKind::QubitQutrit, 5)).unwrap();
        let t = rho.collective_state();
        assert_eq!(t.subsystem_dims(), [3, 2, 2, 3]);
        let idx = ((2 * 2 + 1) * 2 + 1) * 3 + 2;
        assert!((t.mat()[(idx, idx)] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((t.mat().trace() - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        let kind = SystemKind::TwoQubit;
        assert!(DensityMatrix::new(kind, CMat::identity(4)).is_err());
        assert!(DensityMatrix::new(kind, CMat::identity(6).scale_real(1.0 / 6.0)).is_err());
        let neg = CMat::from_real_diag(&[1.5, -0.5, 0.0, 0.0]);
        assert!(DensityMatrix::new(kind, neg).is_err());
        assert!(DensityMatrix::werner(1.5).is_err());
    }

    #[test]
    fn sample_is_valid_and_reproducible() {
        for kind in SystemKind::ALL {
            for stream in 0..20 {
                let rho = sample_density(kind, &mut Rng::new(4, stream));
                assert!(DensityMatrix::new(kind, rho.mat().clone()).is_ok());
                assert_eq!(rho, sample_density(kind, &mut Rng::new(4, stream)));
            }
        }
    }

    #[test]
    fn kind_round_trips_through_text() {
        for kind in SystemKind::ALL {
            assert_eq!(kind.to_string().parse::<SystemKind>().unwrap(), kind);
        }
        assert!("qutrit-qutrit".parse::<SystemKind>().is_err());
    }
}

//! Local effects, the singlet projection and the collective measurement
//! probabilities `P_xy` used as witness features.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qlinalg::{pauli, CMat, C64};
use crate::states::{CollectiveState, DensityMatrix, SystemKind};

/// Denominators below this make `P_xy` undefined.
pub const CONDITIONING_FLOOR: f64 = 1e-12;

/// One positive operator of a local measurement set. `index` is 1-based.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalEffect {
    pub index: usize,
    pub mat: CMat,
}

/// The four tetrahedral qubit effects
/// `Π = (σ₀ + (±σ₁ ± σ₂ ± σ₃)/√3) / 4`; each has trace 1/2 and they sum to
/// the identity.
pub fn qubit_tetrahedron() -> Vec<LocalEffect> {
    const SIGNS: [[f64; 3]; 4] = [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]];
    let inv_sqrt3 = 1.0 / 3f64.sqrt();
    SIGNS
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut m = pauli(0);
            for (k, &sign) in s.iter().enumerate() {
                m = &m + &pauli(k + 1).scale_real(sign * inv_sqrt3);
            }
            LocalEffect {
                index: i + 1,
                mat: m.scale_real(0.25),
            }
        })
        .collect()
}

/// The nine rank-1 qutrit projectors `|ψᵢ><ψᵢ|`, three per two-level
/// subspace `{|0>,|2>}`, `{|1>,|0>}`, `{|2>,|1>}`, with relative phases
/// `1`, `e^{±2πi/3}`.
pub fn qutrit_nine() -> Vec<LocalEffect> {
    let omega = C64::from_polar(1.0, TAU / 3.0);
    let one = C64::new(1.0, 0.0);
    let phases = [(one, one), (omega, omega.conj()), (omega.conj(), omega)];
    // (first basis state, second basis state) for each triple
    let pairs = [(0usize, 2usize), (1, 0), (2, 1)];
    let mut out = Vec::with_capacity(9);
    for (first, second) in pairs {
        for (p1, p2) in phases {
            let mut ket = vec![C64::new(0.0, 0.0); 3];
            ket[first] = p1 * FRAC_1_SQRT_2;
            ket[second] = p2 * FRAC_1_SQRT_2;
            out.push(LocalEffect {
                index: out.len() + 1,
                mat: CMat::outer(&ket),
            });
        }
    }
    out
}

/// The local effect set measured on subsystem 2 of `kind`.
pub fn local_effects(kind: SystemKind) -> Vec<LocalEffect> {
    match kind {
        SystemKind::TwoQubit => qubit_tetrahedron(),
        SystemKind::QubitQutrit => qutrit_nine(),
    }
}

/// `|Ψ-><Ψ-|` with `|Ψ-> = (|01> - |10>)/√2`.
pub fn bell_singlet() -> CMat {
    DensityMatrix::singlet().into_mat()
}

/// Conditional probability of a singlet outcome on the two middle qubits of
/// `rho_t` given local outcomes `x` (left) and `y` (right), evaluated as the
/// ratio of two traces over the full collective state.
pub fn p_xy(rho_t: &CollectiveState, x: &LocalEffect, y: &LocalEffect) -> Result<f64> {
    let [dl, _, _, _] = rho_t.subsystem_dims();
    for e in [x, y] {
        if e.mat.rows() != dl {
            return Err(Error::DimensionMismatch(format!(
                "local effect is {}x{}, local subsystem has dimension {dl}",
                e.mat.rows(),
                e.mat.cols()
            )));
        }
    }
    let bell = bell_singlet();
    let m = rho_t.mat();
    let n = m.rows();
    let index = |i: usize| (i / (4 * dl), (i / dl) % 4, i % dl);

    let mut num = C64::new(0.0, 0.0);
    let mut den = C64::new(0.0, 0.0);
    for r in 0..n {
        let (a, bc, d) = index(r);
        for s in 0..n {
            let (a2, bc2, d2) = index(s);
            // Tr(ρ O) = Σ ρ[r][s] O[s][r]
            let local = x.mat[(a2, a)] * y.mat[(d2, d)];
            if local == C64::new(0.0, 0.0) {
                continue;
            }
            let rs = m[(r, s)] * local;
            num += rs * bell[(bc2, bc)];
            if bc == bc2 {
                den += rs;
            }
        }
    }
    conditional(num.re, den.re)
}

fn conditional(num: f64, den: f64) -> Result<f64> {
    if den.is_nan() || den < CONDITIONING_FLOOR {
        return Err(Error::DegenerateConditioning(den));
    }
    Ok((num / den).clamp(0.0, 1.0))
}

/// Feature vector extracted from one state.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub negativity: f64,
    pub entangled: bool,
}

/// Ordered list of local-effect pairs; its length is the feature width `B`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementPreset {
    pub kind: SystemKind,
    pub name: String,
    pub pairs: Vec<(usize, usize)>,
}

impl MeasurementPreset {
    /// Validates indices, the width limit and uniqueness up to `(x,y) ~ (y,x)`.
    pub fn new(kind: SystemKind, name: impl Into<String>, pairs: Vec<(usize, usize)>) -> Result<Self> {
        let name = name.into();
        let n = local_effects_len(kind);
        let max_b = n * (n + 1) / 2;
        if pairs.is_empty() {
            return Err(Error::InvalidPreset(format!("`{name}` has no pairs")));
        }
        if pairs.len() > max_b {
            return Err(Error::InvalidPreset(format!(
                "`{name}` has {} pairs; {kind} allows at most {max_b}",
                pairs.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for &(x, y) in &pairs {
            if !(1..=n).contains(&x) || !(1..=n).contains(&y) {
                return Err(Error::InvalidPreset(format!(
                    "pair ({x},{y}) out of range 1..={n} for {kind}"
                )));
            }
            if !seen.insert((x.min(y), x.max(y))) {
                return Err(Error::InvalidPreset(format!("duplicate pair ({x},{y})")));
            }
        }
        Ok(Self { kind, name, pairs })
    }

    pub fn width(&self) -> usize {
        self.pairs.len()
    }

    /// Resolves a built-in name (`B5`) or a custom pair list
    /// (`1-1,2-3,4-4`).
    pub fn parse(kind: SystemKind, text: &str) -> Result<Self> {
        let text = text.trim();
        if text.starts_with('B') || text.starts_with('b') {
            return preset_by_name(kind, text);
        }
        let mut pairs = Vec::new();
        for item in text.split(',') {
            let (x, y) = item
                .trim()
                .split_once('-')
                .ok_or_else(|| Error::UnknownPreset(text.to_string()))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidPreset(format!("bad index `{s}` in `{item}`")))
            };
            pairs.push((parse(x)?, parse(y)?));
        }
        let name = pairs
            .iter()
            .map(|(x, y)| format!("{x}-{y}"))
            .collect::<Vec<_>>()
            .join(",");
        Self::new(kind, name, pairs)
    }

    /// Sub-preset positions inside `self`, so features of `other` can be
    /// read off a dataset generated with `self`.
    pub fn column_indices(&self, other: &MeasurementPreset) -> Result<Vec<usize>> {
        if self.kind != other.kind {
            return Err(Error::PresetMismatch {
                expected: self.kind.to_string(),
                found: other.kind.to_string(),
            });
        }
        other
            .pairs
            .iter()
            .map(|&(x, y)| {
                self.pairs
                    .iter()
                    .position(|&(a, b)| (a, b) == (x, y) || (a, b) == (y, x))
                    .ok_or_else(|| {
                        Error::InvalidPreset(format!(
                            "pair ({x},{y}) of `{}` is not measured by `{}`",
                            other.name, self.name
                        ))
                    })
            })
            .collect()
    }
}

impl fmt::Display for MeasurementPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} [", self.kind, self.name)?;
        for (i, (x, y)) in self.pairs.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}-{y}")?;
        }
        write!(f, "]")
    }
}

fn local_effects_len(kind: SystemKind) -> usize {
    match kind {
        SystemKind::TwoQubit => 4,
        SystemKind::QubitQutrit => 9,
    }
}

/// The measurement configurations used for the witness sweeps, cumulative
/// in `B`.
pub fn builtin_presets(kind: SystemKind) -> Vec<MeasurementPreset> {
    let mut out = Vec::new();
    let mut push = |name: &str, pairs: Vec<(usize, usize)>| {
        out.push(MeasurementPreset {
            kind,
            name: name.to_string(),
            pairs,
        });
    };
    match kind {
        SystemKind::TwoQubit => {
            let b1 = vec![(1, 1)];
            let b3 = vec![(1, 1), (2, 2), (3, 3)];
            let b5 = vec![(1, 1), (2, 2), (3, 3), (4, 4), (1, 3)];
            let b7 = [b5.clone(), vec![(1, 4), (2, 4)]].concat();
            let b10 = [b7.clone(), vec![(1, 2), (2, 3), (3, 4)]].concat();
            push("B1", b1);
            push("B3", b3);
            push("B5", b5);
            push("B7", b7);
            push("B10", b10);
        }
        SystemKind::QubitQutrit => {
            let b1 = vec![(1, 1)];
            let b5 = vec![(1, 1), (3, 3), (5, 5), (8, 8), (9, 9)];
            let b9 = [b5.clone(), vec![(2, 2), (4, 4), (6, 6), (7, 7)]].concat();
            let b13 = [b9.clone(), vec![(1, 2), (3, 4), (4, 5), (8, 9)]].concat();
            let b45 = (1..=9).flat_map(|i| (i..=9).map(move |j| (i, j))).collect();
            push("B1", b1);
            push("B5", b5);
            push("B9", b9);
            push("B13", b13);
            push("B45", b45);
        }
    }
    out
}

pub fn preset_by_name(kind: SystemKind, name: &str) -> Result<MeasurementPreset> {
    let wanted = name.trim();
    builtin_presets(kind)
        .into_iter()
        .find(|p| p.name.eq_ignore_ascii_case(wanted))
        .ok_or_else(|| Error::UnknownPreset(wanted.to_string()))
}

/// Measurement context for one system kind: the local effects and the
/// 2×2 conditional operators they induce.
///
/// Because the collective state is a product of two copies, the left and
/// right halves of `Π_x ⊗ Π_Bell ⊗ Π_y` factor through the qubit operators
/// `A_x = Tr₂[ρ (1 ⊗ Π_x)]`, and
/// `P_xy = <Ψ-| A_x ⊗ A_y |Ψ-> / (Tr A_x · Tr A_y)`.
/// This is the route used for dataset generation; [`p_xy`] evaluates the
/// same quantity directly on the 16- or 36-dimensional state.
#[derive(Clone, Debug)]
pub struct Measurement {
    kind: SystemKind,
    effects: Vec<LocalEffect>,
}

impl Measurement {
    pub fn new(kind: SystemKind) -> Self {
        Self {
            kind,
            effects: local_effects(kind),
        }
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn effects(&self) -> &[LocalEffect] {
        &self.effects
    }

    /// Conditional qubit operators `A_x` for every local effect.
    pub fn conditional_operators(&self, rho: &DensityMatrix) -> Vec<[C64; 4]> {
        let m = rho.mat();
        let dl = self.kind.local_dim();
        self.effects
            .iter()
            .map(|e| {
                let mut a = [C64::new(0.0, 0.0); 4];
                for b in 0..2 {
                    for b2 in 0..2 {
                        let mut acc = C64::new(0.0, 0.0);
                        for d in 0..dl {
                            for d2 in 0..dl {
                                acc += m[(b * dl + d, b2 * dl + d2)] * e.mat[(d2, d)];
                            }
                        }
                        a[b * 2 + b2] = acc;
                    }
                }
                a
            })
            .collect()
    }

    /// Feature values for `preset`, in preset order.
    pub fn feature_values(&self, rho: &DensityMatrix, preset: &MeasurementPreset) -> Result<Vec<f64>> {
        if preset.kind != self.kind || rho.kind() != self.kind {
            return Err(Error::PresetMismatch {
                expected: self.kind.to_string(),
                found: format!("preset {} / state {}", preset.kind, rho.kind()),
            });
        }
        let ops = self.conditional_operators(rho);
        preset
            .pairs
            .iter()
            .map(|&(x, y)| {
                let (a, b) = (&ops[x - 1], &ops[y - 1]);
                // <Ψ-| A ⊗ B |Ψ-> = (A00 B11 + A11 B00 - A01 B10 - A10 B01) / 2
                let num = 0.5 * (a[0] * b[3] + a[3] * b[0] - a[1] * b[2] - a[2] * b[1]).re;
                let den = ((a[0] + a[3]) * (b[0] + b[3])).re;
                conditional(num, den)
            })
            .collect()
    }

    /// Features plus the Negativity labels of `rho`.
    pub fn features(&self, rho: &DensityMatrix, preset: &MeasurementPreset) -> Result<FeatureVector> {
        let values = self.feature_values(rho, preset)?;
        let negativity = rho.negativity()?;
        Ok(FeatureVector {
            values,
            negativity,
            entangled: negativity > crate::states::ENTANGLEMENT_THRESHOLD,
        })
    }
}

/// One-shot feature extraction; see [`Measurement::features`].
pub fn features(rho: &DensityMatrix, preset: &MeasurementPreset) -> Result<FeatureVector> {
    Measurement::new(rho.kind()).features(rho, preset)
}

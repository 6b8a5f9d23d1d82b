//! ROC characterization of witness scores and the analytic baselines
//! (Negativity oracle, CHSH via the Horodecki criterion, fully entangled
//! fraction).

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;

use crate::dataset::{Dataset, LabeledState};
use crate::error::{Error, Result};
use crate::qlinalg::{hermitian_eigenvalues, pauli, CMat, C64};
use crate::states::{DensityMatrix, SystemKind};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Scores `>= threshold` are classified entangled.
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// ROC curve of `scores` against `labels` (`true` = entangled), sweeping the
/// threshold over every distinct score plus `+∞`. AUC is trapezoidal.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.len() < 2 {
        return Err(Error::EmptyDataset("ROC needs at least two scored records".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidArgument("NaN score".into()));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::DegenerateLabels);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / negatives as f64,
            tpr: tp as f64 / positives as f64,
            threshold,
        });
    }
    let auc = trapezoid(&points);
    Ok(RocCurve { points, auc })
}

fn trapezoid(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) * 0.5)
        .sum()
}

/// Best sensitivity among achieved operating points with `fpr <= fpr_cap`.
pub fn tpr_at_fpr(curve: &RocCurve, fpr_cap: f64) -> f64 {
    curve
        .points
        .iter()
        .filter(|p| p.fpr <= fpr_cap)
        .map(|p| p.tpr)
        .fold(0.0, f64::max)
}

impl RocCurve {
    /// Text table `fpr,tpr,threshold` followed by `# auc=<value>`.
    pub fn to_table(&self) -> String {
        let mut s = String::from("fpr,tpr,threshold\n");
        for p in &self.points {
            writeln!(s, "{:?},{:?},{:?}", p.fpr, p.tpr, p.threshold).expect("writing to a String");
        }
        writeln!(s, "# auc={:?}", self.auc).expect("writing to a String");
        s
    }

    /// Parses [`RocCurve::to_table`] output and re-checks its invariants.
    pub fn from_table(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, "fpr,tpr,threshold")) => {}
            _ => return Err(Error::format(1, "expected header `fpr,tpr,threshold`")),
        }
        let mut points = Vec::new();
        let mut auc = None;
        for (i, line) in lines {
            let lineno = i + 1;
            if auc.is_some() {
                return Err(Error::format(lineno, "content after the auc line"));
            }
            if let Some(v) = line.strip_prefix("# auc=") {
                let v: f64 = v.parse().map_err(|_| Error::format(lineno, format!("bad auc `{v}`")))?;
                auc = Some(v);
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::format(
                    lineno,
                    format!("expected 3 fields, found {}", fields.len()),
                ));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| !v.is_nan())
                    .ok_or_else(|| Error::format(lineno, format!("bad number `{s}`")))
            };
            let p = RocPoint {
                fpr: num(fields[0])?,
                tpr: num(fields[1])?,
                threshold: num(fields[2])?,
            };
            if !(0.0..=1.0).contains(&p.fpr) || !(0.0..=1.0).contains(&p.tpr) {
                return Err(Error::format(lineno, "rates must lie in [0, 1]"));
            }
            if let Some(prev) = points.last() {
                let prev: &RocPoint = prev;
                if p.fpr < prev.fpr || p.tpr < prev.tpr {
                    return Err(Error::format(lineno, "rates must be non-decreasing"));
                }
            }
            points.push(p);
        }
        let auc = auc.ok_or_else(|| Error::format(text.lines().count() + 1, "missing `# auc=` line"))?;
        match (points.first(), points.last()) {
            (Some(a), Some(b)) if (a.fpr, a.tpr) == (0.0, 0.0) && (b.fpr, b.tpr) == (1.0, 1.0) => {}
            _ => return Err(Error::format(1, "curve must run from (0,0) to (1,1)")),
        }
        Ok(RocCurve { points, auc })
    }

    /// Standalone SVG rendering of the curve with the chance diagonal.
    pub fn to_svg(&self, title: &str) -> String {
        const SIZE: f64 = 400.0;
        const PAD: f64 = 40.0;
        let x = |f: f64| PAD + f * SIZE;
        let y = |t: f64| PAD + (1.0 - t) * SIZE;
        let poly: Vec<String> = self
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", x(p.fpr), y(p.tpr)))
            .collect();
        let title = title.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
        let total = SIZE + 2.0 * PAD;
        format!(
            concat!(
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{t}\" height=\"{t}\" viewBox=\"0 0 {t} {t}\">\n",
                "<rect x=\"{p}\" y=\"{p}\" width=\"{s}\" height=\"{s}\" fill=\"none\" stroke=\"black\"/>\n",
                "<line x1=\"{p}\" y1=\"{e}\" x2=\"{e}\" y2=\"{p}\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n",
                "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"{pts}\"/>\n",
                "<text x=\"{p}\" y=\"{ty}\" font-size=\"14\">{title} (AUC {auc:.4})</text>\n",
                "<text x=\"{mid}\" y=\"{bx}\" font-size=\"12\" text-anchor=\"middle\">FPR</text>\n",
                "<text x=\"12\" y=\"{mid}\" font-size=\"12\" text-anchor=\"middle\">TPR</text>\n",
                "</svg>\n"
            ),
            t = total,
            p = PAD,
            s = SIZE,
            e = PAD + SIZE,
            pts = poly.join(" "),
            ty = PAD - 12.0,
            title = title,
            auc = self.auc,
            mid = PAD + SIZE / 2.0,
            bx = total - 10.0,
        )
    }
}

fn require_two_qubit(rho: &DensityMatrix, what: &str) -> Result<()> {
    if rho.kind() != SystemKind::TwoQubit {
        return Err(Error::DimensionMismatch(format!(
            "{what} is defined for two-qubit states only"
        )));
    }
    Ok(())
}

/// Pauli correlation matrix `T_ij = Tr[ρ σᵢ ⊗ σⱼ]`, `i, j ∈ {x, y, z}`.
pub fn correlation_matrix(rho: &DensityMatrix) -> Result<[[f64; 3]; 3]> {
    require_two_qubit(rho, "the correlation matrix")?;
    let mut t = [[0.0; 3]; 3];
    for (i, row) in t.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = rho.mat().trace_product(&pauli(i + 1).kron(&pauli(j + 1))).re;
        }
    }
    Ok(t)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChshResult {
    pub violated: bool,
    /// Sum of the two largest eigenvalues of `TᵀT`.
    pub m_value: f64,
    /// Maximal CHSH expectation `2√M`.
    pub max_bell_value: f64,
}

/// Horodecki criterion: CHSH can be violated iff `M > 1`.
pub fn chsh_violation(rho: &DensityMatrix) -> Result<ChshResult> {
    let t = correlation_matrix(rho)?;
    let mut tt = [0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            tt[i * 3 + j] = (0..3).map(|k| t[k][i] * t[k][j]).sum();
        }
    }
    let eig = hermitian_eigenvalues(&CMat::from_real(3, 3, &tt))?;
    let m_value = eig[1] + eig[2];
    Ok(ChshResult {
        violated: m_value > 1.0,
        m_value,
        max_bell_value: 2.0 * m_value.sqrt(),
    })
}

/// Magic basis kets, as columns of the change-of-basis matrix.
fn magic_basis() -> CMat {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let r = |x: f64| C64::new(x, 0.0);
    let i = |x: f64| C64::new(0.0, x);
    let z = C64::new(0.0, 0.0);
    // rows: |00>, |01>, |10>, |11>; columns: m1..m4
    CMat::from_vec(
        4,
        4,
        vec![
            r(h),
            i(h),
            z,
            z, //
            z,
            z,
            i(h),
            r(h), //
            z,
            z,
            i(h),
            r(-h), //
            r(h),
            i(-h),
            z,
            z,
        ],
    )
}

/// Fully entangled fraction: the largest eigenvalue of `Re(M)`, where
/// `M_ij = <mᵢ|ρ|mⱼ>` in the magic basis.
pub fn fef(rho: &DensityMatrix) -> Result<f64> {
    require_two_qubit(rho, "the fully entangled fraction")?;
    let b = magic_basis();
    let m = &(&b.adjoint() * rho.mat()) * &b;
    let re: Vec<f64> = (0..16)
        .map(|k| 0.5 * (m[(k / 4, k % 4)].re + m[(k % 4, k / 4)].re))
        .collect();
    let eig = hermitian_eigenvalues(&CMat::from_real(4, 4, &re))?;
    Ok(eig[3])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Witness {
    NegativityOracle,
    Chsh,
    Fef,
}

impl Witness {
    pub const ALL: [Witness; 3] = [Witness::NegativityOracle, Witness::Chsh, Witness::Fef];

    pub fn name(self) -> &'static str {
        match self {
            Witness::NegativityOracle => "negativity",
            Witness::Chsh => "chsh",
            Witness::Fef => "fef",
        }
    }

    pub fn applies_to(self, kind: SystemKind) -> bool {
        matches!((self, kind), (Witness::NegativityOracle, _) | (_, SystemKind::TwoQubit))
    }

    /// Whether the witness flags `rho` as entangled.
    pub fn flags(self, rho: &DensityMatrix) -> Result<bool> {
        match self {
            Witness::NegativityOracle => rho.is_entangled(),
            Witness::Chsh => Ok(chsh_violation(rho)?.violated),
            Witness::Fef => Ok(fef(rho)? > 0.5),
        }
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Witness {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Witness::ALL
            .into_iter()
            .find(|w| w.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown witness `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BaselineReport {
    pub witness: Witness,
    /// True-positive rate over the entangled states.
    pub sensitivity: f64,
    /// False-positive rate over the separable states.
    pub fpr: f64,
    pub entangled: usize,
    pub separable: usize,
}

/// Sensitivity and false-positive rate of an analytic witness over labeled
/// states.
pub fn baseline_on_states(states: &[LabeledState], witness: Witness) -> Result<BaselineReport> {
    if states.is_empty() {
        return Err(Error::EmptyDataset("no states to evaluate".into()));
    }
    if let Some(s) = states.iter().find(|s| !witness.applies_to(s.rho.kind())) {
        return Err(Error::DimensionMismatch(format!(
            "{witness} is not available for {} states",
            s.rho.kind()
        )));
    }
    let flags = states
        .par_iter()
        .map(|s| witness.flags(&s.rho))
        .collect::<Result<Vec<bool>>>()?;
    let (mut tp, mut fp, mut pos, mut neg) = (0usize, 0usize, 0usize, 0usize);
    for (s, flagged) in states.iter().zip(flags) {
        if s.entangled {
            pos += 1;
            tp += usize::from(flagged);
        } else {
            neg += 1;
            fp += usize::from(flagged);
        }
    }
    let rate = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    Ok(BaselineReport {
        witness,
        sensitivity: rate(tp, pos),
        fpr: rate(fp, neg),
        entangled: pos,
        separable: neg,
    })
}

/// Baseline over the states behind `test`, rebuilt from its seed.
pub fn baseline_sensitivity(test: &Dataset, witness: Witness) -> Result<BaselineReport> {
    if test.is_empty() {
        return Err(Error::EmptyDataset("test dataset is empty".into()));
    }
    if !witness.applies_to(test.kind) {
        return Err(Error::DimensionMismatch(format!(
            "{witness} is not available for {}",
            test.kind
        )));
    }
    baseline_on_states(&test.regenerate_states()?, witness)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_constant_scores() {
        let c = roc_curve(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]).unwrap();
        assert_eq!(c.auc, 1.0);
        let c = roc_curve(&[0.3; 6], &[true, false, true, false, true, false]).unwrap();
        assert_eq!(c.points.len(), 2);
        assert_eq!((c.points[1].fpr, c.points[1].tpr), (1.0, 1.0));
        assert_eq!(c.auc, 0.5);
    }

    #[test]
    fn four_point_example() {
        let c = roc_curve(&[0.9, 0.4, 0.35, 0.1], &[true, false, true, false]).unwrap();
        assert!((c.auc - 0.75).abs() < 1e-15);
        assert_eq!(tpr_at_fpr(&c, 0.5), 1.0);
        assert_eq!(tpr_at_fpr(&c, 1.0), 1.0);
        assert_eq!(tpr_at_fpr(&c, 0.0), 0.5);
        let p = c.points.iter().find(|p| p.threshold == 0.35).unwrap();
        assert_eq!((p.fpr, p.tpr), (0.5, 1.0));
    }

    #[test]
    fn tpr_at_zero_fpr_when_only_origin_qualifies() {
        let c = roc_curve(&[0.9, 0.1], &[false, true]).unwrap();
        assert_eq!(tpr_at_fpr(&c, 0.0), 0.0);
    }

    #[test]
    fn roc_errors() {
        assert!(matches!(roc_curve(&[0.1], &[true]), Err(Error::EmptyDataset(_))));
        assert!(matches!(
            roc_curve(&[0.1, 0.2], &[true, true]),
            Err(Error::DegenerateLabels)
        ));
        assert!(roc_curve(&[0.1, 0.2], &[true]).is_err());
    }

    #[test]
    fn table_round_trip() {
        let c = roc_curve(&[0.9, 0.4, 0.35, 0.1], &[true, false, true, false]).unwrap();
        let t = c.to_table();
        assert!(t.starts_with("fpr,tpr,threshold\n0.0,0.0,inf\n"));
        assert!(t.ends_with("# auc=0.75\n"));
        assert_eq!(RocCurve::from_table(&t).unwrap(), c);
        assert!(RocCurve::from_table("fpr,tpr,threshold\n0.0,0.0,inf\n").is_err());
        assert!(RocCurve::from_table("fpr,tpr,threshold\n0.5,0.5,1\n0.0,0.0,2\n# auc=0.5\n").is_err());
        assert!(c.to_svg("B10").contains("<polyline"));
    }

    #[test]
    fn chsh_reference_states() {
        let s = chsh_violation(&DensityMatrix::singlet()).unwrap();
        assert!((s.m_value - 2.0).abs() < 1e-12 && s.violated);
        assert!((s.max_bell_value - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        let mut ket = vec![C64::new(0.0, 0.0); 4];
        ket[0] = C64::new(1.0, 0.0);
        let zz = DensityMatrix::from_pure(SystemKind::TwoQubit, &ket).unwrap();
        let r = chsh_violation(&zz).unwrap();
        assert!((r.m_value - 1.0).abs() < 1e-12 && !r.violated);
        for p in [0.3, 0.7, 0.71, 0.9] {
            let r = chsh_violation(&DensityMatrix::werner(p).unwrap()).unwrap();
            assert!((r.m_value - 2.0 * p * p).abs() < 1e-12);
            assert_eq!(r.violated, p > std::f64::consts::FRAC_1_SQRT_2);
        }
        let qq = DensityMatrix::maximally_mixed(SystemKind::QubitQutrit);
        assert!(matches!(chsh_violation(&qq), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn fef_reference_states() {
        assert!((fef(&DensityMatrix::singlet()).unwrap() - 1.0).abs() < 1e-12);
        assert!((fef(&DensityMatrix::maximally_mixed(SystemKind::TwoQubit)).unwrap() - 0.25).abs() < 1e-12);
        for p in [0.0, 0.2, 0.5, 0.9] {
            let f = fef(&DensityMatrix::werner(p).unwrap()).unwrap();
            assert!((f - (1.0 + 3.0 * p) / 4.0).abs() < 1e-12);
        }
        let qq = DensityMatrix::maximally_mixed(SystemKind::QubitQutrit);
        assert!(matches!(fef(&qq), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn magic_basis_is_orthonormal_and_maximally_entangled() {
        let b = magic_basis();
        assert!((&b.adjoint() * &b).max_abs_diff(&CMat::identity(4)) < 1e-15);
        for k in 0..4 {
            let ket: Vec<C64> = (0..4).map(|r| b[(r, k)]).collect();
            let rho = DensityMatrix::from_pure(SystemKind::TwoQubit, &ket).unwrap();
            assert!((rho.negativity().unwrap() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn witness_names() {
        for w in Witness::ALL {
            assert_eq!(w.name().parse::<Witness>().unwrap(), w);
        }
        assert!(!Witness::Chsh.applies_to(SystemKind::QubitQutrit));
        assert!(Witness::NegativityOracle.applies_to(SystemKind::QubitQutrit));
    }
}

//! Confusion matrices, classification metrics, log loss and ROC/AUC.
//!
//! The positive class is ASD (label 1). Rates with a zero denominator are
//! reported as 0. Log loss clips probabilities to `[1e-15, 1 − 1e-15]`.
//! ROC thresholds are the distinct scores in descending order, so tied
//! scores move the curve diagonally in one step.

use std::io::Write;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::{label_from_proba, ModelError};
use crate::pipeline::{FittedPipeline, PipelineError};

/// Probability clipping used by [`log_loss`].
pub const LOG_LOSS_EPS: f64 = 1e-15;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{truth} labels but {predicted} predictions")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("no rows to score")]
    Empty,
    #[error("ROC analysis needs both classes in the labels")]
    SingleClass,
    #[error("probability {value} at row {row} lies outside [0, 1]")]
    InvalidProbability { row: usize, value: f64 },
    #[error("label {0} is not 0 or 1")]
    BadLabel(u8),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

impl From<ModelError> for EvalError {
    fn from(e: ModelError) -> Self {
        EvalError::Pipeline(PipelineError::Model(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ConfusionMatrix {
    pub fn new(tp: usize, tn: usize, fp: usize, fn_: usize) -> Self {
        ConfusionMatrix { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    /// True-positive rate, `Tp / (Tp + Fn)`.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// Positive predictive value, `Tp / (Tp + Fp)`.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    pub fn false_positive_rate(&self) -> f64 {
        ratio(self.fp, self.fp + self.tn)
    }
}

fn check_labels(y: &[u8]) -> Result<(), EvalError> {
    match y.iter().find(|&&v| v > 1) {
        Some(&v) => Err(EvalError::BadLabel(v)),
        None => Ok(()),
    }
}

/// Tallies predictions against the truth with ASD = 1 as positive.
pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionMatrix, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch { truth: y_true.len(), predicted: y_pred.len() });
    }
    check_labels(y_true)?;
    check_labels(y_pred)?;
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => cm.tp += 1,
            (0, 0) => cm.tn += 1,
            (0, _) => cm.fp += 1,
            _ => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// Mean negative log-likelihood of `p_hat = P(ASD)`.
pub fn log_loss(y_true: &[u8], p_hat: &[f64]) -> Result<f64, EvalError> {
    if y_true.len() != p_hat.len() {
        return Err(EvalError::LengthMismatch { truth: y_true.len(), predicted: p_hat.len() });
    }
    if y_true.is_empty() {
        return Err(EvalError::Empty);
    }
    check_labels(y_true)?;
    let mut total = 0.0;
    for (row, (&t, &p)) in y_true.iter().zip(p_hat).enumerate() {
        if !(0.0..=1.0).contains(&p) {
            return Err(EvalError::InvalidProbability { row, value: p });
        }
        let p = p.clamp(LOG_LOSS_EPS, 1.0 - LOG_LOSS_EPS);
        total -= if t == 1 { p.ln() } else { (1.0 - p).ln() };
    }
    Ok(total / y_true.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Rows scoring at or above this value are called positive; `None` for
    /// the opening `(0, 0)` point.
    pub threshold: Option<f64>,
}

/// ROC points from `(0, 0)` to `(1, 1)`, one per distinct score.
pub fn roc_curve(y_true: &[u8], scores: &[f64]) -> Result<Vec<RocPoint>, EvalError> {
    if y_true.len() != scores.len() {
        return Err(EvalError::LengthMismatch { truth: y_true.len(), predicted: scores.len() });
    }
    check_labels(y_true)?;
    let n_pos = y_true.iter().filter(|&&v| v == 1).count();
    let n_neg = y_true.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0, threshold: None }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if y_true[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint { fpr: fp as f64 / n_neg as f64, tpr: tp as f64 / n_pos as f64, threshold: Some(threshold) });
    }
    Ok(points)
}

/// Trapezoidal area under a ROC curve.
pub fn auc(points: &[RocPoint]) -> f64 {
    points.windows(2).map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Train,
    Test,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Phase::Train => "train",
            Phase::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub phase: Phase,
    pub n_rows: usize,
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub log_loss: f64,
    /// `None` when the scored rows hold a single class.
    pub auc: Option<f64>,
    pub roc_points: Vec<RocPoint>,
}

/// Builds a report from `P(ASD)` per row. Labels use the 0.5 rule of
/// [`label_from_proba`].
pub fn report_from_proba(y_true: &[u8], p_hat: &[f64], phase: Phase) -> Result<EvaluationReport, EvalError> {
    let ll = log_loss(y_true, p_hat)?;
    let pred: Vec<u8> = p_hat.iter().map(|&p| label_from_proba(p)).collect();
    let cm = confusion(y_true, &pred)?;
    let (auc_value, roc_points) = match roc_curve(y_true, p_hat) {
        Ok(points) => (Some(auc(&points)), points),
        Err(EvalError::SingleClass) => (None, Vec::new()),
        Err(e) => return Err(e),
    };
    Ok(EvaluationReport {
        phase,
        n_rows: y_true.len(),
        confusion: cm,
        accuracy: cm.accuracy(),
        recall: cm.recall(),
        precision: cm.precision(),
        f1: cm.f1(),
        log_loss: ll,
        auc: auc_value,
        roc_points,
    })
}

/// Scores a fitted pipeline on rows laid out in its mask order.
pub fn evaluate(model: &FittedPipeline, x: ArrayView2<f64>, y: &[u8], phase: Phase) -> Result<EvaluationReport, EvalError> {
    let p = model.positive_proba(x)?;
    report_from_proba(y, &p, phase)
}

/// Writes `threshold,fpr,tpr` rows; the opening point's threshold is `inf`.
pub fn write_roc_csv<W: Write>(writer: W, points: &[RocPoint]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["threshold", "fpr", "tpr"])?;
    for p in points {
        w.write_record([p.threshold.map_or_else(|| "inf".to_string(), |t| t.to_string()), p.fpr.to_string(), p.tpr.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Fixed-width table with one row per report.
pub fn render_table(rows: &[(String, &EvaluationReport)]) -> String {
    let mut out = format!(
        "{:<10} {:<6} {:>5} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}  {:>4} {:>4} {:>4} {:>4}\n",
        "model", "phase", "n", "accuracy", "recall", "precision", "f1", "log_loss", "auc", "tp", "tn", "fp", "fn"
    );
    for (name, r) in rows {
        let auc = r.auc.map_or_else(|| "-".to_string(), |a| format!("{a:.4}"));
        out.push_str(&format!(
            "{:<10} {:<6} {:>5} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9}  {:>4} {:>4} {:>4} {:>4}\n",
            name,
            r.phase,
            r.n_rows,
            r.accuracy,
            r.recall,
            r.precision,
            r.f1,
            r.log_loss,
            auc,
            r.confusion.tp,
            r.confusion.tn,
            r.confusion.fp,
            r.confusion.fn_
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn concordance(y: &[u8], s: &[f64]) -> f64 {
        let (mut num, mut pairs) = (0.0, 0.0);
        for i in 0..y.len() {
            for j in 0..y.len() {
                if y[i] == 1 && y[j] == 0 {
                    pairs += 1.0;
                    num += if s[i] > s[j] {
                        1.0
                    } else if s[i] == s[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        num / pairs
    }

    #[test]
    fn screening_tool_counts() {
        let perfect = ConfusionMatrix::new(27, 18, 0, 0);
        assert_eq!((perfect.accuracy(), perfect.recall(), perfect.precision(), perfect.f1()), (1.0, 1.0, 1.0, 1.0));
        let ami = ConfusionMatrix::new(26, 17, 1, 1);
        assert_eq!(ami.accuracy(), 43.0 / 45.0);
        assert_eq!(ami.recall(), 26.0 / 27.0);
        assert_eq!(ami.precision(), 26.0 / 27.0);
        assert_eq!(ami.f1(), ami.recall());
    }

    #[test]
    fn confusion_tally() {
        let y = [1, 1, 0, 0, 1];
        assert_eq!(confusion(&y, &y).unwrap(), ConfusionMatrix::new(3, 2, 0, 0));
        assert_eq!(confusion(&y, &[0, 1, 1, 0, 1]).unwrap(), ConfusionMatrix::new(2, 1, 1, 1));
        assert!(confusion(&y, &[1]).is_err());
    }

    #[test]
    fn zero_denominators() {
        let cm = ConfusionMatrix::new(0, 5, 0, 3);
        assert_eq!(cm.precision(), 0.0);
        assert_eq!(cm.f1(), 0.0);
        assert_eq!(ConfusionMatrix::default().accuracy(), 0.0);
    }

    #[test]
    fn log_loss_values() {
        assert!((log_loss(&[1, 0], &[0.5, 0.5]).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((log_loss(&[1], &[0.25]).unwrap() - 4f64.ln()).abs() < 1e-15);
        assert!(log_loss(&[1, 0], &[1.0, 0.0]).unwrap() < 1e-14);
        assert!(log_loss(&[1], &[0.0]).unwrap().is_finite());
        assert!(matches!(log_loss(&[], &[]), Err(EvalError::Empty)));
        assert!(log_loss(&[1], &[1.5]).is_err());
    }

    #[test]
    fn roc_examples() {
        let y = [1, 0, 1, 0];
        let ranked = roc_curve(&y, &[0.9, 0.1, 0.8, 0.2]).unwrap();
        assert_eq!(auc(&ranked), 1.0);
        let anti = roc_curve(&y, &[0.1, 0.9, 0.2, 0.8]).unwrap();
        assert_eq!(auc(&anti), 0.0);
        let mixed = roc_curve(&y, &[0.9, 0.8, 0.7, 0.6]).unwrap();
        assert_eq!(auc(&mixed), 0.75);
        let tied = roc_curve(&y, &[0.5; 4]).unwrap();
        assert_eq!(tied.len(), 2);
        assert_eq!(auc(&tied), 0.5);
        assert!(matches!(roc_curve(&[1, 1], &[0.2, 0.3]), Err(EvalError::SingleClass)));
    }

    #[test]
    fn majority_constant_model() {
        let y: Vec<u8> = (0..10).map(|i| u8::from(i < 6)).collect();
        let r = report_from_proba(&y, &[0.6; 10], Phase::Test).unwrap();
        assert_eq!(r.accuracy, 0.6);
        assert_eq!(r.recall, 1.0);
        assert_eq!(r.precision, 0.6);
        assert_eq!(r.auc, Some(0.5));
    }

    #[test]
    fn confident_exact_model() {
        let y = [1, 0, 1, 1, 0];
        let p: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
        let r = report_from_proba(&y, &p, Phase::Train).unwrap();
        assert_eq!((r.accuracy, r.recall, r.precision, r.f1, r.auc), (1.0, 1.0, 1.0, 1.0, Some(1.0)));
        assert!(r.log_loss < 1e-14);
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["confusion"]["fn"], 0);
        assert_eq!(json["phase"], "train");
    }

    #[test]
    fn single_class_report_has_no_auc() {
        let r = report_from_proba(&[1, 1], &[0.7, 0.9], Phase::Test).unwrap();
        assert_eq!(r.auc, None);
        assert!(r.roc_points.is_empty());
    }

    #[test]
    fn roc_csv_and_table() {
        let points = roc_curve(&[1, 0], &[0.8, 0.3]).unwrap();
        let mut buf = Vec::new();
        write_roc_csv(&mut buf, &points).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("threshold,fpr,tpr"));
        assert_eq!(text.lines().count(), 4);
        let r = report_from_proba(&[1, 0], &[0.8, 0.3], Phase::Test).unwrap();
        let table = render_table(&[("SVM".into(), &r)]);
        assert!(table.lines().nth(1).unwrap().starts_with("SVM"));
    }

    proptest! {
        #[test]
        fn auc_equals_concordance(
            pairs in proptest::collection::vec((0u8..2, 0u32..20), 2..60)
        ) {
            let y: Vec<u8> = pairs.iter().map(|p| p.0).collect();
            prop_assume!(y.contains(&0) && y.contains(&1));
            let s: Vec<f64> = pairs.iter().map(|p| f64::from(p.1) / 20.0).collect();
            let points = roc_curve(&y, &s).unwrap();
            prop_assert!((auc(&points) - concordance(&y, &s)).abs() < 1e-12);
            prop_assert_eq!((points[0].fpr, points[0].tpr), (0.0, 0.0));
            let last = points.last().unwrap();
            prop_assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
            for w in points.windows(2) {
                prop_assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
            }
        }

        #[test]
        fn f1_collapses_when_precision_equals_recall(tp in 0usize..50, miss in 0usize..50, tn in 0usize..50) {
            let cm = ConfusionMatrix::new(tp, tn, miss, miss);
            prop_assert!((cm.f1() - cm.precision()).abs() < 1e-15);
            prop_assert!((cm.f1() - cm.recall()).abs() < 1e-15);
        }
    }
}

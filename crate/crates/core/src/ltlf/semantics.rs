use super::formula::{Formula, Trace};
use super::LtlfError;

/// Decides `t ⊨ f` with the position-indexed finite-trace semantics.
///
/// Each subformula is evaluated to a truth vector over positions using the
/// quantifier definitions directly (no expansion laws), so this stays
/// independent of the progression rules it is used to check.
pub fn evaluate(f: &Formula, t: &Trace) -> Result<bool, LtlfError> {
    if t.is_empty() {
        return Err(LtlfError::EmptyTrace);
    }
    Ok(truth_vector(f, t)[0])
}

fn truth_vector(f: &Formula, t: &Trace) -> Vec<bool> {
    let n = t.len();
    match f {
        Formula::True => vec![true; n],
        Formula::False => vec![false; n],
        // only the empty residual satisfies End; every real position is nonempty
        Formula::End => vec![false; n],
        Formula::Atom(p) => t.iter().map(|s| s.contains(p)).collect(),
        Formula::Not(a) => truth_vector(a, t).into_iter().map(|v| !v).collect(),
        Formula::And(a, b) => {
            let (x, y) = (truth_vector(a, t), truth_vector(b, t));
            x.iter().zip(&y).map(|(p, q)| *p && *q).collect()
        }
        Formula::Or(a, b) => {
            let (x, y) = (truth_vector(a, t), truth_vector(b, t));
            x.iter().zip(&y).map(|(p, q)| *p || *q).collect()
        }
        Formula::Next(a) => {
            let x = truth_vector(a, t);
            (0..n).map(|i| i + 1 < n && x[i + 1]).collect()
        }
        Formula::WeakNext(a) => {
            let x = truth_vector(a, t);
            (0..n).map(|i| i + 1 == n || x[i + 1]).collect()
        }
        Formula::Until(a, b) => {
            let (x, y) = (truth_vector(a, t), truth_vector(b, t));
            (0..n)
                .map(|i| (i..n).any(|k| y[k] && (i..k).all(|j| x[j])))
                .collect()
        }
        Formula::Release(a, b) => {
            let (x, y) = (truth_vector(a, t), truth_vector(b, t));
            (0..n)
                .map(|i| (i..n).all(|k| y[k] || (i..k).any(|j| x[j])))
                .collect()
        }
    }
}

/// Truth value of a residual formula on the empty word: atoms, strong next
/// and until are false; weak next, release and `End` are true.
pub fn holds_on_empty(f: &Formula) -> bool {
    match f {
        Formula::True | Formula::End | Formula::WeakNext(_) | Formula::Release(..) => true,
        Formula::False | Formula::Atom(_) | Formula::Next(_) | Formula::Until(..) => false,
        Formula::Not(a) => !holds_on_empty(a),
        Formula::And(a, b) => holds_on_empty(a) && holds_on_empty(b),
        Formula::Or(a, b) => holds_on_empty(a) || holds_on_empty(b),
    }
}

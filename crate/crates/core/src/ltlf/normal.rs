use super::formula::Formula;
use super::semantics::holds_on_empty;

/// Negation normal form: negations only directly above atoms (or `End`).
pub fn to_nnf(f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) | Formula::End => f.clone(),
        Formula::Not(inner) => negate(inner),
        Formula::And(a, b) => Formula::and(to_nnf(a), to_nnf(b)),
        Formula::Or(a, b) => Formula::or(to_nnf(a), to_nnf(b)),
        Formula::Next(a) => Formula::next(to_nnf(a)),
        Formula::WeakNext(a) => Formula::weak_next(to_nnf(a)),
        Formula::Until(a, b) => Formula::until(to_nnf(a), to_nnf(b)),
        Formula::Release(a, b) => Formula::release(to_nnf(a), to_nnf(b)),
    }
}

/// NNF of `¬f`.
fn negate(f: &Formula) -> Formula {
    match f {
        Formula::True => Formula::False,
        Formula::False => Formula::True,
        Formula::Atom(_) | Formula::End => Formula::not(f.clone()),
        Formula::Not(a) => to_nnf(a),
        Formula::And(a, b) => Formula::or(negate(a), negate(b)),
        Formula::Or(a, b) => Formula::and(negate(a), negate(b)),
        Formula::Next(a) => Formula::weak_next(negate(a)),
        Formula::WeakNext(a) => Formula::next(negate(a)),
        Formula::Until(a, b) => Formula::release(negate(a), negate(b)),
        Formula::Release(a, b) => Formula::until(negate(a), negate(b)),
    }
}

/// Deterministic simplified form used as the DFA state key.
///
/// The formula is put in negation normal form; every Boolean layer is then
/// rewritten as a disjunction of conjunctions of literals, where a literal
/// is an atom, `End`, a negation of either, or a temporal formula with
/// canonical arguments. Clauses with complementary literals are dropped,
/// clauses subsumed by a smaller clause are absorbed, and `End`/`¬End`
/// literals are removed or resolved whenever the empty-word value of their
/// siblings already decides them. Literals and clauses are sorted by the
/// `Formula` order and rebuilt right-nested.
///
/// Because residuals are Boolean combinations over a finite literal set,
/// progression reaches only finitely many canonical forms.
pub fn canonicalize(f: &Formula) -> Formula {
    canon(&to_nnf(f))
}

fn canon(f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) | Formula::End => f.clone(),
        Formula::Not(a) => match canon(a) {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            lit @ (Formula::Atom(_) | Formula::End) => Formula::not(lit),
            Formula::Not(inner) => *inner,
            other => canon(&negate(&other)),
        },
        Formula::And(..) | Formula::Or(..) => rebuild(dnf(f)),
        Formula::Next(a) => Formula::next(canon(a)),
        Formula::WeakNext(a) => Formula::weak_next(canon(a)),
        Formula::Until(a, b) => Formula::until(canon(a), canon(b)),
        Formula::Release(a, b) => Formula::release(canon(a), canon(b)),
    }
}

/// A conjunction of literals, sorted and deduplicated.
type Clause = Vec<Formula>;

/// Simplified clause list; empty means false, `[[]]` means true.
fn dnf(f: &Formula) -> Vec<Clause> {
    match f {
        Formula::Or(a, b) => {
            let mut out = dnf(a);
            out.extend(dnf(b));
            simplify(out)
        }
        Formula::And(a, b) => {
            let (l, r) = (dnf(a), dnf(b));
            let mut out = Vec::with_capacity(l.len() * r.len());
            for x in &l {
                for y in &r {
                    out.push(x.iter().chain(y).cloned().collect());
                }
            }
            simplify(out)
        }
        _ => match canon(f) {
            Formula::True => vec![vec![]],
            Formula::False => vec![],
            c @ (Formula::And(..) | Formula::Or(..)) => dnf(&c),
            lit => vec![vec![lit]],
        },
    }
}

fn eps_all(lits: &[Formula]) -> bool {
    lits.iter().all(holds_on_empty)
}

/// Normalizes one clause; `None` when it is unsatisfiable.
fn simplify_clause(mut c: Clause) -> Option<Clause> {
    c.sort();
    c.dedup();
    let complement = c.iter().any(|o| match o {
        Formula::Not(inner) => c.binary_search(inner).is_ok(),
        _ => false,
    });
    if complement {
        return None;
    }
    let not_end = Formula::not(Formula::End);
    if let Ok(i) = c.binary_search(&Formula::End) {
        // End ∧ φ: false on nonempty words, φ's empty-word value otherwise
        c.remove(i);
        return eps_all(&c).then(|| vec![Formula::End]);
    }
    if let Ok(i) = c.binary_search(&not_end) {
        // a sibling false on the empty word makes ¬End redundant
        if c.iter().any(|o| *o != not_end && !holds_on_empty(o)) {
            c.remove(i);
        }
    }
    Some(c)
}

fn simplify(clauses: Vec<Clause>) -> Vec<Clause> {
    let mut cs: Vec<Clause> = clauses.into_iter().filter_map(simplify_clause).collect();
    cs.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    cs.dedup();
    if cs.first().is_some_and(|c| c.is_empty()) {
        return vec![vec![]];
    }
    // absorption: drop clauses that contain a smaller one
    let mut kept: Vec<Clause> = Vec::with_capacity(cs.len());
    for c in cs {
        if !kept.iter().any(|k| k.iter().all(|l| c.binary_search(l).is_ok())) {
            kept.push(c);
        }
    }
    let units: Vec<&Formula> = kept.iter().filter(|c| c.len() == 1).map(|c| &c[0]).collect();
    let tautology = units.iter().any(|u| match u {
        Formula::Not(inner) => units.contains(&&**inner),
        _ => false,
    });
    if tautology {
        return vec![vec![]];
    }
    let end = vec![Formula::End];
    let not_end = vec![Formula::not(Formula::End)];
    let other_eps = |skip: &Clause| kept.iter().any(|c| c != skip && eps_all(c));
    if kept.contains(&not_end) {
        // ¬End ∨ φ: true on nonempty words, φ's empty-word value otherwise
        return if other_eps(&not_end) { vec![vec![]] } else { vec![not_end] };
    }
    if kept.contains(&end) && other_eps(&end) {
        kept.retain(|c| *c != end);
    }
    kept.sort();
    kept
}

fn rebuild(clauses: Vec<Clause>) -> Formula {
    let nest = |items: Vec<Formula>, conj: bool, unit: Formula| {
        let mut it = items.into_iter().rev();
        let Some(mut acc) = it.next() else {
            return unit;
        };
        for o in it {
            acc = if conj { Formula::and(o, acc) } else { Formula::or(o, acc) };
        }
        acc
    };
    let terms = clauses.into_iter().map(|c| nest(c, true, Formula::True)).collect();
    nest(terms, false, Formula::False)
}

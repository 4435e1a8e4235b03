use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use super::LtlfError;

const RESERVED: &[&str] = &["X", "N", "F", "G", "U", "R", "true", "false"];

/// An atomic proposition name.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prop(Arc<str>);

impl Prop {
    /// Builds a proposition, checking the identifier rules (leading ASCII
    /// letter, then letters, digits or underscores; keywords are rejected).
    pub fn new(name: &str) -> Result<Self, LtlfError> {
        if !is_identifier(name) || RESERVED.contains(&name) {
            return Err(LtlfError::InvalidPropName(name.to_string()));
        }
        Ok(Prop(Arc::from(name)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Prop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub(crate) fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// The declared atomic propositions, in declaration order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PropSet {
    props: Vec<Prop>,
}

impl PropSet {
    pub fn new<S: AsRef<str>>(names: impl IntoIterator<Item = S>) -> Result<Self, LtlfError> {
        let mut props: Vec<Prop> = Vec::new();
        for name in names {
            let p = Prop::new(name.as_ref())?;
            if props.contains(&p) {
                return Err(LtlfError::DuplicateProp(p.to_string()));
            }
            props.push(p);
        }
        Ok(PropSet { props })
    }

    pub fn len(&self) -> usize {
        self.props.len()
    }

    pub fn is_empty(&self) -> bool {
        self.props.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Prop> {
        self.props.iter()
    }

    pub fn get(&self, name: &str) -> Option<&Prop> {
        self.props.iter().find(|p| p.as_str() == name)
    }

    pub fn contains(&self, p: &Prop) -> bool {
        self.props.contains(p)
    }

    pub fn index_of(&self, p: &Prop) -> Option<usize> {
        self.props.iter().position(|q| q == p)
    }

    pub fn as_slice(&self) -> &[Prop] {
        &self.props
    }
}

/// The set of propositions true at one instant.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interpretation(BTreeSet<Prop>);

impl Interpretation {
    pub fn new() -> Self {
        Self::default()
    }

    /// Resolves names against `props`; unknown names are an error.
    pub fn from_names<S: AsRef<str>>(
        props: &PropSet,
        names: impl IntoIterator<Item = S>,
    ) -> Result<Self, LtlfError> {
        let mut set = BTreeSet::new();
        for n in names {
            let n = n.as_ref();
            let p = props
                .get(n)
                .ok_or_else(|| LtlfError::UnknownAtom(n.to_string()))?;
            set.insert(p.clone());
        }
        Ok(Interpretation(set))
    }

    pub fn insert(&mut self, p: Prop) {
        self.0.insert(p);
    }

    pub fn contains(&self, p: &Prop) -> bool {
        self.0.contains(p)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Prop> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Keeps only the propositions listed in `atoms`.
    pub fn restrict(&self, atoms: &[Prop]) -> Interpretation {
        Interpretation(atoms.iter().filter(|a| self.0.contains(*a)).cloned().collect())
    }
}

impl FromIterator<Prop> for Interpretation {
    fn from_iter<I: IntoIterator<Item = Prop>>(iter: I) -> Self {
        Interpretation(iter.into_iter().collect())
    }
}

impl fmt::Display for Interpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str("}")
    }
}

/// A finite sequence of interpretations.
pub type Trace = Vec<Interpretation>;

/// LTLf abstract syntax.
///
/// Variant order is significant: the derived `Ord` is the total order used
/// to sort commutative operands (kind tag, then children, then atom name).
/// `End` holds only on the empty residual word and is never produced by the
/// parser; it exists for progression.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom(Prop),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    WeakNext(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Release(Box<Formula>, Box<Formula>),
    End,
}

impl Formula {
    pub fn atom(p: Prop) -> Formula {
        Formula::Atom(p)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn next(f: Formula) -> Formula {
        Formula::Next(Box::new(f))
    }

    pub fn weak_next(f: Formula) -> Formula {
        Formula::WeakNext(Box::new(f))
    }

    pub fn until(a: Formula, b: Formula) -> Formula {
        Formula::Until(Box::new(a), Box::new(b))
    }

    pub fn release(a: Formula, b: Formula) -> Formula {
        Formula::Release(Box::new(a), Box::new(b))
    }

    /// `true U f`
    pub fn eventually(f: Formula) -> Formula {
        Formula::until(Formula::True, f)
    }

    /// `false R f`
    pub fn always(f: Formula) -> Formula {
        Formula::release(Formula::False, f)
    }

    /// Conjunction of all items; `True` when empty.
    pub fn conjunction(items: impl IntoIterator<Item = Formula>) -> Formula {
        let mut items: Vec<Formula> = items.into_iter().collect();
        let Some(mut acc) = items.pop() else {
            return Formula::True;
        };
        while let Some(f) = items.pop() {
            acc = Formula::and(f, acc);
        }
        acc
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) | Formula::End => 0,
            Formula::Not(a) | Formula::Next(a) | Formula::WeakNext(a) => 1 + a.depth(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b) | Formula::Release(a, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }

    pub fn contains_end(&self) -> bool {
        match self {
            Formula::End => true,
            Formula::True | Formula::False | Formula::Atom(_) => false,
            Formula::Not(a) | Formula::Next(a) | Formula::WeakNext(a) => a.contains_end(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b) | Formula::Release(a, b) => {
                a.contains_end() || b.contains_end()
            }
        }
    }

    /// Atoms occurring in the formula, sorted and deduplicated.
    pub fn atoms(&self) -> Vec<Prop> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out.into_iter().collect()
    }

    fn collect_atoms(&self, out: &mut BTreeSet<Prop>) {
        match self {
            Formula::Atom(p) => {
                out.insert(p.clone());
            }
            Formula::True | Formula::False | Formula::End => {}
            Formula::Not(a) | Formula::Next(a) | Formula::WeakNext(a) => a.collect_atoms(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b) | Formula::Release(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }
}

/// Prints in the concrete grammar. Binary nodes are always parenthesized so
/// that parsing the output gives back the same tree. `End` prints as `$end`,
/// which the parser rejects.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::End => f.write_str("$end"),
            Formula::Atom(p) => write!(f, "{p}"),
            Formula::Not(a) => write!(f, "!{a}"),
            Formula::Next(a) => write!(f, "X {a}"),
            Formula::WeakNext(a) => write!(f, "N {a}"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Until(a, b) => write!(f, "({a} U {b})"),
            Formula::Release(a, b) => write!(f, "({a} R {b})"),
        }
    }
}

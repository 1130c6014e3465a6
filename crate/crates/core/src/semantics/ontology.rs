//! Forward chaining of range-restricted inference rules over ground facts.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use super::SemanticsError;

/// A term in a rule atom: a named variable or a constant symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(name.to_string())
    }

    pub fn constant(name: &str) -> Self {
        Term::Const(name.to_string())
    }
}

/// A predicate applied to terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub predicate: String,
    pub terms: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: &str, terms: Vec<Term>) -> Self {
        Self {
            predicate: predicate.to_string(),
            terms,
        }
    }
}

/// A ground fact. Ordered so fact sets iterate deterministically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Fact {
    pub predicate: String,
    pub args: Vec<String>,
}

impl Fact {
    pub fn new(predicate: &str, args: &[&str]) -> Self {
        Self {
            predicate: predicate.to_string(),
            args: args.iter().map(|a| a.to_string()).collect(),
        }
    }
}

/// `head :- body`. Every head variable must occur in the body, so any
/// satisfied body grounds the head completely.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OntologyRule {
    head: Atom,
    body: Vec<Atom>,
}

impl OntologyRule {
    pub fn new(head: Atom, body: Vec<Atom>) -> Result<Self, SemanticsError> {
        let mut body_vars = BTreeSet::new();
        for atom in &body {
            for term in &atom.terms {
                if let Term::Var(v) = term {
                    body_vars.insert(v.clone());
                }
            }
        }
        for term in &head.terms {
            if let Term::Var(v) = term {
                if !body_vars.contains(v) {
                    return Err(SemanticsError::NotRangeRestricted {
                        variable: v.clone(),
                    });
                }
            }
        }
        Ok(Self { head, body })
    }

    pub fn head(&self) -> &Atom {
        &self.head
    }

    pub fn body(&self) -> &[Atom] {
        &self.body
    }
}

type Substitution = BTreeMap<String, String>;

fn unify(atom: &Atom, fact: &Fact, subst: &Substitution) -> Option<Substitution> {
    if atom.predicate != fact.predicate || atom.terms.len() != fact.args.len() {
        return None;
    }
    let mut out = subst.clone();
    for (term, arg) in atom.terms.iter().zip(&fact.args) {
        match term {
            Term::Const(c) => {
                if c != arg {
                    return None;
                }
            }
            Term::Var(v) => match out.get(v) {
                Some(bound) if bound != arg => return None,
                Some(_) => {}
                None => {
                    out.insert(v.clone(), arg.clone());
                }
            },
        }
    }
    Some(out)
}

fn ground_head(head: &Atom, subst: &Substitution) -> Fact {
    Fact {
        predicate: head.predicate.clone(),
        args: head
            .terms
            .iter()
            .map(|t| match t {
                Term::Const(c) => c.clone(),
                Term::Var(v) => subst
                    .get(v)
                    .expect("range restriction grounds every head variable")
                    .clone(),
            })
            .collect(),
    }
}

fn match_body(
    body: &[Atom],
    facts: &BTreeSet<Fact>,
    subst: Substitution,
    out: &mut Vec<Substitution>,
) {
    match body.split_first() {
        None => out.push(subst),
        Some((first, rest)) => {
            for fact in facts {
                if let Some(next) = unify(first, fact, &subst) {
                    match_body(rest, facts, next, out);
                }
            }
        }
    }
}

/// Saturates the fact set under the rules.
///
/// Plain naive iteration to a fixpoint: rules have no function symbols, so
/// every derivable fact draws its arguments from constants already present
/// and the closure is finite. Ordered sets make the result independent of
/// rule and fact order.
pub fn forward_chain(rules: &[OntologyRule], base: &BTreeSet<Fact>) -> BTreeSet<Fact> {
    let mut facts = base.clone();
    loop {
        let mut fresh: Vec<Fact> = Vec::new();
        for rule in rules {
            let mut substs = Vec::new();
            match_body(&rule.body, &facts, Substitution::new(), &mut substs);
            for s in substs {
                let f = ground_head(&rule.head, &s);
                if !facts.contains(&f) {
                    fresh.push(f);
                }
            }
        }
        if fresh.is_empty() {
            return facts;
        }
        facts.extend(fresh);
    }
}

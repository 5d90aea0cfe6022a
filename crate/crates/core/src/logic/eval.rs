//! Semi-naive bottom-up evaluation, stratum by stratum.
//!
//! Rounds are numbered globally: an atom derived in round `k` has a rule
//! instance whose body atoms all have depth `< k` and at least one has depth
//! exactly `k - 1`. This makes the recorded depth the first round at which a
//! naive evaluation would derive the atom.

use std::collections::{BTreeMap, HashMap};

use log::trace;

use super::{stratify, LogicError, Literal, Polarity, Program, Rule, Term};

/// Least model with the minimal derivation round of every atom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    atoms: BTreeMap<Literal, u32>,
}

impl Model {
    pub fn contains(&self, literal: &Literal) -> bool {
        self.atoms.contains_key(literal)
    }

    pub fn depth(&self, literal: &Literal) -> Option<u32> {
        self.atoms.get(literal).copied()
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Literal> {
        self.atoms.keys()
    }

    pub fn depths(&self) -> &BTreeMap<Literal, u32> {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    /// Closed-world truth of a ground literal in this model.
    pub fn holds(&self, query: &Literal) -> bool {
        match query.polarity {
            Polarity::Positive => self.contains(query),
            Polarity::Negative => self.contains(query) || !self.contains(&query.twin()),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

#[derive(Default)]
struct Store {
    depth: HashMap<Literal, u32>,
    by_predicate: HashMap<(Polarity, String), Vec<(Literal, u32)>>,
    max_depth: u32,
}

impl Store {
    fn insert(&mut self, literal: Literal, depth: u32) -> Result<(), LogicError> {
        if self.depth.contains_key(&literal) {
            return Ok(());
        }
        let twin = literal.twin();
        if self.depth.contains_key(&twin) {
            let positive = if literal.is_negative() { twin } else { literal };
            return Err(LogicError::Inconsistency { literal: positive });
        }
        self.max_depth = self.max_depth.max(depth);
        self.by_predicate
            .entry((literal.polarity, literal.predicate.clone()))
            .or_default()
            .push((literal.clone(), depth));
        self.depth.insert(literal, depth);
        Ok(())
    }

    fn candidates(&self, lit: &Literal) -> &[(Literal, u32)] {
        self.by_predicate
            .get(&(lit.polarity, lit.predicate.clone()))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

type Bindings<'a> = Vec<(&'a str, &'a str)>;

fn lookup<'a>(bindings: &Bindings<'a>, var: &str) -> Option<&'a str> {
    bindings.iter().find(|(v, _)| *v == var).map(|(_, c)| *c)
}

/// Extends `bindings` so that `pattern` matches `atom`; returns how many
/// bindings were pushed, or `None` on mismatch (bindings left untouched).
fn unify<'a>(pattern: &'a Literal, atom: &'a Literal, bindings: &mut Bindings<'a>) -> Option<usize> {
    let start = bindings.len();
    for (p, a) in pattern.args.iter().zip(&atom.args) {
        let value = a.name();
        let ok = match p {
            Term::Constant(c) => c == value,
            Term::Variable(v) => match lookup(bindings, v) {
                Some(bound) => bound == value,
                None => {
                    bindings.push((v, value));
                    true
                }
            },
        };
        if !ok {
            bindings.truncate(start);
            return None;
        }
    }
    Some(bindings.len() - start)
}

fn instantiate(head: &Literal, bindings: &Bindings<'_>) -> Literal {
    let args = head
        .args
        .iter()
        .map(|t| match t {
            Term::Variable(v) => Term::Constant(
                lookup(bindings, v)
                    .expect("safe rule binds every head variable")
                    .to_string(),
            ),
            c => c.clone(),
        })
        .collect();
    Literal {
        predicate: head.predicate.clone(),
        args,
        polarity: head.polarity,
    }
}

/// Depth window for body position `j` when `delta` is the position that must
/// match an atom from the previous round.
fn admits(j: usize, delta: usize, depth: u32, previous: u32) -> bool {
    use std::cmp::Ordering::*;
    match j.cmp(&delta) {
        Less => depth < previous,
        Equal => depth == previous,
        Greater => depth <= previous,
    }
}

fn join<'a>(
    rule: &'a Rule,
    store: &'a Store,
    delta: usize,
    previous: u32,
    j: usize,
    bindings: &mut Bindings<'a>,
    out: &mut Vec<Literal>,
) {
    if j == rule.body.len() {
        out.push(instantiate(&rule.head, bindings));
        return;
    }
    let pattern = &rule.body[j];
    for (atom, depth) in store.candidates(pattern) {
        if !admits(j, delta, *depth, previous) {
            continue;
        }
        if let Some(pushed) = unify(pattern, atom, bindings) {
            join(rule, store, delta, previous, j + 1, bindings, out);
            let len = bindings.len();
            bindings.truncate(len - pushed);
        }
    }
}

/// Computes the least model of a stratified program.
pub fn evaluate(program: &Program) -> Result<Model, LogicError> {
    let strata = stratify(program)?;
    let mut store = Store::default();
    for fact in program.facts() {
        store.insert(fact.clone(), 0)?;
    }

    for stratum in &strata {
        if stratum.rules.is_empty() {
            continue;
        }
        let rules: Vec<&Rule> = stratum.rules.iter().map(|&i| &program.rules()[i]).collect();
        let mut round = 1u32;
        while round - 1 <= store.max_depth {
            let previous = round - 1;
            let mut derived = Vec::new();
            for rule in &rules {
                for delta in 0..rule.body.len() {
                    let mut bindings = Vec::new();
                    join(rule, &store, delta, previous, 0, &mut bindings, &mut derived);
                }
            }
            for lit in derived {
                store.insert(lit, round)?;
            }
            round += 1;
        }
        trace!(
            "stratum {:?} settled after {} rounds",
            stratum.predicates,
            round - 1
        );
    }

    Ok(Model {
        atoms: store.depth.into_iter().collect(),
    })
}

/// TRUE/FALSE answer to the program's query.
///
/// A negative query holds when its twin is derived or, by the closed-world
/// assumption, when the positive atom is not derivable.
pub fn answer(program: &Program) -> Result<bool, LogicError> {
    Ok(evaluate(program)?.holds(program.query()))
}

pub fn proof_depth(model: &Model, literal: &Literal) -> Option<u32> {
    model.depth(literal)
}

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use chatlogic::logic::{Literal, Polarity, Program, Rule, Term};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Bounds for random programs.
#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub max_constants: usize,
    pub max_predicates: usize,
    pub max_rules: usize,
    pub max_facts: usize,
    /// Allow rules concluding negative literals.
    pub negative_heads: bool,
    /// Allow negative facts on predicates some rule concludes.
    pub negative_derived_facts: bool,
    pub variables: &'static [&'static str],
}

pub const ENGINE: Shape = Shape {
    max_constants: 8,
    max_predicates: 6,
    max_rules: 12,
    max_facts: 12,
    negative_heads: true,
    negative_derived_facts: true,
    variables: &["X", "Y", "Z"],
};

/// The benchmark shape: conclusions are positive and only underived
/// attributes carry stated negations.
pub const BENCHMARK: Shape = Shape {
    negative_heads: false,
    negative_derived_facts: false,
    ..ENGINE
};

fn lit(polarity: Polarity, predicate: &str, args: Vec<Term>) -> Literal {
    Literal {
        predicate: predicate.to_string(),
        args,
        polarity,
    }
}

fn c(name: &str) -> Term {
    Term::Constant(name.to_string())
}

fn v(name: &str) -> Term {
    Term::Variable(name.to_string())
}

/// A stratified, safe program: positive body literals refer to predicates
/// with an index at most the head's, negative ones (and every body of a
/// negative-headed rule) to strictly smaller indices.
pub fn random_program(rng: &mut ChaCha8Rng, shape: Shape) -> Program {
    let constants: Vec<String> = (0..rng.gen_range(1..=shape.max_constants)).map(|i| format!("c{i}")).collect();
    let predicates: Vec<(String, usize)> = (0..rng.gen_range(1..=shape.max_predicates))
        .map(|i| (format!("p{i}"), rng.gen_range(1..=2)))
        .collect();
    let constant = |rng: &mut ChaCha8Rng| c(constants.choose(rng).unwrap());

    let mut rules = Vec::new();
    for _ in 0..rng.gen_range(0..=shape.max_rules) {
        let h = rng.gen_range(0..predicates.len());
        let negative_head = shape.negative_heads && h > 0 && rng.gen_bool(0.15);
        let mut body = Vec::new();
        let mut bound: Vec<&str> = Vec::new();
        for _ in 0..rng.gen_range(1..=3) {
            let b = if negative_head { rng.gen_range(0..h) } else { rng.gen_range(0..=h) };
            let negative = b < h && rng.gen_bool(0.25);
            let (name, arity) = &predicates[b];
            let args = (0..*arity)
                .map(|_| {
                    if rng.gen_bool(0.2) {
                        constant(rng)
                    } else {
                        let var = *shape.variables.choose(rng).unwrap();
                        bound.push(var);
                        v(var)
                    }
                })
                .collect();
            let polarity = if negative { Polarity::Negative } else { Polarity::Positive };
            body.push(lit(polarity, name, args));
        }
        let (name, arity) = &predicates[h];
        let head_args = (0..*arity)
            .map(|_| {
                if bound.is_empty() || rng.gen_bool(0.15) {
                    constant(rng)
                } else {
                    v(bound.choose(rng).unwrap())
                }
            })
            .collect();
        let polarity = if negative_head { Polarity::Negative } else { Polarity::Positive };
        rules.push(Rule::new(lit(polarity, name, head_args), body).unwrap());
    }

    let derived: BTreeSet<&str> = rules.iter().map(|r| r.head.predicate.as_str()).collect();
    let ground = |rng: &mut ChaCha8Rng, (name, arity): &(String, usize), polarity| {
        lit(polarity, name, (0..*arity).map(|_| constant(rng)).collect())
    };
    let mut facts = BTreeSet::new();
    for _ in 0..rng.gen_range(1..=shape.max_facts) {
        let p = predicates.choose(rng).unwrap();
        let may_negate = shape.negative_derived_facts || !derived.contains(p.0.as_str());
        let polarity = if may_negate && rng.gen_bool(0.15) { Polarity::Negative } else { Polarity::Positive };
        let fact = ground(rng, p, polarity);
        if !facts.contains(&fact.twin()) {
            facts.insert(fact);
        }
    }
    let polarity = if rng.gen_bool(0.3) { Polarity::Negative } else { Polarity::Positive };
    let p = predicates.choose(rng).unwrap();
    let query = ground(rng, p, polarity);
    Program::new(facts, rules, query).unwrap()
}

const NAMES: &[&str] = &["bob", "anne", "dave", "erin", "fiona", "dog", "cat", "bear", "tiger", "mouse"];
const ATTRIBUTES: &[&str] = &["big", "kind", "quiet", "red", "rough", "round", "smart", "young", "cold", "nice"];
const VERBS: &[&str] = &["like", "chase", "visit", "need", "eat"];

/// Programs inside the sentence grammar: one rule variable, objects that are
/// names or the variable itself.
pub fn nl_program(rng: &mut ChaCha8Rng) -> Program {
    let n = rng.gen_range(1..=5);
    let names: Vec<&str> = NAMES.choose_multiple(rng, n).copied().collect();
    let n = rng.gen_range(1..=5);
    let mut predicates: Vec<(&str, usize)> = ATTRIBUTES
        .choose_multiple(rng, n)
        .map(|a| (*a, 1))
        .collect();
    let n = rng.gen_range(0..=2);
    predicates.extend(VERBS.choose_multiple(rng, n).map(|v| (*v, 2)));
    let literal = |rng: &mut ChaCha8Rng, variable: bool| {
        let (name, arity) = *predicates.choose(rng).unwrap();
        let subject = if variable { v("X") } else { c(names.choose(rng).unwrap()) };
        let mut args = vec![subject];
        if arity == 2 {
            args.push(if variable && rng.gen_bool(0.2) { v("X") } else { c(names.choose(rng).unwrap()) });
        }
        let polarity = if rng.gen_bool(0.25) { Polarity::Negative } else { Polarity::Positive };
        lit(polarity, name, args)
    };

    let mut rules = Vec::new();
    for _ in 0..rng.gen_range(0..=6) {
        let body: Vec<Literal> = (0..rng.gen_range(1..=3))
            .map(|_| {
                let variable = rng.gen_bool(0.85);
                literal(rng, variable)
            })
            .collect();
        let has_variable = body.iter().any(|l| l.args.iter().any(Term::is_variable));
        let variable = has_variable && rng.gen_bool(0.9);
        let head = literal(rng, variable);
        rules.push(Rule::new(head, body).unwrap());
    }
    let mut facts = BTreeSet::new();
    for _ in 0..rng.gen_range(1..=8) {
        let fact = literal(rng, false);
        if !facts.contains(&fact.twin()) {
            facts.insert(fact);
        }
    }
    let query = literal(rng, false);
    Program::new(facts, rules, query).unwrap()
}

fn substitute(literal: &Literal, assignment: &BTreeMap<&str, &str>) -> Literal {
    let args = literal
        .args
        .iter()
        .map(|t| match t {
            Term::Variable(x) => c(assignment[x.as_str()]),
            other => other.clone(),
        })
        .collect();
    lit(literal.polarity, &literal.predicate, args)
}

fn assignments<'a>(variables: &[&'a str], constants: &'a [String]) -> Vec<BTreeMap<&'a str, &'a str>> {
    let mut out = vec![BTreeMap::new()];
    for var in variables {
        out = out
            .into_iter()
            .flat_map(|partial| {
                constants.iter().map(move |k| {
                    let mut next = partial.clone();
                    next.insert(*var, k.as_str());
                    next
                })
            })
            .collect();
    }
    out
}

/// Naive evaluation: every rule instance over every assignment of constants,
/// applied simultaneously round after round. Returns each atom with the first
/// round it appears in, or the first atom found with both polarities.
pub fn naive_fixpoint(program: &Program) -> Result<BTreeMap<Literal, u32>, Literal> {
    let constants: Vec<String> = program.constants().into_iter().collect();
    let mut atoms: BTreeMap<Literal, u32> = program.facts().iter().map(|f| (f.clone(), 0)).collect();
    let instances: Vec<(Literal, Vec<Literal>)> = program
        .rules()
        .iter()
        .flat_map(|rule| {
            let vars: BTreeSet<&str> = rule.body.iter().chain([&rule.head]).flat_map(|l| l.variables()).collect();
            let vars: Vec<&str> = vars.into_iter().collect();
            assignments(&vars, &constants)
                .into_iter()
                .map(|a| (substitute(&rule.head, &a), rule.body.iter().map(|b| substitute(b, &a)).collect()))
                .collect::<Vec<_>>()
        })
        .collect();
    for round in 1.. {
        let fresh: BTreeSet<Literal> = instances
            .iter()
            .filter(|(head, body)| !atoms.contains_key(head) && body.iter().all(|b| atoms.contains_key(b)))
            .map(|(head, _)| head.clone())
            .collect();
        if fresh.is_empty() {
            break;
        }
        for atom in fresh {
            atoms.insert(atom, round);
        }
    }
    match atoms.keys().find(|a| a.polarity == Polarity::Positive && atoms.contains_key(&a.twin())) {
        Some(a) => Err(a.clone()),
        None => Ok(atoms),
    }
}

/// CWA truth of the query in a naive model, spelled out independently.
pub fn naive_answer(model: &BTreeMap<Literal, u32>, query: &Literal) -> bool {
    match query.polarity {
        Polarity::Positive => model.contains_key(query),
        Polarity::Negative => {
            let mut positive = query.clone();
            positive.polarity = Polarity::Positive;
            model.contains_key(query) || !model.contains_key(&positive)
        }
    }
}

/// The natural-language instance whose oracle translation is `program`.
pub fn instance_of(nl: &chatlogic::nl::NlFrontend, program: &Program, id: &str) -> chatlogic::nl::Instance {
    chatlogic::nl::Instance {
        id: id.to_string(),
        facts: program.facts().iter().map(|f| nl.render_fact(f)).collect(),
        rules: program
            .rules()
            .iter()
            .map(|r| nl.render(&chatlogic::nl::Sentence::Rule(r.clone())))
            .collect(),
        question: nl.render_question(program.query()),
        label: None,
        depth: None,
        pattern: Default::default(),
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// Parses every back-translated sentence and reassembles the program.
pub fn reparse(nl: &chatlogic::nl::NlFrontend, sentences: &[String]) -> Program {
    let (question, statements) = sentences.split_last().unwrap();
    let mut facts = Vec::new();
    let mut rules = Vec::new();
    for s in statements {
        match nl.parse_sentence(s).unwrap() {
            chatlogic::nl::Sentence::Fact(f) => facts.push(f),
            chatlogic::nl::Sentence::Rule(r) => rules.push(r),
        }
    }
    let chatlogic::nl::Sentence::Fact(query) = nl.parse_sentence(question).unwrap() else {
        panic!("question {question:?} parsed as a rule")
    };
    Program::new(facts, rules, query).unwrap()
}

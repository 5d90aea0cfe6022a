//! Synthetic instances with a planted derivation chain.
//!
//! Every instance states one meta attribute of its subject and a chain of
//! `depth` rules leading from it to the question attribute. The variants
//! cycle TRUE, FALSE, TRUE, FALSE:
//!
//! * positive chain, query TRUE at exactly `depth` rounds;
//! * the first rule also requires the absence of a second meta attribute,
//!   which only the closed-world supplement provides;
//! * a chain link whose premise the subject never has (FALSE);
//! * the full chain asked as a negative question (FALSE).
//!
//! Distractor facts and rules only ever conclude attributes outside the chain.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::nl::{Instance, Pattern};

const ATTRIBUTES: &[&str] = &[
    "big", "kind", "quiet", "red", "rough", "round", "smart", "young", "cold", "nice", "furry",
    "green", "blue", "white", "strong", "careful", "clever", "gentle", "happy", "heavy", "small",
    "calm", "brave", "lazy", "shy", "wise", "loud", "tall", "fierce", "sleepy",
];

const PEOPLE: &[&str] = &["anne", "bob", "charlie", "dave", "erin", "fiona", "gary", "harry"];

const ANIMALS: &[&str] = &[
    "bear", "cat", "dog", "lion", "mouse", "rabbit", "squirrel", "tiger", "cow", "eagle",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneratorOptions {
    /// Include the variant whose chain needs a closed-world negative premise.
    pub negative_premise: bool,
    /// Distractor rules per instance; distractor facts are one more.
    pub distractors: usize,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        GeneratorOptions {
            negative_premise: true,
            distractors: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Variant {
    Chain,
    NegativePremise,
    BrokenLink,
    NegatedQuestion,
}

struct Voice {
    pattern: Pattern,
}

impl Voice {
    fn subject(&self, entity: &str) -> String {
        match self.pattern {
            Pattern::Animal => format!("The {entity}"),
            _ => {
                let mut c = entity.chars();
                c.next()
                    .map(|f| f.to_uppercase().collect::<String>() + c.as_str())
                    .unwrap_or_default()
            }
        }
    }

    fn object(&self, entity: &str) -> String {
        match self.pattern {
            Pattern::Animal => format!("the {entity}"),
            _ => self.subject(entity),
        }
    }

    fn fact(&self, entity: &str, attribute: &str, negated: bool) -> String {
        let not = if negated { "not " } else { "" };
        format!("{} is {not}{attribute}.", self.subject(entity))
    }

    fn relation(&self, a: &str, verb: &str, b: &str) -> String {
        format!("{} {verb} {}.", self.subject(a), self.object(b))
    }

    fn rule(&self, premise: &str, absent: Option<&str>, conclusion: &str) -> String {
        let (who, pronoun, be) = match self.pattern {
            Pattern::Animal => ("something", "it", "is"),
            _ => ("someone", "they", "are"),
        };
        let extra = absent.map(|a| format!(" and not {a}")).unwrap_or_default();
        format!("If {who} is {premise}{extra} then {pronoun} {be} {conclusion}.")
    }
}

fn one(rng: &mut ChaCha8Rng, seed: u64, index: usize, depth: u32, pattern: Pattern, options: GeneratorOptions) -> Instance {
    let label = index.is_multiple_of(2);
    let variant = match (label, rng.gen_bool(0.5)) {
        (true, true) if options.negative_premise => Variant::NegativePremise,
        (true, _) => Variant::Chain,
        (false, true) => Variant::BrokenLink,
        (false, false) => Variant::NegatedQuestion,
    };
    let voice = Voice { pattern };
    let names = if pattern == Pattern::Animal { ANIMALS } else { PEOPLE };
    let mut entities: Vec<&str> = names.to_vec();
    entities.shuffle(rng);
    let subject = entities[0];
    let others = &entities[1..3];

    let depth = depth as usize;
    let mut attributes: Vec<&str> = ATTRIBUTES.to_vec();
    attributes.shuffle(rng);
    // chain[0] is the stated meta attribute, chain[depth] the question.
    let chain = &attributes[..=depth];
    let absent = attributes[depth + 1];
    let missing = attributes[depth + 2];
    let spare = &attributes[depth + 3..depth + 3 + options.distractors + 1];

    let mut facts = vec![voice.fact(subject, chain[0], false)];
    let mut rules = Vec::new();
    let broken = (variant == Variant::BrokenLink).then(|| rng.gen_range(1..=depth));
    for link in 1..=depth {
        let premise = if broken == Some(link) {
            missing
        } else {
            chain[link - 1]
        };
        let negative = (variant == Variant::NegativePremise && link == 1).then_some(absent);
        rules.push(voice.rule(premise, negative, chain[link]));
    }

    // Distractors: other entities may hold anything off the chain path; the
    // subject only holds spare attributes, which conclude spare attributes.
    for (i, other) in others.iter().enumerate() {
        let attr = if i == 0 { chain[0] } else { missing };
        facts.push(voice.fact(other, attr, false));
    }
    facts.push(voice.fact(subject, spare[0], rng.gen_bool(0.5)));
    let verb = if pattern == Pattern::Animal { "chases" } else { "likes" };
    facts.push(voice.relation(subject, verb, others[0]));
    for i in 0..options.distractors {
        let premise = if i % 2 == 0 { chain[rng.gen_range(0..=depth)] } else { spare[i] };
        rules.push(voice.rule(premise, None, spare[i + 1]));
    }
    facts.shuffle(rng);
    rules.shuffle(rng);

    let question = match variant {
        Variant::NegatedQuestion => voice.fact(subject, chain[depth], true),
        _ => voice.fact(subject, chain[depth], false),
    };
    Instance {
        id: format!("gen-{pattern}-d{depth}-{seed:016x}-{index:05}"),
        facts,
        rules,
        question,
        label: Some(label),
        depth: Some(depth as u32),
        pattern,
    }
}

/// `count` instances at one depth; labels alternate starting with TRUE.
pub fn generate_instances(seed: u64, count: usize, depth: u32, pattern: Pattern) -> Vec<Instance> {
    generate_with(seed, count, depth, pattern, GeneratorOptions::default())
}

pub fn generate_with(
    seed: u64,
    count: usize,
    depth: u32,
    pattern: Pattern,
    options: GeneratorOptions,
) -> Vec<Instance> {
    assert!((2..=5).contains(&depth), "depth must lie in 2..=5, got {depth}");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| one(&mut rng, seed, i, depth, pattern, options))
        .collect()
}
